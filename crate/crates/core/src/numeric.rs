//! Small numerical utilities shared by every module: compensated summation,
//! powers of probabilities close to one, Hoeffding half-widths, seed
//! derivation and the 17-significant-digit real formatting used by all
//! serialized artifacts.

use serde::Serializer;

/// Neumaier (improved Kahan) compensated accumulator.
///
/// The rounding error of the final sum is bounded by `2u|S| + O(n u^2) Σ|x_i|`,
/// independent of the number of terms to first order.
#[derive(Debug, Clone, Copy, Default)]
pub struct NeumaierSum {
    sum: f64,
    compensation: f64,
}

impl NeumaierSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.compensation += (self.sum - t) + x;
        } else {
            self.compensation += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}

impl FromIterator<f64> for NeumaierSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = NeumaierSum::new();
        for x in iter {
            acc.add(x);
        }
        acc
    }
}

/// `(1 - s)^m` computed through `exp(m * ln_1p(-s))`, so that survival
/// probabilities far below machine epsilon still contribute.
pub fn pow_complement(s: f64, m: u64) -> f64 {
    if m == 0 {
        return 1.0;
    }
    if s <= 0.0 {
        return 1.0;
    }
    if s >= 1.0 {
        return 0.0;
    }
    (m as f64 * (-s).ln_1p()).exp()
}

/// `1 - (1 - s)^m` without cancellation.
pub fn one_minus_pow_complement(s: f64, m: u64) -> f64 {
    if m == 0 || s <= 0.0 {
        return 0.0;
    }
    if s >= 1.0 {
        return 1.0;
    }
    -(m as f64 * (-s).ln_1p()).exp_m1()
}

/// Two-sided Hoeffding half-width for the mean of `reps` values in [0,1].
pub fn hoeffding_two_sided(reps: u64, conf: f64) -> f64 {
    ((2.0 / (1.0 - conf)).ln() / (2.0 * reps as f64)).sqrt()
}

/// One-sided Hoeffding half-width for the mean of `reps` values in [0,1].
pub fn hoeffding_one_sided(reps: u64, conf: f64) -> f64 {
    ((1.0 / (1.0 - conf)).ln() / (2.0 * reps as f64)).sqrt()
}

/// SplitMix64 finalizer.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives an independent-looking seed from a base seed and a list of labels.
pub fn derive_seed(base: u64, labels: &[u64]) -> u64 {
    labels.iter().fold(mix64(base), |acc, &l| mix64(acc ^ mix64(l)))
}

/// Formats a real with 17 significant digits, `%.17g` style: fixed notation
/// for decimal exponents in [-5, 17), scientific otherwise, trailing zeros
/// removed. Round-trips every finite `f64`.
pub fn fmt_g17(x: f64) -> String {
    if x == 0.0 {
        return if x.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let sci = format!("{:.16e}", x);
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("exponent");
    if (-5..17).contains(&exp) {
        let decimals = (16 - exp).max(0) as usize;
        let fixed = format!("{:.*}", decimals, x);
        strip_zeros(&fixed)
    } else {
        let m = strip_zeros(mantissa);
        format!("{m}e{exp}")
    }
}

fn strip_zeros(s: &str) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s.to_string()
    }
}

/// `serialize_with` helper emitting a JSON number with 17 significant digits.
pub fn ser_f64<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
    use serde::ser::Error;
    use serde::Serialize;
    if !x.is_finite() {
        return Err(S::Error::custom(format!("non-finite real {x}")));
    }
    let raw = serde_json::value::RawValue::from_string(fmt_g17(*x)).map_err(S::Error::custom)?;
    raw.serialize(s)
}

/// Like [`ser_f64`] for a slice of reals.
pub fn ser_f64_slice<S: Serializer>(xs: &[f64], s: S) -> Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    struct One(f64);
    impl serde::Serialize for One {
        fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
            ser_f64(&self.0, s)
        }
    }
    let mut seq = s.serialize_seq(Some(xs.len()))?;
    for &x in xs {
        seq.serialize_element(&One(x))?;
    }
    seq.end()
}

/// Σ_{k ≥ n} k⁻², exact to rounding for n ≥ 1 (partial sum plus
/// Euler–Maclaurin remainder).
pub fn zeta2_tail(n: u64) -> f64 {
    assert!(n >= 1, "zeta2_tail needs n >= 1");
    const DIRECT: u64 = 64;
    let mut acc = NeumaierSum::new();
    let mut k = n;
    while k < n.saturating_add(DIRECT) {
        acc.add(1.0 / (k as f64 * k as f64));
        k += 1;
    }
    // Σ_{j ≥ k} j⁻² = 1/k + 1/(2k²) + 1/(6k³) - 1/(30k⁵) + ...
    let kf = k as f64;
    acc.add(1.0 / kf + 0.5 / (kf * kf) + 1.0 / (6.0 * kf.powi(3)) - 1.0 / (30.0 * kf.powi(5)));
    acc.value()
}

/// Upper bound on Σ_{k ≥ from} k⁻⁴ via the integral test, valid for `from ≥ 2`.
pub fn quartic_tail_bound(from: u64) -> f64 {
    assert!(from >= 2, "quartic tail bound needs from >= 2");
    let d = (from - 1) as f64;
    1.0 / (3.0 * d * d * d)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn g17_formats() {
        assert_eq!(fmt_g17(0.5), "0.5");
        assert_eq!(fmt_g17(1.0), "1");
        assert_eq!(fmt_g17(1.0 / 3.0), "0.33333333333333331");
        assert_eq!(fmt_g17(1e-20), "9.9999999999999995e-21");
        assert_eq!(fmt_g17(0.1), "0.10000000000000001");
        assert_eq!(fmt_g17(123456.0), "123456");
        assert_eq!(fmt_g17(0.0), "0");
    }

    #[test]
    fn g17_round_trips() {
        for &x in &[0.1, 1.0 / 3.0, 2.0f64.sqrt(), 1e-300, 6.02e23, 0.9239384029215784, 1e-5, 9.99e16] {
            let s = fmt_g17(x);
            assert_eq!(s.parse::<f64>().unwrap(), x, "{s}");
        }
    }

    #[test]
    fn zeta2_tail_matches_closed_form() {
        let z2 = std::f64::consts::PI.powi(2) / 6.0;
        assert!((zeta2_tail(1) - z2).abs() < 1e-14);
        assert!((zeta2_tail(2) - (z2 - 1.0)).abs() < 1e-14);
        // Σ_{k≥n} k⁻² ≤ 1/(n-1)
        for n in 2..200 {
            assert!(zeta2_tail(n) <= 1.0 / (n as f64 - 1.0));
        }
    }

    #[test]
    fn pow_complement_tiny_survival() {
        let s = 1e-20;
        let m = 1_000_000_000u64;
        let v = one_minus_pow_complement(s, m);
        assert!((v - 1e-11).abs() < 1e-22);
        assert_eq!(pow_complement(0.0, 5), 1.0);
        assert_eq!(pow_complement(1.0, 5), 0.0);
    }

    #[test]
    fn neumaier_beats_naive() {
        let acc: NeumaierSum = std::iter::once(1.0).chain(std::iter::repeat_n(1e-16, 10_000)).collect();
        assert!((acc.value() - (1.0 + 1e-12)).abs() < 1e-15);
    }
}
