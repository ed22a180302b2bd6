use rand::Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::{Frac, TorusPoint, TsirelsonError};
use crate::dist::{FinitePmf, IntegerLaw, InverseCdfSampler, Law, FINITE_SUM_TOL};
use crate::numeric::ser_f64;

/// The injection f(k) = 1/(k+2) of ℕ into 𝕋 ∩ ℚ/ℤ.
pub fn inject_f(k: u64) -> TorusPoint {
    TorusPoint::Exact(Frac::new(1, k.checked_add(2).expect("k + 2 overflows")).expect("nonzero denominator"))
}

/// A probability law on the torus.
#[derive(Debug, Clone, PartialEq)]
pub enum TorusLaw {
    /// Distinct atoms sorted by position, all exact or all float.
    Finite(Vec<(TorusPoint, f64)>),
    /// f(μ) for an infinitely supported integer law μ.
    Pushforward(Law),
}

impl TorusLaw {
    pub fn finite(mut atoms: Vec<(TorusPoint, f64)>) -> Result<Self, TsirelsonError> {
        if atoms.is_empty() {
            return Err(TsirelsonError::InvalidLaw("no atoms".into()));
        }
        let exact = atoms[0].0.is_exact();
        if atoms.iter().any(|(p, _)| p.is_exact() != exact) {
            return Err(TsirelsonError::MixedMode);
        }
        if let Some((_, p)) = atoms.iter().find(|(_, p)| !(*p > 0.0 && *p <= 1.0)) {
            return Err(TsirelsonError::InvalidLaw(format!("atom probability {p} not in (0,1]")));
        }
        let total: f64 = atoms.iter().map(|(_, p)| p).sum();
        if (total - 1.0).abs() > FINITE_SUM_TOL {
            return Err(TsirelsonError::InvalidLaw(format!("atom probabilities sum to {total}")));
        }
        atoms.sort_by(|a, b| match (a.0, b.0) {
            (TorusPoint::Exact(x), TorusPoint::Exact(y)) => x.cmp(&y),
            (x, y) => x.to_f64().total_cmp(&y.to_f64()),
        });
        if atoms.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(TsirelsonError::InvalidLaw("duplicate atoms".into()));
        }
        Ok(TorusLaw::Finite(atoms))
    }

    pub fn dirac(point: TorusPoint) -> Self {
        TorusLaw::Finite(vec![(point, 1.0)])
    }

    pub fn atoms(&self) -> Option<&[(TorusPoint, f64)]> {
        match self {
            TorusLaw::Finite(a) => Some(a),
            TorusLaw::Pushforward(_) => None,
        }
    }

    pub fn is_exact(&self) -> bool {
        match self {
            TorusLaw::Finite(a) => a[0].0.is_exact(),
            TorusLaw::Pushforward(_) => true,
        }
    }
}

/// The law of f(X) for X ~ μ: finite when μ is, otherwise tagged.
pub fn pushforward(mu: &Law) -> TorusLaw {
    match mu.as_finite() {
        Some(f) => pushforward_finite(f),
        None => TorusLaw::Pushforward(mu.clone()),
    }
}

fn pushforward_finite(f: &FinitePmf) -> TorusLaw {
    // f is decreasing, so reversing keeps atoms sorted by position.
    let atoms = f.support().iter().zip(f.probs()).rev().map(|(&k, &p)| (inject_f(k), p)).collect();
    TorusLaw::Finite(atoms)
}

/// The three-way taxonomy of increment laws.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "case", rename_all = "snake_case")]
pub enum CaseLabel {
    /// A single atom.
    Case1,
    /// At least two atoms, all in x + {k/p : k = 0, …, p−1}; p minimal and x
    /// the smallest atom.
    Case2 { p: u64, x: Frac },
    /// Neither: here, infinitely many atoms.
    Case3,
}

/// Classifies an exact or pushforward-tagged law.
pub fn classify(nu: &TorusLaw) -> Result<CaseLabel, TsirelsonError> {
    let atoms = match nu {
        TorusLaw::Pushforward(base) => match base.as_finite() {
            Some(f) => return classify(&pushforward_finite(f)),
            None => return Ok(CaseLabel::Case3),
        },
        TorusLaw::Finite(atoms) => atoms,
    };
    let fracs: Vec<Frac> = atoms
        .iter()
        .map(|(p, _)| p.as_frac().ok_or(TsirelsonError::NotClassifiable))
        .collect::<Result<_, _>>()?;
    if fracs.len() == 1 {
        return Ok(CaseLabel::Case1);
    }
    let x = *fracs.iter().min().expect("nonempty");
    let mut p = 1u64;
    for s in &fracs {
        let d = s.sub_mod1(&x)?.den();
        p = num_integer::Integer::lcm(&(p as u128), &(d as u128)).try_into().map_err(|_| TsirelsonError::Overflow)?;
    }
    Ok(CaseLabel::Case2 { p, x })
}

/// Draws exact or float torus points from a law.
pub(crate) enum TorusSampler<'a> {
    Finite { points: Vec<TorusPoint>, cum: Vec<f64> },
    Pushforward(InverseCdfSampler<'a, Law>),
}

impl<'a> TorusSampler<'a> {
    pub(crate) fn new(nu: &'a TorusLaw) -> Self {
        match nu {
            TorusLaw::Finite(atoms) => {
                let mut acc = 0.0;
                let mut cum: Vec<f64> = atoms
                    .iter()
                    .map(|(_, p)| {
                        acc += p;
                        acc
                    })
                    .collect();
                *cum.last_mut().expect("nonempty") = 1.0;
                TorusSampler::Finite { points: atoms.iter().map(|a| a.0).collect(), cum }
            }
            TorusLaw::Pushforward(base) => TorusSampler::Pushforward(InverseCdfSampler::new(base)),
        }
    }

    pub(crate) fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> TorusPoint {
        match self {
            TorusSampler::Finite { points, cum } => {
                let u: f64 = rng.gen();
                let i = cum.partition_point(|&c| c <= u).min(points.len() - 1);
                points[i]
            }
            TorusSampler::Pushforward(s) => inject_f(s.draw(rng)),
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ExactAtom {
    num: u64,
    den: u64,
    #[serde(serialize_with = "ser_f64")]
    prob: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FloatAtom {
    #[serde(serialize_with = "ser_f64")]
    value: f64,
    #[serde(serialize_with = "ser_f64")]
    prob: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum AtomRepr {
    Exact(ExactAtom),
    Float(FloatAtom),
}

#[derive(Serialize, Deserialize)]
enum Injection {
    #[serde(rename = "one_over_k_plus_2")]
    OneOverKPlus2,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum TorusLawRepr {
    Finite { atoms: Vec<AtomRepr> },
    Pushforward { base: Law, injection: Injection },
}

impl Serialize for TorusLaw {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let repr = match self {
            TorusLaw::Finite(atoms) => TorusLawRepr::Finite {
                atoms: atoms
                    .iter()
                    .map(|&(pt, prob)| match pt {
                        TorusPoint::Exact(f) => AtomRepr::Exact(ExactAtom { num: f.num(), den: f.den(), prob }),
                        TorusPoint::Float(value) => AtomRepr::Float(FloatAtom { value, prob }),
                    })
                    .collect(),
            },
            TorusLaw::Pushforward(base) => {
                TorusLawRepr::Pushforward { base: base.clone(), injection: Injection::OneOverKPlus2 }
            }
        };
        repr.serialize(s)
    }
}

impl<'de> Deserialize<'de> for TorusLaw {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        use serde::de::Error;
        match TorusLawRepr::deserialize(d)? {
            TorusLawRepr::Finite { atoms } => {
                let atoms = atoms
                    .into_iter()
                    .map(|a| match a {
                        AtomRepr::Exact(a) => Ok((TorusPoint::exact(a.num, a.den)?, a.prob)),
                        AtomRepr::Float(a) => Ok((TorusPoint::float(a.value)?, a.prob)),
                    })
                    .collect::<Result<Vec<_>, TsirelsonError>>()
                    .map_err(D::Error::custom)?;
                TorusLaw::finite(atoms).map_err(D::Error::custom)
            }
            TorusLawRepr::Pushforward { base, .. } => Ok(pushforward(&base)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::{GrowthRule, SampleSizeMap, TailPmf, WeightSchedule};

    fn pt(n: u64, d: u64) -> TorusPoint {
        TorusPoint::exact(n, d).unwrap()
    }

    #[test]
    fn injection_values() {
        assert_eq!(inject_f(0), pt(1, 2));
        assert_eq!(inject_f(1), pt(1, 3));
        assert_eq!(inject_f(2), pt(1, 4));
    }

    #[test]
    fn pushforward_examples() {
        assert_eq!(pushforward(&Law::Finite(FinitePmf::dirac(0))), TorusLaw::dirac(pt(1, 2)));
        let u = pushforward(&Law::Finite(FinitePmf::uniform(0, 1).unwrap()));
        assert_eq!(u, TorusLaw::finite(vec![(pt(1, 2), 0.5), (pt(1, 3), 0.5)]).unwrap());
    }

    #[test]
    fn classify_examples() {
        assert_eq!(classify(&TorusLaw::dirac(pt(3, 10))).unwrap(), CaseLabel::Case1);
        let a = TorusLaw::finite(vec![(pt(1, 4), 0.5), (pt(3, 4), 0.5)]).unwrap();
        assert_eq!(classify(&a).unwrap(), CaseLabel::Case2 { p: 2, x: Frac::new(1, 4).unwrap() });
        let b = TorusLaw::finite(vec![(pt(1, 2), 0.5), (pt(1, 3), 0.5)]).unwrap();
        assert_eq!(classify(&b).unwrap(), CaseLabel::Case2 { p: 6, x: Frac::new(1, 3).unwrap() });
        let f = TorusLaw::finite(vec![(TorusPoint::float(0.2).unwrap(), 1.0)]).unwrap();
        assert_eq!(classify(&f), Err(TsirelsonError::NotClassifiable));
    }

    #[test]
    fn tail_pushforward_is_case3() {
        let sched = WeightSchedule::new(vec![1, 1, 5], SampleSizeMap::Identity, GrowthRule::default()).unwrap();
        let tail = Law::Tail(TailPmf::new(sched, 1e-12).unwrap());
        assert_eq!(classify(&pushforward(&tail)).unwrap(), CaseLabel::Case3);
    }

    #[test]
    fn json_forms() {
        let s = r#"{"kind":"finite","atoms":[{"num":3,"den":4,"prob":0.5},{"num":1,"den":4,"prob":0.5}]}"#;
        let law: TorusLaw = serde_json::from_str(s).unwrap();
        assert_eq!(
            serde_json::to_string(&law).unwrap(),
            r#"{"kind":"finite","atoms":[{"num":1,"den":4,"prob":0.5},{"num":3,"den":4,"prob":0.5}]}"#
        );
        let p = r#"{"kind":"pushforward","base":{"kind":"geometric","p":0.5},"injection":"one_over_k_plus_2"}"#;
        let law: TorusLaw = serde_json::from_str(p).unwrap();
        assert_eq!(serde_json::to_string(&law).unwrap(), p);
        let bad = r#"{"kind":"pushforward","base":{"kind":"geometric","p":0.5},"injection":"other"}"#;
        assert!(serde_json::from_str::<TorusLaw>(bad).is_err());
        let extra = r#"{"kind":"finite","atoms":[{"num":1,"den":2,"prob":1,"w":0}]}"#;
        assert!(serde_json::from_str::<TorusLaw>(extra).is_err());
        let label = CaseLabel::Case2 { p: 6, x: Frac::new(1, 3).unwrap() };
        assert_eq!(serde_json::to_string(&label).unwrap(), r#"{"case":"case2","p":6,"x":{"num":1,"den":3}}"#);
    }

    #[test]
    fn validation() {
        assert!(TorusLaw::finite(vec![]).is_err());
        assert!(TorusLaw::finite(vec![(pt(1, 2), 0.5), (pt(2, 4), 0.5)]).is_err());
        assert!(TorusLaw::finite(vec![(pt(1, 2), 0.6), (pt(1, 3), 0.5)]).is_err());
        assert!(TorusLaw::finite(vec![(pt(1, 2), 0.5), (TorusPoint::float(0.1).unwrap(), 0.5)]).is_err());
    }
}
