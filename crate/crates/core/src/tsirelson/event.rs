use std::sync::Arc as Shared;

use num_integer::Integer;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::law::TorusSampler;
use super::path::simulate_with;
use super::{inject_f, Frac, TorusLaw, TorusPoint, TsirelsonError, UniformMode};
use crate::dist::SampleSizeMap;
use crate::numeric::{derive_seed, hoeffding_two_sided, NeumaierSum};
use crate::teststat::{ExpectationReport, Functional, TestFamily};

/// A closed-open arc [a, b) of the torus with rational endpoints in [0,1].
///
/// a = b is empty; otherwise the arc runs from a forward by (b − a) mod 1,
/// a length of 0 mod 1 meaning the whole circle, so [0, 1) is 𝕋 and
/// [3/4, 1/4) wraps through 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TorusArc {
    start: Frac,
    end: Frac,
    lo: Frac,
    /// Length in (0, 1], or 0 for the empty arc.
    len: Frac,
}

impl TorusArc {
    pub fn new(start: Frac, end: Frac) -> Result<Self, TsirelsonError> {
        if start > Frac::ONE || end > Frac::ONE {
            return Err(TsirelsonError::InvalidEvent(format!("arc endpoint outside [0,1]: [{start}, {end})")));
        }
        let lo = start.wrap();
        let len = if start == end {
            Frac::ZERO
        } else {
            let l = end.sub_mod1(&start)?;
            if l == Frac::ZERO {
                Frac::ONE
            } else {
                l
            }
        };
        Ok(Self { start, end, lo, len })
    }

    pub fn full() -> Self {
        Self::new(Frac::ZERO, Frac::ONE).expect("valid arc")
    }

    pub fn length(&self) -> Frac {
        self.len
    }

    pub fn contains(&self, x: &TorusPoint) -> Result<bool, TsirelsonError> {
        if self.len == Frac::ZERO {
            return Ok(false);
        }
        if self.len == Frac::ONE {
            return Ok(true);
        }
        match x {
            TorusPoint::Exact(f) => Ok(f.sub_mod1(&self.lo)? < self.len),
            TorusPoint::Float(v) => Ok(self.contains_f64(*v)),
        }
    }

    fn contains_f64(&self, x: f64) -> bool {
        if self.len == Frac::ZERO {
            return false;
        }
        if self.len == Frac::ONE {
            return true;
        }
        (x - self.lo.to_f64()).rem_euclid(1.0) < self.len.to_f64()
    }
}

/// A path event B ⊂ 𝕋^{d}: a finite union of products of arcs. Product i
/// constrains coordinates 0, …, len−1 of (η₀, η₋₁, …); later coordinates are
/// free. No products is ∅; a single empty product is the whole space.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PathEvent {
    products: Vec<Vec<TorusArc>>,
}

impl PathEvent {
    pub fn new(products: Vec<Vec<TorusArc>>) -> Self {
        Self { products }
    }

    pub fn empty() -> Self {
        Self { products: vec![] }
    }

    pub fn full() -> Self {
        Self { products: vec![vec![]] }
    }

    pub fn products(&self) -> &[Vec<TorusArc>] {
        &self.products
    }

    /// Number of leading coordinates the event constrains.
    pub fn arity(&self) -> usize {
        self.products.iter().map(Vec::len).max().unwrap_or(0)
    }

    /// Checks that paths of φ(n)+1 points carry every constrained coordinate.
    pub fn check_rank(&self, phi: &SampleSizeMap, n: u64) -> Result<(), TsirelsonError> {
        let coords = phi.apply(n).saturating_add(1);
        if self.arity() as u64 > coords {
            return Err(TsirelsonError::InvalidEvent(format!(
                "event constrains {} coordinates but rank {n} paths have {coords}",
                self.arity()
            )));
        }
        Ok(())
    }

    /// Membership of (η₀, η₋₁, …).
    pub fn contains(&self, path: &[TorusPoint]) -> Result<bool, TsirelsonError> {
        for product in &self.products {
            if product.len() > path.len() {
                return Err(TsirelsonError::InvalidEvent("path shorter than the event's arity".into()));
            }
            let mut inside = true;
            for (arc, x) in product.iter().zip(path) {
                if !arc.contains(x)? {
                    inside = false;
                    break;
                }
            }
            if inside {
                return Ok(true);
            }
        }
        Ok(false)
    }

    /// Whether u lies in ⋃ᵢ ⋂ⱼ (arcᵢⱼ + sⱼ), i.e. (u − s₀, u − s₁, …) ∈ B.
    fn contains_shifted(&self, u: &Frac, shifts: &[Frac]) -> Result<bool, TsirelsonError> {
        'products: for product in &self.products {
            for (arc, s) in product.iter().zip(shifts) {
                if !arc.contains(&TorusPoint::Exact(u.sub_mod1(s)?))? {
                    continue 'products;
                }
            }
            return Ok(true);
        }
        Ok(false)
    }

    fn contains_shifted_f64(&self, u: f64, shifts: &[f64]) -> bool {
        self.products
            .iter()
            .any(|product| product.iter().zip(shifts).all(|(arc, s)| arc.contains_f64(u - s)))
    }

    /// Lebesgue measure of {u : (u − s₀, u − s₁, …) ∈ B}, exactly: the set
    /// is a union of closed-open arcs whose endpoints are the shifted arc
    /// endpoints, so membership is constant on each gap between them.
    fn shifted_measure(&self, shifts: &[Frac]) -> Result<f64, TsirelsonError> {
        let mut cuts = vec![Frac::ZERO];
        for product in &self.products {
            for (arc, s) in product.iter().zip(shifts) {
                cuts.push(arc.lo.add_mod1(s)?);
                cuts.push(arc.lo.add_mod1(&arc.len)?.add_mod1(s)?);
            }
        }
        cuts.sort_unstable();
        cuts.dedup();
        let mut acc = NeumaierSum::new();
        for (i, t) in cuts.iter().enumerate() {
            if self.contains_shifted(t, shifts)? {
                let next = cuts.get(i + 1).copied().unwrap_or(Frac::ONE);
                acc.add(next.to_f64() - t.to_f64());
            }
        }
        Ok(acc.value())
    }

    fn shifted_measure_f64(&self, shifts: &[f64]) -> f64 {
        let mut cuts = vec![0.0];
        for product in &self.products {
            for (arc, s) in product.iter().zip(shifts) {
                let lo = arc.lo.to_f64();
                cuts.push((lo + s).rem_euclid(1.0));
                cuts.push((lo + arc.len.to_f64() + s).rem_euclid(1.0));
            }
        }
        cuts.retain(|c| *c < 1.0);
        cuts.sort_by(f64::total_cmp);
        cuts.dedup();
        let mut acc = NeumaierSum::new();
        for (i, &t) in cuts.iter().enumerate() {
            let next = cuts.get(i + 1).copied().unwrap_or(1.0);
            if self.contains_shifted_f64(0.5 * (t + next), shifts) {
                acc.add(next - t);
            }
        }
        acc.value()
    }
}

impl Serialize for PathEvent {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Repr {
            arcs: Vec<Vec<[u64; 4]>>,
        }
        let arcs = self
            .products
            .iter()
            .map(|p| p.iter().map(|a| [a.start.num(), a.start.den(), a.end.num(), a.end.den()]).collect())
            .collect();
        Repr { arcs }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for PathEvent {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(deny_unknown_fields)]
        struct Repr {
            arcs: Vec<Vec<[u64; 4]>>,
        }
        let repr = Repr::deserialize(d)?;
        let products = repr
            .arcs
            .into_iter()
            .map(|p| {
                p.into_iter()
                    .map(|[a, b, c, e]| TorusArc::new(Frac::new(a, b)?, Frac::new(c, e)?))
                    .collect::<Result<Vec<_>, _>>()
            })
            .collect::<Result<Vec<_>, _>>()
            .map_err(serde::de::Error::custom)?;
        Ok(PathEvent { products })
    }
}

/// How the u-integral of a reduced event is computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case", deny_unknown_fields)]
pub enum ReduceMode {
    /// Exact arc decomposition (float fallback if denominators overflow).
    Exact,
    /// Average over `samples` fixed uniform draws of u.
    MonteCarlo { samples: u64, seed: u64 },
}

/// Aₙ(X₁, …, X_{φ(n)}) = ∫₀¹ 1_B(u, u − f(X₁), …, u − f(X₁) − ⋯ − f(X_{φ(n)})) du.
#[derive(Debug, Clone)]
pub struct ReducedEvent {
    event: PathEvent,
    phi: SampleSizeMap,
    mode: ReduceMode,
    u_samples: Vec<f64>,
}

impl ReducedEvent {
    pub fn new(event: PathEvent, phi: SampleSizeMap, mode: ReduceMode) -> Result<Self, TsirelsonError> {
        phi.validate().map_err(|e| TsirelsonError::InvalidEvent(e.to_string()))?;
        let u_samples = match mode {
            ReduceMode::Exact => vec![],
            ReduceMode::MonteCarlo { samples, seed } => {
                if samples == 0 {
                    return Err(TsirelsonError::InvalidEvent("u sample count must be >= 1".into()));
                }
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                (0..samples).map(|_| rng.gen::<f64>()).collect()
            }
        };
        Ok(Self { event, phi, mode, u_samples })
    }

    /// Hoeffding half-width of the u-average at confidence `conf`; 0 in
    /// exact mode.
    pub fn u_half_width(&self, conf: f64) -> f64 {
        match self.mode {
            ReduceMode::Exact => 0.0,
            ReduceMode::MonteCarlo { samples, .. } => hoeffding_two_sided(samples, conf),
        }
    }

    /// The integral for one sample; coordinates past the sample are free.
    pub fn integral(&self, sample: &[u64]) -> f64 {
        let width = self.event.arity().min(sample.len() + 1);
        match self.mode {
            ReduceMode::Exact => {
                let exact = || -> Result<f64, TsirelsonError> {
                    let mut shifts = Vec::with_capacity(width);
                    let mut s = Frac::ZERO;
                    shifts.push(s);
                    for &x in &sample[..width.saturating_sub(1)] {
                        s = s.add_mod1(&inject_f(x).as_frac().expect("exact injection"))?;
                        shifts.push(s);
                    }
                    self.event.shifted_measure(&shifts)
                };
                exact().unwrap_or_else(|_| self.event.shifted_measure_f64(&self.float_shifts(sample, width)))
            }
            ReduceMode::MonteCarlo { .. } => {
                let shifts = self.float_shifts(sample, width);
                let hits = self.u_samples.iter().filter(|&&u| self.event.contains_shifted_f64(u, &shifts)).count();
                hits as f64 / self.u_samples.len() as f64
            }
        }
    }

    fn float_shifts(&self, sample: &[u64], width: usize) -> Vec<f64> {
        let mut shifts = Vec::with_capacity(width);
        let mut s = 0.0f64;
        shifts.push(s);
        for &x in &sample[..width.saturating_sub(1)] {
            s = (s + 1.0 / (x as f64 + 2.0)).rem_euclid(1.0);
            shifts.push(s);
        }
        shifts
    }
}

impl Functional for ReducedEvent {
    fn phi(&self) -> SampleSizeMap {
        self.phi.clone()
    }

    fn eval(&self, _n: u64, sample: &[u64]) -> f64 {
        self.integral(sample)
    }

    fn name(&self) -> String {
        "reduced_event".into()
    }
}

/// The test family obtained from a path event through the injection f.
pub fn reduce_event(event: &PathEvent, phi: SampleSizeMap, mode: ReduceMode) -> Result<TestFamily, TsirelsonError> {
    let reduced = ReducedEvent::new(event.clone(), phi, mode)?;
    TestFamily::custom(Shared::new(reduced)).map_err(|e| TsirelsonError::InvalidEvent(e.to_string()))
}

/// How a path-event probability is computed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case", deny_unknown_fields)]
pub enum EventEvaluator {
    /// Fraction of simulated paths in B, with a two-sided Hoeffding
    /// half-width.
    MonteCarlo {
        paths: u64,
        conf: f64,
        #[serde(default)]
        seed: u64,
        #[serde(default = "float_mode")]
        uniform: UniformMode,
    },
    /// Exact for finite exact laws: every increment tuple is enumerated and U
    /// ranges over the grid 1/Q with Q the lcm of all denominators in play,
    /// on which the event's u-section is a union of whole grid cells.
    ExactGrid,
}

fn float_mode() -> UniformMode {
    UniformMode::Float
}

/// Largest grid size × tuple count `ExactGrid` will enumerate.
const GRID_BUDGET: u128 = 200_000_000;

const CHUNK: u64 = 4096;

/// P[(η₀, η₋₁, …, η₋φ(n)) ∈ B] under the uniform solution driven by `nu`.
pub fn event_probability(
    nu: &TorusLaw,
    event: &PathEvent,
    phi: &SampleSizeMap,
    n: u64,
    evaluator: &EventEvaluator,
) -> Result<ExpectationReport, TsirelsonError> {
    if n == 0 {
        return Err(TsirelsonError::InvalidEvent("rank must be >= 1".into()));
    }
    event.check_rank(phi, n)?;
    let depth = phi.apply(n);
    match *evaluator {
        EventEvaluator::MonteCarlo { paths, conf, seed, uniform } => {
            if paths == 0 || !(conf > 0.0 && conf < 1.0) {
                return Err(TsirelsonError::InvalidEvent("need paths >= 1 and conf in (0,1)".into()));
            }
            let sampler = TorusSampler::new(nu);
            let chunks = paths.div_ceil(CHUNK);
            let hits: Vec<Result<u64, TsirelsonError>> = (0..chunks)
                .into_par_iter()
                .map(|chunk| {
                    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &[chunk]));
                    let mut hits = 0u64;
                    for _ in 0..CHUNK.min(paths - chunk * CHUNK) {
                        let path = simulate_with(&sampler, depth, uniform, &mut rng)?;
                        hits += u64::from(event.contains(&path)?);
                    }
                    Ok(hits)
                })
                .collect();
            let mut total = 0u64;
            for h in hits {
                total += h?;
            }
            Ok(ExpectationReport::monte_carlo(
                total as f64 / paths as f64,
                hoeffding_two_sided(paths, conf),
                conf,
                paths,
            ))
        }
        EventEvaluator::ExactGrid => exact_grid(nu, event, depth),
    }
}

fn exact_grid(nu: &TorusLaw, event: &PathEvent, depth: u64) -> Result<ExpectationReport, TsirelsonError> {
    let atoms = nu.atoms().ok_or_else(|| {
        TsirelsonError::InvalidEvent("exact grid evaluation needs a finitely supported law".into())
    })?;
    let fracs: Vec<(Frac, f64)> = atoms
        .iter()
        .map(|(p, w)| p.as_frac().map(|f| (f, *w)).ok_or(TsirelsonError::NotClassifiable))
        .collect::<Result<_, _>>()?;

    let mut q: u128 = 1;
    let dens = fracs
        .iter()
        .map(|(f, _)| f.den())
        .chain(event.products.iter().flatten().flat_map(|a| [a.lo.den(), a.len.den()]));
    for d in dens {
        q = q.lcm(&(d as u128));
        if q > GRID_BUDGET {
            return Err(TsirelsonError::Overflow);
        }
    }
    let tuples = (fracs.len() as u128).checked_pow(u32::try_from(depth).map_err(|_| TsirelsonError::Overflow)?);
    match tuples {
        Some(t) if t.saturating_mul(q) <= GRID_BUDGET => {}
        _ => return Err(TsirelsonError::Overflow),
    }
    let q = q as u64;
    // Everything as integers mod Q.
    let on_grid = |f: &Frac| f.num() * (q / f.den());
    let steps: Vec<(u64, f64)> = fracs.iter().map(|(f, w)| (on_grid(f), *w)).collect();
    let arcs: Vec<Vec<(u64, u64)>> = event
        .products
        .iter()
        .map(|p| p.iter().map(|a| (on_grid(&a.lo) % q, on_grid(&a.len))).collect())
        .collect();
    let coords = event.arity().min(depth as usize + 1);

    let depth = depth as usize;
    let mut idx = vec![0usize; depth];
    let mut acc = NeumaierSum::new();
    let mut evaluations = 0u64;
    let mut shifts = vec![0u64; coords];
    loop {
        let mut weight = 1.0;
        let mut s = 0u64;
        for (j, &i) in idx.iter().enumerate() {
            weight *= steps[i].1;
            s = (s + steps[i].0) % q;
            if j + 1 < coords {
                shifts[j + 1] = s;
            }
        }
        let mut count = 0u64;
        for u in 0..q {
            let inside = arcs.iter().any(|p| {
                p.iter().zip(&shifts).all(|(&(lo, len), &sh)| (u + 2 * q - sh - lo) % q < len)
            });
            count += u64::from(inside);
        }
        evaluations += q;
        acc.add(weight * count as f64 / q as f64);

        let mut pos = depth;
        loop {
            if pos == 0 {
                return Ok(ExpectationReport::exact(acc.value(), evaluations));
            }
            pos -= 1;
            idx[pos] += 1;
            if idx[pos] < steps.len() {
                break;
            }
            idx[pos] = 0;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::{FinitePmf, Law};
    use crate::teststat::brute_force_expectation;
    use crate::tsirelson::pushforward;

    fn fr(n: u64, d: u64) -> Frac {
        Frac::new(n, d).unwrap()
    }

    fn arc(a: (u64, u64), b: (u64, u64)) -> TorusArc {
        TorusArc::new(fr(a.0, a.1), fr(b.0, b.1)).unwrap()
    }

    #[test]
    fn arc_membership() {
        let a = arc((3, 4), (1, 4));
        assert!(a.contains(&TorusPoint::exact(0, 1).unwrap()).unwrap());
        assert!(a.contains(&TorusPoint::exact(3, 4).unwrap()).unwrap());
        assert!(!a.contains(&TorusPoint::exact(1, 4).unwrap()).unwrap());
        assert_eq!(a.length(), fr(1, 2));
        assert_eq!(arc((1, 2), (1, 2)).length(), Frac::ZERO);
        assert_eq!(TorusArc::full().length(), Frac::ONE);
        assert!(TorusArc::new(fr(3, 2), fr(1, 2)).is_err());
    }

    #[test]
    fn trivial_reductions() {
        let phi = SampleSizeMap::Identity;
        let full = reduce_event(&PathEvent::full(), phi.clone(), ReduceMode::Exact).unwrap();
        let empty = reduce_event(&PathEvent::empty(), phi.clone(), ReduceMode::Exact).unwrap();
        let half = PathEvent::new(vec![vec![arc((0, 1), (1, 2))]]);
        let half = reduce_event(&half, phi, ReduceMode::Exact).unwrap();
        for sample in [[0u64, 0], [3, 7], [100, 1]] {
            assert_eq!(full.eval(2, &sample).unwrap(), 1.0);
            assert_eq!(empty.eval(2, &sample).unwrap(), 0.0);
            assert_eq!(half.eval(2, &sample).unwrap(), 0.5);
        }
    }

    #[test]
    fn exact_and_float_integrals_agree() {
        let ev = PathEvent::new(vec![
            vec![arc((0, 1), (1, 2)), arc((1, 3), (5, 6))],
            vec![TorusArc::full(), arc((7, 8), (1, 8)), arc((1, 5), (3, 5))],
        ]);
        let r = ReducedEvent::new(ev.clone(), SampleSizeMap::Identity, ReduceMode::Exact).unwrap();
        for sample in [[0u64, 0], [1, 2], [5, 9], [0, 3]] {
            let exact = r.integral(&sample);
            let shifts = r.float_shifts(&sample, 3);
            assert!((exact - ev.shifted_measure_f64(&shifts)).abs() < 1e-12);
        }
    }

    #[test]
    fn first_coordinate_event_has_probability_half() {
        let ev = PathEvent::new(vec![vec![arc((0, 1), (1, 2))]]);
        let nu = TorusLaw::finite(vec![
            (TorusPoint::exact(1, 5).unwrap(), 0.3),
            (TorusPoint::exact(2, 7).unwrap(), 0.7),
        ])
        .unwrap();
        let r = event_probability(&nu, &ev, &SampleSizeMap::Identity, 2, &EventEvaluator::ExactGrid).unwrap();
        assert!((r.value - 0.5).abs() < 1e-15);
        let full = event_probability(&nu, &PathEvent::full(), &SampleSizeMap::Identity, 2, &EventEvaluator::ExactGrid)
            .unwrap();
        assert!((full.value - 1.0).abs() < 1e-15);
    }

    #[test]
    fn grid_matches_reduction() {
        let mu = FinitePmf::uniform(0, 1).unwrap();
        let nu = pushforward(&Law::Finite(mu.clone()));
        let ev = PathEvent::new(vec![vec![arc((0, 1), (1, 2)), arc((1, 4), (3, 4)), arc((1, 3), (2, 3))]]);
        let phi = SampleSizeMap::Identity;
        let grid = event_probability(&nu, &ev, &phi, 2, &EventEvaluator::ExactGrid).unwrap();
        let test = reduce_event(&ev, phi, ReduceMode::Exact).unwrap();
        let oracle = brute_force_expectation(&test, &mu, 2).unwrap();
        assert!((grid.value - oracle.value).abs() < 1e-12, "{} vs {}", grid.value, oracle.value);
    }

    #[test]
    fn arity_checked() {
        let ev = PathEvent::new(vec![vec![TorusArc::full(); 4]]);
        let nu = TorusLaw::dirac(TorusPoint::zero());
        assert!(event_probability(&nu, &ev, &SampleSizeMap::Identity, 2, &EventEvaluator::ExactGrid).is_err());
        assert!(event_probability(&nu, &ev, &SampleSizeMap::Identity, 3, &EventEvaluator::ExactGrid).is_ok());
    }

    #[test]
    fn json_form() {
        let s = r#"{"arcs":[[[0,1,1,2],[3,4,1,4]],[]]}"#;
        let ev: PathEvent = serde_json::from_str(s).unwrap();
        assert_eq!(ev.products().len(), 2);
        assert_eq!(serde_json::to_string(&ev).unwrap(), s);
        assert!(serde_json::from_str::<PathEvent>(r#"{"arcs":[],"x":1}"#).is_err());
    }
}
