use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::law::TorusSampler;
use super::{TorusLaw, TorusPoint, TsirelsonError};

/// Default denominator of the rational grid for U.
pub const DEFAULT_GRID: u64 = 1 << 31;

/// How U ~ uniform(𝕋) is drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case", deny_unknown_fields)]
pub enum UniformMode {
    /// U a double in [0,1); the path is computed in floating point.
    Float,
    /// U = j/den with j uniform on {0, …, den−1}; the path is exact.
    Grid {
        #[serde(default = "default_grid")]
        den: u64,
    },
}

fn default_grid() -> u64 {
    DEFAULT_GRID
}

impl Default for UniformMode {
    fn default() -> Self {
        UniformMode::Grid { den: DEFAULT_GRID }
    }
}

/// (η₀, η₋₁, …, η₋ₘ) with η₀ = U and η₋ₖ = U − ζ₀ − ⋯ − ζ₋ₖ₊₁, the ζ i.i.d.
/// with law `nu`. Deterministic given `seed`.
pub fn simulate_uniform_solution(
    nu: &TorusLaw,
    depth: u64,
    seed: u64,
    mode: UniformMode,
) -> Result<Vec<TorusPoint>, TsirelsonError> {
    let sampler = TorusSampler::new(nu);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    simulate_with(&sampler, depth, mode, &mut rng)
}

pub(crate) fn simulate_with<R: Rng + ?Sized>(
    sampler: &TorusSampler<'_>,
    depth: u64,
    mode: UniformMode,
    rng: &mut R,
) -> Result<Vec<TorusPoint>, TsirelsonError> {
    let u = match mode {
        UniformMode::Float => TorusPoint::Float(rng.gen::<f64>()),
        UniformMode::Grid { den } => {
            if den == 0 {
                return Err(TsirelsonError::InvalidFraction("grid denominator 0".into()));
            }
            TorusPoint::exact(rng.gen_range(0..den), den)?
        }
    };
    let len = usize::try_from(depth).map_err(|_| TsirelsonError::Overflow)?;
    let mut path = Vec::with_capacity(len.saturating_add(1));
    path.push(u);
    let mut eta = u;
    for _ in 0..len {
        let mut zeta = sampler.draw(rng);
        if matches!(mode, UniformMode::Float) {
            zeta = zeta.to_float();
        }
        eta = eta.sub(&zeta)?;
        path.push(eta);
    }
    Ok(path)
}

/// ξₖ = ηₖ − ηₖ₋₁ and ρₖ = ξₖ − ξₖ₋₁ along a path (η₀, η₋₁, …), in the
/// same order. ρ is empty for paths of length 2.
pub fn path_increments(path: &[TorusPoint]) -> Result<(Vec<TorusPoint>, Vec<TorusPoint>), TsirelsonError> {
    if path.len() < 2 {
        return Err(TsirelsonError::InvalidPath(format!("need at least 2 points, got {}", path.len())));
    }
    let xi: Vec<TorusPoint> = path.windows(2).map(|w| w[0].sub(&w[1])).collect::<Result<_, _>>()?;
    let rho: Vec<TorusPoint> = xi.windows(2).map(|w| w[0].sub(&w[1])).collect::<Result<_, _>>()?;
    Ok((xi, rho))
}
