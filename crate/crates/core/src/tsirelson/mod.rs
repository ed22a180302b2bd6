//! Tsirelson's equation on 𝕋 = ℝ/ℤ: exact torus arithmetic, the uniform
//! solution, the Case 1/2/3 taxonomy of increment laws, the injection
//! f(k) = 1/(k+2) and the reduction of path events to test functionals.

mod event;
mod frac;
mod law;
mod path;

use thiserror::Error;

pub use event::{
    event_probability, reduce_event, EventEvaluator, PathEvent, ReduceMode, ReducedEvent, TorusArc,
};
pub use frac::{Frac, TorusPoint};
pub use law::{classify, inject_f, pushforward, CaseLabel, TorusLaw};
pub use path::{path_increments, simulate_uniform_solution, UniformMode, DEFAULT_GRID};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TsirelsonError {
    #[error("invalid fraction {0}")]
    InvalidFraction(String),
    #[error("invalid torus point {0}")]
    InvalidPoint(String),
    #[error("exact and float torus points cannot be combined")]
    MixedMode,
    #[error("rational denominator overflow")]
    Overflow,
    #[error("law is not exactly representable; classification needs rational atoms")]
    NotClassifiable,
    #[error("invalid torus law: {0}")]
    InvalidLaw(String),
    #[error("invalid path: {0}")]
    InvalidPath(String),
    #[error("invalid path event: {0}")]
    InvalidEvent(String),
}
