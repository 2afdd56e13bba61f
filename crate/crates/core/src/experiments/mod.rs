//! Numerical experiments and their reports.
//!
//! Every runner is deterministic given its parameters and seed: trial `k`
//! draws from a ChaCha8 stream seeded by [`derive_seed`]`(seed, k)`, trials
//! run in parallel and are collected in trial order.

mod atom_runs;
mod norms;
mod regions_run;
pub mod report;
pub mod stats;
mod tail_run;

pub use atom_runs::{run_atom_uniform, run_domination, AtomUniformParams, DominationParams};
pub use norms::{run_lplq, run_maximal_bound, LplqParams, MaximalBoundParams, SequenceFamily};
pub use regions_run::{run_regions, RegionsParams};
pub use report::{Check, ExperimentReport, Record};
pub use tail_run::{run_tail, TailParams};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use crate::atoms::derive_seed;
use crate::spec::FractionalSpec;

/// Named operator configurations used by the acceptance runs.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    /// `n = 1`, `α = 1/2`, `m = 1`, `A = I`: the Riesz potential `I_{1/2}`.
    Riesz1d,
    /// `n = 1`, `α = 0`, `A₁ = 1`, `A₂ = −1`, `α₁ = α₂ = 1/2`.
    Alpha01d,
}

impl Preset {
    pub const ALL: [Preset; 2] = [Preset::Riesz1d, Preset::Alpha01d];

    pub fn spec(self) -> FractionalSpec {
        match self {
            Preset::Riesz1d => FractionalSpec::riesz(1, 0.5),
            Preset::Alpha01d => FractionalSpec::reflection_pair(),
        }
    }

    /// Atom exponent used with this preset.
    pub fn p(self) -> f64 {
        1.0
    }

    pub fn name(self) -> &'static str {
        match self {
            Preset::Riesz1d => "riesz-1d",
            Preset::Alpha01d => "alpha0-1d",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|p| p.name() == s)
    }
}

pub(crate) fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(seed, trial))
}

pub(crate) fn spec_parameters(spec: &FractionalSpec) -> serde_json::Value {
    serde_json::to_value(spec.to_file()).expect("spec serializes")
}

pub(crate) fn elapsed_ms(start: std::time::Instant) -> f64 {
    start.elapsed().as_secs_f64() * 1e3
}
