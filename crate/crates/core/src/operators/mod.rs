//! Operator evaluation: `T_{α,m}`, the Riesz potential, maximal operators,
//! tail sums and truncated norms.

pub mod kernel;
pub mod maximal;
pub mod regions;
pub mod tail;
pub mod truncation;

pub use kernel::{apply_riesz, apply_t, apply_t_at, default_window, OperatorResult, ResultMetadata};
pub use maximal::{cube_indicator_maximal, fractional_maximal, fractional_maximal_fast, SummedVolumeTable};
pub use regions::{near_image_constant, region_decompose_alpha0, RegionDiagnostic};
pub use tail::{lemma_tail_bound, tail_sum, tail_sum_enclosure, tail_sum_upper, TailEstimate, TailSum};
pub use truncation::{truncated_lq_norm, InputDecay, LqNorm};
