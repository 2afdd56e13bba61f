//! ℓ^q norms of operator outputs computed on a finite window, with a
//! certified bound for the mass outside it.
//!
//! Outside a window of radius `W` about `c`, every `j` has
//! `|j| ≥ |j|_∞ ≥ N_t = W + 1 − |c|_∞`. With `ρ` the largest `|i|` on the
//! support and `σ_k` a lower bound on the smallest singular value of `A_k`,
//! `|i − A_k j| ≥ σ_k|j| − ρ ≥ g_k |j|` where `g_k = σ_k − ρ/N_t`. Hence
//!
//! * generic input: `|T b(j)| ≤ ‖b‖₁ Π g_k^{−α_k} |j|^{−(n−α)}`;
//! * exact mean-zero input supported in a cube about `i_c` with
//!   `max |i − i_c| ≤ δ`: by the mean value theorem on the segment to `i_c`,
//!   `|T b(j)| ≤ ‖b‖₁ δ Π g_k^{−α_k} (Σ α_k/g_k) |j|^{−(n−α)−1}`.
//!
//! Raising to the power `q` and summing over the exterior gives a multiple of
//! the lattice tail sum with `ε = (decay)·q − n`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::CubeWindow;
use crate::operators::kernel::OperatorResult;
use crate::operators::tail::tail_sum_upper;
use crate::scalar::Real;
use crate::sequence::LatticeSequence;
use crate::spec::FractionalSpec;

/// What is known about the input beyond finite support.
#[derive(Clone, Debug, PartialEq)]
pub enum InputDecay {
    /// No cancellation assumed.
    Generic,
    /// Exact mean zero, support inside `cube` (e.g. an atom).
    MeanZero { cube: CubeWindow },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LqNorm {
    /// `(Σ_{window} |T b|^q)^{1/q}`.
    pub norm: f64,
    /// `Σ_{window} |T b|^q`.
    pub window_mass: f64,
    /// Bound on `Σ_{outside} |T b|^q`; infinite when divergent.
    pub tail: f64,
    pub divergent: bool,
    /// Exponent of the lattice tail sum used for the bound.
    pub epsilon: f64,
}

impl LqNorm {
    /// Upper bound on the full ℓ^q norm.
    pub fn total_upper(&self, q: f64) -> f64 {
        (self.window_mass + self.tail).powf(1.0 / q)
    }
}

pub fn truncated_lq_norm<T: Real>(
    result: &OperatorResult<T>,
    q: f64,
    b: &LatticeSequence<T>,
    spec: &FractionalSpec,
    decay: &InputDecay,
) -> Result<LqNorm> {
    if !(q > 0.0 && q.is_finite()) {
        return Err(Error::InvalidParameter(format!("q must be positive and finite, got {q}")));
    }
    let values = result
        .values
        .dense_values()
        .ok_or_else(|| Error::InvalidParameter("operator result must be dense".into()))?;
    let window_mass: f64 = values.iter().map(|v| v.as_f64().abs().powf(q)).sum();
    let norm = window_mass.powf(1.0 / q);
    let n = spec.n as f64;
    let base_decay = n - spec.alpha;
    let (rate, amplitude) = match decay {
        InputDecay::Generic => (base_decay, None),
        InputDecay::MeanZero { cube } => (base_decay + 1.0, Some(cube)),
    };
    let epsilon = rate * q - n;
    if epsilon <= 0.0 {
        return Ok(LqNorm { norm, window_mass, tail: f64::INFINITY, divergent: true, epsilon });
    }
    let l1 = b.l1_norm().as_f64();
    if l1 == 0.0 {
        return Ok(LqNorm { norm, window_mass, tail: 0.0, divergent: false, epsilon });
    }
    let window = result.window();
    let near = window.center.sup_norm();
    if window.radius + 1 <= near {
        return Err(Error::WindowTooSmall("window does not contain a neighbourhood of the origin".into()));
    }
    let n_t = window.radius + 1 - near;
    let rho = match amplitude {
        Some(cube) => cube.max_euclidean_norm(),
        None => b.support_euclidean_radius(),
    };
    let mut product = 1.0;
    let mut gradient = 0.0;
    for (nb, &a_k) in spec.norm_bounds().iter().zip(&spec.exponents) {
        let g = nb.lower - rho / n_t as f64;
        if !(g > 0.0) {
            return Err(Error::WindowTooSmall(format!(
                "exterior radius {n_t} does not clear the image of the support (ρ = {rho}, σ = {})",
                nb.lower
            )));
        }
        product *= g.powf(-a_k);
        gradient += a_k / g;
    }
    let constant = match amplitude {
        None => l1 * product,
        Some(cube) => l1 * (spec.n as f64).sqrt() * cube.radius as f64 * product * gradient,
    };
    let tail = constant.powf(q) * tail_sum_upper(spec.n, epsilon, n_t)?;
    Ok(LqNorm { norm, window_mass, tail, divergent: false, epsilon })
}

impl<T: Real> OperatorResult<T> {
    /// Records `q` and the certified exterior bound in the metadata.
    pub fn attach_tail(
        &mut self,
        q: f64,
        b: &LatticeSequence<T>,
        spec: &FractionalSpec,
        decay: &InputDecay,
    ) -> Result<LqNorm> {
        let lq = truncated_lq_norm(self, q, b, spec, decay)?;
        self.metadata.q = Some(q);
        self.metadata.tail_bound = Some(lq.tail);
        Ok(lq)
    }
}
