//! Direct evaluation of `T_{α,m}` and of the Riesz potential.

use std::time::Instant;

use num_bigint::BigInt;
use num_traits::ToPrimitive;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{dist_sq, CubeWindow, LatticeIndex};
use crate::scalar::Real;
use crate::sequence::{LatticeSequence, SequenceFile, Support};
use crate::spec::FractionalSpec;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultMetadata {
    /// Certified bound on `Σ_{j ∉ window} |T b(j)|^q`, once a `q` is attached.
    pub tail_bound: Option<f64>,
    pub q: Option<f64>,
    pub window: CubeWindow,
    pub spec_hash: String,
    /// Set when the window came from [`default_window`].
    pub default_window: bool,
    pub elapsed_ms: f64,
}

#[derive(Clone, Debug)]
pub struct OperatorResult<T> {
    pub values: LatticeSequence<T>,
    pub metadata: ResultMetadata,
}

impl<T: Real> OperatorResult<T> {
    pub fn window(&self) -> &CubeWindow {
        &self.metadata.window
    }

    pub fn to_json(&self) -> serde_json::Value {
        let mut v = serde_json::to_value(SequenceFile::from_sequence(&self.values)).expect("serializes");
        v["metadata"] = serde_json::to_value(&self.metadata).expect("serializes");
        v
    }
}

/// Smallest integer `k` with `k² ≥ x` for an exact rational `x ≥ 0`.
pub(crate) fn ceil_sqrt_rational(x: &num_rational::BigRational) -> u64 {
    let approx = x.to_f64().unwrap_or(0.0).sqrt().ceil().max(0.0) as u64;
    let mut k = approx.saturating_sub(2);
    loop {
        let kk = BigInt::from(k) * BigInt::from(k);
        if num_rational::BigRational::from_integer(kk) >= *x {
            return k;
        }
        k += 1;
    }
}

/// Output window centered at the origin with radius
/// `4·⌈D_inv⌉·(support radius + |support center|_∞) + 16`.
pub fn default_window<T: Real>(spec: &FractionalSpec, b: &LatticeSequence<T>) -> CubeWindow {
    let reach = b
        .support_cube()
        .map(|c| c.radius + c.center.sup_norm())
        .unwrap_or(0);
    let d = ceil_sqrt_rational(&spec.d_inv().1).max(1);
    CubeWindow::centered_at_origin(spec.n, 4 * d * reach + 16)
}

fn check_dims<T: Real>(n: usize, b: &LatticeSequence<T>, out: &CubeWindow) -> Result<()> {
    if b.dim() != n {
        return Err(Error::DimensionMismatch { expected: n, found: b.dim() });
    }
    if out.dim() != n {
        return Err(Error::DimensionMismatch { expected: n, found: out.dim() });
    }
    Ok(())
}

/// Precomputed per-factor data for repeated point evaluations.
pub(crate) struct KernelPlan<'a, T> {
    spec: &'a FractionalSpec,
    half_exponents: Vec<T>,
}

impl<'a, T: Real> KernelPlan<'a, T> {
    pub fn new(spec: &'a FractionalSpec) -> Self {
        Self { spec, half_exponents: spec.exponents.iter().map(|&a| T::of(a / 2.0)).collect() }
    }

    /// `Σ_{i ∈ supp, i ≠ A_k j} b(i) / Π_k |i − A_k j|^{α_k}` in support order.
    ///
    /// `scratch` holds `m·n` integers for the images `A_k j`.
    pub fn eval(&self, support: &Support<T>, j: &[i64], scratch: &mut [i64]) -> T {
        let n = self.spec.n;
        for (k, a) in self.spec.matrices.iter().enumerate() {
            a.apply_into(j, &mut scratch[k * n..(k + 1) * n]);
        }
        let mut acc = T::zero();
        'points: for (idx, &v) in support.values.iter().enumerate() {
            let i = support.point(idx);
            let mut log_denominator = T::zero();
            for (k, &h) in self.half_exponents.iter().enumerate() {
                let s = dist_sq(i, &scratch[k * n..(k + 1) * n]);
                if s == 0 {
                    continue 'points;
                }
                log_denominator = log_denominator + h * T::of_count(s).ln();
            }
            acc = acc + v * (-log_denominator).exp();
        }
        acc
    }
}

/// `T_{α,m} b` on every point of `out`.
pub fn apply_t<T: Real>(
    spec: &FractionalSpec,
    b: &LatticeSequence<T>,
    out: &CubeWindow,
) -> Result<OperatorResult<T>> {
    spec.validate().into_result()?;
    check_dims(spec.n, b, out)?;
    let start = Instant::now();
    let support = b.support();
    let plan = KernelPlan::new(spec);
    let scratch_len = spec.m() * spec.n;
    let values: Vec<T> = (0..out.cardinality())
        .into_par_iter()
        .map_init(
            || (vec![0i64; spec.n], vec![0i64; scratch_len]),
            |(j, scratch), idx| {
                out.point_into(idx, j);
                plan.eval(&support, j, scratch)
            },
        )
        .collect();
    Ok(OperatorResult {
        values: LatticeSequence::dense(out.clone(), values)?,
        metadata: ResultMetadata {
            tail_bound: None,
            q: None,
            window: out.clone(),
            spec_hash: spec.hash(),
            default_window: false,
            elapsed_ms: start.elapsed().as_secs_f64() * 1e3,
        },
    })
}

/// `T_{α,m} b(j)` at a single point.
pub fn apply_t_at<T: Real>(spec: &FractionalSpec, b: &LatticeSequence<T>, j: &LatticeIndex) -> Result<T> {
    spec.validate().into_result()?;
    let support = b.support();
    let mut scratch = vec![0; spec.m() * spec.n];
    Ok(KernelPlan::new(spec).eval(&support, &j.0, &mut scratch))
}

/// Discrete Riesz potential `I_α b(j) = Σ_{i ≠ j} b(i)/|i − j|^{n−α}` on `out`.
pub fn apply_riesz<T: Real>(b: &LatticeSequence<T>, alpha: f64, out: &CubeWindow) -> Result<OperatorResult<T>> {
    let n = b.dim();
    if !(alpha > 0.0 && alpha < n as f64) {
        return Err(Error::InvalidParameter(format!("Riesz order α = {alpha} must lie in (0, {n})")));
    }
    check_dims(n, b, out)?;
    let start = Instant::now();
    let support = b.support();
    let half = T::of((n as f64 - alpha) / 2.0);
    let values: Vec<T> = (0..out.cardinality())
        .into_par_iter()
        .map_init(
            || vec![0i64; n],
            |j, idx| {
                out.point_into(idx, j);
                support
                    .points()
                    .zip(&support.values)
                    .filter_map(|(i, &v)| {
                        let s = dist_sq(i, j);
                        (s != 0).then(|| v * (-(half * T::of_count(s).ln())).exp())
                    })
                    .fold(T::zero(), |a, x| a + x)
            },
        )
        .collect();
    Ok(OperatorResult {
        values: LatticeSequence::dense(out.clone(), values)?,
        metadata: ResultMetadata {
            tail_bound: None,
            q: None,
            window: out.clone(),
            spec_hash: FractionalSpec::riesz(n, alpha).hash(),
            default_window: false,
            elapsed_ms: start.elapsed().as_secs_f64() * 1e3,
        },
    })
}
