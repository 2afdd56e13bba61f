//! Empirical `ℓ^p → ℓ^q` ratios for `T` and for the fractional maximal operator.

use std::time::Instant;

use rand::Rng;
use rand_distr::{Distribution, Pareto};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::report::{Check, ExperimentReport, Record};
use super::stats::log_log_slope;
use super::{elapsed_ms, spec_parameters, trial_rng};
use crate::error::{Error, Result};
use crate::exponent::conjugate_exponent;
use crate::lattice::CubeWindow;
use crate::operators::kernel::apply_t;
use crate::operators::maximal::fractional_maximal_fast;
use crate::operators::truncation::{truncated_lq_norm, InputDecay};
use crate::sequence::LatticeSequence;
use crate::spec::FractionalSpec;

/// Allowed log-log slope of the per-radius maximum ratio.
pub const FLAT_SLOPE: f64 = 0.1;
/// Records must stay within this factor of the smallest-radius maximum.
pub const ENVELOPE_FACTOR: f64 = 2.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SequenceFamily {
    /// i.i.d. uniform on `[−1, 1]`.
    Uniform,
    /// i.i.d. symmetrized Pareto with index 3.
    Pareto,
}

impl SequenceFamily {
    pub const ALL: [SequenceFamily; 2] = [SequenceFamily::Uniform, SequenceFamily::Pareto];

    fn draw<R: Rng>(self, rng: &mut R) -> f64 {
        match self {
            SequenceFamily::Uniform => rng.random_range(-1.0..=1.0),
            SequenceFamily::Pareto => {
                let x: f64 = Pareto::new(1.0, 3.0).expect("valid").sample(rng);
                if rng.random_bool(0.5) {
                    x
                } else {
                    -x
                }
            }
        }
    }

    fn name(self) -> &'static str {
        match self {
            SequenceFamily::Uniform => "uniform",
            SequenceFamily::Pareto => "pareto3",
        }
    }
}

fn random_sequence<R: Rng>(n: usize, radius: u64, family: SequenceFamily, rng: &mut R) -> LatticeSequence<f64> {
    LatticeSequence::from_fn(CubeWindow::centered_at_origin(n, radius), |_| family.draw(rng))
}

/// Output window for a support of radius `r`.
fn ratio_window(n: usize, r: u64) -> CubeWindow {
    CubeWindow::centered_at_origin(n, 16 * r + 64)
}

fn check_pair(p: f64, alpha: f64, n: usize) -> Result<f64> {
    if !(p > 1.0) || (alpha > 0.0 && p >= n as f64 / alpha) {
        return Err(Error::OutOfRange(format!("need 1 < p < n/α, got p = {p}, α = {alpha}, n = {n}")));
    }
    conjugate_exponent(p, alpha, n)
}

struct Trial {
    family: SequenceFamily,
    radius: u64,
    index: u64,
}

fn trials(radii: &[u64], count: usize) -> Vec<Trial> {
    let mut out = Vec::new();
    for family in SequenceFamily::ALL {
        for &radius in radii {
            for _ in 0..count {
                out.push(Trial { family, radius, index: out.len() as u64 });
            }
        }
    }
    out
}

/// Turns `(trial, ‖Ob‖_q upper, ‖b‖_p)` triples into records and slope checks.
fn finish(
    report: &mut ExperimentReport,
    plan: &[Trial],
    results: Vec<(f64, f64, Vec<(String, f64)>)>,
    radii: &[u64],
) {
    if plan.is_empty() {
        return;
    }
    let ratio: Vec<f64> = results.iter().map(|(m, b, _)| m / b).collect();
    let r0 = *radii.iter().min().expect("nonempty");
    let base = plan
        .iter()
        .zip(&ratio)
        .filter(|(t, _)| t.radius == r0)
        .map(|(_, r)| *r)
        .fold(0.0, f64::max);
    let envelope = ENVELOPE_FACTOR * base;
    for ((t, (measured, bnorm, extras)), r) in plan.iter().zip(results).zip(&ratio) {
        let mut rec = Record::new(format!("family={} radius={}", t.family.name(), t.radius), t.index, measured, envelope * bnorm)
            .with("ratio_to_lp", *r);
        rec.extras.extend(extras);
        report.records.push(rec);
    }
    let mut sorted: Vec<u64> = radii.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    for family in SequenceFamily::ALL {
        let maxima: Vec<f64> = sorted
            .iter()
            .map(|&rad| {
                plan.iter()
                    .zip(&ratio)
                    .filter(|(t, _)| t.family == family && t.radius == rad)
                    .map(|(_, r)| *r)
                    .fold(0.0, f64::max)
            })
            .collect();
        let xs: Vec<f64> = sorted.iter().map(|&r| r as f64).collect();
        if xs.len() >= 2 {
            let slope = log_log_slope(&xs, &maxima);
            report.checks.push(Check::at_most(format!("slope[{}]", family.name()), slope, FLAT_SLOPE));
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LplqParams {
    pub p: f64,
    pub trials: usize,
    pub radii: Vec<u64>,
    pub seed: u64,
}

/// `‖T b‖_q / ‖b‖_p` for random `b` on growing cubes; `q` from `1/q = 1/p − α/n`.
pub fn run_lplq(spec: &FractionalSpec, params: &LplqParams) -> Result<ExperimentReport> {
    let start = Instant::now();
    spec.validate().into_result()?;
    let q = check_pair(params.p, spec.alpha, spec.n)?;
    if params.radii.is_empty() {
        return Err(Error::InvalidParameter("at least one support radius is needed".into()));
    }
    let plan = trials(&params.radii, params.trials);
    let results: Vec<(f64, f64, Vec<(String, f64)>)> = plan
        .par_iter()
        .map(|t| {
            let mut rng = trial_rng(params.seed, t.index);
            let b = random_sequence(spec.n, t.radius, t.family, &mut rng);
            let out = apply_t(spec, &b, &ratio_window(spec.n, t.radius))?;
            let lq = truncated_lq_norm(&out, q, &b, spec, &InputDecay::Generic)?;
            let extras = vec![("window_norm".to_string(), lq.norm), ("tail".to_string(), lq.tail)];
            Ok((lq.total_upper(q), b.lp_norm(params.p)?, extras))
        })
        .collect::<Result<_>>()?;
    let mut report = ExperimentReport::new(
        "lplq",
        Some(params.seed),
        serde_json::json!({ "spec": spec_parameters(spec), "p": params.p, "q": q, "trials": params.trials, "radii": params.radii }),
        "||T b||_q (window + certified tail) <= 2 * (max ratio at smallest radius) * ||b||_p; slope of max ratio vs radius <= 0.1 (empirical threshold)",
    );
    finish(&mut report, &plan, results, &params.radii);
    report.wall_time_ms = elapsed_ms(start);
    Ok(report)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MaximalBoundParams {
    pub n: usize,
    pub p: f64,
    pub alpha: f64,
    pub trials: usize,
    pub radii: Vec<u64>,
    pub seed: u64,
}

/// Bound on `Σ_{|j|_∞ > W} (M_α b(j))^q` for `b` supported in `|i|_∞ ≤ r < W`.
///
/// A cube about `j` meets the support only if its radius is at least `s − r`
/// (`s = |j|_∞`), so `M_α b(j) ≤ ‖b‖₁ (2(s−r)+1)^{−(n−α)}`; the shell has at most
/// `2n(2s+1)^{n−1}` points and `2s+1 ≤ κ(2(s−r)+1)` with `κ = (2W+3)/(2(W−r)+3)`.
/// Summing over odd `u = 2(s−r)+1 ≥ u₀` gives `≤ 2nκ^{n−1}(u₀^{−1−ε} + u₀^{−ε}/(2ε))`.
pub fn maximal_exterior_bound(n: usize, alpha: f64, q: f64, l1: f64, r: u64, w: u64) -> f64 {
    let nf = n as f64;
    let eps = (nf - alpha) * q - nf;
    let u0 = 2.0 * (w - r) as f64 + 3.0;
    let kappa = (2.0 * w as f64 + 3.0) / u0;
    l1.powf(q) * 2.0 * nf * kappa.powf(nf - 1.0) * (u0.powf(-1.0 - eps) + u0.powf(-eps) / (2.0 * eps))
}

/// `‖M_α b‖_q / ‖b‖_p` for random `b`.
pub fn run_maximal_bound(params: &MaximalBoundParams) -> Result<ExperimentReport> {
    let start = Instant::now();
    let n = params.n;
    let q = check_pair(params.p, params.alpha, n)?;
    if params.alpha == 0.0 {
        return Err(Error::OutOfRange("the maximal-bound experiment needs α > 0".into()));
    }
    if params.radii.is_empty() {
        return Err(Error::InvalidParameter("at least one support radius is needed".into()));
    }
    let plan = trials(&params.radii, params.trials);
    let results: Vec<(f64, f64, Vec<(String, f64)>)> = plan
        .par_iter()
        .map(|t| {
            let mut rng = trial_rng(params.seed, t.index);
            let b = random_sequence(n, t.radius, t.family, &mut rng);
            let w = ratio_window(n, t.radius);
            let m = fractional_maximal_fast(&b, params.alpha, &w)?;
            let mass: f64 = m.dense_values().expect("dense").iter().map(|v| v.powf(q)).sum();
            let tail = maximal_exterior_bound(n, params.alpha, q, b.l1_norm(), t.radius, w.radius);
            let extras = vec![("window_norm".to_string(), mass.powf(1.0 / q)), ("tail".to_string(), tail)];
            Ok(((mass + tail).powf(1.0 / q), b.lp_norm(params.p)?, extras))
        })
        .collect::<Result<_>>()?;
    let mut report = ExperimentReport::new(
        "maximal-bound",
        Some(params.seed),
        serde_json::to_value(params).expect("serializes"),
        "||M_alpha b||_q (window + certified shell tail) <= 2 * (max ratio at smallest radius) * ||b||_p; slope <= 0.1 (empirical threshold)",
    );
    finish(&mut report, &plan, results, &params.radii);
    report.wall_time_ms = elapsed_ms(start);
    Ok(report)
}
