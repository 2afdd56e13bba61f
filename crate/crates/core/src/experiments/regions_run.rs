//! Majorants of the four-set decomposition over random `(b, j₀)`.

use std::time::Instant;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::report::{Check, ExperimentReport, Record};
use super::{elapsed_ms, spec_parameters, trial_rng};
use crate::error::{Error, Result};
use crate::lattice::{CubeWindow, LatticeIndex};
use crate::operators::regions::{region_decompose_alpha0, RegionDiagnostic};
use crate::sequence::LatticeSequence;
use crate::spec::FractionalSpec;

/// Stability factor for the fitted far-field constant across doublings of `|j₀|`.
pub const FAR_STABILITY: f64 = 2.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegionsParams {
    pub trials: usize,
    pub seed: u64,
    /// `p` in the far-field scale `‖b‖_p |j₀|^{−n/p}`.
    pub p: f64,
    /// `|j₀|_∞` ranges over `[2^k, 2^{k+1})` for `k < octaves`.
    pub octaves: u32,
}

impl RegionsParams {
    pub fn new(trials: usize, seed: u64) -> Self {
        Self { trials, seed, p: 2.0, octaves: 6 }
    }
}

/// One draw: `j₀` with `|j₀|_∞` in octave `trial mod octaves`, and `b` uniform on
/// `[−1, 1]` over a cube of radius `|j₀|_∞·u`, `u ∈ [1, 8]`, about a random
/// point within `|j₀|_∞` of the origin.
fn draw(spec: &FractionalSpec, params: &RegionsParams, trial: u64) -> Result<(u32, RegionDiagnostic)> {
    let mut rng = trial_rng(params.seed, trial);
    let n = spec.n;
    let octave = (trial % params.octaves.max(1) as u64) as u32;
    let mag = rng.random_range(1i64 << octave..1i64 << (octave + 1));
    let mut j0: Vec<i64> = (0..n).map(|_| rng.random_range(-mag..=mag)).collect();
    let axis = rng.random_range(0..n);
    j0[axis] = if rng.random_bool(0.5) { mag } else { -mag };
    let radius = ((mag as f64) * rng.random_range(1.0..8.0)).round() as u64;
    let center: Vec<i64> = (0..n).map(|_| rng.random_range(-mag..=mag)).collect();
    let b = LatticeSequence::from_fn(CubeWindow::new(LatticeIndex(center), radius), |_| rng.random_range(-1.0..=1.0));
    Ok((octave, region_decompose_alpha0(spec, &b, &LatticeIndex(j0), params.p)?))
}

pub fn run_regions(spec: &FractionalSpec, params: &RegionsParams) -> Result<ExperimentReport> {
    let start = Instant::now();
    spec.validate().into_result()?;
    if spec.alpha != 0.0 || spec.m() != 2 {
        return Err(Error::InvalidParameter("the regions experiment needs α = 0 and m = 2".into()));
    }
    let draws: Vec<(u32, RegionDiagnostic)> =
        (0..params.trials as u64).into_par_iter().map(|t| draw(spec, params, t)).collect::<Result<_>>()?;
    let (a1, a2) = (spec.exponents[0], spec.exponents[1]);
    let mut report = ExperimentReport::new(
        "regions",
        Some(params.seed),
        serde_json::json!({ "spec": spec_parameters(spec), "trials": params.trials, "p": params.p, "octaves": params.octaves }),
        "I1: sum <= 2^(a2+2a1)/(1-2^-a2) (Mb)(A1 j0); I2: symmetric; I3: sum <= (2/d)^n |j0|^-n (2 ceil((2 sqrt(n) D + 1)|j0|) + 1)^n (Mb)(j0)",
    );
    report.notes.push(format!(
        "I1 constant {}; I2 constant {}",
        crate::operators::regions::near_image_constant(a1, a2),
        crate::operators::regions::near_image_constant(a2, a1)
    ));
    let mut completeness: f64 = 0.0;
    let mut far_by_octave = vec![0.0f64; params.octaves as usize];
    for (t, (octave, d)) in draws.iter().enumerate() {
        let t = t as u64;
        for (k, label) in ["I1", "I2", "I3"].iter().enumerate() {
            report.records.push(
                Record::new(*label, t, d.absolute[k], d.majorants[k])
                    .with("maximal", d.maximal[k])
                    .with("constant", d.constants[k])
                    .with("j0_norm", (d.j0.norm_sq() as f64).sqrt()),
            );
        }
        let scale: f64 = d.absolute.iter().sum();
        if scale > 0.0 {
            completeness = completeness.max((d.signed.iter().sum::<f64>() - d.total).abs() / scale);
        }
        far_by_octave[*octave as usize] = far_by_octave[*octave as usize].max(d.far_constant);
    }
    if !draws.is_empty() {
        report.checks.push(Check::at_most("partition_completeness", completeness, 1e-12));
        let fitted = far_by_octave.iter().cloned().fold(0.0, f64::max);
        report.checks.push(Check::new("I4_fitted_constant", fitted, "finite", fitted.is_finite()));
        let worst = far_by_octave
            .windows(2)
            .filter(|w| w[0] > 0.0 && w[1] > 0.0)
            .map(|w| (w[1] / w[0]).max(w[0] / w[1]))
            .fold(1.0, f64::max);
        report.checks.push(Check::at_most("I4_doubling_stability", worst, FAR_STABILITY));
        let i3 = draws.iter().map(|(_, d)| d.absolute[2] / d.maximal[2].max(f64::MIN_POSITIVE)).fold(0.0, f64::max);
        report.notes.push(format!("max I3 sum / (Mb)(j0) = {i3}"));
    }
    report.wall_time_ms = elapsed_ms(start);
    Ok(report)
}
