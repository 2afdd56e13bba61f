//! Discrete Hardy-space maximal function with the Gaussian profile
//! `Φ(x) = e^{−π|x|²}` and the dilates `Φ_t^d(j) = t^{−n}Φ(j/t)`, `Φ_t^d(0) = 0`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::experiments::stats::log_log_slope;
use crate::lattice::{dist_sq, sup_dist, CubeWindow, LatticeIndex};
use crate::scalar::Real;
use crate::sequence::{lp_norm_of, LatticeSequence};

/// Slack on `γ p > n` absorbing the error of the fitted exponent.
pub const DECAY_FIT_MARGIN: f64 = 0.05;

/// Gaussian factors below `e^{−CUTOFF_EXPONENT} = 1e−18` are dropped.
pub const CUTOFF_EXPONENT: f64 = 41.446_531_673_892_82;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SchwartzProfile {
    pub n: usize,
}

impl SchwartzProfile {
    pub fn new(n: usize) -> Self {
        Self { n }
    }

    pub fn eval_sq(&self, x_sq: f64) -> f64 {
        (-std::f64::consts::PI * x_sq).exp()
    }

    pub fn name(&self) -> &'static str {
        "gaussian exp(-pi |x|^2)"
    }
}

/// Geometric grid `t_k = t_min·2^{k/per_octave}`, `t_k ≤ t_max`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DilationGrid {
    pub t_min: f64,
    pub t_max: f64,
    pub per_octave: u32,
}

impl Default for DilationGrid {
    fn default() -> Self {
        Self { t_min: 1.0 / 16.0, t_max: 1024.0, per_octave: 16 }
    }
}

impl DilationGrid {
    pub fn new(t_min: f64, t_max: f64, per_octave: u32) -> Result<Self> {
        let g = Self { t_min, t_max, per_octave };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t_min > 0.0 && self.t_min <= 1.0 && self.t_max >= 1.0 && self.t_max.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "grid needs 0 < t_min ≤ 1 ≤ t_max < ∞, got [{}, {}]",
                self.t_min, self.t_max
            )));
        }
        if self.per_octave == 0 {
            return Err(Error::InvalidParameter("per_octave must be positive".into()));
        }
        Ok(())
    }

    /// Grid points in increasing order. Doubling `per_octave` yields a superset.
    pub fn points(&self) -> Vec<f64> {
        let p = self.per_octave as f64;
        let last = ((self.t_max / self.t_min).log2() * p + 1e-9).floor() as u64;
        (0..=last).map(|k| self.t_min * 2f64.powf(k as f64 / p)).collect()
    }

    pub fn refined(&self) -> Self {
        Self { per_octave: 2 * self.per_octave, ..*self }
    }
}

/// `Φ_t^d(j)`.
pub fn dilated_kernel(t: f64, j: &LatticeIndex) -> Result<f64> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::InvalidParameter(format!("dilation t = {t} must be positive")));
    }
    if j.is_origin() {
        return Ok(0.0);
    }
    let n = j.dim() as i32;
    Ok(t.powi(-n) * SchwartzProfile::new(j.dim()).eval_sq(j.norm_sq() as f64 / (t * t)))
}

/// `max_t |Σ_i Φ_t^d(j − i) b(i)|` over the grid, for `j` in `out`.
pub fn hardy_maximal<T: Real>(
    b: &LatticeSequence<T>,
    grid: &DilationGrid,
    out: &CubeWindow,
) -> Result<LatticeSequence<T>> {
    grid.validate()?;
    if b.dim() != out.dim() {
        return Err(Error::DimensionMismatch { expected: b.dim(), found: out.dim() });
    }
    let n = out.dim() as i32;
    let ts = grid.points();
    let support = b.support();
    let values: Vec<T> = (0..out.cardinality())
        .into_par_iter()
        .map_init(
            || (vec![0i64; out.dim()], Vec::<(f64, f64)>::new()),
            |(j, terms), idx| {
                out.point_into(idx, j);
                terms.clear();
                for (i, v) in support.points().zip(&support.values) {
                    let s = dist_sq(i, j);
                    if s != 0 {
                        terms.push((s as f64, v.as_f64()));
                    }
                }
                let mut best = 0.0f64;
                for &t in &ts {
                    let inv = 1.0 / (t * t);
                    let mut acc = 0.0;
                    for &(s, v) in terms.iter() {
                        let e = std::f64::consts::PI * s * inv;
                        if e <= CUTOFF_EXPONENT {
                            acc += v * (-e).exp();
                        }
                    }
                    best = best.max((acc * t.powi(-n)).abs());
                }
                T::of(best)
            },
        )
        .collect();
    LatticeSequence::dense(out.clone(), values)
}

/// `sup_{t>0} t^{−n} e^{−π|j|²/t²} = (n/(2πe))^{n/2} |j|^{−n}` for `j ≠ 0`.
pub fn delta_maximal_closed_form(n: usize, j_norm: f64) -> f64 {
    let n = n as f64;
    (n / (2.0 * std::f64::consts::PI * std::f64::consts::E)).powf(n / 2.0) * j_norm.powf(-n)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HpEstimate {
    /// `‖b‖_p + (Σ_{window} (M b)^p)^{1/p}`; a lower bound when `divergent`.
    pub value: f64,
    pub lp_norm: f64,
    pub maximal_norm: f64,
    /// Fitted `γ` in `M b(j) ≈ C|j|^{−γ}` near the window boundary.
    pub gamma: f64,
    /// `γ p ≤ n` up to [`DECAY_FIT_MARGIN`]: the exterior sum cannot converge.
    pub divergent: bool,
    pub window: CubeWindow,
    pub grid: DilationGrid,
    pub profile: String,
}

/// Window used by [`hp_quasinorm`] when none is given: centered on the support cube,
/// radius `32·(support radius + 1)`.
pub fn default_hp_window<T: Real>(b: &LatticeSequence<T>) -> CubeWindow {
    match b.support_cube() {
        Some(c) => CubeWindow::new(c.center, 32 * (c.radius + 1)),
        None => CubeWindow::centered_at_origin(b.dim(), 32),
    }
}

/// Shell maxima of `m` at sup-distances `r` from `center`, for the decay fit.
fn shell_profile<T: Real>(m: &LatticeSequence<T>, window: &CubeWindow) -> (Vec<f64>, Vec<f64>) {
    let values = m.dense_values().expect("dense");
    let w = window.radius;
    let mut best = vec![0.0f64; w as usize + 1];
    let mut p = vec![0i64; window.dim()];
    for (idx, v) in values.iter().enumerate() {
        window.point_into(idx, &mut p);
        let r = sup_dist(&p, &window.center.0) as usize;
        best[r] = best[r].max(v.as_f64());
    }
    let lo = (w / 4).max(2);
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    let mut r = lo as f64;
    while r <= w as f64 {
        let k = r.round() as usize;
        if best[k] > 0.0 {
            xs.push(k as f64);
            ys.push(best[k]);
        }
        r *= 1.25;
    }
    (xs, ys)
}

pub fn hp_quasinorm<T: Real>(
    b: &LatticeSequence<T>,
    p: f64,
    grid: &DilationGrid,
    window: Option<&CubeWindow>,
) -> Result<HpEstimate> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::OutOfRange(format!("H^p exponent p = {p} must lie in (0, 1]")));
    }
    let window = window.cloned().unwrap_or_else(|| default_hp_window(b));
    let lp = b.lp_norm(p)?.as_f64();
    let m = hardy_maximal(b, grid, &window)?;
    let maximal_norm = lp_norm_of(m.dense_values().expect("dense").iter().copied(), p)?.as_f64();
    let (gamma, divergent) = if b.is_zero() {
        (f64::INFINITY, false)
    } else {
        let (xs, ys) = shell_profile(&m, &window);
        let gamma = -log_log_slope(&xs, &ys);
        (gamma, !(gamma * p > b.dim() as f64 + DECAY_FIT_MARGIN))
    };
    Ok(HpEstimate {
        value: lp + maximal_norm,
        lp_norm: lp,
        maximal_norm,
        gamma,
        divergent,
        window,
        grid: *grid,
        profile: SchwartzProfile::new(b.dim()).name().into(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::atoms::{make_atom_with, AtomShape};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    #[test]
    fn kernel_values() {
        let j = |x: i64| LatticeIndex(vec![x]);
        assert_eq!(dilated_kernel(3.0, &j(0)).unwrap(), 0.0);
        assert!((dilated_kernel(1.0, &j(1)).unwrap() - 0.0432139).abs() < 1e-7);
        assert!((dilated_kernel(2.0, &j(2)).unwrap() - 0.0216070).abs() < 1e-7);
        assert!(dilated_kernel(0.0, &j(1)).is_err());
        assert!(dilated_kernel(-1.0, &j(1)).is_err());
    }

    #[test]
    fn grid_shape() {
        let g = DilationGrid::default();
        let pts = g.points();
        assert_eq!(pts.len(), 14 * 16 + 1);
        assert_eq!(pts[0], 1.0 / 16.0);
        assert!((pts.last().unwrap() - 1024.0).abs() < 1e-9);
        let fine = g.refined().points();
        assert!(pts.iter().all(|t| fine.contains(t)));
        assert!(DilationGrid::new(2.0, 4.0, 8).is_err());
    }

    #[test]
    fn delta_at_origin_vanishes() {
        let b = LatticeSequence::delta(LatticeIndex(vec![0]), 1.0);
        let m = hardy_maximal(&b, &DilationGrid::default(), &CubeWindow::centered_at_origin(1, 0)).unwrap();
        assert_eq!(m.get(&[0]), 0.0);
    }

    #[test]
    fn delta_optimum() {
        let b = LatticeSequence::delta(LatticeIndex(vec![0]), 1.0);
        let narrow = DilationGrid::new(1.0, 32.0, 16).unwrap();
        for (r, grid) in [(5i64, narrow), (5, DilationGrid::default()), (10, DilationGrid::default()), (20, DilationGrid::default())] {
            let m = hardy_maximal(&b, &grid, &CubeWindow::new(LatticeIndex(vec![r]), 0)).unwrap();
            let exact = (2.0 * PI * std::f64::consts::E).powf(-0.5) / r as f64;
            assert!((exact - delta_maximal_closed_form(1, r as f64)).abs() < 1e-15);
            let got = m.get(&[r]);
            assert!(got <= exact * (1.0 + 1e-12) && got >= 0.99 * exact, "{got} vs {exact}");
        }
        assert!((delta_maximal_closed_form(1, 5.0) - 0.0483942).abs() < 1e-7);
    }

    #[test]
    fn homogeneity_positivity_and_refinement() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let w = CubeWindow::centered_at_origin(2, 3);
        let b = LatticeSequence::from_fn(w.clone(), |_| rng.random_range(-1.0f64..1.0));
        let out = CubeWindow::centered_at_origin(2, 6);
        let grid = DilationGrid::new(0.25, 64.0, 4).unwrap();
        let m = hardy_maximal(&b, &grid, &out).unwrap();
        let m3 = hardy_maximal(&b.scale(-3.0), &grid, &out).unwrap();
        for (x, y) in m.dense_values().unwrap().iter().zip(m3.dense_values().unwrap()) {
            assert!((3.0 * x - y).abs() <= 1e-12 * y.abs().max(1e-300));
        }
        let fine = hardy_maximal(&b, &grid.refined(), &out).unwrap();
        for (x, y) in m.dense_values().unwrap().iter().zip(fine.dense_values().unwrap()) {
            assert!(y >= x);
        }
        let pos = hardy_maximal(&b.abs(), &grid, &out).unwrap();
        assert!(pos.dense_values().unwrap().iter().all(|&v| v >= 0.0));
    }

    #[test]
    fn quasinorm_cases() {
        let grid = DilationGrid::default();
        let zero = LatticeSequence::<f64>::zero(1);
        let e = hp_quasinorm(&zero, 1.0, &grid, None).unwrap();
        assert_eq!(e.value, 0.0);
        assert!(!e.divergent);

        let delta = LatticeSequence::delta(LatticeIndex(vec![0]), 1.0);
        let e = hp_quasinorm(&delta, 1.0, &grid, Some(&CubeWindow::centered_at_origin(1, 200))).unwrap();
        assert!(e.divergent, "gamma = {}", e.gamma);
        assert!((e.gamma - 1.0).abs() < 0.1);

        let a = make_atom_with(&CubeWindow::centered_at_origin(1, 4), 1.0, 2, AtomShape::Coarse).unwrap();
        let e = hp_quasinorm(&a.sequence, 1.0, &grid, Some(&CubeWindow::centered_at_origin(1, 160))).unwrap();
        let e2 = hp_quasinorm(&a.sequence, 1.0, &grid, Some(&CubeWindow::centered_at_origin(1, 320))).unwrap();
        assert!(!e.divergent && e.gamma >= 1.9, "gamma = {}", e.gamma);
        assert!((e2.value - e.value).abs() <= 0.02 * e.value, "{} vs {}", e.value, e2.value);
    }
}
