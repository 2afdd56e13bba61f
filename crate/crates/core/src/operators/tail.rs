//! Lattice tail sums `Σ_{|j|_∞ ≥ N} |j|^{−(n+ε)}` and their explicit majorant.
//!
//! [`tail_sum_enclosure`] sums the shells `N ≤ |j|_∞ < R` directly (over the
//! fundamental domain of the hyperoctahedral group, with multiplicities) and
//! replaces the rest by the integral over `{|x|_∞ ≥ R − 1/2}`, the union of
//! the unit cells of the omitted points. The cell-wise midpoint error is
//! bounded through the Hessian of `|x|^{−s}`, and the resulting lattice sum of
//! `|j|^{−(s+2)}` through the mean-value inequality for the subharmonic
//! function `|x|^{−(s+2)}` on the balls `B(j, 1/2)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::DoubleWord;

/// Cap on directly summed fundamental-domain points.
const DIRECT_POINT_BUDGET: f64 = 2e7;

/// Lemma-style explicit majorant of the tail sum.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailEstimate {
    pub epsilon: f64,
    pub radius: u64,
    pub bound: f64,
}

/// `2ⁿ n^{n+ε} (2 + 2^{ε/n} n/ε)ⁿ N^{−ε}`.
pub fn lemma_tail_bound(n: usize, epsilon: f64, radius: u64) -> Result<TailEstimate> {
    check_args(n, epsilon, radius)?;
    let nf = n as f64;
    let bound = 2f64.powi(n as i32)
        * nf.powf(nf + epsilon)
        * (2.0 + 2f64.powf(epsilon / nf) * nf / epsilon).powi(n as i32)
        * (radius as f64).powf(-epsilon);
    Ok(TailEstimate { epsilon, radius, bound })
}

fn check_args(n: usize, epsilon: f64, radius: u64) -> Result<()> {
    if n == 0 {
        return Err(Error::InvalidParameter("dimension must be at least 1".into()));
    }
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::InvalidParameter(format!("ε must be positive, got {epsilon}")));
    }
    if radius == 0 {
        return Err(Error::InvalidParameter("tail radius N must be at least 1".into()));
    }
    Ok(())
}

/// Two-sided enclosure: the true sum lies in `value ± abs_error`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailSum {
    pub value: f64,
    pub abs_error: f64,
    /// Shells `|j|_∞ < cutoff` were summed directly.
    pub cutoff: u64,
}

impl TailSum {
    pub fn upper(&self) -> f64 {
        self.value + self.abs_error
    }
}

/// `Σ_{|j|_∞ ≥ N} |j|^{−(n+ε)}` to within `precision`.
pub fn tail_sum(n: usize, epsilon: f64, radius: u64, precision: f64) -> Result<f64> {
    tail_sum_enclosure(n, epsilon, radius, precision).map(|t| t.value)
}

pub fn tail_sum_enclosure(n: usize, epsilon: f64, radius: u64, precision: f64) -> Result<TailSum> {
    check_args(n, epsilon, radius)?;
    if !(precision > 0.0) {
        return Err(Error::InvalidParameter(format!("precision must be positive, got {precision}")));
    }
    let mut cutoff = radius.max(min_cutoff(n));
    let mut err = remainder_error(n, epsilon, cutoff);
    if err >= precision {
        // err ~ K·R^{−(ε+2)}
        let scale = (err / precision).powf(1.0 / (epsilon + 2.0));
        cutoff = ((cutoff as f64) * scale * 1.05).ceil() as u64;
        err = remainder_error(n, epsilon, cutoff);
        while err >= precision {
            cutoff = cutoff + cutoff / 8 + 1;
            err = remainder_error(n, epsilon, cutoff);
        }
    }
    let points = (cutoff as f64).powi(n as i32) / factorial(n);
    if points > DIRECT_POINT_BUDGET {
        return Err(Error::BudgetExceeded(format!(
            "precision {precision} needs direct summation to radius {cutoff} in dimension {n}"
        )));
    }
    let direct = shell_sum(n, epsilon, radius, cutoff);
    let integral = cube_exterior_integral(n, epsilon) * (cutoff as f64 - 0.5).powf(-epsilon);
    let value = direct + integral;
    Ok(TailSum { value, abs_error: err + 1e-15 * value, cutoff })
}

/// Certified upper bound on the tail sum: the smaller of the explicit
/// majorant and the enclosure's upper end.
pub fn tail_sum_upper(n: usize, epsilon: f64, radius: u64) -> Result<f64> {
    let lemma = lemma_tail_bound(n, epsilon, radius)?.bound;
    let estimate = cube_exterior_integral(n, epsilon) * (radius as f64 - 0.5).max(0.5).powf(-epsilon);
    let enclosure = tail_sum_enclosure(n, epsilon, radius, 1e-4 * estimate.min(lemma));
    Ok(match enclosure {
        Ok(t) => t.upper().min(lemma),
        Err(_) => lemma,
    })
}

/// Smallest cutoff for which the cells of `|j|_∞ ≥ R` keep a positive distance to the origin.
fn min_cutoff(n: usize) -> u64 {
    ((n as f64).sqrt()).ceil() as u64 + 1
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// Bound on `|Σ_{|j|_∞ ≥ R} f(j) − ∫_{|x|_∞ ≥ R−1/2} f|` for `f = |x|^{−(n+ε)}`.
fn remainder_error(n: usize, epsilon: f64, cutoff: u64) -> f64 {
    let nf = n as f64;
    let s = nf + epsilon;
    let r = cutoff as f64;
    let shrink = 1.0 - nf.sqrt() / (2.0 * r);
    let lattice_bound = cube_exterior_integral(n, epsilon + 2.0) * (r - 0.5).powf(-(epsilon + 2.0))
        / half_ball_volume(n);
    nf / 24.0 * s * (s + 1.0) * shrink.powf(-(s + 2.0)) * lattice_bound
}

/// Volume of the ball of radius 1/2 in ℝⁿ.
fn half_ball_volume(n: usize) -> f64 {
    // π^{n/2} / Γ(n/2 + 1) · 2^{−n}
    let nf = n as f64;
    let gamma = if n % 2 == 0 {
        factorial(n / 2)
    } else {
        // Γ(k + 1/2) = (2k)! √π / (4^k k!)
        let k = (n + 1) / 2;
        factorial(2 * k) * std::f64::consts::PI.sqrt() / (4f64.powi(k as i32) * factorial(k))
    };
    std::f64::consts::PI.powf(nf / 2.0) / gamma * 0.5f64.powi(n as i32)
}

/// `∫_{|x|_∞ ≥ 1} |x|^{−(n+ε)} dx = (2n/ε) ∫_{[−1,1]^{n−1}} (1+|z|²)^{−(n+ε)/2} dz`.
pub(crate) fn cube_exterior_integral(n: usize, epsilon: f64) -> f64 {
    let nf = n as f64;
    if n == 1 {
        return 2.0 / epsilon;
    }
    let (nodes, weights) = gauss_legendre_unit(32);
    let d = n - 1;
    let expo = -(nf + epsilon) / 2.0;
    // integrate over [0,1]^{d} and reflect
    let mut idx = vec![0usize; d];
    let mut total = 0.0;
    loop {
        let mut w = 1.0;
        let mut r2 = 1.0;
        for &k in &idx {
            w *= weights[k];
            r2 += nodes[k] * nodes[k];
        }
        total += w * r2.powf(expo);
        let mut axis = 0;
        loop {
            if axis == d {
                return 2.0 * nf / epsilon * 2f64.powi(d as i32) * total;
            }
            idx[axis] += 1;
            if idx[axis] < nodes.len() {
                break;
            }
            idx[axis] = 0;
            axis += 1;
        }
    }
}

/// Gauss–Legendre rule on `[0, 1]`.
fn gauss_legendre_unit(m: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = Vec::with_capacity(m);
    let mut weights = Vec::with_capacity(m);
    for k in 0..m {
        let mut x = (std::f64::consts::PI * (k as f64 + 0.75) / (m as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for l in 2..=m {
                let lf = l as f64;
                let p2 = ((2.0 * lf - 1.0) * x * p1 - (lf - 1.0) * p0) / lf;
                p0 = p1;
                p1 = p2;
            }
            dp = m as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes.push(0.5 * (x + 1.0));
        weights.push(1.0 / ((1.0 - x * x) * dp * dp));
    }
    (nodes, weights)
}

/// `Σ_{lo ≤ |j|_∞ < hi} |j|^{−(n+ε)}` over sorted nonnegative representatives
/// `j₁ ≥ j₂ ≥ … ≥ j_n ≥ 0`, each weighted by its orbit size.
fn shell_sum(n: usize, epsilon: f64, lo: u64, hi: u64) -> f64 {
    if hi <= lo {
        return 0.0;
    }
    let half = -(n as f64 + epsilon) / 2.0;
    let orbit_perm = factorial(n);
    let mut acc = DoubleWord::<f64>::zero();
    let mut coords = vec![0u64; n];
    for top in lo..hi {
        coords[0] = top;
        for c in coords.iter_mut().skip(1) {
            *c = 0;
        }
        // enumerate non-increasing tails coords[1..] ≤ top in lexicographic order
        loop {
            let mut sq: u128 = 0;
            let mut nonzero = 0;
            let mut perms = orbit_perm;
            let mut run = 1usize;
            for k in 0..n {
                let c = coords[k] as u128;
                sq += c * c;
                if coords[k] != 0 {
                    nonzero += 1;
                }
                if k > 0 && coords[k] == coords[k - 1] {
                    run += 1;
                    perms /= run as f64;
                } else {
                    run = 1;
                }
            }
            let weight = perms * 2f64.powi(nonzero);
            acc = acc.add(DoubleWord::from_value(weight * (sq as f64).powf(half)));
            // next tail: increment last coordinate that can grow, reset the rest to 0
            let mut k = n;
            loop {
                k -= 1;
                if k == 0 {
                    break;
                }
                if coords[k] < coords[k - 1] {
                    coords[k] += 1;
                    for c in coords.iter_mut().skip(k + 1) {
                        *c = 0;
                    }
                    break;
                }
            }
            if k == 0 {
                break;
            }
        }
    }
    acc.value()
}
