//! Four-set decomposition of `T_{0,2} b(j₀)` around the images `A₁j₀`, `A₂j₀`.
//!
//! With `d` a lower bound for `min_{|x|=1} |(A₁ − A₂)x|` and `D` an upper
//! bound for `max(‖A₁‖, ‖A₂‖)`:
//!
//! * `I_k = {i : 0 < |i − A_k j₀| ≤ (d/2)|j₀|}` for `k = 1, 2`
//!   (a point on both closed balls is assigned to `I₁`),
//! * `I₃ = {|i| < 2√n D |j₀|}` minus `I₁ ∪ I₂`,
//! * `I₄ = {|i| ≥ 2√n D |j₀|}` minus `I₁ ∪ I₂`.
//!
//! Both thresholds are squared rationals, so membership is decided exactly.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{dist_sq, norm_sq, CubeWindow, LatticeIndex};
use crate::matrix::matrix_norm_bounds;
use crate::operators::maximal::fractional_maximal;
use crate::scalar::Real;
use crate::sequence::LatticeSequence;
use crate::spec::FractionalSpec;

/// `2^{α₂+2α₁} Σ_{k≥0} 2^{−α₂k} = 2^{α₂+2α₁}/(1 − 2^{−α₂})`.
pub fn near_image_constant(alpha_near: f64, alpha_far: f64) -> f64 {
    2f64.powf(alpha_far + 2.0 * alpha_near) / (1.0 - 2f64.powf(-alpha_far))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegionDiagnostic {
    pub j0: LatticeIndex,
    /// Signed partial sums of `T b(j₀)` over `I₁..I₄`.
    pub signed: [f64; 4],
    /// Partial sums of `|b(i)| / Π|i − A_k j₀|^{α_k}` over `I₁..I₄`.
    pub absolute: [f64; 4],
    /// Support points falling in each set.
    pub counts: [usize; 4],
    /// `T b(j₀)` evaluated directly.
    pub total: f64,
    pub d_sep: f64,
    pub d_fwd: f64,
    /// `(Mb)(A₁j₀)`, `(Mb)(A₂j₀)`, `(Mb)(j₀)` with the centered maximal operator.
    pub maximal: [f64; 3],
    /// Constants multiplying the maximal values in the `I₁`, `I₂`, `I₃` majorants.
    pub constants: [f64; 3],
    pub majorants: [f64; 3],
    pub lp_norm: f64,
    pub p: f64,
    /// `‖b‖_p |j₀|^{−n/p}`.
    pub far_scale: f64,
    /// `absolute[3] / far_scale`: the constant the far-field estimate needs at this draw.
    pub far_constant: f64,
}

impl RegionDiagnostic {
    pub fn majorant_holds(&self, k: usize) -> bool {
        self.absolute[k] <= self.majorants[k] * (1.0 + 1e-9)
    }
}

/// Exact threshold test `lhs_sq · den ≤ num · rhs_sq` (or `<`).
#[derive(Clone, Debug)]
struct SquaredThreshold {
    num: BigInt,
    den: BigInt,
}

impl SquaredThreshold {
    fn new(r: &BigRational) -> Self {
        Self { num: r.numer().clone(), den: r.denom().clone() }
    }

    fn cmp(&self, lhs_sq: u128, rhs_sq: u128) -> std::cmp::Ordering {
        (BigInt::from(lhs_sq) * &self.den).cmp(&(BigInt::from(rhs_sq) * &self.num))
    }
}

/// Which of `I₁..I₄` contains `i` (0-based), or `None` for `A₁j₀`, `A₂j₀`.
pub(crate) struct Partition {
    a1j: Vec<i64>,
    a2j: Vec<i64>,
    j0_sq: u128,
    /// `d²/4`
    near: SquaredThreshold,
    /// `4 n D²`
    far: SquaredThreshold,
}

impl Partition {
    fn new(spec: &FractionalSpec, j0: &[i64]) -> Result<(Self, f64, f64)> {
        let diff = spec.matrices[0].sub(&spec.matrices[1])?;
        let sep = matrix_norm_bounds(&diff);
        if !sep.lower_sq.is_positive() {
            return Err(Error::InvalidSpec(vec!["A_1 − A_2 is singular".into()]));
        }
        let (d_fwd, d_fwd_sq) = spec.d_fwd();
        let four = BigRational::from_integer(4.into());
        let near = SquaredThreshold::new(&(&sep.lower_sq / &four));
        let far = SquaredThreshold::new(&(four * BigRational::from_integer(spec.n.into()) * d_fwd_sq));
        Ok((
            Self {
                a1j: spec.matrices[0].apply(j0),
                a2j: spec.matrices[1].apply(j0),
                j0_sq: norm_sq(j0),
                near,
                far,
            },
            sep.lower,
            d_fwd,
        ))
    }

    fn classify(&self, i: &[i64]) -> Option<usize> {
        use std::cmp::Ordering::*;
        let s1 = dist_sq(i, &self.a1j);
        let s2 = dist_sq(i, &self.a2j);
        if s1 == 0 || s2 == 0 {
            return None;
        }
        if self.near.cmp(s1, self.j0_sq) != Greater {
            return Some(0);
        }
        if self.near.cmp(s2, self.j0_sq) != Greater {
            return Some(1);
        }
        if self.far.cmp(norm_sq(i), self.j0_sq) == Less {
            Some(2)
        } else {
            Some(3)
        }
    }
}

fn ensure_alpha0_pair(spec: &FractionalSpec) -> Result<()> {
    spec.validate().into_result()?;
    if spec.alpha != 0.0 || spec.m() != 2 {
        return Err(Error::InvalidParameter(format!(
            "region decomposition needs α = 0 and m = 2, got α = {} and m = {}",
            spec.alpha,
            spec.m()
        )));
    }
    Ok(())
}

fn maximal_at<T: Real>(b: &LatticeSequence<T>, x: &[i64]) -> Result<f64> {
    let w = CubeWindow::new(LatticeIndex(x.to_vec()), 0);
    Ok(fractional_maximal(b, 0.0, &w)?.get(x).as_f64())
}

/// Decomposes `T_{0,2} b(j₀)` over `I₁..I₄` and evaluates the majorants.
/// `p` is the exponent of the far-field scale `‖b‖_p |j₀|^{−n/p}`.
pub fn region_decompose_alpha0<T: Real>(
    spec: &FractionalSpec,
    b: &LatticeSequence<T>,
    j0: &LatticeIndex,
    p: f64,
) -> Result<RegionDiagnostic> {
    ensure_alpha0_pair(spec)?;
    if j0.is_origin() {
        return Err(Error::InvalidParameter("j₀ must be nonzero (the auxiliary operator vanishes at 0)".into()));
    }
    if j0.dim() != spec.n || b.dim() != spec.n {
        return Err(Error::DimensionMismatch { expected: spec.n, found: j0.dim().min(b.dim()) });
    }
    let (part, d_sep, d_fwd) = Partition::new(spec, &j0.0)?;
    let (a1, a2) = (spec.exponents[0], spec.exponents[1]);
    let support = b.support();
    let mut signed = [0.0; 4];
    let mut absolute = [0.0; 4];
    let mut counts = [0usize; 4];
    let mut total = 0.0;
    for (i, v) in support.points().zip(&support.values) {
        let Some(k) = part.classify(i) else { continue };
        let s1 = dist_sq(i, &part.a1j) as f64;
        let s2 = dist_sq(i, &part.a2j) as f64;
        let kernel = (-(a1 / 2.0 * s1.ln() + a2 / 2.0 * s2.ln())).exp();
        let term = v.as_f64() * kernel;
        signed[k] += term;
        absolute[k] += term.abs();
        counts[k] += 1;
        total += term;
    }
    let n = spec.n as f64;
    let j0_norm = (part.j0_sq as f64).sqrt();
    let maximal = [maximal_at(b, &part.a1j)?, maximal_at(b, &part.a2j)?, maximal_at(b, &j0.0)?];
    let c1 = near_image_constant(a1, a2);
    let c2 = near_image_constant(a2, a1);
    // Σ_{I₃} ≤ (2/d)ⁿ|j₀|^{−n} Σ_{|i − j₀| ≤ (2√nD+1)|j₀|}|b| ≤ (2/d)ⁿ|j₀|^{−n}(2R+1)ⁿ (Mb)(j₀)
    let ball = ((2.0 * n.sqrt() * d_fwd + 1.0) * j0_norm).ceil();
    let c3 = (2.0 / d_sep).powf(n) * j0_norm.powf(-n) * (2.0 * ball + 1.0).powf(n);
    let constants = [c1, c2, c3];
    let majorants = [c1 * maximal[0], c2 * maximal[1], c3 * maximal[2]];
    let lp_norm = b.lp_norm(p)?.as_f64();
    let far_scale = lp_norm * j0_norm.powf(-n / p);
    let far_constant = if far_scale > 0.0 { absolute[3] / far_scale } else { 0.0 };
    Ok(RegionDiagnostic {
        j0: j0.clone(),
        signed,
        absolute,
        counts,
        total,
        d_sep,
        d_fwd,
        maximal,
        constants,
        majorants,
        lp_norm,
        p,
        far_scale,
        far_constant,
    })
}

/// Window-restricted superlevel counts of the `I₄` part:
/// `#{j ≠ 0 in window : |Σ_{i ∈ I₄(j)} b(i)/Π|i − A_k j|^{α_k}| > λ}` for each `λ`.
pub fn far_part_superlevel_counts<T: Real>(
    spec: &FractionalSpec,
    b: &LatticeSequence<T>,
    window: &CubeWindow,
    lambdas: &[f64],
) -> Result<Vec<usize>> {
    ensure_alpha0_pair(spec)?;
    let support = b.support();
    let (a1, a2) = (spec.exponents[0], spec.exponents[1]);
    let mut counts = vec![0usize; lambdas.len()];
    for j in window.iter() {
        if j.is_origin() {
            continue;
        }
        let (part, _, _) = Partition::new(spec, &j.0)?;
        let mut acc = 0.0;
        for (i, v) in support.points().zip(&support.values) {
            if part.classify(i) != Some(3) {
                continue;
            }
            let s1 = dist_sq(i, &part.a1j) as f64;
            let s2 = dist_sq(i, &part.a2j) as f64;
            acc += v.as_f64() * (-(a1 / 2.0 * s1.ln() + a2 / 2.0 * s2.ln())).exp();
        }
        for (c, &l) in counts.iter_mut().zip(lambdas) {
            if acc.abs() > l {
                *c += 1;
            }
        }
    }
    Ok(counts)
}

/// `Σ_{k=0}^{terms-1} 2^{−α k}`, used to cross-check the closed form.
pub fn geometric_partial_sum(alpha: f64, terms: usize) -> f64 {
    (0..terms).map(|k| 2f64.powf(-alpha * k as f64)).sum()
}

/// Exact lower bound `d` as an `f64` for reporting.
pub fn separation_lower_bound(spec: &FractionalSpec) -> Result<f64> {
    let diff = spec.matrices.first().zip(spec.matrices.get(1)).ok_or_else(|| {
        Error::InvalidParameter("separation needs two matrices".into())
    })?;
    let d = diff.0.sub(diff.1)?;
    Ok(matrix_norm_bounds(&d).lower_sq.to_f64().unwrap_or(0.0).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn reflection_pair_sets() {
        let spec = FractionalSpec::reflection_pair();
        assert_eq!(separation_lower_bound(&spec).unwrap(), 2.0);
        let j0 = [5i64];
        let (part, d, _) = Partition::new(&spec, &j0).unwrap();
        assert_eq!(d, 2.0);
        for i in -40i64..=40 {
            let expect_near1 = i != 5 && (i - 5).abs() <= 5;
            let expect_near2 = !expect_near1 && i != -5 && (i + 5).abs() <= 5;
            let got = part.classify(&[i]);
            if i == 5 || i == -5 {
                assert_eq!(got, None);
            } else if expect_near1 {
                assert_eq!(got, Some(0), "i = {i}");
            } else if expect_near2 {
                assert_eq!(got, Some(1), "i = {i}");
            } else if (i.abs() as f64) < 10.0 {
                assert_eq!(got, Some(2));
            } else {
                assert_eq!(got, Some(3));
            }
        }
        // the origin lies on both closed balls and goes to I₁
        assert_eq!(part.classify(&[0]), Some(0));
    }

    #[test]
    fn closed_form_constant() {
        let c = near_image_constant(0.5, 0.5);
        let series = 2f64.powf(1.5) * geometric_partial_sum(0.5, 60);
        assert!((c - 9.656854).abs() < 1e-6);
        assert!((c - series).abs() < 1e-8 * c);
    }

    #[test]
    fn partition_completeness_and_majorants() {
        let spec = FractionalSpec::reflection_pair();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..50 {
            let w = CubeWindow::centered_at_origin(1, 40);
            let b = LatticeSequence::from_fn(w, |_| rng.random_range(-1.0..1.0));
            let j0 = LatticeIndex(vec![rng.random_range(1..30) * if rng.random_bool(0.5) { 1 } else { -1 }]);
            let d = region_decompose_alpha0(&spec, &b, &j0, 2.0).unwrap();
            let sum: f64 = d.signed.iter().sum();
            let direct = crate::operators::kernel::apply_t_at(&spec, &b, &j0).unwrap();
            assert!((sum - direct).abs() <= 1e-12 * d.absolute.iter().sum::<f64>());
            assert!((d.total - direct).abs() <= 1e-12 * d.absolute.iter().sum::<f64>());
            for k in 0..3 {
                assert!(d.majorant_holds(k), "set {k}: {} > {}", d.absolute[k], d.majorants[k]);
            }
        }
    }

    #[test]
    fn far_support_only() {
        let spec = FractionalSpec::reflection_pair();
        let b = LatticeSequence::delta(LatticeIndex(vec![100]), 1.0);
        let d = region_decompose_alpha0(&spec, &b, &LatticeIndex(vec![3]), 2.0).unwrap();
        assert_eq!(&d.absolute[..3], &[0.0, 0.0, 0.0]);
        assert!(d.absolute[3] > 0.0);
    }

    #[test]
    fn rejects_origin_and_wrong_spec() {
        let spec = FractionalSpec::reflection_pair();
        let b = LatticeSequence::delta(LatticeIndex(vec![1]), 1.0);
        assert!(region_decompose_alpha0(&spec, &b, &LatticeIndex(vec![0]), 2.0).is_err());
        let riesz = FractionalSpec::riesz(1, 0.5);
        assert!(region_decompose_alpha0(&riesz, &b, &LatticeIndex(vec![2]), 2.0).is_err());
    }
}
