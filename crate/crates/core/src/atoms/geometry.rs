//! The dilated cubes `Q*_k`, their complement `R` and its nearest-center partition.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::atoms::Atom;
use crate::error::{Error, Result};
use crate::lattice::{CubeWindow, LatticeIndex};
use crate::operators::kernel::{apply_t_at, ceil_sqrt_rational};
use crate::operators::maximal::cube_indicator_maximal;
use crate::spec::FractionalSpec;

#[derive(Clone, Debug)]
pub struct RegionGeometry {
    pub cube: CubeWindow,
    /// `A_k⁻¹ i₀` as `(numerators, positive denominator)`.
    pub images: Vec<(Vec<BigInt>, BigInt)>,
    /// `Q*_k` around the nearest lattice point to `A_k⁻¹ i₀`.
    pub dilated: Vec<CubeWindow>,
    /// Common radius `⌈4·D_inv·N⌉ + 1`.
    pub radius: u64,
    /// Matrices, for evaluating `A_l j`.
    matrices: Vec<crate::matrix::IntegerMatrix>,
}

/// Nearest integer to `num/den` (`den > 0`), ties toward −∞: `⌈(2num − den)/(2den)⌉`.
fn round_half_down(num: &BigInt, den: &BigInt) -> BigInt {
    let a: BigInt = num * 2 - den;
    let b: BigInt = den * 2;
    -((-a).div_floor(&b))
}

/// Builds `Q*_k`, `R` and the `R_l` for the atom cube `cube`.
pub fn region_geometry(cube: &CubeWindow, spec: &FractionalSpec) -> Result<RegionGeometry> {
    spec.validate().into_result()?;
    if cube.dim() != spec.n {
        return Err(Error::DimensionMismatch { expected: spec.n, found: cube.dim() });
    }
    let n_sq = BigRational::from_integer(BigInt::from(cube.radius) * BigInt::from(cube.radius));
    let radius = ceil_sqrt_rational(&(BigRational::from_integer(16.into()) * n_sq * spec.d_inv().1)) + 1;
    let mut images = Vec::with_capacity(spec.m());
    let mut dilated = Vec::with_capacity(spec.m());
    for a in &spec.matrices {
        let (mut v, mut det) = a.inverse_apply_scaled(&cube.center.0);
        if det.is_negative() {
            det = -det;
            v.iter_mut().for_each(|x| *x = -x.clone());
        }
        let center: Vec<i64> = v
            .iter()
            .map(|x| {
                round_half_down(x, &det)
                    .to_i64()
                    .ok_or_else(|| Error::OutOfRange("dilated cube center overflows i64".into()))
            })
            .collect::<Result<_>>()?;
        dilated.push(CubeWindow::new(LatticeIndex(center), radius));
        images.push((v, det));
    }
    Ok(RegionGeometry { cube: cube.clone(), images, dilated, radius, matrices: spec.matrices.clone() })
}

impl RegionGeometry {
    pub fn m(&self) -> usize {
        self.dilated.len()
    }

    pub fn in_dilated(&self, j: &[i64]) -> bool {
        self.dilated.iter().any(|c| c.contains(j))
    }

    pub fn in_r(&self, j: &[i64]) -> bool {
        !self.in_dilated(j)
    }

    /// `|det_k j − v_k|²`, i.e. `det_k² |j − A_k⁻¹ i₀|²`.
    fn scaled_dist_sq(&self, k: usize, j: &[i64]) -> BigInt {
        let (v, det) = &self.images[k];
        v.iter()
            .zip(j)
            .map(|(x, &y)| {
                let d = det * BigInt::from(y) - x;
                &d * &d
            })
            .sum()
    }

    /// Nearest center index (smallest among ties), ignoring membership in `R`.
    pub fn nearest(&self, j: &[i64]) -> usize {
        let mut best = 0;
        let mut best_num = self.scaled_dist_sq(0, j);
        let mut best_den = &self.images[0].1 * &self.images[0].1;
        for k in 1..self.m() {
            let num = self.scaled_dist_sq(k, j);
            let den = &self.images[k].1 * &self.images[k].1;
            // num/den < best_num/best_den
            if &num * &best_den < &best_num * &den {
                best = k;
                best_num = num;
                best_den = den;
            }
        }
        best
    }

    /// The `l` with `j ∈ R_l`, or `None` when `j ∉ R`.
    pub fn region_of(&self, j: &[i64]) -> Option<usize> {
        self.in_r(j).then(|| self.nearest(j))
    }

    /// `A_l j`.
    pub fn image(&self, l: usize, j: &[i64]) -> Vec<i64> {
        self.matrices[l].apply(j)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DominationRecord {
    pub j: LatticeIndex,
    /// The `l` with `j ∈ R_l`.
    pub region: usize,
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
}

/// `|T a(j)|` against `‖a‖_∞ (M_{αn/(n+d+1)} χ_Q (A_l j))^{(n+d+1)/n}` on `j ∈ R_l`.
pub fn domination_check(
    spec: &FractionalSpec,
    atom: &Atom,
    geometry: &RegionGeometry,
    sample: &[LatticeIndex],
) -> Result<Vec<DominationRecord>> {
    let n = spec.n as f64;
    let e = n + atom.degree as f64 + 1.0;
    let order = spec.alpha * n / e;
    let power = e / n;
    let sup = atom.sup_norm();
    sample
        .iter()
        .map(|j| {
            let l = geometry.region_of(&j.0).ok_or_else(|| Error::NotInRegion(j.to_string()))?;
            let lhs = apply_t_at(spec, &atom.sequence, j)?.abs();
            let m: f64 = cube_indicator_maximal(&atom.cube, order, &geometry.image(l, &j.0));
            let rhs = sup * m.powf(power);
            Ok(DominationRecord { j: j.clone(), region: l, lhs, rhs, ratio: lhs / rhs })
        })
        .collect()
}

/// Random points of `R`: a center `A_l⁻¹ i₀`, then a random direction at a distance
/// log-uniform in `[r, r·spread]` with `r` the dilated radius.
pub fn sample_region_points<R: Rng>(geometry: &RegionGeometry, count: usize, spread: f64, rng: &mut R) -> Vec<LatticeIndex> {
    let n = geometry.cube.dim();
    let r = geometry.radius as f64;
    let mut out = Vec::with_capacity(count);
    let mut attempts = 0usize;
    while out.len() < count && attempts < 100 * count.max(1) {
        attempts += 1;
        let l = rng.random_range(0..geometry.m());
        let center = &geometry.dilated[l].center.0;
        let dist = r * spread.powf(rng.random::<f64>());
        let dir: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let norm = dir.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm < 1e-3 {
            continue;
        }
        let j: Vec<i64> = center.iter().zip(&dir).map(|(&c, d)| c + (dist * d / norm).round() as i64).collect();
        if geometry.in_r(&j) {
            out.push(LatticeIndex(j));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::atoms::{make_atom, make_atom_with, AtomShape};
    use crate::matrix::IntegerMatrix;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn cube1(c: i64, r: u64) -> CubeWindow {
        CubeWindow::new(LatticeIndex(vec![c]), r)
    }

    #[test]
    fn rounding_rule() {
        let r = |a: i64, b: i64| round_half_down(&BigInt::from(a), &BigInt::from(b)).to_i64().unwrap();
        assert_eq!(r(5, 2), 2);
        assert_eq!(r(-5, 2), -3);
        assert_eq!(r(7, 3), 2);
        assert_eq!(r(8, 3), 3);
        assert_eq!(r(4, 1), 4);
    }

    #[test]
    fn reflection_at_origin() {
        let g = region_geometry(&cube1(0, 1), &FractionalSpec::reflection_pair()).unwrap();
        assert_eq!(g.dilated[0], g.dilated[1]);
        assert!(g.radius >= 4);
        for j in -4..=4 {
            assert!(!g.in_r(&[j]));
        }
        for j in [-100i64, -6, 6, 100] {
            assert_eq!(g.region_of(&[j]), Some(0));
        }
    }

    #[test]
    fn reflection_far_center() {
        let g = region_geometry(&cube1(8, 1), &FractionalSpec::reflection_pair()).unwrap();
        assert_eq!(g.dilated[0].center.0, vec![8]);
        assert_eq!(g.dilated[1].center.0, vec![-8]);
        for j in -64i64..=64 {
            match g.region_of(&[j]) {
                None => assert!((j - 8).abs() <= 5 || (j + 8).abs() <= 5),
                Some(l) => assert_eq!(l, if j >= 0 { 0 } else { 1 }, "j = {j}"),
            }
        }
    }

    #[test]
    fn single_identity() {
        let g = region_geometry(&cube1(3, 2), &FractionalSpec::riesz(1, 0.5)).unwrap();
        assert_eq!(g.m(), 1);
        assert_eq!(g.radius, 9);
        assert!((-100..100).filter(|&j| g.in_r(&[j])).all(|j| g.region_of(&[j]) == Some(0)));
    }

    #[test]
    fn partition_exhaustive_2d() {
        let a1 = IntegerMatrix::new(vec![vec![2, 1], vec![1, 1]]).unwrap();
        let a2 = IntegerMatrix::new(vec![vec![1, 0], vec![0, -3]]).unwrap();
        let spec = FractionalSpec::new(2, 0.5, vec![0.75, 0.75], vec![a1, a2]);
        let cube = CubeWindow::new(LatticeIndex(vec![5, -2]), 1);
        let g = region_geometry(&cube, &spec).unwrap();
        let w = CubeWindow::centered_at_origin(2, 64);
        let mut counts = [0usize; 2];
        let mut outside = 0;
        for j in w.iter() {
            match g.region_of(&j.0) {
                None => outside += 1,
                Some(l) => {
                    counts[l] += 1;
                    // exact nearest-center property against every other center
                    let dl = BigRational::new(g.scaled_dist_sq(l, &j.0), &g.images[l].1 * &g.images[l].1);
                    for k in 0..2 {
                        let dk = BigRational::new(g.scaled_dist_sq(k, &j.0), &g.images[k].1 * &g.images[k].1);
                        assert!(dl <= dk);
                    }
                }
            }
        }
        assert_eq!(counts[0] + counts[1] + outside, w.cardinality());
        assert!(counts[0] > 0 && counts[1] > 0);
    }

    #[test]
    fn dilated_cube_covers_exact_set() {
        // every point within 4·D·N (sup norm) of the exact rational center is inside Q*_k
        let a = IntegerMatrix::new(vec![vec![3]]).unwrap();
        let spec = FractionalSpec::new(1, 0.5, vec![0.5], vec![a]);
        for c in -20i64..20 {
            let g = region_geometry(&cube1(c, 2), &spec).unwrap();
            let center = c as f64 / 3.0;
            let reach = 4.0 * (1.0 / 3.0) * 2.0;
            for j in -40i64..40 {
                if (j as f64 - center).abs() <= reach {
                    assert!(g.in_dilated(&[j]));
                }
            }
        }
    }

    #[test]
    fn domination_records() {
        let spec = FractionalSpec::riesz(1, 0.5);
        let a = make_atom(&cube1(0, 4), 1.0, 3).unwrap();
        let g = region_geometry(&a.cube, &spec).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let pts = sample_region_points(&g, 50, 64.0, &mut rng);
        assert_eq!(pts.len(), 50);
        let recs = domination_check(&spec, &a, &g, &pts).unwrap();
        assert!(recs.iter().all(|r| r.ratio.is_finite() && r.rhs > 0.0));
        assert!(matches!(
            domination_check(&spec, &a, &g, &[LatticeIndex(vec![0])]),
            Err(Error::NotInRegion(_))
        ));
    }

    #[test]
    fn axis_decay_rates_agree() {
        let spec = FractionalSpec::riesz(1, 0.5);
        let a = make_atom_with(&cube1(0, 4), 1.0, 5, AtomShape::Coarse).unwrap();
        let g = region_geometry(&a.cube, &spec).unwrap();
        let js: Vec<LatticeIndex> = (0..8).map(|k| LatticeIndex(vec![(g.radius as i64 + 1) << (k + 3)])).collect();
        let recs = domination_check(&spec, &a, &g, &js).unwrap();
        let slope = |f: &dyn Fn(&DominationRecord) -> f64| {
            let xs: Vec<f64> = recs.iter().map(|r| (r.j.0[0] as f64).ln()).collect();
            let ys: Vec<f64> = recs.iter().map(|r| f(r).ln()).collect();
            crate::experiments::stats::slope(&xs, &ys)
        };
        let s_lhs = slope(&|r| r.lhs);
        let s_rhs = slope(&|r| r.rhs);
        assert!((s_lhs - s_rhs).abs() <= 0.3, "{s_lhs} vs {s_rhs}");
    }
}
