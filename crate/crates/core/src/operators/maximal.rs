//! Centered fractional maximal operator
//! `M_α b(j) = sup_N (2N+1)^{−(n−α)} Σ_{|i−j|_∞ ≤ N} |b(i)|`.
//!
//! [`fractional_maximal`] evaluates the definition directly and serves as the
//! oracle for [`fractional_maximal_fast`], which answers each cube sum from an
//! n-dimensional summed-volume table in `O(2ⁿ)`.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::lattice::{sup_dist, CubeWindow};
use crate::scalar::{DoubleWord, Real};
use crate::sequence::LatticeSequence;

fn check_alpha(alpha: f64, n: usize) -> Result<()> {
    if !(alpha >= 0.0 && alpha < n as f64) {
        return Err(Error::InvalidParameter(format!("maximal order α = {alpha} must lie in [0, {n})")));
    }
    Ok(())
}

/// `(#Q)^{−(1−α/n)} = (2N+1)^{−(n−α)}`.
#[inline]
pub(crate) fn cube_normalizer<T: Real>(radius: u64, decay: T) -> T {
    T::of_count(2 * radius as u128 + 1).powf(-decay)
}

/// Direct evaluation on `out`: for each `j`, cube sums for every radius up to
/// the one covering the support.
pub fn fractional_maximal<T: Real>(
    b: &LatticeSequence<T>,
    alpha: f64,
    out: &CubeWindow,
) -> Result<LatticeSequence<T>> {
    let n = b.dim();
    check_alpha(alpha, n)?;
    if out.dim() != n {
        return Err(Error::DimensionMismatch { expected: n, found: out.dim() });
    }
    let support = b.support();
    let decay = T::of(n as f64 - alpha);
    let values: Vec<T> = (0..out.cardinality())
        .into_par_iter()
        .map_init(
            || (vec![0i64; n], Vec::<T>::new()),
            |(j, shells), idx| {
                out.point_into(idx, j);
                if support.is_empty() {
                    return T::zero();
                }
                let n_max = support.points().map(|i| sup_dist(i, j)).max().unwrap_or(0) as usize;
                shells.clear();
                shells.resize(n_max + 1, T::zero());
                for (i, v) in support.points().zip(&support.values) {
                    let d = sup_dist(i, j) as usize;
                    shells[d] = shells[d] + v.abs();
                }
                let mut cum = T::zero();
                let mut best = T::zero();
                for (radius, &s) in shells.iter().enumerate() {
                    cum = cum + s;
                    best = best.max(cum * cube_normalizer(radius as u64, decay));
                }
                best
            },
        )
        .collect();
    LatticeSequence::dense(out.clone(), values)
}

/// Prefix-sum table over `|b|` on a cube window, in double-word precision.
pub struct SummedVolumeTable<T> {
    window: CubeWindow,
    stride: Vec<usize>,
    table: Vec<DoubleWord<T>>,
}

impl<T: Real> SummedVolumeTable<T> {
    /// `table[k] = Σ_{i < k componentwise} |b(i)|` with a zero border.
    pub fn new(window: &CubeWindow, values: &[T]) -> Self {
        let n = window.dim();
        let side = window.side();
        let ext = side + 1;
        let mut stride = vec![1usize; n];
        for axis in (0..n.saturating_sub(1)).rev() {
            stride[axis] = stride[axis + 1] * ext;
        }
        let total = ext.pow(n as u32);
        let mut table = vec![DoubleWord::zero(); total];
        let mut p = vec![0usize; n];
        for (k, v) in values.iter().enumerate() {
            let mut rem = k;
            for axis in (0..n).rev() {
                p[axis] = rem % side;
                rem /= side;
            }
            let t: usize = (0..n).map(|a| (p[a] + 1) * stride[a]).sum();
            table[t] = DoubleWord::from_value(v.abs());
        }
        for axis in 0..n {
            let st = stride[axis];
            for t in 0..total {
                if (t / st) % ext != 0 {
                    table[t] = table[t].add(table[t - st]);
                }
            }
        }
        Self { window: window.clone(), stride, table }
    }

    /// `Σ |b|` over the intersection of the window with the cube of radius `r` about `j`.
    pub fn cube_sum(&self, j: &[i64], r: u64) -> T {
        let n = self.window.dim();
        let side = self.window.side() as i64;
        let mut lo = [0usize; 8];
        let mut hi = [0usize; 8];
        let mut lo_v = Vec::new();
        let mut hi_v = Vec::new();
        let (lo, hi): (&mut [usize], &mut [usize]) = if n <= 8 {
            (&mut lo[..n], &mut hi[..n])
        } else {
            lo_v.resize(n, 0);
            hi_v.resize(n, 0);
            (&mut lo_v[..], &mut hi_v[..])
        };
        for axis in 0..n {
            let base = self.window.lower(axis);
            let a = (j[axis] - r as i64 - base).max(0);
            let b = (j[axis] + r as i64 - base).min(side - 1);
            if a > b {
                return T::zero();
            }
            lo[axis] = a as usize;
            hi[axis] = b as usize + 1;
        }
        let mut acc = DoubleWord::zero();
        for corner in 0..(1usize << n) {
            let mut t = 0;
            let mut lows = 0;
            for axis in 0..n {
                if corner >> axis & 1 == 1 {
                    t += lo[axis] * self.stride[axis];
                    lows += 1;
                } else {
                    t += hi[axis] * self.stride[axis];
                }
            }
            let term = self.table[t];
            acc = if lows % 2 == 0 { acc.add(term) } else { acc.add(term.neg()) };
        }
        acc.value()
    }
}

/// Same values as [`fractional_maximal`] for densely stored `b`, via a summed-volume table.
pub fn fractional_maximal_fast<T: Real>(
    b: &LatticeSequence<T>,
    alpha: f64,
    out: &CubeWindow,
) -> Result<LatticeSequence<T>> {
    let n = b.dim();
    check_alpha(alpha, n)?;
    if out.dim() != n {
        return Err(Error::DimensionMismatch { expected: n, found: out.dim() });
    }
    let (Some(window), Some(values)) = (b.window(), b.dense_values()) else {
        return Err(Error::InvalidParameter("fast maximal path needs densely stored input".into()));
    };
    let Some(bbox) = nonzero_box(window, values) else {
        return LatticeSequence::dense(out.clone(), vec![T::zero(); out.cardinality()]);
    };
    let table = SummedVolumeTable::new(window, values);
    let decay = T::of(n as f64 - alpha);
    let out_values: Vec<T> = (0..out.cardinality())
        .into_par_iter()
        .map_init(
            || vec![0i64; n],
            |j, idx| {
                out.point_into(idx, j);
                let n_max = (0..n)
                    .map(|a| (j[a] - bbox.0[a]).abs().max((bbox.1[a] - j[a]).abs()))
                    .max()
                    .unwrap_or(0) as u64;
                (0..=n_max)
                    .map(|r| table.cube_sum(j, r) * cube_normalizer(r, decay))
                    .fold(T::zero(), T::max)
            },
        )
        .collect();
    LatticeSequence::dense(out.clone(), out_values)
}

/// Componentwise min/max of nonzero positions.
fn nonzero_box<T: Real>(window: &CubeWindow, values: &[T]) -> Option<(Vec<i64>, Vec<i64>)> {
    let n = window.dim();
    let mut lo = vec![i64::MAX; n];
    let mut hi = vec![i64::MIN; n];
    let mut p = vec![0; n];
    let mut any = false;
    for (k, v) in values.iter().enumerate() {
        if v.is_zero() {
            continue;
        }
        any = true;
        window.point_into(k, &mut p);
        for a in 0..n {
            lo[a] = lo[a].min(p[a]);
            hi[a] = hi[a].max(p[a]);
        }
    }
    any.then_some((lo, hi))
}

/// `M_α(χ_Q)(x)` for the indicator of a cube, by exact lattice-point counting.
pub fn cube_indicator_maximal<T: Real>(q: &CubeWindow, alpha: f64, x: &[i64]) -> T {
    let n = q.dim();
    let decay = T::of(n as f64 - alpha);
    let n_max = sup_dist(x, &q.center.0) + q.radius;
    let mut best = T::zero();
    for r in 0..=n_max {
        let mut count: u128 = 1;
        for a in 0..n {
            let lo = (x[a] - r as i64).max(q.lower(a));
            let hi = (x[a] + r as i64).min(q.upper(a));
            if lo > hi {
                count = 0;
                break;
            }
            count *= (hi - lo + 1) as u128;
        }
        if count > 0 {
            best = best.max(T::of_count(count) * cube_normalizer(r, decay));
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::LatticeIndex;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn origin_delta(n: usize) -> LatticeSequence<f64> {
        LatticeSequence::delta(LatticeIndex::origin(n), 1.0)
    }

    fn at(c: &[i64]) -> CubeWindow {
        CubeWindow::new(LatticeIndex(c.to_vec()), 0)
    }

    #[test]
    fn delta_closed_forms() {
        let m = fractional_maximal(&origin_delta(2), 0.0, &at(&[2, 1])).unwrap();
        assert!((m.get(&[2, 1]) - 0.04).abs() < 1e-15);
        let m = fractional_maximal(&origin_delta(2), 1.0, &at(&[2, 1])).unwrap();
        assert!((m.get(&[2, 1]) - 0.2).abs() < 1e-15);
        for alpha in [0.0, 0.7, 1.9] {
            let m = fractional_maximal(&origin_delta(2), alpha, &at(&[0, 0])).unwrap();
            assert_eq!(m.get(&[0, 0]), 1.0);
        }
    }

    #[test]
    fn fast_matches_direct_on_delta_and_zero() {
        let b = origin_delta(2).to_dense_on(&CubeWindow::centered_at_origin(2, 3)).unwrap();
        let out = CubeWindow::centered_at_origin(2, 6);
        let slow = fractional_maximal(&b, 0.5, &out).unwrap();
        let fast = fractional_maximal_fast(&b, 0.5, &out).unwrap();
        for (a, c) in slow.dense_values().unwrap().iter().zip(fast.dense_values().unwrap()) {
            assert!((a - c).abs() <= 1e-12 * a.abs());
        }
        let z = LatticeSequence::dense(CubeWindow::centered_at_origin(1, 4), vec![0.0; 9]).unwrap();
        let m = fractional_maximal_fast(&z, 0.0, &CubeWindow::centered_at_origin(1, 8)).unwrap();
        assert!(m.dense_values().unwrap().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn fast_matches_direct_random_1d() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let w = CubeWindow::centered_at_origin(1, 8);
        let b = LatticeSequence::from_fn(w.clone(), |_| rng.random_range(-1.0f64..1.0));
        let slow = fractional_maximal(&b, 0.0, &w).unwrap();
        let fast = fractional_maximal_fast(&b, 0.0, &w).unwrap();
        assert_eq!(slow.dense_values().unwrap().len(), 17);
        for (a, c) in slow.dense_values().unwrap().iter().zip(fast.dense_values().unwrap()) {
            assert!((*a - *c).abs() <= 1e-12 * a.abs());
        }
    }

    #[test]
    fn sparse_input_rejected_by_fast_path() {
        assert!(fractional_maximal_fast(&origin_delta(1), 0.0, &at(&[0])).is_err());
    }

    #[test]
    fn indicator_maximal_matches_direct() {
        let q = CubeWindow::new(LatticeIndex(vec![3, -2]), 2);
        let chi = LatticeSequence::from_fn(q.clone(), |_| 1.0);
        let out = CubeWindow::centered_at_origin(2, 9);
        for alpha in [0.0, 0.5, 1.5] {
            let direct = fractional_maximal(&chi, alpha, &out).unwrap();
            for j in out.iter() {
                let a = direct.get(&j.0);
                let c: f64 = cube_indicator_maximal(&q, alpha, &j.0);
                assert!((a - c).abs() <= 1e-13 * a, "{j} {a} {c}");
            }
        }
    }

    #[test]
    fn sublinear_on_random_pairs() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let w = CubeWindow::centered_at_origin(2, 4);
        let out = CubeWindow::centered_at_origin(2, 7);
        for _ in 0..10 {
            let b1 = LatticeSequence::from_fn(w.clone(), |_| rng.random_range(-1.0..1.0));
            let b2 = LatticeSequence::from_fn(w.clone(), |_| rng.random_range(-1.0..1.0));
            let s = b1.add_scaled(&b2, 1.0).unwrap();
            let alpha = rng.random_range(0.0..2.0);
            let m1 = fractional_maximal(&b1, alpha, &out).unwrap();
            let m2 = fractional_maximal(&b2, alpha, &out).unwrap();
            let ms = fractional_maximal(&s, alpha, &out).unwrap();
            for j in out.iter() {
                assert!(ms.get(&j.0) <= (m1.get(&j.0) + m2.get(&j.0)) * (1.0 + 1e-12));
            }
        }
    }
}
