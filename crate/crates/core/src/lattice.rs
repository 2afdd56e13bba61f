//! Lattice points of ℤⁿ and discrete cubes.
//!
//! Every traversal in the crate walks a cube in row-major order: the first
//! coordinate varies slowest. For points of a common window this is the
//! lexicographic order on coordinates, which is also the order used for
//! sparse storage.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A point of ℤⁿ.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LatticeIndex(pub Vec<i64>);

impl LatticeIndex {
    pub fn new(coords: Vec<i64>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::InvalidParameter("lattice dimension must be at least 1".into()));
        }
        Ok(Self(coords))
    }

    pub fn origin(n: usize) -> Self {
        Self(vec![0; n])
    }

    /// The unit vector along axis `axis`.
    pub fn unit(n: usize, axis: usize) -> Self {
        let mut v = vec![0; n];
        v[axis] = 1;
        Self(v)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[i64] {
        &self.0
    }

    /// `|j|²` in exact integer arithmetic.
    pub fn norm_sq(&self) -> u128 {
        norm_sq(&self.0)
    }

    /// `|j|_∞`.
    pub fn sup_norm(&self) -> u64 {
        sup_norm(&self.0)
    }

    pub fn is_origin(&self) -> bool {
        self.0.iter().all(|&c| c == 0)
    }

    pub fn add(&self, other: &Self) -> Self {
        Self(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self(self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect())
    }
}

impl fmt::Display for LatticeIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (k, c) in self.0.iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}

impl From<Vec<i64>> for LatticeIndex {
    fn from(v: Vec<i64>) -> Self {
        Self(v)
    }
}

#[inline]
pub(crate) fn norm_sq(v: &[i64]) -> u128 {
    v.iter().map(|&c| (c as i128 * c as i128) as u128).sum()
}

#[inline]
pub(crate) fn sup_norm(v: &[i64]) -> u64 {
    v.iter().map(|c| c.unsigned_abs()).max().unwrap_or(0)
}

#[inline]
pub(crate) fn dist_sq(a: &[i64], b: &[i64]) -> u128 {
    a.iter()
        .zip(b)
        .map(|(&x, &y)| {
            let d = x as i128 - y as i128;
            (d * d) as u128
        })
        .sum()
}

#[inline]
pub(crate) fn sup_dist(a: &[i64], b: &[i64]) -> u64 {
    a.iter().zip(b).map(|(&x, &y)| (x - y).unsigned_abs()).max().unwrap_or(0)
}

/// Euclidean and sup norms of a lattice point: `(|j|, |j|_∞)`.
pub fn norms_of_index(j: &LatticeIndex) -> (f64, u64) {
    ((j.norm_sq() as f64).sqrt(), j.sup_norm())
}

/// Discrete cube `{i : |i − center|_∞ ≤ radius}`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CubeWindow {
    pub center: LatticeIndex,
    pub radius: u64,
}

impl CubeWindow {
    pub fn new(center: LatticeIndex, radius: u64) -> Self {
        Self { center, radius }
    }

    pub fn centered_at_origin(n: usize, radius: u64) -> Self {
        Self::new(LatticeIndex::origin(n), radius)
    }

    pub fn dim(&self) -> usize {
        self.center.dim()
    }

    pub fn side(&self) -> usize {
        2 * self.radius as usize + 1
    }

    /// `#Q = (2N+1)ⁿ`.
    pub fn cardinality(&self) -> usize {
        self.side().pow(self.dim() as u32)
    }

    pub fn lower(&self, axis: usize) -> i64 {
        self.center.0[axis] - self.radius as i64
    }

    pub fn upper(&self, axis: usize) -> i64 {
        self.center.0[axis] + self.radius as i64
    }

    pub fn contains(&self, j: &[i64]) -> bool {
        sup_dist(j, &self.center.0) <= self.radius
    }

    /// Row-major position of `j`, or `None` outside the cube.
    pub fn linear_index(&self, j: &[i64]) -> Option<usize> {
        let side = self.side() as i64;
        let mut idx: i64 = 0;
        for (axis, &c) in j.iter().enumerate() {
            let off = c - self.lower(axis);
            if off < 0 || off >= side {
                return None;
            }
            idx = idx * side + off;
        }
        Some(idx as usize)
    }

    /// Writes the point at row-major position `idx` into `out`.
    pub fn point_into(&self, mut idx: usize, out: &mut [i64]) {
        let side = self.side();
        for axis in (0..self.dim()).rev() {
            out[axis] = self.lower(axis) + (idx % side) as i64;
            idx /= side;
        }
    }

    pub fn point(&self, idx: usize) -> LatticeIndex {
        let mut v = vec![0; self.dim()];
        self.point_into(idx, &mut v);
        LatticeIndex(v)
    }

    /// Points in row-major order.
    pub fn iter(&self) -> impl Iterator<Item = LatticeIndex> + '_ {
        (0..self.cardinality()).map(move |k| self.point(k))
    }

    /// The smallest cube with this center containing `other`.
    pub fn covering_radius_of(&self, other: &CubeWindow) -> u64 {
        sup_dist(&self.center.0, &other.center.0) + other.radius
    }

    /// `max_{i ∈ cube} |i|`, attained at a corner.
    pub fn max_euclidean_norm(&self) -> f64 {
        let r = self.radius as i64;
        let sq: u128 = self
            .center
            .0
            .iter()
            .map(|&c| {
                let m = (c.abs() + r) as u128;
                m * m
            })
            .sum();
        (sq as f64).sqrt()
    }
}

/// Bounding cube (smallest radius about the midpoint-rounded center) of a point set.
pub(crate) fn bounding_cube<'a>(n: usize, points: impl Iterator<Item = &'a [i64]>) -> Option<CubeWindow> {
    let mut lo = vec![i64::MAX; n];
    let mut hi = vec![i64::MIN; n];
    let mut any = false;
    for p in points {
        any = true;
        for k in 0..n {
            lo[k] = lo[k].min(p[k]);
            hi[k] = hi[k].max(p[k]);
        }
    }
    if !any {
        return None;
    }
    let center: Vec<i64> = lo.iter().zip(&hi).map(|(&l, &h)| (l + h).div_euclid(2)).collect();
    let radius = (0..n)
        .map(|k| (center[k] - lo[k]).max(hi[k] - center[k]) as u64)
        .max()
        .unwrap_or(0);
    Some(CubeWindow::new(LatticeIndex(center), radius))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn norms_match_definitions() {
        assert_eq!(norms_of_index(&LatticeIndex(vec![3, 4])), (5.0, 4));
        assert_eq!(norms_of_index(&LatticeIndex(vec![0, 0, 0])), (0.0, 0));
        let (e, s) = norms_of_index(&LatticeIndex(vec![-2, 1]));
        assert_eq!(e, 5f64.sqrt());
        assert_eq!(s, 2);
    }

    #[test]
    fn cube_cardinality_and_order() {
        let q = CubeWindow::new(LatticeIndex(vec![1, -1]), 2);
        assert_eq!(q.cardinality(), 25);
        let pts: Vec<_> = q.iter().collect();
        assert_eq!(pts.len(), 25);
        assert_eq!(pts[0], LatticeIndex(vec![-1, -3]));
        assert_eq!(pts[1], LatticeIndex(vec![-1, -2]));
        assert!(pts.windows(2).all(|w| w[0] < w[1]));
        for (k, p) in pts.iter().enumerate() {
            assert_eq!(q.linear_index(&p.0), Some(k));
        }
        assert_eq!(q.linear_index(&[4, 0]), None);
    }

    #[test]
    fn empty_dimension_rejected() {
        assert!(LatticeIndex::new(vec![]).is_err());
    }
}
