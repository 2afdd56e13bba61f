//! Integer matrices with exact determinant, adjugate and rational inverse.

use std::fmt;
use std::sync::OnceLock;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

pub type RationalMatrix = Vec<Vec<BigRational>>;

/// Square matrix over ℤ. Determinant is computed on construction; the
/// adjugate and rational inverse on first use.
#[derive(Clone)]
pub struct IntegerMatrix {
    rows: Vec<Vec<i64>>,
    det: BigInt,
    adjugate: OnceLock<Vec<Vec<BigInt>>>,
}

impl PartialEq for IntegerMatrix {
    fn eq(&self, other: &Self) -> bool {
        self.rows == other.rows
    }
}

impl Eq for IntegerMatrix {}

impl fmt::Debug for IntegerMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "IntegerMatrix({:?})", self.rows)
    }
}

impl IntegerMatrix {
    pub fn new(rows: Vec<Vec<i64>>) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return Err(Error::InvalidParameter("matrix must be at least 1×1".into()));
        }
        for (r, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::Format(format!("matrix row {r} has {} entries, expected {n}", row.len())));
            }
        }
        let big: Vec<Vec<BigInt>> = rows.iter().map(|r| r.iter().map(|&x| BigInt::from(x)).collect()).collect();
        let det = bareiss_det(big);
        Ok(Self { rows, det, adjugate: OnceLock::new() })
    }

    pub fn identity(n: usize) -> Self {
        Self::diagonal(&vec![1; n])
    }

    pub fn diagonal(d: &[i64]) -> Self {
        let n = d.len();
        let rows = (0..n).map(|r| (0..n).map(|c| if r == c { d[r] } else { 0 }).collect()).collect();
        Self::new(rows).expect("square")
    }

    pub fn dim(&self) -> usize {
        self.rows.len()
    }

    pub fn rows(&self) -> &[Vec<i64>] {
        &self.rows
    }

    pub fn entry(&self, r: usize, c: usize) -> i64 {
        self.rows[r][c]
    }

    pub fn determinant(&self) -> &BigInt {
        &self.det
    }

    pub fn is_invertible(&self) -> bool {
        !self.det.is_zero()
    }

    pub fn is_identity(&self) -> bool {
        self.rows
            .iter()
            .enumerate()
            .all(|(r, row)| row.iter().enumerate().all(|(c, &x)| x == i64::from(r == c)))
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: other.dim() });
        }
        let rows = self
            .rows
            .iter()
            .zip(&other.rows)
            .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x - y).collect())
            .collect();
        Self::new(rows)
    }

    /// `A·x` over the integers.
    #[inline]
    pub fn apply_into(&self, x: &[i64], out: &mut [i64]) {
        for (o, row) in out.iter_mut().zip(&self.rows) {
            *o = row.iter().zip(x).map(|(a, b)| a * b).sum();
        }
    }

    pub fn apply(&self, x: &[i64]) -> Vec<i64> {
        let mut out = vec![0; self.dim()];
        self.apply_into(x, &mut out);
        out
    }

    /// Classical adjugate: `A·adj(A) = det(A)·I`.
    pub fn adjugate(&self) -> &[Vec<BigInt>] {
        self.adjugate.get_or_init(|| adjugate_of(&self.rows))
    }

    /// `adj(A)·x` together with `det(A)`, so that `A⁻¹x = adj(A)x / det(A)`.
    pub fn inverse_apply_scaled(&self, x: &[i64]) -> (Vec<BigInt>, BigInt) {
        let adj = self.adjugate();
        let v = adj
            .iter()
            .map(|row| row.iter().zip(x).map(|(a, &b)| a * BigInt::from(b)).sum())
            .collect();
        (v, self.det.clone())
    }

    /// Exact rational inverse `adj(A)/det(A)`.
    pub fn exact_inverse(&self) -> Result<RationalMatrix> {
        matrix_exact_inverse(self)
    }

    /// Product with a rational matrix, in exact arithmetic.
    pub fn mul_rational(&self, b: &RationalMatrix) -> RationalMatrix {
        let n = self.dim();
        (0..n)
            .map(|r| {
                (0..n)
                    .map(|c| {
                        (0..n).fold(BigRational::zero(), |acc, k| {
                            acc + BigRational::from_integer(BigInt::from(self.rows[r][k])) * &b[k][c]
                        })
                    })
                    .collect()
            })
            .collect()
    }
}

/// Fraction-free Gaussian elimination.
fn bareiss_det(mut m: Vec<Vec<BigInt>>) -> BigInt {
    let n = m.len();
    let mut sign = BigInt::one();
    let mut prev = BigInt::one();
    for k in 0..n {
        if m[k][k].is_zero() {
            let Some(p) = (k + 1..n).find(|&r| !m[r][k].is_zero()) else {
                return BigInt::zero();
            };
            m.swap(k, p);
            sign = -sign;
        }
        for i in k + 1..n {
            for j in k + 1..n {
                let v = (&m[i][j] * &m[k][k] - &m[i][k] * &m[k][j]) / &prev;
                m[i][j] = v;
            }
        }
        prev = m[k][k].clone();
    }
    sign * &m[n - 1][n - 1]
}

fn adjugate_of(rows: &[Vec<i64>]) -> Vec<Vec<BigInt>> {
    let n = rows.len();
    if n == 1 {
        return vec![vec![BigInt::one()]];
    }
    let mut adj = vec![vec![BigInt::zero(); n]; n];
    for r in 0..n {
        for c in 0..n {
            let minor: Vec<Vec<BigInt>> = rows
                .iter()
                .enumerate()
                .filter(|&(i, _)| i != r)
                .map(|(_, row)| {
                    row.iter()
                        .enumerate()
                        .filter(|&(j, _)| j != c)
                        .map(|(_, &x)| BigInt::from(x))
                        .collect()
                })
                .collect();
            let cof = bareiss_det(minor);
            // adj is the transposed cofactor matrix
            adj[c][r] = if (r + c) % 2 == 0 { cof } else { -cof };
        }
    }
    adj
}

/// `A⁻¹ = adj(A)/det(A)` in exact rational arithmetic.
pub fn matrix_exact_inverse(a: &IntegerMatrix) -> Result<RationalMatrix> {
    if !a.is_invertible() {
        return Err(Error::SingularMatrix);
    }
    let det = a.determinant().clone();
    Ok(a.adjugate()
        .iter()
        .map(|row| row.iter().map(|x| BigRational::new(x.clone(), det.clone())).collect())
        .collect())
}

pub fn is_rational_identity(m: &RationalMatrix) -> bool {
    m.iter().enumerate().all(|(r, row)| {
        row.iter()
            .enumerate()
            .all(|(c, x)| if r == c { x.is_one() } else { x.is_zero() })
    })
}

/// Certified spectral-norm bracket of an integer matrix.
///
/// Squared values are kept as exact rationals so that geometric membership
/// tests built on them stay exact.
#[derive(Clone, Debug, PartialEq)]
pub struct NormBounds {
    /// Upper bound on `‖A‖₂`.
    pub upper: f64,
    /// Lower bound on the smallest singular value (0 when singular).
    pub lower: f64,
    pub upper_sq: BigRational,
    pub lower_sq: BigRational,
}

/// `min(n‖A‖_∞², ‖A‖₁‖A‖_∞, ‖A‖_F²)`: each term bounds `‖A‖₂²` from above.
fn spectral_upper_sq(m: &[Vec<BigRational>]) -> BigRational {
    let n = m.len();
    let row_sum = m
        .iter()
        .map(|row| row.iter().fold(BigRational::zero(), |s, x| s + x.abs()))
        .max()
        .unwrap_or_else(BigRational::zero);
    let col_sum = (0..n)
        .map(|c| m.iter().fold(BigRational::zero(), |s, row| s + row[c].abs()))
        .max()
        .unwrap_or_else(BigRational::zero);
    let frob = m.iter().flatten().fold(BigRational::zero(), |s, x| s + x * x);
    let scaled_inf = BigRational::from_integer(BigInt::from(n)) * &row_sum * &row_sum;
    let mixed = &row_sum * &col_sum;
    [scaled_inf, mixed, frob].into_iter().min().expect("three candidates")
}

fn sqrt_rational(x: &BigRational) -> f64 {
    x.to_f64().unwrap_or(f64::INFINITY).sqrt()
}

pub fn matrix_norm_bounds(a: &IntegerMatrix) -> NormBounds {
    let as_rat: Vec<Vec<BigRational>> = a
        .rows()
        .iter()
        .map(|r| r.iter().map(|&x| BigRational::from_integer(BigInt::from(x))).collect())
        .collect();
    let upper_sq = spectral_upper_sq(&as_rat);
    let lower_sq = match a.exact_inverse() {
        Ok(inv) => {
            let u = spectral_upper_sq(&inv);
            if u.is_zero() {
                BigRational::zero()
            } else {
                u.recip()
            }
        }
        Err(_) => BigRational::zero(),
    };
    NormBounds { upper: sqrt_rational(&upper_sq), lower: sqrt_rational(&lower_sq), upper_sq, lower_sq }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn rat(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    #[test]
    fn inverse_examples() {
        let id = IntegerMatrix::identity(3);
        assert!(is_rational_identity(&id.exact_inverse().unwrap()));
        let neg = IntegerMatrix::new(vec![vec![-1]]).unwrap();
        assert_eq!(neg.exact_inverse().unwrap(), vec![vec![rat(-1, 1)]]);
        let a = IntegerMatrix::new(vec![vec![2, 1], vec![1, 1]]).unwrap();
        let inv = a.exact_inverse().unwrap();
        assert_eq!(inv, vec![vec![rat(1, 1), rat(-1, 1)], vec![rat(-1, 1), rat(2, 1)]]);
        assert!(is_rational_identity(&a.mul_rational(&inv)));
    }

    #[test]
    fn singular_rejected() {
        let z = IntegerMatrix::new(vec![vec![1, 2], vec![2, 4]]).unwrap();
        assert!(matches!(z.exact_inverse(), Err(Error::SingularMatrix)));
        assert_eq!(matrix_norm_bounds(&z).lower, 0.0);
    }

    #[test]
    fn ragged_rows_rejected() {
        let e = IntegerMatrix::new(vec![vec![1, 2], vec![3]]).unwrap_err();
        assert!(e.to_string().contains("row 1"));
    }

    #[test]
    fn determinant_matches_cofactor_expansion() {
        let a = IntegerMatrix::new(vec![vec![2, -3, 1], vec![2, 0, -1], vec![1, 4, 5]]).unwrap();
        assert_eq!(*a.determinant(), BigInt::from(49));
    }

    #[test]
    fn norm_bound_examples() {
        let id = matrix_norm_bounds(&IntegerMatrix::identity(4));
        assert!(id.upper >= 1.0);
        assert_eq!(id.lower, 1.0);
        let two = matrix_norm_bounds(&IntegerMatrix::new(vec![vec![2]]).unwrap());
        assert_eq!((two.upper, two.lower), (2.0, 2.0));
        // A₁ − A₂ for A₁ = I, A₂ = diag(0, 2)
        let d = IntegerMatrix::identity(2).sub(&IntegerMatrix::diagonal(&[0, 2])).unwrap();
        let nb = matrix_norm_bounds(&d);
        // closed-form singular values of a diagonal 2×2: both equal 1
        let ata = [[1.0f64, 0.0], [0.0, 1.0]];
        let tr = ata[0][0] + ata[1][1];
        let det = ata[0][0] * ata[1][1] - ata[0][1] * ata[1][0];
        let smin = ((tr - (tr * tr - 4.0 * det).max(0.0).sqrt()) / 2.0).sqrt();
        assert!(nb.lower <= smin + 1e-15 && nb.lower >= 1.0 / 2f64.sqrt());
    }

    #[test]
    fn random_inverses_are_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut checked = 0;
        while checked < 1000 {
            let n = rng.random_range(1..=4);
            let rows: Vec<Vec<i64>> =
                (0..n).map(|_| (0..n).map(|_| rng.random_range(-5..=5)).collect()).collect();
            let a = IntegerMatrix::new(rows).unwrap();
            if !a.is_invertible() {
                continue;
            }
            let inv = a.exact_inverse().unwrap();
            assert!(is_rational_identity(&a.mul_rational(&inv)), "{a:?}");
            checked += 1;
        }
    }

    #[test]
    fn norm_bounds_bracket_random_images() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let n = rng.random_range(1..=4);
            let rows: Vec<Vec<i64>> =
                (0..n).map(|_| (0..n).map(|_| rng.random_range(-5..=5)).collect()).collect();
            let a = IntegerMatrix::new(rows.clone()).unwrap();
            let nb = matrix_norm_bounds(&a);
            for _ in 0..100 {
                let v: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
                let len = v.iter().map(|x| x * x).sum::<f64>().sqrt();
                if len < 1e-6 {
                    continue;
                }
                let av: f64 = rows
                    .iter()
                    .map(|r| r.iter().zip(&v).map(|(&a, b)| a as f64 * b).sum::<f64>().powi(2))
                    .sum::<f64>()
                    .sqrt()
                    / len;
                assert!(av <= nb.upper * (1.0 + 1e-12));
                assert!(nb.lower <= av * (1.0 + 1e-12));
            }
        }
    }
}
