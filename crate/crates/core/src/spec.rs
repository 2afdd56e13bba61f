//! Parameters of the fractional series operator and their validity rules.

use num_rational::BigRational;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::matrix::{matrix_norm_bounds, IntegerMatrix, NormBounds};

/// Tolerance on `Σα_k = n − α`.
pub const EXPONENT_SUM_TOL: f64 = 1e-12;

/// `(n, α, α₁..α_m, A₁..A_m)`; `m` is the number of factors.
#[derive(Clone, Debug, PartialEq)]
pub struct FractionalSpec {
    pub n: usize,
    pub alpha: f64,
    pub exponents: Vec<f64>,
    pub matrices: Vec<IntegerMatrix>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<String>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn into_result(self) -> Result<()> {
        if self.is_valid() {
            Ok(())
        } else {
            Err(Error::InvalidSpec(self.violations))
        }
    }
}

impl FractionalSpec {
    pub fn new(n: usize, alpha: f64, exponents: Vec<f64>, matrices: Vec<IntegerMatrix>) -> Self {
        Self { n, alpha, exponents, matrices }
    }

    /// `m = 1`, `A₁ = I`, `α₁ = n − α`: the Riesz potential.
    pub fn riesz(n: usize, alpha: f64) -> Self {
        Self::new(n, alpha, vec![n as f64 - alpha], vec![IntegerMatrix::identity(n)])
    }

    /// One-dimensional `α = 0`, `m = 2`, `A₁ = 1`, `A₂ = −1`, `α₁ = α₂ = 1/2`.
    pub fn reflection_pair() -> Self {
        Self::new(
            1,
            0.0,
            vec![0.5, 0.5],
            vec![IntegerMatrix::identity(1), IntegerMatrix::diagonal(&[-1])],
        )
    }

    pub fn m(&self) -> usize {
        self.matrices.len()
    }

    pub fn validate(&self) -> ValidationReport {
        validate_spec(self)
    }

    /// `D_inv = max_k ‖A_k⁻¹‖` (certified upper bound), with its exact square.
    pub fn d_inv(&self) -> (f64, BigRational) {
        self.matrices
            .iter()
            .map(|a| {
                let nb = matrix_norm_bounds(a);
                // ‖A⁻¹‖ ≤ 1/σ_min bound
                let sq = if nb.lower_sq == BigRational::from_integer(0.into()) {
                    BigRational::from_integer(0.into())
                } else {
                    nb.lower_sq.recip()
                };
                (1.0 / nb.lower, sq)
            })
            .max_by(|a, b| a.1.cmp(&b.1))
            .expect("at least one matrix")
    }

    /// `D_fwd = max_k ‖A_k‖` (certified upper bound), with its exact square.
    pub fn d_fwd(&self) -> (f64, BigRational) {
        self.matrices
            .iter()
            .map(|a| {
                let nb = matrix_norm_bounds(a);
                (nb.upper, nb.upper_sq)
            })
            .max_by(|a, b| a.1.cmp(&b.1))
            .expect("at least one matrix")
    }

    pub fn norm_bounds(&self) -> Vec<NormBounds> {
        self.matrices.iter().map(matrix_norm_bounds).collect()
    }

    pub fn to_file(&self) -> SpecFile {
        SpecFile {
            n: self.n,
            alpha: self.alpha,
            m: self.m(),
            exponents: self.exponents.clone(),
            matrices: self.matrices.iter().map(|a| a.rows().to_vec()).collect(),
        }
    }

    /// Hex SHA-256 of the canonical JSON encoding.
    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(&self.to_file()).expect("spec serializes");
        Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect()
    }
}

pub fn validate_spec(s: &FractionalSpec) -> ValidationReport {
    let mut v = Vec::new();
    let n = s.n;
    if n == 0 {
        v.push("dimension n must be at least 1".to_string());
    }
    if !(s.alpha >= 0.0 && s.alpha < n as f64) {
        v.push(format!("α = {} must lie in [0, n) = [0, {n})", s.alpha));
    }
    let m = s.m();
    if s.exponents.len() != m {
        v.push(format!("{} exponents given for m = {m} matrices", s.exponents.len()));
    }
    if m == 0 {
        v.push("m must be at least 1".to_string());
    } else if s.alpha == 0.0 && m < 2 {
        v.push(format!("α = 0 requires m ≥ 2, got m = {m}"));
    }
    for (k, &a) in s.exponents.iter().enumerate() {
        if !(a > 0.0 && a.is_finite()) {
            v.push(format!("exponent α_{} = {a} must be positive", k + 1));
        }
    }
    let sum: f64 = s.exponents.iter().sum();
    if (sum - (n as f64 - s.alpha)).abs() > EXPONENT_SUM_TOL {
        v.push(format!("Σα_k = {sum} differs from n − α = {}", n as f64 - s.alpha));
    }
    for (k, a) in s.matrices.iter().enumerate() {
        if a.dim() != n {
            v.push(format!("A_{} is {}×{}, expected {n}×{n}", k + 1, a.dim(), a.dim()));
        } else if !a.is_invertible() {
            v.push(format!("A_{} is singular", k + 1));
        }
    }
    if s.alpha == 0.0 {
        for k in 0..m {
            for l in k + 1..m {
                let (a, b) = (&s.matrices[k], &s.matrices[l]);
                if a.dim() != n || b.dim() != n {
                    continue;
                }
                let diff = a.sub(b).expect("same dimension");
                if !diff.is_invertible() {
                    v.push(format!("A_{} − A_{} is singular", k + 1, l + 1));
                }
            }
        }
    }
    ValidationReport { violations: v }
}

/// On-disk form: `{ "n", "alpha", "m", "exponents", "matrices" }`.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpecFile {
    pub n: usize,
    pub alpha: f64,
    pub m: usize,
    pub exponents: Vec<f64>,
    pub matrices: Vec<Vec<Vec<i64>>>,
}

impl SpecFile {
    pub fn into_spec(self) -> Result<FractionalSpec> {
        if self.matrices.len() != self.m {
            return Err(Error::Format(format!(
                "matrices: {} matrices given but m = {}",
                self.matrices.len(),
                self.m
            )));
        }
        if self.exponents.len() != self.m {
            return Err(Error::Format(format!(
                "exponents: {} values given but m = {}",
                self.exponents.len(),
                self.m
            )));
        }
        let mut mats = Vec::with_capacity(self.m);
        for (k, rows) in self.matrices.into_iter().enumerate() {
            if rows.len() != self.n {
                return Err(Error::Format(format!(
                    "matrices[{k}]: {} rows given, expected n = {}",
                    rows.len(),
                    self.n
                )));
            }
            for (r, row) in rows.iter().enumerate() {
                if row.len() != self.n {
                    return Err(Error::Format(format!(
                        "matrices[{k}][{r}]: {} entries given, expected n = {}",
                        row.len(),
                        self.n
                    )));
                }
            }
            mats.push(IntegerMatrix::new(rows)?);
        }
        Ok(FractionalSpec::new(self.n, self.alpha, self.exponents, mats))
    }
}

impl FractionalSpec {
    pub fn from_json_str(s: &str) -> Result<Self> {
        let f: SpecFile = serde_json::from_str(s)?;
        f.into_spec()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validation_examples() {
        assert!(FractionalSpec::riesz(1, 0.5).validate().is_valid());
        assert!(FractionalSpec::reflection_pair().validate().is_valid());
        let same = FractionalSpec::new(
            1,
            0.0,
            vec![0.5, 0.5],
            vec![IntegerMatrix::identity(1), IntegerMatrix::identity(1)],
        );
        let r = same.validate();
        assert_eq!(r.violations, vec!["A_1 − A_2 is singular".to_string()]);
    }

    #[test]
    fn every_rule_reported() {
        let s = FractionalSpec::new(
            2,
            0.0,
            vec![1.5],
            vec![IntegerMatrix::new(vec![vec![1, 1], vec![1, 1]]).unwrap()],
        );
        let r = s.validate();
        assert!(r.violations.iter().any(|v| v.contains("m ≥ 2")));
        assert!(r.violations.iter().any(|v| v.contains("Σα_k")));
        assert!(r.violations.iter().any(|v| v.contains("singular")));
        let bad_alpha = FractionalSpec::riesz(1, 1.0);
        assert!(!bad_alpha.validate().is_valid());
    }

    #[test]
    fn exponent_sum_tolerance() {
        let mut s = FractionalSpec::riesz(2, 1.0);
        s.exponents[0] += 5e-13;
        assert!(s.validate().is_valid());
        s.exponents[0] += 1e-11;
        assert!(!s.validate().is_valid());
    }

    #[test]
    fn parse_names_bad_field() {
        let e = FractionalSpec::from_json_str(
            r#"{"n":2,"alpha":1.0,"m":1,"exponents":[1.0],"matrices":[[[1,0],[0]]]}"#,
        )
        .unwrap_err();
        assert!(e.to_string().contains("matrices[0][1]"), "{e}");
        let e = FractionalSpec::from_json_str(r#"{"n":1,"alpha":0.5,"m":1,"exponents":[0.5]}"#).unwrap_err();
        assert!(e.to_string().contains("matrices"), "{e}");
    }

    #[test]
    fn file_round_trip_and_hash() {
        let s = FractionalSpec::reflection_pair();
        let text = serde_json::to_string(&s.to_file()).unwrap();
        let back = FractionalSpec::from_json_str(&text).unwrap();
        assert_eq!(back, s);
        assert_eq!(back.hash(), s.hash());
        assert_ne!(FractionalSpec::riesz(1, 0.5).hash(), s.hash());
    }

    #[test]
    fn norm_constants() {
        let s = FractionalSpec::reflection_pair();
        assert_eq!(s.d_inv().0, 1.0);
        assert_eq!(s.d_fwd().0, 1.0);
    }
}
