//! Finitely supported real sequences on ℤⁿ.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{bounding_cube, CubeWindow, LatticeIndex};
use crate::scalar::Real;

/// Fill ratio below which [`LatticeSequence::compact`] picks sparse storage.
pub const SPARSE_FILL_RATIO: f64 = 0.1;

#[derive(Clone, Debug, PartialEq)]
pub enum Storage<T> {
    /// Values in row-major order over the window.
    Dense { window: CubeWindow, values: Vec<T> },
    /// Entries sorted in row-major (lexicographic) order, no duplicates.
    Sparse(Vec<(LatticeIndex, T)>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct LatticeSequence<T> {
    n: usize,
    storage: Storage<T>,
}

/// Flattened nonzero entries: coordinates packed `n` per point.
#[derive(Clone, Debug, Default)]
pub struct Support<T> {
    pub n: usize,
    pub coords: Vec<i64>,
    pub values: Vec<T>,
}

impl<T> Support<T> {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn point(&self, k: usize) -> &[i64] {
        &self.coords[k * self.n..(k + 1) * self.n]
    }

    pub fn points(&self) -> impl Iterator<Item = &[i64]> {
        self.coords.chunks_exact(self.n.max(1))
    }
}

impl<T: Real> LatticeSequence<T> {
    pub fn zero(n: usize) -> Self {
        Self { n, storage: Storage::Sparse(Vec::new()) }
    }

    pub fn dense(window: CubeWindow, values: Vec<T>) -> Result<Self> {
        if window.dim() == 0 {
            return Err(Error::InvalidParameter("lattice dimension must be at least 1".into()));
        }
        if values.len() != window.cardinality() {
            return Err(Error::Format(format!(
                "dense window of radius {} in dimension {} needs {} values, got {}",
                window.radius,
                window.dim(),
                window.cardinality(),
                values.len()
            )));
        }
        Ok(Self { n: window.dim(), storage: Storage::Dense { window, values } })
    }

    pub fn sparse(n: usize, entries: Vec<(LatticeIndex, T)>) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter("lattice dimension must be at least 1".into()));
        }
        let mut map = BTreeMap::new();
        for (idx, v) in entries {
            if idx.dim() != n {
                return Err(Error::DimensionMismatch { expected: n, found: idx.dim() });
            }
            if map.insert(idx.clone(), v).is_some() {
                return Err(Error::Format(format!("duplicate sparse index {idx}")));
            }
        }
        Ok(Self { n, storage: Storage::Sparse(map.into_iter().collect()) })
    }

    pub fn delta(at: LatticeIndex, value: T) -> Self {
        Self { n: at.dim(), storage: Storage::Sparse(vec![(at, value)]) }
    }

    pub fn from_fn(window: CubeWindow, mut f: impl FnMut(&LatticeIndex) -> T) -> Self {
        let values = window.iter().map(|j| f(&j)).collect();
        Self { n: window.dim(), storage: Storage::Dense { window, values } }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn storage(&self) -> &Storage<T> {
        &self.storage
    }

    pub fn is_dense(&self) -> bool {
        matches!(self.storage, Storage::Dense { .. })
    }

    pub fn window(&self) -> Option<&CubeWindow> {
        match &self.storage {
            Storage::Dense { window, .. } => Some(window),
            Storage::Sparse(_) => None,
        }
    }

    pub fn dense_values(&self) -> Option<&[T]> {
        match &self.storage {
            Storage::Dense { values, .. } => Some(values),
            Storage::Sparse(_) => None,
        }
    }

    pub fn get(&self, j: &[i64]) -> T {
        match &self.storage {
            Storage::Dense { window, values } => {
                window.linear_index(j).map_or_else(T::zero, |k| values[k])
            }
            Storage::Sparse(entries) => entries
                .binary_search_by(|(idx, _)| idx.0.as_slice().cmp(j))
                .map_or_else(|_| T::zero(), |k| entries[k].1),
        }
    }

    /// Nonzero entries in row-major order.
    pub fn entries(&self) -> Vec<(LatticeIndex, T)> {
        match &self.storage {
            Storage::Dense { window, values } => values
                .iter()
                .enumerate()
                .filter(|(_, v)| !v.is_zero())
                .map(|(k, &v)| (window.point(k), v))
                .collect(),
            Storage::Sparse(entries) => entries.iter().filter(|(_, v)| !v.is_zero()).cloned().collect(),
        }
    }

    pub fn support(&self) -> Support<T> {
        let mut s = Support { n: self.n, coords: Vec::new(), values: Vec::new() };
        match &self.storage {
            Storage::Dense { window, values } => {
                let mut p = vec![0; self.n];
                for (k, &v) in values.iter().enumerate() {
                    if !v.is_zero() {
                        window.point_into(k, &mut p);
                        s.coords.extend_from_slice(&p);
                        s.values.push(v);
                    }
                }
            }
            Storage::Sparse(entries) => {
                for (idx, v) in entries {
                    if !v.is_zero() {
                        s.coords.extend_from_slice(&idx.0);
                        s.values.push(*v);
                    }
                }
            }
        }
        s
    }

    pub fn support_len(&self) -> usize {
        match &self.storage {
            Storage::Dense { values, .. } => values.iter().filter(|v| !v.is_zero()).count(),
            Storage::Sparse(entries) => entries.iter().filter(|(_, v)| !v.is_zero()).count(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.support_len() == 0
    }

    /// Smallest cube (about the rounded midpoint) containing the support.
    pub fn support_cube(&self) -> Option<CubeWindow> {
        let s = self.support();
        bounding_cube(self.n, s.points())
    }

    /// `max_{i ∈ supp} |i|_∞`.
    pub fn support_sup_radius(&self) -> u64 {
        let s = self.support();
        s.points().map(crate::lattice::sup_norm).max().unwrap_or(0)
    }

    /// `max_{i ∈ supp} |i|`.
    pub fn support_euclidean_radius(&self) -> f64 {
        let s = self.support();
        let m = s.points().map(crate::lattice::norm_sq).max().unwrap_or(0);
        (m as f64).sqrt()
    }

    /// `ℓᵖ` norm, `p = f64::INFINITY` for the sup norm. Summation runs in row-major order.
    pub fn lp_norm(&self, p: f64) -> Result<T> {
        lp_norm_of(self.support().values.iter().copied(), p)
    }

    pub fn l1_norm(&self) -> T {
        self.support().values.iter().map(|v| v.abs()).sum()
    }

    pub fn sup_norm(&self) -> T {
        self.support().values.iter().fold(T::zero(), |m, v| m.max(v.abs()))
    }

    pub fn scale(&self, c: T) -> Self {
        let storage = match &self.storage {
            Storage::Dense { window, values } => Storage::Dense {
                window: window.clone(),
                values: values.iter().map(|&v| v * c).collect(),
            },
            Storage::Sparse(entries) => {
                Storage::Sparse(entries.iter().map(|(i, v)| (i.clone(), *v * c)).collect())
            }
        };
        Self { n: self.n, storage }
    }

    pub fn abs(&self) -> Self {
        let storage = match &self.storage {
            Storage::Dense { window, values } => Storage::Dense {
                window: window.clone(),
                values: values.iter().map(|v| v.abs()).collect(),
            },
            Storage::Sparse(entries) => {
                Storage::Sparse(entries.iter().map(|(i, v)| (i.clone(), v.abs())).collect())
            }
        };
        Self { n: self.n, storage }
    }

    /// `self + c·other`, returned in compact storage.
    pub fn add_scaled(&self, other: &Self, c: T) -> Result<Self> {
        if other.n != self.n {
            return Err(Error::DimensionMismatch { expected: self.n, found: other.n });
        }
        let mut map: BTreeMap<LatticeIndex, T> = self.entries().into_iter().collect();
        for (idx, v) in other.entries() {
            let e = map.entry(idx).or_insert_with(T::zero);
            *e = *e + c * v;
        }
        let entries: Vec<_> = map.into_iter().filter(|(_, v)| !v.is_zero()).collect();
        Ok(Self { n: self.n, storage: Storage::Sparse(entries) }.compact())
    }

    /// Translates the sequence by `shift`.
    pub fn translate(&self, shift: &LatticeIndex) -> Self {
        let storage = match &self.storage {
            Storage::Dense { window, values } => Storage::Dense {
                window: CubeWindow::new(window.center.add(shift), window.radius),
                values: values.clone(),
            },
            Storage::Sparse(entries) => {
                Storage::Sparse(entries.iter().map(|(i, v)| (i.add(shift), *v)).collect())
            }
        };
        Self { n: self.n, storage }
    }

    /// Re-stores the values densely on `window`; fails if the support leaves it.
    pub fn to_dense_on(&self, window: &CubeWindow) -> Result<Self> {
        let mut values = vec![T::zero(); window.cardinality()];
        for (idx, v) in self.entries() {
            let k = window.linear_index(&idx.0).ok_or_else(|| {
                Error::InvalidParameter(format!("support point {idx} lies outside the dense window"))
            })?;
            values[k] = v;
        }
        Self::dense(window.clone(), values)
    }

    pub fn to_dense(&self) -> Self {
        match &self.storage {
            Storage::Dense { .. } => self.clone(),
            Storage::Sparse(_) => {
                let w = self
                    .support_cube()
                    .unwrap_or_else(|| CubeWindow::centered_at_origin(self.n, 0));
                self.to_dense_on(&w).expect("bounding cube holds the support")
            }
        }
    }

    pub fn to_sparse(&self) -> Self {
        Self { n: self.n, storage: Storage::Sparse(self.entries()) }
    }

    /// Sparse when the fill ratio of the bounding cube is below [`SPARSE_FILL_RATIO`].
    pub fn compact(self) -> Self {
        let Some(cube) = self.support_cube() else {
            return Self::zero(self.n);
        };
        let fill = self.support_len() as f64 / cube.cardinality() as f64;
        if fill < SPARSE_FILL_RATIO {
            self.to_sparse()
        } else {
            self.to_dense_on(&cube).expect("bounding cube holds the support")
        }
    }
}

pub(crate) fn lp_norm_of<T: Real>(values: impl Iterator<Item = T>, p: f64) -> Result<T> {
    if !(p > 0.0) {
        return Err(Error::InvalidParameter(format!("ℓᵖ exponent must be positive, got {p}")));
    }
    if p.is_infinite() {
        return Ok(values.fold(T::zero(), |m, v| m.max(v.abs())));
    }
    let pe = T::of(p);
    let s: T = values.map(|v| v.abs().powf(pe)).sum();
    Ok(if p == 1.0 { s } else { s.powf(T::one() / pe) })
}

/// `ℓᵖ` norm of a sequence; `p = f64::INFINITY` gives the sup norm.
pub fn lp_norm<T: Real>(b: &LatticeSequence<T>, p: f64) -> Result<T> {
    b.lp_norm(p)
}

// ---------------------------------------------------------------------------
// JSON file format

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DenseBlock {
    pub center: Vec<i64>,
    pub radius: u64,
    pub values: Vec<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SequenceFile {
    pub n: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dense: Option<DenseBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sparse: Option<Vec<(Vec<i64>, f64)>>,
}

impl SequenceFile {
    pub fn from_sequence<T: Real>(b: &LatticeSequence<T>) -> Self {
        match &b.storage {
            Storage::Dense { window, values } => Self {
                n: b.n,
                dense: Some(DenseBlock {
                    center: window.center.0.clone(),
                    radius: window.radius,
                    values: values.iter().map(|v| v.as_f64()).collect(),
                }),
                sparse: None,
            },
            Storage::Sparse(entries) => Self {
                n: b.n,
                dense: None,
                sparse: Some(entries.iter().map(|(i, v)| (i.0.clone(), v.as_f64())).collect()),
            },
        }
    }

    pub fn into_sequence<T: Real>(self) -> Result<LatticeSequence<T>> {
        match (self.dense, self.sparse) {
            (Some(d), None) => {
                if d.center.len() != self.n {
                    return Err(Error::Format(format!(
                        "dense.center has {} coordinates but n = {}",
                        d.center.len(),
                        self.n
                    )));
                }
                let w = CubeWindow::new(LatticeIndex::new(d.center)?, d.radius);
                LatticeSequence::dense(w, d.values.into_iter().map(T::of).collect())
            }
            (None, Some(s)) => LatticeSequence::sparse(
                self.n,
                s.into_iter().map(|(i, v)| (LatticeIndex(i), T::of(v))).collect(),
            ),
            (None, None) => Err(Error::Format("sequence needs a `dense` or `sparse` field".into())),
            (Some(_), Some(_)) => {
                Err(Error::Format("sequence has both `dense` and `sparse` fields".into()))
            }
        }
    }
}

impl<T: Real> LatticeSequence<T> {
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(SequenceFile::from_sequence(self)).expect("sequence serializes")
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let f: SequenceFile = serde_json::from_str(s)?;
        f.into_sequence()
    }
}
