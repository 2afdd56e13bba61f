//! `(p, ∞, d_p)`-atoms: construction, exact validation and synthesis.

mod geometry;

pub use geometry::{domination_check, region_geometry, sample_region_points, DominationRecord, RegionGeometry};

use num_bigint::BigInt;
use num_traits::{Float, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::exponent::atom_degree;
use crate::lattice::{CubeWindow, LatticeIndex};
use crate::scalar::Real;
use crate::sequence::{LatticeSequence, SequenceFile};

/// Largest absolute value drawn for the undifferenced integer profile.
pub const PROFILE_BOUND: i64 = 9;

/// How the integer profile `c` is laid out before differencing.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "block")]
pub enum AtomShape {
    /// Independent entries, first differences of step 1.
    Fine,
    /// Entries constant on blocks of side `L`, differences of step `L`.
    Block(u64),
    /// `Block` with `L = ⌊(2N+1)/(d_p+3)⌋`: at least two full blocks of profile in `Q`.
    Coarse,
}

impl AtomShape {
    fn block_length(self, radius: u64, degree: u32) -> u64 {
        match self {
            AtomShape::Fine => 1,
            AtomShape::Block(l) => l.max(1),
            AtomShape::Coarse => ((2 * radius + 1) / (degree as u64 + 3)).max(1),
        }
    }
}

/// An atom stored as `coefficients · scale` on its cube, with integer coefficients.
#[derive(Clone, Debug, PartialEq)]
pub struct Atom {
    pub cube: CubeWindow,
    pub p: f64,
    pub degree: u32,
    /// Row-major over `cube`.
    pub coefficients: Vec<i64>,
    pub scale: f64,
    pub sequence: LatticeSequence<f64>,
    pub seed: u64,
    pub shape: AtomShape,
}

impl Atom {
    pub fn sup_bound(&self) -> f64 {
        (self.cube.cardinality() as f64).powf(-1.0 / self.p)
    }

    pub fn sup_norm(&self) -> f64 {
        self.sequence.sup_norm()
    }

    pub fn center(&self) -> &LatticeIndex {
        &self.cube.center
    }

    pub fn radius(&self) -> u64 {
        self.cube.radius
    }

    /// The same atom on the cube shifted by `shift`.
    pub fn translate(&self, shift: &LatticeIndex) -> Atom {
        let cube = CubeWindow::new(self.cube.center.add(shift), self.cube.radius);
        Atom {
            sequence: LatticeSequence::dense(cube.clone(), self.sequence.dense_values().expect("dense").to_vec())
                .expect("same cardinality"),
            cube,
            ..self.clone()
        }
    }

    /// Hex SHA-256 of the cube, exponent and exact values.
    pub fn hash(&self) -> String {
        let mut h = Sha256::new();
        h.update(format!("{:?}|{}|{}|{}|", self.cube.center.0, self.cube.radius, self.p, self.degree));
        for c in &self.coefficients {
            h.update(c.to_le_bytes());
        }
        h.update(self.scale.to_bits().to_le_bytes());
        hex(&h.finalize())
    }

    pub fn to_file(&self) -> AtomFile {
        AtomFile {
            sequence: SequenceFile::from_sequence(&self.sequence),
            p: self.p,
            cube: self.cube.clone(),
            d_p: self.degree,
        }
    }
}

pub(crate) fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

fn binomial(r: u32, k: u32) -> i64 {
    (0..k).fold(1i64, |acc, i| acc * (r - i) as i64 / (i + 1) as i64)
}

/// Largest `f64` not above `x` whose significand fits in `bits` bits.
fn truncate_significand(x: f64, bits: u32) -> f64 {
    let (mantissa, exponent, _) = x.integer_decode();
    let drop = 53u32.saturating_sub(bits);
    let m = (mantissa >> drop) << drop;
    m as f64 * 2f64.powi(exponent as i32)
}

/// Integer coefficients of the `(d_p+1)`-fold step-`L` forward difference in the
/// first coordinate of a block-constant profile. Returns `None` when the cube is too small.
fn difference_profile(
    radius: u64,
    n: usize,
    order: u32,
    block: u64,
    draw: &mut dyn FnMut(usize) -> Vec<i64>,
) -> Option<Vec<i64>> {
    let side = 2 * radius + 1;
    let shift = order as u64 * block;
    if side <= shift {
        return None;
    }
    // c lives on offsets [shift, side) in the first coordinate and [0, side) elsewhere.
    let first_len = side - shift;
    let blocks_first = first_len.div_ceil(block) as usize;
    let blocks_other = side.div_ceil(block) as usize;
    let block_count = blocks_first * blocks_other.pow(n as u32 - 1);
    let block_values = draw(block_count);
    let profile = |t: &[u64]| -> i64 {
        if t[0] < shift || t[0] >= side {
            return 0;
        }
        let mut idx = ((t[0] - shift) / block) as usize;
        for &x in &t[1..] {
            idx = idx * blocks_other + (x / block) as usize;
        }
        block_values[idx]
    };
    let weights: Vec<i64> = (0..=order).map(|k| binomial(order, k) * if (order - k) % 2 == 0 { 1 } else { -1 }).collect();
    let total = (side as usize).pow(n as u32);
    let mut coefficients = Vec::with_capacity(total);
    let mut t = vec![0u64; n];
    for mut idx in 0..total {
        for a in (0..n).rev() {
            t[a] = idx as u64 % side;
            idx /= side as usize;
        }
        let base = t[0];
        let mut acc = 0i64;
        for (k, w) in weights.iter().enumerate() {
            t[0] = base + k as u64 * block;
            acc += w * profile(&t);
        }
        t[0] = base;
        coefficients.push(acc);
    }
    Some(coefficients)
}

/// Atom on `cube` from the `(d_p+1)`-th first-coordinate difference of an integer profile.
pub fn make_atom(cube: &CubeWindow, p: f64, seed: u64) -> Result<Atom> {
    make_atom_with(cube, p, seed, AtomShape::Fine)
}

pub fn make_atom_with(cube: &CubeWindow, p: f64, seed: u64, shape: AtomShape) -> Result<Atom> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::OutOfRange(format!("atom exponent p = {p} must lie in (0, 1]")));
    }
    let n = cube.dim();
    let degree = atom_degree(p, n)?;
    let block = shape.block_length(cube.radius, degree);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let coefficients = loop {
        let mut draw =
            |k: usize| -> Vec<i64> { (0..k).map(|_| rng.random_range(-PROFILE_BOUND..=PROFILE_BOUND)).collect() };
        let c = difference_profile(cube.radius, n, degree + 1, block, &mut draw).ok_or_else(|| {
            Error::CannotConstruct(format!(
                "cube of side {} has no room for {} differences of step {block}",
                cube.side(),
                degree + 1
            ))
        })?;
        if c.iter().any(|&v| v != 0) {
            break c;
        }
    };
    let max = coefficients.iter().map(|c| c.unsigned_abs()).max().expect("nonempty");
    let coefficient_bits = 64 - max.leading_zeros();
    if coefficient_bits > 40 {
        return Err(Error::CannotConstruct("difference coefficients too large for exact scaling".into()));
    }
    // every product coefficient · scale is then exact in f64
    let target = (cube.cardinality() as f64).powf(-1.0 / p);
    let scale = truncate_significand(target / max as f64, 53 - coefficient_bits);
    let values = coefficients.iter().map(|&c| c as f64 * scale).collect();
    Ok(Atom {
        cube: cube.clone(),
        p,
        degree,
        sequence: LatticeSequence::dense(cube.clone(), values)?,
        coefficients,
        scale,
        seed,
        shape,
    })
}

/// Outcome of checking (a1)–(a3) on a sequence.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AtomReport {
    pub support_in_cube: bool,
    pub sup_norm: f64,
    pub sup_bound: f64,
    pub sup_ok: bool,
    pub degree: u32,
    /// Multi-indices whose moment against `(i − i₀)^β` is nonzero.
    pub centered_failures: Vec<Vec<u32>>,
    /// Multi-indices whose moment against `i^β` is nonzero.
    pub origin_failures: Vec<Vec<u32>>,
    /// Moments were evaluated in exact arithmetic.
    pub exact: bool,
}

impl AtomReport {
    pub fn moments_ok(&self) -> bool {
        self.centered_failures.is_empty() && self.origin_failures.is_empty()
    }

    pub fn is_valid(&self) -> bool {
        self.support_in_cube && self.sup_ok && self.moments_ok()
    }
}

/// All `β ∈ ℕ₀ⁿ` with `|β| ≤ d`, graded then lexicographic.
pub fn multi_indices(n: usize, d: u32) -> Vec<Vec<u32>> {
    let mut out = Vec::new();
    for total in 0..=d {
        let mut beta = vec![0u32; n];
        fill(&mut beta, 0, total, &mut out);
    }
    out
}

fn fill(beta: &mut Vec<u32>, axis: usize, remaining: u32, out: &mut Vec<Vec<u32>>) {
    if axis + 1 == beta.len() {
        beta[axis] = remaining;
        out.push(beta.clone());
        return;
    }
    for k in (0..=remaining).rev() {
        beta[axis] = k;
        fill(beta, axis + 1, remaining - k, out);
    }
}

/// Values as integers over a common power of two: `v_i = ints_i · 2^{shift}`.
fn common_dyadic(values: &[f64]) -> (Vec<BigInt>, i32) {
    let decoded: Vec<(u64, i16, i8)> = values.iter().map(|v| v.integer_decode()).collect();
    let shift = decoded
        .iter()
        .zip(values)
        .filter(|(_, v)| **v != 0.0)
        .map(|((_, e, _), _)| *e as i32)
        .min()
        .unwrap_or(0);
    let ints = decoded
        .iter()
        .zip(values)
        .map(|(&(m, e, s), v)| {
            if *v == 0.0 {
                BigInt::zero()
            } else {
                let x = BigInt::from(m) << (e as i32 - shift) as usize;
                if s < 0 {
                    -x
                } else {
                    x
                }
            }
        })
        .collect();
    (ints, shift)
}

fn moment_failures(points: &[Vec<i64>], ints: &[BigInt], origin: &[i64], betas: &[Vec<u32>]) -> Vec<Vec<u32>> {
    betas
        .iter()
        .filter(|beta| {
            let sum: BigInt = points
                .iter()
                .zip(ints)
                .map(|(i, v)| {
                    let mut m = v.clone();
                    for ((x, o), &b) in i.iter().zip(origin).zip(beta.iter()) {
                        m *= BigInt::from(x - o).pow(b);
                    }
                    m
                })
                .sum();
            !sum.is_zero()
        })
        .cloned()
        .collect()
}

/// Checks (a1) exactly, (a2) with `1e−12` relative slack and (a3) exactly,
/// against both `(i − i₀)^β` and `i^β`.
pub fn validate_atom<T: Real>(a: &LatticeSequence<T>, cube: &CubeWindow, p: f64) -> Result<AtomReport> {
    if a.dim() != cube.dim() {
        return Err(Error::DimensionMismatch { expected: cube.dim(), found: a.dim() });
    }
    let degree = atom_degree(p, cube.dim())?;
    let entries = a.entries();
    let support_in_cube = entries.iter().all(|(i, _)| cube.contains(&i.0));
    let sup_norm = a.sup_norm().as_f64();
    let sup_bound = (cube.cardinality() as f64).powf(-1.0 / p);
    let sup_ok = sup_norm <= sup_bound * (1.0 + 1e-12);
    let values: Vec<f64> = entries.iter().map(|(_, v)| v.as_f64()).collect();
    let points: Vec<Vec<i64>> = entries.into_iter().map(|(i, _)| i.0).collect();
    let (ints, _) = common_dyadic(&values);
    let betas = multi_indices(cube.dim(), degree);
    let zero = vec![0i64; cube.dim()];
    Ok(AtomReport {
        support_in_cube,
        sup_norm,
        sup_bound,
        sup_ok,
        degree,
        centered_failures: moment_failures(&points, &ints, &cube.center.0, &betas),
        origin_failures: moment_failures(&points, &ints, &zero, &betas),
        exact: true,
    })
}

#[derive(Clone, Debug)]
pub struct Synthesis {
    pub sequence: LatticeSequence<f64>,
    /// `Σ |λ_k|^p`.
    pub lambda_p_sum: f64,
    /// `Σ |λ_k| (#Q_k)^{−1/p}`, which bounds the sup norm of the sum.
    pub sup_bound: f64,
}

/// `Σ λ_k a_k`, accumulated in list order.
pub fn atomic_synthesis(atoms: &[Atom], lambdas: &[f64]) -> Result<Synthesis> {
    if atoms.len() != lambdas.len() {
        return Err(Error::InvalidParameter(format!(
            "{} atoms but {} coefficients",
            atoms.len(),
            lambdas.len()
        )));
    }
    let Some(first) = atoms.first() else {
        return Err(Error::InvalidParameter("synthesis needs at least one atom".into()));
    };
    let n = first.cube.dim();
    let mut acc = LatticeSequence::zero(n);
    let mut lambda_p_sum = 0.0;
    let mut sup_bound = 0.0;
    for (a, &l) in atoms.iter().zip(lambdas) {
        if a.cube.dim() != n {
            return Err(Error::DimensionMismatch { expected: n, found: a.cube.dim() });
        }
        acc = acc.add_scaled(&a.sequence, l)?;
        lambda_p_sum += l.abs().powf(a.p);
        sup_bound += l.abs() * a.sup_bound();
    }
    Ok(Synthesis { sequence: acc, lambda_p_sum, sup_bound })
}

/// On-disk atom: the sequence fields plus `p`, `cube` and `d_p`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AtomFile {
    #[serde(flatten)]
    pub sequence: SequenceFile,
    pub p: f64,
    pub cube: CubeWindow,
    pub d_p: u32,
}

impl AtomFile {
    pub fn validate(self) -> Result<(LatticeSequence<f64>, AtomReport)> {
        let seq: LatticeSequence<f64> = self.sequence.into_sequence()?;
        let report = validate_atom(&seq, &self.cube, self.p)?;
        if report.degree != self.d_p {
            return Err(Error::Format(format!("d_p = {} but p = {} gives {}", self.d_p, self.p, report.degree)));
        }
        Ok((seq, report))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub seed: u64,
    pub cube: CubeWindow,
    pub p: f64,
    pub shape: AtomShape,
    pub hash: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub file: Option<String>,
}

impl From<&Atom> for ManifestEntry {
    fn from(a: &Atom) -> Self {
        Self { seed: a.seed, cube: a.cube.clone(), p: a.p, shape: a.shape, hash: a.hash(), file: None }
    }
}

/// Hash of a whole corpus, in list order.
pub fn corpus_hash(atoms: &[Atom]) -> String {
    let mut h = Sha256::new();
    for a in atoms {
        h.update(a.hash().as_bytes());
    }
    hex(&h.finalize())
}

/// Per-atom seed derived from a master seed and an index.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    let mut h = Sha256::new();
    h.update(master.to_le_bytes());
    h.update(index.to_le_bytes());
    u64::from_le_bytes(h.finalize()[..8].try_into().expect("8 bytes"))
}

/// Largest coefficient magnitude, used for reporting.
pub fn max_coefficient(a: &Atom) -> u64 {
    a.coefficients.iter().map(|c| c.unsigned_abs()).max().unwrap_or(0)
}
