//! Exponent bookkeeping: the Sobolev-type pair `1/q = 1/p − α/n` and the atom degree.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Slack absorbing representation error in `n(1/p − 1)` before flooring
/// (`p = 2/3` is not exact in binary).
const FLOOR_GUARD: f64 = 1e-9;

/// `q` with `1/q = 1/p − α/n`.
pub fn conjugate_exponent(p: f64, alpha: f64, n: usize) -> Result<f64> {
    if !(p > 0.0) {
        return Err(Error::InvalidParameter(format!("p must be positive, got {p}")));
    }
    if !(0.0..n as f64).contains(&alpha) {
        return Err(Error::InvalidParameter(format!("α must lie in [0, {n}), got {alpha}")));
    }
    if alpha == 0.0 {
        return Ok(p);
    }
    let inv_q = 1.0 / p - alpha / n as f64;
    if inv_q <= 0.0 {
        return Err(Error::OutOfRange(format!("p = {p} must be below n/α = {}", n as f64 / alpha)));
    }
    Ok(1.0 / inv_q)
}

/// `d_p = ⌊n(1/p − 1)⌋` for `0 < p ≤ 1`.
pub fn atom_degree(p: f64, n: usize) -> Result<u32> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::InvalidParameter(format!("atom exponent p must lie in (0, 1], got {p}")));
    }
    let x = n as f64 * (1.0 / p - 1.0);
    Ok((x + FLOOR_GUARD).floor() as u32)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExponentPair {
    pub p: f64,
    pub q: f64,
}

impl ExponentPair {
    pub fn new(p: f64, alpha: f64, n: usize) -> Result<Self> {
        let q = if p.is_infinite() && alpha == 0.0 {
            p
        } else {
            conjugate_exponent(p, alpha, n)?
        };
        Ok(Self { p, q })
    }
}
