//! Dense m-order n-dimensional real tensors and the multilinear maps built on them.
//!
//! Entries are stored flat in lexicographic order of the multi-index
//! `(i1, ..., im)` with `i1` varying slowest, so row `i` (all entries whose
//! first index is `i`) is the contiguous block `[i * n^(m-1), (i+1) * n^(m-1))`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest entry count for which the exhaustive symmetry check runs.
pub const SYMMETRY_CHECK_LIMIT: usize = 1_000_000;

#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    order: usize,
    dim: usize,
    entries: Vec<f64>,
    symmetric: bool,
}

/// Vector norm selector: `P(p)` for the l_p norm with `p >= 1`, or the max norm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "p", rename_all = "lowercase")]
pub enum NormKind {
    P(f64),
    Infinity,
}

impl NormKind {
    pub fn validate(self) -> Result<Self> {
        match self {
            NormKind::P(p) if !p.is_finite() || p < 1.0 => Err(Error::InvalidNorm(p)),
            k => Ok(k),
        }
    }
}

impl std::fmt::Display for NormKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            NormKind::P(p) => write!(f, "p={p}"),
            NormKind::Infinity => write!(f, "inf"),
        }
    }
}

fn checked_len(order: usize, dim: usize) -> Result<usize> {
    if order < 2 {
        return Err(Error::InvalidTensor(format!(
            "order must be >= 2, got {order}"
        )));
    }
    if dim < 1 {
        return Err(Error::InvalidTensor("dimension must be >= 1".into()));
    }
    u32::try_from(order)
        .ok()
        .and_then(|m| dim.checked_pow(m))
        .ok_or_else(|| Error::InvalidTensor(format!("n^m overflows for m={order}, n={dim}")))
}

impl Tensor {
    pub fn new(order: usize, dim: usize, entries: Vec<f64>) -> Result<Self> {
        let len = checked_len(order, dim)?;
        if entries.len() != len {
            return Err(Error::InvalidTensor(format!(
                "expected {len} entries for m={order}, n={dim}, got {}",
                entries.len()
            )));
        }
        Ok(Self {
            order,
            dim,
            entries,
            symmetric: false,
        })
    }

    pub fn filled(order: usize, dim: usize, value: f64) -> Result<Self> {
        let len = checked_len(order, dim)?;
        Self::new(order, dim, vec![value; len])
    }

    pub fn zeros(order: usize, dim: usize) -> Result<Self> {
        Self::filled(order, dim, 0.0)
    }

    /// Builds a tensor by evaluating `f` at every 0-based multi-index.
    pub fn from_fn(order: usize, dim: usize, mut f: impl FnMut(&[usize]) -> f64) -> Result<Self> {
        let len = checked_len(order, dim)?;
        let mut entries = Vec::with_capacity(len);
        let mut idx = MultiIndex::new(order, dim);
        loop {
            entries.push(f(idx.digits()));
            if !idx.advance() {
                break;
            }
        }
        Self::new(order, dim, entries)
    }

    /// Diagonal tensor with `a_{ii...i} = values[i]`.
    pub fn diagonal(order: usize, values: &[f64]) -> Result<Self> {
        let mut t = Self::zeros(order, values.len())?;
        for (i, &v) in values.iter().enumerate() {
            let k = t.diagonal_offset(i);
            t.entries[k] = v;
        }
        Ok(t)
    }

    /// The unit diagonal tensor: `a_{ii...i} = 1`, every other entry 0.
    pub fn unit_diagonal(order: usize, dim: usize) -> Result<Self> {
        Self::diagonal(order, &vec![1.0; dim])
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Number of entries per row, `n^(m-1)`.
    pub fn row_len(&self) -> usize {
        self.entries.len() / self.dim
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let w = self.row_len();
        &self.entries[i * w..(i + 1) * w]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.entries.chunks_exact(self.row_len())
    }

    /// Flat offset of a 0-based multi-index.
    pub fn offset(&self, index: &[usize]) -> Result<usize> {
        if index.len() != self.order {
            return Err(Error::DimensionMismatch {
                expected: self.order,
                actual: index.len(),
            });
        }
        let mut k = 0;
        for &i in index {
            if i >= self.dim {
                return Err(Error::InvalidArgument(format!(
                    "index component {i} out of range for dimension {}",
                    self.dim
                )));
            }
            k = k * self.dim + i;
        }
        Ok(k)
    }

    pub fn get(&self, index: &[usize]) -> Result<f64> {
        Ok(self.entries[self.offset(index)?])
    }

    pub fn set(&mut self, index: &[usize], value: f64) -> Result<()> {
        let k = self.offset(index)?;
        self.entries[k] = value;
        self.symmetric = false;
        Ok(())
    }

    /// Offset of `(i, i, ..., i)` in the flat storage.
    pub fn diagonal_offset(&self, i: usize) -> usize {
        // sum_{k<m} i * n^k = i * (n^m - 1) / (n - 1), or i when n = 1
        let step = if self.dim == 1 {
            self.order
        } else {
            (self.entries.len() - 1) / (self.dim - 1)
        };
        i * step
    }

    /// Offset of `(i, i, ..., i)` within row `i`.
    pub fn diagonal_offset_in_row(&self, i: usize) -> usize {
        self.diagonal_offset(i) - i * self.row_len()
    }

    pub fn diagonal_entry(&self, i: usize) -> f64 {
        self.entries[self.diagonal_offset(i)]
    }

    pub fn diagonal_entries(&self) -> Vec<f64> {
        (0..self.dim).map(|i| self.diagonal_entry(i)).collect()
    }

    pub fn scaled(&self, t: f64) -> Self {
        Self {
            order: self.order,
            dim: self.dim,
            entries: self.entries.iter().map(|a| a * t).collect(),
            symmetric: self.symmetric,
        }
    }

    /// Entry-wise sum with another tensor of the same shape.
    pub fn add(&self, other: &Tensor) -> Result<Self> {
        if self.order != other.order || self.dim != other.dim {
            return Err(Error::InvalidArgument(format!(
                "shape mismatch: ({}, {}) vs ({}, {})",
                self.order, self.dim, other.order, other.dim
            )));
        }
        Self::new(
            self.order,
            self.dim,
            self.entries
                .iter()
                .zip(&other.entries)
                .map(|(a, b)| a + b)
                .collect(),
        )
    }

    /// Value of the symmetric metadata flag. Operations never rely on it.
    pub fn symmetric_flag(&self) -> bool {
        self.symmetric
    }

    /// Sets the symmetric flag after verifying permutation invariance.
    pub fn mark_symmetric(&mut self) -> Result<()> {
        if !self.is_symmetric()? {
            return Err(Error::InvalidTensor(
                "entries are not invariant under index permutation".into(),
            ));
        }
        self.symmetric = true;
        Ok(())
    }

    /// Exhaustive check that every entry equals the entry at its sorted multi-index.
    pub fn is_symmetric(&self) -> Result<bool> {
        if self.entries.len() > SYMMETRY_CHECK_LIMIT {
            return Err(Error::InvalidArgument(format!(
                "symmetry check limited to {SYMMETRY_CHECK_LIMIT} entries"
            )));
        }
        let mut idx = MultiIndex::new(self.order, self.dim);
        let mut sorted = vec![0; self.order];
        let mut flat = 0;
        loop {
            sorted.copy_from_slice(idx.digits());
            sorted.sort_unstable();
            let canon = sorted.iter().fold(0, |k, &i| k * self.dim + i);
            if self.entries[canon] != self.entries[flat] {
                return Ok(false);
            }
            flat += 1;
            if !idx.advance() {
                return Ok(true);
            }
        }
    }

    fn check_vector(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                actual: x.len(),
            });
        }
        Ok(())
    }

    /// `A x^{m-1}`: `y_i = sum a_{i i2...im} x_{i2} ... x_{im}`.
    pub fn contract(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_vector(x)?;
        let outer = outer_power(x, self.order - 1);
        Ok(self.rows().map(|row| dot(row, &outer)).collect())
    }

    /// `A x^m = x^T (A x^{m-1})`.
    pub fn homogeneous_form(&self, x: &[f64]) -> Result<f64> {
        let y = self.contract(x)?;
        Ok(dot(x, &y))
    }

    /// Jacobian of `x -> A x^{m-1}`, row-major `n x n`.
    ///
    /// Uses the full multilinear derivative (a sum over every tail index
    /// position), so it is exact for non-symmetric tensors.
    pub fn contract_jacobian(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_vector(x)?;
        let n = self.dim;
        let tail = self.order - 1;
        let mut jac = vec![0.0; n * n];
        let mut prefix = vec![1.0; tail + 1];
        let mut suffix = vec![1.0; tail + 1];
        for (i, row) in self.rows().enumerate() {
            let mut idx = MultiIndex::new(tail, n);
            for &a in row {
                if a != 0.0 {
                    let d = idx.digits();
                    for p in 0..tail {
                        prefix[p + 1] = prefix[p] * x[d[p]];
                    }
                    for p in (0..tail).rev() {
                        suffix[p] = suffix[p + 1] * x[d[p]];
                    }
                    for p in 0..tail {
                        jac[i * n + d[p]] += a * prefix[p] * suffix[p + 1];
                    }
                }
                idx.advance();
            }
        }
        Ok(jac)
    }

    /// `T_A(x) = ||x||_2^{2-m} A x^{m-1}`, with `T_A(0) = 0`.
    pub fn t_operator(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_vector(x)?;
        let r = norm(x, NormKind::P(2.0));
        if r == 0.0 {
            return Ok(vec![0.0; self.dim]);
        }
        let scale = r.powi(2 - self.order as i32);
        Ok(self.contract(x)?.into_iter().map(|v| v * scale).collect())
    }

    /// `F_A(x) = (A x^{m-1})^{[1/(m-1)]}` for even `m`, using the real odd root
    /// `sign(v) |v|^{1/(m-1)}` componentwise.
    pub fn f_operator(&self, x: &[f64]) -> Result<Vec<f64>> {
        if !self.order.is_multiple_of(2) {
            return Err(Error::UnsupportedOrder(self.order));
        }
        let k = self.order - 1;
        Ok(self
            .contract(x)?
            .into_iter()
            .map(|v| signed_root(v, k))
            .collect())
    }
}

/// Odometer over `{0..n}^len` in lexicographic order, last digit fastest.
#[derive(Debug, Clone)]
pub struct MultiIndex {
    digits: Vec<usize>,
    base: usize,
}

impl MultiIndex {
    pub fn new(len: usize, base: usize) -> Self {
        Self {
            digits: vec![0; len],
            base,
        }
    }

    pub fn digits(&self) -> &[usize] {
        &self.digits
    }

    /// Steps to the next index; returns false (and wraps to zero) after the last one.
    pub fn advance(&mut self) -> bool {
        for d in self.digits.iter_mut().rev() {
            *d += 1;
            if *d < self.base {
                return true;
            }
            *d = 0;
        }
        false
    }
}

/// The `k`-fold outer product of `x`, flattened lexicographically.
fn outer_power(x: &[f64], k: usize) -> Vec<f64> {
    let mut out = vec![1.0];
    for _ in 0..k {
        let mut next = Vec::with_capacity(out.len() * x.len());
        for &a in &out {
            next.extend(x.iter().map(|&b| a * b));
        }
        out = next;
    }
    out
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Real `k`-th root preserving sign; meaningful for odd `k`.
pub fn signed_root(v: f64, k: usize) -> f64 {
    match k {
        1 => v,
        3 => v.cbrt(),
        _ => v.signum() * v.abs().powf(1.0 / k as f64),
    }
}

fn is_integer_exponent(r: f64) -> bool {
    r.fract() == 0.0 && r.abs() <= i32::MAX as f64
}

/// Componentwise power `x^{[r]}`.
///
/// Integer exponents use the ordinary power, so odd powers keep the sign.
/// Non-integer exponents require nonnegative components.
pub fn vector_power(x: &[f64], r: f64) -> Result<Vec<f64>> {
    if is_integer_exponent(r) {
        let k = r as i32;
        return Ok(x.iter().map(|v| v.powi(k)).collect());
    }
    x.iter()
        .enumerate()
        .map(|(index, &v)| {
            if v < 0.0 {
                Err(Error::NegativeBase {
                    index,
                    value: v,
                    exponent: r,
                })
            } else {
                Ok(v.powf(r))
            }
        })
        .collect()
}

/// `||x||_p` or `||x||_inf`. The p-norm is computed on `x / max|x_i|` to avoid
/// overflow at large `p`.
pub fn norm(x: &[f64], kind: NormKind) -> f64 {
    let max = x.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    match kind {
        NormKind::Infinity => max,
        NormKind::P(_) if max == 0.0 => 0.0,
        NormKind::P(1.0) => x.iter().map(|v| v.abs()).sum(),
        NormKind::P(2.0) => max * x.iter().map(|v| (v / max) * (v / max)).sum::<f64>().sqrt(),
        NormKind::P(p) => {
            max * x
                .iter()
                .map(|v| (v.abs() / max).powf(p))
                .sum::<f64>()
                .powf(1.0 / p)
        }
    }
}
