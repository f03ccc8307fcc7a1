//! B / B0 classification, row diagnostics, semi-positivity grid certificates
//! and generators for tensors of each class.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;
use crate::tensor::Tensor;

/// Largest simplex grid `check_semipositive` will enumerate.
pub const GRID_LIMIT: u128 = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    B,
    B0,
    Neither,
}

impl Verdict {
    pub fn name(self) -> &'static str {
        match self {
            Verdict::B => "B",
            Verdict::B0 => "B0",
            Verdict::Neither => "Neither",
        }
    }
}

/// Which class a bound formula assumes: strict (`B`) or non-strict (`B0`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Variant {
    B,
    B0,
}

impl Variant {
    pub fn is_strict(self) -> bool {
        matches!(self, Variant::B)
    }

    /// Checks that `verdict` satisfies this variant's precondition.
    pub fn admits(self, verdict: Verdict) -> bool {
        match self {
            Variant::B => verdict == Verdict::B,
            Variant::B0 => verdict != Verdict::Neither,
        }
    }

    pub fn require(self, t: &Tensor) -> Result<()> {
        let verdict = classify(t).verdict;
        if self.admits(verdict) {
            Ok(())
        } else {
            Err(Error::WrongClass {
                required: match self {
                    Variant::B => "B",
                    Variant::B0 => "B0 (or B)",
                },
                actual: verdict.name(),
            })
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RowData {
    pub row_sum: f64,
    /// `row_sum / n^(m-1)`.
    pub threshold: f64,
    /// Largest off-diagonal entry of the row; `None` when `n = 1`.
    pub max_offdiag: Option<f64>,
    /// Flat offset of `max_offdiag` within the row.
    #[serde(skip)]
    pub argmax_offdiag: Option<usize>,
    pub beta: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FailureKind {
    RowSumNegative,
    RowSumNotPositive,
    OffDiagonalAboveAverage,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    /// 1-based row.
    pub row: usize,
    /// 1-based full multi-index of the offending entry, if any.
    pub index: Option<Vec<usize>>,
    pub kind: FailureKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassificationReport {
    pub verdict: Verdict,
    pub tolerance: f64,
    pub rows: Vec<RowData>,
    pub witnesses: Vec<Witness>,
}

/// Per-row sums, largest off-diagonal entries and `beta_i = max(0, max_offdiag_i)`.
pub fn row_data(t: &Tensor) -> Vec<RowData> {
    let width = t.row_len() as f64;
    t.rows()
        .enumerate()
        .map(|(i, row)| {
            let diag = t.diagonal_offset_in_row(i);
            let mut max_off: Option<(usize, f64)> = None;
            for (k, &v) in row.iter().enumerate() {
                if k != diag && max_off.is_none_or(|(_, m)| v > m) {
                    max_off = Some((k, v));
                }
            }
            let row_sum: f64 = row.iter().sum();
            let max_offdiag = max_off.map(|(_, v)| v);
            RowData {
                row_sum,
                threshold: row_sum / width,
                max_offdiag,
                argmax_offdiag: max_off.map(|(k, _)| k),
                beta: max_offdiag.map_or(0.0, |v| v.max(0.0)),
            }
        })
        .collect()
}

pub fn classify(t: &Tensor) -> ClassificationReport {
    classify_with_tolerance(t, 0.0)
}

/// Classification with a noise tolerance `tol >= 0`.
///
/// A row counts toward `B` only if its row sum and its average-minus-largest
/// off-diagonal margin both exceed `tol`; it counts toward `B0` if both are
/// at least `-tol`. With `tol = 0` this is the exact definition.
pub fn classify_with_tolerance(t: &Tensor, tol: f64) -> ClassificationReport {
    let rows = row_data(t);
    let mut strict = true;
    let mut weak = true;
    let mut witnesses = Vec::new();
    for (i, r) in rows.iter().enumerate() {
        let margin = r.max_offdiag.map_or(f64::INFINITY, |m| r.threshold - m);
        let sum_strict = r.row_sum > tol;
        let sum_weak = r.row_sum >= -tol;
        let off_strict = margin > tol;
        let off_weak = margin >= -tol;
        strict &= sum_strict && off_strict;
        weak &= sum_weak && off_weak;
        if !sum_weak {
            witnesses.push(Witness {
                row: i + 1,
                index: None,
                kind: FailureKind::RowSumNegative,
            });
        }
        if !off_weak {
            let flat = i * t.row_len() + r.argmax_offdiag.unwrap_or(0);
            witnesses.push(Witness {
                row: i + 1,
                index: Some(one_based_index(t, flat)),
                kind: FailureKind::OffDiagonalAboveAverage,
            });
        }
    }
    let verdict = if strict {
        Verdict::B
    } else if weak {
        Verdict::B0
    } else {
        Verdict::Neither
    };
    if verdict != Verdict::Neither {
        witnesses.clear();
    }
    ClassificationReport {
        verdict,
        tolerance: tol,
        rows,
        witnesses,
    }
}

fn one_based_index(t: &Tensor, mut flat: usize) -> Vec<usize> {
    let n = t.dim();
    let mut idx = vec![0; t.order()];
    for slot in idx.iter_mut().rev() {
        *slot = flat % n + 1;
        flat /= n;
    }
    idx
}

/// Row-wise consequences of membership in B (strict) or B0 (non-strict).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RowDiagnostics {
    /// Diagonal entry dominates every off-diagonal entry in absolute value.
    pub diagonal_dominance: bool,
    /// `row_sum > n^(m-1) beta`.
    pub row_sum_exceeds_beta: bool,
    /// Diagonal entry exceeds the total magnitude of the row's negative entries.
    pub diagonal_exceeds_negatives: bool,
}

impl RowDiagnostics {
    pub fn all(&self) -> bool {
        self.diagonal_dominance && self.row_sum_exceeds_beta && self.diagonal_exceeds_negatives
    }
}

pub fn row_diagnostics(t: &Tensor, strict: bool) -> Result<Vec<RowDiagnostics>> {
    let variant = if strict { Variant::B } else { Variant::B0 };
    variant.require(t)?;
    let cmp = |a: f64, b: f64| if strict { a > b } else { a >= b };
    let width = t.row_len() as f64;
    Ok(row_data(t)
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let row = t.row(i);
            let d = t.diagonal_offset_in_row(i);
            let diag = row[d];
            let max_abs_off = row
                .iter()
                .enumerate()
                .filter(|&(k, _)| k != d)
                .map(|(_, v)| v.abs())
                .fold(None, |m: Option<f64>, v| Some(m.map_or(v, |m| m.max(v))));
            let negatives: f64 = row.iter().filter(|&&v| v < 0.0).map(|v| -v).sum();
            RowDiagnostics {
                diagonal_dominance: max_abs_off.is_none_or(|m| cmp(diag, m)),
                row_sum_exceeds_beta: cmp(r.row_sum, width * r.beta),
                diagonal_exceeds_negatives: cmp(diag, negatives),
            }
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SemiPositivityMode {
    Strict,
    Weak,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SemiPositivityCertificate {
    pub mode: SemiPositivityMode,
    pub resolution: usize,
    pub points_checked: u64,
    /// Grid point minimizing `max_{k: x_k > 0} (A x^{m-1})_k`.
    pub worst_point: Vec<f64>,
    pub worst_value: f64,
    pub violated: bool,
}

/// Number of points `k / d` on the standard simplex in `R^n`: `C(d + n - 1, n - 1)`.
pub fn simplex_grid_size(n: usize, d: usize) -> u128 {
    let mut c: u128 = 1;
    for k in 1..n as u128 {
        c = c * (d as u128 + k) / k;
        if c > u64::MAX as u128 {
            return u128::MAX;
        }
    }
    c
}

/// Visits every composition of `d` into `n` nonnegative parts, starting at
/// `(d, 0, ..., 0)` and ending at `(0, ..., 0, d)`.
pub fn for_each_composition(n: usize, d: usize, mut f: impl FnMut(&[usize])) {
    let mut parts = vec![0; n];
    parts[0] = d;
    loop {
        f(&parts);
        // find the rightmost non-final slot holding units, move one unit right
        let Some(j) = (0..n.saturating_sub(1)).rev().find(|&j| parts[j] > 0) else {
            return;
        };
        parts[j] -= 1;
        let rest = parts[n - 1];
        parts[n - 1] = 0;
        parts[j + 1] = rest + 1;
    }
}

/// Grid certificate for (strict) semi-positivity on the simplex with denominator `d`.
///
/// Ties for the worst point go to the first point in enumeration order,
/// which starts at `e_1`.
pub fn check_semipositive(
    t: &Tensor,
    mode: SemiPositivityMode,
    resolution: usize,
) -> Result<SemiPositivityCertificate> {
    if resolution < 1 {
        return Err(Error::InvalidArgument(
            "grid resolution must be >= 1".into(),
        ));
    }
    let points = simplex_grid_size(t.dim(), resolution);
    if points > GRID_LIMIT {
        return Err(Error::GridTooLarge {
            points,
            limit: GRID_LIMIT,
        });
    }
    let d = resolution as f64;
    let mut worst: Option<(Vec<f64>, f64)> = None;
    let mut checked = 0u64;
    let mut x = vec![0.0; t.dim()];
    let mut err = None;
    for_each_composition(t.dim(), resolution, |parts| {
        if err.is_some() {
            return;
        }
        for (xi, &k) in x.iter_mut().zip(parts) {
            *xi = k as f64 / d;
        }
        let y = match t.contract(&x) {
            Ok(y) => y,
            Err(e) => {
                err = Some(e);
                return;
            }
        };
        let value = parts
            .iter()
            .zip(&y)
            .filter(|(&k, _)| k > 0)
            .map(|(_, &v)| v)
            .fold(f64::NEG_INFINITY, f64::max);
        checked += 1;
        if worst.as_ref().is_none_or(|(_, w)| value < *w) {
            worst = Some((x.clone(), value));
        }
    });
    if let Some(e) = err {
        return Err(e);
    }
    let (worst_point, worst_value) = worst.expect("grid is never empty");
    let violated = match mode {
        SemiPositivityMode::Strict => worst_value <= 0.0,
        SemiPositivityMode::Weak => worst_value < 0.0,
    };
    Ok(SemiPositivityCertificate {
        mode,
        resolution,
        points_checked: checked,
        worst_point,
        worst_value,
        violated,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GenKind {
    B,
    B0,
    Diagonal,
    Random,
}

/// Retry cap for class-verified generation.
pub const GENERATION_RETRIES: u64 = 100;

const DYADIC_STEPS: i64 = 1024;

fn dyadic_unit<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.gen_range(-DYADIC_STEPS..=DYADIC_STEPS) as f64 / DYADIC_STEPS as f64
}

fn dyadic_margin<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.gen_range(1..=DYADIC_STEPS) as f64 / DYADIC_STEPS as f64
}

/// Off-diagonal entries uniform on the dyadic grid `k / 1024` in `[-1, 1]`;
/// each diagonal entry is chosen so that `row_sum_i = n^(m-1) (beta_i + margin_i)`.
/// Rows listed in `tight_rows` get margin 0. All values are multiples of
/// `2^-10` small enough that every row sum is computed exactly.
fn generate_structured<R: Rng + ?Sized>(
    rng: &mut R,
    order: usize,
    dim: usize,
    tight_row: Option<usize>,
) -> Result<Tensor> {
    let mut t = Tensor::zeros(order, dim)?;
    let width = t.row_len();
    let mut entries = t.entries().to_vec();
    for i in 0..dim {
        let d = t.diagonal_offset_in_row(i);
        let row = &mut entries[i * width..(i + 1) * width];
        let mut off_sum = 0.0;
        let mut max_off = f64::NEG_INFINITY;
        for (k, v) in row.iter_mut().enumerate() {
            if k != d {
                *v = dyadic_unit(rng);
                off_sum += *v;
                max_off = max_off.max(*v);
            }
        }
        let beta = max_off.max(0.0);
        let margin = if tight_row == Some(i) {
            0.0
        } else {
            dyadic_margin(rng)
        };
        row[d] = width as f64 * (beta + margin) - off_sum;
    }
    t = Tensor::new(order, dim, entries)?;
    Ok(t)
}

/// A random `B` tensor (verified by `classify`).
pub fn generate_b(order: usize, dim: usize, seed: u64) -> Result<Tensor> {
    generate(GenKind::B, order, dim, seed)
}

/// A random `B0` tensor that is not `B`: one row has zero margin.
pub fn generate_b0(order: usize, dim: usize, seed: u64) -> Result<Tensor> {
    generate(GenKind::B0, order, dim, seed)
}

pub fn generate(kind: GenKind, order: usize, dim: usize, seed: u64) -> Result<Tensor> {
    match kind {
        GenKind::Diagonal => Tensor::unit_diagonal(order, dim),
        GenKind::Random => {
            let mut rng = rng::stream(seed, 0);
            let len = Tensor::zeros(order, dim)?.len();
            Tensor::new(
                order,
                dim,
                (0..len).map(|_| dyadic_unit(&mut rng)).collect(),
            )
        }
        GenKind::B | GenKind::B0 => {
            let want = if kind == GenKind::B {
                Verdict::B
            } else {
                Verdict::B0
            };
            for attempt in 0..GENERATION_RETRIES {
                let mut rng = rng::stream(seed, attempt);
                let tight = (kind == GenKind::B0).then(|| rng.gen_range(0..dim));
                let t = generate_structured(&mut rng, order, dim, tight)?;
                if classify(&t).verdict == want {
                    return Ok(t);
                }
            }
            Err(Error::InvalidArgument(format!(
                "could not generate a {} tensor in {GENERATION_RETRIES} attempts",
                want.name()
            )))
        }
    }
}
