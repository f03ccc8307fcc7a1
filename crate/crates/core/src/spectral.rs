//! Real H-eigenpairs (`A x^{m-1} = lambda x^{[m-1]}`) and Z-eigenpairs
//! (`A x^{m-1} = mu x (x^T x)^{(m-2)/2}`) by multistart search, and checks of
//! the diagonal-only spectral bounds for B / B0 tensors.

use std::cmp::Ordering;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::linalg::{l2, solve};
use crate::rng;
use crate::structure::Variant;
use crate::tensor::{dot, vector_power, Tensor};

/// Largest residual accepted for a returned pair.
pub const RESIDUAL_TOL: f64 = 1e-8;
const DEDUP_VALUE_TOL: f64 = 1e-6;
const DEDUP_VECTOR_TOL: f64 = 1e-4;
const NEWTON_MAX_ITER: usize = 100;
const POWER_MAX_ITER: usize = 10_000;
const POWER_STABLE_STEPS: usize = 5;
const POWER_VALUE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EigenKind {
    H,
    Z,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenPair {
    pub kind: EigenKind,
    pub value: f64,
    /// `||x||_inf = 1` for H pairs, `||x||_2 = 1` for Z pairs.
    pub vector: Vec<f64>,
    pub residual: f64,
}

/// Right-hand side of the defining equation at `x`, without the eigenvalue.
fn rhs(kind: EigenKind, order: usize, x: &[f64]) -> Vec<f64> {
    match kind {
        EigenKind::H => vector_power(x, (order - 1) as f64).expect("integer exponent"),
        EigenKind::Z => {
            let s = dot(x, x).powf((order as f64 - 2.0) / 2.0);
            x.iter().map(|v| v * s).collect()
        }
    }
}

/// `||A x^{m-1} - value * rhs(x)||_2`.
pub fn pair_residual(a: &Tensor, kind: EigenKind, value: f64, x: &[f64]) -> Result<f64> {
    let y = a.contract(x)?;
    let r = rhs(kind, a.order(), x);
    Ok(l2(&y
        .iter()
        .zip(&r)
        .map(|(yi, ri)| yi - value * ri)
        .collect::<Vec<_>>()))
}

/// Residual and Jacobian of the bordered eigen-system in `z = (x, value)`,
/// with normalization row `(x^T x - 1) / 2`.
fn system(a: &Tensor, kind: EigenKind, z: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let n = a.dim();
    let m = a.order();
    let (x, val) = (&z[..n], z[n]);
    let y = a.contract(x).expect("length checked");
    let jac_a = a.contract_jacobian(x).expect("length checked");
    let r = rhs(kind, m, x);
    let s = dot(x, x);
    let dim = n + 1;
    let mut f = vec![0.0; dim];
    let mut jac = vec![0.0; dim * dim];
    for i in 0..n {
        f[i] = y[i] - val * r[i];
        for j in 0..n {
            jac[i * dim + j] = jac_a[i * n + j];
        }
        jac[i * dim + n] = -r[i];
        jac[n * dim + i] = x[i];
    }
    f[n] = 0.5 * (s - 1.0);
    match kind {
        EigenKind::H => {
            let k = (m - 1) as f64;
            for i in 0..n {
                jac[i * dim + i] -= val * k * x[i].powi(m as i32 - 2);
            }
        }
        EigenKind::Z => {
            let mf = m as f64;
            let a0 = s.powf((mf - 2.0) / 2.0);
            let a1 = (mf - 2.0) * s.powf((mf - 4.0) / 2.0);
            for i in 0..n {
                jac[i * dim + i] -= val * a0;
                for j in 0..n {
                    jac[i * dim + j] -= val * a1 * x[i] * x[j];
                }
            }
        }
    }
    (f, jac)
}

/// Damped Newton with backtracking on the residual 2-norm.
fn newton(a: &Tensor, kind: EigenKind, mut z: Vec<f64>) -> Vec<f64> {
    let dim = z.len();
    let scale = 1.0 + a.entries().iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let (mut f, mut jac) = system(a, kind, &z);
    let mut nf = l2(&f);
    for _ in 0..NEWTON_MAX_ITER {
        if nf <= 1e-15 * scale {
            break;
        }
        let neg: Vec<f64> = f.iter().map(|v| -v).collect();
        let Some(d) = solve(dim, &jac, &neg) else {
            break;
        };
        let mut t = 1.0;
        let mut accepted = None;
        while t > 1e-10 {
            let trial: Vec<f64> = z.iter().zip(&d).map(|(zi, di)| zi + t * di).collect();
            let (ft, jt) = system(a, kind, &trial);
            let nt = l2(&ft);
            if nt < (1.0 - 1e-4 * t) * nf {
                accepted = Some((trial, ft, jt, nt));
                break;
            }
            t *= 0.5;
        }
        let Some((zt, ft, jt, nt)) = accepted else {
            break;
        };
        z = zt;
        f = ft;
        jac = jt;
        nf = nt;
    }
    z
}

fn canonical_sign(x: &mut [f64]) {
    let lead = x
        .iter()
        .copied()
        .enumerate()
        .fold((0, 0.0_f64), |(bi, bv), (i, v)| {
            if v.abs() > bv.abs() + 1e-12 {
                (i, v)
            } else {
                (bi, bv)
            }
        })
        .1;
    if lead < 0.0 {
        x.iter_mut().for_each(|v| *v = -*v);
    }
}

/// Flipping the sign of `x` preserves the eigenvalue for H pairs always and
/// for Z pairs of even order.
fn sign_symmetric(kind: EigenKind, order: usize) -> bool {
    kind == EigenKind::H || order.is_multiple_of(2)
}

fn finish(a: &Tensor, kind: EigenKind, z: &[f64]) -> Option<EigenPair> {
    let n = a.dim();
    let x = &z[..n];
    if x.iter().any(|v| !v.is_finite()) {
        return None;
    }
    let mut x: Vec<f64> = match kind {
        EigenKind::H => {
            let m = x.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
            if m == 0.0 {
                return None;
            }
            x.iter().map(|v| v / m).collect()
        }
        EigenKind::Z => {
            let r = l2(x);
            if r == 0.0 {
                return None;
            }
            x.iter().map(|v| v / r).collect()
        }
    };
    if sign_symmetric(kind, a.order()) {
        canonical_sign(&mut x);
    }
    let y = a.contract(&x).ok()?;
    let r = rhs(kind, a.order(), &x);
    let value = match kind {
        EigenKind::H => {
            let rr = dot(&r, &r);
            if rr == 0.0 {
                return None;
            }
            dot(&r, &y) / rr
        }
        EigenKind::Z => dot(&x, &y) / dot(&x, &x).powf(a.order() as f64 / 2.0),
    };
    let residual = pair_residual(a, kind, value, &x).ok()?;
    (residual <= RESIDUAL_TOL && value.is_finite()).then_some(EigenPair {
        kind,
        value,
        vector: x,
        residual,
    })
}

fn canonical_order(p: &EigenPair, q: &EigenPair) -> Ordering {
    p.value.total_cmp(&q.value).then_with(|| {
        p.vector
            .iter()
            .zip(&q.vector)
            .map(|(a, b)| a.total_cmp(b))
            .find(|o| o.is_ne())
            .unwrap_or(Ordering::Equal)
    })
}

fn same_pair(p: &EigenPair, q: &EigenPair, sign_free: bool) -> bool {
    if (p.value - q.value).abs() > DEDUP_VALUE_TOL {
        return false;
    }
    let close = |s: f64| {
        p.vector
            .iter()
            .zip(&q.vector)
            .all(|(a, b)| (a - s * b).abs() <= DEDUP_VECTOR_TOL)
    };
    close(1.0) || (sign_free && close(-1.0))
}

fn dedup(a: &Tensor, kind: EigenKind, mut pairs: Vec<EigenPair>) -> Vec<EigenPair> {
    pairs.sort_by(canonical_order);
    let sign_free = sign_symmetric(kind, a.order());
    let mut out: Vec<EigenPair> = Vec::new();
    for p in pairs {
        if !out.iter().any(|q| same_pair(q, &p, sign_free)) {
            out.push(p);
        }
    }
    out
}

fn start_vector(a: &Tensor, seed: u64, k: usize) -> Vec<f64> {
    rng::unit_sphere(&mut rng::stream(seed, k as u64), a.dim())
}

/// Multistart damped Newton for real H-eigenpairs. Returned pairs are
/// deduplicated, sorted by value then vector, and all have residual at most
/// `RESIDUAL_TOL`.
pub fn find_h_pairs(a: &Tensor, starts: usize, seed: u64) -> Vec<EigenPair> {
    let n = a.dim();
    let found: Vec<EigenPair> = (0..starts)
        .into_par_iter()
        .filter_map(|k| {
            let x = start_vector(a, seed, k);
            let y = a.contract(&x).ok()?;
            let r = rhs(EigenKind::H, a.order(), &x);
            let rr = dot(&r, &r);
            let lambda = if rr > 1e-12 {
                dot(&r, &y) / rr
            } else {
                dot(&x, &y)
            };
            let mut z = x;
            z.push(lambda);
            let z = newton(a, EigenKind::H, z);
            debug_assert_eq!(z.len(), n + 1);
            finish(a, EigenKind::H, &z)
        })
        .collect();
    dedup(a, EigenKind::H, found)
}

/// Shift for the Z-pair power iteration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Shift {
    /// `1 + sum |a|`.
    Auto,
    Fixed(f64),
}

impl Shift {
    pub fn resolve(self, a: &Tensor) -> f64 {
        match self {
            Shift::Auto => 1.0 + a.entries().iter().map(|v| v.abs()).sum::<f64>(),
            Shift::Fixed(v) => v,
        }
    }
}

/// Shifted power iteration `x <- normalize(A x^{m-1} + alpha x)` on the unit
/// sphere. Stops once the Rayleigh value `A x^m` has changed by less than
/// `1e-12` for five consecutive steps.
fn shifted_power(a: &Tensor, mut x: Vec<f64>, alpha: f64) -> (Vec<f64>, f64) {
    let mut mu = a.homogeneous_form(&x).expect("length checked");
    let mut stable = 0;
    for _ in 0..POWER_MAX_ITER {
        let y = a.contract(&x).expect("length checked");
        let next: Vec<f64> = y.iter().zip(&x).map(|(yi, xi)| yi + alpha * xi).collect();
        let r = l2(&next);
        if r == 0.0 || !r.is_finite() {
            break;
        }
        x = next.into_iter().map(|v| v / r).collect();
        let mu_next = a.homogeneous_form(&x).expect("length checked");
        if (mu_next - mu).abs() < POWER_VALUE_TOL {
            stable += 1;
            if stable >= POWER_STABLE_STEPS {
                mu = mu_next;
                break;
            }
        } else {
            stable = 0;
        }
        mu = mu_next;
    }
    (x, mu)
}

/// Multistart search for real Z-eigenpairs.
///
/// Symmetric tensors use the shifted power iteration (even starts ascend
/// with `+alpha`, odd starts run it on `-A` to reach the other end of the
/// spectrum), followed by a Newton polish. Non-symmetric tensors go straight
/// to Newton on the bordered system. Every returned vector has unit 2-norm.
pub fn find_z_pairs(a: &Tensor, shift: Shift, starts: usize, seed: u64) -> Vec<EigenPair> {
    let symmetric = a.symmetric_flag() || a.is_symmetric().unwrap_or(false);
    let alpha = shift.resolve(a);
    let negated = a.scaled(-1.0);
    let found: Vec<EigenPair> = (0..starts)
        .into_par_iter()
        .filter_map(|k| {
            let x0 = start_vector(a, seed, k);
            let (x, mu) = if symmetric {
                if k % 2 == 0 {
                    shifted_power(a, x0, alpha)
                } else {
                    let (x, mu) = shifted_power(&negated, x0, alpha);
                    (x, -mu)
                }
            } else {
                let mu = a.homogeneous_form(&x0).ok()?;
                (x0, mu)
            };
            let mut z = x;
            z.push(mu);
            let z = newton(a, EigenKind::Z, z);
            finish(a, EigenKind::Z, &z)
        })
        .collect();
    dedup(a, EigenKind::Z, found)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenBoundReport {
    pub variant: Variant,
    /// `(sum b_ii^(1/(m-1)))^(m-1)`; even order only.
    pub h_bound: Option<f64>,
    /// `n^(m/2) min(max b_ii, mean b_ii)`.
    pub z_bound: f64,
    pub pairs_checked: usize,
    pub max_abs_h: Option<f64>,
    pub max_abs_z: Option<f64>,
    /// H pairs were supplied for an odd-order tensor and not compared.
    pub h_skipped: bool,
    pub all_within: bool,
}

pub fn eigen_bounds(b: &Tensor, variant: Variant) -> Result<EigenBoundReport> {
    variant.require(b)?;
    let m = b.order();
    let n = b.dim() as f64;
    let diag = b.diagonal_entries();
    let h_bound = m.is_multiple_of(2).then(|| {
        let k = (m - 1) as f64;
        diag.iter().map(|d| d.powf(1.0 / k)).sum::<f64>().powf(k)
    });
    let max_diag = diag.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mean_diag = diag.iter().sum::<f64>() / n;
    Ok(EigenBoundReport {
        variant,
        h_bound,
        z_bound: n.powf(m as f64 / 2.0) * max_diag.min(mean_diag),
        pairs_checked: 0,
        max_abs_h: None,
        max_abs_z: None,
        h_skipped: false,
        all_within: true,
    })
}

/// Compares every supplied pair against the bounds: strict `<` for `B`,
/// `<=` for `B0`. An empty list is vacuously within bounds.
pub fn verify_bounds(
    b: &Tensor,
    pairs: &[EigenPair],
    variant: Variant,
) -> Result<EigenBoundReport> {
    let mut report = eigen_bounds(b, variant)?;
    let within = |v: f64, bound: f64| {
        if variant.is_strict() {
            v < bound
        } else {
            v <= bound
        }
    };
    let max_abs = |kind: EigenKind| {
        pairs
            .iter()
            .filter(|p| p.kind == kind)
            .map(|p| p.value.abs())
            .fold(None, |m: Option<f64>, v| Some(m.map_or(v, |m| m.max(v))))
    };
    report.pairs_checked = pairs.len();
    report.max_abs_h = max_abs(EigenKind::H);
    report.max_abs_z = max_abs(EigenKind::Z);
    let h_ok = match (report.max_abs_h, report.h_bound) {
        (Some(v), Some(bound)) => within(v, bound),
        (Some(_), None) => {
            report.h_skipped = true;
            true
        }
        (None, _) => true,
    };
    let z_ok = report.max_abs_z.is_none_or(|v| within(v, report.z_bound));
    report.all_within = h_ok && z_ok;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonal_h_pairs() {
        let t = Tensor::unit_diagonal(4, 2).unwrap();
        let pairs = find_h_pairs(&t, 16, 1);
        assert!(!pairs.is_empty());
        for p in &pairs {
            assert!((p.value - 1.0).abs() < 1e-8);
        }
    }

    #[test]
    fn scalar_tensor() {
        let t = Tensor::filled(3, 1, 2.5).unwrap();
        let pairs = find_h_pairs(&t, 4, 0);
        assert_eq!(pairs.len(), 1);
        assert_eq!(pairs[0].value, 2.5);
        assert_eq!(pairs[0].vector, vec![1.0]);
    }

    #[test]
    fn diagonal_z_pairs() {
        let t = Tensor::unit_diagonal(4, 2).unwrap();
        let pairs = find_z_pairs(&t, Shift::Auto, 16, 1);
        assert!(pairs
            .iter()
            .any(|p| (p.value - 1.0).abs() < 1e-10 && (p.vector[0] - 1.0).abs() < 1e-8));
        for p in &pairs {
            assert!((l2(&p.vector) - 1.0).abs() < 1e-12);
            assert!(p.residual <= RESIDUAL_TOL);
        }
    }

    #[test]
    fn bounds_on_unit_diagonal_and_zero() {
        let t = Tensor::unit_diagonal(4, 2).unwrap();
        let r = eigen_bounds(&t, Variant::B).unwrap();
        assert_eq!(r.h_bound, Some(8.0));
        assert_eq!(r.z_bound, 4.0);
        let pair = EigenPair {
            kind: EigenKind::H,
            value: 1.0,
            vector: vec![1.0, 0.0],
            residual: 0.0,
        };
        let v = verify_bounds(&t, &[pair], Variant::B).unwrap();
        assert_eq!(v.max_abs_h, Some(1.0));
        assert!(v.all_within);

        let z = Tensor::zeros(4, 3).unwrap();
        let r = eigen_bounds(&z, Variant::B0).unwrap();
        assert_eq!(r.h_bound, Some(0.0));
        assert_eq!(r.z_bound, 0.0);
        let pairs = find_h_pairs(&z, 4, 0);
        assert!(!pairs.is_empty());
        assert!(verify_bounds(&z, &pairs, Variant::B0).unwrap().all_within);
        assert!(!verify_bounds(&z, &pairs, Variant::B0).unwrap().h_skipped);
        assert!(eigen_bounds(&z, Variant::B).is_err());
    }

    #[test]
    fn empty_pairs_vacuous() {
        let t = Tensor::unit_diagonal(3, 2).unwrap();
        let r = verify_bounds(&t, &[], Variant::B).unwrap();
        assert!(r.all_within);
        assert_eq!(r.pairs_checked, 0);
        assert_eq!(r.h_bound, None);
    }

    #[test]
    fn odd_order_h_pairs_are_skipped() {
        let t = Tensor::unit_diagonal(3, 2).unwrap();
        let pairs = find_h_pairs(&t, 8, 2);
        let r = verify_bounds(&t, &pairs, Variant::B).unwrap();
        assert!(r.h_skipped);
        assert!(r.all_within);
    }
}
