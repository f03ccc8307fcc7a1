//! Tensor complementarity problems: find `x >= 0` with
//! `w = q + A x^{m-1} >= 0` and `x^T w = 0`.
//!
//! The solver is a projected, damped semismooth Newton method on the natural
//! residual `Phi(x) = min(x, w(x))`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{l2, solve as solve_linear};
use crate::rng;
use crate::structure::Variant;
use crate::tensor::{norm, NormKind, Tensor};

/// Slack on the strict lower-bound comparisons.
pub const BOUND_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub starts: usize,
    pub max_iter: usize,
    pub tol: f64,
    pub seed: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            starts: 16,
            max_iter: 200,
            tol: 1e-8,
            seed: 7,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TcpOutcome {
    pub x: Vec<f64>,
    /// `q + A x^{m-1}`.
    pub w: Vec<f64>,
    /// `||min(x, w)||_inf`.
    pub residual: f64,
    pub converged: bool,
    pub starts_used: usize,
}

fn check(a: &Tensor, q: &[f64]) -> Result<()> {
    if q.len() != a.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            actual: q.len(),
        });
    }
    Ok(())
}

fn slack(a: &Tensor, q: &[f64], x: &[f64]) -> Result<Vec<f64>> {
    Ok(a.contract(x)?.iter().zip(q).map(|(y, qi)| y + qi).collect())
}

fn natural_map(x: &[f64], w: &[f64]) -> Vec<f64> {
    x.iter().zip(w).map(|(a, b)| a.min(*b)).collect()
}

/// Natural residual `||min(x, q + A x^{m-1})||_inf` and the slack `w`.
pub fn residual(a: &Tensor, q: &[f64], x: &[f64]) -> Result<(f64, Vec<f64>)> {
    check(a, q)?;
    let w = slack(a, q, x)?;
    Ok((norm(&natural_map(x, &w), NormKind::Infinity), w))
}

/// Runs the projected semismooth Newton method from a single start.
pub fn solve_from(a: &Tensor, q: &[f64], start: &[f64], cfg: &SolverConfig) -> Result<TcpOutcome> {
    check(a, q)?;
    if start.len() != a.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            actual: start.len(),
        });
    }
    let n = a.dim();
    let mut x: Vec<f64> = start.iter().map(|v| v.max(0.0)).collect();
    let mut w = slack(a, q, &x)?;
    let mut phi = natural_map(&x, &w);
    let mut merit = l2(&phi);
    for _ in 0..cfg.max_iter {
        if norm(&phi, NormKind::Infinity) <= 0.1 * cfg.tol {
            break;
        }
        // generalized Jacobian: identity rows where x is the active branch
        let jac_a = a.contract_jacobian(&x)?;
        let mut h = vec![0.0; n * n];
        for i in 0..n {
            if x[i] <= w[i] {
                h[i * n + i] = 1.0;
            } else {
                h[i * n..(i + 1) * n].copy_from_slice(&jac_a[i * n..(i + 1) * n]);
            }
        }
        let neg: Vec<f64> = phi.iter().map(|v| -v).collect();
        let dir = solve_linear(n, &h, &neg).or_else(|| {
            // regularized retry for a singular active-set matrix
            let mu = 1e-8 * (1.0 + h.iter().fold(0.0_f64, |m, v| m.max(v.abs())));
            let mut hr = h.clone();
            for i in 0..n {
                hr[i * n + i] += mu;
            }
            solve_linear(n, &hr, &neg)
        });
        let Some(dir) = dir else {
            break;
        };
        let mut t = 1.0;
        let mut accepted = false;
        while t > 1e-12 {
            let trial: Vec<f64> = x
                .iter()
                .zip(&dir)
                .map(|(xi, di)| (xi + t * di).max(0.0))
                .collect();
            let wt = slack(a, q, &trial)?;
            let pt = natural_map(&trial, &wt);
            let mt = l2(&pt);
            if mt < (1.0 - 1e-4 * t) * merit {
                x = trial;
                w = wt;
                phi = pt;
                merit = mt;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    let res = norm(&phi, NormKind::Infinity);
    Ok(TcpOutcome {
        converged: res <= cfg.tol,
        residual: res,
        x,
        w,
        starts_used: 1,
    })
}

/// `(-q)_+`, the componentwise positive part of `-q`.
pub fn negative_part(q: &[f64]) -> Vec<f64> {
    q.iter().map(|v| (-v).max(0.0)).collect()
}

/// Deterministic starts `s * ((-q)_+)^{[1/(m-1)]}` for `s` in `{0.5, 1, 2}`
/// (just the origin when `q >= 0`), followed by seeded random nonnegative
/// starts, `cfg.starts` in total.
pub fn default_starts(a: &Tensor, q: &[f64], cfg: &SolverConfig) -> Vec<Vec<f64>> {
    let k = (a.order() - 1) as f64;
    let base: Vec<f64> = negative_part(q).iter().map(|v| v.powf(1.0 / k)).collect();
    let scale = base.iter().fold(1.0_f64, |m, v| m.max(*v));
    let mut starts = if base.iter().all(|&v| v == 0.0) {
        vec![base]
    } else {
        [0.5, 1.0, 2.0]
            .iter()
            .map(|s| base.iter().map(|v| v * s).collect())
            .collect()
    };
    starts.truncate(cfg.starts.max(1));
    let mut idx = 0u64;
    while starts.len() < cfg.starts {
        let mut g = rng::stream(cfg.seed, idx);
        starts.push(
            (0..a.dim())
                .map(|_| g.gen_range(0.0..2.0 * scale))
                .collect(),
        );
        idx += 1;
    }
    starts
}

/// Multistart solve. Returns the first start that converges, otherwise the
/// lowest-residual outcome with `converged = false`.
pub fn solve(a: &Tensor, q: &[f64], cfg: &SolverConfig) -> Result<TcpOutcome> {
    check(a, q)?;
    let mut best: Option<TcpOutcome> = None;
    let starts = default_starts(a, q, cfg);
    let total = starts.len();
    for (k, start) in starts.iter().enumerate() {
        let mut out = solve_from(a, q, start, cfg)?;
        out.starts_used = k + 1;
        if out.converged {
            return Ok(out);
        }
        if best.as_ref().is_none_or(|b| out.residual < b.residual) {
            best = Some(out);
        }
    }
    let mut best = best.expect("at least one start");
    best.starts_used = total;
    Ok(best)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionBoundCertificate {
    pub q_plus_neg: Vec<f64>,
    /// Lower bound on `||x||_inf^{m-1}`.
    pub lb_inf: f64,
    /// Lower bound on `||x||_2^{m-1}`.
    pub lb_2: f64,
    /// Lower bound on `||x||_m^{m-1}`; even order only.
    pub lb_m: Option<f64>,
    /// `||x||_inf^{m-1}`, `||x||_2^{m-1}`, `||x||_m^{m-1}` for a verified solution.
    pub observed: Option<[Option<f64>; 3]>,
    /// Bounds that hold only within `BOUND_SLACK` (ties at floating precision).
    pub near_ties: Vec<String>,
    pub holds: Option<bool>,
}

/// Lower bounds on the size of any nonzero solution of `TCP(B, q)` for a
/// `B` tensor, in terms of `(-q)_+` and the diagonal of `B`:
///
/// * `||(-q)_+||_inf / (n^{m-1} max b_ii)`
/// * `||(-q)_+||_2 / (n^{(m-1)/2} (sum b_ii^2)^{1/2})`
/// * `||(-q)_+||_m / (n^{(m-1)^2/m} (sum b_ii^{m/(m-1)})^{(m-1)/m})` for even `m`
pub fn solution_lower_bounds(b: &Tensor, q: &[f64]) -> Result<SolutionBoundCertificate> {
    check(b, q)?;
    Variant::B.require(b)?;
    let m = b.order() as f64;
    let n = b.dim() as f64;
    let diag = b.diagonal_entries();
    let qn = negative_part(q);
    let max_diag = diag.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lb_inf = norm(&qn, NormKind::Infinity) / (n.powf(m - 1.0) * max_diag);
    let lb_2 = norm(&qn, NormKind::P(2.0)) / (n.powf((m - 1.0) / 2.0) * l2(&diag));
    let lb_m = b.order().is_multiple_of(2).then(|| {
        let s: f64 = diag.iter().map(|d| d.powf(m / (m - 1.0))).sum();
        norm(&qn, NormKind::P(m)) / (n.powf((m - 1.0).powi(2) / m) * s.powf((m - 1.0) / m))
    });
    Ok(SolutionBoundCertificate {
        q_plus_neg: qn,
        lb_inf,
        lb_2,
        lb_m,
        observed: None,
        near_ties: Vec::new(),
        holds: None,
    })
}

/// Checks a converged nonzero solution against `solution_lower_bounds`.
/// Each comparison is `lb < ||x||^{m-1} + BOUND_SLACK`; bounds met only
/// thanks to the slack are listed in `near_ties`.
pub fn verify_solution_bounds(
    b: &Tensor,
    q: &[f64],
    outcome: &TcpOutcome,
) -> Result<SolutionBoundCertificate> {
    if !outcome.converged {
        return Err(Error::InvalidArgument(
            "outcome did not converge; bounds apply to solutions only".into(),
        ));
    }
    if outcome.x.iter().all(|&v| v == 0.0) {
        return Err(Error::ZeroSolution);
    }
    check(b, &outcome.x)?;
    let mut cert = solution_lower_bounds(b, q)?;
    let k = b.order() as i32 - 1;
    let x = &outcome.x;
    let obs_inf = norm(x, NormKind::Infinity).powi(k);
    let obs_2 = norm(x, NormKind::P(2.0)).powi(k);
    let obs_m = cert
        .lb_m
        .map(|_| norm(x, NormKind::P(b.order() as f64)).powi(k));
    let mut holds = true;
    let mut compare = |name: &str, lb: f64, observed: f64| {
        if lb < observed {
            return;
        }
        if lb < observed + BOUND_SLACK {
            cert.near_ties
                .push(format!("{name}: bound {lb:e} vs {observed:e}"));
        } else {
            holds = false;
        }
    };
    compare("inf", cert.lb_inf, obs_inf);
    compare("2", cert.lb_2, obs_2);
    if let (Some(lb), Some(obs)) = (cert.lb_m, obs_m) {
        compare("m", lb, obs);
    }
    cert.observed = Some([Some(obs_inf), Some(obs_2), obs_m]);
    cert.holds = Some(holds);
    Ok(cert)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadiusProbe {
    pub radius: f64,
    pub converged: usize,
    /// Largest `||x||_inf` over converged solutions at this radius.
    pub max_norm: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundednessReport {
    pub radii: Vec<RadiusProbe>,
    /// First radius from which the largest solution norm no longer changes.
    pub stable_radius: Option<f64>,
    /// Cap applied to every converged solution: 10 x max(stable radius, its norm).
    pub cap: Option<f64>,
    pub bounded: bool,
}

const PROBE_CAP_FACTOR: f64 = 10.0;
const PROBE_STABLE_RTOL: f64 = 1e-6;

/// Falsification probe of solution-set boundedness for a `B` tensor.
///
/// For each radius `r`, runs the solver from `cfg.starts` random starts in
/// `[0, r]^n` plus the default deterministic starts. The set is reported
/// bounded when the largest converged solution norm stops changing at some
/// radius before the last, and every converged solution stays under ten
/// times the larger of that radius and that norm.
pub fn boundedness_probe(
    b: &Tensor,
    q: &[f64],
    radii: &[f64],
    cfg: &SolverConfig,
) -> Result<BoundednessReport> {
    check(b, q)?;
    Variant::B.require(b)?;
    if radii.is_empty() || radii.iter().any(|r| r.is_nan() || *r <= 0.0) {
        return Err(Error::InvalidArgument(
            "radii must be positive and non-empty".into(),
        ));
    }
    let base = default_starts(b, q, &SolverConfig { starts: 3, ..*cfg });
    let mut probes = Vec::new();
    let mut all_norms = Vec::new();
    for (ri, &r) in radii.iter().enumerate() {
        let mut starts = base.clone();
        for k in 0..cfg.starts {
            let mut g = rng::stream(cfg.seed ^ 0x9e37_79b9, (ri * 10_000 + k) as u64);
            starts.push((0..b.dim()).map(|_| g.gen_range(0.0..=r)).collect());
        }
        let mut max_norm: Option<f64> = None;
        let mut converged = 0;
        for s in &starts {
            let out = solve_from(b, q, s, cfg)?;
            if out.converged {
                converged += 1;
                let v = norm(&out.x, NormKind::Infinity);
                all_norms.push(v);
                max_norm = Some(max_norm.map_or(v, |m| m.max(v)));
            }
        }
        probes.push(RadiusProbe {
            radius: r,
            converged,
            max_norm,
        });
    }
    let same = |a: Option<f64>, b: Option<f64>| match (a, b) {
        (Some(a), Some(b)) => (a - b).abs() <= PROBE_STABLE_RTOL * a.abs().max(b.abs()).max(1.0),
        (None, None) => true,
        _ => false,
    };
    let stable_idx = (0..probes.len()).find(|&k| {
        probes[k..]
            .iter()
            .all(|p| same(p.max_norm, probes[k].max_norm))
    });
    let stable_idx = stable_idx.filter(|&k| k + 1 < probes.len() || probes.len() == 1);
    let Some(k) = stable_idx else {
        return Ok(BoundednessReport {
            radii: probes,
            stable_radius: None,
            cap: None,
            bounded: false,
        });
    };
    let cap = PROBE_CAP_FACTOR * probes[k].radius.max(probes[k].max_norm.unwrap_or(0.0));
    Ok(BoundednessReport {
        bounded: all_norms.iter().all(|&v| v <= cap),
        stable_radius: Some(probes[k].radius),
        cap: Some(cap),
        radii: probes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_is_solution_for_nonnegative_q() {
        let t = Tensor::unit_diagonal(4, 3).unwrap();
        let (r, w) = residual(&t, &[1.0, 0.0, 2.0], &[0.0; 3]).unwrap();
        assert_eq!(r, 0.0);
        assert_eq!(w, vec![1.0, 0.0, 2.0]);
        let out = solve(&t, &[1.0, 0.0, 2.0], &SolverConfig::default()).unwrap();
        assert!(out.converged);
        assert_eq!(out.x, vec![0.0; 3]);
    }

    #[test]
    fn scalar_problem_residual() {
        let (b, c) = (2.0_f64, 8.0_f64);
        let t = Tensor::filled(3, 1, b).unwrap();
        let x = (c / b).sqrt();
        let (r, _) = residual(&t, &[-c], &[x]).unwrap();
        assert!(r < 1e-14);
    }

    #[test]
    fn decoupled_diagonal() {
        let t = Tensor::unit_diagonal(4, 3).unwrap();
        let (r, _) = residual(&t, &[-1.0; 3], &[1.0; 3]).unwrap();
        assert_eq!(r, 0.0);
        let out = solve(&t, &[-8.0, 1.0, -27.0], &SolverConfig::default()).unwrap();
        assert!(out.converged);
        for (x, e) in out.x.iter().zip([2.0, 0.0, 3.0]) {
            assert!((x - e).abs() < 1e-8, "{:?}", out.x);
        }
    }

    #[test]
    fn lower_bounds_vanish_for_nonnegative_q() {
        let t = Tensor::unit_diagonal(4, 2).unwrap();
        let c = solution_lower_bounds(&t, &[0.0, 3.0]).unwrap();
        assert_eq!((c.lb_inf, c.lb_2, c.lb_m), (0.0, 0.0, Some(0.0)));
        let odd = Tensor::unit_diagonal(3, 2).unwrap();
        assert_eq!(
            solution_lower_bounds(&odd, &[-1.0, 0.0]).unwrap().lb_m,
            None
        );
    }

    #[test]
    fn verify_rejects_zero_and_unconverged() {
        let t = Tensor::unit_diagonal(3, 2).unwrap();
        let zero = TcpOutcome {
            x: vec![0.0, 0.0],
            w: vec![1.0, 1.0],
            residual: 0.0,
            converged: true,
            starts_used: 1,
        };
        assert_eq!(
            verify_solution_bounds(&t, &[1.0, 1.0], &zero),
            Err(Error::ZeroSolution)
        );
        let bad = TcpOutcome {
            converged: false,
            x: vec![1.0, 0.0],
            ..zero
        };
        assert!(verify_solution_bounds(&t, &[1.0, 1.0], &bad).is_err());
    }

    #[test]
    fn unit_diagonal_solution_bound() {
        let t = Tensor::unit_diagonal(3, 4).unwrap();
        let q = vec![-1.0; 4];
        let out = solve(&t, &q, &SolverConfig::default()).unwrap();
        let cert = verify_solution_bounds(&t, &q, &out).unwrap();
        assert_eq!(cert.lb_inf, 1.0 / 16.0);
        assert!(cert.holds.unwrap());
    }

    #[test]
    fn requires_b_tensor() {
        let z = Tensor::zeros(3, 2).unwrap();
        assert!(matches!(
            solution_lower_bounds(&z, &[-1.0, -1.0]),
            Err(Error::WrongClass { .. })
        ));
        assert!(boundedness_probe(&z, &[-1.0, -1.0], &[1.0], &SolverConfig::default()).is_err());
    }

    #[test]
    fn probe_on_unit_diagonal() {
        let t = Tensor::unit_diagonal(4, 3).unwrap();
        let cfg = SolverConfig::default();
        let r = boundedness_probe(&t, &[-1.0; 3], &[1.0, 10.0, 100.0], &cfg).unwrap();
        assert!(r.bounded, "{r:?}");
        assert_eq!(r.stable_radius, Some(1.0));
        let r = boundedness_probe(&t, &[1.0, 0.5, 2.0], &[1.0, 10.0, 100.0], &cfg).unwrap();
        assert!(r.bounded, "{r:?}");
    }

    #[test]
    fn dimension_checks() {
        let t = Tensor::unit_diagonal(3, 2).unwrap();
        assert!(residual(&t, &[1.0], &[0.0, 0.0]).is_err());
        assert!(solve_from(&t, &[1.0, 1.0], &[0.0], &SolverConfig::default()).is_err());
    }
}
