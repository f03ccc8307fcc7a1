//! Golden checks on the two bundled reference tensors, used by
//! `btensor verify-paper`.

use serde::Serialize;

use crate::error::Result;
use crate::fixtures::{ex41, ex42};
use crate::opnorms::{
    b_bounds_f, b_bounds_t, estimate_norm, general_upper_bound, EstimatorConfig, Operator,
};
use crate::spectral::{find_h_pairs, find_z_pairs, verify_bounds, Shift};
use crate::structure::{
    check_semipositive, classify, row_data, SemiPositivityMode, Variant, Verdict,
};
use crate::tcp::{solution_lower_bounds, solve, verify_solution_bounds, SolverConfig};
use crate::tensor::{NormKind, Tensor};

/// Tolerance for golden numeric equalities.
pub const GOLDEN_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Claim {
    pub id: String,
    pub statement: String,
    pub observed: String,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GoldenReport {
    pub seed: u64,
    pub claims: Vec<Claim>,
    pub passed: usize,
    pub failed: usize,
}

impl GoldenReport {
    pub fn all_pass(&self) -> bool {
        self.failed == 0
    }
}

struct Recorder(Vec<Claim>);

impl Recorder {
    fn claim(&mut self, id: &str, statement: &str, observed: String, pass: bool) {
        self.0.push(Claim {
            id: id.into(),
            statement: statement.into(),
            observed,
            pass,
        });
    }
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= GOLDEN_TOL
}

fn fmt_vec(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|x| format!("{x:.12}")).collect();
    format!("[{}]", parts.join(", "))
}

fn row_sums(t: &Tensor) -> Vec<f64> {
    row_data(t).iter().map(|r| r.row_sum).collect()
}

pub fn run(seed: u64) -> Result<GoldenReport> {
    let mut rec = Recorder(Vec::new());
    let a = ex41();
    let b = ex42();

    let v = classify(&a).verdict;
    rec.claim(
        "ex41.classify",
        "ex41 is a B tensor",
        format!("{v:?}"),
        v == Verdict::B,
    );
    let rs = row_sums(&a);
    rec.claim(
        "ex41.row_sums",
        "ex41 row sums are (57, 55.5, 54.5)",
        fmt_vec(&rs),
        rs.iter().zip([57.0, 55.5, 54.5]).all(|(x, e)| close(*x, e)),
    );
    let betas: Vec<f64> = row_data(&a).iter().map(|r| r.beta).collect();
    rec.claim(
        "ex41.beta",
        "ex41 beta_i = 2 for every row",
        fmt_vec(&betas),
        betas.iter().all(|&x| x == 2.0),
    );
    let general = general_upper_bound(&a, Operator::T, NormKind::Infinity)?;
    let tb = b_bounds_t(&a, NormKind::Infinity, Variant::B)?;
    rec.claim(
        "ex41.t_inf_upper",
        "ex41 ||T||_inf: diagonal bound 54 < row-sum bound 57",
        format!("{:.12} < {:.12}", tb.upper, general),
        close(tb.upper, 54.0) && close(general, 57.0) && tb.upper < general,
    );
    rec.claim(
        "ex41.t_inf_lower",
        "ex41 ||T||_inf lower bound is max(18, 19) = 19",
        format!("{:.12}", tb.lower),
        close(tb.lower, 19.0),
    );
    let est = estimate_norm(
        &a,
        Operator::T,
        NormKind::Infinity,
        &EstimatorConfig {
            samples: 256,
            seed,
            ..Default::default()
        },
    )?;
    rec.claim(
        "ex41.t_inf_estimate",
        "ex41 empirical ||T||_inf lies in [19, 54]",
        format!("{:.12}", est.estimate),
        est.estimate >= 19.0 - GOLDEN_TOL && est.estimate <= 54.0 + GOLDEN_TOL,
    );
    let fb = b_bounds_f(&a, NormKind::P(1.0), Variant::B)?;
    let fg = general_upper_bound(&a, Operator::F, NormKind::P(1.0))?;
    rec.claim(
        "ex41.f_1_upper",
        "ex41 ||F||_1: diagonal bound < row-sum bound",
        format!("{:.12} < {:.12}", fb.upper, fg),
        fb.upper < fg,
    );
    let sp = check_semipositive(&a, SemiPositivityMode::Strict, 12)?;
    rec.claim(
        "ex41.semipositive",
        "ex41 is strictly semi-positive on the d=12 simplex grid",
        format!(
            "worst {:.12} over {} points",
            sp.worst_value, sp.points_checked
        ),
        !sp.violated && sp.points_checked == 91,
    );

    let v = classify(&b).verdict;
    rec.claim(
        "ex42.classify",
        "ex42 is a B tensor",
        format!("{v:?}"),
        v == Verdict::B,
    );
    let rs = row_sums(&b);
    rec.claim(
        "ex42.row_sums",
        "ex42 row sums are (65.7, 65.5, 64.5, 65.1)",
        fmt_vec(&rs),
        rs.iter()
            .zip([65.7, 65.5, 64.5, 65.1])
            .all(|(x, e)| close(*x, e)),
    );
    for p in [1.0, 2.0, 4.0] {
        let tb = b_bounds_t(&b, NormKind::P(p), Variant::B)?;
        let general = general_upper_bound(&b, Operator::T, NormKind::P(p))?;
        let floor = 64.0 * 4f64.powf(3.0 / p);
        rec.claim(
            &format!("ex42.t_p{p}_upper"),
            &format!("ex42 ||T||_{p}: diagonal bound 48 < 64*4^(3/{p}) <= row-sum bound"),
            format!("{:.12} < {:.12} <= {:.12}", tb.upper, floor, general),
            close(tb.upper, 48.0) && general >= floor && tb.upper < general,
        );
    }

    let pairs_h = find_h_pairs(&a, 64, seed);
    let pairs_z = find_z_pairs(&a, Shift::Auto, 64, seed);
    let all: Vec<_> = pairs_h.iter().chain(&pairs_z).cloned().collect();
    let eb = verify_bounds(&a, &all, Variant::B)?;
    rec.claim(
        "ex41.eigen_bounds",
        "ex41 found eigenvalues satisfy |lambda| < 152.66.., |mu| < 51",
        format!(
            "h_bound {:.12}, z_bound {:.12}, max|lambda| {:?}, max|mu| {:?}, {} pairs",
            eb.h_bound.unwrap_or(f64::NAN),
            eb.z_bound,
            eb.max_abs_h,
            eb.max_abs_z,
            eb.pairs_checked
        ),
        eb.all_within && close(eb.z_bound, 51.0) && !pairs_h.is_empty() && !pairs_z.is_empty(),
    );
    let pairs_z = find_z_pairs(&b, Shift::Auto, 64, seed);
    let eb = verify_bounds(&b, &pairs_z, Variant::B)?;
    rec.claim(
        "ex42.z_bounds",
        "ex42 found Z-eigenvalues satisfy |mu| < 48",
        format!("max|mu| {:?} over {} pairs", eb.max_abs_z, eb.pairs_checked),
        eb.all_within && close(eb.z_bound, 48.0) && !pairs_z.is_empty(),
    );

    let q = vec![-1.0; 3];
    let cfg = SolverConfig {
        seed,
        ..Default::default()
    };
    let out = solve(&a, &q, &cfg)?;
    let lbs = solution_lower_bounds(&a, &q)?;
    rec.claim(
        "ex41.tcp_lower_bounds",
        "ex41, q = -e: lb_inf = 1/162, lb_2 = sqrt(3)/(3^(3/2) sqrt(97))",
        format!("{:.12}, {:.12}", lbs.lb_inf, lbs.lb_2),
        close(lbs.lb_inf, 1.0 / 162.0)
            && close(lbs.lb_2, 3f64.sqrt() / (3f64.powf(1.5) * 97f64.sqrt())),
    );
    let holds = if out.converged {
        verify_solution_bounds(&a, &q, &out)?.holds == Some(true)
    } else {
        false
    };
    rec.claim(
        "ex41.tcp_solution",
        "ex41, q = -e: solver converges and the solution respects every lower bound",
        format!("x = {}, residual {:e}", fmt_vec(&out.x), out.residual),
        out.converged && holds,
    );

    let claims = rec.0;
    let passed = claims.iter().filter(|c| c.pass).count();
    Ok(GoldenReport {
        seed,
        failed: claims.len() - passed,
        passed,
        claims,
    })
}
