//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::process::Command;
use std::time::{Duration, Instant};

use btensor::fixtures::{ex41, ex42};
use btensor::opnorms::{b_bounds, estimate_norm, general_upper_bound, EstimatorConfig, Operator};
use btensor::rng::stream;
use btensor::spectral::{find_h_pairs, find_z_pairs, verify_bounds, EigenKind, Shift};
use btensor::structure::{
    check_semipositive, classify, generate_b, generate_b0, row_data, row_diagnostics,
    SemiPositivityMode, Variant, Verdict,
};
use btensor::tcp::{residual, solution_lower_bounds, solve, verify_solution_bounds, SolverConfig};
use btensor::{NormKind, Tensor};
use rand::Rng;

const SLACK: f64 = 1e-9;

struct Verdicts {
    failures: usize,
}

impl Verdicts {
    fn report(
        &mut self,
        id: usize,
        name: &str,
        limit: Duration,
        elapsed: Duration,
        problems: Vec<String>,
    ) {
        let timed_out = elapsed > limit;
        let pass = problems.is_empty() && !timed_out;
        if !pass {
            self.failures += 1;
        }
        println!(
            "criterion {id} [{}] {name} ({:.2}s, limit {}s)",
            if pass { "PASS" } else { "FAIL" },
            elapsed.as_secs_f64(),
            limit.as_secs()
        );
        if timed_out {
            println!("    exceeded time limit");
        }
        for p in problems.iter().take(10) {
            println!("    {p}");
        }
        if problems.len() > 10 {
            println!("    ... {} more", problems.len() - 10);
        }
    }
}

fn b_corpus() -> Vec<Tensor> {
    (0..200u64)
        .map(|i| {
            let m = 3 + (i % 2) as usize;
            let n = 2 + ((i / 2) % 3) as usize;
            generate_b(m, n, 10_000 + i).expect("generator")
        })
        .collect()
}

fn b0_corpus() -> Vec<Tensor> {
    (0..100u64)
        .map(|i| {
            let m = 3 + (i % 2) as usize;
            let n = 2 + ((i / 2) % 3) as usize;
            generate_b0(m, n, 20_000 + i).expect("generator")
        })
        .collect()
}

fn golden_ex41() -> Vec<String> {
    let mut problems = Vec::new();
    let a = ex41();
    if classify(&a).verdict != Verdict::B {
        problems.push("ex41 not classified B".into());
    }
    for (r, e) in row_data(&a).iter().zip([57.0, 55.5, 54.5]) {
        if (r.row_sum - e).abs() > 1e-9 {
            problems.push(format!("row sum {} != {e}", r.row_sum));
        }
    }
    let bb = b_bounds(&a, Operator::T, NormKind::Infinity, Variant::B).unwrap();
    let g = general_upper_bound(&a, Operator::T, NormKind::Infinity).unwrap();
    if (bb.upper - 54.0).abs() > 1e-9 || (g - 57.0).abs() > 1e-9 || bb.upper >= g {
        problems.push(format!("expected 54 < 57, got {} vs {g}", bb.upper));
    }
    problems
}

fn golden_ex42() -> Vec<String> {
    let mut problems = Vec::new();
    let b = ex42();
    if classify(&b).verdict != Verdict::B {
        problems.push("ex42 not classified B".into());
    }
    for (r, e) in row_data(&b).iter().zip([65.7, 65.5, 64.5, 65.1]) {
        if (r.row_sum - e).abs() > 1e-9 {
            problems.push(format!("row sum {} != {e}", r.row_sum));
        }
    }
    for p in [1.0, 2.0, 4.0] {
        let bb = b_bounds(&b, Operator::T, NormKind::P(p), Variant::B).unwrap();
        let g = general_upper_bound(&b, Operator::T, NormKind::P(p)).unwrap();
        let floor = 64.0 * 4f64.powf(3.0 / p);
        if (bb.upper - 48.0).abs() > 1e-9 || g < floor || bb.upper >= g {
            problems.push(format!(
                "p={p}: b_upper {} general {g} floor {floor}",
                bb.upper
            ));
        }
    }
    problems
}

fn structure(bs: &[Tensor], b0s: &[Tensor]) -> Vec<String> {
    let mut problems = Vec::new();
    for (i, b) in bs.iter().enumerate() {
        if classify(b).verdict != Verdict::B {
            problems.push(format!("B #{i}: generator returned non-B"));
        }
        if !row_diagnostics(b, true).unwrap().iter().all(|d| d.all()) {
            problems.push(format!("B #{i}: strict row diagnostics fail"));
        }
        let c = check_semipositive(b, SemiPositivityMode::Strict, 8).unwrap();
        if c.violated {
            problems.push(format!(
                "B #{i}: strict semi-positivity violated at {:?}",
                c.worst_point
            ));
        }
    }
    for (i, b) in b0s.iter().enumerate() {
        if classify(b).verdict != Verdict::B0 {
            problems.push(format!("B0 #{i}: generator returned non-B0"));
        }
        if !row_diagnostics(b, false).unwrap().iter().all(|d| d.all()) {
            problems.push(format!("B0 #{i}: weak row diagnostics fail"));
        }
        let c = check_semipositive(b, SemiPositivityMode::Weak, 8).unwrap();
        if c.violated {
            problems.push(format!(
                "B0 #{i}: semi-positivity violated at {:?}",
                c.worst_point
            ));
        }
    }
    problems
}

fn sandwich(bs: &[Tensor]) -> (Vec<String>, usize) {
    let mut problems = Vec::new();
    let mut checked = 0;
    let cfg = EstimatorConfig {
        samples: 64,
        ascent_steps: 100,
        ..Default::default()
    };
    for (i, b) in bs.iter().enumerate() {
        let ops: &[Operator] = if b.order() == 4 {
            &[Operator::T, Operator::F]
        } else {
            &[Operator::T]
        };
        for &op in ops {
            for kind in [NormKind::Infinity, NormKind::P(1.0), NormKind::P(2.0)] {
                checked += 1;
                let bb = b_bounds(b, op, kind, Variant::B).unwrap();
                let g = general_upper_bound(b, op, kind).unwrap();
                let est = estimate_norm(
                    b,
                    op,
                    kind,
                    &EstimatorConfig {
                        seed: i as u64,
                        ..cfg
                    },
                )
                .unwrap()
                .estimate;
                let upper = g.min(bb.upper);
                if !(bb.lower <= est + SLACK && est <= upper + SLACK) {
                    problems.push(format!(
                        "#{i} {op:?} {kind}: lower {} est {est} upper {upper}",
                        bb.lower
                    ));
                }
                if !bb.gap_holds(Variant::B) {
                    problems.push(format!(
                        "#{i} {op:?} {kind}: no strict gap, lower {} diagonal upper {}",
                        bb.lower, bb.diagonal_upper
                    ));
                }
            }
        }
    }
    (problems, checked)
}

/// Eigen-equation residual from raw entries, independent of the library's contraction.
fn naive_pair_residual(t: &Tensor, kind: EigenKind, value: f64, x: &[f64]) -> f64 {
    let (m, n) = (t.order(), t.dim());
    let mut y = vec![0.0; n];
    for (k, &a) in t.entries().iter().enumerate() {
        let mut r = k;
        let mut prod = a;
        for _ in 1..m {
            prod *= x[r % n];
            r /= n;
        }
        y[r] += prod;
    }
    let xx: f64 = x.iter().map(|v| v * v).sum();
    y.iter()
        .zip(x)
        .map(|(yi, xi)| {
            let rhs = match kind {
                EigenKind::H => xi.powi(m as i32 - 1),
                EigenKind::Z => xi * xx.powf((m as f64 - 2.0) / 2.0),
            };
            (yi - value * rhs).powi(2)
        })
        .sum::<f64>()
        .sqrt()
}

fn eigen() -> (Vec<String>, usize, usize) {
    let mut problems = Vec::new();
    let mut pairs_seen = 0;
    // non-symmetric tensors need not have any real H-eigenpair
    let mut no_h = 0;
    for i in 0..100u64 {
        let n = 2 + (i % 2) as usize;
        let b = generate_b(4, n, 30_000 + i).unwrap();
        let mut pairs = find_h_pairs(&b, 64, i);
        pairs.extend(find_z_pairs(&b, Shift::Auto, 64, i));
        pairs_seen += pairs.len();
        for p in &pairs {
            let r = naive_pair_residual(&b, p.kind, p.value, &p.vector);
            if r > 1e-8 {
                problems.push(format!("#{i} {:?} value {}: residual {r}", p.kind, p.value));
            }
        }
        let report = verify_bounds(&b, &pairs, Variant::B).unwrap();
        if !report.all_within {
            problems.push(format!(
                "#{i}: max|lambda| {:?} vs {:?}, max|mu| {:?} vs {}",
                report.max_abs_h, report.h_bound, report.max_abs_z, report.z_bound
            ));
        }
        if !pairs.iter().any(|p| p.kind == EigenKind::H) {
            no_h += 1;
        }
    }
    (problems, pairs_seen, no_h)
}

fn grid_min_residual(b: &Tensor, q: &[f64], radius: f64, steps: usize) -> f64 {
    let mut best = f64::INFINITY;
    for i in 0..=steps {
        for j in 0..=steps {
            let x = [
                radius * i as f64 / steps as f64,
                radius * j as f64 / steps as f64,
            ];
            best = best.min(residual(b, q, &x).unwrap().0);
        }
    }
    best
}

fn tcp() -> (Vec<String>, usize) {
    let mut problems = Vec::new();
    let mut converged = 0;
    let total = 100;
    for i in 0..total as u64 {
        let m = 3 + (i % 2) as usize;
        let n = 2 + ((i / 2) % 2) as usize;
        let b = generate_b(m, n, 40_000 + i).unwrap();
        let mut rng = stream(40_000 + i, 1);
        let mut q: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let k = rng.gen_range(0..n);
        q[k] = -q[k].abs() - 0.05;
        let out = solve(
            &b,
            &q,
            &SolverConfig {
                seed: i,
                ..Default::default()
            },
        )
        .unwrap();
        if !out.converged {
            continue;
        }
        converged += 1;
        if out.x.iter().any(|&v| v != 0.0) {
            let c = verify_solution_bounds(&b, &q, &out).unwrap();
            if c.holds != Some(true) {
                problems.push(format!("#{i}: lower bounds violated {c:?}"));
            }
        }
    }
    if (converged as f64) < 0.95 * total as f64 {
        problems.push(format!("converged on {converged}/{total}"));
    }

    for i in 0..20u64 {
        let m = 3 + (i % 2) as usize;
        let n = 2 + (i % 3) as usize;
        let mut rng = stream(50_000 + i, 0);
        let d: Vec<f64> = (0..n).map(|_| rng.gen_range(0.2..5.0)).collect();
        let q: Vec<f64> = (0..n).map(|_| rng.gen_range(-3.0..3.0)).collect();
        let t = Tensor::diagonal(m, &d).unwrap();
        let out = solve(
            &t,
            &q,
            &SolverConfig {
                seed: i,
                ..Default::default()
            },
        )
        .unwrap();
        for j in 0..n {
            let expect = ((-q[j]).max(0.0) / d[j]).powf(1.0 / (m - 1) as f64);
            if !out.converged || (out.x[j] - expect).abs() > 1e-8 {
                problems.push(format!(
                    "diagonal #{i}: x[{j}] = {} expected {expect}",
                    out.x[j]
                ));
            }
        }
    }

    for i in 0..3u64 {
        let b = generate_b(3, 2, 60_000 + i).unwrap();
        let q = [-1.0, 0.5 - i as f64 * 0.5];
        let out = solve(
            &b,
            &q,
            &SolverConfig {
                seed: i,
                ..Default::default()
            },
        )
        .unwrap();
        let lb = solution_lower_bounds(&b, &q).unwrap();
        let xmax = out.x.iter().fold(0.0_f64, |a, v| a.max(*v));
        let radius = 1.0 + xmax.max(lb.lb_inf.sqrt());
        let grid = grid_min_residual(&b, &q, radius, 2000);
        if out.residual > grid {
            problems.push(format!(
                "grid #{i}: solver {} beaten by grid {grid}",
                out.residual
            ));
        }
    }
    (problems, converged)
}

fn determinism() -> Vec<String> {
    let bin = env!("CARGO_BIN_EXE_btensor");
    let run = || {
        Command::new(bin)
            .args(["verify-paper", "--seed", "7"])
            .output()
            .unwrap()
    };
    let (a, b) = (run(), run());
    let mut problems = Vec::new();
    if !a.status.success() {
        problems.push(format!("verify-paper exited {:?}", a.status.code()));
    }
    if a.stdout != b.stdout || a.stdout.is_empty() {
        problems.push("reports differ between runs".into());
    }
    problems
}

fn main() {
    let mut v = Verdicts { failures: 0 };

    let t = Instant::now();
    let p = golden_ex41();
    v.report(
        1,
        "reference tensor ex41 values",
        Duration::from_secs(1),
        t.elapsed(),
        p,
    );

    let t = Instant::now();
    let p = golden_ex42();
    v.report(
        2,
        "reference tensor ex42 values",
        Duration::from_secs(1),
        t.elapsed(),
        p,
    );

    let bs = b_corpus();
    let b0s = b0_corpus();
    let t = Instant::now();
    let p = structure(&bs, &b0s);
    v.report(
        3,
        "structure of 200 B and 100 B0 tensors",
        Duration::from_secs(60),
        t.elapsed(),
        p,
    );

    let t = Instant::now();
    let (p, checked) = sandwich(&bs);
    v.report(
        4,
        &format!("norm sandwich over {checked} operator/norm cases"),
        Duration::from_secs(300),
        t.elapsed(),
        p,
    );

    let t = Instant::now();
    let (p, pairs, no_h) = eigen();
    v.report(
        5,
        &format!("eigenvalue bounds over {pairs} pairs ({no_h} tensors without a real H pair)"),
        Duration::from_secs(300),
        t.elapsed(),
        p,
    );

    let t = Instant::now();
    let (p, converged) = tcp();
    v.report(
        6,
        &format!("TCP suite, {converged}/100 converged"),
        Duration::from_secs(300),
        t.elapsed(),
        p,
    );

    let t = Instant::now();
    let p = determinism();
    v.report(
        7,
        "verify-paper determinism",
        Duration::from_secs(60),
        t.elapsed(),
        p,
    );

    if v.failures > 0 {
        println!("{} criteria failed", v.failures);
        std::process::exit(1);
    }
    println!("all criteria passed");
}
