//! Acceptance sweep: ten end-to-end checks of the workspace, one test per
//! criterion so the harness prints one pass/fail line each. Tolerances are
//! pinned here, next to the checks they gate.
//!
//! The checks cover the worst-case objective bounds of the accelerated
//! methods, eval budgets, strongly convex complexity against plain gradient
//! descent, noise floors under inexact oracles, dual certificates and
//! recovery, measured feasibility-decay exponents, operator fidelity on the
//! elliptic continuation problem, two-mode wall recovery, the control
//! stack's gradients and work scaling, and byte-level reproducibility of
//! the command-line tool.

use hdopt::control::{
    control_oracle, damped_lq_benchmark, lq_benchmark, ControlGrid, LqFamily,
};
use hdopt::dual::{min_norm_dual, solve_dual, DualMethod};
use hdopt::hilbert::{
    adjoint_defect, operator_norm_sq, DiagonalOperator, HVector, LinearOperator, MatrixOperator,
    Space,
};
use hdopt::oracle::{perturb, LeastSquares, Oracle};
use hdopt::pde::{inverse_solve, make_operator, solve_forward, Grid, InverseApproach, InverseMethod};
use hdopt::solvers::{
    accuracy_budget, astm, gd, rstm, stm, BudgetMethod, GdStep, RstmSegment, StopRule,
    TerminalStatus,
};
use hdopt_cli::fit::convergence_exponent;

use std::f64::consts::PI;
use std::path::Path;
use std::process::Command;

/// Slack added to the worst-case objective bounds before comparing.
const BOUND_SLACK: f64 = 1e-9;

fn report(criterion: usize, label: &str, ok: bool, detail: &str) {
    let verdict = if ok { "PASS" } else { "FAIL" };
    println!("criterion {criterion:2}: {verdict} — {label} ({detail})");
    assert!(ok, "criterion {criterion} failed: {label}: {detail}");
}

/// A compatible least-squares problem on a random diagonal operator with a
/// random target, so the optimal value is exactly zero.
fn random_quadratic(dim: usize, seed: u64) -> (LeastSquares<DiagonalOperator>, f64, f64) {
    let space = Space::new(dim, 1.0);
    let mut diag = space.random(seed).as_slice().to_vec();
    for d in &mut diag {
        *d = 1.5 + 0.9 * *d; // spectrum inside [0.6, 2.4]
    }
    let q_star = space.random(seed ^ 0x5EED);
    let op = DiagonalOperator::new(diag.clone(), 1.0);
    let data = op.apply(&q_star);
    let l = diag.iter().fold(0.0f64, |m, d| m.max(d * d));
    let r = q_star.norm();
    let oracle = LeastSquares::new(op, data).unwrap().declare_compatible().with_l_hint(l);
    (oracle, l, r)
}

const SWEEP_DIMS: [usize; 20] =
    [64, 48, 33, 17, 9, 5, 3, 2, 1, 24, 40, 56, 61, 37, 29, 13, 7, 50, 44, 21];

#[test]
fn criterion_01_stm_meets_its_objective_bound_at_every_iteration() {
    let mut worst_margin = f64::INFINITY;
    for (j, &dim) in SWEEP_DIMS.iter().enumerate() {
        let (oracle, l, r) = random_quadratic(dim, 0xC1_0000 + j as u64);
        let q0 = oracle.space().zeros();
        let result = stm(&oracle, &q0, l, 0.0, &StopRule::MaxIter(500)).unwrap();
        for row in result.log.rows() {
            // Row `k` is the iterate after `k + 1` gradient steps.
            let n = (row.k + 1) as f64;
            let bound = 4.0 * l * r * r / (n * n) + BOUND_SLACK;
            worst_margin = worst_margin.min(bound - row.value);
            assert!(
                row.value <= bound,
                "dim {dim}: J = {} exceeds 4LR^2/N^2 = {bound} at N = {n}",
                row.value
            );
        }
    }
    report(
        1,
        "accelerated method stays below 4LR^2/N^2 on 20 random quadratics",
        worst_margin >= 0.0,
        &format!("worst margin {worst_margin:.3e}"),
    );
}

#[test]
fn criterion_02_backtracking_variant_meets_bound_and_eval_budget() {
    let mut worst_margin = f64::INFINITY;
    let mut worst_func = 0.0f64;
    let mut worst_grad = 0.0f64;
    for (j, &dim) in SWEEP_DIMS.iter().enumerate() {
        let (oracle, l, r) = random_quadratic(dim, 0xC2_0000 + j as u64);
        let q0 = oracle.space().zeros();
        let result = astm(&oracle, &q0, 0.0, &StopRule::MaxIter(500)).unwrap();
        for row in result.log.rows() {
            let n = (row.k + 1) as f64;
            let bound = 8.0 * l * r * r / (n * n) + BOUND_SLACK;
            worst_margin = worst_margin.min(bound - row.value);
            assert!(
                row.value <= bound,
                "dim {dim}: J = {} exceeds 8LR^2/N^2 = {bound} at N = {n}",
                row.value
            );
        }
        let last = result.log.final_row().unwrap();
        let iters = (last.k + 1) as f64;
        worst_func = worst_func.max(last.func_evals as f64 / iters);
        worst_grad = worst_grad.max(last.grad_evals as f64 / iters);
    }
    let ok = worst_margin >= 0.0 && worst_func <= 5.0 && worst_grad <= 3.0;
    report(
        2,
        "backtracking variant stays below 8LR^2/N^2 within its eval budget",
        ok,
        &format!(
            "worst margin {worst_margin:.3e}, func/iter {worst_func:.2}, grad/iter {worst_grad:.2}"
        ),
    );
}

#[test]
fn criterion_03_strongly_convex_runs_beat_the_complexity_budget() {
    // mu = 1, L = 4 diagonal quadratic with R^2 = 4; target distance 1e-6.
    let diag = vec![1.0, 1.25, 1.5, 2.0];
    let q_star = HVector::new(vec![1.0; 4], 1.0);
    let op = DiagonalOperator::new(diag.clone(), 1.0);
    let data = op.apply(&q_star);
    let (mu, l): (f64, f64) = (1.0, 4.0);
    let r_sq = q_star.norm_sq();
    let eps = 1e-6;
    let budget =
        (40.0 * (l / mu).sqrt() * (l * r_sq / (mu * eps * eps)).log2()).floor() as u64;

    let oracle =
        LeastSquares::new(op, data).unwrap().declare_compatible().with_l_hint(l).with_mu(mu);
    let q0 = oracle.space().zeros();

    // A gradient norm below mu * eps certifies a distance below eps.
    let stop = StopRule::Any(vec![StopRule::GradNormBelow(mu * eps), StopRule::MaxIter(100_000)]);
    let strong = stm(&oracle, &q0, l, mu, &stop).unwrap();
    let strong_grads = strong.log.final_row().unwrap().grad_evals;
    let strong_ok = strong.solution.dist(&q_star) <= eps && strong_grads <= budget;

    // The restarted scheme certifies through the declared mu instead.
    let restarted =
        rstm(&oracle, &q0, RstmSegment::Adaptive, mu, mu * eps * eps / 2.0, 1_000).unwrap();
    let restarted_grads = restarted.log.final_row().unwrap().grad_evals;
    let restarted_ok = restarted.solution.dist(&q_star) <= eps && restarted_grads <= budget;

    // At condition number 100 plain gradient descent pays at least 3x more.
    let diag = vec![1.0, 4.0, 10.0];
    let q_star = HVector::new(vec![1.0; 3], 1.0);
    let op = DiagonalOperator::new(diag, 1.0);
    let data = op.apply(&q_star);
    let (mu, l) = (1.0, 100.0);
    let oracle =
        LeastSquares::new(op, data).unwrap().declare_compatible().with_l_hint(l).with_mu(mu);
    let q0 = oracle.space().zeros();
    let stop = StopRule::Any(vec![StopRule::GradNormBelow(mu * eps), StopRule::MaxIter(100_000)]);
    let fast = stm(&oracle, &q0, l, mu, &stop).unwrap();
    let slow = gd(&oracle, &q0, GdStep::Fixed(l), false, &stop).unwrap();
    let fast_grads = fast.log.final_row().unwrap().grad_evals;
    let slow_grads = slow.log.final_row().unwrap().grad_evals;
    let ratio = slow_grads as f64 / fast_grads as f64;

    let ok = strong_ok && restarted_ok && ratio >= 3.0;
    report(
        3,
        "strongly convex variants meet the budget and beat plain descent 3x",
        ok,
        &format!(
            "grads {strong_grads}/{restarted_grads} vs budget {budget}, \
             descent ratio {ratio:.1}"
        ),
    );
}

#[test]
fn criterion_04_noise_floors_stay_within_the_averaged_method_ceiling() {
    // Fixed quadratic under the shipped delta-perturbation. The reported
    // value sits `delta * xi(q)` below the truth with `xi in [1/4, 3/4]`, so
    // adding `3 delta / 4` to an observed minimum certifies a bound on the
    // best true value reached. The worst-case theory allows the accelerated
    // run to accumulate interference up to an `N delta` ceiling while the
    // averaged basic run is capped near `delta` itself; the zero-mean hash
    // noise used here cancels instead of conspiring, so both measured floors
    // must land inside the stricter averaged-method ceiling of `5 delta`.
    let delta = 1e-4;
    let (base, l, r) = random_quadratic(16, 0xC4_0001);
    let q0 = base.space().zeros();
    let stop = StopRule::MaxIter(2000);
    let diameter = 2.0 * (r + 1.0);

    let noisy = perturb(base, delta, diameter, 0xACCE5).unwrap();
    let observed_floor = |rows: &[hdopt::solvers::LogRow]| {
        rows.iter().map(|row| row.value).fold(f64::INFINITY, f64::min)
    };

    let accel = stm(&noisy, &q0, l, 0.0, &stop).unwrap();
    let averaged = gd(&noisy, &q0, GdStep::Fixed(l), true, &stop).unwrap();
    let accel_floor = observed_floor(accel.log.rows()) + 0.75 * delta;
    let averaged_floor = observed_floor(averaged.log.rows()) + 0.75 * delta;

    // The final solutions evaluated through a clean twin of the oracle.
    let (clean, _, _) = random_quadratic(16, 0xC4_0001);
    let accel_true = clean.value(&accel.solution);
    let averaged_true = clean.value(&averaged.solution);

    let ceiling = 5.0 * delta;
    let ok = accel_floor <= ceiling
        && averaged_floor <= ceiling
        && accel_true <= ceiling
        && averaged_true <= ceiling;
    report(
        4,
        "delta-inexact oracle: both noise floors certified within 5 delta",
        ok,
        &format!(
            "certified floors {accel_floor:.2e}/{averaged_floor:.2e}, \
             final true values {accel_true:.2e}/{averaged_true:.2e}, ceiling {ceiling:.0e}"
        ),
    );
}

#[test]
fn criterion_05_dual_certificates_hold_within_the_iteration_bound() {
    let eps = 1e-6;
    let eps_tilde = 1e-6;

    // Identity operator: the minimum-norm solution is the data itself.
    let f = HVector::new(vec![1.0, 2.0, 3.0], 1.0);
    let problem = min_norm_dual(DiagonalOperator::identity(3, 1.0), f.clone()).unwrap();
    let (l_true, r_tilde) = (1.0, f.norm());
    let bound = (6.0
        * (l_true * r_tilde * r_tilde / eps)
            .sqrt()
            .max((l_true * r_tilde / eps_tilde).sqrt()))
    .ceil() as usize;
    let sol = solve_dual(&problem, DualMethod::Stm, eps, eps_tilde, bound).unwrap();
    let gap = 0.5 * sol.primal.norm_sq() + sol.log.final_value();
    let feas = sol.log.final_row().unwrap().feasibility.unwrap();
    let id_ok = sol.log.status() == TerminalStatus::Converged
        && sol.log.iterations() <= bound
        && gap <= eps * (1.0 + 1e-9)
        && feas <= eps_tilde * (1.0 + 1e-9)
        && sol.primal.dist(&f) <= 1e-5;
    let id_iters = sol.log.iterations();

    // Wide 1x2 operator [1 1] with data 2: pseudo-inverse gives (1, 1).
    let op = MatrixOperator::new(1, 2, vec![1.0, 1.0], 1.0, 1.0);
    let f = HVector::new(vec![2.0], 1.0);
    let problem = min_norm_dual(op, f).unwrap();
    let (l_true, r_tilde) = (2.0, 1.0);
    let bound = (6.0
        * (l_true * r_tilde * r_tilde / eps)
            .sqrt()
            .max((l_true * r_tilde / eps_tilde).sqrt()))
    .ceil() as usize;
    let sol = solve_dual(&problem, DualMethod::Stm, eps, eps_tilde, bound).unwrap();
    let target = HVector::new(vec![1.0, 1.0], 1.0);
    let wide_ok = sol.log.status() == TerminalStatus::Converged
        && sol.log.iterations() <= bound
        && sol.primal.dist(&target) <= 1e-5;
    let wide_iters = sol.log.iterations();

    report(
        5,
        "dual runs certify gap and feasibility and recover the pseudo-inverse",
        id_ok && wide_ok,
        &format!("iterations {id_iters} and {wide_iters} within bounds"),
    );
}

#[test]
fn criterion_06_feasibility_decay_exponents_separate_the_formulations() {
    let grid = Grid::new(63).unwrap();
    let q_true = grid.sample(|y| (PI * y).sin());
    let f = solve_forward(&q_true, grid).unwrap();

    // Dual accelerated run: averaged feasibility decays like 1/N^2.
    let (_, dual_log) =
        inverse_solve(&f, grid, InverseApproach::DualMinNorm, InverseMethod::Stm, 1e-12, 500, false)
            .unwrap();
    let feas_series: Vec<(usize, f64)> = dual_log
        .rows()
        .iter()
        .filter_map(|row| row.feasibility.map(|v| (row.k, v)))
        .collect();
    let dual_slope = convergence_exponent(&feas_series).unwrap();

    // Primal accelerated run: the residual sqrt(2 J) is bounded by a first-
    // order law; on this single-mode problem the measurement is steeper
    // (about -2.6), so first-order decay is the floor it must beat.
    let (_, primal_log) = inverse_solve(
        &f,
        grid,
        InverseApproach::PrimalLeastSquares,
        InverseMethod::Stm,
        1e-300,
        500,
        false,
    )
    .unwrap();
    let residual_series: Vec<(usize, f64)> =
        primal_log.rows().iter().map(|row| (row.k, (2.0 * row.value).sqrt())).collect();
    let primal_slope = convergence_exponent(&residual_series).unwrap();

    let ok = (-2.4..=-1.6).contains(&dual_slope) && primal_slope <= -0.6;
    report(
        6,
        "measured feasibility exponents: dual quadratic, primal at least linear",
        ok,
        &format!("dual {dual_slope:.3}, primal residual {primal_slope:.3}"),
    );
}

#[test]
fn criterion_07_trace_operator_matches_the_analytic_transfer_factors() {
    let coarse = Grid::new(31).unwrap();
    let fine = Grid::new(63).unwrap();
    let sech = |k: usize| 1.0 / (k as f64 * PI).cosh();

    // Sampled sine modes are eigenvectors; the defect against the continuum
    // factor sech(k pi) must shrink fourfold when the mesh halves.
    let mut ratios = Vec::new();
    for k in 1..=3 {
        let defect = |grid: Grid| {
            let op = make_operator(grid);
            let mode = grid.sample(|y| (k as f64 * PI * y).sin());
            let mut want = mode.clone();
            want.axpy(sech(k) - 1.0, &mode); // want = sech(k pi) * mode
            op.apply(&mode).dist(&want) / mode.norm()
        };
        ratios.push(defect(coarse) / defect(fine));
    }
    let ratios_ok = ratios.iter().all(|r| (3.0..=5.0).contains(r));

    let op = make_operator(fine);
    let defect = adjoint_defect(&op, 20, 0xC7);
    let norm_sq = operator_norm_sq(&op, 0xC7).value;
    let sech_sq = sech(1) * sech(1);
    let norm_ok = norm_sq >= 0.9 * sech_sq && norm_sq <= 1.01 * sech_sq && norm_sq <= 1.0;

    let ok = ratios_ok && defect <= 1e-8 && norm_ok;
    report(
        7,
        "trace operator: fourfold defect decay, exact adjoint, norm near sech^2(pi)",
        ok,
        &format!(
            "ratios {:.2}/{:.2}/{:.2}, adjoint defect {defect:.1e}, norm^2 {norm_sq:.6}",
            ratios[0], ratios[1], ratios[2]
        ),
    );
}

#[test]
fn criterion_08_two_mode_wall_data_is_recovered_through_the_dual() {
    let grid = Grid::new(63).unwrap();
    let q_true = grid.sample(|y| (PI * y).sin() + 0.5 * (2.0 * PI * y).sin());
    let f = solve_forward(&q_true, grid).unwrap();

    // Certificate arithmetic: distance^2 <= 2 (gap + R~ * feasibility) with
    // R~ about 95 here, so these targets guarantee 5e-2 with margin.
    let (eps, eps_tilde) = (4e-4, 2e-6);
    let problem = min_norm_dual(make_operator(grid), f).unwrap();
    let sol = solve_dual(&problem, DualMethod::Astm, eps, eps_tilde, 200_000).unwrap();
    let err = sol.primal.dist(&q_true);

    let ok = sol.log.status() == TerminalStatus::Converged && err <= 5e-2;
    report(
        8,
        "two-mode boundary distribution recovered within 5e-2",
        ok,
        &format!("L2 error {err:.3e} after {} iterations", sol.log.iterations()),
    );
}

#[test]
fn criterion_09_control_gradients_and_work_scaling_hold() {
    // Exact discrete adjoint: central differences on the damped tracking
    // problem agree to 1e-6 relative along coordinate and random directions.
    let grid = ControlGrid::new(1.0, 50).unwrap();
    let oracle = control_oracle(damped_lq_benchmark(), grid).unwrap();
    let u = oracle.space().random(0xC9_0001);
    let (_, g) = oracle.value_and_gradient(&u);
    let mut fd_ok = true;
    let mut worst_rel = 0.0f64;
    let h = 1e-5;
    for dir_seed in [1u64, 2, 3] {
        let v = oracle.space().random(0xC9_1000 + dir_seed);
        let mut up = u.clone();
        up.axpy(h, &v);
        let mut down = u.clone();
        down.axpy(-h, &v);
        let fd = (oracle.value(&up) - oracle.value(&down)) / (2.0 * h);
        let exact = g.inner(&v);
        let rel = (fd - exact).abs() / exact.abs().max(1.0);
        worst_rel = worst_rel.max(rel);
        fd_ok &= rel <= 1e-6;
    }

    // The benchmark with the known quarter-optimum lands within 1e-2.
    let grid = ControlGrid::new(1.0, 100).unwrap();
    let oracle = control_oracle(lq_benchmark(), grid)
        .unwrap()
        .with_l_hint(2.0)
        .with_mu_hint(1.0)
        .declare_optimum(0.25);
    let u0 = oracle.space().zeros();
    let stop = StopRule::Any(vec![StopRule::ObjectiveBelow(0.25 + 1e-3), StopRule::MaxIter(5000)]);
    let run = astm(&oracle, &u0, 1.0, &stop).unwrap();
    let bench_err = (run.log.final_value() - 0.25).abs();
    let bench_ok = run.log.status() == TerminalStatus::Converged && bench_err <= 1e-2;

    // Joint discretization/iteration budget: total work scales like eps^-2.
    let mut pts = Vec::new();
    for &eps in &[1e-1, 10f64.powf(-1.5), 1e-2] {
        let result =
            accuracy_budget(&LqFamily, BudgetMethod::Astm, eps, 1.0, 1.0, 0.5, 0.0).unwrap();
        let attempt = result.log.attempts.last().unwrap();
        assert!(attempt.success, "budget attempt should land at eps = {eps}");
        let steps = (1.0 / attempt.tau).round();
        pts.push((eps.ln(), (attempt.budget as f64 * steps).ln()));
    }
    let m = pts.len() as f64;
    let (sx, sy) = pts.iter().fold((0.0, 0.0), |(a, b), (x, y)| (a + x, b + y));
    let sxx: f64 = pts.iter().map(|(x, _)| x * x).sum();
    let sxy: f64 = pts.iter().map(|(x, y)| x * y).sum();
    let slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
    let slope_ok = (-2.6..=-1.4).contains(&slope);

    report(
        9,
        "control: exact gradients, quarter-optimum benchmark, eps^-2 work",
        fd_ok && bench_ok && slope_ok,
        &format!("fd max rel {worst_rel:.1e}, bench err {bench_err:.1e}, work slope {slope:.2}"),
    );
}

#[test]
fn criterion_10_command_line_runs_are_byte_reproducible() {
    let configs_dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("configs");
    let dir = tempfile::tempdir().unwrap();

    // A perturbed problem exercises the seeded path on top of the shipped set.
    let noisy = dir.path().join("noisy.json");
    std::fs::write(
        &noisy,
        r#"{
            "version": 1,
            "problem": { "kind": "quadratic", "diagonal": [1.0, 2.0, 3.0] },
            "method": { "kind": "stm", "eps": 1e-30, "max_iter": 400 },
            "delta": 1e-4,
            "diameter": 2.0,
            "output_path": "noisy.csv"
        }"#,
    )
    .unwrap();

    let mut all_ok = true;
    let mut checked = 0;
    let names = ["quadratic_stm.json", "pde_dual_stm.json", "control_astm.json"];
    let mut jobs: Vec<std::path::PathBuf> =
        names.iter().map(|n| configs_dir.join(n)).collect();
    jobs.push(noisy);

    for config in &jobs {
        let run = |tag: &str| {
            let sub = dir.path().join(tag);
            std::fs::create_dir_all(&sub).unwrap();
            let out = Command::new(env!("CARGO_BIN_EXE_hdopt"))
                .current_dir(&sub)
                .args(["run", config.to_str().unwrap(), "--seed", "11"])
                .output()
                .expect("binary launches");
            assert!(
                matches!(out.status.code(), Some(0) | Some(2)),
                "unexpected exit: {:?}, stderr {}",
                out.status.code(),
                String::from_utf8_lossy(&out.stderr)
            );
            let mut files: Vec<(String, Vec<u8>)> = std::fs::read_dir(&sub)
                .unwrap()
                .map(|e| {
                    let e = e.unwrap();
                    (e.file_name().into_string().unwrap(), std::fs::read(e.path()).unwrap())
                })
                .collect();
            files.sort();
            files
        };
        let stem = config.file_stem().unwrap().to_string_lossy().into_owned();
        let first = run(&format!("{stem}_a"));
        let second = run(&format!("{stem}_b"));
        assert!(!first.is_empty(), "{stem}: no output files written");
        checked += first.len();
        all_ok &= first == second;
    }

    report(
        10,
        "repeated seeded runs emit byte-identical CSV files",
        all_ok,
        &format!("{checked} files compared across {} configs", jobs.len()),
    );
}
