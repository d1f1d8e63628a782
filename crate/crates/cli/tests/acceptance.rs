//! Acceptance suite: one test per release criterion, each printing a
//! PASS line with the measured quantities (visible with --nocapture).
//!
//! Tolerances are pinned in the constants below; every statistical bound
//! is expressed in ESS-based standard errors against analytic or
//! long-reference moments.

use nuts_engine::adapt::find_reasonable_epsilon_from;
use nuts_engine::baselines::{rwm_run, rwm_tune_scale, RwmConfig};
use nuts_engine::chain::ChainOutput;
use nuts_engine::diagnostics::{ess, trajectory_histogram, MomentReference};
use nuts_engine::hamiltonian::{leapfrog, CachedPoint, PhaseState};
use nuts_engine::hmc::{hmc_run, HmcConfig};
use nuts_engine::model::testing::StdNormal;
use nuts_engine::model::{
    build_target, check_gradient, synthetic_logreg, synthetic_sv, CountingModel, HlrModel,
    HlrSpec, ModelSpec, MvnModel, MvnSpec, TargetModel,
};
use nuts_engine::nuts::{
    naive_nuts_iteration, naive_nuts_run, nuts_iteration, nuts_run, NaiveNutsConfig, NutsConfig,
};
use nuts_engine::rng::RngStream;
use nuts_engine_cli::config::{log_spaced, ExperimentConfig, ReferenceSpec, SamplerKind};
use nuts_engine_cli::report::compare_samplers;
use nuts_engine_cli::runner::run_experiment;
use std::path::PathBuf;
use tempfile::TempDir;

// Pinned tolerances and scales.
const REVERSIBILITY_TOL: f64 = 1e-10;
const JACOBIAN_TOL: f64 = 1e-6;
const ENERGY_SLOPE_RANGE: (f64, f64) = (1.8, 2.2);
const GRADIENT_TOL: f64 = 1e-5;
const MOMENT_SIGMA: f64 = 4.0;
const COERCION_TOL: f64 = 0.05;
const EPS_BAR_CV_LIMIT: f64 = 0.05;
const POWER_OF_TWO_FLOOR: f64 = 0.5;
const AR1_ESS_REL_TOL: f64 = 0.15;
const EFFICIENCY_FLOOR: f64 = 0.5;

/// The fixed correlated 2-D benchmark target (Wishart seed 6: correlation
/// about -0.83 with moderate scales).
const MVN2_SEED: u64 = 6;
const MVN10_SEED: u64 = 42;

fn mvn_model(dim: usize, seed: u64) -> (MvnModel, Vec<f64>) {
    let spec = MvnSpec::wishart_identity(dim, seed).unwrap();
    let cov = spec.covariance();
    (spec.into_model(format!("mvn-{dim}-seed{seed}")), cov)
}

// ---------------------------------------------------------------------
// Criterion 1: integrator suite
// ---------------------------------------------------------------------

#[test]
fn criterion_01_integrator_suite() {
    // Reversibility.
    let mut rng = RngStream::seed_from(11);
    let mut worst_drift = 0.0f64;
    for trial in 0..30u64 {
        let dim = 1 + (trial as usize) % 4;
        let model = MvnSpec::wishart_identity(dim, 600 + trial)
            .unwrap()
            .into_model("rev");
        let theta: Vec<f64> = (0..dim).map(|_| rng.standard_normal()).collect();
        let r: Vec<f64> = (0..dim).map(|_| rng.standard_normal()).collect();
        let eps = 0.01 + 0.4 * rng.uniform();
        let steps = 1 + rng.index(8);
        let start = PhaseState::new(&model, theta, r);
        let mut fwd = leapfrog(&model, &start, eps);
        for _ in 1..steps {
            fwd = leapfrog(&model, &fwd, eps);
        }
        let flip = PhaseState::new(&model, fwd.theta.clone(), fwd.r.iter().map(|x| -x).collect());
        let mut back = leapfrog(&model, &flip, eps);
        for _ in 1..steps {
            back = leapfrog(&model, &back, eps);
        }
        for d in 0..dim {
            worst_drift = worst_drift
                .max((back.theta[d] - start.theta[d]).abs())
                .max((-back.r[d] - start.r[d]).abs());
        }
    }
    assert!(
        worst_drift <= REVERSIBILITY_TOL,
        "reversibility drift {worst_drift}"
    );

    // Volume preservation: numeric Jacobian determinant of one step.
    let model = MvnSpec::new(2, vec![1.3, 0.9, 0.9, 1.1])
        .unwrap()
        .into_model("mvn2-corr");
    let eps = 0.3;
    let base = [0.4, -0.8, 0.9, 0.25];
    let map = |p: &[f64]| -> Vec<f64> {
        let s = PhaseState::new(&model, p[..2].to_vec(), p[2..].to_vec());
        let n = leapfrog(&model, &s, eps);
        let mut out = n.theta;
        out.extend_from_slice(&n.r);
        out
    };
    let h = 1e-5;
    let mut jac = [[0.0f64; 4]; 4];
    for col in 0..4 {
        let mut hi = base.to_vec();
        let mut lo = base.to_vec();
        hi[col] += h;
        lo[col] -= h;
        let (fh, fl) = (map(&hi), map(&lo));
        for row in 0..4 {
            jac[row][col] = (fh[row] - fl[row]) / (2.0 * h);
        }
    }
    let det = det4(&jac);
    assert!(
        (det - 1.0).abs() <= JACOBIAN_TOL,
        "jacobian determinant {det}"
    );

    // Energy-error scaling at fixed simulation time eps * L = 1.
    let eye = MvnSpec::new(2, vec![1.0, 0.0, 0.0, 1.0])
        .unwrap()
        .into_model("mvn2-eye");
    let mut points = Vec::new();
    for &eps in &[0.2f64, 0.1, 0.05, 0.025] {
        let steps = (1.0 / eps).round() as usize;
        let mut rng = RngStream::seed_from(777);
        let mut total = 0.0;
        let reps = 16;
        for _ in 0..reps {
            let theta: Vec<f64> = (0..2).map(|_| rng.standard_normal()).collect();
            let r: Vec<f64> = (0..2).map(|_| rng.standard_normal()).collect();
            let start = PhaseState::new(&eye, theta, r);
            let mut cur = leapfrog(&eye, &start, eps);
            for _ in 1..steps {
                cur = leapfrog(&eye, &cur, eps);
            }
            total += (cur.joint_log_density() - start.joint_log_density()).abs();
        }
        points.push((eps.ln(), (total / reps as f64).ln()));
    }
    let slope = least_squares_slope(&points);
    assert!(
        slope >= ENERGY_SLOPE_RANGE.0 && slope <= ENERGY_SLOPE_RANGE.1,
        "energy-error slope {slope}"
    );

    println!(
        "[PASS] criterion 1 (integrator): drift={worst_drift:.2e}, |detJ-1|={:.2e}, slope={slope:.3}",
        (det - 1.0).abs()
    );
}

fn det4(a: &[[f64; 4]; 4]) -> f64 {
    let mut m = *a;
    let mut det = 1.0;
    for col in 0..4 {
        let pivot = (col..4)
            .max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs()))
            .unwrap();
        if m[pivot][col] == 0.0 {
            return 0.0;
        }
        if pivot != col {
            m.swap(pivot, col);
            det = -det;
        }
        det *= m[col][col];
        for row in (col + 1)..4 {
            let f = m[row][col] / m[col][col];
            let pivot_row = m[col];
            for (v, p) in m[row][col..].iter_mut().zip(&pivot_row[col..]) {
                *v -= f * p;
            }
        }
    }
    det
}

fn least_squares_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let sx: f64 = points.iter().map(|p| p.0).sum();
    let sy: f64 = points.iter().map(|p| p.1).sum();
    let sxx: f64 = points.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = points.iter().map(|p| p.0 * p.1).sum();
    (n * sxy - sx * sy) / (n * sxx - sx * sx)
}

// ---------------------------------------------------------------------
// Criterion 2: gradient suite
// ---------------------------------------------------------------------

#[test]
fn criterion_02_gradient_suite() {
    let logreg_data = synthetic_logreg(200, 8, 1).unwrap();
    let models: Vec<(&str, Box<dyn TargetModel>)> = vec![
        (
            "mvn-10",
            Box::new(mvn_model(10, MVN10_SEED).0),
        ),
        (
            "logreg",
            Box::new(
                nuts_engine::model::LogRegModel::new(logreg_data.clone()).unwrap(),
            ),
        ),
        (
            "hlr",
            Box::new(HlrModel::new(HlrSpec::new(logreg_data, 0.01).unwrap()).unwrap()),
        ),
        (
            "sv",
            Box::new(nuts_engine::model::SvModel::new(synthetic_sv(200, 42).unwrap()).unwrap()),
        ),
    ];

    let mut rng = RngStream::seed_from(22);
    let mut worst = 0.0f64;
    for (name, model) in &models {
        let model: &dyn TargetModel = model.as_ref();
        for point in 0..20 {
            let theta: Vec<f64> = (0..model.dim()).map(|_| rng.standard_normal()).collect();
            let report = check_gradient(&model, &theta, 1e-5).unwrap();
            assert!(
                report.max_rel_error < GRADIENT_TOL,
                "{name} point {point}: max relative error {}",
                report.max_rel_error
            );
            worst = worst.max(report.max_rel_error);
        }
    }
    println!("[PASS] criterion 2 (gradients): 4 models x 20 points, worst relative error {worst:.2e}");
}

// ---------------------------------------------------------------------
// Criterion 3: statistical correctness on the correlated 2-D normal
// ---------------------------------------------------------------------

/// Checks chain moments against analytic Gaussian moments within
/// `MOMENT_SIGMA` ESS-based standard errors: means, variances (as second
/// central moments about the true mean), and the cross-covariance.
fn check_mvn2_moments(label: &str, draws: &[Vec<f64>], cov: &[f64]) {
    let m = draws.len();
    assert!(m >= 20_000, "{label}: only {m} kept draws");
    for d in 0..2 {
        let var = cov[d * 2 + d];
        let series: Vec<f64> = draws.iter().map(|r| r[d]).collect();
        let mean = series.iter().sum::<f64>() / m as f64;
        let mean_ref = MomentReference::new(0.0, var, "analytic").unwrap();
        let mean_ess = ess(&series, &mean_ref).unwrap().ess;
        let se = var.sqrt() / mean_ess.sqrt();
        assert!(
            mean.abs() <= MOMENT_SIGMA * se,
            "{label}: mean[{d}] = {mean}, {MOMENT_SIGMA} se = {}",
            MOMENT_SIGMA * se
        );

        let sq: Vec<f64> = series.iter().map(|x| x * x).collect();
        let sq_mean = sq.iter().sum::<f64>() / m as f64;
        let sq_ref = MomentReference::new(var, 2.0 * var * var, "analytic").unwrap();
        let sq_ess = ess(&sq, &sq_ref).unwrap().ess;
        let se = (2.0 * var * var).sqrt() / sq_ess.sqrt();
        assert!(
            (sq_mean - var).abs() <= MOMENT_SIGMA * se,
            "{label}: var[{d}] = {sq_mean} vs {var}, {MOMENT_SIGMA} se = {}",
            MOMENT_SIGMA * se
        );
    }
    // Cross covariance via the product functional.
    let prod: Vec<f64> = draws.iter().map(|r| r[0] * r[1]).collect();
    let prod_mean = prod.iter().sum::<f64>() / m as f64;
    let prod_var = cov[0] * cov[3] + cov[1] * cov[1];
    let prod_ref = MomentReference::new(cov[1], prod_var, "analytic").unwrap();
    let prod_ess = ess(&prod, &prod_ref).unwrap().ess;
    let se = prod_var.sqrt() / prod_ess.sqrt();
    assert!(
        (prod_mean - cov[1]).abs() <= MOMENT_SIGMA * se,
        "{label}: cov[0,1] = {prod_mean} vs {}, {MOMENT_SIGMA} se = {}",
        cov[1],
        MOMENT_SIGMA * se
    );
}

#[test]
fn criterion_03_statistical_correctness() {
    let (model, cov) = mvn_model(2, MVN2_SEED);
    let burn = 1000;

    // Efficient NUTS at delta = 0.6.
    let mut rng = RngStream::seed_from(31);
    let nuts_out = nuts_run(
        &model,
        &[0.0, 0.0],
        &NutsConfig::adaptive(0.6, 21_000, burn),
        &mut rng,
    )
    .unwrap();
    check_mvn2_moments("nuts", nuts_out.kept_draws(burn), &cov);

    // Naive NUTS at a heuristic fixed step size.
    let mut rng = RngStream::seed_from(32);
    let naive_out = naive_nuts_run(
        &model,
        &[0.0, 0.0],
        &NaiveNutsConfig::new(21_000),
        &mut rng,
    )
    .unwrap();
    check_mvn2_moments("nuts-naive", naive_out.kept_draws(burn), &cov);

    // HMC with dual averaging, delta = 0.65, lambda = 1.
    let mut rng = RngStream::seed_from(33);
    let hmc_out = hmc_run(
        &model,
        &[0.0, 0.0],
        &HmcConfig::adaptive(0.65, 1.0, 21_000, burn),
        &mut rng,
    )
    .unwrap();
    check_mvn2_moments("hmc", hmc_out.kept_draws(burn), &cov);

    // Random-walk Metropolis tuned to the optimal acceptance rate.
    let mut rng = RngStream::seed_from(34);
    let scale = rwm_tune_scale(&model, &[0.0, 0.0], 0.234, &mut rng).unwrap();
    let rwm_out = rwm_run(
        &model,
        &[0.0, 0.0],
        &RwmConfig::new(scale, 41_000),
        &mut rng,
    )
    .unwrap();
    check_mvn2_moments("rwm", rwm_out.kept_draws(burn), &cov);
    let rate = rwm_out.acceptance_rate(burn);
    assert!(
        (rate - 0.234).abs() <= 0.05,
        "rwm acceptance rate {rate} drifted from the tuned target"
    );

    println!(
        "[PASS] criterion 3 (statistical correctness): nuts, nuts-naive, hmc, rwm all match \
         analytic moments within {MOMENT_SIGMA} ESS-based standard errors (rwm rate {rate:.3})"
    );
}

// ---------------------------------------------------------------------
// Criterion 4: dual-averaging coercion
// ---------------------------------------------------------------------

#[test]
fn criterion_04_dual_averaging_coercion() {
    // Desk-scale note: at dimension 10 a Gaussian target's acceptance
    // curve has a sharp integrator-stability edge, so both the precision
    // draw and the HMC simulation length are material for whether an
    // acceptance target of 0.45 is reachable at all. Wishart seed 9 and
    // lambda = 2 put every target on a controllable part of the curve;
    // the adaptation window is long (8000) because the controller's
    // residual oscillation shrinks like 1/sqrt(m).
    let (mvn, _) = mvn_model(10, 9);
    let logreg = build_target(&ModelSpec::LogReg {
        data: synthetic_logreg(200, 8, 1).unwrap(),
    })
    .unwrap();
    let adapt = 8000;
    let iterations = 12_000;

    let mut report = Vec::new();
    let mut worst = 0.0f64;
    for (model_name, model, lambda) in [
        ("mvn-10", &mvn as &dyn TargetModel, 2.0),
        ("logreg", &logreg, 1.0),
    ] {
        for &delta in &[0.45f64, 0.65, 0.85] {
            let theta0 = vec![0.0; model.dim()];

            let mut rng = RngStream::seed_from(41);
            let nuts_out = nuts_run(
                &model,
                &theta0,
                &NutsConfig::adaptive(delta, iterations, adapt),
                &mut rng,
            )
            .unwrap();
            let h_nuts = nuts_out.mean_accept_stat(adapt) - delta;
            assert!(
                h_nuts.abs() <= COERCION_TOL,
                "nuts on {model_name}, delta {delta}: discrepancy {h_nuts}"
            );

            let mut rng = RngStream::seed_from(41);
            let hmc_out = hmc_run(
                &model,
                &theta0,
                &HmcConfig::adaptive(delta, lambda, iterations, adapt),
                &mut rng,
            )
            .unwrap();
            let h_hmc = hmc_out.mean_accept_stat(adapt) - delta;
            assert!(
                h_hmc.abs() <= COERCION_TOL,
                "hmc on {model_name}, delta {delta}: discrepancy {h_hmc}"
            );
            worst = worst.max(h_nuts.abs()).max(h_hmc.abs());
            report.push(format!(
                "{model_name}@{delta}: nuts {h_nuts:+.3}, hmc {h_hmc:+.3}"
            ));
        }
    }
    println!(
        "[PASS] criterion 4 (coercion within {COERCION_TOL}, worst {worst:.3}): {}",
        report.join("; ")
    );
}

// ---------------------------------------------------------------------
// Criterion 5: averaged step size converges during adaptation
// ---------------------------------------------------------------------

#[test]
fn criterion_05_eps_bar_convergence() {
    let (model, _) = mvn_model(10, MVN10_SEED);
    let mut rng = RngStream::seed_from(51);
    let out = nuts_run(
        &model,
        &[0.0; 10],
        &NutsConfig::adaptive(0.65, 1100, 1000),
        &mut rng,
    )
    .unwrap();
    let window: Vec<f64> = out.stats[800..1000].iter().map(|s| s.eps_bar).collect();
    let mean = window.iter().sum::<f64>() / window.len() as f64;
    let var = window.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (window.len() - 1) as f64;
    let cv = var.sqrt() / mean;
    assert!(
        cv < EPS_BAR_CV_LIMIT,
        "eps-bar coefficient of variation {cv} over the last 200 adaptation iterations"
    );
    println!("[PASS] criterion 5 (eps-bar convergence): CV over last 200 of 1000 = {cv:.4}");
}

// ---------------------------------------------------------------------
// Criterion 6: trajectory lengths are mostly powers of two
// ---------------------------------------------------------------------

#[test]
fn criterion_06_trajectory_lengths() {
    let (model, _) = mvn_model(10, MVN10_SEED);
    let burn = 1000;
    let mut rng = RngStream::seed_from(61);
    let out = nuts_run(
        &model,
        &[0.0; 10],
        &NutsConfig::adaptive(0.6, 3000, burn),
        &mut rng,
    )
    .unwrap();
    let pairs: Vec<(u32, u64)> = out.kept_stats(burn).iter().map(|s| (s.depth, s.states)).collect();
    let hist = trajectory_histogram(&pairs);
    assert!(
        hist.power_of_two_fraction > POWER_OF_TWO_FLOOR,
        "power-of-two fraction {}",
        hist.power_of_two_fraction
    );
    println!(
        "[PASS] criterion 6 (trajectory lengths): {:.1}% of state counts are powers of two",
        100.0 * hist.power_of_two_fraction
    );
}

// ---------------------------------------------------------------------
// Criterion 7: ESS estimator accuracy
// ---------------------------------------------------------------------

#[test]
fn criterion_07_ess_estimator() {
    let m = 100_000usize;
    let unit_ref = MomentReference::new(0.0, 1.0, "analytic").unwrap();
    let mut results = Vec::new();
    for (phi, seed) in [(0.3f64, 71u64), (0.7, 72)] {
        let mut rng = RngStream::seed_from(seed);
        let innovation = (1.0 - phi * phi).sqrt();
        let mut x = rng.standard_normal();
        let chain: Vec<f64> = (0..m)
            .map(|_| {
                let v = x;
                x = phi * x + innovation * rng.standard_normal();
                v
            })
            .collect();
        let out = ess(&chain, &unit_ref).unwrap();
        let analytic = m as f64 * (1.0 - phi) / (1.0 + phi);
        let rel = (out.ess - analytic).abs() / analytic;
        assert!(
            rel < AR1_ESS_REL_TOL,
            "phi={phi}: estimated {} vs analytic {analytic}",
            out.ess
        );
        results.push(format!("phi={phi}: {:.0} vs {analytic:.0}", out.ess));
    }

    let mut rng = RngStream::seed_from(73);
    let iid: Vec<f64> = (0..m).map(|_| rng.standard_normal()).collect();
    let out = ess(&iid, &unit_ref).unwrap();
    assert!(
        out.ess >= 0.8 * m as f64 && out.ess <= 1.2 * m as f64,
        "iid ess {}",
        out.ess
    );
    println!(
        "[PASS] criterion 7 (ESS estimator): {}; iid {:.0} in [{}, {}]",
        results.join("; "),
        out.ess,
        0.8 * m as f64,
        1.2 * m as f64
    );
}

// ---------------------------------------------------------------------
// Criterion 8: efficiency floor against the best tuned HMC
// ---------------------------------------------------------------------

fn efficiency_config(
    model: &str,
    sampler: SamplerKind,
    lambdas: Option<Vec<f64>>,
    reference: ReferenceSpec,
    out_dir: PathBuf,
) -> ExperimentConfig {
    ExperimentConfig {
        model: model.into(),
        paper_scale: false,
        sampler,
        iterations: 2000,
        adapt: 1000,
        burn_in: None,
        deltas: if sampler == SamplerKind::Hmc {
            vec![0.65]
        } else {
            vec![0.6]
        },
        lambdas,
        replications: 3,
        seed: 8,
        out_dir,
        max_depth: 10,
        epsilon: None,
        steps: None,
        proposal_scale: None,
        reference,
        workers: None,
    }
}

#[test]
fn criterion_08_efficiency_comparison() {
    let cases = [
        (
            "mvn:dim=10,seed=42",
            ReferenceSpec::Analytic,
            log_spaced(0.25, 10.0, 6),
        ),
        (
            "logreg:n=200,k=8,seed=1",
            ReferenceSpec::Run { kept: 25_000 },
            log_spaced(0.05, 2.0, 6),
        ),
    ];
    let mut lines = Vec::new();
    for (model, reference, lambda_grid) in cases {
        let dir = TempDir::new().unwrap();
        let nuts_config = efficiency_config(
            model,
            SamplerKind::Nuts,
            None,
            reference.clone(),
            dir.path().join("nuts"),
        );
        let hmc_config = efficiency_config(
            model,
            SamplerKind::Hmc,
            Some(lambda_grid),
            reference,
            dir.path().join("hmc"),
        );
        let nuts_summary = run_experiment(&nuts_config).unwrap();
        let hmc_summary = run_experiment(&hmc_config).unwrap();
        let comparison = compare_samplers(&[nuts_summary, hmc_summary]).unwrap();
        let ratio = comparison
            .nuts_to_best_hmc_ratio
            .expect("both samplers present");
        let best = comparison.best_hmc.as_ref().unwrap();
        assert!(
            ratio >= EFFICIENCY_FLOOR,
            "{model}: nuts/best-hmc efficiency ratio {ratio} (best hmc lambda {:?})",
            best.lambda
        );
        lines.push(format!(
            "{model}: ratio {ratio:.2} (best hmc lambda {:.2})",
            best.lambda.unwrap_or(f64::NAN)
        ));
    }
    println!(
        "[PASS] criterion 8 (efficiency floor {EFFICIENCY_FLOOR}): {}",
        lines.join("; ")
    );
}

// ---------------------------------------------------------------------
// Criterion 9: step-size initialization heuristic
// ---------------------------------------------------------------------

#[test]
fn criterion_09_find_reasonable_epsilon() {
    // Deterministic forced-momentum trace on the 1-D standard normal.
    let model = StdNormal;
    let start = CachedPoint::new(&model, vec![0.0]);
    let (eps, _) = find_reasonable_epsilon_from(&model, &start, &[1.0]).unwrap();
    assert_eq!(eps, 2.0, "forced-momentum trace must return exactly 2");

    // Loop postcondition on 50 random model/state pairs.
    let mut rng = RngStream::seed_from(91);
    for trial in 0..50u64 {
        let dim = 1 + (trial as usize) % 5;
        let model = MvnSpec::wishart_identity(dim, 900 + trial)
            .unwrap()
            .into_model("probe");
        let theta: Vec<f64> = (0..dim).map(|_| rng.standard_normal()).collect();
        let r: Vec<f64> = (0..dim).map(|_| rng.standard_normal()).collect();
        let start = CachedPoint::new(&model, theta);
        let (eps, _) = find_reasonable_epsilon_from(&model, &start, &r).unwrap();

        let state = PhaseState::from_cached(&start, r.clone());
        let joint0 = state.joint_log_density();
        let ratio = |e: f64| (leapfrog(&model, &state, e).joint_log_density() - joint0).exp();
        let a: f64 = if ratio(1.0) > 0.5 { 1.0 } else { -1.0 };
        assert!(
            ratio(eps).powf(a) <= 2.0f64.powf(-a) * (1.0 + 1e-12),
            "trial {trial}: postcondition violated at eps {eps}"
        );
    }
    println!("[PASS] criterion 9 (step-size heuristic): forced trace returns 2.0; postcondition holds on 50 random pairs");
}

// ---------------------------------------------------------------------
// Criterion 10: naive and efficient samplers agree
// ---------------------------------------------------------------------

#[test]
fn criterion_10_naive_efficient_agreement() {
    let model = StdNormal;
    let eps = 0.25;
    let burn = 500;
    let iterations = 30_500;

    let mut rng = RngStream::seed_from(101);
    let mut cfg = NutsConfig::fixed(eps, iterations);
    cfg.max_depth = 10;
    let efficient = nuts_run(&model, &[0.0], &cfg, &mut rng).unwrap();

    let mut rng = RngStream::seed_from(102);
    let naive_cfg = NaiveNutsConfig {
        epsilon: Some(eps),
        iterations,
        max_depth: 10,
        delta_max: 1000.0,
    };
    let naive = naive_nuts_run(&model, &[0.0], &naive_cfg, &mut rng).unwrap();

    let unit_mean_ref = MomentReference::new(0.0, 1.0, "analytic").unwrap();
    let sq_ref = MomentReference::new(1.0, 2.0, "analytic").unwrap();
    let combined = |a: &ChainOutput, b: &ChainOutput, square: bool| -> (f64, f64) {
        let stat = |out: &ChainOutput| -> (f64, f64) {
            let series: Vec<f64> = out
                .column(0, burn)
                .iter()
                .map(|x| if square { x * x } else { *x })
                .collect();
            let mean = series.iter().sum::<f64>() / series.len() as f64;
            let reference = if square { &sq_ref } else { &unit_mean_ref };
            let e = ess(&series, reference).unwrap().ess;
            let sd = reference.variance.sqrt();
            (mean, sd / e.sqrt())
        };
        let (ma, sa) = stat(a);
        let (mb, sb) = stat(b);
        ((ma - mb).abs(), (sa * sa + sb * sb).sqrt())
    };

    let (mean_gap, mean_se) = combined(&efficient, &naive, false);
    assert!(
        mean_gap <= MOMENT_SIGMA * mean_se,
        "means differ by {mean_gap} vs combined {MOMENT_SIGMA} se {}",
        MOMENT_SIGMA * mean_se
    );
    let (var_gap, var_se) = combined(&efficient, &naive, true);
    assert!(
        var_gap <= MOMENT_SIGMA * var_se,
        "variances differ by {var_gap} vs combined {MOMENT_SIGMA} se {}",
        MOMENT_SIGMA * var_se
    );

    // Candidate-set conditions on every iteration of a 5k run: the start
    // state is always included, and every candidate clears the slice.
    let mut rng = RngStream::seed_from(103);
    let mut current = CachedPoint::new(&model, vec![0.4]);
    for _ in 0..5000 {
        let iter = naive_nuts_iteration(&model, &current, eps, 10, 1000.0, &mut rng).unwrap();
        assert!(
            iter.candidates.iter().any(|c| c.theta == current.theta),
            "start state missing from candidate set"
        );
        for c in &iter.candidates {
            assert!(iter.log_u <= c.joint_log_density(), "candidate below slice");
        }
        current = iter.point;
    }

    println!(
        "[PASS] criterion 10 (naive/efficient agreement): mean gap {mean_gap:.4} <= {:.4}, \
         var gap {var_gap:.4} <= {:.4}; candidate conditions held for 5000 iterations",
        MOMENT_SIGMA * mean_se,
        MOMENT_SIGMA * var_se
    );
}

// ---------------------------------------------------------------------
// Criterion 11: gradient-evaluation accounting
// ---------------------------------------------------------------------

#[test]
fn criterion_11_cost_accounting() {
    let (model, _) = mvn_model(5, 7);

    // Tune the step size first so that most iterations complete their
    // final doubling (an untuned step size stops mid-doubling constantly
    // and the 2^depth - 1 identity would be checked on only a handful of
    // iterations).
    let mut rng = RngStream::seed_from(110);
    let tuned = nuts_run(
        &model,
        &[0.0; 5],
        &NutsConfig::adaptive(0.75, 1100, 1000),
        &mut rng,
    )
    .unwrap();
    let eps = tuned.stats.last().unwrap().eps;

    let counting = CountingModel::new(model);
    let mut rng = RngStream::seed_from(111);
    let mut current = CachedPoint::new(&counting, vec![0.0; 5]);
    counting.reset();

    let mut completed = 0usize;
    for iter_idx in 0..1000 {
        let before = counting.count();
        let iter = nuts_iteration(&counting, &current, eps, 10, 1000.0, &mut rng);
        let used = counting.count() - before;
        assert_eq!(
            used, iter.grads_used,
            "iteration {iter_idx}: instrument saw {used}, sampler reported {}",
            iter.grads_used
        );
        if iter.last_doubling_complete {
            completed += 1;
            assert_eq!(
                iter.grads_used,
                (1u64 << iter.depth) - 1,
                "iteration {iter_idx}: completed depth {} used {} gradient evaluations",
                iter.depth,
                iter.grads_used
            );
        } else {
            assert!(
                iter.grads_used < (1u64 << iter.depth) - 1,
                "iteration {iter_idx}: short-circuited but used a full doubling's gradients"
            );
        }
        current = iter.point;
    }
    assert!(
        completed > 500,
        "only {completed} of 1000 iterations completed their final doubling; \
         the identity check would be nearly vacuous"
    );
    println!(
        "[PASS] criterion 11 (cost accounting): 1000 iterations instrument-exact (eps {eps:.3}); \
         {completed} completed iterations all used exactly 2^depth - 1 gradients"
    );
}

// ---------------------------------------------------------------------
// Criterion 12: CLI-level determinism
// ---------------------------------------------------------------------

#[test]
fn criterion_12_cli_determinism() {
    let binary = env!("CARGO_BIN_EXE_nuts-engine");
    let dir = TempDir::new().unwrap();
    let invocations: [&[&str]; 2] = [
        &[
            "sample", "--model", "mvn:dim=3,seed=5", "--sampler", "nuts", "--iters", "300",
            "--adapt", "150", "--delta", "0.6", "--seed", "17",
        ],
        &[
            "sample", "--model", "logreg:n=60,k=3,seed=2", "--sampler", "hmc", "--iters", "200",
            "--adapt", "100", "--delta", "0.65", "--lambda", "1.0", "--seed", "9",
        ],
    ];
    for (case, args) in invocations.iter().enumerate() {
        let out_a = dir.path().join(format!("case{case}_a"));
        let out_b = dir.path().join(format!("case{case}_b"));
        for out in [&out_a, &out_b] {
            let status = std::process::Command::new(binary)
                .args(*args)
                .arg("--out")
                .arg(out)
                .status()
                .expect("binary runs");
            assert!(status.success(), "case {case}: CLI exited with {status}");
        }
        for file in ["chains/g00_r00_draws.csv", "chains/g00_r00_stats.csv"] {
            let a = std::fs::read(out_a.join(file)).unwrap();
            let b = std::fs::read(out_b.join(file)).unwrap();
            assert_eq!(a, b, "case {case}: {file} differs between identical runs");
        }
    }
    println!("[PASS] criterion 12 (CLI determinism): draw and stats files byte-identical across reruns");
}
