//! Monte Carlo checks of the analytic estimator statistics.

use std::io::Write;

use cvqkd_core::estimation::{estimator_variances_mdi, estimator_variances_oneway};
use cvqkd_core::mdi::MdiAttack;
use cvqkd_core::montecarlo::{coverage_test, study_mdi, study_oneway, RNG_ALGORITHM};
use cvqkd_core::oneway::LossyChannel;
use serde::Serialize;

use super::output;
use crate::error::{CliError, CliResult};
use crate::settings::Settings;

const DEFAULT_SEED: u64 = 0x5eed_0001;
const DEFAULT_TRIALS: usize = 2_000;
const DEFAULT_SAMPLES: usize = 10_000;
/// Relative tolerance on variance ratios; the sampling error at 2000 trials is ≈3%.
const DEFAULT_TOLERANCE: f64 = 0.15;
const COVERAGE_EPS: f64 = 0.05;

#[derive(Debug, Serialize)]
struct Check {
    name: String,
    measured: f64,
    analytic: f64,
    ratio: f64,
    pass: bool,
}

#[derive(Debug, Serialize)]
struct Report {
    rng: &'static str,
    seed: u64,
    trials: usize,
    samples: usize,
    tolerance: f64,
    checks: Vec<Check>,
    pass: bool,
}

fn ratio_check(name: String, measured: f64, analytic: f64, tol: f64) -> Check {
    let ratio = measured / analytic;
    Check {
        name,
        measured,
        analytic,
        ratio,
        pass: (ratio - 1.0).abs() <= tol,
    }
}

pub fn cmd_validate(s: &Settings) -> CliResult<()> {
    let seed = s.seed.unwrap_or(DEFAULT_SEED);
    let trials = s.trials.unwrap_or(DEFAULT_TRIALS);
    let m = s.samples.unwrap_or(DEFAULT_SAMPLES);
    let tol = s.tolerance.unwrap_or(DEFAULT_TOLERANCE);
    let scale = s.variance_scale.unwrap_or(1.0);
    if trials < 10 || m < 10 {
        return Err(CliError::Usage("need at least 10 trials and 10 samples".into()));
    }
    let mut checks = Vec::new();

    let ch = LossyChannel::from_excess_noise(0.5, 0.05)?;
    let v_m = 10.0;
    for (i, v_th) in [0.0, 1.0, 10.0].into_iter().enumerate() {
        let st = study_oneway(&ch, v_m, v_th, m, trials, seed + i as u64)?;
        let th = estimator_variances_oneway(ch.tau, v_m, v_th, ch.omega, m as f64);
        checks.push(ratio_check(
            format!("oneway V_th={v_th} Var(tau)"),
            st.tau.var,
            scale * th.tau,
            tol,
        ));
        checks.push(ratio_check(
            format!("oneway V_th={v_th} Var(V_eps)"),
            st.v_eps.var,
            scale * th.v_eps,
            tol,
        ));
    }

    let at = MdiAttack::optimal_from_excess(0.8, 0.6, 0.02, 0.02)?;
    let st = study_mdi(&at, 20.0, m, trials, seed + 10)?;
    let th = estimator_variances_mdi(&at, 20.0, m as f64);
    for (name, emp, t) in [
        ("mdi Var(tau_A)", st.tau_a.var, th.tau_a),
        ("mdi Var(tau_B)", st.tau_b.var, th.tau_b),
        ("mdi Var(V_Q_eps)", st.v_q_eps.var, th.v_q_eps),
        ("mdi Var(V_P_eps)", st.v_p_eps.var, th.v_p_eps),
    ] {
        checks.push(ratio_check(name.into(), emp, scale * t, tol));
    }

    // Both bounds miss with probability ε each; the union is at most 2ε.
    let cov = coverage_test(&ch, v_m, 0.0, m, COVERAGE_EPS, scale.sqrt(), trials, seed + 20)?;
    let allowed = 2.0 * COVERAGE_EPS + 4.0 * (2.0 * COVERAGE_EPS / trials as f64).sqrt();
    checks.push(Check {
        name: format!("oneway interval coverage at eps_PE={COVERAGE_EPS}"),
        measured: cov.miss_rate(),
        analytic: allowed,
        ratio: cov.miss_rate() / allowed,
        pass: cov.miss_rate() <= allowed,
    });

    let pass = checks.iter().all(|c| c.pass);
    let report = Report {
        rng: RNG_ALGORITHM,
        seed,
        trials,
        samples: m,
        tolerance: tol,
        checks,
        pass,
    };
    let mut out = output(s)?;
    serde_json::to_writer_pretty(&mut out, &report)?;
    writeln!(out)?;
    out.flush()?;
    if !pass {
        let failed: Vec<&str> = report
            .checks
            .iter()
            .filter(|c| !c.pass)
            .map(|c| c.name.as_str())
            .collect();
        return Err(CliError::Check(failed.join("; ")));
    }
    Ok(())
}
