//! Sampling checks of the estimator variance formulas with enough trials
//! that the sample variance itself is known to about 1%.

use cvqkd_core::estimation::{estimator_variances_mdi, estimator_variances_oneway};
use cvqkd_core::mdi::MdiAttack;
use cvqkd_core::montecarlo::{study_mdi, study_oneway};
use cvqkd_core::oneway::LossyChannel;

const TRIALS: usize = 20_000;
const M: usize = 2_000;
// relative standard error of a sample variance is √(2/TRIALS) = 1%
const REL: f64 = 0.05;
const SEED: u64 = 0x5eed_0002;

fn rel(emp: f64, th: f64) -> f64 {
    (emp - th).abs() / th
}

#[test]
fn oneway_variances_match_sampling() {
    let ch = LossyChannel::from_excess_noise(0.5, 0.05).unwrap();
    for v_th in [0.0, 1.0, 10.0] {
        let s = study_oneway(&ch, 10.0, v_th, M, TRIALS, SEED).unwrap();
        let th = estimator_variances_oneway(ch.tau, 10.0, v_th, ch.omega, M as f64);
        let (a, b) = (rel(s.tau.var, th.tau), rel(s.v_eps.var, th.v_eps));
        assert!(a < REL, "V_th={v_th}: Var(τ) off by {a:.4}");
        assert!(b < REL, "V_th={v_th}: Var(V_ε) off by {b:.4}");
        assert!((s.tau.mean - ch.tau).abs() < 5.0 * s.tau.sem(TRIALS));
    }
}

// The plug-in transmissivities add a V_M-weighted O(1/m²) term to Var(Ṽ_ε)
// that the leading-order formula drops: +16% at m = 2000, +4% at 10⁴. At
// m = 2·10⁴ it sits below the sampling error of 8000 trials (1.6%).
#[test]
fn mdi_variances_match_sampling() {
    const M_MDI: usize = 20_000;
    const TRIALS_MDI: usize = 8_000;
    const REL_MDI: f64 = 0.06;
    let at = MdiAttack::optimal_from_excess(0.8, 0.6, 0.02, 0.02).unwrap();
    let s = study_mdi(&at, 20.0, M_MDI, TRIALS_MDI, SEED + 1).unwrap();
    let th = estimator_variances_mdi(&at, 20.0, M_MDI as f64);
    for (name, emp, t) in [
        ("τ_A", s.tau_a.var, th.tau_a),
        ("τ_B", s.tau_b.var, th.tau_b),
        ("τ_A from Q", s.tau_a_q.var, th.tau_a_q),
        ("V_Qε", s.v_q_eps.var, th.v_q_eps),
        ("V_Pε", s.v_p_eps.var, th.v_p_eps),
    ] {
        let e = rel(emp, t);
        assert!(e < REL_MDI, "{name}: off by {e:.4}");
    }
}

#[test]
fn spread_shrinks_as_inverse_root_of_samples() {
    let ch = LossyChannel::from_excess_noise(0.7, 0.02).unwrap();
    let small = study_oneway(&ch, 5.0, 0.0, 500, 8_000, SEED + 2).unwrap();
    let large = study_oneway(&ch, 5.0, 0.0, 2_000, 8_000, SEED + 3).unwrap();
    // quadrupling m halves the standard deviation; sample noise ≈ 2.2% per ratio
    let sd_ratio = (small.tau.var / large.tau.var).sqrt();
    assert!((sd_ratio - 2.0).abs() < 0.2, "{sd_ratio}");
    let sd_ratio = (small.v_eps.var / large.v_eps.var).sqrt();
    assert!((sd_ratio - 2.0).abs() < 0.2, "{sd_ratio}");
}

#[test]
fn estimators_are_close_to_normal() {
    let ch = LossyChannel::from_excess_noise(0.5, 0.05).unwrap();
    let s = study_oneway(&ch, 10.0, 0.0, 100_000, 4_000, SEED + 4).unwrap();
    // standard error of the skewness is √(6/4000) ≈ 0.039
    assert!(s.tau.skew.abs() < 0.15, "τ skew {}", s.tau.skew);
    assert!(s.v_eps.skew.abs() < 0.15, "V_ε skew {}", s.v_eps.skew);
}
