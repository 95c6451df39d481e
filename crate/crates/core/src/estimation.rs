//! Finite-size parameter estimation: estimator variances, worst-case
//! confidence bounds, the `Δ(n)` penalty and finite-size key rates.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::mdi::{keyrate_mdi_reduced, MdiAttack, MdiReduced};
use crate::oneway::{keyrate_oneway, LossyChannel, OneWaySpec};
use crate::optimize::grid_golden_max;

/// Confidence multiplier commonly used for `ε_PE ≈ 1e-10`.
pub const ROUNDED_Z: f64 = 6.5;

/// Smallest transmissivity a worst-case bound may report.
pub const TAU_FLOOR: f64 = 1e-12;

/// Two-sided confidence multiplier `Φ⁻¹(1 − ε/2)` for `0 < ε ≤ 1`: the
/// interval `μ ± zσ` of a normal estimator misses with probability `ε`.
pub fn zscore(eps: f64) -> Result<f64> {
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(Error::Parameter(format!("ε = {eps} outside (0, 1]")));
    }
    if eps == 1.0 {
        return Ok(0.0);
    }
    // the lower tail keeps full precision for tiny ε
    Ok(-Normal::standard().inverse_cdf(0.5 * eps))
}

/// `Δ(n) = (2·2^d + 3) √(log₂(2/ε_sm)/n)`.
pub fn delta_fs(n: f64, d: u32, eps_sm: f64) -> f64 {
    (2.0 * 2f64.powi(d as i32) + 3.0) * ((2.0 / eps_sm).log2() / n).sqrt()
}

/// Block-level settings of a finite-size analysis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimationSetup {
    /// Block size `N̄ = n + m`.
    pub block: f64,
    /// Fraction `r = m/N̄` of the block sacrificed for estimation.
    pub r: f64,
    pub eps_pe: f64,
    pub eps_sm: f64,
    /// Discretization bits.
    pub d: u32,
    /// Replaces `zscore(ε_PE)` when set.
    pub z_override: Option<f64>,
}

impl EstimationSetup {
    pub fn new(block: f64, r: f64, d: u32) -> Result<Self> {
        let s = Self {
            block,
            r,
            eps_pe: 1e-10,
            eps_sm: 1e-10,
            d,
            z_override: None,
        };
        s.validate()?;
        Ok(s)
    }

    /// Coherent-state one-way and MDI protocols use `d = 1`.
    pub fn coherent(block: f64, r: f64) -> Result<Self> {
        Self::new(block, r, 1)
    }

    /// Thermal-state protocols use `d = 4`.
    pub fn thermal(block: f64, r: f64) -> Result<Self> {
        Self::new(block, r, 4)
    }

    pub fn with_r(mut self, r: f64) -> Self {
        self.r = r;
        self
    }

    /// Uses the rounded multiplier 6.5 instead of `zscore(ε_PE)`.
    pub fn rounded_z(mut self) -> Self {
        self.z_override = Some(ROUNDED_Z);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.r > 0.0 && self.r < 1.0) {
            return Err(Error::Parameter(format!("r = {} outside (0, 1)", self.r)));
        }
        if !(self.block.is_finite() && self.pe_samples() >= 1.0 && self.key_samples() >= 1.0) {
            return Err(Error::BlockTooSmall(format!(
                "N̄ = {} with r = {} leaves fewer than one sample",
                self.block, self.r
            )));
        }
        for (name, e) in [("ε_PE", self.eps_pe), ("ε_sm", self.eps_sm)] {
            if !(e > 0.0 && e < 1.0) {
                return Err(Error::Parameter(format!("{name} = {e} outside (0, 1)")));
            }
        }
        Ok(())
    }

    /// `m = rN̄`.
    pub fn pe_samples(&self) -> f64 {
        self.r * self.block
    }

    /// `n = (1 − r)N̄`.
    pub fn key_samples(&self) -> f64 {
        (1.0 - self.r) * self.block
    }

    pub fn z(&self) -> Result<f64> {
        match self.z_override {
            Some(z) => Ok(z),
            None => zscore(self.eps_pe),
        }
    }

    pub fn delta(&self) -> f64 {
        delta_fs(self.key_samples(), self.d, self.eps_sm)
    }
}

/// Leading-order variances of the one-way estimators.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OneWayVariances {
    pub tau: f64,
    pub v_eps: f64,
}

/// `σ²_τ = (4/m)τ²(2 + V_N/(τV_M))`, `σ²_Vε = 2V_N²/m + V_th²σ²_τ`,
/// with `V_N = 1 + τV_th + (1−τ)(ω−1)`.
pub fn estimator_variances_oneway(
    tau: f64,
    v_m: f64,
    v_th: f64,
    omega: f64,
    m: f64,
) -> OneWayVariances {
    let v_n = 1.0 + tau * v_th + (1.0 - tau) * (omega - 1.0);
    let var_tau = 4.0 / m * tau * tau * (2.0 + v_n / (tau * v_m));
    OneWayVariances {
        tau: var_tau,
        v_eps: 2.0 * v_n * v_n / m + v_th * v_th * var_tau,
    }
}

/// Variance of the optimal inverse-variance combination of two estimators.
pub fn combine_variances(a: f64, b: f64) -> f64 {
    if a == 0.0 || b == 0.0 {
        return 0.0;
    }
    a * b / (a + b)
}

/// Inverse-variance weight of the first of two estimators.
pub fn combine_weight(a: f64, b: f64) -> f64 {
    if a + b == 0.0 {
        0.5
    } else {
        b / (a + b)
    }
}

/// Relay noise variances `(V_{Q_N}, V_{P_N}) = (1 + k − gu, 1 + k + g′u)`.
pub fn relay_noise_variances(attack: &MdiAttack) -> (f64, f64) {
    let r = attack.reduced();
    let s = attack.tau_a + attack.tau_b;
    (0.5 * (s + r.lambda), 0.5 * (s + r.lambda_p))
}

/// Per-quadrature excess-noise variances `(V_{Q,ε}, V_{P,ε})`.
pub fn mdi_excess_variances(attack: &MdiAttack) -> (f64, f64) {
    let (q, p) = relay_noise_variances(attack);
    (q - 1.0, p - 1.0)
}

/// Leading-order variances of the MDI estimators.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MdiVariances {
    pub tau_a_q: f64,
    pub tau_a_p: f64,
    pub tau_b_q: f64,
    pub tau_b_p: f64,
    /// Combined `Q`/`P` estimate of `τ_A`.
    pub tau_a: f64,
    pub tau_b: f64,
    pub v_q_eps: f64,
    pub v_p_eps: f64,
}

/// `Var(τ̃_{A_Q}) = (8τ_A/m)(τ_A + τ_B/2)[1 + V_{Q_N}/((τ_A + τ_B/2)V_M)]`.
pub fn relay_tau_variance(tau_self: f64, tau_other: f64, v_noise: f64, v_m: f64, m: f64) -> f64 {
    let s = tau_self + 0.5 * tau_other;
    8.0 * tau_self / m * s * (1.0 + v_noise / (s * v_m))
}

pub fn estimator_variances_mdi(attack: &MdiAttack, v_m: f64, m: f64) -> MdiVariances {
    let (vq, vp) = relay_noise_variances(attack);
    let (ta, tb) = (attack.tau_a, attack.tau_b);
    let tau_a_q = relay_tau_variance(ta, tb, vq, v_m, m);
    let tau_a_p = relay_tau_variance(ta, tb, vp, v_m, m);
    let tau_b_q = relay_tau_variance(tb, ta, vq, v_m, m);
    let tau_b_p = relay_tau_variance(tb, ta, vp, v_m, m);
    MdiVariances {
        tau_a_q,
        tau_a_p,
        tau_b_q,
        tau_b_p,
        tau_a: combine_variances(tau_a_q, tau_a_p),
        tau_b: combine_variances(tau_b_q, tau_b_p),
        v_q_eps: 2.0 * vq * vq / m,
        v_p_eps: 2.0 * vp * vp / m,
    }
}

/// Pessimistic channel parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WorstCase {
    pub tau_low: f64,
    pub v_eps_up: f64,
    /// `τ − zσ` fell to or below zero and was clamped.
    pub too_noisy: bool,
}

/// `τ_low = τ − zσ_τ`, `V_ε,up = V_ε + z s` with standard deviations `σ_τ`, `s`.
pub fn worst_case(tau: f64, v_eps: f64, sd_tau: f64, sd_v_eps: f64, z: f64) -> WorstCase {
    let raw = tau - z * sd_tau;
    WorstCase {
        tau_low: raw.max(TAU_FLOOR).min(tau),
        v_eps_up: v_eps + z * sd_v_eps,
        too_noisy: raw <= 0.0,
    }
}

/// One-way worst case at the true channel, for `m = rN̄` estimation samples.
pub fn worst_case_oneway(
    spec: &OneWaySpec,
    ch: &LossyChannel,
    setup: &EstimationSetup,
) -> Result<WorstCase> {
    setup.validate()?;
    let var = estimator_variances_oneway(ch.tau, spec.v_m, spec.v_th, ch.omega, setup.pe_samples());
    Ok(worst_case(
        ch.tau,
        ch.excess_variance(),
        var.tau.sqrt(),
        var.v_eps.sqrt(),
        setup.z()?,
    ))
}

/// Outcome of a finite-size evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FiniteRate {
    /// `max(0, raw)`.
    pub rate: f64,
    pub raw: f64,
    /// Asymptotic rate evaluated at the worst-case parameters.
    pub rate_at_worst: f64,
    pub delta: f64,
}

impl FiniteRate {
    fn new(scale: f64, rate_at_worst: f64, delta: f64) -> Self {
        let raw = scale * (rate_at_worst - delta);
        Self {
            rate: raw.max(0.0),
            raw,
            rate_at_worst,
            delta,
        }
    }
}

fn channel_from_worst(w: &WorstCase) -> Result<LossyChannel> {
    if w.tau_low >= 1.0 {
        return LossyChannel::new(1.0, 1.0);
    }
    LossyChannel::from_excess_variance(w.tau_low, w.v_eps_up)
}

/// `K = (1−r)[R̃(τ_low, V_ε,up) − Δ((1−r)N̄)]`.
pub fn keyrate_finite_oneway(
    spec: &OneWaySpec,
    ch: &LossyChannel,
    setup: &EstimationSetup,
) -> Result<(FiniteRate, WorstCase)> {
    let w = worst_case_oneway(spec, ch, setup)?;
    let r_worst = if w.too_noisy {
        f64::NEG_INFINITY
    } else {
        keyrate_oneway(spec, &channel_from_worst(&w)?)?.rate
    };
    Ok((FiniteRate::new(1.0 - setup.r, r_worst, setup.delta()), w))
}

/// Per-link and per-quadrature worst cases of the MDI estimation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MdiWorstCase {
    pub tau_a_low: f64,
    pub tau_b_low: f64,
    pub v_q_eps_up: f64,
    pub v_p_eps_up: f64,
    pub too_noisy: bool,
}

impl MdiWorstCase {
    pub fn reduced(&self) -> MdiReduced {
        MdiReduced::from_excess_variances(
            self.tau_a_low,
            self.tau_b_low,
            self.v_q_eps_up,
            self.v_p_eps_up,
        )
    }
}

pub fn worst_case_mdi(
    v_m: f64,
    attack: &MdiAttack,
    setup: &EstimationSetup,
) -> Result<MdiWorstCase> {
    setup.validate()?;
    let var = estimator_variances_mdi(attack, v_m, setup.pe_samples());
    let z = setup.z()?;
    let (vq, vp) = mdi_excess_variances(attack);
    let a = worst_case(attack.tau_a, vq, var.tau_a.sqrt(), var.v_q_eps.sqrt(), z);
    let b = worst_case(attack.tau_b, vp, var.tau_b.sqrt(), var.v_p_eps.sqrt(), z);
    Ok(MdiWorstCase {
        tau_a_low: a.tau_low,
        tau_b_low: b.tau_low,
        v_q_eps_up: a.v_eps_up,
        v_p_eps_up: b.v_eps_up,
        too_noisy: a.too_noisy || b.too_noisy,
    })
}

/// `K = (n/N̄)[R̃(ξ, V_M, τ_A,low, τ_B,low, V_{Q,ε},up, V_{P,ε},up) − Δ(n)]`.
pub fn keyrate_finite_mdi(
    xi: f64,
    mu: f64,
    attack: &MdiAttack,
    setup: &EstimationSetup,
) -> Result<(FiniteRate, MdiWorstCase)> {
    let w = worst_case_mdi(mu - 1.0, attack, setup)?;
    let r_worst = if w.too_noisy {
        f64::NEG_INFINITY
    } else {
        // an unphysical pessimistic state carries no key
        keyrate_mdi_reduced(xi, mu, &w.reduced())
            .map(|b| b.rate)
            .unwrap_or(f64::NEG_INFINITY)
    };
    Ok((FiniteRate::new(1.0 - setup.r, r_worst, setup.delta()), w))
}

/// Search box of [`optimize_finite`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FiniteBounds {
    pub v_m: (f64, f64),
    pub r: (f64, f64),
}

impl Default for FiniteBounds {
    fn default() -> Self {
        Self {
            v_m: (0.01, 1e6),
            r: (1e-4, 0.99),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FiniteOptimum {
    pub v_m: f64,
    pub r: f64,
    pub rate: f64,
}

/// Grid density used to seed every golden-section stage.
pub const OPT_GRID: usize = 21;

/// Maximizes `rate_fn(V_M, r)`: golden section on `ln V_M` whose objective is
/// itself a golden-section maximization over `r`, both seeded by a grid.
pub fn optimize_finite<F>(rate_fn: F, bounds: FiniteBounds) -> FiniteOptimum
where
    F: Fn(f64, f64) -> f64,
{
    let inner =
        |v_m: f64| grid_golden_max(|r| rate_fn(v_m, r), bounds.r.0, bounds.r.1, OPT_GRID, 1e-5);
    let outer = grid_golden_max(
        |lv| inner(lv.exp()).value,
        bounds.v_m.0.ln(),
        bounds.v_m.1.ln(),
        OPT_GRID,
        1e-5,
    );
    let v_m = outer.x.exp();
    let best_r = inner(v_m);
    FiniteOptimum {
        v_m,
        r: best_r.x,
        rate: best_r.value,
    }
}

/// Maximizes over `r` alone at fixed `V_M`.
pub fn optimize_r<F>(rate_fn: F, r_lo: f64, r_hi: f64) -> (f64, f64)
where
    F: Fn(f64) -> f64,
{
    let m = grid_golden_max(rate_fn, r_lo, r_hi, OPT_GRID, 1e-5);
    (m.x, m.value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oneway::{Detection, Direction};

    #[test]
    fn zscore_values() {
        assert_eq!(zscore(1.0).unwrap(), 0.0);
        let z = zscore(1e-10).unwrap();
        assert!((z - 6.466_951_087_240_516).abs() < 1e-6, "{z}");
        assert!((z - ROUNDED_Z).abs() < 0.05);
        let n = Normal::standard();
        for eps in [1e-3, 0.05, 0.2, 1e-8, 0.9] {
            let z = zscore(eps).unwrap();
            assert!((n.cdf(z) - (1.0 - 0.5 * eps)).abs() < 1e-9);
        }
        assert!(zscore(0.0).is_err());
        assert!(zscore(1.5).is_err());
    }

    #[test]
    fn delta_values() {
        assert!((delta_fs(1e6, 1, 1e-10) - 0.040_95).abs() < 1e-5);
        let ratio = delta_fs(1e6, 4, 1e-10) / delta_fs(1e6, 1, 1e-10);
        assert!((ratio - 5.0).abs() < 1e-12);
        assert!(delta_fs(1e30, 1, 1e-10) < 1e-12);
    }

    #[test]
    fn oneway_variances() {
        let v = estimator_variances_oneway(0.5, 10.0, 0.0, 1.0, 1e4);
        assert!((v.tau - 2.2e-4).abs() < 1e-15);
        let v = estimator_variances_oneway(0.5, 10.0, 0.0, 1.0, 100.0);
        assert!((v.v_eps - 0.02).abs() < 1e-15);
        let a = estimator_variances_oneway(0.3, 4.0, 2.0, 1.2, 1000.0);
        let b = estimator_variances_oneway(0.3, 4.0, 2.0, 1.2, 2000.0);
        assert!((a.tau - 2.0 * b.tau).abs() < 1e-15 && (a.v_eps - 2.0 * b.v_eps).abs() < 1e-15);
        let coh = estimator_variances_oneway(0.3, 4.0, 0.0, 1.2, 1000.0);
        assert!(a.v_eps > coh.v_eps);
    }

    #[test]
    fn mdi_variances() {
        let at = MdiAttack::independent(0.6, 0.8, 1.2, 1.1).unwrap();
        let (vq, vp) = relay_noise_variances(&at);
        let k = 0.5 * (0.2 * 0.1 + 0.4 * 0.2);
        assert!((vq - 1.0 - k).abs() < 1e-14 && (vp - vq).abs() < 1e-14);
        let v = estimator_variances_mdi(&at, 5.0, 1e4);
        assert!((v.tau_a - 0.5 * v.tau_a_q).abs() < 1e-18);
        assert!((combine_variances(3.0, 6.0) - 2.0).abs() < 1e-15);
    }

    #[test]
    fn worst_case_behaviour() {
        let w = worst_case(0.5, 0.01, 0.0, 0.0, 6.5);
        assert_eq!((w.tau_low, w.v_eps_up), (0.5, 0.01));
        let w = worst_case(0.5, 0.01, 0.1, 0.0, 6.5);
        assert!(w.too_noisy && w.tau_low == TAU_FLOOR);
        let spec =
            OneWaySpec::new(Detection::Homodyne, Direction::Reverse, 10.0, 0.0, 0.98).unwrap();
        let ch = LossyChannel::from_excess_noise(0.5, 0.01).unwrap();
        let mut last = 0.0;
        for block in [1e5, 1e6, 1e7, 1e8] {
            let s = EstimationSetup::coherent(block, 0.5).unwrap();
            let w = worst_case_oneway(&spec, &ch, &s).unwrap();
            assert!(w.tau_low > last && w.tau_low <= 0.5);
            last = w.tau_low;
        }
    }

    #[test]
    fn finite_rate_tends_to_scaled_asymptote() {
        let spec =
            OneWaySpec::new(Detection::Homodyne, Direction::Reverse, 10.0, 0.0, 0.98).unwrap();
        let ch = LossyChannel::from_excess_noise(0.5, 0.01).unwrap();
        let asym = keyrate_oneway(&spec, &ch).unwrap().rate;
        let s = EstimationSetup::coherent(1e24, 0.5).unwrap();
        let (k, _) = keyrate_finite_oneway(&spec, &ch, &s).unwrap();
        assert!((k.raw - 0.5 * asym).abs() < 1e-6);
        let s = EstimationSetup::coherent(1e7, 0.3).unwrap();
        let (k, _) = keyrate_finite_oneway(&spec, &ch, &s).unwrap();
        assert!(k.raw < asym);
    }

    #[test]
    fn optimizer_contracts() {
        let c = optimize_finite(|_, _| 0.25, FiniteBounds::default());
        assert_eq!(c.rate, 0.25);
        let f = |v: f64, r: f64| -(v.ln() - 2.0f64).powi(2) - (r - 0.3).powi(2);
        let o = optimize_finite(f, FiniteBounds::default());
        assert!((o.v_m.ln() - 2.0).abs() < 1e-3 && (o.r - 0.3).abs() < 1e-3);
        let b = FiniteBounds::default();
        let g = |v: f64, r: f64| (3.0 * v.ln()).sin() * (7.0 * r).cos();
        let o = optimize_finite(g, b);
        let mut grid_best = f64::NEG_INFINITY;
        for i in 0..OPT_GRID {
            let lv =
                b.v_m.0.ln() + (b.v_m.1.ln() - b.v_m.0.ln()) * i as f64 / (OPT_GRID - 1) as f64;
            for j in 0..OPT_GRID {
                let r = b.r.0 + (b.r.1 - b.r.0) * j as f64 / (OPT_GRID - 1) as f64;
                grid_best = grid_best.max(g(lv.exp(), r));
            }
        }
        assert!(o.rate >= grid_best - 1e-12);
    }
}
