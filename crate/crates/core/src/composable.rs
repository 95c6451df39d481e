//! Composable finite-size security of CV-MDI QKD: parameter estimation from
//! χ² tail bounds (no central-limit assumption) and the key-rate bounds for
//! collective Gaussian and general coherent attacks.
//!
//! After the relay broadcasts `γ = (Q_Z, P_Z)` each user displaces their
//! modulation `★ ∈ {Q′_A, P′_A, Q′_B, P′_B}` by `u_★ Q_Z + v_★ P_Z`. The
//! displaced variables have covariance `[[x I, z Z], [z Z, y I]]` with
//! `z = (⟨Q_A Q_B⟩ − ⟨P_A P_B⟩)/2`: the relay's Bell detection correlates
//! one quadrature and anti-correlates the other.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaussian::{condition_heterodyne, von_neumann_entropy, CovMatrix};
use crate::mdi::{keyrate_mdi, MdiAttack};
use crate::optimize::grid_golden_max;

/// Second moments entering the estimation, in SNU. Cross moments are indexed
/// by `★` in the order `(Q′_A, P′_A, Q′_B, P′_B)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentSet {
    /// `⟨★²⟩`.
    pub var: [f64; 4],
    pub qz2: f64,
    pub pz2: f64,
    pub qzpz: f64,
    /// `⟨★ Q_Z⟩`.
    pub cross_q: [f64; 4],
    /// `⟨★ P_Z⟩`.
    pub cross_p: [f64; 4],
}

/// Entangling-cloner moments for modulation `V_M` and excess-noise variances
/// `ξ_A = (1−τ_A)(ω_A−1)`, `ξ_B`:
/// `⟨Q_Z²⟩ = ⟨P_Z²⟩ = ν = (τ_A+τ_B)V_M/2 + 1 + (ξ_A+ξ_B)/2`,
/// `⟨Q′_A Q_Z⟩ = −√(τ_A/2)V_M`, `⟨P′_A P_Z⟩ = ⟨Q′_B Q_Z⟩ = ⟨P′_B P_Z⟩` positive.
pub fn cloner_moments(tau_a: f64, tau_b: f64, xi_a: f64, xi_b: f64, v_m: f64) -> Result<MomentSet> {
    for t in [tau_a, tau_b] {
        if !(t > 0.0 && t <= 1.0) {
            return Err(Error::Parameter(format!("τ = {t} outside (0, 1]")));
        }
    }
    if !(xi_a >= 0.0 && xi_b >= 0.0 && v_m >= 0.0) {
        return Err(Error::Parameter(
            "noise and modulation variances must be ≥ 0".into(),
        ));
    }
    let nu = 0.5 * (tau_a + tau_b) * v_m + 1.0 + 0.5 * (xi_a + xi_b);
    let ca = (0.5 * tau_a).sqrt() * v_m;
    let cb = (0.5 * tau_b).sqrt() * v_m;
    Ok(MomentSet {
        var: [v_m; 4],
        qz2: nu,
        pz2: nu,
        qzpz: 0.0,
        cross_q: [-ca, 0.0, cb, 0.0],
        cross_p: [0.0, ca, 0.0, cb],
    })
}

/// Excess-noise variances `(ξ_A, ξ_B)` of an attack.
pub fn attack_excess(attack: &MdiAttack) -> (f64, f64) {
    (
        (1.0 - attack.tau_a) * (attack.omega_a - 1.0),
        (1.0 - attack.tau_b) * (attack.omega_b - 1.0),
    )
}

/// Displacement coefficients `u_★`, `v_★`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Displacement {
    pub u: [f64; 4],
    pub v: [f64; 4],
}

/// Optimal affine estimator of each `★` from `(Q_Z, P_Z)`:
/// `u = (⟨★Q_Z⟩⟨P_Z²⟩ − ⟨★P_Z⟩⟨Q_ZP_Z⟩)/D`, `v = (⟨★P_Z⟩⟨Q_Z²⟩ − ⟨★Q_Z⟩⟨Q_ZP_Z⟩)/D`.
pub fn displacement_coeffs(m: &MomentSet) -> Result<Displacement> {
    let den = m.qz2 * m.pz2 - m.qzpz * m.qzpz;
    if !(den > 0.0) {
        return Err(Error::Degenerate(
            "relay outcomes have a singular covariance".into(),
        ));
    }
    let mut d = Displacement {
        u: [0.0; 4],
        v: [0.0; 4],
    };
    for k in 0..4 {
        d.u[k] = (m.cross_q[k] * m.pz2 - m.cross_p[k] * m.qzpz) / den;
        d.v[k] = (m.cross_p[k] * m.qz2 - m.cross_q[k] * m.qzpz) / den;
    }
    Ok(d)
}

/// Coefficients of `z = w₁⟨Q_Z²⟩ + w₂⟨P_Z²⟩ + w₃⟨Q_ZP_Z⟩`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZWeights {
    pub w1: f64,
    pub w2: f64,
    pub w3: f64,
}

/// From `⟨Q_AQ_B⟩ = −(u_{q′A}u_{q′B}⟨Q_Z²⟩ + v_{q′A}v_{q′B}⟨P_Z²⟩ + (u_{q′A}v_{q′B} + v_{q′A}u_{q′B})⟨Q_ZP_Z⟩)`
/// and the analogous `P` expression.
pub fn z_weights(d: &Displacement) -> ZWeights {
    let (qa, pa, qb, pb) = (0, 1, 2, 3);
    ZWeights {
        w1: 0.5 * (d.u[pa] * d.u[pb] - d.u[qa] * d.u[qb]),
        w2: 0.5 * (d.v[pa] * d.v[pb] - d.v[qa] * d.v[qb]),
        w3: 0.5 * (d.u[pa] * d.v[pb] + d.v[pa] * d.u[pb] - d.u[qa] * d.v[qb] - d.v[qa] * d.u[qb]),
    }
}

/// Entries of the displaced-variable covariance matrix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassicalCm {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

/// Point values `(x, y, z)` implied by a moment set.
pub fn point_cm(m: &MomentSet) -> Result<ClassicalCm> {
    let d = displacement_coeffs(m)?;
    let resid = |k: usize| m.var[k] - d.u[k] * m.cross_q[k] - d.v[k] * m.cross_p[k];
    let w = z_weights(&d);
    Ok(ClassicalCm {
        x: 0.5 * (resid(0) + resid(1)),
        y: 0.5 * (resid(2) + resid(3)),
        z: w.w1 * m.qz2 + w.w2 * m.pz2 + w.w3 * m.qzpz,
    })
}

/// `t = √(8 ln(8/ε_PE)/n)`.
pub fn tail_t(n: f64, eps_pe: f64) -> f64 {
    (8.0 * (8.0 / eps_pe).ln() / n).sqrt()
}

/// Union of the per-entry failure probabilities `2e^{−nt²/8}` (x),
/// `2e^{−nt²/8}` (y) and `4e^{−nt²/8}` (z).
pub fn union_failure(n: f64, t: f64) -> f64 {
    8.0 * (-n * t * t / 8.0).exp()
}

/// Empirical estimators of the relay statistics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RelaySums {
    pub qz2: f64,
    pub pz2: f64,
    /// `n⁻¹Σ(Q_Z + P_Z)²`.
    pub plus2: f64,
    /// `n⁻¹Σ(Q_Z − P_Z)²`.
    pub minus2: f64,
}

impl RelaySums {
    pub fn from_moments(m: &MomentSet) -> Self {
        Self {
            qz2: m.qz2,
            pz2: m.pz2,
            plus2: m.qz2 + m.pz2 + 2.0 * m.qzpz,
            minus2: m.qz2 + m.pz2 - 2.0 * m.qzpz,
        }
    }
}

/// All eight `|w₁ Q/(1+s₁t) + w₂ P/(1+s₂t) + w₃(S₊/(4(1+s₃t)) − S₋/(4(1−s₃t)))|`.
pub fn z_candidates(w: &ZWeights, s: &RelaySums, t: f64) -> [f64; 8] {
    let mut out = [0.0; 8];
    for (k, slot) in out.iter_mut().enumerate() {
        let sg = |bit: usize| if k >> bit & 1 == 0 { 1.0 } else { -1.0 };
        let (s1, s2, s3) = (sg(0), sg(1), sg(2));
        *slot = (w.w1 * s.qz2 / (1.0 + s1 * t)
            + w.w2 * s.pz2 / (1.0 + s2 * t)
            + w.w3 * (s.plus2 / (4.0 * (1.0 + s3 * t)) - s.minus2 / (4.0 * (1.0 - s3 * t))))
            .abs();
    }
    out
}

fn check_t(t: f64) -> Result<()> {
    if !(t < 1.0) {
        return Err(Error::BlockTooSmall(format!("tail parameter t = {t} ≥ 1")));
    }
    Ok(())
}

/// Worst-case `(x_max, y_max, z_min)` from expected moments (analytic path).
pub fn worst_case_cm(m: &MomentSet, n: f64, eps_pe: f64) -> Result<ClassicalCm> {
    let t = tail_t(n, eps_pe);
    check_t(t)?;
    let d = displacement_coeffs(m)?;
    let p = point_cm(m)?;
    let z = z_candidates(&z_weights(&d), &RelaySums::from_moments(m), t)
        .into_iter()
        .fold(f64::INFINITY, f64::min);
    Ok(ClassicalCm {
        x: p.x / (1.0 - t),
        y: p.y / (1.0 - t),
        z,
    })
}

/// Worst-case CM from raw data `(Q′_A, P′_A, Q′_B, P′_B, Q_Z, P_Z)`; the
/// displacement coefficients are themselves estimated from the data.
pub fn worst_case_cm_empirical(data: [&[f64]; 6], eps_pe: f64) -> Result<ClassicalCm> {
    let n = data[0].len();
    if data.iter().any(|c| c.len() != n) || n < 2 {
        return Err(Error::Dimension("columns must share a length ≥ 2".into()));
    }
    let nf = n as f64;
    let t = tail_t(nf, eps_pe);
    check_t(t)?;
    let mean_prod = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>() / nf;
    let (qz, pz) = (data[4], data[5]);
    let mut m = MomentSet {
        var: [0.0; 4],
        qz2: mean_prod(qz, qz),
        pz2: mean_prod(pz, pz),
        qzpz: mean_prod(qz, pz),
        cross_q: [0.0; 4],
        cross_p: [0.0; 4],
    };
    for k in 0..4 {
        m.var[k] = mean_prod(data[k], data[k]);
        m.cross_q[k] = mean_prod(data[k], qz);
        m.cross_p[k] = mean_prod(data[k], pz);
    }
    let d = displacement_coeffs(&m)?;
    let displaced = |k: usize| -> f64 {
        data[k]
            .iter()
            .zip(qz.iter().zip(pz))
            .map(|(s, (q, p))| (s - d.u[k] * q - d.v[k] * p).powi(2))
            .sum::<f64>()
    };
    let x_max = (displaced(0) + displaced(1)) / (2.0 * nf * (1.0 - t));
    let y_max = (displaced(2) + displaced(3)) / (2.0 * nf * (1.0 - t));
    let sums = RelaySums {
        qz2: m.qz2,
        pz2: m.pz2,
        plus2: qz.iter().zip(pz).map(|(q, p)| (q + p).powi(2)).sum::<f64>() / nf,
        minus2: qz.iter().zip(pz).map(|(q, p)| (q - p).powi(2)).sum::<f64>() / nf,
    };
    let z_min = z_candidates(&z_weights(&d), &sums, t)
        .into_iter()
        .fold(f64::INFINITY, f64::min);
    Ok(ClassicalCm {
        x: x_max,
        y: y_max,
        z: z_min,
    })
}

/// Which user's heterodyne outcome Eve's Holevo bound is conditioned on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum HolevoReference {
    /// `Ĩ_E = S(V_ab) − S(V_{b|α})`, the convention of the asymptotic MDI rate.
    #[default]
    Alice,
    /// `Ĩ_E = S(V_ab) − S(V_{a|β})`.
    Bob,
}

/// Quantum CM of the users' entanglement-based modes from the classical
/// entries: `X = (V_M+2)x/V_M − 1`, `Y` alike, off-diagonal `(V_M+2)z/V_M · Z`.
pub fn quantum_cm(c: &ClassicalCm, v_m: f64) -> Result<CovMatrix> {
    if !(v_m > 0.0) {
        return Err(Error::Parameter("V_M must be positive".into()));
    }
    let s = (v_m + 2.0) / v_m;
    let (x, y, z) = (s * c.x - 1.0, s * c.y - 1.0, s * c.z);
    #[rustfmt::skip]
    let m = nalgebra::DMatrix::from_row_slice(4, 4, &[
        x, 0.0, z, 0.0,
        0.0, x, 0.0, -z,
        z, 0.0, y, 0.0,
        0.0, -z, 0.0, y,
    ]);
    let cm = CovMatrix::new(m)?.with_labels(["a", "b"])?;
    Ok(cm)
}

/// Terms of `r⁰ = ξĨ_AB − Ĩ_E`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CmRate {
    pub rate: f64,
    pub i_ab: f64,
    pub i_e: f64,
}

/// `Ĩ_AB = log₂(xy/(xy − z²))` (both quadratures) and the Holevo bound of the
/// Gaussian state with the mapped quantum CM.
pub fn rate_from_cm(
    c: &ClassicalCm,
    v_m: f64,
    xi: f64,
    reference: HolevoReference,
) -> Result<CmRate> {
    let det = c.x * c.y - c.z * c.z;
    if !(det > 0.0) {
        return Err(Error::Parameter(
            "estimated covariance is not positive".into(),
        ));
    }
    let v = quantum_cm(c, v_m)
        .map_err(|e| Error::Parameter(format!("estimated state is unphysical: {e}")))?;
    let i_ab = (c.x * c.y / det).log2();
    let cond = match reference {
        HolevoReference::Alice => condition_heterodyne(&v, 0)?,
        HolevoReference::Bob => condition_heterodyne(&v, 1)?,
    };
    let i_e = von_neumann_entropy(&v)? - von_neumann_entropy(&cond)?;
    Ok(CmRate {
        rate: xi * i_ab - i_e,
        i_ab,
        i_e,
    })
}

/// Failure probabilities and post-processing constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpsilonBudget {
    pub eps: f64,
    pub eps_s: f64,
    pub eps_ec: f64,
    pub eps_pe: f64,
    /// Error-correction success probability.
    pub p: f64,
    /// Discretization bits.
    pub d: u32,
}

pub const DEFAULT_P: f64 = 0.99;
pub const DEFAULT_XI: f64 = 0.95;
pub const DEFAULT_BITS: u32 = 5;
/// Target for the coherent-attack security parameter.
pub const TARGET_EPS: f64 = 1e-20;

impl EpsilonBudget {
    pub fn uniform(eps: f64, p: f64, d: u32) -> Result<Self> {
        let b = Self {
            eps,
            eps_s: eps,
            eps_ec: eps,
            eps_pe: eps,
            p,
            d,
        };
        b.validate()?;
        Ok(b)
    }

    /// Equal components chosen so that `ε″ = (K⁴/50)ε′ = 0.99 · 10⁻²⁰`.
    pub fn for_coherent_target(k_corr: f64, p: f64, d: u32) -> Result<Self> {
        let each = 0.99 * TARGET_EPS * 50.0 / (4.0 * k_corr.powi(4));
        Self::uniform(each, p, d)
    }

    pub fn validate(&self) -> Result<()> {
        for e in [self.eps, self.eps_s, self.eps_ec, self.eps_pe, self.p] {
            if !(e > 0.0 && e < 1.0) {
                return Err(Error::Parameter(format!("budget entry {e} outside (0, 1)")));
            }
        }
        Ok(())
    }

    /// `ε′ = ε + ε_s + ε_EC + ε_PE`.
    pub fn total(&self) -> f64 {
        self.eps + self.eps_s + self.eps_ec + self.eps_pe
    }

    /// `ε″ = (K⁴/50) ε′`.
    pub fn coherent_total(&self, k_corr: f64) -> f64 {
        k_corr.powi(4) / 50.0 * self.total()
    }

    /// `Δ_AEP(δ, d) = 4(d+1)√(log₂(2/δ²))` at `δ = ⅔ p ε_s`.
    pub fn delta_aep(&self) -> f64 {
        let delta = 2.0 / 3.0 * self.p * self.eps_s;
        4.0 * (self.d as f64 + 1.0) * (2f64.log2() - 2.0 * delta.log2()).sqrt()
    }

    /// `log₂(p − ⅔pε_s) + 2log₂(2ε)`, multiplied by `1/n` in the bounds.
    fn log_terms(&self) -> f64 {
        (self.p - 2.0 / 3.0 * self.p * self.eps_s).log2() + 2.0 * (2.0 * self.eps).log2()
    }
}

/// Protocol and channel parameters of a composable evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComposableParams {
    pub attack: MdiAttack,
    pub v_m: f64,
    pub xi: f64,
    pub reference: HolevoReference,
}

fn worst_rate(n: f64, budget: &EpsilonBudget, p: &ComposableParams) -> Result<f64> {
    let (xa, xb) = attack_excess(&p.attack);
    let m = cloner_moments(p.attack.tau_a, p.attack.tau_b, xa, xb, p.v_m)?;
    let c = worst_case_cm(&m, n, budget.eps_pe)?;
    Ok(rate_from_cm(&c, p.v_m, p.xi, p.reference)?.rate)
}

/// Collective-attack bound
/// `r⁰ − Δ_AEP/√n + (1/n)log₂(p − ⅔pε_s) + (2/n)log₂(2ε)`.
pub fn keyrate_composable_collective(
    n: f64,
    budget: &EpsilonBudget,
    p: &ComposableParams,
) -> Result<f64> {
    budget.validate()?;
    let r0 = worst_rate(n, budget, p)?;
    Ok(r0 - budget.delta_aep() / n.sqrt() + budget.log_terms() / n)
}

/// Coherent-attack bound with `k` energy-test signals and correction `K`:
/// `((n−k)/n)r⁰ − (√(n−k)/n)Δ_AEP + (1/n)[log₂(p − ⅔pε_s) + 2log₂(2ε)] − (2/n)log₂((K+4)/4)`.
pub fn keyrate_composable_coherent(
    n: f64,
    k: f64,
    k_corr: f64,
    budget: &EpsilonBudget,
    p: &ComposableParams,
) -> Result<f64> {
    if !(k >= 0.0 && k < n) {
        return Err(Error::Parameter(format!(
            "energy-test size k = {k} outside [0, n)"
        )));
    }
    budget.validate()?;
    let r0 = worst_rate(n, budget, p)?;
    Ok(
        (n - k) / n * r0 - (n - k).sqrt() / n * budget.delta_aep() + budget.log_terms() / n
            - 2.0 / n * ((k_corr + 4.0) / 4.0).log2(),
    )
}

/// Best value over `V_M` (and, for coherent attacks, over `k/n`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComposableOptimum {
    pub v_m: f64,
    pub k: f64,
    pub rate: f64,
}

/// Search interval for `ln V_M`.
pub const VM_SEARCH: (f64, f64) = (-2.302_585_092_994_046, 11.512_925_464_970_229);

fn over_vm<F: Fn(f64) -> f64>(f: F) -> (f64, f64) {
    let m = grid_golden_max(|lv| f(lv.exp()), VM_SEARCH.0, VM_SEARCH.1, 41, 1e-6);
    (m.x.exp(), m.value)
}

pub fn optimize_collective(
    n: f64,
    budget: &EpsilonBudget,
    base: &ComposableParams,
) -> ComposableOptimum {
    let (v_m, rate) = over_vm(|v| {
        keyrate_composable_collective(n, budget, &ComposableParams { v_m: v, ..*base })
            .unwrap_or(f64::NEG_INFINITY)
    });
    ComposableOptimum { v_m, k: 0.0, rate }
}

/// Maximizes the coherent bound over `V_M` and `k`. For fixed `V_M` the
/// bound is concave in `s = √(n−k)`, so `k` is found by a golden search on `s`.
/// Nothing else in the bound depends on `k`, so a positive rate pushes the
/// test down to its floor of one signal.
pub fn optimize_coherent(
    n: f64,
    k_corr: f64,
    budget: &EpsilonBudget,
    base: &ComposableParams,
) -> ComposableOptimum {
    let best_k = |v: f64| -> (f64, f64) {
        let p = ComposableParams { v_m: v, ..*base };
        let m = grid_golden_max(
            |s| {
                let k = (n - s * s).max(1.0);
                keyrate_composable_coherent(n, k, k_corr, budget, &p).unwrap_or(f64::NEG_INFINITY)
            },
            1.0,
            (n - 1.0).sqrt(),
            21,
            1e-6 * n.sqrt(),
        );
        ((n - m.x * m.x).max(1.0), m.value)
    };
    let (v_m, _) = over_vm(|v| best_k(v).1);
    let (k, rate) = best_k(v_m);
    ComposableOptimum { v_m, k, rate }
}

/// Asymptotic MDI rate at the same channel, maximized over `V_M`.
pub fn asymptotic_reference(base: &ComposableParams) -> (f64, f64) {
    over_vm(|v| {
        keyrate_mdi(base.xi, v + 1.0, &base.attack)
            .map(|b| b.rate)
            .unwrap_or(f64::NEG_INFINITY)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mdi::cm_ab_given_gamma;

    #[test]
    fn cloner_moment_examples() {
        let m = cloner_moments(1.0, 1.0, 0.0, 0.0, 3.0).unwrap();
        assert_eq!(m.qz2, 4.0);
        let m0 = cloner_moments(0.7, 0.4, 0.02, 0.04, 0.0).unwrap();
        assert!((m0.qz2 - 1.03).abs() < 1e-15);
        assert!(m0.cross_q.iter().chain(&m0.cross_p).all(|&c| c == 0.0));
    }

    #[test]
    fn decoupled_coefficients() {
        let m = cloner_moments(0.8, 0.6, 0.01, 0.02, 5.0).unwrap();
        let d = displacement_coeffs(&m).unwrap();
        for k in 0..4 {
            assert!((d.u[k] - m.cross_q[k] / m.qz2).abs() < 1e-15);
            assert!((d.v[k] - m.cross_p[k] / m.pz2).abs() < 1e-15);
        }
        let nonzero = d.u.iter().chain(&d.v).filter(|c| **c != 0.0).count();
        assert_eq!(nonzero, 4);
        let w = z_weights(&d);
        let expect = (0.8f64 * 0.6).sqrt() / 4.0 * 25.0 / (m.qz2 * m.qz2);
        assert!((w.w1.abs() - expect).abs() < 1e-15 && (w.w2.abs() - expect).abs() < 1e-15);
        assert_eq!(w.w3, 0.0);
        let z0 = MomentSet {
            cross_q: [0.0; 4],
            cross_p: [0.0; 4],
            ..m
        };
        let d0 = displacement_coeffs(&z0).unwrap();
        assert!(d0.u.iter().chain(&d0.v).all(|c| *c == 0.0));
    }

    #[test]
    fn tail_parameter() {
        assert!((tail_t(1e6, 1e-10) - 0.014_17).abs() < 1e-5);
        assert!((tail_t(4e6, 1e-10) * 2.0 - tail_t(1e6, 1e-10)).abs() < 1e-15);
        let t = tail_t(1e6, 1e-10);
        assert!((union_failure(1e6, t) - 1e-10).abs() < 1e-22);
    }

    #[test]
    fn analytic_worst_case_closed_forms() {
        let (ta, tb, v) = (0.9, 0.7, 8.0);
        let m = cloner_moments(ta, tb, 0.01, 0.03, v).unwrap();
        let nu = m.qz2;
        let n = 1e7;
        let t = tail_t(n, 1e-10);
        let c = worst_case_cm(&m, n, 1e-10).unwrap();
        assert!((c.z - (ta * tb).sqrt() * v * v / (2.0 * (1.0 + t) * nu)).abs() < 1e-12);
        assert!((c.x - v / (1.0 - t) * (1.0 - ta / 2.0 * v / nu)).abs() < 1e-12);
        assert!((c.y - v / (1.0 - t) * (1.0 - tb / 2.0 * v / nu)).abs() < 1e-12);
        let p = point_cm(&m).unwrap();
        assert!(c.x >= p.x && c.y >= p.y && c.z <= p.z.abs());
        let cands = z_candidates(
            &z_weights(&displacement_coeffs(&m).unwrap()),
            &RelaySums::from_moments(&m),
            t,
        );
        assert_eq!(cands.len(), 8);
    }

    #[test]
    fn point_cm_maps_to_relay_state() {
        let at = MdiAttack::independent(0.9, 0.6, 1.2, 1.05).unwrap();
        let v_m = 6.0;
        let (xa, xb) = attack_excess(&at);
        let m = cloner_moments(at.tau_a, at.tau_b, xa, xb, v_m).unwrap();
        let q = quantum_cm(&point_cm(&m).unwrap(), v_m).unwrap();
        let closed = cm_ab_given_gamma(v_m + 1.0, &at).unwrap();
        assert!((q.matrix() - closed.matrix()).amax() < 1e-12);
        let r = rate_from_cm(&point_cm(&m).unwrap(), v_m, 0.95, HolevoReference::Alice).unwrap();
        let a = keyrate_mdi(0.95, v_m + 1.0, &at).unwrap();
        assert!((r.rate - a.rate).abs() < 1e-10);
    }

    #[test]
    fn uncorrelated_cm_has_no_key() {
        let r = rate_from_cm(
            &ClassicalCm {
                x: 3.0,
                y: 2.0,
                z: 0.0,
            },
            3.0,
            1.0,
            HolevoReference::Alice,
        )
        .unwrap();
        assert_eq!(r.i_ab, 0.0);
        assert!(r.rate <= 1e-12);
    }

    #[test]
    fn budget_meets_target() {
        let n = 1e9;
        let b = EpsilonBudget::for_coherent_target(n, DEFAULT_P, DEFAULT_BITS).unwrap();
        assert!(b.coherent_total(n) < TARGET_EPS);
        assert!(b.total() < TARGET_EPS);
    }

    #[test]
    fn bounds_order_and_limit() {
        let at = MdiAttack::independent(
            0.99,
            10f64.powf(-0.1),
            1.0,
            1.0 + 0.01 / (1.0 - 10f64.powf(-0.1)),
        )
        .unwrap();
        let base = ComposableParams {
            attack: at,
            v_m: 20.0,
            xi: DEFAULT_XI,
            reference: HolevoReference::Alice,
        };
        let n = 1e9;
        let b = EpsilonBudget::for_coherent_target(n, DEFAULT_P, DEFAULT_BITS).unwrap();
        let col = keyrate_composable_collective(n, &b, &base).unwrap();
        let coh = keyrate_composable_coherent(n, 0.0, n, &b, &base).unwrap();
        let asym = keyrate_mdi(DEFAULT_XI, 21.0, &at).unwrap().rate;
        assert!(coh < col && col < asym);
        let huge = keyrate_composable_collective(1e30, &b, &base).unwrap();
        assert!((huge - asym).abs() < 1e-6);
    }
}
