//! Key rates of the phase-encoded protocol with heterodyne detection.
//!
//! Integrals over Bob's outcome `b` use polar coordinates. Rotating `b` by
//! `2π/N` permutes the posteriors `p(a_k|b)` cyclically and maps each
//! `ρ_{Eve|k}` to `ρ_{Eve|k+1}` by a local unitary, so every integrand is
//! `2π/N`-periodic in `arg b`: one wedge is integrated (uniform angular rule,
//! exact for periodic trigonometric content) and multiplied by `N`.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{constellation_entropy, Constellation, EveEnsemble, FockConfig, FockDensity, C64};
use crate::error::{Error, Result};
use crate::optimize::{bisect, golden_max};
use crate::quadrature::GaussLegendre;

/// Polar grid over one `2π/N` wedge of Bob's outcome plane.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BGrid {
    pub radial: usize,
    pub angular: usize,
}

impl Default for BGrid {
    fn default() -> Self {
        Self {
            radial: 64,
            angular: 16,
        }
    }
}

/// `(b, weight)` with weights that integrate over the whole plane.
fn b_nodes(c: &Constellation, tau: f64, sigma2: f64, grid: &BGrid) -> Result<Vec<(C64, f64)>> {
    let r_max = tau.sqrt() * c.z + 7.0 * sigma2.sqrt();
    let gl = GaussLegendre::new(grid.radial)?;
    let wedge = 2.0 * std::f64::consts::PI / c.n as f64;
    let dphi = wedge / grid.angular as f64;
    let mut out = Vec::with_capacity(grid.radial * grid.angular);
    for (r, wr) in gl.mapped(0.0, r_max) {
        for j in 0..grid.angular {
            let phi = (j as f64 + 0.5) * dphi;
            out.push((C64::from_polar(r, phi), wr * r * dphi * c.n as f64));
        }
    }
    Ok(out)
}

/// Bob's heterodyne statistics at one outcome: `p(b)` and the posteriors.
struct Posterior {
    p_b: f64,
    post: Vec<f64>,
    /// `(1/N) Σ_k p(b|a_k) log₂(p(b|a_k)/p(b))`.
    info_density: f64,
}

fn posterior(b: C64, d: &[C64], sigma2: f64) -> Posterior {
    let n = d.len() as f64;
    let logs: Vec<f64> = d.iter().map(|dk| -(b - dk).norm_sqr() / sigma2).collect();
    let m = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = logs.iter().map(|l| (l - m).exp()).collect();
    let s: f64 = e.iter().sum();
    let scale = m.exp() / (std::f64::consts::PI * sigma2);
    let post: Vec<f64> = e.iter().map(|x| x / s).collect();
    let info = post
        .iter()
        .zip(&e)
        .filter(|(p, _)| **p > 0.0)
        .map(|(p, ek)| ek * (n * p).log2())
        .sum::<f64>()
        * scale
        / n;
    Posterior {
        p_b: scale * s / n,
        post,
        info_density: info,
    }
}

/// `σ² = 1 + (1−τ)n̄`: heterodyne variance of a displaced thermal state.
fn bob_sigma2(tau: f64, nbar: f64) -> f64 {
    1.0 + (1.0 - tau) * nbar
}

fn bob_means(c: &Constellation, tau: f64) -> Vec<C64> {
    c.amplitudes().into_iter().map(|a| a * tau.sqrt()).collect()
}

/// `I(X_A : X_B)` for heterodyne detection after a thermal-loss channel.
pub fn mutual_info_discrete(c: &Constellation, tau: f64, nbar: f64, grid: &BGrid) -> Result<f64> {
    let s2 = bob_sigma2(tau, nbar);
    let d = bob_means(c, tau);
    let nodes = b_nodes(c, tau, s2, grid)?;
    let vals: Vec<f64> = nodes
        .par_iter()
        .map(|(b, w)| w * posterior(*b, &d, s2).info_density)
        .collect();
    let i = vals.iter().sum::<f64>();
    if !i.is_finite() {
        return Err(Error::Integration(
            "mutual information is not finite".into(),
        ));
    }
    Ok(i)
}

/// How Eve's state is conditioned on Bob's outcome in reverse reconciliation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum RrConditioning {
    /// Project the joint Bob–Eve state on `⟨b|`; keeps the correlation
    /// between Bob's mode and Eve's retained TMSV mode.
    #[default]
    Projected,
    /// Bayesian mixture `Σ_k p(a_k|b) ρ_{Eve|k}`; exact only for pure loss,
    /// optimistic for thermal noise.
    Mixture,
}

/// `∫ d²b p(b) S(ρ_{Eve|b})`.
fn conditional_eve_entropy(
    c: &Constellation,
    tau: f64,
    nbar: f64,
    eve: &EveEnsemble,
    grid: &BGrid,
    mode: RrConditioning,
) -> Result<f64> {
    let s2 = bob_sigma2(tau, nbar);
    let d = bob_means(c, tau);
    let nodes = b_nodes(c, tau, s2, grid)?;
    let vals: Vec<f64> = nodes
        .par_iter()
        .map(|(b, w)| {
            let p = posterior(*b, &d, s2);
            if p.p_b * w == 0.0 {
                return 0.0;
            }
            let s = match (mode, eve.bob_conditioned(*b)) {
                (RrConditioning::Projected, Some((_, s))) => s,
                _ => eve.mixture_entropy(&p.post),
            };
            w * p.p_b * s
        })
        .collect();
    let v = vals.iter().sum::<f64>();
    if !v.is_finite() {
        return Err(Error::Integration(
            "conditional entropy integral is not finite".into(),
        ));
    }
    Ok(v)
}

/// Rates of the discrete protocol. `optimal` is only defined for pure loss.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiscreteRates {
    pub optimal: Option<f64>,
    pub direct: f64,
    pub reverse: f64,
    pub i_ab: f64,
    /// `S(ρ_Eve)`.
    pub eve_entropy: f64,
    pub n_max: usize,
}

/// Pure loss: `R_opt = S(ρ_B) − S(ρ_E′)`, `R_DR = I − S(ρ_E′)`,
/// `R_RR = I − S(ρ_E′) + ∫ p(b) S(ρ_{E′|b})`.
pub fn pureloss_rates(c: &Constellation, tau: f64, grid: &BGrid) -> Result<DiscreteRates> {
    let eve = EveEnsemble::pure_loss(c, tau)?;
    let s_e = constellation_entropy(c, (1.0 - tau).sqrt())?;
    let s_b = constellation_entropy(c, tau.sqrt())?;
    let i_ab = mutual_info_discrete(c, tau, 0.0, grid)?;
    let cond = conditional_eve_entropy(c, tau, 0.0, &eve, grid, RrConditioning::Mixture)?;
    Ok(DiscreteRates {
        optimal: Some(s_b - s_e),
        direct: i_ab - s_e,
        reverse: i_ab - s_e + cond,
        i_ab,
        eve_entropy: s_e,
        n_max: 0,
    })
}

/// Thermal loss with `n̄` photons: `R_DR = I − [S(ρ_Eve) − S(ρ_{Eve|k})]`,
/// `R_RR = I − S(ρ_Eve) + ∫ p(b) S(ρ_{E′e|b})`.
pub fn thermal_rates(
    c: &Constellation,
    tau: f64,
    nbar: f64,
    cfg: &FockConfig,
    grid: &BGrid,
) -> Result<DiscreteRates> {
    thermal_rates_with(c, tau, nbar, cfg, grid, RrConditioning::default())
}

pub fn thermal_rates_with(
    c: &Constellation,
    tau: f64,
    nbar: f64,
    cfg: &FockConfig,
    grid: &BGrid,
    mode: RrConditioning,
) -> Result<DiscreteRates> {
    let eve = EveEnsemble::thermal(c, tau, nbar, cfg)?;
    let i_ab = mutual_info_discrete(c, tau, nbar, grid)?;
    let s_e = eve.average_entropy();
    let cond = conditional_eve_entropy(c, tau, nbar, &eve, grid, mode)?;
    Ok(DiscreteRates {
        optimal: None,
        direct: i_ab - eve.holevo(),
        reverse: i_ab - s_e + cond,
        i_ab,
        eve_entropy: s_e,
        n_max: eve.n_max,
    })
}

/// DR rate only; skips the RR integral.
fn thermal_direct(
    c: &Constellation,
    tau: f64,
    nbar: f64,
    cfg: &FockConfig,
    grid: &BGrid,
) -> Result<f64> {
    let eve = EveEnsemble::thermal(c, tau, nbar, cfg)?;
    Ok(mutual_info_discrete(c, tau, nbar, grid)? - eve.holevo())
}

/// Thermal photons of Eve's TMSV for excess noise `ε = (1−τ)(ω−1)/τ`,
/// `ω = 2n̄ + 1`.
pub fn photons_from_excess_noise(tau: f64, eps: f64) -> Result<f64> {
    if !(tau > 0.0 && tau < 1.0) || !(eps >= 0.0) {
        return Err(Error::Parameter(format!(
            "need 0 < τ < 1 and ε ≥ 0 (τ = {tau}, ε = {eps})"
        )));
    }
    Ok(eps * tau / (2.0 * (1.0 - tau)))
}

/// Largest tolerable excess noise in direct reconciliation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiscreteThreshold {
    pub eps: f64,
    pub residual: f64,
    /// False when the rate is still positive at `eps_hi` (then `eps = eps_hi`)
    /// or already non-positive at `ε = 0` (then `eps = 0`).
    pub bracketed: bool,
}

/// Bisection of the DR rate in `ε`. The upper end starts at `0.01` and
/// doubles until the rate is non-positive or `eps_max` is reached.
pub fn threshold_discrete(
    c: &Constellation,
    tau: f64,
    eps_max: f64,
    cfg: &FockConfig,
    grid: &BGrid,
) -> Result<DiscreteThreshold> {
    let rate = |eps: f64| -> Result<f64> {
        thermal_direct(c, tau, photons_from_excess_noise(tau, eps)?, cfg, grid)
    };
    let r0 = rate(0.0)?;
    if r0 <= 0.0 {
        return Ok(DiscreteThreshold {
            eps: 0.0,
            residual: r0,
            bracketed: false,
        });
    }
    let mut lo = 0.0;
    let mut hi = 0.01f64.min(eps_max);
    loop {
        let rh = rate(hi)?;
        if rh <= 0.0 {
            break;
        }
        if hi >= eps_max {
            return Ok(DiscreteThreshold {
                eps: hi,
                residual: rh,
                bracketed: false,
            });
        }
        lo = hi;
        hi = (2.0 * hi).min(eps_max);
    }
    let mut err = None;
    let root = bisect(
        |e| match rate(e) {
            Ok(v) => v,
            Err(x) => {
                err.get_or_insert(x);
                f64::NAN
            }
        },
        lo,
        hi,
        1e-4,
        1e-8,
    )?;
    if let Some(e) = err {
        return Err(e);
    }
    Ok(DiscreteThreshold {
        eps: root.x,
        residual: root.residual,
        bracketed: true,
    })
}

/// Golden-section search of a rate over `z ∈ [lo, hi]`, tolerance `1e-3`.
pub fn optimize_radius<F: Fn(f64) -> f64>(rate: F, lo: f64, hi: f64) -> (f64, f64) {
    let m = golden_max(rate, lo, hi, 1e-3);
    (m.x, m.value)
}

/// `p(b|d)(n̄) = exp(−|b−d|²/(n̄+1)) / ((n̄+1)π)`.
pub fn displaced_thermal_density(b: C64, d: C64, nbar: f64) -> f64 {
    let s = nbar + 1.0;
    (-(b - d).norm_sqr() / s).exp() / (s * std::f64::consts::PI)
}

/// `⟨b|ρ(d, n̄)|b⟩/π` with `ρ(d, n̄) = D(d) ρ_th D(d)†` built in a Fock space
/// truncated at `n_max` from exact displacement matrix elements.
pub fn displaced_thermal_fock_density(b: C64, d: C64, nbar: f64, n_max: usize) -> Result<f64> {
    if !(nbar >= 0.0) {
        return Err(Error::Parameter(format!("n̄ = {nbar} must be ≥ 0")));
    }
    let dim = n_max + 1;
    let disp = displacement_matrix(d, n_max);
    let q = nbar / (nbar + 1.0);
    let pth: Vec<f64> = (0..dim).map(|n| q.powi(n as i32) / (nbar + 1.0)).collect();
    let mut rho = DMatrix::<C64>::zeros(dim, dim);
    for (n, p) in pth.iter().enumerate() {
        let col = disp.column(n);
        rho += col * col.adjoint() * C64::new(*p, 0.0);
    }
    let loss = 1.0 - rho.diagonal().iter().map(|x| x.re).sum::<f64>();
    let rho = FockDensity::new(vec![dim], rho, loss.max(0.0))?;
    let mut ket = vec![C64::new((-0.5 * b.norm_sqr()).exp(), 0.0); dim];
    for m in 1..dim {
        ket[m] = ket[m - 1] * b / (m as f64).sqrt();
    }
    let mut val = C64::new(0.0, 0.0);
    for i in 0..dim {
        for j in 0..dim {
            val += ket[i].conj() * rho.matrix()[(i, j)] * ket[j];
        }
    }
    Ok(val.re / std::f64::consts::PI)
}

/// `⟨m|D(d)|n⟩ = √(n!/m!) d^{m−n} e^{−|d|²/2} L_n^{(m−n)}(|d|²)` for `m ≥ n`
/// and `√(m!/n!) (−d*)^{n−m} e^{−|d|²/2} L_m^{(n−m)}(|d|²)` otherwise.
fn displacement_matrix(d: C64, n_max: usize) -> DMatrix<C64> {
    let dim = n_max + 1;
    let x = d.norm_sqr();
    let pre = (-0.5 * x).exp();
    let ln_fact: Vec<f64> = (0..dim)
        .scan(0.0, |acc, k| {
            if k > 0 {
                *acc += (k as f64).ln();
            }
            Some(*acc)
        })
        .collect();
    DMatrix::from_fn(dim, dim, |m, n| {
        let (lo, hi) = if m >= n { (n, m) } else { (m, n) };
        let alpha = hi - lo;
        let lag = laguerre(lo, alpha as f64, x);
        let ratio = (0.5 * (ln_fact[lo] - ln_fact[hi])).exp();
        let base = if m >= n { d } else { -d.conj() };
        base.powu(alpha as u32) * (pre * ratio * lag)
    })
}

/// Generalized Laguerre polynomial `L_n^{(α)}(x)` by upward recurrence.
fn laguerre(n: usize, alpha: f64, x: f64) -> f64 {
    let mut l0 = 1.0;
    if n == 0 {
        return l0;
    }
    let mut l1 = 1.0 + alpha - x;
    for k in 1..n {
        let kf = k as f64;
        let l2 = ((2.0 * kf + 1.0 + alpha - x) * l1 - (kf + alpha) * l0) / (kf + 1.0);
        l0 = l1;
        l1 = l2;
    }
    l1
}
