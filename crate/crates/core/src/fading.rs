//! Uniform fading. In a fast-fading channel Eve sees every use at a
//! different transmissivity while the users only know the worst one, so the
//! mutual information is taken at `τ_min` and the Holevo bound is averaged;
//! a slow-fading channel averages the whole rate.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mdi::{
    holevo_mdi, holevo_star3, keyrate_mdi, keyrate_star3, mutual_info_mdi, mutual_info_star3,
    optimize_mu, MdiAttack, StarAttack,
};
use crate::oneway::{holevo_oneway, keyrate_oneway, mutual_info_oneway, LossyChannel, OneWaySpec};
use crate::quadrature::tensor_points;

/// Transmissivity uniform on `[τ_min, τ_min + Δτ]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UniformFade {
    pub tau_min: f64,
    pub delta: f64,
}

impl UniformFade {
    pub fn new(tau_min: f64, delta: f64) -> Result<Self> {
        if !(tau_min > 0.0 && tau_min < 1.0) {
            return Err(Error::Parameter(format!(
                "τ_min = {tau_min} outside (0, 1)"
            )));
        }
        if !(delta >= 0.0) {
            return Err(Error::Parameter(format!("Δτ = {delta} must be ≥ 0")));
        }
        if tau_min + delta > 1.0 + 1e-12 {
            return Err(Error::Parameter(format!(
                "τ_min + Δτ = {} exceeds 1; the channel would amplify",
                tau_min + delta
            )));
        }
        Ok(Self { tau_min, delta })
    }

    pub fn tau_max(&self) -> f64 {
        (self.tau_min + self.delta).min(1.0)
    }

    pub fn mean(&self) -> f64 {
        self.tau_min + 0.5 * self.delta
    }

    fn degenerate(&self) -> bool {
        self.delta == 0.0
    }
}

/// Gauss–Legendre nodes per axis for 1-, 2- and 3-D averages. The 3-D
/// default of 12 agrees with 24 to about 1e-5 bits on star rates; the
/// min over user pairs leaves a kink that limits further gains.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FadingNodes {
    pub one: usize,
    pub two: usize,
    pub three: usize,
}

impl Default for FadingNodes {
    fn default() -> Self {
        Self {
            one: 64,
            two: 32,
            three: 12,
        }
    }
}

impl FadingNodes {
    pub fn doubled(&self) -> Self {
        Self {
            one: 2 * self.one,
            two: 2 * self.two,
            three: 2 * self.three,
        }
    }
}

/// Fading rate with its two ingredients; for slow fading `i_ab` is the
/// averaged mutual information.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FadingRate {
    pub rate: f64,
    pub i_ab: f64,
    pub i_e: f64,
}

/// Mean of `f` over `dim` independent copies of the fade. Points are
/// evaluated in parallel and summed in lexicographic order.
fn fade_mean<F>(fade: &UniformFade, dim: usize, nodes: usize, f: F) -> Result<f64>
where
    F: Fn(&[f64]) -> Result<f64> + Sync,
{
    if fade.degenerate() {
        return f(&vec![fade.tau_min; dim]);
    }
    let pts = tensor_points(&vec![(fade.tau_min, fade.tau_max()); dim], nodes)?;
    let vals: Vec<f64> = pts.par_iter().map(|(p, _)| f(p)).collect::<Result<_>>()?;
    let mut acc = 0.0;
    for ((p, w), v) in pts.iter().zip(&vals) {
        if !v.is_finite() {
            return Err(Error::Integration(format!("integrand is {v} at {p:?}")));
        }
        acc += w * v;
    }
    Ok(acc)
}

pub fn keyrate_fast_oneway(
    fade: &UniformFade,
    spec: &OneWaySpec,
    omega: f64,
    nodes: &FadingNodes,
) -> Result<FadingRate> {
    let i_ab = mutual_info_oneway(spec, &LossyChannel::new(fade.tau_min, omega)?);
    let i_e = fade_mean(fade, 1, nodes.one, |t| {
        holevo_oneway(spec, &LossyChannel::new(t[0], omega)?)
    })?;
    Ok(FadingRate {
        rate: spec.xi * i_ab - i_e,
        i_ab,
        i_e,
    })
}

pub fn keyrate_slow_oneway(
    fade: &UniformFade,
    spec: &OneWaySpec,
    omega: f64,
    nodes: &FadingNodes,
) -> Result<FadingRate> {
    let i_ab = fade_mean(fade, 1, nodes.one, |t| {
        Ok(mutual_info_oneway(spec, &LossyChannel::new(t[0], omega)?))
    })?;
    let i_e = fade_mean(fade, 1, nodes.one, |t| {
        holevo_oneway(spec, &LossyChannel::new(t[0], omega)?)
    })?;
    Ok(FadingRate {
        rate: spec.xi * i_ab - i_e,
        i_ab,
        i_e,
    })
}

/// Symmetric MDI link pair with Eve's optimal correlated attack at each
/// `(η_A, η_B)`.
fn mdi_attack(eta_a: f64, eta_b: f64, omega: f64) -> Result<MdiAttack> {
    MdiAttack::optimal(eta_a, eta_b, omega, omega)
}

pub fn keyrate_fast_mdi(
    fade: &UniformFade,
    xi: f64,
    mu: f64,
    omega: f64,
    nodes: &FadingNodes,
) -> Result<FadingRate> {
    let i_ab = mutual_info_mdi(mu, &mdi_attack(fade.tau_min, fade.tau_min, omega)?)?;
    let i_e = fade_mean(fade, 2, nodes.two, |t| {
        holevo_mdi(mu, &mdi_attack(t[0], t[1], omega)?)
    })?;
    Ok(FadingRate {
        rate: xi * i_ab - i_e,
        i_ab,
        i_e,
    })
}

pub fn keyrate_slow_mdi(
    fade: &UniformFade,
    xi: f64,
    mu: f64,
    omega: f64,
    nodes: &FadingNodes,
) -> Result<FadingRate> {
    let i_ab = fade_mean(fade, 2, nodes.two, |t| {
        mutual_info_mdi(mu, &mdi_attack(t[0], t[1], omega)?)
    })?;
    let i_e = fade_mean(fade, 2, nodes.two, |t| {
        holevo_mdi(mu, &mdi_attack(t[0], t[1], omega)?)
    })?;
    Ok(FadingRate {
        rate: xi * i_ab - i_e,
        i_ab,
        i_e,
    })
}

fn star_i_min(mu: f64, at: &StarAttack) -> Result<f64> {
    let (ab, ac) = mutual_info_star3(mu, at)?;
    Ok(ab.min(ac))
}

pub fn keyrate_fast_star(
    fade: &UniformFade,
    xi: f64,
    mu: f64,
    omega: f64,
    nodes: &FadingNodes,
) -> Result<FadingRate> {
    let i_ab = star_i_min(mu, &StarAttack::new(fade.tau_min, omega)?)?;
    let i_e = fade_mean(fade, 3, nodes.three, |t| {
        holevo_star3(mu, &StarAttack::links([t[0], t[1], t[2]], omega)?)
    })?;
    Ok(FadingRate {
        rate: xi * i_ab - i_e,
        i_ab,
        i_e,
    })
}

pub fn keyrate_slow_star(
    fade: &UniformFade,
    xi: f64,
    mu: f64,
    omega: f64,
    nodes: &FadingNodes,
) -> Result<FadingRate> {
    let i_ab = fade_mean(fade, 3, nodes.three, |t| {
        star_i_min(mu, &StarAttack::links([t[0], t[1], t[2]], omega)?)
    })?;
    let i_e = fade_mean(fade, 3, nodes.three, |t| {
        holevo_star3(mu, &StarAttack::links([t[0], t[1], t[2]], omega)?)
    })?;
    Ok(FadingRate {
        rate: xi * i_ab - i_e,
        i_ab,
        i_e,
    })
}

/// Rate without fading at the mean transmissivity, for comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FadingProtocol {
    OneWay,
    Mdi,
    Star,
}

/// Non-fading rate at `η̄ = τ_min + Δτ/2`. `mu` is ignored for one-way,
/// whose modulation lives in `spec`.
pub fn keyrate_at_mean(
    protocol: FadingProtocol,
    fade: &UniformFade,
    spec: &OneWaySpec,
    xi: f64,
    mu: f64,
    omega: f64,
) -> Result<f64> {
    let eta = fade.mean();
    Ok(match protocol {
        FadingProtocol::OneWay => keyrate_oneway(spec, &LossyChannel::new(eta, omega)?)?.rate,
        FadingProtocol::Mdi => keyrate_mdi(xi, mu, &mdi_attack(eta, eta, omega)?)?.rate,
        FadingProtocol::Star => keyrate_star3(xi, mu, &StarAttack::new(eta, omega)?)?.rate,
    })
}

/// `μ` interval for star-network fading.
pub const STAR_MU_RANGE: (f64, f64) = (2.0, 20.0);

/// Maximizes a fading rate over `μ ∈ [lo, hi]`.
pub fn optimize_fading_mu<F>(rate: F, lo: f64, hi: f64) -> Result<(f64, FadingRate)>
where
    F: Fn(f64) -> Result<FadingRate>,
{
    let (mu, _) = optimize_mu(
        |m| rate(m).map(|r| r.rate).unwrap_or(f64::NEG_INFINITY),
        lo,
        hi,
    );
    Ok((mu, rate(mu)?))
}
