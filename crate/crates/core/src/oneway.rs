//! One-way Gaussian-modulated protocols with coherent or thermal states.
//!
//! Alice's EPR-equivalent variance is `V_A = V_M + V_th + 1`. The channel is
//! an entangling cloner: a beamsplitter of transmissivity `τ` mixing the
//! signal with one half (E) of a TMSV of variance `ω` whose other half (e)
//! Eve keeps. Eve's output modes are ordered `(E', e)`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::breakdown::{KeyRateBreakdown, SpectrumRecord};
use crate::error::{Error, Result};
use crate::gaussian::{
    condition_heterodyne, condition_homodyne, entropy_h, standard_form_spectrum,
    symplectic_eigenvalues, CovMatrix, Quadrature, SymplecticSpectrum,
};
use crate::optimize::bisect;

/// Planck constant (J s).
pub const PLANCK: f64 = 6.626_070_15e-34;
/// Boltzmann constant (J/K).
pub const BOLTZMANN: f64 = 1.380_649e-23;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Detection {
    Homodyne,
    Heterodyne,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Direction {
    Direct,
    Reverse,
}

/// Protocol parameters. `v_th = 0` is the coherent-state protocol.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OneWaySpec {
    pub detection: Detection,
    pub direction: Direction,
    pub v_m: f64,
    pub v_th: f64,
    pub xi: f64,
}

impl OneWaySpec {
    pub fn new(
        detection: Detection,
        direction: Direction,
        v_m: f64,
        v_th: f64,
        xi: f64,
    ) -> Result<Self> {
        let s = Self {
            detection,
            direction,
            v_m,
            v_th,
            xi,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.v_m >= 0.0) || !self.v_m.is_finite() {
            return Err(Error::Parameter(format!("V_M = {} must be ≥ 0", self.v_m)));
        }
        if !(self.v_th >= 0.0) || !self.v_th.is_finite() {
            return Err(Error::Parameter(format!(
                "V_th = {} must be ≥ 0",
                self.v_th
            )));
        }
        if !(0.0..=1.0).contains(&self.xi) {
            return Err(Error::Parameter(format!("ξ = {} outside [0, 1]", self.xi)));
        }
        Ok(())
    }

    /// EPR-equivalent variance `V_A = V_M + V_th + 1`.
    pub fn v_a(&self) -> f64 {
        self.v_m + self.v_th + 1.0
    }

    pub fn with_v_m(mut self, v_m: f64) -> Self {
        self.v_m = v_m;
        self
    }
}

/// Thermal-loss channel: transmissivity `τ ∈ (0, 1]` and thermal variance `ω ≥ 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossyChannel {
    pub tau: f64,
    pub omega: f64,
}

impl LossyChannel {
    pub fn new(tau: f64, omega: f64) -> Result<Self> {
        if !(tau >= 0.0 && tau <= 1.0) {
            return Err(Error::Parameter(format!("τ = {tau} outside [0, 1]")));
        }
        if !(omega >= 1.0) || !omega.is_finite() {
            return Err(Error::Parameter(format!("ω = {omega} must be ≥ 1")));
        }
        Ok(Self { tau, omega })
    }

    /// Channel with input-referred excess noise `ε`: `ω = 1 + τε/(1−τ)`.
    pub fn from_excess_noise(tau: f64, eps: f64) -> Result<Self> {
        if !(tau > 0.0 && tau < 1.0) {
            return Err(Error::Parameter(format!(
                "excess-noise parametrization needs 0 < τ < 1, got {tau}"
            )));
        }
        if !(eps >= 0.0) {
            return Err(Error::Parameter(format!("ε = {eps} must be ≥ 0")));
        }
        Self::new(tau, 1.0 + tau * eps / (1.0 - tau))
    }

    /// Channel from an excess-noise variance `V_ε = (1−τ)(ω−1)`.
    pub fn from_excess_variance(tau: f64, v_eps: f64) -> Result<Self> {
        if !(tau >= 0.0 && tau < 1.0) {
            return Err(Error::Parameter(format!("need 0 ≤ τ < 1, got {tau}")));
        }
        Self::new(tau, 1.0 + v_eps.max(0.0) / (1.0 - tau))
    }

    /// Input-referred excess noise `ε = (1−τ)(ω−1)/τ`.
    pub fn excess_noise(&self) -> f64 {
        (1.0 - self.tau) * (self.omega - 1.0) / self.tau
    }

    /// Excess-noise variance `V_ε = τε = (1−τ)(ω−1)`.
    pub fn excess_variance(&self) -> f64 {
        (1.0 - self.tau) * (self.omega - 1.0)
    }

    /// Variance of the added noise on Bob's quadrature: `1 + τV_th + V_ε`.
    pub fn noise_variance(&self, v_th: f64) -> f64 {
        1.0 + self.tau * v_th + self.excess_variance()
    }
}

/// Mutual information between Alice and Bob (bits per use).
pub fn mutual_info_oneway(spec: &OneWaySpec, ch: &LossyChannel) -> f64 {
    let t = ch.tau;
    let base = t * (spec.v_th + 1.0) + (1.0 - t) * ch.omega;
    let full = base + t * spec.v_m;
    match spec.detection {
        Detection::Homodyne => 0.5 * (full / base).log2(),
        // two quadratures, each ½ log₂ of the same ratio
        Detection::Heterodyne => 2.0 * 0.5 * ((full + 1.0) / (base + 1.0)).log2(),
    }
}

fn standard_form(a: f64, b: f64, c: f64) -> DMatrix<f64> {
    DMatrix::from_row_slice(
        4,
        4,
        &[
            a, 0.0, c, 0.0, //
            0.0, a, 0.0, -c, //
            c, 0.0, b, 0.0, //
            0.0, -c, 0.0, b,
        ],
    )
}

/// Entries of Eve's averaged `(E', e)` state `[[V_E' I, c Z], [c Z, ω I]]`.
fn eve_average_entries(spec: &OneWaySpec, ch: &LossyChannel) -> (f64, f64, f64) {
    let t = ch.tau;
    let a = (1.0 - t) * spec.v_a() + t * ch.omega;
    let c = (t * (ch.omega * ch.omega - 1.0)).sqrt();
    (a, ch.omega, c)
}

/// Three-mode CM of `(E', e, B)` averaged over Alice's ensemble.
pub fn eve_bob_cm(spec: &OneWaySpec, ch: &LossyChannel) -> CovMatrix {
    let t = ch.tau;
    let w = ch.omega;
    let va = spec.v_a();
    let (ve, _, c) = eve_average_entries(spec, ch);
    let vb = t * va + (1.0 - t) * w;
    let d_eb = (t * (1.0 - t)).sqrt() * (w - va);
    let d_b = ((1.0 - t) * (w * w - 1.0)).sqrt();
    #[rustfmt::skip]
    let m = DMatrix::from_row_slice(6, 6, &[
        ve,   0.0,  c,    0.0,  d_eb, 0.0,
        0.0,  ve,   0.0,  -c,   0.0,  d_eb,
        c,    0.0,  w,    0.0,  d_b,  0.0,
        0.0,  -c,   0.0,  w,    0.0,  -d_b,
        d_eb, 0.0,  d_b,  0.0,  vb,   0.0,
        0.0,  d_eb, 0.0,  -d_b, 0.0,  vb,
    ]);
    CovMatrix::from_symmetric(m)
        .with_labels(["E'", "e", "B"])
        .expect("three labels")
}

/// Eve's averaged and conditional `(E', e)` covariance matrices.
///
/// The conditional state depends on which party's variable the key is built
/// from: Alice's quadrature (direct) or Bob's outcome (reverse).
pub fn eve_cms_oneway(spec: &OneWaySpec, ch: &LossyChannel) -> Result<(CovMatrix, CovMatrix)> {
    let (a, b, c) = eve_average_entries(spec, ch);
    let average = CovMatrix::from_symmetric(standard_form(a, b, c));
    let t = ch.tau;
    let w = ch.omega;
    let conditional = match spec.direction {
        Direction::Direct => {
            // Alice's quadrature fixed: E' loses the modulation on that quadrature.
            let known = (1.0 - t) * (spec.v_th + 1.0) + t * w;
            let mut m = standard_form(known, b, c);
            if spec.detection == Detection::Homodyne {
                m[(1, 1)] = a;
            }
            CovMatrix::from_symmetric(m)
        }
        Direction::Reverse => {
            // A − C C^T/k expanded so that no O(V_A) terms cancel; k is Bob's
            // measured variance (plus one shot-noise unit for heterodyne).
            let va = spec.v_a();
            let het = if spec.detection == Detection::Heterodyne { 1.0 } else { 0.0 };
            let k = t * va + (1.0 - t) * w + het;
            let a_c = (va * w + het * ((1.0 - t) * va + t * w)) / k;
            let b_c = (t * w * va + het * w + 1.0 - t) / k;
            let c_c = c * (va + het) / k;
            match spec.detection {
                Detection::Homodyne => {
                    let mut m = standard_form(a, b, c);
                    m[(0, 0)] = a_c;
                    m[(2, 2)] = b_c;
                    m[(0, 2)] = c_c;
                    m[(2, 0)] = c_c;
                    CovMatrix::from_symmetric(m)
                }
                Detection::Heterodyne => CovMatrix::from_symmetric(standard_form(a_c, b_c, c_c)),
            }
        }
    };
    let labels = ["E'", "e"];
    let average = average.with_labels(labels)?;
    let conditional = conditional.with_labels(labels)?;
    for cm in [&average, &conditional] {
        cm.validate().map_err(|e| {
            Error::InvalidState(format!("Eve's covariance matrix is unphysical: {e}"))
        })?;
    }
    Ok((average, conditional))
}

/// Reverse-reconciliation conditional built generically, by measuring B in
/// the three-mode `(E', e, B)` state. Used to cross-check the closed forms.
pub fn eve_conditional_generic(spec: &OneWaySpec, ch: &LossyChannel) -> Result<CovMatrix> {
    let full = eve_bob_cm(spec, ch);
    match spec.detection {
        Detection::Homodyne => condition_homodyne(&full, 2, Quadrature::Q),
        Detection::Heterodyne => condition_heterodyne(&full, 2),
    }
}

/// Closed-form spectrum of Eve's averaged state.
pub fn eve_average_spectrum(spec: &OneWaySpec, ch: &LossyChannel) -> Result<SymplecticSpectrum> {
    let (a, b, c) = eve_average_entries(spec, ch);
    standard_form_spectrum(a, b, c)
}

struct Holevo {
    value: f64,
    average: SymplecticSpectrum,
    conditional: SymplecticSpectrum,
}

fn holevo_parts(spec: &OneWaySpec, ch: &LossyChannel) -> Result<Holevo> {
    if ch.tau == 1.0 {
        // Eve's modes decouple from the signal.
        let one = SymplecticSpectrum::new(vec![1.0, 1.0])?;
        return Ok(Holevo {
            value: 0.0,
            average: one.clone(),
            conditional: one,
        });
    }
    let (avg, cond) = eve_cms_oneway(spec, ch)?;
    let average = symplectic_eigenvalues(&avg)?;
    let conditional = symplectic_eigenvalues(&cond)?;
    Ok(Holevo {
        value: average.entropy()? - conditional.entropy()?,
        average,
        conditional,
    })
}

/// Eve's Holevo information `S(E) − S(E|x)` (bits per use).
pub fn holevo_oneway(spec: &OneWaySpec, ch: &LossyChannel) -> Result<f64> {
    Ok(holevo_parts(spec, ch)?.value)
}

/// Asymptotic key rate `ξ I_AB − I_E` (signed).
pub fn keyrate_oneway(spec: &OneWaySpec, ch: &LossyChannel) -> Result<KeyRateBreakdown> {
    spec.validate()?;
    let i_ab = mutual_info_oneway(spec, ch);
    let h = holevo_parts(spec, ch)?;
    Ok(KeyRateBreakdown::new(
        spec.xi,
        i_ab,
        h.value,
        vec![
            SpectrumRecord::new("eve_average", &h.average),
            SpectrumRecord::new("eve_conditional", &h.conditional),
        ],
    ))
}

/// Detection × reconciliation variant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Variant {
    pub detection: Detection,
    pub direction: Direction,
}

impl Variant {
    pub const DR_HOM: Self = Self::new(Detection::Homodyne, Direction::Direct);
    pub const DR_HET: Self = Self::new(Detection::Heterodyne, Direction::Direct);
    pub const RR_HOM: Self = Self::new(Detection::Homodyne, Direction::Reverse);
    pub const RR_HET: Self = Self::new(Detection::Heterodyne, Direction::Reverse);
    pub const ALL: [Self; 4] = [Self::DR_HOM, Self::DR_HET, Self::RR_HOM, Self::RR_HET];

    pub const fn new(detection: Detection, direction: Direction) -> Self {
        Self {
            detection,
            direction,
        }
    }

    pub fn name(&self) -> &'static str {
        match (self.direction, self.detection) {
            (Direction::Direct, Detection::Homodyne) => "dr-hom",
            (Direction::Direct, Detection::Heterodyne) => "dr-het",
            (Direction::Reverse, Detection::Homodyne) => "rr-hom",
            (Direction::Reverse, Detection::Heterodyne) => "rr-het",
        }
    }
}

fn h(x: f64) -> f64 {
    entropy_h(x.max(1.0)).expect("argument clamped to ≥ 1")
}

/// Coherent-state rate in the limit `V_M → ∞` with `ξ = 1`.
///
/// At `τ = 1` the rate diverges (`+∞`); at `τ = 0` it is `−∞`.
pub fn keyrate_infinite_modulation(variant: Variant, tau: f64, omega: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&tau) {
        return Err(Error::Parameter(format!("τ = {tau} outside [0, 1]")));
    }
    if !(omega >= 1.0) {
        return Err(Error::Parameter(format!("ω = {omega} must be ≥ 1")));
    }
    if tau == 1.0 {
        return Ok(f64::INFINITY);
    }
    if tau == 0.0 {
        return Ok(f64::NEG_INFINITY);
    }
    let t = tau;
    let w = omega;
    let lam = t + (1.0 - t) * w; // Bob's output variance without modulation
    let e = std::f64::consts::E;
    Ok(match (variant.direction, variant.detection) {
        (Direction::Direct, Detection::Homodyne) => {
            let ratio = t / (1.0 - t) * (t * w + 1.0 - t) / lam;
            0.5 * ratio.log2() + h((lam * w / (t * w + 1.0 - t)).sqrt()) - h(w)
        }
        (Direction::Direct, Detection::Heterodyne) => {
            (2.0 * t / (e * (1.0 - t) * (lam + 1.0))).log2() + h(lam) - h(w)
        }
        (Direction::Reverse, Detection::Homodyne) => 0.5 * (w / ((1.0 - t) * lam)).log2() - h(w),
        (Direction::Reverse, Detection::Heterodyne) => {
            (2.0 * t / (e * (1.0 - t) * (lam + 1.0))).log2() + h(((1.0 - t) * w + 1.0) / t) - h(w)
        }
    })
}

/// Result of a root search on a bracket.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Threshold {
    pub value: f64,
    /// `false` when the rate had no sign change and an endpoint was returned.
    pub bracketed: bool,
}

/// Largest excess noise `ε` with nonnegative rate at transmissivity `τ < 1`.
pub fn security_threshold(spec: &OneWaySpec, tau: f64, eps_hi: f64) -> Result<Threshold> {
    if !(tau > 0.0 && tau < 1.0) {
        return Err(Error::Parameter(format!(
            "threshold needs 0 < τ < 1, got {tau}"
        )));
    }
    let rate = |eps: f64| -> f64 {
        LossyChannel::from_excess_noise(tau, eps)
            .and_then(|ch| keyrate_oneway(spec, &ch))
            .map(|b| b.rate)
            .unwrap_or(f64::NAN)
    };
    let r0 = rate(0.0);
    if !(r0 > 0.0) {
        return Ok(Threshold {
            value: 0.0,
            bracketed: r0 <= 0.0,
        });
    }
    if rate(eps_hi) > 0.0 {
        return Ok(Threshold {
            value: eps_hi,
            bracketed: false,
        });
    }
    let root = bisect(rate, 0.0, eps_hi, 1e-13, 1e-10)?;
    Ok(Threshold {
        value: root.x,
        bracketed: true,
    })
}

/// Smallest transmissivity with positive rate, where the channel noise may
/// depend on `τ`: the lower edge of the secure interval that reaches `τ → 1`.
/// Returns `None` when the rate is nonpositive even near `τ = 1`.
pub fn min_transmissivity<F>(spec: &OneWaySpec, omega_of_tau: F) -> Result<Option<f64>>
where
    F: Fn(f64) -> f64,
{
    // Failed evaluations count as insecure.
    let rate = |t: f64| -> f64 {
        LossyChannel::new(t, omega_of_tau(t))
            .and_then(|ch| keyrate_oneway(spec, &ch))
            .map(|b| b.rate)
            .unwrap_or(f64::NEG_INFINITY)
    };
    const LO: f64 = 1e-9;
    // Walk down from τ = 1 on a grid uniform in ln(1 − τ).
    let (g_hi, g_lo) = (1e-12_f64.ln(), (1.0 - LO).ln());
    let n = 240;
    let mut secure = None;
    for i in 0..=n {
        let t = 1.0 - (g_hi + (g_lo - g_hi) * i as f64 / n as f64).exp();
        if rate(t) > 0.0 {
            secure = Some(t);
            continue;
        }
        return Ok(match secure {
            None => None,
            Some(hi) => Some(bisect(rate, t, hi, 1e-14, 0.0)?.x),
        });
    }
    Ok(secure.map(|_| LO))
}

/// Bose occupation `n̄ = 1/(exp(hf/k_B T) − 1)`; 0 when the exponent overflows.
pub fn thermal_photons_from_frequency(f: f64, temperature: f64) -> Result<f64> {
    if !(f > 0.0) || !(temperature > 0.0) {
        return Err(Error::Parameter(format!(
            "frequency {f} and temperature {temperature} must be positive"
        )));
    }
    let x = PLANCK * f / (BOLTZMANN * temperature);
    if x > 700.0 {
        return Ok(0.0);
    }
    Ok(1.0 / x.exp_m1())
}
