//! Continuous-variable measurement-device-independent protocols: the two-user
//! relay and the symmetric three-user star.
//!
//! Each user sends one half of a TMSV of variance `μ = V_M + 1`. The relay
//! performs a CV Bell detection and broadcasts the outcome `γ`. Eve attacks
//! both links with a correlated two-mode Gaussian state
//! `[[ω_A I, G], [G, ω_B I]]`, `G = diag(g, g′)`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::breakdown::{KeyRateBreakdown, SpectrumRecord};
use crate::error::{Error, Result};
use crate::gaussian::{
    apply_symplectic, beamsplitter, condition_heterodyne, condition_homodyne, direct_sum_cm,
    purify, symplectic_eigenvalues, tmsv_cm, von_neumann_entropy, CovMatrix, Quadrature,
    SymplecticMatrix,
};
use crate::optimize::golden_max;

/// Two-link correlated Gaussian attack.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MdiAttack {
    pub tau_a: f64,
    pub tau_b: f64,
    pub omega_a: f64,
    pub omega_b: f64,
    pub g: f64,
    pub g_p: f64,
}

/// Largest correlation compatible with the thermal variances:
/// `min[√((ω_A−1)(ω_B+1)), √((ω_B−1)(ω_A+1))]`.
pub fn max_correlation(omega_a: f64, omega_b: f64) -> f64 {
    ((omega_a - 1.0) * (omega_b + 1.0))
        .sqrt()
        .min(((omega_b - 1.0) * (omega_a + 1.0)).sqrt())
}

fn omega_from_excess(tau: f64, eps: f64) -> Result<f64> {
    if !(tau > 0.0 && tau <= 1.0) {
        return Err(Error::Parameter(format!("τ = {tau} outside (0, 1]")));
    }
    if !(eps >= 0.0) {
        return Err(Error::Parameter(format!("ε = {eps} must be ≥ 0")));
    }
    Ok(if tau == 1.0 {
        1.0
    } else {
        1.0 + tau * eps / (1.0 - tau)
    })
}

impl MdiAttack {
    pub fn new(
        tau_a: f64,
        tau_b: f64,
        omega_a: f64,
        omega_b: f64,
        g: f64,
        g_p: f64,
    ) -> Result<Self> {
        let a = Self {
            tau_a,
            tau_b,
            omega_a,
            omega_b,
            g,
            g_p,
        };
        a.validate()?;
        Ok(a)
    }

    /// The optimal two-mode attack: `g = −g′ = max_correlation(ω_A, ω_B)`.
    pub fn optimal(tau_a: f64, tau_b: f64, omega_a: f64, omega_b: f64) -> Result<Self> {
        if !(omega_a >= 1.0 && omega_b >= 1.0) {
            return Err(Error::Parameter("thermal variances must be ≥ 1".into()));
        }
        let g = max_correlation(omega_a, omega_b);
        Self::new(tau_a, tau_b, omega_a, omega_b, g, -g)
    }

    /// Optimal attack with per-link excess noise `ε_i`, `ω_i = 1 + τ_i ε_i/(1−τ_i)`.
    pub fn optimal_from_excess(tau_a: f64, tau_b: f64, eps_a: f64, eps_b: f64) -> Result<Self> {
        Self::optimal(
            tau_a,
            tau_b,
            omega_from_excess(tau_a, eps_a)?,
            omega_from_excess(tau_b, eps_b)?,
        )
    }

    /// Two independent entangling cloners (`g = g′ = 0`).
    pub fn independent(tau_a: f64, tau_b: f64, omega_a: f64, omega_b: f64) -> Result<Self> {
        Self::new(tau_a, tau_b, omega_a, omega_b, 0.0, 0.0)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, t) in [("τ_A", self.tau_a), ("τ_B", self.tau_b)] {
            if !(t > 0.0 && t <= 1.0) {
                return Err(Error::Parameter(format!("{name} = {t} outside (0, 1]")));
            }
        }
        if !(self.omega_a >= 1.0 && self.omega_b >= 1.0) {
            return Err(Error::Parameter("thermal variances must be ≥ 1".into()));
        }
        if !self.g.is_finite() || !self.g_p.is_finite() {
            return Err(Error::Parameter("correlations must be finite".into()));
        }
        self.eve_cm().validate().map_err(|e| {
            Error::Parameter(format!("attack covariance matrix is unphysical: {e}"))
        })?;
        Ok(())
    }

    /// Eve's two-mode state before the links, modes `(E1, E2)`.
    pub fn eve_cm(&self) -> CovMatrix {
        #[rustfmt::skip]
        let m = DMatrix::from_row_slice(4, 4, &[
            self.omega_a, 0.0, self.g, 0.0,
            0.0, self.omega_a, 0.0, self.g_p,
            self.g, 0.0, self.omega_b, 0.0,
            0.0, self.g_p, 0.0, self.omega_b,
        ]);
        CovMatrix::from_symmetric(m)
    }

    fn mix(&self) -> f64 {
        ((1.0 - self.tau_a) * (1.0 - self.tau_b)).sqrt()
    }

    /// `λ = (1−τ_A)ω_A + (1−τ_B)ω_B − 2g√((1−τ_A)(1−τ_B))`.
    pub fn lambda(&self) -> f64 {
        (1.0 - self.tau_a) * self.omega_a + (1.0 - self.tau_b) * self.omega_b
            - 2.0 * self.g * self.mix()
    }

    /// `λ′` with `+2g′`.
    pub fn lambda_p(&self) -> f64 {
        (1.0 - self.tau_a) * self.omega_a
            + (1.0 - self.tau_b) * self.omega_b
            + 2.0 * self.g_p * self.mix()
    }

    /// Reduced parameters that fully determine the relay-conditioned state.
    pub fn reduced(&self) -> MdiReduced {
        MdiReduced {
            tau_a: self.tau_a,
            tau_b: self.tau_b,
            lambda: self.lambda(),
            lambda_p: self.lambda_p(),
        }
    }
}

/// `(τ_A, τ_B, λ, λ′)`: the conditional state only depends on these.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MdiReduced {
    pub tau_a: f64,
    pub tau_b: f64,
    pub lambda: f64,
    pub lambda_p: f64,
}

impl MdiReduced {
    /// Rebuilds `λ, λ′` from per-quadrature excess noises:
    /// the relay noise variance is `V_N = 1 + V_ε = (τ_A + τ_B + λ)/2`.
    pub fn from_excess_variances(tau_a: f64, tau_b: f64, v_q_eps: f64, v_p_eps: f64) -> Self {
        Self {
            tau_a,
            tau_b,
            lambda: 2.0 * (1.0 + v_q_eps) - tau_a - tau_b,
            lambda_p: 2.0 * (1.0 + v_p_eps) - tau_a - tau_b,
        }
    }

    fn thetas(&self, mu: f64) -> (f64, f64) {
        let s = (self.tau_a + self.tau_b) * mu;
        (s + self.lambda, s + self.lambda_p)
    }
}

fn check_mu(mu: f64) -> Result<()> {
    if !(mu >= 1.0) || !mu.is_finite() {
        return Err(Error::Parameter(format!("μ = {mu} must be ≥ 1")));
    }
    Ok(())
}

/// Closed-form CM of Alice's and Bob's kept modes `(a, b)` given `γ`.
pub fn cm_ab_given_gamma_reduced(mu: f64, r: &MdiReduced) -> Result<CovMatrix> {
    check_mu(mu)?;
    let (th, thp) = r.thetas(mu);
    if !(th > 0.0 && thp > 0.0) {
        return Err(Error::Parameter(
            "relay noise parameters are unphysical".into(),
        ));
    }
    let k = mu * mu - 1.0;
    let (ta, tb) = (r.tau_a, r.tau_b);
    let s = (ta * tb).sqrt();
    #[rustfmt::skip]
    let corr = DMatrix::from_row_slice(4, 4, &[
        ta / th, 0.0, -s / th, 0.0,
        0.0, ta / thp, 0.0, s / thp,
        -s / th, 0.0, tb / th, 0.0,
        0.0, s / thp, 0.0, tb / thp,
    ]);
    let m = DMatrix::identity(4, 4) * mu - corr * k;
    let cm = CovMatrix::from_symmetric(m).with_labels(["a", "b"])?;
    cm.validate()
        .map_err(|e| Error::Parameter(format!("conditional state is unphysical: {e}")))?;
    Ok(cm)
}

pub fn cm_ab_given_gamma(mu: f64, attack: &MdiAttack) -> Result<CovMatrix> {
    cm_ab_given_gamma_reduced(mu, &attack.reduced())
}

/// Closed-form CM of Bob's mode after Alice's heterodyne:
/// `diag(μ − τ_B(μ²−1)/(τ_A + τ_B μ + λ), μ − τ_B(μ²−1)/(τ_A + τ_B μ + λ′))`.
pub fn cm_b_given_gamma_alpha_reduced(mu: f64, r: &MdiReduced) -> Result<CovMatrix> {
    check_mu(mu)?;
    let k = mu * mu - 1.0;
    let dq = r.tau_a + r.tau_b * mu + r.lambda;
    let dp = r.tau_a + r.tau_b * mu + r.lambda_p;
    if !(dq > 0.0 && dp > 0.0) {
        return Err(Error::Parameter(
            "relay noise parameters are unphysical".into(),
        ));
    }
    let m = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![
        mu - r.tau_b * k / dq,
        mu - r.tau_b * k / dp,
    ]));
    Ok(CovMatrix::from_symmetric(m).with_labels(["b"])?)
}

pub fn cm_b_given_gamma_alpha(mu: f64, attack: &MdiAttack) -> Result<CovMatrix> {
    cm_b_given_gamma_alpha_reduced(mu, &attack.reduced())
}

/// Mode indices of the two-user circuit.
mod idx {
    pub const A_SENT: usize = 1;
    pub const E1: usize = 2;
    pub const E2: usize = 3;
    pub const B_SENT: usize = 4;
}

/// Full six-mode state `(a, A′′, E1′, E2′, B′′, b)` just before the relay's
/// homodynes, built with symplectic primitives.
fn relay_input_state(mu: f64, attack: &MdiAttack) -> Result<CovMatrix> {
    let tmsv = tmsv_cm(mu)?;
    let start = direct_sum_cm(&[&tmsv, &attack.eve_cm(), &tmsv]);
    let n = 6;
    let link_a = beamsplitter(attack.tau_a)?.embed(n, &[idx::A_SENT, idx::E1])?;
    let link_b = beamsplitter(attack.tau_b)?
        .transpose()
        .embed(n, &[idx::E2, idx::B_SENT])?;
    let bell = beamsplitter(0.5)?.embed(n, &[idx::A_SENT, idx::B_SENT])?;
    let s = bell.compose(&link_b.compose(&link_a)?)?;
    apply_symplectic(&start, &s)
}

/// Relay measurement: `q` of `(−A′ + B′)/√2` and `p` of `(A′ + B′)/√2`.
fn bell_detect(v: &CovMatrix, plus: usize, minus: usize) -> Result<CovMatrix> {
    let after_q = condition_homodyne(v, minus, Quadrature::Q)?;
    let plus = if plus > minus { plus - 1 } else { plus };
    condition_homodyne(&after_q, plus, Quadrature::P)
}

/// `V_{ab|γ}` obtained by simulating the relay circuit.
pub fn cm_ab_given_gamma_circuit(mu: f64, attack: &MdiAttack) -> Result<CovMatrix> {
    check_mu(mu)?;
    let v = relay_input_state(mu, attack)?;
    let cond = bell_detect(&v, idx::A_SENT, idx::B_SENT)?;
    // remaining: a, E1, E2, b
    cond.reduce(&[0, 3])?.with_labels(["a", "b"])
}

/// `V_{b|γα}` by heterodyning `a` in the circuit-derived state.
pub fn cm_b_given_gamma_alpha_circuit(mu: f64, attack: &MdiAttack) -> Result<CovMatrix> {
    condition_heterodyne(&cm_ab_given_gamma_circuit(mu, attack)?, 0)
}

/// Entropies seen from Eve's side: `(S(E|γ), S(E|γα))`, computed from an
/// explicit purification of her attack state.
pub fn eve_side_entropies(mu: f64, attack: &MdiAttack) -> Result<(f64, f64)> {
    check_mu(mu)?;
    let tmsv = tmsv_cm(mu)?;
    let eve = purify(&attack.eve_cm())?; // E1, E2, F1, F2
    let start = direct_sum_cm(&[&tmsv, &eve, &tmsv]); // a A E1 E2 F1 F2 B b
    let n = 8;
    let (a_sent, e1, e2, b_sent) = (1, 2, 3, 6);
    let link_a = beamsplitter(attack.tau_a)?.embed(n, &[a_sent, e1])?;
    let link_b = beamsplitter(attack.tau_b)?
        .transpose()
        .embed(n, &[e2, b_sent])?;
    let bell = beamsplitter(0.5)?.embed(n, &[a_sent, b_sent])?;
    let s = bell.compose(&link_b.compose(&link_a)?)?;
    let v = apply_symplectic(&start, &s)?;
    let cond = bell_detect(&v, a_sent, b_sent)?; // a E1 E2 F1 F2 b
    let s_gamma = von_neumann_entropy(&cond.reduce(&[1, 2, 3, 4])?)?;
    let after_a = condition_heterodyne(&cond, 0)?; // E1 E2 F1 F2 b
    let s_alpha = von_neumann_entropy(&after_a.reduce(&[0, 1, 2, 3])?)?;
    Ok((s_gamma, s_alpha))
}

fn sigma_term(v: &CovMatrix) -> f64 {
    let m = v.matrix();
    1.0 + m.determinant() + m.trace()
}

/// `I_AB = ½ log₂ Σ`, `Σ = (1 + det V_{b|γ} + tr V_{b|γ}) / (1 + det V_{b|γα} + tr V_{b|γα})`.
pub fn mutual_info_mdi_reduced(mu: f64, r: &MdiReduced) -> Result<f64> {
    let ab = cm_ab_given_gamma_reduced(mu, r)?;
    let b = ab.reduce(&[1])?;
    let b_alpha = cm_b_given_gamma_alpha_reduced(mu, r)?;
    Ok(0.5 * (sigma_term(&b) / sigma_term(&b_alpha)).log2())
}

pub fn mutual_info_mdi(mu: f64, attack: &MdiAttack) -> Result<f64> {
    mutual_info_mdi_reduced(mu, &attack.reduced())
}

/// `I_E = S(V_{ab|γ}) − S(V_{b|γα})`.
pub fn holevo_mdi_reduced(mu: f64, r: &MdiReduced) -> Result<f64> {
    let ab = cm_ab_given_gamma_reduced(mu, r)?;
    let b_alpha = cm_b_given_gamma_alpha_reduced(mu, r)?;
    Ok(von_neumann_entropy(&ab)? - von_neumann_entropy(&b_alpha)?)
}

pub fn holevo_mdi(mu: f64, attack: &MdiAttack) -> Result<f64> {
    holevo_mdi_reduced(mu, &attack.reduced())
}

/// `ξ I_AB − I_E` from reduced parameters.
pub fn keyrate_mdi_reduced(xi: f64, mu: f64, r: &MdiReduced) -> Result<KeyRateBreakdown> {
    if !(0.0..=1.0).contains(&xi) {
        return Err(Error::Parameter(format!("ξ = {xi} outside [0, 1]")));
    }
    let ab = cm_ab_given_gamma_reduced(mu, r)?;
    let b_alpha = cm_b_given_gamma_alpha_reduced(mu, r)?;
    let sab = symplectic_eigenvalues(&ab)?;
    let sb = symplectic_eigenvalues(&b_alpha)?;
    let i_ab = 0.5 * (sigma_term(&ab.reduce(&[1])?) / sigma_term(&b_alpha)).log2();
    let i_e = sab.entropy()? - sb.entropy()?;
    Ok(KeyRateBreakdown::new(
        xi,
        i_ab,
        i_e,
        vec![
            SpectrumRecord::new("ab_given_gamma", &sab),
            SpectrumRecord::new("b_given_gamma_alpha", &sb),
        ],
    ))
}

pub fn keyrate_mdi(xi: f64, mu: f64, attack: &MdiAttack) -> Result<KeyRateBreakdown> {
    keyrate_mdi_reduced(xi, mu, &attack.reduced())
}

/// Bracket for the `μ` search, in `ln μ`.
pub const MU_SEARCH: (f64, f64) = (0.009_950_330_853_168_083, 13.815_510_557_964_274);

/// Maximizes `rate(μ)` by golden-section search on `ln μ` over `[lo, hi]`.
pub fn optimize_mu<F>(rate: F, mu_lo: f64, mu_hi: f64) -> (f64, f64)
where
    F: Fn(f64) -> f64,
{
    let m = golden_max(|lm| rate(lm.exp()), mu_lo.ln(), mu_hi.ln(), 1e-4);
    (m.x.exp(), m.value)
}

/// Rate maximized over `μ ∈ [1.01, 10⁶]`.
pub fn keyrate_mdi_optimized(xi: f64, attack: &MdiAttack) -> Result<(f64, KeyRateBreakdown)> {
    attack.validate()?;
    let (mu, _) = optimize_mu(
        |mu| {
            keyrate_mdi(xi, mu, attack)
                .map(|b| b.rate)
                .unwrap_or(f64::NEG_INFINITY)
        },
        MU_SEARCH.0.exp(),
        MU_SEARCH.1.exp(),
    );
    Ok((mu, keyrate_mdi(xi, mu, attack)?))
}

/// Three-user star: link `i` has transmissivity `η_i` and an independent
/// entangling cloner of variance `ω`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StarAttack {
    pub eta: [f64; 3],
    pub omega: f64,
}

impl StarAttack {
    /// Identical links.
    pub fn new(eta: f64, omega: f64) -> Result<Self> {
        Self::links([eta; 3], omega)
    }

    pub fn links(eta: [f64; 3], omega: f64) -> Result<Self> {
        for e in eta {
            if !(e > 0.0 && e <= 1.0) {
                return Err(Error::Parameter(format!("η = {e} outside (0, 1]")));
            }
        }
        if !(omega >= 1.0) {
            return Err(Error::Parameter(format!("ω = {omega} must be ≥ 1")));
        }
        Ok(Self { eta, omega })
    }
}

/// Conditional CM `V_{abc|γ}` of the three users' kept modes after the relay.
///
/// Relay: `B(1/2)` on `(A′, B′)` giving `R1±`; `q` homodyne on `R1−`;
/// `B(2/3)` on `(R1+, C′)` giving `R2+ = (A′+B′+C′)/√3` and `R2−`;
/// `q` homodyne on `R2−`, `p` homodyne on `R2+`.
pub fn cm_abc_given_gamma(mu: f64, attack: &StarAttack) -> Result<CovMatrix> {
    check_mu(mu)?;
    let tmsv = tmsv_cm(mu)?;
    let thermal = CovMatrix::thermal(attack.omega)?;
    // a A b B c C EA EB EC
    let start = direct_sum_cm(&[&tmsv, &tmsv, &tmsv, &thermal, &thermal, &thermal]);
    let n = 9;
    let mut s = SymplecticMatrix::identity(n);
    for (eta, (sent, env)) in attack.eta.into_iter().zip([(1, 6), (3, 7), (5, 8)]) {
        s = beamsplitter(eta)?.embed(n, &[sent, env])?.compose(&s)?;
    }
    s = beamsplitter(0.5)?.embed(n, &[1, 3])?.compose(&s)?; // R1+ at 1, R1− at 3
    s = beamsplitter(2.0 / 3.0)?.embed(n, &[1, 5])?.compose(&s)?; // R2+ at 1, R2− at 5
    let v = apply_symplectic(&start, &s)?.reduce(&[0, 1, 2, 3, 4, 5])?;
    // a R2+ b R1− c R2−
    let v = condition_homodyne(&v, 3, Quadrature::Q)?; // a R2+ b c R2−
    let v = condition_homodyne(&v, 4, Quadrature::Q)?; // a R2+ b c
    let v = condition_homodyne(&v, 1, Quadrature::P)?; // a b c
    v.with_labels(["a", "b", "c"])
}

/// Star-network rate `ξ I_min − I_E`, `I_min = min(I_AB, I_AC)`.
pub fn keyrate_star3(xi: f64, mu: f64, attack: &StarAttack) -> Result<KeyRateBreakdown> {
    if !(0.0..=1.0).contains(&xi) {
        return Err(Error::Parameter(format!("ξ = {xi} outside [0, 1]")));
    }
    let abc = cm_abc_given_gamma(mu, attack)?;
    let bc = condition_heterodyne(&abc, 0)?;
    let (i_ab, i_ac) = star_pair_info(&abc, &bc)?;
    let s_abc = symplectic_eigenvalues(&abc)?;
    let s_bc = symplectic_eigenvalues(&bc)?;
    let i_e = s_abc.entropy()? - s_bc.entropy()?;
    Ok(KeyRateBreakdown::new(
        xi,
        i_ab.min(i_ac),
        i_e,
        vec![
            SpectrumRecord::new("abc_given_gamma", &s_abc),
            SpectrumRecord::new("bc_given_gamma_x1", &s_bc),
        ],
    ))
}

/// Star-network Holevo term alone.
pub fn holevo_star3(mu: f64, attack: &StarAttack) -> Result<f64> {
    let abc = cm_abc_given_gamma(mu, attack)?;
    let bc = condition_heterodyne(&abc, 0)?;
    Ok(von_neumann_entropy(&abc)? - von_neumann_entropy(&bc)?)
}

/// Mutual information pair `(I_AB, I_AC)` of the star network.
pub fn mutual_info_star3(mu: f64, attack: &StarAttack) -> Result<(f64, f64)> {
    let abc = cm_abc_given_gamma(mu, attack)?;
    let bc = condition_heterodyne(&abc, 0)?;
    star_pair_info(&abc, &bc)
}

fn star_pair_info(abc: &CovMatrix, bc: &CovMatrix) -> Result<(f64, f64)> {
    let i_pair = |k: usize| -> Result<f64> {
        let marg = abc.reduce(&[k])?;
        let cond = bc.reduce(&[k - 1])?;
        Ok(0.5 * (sigma_term(&marg) / sigma_term(&cond)).log2())
    };
    Ok((i_pair(1)?, i_pair(2)?))
}

/// Star rate maximized over `μ ∈ [mu_lo, mu_hi]`.
pub fn keyrate_star3_optimized(
    xi: f64,
    attack: &StarAttack,
    mu_lo: f64,
    mu_hi: f64,
) -> Result<(f64, KeyRateBreakdown)> {
    let (mu, _) = optimize_mu(
        |mu| {
            keyrate_star3(xi, mu, attack)
                .map(|b| b.rate)
                .unwrap_or(f64::NEG_INFINITY)
        },
        mu_lo,
        mu_hi,
    );
    Ok((mu, keyrate_star3(xi, mu, attack)?))
}
