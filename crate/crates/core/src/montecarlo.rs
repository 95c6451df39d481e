//! Seeded sampling of the classical Gaussian channel and relay models, the
//! maximum-likelihood estimators the parties compute from them, and Monte
//! Carlo studies of the estimator statistics.
//!
//! Every batch is driven by a `ChaCha20Rng` seeded with `seed_from_u64(seed)`
//! on stream `stream`; trial `i` of a study uses stream `i`. Normal variates
//! come from `rand_distr::StandardNormal` (ziggurat).

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimation::{
    combine_weight, estimator_variances_oneway, relay_noise_variances, relay_tau_variance, zscore,
};
use crate::mdi::MdiAttack;
use crate::oneway::LossyChannel;

/// Generator and normal-variate method, recorded in reports.
pub const RNG_ALGORITHM: &str =
    "ChaCha20Rng::seed_from_u64(seed), stream = trial index; StandardNormal (ziggurat)";

fn rng(seed: u64, stream: u64) -> ChaCha20Rng {
    let mut r = ChaCha20Rng::seed_from_u64(seed);
    r.set_stream(stream);
    r
}

fn normal(r: &mut ChaCha20Rng) -> f64 {
    r.sample(StandardNormal)
}

/// One-way estimation data: modulations `M_i` and Bob's outcomes `B_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct OneWayBatch {
    pub seed: u64,
    pub stream: u64,
    pub v_m: f64,
    pub v_th: f64,
    pub modulation: Vec<f64>,
    pub output: Vec<f64>,
}

/// `M_i ~ N(0, V_M)`, `B_i = √τ M_i + N(0, V_N)`, `V_N = 1 + τV_th + (1−τ)(ω−1)`.
pub fn sample_oneway(
    ch: &LossyChannel,
    v_m: f64,
    v_th: f64,
    m: usize,
    seed: u64,
    stream: u64,
) -> Result<OneWayBatch> {
    if !(v_m >= 0.0) || !(v_th >= 0.0) {
        return Err(Error::Parameter("variances must be ≥ 0".into()));
    }
    let mut r = rng(seed, stream);
    let sm = v_m.sqrt();
    let sn = ch.noise_variance(v_th).sqrt();
    let st = ch.tau.sqrt();
    let mut modulation = Vec::with_capacity(m);
    let mut output = Vec::with_capacity(m);
    for _ in 0..m {
        let x = sm * normal(&mut r);
        let y = st * x + sn * normal(&mut r);
        modulation.push(x);
        output.push(y);
    }
    Ok(OneWayBatch {
        seed,
        stream,
        v_m,
        v_th,
        modulation,
        output,
    })
}

/// MDI estimation data: both users' modulations and the relay outcomes.
#[derive(Debug, Clone, PartialEq)]
pub struct MdiBatch {
    pub seed: u64,
    pub stream: u64,
    pub v_m: f64,
    pub aq: Vec<f64>,
    pub ap: Vec<f64>,
    pub bq: Vec<f64>,
    pub bp: Vec<f64>,
    pub rq: Vec<f64>,
    pub rp: Vec<f64>,
}

/// Lower Cholesky factor `(l11, l21, l22)` of `[[a, c], [c, b]]`.
fn cholesky2(a: f64, b: f64, c: f64) -> Result<(f64, f64, f64)> {
    if !(a > 0.0) {
        return Err(Error::Numeric("attack covariance is not positive".into()));
    }
    let l11 = a.sqrt();
    let l21 = c / l11;
    let rad = b - l21 * l21;
    if rad < -1e-12 * b.abs().max(1.0) {
        return Err(Error::Numeric("attack covariance is not positive".into()));
    }
    Ok((l11, l21, rad.max(0.0).sqrt()))
}

/// Relay outputs
/// `R_Q = (√τ_B B_Q − √τ_A A_Q)/√2 + Q_N`, `R_P = (√τ_B B_P + √τ_A A_P)/√2 + P_N`,
/// with `Q_N`, `P_N` built from vacuum noise and Eve's correlated ancillas.
pub fn sample_mdi(
    attack: &MdiAttack,
    v_m: f64,
    m: usize,
    seed: u64,
    stream: u64,
) -> Result<MdiBatch> {
    attack.validate()?;
    if !(v_m >= 0.0) {
        return Err(Error::Parameter("V_M must be ≥ 0".into()));
    }
    let (ta, tb) = (attack.tau_a, attack.tau_b);
    let (sa, sb) = (ta.sqrt(), tb.sqrt());
    let (ea, eb) = ((1.0 - ta).sqrt(), (1.0 - tb).sqrt());
    let lq = cholesky2(attack.omega_a, attack.omega_b, attack.g)?;
    let lp = cholesky2(attack.omega_a, attack.omega_b, attack.g_p)?;
    let sm = v_m.sqrt();
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let mut r = rng(seed, stream);
    let mut b = MdiBatch {
        seed,
        stream,
        v_m,
        aq: Vec::with_capacity(m),
        ap: Vec::with_capacity(m),
        bq: Vec::with_capacity(m),
        bp: Vec::with_capacity(m),
        rq: Vec::with_capacity(m),
        rp: Vec::with_capacity(m),
    };
    for _ in 0..m {
        let aq = sm * normal(&mut r);
        let ap = sm * normal(&mut r);
        let bq = sm * normal(&mut r);
        let bp = sm * normal(&mut r);
        let (q0a, q0b, p0a, p0b) = (
            normal(&mut r),
            normal(&mut r),
            normal(&mut r),
            normal(&mut r),
        );
        let (u1, u2) = (normal(&mut r), normal(&mut r));
        let (qe1, qe2) = (lq.0 * u1, lq.1 * u1 + lq.2 * u2);
        let (v1, v2) = (normal(&mut r), normal(&mut r));
        let (pe1, pe2) = (lp.0 * v1, lp.1 * v1 + lp.2 * v2);
        let qn = h * (sb * q0b - sa * q0a + eb * qe2 - ea * qe1);
        let pn = h * (sb * p0b + sa * p0a + eb * pe2 + ea * pe1);
        b.rq.push(h * (sb * bq - sa * aq) + qn);
        b.rp.push(h * (sb * bp + sa * ap) + pn);
        b.aq.push(aq);
        b.ap.push(ap);
        b.bq.push(bq);
        b.bp.push(bp);
    }
    Ok(b)
}

fn mean_product(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum::<f64>() / x.len() as f64
}

/// One-way point estimates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OneWayEstimate {
    pub tau: f64,
    pub v_n: f64,
    pub v_eps: f64,
    /// `Ṽ_ε ≥ 0`; negative values are reported, not clamped.
    pub physical: bool,
}

/// `τ̃ = C̃²/V_M²` with `C̃ = (1/m)Σ M_i B_i`;
/// `Ṽ_N = (1/m)Σ(B_i − √τ̃ M_i)²`; `Ṽ_ε = Ṽ_N − τ̃V_th − 1`.
pub fn mle_oneway(batch: &OneWayBatch) -> Result<OneWayEstimate> {
    let m = batch.modulation.len();
    if m < 2 {
        return Err(Error::Parameter(format!(
            "need at least 2 samples, got {m}"
        )));
    }
    if !(batch.v_m > 0.0) {
        return Err(Error::Degenerate(
            "V_M = 0 carries no information on τ".into(),
        ));
    }
    let c = mean_product(&batch.modulation, &batch.output);
    let tau = c * c / (batch.v_m * batch.v_m);
    let st = tau.sqrt();
    let v_n = batch
        .modulation
        .iter()
        .zip(&batch.output)
        .map(|(x, y)| (y - st * x).powi(2))
        .sum::<f64>()
        / m as f64;
    let v_eps = v_n - tau * batch.v_th - 1.0;
    Ok(OneWayEstimate {
        tau,
        v_n,
        v_eps,
        physical: v_eps >= 0.0,
    })
}

/// MDI point estimates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MdiEstimate {
    pub tau_a_q: f64,
    pub tau_a_p: f64,
    pub tau_b_q: f64,
    pub tau_b_p: f64,
    pub tau_a: f64,
    pub tau_b: f64,
    pub v_q_eps: f64,
    pub v_p_eps: f64,
}

/// `τ̃_{A_Q} = 2C̃²_{AR_Q}/V_M²` (and the `P`, `B` analogues), combined with
/// inverse-variance weights evaluated at plug-in estimates; then
/// `Ṽ_{Q,ε} = (1/m)Σ[R_Q − (√τ̃_B B_Q − √τ̃_A A_Q)/√2]² − 1`.
pub fn mle_mdi(batch: &MdiBatch) -> Result<MdiEstimate> {
    let m = batch.aq.len();
    if m < 2 {
        return Err(Error::Parameter(format!(
            "need at least 2 samples, got {m}"
        )));
    }
    let v_m = batch.v_m;
    if !(v_m > 0.0) {
        return Err(Error::Degenerate(
            "V_M = 0 carries no information on τ".into(),
        ));
    }
    let est = |x: &[f64], y: &[f64]| {
        let c = mean_product(x, y);
        2.0 * c * c / (v_m * v_m)
    };
    let tau_a_q = est(&batch.aq, &batch.rq);
    let tau_a_p = est(&batch.ap, &batch.rp);
    let tau_b_q = est(&batch.bq, &batch.rq);
    let tau_b_p = est(&batch.bp, &batch.rp);
    let n = m as f64;
    let var_rq = batch.rq.iter().map(|x| x * x).sum::<f64>() / n;
    let var_rp = batch.rp.iter().map(|x| x * x).sum::<f64>() / n;
    let vqn = (var_rq - 0.5 * (tau_a_q + tau_b_q) * v_m).max(1e-12);
    let vpn = (var_rp - 0.5 * (tau_a_p + tau_b_p) * v_m).max(1e-12);
    let (ta0, tb0) = (0.5 * (tau_a_q + tau_a_p), 0.5 * (tau_b_q + tau_b_p));
    let wa = combine_weight(
        relay_tau_variance(ta0, tb0, vqn, v_m, n),
        relay_tau_variance(ta0, tb0, vpn, v_m, n),
    );
    let wb = combine_weight(
        relay_tau_variance(tb0, ta0, vqn, v_m, n),
        relay_tau_variance(tb0, ta0, vpn, v_m, n),
    );
    let tau_a = wa * tau_a_q + (1.0 - wa) * tau_a_p;
    let tau_b = wb * tau_b_q + (1.0 - wb) * tau_b_p;
    let (sa, sb) = (tau_a.sqrt(), tau_b.sqrt());
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let mut sq = 0.0;
    let mut sp = 0.0;
    for i in 0..m {
        sq += (batch.rq[i] - h * (sb * batch.bq[i] - sa * batch.aq[i])).powi(2);
        sp += (batch.rp[i] - h * (sb * batch.bp[i] + sa * batch.ap[i])).powi(2);
    }
    Ok(MdiEstimate {
        tau_a_q,
        tau_a_p,
        tau_b_q,
        tau_b_p,
        tau_a,
        tau_b,
        v_q_eps: sq / n - 1.0,
        v_p_eps: sp / n - 1.0,
    })
}

/// Sample mean, variance (unbiased) and skewness.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Moments {
    pub mean: f64,
    pub var: f64,
    pub skew: f64,
}

impl Moments {
    pub fn of(x: &[f64]) -> Self {
        let n = x.len() as f64;
        let mean = x.iter().sum::<f64>() / n;
        let m2 = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        let m3 = x.iter().map(|v| (v - mean).powi(3)).sum::<f64>() / n;
        Self {
            mean,
            var: m2 * n / (n - 1.0),
            skew: if m2 > 0.0 { m3 / m2.powf(1.5) } else { 0.0 },
        }
    }

    /// Standard error of the mean.
    pub fn sem(&self, n: usize) -> f64 {
        (self.var / n as f64).sqrt()
    }
}

/// Empirical statistics of the one-way estimators over independent trials.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OneWayStudy {
    pub trials: usize,
    pub tau: Moments,
    pub v_eps: Moments,
}

pub fn study_oneway(
    ch: &LossyChannel,
    v_m: f64,
    v_th: f64,
    m: usize,
    trials: usize,
    seed: u64,
) -> Result<OneWayStudy> {
    let est: Vec<OneWayEstimate> = (0..trials as u64)
        .into_par_iter()
        .map(|t| sample_oneway(ch, v_m, v_th, m, seed, t).and_then(|b| mle_oneway(&b)))
        .collect::<Result<_>>()?;
    let tau: Vec<f64> = est.iter().map(|e| e.tau).collect();
    let v: Vec<f64> = est.iter().map(|e| e.v_eps).collect();
    Ok(OneWayStudy {
        trials,
        tau: Moments::of(&tau),
        v_eps: Moments::of(&v),
    })
}

/// Empirical statistics of the MDI estimators over independent trials.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MdiStudy {
    pub trials: usize,
    pub tau_a: Moments,
    pub tau_b: Moments,
    pub tau_a_q: Moments,
    pub v_q_eps: Moments,
    pub v_p_eps: Moments,
}

pub fn study_mdi(
    attack: &MdiAttack,
    v_m: f64,
    m: usize,
    trials: usize,
    seed: u64,
) -> Result<MdiStudy> {
    let est: Vec<MdiEstimate> = (0..trials as u64)
        .into_par_iter()
        .map(|t| sample_mdi(attack, v_m, m, seed, t).and_then(|b| mle_mdi(&b)))
        .collect::<Result<_>>()?;
    let col = |f: fn(&MdiEstimate) -> f64| Moments::of(&est.iter().map(f).collect::<Vec<_>>());
    Ok(MdiStudy {
        trials,
        tau_a: col(|e| e.tau_a),
        tau_b: col(|e| e.tau_b),
        tau_a_q: col(|e| e.tau_a_q),
        v_q_eps: col(|e| e.v_q_eps),
        v_p_eps: col(|e| e.v_p_eps),
    })
}

/// Outcome of an interval-coverage experiment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Coverage {
    pub trials: usize,
    pub tau_misses: usize,
    pub v_eps_misses: usize,
    /// Trials where either bound failed.
    pub misses: usize,
}

impl Coverage {
    pub fn miss_rate(&self) -> f64 {
        self.misses as f64 / self.trials as f64
    }
}

/// Runs the full one-way estimation pipeline `trials` times and counts how
/// often the true values escape `τ_low = τ̃ − zσ̃` or `V_ε,up = Ṽ_ε + z s̃`,
/// where `σ̃, s̃` are the analytic standard deviations at the estimates,
/// multiplied by `sigma_scale` (1 for the actual procedure).
pub fn coverage_test(
    ch: &LossyChannel,
    v_m: f64,
    v_th: f64,
    m: usize,
    eps_pe: f64,
    sigma_scale: f64,
    trials: usize,
    seed: u64,
) -> Result<Coverage> {
    let z = zscore(eps_pe)? * sigma_scale;
    let true_v = ch.excess_variance();
    let flags: Vec<(bool, bool)> = (0..trials as u64)
        .into_par_iter()
        .map(|t| -> Result<(bool, bool)> {
            let e = mle_oneway(&sample_oneway(ch, v_m, v_th, m, seed, t)?)?;
            let tau_hat = e.tau.clamp(1e-12, 1.0);
            let omega_hat = 1.0 + (e.v_eps.max(0.0)) / (1.0 - tau_hat).max(1e-12);
            let var = estimator_variances_oneway(tau_hat, v_m, v_th, omega_hat, m as f64);
            let tau_low = e.tau - z * var.tau.sqrt();
            let v_up = e.v_eps + z * var.v_eps.sqrt();
            Ok((ch.tau < tau_low, true_v > v_up))
        })
        .collect::<Result<_>>()?;
    Ok(Coverage {
        trials,
        tau_misses: flags.iter().filter(|f| f.0).count(),
        v_eps_misses: flags.iter().filter(|f| f.1).count(),
        misses: flags.iter().filter(|f| f.0 || f.1).count(),
    })
}

/// Writes `index,M,B` rows.
pub fn write_oneway_csv<W: Write>(batch: &OneWayBatch, mut w: W) -> std::io::Result<()> {
    writeln!(w, "index,M,B")?;
    for (i, (x, y)) in batch.modulation.iter().zip(&batch.output).enumerate() {
        writeln!(w, "{i},{x:e},{y:e}")?;
    }
    Ok(())
}

/// Writes `index,AQ,AP,BQ,BP,RQ,RP` rows.
pub fn write_mdi_csv<W: Write>(b: &MdiBatch, mut w: W) -> std::io::Result<()> {
    writeln!(w, "index,AQ,AP,BQ,BP,RQ,RP")?;
    for i in 0..b.aq.len() {
        writeln!(
            w,
            "{i},{:e},{:e},{:e},{:e},{:e},{:e}",
            b.aq[i], b.ap[i], b.bq[i], b.bp[i], b.rq[i], b.rp[i]
        )?;
    }
    Ok(())
}

/// Analytic relay-output variances `(V_{Q_R}, V_{P_R}) = ((τ_A+τ_B)V_M/2 + V_N)`.
pub fn relay_output_variances(attack: &MdiAttack, v_m: f64) -> (f64, f64) {
    let (vq, vp) = relay_noise_variances(attack);
    let s = 0.5 * (attack.tau_a + attack.tau_b) * v_m;
    (s + vq, s + vp)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn oneway_sampling_is_deterministic() {
        let ch = LossyChannel::new(0.4, 1.3).unwrap();
        let a = sample_oneway(&ch, 5.0, 1.0, 1000, 7, 0).unwrap();
        let b = sample_oneway(&ch, 5.0, 1.0, 1000, 7, 0).unwrap();
        assert_eq!(a, b);
        let c = sample_oneway(&ch, 5.0, 1.0, 1000, 7, 1).unwrap();
        assert_ne!(a.output, c.output);
        let z = sample_oneway(&ch, 0.0, 1.0, 10, 7, 0).unwrap();
        assert!(z.modulation.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn oneway_output_variance() {
        let ch = LossyChannel::new(0.4, 1.3).unwrap();
        let m = 100_000;
        let b = sample_oneway(&ch, 5.0, 1.0, m, 11, 0).unwrap();
        let mo = Moments::of(&b.output);
        let expect = 0.4 * 5.0 + ch.noise_variance(1.0);
        // SE of a sample variance is √(2/m)·σ²
        assert!((mo.var - expect).abs() < 3.0 * (2.0 / m as f64).sqrt() * expect);
    }

    #[test]
    fn noiseless_batch_is_flagged() {
        let b = OneWayBatch {
            seed: 0,
            stream: 0,
            v_m: 0.625,
            v_th: 0.0,
            modulation: vec![1.0, -1.0, 0.5, -0.5],
            output: vec![0.5, -0.5, 0.25, -0.25],
        };
        let e = mle_oneway(&b).unwrap();
        assert!((e.tau - 0.25).abs() < 1e-14);
        assert!(e.v_n.abs() < 1e-14 && (e.v_eps + 1.0).abs() < 1e-14 && !e.physical);
    }

    #[test]
    fn mdi_relay_statistics() {
        let at = MdiAttack::optimal_from_excess(0.8, 0.6, 0.02, 0.03).unwrap();
        let m = 100_000;
        let b = sample_mdi(&at, 4.0, m, 3, 0).unwrap();
        let (eq, ep) = relay_output_variances(&at, 4.0);
        let vq = Moments::of(&b.rq).var;
        let vp = Moments::of(&b.rp).var;
        let tol = |v: f64| 3.0 * (2.0 / m as f64).sqrt() * v;
        assert!((vq - eq).abs() < tol(eq), "{vq} {eq}");
        assert!((vp - ep).abs() < tol(ep), "{vp} {ep}");
        assert_eq!(b, sample_mdi(&at, 4.0, m, 3, 0).unwrap());
    }

    #[test]
    fn independent_attack_decouples_quadratures() {
        let at = MdiAttack::independent(0.7, 0.7, 1.5, 1.5).unwrap();
        let m = 100_000;
        let b = sample_mdi(&at, 0.0, m, 5, 0).unwrap();
        let c = mean_product(&b.rq, &b.rp);
        let (vq, vp) = relay_output_variances(&at, 0.0);
        assert!(c.abs() < 3.0 * (vq * vp / m as f64).sqrt());
    }

    #[test]
    fn csv_headers() {
        let ch = LossyChannel::new(0.5, 1.0).unwrap();
        let b = sample_oneway(&ch, 1.0, 0.0, 3, 1, 0).unwrap();
        let mut out = Vec::new();
        write_oneway_csv(&b, &mut out).unwrap();
        let s = String::from_utf8(out).unwrap();
        assert!(s.starts_with("index,M,B\n"));
        assert_eq!(s.lines().count(), 4);
    }
}
