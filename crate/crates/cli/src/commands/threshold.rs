use cvqkd_core::fock::threshold_discrete;
use cvqkd_core::oneway::{min_transmissivity, security_threshold, thermal_photons_from_frequency};
use cvqkd_core::optimize::bisect;

use super::finite::finite_point;
use super::rate::asymptotic;
use super::sweep;
use crate::axis::AxisDefault;
use crate::error::{CliError, CliResult};
use crate::settings::{Protocol, Settings, ThresholdMode};
use crate::table::{Cell, Table};

const DEFAULT_EPS_MAX: f64 = 2.0;
const DEFAULT_TEMPERATURE: f64 = 300.0;
const TAU_LO: f64 = 1e-6;
const TAU_HI: f64 = 1.0 - 1e-9;

/// Signed rate used for root finding: finite-size when `--block` is set.
fn signed_rate(s: &Settings) -> CliResult<f64> {
    if s.block.is_some() {
        Ok(finite_point(s)?.rate.raw)
    } else {
        Ok(asymptotic(s)?.raw_rate)
    }
}

/// Sign change of `rate(x)` on `[lo, hi]` where the rate is positive at the
/// `positive_at` end. Returns the crossing and whether it was bracketed; an
/// endpoint is returned when there is no sign change.
fn crossing<F>(rate: F, lo: f64, hi: f64, positive_at_lo: bool) -> CliResult<(f64, bool)>
where
    F: Fn(f64) -> CliResult<f64>,
{
    let (good, bad) = if positive_at_lo { (lo, hi) } else { (hi, lo) };
    if !(rate(good)? > 0.0) {
        return Ok((if positive_at_lo { lo } else { f64::NAN }, false));
    }
    if rate(bad)? > 0.0 {
        return Ok((bad, false));
    }
    let mut failure = None;
    let root = bisect(
        |x| match rate(x) {
            Ok(v) => v,
            Err(e) => {
                failure.get_or_insert(e);
                f64::NAN
            }
        },
        lo,
        hi,
        1e-9 * (hi - lo),
        0.0,
    )?;
    if let Some(e) = failure {
        return Err(e);
    }
    Ok((root.x, true))
}

fn eps_threshold(s: &Settings) -> CliResult<(f64, bool)> {
    let eps_max = s.eps_max.unwrap_or(DEFAULT_EPS_MAX);
    let tau = s.tau();
    match s.protocol() {
        Protocol::Oneway if s.block.is_none() => {
            let t = security_threshold(&s.oneway_spec(1.0)?, tau, eps_max)?;
            Ok((t.value, t.bracketed))
        }
        Protocol::Discrete => {
            let c = s.constellation()?;
            let t = threshold_discrete(&c, tau, eps_max, &s.fock(), &s.grid())?;
            Ok((t.eps, t.bracketed))
        }
        Protocol::Mdi => {
            // symmetric excess noise on both links
            let at = |e: f64| -> CliResult<Settings> {
                let mut p = s.with_value("eps", e)?;
                p.eps_a = None;
                p.eps_b = None;
                p.omega_a = None;
                p.omega_b = None;
                Ok(p)
            };
            crossing(|e| signed_rate(&at(e)?), 0.0, eps_max, true)
        }
        _ => crossing(|e| signed_rate(&s.with_value("eps", e)?), 0.0, eps_max, true),
    }
}

/// Smallest transmissivity with a key when Eve's noise is the thermal
/// background of the source, `ω = V_th + 1`, `V_th = 2n̄(f, T)`.
fn frequency_threshold(s: &Settings) -> CliResult<(f64, Option<f64>, bool)> {
    if s.protocol() != Protocol::Oneway {
        return Err(CliError::Usage(
            "the frequency threshold is defined for the oneway protocol".into(),
        ));
    }
    let f = s
        .freq
        .ok_or_else(|| CliError::Usage("frequency mode needs --freq or a freq axis".into()))?;
    let nbar = thermal_photons_from_frequency(f, s.temperature.unwrap_or(DEFAULT_TEMPERATURE))?;
    let v_th = 2.0 * nbar;
    let omega = v_th + 1.0;
    let mut p = s.with_value("vth", v_th)?.with_value("omega", omega)?;
    p.eps = None;
    if p.block.is_none() {
        let spec = p.oneway_spec(1.0)?;
        let t = min_transmissivity(&spec, |_| omega)?;
        return Ok((v_th, t, t.is_some()));
    }
    let rate = |tau: f64| signed_rate(&p.with_value("tau", tau)?);
    let (tau, bracketed) = crossing(rate, TAU_LO, TAU_HI, false)?;
    let tau = if tau.is_nan() { None } else { Some(tau) };
    Ok((v_th, tau, bracketed))
}

pub fn cmd_threshold(s: &Settings) -> CliResult<()> {
    match s.mode.unwrap_or(ThresholdMode::Eps) {
        ThresholdMode::Eps => {
            let table = Table::new(vec!["eps_max", "bracketed"]);
            sweep(s, AxisDefault::ATTENUATION, table, |p| {
                let (eps, bracketed) = eps_threshold(p)?;
                Ok(vec![Cell::Num(eps), bracketed.into()])
            })
        }
        ThresholdMode::Frequency => {
            let table = Table::new(vec!["vth", "tau_min", "secure"]);
            sweep(s, AxisDefault::FREQUENCY, table, |p| {
                let (v_th, tau, _) = frequency_threshold(p)?;
                Ok(vec![Cell::Num(v_th), tau.into(), tau.is_some().into()])
            })
        }
    }
}
