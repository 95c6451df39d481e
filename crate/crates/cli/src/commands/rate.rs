use std::io::Write;

use cvqkd_core::mdi::{keyrate_mdi, keyrate_mdi_optimized, keyrate_star3, keyrate_star3_optimized};
use cvqkd_core::oneway::{keyrate_infinite_modulation, keyrate_oneway, Variant};
use cvqkd_core::optimize::grid_golden_max;
use cvqkd_core::KeyRateBreakdown;
use serde::Serialize;
use serde_json::json;

use super::finite::{finite_point, FinitePoint};
use super::{clamped_pair, output, sweep};
use crate::axis::AxisDefault;
use crate::error::{CliError, CliResult};
use crate::settings::{Protocol, Settings};
use crate::table::Table;

/// `ln V_M` search range of the one-way modulation optimizer.
const LN_VM: (f64, f64) = (-4.605_170_185_988_091, 13.815_510_557_964_274);
/// `μ` search range of the star network.
const STAR_MU: (f64, f64) = (1.01, 1e4);

/// Asymptotic rate at one parameter point.
#[derive(Debug, Clone, Serialize)]
pub struct Evaluation {
    /// Signed `ξI_AB − I_E`.
    pub raw_rate: f64,
    pub rate: f64,
    pub i_ab: Option<f64>,
    pub i_e: Option<f64>,
    pub v_m: Option<f64>,
    pub mu: Option<f64>,
    pub breakdown: Option<KeyRateBreakdown>,
}

impl Evaluation {
    fn from_breakdown(b: KeyRateBreakdown, v_m: Option<f64>, mu: Option<f64>) -> Self {
        Self {
            raw_rate: b.rate,
            rate: b.clamped(),
            i_ab: Some(b.i_ab),
            i_e: Some(b.i_e),
            v_m,
            mu,
            breakdown: Some(b),
        }
    }
}

pub fn asymptotic(s: &Settings) -> CliResult<Evaluation> {
    let optimize = s.optimize_vm.unwrap_or(false);
    match s.protocol() {
        Protocol::Oneway => {
            let spec = s.oneway_spec(1.0)?;
            let ch = s.channel()?;
            if spec.v_m.is_infinite() {
                if spec.v_th != 0.0 || spec.xi != 1.0 {
                    return Err(CliError::Usage(
                        "the infinite-modulation limit needs --vth 0 and --xi 1".into(),
                    ));
                }
                let r = keyrate_infinite_modulation(
                    Variant::new(spec.detection, spec.direction),
                    ch.tau,
                    ch.omega,
                )?;
                return Ok(Evaluation {
                    raw_rate: r,
                    rate: r.max(0.0),
                    i_ab: None,
                    i_e: None,
                    v_m: Some(f64::INFINITY),
                    mu: None,
                    breakdown: None,
                });
            }
            let v_m = if optimize {
                let best = grid_golden_max(
                    |lv| {
                        keyrate_oneway(&spec.with_v_m(lv.exp()), &ch)
                            .map(|b| b.rate)
                            .unwrap_or(f64::NEG_INFINITY)
                    },
                    LN_VM.0,
                    LN_VM.1,
                    41,
                    1e-6,
                );
                best.x.exp()
            } else {
                spec.v_m
            };
            let b = keyrate_oneway(&spec.with_v_m(v_m), &ch)?;
            Ok(Evaluation::from_breakdown(b, Some(v_m), None))
        }
        Protocol::Mdi => {
            let at = s.mdi_attack()?;
            let xi = s.xi_or(1.0);
            let (mu, b) = match s.fixed_mu().filter(|_| !optimize) {
                Some(mu) => (mu, keyrate_mdi(xi, mu, &at)?),
                None => keyrate_mdi_optimized(xi, &at)?,
            };
            Ok(Evaluation::from_breakdown(b, Some(mu - 1.0), Some(mu)))
        }
        Protocol::Star => {
            let at = s.star_attack()?;
            let xi = s.xi_or(1.0);
            let (mu, b) = match s.fixed_mu().filter(|_| !optimize) {
                Some(mu) => (mu, keyrate_star3(xi, mu, &at)?),
                None => keyrate_star3_optimized(xi, &at, STAR_MU.0, STAR_MU.1)?,
            };
            Ok(Evaluation::from_breakdown(b, Some(mu - 1.0), Some(mu)))
        }
        Protocol::Discrete => Err(CliError::Usage(
            "the discrete protocol is evaluated by the `discrete` command".into(),
        )),
    }
}

#[derive(Serialize)]
struct RateReport {
    protocol: Protocol,
    settings: Settings,
    #[serde(flatten)]
    evaluation: Evaluation,
    finite_size: Option<FinitePoint>,
}

pub fn cmd_rate(s: &Settings) -> CliResult<()> {
    let evaluation = asymptotic(s)?;
    let finite_size = match s.block {
        Some(_) => Some(finite_point(s)?),
        None => None,
    };
    let report = RateReport {
        protocol: s.protocol(),
        settings: s.clone(),
        evaluation,
        finite_size,
    };
    let mut out = output(s)?;
    serde_json::to_writer_pretty(&mut out, &json!(report))?;
    writeln!(out)?;
    Ok(())
}

pub fn cmd_scan(s: &Settings) -> CliResult<()> {
    let table = Table::new(vec!["rate", "raw_rate", "i_ab", "i_e", "v_m", "mu"]);
    sweep(s, AxisDefault::ATTENUATION, table, |p| {
        let e = asymptotic(p)?;
        let mut row = clamped_pair(e.raw_rate).to_vec();
        row.extend([e.i_ab.into(), e.i_e.into(), e.v_m.into(), e.mu.into()]);
        Ok(row)
    })
}
