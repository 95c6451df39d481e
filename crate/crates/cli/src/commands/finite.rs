use cvqkd_core::estimation::{
    keyrate_finite_mdi, keyrate_finite_oneway, optimize_finite, optimize_r, FiniteBounds,
    FiniteRate,
};
use serde::Serialize;

use super::rate::asymptotic;
use super::{clamped_pair, sweep};
use crate::axis::AxisDefault;
use crate::error::{CliError, CliResult};
use crate::settings::{Protocol, Settings};
use crate::table::{Cell, Table};

const R_RANGE: (f64, f64) = (1e-4, 0.99);
const MDI_VM_RANGE: (f64, f64) = (0.5, 1e5);

/// Finite-size rate at the best (or fixed) `r` and `V_M`, with the
/// pessimistic parameters it was evaluated at.
#[derive(Debug, Clone, Serialize)]
pub struct FinitePoint {
    pub rate: FiniteRate,
    pub v_m: f64,
    pub r: f64,
    /// `τ_low` (one-way) or `τ_A,low` (MDI).
    pub tau_low: f64,
    /// `V_ε,up` (one-way) or `V_{Q,ε},up` (MDI).
    pub v_eps_up: f64,
    pub tau_b_low: Option<f64>,
    pub v_p_eps_up: Option<f64>,
    pub block: f64,
}

fn best<F: Fn(f64, f64) -> f64>(s: &Settings, v_m: Option<f64>, vm_range: (f64, f64), f: F) -> (f64, f64) {
    match (v_m, s.r) {
        (Some(v), Some(r)) => (v, r),
        (Some(v), None) => (v, optimize_r(|r| f(v, r), R_RANGE.0, R_RANGE.1).0),
        (None, r) => {
            let bounds = FiniteBounds {
                v_m: vm_range,
                r: r.map_or(R_RANGE, |r| (r, r)),
            };
            let o = optimize_finite(&f, bounds);
            (o.v_m, r.unwrap_or(o.r))
        }
    }
}

pub fn finite_point(s: &Settings) -> CliResult<FinitePoint> {
    let optimize_vm = s.optimize_vm.unwrap_or(false);
    match s.protocol() {
        Protocol::Oneway => {
            let spec = s.oneway_spec(1.0)?;
            if spec.v_m.is_infinite() {
                return Err(CliError::Usage(
                    "finite-size rates need a finite --vm".into(),
                ));
            }
            let ch = s.channel()?;
            let setup = s.estimation(spec.v_th > 0.0)?;
            let f = |v_m: f64, r: f64| {
                keyrate_finite_oneway(&spec.with_v_m(v_m), &ch, &setup.with_r(r))
                    .map(|x| x.0.raw)
                    .unwrap_or(f64::NEG_INFINITY)
            };
            let fixed = (!optimize_vm).then_some(spec.v_m);
            let (v_m, r) = best(s, fixed, FiniteBounds::default().v_m, f);
            let (rate, w) = keyrate_finite_oneway(&spec.with_v_m(v_m), &ch, &setup.with_r(r))?;
            Ok(FinitePoint {
                rate,
                v_m,
                r,
                tau_low: w.tau_low,
                v_eps_up: w.v_eps_up,
                tau_b_low: None,
                v_p_eps_up: None,
                block: setup.block,
            })
        }
        Protocol::Mdi => {
            let at = s.mdi_attack()?;
            let xi = s.xi_or(1.0);
            let setup = s.estimation(false)?;
            let f = |v_m: f64, r: f64| {
                keyrate_finite_mdi(xi, v_m + 1.0, &at, &setup.with_r(r))
                    .map(|x| x.0.raw)
                    .unwrap_or(f64::NEG_INFINITY)
            };
            let fixed = s.fixed_mu().filter(|_| !optimize_vm).map(|mu| mu - 1.0);
            let (v_m, r) = best(s, fixed, MDI_VM_RANGE, f);
            let (rate, w) = keyrate_finite_mdi(xi, v_m + 1.0, &at, &setup.with_r(r))?;
            Ok(FinitePoint {
                rate,
                v_m,
                r,
                tau_low: w.tau_a_low,
                v_eps_up: w.v_q_eps_up,
                tau_b_low: Some(w.tau_b_low),
                v_p_eps_up: Some(w.v_p_eps_up),
                block: setup.block,
            })
        }
        other => Err(CliError::Usage(format!(
            "finite-size analysis is available for oneway and mdi, not {other:?}"
        ))),
    }
}

pub fn cmd_finite(s: &Settings) -> CliResult<()> {
    let table = Table::new(vec![
        "rate",
        "raw_rate",
        "asymptotic",
        "v_m",
        "r",
        "tau_low",
        "v_eps_up",
        "tau_b_low",
        "v_p_eps_up",
    ]);
    sweep(s, AxisDefault::BLOCK, table, |p| {
        let f = finite_point(p)?;
        let reference = asymptotic(p)?;
        let mut row = clamped_pair(f.rate.raw).to_vec();
        row.extend([
            Cell::Num(reference.rate),
            Cell::Num(f.v_m),
            Cell::Num(f.r),
            Cell::Num(f.tau_low),
            Cell::Num(f.v_eps_up),
            f.tau_b_low.into(),
            f.v_p_eps_up.into(),
        ]);
        Ok(row)
    })
}
