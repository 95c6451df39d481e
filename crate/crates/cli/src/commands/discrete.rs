use cvqkd_core::fock::{
    optimize_radius, photons_from_excess_noise, pureloss_rates, thermal_rates_with, Constellation,
    DiscreteRates,
};
use cvqkd_core::oneway::{keyrate_oneway, Detection, Direction, LossyChannel, OneWaySpec};

use super::{clamped_pair, sweep};
use crate::axis::AxisDefault;
use crate::error::CliResult;
use crate::settings::{DirectionArg, Settings};
use crate::table::{Cell, Table};

const Z_RANGE: (f64, f64) = (0.05, 3.0);

fn rates(s: &Settings, c: &Constellation, tau: f64, nbar: f64) -> CliResult<DiscreteRates> {
    Ok(if nbar == 0.0 {
        pureloss_rates(c, tau, &s.grid())?
    } else {
        thermal_rates_with(c, tau, nbar, &s.fock(), &s.grid(), s.conditioning())?
    })
}

/// Gaussian-modulated heterodyne rate with the same mean photon number,
/// `V_M = 2z²`.
fn gaussian(z: f64, ch: &LossyChannel, direction: Direction) -> CliResult<f64> {
    let spec = OneWaySpec::new(Detection::Heterodyne, direction, 2.0 * z * z, 0.0, 1.0)?;
    Ok(keyrate_oneway(&spec, ch)?.rate)
}

fn point(s: &Settings) -> CliResult<Vec<Cell>> {
    let tau = s.tau();
    let eps = s.eps.unwrap_or(0.0);
    let nbar = if eps == 0.0 { 0.0 } else { photons_from_excess_noise(tau, eps)? };
    let reverse = s.dir.unwrap_or(DirectionArg::Rr) == DirectionArg::Rr;
    let mut c = s.constellation()?;
    if s.optimize_z.unwrap_or(false) {
        let n = c.n;
        let (z, _) = optimize_radius(
            |z| {
                Constellation::new(n, z)
                    .map_err(Into::into)
                    .and_then(|c| rates(s, &c, tau, nbar))
                    .map(|r| if reverse { r.reverse } else { r.direct })
                    .unwrap_or(f64::NEG_INFINITY)
            },
            Z_RANGE.0,
            Z_RANGE.1,
        );
        c = Constellation::new(n, z)?;
    }
    let r = rates(s, &c, tau, nbar)?;
    let ch = LossyChannel::new(tau, 1.0 + 2.0 * nbar)?;
    let mut row = clamped_pair(r.direct).to_vec();
    row.extend(clamped_pair(r.reverse));
    row.extend([
        r.optimal.into(),
        Cell::Num(r.i_ab),
        Cell::Num(gaussian(c.z, &ch, Direction::Direct)?),
        Cell::Num(gaussian(c.z, &ch, Direction::Reverse)?),
        Cell::Num(c.z),
        Cell::Num(nbar),
        r.n_max.into(),
    ]);
    Ok(row)
}

pub fn cmd_discrete(s: &Settings) -> CliResult<()> {
    let table = Table::new(vec![
        "rate_dr",
        "raw_dr",
        "rate_rr",
        "raw_rr",
        "rate_optimal",
        "i_ab",
        "gauss_dr",
        "gauss_rr",
        "z",
        "nbar",
        "n_max",
    ]);
    sweep(s, AxisDefault::ATTENUATION, table, point)
}
