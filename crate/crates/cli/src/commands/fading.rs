use cvqkd_core::fading::{
    keyrate_at_mean, keyrate_fast_mdi, keyrate_fast_oneway, keyrate_fast_star, keyrate_slow_mdi,
    keyrate_slow_oneway, keyrate_slow_star, optimize_fading_mu, FadingNodes, FadingProtocol,
    FadingRate, UniformFade, STAR_MU_RANGE,
};

use super::{clamped_pair, sweep};
use crate::axis::AxisDefault;
use crate::error::{CliError, CliResult};
use crate::settings::{Protocol, Settings};
use crate::table::{Cell, Table};

const DEFAULT_DELTA: f64 = 0.1;
const MDI_MU_RANGE: (f64, f64) = (1.01, 1e4);

/// `(rate, μ)` with `μ` fixed by the settings or optimized for this rate.
fn with_mu<F>(s: &Settings, range: (f64, f64), rate: F) -> CliResult<(FadingRate, f64)>
where
    F: Fn(f64) -> cvqkd_core::Result<FadingRate>,
{
    match s.fixed_mu() {
        Some(mu) => Ok((rate(mu)?, mu)),
        None => {
            let (mu, r) = optimize_fading_mu(rate, range.0, range.1)?;
            Ok((r, mu))
        }
    }
}

/// Fast and slow uniform fading on `[τ, τ + Δτ]` (every link for MDI/star).
fn point(s: &Settings) -> CliResult<Vec<Cell>> {
    let fade = UniformFade::new(s.tau(), s.delta.unwrap_or(DEFAULT_DELTA))?;
    let omega = s.omega.unwrap_or(1.0);
    let nodes = FadingNodes::default();
    let xi = s.xi_or(1.0);
    let spec = s.oneway_spec(1.0)?;
    let (fast, slow, mu_fast, mu_slow, protocol) = match s.protocol() {
        Protocol::Oneway => (
            keyrate_fast_oneway(&fade, &spec, omega, &nodes)?,
            keyrate_slow_oneway(&fade, &spec, omega, &nodes)?,
            None,
            None,
            FadingProtocol::OneWay,
        ),
        Protocol::Mdi => {
            let (f, mf) = with_mu(s, MDI_MU_RANGE, |mu| {
                keyrate_fast_mdi(&fade, xi, mu, omega, &nodes)
            })?;
            let (sl, ms) = with_mu(s, MDI_MU_RANGE, |mu| {
                keyrate_slow_mdi(&fade, xi, mu, omega, &nodes)
            })?;
            (f, sl, Some(mf), Some(ms), FadingProtocol::Mdi)
        }
        Protocol::Star => {
            let (f, mf) = with_mu(s, STAR_MU_RANGE, |mu| {
                keyrate_fast_star(&fade, xi, mu, omega, &nodes)
            })?;
            let (sl, ms) = with_mu(s, STAR_MU_RANGE, |mu| {
                keyrate_slow_star(&fade, xi, mu, omega, &nodes)
            })?;
            (f, sl, Some(mf), Some(ms), FadingProtocol::Star)
        }
        Protocol::Discrete => {
            return Err(CliError::Usage(
                "fading is implemented for oneway, mdi and star".into(),
            ))
        }
    };
    let at_mean = keyrate_at_mean(protocol, &fade, &spec, xi, mu_fast.unwrap_or(1.0), omega)?;
    let mut row = clamped_pair(fast.rate).to_vec();
    row.extend(clamped_pair(slow.rate));
    row.extend([
        Cell::Num(at_mean),
        Cell::Num(fast.i_ab),
        Cell::Num(fast.i_e),
        mu_fast.into(),
        mu_slow.into(),
    ]);
    Ok(row)
}

pub fn cmd_fading(s: &Settings) -> CliResult<()> {
    let table = Table::new(vec![
        "fast",
        "raw_fast",
        "slow",
        "raw_slow",
        "at_mean",
        "i_ab_fast",
        "i_e_fast",
        "mu_fast",
        "mu_slow",
    ]);
    sweep(s, AxisDefault::ATTENUATION, table, point)
}
