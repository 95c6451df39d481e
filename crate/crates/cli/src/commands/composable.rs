use cvqkd_core::composable::{
    asymptotic_reference, optimize_coherent, optimize_collective, ComposableParams,
    EpsilonBudget, HolevoReference, DEFAULT_BITS, DEFAULT_P, DEFAULT_XI,
};

use super::{clamped_pair, sweep};
use crate::axis::AxisDefault;
use crate::error::{CliError, CliResult};
use crate::settings::{Protocol, Reference, Settings, DEFAULT_BLOCK};
use crate::table::{Cell, Table};

/// Collective and coherent composable bounds of the MDI protocol at `n =
/// --block` signals, each maximized over `V_M` (and the energy-test size `k`).
fn point(s: &Settings) -> CliResult<Vec<Cell>> {
    if s.protocol() != Protocol::Mdi && s.protocol.is_some() {
        return Err(CliError::Usage(
            "composable bounds are implemented for the mdi protocol".into(),
        ));
    }
    let n = s.block.unwrap_or(DEFAULT_BLOCK);
    let k_corr = s.k_corr.unwrap_or(n);
    let budget = EpsilonBudget::for_coherent_target(
        k_corr,
        s.p.unwrap_or(DEFAULT_P),
        s.bits.unwrap_or(DEFAULT_BITS),
    )?;
    let base = ComposableParams {
        attack: s.mdi_attack()?,
        v_m: s.vm.unwrap_or(1.0),
        xi: s.xi_or(DEFAULT_XI),
        reference: match s.reference.unwrap_or(Reference::Alice) {
            Reference::Alice => HolevoReference::Alice,
            Reference::Bob => HolevoReference::Bob,
        },
    };
    let col = optimize_collective(n, &budget, &base);
    let coh = optimize_coherent(n, k_corr, &budget, &base);
    let (_, asym) = asymptotic_reference(&base);
    let mut row = clamped_pair(col.rate).to_vec();
    row.extend(clamped_pair(coh.rate));
    row.extend([
        Cell::Num(asym.max(0.0)),
        Cell::Num(col.v_m),
        Cell::Num(coh.v_m),
        Cell::Num(coh.k),
        Cell::Num(budget.total()),
        Cell::Num(budget.coherent_total(k_corr)),
    ]);
    Ok(row)
}

pub fn cmd_composable(s: &Settings) -> CliResult<()> {
    let table = Table::new(vec![
        "collective",
        "raw_collective",
        "coherent",
        "raw_coherent",
        "asymptotic",
        "v_m_collective",
        "v_m_coherent",
        "k",
        "eps_total",
        "eps_coherent",
    ]);
    sweep(s, AxisDefault::BLOCK, table, point)
}
