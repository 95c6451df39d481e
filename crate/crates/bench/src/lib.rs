//! Fixed parameter points shared by the benchmarks.

use cvqkd_core::estimation::EstimationSetup;
use cvqkd_core::gaussian::CovMatrix;
use cvqkd_core::mdi::{MdiAttack, StarAttack};
use cvqkd_core::oneway::{Detection, Direction, LossyChannel, OneWaySpec};
use cvqkd_core::Result;

/// Reverse-reconciliation homodyne protocol at `V_M = 10`.
pub fn rr_hom() -> Result<OneWaySpec> {
    OneWaySpec::new(Detection::Homodyne, Direction::Reverse, 10.0, 0.0, 0.98)
}

/// Thermal-state direct-reconciliation homodyne protocol, `V_th = 10`.
pub fn thermal_dr_hom() -> Result<OneWaySpec> {
    OneWaySpec::new(Detection::Homodyne, Direction::Direct, 10.0, 10.0, 0.98)
}

/// 1 dB channel with excess noise 0.01.
pub fn channel() -> Result<LossyChannel> {
    LossyChannel::from_excess_noise(0.794_328_234_724_281_5, 0.01)
}

/// Relay near Alice, Bob at 5 dB, `ε = 0.01` on both links.
pub fn relay() -> Result<MdiAttack> {
    MdiAttack::optimal_from_excess(0.98, 0.316_227_766_016_837_94, 0.01, 0.01)
}

pub fn star() -> Result<StarAttack> {
    StarAttack::new(0.95, 1.0)
}

pub fn estimation() -> Result<EstimationSetup> {
    EstimationSetup::new(1e9, 0.5, 4)
}

/// Three-mode state `(E', e, B)` of the one-way protocol.
pub fn three_mode_state() -> Result<CovMatrix> {
    Ok(cvqkd_core::oneway::eve_bob_cm(&rr_hom()?, &channel()?))
}
