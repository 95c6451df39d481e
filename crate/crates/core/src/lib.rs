pub mod breakdown;
pub mod composable;
pub mod error;
pub mod estimation;
pub mod fading;
pub mod fock;
pub mod gaussian;
pub mod mdi;
pub mod montecarlo;
pub mod oneway;
pub mod optimize;
pub mod quadrature;

pub use breakdown::{KeyRateBreakdown, SpectrumRecord};
pub use error::{Error, Result};
