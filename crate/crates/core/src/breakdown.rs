use serde::Serialize;

use crate::gaussian::SymplecticSpectrum;

/// A labelled symplectic spectrum kept for auditing a rate.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectrumRecord {
    pub label: String,
    pub values: Vec<f64>,
}

impl SpectrumRecord {
    pub fn new(label: impl Into<String>, spectrum: &SymplecticSpectrum) -> Self {
        Self {
            label: label.into(),
            values: spectrum.values().to_vec(),
        }
    }
}

/// Key rate together with the quantities it was built from.
///
/// `rate = xi * i_ab - i_e`; the value is signed, callers clamp for reporting.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KeyRateBreakdown {
    pub rate: f64,
    pub i_ab: f64,
    pub i_e: f64,
    pub xi: f64,
    pub spectra: Vec<SpectrumRecord>,
}

impl KeyRateBreakdown {
    pub fn new(xi: f64, i_ab: f64, i_e: f64, spectra: Vec<SpectrumRecord>) -> Self {
        Self {
            rate: xi * i_ab - i_e,
            i_ab,
            i_e,
            xi,
            spectra,
        }
    }

    /// `max(0, rate)`.
    pub fn clamped(&self) -> f64 {
        self.rate.max(0.0)
    }
}
