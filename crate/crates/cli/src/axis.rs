use crate::error::{CliError, CliResult};
use crate::settings::{Scale, Settings, AXIS_KEYS, TRANSMISSIVITY_KEYS};

/// A resolved sweep: which key is varied and the `(x, value)` pairs, where
/// `x` is in axis units (dB for a dB axis) and `value` is what the key gets.
#[derive(Debug, Clone, PartialEq)]
pub struct Axis {
    pub key: String,
    pub points: Vec<(f64, f64)>,
}

/// Axis used when the settings name none.
#[derive(Debug, Clone, Copy)]
pub struct AxisDefault {
    pub key: &'static str,
    pub from: f64,
    pub to: f64,
    pub steps: usize,
    pub scale: Scale,
}

impl AxisDefault {
    pub const ATTENUATION: Self = Self {
        key: "tau",
        from: 0.5,
        to: 20.0,
        steps: 40,
        scale: Scale::Db,
    };
    pub const BLOCK: Self = Self {
        key: "block",
        from: 1e6,
        to: 1e10,
        steps: 5,
        scale: Scale::Log,
    };
    pub const FREQUENCY: Self = Self {
        key: "freq",
        from: 1e9,
        to: 1e15,
        steps: 25,
        scale: Scale::Log,
    };
}

pub fn db_to_tau(db: f64) -> f64 {
    10f64.powf(-db / 10.0)
}

impl Axis {
    pub fn resolve(s: &Settings, default: AxisDefault) -> CliResult<Axis> {
        let key = s
            .axis
            .clone()
            .unwrap_or_else(|| default.key.to_string())
            .replace('-', "_");
        if !AXIS_KEYS.contains(&key.as_str()) {
            return Err(CliError::Usage(format!(
                "unknown axis '{key}'; expected one of {}",
                AXIS_KEYS.join(", ")
            )));
        }
        let same_key = key == default.key;
        let pick = |v: Option<f64>, d: f64| v.unwrap_or(if same_key { d } else { f64::NAN });
        let from = pick(s.from, default.from);
        let to = pick(s.to, default.to);
        let steps = s.steps.unwrap_or(default.steps);
        let scale = s.scale.unwrap_or(if same_key { default.scale } else { Scale::Linear });
        if !from.is_finite() || !to.is_finite() {
            return Err(CliError::Usage(format!(
                "axis '{key}' needs finite --from and --to"
            )));
        }
        if steps < 2 {
            return Err(CliError::Usage(format!("--steps = {steps} must be ≥ 2")));
        }
        if scale == Scale::Db && !TRANSMISSIVITY_KEYS.contains(&key.as_str()) {
            return Err(CliError::Usage(format!(
                "a dB axis needs a transmissivity key, got '{key}'"
            )));
        }
        if scale == Scale::Log && !(from > 0.0 && to > 0.0) {
            return Err(CliError::Usage("a log axis needs positive endpoints".into()));
        }
        let frac = |i: usize| i as f64 / (steps - 1) as f64;
        let points = (0..steps)
            .map(|i| {
                let t = frac(i);
                match scale {
                    Scale::Linear => {
                        let x = from + t * (to - from);
                        (x, x)
                    }
                    Scale::Db => {
                        let x = from + t * (to - from);
                        (x, db_to_tau(x))
                    }
                    Scale::Log => {
                        let x = (from.ln() + t * (to.ln() - from.ln())).exp();
                        (x, x)
                    }
                }
            })
            .collect();
        Ok(Axis { key, points })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn db_axis_maps_to_transmissivity() {
        let s = Settings {
            from: Some(0.0),
            to: Some(20.0),
            steps: Some(3),
            ..Default::default()
        };
        let a = Axis::resolve(&s, AxisDefault::ATTENUATION).unwrap();
        assert_eq!(a.key, "tau");
        let taus: Vec<f64> = a.points.iter().map(|p| p.1).collect();
        assert!((taus[0] - 1.0).abs() < 1e-15);
        assert!((taus[1] - 0.1).abs() < 1e-15);
        assert!((taus[2] - 0.01).abs() < 1e-15);
    }

    #[test]
    fn log_axis_endpoints_are_exact_enough() {
        let a = Axis::resolve(&Settings::default(), AxisDefault::BLOCK).unwrap();
        let xs: Vec<f64> = a.points.iter().map(|p| p.0).collect();
        assert_eq!(xs.len(), 5);
        for (x, e) in xs.iter().zip(6..=10) {
            assert!((x / 10f64.powi(e) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_bad_axes() {
        let mut s = Settings {
            axis: Some("vm".into()),
            ..Default::default()
        };
        // a different key does not inherit the default range
        assert!(Axis::resolve(&s, AxisDefault::ATTENUATION).is_err());
        s.from = Some(1.0);
        s.to = Some(10.0);
        s.scale = Some(Scale::Db);
        assert!(Axis::resolve(&s, AxisDefault::ATTENUATION).is_err());
        s.scale = Some(Scale::Log);
        s.steps = Some(1);
        assert!(Axis::resolve(&s, AxisDefault::ATTENUATION).is_err());
        s.axis = Some("nonsense".into());
        s.steps = Some(4);
        assert!(Axis::resolve(&s, AxisDefault::ATTENUATION).is_err());
    }

    #[test]
    fn kebab_case_keys_are_accepted() {
        let s = Settings {
            axis: Some("tau-b".into()),
            from: Some(1.0),
            to: Some(2.0),
            scale: Some(Scale::Db),
            ..Default::default()
        };
        assert_eq!(Axis::resolve(&s, AxisDefault::ATTENUATION).unwrap().key, "tau_b");
    }
}
