//! Run settings: command-line flags layered over an optional JSON file and
//! built-in defaults.

use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use cvqkd_core::estimation::EstimationSetup;
use cvqkd_core::fock::{BGrid, Constellation, FockConfig, RrConditioning};
use cvqkd_core::mdi::{MdiAttack, StarAttack};
use cvqkd_core::oneway::{Detection, Direction, LossyChannel, OneWaySpec};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Protocol {
    /// Point-to-point Gaussian modulation.
    Oneway,
    /// Two users and an untrusted relay.
    Mdi,
    /// Three users around one relay.
    Star,
    /// Phase-encoded coherent states with heterodyne detection.
    Discrete,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DetectionArg {
    Hom,
    Het,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DirectionArg {
    Dr,
    Rr,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AttackKind {
    /// Correlations that minimize the key rate.
    Optimal,
    /// Two independent entangling cloners.
    Independent,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scale {
    Linear,
    /// Axis values are attenuations in dB, mapped by `τ = 10^(−dB/10)`.
    Db,
    Log,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ThresholdMode {
    /// Largest tolerable excess noise per axis point.
    Eps,
    /// Smallest transmissivity per frequency of the thermal source.
    Frequency,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Conditioning {
    Projected,
    Mixture,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Reference {
    Alice,
    Bob,
}

/// Every setting is optional; see `docs/config.md` for meanings and defaults.
/// JSON keys are the flag names with `-` replaced by `_`.
#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Settings {
    #[arg(long, value_enum)]
    pub protocol: Option<Protocol>,
    #[arg(long, value_enum)]
    pub detection: Option<DetectionArg>,
    #[arg(long, value_enum)]
    pub dir: Option<DirectionArg>,
    /// Transmissivity of the (scanned) link.
    #[arg(long)]
    #[serde(default, with = "float")]
    pub tau: Option<f64>,
    /// Thermal variance of Eve's injected mode.
    #[arg(long)]
    #[serde(default, with = "float")]
    pub omega: Option<f64>,
    /// Input-referred excess noise; overrides --omega.
    #[arg(long)]
    #[serde(default, with = "float")]
    pub eps: Option<f64>,
    /// Modulation variance; `inf` selects the infinite-modulation limit.
    #[arg(long)]
    #[serde(default, with = "float")]
    pub vm: Option<f64>,
    /// Preparation noise of thermal-state sources.
    #[arg(long)]
    #[serde(default, with = "float")]
    pub vth: Option<f64>,
    /// Reconciliation efficiency.
    #[arg(long)]
    #[serde(default, with = "float")]
    pub xi: Option<f64>,
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub optimize_vm: Option<bool>,

    #[arg(long)]
    #[serde(default, with = "float")]
    pub tau_a: Option<f64>,
    #[arg(long)]
    #[serde(default, with = "float")]
    pub tau_b: Option<f64>,
    #[arg(long)]
    #[serde(default, with = "float")]
    pub omega_a: Option<f64>,
    #[arg(long)]
    #[serde(default, with = "float")]
    pub omega_b: Option<f64>,
    #[arg(long)]
    #[serde(default, with = "float")]
    pub eps_a: Option<f64>,
    #[arg(long)]
    #[serde(default, with = "float")]
    pub eps_b: Option<f64>,
    #[arg(long, value_enum)]
    pub attack: Option<AttackKind>,
    /// Explicit attack correlations (both required).
    #[arg(long)]
    #[serde(default, with = "float")]
    pub g: Option<f64>,
    #[arg(long)]
    #[serde(default, with = "float")]
    pub g_p: Option<f64>,
    /// Two-mode squeezing `μ = V_M + 1` of the relay protocols; optimized when absent.
    #[arg(long)]
    #[serde(default, with = "float")]
    pub mu: Option<f64>,
    /// Apply the scanned transmissivity to both MDI links.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub symmetric: Option<bool>,

    /// Block size `N̄` (finite size) or number of signals `n` (composable).
    #[arg(long)]
    #[serde(default, with = "float")]
    pub block: Option<f64>,
    /// Fraction of the block used for parameter estimation; optimized when absent.
    #[arg(long)]
    #[serde(default, with = "float")]
    pub r: Option<f64>,
    #[arg(long)]
    #[serde(default, with = "float")]
    pub eps_pe: Option<f64>,
    #[arg(long)]
    #[serde(default, with = "float")]
    pub eps_sm: Option<f64>,
    /// Discretization bits.
    #[arg(long)]
    pub bits: Option<u32>,
    /// Use the rounded confidence multiplier 6.5.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub rounded_z: Option<bool>,
    /// Error-correction success probability (composable).
    #[arg(long)]
    #[serde(default, with = "float")]
    pub p: Option<f64>,
    /// Coherent-attack correction `K`; defaults to the block size.
    #[arg(long)]
    #[serde(default, with = "float")]
    pub k_corr: Option<f64>,
    #[arg(long, value_enum)]
    pub reference: Option<Reference>,

    /// Fading width `Δτ`.
    #[arg(long)]
    #[serde(default, with = "float")]
    pub delta: Option<f64>,

    /// Constellation size `N`.
    #[arg(long)]
    pub symbols: Option<usize>,
    /// Constellation amplitude.
    #[arg(long)]
    #[serde(default, with = "float")]
    pub z: Option<f64>,
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub optimize_z: Option<bool>,
    #[arg(long)]
    pub n_max: Option<usize>,
    #[arg(long)]
    pub radial: Option<usize>,
    #[arg(long)]
    pub angular: Option<usize>,
    #[arg(long, value_enum)]
    pub conditioning: Option<Conditioning>,

    #[arg(long, value_enum)]
    pub mode: Option<ThresholdMode>,
    #[arg(long)]
    #[serde(default, with = "float")]
    pub eps_max: Option<f64>,
    /// Source frequency in Hz.
    #[arg(long)]
    #[serde(default, with = "float")]
    pub freq: Option<f64>,
    /// Temperature in K.
    #[arg(long)]
    #[serde(default, with = "float")]
    pub temperature: Option<f64>,

    /// Scanned setting (any numeric key).
    #[arg(long)]
    pub axis: Option<String>,
    #[arg(long)]
    #[serde(default, with = "float")]
    pub from: Option<f64>,
    #[arg(long)]
    #[serde(default, with = "float")]
    pub to: Option<f64>,
    #[arg(long)]
    pub steps: Option<usize>,
    #[arg(long, value_enum)]
    pub scale: Option<Scale>,
    /// Output file; standard output when absent.
    #[arg(long)]
    pub output: Option<PathBuf>,

    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub trials: Option<usize>,
    /// Samples per Monte Carlo trial.
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long)]
    #[serde(default, with = "float")]
    pub tolerance: Option<f64>,
    /// Multiplies every analytic variance before comparison (fault injection).
    #[arg(long, hide = true)]
    #[serde(default, with = "float")]
    pub variance_scale: Option<f64>,
}

/// `Option<f64>` as JSON, with non-finite values written as the strings
/// `"inf"`, `"-inf"` and `"nan"` (plain JSON numbers cannot hold them).
mod float {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Text(String),
    }

    pub fn serialize<S: Serializer>(v: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
        match v {
            None => s.serialize_none(),
            Some(x) if x.is_finite() => s.serialize_f64(*x),
            Some(x) => s.serialize_str(&x.to_string()),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<f64>, D::Error> {
        match Option::<Repr>::deserialize(d)? {
            None => Ok(None),
            Some(Repr::Num(x)) => Ok(Some(x)),
            Some(Repr::Text(t)) => t
                .parse()
                .map(Some)
                .map_err(|_| serde::de::Error::custom(format!("'{t}' is not a number"))),
        }
    }
}

fn to_object(s: &Settings) -> Map<String, Value> {
    match serde_json::to_value(s).expect("settings serialize") {
        Value::Object(m) => m.into_iter().filter(|(_, v)| !v.is_null()).collect(),
        _ => unreachable!("settings serialize to an object"),
    }
}

fn from_object(m: Map<String, Value>) -> CliResult<Settings> {
    serde_json::from_value(Value::Object(m)).map_err(|e| CliError::Usage(e.to_string()))
}

impl Settings {
    /// Flags take precedence over the file, which takes precedence over defaults.
    pub fn layered(flags: Settings, file: Option<&Path>) -> CliResult<Settings> {
        let Some(path) = file else {
            return Ok(flags);
        };
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
        let mut base: Map<String, Value> = match serde_json::from_str(&text) {
            Ok(Value::Object(m)) => m,
            Ok(_) => return Err(CliError::Usage("config must be a JSON object".into())),
            Err(e) => return Err(CliError::Usage(format!("{}: {e}", path.display()))),
        };
        base.extend(to_object(&flags));
        from_object(base).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
    }

    /// Copy with the numeric setting `key` replaced by `value`.
    pub fn with_value(&self, key: &str, value: f64) -> CliResult<Settings> {
        let mut m = to_object(self);
        let v = if INTEGER_KEYS.contains(&key) {
            if value < 0.0 || value.fract() != 0.0 {
                return Err(CliError::Usage(format!(
                    "{key} = {value} must be a nonnegative integer"
                )));
            }
            Value::from(value as u64)
        } else {
            serde_json::Number::from_f64(value)
                .map(Value::Number)
                .ok_or_else(|| CliError::Usage(format!("{key} = {value} is not finite")))?
        };
        m.insert(key.to_string(), v);
        from_object(m)
    }

    pub fn protocol(&self) -> Protocol {
        self.protocol.unwrap_or(Protocol::Oneway)
    }

    pub fn xi_or(&self, default: f64) -> f64 {
        self.xi.unwrap_or(default)
    }

    pub fn oneway_spec(&self, xi_default: f64) -> CliResult<OneWaySpec> {
        let detection = match self.detection.unwrap_or(DetectionArg::Hom) {
            DetectionArg::Hom => Detection::Homodyne,
            DetectionArg::Het => Detection::Heterodyne,
        };
        let direction = match self.dir.unwrap_or(DirectionArg::Rr) {
            DirectionArg::Dr => Direction::Direct,
            DirectionArg::Rr => Direction::Reverse,
        };
        let v_m = self.vm.unwrap_or(DEFAULT_VM);
        let spec = OneWaySpec {
            detection,
            direction,
            v_m,
            v_th: self.vth.unwrap_or(0.0),
            xi: self.xi_or(xi_default),
        };
        if v_m.is_infinite() {
            // validated by the infinite-modulation path
            return Ok(spec);
        }
        Ok(OneWaySpec::new(detection, direction, v_m, spec.v_th, spec.xi)?)
    }

    pub fn tau(&self) -> f64 {
        self.tau.unwrap_or(DEFAULT_TAU)
    }

    /// Noise `ω` of a link with transmissivity `tau`: from `eps` if given.
    fn link_omega(tau: f64, omega: Option<f64>, eps: Option<f64>) -> CliResult<f64> {
        match eps {
            Some(e) => Ok(LossyChannel::from_excess_noise(tau, e)?.omega),
            None => Ok(omega.unwrap_or(1.0)),
        }
    }

    pub fn channel(&self) -> CliResult<LossyChannel> {
        let tau = self.tau();
        Ok(LossyChannel::new(tau, Self::link_omega(tau, self.omega, self.eps)?)?)
    }

    pub fn mdi_taus(&self) -> (f64, f64) {
        let tau_b = self.tau_b.or(self.tau).unwrap_or(DEFAULT_TAU);
        let tau_a = if self.symmetric.unwrap_or(false) {
            tau_b
        } else {
            self.tau_a.unwrap_or(DEFAULT_RELAY_TAU_A)
        };
        (tau_a, tau_b)
    }

    pub fn mdi_attack(&self) -> CliResult<MdiAttack> {
        let (ta, tb) = self.mdi_taus();
        let wa = Self::link_omega(ta, self.omega_a.or(self.omega), self.eps_a.or(self.eps))?;
        let wb = Self::link_omega(tb, self.omega_b.or(self.omega), self.eps_b.or(self.eps))?;
        Ok(match (self.g, self.g_p) {
            (Some(g), Some(gp)) => MdiAttack::new(ta, tb, wa, wb, g, gp)?,
            (None, None) => match self.attack.unwrap_or(AttackKind::Optimal) {
                AttackKind::Optimal => MdiAttack::optimal(ta, tb, wa, wb)?,
                AttackKind::Independent => MdiAttack::independent(ta, tb, wa, wb)?,
            },
            _ => return Err(CliError::Usage("--g and --g-p must be given together".into())),
        })
    }

    pub fn star_attack(&self) -> CliResult<StarAttack> {
        let eta = self.tau();
        Ok(StarAttack::new(eta, Self::link_omega(eta, self.omega, self.eps)?)?)
    }

    /// `μ` fixed by `--mu` or by `--vm` (as `V_M + 1`); `None` means optimize.
    pub fn fixed_mu(&self) -> Option<f64> {
        self.mu.or(self.vm.map(|v| v + 1.0))
    }

    pub fn estimation(&self, thermal: bool) -> CliResult<EstimationSetup> {
        let block = self.block.unwrap_or(DEFAULT_BLOCK);
        let bits = self.bits.unwrap_or(if thermal { 4 } else { 1 });
        let mut s = EstimationSetup::new(block, self.r.unwrap_or(0.5), bits)?;
        if let Some(e) = self.eps_pe {
            s.eps_pe = e;
        }
        if let Some(e) = self.eps_sm {
            s.eps_sm = e;
        }
        if self.rounded_z.unwrap_or(false) {
            s = s.rounded_z();
        }
        s.validate()?;
        Ok(s)
    }

    pub fn constellation(&self) -> CliResult<Constellation> {
        Ok(Constellation::new(
            self.symbols.unwrap_or(4),
            self.z.unwrap_or(0.1),
        )?)
    }

    pub fn fock(&self) -> FockConfig {
        FockConfig::with_cutoff(self.n_max.unwrap_or(12))
    }

    pub fn grid(&self) -> BGrid {
        let d = BGrid::default();
        BGrid {
            radial: self.radial.unwrap_or(d.radial),
            angular: self.angular.unwrap_or(d.angular),
        }
    }

    pub fn conditioning(&self) -> RrConditioning {
        match self.conditioning.unwrap_or(Conditioning::Projected) {
            Conditioning::Projected => RrConditioning::Projected,
            Conditioning::Mixture => RrConditioning::Mixture,
        }
    }
}

pub const DEFAULT_TAU: f64 = 0.5;
pub const DEFAULT_VM: f64 = 10.0;
pub const DEFAULT_BLOCK: f64 = 1e9;
/// Relay placed near Alice.
pub const DEFAULT_RELAY_TAU_A: f64 = 0.98;

/// Keys that hold integers; every other scannable key is a float.
const INTEGER_KEYS: [&str; 6] = ["bits", "symbols", "n_max", "radial", "angular", "trials"];

/// Keys that may be used as a sweep axis.
pub const AXIS_KEYS: [&str; 32] = [
    "tau", "omega", "eps", "vm", "vth", "xi", "tau_a", "tau_b", "omega_a", "omega_b", "eps_a",
    "eps_b", "g", "g_p", "mu", "block", "r", "eps_pe", "eps_sm", "bits", "p", "k_corr", "delta",
    "symbols", "z", "n_max", "radial", "angular", "eps_max", "freq", "temperature", "trials",
];

/// Keys whose values are transmissivities and so accept a dB axis.
pub const TRANSMISSIVITY_KEYS: [&str; 3] = ["tau", "tau_a", "tau_b"];
