//! Run configuration: a flat `key = value` text format plus flag overrides.
//!
//! Channel inputs come either as the full physical set (`d`, `P`, `eta`,
//! `B`, `noise_dbm`, `r`, optionally `pathloss_coeff`/`pathloss_exp`) or as
//! the direct pair (`beta`, `pi`); mixing the two is rejected. Remaining
//! keys: `scheme`, `delta`, `seed`, `reps`, `horizon`, `stop`,
//! `success_mode`, `out`, `format`. Lines starting with `#` are comments;
//! unknown keys are hard errors.

use serde::{Deserialize, Serialize};
use std::path::Path;
use thiserror::Error;

use crate::model::{PhysicalParams, SchemeKind};
use crate::sim::{StopKind, SuccessMode};

/// Default base seed for every run; fixed so that published outputs are
/// replayable without flags.
pub const DEFAULT_SEED: u64 = 42;

pub const DEFAULT_OUT_ENV: &str = "AOI_LAB_OUT";

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { key: String, line: usize },
    #[error("line {line}: key `{key}`: {message}")]
    BadValue {
        key: String,
        line: usize,
        message: String,
    },
    #[error("line {line}: expected `key = value`")]
    Malformed { line: usize },
    #[error("channel is over-specified: give either beta/pi or the physical set, not both")]
    MixedChannel,
    #[error("beta and pi must be given together")]
    HalfDirectChannel,
    #[error("physical channel is missing `{0}`")]
    MissingPhysical(&'static str),
    #[error("bad flag value for `{key}`: {message}")]
    BadFlag { key: &'static str, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    Json,
}

impl std::str::FromStr for OutputFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            other => Err(format!("unknown format `{other}` (expected csv or json)")),
        }
    }
}

/// How the channel is specified.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChannelSpec {
    Physical(PhysicalParams),
    Direct { beta: f64, pi: f64 },
}

/// Fully resolved configuration of one run, embedded verbatim in every JSON
/// report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub channel: ChannelSpec,
    pub scheme: SchemeKind,
    pub delta: f64,
    pub stop: StopKind,
    pub horizon: u64,
    pub reps: u64,
    pub seed: u64,
    pub success_mode: SuccessMode,
    pub out_dir: String,
    pub formats: Vec<OutputFormat>,
}

/// Raw option set from one source (a config file or the command line);
/// later sources override earlier ones field by field.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConfigOptions {
    pub d: Option<f64>,
    pub p: Option<f64>,
    pub eta: Option<f64>,
    pub b: Option<f64>,
    pub noise_dbm: Option<f64>,
    pub r: Option<f64>,
    pub pathloss_coeff: Option<f64>,
    pub pathloss_exp: Option<f64>,
    pub beta: Option<f64>,
    pub pi: Option<f64>,
    pub scheme: Option<SchemeKind>,
    pub delta: Option<f64>,
    pub seed: Option<u64>,
    pub reps: Option<u64>,
    pub horizon: Option<u64>,
    pub stop: Option<StopKind>,
    pub success_mode: Option<SuccessMode>,
    pub out: Option<String>,
    pub formats: Option<Vec<OutputFormat>>,
}

impl ConfigOptions {
    /// Field-wise merge with `over` taking precedence.
    pub fn overridden_by(self, over: &ConfigOptions) -> ConfigOptions {
        macro_rules! pick {
            ($field:ident) => {
                over.$field.clone().or(self.$field)
            };
        }
        ConfigOptions {
            d: pick!(d),
            p: pick!(p),
            eta: pick!(eta),
            b: pick!(b),
            noise_dbm: pick!(noise_dbm),
            r: pick!(r),
            pathloss_coeff: pick!(pathloss_coeff),
            pathloss_exp: pick!(pathloss_exp),
            beta: pick!(beta),
            pi: pick!(pi),
            scheme: pick!(scheme),
            delta: pick!(delta),
            seed: pick!(seed),
            reps: pick!(reps),
            horizon: pick!(horizon),
            stop: pick!(stop),
            success_mode: pick!(success_mode),
            out: pick!(out),
            formats: pick!(formats),
        }
    }

    fn any_physical(&self) -> bool {
        self.d.is_some()
            || self.p.is_some()
            || self.eta.is_some()
            || self.b.is_some()
            || self.noise_dbm.is_some()
            || self.r.is_some()
    }

    fn any_direct(&self) -> bool {
        self.beta.is_some() || self.pi.is_some()
    }

    /// Resolve into a full [`RunConfig`], applying the given per-command
    /// defaults for the simulation sizing. With no channel keys at all the
    /// reference link budget is used.
    pub fn finalize(&self, default_reps: u64, default_horizon: u64) -> Result<RunConfig, ConfigError> {
        if self.any_physical() && self.any_direct() {
            return Err(ConfigError::MixedChannel);
        }
        let channel = if self.any_direct() {
            match (self.beta, self.pi) {
                (Some(beta), Some(pi)) => ChannelSpec::Direct { beta, pi },
                _ => return Err(ConfigError::HalfDirectChannel),
            }
        } else if self.any_physical() {
            ChannelSpec::Physical(PhysicalParams {
                distance_m: self.d.ok_or(ConfigError::MissingPhysical("d"))?,
                tx_power_w: self.p.ok_or(ConfigError::MissingPhysical("P"))?,
                conversion_eff: self.eta.ok_or(ConfigError::MissingPhysical("eta"))?,
                battery_capacity_j: self.b.ok_or(ConfigError::MissingPhysical("B"))?,
                noise_dbm: self.noise_dbm.ok_or(ConfigError::MissingPhysical("noise_dbm"))?,
                spectral_eff_bpcu: self.r.ok_or(ConfigError::MissingPhysical("r"))?,
                pathloss_coeff: self.pathloss_coeff.unwrap_or(1e3),
                pathloss_exp: self.pathloss_exp.unwrap_or(2.2),
            })
        } else {
            ChannelSpec::Physical(PhysicalParams {
                pathloss_coeff: self.pathloss_coeff.unwrap_or(1e3),
                pathloss_exp: self.pathloss_exp.unwrap_or(2.2),
                ..PhysicalParams::default()
            })
        };
        let out_dir = self
            .out
            .clone()
            .or_else(|| std::env::var(DEFAULT_OUT_ENV).ok())
            .unwrap_or_else(|| "./out".to_string());
        Ok(RunConfig {
            channel,
            scheme: self.scheme.unwrap_or(SchemeKind::Randomized),
            delta: self.delta.unwrap_or(0.1),
            stop: self.stop.unwrap_or(StopKind::Statuses),
            horizon: self.horizon.unwrap_or(default_horizon),
            reps: self.reps.unwrap_or(default_reps),
            seed: self.seed.unwrap_or(DEFAULT_SEED),
            success_mode: self.success_mode.unwrap_or(SuccessMode::Bernoulli),
            out_dir,
            formats: self
                .formats
                .clone()
                .unwrap_or_else(|| vec![OutputFormat::Csv, OutputFormat::Json]),
        })
    }
}

fn parse_num<T: std::str::FromStr>(key: &str, value: &str, line: usize) -> Result<T, ConfigError>
where
    T::Err: std::fmt::Display,
{
    value.parse().map_err(|e: T::Err| ConfigError::BadValue {
        key: key.to_string(),
        line,
        message: e.to_string(),
    })
}

/// Parse a `key = value` config file. Later duplicates override earlier
/// ones; unknown keys are hard errors naming the offending key.
pub fn load_config(path: &Path) -> Result<ConfigOptions, ConfigError> {
    let text = std::fs::read_to_string(path)?;
    let mut opts = ConfigOptions::default();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (key, value) = content
            .split_once('=')
            .ok_or(ConfigError::Malformed { line })?;
        let (key, value) = (key.trim(), value.trim());
        let bad = |message: String| ConfigError::BadValue {
            key: key.to_string(),
            line,
            message,
        };
        match key {
            "d" => opts.d = Some(parse_num(key, value, line)?),
            "P" => opts.p = Some(parse_num(key, value, line)?),
            "eta" => opts.eta = Some(parse_num(key, value, line)?),
            "B" => opts.b = Some(parse_num(key, value, line)?),
            "noise_dbm" => opts.noise_dbm = Some(parse_num(key, value, line)?),
            "r" => opts.r = Some(parse_num(key, value, line)?),
            "pathloss_coeff" => opts.pathloss_coeff = Some(parse_num(key, value, line)?),
            "pathloss_exp" => opts.pathloss_exp = Some(parse_num(key, value, line)?),
            "beta" => opts.beta = Some(parse_num(key, value, line)?),
            "pi" => opts.pi = Some(parse_num(key, value, line)?),
            "scheme" => opts.scheme = Some(value.parse().map_err(bad)?),
            "delta" => opts.delta = Some(parse_num(key, value, line)?),
            "seed" => opts.seed = Some(parse_num(key, value, line)?),
            "reps" => opts.reps = Some(parse_num(key, value, line)?),
            "horizon" => opts.horizon = Some(parse_num(key, value, line)?),
            "stop" => opts.stop = Some(value.parse().map_err(bad)?),
            "success_mode" => opts.success_mode = Some(value.parse().map_err(bad)?),
            "out" => opts.out = Some(value.to_string()),
            "format" => {
                let formats = value
                    .split(',')
                    .map(|s| s.trim().parse())
                    .collect::<Result<Vec<_>, _>>()
                    .map_err(bad)?;
                opts.formats = Some(formats);
            }
            _ => {
                return Err(ConfigError::UnknownKey {
                    key: key.to_string(),
                    line,
                })
            }
        }
    }
    Ok(opts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write_temp(contents: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(contents.as_bytes()).unwrap();
        f
    }

    #[test]
    fn loads_reference_setting() {
        let f = write_temp(
            "# reference link budget\nd = 20\nP = 1\neta = 0.5\nB = 1e-3\nnoise_dbm = -50\nr = 0.05\n",
        );
        let opts = load_config(f.path()).unwrap();
        let cfg = opts.finalize(4, 50_000).unwrap();
        match cfg.channel {
            ChannelSpec::Physical(p) => {
                assert_eq!(p, PhysicalParams::default());
            }
            _ => panic!("expected physical channel"),
        }
        assert_eq!(cfg.seed, DEFAULT_SEED);
        assert_eq!(cfg.reps, 4);
    }

    #[test]
    fn flags_override_file() {
        let f = write_temp("beta = 87\npi = 0.65\nseed = 1\n");
        let file = load_config(f.path()).unwrap();
        let flags = ConfigOptions {
            pi: Some(0.7),
            beta: Some(90.0),
            ..Default::default()
        };
        let cfg = file.overridden_by(&flags).finalize(4, 50_000).unwrap();
        assert_eq!(cfg.channel, ChannelSpec::Direct { beta: 90.0, pi: 0.7 });
        assert_eq!(cfg.seed, 1);
    }

    #[test]
    fn empty_file_plus_flags_is_valid() {
        let f = write_temp("");
        let file = load_config(f.path()).unwrap();
        let flags = ConfigOptions {
            beta: Some(87.0),
            pi: Some(0.65),
            scheme: Some(SchemeKind::ZeroError),
            ..Default::default()
        };
        let cfg = file.overridden_by(&flags).finalize(4, 50_000).unwrap();
        assert_eq!(cfg.channel, ChannelSpec::Direct { beta: 87.0, pi: 0.65 });
        assert_eq!(cfg.scheme, SchemeKind::ZeroError);
    }

    #[test]
    fn rejects_partial_mixes() {
        let f = write_temp("beta = 87\nd = 20\n");
        let opts = load_config(f.path()).unwrap();
        assert!(matches!(opts.finalize(4, 1).unwrap_err(), ConfigError::MixedChannel));

        let f = write_temp("beta = 87\n");
        let opts = load_config(f.path()).unwrap();
        assert!(matches!(
            opts.finalize(4, 1).unwrap_err(),
            ConfigError::HalfDirectChannel
        ));

        let f = write_temp("d = 20\nP = 1\n");
        let opts = load_config(f.path()).unwrap();
        assert!(matches!(
            opts.finalize(4, 1).unwrap_err(),
            ConfigError::MissingPhysical("eta")
        ));
    }

    #[test]
    fn rejects_unknown_keys_and_bad_values() {
        let f = write_temp("velocity = 3\n");
        match load_config(f.path()).unwrap_err() {
            ConfigError::UnknownKey { key, line } => {
                assert_eq!(key, "velocity");
                assert_eq!(line, 1);
            }
            other => panic!("unexpected error {other:?}"),
        }

        let f = write_temp("d = snail\n");
        assert!(matches!(load_config(f.path()).unwrap_err(), ConfigError::BadValue { .. }));

        let f = write_temp("just a line\n");
        assert!(matches!(load_config(f.path()).unwrap_err(), ConfigError::Malformed { line: 1 }));
    }

    #[test]
    fn config_round_trips_through_json() {
        let cfg = ConfigOptions {
            beta: Some(87.0),
            pi: Some(0.65),
            scheme: Some(SchemeKind::Deterministic),
            delta: Some(0.05),
            formats: Some(vec![OutputFormat::Json]),
            ..Default::default()
        }
        .finalize(4, 50_000)
        .unwrap();
        let json = serde_json::to_string(&cfg).unwrap();
        let back: RunConfig = serde_json::from_str(&json).unwrap();
        assert_eq!(cfg, back);
    }
}
