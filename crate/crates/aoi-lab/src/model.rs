//! Physical link parameters and retransmission policies.
//!
//! Everything downstream runs on the dimensionless pair `(beta, pi)`:
//! `beta` fixes the battery-recharge distribution (mean `1 + beta` slots)
//! and `pi` is the per-transmission success probability over the fading
//! data channel. The pair is either derived from a full set of physical
//! parameters or supplied directly.

use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("{name} must be positive (got {value})")]
    NonPositive { name: &'static str, value: f64 },
    #[error("{name} must lie in {range} (got {value})")]
    OutOfRange {
        name: &'static str,
        range: &'static str,
        value: f64,
    },
    #[error("derived success probability is degenerate (pi = {pi}); adjust the link budget")]
    DegenerateChannel { pi: f64 },
    #[error("retry limit must be at least 1")]
    ZeroRetryLimit,
    #[error("scheme `{0}` needs a failure-probability target delta")]
    SchemeNeedsDelta(SchemeKind),
}

fn require_positive(name: &'static str, value: f64) -> Result<(), ModelError> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(ModelError::NonPositive { name, value })
    }
}

fn require_probability(name: &'static str, value: f64) -> Result<(), ModelError> {
    if value > 0.0 && value < 1.0 {
        Ok(())
    } else {
        Err(ModelError::OutOfRange {
            name,
            range: "(0, 1)",
            value,
        })
    }
}

/// dBm to watts: `10^((x - 30) / 10)`.
pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

/// `(1 - pi)^k` via `exp(k ln(1 - pi))`, stable for limits up to 1e4 and
/// beyond; `k = 0` gives 1.
pub(crate) fn failure_pow(q: f64, k: u32) -> f64 {
    if k == 0 {
        1.0
    } else {
        (f64::from(k) * q.ln()).exp()
    }
}

// ============================================================================
// Parameters
// ============================================================================

/// Raw physical inputs of the three-node link.
///
/// `pathloss_exp` is the path-loss exponent (kept distinct from the
/// randomized scheme's mixing probability, which is also conventionally
/// called alpha).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalParams {
    pub distance_m: f64,
    pub tx_power_w: f64,
    pub conversion_eff: f64,
    pub battery_capacity_j: f64,
    pub noise_dbm: f64,
    pub spectral_eff_bpcu: f64,
    pub pathloss_coeff: f64,
    pub pathloss_exp: f64,
}

impl Default for PhysicalParams {
    /// Reference link budget used by the bundled tables and sweeps:
    /// d = 20 m, P = 1 W, eta = 0.5, B = 1 mJ, noise -50 dBm, r = 0.05 BPCU,
    /// fading rate 10^3 d^2.2.
    fn default() -> Self {
        Self {
            distance_m: 20.0,
            tx_power_w: 1.0,
            conversion_eff: 0.5,
            battery_capacity_j: 1e-3,
            noise_dbm: -50.0,
            spectral_eff_bpcu: 0.05,
            pathloss_coeff: 1e3,
            pathloss_exp: 2.2,
        }
    }
}

impl PhysicalParams {
    pub fn with_battery(mut self, battery_capacity_j: f64) -> Self {
        self.battery_capacity_j = battery_capacity_j;
        self
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        require_positive("distance_m", self.distance_m)?;
        require_positive("tx_power_w", self.tx_power_w)?;
        require_positive("battery_capacity_j", self.battery_capacity_j)?;
        require_positive("spectral_eff_bpcu", self.spectral_eff_bpcu)?;
        require_positive("pathloss_coeff", self.pathloss_coeff)?;
        if !self.noise_dbm.is_finite() {
            return Err(ModelError::OutOfRange {
                name: "noise_dbm",
                range: "finite",
                value: self.noise_dbm,
            });
        }
        if !self.pathloss_exp.is_finite() {
            return Err(ModelError::OutOfRange {
                name: "pathloss_exp",
                range: "finite",
                value: self.pathloss_exp,
            });
        }
        if !(self.conversion_eff > 0.0 && self.conversion_eff <= 1.0) {
            return Err(ModelError::OutOfRange {
                name: "conversion_eff",
                range: "(0, 1]",
                value: self.conversion_eff,
            });
        }
        Ok(())
    }
}

/// Derived channel parameters consumed by both engines.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelParams {
    /// Exponential rate of the fading power on both channels.
    pub lambda: f64,
    /// `lambda * B / (eta * P)`; mean recharge time is `1 + beta` slots.
    pub beta: f64,
    /// Per-transmission success probability.
    pub pi: f64,
    /// Receiver noise power in watts.
    pub noise_w: f64,
    pub battery_capacity_j: f64,
}

/// Derive `(lambda, beta, pi)` from physical parameters.
///
/// `lambda = coeff * d^exp`, `beta = lambda B / (eta P)` and
/// `pi = exp(-lambda (2^r - 1) sigma^2 / B)`, with the noise floor converted
/// from dBm. Parameter combinations that drive `pi` out of (0, 1) are
/// rejected.
pub fn derive_channel(p: &PhysicalParams) -> Result<ChannelParams, ModelError> {
    p.validate()?;
    let lambda = p.pathloss_coeff * p.distance_m.powf(p.pathloss_exp);
    let noise_w = dbm_to_watts(p.noise_dbm);
    let beta = lambda * p.battery_capacity_j / (p.conversion_eff * p.tx_power_w);
    let snr_gap = (p.spectral_eff_bpcu * std::f64::consts::LN_2).exp_m1(); // 2^r - 1
    let pi = (-lambda * snr_gap * noise_w / p.battery_capacity_j).exp();
    if !(pi > 0.0 && pi < 1.0) {
        return Err(ModelError::DegenerateChannel { pi });
    }
    Ok(ChannelParams {
        lambda,
        beta,
        pi,
        noise_w,
        battery_capacity_j: p.battery_capacity_j,
    })
}

impl ChannelParams {
    /// Build a channel directly from the dimensionless pair.
    ///
    /// The remaining fields are filled with a normalized budget (unit
    /// battery and harvest power, `lambda = beta`, noise back-solved at the
    /// reference spectral efficiency) so the struct stays self-consistent.
    /// Unlike [`derive_channel`], `pi = 1.0` is accepted here: a
    /// certain-success channel is useful for degenerate simulator checks.
    pub fn from_beta_pi(beta: f64, pi: f64) -> Result<Self, ModelError> {
        require_positive("beta", beta)?;
        if !(pi > 0.0 && pi <= 1.0) {
            return Err(ModelError::OutOfRange {
                name: "pi",
                range: "(0, 1]",
                value: pi,
            });
        }
        let snr_gap = (0.05 * std::f64::consts::LN_2).exp_m1();
        let noise_w = if pi < 1.0 { -pi.ln() / (beta * snr_gap) } else { 0.0 };
        Ok(Self {
            lambda: beta,
            beta,
            pi,
            noise_w,
            battery_capacity_j: 1.0,
        })
    }
}

// ============================================================================
// Retry policies
// ============================================================================

/// Smallest retry limit whose residual failure probability meets `delta`:
/// `max(1, ceil(log_{1-pi} delta))`, so `(1-pi)^k <= delta` whenever
/// `delta <= 1 - pi`.
///
/// The log ratio is snapped to the nearest integer when within 1e-9 of it,
/// so a `delta` sitting exactly on a power of `1 - pi` maps to that power's
/// exponent instead of picking up a spurious extra attempt from float
/// rounding.
pub fn retry_limit(pi: f64, delta: f64) -> Result<u32, ModelError> {
    require_probability("pi", pi)?;
    require_probability("delta", delta)?;
    let ratio = delta.ln() / (1.0 - pi).ln();
    let k = if (ratio - ratio.round()).abs() < 1e-9 {
        ratio.round()
    } else {
        ratio.ceil()
    };
    Ok(k.max(1.0) as u32)
}

/// Retry-limit scheme parameters: limit `k`, the residual failure
/// probabilities `p1 = (1-pi)^k` and `p2 = (1-pi)^(k-1)`, and the mixing
/// probability `alpha` of choosing `k` over `k-1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RetryParams {
    pub k: u32,
    pub p1: f64,
    pub p2: f64,
    pub alpha: f64,
}

impl RetryParams {
    /// Parameters for a fixed limit `k` (no mixing; `alpha = 1`).
    pub fn fixed(pi: f64, k: u32) -> Result<Self, ModelError> {
        require_probability("pi", pi)?;
        if k == 0 {
            return Err(ModelError::ZeroRetryLimit);
        }
        let q = 1.0 - pi;
        Ok(Self {
            k,
            p1: failure_pow(q, k),
            p2: failure_pow(q, k - 1),
            alpha: 1.0,
        })
    }

    /// Mixing parameters for an explicit limit `k`:
    /// `alpha = (delta - p2) / (p1 - p2)`, clamped to [0, 1] against float
    /// drift at the interval endpoints. `alpha p1 + (1-alpha) p2 = delta`
    /// holds exactly whenever `delta` lies between the two powers.
    pub fn with_limit(pi: f64, k: u32, delta: f64) -> Result<Self, ModelError> {
        let mut params = Self::fixed(pi, k)?;
        require_probability("delta", delta)?;
        params.alpha = if k == 1 {
            // a status is sent at least once; no mixing below one attempt
            1.0
        } else {
            ((delta - params.p2) / (params.p1 - params.p2)).clamp(0.0, 1.0)
        };
        Ok(params)
    }

    /// Residual failure probability of the mixed scheme.
    pub fn mixed_failure(&self) -> f64 {
        self.alpha * self.p1 + (1.0 - self.alpha) * self.p2
    }
}

/// Retry parameters for the randomized scheme at target `delta`: the limit
/// comes from [`retry_limit`]; when it is 1 the scheme degenerates to a
/// single attempt per status (`alpha = 1`).
pub fn randomized_retry_params(pi: f64, delta: f64) -> Result<RetryParams, ModelError> {
    RetryParams::with_limit(pi, retry_limit(pi, delta)?, delta)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SchemeKind {
    SingleShot,
    Deterministic,
    Randomized,
    ZeroError,
}

impl SchemeKind {
    pub fn label(&self) -> &'static str {
        match self {
            SchemeKind::SingleShot => "single-shot",
            SchemeKind::Deterministic => "det",
            SchemeKind::Randomized => "rand",
            SchemeKind::ZeroError => "zero-error",
        }
    }
}

impl fmt::Display for SchemeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for SchemeKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "single-shot" => Ok(SchemeKind::SingleShot),
            "det" | "deterministic" => Ok(SchemeKind::Deterministic),
            "rand" | "randomized" => Ok(SchemeKind::Randomized),
            "zero-error" => Ok(SchemeKind::ZeroError),
            other => Err(format!(
                "unknown scheme `{other}` (expected single-shot, det, rand or zero-error)"
            )),
        }
    }
}

/// A resolved retransmission policy: the scheme kind plus, where relevant,
/// its failure target and derived retry parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SchemePolicy {
    pub kind: SchemeKind,
    pub delta: Option<f64>,
    pub retry: Option<RetryParams>,
}

impl SchemePolicy {
    pub fn single_shot() -> Self {
        Self {
            kind: SchemeKind::SingleShot,
            delta: None,
            retry: None,
        }
    }

    pub fn zero_error() -> Self {
        Self {
            kind: SchemeKind::ZeroError,
            delta: None,
            retry: None,
        }
    }

    pub fn deterministic(pi: f64, delta: f64) -> Result<Self, ModelError> {
        let k = retry_limit(pi, delta)?;
        Ok(Self {
            kind: SchemeKind::Deterministic,
            delta: Some(delta),
            retry: Some(RetryParams::fixed(pi, k)?),
        })
    }

    pub fn randomized(pi: f64, delta: f64) -> Result<Self, ModelError> {
        Ok(Self {
            kind: SchemeKind::Randomized,
            delta: Some(delta),
            retry: Some(randomized_retry_params(pi, delta)?),
        })
    }

    /// Resolve a `(kind, delta)` request against a concrete channel.
    ///
    /// For the delta-driven kinds, `delta = 0` is the never-give-up scheme
    /// and `delta >= 1` the single-shot baseline, so sweeps can span the
    /// whole reliability axis with one parameter.
    pub fn resolve(kind: SchemeKind, delta: Option<f64>, pi: f64) -> Result<Self, ModelError> {
        match kind {
            SchemeKind::SingleShot => Ok(Self::single_shot()),
            SchemeKind::ZeroError => Ok(Self::zero_error()),
            SchemeKind::Deterministic | SchemeKind::Randomized => {
                let delta = delta.ok_or(ModelError::SchemeNeedsDelta(kind))?;
                if delta == 0.0 {
                    return Ok(Self::zero_error());
                }
                if delta >= 1.0 {
                    return Ok(Self::single_shot());
                }
                match kind {
                    SchemeKind::Deterministic => Self::deterministic(pi, delta),
                    _ => Self::randomized(pi, delta),
                }
            }
        }
    }

    /// Delivery probability this policy guarantees on a channel with
    /// per-transmission success `pi`.
    pub fn guaranteed_reliability(&self, pi: f64) -> f64 {
        match self.kind {
            SchemeKind::SingleShot => pi,
            SchemeKind::ZeroError => 1.0,
            SchemeKind::Deterministic => 1.0 - self.retry.map_or(1.0 - pi, |r| r.p1),
            SchemeKind::Randomized => match self.retry {
                Some(r) if r.k > 1 => 1.0 - r.mixed_failure(),
                _ => pi,
            },
        }
    }
}
