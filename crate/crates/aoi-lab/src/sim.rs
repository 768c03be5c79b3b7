//! Slot-level Monte Carlo of the harvest/transmit/feedback loop.
//!
//! One slot runs through a fixed phase order: if the battery filled up by
//! the end of the previous slot, the pending status occupies this slot's
//! transmission (draining the battery); harvesting continues regardless;
//! the transmission resolves at the slot's end, where error-free feedback
//! lands instantly; and a full battery at the slot's end triggers sensing a
//! fresh status whenever the previous one is delivered or out of attempts.
//! Delivery therefore trails sensing by at least one slot, and the receiver
//! age at slot `t` is `t - birth of the freshest delivered status`.
//!
//! Determinism contract: an episode is a pure function of `(channel,
//! scheme, stop rule, seed, success mode)`. Draws come from ChaCha8 through
//! inverse-CDF transforms in a fixed per-slot order (harvest, then success
//! resolution, then retry-limit choice), so equal seeds give bit-identical
//! results across runs, platforms and feature flags. Replications derive
//! their seeds from the base seed via [`mix_seed`] and merge in replication
//! order, so the aggregate is independent of the execution schedule.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
#[cfg(feature = "parallel")]
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;
use thiserror::Error;

use crate::model::{ChannelParams, ModelError, SchemeKind, SchemePolicy};
use crate::stats;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("stop rule limit must be at least 1")]
    ZeroStopLimit,
    #[error("replication count must be at least 1")]
    ZeroReps,
    #[error("policy `{0}` is missing its retry parameters")]
    IncompletePolicy(SchemeKind),
    #[error("need at least {need} charge intervals, episode produced {have}")]
    InsufficientChargeSamples { have: u64, need: u64 },
    #[error(transparent)]
    Model(#[from] ModelError),
}

// ============================================================================
// Run controls
// ============================================================================

/// How a transmission outcome is drawn.
///
/// The two modes induce the same per-transmission success probability; the
/// fading mode draws the channel power explicitly and checks the rate
/// threshold, the Bernoulli mode draws the outcome directly (the default).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SuccessMode {
    Bernoulli,
    FadingLevel,
}

impl FromStr for SuccessMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "bernoulli" => Ok(SuccessMode::Bernoulli),
            "fading" | "fading-level" => Ok(SuccessMode::FadingLevel),
            other => Err(format!("unknown success mode `{other}` (expected bernoulli or fading)")),
        }
    }
}

impl fmt::Display for SuccessMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SuccessMode::Bernoulli => "bernoulli",
            SuccessMode::FadingLevel => "fading",
        })
    }
}

/// Episode termination rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StopRule {
    /// Run exactly this many slots.
    MaxSlots(u64),
    /// Stop once this many statuses have been sensed and resolved; the
    /// episode ends right before the following sense, so every counted
    /// status has either been delivered or given up on.
    MaxStatusesSensed(u64),
    /// Stop at this many successful deliveries (closing a renewal cycle).
    MaxSuccesses(u64),
}

impl StopRule {
    pub fn limit(&self) -> u64 {
        match self {
            StopRule::MaxSlots(n) | StopRule::MaxStatusesSensed(n) | StopRule::MaxSuccesses(n) => *n,
        }
    }
}

/// Stop-rule kind, pairing with a limit from the run configuration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StopKind {
    Slots,
    Statuses,
    Successes,
}

impl StopKind {
    pub fn with_limit(self, limit: u64) -> StopRule {
        match self {
            StopKind::Slots => StopRule::MaxSlots(limit),
            StopKind::Statuses => StopRule::MaxStatusesSensed(limit),
            StopKind::Successes => StopRule::MaxSuccesses(limit),
        }
    }
}

impl FromStr for StopKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "slots" => Ok(StopKind::Slots),
            "statuses" => Ok(StopKind::Statuses),
            "successes" => Ok(StopKind::Successes),
            other => Err(format!(
                "unknown stop rule `{other}` (expected slots, statuses or successes)"
            )),
        }
    }
}

impl fmt::Display for StopKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StopKind::Slots => "slots",
            StopKind::Statuses => "statuses",
            StopKind::Successes => "successes",
        })
    }
}

// ============================================================================
// Episode state and results
// ============================================================================

/// Live per-slot state of the sensor/receiver pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimState {
    /// Completed slot index.
    pub slot: u64,
    /// Stored energy at the slot boundary, in the channel's battery units.
    pub battery_j: f64,
    /// Birth slot of the pending status, if one is held.
    pub current_status_birth: Option<u64>,
    /// Transmissions already spent on the pending status.
    pub attempts_used: u64,
    /// Attempt budget for the pending status (`u64::MAX` = never give up).
    pub attempt_limit: u64,
    /// Receiver-side age, 0 until the first delivery.
    pub receiver_aoi: u64,
    /// Birth slot of the freshest delivered status.
    pub last_delivered_birth: Option<u64>,
}

impl SimState {
    fn new() -> Self {
        Self {
            slot: 0,
            battery_j: 0.0,
            current_status_birth: None,
            attempts_used: 0,
            attempt_limit: 0,
            receiver_aoi: 0,
            last_delivered_birth: None,
        }
    }
}

/// One completed renewal cycle between consecutive deliveries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CycleRecord {
    /// Slots between the two deliveries.
    pub intersuccess: u64,
    /// Staleness head: age the earlier delivered status had accumulated
    /// (its delivery slot minus its birth slot minus one).
    pub stale_head: u64,
    /// Transmissions spent inside the cycle, over all statuses.
    pub attempts: u64,
}

impl CycleRecord {
    /// Exact area contribution of this cycle to the receiver age curve:
    /// `H X + X(X+1)/2`.
    pub fn area(&self) -> u128 {
        let x = u128::from(self.intersuccess);
        u128::from(self.stale_head) * x + x * (x + 1) / 2
    }
}

/// Outcome of a single seeded episode.
#[derive(Debug, Clone, PartialEq)]
pub struct SimResult {
    pub seed: u64,
    pub slots_run: u64,
    pub statuses_sensed: u64,
    pub statuses_delivered: u64,
    /// `statuses_delivered / statuses_sensed`.
    pub empirical_reliability: f64,
    /// Time-average receiver age over the complete renewal cycles.
    pub empirical_avg_aoi: f64,
    /// Per-cycle records, in delivery order.
    pub cycles: Vec<CycleRecord>,
    /// Sum of the per-slot receiver age over the measured cycles,
    /// accumulated slot by slot (cross-checkable against the per-cycle
    /// areas).
    pub aoi_area_sum: u128,
    /// Slots covered by the measured cycles.
    pub measured_slots: u64,
    /// Full-recharge bookkeeping: count and power sums of the observed
    /// durations (slots).
    pub charge_count: u64,
    pub charge_sum: f64,
    pub charge_sum_sq: f64,
    pub charge_sum_4th: f64,
    /// Largest attempt count any single status consumed.
    pub max_status_attempts: u64,
    /// Randomized scheme only: how often the larger / smaller limit was drawn.
    pub limit_draws_high: u64,
    pub limit_draws_low: u64,
}

/// Empirical recharge-duration moments with normal-approximation errors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChargeEstimate {
    pub count: u64,
    pub mean: f64,
    pub second: f64,
    pub mean_stderr: f64,
    pub second_stderr: f64,
}

/// Sample moments of the observed full-recharge durations.
pub fn empirical_charge_moments(result: &SimResult) -> Result<ChargeEstimate, SimError> {
    const NEED: u64 = 1000;
    if result.charge_count < NEED {
        return Err(SimError::InsufficientChargeSamples {
            have: result.charge_count,
            need: NEED,
        });
    }
    let n = result.charge_count as f64;
    Ok(ChargeEstimate {
        count: result.charge_count,
        mean: result.charge_sum / n,
        second: result.charge_sum_sq / n,
        mean_stderr: stats::stderr_from_sums(n, result.charge_sum, result.charge_sum_sq),
        second_stderr: stats::stderr_from_sums(n, result.charge_sum_sq, result.charge_sum_4th),
    })
}

// ============================================================================
// Episode loop
// ============================================================================

/// Inverse-CDF unit-rate exponential draw; finite by construction since the
/// uniform lies in [0, 1).
#[inline]
fn exp_draw<R: Rng>(rng: &mut R) -> f64 {
    let u: f64 = rng.gen();
    -(1.0 - u).ln()
}

const UNBOUNDED: u64 = u64::MAX;

struct LimitDrawer {
    kind: SchemeKind,
    k: u64,
    alpha: f64,
}

impl LimitDrawer {
    fn new(policy: &SchemePolicy) -> Result<Self, SimError> {
        let (k, alpha) = match policy.kind {
            SchemeKind::SingleShot => (1, 1.0),
            SchemeKind::ZeroError => (UNBOUNDED, 1.0),
            SchemeKind::Deterministic | SchemeKind::Randomized => {
                let retry = policy.retry.ok_or(SimError::IncompletePolicy(policy.kind))?;
                (u64::from(retry.k), retry.alpha)
            }
        };
        Ok(Self { kind: policy.kind, k, alpha })
    }

    /// Attempt budget for a freshly sensed status. Draws one uniform only
    /// when the randomized scheme actually mixes two limits.
    #[inline]
    fn draw<R: Rng>(&self, rng: &mut R, high: &mut u64, low: &mut u64) -> u64 {
        if self.kind == SchemeKind::Randomized && self.k > 1 {
            if rng.gen::<f64>() < self.alpha {
                *high += 1;
                self.k
            } else {
                *low += 1;
                self.k - 1
            }
        } else {
            self.k
        }
    }
}

/// Run one seeded episode and collect cycle-level statistics.
///
/// Age measurement starts at the first delivery and covers complete cycles
/// only; the warm-up before the first delivery and any trailing incomplete
/// cycle are excluded. Harvest lost to a full battery is discarded, and a
/// transmission drains whatever the battery holds.
pub fn run_episode(
    chan: &ChannelParams,
    scheme: &SchemePolicy,
    stop: StopRule,
    seed: u64,
    mode: SuccessMode,
) -> Result<SimResult, SimError> {
    if stop.limit() == 0 {
        return Err(SimError::ZeroStopLimit);
    }
    let drawer = LimitDrawer::new(scheme)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let cap = chan.battery_capacity_j;
    let fill_scale = cap / chan.beta; // mean harvested energy per slot
    let fade_threshold = -chan.pi.ln();

    let mut state = SimState::new();
    let mut full = false;
    let mut pending_resolved = true; // delivered or given up; sense on next full charge
    let mut last_delivery: Option<(u64, u64)> = None; // (slot, birth)
    let mut attempts_in_cycle: u64 = 0;
    let mut area_acc: u128 = 0;

    let mut cycles = Vec::new();
    let mut aoi_area_sum: u128 = 0;
    let mut measured_slots: u64 = 0;
    let mut sensed: u64 = 0;
    let mut delivered: u64 = 0;
    let mut last_full_slot: u64 = 0;
    let (mut charge_count, mut charge_sum, mut charge_sum_sq, mut charge_sum_4th) =
        (0u64, 0.0f64, 0.0f64, 0.0f64);
    let mut max_attempts: u64 = 0;
    let (mut limit_high, mut limit_low) = (0u64, 0u64);

    loop {
        if let StopRule::MaxSlots(n) = stop {
            if state.slot >= n {
                break;
            }
        }
        let t = state.slot + 1;
        state.slot = t;

        // transmission occupies the slot after the battery filled up
        let transmitting = full;
        if transmitting {
            state.battery_j = 0.0;
            full = false;
        }

        // harvest continues through transmission slots; overflow is lost
        state.battery_j += fill_scale * exp_draw(&mut rng);
        if state.battery_j >= cap {
            state.battery_j = cap;
            full = true;
        }

        if transmitting {
            state.attempts_used += 1;
            attempts_in_cycle += 1;
            max_attempts = max_attempts.max(state.attempts_used);
            let success = match mode {
                SuccessMode::Bernoulli => rng.gen::<f64>() < chan.pi,
                SuccessMode::FadingLevel => exp_draw(&mut rng) > fade_threshold,
            };
            if success {
                delivered += 1;
                let birth = state.current_status_birth.expect("transmitting without a status");
                if let Some((prev_slot, prev_birth)) = last_delivery {
                    cycles.push(CycleRecord {
                        intersuccess: t - prev_slot,
                        stale_head: prev_slot - prev_birth - 1,
                        attempts: attempts_in_cycle,
                    });
                    aoi_area_sum += area_acc;
                    measured_slots += t - prev_slot;
                }
                area_acc = 0;
                last_delivery = Some((t, birth));
                state.last_delivered_birth = Some(birth);
                attempts_in_cycle = 0;
                pending_resolved = true;
            } else if state.attempts_used >= state.attempt_limit {
                pending_resolved = true; // gave up on this status
            }
        }

        if let Some((_, fresh_birth)) = last_delivery {
            state.receiver_aoi = t - fresh_birth;
            area_acc += u128::from(state.receiver_aoi);
        }

        if full {
            let duration = t - last_full_slot;
            last_full_slot = t;
            let d = duration as f64;
            charge_count += 1;
            charge_sum += d;
            charge_sum_sq += d * d;
            charge_sum_4th += d * d * d * d;

            if pending_resolved {
                if let StopRule::MaxStatusesSensed(n) = stop {
                    if sensed >= n {
                        break;
                    }
                }
                state.current_status_birth = Some(t);
                state.attempts_used = 0;
                state.attempt_limit = drawer.draw(&mut rng, &mut limit_high, &mut limit_low);
                pending_resolved = false;
                sensed += 1;
            }
        }

        if let StopRule::MaxSuccesses(n) = stop {
            if delivered >= n {
                break;
            }
        }
    }

    Ok(SimResult {
        seed,
        slots_run: state.slot,
        statuses_sensed: sensed,
        statuses_delivered: delivered,
        empirical_reliability: delivered as f64 / sensed as f64,
        empirical_avg_aoi: aoi_area_sum as f64 / measured_slots as f64,
        cycles,
        aoi_area_sum,
        measured_slots,
        charge_count,
        charge_sum,
        charge_sum_sq,
        charge_sum_4th,
        max_status_attempts: max_attempts,
        limit_draws_high: limit_high,
        limit_draws_low: limit_low,
    })
}

// ============================================================================
// Replications
// ============================================================================

/// Derive the seed of replication `index` from a base seed (splitmix64-style
/// finalizer over `base + (index+1) * golden-gamma`). Fixed for the life of
/// the tool: reported seeds stay replayable.
pub fn mix_seed(base: u64, index: u64) -> u64 {
    let mut z = base.wrapping_add((index + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Replication execution mode. `Parallel` fans episodes out over rayon;
/// results are merged in index order either way, so both modes produce
/// bit-identical aggregates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExecMode {
    Sequential,
    #[cfg(feature = "parallel")]
    Parallel,
}

impl Default for ExecMode {
    #[cfg(feature = "parallel")]
    fn default() -> Self {
        ExecMode::Parallel
    }
    #[cfg(not(feature = "parallel"))]
    fn default() -> Self {
        ExecMode::Sequential
    }
}

/// Per-episode summary kept by the aggregate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpisodeSummary {
    pub rep: u64,
    pub seed: u64,
    pub avg_aoi: f64,
    pub reliability: f64,
    pub statuses_sensed: u64,
    pub statuses_delivered: u64,
    pub slots_run: u64,
}

/// Mean, standard error and half-width of the 95% normal-approximation
/// confidence interval over replications. The error terms are 0 for a
/// single replication.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub stderr: f64,
    pub ci95_half: f64,
}

impl Estimate {
    fn from_samples(xs: &[f64]) -> Self {
        let stderr = stats::stderr_of_mean(xs);
        Self {
            mean: stats::mean(xs),
            stderr,
            ci95_half: stats::Z95 * stderr,
        }
    }
}

/// Aggregate of independent replications.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicateResult {
    pub base_seed: u64,
    pub n_reps: u64,
    pub avg_aoi: Estimate,
    pub reliability: Estimate,
    pub total_sensed: u64,
    pub total_delivered: u64,
    pub total_slots: u64,
    pub per_rep: Vec<EpisodeSummary>,
}

/// Run `n_reps` independent episodes with derived seeds and aggregate them;
/// execution mode per [`ExecMode::default`].
pub fn replicate(
    chan: &ChannelParams,
    scheme: &SchemePolicy,
    stop: StopRule,
    n_reps: u64,
    base_seed: u64,
    mode: SuccessMode,
) -> Result<ReplicateResult, SimError> {
    replicate_with(chan, scheme, stop, n_reps, base_seed, mode, ExecMode::default())
}

/// [`replicate`] with an explicit execution mode.
pub fn replicate_with(
    chan: &ChannelParams,
    scheme: &SchemePolicy,
    stop: StopRule,
    n_reps: u64,
    base_seed: u64,
    mode: SuccessMode,
    exec: ExecMode,
) -> Result<ReplicateResult, SimError> {
    if n_reps == 0 {
        return Err(SimError::ZeroReps);
    }
    let episode = |rep: u64| -> Result<EpisodeSummary, SimError> {
        let seed = mix_seed(base_seed, rep);
        let r = run_episode(chan, scheme, stop, seed, mode)?;
        Ok(EpisodeSummary {
            rep,
            seed,
            avg_aoi: r.empirical_avg_aoi,
            reliability: r.empirical_reliability,
            statuses_sensed: r.statuses_sensed,
            statuses_delivered: r.statuses_delivered,
            slots_run: r.slots_run,
        })
    };

    let per_rep: Vec<EpisodeSummary> = match exec {
        ExecMode::Sequential => (0..n_reps).map(episode).collect::<Result<_, _>>()?,
        #[cfg(feature = "parallel")]
        ExecMode::Parallel => (0..n_reps)
            .into_par_iter()
            .map(episode)
            .collect::<Result<_, _>>()?,
    };

    let aois: Vec<f64> = per_rep.iter().map(|e| e.avg_aoi).collect();
    let rels: Vec<f64> = per_rep.iter().map(|e| e.reliability).collect();
    Ok(ReplicateResult {
        base_seed,
        n_reps,
        avg_aoi: Estimate::from_samples(&aois),
        reliability: Estimate::from_samples(&rels),
        total_sensed: per_rep.iter().map(|e| e.statuses_sensed).sum(),
        total_delivered: per_rep.iter().map(|e| e.statuses_delivered).sum(),
        total_slots: per_rep.iter().map(|e| e.slots_run).sum(),
        per_rep,
    })
}
