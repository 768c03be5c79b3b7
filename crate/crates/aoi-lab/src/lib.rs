//! Average age-of-information (AoI) and delivery reliability of an
//! energy-harvesting sensor link under retry-limited retransmissions.
//!
//! A sensor charges its battery from broadcast RF power, and every time the
//! battery fills it either retransmits the pending status update or senses a
//! fresh one, depending on the feedback from the receiver and on the retry
//! policy in force. Four policies are covered: single-shot (one attempt per
//! status), a fixed retry limit `k`, a randomized limit mixing `k` and `k-1`
//! so the delivery probability hits the target exactly, and a never-give-up
//! scheme.
//!
//! Two engines share one parameter model:
//!
//! * [`analytic`]: exact closed-form moments, average AoI and guaranteed
//!   reliability for all four schemes;
//! * [`sim`]: a slot-level Monte Carlo of the battery/transmit/feedback
//!   loop with seeded, bit-reproducible randomness and parallel
//!   replications (rayon behind the default `parallel` feature).
//!
//! [`experiments`] layers AoI-reliability trade-off curves, battery-capacity
//! sweeps and the bundled reference tables on top of both engines, and
//! [`config`] holds the run configuration shared with the `aoi-lab` CLI.

pub mod analytic;
pub mod config;
pub mod experiments;
pub mod model;
pub mod sim;
pub mod stats;

pub use config::{RunConfig, DEFAULT_SEED};
pub use model::{derive_channel, ChannelParams, PhysicalParams, RetryParams, SchemeKind, SchemePolicy};
pub use sim::{replicate, run_episode, StopRule, SuccessMode};
