//! Joint beamforming, UE scheduling and base-station sleeping for small-cell
//! networks powered by a smart grid and harvested solar energy.
//!
//! Scheduling and sleeping are decided once per frame from queue backlogs;
//! beamforming and grid trading are decided every slot by a minimum-power
//! SOCP nested inside a one-dimensional search over the common rate scale.

pub mod beamform;
pub mod channel;
pub mod cli;
pub mod energy;
pub mod model;
pub mod oracle;
pub mod queues;
pub mod scenarios;
pub mod scheduler;
pub mod simulator;

pub use beamform::socp::{ClarabelSolver, ConicSolver};
pub use beamform::{optimize_slot, Beams, SlotContext, SlotSolution, SlotStatus};
pub use channel::{sample_channels, ChannelRealization};
pub use energy::{load_nre_trace, EnergyLedger, NreTrace};
pub use model::{load_config, validate_config, ConfigDocument, ConfigError, SystemConfig};
pub use queues::QueueState;
pub use scheduler::{schedule_frame, ScheduleDecision};
pub use simulator::{run, sweep_v, RunMetrics, RunReport};
