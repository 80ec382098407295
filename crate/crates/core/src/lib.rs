//! Power-reduction planning for FM broadcast networks.
//!
//! The crate models co-channel interference between FM transmitters, derives
//! the set of (receiving point, network) pairs that are served today, and
//! builds mixed-integer and linear programs whose solutions lower transmitter
//! powers while keeping every currently served pair above its SINR threshold.
//!
//! Pipeline, bottom up:
//!
//! - [`scenario`]: world model, CSV ingestion, seeded synthetic generator.
//! - [`propagation`]: dB arithmetic, received powers, synthetic path loss.
//! - [`coverage`]: best servers, SINR, QoS levels, served-population reports.
//! - [`milp`]: model construction (Big-M MILP and LP variants), block split, LP export.
//! - [`solve`]: bounded simplex, branch-and-bound, brute-force oracle, power minimization.
//! - [`evaluate`]: before/after metrics and energy estimate.
//! - [`maprender`]: service and interference rasters (PPM).

pub mod coverage;
pub mod evaluate;
mod ids;
pub mod maprender;
pub mod milp;
pub mod propagation;
pub mod scenario;
pub mod solve;

pub use ids::{Channel, NetId, PairKey, RxId, TxId};
