//! Monte Carlo simulation: the two-sex step loop, replicates, and the
//! sexual-versus-asexual tracking race.

pub mod events;
mod init;
pub mod race;
pub mod replicates;
pub mod sim;
pub mod trajectory;

pub use events::Event;
pub use race::{run_asexual, tracking_race, RaceConfig, RaceResult};
pub use replicates::{run_replicates, seeds_from, ReplicateSet};
pub use sim::{run, Simulation};
pub use trajectory::{Snapshot, Tallies, Trajectory, WindowSummary};
