//! Named experiments, the scenario file format and calibration.

pub mod calibrate;
pub mod catalog;
pub mod params;
pub mod schema;
pub mod sweep;

pub use calibrate::{calibrate, target_means, CalibrationReport, FittedParam, Residual, PENALTY};
pub use catalog::{builtin, BUILTINS, DRIFT_BAND};
pub use params::{apply_assignments, get_param, set_param, set_value};
pub use schema::{evaluate, load_scenario, CalibrationSpec, FreeParam, Mode, RaceSpec, Scenario, Statistic, Target, Window};
pub use sweep::{sweep, SweepRow};
