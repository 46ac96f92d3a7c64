//! Hazards, age profiles of the sex ratio, parity ages, birth-order
//! statistics, renewal rate, and the cohort life table.

pub mod birth_order;
pub mod cohort;
pub mod hazard;
pub mod parity;
pub mod profile;
pub mod renewal;

pub use birth_order::{sr_by_birth_order, BirthOrderRow, BirthRecord};
pub use cohort::{cohort_solve, CohortTable};
pub use hazard::{hazard, AgeBand, HazardParams, SexHazard};
pub use parity::{parity_age_numbers, parity_age_quality};
pub use profile::{sex_ratio, sr_profile, AgeGrid, SrProfile};
pub use renewal::{renewal_rate, RenewalEstimate, RenewalSample};
