//! Exhaustive ground-truth oracles for small instances.
//!
//! Nothing here shares code with the solver paths it is compared against:
//! flows are enumerated edge by edge and LPs are solved in exact arithmetic.

mod brute;
mod explicit;
pub mod rational_lp;

pub use brute::{BRUTE_OPT_CAP, brute_aug, brute_opt};
pub use explicit::{
    ExplicitClp, ExplicitDw, MAX_COLUMNS, MAX_CONFIG_EDGES, budget_points, enumerate_configurations, enumerate_flows,
    explicit_clp_dw_feasible, explicit_clp_feasible,
};
