//! Credible sets, their Hamming enlargements, and the finite-sample bounds
//! that turn them into confidence sets.

pub mod auxiliary;
pub mod bounds;
pub mod conditions;
pub mod sets;

pub use auxiliary::{binomial_sum_bounds, exp_limit_pair, BinomialSumBounds};
pub use bounds::{
    confidence_floor, confidence_floor_raw, critical_n, plan_strategy, recovery_bound_almost,
    recovery_bound_exact, required_level, required_level_raw, required_level_without_exp_factor,
    ConfidenceReport, Criterion, Mode,
};
pub use conditions::{condition_value, ConditionExtras, ConditionKind};
pub use sets::{credible_set, enlarge, CredibleSet, EnlargedSet};
