//! Ground-truth oracles and executable checks: exact welfare, the
//! posted-price lemmas, truthfulness sweeps and welfare experiments.

mod lemmas;
mod opt;
mod ratio;
mod stats;
mod truthfulness;

pub use lemmas::{
    check_lemma_random_order, check_lemma_revenue, check_sampling_concentration, ConcentrationReport,
    RandomOrderReport, RevenueCheck, SupportedAllocation,
};
pub use opt::{brute_force_opt, opt_welfare};
pub use ratio::{
    chunk_reach, empirical_ratio, empirical_ratio_observed, item_bound, opt_or_bound, ChunkReachReport, OptKind,
    RatioReport, TrialRow,
};
pub use stats::MeanAcc;
pub use truthfulness::{
    standard_deviations, truthfulness_sweep, truthfulness_sweep_with, Deviation, DeviationReport, DoubledPriceOracle,
    IrViolation, Violation,
};
