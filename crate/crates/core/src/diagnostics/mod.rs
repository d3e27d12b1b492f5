//! Numeric checks of the convergence conditions and the constants bounding them.

mod constants;
mod moments;
mod partitions;
mod tightness;

pub use constants::{
    borel_cantelli_sum, centered_first_moment_sum, head_sum_constant, log_grid, moment_constant, tail_sum_constant,
    zeta_tail, BorelCantelli, MomentConstant, CONVERGENCE_MASS,
};
pub use moments::{
    default_envelopes, estimate_c1, estimate_c2, estimate_c2_raw, Condition, EnvelopeFunction, MomentEntry,
    MomentEnvelope, MomentReport, Verdict, MIN_REPLICATES, SE_BAND,
};
pub use partitions::{
    dtau_exponent, enumerate_partitions, partition_report, partition_sum, partition_sum_factorized, set_partitions,
    BoundProduct, Partition, PartitionReport, PartitionRow, ENUMERATION_CAP, STATED_PARTITION_COUNT,
};
pub use tightness::{companion_bound, tightness_functional, IncrementBounds, PartitionTerm, TightnessResult};
