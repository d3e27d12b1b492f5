//! Distributional checks of the simulated limit: tail index, stability,
//! spectral measure and regular variation.

mod oracle;
mod regvar;
mod samples;
mod spectral;

pub use oracle::{
    ks_critical_value, ks_critical_value_one_sample, ks_one_sample, ks_two_sample, oracle_comparison, oracle_iqr,
    stable_oracle, stable_oracle_samples, sum_stability_test, OracleComparison, StabilityTest, LOW_POWER_SAMPLES,
    STABILITY_LEVEL,
};
pub use regvar::{
    regular_variation_from_summaries, regular_variation_table, summarize_path, tail_quantile_bn, EventRow, PathSummary,
    RadiusRow, RegularVariationTable, BN_CONVENTION,
};
pub use samples::{
    auto_window, ecf, estimate_alpha, AlphaEstimate, SampleMeta, SampleSet, AUTO_WINDOW_LEVELS, SE_BATCHES,
};
pub use spectral::{
    spectral_estimate, EventMass, NamedEvent, SpectralEstimate, SphereEvent, SphereSample, MIN_SPECTRAL_REPLICATES,
};
