//! Outage capacity of Rayleigh-faded diversity channels: exact SNR laws,
//! Gaussian and high/low-SNR approximations, MIMO bounds and a seeded
//! Monte Carlo oracle.

pub mod error;
pub mod mimo_bounds;
pub mod montecarlo;
pub mod numerics;
pub mod outage;
pub mod snr_models;

pub use error::{Error, Result};
pub use mimo_bounds::{
    asymptotic_benchmark, outage_capacity_bounds, AsymptoticBenchmark, AsymptoticOptions,
    EdgeConstant, MimoBoundReport, SnrBounds,
};
pub use montecarlo::{McCapacity, McEstimate, McSettings, SampleSet, SortedSamples};
pub use numerics::RootSolveSettings;
pub use outage::{
    ApproximationKind, ApproximationReport, CapacityMethod, CapacityReport, SnrRegime,
    ValidityCheck,
};
pub use snr_models::{ChannelConfig, DiversityScheme, MeanSnr, QuantileMethod, SnrQuantile};
