//! Simulation and numerical toolkit for linear processes in the domain of
//! attraction of linear fractional stable motion: innovations and paths,
//! local-time functionals, zero-energy sums with their martingale
//! decomposition, and kernel regression on integrated covariates.

// Negated comparisons are how NaN inputs get rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod function_space;
pub mod innovations;
pub mod linear_process;
pub mod local_time;
pub mod quad;
pub mod regression;
pub mod stats;
pub mod zero_energy;

pub use error::{Error, Result};
pub use function_space::{
    beta_moment, beta_norm, bracket_cover, kernel, BetaNormEstimate, Bracket, FunctionClass, KernelSpec, LambdaGrid,
    RealFunction,
};
pub use innovations::{Family, InnovationModel, NormingSequence, SlowlyVarying};
pub use linear_process::{
    norming, simulate_lfsm, Convolution, LfsmParams, LfsmSimulator, MemoryCase, NormingConstants, PathBundle,
    ProcessSpec,
};
pub use local_time::{
    beta_bar, local_time_field, occupation_cdf, reference_local_time, support_set, LocalTimeField, SupportSet,
    WindowedSums,
};
pub use regression::{
    bandwidth_check, nadaraya_watson, uniform_error, BandwidthRule, FitResult, NoiseModel, RegressionSample,
    TargetFunction,
};
pub use zero_energy::{
    conditional_expectation, delta_n, martingale_decomposition, orlicz_moment_proxy, quadratic_variation,
    sum_zero_energy, DecompositionOptions, MartingaleDecomposition, OrliczKind,
};
