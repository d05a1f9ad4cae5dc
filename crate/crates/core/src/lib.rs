//! `L^r`-optimal quantization of probability distributions on normed spaces.
//!
//! The crate provides the distortion `G_{r,n}(a) = E min_i ||X - a_i||^r` of a
//! codebook, its Gâteaux gradient, Voronoi and admissibility machinery, several
//! optimizers that produce locally optimal codebooks, and executable checks of
//! stationarity and of the local-minimum theorems for quantizers lying in the
//! support of the law.

pub mod cli;
pub mod distortion;
pub mod distribution;
pub mod error;
pub mod optimize;
pub mod space;
pub mod verify;

pub use distortion::{
    admissibility, distortion, distortion_exact_1d, distortion_gradient, distortion_on,
    gradient_on, project, voronoi_assign, Admissibility, Estimate, GradientValue, Quantizer,
    VoronoiAssignment,
};
pub use distribution::{DistKind, Distribution, Samples, Support};
pub use error::{QuantError, Result};
pub use space::{NormedSpace, Point};
pub use optimize::{
    cellwise_update, gradient_descent, lloyd, optimize, split_init, stochastic_gradient,
    EmptyCellPolicy, Method, OptimizeTrace, OptimizerConfig,
};
pub use verify::{
    counterexample_suite, local_min_probe, stationarity_check, theorem_a_check, theorem_b_check,
    ProbeConfig, ProbeVerdict, StationarityReport, Strictness, Tolerance, Verdict,
};
