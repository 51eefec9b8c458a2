//! Hitting probabilities of multiple fully absorbing spherical receivers
//! around a point transmitter, and the performance of a diffusion link that
//! fuses their hard decisions.
//!
//! The library is generic over the scalar type (`f32` or `f64`); the
//! aliases below fix it to `f64`, which is what the numerical inversion
//! tolerances are tuned for.
//!
//! ```
//! use multifar::{build_uca, hp_uca_series, SeriesControl};
//!
//! let (_, ring) = build_uca(4, 20.0, 10.0, 4.0, 100.0).unwrap();
//! let p = hp_uca_series(1.0, &ring, &SeriesControl::default()).unwrap();
//! assert!(p > 0.0 && p < 0.2);
//! ```

// `!(x > 0)` is used on purpose throughout: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod curve;
pub mod error;
pub mod geometry;
pub mod ilt;
pub mod laplace;
pub mod linalg;
pub mod model;
pub mod performance;
pub mod scalar;
pub mod series;
pub mod sim;
pub mod special;

pub use curve::{
    hp_numeric, hp_numeric_recursive, hp_uca_curve, mutual_influence, pbar_curve, CurveMethod, HitProbCurve,
};
pub use error::{Error, Result};
pub use geometry::{build_uca, uca_positions, FarSystem, Point3, UcaGeometry};
pub use ilt::{ilt, ilt_stehfest, ilt_talbot, ilt_vec, IltConfig, IltMethod};
pub use laplace::{laplace_hit_3far, laplace_hit_recursive, laplace_hit_uca, laplace_hit_vector, pbar_laplace};
pub use model::{AutoModel, HitModel, IsolatedModel, MatrixModel, RecursiveModel, UcaSeriesModel};
pub use num_complex::Complex;
pub use performance::{
    array_gain, asymptotic_gain, bit_error_prob, channel_taps, channel_taps_all, fusion_error_probs,
    fusion_error_probs_heterogeneous, local_error_probs, optimal_threshold, poisson_cdf, poisson_sf, slot_means,
    FusionRule, LinkInputs, LinkModel, OokParams,
};
pub use scalar::Real;
pub use series::{hp_2far, hp_equidistant_series, hp_uca_series, pbar_time, SeriesControl};
pub use sim::{hit_prob_estimate, run_particle_sim, HitEstimate, SimConfig, SimResult};

pub type System = FarSystem<f64>;
pub type System32 = FarSystem<f32>;
pub type Uca = UcaGeometry<f64>;
pub type Uca32 = UcaGeometry<f32>;
pub type Curve = HitProbCurve<f64>;
pub type Curve32 = HitProbCurve<f32>;
pub type Sim = SimResult<f64>;
pub type Sim32 = SimResult<f32>;
