//! Numerics for the tau-function of smooth Jordan contours and for genus-g theta partition data.
//!
//! The core is generic over the scalar type ([`Real`], implemented for `f32` and `f64`);
//! the aliases below fix `f64`, which is what every tolerance in the test suites assumes.

// Validation is written as `!(x > 0)` so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli_reports;
pub mod contour_geometry;
pub mod error;
pub mod genus_partition;
pub mod linalg;
pub mod moments;
pub mod quadrature;
pub mod scalar;
pub mod tau_energy;
pub mod theta_core;
pub mod ward_suite;

pub use error::{Error, Result};
pub use scalar::Real;

pub type Complex64 = num_complex::Complex<f64>;
pub type ExteriorMap64 = contour_geometry::ExteriorMap<f64>;
pub type SampledContour64 = contour_geometry::SampledContour<f64>;
pub type MomentSet64 = moments::MomentSet<f64>;
pub type InteriorMoments64 = moments::InteriorMoments<f64>;
pub type TauReport64 = tau_energy::TauReport<f64>;
pub type FdSettings64 = ward_suite::FdSettings<f64>;
pub type HessianBlock64 = ward_suite::HessianBlock<f64>;
pub type MetricGram64 = ward_suite::MetricGram<f64>;
pub type PeriodMatrix64 = theta_core::PeriodMatrix<f64>;
pub type Characteristics64 = theta_core::Characteristics<f64>;
pub type InstantonInput64 = genus_partition::InstantonInput<f64>;
