//! Numerical toolkit for Robin ground states on convex polytopes.
//!
//! The crate classifies convex polyhedral domains (circumsolids, products of
//! circumsolids, consistency of normals at vertices), solves the Neumann
//! perturbation problem `Δv + μ = 0, ∂_ν v = −1` and the Robin eigenproblem
//! on planar polygons with P1 finite elements, extracts corner expansions on
//! planar sectors, runs the Prüfer-angle analysis of the Legendre-type
//! equation for `λ = 2d`, and searches for midpoint witnesses that a computed
//! ground state is not log-concave.
//!
//! Every numerical type is generic over [`Real`] (`f32` or `f64`); the
//! `*64` aliases at the crate root fix the scalar to `f64`, which is what the
//! default tolerances are calibrated for.

#![allow(clippy::neg_cmp_op_on_partial_ord)] // `!(x > 0)` is meant to catch NaN too

pub mod classify;
pub mod concavity;
pub mod cone_harmonics;
pub mod error;
pub mod fem;
pub mod io;
pub mod linalg;
pub mod mesh2d;
pub mod polytope;
pub mod pruefer;
pub mod scalar;
pub mod sparse;

pub use error::{Error, Result};
pub use scalar::Real;

pub type HalfSpace64 = polytope::HalfSpace<f64>;
pub type Polytope64 = polytope::Polytope<f64>;
pub type GeometrySummary64 = polytope::GeometrySummary<f64>;
pub type Classification64 = classify::Classification<f64>;
pub type QuadraticForm64 = classify::QuadraticForm<f64>;
pub type Mesh64 = mesh2d::Mesh<f64>;
pub type Field64 = fem::Field<f64>;
pub type OperatorSet64 = fem::OperatorSet<f64>;
pub type SpectralResult64 = fem::SpectralResult<f64>;
pub type Sector64 = cone_harmonics::Sector<f64>;
pub type CornerExpansion64 = cone_harmonics::CornerExpansion<f64>;
pub type LegendreProblem64 = pruefer::LegendreProblem<f64>;
pub type PrueferOutcome64 = pruefer::PrueferOutcome<f64>;
pub type RadialGroundState64 = pruefer::RadialGroundState<f64>;
pub type ConcavityReport64 = concavity::ConcavityReport<f64>;
