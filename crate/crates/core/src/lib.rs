//! Quadrics of revolution with a focus at the origin, seen through their
//! reciprocal radial functions.
//!
//! A positive function `w` on the unit sphere S^n solving
//! `2w∇²w + (w² − |∇w|²)h = (c² − 1)h` is affine, `w = S + C<x, ξ>` with
//! `S² = C² + c² − 1`, and `1/w` is the radial function of an ellipsoid,
//! paraboloid, hyperboloid sheet or hyperplane depending on `c²`.
//!
//! - [`sphere`]: points, frames, sampling, and covariant derivatives of fields.
//! - [`residuals`]: residuals of the PDE systems and the S-invariant.
//! - [`quadric`]: the solution family, its case analysis, radial functions and clouds.
//! - [`fit`]: least-squares recovery of `(S, Cξ)` from radial data and classification.

pub mod error;
pub mod fit;
pub mod quadric;
pub mod residuals;
pub mod sphere;

pub use error::{Error, Result};
pub use fit::{classify, fit_inverse_radial, verify_solution, FitOptions, FitResult, Tolerances, Weighting};
pub use quadric::{
    add_relative_noise, domain_indicator, geometric_elements, quadric_to_solution, radial, sample_radial,
    sample_surface, solution_to_quadric, Branch, GeometricElements, QuadricKind, QuadricParams, RadialSample,
    SolutionParams,
};
pub use residuals::{
    eq1_residual, eq1k_residual, obata_residual, obata_shifted_residual, residual_report, s_constancy, s_field,
    schouten_residual, spectral_norm, trace_residual, NormStats, ResidualReport, SStatistics,
};
pub use sphere::{
    gradient, hessian, hessian_convergence, laplacian, project_to_sphere, sample_sphere, tangent_frame, ConvergenceRow,
    ConvergenceTable, DerivativePath, FdConfig, SamplingStrategy, ScalarField, SpherePoint, TangentFrame,
};

/// Serializes `DVector`s as flat JSON arrays.
pub(crate) mod as_array {
    use nalgebra::DVector;
    use serde::Serializer;

    pub fn serialize<S: Serializer>(v: &DVector<f64>, s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(v.iter())
    }

    pub mod option {
        use nalgebra::DVector;
        use serde::Serializer;

        pub fn serialize<S: Serializer>(v: &Option<DVector<f64>>, s: S) -> Result<S::Ok, S::Error> {
            match v {
                Some(v) => s.collect_seq(v.iter()),
                None => s.serialize_none(),
            }
        }
    }
}
