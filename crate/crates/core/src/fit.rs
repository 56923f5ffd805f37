//! Inverse problem: recover `w = S + <x, v>` from radial samples, classify the
//! quadric, and check the recovered field against the residual systems.
//!
//! Since `1/ρ` is affine in `x` for every quadric in the family, the fit is a
//! linear least-squares problem in `(S, v)`, solved by Householder QR of the
//! design matrix `[1, x_i]`.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::quadric::{QuadricKind, QuadricParams, RadialSample};
use crate::residuals::{report_from_jets, NormStats, ResidualReport};
use crate::sphere::{tangent_frame, DerivativePath, Jet, ScalarField};

/// Relative classification tolerances. The absolute bands are
/// `rel_c2 (1 + |c2|)`, `rel_s (1 + |S| + |C|)` and `rel_amplitude (1 + |S|)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Tolerances {
    pub rel_c2: f64,
    pub rel_s: f64,
    pub rel_amplitude: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            rel_c2: 1e-6,
            rel_s: 1e-6,
            rel_amplitude: 1e-6,
        }
    }
}

/// Absolute half-widths of the classification bands.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Bands {
    pub c2: f64,
    pub s: f64,
    pub amplitude: f64,
}

impl Tolerances {
    pub fn bands(&self, s: f64, c: f64) -> Bands {
        let c2 = s * s - c * c + 1.0;
        Bands {
            c2: self.rel_c2 * (1.0 + c2.abs()),
            s: self.rel_s * (1.0 + s.abs() + c.abs()),
            amplitude: self.rel_amplitude * (1.0 + s.abs()),
        }
    }
}

fn classify_in_bands(s: f64, c: f64, bands: &Bands) -> QuadricKind {
    let c = c.abs();
    let c2 = s * s - c * c + 1.0;
    if c <= bands.amplitude {
        QuadricKind::CenteredSphere
    } else if s.abs() <= bands.s {
        QuadricKind::Hyperplane
    } else if (c2 - 1.0).abs() <= bands.c2 {
        QuadricKind::Paraboloid
    } else if c2 > 1.0 {
        QuadricKind::Ellipsoid
    } else {
        QuadricKind::HyperboloidSheet
    }
}

/// Which quadric `1 / (S + C<x, ξ>)` is, with `c2 = S² − C² + 1`.
pub fn classify(s: f64, c: f64, tolerances: &Tolerances) -> QuadricKind {
    classify_in_bands(s, c, &tolerances.bands(s, c))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Weighting {
    #[default]
    Uniform,
    /// Row weights `ρ_i²`, which make relative noise on `ρ` homoscedastic in `1/ρ`.
    RhoSquared,
}

impl std::str::FromStr for Weighting {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniform" | "none" => Ok(Self::Uniform),
            "rho2" | "rho-squared" | "rho_squared" => Ok(Self::RhoSquared),
            _ => Err(Error::InvalidArgument(format!("unknown weighting '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FitOptions {
    pub tolerances: Tolerances,
    pub weighting: Weighting,
    /// Bands are widened to `significance` standard errors of the fitted
    /// `c2`, `S` and `|v|`; zero keeps the bare tolerance bands.
    pub significance: f64,
    /// Designs with a larger 2-norm condition number are rejected.
    pub max_condition: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            tolerances: Tolerances::default(),
            weighting: Weighting::Uniform,
            significance: 4.0,
            max_condition: 1e10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitResult {
    pub s: f64,
    /// `v = C ξ`.
    #[serde(serialize_with = "crate::as_array::serialize")]
    pub v: DVector<f64>,
    /// `C = |v|`.
    pub amplitude: f64,
    /// `v / |v|`, absent for the centered-sphere class.
    #[serde(serialize_with = "crate::as_array::option::serialize")]
    pub axis: Option<DVector<f64>>,
    /// `S² − |v|² + 1`.
    pub c2: f64,
    pub kind: QuadricKind,
    /// RMS of `S + <x_i, v> − 1/ρ_i`.
    pub rms_residual: f64,
    /// 2-norm condition number of the (weighted) design matrix.
    pub condition: f64,
    pub samples: usize,
    pub bands: Bands,
    pub quadric: QuadricParams,
}

impl FitResult {
    pub fn field(&self) -> Result<ScalarField> {
        ScalarField::affine(self.s, self.v.clone(), 1.0)
    }
}

/// Least-squares fit of `S + <x_i, v> ≈ 1/ρ_i`.
pub fn fit_inverse_radial(samples: &[RadialSample], options: &FitOptions) -> Result<FitResult> {
    let first = samples
        .first()
        .ok_or(Error::InsufficientSamples { found: 0, required: 4 })?;
    let ambient = first.x.coords().len();
    let params = ambient + 1;
    if samples.len() < params {
        return Err(Error::InsufficientSamples {
            found: samples.len(),
            required: params,
        });
    }
    if samples.iter().any(|s| s.x.coords().len() != ambient) {
        return Err(Error::ParameterMismatch("samples of mixed dimension".into()));
    }

    let m = samples.len();
    let mut design = DMatrix::zeros(m, params);
    let mut rhs = DVector::zeros(m);
    for (i, sample) in samples.iter().enumerate() {
        let weight = match options.weighting {
            Weighting::Uniform => 1.0,
            Weighting::RhoSquared => sample.rho,
        };
        design[(i, 0)] = weight;
        for (j, c) in sample.x.coords().iter().enumerate() {
            design[(i, j + 1)] = weight * c;
        }
        rhs[i] = weight / sample.rho;
    }

    let qr = design.clone().qr();
    let r = qr.r();
    let singular = r.singular_values();
    let (smax, smin) = (singular.max(), singular.min());
    let condition = if smin > 0.0 { smax / smin } else { f64::INFINITY };
    if condition.is_nan() || condition > options.max_condition {
        return Err(Error::DegenerateGeometry(format!(
            "design matrix condition {condition:e} exceeds {:e}; directions span too small a set",
            options.max_condition
        )));
    }
    let qty = qr.q().transpose() * &rhs;
    let beta = r
        .solve_upper_triangular(&qty)
        .ok_or_else(|| Error::DegenerateGeometry("singular triangular factor".into()))?;

    let s = beta[0];
    let v = beta.rows(1, ambient).into_owned();
    let amplitude = v.norm();
    let c2 = s * s - amplitude * amplitude + 1.0;

    let raw: Vec<f64> = samples
        .iter()
        .map(|smp| s + smp.x.coords().dot(&v) - 1.0 / smp.rho)
        .collect();
    let rms_residual = (raw.iter().map(|e| e * e).sum::<f64>() / m as f64).sqrt();

    let mut bands = options.tolerances.bands(s, amplitude);
    if options.significance > 0.0 && m > params {
        let weighted = &design * &beta - &rhs;
        let sigma2 = weighted.norm_squared() / (m - params) as f64;
        if let Some(r_inv) = r.clone().try_inverse() {
            let cov = &r_inv * r_inv.transpose() * sigma2;
            let z = options.significance;
            let mut grad = DVector::zeros(params);
            grad[0] = 2.0 * s;
            for j in 0..ambient {
                grad[j + 1] = -2.0 * v[j];
            }
            let se_c2 = (grad.transpose() * &cov * &grad)[(0, 0)].max(0.0).sqrt();
            let se_s = cov[(0, 0)].max(0.0).sqrt();
            let cov_v = cov.view((1, 1), (ambient, ambient));
            let se_amp = if amplitude > 0.0 {
                let u = &v / amplitude;
                (u.transpose() * cov_v * &u)[(0, 0)].max(0.0).sqrt()
            } else {
                cov_v.trace().max(0.0).sqrt()
            };
            bands.c2 = bands.c2.max(z * se_c2);
            bands.s = bands.s.max(z * se_s);
            bands.amplitude = bands.amplitude.max(z * se_amp);
        }
    }

    let kind = classify_in_bands(s, amplitude, &bands);
    if kind != QuadricKind::CenteredSphere && kind != QuadricKind::Hyperplane && s == 0.0 {
        return Err(Error::DegenerateGeometry("fitted S vanishes".into()));
    }
    let quadric = QuadricParams::from_affine(s, &v, kind)
        .map_err(|err| Error::DegenerateGeometry(format!("fitted field does not describe a {kind}: {err}")))?;
    let axis = (kind != QuadricKind::CenteredSphere).then(|| &v / amplitude);

    Ok(FitResult {
        s,
        v,
        amplitude,
        axis,
        c2,
        kind,
        rms_residual,
        condition,
        samples: m,
        bands,
        quadric,
    })
}

/// Residuals of the fitted field, anchored to the data: every residual uses
/// the observed `w_i = 1/ρ_i` together with the derivatives of the fitted
/// affine field. For exact quadric data they all vanish; for data off the
/// family the S-invariant spreads and the residuals grow.
pub fn verify_solution(samples: &[RadialSample], fit: &FitResult) -> Result<ResidualReport> {
    if samples.is_empty() {
        return Err(Error::InsufficientSamples { found: 0, required: 1 });
    }
    let field = fit.field()?;
    let jets: Vec<Jet> = samples
        .iter()
        .map(|smp| field.jet(&smp.x, &tangent_frame(&smp.x)))
        .collect::<Result<_>>()?;
    let values: Vec<f64> = samples.iter().map(|smp| 1.0 / smp.rho).collect();
    let mut report = report_from_jets(&values, &jets, DerivativePath::Analytic, 1.0, fit.c2, Some(fit.s))?;
    report.reciprocity = Some(NormStats::from_values(
        samples.iter().zip(&jets).map(|(smp, jet)| jet.value * smp.rho - 1.0),
    ));
    let ambient = fit.v.len();
    report.under_determined = samples.len() < ambient + 1;
    Ok(report)
}
