//! Pointwise residuals of the second-order systems characterizing quadrics of
//! revolution, and aggregate reports over sample sets.
//!
//! All matrix residuals are expressed in the deterministic tangent frame at the
//! evaluation point, where the metric is the identity. Operators that depend on
//! the sphere radius use `k = 1 / radius`, so on the unit sphere they reduce to
//! their `k = 1` forms.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::sphere::{tangent_frame, DerivativePath, Jet, ScalarField, SpherePoint, RADIUS_TOL};

/// Relative floor below which `|w|` counts as zero: `floor = W_FLOOR_REL * (1 + max |w|)`.
pub const W_FLOOR_REL: f64 = 1e-8;

pub fn w_floor(max_abs_w: f64) -> f64 {
    W_FLOOR_REL * (1.0 + max_abs_w)
}

fn require_radius(w: &ScalarField, radius: f64, what: &str) -> Result<()> {
    if (w.radius() - radius).abs() > RADIUS_TOL * radius {
        return Err(Error::ParameterMismatch(format!(
            "{what} needs a field on the sphere of radius {radius}, got radius {}",
            w.radius()
        )));
    }
    Ok(())
}

fn curvature(w: &ScalarField) -> f64 {
    1.0 / w.radius()
}

fn jet_at(w: &ScalarField, x: &SpherePoint) -> Result<Jet> {
    w.jet(x, &tangent_frame(x))
}

/// `2 w H + (k² w² − |∇w|² − c2 + 1) I`, with `w` taken as `value`.
fn eq1_from(value: f64, jet: &Jet, c2: f64, k: f64) -> DMatrix<f64> {
    let n = jet.hessian.nrows();
    let g2 = jet.gradient_frame.norm_squared();
    &jet.hessian * (2.0 * value) + DMatrix::identity(n, n) * (k * k * value * value - g2 - c2 + 1.0)
}

fn s_from(value: f64, jet: &Jet, a: f64, k: f64) -> f64 {
    let g2 = jet.gradient_frame.norm_squared();
    (k * k * value * value + g2 + a) / (2.0 * k * value)
}

fn shifted_from(value: f64, jet: &Jet, s: f64, k: f64) -> DMatrix<f64> {
    let n = jet.hessian.nrows();
    &jet.hessian + DMatrix::identity(n, n) * (k * k * (value - s / k))
}

fn trace_from(value: f64, jet: &Jet, s: f64, k: f64) -> f64 {
    let n = jet.hessian.nrows() as f64;
    jet.hessian.trace() + n * k * k * (value - s / k)
}

/// Residual of `2w∇²w + (w² − |∇w|²)h = (c² − 1)h` on the unit sphere.
pub fn eq1_residual(w: &ScalarField, x: &SpherePoint, c2: f64) -> Result<DMatrix<f64>> {
    require_radius(w, 1.0, "eq1_residual")?;
    let jet = jet_at(w, x)?;
    Ok(eq1_from(jet.value, &jet, c2, 1.0))
}

/// Residual of `2w∇²w + (k²w² − |∇w|²)h = (c² − 1)h` on the sphere of radius `1/k`.
pub fn eq1k_residual(w: &ScalarField, x: &SpherePoint, c2: f64, k: f64) -> Result<DMatrix<f64>> {
    if !(k > 0.0 && k.is_finite()) {
        return Err(Error::InvalidArgument(format!("k must be positive, got {k}")));
    }
    require_radius(w, 1.0 / k, "eq1k_residual")?;
    let jet = jet_at(w, x)?;
    Ok(eq1_from(jet.value, &jet, c2, k))
}

/// Residual of Obata's system `∇²w + k² w h = 0` on the sphere of radius `1/k`.
pub fn obata_residual(w: &ScalarField, x: &SpherePoint, k: f64) -> Result<DMatrix<f64>> {
    if !(k > 0.0 && k.is_finite()) {
        return Err(Error::InvalidArgument(format!("k must be positive, got {k}")));
    }
    require_radius(w, 1.0 / k, "obata_residual")?;
    let jet = jet_at(w, x)?;
    let n = jet.hessian.nrows();
    Ok(&jet.hessian + DMatrix::identity(n, n) * (k * k * jet.value))
}

/// The S-invariant `(k²w² + |∇w|² + A) / (2kw)`, with `|w(x)|` floored at
/// `1e-8 (1 + |w(x)|)`.
pub fn s_field(w: &ScalarField, x: &SpherePoint, a: f64) -> Result<f64> {
    let jet = jet_at(w, x)?;
    let floor = w_floor(jet.value.abs());
    if jet.value.abs() <= floor {
        return Err(Error::ZeroSet {
            value: jet.value.abs(),
            floor,
        });
    }
    Ok(s_from(jet.value, &jet, a, curvature(w)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SStatistics {
    pub mean: f64,
    pub max_deviation: f64,
    pub admissible: usize,
    pub excluded: usize,
    pub floor: f64,
}

fn s_statistics(values: &[f64], jets: &[Jet], a: f64, k: f64) -> Result<SStatistics> {
    let max_abs = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let floor = w_floor(max_abs);
    let s: Vec<f64> = values
        .iter()
        .zip(jets)
        .filter(|(v, _)| v.abs() > floor)
        .map(|(v, jet)| s_from(*v, jet, a, k))
        .collect();
    if s.len() < 2 {
        return Err(Error::InsufficientSamples {
            found: s.len(),
            required: 2,
        });
    }
    let mean = s.iter().sum::<f64>() / s.len() as f64;
    let max_deviation = s.iter().fold(0.0f64, |m, v| m.max((v - mean).abs()));
    Ok(SStatistics {
        mean,
        max_deviation,
        admissible: s.len(),
        excluded: values.len() - s.len(),
        floor,
    })
}

fn jets(w: &ScalarField, samples: &[SpherePoint]) -> Result<Vec<Jet>> {
    samples.par_iter().map(|x| jet_at(w, x)).collect()
}

/// Mean and spread of the S-invariant over the samples where `|w|` clears the floor.
pub fn s_constancy(w: &ScalarField, samples: &[SpherePoint], a: f64) -> Result<SStatistics> {
    let jets = jets(w, samples)?;
    let values: Vec<f64> = jets.iter().map(|j| j.value).collect();
    s_statistics(&values, &jets, a, curvature(w))
}

/// Residual of `∇²w + k²(w − S/k)h = 0`; on the unit sphere `∇²w + (w − S)h`.
pub fn obata_shifted_residual(w: &ScalarField, x: &SpherePoint, s: f64) -> Result<DMatrix<f64>> {
    let jet = jet_at(w, x)?;
    Ok(shifted_from(jet.value, &jet, s, curvature(w)))
}

/// Trace of the shifted system: `Δw + n k²(w − S/k)`.
pub fn trace_residual(w: &ScalarField, x: &SpherePoint, s: f64) -> Result<f64> {
    let jet = jet_at(w, x)?;
    Ok(trace_from(jet.value, &jet, s, curvature(w)))
}

/// The main system rewritten for `u = log w`:
/// `e^{2u}[∇²u + ∇u⊗∇u + (1 − |∇u|²)/2 h] − (c² − 1)/2 h`. Unit sphere only.
pub fn schouten_residual(w: &ScalarField, x: &SpherePoint, c2: f64) -> Result<DMatrix<f64>> {
    require_radius(w, 1.0, "schouten_residual")?;
    let jet = jet_at(w, x)?;
    schouten_from(&jet, c2)
}

fn schouten_from(jet: &Jet, c2: f64) -> Result<DMatrix<f64>> {
    let w = jet.value;
    if w <= 0.0 {
        return Err(Error::NonPositive(w));
    }
    let n = jet.hessian.nrows();
    let e2u = w * w;
    let grad_u = &jet.gradient_frame / w;
    let hess_u = &jet.hessian / w - &jet.gradient_frame * jet.gradient_frame.transpose() / (w * w);
    let bracket =
        hess_u + &grad_u * grad_u.transpose() + DMatrix::identity(n, n) * ((1.0 - grad_u.norm_squared()) / 2.0);
    Ok(bracket * e2u - DMatrix::identity(n, n) * ((c2 - 1.0) / 2.0))
}

/// Spectral norm of a symmetric matrix.
pub fn spectral_norm(m: &DMatrix<f64>) -> f64 {
    let sym = (m + m.transpose()) * 0.5;
    sym.symmetric_eigenvalues().amax()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NormStats {
    pub max: f64,
    pub rms: f64,
}

impl NormStats {
    pub fn from_values<I: IntoIterator<Item = f64>>(values: I) -> Self {
        let (mut max, mut sum_sq, mut count) = (0.0f64, 0.0, 0usize);
        for v in values {
            let v = v.abs();
            max = max.max(v);
            sum_sq += v * v;
            count += 1;
        }
        let rms = if count == 0 {
            0.0
        } else {
            (sum_sq / count as f64).sqrt()
        };
        Self { max, rms }
    }
}

/// Residual statistics over a sample set. Matrix residuals are aggregated by
/// spectral norm.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResidualReport {
    pub samples: usize,
    pub path: DerivativePath,
    pub c2: f64,
    pub k: f64,
    /// The constant `A` in the S-invariant, bound to `c2 − 1`.
    pub a: f64,
    /// The S used by the shifted and trace residuals.
    pub s: f64,
    pub eq1: NormStats,
    pub obata_shifted: NormStats,
    pub trace: NormStats,
    /// Present on the unit sphere when the field is positive at every sample.
    pub schouten: Option<NormStats>,
    pub s_constancy: Option<SStatistics>,
    /// `|w(x_i) ρ_i − 1|`, present for reports built from radial data.
    pub reciprocity: Option<NormStats>,
    pub under_determined: bool,
}

impl ResidualReport {
    /// Largest residual quantity in the report, used for pass/fail gating.
    /// NaN if any quantity is NaN.
    pub fn worst(&self) -> f64 {
        [
            Some(self.eq1.max),
            Some(self.obata_shifted.max),
            Some(self.trace.max),
            self.schouten.map(|s| s.max),
            self.s_constancy.map(|s| s.max_deviation),
            self.reciprocity.map(|r| r.max),
        ]
        .into_iter()
        .flatten()
        .fold(0.0, |worst, v| {
            if v.is_nan() || worst.is_nan() {
                f64::NAN
            } else {
                worst.max(v)
            }
        })
    }
}

/// Builds a report from per-sample values and jets. `values` stands in for
/// `w(x_i)` in every residual, which lets radial data anchor the residuals
/// while derivatives come from a model field.
pub(crate) fn report_from_jets(
    values: &[f64],
    jets: &[Jet],
    path: DerivativePath,
    k: f64,
    c2: f64,
    s: Option<f64>,
) -> Result<ResidualReport> {
    let a = c2 - 1.0;
    let s_constancy = s_statistics(values, jets, a, k).ok();
    let s = match (s, s_constancy) {
        (Some(s), _) => s,
        (None, Some(stats)) => stats.mean,
        (None, None) => {
            return Err(Error::InsufficientSamples {
                found: values.len(),
                required: 2,
            })
        }
    };
    let pairs = || values.iter().copied().zip(jets.iter());
    let eq1 = NormStats::from_values(pairs().map(|(v, j)| spectral_norm(&eq1_from(v, j, c2, k))));
    let obata_shifted = NormStats::from_values(pairs().map(|(v, j)| spectral_norm(&shifted_from(v, j, s, k))));
    let trace = NormStats::from_values(pairs().map(|(v, j)| trace_from(v, j, s, k)));
    let schouten = if k == 1.0 && values.iter().all(|v| *v > 0.0) {
        let norms: Result<Vec<f64>> = pairs()
            .map(|(v, j)| {
                let mut j = j.clone();
                j.value = v;
                schouten_from(&j, c2).map(|m| spectral_norm(&m))
            })
            .collect();
        Some(NormStats::from_values(norms?))
    } else {
        None
    };
    let n = jets.first().map_or(0, |j| j.hessian.nrows());
    Ok(ResidualReport {
        samples: values.len(),
        path,
        c2,
        k,
        a,
        s,
        eq1,
        obata_shifted,
        trace,
        schouten,
        s_constancy,
        reciprocity: None,
        under_determined: values.len() < n + 2,
    })
}

/// Aggregates every residual of the field over `samples`. When `s` is `None`
/// the mean of the S-invariant is used.
pub fn residual_report(w: &ScalarField, samples: &[SpherePoint], c2: f64, s: Option<f64>) -> Result<ResidualReport> {
    if samples.is_empty() {
        return Err(Error::InsufficientSamples { found: 0, required: 1 });
    }
    let jets = jets(w, samples)?;
    let values: Vec<f64> = jets.iter().map(|j| j.value).collect();
    report_from_jets(&values, &jets, w.path(), curvature(w), c2, s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sphere::{project_to_sphere, sample_sphere, FdConfig, SamplingStrategy};
    use nalgebra::DVector;

    fn dv(v: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(v)
    }

    fn unit(v: &[f64]) -> SpherePoint {
        project_to_sphere(&dv(v), 1.0).unwrap()
    }

    fn axial_quadratic() -> ScalarField {
        ScalarField::generic(1.0, |p: &SpherePoint| {
            let t = p.coords()[0];
            1.0 + t * t
        })
        .unwrap()
    }

    #[test]
    fn worst_propagates_nan() {
        let w = ScalarField::affine(2f64.sqrt(), dv(&[1.0, 0.0, 0.0]), 1.0).unwrap();
        let pts = sample_sphere(2, 10, SamplingStrategy::UniformRandom, 1).unwrap();
        let mut report = residual_report(&w, &pts, 2.0, None).unwrap();
        assert!(report.worst() < 1e-12);
        report.reciprocity = Some(NormStats {
            max: f64::NAN,
            rms: 0.0,
        });
        assert!(report.worst().is_nan());
    }

    #[test]
    fn eq1_examples() {
        let sqrt2 = 2f64.sqrt();
        let w = ScalarField::affine(sqrt2, dv(&[1.0, 0.0, 0.0]), 1.0).unwrap();
        let r = eq1_residual(&w, &unit(&[0.0, 1.0, 0.0]), 2.0).unwrap();
        assert!(r.abs().max() < 1e-15);

        let two = ScalarField::constant(2.0, 3, 1.0).unwrap();
        let x = unit(&[0.2, 0.3, 0.9]);
        assert!(eq1_residual(&two, &x, 5.0).unwrap().abs().max() == 0.0);
        let r = eq1_residual(&two, &x, 2.0).unwrap();
        assert!((r - DMatrix::identity(2, 2) * 3.0).abs().max() == 0.0);
    }

    #[test]
    fn eq1_requires_unit_sphere() {
        let w = ScalarField::constant(1.0, 3, 0.5).unwrap();
        let x = project_to_sphere(&dv(&[1.0, 0.0, 0.0]), 0.5).unwrap();
        assert!(matches!(eq1_residual(&w, &x, 2.0), Err(Error::ParameterMismatch(_))));
        assert!(matches!(
            eq1k_residual(&w, &x, 2.0, 1.0),
            Err(Error::ParameterMismatch(_))
        ));
        assert!(eq1k_residual(&w, &x, 2.0, 2.0).is_ok());
    }

    #[test]
    fn eq1k_examples() {
        let x = unit(&[0.1, -0.4, 0.7]);
        let w = ScalarField::affine(1.2, dv(&[0.3, 0.0, 0.5]), 1.0).unwrap();
        assert_eq!(
            eq1k_residual(&w, &x, 1.7, 1.0).unwrap(),
            eq1_residual(&w, &x, 1.7).unwrap()
        );

        for k in [0.5, 2.0] {
            let (c2, c): (f64, f64) = (3.0, 0.8);
            let s = (c * c + c2 - 1.0).sqrt();
            let w = ScalarField::affine(s / k, dv(&[0.0, c, 0.0]), 1.0 / k).unwrap();
            let x = project_to_sphere(&dv(&[0.3, 0.6, -0.2]), 1.0 / k).unwrap();
            assert!(eq1k_residual(&w, &x, c2, k).unwrap().abs().max() < 1e-13);
        }

        let one = ScalarField::constant(1.0, 3, 0.5).unwrap();
        let x = project_to_sphere(&dv(&[0.0, 0.0, 1.0]), 0.5).unwrap();
        assert!(eq1k_residual(&one, &x, 5.0, 2.0).unwrap().abs().max() == 0.0);
    }

    #[test]
    fn obata_examples() {
        let xi = dv(&[0.0, 0.6, 0.8]);
        let w = ScalarField::affine(0.0, &xi * 1.5, 1.0).unwrap();
        let x = unit(&[0.5, 0.1, -0.3]);
        assert!(obata_residual(&w, &x, 1.0).unwrap().abs().max() < 1e-15);

        let one = ScalarField::constant(1.0, 3, 1.0).unwrap();
        assert_eq!(obata_residual(&one, &x, 1.0).unwrap(), DMatrix::identity(2, 2));

        // w = <x,ξ>² at x = ξ: the FD Hessian is −2I (oracle: along a great
        // circle, cos²θ has second derivative −2 at θ = 0), so H + wI = −I.
        let sq = ScalarField::generic(1.0, |p: &SpherePoint| p.coords()[2].powi(2)).unwrap();
        let r = obata_residual(&sq, &unit(&[0.0, 0.0, 1.0]), 1.0).unwrap();
        assert!((r + DMatrix::identity(2, 2)).abs().max() < 1e-5);
    }

    #[test]
    fn s_field_examples() {
        let sqrt2 = 2f64.sqrt();
        let w = ScalarField::affine(sqrt2, dv(&[1.0, 0.0, 0.0]), 1.0).unwrap();
        let s1 = s_field(&w, &unit(&[1.0, 0.0, 0.0]), 1.0).unwrap();
        let s2 = s_field(&w, &unit(&[0.0, 1.0, 0.0]), 1.0).unwrap();
        assert!((s1 - sqrt2).abs() < 1e-15);
        assert!((s2 - sqrt2).abs() < 1e-15);

        // paraboloid family w = |C| + C<x,ξ> vanishes at -sign(C) ξ
        let c = -0.7;
        let w = ScalarField::affine(f64::abs(c), dv(&[0.0, 0.0, c]), 1.0).unwrap();
        assert!(matches!(
            s_field(&w, &unit(&[0.0, 0.0, 1.0]), 0.0),
            Err(Error::ZeroSet { .. })
        ));
    }

    #[test]
    fn s_constancy_examples() {
        let pts = sample_sphere(2, 100, SamplingStrategy::Fibonacci, 0).unwrap();
        let (c2, c): (f64, f64) = (2.5, -1.3);
        let s = (c * c + c2 - 1.0).sqrt();
        let w = ScalarField::affine(s, dv(&[0.6 * c, 0.0, 0.8 * c]), 1.0).unwrap();
        let stats = s_constancy(&w, &pts, c2 - 1.0).unwrap();
        assert!(stats.max_deviation <= 1e-10);
        assert!((stats.mean - s).abs() <= 1e-12);

        let stats = s_constancy(&axial_quadratic(), &pts, 0.0).unwrap();
        assert!(stats.max_deviation > 0.1, "{stats:?}");

        let w0 = 1.7;
        let a = 0.4;
        let w = ScalarField::constant(w0, 3, 1.0).unwrap();
        let stats = s_constancy(&w, &pts, a).unwrap();
        assert!((stats.mean - (w0 * w0 + a) / (2.0 * w0)).abs() <= 1e-15);
        assert!(stats.max_deviation <= 1e-15);

        assert!(matches!(
            s_constancy(&w, &pts[..1], a),
            Err(Error::InsufficientSamples { .. })
        ));
    }

    #[test]
    fn shifted_and_trace_examples() {
        let sqrt2 = 2f64.sqrt();
        let w = ScalarField::affine(sqrt2, dv(&[1.0, 0.0, 0.0]), 1.0).unwrap();
        for x in sample_sphere(2, 20, SamplingStrategy::Fibonacci, 0).unwrap() {
            assert!(obata_shifted_residual(&w, &x, sqrt2).unwrap().abs().max() < 1e-15);
            assert!(trace_residual(&w, &x, sqrt2).unwrap().abs() < 1e-15);
        }
        let x = unit(&[0.3, 0.4, 0.5]);
        let pure = ScalarField::affine(0.0, dv(&[0.0, 2.0, 0.0]), 1.0).unwrap();
        assert!(obata_shifted_residual(&pure, &x, 0.0).unwrap().abs().max() < 1e-15);
        let one = ScalarField::constant(1.0, 3, 1.0).unwrap();
        assert_eq!(obata_shifted_residual(&one, &x, 0.0).unwrap(), DMatrix::identity(2, 2));
        let five = ScalarField::constant(5.0, 3, 1.0).unwrap();
        assert_eq!(trace_residual(&five, &x, 5.0).unwrap(), 0.0);

        // w = t² with t = <x,ξ>: Δ(t²) = 2|∇t|² + 2tΔt = 2(1 − t²) − 2n t², so
        // trace residual = 2 − 2t² − 4t² + 2t² = 2 − 4t² for n = 2, S = 0.
        let sq = ScalarField::generic(1.0, |p: &SpherePoint| p.coords()[0].powi(2)).unwrap();
        let t = x.coords()[0];
        let r = trace_residual(&sq, &x, 0.0).unwrap();
        assert!((r - (2.0 - 4.0 * t * t)).abs() < 1e-5);
        assert!(r.abs() > 0.1);
    }

    #[test]
    fn schouten_examples() {
        let (c2, c): (f64, f64) = (1.8, 0.9);
        let s = (c * c + c2 - 1.0).sqrt();
        let w = ScalarField::affine(s, dv(&[c, 0.0, 0.0]), 1.0).unwrap();
        let x = unit(&[0.2, 0.7, 0.1]);
        assert!(schouten_residual(&w, &x, c2).unwrap().abs().max() < 1e-14);

        let e = std::f64::consts::E;
        let w = ScalarField::constant(e, 3, 1.0).unwrap();
        assert!(schouten_residual(&w, &x, e * e + 1.0).unwrap().abs().max() < 1e-14);

        let neg = ScalarField::constant(-1.0, 3, 1.0).unwrap();
        assert!(matches!(schouten_residual(&neg, &x, 2.0), Err(Error::NonPositive(_))));
    }

    #[test]
    fn schouten_is_half_of_eq1_for_positive_fields() {
        let w = ScalarField::generic(1.0, |p: &SpherePoint| {
            let c = p.coords();
            2.0 + c[0] * c[1] + 0.5 * c[2].sin()
        })
        .unwrap();
        for x in sample_sphere(2, 30, SamplingStrategy::Fibonacci, 0).unwrap() {
            let sch = schouten_residual(&w, &x, 1.3).unwrap();
            let e1 = eq1_residual(&w, &x, 1.3).unwrap();
            assert!((sch - e1 / 2.0).abs().max() <= 1e-9);
        }
    }

    #[test]
    fn affine_eq1_is_isotropic() {
        let w = ScalarField::affine(0.4, dv(&[0.3, -1.1, 0.2, 0.5]), 1.0).unwrap();
        for x in sample_sphere(3, 25, SamplingStrategy::UniformRandom, 5).unwrap() {
            let r = eq1_residual(&w, &x, 0.7).unwrap();
            let d = r[(0, 0)];
            assert!((r - DMatrix::identity(3, 3) * d).abs().max() < 1e-10);
        }
    }

    #[test]
    fn trace_consistency_with_shifted_system() {
        let w = axial_quadratic();
        for x in sample_sphere(2, 25, SamplingStrategy::Fibonacci, 0).unwrap() {
            let m = obata_shifted_residual(&w, &x, 0.3).unwrap();
            let t = trace_residual(&w, &x, 0.3).unwrap();
            assert!((m.trace() - t).abs() < 1e-10);
        }
    }

    #[test]
    fn report_over_solution_family() {
        let pts = sample_sphere(2, 60, SamplingStrategy::Fibonacci, 0).unwrap();
        let (c2, c): (f64, f64) = (3.0, 1.0);
        let s = (c * c + c2 - 1.0).sqrt();
        let w = ScalarField::affine(s, dv(&[0.0, c, 0.0]), 1.0).unwrap();
        let report = residual_report(&w, &pts, c2, None).unwrap();
        assert_eq!(report.path, DerivativePath::Analytic);
        assert!(report.worst() < 1e-12, "{report:?}");
        assert!((report.s - s).abs() < 1e-12);
        assert!(report.schouten.is_some());

        let fd = w.to_generic(FdConfig::extrapolated(1e-3, 2));
        let report = residual_report(&fd, &pts, c2, Some(s)).unwrap();
        assert_eq!(report.path, DerivativePath::FiniteDifference);
        assert!(report.eq1.max < 1e-6);
    }

    #[test]
    fn invariant_chain_tracks_perturbation_size() {
        // a slightly perturbed solution: eq1 residual ~ τ, then S spread and
        // the shifted residual with the fitted S stay within a small multiple
        let pts = sample_sphere(2, 100, SamplingStrategy::Fibonacci, 0).unwrap();
        let (c2, c): (f64, f64) = (2.0, 1.0);
        let s = (c * c + c2 - 1.0).sqrt();
        for eps in [1e-4, 1e-6] {
            let w = ScalarField::generic(1.0, move |p: &SpherePoint| {
                let c = p.coords();
                s + c[0] + eps * c[1] * c[2]
            })
            .unwrap()
            .with_fd(FdConfig::extrapolated(1e-2, 3));
            let report = residual_report(&w, &pts, c2, None).unwrap();
            let tau = report.eq1.max;
            assert!(tau > 0.0 && tau < 20.0 * eps);
            let spread = report.s_constancy.unwrap().max_deviation;
            assert!(spread <= 10.0 * tau, "spread {spread} tau {tau}");
            assert!(report.obata_shifted.max <= 10.0 * tau);
        }
    }
}
