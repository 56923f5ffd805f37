//! Points, tangent frames and sampling on round spheres, plus scalar fields
//! with their spherical gradient, covariant Hessian and Laplace–Beltrami
//! operator.
//!
//! Fields come in two kinds. [`ScalarField::affine`] fields `S + <x, v>` have
//! closed-form derivatives. [`ScalarField::generic`] fields are black boxes and
//! are differentiated through their degree-0 homogeneous extension
//! `W(y) = w(r y / |y|)`: since `W` has no radial derivative, the covariant
//! Hessian on the sphere is the ambient Hessian of `W` restricted to the
//! tangent space, with no second-fundamental-form correction.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};

/// Relative tolerance for `|coords| = radius`.
pub const RADIUS_TOL: f64 = 1e-12;

/// A point on the sphere of radius `radius` centered at the origin of R^{n+1}.
#[derive(Debug, Clone, PartialEq)]
pub struct SpherePoint {
    coords: DVector<f64>,
    radius: f64,
}

impl SpherePoint {
    /// Validates that `coords` already lies on the sphere of the given radius.
    pub fn new(coords: DVector<f64>, radius: f64) -> Result<Self> {
        check_radius(radius)?;
        check_dimension(coords.len())?;
        let norm = coords.norm();
        if (norm - radius).abs() > RADIUS_TOL * radius {
            return Err(Error::Domain(format!(
                "|x| = {norm} is not on the sphere of radius {radius}"
            )));
        }
        Ok(Self { coords, radius })
    }

    pub fn unit(coords: DVector<f64>) -> Result<Self> {
        Self::new(coords, 1.0)
    }

    pub fn from_slice(coords: &[f64], radius: f64) -> Result<Self> {
        Self::new(DVector::from_column_slice(coords), radius)
    }

    pub fn coords(&self) -> &DVector<f64> {
        &self.coords
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    /// Intrinsic dimension `n` of the sphere S^n.
    pub fn dim(&self) -> usize {
        self.coords.len() - 1
    }

    /// The unit direction `x / |x|`.
    pub fn direction(&self) -> DVector<f64> {
        &self.coords / self.radius
    }

    pub fn into_coords(self) -> DVector<f64> {
        self.coords
    }
}

fn check_radius(radius: f64) -> Result<()> {
    if !(radius.is_finite() && radius > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "sphere radius must be positive and finite, got {radius}"
        )));
    }
    Ok(())
}

fn check_dimension(ambient: usize) -> Result<()> {
    if ambient < 3 {
        return Err(Error::InvalidArgument(format!(
            "spheres of dimension n >= 2 only (ambient length {ambient})"
        )));
    }
    Ok(())
}

/// Scales `v` onto the sphere of the given radius.
pub fn project_to_sphere(v: &DVector<f64>, radius: f64) -> Result<SpherePoint> {
    check_radius(radius)?;
    check_dimension(v.len())?;
    let norm = v.norm();
    if !(norm > 0.0 && norm.is_finite()) {
        return Err(Error::Domain(
            "cannot project a zero or non-finite vector to the sphere".into(),
        ));
    }
    let mut coords = v * (radius / norm);
    // renormalize once more so the stored point meets RADIUS_TOL even for
    // badly scaled input
    let again = coords.norm();
    coords *= radius / again;
    Ok(SpherePoint { coords, radius })
}

/// An orthonormal basis of the tangent space at `base`.
#[derive(Debug, Clone)]
pub struct TangentFrame {
    base: SpherePoint,
    basis: Vec<DVector<f64>>,
}

impl TangentFrame {
    /// Builds a frame from caller-supplied tangent vectors, checking
    /// orthonormality and tangency within 1e-12.
    pub fn from_basis(base: SpherePoint, basis: Vec<DVector<f64>>) -> Result<Self> {
        let n = base.dim();
        if basis.len() != n {
            return Err(Error::InvalidArgument(format!(
                "tangent frame needs {n} vectors, got {}",
                basis.len()
            )));
        }
        let dir = base.direction();
        for (i, bi) in basis.iter().enumerate() {
            if bi.len() != n + 1 {
                return Err(Error::InvalidArgument("frame vector length".into()));
            }
            if bi.dot(&dir).abs() > 1e-12 {
                return Err(Error::InvalidArgument(format!("frame vector {i} not tangent")));
            }
            for (j, bj) in basis.iter().enumerate() {
                let expect = if i == j { 1.0 } else { 0.0 };
                if (bi.dot(bj) - expect).abs() > 1e-12 {
                    return Err(Error::InvalidArgument("frame is not orthonormal".into()));
                }
            }
        }
        Ok(Self { base, basis })
    }

    pub fn base(&self) -> &SpherePoint {
        &self.base
    }

    pub fn basis(&self) -> &[DVector<f64>] {
        &self.basis
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    /// Components of an ambient vector in this frame.
    pub fn components(&self, v: &DVector<f64>) -> DVector<f64> {
        DVector::from_iterator(self.basis.len(), self.basis.iter().map(|b| b.dot(v)))
    }
}

/// Deterministic tangent frame: the coordinate axes other than the one with
/// the largest `|x_j|`, orthonormalized against `x` by modified Gram–Schmidt.
pub fn tangent_frame(x: &SpherePoint) -> TangentFrame {
    let dir = x.direction();
    let pivot = dir.iamax();
    let ambient = dir.len();
    let mut basis: Vec<DVector<f64>> = Vec::with_capacity(ambient - 1);
    for j in (0..ambient).filter(|&j| j != pivot) {
        let mut e = DVector::zeros(ambient);
        e[j] = 1.0;
        // two passes of MGS keep orthogonality at the 1e-16 level
        for _ in 0..2 {
            let d = dir.dot(&e);
            e.axpy(-d, &dir, 1.0);
            for b in &basis {
                let d = b.dot(&e);
                e.axpy(-d, b, 1.0);
            }
        }
        let norm = e.norm();
        basis.push(e / norm);
    }
    TangentFrame { base: x.clone(), basis }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SamplingStrategy {
    /// Quasi-uniform Fibonacci lattice, S^2 only.
    Fibonacci,
    /// Normalized standard Gaussian vectors.
    UniformRandom,
}

impl std::str::FromStr for SamplingStrategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fibonacci" => Ok(Self::Fibonacci),
            "uniform_random" | "uniform-random" | "random" => Ok(Self::UniformRandom),
            other => Err(Error::UnsupportedStrategy(other.to_string())),
        }
    }
}

/// Points on the unit sphere S^n. Deterministic for a given seed.
pub fn sample_sphere(n: usize, count: usize, strategy: SamplingStrategy, seed: u64) -> Result<Vec<SpherePoint>> {
    check_dimension(n + 1)?;
    if count == 0 {
        return Err(Error::InvalidArgument("sample count must be at least 1".into()));
    }
    match strategy {
        SamplingStrategy::Fibonacci => {
            if n != 2 {
                return Err(Error::UnsupportedStrategy(format!(
                    "fibonacci lattice is only defined on S^2, not S^{n}"
                )));
            }
            Ok(fibonacci_lattice(count))
        }
        SamplingStrategy::UniformRandom => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            Ok((0..count).map(|_| random_unit(&mut rng, n + 1)).collect())
        }
    }
}

fn fibonacci_lattice(count: usize) -> Vec<SpherePoint> {
    let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    (0..count)
        .map(|i| {
            let z = 1.0 - (2.0 * i as f64 + 1.0) / count as f64;
            let r = (1.0 - z * z).max(0.0).sqrt();
            let phi = golden * i as f64;
            let v = DVector::from_vec(vec![r * phi.cos(), r * phi.sin(), z]);
            project_to_sphere(&v, 1.0).expect("lattice point is nonzero")
        })
        .collect()
}

/// A uniformly distributed point on the unit sphere in R^{ambient}.
pub(crate) fn random_unit(rng: &mut ChaCha8Rng, ambient: usize) -> SpherePoint {
    loop {
        let v = DVector::from_fn(ambient, |_, _| StandardNormal.sample(rng));
        if v.norm() > 1e-300 {
            return project_to_sphere(&v, 1.0).expect("nonzero vector");
        }
    }
}

/// Step sizes for finite-difference derivatives, in units of the sphere
/// radius. With `extrapolation_levels > 1`, Richardson extrapolation over the
/// steps `h, h/2, ..., h/2^(levels-1)` raises the order from 2 to `2 * levels`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FdConfig {
    pub gradient_step: f64,
    pub hessian_step: f64,
    pub extrapolation_levels: usize,
}

impl Default for FdConfig {
    fn default() -> Self {
        Self {
            gradient_step: 1e-4,
            hessian_step: 1e-3,
            extrapolation_levels: 1,
        }
    }
}

impl FdConfig {
    /// Plain central differences with the same step for both derivatives.
    pub fn central(step: f64) -> Self {
        Self {
            gradient_step: step,
            hessian_step: step,
            extrapolation_levels: 1,
        }
    }

    pub fn extrapolated(step: f64, levels: usize) -> Self {
        Self {
            gradient_step: step,
            hessian_step: step,
            extrapolation_levels: levels.max(1),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DerivativePath {
    Analytic,
    FiniteDifference,
}

type Evaluator = Arc<dyn Fn(&SpherePoint) -> f64 + Send + Sync>;

#[derive(Clone)]
enum FieldKind {
    Affine { s: f64, v: DVector<f64> },
    Generic { eval: Evaluator, fd: FdConfig },
}

/// A scalar function on a sphere of fixed radius.
#[derive(Clone)]
pub struct ScalarField {
    kind: FieldKind,
    radius: f64,
}

impl fmt::Debug for ScalarField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            FieldKind::Affine { s, v } => f
                .debug_struct("ScalarField::Affine")
                .field("s", s)
                .field("v", &v.as_slice())
                .field("radius", &self.radius)
                .finish(),
            FieldKind::Generic { fd, .. } => f
                .debug_struct("ScalarField::Generic")
                .field("fd", fd)
                .field("radius", &self.radius)
                .finish(),
        }
    }
}

/// Value and first two covariant derivatives of a field at one point.
#[derive(Debug, Clone)]
pub struct Jet {
    pub value: f64,
    /// Tangent gradient as an ambient vector.
    pub gradient: DVector<f64>,
    /// Gradient components in the frame.
    pub gradient_frame: DVector<f64>,
    /// Covariant Hessian in the frame.
    pub hessian: DMatrix<f64>,
    pub path: DerivativePath,
}

impl ScalarField {
    /// `w(x) = s + <x, v>` on the sphere of the given radius.
    pub fn affine(s: f64, v: DVector<f64>, radius: f64) -> Result<Self> {
        check_radius(radius)?;
        check_dimension(v.len())?;
        Ok(Self {
            kind: FieldKind::Affine { s, v },
            radius,
        })
    }

    pub fn constant(value: f64, ambient: usize, radius: f64) -> Result<Self> {
        Self::affine(value, DVector::zeros(ambient), radius)
    }

    /// A black-box field differentiated by finite differences with default steps.
    pub fn generic<F>(radius: f64, eval: F) -> Result<Self>
    where
        F: Fn(&SpherePoint) -> f64 + Send + Sync + 'static,
    {
        check_radius(radius)?;
        Ok(Self {
            kind: FieldKind::Generic {
                eval: Arc::new(eval),
                fd: FdConfig::default(),
            },
            radius,
        })
    }

    /// Replaces the finite-difference configuration. No effect on affine fields.
    pub fn with_fd(mut self, config: FdConfig) -> Self {
        if let FieldKind::Generic { fd, .. } = &mut self.kind {
            *fd = config;
        }
        self
    }

    /// The same function, forgotten as a black box so that every derivative
    /// goes through the finite-difference path.
    pub fn to_generic(&self, config: FdConfig) -> Self {
        let this = self.clone();
        let eval: Evaluator = Arc::new(move |x: &SpherePoint| this.value(x));
        Self {
            kind: FieldKind::Generic { eval, fd: config },
            radius: self.radius,
        }
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn path(&self) -> DerivativePath {
        match self.kind {
            FieldKind::Affine { .. } => DerivativePath::Analytic,
            FieldKind::Generic { .. } => DerivativePath::FiniteDifference,
        }
    }

    /// `(S, v)` for affine fields.
    pub fn affine_parts(&self) -> Option<(f64, &DVector<f64>)> {
        match &self.kind {
            FieldKind::Affine { s, v } => Some((*s, v)),
            FieldKind::Generic { .. } => None,
        }
    }

    pub fn value(&self, x: &SpherePoint) -> f64 {
        match &self.kind {
            FieldKind::Affine { s, v } => s + x.coords().dot(v),
            FieldKind::Generic { eval, .. } => eval(x),
        }
    }

    fn check_point(&self, x: &SpherePoint) -> Result<()> {
        if (x.radius() - self.radius).abs() > RADIUS_TOL * self.radius {
            return Err(Error::ParameterMismatch(format!(
                "point on sphere of radius {} but field lives on radius {}",
                x.radius(),
                self.radius
            )));
        }
        if let FieldKind::Affine { v, .. } = &self.kind {
            if v.len() != x.coords().len() {
                return Err(Error::ParameterMismatch(format!(
                    "field in R^{} evaluated at a point in R^{}",
                    v.len(),
                    x.coords().len()
                )));
            }
        }
        Ok(())
    }

    /// Degree-0 homogeneous extension `W(y) = w(r y / |y|)`.
    fn extension(&self, y: &DVector<f64>) -> f64 {
        let p = project_to_sphere(y, self.radius).expect("finite-difference probe off origin");
        self.value(&p)
    }

    /// Value, gradient and Hessian at `x` in `frame`.
    pub fn jet(&self, x: &SpherePoint, frame: &TangentFrame) -> Result<Jet> {
        self.check_point(x)?;
        if frame.base().coords() != x.coords() {
            return Err(Error::ParameterMismatch("frame is not based at x".into()));
        }
        let n = frame.dim();
        match &self.kind {
            FieldKind::Affine { s, v } => {
                let r2 = self.radius * self.radius;
                let lin = x.coords().dot(v);
                let dir = x.direction();
                let gradient = v - &dir * dir.dot(v);
                Ok(Jet {
                    value: s + lin,
                    gradient_frame: frame.components(v),
                    gradient,
                    hessian: DMatrix::identity(n, n) * (-lin / r2),
                    path: DerivativePath::Analytic,
                })
            }
            FieldKind::Generic { fd, .. } => {
                // differences are taken in the canonical frame and rotated
                // into the requested one, so frame invariants hold to roundoff
                let canonical = tangent_frame(x);
                let g = extrapolate(fd.gradient_step, fd.extrapolation_levels, |h| {
                    DMatrix::from_column_slice(n, 1, self.fd_gradient(x, &canonical, h).as_slice())
                });
                let h = extrapolate(fd.hessian_step, fd.extrapolation_levels, |h| {
                    self.fd_hessian(x, &canonical, h)
                });
                let change = DMatrix::from_fn(n, n, |i, j| canonical.basis()[i].dot(&frame.basis()[j]));
                let gradient_frame = (change.transpose() * g).column(0).into_owned();
                let hessian = change.transpose() * h * &change;
                let mut gradient = DVector::zeros(x.coords().len());
                for (b, gi) in frame.basis().iter().zip(gradient_frame.iter()) {
                    gradient.axpy(*gi, b, 1.0);
                }
                Ok(Jet {
                    value: self.value(x),
                    gradient,
                    gradient_frame,
                    hessian: (&hessian + hessian.transpose()) * 0.5,
                    path: DerivativePath::FiniteDifference,
                })
            }
        }
    }

    fn fd_gradient(&self, x: &SpherePoint, frame: &TangentFrame, h: f64) -> DVector<f64> {
        let step = h * self.radius;
        let y = x.coords();
        DVector::from_iterator(
            frame.dim(),
            frame.basis().iter().map(|b| {
                let fp = self.extension(&(y + b * step));
                let fm = self.extension(&(y - b * step));
                (fp - fm) / (2.0 * step)
            }),
        )
    }

    fn fd_hessian(&self, x: &SpherePoint, frame: &TangentFrame, h: f64) -> DMatrix<f64> {
        let step = h * self.radius;
        let y = x.coords();
        let b = frame.basis();
        let n = b.len();
        let w0 = self.value(x);
        let mut hess = DMatrix::zeros(n, n);
        for i in 0..n {
            let bi = &b[i] * step;
            let fp = self.extension(&(y + &bi));
            let fm = self.extension(&(y - &bi));
            hess[(i, i)] = (fp - 2.0 * w0 + fm) / (step * step);
            for j in (i + 1)..n {
                let bj = &b[j] * step;
                let fpp = self.extension(&(y + &bi + &bj));
                let fpm = self.extension(&(y + &bi - &bj));
                let fmp = self.extension(&(y - &bi + &bj));
                let fmm = self.extension(&(y - &bi - &bj));
                let mixed = (fpp - fpm - fmp + fmm) / (4.0 * step * step);
                hess[(i, j)] = mixed;
                hess[(j, i)] = mixed;
            }
        }
        hess
    }
}

/// Richardson extrapolation of an even-order expansion in `h`.
fn extrapolate<F>(h: f64, levels: usize, f: F) -> DMatrix<f64>
where
    F: Fn(f64) -> DMatrix<f64>,
{
    let levels = levels.max(1);
    let mut table: Vec<DMatrix<f64>> = (0..levels).map(|i| f(h / f64::powi(2.0, i as i32))).collect();
    for m in 1..levels {
        let factor = f64::powi(4.0, m as i32);
        table = table
            .windows(2)
            .map(|pair| (&pair[1] * factor - &pair[0]) / (factor - 1.0))
            .collect();
    }
    table.swap_remove(0)
}

/// Tangent gradient of `w` at `x`, as an ambient vector.
pub fn gradient(w: &ScalarField, x: &SpherePoint) -> Result<DVector<f64>> {
    let frame = tangent_frame(x);
    Ok(w.jet(x, &frame)?.gradient)
}

/// Covariant Hessian `H[i][j] = (∇²w)(b_i, b_j)` in `frame`.
pub fn hessian(w: &ScalarField, x: &SpherePoint, frame: &TangentFrame) -> Result<DMatrix<f64>> {
    Ok(w.jet(x, frame)?.hessian)
}

/// Laplace–Beltrami operator, the trace of the covariant Hessian.
pub fn laplacian(w: &ScalarField, x: &SpherePoint) -> Result<f64> {
    let frame = tangent_frame(x);
    Ok(w.jet(x, &frame)?.hessian.trace())
}

/// Ratio of truncation error to the roundoff floor below which a step is
/// considered roundoff-dominated.
pub const RELIABLE_FLOOR_RATIO: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConvergenceRow {
    pub h: f64,
    /// Largest entry of `H_fd − H_analytic` over the points.
    pub max_error: f64,
    /// `4 ε max|w| / (h r)²`, the expected size of cancellation error.
    pub roundoff_floor: f64,
    /// Observed order against the previous row.
    pub order: Option<f64>,
    pub reliable: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceTable {
    pub rows: Vec<ConvergenceRow>,
    /// Least-squares slope of `log error` against `log h` over the reliable rows.
    pub fitted_order: Option<f64>,
    pub fitted_reliable: bool,
}

/// Compares plain central-difference Hessians at each step in `steps` with the
/// analytic Hessian of an affine field.
pub fn hessian_convergence(w: &ScalarField, points: &[SpherePoint], steps: &[f64]) -> Result<ConvergenceTable> {
    if steps.is_empty() {
        return Err(Error::InvalidArgument("no finite-difference steps given".into()));
    }
    if let Some(h) = steps.iter().find(|h| !(h.is_finite() && **h > 0.0)) {
        return Err(Error::InvalidArgument(format!("step must be positive, got {h}")));
    }
    if points.is_empty() {
        return Err(Error::InsufficientSamples { found: 0, required: 1 });
    }
    if w.affine_parts().is_none() {
        return Err(Error::InvalidArgument(
            "convergence scan needs an affine reference field".into(),
        ));
    }
    let frames: Vec<TangentFrame> = points.iter().map(tangent_frame).collect();
    let exact = points
        .par_iter()
        .zip(frames.par_iter())
        .map(|(x, f)| w.jet(x, f).map(|j| j.hessian))
        .collect::<Result<Vec<_>>>()?;
    let max_w = points.iter().map(|x| w.value(x).abs()).fold(0.0, f64::max);
    let mut rows: Vec<ConvergenceRow> = Vec::with_capacity(steps.len());
    for &h in steps {
        let fd = w.to_generic(FdConfig::central(h));
        let errors = points
            .par_iter()
            .zip(frames.par_iter())
            .zip(exact.par_iter())
            .map(|((x, f), e)| fd.jet(x, f).map(|j| (j.hessian - e).amax()))
            .collect::<Result<Vec<_>>>()?;
        let max_error = errors.into_iter().fold(0.0, f64::max);
        let step = h * w.radius();
        let roundoff_floor = 4.0 * f64::EPSILON * max_w.max(f64::MIN_POSITIVE) / (step * step);
        let mut row = ConvergenceRow {
            h,
            max_error,
            roundoff_floor,
            order: None,
            reliable: max_error > RELIABLE_FLOOR_RATIO * roundoff_floor,
        };
        if let Some(prev) = rows.last() {
            row.order = Some((prev.max_error / max_error).ln() / (prev.h / h).ln());
            row.reliable &= prev.reliable;
        }
        rows.push(row);
    }
    let usable: Vec<&ConvergenceRow> = rows
        .iter()
        .filter(|r| r.max_error > RELIABLE_FLOOR_RATIO * r.roundoff_floor)
        .collect();
    let fit_rows: Vec<&ConvergenceRow> = if usable.len() >= 2 {
        usable.clone()
    } else {
        rows.iter().collect()
    };
    let fitted_order = log_slope(&fit_rows);
    Ok(ConvergenceTable {
        fitted_reliable: usable.len() >= 2 && fitted_order.is_some(),
        rows,
        fitted_order,
    })
}

fn log_slope(rows: &[&ConvergenceRow]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.max_error > 0.0)
        .map(|r| (r.h.ln(), r.max_error.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let m = pts.len() as f64;
    let (mx, my) = pts.iter().fold((0.0, 0.0), |(a, b), (x, y)| (a + x / m, b + y / m));
    let sxx: f64 = pts.iter().map(|(x, _)| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = pts.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
    Some(sxy / sxx)
}
