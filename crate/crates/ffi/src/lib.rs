//! C ABI over `quadric-core`.
//!
//! Every function returns a [`QuadricStatus`]; on failure a message is kept
//! per thread and can be read with [`quadric_last_error`]. Models and fit
//! results are opaque handles owned by the caller and released with their
//! `_free` function. Vectors are passed as `(pointer, length)` pairs and
//! point sets as row-major arrays of `count * ambient` doubles, where
//! `ambient = n + 1` for the sphere `S^n`.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::slice;

use nalgebra::DVector;
use quadric_core::{
    self as core, fit_inverse_radial, geometric_elements, quadric_to_solution, radial, residual_report, sample_radial,
    sample_sphere, solution_to_quadric, verify_solution, Branch, FitOptions, FitResult, QuadricParams, RadialSample,
    ResidualReport, SamplingStrategy, SolutionParams, SpherePoint, Tolerances, Weighting,
};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QuadricStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Domain = 3,
    NoSolution = 4,
    Unrepresentable = 5,
    ExcludedBranch = 6,
    DegenerateGeometry = 7,
    InsufficientSamples = 8,
    NoElements = 9,
    Sampling = 10,
    BufferTooSmall = 11,
    Panic = 12,
}

/// Kind codes, used both as outputs and as `uint32_t` inputs.
#[repr(u32)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QuadricKind {
    Ellipsoid = 0,
    Paraboloid = 1,
    HyperboloidSheet = 2,
    Hyperplane = 3,
    CenteredSphere = 4,
}

impl From<core::QuadricKind> for QuadricKind {
    fn from(kind: core::QuadricKind) -> Self {
        match kind {
            core::QuadricKind::Ellipsoid => Self::Ellipsoid,
            core::QuadricKind::Paraboloid => Self::Paraboloid,
            core::QuadricKind::HyperboloidSheet => Self::HyperboloidSheet,
            core::QuadricKind::Hyperplane => Self::Hyperplane,
            core::QuadricKind::CenteredSphere => Self::CenteredSphere,
        }
    }
}

fn kind_from_code(code: u32) -> Result<core::QuadricKind, Failure> {
    Ok(match code {
        0 => core::QuadricKind::Ellipsoid,
        1 => core::QuadricKind::Paraboloid,
        2 => core::QuadricKind::HyperboloidSheet,
        3 => core::QuadricKind::Hyperplane,
        4 => core::QuadricKind::CenteredSphere,
        _ => {
            return Err(Failure::new(
                QuadricStatus::InvalidArgument,
                format!("unknown kind code {code}"),
            ))
        }
    })
}

/// Residual summary. Quantities absent from a report are NaN.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadricReport {
    pub samples: usize,
    pub analytic: bool,
    pub c2: f64,
    pub k: f64,
    pub s: f64,
    pub eq1_max: f64,
    pub eq1_rms: f64,
    pub obata_shifted_max: f64,
    pub trace_max: f64,
    pub schouten_max: f64,
    pub s_deviation: f64,
    pub reciprocity_max: f64,
    pub worst: f64,
    pub under_determined: bool,
}

impl From<&ResidualReport> for QuadricReport {
    fn from(r: &ResidualReport) -> Self {
        Self {
            samples: r.samples,
            analytic: r.path == core::DerivativePath::Analytic,
            c2: r.c2,
            k: r.k,
            s: r.s,
            eq1_max: r.eq1.max,
            eq1_rms: r.eq1.rms,
            obata_shifted_max: r.obata_shifted.max,
            trace_max: r.trace.max,
            schouten_max: r.schouten.map_or(f64::NAN, |s| s.max),
            s_deviation: r.s_constancy.map_or(f64::NAN, |s| s.max_deviation),
            reciprocity_max: r.reciprocity.map_or(f64::NAN, |s| s.max),
            worst: r.worst(),
            under_determined: r.under_determined,
        }
    }
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadricFitSummary {
    pub s: f64,
    pub amplitude: f64,
    pub c2: f64,
    pub kind: QuadricKind,
    pub rms_residual: f64,
    pub condition: f64,
    pub samples: usize,
}

/// A quadric in canonical form `rho = f / (1 - eps <x, xi>)`.
pub struct QuadricModel {
    params: QuadricParams,
}

/// A fit together with the samples it was computed from.
pub struct QuadricFit {
    result: FitResult,
    samples: Vec<RadialSample>,
}

struct Failure {
    status: QuadricStatus,
    message: String,
}

impl Failure {
    fn new(status: QuadricStatus, message: impl Into<String>) -> Self {
        Self {
            status,
            message: message.into(),
        }
    }

    fn null(what: &str) -> Self {
        Self::new(QuadricStatus::NullPointer, format!("{what} is null"))
    }
}

impl From<core::Error> for Failure {
    fn from(e: core::Error) -> Self {
        use core::Error::*;
        let status = match e {
            Domain(_) | ZeroSet { .. } | NonPositive(_) => QuadricStatus::Domain,
            InvalidArgument(_) | UnsupportedStrategy(_) | ParameterMismatch(_) => QuadricStatus::InvalidArgument,
            NoSolution(_) => QuadricStatus::NoSolution,
            ExcludedBranch => QuadricStatus::ExcludedBranch,
            Unrepresentable(_) => QuadricStatus::Unrepresentable,
            DegenerateGeometry(_) => QuadricStatus::DegenerateGeometry,
            InsufficientSamples { .. } => QuadricStatus::InsufficientSamples,
            NoElements(_) => QuadricStatus::NoElements,
            Sampling { .. } => QuadricStatus::Sampling,
        };
        Self::new(status, e.to_string())
    }
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(message: &str) {
    let text = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(text));
}

fn guard<F>(body: F) -> QuadricStatus
where
    F: FnOnce() -> Result<(), Failure>,
{
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|slot| *slot.borrow_mut() = None);
            QuadricStatus::Ok
        }
        Ok(Err(failure)) => {
            set_last_error(&failure.message);
            failure.status
        }
        Err(_) => {
            set_last_error("panic inside quadric library");
            QuadricStatus::Panic
        }
    }
}

unsafe fn input<'a>(ptr: *const f64, len: usize, what: &str) -> Result<&'a [f64], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if ptr.is_null() {
        return Err(Failure::null(what));
    }
    Ok(slice::from_raw_parts(ptr, len))
}

unsafe fn output<'a>(ptr: *mut f64, len: usize, needed: usize, what: &str) -> Result<&'a mut [f64], Failure> {
    if len < needed {
        return Err(Failure::new(
            QuadricStatus::BufferTooSmall,
            format!("{what} holds {len} values, {needed} needed"),
        ));
    }
    if needed == 0 {
        return Ok(&mut []);
    }
    if ptr.is_null() {
        return Err(Failure::null(what));
    }
    Ok(slice::from_raw_parts_mut(ptr, needed))
}

unsafe fn write<T>(ptr: *mut T, value: T, what: &str) -> Result<(), Failure> {
    if ptr.is_null() {
        return Err(Failure::null(what));
    }
    ptr.write(value);
    Ok(())
}

unsafe fn model<'a>(handle: *const QuadricModel) -> Result<&'a QuadricModel, Failure> {
    handle.as_ref().ok_or_else(|| Failure::null("model handle"))
}

unsafe fn fit_handle<'a>(handle: *const QuadricFit) -> Result<&'a QuadricFit, Failure> {
    handle.as_ref().ok_or_else(|| Failure::null("fit handle"))
}

fn branch_from_sign(sign: i32) -> Result<Branch, Failure> {
    match sign {
        1 => Ok(Branch::Plus),
        -1 => Ok(Branch::Minus),
        _ => Err(Failure::new(
            QuadricStatus::InvalidArgument,
            format!("branch must be +1 or -1, got {sign}"),
        )),
    }
}

fn weighting_from_code(code: u32) -> Result<Weighting, Failure> {
    match code {
        0 => Ok(Weighting::Uniform),
        1 => Ok(Weighting::RhoSquared),
        _ => Err(Failure::new(
            QuadricStatus::InvalidArgument,
            format!("unknown weighting code {code}"),
        )),
    }
}

fn radial_samples(directions: &[f64], rhos: &[f64], ambient: usize) -> Result<Vec<RadialSample>, Failure> {
    directions
        .chunks_exact(ambient)
        .zip(rhos)
        .map(|(x, rho)| {
            let x = SpherePoint::unit(DVector::from_column_slice(x))?;
            Ok(RadialSample::new(x, *rho)?)
        })
        .collect()
}

fn check_ambient(ambient: usize) -> Result<(), Failure> {
    if ambient < 3 {
        return Err(Failure::new(
            QuadricStatus::InvalidArgument,
            format!("ambient dimension must be at least 3, got {ambient}"),
        ));
    }
    Ok(())
}

fn boxed<T>(value: T) -> *mut T {
    Box::into_raw(Box::new(value))
}

/// Message of the last failed call on this thread, or null after a success.
/// The pointer stays valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn quadric_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn quadric_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Builds a model from the canonical form. `kind` is a [`QuadricKind`] code.
///
/// # Safety
/// `axis` must point to `axis_len` doubles and `out` to writable storage.
#[no_mangle]
pub unsafe extern "C" fn quadric_model_from_canonical(
    kind: u32,
    f: f64,
    eps: f64,
    axis: *const f64,
    axis_len: usize,
    out: *mut *mut QuadricModel,
) -> QuadricStatus {
    guard(|| {
        let kind = kind_from_code(kind)?;
        let axis = DVector::from_column_slice(input(axis, axis_len, "axis")?);
        let params = QuadricParams::new(kind, f, eps, axis)?;
        write(out, boxed(QuadricModel { params }), "out")
    })
}

/// Builds the model of `w = S + C<x, xi>` with `S² = C² + c2 − 1`; `branch`
/// is the sign of `S` (+1 or −1).
///
/// # Safety
/// `axis` must point to `axis_len` doubles and `out` to writable storage.
#[no_mangle]
pub unsafe extern "C" fn quadric_model_from_solution(
    c2: f64,
    amplitude: f64,
    branch: i32,
    axis: *const f64,
    axis_len: usize,
    out: *mut *mut QuadricModel,
) -> QuadricStatus {
    guard(|| {
        let axis = DVector::from_column_slice(input(axis, axis_len, "axis")?);
        let solution = SolutionParams::new(c2, amplitude, axis, branch_from_sign(branch)?)?;
        let params = solution_to_quadric(&solution)?;
        write(out, boxed(QuadricModel { params }), "out")
    })
}

/// # Safety
/// `handle` must come from this library and not be used afterwards. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn quadric_model_free(handle: *mut QuadricModel) {
    if !handle.is_null() {
        drop(Box::from_raw(handle));
    }
}

/// Ambient dimension `n + 1`, or 0 for a null handle.
///
/// # Safety
/// `handle` must be null or a live model.
#[no_mangle]
pub unsafe extern "C" fn quadric_model_ambient_dim(handle: *const QuadricModel) -> usize {
    handle.as_ref().map_or(0, |m| m.params.ambient_dim())
}

/// # Safety
/// `handle` must be a live model; the out pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn quadric_model_params(
    handle: *const QuadricModel,
    kind: *mut QuadricKind,
    f: *mut f64,
    eps: *mut f64,
    axis: *mut f64,
    axis_len: usize,
) -> QuadricStatus {
    guard(|| {
        let m = model(handle)?;
        let dst = output(axis, axis_len, m.params.ambient_dim(), "axis")?;
        dst.copy_from_slice(m.params.axis.as_slice());
        write(kind, m.params.kind.into(), "kind")?;
        write(f, m.params.f, "f")?;
        write(eps, m.params.eps, "eps")
    })
}

/// Solution parameters of the model; fails with `ExcludedBranch` for a
/// centered sphere given in canonical form.
///
/// # Safety
/// `handle` must be a live model; the out pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn quadric_model_solution(
    handle: *const QuadricModel,
    c2: *mut f64,
    amplitude: *mut f64,
    s: *mut f64,
) -> QuadricStatus {
    guard(|| {
        let sol = quadric_to_solution(&model(handle)?.params)?;
        write(c2, sol.c2, "c2")?;
        write(amplitude, sol.amplitude, "amplitude")?;
        write(s, sol.s()?, "s")
    })
}

/// Radial function at a unit direction.
///
/// # Safety
/// `handle` must be a live model, `x` must point to `x_len` doubles.
#[no_mangle]
pub unsafe extern "C" fn quadric_model_radial(
    handle: *const QuadricModel,
    x: *const f64,
    x_len: usize,
    rho: *mut f64,
) -> QuadricStatus {
    guard(|| {
        let m = model(handle)?;
        let x = SpherePoint::unit(DVector::from_column_slice(input(x, x_len, "x")?))?;
        write(rho, radial(&m.params, &x)?, "rho")
    })
}

/// Seeded surface points, row-major into `points` (`count * ambient` doubles).
///
/// # Safety
/// `handle` must be a live model and `points` must hold `points_len` doubles.
#[no_mangle]
pub unsafe extern "C" fn quadric_model_sample_surface(
    handle: *const QuadricModel,
    count: usize,
    seed: u64,
    points: *mut f64,
    points_len: usize,
) -> QuadricStatus {
    guard(|| {
        let m = model(handle)?;
        let ambient = m.params.ambient_dim();
        let needed = count
            .checked_mul(ambient)
            .ok_or_else(|| Failure::new(QuadricStatus::InvalidArgument, "count too large"))?;
        let dst = output(points, points_len, needed, "points")?;
        for (row, sample) in dst
            .chunks_exact_mut(ambient)
            .zip(sample_radial(&m.params, count, seed)?)
        {
            row.copy_from_slice(sample.point().as_slice());
        }
        Ok(())
    })
}

/// Seeded radial samples: directions row-major into `directions`, radii into `rhos`.
///
/// # Safety
/// `handle` must be a live model; the buffers must hold the given lengths.
#[no_mangle]
pub unsafe extern "C" fn quadric_model_sample_radial(
    handle: *const QuadricModel,
    count: usize,
    seed: u64,
    directions: *mut f64,
    directions_len: usize,
    rhos: *mut f64,
    rhos_len: usize,
) -> QuadricStatus {
    guard(|| {
        let m = model(handle)?;
        let ambient = m.params.ambient_dim();
        let needed = count
            .checked_mul(ambient)
            .ok_or_else(|| Failure::new(QuadricStatus::InvalidArgument, "count too large"))?;
        let dirs = output(directions, directions_len, needed, "directions")?;
        let radii = output(rhos, rhos_len, count, "rhos")?;
        let samples = sample_radial(&m.params, count, seed)?;
        for ((row, rho), sample) in dirs.chunks_exact_mut(ambient).zip(radii.iter_mut()).zip(samples) {
            row.copy_from_slice(sample.x.coords().as_slice());
            *rho = sample.rho;
        }
        Ok(())
    })
}

/// Center, second focus (each `ambient` doubles) and semi-axes of an
/// ellipsoid or hyperboloid sheet.
///
/// # Safety
/// `handle` must be a live model; the buffers must hold `len` doubles each.
#[no_mangle]
pub unsafe extern "C" fn quadric_model_elements(
    handle: *const QuadricModel,
    center: *mut f64,
    second_focus: *mut f64,
    len: usize,
    semi_major: *mut f64,
    semi_minor: *mut f64,
) -> QuadricStatus {
    guard(|| {
        let m = model(handle)?;
        let el = geometric_elements(&m.params)?;
        let ambient = m.params.ambient_dim();
        output(center, len, ambient, "center")?.copy_from_slice(el.center.as_slice());
        output(second_focus, len, ambient, "second_focus")?.copy_from_slice(el.second_focus.as_slice());
        write(semi_major, el.semi_major, "semi_major")?;
        write(semi_minor, el.semi_minor, "semi_minor")
    })
}

/// Classifies `S + C<x, xi>` with the default tolerances.
///
/// # Safety
/// `kind` must be writable.
#[no_mangle]
pub unsafe extern "C" fn quadric_classify(s: f64, amplitude: f64, kind: *mut QuadricKind) -> QuadricStatus {
    guard(|| {
        if !(s.is_finite() && amplitude.is_finite()) {
            return Err(Failure::new(QuadricStatus::InvalidArgument, "S and C must be finite"));
        }
        write(
            kind,
            core::classify(s, amplitude, &Tolerances::default()).into(),
            "kind",
        )
    })
}

/// Fits `1/rho = S + <x, v>` to `count` samples. `weighting` is 0 for uniform
/// rows and 1 for `rho²` weights.
///
/// # Safety
/// `directions` must hold `count * ambient` doubles, `rhos` `count` doubles,
/// and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn quadric_fit_radial(
    directions: *const f64,
    rhos: *const f64,
    count: usize,
    ambient: usize,
    weighting: u32,
    out: *mut *mut QuadricFit,
) -> QuadricStatus {
    guard(|| {
        check_ambient(ambient)?;
        let needed = count
            .checked_mul(ambient)
            .ok_or_else(|| Failure::new(QuadricStatus::InvalidArgument, "count too large"))?;
        let samples = radial_samples(
            input(directions, needed, "directions")?,
            input(rhos, count, "rhos")?,
            ambient,
        )?;
        fit_into(samples, weighting, out)
    })
}

/// Fits surface points given row-major (`count * ambient` doubles).
///
/// # Safety
/// `points` must hold `count * ambient` doubles and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn quadric_fit_points(
    points: *const f64,
    count: usize,
    ambient: usize,
    weighting: u32,
    out: *mut *mut QuadricFit,
) -> QuadricStatus {
    guard(|| {
        check_ambient(ambient)?;
        let needed = count
            .checked_mul(ambient)
            .ok_or_else(|| Failure::new(QuadricStatus::InvalidArgument, "count too large"))?;
        let samples = input(points, needed, "points")?
            .chunks_exact(ambient)
            .map(|p| RadialSample::from_point(&DVector::from_column_slice(p)).map_err(Failure::from))
            .collect::<Result<Vec<_>, _>>()?;
        fit_into(samples, weighting, out)
    })
}

unsafe fn fit_into(samples: Vec<RadialSample>, weighting: u32, out: *mut *mut QuadricFit) -> Result<(), Failure> {
    if out.is_null() {
        return Err(Failure::null("out"));
    }
    let options = FitOptions {
        weighting: weighting_from_code(weighting)?,
        ..FitOptions::default()
    };
    let result = fit_inverse_radial(&samples, &options)?;
    write(out, boxed(QuadricFit { result, samples }), "out")
}

/// # Safety
/// `handle` must come from this library and not be used afterwards. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn quadric_fit_free(handle: *mut QuadricFit) {
    if !handle.is_null() {
        drop(Box::from_raw(handle));
    }
}

/// # Safety
/// `handle` must be a live fit and `summary` writable.
#[no_mangle]
pub unsafe extern "C" fn quadric_fit_summary(
    handle: *const QuadricFit,
    summary: *mut QuadricFitSummary,
) -> QuadricStatus {
    guard(|| {
        let r = &fit_handle(handle)?.result;
        let value = QuadricFitSummary {
            s: r.s,
            amplitude: r.amplitude,
            c2: r.c2,
            kind: r.kind.into(),
            rms_residual: r.rms_residual,
            condition: r.condition,
            samples: r.samples,
        };
        write(summary, value, "summary")
    })
}

/// The fitted affine part `v`, `ambient` doubles.
///
/// # Safety
/// `handle` must be a live fit and `v` must hold `v_len` doubles.
#[no_mangle]
pub unsafe extern "C" fn quadric_fit_v(handle: *const QuadricFit, v: *mut f64, v_len: usize) -> QuadricStatus {
    guard(|| {
        let r = &fit_handle(handle)?.result;
        output(v, v_len, r.v.len(), "v")?.copy_from_slice(r.v.as_slice());
        Ok(())
    })
}

/// The recovered quadric as a new model handle.
///
/// # Safety
/// `handle` must be a live fit and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn quadric_fit_model(handle: *const QuadricFit, out: *mut *mut QuadricModel) -> QuadricStatus {
    guard(|| {
        let params = fit_handle(handle)?.result.quadric.clone();
        write(out, boxed(QuadricModel { params }), "out")
    })
}

/// Residuals of the fit against the data it was computed from.
///
/// # Safety
/// `handle` must be a live fit and `report` writable.
#[no_mangle]
pub unsafe extern "C" fn quadric_fit_verify(handle: *const QuadricFit, report: *mut QuadricReport) -> QuadricStatus {
    guard(|| {
        let fit = fit_handle(handle)?;
        let r = verify_solution(&fit.samples, &fit.result)?;
        write(report, QuadricReport::from(&r), "report")
    })
}

/// Analytic residuals of `w = S/k + C<x, xi>` on the sphere of radius `1/k`
/// at `samples` seeded uniform points.
///
/// # Safety
/// `axis` must point to `axis_len` doubles and `report` must be writable.
#[no_mangle]
pub unsafe extern "C" fn quadric_verify_solution(
    c2: f64,
    amplitude: f64,
    branch: i32,
    axis: *const f64,
    axis_len: usize,
    k: f64,
    samples: usize,
    seed: u64,
    report: *mut QuadricReport,
) -> QuadricStatus {
    guard(|| {
        let axis = DVector::from_column_slice(input(axis, axis_len, "axis")?);
        let solution = SolutionParams::new(c2, amplitude, axis, branch_from_sign(branch)?)?;
        let field = solution.field_on_radius(k)?;
        let radius = 1.0 / k;
        let points = sample_sphere(axis_len - 1, samples, SamplingStrategy::UniformRandom, seed)?
            .into_iter()
            .map(|p| SpherePoint::new(p.into_coords() * radius, radius))
            .collect::<core::Result<Vec<_>>>()?;
        let r = residual_report(&field, &points, solution.c2, Some(solution.s()?))?;
        write(report, QuadricReport::from(&r), "report")
    })
}
