//! Quadrics of revolution with a focus at the origin, described by their
//! radial function `ρ(x) = f / (1 − ε<x, ξ>)`, and the affine solution family
//! `w = S + C<x, ξ>` whose reciprocal is that radial function.

use std::fmt;
use std::str::FromStr;

use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sphere::{random_unit, ScalarField, SpherePoint};

/// Relative margin inside which a direction counts as outside the domain of
/// positivity.
pub const DOMAIN_MARGIN: f64 = 1e-9;

/// Below this acceptance rate rejection sampling gives up.
pub const MIN_ACCEPTANCE: f64 = 1e-3;

/// Tolerance on `C² + c² − 1` for treating `S` as zero (the hyperplane case).
const HYPERPLANE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuadricKind {
    Ellipsoid,
    Paraboloid,
    HyperboloidSheet,
    Hyperplane,
    /// `C = 0`: constant `w` with `w² = c² − 1`, the excluded branch.
    CenteredSphere,
}

impl QuadricKind {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Ellipsoid => "ellipsoid",
            Self::Paraboloid => "paraboloid",
            Self::HyperboloidSheet => "hyperboloid_sheet",
            Self::Hyperplane => "hyperplane",
            Self::CenteredSphere => "centered_sphere",
        }
    }
}

impl fmt::Display for QuadricKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for QuadricKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key: String = s
            .chars()
            .filter(|c| c.is_ascii_alphanumeric())
            .collect::<String>()
            .to_ascii_lowercase();
        match key.as_str() {
            "ellipsoid" => Ok(Self::Ellipsoid),
            "paraboloid" => Ok(Self::Paraboloid),
            "hyperboloid" | "hyperboloidsheet" | "hyperboloid2sheet" | "twosheetedhyperboloid" => {
                Ok(Self::HyperboloidSheet)
            }
            "hyperplane" | "plane" => Ok(Self::Hyperplane),
            "centeredsphere" | "sphere" => Ok(Self::CenteredSphere),
            "hyperboloid1sheet" | "onesheetedhyperboloid" | "hyperboloidonesheet" => Err(Error::Unrepresentable(
                "one-sheeted hyperboloid: it can not be represented in the form \
                     rho = f / (1 - eps <x, xi>)"
                    .into(),
            )),
            _ => Err(Error::InvalidArgument(format!("unknown quadric kind '{s}'"))),
        }
    }
}

/// Sign of `S` in case `c² < 1`, where both signs give solutions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    Plus,
    Minus,
}

impl Branch {
    pub fn sign(self) -> f64 {
        match self {
            Self::Plus => 1.0,
            Self::Minus => -1.0,
        }
    }
}

impl FromStr for Branch {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "plus" | "+" => Ok(Self::Plus),
            "minus" | "-" => Ok(Self::Minus),
            _ => Err(Error::InvalidArgument(format!("unknown branch '{s}'"))),
        }
    }
}

fn unit_axis(axis: &DVector<f64>) -> Result<DVector<f64>> {
    if axis.len() < 3 {
        return Err(Error::InvalidArgument("axis needs at least 3 components".into()));
    }
    let norm = axis.norm();
    if !(norm > 0.0 && norm.is_finite()) {
        return Err(Error::InvalidArgument("axis must be a nonzero finite vector".into()));
    }
    Ok(axis / norm)
}

fn check_unit(axis: &DVector<f64>) -> Result<()> {
    if axis.len() < 3 || (axis.norm() - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidArgument(
            "axis must be a unit vector in R^{n+1}, n >= 2".into(),
        ));
    }
    Ok(())
}

/// PDE-side parameters of a solution `w = S + C<x, ξ>` on the unit sphere.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolutionParams {
    pub c2: f64,
    /// The harmonic amplitude `C`.
    pub amplitude: f64,
    #[serde(serialize_with = "crate::as_array::serialize")]
    pub axis: DVector<f64>,
    pub branch: Branch,
}

impl SolutionParams {
    /// Normalizes `axis` to unit length.
    pub fn new(c2: f64, amplitude: f64, axis: DVector<f64>, branch: Branch) -> Result<Self> {
        let params = Self {
            c2,
            amplitude,
            axis: unit_axis(&axis)?,
            branch,
        };
        params.validate()?;
        Ok(params)
    }

    /// `C² + c² − 1`, clamped to zero within the hyperplane tolerance.
    fn s_squared(&self) -> Result<f64> {
        let c = self.amplitude;
        let s2 = c * c + self.c2 - 1.0;
        if s2 < 0.0 {
            if s2 >= -HYPERPLANE_TOL * (1.0 + c * c) {
                return Ok(0.0);
            }
            return Err(Error::NoSolution(s2));
        }
        if s2 <= HYPERPLANE_TOL * (1.0 + c * c) && self.c2 < 1.0 {
            return Ok(0.0);
        }
        Ok(s2)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.c2.is_finite() && self.amplitude.is_finite()) {
            return Err(Error::InvalidArgument("c2 and C must be finite".into()));
        }
        check_unit(&self.axis)?;
        self.s_squared()?;
        if self.amplitude == 0.0 && self.c2 <= 1.0 {
            return Err(Error::InvalidArgument(
                "C = 0 with c2 <= 1 gives w = 0 or no real S".into(),
            ));
        }
        if self.c2 >= 1.0 && self.branch == Branch::Minus {
            return Err(Error::InvalidArgument(
                "for c2 >= 1 only the branch with S > 0 is admissible".into(),
            ));
        }
        Ok(())
    }

    /// `S = ±√(C² + c² − 1)`.
    pub fn s(&self) -> Result<f64> {
        Ok(self.branch.sign() * self.s_squared()?.sqrt())
    }

    /// The affine part `v = C ξ`.
    pub fn v(&self) -> DVector<f64> {
        &self.axis * self.amplitude
    }

    /// The solution `w(x) = S + C<x, ξ>` on the unit sphere.
    pub fn field(&self) -> Result<ScalarField> {
        ScalarField::affine(self.s()?, self.v(), 1.0)
    }

    /// The family member on the sphere of radius `1/k`: `w = S/k + C<x, ξ>`.
    pub fn field_on_radius(&self, k: f64) -> Result<ScalarField> {
        if !(k > 0.0 && k.is_finite()) {
            return Err(Error::InvalidArgument(format!("k must be positive, got {k}")));
        }
        ScalarField::affine(self.s()? / k, self.v(), 1.0 / k)
    }
}

/// Geometry-side parameters in the canonical form `ρ = f / (1 − ε<x, ξ>)`,
/// `ε >= 0`. Hyperplanes use `ρ = f / <x, ξ>`.
///
/// `f > 0` for every kind except the `S < 0` branch of a hyperboloid, whose
/// sheet has `f < 0` (and `ρ > 0` where `1 − ε<x, ξ> < 0`).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QuadricParams {
    pub kind: QuadricKind,
    pub f: f64,
    pub eps: f64,
    #[serde(serialize_with = "crate::as_array::serialize")]
    pub axis: DVector<f64>,
}

impl QuadricParams {
    pub fn new(kind: QuadricKind, f: f64, eps: f64, axis: DVector<f64>) -> Result<Self> {
        let q = Self {
            kind,
            f,
            eps,
            axis: unit_axis(&axis)?,
        };
        q.validate()?;
        Ok(q)
    }

    pub fn validate(&self) -> Result<()> {
        check_unit(&self.axis)?;
        let (f, eps) = (self.f, self.eps);
        if !(f.is_finite() && eps.is_finite()) {
            return Err(Error::InvalidArgument("f and eps must be finite".into()));
        }
        let ok = match self.kind {
            QuadricKind::Ellipsoid => f > 0.0 && (0.0..1.0).contains(&eps),
            QuadricKind::Paraboloid => f > 0.0 && eps == 1.0,
            QuadricKind::HyperboloidSheet => f != 0.0 && eps > 1.0,
            QuadricKind::Hyperplane => f != 0.0,
            QuadricKind::CenteredSphere => f > 0.0 && eps == 0.0,
        };
        if !ok {
            return Err(Error::InvalidArgument(format!(
                "f = {f}, eps = {eps} do not describe a {}",
                self.kind
            )));
        }
        Ok(())
    }

    pub fn ambient_dim(&self) -> usize {
        self.axis.len()
    }

    /// The signed denominator `1 − ε<x, ξ>` (or `<x, ξ>` for hyperplanes) at a
    /// unit direction.
    fn denominator(&self, dir: &DVector<f64>) -> f64 {
        let t = dir.dot(&self.axis);
        match self.kind {
            QuadricKind::Hyperplane => t,
            _ => 1.0 - self.eps * t,
        }
    }

    fn margin(&self) -> f64 {
        match self.kind {
            QuadricKind::Hyperplane => DOMAIN_MARGIN,
            _ => DOMAIN_MARGIN * (1.0 + self.eps),
        }
    }

    /// Canonical parameters for the affine field `S + <x, v>` already known
    /// to be of `kind`.
    pub(crate) fn from_affine(s: f64, v: &DVector<f64>, kind: QuadricKind) -> Result<Self> {
        let c = v.norm();
        let fallback_axis = || {
            let mut e = DVector::zeros(v.len());
            e[0] = 1.0;
            e
        };
        let q = match kind {
            QuadricKind::CenteredSphere => Self {
                kind,
                f: 1.0 / s,
                eps: 0.0,
                axis: if c > 0.0 { v / c } else { fallback_axis() },
            },
            QuadricKind::Hyperplane => Self {
                kind,
                f: 1.0 / c,
                eps: 0.0,
                axis: v / c,
            },
            _ => {
                // w = S (1 − ε<x, ξ'>) with ξ' = −sign(S) v/|v|
                let eps = if kind == QuadricKind::Paraboloid {
                    1.0
                } else {
                    c / s.abs()
                };
                Self {
                    kind,
                    f: 1.0 / s,
                    eps,
                    axis: v * (-s.signum() / c),
                }
            }
        };
        q.validate()?;
        Ok(q)
    }
}

/// Case analysis of the solution family: which quadric `1/w` describes.
pub fn solution_to_quadric(sol: &SolutionParams) -> Result<QuadricParams> {
    sol.validate()?;
    let s = sol.s()?;
    let v = sol.v();
    let kind = if sol.amplitude == 0.0 {
        QuadricKind::CenteredSphere
    } else if sol.c2 > 1.0 {
        QuadricKind::Ellipsoid
    } else if sol.c2 == 1.0 {
        QuadricKind::Paraboloid
    } else if s == 0.0 {
        QuadricKind::Hyperplane
    } else {
        QuadricKind::HyperboloidSheet
    };
    QuadricParams::from_affine(s, &v, kind)
}

/// Inverse of [`solution_to_quadric`]. Returns the representative with `C > 0`.
pub fn quadric_to_solution(q: &QuadricParams) -> Result<SolutionParams> {
    q.validate()?;
    let (s, amplitude, axis) = match q.kind {
        QuadricKind::CenteredSphere => return Err(Error::ExcludedBranch),
        QuadricKind::Hyperplane => {
            // ρ = f/<x, ξ>  ⇔  w = <x, ξ>/f
            (0.0, 1.0 / q.f.abs(), &q.axis * q.f.signum())
        }
        _ => {
            // w = 1/f − (ε/f)<x, ξ'>
            let s = 1.0 / q.f;
            (s, q.eps / q.f.abs(), &q.axis * (-q.f.signum()))
        }
    };
    let c2 = match q.kind {
        QuadricKind::Hyperplane => 1.0 - amplitude * amplitude,
        QuadricKind::Paraboloid => 1.0,
        _ => (1.0 - q.eps * q.eps) / (q.f * q.f) + 1.0,
    };
    let branch = if s < 0.0 { Branch::Minus } else { Branch::Plus };
    Ok(SolutionParams {
        c2,
        amplitude,
        axis,
        branch,
    })
}

/// Radial function at `x`; the surface point is `ρ(x) x`.
pub fn radial(q: &QuadricParams, x: &SpherePoint) -> Result<f64> {
    if x.coords().len() != q.ambient_dim() {
        return Err(Error::ParameterMismatch("direction and axis dimensions differ".into()));
    }
    let dir = x.direction();
    let d = q.denominator(&dir);
    if q.f.signum() * d <= q.margin() {
        return Err(Error::Domain(format!(
            "direction outside the domain of positivity (denominator {d:e})"
        )));
    }
    Ok(q.f / d)
}

/// Whether `x` lies in the domain of positivity, away from its boundary.
pub fn domain_indicator(q: &QuadricParams, x: &SpherePoint) -> bool {
    radial(q, x).is_ok()
}

#[derive(Debug, Clone, PartialEq)]
pub struct RadialSample {
    pub x: SpherePoint,
    pub rho: f64,
}

impl RadialSample {
    pub fn new(x: SpherePoint, rho: f64) -> Result<Self> {
        if !(rho > 0.0 && rho.is_finite()) {
            return Err(Error::Domain(format!("radial value must be positive, got {rho}")));
        }
        let x = if x.radius() == 1.0 {
            x
        } else {
            SpherePoint::unit(x.direction())?
        };
        Ok(Self { x, rho })
    }

    /// Splits an ambient point `p ≠ 0` into direction and radius.
    pub fn from_point(p: &DVector<f64>) -> Result<Self> {
        let x = crate::sphere::project_to_sphere(p, 1.0)?;
        Self::new(x, p.norm())
    }

    pub fn point(&self) -> DVector<f64> {
        self.x.coords() * self.rho
    }
}

/// Radial samples over the domain of positivity, drawn by rejection from the
/// uniform distribution on the sphere. Each index draws from its own ChaCha
/// stream, so the output does not depend on evaluation order.
pub fn sample_radial(q: &QuadricParams, count: usize, seed: u64) -> Result<Vec<RadialSample>> {
    q.validate()?;
    if count == 0 {
        return Err(Error::InvalidArgument("sample count must be at least 1".into()));
    }
    let budget = (1.0 / MIN_ACCEPTANCE) as u64 * 20;
    let ambient = q.ambient_dim();
    let mut samples = Vec::with_capacity(count);
    let mut attempts = 0u64;
    for index in 0..count {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(index as u64);
        let mut drawn = 0u64;
        loop {
            drawn += 1;
            let x = random_unit(&mut rng, ambient);
            if let Ok(rho) = radial(q, &x) {
                samples.push(RadialSample { x, rho });
                break;
            }
            if drawn >= budget {
                return Err(Error::Sampling {
                    rate: (index as f64) / (attempts + drawn) as f64,
                    min: MIN_ACCEPTANCE,
                });
            }
        }
        attempts += drawn;
    }
    let rate = count as f64 / attempts as f64;
    if rate < MIN_ACCEPTANCE {
        return Err(Error::Sampling {
            rate,
            min: MIN_ACCEPTANCE,
        });
    }
    Ok(samples)
}

/// Multiplies each `ρ_i` by `1 + σ N(0, 1)`, redrawing the rare factors that
/// would make `ρ` non-positive. Index `i` uses its own ChaCha stream.
pub fn add_relative_noise(samples: &[RadialSample], sigma: f64, seed: u64) -> Result<Vec<RadialSample>> {
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(Error::InvalidArgument(format!("noise sigma must be >= 0, got {sigma}")));
    }
    Ok(samples
        .iter()
        .enumerate()
        .map(|(index, sample)| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ NOISE_SEED_SALT);
            rng.set_stream(index as u64);
            let factor = loop {
                let z: f64 = StandardNormal.sample(&mut rng);
                let factor = 1.0 + sigma * z;
                if factor > 0.0 {
                    break factor;
                }
            };
            RadialSample {
                x: sample.x.clone(),
                rho: sample.rho * factor,
            }
        })
        .collect())
}

const NOISE_SEED_SALT: u64 = 0x6e6f_6973_655f_7631;

/// Surface points `ρ(x_i) x_i`.
pub fn sample_surface(q: &QuadricParams, count: usize, seed: u64) -> Result<Vec<DVector<f64>>> {
    Ok(sample_radial(q, count, seed)?.iter().map(RadialSample::point).collect())
}

/// Center, second focus and semi-axes of a central quadric whose first focus
/// is the origin.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GeometricElements {
    #[serde(serialize_with = "crate::as_array::serialize")]
    pub center: DVector<f64>,
    #[serde(serialize_with = "crate::as_array::serialize")]
    pub second_focus: DVector<f64>,
    pub semi_major: f64,
    pub semi_minor: f64,
}

pub fn geometric_elements(q: &QuadricParams) -> Result<GeometricElements> {
    q.validate()?;
    match q.kind {
        QuadricKind::Ellipsoid | QuadricKind::HyperboloidSheet => {}
        kind => return Err(Error::NoElements(kind)),
    }
    let gap = 1.0 - q.eps * q.eps;
    let center = &q.axis * (q.f * q.eps / gap);
    Ok(GeometricElements {
        second_focus: &center * 2.0,
        center,
        semi_major: q.f.abs() / gap.abs(),
        semi_minor: q.f.abs() / gap.abs().sqrt(),
    })
}
