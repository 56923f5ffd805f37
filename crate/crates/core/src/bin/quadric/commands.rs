use std::path::PathBuf;

use nalgebra::DVector;
use quadric_core::{
    add_relative_noise, classify, fit_inverse_radial, geometric_elements, hessian_convergence, quadric_to_solution,
    residual_report, sample_radial, sample_sphere, solution_to_quadric, verify_solution, Branch, Error, FdConfig,
    FitOptions, QuadricKind, QuadricParams, SamplingStrategy, ScalarField, SolutionParams, SpherePoint, Tolerances,
};
use serde_json::{json, Value};

use crate::args::{
    ClassifyArgs, Columns, Command, ElementsArgs, FitArgs, FitOptionArgs, Format, GenerateArgs, ScanArgs, ShapeArgs,
    ToleranceArgs, VerifyArgs,
};
use crate::io::{csv_table, emit, float, indexed_header, json, read_samples};
use crate::{CliError, EXIT_VERIFICATION};

pub fn run(command: Command) -> Result<(), CliError> {
    match command {
        Command::Generate(args) => generate(args),
        Command::Fit(args) => fit(args),
        Command::Verify(args) => verify(args),
        Command::Classify(args) => classify_cmd(args),
        Command::Elements(args) => elements(args),
        Command::ResidualScan(args) => residual_scan(args),
    }
}

const DEFAULT_DIMENSION: usize = 2;

fn resolve_axis(axis: &[f64], dimension: Option<usize>) -> Result<DVector<f64>, CliError> {
    if axis.is_empty() {
        let n = dimension.unwrap_or(DEFAULT_DIMENSION);
        if n < 2 {
            return Err(CliError::input(format!("dimension must be at least 2, got {n}")));
        }
        let mut e = DVector::zeros(n + 1);
        e[n] = 1.0;
        return Ok(e);
    }
    if let Some(n) = dimension {
        if axis.len() != n + 1 {
            return Err(CliError::input(format!(
                "axis has {} components but dimension {n} needs {}",
                axis.len(),
                n + 1
            )));
        }
    }
    Ok(DVector::from_column_slice(axis))
}

struct Shape {
    quadric: QuadricParams,
    solution: Option<SolutionParams>,
}

fn resolve_shape(args: &ShapeArgs) -> Result<Shape, CliError> {
    let axis = resolve_axis(&args.axis, args.dimension)?;
    match (&args.kind, args.c2) {
        (Some(_), Some(_)) => Err(CliError::input("give either --kind or --c2, not both")),
        (None, None) => Err(CliError::input(
            "a quadric needs --kind (with --f, --eps) or --c2 (with --C)",
        )),
        (Some(kind), None) => {
            if args.amplitude.is_some() {
                return Err(CliError::input("--C belongs with --c2, not --kind"));
            }
            let kind: QuadricKind = kind.parse()?;
            let eps = match (kind, args.eps) {
                (_, Some(eps)) => eps,
                (QuadricKind::Paraboloid, None) => 1.0,
                (QuadricKind::Hyperplane | QuadricKind::CenteredSphere, None) => 0.0,
                _ => return Err(CliError::input(format!("--eps is required for {kind}"))),
            };
            let quadric = QuadricParams::new(kind, args.f.unwrap_or(1.0), eps, axis)?;
            let solution = match quadric_to_solution(&quadric) {
                Ok(sol) => Some(sol),
                Err(Error::ExcludedBranch) => None,
                Err(e) => return Err(e.into()),
            };
            Ok(Shape { quadric, solution })
        }
        (None, Some(c2)) => {
            if args.f.is_some() || args.eps.is_some() {
                return Err(CliError::input("--f and --eps belong with --kind, not --c2"));
            }
            let branch: Branch = args.branch.parse()?;
            let solution = SolutionParams::new(c2, args.amplitude.unwrap_or(1.0), axis, branch)?;
            let quadric = solution_to_quadric(&solution)?;
            Ok(Shape {
                quadric,
                solution: Some(solution),
            })
        }
    }
}

fn solution_json(sol: &SolutionParams) -> Result<Value, CliError> {
    Ok(json!({
        "c2": sol.c2,
        "C": sol.amplitude,
        "S": sol.s()?,
        "branch": sol.branch,
        "axis": sol.axis.iter().map(|a| a + 0.0).collect::<Vec<_>>(),
    }))
}

fn shape_json(shape: &Shape) -> Result<Value, CliError> {
    let elements = match geometric_elements(&shape.quadric) {
        Ok(el) => serde_json::to_value(el).map_err(CliError::io)?,
        Err(Error::NoElements(_)) => Value::Null,
        Err(e) => return Err(e.into()),
    };
    Ok(json!({
        "quadric": shape.quadric,
        "solution": shape.solution.as_ref().map(solution_json).transpose()?,
        "elements": elements,
    }))
}

fn tolerances(args: &ToleranceArgs) -> Tolerances {
    let mut tol = Tolerances::default();
    if let Some(t) = args.tol_c2 {
        tol.rel_c2 = t;
    }
    if let Some(t) = args.tol_s {
        tol.rel_s = t;
    }
    if let Some(t) = args.tol_amplitude {
        tol.rel_amplitude = t;
    }
    tol
}

fn fit_options(args: &FitOptionArgs) -> Result<FitOptions, CliError> {
    let mut options = FitOptions {
        tolerances: tolerances(&args.tolerances),
        weighting: args.weighting.parse()?,
        ..FitOptions::default()
    };
    if let Some(z) = args.significance {
        options.significance = z;
    }
    if let Some(c) = args.max_condition {
        options.max_condition = c;
    }
    Ok(options)
}

fn generate(args: GenerateArgs) -> Result<(), CliError> {
    let shape = resolve_shape(&args.shape)?;
    let clean = sample_radial(&shape.quadric, args.count, args.seed)?;
    let samples = if args.noise_sigma > 0.0 {
        add_relative_noise(&clean, args.noise_sigma, args.seed)?
    } else if args.noise_sigma == 0.0 {
        clean
    } else {
        return Err(CliError::input(format!(
            "noise sigma must be >= 0, got {}",
            args.noise_sigma
        )));
    };
    let ambient = shape.quadric.ambient_dim();
    let (header, rows): (Vec<String>, Vec<Vec<f64>>) = match args.columns {
        Columns::Ambient => (
            indexed_header('p', ambient),
            samples.iter().map(|s| s.point().iter().copied().collect()).collect(),
        ),
        Columns::Radial => {
            let mut header = indexed_header('x', ambient);
            header.push("rho".into());
            let rows = samples
                .iter()
                .map(|s| s.x.coords().iter().copied().chain([s.rho]).collect())
                .collect();
            (header, rows)
        }
    };
    let text = match args.format {
        Format::Csv => csv_table(&header, rows.iter().map(|r| r.iter().map(|v| float(*v)).collect()))?,
        Format::Json => json(&json!({ "columns": header, "rows": rows }))?,
    };
    let mut meta = shape_json(&shape)?;
    meta["command"] = json!("generate");
    meta["seed"] = json!(args.seed);
    meta["count"] = json!(samples.len());
    meta["dimension"] = json!(ambient - 1);
    meta["noise_sigma"] = json!(args.noise_sigma);
    meta["columns"] = json!(match args.columns {
        Columns::Ambient => "ambient",
        Columns::Radial => "radial",
    });
    let meta_path = args.meta.clone().or_else(|| {
        args.out.as_ref().map(|out| {
            let mut name = out.as_os_str().to_owned();
            name.push(".meta.json");
            PathBuf::from(name)
        })
    });
    emit(args.out.as_deref(), &text)?;
    if let Some(path) = meta_path {
        emit(Some(&path), &json(&meta)?)?;
    }
    Ok(())
}

fn fit(args: FitArgs) -> Result<(), CliError> {
    let options = fit_options(&args.options)?;
    let samples = read_samples(&args.input)?;
    let result = fit_inverse_radial(&samples, &options)?;
    emit(args.out.as_deref(), &json(&result)?)
}

fn sphere_points(n: usize, count: usize, seed: u64, radius: f64) -> Result<Vec<SpherePoint>, CliError> {
    sample_sphere(n, count, SamplingStrategy::UniformRandom, seed)?
        .into_iter()
        .map(|p| SpherePoint::new(p.into_coords() * radius, radius).map_err(CliError::from))
        .collect()
}

fn curvature(k: Option<f64>, radius: Option<f64>) -> Result<f64, CliError> {
    let k = match (k, radius) {
        (None, None) => 1.0,
        (Some(k), None) => k,
        (None, Some(r)) => 1.0 / r,
        (Some(k), Some(r)) => {
            if (k * r - 1.0).abs() > 1e-12 {
                return Err(CliError::input(format!(
                    "--k {k} and --radius {r} disagree: k must be 1/radius"
                )));
            }
            k
        }
    };
    if !(k > 0.0 && k.is_finite()) {
        return Err(CliError::input(format!("curvature must be positive, got {k}")));
    }
    Ok(k)
}

fn verify(args: VerifyArgs) -> Result<(), CliError> {
    let fd = args.fd_step.map(|h| FdConfig::extrapolated(h, args.fd_levels));
    let worst;
    let output = if let Some(input) = &args.input {
        let samples = read_samples(input)?;
        let fit = fit_inverse_radial(&samples, &fit_options(&args.options)?)?;
        let report = verify_solution(&samples, &fit)?;
        worst = report.worst();
        json!({ "mode": "data", "input": input.display().to_string(), "fit": fit, "report": report })
    } else if let Some(name) = &args.field {
        if name != "axial-quadratic" {
            return Err(CliError::input(format!("unknown fixture field '{name}'")));
        }
        let k = curvature(args.k, args.radius)?;
        let radius = 1.0 / k;
        let axis = resolve_axis(&args.shape.axis, args.shape.dimension)?;
        let axis = &axis / axis.norm();
        let xi = axis.clone();
        let field = ScalarField::generic(radius, move |p: &SpherePoint| {
            let t = p.coords().dot(&xi) / p.radius();
            1.0 + t * t
        })?
        .with_fd(fd.unwrap_or_default());
        let c2 = args.shape.c2.unwrap_or(2.0);
        let points = sphere_points(axis.len() - 1, args.samples, args.seed, radius)?;
        let report = residual_report(&field, &points, c2, None)?;
        worst = report.worst();
        json!({ "mode": "fixture", "field": name, "axis": axis.as_slice(), "seed": args.seed, "report": report })
    } else {
        let shape = resolve_shape(&args.shape)?;
        let solution = shape.solution.clone().ok_or(Error::ExcludedBranch)?;
        let k = curvature(args.k, args.radius)?;
        let mut field = solution.field_on_radius(k)?;
        if let Some(config) = fd {
            field = field.to_generic(config);
        }
        let points = sphere_points(solution.axis.len() - 1, args.samples, args.seed, 1.0 / k)?;
        let report = residual_report(&field, &points, solution.c2, Some(solution.s()?))?;
        worst = report.worst();
        json!({
            "mode": "solution",
            "solution": solution_json(&solution)?,
            "quadric": shape.quadric,
            "seed": args.seed,
            "report": report,
        })
    };
    emit(args.out.as_deref(), &json(&output)?)?;
    if worst.is_nan() || worst > args.fail_above {
        return Err(CliError {
            code: EXIT_VERIFICATION,
            message: format!("largest residual {worst:e} exceeds threshold {:e}", args.fail_above),
        });
    }
    Ok(())
}

fn classify_cmd(args: ClassifyArgs) -> Result<(), CliError> {
    if !(args.s.is_finite() && args.amplitude.is_finite()) {
        return Err(CliError::input("S and C must be finite"));
    }
    let tol = tolerances(&args.tolerances);
    let kind = classify(args.s, args.amplitude, &tol);
    let output = json!({
        "S": args.s,
        "C": args.amplitude,
        "c2": args.s * args.s - args.amplitude * args.amplitude + 1.0,
        "kind": kind,
        "bands": tol.bands(args.s, args.amplitude),
    });
    emit(args.out.as_deref(), &json(&output)?)
}

fn elements(args: ElementsArgs) -> Result<(), CliError> {
    let shape = resolve_shape(&args.shape)?;
    geometric_elements(&shape.quadric)?;
    emit(args.out.as_deref(), &json(&shape_json(&shape)?)?)
}

fn residual_scan(args: ScanArgs) -> Result<(), CliError> {
    if args.steps.is_empty() {
        return Err(CliError::input("residual-scan needs at least one step in --h"));
    }
    let axis = resolve_axis(&args.axis, args.axis.is_empty().then_some(args.dimension))?;
    let solution = SolutionParams::new(args.c2, args.amplitude, axis, Branch::Plus)?;
    let field = solution.field()?;
    let points = sphere_points(solution.axis.len() - 1, args.samples, args.seed, 1.0)?;
    let table = hessian_convergence(&field, &points, &args.steps)?;
    let text = match args.format {
        Format::Json => json(&table)?,
        Format::Csv => {
            let header: Vec<String> = [
                "h",
                "max_error",
                "roundoff_floor",
                "order",
                "reliable",
                "fitted_order",
                "fitted_reliable",
            ]
            .map(String::from)
            .to_vec();
            let fitted = table.fitted_order.map(float).unwrap_or_default();
            csv_table(
                &header,
                table.rows.iter().map(|r| {
                    vec![
                        float(r.h),
                        float(r.max_error),
                        float(r.roundoff_floor),
                        r.order.map(float).unwrap_or_default(),
                        r.reliable.to_string(),
                        fitted.clone(),
                        table.fitted_reliable.to_string(),
                    ]
                }),
            )?
        }
    };
    emit(args.out.as_deref(), &text)
}
