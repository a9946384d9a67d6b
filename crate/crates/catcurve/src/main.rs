//! Command-line front door: curve inspection, single geometry queries, and
//! verification-suite runs over curve spec files.

use catcurve::numeric::fmt_sci;
use catcurve::{
    alexandrov_angle_estimate, cat_check_triangle, run_suite, ConformalMetric, CurvePoint,
    ExperimentConfig, GluedSpace, MultiBranchCurve, Parallelism,
};
use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "catcurve",
    version,
    about = "Intrinsic distances, geodesics, curvature and CAT(k) checks for singular curve germs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Default, ValueEnum)]
enum OutputFormat {
    #[default]
    Csv,
    JsonLike,
}

#[derive(Args)]
struct CommonOpts {
    /// Rings of the oracle mesh.
    #[arg(long, default_value_t = 40)]
    mesh_rings: usize,
    /// Angular sectors of the oracle mesh.
    #[arg(long, default_value_t = 96)]
    mesh_sectors: usize,
    /// Working ball radius in the chart (default: a quarter of the domain
    /// radius).
    #[arg(long)]
    working_radius: Option<f64>,
    /// Curvature bound override; defaults to the sampled supremum estimate.
    #[arg(long)]
    kappa: Option<f64>,
    /// Seed for all randomized draws.
    #[arg(long, default_value_t = 7)]
    seed: u64,
    /// Output file (or directory for `verify`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Format of structured output files.
    #[arg(long, value_enum, default_value_t)]
    format: OutputFormat,
}

#[derive(Subcommand)]
enum Command {
    /// Summarize a curve spec: multiplicities, series degrees, curvature.
    Info {
        spec: PathBuf,
        #[command(flatten)]
        opts: CommonOpts,
    },
    /// Intrinsic distance between two points ("branch:re,im").
    Dist {
        spec: PathBuf,
        x: String,
        y: String,
        /// Export the realizing path in ambient coordinates instead of chart
        /// coordinates.
        #[arg(long)]
        ambient: bool,
        #[command(flatten)]
        opts: CommonOpts,
    },
    /// Integrate a geodesic from a point and export it as CSV.
    Geodesic {
        spec: PathBuf,
        from: String,
        /// Initial chart direction (radians); used with --length.
        #[arg(long)]
        dir: Option<f64>,
        /// Arc length to integrate; used with --dir.
        #[arg(long)]
        length: Option<f64>,
        /// Target point: compute the connecting segment instead.
        #[arg(long)]
        to: Option<String>,
        #[arg(long)]
        ambient: bool,
        #[command(flatten)]
        opts: CommonOpts,
    },
    /// Alexandrov angle at the origin between the segments to two points.
    Angle {
        spec: PathBuf,
        x: String,
        y: String,
        /// Also run the limit estimator and print the difference.
        #[arg(long)]
        estimate: bool,
        #[command(flatten)]
        opts: CommonOpts,
    },
    /// CAT(kappa) comparison verdict for one triangle.
    CatCheck {
        spec: PathBuf,
        x: String,
        y: String,
        z: String,
        #[arg(long, default_value_t = 12)]
        side_samples: usize,
        #[command(flatten)]
        opts: CommonOpts,
    },
    /// Run the verification suite and write its report.
    Verify {
        spec: PathBuf,
        #[command(flatten)]
        opts: CommonOpts,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn load_space(spec: &Path, opts: &CommonOpts) -> catcurve::Result<GluedSpace> {
    let curve = MultiBranchCurve::from_spec_file(spec)?;
    let geo = catcurve::GeodesicConfig {
        working_radius: opts.working_radius,
        ..Default::default()
    };
    GluedSpace::with_params(curve, geo, opts.mesh_rings, opts.mesh_sectors, 0.85, 8)
}

fn experiment_config(opts: &CommonOpts) -> ExperimentConfig {
    ExperimentConfig {
        working_radius: opts.working_radius,
        mesh_rings: opts.mesh_rings,
        mesh_sectors: opts.mesh_sectors,
        kappa_override: opts.kappa,
        seed: opts.seed,
        ..Default::default()
    }
}

fn parse_point(text: &str) -> catcurve::Result<CurvePoint> {
    CurvePoint::parse(text)
}

fn write_out(path: &Path, contents: &str) -> catcurve::Result<()> {
    std::fs::write(path, contents)?;
    Ok(())
}

fn dispatch(cli: Cli) -> catcurve::Result<ExitCode> {
    match cli.command {
        Command::Info { spec, opts } => {
            let curve = MultiBranchCurve::from_spec_file(&spec)?;
            println!("branches: {}", curve.branches().len());
            println!("ambient_dim: {}", curve.ambient().dim());
            for (i, b) in curve.branches().iter().enumerate() {
                let metric = ConformalMetric::new(b, curve.ambient())?;
                let sup = metric.curvature_sup_estimate(
                    0.01 * b.domain_radius(),
                    b.domain_radius(),
                    64,
                    Parallelism::Rayon,
                )?;
                println!(
                    "branch {i}: m={} psi_degrees={:?} domain_radius={}",
                    b.multiplicity(),
                    b.psi_degrees(),
                    fmt_sci(b.domain_radius())
                );
                println!(
                    "branch {i}: kappa_sup={} (annulus [{}, {}], grid {}x{})",
                    fmt_sci(sup.value),
                    fmt_sci(sup.annulus.0),
                    fmt_sci(sup.annulus.1),
                    sup.radial_samples,
                    sup.angular_samples
                );
            }
            let wr = opts
                .working_radius
                .unwrap_or(0.25 * curve.branch(0).domain_radius());
            println!("working_radius: {}", fmt_sci(wr));
            Ok(ExitCode::SUCCESS)
        }
        Command::Dist {
            spec,
            x,
            y,
            ambient,
            opts,
        } => {
            let space = load_space(&spec, &opts)?;
            let xp = parse_point(&x)?;
            let yp = parse_point(&y)?;
            let d = space.distance(xp, yp)?;
            println!("distance: {}", fmt_sci(d.value));
            println!("through_origin: {}", d.through_origin);
            println!(
                "regular_candidate: {}",
                d.regular_candidate
                    .map(fmt_sci)
                    .unwrap_or_else(|| "none".into())
            );
            println!(
                "through_origin_candidate: {}",
                d.through_origin_candidate
                    .map(fmt_sci)
                    .unwrap_or_else(|| "none".into())
            );
            println!(
                "tangent_angle: {}",
                d.tangent_angle.map(fmt_sci).unwrap_or_else(|| "none".into())
            );
            if d.oracle_fallback {
                println!("warning: value is a refined-mesh upper bound (shooting fell back)");
            }
            if let Some(out) = &opts.out {
                let mut buf = Vec::new();
                for (branch, part) in &d.segment.parts {
                    use std::io::Write;
                    writeln!(buf, "# branch {branch}").expect("vec write");
                    if ambient {
                        part.write_ambient_csv(space.metric(*branch), &mut buf)?;
                    } else {
                        part.write_csv(&mut buf)?;
                    }
                }
                write_out(out, &String::from_utf8_lossy(&buf))?;
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Geodesic {
            spec,
            from,
            dir,
            length,
            to,
            ambient,
            opts,
        } => {
            let space = load_space(&spec, &opts)?;
            let fp = parse_point(&from)?;
            let path_text = match (to, dir, length) {
                (Some(to), None, None) => {
                    let tp = parse_point(&to)?;
                    let d = space.distance(fp, tp)?;
                    println!("length: {}", fmt_sci(d.value));
                    println!("through_origin: {}", d.through_origin);
                    let mut buf = Vec::new();
                    for (branch, part) in &d.segment.parts {
                        use std::io::Write;
                        writeln!(buf, "# branch {branch}").expect("vec write");
                        if ambient {
                            part.write_ambient_csv(space.metric(*branch), &mut buf)?;
                        } else {
                            part.write_csv(&mut buf)?;
                        }
                    }
                    String::from_utf8_lossy(&buf).into_owned()
                }
                (None, Some(theta), Some(len)) => {
                    let solver = space.solver(fp.branch);
                    let v0 =
                        solver.unit_tangent(fp.z, Complex64::from_polar(1.0, theta))?;
                    let (path, stop) = solver.exp_map(fp.z, v0, len)?;
                    println!("length: {}", fmt_sci(path.length()));
                    println!("stop: {stop:?}");
                    let mut buf = Vec::new();
                    if ambient {
                        path.write_ambient_csv(space.metric(fp.branch), &mut buf)?;
                    } else {
                        path.write_csv(&mut buf)?;
                    }
                    String::from_utf8_lossy(&buf).into_owned()
                }
                _ => {
                    return Err(catcurve::Error::Argument(
                        "use either --to POINT or --dir RAD --length LEN".into(),
                    ))
                }
            };
            match &opts.out {
                Some(out) => write_out(out, &path_text)?,
                None => print!("{path_text}"),
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Angle {
            spec,
            x,
            y,
            estimate,
            opts,
        } => {
            let space = load_space(&spec, &opts)?;
            let xp = parse_point(&x)?;
            let yp = parse_point(&y)?;
            let formula = space.angle_at_origin(xp, yp)?;
            println!("angle_at_origin: {}", fmt_sci(formula));
            if estimate {
                let t0 = 0.1 * space.distance_to_origin(xp)?.min(space.distance_to_origin(yp)?);
                let ts: Vec<f64> = (0..4).map(|k| t0 / 2f64.powi(k)).collect();
                let est =
                    alexandrov_angle_estimate(&space, CurvePoint::origin(), xp, yp, &ts)?;
                println!("limit_estimate: {}", fmt_sci(est));
                println!("difference: {}", fmt_sci((formula - est).abs()));
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::CatCheck {
            spec,
            x,
            y,
            z,
            side_samples,
            opts,
        } => {
            let space = load_space(&spec, &opts)?;
            let xp = parse_point(&x)?;
            let yp = parse_point(&y)?;
            let zp = parse_point(&z)?;
            let kappa = match opts.kappa {
                Some(k) => k,
                None => {
                    let mut k = f64::NEG_INFINITY;
                    for b in 0..space.branch_count() {
                        let metric = space.metric(b);
                        k = k.max(
                            metric
                                .curvature_sup_estimate(
                                    0.01 * metric.domain_radius(),
                                    metric.domain_radius(),
                                    64,
                                    Parallelism::Rayon,
                                )?
                                .value,
                        );
                    }
                    k
                }
            };
            let margin_tol = catcurve::verify::tol::ORACLE_DEFAULT
                + catcurve::verify::tol::MARGIN_SLACK;
            let verdict = cat_check_triangle(
                &space,
                xp,
                yp,
                zp,
                kappa,
                side_samples,
                margin_tol,
                Parallelism::Rayon,
            )?;
            println!("kappa: {}", fmt_sci(verdict.kappa));
            println!(
                "sides: {} {} {}",
                fmt_sci(verdict.sides[0]),
                fmt_sci(verdict.sides[1]),
                fmt_sci(verdict.sides[2])
            );
            println!("worst_margin: {}", fmt_sci(verdict.worst_margin));
            println!("samples: {}", verdict.samples_used);
            for c in &verdict.angle_checks {
                println!(
                    "vertex {}: alexandrov={} model={} origin={} status={:?}",
                    c.vertex,
                    c.alexandrov.map(fmt_sci).unwrap_or_else(|| "n/a".into()),
                    fmt_sci(c.model),
                    c.at_origin,
                    c.status
                );
            }
            println!("satisfied: {}", verdict.satisfied);
            if let Some(out) = &opts.out {
                let contents = match opts.format {
                    OutputFormat::Csv => format!(
                        "{}\n{}\n",
                        catcurve::ComparisonVerdict::csv_header(),
                        verdict.csv_row()
                    ),
                    OutputFormat::JsonLike => serde_json::json!({
                        "kappa": verdict.kappa,
                        "sides": verdict.sides,
                        "worst_margin": verdict.worst_margin,
                        "satisfied": verdict.satisfied,
                        "samples": verdict.samples_used,
                    })
                    .to_string(),
                };
                write_out(out, &contents)?;
            }
            Ok(if verdict.satisfied {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            })
        }
        Command::Verify { spec, opts } => {
            let curve = MultiBranchCurve::from_spec_file(&spec)?;
            let cfg = experiment_config(&opts);
            let report = run_suite(&curve, &cfg)?;
            let mut text = Vec::new();
            report.write_text(&mut text)?;
            print!("{}", String::from_utf8_lossy(&text));
            if let Some(out) = &opts.out {
                std::fs::create_dir_all(out)?;
                let mut csv = Vec::new();
                report.write_csv(&mut csv)?;
                match opts.format {
                    OutputFormat::Csv => {
                        write_out(&out.join("report.csv"), &String::from_utf8_lossy(&csv))?;
                    }
                    OutputFormat::JsonLike => {
                        let rows: Vec<serde_json::Value> = report
                            .outcomes
                            .iter()
                            .map(|o| {
                                serde_json::json!({
                                    "experiment": o.name,
                                    "passed": o.passed,
                                    "margin": o.margin,
                                    "runtime_ms": o.runtime_ms,
                                    "detail": o.detail,
                                })
                            })
                            .collect();
                        write_out(
                            &out.join("report.json"),
                            &serde_json::json!({
                                "kappa": report.kappa,
                                "working_radius": report.working_radius,
                                "seed": report.seed,
                                "all_passed": report.all_passed,
                                "experiments": rows,
                            })
                            .to_string(),
                        )?;
                    }
                }
                write_out(&out.join("report.txt"), &String::from_utf8_lossy(&text))?;
            }
            Ok(if report.all_passed {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            })
        }
    }
}
