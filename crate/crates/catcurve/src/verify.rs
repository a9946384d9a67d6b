//! The named experiment suite: one experiment per acceptance check, each
//! with a pinned tolerance, deterministic under a fixed seed, continuing
//! past failures so a run always reports the full landscape.

use crate::comparison::{branching_certificate, cat_check_triangle, GluedSpace};
use crate::curve::{CurvePoint, MultiBranchCurve};
use crate::geodesic::{holder_seminorm, GeodesicConfig, GeodesicSolver};
use crate::mesh::{winding_number, DiscMesh};
use crate::numeric::fmt_sci;
use crate::parallel::{self, Parallelism};
use crate::{Error, Result};
use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::io::Write;

/// Pinned tolerances. Each constant names the check it gates.
pub mod tol {
    /// Gauss equation cross-check `K = -2|B|^2`, relative (both routes are
    /// analytic, so this is loose by design).
    pub const GAUSS_REL: f64 = 1e-8;
    /// Agreement of the three conformal-factor evaluation routes, relative.
    pub const LAMBDA_ROUTES_REL: f64 = 1e-12;
    /// Cauchy gap of oracle distances across one mesh refinement.
    pub const ORACLE_CAUCHY: f64 = 1e-3;
    /// Oracle discretization allowance when compared against the ODE route.
    pub const ORACLE_DEFAULT: f64 = 2e-3;
    /// Extra slack on triangle margins beyond the oracle tolerance.
    pub const MARGIN_SLACK: f64 = 1e-4;
    /// Degenerate (collinear) triangles must give margins this close to 0.
    pub const DEGENERATE_MARGIN: f64 = 1e-5;
    /// Agreement of the two angle-at-origin routes.
    pub const ANGLE_ABS: f64 = 1e-3;
    /// Extrapolated chord ratio accuracy.
    pub const SIN_HALF_ABS: f64 = 1e-3;
    /// Angular band around `pi/m` for the through-origin flip.
    pub const THRESHOLD_BAND: f64 = 0.02;
    /// Relative error between analytic and central-difference gradients.
    pub const GRADIENT_REL: f64 = 1e-4;
    /// Lower bound on discrete second differences of `d(0, path(t))`.
    pub const CONVEXITY_ABS: f64 = 1e-6;
    /// Circle-loop winding sanity.
    pub const WINDING_SANITY: f64 = 1e-9;
    /// Relative change of the `1/m`-Hoelder seminorm per density doubling.
    pub const HOLDER_STABLE_REL: f64 = 0.05;
    /// Required growth of the Lipschitz quotient over two doublings.
    pub const LIPSCHITZ_GROWTH: f64 = 2.0;
    /// Allowed decrease per step of the direction lift.
    pub const LIFT_MONOTONE: f64 = 1e-6;
    /// `d(x,y) = d(x,0) + d(0,y)` residual for branching extensions.
    pub const BRANCH_RESIDUAL: f64 = 1e-5;
    /// Cross-branch gluing must be exact to rounding.
    pub const GLUED_EXACT: f64 = 1e-12;
    /// Vanishing angle at the cross-branch vertex.
    pub const GLUED_ANGLE: f64 = 1e-6;
    /// Angular slack for sector containment.
    pub const SECTOR_ANGLE: f64 = 0.02;
}

/// Configuration of one suite run. All tolerances are pinned in [`tol`];
/// the knobs here are sizes, the seed, and the working radius.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub working_radius: Option<f64>,
    pub mesh_rings: usize,
    pub mesh_sectors: usize,
    pub mesh_grading: f64,
    pub quad_order: usize,
    pub seed: u64,
    pub triangles: usize,
    pub side_samples: usize,
    pub kappa_override: Option<f64>,
    pub curvature_grid: usize,
    pub oracle_tolerance: f64,
    pub gradient_points: usize,
    pub convexity_segments: usize,
    pub sector_pairs: usize,
    pub branching_directions: usize,
    pub lift_samples: usize,
    pub parallelism: Parallelism,
    pub geodesic: GeodesicConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            working_radius: None,
            mesh_rings: 40,
            mesh_sectors: 96,
            mesh_grading: 0.85,
            quad_order: 8,
            seed: 7,
            triangles: 200,
            side_samples: 12,
            kappa_override: None,
            curvature_grid: 64,
            oracle_tolerance: tol::ORACLE_DEFAULT,
            gradient_points: 20,
            convexity_segments: 50,
            sector_pairs: 50,
            branching_directions: 8,
            lift_samples: 64,
            parallelism: Parallelism::Rayon,
            geodesic: GeodesicConfig::default(),
        }
    }
}

impl ExperimentConfig {
    fn validate(&self) -> Result<()> {
        if self.mesh_rings < 2 || self.mesh_sectors < 8 {
            return Err(Error::Argument("mesh is too small".into()));
        }
        if !(self.mesh_grading > 0.0 && self.mesh_grading < 1.0) {
            return Err(Error::Argument("grading must lie in (0,1)".into()));
        }
        if self.oracle_tolerance <= 0.0 {
            return Err(Error::Argument("oracle tolerance must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentOutcome {
    pub name: &'static str,
    pub passed: bool,
    /// Positive slack to the governing tolerance (negative = failed by that
    /// much); the exact meaning per experiment is in `detail`.
    pub margin: f64,
    pub detail: String,
    pub runtime_ms: u128,
}

#[derive(Debug, Clone)]
pub struct ExperimentReport {
    pub kappa: f64,
    pub working_radius: f64,
    pub seed: u64,
    pub outcomes: Vec<ExperimentOutcome>,
    pub all_passed: bool,
}

impl ExperimentReport {
    pub fn write_text(&self, out: &mut impl Write) -> std::io::Result<()> {
        writeln!(
            out,
            "verification suite: kappa={} working_radius={} seed={}",
            fmt_sci(self.kappa),
            fmt_sci(self.working_radius),
            self.seed
        )?;
        for o in &self.outcomes {
            writeln!(
                out,
                "[{}] {:<24} margin={} ({} ms) {}",
                if o.passed { "PASS" } else { "FAIL" },
                o.name,
                fmt_sci(o.margin),
                o.runtime_ms,
                o.detail
            )?;
        }
        writeln!(
            out,
            "overall: {}",
            if self.all_passed { "PASS" } else { "FAIL" }
        )
    }

    pub fn write_csv(&self, out: &mut impl Write) -> std::io::Result<()> {
        writeln!(out, "experiment,passed,margin,runtime_ms,detail")?;
        for o in &self.outcomes {
            writeln!(
                out,
                "{},{},{},{},\"{}\"",
                o.name,
                o.passed,
                fmt_sci(o.margin),
                o.runtime_ms,
                o.detail.replace('"', "'")
            )?;
        }
        Ok(())
    }
}

struct Ctx<'a> {
    space: &'a GluedSpace,
    cfg: &'a ExperimentConfig,
    kappa: f64,
    wr: f64,
}

impl<'a> Ctx<'a> {
    fn solver(&self) -> GeodesicSolver<'a> {
        self.space.solver(0)
    }

    fn rng(&self, salt: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.cfg.seed ^ salt.wrapping_mul(0x9E37_79B9_7F4A_7C15))
    }

    fn annulus_point(&self, rng: &mut ChaCha8Rng) -> Complex64 {
        let r = self.wr * (0.05 + 0.85 * rng.gen::<f64>());
        let th = 2.0 * std::f64::consts::PI * rng.gen::<f64>();
        Complex64::from_polar(r, th)
    }
}

/// Runs every experiment in order and collects the report. Sub-experiment
/// errors are recorded as failures; the suite always finishes.
pub fn run_suite(curve: &MultiBranchCurve, cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    let mut geo = cfg.geodesic.clone();
    geo.working_radius = cfg.working_radius;
    let space = GluedSpace::with_params(
        curve.clone(),
        geo,
        cfg.mesh_rings,
        cfg.mesh_sectors,
        cfg.mesh_grading,
        cfg.quad_order,
    )?;
    let kappa = match cfg.kappa_override {
        Some(k) => k,
        None => {
            // kappa = sup K over all branches, on a reproducible annulus grid
            let mut k = f64::NEG_INFINITY;
            for b in 0..space.branch_count() {
                let metric = space.metric(b);
                let sup = metric.curvature_sup_estimate(
                    0.01 * metric.domain_radius(),
                    metric.domain_radius(),
                    cfg.curvature_grid,
                    cfg.parallelism,
                )?;
                k = k.max(sup.value);
            }
            k
        }
    };
    let ctx = Ctx {
        space: &space,
        cfg,
        kappa,
        wr: space.working_radius(),
    };
    type Exp = fn(&Ctx) -> Result<(bool, f64, String)>;
    let experiments: [(&'static str, Exp); 14] = [
        ("curvature_cross_check", exp_curvature),
        ("distance_consistency", exp_distance_consistency),
        ("cat_triangle_batch", exp_cat_batch),
        ("origin_angle", exp_origin_angle),
        ("sin_half_angle", exp_sin_half_angle),
        ("origin_threshold_sweep", exp_threshold_sweep),
        ("distance_gradient", exp_gradient),
        ("segment_convexity", exp_convexity),
        ("winding_bound", exp_winding),
        ("holder_stability", exp_holder),
        ("lift_monotonicity", exp_lift),
        ("branching", exp_branching),
        ("glued_space", exp_glued),
        ("sector_convexity", exp_sector),
    ];
    let mut outcomes = Vec::with_capacity(experiments.len());
    for (name, f) in experiments {
        let started = std::time::Instant::now();
        let outcome = match f(&ctx) {
            Ok((passed, margin, detail)) => ExperimentOutcome {
                name,
                passed,
                margin,
                detail,
                runtime_ms: started.elapsed().as_millis(),
            },
            Err(e) => ExperimentOutcome {
                name,
                passed: false,
                margin: f64::NEG_INFINITY,
                detail: format!("error: {e}"),
                runtime_ms: started.elapsed().as_millis(),
            },
        };
        outcomes.push(outcome);
    }
    let all_passed = outcomes.iter().all(|o| o.passed);
    Ok(ExperimentReport {
        kappa,
        working_radius: ctx.wr,
        seed: cfg.seed,
        outcomes,
        all_passed,
    })
}

fn exp_curvature(ctx: &Ctx) -> Result<(bool, f64, String)> {
    let metric = ctx.space.metric(0);
    let n = 32usize;
    let r_in = 0.01 * metric.domain_radius();
    let r_out = 0.95 * metric.domain_radius();
    let rows = parallel::map_range(ctx.cfg.parallelism, n, |i| -> Result<(f64, f64)> {
        let r = r_in * (r_out / r_in).powf(i as f64 / (n as f64 - 1.0));
        let mut worst_gauss = 0.0_f64;
        let mut worst_lambda = 0.0_f64;
        for j in 0..n {
            let z = Complex64::from_polar(r, 2.0 * std::f64::consts::PI * j as f64 / n as f64);
            let k = metric.gaussian_curvature(z)?;
            let b = metric.second_form_norm(z)?;
            let gauss = (k + 2.0 * b * b).abs() / k.abs().max(1e-300);
            worst_gauss = worst_gauss.max(gauss);
            let l0 = metric.conformal_factor(z);
            let l1 = metric.conformal_factor_direct(z);
            let l2 = metric.conformal_factor_factored(z);
            let lam = ((l0 - l1).abs().max((l0 - l2).abs())) / l0.abs().max(1e-300);
            worst_lambda = worst_lambda.max(lam);
        }
        Ok((worst_gauss, worst_lambda))
    });
    let mut worst_gauss = 0.0_f64;
    let mut worst_lambda = 0.0_f64;
    for r in rows {
        let (g, l) = r?;
        worst_gauss = worst_gauss.max(g);
        worst_lambda = worst_lambda.max(l);
    }
    let passed = worst_gauss <= tol::GAUSS_REL && worst_lambda <= tol::LAMBDA_ROUTES_REL;
    Ok((
        passed,
        (tol::GAUSS_REL - worst_gauss).min(tol::LAMBDA_ROUTES_REL - worst_lambda),
        format!(
            "K vs -2|B|^2 rel {} on {n}x{n} grid; factor routes rel {}",
            fmt_sci(worst_gauss),
            fmt_sci(worst_lambda)
        ),
    ))
}

fn exp_distance_consistency(ctx: &Ctx) -> Result<(bool, f64, String)> {
    let metric = ctx.space.metric(0);
    let mut rng = ctx.rng(2);
    let probes: Vec<Complex64> = (0..3).map(|_| ctx.annulus_point(&mut rng)).collect();
    let cfgm = ctx.cfg;
    let coarse = DiscMesh::build_with_probes(
        metric,
        cfgm.mesh_rings,
        cfgm.mesh_sectors,
        cfgm.mesh_grading,
        cfgm.quad_order,
        &probes,
    )?;
    let fine = DiscMesh::build_with_probes(
        metric,
        cfgm.mesh_rings * 2,
        cfgm.mesh_sectors * 2,
        cfgm.mesh_grading,
        cfgm.quad_order,
        &probes,
    )?;
    let solver = ctx.solver();
    let mut worst_gap = 0.0_f64;
    let mut worst_cauchy = 0.0_f64;
    let mut detail = String::new();
    for (i, &p) in probes.iter().enumerate() {
        let probe_c = coarse.vertex_count() - probes.len() + i;
        let probe_f = fine.vertex_count() - probes.len() + i;
        let (dc, _) = coarse.dijkstra(coarse.origin_vertex(), probe_c)?;
        let (df, _) = fine.dijkstra(fine.origin_vertex(), probe_f)?;
        let ode = solver.distance_to_origin(p)?;
        // refinement replaces long chords by polylines through new ring
        // vertices, so a tiny increase at the chord-discretization scale is
        // possible; anything past the Cauchy tolerance is a real failure
        if df > dc + tol::ORACLE_CAUCHY {
            return Ok((
                false,
                dc - df,
                format!("refinement increased an oracle distance at probe {i}"),
            ));
        }
        worst_cauchy = worst_cauchy.max((dc - df).abs());
        worst_gap = worst_gap.max((df - ode).abs());
        if ode > df + 1e-9 {
            return Ok((
                false,
                df - ode,
                format!(
                    "ODE distance {} exceeds the oracle upper bound {} at probe {i}",
                    fmt_sci(ode),
                    fmt_sci(df)
                ),
            ));
        }
        if i == 0 {
            detail = format!("d(0,p0): ode {} oracle {}", fmt_sci(ode), fmt_sci(df));
        }
    }
    let passed = worst_gap <= ctx.cfg.oracle_tolerance && worst_cauchy <= tol::ORACLE_CAUCHY;
    Ok((
        passed,
        (ctx.cfg.oracle_tolerance - worst_gap).min(tol::ORACLE_CAUCHY - worst_cauchy),
        format!(
            "{detail}; worst ode-oracle gap {}; refinement Cauchy {}",
            fmt_sci(worst_gap),
            fmt_sci(worst_cauchy)
        ),
    ))
}

fn exp_cat_batch(ctx: &Ctx) -> Result<(bool, f64, String)> {
    let mut rng = ctx.rng(3);
    let margin_tol = ctx.cfg.oracle_tolerance + tol::MARGIN_SLACK;
    let mut triangles = Vec::with_capacity(ctx.cfg.triangles);
    let mut rejected = 0usize;
    while triangles.len() < ctx.cfg.triangles {
        let x = CurvePoint::new(0, ctx.annulus_point(&mut rng));
        let y = CurvePoint::new(0, ctx.annulus_point(&mut rng));
        let z = CurvePoint::new(0, ctx.annulus_point(&mut rng));
        // quick chart-scale perimeter proxy against the comparison bound
        let per_bound = 2.0 * crate::comparison::model_diameter(ctx.kappa);
        let rough = 4.0 * ctx.wr;
        if rough >= per_bound {
            rejected += 1;
            if rejected > 10 * ctx.cfg.triangles {
                return Err(Error::Comparison(
                    "cannot draw triangles below the comparison diameter".into(),
                ));
            }
            continue;
        }
        triangles.push((x, y, z));
    }
    let verdicts = parallel::map(ctx.cfg.parallelism, &triangles, |&(x, y, z)| {
        cat_check_triangle(
            ctx.space,
            x,
            y,
            z,
            ctx.kappa,
            ctx.cfg.side_samples,
            margin_tol,
            Parallelism::Sequential,
        )
    });
    let mut worst = f64::INFINITY;
    let mut failures = 0usize;
    for v in &verdicts {
        match v {
            Ok(v) => {
                worst = worst.min(v.worst_margin);
                if !v.satisfied {
                    failures += 1;
                }
            }
            Err(e) => {
                return Ok((false, f64::NEG_INFINITY, format!("triangle failed: {e}")));
            }
        }
    }
    // deliberate degenerate (collinear) triangles must sit at equality
    let mut degenerate_worst = 0.0_f64;
    for k in 0..5 {
        let th = 2.0 * std::f64::consts::PI * k as f64 / 5.0;
        let dir = Complex64::from_polar(1.0, th);
        let v = cat_check_triangle(
            ctx.space,
            CurvePoint::new(0, dir * (0.3 * ctx.wr)),
            CurvePoint::new(0, dir * (0.5 * ctx.wr)),
            CurvePoint::new(0, dir * (0.8 * ctx.wr)),
            ctx.kappa,
            ctx.cfg.side_samples.min(6),
            margin_tol,
            ctx.cfg.parallelism,
        )?;
        degenerate_worst = degenerate_worst.max(v.worst_margin.abs());
    }
    let passed = failures == 0 && degenerate_worst <= tol::DEGENERATE_MARGIN;
    Ok((
        passed,
        (worst + margin_tol).min(tol::DEGENERATE_MARGIN - degenerate_worst),
        format!(
            "{} triangles, {} unsatisfied, worst margin {}; collinear |margin| {}",
            triangles.len(),
            failures,
            fmt_sci(worst),
            fmt_sci(degenerate_worst)
        ),
    ))
}

fn exp_origin_angle(ctx: &Ctx) -> Result<(bool, f64, String)> {
    let solver = ctx.solver();
    let m = ctx.space.metric(0).multiplicity() as f64;
    let r = 0.8 * ctx.wr;
    let x = Complex64::new(r, 0.0);
    let mut worst = 0.0_f64;
    for frac in [0.25, 0.5, 0.75] {
        let dtheta = frac * std::f64::consts::PI / m;
        let y = Complex64::from_polar(r, dtheta);
        let formula = solver.alexandrov_angle_at_origin(x, y)?;
        let estimate = crate::comparison::alexandrov_angle_estimate(
            ctx.space,
            CurvePoint::origin(),
            CurvePoint::new(0, x),
            CurvePoint::new(0, y),
            &geometric_ts(0.1 * r * r.min(1.0), 4),
        )?;
        worst = worst.max((formula - estimate).abs());
    }
    Ok((
        worst <= tol::ANGLE_ABS,
        tol::ANGLE_ABS - worst,
        format!("formula vs limit estimator, worst |diff| {}", fmt_sci(worst)),
    ))
}

fn exp_sin_half_angle(ctx: &Ctx) -> Result<(bool, f64, String)> {
    let solver = ctx.solver();
    let m = ctx.space.metric(0).multiplicity() as f64;
    // chart separation pi/(2m) gives ambient angle pi/2 for every m
    let dtheta = std::f64::consts::PI / (2.0 * m);
    let ts = geometric_ts(0.05 * ctx.wr, 4);
    let got = solver.sin_half_angle_limit(
        Complex64::new(1.0, 0.0),
        Complex64::from_polar(1.0, dtheta),
        &ts,
    )?;
    let expect = std::f64::consts::FRAC_PI_4.sin();
    let err = (got - expect).abs();
    Ok((
        err <= tol::SIN_HALF_ABS,
        tol::SIN_HALF_ABS - err,
        format!("ratio {} vs sin(pi/4) = {}", fmt_sci(got), fmt_sci(expect)),
    ))
}

fn exp_threshold_sweep(ctx: &Ctx) -> Result<(bool, f64, String)> {
    let solver = ctx.solver();
    let m = ctx.space.metric(0).multiplicity() as f64;
    let threshold = std::f64::consts::PI / m;
    if threshold > std::f64::consts::PI - 0.2 {
        // m = 1: the through-origin regime is empty below pi; nothing to sweep
        let x = Complex64::new(0.6 * ctx.wr, 0.0);
        let y = Complex64::from_polar(0.6 * ctx.wr, 2.5);
        let res = solver.connect(x, y)?;
        return Ok((
            !res.through_origin,
            1.0,
            "smooth origin: segments never pass through it".into(),
        ));
    }
    let r = 0.8 * ctx.wr;
    let x = Complex64::new(r, 0.0);
    let step = 0.01_f64;
    let halfwidth = 0.15_f64;
    let n = (2.0 * halfwidth / step).round() as usize;
    let flags = parallel::map_range(ctx.cfg.parallelism, n + 1, |i| -> Result<bool> {
        let dtheta = threshold - halfwidth + step * i as f64;
        let y = Complex64::from_polar(r, dtheta);
        Ok(solver.connect(x, y)?.through_origin)
    });
    let mut flips = Vec::new();
    let mut prev = None;
    for (i, f) in flags.iter().enumerate() {
        let f = *f.as_ref().map_err(|e| Error::Computation(e.to_string()))?;
        if let Some(p) = prev {
            if p != f {
                flips.push(i);
            }
        }
        prev = Some(f);
    }
    if flips.len() != 1 {
        return Ok((
            false,
            -(flips.len() as f64),
            format!("expected exactly one flip, found {}", flips.len()),
        ));
    }
    let flip_at = threshold - halfwidth + step * (flips[0] as f64 - 0.5);
    let off = (flip_at - threshold).abs();
    let band = tol::THRESHOLD_BAND + 0.5 * step;
    Ok((
        off <= band,
        band - off,
        format!(
            "flip at {} vs threshold {} (|off| = {})",
            fmt_sci(flip_at),
            fmt_sci(threshold),
            fmt_sci(off)
        ),
    ))
}

fn exp_gradient(ctx: &Ctx) -> Result<(bool, f64, String)> {
    let solver = ctx.solver();
    let mut rng = ctx.rng(7);
    let points: Vec<Complex64> = (0..ctx.cfg.gradient_points)
        .map(|_| ctx.annulus_point(&mut rng))
        .collect();
    let errs = parallel::map(ctx.cfg.parallelism, &points, |&p| -> Result<f64> {
        Ok(solver.distance_gradient_check(p, 1e-3 * p.norm())?.rel_err)
    });
    let mut worst = 0.0_f64;
    for e in errs {
        worst = worst.max(e?);
    }
    Ok((
        worst <= tol::GRADIENT_REL,
        tol::GRADIENT_REL - worst,
        format!(
            "{} points, worst rel err {}",
            ctx.cfg.gradient_points,
            fmt_sci(worst)
        ),
    ))
}

fn exp_convexity(ctx: &Ctx) -> Result<(bool, f64, String)> {
    let solver = ctx.solver();
    let m = ctx.space.metric(0).multiplicity() as f64;
    let mut rng = ctx.rng(8);
    let mut pairs = Vec::with_capacity(ctx.cfg.convexity_segments);
    while pairs.len() < ctx.cfg.convexity_segments {
        let r1 = ctx.wr * (0.2 + 0.7 * rng.gen::<f64>());
        let r2 = ctx.wr * (0.2 + 0.7 * rng.gen::<f64>());
        let th1 = 2.0 * std::f64::consts::PI * rng.gen::<f64>();
        let spread = (0.1 + 0.7 * rng.gen::<f64>()) * std::f64::consts::PI / m;
        pairs.push((
            Complex64::from_polar(r1, th1),
            Complex64::from_polar(r2, th1 + spread),
        ));
    }
    let results = parallel::map(ctx.cfg.parallelism, &pairs, |&(x, y)| -> Result<(f64, f64)> {
        let res = solver.connect(x, y)?;
        if res.through_origin {
            // d(0, .) along a through-origin segment is piecewise linear
            // with a kink at 0; convexity is immediate, skip
            return Ok((0.0, 0.0));
        }
        let n = 10usize;
        let mut u = Vec::with_capacity(n + 1);
        for i in 0..=n {
            let t = res.value * i as f64 / n as f64;
            let p = res.path.point_at(t);
            u.push(if p.norm() == 0.0 {
                0.0
            } else {
                solver.origin_leg(p)?.length
            });
        }
        let mut worst_second = f64::INFINITY;
        for i in 1..n {
            worst_second = worst_second.min(u[i - 1] - 2.0 * u[i] + u[i + 1]);
        }
        let interior_max = u[1..n].iter().fold(0.0_f64, |a, &b| a.max(b));
        let endpoint_max = u[0].max(u[n]);
        Ok((worst_second, interior_max - endpoint_max))
    });
    let mut worst_second = f64::INFINITY;
    let mut worst_ball = f64::NEG_INFINITY;
    for r in results {
        let (s, b) = r?;
        worst_second = worst_second.min(s);
        worst_ball = worst_ball.max(b);
    }
    let passed = worst_second >= -tol::CONVEXITY_ABS && worst_ball <= tol::CONVEXITY_ABS;
    Ok((
        passed,
        (worst_second + tol::CONVEXITY_ABS).min(tol::CONVEXITY_ABS - worst_ball),
        format!(
            "{} segments; min second difference {}; max interior exceedance {}",
            ctx.cfg.convexity_segments,
            fmt_sci(worst_second),
            fmt_sci(worst_ball)
        ),
    ))
}

fn exp_winding(ctx: &Ctx) -> Result<(bool, f64, String)> {
    // circle sanity on a raw loop
    let n = 720usize;
    let loop_pts: Vec<Complex64> = (0..=n)
        .map(|k| Complex64::from_polar(0.2, 2.0 * std::f64::consts::PI * k as f64 / n as f64))
        .collect();
    let w = winding_number(loop_pts)?;
    if (w - 1.0).abs() > tol::WINDING_SANITY {
        return Ok((
            false,
            tol::WINDING_SANITY - (w - 1.0).abs(),
            format!("circle winding {} is off", fmt_sci(w)),
        ));
    }
    let solver = ctx.solver();
    let m = ctx.space.metric(0).multiplicity() as f64;
    let mut rng = ctx.rng(9);
    let mut worst = 0.0_f64;
    for _ in 0..10 {
        let x = ctx.annulus_point(&mut rng);
        let spread = (0.1 + 0.75 * rng.gen::<f64>()) * std::f64::consts::PI / m;
        let y = Complex64::from_polar(
            ctx.wr * (0.2 + 0.7 * rng.gen::<f64>()),
            x.arg() + spread,
        );
        let res = solver.connect(x, y)?;
        if res.through_origin {
            continue;
        }
        let wind = res.path.winding_first_coordinate()?.abs();
        worst = worst.max(wind);
    }
    Ok((
        worst < 1.0,
        1.0 - worst,
        format!(
            "circle sanity {}; max |segment winding| {}",
            fmt_sci(w),
            fmt_sci(worst)
        ),
    ))
}

fn exp_holder(ctx: &Ctx) -> Result<(bool, f64, String)> {
    let metric = ctx.space.metric(0);
    let m = metric.multiplicity();
    let base = Complex64::from_polar(0.8 * ctx.wr, 0.4);
    let seminorms = |samples: usize, exponent: f64| -> Result<f64> {
        let mut geo = ctx.cfg.geodesic.clone();
        geo.path_samples = samples;
        geo.working_radius = Some(ctx.wr);
        let solver = GeodesicSolver::with_config(metric, geo);
        let seg = solver.segment_to_origin(base)?;
        holder_seminorm(metric, &seg.path, exponent, ctx.cfg.parallelism)
    };
    let n0 = ctx.cfg.geodesic.path_samples;
    if m == 1 {
        // regular origin: the exponent 1/m is already Lipschitz and the
        // tangent of a segment into 0 is smooth; the seminorm must stay at
        // integrator-noise scale under refinement
        let s = seminorms(n0, 1.0)?;
        let s2 = seminorms(n0 * 4, 1.0)?;
        let noise_floor = 1e-5;
        let drift = (s2 - s).abs() / s.abs().max(noise_floor);
        let passed = s2.abs() < noise_floor || drift <= tol::HOLDER_STABLE_REL;
        return Ok((
            passed,
            tol::HOLDER_STABLE_REL - drift.min(1.0),
            format!(
                "smooth branch: Lipschitz seminorm at noise scale ({} -> {})",
                fmt_sci(s),
                fmt_sci(s2)
            ),
        ));
    }
    let exponent = 1.0 / m as f64;
    let h1 = seminorms(n0, exponent)?;
    let h2 = seminorms(n0 * 2, exponent)?;
    let h4 = seminorms(n0 * 4, exponent)?;
    let drift = ((h2 - h1).abs() / h1).max((h4 - h2).abs() / h2);
    // the Lipschitz quotient diverges exactly when the second fundamental
    // form blows up like |z|^{-(m-1)} with a nonzero leading constant;
    // germs with bounded curvature near 0 have Lipschitz tangents instead
    let probe = Complex64::from_polar(1e-3 * metric.domain_radius(), 0.7);
    let b_scale =
        metric.second_form_norm(probe)? * probe.norm().powi(m as i32 - 1);
    let sharp = b_scale > 1e-3;
    let (lipschitz_ok, growth_note, growth_margin) = if sharp {
        let l1 = seminorms(n0, 1.0)?;
        let l4 = seminorms(n0 * 4, 1.0)?;
        let growth = l4 / l1;
        (
            growth > tol::LIPSCHITZ_GROWTH,
            format!("Lipschitz quotient grew x{}", fmt_sci(growth)),
            growth - tol::LIPSCHITZ_GROWTH,
        )
    } else {
        (
            true,
            "curvature bounded near 0; tangents are Lipschitz".to_string(),
            1.0,
        )
    };
    let passed = drift <= tol::HOLDER_STABLE_REL && lipschitz_ok;
    Ok((
        passed,
        (tol::HOLDER_STABLE_REL - drift).min(growth_margin),
        format!(
            "1/m-seminorm {} -> {} -> {} (drift {}); {}",
            fmt_sci(h1),
            fmt_sci(h2),
            fmt_sci(h4),
            fmt_sci(drift),
            growth_note
        ),
    ))
}

fn exp_lift(ctx: &Ctx) -> Result<(bool, f64, String)> {
    let solver = ctx.solver();
    let m = ctx.space.metric(0).multiplicity() as f64;
    let rows = solver.boundary_direction_maps(0.8 * ctx.wr, ctx.cfg.lift_samples, ctx.cfg.parallelism)?;
    let mut failed_rows = 0usize;
    let mut worst_step = f64::INFINITY;
    for w in rows.windows(2) {
        if !w[0].ok || !w[1].ok {
            failed_rows += 1;
            continue;
        }
        worst_step = worst_step.min(w[1].lift - w[0].lift);
    }
    let winding = rows.last().expect("nonempty").lift - rows[0].lift;
    let f_winding = m * winding;
    let monotone = worst_step >= -tol::LIFT_MONOTONE;
    let degree_ok = (f_winding - m).abs() <= 1e-3;
    Ok((
        monotone && degree_ok && failed_rows == 0,
        (worst_step + tol::LIFT_MONOTONE).min(1e-3 - (f_winding - m).abs()),
        format!(
            "{} rows ({} flagged); min lift step {}; tangent-power winding {} (expect m = {})",
            rows.len(),
            failed_rows,
            fmt_sci(worst_step),
            fmt_sci(f_winding),
            m
        ),
    ))
}

fn exp_branching(ctx: &Ctx) -> Result<(bool, f64, String)> {
    let x = CurvePoint::new(0, Complex64::from_polar(0.75 * ctx.wr, 0.3));
    let report = branching_certificate(
        ctx.space,
        x,
        ctx.cfg.branching_directions,
        tol::BRANCH_RESIDUAL,
        ctx.cfg.parallelism,
    )?;
    if !report.singular {
        return Ok((true, 1.0, report.note));
    }
    let worst_residual = report
        .rows
        .iter()
        .map(|r| r.residual)
        .fold(0.0_f64, f64::max);
    Ok((
        report.complete,
        tol::BRANCH_RESIDUAL - worst_residual,
        format!("{} (worst residual {})", report.note, fmt_sci(worst_residual)),
    ))
}

fn exp_glued(ctx: &Ctx) -> Result<(bool, f64, String)> {
    if ctx.space.branch_count() == 1 {
        let mut rng = ctx.rng(13);
        let x = CurvePoint::new(0, ctx.annulus_point(&mut rng));
        let y = CurvePoint::new(0, ctx.annulus_point(&mut rng));
        let glued = ctx.space.distance(x, y)?.value;
        let plain = ctx.solver().connect(x.z, y.z)?.value;
        let gap = (glued - plain).abs();
        return Ok((
            gap <= tol::GLUED_EXACT,
            tol::GLUED_EXACT - gap,
            "single branch: gluing delegates to the branch solver".into(),
        ));
    }
    let r1 = 0.6 * ctx.wr;
    let r2 = 0.8 * ctx.wr;
    let x = CurvePoint::new(0, Complex64::new(r1, 0.0));
    let y = CurvePoint::new(1, Complex64::new(r2, 0.0));
    let d = ctx.space.distance(x, y)?;
    let dx = ctx.space.distance_to_origin(x)?;
    let dy = ctx.space.distance_to_origin(y)?;
    let gap = (d.value - (dx + dy)).abs();
    if !(d.through_origin && gap <= tol::GLUED_EXACT) {
        return Ok((
            false,
            tol::GLUED_EXACT - gap,
            format!("cross-branch distance off by {}", fmt_sci(gap)),
        ));
    }
    // tripod triangles across the branches
    let mut rng = ctx.rng(13);
    let mut worst = f64::INFINITY;
    let margin_tol = ctx.cfg.oracle_tolerance + tol::MARGIN_SLACK;
    for _ in 0..10 {
        let a = CurvePoint::new(0, ctx.annulus_point(&mut rng));
        let b = CurvePoint::new(0, ctx.annulus_point(&mut rng));
        let c = CurvePoint::new(1, ctx.annulus_point(&mut rng));
        let v = cat_check_triangle(
            ctx.space,
            a,
            b,
            c,
            0.0,
            ctx.cfg.side_samples.min(8),
            margin_tol,
            ctx.cfg.parallelism,
        )?;
        worst = worst.min(v.worst_margin);
        if !v.satisfied {
            return Ok((
                false,
                v.worst_margin,
                "a tripod triangle violated the comparison inequality".into(),
            ));
        }
    }
    // vanishing angle at the cross-branch vertex by the limit estimator
    let angle = crate::comparison::alexandrov_angle_estimate(
        ctx.space,
        y,
        x,
        CurvePoint::new(0, Complex64::new(0.0, r1)),
        &geometric_ts(0.1 * r1, 4),
    )?;
    let passed = angle <= tol::GLUED_ANGLE;
    Ok((
        passed,
        tol::GLUED_ANGLE - angle,
        format!(
            "cross distance exact (gap {}); tripod worst margin {}; cross-vertex angle {}",
            fmt_sci(gap),
            fmt_sci(worst),
            fmt_sci(angle)
        ),
    ))
}

fn exp_sector(ctx: &Ctx) -> Result<(bool, f64, String)> {
    let solver = ctx.solver();
    let m = ctx.space.metric(0).multiplicity() as f64;
    let half_sector = std::f64::consts::PI / m; // spread bound: 1/(2m) turns
    let mut rng = ctx.rng(14);
    let mut pairs = Vec::with_capacity(ctx.cfg.sector_pairs);
    while pairs.len() < ctx.cfg.sector_pairs {
        let r1 = ctx.wr * (0.3 + 0.6 * rng.gen::<f64>());
        let r2 = ctx.wr * (0.3 + 0.6 * rng.gen::<f64>());
        let th = 2.0 * std::f64::consts::PI * rng.gen::<f64>();
        let spread = (0.1 + 0.8 * rng.gen::<f64>()) * half_sector;
        pairs.push((
            Complex64::from_polar(r1, th),
            Complex64::from_polar(r2, th + spread),
        ));
    }
    let results = parallel::map(ctx.cfg.parallelism, &pairs, |&(x, y)| -> Result<f64> {
        let tx = solver.origin_leg(x)?.tangent;
        let ty = solver.origin_leg(y)?.tangent;
        let spread = crate::numeric::angle_between(tx, ty);
        if spread >= half_sector {
            return Ok(0.0); // outside the sector hypothesis after measuring
        }
        let res = solver.connect(x, y)?;
        if res.through_origin {
            return Ok(f64::INFINITY); // a sector segment must avoid the origin
        }
        let rel = |d: Complex64| (d * tx.conj()).arg();
        let hi = rel(ty).max(0.0);
        let lo = rel(ty).min(0.0);
        let mut worst = 0.0_f64;
        let n = 7;
        for i in 1..n {
            let t = res.value * i as f64 / n as f64;
            let p = res.path.point_at(t);
            if p.norm() == 0.0 {
                continue;
            }
            let tp = solver.origin_leg(p)?.tangent;
            let a = rel(tp);
            let excess = (a - hi).max(lo - a).max(0.0);
            worst = worst.max(excess);
        }
        Ok(worst)
    });
    let mut worst = 0.0_f64;
    for r in results {
        worst = worst.max(r?);
    }
    Ok((
        worst <= tol::SECTOR_ANGLE,
        tol::SECTOR_ANGLE - worst,
        format!(
            "{} pairs; worst angular exceedance {}",
            ctx.cfg.sector_pairs,
            fmt_sci(worst)
        ),
    ))
}

fn geometric_ts(t0: f64, n: usize) -> Vec<f64> {
    (0..n).map(|k| t0 / 2f64.powi(k as i32)).collect()
}
