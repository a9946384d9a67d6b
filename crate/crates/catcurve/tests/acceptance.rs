//! Acceptance battery: every numerical certificate the library promises,
//! each with its pinned tolerance, printed one line per check.
//!
//! The anchors are closed forms for the cusp `(z^2, z^3)` with the identity
//! ambient metric:
//!
//! ```text
//! lambda(s)     = 4 s^2 + 9 s^4
//! K(s)          = -72 / (s^2 (4 + 9 s^2)^3)
//! |B|(s)        = 6 / (s (4 + 9 s^2)^{3/2})
//! d(0, phi(s))  = ((4 + 9 s^2)^{3/2} - 8) / 27
//! ```

use catcurve::curve::{stock, CurvePoint};
use catcurve::{
    alexandrov_angle_estimate, branching_certificate, cat_check_triangle, holder_seminorm,
    run_suite, ConformalMetric, DiscMesh, ExperimentConfig, GeodesicConfig, GeodesicSolver,
    GluedSpace, Parallelism,
};
use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::sync::OnceLock;
use std::time::Instant;

const PI: f64 = std::f64::consts::PI;

fn cusp_radial(s: f64) -> f64 {
    ((4.0 + 9.0 * s * s).powf(1.5) - 8.0) / 27.0
}

fn cusp_metric() -> &'static ConformalMetric {
    static METRIC: OnceLock<ConformalMetric> = OnceLock::new();
    METRIC.get_or_init(|| {
        let curve = stock::cusp();
        ConformalMetric::new(curve.branch(0), curve.ambient()).unwrap()
    })
}

/// Shared cusp space with the working radius opened up to 0.35 so the
/// classic chart points at radius 0.3 are inside the working ball.
fn cusp_space() -> &'static GluedSpace {
    static SPACE: OnceLock<GluedSpace> = OnceLock::new();
    SPACE.get_or_init(|| {
        let geo = GeodesicConfig {
            working_radius: Some(0.35),
            ..Default::default()
        };
        GluedSpace::with_params(stock::cusp(), geo, 40, 96, 0.85, 8).unwrap()
    })
}

fn annulus_point(rng: &mut ChaCha8Rng, wr: f64) -> Complex64 {
    let r = wr * (0.05 + 0.85 * rng.gen::<f64>());
    let th = 2.0 * PI * rng.gen::<f64>();
    Complex64::from_polar(r, th)
}

#[test]
fn criterion_01_curvature_cross_check() {
    let started = Instant::now();
    let metric = cusp_metric();
    // anchor value at |z| = 0.5
    let k_half = metric
        .gaussian_curvature(Complex64::new(0.5, 0.0))
        .unwrap();
    let anchor = -72.0 / (0.25 * 6.25_f64.powi(3));
    assert!(
        (k_half - anchor).abs() <= 1e-8,
        "K(0.5) = {k_half} vs closed form {anchor}"
    );
    // Gauss equation on a 32x32 annulus grid
    let n = 32;
    let mut worst: f64 = 0.0;
    for i in 0..n {
        let r = 0.01 * (95.0_f64).powf(i as f64 / (n as f64 - 1.0));
        for j in 0..n {
            let z = Complex64::from_polar(r, 2.0 * PI * j as f64 / n as f64);
            let k = metric.gaussian_curvature(z).unwrap();
            let b = metric.second_form_norm(z).unwrap();
            worst = worst.max((k + 2.0 * b * b).abs() / k.abs());
        }
    }
    assert!(worst <= 1e-8, "Gauss equation relative residual {worst}");
    println!(
        "[ 1] curvature cross-check: PASS (grid residual {:.2e}, anchor err {:.2e}, {:.2}s)",
        worst,
        (k_half - anchor).abs(),
        started.elapsed().as_secs_f64()
    );
}

#[test]
fn criterion_02_closed_form_distance() {
    let started = Instant::now();
    let metric = cusp_metric();
    let exact = cusp_radial(0.5);
    assert!((exact - 0.28240741).abs() < 5e-9, "frozen anchor check");

    // ODE route
    let solver = GeodesicSolver::new(metric);
    let ode = solver
        .segment_to_origin(Complex64::new(0.5, 0.0))
        .unwrap()
        .length;
    assert!(
        (ode - exact).abs() <= 1e-6,
        "ODE route {ode} vs {exact} (err {:.2e})",
        (ode - exact).abs()
    );

    // Dijkstra oracle at the acceptance mesh, probed at the exact point
    let probe = Complex64::new(0.5, 0.0);
    let mesh = DiscMesh::build_with_probes(metric, 40, 96, 0.85, 8, &[probe]).unwrap();
    let (oracle, _) = mesh
        .dijkstra(mesh.origin_vertex(), mesh.vertex_count() - 1)
        .unwrap();
    assert!(
        (oracle - exact).abs() <= 1e-3,
        "oracle {oracle} vs {exact}"
    );
    assert!(oracle >= exact - 1e-10, "the oracle is an upper bound");
    println!(
        "[ 2] closed-form distance: PASS (ode err {:.2e}, oracle err {:.2e}, {:.2}s)",
        (ode - exact).abs(),
        (oracle - exact).abs(),
        started.elapsed().as_secs_f64()
    );
}

#[test]
fn criterion_03_cat_kappa_certificate() {
    let started = Instant::now();
    let space = cusp_space();
    let metric = space.metric(0);
    let kappa = metric
        .curvature_sup_estimate(0.01, 1.0, 64, Parallelism::Rayon)
        .unwrap()
        .value;
    assert!(
        (kappa - (-72.0 / 2197.0)).abs() < 1e-6,
        "kappa estimate {kappa}"
    );
    let margin_tol = 2e-3 + 1e-4;
    let wr = space.working_radius();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let triangles: Vec<[CurvePoint; 3]> = (0..200)
        .map(|_| {
            [
                CurvePoint::new(0, annulus_point(&mut rng, wr)),
                CurvePoint::new(0, annulus_point(&mut rng, wr)),
                CurvePoint::new(0, annulus_point(&mut rng, wr)),
            ]
        })
        .collect();
    let verdicts = catcurve::parallel::map(Parallelism::Rayon, &triangles, |&[x, y, z]| {
        cat_check_triangle(space, x, y, z, kappa, 12, margin_tol, Parallelism::Sequential)
    });
    let mut worst = f64::INFINITY;
    for (i, v) in verdicts.iter().enumerate() {
        let v = v.as_ref().unwrap_or_else(|e| panic!("triangle {i}: {e}"));
        assert!(
            v.satisfied,
            "triangle {i} unsatisfied: margin {}, angles {:?}",
            v.worst_margin, v.angle_checks
        );
        worst = worst.min(v.worst_margin);
    }
    assert!(worst >= -margin_tol);

    // degenerate collinear triples sit at equality
    let mut degenerate_worst: f64 = 0.0;
    for th in [0.0, 1.3, 2.9] {
        let dir = Complex64::from_polar(1.0, th);
        let v = cat_check_triangle(
            space,
            CurvePoint::new(0, dir * 0.1),
            CurvePoint::new(0, dir * 0.2),
            CurvePoint::new(0, dir * 0.3),
            kappa,
            12,
            margin_tol,
            Parallelism::Rayon,
        )
        .unwrap();
        degenerate_worst = degenerate_worst.max(v.worst_margin.abs());
    }
    assert!(
        degenerate_worst <= 1e-5,
        "collinear margin {degenerate_worst}"
    );
    println!(
        "[ 3] CAT(kappa) certificate: PASS (200 triangles, worst margin {:.2e}, collinear {:.2e}, {:.1}s)",
        worst,
        degenerate_worst,
        started.elapsed().as_secs_f64()
    );
}

#[test]
fn criterion_04_angle_at_origin() {
    let started = Instant::now();
    let space = cusp_space();
    let solver = space.solver(0);
    let r = 0.3;
    let x = Complex64::new(r, 0.0);
    let mut worst: f64 = 0.0;
    for dtheta in [PI / 8.0, PI / 4.0, 3.0 * PI / 8.0] {
        let y = Complex64::from_polar(r, dtheta);
        let formula = solver.alexandrov_angle_at_origin(x, y).unwrap();
        assert!(
            (formula - 2.0 * dtheta).abs() < 1e-9,
            "formula route is m * dtheta"
        );
        let ts: Vec<f64> = (0..4).map(|k| 0.02 / 2f64.powi(k)).collect();
        let estimate = alexandrov_angle_estimate(
            space,
            CurvePoint::origin(),
            CurvePoint::new(0, x),
            CurvePoint::new(0, y),
            &ts,
        )
        .unwrap();
        worst = worst.max((formula - estimate).abs());
    }
    assert!(worst <= 1e-3, "route disagreement {worst}");
    println!(
        "[ 4] angle at origin: PASS (worst route disagreement {:.2e}, {:.2}s)",
        worst,
        started.elapsed().as_secs_f64()
    );
}

#[test]
#[allow(clippy::approx_constant)] // 0.70711 is the pinned anchor value
fn criterion_05_sin_half_angle_limit() {
    let started = Instant::now();
    let metric = cusp_metric();
    let solver = GeodesicSolver::new(metric);
    let ts: Vec<f64> = (0..4).map(|k| 0.02 / 2f64.powi(k)).collect();
    let cusp_ratio = solver
        .sin_half_angle_limit(
            Complex64::new(1.0, 0.0),
            Complex64::from_polar(1.0, PI / 4.0),
            &ts,
        )
        .unwrap();
    assert!(
        (cusp_ratio - 0.70711).abs() <= 1e-3,
        "cusp ratio {cusp_ratio}"
    );

    let line = stock::line();
    let line_metric = ConformalMetric::new(line.branch(0), line.ambient()).unwrap();
    let lsolver = GeodesicSolver::new(&line_metric);
    let line_ratio = lsolver
        .sin_half_angle_limit(
            Complex64::new(1.0, 0.0),
            Complex64::from_polar(1.0, PI / 3.0),
            &ts,
        )
        .unwrap();
    assert!((line_ratio - 0.5).abs() <= 1e-3, "line ratio {line_ratio}");
    println!(
        "[ 5] sin(angle/2) limit: PASS (cusp {:.5}, line {:.5}, {:.2}s)",
        cusp_ratio,
        line_ratio,
        started.elapsed().as_secs_f64()
    );
}

#[test]
fn criterion_06_through_origin_flip() {
    let started = Instant::now();
    let space = cusp_space();
    let solver = space.solver(0);
    let r = 0.3;
    let x = Complex64::new(r, 0.0);
    let step = 0.01;
    let sweep: Vec<f64> = (0..=30).map(|i| PI / 2.0 - 0.15 + step * i as f64).collect();
    let flags = catcurve::parallel::map(Parallelism::Rayon, &sweep, |&dtheta| {
        solver
            .connect(x, Complex64::from_polar(r, dtheta))
            .map(|res| res.through_origin)
    });
    let flags: Vec<bool> = flags.into_iter().map(|f| f.unwrap()).collect();
    let flips: Vec<usize> = flags
        .windows(2)
        .enumerate()
        .filter_map(|(i, w)| (w[0] != w[1]).then_some(i + 1))
        .collect();
    assert_eq!(flips.len(), 1, "flags: {flags:?}");
    assert!(!flags[0] && *flags.last().unwrap());
    let flip_at = sweep[flips[0]] - 0.5 * step;
    assert!(
        (flip_at - PI / 2.0).abs() <= 0.02 + 0.5 * step,
        "flip at {flip_at} vs pi/2"
    );
    println!(
        "[ 6] through-origin criterion: PASS (flip at {:.4} vs pi/2 = {:.4}, {:.1}s)",
        flip_at,
        PI / 2.0,
        started.elapsed().as_secs_f64()
    );
}

#[test]
fn criterion_07_distance_gradient() {
    let started = Instant::now();
    let space = cusp_space();
    let solver = space.solver(0);
    let wr = space.working_radius();
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let points: Vec<Complex64> = (0..20).map(|_| annulus_point(&mut rng, wr)).collect();
    let errs = catcurve::parallel::map(Parallelism::Rayon, &points, |&p| {
        solver
            .distance_gradient_check(p, 1e-3 * p.norm())
            .map(|g| g.rel_err)
    });
    let mut worst: f64 = 0.0;
    for e in errs {
        worst = worst.max(e.unwrap());
    }
    assert!(worst <= 1e-4, "worst gradient rel err {worst}");
    println!(
        "[ 7] gradient of d(0,.): PASS (20 points, worst rel err {:.2e}, {:.1}s)",
        worst,
        started.elapsed().as_secs_f64()
    );
}

#[test]
fn criterion_08_convexity() {
    let started = Instant::now();
    let space = cusp_space();
    let solver = space.solver(0);
    let wr = space.working_radius();
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let mut pairs = Vec::new();
    while pairs.len() < 50 {
        let r1 = wr * (0.2 + 0.7 * rng.gen::<f64>());
        let r2 = wr * (0.2 + 0.7 * rng.gen::<f64>());
        let th = 2.0 * PI * rng.gen::<f64>();
        let spread = (0.1 + 0.75 * rng.gen::<f64>()) * PI / 2.0;
        pairs.push((
            Complex64::from_polar(r1, th),
            Complex64::from_polar(r2, th + spread),
        ));
    }
    let results = catcurve::parallel::map(Parallelism::Rayon, &pairs, |&(x, y)| {
        let res = solver.connect(x, y)?;
        if res.through_origin {
            return Ok((0.0, 0.0));
        }
        let n = 10usize;
        let mut u = Vec::with_capacity(n + 1);
        for i in 0..=n {
            let p = res.path.point_at(res.value * i as f64 / n as f64);
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
        let interior = u[1..n].iter().fold(0.0_f64, |a, &b| a.max(b));
        Ok::<_, catcurve::Error>((worst_second, interior - u[0].max(u[n])))
    });
    let mut worst_second = f64::INFINITY;
    let mut worst_ball = f64::NEG_INFINITY;
    for r in results {
        let (s, b) = r.unwrap();
        worst_second = worst_second.min(s);
        worst_ball = worst_ball.max(b);
    }
    assert!(
        worst_second >= -1e-6,
        "second differences dipped to {worst_second}"
    );
    assert!(worst_ball <= 1e-6, "interior exceedance {worst_ball}");
    println!(
        "[ 8] convexity of d(0,.): PASS (50 segments, min 2nd diff {:.2e}, ball exceedance {:.2e}, {:.1}s)",
        worst_second,
        worst_ball,
        started.elapsed().as_secs_f64()
    );
}

#[test]
fn criterion_09_winding_bound() {
    let started = Instant::now();
    // circle-loop sanity
    let n = 720;
    let loop_pts: Vec<Complex64> = (0..=n)
        .map(|k| Complex64::from_polar(0.2, 2.0 * PI * k as f64 / n as f64))
        .collect();
    let w = catcurve::winding_number(loop_pts).unwrap();
    assert!((w - 1.0).abs() <= 1e-9, "circle winding {w}");

    let space = cusp_space();
    let solver = space.solver(0);
    let wr = space.working_radius();
    let mut rng = ChaCha8Rng::seed_from_u64(29);
    let mut worst: f64 = 0.0;
    let mut checked = 0;
    while checked < 20 {
        let x = annulus_point(&mut rng, wr);
        let spread = (0.05 + 0.85 * rng.gen::<f64>()) * PI / 2.0;
        let y = Complex64::from_polar(wr * (0.2 + 0.7 * rng.gen::<f64>()), x.arg() + spread);
        let res = solver.connect(x, y).unwrap();
        if res.through_origin {
            continue;
        }
        worst = worst.max(res.path.winding_first_coordinate().unwrap().abs());
        checked += 1;
    }
    assert!(worst < 1.0, "segment winding reached {worst}");
    println!(
        "[ 9] winding bound: PASS (circle {:.12}, max |segment winding| {:.3}, {:.1}s)",
        w,
        worst,
        started.elapsed().as_secs_f64()
    );
}

#[test]
fn criterion_10_holder_stability() {
    let started = Instant::now();
    let metric = cusp_metric();
    let base = Complex64::new(0.5, 0.0);
    let seminorm = |samples: usize, exponent: f64| {
        let cfg = GeodesicConfig {
            path_samples: samples,
            ..Default::default()
        };
        let solver = GeodesicSolver::with_config(metric, cfg);
        let seg = solver.segment_to_origin(base).unwrap();
        holder_seminorm(metric, &seg.path, exponent, Parallelism::Rayon).unwrap()
    };
    let h1 = seminorm(256, 0.5);
    let h2 = seminorm(512, 0.5);
    let h4 = seminorm(1024, 0.5);
    let drift = ((h2 - h1).abs() / h1).max((h4 - h2).abs() / h2);
    assert!(drift < 0.05, "1/2-seminorm drift {drift} ({h1} {h2} {h4})");
    let l1 = seminorm(256, 1.0);
    let l4 = seminorm(1024, 1.0);
    assert!(
        l4 / l1 > 2.0,
        "Lipschitz quotient grew only x{} ({l1} -> {l4})",
        l4 / l1
    );
    println!(
        "[10] Hoelder stability: PASS (1/2-seminorm {:.4} drift {:.2e}; Lipschitz grew x{:.1}, {:.1}s)",
        h4,
        drift,
        l4 / l1,
        started.elapsed().as_secs_f64()
    );
}

#[test]
fn criterion_11_lift_monotonicity_and_degree() {
    let started = Instant::now();
    for (name, curve) in [("cusp", stock::cusp()), ("perturbed cusp", stock::perturbed_cusp())] {
        let metric = ConformalMetric::new(curve.branch(0), curve.ambient()).unwrap();
        let solver = GeodesicSolver::new(&metric);
        let rows = solver
            .boundary_direction_maps(0.2, 64, Parallelism::Rayon)
            .unwrap();
        let mut min_step = f64::INFINITY;
        for w in rows.windows(2) {
            assert!(w[0].ok && w[1].ok, "{name}: flagged rows");
            min_step = min_step.min(w[1].lift - w[0].lift);
        }
        assert!(
            min_step >= -1e-6,
            "{name}: lift decreased by {min_step}"
        );
        let winding = rows.last().unwrap().lift - rows[0].lift;
        let degree = 2.0 * winding;
        assert!(
            (degree - 2.0).abs() <= 1e-3,
            "{name}: tangent-power winding {degree}"
        );
    }
    println!(
        "[11] lift monotonicity and degree: PASS (cusp and perturbed cusp, {:.1}s)",
        started.elapsed().as_secs_f64()
    );
}

#[test]
fn criterion_12_branching_certificate() {
    let started = Instant::now();
    let space = cusp_space();
    let x = CurvePoint::new(0, Complex64::new(0.3, 0.0));
    let report = branching_certificate(space, x, 8, 1e-5, Parallelism::Rayon).unwrap();
    assert!(report.singular);
    assert!(
        report.complete,
        "only {} of 8 extensions verified: {}",
        report.verified, report.note
    );
    let worst = report
        .rows
        .iter()
        .map(|r| r.residual)
        .fold(0.0_f64, f64::max);
    assert!(worst <= 1e-5);
    println!(
        "[12] branching certificate: PASS (8 extensions, worst residual {:.2e}, {:.1}s)",
        worst,
        started.elapsed().as_secs_f64()
    );
}

#[test]
fn criterion_13_glued_space() {
    let started = Instant::now();
    let geo = GeodesicConfig {
        working_radius: Some(0.45),
        ..Default::default()
    };
    let space = GluedSpace::with_params(stock::node(), geo, 24, 48, 0.85, 8).unwrap();
    // cross-branch distance is the exact sum of radii
    let x = CurvePoint::new(0, Complex64::new(0.3, 0.0));
    let y = CurvePoint::new(1, Complex64::new(0.4, 0.0));
    let d = space.distance(x, y).unwrap();
    assert!(d.through_origin);
    assert!(
        (d.value - 0.7).abs() <= 1e-12,
        "cross-branch distance {} vs 0.7",
        d.value
    );

    // CAT(0) batch on tripod triangles
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let wr = space.working_radius();
    let triangles: Vec<[CurvePoint; 3]> = (0..50)
        .map(|i| {
            let b = [(0, 0, 1), (0, 1, 1), (0, 1, 0)][i % 3];
            [
                CurvePoint::new(b.0, annulus_point(&mut rng, wr)),
                CurvePoint::new(b.1, annulus_point(&mut rng, wr)),
                CurvePoint::new(b.2, annulus_point(&mut rng, wr)),
            ]
        })
        .collect();
    let verdicts = catcurve::parallel::map(Parallelism::Rayon, &triangles, |&[a, b, c]| {
        cat_check_triangle(&space, a, b, c, 0.0, 12, 2.1e-3, Parallelism::Sequential)
    });
    let mut worst = f64::INFINITY;
    for (i, v) in verdicts.iter().enumerate() {
        let v = v.as_ref().unwrap_or_else(|e| panic!("tripod {i}: {e}"));
        assert!(v.satisfied, "tripod {i}: margin {}", v.worst_margin);
        worst = worst.min(v.worst_margin);
    }

    // the angle at a cross-branch vertex vanishes
    let ts: Vec<f64> = (0..4).map(|k| 0.03 / 2f64.powi(k)).collect();
    let angle = alexandrov_angle_estimate(
        &space,
        y,
        x,
        CurvePoint::new(0, Complex64::new(0.0, 0.3)),
        &ts,
    )
    .unwrap();
    assert!(angle <= 1e-6, "cross-branch vertex angle {angle}");
    println!(
        "[13] glued space: PASS (cross distance exact, 50 tripods worst margin {:.2e}, vertex angle {:.2e}, {:.1}s)",
        worst,
        angle,
        started.elapsed().as_secs_f64()
    );
}

#[test]
fn criterion_14_sector_convexity() {
    let started = Instant::now();
    let space = cusp_space();
    let solver = space.solver(0);
    let wr = space.working_radius();
    let half_sector = PI / 2.0; // 1/(2m) turns in chart angle for m = 2
    let mut rng = ChaCha8Rng::seed_from_u64(37);
    let mut pairs = Vec::new();
    while pairs.len() < 50 {
        let r1 = wr * (0.3 + 0.6 * rng.gen::<f64>());
        let r2 = wr * (0.3 + 0.6 * rng.gen::<f64>());
        let th = 2.0 * PI * rng.gen::<f64>();
        let spread = (0.1 + 0.8 * rng.gen::<f64>()) * half_sector;
        pairs.push((
            Complex64::from_polar(r1, th),
            Complex64::from_polar(r2, th + spread),
        ));
    }
    let results = catcurve::parallel::map(Parallelism::Rayon, &pairs, |&(x, y)| {
        let tx = solver.origin_leg(x)?.tangent;
        let ty = solver.origin_leg(y)?.tangent;
        if catcurve::numeric::angle_between(tx, ty) >= half_sector {
            return Ok(0.0);
        }
        let res = solver.connect(x, y)?;
        assert!(!res.through_origin, "sector segments avoid the origin");
        let rel = |d: Complex64| (d * tx.conj()).arg();
        let (lo, hi) = (rel(ty).min(0.0), rel(ty).max(0.0));
        let mut worst: f64 = 0.0;
        for i in 1..7 {
            let p = res.path.point_at(res.value * i as f64 / 7.0);
            if p.norm() == 0.0 {
                continue;
            }
            let a = rel(solver.origin_leg(p)?.tangent);
            worst = worst.max((a - hi).max(lo - a).max(0.0));
        }
        Ok::<_, catcurve::Error>(worst)
    });
    let mut worst: f64 = 0.0;
    for r in results {
        worst = worst.max(r.unwrap());
    }
    assert!(worst <= 0.02, "sector exceedance {worst} rad");
    println!(
        "[14] sector convexity: PASS (50 pairs, worst angular exceedance {:.2e} rad, {:.1}s)",
        worst,
        started.elapsed().as_secs_f64()
    );
}

/// The consolidated suite run must agree with the per-criterion results.
#[test]
fn full_suite_on_the_cusp_passes() {
    let started = Instant::now();
    let cfg = ExperimentConfig {
        working_radius: Some(0.35),
        triangles: 20,
        ..Default::default()
    };
    let report = run_suite(&stock::cusp(), &cfg).unwrap();
    for o in &report.outcomes {
        assert!(o.passed, "{} failed: {}", o.name, o.detail);
    }
    assert!(report.all_passed);
    println!(
        "[  ] consolidated suite (cusp): PASS ({} experiments, {:.1}s)",
        report.outcomes.len(),
        started.elapsed().as_secs_f64()
    );
}

/// The suite also passes on the bounded-curvature germ y^2 = x^6.
#[test]
fn full_suite_on_y2x6_passes() {
    let started = Instant::now();
    let cfg = ExperimentConfig {
        triangles: 10,
        convexity_segments: 12,
        sector_pairs: 12,
        gradient_points: 6,
        ..Default::default()
    };
    let report = run_suite(&stock::y2_xn(6), &cfg).unwrap();
    assert!(report.kappa < 0.0 && report.kappa > -1e-4, "kappa {}", report.kappa);
    for o in &report.outcomes {
        assert!(o.passed, "{} failed: {}", o.name, o.detail);
    }
    println!(
        "[  ] consolidated suite (y^2 = x^6): PASS (kappa_sup {:.2e}, {:.1}s)",
        report.kappa,
        started.elapsed().as_secs_f64()
    );
}
