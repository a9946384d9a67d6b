//! Property-based invariants: metric-space axioms of the oracle graph,
//! agreement of independent evaluation routes, model-space trigonometry,
//! and the chart Hoelder estimate.

use catcurve::curve::{stock, NormalizedBranch};
use catcurve::{
    comparison_angle, edge_length, model_distance, winding_number, AmbientMetric,
    ConformalMetric, DiscMesh, ModelTriangle, SidePoint,
};
use num_complex::Complex64;
use proptest::prelude::*;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::sync::OnceLock;

fn cusp_mesh() -> &'static (ConformalMetric, DiscMesh) {
    static MESH: OnceLock<(ConformalMetric, DiscMesh)> = OnceLock::new();
    MESH.get_or_init(|| {
        let curve = stock::cusp();
        let metric = ConformalMetric::new(curve.branch(0), curve.ambient()).unwrap();
        let mesh = DiscMesh::build(&metric, 20, 40, 0.8, 8).unwrap();
        (metric, mesh)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// Graph distances form a metric: symmetry is exact, the triangle
    /// inequality holds on every sampled triple.
    #[test]
    fn oracle_metric_axioms(a in 0usize..801, b in 0usize..801, c in 0usize..801) {
        let (_, mesh) = cusp_mesh();
        let (dab, _) = mesh.dijkstra(a, b).unwrap();
        let (dba, _) = mesh.dijkstra(b, a).unwrap();
        prop_assert_eq!(dab, dba);
        let (dac, _) = mesh.dijkstra(a, c).unwrap();
        let (dcb, _) = mesh.dijkstra(c, b).unwrap();
        prop_assert!(dab <= dac + dcb + 1e-12);
        prop_assert!(dab >= 0.0);
        prop_assert!((a == b) == (dab == 0.0));
    }

    /// The three conformal-factor routes agree to near machine precision
    /// for random normalized branches.
    #[test]
    fn conformal_factor_routes_agree(
        m in 1u32..=3,
        c1 in -0.9f64..0.9, c2 in -0.9f64..0.9, c3 in -0.9f64..0.9,
        r in 0.05f64..0.95, th in 0.0f64..std::f64::consts::TAU,
    ) {
        let psi = vec![
            vec![Complex64::new(1.0, 0.0)],
            vec![
                Complex64::new(0.0, 0.0),
                Complex64::new(c1, 0.2 * c2),
                Complex64::new(c3, -0.1 * c1),
            ],
        ];
        // not every random psi is an immersion; skip rejected ones
        let Ok(branch) = NormalizedBranch::new(m, psi, 1.0) else {
            return Ok(());
        };
        let metric = ConformalMetric::new(&branch, &AmbientMetric::identity(2)).unwrap();
        let z = Complex64::from_polar(r, th);
        let a = metric.conformal_factor(z);
        let b = metric.conformal_factor_direct(z);
        let c = metric.conformal_factor_factored(z);
        prop_assert!((a - b).abs() <= 1e-12 * a.abs().max(1e-300));
        prop_assert!((a - c).abs() <= 1e-12 * a.abs().max(1e-300));
    }

    /// Flat-ambient Gauss equation on random branches: K = -2 |B|^2.
    #[test]
    fn gauss_equation_holds_for_random_branches(
        m in 1u32..=3,
        c1 in -0.8f64..0.8, c2 in -0.8f64..0.8,
        r in 0.05f64..0.9, th in 0.0f64..std::f64::consts::TAU,
    ) {
        let psi = vec![
            vec![Complex64::new(1.0, 0.0)],
            vec![
                Complex64::new(0.0, 0.0),
                Complex64::new(c1, 0.0),
                Complex64::new(0.3 * c2, 0.1 * c1),
            ],
        ];
        let Ok(branch) = NormalizedBranch::new(m, psi, 1.0) else {
            return Ok(());
        };
        let metric = ConformalMetric::new(&branch, &AmbientMetric::identity(2)).unwrap();
        let z = Complex64::from_polar(r, th);
        let k = metric.gaussian_curvature(z).unwrap();
        let b = metric.second_form_norm(z).unwrap();
        prop_assert!((k + 2.0 * b * b).abs() <= 1e-8 * k.abs().max(1e-12));
    }

    /// The model-space vertex angle grows with kappa and the realized
    /// triangle stays consistent with its own law of cosines.
    #[test]
    fn model_triangle_properties(
        a in 0.05f64..0.5, b in 0.05f64..0.5, frac in 0.05f64..0.95,
        kappa in -4.0f64..4.0,
    ) {
        // c interpolates strictly between |a-b| and a+b
        let c = (a - b).abs() + frac * ((a + b) - (a - b).abs());
        let angle_low = comparison_angle(kappa - 0.5, a, b, c).unwrap();
        let angle_high = comparison_angle(kappa + 0.5, a, b, c).unwrap();
        prop_assert!(angle_high >= angle_low - 1e-12);

        let tri = ModelTriangle::new(kappa, a, b, c).unwrap();
        prop_assert!(tri.side_consistency_residual() < 1e-10);

        // sampled model distances are symmetric and satisfy the triangle
        // inequality
        let p = SidePoint { side: 0, arc: 0.3 * tri.side_length(0) };
        let q = SidePoint { side: 1, arc: 0.6 * tri.side_length(1) };
        let w = SidePoint { side: 2, arc: 0.5 * tri.side_length(2) };
        let dpq = model_distance(&tri, p, q).unwrap();
        let dqp = model_distance(&tri, q, p).unwrap();
        prop_assert!((dpq - dqp).abs() < 1e-12);
        let dpw = model_distance(&tri, p, w).unwrap();
        let dwq = model_distance(&tri, w, q).unwrap();
        prop_assert!(dpq <= dpw + dwq + 1e-12);
    }

    /// Winding numbers add under concatenation and vanish on radial paths.
    #[test]
    fn winding_additivity(
        th0 in 0.0f64..std::f64::consts::TAU,
        sweep in -2.5f64..2.5,
        split in 0.2f64..0.8,
        n in 40usize..120,
    ) {
        let pts: Vec<Complex64> = (0..=n)
            .map(|k| Complex64::from_polar(0.3, th0 + sweep * k as f64 / n as f64))
            .collect();
        let k_split = ((n as f64) * split) as usize;
        let whole = winding_number(pts.iter().copied()).unwrap();
        let first = winding_number(pts[..=k_split].iter().copied()).unwrap();
        let second = winding_number(pts[k_split..].iter().copied()).unwrap();
        prop_assert!((whole - (first + second)).abs() < 1e-12);
        prop_assert!((whole - sweep / (2.0 * std::f64::consts::PI)).abs() < 1e-9);
    }

    /// Quadrature edge lengths are symmetric and dominate the flat chord
    /// scaled by the smallest metric factor along it.
    #[test]
    fn edge_length_symmetry(
        r1 in 0.05f64..0.9, th1 in 0.0f64..std::f64::consts::TAU,
        r2 in 0.05f64..0.9, th2 in 0.0f64..std::f64::consts::TAU,
    ) {
        let (metric, _) = cusp_mesh();
        let a = Complex64::from_polar(r1, th1);
        let b = Complex64::from_polar(r2, th2);
        let lab = edge_length(metric, a, b, 8).unwrap();
        let lba = edge_length(metric, b, a, 8).unwrap();
        prop_assert!((lab - lba).abs() <= 1e-13 * lab.max(1e-300));
        prop_assert!(lab >= 0.0);
    }
}

/// The chart estimate `|z - z'| <= c d(phi(z), phi(z'))^{1/m}`: the
/// empirical ratio over random vertex pairs is bounded and stabilizes
/// under mesh refinement.
#[test]
fn chart_holder_ratio_stabilizes_under_refinement() {
    let curve = stock::cusp();
    let metric = ConformalMetric::new(curve.branch(0), curve.ambient()).unwrap();
    let coarse = DiscMesh::build(&metric, 16, 32, 0.8, 8).unwrap();
    let fine = DiscMesh::build(&metric, 32, 64, 0.8, 8).unwrap();
    let ratio_max = |mesh: &DiscMesh| {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        let mut worst = 0.0_f64;
        for _ in 0..150 {
            let a = rng.gen_range(0..mesh.vertex_count());
            let b = rng.gen_range(0..mesh.vertex_count());
            if a == b {
                continue;
            }
            let (d, _) = mesh.dijkstra(a, b).unwrap();
            let chart = (mesh.vertex(a) - mesh.vertex(b)).norm();
            worst = worst.max(chart / d.sqrt());
        }
        worst
    };
    let coarse_max = ratio_max(&coarse);
    let fine_max = ratio_max(&fine);
    assert!(coarse_max.is_finite() && fine_max.is_finite());
    // bounded by an O(1) constant for the cusp and stable across refinement
    assert!(coarse_max < 3.0 && fine_max < 3.0, "{coarse_max} {fine_max}");
    assert!(
        (fine_max - coarse_max).abs() <= 0.15 * coarse_max,
        "ratio drifted: {coarse_max} -> {fine_max}"
    );
}

/// Distances computed by the independent routes bracket each other: the
/// solver value never exceeds the oracle and never undercuts it by more
/// than the refinement tolerance.
#[test]
fn solver_and_oracle_bracket_each_other() {
    let curve = stock::cusp();
    let metric = ConformalMetric::new(curve.branch(0), curve.ambient()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(43);
    let mut probes = Vec::new();
    for _ in 0..6 {
        let r = 0.05 + 0.18 * rng.gen::<f64>();
        let th = 2.0 * std::f64::consts::PI * rng.gen::<f64>();
        probes.push(Complex64::from_polar(r, th));
    }
    let mesh = DiscMesh::build_with_probes(&metric, 36, 72, 0.85, 8, &probes).unwrap();
    let solver = catcurve::GeodesicSolver::new(&metric).with_oracle(&mesh);
    let base = mesh.vertex_count() - probes.len();
    for i in 0..probes.len() {
        for j in i + 1..probes.len() {
            let (oracle, _) = mesh.dijkstra(base + i, base + j).unwrap();
            let d = solver.connect(probes[i], probes[j]).unwrap().value;
            assert!(d <= oracle + 1e-9, "solver {d} above oracle {oracle}");
            // graph paths overestimate by the cell anisotropy on worst
            // directions (the graded polar cells see the doubled cone angle)
            assert!(
                d >= oracle * 0.88 - 1e-3,
                "solver {d} far below oracle {oracle}"
            );
        }
    }
    // on radial pairs the graph contains the geodesic and the bound is tight
    let probe = Complex64::new(0.2, 0.0);
    let mesh = DiscMesh::build_with_probes(&metric, 36, 72, 0.85, 8, &[probe]).unwrap();
    let solver = catcurve::GeodesicSolver::new(&metric).with_oracle(&mesh);
    let (oracle, _) = mesh
        .dijkstra(mesh.origin_vertex(), mesh.vertex_count() - 1)
        .unwrap();
    let d = solver.connect(Complex64::new(0.0, 0.0), probe).unwrap().value;
    assert!(d <= oracle + 1e-9 && d >= oracle - 1e-3, "{d} vs {oracle}");
}
