//! Graded polar mesh on the chart disc with Dijkstra shortest paths.
//!
//! This is the brute-force side of every distance computation: graph
//! distances are upper bounds for the intrinsic distance (up to quadrature
//! error of the edge weights) and decrease under refinement, which makes
//! the mesh both a seed generator and an independent oracle for the
//! geodesic solver.

use crate::metric::ConformalMetric;
use crate::numeric::Quadrature;
use crate::{Error, Result};
use num_complex::Complex64;
use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::io::Write;

/// Metric length of the straight chart chord `[a, b]` by Gauss-Legendre
/// quadrature of `sqrt(lambda)`.
///
/// When an endpoint is the origin the integrand vanishes like `t^{m-1}`;
/// the substitution `u = t^m` absorbs that factor exactly, so the cone
/// length of radial chords is computed to machine precision:
/// `L = |b|^m / m * int_0^1 sqrt(Q(u^{1/m} b)) du`.
pub fn edge_length(
    metric: &ConformalMetric,
    a: Complex64,
    b: Complex64,
    quad_order: usize,
) -> Result<f64> {
    let quad = Quadrature::gauss_legendre(quad_order)?;
    edge_length_with(metric, a, b, &quad)
}

pub(crate) fn edge_length_with(
    metric: &ConformalMetric,
    a: Complex64,
    b: Complex64,
    quad: &Quadrature,
) -> Result<f64> {
    metric.check_domain(a)?;
    metric.check_domain(b)?;
    if (a - b).norm() == 0.0 {
        return Ok(0.0);
    }
    let m = metric.multiplicity();
    let origin_at_a = a.norm() == 0.0;
    let origin_at_b = b.norm() == 0.0;
    if origin_at_a || origin_at_b {
        let tip = if origin_at_a { b } else { a };
        let mf = m as f64;
        // L = |tip|^m / m * int_0^1 sqrt(Q(u^{1/m} tip)) du
        let integral = quad.integrate(|u| metric.sqrt_q(tip * u.powf(1.0 / mf)));
        return Ok(tip.norm().powi(m as i32) * integral / mf);
    }
    let chord = b - a;
    let len = chord.norm();
    Ok(quad.integrate(|t| metric.sqrt_factor(a + chord * t) * len))
}

/// Winding number (total continuous argument variation over 2 pi) of a
/// planar polyline that avoids the origin.
pub fn winding_number<I: IntoIterator<Item = Complex64>>(points: I) -> Result<f64> {
    let mut total = 0.0;
    let mut prev: Option<Complex64> = None;
    let mut count = 0usize;
    for w in points {
        if w.norm() == 0.0 {
            return Err(Error::Domain(
                "winding number undefined: the projected path hits the origin".into(),
            ));
        }
        if let Some(p) = prev {
            total += (w / p).arg();
        }
        prev = Some(w);
        count += 1;
    }
    if count < 2 {
        return Err(Error::Argument(
            "winding number needs at least two points".into(),
        ));
    }
    Ok(total / (2.0 * std::f64::consts::PI))
}

/// A chart polyline with its metric length.
#[derive(Debug, Clone)]
pub struct PathPolyline {
    pub points: Vec<Complex64>,
    pub length: f64,
}

impl PathPolyline {
    /// Winding of the first ambient coordinate `phi_1 = z^m` along the
    /// polyline, the quantity bounded by 1 for segments near the origin.
    pub fn winding_first_coordinate(&self, m: u32) -> Result<f64> {
        winding_number(self.points.iter().map(|z| z.powu(m)))
    }

    /// Chart direction of the first leg, if any.
    pub fn initial_direction(&self) -> Option<Complex64> {
        self.points.windows(2).find_map(|w| {
            let d = w[1] - w[0];
            (d.norm() > 0.0).then(|| d / d.norm())
        })
    }
}

#[derive(Debug, Clone, Copy)]
struct HeapEntry {
    dist: f64,
    node: u32,
}

impl PartialEq for HeapEntry {
    fn eq(&self, other: &Self) -> bool {
        self.dist == other.dist && self.node == other.node
    }
}
impl Eq for HeapEntry {}
impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for HeapEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        // reversed: BinaryHeap is a max-heap, we want the smallest distance
        other
            .dist
            .total_cmp(&self.dist)
            .then_with(|| other.node.cmp(&self.node))
    }
}

/// Graded polar mesh: `rings` circles of radii `R g^k` with `sectors`
/// vertices each, ring/radial/diagonal edges, and the origin vertex wired
/// to the innermost ring. Immutable after construction; queries are
/// read-only and safe to run from many threads.
#[derive(Debug, Clone)]
pub struct DiscMesh {
    vertices: Vec<Complex64>,
    adjacency: Vec<Vec<(u32, f64)>>,
    rings: usize,
    sectors: usize,
    grading: f64,
    max_edge_chart_length: f64,
    edge_count: usize,
}

impl DiscMesh {
    pub fn build(
        metric: &ConformalMetric,
        rings: usize,
        sectors: usize,
        grading: f64,
        quad_order: usize,
    ) -> Result<Self> {
        Self::build_with_probes(metric, rings, sectors, grading, quad_order, &[])
    }

    /// Builds the mesh and splices in extra probe vertices, each wired to
    /// the corners of its containing cell, so that exact query points can be
    /// addressed by the oracle.
    pub fn build_with_probes(
        metric: &ConformalMetric,
        rings: usize,
        sectors: usize,
        grading: f64,
        quad_order: usize,
        probes: &[Complex64],
    ) -> Result<Self> {
        if rings < 2 {
            return Err(Error::Argument(format!("rings must be >= 2, got {rings}")));
        }
        if sectors < 8 {
            return Err(Error::Argument(format!(
                "sectors must be >= 8, got {sectors}"
            )));
        }
        if !(grading > 0.0 && grading < 1.0) {
            return Err(Error::Argument(format!(
                "grading must lie in (0, 1), got {grading}"
            )));
        }
        let quad = Quadrature::gauss_legendre(quad_order)?;
        let radius = metric.domain_radius();
        let radii: Vec<f64> = (0..rings).map(|k| radius * grading.powi(k as i32)).collect();
        let mut vertices = vec![Complex64::new(0.0, 0.0)];
        for &r in &radii {
            for j in 0..sectors {
                let th = 2.0 * std::f64::consts::PI * j as f64 / sectors as f64;
                vertices.push(Complex64::from_polar(r, th));
            }
        }
        let vid = |k: usize, j: usize| -> usize { 1 + k * sectors + (j % sectors) };
        let mut mesh = Self {
            adjacency: vec![Vec::new(); vertices.len()],
            vertices,
            rings,
            sectors,
            grading,
            max_edge_chart_length: 0.0,
            edge_count: 0,
        };
        for k in 0..rings {
            for j in 0..sectors {
                mesh.add_edge(metric, vid(k, j), vid(k, j + 1), &quad)?;
                if k + 1 < rings {
                    mesh.add_edge(metric, vid(k, j), vid(k + 1, j), &quad)?;
                    // both diagonals of the quad cell
                    mesh.add_edge(metric, vid(k, j), vid(k + 1, j + 1), &quad)?;
                    mesh.add_edge(metric, vid(k, j + 1), vid(k + 1, j), &quad)?;
                } else {
                    mesh.add_edge(metric, vid(k, j), 0, &quad)?;
                }
            }
        }
        for &p in probes {
            metric.check_domain(p)?;
            let idx = mesh.vertices.len();
            mesh.vertices.push(p);
            mesh.adjacency.push(Vec::new());
            if p.norm() == 0.0 {
                for j in 0..sectors {
                    mesh.add_edge(metric, idx, vid(rings - 1, j), &quad)?;
                }
                continue;
            }
            let theta = p.arg().rem_euclid(2.0 * std::f64::consts::PI);
            let j = ((theta / (2.0 * std::f64::consts::PI) * sectors as f64).floor() as usize)
                .min(sectors - 1);
            // innermost ring index with radius <= |p|, clamped to the grid
            let k = radii.iter().position(|&r| r <= p.norm()).unwrap_or(rings - 1);
            // probes wire to grid corners only: reaching the origin must go
            // through the graded rings, so an under-resolved mesh shows up
            // as a convergence failure instead of being papered over by a
            // direct cone edge
            let mut corners = vec![vid(k, j), vid(k, j + 1)];
            if k > 0 {
                corners.push(vid(k - 1, j));
                corners.push(vid(k - 1, j + 1));
            }
            if k + 1 < rings {
                corners.push(vid(k + 1, j));
                corners.push(vid(k + 1, j + 1));
            }
            for c in corners {
                mesh.add_edge(metric, idx, c, &quad)?;
            }
        }
        Ok(mesh)
    }

    fn add_edge(
        &mut self,
        metric: &ConformalMetric,
        a: usize,
        b: usize,
        quad: &Quadrature,
    ) -> Result<()> {
        if a == b || self.adjacency[a].iter().any(|&(n, _)| n as usize == b) {
            return Ok(());
        }
        let za = self.vertices[a];
        let zb = self.vertices[b];
        let w = edge_length_with(metric, za, zb, quad)?;
        self.adjacency[a].push((b as u32, w));
        self.adjacency[b].push((a as u32, w));
        self.max_edge_chart_length = self.max_edge_chart_length.max((za - zb).norm());
        self.edge_count += 1;
        Ok(())
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    pub fn rings(&self) -> usize {
        self.rings
    }

    pub fn sectors(&self) -> usize {
        self.sectors
    }

    pub fn grading(&self) -> f64 {
        self.grading
    }

    pub fn max_edge_chart_length(&self) -> f64 {
        self.max_edge_chart_length
    }

    pub fn vertex(&self, index: usize) -> Complex64 {
        self.vertices[index]
    }

    /// The origin vertex is always index 0.
    pub fn origin_vertex(&self) -> usize {
        0
    }

    pub fn nearest_vertex(&self, z: Complex64) -> usize {
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (i, &v) in self.vertices.iter().enumerate() {
            let d = (v - z).norm_sqr();
            if d < best_d {
                best_d = d;
                best = i;
            }
        }
        best
    }

    /// Exact shortest path on the edge graph. The value is an upper bound
    /// for the intrinsic distance up to the quadrature error of the edge
    /// weights. Queries are canonicalized to the smaller start index, so
    /// `dijkstra(a, b)` and `dijkstra(b, a)` are bitwise equal.
    pub fn dijkstra(&self, a: usize, b: usize) -> Result<(f64, PathPolyline)> {
        if a > b {
            let (d, mut poly) = self.dijkstra(b, a)?;
            poly.points.reverse();
            return Ok((d, poly));
        }
        let n = self.vertices.len();
        if a >= n || b >= n {
            return Err(Error::Argument(format!(
                "vertex index out of range: {a}, {b} (mesh has {n} vertices)"
            )));
        }
        if a == b {
            return Ok((
                0.0,
                PathPolyline {
                    points: vec![self.vertices[a]],
                    length: 0.0,
                },
            ));
        }
        let mut dist = vec![f64::INFINITY; n];
        let mut prev = vec![u32::MAX; n];
        let mut heap = BinaryHeap::new();
        dist[a] = 0.0;
        heap.push(HeapEntry {
            dist: 0.0,
            node: a as u32,
        });
        while let Some(HeapEntry { dist: d, node }) = heap.pop() {
            let u = node as usize;
            if d > dist[u] {
                continue;
            }
            if u == b {
                break;
            }
            for &(v, w) in &self.adjacency[u] {
                let v = v as usize;
                let nd = d + w;
                if nd < dist[v] {
                    dist[v] = nd;
                    prev[v] = u as u32;
                    heap.push(HeapEntry {
                        dist: nd,
                        node: v as u32,
                    });
                }
            }
        }
        if !dist[b].is_finite() {
            return Err(Error::Computation(
                "mesh is disconnected, which violates its construction invariant".into(),
            ));
        }
        let mut chain = vec![b];
        let mut cur = b;
        while cur != a {
            cur = prev[cur] as usize;
            chain.push(cur);
        }
        chain.reverse();
        Ok((
            dist[b],
            PathPolyline {
                points: chain.iter().map(|&i| self.vertices[i]).collect(),
                length: dist[b],
            },
        ))
    }

    /// Writes the vertex and edge tables as plain text for external tools.
    pub fn dump(&self, out: &mut impl Write) -> std::io::Result<()> {
        writeln!(out, "# vertices {}", self.vertices.len())?;
        writeln!(out, "# index re im")?;
        for (i, v) in self.vertices.iter().enumerate() {
            writeln!(out, "{} {} {}", i, v.re, v.im)?;
        }
        writeln!(out, "# edges {}", self.edge_count)?;
        writeln!(out, "# a b length")?;
        for (i, adj) in self.adjacency.iter().enumerate() {
            for &(j, w) in adj {
                if (j as usize) > i {
                    writeln!(out, "{} {} {}", i, j, w)?;
                }
            }
        }
        Ok(())
    }
}
