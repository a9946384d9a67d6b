//! Curve germs in normalized form.
//!
//! A branch is the map `phi(z) = z^m psi(z)` on `|z| <= domain_radius` with
//! `psi_1 == 1` and `psi_j(0) = 0` for `j > 1`; `psi` is a truncated power
//! series (one polynomial per ambient coordinate). Inputs that are not in
//! this normal form are rejected, not re-normalized. A multi-branch curve is
//! a list of branches, each in its own adapted chart, glued at the origin.

use crate::hermitian::AmbientMetric;
use crate::numeric::{horner, poly_derivative};
use crate::{Error, Result};
use num_complex::Complex64;
use serde::Deserialize;
use std::path::Path;

/// One analytic branch in normalized form.
#[derive(Debug, Clone)]
pub struct NormalizedBranch {
    m: u32,
    psi: Vec<Vec<Complex64>>,
    domain_radius: f64,
}

impl NormalizedBranch {
    /// Validates the normal form and the non-vanishing of `phi'` away from
    /// the origin (sampled on a 64 x 64 polar grid; a guard, not a proof).
    pub fn new(m: u32, psi: Vec<Vec<Complex64>>, domain_radius: f64) -> Result<Self> {
        if m == 0 {
            return Err(Error::Spec("multiplicity m must be >= 1".into()));
        }
        if !(domain_radius > 0.0 && domain_radius <= 1.0) {
            return Err(Error::Spec(format!(
                "domain_radius must lie in (0, 1], got {domain_radius}"
            )));
        }
        if psi.is_empty() {
            return Err(Error::Spec("psi must have at least one coordinate".into()));
        }
        let first = &psi[0];
        let first_ok = !first.is_empty()
            && first[0] == Complex64::new(1.0, 0.0)
            && first[1..].iter().all(|c| c.norm() == 0.0);
        if !first_ok {
            return Err(Error::Spec(
                "normal form requires psi_1 == 1 identically (phi(z) = z^m psi(z) with \
                 psi_1(0) = 1); re-express the branch in adapted coordinates"
                    .into(),
            ));
        }
        for (j, series) in psi.iter().enumerate().skip(1) {
            if series.first().map(|c| c.norm()).unwrap_or(0.0) != 0.0 {
                return Err(Error::Spec(format!(
                    "normal form requires psi_{}(0) = 0",
                    j + 1
                )));
            }
        }
        let branch = Self {
            m,
            psi,
            domain_radius,
        };
        branch.check_immersion()?;
        Ok(branch)
    }

    /// `v(z) = m psi(z) + z psi'(z)` must not vanish, so that
    /// `phi'(z) = z^{m-1} v(z)` is nonzero off the origin.
    fn check_immersion(&self) -> Result<()> {
        let v = self.v_coeffs();
        let scale: f64 = v
            .iter()
            .flat_map(|s| s.iter().map(|c| c.norm()))
            .fold(0.0, f64::max)
            .max(1.0);
        for i in 0..64 {
            let r = self.domain_radius * (i as f64 + 1.0) / 64.0;
            for j in 0..64 {
                let th = 2.0 * std::f64::consts::PI * j as f64 / 64.0;
                let z = Complex64::from_polar(r, th);
                let norm: f64 = v.iter().map(|s| horner(s, z).norm_sqr()).sum::<f64>().sqrt();
                if norm < 1e-9 * scale {
                    return Err(Error::Spec(format!(
                        "phi'(z) vanishes near z = {z} inside the domain; \
                         the branch is not an immersion off the origin"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn multiplicity(&self) -> u32 {
        self.m
    }

    pub fn domain_radius(&self) -> f64 {
        self.domain_radius
    }

    pub fn ambient_dim(&self) -> usize {
        self.psi.len()
    }

    pub fn psi_coeffs(&self) -> &[Vec<Complex64>] {
        &self.psi
    }

    /// Degrees of the psi polynomials (trailing zeros not trimmed).
    pub fn psi_degrees(&self) -> Vec<usize> {
        self.psi.iter().map(|s| s.len().saturating_sub(1)).collect()
    }

    /// Evaluates `phi(z) = z^m psi(z)`.
    pub fn phi(&self, z: Complex64) -> Result<Vec<Complex64>> {
        if z.norm() > self.domain_radius * (1.0 + 1e-12) {
            return Err(Error::Domain(format!(
                "|z| = {} exceeds the domain radius {}",
                z.norm(),
                self.domain_radius
            )));
        }
        let zm = z.powu(self.m);
        Ok(self.psi.iter().map(|s| zm * horner(s, z)).collect())
    }

    /// Coefficients of `phi` per coordinate: psi shifted up by `m`.
    pub fn phi_coeffs(&self) -> Vec<Vec<Complex64>> {
        self.psi
            .iter()
            .map(|s| {
                let mut c = vec![Complex64::new(0.0, 0.0); self.m as usize];
                c.extend_from_slice(s);
                c
            })
            .collect()
    }

    /// Coefficients of `phi'` per coordinate.
    pub fn phi_prime_coeffs(&self) -> Vec<Vec<Complex64>> {
        self.phi_coeffs().iter().map(|c| poly_derivative(c)).collect()
    }

    /// Coefficients of `v(z) = m psi(z) + z psi'(z)`, the nonvanishing factor
    /// in `phi'(z) = z^{m-1} v(z)`.
    pub fn v_coeffs(&self) -> Vec<Vec<Complex64>> {
        self.psi
            .iter()
            .map(|s| {
                s.iter()
                    .enumerate()
                    .map(|(k, c)| c * (self.m as f64 + k as f64))
                    .collect()
            })
            .collect()
    }

    /// Coefficients of the tangent correction `C(z)` in
    /// `phi'(z) = m z^{m-1} (e_1 + z C(z))`, i.e.
    /// `C(z) = (psi(z) - psi(0)) / z + psi'(z) / m`.
    pub fn tangent_correction_coeffs(&self) -> Vec<Vec<Complex64>> {
        self.psi
            .iter()
            .map(|s| {
                let len = s.len().max(2) - 1;
                let mut c = vec![Complex64::new(0.0, 0.0); len];
                for (k, out) in c.iter_mut().enumerate() {
                    let shifted = s.get(k + 1).copied().unwrap_or_default();
                    *out = shifted + shifted * (k as f64 + 1.0) / self.m as f64;
                }
                c
            })
            .collect()
    }
}

/// Several branches glued at the origin. Each branch lives in its own
/// adapted chart; only the shared ambient metric ties them together.
#[derive(Debug, Clone)]
pub struct MultiBranchCurve {
    ambient: AmbientMetric,
    branches: Vec<NormalizedBranch>,
}

impl MultiBranchCurve {
    pub fn new(ambient: AmbientMetric, branches: Vec<NormalizedBranch>) -> Result<Self> {
        if branches.is_empty() {
            return Err(Error::Spec("curve needs at least one branch".into()));
        }
        for (i, b) in branches.iter().enumerate() {
            if b.ambient_dim() != ambient.dim() {
                return Err(Error::Spec(format!(
                    "branch {} has {} coordinates but the ambient dimension is {}",
                    i,
                    b.ambient_dim(),
                    ambient.dim()
                )));
            }
        }
        Ok(Self { ambient, branches })
    }

    pub fn single(ambient: AmbientMetric, branch: NormalizedBranch) -> Result<Self> {
        Self::new(ambient, vec![branch])
    }

    pub fn ambient(&self) -> &AmbientMetric {
        &self.ambient
    }

    pub fn branches(&self) -> &[NormalizedBranch] {
        &self.branches
    }

    pub fn branch(&self, index: usize) -> &NormalizedBranch {
        &self.branches[index]
    }

    pub fn from_spec_str(text: &str) -> Result<Self> {
        let spec: SpecFile = serde_json::from_str(text)
            .map_err(|e| Error::Spec(format!("cannot parse curve spec: {e}")))?;
        spec.build()
    }

    pub fn from_spec_file(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path.as_ref())?;
        Self::from_spec_str(&text)
    }
}

/// A point on a multi-branch curve, addressed in chart coordinates.
/// `z = 0` is the shared origin; its branch index is canonicalized to 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint {
    pub branch: usize,
    pub z: Complex64,
}

impl CurvePoint {
    pub fn new(branch: usize, z: Complex64) -> Self {
        if z.norm() == 0.0 {
            Self {
                branch: 0,
                z: Complex64::new(0.0, 0.0),
            }
        } else {
            Self { branch, z }
        }
    }

    pub fn origin() -> Self {
        Self {
            branch: 0,
            z: Complex64::new(0.0, 0.0),
        }
    }

    pub fn is_origin(&self) -> bool {
        self.z.norm() == 0.0
    }

    /// Parses `"branch:re,im"`; the branch prefix defaults to 0.
    pub fn parse(text: &str) -> Result<Self> {
        let (branch, rest) = match text.split_once(':') {
            Some((b, r)) => (
                b.trim().parse::<usize>().map_err(|_| {
                    Error::Argument(format!("bad branch index in point '{text}'"))
                })?,
                r,
            ),
            None => (0, text),
        };
        let (re, im) = rest
            .split_once(',')
            .ok_or_else(|| Error::Argument(format!("point '{text}' must be 'branch:re,im'")))?;
        let re: f64 = re
            .trim()
            .parse()
            .map_err(|_| Error::Argument(format!("bad real part in point '{text}'")))?;
        let im: f64 = im
            .trim()
            .parse()
            .map_err(|_| Error::Argument(format!("bad imaginary part in point '{text}'")))?;
        Ok(Self::new(branch, Complex64::new(re, im)))
    }
}

impl std::fmt::Display for CurvePoint {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}:{},{}", self.branch, self.z.re, self.z.im)
    }
}

// ---------------------------------------------------------------------------
// Curve-spec file
//
// {
//   "ambient_dim": 2,
//   "hermitian": "identity" | [[[re,im], ...], ...],
//   "branches": [
//     { "m": 2, "psi": [ [[1,0]], [[0,0],[1,0]] ], "domain_radius": 1.0 }
//   ]
// }
//
// psi[j] lists the ascending coefficients of psi_{j+1} as [re, im] pairs.
// ---------------------------------------------------------------------------

#[derive(Deserialize)]
struct SpecFile {
    ambient_dim: usize,
    hermitian: HermitianSpec,
    branches: Vec<BranchSpec>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum HermitianSpec {
    Named(String),
    Matrix(Vec<Vec<[f64; 2]>>),
}

#[derive(Deserialize)]
struct BranchSpec {
    m: u32,
    psi: Vec<Vec<[f64; 2]>>,
    domain_radius: f64,
}

impl SpecFile {
    fn build(self) -> Result<MultiBranchCurve> {
        let ambient = match self.hermitian {
            HermitianSpec::Named(name) if name == "identity" => {
                AmbientMetric::identity(self.ambient_dim)
            }
            HermitianSpec::Named(name) => {
                return Err(Error::Spec(format!(
                    "unknown hermitian metric name '{name}' (expected \"identity\" or a matrix)"
                )))
            }
            HermitianSpec::Matrix(rows) => {
                if rows.len() != self.ambient_dim {
                    return Err(Error::Spec(format!(
                        "hermitian matrix is {}x? but ambient_dim = {}",
                        rows.len(),
                        self.ambient_dim
                    )));
                }
                let rows = rows
                    .into_iter()
                    .map(|r| r.into_iter().map(|[re, im]| Complex64::new(re, im)).collect())
                    .collect();
                AmbientMetric::from_rows(rows)?
            }
        };
        let mut branches = Vec::with_capacity(self.branches.len());
        for (i, b) in self.branches.into_iter().enumerate() {
            if b.psi.len() != self.ambient_dim {
                return Err(Error::Spec(format!(
                    "branch {} has {} psi coordinates but ambient_dim = {}",
                    i,
                    b.psi.len(),
                    self.ambient_dim
                )));
            }
            let psi = b
                .psi
                .into_iter()
                .map(|s| s.into_iter().map(|[re, im]| Complex64::new(re, im)).collect())
                .collect();
            branches.push(NormalizedBranch::new(b.m, psi, b.domain_radius)?);
        }
        MultiBranchCurve::new(ambient, branches)
    }
}

/// Convenience constructors for the standard test germs.
pub mod stock {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    /// The cusp `(z^2, z^3)`: m = 2, psi = (1, z).
    pub fn cusp() -> MultiBranchCurve {
        let branch = NormalizedBranch::new(
            2,
            vec![vec![c(1.0)], vec![c(0.0), c(1.0)]],
            1.0,
        )
        .expect("cusp is in normal form");
        MultiBranchCurve::single(AmbientMetric::identity(2), branch).expect("single branch")
    }

    /// A smooth line `(z, 0)`: m = 1, flat chart.
    pub fn line() -> MultiBranchCurve {
        let branch =
            NormalizedBranch::new(1, vec![vec![c(1.0)], vec![c(0.0)]], 1.0).expect("normal form");
        MultiBranchCurve::single(AmbientMetric::identity(2), branch).expect("single branch")
    }

    /// Two flat lines glued at the origin (a node, intrinsically a tripod
    /// once three points are involved).
    pub fn node() -> MultiBranchCurve {
        let mk = || {
            NormalizedBranch::new(1, vec![vec![c(1.0)], vec![c(0.0)]], 1.0).expect("normal form")
        };
        MultiBranchCurve::new(AmbientMetric::identity(2), vec![mk(), mk()]).expect("two branches")
    }

    /// The perturbed cusp psi = (1, z + 0.1 z^2).
    pub fn perturbed_cusp() -> MultiBranchCurve {
        let branch = NormalizedBranch::new(
            2,
            vec![vec![c(1.0)], vec![c(0.0), c(1.0), c(0.1)]],
            1.0,
        )
        .expect("normal form");
        MultiBranchCurve::single(AmbientMetric::identity(2), branch).expect("single branch")
    }

    /// The `y^2 = x^n` germ `(z^2, z^n)` for even exponent data: m = 2,
    /// psi = (1, z^{n-2}).
    pub fn y2_xn(n: u32) -> MultiBranchCurve {
        assert!(n >= 3);
        let mut second = vec![c(0.0); (n - 2) as usize];
        second.push(c(1.0));
        let branch =
            NormalizedBranch::new(2, vec![vec![c(1.0)], second], 1.0).expect("normal form");
        MultiBranchCurve::single(AmbientMetric::identity(2), branch).expect("single branch")
    }
}
