//! The pullback metric `lambda(z) |dz|^2` of a normalized branch.
//!
//! Writing `phi'(z) = z^{m-1} v(z)` with `v(z) = m psi(z) + z psi'(z)`
//! nonvanishing, the conformal factor splits as
//!
//! ```text
//! lambda(z) = |z|^{2(m-1)} Q(z),      Q(z) = <v(z), v(z)>_H,
//! ```
//!
//! where `Q` is a real-analytic bivariate polynomial in `(z, zbar)` with a
//! Hermitian coefficient table. All derivatives of `log lambda` needed for
//! curvature and for the geodesic equation are evaluated analytically from
//! that table; `log |z|^{2(m-1)}` is harmonic away from the origin, so the
//! Gaussian curvature only sees `Q`:
//!
//! ```text
//! K = -2 (Q Q_{z zbar} - |Q_z|^2) / (Q^2 lambda).
//! ```
//!
//! The independent extrinsic route computes the second fundamental form
//! norm from the H-orthogonal projection of `v'` and feeds the flat-ambient
//! Gauss equation `K = -2 |B|^2`.

use crate::curve::NormalizedBranch;
use crate::hermitian::AmbientMetric;
use crate::numeric::horner;
use crate::parallel::{self, Parallelism};
use crate::{Error, Result};
use num_complex::Complex64;

/// Evaluator for the conformal factor and its derived quantities.
/// Immutable after construction; all methods are pure.
#[derive(Debug, Clone)]
pub struct ConformalMetric {
    m: u32,
    domain_radius: f64,
    ambient: AmbientMetric,
    phi_coeffs: Vec<Vec<Complex64>>,
    phi_prime: Vec<Vec<Complex64>>,
    v_coeffs: Vec<Vec<Complex64>>,
    v_prime: Vec<Vec<Complex64>>,
    correction: Vec<Vec<Complex64>>,
    /// Hermitian table `q[a][b] = <V_a, V_b>_H` so that
    /// `Q(z) = sum q[a][b] z^a zbar^b`.
    q_table: Vec<Vec<Complex64>>,
}

/// A reproducible curvature supremum estimate over an annulus grid.
#[derive(Debug, Clone, Copy)]
pub struct CurvatureSup {
    pub value: f64,
    /// Grid point where the maximum was attained.
    pub at: Complex64,
    pub radial_samples: usize,
    pub angular_samples: usize,
    pub annulus: (f64, f64),
}

impl ConformalMetric {
    pub fn new(branch: &NormalizedBranch, ambient: &AmbientMetric) -> Result<Self> {
        if branch.ambient_dim() != ambient.dim() {
            return Err(Error::Argument(format!(
                "branch has {} coordinates, ambient metric has dimension {}",
                branch.ambient_dim(),
                ambient.dim()
            )));
        }
        let v_coeffs = branch.v_coeffs();
        let v_prime: Vec<Vec<Complex64>> = v_coeffs
            .iter()
            .map(|c| crate::numeric::poly_derivative(c))
            .collect();
        let deg = v_coeffs.iter().map(|c| c.len()).max().unwrap_or(1);
        let coeff_vec = |a: usize| -> Vec<Complex64> {
            v_coeffs
                .iter()
                .map(|c| c.get(a).copied().unwrap_or_default())
                .collect()
        };
        // entry [a][b] multiplies z^a zbar^b
        let mut q = vec![vec![Complex64::new(0.0, 0.0); deg]; deg];
        for (a, row) in q.iter_mut().enumerate() {
            let va = coeff_vec(a);
            for (b, entry) in row.iter_mut().enumerate() {
                let vb = coeff_vec(b);
                *entry = ambient.inner(&va, &vb);
            }
        }
        Ok(Self {
            m: branch.multiplicity(),
            domain_radius: branch.domain_radius(),
            ambient: ambient.clone(),
            phi_coeffs: branch.phi_coeffs(),
            phi_prime: branch.phi_prime_coeffs(),
            v_coeffs,
            v_prime,
            correction: branch.tangent_correction_coeffs(),
            q_table: q,
        })
    }

    pub fn multiplicity(&self) -> u32 {
        self.m
    }

    pub fn domain_radius(&self) -> f64 {
        self.domain_radius
    }

    pub fn ambient(&self) -> &AmbientMetric {
        &self.ambient
    }

    /// True when the chart origin is a genuine singular point (m > 1).
    pub fn is_singular_origin(&self) -> bool {
        self.m > 1
    }

    /// Order to which `lambda` vanishes at the origin.
    pub fn vanishing_order(&self) -> u32 {
        2 * (self.m - 1)
    }

    pub fn check_domain(&self, z: Complex64) -> Result<()> {
        if z.norm() > self.domain_radius * (1.0 + 1e-12) {
            return Err(Error::Domain(format!(
                "|z| = {} exceeds the domain radius {}",
                z.norm(),
                self.domain_radius
            )));
        }
        Ok(())
    }

    fn q_value(&self, z: Complex64) -> f64 {
        let zb = z.conj();
        let mut acc = Complex64::new(0.0, 0.0);
        for row in self.q_table.iter().rev() {
            acc = acc * z + horner(row, zb);
        }
        acc.re
    }

    /// `(Q, Q_z, Q_{z zbar})` at `z`; `Q_zbar = conj(Q_z)` since `Q` is real.
    fn q_derivs(&self, z: Complex64) -> (f64, Complex64, f64) {
        let zb = z.conj();
        let deg = self.q_table.len();
        let mut q = Complex64::new(0.0, 0.0);
        for a in (0..deg).rev() {
            q = q * z + horner(&self.q_table[a], zb);
        }
        let mut qz = Complex64::new(0.0, 0.0);
        for a in (1..deg).rev() {
            qz = qz * z + horner(&self.q_table[a], zb) * a as f64;
        }
        let mut qzzb = Complex64::new(0.0, 0.0);
        for a in (1..deg).rev() {
            let row = &self.q_table[a];
            let mut rb = Complex64::new(0.0, 0.0);
            for b in (1..row.len()).rev() {
                rb = rb * zb + row[b] * b as f64;
            }
            qzzb = qzzb * z + rb * a as f64;
        }
        (q.re, qz, qzzb.re)
    }

    /// The conformal factor `lambda(z) = |z|^{2(m-1)} Q(z)`. Returns exactly
    /// 0 at the origin of a singular branch (`lambda` vanishes to order
    /// `2(m-1)` there; query [`Self::is_singular_origin`] for the flag).
    pub fn conformal_factor(&self, z: Complex64) -> f64 {
        let r2 = z.norm_sqr();
        if r2 == 0.0 {
            return if self.m == 1 { self.q_value(z) } else { 0.0 };
        }
        r2.powi(self.m as i32 - 1) * self.q_value(z)
    }

    /// Direct evaluation `<phi'(z), phi'(z)>_H`, kept as an independent
    /// floating-point route for cross-checks.
    pub fn conformal_factor_direct(&self, z: Complex64) -> f64 {
        let w: Vec<Complex64> = self.phi_prime.iter().map(|c| horner(c, z)).collect();
        self.ambient.norm_sq(&w)
    }

    /// Factored evaluation `m^2 |z|^{2(m-1)} |e1 + z C(z)|_H^2` via the
    /// tangent correction series.
    pub fn conformal_factor_factored(&self, z: Complex64) -> f64 {
        let mut dir: Vec<Complex64> = self
            .correction
            .iter()
            .map(|c| z * horner(c, z))
            .collect();
        dir[0] += 1.0;
        let r2 = z.norm_sqr();
        (self.m as f64).powi(2) * r2.powi(self.m as i32 - 1) * self.ambient.norm_sq(&dir)
    }

    pub fn sqrt_factor(&self, z: Complex64) -> f64 {
        self.conformal_factor(z).max(0.0).sqrt()
    }

    /// `sqrt(Q(z))`, the nonvanishing factor in
    /// `sqrt(lambda) = |z|^{m-1} sqrt(Q)`.
    pub fn sqrt_q(&self, z: Complex64) -> f64 {
        self.q_value(z).max(0.0).sqrt()
    }

    /// `d/dz log lambda = (m-1)/z + Q_z/Q`, the coefficient in the chart
    /// geodesic equation `z'' + (dlog lambda)(z) (z')^2 = 0`.
    pub fn dlog_lambda(&self, z: Complex64) -> Complex64 {
        let (q, qz, _) = self.q_derivs(z);
        (self.m as f64 - 1.0) / z + qz / q
    }

    /// Gaussian curvature of `lambda |dz|^2` at a regular chart point.
    pub fn gaussian_curvature(&self, z: Complex64) -> Result<f64> {
        self.check_domain(z)?;
        if z.norm() == 0.0 {
            if self.m == 1 {
                let (q, qz, qzzb) = self.q_derivs(z);
                return Ok(-2.0 * (q * qzzb - qz.norm_sqr()) / (q * q * q));
            }
            return Err(Error::SingularPoint(
                "Gaussian curvature is undefined at the singular origin".into(),
            ));
        }
        let (q, qz, qzzb) = self.q_derivs(z);
        let lambda = self.conformal_factor(z);
        Ok(-2.0 * (q * qzzb - qz.norm_sqr()) / (q * q * lambda))
    }

    /// Norm of the second fundamental form at `phi(z)` for the constant
    /// ambient metric: `|B| = |(v')^perp|_H / (|z|^{m-1} |v|_H^2)`.
    pub fn second_form_norm(&self, z: Complex64) -> Result<f64> {
        self.check_domain(z)?;
        if z.norm() == 0.0 && self.m > 1 {
            return Err(Error::SingularPoint(
                "second fundamental form is undefined at the singular origin".into(),
            ));
        }
        let v: Vec<Complex64> = self.v_coeffs.iter().map(|c| horner(c, z)).collect();
        let vp: Vec<Complex64> = self.v_prime.iter().map(|c| horner(c, z)).collect();
        let perp = self.ambient.project_out(&vp, &v);
        let num = self.ambient.norm(&perp);
        let den = z.norm().powi(self.m as i32 - 1) * self.ambient.norm_sq(&v);
        Ok(num / den)
    }

    /// Ambient tangent `phi'(z) * dz` of a chart path.
    pub fn ambient_tangent(&self, z: Complex64, dz: Complex64) -> Vec<Complex64> {
        self.phi_prime.iter().map(|c| horner(c, z) * dz).collect()
    }

    /// Ambient position `phi(z)`.
    pub fn ambient_position(&self, z: Complex64) -> Vec<Complex64> {
        self.phi_coeffs.iter().map(|c| horner(c, z)).collect()
    }

    /// First ambient coordinate `phi_1(z) = z^m` (the branch is normalized).
    pub fn first_coordinate(&self, z: Complex64) -> Complex64 {
        z.powu(self.m)
    }

    /// Supremum of the Gaussian curvature over a log-radial x angular grid
    /// on the annulus `r_in < |z| < r_out`; this is the kappa fed to the
    /// comparison tests, reported with its grid for reproducibility.
    pub fn curvature_sup_estimate(
        &self,
        r_in: f64,
        r_out: f64,
        samples: usize,
        mode: Parallelism,
    ) -> Result<CurvatureSup> {
        if !(r_in > 0.0 && r_in < r_out && r_out <= self.domain_radius * (1.0 + 1e-12)) {
            return Err(Error::Argument(format!(
                "annulus ({r_in}, {r_out}) is not inside the chart"
            )));
        }
        if samples < 2 {
            return Err(Error::Argument("curvature grid needs samples >= 2".into()));
        }
        let log_in = r_in.ln();
        let log_out = r_out.ln();
        let rows = parallel::map_range(mode, samples, |i| {
            let r = (log_in + (log_out - log_in) * i as f64 / (samples as f64 - 1.0)).exp();
            let mut best = f64::NEG_INFINITY;
            let mut best_at = Complex64::new(r, 0.0);
            for j in 0..samples {
                let th = 2.0 * std::f64::consts::PI * j as f64 / samples as f64;
                let z = Complex64::from_polar(r, th);
                let k = self
                    .gaussian_curvature(z)
                    .expect("grid point is inside the punctured chart");
                if k > best {
                    best = k;
                    best_at = z;
                }
            }
            (best, best_at)
        });
        let (value, at) = rows
            .into_iter()
            .fold((f64::NEG_INFINITY, Complex64::new(0.0, 0.0)), |acc, row| {
                if row.0 > acc.0 {
                    row
                } else {
                    acc
                }
            });
        Ok(CurvatureSup {
            value,
            at,
            radial_samples: samples,
            angular_samples: samples,
            annulus: (r_in, r_out),
        })
    }
}
