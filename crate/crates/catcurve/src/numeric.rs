//! Shared numerical kit: complex polynomials, Gauss-Legendre rules,
//! Richardson extrapolation and angle bookkeeping.

use crate::{Error, Result};
use num_complex::Complex64;

/// Evaluates a polynomial with ascending coefficients by Horner's rule.
pub fn horner(coeffs: &[Complex64], z: Complex64) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for c in coeffs.iter().rev() {
        acc = acc * z + c;
    }
    acc
}

/// Coefficients of the derivative of an ascending-coefficient polynomial.
pub fn poly_derivative(coeffs: &[Complex64]) -> Vec<Complex64> {
    if coeffs.len() <= 1 {
        return vec![Complex64::new(0.0, 0.0)];
    }
    coeffs
        .iter()
        .enumerate()
        .skip(1)
        .map(|(k, c)| c * k as f64)
        .collect()
}

/// Gauss-Legendre quadrature rule mapped to [0, 1].
#[derive(Debug, Clone)]
pub struct Quadrature {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Quadrature {
    /// Builds the `order`-point rule. Nodes are Newton-refined roots of the
    /// Legendre polynomial, accurate to machine precision.
    pub fn gauss_legendre(order: usize) -> Result<Self> {
        if order < 2 {
            return Err(Error::Argument(format!(
                "quadrature order must be at least 2, got {order}"
            )));
        }
        let n = order;
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        for i in 0..n {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-15 {
                    break;
                }
            }
            nodes[i] = 0.5 * (1.0 - x); // descending roots -> ascending on [0,1]
            weights[i] = 1.0 / ((1.0 - x * x) * dp * dp);
        }
        Ok(Self { nodes, weights })
    }

    /// Integrates `f` over [0, 1].
    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// Result of a Richardson extrapolation: the extrapolated value and the
/// magnitude of the last tableau correction, used as a stability estimate.
#[derive(Debug, Clone, Copy)]
pub struct Extrapolated {
    pub value: f64,
    pub spread: f64,
}

/// Richardson-extrapolates samples `values[k] = f(t0 / ratio^k)` assuming an
/// error expansion with the given exponent ladder (`orders[j]` is eliminated
/// at tableau level `j + 1`).
pub fn richardson(values: &[f64], ratio: f64, orders: &[f64]) -> Result<Extrapolated> {
    if values.len() < 2 {
        return Err(Error::Argument(
            "richardson extrapolation needs at least two samples".into(),
        ));
    }
    if ratio <= 1.0 {
        return Err(Error::Argument("richardson ratio must exceed 1".into()));
    }
    let mut col = values.to_vec();
    let mut last = *col.last().expect("nonempty");
    let levels = orders.len().min(values.len() - 1);
    let mut spread = f64::INFINITY;
    for (j, &p) in orders.iter().enumerate().take(levels) {
        let factor = ratio.powf(p);
        let mut next = Vec::with_capacity(col.len() - 1);
        for i in 0..col.len() - 1 {
            next.push((factor * col[i + 1] - col[i]) / (factor - 1.0));
        }
        col = next;
        let new_last = *col.last().expect("nonempty");
        spread = (new_last - last).abs();
        last = new_last;
        if j + 2 > levels && col.len() == 1 {
            break;
        }
    }
    Ok(Extrapolated {
        value: last,
        spread,
    })
}

/// Unoriented angle in [0, pi] between two nonzero complex directions.
pub fn angle_between(a: Complex64, b: Complex64) -> f64 {
    (a * b.conj()).arg().abs()
}

/// Continuous unwrap of a sequence of angles (radians): consecutive jumps are
/// reduced modulo 2 pi to the representative in (-pi, pi].
pub fn unwrap_angles(angles: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(angles.len());
    let mut offset = 0.0;
    for (i, &a) in angles.iter().enumerate() {
        if i == 0 {
            out.push(a);
            continue;
        }
        let prev: f64 = out[i - 1];
        let mut delta = a + offset - prev;
        while delta > std::f64::consts::PI {
            offset -= 2.0 * std::f64::consts::PI;
            delta -= 2.0 * std::f64::consts::PI;
        }
        while delta <= -std::f64::consts::PI {
            offset += 2.0 * std::f64::consts::PI;
            delta += 2.0 * std::f64::consts::PI;
        }
        out.push(prev + delta);
    }
    out
}

/// Fixed scientific formatting with nine significant digits, used for all
/// reproducible text output.
pub fn fmt_sci(x: f64) -> String {
    format!("{x:.8e}")
}
