//! Free-space Green's function of the 2-D Laplacian and the line integrals
//! over straight boundary elements built from it.
//!
//! Integrands are written as `f(t, x)` where `t` in `[0, 1]` is the local
//! coordinate along the element and `x` the corresponding physical point.

use std::f64::consts::PI;

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Element, Point};

const INV_2PI: f64 = 0.5 / PI;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum RuleKind {
    /// Points and weights on `[-1, 1]`, unit weight function.
    GaussLegendre(usize),
    /// Points and weights on `[0, 1]` for the weight function `-ln t`.
    LogWeighted(usize),
}

#[derive(Clone, Debug, PartialEq)]
pub struct QuadratureRule {
    pub kind: RuleKind,
    pub points: Vec<f64>,
    pub weights: Vec<f64>,
}

impl QuadratureRule {
    pub fn gauss_legendre(n: usize) -> Self {
        assert!(n >= 1, "a quadrature rule needs at least one point");
        let mut points = vec![0.0; n];
        let mut weights = vec![0.0; n];
        for i in 0..n {
            let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 1.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(n, x);
            if d.is_finite() {
                dp = d;
            }
            points[n - 1 - i] = x;
            weights[n - 1 - i] = 2.0 / ((1.0 - x * x) * dp * dp);
        }
        QuadratureRule {
            kind: RuleKind::GaussLegendre(n),
            points,
            weights,
        }
    }

    /// Gauss rule for `int_0^1 f(t) (-ln t) dt`, built from modified moments
    /// against monic shifted Legendre polynomials (well conditioned) and the
    /// Golub-Welsch eigenvalue problem.
    pub fn log_weighted(n: usize) -> Self {
        assert!(n >= 1, "a quadrature rule needs at least one point");
        let m = 2 * n;
        // monic shifted Legendre recurrence p_{k+1} = (t - a_k) p_k - b_k p_{k-1}
        let a = vec![0.5; m];
        let b: Vec<f64> = (0..m)
            .map(|k| {
                if k == 0 {
                    1.0
                } else {
                    let k2 = (k * k) as f64;
                    k2 / (4.0 * (4.0 * k2 - 1.0))
                }
            })
            .collect();
        // int_0^1 p_k(t) (-ln t) dt = (-1)^k (k!)^2 / ((2k)! k (k+1))
        let mut moments = vec![0.0; m];
        moments[0] = 1.0;
        let mut c = 1.0;
        for k in 1..m {
            let kf = k as f64;
            c *= kf * kf / ((2.0 * kf) * (2.0 * kf - 1.0));
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            moments[k] = sign * c / (kf * (kf + 1.0));
        }
        let (alpha, beta) = modified_chebyshev(&moments, &a, &b, n);

        let mut jacobi = DMatrix::<f64>::zeros(n, n);
        for k in 0..n {
            jacobi[(k, k)] = alpha[k];
            if k + 1 < n {
                let off = beta[k + 1].sqrt();
                jacobi[(k, k + 1)] = off;
                jacobi[(k + 1, k)] = off;
            }
        }
        let eig = SymmetricEigen::new(jacobi);
        let mut pairs: Vec<(f64, f64)> = (0..n)
            .map(|k| {
                let v0 = eig.eigenvectors[(0, k)];
                (eig.eigenvalues[k], beta[0] * v0 * v0)
            })
            .collect();
        pairs.sort_by(|x, y| x.0.total_cmp(&y.0));
        QuadratureRule {
            kind: RuleKind::LogWeighted(n),
            points: pairs.iter().map(|p| p.0).collect(),
            weights: pairs.iter().map(|p| p.1).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Applies the rule to `f` on the unit interval `[0, 1]`: the plain
    /// integral for Gauss-Legendre, the `-ln t` weighted one otherwise.
    pub fn integrate_unit(&self, f: impl Fn(f64) -> f64) -> f64 {
        match self.kind {
            RuleKind::GaussLegendre(_) => {
                0.5 * self
                    .points
                    .iter()
                    .zip(&self.weights)
                    .map(|(&x, &w)| w * f(0.5 * (x + 1.0)))
                    .sum::<f64>()
            }
            RuleKind::LogWeighted(_) => self
                .points
                .iter()
                .zip(&self.weights)
                .map(|(&x, &w)| w * f(x))
                .sum(),
        }
    }

    /// Abscissae mapped to `[0, 1]` with matching weights.
    pub fn unit_points(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        let gl = matches!(self.kind, RuleKind::GaussLegendre(_));
        self.points.iter().zip(&self.weights).map(move |(&x, &w)| {
            if gl {
                (0.5 * (x + 1.0), 0.5 * w)
            } else {
                (x, w)
            }
        })
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let (p, pm1) = if n == 0 { (1.0, 0.0) } else { (p1, p0) };
    let d = n as f64 * (x * p - pm1) / (x * x - 1.0);
    (p, d)
}

/// Recurrence coefficients of the orthogonal polynomials of a measure given
/// its modified moments against polynomials with recurrence `(a, b)`.
fn modified_chebyshev(moments: &[f64], a: &[f64], b: &[f64], n: usize) -> (Vec<f64>, Vec<f64>) {
    let m = 2 * n;
    let mut alpha = vec![0.0; n];
    let mut beta = vec![0.0; n];
    alpha[0] = a[0] + moments[1] / moments[0];
    beta[0] = moments[0];
    let mut sig_prev2 = vec![0.0; m];
    let mut sig_prev = moments.to_vec();
    for k in 1..n {
        let mut sig = vec![0.0; m];
        for l in k..(m - k) {
            sig[l] = sig_prev[l + 1] - (alpha[k - 1] - a[l]) * sig_prev[l]
                - beta[k - 1] * sig_prev2[l]
                + b[l] * sig_prev[l - 1];
        }
        alpha[k] = a[k] + sig[k + 1] / sig[k] - sig_prev[k] / sig_prev[k - 1];
        beta[k] = sig[k] / sig_prev[k - 1];
        sig_prev2 = sig_prev;
        sig_prev = sig;
    }
    (alpha, beta)
}

/// `G = ln(1/r) / (2 pi)`.
pub fn green(field: Point, source: Point) -> Result<f64> {
    let r2 = (field - source).norm_squared();
    if r2 == 0.0 {
        return Err(Error::CoincidentPoints);
    }
    Ok(green_unchecked(field, source))
}

/// Normal derivative of [`green`] with respect to the field point:
/// `-(r . n) / (2 pi |r|^2)` with `r = field - source`.
pub fn green_dn(field: Point, source: Point, normal: Point) -> Result<f64> {
    let r2 = (field - source).norm_squared();
    if r2 == 0.0 {
        return Err(Error::CoincidentPoints);
    }
    Ok(green_dn_unchecked(field, source, normal))
}

#[inline]
pub(crate) fn green_unchecked(field: Point, source: Point) -> f64 {
    -0.5 * INV_2PI * (field - source).norm_squared().ln()
}

#[inline]
pub(crate) fn green_dn_unchecked(field: Point, source: Point, normal: Point) -> f64 {
    let r = field - source;
    -INV_2PI * r.dot(normal) / r.norm_squared()
}

/// Quadrature settings shared by every element integral.
#[derive(Clone, Debug)]
pub struct QuadratureOptions {
    pub regular: QuadratureRule,
    pub log: QuadratureRule,
    /// Field points closer than this many element lengths use adaptive
    /// subdivision.
    pub near_factor: f64,
    pub relative_tolerance: f64,
    pub max_levels: usize,
}

impl QuadratureOptions {
    pub fn with_order(order: usize) -> Self {
        QuadratureOptions {
            regular: QuadratureRule::gauss_legendre(order),
            log: QuadratureRule::log_weighted(order),
            near_factor: 2.0,
            relative_tolerance: 1e-10,
            max_levels: 30,
        }
    }
}

impl Default for QuadratureOptions {
    fn default() -> Self {
        QuadratureOptions::with_order(8)
    }
}

#[inline]
fn gauss_on<const K: usize>(
    e: &Element,
    t0: f64,
    t1: f64,
    f: &impl Fn(f64, Point) -> [f64; K],
    rule: &QuadratureRule,
) -> ([f64; K], [f64; K]) {
    let half = 0.5 * (t1 - t0);
    let scale = half * e.length;
    let mut sum = [0.0; K];
    let mut abs = [0.0; K];
    for (&x, &w) in rule.points.iter().zip(&rule.weights) {
        let t = t0 + half * (x + 1.0);
        let v = f(t, e.point_at(t));
        for k in 0..K {
            sum[k] += w * v[k];
            abs[k] += w * v[k].abs();
        }
    }
    for k in 0..K {
        sum[k] *= scale;
        abs[k] *= scale;
    }
    (sum, abs)
}

/// Gauss-Legendre approximation of `int_e f dGamma`.
pub fn integrate_regular(
    element: &Element,
    integrand: impl Fn(f64, Point) -> f64,
    rule: &QuadratureRule,
) -> f64 {
    gauss_on(element, 0.0, 1.0, &|t, x| [integrand(t, x)], rule).0[0]
}

pub(crate) fn integrate_regular_vec<const K: usize>(
    element: &Element,
    integrand: impl Fn(f64, Point) -> [f64; K],
    rule: &QuadratureRule,
) -> [f64; K] {
    gauss_on(element, 0.0, 1.0, &integrand, rule).0
}

/// Line integral of a kernel that is nearly singular because `field` lies
/// close to (but not on) the element. The element is bisected recursively
/// until two successive estimates agree to the relative tolerance; field
/// points farther than `near_factor` element lengths use the plain rule.
pub fn integrate_near_singular(
    element: &Element,
    integrand: impl Fn(f64, Point) -> f64,
    field: Point,
    opts: &QuadratureOptions,
) -> Result<f64> {
    integrate_near_singular_vec(element, |t, x| [integrand(t, x)], field, opts).map(|v| v[0])
}

pub(crate) fn integrate_near_singular_vec<const K: usize>(
    element: &Element,
    integrand: impl Fn(f64, Point) -> [f64; K],
    field: Point,
    opts: &QuadratureOptions,
) -> Result<[f64; K]> {
    if element.distance_to(field) >= opts.near_factor * element.length {
        return Ok(integrate_regular_vec(element, integrand, &opts.regular));
    }
    integrate_adaptive(element, &integrand, opts)
}

pub(crate) fn integrate_adaptive<const K: usize>(
    element: &Element,
    integrand: &impl Fn(f64, Point) -> [f64; K],
    opts: &QuadratureOptions,
) -> Result<[f64; K]> {
    // magnitude scale from a four-panel pass
    let mut scale = [0.0; K];
    let mut whole = [0.0; K];
    for p in 0..4 {
        let (s, a) = gauss_on(element, p as f64 * 0.25, (p + 1) as f64 * 0.25, integrand, &opts.regular);
        for k in 0..K {
            scale[k] += a[k];
            whole[k] += s[k];
        }
    }
    let floor = 1e-15 * element.length.max(1e-300);
    let mut tol = [0.0; K];
    for k in 0..K {
        tol[k] = (opts.relative_tolerance * scale[k].max(whole[k].abs())).max(floor);
    }
    let mut total = [0.0; K];
    for p in 0..4 {
        let (t0, t1) = (p as f64 * 0.25, (p + 1) as f64 * 0.25);
        let (est, _) = gauss_on(element, t0, t1, integrand, &opts.regular);
        let part = bisect(element, t0, t1, est, integrand, opts, &tol, 1)?;
        for k in 0..K {
            total[k] += part[k];
        }
    }
    Ok(total)
}

#[allow(clippy::too_many_arguments)]
fn bisect<const K: usize>(
    e: &Element,
    t0: f64,
    t1: f64,
    whole: [f64; K],
    f: &impl Fn(f64, Point) -> [f64; K],
    opts: &QuadratureOptions,
    tol: &[f64; K],
    level: usize,
) -> Result<[f64; K]> {
    let mid = 0.5 * (t0 + t1);
    let (left, _) = gauss_on(e, t0, mid, f, &opts.regular);
    let (right, _) = gauss_on(e, mid, t1, f, &opts.regular);
    let mut sum = [0.0; K];
    let mut converged = true;
    for k in 0..K {
        sum[k] = left[k] + right[k];
        if !((sum[k] - whole[k]).abs() <= tol[k]) {
            converged = false;
        }
    }
    if converged {
        return Ok(sum);
    }
    if level >= opts.max_levels {
        return Err(Error::NoConvergence { levels: level });
    }
    let a = bisect(e, t0, mid, left, f, opts, tol, level + 1)?;
    let b = bisect(e, mid, t1, right, f, opts, tol, level + 1)?;
    let mut out = [0.0; K];
    for k in 0..K {
        out[k] = a[k] + b[k];
    }
    Ok(out)
}

/// `int_e phi G dGamma` for a collocation point lying on the element at local
/// coordinate `t0`. The logarithmic singularity is split off on each side of
/// the point and integrated with the `-ln t` weighted rule.
pub fn integrate_g_self(
    element: &Element,
    basis: impl Fn(f64) -> f64,
    t0: f64,
    opts: &QuadratureOptions,
) -> f64 {
    integrate_g_self_vec(element, |t| [basis(t)], t0, opts)[0]
}

pub(crate) fn integrate_g_self_vec<const K: usize>(
    element: &Element,
    basis: impl Fn(f64) -> [f64; K],
    t0: f64,
    opts: &QuadratureOptions,
) -> [f64; K] {
    let len = element.length;
    let mut out = [0.0; K];
    // (distance to the element end, direction in t)
    for (d, sign) in [(t0 * len, -1.0), ((1.0 - t0) * len, 1.0)] {
        if d <= 0.0 {
            continue;
        }
        let at = |u: f64| basis(t0 + sign * u * d / len);
        let ln_d = d.ln();
        let mut plain = [0.0; K];
        for (u, w) in opts.regular.unit_points() {
            let v = at(u);
            for k in 0..K {
                plain[k] += w * v[k];
            }
        }
        let mut weighted = [0.0; K];
        for (u, w) in opts.log.unit_points() {
            let v = at(u);
            for k in 0..K {
                weighted[k] += w * v[k];
            }
        }
        for k in 0..K {
            out[k] += d * INV_2PI * (weighted[k] - ln_d * plain[k]);
        }
    }
    out
}

/// Closed form of `int_e G dGamma` for a constant element of length `len`
/// collocated at its midpoint.
pub fn g_self_constant(len: f64) -> f64 {
    len * INV_2PI * (1.0 - (0.5 * len).ln())
}
