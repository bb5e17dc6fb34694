//! Singular basis functions around a boundary singularity and the rows that
//! couple their coefficients to the BEM unknowns on the interface arc.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{BcPair, BoundaryMesh, Point, SingularitySpec};
use crate::quadrature::QuadratureRule;

/// Angular factor of the singular functions.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Trig {
    Cosine,
    Sine,
}

/// The first `n` singular powers of a corner with opening angle `theta`.
pub fn powers(pair: BcPair, theta: f64, n: usize) -> Result<Vec<f64>> {
    if !(theta > 0.0 && theta <= 2.0 * PI + 1e-12) {
        return Err(Error::InvalidParameter(format!(
            "opening angle must lie in (0, 2pi], got {theta}"
        )));
    }
    Ok((1..=n)
        .map(|l| {
            let l = l as f64;
            match pair {
                BcPair::NeumannDirichlet => (2.0 * l - 1.0) * PI / (2.0 * theta),
                BcPair::DirichletDirichlet => l * PI / theta,
                BcPair::NeumannNeumann => (l - 1.0) * PI / theta,
            }
        })
        .collect())
}

pub fn trig_kind(pair: BcPair) -> Trig {
    match pair {
        BcPair::NeumannDirichlet | BcPair::NeumannNeumann => Trig::Cosine,
        BcPair::DirichletDirichlet => Trig::Sine,
    }
}

/// `W_l = r^mu_l cos(mu_l theta)` (or `sin`) in polar coordinates about the
/// singular point. Term indices are zero-based throughout.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SingularBasis {
    pub bc_pair: BcPair,
    pub opening_angle: f64,
    pub powers: Vec<f64>,
    pub trig: Trig,
    pub origin: Point,
    pub theta_zero_direction: Point,
    pub radius: f64,
}

/// Solved coefficients of one expansion.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoefficientVector {
    pub expansion: usize,
    pub values: Vec<f64>,
}

impl SingularBasis {
    pub fn new(spec: &SingularitySpec, n_alpha: usize) -> Result<Self> {
        if n_alpha == 0 {
            return Err(Error::InvalidParameter(
                "an expansion needs at least one term".into(),
            ));
        }
        Ok(SingularBasis {
            bc_pair: spec.bc_pair,
            opening_angle: spec.opening_angle,
            powers: powers(spec.bc_pair, spec.opening_angle, n_alpha)?,
            trig: trig_kind(spec.bc_pair),
            origin: spec.origin,
            theta_zero_direction: spec.theta_zero_direction.normalized(),
            radius: spec.radius,
        })
    }

    pub fn len(&self) -> usize {
        self.powers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.powers.is_empty()
    }

    /// `(r, theta)` with `theta` counterclockwise from the zero direction.
    /// The branch cut runs through the middle of the excluded sector.
    pub fn local_polar(&self, p: Point) -> (f64, f64) {
        let v = p - self.origin;
        let t = self.theta_zero_direction;
        let x = v.dot(t);
        let y = t.cross(v);
        let raw = y.atan2(x);
        let half = 0.5 * self.opening_angle;
        let mut shifted = raw - half;
        if shifted <= -PI {
            shifted += 2.0 * PI;
        } else if shifted > PI {
            shifted -= 2.0 * PI;
        }
        (v.norm(), half + shifted)
    }

    fn term(&self, l: usize) -> f64 {
        self.powers[l]
    }

    pub fn eval_w(&self, l: usize, p: Point) -> f64 {
        let mu = self.term(l);
        let (r, theta) = self.local_polar(p);
        let radial = if mu == 0.0 { 1.0 } else { r.powf(mu) };
        match self.trig {
            Trig::Cosine => radial * (mu * theta).cos(),
            Trig::Sine => radial * (mu * theta).sin(),
        }
    }

    /// Cartesian gradient of `W_l`.
    pub fn gradient(&self, l: usize, p: Point) -> Result<Point> {
        let mu = self.term(l);
        if mu == 0.0 {
            return Ok(Point::new(0.0, 0.0));
        }
        let v = p - self.origin;
        let r = v.norm();
        if r == 0.0 {
            if mu < 1.0 {
                return Err(Error::EvalAtSingularOrigin { l: l + 1 });
            }
            if mu == 1.0 {
                let t = self.theta_zero_direction;
                return Ok(match self.trig {
                    Trig::Cosine => t,
                    Trig::Sine => Point::new(-t.y, t.x),
                });
            }
            return Ok(Point::new(0.0, 0.0));
        }
        let (_, theta) = self.local_polar(p);
        let scale = mu * r.powf(mu - 1.0);
        let (c, s) = ((mu * theta).cos(), (mu * theta).sin());
        // (dW/dr, (1/r) dW/dtheta)
        let (radial, angular) = match self.trig {
            Trig::Cosine => (scale * c, -scale * s),
            Trig::Sine => (scale * s, scale * c),
        };
        let e_r = v * (1.0 / r);
        let e_theta = Point::new(-e_r.y, e_r.x);
        Ok(e_r * radial + e_theta * angular)
    }

    pub fn eval_dw_dn(&self, l: usize, p: Point, normal: Point) -> Result<f64> {
        self.gradient(l, p).map(|g| g.dot(normal))
    }

    /// `sum_l alpha_l W_l(p)`.
    pub fn sum(&self, alpha: &[f64], p: Point) -> f64 {
        alpha
            .iter()
            .enumerate()
            .map(|(l, a)| a * self.eval_w(l, p))
            .sum()
    }

    /// `int_0^R dW_l/dn dr` along the straight leg leaving the origin towards
    /// `towards`, with `n` pointing into the sector. Summed against the
    /// coefficients this is the flux entering through the leg inside the disc.
    pub fn leg_flux_weights(&self, towards: Point) -> Vec<f64> {
        let (_, theta) = self.local_polar(towards);
        let at_zero = theta.abs() < (theta - self.opening_angle).abs();
        self.powers
            .iter()
            .map(|&mu| {
                if mu == 0.0 {
                    return 0.0;
                }
                // (1/r) dW/dtheta = mu r^(mu-1) T'(mu theta); the inward
                // normal is +e_theta at theta = 0 and -e_theta at the opening.
                let (angle, sign) = if at_zero { (0.0, 1.0) } else { (self.opening_angle, -1.0) };
                let derivative = match self.trig {
                    Trig::Cosine => -(mu * angle).sin(),
                    Trig::Sine => (mu * angle).cos(),
                };
                sign * derivative * self.radius.powf(mu)
            })
            .collect()
    }
}

/// Interface nodes and elements of arc piece `piece`.
fn arc_nodes(mesh: &BoundaryMesh, piece: usize) -> std::ops::Range<usize> {
    mesh.pieces[piece].nodes.clone()
}

/// Flux constraints of one expansion: row `k` holds `int phi_j W_k` on the
/// arc `q` unknowns and `-int W_l dW_k/dn` on the coefficients. The normal
/// is the BEM outward chord normal (pointing into the singular subdomain).
#[derive(Clone, Debug, PartialEq)]
pub struct FluxRows {
    /// Global node ids of the arc, in mesh order.
    pub nodes: Vec<usize>,
    /// `q[k][j]` over `nodes`.
    pub q: Vec<Vec<f64>>,
    /// `alpha[k][l]`.
    pub alpha: Vec<Vec<f64>>,
}

impl FluxRows {
    pub fn residual(&self, q: &[f64], alpha: &[f64]) -> Vec<f64> {
        self.q
            .iter()
            .zip(&self.alpha)
            .map(|(qr, ar)| {
                qr.iter().zip(q).map(|(a, b)| a * b).sum::<f64>()
                    + ar.iter().zip(alpha).map(|(a, b)| a * b).sum::<f64>()
            })
            .collect()
    }
}

pub fn flux_constraint_rows(
    mesh: &BoundaryMesh,
    piece: usize,
    basis: &SingularBasis,
    rule: &QuadratureRule,
) -> Result<FluxRows> {
    let nodes = arc_nodes(mesh, piece);
    let n_alpha = basis.len();
    let mut q = vec![vec![0.0; nodes.len()]; n_alpha];
    let mut alpha = vec![vec![0.0; n_alpha]; n_alpha];
    let mut w = vec![0.0; n_alpha];
    let mut dw = vec![0.0; n_alpha];
    for e in &mesh.elements[mesh.pieces[piece].elements.clone()] {
        for (t, weight) in rule.unit_points() {
            let x = e.point_at(t);
            let s = e.shape_values(t);
            let jw = weight * e.length;
            for l in 0..n_alpha {
                w[l] = basis.eval_w(l, x);
                dw[l] = basis.eval_dw_dn(l, x, e.normal)?;
            }
            for k in 0..n_alpha {
                for (a, &node) in e.node_ids().iter().enumerate() {
                    q[k][node - nodes.start] += jw * s[a] * w[k];
                }
                for l in 0..n_alpha {
                    alpha[k][l] -= jw * w[l] * dw[k];
                }
            }
        }
    }
    Ok(FluxRows {
        nodes: nodes.collect(),
        q,
        alpha,
    })
}

/// Matching constraints on one arc: row `i` holds `int phi_j phi_i` on the
/// arc `u` unknowns and `-int W_l phi_i` on the coefficients.
#[derive(Clone, Debug, PartialEq)]
pub struct MatchingRows {
    pub nodes: Vec<usize>,
    pub u: Vec<Vec<f64>>,
    pub alpha: Vec<Vec<f64>>,
}

impl MatchingRows {
    pub fn residual(&self, u: &[f64], alpha: &[f64]) -> Vec<f64> {
        self.u
            .iter()
            .zip(&self.alpha)
            .map(|(ur, ar)| {
                ur.iter().zip(u).map(|(a, b)| a * b).sum::<f64>()
                    + ar.iter().zip(alpha).map(|(a, b)| a * b).sum::<f64>()
            })
            .collect()
    }
}

pub fn matching_constraint_rows(
    mesh: &BoundaryMesh,
    piece: usize,
    basis: &SingularBasis,
    rule: &QuadratureRule,
) -> MatchingRows {
    let nodes = arc_nodes(mesh, piece);
    let n = nodes.len();
    let n_alpha = basis.len();
    let mut u = vec![vec![0.0; n]; n];
    let mut alpha = vec![vec![0.0; n_alpha]; n];
    for e in &mesh.elements[mesh.pieces[piece].elements.clone()] {
        let ids = e.node_ids();
        for (t, weight) in rule.unit_points() {
            let x = e.point_at(t);
            let s = e.shape_values(t);
            let jw = weight * e.length;
            for (a, &row) in ids.iter().enumerate() {
                let i = row - nodes.start;
                for (b, &col) in ids.iter().enumerate() {
                    u[i][col - nodes.start] += jw * s[a] * s[b];
                }
                for l in 0..n_alpha {
                    alpha[i][l] -= jw * s[a] * basis.eval_w(l, x);
                }
            }
        }
    }
    MatchingRows {
        nodes: nodes.collect(),
        u,
        alpha,
    }
}
