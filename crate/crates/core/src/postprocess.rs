//! Capacitance (total flux through a Dirichlet boundary) from singular
//! coefficients and from nodal fluxes, plus error measures.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::BoundaryMesh;

/// Ten leading singular coefficients of the Motz problem.
pub const MOTZ_EXACT_ALPHA: [f64; 10] = [
    401.162, 87.6559, 17.2379, -8.07121, 1.44027, 0.331054, 0.275437, -0.0869329, 0.0336048,
    0.0153843,
];

/// Capacitance of the Motz Dirichlet side, as published.
pub const MOTZ_REFERENCE_CAPACITANCE: f64 = 340.30;

/// Flux weight of the `l`-th Motz coefficient (`l >= 1`) through the
/// Dirichlet leg of a disc of radius `r`: `(-1)^(l+1) r^((2l-1)/2)`.
pub fn k_weight(l: usize, r: f64) -> f64 {
    debug_assert!(l >= 1);
    let sign = if l % 2 == 1 { 1.0 } else { -1.0 };
    sign * r.powf((2 * l - 1) as f64 / 2.0)
}

pub fn capacitance_from_alpha(alpha: &[f64], r: f64) -> f64 {
    alpha
        .iter()
        .enumerate()
        .map(|(l, a)| a * k_weight(l + 1, r))
        .sum()
}

/// Flux through the Dirichlet leg of radius `r` carried by the ten exact
/// coefficients.
pub fn motz_exact_capacitance(r: f64) -> f64 {
    capacitance_from_alpha(&MOTZ_EXACT_ALPHA, r)
}

/// Trapezoid rule over nodal values at increasing arclengths `s`.
pub fn capacitance_trapezoid(s: &[f64], q: &[f64]) -> Result<f64> {
    if s.len() != q.len() {
        return Err(Error::InvalidParameter(format!(
            "{} positions for {} values",
            s.len(),
            q.len()
        )));
    }
    if s.len() < 2 {
        return Err(Error::FewerThanTwoNodes(s.len()));
    }
    Ok(s.windows(2)
        .zip(q.windows(2))
        .map(|(s, q)| 0.5 * (q[0] + q[1]) * (s[1] - s[0]))
        .sum())
}

/// Midpoint sum for element-wise constant values.
pub fn capacitance_midpoint(lengths: &[f64], q: &[f64]) -> f64 {
    lengths.iter().zip(q).map(|(l, q)| l * q).sum()
}

/// `int q dGamma` over one mesh piece, integrating the element-wise
/// representation of the nodal values exactly. For linear elements this is
/// the trapezoid rule between nodes, extended linearly over the retracted
/// quarter elements at the piece ends.
pub fn piece_flux(mesh: &BoundaryMesh, q: &[f64], piece: usize) -> f64 {
    mesh.elements[mesh.pieces[piece].elements.clone()]
        .iter()
        .map(|e| {
            let ids = e.node_ids();
            if ids.len() == 1 {
                q[ids[0]] * e.length
            } else {
                let mid = e.shape_values(0.5);
                (mid[0] * q[ids[0]] + mid[1] * q[ids[1]]) * e.length
            }
        })
        .sum()
}

/// `|C_ex - C| / C_ex * 100`.
pub fn relative_error(c: f64, c_ex: f64) -> Result<f64> {
    if c_ex == 0.0 {
        return Err(Error::ZeroReference);
    }
    Ok(((c_ex - c) / c_ex).abs() * 100.0)
}

/// Exponents `mu_l - 1` of the flux along the Dirichlet leg of a Motz-type
/// singularity.
pub const MOTZ_FLUX_EXPONENTS: [f64; 3] = [-0.5, 0.5, 1.5];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    /// Fraction of the segment length dropped at each end.
    pub exclusion: f64,
    pub exponents: Vec<f64>,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            exclusion: 0.1,
            exponents: MOTZ_FLUX_EXPONENTS.to_vec(),
        }
    }
}

/// Integral over `[s_min, s_max]` of the least-squares fit
/// `q(s) = sum_m c_m s^p_m`, with `s` the distance from the singular point.
/// Samples within `exclusion * (s_max - s_min)` of either end are ignored.
pub fn corrected_capacitance(
    s: &[f64],
    q: &[f64],
    s_min: f64,
    s_max: f64,
    options: &FitOptions,
) -> Result<f64> {
    if !(0.0..0.5).contains(&options.exclusion) {
        return Err(Error::InvalidParameter(format!(
            "exclusion fraction must lie in [0, 0.5), got {}",
            options.exclusion
        )));
    }
    if s.len() != q.len() {
        return Err(Error::InvalidParameter(format!(
            "{} positions for {} values",
            s.len(),
            q.len()
        )));
    }
    if options.exponents.iter().any(|&p| p <= -1.0) {
        return Err(Error::InvalidParameter("fit exponents must exceed -1".into()));
    }
    let margin = options.exclusion * (s_max - s_min);
    let kept: Vec<(f64, f64)> = s
        .iter()
        .zip(q)
        .filter(|(&s, _)| s >= s_min + margin && s <= s_max - margin)
        .map(|(&s, &q)| (s, q))
        .collect();
    let terms = options.exponents.len();
    if kept.len() < terms + 1 {
        return Err(Error::InsufficientPoints {
            needed: terms + 1,
            available: kept.len(),
        });
    }
    let a = DMatrix::from_fn(kept.len(), terms, |i, m| kept[i].0.powf(options.exponents[m]));
    let b = DVector::from_iterator(kept.len(), kept.iter().map(|&(_, q)| q));
    let c = a
        .svd(true, true)
        .solve(&b, 1e-14)
        .map_err(|e| Error::InvalidParameter(e.to_string()))?;
    Ok(options
        .exponents
        .iter()
        .zip(c.iter())
        .map(|(&p, c)| c * (s_max.powf(p + 1.0) - s_min.powf(p + 1.0)) / (p + 1.0))
        .sum())
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CapacitanceReport {
    /// Flux through the Dirichlet leg inside the singular disc.
    pub c_arc: Option<f64>,
    /// Flux through the discretized Dirichlet segment.
    pub c_segment: Option<f64>,
    pub c_total: f64,
    pub c_corrected: Option<f64>,
    pub reference: f64,
    pub e_percent: f64,
    pub e_corrected_percent: Option<f64>,
}

impl CapacitanceReport {
    pub fn new(
        c_arc: Option<f64>,
        c_segment: Option<f64>,
        c_corrected_segment: Option<f64>,
        reference: f64,
    ) -> Result<Self> {
        let c_total = c_arc.unwrap_or(0.0) + c_segment.unwrap_or(0.0);
        let c_corrected = c_corrected_segment.map(|c| c + c_arc.unwrap_or(0.0));
        Ok(CapacitanceReport {
            c_arc,
            c_segment,
            c_total,
            c_corrected,
            reference,
            e_percent: relative_error(c_total, reference)?,
            e_corrected_percent: c_corrected.map(|c| relative_error(c, reference)).transpose()?,
        })
    }
}
