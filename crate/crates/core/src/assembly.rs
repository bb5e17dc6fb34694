//! Collocation matrices `H` and `G` of the boundary integral equation
//! `H u = G q` over a [`BoundaryMesh`].

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{BcKind, BoundaryMesh, Element, Node, Point};
use crate::hybrid::{self, SolutionFields};
use crate::linalg::DenseMatrix;
use crate::quadrature::{
    g_self_constant, green_dn_unchecked, green_unchecked, integrate_g_self_vec,
    integrate_near_singular_vec, QuadratureOptions,
};

/// `H[i][j] = int phi_j dG/dn`, `G[i][j] = int phi_j G`, collocated at node `i`.
#[derive(Clone, Debug)]
pub struct HgPair {
    pub h: DenseMatrix,
    pub g: DenseMatrix,
}

impl HgPair {
    pub fn dim(&self) -> usize {
        self.h.rows()
    }

    /// `max_i |sum_j H_ij| / sum_j |H_ij|`.
    pub fn max_relative_row_sum(&self) -> f64 {
        (0..self.dim())
            .map(|i| {
                let row = self.h.row(i);
                let sum: f64 = row.iter().sum();
                let abs: f64 = row.iter().map(|v| v.abs()).sum();
                sum.abs() / abs
            })
            .fold(0.0, f64::max)
    }
}

/// Contributions of element `e` to row `i`: `[H_a, H_b, G_a, G_b]` for the
/// element's local basis functions.
fn element_row_contribution(
    e: &Element,
    node: usize,
    source: Point,
    opts: &QuadratureOptions,
) -> Result<[f64; 4]> {
    let own = e.node_ids().iter().position(|&n| n == node);
    let on_element = match own {
        Some(local) => Some(e.at[local]),
        None if e.distance_to(source) == 0.0 => {
            let d = e.end - e.start;
            Some(((source - e.start).dot(d) / d.norm_squared()).clamp(0.0, 1.0))
        }
        None => None,
    };
    if let Some(t0) = on_element {
        // dG/dn vanishes identically on a flat element through the source
        if e.arity == 1 && (t0 - 0.5).abs() < 1e-14 {
            return Ok([0.0, 0.0, g_self_constant(e.length), 0.0]);
        }
        let g = integrate_g_self_vec(
            e,
            |t| {
                let s = e.shape_values(t);
                [s[0], s[1]]
            },
            t0,
            opts,
        );
        return Ok([0.0, 0.0, g[0], g[1]]);
    }
    integrate_near_singular_vec(
        e,
        |t, x| {
            let s = e.shape_values(t);
            let dn = green_dn_unchecked(x, source, e.normal);
            let g = green_unchecked(x, source);
            [s[0] * dn, s[1] * dn, s[0] * g, s[1] * g]
        },
        source,
        opts,
    )
}

/// Off-diagonal `H` and all of `G`. The diagonal of `H` is left at the sum
/// of the (zero) flat self-element terms; call [`fill_diagonal_rowsum`].
pub fn assemble_offdiagonal(mesh: &BoundaryMesh, opts: &QuadratureOptions) -> Result<HgPair> {
    let n = mesh.node_count();
    let mut h = DenseMatrix::zeros(n, n);
    let mut g = DenseMatrix::zeros(n, n);
    h.par_rows_mut()
        .zip(g.par_rows_mut())
        .enumerate()
        .try_for_each(|(i, (h_row, g_row))| -> Result<()> {
            let source = mesh.nodes[i].position;
            for e in &mesh.elements {
                let c = element_row_contribution(e, i, source, opts)?;
                for (local, &j) in e.node_ids().iter().enumerate() {
                    if j != i {
                        h_row[j] += c[local];
                    }
                    g_row[j] += c[2 + local];
                }
            }
            Ok(())
        })?;
    Ok(HgPair { h, g })
}

/// `H_ii = -sum_{j != i} H_ij`: a uniform potential carries no flux, so
/// every row of `H` must annihilate the constant vector. This supplies the
/// free-term coefficient without computing it explicitly.
pub fn fill_diagonal_rowsum(mut pair: HgPair) -> HgPair {
    for (i, row) in pair.h.rows_mut().enumerate() {
        row[i] = 0.0;
        let s: f64 = row.iter().sum();
        row[i] = -s;
    }
    pair
}

pub fn assemble(mesh: &BoundaryMesh, opts: &QuadratureOptions) -> Result<HgPair> {
    assemble_offdiagonal(mesh, opts).map(fill_diagonal_rowsum)
}

/// Known boundary value at every node: `u` on Dirichlet nodes, `q` on
/// Neumann nodes, ignored on interface nodes.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundaryValues {
    pub values: Vec<f64>,
}

impl BoundaryValues {
    /// Constant values taken from the piece boundary conditions.
    pub fn from_segments(mesh: &BoundaryMesh) -> Self {
        BoundaryValues {
            values: (0..mesh.node_count())
                .map(|i| mesh.node_bc(i).value().unwrap_or(0.0))
                .collect(),
        }
    }

    pub fn from_fn(mesh: &BoundaryMesh, f: impl Fn(&Node, BcKind) -> f64) -> Self {
        BoundaryValues {
            values: mesh
                .nodes
                .iter()
                .enumerate()
                .map(|(i, node)| f(node, mesh.node_bc(i)))
                .collect(),
        }
    }

    /// Samples a harmonic field: `u` on Dirichlet nodes, `grad u . n` on
    /// Neumann nodes.
    pub fn from_field(
        mesh: &BoundaryMesh,
        u: impl Fn(Point) -> f64,
        grad: impl Fn(Point) -> Point,
    ) -> Self {
        Self::from_fn(mesh, |node, bc| match bc {
            BcKind::Dirichlet(_) => u(node.position),
            BcKind::Neumann(_) => grad(node.position).dot(node.normal),
            BcKind::Interface => 0.0,
        })
    }
}

/// Standard BEM solve on a mesh without interface arcs.
pub fn solve_pure_bem(
    mesh: &BoundaryMesh,
    values: &BoundaryValues,
    opts: &QuadratureOptions,
) -> Result<SolutionFields> {
    if mesh.pieces.iter().any(|p| p.bc == BcKind::Interface) {
        return Err(Error::InvalidBoundaryCondition(
            "pure BEM needs a Dirichlet or Neumann condition on every element".into(),
        ));
    }
    let system = hybrid::assemble_hybrid(mesh, values, &[], opts)?;
    hybrid::solve(&system)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{decompose, discretize, Domain, ElementCounts, ElementKind, SegmentSpec};
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn unit_square(bc: [BcKind; 4]) -> Domain {
        let p = Point::new;
        Domain {
            segments: vec![
                SegmentSpec::new("bottom", p(0.0, 0.0), p(1.0, 0.0), bc[0]),
                SegmentSpec::new("right", p(1.0, 0.0), p(1.0, 1.0), bc[1]),
                SegmentSpec::new("top", p(1.0, 1.0), p(0.0, 1.0), bc[2]),
                SegmentSpec::new("left", p(0.0, 1.0), p(0.0, 0.0), bc[3]),
            ],
            singularities: vec![],
        }
    }

    fn square_mesh(per_side: usize, kind: ElementKind, bc: [BcKind; 4]) -> BoundaryMesh {
        let d = decompose(&unit_square(bc)).unwrap();
        discretize(&d, &ElementCounts::PerPiece(vec![per_side; 4]), kind).unwrap()
    }

    const DIRICHLET: [BcKind; 4] = [BcKind::Dirichlet(0.0); 4];

    #[test]
    fn four_element_square_symmetry() {
        let mesh = square_mesh(1, ElementKind::Constant, DIRICHLET);
        let pair = assemble(&mesh, &QuadratureOptions::default()).unwrap();
        let h = &pair.h;
        // a side seen from the midpoint of another subtends angle phi and
        // contributes -phi / (2 pi)
        let adjacent = -(2.0f64).atan() / (2.0 * PI);
        let opposite = -2.0 * (0.5f64).atan() / (2.0 * PI);
        for i in 0..4 {
            for j in 0..4 {
                if i == j {
                    continue;
                }
                let expected = if (i + j) % 2 == 0 { opposite } else { adjacent };
                assert_relative_eq!(h[(i, j)], expected, max_relative = 1e-10);
            }
            assert_relative_eq!(h[(i, i)], -(2.0 * adjacent + opposite), max_relative = 1e-12);
            // smooth collocation point: free term 1/2
            assert_relative_eq!(h[(i, i)], 0.5, max_relative = 1e-10);
        }
        assert_relative_eq!(pair.g[(0, 1)], pair.g[(1, 0)], max_relative = 1e-12);
        assert_relative_eq!(pair.g[(0, 2)], pair.g[(2, 0)], max_relative = 1e-12);
    }

    #[test]
    fn row_sums_vanish() {
        let d = decompose(&crate::geometry::motz_domain(0.2)).unwrap();
        let counts = ElementCounts::from_parents(&d, &[7, 9, 12, 9, 7], &[10]).unwrap();
        for kind in [ElementKind::Constant, ElementKind::Linear] {
            let mesh = discretize(&d, &counts, kind).unwrap();
            let pair = assemble(&mesh, &QuadratureOptions::default()).unwrap();
            assert!(pair.max_relative_row_sum() <= 1e-12);
            let ones = vec![1.0; mesh.node_count()];
            let r = pair.h.mul_vec(&ones);
            assert!(r.iter().all(|v| v.abs() < 1e-12));
        }
    }

    #[test]
    fn free_term_tends_to_half_on_refined_circle() {
        use crate::geometry::{BoundaryPiece, DecomposedDomain, PieceShape};
        let circle = |n: usize| {
            let d = DecomposedDomain {
                pieces: vec![BoundaryPiece {
                    id: "circle".into(),
                    bc: BcKind::Dirichlet(0.0),
                    shape: PieceShape::Arc {
                        center: Point::new(0.0, 0.0),
                        radius: 1.0,
                        start_angle: 0.0,
                        sweep: 2.0 * PI,
                    },
                    parent: None,
                    singularity: None,
                }],
                singularities: vec![],
                inner_legs: vec![],
            };
            discretize(&d, &ElementCounts::PerPiece(vec![n]), ElementKind::Linear).unwrap()
        };
        let mut previous = f64::INFINITY;
        for n in [16, 64, 256] {
            let mesh = circle(n);
            let pair = assemble(&mesh, &QuadratureOptions::default()).unwrap();
            // interior vertex node, away from the piece ends
            let i = n / 2;
            let dev = (pair.h[(i, i)] - 0.5).abs();
            // interior angle of the regular n-gon at a vertex is pi - 2 pi / n
            assert_relative_eq!(dev, 1.0 / n as f64, max_relative = 1e-9);
            assert!(dev < previous);
            previous = dev;
        }
        assert!(previous < 5e-3);
    }

    fn max_q_error(per_side: usize, kind: ElementKind, u: fn(Point) -> f64, grad: fn(Point) -> Point) -> f64 {
        max_q_error_away_from_corners(per_side, kind, u, grad, 0.0)
    }

    fn max_q_error_away_from_corners(
        per_side: usize,
        kind: ElementKind,
        u: fn(Point) -> f64,
        grad: fn(Point) -> Point,
        margin: f64,
    ) -> f64 {
        let mesh = square_mesh(per_side, kind, DIRICHLET);
        let values = BoundaryValues::from_field(&mesh, u, grad);
        let sol = solve_pure_bem(&mesh, &values, &QuadratureOptions::default()).unwrap();
        mesh.nodes
            .iter()
            .zip(&sol.q)
            .filter(|(n, _)| {
                let p = n.position;
                p.x.min(1.0 - p.x).max(p.y.min(1.0 - p.y)) >= margin
            })
            .map(|(n, q)| (q - grad(n.position).dot(n.normal)).abs())
            .fold(0.0, f64::max)
    }

    type Field = (fn(Point) -> f64, fn(Point) -> Point);

    const POLYNOMIAL_FIELDS: [Field; 5] = [
        (|_| 1.0, |_| Point::new(0.0, 0.0)),
        (|p| p.x, |_| Point::new(1.0, 0.0)),
        (|p| p.y, |_| Point::new(0.0, 1.0)),
        (|p| p.x * p.y, |p| Point::new(p.y, p.x)),
        (|p| p.x * p.x - p.y * p.y, |p| Point::new(2.0 * p.x, -2.0 * p.y)),
    ];

    #[test]
    fn linear_elements_reproduce_fields_with_linear_flux() {
        // on the axis-aligned square these fields have piecewise linear
        // boundary traces, so linear elements carry them exactly
        for (u, grad) in &POLYNOMIAL_FIELDS[..4] {
            let (u, grad) = (*u, *grad);
            for per_side in [2, 5] {
                assert!(max_q_error(per_side, ElementKind::Linear, u, grad) < 1e-11);
            }
        }
    }

    fn assert_converges(kind: ElementKind, (u, grad): Field) {
        let errors: Vec<f64> = [4, 8, 16, 32]
            .iter()
            .map(|&n| max_q_error_away_from_corners(n, kind, u, grad, 0.25))
            .collect();
        for w in errors.windows(2) {
            assert!(w[1] < w[0], "{kind}: {errors:?}");
        }
        // first order or better
        assert!(errors[3] < 0.125 * 1.5 * errors[0], "{kind}: {errors:?}");
    }

    #[test]
    fn patch_tests_converge() {
        for field in &POLYNOMIAL_FIELDS[1..] {
            assert_converges(ElementKind::Constant, *field);
        }
        assert_converges(ElementKind::Linear, POLYNOMIAL_FIELDS[4]);
    }

    #[test]
    fn transcendental_field_converges() {
        let field: Field = (
            |p| p.x.exp() * p.y.cos(),
            |p| Point::new(p.x.exp() * p.y.cos(), -p.x.exp() * p.y.sin()),
        );
        assert_converges(ElementKind::Constant, field);
        assert_converges(ElementKind::Linear, field);
    }

    #[test]
    fn constant_potential_has_no_flux() {
        for kind in [ElementKind::Constant, ElementKind::Linear] {
            let mesh = square_mesh(6, kind, [BcKind::Dirichlet(3.0); 4]);
            let sol = solve_pure_bem(&mesh, &BoundaryValues::from_segments(&mesh), &QuadratureOptions::default())
                .unwrap();
            assert!(sol.q.iter().all(|q| q.abs() < 1e-10), "{:?}", sol.q);
            assert!(sol.u.iter().all(|&u| u == 3.0));
        }
    }

    #[test]
    fn pure_neumann_rejected() {
        let mesh = square_mesh(3, ElementKind::Linear, [BcKind::Neumann(0.0); 4]);
        let err = solve_pure_bem(&mesh, &BoundaryValues::from_segments(&mesh), &QuadratureOptions::default())
            .unwrap_err();
        assert!(matches!(err, Error::PureNeumann));
    }

    #[test]
    fn interface_pieces_rejected_by_pure_bem() {
        let d = decompose(&crate::geometry::motz_domain(0.2)).unwrap();
        let mesh = discretize(&d, &ElementCounts::PerUnitLength(5.0), ElementKind::Constant).unwrap();
        assert!(matches!(
            solve_pure_bem(&mesh, &BoundaryValues::from_segments(&mesh), &QuadratureOptions::default()),
            Err(Error::InvalidBoundaryCondition(_))
        ));
    }
}
