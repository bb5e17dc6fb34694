//! The augmented square system: BEM collocation rows, flux rows and matching
//! rows over nodal `u`, nodal `q` and the singular coefficients.

use serde::{Deserialize, Serialize};

use crate::assembly::{self, BoundaryValues};
use crate::error::{Error, Result};
use crate::geometry::{BcKind, BoundaryMesh, Point};
use crate::linalg::{DenseMatrix, LuFactorization};
use crate::quadrature::QuadratureOptions;
use crate::sfbim::{
    flux_constraint_rows, matching_constraint_rows, CoefficientVector, SingularBasis,
};

/// Condition estimates above this flag the solution as unreliable.
pub const ILL_CONDITIONED: f64 = 1e12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Unknown {
    U { node: usize },
    Q { node: usize },
    Alpha { expansion: usize, term: usize },
}

/// Where a nodal value comes from.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Slot {
    Known(f64),
    Column(usize),
}

/// Bijection between unknowns and columns. Columns are ordered as: the
/// primary unknown of every node in mesh order (`q` on Dirichlet nodes,
/// `u` elsewhere), then `q` on the interface nodes, then the coefficients of
/// each expansion.
#[derive(Clone, Debug, PartialEq)]
pub struct UnknownMap {
    pub unknowns: Vec<Unknown>,
    pub u: Vec<Slot>,
    pub q: Vec<Slot>,
    pub alpha: Vec<std::ops::Range<usize>>,
}

impl UnknownMap {
    pub fn new(mesh: &BoundaryMesh, values: &BoundaryValues, expansion_sizes: &[usize]) -> Self {
        let n = mesh.node_count();
        let mut unknowns = Vec::new();
        let mut u = Vec::with_capacity(n);
        let mut q = Vec::with_capacity(n);
        for i in 0..n {
            let col = unknowns.len();
            match mesh.node_bc(i) {
                BcKind::Dirichlet(_) => {
                    u.push(Slot::Known(values.values[i]));
                    q.push(Slot::Column(col));
                    unknowns.push(Unknown::Q { node: i });
                }
                BcKind::Neumann(_) => {
                    u.push(Slot::Column(col));
                    q.push(Slot::Known(values.values[i]));
                    unknowns.push(Unknown::U { node: i });
                }
                BcKind::Interface => {
                    u.push(Slot::Column(col));
                    q.push(Slot::Column(usize::MAX));
                    unknowns.push(Unknown::U { node: i });
                }
            }
        }
        for (i, slot) in q.iter_mut().enumerate() {
            if *slot == Slot::Column(usize::MAX) {
                *slot = Slot::Column(unknowns.len());
                unknowns.push(Unknown::Q { node: i });
            }
        }
        let mut alpha = Vec::with_capacity(expansion_sizes.len());
        for (k, &size) in expansion_sizes.iter().enumerate() {
            let start = unknowns.len();
            unknowns.extend((0..size).map(|term| Unknown::Alpha { expansion: k, term }));
            alpha.push(start..unknowns.len());
        }
        UnknownMap { unknowns, u, q, alpha }
    }

    pub fn len(&self) -> usize {
        self.unknowns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.unknowns.is_empty()
    }
}

#[derive(Clone, Debug)]
pub struct DenseSystem {
    pub a: DenseMatrix,
    pub b: Vec<f64>,
    pub map: UnknownMap,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolutionFields {
    pub u: Vec<f64>,
    pub q: Vec<f64>,
    pub alpha: Vec<CoefficientVector>,
    /// 1-norm condition estimate of the column-equilibrated matrix.
    pub condition_estimate: f64,
    pub ill_conditioned: bool,
}

impl SolutionFields {
    pub fn alpha_values(&self, expansion: usize) -> &[f64] {
        &self.alpha[expansion].values
    }
}

/// One basis per singularity of the mesh, in the same order.
pub fn assemble_hybrid(
    mesh: &BoundaryMesh,
    values: &BoundaryValues,
    bases: &[SingularBasis],
    opts: &QuadratureOptions,
) -> Result<DenseSystem> {
    let n = mesh.node_count();
    if values.values.len() != n {
        return Err(Error::InvalidBoundaryCondition(format!(
            "{} boundary values for {n} nodes",
            values.values.len()
        )));
    }
    let arcs: Vec<usize> = mesh.arc_pieces().map(|(i, _)| i).collect();
    if bases.len() != arcs.len() || mesh.singularities.len() != arcs.len() {
        return Err(Error::InvalidParameter(format!(
            "{} expansions for {} interface arcs",
            bases.len(),
            arcs.len()
        )));
    }
    if !mesh.pieces.iter().any(|p| p.bc.is_dirichlet()) {
        return Err(Error::PureNeumann);
    }

    let sizes: Vec<usize> = bases.iter().map(SingularBasis::len).collect();
    let map = UnknownMap::new(mesh, values, &sizes);
    let pair = assembly::assemble(mesh, opts)?;

    let n_alpha: usize = sizes.iter().sum();
    let n_match: usize = arcs.iter().map(|&p| mesh.pieces[p].nodes.len()).sum();
    let rows = n + n_alpha + n_match;
    if rows != map.len() {
        return Err(Error::CountMismatch {
            equations: rows,
            unknowns: map.len(),
        });
    }
    let mut a = DenseMatrix::zeros(rows, map.len());
    let mut b = vec![0.0; rows];

    for i in 0..n {
        let (h, g) = (pair.h.row(i), pair.g.row(i));
        let row = a.row_mut(i);
        for j in 0..n {
            match map.u[j] {
                Slot::Column(c) => row[c] += h[j],
                Slot::Known(v) => b[i] -= h[j] * v,
            }
            match map.q[j] {
                Slot::Column(c) => row[c] -= g[j],
                Slot::Known(v) => b[i] += g[j] * v,
            }
        }
    }
    drop(pair);

    let mut next = n;
    // arcs come in boundary order, expansions in singularity order
    let expansion = |piece: usize| {
        mesh.pieces[piece]
            .singularity
            .ok_or_else(|| Error::InvalidParameter(format!("arc {} has no singularity", mesh.pieces[piece].id)))
    };
    for &piece in &arcs {
        let k_sing = expansion(piece)?;
        let basis = &bases[k_sing];
        let flux = flux_constraint_rows(mesh, piece, basis, &opts.regular)?;
        let cols = map.alpha[k_sing].clone();
        for (qr, ar) in flux.q.iter().zip(&flux.alpha) {
            let row = a.row_mut(next);
            for (&node, v) in flux.nodes.iter().zip(qr) {
                if let Slot::Column(c) = map.q[node] {
                    row[c] += v;
                }
            }
            for (c, v) in cols.clone().zip(ar) {
                row[c] += v;
            }
            next += 1;
        }
    }
    for &piece in &arcs {
        let k_sing = expansion(piece)?;
        let basis = &bases[k_sing];
        let matching = matching_constraint_rows(mesh, piece, basis, &opts.regular);
        let cols = map.alpha[k_sing].clone();
        for (ur, ar) in matching.u.iter().zip(&matching.alpha) {
            let row = a.row_mut(next);
            for (&node, v) in matching.nodes.iter().zip(ur) {
                if let Slot::Column(c) = map.u[node] {
                    row[c] += v;
                }
            }
            for (c, v) in cols.clone().zip(ar) {
                row[c] += v;
            }
            next += 1;
        }
    }
    debug_assert_eq!(next, rows);
    Ok(DenseSystem { a, b, map })
}

/// Direct solve with column equilibration and partial pivoting.
pub fn solve(system: &DenseSystem) -> Result<SolutionFields> {
    let mut a = system.a.clone();
    let cols = a.cols();
    let mut scale = vec![0.0f64; cols];
    for r in 0..a.rows() {
        for (s, v) in scale.iter_mut().zip(a.row(r)) {
            *s = s.max(v.abs());
        }
    }
    for (j, s) in scale.iter_mut().enumerate() {
        if *s == 0.0 {
            return Err(Error::SingularMatrix { column: j, pivot: 0.0 });
        }
        *s = 1.0 / *s;
    }
    for row in a.rows_mut() {
        for (v, s) in row.iter_mut().zip(&scale) {
            *v *= s;
        }
    }
    let norm = a.norm_1();
    let lu = LuFactorization::new(a)?;
    let condition_estimate = lu.condition_estimate(norm);
    let y = lu.solve(&system.b);
    let x: Vec<f64> = y.iter().zip(&scale).map(|(v, s)| v * s).collect();
    Ok(unpack(&system.map, &x, condition_estimate))
}

fn unpack(map: &UnknownMap, x: &[f64], condition_estimate: f64) -> SolutionFields {
    let read = |slot: &Slot| match *slot {
        Slot::Known(v) => v,
        Slot::Column(c) => x[c],
    };
    SolutionFields {
        u: map.u.iter().map(read).collect(),
        q: map.q.iter().map(read).collect(),
        alpha: map
            .alpha
            .iter()
            .enumerate()
            .map(|(k, r)| CoefficientVector {
                expansion: k,
                values: x[r.clone()].to_vec(),
            })
            .collect(),
        condition_estimate,
        ill_conditioned: !(condition_estimate <= ILL_CONDITIONED),
    }
}

/// `sum_l alpha_l W_l(point)` inside the singular disc.
pub fn reconstruct_u(basis: &SingularBasis, alpha: &[f64], point: Point) -> Result<f64> {
    let r = point.distance(basis.origin);
    if r > basis.radius * (1.0 + 1e-12) {
        return Err(Error::OutsideSubdomain {
            r,
            radius: basis.radius,
        });
    }
    Ok(basis.sum(alpha, point))
}

/// Builds the bases, assembles and solves in one call.
pub fn solve_hybrid(
    mesh: &BoundaryMesh,
    values: &BoundaryValues,
    n_alpha: &[usize],
    opts: &QuadratureOptions,
) -> Result<SolutionFields> {
    if n_alpha.len() != mesh.singularities.len() {
        return Err(Error::InvalidParameter(format!(
            "{} expansion sizes for {} singularities",
            n_alpha.len(),
            mesh.singularities.len()
        )));
    }
    let bases = mesh
        .singularities
        .iter()
        .zip(n_alpha)
        .map(|(s, &n)| SingularBasis::new(s, n))
        .collect::<Result<Vec<_>>>()?;
    solve(&assemble_hybrid(mesh, values, &bases, opts)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{decompose, discretize, motz_domain, ElementCounts, ElementKind};
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    const EXACT: [f64; 10] = [
        401.162, 87.6559, 17.2379, -8.07121, 1.44027, 0.331054, 0.275437, -0.0869329, 0.0336048,
        0.0153843,
    ];

    fn motz_mesh(per_side: usize, m: usize, r: f64, kind: ElementKind) -> BoundaryMesh {
        let d = decompose(&motz_domain(r)).unwrap();
        let half = per_side / 2;
        let counts =
            ElementCounts::from_parents(&d, &[half, per_side, per_side, per_side, half], &[m]).unwrap();
        discretize(&d, &counts, kind).unwrap()
    }

    #[test]
    fn motz_unknown_count_and_order() {
        let mesh = motz_mesh(100, 100, 0.1, ElementKind::Constant);
        let values = BoundaryValues::from_segments(&mesh);
        let map = UnknownMap::new(&mesh, &values, &[5]);
        assert_eq!(map.len(), 605);
        // first unknown is u on the Neumann bottom-right piece
        assert_eq!(map.unknowns[0], Unknown::U { node: 0 });
        let (g2, piece) = mesh.piece("Gamma2").unwrap();
        assert_eq!(g2, 1);
        assert_eq!(map.unknowns[piece.nodes.start], Unknown::Q { node: piece.nodes.start });
        assert_eq!(map.unknowns[604], Unknown::Alpha { expansion: 0, term: 4 });
        assert_eq!(map.alpha[0], 600..605);
    }

    #[test]
    fn summation_oracle_on_neumann_leg() {
        let basis = SingularBasis::new(&motz_domain(0.1).singularities[0], 10).unwrap();
        let expected: f64 = EXACT
            .iter()
            .enumerate()
            .map(|(l, a)| a * 0.1f64.powf((2 * l + 1) as f64 / 2.0))
            .sum();
        let u = reconstruct_u(&basis, &EXACT, Point::new(0.1, 0.0)).unwrap();
        assert_relative_eq!(u, expected, max_relative = 1e-14);
        // 126.859 + 2.772 + 0.0545 - 0.0026 + ...
        assert_relative_eq!(u, 129.6825, epsilon = 1e-4);
        assert_eq!(reconstruct_u(&basis, &EXACT, Point::new(0.0, 0.0)).unwrap(), 0.0);
        assert!(reconstruct_u(&basis, &EXACT, Point::new(-0.05, 0.0)).unwrap().abs() < 1e-12);
        assert!(matches!(
            reconstruct_u(&basis, &EXACT, Point::new(0.0, 0.2)),
            Err(Error::OutsideSubdomain { .. })
        ));
    }

    #[test]
    fn no_arc_system_matches_pure_bem() {
        let d = decompose(&crate::geometry::Domain {
            singularities: vec![],
            ..motz_domain(0.1)
        })
        .unwrap();
        let mesh = discretize(&d, &ElementCounts::PerPiece(vec![5, 10, 20, 10, 5]), ElementKind::Linear).unwrap();
        let values = BoundaryValues::from_segments(&mesh);
        let opts = QuadratureOptions::default();
        let system = assemble_hybrid(&mesh, &values, &[], &opts).unwrap();
        let pair = assembly::assemble(&mesh, &opts).unwrap();
        for i in 0..mesh.node_count() {
            for j in 0..mesh.node_count() {
                let expected = if mesh.node_bc(j).is_dirichlet() { -pair.g[(i, j)] } else { pair.h[(i, j)] };
                assert_eq!(system.a[(i, j)], expected);
            }
        }
        let hybrid = solve(&system).unwrap();
        let pure = assembly::solve_pure_bem(&mesh, &values, &opts).unwrap();
        assert_eq!(hybrid, pure);
    }

    #[test]
    fn manufactured_expansion_is_recovered() {
        let star = [300.0, 80.0, -15.0];
        let mesh = motz_mesh(40, 40, 0.3, ElementKind::Linear);
        let basis = SingularBasis::new(&mesh.singularities[0], 3).unwrap();
        let values = BoundaryValues::from_fn(&mesh, |node, bc| match bc {
            BcKind::Dirichlet(_) => basis.sum(&star, node.position),
            BcKind::Neumann(_) => (0..3)
                .map(|l| star[l] * basis.eval_dw_dn(l, node.position, node.normal).unwrap())
                .sum(),
            BcKind::Interface => 0.0,
        });
        let sol = solve_hybrid(&mesh, &values, &[3], &QuadratureOptions::default()).unwrap();
        let alpha = sol.alpha_values(0);
        for (a, s) in alpha.iter().zip(star) {
            assert!(((a - s) / s).abs() < 1e-2, "{alpha:?}");
        }
    }

    #[test]
    fn neumann_corner_expansion_is_recovered() {
        use crate::geometry::{BcPair, Domain, Point, SegmentSpec, SingularitySpec};
        let p = Point::new;
        let domain = Domain {
            segments: vec![
                SegmentSpec::new("bottom", p(0.0, 0.0), p(1.0, 0.0), BcKind::Dirichlet(0.0)),
                SegmentSpec::new("right", p(1.0, 0.0), p(1.0, 1.0), BcKind::Dirichlet(0.0)),
                SegmentSpec::new("top", p(1.0, 1.0), p(0.0, 1.0), BcKind::Neumann(0.0)),
                SegmentSpec::new("left", p(0.0, 1.0), p(0.0, 0.0), BcKind::Neumann(0.0)),
            ],
            singularities: vec![SingularitySpec {
                origin: p(0.0, 1.0),
                radius: 0.3,
                opening_angle: PI / 2.0,
                bc_pair: BcPair::NeumannNeumann,
                theta_zero_direction: p(0.0, -1.0),
                arc_id: None,
            }],
        };
        // 5 + 2 r^2 cos(2 theta) about the corner
        let u = |q: Point| 5.0 + 2.0 * ((1.0 - q.y).powi(2) - q.x * q.x);
        let grad = |q: Point| p(-4.0 * q.x, -4.0 * (1.0 - q.y));
        let d = decompose(&domain).unwrap();
        let mesh = discretize(&d, &ElementCounts::PerUnitLength(40.0), ElementKind::Linear).unwrap();
        let values = BoundaryValues::from_field(&mesh, u, grad);
        let sol = solve_hybrid(&mesh, &values, &[3], &QuadratureOptions::default()).unwrap();
        let alpha = sol.alpha_values(0);
        for (a, s) in alpha.iter().zip([5.0, 2.0, 0.0]) {
            assert!((a - s).abs() < 1e-2, "{alpha:?}");
        }
    }

    #[test]
    fn second_expansion_keeps_the_leading_coefficient() {
        use crate::geometry::motz_two_singularity_domain;
        let d = decompose(&motz_two_singularity_domain(0.2, 0.2)).unwrap();
        let counts = ElementCounts::from_parents(&d, &[25, 50, 50, 50, 25], &[40, 40]).unwrap();
        let mesh = discretize(&d, &counts, ElementKind::Linear).unwrap();
        // the corner arc precedes the origin arc along the boundary
        let order: Vec<_> = mesh.arc_pieces().map(|(_, p)| p.singularity).collect();
        assert_eq!(order, [Some(1), Some(0)]);
        let sol = solve_hybrid(&mesh, &BoundaryValues::from_segments(&mesh), &[3, 2], &QuadratureOptions::default())
            .unwrap();
        let alpha = sol.alpha_values(0);
        assert!((alpha[0] - EXACT[0]).abs() / EXACT[0] < 5e-3, "{alpha:?}");
        // the corner constant is the potential there, between the two Dirichlet values
        let corner = sol.alpha_values(1);
        assert!(corner[0] > 0.0 && corner[0] < 500.0, "{corner:?}");
    }

    #[test]
    fn motz_leading_coefficient() {
        let mesh = motz_mesh(50, 20, 0.1, ElementKind::Linear);
        let sol = solve_hybrid(&mesh, &BoundaryValues::from_segments(&mesh), &[2], &QuadratureOptions::default())
            .unwrap();
        let alpha = sol.alpha_values(0);
        assert!((alpha[0] - EXACT[0]).abs() / EXACT[0] < 5e-3, "{alpha:?}");
        assert!(!sol.ill_conditioned);
        // Dirichlet side carries the prescribed values through
        let (_, g5) = mesh.piece("Gamma5").unwrap();
        assert!(g5.nodes.clone().all(|i| sol.u[i] == 0.0));
        let _ = PI;
    }

    #[test]
    fn count_mismatch_on_wrong_basis_count() {
        let mesh = motz_mesh(10, 10, 0.1, ElementKind::Constant);
        assert!(assemble_hybrid(&mesh, &BoundaryValues::from_segments(&mesh), &[], &QuadratureOptions::default()).is_err());
    }
}
