//! Domains, boundary conditions, singular points and boundary meshes.
//!
//! A [`Domain`] is a closed counterclockwise loop of straight [`SegmentSpec`]s
//! plus the singular points that sit on its vertices. [`decompose`] cuts a
//! disc of radius `R` out of the domain around every singular point and
//! replaces the cut corner with an interface arc; [`discretize`] turns the
//! result into a [`BoundaryMesh`] of constant or linear elements.

use std::f64::consts::PI;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const GEOM_TOL: f64 = 1e-10;

/// Fraction of an element length by which a junction collocation node is
/// pulled inside its element.
pub const JUNCTION_RETRACTION: f64 = 0.25;

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn dot(self, other: Point) -> f64 {
        self.x * other.x + self.y * other.y
    }

    pub fn cross(self, other: Point) -> f64 {
        self.x * other.y - self.y * other.x
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn norm_squared(self) -> f64 {
        self.x * self.x + self.y * self.y
    }

    pub fn distance(self, other: Point) -> f64 {
        (self - other).norm()
    }

    pub fn normalized(self) -> Point {
        self * (1.0 / self.norm())
    }

    /// Counterclockwise rotation by `angle`.
    pub fn rotated(self, angle: f64) -> Point {
        let (s, c) = angle.sin_cos();
        Point::new(c * self.x - s * self.y, s * self.x + c * self.y)
    }

    /// Polar angle in `(-pi, pi]`.
    pub fn angle(self) -> f64 {
        self.y.atan2(self.x)
    }

    pub fn from_polar(radius: f64, angle: f64) -> Point {
        let (s, c) = angle.sin_cos();
        Point::new(radius * c, radius * s)
    }
}

impl From<[f64; 2]> for Point {
    fn from(p: [f64; 2]) -> Self {
        Point::new(p[0], p[1])
    }
}

impl From<Point> for [f64; 2] {
    fn from(p: Point) -> Self {
        [p.x, p.y]
    }
}

impl Add for Point {
    type Output = Point;
    fn add(self, o: Point) -> Point {
        Point::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Point {
    type Output = Point;
    fn sub(self, o: Point) -> Point {
        Point::new(self.x - o.x, self.y - o.y)
    }
}

impl Neg for Point {
    type Output = Point;
    fn neg(self) -> Point {
        Point::new(-self.x, -self.y)
    }
}

impl Mul<f64> for Point {
    type Output = Point;
    fn mul(self, s: f64) -> Point {
        Point::new(self.x * s, self.y * s)
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

/// Boundary condition carried by a boundary segment. Values are constant
/// along the segment; spatially varying data is supplied per node through
/// [`crate::assembly::BoundaryValues`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum BcKind {
    Dirichlet(f64),
    Neumann(f64),
    Interface,
}

impl BcKind {
    pub fn is_dirichlet(&self) -> bool {
        matches!(self, BcKind::Dirichlet(_))
    }

    pub fn is_neumann(&self) -> bool {
        matches!(self, BcKind::Neumann(_))
    }

    pub fn is_interface(&self) -> bool {
        matches!(self, BcKind::Interface)
    }

    pub fn value(&self) -> Option<f64> {
        match *self {
            BcKind::Dirichlet(v) | BcKind::Neumann(v) => Some(v),
            BcKind::Interface => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SegmentSpec {
    pub id: String,
    pub start: Point,
    pub end: Point,
    pub bc: BcKind,
}

impl SegmentSpec {
    pub fn new(id: impl Into<String>, start: Point, end: Point, bc: BcKind) -> Self {
        SegmentSpec {
            id: id.into(),
            start,
            end,
            bc,
        }
    }

    pub fn length(&self) -> f64 {
        self.start.distance(self.end)
    }

    pub fn direction(&self) -> Point {
        (self.end - self.start).normalized()
    }

    /// Euclidean distance from `p` to the closed segment.
    pub fn distance_to(&self, p: Point) -> f64 {
        point_segment_distance(p, self.start, self.end)
    }
}

/// Boundary-condition pair on the two straight legs meeting at a singular point.
/// The first name refers to the `theta = 0` leg.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BcPair {
    NeumannDirichlet,
    DirichletDirichlet,
    NeumannNeumann,
}

impl fmt::Display for BcPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            BcPair::NeumannDirichlet => "neumann-dirichlet",
            BcPair::DirichletDirichlet => "dirichlet-dirichlet",
            BcPair::NeumannNeumann => "neumann-neumann",
        };
        f.write_str(s)
    }
}

/// A singular point on a vertex of the domain boundary.
///
/// The local angle `theta` is measured counterclockwise from
/// `theta_zero_direction`, which points along the boundary leg leaving the
/// vertex; the domain interior is swept for `0 < theta < opening_angle`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SingularitySpec {
    pub origin: Point,
    pub radius: f64,
    pub opening_angle: f64,
    pub bc_pair: BcPair,
    pub theta_zero_direction: Point,
    /// Label of the interface arc created by [`decompose`].
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub arc_id: Option<String>,
}

impl SingularitySpec {
    fn invalid(&self, reason: impl Into<String>) -> Error {
        Error::InvalidSingularity {
            x: self.origin.x,
            y: self.origin.y,
            reason: reason.into(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.radius > 0.0) || !self.radius.is_finite() {
            return Err(self.invalid(format!("radius must be positive, got {}", self.radius)));
        }
        if !(self.opening_angle > 0.0 && self.opening_angle <= 2.0 * PI + GEOM_TOL) {
            return Err(self.invalid(format!(
                "opening angle must lie in (0, 2pi], got {}",
                self.opening_angle
            )));
        }
        if (self.theta_zero_direction.norm() - 1.0).abs() > 1e-9 {
            return Err(self.invalid("theta_zero_direction must be a unit vector"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Domain {
    pub segments: Vec<SegmentSpec>,
    #[serde(default)]
    pub singularities: Vec<SingularitySpec>,
}

impl Domain {
    pub fn segment(&self, id: &str) -> Option<&SegmentSpec> {
        self.segments.iter().find(|s| s.id == id)
    }

    /// Checks that the segments chain into one closed counterclockwise loop.
    pub fn validate(&self) -> Result<()> {
        if self.segments.len() < 3 {
            return Err(Error::OpenBoundary(format!(
                "need at least three segments, got {}",
                self.segments.len()
            )));
        }
        let scale = self.bounding_scale();
        for (i, s) in self.segments.iter().enumerate() {
            if !(s.length() > GEOM_TOL * scale) {
                return Err(Error::InvalidSegment {
                    id: s.id.clone(),
                    reason: "start and end coincide".into(),
                });
            }
            if let Some(v) = s.bc.value() {
                if !v.is_finite() {
                    return Err(Error::InvalidSegment {
                        id: s.id.clone(),
                        reason: "boundary value is not finite".into(),
                    });
                }
            }
            let next = &self.segments[(i + 1) % self.segments.len()];
            if s.end.distance(next.start) > GEOM_TOL * scale {
                return Err(Error::OpenBoundary(format!(
                    "{} ends at {} but {} starts at {}",
                    s.id, s.end, next.id, next.start
                )));
            }
        }
        let area: f64 = self
            .segments
            .iter()
            .map(|s| s.start.cross(s.end))
            .sum::<f64>()
            * 0.5;
        if area <= 0.0 {
            return Err(Error::OpenBoundary(
                "segments are ordered clockwise".into(),
            ));
        }
        Ok(())
    }

    fn bounding_scale(&self) -> f64 {
        self.segments
            .iter()
            .flat_map(|s| [s.start.norm(), s.end.norm()])
            .fold(1.0_f64, f64::max)
    }

    /// Mean of the segment endpoints, used as the interior reference point
    /// for normal orientation checks.
    pub fn reference_point(&self) -> Point {
        let n = self.segments.len() as f64;
        let sum = self
            .segments
            .iter()
            .fold(Point::default(), |acc, s| acc + s.start);
        sum * (1.0 / n)
    }

    pub fn contains(&self, p: Point) -> bool {
        let vertices: Vec<Point> = self.segments.iter().map(|s| s.start).collect();
        point_in_polygon(p, &vertices)
    }
}

/// The Motz benchmark on `[-1, 1] x [0, 1]` with one singular point at the
/// origin, where `u = 0` on the left half of the bottom edge switches to
/// `du/dn = 0` on the right half.
pub fn build_motz_domain() -> Domain {
    motz_domain(0.1)
}

pub fn motz_domain(radius: f64) -> Domain {
    let p = Point::new;
    Domain {
        segments: vec![
            SegmentSpec::new("Gamma1", p(0.0, 0.0), p(1.0, 0.0), BcKind::Neumann(0.0)),
            SegmentSpec::new("Gamma2", p(1.0, 0.0), p(1.0, 1.0), BcKind::Dirichlet(500.0)),
            SegmentSpec::new("Gamma3", p(1.0, 1.0), p(-1.0, 1.0), BcKind::Neumann(0.0)),
            SegmentSpec::new("Gamma4", p(-1.0, 1.0), p(-1.0, 0.0), BcKind::Neumann(0.0)),
            SegmentSpec::new("Gamma5", p(-1.0, 0.0), p(0.0, 0.0), BcKind::Dirichlet(0.0)),
        ],
        singularities: vec![SingularitySpec {
            origin: p(0.0, 0.0),
            radius,
            opening_angle: PI,
            bc_pair: BcPair::NeumannDirichlet,
            theta_zero_direction: p(1.0, 0.0),
            arc_id: Some("Gamma8".into()),
        }],
    }
}

/// The Motz domain with a second, Neumann-Neumann expansion around the
/// upper-left corner `(-1, 1)`.
pub fn motz_two_singularity_domain(radius: f64, corner_radius: f64) -> Domain {
    let mut domain = motz_domain(radius);
    domain.singularities.push(SingularitySpec {
        origin: Point::new(-1.0, 1.0),
        radius: corner_radius,
        opening_angle: PI / 2.0,
        bc_pair: BcPair::NeumannNeumann,
        theta_zero_direction: Point::new(0.0, -1.0),
        arc_id: Some("Gamma9".into()),
    });
    domain
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum PieceShape {
    Line {
        start: Point,
        end: Point,
    },
    /// Circular arc `center + radius * (cos phi, sin phi)` for
    /// `phi = start_angle + t * sweep`, `t` in `[0, 1]`. Negative sweep is
    /// clockwise about the center.
    Arc {
        center: Point,
        radius: f64,
        start_angle: f64,
        sweep: f64,
    },
}

impl PieceShape {
    pub fn point_at(&self, t: f64) -> Point {
        match *self {
            PieceShape::Line { start, end } => start + (end - start) * t,
            PieceShape::Arc {
                center,
                radius,
                start_angle,
                sweep,
            } => center + Point::from_polar(radius, start_angle + t * sweep),
        }
    }

    pub fn start(&self) -> Point {
        self.point_at(0.0)
    }

    pub fn end(&self) -> Point {
        self.point_at(1.0)
    }

    /// Length of the true curve (for arcs, not of the polygon).
    pub fn length(&self) -> f64 {
        match *self {
            PieceShape::Line { start, end } => start.distance(end),
            PieceShape::Arc { radius, sweep, .. } => radius * sweep.abs(),
        }
    }

    pub fn is_arc(&self) -> bool {
        matches!(self, PieceShape::Arc { .. })
    }

    /// `n + 1` vertices splitting the piece into `n` equal parts. Arc
    /// vertices are evaluated directly on the circle, so every chord of the
    /// resulting regular polygon has the same length.
    pub fn vertices(&self, n: usize) -> Vec<Point> {
        (0..=n)
            .map(|k| {
                if k == n {
                    self.end()
                } else {
                    self.point_at(k as f64 / n as f64)
                }
            })
            .collect()
    }
}

/// One boundary piece of the BEM subdomain after decomposition.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundaryPiece {
    pub id: String,
    pub bc: BcKind,
    pub shape: PieceShape,
    /// Index of the original segment this piece was cut from (`None` for arcs).
    pub parent: Option<usize>,
    /// Index of the singularity whose interface this arc is.
    pub singularity: Option<usize>,
}

/// A straight boundary leg inside a singular disc. It is not discretized;
/// the singular expansion satisfies its boundary condition exactly.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InnerLeg {
    pub singularity: usize,
    pub id: String,
    pub bc: BcKind,
    pub start: Point,
    pub end: Point,
}

impl InnerLeg {
    pub fn length(&self) -> f64 {
        self.start.distance(self.end)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecomposedDomain {
    pub pieces: Vec<BoundaryPiece>,
    pub singularities: Vec<SingularitySpec>,
    pub inner_legs: Vec<InnerLeg>,
}

impl DecomposedDomain {
    pub fn piece(&self, id: &str) -> Option<&BoundaryPiece> {
        self.pieces.iter().find(|p| p.id == id)
    }

    /// A domain with no singular points is its own decomposition.
    pub fn without_singularities(domain: &Domain) -> Result<Self> {
        let plain = Domain {
            segments: domain.segments.clone(),
            singularities: Vec::new(),
        };
        decompose(&plain)
    }
}

/// Cuts a disc of radius `R` around every singular point: the two boundary
/// segments meeting at the point are shortened by `R` and an interface arc is
/// inserted between them. The removed legs are kept as [`InnerLeg`]s.
pub fn decompose(domain: &Domain) -> Result<DecomposedDomain> {
    domain.validate()?;
    let segs = &domain.segments;
    let n = segs.len();
    let scale = domain.bounding_scale();

    // (segment ending at the singularity, segment starting at it)
    let mut legs = Vec::with_capacity(domain.singularities.len());
    for sing in &domain.singularities {
        sing.validate()?;
        let incoming = (0..n)
            .find(|&i| segs[i].end.distance(sing.origin) <= GEOM_TOL * scale)
            .ok_or_else(|| sing.invalid("origin is not a vertex of the boundary"))?;
        let outgoing = (incoming + 1) % n;
        let (a, b) = (&segs[incoming], &segs[outgoing]);

        let zero_dir = b.direction();
        let back_dir = -a.direction();
        let mut opening = zero_dir.cross(back_dir).atan2(zero_dir.dot(back_dir));
        if opening <= 0.0 {
            opening += 2.0 * PI;
        }
        if (opening - sing.opening_angle).abs() > 1e-9 {
            return Err(sing.invalid(format!(
                "opening angle {} does not match the boundary corner angle {}",
                sing.opening_angle, opening
            )));
        }
        if sing.theta_zero_direction.distance(zero_dir) > 1e-9 {
            return Err(sing.invalid(format!(
                "theta_zero_direction must point along {} ({})",
                b.id, zero_dir
            )));
        }
        let (zero_leg_ok, far_leg_ok) = match sing.bc_pair {
            BcPair::NeumannDirichlet => (
                b.bc == BcKind::Neumann(0.0),
                a.bc == BcKind::Dirichlet(0.0),
            ),
            BcPair::DirichletDirichlet => (
                b.bc == BcKind::Dirichlet(0.0),
                a.bc == BcKind::Dirichlet(0.0),
            ),
            BcPair::NeumannNeumann => (
                b.bc == BcKind::Neumann(0.0),
                a.bc == BcKind::Neumann(0.0),
            ),
        };
        if !(zero_leg_ok && far_leg_ok) {
            return Err(sing.invalid(format!(
                "legs {} and {} do not carry homogeneous {} conditions",
                b.id, a.id, sing.bc_pair
            )));
        }
        for leg in [a, b] {
            if sing.radius >= leg.length() {
                return Err(Error::ArcOutsideDomain {
                    x: sing.origin.x,
                    y: sing.origin.y,
                    radius: sing.radius,
                    segment: leg.id.clone(),
                });
            }
        }
        for (i, s) in segs.iter().enumerate() {
            if i == incoming || i == outgoing {
                continue;
            }
            if s.distance_to(sing.origin) <= sing.radius {
                return Err(Error::ArcOutsideDomain {
                    x: sing.origin.x,
                    y: sing.origin.y,
                    radius: sing.radius,
                    segment: s.id.clone(),
                });
            }
        }
        legs.push((incoming, outgoing));
    }

    for (i, si) in domain.singularities.iter().enumerate() {
        for (j, sj) in domain.singularities.iter().enumerate().skip(i + 1) {
            if si.origin.distance(sj.origin) <= si.radius + sj.radius {
                return Err(Error::OverlappingSubdomains {
                    first: i,
                    second: j,
                });
            }
        }
    }

    let mut pieces = Vec::with_capacity(n + legs.len());
    let mut inner_legs = Vec::new();
    for (i, seg) in segs.iter().enumerate() {
        let dir = seg.direction();
        let mut start = seg.start;
        let mut end = seg.end;
        if let Some(k) = legs.iter().position(|&(_, out)| out == i) {
            start = seg.start + dir * domain.singularities[k].radius;
            inner_legs.push(InnerLeg {
                singularity: k,
                id: format!("{}_inner", seg.id),
                bc: seg.bc,
                start: seg.start,
                end: start,
            });
        }
        let arc_after = legs.iter().position(|&(inc, _)| inc == i);
        if let Some(k) = arc_after {
            end = seg.end - dir * domain.singularities[k].radius;
            inner_legs.push(InnerLeg {
                singularity: k,
                id: format!("{}_inner", seg.id),
                bc: seg.bc,
                start: end,
                end: seg.end,
            });
        }
        pieces.push(BoundaryPiece {
            id: seg.id.clone(),
            bc: seg.bc,
            shape: PieceShape::Line { start, end },
            parent: Some(i),
            singularity: None,
        });
        if let Some(k) = arc_after {
            let sing = &domain.singularities[k];
            pieces.push(BoundaryPiece {
                id: sing
                    .arc_id
                    .clone()
                    .unwrap_or_else(|| format!("arc{}", k + 1)),
                bc: BcKind::Interface,
                shape: PieceShape::Arc {
                    center: sing.origin,
                    radius: sing.radius,
                    start_angle: (-seg.direction()).angle(),
                    sweep: -sing.opening_angle,
                },
                parent: None,
                singularity: Some(k),
            });
        }
    }

    Ok(DecomposedDomain {
        pieces,
        singularities: domain.singularities.clone(),
        inner_legs,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ElementKind {
    Constant,
    Linear,
}

impl fmt::Display for ElementKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ElementKind::Constant => "constant",
            ElementKind::Linear => "linear",
        })
    }
}

impl std::str::FromStr for ElementKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "constant" => Ok(ElementKind::Constant),
            "linear" => Ok(ElementKind::Linear),
            other => Err(Error::InvalidParameter(format!("unknown element kind {other:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ElementCounts {
    /// One count per decomposed piece, in piece order.
    PerPiece(Vec<usize>),
    /// `round(length * density)` elements per straight piece (at least one);
    /// arcs get the nearest even count of at least two.
    PerUnitLength(f64),
}

impl ElementCounts {
    /// Straight pieces inherit the count of the original segment they were
    /// cut from (the element size shrinks when a piece is truncated);
    /// arc `k` gets `arc_counts[k]`.
    pub fn from_parents(
        decomposed: &DecomposedDomain,
        segment_counts: &[usize],
        arc_counts: &[usize],
    ) -> Result<Self> {
        decomposed
            .pieces
            .iter()
            .map(|piece| match (piece.parent, piece.singularity) {
                (Some(p), _) => segment_counts.get(p).copied().ok_or_else(|| {
                    Error::InvalidCount(format!("no count for segment {}", piece.id))
                }),
                (None, Some(k)) => arc_counts.get(k).copied().ok_or_else(|| {
                    Error::InvalidCount(format!("no count for arc {}", piece.id))
                }),
                (None, None) => Err(Error::InvalidCount(format!(
                    "piece {} has neither parent nor singularity",
                    piece.id
                ))),
            })
            .collect::<Result<Vec<_>>>()
            .map(ElementCounts::PerPiece)
    }

    fn resolve(&self, decomposed: &DecomposedDomain) -> Result<Vec<usize>> {
        match self {
            ElementCounts::PerPiece(counts) => {
                if counts.len() != decomposed.pieces.len() {
                    return Err(Error::InvalidCount(format!(
                        "{} counts for {} pieces",
                        counts.len(),
                        decomposed.pieces.len()
                    )));
                }
                Ok(counts.clone())
            }
            ElementCounts::PerUnitLength(density) => {
                if !(*density > 0.0) {
                    return Err(Error::InvalidCount(format!(
                        "element density must be positive, got {density}"
                    )));
                }
                Ok(decomposed
                    .pieces
                    .iter()
                    .map(|p| {
                        let raw = (p.shape.length() * density).round() as usize;
                        if p.shape.is_arc() {
                            raw.max(2).div_ceil(2) * 2
                        } else {
                            raw.max(1)
                        }
                    })
                    .collect())
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Node {
    pub position: Point,
    /// Outward unit normal (averaged over the two chords at interior arc vertices).
    pub normal: Point,
    pub piece: usize,
    /// Distance along the piece polygon from the piece start.
    pub arclength: f64,
    /// Collocation node pulled inside its element at a piece end.
    pub junction: bool,
}

/// A straight boundary element. `at[k]` is the position in `[0, 1]` of the
/// `k`-th local node along the element; the local basis functions are the
/// linear Lagrange polynomials through those positions (a single constant
/// function for constant elements).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Element {
    pub start: Point,
    pub end: Point,
    pub normal: Point,
    pub length: f64,
    pub piece: usize,
    pub nodes: [usize; 2],
    pub at: [f64; 2],
    pub arity: usize,
}

impl Element {
    fn straight(start: Point, end: Point, piece: usize) -> Self {
        let d = end - start;
        let length = d.norm();
        Element {
            start,
            end,
            normal: Point::new(d.y / length, -d.x / length),
            length,
            piece,
            nodes: [0, 0],
            at: [0.5, 0.5],
            arity: 1,
        }
    }

    pub fn point_at(&self, t: f64) -> Point {
        self.start + (self.end - self.start) * t
    }

    pub fn midpoint(&self) -> Point {
        self.point_at(0.5)
    }

    pub fn node_ids(&self) -> &[usize] {
        &self.nodes[..self.arity]
    }

    /// Values of the local basis functions at local coordinate `t`.
    #[inline]
    pub fn shape_values(&self, t: f64) -> [f64; 2] {
        if self.arity == 1 {
            [1.0, 0.0]
        } else {
            let [a, b] = self.at;
            let w = 1.0 / (b - a);
            [(b - t) * w, (t - a) * w]
        }
    }

    pub fn distance_to(&self, p: Point) -> f64 {
        point_segment_distance(p, self.start, self.end)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeshPiece {
    pub id: String,
    pub bc: BcKind,
    /// Index of the original segment (`None` for arcs).
    pub parent: Option<usize>,
    pub singularity: Option<usize>,
    pub is_arc: bool,
    pub elements: std::ops::Range<usize>,
    pub nodes: std::ops::Range<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundaryMesh {
    pub kind: ElementKind,
    pub nodes: Vec<Node>,
    pub elements: Vec<Element>,
    pub pieces: Vec<MeshPiece>,
    pub singularities: Vec<SingularitySpec>,
    pub inner_legs: Vec<InnerLeg>,
}

/// Uniform discretization of every decomposed piece.
///
/// Constant elements carry one node at the element midpoint. Linear elements
/// share nodes inside a piece; at both ends of every piece (geometric corners,
/// boundary-condition switches, arc junctions) the node is pulled inside its
/// element by [`JUNCTION_RETRACTION`] of the element length, so every piece
/// owns its own end nodes and no collocation point sits on a corner.
pub fn discretize(
    decomposed: &DecomposedDomain,
    counts: &ElementCounts,
    kind: ElementKind,
) -> Result<BoundaryMesh> {
    let counts = counts.resolve(decomposed)?;
    for (piece, &n) in decomposed.pieces.iter().zip(&counts) {
        if n == 0 {
            return Err(Error::InvalidCount(format!("{} has zero elements", piece.id)));
        }
        if piece.shape.is_arc() && n % 2 != 0 {
            return Err(Error::InvalidCount(format!(
                "arc {} needs an even number of elements, got {n}",
                piece.id
            )));
        }
    }

    let mut nodes = Vec::new();
    let mut elements = Vec::new();
    let mut pieces = Vec::with_capacity(decomposed.pieces.len());
    for (pi, (piece, &n)) in decomposed.pieces.iter().zip(&counts).enumerate() {
        let verts = piece.shape.vertices(n);
        let first_elem = elements.len();
        let first_node = nodes.len();
        let mut chords: Vec<Element> = verts
            .windows(2)
            .map(|w| Element::straight(w[0], w[1], pi))
            .collect();
        let mut cumulative = vec![0.0; n + 1];
        for k in 0..n {
            cumulative[k + 1] = cumulative[k] + chords[k].length;
        }

        match kind {
            ElementKind::Constant => {
                for (k, e) in chords.iter_mut().enumerate() {
                    let id = nodes.len();
                    nodes.push(Node {
                        position: e.midpoint(),
                        normal: e.normal,
                        piece: pi,
                        arclength: cumulative[k] + 0.5 * e.length,
                        junction: false,
                    });
                    e.nodes = [id, id];
                    e.at = [0.5, 0.5];
                    e.arity = 1;
                }
            }
            ElementKind::Linear => {
                for k in 0..=n {
                    let (position, normal, arclength, junction) = if k == 0 {
                        let e = &chords[0];
                        (
                            e.point_at(JUNCTION_RETRACTION),
                            e.normal,
                            JUNCTION_RETRACTION * e.length,
                            true,
                        )
                    } else if k == n {
                        let e = &chords[n - 1];
                        (
                            e.point_at(1.0 - JUNCTION_RETRACTION),
                            e.normal,
                            cumulative[n] - JUNCTION_RETRACTION * e.length,
                            true,
                        )
                    } else {
                        let avg = (chords[k - 1].normal + chords[k].normal).normalized();
                        (verts[k], avg, cumulative[k], false)
                    };
                    nodes.push(Node {
                        position,
                        normal,
                        piece: pi,
                        arclength,
                        junction,
                    });
                }
                for (k, e) in chords.iter_mut().enumerate() {
                    e.nodes = [first_node + k, first_node + k + 1];
                    e.at = [
                        if k == 0 { JUNCTION_RETRACTION } else { 0.0 },
                        if k == n - 1 { 1.0 - JUNCTION_RETRACTION } else { 1.0 },
                    ];
                    e.arity = 2;
                }
            }
        }
        elements.extend(chords);
        pieces.push(MeshPiece {
            id: piece.id.clone(),
            bc: piece.bc,
            parent: piece.parent,
            singularity: piece.singularity,
            is_arc: piece.shape.is_arc(),
            elements: first_elem..elements.len(),
            nodes: first_node..nodes.len(),
        });
    }

    Ok(BoundaryMesh {
        kind,
        nodes,
        elements,
        pieces,
        singularities: decomposed.singularities.clone(),
        inner_legs: decomposed.inner_legs.clone(),
    })
}

impl BoundaryMesh {
    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn element_count(&self) -> usize {
        self.elements.len()
    }

    pub fn piece(&self, id: &str) -> Option<(usize, &MeshPiece)> {
        self.pieces.iter().enumerate().find(|(_, p)| p.id == id)
    }

    pub fn node_bc(&self, node: usize) -> BcKind {
        self.pieces[self.nodes[node].piece].bc
    }

    /// Index of the arc piece belonging to singularity `k`.
    pub fn arc_piece(&self, k: usize) -> Option<usize> {
        self.pieces
            .iter()
            .position(|p| p.is_arc && p.singularity == Some(k))
    }

    pub fn arc_pieces(&self) -> impl Iterator<Item = (usize, &MeshPiece)> {
        self.pieces.iter().enumerate().filter(|(_, p)| p.is_arc)
    }

    /// Sum of signed exterior angles between consecutive elements.
    pub fn total_turning_angle(&self) -> f64 {
        let n = self.elements.len();
        (0..n)
            .map(|i| {
                let a = self.elements[i].end - self.elements[i].start;
                let e = &self.elements[(i + 1) % n];
                let b = e.end - e.start;
                a.cross(b).atan2(a.dot(b))
            })
            .sum()
    }

    /// Largest gap between the end of an element and the start of the next.
    pub fn closure_gap(&self) -> f64 {
        let n = self.elements.len();
        (0..n)
            .map(|i| self.elements[i].end.distance(self.elements[(i + 1) % n].start))
            .fold(0.0, f64::max)
    }

    pub fn signed_area(&self) -> f64 {
        0.5 * self
            .elements
            .iter()
            .map(|e| e.start.cross(e.end))
            .sum::<f64>()
    }

    /// Mean of the element start points.
    pub fn reference_point(&self) -> Point {
        let n = self.elements.len() as f64;
        self.elements
            .iter()
            .fold(Point::default(), |acc, e| acc + e.start)
            * (1.0 / n)
    }
}

pub fn point_segment_distance(p: Point, a: Point, b: Point) -> f64 {
    let d = b - a;
    let len2 = d.norm_squared();
    let t = if len2 > 0.0 {
        ((p - a).dot(d) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    p.distance(a + d * t)
}

pub fn point_in_polygon(p: Point, vertices: &[Point]) -> bool {
    let mut inside = false;
    let n = vertices.len();
    let mut j = n - 1;
    for i in 0..n {
        let (vi, vj) = (vertices[i], vertices[j]);
        if (vi.y > p.y) != (vj.y > p.y) && p.x < (vj.x - vi.x) * (p.y - vi.y) / (vj.y - vi.y) + vi.x {
            inside = !inside;
        }
        j = i;
    }
    inside
}
