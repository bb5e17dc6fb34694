//! Experiment configuration, the Motz presets, single runs, parameter sweeps
//! and their CSV / JSON output.

use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::assembly::{solve_pure_bem, BoundaryValues};
use crate::error::{Error, Result};
use crate::geometry::{
    decompose, discretize, motz_domain, motz_two_singularity_domain, BoundaryMesh,
    DecomposedDomain, Domain, ElementCounts, ElementKind, Point,
};
use crate::gfem::{gfem_capacitance, solve_motz_gfem, StructuredGrid};
use crate::hybrid::{solve_hybrid, SolutionFields};
use crate::postprocess::{
    capacitance_from_alpha, corrected_capacitance, motz_exact_capacitance, piece_flux,
    relative_error, FitOptions, MOTZ_REFERENCE_CAPACITANCE,
};
use crate::quadrature::QuadratureOptions;
use crate::sfbim::SingularBasis;

/// Coefficient columns written per result row.
pub const ALPHA_COLUMNS: usize = 10;

/// Dirichlet segment of the Motz problem whose flux defines the capacitance.
const MOTZ_FLUX_SEGMENT: &str = "Gamma5";

macro_rules! string_enum {
    ($(#[$meta:meta])* $name:ident { $($(#[$vmeta:meta])* $variant:ident => $text:literal $(| $alias:literal)*),+ $(,)? }) => {
        $(#[$meta])*
        #[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
        pub enum $name {
            $($(#[$vmeta])* #[serde(rename = $text $(, alias = $alias)*)] $variant),+
        }

        impl $name {
            pub const ALL: &'static [$name] = &[$($name::$variant),+];

            pub fn as_str(&self) -> &'static str {
                match self { $($name::$variant => $text),+ }
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.as_str())
            }
        }

        impl FromStr for $name {
            type Err = Error;
            fn from_str(s: &str) -> Result<Self> {
                match s {
                    $($text $(| $alias)* => Ok($name::$variant),)+
                    other => Err(Error::InvalidParameter(format!(
                        concat!("unknown ", stringify!($name), " {:?}"), other
                    ))),
                }
            }
        }
    };
}

string_enum!(
    ProblemKind {
        Motz => "motz",
        MotzTwoSingularity => "motz-two-singularity",
        Custom => "custom",
    }
);

string_enum!(
    Method {
        Hybrid => "hybrid",
        Bem => "bem",
        Gfem => "gfem",
    }
);

string_enum!(
    /// Error measure used for plot data.
    Metric {
        /// Total capacitance of the Dirichlet boundary against the reference.
        Total => "total",
        /// Flux through the Dirichlet leg inside the singular disc against
        /// the exact value for the same radius.
        Arc => "arc",
        /// Total capacitance with the fitted segment flux.
        Corrected => "corrected",
    }
);

string_enum!(
    SweepAxis {
        R => "r",
        R2 => "r2",
        NAlpha => "n_alpha" | "n-alpha",
        NGamma5 => "n_gamma5" | "n-gamma5",
    }
);

impl SweepAxis {
    /// Error measure conventionally plotted against this axis.
    pub fn default_metric(&self) -> Metric {
        match self {
            SweepAxis::NGamma5 => Metric::Total,
            _ => Metric::Arc,
        }
    }
}

/// Everything needed to reproduce one run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub problem: ProblemKind,
    /// JSON problem description, required by the custom problem.
    pub problem_file: Option<PathBuf>,
    pub method: Method,
    /// Total element count: outer boundary plus every interface arc.
    pub n: usize,
    /// Elements on the Dirichlet half of the bottom edge. When set, every
    /// outer side gets `2 n_gamma5` elements and `n` is derived.
    pub n_gamma5: Option<usize>,
    /// Elements per interface arc. Defaults to `2 n_gamma5`, or to the
    /// per-side count of the outer boundary.
    pub m: Option<usize>,
    pub r: f64,
    pub r2: f64,
    pub n_alpha: usize,
    /// Terms of the corner expansion; defaults to `n_alpha`.
    pub n_alpha2: Option<usize>,
    pub element_kind: ElementKind,
    pub quadrature_order: usize,
    pub fit: FitOptions,
    /// Recorded with the results; the solvers are deterministic.
    pub seed: u64,
    /// Report wall-clock times. Off by default so output is reproducible.
    pub timings: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            problem: ProblemKind::Motz,
            problem_file: None,
            method: Method::Hybrid,
            n: 500,
            n_gamma5: None,
            m: None,
            r: 0.1,
            r2: 0.2,
            n_alpha: 2,
            n_alpha2: None,
            element_kind: ElementKind::Linear,
            quadrature_order: 8,
            fit: FitOptions::default(),
            seed: 0,
            timings: false,
        }
    }
}

/// Element counts of the Motz boundary for one configuration.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MotzCounts {
    pub per_side: usize,
    pub m: usize,
    pub arcs: usize,
}

impl MotzCounts {
    pub fn n_gamma5(&self) -> usize {
        self.per_side / 2
    }

    pub fn total(&self) -> usize {
        4 * self.per_side + self.arcs * self.m
    }
}

impl ExperimentConfig {
    pub fn from_json_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }

    fn arc_count(&self) -> usize {
        match (self.method, self.problem) {
            (Method::Hybrid, ProblemKind::Motz) => 1,
            (Method::Hybrid, ProblemKind::MotzTwoSingularity) => 2,
            _ => 0,
        }
    }

    pub fn motz_counts(&self) -> Result<MotzCounts> {
        let arcs = self.arc_count();
        if let Some(k) = self.n_gamma5 {
            if k == 0 {
                return Err(Error::InvalidCount("n_gamma5 must be positive".into()));
            }
            return Ok(MotzCounts {
                per_side: 2 * k,
                m: self.m.unwrap_or(2 * k),
                arcs,
            });
        }
        let m = match self.m {
            Some(m) => m,
            None => self.n / (4 + arcs),
        };
        let outer = self
            .n
            .checked_sub(arcs * m)
            .ok_or_else(|| Error::InvalidCount(format!("N = {} leaves no outer elements", self.n)))?;
        if outer == 0 || outer % 8 != 0 {
            return Err(Error::InvalidCount(format!(
                "outer element count {outer} (N = {}, {arcs} arcs of {m}) must be a positive multiple of 8",
                self.n
            )));
        }
        Ok(MotzCounts {
            per_side: outer / 4,
            m,
            arcs,
        })
    }

    fn n_alpha2(&self) -> usize {
        self.n_alpha2.unwrap_or(self.n_alpha)
    }

    /// Applies one sweep value.
    pub fn with_axis(&self, axis: SweepAxis, value: f64) -> Result<Self> {
        let mut c = self.clone();
        let as_count = |v: f64| -> Result<usize> {
            if v >= 0.0 && v.fract() == 0.0 {
                Ok(v as usize)
            } else {
                Err(Error::InvalidParameter(format!("{axis} takes whole numbers, got {v}")))
            }
        };
        match axis {
            SweepAxis::R => c.r = value,
            SweepAxis::R2 => c.r2 = value,
            SweepAxis::NAlpha => c.n_alpha = as_count(value)?,
            SweepAxis::NGamma5 => {
                c.n_gamma5 = Some(as_count(value)?);
                // the arc refines with the outer boundary
                c.m = None;
            }
        }
        Ok(c)
    }

    /// Short curve label for plot files.
    pub fn label(&self) -> String {
        let mut s = self.method.to_string();
        if self.method == Method::Hybrid {
            s.push_str(&format!("_na{}", self.n_alpha));
        }
        if self.problem != ProblemKind::Motz {
            s = format!("{}_{s}", self.problem);
        }
        s
    }
}

/// A user-supplied domain.
///
/// ```json
/// {
///   "domain": {
///     "segments": [
///       {"id": "bottom", "start": [0, 0], "end": [1, 0],
///        "bc": {"kind": "dirichlet", "value": 0.0}}
///     ],
///     "singularities": []
///   },
///   "counts": {"per_unit_length": 40},
///   "element_kind": "linear",
///   "n_alpha": [3],
///   "flux_segments": ["bottom"],
///   "reference_capacitance": 1.0
/// }
/// ```
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    pub domain: Domain,
    pub counts: ElementCounts,
    #[serde(default)]
    pub element_kind: Option<ElementKind>,
    /// Terms per singularity; missing entries use the run's `n_alpha`.
    #[serde(default)]
    pub n_alpha: Vec<usize>,
    /// Segments whose inward flux (including the parts inside singular
    /// discs) is reported as the capacitance.
    #[serde(default)]
    pub flux_segments: Vec<String>,
    #[serde(default)]
    pub reference_capacitance: Option<f64>,
}

impl ProblemFile {
    pub fn from_json_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }
}

/// One row of results.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub method: Method,
    pub problem: ProblemKind,
    pub element_kind: ElementKind,
    /// Total boundary elements.
    pub n: Option<usize>,
    pub m: Option<usize>,
    pub r: Option<f64>,
    pub r2: Option<f64>,
    pub n_alpha: Option<usize>,
    pub n_alpha2: Option<usize>,
    pub n_gamma5: Option<usize>,
    pub quadrature_order: usize,
    pub seed: u64,
    pub unknowns: Option<usize>,
    pub alpha: Vec<f64>,
    pub alpha2: Vec<f64>,
    pub c_arc: Option<f64>,
    pub c_segment: Option<f64>,
    pub c_total: Option<f64>,
    pub c_corrected: Option<f64>,
    pub reference: Option<f64>,
    pub e_percent: Option<f64>,
    pub e_arc_percent: Option<f64>,
    pub e_corrected_percent: Option<f64>,
    pub cond_estimate: Option<f64>,
    pub ill_conditioned: bool,
    pub wall_ms: Option<f64>,
    pub note: String,
}

impl ExperimentResult {
    /// Parameters of `config` with every output blank.
    pub fn blank(config: &ExperimentConfig) -> Self {
        let custom = config.problem == ProblemKind::Custom;
        let counts = if custom { None } else { config.motz_counts().ok() };
        let hybrid = config.method == Method::Hybrid;
        let two = config.problem == ProblemKind::MotzTwoSingularity;
        ExperimentResult {
            method: config.method,
            problem: config.problem,
            element_kind: config.element_kind,
            n: counts.map(|c| c.total()),
            m: counts.filter(|c| c.arcs > 0).map(|c| c.m),
            r: (hybrid && !custom).then_some(config.r),
            r2: (hybrid && two).then_some(config.r2),
            n_alpha: hybrid.then_some(config.n_alpha),
            n_alpha2: (hybrid && two).then(|| config.n_alpha2()),
            n_gamma5: counts.map(|c| c.n_gamma5()),
            quadrature_order: config.quadrature_order,
            seed: config.seed,
            unknowns: None,
            alpha: Vec::new(),
            alpha2: Vec::new(),
            c_arc: None,
            c_segment: None,
            c_total: None,
            c_corrected: None,
            reference: None,
            e_percent: None,
            e_arc_percent: None,
            e_corrected_percent: None,
            cond_estimate: None,
            ill_conditioned: false,
            wall_ms: None,
            note: String::new(),
        }
    }

    pub fn metric(&self, metric: Metric) -> Option<f64> {
        match metric {
            Metric::Total => self.e_percent,
            Metric::Arc => self.e_arc_percent,
            Metric::Corrected => self.e_corrected_percent,
        }
    }

    fn add_note(&mut self, note: impl AsRef<str>) {
        if !self.note.is_empty() {
            self.note.push_str("; ");
        }
        self.note.push_str(note.as_ref());
    }
}

fn motz_mesh(decomposed: &DecomposedDomain, counts: MotzCounts, kind: ElementKind) -> Result<BoundaryMesh> {
    let per_side = counts.per_side;
    if !per_side.is_multiple_of(2) {
        return Err(Error::InvalidCount(format!(
            "the bottom edge needs an even element count, got {per_side}"
        )));
    }
    let half = per_side / 2;
    let arcs = vec![counts.m; decomposed.singularities.len()];
    let element_counts =
        ElementCounts::from_parents(decomposed, &[half, per_side, per_side, per_side, half], &arcs)?;
    discretize(decomposed, &element_counts, kind)
}

/// Inward flux through the Dirichlet segment `piece`, as (integral, fitted
/// integral). Positions are distances from the origin of the bottom edge.
fn motz_segment_flux(
    mesh: &BoundaryMesh,
    q: &[f64],
    s_min: f64,
    fit: &FitOptions,
    result: &mut ExperimentResult,
) -> Result<(f64, Option<f64>)> {
    let (idx, piece) = mesh
        .piece(MOTZ_FLUX_SEGMENT)
        .ok_or_else(|| Error::InvalidParameter("mesh has no Dirichlet bottom segment".into()))?;
    let c = -piece_flux(mesh, q, idx);
    let nodes = piece.nodes.clone();
    let s: Vec<f64> = mesh.nodes[nodes.clone()].iter().map(|n| n.position.norm()).collect();
    let inward: Vec<f64> = q[nodes].iter().map(|v| -v).collect();
    let corrected = match corrected_capacitance(&s, &inward, s_min, 1.0, fit) {
        Ok(c) => Some(c),
        Err(e) => {
            result.add_note(format!("no corrected capacitance: {e}"));
            None
        }
    };
    Ok((c, corrected))
}

fn fill_solution(result: &mut ExperimentResult, sol: &SolutionFields, unknowns: usize) {
    result.unknowns = Some(unknowns);
    result.cond_estimate = Some(sol.condition_estimate);
    result.ill_conditioned = sol.ill_conditioned;
    if sol.ill_conditioned {
        result.add_note("ill-conditioned system");
    }
    if let Some(a) = sol.alpha.first() {
        result.alpha = a.values.clone();
    }
    if let Some(a) = sol.alpha.get(1) {
        result.alpha2 = a.values.clone();
    }
}

fn set_capacitance(
    result: &mut ExperimentResult,
    c_arc: Option<f64>,
    c_segment: f64,
    c_corrected_segment: Option<f64>,
    reference: Option<f64>,
) -> Result<()> {
    let total = c_arc.unwrap_or(0.0) + c_segment;
    let corrected = c_corrected_segment.map(|c| c + c_arc.unwrap_or(0.0));
    result.c_arc = c_arc;
    result.c_segment = Some(c_segment);
    result.c_total = Some(total);
    result.c_corrected = corrected;
    result.reference = reference;
    if let Some(reference) = reference {
        result.e_percent = Some(relative_error(total, reference)?);
        result.e_corrected_percent = corrected.map(|c| relative_error(c, reference)).transpose()?;
    }
    Ok(())
}

fn run_motz(config: &ExperimentConfig, result: &mut ExperimentResult) -> Result<()> {
    let counts = config.motz_counts()?;
    let opts = QuadratureOptions::with_order(config.quadrature_order);
    match config.method {
        Method::Gfem => {
            if config.problem != ProblemKind::Motz {
                return Err(Error::InvalidParameter(
                    "the finite element oracle solves the single-singularity Motz problem only".into(),
                ));
            }
            let grid = StructuredGrid::motz(counts.per_side)?;
            let u = solve_motz_gfem(&grid)?;
            result.unknowns = Some(grid.dof());
            let c = gfem_capacitance(&u, &grid)?;
            set_capacitance(result, None, c, None, Some(MOTZ_REFERENCE_CAPACITANCE))
        }
        Method::Bem => {
            let decomposed = DecomposedDomain::without_singularities(&motz_domain(config.r))?;
            let mesh = motz_mesh(&decomposed, counts, config.element_kind)?;
            let sol = solve_pure_bem(&mesh, &BoundaryValues::from_segments(&mesh), &opts)?;
            fill_solution(result, &sol, mesh.node_count());
            let (c, corrected) = motz_segment_flux(&mesh, &sol.q, 0.0, &config.fit, result)?;
            set_capacitance(result, None, c, corrected, Some(MOTZ_REFERENCE_CAPACITANCE))
        }
        Method::Hybrid => {
            let two = config.problem == ProblemKind::MotzTwoSingularity;
            let domain = if two {
                if !(0.05..=0.5).contains(&config.r) || !(0.1..=0.4).contains(&config.r2) {
                    result.add_note("radii outside the tested range R1 in [0.05, 0.5], R2 in [0.1, 0.4]");
                }
                motz_two_singularity_domain(config.r, config.r2)
            } else {
                motz_domain(config.r)
            };
            let decomposed = decompose(&domain)?;
            let mesh = motz_mesh(&decomposed, counts, config.element_kind)?;
            let sizes: Vec<usize> = if two {
                vec![config.n_alpha, config.n_alpha2()]
            } else {
                vec![config.n_alpha]
            };
            let sol = solve_hybrid(&mesh, &BoundaryValues::from_segments(&mesh), &sizes, &opts)?;
            let unknowns = mesh.node_count() + counts.arcs * counts.m + sizes.iter().sum::<usize>();
            fill_solution(result, &sol, unknowns);
            let c_arc = capacitance_from_alpha(sol.alpha_values(0), config.r);
            result.e_arc_percent = Some(relative_error(c_arc, motz_exact_capacitance(config.r))?);
            let (c, corrected) = motz_segment_flux(&mesh, &sol.q, config.r, &config.fit, result)?;
            set_capacitance(result, Some(c_arc), c, corrected, Some(MOTZ_REFERENCE_CAPACITANCE))
        }
    }
}

fn run_custom(config: &ExperimentConfig, result: &mut ExperimentResult) -> Result<()> {
    let path = config
        .problem_file
        .as_ref()
        .ok_or_else(|| Error::InvalidParameter("the custom problem needs a problem file".into()))?;
    let problem = ProblemFile::from_json_file(path)?;
    let kind = problem.element_kind.unwrap_or(config.element_kind);
    result.element_kind = kind;
    let opts = QuadratureOptions::with_order(config.quadrature_order);
    let (mesh, sol, sizes) = match config.method {
        Method::Gfem => {
            return Err(Error::InvalidParameter(
                "the finite element oracle solves the built-in Motz problem only".into(),
            ))
        }
        Method::Bem => {
            let decomposed = DecomposedDomain::without_singularities(&problem.domain)?;
            let mesh = discretize(&decomposed, &problem.counts, kind)?;
            let sol = solve_pure_bem(&mesh, &BoundaryValues::from_segments(&mesh), &opts)?;
            (mesh, sol, Vec::new())
        }
        Method::Hybrid => {
            let decomposed = decompose(&problem.domain)?;
            let mesh = discretize(&decomposed, &problem.counts, kind)?;
            let sizes: Vec<usize> = (0..mesh.singularities.len())
                .map(|k| problem.n_alpha.get(k).copied().unwrap_or(config.n_alpha))
                .collect();
            let sol = solve_hybrid(&mesh, &BoundaryValues::from_segments(&mesh), &sizes, &opts)?;
            (mesh, sol, sizes)
        }
    };
    result.n = Some(mesh.element_count());
    result.n_alpha = sizes.first().copied();
    result.n_alpha2 = sizes.get(1).copied();
    let arc_nodes: usize = mesh.arc_pieces().map(|(_, p)| p.nodes.len()).sum();
    fill_solution(result, &sol, mesh.node_count() + arc_nodes + sizes.iter().sum::<usize>());
    if problem.flux_segments.is_empty() {
        return Ok(());
    }

    let wanted = |parent: Option<usize>| {
        parent
            .map(|p| problem.flux_segments.contains(&problem.domain.segments[p].id))
            .unwrap_or(false)
    };
    let mut c_segment = 0.0;
    for (idx, piece) in mesh.pieces.iter().enumerate() {
        if wanted(piece.parent) {
            c_segment -= piece_flux(&mesh, &sol.q, idx);
        }
    }
    let mut c_arc = None;
    for leg in &mesh.inner_legs {
        let parent = leg.id.strip_suffix("_inner").unwrap_or(&leg.id);
        if !problem.flux_segments.iter().any(|s| s == parent) {
            continue;
        }
        let spec = &mesh.singularities[leg.singularity];
        let basis = SingularBasis::new(spec, sizes[leg.singularity])?;
        let far: Point = if leg.start.distance(spec.origin) > leg.end.distance(spec.origin) {
            leg.start
        } else {
            leg.end
        };
        let flux: f64 = basis
            .leg_flux_weights(far)
            .iter()
            .zip(sol.alpha_values(leg.singularity))
            .map(|(w, a)| w * a)
            .sum();
        *c_arc.get_or_insert(0.0) += flux;
    }
    set_capacitance(result, c_arc, c_segment, None, problem.reference_capacitance)
}

/// Runs one experiment. Numerical or geometric failures are returned as
/// errors; an ill-conditioned system is reported in the result.
pub fn run(config: &ExperimentConfig) -> Result<ExperimentResult> {
    if config.quadrature_order == 0 {
        return Err(Error::InvalidParameter("quadrature order must be positive".into()));
    }
    let start = Instant::now();
    let mut result = ExperimentResult::blank(config);
    match config.problem {
        ProblemKind::Custom => run_custom(config, &mut result)?,
        _ => run_motz(config, &mut result)?,
    }
    if config.timings {
        result.wall_ms = Some(start.elapsed().as_secs_f64() * 1e3);
    }
    Ok(result)
}

/// Runs the hybrid method, the pure BEM and the finite element oracle at the
/// same Dirichlet-segment resolution.
pub fn compare(config: &ExperimentConfig) -> Vec<ExperimentResult> {
    let mut base = config.clone();
    if base.n_gamma5.is_none() {
        if let Ok(c) = config.motz_counts() {
            base.n_gamma5 = Some(c.n_gamma5());
        }
    }
    Method::ALL
        .iter()
        .map(|&method| {
            let c = ExperimentConfig { method, ..base.clone() };
            run_or_blank(&c)
        })
        .collect()
}

fn run_or_blank(config: &ExperimentConfig) -> ExperimentResult {
    run(config).unwrap_or_else(|e| {
        let mut r = ExperimentResult::blank(config);
        r.add_note(format!("failed: {e}"));
        r
    })
}

/// One curve of a sweep: the fixed parameters and a label for its plot file.
#[derive(Clone, Debug, PartialEq)]
pub struct Curve {
    pub label: String,
    pub config: ExperimentConfig,
}

impl Curve {
    pub fn new(config: ExperimentConfig) -> Self {
        Curve {
            label: config.label(),
            config,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepPoint {
    pub x: f64,
    pub result: ExperimentResult,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CurveResult {
    pub label: String,
    pub points: Vec<SweepPoint>,
}

impl CurveResult {
    /// `(x, E)` pairs with failed points left out.
    pub fn plot_data(&self, metric: Metric) -> Vec<(f64, f64)> {
        self.points
            .iter()
            .filter_map(|p| p.result.metric(metric).map(|e| (p.x, e)))
            .collect()
    }
}

/// One run per value and curve. Points run in parallel and come back in
/// input order; a failing point becomes a blank row carrying the error.
pub fn sweep(curves: &[Curve], axis: SweepAxis, values: &[f64]) -> Vec<CurveResult> {
    let jobs: Vec<(usize, f64)> = (0..curves.len())
        .flat_map(|c| values.iter().map(move |&v| (c, v)))
        .collect();
    let mut results: Vec<SweepPoint> = jobs
        .par_iter()
        .map(|&(c, x)| {
            let base = &curves[c].config;
            let result = match base.with_axis(axis, x) {
                Ok(cfg) => run_or_blank(&cfg),
                Err(e) => {
                    let mut r = ExperimentResult::blank(base);
                    r.add_note(format!("failed: {e}"));
                    r
                }
            };
            SweepPoint { x, result }
        })
        .collect();
    let mut out = Vec::with_capacity(curves.len());
    for curve in curves.iter().rev() {
        let points = results.split_off(results.len() - values.len());
        out.push(CurveResult {
            label: curve.label.clone(),
            points,
        });
    }
    out.reverse();
    out
}

/// Fixed settings of one of the reproduced tables and figures.
#[derive(Clone, Debug, PartialEq)]
pub struct Preset {
    pub name: &'static str,
    pub description: &'static str,
    pub config: ExperimentConfig,
    pub axis: Option<SweepAxis>,
    pub values: Vec<f64>,
    pub curves: Vec<Curve>,
    pub metric: Metric,
}

fn fig5_radii() -> Vec<f64> {
    vec![
        0.01, 0.02, 0.03, 0.05, 0.075, 0.1, 0.125, 0.15, 0.2, 0.25, 0.3, 0.35, 0.4, 0.5, 0.6, 0.7,
        0.8, 0.9,
    ]
}

pub fn presets() -> Vec<Preset> {
    let base = ExperimentConfig::default();
    let table1 = ExperimentConfig {
        n: 500,
        m: Some(100),
        r: 0.1,
        n_alpha: 5,
        ..base.clone()
    };
    let table2 = ExperimentConfig {
        n: 100,
        m: Some(20),
        r: 0.1,
        ..base.clone()
    };
    let fig5 = ExperimentConfig {
        n: 500,
        m: Some(100),
        ..base.clone()
    };
    let fig6 = ExperimentConfig {
        n_gamma5: Some(20),
        r: 0.1,
        n_alpha: 2,
        ..base.clone()
    };
    let fig8 = ExperimentConfig {
        n_gamma5: Some(100),
        r: 0.3,
        n_alpha: 3,
        ..base.clone()
    };
    let fig10 = ExperimentConfig {
        problem: ProblemKind::MotzTwoSingularity,
        n: 600,
        m: Some(100),
        r2: 0.2,
        element_kind: ElementKind::Constant,
        ..base.clone()
    };
    let with = |c: &ExperimentConfig, f: &dyn Fn(&mut ExperimentConfig)| {
        let mut c = c.clone();
        f(&mut c);
        Curve::new(c)
    };
    let mut fig10_curves = Vec::new();
    for na in [2, 3, 5] {
        fig10_curves.push(with(&fig10, &|c| {
            c.problem = ProblemKind::Motz;
            c.n = 500;
            c.n_alpha = na;
        }));
        for r2 in [0.1, 0.2, 0.3, 0.4] {
            let mut c = fig10.clone();
            c.n_alpha = na;
            c.r2 = r2;
            let label = format!("{}_r2_{r2}", c.label());
            fig10_curves.push(Curve { label, config: c });
        }
    }
    let n_gamma5_values = vec![10.0, 20.0, 50.0, 100.0];
    vec![
        Preset {
            name: "table1",
            description: "five leading coefficients; N=500, M=100, R=0.1, N_alpha=5, linear elements",
            config: table1.clone(),
            axis: None,
            values: Vec::new(),
            curves: vec![Curve::new(table1)],
            metric: Metric::Total,
        },
        Preset {
            name: "table2",
            description: "coefficients against N_alpha in {1,2,5,10}; N=100, M=20, R=0.1",
            config: table2.clone(),
            axis: Some(SweepAxis::NAlpha),
            values: vec![1.0, 2.0, 5.0, 10.0],
            curves: vec![Curve::new(table2)],
            metric: Metric::Arc,
        },
        Preset {
            name: "fig5",
            description: "disc-leg capacitance error against R for N_alpha=1..5; N=500, M=100",
            config: fig5.clone(),
            axis: Some(SweepAxis::R),
            values: fig5_radii(),
            curves: (1..=5).map(|na| with(&fig5, &|c| c.n_alpha = na)).collect(),
            metric: Metric::Arc,
        },
        Preset {
            name: "fig6",
            description: "total capacitance error against N_gamma5 for hybrid, BEM and finite elements; M=2 N_gamma5",
            config: fig6.clone(),
            axis: Some(SweepAxis::NGamma5),
            values: n_gamma5_values.clone(),
            curves: vec![
                Curve::new(fig6.clone()),
                with(&fig6, &|c| {
                    c.r = 0.3;
                    c.n_alpha = 3;
                }),
                with(&fig6, &|c| c.method = Method::Bem),
                with(&fig6, &|c| c.method = Method::Gfem),
            ],
            metric: Metric::Total,
        },
        Preset {
            name: "fig8",
            description: "capacitance error with the fitted segment flux against N_gamma5; R=0.3, N_alpha=3",
            config: fig8.clone(),
            axis: Some(SweepAxis::NGamma5),
            values: n_gamma5_values,
            curves: vec![Curve::new(fig8.clone()), with(&fig8, &|c| {
                c.r = 0.1;
                c.n_alpha = 2;
            })],
            metric: Metric::Corrected,
        },
        Preset {
            name: "fig10",
            description: "disc-leg error against R1 with a second expansion at (-1,1); 400 outer elements, M=100 per arc, constant elements",
            config: fig10,
            axis: Some(SweepAxis::R),
            values: vec![0.05, 0.1, 0.15, 0.2, 0.25, 0.3, 0.35, 0.4, 0.45, 0.5],
            curves: fig10_curves,
            metric: Metric::Arc,
        },
    ]
}

pub fn preset(name: &str) -> Result<Preset> {
    presets()
        .into_iter()
        .find(|p| p.name == name)
        .ok_or_else(|| Error::InvalidParameter(format!("unknown preset {name:?}")))
}

fn fmt_opt<T: ToString>(v: Option<T>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

pub fn csv_header() -> Vec<String> {
    let mut h: Vec<String> = [
        "method", "problem", "element_kind", "N", "M", "R", "R2", "N_alpha", "N_alpha2", "N_gamma5",
        "quadrature_order", "seed", "unknowns",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    h.extend((1..=ALPHA_COLUMNS).map(|l| format!("alpha_{l}")));
    h.extend(
        [
            "C_arc",
            "C_segment",
            "C_total",
            "C_corrected",
            "E_percent",
            "E_arc_percent",
            "E_corrected_percent",
            "cond_estimate",
            "ill_conditioned",
            "wall_ms",
            "note",
        ]
        .iter()
        .map(|s| s.to_string()),
    );
    h
}

pub fn csv_record(r: &ExperimentResult) -> Vec<String> {
    let mut row = vec![
        r.method.to_string(),
        r.problem.to_string(),
        r.element_kind.to_string(),
        fmt_opt(r.n),
        fmt_opt(r.m),
        fmt_opt(r.r),
        fmt_opt(r.r2),
        fmt_opt(r.n_alpha),
        fmt_opt(r.n_alpha2),
        fmt_opt(r.n_gamma5),
        r.quadrature_order.to_string(),
        r.seed.to_string(),
        fmt_opt(r.unknowns),
    ];
    row.extend((0..ALPHA_COLUMNS).map(|l| fmt_opt(r.alpha.get(l))));
    row.extend([
        fmt_opt(r.c_arc),
        fmt_opt(r.c_segment),
        fmt_opt(r.c_total),
        fmt_opt(r.c_corrected),
        fmt_opt(r.e_percent),
        fmt_opt(r.e_arc_percent),
        fmt_opt(r.e_corrected_percent),
        fmt_opt(r.cond_estimate),
        r.ill_conditioned.to_string(),
        fmt_opt(r.wall_ms),
        r.note.clone(),
    ]);
    row
}

/// Header plus one row per result.
pub fn write_csv<W: Write>(out: W, results: &[ExperimentResult]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(csv_header())?;
    for r in results {
        w.write_record(csv_record(r))?;
    }
    w.flush()?;
    Ok(())
}

/// Appends rows to `path`, writing the header only when the file is new or empty.
pub fn append_csv(path: &Path, results: &[ExperimentResult]) -> Result<()> {
    let fresh = std::fs::metadata(path).map(|m| m.len() == 0).unwrap_or(true);
    let file = std::fs::OpenOptions::new().create(true).append(true).open(path)?;
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(file);
    if fresh {
        w.write_record(csv_header())?;
    }
    for r in results {
        w.write_record(csv_record(r))?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_json<W: Write>(out: W, results: &[ExperimentResult]) -> Result<()> {
    serde_json::to_writer_pretty(out, results)?;
    Ok(())
}

/// Two-column `(x, E)` file of one curve.
pub fn write_plot_data<W: Write>(out: W, points: &[(f64, f64)]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["x", "E"])?;
    for (x, e) in points {
        w.write_record([x.to_string(), e.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts_follow_the_element_bookkeeping() {
        let c = ExperimentConfig::default().motz_counts().unwrap();
        assert_eq!((c.per_side, c.m, c.total()), (100, 100, 500));
        let c = ExperimentConfig { n: 100, ..Default::default() }.motz_counts().unwrap();
        assert_eq!((c.per_side, c.m), (20, 20));
        let c = ExperimentConfig { n_gamma5: Some(20), ..Default::default() }
            .motz_counts()
            .unwrap();
        assert_eq!((c.per_side, c.m, c.total()), (40, 40, 200));
        let bem = ExperimentConfig {
            method: Method::Bem,
            n_gamma5: Some(400),
            ..Default::default()
        };
        assert_eq!(bem.motz_counts().unwrap().total(), 3200);
        let two = ExperimentConfig {
            problem: ProblemKind::MotzTwoSingularity,
            n: 600,
            ..Default::default()
        };
        let c = two.motz_counts().unwrap();
        assert_eq!((c.per_side, c.m), (100, 100));
        let odd = ExperimentConfig { n: 501, m: Some(100), ..Default::default() };
        assert!(matches!(odd.motz_counts(), Err(Error::InvalidCount(_))));
    }

    #[test]
    fn axis_values_must_be_whole_for_counts() {
        let c = ExperimentConfig::default();
        assert_eq!(c.with_axis(SweepAxis::NAlpha, 3.0).unwrap().n_alpha, 3);
        assert!(c.with_axis(SweepAxis::NAlpha, 2.5).is_err());
        assert_eq!(c.with_axis(SweepAxis::R, 0.3).unwrap().r, 0.3);
    }

    #[test]
    fn enums_round_trip_through_strings() {
        for m in Method::ALL {
            assert_eq!(m.as_str().parse::<Method>().unwrap(), *m);
        }
        assert_eq!("n-gamma5".parse::<SweepAxis>().unwrap(), SweepAxis::NGamma5);
        assert!("fem".parse::<Method>().is_err());
    }

    #[test]
    fn header_matches_record_width() {
        let r = ExperimentResult::blank(&ExperimentConfig::default());
        assert_eq!(csv_header().len(), csv_record(&r).len());
    }

    #[test]
    fn every_preset_resolves_its_counts() {
        for p in presets() {
            for c in &p.curves {
                c.config.motz_counts().unwrap();
            }
        }
    }
}
