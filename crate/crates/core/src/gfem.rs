//! Bilinear Galerkin finite elements on uniform rectangular grids, used as
//! an independent reference for boundary fluxes.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Point;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StructuredGrid {
    pub nx: usize,
    pub ny: usize,
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
}

impl StructuredGrid {
    pub fn new(nx: usize, ny: usize, x0: f64, x1: f64, y0: f64, y1: f64) -> Result<Self> {
        if nx == 0 || ny == 0 {
            return Err(Error::InvalidCount(format!("grid needs cells in both directions, got {nx} x {ny}")));
        }
        if !(x1 > x0 && y1 > y0) {
            return Err(Error::InvalidParameter("grid extent must be positive".into()));
        }
        Ok(StructuredGrid { nx, ny, x0, x1, y0, y1 })
    }

    /// `[-1, 1] x [0, 1]` with `cells_per_side` cells along every side, so
    /// the Dirichlet half of the bottom edge carries `cells_per_side / 2`.
    pub fn motz(cells_per_side: usize) -> Result<Self> {
        if !cells_per_side.is_multiple_of(2) {
            return Err(Error::InvalidCount(format!(
                "a node must sit on the singular point: cells per side must be even, got {cells_per_side}"
            )));
        }
        Self::new(cells_per_side, cells_per_side, -1.0, 1.0, 0.0, 1.0)
    }

    pub fn hx(&self) -> f64 {
        (self.x1 - self.x0) / self.nx as f64
    }

    pub fn hy(&self) -> f64 {
        (self.y1 - self.y0) / self.ny as f64
    }

    pub fn dof(&self) -> usize {
        (self.nx + 1) * (self.ny + 1)
    }

    /// Column-major numbering keeps the half bandwidth at `ny + 2`.
    pub fn index(&self, i: usize, j: usize) -> usize {
        i * (self.ny + 1) + j
    }

    pub fn node(&self, i: usize, j: usize) -> Point {
        Point::new(self.x0 + i as f64 * self.hx(), self.y0 + j as f64 * self.hy())
    }

    fn half_bandwidth(&self) -> usize {
        self.ny + 2
    }

    /// Exact element stiffness of `grad u . grad v` on one cell; local node
    /// `a` has offsets `(a & 1, a >> 1)`.
    fn element_stiffness(&self) -> [[f64; 4]; 4] {
        let (rx, ry) = (self.hy() / self.hx(), self.hx() / self.hy());
        let k = |s: usize, t: usize| if s == t { 1.0 } else { -1.0 };
        let m = |s: usize, t: usize| if s == t { 1.0 / 3.0 } else { 1.0 / 6.0 };
        let mut out = [[0.0; 4]; 4];
        for (a, row) in out.iter_mut().enumerate() {
            for (b, v) in row.iter_mut().enumerate() {
                let (ia, ja, ib, jb) = (a & 1, a >> 1, b & 1, b >> 1);
                *v = rx * k(ia, ib) * m(ja, jb) + ry * m(ia, ib) * k(ja, jb);
            }
        }
        out
    }
}

/// Symmetric band matrix storing `a[i][i - d]` for `d <= w`.
#[derive(Clone, Debug, PartialEq)]
pub struct BandMatrix {
    n: usize,
    w: usize,
    data: Vec<f64>,
}

impl BandMatrix {
    pub fn zeros(n: usize, w: usize) -> Self {
        BandMatrix { n, w, data: vec![0.0; n * (w + 1)] }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    fn slot(&self, i: usize, j: usize) -> Option<usize> {
        let (hi, lo) = if i >= j { (i, j) } else { (j, i) };
        let d = hi - lo;
        (d <= self.w).then_some(hi * (self.w + 1) + d)
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.slot(i, j).map_or(0.0, |s| self.data[s])
    }

    fn add(&mut self, i: usize, j: usize, v: f64) {
        let s = self.slot(i, j).expect("entry outside the band");
        self.data[s] += v;
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        for i in 0..self.n {
            for d in 0..=self.w.min(i) {
                let v = self.data[i * (self.w + 1) + d];
                y[i] += v * x[i - d];
                if d > 0 {
                    y[i - d] += v * x[i];
                }
            }
        }
        y
    }

    /// In-place `L L^T` factorization.
    pub fn cholesky(mut self) -> Result<BandCholesky> {
        let w = self.w;
        let stride = w + 1;
        for i in 0..self.n {
            let lo = i.saturating_sub(w);
            for j in lo..=i {
                let mut s = self.data[i * stride + (i - j)];
                let klo = lo.max(j.saturating_sub(w));
                for k in klo..j {
                    s -= self.data[i * stride + (i - k)] * self.data[j * stride + (j - k)];
                }
                if j == i {
                    // pivots lost to cancellation mark a semidefinite matrix
                    if !(s > 1e-12 * self.data[i * stride]) {
                        return Err(Error::SingularMatrix { column: i, pivot: s });
                    }
                    self.data[i * stride] = s.sqrt();
                } else {
                    self.data[i * stride + (i - j)] = s / self.data[j * stride];
                }
            }
        }
        Ok(BandCholesky { l: self })
    }
}

pub struct BandCholesky {
    l: BandMatrix,
}

impl BandCholesky {
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let (n, w) = (self.l.n, self.l.w);
        let stride = w + 1;
        let d = &self.l.data;
        let mut y = b.to_vec();
        for i in 0..n {
            let mut s = y[i];
            for k in i.saturating_sub(w)..i {
                s -= d[i * stride + (i - k)] * y[k];
            }
            y[i] = s / d[i * stride];
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            for k in i + 1..n.min(i + w + 1) {
                s -= d[k * stride + (k - i)] * y[k];
            }
            y[i] = s / d[i * stride];
        }
        y
    }
}

/// Stiffness matrix of the whole grid, before boundary conditions.
pub fn assemble_stiffness(grid: &StructuredGrid) -> BandMatrix {
    let ke = grid.element_stiffness();
    let mut k = BandMatrix::zeros(grid.dof(), grid.half_bandwidth());
    for i in 0..grid.nx {
        for j in 0..grid.ny {
            let ids = [
                grid.index(i, j),
                grid.index(i + 1, j),
                grid.index(i, j + 1),
                grid.index(i + 1, j + 1),
            ];
            for a in 0..4 {
                for b in 0..=a {
                    let (ga, gb) = (ids[a], ids[b]);
                    if ga >= gb {
                        k.add(ga, gb, ke[a][b]);
                    } else if a != b {
                        k.add(gb, ga, ke[a][b]);
                    }
                }
            }
        }
    }
    k
}

/// Nodal solution of Laplace's equation with `dirichlet(i, j, point)`
/// prescribing values on some nodes and homogeneous natural conditions on
/// the remaining boundary.
pub fn solve_dirichlet(
    grid: &StructuredGrid,
    dirichlet: impl Fn(usize, usize, Point) -> Option<f64>,
) -> Result<Vec<f64>> {
    let n = grid.dof();
    let mut fixed: Vec<Option<f64>> = vec![None; n];
    for i in 0..=grid.nx {
        for j in 0..=grid.ny {
            fixed[grid.index(i, j)] = dirichlet(i, j, grid.node(i, j));
        }
    }
    if fixed.iter().all(Option::is_none) {
        return Err(Error::PureNeumann);
    }
    let k = assemble_stiffness(grid);
    let w = k.w;
    let mut reduced = BandMatrix::zeros(n, w);
    let mut rhs = vec![0.0; n];
    for i in 0..n {
        if let Some(g) = fixed[i] {
            reduced.add(i, i, 1.0);
            rhs[i] = g;
            continue;
        }
        for j in i.saturating_sub(w)..(i + w + 1).min(n) {
            let v = k.get(i, j);
            match fixed[j] {
                Some(g) => rhs[i] -= v * g,
                None if j <= i => reduced.add(i, j, v),
                None => {}
            }
        }
    }
    Ok(reduced.cholesky()?.solve(&rhs))
}

/// Motz conditions: `u = 0` on the left half of the bottom edge (the
/// singular point included), `u = 500` on the right edge.
pub fn solve_motz_gfem(grid: &StructuredGrid) -> Result<Vec<f64>> {
    solve_motz_with(grid, 0.0, 500.0)
}

fn solve_motz_with(grid: &StructuredGrid, bottom: f64, right: f64) -> Result<Vec<f64>> {
    let origin = motz_origin_column(grid)?;
    solve_dirichlet(grid, |i, j, _| {
        if i == grid.nx {
            Some(right)
        } else if j == 0 && i <= origin {
            Some(bottom)
        } else {
            None
        }
    })
}

fn motz_origin_column(grid: &StructuredGrid) -> Result<usize> {
    let s = -grid.x0 / grid.hx();
    let i = s.round();
    if (s - i).abs() > 1e-9 || i < 0.0 || i as usize > grid.nx {
        return Err(Error::InvalidParameter("no grid column passes through x = 0".into()));
    }
    Ok(i as usize)
}

/// Inward flux `int du/dy dx` through the bottom edge for `x <= 0`, from the
/// one-sided difference across the first cell layer and the trapezoid rule.
pub fn gfem_capacitance(u: &[f64], grid: &StructuredGrid) -> Result<f64> {
    if u.len() != grid.dof() {
        return Err(Error::InvalidParameter(format!(
            "{} nodal values for {} grid nodes",
            u.len(),
            grid.dof()
        )));
    }
    let last = motz_origin_column(grid)?;
    if last == 0 {
        return Err(Error::FewerThanTwoNodes(1));
    }
    let hy = grid.hy();
    let flux: Vec<f64> = (0..=last)
        .map(|i| (u[grid.index(i, 1)] - u[grid.index(i, 0)]) / hy)
        .collect();
    Ok(flux
        .windows(2)
        .map(|w| 0.5 * (w[0] + w[1]) * grid.hx())
        .sum())
}
