use crate::error::{Error, Result};

/// Relative slack (in units of one step) when snapping a time onto the grid.
const SNAP_TOL: f64 = 1e-6;

/// Uniform time grid `t_k = t0 + k h`, `k = 0..=n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    t0: f64,
    h: f64,
    n: usize,
}

impl Grid {
    pub fn new(t0: f64, h: f64, n: usize) -> Result<Self> {
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::invalid(format!("grid step must be positive, got {h}")));
        }
        if n == 0 {
            return Err(Error::invalid("grid needs at least one step"));
        }
        if !t0.is_finite() {
            return Err(Error::invalid("grid start must be finite"));
        }
        Ok(Grid { t0, h, n })
    }

    /// `n` equal steps covering `[a, b]`.
    pub fn uniform(a: f64, b: f64, n: usize) -> Result<Self> {
        if !(b > a) {
            return Err(Error::invalid(format!("empty interval [{a}, {b}]")));
        }
        Grid::new(a, (b - a) / n as f64, n)
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn step(&self) -> f64 {
        self.h
    }

    pub fn steps(&self) -> usize {
        self.n
    }

    pub fn nodes(&self) -> usize {
        self.n + 1
    }

    pub fn time(&self, k: usize) -> f64 {
        self.t0 + k as f64 * self.h
    }

    pub fn end(&self) -> f64 {
        self.time(self.n)
    }

    /// Index of the node at time `t`, failing when `t` is off-grid or outside.
    pub fn index_of(&self, t: f64) -> Result<usize> {
        let x = (t - self.t0) / self.h;
        let k = x.round();
        if (x - k).abs() > SNAP_TOL || k < 0.0 || k > self.n as f64 {
            return Err(Error::OffGridTime { t });
        }
        Ok(k as usize)
    }

    /// Number of steps spanned by a lag `r`; `r` must be an exact multiple of `h`.
    pub fn steps_in(&self, r: f64) -> Result<usize> {
        steps_in(r, self.h)
    }

    /// Index pair for `[a, b]` with `a < b`, both on the grid.
    pub fn interval(&self, a: f64, b: f64) -> Result<(usize, usize)> {
        let off = || Error::OffGridInterval { a, b };
        let i = self.index_of(a).map_err(|_| off())?;
        let j = self.index_of(b).map_err(|_| off())?;
        if i >= j {
            return Err(Error::EmptyPairSet { a, b });
        }
        Ok((i, j))
    }

    /// Sub-grid starting at node `start` with `n` steps.
    pub fn sub(&self, start: usize, n: usize) -> Result<Self> {
        if start + n > self.n {
            return Err(Error::invalid(format!(
                "sub-grid [{start}, {}] exceeds {} steps",
                start + n,
                self.n
            )));
        }
        Grid::new(self.time(start), self.h, n)
    }

    pub fn coarsen(&self, factor: usize) -> Result<Self> {
        if factor == 0 || self.n % factor != 0 {
            return Err(Error::NonDivisibleFactor { factor, n: self.n });
        }
        Grid::new(self.t0, self.h * factor as f64, self.n / factor)
    }

    /// Same spacing, node count and start (up to snapping tolerance).
    pub fn matches(&self, other: &Grid) -> bool {
        self.n == other.n
            && (self.h - other.h).abs() <= 1e-12 * self.h
            && (self.t0 - other.t0).abs() <= SNAP_TOL * self.h
    }

    pub(crate) fn ensure_matches(&self, other: &Grid, what: &str) -> Result<()> {
        if self.matches(other) {
            Ok(())
        } else {
            Err(Error::GridMismatch(format!("{what}: {self:?} vs {other:?}")))
        }
    }
}

/// Number of steps of size `h` in `r`, or an error when `r` is not a multiple.
pub fn steps_in(r: f64, h: f64) -> Result<usize> {
    if !(r >= 0.0) || !r.is_finite() {
        return Err(Error::NotGridMultiple { r, h });
    }
    let x = r / h;
    let m = x.round();
    if (x - m).abs() > SNAP_TOL {
        return Err(Error::NotGridMultiple { r, h });
    }
    Ok(m as usize)
}

/// A `dim`-dimensional path sampled at every node of a [`Grid`].
#[derive(Debug, Clone, PartialEq)]
pub struct GridPath {
    grid: Grid,
    dim: usize,
    values: Vec<f64>,
}

impl GridPath {
    pub fn new(grid: Grid, dim: usize, values: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("path dimension must be at least 1"));
        }
        if values.len() != grid.nodes() * dim {
            return Err(Error::invalid(format!(
                "path needs {} values, got {}",
                grid.nodes() * dim,
                values.len()
            )));
        }
        if let Some(k) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(format!("non-finite path value at node {}", k / dim)));
        }
        Ok(GridPath { grid, dim, values })
    }

    /// Samples `f(t, out)` at every node.
    pub fn from_fn(grid: Grid, dim: usize, mut f: impl FnMut(f64, &mut [f64])) -> Result<Self> {
        let mut values = vec![0.0; grid.nodes() * dim];
        for (k, chunk) in values.chunks_exact_mut(dim).enumerate() {
            f(grid.time(k), chunk);
        }
        GridPath::new(grid, dim, values)
    }

    pub fn constant(grid: Grid, value: &[f64]) -> Result<Self> {
        GridPath::from_fn(grid, value.len(), |_, out| out.copy_from_slice(value))
    }

    /// The time coordinate `t ↦ t` as a one-dimensional path.
    pub fn time_path(grid: Grid) -> Self {
        GridPath::from_fn(grid, 1, |t, out| out[0] = t).expect("finite grid times")
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn point(&self, k: usize) -> &[f64] {
        &self.values[k * self.dim..(k + 1) * self.dim]
    }

    pub fn at(&self, t: f64) -> Result<&[f64]> {
        Ok(self.point(self.grid.index_of(t)?))
    }

    pub fn increment(&self, i: usize, j: usize) -> Vec<f64> {
        let (a, b) = (self.point(i), self.point(j));
        b.iter().zip(a).map(|(b, a)| b - a).collect()
    }

    /// Restriction to `[a, b]` (both on the grid).
    pub fn restrict(&self, a: f64, b: f64) -> Result<Self> {
        let (i, j) = self.grid.interval(a, b)?;
        self.slice(i, j)
    }

    pub(crate) fn slice(&self, i: usize, j: usize) -> Result<Self> {
        let grid = self.grid.sub(i, j - i)?;
        GridPath::new(grid, self.dim, self.values[i * self.dim..(j + 1) * self.dim].to_vec())
    }

    /// Keeps every `factor`-th node.
    pub fn coarsen(&self, factor: usize) -> Result<Self> {
        let grid = self.grid.coarsen(factor)?;
        let mut values = Vec::with_capacity(grid.nodes() * self.dim);
        for k in 0..grid.nodes() {
            values.extend_from_slice(self.point(k * factor));
        }
        GridPath::new(grid, self.dim, values)
    }

    /// Same grid (up to snapping) and bitwise-equal values.
    pub fn same_as(&self, other: &GridPath) -> bool {
        self.grid.matches(&other.grid) && self.dim == other.dim && self.values == other.values
    }

    /// Pointwise `self − other` on a shared grid.
    pub fn sub_path(&self, other: &GridPath) -> Result<Self> {
        self.grid.ensure_matches(&other.grid, "path difference")?;
        if self.dim != other.dim {
            return Err(Error::invalid("path difference of unequal dimensions"));
        }
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a - b).collect();
        GridPath::new(self.grid, self.dim, values)
    }

    /// Re-labels the path with the grid of `other` (same node count and step).
    pub(crate) fn relabel(&self, grid: Grid) -> Result<Self> {
        if grid.steps() != self.grid.steps() || (grid.step() - self.grid.step()).abs() > 1e-12 * grid.step() {
            return Err(Error::GridMismatch("relabel needs identical spacing".into()));
        }
        GridPath::new(grid, self.dim, self.values.clone())
    }
}

/// The delayed path `t ↦ p_{t−r}`, defined on `[t0 + r, t_end]`.
///
/// The source must extend at least `r` to the left of the returned window,
/// which is automatic here because the window starts `r` after the source.
pub fn shift_path(p: &GridPath, r: f64) -> Result<GridPath> {
    let m = p.grid().steps_in(r)?;
    if m == 0 {
        return Ok(p.clone());
    }
    let n = p.grid().steps();
    if m >= n {
        return Err(Error::InsufficientExtension { needed: m, available: n.saturating_sub(1) });
    }
    let grid = Grid::new(p.grid().time(m), p.grid().step(), n - m)?;
    GridPath::new(grid, p.dim(), p.values()[..(n - m + 1) * p.dim()].to_vec())
}

/// The delayed path `t ↦ p_{t−r}` sampled on `[a, b]`.
pub fn shift_path_onto(p: &GridPath, r: f64, a: f64, b: f64) -> Result<GridPath> {
    let m = p.grid().steps_in(r)?;
    let g = p.grid();
    let first = g.index_of(a - r).map_err(|_| Error::InsufficientExtension {
        needed: m,
        available: ((a - g.t0()) / g.step()).max(0.0).round() as usize,
    })?;
    let last = g.index_of(b - r).map_err(|_| Error::OffGridInterval { a, b })?;
    if last <= first {
        return Err(Error::EmptyPairSet { a, b });
    }
    let shifted = p.slice(first, last)?;
    let target = match g.index_of(a) {
        Ok(i) if i + (last - first) <= g.steps() => g.sub(i, last - first)?,
        _ => Grid::new(a, g.step(), last - first)?,
    };
    shifted.relabel(target)
}

pub(crate) fn euclid(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub(crate) fn euclid_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
}
