use crate::error::{Error, Result};
use crate::path_algebra::grid::{Grid, GridPath};

/// Discrete `(x⊗y)_{s,t}` stored as one `d×m` matrix per grid step.
///
/// Values on arbitrary grid pairs are reconstructed with the Chen recursion
/// `A_{i,j+1} = A_{i,j} + (x_j − x_i)⊗(y_{j+1} − y_j) + A_{j,j+1}`, so the
/// multiplicative property holds by construction up to rounding.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoParamTensor {
    left: GridPath,
    right: GridPath,
    steps: Vec<f64>,
}

impl TwoParamTensor {
    pub fn new(left: GridPath, right: GridPath, steps: Vec<f64>) -> Result<Self> {
        left.grid().ensure_matches(right.grid(), "tensor paths")?;
        let (d, m) = (left.dim(), right.dim());
        let n = left.grid().steps();
        if steps.len() != n * d * m {
            return Err(Error::invalid(format!(
                "tensor needs {} step entries, got {}",
                n * d * m,
                steps.len()
            )));
        }
        if let Some(k) = steps.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(format!("non-finite tensor entry at step {}", k / (d * m))));
        }
        Ok(TwoParamTensor { left, right, steps })
    }

    pub fn zeros(left: GridPath, right: GridPath) -> Result<Self> {
        let len = left.grid().steps() * left.dim() * right.dim();
        TwoParamTensor::new(left, right, vec![0.0; len])
    }

    /// Trapezoid value `½ Δx_k ⊗ Δy_k` on every step.
    pub fn from_quadrature(x: &GridPath, y: &GridPath) -> Result<Self> {
        x.grid().ensure_matches(y.grid(), "quadrature")?;
        let (d, m) = (x.dim(), y.dim());
        let n = x.grid().steps();
        let mut steps = vec![0.0; n * d * m];
        for k in 0..n {
            let dx = x.increment(k, k + 1);
            let dy = y.increment(k, k + 1);
            let out = &mut steps[k * d * m..(k + 1) * d * m];
            for i in 0..d {
                for j in 0..m {
                    out[i * m + j] = 0.5 * dx[i] * dy[j];
                }
            }
        }
        TwoParamTensor::new(x.clone(), y.clone(), steps)
    }

    pub fn grid(&self) -> &Grid {
        self.left.grid()
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.left.dim(), self.right.dim())
    }

    pub fn left(&self) -> &GridPath {
        &self.left
    }

    pub fn right(&self) -> &GridPath {
        &self.right
    }

    pub fn steps(&self) -> &[f64] {
        &self.steps
    }

    pub fn step(&self, k: usize) -> &[f64] {
        let dm = self.left.dim() * self.right.dim();
        &self.steps[k * dm..(k + 1) * dm]
    }

    /// Walks `j = i+1..=end`, handing `A_{i,j}` to `f`.
    pub fn scan_row(&self, i: usize, end: usize, mut f: impl FnMut(usize, &[f64])) {
        let (d, m) = self.dims();
        let mut acc = vec![0.0; d * m];
        let xi = self.left.point(i);
        for j in i..end {
            let xj = self.left.point(j);
            let (y0, y1) = (self.right.point(j), self.right.point(j + 1));
            let a = self.step(j);
            for p in 0..d {
                let dx = xj[p] - xi[p];
                for q in 0..m {
                    acc[p * m + q] += dx * (y1[q] - y0[q]) + a[p * m + q];
                }
            }
            f(j + 1, &acc);
        }
    }

    /// `A_{i,j}` for node indices `i ≤ j`.
    pub fn value(&self, i: usize, j: usize) -> Vec<f64> {
        let (d, m) = self.dims();
        let mut out = vec![0.0; d * m];
        if j > i {
            self.scan_row(i, j, |k, a| {
                if k == j {
                    out.copy_from_slice(a);
                }
            });
        }
        out
    }

    pub fn value_at(&self, s: f64, t: f64) -> Result<Vec<f64>> {
        let i = self.grid().index_of(s)?;
        let j = self.grid().index_of(t)?;
        if i > j {
            return Err(Error::invalid(format!("tensor value needs s ≤ t, got ({s}, {t})")));
        }
        Ok(self.value(i, j))
    }

    /// Chen aggregation of `factor` consecutive steps into one.
    pub fn coarsen(&self, factor: usize) -> Result<Self> {
        let left = self.left.coarsen(factor)?;
        let right = self.right.coarsen(factor)?;
        let (d, m) = self.dims();
        let mut steps = Vec::with_capacity(left.grid().steps() * d * m);
        for big in 0..left.grid().steps() {
            steps.extend_from_slice(&self.value(big * factor, (big + 1) * factor));
        }
        TwoParamTensor::new(left, right, steps)
    }

    /// Restriction to `[a, b]`.
    pub fn restrict(&self, a: f64, b: f64) -> Result<Self> {
        let (i, j) = self.grid().interval(a, b)?;
        self.slice(i, j)
    }

    pub(crate) fn slice(&self, i: usize, j: usize) -> Result<Self> {
        let dm = self.left.dim() * self.right.dim();
        TwoParamTensor::new(
            self.left.slice(i, j)?,
            self.right.slice(i, j)?,
            self.steps[i * dm..j * dm].to_vec(),
        )
    }

    pub(crate) fn relabel(&self, grid: Grid) -> Result<Self> {
        TwoParamTensor::new(self.left.relabel(grid)?, self.right.relabel(grid)?, self.steps.clone())
    }

    /// `(x − x̃)⊗y` from `x⊗y` and `x̃⊗y` by bilinearity.
    pub fn sub_left(&self, other: &TwoParamTensor) -> Result<Self> {
        if !self.right.same_as(&other.right) {
            return Err(Error::GridMismatch("left difference needs a shared right path".into()));
        }
        let left = self.left.sub_path(&other.left)?;
        let steps = self.steps.iter().zip(&other.steps).map(|(a, b)| a - b).collect();
        TwoParamTensor::new(left, self.right.clone(), steps)
    }

    /// `x⊗(y − ỹ)` from `x⊗y` and `x⊗ỹ` by bilinearity.
    pub fn sub_right(&self, other: &TwoParamTensor) -> Result<Self> {
        if !self.left.same_as(&other.left) {
            return Err(Error::GridMismatch("right difference needs a shared left path".into()));
        }
        let right = self.right.sub_path(&other.right)?;
        let steps = self.steps.iter().zip(&other.steps).map(|(a, b)| a - b).collect();
        TwoParamTensor::new(self.left.clone(), right, steps)
    }

    /// Adds `c · h_k` to every diagonal entry of every step (square tensors only).
    pub fn with_diagonal_drift(&self, c: f64) -> Result<Self> {
        let (d, m) = self.dims();
        if d != m {
            return Err(Error::invalid("diagonal correction needs a square tensor"));
        }
        let h = self.grid().step();
        let mut steps = self.steps.clone();
        for chunk in steps.chunks_exact_mut(d * m) {
            for i in 0..d {
                chunk[i * m + i] += c * h;
            }
        }
        TwoParamTensor::new(self.left.clone(), self.right.clone(), steps)
    }

    /// Largest absolute entry over all steps.
    pub fn max_step_abs(&self) -> f64 {
        self.steps.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn linear(n: usize) -> GridPath {
        GridPath::time_path(Grid::uniform(0.0, 1.0, n).unwrap())
    }

    #[test]
    fn linear_tensor_is_half_square() {
        let x = linear(100);
        let t = TwoParamTensor::from_quadrature(&x, &x).unwrap();
        assert!((t.value(0, 100)[0] - 0.5).abs() < 1e-12);
        let v = t.value_at(0.2, 0.7).unwrap()[0];
        assert!((v - 0.125).abs() < 1e-12);
        assert_eq!(t.value(5, 5), vec![0.0]);
    }

    #[test]
    fn constant_right_path_gives_zero() {
        let g = Grid::uniform(0.0, 1.0, 50).unwrap();
        let x = GridPath::from_fn(g, 2, |t, o| {
            o[0] = t.sin();
            o[1] = t.cos();
        })
        .unwrap();
        let y = GridPath::constant(g, &[3.0]).unwrap();
        let t = TwoParamTensor::from_quadrature(&x, &y).unwrap();
        assert_eq!(t.max_step_abs(), 0.0);
        assert!(t.value(0, 50).iter().all(|v| *v == 0.0));
    }

    #[test]
    fn quadratic_driver_converges() {
        let g = Grid::uniform(0.0, 1.0, 4096).unwrap();
        let x = GridPath::time_path(g);
        let y = GridPath::from_fn(g, 1, |t, o| o[0] = t * t).unwrap();
        let t = TwoParamTensor::from_quadrature(&x, &y).unwrap();
        assert!((t.value(0, 4096)[0] - 2.0 / 3.0).abs() < 1e-5);
    }

    #[test]
    fn coarsen_identity_and_exactness() {
        let x = linear(100);
        let t = TwoParamTensor::from_quadrature(&x, &x).unwrap();
        assert_eq!(t.coarsen(1).unwrap(), t);
        let c = t.coarsen(10).unwrap();
        assert_eq!(c.grid().steps(), 10);
        assert!((c.value(0, 10)[0] - 0.5).abs() < 1e-12);
        assert!(matches!(t.coarsen(7), Err(Error::NonDivisibleFactor { .. })));
    }

    #[test]
    fn bilinear_differences() {
        let g = Grid::uniform(0.0, 1.0, 64).unwrap();
        let x = GridPath::from_fn(g, 1, |t, o| o[0] = (3.0 * t).sin()).unwrap();
        let z = GridPath::from_fn(g, 1, |t, o| o[0] = t * t).unwrap();
        let y = GridPath::time_path(g);
        let xy = TwoParamTensor::from_quadrature(&x, &y).unwrap();
        let zy = TwoParamTensor::from_quadrature(&z, &y).unwrap();
        let diff = xy.sub_left(&zy).unwrap();
        let direct = TwoParamTensor::from_quadrature(&x.sub_path(&z).unwrap(), &y).unwrap();
        for (a, b) in diff.steps().iter().zip(direct.steps()) {
            assert!((a - b).abs() < 1e-15);
        }
        assert!(xy.sub_right(&zy).is_err());
    }
}
