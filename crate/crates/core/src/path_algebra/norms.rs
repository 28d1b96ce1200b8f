use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::path_algebra::grid::{euclid, euclid_diff, GridPath};
use crate::path_algebra::tensor::TwoParamTensor;

/// `(k h)^exponent` for every gap `k = 0..=n`; uniform grids make pair
/// scans depend on the gap only.
fn gap_powers(h: f64, n: usize, exponent: f64) -> Vec<f64> {
    (0..=n).map(|k| (k as f64 * h).powf(exponent)).collect()
}

fn check_exponent(beta: f64) -> Result<()> {
    if !(beta > 0.0 && beta <= 1.0) {
        return Err(Error::invalid(format!("Hölder exponent must lie in (0, 1], got {beta}")));
    }
    Ok(())
}

/// Discrete `‖p‖_{β(a,b)}`: max over grid pairs `i < j` in `[a, b]` of
/// `|p_j − p_i| / (t_j − t_i)^β`.
pub fn holder_norm(p: &GridPath, beta: f64, a: f64, b: f64) -> Result<f64> {
    check_exponent(beta)?;
    let (ia, ib) = p.grid().interval(a, b)?;
    Ok(holder_norm_idx(p, beta, ia, ib))
}

pub(crate) fn holder_norm_idx(p: &GridPath, beta: f64, ia: usize, ib: usize) -> f64 {
    let gaps = gap_powers(p.grid().step(), ib - ia, beta);
    (ia..ib)
        .into_par_iter()
        .map(|i| {
            let pi = p.point(i);
            let mut best = 0.0_f64;
            for j in i + 1..=ib {
                let q = euclid_diff(p.point(j), pi) / gaps[j - i];
                if q > best {
                    best = q;
                }
            }
            best
        })
        .reduce(|| 0.0, f64::max)
}

/// Hölder norm over the full grid of `p`.
pub fn holder_norm_full(p: &GridPath, beta: f64) -> Result<f64> {
    holder_norm(p, beta, p.grid().t0(), p.grid().end())
}

/// `‖p‖_{∞(a,b)}` over grid nodes.
pub fn sup_norm(p: &GridPath, a: f64, b: f64) -> Result<f64> {
    let (ia, ib) = p.grid().interval(a, b)?;
    Ok((ia..=ib).map(|k| euclid(p.point(k))).fold(0.0, f64::max))
}

/// Discrete `‖A‖_{2β(a,b)}` with Frobenius norms, values rebuilt row by row.
pub fn two_param_norm(t: &TwoParamTensor, two_beta: f64, a: f64, b: f64) -> Result<f64> {
    if !(two_beta > 0.0 && two_beta <= 2.0) {
        return Err(Error::invalid(format!("two-parameter exponent must lie in (0, 2], got {two_beta}")));
    }
    let (ia, ib) = t.grid().interval(a, b)?;
    Ok(two_param_norm_idx(t, two_beta, ia, ib))
}

pub(crate) fn two_param_norm_idx(t: &TwoParamTensor, two_beta: f64, ia: usize, ib: usize) -> f64 {
    let gaps = gap_powers(t.grid().step(), ib - ia, two_beta);
    (ia..ib)
        .into_par_iter()
        .map(|i| {
            let mut best = 0.0_f64;
            t.scan_row(i, ib, |j, a| {
                let q = euclid(a) / gaps[j - i];
                if q > best {
                    best = q;
                }
            });
            best
        })
        .reduce(|| 0.0, f64::max)
}

/// `sup_{s<t} |A_{s,t}|` over grid pairs in `[a, b]`.
pub fn tensor_sup_norm(t: &TwoParamTensor, a: f64, b: f64) -> Result<f64> {
    let (ia, ib) = t.grid().interval(a, b)?;
    Ok((ia..ib)
        .into_par_iter()
        .map(|i| {
            let mut best = 0.0_f64;
            t.scan_row(i, ib, |_, a| best = best.max(euclid(a)));
            best
        })
        .reduce(|| 0.0, f64::max))
}

/// `‖(x⊗y)_{·,b}‖_{β(a,b)}`: Hölder norm of `u ↦ A_{u,b}` on `[a, b]`.
pub fn endpoint_holder_norm(t: &TwoParamTensor, beta: f64, a: f64, b: f64) -> Result<f64> {
    check_exponent(beta)?;
    let (ia, ib) = t.grid().interval(a, b)?;
    let (d, m) = t.dims();
    // A_{u,b} = A_{a,b} − A_{a,u} − (x_u − x_a)⊗(y_b − y_u)
    let mut from_a = vec![vec![0.0; d * m]; ib - ia + 1];
    t.scan_row(ia, ib, |j, v| from_a[j - ia].copy_from_slice(v));
    let total = from_a[ib - ia].clone();
    let xa = t.left().point(ia);
    let yb = t.right().point(ib);
    let mut values = Vec::with_capacity((ib - ia + 1) * d * m);
    for u in ia..=ib {
        let xu = t.left().point(u);
        let yu = t.right().point(u);
        for p in 0..d {
            for q in 0..m {
                let v = total[p * m + q] - from_a[u - ia][p * m + q] - (xu[p] - xa[p]) * (yb[q] - yu[q]);
                values.push(v);
            }
        }
    }
    let grid = t.grid().sub(ia, ib - ia)?;
    let path = GridPath::new(grid, d * m, values)?;
    Ok(holder_norm_idx(&path, beta, 0, ib - ia))
}

/// `Φ_{β(a,b)}(x, y) = ‖x⊗y‖_{2β} + ‖x‖_β ‖y‖_β`.
pub fn phi2(xy: &TwoParamTensor, beta: f64, a: f64, b: f64) -> Result<f64> {
    Ok(two_param_norm(xy, 2.0 * beta, a, b)?
        + holder_norm(xy.left(), beta, a, b)? * holder_norm(xy.right(), beta, a, b)?)
}

/// `Φ_{β(a,b)}(x, y, z) = ‖x‖‖y‖‖z‖ + ‖z‖‖x⊗y‖ + ‖x‖‖y⊗z‖`.
pub fn phi3(xy: Option<&TwoParamTensor>, yz: Option<&TwoParamTensor>, beta: f64, a: f64, b: f64) -> Result<f64> {
    let xy = xy.ok_or(Error::MissingTensor("x⊗y"))?;
    let yz = yz.ok_or(Error::MissingTensor("y⊗z"))?;
    if !xy.right().same_as(yz.left()) {
        return Err(Error::GridMismatch("phi3 needs x⊗y and y⊗z over the same y".into()));
    }
    let nx = holder_norm(xy.left(), beta, a, b)?;
    let ny = holder_norm(xy.right(), beta, a, b)?;
    let nz = holder_norm(yz.right(), beta, a, b)?;
    let nxy = two_param_norm(xy, 2.0 * beta, a, b)?;
    let nyz = two_param_norm(yz, 2.0 * beta, a, b)?;
    Ok(nx * ny * nz + nz * nxy + nx * nyz)
}

/// Exponents `β`, `ε`, `β′ = β − ε` and the coefficient regularity `λ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HolderExponents {
    beta: f64,
    epsilon: f64,
    lambda: f64,
}

impl HolderExponents {
    pub fn new(beta: f64, epsilon: f64, lambda: f64) -> Result<Self> {
        if !(beta > 1.0 / 3.0 && beta < 0.5) {
            return Err(Error::invalid(format!("beta must lie in (1/3, 1/2), got {beta}")));
        }
        if !(epsilon > 0.0 && beta - 2.0 * epsilon > 0.0) {
            return Err(Error::invalid(format!("epsilon must satisfy 0 < 2ε < β, got {epsilon}")));
        }
        let floor = 1.0 / (beta - epsilon) - 2.0;
        if !(lambda > floor && lambda <= 1.0) {
            return Err(Error::invalid(format!("lambda must lie in ({floor:.4}, 1], got {lambda}")));
        }
        Ok(HolderExponents { beta, epsilon, lambda })
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn beta_prime(&self) -> f64 {
        self.beta - self.epsilon
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }
}

impl Default for HolderExponents {
    fn default() -> Self {
        HolderExponents { beta: 0.4, epsilon: 0.02, lambda: 0.9 }
    }
}

/// The triple `(x, y, x⊗y)` with its exponents.
#[derive(Debug, Clone)]
pub struct MultFunctional {
    tensor: TwoParamTensor,
    exps: HolderExponents,
}

impl MultFunctional {
    pub fn new(tensor: TwoParamTensor, exps: HolderExponents) -> Self {
        MultFunctional { tensor, exps }
    }

    pub fn x(&self) -> &GridPath {
        self.tensor.left()
    }

    pub fn y(&self) -> &GridPath {
        self.tensor.right()
    }

    pub fn tensor(&self) -> &TwoParamTensor {
        &self.tensor
    }

    pub fn exps(&self) -> HolderExponents {
        self.exps
    }

    pub fn phi2(&self, a: f64, b: f64) -> Result<f64> {
        phi2(&self.tensor, self.exps.beta, a, b)
    }

    /// Smallest `C` with `|A_{s,t}| ≤ C (t−s)^{2β}` over all grid pairs.
    pub fn membership_constant(&self) -> f64 {
        let g = self.tensor.grid();
        two_param_norm_idx(&self.tensor, 2.0 * self.exps.beta, 0, g.steps())
    }
}

/// Norms of a path (and optionally its tensor) on one interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormReport {
    pub beta_norm: f64,
    pub two_beta_norm: f64,
    pub sup_norm: f64,
    pub interval: (f64, f64),
    pub phi2: Option<f64>,
    pub phi3: Option<f64>,
}

impl NormReport {
    pub fn compute(xy: &TwoParamTensor, beta: f64, a: f64, b: f64) -> Result<Self> {
        let beta_norm = holder_norm(xy.left(), beta, a, b)?;
        let two_beta_norm = two_param_norm(xy, 2.0 * beta, a, b)?;
        let y_norm = holder_norm(xy.right(), beta, a, b)?;
        Ok(NormReport {
            beta_norm,
            two_beta_norm,
            sup_norm: sup_norm(xy.left(), a, b)?,
            interval: (a, b),
            phi2: Some(two_beta_norm + beta_norm * y_norm),
            phi3: None,
        })
    }
}
