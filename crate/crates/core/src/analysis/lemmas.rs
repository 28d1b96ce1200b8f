//! Discrete inequality checks and the delayed-tensor norms.

use crate::error::{Error, Result};
use crate::path_algebra::{
    endpoint_holder_norm, euclid, holder_norm, phi2, shift_path_onto, two_param_norm, GridPath, HolderExponents,
    TwoParamTensor,
};
use crate::signals::DelayedTensors;
use crate::solver::Driver;

/// Both sides of `‖y − y_{·−r}‖_{∞(r,T)} ≤ ‖y‖_β r^β` and
/// `‖y − y_{·−r}‖_{β′(r,T)} ≤ 2‖y‖_β r^ε`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LemmaReport {
    pub r: f64,
    pub y_norm: f64,
    pub sup_lhs: f64,
    pub sup_rhs: f64,
    pub holder_lhs: f64,
    pub holder_rhs: f64,
    pub sup_bound_ok: bool,
    pub beta_prime_bound_ok: bool,
}

impl LemmaReport {
    pub fn passes(&self) -> bool {
        self.sup_bound_ok && self.beta_prime_bound_ok
    }

    pub fn margins(&self) -> (f64, f64) {
        (self.sup_rhs - self.sup_lhs, self.holder_rhs - self.holder_lhs)
    }
}

/// `y` must start at or before 0; norms are taken on `[0, T]`.
pub fn lemma_yyr_check(y: &GridPath, r: f64, exps: &HolderExponents) -> Result<LemmaReport> {
    let g = *y.grid();
    let t_end = g.end();
    let h = g.step();
    let m = g.steps_in(r)?;
    if m == 0 {
        return Err(Error::invalid("lemma check needs r > 0"));
    }
    let beta = exps.beta();
    let y_norm = holder_norm(y, beta, 0.0, t_end)?;
    let win = y.restrict(r, t_end)?;
    let lag = shift_path_onto(y, r, r, t_end)?;
    let diff = win.sub_path(&lag)?;

    // compared as ratios with the same gap power the norm uses, so the
    // check inherits the exactness of the pair-set inclusion
    let gap = (m as f64 * h).powf(beta);
    let mut sup_lhs = 0.0_f64;
    let mut ratio = 0.0_f64;
    for k in 0..diff.grid().nodes() {
        let v = euclid(diff.point(k));
        sup_lhs = sup_lhs.max(v);
        ratio = ratio.max(v / gap);
    }
    let holder_lhs = holder_norm(&diff, exps.beta_prime(), r, t_end)?;
    let holder_rhs = 2.0 * y_norm * (m as f64 * h).powf(exps.epsilon());
    Ok(LemmaReport {
        r,
        y_norm,
        sup_lhs,
        sup_rhs: y_norm * gap,
        holder_lhs,
        holder_rhs,
        sup_bound_ok: ratio <= y_norm,
        beta_prime_bound_ok: holder_lhs <= holder_rhs,
    })
}

/// `‖(x⊗y)_{·,b}‖_{β(a,b)} ≤ Φ_{β(a,b)}(x, y) (b − a)^β`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EndpointCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub ok: bool,
}

pub fn endpoint_inequality(xy: &TwoParamTensor, beta: f64, a: f64, b: f64) -> Result<EndpointCheck> {
    let lhs = endpoint_holder_norm(xy, beta, a, b)?;
    let rhs = phi2(xy, beta, a, b)? * (b - a).powf(beta);
    Ok(EndpointCheck { lhs, rhs, ok: lhs <= rhs * (1.0 + 1e-12) })
}

/// `2β′` norms over `[r, T]` of the three vanishing delayed tensors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DelayedNormRow {
    pub r: f64,
    /// `‖(y − y_{·−r})⊗y‖`
    pub diff_by: f64,
    /// `‖y_{·−r}⊗(y − y_{·−r})‖`
    pub shifted_by_diff: f64,
    /// `‖y⊗(y − y_{·−r})‖`
    pub by_diff: f64,
}

impl DelayedNormRow {
    pub fn values(&self) -> [f64; 3] {
        [self.diff_by, self.shifted_by_diff, self.by_diff]
    }
}

pub fn delayed_norm_row(dt: &DelayedTensors, beta_prime: f64) -> Result<DelayedNormRow> {
    let g = *dt.diff_by.grid();
    let (a, b) = (g.t0(), g.end());
    let two = 2.0 * beta_prime;
    Ok(DelayedNormRow {
        r: dt.r,
        diff_by: two_param_norm(&dt.diff_by, two, a, b)?,
        shifted_by_diff: two_param_norm(&dt.shifted_by_diff, two, a, b)?,
        by_diff: two_param_norm(&dt.by_diff, two, a, b)?,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct DelayedNormStudy {
    pub rows: Vec<DelayedNormRow>,
    /// `value(r_{i+1}) / value(r_i)` per norm.
    pub ratios: Vec<[f64; 3]>,
}

impl DelayedNormStudy {
    /// Last over first, per norm (`0/0` reads as 0).
    pub fn last_over_first(&self) -> [f64; 3] {
        let (f, l) = (self.rows[0].values(), self.rows[self.rows.len() - 1].values());
        let mut out = [0.0; 3];
        for i in 0..3 {
            out[i] = if f[i] == 0.0 { 0.0 } else { l[i] / f[i] };
        }
        out
    }
}

pub fn delayed_tensor_norms(driver: &Driver, r_list: &[f64], beta_prime: f64) -> Result<DelayedNormStudy> {
    if r_list.is_empty() {
        return Err(Error::invalid("empty r list"));
    }
    let rows = r_list
        .iter()
        .map(|&r| delayed_norm_row(&driver.delayed(r)?, beta_prime))
        .collect::<Result<Vec<_>>>()?;
    let ratios = rows
        .windows(2)
        .map(|w| {
            let (a, b) = (w[0].values(), w[1].values());
            let mut q = [0.0; 3];
            for i in 0..3 {
                q[i] = if a[i] == 0.0 { 0.0 } else { b[i] / a[i] };
            }
            q
        })
        .collect();
    Ok(DelayedNormStudy { rows, ratios })
}
