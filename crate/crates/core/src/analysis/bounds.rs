//! Bound functionals: `G¹`–`G⁶`, the a priori constants and the
//! delay-proposition constants.

use crate::coefficients::CoefficientModel;
use crate::error::{Error, Result};
use crate::path_algebra::{
    euclid, holder_norm, holder_norm_full, phi2, phi3, sup_norm, two_param_norm, GridPath, HolderExponents,
    TwoParamTensor,
};
use crate::solver::{shifted_solution, DelayProblem, SolveResult};

/// Norms of `f` entering the `G` functionals.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FNorms {
    pub d1_sup: f64,
    pub d2_sup: f64,
    pub d2_lambda: f64,
}

impl FNorms {
    pub fn of(model: &CoefficientModel, lambda: f64) -> Self {
        FNorms {
            d1_sup: model.sup_dsigma(),
            d2_sup: model.sup_d2sigma(),
            d2_lambda: model.lambda_norm_d2sigma(lambda),
        }
    }
}

/// Inputs of the `G` functionals on one interval `(a, b)`.
///
/// `xy` carries `x` and `y`; `yz` (when present) carries `z`.
#[derive(Debug, Clone, Copy)]
pub struct GInputs<'a> {
    pub xy: &'a TwoParamTensor,
    pub x_tilde: &'a GridPath,
    pub yz: Option<&'a TwoParamTensor>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GValues {
    pub g1: f64,
    pub g2: f64,
    pub g3: f64,
    g4: Option<f64>,
    g5: Option<f64>,
    g6: Option<f64>,
    pub interval: (f64, f64),
}

impl GValues {
    pub fn g4(&self) -> Result<f64> {
        self.g4.ok_or(Error::MissingTensor("y⊗z"))
    }

    pub fn g5(&self) -> Result<f64> {
        self.g5.ok_or(Error::MissingTensor("y⊗z"))
    }

    pub fn g6(&self) -> Result<f64> {
        self.g6.ok_or(Error::MissingTensor("z"))
    }
}

/// `K · G³ · ‖z‖_β`.
pub fn g6_from(k: f64, g3: f64, z_norm: f64) -> f64 {
    k * g3 * z_norm
}

/// Literal evaluation of `G¹`–`G⁶` with discrete norms.
///
/// The unsubscripted `‖y‖_β` is taken over the full grid of `y`.
pub fn g_functionals(f: FNorms, inp: GInputs<'_>, exps: &HolderExponents, a: f64, b: f64, k: f64) -> Result<GValues> {
    let beta = exps.beta();
    let lambda = exps.lambda();
    let len = b - a;
    let x = inp.xy.left();
    let y = inp.xy.right();
    let nx = holder_norm(x, beta, a, b)?;
    let nxt = holder_norm(inp.x_tilde, beta, a, b)?;
    let ny = holder_norm_full(y, beta)?;
    let p_xy = phi2(inp.xy, beta, a, b)?;

    let lam_factor = f.d2_sup + f.d2_lambda * (nx.powf(lambda) + nxt.powf(lambda)) * len.powf(lambda * beta);
    let g1 = k * (ny * f.d1_sup + lam_factor * (p_xy + ny * nxt));
    let g2 = k * (ny * f.d1_sup + f.d2_sup * (p_xy + ny * nxt) * len.powf(beta));
    let g3 = k * (f.d1_sup + f.d2_sup * nxt * len.powf(beta));

    let (g4, g5, g6) = match inp.yz {
        Some(yz) => {
            let p_yz = phi2(yz, beta, a, b)?;
            let p_xyz = phi3(Some(inp.xy), Some(yz), beta, a, b)?;
            let nz = holder_norm(yz.right(), beta, a, b)?;
            let g4 = k * (f.d1_sup * p_yz + lam_factor * (p_xyz + nxt * p_yz));
            let g5 = k * ((f.d1_sup + f.d2_sup * nxt * len.powf(beta)) * p_yz + f.d2_sup * p_xyz * len.powf(beta));
            (Some(g4), Some(g5), Some(g6_from(k, g3, nz)))
        }
        None => (None, None, None),
    };
    Ok(GValues { g1, g2, g3, g4, g5, g6, interval: (a, b) })
}

/// `ρ_{η,b,σ}`, `Λ_y`, `M_{η,y}` and `Δ̃_y`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AprioriBounds {
    pub rho_eta_b_sigma: f64,
    pub lambda_y: f64,
    pub m_eta_y: f64,
    pub delta_tilde_y: f64,
    pub k: f64,
    pub eta_norm: f64,
    pub b_term: f64,
    pub sigma_sup: f64,
    pub dsigma_sup: f64,
    pub dsigma_lambda: f64,
    pub y_norm: f64,
    pub yy_norm: f64,
}

/// Raw inputs of [`AprioriBounds`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AprioriInputs {
    pub eta_norm: f64,
    pub eta0: f64,
    pub sup_b: f64,
    pub sup_sigma: f64,
    pub sup_dsigma: f64,
    pub lambda_dsigma: f64,
    pub y_norm: f64,
    pub yy_norm: f64,
    pub t_end: f64,
    pub r0: f64,
    pub beta: f64,
}

pub fn rho_eta_b_sigma(i: &AprioriInputs) -> f64 {
    2.0 * i.eta_norm + i.sup_b * i.t_end.powf(1.0 - i.beta) + i.sup_sigma + i.sup_dsigma + i.lambda_dsigma
}

pub fn lambda_y(y_norm: f64, yy_norm: f64) -> f64 {
    y_norm + 1f64.max(y_norm * y_norm + yy_norm)
}

pub fn m_eta_y(eta0: f64, t_end: f64, r0: f64, k_rho_lambda: f64, beta: f64) -> f64 {
    eta0 + (t_end + r0) * k_rho_lambda.powf(1.0 / beta) + 1.0
}

impl AprioriBounds {
    pub fn from_inputs(i: &AprioriInputs, k: f64) -> Self {
        let rho = rho_eta_b_sigma(i);
        let lam = lambda_y(i.y_norm, i.yy_norm);
        let krl = k * rho * lam;
        AprioriBounds {
            rho_eta_b_sigma: rho,
            lambda_y: lam,
            m_eta_y: m_eta_y(i.eta0, i.t_end, i.r0, krl, i.beta),
            delta_tilde_y: krl.powf(-1.0 / i.beta),
            k,
            eta_norm: i.eta_norm,
            b_term: i.sup_b * i.t_end.powf(1.0 - i.beta),
            sigma_sup: i.sup_sigma,
            dsigma_sup: i.sup_dsigma,
            dsigma_lambda: i.lambda_dsigma,
            y_norm: i.y_norm,
            yy_norm: i.yy_norm,
        }
    }
}

/// A priori constants against one solved instance.
#[derive(Debug, Clone, PartialEq)]
pub struct AprioriReport {
    pub bounds: AprioriBounds,
    pub inputs: AprioriInputs,
    /// `‖x̂^r‖_{∞(0,T+r)}`
    pub sup_xhat: f64,
    /// `‖x̂^r‖_{β′(0,T+r)}`
    pub holder_xhat: f64,
    /// `‖x̂^r⊗y‖_{2β′}` over `[0, T]`.
    pub tensor_xhat: f64,
    pub sup_ok: bool,
    /// Smallest `K ≥ 1` making each bound hold: sup, `β′`, `2β′`.
    pub min_k: [f64; 3],
}

impl AprioriReport {
    pub fn min_k_all(&self) -> f64 {
        self.min_k.iter().copied().fold(1.0, f64::max)
    }
}

pub fn apriori_inputs(p: &DelayProblem) -> Result<AprioriInputs> {
    let beta = p.exps.beta();
    let t_end = p.t_end();
    let yy = p.driver.yy();
    Ok(AprioriInputs {
        eta_norm: holder_norm_full(&p.eta, beta)?,
        eta0: euclid(p.eta0()),
        sup_b: p.coeff.sup_b(t_end),
        sup_sigma: p.coeff.sup_sigma(),
        sup_dsigma: p.coeff.sup_dsigma(),
        lambda_dsigma: p.coeff.lambda_norm_dsigma(p.exps.lambda()),
        y_norm: holder_norm(yy.right(), beta, 0.0, t_end)?,
        yy_norm: two_param_norm(yy, 2.0 * beta, 0.0, t_end)?,
        t_end,
        r0: p.r0,
        beta,
    })
}

/// Smallest `K ≥ 1` with `lhs ≤ bound(K)`, for `bound` increasing in `K`.
fn min_k_for(lhs: f64, bound: impl Fn(f64) -> f64) -> f64 {
    if lhs <= bound(1.0) {
        return 1.0;
    }
    let mut hi = 2.0;
    while bound(hi) < lhs {
        hi *= 2.0;
        if !hi.is_finite() || hi > 1e300 {
            return f64::INFINITY;
        }
    }
    let mut lo = hi / 2.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if bound(mid) >= lhs {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo <= 1e-12 * hi {
            break;
        }
    }
    hi
}

pub fn apriori(p: &DelayProblem, res: &SolveResult, k: f64) -> Result<AprioriReport> {
    let inputs = apriori_inputs(p)?;
    let bounds = AprioriBounds::from_inputs(&inputs, k);
    let bp = p.exps.beta_prime();
    // x̂^r on [0, T + r] is x^r on [−r, T]
    let g = *res.x.grid();
    let sup_xhat = sup_norm(&res.x, g.t0(), g.end())?;
    let holder_xhat = holder_norm_full(&res.x, bp)?;
    let (_, th) = shifted_solution(p, res)?;
    let tensor_xhat = two_param_norm(&th, 2.0 * bp, 0.0, p.t_end())?;

    let rho = bounds.rho_eta_b_sigma;
    let lam = bounds.lambda_y;
    let (t_end, r0, beta, eta0) = (inputs.t_end, inputs.r0, inputs.beta, inputs.eta0);
    let m_of = move |k: f64| m_eta_y(eta0, t_end, r0, k * rho * lam, beta);
    let min_k = [
        min_k_for(sup_xhat, m_of),
        min_k_for(holder_xhat, |k| k * rho * lam * (1.0 + 2.0 * m_of(k))),
        min_k_for(tensor_xhat, |k| {
            k * rho * lam * (2.0 + (t_end + r0) * (k * rho * lam).powf(1.0 / beta))
        }),
    ];
    Ok(AprioriReport { sup_ok: sup_xhat <= bounds.m_eta_y, bounds, inputs, sup_xhat, holder_xhat, tensor_xhat, min_k })
}

/// Inputs of the delay proposition's `ρ`; suprema over `r ≤ r0` are taken over the studied lags.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DelayPropInputs {
    pub sup_b: f64,
    pub sup_sigma: f64,
    pub sup_dsigma: f64,
    pub lambda_dsigma: f64,
    pub sup_d2sigma: f64,
    pub lambda_d2sigma: f64,
    /// `sup_r ‖x^r‖_{β′}`
    pub sup_xr: f64,
    /// `sup_r ‖x̂^r‖_{β′}`
    pub sup_xhat: f64,
    /// `‖η‖_{β′(−r0,0)}`
    pub eta_bp: f64,
    pub t_end: f64,
}

/// The delay proposition's `ρ` (distinct from `ρ_{η,b,σ}`).
pub fn rho_delay_prop(i: &DelayPropInputs, exps: &HolderExponents) -> f64 {
    let (bp, eps, lam) = (exps.beta_prime(), exps.epsilon(), exps.lambda());
    let t = i.t_end;
    let tb = t.powf(bp);
    let inner = 1.0
        + 3.0 * i.sup_b * t.powf(1.0 - bp)
        + 3.0 * i.sup_sigma * (1.0 + tb)
        + 2.0 * i.sup_dsigma * (1.0 + tb)
        + 3.0 * i.sup_dsigma * t.powf(bp - eps)
        + i.lambda_dsigma * (2.0 * i.sup_xr.powf(lam) + i.eta_bp.powf(lam)) * t.powf((lam + 1.0) * bp - eps)
        + i.sup_d2sigma * tb * (1.0 + tb)
        + 2.0 * i.lambda_d2sigma * i.sup_xhat.powf(lam) * t.powf((lam + 1.0) * bp);
    inner * (1.0 + t.powf(eps))
}

/// `Λ_r = max(1, sup ‖x^r‖_{β′}) (‖(y−y_{·−r})⊗y‖ + ‖y_{·−r}⊗(y−y_{·−r})‖)`.
pub fn lambda_r(sup_xr: f64, diff_by_norm: f64, shifted_by_diff_norm: f64) -> f64 {
    sup_xr.max(1.0) * (diff_by_norm + shifted_by_diff_norm)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::path_algebra::Grid;

    #[test]
    fn lambda_and_m_examples() {
        assert_eq!(lambda_y(1.0, 0.5), 2.5);
        assert_eq!(lambda_y(0.1, 0.0), 1.1);
        // independent evaluation: 1.2 · 2.5^{2.5} + 1
        let want = 1.2 * (2.5f64 * 2.5 * 2.5f64.sqrt()) + 1.0;
        let m = m_eta_y(0.0, 1.0, 0.2, 2.5, 0.4);
        assert!((m - want).abs() < 1e-12);
        assert!((m - 12.858).abs() < 1e-3);
    }

    #[test]
    fn rho_for_tanh_without_drift_or_history() {
        let tanh = CoefficientModel::builtin("tanh_diag", 1, 1).unwrap();
        let i = AprioriInputs {
            eta_norm: 0.0,
            eta0: 0.0,
            sup_b: tanh.sup_b(1.0),
            sup_sigma: tanh.sup_sigma(),
            sup_dsigma: tanh.sup_dsigma(),
            lambda_dsigma: tanh.lambda_norm_dsigma(0.9),
            y_norm: 1.0,
            yy_norm: 0.5,
            t_end: 1.0,
            r0: 0.2,
            beta: 0.4,
        };
        let b = AprioriBounds::from_inputs(&i, 1.0);
        assert_eq!(b.rho_eta_b_sigma, 2.0 + tanh.lambda_norm_dsigma(0.9));
        assert!(b.m_eta_y >= 1.0);
        assert!(b.delta_tilde_y <= (b.k * i.sup_sigma).powf(-1.0 / i.beta));
    }

    #[test]
    fn min_k_search() {
        assert_eq!(min_k_for(0.5, |k| k), 1.0);
        assert!((min_k_for(7.3, |k| k) - 7.3).abs() < 1e-9);
        assert!((min_k_for(100.0, |k| k * k) - 10.0).abs() < 1e-9);
        assert_eq!(min_k_for(1.0, |_| 0.0), f64::INFINITY);
    }

    fn path(f: impl Fn(f64) -> f64) -> GridPath {
        GridPath::from_fn(Grid::uniform(0.0, 1.0, 64).unwrap(), 1, |t, o| o[0] = f(t)).unwrap()
    }

    #[test]
    fn flat_coefficients_give_zero() {
        let x = path(|t| t.sin());
        let y = path(|t| t * t);
        let xy = TwoParamTensor::from_quadrature(&x, &y).unwrap();
        let yz = TwoParamTensor::from_quadrature(&y, &x).unwrap();
        let c = CoefficientModel::builtin("constant", 1, 1).unwrap();
        let exps = HolderExponents::default();
        let g = g_functionals(
            FNorms::of(&c, exps.lambda()),
            GInputs { xy: &xy, x_tilde: &x, yz: Some(&yz) },
            &exps,
            0.0,
            1.0,
            1.0,
        )
        .unwrap();
        assert_eq!((g.g1, g.g2, g.g3), (0.0, 0.0, 0.0));
        assert_eq!(g.g4().unwrap(), 0.0);
        assert_eq!(g.g6().unwrap(), 0.0);
    }

    #[test]
    fn g6_product_and_missing_tensor() {
        assert_eq!(g6_from(1.0, 2.0, 3.0), 6.0);
        let x = path(|t| t);
        let xy = TwoParamTensor::from_quadrature(&x, &x).unwrap();
        let tanh = CoefficientModel::builtin("tanh_diag", 1, 1).unwrap();
        let exps = HolderExponents::default();
        let f = FNorms::of(&tanh, exps.lambda());
        let g = g_functionals(f, GInputs { xy: &xy, x_tilde: &x, yz: None }, &exps, 0.0, 1.0, 2.0).unwrap();
        assert!(matches!(g.g4(), Err(Error::MissingTensor(_))));
        assert!(matches!(g.g5(), Err(Error::MissingTensor(_))));
        let g = g_functionals(f, GInputs { xy: &xy, x_tilde: &x, yz: Some(&xy) }, &exps, 0.0, 1.0, 2.0).unwrap();
        let nz = holder_norm(&x, exps.beta(), 0.0, 1.0).unwrap();
        assert_eq!(g.g6().unwrap(), 2.0 * g.g3 * nz);
        // G³ = K (‖f′‖ + ‖f″‖ ‖x̃‖ (b−a)^β) with ‖x̃‖_β = 1 for x̃ = t on [0, 1]
        assert!((g.g3 - 2.0 * (1.0 + tanh.sup_d2sigma())).abs() < 1e-12);
    }

    #[test]
    fn rho_delay_prop_reduces_for_zero_data() {
        let i = DelayPropInputs {
            sup_b: 0.0,
            sup_sigma: 0.0,
            sup_dsigma: 0.0,
            lambda_dsigma: 0.0,
            sup_d2sigma: 0.0,
            lambda_d2sigma: 0.0,
            sup_xr: 0.0,
            sup_xhat: 0.0,
            eta_bp: 0.0,
            t_end: 1.0,
        };
        // only the leading 1 survives, times (1 + T^ε)
        assert_eq!(rho_delay_prop(&i, &HolderExponents::default()), 2.0);
        assert_eq!(lambda_r(0.5, 0.25, 0.5), 0.75);
        assert_eq!(lambda_r(3.0, 0.25, 0.5), 2.25);
    }
}
