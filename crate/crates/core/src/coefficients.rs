//! Built-in coefficient models `σ`, `b` with their derivative bounds.
//!
//! Every builtin acts diagonally: `σ_{ij}(x) = s·f(x_i)` for `i = j < min(d, m)`
//! and zero elsewhere. Matrix and tensor norms are Frobenius norms, so the
//! reported sups pick up a factor `√min(d, m)`.

use crate::error::{Error, Result};
use crate::path_algebra::HolderExponents;

/// Value of `sup |tanh″|`, attained where `tanh² = 1/3`.
pub const TANH_D2_SUP: f64 = 0.769_800_358_919_501;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Builtin {
    TanhDiag,
    Sine,
    Constant,
    AffineTest,
}

impl Builtin {
    pub const ALL: [Builtin; 4] = [Builtin::TanhDiag, Builtin::Sine, Builtin::Constant, Builtin::AffineTest];

    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "tanh_diag" => Ok(Builtin::TanhDiag),
            "sine" => Ok(Builtin::Sine),
            "constant" => Ok(Builtin::Constant),
            "affine_test" => Ok(Builtin::AffineTest),
            other => Err(Error::UnknownModel(other.to_string())),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Builtin::TanhDiag => "tanh_diag",
            Builtin::Sine => "sine",
            Builtin::Constant => "constant",
            Builtin::AffineTest => "affine_test",
        }
    }

    /// `(f, f′, f″, f‴)` at `u`, unscaled.
    fn eval(&self, u: f64) -> [f64; 4] {
        match self {
            Builtin::TanhDiag => {
                let t = u.tanh();
                let s2 = 1.0 - t * t;
                [t, s2, -2.0 * t * s2, s2 * (6.0 * t * t - 2.0)]
            }
            Builtin::Sine => {
                let (s, c) = u.sin_cos();
                [s, c, -s, -c]
            }
            Builtin::Constant => [1.0, 0.0, 0.0, 0.0],
            Builtin::AffineTest => [u, 1.0, 0.0, 0.0],
        }
    }

    /// `(sup|f|, sup|f′|, sup|f″|, sup|f‴|, osc f′, osc f″)`; `sup|f|` is infinite for the affine model.
    fn bounds(&self) -> [f64; 6] {
        match self {
            Builtin::TanhDiag => [1.0, 1.0, TANH_D2_SUP, 2.0, 1.0, 2.0 * TANH_D2_SUP],
            Builtin::Sine => [1.0, 1.0, 1.0, 1.0, 2.0, 2.0],
            Builtin::Constant => [1.0, 0.0, 0.0, 0.0, 0.0, 0.0],
            Builtin::AffineTest => [f64::INFINITY, 1.0, 0.0, 0.0, 0.0, 0.0],
        }
    }
}

/// `b_i(t, x) = a + c·t − κ·tanh(x_i)`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Drift {
    pub a: f64,
    pub c: f64,
    pub kappa: f64,
}

impl Drift {
    pub fn is_zero(&self) -> bool {
        self.a == 0.0 && self.c == 0.0 && self.kappa == 0.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientModel {
    pub builtin: Builtin,
    pub d: usize,
    pub m: usize,
    pub scale: f64,
    pub drift: Drift,
}

impl CoefficientModel {
    pub fn new(builtin: Builtin, d: usize, m: usize, scale: f64, drift: Drift) -> Result<Self> {
        if d == 0 || m == 0 {
            return Err(Error::invalid("coefficient dimensions must be positive"));
        }
        if !scale.is_finite() || ![drift.a, drift.c, drift.kappa].iter().all(|v| v.is_finite()) {
            return Err(Error::invalid("coefficient parameters must be finite"));
        }
        Ok(CoefficientModel { builtin, d, m, scale, drift })
    }

    pub fn builtin(name: &str, d: usize, m: usize) -> Result<Self> {
        CoefficientModel::new(Builtin::parse(name)?, d, m, 1.0, Drift::default())
    }

    pub fn with_scale(mut self, scale: f64) -> Self {
        self.scale = scale;
        self
    }

    pub fn with_drift(mut self, drift: Drift) -> Self {
        self.drift = drift;
        self
    }

    fn k(&self) -> usize {
        self.d.min(self.m)
    }

    /// `σ(x)` as a row-major `d×m` matrix.
    pub fn sigma(&self, x: &[f64], out: &mut [f64]) {
        out.fill(0.0);
        for i in 0..self.k() {
            out[i * self.m + i] = self.scale * self.builtin.eval(x[i])[0];
        }
    }

    /// `Dσ(x)` with layout `[i][j][l] = ∂_l σ_{ij}`.
    pub fn dsigma(&self, x: &[f64], out: &mut [f64]) {
        out.fill(0.0);
        let (d, m) = (self.d, self.m);
        for i in 0..self.k() {
            out[(i * m + i) * d + i] = self.scale * self.builtin.eval(x[i])[1];
        }
    }

    /// `D²σ(x)` with layout `[i][j][l][p] = ∂_l ∂_p σ_{ij}`.
    pub fn d2sigma(&self, x: &[f64], out: &mut [f64]) {
        out.fill(0.0);
        let (d, m) = (self.d, self.m);
        for i in 0..self.k() {
            out[((i * m + i) * d + i) * d + i] = self.scale * self.builtin.eval(x[i])[2];
        }
    }

    /// `Σ_{j,l,q} ∂_l σ_{ij}(x) v_{lq} a_{qj}` added into `out`.
    ///
    /// `v` is `d×n` and `a` is `n×m`; with `n = m` this is the level-2
    /// correction against `y⊗y`, with `n = 1` the one against `τ⊗y`.
    pub fn add_correction(&self, x: &[f64], v: &[f64], a: &[f64], n: usize, out: &mut [f64]) {
        let m = self.m;
        for i in 0..self.k() {
            let ds = self.scale * self.builtin.eval(x[i])[1];
            if ds == 0.0 {
                continue;
            }
            // only ∂_i σ_ii is nonzero
            let mut acc = 0.0;
            for q in 0..n {
                acc += v[i * n + q] * a[q * m + i];
            }
            out[i] += ds * acc;
        }
    }

    pub fn b(&self, t: f64, x: &[f64], out: &mut [f64]) {
        let Drift { a, c, kappa } = self.drift;
        for (o, xi) in out.iter_mut().zip(x) {
            *o = a + c * t - kappa * xi.tanh();
        }
    }

    pub fn sup_sigma(&self) -> f64 {
        if self.scale == 0.0 {
            return 0.0;
        }
        self.scale.abs() * self.builtin.bounds()[0] * (self.k() as f64).sqrt()
    }

    pub fn sup_dsigma(&self) -> f64 {
        self.scale.abs() * self.builtin.bounds()[1] * (self.k() as f64).sqrt()
    }

    pub fn sup_d2sigma(&self) -> f64 {
        self.scale.abs() * self.builtin.bounds()[2] * (self.k() as f64).sqrt()
    }

    /// Bound on the λ-Hölder constant of `f^{(order)}` lifted to the diagonal model:
    /// `|g(u) − g(v)| ≤ min(L|u−v|, osc) ≤ L^λ osc^{1−λ} |u−v|^λ` per entry,
    /// then `Σ|u_i−v_i|^{2λ} ≤ k^{1−λ} |u−v|^{2λ}`.
    fn lambda_bound(&self, lip: f64, osc: f64, lambda: f64) -> f64 {
        if lip == 0.0 || osc == 0.0 {
            return 0.0;
        }
        let k = self.k() as f64;
        self.scale.abs() * lip.powf(lambda) * osc.powf(1.0 - lambda) * k.powf((1.0 - lambda) / 2.0)
    }

    pub fn lambda_norm_dsigma(&self, lambda: f64) -> f64 {
        let b = self.builtin.bounds();
        self.lambda_bound(b[2], b[4], lambda)
    }

    pub fn lambda_norm_d2sigma(&self, lambda: f64) -> f64 {
        let b = self.builtin.bounds();
        self.lambda_bound(b[3], b[5], lambda)
    }

    /// `sup_{t ≤ T, x} |b(t, x)|`.
    pub fn sup_b(&self, t_end: f64) -> f64 {
        let Drift { a, c, kappa } = self.drift;
        // each component ranges over a + c·t − κ·(−1, 1)
        (a.abs().max((a + c * t_end).abs()) + kappa.abs()) * (self.d as f64).sqrt()
    }

    /// Lipschitz constant of `x ↦ b(t, x)` on `|x| ≤ N` (uniform in `N` for the builtins).
    pub fn lipschitz(&self, _n: f64) -> f64 {
        self.drift.kappa.abs()
    }

    /// Whether σ and b are bounded.
    pub fn satisfies_h3(&self) -> bool {
        self.sup_sigma().is_finite()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Lattice {
    pub radius: f64,
    pub points: usize,
}

impl Default for Lattice {
    fn default() -> Self {
        Lattice { radius: 10.0, points: 401 }
    }
}

impl Lattice {
    pub fn nodes(&self) -> Vec<f64> {
        let n = self.points.max(2);
        (0..n).map(|p| -self.radius + 2.0 * self.radius * p as f64 / (n - 1) as f64).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HypothesisReport {
    pub sampled_sup_sigma: f64,
    pub sampled_sup_dsigma: f64,
    pub sampled_sup_d2sigma: f64,
    pub empirical_lambda_dsigma: f64,
    pub empirical_lambda_d2sigma: f64,
    pub reported_lambda_dsigma: f64,
    pub reported_lambda_d2sigma: f64,
    pub lipschitz_estimate: f64,
    /// Largest relative gap between analytic and central-difference derivatives.
    pub derivative_error: f64,
    pub bounds_dominate: bool,
    pub h3: bool,
    pub flags: Vec<String>,
}

impl HypothesisReport {
    pub fn passes(&self) -> bool {
        self.bounds_dominate && self.derivative_error <= 1e-6
    }
}

fn frob(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}

fn frob_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| (p - q) * (p - q)).sum::<f64>().sqrt()
}

/// Samples the model along the diagonal `u·(1, …, 1)` of a scalar lattice.
pub fn validate_hypotheses(model: &CoefficientModel, exps: &HolderExponents, lattice: &Lattice) -> HypothesisReport {
    let (d, m) = (model.d, model.m);
    let lambda = exps.lambda();
    let nodes = lattice.nodes();
    let pts: Vec<Vec<f64>> = nodes.iter().map(|u| vec![*u; d]).collect();
    let eval = |x: &[f64]| {
        let mut s = vec![0.0; d * m];
        let mut ds = vec![0.0; d * m * d];
        let mut d2 = vec![0.0; d * m * d * d];
        model.sigma(x, &mut s);
        model.dsigma(x, &mut ds);
        model.d2sigma(x, &mut d2);
        (s, ds, d2)
    };
    let vals: Vec<_> = pts.iter().map(|x| eval(x)).collect();

    let mut sup = [0.0_f64; 3];
    for (s, ds, d2) in &vals {
        sup[0] = sup[0].max(frob(s));
        sup[1] = sup[1].max(frob(ds));
        sup[2] = sup[2].max(frob(d2));
    }

    let mut hol = [0.0_f64; 2];
    for p in 0..pts.len() {
        for q in p + 1..pts.len() {
            let gap = frob_diff(&pts[p], &pts[q]).powf(lambda);
            hol[0] = hol[0].max(frob_diff(&vals[p].1, &vals[q].1) / gap);
            hol[1] = hol[1].max(frob_diff(&vals[p].2, &vals[q].2) / gap);
        }
    }

    // central differences along each coordinate
    let fd_h = 1e-5;
    let mut derr = 0.0_f64;
    for (x, (_, ds, d2)) in pts.iter().zip(&vals) {
        for l in 0..d {
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[l] += fd_h;
            xm[l] -= fd_h;
            let (sp, dsp, _) = eval(&xp);
            let (sm, dsm, _) = eval(&xm);
            for ij in 0..d * m {
                let fd = (sp[ij] - sm[ij]) / (2.0 * fd_h);
                let an = ds[ij * d + l];
                derr = derr.max((fd - an).abs() / an.abs().max(1.0));
                for p in 0..d {
                    let fd2 = (dsp[ij * d + p] - dsm[ij * d + p]) / (2.0 * fd_h);
                    let an2 = d2[(ij * d + p) * d + l];
                    derr = derr.max((fd2 - an2).abs() / an2.abs().max(1.0));
                }
            }
        }
    }

    let mut lip = 0.0_f64;
    let mut bp = vec![0.0; d];
    let mut bq = vec![0.0; d];
    for p in 0..pts.len() - 1 {
        model.b(0.0, &pts[p], &mut bp);
        model.b(0.0, &pts[p + 1], &mut bq);
        lip = lip.max(frob_diff(&bp, &bq) / frob_diff(&pts[p], &pts[p + 1]));
    }

    let reported = [model.lambda_norm_dsigma(lambda), model.lambda_norm_d2sigma(lambda)];
    let slack = |emp: f64, rep: f64| emp <= rep * (1.0 + 1e-9) + 1e-12;
    let bounds_dominate = slack(sup[0], model.sup_sigma())
        && slack(sup[1], model.sup_dsigma())
        && slack(sup[2], model.sup_d2sigma())
        && slack(hol[0], reported[0])
        && slack(hol[1], reported[1])
        && slack(lip, model.lipschitz(lattice.radius));

    let mut flags = Vec::new();
    let h3 = model.satisfies_h3();
    if !h3 {
        flags.push("violates H3 (unbounded)".to_string());
    }
    if lambda <= 1.0 / exps.beta() - 2.0 {
        flags.push(format!("lambda {lambda} not above 1/beta - 2"));
    }
    HypothesisReport {
        sampled_sup_sigma: sup[0],
        sampled_sup_dsigma: sup[1],
        sampled_sup_d2sigma: sup[2],
        empirical_lambda_dsigma: hol[0],
        empirical_lambda_d2sigma: hol[1],
        reported_lambda_dsigma: reported[0],
        reported_lambda_d2sigma: reported[1],
        lipschitz_estimate: lip,
        derivative_error: derr,
        bounds_dominate,
        h3,
        flags,
    }
}
