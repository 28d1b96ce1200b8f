//! Level-2 one-step schemes for the no-delay and delay equations.
//!
//! Both schemes co-construct the solution tensor `x⊗y` one step at a time,
//! so the returned triple is Chen-consistent by construction.

use std::sync::Arc;
use std::time::Instant;

use crate::coefficients::CoefficientModel;
use crate::error::{Error, Result};
use crate::path_algebra::{shift_path, Grid, GridPath, HolderExponents, NormReport, TwoParamTensor};
use crate::signals::{delayed_cross_tensors, generate, DelayedTensors, Signal, SignalSpec};

/// Driver data on the solver grid, coarsened from a fine-grid signal.
#[derive(Debug, Clone)]
pub struct Driver {
    fine: Signal,
    factor: usize,
    /// `y` on `[−r_max, T]`.
    y: GridPath,
    /// `y⊗y` on `[0, T]`.
    yy: TwoParamTensor,
    /// `τ⊗y` on `[0, T]`.
    time_y: TwoParamTensor,
}

impl Driver {
    pub fn new(signal: Signal, solver_n: usize) -> Result<Self> {
        let g = *signal.grid();
        let t_end = g.end();
        let zero = g.index_of(0.0)?;
        let fine_n = g.steps() - zero;
        if solver_n == 0 || fine_n % solver_n != 0 {
            return Err(Error::NonDivisibleFactor { factor: solver_n, n: fine_n });
        }
        let factor = fine_n / solver_n;
        if zero % factor != 0 {
            return Err(Error::invalid(format!(
                "left extension of {zero} fine steps is not a multiple of the coarsening factor {factor}"
            )));
        }
        let pos = signal.restrict(0.0, t_end)?;
        let yy = pos.tensor.coarsen(factor)?;
        let time_y = pos.time_tensor()?.coarsen(factor)?;
        let y = signal.path.coarsen(factor)?;
        Ok(Driver { fine: signal, factor, y, yy, time_y })
    }

    pub fn fine(&self) -> &Signal {
        &self.fine
    }

    pub fn factor(&self) -> usize {
        self.factor
    }

    pub fn y(&self) -> &GridPath {
        &self.y
    }

    pub fn yy(&self) -> &TwoParamTensor {
        &self.yy
    }

    pub fn time_y(&self) -> &TwoParamTensor {
        &self.time_y
    }

    /// Solver grid on `[0, T]`.
    pub fn grid(&self) -> &Grid {
        self.yy.grid()
    }

    pub fn t_end(&self) -> f64 {
        self.grid().end()
    }

    pub fn r_max(&self) -> f64 {
        -self.y.grid().t0()
    }

    /// Delayed cross tensors for lag `r`, built on the fine grid and aggregated.
    pub fn delayed(&self, r: f64) -> Result<DelayedTensors> {
        self.grid().steps_in(r)?;
        let pos = self.fine.restrict(0.0, self.t_end())?;
        delayed_cross_tensors(&pos.path, &pos.tensor, r)?.coarsen(self.factor)
    }
}

/// Initial path `η_t = value + slope·t` in every component.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Eta {
    pub value: f64,
    pub slope: f64,
}

impl Eta {
    pub fn at(&self, t: f64) -> f64 {
        self.value + self.slope * t
    }
}

#[derive(Debug, Clone)]
pub struct DelayProblem {
    pub exps: HolderExponents,
    pub r: f64,
    pub r0: f64,
    /// `η` on `[−r0, 0]`, sampled on the solver grid.
    pub eta: GridPath,
    pub coeff: CoefficientModel,
    pub driver: Arc<Driver>,
    pub delayed: Option<DelayedTensors>,
}

impl DelayProblem {
    pub fn new(
        exps: HolderExponents,
        r: f64,
        r0: f64,
        eta: Eta,
        coeff: CoefficientModel,
        driver: Arc<Driver>,
    ) -> Result<Self> {
        let yg = *driver.y().grid();
        let h = yg.step();
        if coeff.m != driver.y().dim() {
            return Err(Error::invalid(format!(
                "coefficients expect a {}-dimensional driver, signal has {}",
                coeff.m,
                driver.y().dim()
            )));
        }
        if !(r0 > 0.0) || r0 > driver.r_max() + 1e-9 * h {
            return Err(Error::invalid(format!(
                "r0 = {r0} must be positive and covered by the signal extension {}",
                driver.r_max()
            )));
        }
        let steps0 = yg.steps_in(r0)?;
        let zero = yg.index_of(0.0)?;
        let eta_grid = yg.sub(zero - steps0, steps0)?;
        let eta = GridPath::from_fn(eta_grid, coeff.d, |t, out| out.fill(eta.at(t)))?;
        let mut p = DelayProblem { exps, r: 0.0, r0, eta, coeff, driver, delayed: None };
        p.set_delay(r)?;
        Ok(p)
    }

    fn set_delay(&mut self, r: f64) -> Result<()> {
        let m = self.driver.grid().steps_in(r)?;
        if r > self.r0 + 1e-9 * self.step() {
            return Err(Error::invalid(format!("r = {r} exceeds r0 = {}", self.r0)));
        }
        if m >= self.solver_n() {
            return Err(Error::invalid(format!("r = {r} must be smaller than T")));
        }
        self.r = m as f64 * self.step();
        self.delayed = if m == 0 { None } else { Some(self.driver.delayed(r)?) };
        Ok(())
    }

    /// The same problem with another lag.
    pub fn with_delay(&self, r: f64) -> Result<Self> {
        let mut p = DelayProblem { delayed: None, ..self.clone() };
        p.set_delay(r)?;
        Ok(p)
    }

    pub fn step(&self) -> f64 {
        self.driver.grid().step()
    }

    pub fn solver_n(&self) -> usize {
        self.driver.grid().steps()
    }

    pub fn t_end(&self) -> f64 {
        self.driver.t_end()
    }

    /// Lag in solver steps.
    pub fn lag_steps(&self) -> usize {
        (self.r / self.step()).round() as usize
    }

    pub fn eta0(&self) -> &[f64] {
        self.eta.point(self.eta.grid().steps())
    }
}

/// Everything needed to build a [`DelayProblem`] except the random seed.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemSpec {
    pub signal: SignalSpec,
    pub coeff: CoefficientModel,
    pub exps: HolderExponents,
    pub eta: Eta,
    pub solver_n: usize,
    pub r: f64,
    pub r0: f64,
}

impl ProblemSpec {
    pub fn step(&self) -> f64 {
        self.signal.t_end / self.solver_n as f64
    }

    /// Grid checks that need no signal.
    pub fn validate(&self) -> Result<()> {
        let s = &self.signal;
        if self.solver_n == 0 || s.fine_n % self.solver_n != 0 {
            return Err(Error::NonDivisibleFactor { factor: self.solver_n, n: s.fine_n });
        }
        let h = self.step();
        self.check_lag(self.r)?;
        crate::path_algebra::steps_in(self.r0, h)?;
        crate::path_algebra::steps_in(s.r_max, h)?;
        if !(self.r0 > 0.0) || self.r0 > s.r_max + 1e-9 * h {
            return Err(Error::invalid(format!("r0 = {} must lie in (0, r_max = {}]", self.r0, s.r_max)));
        }
        if self.coeff.m != s.dim {
            return Err(Error::invalid(format!(
                "coefficients expect a {}-dimensional driver, signal has {}",
                self.coeff.m, s.dim
            )));
        }
        Ok(())
    }

    /// A lag must be a solver-grid multiple in `[0, min(r0, T))`.
    pub fn check_lag(&self, r: f64) -> Result<()> {
        let h = self.step();
        let m = crate::path_algebra::steps_in(r, h)?;
        if r > self.r0 + 1e-9 * h {
            return Err(Error::invalid(format!("r = {r} exceeds r0 = {}", self.r0)));
        }
        if m >= self.solver_n {
            return Err(Error::invalid(format!("r = {r} must be smaller than T")));
        }
        Ok(())
    }

    pub fn driver(&self, seed: u64) -> Result<Arc<Driver>> {
        let spec = SignalSpec { seed, ..self.signal.clone() };
        Ok(Arc::new(Driver::new(generate(&spec)?, self.solver_n)?))
    }

    pub fn build(&self, seed: u64) -> Result<DelayProblem> {
        self.validate()?;
        self.build_with(self.driver(seed)?)
    }

    pub fn build_with(&self, driver: Arc<Driver>) -> Result<DelayProblem> {
        DelayProblem::new(self.exps, self.r, self.r0, self.eta, self.coeff.clone(), driver)
    }
}

#[derive(Debug, Clone)]
pub struct SolveResult {
    /// `x` on `[−r, T]` (`[0, T]` without delay).
    pub x: GridPath,
    /// `x⊗y` on the same grid as `x`.
    pub x_tensor: TwoParamTensor,
    /// Norms of `(x, y, x⊗y)` on `[0, T]` with exponent `β′`.
    pub diagnostics: NormReport,
    pub runtime_ms: f64,
    pub r: f64,
}

impl SolveResult {
    /// `x` restricted to `[0, T]`.
    pub fn forward_path(&self) -> Result<GridPath> {
        self.x.restrict(0.0, self.x.grid().end())
    }

    pub fn forward_tensor(&self) -> Result<TwoParamTensor> {
        self.x_tensor.restrict(0.0, self.x.grid().end())
    }
}

pub fn solve_nodelay(p: &DelayProblem) -> Result<SolveResult> {
    integrate(p, 0)
}

pub fn solve_delay(p: &DelayProblem) -> Result<SolveResult> {
    let m = p.lag_steps();
    if m > 0 && p.delayed.is_none() {
        return Err(Error::MissingTensor("y_{·−r}⊗y"));
    }
    integrate(p, m)
}

fn integrate(p: &DelayProblem, m: usize) -> Result<SolveResult> {
    let start = Instant::now();
    let coeff = &p.coeff;
    let (d, dy_dim) = (coeff.d, coeff.m);
    let dm = d * dy_dim;
    let drv = &*p.driver;
    let g = *drv.grid();
    let (n, h) = (g.steps(), g.step());
    let r = m as f64 * h;
    let ypos = drv.yy().right();
    let yy = drv.yy();
    let delayed = if m > 0 { p.delayed.as_ref().map(|dt| &dt.shifted_by) } else { None };

    // x at node k − m lives at xs[k]; the first m + 1 entries are η on [−r, 0]
    let mut xs = vec![0.0; (n + m + 1) * d];
    let eta_steps = p.eta.grid().steps();
    for k in 0..=m {
        xs[k * d..(k + 1) * d].copy_from_slice(p.eta.point(eta_steps - m + k));
    }
    let mut steps = vec![0.0; (n + m) * dm];

    let ywin = if m > 0 { drv.y().restrict(-r, g.end())? } else { ypos.clone() };
    for k in 0..m {
        let dx: Vec<f64> = (0..d).map(|i| xs[(k + 1) * d + i] - xs[k * d + i]).collect();
        let dyk = ywin.increment(k, k + 1);
        let out = &mut steps[k * dm..(k + 1) * dm];
        for i in 0..d {
            for j in 0..dy_dim {
                out[i * dy_dim + j] = 0.5 * dx[i] * dyk[j];
            }
        }
    }

    let mut sig = vec![0.0; dm];
    let mut v = vec![0.0; dm];
    let mut slope = vec![0.0; d];
    let mut bv = vec![0.0; d];
    let mut incr = vec![0.0; d];
    for k in 0..n {
        let (cur, next) = xs.split_at_mut((k + m + 1) * d);
        let xk = &cur[(k + m) * d..];
        let xd = &cur[k * d..(k + 1) * d];
        let dyk = ypos.increment(k, k + 1);
        coeff.b(g.time(k) + 0.5 * h, xk, &mut bv);
        coeff.sigma(xd, &mut sig);
        for i in 0..d {
            let mut acc = 0.0;
            for j in 0..dy_dim {
                acc += sig[i * dy_dim + j] * dyk[j];
            }
            incr[i] = bv[i] * h + acc;
        }
        match delayed {
            None => coeff.add_correction(xd, &sig, yy.step(k), dy_dim, &mut incr),
            Some(shifted_by) if k >= m => {
                coeff.sigma(&cur[(k - m) * d..(k - m + 1) * d], &mut v);
                coeff.add_correction(xd, &v, shifted_by.step(k - m), dy_dim, &mut incr);
            }
            Some(_) => {
                for i in 0..d {
                    slope[i] = (cur[(k + 1) * d + i] - cur[k * d + i]) / h;
                }
                coeff.add_correction(xd, &slope, drv.time_y().step(k), 1, &mut incr);
            }
        }
        for i in 0..d {
            let v = xk[i] + incr[i];
            if !v.is_finite() {
                return Err(Error::BlowUp(k));
            }
            next[i] = v;
        }
        tensor_step(&sig, yy.step(k), &bv, &dyk, h, d, dy_dim, &mut steps[(k + m) * dm..(k + m + 1) * dm]);
    }

    let x = GridPath::new(*ywin.grid(), d, xs)?;
    let x_tensor = TwoParamTensor::new(x.clone(), ywin, steps)?;
    let diagnostics = NormReport::compute(&x_tensor.restrict(0.0, g.end())?, p.exps.beta_prime(), 0.0, g.end())?;
    Ok(SolveResult { x, x_tensor, diagnostics, runtime_ms: start.elapsed().as_secs_f64() * 1e3, r })
}

/// `σ·A + ½ h b⊗Δy` for one step.
#[allow(clippy::too_many_arguments)]
fn tensor_step(sig: &[f64], a: &[f64], bv: &[f64], dyk: &[f64], h: f64, d: usize, m: usize, out: &mut [f64]) {
    for i in 0..d {
        for j in 0..m {
            let mut acc = 0.0;
            for q in 0..m {
                acc += sig[i * m + q] * a[q * m + j];
            }
            out[i * m + j] = acc + 0.5 * h * bv[i] * dyk[j];
        }
    }
}

/// `x̂^r_t = x^r_{t−r}` on `[0, T]` with its tensor `x̂^r⊗y`.
pub fn shifted_solution(p: &DelayProblem, res: &SolveResult) -> Result<(GridPath, TwoParamTensor)> {
    let h = p.step();
    if (res.r - p.r).abs() > 1e-9 * h {
        return Err(Error::invalid(format!("solution has r = {}, problem has r = {}", res.r, p.r)));
    }
    let m = p.lag_steps();
    if m == 0 {
        return Ok((res.forward_path()?, res.forward_tensor()?));
    }
    let shifted_by = &p.delayed.as_ref().ok_or(Error::MissingTensor("y_{·−r}⊗y"))?.shifted_by;
    let ypos = p.driver.yy().right();
    let g = *ypos.grid();
    let xhat = shift_path(&res.x, p.r)?.relabel(g)?;
    let (d, my) = (p.coeff.d, p.coeff.m);
    let dm = d * my;
    let mut steps = vec![0.0; g.steps() * dm];
    let mut sig = vec![0.0; dm];
    let mut bv = vec![0.0; d];
    for k in 0..g.steps() {
        let dyk = ypos.increment(k, k + 1);
        let out = &mut steps[k * dm..(k + 1) * dm];
        if k < m {
            let dx = xhat.increment(k, k + 1);
            for i in 0..d {
                for j in 0..my {
                    out[i * my + j] = 0.5 * dx[i] * dyk[j];
                }
            }
        } else {
            p.coeff.sigma(xhat.point(k - m), &mut sig);
            p.coeff.b(g.time(k) - p.r + 0.5 * h, xhat.point(k), &mut bv);
            tensor_step(&sig, shifted_by.step(k - m), &bv, &dyk, h, d, my, out);
        }
    }
    let tensor = TwoParamTensor::new(xhat.clone(), ypos.clone(), steps)?;
    Ok((xhat, tensor))
}
