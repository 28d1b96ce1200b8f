//! Driving signals with their level-2 data.
//!
//! Every signal is sampled on a fine grid covering `[−r_max, T]`, and its
//! area tensor is assembled from per-step trapezoid values. Trapezoid sums
//! telescope, so the diagonal identity `(y^i⊗y^i)_{s,t} = ½(y^i_t − y^i_s)²`
//! and the symmetrisation identity hold to rounding on every grid pair.
//!
//! Brownian increments come from a counter-based generator: the increment
//! over step `k` of component `i` depends only on `(seed, i, k)`. In
//! particular the path on `[0, T]` does not depend on the left extension.

use std::f64::consts::TAU;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::path_algebra::{shift_path_onto, Grid, GridPath, TwoParamTensor};

/// Stream offset separating Fourier phases from Brownian increments.
const PHASE_STREAM_BASE: u64 = 1 << 32;

#[derive(Debug, Clone, PartialEq)]
pub enum SignalKind {
    /// Brownian motion; `ito_correction` subtracts `½(t−s)` from the diagonal of `B⊗B`.
    Brownian { ito_correction: bool },
    /// `y^i(t) = Σ_p coeffs[i][p] t^p`.
    SmoothPoly { coeffs: Vec<Vec<f64>> },
    /// `y^i(t) = amp_i sin(2π freq_i t + phase_i)`.
    SmoothSine { amp: Vec<f64>, freq: Vec<f64>, phase: Vec<f64> },
    /// `y^i(t) = Σ_{k=1}^{modes} k^{−decay} sin(2π k t + φ_{i,k})` with seeded phases.
    FourierHolder { modes: usize, decay: f64, random_phase: bool },
}

impl SignalKind {
    pub fn name(&self) -> &'static str {
        match self {
            SignalKind::Brownian { .. } => "brownian",
            SignalKind::SmoothPoly { .. } => "smooth_poly",
            SignalKind::SmoothSine { .. } => "smooth_sine",
            SignalKind::FourierHolder { .. } => "fourier_holder",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SignalSpec {
    pub kind: SignalKind,
    pub dim: usize,
    pub t_end: f64,
    /// Generation steps on `[0, T]`.
    pub fine_n: usize,
    pub seed: u64,
    /// Left extension; must be a multiple of `T / fine_n`.
    pub r_max: f64,
}

impl SignalSpec {
    pub fn fine_step(&self) -> f64 {
        self.t_end / self.fine_n as f64
    }

    fn grid(&self) -> Result<(Grid, usize)> {
        if self.fine_n < 2 {
            return Err(Error::invalid(format!("fine_n must be at least 2, got {}", self.fine_n)));
        }
        if self.dim == 0 {
            return Err(Error::invalid("signal dimension must be at least 1"));
        }
        if !(self.t_end > 0.0) {
            return Err(Error::invalid(format!("T must be positive, got {}", self.t_end)));
        }
        let h = self.fine_step();
        let left = crate::path_algebra::steps_in(self.r_max, h)?;
        let grid = Grid::new(-(left as f64) * h, h, left + self.fine_n)?;
        Ok((grid, left))
    }
}

/// A sampled driver `y` with its area tensor `y⊗y`.
#[derive(Debug, Clone, PartialEq)]
pub struct Signal {
    pub path: GridPath,
    /// `y⊗y`; for Brownian drivers with correction this is the corrected tensor.
    pub tensor: TwoParamTensor,
}

impl Signal {
    pub fn grid(&self) -> &Grid {
        self.path.grid()
    }

    /// Uncorrected trapezoid tensor of the path against itself.
    pub fn stratonovich_tensor(&self) -> Result<TwoParamTensor> {
        TwoParamTensor::from_quadrature(&self.path, &self.path)
    }

    pub fn coarsen(&self, factor: usize) -> Result<Signal> {
        Ok(Signal { path: self.path.coarsen(factor)?, tensor: self.tensor.coarsen(factor)? })
    }

    pub fn restrict(&self, a: f64, b: f64) -> Result<Signal> {
        Ok(Signal { path: self.path.restrict(a, b)?, tensor: self.tensor.restrict(a, b)? })
    }

    /// The time-path tensor `(τ⊗y)_{s,t} = ∫_s^t (u − s) dy_u` on the signal grid.
    pub fn time_tensor(&self) -> Result<TwoParamTensor> {
        TwoParamTensor::from_quadrature(&GridPath::time_path(*self.grid()), &self.path)
    }
}

/// Dispatches on the signal kind.
pub fn generate(spec: &SignalSpec) -> Result<Signal> {
    match spec.kind {
        SignalKind::Brownian { .. } => gen_brownian(spec),
        SignalKind::SmoothPoly { .. } | SignalKind::SmoothSine { .. } => gen_smooth(spec),
        SignalKind::FourierHolder { .. } => gen_fourier_holder(spec),
    }
}

fn unit_open(u: u64) -> f64 {
    ((u >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64)
}

fn normal_from(rng: &mut ChaCha8Rng) -> f64 {
    let u1 = unit_open(rng.next_u64());
    let u2 = unit_open(rng.next_u64());
    (-2.0 * u1.ln()).sqrt() * (TAU * u2).cos()
}

fn increment_stream(seed: u64, component: usize, backward: bool) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(2 * component as u64 + backward as u64);
    rng
}

/// Standard normal keyed by `(seed, component, step)`; negative steps lie left of `t = 0`.
pub fn brownian_normal(seed: u64, component: usize, step: i64) -> f64 {
    let backward = step < 0;
    let counter = if backward { (-step - 1) as u128 } else { step as u128 };
    let mut rng = increment_stream(seed, component, backward);
    // two u64 draws per step = four 32-bit words
    rng.set_word_pos(4 * counter);
    normal_from(&mut rng)
}

pub fn gen_brownian(spec: &SignalSpec) -> Result<Signal> {
    let ito = match spec.kind {
        SignalKind::Brownian { ito_correction } => ito_correction,
        _ => return Err(Error::invalid("gen_brownian needs a brownian spec")),
    };
    let (grid, left) = spec.grid()?;
    let (dim, n) = (spec.dim, grid.steps());
    let sd = grid.step().sqrt();
    let mut values = vec![0.0; grid.nodes() * dim];
    for i in 0..dim {
        let mut fwd = increment_stream(spec.seed, i, false);
        for k in left..n {
            values[(k + 1) * dim + i] = values[k * dim + i] + sd * normal_from(&mut fwd);
        }
        let mut back = increment_stream(spec.seed, i, true);
        for k in (0..left).rev() {
            values[k * dim + i] = values[(k + 1) * dim + i] - sd * normal_from(&mut back);
        }
    }
    let path = GridPath::new(grid, dim, values)?;
    let strat = TwoParamTensor::from_quadrature(&path, &path)?;
    let tensor = if ito { strat.with_diagonal_drift(-0.5)? } else { strat };
    Ok(Signal { path, tensor })
}

fn check_len(what: &str, v: &[f64], dim: usize) -> Result<()> {
    if v.len() != dim {
        return Err(Error::invalid(format!("{what} needs {dim} entries, got {}", v.len())));
    }
    Ok(())
}

pub fn gen_smooth(spec: &SignalSpec) -> Result<Signal> {
    let (grid, _) = spec.grid()?;
    let dim = spec.dim;
    let path = match &spec.kind {
        SignalKind::SmoothPoly { coeffs } => {
            if coeffs.len() != dim {
                return Err(Error::invalid(format!("smooth_poly needs {dim} coefficient rows")));
            }
            GridPath::from_fn(grid, dim, |t, out| {
                for (o, c) in out.iter_mut().zip(coeffs) {
                    // Horner
                    *o = c.iter().rev().fold(0.0, |acc, a| acc * t + a);
                }
            })?
        }
        SignalKind::SmoothSine { amp, freq, phase } => {
            check_len("amp", amp, dim)?;
            check_len("freq", freq, dim)?;
            check_len("phase", phase, dim)?;
            GridPath::from_fn(grid, dim, |t, out| {
                for i in 0..dim {
                    out[i] = sine_mode(amp[i], freq[i], phase[i], t);
                }
            })?
        }
        _ => return Err(Error::invalid("gen_smooth needs a smooth_poly or smooth_sine spec")),
    };
    let tensor = TwoParamTensor::from_quadrature(&path, &path)?;
    Ok(Signal { path, tensor })
}

fn sine_mode(amp: f64, freq: f64, phase: f64, t: f64) -> f64 {
    amp * (TAU * freq * t + phase).sin()
}

pub fn gen_fourier_holder(spec: &SignalSpec) -> Result<Signal> {
    let (modes, decay, random_phase) = match spec.kind {
        SignalKind::FourierHolder { modes, decay, random_phase } => (modes, decay, random_phase),
        _ => return Err(Error::invalid("gen_fourier_holder needs a fourier_holder spec")),
    };
    if modes == 0 {
        return Err(Error::invalid("fourier_holder needs at least one mode"));
    }
    let (grid, _) = spec.grid()?;
    let dim = spec.dim;
    let mut phases = vec![0.0; dim * modes];
    if random_phase {
        for i in 0..dim {
            let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
            rng.set_stream(PHASE_STREAM_BASE + i as u64);
            for p in &mut phases[i * modes..(i + 1) * modes] {
                *p = TAU * unit_open(rng.next_u64());
            }
        }
    }
    let amps: Vec<f64> = (1..=modes).map(|k| (k as f64).powf(-decay)).collect();
    let path = GridPath::from_fn(grid, dim, |t, out| {
        for i in 0..dim {
            let mut acc = 0.0;
            for k in 0..modes {
                acc += sine_mode(amps[k], (k + 1) as f64, phases[i * modes + k], t);
            }
            out[i] = acc;
        }
    })?;
    let tensor = TwoParamTensor::from_quadrature(&path, &path)?;
    Ok(Signal { path, tensor })
}

/// Cross tensors between a driver and its delay `y_{·−r}` on `[r, T]`.
#[derive(Debug, Clone)]
pub struct DelayedTensors {
    pub r: f64,
    /// `y_{·−r}⊗y`
    pub shifted_by: TwoParamTensor,
    /// `y⊗y_{·−r}`
    pub by_shifted: TwoParamTensor,
    /// `(y − y_{·−r})⊗y`
    pub diff_by: TwoParamTensor,
    /// `y_{·−r}⊗(y − y_{·−r})`
    pub shifted_by_diff: TwoParamTensor,
    /// `y⊗(y − y_{·−r})`
    pub by_diff: TwoParamTensor,
}

impl DelayedTensors {
    pub fn coarsen(&self, factor: usize) -> Result<Self> {
        Ok(DelayedTensors {
            r: self.r,
            shifted_by: self.shifted_by.coarsen(factor)?,
            by_shifted: self.by_shifted.coarsen(factor)?,
            diff_by: self.diff_by.coarsen(factor)?,
            shifted_by_diff: self.shifted_by_diff.coarsen(factor)?,
            by_diff: self.by_diff.coarsen(factor)?,
        })
    }
}

/// Builds the delayed cross tensors on `[r, T]` from `y` (covering `[0, T]`)
/// and `y⊗y`. The shifted–shifted tensor is `y⊗y` read `r` earlier, so any
/// diagonal correction carried by `yy` is inherited there; the mixed
/// tensors are plain trapezoid sums.
pub fn delayed_cross_tensors(y: &GridPath, yy: &TwoParamTensor, r: f64) -> Result<DelayedTensors> {
    y.grid().ensure_matches(yy.grid(), "delayed tensors")?;
    let t_end = y.grid().end();
    if !(r < t_end) {
        return Err(Error::invalid(format!("delay {r} leaves no window before T = {t_end}")));
    }
    y.grid().steps_in(r)?;
    let window = y.restrict(r, t_end)?;
    let shifted = shift_path_onto(y, r, r, t_end)?;
    let yy_window = yy.restrict(r, t_end)?;
    let yy_shifted = yy.restrict(0.0, t_end - r)?.relabel(*window.grid())?;

    let shifted_by = TwoParamTensor::from_quadrature(&shifted, &window)?;
    let by_shifted = TwoParamTensor::from_quadrature(&window, &shifted)?;
    let diff_by = yy_window.sub_left(&shifted_by)?;
    let shifted_by_diff = shifted_by.sub_right(&yy_shifted)?;
    let by_diff = yy_window.sub_right(&by_shifted)?;
    Ok(DelayedTensors { r, shifted_by, by_shifted, diff_by, shifted_by_diff, by_diff })
}
