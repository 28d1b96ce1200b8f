//! The `r → 0` sweep and log-log rate fits.

use std::time::Instant;

use rayon::prelude::*;

use crate::analysis::lemmas::delayed_norm_row;
use crate::error::{Error, Result};
use crate::path_algebra::{holder_norm, sup_norm, tensor_sup_norm};
use crate::solver::{solve_delay, solve_nodelay, ProblemSpec, SolveResult};

#[derive(Debug, Clone, PartialEq)]
pub struct StudyConfig {
    pub base: ProblemSpec,
    /// Strictly decreasing positive lags.
    pub r_list: Vec<f64>,
    pub seeds: Vec<u64>,
}

impl StudyConfig {
    /// Checks every lag before any solve.
    pub fn validate(&self) -> Result<()> {
        self.base.validate()?;
        if self.r_list.is_empty() || self.seeds.is_empty() {
            return Err(Error::invalid("study needs at least one r and one seed"));
        }
        for (i, &r) in self.r_list.iter().enumerate() {
            if !(r > 0.0) {
                return Err(Error::invalid(format!("study lags must be positive, got {r}")));
            }
            if i > 0 && r >= self.r_list[i - 1] {
                return Err(Error::invalid("r_list must be strictly decreasing"));
            }
            self.base.check_lag(r)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StudyRow {
    pub seed: u64,
    pub r: f64,
    /// `‖x − x^r‖_{∞(0,T)}`
    pub sup_err: f64,
    /// `‖(x − x^r)⊗y‖_∞` over `[0, T]`.
    pub tensor_sup_err: f64,
    /// `‖x − x^r‖_{β′(0,T)}`
    pub holder_err: f64,
    /// `‖(y − y_{·−r})⊗y‖_{2β′(r,T)}`
    pub yy_r_tensor_norm_1: f64,
    /// `‖y_{·−r}⊗(y − y_{·−r})‖_{2β′(r,T)}`
    pub yy_r_tensor_norm_2: f64,
    pub runtime_ms: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    pub used: usize,
    pub excluded_zeros: usize,
}

/// Outcome of fitting one error column.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FitOutcome {
    Fitted(RateFit),
    /// Every error is at rounding level.
    Exact,
    TooFewPoints(usize),
}

impl FitOutcome {
    pub fn label(&self) -> &'static str {
        match self {
            FitOutcome::Fitted(_) => "fitted",
            FitOutcome::Exact => "exact",
            FitOutcome::TooFewPoints(_) => "insufficient",
        }
    }

    pub fn slope(&self) -> Option<f64> {
        match self {
            FitOutcome::Fitted(f) => Some(f.slope),
            _ => None,
        }
    }
}

/// Errors at or below this are treated as exact zeros by the study.
pub const EXACT_TOL: f64 = 1e-12;

/// Ordinary least squares of `log err` on `log r`; zero errors are skipped.
pub fn fit_rate(points: &[(f64, f64)]) -> Result<RateFit> {
    if let Some(&(r, _)) = points.iter().find(|(r, _)| !(*r > 0.0)) {
        return Err(Error::invalid(format!("fit needs positive lags, got {r}")));
    }
    if let Some(&(_, e)) = points.iter().find(|(_, e)| !(*e >= 0.0) || !e.is_finite()) {
        return Err(Error::invalid(format!("fit needs finite non-negative errors, got {e}")));
    }
    let used: Vec<(f64, f64)> = points.iter().filter(|(_, e)| *e > 0.0).map(|(r, e)| (r.ln(), e.ln())).collect();
    let excluded_zeros = points.len() - used.len();
    let n = used.len();
    if n < 3 {
        return Err(Error::TooFewPoints(n));
    }
    let nf = n as f64;
    let mx = used.iter().map(|p| p.0).sum::<f64>() / nf;
    let my = used.iter().map(|p| p.1).sum::<f64>() / nf;
    let sxx: f64 = used.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = used.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        return Err(Error::invalid("fit needs at least two distinct lags"));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = used.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum();
    let ss_tot: f64 = used.iter().map(|p| (p.1 - my).powi(2)).sum();
    let r2 = if ss_tot == 0.0 { 1.0 } else { 1.0 - ss_res / ss_tot };
    Ok(RateFit { slope, intercept, r2, used: n, excluded_zeros })
}

pub fn fit_outcome(points: &[(f64, f64)]) -> Result<FitOutcome> {
    if points.iter().all(|(_, e)| *e <= EXACT_TOL) {
        return Ok(FitOutcome::Exact);
    }
    match fit_rate(points) {
        Ok(f) => Ok(FitOutcome::Fitted(f)),
        Err(Error::TooFewPoints(n)) => Ok(FitOutcome::TooFewPoints(n)),
        Err(e) => Err(e),
    }
}

/// Number of adjacent pairs where the error grows as `r` shrinks.
pub fn adjacent_inversions(values: &[f64]) -> usize {
    values.windows(2).filter(|w| w[1] > w[0]).count()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeedSummary {
    pub seed: u64,
    pub sup_fit: FitOutcome,
    pub tensor_fit: FitOutcome,
    /// `sup_err(r_last) / sup_err(r_first)`
    pub sup_last_over_first: f64,
    pub tensor_last_over_first: f64,
    pub sup_inversions: usize,
    pub tensor_inversions: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudyOutput {
    /// Sorted by `(seed order, r descending)`.
    pub rows: Vec<StudyRow>,
    pub per_seed: Vec<SeedSummary>,
    /// Pooled fit of `sup_err` over every row.
    pub pooled: FitOutcome,
}

struct Reference {
    problem: crate::solver::DelayProblem,
    solution: SolveResult,
}

fn last_over_first(v: &[f64]) -> f64 {
    if v[0] == 0.0 {
        0.0
    } else {
        v[v.len() - 1] / v[0]
    }
}

fn cell(reference: &Reference, seed: u64, r: f64) -> Result<StudyRow> {
    let start = Instant::now();
    let p = reference.problem.with_delay(r)?;
    let res = solve_delay(&p)?;
    let base = &reference.solution;
    let t_end = p.t_end();
    let x = &base.x;
    let xr = res.forward_path()?;
    let diff = x.sub_path(&xr)?;
    let tdiff = base.x_tensor.sub_left(&res.forward_tensor()?)?;
    let bp = p.exps.beta_prime();
    let norms = delayed_norm_row(p.delayed.as_ref().ok_or(Error::MissingTensor("y_{·−r}⊗y"))?, bp)?;
    Ok(StudyRow {
        seed,
        r,
        sup_err: sup_norm(&diff, 0.0, t_end)?,
        tensor_sup_err: tensor_sup_norm(&tdiff, 0.0, t_end)?,
        holder_err: holder_norm(&diff, bp, 0.0, t_end)?,
        yy_r_tensor_norm_1: norms.diff_by,
        yy_r_tensor_norm_2: norms.shifted_by_diff,
        runtime_ms: start.elapsed().as_secs_f64() * 1e3,
    })
}

/// Runs every `(seed, r)` cell; results do not depend on thread count.
pub fn convergence_study(cfg: &StudyConfig) -> Result<StudyOutput> {
    cfg.validate()?;
    let refs = cfg
        .seeds
        .par_iter()
        .map(|&seed| {
            let problem = cfg.base.build(seed)?.with_delay(0.0)?;
            let solution = solve_nodelay(&problem)?;
            Ok(Reference { problem, solution })
        })
        .collect::<Result<Vec<_>>>()?;
    let cells: Vec<(usize, f64)> =
        (0..cfg.seeds.len()).flat_map(|i| cfg.r_list.iter().map(move |&r| (i, r))).collect();
    let rows = cells
        .par_iter()
        .map(|&(i, r)| cell(&refs[i], cfg.seeds[i], r))
        .collect::<Result<Vec<_>>>()?;

    let n_r = cfg.r_list.len();
    let mut per_seed = Vec::with_capacity(cfg.seeds.len());
    for (i, &seed) in cfg.seeds.iter().enumerate() {
        let chunk = &rows[i * n_r..(i + 1) * n_r];
        let sup: Vec<f64> = chunk.iter().map(|r| r.sup_err).collect();
        let ten: Vec<f64> = chunk.iter().map(|r| r.tensor_sup_err).collect();
        let pts = |v: &[f64]| chunk.iter().zip(v).map(|(row, e)| (row.r, *e)).collect::<Vec<_>>();
        per_seed.push(SeedSummary {
            seed,
            sup_fit: fit_outcome(&pts(&sup))?,
            tensor_fit: fit_outcome(&pts(&ten))?,
            sup_last_over_first: last_over_first(&sup),
            tensor_last_over_first: last_over_first(&ten),
            sup_inversions: adjacent_inversions(&sup),
            tensor_inversions: adjacent_inversions(&ten),
        });
    }
    let pooled = fit_outcome(&rows.iter().map(|r| (r.r, r.sup_err)).collect::<Vec<_>>())?;
    Ok(StudyOutput { rows, per_seed, pooled })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coefficients::CoefficientModel;
    use crate::path_algebra::HolderExponents;
    use crate::signals::{SignalKind, SignalSpec};
    use crate::solver::Eta;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn exact_power_laws() {
        let pts: Vec<(f64, f64)> = [0.2, 0.1, 0.05, 0.025].iter().map(|&r: &f64| (r, r.powf(0.5))).collect();
        assert!((fit_rate(&pts).unwrap().slope - 0.5).abs() < 1e-12);
        let line: Vec<(f64, f64)> =
            [0.3, 0.1, 0.03, 0.01].iter().map(|&r: &f64| (r, (0.4 * r.ln() + 1.7).exp())).collect();
        let f = fit_rate(&line).unwrap();
        assert!((f.slope - 0.4).abs() < 1e-9);
        assert!((f.intercept - 1.7).abs() < 1e-9);
        let flat: Vec<(f64, f64)> = [0.2, 0.1, 0.05].iter().map(|&r| (r, 2.0)).collect();
        assert_eq!(fit_rate(&flat).unwrap().slope, 0.0);
    }

    #[test]
    fn noisy_power_law() {
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let pts: Vec<(f64, f64)> = (0..8)
            .map(|i| {
                let r = 0.2 * 0.5f64.powi(i);
                (r, 3.0 * r.powf(0.37) * (1.0 + 0.01 * rng.random_range(-1.0..1.0)))
            })
            .collect();
        let s = fit_rate(&pts).unwrap().slope;
        assert!((0.33..=0.41).contains(&s), "{s}");
    }

    #[test]
    fn zeros_and_too_few() {
        let f = fit_rate(&[(0.4, 0.0), (0.2, 1.0), (0.1, 0.5), (0.05, 0.25)]).unwrap();
        assert_eq!(f.excluded_zeros, 1);
        assert!(matches!(fit_rate(&[(0.2, 1.0), (0.1, 0.0), (0.05, 0.3)]), Err(Error::TooFewPoints(2))));
        assert_eq!(fit_outcome(&[(0.2, 0.0), (0.1, 0.0), (0.05, 0.0)]).unwrap(), FitOutcome::Exact);
    }

    fn spec(model: &str, solver_n: usize) -> ProblemSpec {
        ProblemSpec {
            signal: SignalSpec {
                kind: SignalKind::Brownian { ito_correction: true },
                dim: 1,
                t_end: 1.0,
                fine_n: 4 * solver_n,
                seed: 0,
                r_max: 0.25,
            },
            coeff: CoefficientModel::builtin(model, 1, 1).unwrap(),
            exps: HolderExponents::default(),
            eta: Eta { value: 0.5, slope: 0.0 },
            solver_n,
            r: 0.0,
            r0: 0.25,
        }
    }

    #[test]
    fn constant_sigma_study_is_exact() {
        let cfg = StudyConfig { base: spec("constant", 256), r_list: vec![0.25, 0.125, 0.0625], seeds: vec![1, 2] };
        let out = convergence_study(&cfg).unwrap();
        assert_eq!(out.rows.len(), 6);
        assert!(out.rows.iter().all(|r| r.sup_err <= 1e-12 && r.tensor_sup_err <= 1e-12));
        assert_eq!(out.pooled, FitOutcome::Exact);
        assert!(out.per_seed.iter().all(|s| s.sup_fit == FitOutcome::Exact));
    }

    #[test]
    fn off_grid_lag_fails_before_solving() {
        let cfg = StudyConfig { base: spec("tanh_diag", 256), r_list: vec![0.2, 0.1], seeds: vec![1] };
        assert!(matches!(convergence_study(&cfg), Err(Error::NotGridMultiple { .. })));
        let cfg = StudyConfig { base: spec("tanh_diag", 256), r_list: vec![0.125, 0.25], seeds: vec![1] };
        assert!(convergence_study(&cfg).is_err());
    }

    #[test]
    fn study_independent_of_thread_count() {
        let cfg =
            StudyConfig { base: spec("tanh_diag", 256), r_list: vec![0.25, 0.125, 0.0625, 0.03125], seeds: vec![3, 4] };
        let run = |threads| {
            rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap().install(|| convergence_study(&cfg))
        };
        let a = run(1).unwrap();
        let b = run(4).unwrap();
        let strip = |o: &StudyOutput| o.rows.iter().map(|r| StudyRow { runtime_ms: 0.0, ..*r }).collect::<Vec<_>>();
        assert_eq!(strip(&a), strip(&b));
        assert!(a.rows[0].sup_err > a.rows[3].sup_err);
    }
}
