//! One line per acceptance criterion; exits nonzero when a hard criterion fails.

use std::sync::Arc;
use std::time::Instant;

use roughdelay::analysis::{
    apriori, convergence_study, delayed_tensor_norms, lemma_yyr_check, FitOutcome,
};
use roughdelay::cli::{parse_args, parse_config, run_captured, Config};
use roughdelay::coefficients::{CoefficientModel, Drift};
use roughdelay::path_algebra::{chen_defect_relative, two_param_norm, GridPath, HolderExponents, TwoParamTensor};
use roughdelay::signals::{generate, Signal, SignalKind, SignalSpec};
use roughdelay::solver::{shifted_solution, solve_delay, solve_nodelay, DelayProblem, Driver, Eta};

struct Verdict {
    pass: bool,
    /// Diagnostic criteria are reported but never fail the run.
    hard: bool,
    detail: String,
}

fn verdict(pass: bool, detail: String) -> Verdict {
    Verdict { pass, hard: true, detail }
}

fn brownian(seed: u64, dim: usize, fine_n: usize, r_max: f64, ito: bool) -> Signal {
    generate(&SignalSpec { kind: SignalKind::Brownian { ito_correction: ito }, dim, t_end: 1.0, fine_n, seed, r_max })
        .unwrap()
}

fn config(sets: &[&str]) -> Config {
    let o: Vec<String> = sets.iter().map(|s| s.to_string()).collect();
    parse_config("", &o).unwrap()
}

fn criterion_1() -> Verdict {
    let start = Instant::now();
    let n = 1024;
    let mut tensors: Vec<(String, TwoParamTensor)> = Vec::new();
    let smooth = generate(&SignalSpec {
        kind: SignalKind::SmoothPoly { coeffs: vec![vec![0.0, 1.0], vec![0.0, 0.0, 1.0]] },
        dim: 2,
        t_end: 1.0,
        fine_n: n,
        seed: 0,
        r_max: 0.0,
    })
    .unwrap();
    tensors.push(("smooth".into(), smooth.tensor));
    let fourier = generate(&SignalSpec {
        kind: SignalKind::FourierHolder { modes: 128, decay: 0.9, random_phase: true },
        dim: 2,
        t_end: 1.0,
        fine_n: n,
        seed: 11,
        r_max: 0.0,
    })
    .unwrap();
    tensors.push(("fourier".into(), fourier.tensor));
    tensors.push(("brownian_ito".into(), brownian(3, 2, n, 0.0, true).tensor));
    tensors.push(("brownian_strat".into(), brownian(3, 2, n, 0.0, false).tensor));

    let cfg = config(&["problem.solver_n=1024", "problem.fine_factor=1", "problem.r=0.125"]);
    let p = cfg.problem.build(5).unwrap();
    let res = solve_delay(&p).unwrap();
    let (_, th) = shifted_solution(&p, &res).unwrap();
    tensors.push(("solution_delay".into(), res.x_tensor.clone()));
    tensors.push(("solution_shifted".into(), th));
    let res0 = solve_nodelay(&p.with_delay(0.0).unwrap()).unwrap();
    tensors.push(("solution_nodelay".into(), res0.x_tensor));

    let mut worst = (String::new(), 0.0_f64);
    for (name, t) in &tensors {
        let d = chen_defect_relative(t);
        if d >= worst.1 {
            worst = (name.clone(), d);
        }
    }
    let secs = start.elapsed().as_secs_f64();
    verdict(
        worst.1 <= 1e-10 && secs < 5.0,
        format!("{} tensors, worst relative defect {:.2e} ({}), {secs:.2} s", tensors.len(), worst.1, worst.0),
    )
}

fn criterion_2() -> Verdict {
    let start = Instant::now();
    let n = 1024;
    let (mut diag, mut sym) = (0.0_f64, 0.0_f64);
    for seed in 0..100 {
        let s = brownian(seed, 2, n, 0.0, true);
        let (t, y) = (&s.tensor, &s.path);
        let h = 1.0 / n as f64;
        for i in 0..n {
            let yi = y.point(i).to_vec();
            t.scan_row(i, n, |j, a| {
                let yj = y.point(j);
                let len = (j - i) as f64 * h;
                let dy = [yj[0] - yi[0], yj[1] - yi[1]];
                for p in 0..2 {
                    diag = diag.max((a[p * 2 + p] - (0.5 * dy[p] * dy[p] - 0.5 * len)).abs());
                    for q in 0..2 {
                        let want = dy[p] * dy[q] - if p == q { len } else { 0.0 };
                        sym = sym.max((a[p * 2 + q] + a[q * 2 + p] - want).abs());
                    }
                }
            });
        }
    }
    let secs = start.elapsed().as_secs_f64();
    verdict(
        diag <= 1e-12 && sym <= 1e-12 && secs < 30.0,
        format!("100 seeds, all pairs: diagonal {diag:.2e}, symmetrization {sym:.2e}, {secs:.2} s"),
    )
}

fn criterion_3() -> Verdict {
    let n = 4096;
    let s = generate(&SignalSpec {
        kind: SignalKind::SmoothPoly { coeffs: vec![vec![0.0, 1.0], vec![0.0, 0.0, 1.0]] },
        dim: 2,
        t_end: 1.0,
        fine_n: n,
        seed: 0,
        r_max: 0.0,
    })
    .unwrap();
    let h = 1.0 / n as f64;
    let mut worst = 0.0_f64;
    for i in (0..n).step_by(16) {
        let a = i as f64 * h;
        s.tensor.scan_row(i, n, |j, v| {
            let b = j as f64 * h;
            let exact = [
                (b - a).powi(2) / 2.0,
                2.0 * (b.powi(3) - a.powi(3)) / 3.0 - a * (b * b - a * a),
                (b.powi(3) - a.powi(3)) / 3.0 - a * a * (b - a),
                (b * b - a * a).powi(2) / 2.0,
            ];
            for k in 0..4 {
                worst = worst.max((v[k] - exact[k]).abs());
            }
        });
    }
    verdict(worst <= 1e-6, format!("max |error| {worst:.2e} at fine_n = {n}"))
}

fn affine_problem(sig: Signal, solver_n: usize) -> DelayProblem {
    let drv = Arc::new(Driver::new(sig, solver_n).unwrap());
    let coeff = CoefficientModel::builtin("affine_test", 1, 1).unwrap();
    DelayProblem::new(HolderExponents::default(), 0.0, 0.25, Eta { value: 1.0, slope: 0.0 }, coeff, drv).unwrap()
}

fn criterion_4() -> Verdict {
    let mut worst_rel = 0.0_f64;
    let (mut e_coarse, mut e_fine) = (0.0, 0.0);
    for seed in 0..10 {
        let s = brownian(seed, 1, 4096, 0.25, false);
        let exact = s.path.at(1.0).unwrap()[0].exp();
        let fine = solve_nodelay(&affine_problem(s.clone(), 4096)).unwrap();
        let coarse = solve_nodelay(&affine_problem(s, 2048)).unwrap();
        let xf = fine.x.point(4096)[0];
        let xc = coarse.x.point(2048)[0];
        worst_rel = worst_rel.max((xf - exact).abs() / exact);
        e_fine += (xf - exact).abs() / exact;
        e_coarse += (xc - exact).abs() / exact;
    }
    let ratio = e_coarse / e_fine;
    verdict(
        worst_rel <= 0.01 && ratio >= 1.3,
        format!("worst relative endpoint error {worst_rel:.2e}, mean relative error ratio N=2048/N=4096 {ratio:.3}"),
    )
}

fn criterion_5() -> Verdict {
    let exps = HolderExponents::default();
    let lags = [0.2, 0.1, 0.05, 0.025];
    let mut failures = 0;
    let mut checks = 0;
    let mut min_margin = f64::INFINITY;
    let mut run = |y: &GridPath| {
        for &r in &lags {
            let rep = lemma_yyr_check(y, r, &exps).unwrap();
            checks += 1;
            if !rep.passes() {
                failures += 1;
            }
            min_margin = min_margin.min(rep.margins().0);
        }
    };
    for seed in 0..100 {
        run(&brownian(seed, 1, 1000, 0.2, true).path);
    }
    let deterministic = [
        SignalKind::SmoothPoly { coeffs: vec![vec![0.0, 1.0]] },
        SignalKind::SmoothPoly { coeffs: vec![vec![1.0, -2.0, 3.0]] },
        SignalKind::SmoothSine { amp: vec![1.0], freq: vec![3.0], phase: vec![0.2] },
        SignalKind::FourierHolder { modes: 256, decay: 0.9, random_phase: true },
    ];
    for kind in deterministic {
        let s = generate(&SignalSpec { kind, dim: 1, t_end: 1.0, fine_n: 1000, seed: 7, r_max: 0.2 }).unwrap();
        run(&s.path);
    }
    verdict(
        failures == 0,
        format!("{checks} checks, {failures} failures, smallest sup-side margin {min_margin:.3e}"),
    )
}

const STUDY_SETS: [&str; 8] = [
    "problem.solver_n=2000",
    "problem.fine_factor=8",
    "problem.r=0.1",
    "problem.r0=0.2",
    "study.r_list=0.2,0.1,0.05,0.025,0.0125",
    "study.seeds=42,43,44,45,46",
    "coeff.name=tanh_diag",
    "signal.kind=brownian",
];

fn criterion_6(cfg: &Config) -> Verdict {
    let start = Instant::now();
    let out = convergence_study(&cfg.study).unwrap();
    let secs = start.elapsed().as_secs_f64();
    let mut ok = secs < 300.0;
    let mut parts = Vec::new();
    for s in &out.per_seed {
        let slope = |f: &FitOutcome| f.slope().unwrap_or(f64::NAN);
        let (ss, ts) = (slope(&s.sup_fit), slope(&s.tensor_fit));
        let seed_ok = s.sup_last_over_first <= 0.2
            && ss > 0.2
            && s.sup_inversions <= 1
            && s.tensor_last_over_first <= 0.3
            && ts > 0.2
            && s.tensor_inversions <= 1;
        ok &= seed_ok;
        parts.push(format!(
            "seed {}: sup ratio {:.3} slope {:.3} inv {} / tensor ratio {:.3} slope {:.3} inv {}",
            s.seed, s.sup_last_over_first, ss, s.sup_inversions, s.tensor_last_over_first, ts, s.tensor_inversions
        ));
    }
    verdict(ok, format!("{:.1} s; {}", secs, parts.join("; ")))
}

fn criterion_7(cfg: &Config) -> Verdict {
    let bp = cfg.problem.exps.beta_prime();
    let mut ok = true;
    let mut parts = Vec::new();
    for &seed in &cfg.study.seeds {
        let drv = cfg.problem.driver(seed).unwrap();
        let st = delayed_tensor_norms(&drv, &[0.2, 0.0125], bp).unwrap();
        let q = st.last_over_first();
        ok &= q.iter().all(|v| *v <= 0.5);
        parts.push(format!("seed {seed}: {:.3}/{:.3}/{:.3}", q[0], q[1], q[2]));
    }

    let poly = |coeffs: Vec<f64>| {
        let s = generate(&SignalSpec {
            kind: SignalKind::SmoothPoly { coeffs: vec![coeffs] },
            dim: 1,
            t_end: 1.0,
            fine_n: 16000,
            seed: 0,
            r_max: 0.2,
        })
        .unwrap();
        Driver::new(s, 2000).unwrap()
    };
    let lin = poly(vec![0.0, 1.0]);
    let lin_max = delayed_tensor_norms(&lin, &[0.2, 0.1, 0.05, 0.025, 0.0125], bp)
        .unwrap()
        .rows
        .iter()
        .flat_map(|r| r.values())
        .fold(0.0_f64, f64::max);
    // y = t²: (y − y_{·−r})⊗y is linear in r, compared on the window [0.2, 1]
    let quad = poly(vec![0.0, 0.0, 1.0]);
    let norms: Vec<f64> = [0.2, 0.1, 0.05, 0.025, 0.0125]
        .iter()
        .map(|&r| two_param_norm(&quad.delayed(r).unwrap().diff_by, 2.0 * bp, 0.2, 1.0).unwrap())
        .collect();
    let halving = norms.windows(2).map(|w| (w[1] / w[0] - 0.5).abs()).fold(0.0_f64, f64::max);
    ok &= lin_max <= 1e-12 && halving <= 1e-12;
    verdict(
        ok,
        format!(
            "r=0.0125 over r=0.2 (three norms): {}; linear driver max norm {lin_max:.1e}; quadratic halving error {halving:.1e}",
            parts.join(", ")
        ),
    )
}

fn criterion_8() -> Verdict {
    let cfg = config(&[
        "problem.solver_n=2000",
        "problem.r0=0.2",
        "problem.r=0.1",
        "study.r_list=0.2,0.1,0.05,0.025,0.0125",
        "study.seeds=1,2,3",
        "coeff.name=constant",
        "coeff.params.scale=0.8",
        "coeff.params.kappa=0.7",
        "coeff.params.drift_a=0.1",
    ]);
    let out = convergence_study(&cfg.study).unwrap();
    let sup = out.rows.iter().map(|r| r.sup_err).fold(0.0_f64, f64::max);
    let exact_flag = matches!(out.pooled, FitOutcome::Exact);

    let (a, c, eta0) = (0.3, -1.2, -0.5);
    let mut ode = 0.0_f64;
    for seed in [1, 2] {
        for r in [0.0, 0.0625, 0.125] {
            let drv = Arc::new(Driver::new(brownian(seed, 1, 1024, 0.25, true), 256).unwrap());
            let coeff = CoefficientModel::builtin("constant", 1, 1)
                .unwrap()
                .with_scale(0.0)
                .with_drift(Drift { a, c, kappa: 0.0 });
            let p = DelayProblem::new(HolderExponents::default(), r, 0.25, Eta { value: eta0, slope: 0.0 }, coeff, drv)
                .unwrap();
            let xp = solve_delay(&p).unwrap().forward_path().unwrap();
            for k in 0..xp.grid().nodes() {
                let t = xp.grid().time(k);
                ode = ode.max((xp.point(k)[0] - (eta0 + a * t + 0.5 * c * t * t)).abs());
            }
        }
    }
    verdict(
        sup <= 1e-12 && exact_flag && ode <= 1e-10,
        format!("constant sigma max sup_err {sup:.1e} (flag {}), affine drift max error {ode:.1e}", out.pooled.label()),
    )
}

fn criterion_9() -> Verdict {
    let dirs: Vec<_> = (0..2).map(|_| tempfile::tempdir().unwrap()).collect();
    let mut codes = Vec::new();
    for (dir, par) in dirs.iter().zip(["1", "8"]) {
        let args = ["roughdelay", "converge", "--seed", "9", "--parallelism", par, "--out", dir.path().to_str().unwrap()];
        codes.push(run_captured(&parse_args(args, None).unwrap()).0);
    }
    let a = std::fs::read(dirs[0].path().join("converge.csv")).unwrap();
    let b = std::fs::read(dirs[1].path().join("converge.csv")).unwrap();
    verdict(
        codes == [0, 0] && a == b && !a.is_empty(),
        format!("exit codes {codes:?}, {} bytes, identical = {}", a.len(), a == b),
    )
}

fn criterion_10(cfg: &Config) -> Verdict {
    let mut worst = 1.0_f64;
    let mut count = 0;
    for &seed in &cfg.study.seeds {
        let p = cfg.problem.build(seed).unwrap();
        for &r in &cfg.study.r_list {
            let pr = p.with_delay(r).unwrap();
            let res = solve_delay(&pr).unwrap();
            worst = worst.max(apriori(&pr, &res, 1.0).unwrap().min_k[0]);
            count += 1;
        }
    }
    Verdict {
        pass: worst.is_finite() && worst <= 10.0,
        hard: false,
        detail: format!("{count} instances, largest minimal K for the sup bound {worst:.3}"),
    }
}

fn main() {
    let study = config(&STUDY_SETS);
    let criteria: Vec<(usize, &str, Box<dyn Fn() -> Verdict>)> = vec![
        (1, "Chen relation", Box::new(criterion_1)),
        (2, "Stratonovich identities", Box::new(criterion_2)),
        (3, "smooth oracle", Box::new(criterion_3)),
        (4, "closed-form SDE", Box::new(criterion_4)),
        (5, "shift lemma", Box::new(criterion_5)),
        (6, "r -> 0 convergence proxy", Box::new(|| criterion_6(&study))),
        (7, "delayed tensor norms", Box::new(|| criterion_7(&study))),
        (8, "degenerate exactness", Box::new(criterion_8)),
        (9, "determinism", Box::new(criterion_9)),
        (10, "a priori minimal K", Box::new(|| criterion_10(&study))),
    ];
    let mut hard_failures = Vec::new();
    for (n, name, f) in criteria {
        let v = f();
        let tag = match (v.pass, v.hard) {
            (true, _) => "PASS",
            (false, true) => "FAIL",
            (false, false) => "WARN",
        };
        println!("criterion {n:>2} {tag} {name}: {}", v.detail);
        if v.hard && !v.pass {
            hard_failures.push(n);
        }
    }
    if hard_failures.is_empty() {
        println!("acceptance: all hard criteria pass");
    } else {
        println!("acceptance: failing criteria {hard_failures:?}");
        std::process::exit(1);
    }
}
