use std::path::Path;

use roughdelay::cli::{execute, main_with, parse_config, Command};

fn run(dir: &Path, extra: &[&str]) -> i32 {
    let mut args = vec!["roughdelay"];
    args.extend_from_slice(extra);
    args.extend_from_slice(&["--out", dir.to_str().unwrap()]);
    main_with(args, None)
}

fn small() -> Vec<&'static str> {
    vec!["--set", "problem.solver_n=256", "--set", "problem.fine_factor=2"]
}

#[test]
fn check_on_defaults_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(dir.path(), &["check"]), 0);
}

#[test]
fn constant_sigma_converge_is_exact() {
    let cfg = parse_config("[coeff]\nname = constant\n[problem]\nsolver_n = 256\n", &[]).unwrap();
    let out = execute(Command::Converge, &cfg).unwrap();
    assert!(out.stdout.lines().last().unwrap().contains("flag=exact"), "{}", out.stdout);
    let (_, csv) = out.files.iter().find(|(n, _)| n == "converge.csv").unwrap();
    let text = String::from_utf8(csv.clone()).unwrap();
    for row in text.lines().skip(1) {
        let cols: Vec<&str> = row.split(',').collect();
        for c in &cols[2..5] {
            assert_eq!(c.parse::<f64>().unwrap(), 0.0, "{row}");
        }
    }

    let dir = tempfile::tempdir().unwrap();
    let mut args = vec!["converge", "--set", "coeff.name=constant"];
    args.extend(small());
    assert_eq!(run(dir.path(), &args), 0);
    assert!(dir.path().join("converge.csv").exists());
    assert!(dir.path().join("converge_runtime.csv").exists());
}

#[test]
fn off_grid_solve_exits_two_without_files() {
    let dir = tempfile::tempdir().unwrap();
    let code = run(dir.path(), &["solve", "--set", "problem.solver_n=999", "--set", "problem.r=0.3"]);
    assert_eq!(code, 2);
    assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 0);
}

#[test]
fn config_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "[problem]\nsolver_n = 256\nbogus = 1\n").unwrap();
    let out = dir.path().join("out");
    assert_eq!(run(&out, &["gen", "--config", cfg.to_str().unwrap()]), 2);
    assert_eq!(run(&out, &["gen", "--config", "/nonexistent/file.cfg"]), 2);
    assert!(!out.exists() || std::fs::read_dir(&out).unwrap().count() == 0);
}

#[test]
fn converge_is_byte_identical_across_parallelism() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let base = ["converge", "--seed", "3", "--set", "problem.solver_n=512", "--set", "problem.fine_factor=2"];
    let mut one = base.to_vec();
    one.extend(["--parallelism", "1"]);
    let mut eight = base.to_vec();
    eight.extend(["--parallelism", "8"]);
    assert_eq!(run(a.path(), &one), 0);
    assert_eq!(run(b.path(), &eight), 0);
    let (x, y) = (std::fs::read(a.path().join("converge.csv")).unwrap(), std::fs::read(b.path().join("converge.csv")).unwrap());
    assert_eq!(x, y);
    let text = String::from_utf8(x).unwrap();
    assert!(text.starts_with("seed,r,sup_err,tensor_sup_err,holder_err,yy_r_tensor_norm_1,yy_r_tensor_norm_2\n"));
    assert_eq!(text.lines().count(), 1 + 25);
    assert!(text.lines().nth(1).unwrap().starts_with("3,0.25,"));
}

#[test]
fn gen_and_solve_write_csvs() {
    let dir = tempfile::tempdir().unwrap();
    let mut args = vec!["gen"];
    args.extend(small());
    args.extend(["--set", "signal.dim=2"]);
    assert_eq!(run(dir.path(), &args), 0);
    let path = std::fs::read_to_string(dir.path().join("signal_path.csv")).unwrap();
    assert!(path.starts_with("t,v_1,v_2\n"));
    // fine grid 512 steps on [0, 1] plus the 0.25 left extension
    assert_eq!(path.lines().count(), 1 + 641);
    let tensor = std::fs::read_to_string(dir.path().join("signal_tensor.csv")).unwrap();
    assert!(tensor.starts_with("k,a_0_0,a_0_1,a_1_0,a_1_1\n"));
    assert_eq!(tensor.lines().count(), 1 + 640);

    let mut args = vec!["solve"];
    args.extend(small());
    assert_eq!(run(dir.path(), &args), 0);
    let sol = std::fs::read_to_string(dir.path().join("solution.csv")).unwrap();
    assert!(sol.starts_with("t,v_1\n-0.125,0.5\n"));
}

#[test]
fn env_var_redirects_output() {
    let flag = tempfile::tempdir().unwrap();
    let env = tempfile::tempdir().unwrap();
    let mut args = vec!["roughdelay", "gen", "--out", flag.path().to_str().unwrap()];
    args.extend(small());
    assert_eq!(main_with(args, Some(env.path().as_os_str().to_owned())), 0);
    assert!(env.path().join("signal_path.csv").exists());
    assert!(!flag.path().join("signal_path.csv").exists());
}

#[test]
fn bounds_reports_constants() {
    let cfg = parse_config("[problem]\nsolver_n = 256\n", &[]).unwrap();
    let out = execute(Command::Bounds, &cfg).unwrap();
    for key in ["rho_eta_b_sigma=", "lambda_y=", "m_eta_y=", "min_k_sup=", "lambda_r=", "rho_delay_prop="] {
        assert!(out.stdout.contains(key), "{key} missing:\n{}", out.stdout);
    }
    assert!(out.files.is_empty());
}

#[test]
fn seed_flag_changes_the_signal() {
    let a = parse_config("", &["problem.solver_n=256".into()]).unwrap();
    let b = a.clone().with_master_seed(1);
    let ga = execute(Command::Gen, &a).unwrap();
    let gb = execute(Command::Gen, &b).unwrap();
    assert_ne!(ga.files[0].1, gb.files[0].1);
    assert_eq!(ga.files[0].1, execute(Command::Gen, &a).unwrap().files[0].1);
}
