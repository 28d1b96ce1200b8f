//! `key = value` run configuration with `[section]` headers.
//!
//! Keys inside a section are prefixed with the section name; dotted keys
//! may also be written in full at top level or passed as overrides.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::coefficients::{Builtin, CoefficientModel, Drift};
use crate::error::{Error, Result};
use crate::path_algebra::{steps_in, HolderExponents};
use crate::signals::{SignalKind, SignalSpec};
use crate::solver::{Eta, ProblemSpec};
use crate::analysis::StudyConfig;

const SECTIONS: [&str; 4] = ["signal", "coeff", "problem", "study"];

/// Every accepted key with its default, in canonical order.
const KEYS: &[(&str, &str)] = &[
    ("signal.kind", "brownian"),
    ("signal.dim", "1"),
    ("signal.fine_n", ""),
    ("signal.seed", "0"),
    ("signal.r_max", ""),
    ("signal.ito_correction", "true"),
    ("signal.params.coeffs", "0,1"),
    ("signal.params.amp", "1"),
    ("signal.params.freq", "1"),
    ("signal.params.phase", "0"),
    ("signal.params.modes", "64"),
    ("signal.params.decay", "0.9"),
    ("signal.params.random_phase", "true"),
    ("coeff.name", "tanh_diag"),
    ("coeff.params.scale", "1"),
    ("coeff.params.drift_a", "0"),
    ("coeff.params.drift_c", "0"),
    ("coeff.params.kappa", "0"),
    ("coeff.lambda", "0.9"),
    ("problem.beta", "0.4"),
    ("problem.epsilon", "0.02"),
    ("problem.T", "1"),
    ("problem.solver_n", "1024"),
    ("problem.fine_factor", "8"),
    ("problem.r", "0.125"),
    ("problem.r0", "0.25"),
    ("problem.eta0", "0.5"),
    ("problem.eta_slope", "0"),
    ("problem.K", "1"),
    ("study.r_list", "0.25,0.125,0.0625,0.03125,0.015625"),
    ("study.seeds", "1,2,3,4,5"),
];

/// Alternative spellings mapped onto canonical keys.
const ALIASES: &[(&str, &str)] = &[("signal.T", "problem.T")];

#[derive(Debug, Clone, PartialEq)]
struct Entry {
    value: String,
    /// Source line; 0 for command-line overrides.
    line: usize,
}

/// A parsed and validated configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    entries: BTreeMap<String, Entry>,
    pub problem: ProblemSpec,
    pub study: StudyConfig,
    pub k: f64,
    pub master_seed: u64,
}

fn canonical(key: &str) -> Option<&'static str> {
    if let Some((_, to)) = ALIASES.iter().find(|(from, _)| *from == key) {
        return Some(to);
    }
    KEYS.iter().find(|(k, _)| *k == key).map(|(k, _)| *k)
}

fn err(line: usize, msg: impl Into<String>) -> Error {
    Error::Config { line, msg: msg.into() }
}

fn insert(entries: &mut BTreeMap<String, Entry>, key: &str, value: &str, line: usize) -> Result<()> {
    let canon = canonical(key).ok_or_else(|| err(line, format!("unknown key `{key}`")))?;
    if line > 0 {
        if let Some(prev) = entries.get(canon) {
            if prev.line > 0 {
                return Err(err(line, format!("`{canon}` already set on line {}", prev.line)));
            }
        }
    }
    entries.insert(canon.to_string(), Entry { value: value.trim().to_string(), line });
    Ok(())
}

/// Parses config text plus `key=value` overrides (applied last).
pub fn parse_config(text: &str, overrides: &[String]) -> Result<Config> {
    let mut entries = BTreeMap::new();
    let mut section: Option<&str> = None;
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        if let Some(name) = body.strip_prefix('[') {
            let name = name
                .strip_suffix(']')
                .ok_or_else(|| err(line, format!("malformed section header `{body}`")))?
                .trim();
            section = Some(
                SECTIONS
                    .iter()
                    .find(|s| **s == name)
                    .copied()
                    .ok_or_else(|| err(line, format!("unknown section `[{name}]`")))?,
            );
            continue;
        }
        let (k, v) = body.split_once('=').ok_or_else(|| err(line, format!("expected key = value, got `{body}`")))?;
        let k = k.trim();
        let full = match section {
            Some(s) if !k.starts_with(&format!("{s}.")) => format!("{s}.{k}"),
            _ => k.to_string(),
        };
        insert(&mut entries, &full, v, line)?;
    }
    for o in overrides {
        let (k, v) = o.split_once('=').ok_or_else(|| err(0, format!("override `{o}` is not key=value")))?;
        insert(&mut entries, k.trim(), v, 0)?;
    }
    Config::from_entries(entries)
}

struct Reader<'a> {
    entries: &'a BTreeMap<String, Entry>,
}

impl Reader<'_> {
    fn raw(&self, key: &str) -> (&str, usize) {
        match self.entries.get(key) {
            Some(e) => (e.value.as_str(), e.line),
            None => (KEYS.iter().find(|(k, _)| *k == key).map(|(_, d)| *d).unwrap_or(""), 0),
        }
    }

    fn line(&self, key: &str) -> usize {
        self.raw(key).1
    }

    fn is_set(&self, key: &str) -> bool {
        self.entries.contains_key(key)
    }

    fn string(&self, key: &str) -> String {
        self.raw(key).0.to_string()
    }

    fn f64(&self, key: &str) -> Result<f64> {
        let (v, line) = self.raw(key);
        v.parse::<f64>()
            .ok()
            .filter(|x| x.is_finite())
            .ok_or_else(|| err(line, format!("`{key}` expects a number, got `{v}`")))
    }

    fn usize(&self, key: &str) -> Result<usize> {
        let (v, line) = self.raw(key);
        v.parse().map_err(|_| err(line, format!("`{key}` expects a non-negative integer, got `{v}`")))
    }

    fn u64(&self, key: &str) -> Result<u64> {
        let (v, line) = self.raw(key);
        v.parse().map_err(|_| err(line, format!("`{key}` expects an unsigned integer, got `{v}`")))
    }

    fn bool(&self, key: &str) -> Result<bool> {
        let (v, line) = self.raw(key);
        v.parse().map_err(|_| err(line, format!("`{key}` expects true or false, got `{v}`")))
    }

    fn list<T: std::str::FromStr>(&self, key: &str, sep: char) -> Result<Vec<T>> {
        let (v, line) = self.raw(key);
        v.split(sep)
            .map(|s| s.trim())
            .filter(|s| !s.is_empty())
            .map(|s| s.parse().map_err(|_| err(line, format!("`{key}`: cannot parse `{s}`"))))
            .collect()
    }

    /// Comma list broadcast to `dim` entries.
    fn vector(&self, key: &str, dim: usize) -> Result<Vec<f64>> {
        let v: Vec<f64> = self.list(key, ',')?;
        match v.len() {
            1 => Ok(vec![v[0]; dim]),
            n if n == dim => Ok(v),
            n => Err(err(self.line(key), format!("`{key}` needs 1 or {dim} values, got {n}"))),
        }
    }
}

fn at(line: usize) -> impl Fn(Error) -> Error {
    move |e| match e {
        Error::Config { .. } => e,
        other => err(line, other.to_string()),
    }
}

impl Config {
    fn from_entries(entries: BTreeMap<String, Entry>) -> Result<Self> {
        let rd = Reader { entries: &entries };

        let beta = rd.f64("problem.beta")?;
        let exps = HolderExponents::new(beta, rd.f64("problem.epsilon")?, rd.f64("coeff.lambda")?)
            .map_err(at(rd.line("problem.epsilon").max(rd.line("problem.beta")).max(rd.line("coeff.lambda"))))?;
        let t_end = rd.f64("problem.T")?;
        if !(t_end > 0.0) {
            return Err(err(rd.line("problem.T"), "`problem.T` must be positive"));
        }
        let solver_n = rd.usize("problem.solver_n")?;
        if solver_n < 2 {
            return Err(err(rd.line("problem.solver_n"), "`problem.solver_n` must be at least 2"));
        }
        let h = t_end / solver_n as f64;
        let fine_n = if rd.is_set("signal.fine_n") {
            let n = rd.usize("signal.fine_n")?;
            if n % solver_n != 0 {
                return Err(err(
                    rd.line("signal.fine_n"),
                    format!("`signal.fine_n` = {n} is not a multiple of the solver grid size {solver_n}"),
                ));
            }
            n
        } else {
            let f = rd.usize("problem.fine_factor")?;
            if f == 0 {
                return Err(err(rd.line("problem.fine_factor"), "`problem.fine_factor` must be positive"));
            }
            f * solver_n
        };

        let on_grid = |key: &str, r: f64| -> Result<f64> {
            steps_in(r, h).map_err(at(rd.line(key)))?;
            Ok(r)
        };
        let r = on_grid("problem.r", rd.f64("problem.r")?)?;
        let r0 = on_grid("problem.r0", rd.f64("problem.r0")?)?;
        if !(r0 > 0.0) || r > r0 {
            return Err(err(rd.line("problem.r").max(rd.line("problem.r0")), format!("need 0 ≤ r ≤ r0 with r0 > 0, got r = {r}, r0 = {r0}")));
        }
        let r_list: Vec<f64> = rd.list("study.r_list", ',')?;
        for &rr in &r_list {
            on_grid("study.r_list", rr)?;
        }
        let r_max = if rd.is_set("signal.r_max") {
            on_grid("signal.r_max", rd.f64("signal.r_max")?)?
        } else {
            r_list.iter().copied().fold(r0, f64::max)
        };

        let dim = rd.usize("signal.dim")?;
        if dim == 0 {
            return Err(err(rd.line("signal.dim"), "`signal.dim` must be positive"));
        }
        let kind_line = rd.line("signal.kind");
        let kind = match rd.string("signal.kind").as_str() {
            "brownian" => SignalKind::Brownian { ito_correction: rd.bool("signal.ito_correction")? },
            "smooth_poly" => {
                let rows: Vec<String> = rd.list("signal.params.coeffs", ';')?;
                let coeffs = rows
                    .iter()
                    .map(|row| {
                        row.split(',')
                            .map(|c| {
                                c.trim().parse::<f64>().map_err(|_| {
                                    err(rd.line("signal.params.coeffs"), format!("bad polynomial coefficient `{c}`"))
                                })
                            })
                            .collect::<Result<Vec<f64>>>()
                    })
                    .collect::<Result<Vec<_>>>()?;
                let coeffs = match coeffs.len() {
                    1 => vec![coeffs[0].clone(); dim],
                    n if n == dim => coeffs,
                    n => {
                        return Err(err(
                            rd.line("signal.params.coeffs"),
                            format!("need 1 or {dim} polynomial rows, got {n}"),
                        ))
                    }
                };
                SignalKind::SmoothPoly { coeffs }
            }
            "smooth_sine" => SignalKind::SmoothSine {
                amp: rd.vector("signal.params.amp", dim)?,
                freq: rd.vector("signal.params.freq", dim)?,
                phase: rd.vector("signal.params.phase", dim)?,
            },
            "fourier_holder" => SignalKind::FourierHolder {
                modes: rd.usize("signal.params.modes")?,
                decay: rd.f64("signal.params.decay")?,
                random_phase: rd.bool("signal.params.random_phase")?,
            },
            other => return Err(err(kind_line, format!("unknown signal kind `{other}`"))),
        };
        let master_seed = rd.u64("signal.seed")?;
        let signal = SignalSpec { kind, dim, t_end, fine_n, seed: master_seed, r_max };

        let builtin = Builtin::parse(&rd.string("coeff.name")).map_err(at(rd.line("coeff.name")))?;
        let drift = Drift {
            a: rd.f64("coeff.params.drift_a")?,
            c: rd.f64("coeff.params.drift_c")?,
            kappa: rd.f64("coeff.params.kappa")?,
        };
        let coeff = CoefficientModel::new(builtin, dim, dim, rd.f64("coeff.params.scale")?, drift)
            .map_err(at(rd.line("coeff.params.scale")))?;
        let eta = Eta { value: rd.f64("problem.eta0")?, slope: rd.f64("problem.eta_slope")? };
        let problem = ProblemSpec { signal, coeff, exps, eta, solver_n, r, r0 };
        problem.validate().map_err(at(rd.line("problem.r")))?;

        let seeds: Vec<u64> = rd.list("study.seeds", ',')?;
        let study = StudyConfig { base: problem.clone(), r_list, seeds };
        study.validate().map_err(at(rd.line("study.r_list")))?;

        let k = rd.f64("problem.K")?;
        if !(k >= 1.0) {
            return Err(err(rd.line("problem.K"), "`problem.K` must be at least 1"));
        }
        Ok(Config { entries, problem, study, k, master_seed })
    }

    /// Canonical text: every key with its effective value, grouped by section.
    pub fn serialize(&self) -> String {
        let rd = Reader { entries: &self.entries };
        let mut out = String::new();
        let mut current = "";
        for (key, _) in KEYS {
            let (sec, rest) = key.split_once('.').unwrap();
            let value = match *key {
                "signal.fine_n" if !rd.is_set(key) => self.problem.signal.fine_n.to_string(),
                "signal.r_max" if !rd.is_set(key) => fmt_f64(self.problem.signal.r_max),
                _ => rd.string(key),
            };
            if sec != current {
                if !current.is_empty() {
                    out.push('\n');
                }
                let _ = writeln!(out, "[{sec}]");
                current = sec;
            }
            let _ = writeln!(out, "{rest} = {value}");
        }
        out
    }

    /// Replaces the master seed; study seeds become `seed, seed + 1, …`.
    pub fn with_master_seed(mut self, seed: u64) -> Self {
        self.master_seed = seed;
        self.problem.signal.seed = seed;
        self.study.base.signal.seed = seed;
        let n = self.study.seeds.len() as u64;
        self.study.seeds = (0..n).map(|i| seed.wrapping_add(i)).collect();
        let seeds = self.study.seeds.iter().map(|s| s.to_string()).collect::<Vec<_>>().join(",");
        self.entries.insert("signal.seed".into(), Entry { value: seed.to_string(), line: 0 });
        self.entries.insert("study.seeds".into(), Entry { value: seeds, line: 0 });
        self
    }
}

pub fn fmt_f64(v: f64) -> String {
    format!("{v}")
}
