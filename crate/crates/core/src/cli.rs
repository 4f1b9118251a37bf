//! Command-line front end: loads model files, runs one analysis, and writes
//! CSV tables or JSON reports.
//!
//! Tabular results go to `--out` (or stdout) as CSV; a JSON sidecar with the
//! configuration, all defaults in force and the source descriptors goes to
//! `<out>.meta.json` (or stderr). Reports that are not tables are a single
//! JSON document.
//!
//! Exit codes: 0 ok, 1 a checked inequality or validity contract failed,
//! 2 bad input, 3 resource or search cap exceeded.

use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Parser, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use crate::entropy::{
    cesaro_entropy_sandwich, entropy_curve, entropy_rate_estimate, finite_entropy_rate, shift_residuals,
    LogBase,
};
use crate::error::{Error, Result};
use crate::evolution::{
    build_shift_representation, cesaro_mean, evolution_dimension, generic_shift, stationary_mean,
    DEFAULT_HORIZON, DEFAULT_K_MAX, RANK_TOL,
};
use crate::hmm::{CESARO_MAX_N, CESARO_TOL};
use crate::model_file::{load_model, LinearCombinationFile, ModelFile};
use crate::source::{check_consistency, Enumeration, Source, CONSISTENCY_TOL};
use crate::tv::{counterexample_construct, lipschitz_profile, tv_distance_estimate, tv_distance_t};

/// Slack allowed on every checked inequality.
pub const CHECK_TOL: f64 = 1e-9;
pub const DEFAULT_TV_TOL: f64 = 1e-9;
pub const DEFAULT_VALIDATE_T_MAX: usize = 6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CommandName {
    /// Validate a model file and check consistency of its marginals.
    Validate,
    /// H^t for t = 1..t-max, optionally with a windowed rate estimate.
    EntropyCurve,
    /// d_TV,t between two models for t = 1..t-max.
    Tv,
    /// The entropy continuity bound for t = 1..t-max.
    Lipschitz,
    /// Entropy of Cesàro means P_n against the shift average, n = 1..n.
    Cesaro,
    /// Stationary mean from the shift dynamics; writes a model file.
    StationaryMean,
    /// Numerical rank of the shifted measures.
    EvoDim,
    /// p-norm counterexample pair for the scaled entropy.
    Counterexample,
    /// The residual terms between H^t(P) and H^t(P∘T^{-k}).
    Residuals,
}

impl fmt::Display for CommandName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.to_possible_value().expect("no skipped variants").get_name())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Window {
    pub lo: usize,
    pub hi: usize,
}

impl FromStr for Window {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let (a, b) = s.split_once(':').ok_or("expected LO:HI")?;
        let lo = a.trim().parse().map_err(|e| format!("bad LO: {e}"))?;
        let hi = b.trim().parse().map_err(|e| format!("bad HI: {e}"))?;
        if lo == 0 || lo > hi {
            return Err(format!("need 1 <= LO <= HI, got {lo}:{hi}"));
        }
        Ok(Window { lo, hi })
    }
}

fn parse_base(s: &str) -> std::result::Result<LogBase, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

/// One invocation: a command, its model files and options.
#[derive(Clone, Debug, Parser, Serialize)]
#[command(name = "entrate", version, about = "Entropy rates, total variation and shift dynamics of discrete sources")]
pub struct ExperimentConfig {
    #[arg(value_enum)]
    pub command: CommandName,
    /// Model files (JSON).
    pub models: Vec<PathBuf>,
    #[arg(long)]
    pub t_max: Option<usize>,
    #[arg(long)]
    pub t: Option<usize>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub tol: Option<f64>,
    /// Window for the entropy-rate estimate.
    #[arg(long, value_name = "LO:HI")]
    pub window: Option<Window>,
    #[arg(long)]
    pub p: Option<f64>,
    #[arg(long)]
    pub delta: Option<f64>,
    /// Number of shifts used by evo-dim and stationary-mean.
    #[arg(long)]
    pub k_max: Option<usize>,
    /// Longest word length used to represent measures.
    #[arg(long = "horizon", visible_alias = "L")]
    pub horizon: Option<usize>,
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
    /// Logarithm base of entropy outputs: e or 2.
    #[arg(long, default_value = "e", value_parser = parse_base)]
    pub base: LogBase,
}

/// What a command produced.
#[derive(Clone, Debug)]
pub struct Outcome {
    /// 0, or 1 when a checked contract failed.
    pub exit_code: i32,
    /// CSV table or JSON document.
    pub body: String,
    /// Sidecar metadata for CSV bodies.
    pub metadata: Option<Value>,
}

fn require<T: Copy>(v: Option<T>, flag: &str, cmd: CommandName) -> Result<T> {
    v.ok_or_else(|| Error::Input(format!("{cmd} needs --{flag}")))
}

fn models(cfg: &ExperimentConfig, min: usize, max: usize) -> Result<Vec<(ModelFile, Source)>> {
    let n = cfg.models.len();
    if n < min || n > max {
        let want = if min == max { format!("{min}") } else { format!("{min} to {max}") };
        return Err(Error::Input(format!("{} takes {want} model file(s), got {n}", cfg.command)));
    }
    cfg.models.iter().map(load_model).collect()
}

fn csv_writer() -> csv::Writer<Vec<u8>> {
    csv::Writer::from_writer(Vec::new())
}

fn finish_csv(w: csv::Writer<Vec<u8>>) -> Result<String> {
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}

fn header(cfg: &ExperimentConfig, opts: &Enumeration, sources: &[&Source], defaults: Value) -> Value {
    json!({
        "command": cfg.command,
        "config": cfg,
        "enumeration": {"max_entries": opts.max_entries, "min_prob": opts.min_prob},
        "defaults": defaults,
        "sources": sources.iter().map(|s| serde_json::to_value(s.descriptor()).unwrap_or(Value::Null)).collect::<Vec<_>>(),
    })
}

fn pretty(v: &Value) -> String {
    serde_json::to_string_pretty(v).expect("json values serialize") + "\n"
}

/// Runs one command. Module errors are returned; failed contracts give exit
/// code 1 with a normal report.
pub fn run_command(cfg: &ExperimentConfig) -> Result<Outcome> {
    let opts = Enumeration::from_env();
    let cmd = cfg.command;
    match cmd {
        CommandName::Validate => {
            let path = match cfg.models.as_slice() {
                [p] => p,
                _ => return Err(Error::input("validate takes exactly one model file")),
            };
            let text = fs::read_to_string(path)
                .map_err(|e| Error::Input(format!("cannot read {}: {e}", path.display())))?;
            let file = ModelFile::parse(&text)?;
            let validation = file.validate()?;
            let t_max = cfg.t_max.unwrap_or(DEFAULT_VALIDATE_T_MAX);
            let tol = cfg.tol.unwrap_or(CONSISTENCY_TOL);
            let consistency = if validation.pass {
                Some(check_consistency(&file.build()?, t_max, tol)?)
            } else {
                None
            };
            let pass = validation.pass && consistency.as_ref().is_some_and(|c| c.pass);
            let report = json!({
                "path": path.display().to_string(),
                "pass": pass,
                "validation": validation,
                "consistency": consistency,
                "defaults": {"t_max": t_max, "tol": tol},
            });
            Ok(Outcome { exit_code: if pass { 0 } else { 1 }, body: pretty(&report), metadata: None })
        }

        CommandName::EntropyCurve => {
            let ms = models(cfg, 1, 1)?;
            let source = &ms[0].1;
            let t_max = require(cfg.t_max, "t-max", cmd)?;
            let curve = entropy_curve(source, t_max, &opts)?.in_base(cfg.base);
            let mut body = Vec::new();
            curve.write_csv(&mut body)?;
            let mut meta = header(cfg, &opts, &[source], json!({"base": cfg.base.tag()}));
            if let Some(w) = cfg.window {
                let est = entropy_rate_estimate(source, w.lo, w.hi, &opts)?;
                let f = cfg.base.from_nats();
                meta["estimate"] = json!({
                    "window_lo": est.window_lo,
                    "window_hi": est.window_hi,
                    "upper_est": est.upper_est * f,
                    "lower_est": est.lower_est * f,
                    "cauchy_gap": est.cauchy_gap * f,
                });
            }
            Ok(Outcome { exit_code: 0, body: String::from_utf8(body).expect("utf-8"), metadata: Some(meta) })
        }

        CommandName::Tv | CommandName::Lipschitz => {
            let ms = models(cfg, 2, 2)?;
            let (p, q) = (&ms[0].1, &ms[1].1);
            let t_max = require(cfg.t_max, "t-max", cmd)?;
            let tol = cfg.tol.unwrap_or(DEFAULT_TV_TOL);
            let rows = lipschitz_profile(p, q, t_max, &opts)?;
            let seq = tv_distance_estimate(p, q, t_max, tol, &opts)?;
            let mut w = csv_writer();
            w.write_record(["t", "d_tv_t", "lhs", "rhs", "applicable"]).map_err(csv_err)?;
            for r in &rows {
                w.write_record([
                    r.t.to_string(),
                    r.d_tv_t.to_string(),
                    r.lhs.to_string(),
                    r.rhs.to_string(),
                    r.applicable.to_string(),
                ])
                .map_err(csv_err)?;
            }
            let violations: Vec<usize> = rows.iter().filter(|r| !r.holds(CHECK_TOL)).map(|r| r.t).collect();
            let monotone = seq.values.windows(2).all(|x| x[1] >= x[0] - 1e-12);
            let mut meta = header(cfg, &opts, &[p, q], json!({"tol": tol, "check_tol": CHECK_TOL}));
            meta["converged"] = json!(seq.converged);
            meta["last_increment"] = json!(seq.last_increment);
            meta["lower_bound"] = json!(seq.lower_bound());
            meta["monotone"] = json!(monotone);
            meta["violations"] = json!(violations);
            let failed = !monotone || (cmd == CommandName::Lipschitz && !violations.is_empty());
            Ok(Outcome { exit_code: i32::from(failed), body: finish_csv(w)?, metadata: Some(meta) })
        }

        CommandName::Cesaro => {
            let ms = models(cfg, 1, 2)?;
            let source = &ms[0].1;
            let n_max = require(cfg.n, "n", cmd)?;
            let t = require(cfg.t, "t", cmd)?;
            let reference = ms.get(1).map(|m| &m.1);
            let f = cfg.base.from_nats();
            let mut w = csv_writer();
            w.write_record(["n", "lower", "entropy_rate", "upper", "d_tv_t"]).map_err(csv_err)?;
            let mut failed = Vec::new();
            for n in 1..=n_max {
                let s = cesaro_entropy_sandwich(source, n, t, &opts)?;
                if !s.holds(CHECK_TOL) {
                    failed.push(n);
                }
                let d = match reference {
                    Some(r) => tv_distance_t(&cesaro_mean(source, n)?, r, t, &opts)?.to_string(),
                    None => String::new(),
                };
                w.write_record([
                    n.to_string(),
                    (s.lower * f).to_string(),
                    (s.mid * f).to_string(),
                    (s.upper * f).to_string(),
                    d,
                ])
                .map_err(csv_err)?;
            }
            let sources: Vec<&Source> = ms.iter().map(|m| &m.1).collect();
            let mut meta = header(cfg, &opts, &sources, json!({"base": cfg.base.tag(), "check_tol": CHECK_TOL}));
            meta["sandwich_failures"] = json!(failed);
            Ok(Outcome { exit_code: i32::from(!failed.is_empty()), body: finish_csv(w)?, metadata: Some(meta) })
        }

        CommandName::StationaryMean => {
            let ms = models(cfg, 1, 1)?;
            let (file, source) = &ms[0];
            let k_max = cfg.k_max.unwrap_or(DEFAULT_K_MAX);
            let horizon = cfg.horizon.unwrap_or(DEFAULT_HORIZON);
            let tol = cfg.tol.unwrap_or(CESARO_TOL);
            let rep = build_shift_representation(source, k_max, horizon, RANK_TOL, &opts)?;
            let mean = stationary_mean(source, &rep, tol, CESARO_MAX_N, &opts)?;
            let out = ModelFile::LinearCombination(LinearCombinationFile {
                base: Box::new(file.clone()),
                shifts: mean.basis_shifts.clone(),
                weights: mean.weights.clone(),
                note: Some("stationary mean".into()),
            });
            let mut meta = header(
                cfg,
                &opts,
                &[source],
                json!({"k_max": k_max, "L": horizon, "rank_tol": RANK_TOL, "tol": tol, "max_n": CESARO_MAX_N}),
            );
            meta["representation"] = serde_json::to_value(&rep).map_err(|e| Error::Parse(e.to_string()))?;
            meta["stationary_mean"] = serde_json::to_value(&mean).map_err(|e| Error::Parse(e.to_string()))?;
            let ok = mean.valid && mean.converged;
            Ok(Outcome { exit_code: i32::from(!ok), body: out.to_json() + "\n", metadata: Some(meta) })
        }

        CommandName::EvoDim => {
            let ms = models(cfg, 1, 1)?;
            let k_max = cfg.k_max.unwrap_or(DEFAULT_K_MAX);
            let horizon = cfg.horizon.unwrap_or(DEFAULT_HORIZON);
            let tol = cfg.tol.unwrap_or(RANK_TOL);
            let d = evolution_dimension(&ms[0].1, k_max, horizon, tol, &opts)?;
            let v = serde_json::to_value(&d).map_err(|e| Error::Parse(e.to_string()))?;
            Ok(Outcome { exit_code: 0, body: pretty(&v), metadata: None })
        }

        CommandName::Counterexample => {
            if !cfg.models.is_empty() {
                return Err(Error::input("counterexample takes no model files"));
            }
            let p = require(cfg.p, "p", cmd)?;
            let delta = require(cfg.delta, "delta", cmd)?;
            let c = counterexample_construct(p, delta)?;
            let verified = c.verify();
            let mut v = serde_json::to_value(c).map_err(|e| Error::Parse(e.to_string()))?;
            v["verified"] = json!(verified);
            Ok(Outcome { exit_code: i32::from(!verified), body: pretty(&v), metadata: None })
        }

        CommandName::Residuals => {
            let ms = models(cfg, 1, 1)?;
            let source = &ms[0].1;
            let k = require(cfg.k, "k", cmd)?;
            let t = require(cfg.t, "t", cmd)?;
            let r = shift_residuals(source, k, t, &opts)?;
            let h = finite_entropy_rate(source, t, &opts)?;
            let h_shift = finite_entropy_rate(&generic_shift(source, k)?, t, &opts)?;
            let identity_error = ((h + r.j) - (r.i + h_shift)).abs();
            let cap = k as f64 / t as f64 * (source.alphabet().size() as f64).ln();
            let in_range = |x: f64| (-CHECK_TOL..=cap + CHECK_TOL).contains(&x);
            let pass = identity_error <= CHECK_TOL && in_range(r.i) && in_range(r.j);
            let f = cfg.base.from_nats();
            let v = json!({
                "k": k,
                "t": t,
                "base": cfg.base.tag(),
                "i": r.i * f,
                "j": r.j * f,
                "entropy_rate": h * f,
                "entropy_rate_shifted": h_shift * f,
                "identity_error": identity_error * f,
                "upper_bound": cap * f,
                "pass": pass,
                "check_tol": CHECK_TOL,
            });
            Ok(Outcome { exit_code: i32::from(!pass), body: pretty(&v), metadata: None })
        }
    }
}

fn meta_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".meta.json");
    PathBuf::from(s)
}

/// Machine-readable error document.
pub fn error_json(e: &Error) -> Value {
    json!({"error": e.kind(), "message": e.to_string(), "exit_code": e.exit_code()})
}

/// Runs the command and writes its outputs; returns the process exit code.
pub fn execute(cfg: &ExperimentConfig) -> i32 {
    let result = run_command(cfg).and_then(|o| {
        match &cfg.out {
            Some(path) => {
                fs::write(path, &o.body)?;
                if let Some(m) = &o.metadata {
                    fs::write(meta_path(path), pretty(m))?;
                }
            }
            None => {
                std::io::stdout().write_all(o.body.as_bytes())?;
                if let Some(m) = &o.metadata {
                    std::io::stderr().write_all(pretty(m).as_bytes())?;
                }
            }
        }
        Ok(o.exit_code)
    });
    match result {
        Ok(code) => code,
        Err(e) => {
            eprint!("{}", pretty(&error_json(&e)));
            e.exit_code()
        }
    }
}
