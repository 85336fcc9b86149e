//! Experiment orchestration: configuration files and flags, single and
//! batch runs, per-iteration CSV telemetry, summary tables and the
//! invariant suites behind `verify`.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::Vector;
use crate::operators::{DiscreteGradient, GaussianBlur, ImageShape, LinearOperator};
use crate::oracles::{self, L1Norm};
use crate::problems::{self, pgm, ProblemInstance, ProblemKind};
use crate::prox::{self, Criterion};
use crate::solvers::{self, Algorithm, IterateRecord, Momentum, RunOutput, Schedule, SolverConfig, StopRule};
use crate::stepsize::{EstimateSequence, StepsizePolicy};

/// Every key accepted in a config file, each also a `--flag`.
pub const KEYS: &[&str] = &[
    "problem",
    "n",
    "seed",
    "tau",
    "noise",
    "image",
    "algo",
    "sigma2",
    "rk-schedule",
    "epsk-schedule",
    "ek-schedule",
    "stepsize",
    "max-outer",
    "max-inner",
    "tol",
    "stop",
    "momentum",
    "exact-prox",
    "c",
    "label",
    "out",
];

const SECTIONS: &[&str] = &["problem", "solver", "output"];

/// Flat key/value settings gathered from a config file and flags.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Settings(pub BTreeMap<String, String>);

impl Settings {
    /// Parses `key = value` lines grouped under `[problem]`, `[solver]` or
    /// `[output]` headers. `#` starts a comment line.
    pub fn parse(text: &str) -> Result<Self> {
        let mut map = BTreeMap::new();
        let mut problems = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
                if !SECTIONS.contains(&name.trim()) {
                    problems.push(format!("line {}: unknown section [{}]", lineno + 1, name.trim()));
                }
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                problems.push(format!("line {}: expected key = value", lineno + 1));
                continue;
            };
            let (k, v) = (k.trim(), v.trim());
            if !KEYS.contains(&k) {
                problems.push(format!("{k}: unknown key (line {})", lineno + 1));
            } else if map.insert(k.to_string(), v.to_string()).is_some() {
                problems.push(format!("{k}: given twice (line {})", lineno + 1));
            }
        }
        if problems.is_empty() {
            Ok(Settings(map))
        } else {
            Err(Error::Config(problems))
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&fs::read_to_string(path)?)
    }

    /// Later settings win.
    pub fn merged(mut self, overrides: &Settings) -> Self {
        for (k, v) in &overrides.0 {
            self.0.insert(k.clone(), v.clone());
        }
        self
    }

    pub fn set(&mut self, key: &str, value: impl Into<String>) {
        self.0.insert(key.to_string(), value.into());
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.0.get(key).map(String::as_str)
    }
}

/// Problem side of an experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemSpec {
    pub kind: ProblemKind,
    pub n: usize,
    pub seed: u64,
    pub tau: f64,
    pub noise: f64,
    pub image: Option<PathBuf>,
}

impl ProblemSpec {
    pub fn build(&self) -> Result<ProblemInstance> {
        match self.kind {
            ProblemKind::Lasso => problems::make_lasso(self.n, self.seed),
            ProblemKind::Toy1d => Ok(problems::make_toy1d()),
            ProblemKind::TvDeblur => match &self.image {
                Some(path) => {
                    let (shape, img) = pgm::read_pgm(path)?;
                    problems::tv_deblur_from_image(
                        shape,
                        &img,
                        problems::BLUR_SIZE,
                        problems::BLUR_STD,
                        self.tau,
                        self.noise,
                        self.seed,
                    )
                }
                None => problems::make_tv_deblur(self.n, self.tau, self.noise, self.seed),
            },
            ProblemKind::Custom => Err(Error::Config(vec!["problem: custom problems are library-only".into()])),
        }
    }
}

/// Stepsize as written in a config; resolved against the built problem.
#[derive(Debug, Clone, PartialEq)]
pub enum StepsizeSpec {
    /// `const:V`, or `const:auto` for `1/L`
    Constant(Option<f64>),
    /// `dim:A0:P`, or `dim:auto:P` for `α0 = 1/L`
    Diminishing { alpha0: Option<f64>, exponent: f64 },
    /// `polyak-exact:G`
    PolyakExact { gamma: f64 },
    /// `polyak:G:S0:SHRINK`
    PolyakEstimate { gamma: f64, s0: f64, shrink: f64 },
}

impl StepsizeSpec {
    pub fn parse(spec: &str) -> Result<Self> {
        let bad = || Error::Parse(format!("unrecognized stepsize {spec:?}"));
        let num = |s: &str| s.parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(bad);
        let auto = |s: &str| if s == "auto" { Ok(None) } else { num(s).map(Some) };
        let parts: Vec<&str> = spec.split(':').collect();
        Ok(match parts.as_slice() {
            ["const", v] => StepsizeSpec::Constant(auto(v)?),
            ["dim", a, p] => StepsizeSpec::Diminishing { alpha0: auto(a)?, exponent: num(p)? },
            ["polyak-exact", g] => StepsizeSpec::PolyakExact { gamma: num(g)? },
            ["polyak", g, s0, sh] => StepsizeSpec::PolyakEstimate { gamma: num(g)?, s0: num(s0)?, shrink: num(sh)? },
            _ => return Err(bad()),
        })
    }

    pub fn resolve(&self, problem: &ProblemInstance, algo: Algorithm, c: Option<f64>) -> Result<StepsizePolicy> {
        let inv_l = || {
            problem
                .lipschitz
                .map(|l| 1.0 / l)
                .ok_or_else(|| Error::Config(vec!["stepsize: auto needs a Lipschitz constant".into()]))
        };
        Ok(match *self {
            StepsizeSpec::Constant(a) => StepsizePolicy::Constant(match a {
                Some(a) => a,
                None => inv_l()?,
            }),
            StepsizeSpec::Diminishing { alpha0, exponent } => StepsizePolicy::Diminishing {
                alpha0: match alpha0 {
                    Some(a) => a,
                    None => inv_l()?,
                },
                exponent,
            },
            StepsizeSpec::PolyakExact { gamma } => {
                let s_star = problem
                    .reference
                    .as_ref()
                    .map(|r| r.s_star)
                    .ok_or_else(|| Error::Config(vec!["stepsize: polyak-exact needs a reference optimum".into()]))?;
                StepsizePolicy::PolyakExact { gamma_lo: gamma, gamma_hi: gamma, s_star }
            }
            StepsizeSpec::PolyakEstimate { gamma, s0, shrink } => {
                let estimates = EstimateSequence::new(s0, shrink);
                if algo == Algorithm::Pesm2 {
                    let c = c.or(problem.g.subgradient_norm_bound()).unwrap_or(1.0).max(f64::MIN_POSITIVE);
                    StepsizePolicy::PolyakAlg2 { gamma_lo: gamma, gamma_hi: gamma, estimates, c }
                } else {
                    StepsizePolicy::PolyakAlg1 { gamma_lo: gamma, gamma_hi: gamma, estimates }
                }
            }
        })
    }
}

/// A fully specified experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub label: String,
    pub problem: ProblemSpec,
    pub algorithm: Algorithm,
    pub stepsize: StepsizeSpec,
    pub sigma2: f64,
    pub r_schedule: Schedule,
    pub eps_schedule: Schedule,
    pub e_schedule: Schedule,
    pub momentum: Momentum,
    pub exact_prox: bool,
    pub max_outer: usize,
    pub max_inner: usize,
    pub stop: StopRule,
    pub c: Option<f64>,
    pub out: Option<PathBuf>,
}

impl ExperimentConfig {
    /// Applies problem-dependent defaults and validates every field,
    /// reporting all problems at once.
    pub fn from_settings(s: &Settings) -> Result<Self> {
        let mut errs: Vec<String> = Vec::new();
        fn field<T>(errs: &mut Vec<String>, key: &str, v: std::result::Result<T, String>) -> Option<T> {
            v.map_err(|e| errs.push(format!("{key}: {e}"))).ok()
        }
        let parse_num = |key: &str| -> Option<std::result::Result<f64, String>> {
            s.get(key).map(|v| v.parse::<f64>().map_err(|_| format!("not a number: {v:?}")))
        };
        let parse_int = |key: &str| -> Option<std::result::Result<u64, String>> {
            s.get(key).map(|v| v.parse::<u64>().map_err(|_| format!("not a nonnegative integer: {v:?}")))
        };

        let kind = match s.get("problem").unwrap_or("lasso") {
            "lasso" => ProblemKind::Lasso,
            "tv" => ProblemKind::TvDeblur,
            "toy1d" => ProblemKind::Toy1d,
            other => {
                errs.push(format!("problem: expected lasso, tv or toy1d, got {other:?}"));
                ProblemKind::Lasso
            }
        };
        let tv = kind == ProblemKind::TvDeblur;
        let algorithm = field(&mut errs, "algo", Algorithm::parse(s.get("algo").unwrap_or("pesm2")).map_err(|e| e.to_string()))
            .unwrap_or(Algorithm::Pesm2);
        let n = parse_int("n").and_then(|r| field(&mut errs, "n", r)).unwrap_or(if tv { 32 } else { 10 }) as usize;
        let seed = parse_int("seed").and_then(|r| field(&mut errs, "seed", r)).unwrap_or(0);
        let tau = parse_num("tau").and_then(|r| field(&mut errs, "tau", r)).unwrap_or(1e-4);
        let noise = parse_num("noise").and_then(|r| field(&mut errs, "noise", r)).unwrap_or(1e-4);
        let sigma2 = parse_num("sigma2").and_then(|r| field(&mut errs, "sigma2", r)).unwrap_or(0.5);
        if !(0.0..1.0).contains(&sigma2) {
            errs.push(format!("sigma2: must lie in [0, 1), got {sigma2}"));
        }
        let sched = |errs: &mut Vec<String>, key: &str, default: &str| {
            field(errs, key, Schedule::parse(s.get(key).unwrap_or(default)).map_err(|e| e.to_string()))
                .unwrap_or(Schedule::Zero)
        };
        let r_schedule = sched(&mut errs, "rk-schedule", "pow:1:1");
        let eps_schedule = sched(&mut errs, "epsk-schedule", if tv { "zero" } else { "pow:1:1" });
        let e_schedule = sched(&mut errs, "ek-schedule", "sqpow:1:1.5");
        let default_step = if tv || matches!(algorithm, Algorithm::Ipgm) { "const:auto" } else { "dim:auto:1" };
        let stepsize = field(
            &mut errs,
            "stepsize",
            StepsizeSpec::parse(s.get("stepsize").unwrap_or(default_step)).map_err(|e| e.to_string()),
        )
        .unwrap_or(StepsizeSpec::Constant(None));
        let momentum = match s.get("momentum").unwrap_or("none") {
            "none" => Momentum::None,
            "standard" => Momentum::Standard,
            other => {
                errs.push(format!("momentum: expected none or standard, got {other:?}"));
                Momentum::None
            }
        };
        let exact_prox = match s.get("exact-prox").unwrap_or("false") {
            "true" => true,
            "false" => false,
            other => {
                errs.push(format!("exact-prox: expected true or false, got {other:?}"));
                false
            }
        };
        let max_outer = parse_int("max-outer")
            .and_then(|r| field(&mut errs, "max-outer", r))
            .unwrap_or(if tv { 5000 } else { 10_000 }) as usize;
        let max_inner = parse_int("max-inner").and_then(|r| field(&mut errs, "max-inner", r)).unwrap_or(3000) as usize;
        let tol = parse_num("tol").and_then(|r| field(&mut errs, "tol", r)).unwrap_or(1e-4);
        let stop = match s.get("stop").unwrap_or(if tv { "reldiff" } else { "sqstep" }) {
            "sqstep" => StopRule::SquaredStep(tol),
            "reldiff" => StopRule::RelativeDiff(tol),
            "never" => StopRule::Never,
            other => {
                errs.push(format!("stop: expected sqstep, reldiff or never, got {other:?}"));
                StopRule::Never
            }
        };
        let c = parse_num("c").and_then(|r| field(&mut errs, "c", r));
        let image = s.get("image").map(PathBuf::from);
        if image.is_some() && !tv {
            errs.push("image: only meaningful for problem = tv".into());
        }
        let out = s.get("out").map(PathBuf::from);
        let label = s
            .get("label")
            .map(str::to_string)
            .unwrap_or_else(|| default_label(kind, algorithm, sigma2, &e_schedule));

        let cfg = ExperimentConfig {
            label,
            problem: ProblemSpec { kind, n, seed, tau, noise, image },
            algorithm,
            stepsize,
            sigma2,
            r_schedule,
            eps_schedule,
            e_schedule,
            momentum,
            exact_prox,
            max_outer,
            max_inner,
            stop,
            c,
            out,
        };
        // solver-level ranges (σ for the accelerated method, budgets, tolerances)
        let probe = cfg.solver_config(StepsizePolicy::Constant(1.0));
        if let Err(Error::Config(v)) = probe.validate() {
            errs.extend(v);
        }
        if errs.is_empty() {
            Ok(cfg)
        } else {
            Err(Error::Config(errs))
        }
    }

    fn solver_config(&self, stepsize: StepsizePolicy) -> SolverConfig {
        SolverConfig {
            eps_schedule: self.eps_schedule,
            r_schedule: self.r_schedule,
            e_schedule: self.e_schedule,
            sigma: self.sigma2.sqrt(),
            max_outer: self.max_outer,
            max_inner: self.max_inner,
            stop: self.stop,
            seed: self.problem.seed,
            c_override: self.c,
            momentum: self.momentum,
            exact_prox: self.exact_prox,
            ..SolverConfig::new(self.algorithm, stepsize)
        }
    }

    /// The solver configuration for an already built problem.
    pub fn resolve(&self, problem: &ProblemInstance) -> Result<SolverConfig> {
        let policy = self.stepsize.resolve(problem, self.algorithm, self.c)?;
        let cfg = self.solver_config(policy);
        cfg.validate()?;
        Ok(cfg)
    }
}

fn default_label(kind: ProblemKind, algo: Algorithm, sigma2: f64, e: &Schedule) -> String {
    match algo {
        Algorithm::Pesm2 | Algorithm::Accel => format!("{}-{}-s2={sigma2}", kind.label(), algo.label()),
        Algorithm::Ipgm => match e.sqrt_decay() {
            Some(q) => format!("{}-ipgm-q={q}", kind.label()),
            None => format!("{}-ipgm", kind.label()),
        },
        _ => format!("{}-{}", kind.label(), algo.label()),
    }
}

/// One row of a comparison table.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub label: String,
    pub rel_diff: f64,
    pub func_val: f64,
    /// Wall-clock seconds of the solve call alone.
    pub cpu_seconds: f64,
    pub ext_it: usize,
    pub int_it: usize,
    pub flagged: usize,
}

impl SummaryRow {
    pub fn from_output(label: &str, out: &RunOutput, seconds: f64) -> Self {
        SummaryRow {
            label: label.to_string(),
            rel_diff: out.final_rel_diff(),
            func_val: out.final_value,
            cpu_seconds: seconds,
            ext_it: out.outer_iterations(),
            int_it: out.inner_iterations(),
            flagged: out.flagged(),
        }
    }
}

pub struct ExperimentResult {
    pub summary: SummaryRow,
    pub csv: String,
    pub output: RunOutput,
}

pub const CSV_HEADER: &str =
    "iter,func_val,best_val,alpha_k,eps_k,eps_bar_k,residual_lhs,residual_rhs,inner_iters,flagged,rel_diff,elapsed_ms";

/// Per-iteration telemetry. Floats use the shortest round-trip scientific
/// form, so identical runs give identical bytes apart from `elapsed_ms`.
pub fn records_csv(records: &[IterateRecord]) -> String {
    let mut s = String::with_capacity(64 * (records.len() + 1));
    s.push_str(CSV_HEADER);
    s.push('\n');
    for r in records {
        let _ = writeln!(
            s,
            "{},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{},{},{:e},{:.3}",
            r.k,
            r.func_val,
            r.best_val,
            r.alpha_k,
            r.eps_k,
            r.eps_bar_k,
            r.residual_lhs,
            r.residual_rhs,
            r.inner_iterations,
            u8::from(r.flagged),
            r.rel_diff,
            r.elapsed.as_secs_f64() * 1e3,
        );
    }
    s
}

/// Builds the problem, runs the solver and writes the CSV when `out` is set.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    let problem = cfg.problem.build()?;
    run_on(cfg, &problem)
}

/// [`run_experiment`] on a problem built elsewhere.
pub fn run_on(cfg: &ExperimentConfig, problem: &ProblemInstance) -> Result<ExperimentResult> {
    let solver = cfg.resolve(problem)?;
    let start = Instant::now();
    let output = solvers::run(problem, &solver)?;
    let seconds = start.elapsed().as_secs_f64();
    let csv = records_csv(&output.records);
    if let Some(path) = &cfg.out {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            fs::create_dir_all(dir)?;
        }
        fs::write(path, &csv)?;
    }
    Ok(ExperimentResult {
        summary: SummaryRow::from_output(&cfg.label, &output, seconds),
        csv,
        output,
    })
}

/// Worker count for batches: `PROXEPS_THREADS` when set, otherwise rayon's default.
pub fn batch_threads() -> Option<usize> {
    std::env::var("PROXEPS_THREADS")
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
}

/// Runs independent experiments in parallel; results keep input order.
pub fn run_batch(configs: &[ExperimentConfig]) -> Result<Vec<Result<ExperimentResult>>> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = batch_threads() {
        builder = builder.num_threads(n);
    }
    let pool = builder.build().map_err(|e| Error::Config(vec![format!("threads: {e}")]))?;
    Ok(pool.install(|| configs.par_iter().map(run_experiment).collect()))
}

/// Six significant digits, as used for `FuncVal` in both table and CSV.
pub fn sig6(v: f64) -> String {
    format!("{v:.5e}")
}

/// Aligned text table and CSV with the same cell strings.
pub fn compare_table(rows: &[SummaryRow]) -> (String, String) {
    let header = ["Method", "RelDiff", "FuncVal", "CPU time", "ExtIt", "IntIt", "Flagged"];
    let cells: Vec<[String; 7]> = rows
        .iter()
        .map(|r| {
            [
                r.label.clone(),
                format!("{:.4e}", r.rel_diff),
                sig6(r.func_val),
                format!("{:.4}", r.cpu_seconds),
                r.ext_it.to_string(),
                r.int_it.to_string(),
                r.flagged.to_string(),
            ]
        })
        .collect();
    let mut width = header.map(str::len);
    for row in &cells {
        for (w, c) in width.iter_mut().zip(row) {
            *w = (*w).max(c.len());
        }
    }
    let mut table = String::new();
    let line = |out: &mut String, row: &[&str]| {
        for (i, (c, w)) in row.iter().zip(width).enumerate() {
            if i == 0 {
                let _ = write!(out, "{c:<w$}");
            } else {
                let _ = write!(out, "  {c:>w$}");
            }
        }
        out.push('\n');
    };
    line(&mut table, &header);
    table.push_str(&"-".repeat(width.iter().sum::<usize>() + 2 * (width.len() - 1)));
    table.push('\n');
    let mut csv = "method,rel_diff,func_val,cpu_seconds,ext_it,int_it,flagged\n".to_string();
    for row in &cells {
        let refs: Vec<&str> = row.iter().map(String::as_str).collect();
        line(&mut table, &refs);
        csv.push_str(&row.join(","));
        csv.push('\n');
    }
    (table, csv)
}

/// Which invariant suite `verify` runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    Lemmas,
    Accel,
    Prox,
    Oracles,
}

impl Suite {
    pub fn parse(s: &str) -> Result<Self> {
        Ok(match s {
            "lemmas" => Suite::Lemmas,
            "accel" => Suite::Accel,
            "prox" => Suite::Prox,
            "oracles" => Suite::Oracles,
            other => return Err(Error::Parse(format!("unknown suite {other:?}"))),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckLine {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SuiteReport {
    pub checks: Vec<CheckLine>,
}

impl SuiteReport {
    fn push(&mut self, name: impl Into<String>, pass: bool, detail: impl Into<String>) {
        self.checks.push(CheckLine { name: name.into(), pass, detail: detail.into() });
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        for c in &self.checks {
            let status = if c.pass { "PASS" } else { "FAIL" };
            if c.detail.is_empty() {
                let _ = writeln!(s, "{status} {}", c.name);
            } else {
                let _ = writeln!(s, "{status} {}: {}", c.name, c.detail);
            }
        }
        s
    }
}

pub fn verify_suite(suite: Suite) -> Result<SuiteReport> {
    match suite {
        Suite::Lemmas => suite_lemmas(),
        Suite::Accel => suite_accel(),
        Suite::Prox => suite_prox(),
        Suite::Oracles => suite_oracles(),
    }
}

fn lemma_configs(alpha0: f64) -> Vec<SolverConfig> {
    let base = |algo, sigma: f64| SolverConfig {
        eps_schedule: Schedule::Power { scale: 1.0, exponent: 1.0 },
        r_schedule: Schedule::Power { scale: 1.0, exponent: 1.0 },
        sigma,
        max_outer: 200,
        keep_vectors: true,
        ..SolverConfig::new(algo, StepsizePolicy::Diminishing { alpha0, exponent: 1.0 })
    };
    vec![base(Algorithm::Pesm1, 0.0), base(Algorithm::Pesm2, 0.3), base(Algorithm::Pesm2, 0.9)]
}

fn suite_lemmas() -> Result<SuiteReport> {
    let mut rep = SuiteReport::default();
    for (n, seed) in [(2, 1), (5, 2), (10, 3)] {
        let p = problems::make_lasso(n, seed)?;
        let r = p.reference.clone().expect("make_lasso attaches a reference");
        let f_ref = p.objective(&r.x_star);
        for cfg in lemma_configs(1.0 / p.lipschitz.expect("lasso is smooth")) {
            let out = solvers::run(&p, &cfg)?;
            let mut worst = f64::INFINITY;
            let mut ok = true;
            let mut bound_ok = true;
            for (k, rec) in out.records.iter().enumerate() {
                match solvers::verify_descent_lemma(rec, &r.x_star, f_ref) {
                    Ok(sl) => worst = worst.min(sl / rec.lemma_scale),
                    Err(_) => ok = false,
                }
                let bound = if cfg.algorithm == Algorithm::Pesm1 {
                    solvers::rate_bound_alg1(&out.records, r.d0, k)
                } else {
                    solvers::rate_bound_alg2(&out.records, r.d0, k)
                };
                if rec.best_val - r.s_star > bound + 1e-9 * (1.0 + bound.abs()) {
                    bound_ok = false;
                }
            }
            let name = format!("lasso n={n} {} sigma={}", cfg.algorithm.label(), cfg.sigma);
            rep.push(format!("descent inequality, {name}"), ok, format!("min relative slack {worst:e}"));
            rep.push(format!("rate bound, {name}"), bound_ok, format!("{} iterations", out.records.len()));
        }
    }
    Ok(rep)
}

fn suite_accel() -> Result<SuiteReport> {
    let mut rep = SuiteReport::default();
    let (s2, l) = (0.25f64, 1.0);
    let a = s2 / l * (1.0 - s2);
    let b1 = 0.5 * (a + (a * a).sqrt());
    let b2 = 0.5 * (a + (a * a + 4.0 * a * b1).sqrt());
    rep.push(
        "beta/t recursion at sigma^2=0.25, L=1",
        (b1 - 0.1875).abs() < 1e-6 && (b2 - 0.303382).abs() < 1e-6 && (b1 + b2 - 0.490881).abs() < 1e-6,
        format!("beta1 {b1}, beta2 {b2:.6}, t2 {:.6}", b1 + b2),
    );
    let p = problems::make_lasso(5, 1)?;
    let r = p.reference.clone().expect("reference");
    let l = p.lipschitz.expect("smooth");
    for s2 in [0.1f64, 0.25, 0.45] {
        let cfg = SolverConfig {
            sigma: s2.sqrt(),
            max_outer: 500,
            keep_vectors: true,
            ..SolverConfig::new(Algorithm::Accel, StepsizePolicy::Constant(1.0))
        };
        let out = solvers::run(&p, &cfg)?;
        let (mut t_ok, mut mono_ok, mut rate_ok, mut argmin_ok) = (true, true, true, true);
        let mut prev = f64::NEG_INFINITY;
        for st in &out.accel {
            t_ok &= st.t_k >= solvers::AccelState::t_lower_bound(st.k, cfg.sigma, l);
            let q = st.eta_k - st.t_k * st.f_bar;
            mono_ok &= q >= prev - 1e-9 * (1.0 + q.abs() + prev.abs());
            prev = q;
            rate_ok &= st.f_bar - r.s_star <= solvers::rate_bound_accel(l, cfg.sigma, r.d0, st.k)? + 1e-9;
            argmin_ok &= st.argmin_gap <= 1e-9 * (1.0 + st.x_k.as_ref().map_or(0.0, Vector::norm));
        }
        let tag = format!("sigma^2={s2}");
        rep.push(format!("t_k lower bound, {tag}"), t_ok, "");
        rep.push(format!("eta_k - t_k F non-decreasing, {tag}"), mono_ok, "");
        rep.push(format!("rate bound, {tag}"), rate_ok, "");
        rep.push(format!("x_k is the model argmin, {tag}"), argmin_ok, "");
    }
    Ok(rep)
}

fn suite_prox() -> Result<SuiteReport> {
    let mut rep = SuiteReport::default();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let g = L1Norm::new(1, 1.0);
    let (mut nest, mut dist, mut conv) = (true, true, true);
    for _ in 0..300 {
        let alpha = rng.random_range(0.05..3.0);
        let y = Vector::from_slice(&[rng.random_range(-4.0..4.0)])?;
        let sigma = rng.random_range(0.0..0.95);
        let p = prox::prox_l1(alpha, &y)?;
        let cert = prox::solve_prox_segment(&g, alpha, &y, &Criterion::SigmaApprox(sigma))?;
        let quasi =
            prox::check_sigma_quasi_approximate(&g, alpha, &y, &cert.x_bar, &cert.w_bar, cert.eps_bar, sigma)?;
        nest &= quasi.pass;
        let r = rng.random_range(0.0..1.0);
        let c = prox::solve_prox_absolute(&g, alpha, &y, r)?;
        dist &= c.x_bar.dist(&p) <= r + 1e-12;
        let excess = prox::prox_objective(&g, alpha, &y, &c.x_bar) - prox::prox_objective(&g, alpha, &y, &p);
        conv &= excess <= prox::r_to_e(r, alpha) + 1e-12;
    }
    rep.push("relative certificate implies quasi-relative", nest, "300 random 1-D instances");
    rep.push("r-approximate point within r of the prox", dist, "300 random 1-D instances");
    rep.push("r-approximate point is (r/(2 alpha))-optimal", conv, "300 random 1-D instances, r < 1");

    let shape = ImageShape::square(6)?;
    let tv = oracles::TotalVariation::new(shape, 0.05);
    let y = Vector::from_fn(36, |_| rng.random_range(0.0..1.0));
    let (cert, _) = prox::solve_prox_tv_dual(&tv, 1.0, &y, &Criterion::SigmaApprox(0.5), 3000)?;
    let check = prox::check_sigma_approximate(&tv, 1.0, &y, &cert.x_bar, &cert.w_bar, cert.eps_bar, 0.5)?;
    rep.push(
        "TV dual certificate satisfies the relative test",
        check.pass,
        format!("lhs {:e} rhs {:e}, {} inner", check.lhs, check.rhs, cert.inner_iterations),
    );
    Ok(rep)
}

fn suite_oracles() -> Result<SuiteReport> {
    let mut rep = SuiteReport::default();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut interval_ok = true;
    // dense near the kink, sparse far out where outside slopes eventually fail
    let mut grid: Vec<f64> = (-400..=400).map(|i| i as f64 * 0.05).collect();
    for j in 1..=6 {
        grid.extend([10f64.powi(j), -(10f64.powi(j))]);
    }
    for _ in 0..500 {
        let t = rng.random_range(-2.0..2.0);
        let eps = rng.random_range(0.0..1.5);
        let iv = oracles::eps_subdiff_interval_abs(t, eps);
        // v is an ε-subgradient of |·| at t iff |x| ≥ |t| + v(x − t) − ε on a wide grid
        for v in [iv.lo - 0.05, iv.lo + 1e-9, 0.5 * (iv.lo + iv.hi), iv.hi - 1e-9, iv.hi + 0.05] {
            let member = grid.iter().all(|&x| x.abs() >= t.abs() + v * (x - t) - eps - 1e-12);
            interval_ok &= member == iv.contains(v, 0.0);
        }
    }
    rep.push("eps-subdifferential of |.| matches brute force", interval_ok, "500 (t, eps) pairs");

    let shape = ImageShape::new(5, 7)?;
    let ops: Vec<(&str, Box<dyn LinearOperator>)> = vec![
        ("discrete gradient", Box::new(DiscreteGradient { shape })),
        ("gaussian blur", Box::new(GaussianBlur::new(shape, problems::BLUR_SIZE, problems::BLUR_STD)?)),
    ];
    for (name, op) in ops {
        let mut worst = 0.0f64;
        for _ in 0..50 {
            let x = Vector::from_fn(op.input_dim(), |_| rng.random_range(-1.0..1.0));
            let y = Vector::from_fn(op.output_dim(), |_| rng.random_range(-1.0..1.0));
            let d = (op.apply(&x).dot(&y) - x.dot(&op.adjoint(&y))).abs();
            worst = worst.max(d / (1.0 + x.norm() * y.norm()));
        }
        rep.push(format!("adjoint identity, {name}"), worst <= 1e-9, format!("worst relative {worst:e}"));
    }

    let p = problems::lasso_instance(6, 3)?;
    let mut member_ok = true;
    let mut solver_rng = oracles::SolverRng::seed_from_u64(5);
    for _ in 0..50 {
        let x = Vector::from_fn(6, |_| rng.random_range(-2.0..2.0));
        let eps = rng.random_range(0.01..2.0);
        let u = p.f.eps_subgradient(&x, eps, &mut solver_rng);
        let probes: Vec<Vector> = (0..50).map(|_| Vector::from_fn(6, |_| rng.random_range(-5.0..5.0))).collect();
        member_ok &= oracles::check_eps_subgradient(p.f.as_ref(), &x, &u, eps, &probes);
        let induced = f_gap_quadratic(&p, &x, &u);
        member_ok &= induced <= eps * (1.0 + 1e-9) + 1e-12;
    }
    rep.push("least-squares eps-subgradients are eps-subgradients", member_ok, "50 draws, probe and line-gap checks");
    Ok(rep)
}

/// Lower bound on the Fenchel–Young gap of `½‖Ax − b‖²` at `(x, u)`: the
/// supremum of `⟨δ, d⟩ − ½‖Ad‖²` along `d ∥ δ = u − ∇f(x)`.
fn f_gap_quadratic(p: &ProblemInstance, x: &Vector, u: &Vector) -> f64 {
    let grad = p.f.gradient(x).expect("smooth");
    let d = u - &grad;
    let ls = p.f.as_least_squares().expect("least squares");
    let ad = ls.operator().apply(&d);
    let hd = ls.operator().adjoint(&ad);
    let q = d.dot(&hd);
    if q <= 0.0 {
        return if d.norm() == 0.0 { 0.0 } else { f64::INFINITY };
    }
    let dd = d.norm_sq();
    0.5 * dd * dd / q
}

/// Writes a comparison table next to per-run CSVs; used by the batch CLI.
pub fn write_summary(dir: &Path, rows: &[SummaryRow]) -> Result<(String, PathBuf)> {
    let (table, csv) = compare_table(rows);
    fs::create_dir_all(dir)?;
    let path = dir.join("summary.csv");
    fs::write(&path, csv)?;
    Ok((table, path))
}
