use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use proxeps::error::Error;
use proxeps::harness::{self, ExperimentConfig, Settings, Suite, SummaryRow};

#[derive(Parser)]
#[command(name = "proxeps", version, about = "Inexact proximal epsilon-subgradient experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment and write its per-iteration CSV.
    Run(RunArgs),
    /// Run several config files in parallel and print a comparison table.
    Batch(BatchArgs),
    /// Run an invariant suite; exits nonzero on any violation.
    Verify {
        #[arg(long, value_parser = ["lemmas", "accel", "prox", "oracles"])]
        suite: String,
    },
}

#[derive(Args, Default)]
struct RunArgs {
    /// key=value config file with [problem]/[solver]/[output] sections
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_parser = ["lasso", "tv", "toy1d"])]
    problem: Option<String>,
    #[arg(long, value_parser = ["pesm1", "pesm2", "accel", "pss", "ipgm"])]
    algo: Option<String>,
    #[arg(long)]
    n: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    #[arg(long)]
    tau: Option<String>,
    #[arg(long)]
    noise: Option<String>,
    #[arg(long)]
    sigma2: Option<String>,
    /// zero | const:V | pow:S:P | sqpow:C:Q
    #[arg(long)]
    rk_schedule: Option<String>,
    #[arg(long)]
    epsk_schedule: Option<String>,
    /// e_k for ipgm; sqpow:auto:Q derives C from the first subproblem
    #[arg(long)]
    ek_schedule: Option<String>,
    /// const:V|auto | dim:A0|auto:P | polyak-exact:G | polyak:G:S0:SHRINK
    #[arg(long)]
    stepsize: Option<String>,
    #[arg(long)]
    max_outer: Option<String>,
    #[arg(long)]
    max_inner: Option<String>,
    #[arg(long)]
    tol: Option<String>,
    #[arg(long, value_parser = ["sqstep", "reldiff", "never"])]
    stop: Option<String>,
    #[arg(long, value_parser = ["none", "standard"])]
    momentum: Option<String>,
    /// solve every prox subproblem to full accuracy
    #[arg(long, value_parser = ["true", "false"])]
    exact_prox: Option<String>,
    /// bound on subgradient norms for Polyak denominators
    #[arg(long)]
    c: Option<String>,
    #[arg(long)]
    label: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// P5 PGM image for the TV problem
    #[arg(long)]
    image: Option<PathBuf>,
}

impl RunArgs {
    fn flag_settings(&self) -> Settings {
        let mut s = Settings::default();
        let pairs: [(&str, Option<String>); 20] = [
            ("problem", self.problem.clone()),
            ("algo", self.algo.clone()),
            ("n", self.n.clone()),
            ("seed", self.seed.clone()),
            ("tau", self.tau.clone()),
            ("noise", self.noise.clone()),
            ("sigma2", self.sigma2.clone()),
            ("rk-schedule", self.rk_schedule.clone()),
            ("epsk-schedule", self.epsk_schedule.clone()),
            ("ek-schedule", self.ek_schedule.clone()),
            ("stepsize", self.stepsize.clone()),
            ("max-outer", self.max_outer.clone()),
            ("max-inner", self.max_inner.clone()),
            ("tol", self.tol.clone()),
            ("stop", self.stop.clone()),
            ("momentum", self.momentum.clone()),
            ("exact-prox", self.exact_prox.clone()),
            ("c", self.c.clone()),
            ("label", self.label.clone()),
            ("out", self.out.as_ref().map(|p| p.display().to_string())),
        ];
        for (k, v) in pairs {
            if let Some(v) = v {
                s.set(k, v);
            }
        }
        if let Some(img) = &self.image {
            s.set("image", img.display().to_string());
        }
        s
    }

    fn experiment(&self) -> Result<ExperimentConfig, Error> {
        let file = match &self.config {
            Some(path) => Settings::load(path)?,
            None => Settings::default(),
        };
        ExperimentConfig::from_settings(&file.merged(&self.flag_settings()))
    }
}

#[derive(Args)]
struct BatchArgs {
    /// config files, one experiment each
    #[arg(required = true)]
    configs: Vec<PathBuf>,
    /// directory for per-run CSVs (named after labels) and summary.csv
    #[arg(long)]
    out_dir: PathBuf,
}

fn report(err: &Error) {
    match err {
        Error::Config(list) => {
            eprintln!("invalid configuration:");
            for e in list {
                eprintln!("  {e}");
            }
        }
        other => eprintln!("error: {other}"),
    }
}

fn print_run(row: &SummaryRow, warnings: &[String]) {
    for w in warnings {
        eprintln!("warning: {w}");
    }
    let (table, _) = harness::compare_table(std::slice::from_ref(row));
    print!("{table}");
    if row.flagged > 0 {
        println!("{} iterations hit the inner budget", row.flagged);
    }
}

fn run(args: &RunArgs) -> Result<(), Error> {
    let cfg = args.experiment()?;
    let res = harness::run_experiment(&cfg)?;
    print_run(&res.summary, &res.output.warnings);
    if cfg.out.is_none() {
        print!("{}", res.csv);
    }
    Ok(())
}

fn batch(args: &BatchArgs) -> Result<bool, Error> {
    let mut configs = Vec::new();
    for path in &args.configs {
        let mut cfg = ExperimentConfig::from_settings(&Settings::load(path)?)?;
        cfg.out = Some(args.out_dir.join(format!("{}.csv", cfg.label)));
        configs.push(cfg);
    }
    let mut rows = Vec::new();
    let mut ok = true;
    for (path, res) in args.configs.iter().zip(harness::run_batch(&configs)?) {
        match res {
            Ok(r) => {
                for w in &r.output.warnings {
                    eprintln!("warning ({}): {w}", r.summary.label);
                }
                rows.push(r.summary);
            }
            Err(e) => {
                eprintln!("{}:", path.display());
                report(&e);
                ok = false;
            }
        }
    }
    if !rows.is_empty() {
        let (table, path) = harness::write_summary(&args.out_dir, &rows)?;
        print!("{table}");
        println!("summary written to {}", path.display());
    }
    Ok(ok)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Run(args) => run(args).map(|_| true),
        Command::Batch(args) => batch(args),
        Command::Verify { suite } => Suite::parse(suite).and_then(harness::verify_suite).map(|rep| {
            print!("{}", rep.render());
            rep.passed()
        }),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            report(&e);
            ExitCode::from(2)
        }
    }
}
