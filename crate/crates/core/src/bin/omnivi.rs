use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use omnivi::evaluation::OpponentKind;
use omnivi::harness::{
    self, demo_instability, emit, emit_instability, sweep, sweep_configs, thread_cap, ExperimentConfig, GameSource,
    Mode, RunOutput,
};
use omnivi::{Error, Result};

#[derive(Parser)]
#[command(name = "omnivi", version, about = "Optimistic value iteration experiments on linear zero-sum Markov games")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment.
    Run(Overrides),
    /// Run one experiment per seed in parallel (OMNIVI_THREADS caps threads).
    Sweep {
        #[command(flatten)]
        overrides: Overrides,
        /// Comma-separated seeds; defaults to the config's `seeds`.
        #[arg(long, value_delimiter = ',')]
        seeds: Vec<u64>,
    },
    /// Show two nearby games whose equilibrium values are far apart.
    DemoInstability {
        #[arg(long, default_value_t = 0.1)]
        eps: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check a game against the linear-model assumptions.
    Validate {
        #[command(flatten)]
        overrides: Overrides,
        /// Game file to check instead of the config's game.
        #[arg(long)]
        game: Option<PathBuf>,
    },
}

#[derive(Args, Clone, Default)]
struct Overrides {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    mode: Option<String>,
    #[arg(long = "K")]
    episodes: Option<usize>,
    #[arg(long)]
    c: Option<f64>,
    #[arg(long)]
    p: Option<f64>,
    #[arg(long)]
    opponent: Option<String>,
}

impl Overrides {
    fn apply(&self) -> Result<ExperimentConfig> {
        let mut config = match &self.config {
            Some(path) => ExperimentConfig::load(path)?,
            None => ExperimentConfig::new(Mode::Offline, GameSource::default()),
        };
        if let Some(m) = &self.mode {
            config.mode = m.parse()?;
        }
        if let Some(s) = self.seed {
            config.seed = s;
        }
        if let Some(k) = self.episodes {
            config.episodes = k;
            // Default checkpoints follow K; explicit ones beyond it are dropped.
            config.checkpoints.retain(|&cp| cp <= k);
        }
        if let Some(c) = self.c {
            config.c = c;
        }
        if let Some(p) = self.p {
            config.p = p;
        }
        if let Some(o) = &self.opponent {
            config.opponent = Some(o.parse::<OpponentKind>()?);
        }
        if let Some(out) = &self.out {
            config.output = Some(out.clone());
        }
        config.check()?;
        Ok(config)
    }
}

fn report(out: &RunOutput) {
    let s = &out.summary;
    println!("mode {} seed {} K {} beta {:.6}", s.mode.name(), s.seed, s.episodes, s.beta);
    if let Some(g) = s.gap_total {
        println!("Gap(K) = {g:.6}");
    }
    if let Some(r) = s.regret_total {
        println!("Regret(K) = {r:.6}");
    }
    if let (Some(k0), Some(w)) = (s.k0, s.k0_width) {
        println!("k0 = {k0} (UCB - LCB = {w:.6})");
    }
    println!("wall time {:.3}s", s.wall_time_secs);
}

fn run_one(config: &ExperimentConfig) -> Result<()> {
    match config.mode {
        Mode::DemoInstability => demo(config.eps, config.output.as_deref()),
        Mode::Validate => validate(config),
        _ => {
            let out = harness::run(config)?;
            match &config.output {
                Some(dir) => {
                    let files = emit(&out, dir)?;
                    report(&out);
                    println!("wrote {} and {}", files.metrics.display(), files.summary.display());
                }
                None => print!("{}", harness::csv(&out)),
            }
            Ok(())
        }
    }
}

fn demo(eps: f64, out: Option<&Path>) -> Result<()> {
    let report = demo_instability(eps)?;
    print!("{}", report.to_text());
    if let Some(dir) = out {
        emit_instability(&report, dir)?;
    }
    Ok(())
}

fn validate(config: &ExperimentConfig) -> Result<()> {
    let report = harness::validate_game(config)?;
    if report.is_empty() {
        println!("ok");
        Ok(())
    } else {
        println!("{report}");
        Err(Error::ModelValidity(format!("{} violation(s)", report.violations.len())))
    }
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run(o) => run_one(&o.apply()?),
        Command::Sweep { overrides, seeds } => {
            let mut base = overrides.apply()?;
            if !seeds.is_empty() {
                base.seeds = seeds;
            }
            if !base.mode.is_learning() {
                return Err(Error::Config(format!("cannot sweep mode {}", base.mode.name())));
            }
            let configs = sweep_configs(&base);
            let cells = sweep(&configs, base.output.as_deref(), thread_cap()?)?;
            for cell in &cells {
                let s = &cell.output.summary;
                let total = s.gap_total.or(s.regret_total).map_or("NA".to_string(), |v| format!("{v:.6}"));
                println!("seed {} total {}", s.seed, total);
            }
            Ok(())
        }
        Command::DemoInstability { eps, out } => demo(eps, out.as_deref()),
        Command::Validate { overrides, game } => {
            let mut config = overrides.apply()?;
            if let Some(path) = game {
                config.game = GameSource::File { path };
            }
            validate(&config)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
