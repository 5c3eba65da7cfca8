//! Config-driven experiments: build a game, run a learner against it, score
//! every episode with the exact oracles and write reproducible metric files.
//!
//! A run draws from one seed split into independent streams for the
//! environment, the learner, the opponent and the inverse audits, so
//! changing one component leaves the others' draws alone.

mod config;
mod emit;
mod games;
mod instability;
mod run;
mod sweep;

pub use config::{ExperimentConfig, GameSource, Mode, PolicySpec};
pub use emit::{
    csv, emit, fmt_float, summary_text, Emitted, METRICS_FILE, MISSING, OFFLINE_HEADER, ONLINE_HEADER, SUMMARY_FILE,
};
pub use games::{builtin, builtin_names, resolve};
pub use instability::{demo_instability, InstabilityReport};
pub use run::{
    drift_checkpoints, prepare_game, run, substream, CheckCounts, Checkpoint, DiagnosticsSummary, RunOutput,
    SeriesKind, Summary, AUDIT_STREAM, DRIFT_AUDITS, ENV_STREAM, LEARNER_STREAM, OPPONENT_STREAM, OPTIMISM_TOL,
};
pub use sweep::{sweep, sweep_configs, thread_cap, SweepCell, THREADS_ENV};

use std::path::Path;

use crate::error::Result;
use crate::game_model::{validate, ValidationReport};

/// Files written by [`emit_instability`].
pub const INSTABILITY_CSV: &str = "instability.csv";
pub const INSTABILITY_TXT: &str = "instability.txt";

/// Write the instability report as text and CSV into `dir`.
pub fn emit_instability(report: &InstabilityReport, dir: &Path) -> Result<()> {
    emit::ensure_dir(dir)?;
    emit::write_file(&dir.join(INSTABILITY_TXT), &report.to_text())?;
    emit::write_file(&dir.join(INSTABILITY_CSV), &report.to_csv())
}

/// Model-assumption report for the game `config` points at.
pub fn validate_game(config: &ExperimentConfig) -> Result<ValidationReport> {
    let game = resolve(&config.game)?;
    Ok(validate(&game.as_simultaneous()?))
}
