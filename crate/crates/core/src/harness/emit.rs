use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::config::ExperimentConfig;
use super::run::{RunOutput, SeriesKind, Summary};
use crate::error::{Error, Result};

pub const OFFLINE_HEADER: &str = "k,ucb,lcb,gap,cum_gap,exploit1,exploit2";
pub const ONLINE_HEADER: &str = "k,value_ucb,nash_value,regret,cum_regret";
/// Written where a value is unavailable (regret against an unknown policy).
pub const MISSING: &str = "NA";

pub const METRICS_FILE: &str = "metrics.csv";
pub const SUMMARY_FILE: &str = "summary.toml";

/// 17 significant digits; round-trips every `f64`.
pub fn fmt_float(v: f64) -> String {
    format!("{v:.16e}")
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| MISSING.to_string(), fmt_float)
}

/// Per-episode metrics as CSV text.
pub fn csv(out: &RunOutput) -> String {
    let m = &out.metrics;
    let mut s = String::new();
    match out.kind {
        SeriesKind::Offline => {
            s.push_str(OFFLINE_HEADER);
            s.push('\n');
            let cum = m.cum_gap();
            for i in 0..m.len() {
                let _ = writeln!(
                    s,
                    "{},{},{},{},{},{},{}",
                    i + 1,
                    fmt_float(m.ucb[i]),
                    fmt_float(m.lcb[i]),
                    fmt_float(m.gap[i]),
                    fmt_float(cum[i]),
                    fmt_float(m.exploit1[i]),
                    fmt_float(m.exploit2[i]),
                );
            }
        }
        SeriesKind::Online => {
            s.push_str(ONLINE_HEADER);
            s.push('\n');
            let cum = m.cum_regret();
            for i in 0..m.len() {
                let _ = writeln!(
                    s,
                    "{},{},{},{},{}",
                    i + 1,
                    fmt_float(m.ucb[i]),
                    fmt_float(m.nash_value[i]),
                    fmt_opt(m.regret[i]),
                    fmt_opt(cum[i]),
                );
            }
        }
    }
    s
}

#[derive(Serialize)]
struct SummaryFile<'a> {
    summary: &'a Summary,
    config: &'a ExperimentConfig,
}

/// Summary record followed by the full config echo, as TOML.
pub fn summary_text(out: &RunOutput) -> Result<String> {
    toml::to_string(&SummaryFile { summary: &out.summary, config: &out.config })
        .map_err(|e| Error::Numeric(format!("cannot serialize summary: {e}")))
}

/// Paths written by [`emit`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Emitted {
    pub metrics: PathBuf,
    pub summary: PathBuf,
}

pub(crate) fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

pub(crate) fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::Io(format!("{}: {e}", dir.display())))
}

/// Write `metrics.csv` and `summary.toml` into `dir`, creating it.
pub fn emit(out: &RunOutput, dir: &Path) -> Result<Emitted> {
    ensure_dir(dir)?;
    let metrics = dir.join(METRICS_FILE);
    let summary = dir.join(SUMMARY_FILE);
    write_file(&metrics, &csv(out))?;
    write_file(&summary, &summary_text(out)?)?;
    Ok(Emitted { metrics, summary })
}
