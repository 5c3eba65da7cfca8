use std::path::{Path, PathBuf};

use rayon::prelude::*;

use super::config::ExperimentConfig;
use super::emit::emit;
use super::run::{run, RunOutput};
use crate::error::{Error, Result};

/// Caps the number of worker threads used by [`sweep`].
pub const THREADS_ENV: &str = "OMNIVI_THREADS";

/// Thread cap from `OMNIVI_THREADS`; unset means rayon's default.
pub fn thread_cap() -> Result<Option<usize>> {
    match std::env::var(THREADS_ENV) {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(Error::Config(format!("{THREADS_ENV} must be a positive integer, got '{v}'"))),
        },
        Err(_) => Ok(None),
    }
}

/// One cell of a sweep: the config that ran and where its files went.
#[derive(Debug, Clone)]
pub struct SweepCell {
    pub config: ExperimentConfig,
    pub dir: Option<PathBuf>,
    pub output: RunOutput,
}

/// Per-seed copies of `base`. Uses `base.seeds`, or just `base.seed`.
pub fn sweep_configs(base: &ExperimentConfig) -> Vec<ExperimentConfig> {
    let seeds = if base.seeds.is_empty() { vec![base.seed] } else { base.seeds.clone() };
    seeds
        .into_iter()
        .map(|seed| {
            let mut c = base.clone();
            c.seed = seed;
            c.seeds.clear();
            c
        })
        .collect()
}

/// Run every config in parallel. With `out`, each cell writes to
/// `out/seed-<seed>`. Cells are returned in input order; the first failure
/// in that order is reported.
pub fn sweep(configs: &[ExperimentConfig], out: Option<&Path>, threads: Option<usize>) -> Result<Vec<SweepCell>> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        builder = builder.num_threads(n);
    }
    let pool = builder.build().map_err(|e| Error::Config(format!("cannot start thread pool: {e}")))?;
    let results: Vec<Result<SweepCell>> = pool.install(|| {
        configs
            .par_iter()
            .map(|config| {
                let output = run(config)?;
                let dir = match out {
                    Some(root) => {
                        let dir = root.join(format!("seed-{}", config.seed));
                        emit(&output, &dir)?;
                        Some(dir)
                    }
                    None => None,
                };
                Ok(SweepCell { config: config.clone(), dir, output })
            })
            .collect()
    });
    results.into_iter().collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::{csv, GameSource, Mode};

    fn base() -> ExperimentConfig {
        let mut c = ExperimentConfig::new(Mode::Offline, GameSource::Builtin { name: "two_state".into() });
        c.episodes = 6;
        c.seeds = vec![4, 1, 9];
        c
    }

    #[test]
    fn one_config_per_seed() {
        let cs = sweep_configs(&base());
        assert_eq!(cs.iter().map(|c| c.seed).collect::<Vec<_>>(), vec![4, 1, 9]);
        assert!(cs.iter().all(|c| c.seeds.is_empty()));
    }

    #[test]
    fn parallel_cells_match_sequential_runs() {
        let dir = tempfile::tempdir().unwrap();
        let cs = sweep_configs(&base());
        let cells = sweep(&cs, Some(dir.path()), Some(2)).unwrap();
        for (cell, c) in cells.iter().zip(&cs) {
            assert_eq!(cell.config.seed, c.seed);
            let alone = run(c).unwrap();
            assert_eq!(csv(&cell.output), csv(&alone));
            let written = std::fs::read_to_string(cell.dir.as_ref().unwrap().join("metrics.csv")).unwrap();
            assert_eq!(written, csv(&alone));
        }
    }
}
