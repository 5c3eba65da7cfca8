use std::time::Instant;

use rand::seq::index::sample;
use rand::SeedableRng;
use serde::Serialize;

use super::config::{ExperimentConfig, Mode, PolicySpec};
use super::games::resolve;
use crate::error::{Error, Result};
use crate::evaluation::{
    gap_metrics, make_opponent, nash, policy_table, MarkovPolicy, MetricsSeries, ModelTables, NashSolution,
    OpponentKind,
};
use crate::game_model::{validate, GameSpec, LoadedGame, TurnSpec};
use crate::learners::{
    Diagnostics, EpisodeRecord, LearnerConfig, OfflineLearner, OnlineLearner, SimRng, TurnOfflineLearner,
    TurnOnlineLearner,
};

pub const ENV_STREAM: u64 = 0;
pub const LEARNER_STREAM: u64 = 1;
pub const OPPONENT_STREAM: u64 = 2;
/// Picks the episodes at which the incremental inverse is audited.
pub const AUDIT_STREAM: u64 = 3;

/// Number of episodes at which the incremental inverse is audited.
pub const DRIFT_AUDITS: usize = 10;

/// Online optimism is counted with this much slack for roundoff.
pub const OPTIMISM_TOL: f64 = 1e-9;

/// Substream `stream` of the run's generator.
pub fn substream(seed: u64, stream: u64) -> SimRng {
    let mut rng = SimRng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Episodes (1-based, sorted) at which the Gram inverses are compared with a
/// direct inverse.
pub fn drift_checkpoints(seed: u64, episodes: usize) -> Vec<usize> {
    let mut rng = substream(seed, AUDIT_STREAM);
    let mut picks: Vec<usize> =
        sample(&mut rng, episodes, DRIFT_AUDITS.min(episodes)).into_iter().map(|i| i + 1).collect();
    picks.sort_unstable();
    picks
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SeriesKind {
    Offline,
    Online,
}

/// Episode counts for the per-episode checks.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct CheckCounts {
    /// Offline: the oracle best-response values lie inside the confidence
    /// band widened by `2 (H + 1) eps_net`.
    pub sandwich: usize,
    /// Offline: `gap <= UCB - LCB + 8 / K`.
    pub width_bound: usize,
    /// Online: `UCB >= V*` at the initial state.
    pub optimism: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Checkpoint {
    pub k: usize,
    /// Cumulative gap (offline) or regret (online) through episode `k`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cumulative: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiagnosticsSummary {
    pub leverage_slack: f64,
    pub potential_slack: f64,
    pub coefficient_slack: f64,
    pub inverse_drift: f64,
    pub drift_checks: usize,
}

impl From<&Diagnostics> for DiagnosticsSummary {
    fn from(d: &Diagnostics) -> Self {
        Self {
            leverage_slack: d.leverage_slack,
            potential_slack: d.potential_slack,
            coefficient_slack: d.coefficient_slack,
            inverse_drift: d.inverse_drift,
            drift_checks: d.drift_checks,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub mode: Mode,
    pub seed: u64,
    pub episodes: usize,
    pub beta: f64,
    pub eps_net: f64,
    /// Final cumulative gap, offline runs.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gap_total: Option<f64>,
    /// Final cumulative regret, online runs with a known opponent policy.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub regret_total: Option<f64>,
    /// Episode with the narrowest confidence band at the initial state.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k0: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k0_width: Option<f64>,
    pub checks: CheckCounts,
    pub checkpoints: Vec<Checkpoint>,
    pub diagnostics: DiagnosticsSummary,
    pub wall_time_secs: f64,
    pub version: String,
    pub config_sha256: String,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub config: ExperimentConfig,
    pub kind: SeriesKind,
    pub metrics: MetricsSeries,
    /// Initial state of every episode.
    pub initial_states: Vec<usize>,
    pub diagnostics: Diagnostics,
    pub summary: Summary,
}

impl RunOutput {
    pub fn len(&self) -> usize {
        self.metrics.len()
    }

    pub fn is_empty(&self) -> bool {
        self.metrics.is_empty()
    }

    /// Fraction of episodes satisfying `count`.
    pub fn fraction(&self, count: usize) -> f64 {
        count as f64 / self.len().max(1) as f64
    }
}

/// Everything a learner loop needs besides the learner itself.
struct Context<'g> {
    spec: &'g GameSpec,
    tables: ModelTables,
    nash: NashSolution,
    env_rng: SimRng,
    learner_rng: SimRng,
    opponent_rng: SimRng,
    series: MetricsSeries,
    initial_states: Vec<usize>,
    checks: CheckCounts,
    eps_net: f64,
    episodes: usize,
}

impl Context<'_> {
    fn record_offline(&mut self, rec: &EpisodeRecord, pi: &MarkovPolicy, nu: &MarkovPolicy) -> Result<()> {
        let x1 = rec.initial_state();
        let m = gap_metrics(&self.tables, x1, pi, nu)?;
        let lower = rec.lower.ok_or_else(|| Error::InternalState("offline record without a lower value".into()))?;
        let slack = 2.0 * (self.spec.horizon() + 1) as f64 * self.eps_net;
        if lower - slack <= m.pi_br && m.nu_br <= rec.upper + slack {
            self.checks.sandwich += 1;
        }
        if m.gap <= rec.upper - lower + 8.0 / self.episodes as f64 {
            self.checks.width_bound += 1;
        }
        self.series.ucb.push(rec.upper);
        self.series.lcb.push(lower);
        self.series.gap.push(m.gap);
        self.series.exploit1.push(m.exploit1);
        self.series.exploit2.push(m.exploit2);
        self.series.nash_value.push(self.nash.values.v(1, x1));
        self.initial_states.push(x1);
        Ok(())
    }

    fn record_online(&mut self, rec: &EpisodeRecord, pi: &MarkovPolicy, nu: Option<&MarkovPolicy>) -> Result<()> {
        let x1 = rec.initial_state();
        let star = self.nash.values.v(1, x1);
        let regret = match nu {
            Some(nu) => Some(star - policy_table(&self.tables, pi, nu)?.v(1, x1)),
            None => None,
        };
        if rec.upper >= star - OPTIMISM_TOL {
            self.checks.optimism += 1;
        }
        self.series.ucb.push(rec.upper);
        self.series.nash_value.push(star);
        self.series.regret.push(regret);
        self.initial_states.push(x1);
        Ok(())
    }
}

fn fixed_policy(spec: &PolicySpec, tables: &ModelTables, nash: &NashSolution) -> Result<MarkovPolicy> {
    let (hz, ns, na) = (tables.horizon(), tables.num_states(), tables.num_actions());
    match spec {
        PolicySpec::Named(name) => match name.as_str() {
            "nash" => Ok(nash.col.clone()),
            "uniform" => Ok(MarkovPolicy::uniform(hz, ns, na)),
            "first" => MarkovPolicy::deterministic(hz, ns, na, |_, _| 0),
            other => Err(Error::Config(format!("unknown opponent policy '{other}'"))),
        },
        PolicySpec::Actions(rows) => {
            if rows.len() != hz || rows.iter().any(|r| r.len() != ns) {
                return Err(Error::Config(format!("opponent_policy must be {hz} rows of {ns} actions")));
            }
            if rows.iter().flatten().any(|&b| b >= na) {
                return Err(Error::Config(format!("opponent_policy actions must be below {na}")));
            }
            MarkovPolicy::deterministic(hz, ns, na, |h, x| rows[h - 1][x])
        }
    }
}

fn require_valid(spec: &GameSpec) -> Result<()> {
    let report = validate(spec);
    if report.is_empty() {
        Ok(())
    } else {
        Err(Error::ModelValidity(report.to_string()))
    }
}

/// Load, validate and return the game for `config` with its simultaneous view.
pub fn prepare_game(config: &ExperimentConfig) -> Result<(LoadedGame, GameSpec)> {
    let game = resolve(&config.game)?;
    if config.mode.is_turn() && !matches!(game, LoadedGame::Turn(_)) {
        return Err(Error::Config(format!("mode {} needs a turn-based game", config.mode.name())));
    }
    let spec = game.as_simultaneous()?;
    require_valid(&spec)?;
    Ok((game, spec))
}

/// Run the learning experiment described by `config`.
pub fn run(config: &ExperimentConfig) -> Result<RunOutput> {
    config.check()?;
    if !config.mode.is_learning() {
        return Err(Error::Config(format!("mode {} does not play episodes", config.mode.name())));
    }
    let start = Instant::now();
    let (game, spec) = prepare_game(config)?;
    let tables = ModelTables::new(&spec)?;
    let nash = nash(&tables)?;
    let seed = config.seed;
    let d = match &game {
        LoadedGame::Turn(t) if config.mode.is_turn() => t.dim(),
        _ => spec.dim(),
    };
    let learner_config = LearnerConfig::new(d, spec.horizon(), config.episodes, config.c, config.p)?
        .with_drift_checkpoints(drift_checkpoints(seed, config.episodes));
    let mut cx = Context {
        spec: &spec,
        tables,
        nash,
        env_rng: substream(seed, ENV_STREAM),
        learner_rng: substream(seed, LEARNER_STREAM),
        opponent_rng: substream(seed, OPPONENT_STREAM),
        series: MetricsSeries::default(),
        initial_states: Vec::with_capacity(config.episodes),
        checks: CheckCounts::default(),
        eps_net: learner_config.eps_net,
        episodes: config.episodes,
    };
    let (beta, eps_net) = (learner_config.beta, learner_config.eps_net);

    let diagnostics = match (config.mode, &game) {
        (Mode::Offline, _) => run_offline(&mut cx, learner_config)?,
        (Mode::Online, _) => run_online(&mut cx, learner_config, config)?,
        (Mode::TurnOffline, LoadedGame::Turn(turn)) => run_turn_offline(&mut cx, turn, learner_config)?,
        (Mode::TurnOnline, LoadedGame::Turn(turn)) => run_turn_online(&mut cx, turn, learner_config, config)?,
        _ => return Err(Error::Config(format!("mode {} needs a turn-based game", config.mode.name()))),
    };

    let kind = if config.mode.is_online() { SeriesKind::Online } else { SeriesKind::Offline };
    let Context { series, initial_states, checks, .. } = cx;
    let summary = summarize(config, kind, &series, checks, &diagnostics, beta, eps_net, start)?;
    Ok(RunOutput { config: config.clone(), kind, metrics: series, initial_states, diagnostics, summary })
}

#[allow(clippy::too_many_arguments)]
fn summarize(
    config: &ExperimentConfig,
    kind: SeriesKind,
    series: &MetricsSeries,
    checks: CheckCounts,
    diagnostics: &Diagnostics,
    beta: f64,
    eps_net: f64,
    start: Instant,
) -> Result<Summary> {
    let (cumulative, gap_total, regret_total, k0, k0_width) = match kind {
        SeriesKind::Offline => {
            let cum = series.cum_gap();
            let total = cum.last().copied();
            let (k0, width) = min_width(&series.width());
            (cum.into_iter().map(Some).collect::<Vec<_>>(), total, None, k0, width)
        }
        SeriesKind::Online => {
            let cum = series.cum_regret();
            let total = cum.last().copied().flatten();
            (cum, None, total, None, None)
        }
    };
    let checkpoints =
        config.checkpoints().into_iter().map(|k| Checkpoint { k, cumulative: cumulative[k - 1] }).collect();
    Ok(Summary {
        mode: config.mode,
        seed: config.seed,
        episodes: config.episodes,
        beta,
        eps_net,
        gap_total,
        regret_total,
        k0,
        k0_width,
        checks,
        checkpoints,
        diagnostics: diagnostics.into(),
        wall_time_secs: start.elapsed().as_secs_f64(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        config_sha256: config.hash()?,
    })
}

/// First episode (1-based) attaining the smallest width, and that width.
fn min_width(width: &[f64]) -> (Option<usize>, Option<f64>) {
    let mut best: Option<(usize, f64)> = None;
    for (i, &w) in width.iter().enumerate() {
        if best.is_none_or(|(_, b)| w < b) {
            best = Some((i + 1, w));
        }
    }
    (best.map(|b| b.0), best.map(|b| b.1))
}

fn run_offline(cx: &mut Context<'_>, config: LearnerConfig) -> Result<Diagnostics> {
    let spec = cx.spec;
    let mut learner = OfflineLearner::new(spec.feature_view(), config);
    for _ in 0..cx.episodes {
        let mut plan = learner.plan()?;
        let (pi, nu) = plan.marginal_policies()?;
        let rec = learner.execute(&mut plan, spec, &mut cx.env_rng, &mut cx.learner_rng)?;
        cx.record_offline(&rec, &pi, &nu)?;
    }
    Ok(learner.diagnostics().clone())
}

fn run_turn_offline(cx: &mut Context<'_>, turn: &TurnSpec, config: LearnerConfig) -> Result<Diagnostics> {
    let spec = cx.spec;
    let mut learner = TurnOfflineLearner::new(turn.view(), config);
    for _ in 0..cx.episodes {
        let mut plan = learner.plan()?;
        let (pi, nu) = plan.policies()?;
        let rec = learner.execute(&mut plan, spec, &mut cx.env_rng)?;
        cx.record_offline(&rec, &pi, &nu)?;
    }
    Ok(learner.diagnostics().clone())
}

fn opponent_for(cx: &Context<'_>, config: &ExperimentConfig) -> Result<Box<dyn crate::learners::Opponent>> {
    let kind = config.opponent();
    let fixed = match (&config.opponent_policy, kind) {
        (Some(p), OpponentKind::FixedMarkov) => Some(fixed_policy(p, &cx.tables, &cx.nash)?),
        _ => None,
    };
    make_opponent(kind, &cx.tables, fixed)
}

fn run_online(cx: &mut Context<'_>, config: LearnerConfig, exp: &ExperimentConfig) -> Result<Diagnostics> {
    let spec = cx.spec;
    let mut opponent = opponent_for(cx, exp)?;
    let mut learner = OnlineLearner::new(spec.feature_view(), config);
    for k in 1..=cx.episodes {
        let mut plan = learner.plan()?;
        let pi = plan.learner_policy()?;
        opponent.begin_episode(k, Some(&pi))?;
        let rec = learner.execute(
            &mut plan,
            spec,
            opponent.as_mut(),
            &mut cx.env_rng,
            &mut cx.learner_rng,
            &mut cx.opponent_rng,
        )?;
        let nu = opponent.markov_policy().cloned();
        cx.record_online(&rec, &pi, nu.as_ref())?;
    }
    Ok(learner.diagnostics().clone())
}

fn run_turn_online(
    cx: &mut Context<'_>,
    turn: &TurnSpec,
    config: LearnerConfig,
    exp: &ExperimentConfig,
) -> Result<Diagnostics> {
    let spec = cx.spec;
    let mut opponent = opponent_for(cx, exp)?;
    let mut learner = TurnOnlineLearner::new(turn.view(), config);
    for k in 1..=cx.episodes {
        let mut plan = learner.plan()?;
        let pi = plan.learner_policy()?;
        opponent.begin_episode(k, Some(&pi))?;
        let rec = learner.execute(&mut plan, spec, opponent.as_mut(), &mut cx.env_rng, &mut cx.opponent_rng)?;
        let nu = opponent.markov_policy().cloned();
        cx.record_online(&rec, &pi, nu.as_ref())?;
    }
    Ok(learner.diagnostics().clone())
}
