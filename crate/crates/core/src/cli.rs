//! Run configuration and the `train`, `oracle`, `eval` and `ablate` commands.
//!
//! Every command returns a process exit code: 0 on success, 1 when the
//! configuration or the inputs are invalid, 2 when the run itself fails.
//! Messages go to standard error; summaries go to standard output.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::baselines::{selfplay_independent_train, train_joint_minimax, AlphaSchedule, JointMinimaxConfig};
use crate::error::{Error, Result};
use crate::eval::{
    ablate_buffer, load_checkpoints, nashconv_curve, optimization_trend, round_robin, vs_bot_curve, AblationSizes, Checkpoint,
    CheckpointModel, Contestant, EvalReport, MatchConfig, Method,
};
use crate::games::{grid_keepaway_game, matrix_team_game, random_tabular_game, GridConfig, GridKeepaway, PayoffTensor, RandomGameSpec, TabularGame, Team, TwoTeamGame};
use crate::learner::{
    extract_policies, tabulate_policy, train_with, BufferSpec, EpsilonSchedule, MixerKind, MixerSpec, TrainConfig, DEFAULT_MIX_HIDDEN,
};
use crate::numerics::DEFAULT_LEARNING_RATE;
use crate::oracle::{nashconv, solve_superb_q, DEFAULT_TOL};

/// A game description inside a run configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum GameSpec {
    Random(RandomGameSpec),
    Matrix {
        payoff: PayoffTensor,
        #[serde(default = "one")]
        n: usize,
        #[serde(default = "one")]
        m: usize,
    },
    Grid(GridConfig),
    /// An inline tabular game document.
    Tabular(TabularGame),
    /// A tabular game document or another game spec stored in a file,
    /// relative to the configuration file.
    File { path: PathBuf },
}

fn one() -> usize {
    1
}

/// A constructed game.
#[derive(Debug, Clone)]
pub enum Game {
    Tabular(TabularGame),
    Grid(GridKeepaway),
}

impl Game {
    pub fn as_dyn(&self) -> &dyn TwoTeamGame {
        match self {
            Game::Tabular(g) => g,
            Game::Grid(g) => g,
        }
    }

    pub fn tabular(&self) -> Result<&TabularGame> {
        match self {
            Game::Tabular(g) => Ok(g),
            Game::Grid(_) => Err(Error::Unsupported("this command needs an enumerated tabular game".into())),
        }
    }
}

impl GameSpec {
    /// Builds the game, replacing its discount by `gamma` when given.
    /// Relative file paths resolve against `base`.
    pub fn build(&self, gamma: Option<f64>, base: &Path) -> Result<Game> {
        let retarget = |g: TabularGame| -> Result<Game> {
            Ok(Game::Tabular(match gamma {
                Some(gm) => g.with_gamma(gm)?,
                None => g,
            }))
        };
        match self {
            GameSpec::Random(spec) => {
                let mut spec = spec.clone();
                if let Some(gm) = gamma {
                    spec.gamma = gm;
                }
                Ok(Game::Tabular(random_tabular_game(&spec)?))
            }
            GameSpec::Matrix { payoff, n, m } => retarget(matrix_team_game(payoff, *n, *m)?),
            GameSpec::Grid(config) => {
                let mut config = config.clone();
                if let Some(gm) = gamma {
                    config.gamma = gm;
                }
                Ok(Game::Grid(grid_keepaway_game(&config)?))
            }
            GameSpec::Tabular(g) => retarget(g.clone()),
            GameSpec::File { path } => {
                let path = base.join(path);
                let game = load_game(&path)?;
                match (game, gamma) {
                    (Game::Tabular(g), _) => retarget(g),
                    (grid, None) => Ok(grid),
                    (Game::Grid(_), Some(_)) => Err(Error::Config("discount overrides for grid files are not supported".into())),
                }
            }
        }
    }
}

/// Reads a game from a tabular game document, a game spec, or a run
/// configuration (its `game` field).
pub fn load_game(path: &Path) -> Result<Game> {
    let text = fs::read_to_string(path)?;
    let value: serde_json::Value = serde_json::from_str(&text)?;
    let base = path.parent().unwrap_or(Path::new("."));
    if value.get("type").is_some() {
        let spec: GameSpec = parse_value(value)?;
        return spec.build(None, base);
    }
    if value.get("game").is_some() {
        let config: RunConfig = parse_value(value)?;
        return config.game.build(config.gamma, base);
    }
    Ok(Game::Tabular(parse_value(value)?))
}

fn parse_value<T: serde::de::DeserializeOwned>(value: serde_json::Value) -> Result<T> {
    serde_path_to_error::deserialize(value).map_err(|e| Error::Config(format!("at `{}`: {}", e.path(), e.inner())))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MethodKind {
    #[default]
    Fm3q,
    Iql,
    Jminimax,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvalSettings {
    /// Episodes per match on stochastic games.
    #[serde(default = "default_match_episodes")]
    pub match_episodes: usize,
    #[serde(default = "default_tol")]
    pub tol: f64,
    /// Record exact NashConv in the metrics every this many episodes
    /// (tabular games only).
    #[serde(default)]
    pub nashconv_every: Option<usize>,
}

fn default_match_episodes() -> usize {
    100
}

fn default_tol() -> f64 {
    DEFAULT_TOL
}

impl Default for EvalSettings {
    fn default() -> Self {
        Self {
            match_episodes: default_match_episodes(),
            tol: DEFAULT_TOL,
            nashconv_every: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AblationSettings {
    pub small: usize,
    pub large: usize,
    /// Seeds shared by every buffer size; defaults to the run seed.
    #[serde(default)]
    pub seeds: Vec<u64>,
}

fn default_hidden() -> Vec<usize> {
    vec![64, 64]
}
fn default_mix_hidden() -> usize {
    DEFAULT_MIX_HIDDEN
}
fn default_lr() -> f64 {
    DEFAULT_LEARNING_RATE
}
fn default_updates() -> usize {
    10
}
fn default_window() -> usize {
    1
}

/// Everything needed to reproduce a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub game: GameSpec,
    #[serde(default)]
    pub method: MethodKind,
    pub episodes: usize,
    /// Replaces the game's own discount when set.
    #[serde(default)]
    pub gamma: Option<f64>,
    #[serde(default = "default_lr")]
    pub learning_rate: f64,
    #[serde(default = "default_hidden")]
    pub hidden: Vec<usize>,
    #[serde(default = "default_mix_hidden")]
    pub mix_hidden: usize,
    #[serde(default = "default_mixer")]
    pub mixer: MixerKind,
    #[serde(default = "default_true")]
    pub monotone: bool,
    #[serde(default)]
    pub buffer: BufferSpec,
    #[serde(default = "default_updates")]
    pub updates_per_round: usize,
    #[serde(default)]
    pub epsilon: EpsilonSchedule,
    #[serde(default = "default_window")]
    pub window: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub checkpoint_every: Option<usize>,
    /// Step sizes for the joint minimax-Q baseline.
    #[serde(default)]
    pub alpha: AlphaSchedule,
    #[serde(default)]
    pub eval: EvalSettings,
    #[serde(default)]
    pub ablation: Option<AblationSettings>,
    #[serde(default)]
    pub out: Option<PathBuf>,
}

fn default_mixer() -> MixerKind {
    MixerKind::Hyper
}
fn default_true() -> bool {
    true
}

impl RunConfig {
    /// Parses JSON, naming the offending field path on failure.
    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| Error::Config(format!("at `{}`: {}", e.path(), e.inner())))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            episodes: self.episodes,
            hidden: self.hidden.clone(),
            mixer: MixerSpec {
                kind: self.mixer,
                hidden: self.mix_hidden,
                monotone: self.monotone,
            },
            learning_rate: self.learning_rate,
            buffer: self.buffer,
            updates_per_round: self.updates_per_round,
            epsilon: self.epsilon,
            window: self.window,
            seed: self.seed,
            checkpoint_every: self.checkpoint_every,
            eval_every: self.eval.nashconv_every,
            check_targets: false,
        }
    }

    pub fn match_config(&self) -> MatchConfig {
        MatchConfig {
            episodes: self.eval.match_episodes,
            window: self.window,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.train_config().validate()?;
        if self.method == MethodKind::Jminimax {
            self.alpha.validate()?;
        }
        if !(self.eval.tol > 0.0) {
            return Err(Error::Config("eval.tol must be positive".into()));
        }
        if self.eval.nashconv_every == Some(0) {
            return Err(Error::Config("eval.nashconv_every must be at least 1".into()));
        }
        if let Some(a) = &self.ablation {
            AblationSizes {
                small: a.small,
                large: a.large,
            }
            .validate()?;
        }
        Ok(())
    }
}

/// A command failure with its exit code.
#[derive(Debug)]
pub enum CliError {
    /// Invalid configuration or inputs (exit 1).
    Input(Error),
    /// The run failed (exit 2).
    Run(Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => 1,
            CliError::Run(_) => 2,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Input(e) => write!(f, "invalid input: {e}"),
            CliError::Run(e) => write!(f, "run failed: {e}"),
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

fn input<T>(r: Result<T>) -> CliResult<T> {
    r.map_err(CliError::Input)
}

fn run<T>(r: Result<T>) -> CliResult<T> {
    r.map_err(CliError::Run)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EvalMode {
    RoundRobin,
    NashConv,
    Trend,
    VsBot,
}

impl std::str::FromStr for EvalMode {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "roundrobin" => Ok(EvalMode::RoundRobin),
            "nashconv" => Ok(EvalMode::NashConv),
            "trend" => Ok(EvalMode::Trend),
            "vsbot" => Ok(EvalMode::VsBot),
            other => Err(format!("unknown mode {other:?}; expected roundrobin, nashconv, trend or vsbot")),
        }
    }
}

/// Options shared by the commands; `None` means "not given on the command line".
#[derive(Debug, Clone, Default)]
pub struct CommandOptions {
    pub config: PathBuf,
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub tol: Option<f64>,
    pub mode: Option<EvalMode>,
    pub checkpoints: Option<PathBuf>,
}

/// Loads, overrides and validates the run configuration and builds its game.
fn resolve(opts: &CommandOptions) -> CliResult<(RunConfig, Game)> {
    let mut config = input(RunConfig::load(&opts.config))?;
    if let Some(seed) = opts.seed {
        config.seed = seed;
    }
    if let Some(tol) = opts.tol {
        config.eval.tol = tol;
    }
    input(config.validate())?;
    let base = opts.config.parent().unwrap_or(Path::new("."));
    let game = input(config.game.build(config.gamma, base))?;
    Ok((config, game))
}

fn out_dir(opts: &CommandOptions, config: &RunConfig, fallback: &str) -> PathBuf {
    opts.out
        .clone()
        .or_else(|| config.out.clone())
        .unwrap_or_else(|| PathBuf::from(fallback))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    fs::write(path, serde_json::to_string_pretty(value)?)?;
    Ok(())
}

fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

/// Versions and seeds of a run directory.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub crate_version: String,
    pub command: String,
    pub method: MethodKind,
    pub seeds: Vec<u64>,
    pub total_steps: usize,
    pub checkpoints: Vec<String>,
}

/// Trains one model. Writes `config.json` (the resolved configuration),
/// `metrics.csv`, `checkpoints/ckpt_<episode>.json` for every snapshot plus
/// the final model, and `manifest.json`.
pub fn cmd_train(opts: &CommandOptions) -> CliResult<()> {
    let (config, game) = resolve(opts)?;
    let dir = out_dir(opts, &config, "run");
    let ckpt_dir = dir.join("checkpoints");
    run(fs::create_dir_all(&ckpt_dir).map_err(Error::from))?;
    run(write_json(&dir.join("config.json"), &config))?;

    let seed = config.seed;
    let tc = config.train_config();
    let (checkpoints, total_steps) = match config.method {
        MethodKind::Fm3q => {
            let tabular = game.tabular().ok().cloned();
            let tol = config.eval.tol;
            let window = config.window;
            let out = run(train_with(game.as_dyn(), &tc, |_, model| match &tabular {
                Some(g) => {
                    let pair = extract_policies(model.clone());
                    let pro = tabulate_policy(&pair, g, Team::Pro, window)?;
                    let ant = tabulate_policy(&pair, g, Team::Ant, window)?;
                    Ok(Some(nashconv(g, &pro, &ant, tol)?))
                }
                None => Ok(None),
            }))?;
            run(write_csv(&dir.join("metrics.csv"), &out.metrics))?;
            let mut snaps: Vec<Checkpoint> = out
                .checkpoints
                .into_iter()
                .map(|(ep, m)| Checkpoint::new(Method::Fm3q, ep, seed, CheckpointModel::Fm3q(extract_policies(m))))
                .collect();
            snaps.push(Checkpoint::new(Method::Fm3q, config.episodes, seed, CheckpointModel::Fm3q(extract_policies(out.model))));
            (snaps, out.total_steps)
        }
        MethodKind::Iql => {
            let out = run(selfplay_independent_train(game.as_dyn(), &tc))?;
            run(write_csv(&dir.join("metrics.csv"), &out.metrics))?;
            let mut snaps: Vec<Checkpoint> = out
                .checkpoints
                .into_iter()
                .map(|(ep, m)| Checkpoint::new(Method::Iql, ep, seed, CheckpointModel::Iql(m)))
                .collect();
            snaps.push(Checkpoint::new(Method::Iql, config.episodes, seed, CheckpointModel::Iql(out.model)));
            (snaps, out.total_steps)
        }
        MethodKind::Jminimax => {
            let tabular = input(game.tabular())?;
            let jc = JointMinimaxConfig {
                episodes: config.episodes,
                alpha: config.alpha,
                epsilon: config.epsilon,
                seed,
                checkpoint_every: config.checkpoint_every,
            };
            let out = run(train_joint_minimax(tabular, &jc))?;
            run(write_csv(&dir.join("metrics.csv"), &out.metrics))?;
            let mut snaps: Vec<Checkpoint> = out
                .checkpoints
                .into_iter()
                .map(|(ep, l)| Checkpoint::new(Method::Jminimax, ep, seed, CheckpointModel::Jminimax(l)))
                .collect();
            snaps.push(Checkpoint::new(Method::Jminimax, config.episodes, seed, CheckpointModel::Jminimax(out.learner)));
            (snaps, out.total_steps)
        }
    };

    let mut names = Vec::new();
    for c in &checkpoints {
        if names.contains(&c.file_name()) {
            continue;
        }
        run(c.save(&ckpt_dir.join(c.file_name())))?;
        names.push(c.file_name());
    }
    let manifest = RunManifest {
        crate_version: env!("CARGO_PKG_VERSION").into(),
        command: "train".into(),
        method: config.method,
        seeds: vec![seed],
        total_steps,
        checkpoints: names.clone(),
    };
    run(write_json(&dir.join("manifest.json"), &manifest))?;
    println!(
        "trained {:?} for {} episodes ({} steps), seed {}, {} checkpoints in {}",
        config.method,
        config.episodes,
        total_steps,
        seed,
        names.len(),
        ckpt_dir.display()
    );
    Ok(())
}

/// Solves the game of `opts.config` exactly and prints a summary; writes
/// `oracle.json` into `--out` when given.
pub fn cmd_oracle(opts: &CommandOptions) -> CliResult<()> {
    let game = input(load_game(&opts.config))?;
    let tabular = input(game.tabular())?;
    let tol = opts.tol.unwrap_or(DEFAULT_TOL);
    if !(tol > 0.0) {
        return Err(CliError::Input(Error::Config(format!("tolerance {tol} must be positive"))));
    }
    let sol = run(solve_superb_q(tabular, tol, None))?;
    println!("{}", sol.summary());
    println!("pure_saddles={}", sol.has_pure_saddles(tol));
    if let Some(dir) = &opts.out {
        run(fs::create_dir_all(dir).map_err(Error::from))?;
        run(write_json(&dir.join("oracle.json"), &sol))?;
    }
    Ok(())
}

/// Evaluates the checkpoints of a run. The game comes from `--config`; the
/// checkpoints from `--checkpoints` or the `checkpoints` directory next to
/// the configuration.
pub fn cmd_eval(opts: &CommandOptions) -> CliResult<()> {
    let (config, game) = resolve(opts)?;
    let mode = opts.mode.unwrap_or(EvalMode::NashConv);
    let base = opts.config.parent().unwrap_or(Path::new("."));
    let ckpt_dir = opts.checkpoints.clone().unwrap_or_else(|| base.join("checkpoints"));
    let checkpoints = input(load_checkpoints(&ckpt_dir))?;
    if checkpoints.is_empty() {
        return Err(CliError::Input(Error::Config(format!("no checkpoints in {}", ckpt_dir.display()))));
    }
    if matches!(mode, EvalMode::RoundRobin | EvalMode::Trend) && checkpoints.len() < 2 {
        return Err(CliError::Input(Error::Config(format!(
            "{mode:?} needs at least 2 checkpoints, found {}",
            checkpoints.len()
        ))));
    }
    let labels: Vec<String> = checkpoints.iter().map(Checkpoint::label).collect();
    let contestants: Vec<Contestant> = checkpoints
        .iter()
        .zip(&labels)
        .map(|(c, l)| Contestant::new(l, c.episode, c.policy()))
        .collect();
    let echo = serde_json::json!({ "run": config, "mode": mode, "checkpoints": ckpt_dir });
    let mut report = EvalReport::new(echo, vec![config.seed]);
    let matches = config.match_config();
    match mode {
        EvalMode::NashConv => {
            let g = input(game.tabular())?;
            let curve = run(nashconv_curve(g, &contestants, config.window, config.eval.tol))?;
            for p in &curve {
                println!("episode {} nashconv {:.9}", p.episode, p.value);
            }
            report.curves.insert("nashconv".into(), curve);
        }
        EvalMode::VsBot => {
            let curve = run(vs_bot_curve(game.as_dyn(), &contestants, &matches, config.seed))?;
            for p in &curve {
                println!("episode {} vs_bot {:.6}", p.episode, p.value);
            }
            report.curves.insert("vs_bot".into(), curve);
        }
        EvalMode::RoundRobin | EvalMode::Trend => {
            let rr = run(round_robin(game.as_dyn(), &contestants, &matches, config.seed))?;
            let curve = rr
                .returns
                .iter()
                .zip(&rr.table.matches)
                .map(|(e, m)| crate::eval::CurvePoint {
                    episode: e.episode,
                    value: e.normalized,
                    matches: m.iter().sum(),
                })
                .collect();
            report.curves.insert("round_robin".into(), curve);
            if mode == EvalMode::Trend {
                let trend = run(optimization_trend(&rr.table))?;
                println!(
                    "fraction_later_beats_earlier {:.6} (violations {}/{})",
                    trend.fraction_later_beats_earlier, trend.violations, trend.cells
                );
                report.trends.insert("checkpoints".into(), trend);
            } else {
                for e in &rr.returns {
                    println!("{} rr {:.6}", e.label, e.normalized);
                }
            }
            report.rr_returns.insert("checkpoints".into(), rr.returns.clone());
            report.payoff_tables.insert("checkpoints".into(), rr.table);
        }
    }
    let dir = opts.out.clone().unwrap_or_else(|| base.join(format!("eval_{}", mode_name(mode))));
    run(report.write(&dir))?;
    Ok(())
}

fn mode_name(mode: EvalMode) -> &'static str {
    match mode {
        EvalMode::RoundRobin => "roundrobin",
        EvalMode::NashConv => "nashconv",
        EvalMode::Trend => "trend",
        EvalMode::VsBot => "vsbot",
    }
}

/// Runs the replay-buffer ablation described by the configuration's
/// `ablation` section and writes its report.
pub fn cmd_ablate(opts: &CommandOptions) -> CliResult<()> {
    let (config, game) = resolve(opts)?;
    let Some(settings) = &config.ablation else {
        return Err(CliError::Input(Error::Config("missing field `ablation`".into())));
    };
    if config.method != MethodKind::Fm3q {
        return Err(CliError::Input(Error::Config("the buffer ablation trains fm3q".into())));
    }
    let sizes = AblationSizes {
        small: settings.small,
        large: settings.large,
    };
    let seeds = if settings.seeds.is_empty() {
        vec![config.seed]
    } else {
        settings.seeds.clone()
    };
    let outcome = run(ablate_buffer(game.as_dyn(), sizes, &config.train_config(), &seeds, &config.match_config()))?;
    for s in &outcome.seeds {
        println!(
            "seed {} rr small {:.4} large {:.4} full {:.4}",
            s.seed, s.final_rr[0], s.final_rr[1], s.final_rr[2]
        );
    }
    let echo = run(serde_json::to_value(&config).map_err(Error::from))?;
    let report = outcome.to_report(echo);
    let dir = out_dir(opts, &config, "ablation");
    run(report.write(&dir))?;
    run(write_json(&dir.join("config.json"), &config))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{"game": {"type": "random", "seed": 0, "n_states": 2, "n_pro": 1, "n_ant": 1, "actions_per_agent": 2, "gamma": 0.5}, "episodes": 3}"#;

    #[test]
    fn defaults_are_filled_in() {
        let c = RunConfig::from_json(MINIMAL).unwrap();
        assert_eq!(c.learning_rate, 5e-4);
        assert_eq!(c.hidden, vec![64, 64]);
        assert_eq!(c.mix_hidden, 32);
        assert_eq!(c.updates_per_round, 10);
        assert_eq!(c.method, MethodKind::Fm3q);
        c.validate().unwrap();
    }

    #[test]
    fn missing_fields_are_named() {
        let err = RunConfig::from_json(r#"{"game": {"type": "grid", "side": 5}}"#).unwrap_err();
        assert!(err.to_string().contains("episodes"), "{err}");
        let err = RunConfig::from_json(r#"{"game": {"type": "random", "seed": 0}, "episodes": 1}"#).unwrap_err();
        assert!(err.to_string().contains("game"), "{err}");
        let err = RunConfig::from_json(r#"{"game": {"type": "grid", "side": 5}, "episodes": 1, "buffer": {"mode": "tiny"}}"#).unwrap_err();
        assert!(err.to_string().contains("buffer.mode"), "{err}");
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let text = MINIMAL.replace("\"episodes\": 3", "\"episodes\": 3, \"epochs\": 2");
        assert!(RunConfig::from_json(&text).is_err());
    }

    #[test]
    fn games_build_with_discount_override() {
        let c = RunConfig::from_json(MINIMAL).unwrap();
        let g = c.game.build(Some(0.9), Path::new(".")).unwrap();
        assert_eq!(g.as_dyn().gamma(), 0.9);
        let grid: GameSpec = serde_json::from_str(r#"{"type": "grid", "side": 4}"#).unwrap();
        let g = grid.build(None, Path::new(".")).unwrap();
        assert!(g.tabular().is_err());
        let matrix: GameSpec = serde_json::from_str(r#"{"type": "matrix", "payoff": {"dims": [2, 2], "data": [1, 0, 0, 1]}}"#).unwrap();
        assert_eq!(matrix.build(None, Path::new(".")).unwrap().as_dyn().horizon(), 1);
    }

    #[test]
    fn tabular_documents_round_trip_through_specs() {
        let game = random_tabular_game(&RandomGameSpec::new(1, 2, 1, 1, 2, 0.5)).unwrap();
        let spec = GameSpec::Tabular(game.clone());
        let back: GameSpec = serde_json::from_str(&serde_json::to_string(&spec).unwrap()).unwrap();
        assert_eq!(back, spec);
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("g.json"), serde_json::to_string(&game).unwrap()).unwrap();
        let file = GameSpec::File { path: "g.json".into() };
        match file.build(None, dir.path()).unwrap() {
            Game::Tabular(g) => assert_eq!(g, game),
            Game::Grid(_) => panic!("expected a tabular game"),
        }
    }

    #[test]
    fn modes_parse() {
        assert_eq!("trend".parse::<EvalMode>().unwrap(), EvalMode::Trend);
        assert!("elo".parse::<EvalMode>().is_err());
    }
}
