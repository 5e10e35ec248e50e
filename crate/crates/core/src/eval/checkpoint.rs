use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::baselines::{IndependentModel, JointMinimaxQLearner};
use crate::error::{Error, Result};
use crate::games::{AugmentedState, JointSpace, Team, TwoTeamGame};
use crate::learner::{GreedyPolicyPair, TeamPolicy};
use crate::oracle::OracleSolution;

pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Fm3q,
    Iql,
    Jminimax,
    Oracle,
    Table,
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            Method::Fm3q => "fm3q",
            Method::Iql => "iql",
            Method::Jminimax => "jminimax",
            Method::Oracle => "oracle",
            Method::Table => "table",
        };
        f.write_str(name)
    }
}

/// Deterministic state-indexed joint policies for both teams.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TablePolicy {
    pub pro_actions: Vec<usize>,
    pub ant_actions: Vec<usize>,
    /// Pro joint action index per state.
    pub pro: Vec<usize>,
    /// Ant joint action index per state.
    pub ant: Vec<usize>,
}

impl TablePolicy {
    pub fn new<G: TwoTeamGame + ?Sized>(game: &G, pro: Vec<usize>, ant: Vec<usize>) -> Result<Self> {
        let policy = Self {
            pro_actions: game.pro_action_counts().to_vec(),
            ant_actions: game.ant_action_counts().to_vec(),
            pro,
            ant,
        };
        if policy.pro.len() != game.n_states() || policy.ant.len() != game.n_states() {
            return Err(Error::PolicyNotTotal(format!(
                "table covers {}/{} states for a {}-state game",
                policy.pro.len(),
                policy.ant.len(),
                game.n_states()
            )));
        }
        let (na, nb) = (game.pro_joint().size(), game.ant_joint().size());
        if policy.pro.iter().any(|&a| a >= na) || policy.ant.iter().any(|&b| b >= nb) {
            return Err(Error::InvalidAction("table entry outside the joint action space".into()));
        }
        Ok(policy)
    }

    /// The oracle's greedy minimax pair.
    pub fn from_oracle<G: TwoTeamGame + ?Sized>(game: &G, solution: &OracleSolution) -> Result<Self> {
        Self::new(game, solution.pro_policy.clone(), solution.ant_policy.clone())
    }
}

impl TeamPolicy for TablePolicy {
    fn act(&self, state: &AugmentedState, team: Team) -> Result<Vec<usize>> {
        let (table, counts) = match team {
            Team::Pro => (&self.pro, &self.pro_actions),
            Team::Ant => (&self.ant, &self.ant_actions),
        };
        let index = table
            .get(state.state)
            .ok_or_else(|| Error::PolicyNotTotal(format!("no entry for state {}", state.state)))?;
        Ok(JointSpace::new(counts).decode(*index))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum CheckpointModel {
    Fm3q(GreedyPolicyPair),
    Iql(IndependentModel),
    Jminimax(JointMinimaxQLearner),
    Table(TablePolicy),
}

impl CheckpointModel {
    pub fn policy(&self) -> &dyn TeamPolicy {
        match self {
            CheckpointModel::Fm3q(m) => m,
            CheckpointModel::Iql(m) => m,
            CheckpointModel::Jminimax(m) => m,
            CheckpointModel::Table(m) => m,
        }
    }
}

/// A saved policy snapshot with its provenance.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Checkpoint {
    pub version: u32,
    pub method: Method,
    /// Training episodes completed when the snapshot was taken.
    pub episode: usize,
    pub seed: u64,
    pub model: CheckpointModel,
}

impl Checkpoint {
    pub fn new(method: Method, episode: usize, seed: u64, model: CheckpointModel) -> Self {
        Self {
            version: CHECKPOINT_VERSION,
            method,
            episode,
            seed,
            model,
        }
    }

    pub fn policy(&self) -> &dyn TeamPolicy {
        self.model.policy()
    }

    pub fn label(&self) -> String {
        format!("{}@{}", self.method, self.episode)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, serde_json::to_string(self)?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let checkpoint: Checkpoint = serde_json::from_str(&fs::read_to_string(path)?)?;
        if checkpoint.version != CHECKPOINT_VERSION {
            return Err(Error::Config(format!(
                "checkpoint version {} is not {CHECKPOINT_VERSION}",
                checkpoint.version
            )));
        }
        Ok(checkpoint)
    }

    /// Conventional file name, sortable by episode.
    pub fn file_name(&self) -> String {
        format!("ckpt_{:08}.json", self.episode)
    }
}

/// Loads every `*.json` file in `dir` as a checkpoint, ordered by episode and
/// then file name. Unloadable files are skipped with a warning.
pub fn load_checkpoints(dir: &Path) -> Result<Vec<Checkpoint>> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    paths.sort();
    let mut out: Vec<Checkpoint> = Vec::new();
    for path in paths {
        match Checkpoint::load(&path) {
            Ok(c) => out.push(c),
            Err(e) => log::warn!("skipping {}: {e}", path.display()),
        }
    }
    out.sort_by_key(|c| c.episode);
    Ok(out)
}
