use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::matches::{play_match, MatchConfig, ScriptedPolicy};
use super::tournament::{Contestant, PayoffTable, RrEntry, TrendReport};
use crate::error::{Error, Result};
use crate::games::{TabularGame, Team, TwoTeamGame};
use crate::learner::tabulate_policy;
use crate::oracle::nashconv;
use crate::seeded_rng;

pub const EVAL_REPORT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub episode: usize,
    pub value: f64,
    /// Episodes played to obtain the value; 0 for exact computations.
    pub matches: usize,
}

/// Exact NashConv of every contestant's greedy pair, via best responses.
pub fn nashconv_curve(game: &TabularGame, contestants: &[Contestant<'_>], window: usize, tol: f64) -> Result<Vec<CurvePoint>> {
    contestants
        .iter()
        .map(|c| {
            let pro = tabulate_policy(c.policy, game, Team::Pro, window)?;
            let ant = tabulate_policy(c.policy, game, Team::Ant, window)?;
            Ok(CurvePoint {
                episode: c.episode,
                value: nashconv(game, &pro, &ant, tol)?,
                matches: 0,
            })
        })
        .collect()
}

/// Mean return against the game's scripted bot over both seatings:
/// ½·[R(c as Pro vs bot) − R(bot as Pro vs c)]. Contestant k draws from
/// stream k of `seed`.
pub fn vs_bot_curve<G: TwoTeamGame + ?Sized>(game: &G, contestants: &[Contestant<'_>], config: &MatchConfig, seed: u64) -> Result<Vec<CurvePoint>> {
    let bot = ScriptedPolicy(game);
    contestants
        .iter()
        .enumerate()
        .map(|(k, c)| {
            let mut rng = seeded_rng(seed, k as u64);
            let as_pro = play_match(game, c.policy, &bot, config, &mut rng)?;
            let as_ant = play_match(game, &bot, c.policy, config, &mut rng)?;
            if !(as_pro.is_zero_sum() && as_ant.is_zero_sum()) {
                return Err(Error::NonFinite("bot match is not zero-sum".into()));
            }
            Ok(CurvePoint {
                episode: c.episode,
                value: 0.5 * (as_pro.mean_return - as_ant.mean_return),
                matches: as_pro.episodes + as_ant.episodes,
            })
        })
        .collect()
}

/// Everything an evaluation run produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub version: u32,
    pub kind: String,
    /// The resolved configuration that produced the report.
    pub config: serde_json::Value,
    pub seeds: Vec<u64>,
    pub curves: BTreeMap<String, Vec<CurvePoint>>,
    pub payoff_tables: BTreeMap<String, PayoffTable>,
    pub rr_returns: BTreeMap<String, Vec<RrEntry>>,
    pub trends: BTreeMap<String, TrendReport>,
}

impl EvalReport {
    pub fn new(config: serde_json::Value, seeds: Vec<u64>) -> Self {
        Self {
            version: EVAL_REPORT_VERSION,
            kind: "eval_report".into(),
            config,
            seeds,
            curves: BTreeMap::new(),
            payoff_tables: BTreeMap::new(),
            rr_returns: BTreeMap::new(),
            trends: BTreeMap::new(),
        }
    }

    /// Writes `report.json`, `curve_<name>.csv` per curve and
    /// `payoff_<name>.csv` per payoff table into `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        fs::write(dir.join("report.json"), serde_json::to_string_pretty(self)?)?;
        for (name, points) in &self.curves {
            let mut w = csv::Writer::from_path(dir.join(format!("curve_{name}.csv")))?;
            for p in points {
                w.serialize(p)?;
            }
            w.flush()?;
        }
        for (name, table) in &self.payoff_tables {
            fs::write(dir.join(format!("payoff_{name}.csv")), table.to_csv()?)?;
        }
        Ok(())
    }
}
