use serde::{Deserialize, Serialize};

use super::matches::MatchConfig;
use super::report::{CurvePoint, EvalReport};
use super::tournament::{optimization_trend, round_robin, Contestant, TrendReport};
use crate::error::{Error, Result};
use crate::games::TwoTeamGame;
use crate::learner::{extract_policies, train, BufferSpec, GreedyPolicyPair, TrainConfig, TrainOutcome};

pub const ABLATION_LABELS: [&str; 3] = ["small", "large", "full"];

/// Bounded capacities; the third cohort always keeps everything.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AblationSizes {
    pub small: usize,
    pub large: usize,
}

impl AblationSizes {
    /// Capacities must be positive and must not decrease; equal capacities
    /// are allowed and give identical cohorts.
    pub fn validate(&self) -> Result<()> {
        if self.small == 0 || self.small > self.large {
            return Err(Error::Config(format!(
                "buffer sizes must satisfy 0 < small ≤ large, got small={} large={}",
                self.small, self.large
            )));
        }
        Ok(())
    }

    pub fn specs(&self) -> [BufferSpec; 3] {
        [BufferSpec::small(self.small), BufferSpec::large(self.large), BufferSpec::full()]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationSeed {
    pub seed: u64,
    /// Normalized round-robin return of the final small, large and full models.
    pub final_rr: [f64; 3],
    pub final_rr_raw: [f64; 3],
    /// Per size, over that size's checkpoints; `None` with fewer than two.
    pub trend: [Option<TrendReport>; 3],
    pub total_steps: [usize; 3],
}

impl AblationSeed {
    /// full ≥ large ≥ small in final normalized RR return.
    pub fn ordered(&self) -> bool {
        self.final_rr[2] >= self.final_rr[1] && self.final_rr[1] >= self.final_rr[0]
    }
}

#[derive(Debug, Clone)]
pub struct AblationOutcome {
    pub sizes: AblationSizes,
    pub seeds: Vec<AblationSeed>,
    /// Training outcomes per seed, in small, large, full order.
    pub runs: Vec<[TrainOutcome; 3]>,
}

impl AblationOutcome {
    /// Curves `rr_<size>` (final normalized RR return per seed, keyed by the
    /// seed's position) and `trend_<size>`, plus one payoff table per seed.
    pub fn to_report(&self, config: serde_json::Value) -> EvalReport {
        let mut report = EvalReport::new(config, self.seeds.iter().map(|s| s.seed).collect());
        for (k, label) in ABLATION_LABELS.iter().enumerate() {
            let rr = self
                .seeds
                .iter()
                .map(|s| CurvePoint {
                    episode: s.total_steps[k],
                    value: s.final_rr[k],
                    matches: 0,
                })
                .collect();
            report.curves.insert(format!("rr_{label}"), rr);
            let trend = self
                .seeds
                .iter()
                .filter_map(|s| {
                    s.trend[k].as_ref().map(|t| CurvePoint {
                        episode: s.total_steps[k],
                        value: t.fraction_later_beats_earlier,
                        matches: t.cells,
                    })
                })
                .collect();
            report.curves.insert(format!("trend_{label}"), trend);
            if let Some(last) = self.seeds.last().and_then(|s| s.trend[k].clone()) {
                report.trends.insert((*label).to_string(), last);
            }
        }
        report
    }
}

/// Trains FM3Q once per buffer size and seed (shared seeds across sizes),
/// plays the three final models of each seed in a round robin and measures
/// each size's optimization trend over its checkpoints.
pub fn ablate_buffer<G: TwoTeamGame + ?Sized>(
    game: &G,
    sizes: AblationSizes,
    config: &TrainConfig,
    seeds: &[u64],
    matches: &MatchConfig,
) -> Result<AblationOutcome> {
    sizes.validate()?;
    if seeds.is_empty() {
        return Err(Error::Config("ablation needs at least one seed".into()));
    }
    let mut out = Vec::with_capacity(seeds.len());
    let mut runs = Vec::with_capacity(seeds.len());
    for &seed in seeds {
        let specs = sizes.specs();
        let train_one = |spec: BufferSpec| {
            let cfg = TrainConfig {
                buffer: spec,
                seed,
                ..config.clone()
            };
            train(game, &cfg)
        };
        let outcomes = [train_one(specs[0])?, train_one(specs[1])?, train_one(specs[2])?];
        let finals: Vec<GreedyPolicyPair> = outcomes.iter().map(|o| extract_policies(o.model.clone())).collect();
        let contestants: Vec<Contestant> = finals
            .iter()
            .zip(ABLATION_LABELS)
            .map(|(p, label)| Contestant::new(label, config.episodes, p))
            .collect();
        let rr = round_robin(game, &contestants, matches, seed)?;
        let mut trend: [Option<TrendReport>; 3] = [None, None, None];
        for (k, o) in outcomes.iter().enumerate() {
            if o.checkpoints.len() < 2 {
                continue;
            }
            let pairs: Vec<GreedyPolicyPair> = o.checkpoints.iter().map(|(_, m)| extract_policies(m.clone())).collect();
            let cs: Vec<Contestant> = o
                .checkpoints
                .iter()
                .zip(&pairs)
                .map(|((episode, _), p)| Contestant::new(ABLATION_LABELS[k], *episode, p))
                .collect();
            trend[k] = Some(optimization_trend(&round_robin(game, &cs, matches, seed)?.table)?);
        }
        out.push(AblationSeed {
            seed,
            final_rr: [rr.returns[0].normalized, rr.returns[1].normalized, rr.returns[2].normalized],
            final_rr_raw: [rr.returns[0].raw, rr.returns[1].raw, rr.returns[2].raw],
            trend,
            total_steps: [outcomes[0].total_steps, outcomes[1].total_steps, outcomes[2].total_steps],
        });
        runs.push(outcomes);
    }
    Ok(AblationOutcome { sizes, seeds: out, runs })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::games::{random_tabular_game, RandomGameSpec};
    use crate::learner::MixerSpec;

    fn config() -> TrainConfig {
        TrainConfig {
            episodes: 6,
            hidden: vec![6],
            mixer: MixerSpec::hyper(4),
            learning_rate: 5e-3,
            checkpoint_every: Some(2),
            ..TrainConfig::default()
        }
    }

    #[test]
    fn decreasing_sizes_are_refused() {
        assert!(AblationSizes { small: 10, large: 5 }.validate().is_err());
        assert!(AblationSizes { small: 0, large: 5 }.validate().is_err());
        assert!(AblationSizes { small: 5, large: 5 }.validate().is_ok());
    }

    #[test]
    fn equal_sizes_give_identical_cohorts() {
        let game = random_tabular_game(&RandomGameSpec::new(2, 3, 1, 1, 2, 0.5).deterministic().horizon(4)).unwrap();
        let out = ablate_buffer(&game, AblationSizes { small: 8, large: 8 }, &config(), &[1], &MatchConfig::default()).unwrap();
        let [s, l, _] = &out.runs[0];
        assert_eq!(s.model.params(), l.model.params());
        assert_eq!(out.seeds[0].final_rr[0], out.seeds[0].final_rr[1]);
        assert!(out.seeds[0].trend.iter().all(Option::is_some));
        let report = out.to_report(serde_json::Value::Null);
        assert_eq!(report.curves["rr_full"].len(), 1);
    }
}
