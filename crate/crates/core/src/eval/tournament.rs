use serde::{Deserialize, Serialize};

use super::matches::{play_match, MatchConfig};
use crate::error::{Error, Result};
use crate::games::TwoTeamGame;
use crate::learner::TeamPolicy;
use crate::seeded_rng;

/// A named policy entered into a tournament.
#[derive(Clone, Copy)]
pub struct Contestant<'a> {
    pub label: &'a str,
    pub episode: usize,
    pub policy: &'a dyn TeamPolicy,
}

impl<'a> Contestant<'a> {
    pub fn new(label: &'a str, episode: usize, policy: &'a dyn TeamPolicy) -> Self {
        Self { label, episode, policy }
    }
}

/// Pairwise results: cell (i, j) is contestant i's mean return against j,
/// averaged over both seatings, so the table is antisymmetric.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PayoffTable {
    pub labels: Vec<String>,
    pub episodes: Vec<usize>,
    pub mean: Vec<Vec<f64>>,
    /// i's win share over both seatings; draws count for neither side.
    pub win_rate: Vec<Vec<f64>>,
    pub half_width: Vec<Vec<f64>>,
    /// Episodes played per cell; 0 on the diagonal.
    pub matches: Vec<Vec<usize>>,
    /// Every match of the table was exact.
    pub exact: bool,
}

impl PayoffTable {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Largest |cell(i,j) + cell(j,i)| over all pairs.
    pub fn antisymmetry_gap(&self) -> f64 {
        let n = self.len();
        let mut gap = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                gap = gap.max((self.mean[i][j] + self.mean[j][i]).abs());
            }
        }
        gap
    }

    /// CSV with a header of labels and one row per contestant.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["row".to_string()];
        header.extend(self.labels.iter().cloned());
        w.write_record(&header)?;
        for (label, row) in self.labels.iter().zip(&self.mean) {
            let mut record = vec![label.clone()];
            record.extend(row.iter().map(|v| v.to_string()));
            w.write_record(&record)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RrEntry {
    pub label: String,
    pub episode: usize,
    /// Sum of the contestant's payoff cells.
    pub raw: f64,
    /// Min-max normalized over the cohort; 0.5 for everyone when all raw
    /// returns are equal.
    pub normalized: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundRobin {
    pub table: PayoffTable,
    pub returns: Vec<RrEntry>,
}

/// Min-max normalization to [0, 1]; a constant input maps to 0.5.
pub fn normalize_returns(raw: &[f64]) -> Vec<f64> {
    let lo = raw.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = raw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !(hi > lo) {
        return vec![0.5; raw.len()];
    }
    raw.iter().map(|r| (r - lo) / (hi - lo)).collect()
}

/// Every ordered pair plays one match with i as Pro and j as Ant. Match
/// (i, j) draws from random stream i·n + j of `seed`, so results do not
/// depend on evaluation order.
pub fn round_robin<G: TwoTeamGame + ?Sized>(game: &G, contestants: &[Contestant<'_>], config: &MatchConfig, seed: u64) -> Result<RoundRobin> {
    let n = contestants.len();
    if n < 2 {
        return Err(Error::Config(format!("a round robin needs at least 2 contestants, got {n}")));
    }
    let mut seated = vec![vec![None; n]; n];
    for (i, pro) in contestants.iter().enumerate() {
        for (j, ant) in contestants.iter().enumerate() {
            if i == j {
                continue;
            }
            let mut rng = seeded_rng(seed, (i * n + j) as u64);
            let result = play_match(game, pro.policy, ant.policy, config, &mut rng)?;
            if !result.is_zero_sum() {
                return Err(Error::NonFinite(format!("match {i} vs {j} is not zero-sum")));
            }
            seated[i][j] = Some(result);
        }
    }
    let mut mean = vec![vec![0.0; n]; n];
    let mut win_rate = vec![vec![0.0; n]; n];
    let mut half_width = vec![vec![0.0; n]; n];
    let mut matches = vec![vec![0; n]; n];
    let mut exact = true;
    for i in 0..n {
        for j in 0..n {
            if let (Some(as_pro), Some(as_ant)) = (&seated[i][j], &seated[j][i]) {
                mean[i][j] = 0.5 * (as_pro.mean_return - as_ant.mean_return);
                win_rate[i][j] = 0.5 * (as_pro.pro_win_rate + as_ant.ant_win_rate);
                half_width[i][j] = 0.5 * as_pro.half_width.hypot(as_ant.half_width);
                matches[i][j] = as_pro.episodes + as_ant.episodes;
                exact &= as_pro.exact && as_ant.exact;
            }
        }
    }
    let raw: Vec<f64> = mean.iter().map(|row| row.iter().sum()).collect();
    let normalized = normalize_returns(&raw);
    let returns = contestants
        .iter()
        .zip(raw.iter().zip(&normalized))
        .map(|(c, (&raw, &normalized))| RrEntry {
            label: c.label.to_string(),
            episode: c.episode,
            raw,
            normalized,
        })
        .collect();
    Ok(RoundRobin {
        table: PayoffTable {
            labels: contestants.iter().map(|c| c.label.to_string()).collect(),
            episodes: contestants.iter().map(|c| c.episode).collect(),
            mean,
            win_rate,
            half_width,
            matches,
            exact,
        },
        returns,
    })
}

/// How often later checkpoints hold their ground against earlier ones.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrendReport {
    /// Strictly-lower-triangle cells (later row, earlier column).
    pub cells: usize,
    /// Cells where the later model loses (negative mean return).
    pub violations: usize,
    /// Share of cells where the later model is not beaten.
    pub fraction_later_beats_earlier: f64,
    /// Share of cells where the later model has a strictly positive return.
    pub strictly_positive_fraction: f64,
}

/// Counts violations in the lower triangle of a table ordered by episode.
pub fn optimization_trend(table: &PayoffTable) -> Result<TrendReport> {
    if table.episodes.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::Config("payoff table must be ordered by episode".into()));
    }
    let n = table.len();
    let (mut cells, mut violations, mut positive) = (0, 0, 0);
    for i in 0..n {
        for j in 0..i {
            cells += 1;
            let v = table.mean[i][j];
            if v < 0.0 {
                violations += 1;
            }
            if v > 0.0 {
                positive += 1;
            }
        }
    }
    let frac = |k: usize| if cells == 0 { 1.0 } else { k as f64 / cells as f64 };
    Ok(TrendReport {
        cells,
        violations,
        fraction_later_beats_earlier: frac(cells - violations),
        strictly_positive_fraction: frac(positive),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::TablePolicy;
    use crate::games::{matrix_team_game, random_tabular_game, PayoffTensor, RandomGameSpec};
    use proptest::prelude::*;

    fn rps() -> crate::games::TabularGame {
        matrix_team_game(&PayoffTensor::from_matrix(&[vec![0.0, -1.0, 1.0], vec![1.0, 0.0, -1.0], vec![-1.0, 1.0, 0.0]]), 1, 1).unwrap()
    }

    fn pure(game: &crate::games::TabularGame, k: usize) -> TablePolicy {
        TablePolicy::new(game, vec![k], vec![k]).unwrap()
    }

    #[test]
    fn dominant_contestant_normalizes_to_one() {
        // Row 1 beats row 0 whichever seat it takes.
        let game = matrix_team_game(&PayoffTensor::from_matrix(&[vec![0.0, -1.0], vec![1.0, 0.0]]), 1, 1).unwrap();
        let (a, b) = (pure(&game, 1), pure(&game, 0));
        let rr = round_robin(&game, &[Contestant::new("a", 0, &a), Contestant::new("b", 1, &b)], &MatchConfig::default(), 0).unwrap();
        assert_eq!(rr.table.mean[0][1], 1.0);
        assert_eq!(rr.table.win_rate[0][1], 1.0);
        assert_eq!(rr.returns[0].normalized, 1.0);
        assert_eq!(rr.returns[1].normalized, 0.0);
    }

    #[test]
    fn cyclic_cohort_has_equal_returns() {
        let game = rps();
        let policies: Vec<TablePolicy> = (0..3).map(|k| pure(&game, k)).collect();
        let labels = ["rock", "paper", "scissors"];
        let cs: Vec<Contestant> = (0..3).map(|k| Contestant::new(labels[k], k, &policies[k])).collect();
        let rr = round_robin(&game, &cs, &MatchConfig::default(), 0).unwrap();
        assert!(rr.returns.iter().all(|e| e.raw == 0.0 && e.normalized == 0.5));
        let trend = optimization_trend(&rr.table).unwrap();
        assert_eq!(trend.cells, 3);
        assert!((trend.fraction_later_beats_earlier - 2.0 / 3.0).abs() < 1e-12);
        let reversed: Vec<Contestant> = (0..3).map(|k| Contestant::new(labels[2 - k], k, &policies[2 - k])).collect();
        let trend = optimization_trend(&round_robin(&game, &reversed, &MatchConfig::default(), 0).unwrap().table).unwrap();
        assert!((trend.fraction_later_beats_earlier - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn monotone_cohort_has_full_trend() {
        let game = matrix_team_game(&PayoffTensor::from_matrix(&[vec![0.0, -1.0, -2.0], vec![1.0, 0.0, -1.0], vec![2.0, 1.0, 0.0]]), 1, 1).unwrap();
        let policies: Vec<TablePolicy> = (0..3).map(|k| pure(&game, k)).collect();
        let cs: Vec<Contestant> = (0..3).map(|k| Contestant::new("c", k, &policies[k])).collect();
        let trend = optimization_trend(&round_robin(&game, &cs, &MatchConfig::default(), 0).unwrap().table).unwrap();
        assert_eq!(trend.fraction_later_beats_earlier, 1.0);
        assert_eq!(trend.strictly_positive_fraction, 1.0);
    }

    #[test]
    fn single_contestant_is_refused() {
        let game = rps();
        let p = pure(&game, 0);
        assert!(round_robin(&game, &[Contestant::new("x", 0, &p)], &MatchConfig::default(), 0).is_err());
    }

    #[test]
    fn unordered_tables_are_refused() {
        let game = rps();
        let (a, b) = (pure(&game, 0), pure(&game, 1));
        let rr = round_robin(&game, &[Contestant::new("a", 5, &a), Contestant::new("b", 1, &b)], &MatchConfig::default(), 0).unwrap();
        assert!(optimization_trend(&rr.table).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn stochastic_tables_are_antisymmetric(seed in 0u64..1000, picks in proptest::collection::vec(0usize..4, 3)) {
            let game = random_tabular_game(&RandomGameSpec::new(seed, 2, 1, 1, 2, 0.8).horizon(6)).unwrap();
            let policies: Vec<TablePolicy> = picks.iter().map(|&k| TablePolicy::new(&game, vec![k % 2, k / 2], vec![k / 2, k % 2]).unwrap()).collect();
            let cs: Vec<Contestant> = policies.iter().enumerate().map(|(k, p)| Contestant::new("p", k, p)).collect();
            let rr = round_robin(&game, &cs, &MatchConfig { episodes: 30, window: 1 }, seed).unwrap();
            prop_assert!(rr.table.antisymmetry_gap() == 0.0);
            let lo = rr.returns.iter().map(|e| e.normalized).fold(f64::INFINITY, f64::min);
            let hi = rr.returns.iter().map(|e| e.normalized).fold(f64::NEG_INFINITY, f64::max);
            prop_assert!((lo == 0.0 && hi == 1.0) || (lo == 0.5 && hi == 0.5));
        }
    }
}
