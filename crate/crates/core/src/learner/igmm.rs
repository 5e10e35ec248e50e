use serde::{Deserialize, Serialize};

use super::{guarded_spaces, FactorizedQ};
use crate::error::Result;
use crate::games::AugmentedState;
use crate::oracle::{max_min, min_max};

/// A joint action profile with its Q_tot value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Profile {
    pub pro: Vec<usize>,
    pub ant: Vec<usize>,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "lowercase")]
pub enum IgmmVerdict {
    Consistent { profile: Profile },
    Counterexample {
        min_max: Profile,
        max_min: Profile,
        individual: Profile,
    },
}

impl IgmmVerdict {
    pub fn is_consistent(&self) -> bool {
        matches!(self, IgmmVerdict::Consistent { .. })
    }

    /// Whether argmin_b max_a Q_tot equals the individual argmax profile,
    /// regardless of the max-min ordering.
    pub fn min_max_matches_individual(&self) -> bool {
        match self {
            IgmmVerdict::Consistent { .. } => true,
            IgmmVerdict::Counterexample { min_max, individual, .. } => {
                min_max.pro == individual.pro && min_max.ant == individual.ant
            }
        }
    }
}

/// Value tolerance between the min-max and max-min orderings.
pub const IGMM_VALUE_TOL: f64 = 1e-9;

/// Enumerates Q_tot at `state` and compares argmin_b max_a, argmax_a min_b and
/// the per-agent argmax profile. Consistent iff all three profiles agree and
/// the two ordering values are within 1e-9.
pub fn igmm_check<Q: FactorizedQ + ?Sized>(fq: &Q, state: &AugmentedState) -> Result<IgmmVerdict> {
    let (ps, as_) = guarded_spaces(fq.pro_action_counts(), fq.ant_action_counts())?;
    let table = fq.joint_table(state)?;
    let (na, nb) = (ps.size(), as_.size());
    let profile = |pro: usize, ant: usize| Profile {
        pro: ps.decode(pro),
        ant: as_.decode(ant),
        value: table[pro * nb + ant],
    };
    let mm = min_max(&table, na, nb);
    let xm = max_min(&table, na, nb);
    let greedy = fq.greedy(state)?;
    let gi = ps.encode(&greedy.pro)?;
    let gj = as_.encode(&greedy.ant)?;
    let consistent = mm.pro == xm.pro
        && mm.ant == xm.ant
        && mm.pro == gi
        && mm.ant == gj
        && (mm.value - xm.value).abs() <= IGMM_VALUE_TOL;
    Ok(if consistent {
        IgmmVerdict::Consistent {
            profile: profile(gi, gj),
        }
    } else {
        IgmmVerdict::Counterexample {
            min_max: Profile {
                value: mm.value,
                ..profile(mm.pro, mm.ant)
            },
            max_min: Profile {
                value: xm.value,
                ..profile(xm.pro, xm.ant)
            },
            individual: profile(gi, gj),
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::games::{fresh_state, matrix_team_game, random_tabular_game, PayoffTensor, RandomGameSpec, TwoTeamGame};
    use crate::learner::{exact_operator_apply, full_coverage_dataset, Fm3qTopology, MixerSpec, NeuralFactorizedQ, TabularFactorizedQ};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn monotone_models_are_consistent() {
        for seed in 0..10 {
            let game = random_tabular_game(&RandomGameSpec::new(seed, 4, 2, 2, 3, 0.9)).unwrap();
            let topo = Fm3qTopology::for_game(&game, 1, &[8], MixerSpec::hyper(6));
            let model = NeuralFactorizedQ::new(topo, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
            for s in 0..4 {
                let v = igmm_check(&model, &fresh_state(&game, s, 0, 1)).unwrap();
                assert!(v.is_consistent(), "seed {seed} state {s}: {v:?}");
            }
        }
    }

    #[test]
    fn closed_form_on_saddle_data_is_consistent() {
        // Row 0 dominates, column 1 dominates: pure saddle at (0, 1).
        let game = matrix_team_game(&PayoffTensor::from_matrix(&[vec![2.0, 1.0], vec![1.0, 0.0]]), 1, 1).unwrap();
        let fq = exact_operator_apply(&TabularFactorizedQ::for_game(&game), &full_coverage_dataset(&game), 0.0).unwrap();
        let v = igmm_check(&fq, &fresh_state(&game, 0, 0, 1)).unwrap();
        assert_eq!(
            v,
            IgmmVerdict::Consistent {
                profile: Profile {
                    pro: vec![0],
                    ant: vec![1],
                    value: 1.0
                }
            }
        );
    }

    #[test]
    fn closed_form_without_saddle_keeps_min_max_profile() {
        let game = matrix_team_game(&PayoffTensor::from_matrix(&[vec![1.0, -1.0], vec![-1.0, 1.0]]), 1, 1).unwrap();
        let fq = exact_operator_apply(&TabularFactorizedQ::for_game(&game), &full_coverage_dataset(&game), 0.0).unwrap();
        let v = igmm_check(&fq, &fresh_state(&game, 0, 0, 1)).unwrap();
        assert!(!v.is_consistent());
        assert!(v.min_max_matches_individual());
    }

    #[test]
    fn non_monotone_mixer_yields_a_counterexample() {
        let mut found = false;
        'outer: for seed in 0..50 {
            let game = random_tabular_game(&RandomGameSpec::new(seed, 4, 2, 2, 2, 0.9)).unwrap();
            let spec = MixerSpec {
                monotone: false,
                ..MixerSpec::hyper(8)
            };
            let topo = Fm3qTopology::for_game(&game, 1, &[8], spec);
            let model = NeuralFactorizedQ::new(topo, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
            for s in 0..game.n_states() {
                if !igmm_check(&model, &fresh_state(&game, s, 0, 1)).unwrap().is_consistent() {
                    found = true;
                    break 'outer;
                }
            }
        }
        assert!(found);
    }
}
