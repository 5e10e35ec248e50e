//! Check that per-agent greedy actions form the joint min-max profile of a
//! randomly initialized network, and that dropping the monotone transform
//! breaks it.

use fm3q::games::{fresh_state, random_tabular_game, RandomGameSpec};
use fm3q::learner::{igmm_check, Fm3qTopology, MixerSpec, NeuralFactorizedQ};
use fm3q::seeded_rng;

fn main() -> fm3q::Result<()> {
    let game = random_tabular_game(&RandomGameSpec::new(3, 30, 2, 2, 3, 0.9))?;
    for monotone in [true, false] {
        let mixer = MixerSpec {
            monotone,
            ..MixerSpec::hyper(8)
        };
        let (mut ok, mut total) = (0, 0);
        for seed in 0..20 {
            let model = NeuralFactorizedQ::new(Fm3qTopology::for_game(&game, 1, &[16], mixer), &mut seeded_rng(seed, 0))?;
            for s in 0..30 {
                total += 1;
                if igmm_check(&model, &fresh_state(&game, s, 0, 1))?.is_consistent() {
                    ok += 1;
                }
            }
        }
        println!("monotone={monotone}: {ok}/{total} states consistent");
    }
    Ok(())
}
