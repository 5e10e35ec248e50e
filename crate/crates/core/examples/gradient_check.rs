//! Compare hand-written backpropagation with central differences, first on a
//! plain dense net and then through the whole factorized Q_tot.

use fm3q::games::{fresh_state, random_tabular_game, JointAction, RandomGameSpec};
use fm3q::learner::{Fm3qTopology, MixerSpec, NeuralFactorizedQ};
use fm3q::numerics::{check_gradient, finite_diff_check, Activation, DenseNet};
use fm3q::seeded_rng;

fn main() -> fm3q::Result<()> {
    let net = DenseNet::new(&[5, 16, 16, 3], Activation::Elu, Activation::Identity)?;
    let mut params = vec![0.0; net.param_count()];
    net.init(&mut seeded_rng(0, 0), &mut params);
    let report = finite_diff_check(&net, &params, &[0.3, -1.2, 0.8, 0.0, 2.0], 1e-5)?;
    println!("dense net: {report:?}");

    let game = random_tabular_game(&RandomGameSpec::new(1, 4, 2, 2, 3, 0.9))?;
    let model = NeuralFactorizedQ::new(Fm3qTopology::for_game(&game, 1, &[12], MixerSpec::hyper(6)), &mut seeded_rng(1, 0))?;
    let net = model.net();
    let state = fresh_state(&game, 2, 0, 1);
    let action = JointAction::new(vec![0, 2], vec![1, 1]);
    let p = model.params().values();
    let (_, mut tape) = net.mix_forward(p, &state, &action)?;
    let mut grad = vec![0.0; p.len()];
    net.backward(p, &mut tape, 1.0, &mut grad)?;
    let report = check_gradient(|x| net.q_tot(x, &state, &action).unwrap(), p, &grad, 1e-5);
    println!("q_tot over {} parameters: {report:?}", p.len());
    Ok(())
}
