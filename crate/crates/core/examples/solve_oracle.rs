//! Solve a random two-team game exactly and inspect the equilibrium.
//!
//!     cargo run --release --example solve_oracle

use fm3q::games::{random_tabular_game, RandomGameSpec, TwoTeamGame};
use fm3q::oracle::{max_min, min_max, nashconv_breakdown, solve_superb_q};

fn main() -> fm3q::Result<()> {
    let game = random_tabular_game(&RandomGameSpec::new(1275, 4, 2, 2, 2, 0.5).deterministic())?;
    let sol = solve_superb_q(&game, 1e-10, None)?;
    println!("{}", sol.summary());

    let (na, nb) = game.joint_sizes();
    for s in 0..game.n_states() {
        let q = sol.q_matrix(s);
        let lo = min_max(q, na, nb);
        let hi = max_min(q, na, nb);
        println!(
            "state {s}: min-max {:+.4} at ({}, {})  max-min {:+.4} at ({}, {})",
            lo.value, lo.pro, lo.ant, hi.value, hi.pro, hi.ant
        );
    }
    println!("pure saddles everywhere: {}", sol.has_pure_saddles(1e-9));

    let nc = nashconv_breakdown(&game, &sol.pro_policy, &sol.ant_policy, 1e-10)?;
    println!("oracle pair: value {:+.6}, nashconv {:.2e}", nc.policy_value, nc.nashconv);
    Ok(())
}
