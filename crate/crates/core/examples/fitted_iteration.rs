//! Apply the closed-form empirical minimax Bellman operator to a
//! full-coverage dataset until it reaches the exact solution.

use fm3q::games::{random_tabular_game, RandomGameSpec};
use fm3q::learner::{exact_operator_apply, full_coverage_dataset, TabularFactorizedQ};
use fm3q::oracle::solve_superb_q;

fn sup(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
}

fn main() -> fm3q::Result<()> {
    let gamma = 0.9;
    let game = random_tabular_game(&RandomGameSpec::new(7, 5, 2, 2, 2, gamma).deterministic())?;
    let oracle = solve_superb_q(&game, 1e-12, None)?;
    let data = full_coverage_dataset(&game);

    let mut q = TabularFactorizedQ::for_game(&game);
    let mut k = 0;
    loop {
        let next = exact_operator_apply(&q, &data, gamma)?;
        let residual = sup(next.q_tot_table(), q.q_tot_table());
        q = next;
        k += 1;
        let dist = sup(q.q_tot_table(), &oracle.q_star.data);
        if k % 20 == 0 || dist < 1e-8 {
            println!("iter {k:4}  residual {residual:.3e}  distance to Q* {dist:.3e}");
        }
        if dist < 1e-8 {
            break;
        }
    }
    Ok(())
}
