//! Exact solvers for tabular games: the superb Q fixed point of the minimax
//! Bellman operator, best responses to fixed deterministic policies, exact
//! policy evaluation and NashConv.
//!
//! Values are always in Pro's reward units. Joint actions are indexed with
//! [`crate::games::JointSpace`]; ties break toward the lowest joint index.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::games::{TabularGame, Team, Tensor, TwoTeamGame};

pub const DEFAULT_TOL: f64 = 1e-8;

/// Outcome of a min-max or max-min over a payoff matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MatrixSolution {
    pub value: f64,
    pub pro: usize,
    pub ant: usize,
}

/// min_b max_a q[a][b] for a row-major `na × nb` matrix. The returned Pro
/// action is the best response to the minimizing column.
pub fn min_max(q: &[f64], na: usize, nb: usize) -> MatrixSolution {
    debug_assert_eq!(q.len(), na * nb);
    let mut best = MatrixSolution {
        value: f64::INFINITY,
        pro: 0,
        ant: 0,
    };
    for b in 0..nb {
        let (mut arg, mut top) = (0, f64::NEG_INFINITY);
        for a in 0..na {
            let v = q[a * nb + b];
            if v > top {
                top = v;
                arg = a;
            }
        }
        if top < best.value {
            best = MatrixSolution {
                value: top,
                pro: arg,
                ant: b,
            };
        }
    }
    best
}

/// max_a min_b q[a][b]. The returned Ant action is the best response to the
/// maximizing row.
pub fn max_min(q: &[f64], na: usize, nb: usize) -> MatrixSolution {
    debug_assert_eq!(q.len(), na * nb);
    let mut best = MatrixSolution {
        value: f64::NEG_INFINITY,
        pro: 0,
        ant: 0,
    };
    for a in 0..na {
        let row = &q[a * nb..(a + 1) * nb];
        let (mut arg, mut low) = (0, f64::INFINITY);
        for (b, &v) in row.iter().enumerate() {
            if v < low {
                low = v;
                arg = b;
            }
        }
        if low > best.value {
            best = MatrixSolution {
                value: low,
                pro: a,
                ant: arg,
            };
        }
    }
    best
}

/// ⌈log(tol·(1−γ)/R_max) / log γ⌉ + 10.
pub fn default_max_iters(gamma: f64, tol: f64, reward_bound: f64) -> usize {
    if gamma <= 0.0 {
        return 11;
    }
    let ratio = (tol * (1.0 - gamma) / reward_bound.max(tol)).min(1.0);
    (ratio.ln() / gamma.ln()).ceil().max(0.0) as usize + 10
}

/// Fixed point of the minimax Bellman operator with greedy policies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleSolution {
    pub version: u32,
    pub kind: String,
    /// Q*_tot(s, a, b), dims [S, A, B].
    pub q_star: Tensor,
    /// V*(s) = min_b max_a Q*_tot(s, ·, ·), dims [S].
    pub v_star: Tensor,
    /// max_a min_b Q*_tot(s, ·, ·), recorded for diagnostics.
    pub v_maxmin: Tensor,
    /// argmax_a min_b Q*_tot per state (joint index).
    pub pro_policy: Vec<usize>,
    /// argmin_b max_a Q*_tot per state (joint index).
    pub ant_policy: Vec<usize>,
    pub iterations: usize,
    pub residual: f64,
    /// Sup-norm change after each iteration.
    pub residuals: Vec<f64>,
}

impl OracleSolution {
    pub fn n_states(&self) -> usize {
        self.q_star.dims[0]
    }

    /// Q*(s, ·, ·) as a row-major matrix.
    pub fn q_matrix(&self, state: usize) -> &[f64] {
        let block = self.q_star.dims[1] * self.q_star.dims[2];
        &self.q_star.data[state * block..(state + 1) * block]
    }

    pub fn v(&self, state: usize) -> f64 {
        self.v_star.data[state]
    }

    /// True when min-max and max-min agree within `tol` at every state.
    pub fn has_pure_saddles(&self, tol: f64) -> bool {
        self.v_star
            .data
            .iter()
            .zip(&self.v_maxmin.data)
            .all(|(a, b)| (a - b).abs() <= tol)
    }

    /// One-line summary: iterations, residual and V* per state.
    pub fn summary(&self) -> String {
        let values: Vec<String> = self.v_star.data.iter().map(|v| format!("{v:.9}")).collect();
        format!(
            "iterations={} residual={:e} v_star=[{}]",
            self.iterations,
            self.residual,
            values.join(", ")
        )
    }
}

/// Applies Q ← R + γ·P·min_b max_a Q once, writing into `out`.
fn bellman_backup(game: &TabularGame, q: &[f64], out: &mut [f64]) {
    let (na, nb) = game.joint_sizes();
    let s_count = game.n_states();
    let block = na * nb;
    let values: Vec<f64> = (0..s_count)
        .map(|s| min_max(&q[s * block..(s + 1) * block], na, nb).value)
        .collect();
    let gamma = game.gamma();
    for s in 0..s_count {
        for a in 0..na {
            for b in 0..nb {
                let expected: f64 = game
                    .transition_row(s, a, b)
                    .iter()
                    .zip(&values)
                    .map(|(p, v)| p * v)
                    .sum();
                out[s * block + a * nb + b] = game.reward_at(s, a, b) + gamma * expected;
            }
        }
    }
}

/// One application of the minimax Bellman operator to a [S][A][B] table.
pub fn minimax_bellman(game: &TabularGame, q: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; q.len()];
    bellman_backup(game, q, &mut out);
    out
}

pub(crate) fn sup_distance(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).fold(0.0, |m, (a, b)| m.max((a - b).abs()))
}

/// Iterates the minimax Bellman operator from Q ≡ 0 until the sup-norm change
/// drops below `tol`.
///
/// With γ = 0 the operator is constant, so the first iterate Q = R is the
/// fixed point and is returned after one iteration with residual 0.
pub fn solve_superb_q(game: &TabularGame, tol: f64, max_iters: Option<usize>) -> Result<OracleSolution> {
    if tol <= 0.0 || !tol.is_finite() {
        return Err(Error::Config(format!("tolerance {tol} must be positive")));
    }
    let gamma = game.gamma();
    let max_iters = max_iters.unwrap_or_else(|| default_max_iters(gamma, tol, game.reward_bound()));
    let (na, nb) = game.joint_sizes();
    let s_count = game.n_states();
    let mut q = vec![0.0; s_count * na * nb];
    let mut next = q.clone();
    let mut residuals = Vec::new();
    let mut iterations = 0;
    let residual = loop {
        if iterations >= max_iters {
            return Err(Error::NoConvergence {
                iterations,
                residual: residuals.last().copied().unwrap_or(f64::INFINITY),
            });
        }
        bellman_backup(game, &q, &mut next);
        iterations += 1;
        let change = sup_distance(&q, &next);
        std::mem::swap(&mut q, &mut next);
        if gamma == 0.0 {
            residuals.push(0.0);
            break 0.0;
        }
        residuals.push(change);
        if change < tol {
            break change;
        }
    };
    Ok(solution_from_q(game, q, iterations, residual, residuals))
}

fn solution_from_q(
    game: &TabularGame,
    q: Vec<f64>,
    iterations: usize,
    residual: f64,
    residuals: Vec<f64>,
) -> OracleSolution {
    let (na, nb) = game.joint_sizes();
    let s_count = game.n_states();
    let block = na * nb;
    let mut v_star = Vec::with_capacity(s_count);
    let mut v_maxmin = Vec::with_capacity(s_count);
    let mut pro_policy = Vec::with_capacity(s_count);
    let mut ant_policy = Vec::with_capacity(s_count);
    for s in 0..s_count {
        let m = &q[s * block..(s + 1) * block];
        let mm = min_max(m, na, nb);
        let xm = max_min(m, na, nb);
        v_star.push(mm.value);
        v_maxmin.push(xm.value);
        ant_policy.push(mm.ant);
        pro_policy.push(xm.pro);
    }
    OracleSolution {
        version: 1,
        kind: "oracle_solution".into(),
        q_star: Tensor {
            dims: vec![s_count, na, nb],
            data: q,
        },
        v_star: Tensor {
            dims: vec![s_count],
            data: v_star,
        },
        v_maxmin: Tensor {
            dims: vec![s_count],
            data: v_maxmin,
        },
        pro_policy,
        ant_policy,
        iterations,
        residual,
        residuals,
    }
}

fn check_policy(game: &TabularGame, policy: &[usize], team: Team) -> Result<()> {
    let (na, nb) = game.joint_sizes();
    let limit = match team {
        Team::Pro => na,
        Team::Ant => nb,
    };
    if policy.len() != game.n_states() {
        return Err(Error::PolicyNotTotal(format!(
            "{team:?} policy covers {} of {} states",
            policy.len(),
            game.n_states()
        )));
    }
    if let Some(s) = policy.iter().position(|&a| a >= limit) {
        return Err(Error::PolicyNotTotal(format!(
            "{team:?} policy picks joint action {} at state {s}, only {limit} exist",
            policy[s]
        )));
    }
    Ok(())
}

/// Value iteration on a finite MDP until the a-posteriori error bound
/// γ/(1−γ)·‖V_{k+1} − V_k‖∞ is below `tol`. `backup(s, v)` returns the
/// optimal one-step value and the action achieving it.
fn value_iteration<F>(game: &TabularGame, tol: f64, mut backup: F) -> Result<(Vec<f64>, Vec<usize>, usize)>
where
    F: FnMut(usize, &[f64]) -> (f64, usize),
{
    let gamma = game.gamma();
    let s_count = game.n_states();
    let bound_factor = if gamma > 0.0 { gamma / (1.0 - gamma) } else { 0.0 };
    let max_iters = default_max_iters(gamma, tol * (1.0 - gamma), game.reward_bound()) * 2;
    let mut v = vec![0.0; s_count];
    let mut next = vec![0.0; s_count];
    let mut policy = vec![0; s_count];
    for iteration in 1..=max_iters {
        for s in 0..s_count {
            let (value, action) = backup(s, &v);
            next[s] = value;
            policy[s] = action;
        }
        let change = sup_distance(&v, &next);
        std::mem::swap(&mut v, &mut next);
        if bound_factor * change < tol {
            return Ok((v, policy, iteration));
        }
        if iteration == max_iters {
            return Err(Error::NoConvergence {
                iterations: iteration,
                residual: change,
            });
        }
    }
    unreachable!("max_iters is at least 1")
}

fn expected_value(game: &TabularGame, s: usize, a: usize, b: usize, v: &[f64]) -> f64 {
    game.transition_row(s, a, b)
        .iter()
        .zip(v)
        .map(|(p, x)| p * x)
        .sum()
}

/// Exact value of a deterministic policy pair, V(π, μ), per state.
pub fn evaluate_policies(game: &TabularGame, pro: &[usize], ant: &[usize], tol: f64) -> Result<Vec<f64>> {
    check_policy(game, pro, Team::Pro)?;
    check_policy(game, ant, Team::Ant)?;
    let gamma = game.gamma();
    let (v, _, _) = value_iteration(game, tol, |s, v| {
        let (a, b) = (pro[s], ant[s]);
        (game.reward_at(s, a, b) + gamma * expected_value(game, s, a, b, v), a)
    })?;
    Ok(v)
}

/// Best response of `team` against a fixed deterministic opponent policy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BestResponse {
    pub team: Team,
    pub opponent_policy: Vec<usize>,
    /// Optimal value of the induced single-team MDP, in Pro reward units.
    pub values: Vec<f64>,
    /// Greedy joint-team policy.
    pub policy: Vec<usize>,
    pub iterations: usize,
}

/// Collapses the opponent into the dynamics and solves the responding team's
/// joint-action MDP. Pro maximizes, Ant minimizes Pro's return.
pub fn best_response(game: &TabularGame, opponent: &[usize], team: Team, tol: f64) -> Result<BestResponse> {
    check_policy(game, opponent, team.opponent())?;
    let (na, nb) = game.joint_sizes();
    let gamma = game.gamma();
    let (values, policy, iterations) = match team {
        Team::Pro => value_iteration(game, tol, |s, v| {
            let b = opponent[s];
            let (mut best, mut arg) = (f64::NEG_INFINITY, 0);
            for a in 0..na {
                let q = game.reward_at(s, a, b) + gamma * expected_value(game, s, a, b, v);
                if q > best {
                    best = q;
                    arg = a;
                }
            }
            (best, arg)
        })?,
        Team::Ant => value_iteration(game, tol, |s, v| {
            let a = opponent[s];
            let (mut best, mut arg) = (f64::INFINITY, 0);
            for b in 0..nb {
                let q = game.reward_at(s, a, b) + gamma * expected_value(game, s, a, b, v);
                if q < best {
                    best = q;
                    arg = b;
                }
            }
            (best, arg)
        })?,
    };
    Ok(BestResponse {
        team,
        opponent_policy: opponent.to_vec(),
        values,
        policy,
        iterations,
    })
}

/// Components of NashConv, each averaged over the initial-state distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NashConvBreakdown {
    pub nashconv: f64,
    /// V(π, μ).
    pub policy_value: f64,
    /// Pro's best-response value against μ.
    pub pro_best_response: f64,
    /// Value when Ant best-responds (minimizes) against π.
    pub ant_best_response: f64,
}

pub fn nashconv_breakdown(game: &TabularGame, pro: &[usize], ant: &[usize], tol: f64) -> Result<NashConvBreakdown> {
    let value = evaluate_policies(game, pro, ant, tol)?;
    let br_pro = best_response(game, ant, Team::Pro, tol)?;
    let br_ant = best_response(game, pro, Team::Ant, tol)?;
    let avg = |v: &[f64]| -> f64 { game.initial().iter().zip(v).map(|(p, x)| p * x).sum() };
    let policy_value = avg(&value);
    let pro_best_response = avg(&br_pro.values);
    let ant_best_response = avg(&br_ant.values);
    Ok(NashConvBreakdown {
        nashconv: (pro_best_response - policy_value) + (policy_value - ant_best_response),
        policy_value,
        pro_best_response,
        ant_best_response,
    })
}

/// [BR_pro − V(π,μ)] + [V(π,μ) − BR_ant] over the initial distribution.
pub fn nashconv(game: &TabularGame, pro: &[usize], ant: &[usize], tol: f64) -> Result<f64> {
    Ok(nashconv_breakdown(game, pro, ant, tol)?.nashconv)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::games::{matrix_team_game, random_tabular_game, PayoffTensor, RandomGameSpec};

    fn matrix(rows: &[Vec<f64>]) -> TabularGame {
        matrix_team_game(&PayoffTensor::from_matrix(rows), 1, 1).unwrap()
    }

    #[test]
    fn matching_pennies_has_no_pure_saddle() {
        let q = [1.0, -1.0, -1.0, 1.0];
        assert_eq!(min_max(&q, 2, 2).value, 1.0);
        assert_eq!(max_min(&q, 2, 2).value, -1.0);
        let sol = solve_superb_q(&matrix(&[vec![1.0, -1.0], vec![-1.0, 1.0]]), DEFAULT_TOL, None).unwrap();
        assert!(!sol.has_pure_saddles(1e-12));
    }

    #[test]
    fn pure_saddle_matrix() {
        let q = [2.0, 1.0, 1.0, 0.0];
        let mm = min_max(&q, 2, 2);
        let xm = max_min(&q, 2, 2);
        assert_eq!((mm.value, mm.pro, mm.ant), (1.0, 0, 1));
        assert_eq!((xm.value, xm.pro, xm.ant), (1.0, 0, 1));
    }

    #[test]
    fn constant_matrix_value() {
        let q = [0.7; 6];
        assert_eq!(min_max(&q, 2, 3).value, 0.7);
        assert_eq!(max_min(&q, 3, 2).value, 0.7);
        let mm = min_max(&q, 2, 3);
        assert_eq!((mm.pro, mm.ant), (0, 0));
    }

    #[test]
    fn zero_discount_returns_reward_in_one_iteration() {
        let g = random_tabular_game(&RandomGameSpec::new(5, 3, 2, 1, 2, 0.0)).unwrap();
        let sol = solve_superb_q(&g, DEFAULT_TOL, None).unwrap();
        assert_eq!(sol.iterations, 1);
        assert_eq!(sol.q_star.data, g.rewards());
        assert_eq!(sol.residual, 0.0);
    }

    #[test]
    fn constant_reward_gives_geometric_value() {
        let g = random_tabular_game(&RandomGameSpec::new(9, 3, 1, 2, 2, 0.8)).unwrap();
        let c = 0.4;
        let g = g.with_rewards(vec![c; g.rewards().len()]).unwrap();
        let sol = solve_superb_q(&g, 1e-10, None).unwrap();
        for s in 0..3 {
            assert!((sol.v(s) - c / (1.0 - 0.8)).abs() < 1e-8);
        }
    }

    #[test]
    fn residuals_contract_geometrically() {
        let g = random_tabular_game(&RandomGameSpec::new(7, 4, 2, 2, 2, 0.9)).unwrap();
        let sol = solve_superb_q(&g, 1e-10, None).unwrap();
        let q_star = &sol.q_star.data;
        // ‖Q_0 − Q*‖ with Q_0 = 0.
        let initial_gap = q_star.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        for (k, pair) in sol.residuals.windows(2).enumerate() {
            assert!(pair[1] <= pair[0] + 1e-12, "residual increased at {k}");
        }
        for (k, r) in sol.residuals.iter().enumerate() {
            // residual_k = ‖Q_{k+1} − Q_k‖ ≤ ‖Q_{k+1} − Q*‖ + ‖Q_k − Q*‖ ≤ (γ^{k+1} + γ^k)·gap
            let bound = (0.9f64.powi(k as i32 + 1) + 0.9f64.powi(k as i32)) * initial_gap;
            assert!(*r <= bound + 1e-12, "iteration {k}: {r} > {bound}");
        }
        assert!(sol.residual < 1e-10);
        // Distance to the fixed point after K iterations ≤ γ^K·‖Q_0 − Q*‖.
        let mut q = vec![0.0; q_star.len()];
        for k in 1..=60 {
            q = minimax_bellman(&g, &q);
            let dist = sup_distance(&q, q_star);
            assert!(dist <= 0.9f64.powi(k) * initial_gap + 1e-9, "K={k}: {dist}");
        }
    }

    #[test]
    fn non_convergence_is_reported() {
        let g = random_tabular_game(&RandomGameSpec::new(7, 4, 2, 2, 2, 0.99)).unwrap();
        let err = solve_superb_q(&g, 1e-10, Some(5)).unwrap_err();
        assert!(matches!(err, Error::NoConvergence { iterations: 5, .. }));
    }

    #[test]
    fn default_iteration_cap_suffices() {
        let g = random_tabular_game(&RandomGameSpec::new(1, 3, 1, 1, 3, 0.99)).unwrap();
        let sol = solve_superb_q(&g, DEFAULT_TOL, None).unwrap();
        assert!(sol.iterations <= default_max_iters(0.99, DEFAULT_TOL, 1.0));
    }

    #[test]
    fn best_response_to_fixed_column_is_column_max() {
        let g = matrix(&[vec![0.5, -1.0, 2.0], vec![1.5, 0.0, -3.0]]);
        for (j, expected) in [(0, 1.5), (1, 0.0), (2, 2.0)] {
            let br = best_response(&g, &[j], Team::Pro, DEFAULT_TOL).unwrap();
            assert_eq!(br.values[0], expected);
        }
        let br = best_response(&g, &[0], Team::Ant, DEFAULT_TOL).unwrap();
        assert_eq!((br.values[0], br.policy[0]), (-1.0, 1));
    }

    #[test]
    fn best_response_rejects_partial_policy() {
        let g = random_tabular_game(&RandomGameSpec::new(2, 3, 1, 1, 2, 0.5)).unwrap();
        assert!(matches!(
            best_response(&g, &[0, 1], Team::Pro, DEFAULT_TOL),
            Err(Error::PolicyNotTotal(_))
        ));
        assert!(matches!(
            best_response(&g, &[0, 1, 7], Team::Pro, DEFAULT_TOL),
            Err(Error::PolicyNotTotal(_))
        ));
    }

    #[test]
    fn dominated_row_costs_at_least_the_gap() {
        // Row 1 is dominated by row 0 by exactly 0.75 in every column.
        let g = matrix(&[vec![1.0, 0.5], vec![0.25, -0.25]]);
        let nc = nashconv(&g, &[1], &[1], DEFAULT_TOL).unwrap();
        assert!(nc >= 0.75 - 1e-12, "{nc}");
    }

    #[test]
    fn constant_payoffs_have_zero_nashconv() {
        let g = matrix(&[vec![0.3, 0.3], vec![0.3, 0.3]]);
        for a in 0..2 {
            for b in 0..2 {
                assert_eq!(nashconv(&g, &[a], &[b], DEFAULT_TOL).unwrap(), 0.0);
            }
        }
    }
}
