use super::dense::DenseNet;
use crate::error::{Error, Result};

/// Result of comparing analytic gradients with central differences.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradCheckReport {
    pub max_relative_error: f64,
    pub checked: usize,
    /// Coordinates where both gradients were below 1e-8.
    pub skipped: usize,
    /// Set when a kinked activation had a pre-activation within `eps` of 0.
    pub near_kink: bool,
}

const BOTH_SMALL: f64 = 1e-8;

/// Compares `analytic` against (f(p + eps·e_k) − f(p − eps·e_k)) / (2·eps) for
/// every coordinate k. Relative error is |a − n| / max(|a|, |n|).
pub fn check_gradient<F>(mut f: F, point: &[f64], analytic: &[f64], eps: f64) -> GradCheckReport
where
    F: FnMut(&[f64]) -> f64,
{
    assert_eq!(point.len(), analytic.len(), "gradient length must match point");
    let mut probe = point.to_vec();
    let mut report = GradCheckReport {
        max_relative_error: 0.0,
        checked: 0,
        skipped: 0,
        near_kink: false,
    };
    for k in 0..point.len() {
        probe[k] = point[k] + eps;
        let up = f(&probe);
        probe[k] = point[k] - eps;
        let down = f(&probe);
        probe[k] = point[k];
        let numeric = (up - down) / (2.0 * eps);
        let a = analytic[k];
        if a.abs() < BOTH_SMALL && numeric.abs() < BOTH_SMALL {
            report.skipped += 1;
            continue;
        }
        let err = (a - numeric).abs() / a.abs().max(numeric.abs());
        report.max_relative_error = report.max_relative_error.max(err);
        report.checked += 1;
    }
    report
}

/// Gradient check of a dense net for the scalar objective sum(outputs), over
/// all parameters followed by all inputs.
pub fn finite_diff_check(
    net: &DenseNet,
    params: &[f64],
    input: &[f64],
    eps: f64,
) -> Result<GradCheckReport> {
    if !(1e-7..=1e-3).contains(&eps) {
        return Err(Error::Config(format!("finite-difference eps {eps} outside [1e-7, 1e-3]")));
    }
    let (_, mut tape) = net.forward(params, input)?;
    let near_kink = net.kink_distance(&tape) < eps;
    let ones = vec![1.0; net.output_dim()];
    let mut grad = vec![0.0; net.param_count()];
    let dx = net.backward(params, &mut tape, &ones, &mut grad)?;
    grad.extend(dx);

    let n = params.len();
    let mut point = params.to_vec();
    point.extend_from_slice(input);
    let objective = |p: &[f64]| -> f64 {
        net.predict(&p[..n], &p[n..])
            .map(|out| out.iter().sum())
            .unwrap_or(f64::NAN)
    };
    let mut report = check_gradient(objective, &point, &grad, eps);
    report.near_kink = near_kink;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::Activation;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_net(sizes: &[usize], hidden: Activation, seed: u64) -> (DenseNet, Vec<f64>, Vec<f64>) {
        let net = DenseNet::new(sizes, hidden, Activation::Identity).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut params = vec![0.0; net.param_count()];
        net.init(&mut rng, &mut params);
        let input = (0..sizes[0]).map(|_| rng.gen_range(-1.0..1.0)).collect();
        (net, params, input)
    }

    #[test]
    fn linear_net_is_exact() {
        let (net, params, input) = random_net(&[4, 3], Activation::Identity, 0);
        let report = finite_diff_check(&net, &params, &input, 1e-4).unwrap();
        assert!(report.max_relative_error <= 1e-9, "{report:?}");
    }

    #[test]
    fn two_layer_nets_match_finite_differences() {
        for (seed, act) in [(1, Activation::Relu), (2, Activation::Elu), (3, Activation::Abs), (4, Activation::Elu)] {
            let (net, params, input) = random_net(&[5, 7, 3], act, seed);
            let report = finite_diff_check(&net, &params, &input, 1e-6).unwrap();
            assert!(!report.near_kink);
            assert!(report.max_relative_error <= 1e-5, "{act:?}: {report:?}");
        }
    }

    #[test]
    fn abs_at_zero_is_flagged_or_skipped() {
        let net = DenseNet::new(&[1, 1], Activation::Identity, Activation::Abs).unwrap();
        let report = finite_diff_check(&net, &[1.0, 0.0], &[0.0], 1e-6).unwrap();
        assert!(report.near_kink);
        // d/dw and d/db of |w·x + b| at 0: analytic 0 vs numeric 0 (w) or 0 (b, symmetric).
        assert_eq!(report.checked + report.skipped, 3);
    }

    #[test]
    fn eps_range_is_enforced() {
        let (net, params, input) = random_net(&[2, 1], Activation::Identity, 0);
        assert!(finite_diff_check(&net, &params, &input, 1e-2).is_err());
        assert!(finite_diff_check(&net, &params, &input, 1e-8).is_err());
    }
}
