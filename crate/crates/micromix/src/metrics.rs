//! Error metrics and diagnostics for comparing simulations with the
//! analytical approximations.

use crate::error::Error;
use crate::network::InteractionNetwork;
use crate::Result;

/// Discrete L2-in-time error between simulated basin fractions and
/// approximated basin probabilities:
///
/// `(T*/K) * sum over the K grid points of
///     sqrt( sum over hosts and basins of (fraction - probability)^2 )`.
///
/// Both inputs are indexed `[time][host][basin]`.
pub fn lfa_error(
    sim_fractions: &[Vec<Vec<f64>>],
    approx_probabilities: &[Vec<Vec<f64>>],
    t_star_horizon: f64,
) -> Result<f64> {
    if sim_fractions.len() != approx_probabilities.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} vs {} time points",
            sim_fractions.len(),
            approx_probabilities.len()
        )));
    }
    let k = sim_fractions.len();
    if k == 0 {
        return Err(Error::EmptyInput);
    }
    let mut total = 0.0;
    for (snapshot, approx) in sim_fractions.iter().zip(approx_probabilities) {
        if snapshot.len() != approx.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} vs {} hosts",
                snapshot.len(),
                approx.len()
            )));
        }
        let mut squared = 0.0;
        for (f_host, p_host) in snapshot.iter().zip(approx) {
            if f_host.len() != p_host.len() {
                return Err(Error::ShapeMismatch(format!(
                    "{} vs {} basins",
                    f_host.len(),
                    p_host.len()
                )));
            }
            for (f, p) in f_host.iter().zip(p_host) {
                squared += (f - p) * (f - p);
            }
        }
        total += squared.sqrt();
    }
    Ok(total * t_star_horizon / k as f64)
}

/// Mean-over-runs discrete error between simulated abundances and an
/// approximate trajectory:
///
/// `(1/(K*L)) * sum over runs and grid points of
///     sqrt( sum over hosts and species of (N_sim - N_approx)^2 )`.
///
/// `runs` is indexed `[run][time][host][dim]`; `approx` is
/// `[time][host][dim]`.
pub fn hfa_error(runs: &[Vec<Vec<Vec<f64>>>], approx: &[Vec<Vec<f64>>]) -> Result<f64> {
    let l = runs.len();
    if l == 0 {
        return Err(Error::EmptyInput);
    }
    let k = approx.len();
    let mut total = 0.0;
    for run in runs {
        if run.len() != k {
            return Err(Error::ShapeMismatch(format!(
                "{} vs {k} time points",
                run.len()
            )));
        }
        for (snapshot, reference) in run.iter().zip(approx) {
            if snapshot.len() != reference.len() {
                return Err(Error::ShapeMismatch(format!(
                    "{} vs {} hosts",
                    snapshot.len(),
                    reference.len()
                )));
            }
            let mut squared = 0.0;
            for (state, target) in snapshot.iter().zip(reference) {
                if state.len() != target.len() {
                    return Err(Error::ShapeMismatch(format!(
                        "{} vs {} species",
                        state.len(),
                        target.len()
                    )));
                }
                for (x, y) in state.iter().zip(target) {
                    squared += (x - y) * (x - y);
                }
            }
            total += squared.sqrt();
        }
    }
    Ok(total / (k as f64 * l as f64))
}

/// Rate-weighted Dirichlet energy of the host states:
/// `U = (1/2) * sum over ordered pairs (i, j) of
///      (rate_ij / rate_tot) * |N_i - N_j|^2`.
///
/// Each unordered edge contributes twice and the half cancels one copy.
/// Non-increasing at exchange events; the per-event decrement is
/// `-4 g (1-g) (rate_ij / rate_tot) |N_i - N_j|^2`.
pub fn dirichlet_energy(states: &[Vec<f64>], network: &InteractionNetwork) -> Result<f64> {
    if network.total_rate() <= 0.0 {
        return Err(Error::ZeroTotalRate);
    }
    Ok(crate::simulate::dirichlet_energy_of(states, network))
}

/// One-sample Kolmogorov–Smirnov statistic of `samples` against the
/// exponential distribution with the given rate. Sorts `samples`.
pub fn ks_statistic_exponential(samples: &mut [f64], rate: f64) -> f64 {
    samples.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = samples.len() as f64;
    let mut d: f64 = 0.0;
    for (idx, &x) in samples.iter().enumerate() {
        let cdf = 1.0 - (-rate * x).exp();
        let below = idx as f64 / n;
        let above = (idx + 1) as f64 / n;
        d = d.max((cdf - below).abs()).max((above - cdf).abs());
    }
    d
}

/// Asymptotic critical value of the one-sample KS statistic at
/// significance `alpha`: `sqrt(-ln(alpha/2) / 2) / sqrt(n)`.
pub fn ks_critical_value(n: usize, alpha: f64) -> f64 {
    ((-(alpha / 2.0).ln()) / 2.0).sqrt() / (n as f64).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{apply_exchange, ExchangeParams};

    #[test]
    fn lfa_error_reference_values() {
        // identical inputs give zero
        let a = vec![vec![vec![0.25; 4]; 10]; 101];
        assert_eq!(lfa_error(&a, &a, 2.0).unwrap(), 0.0);

        // a uniform offset d over 10 hosts and 4 basins on [0, 2]:
        // T* * d * sqrt(40)
        let offset = 0.1;
        let b: Vec<Vec<Vec<f64>>> = a
            .iter()
            .map(|s| s.iter().map(|h| h.iter().map(|v| v + offset).collect()).collect())
            .collect();
        let err = lfa_error(&a, &b, 2.0).unwrap();
        let expected = 2.0 * offset * 40.0f64.sqrt();
        assert!((err - expected).abs() < 1e-12, "{err} vs {expected}");
        assert!((expected - 1.2649110640673518).abs() < 1e-10);

        // 1001 grid points over [0, 2] reproduce the 2/1001 prefactor
        let a2 = vec![vec![vec![0.0; 4]; 10]; 1001];
        let b2: Vec<Vec<Vec<f64>>> = a2
            .iter()
            .map(|s| s.iter().map(|h| h.iter().map(|v| v + 1.0).collect()).collect())
            .collect();
        let err2 = lfa_error(&a2, &b2, 2.0).unwrap();
        let expected2 = (2.0 / 1001.0) * 1001.0 * 40.0f64.sqrt();
        assert!((err2 - expected2).abs() < 1e-9);
    }

    #[test]
    fn hfa_error_reference_values() {
        // approx equals every run
        let approx = vec![vec![vec![1.0, 2.0]; 3]; 5];
        let runs = vec![approx.clone(); 4];
        assert_eq!(hfa_error(&runs, &approx).unwrap(), 0.0);

        // single run, single time, single host, offset (3, 4) -> 5
        let approx1 = vec![vec![vec![0.0, 0.0]]];
        let run1 = vec![vec![vec![vec![3.0, 4.0]]]];
        assert!((hfa_error(&run1, &approx1).unwrap() - 5.0).abs() < 1e-15);

        // paper-scale normalization: K = 101 times, L = 1000 runs of the
        // same unit offset gives exactly the unit offset back
        let approx2 = vec![vec![vec![0.0]]; 101];
        let runs2 = vec![vec![vec![vec![1.0]]; 101]; 1000];
        assert!((hfa_error(&runs2, &approx2).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn shape_mismatches_are_rejected() {
        let a = vec![vec![vec![0.5; 4]; 2]; 3];
        let b = vec![vec![vec![0.5; 4]; 2]; 4];
        assert!(matches!(lfa_error(&a, &b, 1.0), Err(Error::ShapeMismatch(_))));
        let approx = vec![vec![vec![0.0; 2]; 2]; 3];
        let runs = vec![vec![vec![vec![0.0; 2]; 1]; 3]];
        assert!(matches!(hfa_error(&runs, &approx), Err(Error::ShapeMismatch(_))));
    }

    #[test]
    fn dirichlet_energy_reference_values() {
        let net = InteractionNetwork::build(2, &[(0, 1, 1.0)]).unwrap();
        let equal = vec![vec![5.0, 5.0], vec![5.0, 5.0]];
        assert_eq!(dirichlet_energy(&equal, &net).unwrap(), 0.0);

        // one edge, difference (10, 10): both orderings halved -> 200
        let apart = vec![vec![1.0, 1.0], vec![11.0, 11.0]];
        let u = dirichlet_energy(&apart, &net).unwrap();
        assert!((u - 200.0).abs() < 1e-12);

        // after an exchange at gamma = 0.25 the energy drops by 150
        let params = ExchangeParams::new(0.25).unwrap();
        let (x, y) = apply_exchange(&apart[0], &apart[1], params).unwrap();
        let after = dirichlet_energy(&[x, y], &net).unwrap();
        let delta = after - u;
        let expected = -4.0 * 0.25 * 0.75 * 1.0 * 200.0;
        assert!((delta - expected).abs() < 1e-10, "{delta} vs {expected}");

        let edgeless = InteractionNetwork::build(2, &[]).unwrap();
        assert!(matches!(
            dirichlet_energy(&equal, &edgeless),
            Err(Error::ZeroTotalRate)
        ));
    }

    #[test]
    fn ks_statistic_detects_wrong_rate() {
        // deterministic inverse-CDF samples of Exp(1)
        let n = 2000;
        let mut good: Vec<f64> = (0..n)
            .map(|k| {
                let u = (k as f64 + 0.5) / n as f64;
                -(1.0 - u).ln()
            })
            .collect();
        let d_good = ks_statistic_exponential(&mut good.clone(), 1.0);
        assert!(d_good < ks_critical_value(n, 0.001), "{d_good}");
        let d_bad = ks_statistic_exponential(&mut good, 2.0);
        assert!(d_bad > ks_critical_value(n, 0.001), "{d_bad}");
    }
}
