//! Construction and application of the interaction operators.

use crate::basins::{classify_basin, Classification};
use crate::dynamics::LocalDynamics;
use crate::error::Error;
use crate::integrator::IntegratorConfig;
use crate::lfa::{format_intervals, BasinTransitionMap, GammaInterval, TransitionMaps};
use crate::network::{InteractionNetwork, RelativeRates};
use crate::simulate::HostDynamics;
use crate::Result;

use super::BasinProbabilityTensor;

/// Half-width of the probe used to detect that a strength sits on a
/// classification boundary, and the width to which boundary brackets
/// are bisected.
const BOUNDARY_TOL: f64 = 1e-6;

fn mixed_point(a: &[f64], b: &[f64], gamma: f64) -> Vec<f64> {
    a.iter()
        .zip(b)
        .map(|(&x, &y)| (1.0 - gamma) * x + gamma * y)
        .collect()
}

fn classify_mix(
    dyn_: &LocalDynamics,
    attractors: &[Vec<f64>],
    a: &[f64],
    b: &[f64],
    gamma: f64,
    cfg: &IntegratorConfig,
) -> Result<Classification> {
    classify_basin(dyn_, &mixed_point(a, b, gamma), attractors, cfg)
}

/// Scans `[0, 0.5]` for interaction strengths at which some
/// post-exchange mix of an attractor pair changes basin, and brackets
/// each change to width `1e-6` by bisection. Returns the merged
/// bracketing intervals in increasing order.
///
/// Both post-exchange points of every ordered attractor pair are
/// scanned, so heterogeneous host pairs are covered. A scan point that
/// classifies as unresolved counts as its own class, which widens the
/// reported interval around it instead of losing it.
pub fn boundary_set(
    dyn_i: &LocalDynamics,
    dyn_j: &LocalDynamics,
    attractors_i: &[Vec<f64>],
    attractors_j: &[Vec<f64>],
    gamma_resolution: f64,
    cfg: &IntegratorConfig,
) -> Result<Vec<GammaInterval>> {
    assert!(gamma_resolution > 0.0 && gamma_resolution <= 0.5);
    let steps = (0.5 / gamma_resolution).ceil() as usize;
    let grid: Vec<f64> = (0..=steps).map(|k| 0.5 * k as f64 / steps as f64).collect();

    let mut intervals: Vec<GammaInterval> = Vec::new();
    // each side of the exchange: (dynamics, attractors, mix order)
    for (dyn_h, attr_h, swap) in [
        (dyn_i, attractors_i, false),
        (dyn_j, attractors_j, true),
    ] {
        for a in attractors_i {
            for b in attractors_j {
                let (first, second) = if swap { (b, a) } else { (a, b) };
                let classify =
                    |g: f64| classify_mix(dyn_h, attr_h, first, second, g, cfg);
                let mut prev = classify(grid[0])?;
                for window in grid.windows(2) {
                    let next = classify(window[1])?;
                    if next != prev {
                        intervals.push(bracket_change(
                            &classify,
                            window[0],
                            window[1],
                            prev,
                            BOUNDARY_TOL / 2.0,
                        )?);
                    }
                    prev = next;
                }
            }
        }
    }
    intervals.sort_by(|x, y| x.lo.total_cmp(&y.lo));
    let mut merged: Vec<GammaInterval> = Vec::new();
    for iv in intervals {
        match merged.last_mut() {
            Some(last) if iv.lo <= last.hi => last.hi = last.hi.max(iv.hi),
            _ => merged.push(iv),
        }
    }
    Ok(merged)
}

/// Shrinks `[lo, hi]` (whose endpoints classify differently) around a
/// classification change until it is narrower than `width`.
fn bracket_change(
    classify: &dyn Fn(f64) -> Result<Classification>,
    mut lo: f64,
    mut hi: f64,
    class_lo: Classification,
    width: f64,
) -> Result<GammaInterval> {
    while hi - lo > width {
        let mid = 0.5 * (lo + hi);
        if classify(mid)? == class_lo {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(GammaInterval { lo, hi })
}

/// Builds the deterministic basin-pair map of one edge at strength
/// `gamma` by classifying both post-exchange points of every ordered
/// attractor pair.
///
/// Strengths within `1e-6` of a classification boundary are rejected
/// with [`Error::GammaOnBoundary`]; a classification that cannot settle
/// within the flow-time budget is [`Error::UnresolvedClassification`].
pub fn transition_map(
    gamma: f64,
    dyn_i: &LocalDynamics,
    dyn_j: &LocalDynamics,
    attractors_i: &[Vec<f64>],
    attractors_j: &[Vec<f64>],
    cfg: &IntegratorConfig,
) -> Result<BasinTransitionMap> {
    let m_i = attractors_i.len();
    let m_j = attractors_j.len();
    let mut outputs = Vec::with_capacity(m_i * m_j);
    for (a_idx, a) in attractors_i.iter().enumerate() {
        for (b_idx, b) in attractors_j.iter().enumerate() {
            let out_i = robust_label(dyn_i, attractors_i, a, b, gamma, cfg, a_idx, b_idx)?;
            let out_j = robust_label(dyn_j, attractors_j, b, a, gamma, cfg, a_idx, b_idx)?;
            outputs.push((out_i, out_j));
        }
    }
    BasinTransitionMap::new(m_i, m_j, outputs)
}

/// Classifies the mix at `gamma` and at two probes `gamma +- 1e-6`
/// (clipped into `[0, 0.5]`); disagreement means the strength sits on a
/// boundary.
#[allow(clippy::too_many_arguments)]
fn robust_label(
    dyn_h: &LocalDynamics,
    attractors: &[Vec<f64>],
    first: &[f64],
    second: &[f64],
    gamma: f64,
    cfg: &IntegratorConfig,
    a_label0: usize,
    b_label0: usize,
) -> Result<usize> {
    let probes = [
        (gamma - BOUNDARY_TOL).max(0.0),
        gamma,
        (gamma + BOUNDARY_TOL).min(0.5),
    ];
    let mut labels = [Classification::Unresolved; 3];
    for (slot, g) in probes.into_iter().enumerate() {
        labels[slot] = classify_mix(dyn_h, attractors, first, second, g, cfg)?;
    }
    match labels {
        [a, b, c] if a == b && b == c => match b {
            Classification::Basin(label) => Ok(label),
            Classification::Unresolved => Err(Error::UnresolvedClassification {
                a: a_label0 + 1,
                b: b_label0 + 1,
            }),
        },
        _ => Err(Error::GammaOnBoundary {
            gamma,
            intervals: format_intervals(&[GammaInterval {
                lo: probes[0],
                hi: probes[2],
            }]),
        }),
    }
}

/// Transition maps for every edge of a network whose hosts all share one
/// dynamics: the map is computed once and reused.
pub fn shared_edge_maps(
    network: &InteractionNetwork,
    dyn_: &LocalDynamics,
    attractors: &[Vec<f64>],
    gamma: f64,
    cfg: &IntegratorConfig,
) -> Result<TransitionMaps> {
    let map = transition_map(gamma, dyn_, dyn_, attractors, attractors, cfg)?;
    Ok(TransitionMaps::new(
        network
            .edges()
            .iter()
            .map(|&(i, j, _)| (i, j, map.clone()))
            .collect(),
    ))
}

/// Transition maps for every edge under possibly heterogeneous host
/// dynamics. `attractors[host]` lists each host's attractors in label
/// order.
pub fn edge_transition_maps(
    network: &InteractionNetwork,
    dynamics: &HostDynamics,
    attractors: &[Vec<Vec<f64>>],
    gamma: f64,
    cfg: &IntegratorConfig,
) -> Result<TransitionMaps> {
    if let HostDynamics::Shared(dyn_) = dynamics {
        let shared = attractors
            .first()
            .ok_or_else(|| Error::ConfigInvalid("no attractor list".into()))?;
        return shared_edge_maps(network, dyn_, shared, gamma, cfg);
    }
    if attractors.len() != network.host_count() {
        return Err(Error::ConfigInvalid(format!(
            "{} attractor lists for {} hosts",
            attractors.len(),
            network.host_count()
        )));
    }
    let mut entries = Vec::new();
    for &(i, j, _) in network.edges() {
        entries.push((
            i,
            j,
            transition_map(
                gamma,
                dynamics.for_host(i),
                dynamics.for_host(j),
                &attractors[i],
                &attractors[j],
                cfg,
            )?,
        ));
    }
    Ok(TransitionMaps::new(entries))
}

/// Applies the rate-weighted total-interaction operator:
/// the expected push-forward of the joint basin probability through one
/// interaction, `sum over edges of l_ij * (map_ij pushed on axes i, j)`.
/// Mass-preserving and linear.
pub fn apply_total_operator(
    psi: &BasinProbabilityTensor,
    maps: &TransitionMaps,
    rates: &RelativeRates,
) -> Result<BasinProbabilityTensor> {
    let dims = psi.dims().to_vec();
    let mut out = vec![0.0; psi.len()];
    total_operator_into(&mut out, psi.data(), &dims, maps, rates)?;
    BasinProbabilityTensor::new(dims, out)
}

/// Kernel shared with the tensor ODE: `out = Phi psi` (overwrites `out`).
pub(crate) fn total_operator_into(
    out: &mut [f64],
    psi: &[f64],
    dims: &[usize],
    maps: &TransitionMaps,
    rates: &RelativeRates,
) -> Result<()> {
    let strides = row_major_strides(dims);
    out.fill(0.0);
    for &(i, j, l) in rates.entries() {
        let map = maps.get(i, j).ok_or(Error::MissingEdgeMap { i, j })?;
        let (m_i, m_j) = map.dims();
        if m_i != dims[i] || m_j != dims[j] {
            return Err(Error::ShapeMismatch(format!(
                "map for edge ({i}, {j}) is {m_i} x {m_j}, tensor axes are {} x {}",
                dims[i], dims[j]
            )));
        }
        let (si, sj) = (strides[i], strides[j]);
        for (flat, &mass) in psi.iter().enumerate() {
            if mass == 0.0 {
                continue;
            }
            let a = flat / si % dims[i];
            let b = flat / sj % dims[j];
            let (a2, b2) = map.apply0(a, b);
            // label moves expressed in two's-complement offsets
            let target = flat
                .wrapping_add(a2.wrapping_sub(a).wrapping_mul(si))
                .wrapping_add(b2.wrapping_sub(b).wrapping_mul(sj));
            out[target] += l * mass;
        }
    }
    Ok(())
}

pub(crate) fn row_major_strides(dims: &[usize]) -> Vec<usize> {
    let mut strides = vec![1usize; dims.len()];
    for d in (0..dims.len().saturating_sub(1)).rev() {
        strides[d] = strides[d + 1] * dims[d + 1];
    }
    strides
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basins::find_attractors;
    use crate::dynamics::builtin_illustrative;
    use crate::network::InteractionNetwork;

    fn setup() -> (LocalDynamics, Vec<Vec<f64>>, IntegratorConfig) {
        let dyn_ = builtin_illustrative();
        let cfg = IntegratorConfig::default();
        let attractors = find_attractors(&dyn_, 3, &cfg).unwrap();
        (dyn_, attractors, cfg)
    }

    #[test]
    fn boundary_set_of_the_builtin_pair() {
        let (dyn_, attractors, cfg) = setup();
        let intervals =
            boundary_set(&dyn_, &dyn_, &attractors, &attractors, 0.01, &cfg).unwrap();
        assert_eq!(intervals.len(), 2, "{intervals:?}");
        assert!(intervals[0].contains(0.1), "{intervals:?}");
        assert!(intervals[1].contains(0.4), "{intervals:?}");
        for iv in &intervals {
            assert!(iv.width() <= 1e-6, "{intervals:?}");
        }
    }

    #[test]
    fn single_attractor_pair_has_empty_boundary_set() {
        let glv = crate::dynamics::builtin_glv(&[1.0], &[vec![-1.0]], 2.0).unwrap();
        let cfg = IntegratorConfig::default();
        let attractors = find_attractors(&glv, 5, &cfg).unwrap();
        let intervals =
            boundary_set(&glv, &glv, &attractors, &attractors, 0.05, &cfg).unwrap();
        assert!(intervals.is_empty(), "{intervals:?}");
    }

    #[test]
    fn transition_map_reference_entries() {
        let (dyn_, attractors, cfg) = setup();
        let map = transition_map(0.25, &dyn_, &dyn_, &attractors, &attractors, &cfg).unwrap();
        assert_eq!(map.apply(1, 4), (1, 2));
        // full 16-entry reference table at gamma = 0.25
        let expected = [
            ((1, 1), (1, 1)),
            ((1, 2), (1, 2)),
            ((1, 3), (1, 1)),
            ((1, 4), (1, 2)),
            ((2, 1), (2, 1)),
            ((2, 2), (2, 2)),
            ((2, 3), (2, 1)),
            ((2, 4), (2, 2)),
            ((3, 1), (1, 1)),
            ((3, 2), (1, 2)),
            ((3, 3), (3, 3)),
            ((3, 4), (3, 4)),
            ((4, 1), (2, 1)),
            ((4, 2), (2, 2)),
            ((4, 3), (4, 3)),
            ((4, 4), (4, 4)),
        ];
        for ((a, b), want) in expected {
            assert_eq!(map.apply(a, b), want, "input ({a}, {b})");
        }
    }

    #[test]
    fn weak_exchange_map_is_identity() {
        let (dyn_, attractors, cfg) = setup();
        let map = transition_map(0.05, &dyn_, &dyn_, &attractors, &attractors, &cfg).unwrap();
        assert_eq!(map.apply(1, 4), (1, 4));
        assert!(map.is_identity());
    }

    #[test]
    fn boundary_gamma_is_rejected() {
        let (dyn_, attractors, cfg) = setup();
        let err = transition_map(0.1, &dyn_, &dyn_, &attractors, &attractors, &cfg).unwrap_err();
        assert!(matches!(err, Error::GammaOnBoundary { .. }), "{err}");
    }

    #[test]
    fn exhausted_flow_budget_is_unresolved_classification() {
        let (dyn_, attractors, cfg) = setup();
        // far too little flow time for any mix to reach an attractor
        let starved = IntegratorConfig {
            max_flow_time: 1e-3,
            ..cfg
        };
        let err =
            transition_map(0.25, &dyn_, &dyn_, &attractors, &attractors, &starved).unwrap_err();
        assert!(matches!(err, Error::UnresolvedClassification { .. }), "{err}");
    }

    #[test]
    fn map_is_deterministic_under_tolerance_tightening() {
        let (dyn_, attractors, cfg) = setup();
        let a = transition_map(0.25, &dyn_, &dyn_, &attractors, &attractors, &cfg).unwrap();
        let b = transition_map(
            0.25,
            &dyn_,
            &dyn_,
            &attractors,
            &attractors,
            &cfg.tightened(10.0),
        )
        .unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn diagonal_inputs_are_fixed_for_identical_hosts() {
        let (dyn_, attractors, cfg) = setup();
        for gamma in [0.05, 0.25, 0.45] {
            let map =
                transition_map(gamma, &dyn_, &dyn_, &attractors, &attractors, &cfg).unwrap();
            for a in 1..=4 {
                assert_eq!(map.apply(a, a), (a, a));
            }
        }
    }

    #[test]
    fn total_operator_reference_and_mass() {
        let (dyn_, attractors, cfg) = setup();
        let net = InteractionNetwork::build(2, &[(0, 1, 1.0)]).unwrap();
        let rates = net.relative_rates().unwrap();
        let maps = shared_edge_maps(&net, &dyn_, &attractors, 0.25, &cfg).unwrap();

        let psi = BasinProbabilityTensor::delta(vec![4, 4], &[1, 4]).unwrap();
        let out = apply_total_operator(&psi, &maps, &rates).unwrap();
        assert_eq!(out.get(&[1, 2]).unwrap(), 1.0);
        assert!((out.sum() - 1.0).abs() < 1e-15);

        // identity maps leave any tensor unchanged
        let identity = TransitionMaps::new(vec![(0, 1, BasinTransitionMap::identity(4, 4))]);
        let mixed = BasinProbabilityTensor::new(vec![4, 4], vec![1.0 / 16.0; 16]).unwrap();
        let same = apply_total_operator(&mixed, &identity, &rates).unwrap();
        assert_eq!(same, mixed);
    }

    #[test]
    fn push_forward_matches_dense_operator_matrix() {
        // brute-force route: materialize the total operator as a dense
        // 0/1-weighted matrix over joint states and multiply
        for salt in 0..4u64 {
            let dims = vec![3usize, 2, 4];
            let size: usize = dims.iter().product();
            let net = InteractionNetwork::build(
                3,
                &[(0, 1, 1.0 + salt as f64), (1, 2, 2.0), (0, 2, 0.5)],
            )
            .unwrap();
            let rates = net.relative_rates().unwrap();

            // random total maps per edge
            let mut counter = salt.wrapping_mul(1000);
            let mut next = || {
                counter += 1;
                crate::rng::derive_seed(salt, counter)
            };
            let random_map = |m_i: usize, m_j: usize, next: &mut dyn FnMut() -> u64| {
                let outputs = (0..m_i * m_j)
                    .map(|_| {
                        let r = next();
                        (
                            (r % m_i as u64) as usize + 1,
                            ((r >> 32) % m_j as u64) as usize + 1,
                        )
                    })
                    .collect();
                BasinTransitionMap::new(m_i, m_j, outputs).unwrap()
            };
            let maps = TransitionMaps::new(vec![
                (0, 1, random_map(dims[0], dims[1], &mut next)),
                (1, 2, random_map(dims[1], dims[2], &mut next)),
                (0, 2, random_map(dims[0], dims[2], &mut next)),
            ]);

            // dense matrix: column = input joint state, row = output
            let strides = row_major_strides(&dims);
            let mut dense = vec![0.0; size * size];
            for &(i, j, l) in rates.entries() {
                let map = maps.get(i, j).unwrap();
                for input in 0..size {
                    let a = input / strides[i] % dims[i];
                    let b = input / strides[j] % dims[j];
                    let (a2, b2) = map.apply0(a, b);
                    let output = input + (a2 * strides[i] + b2 * strides[j])
                        - (a * strides[i] + b * strides[j]);
                    dense[output * size + input] += l;
                }
            }

            let mut psi_data: Vec<f64> = (0..size)
                .map(|k| crate::rng::derive_seed(salt, 777 + k as u64) as f64)
                .collect();
            let total: f64 = psi_data.iter().sum();
            psi_data.iter_mut().for_each(|v| *v /= total);
            let psi = BasinProbabilityTensor::new(dims.clone(), psi_data.clone()).unwrap();

            let fast = apply_total_operator(&psi, &maps, &rates).unwrap();
            for row in 0..size {
                let reference: f64 = (0..size)
                    .map(|col| dense[row * size + col] * psi_data[col])
                    .sum();
                assert!(
                    (fast.data()[row] - reference).abs() < 1e-14,
                    "salt {salt} row {row}"
                );
            }
        }
    }

    #[test]
    fn total_operator_is_linear_and_mass_preserving() {
        let (dyn_, attractors, cfg) = setup();
        let net = InteractionNetwork::build(3, &[(0, 1, 1.0), (1, 2, 2.0)]).unwrap();
        let rates = net.relative_rates().unwrap();
        let maps = shared_edge_maps(&net, &dyn_, &attractors, 0.25, &cfg).unwrap();

        // deterministic pseudo-random probability tensors
        let make = |salt: u64| {
            let mut data: Vec<f64> = (0..64)
                .map(|k| {
                    let x = crate::rng::derive_seed(salt, k) as f64;
                    x / u64::MAX as f64 + 1e-3
                })
                .collect();
            let sum: f64 = data.iter().sum();
            data.iter_mut().for_each(|v| *v /= sum);
            BasinProbabilityTensor::new(vec![4, 4, 4], data).unwrap()
        };
        let p1 = make(1);
        let p2 = make(2);
        let alpha = 0.375;
        let blended_data: Vec<f64> = p1
            .data()
            .iter()
            .zip(p2.data())
            .map(|(a, b)| alpha * a + (1.0 - alpha) * b)
            .collect();
        let blended = BasinProbabilityTensor::new(vec![4, 4, 4], blended_data).unwrap();

        let out_blend = apply_total_operator(&blended, &maps, &rates).unwrap();
        let out1 = apply_total_operator(&p1, &maps, &rates).unwrap();
        let out2 = apply_total_operator(&p2, &maps, &rates).unwrap();
        for (v, (a, b)) in out_blend
            .data()
            .iter()
            .zip(out1.data().iter().zip(out2.data()))
        {
            assert!((v - (alpha * a + (1.0 - alpha) * b)).abs() < 1e-12);
        }
        assert!((out_blend.sum() - 1.0).abs() < 1e-12);

        // missing edge map is reported
        let partial = TransitionMaps::new(vec![(
            0,
            1,
            BasinTransitionMap::identity(4, 4),
        )]);
        assert!(matches!(
            apply_total_operator(&p1, &partial, &rates),
            Err(Error::MissingEdgeMap { i: 1, j: 2 })
        ));
    }
}
