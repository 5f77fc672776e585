//! Attractor search and basin-of-attraction classification.
//!
//! Basin labels are 1-based and assigned by attractor order. Attractors
//! are sorted with the last coordinate most significant, which for the
//! built-in two-species model yields the conventional labels
//! 1 = (2,2), 2 = (12,2), 3 = (2,12), 4 = (12,12).

use std::cmp::Ordering;

use crate::dynamics::{flow, LocalDynamics};
use crate::error::Error;
use crate::integrator::{integrate_in_place, IntegratorConfig};
use crate::Result;

/// Outcome of a basin classification. `Unresolved` is a first-class
/// outcome, not an error: points numerically on a separatrix may never
/// enter any attractor ball within the flow-time budget.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Classification {
    /// 1-based attractor index.
    Basin(usize),
    Unresolved,
}

impl Classification {
    pub fn basin(self) -> Option<usize> {
        match self {
            Classification::Basin(b) => Some(b),
            Classification::Unresolved => None,
        }
    }
}

/// Orders vectors with the last coordinate most significant.
fn cmp_colex(a: &[f64], b: &[f64]) -> Ordering {
    for (x, y) in a.iter().rev().zip(b.iter().rev()) {
        match x.partial_cmp(y) {
            Some(Ordering::Equal) | None => continue,
            Some(ord) => return ord,
        }
    }
    Ordering::Equal
}

/// Sorts an attractor list into label order (see module docs).
pub fn sort_attractors(attractors: &mut [Vec<f64>]) {
    attractors.sort_by(|a, b| cmp_colex(a, b));
}

fn euclidean_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// A flow endpoint counts as settled when its field sup-norm is below
/// this coarse threshold. Adaptive integration hovers near equilibria at
/// the tolerance floor, so endpoints land close to the equilibria but
/// not on them; the strict 1e-9 residual applies to the polished centers.
const SETTLE_TOL: f64 = 1e-4;

/// Finds the stable equilibria of `dyn_` by flowing a uniform grid of
/// `grid_per_dim^n` starting points to `cfg.max_flow_time`, clustering
/// the settled endpoints within `cfg.attractor_radius`, polishing each
/// cluster center with damped finite-difference Newton, and keeping only
/// centers that (a) have field sup-norm at most 1e-9 and (b) re-attract
/// small perturbations; the stability filter discards the unstable
/// equilibria that grid points sitting exactly on invariant faces
/// converge to.
///
/// When the dynamics carries declared attractors they are returned
/// verbatim (sorted into label order) and the search is skipped.
pub fn find_attractors(
    dyn_: &LocalDynamics,
    grid_per_dim: usize,
    cfg: &IntegratorConfig,
) -> Result<Vec<Vec<f64>>> {
    if let Some(declared) = dyn_.declared_attractors() {
        let mut out = declared.to_vec();
        sort_attractors(&mut out);
        return Ok(out);
    }
    let n = dyn_.dimension();
    let m = dyn_.domain_bound();
    let total = grid_per_dim
        .checked_pow(n as u32)
        .ok_or(Error::NoAttractorsFound)?;

    let mut clusters: Vec<Vec<f64>> = Vec::new();
    let mut failed = 0usize;
    let mut deriv = vec![0.0; n];
    for flat in 0..total {
        let mut point = vec![0.0; n];
        let mut rest = flat;
        for coord in point.iter_mut() {
            let step = rest % grid_per_dim;
            rest /= grid_per_dim;
            *coord = if grid_per_dim == 1 {
                0.5 * m
            } else {
                m * step as f64 / (grid_per_dim - 1) as f64
            };
        }
        let end = flow(dyn_, &point, cfg.max_flow_time, cfg)?;
        dyn_.eval(&end, &mut deriv);
        let settled = deriv.iter().fold(0.0f64, |mx, v| mx.max(v.abs())) <= SETTLE_TOL;
        if !settled {
            failed += 1;
            continue;
        }
        if !clusters
            .iter()
            .any(|c| euclidean_distance(c, &end) <= cfg.attractor_radius.max(1e-3))
        {
            clusters.push(end);
        }
    }
    // "fails to settle" is tolerable for a small fraction of the grid
    if failed * 100 >= total.max(1) {
        return Err(Error::NonConvergentFlow { failed, total });
    }

    let mut stable: Vec<Vec<f64>> = Vec::new();
    for center in clusters {
        let Some(polished) = newton_polish(dyn_, &center) else {
            continue;
        };
        dyn_.eval(&polished, &mut deriv);
        if deriv.iter().fold(0.0f64, |mx, v| mx.max(v.abs())) > 1e-9 {
            continue;
        }
        if stable
            .iter()
            .any(|c| euclidean_distance(c, &polished) <= cfg.attractor_radius)
        {
            continue; // polish merged two coarse clusters
        }
        if is_attracting(dyn_, &polished, cfg)? {
            stable.push(polished);
        }
    }
    if stable.is_empty() {
        return Err(Error::NoAttractorsFound);
    }
    sort_attractors(&mut stable);
    Ok(stable)
}

/// Refines an approximate equilibrium by Newton iteration with a
/// central-difference Jacobian. Returns `None` when the iteration
/// drifts, the Jacobian degenerates, or the point leaves the domain.
fn newton_polish(dyn_: &LocalDynamics, start: &[f64]) -> Option<Vec<f64>> {
    let n = dyn_.dimension();
    let m = dyn_.domain_bound();
    let fd_step = 1e-6 * m.max(1.0);
    let mut x = start.to_vec();
    let mut fx = vec![0.0; n];
    for _ in 0..10 {
        dyn_.eval(&x, &mut fx);
        let residual = fx.iter().fold(0.0f64, |mx, v| mx.max(v.abs()));
        if residual <= 1e-12 {
            break;
        }
        // central-difference Jacobian
        let mut jac = vec![vec![0.0; n]; n];
        let mut fp = vec![0.0; n];
        let mut fm = vec![0.0; n];
        for col in 0..n {
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[col] += fd_step;
            xm[col] -= fd_step;
            dyn_.eval(&xp, &mut fp);
            dyn_.eval(&xm, &mut fm);
            for row in 0..n {
                jac[row][col] = (fp[row] - fm[row]) / (2.0 * fd_step);
            }
        }
        let step = solve_linear(&mut jac, &fx)?;
        for (xi, s) in x.iter_mut().zip(&step) {
            *xi -= s;
        }
        if euclidean_distance(&x, start) > 1e-2 * m.max(1.0) {
            return None; // polish walked away from the cluster
        }
    }
    dyn_.eval(&x, &mut fx);
    if fx.iter().any(|v| !v.is_finite()) || x.iter().any(|&v| !(-1e-9..=m + 1e-9).contains(&v)) {
        return None;
    }
    for v in x.iter_mut() {
        *v = v.clamp(0.0, m);
    }
    Some(x)
}

/// Gaussian elimination with partial pivoting; sized for the small
/// dimensions attractor search supports.
fn solve_linear(matrix: &mut [Vec<f64>], rhs: &[f64]) -> Option<Vec<f64>> {
    let n = rhs.len();
    let mut b = rhs.to_vec();
    for col in 0..n {
        let pivot_row = (col..n)
            .max_by(|&a, &r| matrix[a][col].abs().total_cmp(&matrix[r][col].abs()))?;
        if matrix[pivot_row][col].abs() < 1e-14 {
            return None;
        }
        matrix.swap(col, pivot_row);
        b.swap(col, pivot_row);
        for row in col + 1..n {
            let factor = matrix[row][col] / matrix[col][col];
            for k in col..n {
                matrix[row][k] -= factor * matrix[col][k];
            }
            b[row] -= factor * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let mut acc = b[row];
        for k in row + 1..n {
            acc -= matrix[row][k] * x[k];
        }
        x[row] = acc / matrix[row][row];
    }
    Some(x)
}

/// Checks that small axis perturbations of `center` flow back into the
/// attractor ball.
fn is_attracting(dyn_: &LocalDynamics, center: &[f64], cfg: &IntegratorConfig) -> Result<bool> {
    let m = dyn_.domain_bound();
    let h = (10.0 * cfg.attractor_radius).max(1e-3);
    for k in 0..dyn_.dimension() {
        for sign in [-1.0, 1.0] {
            let mut probe = center.to_vec();
            probe[k] = (probe[k] + sign * h).clamp(0.0, m);
            if probe[k] == center[k] {
                continue; // perturbation clipped away at the domain face
            }
            let end = flow(dyn_, &probe, cfg.max_flow_time, cfg)?;
            if euclidean_distance(&end, center) > cfg.attractor_radius {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Classifies `x` by integrating its flow until it enters the
/// `attractor_radius` ball of exactly one attractor (returning that
/// 1-based label) or until `max_flow_time` elapses (`Unresolved`).
pub fn classify_basin(
    dyn_: &LocalDynamics,
    x: &[f64],
    attractors: &[Vec<f64>],
    cfg: &IntegratorConfig,
) -> Result<Classification> {
    debug_assert!(!attractors.is_empty());
    let hit = |state: &[f64]| -> Option<usize> {
        let mut found = None;
        for (idx, a) in attractors.iter().enumerate() {
            if euclidean_distance(state, a) <= cfg.attractor_radius {
                if found.is_some() {
                    return None; // inside two balls at once: ambiguous
                }
                found = Some(idx + 1);
            }
        }
        found
    };

    if let Some(label) = hit(x) {
        return Ok(Classification::Basin(label));
    }
    let mut state = x.to_vec();
    let mut result = None;
    integrate_in_place(
        |y, out| dyn_.eval(y, out),
        &mut state,
        cfg.max_flow_time,
        cfg,
        |y| {
            result = hit(y);
            result.is_some()
        },
    )?;
    Ok(match result {
        Some(label) => Classification::Basin(label),
        None => Classification::Unresolved,
    })
}

/// The sup-norm field residual at each attractor; exposed for diagnostics.
pub fn attractor_residuals(dyn_: &LocalDynamics, attractors: &[Vec<f64>]) -> Vec<f64> {
    attractors
        .iter()
        .map(|a| {
            let mut d = vec![0.0; dyn_.dimension()];
            dyn_.eval(a, &mut d);
            d.iter().fold(0.0f64, |m, v| m.max(v.abs()))
        })
        .collect()
}
