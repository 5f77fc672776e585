//! Local dynamics: per-host autonomous vector fields and their flows.
//!
//! A [`LocalDynamics`] is a bounded vector field on `[0, M]^n`; the
//! boundedness is a caller contract, sampled in tests rather than
//! enforced pointwise. Two families are built in: a 2-species quartic
//! product system with four stable equilibria, and the generalized
//! Lotka–Volterra model. Arbitrary fields enter through
//! [`LocalDynamics::new`].

use std::fmt;
use std::sync::Arc;

use crate::error::Error;
use crate::integrator::{integrate_in_place, IntegratorConfig};
use crate::Result;

type Field = Arc<dyn Fn(&[f64], &mut [f64]) + Send + Sync>;

/// A host's autonomous local vector field with its domain bound and an
/// optional list of known stable equilibria.
#[derive(Clone)]
pub struct LocalDynamics {
    dimension: usize,
    field: Field,
    domain_bound: f64,
    declared_attractors: Option<Vec<Vec<f64>>>,
}

impl fmt::Debug for LocalDynamics {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("LocalDynamics")
            .field("dimension", &self.dimension)
            .field("domain_bound", &self.domain_bound)
            .field("declared_attractors", &self.declared_attractors)
            .finish_non_exhaustive()
    }
}

impl LocalDynamics {
    /// Wraps an arbitrary vector field. `field` must write the derivative
    /// of its first argument into its second; it is expected to keep
    /// `[0, M]^n` forward-invariant.
    pub fn new<F>(dimension: usize, domain_bound: f64, field: F) -> Self
    where
        F: Fn(&[f64], &mut [f64]) + Send + Sync + 'static,
    {
        Self {
            dimension,
            field: Arc::new(field),
            domain_bound,
            declared_attractors: None,
        }
    }

    /// Attaches a list of known stable equilibria. Each must lie in the
    /// domain and have a field norm at most 1e-9; violations panic, since
    /// a wrong attractor list poisons every downstream basin label.
    pub fn with_declared_attractors(mut self, attractors: Vec<Vec<f64>>) -> Self {
        for a in &attractors {
            assert_eq!(a.len(), self.dimension, "attractor dimension mismatch");
            assert!(
                a.iter().all(|&v| (0.0..=self.domain_bound).contains(&v)),
                "attractor outside [0, M]^n"
            );
            let mut dv = vec![0.0; self.dimension];
            self.eval(a, &mut dv);
            let norm = dv.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            assert!(norm <= 1e-9, "declared attractor has field norm {norm}");
        }
        self.declared_attractors = Some(attractors);
        self
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn domain_bound(&self) -> f64 {
        self.domain_bound
    }

    pub fn declared_attractors(&self) -> Option<&[Vec<f64>]> {
        self.declared_attractors.as_deref()
    }

    /// Evaluates the vector field at `x`, writing into `out`.
    pub fn eval(&self, x: &[f64], out: &mut [f64]) {
        debug_assert_eq!(x.len(), self.dimension);
        debug_assert_eq!(out.len(), self.dimension);
        (self.field)(x, out);
    }

    /// Convenience allocating evaluation.
    pub fn eval_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dimension];
        self.eval(x, &mut out);
        out
    }
}

/// The built-in 2-species product system: each species follows an
/// independent quartic with two stable wells, giving four stable
/// equilibria (2,2), (12,2), (2,12), (12,12) on `[0, 13]^2`.
///
/// Species 1: `dN/dt = -(N/10)(N-2)(N-8)(N-12)`;
/// species 2: `dN/dt = -(N/10)(N-2)(N-11)(N-12)`.
pub fn builtin_illustrative() -> LocalDynamics {
    LocalDynamics::new(2, 13.0, |x, out| {
        out[0] = -(x[0] / 10.0) * (x[0] - 2.0) * (x[0] - 8.0) * (x[0] - 12.0);
        out[1] = -(x[1] / 10.0) * (x[1] - 2.0) * (x[1] - 11.0) * (x[1] - 12.0);
    })
    .with_declared_attractors(vec![
        vec![2.0, 2.0],
        vec![12.0, 2.0],
        vec![2.0, 12.0],
        vec![12.0, 12.0],
    ])
}

/// Generalized Lotka–Volterra dynamics:
/// `dN_k/dt = r_k N_k + sum_l alpha_kl N_k N_l` on `[0, M]^n`.
pub fn builtin_glv(r: &[f64], alpha: &[Vec<f64>], domain_bound: f64) -> Result<LocalDynamics> {
    let n = r.len();
    if alpha.len() != n {
        return Err(Error::DimensionMismatch {
            left: n,
            right: alpha.len(),
        });
    }
    for row in alpha {
        if row.len() != n {
            return Err(Error::DimensionMismatch {
                left: n,
                right: row.len(),
            });
        }
    }
    if domain_bound.is_nan() || domain_bound <= 0.0 {
        return Err(Error::ConfigInvalid(format!(
            "GLV domain bound must be positive, got {domain_bound}"
        )));
    }
    let r = r.to_vec();
    let alpha = alpha.to_vec();
    Ok(LocalDynamics::new(n, domain_bound, move |x, out| {
        for k in 0..x.len() {
            let mut interaction = 0.0;
            for (l, &xl) in x.iter().enumerate() {
                interaction += alpha[k][l] * xl;
            }
            out[k] = x[k] * (r[k] + interaction);
        }
    }))
}

/// Integrates the local flow from `x0` for `duration` and returns the
/// endpoint, clamped into `[0, M]^n`.
///
/// A clamp larger than `10 * abs_tol` means the trajectory genuinely
/// left the domain (the field violates its boundedness contract) and is
/// reported as [`Error::IntegrationEscape`].
pub fn flow(
    dyn_: &LocalDynamics,
    x0: &[f64],
    duration: f64,
    cfg: &IntegratorConfig,
) -> Result<Vec<f64>> {
    let mut state = x0.to_vec();
    flow_in_place(dyn_, &mut state, duration, cfg)?;
    Ok(state)
}

/// In-place flow used by the simulator hot path.
pub(crate) fn flow_in_place(
    dyn_: &LocalDynamics,
    state: &mut Vec<f64>,
    duration: f64,
    cfg: &IntegratorConfig,
) -> Result<()> {
    if duration == 0.0 {
        return Ok(());
    }
    integrate_in_place(|x, out| dyn_.eval(x, out), state, duration, cfg, |_| false)?;
    clamp_into_domain(state, dyn_.domain_bound(), cfg.abs_tol)
}

/// Clamps `state` entrywise into `[0, bound]`, failing if any entry is
/// out of bounds by more than `10 * abs_tol`.
pub(crate) fn clamp_into_domain(state: &mut [f64], bound: f64, abs_tol: f64) -> Result<()> {
    let allowance = 10.0 * abs_tol;
    for v in state.iter_mut() {
        let clamped = v.clamp(0.0, bound);
        let excess = (*v - clamped).abs();
        if excess > allowance {
            return Err(Error::IntegrationEscape {
                domain_bound: bound,
                excess,
            });
        }
        *v = clamped;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> IntegratorConfig {
        IntegratorConfig::default()
    }

    #[test]
    fn illustrative_equilibria() {
        let dyn_ = builtin_illustrative();
        assert_eq!(dyn_.eval_vec(&[2.0, 2.0]), vec![0.0, 0.0]);
        // unstable equilibrium of the product system
        assert_eq!(dyn_.eval_vec(&[8.0, 11.0]), vec![0.0, 0.0]);
    }

    #[test]
    fn illustrative_field_at_midpoint() {
        // hand evaluation of the quartics at (7, 7):
        //   -(7/10)(5)(-1)(-5)  = -17.5
        //   -(7/10)(5)(-4)(-5)  = -70.0
        let dyn_ = builtin_illustrative();
        let v = dyn_.eval_vec(&[7.0, 7.0]);
        assert!((v[0] - (-17.5)).abs() < 1e-12, "{v:?}");
        assert!((v[1] - (-70.0)).abs() < 1e-12, "{v:?}");
    }

    #[test]
    fn glv_logistic_fixed_point_and_value() {
        let glv = builtin_glv(&[1.0], &[vec![-1.0]], 2.0).unwrap();
        assert_eq!(glv.eval_vec(&[1.0]), vec![0.0]);
        assert_eq!(glv.eval_vec(&[0.5]), vec![0.25]);
    }

    #[test]
    fn glv_rejects_ragged_matrix() {
        assert!(builtin_glv(&[1.0, 2.0], &[vec![-1.0]], 1.0).is_err());
        assert!(builtin_glv(&[1.0], &[vec![-1.0, 0.0]], 1.0).is_err());
    }

    #[test]
    fn glv_flow_reaches_carrying_capacity() {
        // closed-form logistic solution as oracle
        let glv = builtin_glv(&[1.0], &[vec![-1.0]], 2.0).unwrap();
        let end = flow(&glv, &[0.1], 20.0, &cfg()).unwrap();
        assert!((end[0] - 1.0).abs() < 1e-6, "{end:?}");
    }

    #[test]
    fn flow_from_equilibrium_stays_put() {
        let dyn_ = builtin_illustrative();
        let end = flow(&dyn_, &[2.0, 2.0], 17.0, &cfg()).unwrap();
        assert!((end[0] - 2.0).abs() <= cfg().abs_tol);
        assert!((end[1] - 2.0).abs() <= cfg().abs_tol);
    }

    #[test]
    fn flow_settles_by_one_dimensional_sign_analysis() {
        // each coordinate below its unstable point decays to 2;
        // 9.5 > 8 grows to 12 while 9.5 < 11 decays to 2
        let dyn_ = builtin_illustrative();
        let a = flow(&dyn_, &[4.5, 4.5], 50.0, &cfg()).unwrap();
        assert!((a[0] - 2.0).abs() < 1e-6 && (a[1] - 2.0).abs() < 1e-6, "{a:?}");
        let b = flow(&dyn_, &[9.5, 9.5], 50.0, &cfg()).unwrap();
        assert!((b[0] - 12.0).abs() < 1e-6 && (b[1] - 2.0).abs() < 1e-6, "{b:?}");
    }

    #[test]
    fn flow_semigroup_property() {
        let dyn_ = builtin_illustrative();
        let c = cfg();
        let x0 = [5.3, 9.7];
        let direct = flow(&dyn_, &x0, 3.0, &c).unwrap();
        let mid = flow(&dyn_, &x0, 1.2, &c).unwrap();
        let chained = flow(&dyn_, &mid, 1.8, &c).unwrap();
        let tol = 10.0 * (c.abs_tol + c.rel_tol * dyn_.domain_bound());
        for k in 0..2 {
            assert!((direct[k] - chained[k]).abs() <= tol, "{direct:?} vs {chained:?}");
        }
    }

    #[test]
    fn flow_boundedness_over_random_starts() {
        let dyn_ = builtin_illustrative();
        let c = cfg();
        let m = dyn_.domain_bound();
        // deterministic low-discrepancy sweep of the square
        let mut failures = 0;
        for k in 0..1000 {
            let u = (k as f64 * 0.754877666246693) % 1.0;
            let v = (k as f64 * 0.569840290998053) % 1.0;
            let end = flow(&dyn_, &[u * m, v * m], 7.0, &c).unwrap();
            if !end.iter().all(|&x| (0.0..=m).contains(&x)) {
                failures += 1;
            }
        }
        assert_eq!(failures, 0);
    }

    #[test]
    fn escape_is_detected_for_unbounded_field() {
        // growth without a carrying cap escapes the declared domain
        let bad = LocalDynamics::new(1, 1.0, |x, out| out[0] = 1.0 + x[0]);
        let err = flow(&bad, &[0.5], 5.0, &cfg()).unwrap_err();
        assert!(matches!(err, Error::IntegrationEscape { .. }), "{err}");
    }

    #[test]
    fn field_points_inward_near_each_attractor() {
        // sampled check that the field pulls back toward the equilibria
        let dyn_ = builtin_illustrative();
        let attractors = dyn_.declared_attractors().unwrap().to_vec();
        for attractor in &attractors {
            for k in 0..200 {
                let angle = k as f64 * 0.1;
                let radius = 0.05 + 0.45 * ((k * 7919) % 200) as f64 / 200.0;
                let probe = [
                    attractor[0] + radius * angle.cos(),
                    attractor[1] + radius * angle.sin(),
                ];
                if probe.iter().any(|&v| !(0.0..=13.0).contains(&v)) {
                    continue;
                }
                let f = dyn_.eval_vec(&probe);
                let inward: f64 = f[0] * (attractor[0] - probe[0])
                    + f[1] * (attractor[1] - probe[1]);
                assert!(inward > 0.0, "outward field at {probe:?}");
            }
        }
    }

    #[test]
    fn boundedness_contract_sampled_on_faces() {
        // field points inward on the domain faces of the builtin model
        let dyn_ = builtin_illustrative();
        let m = dyn_.domain_bound();
        for k in 0..2 {
            for t in 0..50 {
                let other = m * t as f64 / 49.0;
                let mut lo = vec![other; 2];
                lo[k] = 0.0;
                let d = dyn_.eval_vec(&lo);
                assert!(d[k] >= 0.0, "outward at {lo:?}");
                let mut hi = vec![other; 2];
                hi[k] = m;
                let d = dyn_.eval_vec(&hi);
                assert!(d[k] <= 0.0, "outward at {hi:?}");
            }
        }
    }
}
