//! Adaptive Dormand–Prince 5(4) integration of autonomous systems.
//!
//! One embedded Runge–Kutta core serves every ODE in the crate: host
//! flows, the coupled dispersal system, the mean-field system, and the
//! basin-probability ODEs (where the "state" is a flattened tensor).
//! Step-size selection uses the usual PI controller with Hairer's
//! constants.

use crate::error::Error;
use crate::Result;

/// Tolerances and limits shared by every integration in a run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorConfig {
    /// Relative tolerance, in (0, 1).
    pub rel_tol: f64,
    /// Absolute tolerance, in (0, 1).
    pub abs_tol: f64,
    /// Largest step the controller may take.
    pub max_step: f64,
    /// Time budget for attractor searches and basin classification.
    pub max_flow_time: f64,
    /// Radius of the ball around an attractor that counts as "arrived".
    pub attractor_radius: f64,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            rel_tol: 1e-8,
            abs_tol: 1e-10,
            max_step: 1.0,
            max_flow_time: 100.0,
            attractor_radius: 1e-4,
        }
    }
}

impl IntegratorConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.rel_tol > 0.0
            && self.rel_tol < 1.0
            && self.abs_tol > 0.0
            && self.abs_tol < 1.0
            && self.max_step > 0.0
            && self.max_flow_time > 0.0
            && self.attractor_radius > 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::ConfigInvalid(format!(
                "integrator config out of range: {self:?}"
            )))
        }
    }

    /// Copy with both tolerances divided by `factor` (for convergence checks).
    pub fn tightened(&self, factor: f64) -> Self {
        Self {
            rel_tol: self.rel_tol / factor,
            abs_tol: self.abs_tol / factor,
            ..*self
        }
    }
}

// Dormand-Prince 5(4) tableau (stage times omitted: all systems here
// are autonomous).
const A: [[f64; 6]; 7] = [
    [0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
// The 5th-order weights are the last row of A (FSAL): the argument of
// stage 7 is already the 5th-order solution.

/// Integrates `dy/dt = f(y)` from `y0` over `duration`, returning the
/// endpoint state. `f` writes the derivative of its first argument into
/// its second.
pub fn integrate<F>(f: F, y0: &[f64], duration: f64, cfg: &IntegratorConfig) -> Result<Vec<f64>>
where
    F: FnMut(&[f64], &mut [f64]),
{
    let mut y = y0.to_vec();
    integrate_in_place(f, &mut y, duration, cfg, |_| false)?;
    Ok(y)
}

/// Core stepper. Advances `y` over `duration`; after every accepted step
/// calls `stop` with the current state and halts early when it returns
/// true. Returns the elapsed time (equal to `duration` unless stopped).
pub fn integrate_in_place<F, S>(
    mut f: F,
    y: &mut Vec<f64>,
    duration: f64,
    cfg: &IntegratorConfig,
    mut stop: S,
) -> Result<f64>
where
    F: FnMut(&[f64], &mut [f64]),
    S: FnMut(&[f64]) -> bool,
{
    const SAFETY: f64 = 0.9;
    const BETA: f64 = 0.04;
    const EXPO: f64 = 0.2 - BETA * 0.75;
    const FAC_MIN: f64 = 0.2; // largest shrink per step
    const FAC_MAX: f64 = 10.0; // largest growth per step

    if duration == 0.0 || stop(y) {
        return Ok(0.0);
    }
    debug_assert!(duration > 0.0);
    let n = y.len();
    let mut k: Vec<Vec<f64>> = (0..7).map(|_| vec![0.0; n]).collect();
    let mut y_stage = vec![0.0; n];
    let mut y_next = vec![0.0; n];

    f(y, &mut k[0]);
    if k[0].iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFiniteDerivative { t: 0.0 });
    }

    // Conservative first step: bounded by duration, max_step, and the
    // scale suggested by the initial derivative.
    let y_norm = y.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let f_norm = k[0].iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut h = duration
        .min(cfg.max_step)
        .min(0.1 * (y_norm + 1.0) / (f_norm + 1.0));
    let h_floor = 1e-14 * duration.max(1.0);

    let mut t = 0.0;
    let mut fac_old: f64 = 1e-4;
    let mut saw_non_finite = false;

    while t < duration {
        let remaining = duration - t;
        if remaining <= h_floor {
            // within round-off of the endpoint
            break;
        }
        if h > remaining {
            h = remaining;
        }
        if h < h_floor {
            return if saw_non_finite {
                Err(Error::NonFiniteDerivative { t })
            } else {
                Err(Error::StepUnderflow { t, h })
            };
        }

        // Stages 2..7 (k[0] holds f(y) via FSAL).
        for s in 1..7 {
            for i in 0..n {
                let mut acc = 0.0;
                for (j, a) in A[s][..s].iter().enumerate() {
                    acc += a * k[j][i];
                }
                y_stage[i] = y[i] + h * acc;
            }
            f(&y_stage, &mut k[s]);
        }
        // 5th-order solution is stage 7's argument; k[6] = f at that point.
        y_next.copy_from_slice(&y_stage);

        // Embedded error: difference between 5th and 4th order solutions.
        let mut err_sq = 0.0;
        for i in 0..n {
            let e = h
                * (E[0] * k[0][i]
                    + E[2] * k[2][i]
                    + E[3] * k[3][i]
                    + E[4] * k[4][i]
                    + E[5] * k[5][i]
                    + E[6] * k[6][i]);
            let scale = cfg.abs_tol + cfg.rel_tol * y[i].abs().max(y_next[i].abs());
            err_sq += (e / scale) * (e / scale);
        }
        let err = (err_sq / n as f64).sqrt();

        if !err.is_finite() {
            saw_non_finite = true;
            h *= 0.1;
            continue;
        }

        if err <= 1.0 {
            // Accept; FSAL reuse of the last stage.
            t += h;
            std::mem::swap(y, &mut y_next);
            k.swap(0, 6);
            if stop(y) {
                return Ok(t);
            }
            saw_non_finite = false;
            let fac = (err.max(1e-16).powf(EXPO) / fac_old.powf(BETA) / SAFETY)
                .clamp(1.0 / FAC_MAX, 1.0 / FAC_MIN);
            h = (h / fac).min(cfg.max_step);
            fac_old = err.max(1e-4);
        } else {
            let fac = (err.powf(0.2) / SAFETY).min(1.0 / FAC_MIN);
            h /= fac;
        }
    }
    Ok(t)
}

// Error coefficients: b5 - b4 (k[1] has zero weight in both).
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];
