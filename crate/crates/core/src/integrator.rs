//! Dormand-Prince 5(4) embedded Runge-Kutta integrator with step logging.
//!
//! Every accepted step size is recorded so the same discrete flow map can be
//! replayed later on a different initial condition ([`replay`]). Replaying
//! the step sequence of a variational integration makes the integrated
//! perturbed trajectory and the state transition tensors derivatives of one
//! and the same discrete map.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A first-order ODE system `y' = f(t, y)`.
pub trait OdeSystem {
    fn dim(&self) -> usize;
    fn rhs(&self, t: f64, y: &[f64], dy: &mut [f64]) -> Result<()>;
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegratorConfig {
    pub rtol: f64,
    pub atol: f64,
    /// Largest allowed step, in the system's time units.
    pub max_step: f64,
    pub max_steps: usize,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            rtol: 1e-12,
            atol: 1e-12,
            max_step: f64::INFINITY,
            max_steps: 1_000_000,
        }
    }
}

impl IntegratorConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.rtol > 0.0 && self.atol > 0.0 && self.max_step > 0.0 && self.max_steps > 0) {
            return Err(Error::Config(format!("invalid integrator config {self:?}")));
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct Solution {
    pub y: Vec<f64>,
    /// Accepted step sizes in order.
    pub steps: Vec<f64>,
    pub rejected: usize,
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

struct Workspace {
    k: [Vec<f64>; 7],
    tmp: Vec<f64>,
    y_new: Vec<f64>,
}

impl Workspace {
    fn new(n: usize) -> Self {
        Self {
            k: std::array::from_fn(|_| vec![0.0; n]),
            tmp: vec![0.0; n],
            y_new: vec![0.0; n],
        }
    }

    /// One Dormand-Prince step from `(t, y)` with `k[0] = f(t, y)` already
    /// filled. Leaves the 5th-order solution in `y_new` and `f(t+h, y_new)`
    /// in `k[6]`.
    fn step<S: OdeSystem + ?Sized>(&mut self, sys: &S, t: f64, y: &[f64], h: f64) -> Result<()> {
        let n = y.len();
        let Workspace { k, tmp, y_new } = self;
        let [k1, k2, k3, k4, k5, k6, k7] = k;
        for i in 0..n {
            tmp[i] = y[i] + h * A21 * k1[i];
        }
        sys.rhs(t + C2 * h, tmp, k2)?;
        for i in 0..n {
            tmp[i] = y[i] + h * (A31 * k1[i] + A32 * k2[i]);
        }
        sys.rhs(t + C3 * h, tmp, k3)?;
        for i in 0..n {
            tmp[i] = y[i] + h * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i]);
        }
        sys.rhs(t + C4 * h, tmp, k4)?;
        for i in 0..n {
            tmp[i] = y[i] + h * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i]);
        }
        sys.rhs(t + C5 * h, tmp, k5)?;
        for i in 0..n {
            tmp[i] = y[i]
                + h * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i] + A65 * k5[i]);
        }
        sys.rhs(t + h, tmp, k6)?;
        for i in 0..n {
            y_new[i] = y[i]
                + h * (A71 * k1[i] + A73 * k3[i] + A74 * k4[i] + A75 * k5[i] + A76 * k6[i]);
        }
        sys.rhs(t + h, y_new, k7)
    }

    fn error_norm(&self, y: &[f64], h: f64, cfg: &IntegratorConfig) -> f64 {
        let [k1, _, k3, k4, k5, k6, k7] = &self.k;
        let mut acc = 0.0;
        for i in 0..y.len() {
            let err = h
                * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            let sc = cfg.atol + cfg.rtol * y[i].abs().max(self.y_new[i].abs());
            acc += (err / sc) * (err / sc);
        }
        (acc / y.len() as f64).sqrt()
    }
}

fn rms_scaled(v: &[f64], y: &[f64], cfg: &IntegratorConfig) -> f64 {
    let acc: f64 = v
        .iter()
        .zip(y)
        .map(|(a, b)| {
            let s = a / (cfg.atol + cfg.rtol * b.abs());
            s * s
        })
        .sum();
    (acc / v.len() as f64).sqrt()
}

/// Hairer's starting step heuristic.
fn initial_step<S: OdeSystem + ?Sized>(sys: &S, t: f64, y: &[f64], f0: &[f64], dir: f64, cfg: &IntegratorConfig) -> Result<f64> {
    let d0 = rms_scaled(y, y, cfg);
    let d1 = rms_scaled(f0, y, cfg);
    let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    let y1: Vec<f64> = y.iter().zip(f0).map(|(a, b)| a + dir * h0 * b).collect();
    let mut f1 = vec![0.0; y.len()];
    sys.rhs(t + dir * h0, &y1, &mut f1)?;
    let diff: Vec<f64> = f1.iter().zip(f0).map(|(a, b)| a - b).collect();
    let d2 = rms_scaled(&diff, y, cfg) / h0;
    let h1 = if d1.max(d2) <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / d1.max(d2)).powf(0.2)
    };
    Ok((100.0 * h0).min(h1).min(cfg.max_step))
}

/// Adaptive integration from `t0` to `t1` (either direction).
pub fn integrate<S: OdeSystem + ?Sized>(sys: &S, t0: f64, y0: &[f64], t1: f64, cfg: &IntegratorConfig) -> Result<Solution> {
    let n = sys.dim();
    if y0.len() != n {
        return Err(Error::Dimension(format!("state has {} entries, system {}", y0.len(), n)));
    }
    let mut y = y0.to_vec();
    let mut steps = Vec::new();
    let mut rejected = 0;
    if t1 == t0 {
        return Ok(Solution { y, steps, rejected });
    }
    let dir = (t1 - t0).signum();
    let span = (t1 - t0).abs();
    let mut ws = Workspace::new(n);
    sys.rhs(t0, &y, &mut ws.k[0])?;
    let mut h = initial_step(sys, t0, &y, &ws.k[0], dir, cfg)?.min(span);
    let mut t = t0;
    let mut done = 0.0;
    loop {
        let remaining = span - done;
        if remaining <= 0.0 {
            break;
        }
        let last = h >= remaining * (1.0 - 1e-12);
        let h_try = if last { remaining } else { h };
        if h_try < 1e-14 * span.max(t.abs()) {
            return Err(Error::StepUnderflow { t, h: h_try });
        }
        if steps.len() >= cfg.max_steps {
            return Err(Error::TooManySteps { t, steps: steps.len() });
        }
        let step_ok = ws.step(sys, t, &y, dir * h_try);
        let err = match step_ok {
            Ok(()) => ws.error_norm(&y, h_try, cfg),
            // Trial stages left the domain; treat as a rejected step.
            Err(Error::Domain(_)) => f64::INFINITY,
            Err(e) => return Err(e),
        };
        if err <= 1.0 {
            steps.push(dir * h_try);
            done = if last { span } else { done + h_try };
            t = if last { t1 } else { t0 + dir * done };
            std::mem::swap(&mut y, &mut ws.y_new);
            let (head, tail) = ws.k.split_at_mut(6);
            head[0].copy_from_slice(&tail[0]);
            let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
            h = (h_try * factor).min(cfg.max_step);
        } else {
            rejected += 1;
            let factor = if err.is_finite() { (0.9 * err.powf(-0.2)).clamp(0.1, 0.9) } else { 0.25 };
            h = h_try * factor;
        }
    }
    Ok(Solution { y, steps, rejected })
}

/// Re-runs a recorded step sequence without error control.
pub fn replay<S: OdeSystem + ?Sized>(sys: &S, t0: f64, y0: &[f64], steps: &[f64]) -> Result<Vec<f64>> {
    let n = sys.dim();
    if y0.len() != n {
        return Err(Error::Dimension(format!("state has {} entries, system {}", y0.len(), n)));
    }
    let mut y = y0.to_vec();
    let mut ws = Workspace::new(n);
    let mut t = t0;
    sys.rhs(t, &y, &mut ws.k[0])?;
    for &h in steps {
        ws.step(sys, t, &y, h)?;
        std::mem::swap(&mut y, &mut ws.y_new);
        let (head, tail) = ws.k.split_at_mut(6);
        head[0].copy_from_slice(&tail[0]);
        t += h;
    }
    Ok(y)
}
