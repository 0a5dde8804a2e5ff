//! Aerocapture quantities of interest: specific orbital energy, semi-major
//! axis and apoapsis radius, with partials to third order.
//!
//! The orbital quantities use the inertial velocity rebuilt from the
//! planet-relative state (atmosphere co-rotation added back), and the
//! inertial flight path angle in the apoapsis formula.

use serde::{Deserialize, Serialize};

use crate::dynamics::{inertial_velocity, DynamicsModel, GAMMA, N, PHI, PSI, R, V};
use crate::error::{Error, Result};
use crate::jet::Jet;
use crate::scalar::Scalar;

/// Guard on `2 mu / r - V^2` (nondimensional) below which the apoapsis is
/// treated as undefined.
pub const CAPTURE_MARGIN: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum QoiKind {
    Energy,
    Apoapsis,
}

impl QoiKind {
    pub fn name(self) -> &'static str {
        match self {
            QoiKind::Energy => "energy",
            QoiKind::Apoapsis => "apoapsis",
        }
    }
}

/// Gravitational parameter and rotation rate in the units of the state.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OrbitFrame {
    pub mu: f64,
    pub omega: f64,
}

impl From<&DynamicsModel> for OrbitFrame {
    fn from(m: &DynamicsModel) -> Self {
        Self { mu: m.mu, omega: m.omega }
    }
}

/// Inertial speed squared and squared horizontal speed.
fn speeds<S: Scalar>(x: &[S; N], frame: OrbitFrame) -> (S, S) {
    let (up, horiz2) = inertial_velocity(x[V], x[GAMMA], x[PSI], x[R], x[PHI], frame.omega);
    (up * up + horiz2, horiz2)
}

pub fn energy<S: Scalar>(x: &[S; N], frame: OrbitFrame) -> S {
    let (v2, _) = speeds(x, frame);
    v2 * 0.5 - S::cst(frame.mu) / x[R]
}

/// Inertial specific energy plus the J2 part of the potential. Unlike the
/// two-body energy this is constant along vacuum arcs.
pub fn mechanical_energy(x: &[f64; N], model: &DynamicsModel) -> f64 {
    let s = x[PHI].sin();
    let j2 = model.mu * model.j2 * model.rp * model.rp * (3.0 * s * s - 1.0) / (2.0 * x[R].powi(3));
    energy(x, OrbitFrame::from(model)) + j2
}

/// `2 mu / r - V_I^2`; positive for a bound orbit.
pub fn capture_margin(x: &[f64; N], frame: OrbitFrame) -> f64 {
    let (v2, _) = speeds(x, frame);
    2.0 * frame.mu / x[R] - v2
}

pub fn semi_major_axis(x: &[f64; N], frame: OrbitFrame) -> Result<f64> {
    let margin = capture_margin(x, frame);
    if !(margin > 0.0) {
        return Err(Error::NotCaptured { margin, state: *x });
    }
    Ok(frame.mu / margin)
}

fn apoapsis_generic<S: Scalar>(x: &[S; N], frame: OrbitFrame) -> Result<S> {
    let xv: [f64; N] = std::array::from_fn(|i| x[i].value());
    let margin = capture_margin(&xv, frame);
    if !(margin > CAPTURE_MARGIN) {
        return Err(Error::NotCaptured { margin, state: xv });
    }
    let (up, horiz2) = inertial_velocity(x[V], x[GAMMA], x[PSI], x[R], x[PHI], frame.omega);
    let v2 = up * up + horiz2;
    let a = S::cst(frame.mu) / (S::cst(2.0 * frame.mu) / x[R] - v2);
    // e^2 = 1 - h^2/(mu a), written as (e cos nu)^2 + (e sin nu)^2 to avoid
    // cancellation near circular orbits
    let e_cos = x[R] * horiz2 * (1.0 / frame.mu) + (-1.0);
    let e_sin = x[R] * horiz2.sqrt() * up * (1.0 / frame.mu);
    let e2 = e_cos * e_cos + e_sin * e_sin;
    if e2.value() == 0.0 {
        return Ok(a);
    }
    Ok(a * (e2.sqrt() + 1.0))
}

pub fn apoapsis_radius(x: &[f64; N], frame: OrbitFrame) -> Result<f64> {
    apoapsis_generic(x, frame)
}

pub fn evaluate(kind: QoiKind, x: &[f64; N], frame: OrbitFrame) -> Result<f64> {
    match kind {
        QoiKind::Energy => Ok(energy(x, frame)),
        QoiKind::Apoapsis => apoapsis_radius(x, frame),
    }
}

/// A scalar quantity of interest and its partials at a reference state.
#[derive(Clone, Debug, PartialEq)]
pub struct QoiPartials {
    pub kind: QoiKind,
    pub order: usize,
    pub value: f64,
    pub eta1: Vec<f64>,
    /// Row-major `n x n`; empty when `order < 2`.
    pub eta2: Vec<f64>,
    /// Row-major `n x n x n`; empty when `order < 3`.
    pub eta3: Vec<f64>,
}

impl QoiPartials {
    pub fn derivs(&self) -> crate::tensor::Derivs<'_> {
        crate::tensor::Derivs {
            first: &self.eta1,
            second: &self.eta2,
            third: &self.eta3,
        }
    }
}

pub fn qoi_partials(x: &[f64; N], kind: QoiKind, order: usize, frame: OrbitFrame) -> Result<QoiPartials> {
    if !(1..=3).contains(&order) {
        return Err(Error::InsufficientOrder { needed: order, have: 3 });
    }
    let xj = Jet::seed(x);
    let q = match kind {
        QoiKind::Energy => energy(&xj, frame),
        QoiKind::Apoapsis => apoapsis_generic(&xj, frame)?,
    };
    let eta1 = (0..N).map(|i| q.d1(i)).collect();
    let mut eta2 = Vec::new();
    let mut eta3 = Vec::new();
    if order >= 2 {
        eta2 = (0..N * N).map(|k| q.d2(k / N, k % N)).collect();
    }
    if order >= 3 {
        eta3 = (0..N * N * N).map(|k| q.d3(k / (N * N), (k / N) % N, k % N)).collect();
    }
    Ok(QoiPartials {
        kind,
        order,
        value: q.value(),
        eta1,
        eta2,
        eta3,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const F: OrbitFrame = OrbitFrame { mu: 1.0, omega: 0.0 };

    fn state(r: f64, v: f64, gamma: f64) -> [f64; N] {
        [r, 0.3, 0.2, v, gamma, 0.7, -1.0]
    }

    #[test]
    fn energy_regimes() {
        let r = 1.2;
        assert!((energy(&state(r, (1.0 / r).sqrt(), 0.0), F) + 0.5 / r).abs() < 1e-15);
        assert!(energy(&state(r, (2.0 / r).sqrt(), 0.1), F).abs() < 1e-15);
        assert!(energy(&state(r, 1.1 * (2.0 / r).sqrt(), 0.1), F) > 0.0);
    }

    #[test]
    fn apoapsis_circular_and_parabolic() {
        let r = 1.05;
        let ra = apoapsis_radius(&state(r, (1.0 / r).sqrt(), 0.0), F).unwrap();
        assert!((ra - r).abs() < 1e-12);
        let err = apoapsis_radius(&state(r, (2.0 / r).sqrt(), 0.0), F);
        assert!(matches!(err, Err(Error::NotCaptured { .. })));
    }

    #[test]
    fn energy_partials_simple() {
        let x = state(1.1, 0.8, -0.1);
        let p = qoi_partials(&x, QoiKind::Energy, 3, F).unwrap();
        assert!((p.eta1[V] - 0.8).abs() < 1e-15);
        assert!((p.eta1[R] - 1.0 / 1.21).abs() < 1e-15);
        for i in [1, 2, 4, 5, 6] {
            assert_eq!(p.eta1[i], 0.0);
        }
        assert!((p.eta2[V * N + V] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn rotation_changes_energy() {
        let frame = OrbitFrame { mu: 1.0, omega: 0.01 };
        let mut x = state(1.1, 0.8, 0.0);
        x[PHI] = 0.0;
        x[PSI] = std::f64::consts::FRAC_PI_2;
        let e = energy(&x, frame);
        let vi: f64 = 0.8 + 0.011;
        assert!((e - (vi * vi / 2.0 - 1.0 / 1.1)).abs() < 1e-14);
    }
}
