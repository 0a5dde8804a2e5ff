//! Three-degree-of-freedom entry dynamics over a rotating oblate planet with
//! an exponential atmosphere.
//!
//! State ordering is `[r, theta, phi, V, gamma, psi, zeta]`. `phi` is the
//! angle whose cosine multiplies the east-west rate and which enters the J2
//! gravity terms (the latitude-like coordinate); `theta` is the other
//! angular coordinate. `psi` is the heading measured so that `sin(psi)` is
//! the eastward fraction of horizontal velocity, and `zeta = ln(rho)`.
//!
//! All the equations are written once, generically over [`Scalar`], and
//! evaluated either on `f64` or on [`Jet`] to obtain partial derivatives.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::jet::{Jet, NVARS};
use crate::scalar::Scalar;

/// Number of state components.
pub const N: usize = 7;

pub const R: usize = 0;
pub const THETA: usize = 1;
pub const PHI: usize = 2;
pub const V: usize = 3;
pub const GAMMA: usize = 4;
pub const PSI: usize = 5;
pub const ZETA: usize = 6;

/// Planet constants, SI units.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanetModel {
    /// Gravitational parameter [m^3/s^2].
    pub mu: f64,
    /// Equatorial radius [m].
    pub radius: f64,
    /// Rotation rate [rad/s].
    pub omega: f64,
    /// Second zonal harmonic.
    pub j2: f64,
}

impl PlanetModel {
    /// Published Uranus values.
    pub fn uranus() -> Self {
        Self {
            mu: 5.793939e15,
            radius: 25_559_000.0,
            omega: 1.01237e-4,
            j2: 3.343e-3,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.mu > 0.0 && self.radius > 0.0 && self.omega >= 0.0 && self.j2.is_finite()) {
            return Err(Error::Config(format!("invalid planet model {self:?}")));
        }
        Ok(())
    }
}

impl Default for PlanetModel {
    fn default() -> Self {
        Self::uranus()
    }
}

/// Exponential atmosphere, SI units.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AtmosphereModel {
    /// Reference density [kg/m^3].
    pub rho0: f64,
    /// Reference altitude [m].
    pub h0: f64,
    /// Scale height [m].
    pub scale_height: f64,
    /// Normalization of the log-density state.
    pub zeta_ref: f64,
}

impl AtmosphereModel {
    pub fn validate(&self) -> Result<()> {
        if !(self.rho0 > 0.0 && self.scale_height > 0.0 && self.zeta_ref > 0.0) {
            return Err(Error::Config(format!("invalid atmosphere model {self:?}")));
        }
        Ok(())
    }
}

impl Default for AtmosphereModel {
    fn default() -> Self {
        Self {
            rho0: 6.40e-3,
            h0: 0.0,
            scale_height: 54_720.0,
            zeta_ref: 20.0,
        }
    }
}

/// Exponential density at altitude `h` [m].
pub fn density(h: f64, atmo: &AtmosphereModel) -> f64 {
    atmo.rho0 * ((atmo.h0 - h) / atmo.scale_height).exp()
}

/// Vehicle aerodynamic constants.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VehicleModel {
    pub lift_to_drag: f64,
    /// Ballistic coefficient m / (C_D A) [kg/m^2].
    pub ballistic_coefficient: f64,
    /// Constant bank angle [deg].
    pub bank_angle_deg: f64,
}

impl VehicleModel {
    pub fn bank_angle(&self) -> f64 {
        self.bank_angle_deg.to_radians()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.ballistic_coefficient > 0.0 && self.lift_to_drag.is_finite()) {
            return Err(Error::Config(format!("invalid vehicle model {self:?}")));
        }
        Ok(())
    }
}

impl Default for VehicleModel {
    fn default() -> Self {
        Self {
            lift_to_drag: 0.25,
            ballistic_coefficient: 145.0,
            bank_angle_deg: 78.0,
        }
    }
}

/// Planet, atmosphere and vehicle bundled together.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Models {
    pub planet: PlanetModel,
    pub atmosphere: AtmosphereModel,
    pub vehicle: VehicleModel,
}

impl Models {
    pub fn validate(&self) -> Result<()> {
        self.planet.validate()?;
        self.atmosphere.validate()?;
        self.vehicle.validate()
    }
}

/// Reference quantities of the nondimensionalization.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Scales {
    /// [m]
    pub length_ref: f64,
    /// [s]
    pub time_ref: f64,
    /// [m/s]
    pub speed_ref: f64,
    pub zeta_ref: f64,
}

impl Scales {
    pub fn new(models: &Models) -> Self {
        let length_ref = models.planet.radius;
        let speed_ref = (models.planet.mu / length_ref).sqrt();
        Self {
            length_ref,
            time_ref: length_ref / speed_ref,
            speed_ref,
            zeta_ref: models.atmosphere.zeta_ref,
        }
    }

    /// Per-component factor such that `dimensional = factor * nondimensional`.
    pub fn state_factors(&self) -> [f64; N] {
        [
            self.length_ref,
            1.0,
            1.0,
            self.speed_ref,
            1.0,
            1.0,
            self.zeta_ref,
        ]
    }

    pub fn nondimensionalize(&self, x: &StateVector) -> StateVector {
        match x.units {
            Units::Nondimensional => *x,
            Units::Dimensional => {
                let f = self.state_factors();
                let a = x.to_array();
                StateVector::from_array(std::array::from_fn(|i| a[i] / f[i]), Units::Nondimensional)
            }
        }
    }

    pub fn redimensionalize(&self, x: &StateVector) -> StateVector {
        match x.units {
            Units::Dimensional => *x,
            Units::Nondimensional => {
                let f = self.state_factors();
                let a = x.to_array();
                StateVector::from_array(std::array::from_fn(|i| a[i] * f[i]), Units::Dimensional)
            }
        }
    }

    pub fn time_to_nondim(&self, t: f64) -> f64 {
        t / self.time_ref
    }

    pub fn time_to_dim(&self, tau: f64) -> f64 {
        tau * self.time_ref
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Units {
    Dimensional,
    Nondimensional,
}

/// Vehicle state `[r, theta, phi, V, gamma, psi, zeta]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StateVector {
    pub r: f64,
    pub theta: f64,
    pub phi: f64,
    /// Planet-relative speed.
    pub v: f64,
    pub gamma: f64,
    pub psi: f64,
    pub zeta: f64,
    pub units: Units,
}

impl StateVector {
    pub fn from_array(a: [f64; N], units: Units) -> Self {
        Self {
            r: a[R],
            theta: a[THETA],
            phi: a[PHI],
            v: a[V],
            gamma: a[GAMMA],
            psi: a[PSI],
            zeta: a[ZETA],
            units,
        }
    }

    pub fn to_array(&self) -> [f64; N] {
        [
            self.r, self.theta, self.phi, self.v, self.gamma, self.psi, self.zeta,
        ]
    }
}

/// Which part of the vector field to evaluate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Component {
    Full,
    /// Kinematics, gravity and rotation terms.
    Conservative,
    /// Lift- and drag-proportional terms plus the log-density rate.
    Dissipative,
}

/// The equations of motion in one consistent unit system.
///
/// [`DynamicsModel::nondimensional`] is what propagation uses;
/// [`DynamicsModel::dimensional`] evaluates the same equations in SI units.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DynamicsModel {
    pub mu: f64,
    pub rp: f64,
    pub omega: f64,
    pub j2: f64,
    pub scale_height: f64,
    /// Density is `exp(zeta_scale * zeta)` in kg/m^3.
    pub zeta_scale: f64,
    /// Drag acceleration is `drag_factor * rho * V^2`.
    pub drag_factor: f64,
    pub lift_to_drag: f64,
    pub cos_bank: f64,
    pub sin_bank: f64,
    pub aero: bool,
    min_speed: f64,
}

const COS_PHI_MIN: f64 = 1e-9;
const MIN_SPEED_ND: f64 = 1e-12;

impl DynamicsModel {
    pub fn nondimensional(models: &Models) -> Self {
        let s = Scales::new(models);
        let (sin_bank, cos_bank) = models.vehicle.bank_angle().sin_cos();
        Self {
            mu: 1.0,
            rp: 1.0,
            omega: models.planet.omega * s.time_ref,
            j2: models.planet.j2,
            scale_height: models.atmosphere.scale_height / s.length_ref,
            zeta_scale: models.atmosphere.zeta_ref,
            drag_factor: s.length_ref / (2.0 * models.vehicle.ballistic_coefficient),
            lift_to_drag: models.vehicle.lift_to_drag,
            cos_bank,
            sin_bank,
            aero: true,
            min_speed: MIN_SPEED_ND,
        }
    }

    pub fn dimensional(models: &Models) -> Self {
        let s = Scales::new(models);
        let (sin_bank, cos_bank) = models.vehicle.bank_angle().sin_cos();
        Self {
            mu: models.planet.mu,
            rp: models.planet.radius,
            omega: models.planet.omega,
            j2: models.planet.j2,
            scale_height: models.atmosphere.scale_height,
            zeta_scale: 1.0,
            drag_factor: 1.0 / (2.0 * models.vehicle.ballistic_coefficient),
            lift_to_drag: models.vehicle.lift_to_drag,
            cos_bank,
            sin_bank,
            aero: true,
            min_speed: MIN_SPEED_ND * s.speed_ref,
        }
    }

    /// Same model with lift, drag and the density rate switched off.
    pub fn without_aero(mut self) -> Self {
        self.aero = false;
        self
    }

    pub fn check_domain(&self, x: &[f64; N]) -> Result<()> {
        if !(x[R] > 0.0) {
            return Err(Error::Domain(format!("radius must be positive, got {}", x[R])));
        }
        if !(x[V] > self.min_speed) {
            return Err(Error::Domain(format!("speed too small: {}", x[V])));
        }
        if x[PHI].cos().abs() < COS_PHI_MIN {
            return Err(Error::Domain(format!("polar singularity at phi = {}", x[PHI])));
        }
        if x.iter().any(|c| !c.is_finite()) {
            return Err(Error::Domain(format!("non-finite state {x:?}")));
        }
        Ok(())
    }

    /// Radial and latitudinal gravity components.
    pub fn gravity<S: Scalar>(&self, r: S, phi: S) -> (S, S) {
        let (s, c) = (phi.sin(), phi.cos());
        let mu_r2 = r.powi(-2) * self.mu;
        let oblate = r.powi(-2) * (self.j2 * self.rp * self.rp);
        let g_r = mu_r2 * (oblate * (s.square() * -4.5 + 1.5) + 1.0);
        let g_phi = mu_r2 * oblate * (s * c) * 3.0;
        (g_r, g_phi)
    }

    pub fn density<S: Scalar>(&self, zeta: S) -> S {
        (zeta * self.zeta_scale).exp()
    }

    /// Lift and drag accelerations.
    pub fn aero_accels<S: Scalar>(&self, zeta: S, v: S) -> (S, S) {
        if !self.aero {
            return (S::cst(0.0), S::cst(0.0));
        }
        let drag = self.density(zeta) * v.square() * self.drag_factor;
        (drag * self.lift_to_drag, drag)
    }

    /// Conservative and dissipative parts of the vector field.
    pub fn eom_parts<S: Scalar>(&self, x: &[S; N]) -> ([S; N], [S; N]) {
        let zero = S::cst(0.0);
        let (r, phi, v, gamma, psi, zeta) = (x[R], x[PHI], x[V], x[GAMMA], x[PSI], x[ZETA]);
        let (sg, cg) = (gamma.sin(), gamma.cos());
        let (sp, cp) = (psi.sin(), psi.cos());
        let (sf, cf) = (phi.sin(), phi.cos());
        let tf = phi.tan();
        let tg = gamma.tan();
        let (g_r, g_phi) = self.gravity(r, phi);
        let inv_v = S::cst(1.0) / v;
        let inv_r = S::cst(1.0) / r;
        let om = self.omega;
        let om2_r_cf = r * cf * (om * om);

        let r_dot = v * sg;
        let theta_dot = v * cg * sp * inv_r / cf;
        let phi_dot = v * cg * cp * inv_r;

        let v_dot_c = -(g_r * sg) - g_phi * cg * cp + om2_r_cf * (sg * cf - cg * sf * cp);
        let gamma_dot_c = inv_v
            * ((v * v * inv_r - g_r) * cg
                + g_phi * sg * cp
                + v * cf * sp * (2.0 * om)
                + om2_r_cf * (cg * cf + sg * cp * sf));
        let psi_dot_c = inv_v
            * (v * v * inv_r * cg * sp * tf + g_phi * sp / cg
                - v * (tg * cp * cf - sf) * (2.0 * om)
                + om2_r_cf * sp * sf / cg);

        let conservative = [r_dot, theta_dot, phi_dot, v_dot_c, gamma_dot_c, psi_dot_c, zero];

        let dissipative = if self.aero {
            let (lift, drag) = self.aero_accels(zeta, v);
            [
                zero,
                zero,
                zero,
                -drag,
                lift * inv_v * self.cos_bank,
                lift * inv_v / cg * self.sin_bank,
                -(v * sg) * (1.0 / (self.scale_height * self.zeta_scale)),
            ]
        } else {
            [zero; N]
        };
        (conservative, dissipative)
    }

    pub fn eom_component<S: Scalar>(&self, x: &[S; N], which: Component) -> [S; N] {
        let (c, d) = self.eom_parts(x);
        match which {
            Component::Full => std::array::from_fn(|i| c[i] + d[i]),
            Component::Conservative => c,
            Component::Dissipative => d,
        }
    }

    /// State derivative.
    pub fn eom(&self, x: &[f64; N]) -> Result<[f64; N]> {
        self.check_domain(x)?;
        Ok(self.eom_component(x, Component::Full))
    }

    /// `(f_C, f_D)` with `f_C + f_D == eom(x)`.
    pub fn decompose_eom(&self, x: &[f64; N]) -> Result<([f64; N], [f64; N])> {
        self.check_domain(x)?;
        Ok(self.eom_parts(x))
    }

    /// Partials of the selected vector-field component up to `order` (1..=3).
    pub fn partials(&self, x: &[f64; N], order: usize, which: Component) -> Result<DynamicsPartials> {
        if !(1..=3).contains(&order) {
            return Err(Error::Domain(format!("partials order must be 1..=3, got {order}")));
        }
        self.check_domain(x)?;
        let jets = Jet::seed(x);
        let f = self.eom_component(&jets, which);
        Ok(DynamicsPartials::from_jets(&f, order))
    }

    /// Dynamic pressure `rho V^2 / 2` in this model's units (Pa for SI).
    pub fn dynamic_pressure(&self, x: &[f64; N]) -> f64 {
        if !self.aero {
            return 0.0;
        }
        0.5 * self.density(x[ZETA]) * x[V] * x[V]
    }

    /// Ratio of aerodynamic to gravitational acceleration magnitudes.
    pub fn accel_ratio(&self, x: &[f64; N]) -> f64 {
        let (lift, drag) = self.aero_accels(x[ZETA], x[V]);
        let (g_r, g_phi) = self.gravity(x[R], x[PHI]);
        (lift * lift + drag * drag).sqrt() / (g_r * g_r + g_phi * g_phi).sqrt()
    }
}

/// First, second and third partials of a vector field, dense row-major
/// (`a[i*n + j]`, `b[(i*n + j)*n + k]`, `c[((i*n + j)*n + k)*n + l]`).
#[derive(Clone, Debug, PartialEq)]
pub struct DynamicsPartials {
    pub order: usize,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub c: Vec<f64>,
}

impl DynamicsPartials {
    pub fn from_jets(f: &[Jet; NVARS], order: usize) -> Self {
        let n = NVARS;
        let a = (0..n * n).map(|k| f[k / n].d1(k % n)).collect();
        let mut b = Vec::new();
        let mut c = Vec::new();
        if order >= 2 {
            b = vec![0.0; n * n * n];
            for i in 0..n {
                for j in 0..n {
                    for k in j..n {
                        let v = f[i].d2(j, k);
                        b[(i * n + j) * n + k] = v;
                        b[(i * n + k) * n + j] = v;
                    }
                }
            }
        }
        if order >= 3 {
            c = vec![0.0; n * n * n * n];
            for i in 0..n {
                for j in 0..n {
                    for k in 0..n {
                        for l in 0..n {
                            c[((i * n + j) * n + k) * n + l] = f[i].d3(j, k, l);
                        }
                    }
                }
            }
        }
        Self { order, a, b, c }
    }
}

/// Inertial velocity split into the radial component and the squared
/// horizontal magnitude, from a planet-relative state.
///
/// The atmosphere co-rotates, contributing `omega * r * cos(phi)` eastward;
/// the heading `psi` stays planet-relative.
pub fn inertial_velocity<S: Scalar>(v: S, gamma: S, psi: S, r: S, phi: S, omega: f64) -> (S, S) {
    let w = r * phi.cos() * omega;
    let horiz = v * gamma.cos();
    let east = horiz * psi.sin() + w;
    let north = horiz * psi.cos();
    (v * gamma.sin(), east * east + north * north)
}

/// Planet-relative to inertial speed and flight path angle.
pub fn relative_to_inertial(v: f64, gamma: f64, psi: f64, r: f64, phi: f64, omega: f64) -> (f64, f64) {
    let (up, horiz2) = inertial_velocity(v, gamma, psi, r, phi, omega);
    let v_i = (up * up + horiz2).sqrt();
    (v_i, up.atan2(horiz2.sqrt()))
}

/// Inertial speed and flight path angle to planet-relative ones, keeping the
/// planet-relative heading `psi`. Inverse of [`relative_to_inertial`].
pub fn inertial_to_relative(v_inertial: f64, gamma_inertial: f64, psi: f64, r: f64, phi: f64, omega: f64) -> Result<(f64, f64)> {
    if !(v_inertial > 0.0) {
        return Err(Error::Domain(format!("inertial speed must be positive, got {v_inertial}")));
    }
    let w = omega * r * phi.cos();
    let up = v_inertial * gamma_inertial.sin();
    let horiz_i = v_inertial * gamma_inertial.cos();
    // |h (sin psi, cos psi) + (w, 0)| = horiz_i  =>  h^2 + 2 h w sin psi + w^2 = horiz_i^2
    let disc = (w * psi.sin()).powi(2) - w * w + horiz_i * horiz_i;
    if disc < 0.0 {
        return Err(Error::Domain("no planet-relative velocity for this heading".into()));
    }
    let horiz = -w * psi.sin() + disc.sqrt();
    let v = (horiz * horiz + up * up).sqrt();
    if !(v > 0.0) {
        return Err(Error::Domain("planet-relative speed is zero".into()));
    }
    Ok((v, up.atan2(horiz)))
}
