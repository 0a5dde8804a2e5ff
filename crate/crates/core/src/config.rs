//! Experiment configuration, loadable from TOML. Every key is optional and
//! falls back to the defaults below; units are SI unless the key says
//! otherwise.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::dynamics::{inertial_to_relative, Models, Scales, StateVector, Units, N};
use crate::error::{Error, Result};
use crate::integrator::IntegratorConfig;

/// Entry state as given: inertial speed and flight path angle,
/// planet-relative heading.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InitialState {
    pub altitude_m: f64,
    pub theta_deg: f64,
    pub phi_deg: f64,
    pub inertial_speed_m_s: f64,
    pub inertial_fpa_deg: f64,
    pub heading_deg: f64,
    /// ln(kg/m^3)
    pub zeta: f64,
}

impl Default for InitialState {
    fn default() -> Self {
        Self {
            altitude_m: 1_000_000.0,
            theta_deg: 190.05,
            phi_deg: -9.76,
            inertial_speed_m_s: 24_930.0,
            inertial_fpa_deg: -10.58,
            heading_deg: 45.0,
            zeta: -23.32,
        }
    }
}

impl InitialState {
    /// Dimensional planet-relative state.
    pub fn to_relative(&self, models: &Models) -> Result<StateVector> {
        let r = models.planet.radius + self.altitude_m;
        let phi = self.phi_deg.to_radians();
        let psi = self.heading_deg.to_radians();
        let (v, gamma) = inertial_to_relative(
            self.inertial_speed_m_s,
            self.inertial_fpa_deg.to_radians(),
            psi,
            r,
            phi,
            models.planet.omega,
        )?;
        Ok(StateVector {
            r,
            theta: self.theta_deg.to_radians(),
            phi,
            v,
            gamma,
            psi,
            zeta: self.zeta,
            units: Units::Dimensional,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TimeConfig {
    pub t_final_s: f64,
    pub grid_step_s: f64,
}

impl Default for TimeConfig {
    fn default() -> Self {
        Self {
            t_final_s: 780.0,
            grid_step_s: 10.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IntegratorSettings {
    pub rtol: f64,
    pub atol: f64,
    /// Nondimensional time; absent means unlimited.
    pub max_step: Option<f64>,
    pub max_steps: usize,
}

impl Default for IntegratorSettings {
    fn default() -> Self {
        let d = IntegratorConfig::default();
        Self {
            rtol: d.rtol,
            atol: d.atol,
            max_step: None,
            max_steps: d.max_steps,
        }
    }
}

impl IntegratorSettings {
    pub fn to_config(&self) -> IntegratorConfig {
        IntegratorConfig {
            rtol: self.rtol,
            atol: self.atol,
            max_step: self.max_step.unwrap_or(f64::INFINITY),
            max_steps: self.max_steps,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EigenSettings {
    pub starts: usize,
    pub seed: u64,
    pub dedup_angle_rad: f64,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for EigenSettings {
    fn default() -> Self {
        Self {
            starts: 100,
            seed: 20_240_601,
            dedup_angle_rad: 1e-3,
            tol: 1e-14,
            max_iter: 2000,
        }
    }
}

/// How the Monte Carlo standard deviations are chosen.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SigmaMode {
    /// The dimensional per-coordinate table below.
    Dimensional,
    /// One nondimensional variance shared by every coordinate.
    NondimensionalVariance,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MonteCarloSettings {
    pub samples: usize,
    pub seed: u64,
    pub sigma_mode: SigmaMode,
    pub sigma_r_m: f64,
    pub sigma_theta_deg: f64,
    pub sigma_phi_deg: f64,
    pub sigma_v_m_s: f64,
    pub sigma_gamma_deg: f64,
    pub sigma_psi_deg: f64,
    pub sigma_zeta: f64,
    pub nondimensional_variance: f64,
    /// Draws used for the energy-error time history (0 disables it).
    pub history_samples: usize,
}

impl Default for MonteCarloSettings {
    fn default() -> Self {
        Self {
            samples: 1000,
            seed: 7,
            sigma_mode: SigmaMode::Dimensional,
            sigma_r_m: 2.56,
            sigma_theta_deg: 5.73e-6,
            sigma_phi_deg: 5.73e-6,
            sigma_v_m_s: 1.52e-3,
            sigma_gamma_deg: 5.73e-6,
            sigma_psi_deg: 5.73e-6,
            sigma_zeta: 2e-6,
            nondimensional_variance: 1e-14,
            history_samples: 100,
        }
    }
}

impl MonteCarloSettings {
    /// Nondimensional standard deviation of each state component.
    pub fn nondimensional_sigmas(&self, scales: &Scales) -> [f64; N] {
        match self.sigma_mode {
            SigmaMode::NondimensionalVariance => [self.nondimensional_variance.sqrt(); N],
            SigmaMode::Dimensional => [
                self.sigma_r_m / scales.length_ref,
                self.sigma_theta_deg.to_radians(),
                self.sigma_phi_deg.to_radians(),
                self.sigma_v_m_s / scales.speed_ref,
                self.sigma_gamma_deg.to_radians(),
                self.sigma_psi_deg.to_radians(),
                self.sigma_zeta / scales.zeta_ref,
            ],
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DirectionSettings {
    /// Nondimensional perturbation norm.
    pub magnitude: f64,
    pub angles: usize,
    /// Seed of the orthogonal completion vectors.
    pub seed: u64,
}

impl Default for DirectionSettings {
    fn default() -> Self {
        Self {
            magnitude: 1e-6,
            angles: 25,
            seed: 11,
        }
    }
}

/// Taylor approximations compared by the experiments.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "STM")]
    Stm,
    #[serde(rename = "STT2")]
    Stt2,
    #[serde(rename = "STT3")]
    Stt3,
    #[serde(rename = "1-DSTT")]
    Dstt1,
    #[serde(rename = "3-DSTT")]
    Dstt3,
    #[serde(rename = "6-DSTT")]
    Dstt6,
    #[serde(rename = "7-DSTT")]
    Dstt7,
    #[serde(rename = "hoDSTT")]
    HoDstt,
    #[serde(rename = "sDSTT")]
    SDstt,
    #[serde(rename = "eps-qDSTT")]
    EpsQDstt,
    #[serde(rename = "ra-qDSTT")]
    RaQDstt,
}

impl Method {
    pub const ALL: [Method; 11] = [
        Method::Stm,
        Method::Stt2,
        Method::Stt3,
        Method::Dstt1,
        Method::Dstt3,
        Method::Dstt6,
        Method::Dstt7,
        Method::HoDstt,
        Method::SDstt,
        Method::EpsQDstt,
        Method::RaQDstt,
    ];

    /// The nine approximations compared in the Monte Carlo study.
    pub const DEFAULT: [Method; 9] = [
        Method::Stm,
        Method::Stt2,
        Method::Dstt1,
        Method::Dstt3,
        Method::Dstt6,
        Method::HoDstt,
        Method::SDstt,
        Method::EpsQDstt,
        Method::RaQDstt,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::Stm => "STM",
            Method::Stt2 => "STT2",
            Method::Stt3 => "STT3",
            Method::Dstt1 => "1-DSTT",
            Method::Dstt3 => "3-DSTT",
            Method::Dstt6 => "6-DSTT",
            Method::Dstt7 => "7-DSTT",
            Method::HoDstt => "hoDSTT",
            Method::SDstt => "sDSTT",
            Method::EpsQDstt => "eps-qDSTT",
            Method::RaQDstt => "ra-qDSTT",
        }
    }

    pub fn is_dstt(self) -> bool {
        !matches!(self, Method::Stm | Method::Stt2 | Method::Stt3)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::Config(format!("unknown method '{s}'")))
    }
}

/// Parses a comma-separated method list.
pub fn parse_methods(list: &str) -> Result<Vec<Method>> {
    list.split(',').filter(|s| !s.trim().is_empty()).map(str::parse).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub planet: crate::dynamics::PlanetModel,
    pub atmosphere: crate::dynamics::AtmosphereModel,
    pub vehicle: crate::dynamics::VehicleModel,
    pub initial_state: InitialState,
    pub time: TimeConfig,
    pub integrator: IntegratorSettings,
    pub eigen: EigenSettings,
    pub monte_carlo: MonteCarloSettings,
    pub direction_study: DirectionSettings,
    pub methods: Vec<Method>,
    /// Turns lift, drag and the density rate off.
    pub vacuum: bool,
    pub output_dir: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            planet: Default::default(),
            atmosphere: Default::default(),
            vehicle: Default::default(),
            initial_state: Default::default(),
            time: Default::default(),
            integrator: Default::default(),
            eigen: Default::default(),
            monte_carlo: Default::default(),
            direction_study: Default::default(),
            methods: Method::DEFAULT.to_vec(),
            vacuum: false,
            output_dir: PathBuf::from("out"),
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(s).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn models(&self) -> Models {
        Models {
            planet: self.planet,
            atmosphere: self.atmosphere,
            vehicle: self.vehicle,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.models().validate()?;
        self.integrator.to_config().validate()?;
        if !(self.time.t_final_s > 0.0 && self.time.grid_step_s > 0.0) {
            return Err(Error::Config("t_final_s and grid_step_s must be positive".into()));
        }
        if self.eigen.starts == 0 || !(self.eigen.dedup_angle_rad > 0.0) || !(self.eigen.tol > 0.0) {
            return Err(Error::Config("invalid eigen settings".into()));
        }
        if !(self.direction_study.magnitude > 0.0) || self.direction_study.angles < 2 {
            return Err(Error::Config("invalid direction study settings".into()));
        }
        Ok(())
    }

    /// SHA-256 of the canonical TOML serialization with the output
    /// directory blanked, hex encoded.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.output_dir = PathBuf::new();
        let text = c.to_toml_string().unwrap_or_default();
        let digest = Sha256::digest(text.as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip_through_toml() {
        let cfg = ExperimentConfig::default();
        let text = cfg.to_toml_string().unwrap();
        let back = ExperimentConfig::from_toml_str(&text).unwrap();
        assert_eq!(cfg, back);
        assert_eq!(cfg.hash(), back.hash());
    }

    #[test]
    fn partial_file_and_unknown_keys() {
        let cfg = ExperimentConfig::from_toml_str("methods = [\"STM\", \"hoDSTT\"]\n[monte_carlo]\nsamples = 10\n").unwrap();
        assert_eq!(cfg.monte_carlo.samples, 10);
        assert_eq!(cfg.methods, vec![Method::Stm, Method::HoDstt]);
        assert_eq!(cfg.time.t_final_s, 780.0);
        assert!(ExperimentConfig::from_toml_str("[time]\nbogus = 1\n").is_err());
        assert!(ExperimentConfig::from_toml_str("[time]\ngrid_step_s = -1.0\n").is_err());
    }

    #[test]
    fn table_sigmas_are_near_1e7_nondimensional() {
        let cfg = ExperimentConfig::default();
        let s = cfg.monte_carlo.nondimensional_sigmas(&Scales::new(&cfg.models()));
        for v in s {
            assert!(v > 0.5e-7 && v < 1.5e-7, "{v}");
        }
    }

    #[test]
    fn method_names_parse() {
        for m in Method::ALL {
            assert_eq!(m.name().parse::<Method>().unwrap(), m);
        }
        assert_eq!(parse_methods("STM, STT2").unwrap(), vec![Method::Stm, Method::Stt2]);
        assert!(parse_methods("nope").is_err());
    }
}
