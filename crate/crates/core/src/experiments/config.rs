//! Scenario and solver configuration, plus the on-disk config file format.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::channel::FimGeometry;
use crate::error::{FimError, Result};
use crate::miso::{AlternatingConfig, ConvergenceMetric};
use crate::optimizers::{MigdConfig, PsoConfig, SurfaceMethod};

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(linear: f64) -> f64 {
    10.0 * linear.log10()
}

pub fn dbm_to_watts(dbm: f64) -> f64 {
    db_to_linear(dbm - 30.0)
}

/// Propagation and array parameters of a simulated link. Powers and losses
/// are kept in dB here and converted once by [`ScenarioConfig::resolve`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    /// BS–FIM distance in metres.
    pub bs_fim_distance: f64,
    /// FIM–UE distance in metres.
    pub fim_ue_distance: f64,
    /// Path loss at the reference distance, dB.
    pub reference_loss_db: f64,
    pub reference_distance: f64,
    pub exponent_bs_fim: f64,
    pub exponent_fim_ue: f64,
    pub wavelength: f64,
    /// Recorded in output metadata only.
    pub noise_power_dbm: f64,
    pub transmit_power_dbm: f64,
    pub paths_in: usize,
    pub paths_out: usize,
    pub antennas: usize,
    pub n_y: usize,
    pub n_z: usize,
    /// Morphing bound in wavelengths.
    pub dmax_wavelengths: f64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            bs_fim_distance: 50.0,
            fim_ue_distance: 5.0,
            reference_loss_db: -25.0,
            reference_distance: 1.0,
            exponent_bs_fim: 3.5,
            exponent_fim_ue: 2.0,
            wavelength: 0.01,
            noise_power_dbm: -80.0,
            transmit_power_dbm: 15.0,
            paths_in: 3,
            paths_out: 3,
            antennas: 4,
            n_y: 2,
            n_z: 2,
            dmax_wavelengths: 3.0,
        }
    }
}

impl ScenarioConfig {
    pub fn resolve(&self) -> Result<ResolvedScenario> {
        let positive = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(FimError::InvalidConfig(format!("{name} must be positive, got {v}")))
            }
        };
        positive("bs_fim_distance", self.bs_fim_distance)?;
        positive("fim_ue_distance", self.fim_ue_distance)?;
        positive("reference_distance", self.reference_distance)?;
        positive("wavelength", self.wavelength)?;
        for (name, v) in [
            ("reference_loss_db", self.reference_loss_db),
            ("exponent_bs_fim", self.exponent_bs_fim),
            ("exponent_fim_ue", self.exponent_fim_ue),
            ("noise_power_dbm", self.noise_power_dbm),
            ("transmit_power_dbm", self.transmit_power_dbm),
        ] {
            if !v.is_finite() {
                return Err(FimError::InvalidConfig(format!("{name} must be finite")));
            }
        }
        if !(self.dmax_wavelengths.is_finite() && self.dmax_wavelengths >= 0.0) {
            return Err(FimError::InvalidConfig(
                "dmax_wavelengths must be non-negative".into(),
            ));
        }
        for (name, v) in [
            ("paths_in", self.paths_in),
            ("paths_out", self.paths_out),
            ("antennas", self.antennas),
        ] {
            if v == 0 {
                return Err(FimError::InvalidConfig(format!("{name} must be at least 1")));
            }
        }
        let geometry = FimGeometry::new(
            self.n_y,
            self.n_z,
            self.wavelength,
            self.dmax_wavelengths * self.wavelength,
        )
        .map_err(|e| FimError::InvalidConfig(e.to_string()))?;

        let c0 = db_to_linear(self.reference_loss_db);
        Ok(ResolvedScenario {
            geometry,
            inbound_variance: c0
                * (self.bs_fim_distance / self.reference_distance).powf(-self.exponent_bs_fim),
            outbound_variance: c0
                * (self.fim_ue_distance / self.reference_distance).powf(-self.exponent_fim_ue),
            power: dbm_to_watts(self.transmit_power_dbm),
            noise_power: dbm_to_watts(self.noise_power_dbm),
            config: self.clone(),
        })
    }
}

/// A validated scenario with every dB quantity already in linear units.
#[derive(Debug, Clone, PartialEq)]
pub struct ResolvedScenario {
    pub geometry: FimGeometry,
    /// `ρ_R²`, variance of each BS–FIM path gain.
    pub inbound_variance: f64,
    /// `ρ_K²`, variance of each FIM–UE path gain.
    pub outbound_variance: f64,
    /// Transmit power in watts.
    pub power: f64,
    /// Noise power in watts (metadata only).
    pub noise_power: f64,
    pub config: ScenarioConfig,
}

impl ResolvedScenario {
    pub fn paths_in(&self) -> usize {
        self.config.paths_in
    }

    pub fn paths_out(&self) -> usize {
        self.config.paths_out
    }

    pub fn antennas(&self) -> usize {
        self.config.antennas
    }

    /// Same scenario with the morphing bound replaced (in wavelengths).
    pub fn with_dmax_wavelengths(&self, dmax_wavelengths: f64) -> Result<Self> {
        ScenarioConfig {
            dmax_wavelengths,
            ..self.config.clone()
        }
        .resolve()
    }

    pub fn with_config(&self, f: impl FnOnce(&mut ScenarioConfig)) -> Result<Self> {
        let mut cfg = self.config.clone();
        f(&mut cfg);
        cfg.resolve()
    }
}

/// Which 1-D solver to use for the deformation searches.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MethodKind {
    Pso,
    Migd,
    Grid,
}

impl MethodKind {
    pub fn name(&self) -> &'static str {
        match self {
            MethodKind::Pso => "pso",
            MethodKind::Migd => "migd",
            MethodKind::Grid => "grid",
        }
    }
}

impl std::str::FromStr for MethodKind {
    type Err = FimError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pso" => Ok(MethodKind::Pso),
            "migd" => Ok(MethodKind::Migd),
            "grid" => Ok(MethodKind::Grid),
            other => Err(FimError::InvalidConfig(format!("unknown method `{other}`"))),
        }
    }
}

/// Hyperparameters for every solver and for the alternating loop.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSettings {
    pub pso_particles: usize,
    pub pso_inertia: f64,
    pub pso_cognitive: f64,
    pub pso_social: f64,
    pub pso_iterations: usize,
    pub migd_intervals: usize,
    pub migd_iterations: usize,
    /// Initial MIGD step in metres; unset means a tenth of a sub-interval.
    pub migd_step: Option<f64>,
    /// Finite-difference offset in wavelengths.
    pub migd_fd_offset_wavelengths: f64,
    pub grid_points: usize,
    pub max_iterations: usize,
    pub threshold: f64,
    pub convergence: ConvergenceMetric,
}

impl Default for SolverSettings {
    fn default() -> Self {
        let pso = PsoConfig::default();
        let migd = MigdConfig::for_wavelength(1.0);
        let alt = AlternatingConfig::default();
        Self {
            pso_particles: pso.particles,
            pso_inertia: pso.inertia,
            pso_cognitive: pso.cognitive,
            pso_social: pso.social,
            pso_iterations: pso.iterations,
            migd_intervals: migd.intervals,
            migd_iterations: migd.iterations,
            migd_step: migd.step,
            migd_fd_offset_wavelengths: migd.fd_offset,
            grid_points: 10_000,
            max_iterations: alt.max_iterations,
            threshold: alt.threshold,
            convergence: alt.metric,
        }
    }
}

impl SolverSettings {
    pub fn pso(&self, seed: u64) -> PsoConfig {
        PsoConfig {
            particles: self.pso_particles,
            inertia: self.pso_inertia,
            cognitive: self.pso_cognitive,
            social: self.pso_social,
            iterations: self.pso_iterations,
            seed,
        }
    }

    pub fn migd(&self, wavelength: f64) -> MigdConfig {
        MigdConfig {
            intervals: self.migd_intervals,
            iterations: self.migd_iterations,
            step: self.migd_step,
            fd_offset: self.migd_fd_offset_wavelengths * wavelength,
        }
    }

    pub fn method(&self, kind: MethodKind, seed: u64, wavelength: f64) -> SurfaceMethod {
        match kind {
            MethodKind::Pso => SurfaceMethod::Pso(self.pso(seed)),
            MethodKind::Migd => SurfaceMethod::Migd(self.migd(wavelength)),
            MethodKind::Grid => SurfaceMethod::Grid {
                points: self.grid_points,
            },
        }
    }

    pub fn alternating(&self, kind: MethodKind, seed: u64, wavelength: f64) -> AlternatingConfig {
        AlternatingConfig {
            max_iterations: self.max_iterations,
            threshold: self.threshold,
            metric: self.convergence,
            method: self.method(kind, seed, wavelength),
        }
    }

    pub fn validate(&self, wavelength: f64) -> Result<()> {
        for kind in [MethodKind::Pso, MethodKind::Migd, MethodKind::Grid] {
            self.method(kind, 0, wavelength).validate()?;
        }
        self.alternating(MethodKind::Pso, 0, wavelength).validate()
    }
}

/// Contents of a config file: every section and key is optional.
///
/// ```toml
/// seed = 7
/// trials = 200
///
/// [scenario]
/// n_y = 6
/// dmax_wavelengths = 2.0
///
/// [solver]
/// pso_iterations = 300
/// ```
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConfigFile {
    pub seed: Option<u64>,
    pub trials: Option<usize>,
    pub method: Option<MethodKind>,
    pub scenario: ScenarioConfig,
    pub solver: SolverSettings,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| FimError::InvalidConfig(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            FimError::InvalidConfig(format!("cannot read {}: {e}", path.display()))
        })?;
        Self::parse(&text)
    }
}
