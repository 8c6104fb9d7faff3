//! MRT beamforming and alternating optimization of beamformer, surface
//! shape and phase shifts for a multi-antenna BS.

use nalgebra::DVector;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::channel::{FimGeometry, PathBundle, SurfaceShape};
use crate::error::{FimError, Result};
use crate::gain::{
    cascaded_gain_miso, effective_row_channel, optimal_phases_miso, optimal_phases_siso,
    PerElementObjective, PhaseProfile,
};
use crate::optimizers::{optimize_elements, PsoConfig, SurfaceMethod};

/// Transmit beamformer with its power budget.
#[derive(Debug, Clone, PartialEq)]
pub struct Beamformer {
    pub w: DVector<Complex64>,
    pub power: f64,
}

impl Beamformer {
    pub fn norm_squared(&self) -> f64 {
        self.w.norm_squared()
    }
}

/// Maximal ratio transmission toward the effective channel `h^H S G`.
///
/// Always spends the full budget: `w = sqrt(P) c^H / ‖c‖`.
pub fn mrt(
    paths: &PathBundle,
    shape: &SurfaceShape,
    phases: &PhaseProfile,
    geom: &FimGeometry,
    m: usize,
    power: f64,
) -> Result<Beamformer> {
    if !(power.is_finite() && power > 0.0) {
        return Err(FimError::InvalidConfig(format!(
            "transmit power must be positive, got {power}"
        )));
    }
    let c = effective_row_channel(paths, shape, phases, geom, m)?;
    let norm = c.norm();
    if norm == 0.0 || !norm.is_finite() {
        return Err(FimError::Degenerate("effective channel is zero".into()));
    }
    let w = DVector::from_iterator(m, c.iter().map(|x| x.conj() * (power.sqrt() / norm)));
    Ok(Beamformer { w, power })
}

/// How the stopping threshold is compared against the per-iteration gain increase.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ConvergenceMetric {
    /// `gain[i+1] - gain[i] < ε`
    Absolute,
    /// `(gain[i+1] - gain[i]) / gain[i] < ε`
    Relative,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlternatingConfig {
    pub max_iterations: usize,
    pub threshold: f64,
    pub metric: ConvergenceMetric,
    /// Inner per-element solver; its seed drives the whole run.
    pub method: SurfaceMethod,
}

impl Default for AlternatingConfig {
    fn default() -> Self {
        Self {
            max_iterations: 1000,
            threshold: 1e-4,
            metric: ConvergenceMetric::Relative,
            method: SurfaceMethod::Pso(PsoConfig::default()),
        }
    }
}

impl AlternatingConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.threshold.is_finite() && self.threshold > 0.0) {
            return Err(FimError::InvalidConfig(
                "stopping threshold must be positive".into(),
            ));
        }
        if self.max_iterations == 0 {
            return Err(FimError::InvalidConfig(
                "need at least one outer iteration".into(),
            ));
        }
        self.method.validate()
    }

    fn increase_below_threshold(&self, previous: f64, current: f64) -> bool {
        let delta = current - previous;
        match self.metric {
            ConvergenceMetric::Relative if previous > 0.0 => delta / previous < self.threshold,
            _ => delta < self.threshold,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AlternatingResult {
    pub beamformer: Beamformer,
    pub shape: SurfaceShape,
    pub phases: PhaseProfile,
    pub gain: f64,
    /// Entry 0 is the flat-surface start; entry `i` the gain after outer iteration `i`.
    pub trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

impl AlternatingResult {
    /// Gain normalized by the transmit power.
    pub fn effective_gain(&self) -> f64 {
        self.gain / self.beamformer.power
    }
}

/// Alternates MRT beamforming with per-element shape optimization.
///
/// Starts from the flat surface with co-phased elements. Each outer
/// iteration computes MRT for the current shape and phases, re-optimizes
/// every element's deformation for that beamformer and re-aligns the
/// phases. A shape step that would lower the gain is discarded. The loop
/// stops when the gain increase falls below the threshold. The returned
/// beamformer is MRT for the final shape and phases.
pub fn alternating_optimize(
    paths: &PathBundle,
    geom: &FimGeometry,
    m: usize,
    power: f64,
    cfg: &AlternatingConfig,
) -> Result<AlternatingResult> {
    cfg.validate()?;
    if m == 0 {
        return Err(FimError::ZeroAntennas);
    }
    let mut shape = SurfaceShape::flat(geom);
    let mut phases = optimal_phases_siso(paths, &shape, geom)?;
    let w0 = mrt(paths, &shape, &phases, geom, m, power)?;
    let mut gain = cascaded_gain_miso(paths, &shape, &phases, &w0.w, geom)?;
    let mut trace = vec![gain];
    let mut converged = false;
    let mut iterations = 0;

    while iterations < cfg.max_iterations {
        let bf = mrt(paths, &shape, &phases, geom, m, power)?;
        let kept = cascaded_gain_miso(paths, &shape, &phases, &bf.w, geom)?;

        let objectives = (0..geom.num_elements())
            .map(|n| PerElementObjective::with_beamformer(paths, geom, n, &bf.w))
            .collect::<Result<Vec<_>>>()?;
        let outcomes = optimize_elements(&objectives, &cfg.method, Some(shape.as_slice()))?;
        let candidate_shape =
            SurfaceShape::new(outcomes.iter().map(|o| o.position).collect(), geom)?;
        let candidate_phases = optimal_phases_miso(paths, &candidate_shape, &bf.w, geom)?;
        let candidate = cascaded_gain_miso(paths, &candidate_shape, &candidate_phases, &bf.w, geom)?;

        let next = if candidate >= kept {
            shape = candidate_shape;
            phases = candidate_phases;
            candidate
        } else {
            kept
        };
        iterations += 1;
        trace.push(next);
        let stop = cfg.increase_below_threshold(gain, next);
        gain = next;
        if stop {
            converged = true;
            break;
        }
    }

    let beamformer = mrt(paths, &shape, &phases, geom, m, power)?;
    let gain = cascaded_gain_miso(paths, &shape, &phases, &beamformer.w, geom)?;
    Ok(AlternatingResult {
        beamformer,
        shape,
        phases,
        gain,
        trace,
        iterations,
        converged,
    })
}
