//! One-dimensional deformation solvers and the SISO surface optimizer.
//!
//! Every solver maximizes a scalar objective over `[-d_max, d_max]`. The
//! SISO problem splits into one such search per element; the searches share
//! only read-only scenario data and each owns a seeded random stream, so
//! running them in parallel gives the same bits as running them in order.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{FimGeometry, PathBundle, SurfaceShape};
use crate::error::{FimError, Result};
use crate::gain::{cascaded_gain_siso, optimal_phases_siso, PerElementObjective, PhaseProfile};

/// Particle swarm hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PsoConfig {
    pub particles: usize,
    pub inertia: f64,
    /// Pull toward the swarm best.
    pub cognitive: f64,
    /// Pull toward the particle's own best.
    pub social: f64,
    pub iterations: usize,
    pub seed: u64,
}

impl Default for PsoConfig {
    fn default() -> Self {
        Self {
            particles: 20,
            inertia: 0.8,
            cognitive: 2.0,
            social: 2.0,
            iterations: 200,
            seed: 0,
        }
    }
}

impl PsoConfig {
    pub fn validate(&self) -> Result<()> {
        if self.particles < 2 {
            return Err(FimError::InvalidConfig("PSO needs at least 2 particles".into()));
        }
        if self.iterations == 0 {
            return Err(FimError::InvalidConfig("PSO needs at least 1 iteration".into()));
        }
        if !(self.inertia.is_finite() && self.cognitive >= 0.0 && self.social >= 0.0) {
            return Err(FimError::InvalidConfig(
                "PSO coefficients must be finite and non-negative".into(),
            ));
        }
        Ok(())
    }
}

/// Multi-interval gradient ascent hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MigdConfig {
    /// Number of sub-intervals the search range is split into.
    pub intervals: usize,
    /// Gradient steps per sub-interval.
    pub iterations: usize,
    /// Initial step length in metres; `None` means a tenth of a sub-interval.
    pub step: Option<f64>,
    /// Forward-difference offset in metres.
    pub fd_offset: f64,
}

impl Default for MigdConfig {
    fn default() -> Self {
        Self::for_wavelength(0.01)
    }
}

impl MigdConfig {
    /// Defaults with the finite-difference offset tied to the carrier wavelength.
    pub fn for_wavelength(wavelength: f64) -> Self {
        Self {
            intervals: 50,
            iterations: 60,
            step: None,
            fd_offset: wavelength * 1e-6,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.intervals == 0 || self.iterations == 0 {
            return Err(FimError::InvalidConfig(
                "MIGD needs at least one interval and one iteration".into(),
            ));
        }
        if !(self.fd_offset.is_finite() && self.fd_offset > 0.0) {
            return Err(FimError::InvalidConfig(
                "MIGD finite-difference offset must be positive".into(),
            ));
        }
        if let Some(step) = self.step {
            if !(step.is_finite() && step > 0.0) {
                return Err(FimError::InvalidConfig("MIGD step must be positive".into()));
            }
        }
        Ok(())
    }
}

/// Solver used for the per-element deformation searches.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "kind")]
pub enum SurfaceMethod {
    Pso(PsoConfig),
    Migd(MigdConfig),
    Grid { points: usize },
}

impl SurfaceMethod {
    pub fn name(&self) -> &'static str {
        match self {
            SurfaceMethod::Pso(_) => "pso",
            SurfaceMethod::Migd(_) => "migd",
            SurfaceMethod::Grid { .. } => "grid",
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            SurfaceMethod::Pso(cfg) => cfg.validate(),
            SurfaceMethod::Migd(cfg) => cfg.validate(),
            SurfaceMethod::Grid { points } if *points < 2 => Err(FimError::InvalidConfig(
                "grid search needs at least 2 points".into(),
            )),
            SurfaceMethod::Grid { .. } => Ok(()),
        }
    }

    /// Runs the 1-D search for element `element`. PSO streams are seeded
    /// with `seed ^ element`.
    pub fn solve<F>(&self, objective: F, d_max: f64, element: usize) -> Result<SearchOutcome>
    where
        F: Fn(f64) -> f64,
    {
        match self {
            SurfaceMethod::Pso(cfg) => {
                let cfg = PsoConfig {
                    seed: cfg.seed ^ element as u64,
                    ..*cfg
                };
                Ok(pso_1d(objective, d_max, &cfg))
            }
            SurfaceMethod::Migd(cfg) => Ok(migd_1d(objective, cfg, d_max)),
            SurfaceMethod::Grid { points } => grid_oracle(objective, d_max, *points),
        }
    }
}

/// Result of a 1-D search.
#[derive(Debug, Clone, PartialEq)]
pub struct SearchOutcome {
    pub position: f64,
    pub value: f64,
    /// Best value seen after each iteration (PSO), interval (MIGD) or sweep (grid).
    pub trace: Vec<f64>,
    pub evaluations: u64,
}

impl SearchOutcome {
    fn single_point<F: Fn(f64) -> f64>(objective: F, at: f64) -> Self {
        let value = objective(at);
        Self {
            position: at,
            value,
            trace: vec![value],
            evaluations: 1,
        }
    }
}

/// Particle swarm search on `[-d_max, d_max]`.
///
/// Particles start one per equal stratum of the range, the outer two on the
/// end points. Velocities are capped at the range width and a particle that
/// leaves the range is mirrored back with its velocity reversed. The swarm
/// best is refreshed once per iteration, after all particles have moved.
pub fn pso_1d<F>(objective: F, d_max: f64, cfg: &PsoConfig) -> SearchOutcome
where
    F: Fn(f64) -> f64,
{
    if d_max <= 0.0 {
        return SearchOutcome::single_point(objective, 0.0);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let q = cfg.particles.max(1);

    // One particle per equal stratum, with the outer two pinned to the ends.
    let width = 2.0 * d_max / q as f64;
    let mut position: Vec<f64> = (0..q)
        .map(|i| -d_max + width * (i as f64 + rng.random::<f64>()))
        .collect();
    position[0] = -d_max;
    position[q - 1] = d_max;
    let mut velocity: Vec<f64> = (0..q)
        .map(|_| rng.random_range(-d_max..=d_max))
        .collect();
    let mut own_best = position.clone();
    let mut own_value: Vec<f64> = position.iter().map(|&x| objective(x)).collect();
    let mut evaluations = q as u64;

    let (mut best, mut best_value) = (own_best[0], own_value[0]);
    for i in 1..q {
        if own_value[i] > best_value {
            best = own_best[i];
            best_value = own_value[i];
        }
    }

    let mut trace = Vec::with_capacity(cfg.iterations);
    for _ in 0..cfg.iterations {
        for i in 0..q {
            let r1: f64 = rng.random();
            let r2: f64 = rng.random();
            let x = position[i];
            let v = cfg.inertia * velocity[i]
                + cfg.cognitive * r1 * (best - x)
                + cfg.social * r2 * (own_best[i] - x);
            let mut v = v.clamp(-2.0 * d_max, 2.0 * d_max);
            let mut x = x + v;
            if x.abs() > d_max {
                // Mirror back into the range and reverse.
                x = (2.0 * d_max.copysign(x) - x).clamp(-d_max, d_max);
                v = -v;
            }
            velocity[i] = v;
            position[i] = x;

            let value = objective(x);
            evaluations += 1;
            if value > own_value[i] {
                own_value[i] = value;
                own_best[i] = x;
            }
        }
        for i in 0..q {
            if own_value[i] > best_value {
                best_value = own_value[i];
                best = own_best[i];
            }
        }
        trace.push(best_value);
    }

    SearchOutcome {
        position: best,
        value: best_value,
        trace,
        evaluations,
    }
}

/// Multi-interval gradient ascent on `[-d_max, d_max]`.
///
/// The range is split into `intervals` equal pieces. From each midpoint the
/// iterate moves along the sign of the forward-difference slope; a step that
/// fails to improve the objective is halved instead of taken. Iterates stay
/// inside their own piece. The best end point over all pieces wins.
pub fn migd_1d<F>(objective: F, cfg: &MigdConfig, d_max: f64) -> SearchOutcome
where
    F: Fn(f64) -> f64,
{
    if d_max <= 0.0 {
        return SearchOutcome::single_point(objective, 0.0);
    }
    let intervals = cfg.intervals.max(1);
    let width = 2.0 * d_max / intervals as f64;
    let xi = cfg.fd_offset;

    let mut best = f64::NAN;
    let mut best_value = f64::NEG_INFINITY;
    let mut evaluations = 0u64;
    let mut trace = Vec::with_capacity(intervals);

    for j in 0..intervals {
        let lo = -d_max + width * j as f64;
        let hi = if j + 1 == intervals {
            d_max
        } else {
            -d_max + width * (j + 1) as f64
        };
        let mut step = cfg.step.unwrap_or(width / 10.0);
        let mut x = 0.5 * (lo + hi);
        let mut fx = objective(x);
        evaluations += 1;

        for _ in 0..cfg.iterations {
            let slope = if x + xi <= d_max {
                (objective(x + xi) - fx) / xi
            } else {
                (fx - objective(x - xi)) / xi
            };
            evaluations += 1;
            if slope == 0.0 || !slope.is_finite() {
                break;
            }
            let candidate = (x + step * slope.signum()).clamp(lo, hi);
            let fc = objective(candidate);
            evaluations += 1;
            if fc > fx {
                x = candidate;
                fx = fc;
            } else {
                step *= 0.5;
            }
        }

        if fx > best_value {
            best_value = fx;
            best = x;
        }
        trace.push(best_value);
    }

    SearchOutcome {
        position: best,
        value: best_value,
        trace,
        evaluations,
    }
}

/// Exhaustive search on a uniform grid that includes both end points.
/// Ties go to the smallest deformation.
pub fn grid_oracle<F>(objective: F, d_max: f64, points: usize) -> Result<SearchOutcome>
where
    F: Fn(f64) -> f64,
{
    if points < 2 {
        return Err(FimError::InvalidConfig(format!(
            "grid search needs at least 2 points, got {points}"
        )));
    }
    let last = (points - 1) as f64;
    let mut best = -d_max;
    let mut best_value = f64::NEG_INFINITY;
    for i in 0..points {
        let x = if i + 1 == points {
            d_max
        } else {
            -d_max + 2.0 * d_max * (i as f64 / last)
        };
        let value = objective(x);
        if value > best_value {
            best_value = value;
            best = x;
        }
    }
    Ok(SearchOutcome {
        position: best,
        value: best_value,
        trace: vec![best_value],
        evaluations: points as u64,
    })
}

/// Solves every element's deformation problem with `method`.
///
/// The flat position `d_n = 0`, and `warm_start[n]` when given, are checked
/// as extra candidates and kept whenever they beat the solver's answer.
pub fn optimize_elements(
    objectives: &[PerElementObjective<'_>],
    method: &SurfaceMethod,
    warm_start: Option<&[f64]>,
) -> Result<Vec<SearchOutcome>> {
    method.validate()?;
    if let Some(ws) = warm_start {
        if ws.len() != objectives.len() {
            return Err(FimError::LengthMismatch {
                expected: objectives.len(),
                found: ws.len(),
            });
        }
    }
    objectives
        .par_iter()
        .enumerate()
        .map(|(n, obj)| {
            let d_max = obj.d_max();
            let mut outcome = method.solve(|d| obj.value(d), d_max, obj.index())?;
            let mut candidates = vec![0.0];
            if let Some(ws) = warm_start {
                candidates.push(ws[n].clamp(-d_max, d_max));
            }
            for d in candidates {
                let value = obj.value(d);
                outcome.evaluations += 1;
                if value > outcome.value {
                    outcome.value = value;
                    outcome.position = d;
                }
            }
            if let Some(last) = outcome.trace.last_mut() {
                *last = outcome.value;
            }
            Ok(outcome)
        })
        .collect()
}

/// Optimal surface shape and phases for a SISO link.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimizationResult {
    pub shape: SurfaceShape,
    pub phases: PhaseProfile,
    /// Channel gain `|h^H S g|²` at the returned shape and phases.
    pub gain: f64,
    /// `z_n(d*_n)` for every element.
    pub element_gains: Vec<f64>,
    /// `(Σ_n sqrt(best_n))²` after each solver iteration.
    pub trace: Vec<f64>,
    /// Objective evaluations spent across all elements.
    pub evaluations: u64,
}

pub(crate) fn aggregate_trace(outcomes: &[SearchOutcome]) -> Vec<f64> {
    let len = outcomes.iter().map(|o| o.trace.len()).max().unwrap_or(0);
    (0..len)
        .map(|t| {
            let root_sum: f64 = outcomes
                .iter()
                .map(|o| {
                    let v = o.trace.get(t).or(o.trace.last()).copied().unwrap_or(0.0);
                    v.max(0.0).sqrt()
                })
                .sum();
            root_sum * root_sum
        })
        .collect()
}

/// Jointly optimizes surface shape and phase shifts of a SISO link by
/// solving the `N` per-element deformation problems and co-phasing the result.
pub fn optimize_surface_siso(
    paths: &PathBundle,
    geom: &FimGeometry,
    method: &SurfaceMethod,
) -> Result<OptimizationResult> {
    let objectives = (0..geom.num_elements())
        .map(|n| PerElementObjective::new(paths, geom, n))
        .collect::<Result<Vec<_>>>()?;
    let outcomes = optimize_elements(&objectives, method, None)?;

    let d: Vec<f64> = outcomes.iter().map(|o| o.position).collect();
    let shape = SurfaceShape::new(d, geom)?;
    let phases = optimal_phases_siso(paths, &shape, geom)?;
    let gain = cascaded_gain_siso(paths, &shape, &phases, geom)?;
    Ok(OptimizationResult {
        element_gains: outcomes.iter().map(|o| o.value).collect(),
        trace: aggregate_trace(&outcomes),
        evaluations: outcomes.iter().map(|o| o.evaluations).sum(),
        shape,
        phases,
        gain,
    })
}
