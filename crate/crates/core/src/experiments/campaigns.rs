//! Monte Carlo campaigns behind the CLI subcommands.
//!
//! Every campaign is a pure function of the scenario, the solver settings
//! and the seed list. Trials run as independent rayon jobs and are merged
//! in seed order.

use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::Serialize;

use crate::channel::{FimGeometry, PathBundle, SurfaceShape};
use crate::error::{FimError, Result};
use crate::experiments::config::{linear_to_db, MethodKind, ResolvedScenario, SolverSettings};
use crate::experiments::sampling::sample_scenario;
use crate::experiments::table::Table;
use crate::gain::{cascaded_gain_siso, optimal_phases_siso, PerElementObjective};
use crate::miso::{alternating_optimize, AlternatingResult};
use crate::optimizers::{grid_oracle, optimize_surface_siso, SearchOutcome, SurfaceMethod};

pub const TOOL_VERSION: &str = concat!("fim-core ", env!("CARGO_PKG_VERSION"));

/// Everything a campaign needs besides its own sweep parameters.
#[derive(Debug, Clone)]
pub struct ExperimentSetup {
    pub scenario: ResolvedScenario,
    pub solver: SolverSettings,
    pub base_seed: u64,
    pub trials: usize,
    /// Fail on degenerate trials instead of skipping them.
    pub strict: bool,
}

impl ExperimentSetup {
    pub fn new(
        scenario: ResolvedScenario,
        solver: SolverSettings,
        base_seed: u64,
        trials: usize,
    ) -> Result<Self> {
        if trials == 0 {
            return Err(FimError::InvalidConfig("need at least one trial".into()));
        }
        solver.validate(scenario.geometry.wavelength())?;
        Ok(Self {
            scenario,
            solver,
            base_seed,
            trials,
            strict: false,
        })
    }

    pub fn seeds(&self) -> Vec<u64> {
        (0..self.trials as u64)
            .map(|t| self.base_seed.wrapping_add(t))
            .collect()
    }

    /// Links to simulate: SISO always, MISO when the BS has several antennas.
    pub fn links(&self) -> Vec<Link> {
        if self.scenario.antennas() > 1 {
            vec![Link::Siso, Link::Miso]
        } else {
            vec![Link::Siso]
        }
    }

    fn metadata(&self, table: &mut Table, experiment: &str, seeds: &[u64]) {
        table.meta("tool", TOOL_VERSION);
        table.meta("experiment", experiment);
        table.meta("scenario", json(&self.scenario.config));
        table.meta("solver", json(&self.solver));
        table.meta(
            "linear",
            format!(
                "inbound_variance={}; outbound_variance={}; power_w={}; noise_w={}",
                self.scenario.inbound_variance,
                self.scenario.outbound_variance,
                self.scenario.power,
                self.scenario.noise_power
            ),
        );
        table.meta("base_seed", self.base_seed.to_string());
        table.meta("seeds", join(seeds));
    }

    fn run_trials<T, F>(&self, job: F) -> Result<(Vec<T>, Vec<u64>)>
    where
        T: Send,
        F: Fn(u64) -> Result<T> + Sync,
    {
        let results: Vec<(u64, Result<T>)> = self
            .seeds()
            .into_par_iter()
            .map(|seed| (seed, job(seed)))
            .collect();
        let mut kept = Vec::with_capacity(results.len());
        let mut skipped = Vec::new();
        for (seed, r) in results {
            match r {
                Ok(v) => kept.push(v),
                Err(FimError::Degenerate(_)) if !self.strict => skipped.push(seed),
                Err(e) => return Err(e),
            }
        }
        if kept.is_empty() {
            return Err(FimError::Degenerate("every trial was degenerate".into()));
        }
        Ok((kept, skipped))
    }
}

fn json<T: Serialize>(value: &T) -> String {
    serde_json::to_string(value).expect("config serializes")
}

fn join(values: &[u64]) -> String {
    values
        .iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Link {
    Siso,
    Miso,
}

impl Link {
    pub fn name(&self) -> &'static str {
        match self {
            Link::Siso => "siso",
            Link::Miso => "miso",
        }
    }
}

/// Sample mean and (n − 1) standard deviation.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Rigid-surface SISO gain: flat shape with co-phased elements.
pub fn rigid_ris_gain_siso(paths: &PathBundle, geom: &FimGeometry) -> Result<f64> {
    let flat = SurfaceShape::flat(geom);
    let phases = optimal_phases_siso(paths, &flat, geom)?;
    cascaded_gain_siso(paths, &flat, &phases, geom)
}

fn optimized_gain(
    link: Link,
    scenario: &ResolvedScenario,
    solver: &SolverSettings,
    paths: &PathBundle,
    kind: MethodKind,
    seed: u64,
) -> Result<(f64, usize)> {
    let geom = &scenario.geometry;
    match link {
        Link::Siso => {
            let method = solver.method(kind, seed, geom.wavelength());
            Ok((optimize_surface_siso(paths, geom, &method)?.gain, 1))
        }
        Link::Miso => {
            let cfg = solver.alternating(kind, seed, geom.wavelength());
            let r = alternating_optimize(paths, geom, scenario.antennas(), scenario.power, &cfg)?;
            Ok((r.effective_gain(), r.iterations))
        }
    }
}

/// One (seed, link, morphing bound) cell of a Monte Carlo campaign.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub seed: u64,
    pub link: Link,
    pub dmax_wavelengths: f64,
    /// Gain of the rigid surface (flat shape) on the same channel.
    pub ris_gain: f64,
    /// Optimized gain per method. MISO gains are divided by the transmit power.
    pub gains: Vec<(MethodKind, f64)>,
    /// Outer iterations per method (1 for SISO).
    pub iterations: Vec<(MethodKind, usize)>,
    pub wall_time: Duration,
}

impl TrialRecord {
    pub fn gain(&self, method: MethodKind) -> Option<f64> {
        self.gains.iter().find(|(m, _)| *m == method).map(|(_, g)| *g)
    }
}

/// Gains versus morphing range.
#[derive(Debug, Clone)]
pub struct DmaxSweep {
    pub dmax_wavelengths: Vec<f64>,
    pub methods: Vec<MethodKind>,
    pub links: Vec<Link>,
    /// Grouped by trial, then link, then morphing bound.
    pub records: Vec<TrialRecord>,
    pub seeds: Vec<u64>,
    pub skipped: Vec<u64>,
    table: Table,
}

impl DmaxSweep {
    fn select(&self, link: Link, dmax: f64) -> impl Iterator<Item = &TrialRecord> {
        self.records
            .iter()
            .filter(move |r| r.link == link && r.dmax_wavelengths == dmax)
    }

    /// Per-trial gains for one arm, in seed order.
    pub fn gains(&self, link: Link, method: MethodKind, dmax_wavelengths: f64) -> Vec<f64> {
        self.select(link, dmax_wavelengths)
            .filter_map(|r| r.gain(method))
            .collect()
    }

    pub fn ris_gains(&self, link: Link) -> Vec<f64> {
        self.select(link, 0.0).map(|r| r.ris_gain).collect()
    }

    pub fn mean(&self, link: Link, method: MethodKind, dmax_wavelengths: f64) -> f64 {
        mean_std(&self.gains(link, method, dmax_wavelengths)).0
    }

    pub fn ris_mean(&self, link: Link) -> f64 {
        mean_std(&self.ris_gains(link)).0
    }

    pub fn table(&self) -> &Table {
        &self.table
    }
}

/// Sweeps the morphing bound for every method and link on paired channels.
/// The rigid surface (`d_max = 0`) is always part of the grid.
pub fn run_gain_vs_dmax(
    setup: &ExperimentSetup,
    dmax_wavelengths: &[f64],
    methods: &[MethodKind],
) -> Result<DmaxSweep> {
    if methods.is_empty() {
        return Err(FimError::InvalidConfig("no methods selected".into()));
    }
    let mut grid: Vec<f64> = dmax_wavelengths.to_vec();
    if grid.iter().any(|d| !(d.is_finite() && *d >= 0.0)) {
        return Err(FimError::InvalidConfig(
            "morphing bounds must be non-negative".into(),
        ));
    }
    grid.push(0.0);
    grid.sort_by(f64::total_cmp);
    grid.dedup();

    let scenarios = grid
        .iter()
        .map(|&d| setup.scenario.with_dmax_wavelengths(d))
        .collect::<Result<Vec<_>>>()?;
    let links = setup.links();

    let (per_trial, skipped) = setup.run_trials(|seed| {
        let paths = sample_scenario(&setup.scenario, seed)?;
        let mut out = Vec::with_capacity(links.len() * grid.len());
        for &link in &links {
            let mut ris = f64::NAN;
            for (&dmax, scenario) in grid.iter().zip(&scenarios) {
                let start = Instant::now();
                let mut gains = Vec::with_capacity(methods.len());
                let mut iterations = Vec::with_capacity(methods.len());
                if dmax == 0.0 {
                    let (g, it) =
                        optimized_gain(link, scenario, &setup.solver, &paths, MethodKind::Pso, seed)?;
                    ris = match link {
                        Link::Siso => rigid_ris_gain_siso(&paths, &scenario.geometry)?,
                        Link::Miso => g,
                    };
                    for &m in methods {
                        gains.push((m, ris));
                        iterations.push((m, it));
                    }
                } else {
                    for &m in methods {
                        let (g, it) = optimized_gain(link, scenario, &setup.solver, &paths, m, seed)?;
                        gains.push((m, g));
                        iterations.push((m, it));
                    }
                }
                out.push(TrialRecord {
                    seed,
                    link,
                    dmax_wavelengths: dmax,
                    ris_gain: ris,
                    gains,
                    iterations,
                    wall_time: start.elapsed(),
                });
            }
        }
        Ok(out)
    })?;
    let records: Vec<TrialRecord> = per_trial.into_iter().flatten().collect();
    let seeds: Vec<u64> = setup
        .seeds()
        .into_iter()
        .filter(|s| !skipped.contains(s))
        .collect();

    let mut sweep = DmaxSweep {
        dmax_wavelengths: grid,
        methods: methods.to_vec(),
        links,
        records,
        seeds,
        skipped,
        table: Table::new([
            "link",
            "n",
            "method",
            "dmax_wavelengths",
            "dmax_m",
            "trials",
            "mean_gain",
            "std_gain",
            "mean_gain_db",
            "ris_mean_gain",
            "gain_over_ris_db",
        ]),
    };

    let mut table = std::mem::replace(&mut sweep.table, Table::new(Vec::<String>::new()));
    setup.metadata(&mut table, "gain-vs-dmax", &sweep.seeds);
    table.meta("skipped_seeds", join(&sweep.skipped));
    table.meta("gain_note", "miso rows report gain divided by transmit power");
    let n = setup.scenario.geometry.num_elements();
    let wavelength = setup.scenario.geometry.wavelength();
    for &link in &sweep.links {
        let ris_mean = sweep.ris_mean(link);
        for &method in &sweep.methods {
            for &dmax in &sweep.dmax_wavelengths {
                let gains = sweep.gains(link, method, dmax);
                let (mean, std) = mean_std(&gains);
                table.push(vec![
                    link.name().into(),
                    n.into(),
                    method.name().into(),
                    dmax.into(),
                    (dmax * wavelength).into(),
                    gains.len().into(),
                    mean.into(),
                    std.into(),
                    linear_to_db(mean).into(),
                    ris_mean.into(),
                    (linear_to_db(mean) - linear_to_db(ris_mean)).into(),
                ]);
            }
        }
    }
    sweep.table = table;
    Ok(sweep)
}

/// Gains versus the number of BS–FIM paths.
#[derive(Debug, Clone)]
pub struct PathSweep {
    pub paths_in: Vec<usize>,
    pub links: Vec<Link>,
    /// `gains[link][r]` holds one value per kept trial, in seed order.
    pub gains: Vec<Vec<Vec<f64>>>,
    pub seeds: Vec<u64>,
    pub skipped: Vec<u64>,
    table: Table,
}

impl PathSweep {
    pub fn table(&self) -> &Table {
        &self.table
    }

    pub fn mean(&self, link: Link, paths_in: usize) -> Option<f64> {
        let l = self.links.iter().position(|&x| x == link)?;
        let r = self.paths_in.iter().position(|&x| x == paths_in)?;
        Some(mean_std(&self.gains[l][r]).0)
    }

    /// One-sided 95 % lower confidence bound on the paired mean increase
    /// from `paths_in[i]` to `paths_in[i + 1]`.
    pub fn increase_lower_bound(&self, link: Link, i: usize) -> Option<f64> {
        let l = self.links.iter().position(|&x| x == link)?;
        let (a, b) = (self.gains[l].get(i)?, self.gains[l].get(i + 1)?);
        let diffs: Vec<f64> = a.iter().zip(b).map(|(x, y)| y - x).collect();
        let (mean, std) = mean_std(&diffs);
        Some(mean - 1.645 * std / (diffs.len() as f64).sqrt())
    }
}

/// Sweeps the inbound path count with everything else fixed. Trials are
/// paired: with the same seed, a larger path count only appends paths.
pub fn run_gain_vs_paths(
    setup: &ExperimentSetup,
    paths_in: &[usize],
    method: MethodKind,
) -> Result<PathSweep> {
    let mut grid = paths_in.to_vec();
    grid.sort_unstable();
    grid.dedup();
    if grid.first() == Some(&0) || grid.is_empty() {
        return Err(FimError::InvalidConfig(
            "path counts must be at least 1".into(),
        ));
    }
    let scenarios = grid
        .iter()
        .map(|&r| setup.scenario.with_config(|c| c.paths_in = r))
        .collect::<Result<Vec<_>>>()?;
    let links = setup.links();

    let (per_trial, skipped) = setup.run_trials(|seed| {
        let mut out = vec![Vec::with_capacity(grid.len()); links.len()];
        for scenario in &scenarios {
            let paths = sample_scenario(scenario, seed)?;
            for (l, &link) in links.iter().enumerate() {
                out[l].push(optimized_gain(link, scenario, &setup.solver, &paths, method, seed)?.0);
            }
        }
        Ok(out)
    })?;

    let mut gains = vec![vec![Vec::with_capacity(per_trial.len()); grid.len()]; links.len()];
    for trial in &per_trial {
        for (l, per_r) in trial.iter().enumerate() {
            for (r, g) in per_r.iter().enumerate() {
                gains[l][r].push(*g);
            }
        }
    }
    let seeds: Vec<u64> = setup
        .seeds()
        .into_iter()
        .filter(|s| !skipped.contains(s))
        .collect();

    let mut table = Table::new([
        "link",
        "method",
        "paths_in",
        "trials",
        "mean_gain",
        "std_gain",
        "stderr",
        "mean_gain_db",
    ]);
    setup.metadata(&mut table, "gain-vs-paths", &seeds);
    table.meta("skipped_seeds", join(&skipped));
    table.meta("gain_note", "miso rows report gain divided by transmit power");
    for (l, link) in links.iter().enumerate() {
        for (r, &count) in grid.iter().enumerate() {
            let values = &gains[l][r];
            let (mean, std) = mean_std(values);
            table.push(vec![
                link.name().into(),
                method.name().into(),
                count.into(),
                values.len().into(),
                mean.into(),
                std.into(),
                (std / (values.len() as f64).sqrt()).into(),
                linear_to_db(mean).into(),
            ]);
        }
    }

    Ok(PathSweep {
        paths_in: grid,
        links,
        gains,
        seeds,
        skipped,
        table,
    })
}

/// Per-element gain curves and the optima found by each solver.
#[derive(Debug, Clone)]
pub struct Landscape {
    /// `curves[n]` is the list of `(d, z_n(d))` samples.
    pub curves: Vec<Vec<(f64, f64)>>,
    pub pso: Vec<SearchOutcome>,
    pub migd: Vec<SearchOutcome>,
    pub grid: Vec<SearchOutcome>,
    table: Table,
}

impl Landscape {
    pub fn table(&self) -> &Table {
        &self.table
    }
}

/// Tabulates `z_n(d_n)` on `points` deformations for every element of one
/// seeded channel and marks the PSO, MIGD and grid-search optima.
pub fn run_element_landscape(
    setup: &ExperimentSetup,
    seed: u64,
    points: usize,
) -> Result<Landscape> {
    if points < 2 {
        return Err(FimError::InvalidConfig("need at least 2 curve points".into()));
    }
    let scenario = &setup.scenario;
    let geom = &scenario.geometry;
    let paths = sample_scenario(scenario, seed)?;
    let wavelength = geom.wavelength();
    let d_max = geom.d_max();
    let n_elements = geom.num_elements();

    let solve = |method: SurfaceMethod| -> Result<Vec<SearchOutcome>> {
        (0..n_elements)
            .into_par_iter()
            .map(|n| {
                let obj = PerElementObjective::new(&paths, geom, n)?;
                method.solve(|d| obj.value(d), d_max, n)
            })
            .collect()
    };
    let pso = solve(setup.solver.method(MethodKind::Pso, seed, wavelength))?;
    let migd = solve(setup.solver.method(MethodKind::Migd, seed, wavelength))?;
    let grid = solve(setup.solver.method(MethodKind::Grid, seed, wavelength))?;

    let mut curves = Vec::with_capacity(n_elements);
    for n in 0..n_elements {
        let obj = PerElementObjective::new(&paths, geom, n)?;
        let curve: Vec<(f64, f64)> = (0..points)
            .map(|i| {
                let d = if i + 1 == points {
                    d_max
                } else {
                    -d_max + 2.0 * d_max * i as f64 / (points - 1) as f64
                };
                (d, obj.value(d))
            })
            .collect();
        curves.push(curve);
    }

    let mut table = Table::new(["element", "kind", "d_m", "d_wavelengths", "z"]);
    setup.metadata(&mut table, "landscape", &[seed]);
    for n in 0..n_elements {
        for &(d, z) in &curves[n] {
            table.push(vec![n.into(), "curve".into(), d.into(), (d / wavelength).into(), z.into()]);
        }
        for (kind, outcome) in [("pso", &pso[n]), ("migd", &migd[n]), ("grid", &grid[n])] {
            table.push(vec![
                n.into(),
                kind.into(),
                outcome.position.into(),
                (outcome.position / wavelength).into(),
                outcome.value.into(),
            ]);
        }
    }

    Ok(Landscape {
        curves,
        pso,
        migd,
        grid,
        table,
    })
}

/// Hyperparameter swept by [`run_hyperparameter_sweep`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParameter {
    MigdIntervals,
    PsoParticles,
}

impl SweepParameter {
    pub fn name(&self) -> &'static str {
        match self {
            SweepParameter::MigdIntervals => "migd_intervals",
            SweepParameter::PsoParticles => "pso_particles",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub parameter: SweepParameter,
    pub values: Vec<usize>,
    pub dmax_wavelengths: Vec<f64>,
    /// Relative objective shortfall against the grid oracle that still counts as solved.
    pub tolerance: f64,
    /// Fraction of elements that must be solved for a setting to count as sufficient.
    pub target_rate: f64,
    pub oracle_points: usize,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        if self.values.is_empty() || self.values.contains(&0) {
            return Err(FimError::InvalidConfig(
                "sweep values must be positive".into(),
            ));
        }
        if self.dmax_wavelengths.is_empty()
            || self
                .dmax_wavelengths
                .iter()
                .any(|d| !(d.is_finite() && *d > 0.0))
        {
            return Err(FimError::InvalidConfig(
                "sweep morphing bounds must be positive".into(),
            ));
        }
        if self.tolerance.is_nan() || self.tolerance < 0.0 {
            return Err(FimError::InvalidConfig("tolerance must be >= 0".into()));
        }
        if !(0.0..=1.0).contains(&self.target_rate) {
            return Err(FimError::InvalidConfig("target rate must lie in [0, 1]".into()));
        }
        if self.oracle_points < 2 {
            return Err(FimError::InvalidConfig("oracle needs at least 2 points".into()));
        }
        Ok(())
    }
}

/// Success rates of each hyperparameter value per morphing range.
#[derive(Debug, Clone)]
pub struct HyperparameterSweep {
    pub spec: SweepSpec,
    /// Sorted, de-duplicated values of the swept parameter.
    pub values: Vec<usize>,
    pub dmax_wavelengths: Vec<f64>,
    /// `solved[d][v][sample]`
    pub solved: Vec<Vec<Vec<bool>>>,
    table: Table,
}

impl HyperparameterSweep {
    pub fn table(&self) -> &Table {
        &self.table
    }

    pub fn success_rate(&self, d: usize, v: usize) -> f64 {
        let s = &self.solved[d][v];
        s.iter().filter(|&&x| x).count() as f64 / s.len() as f64
    }

    /// Smallest value whose success rate reaches the target, per morphing range.
    pub fn minimal_setting(&self, d: usize) -> Option<usize> {
        (0..self.values.len())
            .find(|&v| self.success_rate(d, v) >= self.spec.target_rate)
            .map(|v| self.values[v])
    }
}

/// For every morphing range and every value of the swept hyperparameter,
/// counts the seeded elements where the solver comes within `tolerance` of
/// the grid oracle. Sample `i` uses element `i mod N` of the channel drawn
/// with seed `base_seed + i`.
pub fn run_hyperparameter_sweep(
    setup: &ExperimentSetup,
    spec: &SweepSpec,
) -> Result<HyperparameterSweep> {
    spec.validate()?;
    let mut values = spec.values.clone();
    values.sort_unstable();
    values.dedup();
    let dmax_grid = spec.dmax_wavelengths.clone();
    let scenarios = dmax_grid
        .iter()
        .map(|&d| setup.scenario.with_dmax_wavelengths(d))
        .collect::<Result<Vec<_>>>()?;
    let n_elements = setup.scenario.geometry.num_elements();

    let (per_sample, _) = setup.run_trials(|seed| {
        let index = (seed.wrapping_sub(setup.base_seed) % n_elements as u64) as usize;
        let paths = sample_scenario(&setup.scenario, seed)?;
        let mut out = Vec::with_capacity(scenarios.len());
        for scenario in &scenarios {
            let geom = &scenario.geometry;
            let obj = PerElementObjective::new(&paths, geom, index)?;
            let f = |d: f64| obj.value(d);
            let oracle = grid_oracle(f, geom.d_max(), spec.oracle_points)?.value;
            let mut row = Vec::with_capacity(values.len());
            for &v in &values {
                let method = match spec.parameter {
                    SweepParameter::MigdIntervals => SurfaceMethod::Migd(crate::optimizers::MigdConfig {
                        intervals: v,
                        ..setup.solver.migd(geom.wavelength())
                    }),
                    SweepParameter::PsoParticles => SurfaceMethod::Pso(crate::optimizers::PsoConfig {
                        particles: v,
                        ..setup.solver.pso(seed)
                    }),
                };
                let found = method.solve(f, geom.d_max(), index)?.value;
                row.push(spec.tolerance.is_infinite() || found >= oracle * (1.0 - spec.tolerance));
            }
            out.push(row);
        }
        Ok(out)
    })?;

    let mut solved = vec![vec![Vec::with_capacity(per_sample.len()); values.len()]; dmax_grid.len()];
    for sample in &per_sample {
        for (d, row) in sample.iter().enumerate() {
            for (v, &ok) in row.iter().enumerate() {
                solved[d][v].push(ok);
            }
        }
    }

    let mut sweep = HyperparameterSweep {
        spec: spec.clone(),
        values,
        dmax_wavelengths: dmax_grid,
        solved,
        table: Table::new([
            "parameter",
            "dmax_wavelengths",
            "setting",
            "samples",
            "success_rate",
            "minimal",
        ]),
    };
    let mut table = std::mem::replace(&mut sweep.table, Table::new(Vec::<String>::new()));
    setup.metadata(&mut table, "hyperparam", &setup.seeds());
    table.meta(
        "criterion",
        format!(
            "value >= oracle * (1 - {}) on at least {} of samples; oracle grid {} points",
            spec.tolerance, spec.target_rate, spec.oracle_points
        ),
    );
    for d in 0..sweep.dmax_wavelengths.len() {
        let minimal = sweep.minimal_setting(d);
        for v in 0..sweep.values.len() {
            table.push(vec![
                spec.parameter.name().into(),
                sweep.dmax_wavelengths[d].into(),
                sweep.values[v].into(),
                sweep.solved[d][v].len().into(),
                sweep.success_rate(d, v).into(),
                (minimal == Some(sweep.values[v])).into(),
            ]);
        }
    }
    sweep.table = table;
    Ok(sweep)
}

/// Alternating-optimization traces for seeded MISO channels.
#[derive(Debug, Clone)]
pub struct ConvergenceRun {
    pub results: Vec<(u64, AlternatingResult)>,
    pub skipped: Vec<u64>,
    table: Table,
}

impl ConvergenceRun {
    pub fn table(&self) -> &Table {
        &self.table
    }
}

/// Runs the alternating optimizer once per trial and records every trace.
pub fn run_convergence(setup: &ExperimentSetup, method: MethodKind) -> Result<ConvergenceRun> {
    let scenario = &setup.scenario;
    let geom = &scenario.geometry;
    let (results, skipped) = setup.run_trials(|seed| {
        let paths = sample_scenario(scenario, seed)?;
        let cfg = setup.solver.alternating(method, seed, geom.wavelength());
        let r = alternating_optimize(&paths, geom, scenario.antennas(), scenario.power, &cfg)?;
        Ok((seed, r))
    })?;

    let mut table = Table::new([
        "seed",
        "iteration",
        "gain",
        "effective_gain",
        "effective_gain_db",
        "converged",
    ]);
    let seeds: Vec<u64> = results.iter().map(|(s, _)| *s).collect();
    setup.metadata(&mut table, "converge", &seeds);
    table.meta("skipped_seeds", join(&skipped));
    table.meta("method", method.name());
    for (seed, r) in &results {
        for (i, &g) in r.trace.iter().enumerate() {
            let eff = g / scenario.power;
            table.push(vec![
                (*seed).into(),
                i.into(),
                g.into(),
                eff.into(),
                linear_to_db(eff).into(),
                r.converged.into(),
            ]);
        }
    }
    Ok(ConvergenceRun {
        results,
        skipped,
        table,
    })
}

/// Wall time is kept out of tables; this summarizes it for logs.
pub fn total_wall_time(records: &[TrialRecord]) -> Duration {
    records.iter().map(|r| r.wall_time).sum()
}
