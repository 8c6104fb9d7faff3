//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any criterion fails.

mod common;

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use common::random_bundle;
use fim_core::channel::{FimGeometry, SurfaceShape};
use fim_core::experiments::*;
use fim_core::gain::*;
use fim_core::miso::alternating_optimize;
use fim_core::optimizers::{grid_oracle, migd_1d, optimize_surface_siso, pso_1d, PsoConfig};
use nalgebra::DVector;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn secs(d: Duration) -> f64 {
    d.as_secs_f64()
}

fn defaults(f: impl FnOnce(&mut ScenarioConfig)) -> ResolvedScenario {
    let mut c = ScenarioConfig::default();
    f(&mut c);
    c.resolve().expect("valid scenario")
}

fn closed_form_equivalence() -> Outcome {
    let start = Instant::now();
    let shapes = [(1, 1), (2, 1), (2, 2), (4, 2), (2, 4), (3, 2), (1, 8), (8, 1)];
    let lambda = 0.01;
    let mut worst: f64 = 0.0;
    for seed in 0..100u64 {
        let (r, k) = (1 + seed as usize % 3, 1 + (seed as usize / 3) % 3);
        let (n_y, n_z) = shapes[seed as usize % shapes.len()];
        let geom = FimGeometry::new(n_y, n_z, lambda, 3.0 * lambda).unwrap();
        let paths = random_bundle(seed, r, k, true);
        for n in 0..geom.num_elements() {
            let obj = PerElementObjective::new(&paths, &geom, n).unwrap();
            for i in 0..1000 {
                let d = -geom.d_max() + 2.0 * geom.d_max() * i as f64 / 999.0;
                let d = d.clamp(-geom.d_max(), geom.d_max());
                let direct = per_element_gain(&obj, d).unwrap();
                let closed =
                    per_element_gain_closed_form(&obj, d, IndexConvention::SteeringConsistent).unwrap();
                worst = worst.max((direct - closed).abs());
            }
        }
    }
    let t = start.elapsed();
    outcome(
        worst <= 1e-9 && t < Duration::from_secs(10),
        format!("max abs error {worst:.2e}, {:.1} s", secs(t)),
    )
}

fn phase_alignment_optimality() -> Outcome {
    let s = defaults(|_| {});
    let geom = &s.geometry;
    let (mut worst_identity, mut violations): (f64, usize) = (0.0, 0);
    for seed in 0..1000u64 {
        let paths = sample_scenario(&s, seed).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d: Vec<f64> = (0..4).map(|_| rng.random_range(-geom.d_max()..=geom.d_max())).collect();
        let shape = SurfaceShape::new(d, geom).unwrap();
        let w = DVector::from_fn(4, |_, _| {
            Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
        });

        let v = siso_coefficients(&paths, &shape, geom).unwrap();
        let u = miso_coefficients(&paths, &shape, &w, geom).unwrap();
        let siso_phases = optimal_phases_siso(&paths, &shape, geom).unwrap();
        let miso_phases = optimal_phases_miso(&paths, &shape, &w, geom).unwrap();
        let siso = cascaded_gain_siso(&paths, &shape, &siso_phases, geom).unwrap();
        let miso = cascaded_gain_miso(&paths, &shape, &miso_phases, &w, geom).unwrap();
        let siso_want = v.iter().map(|x| x.norm()).sum::<f64>().powi(2);
        let miso_want = u.iter().map(|x| x.norm()).sum::<f64>().powi(2);
        worst_identity = worst_identity
            .max((siso - siso_want).abs() / siso_want)
            .max((miso - miso_want).abs() / miso_want);

        for _ in 0..1000 {
            let p: Vec<f64> = (0..4).map(|_| rng.random_range(0.0..2.0 * PI)).collect();
            let p = PhaseProfile::from_phases(&p);
            if cascaded_gain_siso(&paths, &shape, &p, geom).unwrap() > siso {
                violations += 1;
            }
            if cascaded_gain_miso(&paths, &shape, &p, &w, geom).unwrap() > miso {
                violations += 1;
            }
        }
    }
    outcome(
        worst_identity <= 1e-10 && violations == 0,
        format!("identity rel error {worst_identity:.1e}, {violations} violations"),
    )
}

fn optimizer_vs_oracle() -> Outcome {
    let start = Instant::now();
    let s = defaults(|_| {});
    let geom = &s.geometry;
    let d_max = geom.d_max();
    let migd_cfg = SolverSettings::default().migd(geom.wavelength());
    let (mut pso_worst, mut pso_misses, mut migd_ok) = (f64::INFINITY, 0, 0);
    for i in 0..100u64 {
        let seed = 1000 + i;
        let n = (i % 4) as usize;
        let paths = sample_scenario(&s, seed).unwrap();
        let obj = PerElementObjective::new(&paths, geom, n).unwrap();
        let f = |d: f64| obj.value(d);
        let oracle = grid_oracle(f, d_max, 100_000).unwrap();
        let pso = pso_1d(f, d_max, &PsoConfig { seed: seed ^ n as u64, ..Default::default() });
        let ratio = pso.value / oracle.value;
        pso_worst = pso_worst.min(ratio);
        if ratio < 0.999 {
            pso_misses += 1;
        }
        let migd = migd_1d(f, &migd_cfg, d_max);
        if (migd.position - oracle.position).abs() / d_max <= 2e-4 {
            migd_ok += 1;
        }
    }
    let t = start.elapsed();
    outcome(
        pso_misses == 0 && migd_ok >= 95 && t < Duration::from_secs(60),
        format!(
            "PSO worst ratio {pso_worst:.6}, {pso_misses} misses; MIGD within 0.02%: {migd_ok}/100; {:.1} s",
            secs(t)
        ),
    )
}

struct DmaxRuns {
    sweeps: Vec<(usize, DmaxSweep)>,
    elapsed: Duration,
}

fn dmax_runs() -> DmaxRuns {
    let start = Instant::now();
    let sweeps = [2usize, 6]
        .iter()
        .map(|&n_y| {
            let s = defaults(|c| c.n_y = n_y);
            let n = s.geometry.num_elements();
            let setup = ExperimentSetup::new(s, SolverSettings::default(), 0, 500).unwrap();
            (n, run_gain_vs_dmax(&setup, &[1.0, 2.0, 3.0], &[MethodKind::Pso]).unwrap())
        })
        .collect();
    DmaxRuns { sweeps, elapsed: start.elapsed() }
}

fn fim_over_ris(runs: &DmaxRuns) -> Outcome {
    let mut pass = runs.elapsed < Duration::from_secs(300);
    let mut parts = Vec::new();
    for (n, sweep) in &runs.sweeps {
        for link in [Link::Siso, Link::Miso] {
            let gain_db = linear_to_db(sweep.mean(link, MethodKind::Pso, 3.0))
                - linear_to_db(sweep.ris_mean(link));
            pass &= gain_db >= 2.5 && sweep.seeds.len() == 500;
            parts.push(format!("N={n} {} +{gain_db:.2} dB", link.name()));
        }
    }
    outcome(pass, format!("{}; {:.0} s", parts.join(", "), secs(runs.elapsed)))
}

fn diminishing_returns(runs: &DmaxRuns) -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for (n, sweep) in &runs.sweeps {
        for link in [Link::Siso, Link::Miso] {
            let m = |d: f64| sweep.mean(link, MethodKind::Pso, d);
            let (first, last) = (m(1.0) - m(0.0), m(3.0) - m(2.0));
            pass &= last < first;
            parts.push(format!("N={n} {} {:.2}", link.name(), last / first));
        }
    }
    outcome(pass, format!("late/early increment ratio: {}", parts.join(", ")))
}

fn gain_grows_with_paths() -> Outcome {
    let setup = ExperimentSetup::new(defaults(|_| {}), SolverSettings::default(), 0, 500).unwrap();
    let sweep = run_gain_vs_paths(&setup, &[1, 2, 3, 4, 5], MethodKind::Pso).unwrap();
    let mut pass = sweep.seeds.len() == 500;
    let mut bounds = Vec::new();
    for link in [Link::Siso, Link::Miso] {
        for i in 0..4 {
            let lb = sweep.increase_lower_bound(link, i).unwrap();
            let mean = sweep.mean(link, i + 1).unwrap();
            pass &= lb >= 0.0;
            bounds.push(lb / mean);
        }
    }
    let worst = bounds.iter().copied().fold(f64::INFINITY, f64::min);
    outcome(
        pass,
        format!("smallest 95% lower bound on a step increase: {worst:+.3} of the mean"),
    )
}

fn monotone_convergence() -> Outcome {
    let s = defaults(|c| c.n_y = 6);
    let solver = SolverSettings::default();
    let geom = &s.geometry;
    let (mut non_monotone, mut unconverged, mut max_iter) = (0, 0, 0);
    for seed in 0..100u64 {
        let paths = sample_scenario(&s, seed).unwrap();
        let cfg = solver.alternating(MethodKind::Pso, seed, geom.wavelength());
        let r = alternating_optimize(&paths, geom, 4, s.power, &cfg).unwrap();
        if !r.trace.windows(2).all(|w| w[1] >= w[0] - 1e-12) {
            non_monotone += 1;
        }
        if !(r.converged && r.iterations <= 1000) {
            unconverged += 1;
        }
        max_iter = max_iter.max(r.iterations);
    }
    let mut worst_rel: f64 = 0.0;
    for seed in 0..100u64 {
        let paths = sample_scenario(&s, seed).unwrap();
        let cfg = solver.alternating(MethodKind::Pso, seed, geom.wavelength());
        let miso = alternating_optimize(&paths, geom, 1, 1.0, &cfg).unwrap();
        let siso = optimize_surface_siso(&paths, geom, &cfg.method).unwrap();
        worst_rel = worst_rel.max((miso.gain - siso.gain).abs() / siso.gain);
    }
    outcome(
        non_monotone == 0 && unconverged == 0 && worst_rel <= 1e-9,
        format!(
            "{non_monotone} non-monotone, {unconverged} unconverged, max {max_iter} iterations; M=1 vs SISO rel diff {worst_rel:.1e}"
        ),
    )
}

fn render_all(setup: &ExperimentSetup) -> Vec<(String, String)> {
    let mut tables: Vec<(&str, Table)> = vec![
        ("landscape", run_element_landscape(setup, setup.base_seed, 101).unwrap().table().clone()),
        (
            "gain-vs-dmax",
            run_gain_vs_dmax(setup, &[1.0, 3.0], &[MethodKind::Pso, MethodKind::Migd, MethodKind::Grid])
                .unwrap()
                .table()
                .clone(),
        ),
        ("gain-vs-paths", run_gain_vs_paths(setup, &[1, 2, 3], MethodKind::Pso).unwrap().table().clone()),
        ("converge", run_convergence(setup, MethodKind::Pso).unwrap().table().clone()),
    ];
    let spec = SweepSpec {
        parameter: SweepParameter::PsoParticles,
        values: vec![5, 20],
        dmax_wavelengths: vec![1.0, 3.0],
        tolerance: 1e-3,
        target_rate: 0.95,
        oracle_points: 10_000,
    };
    tables.push(("hyperparam", run_hyperparameter_sweep(setup, &spec).unwrap().table().clone()));

    let dir = tempfile::tempdir().unwrap();
    let mut out = Vec::new();
    for (name, table) in tables {
        for (ext, format) in [("csv", OutputFormat::Csv), ("json", OutputFormat::Json)] {
            let path = dir.path().join(format!("{name}.{ext}"));
            table.write(&path, format).unwrap();
            out.push((format!("{name}.{ext}"), std::fs::read_to_string(&path).unwrap()));
        }
    }
    out
}

fn determinism() -> Outcome {
    let setup = ExperimentSetup::new(defaults(|_| {}), SolverSettings::default(), 77, 8).unwrap();
    let parallel = with_threads(4, || render_all(&setup)).unwrap();
    let again = with_threads(4, || render_all(&setup)).unwrap();
    let serial = with_threads(1, || render_all(&setup)).unwrap();
    let mismatched: Vec<&str> = parallel
        .iter()
        .zip(&again)
        .zip(&serial)
        .filter(|((a, b), c)| a != b || a != c)
        .map(|((a, _), _)| a.0.as_str())
        .collect();
    outcome(
        mismatched.is_empty(),
        if mismatched.is_empty() {
            format!("{} files identical across reruns and thread counts", parallel.len())
        } else {
            format!("differing files: {}", mismatched.join(", "))
        },
    )
}

fn main() -> ExitCode {
    let mut all = true;
    let mut report = |id: u32, name: &str, o: Outcome| {
        let verdict = if o.pass { "PASS" } else { "FAIL" };
        println!("criterion {id} {name}: {verdict} ({})", o.detail);
        all &= o.pass;
    };
    report(1, "closed-form equivalence", closed_form_equivalence());
    report(2, "phase-alignment optimality", phase_alignment_optimality());
    report(3, "optimizer vs grid oracle", optimizer_vs_oracle());
    let runs = dmax_runs();
    report(4, "FIM over rigid RIS", fim_over_ris(&runs));
    report(5, "diminishing returns in morphing range", diminishing_returns(&runs));
    report(6, "gain grows with inbound paths", gain_grows_with_paths());
    report(7, "monotone alternating convergence", monotone_convergence());
    report(8, "determinism", determinism());
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
