mod common;

use common::{rel_err, Oracle};
use fim_core::experiments::*;
use fim_core::optimizers::grid_oracle;
use fim_core::FimError;

fn scenario(f: impl FnOnce(&mut ScenarioConfig)) -> ResolvedScenario {
    let mut c = ScenarioConfig::default();
    f(&mut c);
    c.resolve().unwrap()
}

fn quick_solver() -> SolverSettings {
    SolverSettings {
        pso_iterations: 60,
        grid_points: 2000,
        ..Default::default()
    }
}

fn setup(s: ResolvedScenario, trials: usize) -> ExperimentSetup {
    ExperimentSetup::new(s, quick_solver(), 100, trials).unwrap()
}

#[test]
fn unit_distance_variance_is_the_reference_loss() {
    let s = scenario(|c| {
        c.bs_fim_distance = 1.0;
        c.exponent_bs_fim = 7.3;
    });
    assert!(rel_err(s.inbound_variance, 10f64.powf(-2.5)) < 1e-12);
}

#[test]
fn sampled_gain_variance_matches_path_loss() {
    let s = scenario(|c| {
        c.paths_in = 100;
        c.paths_out = 100;
    });
    let want_in = 10f64.powf(-2.5) * 50f64.powf(-3.5);
    let want_out = 10f64.powf(-2.5) * 5f64.powf(-2.0);
    assert!(rel_err(s.inbound_variance, want_in) < 1e-12);
    assert!(rel_err(s.outbound_variance, want_out) < 1e-12);
    let (mut sum_in, mut sum_out, mut count) = (0.0, 0.0, 0.0);
    for seed in 0..1000 {
        let b = sample_scenario(&s, seed).unwrap();
        sum_in += b.inbound().iter().map(|p| p.gain.norm_sqr()).sum::<f64>();
        sum_out += b.outbound().iter().map(|p| p.gain.norm_sqr()).sum::<f64>();
        count += 100.0;
    }
    assert!(rel_err(sum_in / count, want_in) < 0.03);
    assert!(rel_err(sum_out / count, want_out) < 0.03);
}

#[test]
fn power_units_round_trip() {
    for db in [-80.0, -25.0, 0.0, 15.0, 33.3] {
        assert!((linear_to_db(db_to_linear(db)) - db).abs() < 1e-12);
    }
    assert!(rel_err(dbm_to_watts(15.0), 10f64.powf(-1.5)) < 1e-12);
    let s = scenario(|_| {});
    assert!(rel_err(s.power, 10f64.powf(-1.5)) < 1e-12);
    assert!(rel_err(s.noise_power, 1e-11) < 1e-12);
}

#[test]
fn invalid_scenarios_are_rejected() {
    let bad: [fn(&mut ScenarioConfig); 6] = [
        |c| c.bs_fim_distance = 0.0,
        |c| c.wavelength = -1.0,
        |c| c.paths_in = 0,
        |c| c.antennas = 0,
        |c| c.n_y = 0,
        |c| c.dmax_wavelengths = -0.5,
    ];
    for f in bad {
        let mut c = ScenarioConfig::default();
        f(&mut c);
        assert!(matches!(c.resolve(), Err(FimError::InvalidConfig(_) | FimError::InvalidGeometry(_))));
    }
    let s = scenario(|_| {});
    assert!(ExperimentSetup::new(s, quick_solver(), 0, 0).is_err());
}

#[test]
fn config_file_sections_are_optional_and_strict() {
    let f = ConfigFile::parse("seed = 4\n[scenario]\nn_y = 6\n[solver]\npso_particles = 30\n").unwrap();
    assert_eq!(f.seed, Some(4));
    assert_eq!(f.scenario.n_y, 6);
    assert_eq!(f.scenario.n_z, 2);
    assert_eq!(f.solver.pso_particles, 30);
    assert_eq!(ConfigFile::parse("").unwrap(), ConfigFile::default());
    assert!(ConfigFile::parse("[scenario]\nmystery = 1\n").is_err());
    assert!(ConfigFile::parse("method = \"annealing\"\n").is_err());
}

#[test]
fn single_path_landscape_is_flat() {
    let s = setup(scenario(|c| {
        c.paths_in = 1;
        c.paths_out = 1;
    }), 1);
    let l = run_element_landscape(&s, 5, 101).unwrap();
    for curve in &l.curves {
        let first = curve[0].1;
        assert!(curve.iter().all(|&(_, z)| rel_err(z, first) < 1e-12));
    }
}

#[test]
fn landscape_optima_agree_and_differ_across_elements() {
    let s = ExperimentSetup::new(scenario(|_| {}), SolverSettings::default(), 0, 1).unwrap();
    let mut distinct = 0;
    for seed in 0..20 {
        let l = run_element_landscape(&s, seed, 201).unwrap();
        for n in 0..4 {
            assert!(l.pso[n].value >= l.grid[n].value * 0.999);
            assert!(l.migd[n].value >= l.grid[n].value * 0.999);
        }
        let mut argmax: Vec<f64> = l.grid.iter().map(|o| o.position).collect();
        argmax.sort_by(f64::total_cmp);
        argmax.dedup_by(|a, b| (*a - *b).abs() < 1e-4);
        if argmax.len() == 4 {
            distinct += 1;
        }
        let t = l.table();
        assert_eq!(t.columns, ["element", "kind", "d_m", "d_wavelengths", "z"]);
        assert_eq!(t.rows.len(), 4 * (201 + 3));
    }
    assert!(distinct >= 15, "{distinct}");
}

#[test]
fn dmax_sweep_anchors_on_the_rigid_surface() {
    let s = setup(scenario(|_| {}), 12);
    let sweep = run_gain_vs_dmax(&s, &[1.0, 2.0, 3.0], &[MethodKind::Pso, MethodKind::Grid]).unwrap();
    assert_eq!(sweep.dmax_wavelengths, [0.0, 1.0, 2.0, 3.0]);
    for link in [Link::Siso, Link::Miso] {
        for m in [MethodKind::Pso, MethodKind::Grid] {
            assert_eq!(sweep.gains(link, m, 0.0), sweep.ris_gains(link));
        }
        let ris = sweep.ris_gains(link);
        for d in [1.0, 2.0, 3.0] {
            let g = sweep.gains(link, MethodKind::Grid, d);
            assert!(g.iter().zip(&ris).all(|(a, b)| a >= b));
        }
    }
    // Nested ranges with the rigid surface always available: SISO means rise.
    let means: Vec<f64> = [0.0, 1.0, 2.0, 3.0]
        .iter()
        .map(|&d| sweep.mean(Link::Siso, MethodKind::Grid, d))
        .collect();
    assert!(means.windows(2).all(|w| w[1] >= w[0]));
    // SISO rigid gain is the aligned flat-surface gain.
    for (seed, ris) in sweep.seeds.iter().zip(sweep.ris_gains(Link::Siso)) {
        let paths = sample_scenario(&s.scenario, *seed).unwrap();
        assert_eq!(ris, rigid_ris_gain_siso(&paths, &s.scenario.geometry).unwrap());
    }
}

#[test]
fn single_path_sweep_matches_outbound_alignment() {
    // With one inbound path, |g_n| = |α| everywhere, so the optimum is
    // |α|² (Σ_n max_d |h_n(d)|)². The oracle scans |h_n| with the loop code.
    let s = setup(scenario(|c| c.antennas = 1), 30);
    let sweep = run_gain_vs_paths(&s, &[1], MethodKind::Grid).unwrap();
    let geom = s.scenario.geometry;
    let one = s.scenario.with_config(|c| c.paths_in = 1).unwrap();
    let mut anchors = Vec::new();
    for &seed in &sweep.seeds {
        let paths = sample_scenario(&one, seed).unwrap();
        let oracle = Oracle::new(&geom, &paths);
        let alpha = paths.inbound()[0].gain.norm_sqr();
        let sum: f64 = (0..4)
            .map(|n| {
                let f = |d: f64| {
                    let mut v = vec![0.0; 4];
                    v[n] = d;
                    oracle.h(&v)[n].norm()
                };
                grid_oracle(f, geom.d_max(), 2000).unwrap().value
            })
            .sum();
        anchors.push(alpha * sum * sum);
    }
    for (a, b) in sweep.gains[0][0].iter().zip(&anchors) {
        assert!(rel_err(*a, *b) < 1e-9);
    }
    let mean = mean_std(&anchors).0;
    assert!(rel_err(sweep.mean(Link::Siso, 1).unwrap(), mean) < 1e-9);
}

#[test]
fn reordered_path_grid_gives_the_same_table() {
    let s = setup(scenario(|c| c.antennas = 1), 4);
    let a = run_gain_vs_paths(&s, &[1, 2, 3], MethodKind::Migd).unwrap();
    let b = run_gain_vs_paths(&s, &[3, 1, 2, 2], MethodKind::Migd).unwrap();
    assert_eq!(a.table().to_csv(), b.table().to_csv());
}

#[test]
fn infinite_tolerance_picks_the_smallest_setting() {
    let s = setup(scenario(|_| {}), 8);
    let spec = SweepSpec {
        parameter: SweepParameter::MigdIntervals,
        values: vec![20, 5, 10],
        dmax_wavelengths: vec![1.0, 3.0],
        tolerance: f64::INFINITY,
        target_rate: 1.0,
        oracle_points: 1000,
    };
    let sweep = run_hyperparameter_sweep(&s, &spec).unwrap();
    assert_eq!(sweep.values, [5, 10, 20]);
    assert_eq!(sweep.minimal_setting(0), Some(5));
    assert_eq!(sweep.minimal_setting(1), Some(5));
}

#[test]
fn default_hyperparameters_solve_almost_every_element() {
    let solver = SolverSettings::default();
    let s = ExperimentSetup::new(scenario(|_| {}), solver, 0, 100).unwrap();
    for (parameter, value) in [(SweepParameter::MigdIntervals, 50), (SweepParameter::PsoParticles, 20)] {
        let spec = SweepSpec {
            parameter,
            values: vec![value],
            dmax_wavelengths: vec![3.0],
            tolerance: 1e-3,
            target_rate: 0.95,
            oracle_points: 100_000,
        };
        let sweep = run_hyperparameter_sweep(&s, &spec).unwrap();
        assert!(sweep.success_rate(0, 0) >= 0.95, "{}", parameter.name());
        assert_eq!(sweep.minimal_setting(0), Some(value));
    }
}

#[test]
fn migd_needs_fewer_intervals_on_smaller_ranges() {
    // Success rate of a fixed interval count should not drop as the range shrinks.
    let s = ExperimentSetup::new(scenario(|_| {}), SolverSettings::default(), 0, 60).unwrap();
    let spec = SweepSpec {
        parameter: SweepParameter::MigdIntervals,
        values: vec![2, 5, 10],
        dmax_wavelengths: vec![0.5, 1.5, 3.0],
        tolerance: 1e-3,
        target_rate: 0.95,
        oracle_points: 20_000,
    };
    let sweep = run_hyperparameter_sweep(&s, &spec).unwrap();
    for v in 0..3 {
        let rates: Vec<f64> = (0..3).map(|d| sweep.success_rate(d, v)).collect();
        assert!(rates[0] + 0.05 >= rates[2], "{rates:?}");
    }
    let minimal: Vec<usize> = (0..3).map(|d| sweep.minimal_setting(d).unwrap_or(usize::MAX)).collect();
    assert!(minimal[0] <= minimal[2], "{minimal:?}");
}

#[test]
fn outputs_are_byte_identical_across_reruns_and_thread_counts() {
    let s = setup(scenario(|_| {}), 6);
    let render = || {
        let d = run_gain_vs_dmax(&s, &[1.5, 3.0], &[MethodKind::Pso, MethodKind::Migd]).unwrap();
        let c = run_convergence(&s, MethodKind::Pso).unwrap();
        [
            d.table().to_csv(),
            d.table().to_json(),
            c.table().to_csv(),
            c.table().to_json(),
        ]
    };
    let parallel = render();
    assert_eq!(parallel, render());
    assert_eq!(parallel, with_threads(1, render).unwrap());
    assert_eq!(parallel, with_threads(3, render).unwrap());
}

#[test]
fn tables_record_config_and_seeds() {
    let s = setup(scenario(|_| {}), 3);
    let c = run_convergence(&s, MethodKind::Migd).unwrap();
    let csv = c.table().to_csv();
    assert!(csv.starts_with(&format!("# tool: {TOOL_VERSION}\n")));
    assert!(csv.contains("# seeds: 100,101,102\n"));
    assert!(csv.contains("# scenario: {"));
    assert!(csv.contains("\nseed,iteration,gain,effective_gain,effective_gain_db,converged\n"));
    let json: serde_json::Value = serde_json::from_str(&c.table().to_json()).unwrap();
    assert_eq!(json["metadata"]["method"], "migd");
    assert!(json["rows"].as_array().unwrap().len() >= 6);
    for (_, r) in &c.results {
        assert!(r.trace.windows(2).all(|w| w[1] >= w[0] - 1e-12));
    }
}
