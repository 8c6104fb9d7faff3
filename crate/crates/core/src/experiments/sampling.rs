//! Random multipath scenarios.
//!
//! Inbound and outbound paths are drawn from two separate ChaCha streams of
//! the same seed, one path after another. A bundle with `R + 1` inbound
//! paths therefore extends the bundle with `R` paths rather than replacing it,
//! which keeps sweeps over the path count paired.

use std::f64::consts::FRAC_PI_2;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::channel::{AnglePair, InboundPath, OutboundPath, PathBundle};
use crate::error::Result;
use crate::experiments::config::ResolvedScenario;

const INBOUND_STREAM: u64 = 1;
const OUTBOUND_STREAM: u64 = 2;

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

/// Circularly-symmetric complex Gaussian with the given variance.
fn cscg(rng: &mut impl Rng, variance: f64) -> Complex64 {
    let scale = (0.5 * variance).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(scale * re, scale * im)
}

fn angle(rng: &mut impl Rng) -> f64 {
    rng.random_range(-FRAC_PI_2..=FRAC_PI_2)
}

/// Draws path gains with distance-dependent variance and angles uniform on
/// `[-π/2, π/2]`.
pub fn sample_scenario(scenario: &ResolvedScenario, seed: u64) -> Result<PathBundle> {
    let mut rng = stream(seed, INBOUND_STREAM);
    let inbound = (0..scenario.paths_in())
        .map(|_| {
            let gain = cscg(&mut rng, scenario.inbound_variance);
            let theta = angle(&mut rng);
            let phi = angle(&mut rng);
            let gamma = angle(&mut rng);
            InboundPath {
                gain,
                angles: AnglePair::new(theta, phi),
                bs_departure: Some(gamma),
            }
        })
        .collect();

    let mut rng = stream(seed, OUTBOUND_STREAM);
    let outbound = (0..scenario.paths_out())
        .map(|_| {
            let gain = cscg(&mut rng, scenario.outbound_variance);
            let theta = angle(&mut rng);
            let phi = angle(&mut rng);
            OutboundPath {
                gain,
                angles: AnglePair::new(theta, phi),
            }
        })
        .collect();

    PathBundle::new(inbound, outbound)
}
