//! Reference implementations written with plain loops, plus scenario builders.
#![allow(dead_code)]

use std::f64::consts::PI;

use fim_core::channel::{AnglePair, FimGeometry, InboundPath, OutboundPath, PathBundle};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn cis(x: f64) -> Complex64 {
    Complex64::new(x.cos(), x.sin())
}

pub struct Path {
    pub gain: Complex64,
    pub theta: f64,
    pub phi: f64,
    pub gamma: f64,
}

pub fn to_bundle(inbound: &[Path], outbound: &[Path]) -> PathBundle {
    PathBundle::new(
        inbound
            .iter()
            .map(|p| InboundPath {
                gain: p.gain,
                angles: AnglePair::new(p.theta, p.phi),
                bs_departure: Some(p.gamma),
            })
            .collect(),
        outbound
            .iter()
            .map(|p| OutboundPath {
                gain: p.gain,
                angles: AnglePair::new(p.theta, p.phi),
            })
            .collect(),
    )
    .unwrap()
}

pub fn from_bundle(b: &PathBundle) -> (Vec<Path>, Vec<Path>) {
    let inbound = b
        .inbound()
        .iter()
        .map(|p| Path {
            gain: p.gain,
            theta: p.angles.theta,
            phi: p.angles.phi,
            gamma: p.bs_departure.unwrap_or(0.0),
        })
        .collect();
    let outbound = b
        .outbound()
        .iter()
        .map(|p| Path {
            gain: p.gain,
            theta: p.angles.theta,
            phi: p.angles.phi,
            gamma: 0.0,
        })
        .collect();
    (inbound, outbound)
}

/// Random paths; `real` restricts gains to nonnegative reals.
pub fn random_paths(rng: &mut impl Rng, count: usize, real: bool) -> Vec<Path> {
    (0..count)
        .map(|_| {
            let gain = if real {
                Complex64::new(rng.random_range(0.0..2.0), 0.0)
            } else {
                Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
            };
            Path {
                gain,
                theta: rng.random_range(-PI / 2.0..PI / 2.0),
                phi: rng.random_range(-PI / 2.0..PI / 2.0),
                gamma: rng.random_range(-PI / 2.0..PI / 2.0),
            }
        })
        .collect()
}

pub fn random_bundle(seed: u64, r: usize, k: usize, real: bool) -> PathBundle {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let inbound = random_paths(&mut rng, r, real);
    let outbound = random_paths(&mut rng, k, real);
    to_bundle(&inbound, &outbound)
}

/// Response of element `n` (row-major in `(y, z)`) to one path.
fn element_response(p: &Path, n_z: usize, n: usize, kappa: f64, d: f64) -> Complex64 {
    let (iy, iz) = ((n / n_z) as f64, (n % n_z) as f64);
    let rigid = PI * iy * p.theta.sin() * p.phi.cos() + PI * iz * p.phi.sin();
    cis(rigid + kappa * d * p.theta.cos() * p.phi.cos())
}

pub struct Oracle {
    pub n_y: usize,
    pub n_z: usize,
    pub wavelength: f64,
    pub inbound: Vec<Path>,
    pub outbound: Vec<Path>,
}

impl Oracle {
    pub fn new(geom: &FimGeometry, b: &PathBundle) -> Self {
        let (inbound, outbound) = from_bundle(b);
        Self {
            n_y: geom.n_y(),
            n_z: geom.n_z(),
            wavelength: geom.wavelength(),
            inbound,
            outbound,
        }
    }

    fn kappa(&self) -> f64 {
        2.0 * PI / self.wavelength
    }

    pub fn len(&self) -> usize {
        self.n_y * self.n_z
    }

    pub fn g(&self, d: &[f64]) -> Vec<Complex64> {
        (0..self.len())
            .map(|n| {
                self.inbound
                    .iter()
                    .map(|p| p.gain * element_response(p, self.n_z, n, self.kappa(), d[n]))
                    .sum()
            })
            .collect()
    }

    pub fn h(&self, d: &[f64]) -> Vec<Complex64> {
        (0..self.len())
            .map(|n| {
                self.outbound
                    .iter()
                    .map(|p| p.gain * element_response(p, self.n_z, n, self.kappa(), -d[n]))
                    .sum()
            })
            .collect()
    }

    /// `G[n][m]`
    pub fn g_matrix(&self, d: &[f64], m: usize) -> Vec<Vec<Complex64>> {
        (0..self.len())
            .map(|n| {
                (0..m)
                    .map(|a| {
                        self.inbound
                            .iter()
                            .map(|p| {
                                let bs = cis(PI * a as f64 * p.gamma.sin()).conj();
                                p.gain * element_response(p, self.n_z, n, self.kappa(), d[n]) * bs
                            })
                            .sum()
                    })
                    .collect()
            })
            .collect()
    }

    pub fn v(&self, d: &[f64]) -> Vec<Complex64> {
        let (g, h) = (self.g(d), self.h(d));
        g.iter().zip(&h).map(|(g, h)| h.conj() * g).collect()
    }

    pub fn u(&self, d: &[f64], w: &[Complex64]) -> Vec<Complex64> {
        let gm = self.g_matrix(d, w.len());
        let h = self.h(d);
        (0..self.len())
            .map(|n| {
                let gw: Complex64 = gm[n].iter().zip(w).map(|(a, b)| a * b).sum();
                h[n].conj() * gw
            })
            .collect()
    }

    /// `|h^H diag(conj(s)) g|²` with `s_n = e^{j phase_n}`.
    pub fn siso_gain(&self, d: &[f64], phases: &[f64]) -> f64 {
        let v = self.v(d);
        v.iter()
            .zip(phases)
            .map(|(v, &p)| cis(-p) * v)
            .sum::<Complex64>()
            .norm_sqr()
    }

    pub fn miso_gain(&self, d: &[f64], phases: &[f64], w: &[Complex64]) -> f64 {
        let u = self.u(d, w);
        u.iter()
            .zip(phases)
            .map(|(u, &p)| cis(-p) * u)
            .sum::<Complex64>()
            .norm_sqr()
    }

    /// `z_n` at deformation `x`, all other elements irrelevant.
    pub fn z(&self, n: usize, x: f64) -> f64 {
        let mut d = vec![0.0; self.len()];
        d[n] = x;
        self.v(&d)[n].norm_sqr()
    }
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}
