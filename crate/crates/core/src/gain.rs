//! Cascaded channel gains, optimal phase alignment and the per-element
//! gain decomposition.
//!
//! With `v(d) = diag(h(d)^H) g(d)` the SISO gain is `|s^H v|²`. Element
//! `n` of `v` only depends on `d_n`, and for the co-phased profile the gain
//! becomes `(Σ_n |v_n(d_n)|)²`, so the surface shape can be optimized one
//! element at a time through `z_n(d_n) = |v_n(d_n)|²`.
//!
//! The phase-shift matrix acting on the signal is `S = diag(conj(s))`, so
//! that `h^H S g = s^H v`.

use std::f64::consts::{PI, TAU};

use nalgebra::{DVector, RowDVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::channel::{
    bs_fim_channel, bs_fim_channel_matrix, deformation_rate, element_upa_phase, fim_ue_channel,
    ula_steering, FimGeometry, PathBundle, SurfaceShape,
};
use crate::error::{FimError, Result};

/// Unit-modulus phase configuration of the surface.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseProfile {
    phases: Vec<f64>,
}

fn canonical_phase(phase: f64) -> f64 {
    let p = phase.rem_euclid(TAU);
    if p >= TAU {
        0.0
    } else {
        p
    }
}

impl PhaseProfile {
    /// Profile `s_n = exp(j φ_n)`; phases are wrapped into `[0, 2π)`.
    pub fn from_phases(phases: &[f64]) -> Self {
        Self {
            phases: phases.iter().map(|&p| canonical_phase(p)).collect(),
        }
    }

    /// All-zero phases.
    pub fn zeros(n: usize) -> Self {
        Self {
            phases: vec![0.0; n],
        }
    }

    /// Profile co-phased with `coefficients`. Zero coefficients get phase 0.
    pub fn aligned_with(coefficients: &DVector<Complex64>) -> Self {
        let phases: Vec<f64> = coefficients
            .iter()
            .map(|c| if c.norm_sqr() == 0.0 { 0.0 } else { c.arg() })
            .collect();
        Self::from_phases(&phases)
    }

    /// Canonical phases in `[0, 2π)`.
    pub fn phases(&self) -> &[f64] {
        &self.phases
    }

    /// The vector `s`.
    pub fn vector(&self) -> DVector<Complex64> {
        DVector::from_iterator(
            self.phases.len(),
            self.phases.iter().map(|&p| Complex64::from_polar(1.0, p)),
        )
    }

    pub fn len(&self) -> usize {
        self.phases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phases.is_empty()
    }

    fn check(&self, geom: &FimGeometry) -> Result<()> {
        if self.len() != geom.num_elements() {
            return Err(FimError::LengthMismatch {
                expected: geom.num_elements(),
                found: self.len(),
            });
        }
        Ok(())
    }
}

/// `|s^H c|²`
fn projected_power(phases: &PhaseProfile, coefficients: &DVector<Complex64>) -> f64 {
    phases.vector().dotc(coefficients).norm_sqr()
}

/// Per-element cascaded coefficients `v = diag(h^H) g`.
pub fn siso_coefficients(
    paths: &PathBundle,
    shape: &SurfaceShape,
    geom: &FimGeometry,
) -> Result<DVector<Complex64>> {
    let g = bs_fim_channel(paths, shape, geom)?;
    let h = fim_ue_channel(paths, shape, geom)?;
    Ok(h.conjugate().component_mul(&g))
}

/// SISO channel gain `|h^H S g|²`.
pub fn cascaded_gain_siso(
    paths: &PathBundle,
    shape: &SurfaceShape,
    phases: &PhaseProfile,
    geom: &FimGeometry,
) -> Result<f64> {
    phases.check(geom)?;
    Ok(projected_power(phases, &siso_coefficients(paths, shape, geom)?))
}

/// Coefficient `v_n = conj(h_n) g_n`, evaluated for element `n` alone.
pub fn per_element_coefficient(
    paths: &PathBundle,
    shape: &SurfaceShape,
    geom: &FimGeometry,
    n: usize,
) -> Result<Complex64> {
    let len = geom.num_elements();
    if n >= len {
        return Err(FimError::IndexOutOfRange { index: n, len });
    }
    if shape.len() != len {
        return Err(FimError::LengthMismatch {
            expected: len,
            found: shape.len(),
        });
    }
    Ok(PerElementObjective::new(paths, geom, n)?.coefficient(shape.as_slice()[n]))
}

/// Co-phasing profile that maximizes the SISO gain for a fixed shape.
pub fn optimal_phases_siso(
    paths: &PathBundle,
    shape: &SurfaceShape,
    geom: &FimGeometry,
) -> Result<PhaseProfile> {
    Ok(PhaseProfile::aligned_with(&siso_coefficients(
        paths, shape, geom,
    )?))
}

#[derive(Debug, Clone, Copy)]
struct PathTerm {
    coef: Complex64,
    rate: f64,
}

impl PathTerm {
    #[inline]
    fn at(&self, d: f64) -> Complex64 {
        let (s, c) = (self.rate * d).sin_cos();
        self.coef * Complex64::new(c, s)
    }
}

/// Gain contributed by a single element as a function of its own deformation.
///
/// Holds the rigid-array phases and deformation slopes of every path at
/// element `n`, so one evaluation costs `O(R + K)`.
#[derive(Debug, Clone)]
pub struct PerElementObjective<'a> {
    paths: &'a PathBundle,
    geom: &'a FimGeometry,
    index: usize,
    beamformed: bool,
    inbound: Vec<PathTerm>,
    outbound: Vec<PathTerm>,
}

impl<'a> PerElementObjective<'a> {
    /// SISO objective `z_n(d_n)`.
    pub fn new(paths: &'a PathBundle, geom: &'a FimGeometry, n: usize) -> Result<Self> {
        Self::build(paths, geom, n, None)
    }

    /// MISO objective `o_n(d_n, w)` for a fixed beamformer.
    pub fn with_beamformer(
        paths: &'a PathBundle,
        geom: &'a FimGeometry,
        n: usize,
        w: &DVector<Complex64>,
    ) -> Result<Self> {
        let mut weights = Vec::with_capacity(paths.inbound().len());
        for (r, path) in paths.inbound().iter().enumerate() {
            let gamma = path.bs_departure.ok_or(FimError::MissingBsDeparture(r))?;
            weights.push(ula_steering(gamma, w.len())?.dotc(w));
        }
        Self::build(paths, geom, n, Some(&weights))
    }

    fn build(
        paths: &'a PathBundle,
        geom: &'a FimGeometry,
        n: usize,
        inbound_weights: Option<&[Complex64]>,
    ) -> Result<Self> {
        let len = geom.num_elements();
        if n >= len {
            return Err(FimError::IndexOutOfRange { index: n, len });
        }
        let inbound = paths
            .inbound()
            .iter()
            .enumerate()
            .map(|(r, p)| {
                let weight = inbound_weights.map_or(Complex64::new(1.0, 0.0), |w| w[r]);
                PathTerm {
                    coef: p.gain
                        * weight
                        * Complex64::from_polar(1.0, element_upa_phase(p.angles, geom, n)),
                    rate: deformation_rate(p.angles, geom),
                }
            })
            .collect();
        let outbound = paths
            .outbound()
            .iter()
            .map(|p| PathTerm {
                coef: p.gain * Complex64::from_polar(1.0, element_upa_phase(p.angles, geom, n)),
                rate: -deformation_rate(p.angles, geom),
            })
            .collect();
        Ok(Self {
            paths,
            geom,
            index: n,
            beamformed: inbound_weights.is_some(),
            inbound,
            outbound,
        })
    }

    pub fn index(&self) -> usize {
        self.index
    }

    pub fn d_max(&self) -> f64 {
        self.geom.d_max()
    }

    /// `conj(h_n(d)) · [g_n(d) or (G(d) w)_n]`, without bound checks.
    #[inline]
    pub fn coefficient(&self, d: f64) -> Complex64 {
        let g: Complex64 = self.inbound.iter().map(|t| t.at(d)).sum();
        let h: Complex64 = self.outbound.iter().map(|t| t.at(d)).sum();
        h.conj() * g
    }

    /// Squared magnitude of [`Self::coefficient`], without bound checks.
    #[inline]
    pub fn value(&self, d: f64) -> f64 {
        self.coefficient(d).norm_sqr()
    }

    fn check_bound(&self, d: f64) -> Result<()> {
        if !d.is_finite() || d.abs() > self.geom.d_max() {
            return Err(FimError::DeformationOutOfBounds {
                index: self.index,
                value: d,
                d_max: self.geom.d_max(),
            });
        }
        Ok(())
    }
}

/// `z_n(d_n) = |v_n(d_n)|²` for a SISO objective (or `o_n` for a
/// beamformed one).
pub fn per_element_gain(obj: &PerElementObjective<'_>, d: f64) -> Result<f64> {
    obj.check_bound(d)?;
    Ok(obj.value(d))
}

/// Which array axis the two rigid-array phase differences attach to in the
/// cosine-sum expansion of `z_n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IndexConvention {
    /// y index with `sin θ cos φ`, z index with `sin φ`, as in the steering vectors.
    SteeringConsistent,
    /// y index with `sin φ`, z index with `sin θ cos φ`.
    Swapped,
}

/// Cosine-sum expansion of `z_n(d_n)`, valid for real non-negative path gains:
///
/// `z_n = ½ ΣΣΣΣ α_r α_r' β_k β_k' [cos(f_rr' + t_kk') + cos(f_rr' − t_kk')]`
pub fn per_element_gain_closed_form(
    obj: &PerElementObjective<'_>,
    d: f64,
    convention: IndexConvention,
) -> Result<f64> {
    obj.check_bound(d)?;
    if obj.beamformed {
        return Err(FimError::Unsupported(
            "closed form only covers the single-antenna objective".into(),
        ));
    }
    if !obj.paths.has_real_nonnegative_gains() {
        return Err(FimError::Unsupported(
            "closed form requires real non-negative path gains".into(),
        ));
    }
    let geom = obj.geom;
    let kappa = geom.wavenumber();
    let (iy, iz) = geom.element_position(obj.index);
    let (iy, iz) = (iy as f64, iz as f64);

    // (gain, deformation slope, y-axis term, z-axis term)
    let terms = |gain: f64, theta: f64, phi: f64| {
        let broadside = phi.cos() * theta.cos();
        let azimuthal = theta.sin() * phi.cos();
        let elevation = phi.sin();
        match convention {
            IndexConvention::SteeringConsistent => (gain, broadside, azimuthal, elevation),
            IndexConvention::Swapped => (gain, broadside, elevation, azimuthal),
        }
    };
    let inbound: Vec<_> = obj
        .paths
        .inbound()
        .iter()
        .map(|p| terms(p.gain.re, p.angles.theta, p.angles.phi))
        .collect();
    let outbound: Vec<_> = obj
        .paths
        .outbound()
        .iter()
        .map(|p| terms(p.gain.re, p.angles.theta, p.angles.phi))
        .collect();

    let diff = |sign: f64, a: &(f64, f64, f64, f64), b: &(f64, f64, f64, f64)| {
        sign * kappa * d * (a.1 - b.1) + PI * iy * (a.2 - b.2) + PI * iz * (a.3 - b.3)
    };

    let mut total = 0.0;
    for a in &inbound {
        for a2 in &inbound {
            let f = diff(1.0, a, a2);
            for b in &outbound {
                for b2 in &outbound {
                    let t = diff(-1.0, b, b2);
                    total += a.0 * a2.0 * b.0 * b2.0 * ((f + t).cos() + (f - t).cos());
                }
            }
        }
    }
    Ok(0.5 * total)
}

/// Number of cosine terms in the closed-form expansion, `2 K² R²`.
pub fn closed_form_term_count(paths: &PathBundle) -> usize {
    let r = paths.inbound().len();
    let k = paths.outbound().len();
    2 * k * k * r * r
}

fn check_beamformer(w: &DVector<Complex64>) -> Result<()> {
    if w.is_empty() {
        return Err(FimError::ZeroAntennas);
    }
    Ok(())
}

/// Per-element coefficients `u = diag(h^H) G w`.
pub fn miso_coefficients(
    paths: &PathBundle,
    shape: &SurfaceShape,
    w: &DVector<Complex64>,
    geom: &FimGeometry,
) -> Result<DVector<Complex64>> {
    check_beamformer(w)?;
    let g = bs_fim_channel_matrix(paths, shape, geom, w.len())?;
    let h = fim_ue_channel(paths, shape, geom)?;
    Ok(h.conjugate().component_mul(&(g * w)))
}

/// Effective row channel `c = h^H S G`.
pub fn effective_row_channel(
    paths: &PathBundle,
    shape: &SurfaceShape,
    phases: &PhaseProfile,
    geom: &FimGeometry,
    m: usize,
) -> Result<RowDVector<Complex64>> {
    phases.check(geom)?;
    let g = bs_fim_channel_matrix(paths, shape, geom, m)?;
    let h = fim_ue_channel(paths, shape, geom)?;
    let s = phases.vector();
    // diag(conj(s)) applied to h^H is the row h^H with entries scaled by conj(s_n).
    let weighted = h.conjugate().component_mul(&s.conjugate());
    Ok(weighted.transpose() * g)
}

/// MISO channel gain `|h^H S G w|²`.
pub fn cascaded_gain_miso(
    paths: &PathBundle,
    shape: &SurfaceShape,
    phases: &PhaseProfile,
    w: &DVector<Complex64>,
    geom: &FimGeometry,
) -> Result<f64> {
    check_beamformer(w)?;
    let c = effective_row_channel(paths, shape, phases, geom, w.len())?;
    Ok((c * w)[0].norm_sqr())
}

/// Co-phasing profile that maximizes the MISO gain for fixed shape and beamformer.
pub fn optimal_phases_miso(
    paths: &PathBundle,
    shape: &SurfaceShape,
    w: &DVector<Complex64>,
    geom: &FimGeometry,
) -> Result<PhaseProfile> {
    Ok(PhaseProfile::aligned_with(&miso_coefficients(
        paths, shape, w, geom,
    )?))
}

/// `o_n(d_n, w) = |Σ_m w_m conj(h_n) G_{n,m}|²`, built from the element's
/// row of `G` and entry of `h`.
pub fn per_element_gain_miso(
    obj: &PerElementObjective<'_>,
    d: f64,
    w: &DVector<Complex64>,
) -> Result<f64> {
    obj.check_bound(d)?;
    check_beamformer(w)?;
    let geom = obj.geom;
    let n = obj.index;
    let steer = |angles, sign: f64| {
        Complex64::from_polar(
            1.0,
            element_upa_phase(angles, geom, n) + sign * deformation_rate(angles, geom) * d,
        )
    };
    let h_n: Complex64 = obj
        .paths
        .outbound()
        .iter()
        .map(|p| p.gain * steer(p.angles, -1.0))
        .sum();
    let mut total = Complex64::new(0.0, 0.0);
    for m in 0..w.len() {
        let mut g_nm = Complex64::new(0.0, 0.0);
        for (r, p) in obj.paths.inbound().iter().enumerate() {
            let gamma = p.bs_departure.ok_or(FimError::MissingBsDeparture(r))?;
            let ula_m = Complex64::from_polar(1.0, PI * m as f64 * gamma.sin());
            g_nm += p.gain * steer(p.angles, 1.0) * ula_m.conj();
        }
        total += w[m] * h_n.conj() * g_nm;
    }
    Ok(total.norm_sqr())
}
