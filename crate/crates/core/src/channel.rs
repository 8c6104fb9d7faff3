//! Steering vectors and cascaded baseband channels for a deformable
//! uniform planar array.
//!
//! The surface lies in the y–z plane with half-wavelength spacing. Element
//! `n` sits at grid position `(n / n_z, n % n_z)`, which is the row-major
//! order produced by the Kronecker product `a_y ⊗ a_z`. Each element can be
//! displaced perpendicular to the surface by `d_n`; a plane wave at azimuth
//! `theta` and elevation `phi` then picks up an extra phase
//! `κ d_n cos(theta) cos(phi)`.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{FimError, Result};

/// Array dimensions, carrier wavelength and morphing bound of the surface.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FimGeometry {
    n_y: usize,
    n_z: usize,
    wavelength: f64,
    d_max: f64,
}

impl FimGeometry {
    pub fn new(n_y: usize, n_z: usize, wavelength: f64, d_max: f64) -> Result<Self> {
        if n_y == 0 || n_z == 0 {
            return Err(FimError::InvalidGeometry(format!(
                "element counts must be positive, got {n_y}x{n_z}"
            )));
        }
        if !(wavelength.is_finite() && wavelength > 0.0) {
            return Err(FimError::InvalidGeometry(format!(
                "wavelength must be positive and finite, got {wavelength}"
            )));
        }
        if !(d_max.is_finite() && d_max >= 0.0) {
            return Err(FimError::InvalidGeometry(format!(
                "morphing bound must be non-negative and finite, got {d_max}"
            )));
        }
        Ok(Self {
            n_y,
            n_z,
            wavelength,
            d_max,
        })
    }

    pub fn n_y(&self) -> usize {
        self.n_y
    }

    pub fn n_z(&self) -> usize {
        self.n_z
    }

    /// Total element count `N = n_y * n_z`.
    pub fn num_elements(&self) -> usize {
        self.n_y * self.n_z
    }

    pub fn wavelength(&self) -> f64 {
        self.wavelength
    }

    /// Wavenumber `2π / λ`.
    pub fn wavenumber(&self) -> f64 {
        2.0 * PI / self.wavelength
    }

    pub fn d_max(&self) -> f64 {
        self.d_max
    }

    /// Same array with a different morphing bound.
    pub fn with_d_max(&self, d_max: f64) -> Result<Self> {
        Self::new(self.n_y, self.n_z, self.wavelength, d_max)
    }

    /// Grid position `(y index, z index)` of flat element `n`.
    pub fn element_position(&self, n: usize) -> (usize, usize) {
        (n / self.n_z, n % self.n_z)
    }
}

/// Azimuth/elevation pair in radians.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnglePair {
    pub theta: f64,
    pub phi: f64,
}

impl AnglePair {
    pub fn new(theta: f64, phi: f64) -> Self {
        Self { theta, phi }
    }

    /// Per-metre phase slope of the deformation response, before the wavenumber.
    fn broadside(&self) -> f64 {
        self.theta.cos() * self.phi.cos()
    }
}

/// One BS→FIM propagation path.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InboundPath {
    pub gain: Complex64,
    pub angles: AnglePair,
    /// Departure angle at the BS array; only needed for multi-antenna links.
    pub bs_departure: Option<f64>,
}

/// One FIM→UE propagation path.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OutboundPath {
    pub gain: Complex64,
    pub angles: AnglePair,
}

/// Multipath parameters on both sides of the surface.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathBundle {
    inbound: Vec<InboundPath>,
    outbound: Vec<OutboundPath>,
}

impl PathBundle {
    pub fn new(inbound: Vec<InboundPath>, outbound: Vec<OutboundPath>) -> Result<Self> {
        if inbound.is_empty() {
            return Err(FimError::EmptyInbound);
        }
        if outbound.is_empty() {
            return Err(FimError::EmptyOutbound);
        }
        Ok(Self { inbound, outbound })
    }

    pub fn inbound(&self) -> &[InboundPath] {
        &self.inbound
    }

    pub fn outbound(&self) -> &[OutboundPath] {
        &self.outbound
    }

    /// True when every path gain on both sides is real and non-negative.
    pub fn has_real_nonnegative_gains(&self) -> bool {
        let ok = |g: Complex64| g.im == 0.0 && g.re >= 0.0;
        self.inbound.iter().all(|p| ok(p.gain)) && self.outbound.iter().all(|p| ok(p.gain))
    }

    /// Copy with every inbound gain multiplied by `factor`.
    pub fn scale_inbound(&self, factor: Complex64) -> Self {
        let inbound = self
            .inbound
            .iter()
            .map(|p| InboundPath {
                gain: p.gain * factor,
                ..*p
            })
            .collect();
        Self {
            inbound,
            outbound: self.outbound.clone(),
        }
    }
}

/// Per-element deformation vector `d`, bounded by the geometry's `d_max`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurfaceShape {
    d: Vec<f64>,
}

impl SurfaceShape {
    pub fn new(d: Vec<f64>, geom: &FimGeometry) -> Result<Self> {
        if d.len() != geom.num_elements() {
            return Err(FimError::LengthMismatch {
                expected: geom.num_elements(),
                found: d.len(),
            });
        }
        for (index, &value) in d.iter().enumerate() {
            if !value.is_finite() || value.abs() > geom.d_max() {
                return Err(FimError::DeformationOutOfBounds {
                    index,
                    value,
                    d_max: geom.d_max(),
                });
            }
        }
        Ok(Self { d })
    }

    /// The unmorphed (rigid) surface.
    pub fn flat(geom: &FimGeometry) -> Self {
        Self {
            d: vec![0.0; geom.num_elements()],
        }
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.d
    }

    pub fn len(&self) -> usize {
        self.d.len()
    }

    pub fn is_empty(&self) -> bool {
        self.d.is_empty()
    }

    /// The shape seen from the other side of the surface.
    pub fn negated(&self) -> Self {
        Self {
            d: self.d.iter().map(|x| -x).collect(),
        }
    }

    fn check(&self, geom: &FimGeometry) -> Result<()> {
        if self.d.len() != geom.num_elements() {
            return Err(FimError::LengthMismatch {
                expected: geom.num_elements(),
                found: self.d.len(),
            });
        }
        Ok(())
    }
}

fn cis(phase: f64) -> Complex64 {
    Complex64::from_polar(1.0, phase)
}

fn linear_phase_vector(len: usize, spatial_freq: f64) -> DVector<Complex64> {
    DVector::from_fn(len, |i, _| cis(PI * i as f64 * spatial_freq))
}

/// Half-wavelength ULA response toward departure angle `gamma`.
pub fn ula_steering(gamma: f64, m: usize) -> Result<DVector<Complex64>> {
    if m == 0 {
        return Err(FimError::ZeroAntennas);
    }
    Ok(linear_phase_vector(m, gamma.sin()))
}

/// Rigid UPA response `a_y(θ, φ) ⊗ a_z(φ)`.
pub fn upa_steering(angles: AnglePair, geom: &FimGeometry) -> DVector<Complex64> {
    let a_y = linear_phase_vector(geom.n_y(), angles.theta.sin() * angles.phi.cos());
    let a_z = linear_phase_vector(geom.n_z(), angles.phi.sin());
    a_y.kronecker(&a_z)
}

/// Extra phase picked up by each displaced element.
pub fn deformation_response(
    angles: AnglePair,
    shape: &SurfaceShape,
    geom: &FimGeometry,
) -> Result<DVector<Complex64>> {
    shape.check(geom)?;
    let rate = geom.wavenumber() * angles.broadside();
    Ok(DVector::from_iterator(
        shape.len(),
        shape.as_slice().iter().map(|&d| cis(rate * d)),
    ))
}

/// Rigid response times deformation response, element by element.
pub fn effective_steering(
    angles: AnglePair,
    shape: &SurfaceShape,
    geom: &FimGeometry,
) -> Result<DVector<Complex64>> {
    let deform = deformation_response(angles, shape, geom)?;
    Ok(upa_steering(angles, geom).component_mul(&deform))
}

/// BS→FIM channel `g(d)`.
pub fn bs_fim_channel(
    paths: &PathBundle,
    shape: &SurfaceShape,
    geom: &FimGeometry,
) -> Result<DVector<Complex64>> {
    if paths.inbound.is_empty() {
        return Err(FimError::EmptyInbound);
    }
    let mut g = DVector::zeros(geom.num_elements());
    for path in &paths.inbound {
        g += effective_steering(path.angles, shape, geom)? * path.gain;
    }
    Ok(g)
}

/// FIM→UE channel `h(d)`. The receive side sees the surface mirrored, so
/// the deformation enters with the opposite sign.
pub fn fim_ue_channel(
    paths: &PathBundle,
    shape: &SurfaceShape,
    geom: &FimGeometry,
) -> Result<DVector<Complex64>> {
    if paths.outbound.is_empty() {
        return Err(FimError::EmptyOutbound);
    }
    let mirrored = shape.negated();
    let mut h = DVector::zeros(geom.num_elements());
    for path in &paths.outbound {
        h += effective_steering(path.angles, &mirrored, geom)? * path.gain;
    }
    Ok(h)
}

/// BS→FIM channel matrix `G(d)` (N × M) for an M-antenna ULA at the BS.
pub fn bs_fim_channel_matrix(
    paths: &PathBundle,
    shape: &SurfaceShape,
    geom: &FimGeometry,
    m: usize,
) -> Result<DMatrix<Complex64>> {
    if m == 0 {
        return Err(FimError::ZeroAntennas);
    }
    if paths.inbound.is_empty() {
        return Err(FimError::EmptyInbound);
    }
    let mut g = DMatrix::zeros(geom.num_elements(), m);
    for (r, path) in paths.inbound.iter().enumerate() {
        let gamma = path.bs_departure.ok_or(FimError::MissingBsDeparture(r))?;
        let a = effective_steering(path.angles, shape, geom)? * path.gain;
        let bs = ula_steering(gamma, m)?;
        g += a * bs.adjoint();
    }
    Ok(g)
}

/// Rigid-array phase of element `n` for a path at `angles`.
pub(crate) fn element_upa_phase(angles: AnglePair, geom: &FimGeometry, n: usize) -> f64 {
    let (iy, iz) = geom.element_position(n);
    PI * iy as f64 * angles.theta.sin() * angles.phi.cos() + PI * iz as f64 * angles.phi.sin()
}

/// Phase slope `κ cos θ cos φ` of the deformation response, in rad/m.
pub(crate) fn deformation_rate(angles: AnglePair, geom: &FimGeometry) -> f64 {
    geom.wavenumber() * angles.broadside()
}
