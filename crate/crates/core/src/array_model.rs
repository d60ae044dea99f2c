//! Lens array geometry and per-terminal array responses.
//!
//! Elements sit on the focal arc of a flat EM lens so that their spatial
//! frequencies `m / D̃` are equally spaced in `[-1, 1]`. A plane wave with
//! spatial frequency `φ̃` produces the element response
//! `e^{-jΦ₀} √A sinc(m - D̃ φ̃)` for every index `m` in `{0, ±1, …, ±(M-1)/2}`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};

/// Arguments closer to zero than this use the series expansion of sinc.
const SINC_SERIES_THRESHOLD: f64 = 1e-8;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SincConvention {
    /// `sin(πx) / (πx)`, zero at every nonzero integer.
    #[default]
    Normalized,
    /// `sin(x) / x`.
    Unnormalized,
}

impl SincConvention {
    /// Angular scale applied to the sinc argument (`π` or `1`).
    pub fn scale(self) -> f64 {
        match self {
            SincConvention::Normalized => PI,
            SincConvention::Unnormalized => 1.0,
        }
    }
}

/// `sin(πx)` with the argument reduced by whole periods first, so that
/// integers map to exactly zero.
pub(crate) fn sin_pi(x: f64) -> f64 {
    let n = x.round();
    let s = (PI * (x - n)).sin();
    if n.rem_euclid(2.0) == 0.0 {
        s
    } else {
        -s
    }
}

/// `cos(πx)` with the same period reduction as [`sin_pi`].
pub(crate) fn cos_pi(x: f64) -> f64 {
    let n = x.round();
    let c = (PI * (x - n)).cos();
    if n.rem_euclid(2.0) == 0.0 {
        c
    } else {
        -c
    }
}

pub fn sinc(x: f64, convention: SincConvention) -> f64 {
    let t = convention.scale() * x;
    if x.abs() < SINC_SERIES_THRESHOLD {
        return 1.0 - t * t / 6.0;
    }
    match convention {
        SincConvention::Normalized => sin_pi(x) / t,
        SincConvention::Unnormalized => x.sin() / x,
    }
}

/// Odd element count `1 + 2⌊D̃⌋`, the largest odd `M` whose placements all
/// fall inside `[-1, 1]`.
pub fn derive_element_count(d_tilde: f64) -> usize {
    1 + 2 * d_tilde.floor() as usize
}

pub(crate) fn check_spatial_freq(phi_tilde: f64) -> Result<()> {
    if phi_tilde.is_finite() && phi_tilde.abs() <= 1.0 {
        Ok(())
    } else {
        Err(Error::SpatialFrequencyOutOfRange(phi_tilde))
    }
}

/// Normalized lens dimensions and the derived element layout.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LensArrayConfig {
    d_tilde: f64,
    a_z: f64,
    element_count: usize,
    focal_length: f64,
    phi0: f64,
    sinc_convention: SincConvention,
}

impl LensArrayConfig {
    /// Builds a config from the normalized azimuth dimension `D_y/λ` and
    /// normalized vertical dimension `D_z/λ`.
    pub fn new(d_tilde: f64, a_z: f64) -> Result<Self> {
        if !(d_tilde.is_finite() && d_tilde > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "d_tilde must be positive and finite, got {d_tilde}"
            )));
        }
        if !(a_z.is_finite() && a_z > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "a_z must be positive and finite, got {a_z}"
            )));
        }
        Ok(Self {
            d_tilde,
            a_z,
            element_count: derive_element_count(d_tilde),
            focal_length: 1.0,
            phi0: 0.0,
            sinc_convention: SincConvention::Normalized,
        })
    }

    /// Builds a config from physical lens dimensions and the carrier
    /// wavelength, all in meters.
    pub fn from_physical(d_y: f64, d_z: f64, wavelength: f64) -> Result<Self> {
        if !(wavelength.is_finite() && wavelength > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "wavelength must be positive and finite, got {wavelength}"
            )));
        }
        Self::new(d_y / wavelength, d_z / wavelength)
    }

    /// Overrides the derived element count. The count must be odd and keep
    /// every element spatial frequency inside `[-1, 1]`.
    pub fn with_element_count(mut self, element_count: usize) -> Result<Self> {
        if element_count == 0 || element_count.is_multiple_of(2) {
            return Err(Error::InvalidConfig(format!(
                "element count must be odd and positive, got {element_count}"
            )));
        }
        if ((element_count - 1) / 2) as f64 > self.d_tilde {
            return Err(Error::InvalidConfig(format!(
                "element count {element_count} places elements outside [-1, 1] for d_tilde {}",
                self.d_tilde
            )));
        }
        self.element_count = element_count;
        Ok(self)
    }

    pub fn with_focal_length(mut self, focal_length: f64) -> Result<Self> {
        if !(focal_length.is_finite() && focal_length > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "focal length must be positive and finite, got {focal_length}"
            )));
        }
        self.focal_length = focal_length;
        Ok(self)
    }

    pub fn with_phi0(mut self, phi0: f64) -> Result<Self> {
        if !phi0.is_finite() {
            return Err(Error::InvalidConfig("phi0 must be finite".into()));
        }
        self.phi0 = phi0;
        Ok(self)
    }

    pub fn with_convention(mut self, convention: SincConvention) -> Self {
        self.sinc_convention = convention;
        self
    }

    pub fn d_tilde(&self) -> f64 {
        self.d_tilde
    }

    pub fn a_z(&self) -> f64 {
        self.a_z
    }

    /// Normalized aperture `A = D_y D_z / λ²`.
    pub fn aperture(&self) -> f64 {
        self.d_tilde * self.a_z
    }

    pub fn element_count(&self) -> usize {
        self.element_count
    }

    pub fn focal_length(&self) -> f64 {
        self.focal_length
    }

    pub fn phi0(&self) -> f64 {
        self.phi0
    }

    pub fn convention(&self) -> SincConvention {
        self.sinc_convention
    }

    /// Largest element index `(M - 1) / 2`.
    pub fn half_span(&self) -> i64 {
        ((self.element_count - 1) / 2) as i64
    }

    /// Element indices in ascending order.
    pub fn indices(&self) -> impl Iterator<Item = i64> + Clone {
        let h = self.half_span();
        -h..=h
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ElementPlacement {
    pub index: i64,
    pub theta_tilde: f64,
    pub theta: f64,
    pub position: [f64; 3],
}

pub fn element_placements(config: &LensArrayConfig) -> Vec<ElementPlacement> {
    let f = config.focal_length();
    config
        .indices()
        .map(|m| {
            let theta_tilde = m as f64 / config.d_tilde();
            let theta = theta_tilde.asin();
            ElementPlacement {
                index: m,
                theta_tilde,
                theta,
                position: [f * theta.cos(), -f * theta.sin(), 0.0],
            }
        })
        .collect()
}

/// Complex element responses of one terminal, ordered by ascending index.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelVector {
    entries: Vec<Complex64>,
    half_span: i64,
    source_spatial_freq: f64,
}

impl ChannelVector {
    pub fn entries(&self) -> &[Complex64] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Entry for element index `m`, if it exists.
    pub fn entry(&self, m: i64) -> Option<Complex64> {
        let pos = m + self.half_span;
        if pos < 0 {
            return None;
        }
        self.entries.get(pos as usize).copied()
    }

    pub fn source_spatial_freq(&self) -> f64 {
        self.source_spatial_freq
    }

    /// Hermitian inner product `selfᴴ other`.
    pub fn inner(&self, other: &ChannelVector) -> Complex64 {
        self.entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }
}

pub fn array_response(config: &LensArrayConfig, spatial_freq: f64) -> Result<ChannelVector> {
    check_spatial_freq(spatial_freq)?;
    let phase = Complex64::from_polar(config.aperture().sqrt(), -config.phi0());
    let shift = config.d_tilde() * spatial_freq;
    let conv = config.convention();
    let entries = config
        .indices()
        .map(|m| phase * sinc(m as f64 - shift, conv))
        .collect();
    Ok(ChannelVector {
        entries,
        half_span: config.half_span(),
        source_spatial_freq: spatial_freq,
    })
}
