//! Pathloss, noise and SNR budgets for communication links and radar-style
//! (mono- and bistatic) sensing links.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use thiserror::Error;

use crate::quantities::{
    wavelength, Bandwidth, Decibel, Distance, Frequency, PowerDbm, QuantityError, SPEED_OF_LIGHT,
    THERMAL_NOISE_DENSITY_DBM_PER_HZ,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ChannelError {
    #[error(transparent)]
    Quantity(#[from] QuantityError),
    #[error("invalid array: {0}")]
    InvalidArray(String),
    #[error("invalid pathloss model: {0}")]
    InvalidPathloss(String),
    #[error("distance must be > 0 (pathloss singularity at d = 0)")]
    ZeroDistance,
    #[error("radar cross-section must be > 0, got {0}")]
    InvalidRcs(f64),
}

/// Log-distance pathloss anchored at free-space loss at `reference_distance_m`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathlossModel {
    pub reference_distance_m: f64,
    pub exponent: f64,
    pub carrier: Frequency,
}

impl PathlossModel {
    pub fn new(exponent: f64, carrier: Frequency) -> Result<Self, ChannelError> {
        let m = Self {
            reference_distance_m: 1.0,
            exponent,
            carrier,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<(), ChannelError> {
        if !(1.5..=6.0).contains(&self.exponent) {
            return Err(ChannelError::InvalidPathloss(format!(
                "exponent {} outside [1.5, 6]",
                self.exponent
            )));
        }
        if !(self.reference_distance_m > 0.0) {
            return Err(ChannelError::InvalidPathloss(format!(
                "reference distance {} must be > 0",
                self.reference_distance_m
            )));
        }
        Ok(())
    }
}

/// 20·log10(4π·d·f/c).
pub fn free_space_pathloss_db(d: Distance, f: Frequency) -> Decibel {
    Decibel(20.0 * (4.0 * PI * d.value() * f.value() / SPEED_OF_LIGHT).log10())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pathloss {
    pub loss: Decibel,
    /// Set when the distance was below the reference distance and was clamped to it.
    pub clamped: bool,
}

pub fn pathloss_db(model: &PathlossModel, d: Distance) -> Result<Pathloss, ChannelError> {
    model.validate()?;
    if d.value() == 0.0 {
        return Err(ChannelError::ZeroDistance);
    }
    let d0 = model.reference_distance_m;
    let clamped = d.value() < d0;
    let d_eff = d.value().max(d0);
    let fspl = free_space_pathloss_db(Distance::new(d0)?, model.carrier);
    Ok(Pathloss {
        loss: Decibel(fspl.value() + 10.0 * model.exponent * (d_eff / d0).log10()),
        clamped,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    pub noise_figure_db: f64,
}

impl NoiseModel {
    pub fn new(noise_figure_db: f64) -> Result<Self, ChannelError> {
        if !(noise_figure_db >= 0.0) || !noise_figure_db.is_finite() {
            return Err(QuantityError::Domain {
                what: "noise figure",
                constraint: "finite and >= 0",
                value: noise_figure_db,
            }
            .into());
        }
        Ok(Self { noise_figure_db })
    }

    /// Noise power spectral density N0 in W/Hz (thermal floor plus noise figure).
    pub fn density_w_per_hz(&self) -> f64 {
        10f64.powf((THERMAL_NOISE_DENSITY_DBM_PER_HZ + self.noise_figure_db - 30.0) / 10.0)
    }
}

/// −174 + 10·log10(B) + NF.
pub fn noise_power_dbm(n: &NoiseModel, b: Bandwidth) -> PowerDbm {
    PowerDbm::new(THERMAL_NOISE_DENSITY_DBM_PER_HZ + 10.0 * b.value().log10() + n.noise_figure_db)
        .expect("finite for positive bandwidth")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ArrayKind {
    Analog,
    Hybrid,
    Digital,
}

/// Uniform array with `elements_per_dim` elements along each of `dims` axes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArrayConfig {
    pub elements_per_dim: u32,
    pub dims: u8,
    pub element_gain_dbi: f64,
    /// Element spacing in wavelengths.
    pub spacing: f64,
    pub kind: ArrayKind,
}

impl Default for ArrayConfig {
    fn default() -> Self {
        Self {
            elements_per_dim: 1,
            dims: 2,
            element_gain_dbi: 0.0,
            spacing: 0.5,
            kind: ArrayKind::Analog,
        }
    }
}

impl ArrayConfig {
    pub fn planar(elements_per_dim: u32) -> Self {
        Self {
            elements_per_dim,
            ..Self::default()
        }
    }

    pub fn linear(elements: u32) -> Self {
        Self {
            elements_per_dim: elements,
            dims: 1,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), ChannelError> {
        if self.elements_per_dim < 1 {
            return Err(ChannelError::InvalidArray("elements_per_dim must be >= 1".into()));
        }
        if !(self.dims == 1 || self.dims == 2) {
            return Err(ChannelError::InvalidArray(format!("dims must be 1 or 2, got {}", self.dims)));
        }
        if !(self.spacing > 0.0) {
            return Err(ChannelError::InvalidArray(format!("spacing must be > 0, got {}", self.spacing)));
        }
        if !self.element_gain_dbi.is_finite() {
            return Err(ChannelError::InvalidArray("element gain must be finite".into()));
        }
        Ok(())
    }

    pub fn total_elements(&self) -> u64 {
        (self.elements_per_dim as u64).pow(self.dims as u32)
    }
}

/// Array-gain accounting shared by every budget in the crate.
///
/// Transmit arrays get 20·log10(N): 10·log10(N) from combining the per-element
/// power and another 10·log10(N) from coherent beamforming. Receive arrays get
/// 10·log10(N). `calibration_db` is a lumped offset added once per budget; it is
/// zero unless a scenario was explicitly calibrated against a reference curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GainModel {
    pub calibration_db: f64,
}

impl Default for GainModel {
    fn default() -> Self {
        Self { calibration_db: 0.0 }
    }
}

impl GainModel {
    pub const TX_ARRAY_DB_PER_DECADE: f64 = 20.0;
    pub const RX_ARRAY_DB_PER_DECADE: f64 = 10.0;

    pub fn tx_gain_db(&self, a: &ArrayConfig) -> f64 {
        Self::TX_ARRAY_DB_PER_DECADE * (a.total_elements() as f64).log10() + a.element_gain_dbi
    }

    pub fn rx_gain_db(&self, a: &ArrayConfig) -> f64 {
        Self::RX_ARRAY_DB_PER_DECADE * (a.total_elements() as f64).log10() + a.element_gain_dbi
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadarTarget {
    pub rcs_m2: f64,
    pub position_m: [f64; 3],
    pub radial_velocity_mps: f64,
}

impl RadarTarget {
    pub fn with_rcs(rcs_m2: f64) -> Self {
        Self {
            rcs_m2,
            position_m: [0.0; 3],
            radial_velocity_mps: 0.0,
        }
    }
}

/// Everything in a one-way budget except transmit power and bandwidth.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkParams {
    pub tx: ArrayConfig,
    pub rx: ArrayConfig,
    pub pathloss: PathlossModel,
    pub distance: Distance,
    pub noise: NoiseModel,
    pub impl_loss: Decibel,
    pub gains: GainModel,
}

impl LinkParams {
    fn validate(&self) -> Result<(), ChannelError> {
        self.tx.validate()?;
        self.rx.validate()?;
        self.pathloss.validate()
    }

    /// SNR in dB for a 0 dBm per-element transmit power; the budget is affine in
    /// power with unit slope.
    pub fn snr_at_0dbm(&self, b: Bandwidth) -> Result<Decibel, ChannelError> {
        self.validate()?;
        let pl = pathloss_db(&self.pathloss, self.distance)?;
        Ok(Decibel(
            self.gains.tx_gain_db(&self.tx) + self.gains.rx_gain_db(&self.rx) + self.gains.calibration_db
                - pl.loss.value()
                - self.impl_loss.value()
                - noise_power_dbm(&self.noise, b).value(),
        ))
    }
}

pub fn link_snr_db(ptx_per_element: PowerDbm, link: &LinkParams, b: Bandwidth) -> Result<Decibel, ChannelError> {
    Ok(Decibel(ptx_per_element.value() + link.snr_at_0dbm(b)?.value()))
}

/// Parameters of a radar budget (no pathloss model: the spreading is d⁻⁴ or
/// d_tx⁻²·d_rx⁻² at free space).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadarParams {
    pub tx: ArrayConfig,
    pub rx: ArrayConfig,
    pub carrier: Frequency,
    pub target: RadarTarget,
    pub noise: NoiseModel,
    pub impl_loss: Decibel,
    pub gains: GainModel,
}

impl RadarParams {
    fn common_terms_db(&self, b: Bandwidth) -> Result<f64, ChannelError> {
        self.tx.validate()?;
        self.rx.validate()?;
        if !(self.target.rcs_m2 > 0.0) {
            return Err(ChannelError::InvalidRcs(self.target.rcs_m2));
        }
        let lambda = wavelength(self.carrier).value();
        let radar_term = 10.0 * (lambda * lambda * self.target.rcs_m2 / (4.0 * PI).powi(3)).log10();
        Ok(self.gains.tx_gain_db(&self.tx) + self.gains.rx_gain_db(&self.rx) + self.gains.calibration_db
            + radar_term
            - self.impl_loss.value()
            - noise_power_dbm(&self.noise, b).value())
    }
}

pub fn monostatic_snr_db(
    ptx_per_element: PowerDbm,
    radar: &RadarParams,
    d: Distance,
    b: Bandwidth,
) -> Result<Decibel, ChannelError> {
    if d.value() == 0.0 {
        return Err(ChannelError::ZeroDistance);
    }
    Ok(Decibel(
        ptx_per_element.value() + radar.common_terms_db(b)? - 40.0 * d.value().log10(),
    ))
}

pub fn bistatic_snr_db(
    ptx_per_element: PowerDbm,
    radar: &RadarParams,
    d_tx: Distance,
    d_rx: Distance,
    b: Bandwidth,
) -> Result<Decibel, ChannelError> {
    if d_tx.value() == 0.0 || d_rx.value() == 0.0 {
        return Err(ChannelError::ZeroDistance);
    }
    Ok(Decibel(
        ptx_per_element.value() + radar.common_terms_db(b)?
            - 20.0 * d_tx.value().log10()
            - 20.0 * d_rx.value().log10(),
    ))
}
