//! Uplink position error bounds for a single multi-antenna anchor.
//!
//! The squared position error bound splits into a delay (range) term that
//! shrinks with bandwidth and an angle term that grows with distance squared:
//!
//! `speb = N0·B·d²/(T·P·λ²) · (c²·α_r/(B²·N) + d²·α_a/N³)`
//!
//! `α_r` and `α_a` are pure constants; [`fisher`] computes them from first
//! principles and [`SpebConstants::default`] holds the frozen result.

pub mod fisher;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::channel::{ArrayConfig, GainModel, LinkParams, NoiseModel, PathlossModel};
use crate::linkbudget::{achievable_rate_bps, RateModel};
use crate::quantities::{
    wavelength, Angle, Bandwidth, Decibel, Distance, Frequency, PowerDbm, SPEED_OF_LIGHT,
};

use fisher::{fisher_oracle, OracleScenario};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LocBoundError {
    #[error("{field} must be finite and > 0, got {value}")]
    NonPositive { field: &'static str, value: f64 },
    #[error("distance grid must be strictly increasing and positive")]
    BadGrid,
    #[error("angle information needs at least 2 receive elements (FIM rank {rank})")]
    RankDeficient { rank: usize },
}

/// Delay and angle constants of the bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpebConstants {
    pub alpha_range: f64,
    pub alpha_angle: f64,
}

impl Default for SpebConstants {
    /// Extracted by [`calibrate_constants`] at 140 GHz, 2 GHz, 14 dBm, 120
    /// symbols, 16 receive elements, 4096 subcarriers, NF 5 dB, d = 50 m.
    fn default() -> Self {
        Self {
            alpha_range: ALPHA_RANGE_DEFAULT,
            alpha_angle: ALPHA_ANGLE_DEFAULT,
        }
    }
}

const ALPHA_RANGE_DEFAULT: f64 = 24.000_001_4;
const ALPHA_ANGLE_DEFAULT: f64 = 96.374_833_2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpebParams {
    /// Integration length in transmissions (OFDM symbols).
    pub integration_symbols: f64,
    pub bandwidth: Bandwidth,
    pub noise_density_w_per_hz: f64,
    pub distance: Distance,
    pub wavelength: Distance,
    pub rx_elements: u32,
    pub constants: SpebConstants,
    pub ptx_w: f64,
}

fn positive(field: &'static str, value: f64) -> Result<(), LocBoundError> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(LocBoundError::NonPositive { field, value })
    }
}

impl SpebParams {
    pub fn validate(&self) -> Result<(), LocBoundError> {
        positive("integration_symbols", self.integration_symbols)?;
        positive("noise_density", self.noise_density_w_per_hz)?;
        positive("distance", self.distance.value())?;
        positive("wavelength", self.wavelength.value())?;
        positive("rx_elements", self.rx_elements as f64)?;
        positive("alpha_range", self.constants.alpha_range)?;
        positive("alpha_angle", self.constants.alpha_angle)?;
        positive("ptx_w", self.ptx_w)
    }

    /// Everything except the transmit power, per watt.
    fn terms_per_watt(&self) -> (f64, f64) {
        let b = self.bandwidth.value();
        let d = self.distance.value();
        let n = self.rx_elements as f64;
        let lambda = self.wavelength.value();
        let pre = self.noise_density_w_per_hz * b * d * d / (self.integration_symbols * lambda * lambda);
        let range = pre * SPEED_OF_LIGHT * SPEED_OF_LIGHT * self.constants.alpha_range / (b * b * n);
        let angle = pre * d * d * self.constants.alpha_angle / (n * n * n);
        (range, angle)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LocalizationBound {
    pub speb_m2: f64,
    pub peb_m: f64,
    pub range_term_m2: f64,
    pub angle_term_m2: f64,
    pub range_err_m: f64,
    /// Angle-of-arrival error, rad.
    pub angle_err_rad: f64,
    /// Orientation error bound, rad, when one was computed.
    pub oeb_rad: Option<f64>,
}

pub fn speb(p: &SpebParams) -> Result<LocalizationBound, LocBoundError> {
    p.validate()?;
    let (r, a) = p.terms_per_watt();
    let (range, angle) = (r / p.ptx_w, a / p.ptx_w);
    let total = range + angle;
    Ok(LocalizationBound {
        speb_m2: total,
        peb_m: total.sqrt(),
        range_term_m2: range,
        angle_term_m2: angle,
        range_err_m: range.sqrt(),
        angle_err_rad: angle.sqrt() / p.distance.value(),
        oeb_rad: None,
    })
}

/// Transmit power that brings the bound down to `target_peb_m`. `p.ptx_w` is ignored.
pub fn required_tx_power(target_peb_m: f64, p: &SpebParams) -> Result<PowerDbm, LocBoundError> {
    positive("target_peb", target_peb_m)?;
    SpebParams { ptx_w: 1.0, ..*p }.validate()?;
    let (r, a) = p.terms_per_watt();
    let watts = (r + a) / (target_peb_m * target_peb_m);
    PowerDbm::from_watts(watts).map_err(|_| LocBoundError::NonPositive {
        field: "required power",
        value: watts,
    })
}

/// Bandwidth minimising the bound; `p.bandwidth` is ignored.
pub fn optimal_bandwidth(p: &SpebParams) -> Result<Bandwidth, LocBoundError> {
    p.validate()?;
    let b = SPEED_OF_LIGHT * p.rx_elements as f64 / p.distance.value()
        * (p.constants.alpha_range / p.constants.alpha_angle).sqrt();
    Bandwidth::new(b).map_err(|_| LocBoundError::NonPositive { field: "optimal bandwidth", value: b })
}

/// First-order lever arm: an orientation error `eps` seen from `d` away.
pub fn orientation_error_to_position_error(eps: Angle, d: Distance) -> Distance {
    Distance::new(d.value() * eps.radians().abs()).expect("product of finite non-negatives")
}

/// Uplink scenario for error-versus-distance curves: a single-antenna user
/// transmitting to an anchor with a linear array.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorCurveScenario {
    pub carrier: Frequency,
    pub bandwidth: Bandwidth,
    pub ptx: PowerDbm,
    pub symbols: f64,
    pub rx_elements: u32,
    pub rx_noise: NoiseModel,
    pub constants: SpebConstants,
    pub rate: RateModel,
}

impl ErrorCurveScenario {
    /// 140 GHz, 2 GHz, 14 dBm, 120 symbols, 16-element anchor, NF 5 dB.
    pub fn reference() -> Self {
        Self {
            carrier: Frequency::new(140e9).unwrap(),
            bandwidth: Bandwidth::new(2e9).unwrap(),
            ptx: PowerDbm::new(14.0).unwrap(),
            symbols: 120.0,
            rx_elements: 16,
            rx_noise: NoiseModel { noise_figure_db: 5.0 },
            constants: SpebConstants::default(),
            rate: RateModel::default(),
        }
    }

    pub fn speb_params(&self, d: Distance) -> SpebParams {
        SpebParams {
            integration_symbols: self.symbols,
            bandwidth: self.bandwidth,
            noise_density_w_per_hz: self.rx_noise.density_w_per_hz(),
            distance: d,
            wavelength: wavelength(self.carrier),
            rx_elements: self.rx_elements,
            constants: self.constants,
            ptx_w: self.ptx.watts(),
        }
    }

    pub fn uplink(&self, d: Distance) -> LinkParams {
        LinkParams {
            tx: ArrayConfig::linear(1),
            rx: ArrayConfig::linear(self.rx_elements),
            pathloss: PathlossModel {
                reference_distance_m: 1.0,
                exponent: 2.0,
                carrier: self.carrier,
            },
            distance: d,
            noise: self.rx_noise,
            impl_loss: Decibel(0.0),
            gains: GainModel::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurveRow {
    pub d_m: f64,
    pub range_err_m: f64,
    pub angle_err_deg: f64,
    pub peb_m: f64,
    pub rate_bps: f64,
}

pub fn error_vs_distance_curve(s: &ErrorCurveScenario, d_grid: &[f64]) -> Result<Vec<CurveRow>, LocBoundError> {
    if d_grid.iter().any(|&d| !(d.is_finite() && d > 0.0)) || d_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(LocBoundError::BadGrid);
    }
    d_grid
        .iter()
        .map(|&d| {
            let dist = Distance::new(d).map_err(|_| LocBoundError::BadGrid)?;
            let bound = speb(&s.speb_params(dist))?;
            let snr = crate::channel::link_snr_db(s.ptx, &s.uplink(dist), s.bandwidth)
                .map_err(|_| LocBoundError::BadGrid)?;
            Ok(CurveRow {
                d_m: d,
                range_err_m: bound.range_err_m,
                angle_err_deg: bound.angle_err_rad.to_degrees(),
                peb_m: bound.peb_m,
                rate_bps: achievable_rate_bps(snr, s.bandwidth, &s.rate),
            })
        })
        .collect()
}

/// Operating point used to extract the bound's constants from the Fisher oracle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CalibrationScenario {
    pub carrier: Frequency,
    pub bandwidth: Bandwidth,
    pub ptx: PowerDbm,
    pub symbols: f64,
    pub rx_elements: u32,
    pub subcarriers: u32,
    pub noise: NoiseModel,
    pub distance: Distance,
}

impl CalibrationScenario {
    pub fn reference() -> Self {
        let r = ErrorCurveScenario::reference();
        Self {
            carrier: r.carrier,
            bandwidth: r.bandwidth,
            ptx: r.ptx,
            symbols: r.symbols,
            rx_elements: r.rx_elements,
            subcarriers: 4096,
            noise: r.rx_noise,
            distance: Distance::new(50.0).unwrap(),
        }
    }

    /// Single-antenna, single-transmission SNR under free-space (Friis) loss.
    pub fn snr_per_antenna(&self) -> f64 {
        let lambda = wavelength(self.carrier).value();
        let d = self.distance.value();
        let four_pi = 4.0 * std::f64::consts::PI;
        self.ptx.watts() * lambda * lambda
            / (four_pi * four_pi * d * d * self.noise.density_w_per_hz() * self.bandwidth.value())
    }

    pub fn oracle(&self) -> OracleScenario {
        OracleScenario {
            pilots: self.symbols,
            bandwidth_hz: self.bandwidth.value(),
            snr: self.snr_per_antenna(),
            rx_elements: self.rx_elements,
            subcarriers: self.subcarriers,
            carrier_hz: self.carrier.value(),
            distance_m: self.distance.value(),
            angle_rad: 0.0,
            spacing: 0.5,
        }
    }
}

/// Match the oracle's range and angle CRLBs to the two terms of the bound.
pub fn calibrate_constants(s: &CalibrationScenario) -> Result<SpebConstants, LocBoundError> {
    let r = fisher_oracle(&s.oracle());
    let crb = r.crb.ok_or(LocBoundError::RankDeficient { rank: r.rank })?;
    let unit = SpebParams {
        integration_symbols: s.symbols,
        bandwidth: s.bandwidth,
        noise_density_w_per_hz: s.noise.density_w_per_hz(),
        distance: s.distance,
        wavelength: wavelength(s.carrier),
        rx_elements: s.rx_elements,
        constants: SpebConstants { alpha_range: 1.0, alpha_angle: 1.0 },
        ptx_w: s.ptx.watts(),
    };
    let b = speb(&unit)?;
    let d = s.distance.value();
    Ok(SpebConstants {
        alpha_range: crb[(0, 0)] / b.range_term_m2,
        alpha_angle: d * d * crb[(1, 1)] / b.angle_term_m2,
    })
}
