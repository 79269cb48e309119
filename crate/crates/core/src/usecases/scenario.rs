//! Full scenario description: signal, hardware and deployment choices.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::channel::{ArrayConfig, ArrayKind, GainModel, LinkParams, NoiseModel, PathlossModel, RadarParams, RadarTarget};
use crate::deployment::{InfrastructureNode, MeasurementMix, Obstacle, RadioContext, Region};
use crate::linkbudget::{Numerology, RateModel};
use crate::quantities::{Bandwidth, Decibel, Distance, Frequency, PowerDbm};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Waveform {
    Ofdm,
    DftsOfdm,
    Otfs,
    SingleCarrier,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Shaping {
    Frequency,
    Time,
    Space,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SignalConfig {
    /// Aggregate bandwidth, Hz.
    pub bandwidth_hz: f64,
    pub waveform: Waveform,
    pub coherent: bool,
    pub shaping: Vec<Shaping>,
    pub streams: u32,
    pub se_cap_bps_per_hz: f64,
    pub numerology: Numerology,
}

impl Default for SignalConfig {
    fn default() -> Self {
        Self {
            bandwidth_hz: 2e9,
            waveform: Waveform::Ofdm,
            coherent: true,
            shaping: Vec::new(),
            streams: 1,
            se_cap_bps_per_hz: 6.0,
            numerology: Numerology::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HardwareConfig {
    pub carrier_hz: f64,
    pub channelized: bool,
    pub channel_bandwidth_hz: f64,
    pub phase_coherent: bool,
    pub in_array: ArrayConfig,
    pub ue_array: ArrayConfig,
    /// Per-element transmit power at the infrastructure, dBm.
    pub in_ptx_dbm: f64,
    /// Per-element transmit power at the user, dBm.
    pub ue_ptx_dbm: f64,
    pub in_noise_figure_db: f64,
    pub ue_noise_figure_db: f64,
    /// Back-off plus receiver implementation loss.
    pub impl_loss_db: f64,
    pub calibration_db: f64,
    pub pathloss_exponent: f64,
}

impl Default for HardwareConfig {
    fn default() -> Self {
        Self {
            carrier_hz: 140e9,
            channelized: false,
            channel_bandwidth_hz: 2e9,
            phase_coherent: true,
            in_array: ArrayConfig { kind: ArrayKind::Hybrid, ..ArrayConfig::planar(16) },
            ue_array: ArrayConfig { kind: ArrayKind::Hybrid, ..ArrayConfig::planar(8) },
            in_ptx_dbm: 5.0,
            ue_ptx_dbm: 5.0,
            in_noise_figure_db: 5.0,
            ue_noise_figure_db: 10.0,
            impl_loss_db: 20.0,
            calibration_db: 0.0,
            pathloss_exponent: 2.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DeploymentConfig {
    pub nodes: Vec<InfrastructureNode>,
    pub obstacles: Vec<Obstacle>,
    pub region: Option<Region>,
    pub mix: MeasurementMix,
    pub dim: u8,
    /// Evaluation point for visibility and geometry checks.
    pub ue_position_m: [f64; 3],
    /// Coherent joint transmission across nodes.
    pub dmimo: bool,
    /// Bistatic transmitter and receiver see each other.
    pub tx_rx_los: bool,
    pub target_rcs_m2: f64,
    pub detection_threshold_db: f64,
}

impl Default for DeploymentConfig {
    fn default() -> Self {
        Self {
            nodes: Vec::new(),
            obstacles: Vec::new(),
            region: None,
            mix: MeasurementMix { tdoa_s: Some(30e-12), aoa_rad: Some(1f64.to_radians()), ..Default::default() },
            dim: 3,
            ue_position_m: [0.0, 0.0, 1.5],
            dmimo: false,
            tx_rx_los: true,
            target_rcs_m2: 1.0,
            detection_threshold_db: crate::sensebounds::DEFAULT_DETECTION_THRESHOLD_DB,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct ScenarioConfig {
    pub signal: SignalConfig,
    pub hardware: HardwareConfig,
    pub deployment: DeploymentConfig,
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("invalid scenario: {}", problems.join("; "))]
pub struct ConfigError {
    pub problems: Vec<String>,
}

fn finite_positive(v: f64) -> bool {
    v.is_finite() && v > 0.0
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let mut p = Vec::new();
        let s = &self.signal;
        let h = &self.hardware;
        let d = &self.deployment;
        if !finite_positive(s.bandwidth_hz) {
            p.push(format!("signal.bandwidth_hz must be > 0, got {}", s.bandwidth_hz));
        }
        if let Err(e) = self.rate_model().validate() {
            p.push(format!("signal: {e}"));
        }
        if let Err(e) = s.numerology.validate() {
            p.push(format!("signal.numerology: {e}"));
        }
        if !finite_positive(h.carrier_hz) {
            p.push(format!("hardware.carrier_hz must be > 0, got {}", h.carrier_hz));
        }
        if !finite_positive(h.channel_bandwidth_hz) {
            p.push(format!("hardware.channel_bandwidth_hz must be > 0, got {}", h.channel_bandwidth_hz));
        }
        for (name, a) in [("in_array", &h.in_array), ("ue_array", &h.ue_array)] {
            if let Err(e) = a.validate() {
                p.push(format!("hardware.{name}: {e}"));
            }
        }
        for (name, v) in [("in_ptx_dbm", h.in_ptx_dbm), ("ue_ptx_dbm", h.ue_ptx_dbm), ("impl_loss_db", h.impl_loss_db), ("calibration_db", h.calibration_db)] {
            if !v.is_finite() {
                p.push(format!("hardware.{name} must be finite"));
            }
        }
        for (name, v) in [("in_noise_figure_db", h.in_noise_figure_db), ("ue_noise_figure_db", h.ue_noise_figure_db)] {
            if !(v.is_finite() && v >= 0.0) {
                p.push(format!("hardware.{name} must be >= 0, got {v}"));
            }
        }
        if !(1.5..=6.0).contains(&h.pathloss_exponent) {
            p.push(format!("hardware.pathloss_exponent must be in [1.5, 6], got {}", h.pathloss_exponent));
        }
        for (i, n) in d.nodes.iter().enumerate() {
            if let Err(e) = n.validate(i) {
                p.push(format!("deployment: {e}"));
            }
        }
        for (i, o) in d.obstacles.iter().enumerate() {
            if let Err(e) = o.validate() {
                p.push(format!("deployment.obstacles[{i}]: {e}"));
            }
        }
        if let Some(r) = &d.region {
            if let Err(e) = r.validate() {
                p.push(format!("deployment: {e}"));
            }
        }
        if let Err(e) = d.mix.validate() {
            p.push(format!("deployment: {e}"));
        }
        if !(d.dim == 2 || d.dim == 3) {
            p.push(format!("deployment.dim must be 2 or 3, got {}", d.dim));
        }
        if d.ue_position_m.iter().any(|v| !v.is_finite()) {
            p.push("deployment.ue_position_m must be finite".into());
        }
        if !finite_positive(d.target_rcs_m2) {
            p.push(format!("deployment.target_rcs_m2 must be > 0, got {}", d.target_rcs_m2));
        }
        if !d.detection_threshold_db.is_finite() {
            p.push("deployment.detection_threshold_db must be finite".into());
        }
        if p.is_empty() {
            Ok(())
        } else {
            Err(ConfigError { problems: p })
        }
    }

    pub fn bandwidth(&self) -> Bandwidth {
        Bandwidth::new(self.signal.bandwidth_hz).expect("validated")
    }

    pub fn carrier(&self) -> Frequency {
        Frequency::new(self.hardware.carrier_hz).expect("validated")
    }

    pub fn rate_model(&self) -> RateModel {
        RateModel { se_cap_bps_per_hz: self.signal.se_cap_bps_per_hz, streams: self.signal.streams }
    }

    fn pathloss(&self) -> PathlossModel {
        PathlossModel { reference_distance_m: 1.0, exponent: self.hardware.pathloss_exponent, carrier: self.carrier() }
    }

    fn gains(&self) -> GainModel {
        GainModel { calibration_db: self.hardware.calibration_db }
    }

    pub fn in_noise(&self) -> NoiseModel {
        NoiseModel { noise_figure_db: self.hardware.in_noise_figure_db }
    }

    pub fn ue_noise(&self) -> NoiseModel {
        NoiseModel { noise_figure_db: self.hardware.ue_noise_figure_db }
    }

    /// Infrastructure to user.
    pub fn downlink(&self, d: Distance) -> LinkParams {
        LinkParams {
            tx: self.hardware.in_array,
            rx: self.hardware.ue_array,
            pathloss: self.pathloss(),
            distance: d,
            noise: self.ue_noise(),
            impl_loss: Decibel(self.hardware.impl_loss_db),
            gains: self.gains(),
        }
    }

    /// User to infrastructure.
    pub fn uplink(&self, d: Distance) -> LinkParams {
        LinkParams {
            tx: self.hardware.ue_array,
            rx: self.hardware.in_array,
            noise: self.in_noise(),
            ..self.downlink(d)
        }
    }

    /// Infrastructure transmits, the user-side array receives the echo.
    pub fn radar(&self) -> RadarParams {
        RadarParams {
            tx: self.hardware.in_array,
            rx: self.hardware.ue_array,
            carrier: self.carrier(),
            target: RadarTarget::with_rcs(self.deployment.target_rcs_m2),
            noise: self.ue_noise(),
            impl_loss: Decibel(self.hardware.impl_loss_db),
            gains: self.gains(),
        }
    }

    /// Downlink and radar parameters for rate and sensing-SNR maps.
    pub fn radio_context(&self) -> RadioContext {
        RadioContext {
            link: self.downlink(Distance::new(1.0).expect("positive")),
            ptx_per_element: PowerDbm::new(self.hardware.in_ptx_dbm).expect("validated"),
            bandwidth: self.bandwidth(),
            rate: self.rate_model(),
            radar: self.radar(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        assert_eq!(ScenarioConfig::default().validate(), Ok(()));
    }

    #[test]
    fn problems_are_collected() {
        let mut s = ScenarioConfig::default();
        s.signal.bandwidth_hz = -1.0;
        s.deployment.dim = 4;
        let e = s.validate().unwrap_err();
        assert_eq!(e.problems.len(), 2);
        assert!(e.problems[0].contains("bandwidth_hz"));
    }

    #[test]
    fn json_round_trip() {
        let mut s = ScenarioConfig::default();
        s.deployment.nodes.push(InfrastructureNode::bs([1.0, 2.0, 3.0]));
        s.signal.shaping = vec![Shaping::Space];
        let text = serde_json::to_string(&s).unwrap();
        let back: ScenarioConfig = serde_json::from_str(&text).unwrap();
        assert_eq!(back, s);
        let partial: ScenarioConfig = serde_json::from_str(r#"{"signal":{"bandwidth_hz":4e9}}"#).unwrap();
        assert_eq!(partial.signal.bandwidth_hz, 4e9);
        assert_eq!(partial.hardware, HardwareConfig::default());
    }
}
