use serde::Serialize;
use thiserror::Error;

use super::evaluate::{evaluate, FeasibilityReport};
use super::scenario::{DeploymentConfig, HardwareConfig, ScenarioConfig, SignalConfig, Waveform};
use super::{requirements, Requirements, Shaping, UseCaseClass, UseCaseId};
use crate::channel::{ArrayConfig, ArrayKind};
use crate::deployment::{InfrastructureNode, MeasurementMix, Region};
use crate::report::Verdict;

/// Width of one RF chain's channel; wider aggregates are channelized.
pub const CHANNEL_BANDWIDTH_HZ: f64 = 2e9;
/// Carrier used when the union of use cases does not force another band.
const PREFERRED_CARRIERS_HZ: [f64; 3] = [140e9, 28e9, 5.5e9];
/// Headroom added on top of the smallest passing transmit power.
pub const POWER_MARGIN_DB: f64 = 3.0;
const POWER_SCAN_DBM: std::ops::RangeInclusive<i32> = -40..=46;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Recommendation {
    pub scenario: ScenarioConfig,
    pub notes: Vec<String>,
    pub reports: Vec<FeasibilityReport>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RecommendError {
    #[error("no use cases selected")]
    Empty,
    #[error("{use_case} cannot be met at any transmit power up to {max_dbm} dBm: {}", failing.join(", "))]
    Unresolved { use_case: UseCaseId, failing: Vec<String>, max_dbm: i32 },
}

/// Smallest configuration that covers every selected use case, verified by
/// evaluating it against each of them.
pub fn recommend(ids: &[UseCaseId]) -> Result<Recommendation, RecommendError> {
    let mut ids = ids.to_vec();
    ids.sort();
    ids.dedup();
    if ids.is_empty() {
        return Err(RecommendError::Empty);
    }
    let reqs: Vec<(UseCaseId, Requirements)> = ids.iter().map(|&id| (id, requirements(id))).collect();
    let mut notes = Vec::new();

    let widest = reqs.iter().map(|(_, r)| r.preferred_bandwidth_hz).fold(0.0, f64::max);
    let channels = (widest / CHANNEL_BANDWIDTH_HZ - 1e-9).ceil().max(1.0);
    let bandwidth_hz = channels * CHANNEL_BANDWIDTH_HZ;
    let channelized = channels > 1.0;
    notes.push(if channelized {
        format!("bandwidth {} GHz as {channels} phase-coherent channels of 2 GHz", bandwidth_hz / 1e9)
    } else {
        format!("bandwidth {} GHz in one channel", bandwidth_hz / 1e9)
    });

    let carrier_hz = choose_carrier(&reqs);
    let outside: Vec<String> = reqs
        .iter()
        .filter(|(_, r)| !r.carrier_bands_hz.iter().any(|(lo, hi)| (*lo..=*hi).contains(&carrier_hz)))
        .map(|(id, _)| id.to_string())
        .collect();
    notes.push(if outside.is_empty() {
        format!("carrier {} GHz", carrier_hz / 1e9)
    } else {
        format!("carrier {} GHz, outside the preferred band of {}", carrier_hz / 1e9, outside.join(", "))
    });

    let streams = reqs.iter().map(|(_, r)| r.preferred_streams).max().unwrap_or(1);
    let in_per_dim = reqs.iter().map(|(_, r)| r.min_in_elements_per_dim).max().unwrap_or(1).max(16);
    let ue_per_dim = reqs
        .iter()
        .map(|(_, r)| r.preferred_ue_elements_per_dim.max(r.min_ue_elements_per_dim))
        .max()
        .unwrap_or(1);
    let mut shaping: Vec<Shaping> = reqs.iter().flat_map(|(_, r)| r.shaping.iter().copied()).collect();
    if streams > 1 {
        shaping.push(Shaping::Space);
    }
    shaping.sort();
    shaping.dedup();
    let coherent = reqs.iter().any(|(_, r)| r.coherent_required) || channelized;
    let array = |n| ArrayConfig { kind: ArrayKind::Hybrid, ..ArrayConfig::planar(n) };
    notes.push(format!("IN arrays {in_per_dim}x{in_per_dim} hybrid, UE array {ue_per_dim}x{ue_per_dim} hybrid, {streams} stream(s)"));

    let sync_s = 50e-12;
    let nodes: Vec<InfrastructureNode> = [[-5.0, -5.0, 3.0], [5.0, -5.0, 4.0], [5.0, 5.0, 3.5], [-5.0, 5.0, 5.0]]
        .into_iter()
        .map(|p| InfrastructureNode {
            array: array(in_per_dim),
            sync_error_s: sync_s,
            position_error_m: 0.002,
            orientation_error_rad: 0.05f64.to_radians(),
            ..InfrastructureNode::bs(p)
        })
        .collect();
    notes.push("four ceiling nodes on a 10 m square, 50 ps clock error, 2 mm / 0.05 deg pose knowledge".into());

    let mut scenario = ScenarioConfig {
        signal: SignalConfig {
            bandwidth_hz,
            waveform: Waveform::Ofdm,
            coherent,
            shaping,
            streams,
            ..SignalConfig::default()
        },
        hardware: HardwareConfig {
            carrier_hz,
            channelized,
            channel_bandwidth_hz: CHANNEL_BANDWIDTH_HZ,
            phase_coherent: true,
            in_array: array(in_per_dim),
            ue_array: array(ue_per_dim),
            ..HardwareConfig::default()
        },
        deployment: DeploymentConfig {
            nodes,
            region: Some(Region { min_m: [-10.0, -10.0], max_m: [10.0, 10.0], height_m: 1.5, resolution_m: 0.5 }),
            mix: MeasurementMix { tdoa_s: Some(10e-12), aoa_rad: Some(0.1f64.to_radians()), ..Default::default() },
            tx_rx_los: true,
            ..DeploymentConfig::default()
        },
    };

    let passes = |s: &ScenarioConfig| -> Vec<FeasibilityReport> {
        ids.iter().map(|id| evaluate(s, &id.kpis()).expect("recommended scenario is valid")).collect()
    };
    let mut found = None;
    let mut last = Vec::new();
    for p in POWER_SCAN_DBM {
        set_power(&mut scenario, p as f64);
        last = passes(&scenario);
        if last.iter().all(|r| r.overall == Verdict::Pass) {
            found = Some(p);
            break;
        }
    }
    let Some(p) = found else {
        let bad = last.into_iter().find(|r| r.overall == Verdict::Fail).expect("some report failed");
        return Err(RecommendError::Unresolved {
            use_case: bad.use_case,
            failing: bad.failing().into_iter().map(String::from).collect(),
            max_dbm: *POWER_SCAN_DBM.end(),
        });
    };
    let power = p as f64 + POWER_MARGIN_DB;
    set_power(&mut scenario, power);
    notes.push(format!("transmit power {power} dBm per element ({p} dBm needed plus {POWER_MARGIN_DB} dB)"));
    let reports = passes(&scenario);
    debug_assert!(reports.iter().all(|r| r.overall == Verdict::Pass));
    Ok(Recommendation { scenario, notes, reports })
}

fn set_power(s: &mut ScenarioConfig, dbm: f64) {
    s.hardware.in_ptx_dbm = dbm;
    s.hardware.ue_ptx_dbm = dbm;
}

/// The preferred carrier accepted by the most use cases; communication and
/// sensing break ties toward the highest band.
fn choose_carrier(reqs: &[(UseCaseId, Requirements)]) -> f64 {
    let votes = |f: f64| {
        reqs.iter()
            .filter(|(_, r)| r.carrier_bands_hz.iter().any(|(lo, hi)| (*lo..=*hi).contains(&f)))
            .map(|(id, _)| if id.class() == UseCaseClass::Localization { 1 } else { 2 })
            .sum::<u32>()
    };
    PREFERRED_CARRIERS_HZ
        .into_iter()
        .rev()
        .max_by_key(|&f| votes(f))
        .expect("nonempty carrier list")
}
