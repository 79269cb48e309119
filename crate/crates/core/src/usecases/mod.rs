//! Use-case KPIs, their per-use-case infrastructure requirements, and the
//! feasibility engine that scores a scenario against them.

mod evaluate;
mod recommend;
pub mod scenario;

use serde::{Deserialize, Serialize};

use crate::channel::ArrayKind;
use crate::deployment::KnowledgeBudget;
use crate::sensebounds::{SensingKpis, SensingMode};
pub use evaluate::{evaluate, FeasibilityReport};
pub use recommend::{recommend, Recommendation, RecommendError};
pub use scenario::{ConfigError, DeploymentConfig, HardwareConfig, ScenarioConfig, Shaping, SignalConfig, Waveform};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum UseCaseId {
    C1,
    C2,
    L1,
    L2,
    L3,
    S1,
    S2,
}

impl UseCaseId {
    pub const ALL: [UseCaseId; 7] = [Self::C1, Self::C2, Self::L1, Self::L2, Self::L3, Self::S1, Self::S2];

    pub fn class(self) -> UseCaseClass {
        match self {
            Self::C1 | Self::C2 => UseCaseClass::Communication,
            Self::L1 | Self::L2 | Self::L3 => UseCaseClass::Localization,
            Self::S1 | Self::S2 => UseCaseClass::Sensing,
        }
    }

    pub fn kpis(self) -> UseCaseKpis {
        builtin_use_cases().into_iter().find(|k| k.id == self).expect("registry covers every id")
    }
}

impl std::fmt::Display for UseCaseId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{self:?}")
    }
}

impl std::str::FromStr for UseCaseId {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        Self::ALL
            .into_iter()
            .find(|id| id.to_string().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown use case {s:?}, expected one of C1 C2 L1 L2 L3 S1 S2"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum UseCaseClass {
    Communication,
    Localization,
    Sensing,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UseCaseKpis {
    pub id: UseCaseId,
    pub rate_bps: Option<f64>,
    pub e2e_latency_s: Option<f64>,
    pub link_range_m: f64,
    pub loc_acc_m: Option<f64>,
    pub orient_acc_deg: Option<f64>,
    pub update_rate_hz: Option<f64>,
    pub sensing: Option<SensingKpis>,
}

impl UseCaseKpis {
    fn base(id: UseCaseId, link_range_m: f64) -> Self {
        Self {
            id,
            rate_bps: None,
            e2e_latency_s: None,
            link_range_m,
            loc_acc_m: None,
            orient_acc_deg: None,
            update_rate_hz: None,
            sensing: None,
        }
    }

    /// End-to-end budget: the stated latency, or one update period.
    pub fn latency_budget_s(&self) -> Option<f64> {
        self.e2e_latency_s.or(self.update_rate_hz.map(|r| 1.0 / r))
    }
}

pub fn builtin_use_cases() -> Vec<UseCaseKpis> {
    use UseCaseId::*;
    let comm = |id, rate, e2e, range| UseCaseKpis {
        rate_bps: Some(rate),
        e2e_latency_s: Some(e2e),
        ..UseCaseKpis::base(id, range)
    };
    let loc = |id, acc, orient, rate, range| UseCaseKpis {
        loc_acc_m: Some(acc),
        orient_acc_deg: orient,
        update_rate_hz: Some(rate),
        ..UseCaseKpis::base(id, range)
    };
    let s1 = SensingKpis {
        range_acc_m: 0.1,
        range_res_m: 0.1,
        velocity_mps: 0.04,
        ang_res_deg: 3.0,
        ang_acc_deg: 0.2,
        max_range_m: 50.0,
        update_rate_hz: 25.0,
        update_rate_is_ceiling: false,
        mode: SensingMode::Monostatic,
    };
    let s2 = SensingKpis {
        range_acc_m: 0.01,
        range_res_m: 0.1,
        velocity_mps: 0.1,
        ang_res_deg: 1.0,
        ang_acc_deg: 1.0,
        max_range_m: 10.0,
        update_rate_hz: 1000.0,
        update_rate_is_ceiling: true,
        mode: SensingMode::Bistatic,
    };
    let sense = |id, k: SensingKpis| UseCaseKpis {
        update_rate_hz: Some(k.update_rate_hz),
        sensing: Some(k),
        ..UseCaseKpis::base(id, k.max_range_m)
    };
    vec![
        comm(C1, 100e9, 0.1e-3, 10.0),
        comm(C2, 10e9, 1e-3, 100.0),
        loc(L1, 0.01, Some(1.0), 100.0, 10.0),
        loc(L2, 0.1, Some(1.0), 1000.0, 30.0),
        loc(L3, 1.0, None, 1.0, 1000.0),
        sense(S1, s1),
        sense(S2, s2),
    ]
}

/// One branch of an alternative ("(a) or (b)") resolution requirement.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResolutionRoute {
    pub label: &'static str,
    pub min_bandwidth_hz: f64,
    pub min_in_elements_per_dim: u32,
}

/// Infrastructure requirements of one use case beyond its KPIs.
#[derive(Debug, Clone, PartialEq)]
pub struct Requirements {
    /// Allowed carrier bands, Hz, any of which is acceptable.
    pub carrier_bands_hz: Vec<(f64, f64)>,
    /// Empty means any waveform.
    pub waveforms: Vec<Waveform>,
    /// Coherent processing is mandatory.
    pub coherent_required: bool,
    /// Channelization without phase coherence is disallowed.
    pub channelization_binding: bool,
    pub shaping: Vec<Shaping>,
    pub in_array_kinds: Vec<ArrayKind>,
    pub ue_array_kinds: Vec<ArrayKind>,
    pub min_in_elements_per_dim: u32,
    pub min_ue_elements_per_dim: u32,
    pub resolution_routes: Vec<ResolutionRoute>,
    /// Pairwise node clock budget when TDoA, D-MIMO or NLoS bistatic sensing is used.
    pub sync_budget_s: Option<f64>,
    pub knowledge: Option<KnowledgeBudget>,
    /// Qualitative transmit-power class, echoed in notes.
    pub power_class: &'static str,
    /// Preferred aggregate bandwidth when recommending a deployment.
    pub preferred_bandwidth_hz: f64,
    pub preferred_streams: u32,
    pub preferred_ue_elements_per_dim: u32,
}

const GHZ: f64 = 1e9;

pub fn requirements(id: UseCaseId) -> Requirements {
    use ArrayKind::*;
    use UseCaseId::*;
    let upper_mmwave = (60.0 * GHZ, 140.0 * GHZ);
    let base = Requirements {
        carrier_bands_hz: vec![upper_mmwave],
        waveforms: vec![],
        coherent_required: false,
        channelization_binding: false,
        shaping: vec![],
        in_array_kinds: vec![Analog, Hybrid],
        ue_array_kinds: vec![Analog, Hybrid],
        min_in_elements_per_dim: 10,
        min_ue_elements_per_dim: 4,
        resolution_routes: vec![],
        sync_budget_s: None,
        knowledge: None,
        power_class: "medium",
        preferred_bandwidth_hz: 2.0 * GHZ,
        preferred_streams: 1,
        preferred_ue_elements_per_dim: 8,
    };
    let ofdm = vec![Waveform::Ofdm, Waveform::DftsOfdm];
    match id {
        C1 => Requirements {
            sync_budget_s: Some(10e-9),
            preferred_bandwidth_hz: 4.2 * GHZ,
            preferred_streams: 4,
            ..base
        },
        C2 => Requirements {
            carrier_bands_hz: vec![(0.0, 6.0 * GHZ), upper_mmwave],
            sync_budget_s: Some(10e-9),
            preferred_streams: 4,
            ..base
        },
        L1 => Requirements {
            carrier_bands_hz: vec![(0.0, 30.0 * GHZ), upper_mmwave],
            waveforms: ofdm,
            coherent_required: true,
            channelization_binding: true,
            shaping: vec![Shaping::Frequency, Shaping::Time, Shaping::Space],
            min_ue_elements_per_dim: 10,
            resolution_routes: vec![
                ResolutionRoute { label: "(a) delay domain", min_bandwidth_hz: 2.0 * GHZ, min_in_elements_per_dim: 1 },
                ResolutionRoute { label: "(b) angular domain", min_bandwidth_hz: 0.5 * GHZ, min_in_elements_per_dim: 50 },
            ],
            sync_budget_s: Some(100e-12),
            knowledge: Some(KnowledgeBudget { position_m: Some(0.005), location_accuracy_m: 0.01 }),
            power_class: "low",
            preferred_ue_elements_per_dim: 16,
            ..base
        },
        L2 => Requirements {
            waveforms: ofdm,
            coherent_required: true,
            channelization_binding: true,
            shaping: vec![Shaping::Frequency, Shaping::Space],
            in_array_kinds: vec![Hybrid, Digital],
            min_ue_elements_per_dim: 10,
            resolution_routes: vec![ResolutionRoute {
                label: "delay domain",
                min_bandwidth_hz: 0.4 * GHZ,
                min_in_elements_per_dim: 1,
            }],
            sync_budget_s: Some(0.5e-9),
            knowledge: Some(KnowledgeBudget { position_m: Some(0.05), location_accuracy_m: 0.1 }),
            power_class: "higher (short integration time)",
            preferred_bandwidth_hz: 1.0 * GHZ,
            preferred_ue_elements_per_dim: 16,
            ..base
        },
        L3 => Requirements {
            carrier_bands_hz: vec![(6.0 * GHZ, 30.0 * GHZ)],
            in_array_kinds: vec![Analog],
            ue_array_kinds: vec![Analog, Hybrid, Digital],
            min_in_elements_per_dim: 1,
            min_ue_elements_per_dim: 1,
            sync_budget_s: Some(10e-9),
            knowledge: Some(KnowledgeBudget { position_m: Some(1.0), location_accuracy_m: 1.0 }),
            power_class: "higher (long link range)",
            preferred_bandwidth_hz: 0.4 * GHZ,
            preferred_ue_elements_per_dim: 1,
            ..base
        },
        S1 => Requirements {
            waveforms: ofdm,
            coherent_required: true,
            channelization_binding: true,
            shaping: vec![Shaping::Frequency, Shaping::Time, Shaping::Space],
            min_ue_elements_per_dim: 35,
            power_class: "high (two-way path loss)",
            preferred_ue_elements_per_dim: 100,
            ..base
        },
        S2 => Requirements {
            waveforms: ofdm,
            coherent_required: true,
            channelization_binding: true,
            ue_array_kinds: vec![Hybrid, Digital],
            min_ue_elements_per_dim: 100,
            sync_budget_s: Some(100e-12),
            knowledge: Some(KnowledgeBudget { position_m: Some(0.005), location_accuracy_m: 0.01 }),
            power_class: "high (two-way path loss)",
            preferred_bandwidth_hz: 4.0 * GHZ,
            preferred_ue_elements_per_dim: 102,
            ..base
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn registry() {
        let r = builtin_use_cases();
        assert_eq!(r.len(), 7);
        assert_eq!(UseCaseId::L2.kpis().update_rate_hz, Some(1000.0));
        assert_eq!(UseCaseId::S1.kpis().sensing.unwrap().max_range_m, 50.0);
        assert_eq!(UseCaseId::C1.kpis().rate_bps, Some(100e9));
        assert_eq!(UseCaseId::L1.kpis().loc_acc_m, Some(0.01));
        assert_eq!(UseCaseId::L3.kpis().link_range_m, 1000.0);
        assert_eq!("s2".parse::<UseCaseId>(), Ok(UseCaseId::S2));
        assert!("X9".parse::<UseCaseId>().is_err());
    }

    #[test]
    fn latency_budget_falls_back_to_update_period() {
        assert_eq!(UseCaseId::C1.kpis().latency_budget_s(), Some(1e-4));
        assert_eq!(UseCaseId::L2.kpis().latency_budget_s(), Some(1e-3));
    }
}
