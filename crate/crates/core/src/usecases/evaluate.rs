use serde::{Deserialize, Serialize};

use super::scenario::{ConfigError, ScenarioConfig};
use super::{requirements, Requirements, UseCaseClass, UseCaseId, UseCaseKpis};
use crate::deployment::{
    gdop, in_knowledge_check, los_visible, min_anchor_check, sync_budget_check, InfrastructureNode, MeasurementType,
    NodeKind,
};
use crate::linkbudget::{achievable_rate_bps, phy_latency, required_power_per_element, Requirement, PHY_LATENCY_SHARE};
use crate::locbounds::{required_tx_power, speb, SpebConstants, SpebParams};
use crate::quantities::{wavelength, Distance, Duration, PowerDbm};
use crate::report::{Check, Verdict};
use crate::sensebounds::{sensing_feasibility, SensingScenario};
use crate::channel::link_snr_db;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityReport {
    pub use_case: UseCaseId,
    pub overall: Verdict,
    pub checks: Vec<Check>,
    /// Name of the check with the smallest margin.
    pub limiting_constraint: Option<String>,
}

impl FeasibilityReport {
    /// Advisory checks never fail and never name the limiting constraint.
    fn new(use_case: UseCaseId, binding: Vec<Check>, advisory: Vec<Check>) -> Self {
        let overall = if binding.iter().any(|c| c.verdict == Verdict::Fail) { Verdict::Fail } else { Verdict::Pass };
        let limiting_constraint = binding
            .iter()
            .filter(|c| c.verdict != Verdict::Warn && (c.score().is_finite() || c.verdict == Verdict::Fail))
            .min_by(|a, b| a.score().total_cmp(&b.score()))
            .map(|c| c.name.clone());
        let mut checks = binding;
        checks.extend(advisory);
        Self { use_case, overall, checks, limiting_constraint }
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn failing(&self) -> Vec<&str> {
        self.checks.iter().filter(|c| c.verdict == Verdict::Fail).map(|c| c.name.as_str()).collect()
    }
}

pub fn evaluate(s: &ScenarioConfig, uc: &UseCaseKpis) -> Result<FeasibilityReport, ConfigError> {
    s.validate()?;
    let req = requirements(uc.id);
    let mut binding = match uc.id.class() {
        UseCaseClass::Communication => communication(s, uc, &req),
        UseCaseClass::Localization => localization(s, uc, &req),
        UseCaseClass::Sensing => sensing(s, uc, &req),
    };
    binding.extend(processing(s, &req));
    Ok(FeasibilityReport::new(uc.id, binding, advisory(s, uc, &req)))
}

fn ghz(hz: f64) -> String {
    format!("{} GHz", (hz / 1e9 * 1000.0).round() / 1000.0)
}

fn visible<'a>(s: &'a ScenarioConfig) -> impl Iterator<Item = &'a InfrastructureNode> + 'a {
    s.deployment.nodes.iter().filter(|n| los_visible(s.deployment.ue_position_m, n, &s.deployment.obstacles))
}

fn latency_check(s: &ScenarioConfig, uc: &UseCaseKpis) -> Option<Check> {
    let budget = uc.latency_budget_s()?;
    let l = phy_latency(s.bandwidth(), &s.signal.numerology).value();
    Some(
        Check::at_most("latency", "KPI: end-to-end latency", "s", PHY_LATENCY_SHARE * budget, l).note(format!(
            "two slots of {} symbols; physical layer gets {:.0}% of {} s",
            s.signal.numerology.symbols_per_slot,
            PHY_LATENCY_SHARE * 100.0,
            budget
        )),
    )
}

fn communication(s: &ScenarioConfig, uc: &UseCaseKpis, req: &Requirements) -> Vec<Check> {
    let mut out = Vec::new();
    let bs = visible(s).filter(|n| n.kind == NodeKind::Bs).count();
    out.push(Check::at_least("coverage", "deployments: placement around each device", "count", 1.0, bs as f64));

    let rate = uc.rate_bps.expect("communication KPI");
    let d = Distance::new(uc.link_range_m).expect("positive range");
    let b = s.bandwidth();
    let m = s.rate_model();
    let dirs = [
        ("downlink", s.downlink(d), s.hardware.in_ptx_dbm),
        ("uplink", s.uplink(d), s.hardware.ue_ptx_dbm),
    ];
    let mut worst: Option<(f64, String)> = None;
    let mut notes = Vec::new();
    for (name, link, ptx) in dirs {
        let p = PowerDbm::new(ptx).expect("validated");
        let achieved = link_snr_db(p, &link, b).map(|snr| achievable_rate_bps(snr, b, &m)).unwrap_or(0.0);
        let need = match required_power_per_element(rate, b, &m, &link) {
            Ok(Requirement::Feasible(p)) => format!("{name} needs {:.1} dBm/element", p.value()),
            Ok(Requirement::Infeasible(why)) => format!("{name} infeasible: {why}"),
            Err(e) => format!("{name}: {e}"),
        };
        notes.push(need);
        if worst.as_ref().is_none_or(|(r, _)| achieved < *r) {
            worst = Some((achieved, name.to_string()));
        }
    }
    let (achieved, limiting) = worst.expect("two directions");
    out.push(
        Check::at_least("rate", "KPI: per-user rate", "bps", rate, achieved)
            .note(format!("{limiting} limits at {} m; {}", uc.link_range_m, notes.join("; "))),
    );
    out.extend(latency_check(s, uc));
    if s.deployment.dmimo {
        out.push(sync_budget_check(req.sync_budget_s, &s.deployment.nodes, "deployments: synchronization (D-MIMO)"));
    }
    out
}

/// Transmissions that fit into one update period.
fn integration_symbols(s: &ScenarioConfig, uc: &UseCaseKpis) -> u64 {
    let period = Duration::new(1.0 / uc.update_rate_hz.expect("localization KPI")).expect("positive rate");
    s.signal.numerology.symbols_in(period, s.bandwidth())
}

fn bound_params(s: &ScenarioConfig, d: f64, t: u64, rx_elements: u32, noise_w_per_hz: f64, ptx_w: f64) -> SpebParams {
    SpebParams {
        integration_symbols: t as f64,
        bandwidth: s.bandwidth(),
        noise_density_w_per_hz: noise_w_per_hz,
        distance: Distance::new(d).expect("positive range"),
        wavelength: wavelength(s.carrier()),
        rx_elements,
        constants: SpebConstants::default(),
        ptx_w,
    }
}

fn localization(s: &ScenarioConfig, uc: &UseCaseKpis, req: &Requirements) -> Vec<Check> {
    let mut out = Vec::new();
    let dep = &s.deployment;
    let mix = &dep.mix;
    let acc = uc.loc_acc_m.expect("localization KPI");
    let uses_aoa = mix.uses(MeasurementType::Aoa);
    let time_types = [MeasurementType::Toa, MeasurementType::Tdoa, MeasurementType::Rtt];
    let uses_time = time_types.iter().any(|t| mix.uses(*t));
    let anchors = visible(s)
        .filter(|n| (uses_time && n.measures_time()) || (uses_aoa && n.measures_angle()))
        .count();
    out.push(min_anchor_check(mix, dep.dim, anchors as u32));

    out.push(if mix.uses(MeasurementType::Tdoa) {
        sync_budget_check(req.sync_budget_s, &dep.nodes, "deployments: synchronization (TDoA)")
    } else {
        Check::flag("sync", "deployments: synchronization (TDoA)", Verdict::Pass, "no TDoA in the measurement mix")
    });

    let budget = req.knowledge.expect("localization knowledge budget");
    let d = Distance::new(uc.link_range_m).expect("positive range");
    let mut knowledge = in_knowledge_check(&budget, &dep.nodes, d, "deployments: IN knowledge");
    if !uses_aoa {
        knowledge[1] = Check::flag("in_orientation", "deployments: IN knowledge", Verdict::Pass, "no AoA in the measurement mix");
    }
    out.extend(knowledge);

    let g = gdop(dep.ue_position_m, &dep.nodes, mix, &dep.obstacles, dep.dim);
    let peb = Check::at_most("peb", "KPI: location accuracy", "m", acc, g.peb_m);
    out.push(if g.observable {
        peb.note(format!("GDOP {:.3}", g.gdop))
    } else {
        peb.note(format!("geometry unobservable (FIM rank {} < {})", g.rank, dep.dim))
    });

    let t = integration_symbols(s, uc);
    let h = &s.hardware;
    if t == 0 {
        out.push(Check::flag("tx_power", "hardware: transmit power", Verdict::Fail, "update period shorter than one symbol"));
    } else {
        let ue_total = h.ue_array.total_elements() as f64;
        let p = bound_params(s, uc.link_range_m, t, h.in_array.elements_per_dim, s.in_noise().density_w_per_hz(), 1.0);
        let total = required_tx_power(acc, &p).expect("validated inputs");
        let per_element = total.value() - 10.0 * ue_total.log10();
        out.push(
            Check::at_least_db("tx_power", "hardware: transmit power", per_element, h.ue_ptx_dbm).note(format!(
                "{}; uplink bound over {t} symbols at {} m",
                req.power_class, uc.link_range_m
            )),
        );
        if let Some(orient) = uc.orient_acc_deg {
            let in_total_w = PowerDbm::new(h.in_ptx_dbm).expect("validated").watts() * h.in_array.total_elements() as f64;
            let p = bound_params(s, uc.link_range_m, t, h.ue_array.elements_per_dim, s.ue_noise().density_w_per_hz(), in_total_w);
            let oeb = speb(&p).expect("validated inputs").angle_err_rad.to_degrees();
            out.push(
                Check::at_most("orientation", "KPI: orientation accuracy", "deg", orient, oeb)
                    .note(format!("downlink angle bound with {} UE elements per dimension", h.ue_array.elements_per_dim)),
            );
        }
    }

    out.push(resolution_check(s, req));
    out.extend(latency_check(s, uc));
    out
}

fn resolution_check(s: &ScenarioConfig, req: &Requirements) -> Check {
    let row = "signals: bandwidth / hardware: IN array size";
    if req.resolution_routes.is_empty() {
        return Check::flag("resolution", row, Verdict::Pass, "no resolution requirement");
    }
    let b = s.signal.bandwidth_hz;
    let n = s.hardware.in_array.elements_per_dim as f64;
    let scored: Vec<_> = req
        .resolution_routes
        .iter()
        .map(|r| {
            let bw = Check::at_least("resolution", row, "Hz", r.min_bandwidth_hz, b);
            let arr = Check::at_least("resolution", row, "elements", r.min_in_elements_per_dim as f64, n);
            // An AND-branch is as strong as its weakest leg.
            let leg = if arr.score() < bw.score() && r.min_in_elements_per_dim > 1 { arr } else { bw };
            (r, leg)
        })
        .collect();
    let (route, best) = scored
        .iter()
        .max_by(|a, b| a.1.score().total_cmp(&b.1.score()))
        .expect("nonempty routes");
    let describe = |r: &super::ResolutionRoute| {
        if r.min_in_elements_per_dim > 1 {
            format!("{}: B >= {} and IN >= {}/dim", r.label, ghz(r.min_bandwidth_hz), r.min_in_elements_per_dim)
        } else {
            format!("{}: B >= {}", r.label, ghz(r.min_bandwidth_hz))
        }
    };
    let verdict = if best.verdict == Verdict::Pass { "satisfied by" } else { "closest branch" };
    best.clone().note(format!("{verdict} {}", describe(route)))
}

fn sensing(s: &ScenarioConfig, uc: &UseCaseKpis, req: &Requirements) -> Vec<Check> {
    let kpis = uc.sensing.expect("sensing KPI");
    let scenario = SensingScenario {
        bandwidth_hz: s.signal.bandwidth_hz,
        radar: s.radar(),
        ptx_per_element: PowerDbm::new(s.hardware.in_ptx_dbm).expect("validated"),
        numerology: s.signal.numerology,
        detection_threshold_db: s.deployment.detection_threshold_db,
    };
    let mut out = sensing_feasibility(&kpis, &scenario);
    if uc.id == UseCaseId::S2 {
        let dep = &s.deployment;
        let rx = visible(s).filter(|n| n.kind == NodeKind::Bs).count();
        out.push(Check::at_least("rx_nodes", "deployments: placement (receiving INs)", "count", 1.0, rx as f64));
        out.push(if dep.tx_rx_los {
            Check::flag("sync", "deployments: synchronization", Verdict::Pass, "transmitter and receiver in LoS")
        } else {
            sync_budget_check(req.sync_budget_s, &dep.nodes, "deployments: synchronization (NLoS)")
        });
        let budget = req.knowledge.expect("S2 knowledge budget");
        let d = Distance::new(kpis.max_range_m).expect("positive range");
        out.extend(in_knowledge_check(&budget, &dep.nodes, d, "deployments: IN knowledge"));
    }
    out
}

fn in_bands(f: f64, bands: &[(f64, f64)]) -> bool {
    bands.iter().any(|(lo, hi)| (*lo..=*hi).contains(&f))
}

fn processing(s: &ScenarioConfig, req: &Requirements) -> Vec<Check> {
    let mut out = Vec::new();
    let h = &s.hardware;
    let sig = &s.signal;

    if req.coherent_required {
        out.push(if sig.coherent {
            Check::flag("coherence", "signals: modulation", Verdict::Pass, "coherent")
        } else {
            Check::flag("coherence", "signals: modulation", Verdict::Fail, "coherent processing required")
        });
    }

    let channels = (sig.bandwidth_hz / h.channel_bandwidth_hz).ceil().max(1.0);
    let chan_note = format!("{} channel(s) of {}", channels, ghz(h.channel_bandwidth_hz));
    out.push(match (h.channelized, h.phase_coherent, req.channelization_binding) {
        (false, _, _) => Check::flag("channelization", "hardware: channelization", Verdict::Pass, "contiguous band"),
        (true, _, false) => Check::flag("channelization", "hardware: channelization", Verdict::Pass, chan_note),
        (true, true, true) => Check::flag(
            "channelization",
            "hardware: channelization",
            Verdict::Warn,
            format!("{chan_note}, phase coherent across chains"),
        ),
        (true, false, true) => Check::flag(
            "channelization",
            "hardware: channelization",
            Verdict::Fail,
            format!("{chan_note} without phase coherence breaks coherent delay and angle estimation"),
        ),
    });
    out
}

fn label<T: Serialize>(v: &T) -> String {
    match serde_json::to_value(v) {
        Ok(serde_json::Value::String(s)) => s,
        _ => String::new(),
    }
}

fn advisory(s: &ScenarioConfig, uc: &UseCaseKpis, req: &Requirements) -> Vec<Check> {
    let mut out = Vec::new();
    let h = &s.hardware;
    let sig = &s.signal;

    let bands: Vec<String> = req
        .carrier_bands_hz
        .iter()
        .map(|(lo, hi)| if *lo <= 0.0 { format!("up to {}", ghz(*hi)) } else { format!("{}-{}", ghz(*lo), ghz(*hi)) })
        .collect();
    let ok = in_bands(h.carrier_hz, &req.carrier_bands_hz);
    out.push(Check::flag(
        "carrier",
        "hardware: carrier",
        if ok { Verdict::Pass } else { Verdict::Warn },
        format!("{} vs preferred {}", ghz(h.carrier_hz), bands.join(" or ")),
    ));

    let ok = req.waveforms.is_empty() || req.waveforms.contains(&sig.waveform);
    out.push(Check::flag(
        "waveform",
        "signals: waveform",
        if ok { Verdict::Pass } else { Verdict::Warn },
        label(&sig.waveform),
    ));

    let mut wanted = req.shaping.clone();
    if uc.id.class() == UseCaseClass::Communication && sig.streams > 1 {
        wanted.push(super::Shaping::Space);
    }
    let missing: Vec<String> = wanted
        .iter()
        .filter(|w| !sig.shaping.contains(w))
        .map(label)
        .collect();
    out.push(Check::flag(
        "shaping",
        "signals: signal shaping",
        if missing.is_empty() { Verdict::Pass } else { Verdict::Warn },
        if missing.is_empty() { "ok".to_string() } else { format!("missing {}", missing.join(", ")) },
    ));

    for (name, a, kinds, min) in [
        ("in_array", &h.in_array, &req.in_array_kinds, req.min_in_elements_per_dim),
        ("ue_array", &h.ue_array, &req.ue_array_kinds, req.min_ue_elements_per_dim),
    ] {
        let row = if name == "in_array" { "hardware: IN array" } else { "hardware: UE array" };
        out.push(Check::flag(
            &format!("{name}_type"),
            row,
            if kinds.contains(&a.kind) { Verdict::Pass } else { Verdict::Warn },
            label(&a.kind),
        ));
        out.push(
            Check::at_least(&format!("{name}_size"), row, "elements/dim", min as f64, a.elements_per_dim as f64).advisory(),
        );
    }
    out
}
