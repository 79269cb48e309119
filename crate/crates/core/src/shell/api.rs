//! Request and response bodies of the planning service. The command line goes
//! through the same functions, so both produce identical bytes.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::deployment::{coverage_heatmap, DeploymentError, DeploymentView, Heatmap, HeatmapMetric};
use crate::linkbudget::{required_bandwidth, required_power_per_element, Requirement};
use crate::quantities::{Distance, PowerDbm};
use crate::report::Verdict;
use crate::usecases::{builtin_use_cases, evaluate, ConfigError, FeasibilityReport, ScenarioConfig, UseCaseClass, UseCaseId, UseCaseKpis};

use super::scenario_file::{apply_override, DEFAULT_REGION};

#[derive(Debug, Error)]
pub enum ApiError {
    #[error(transparent)]
    Invalid(#[from] ConfigError),
    #[error("{0}")]
    BadRequest(String),
}

impl From<DeploymentError> for ApiError {
    fn from(e: DeploymentError) -> Self {
        ApiError::BadRequest(e.to_string())
    }
}

/// Pretty JSON with a trailing newline; infinities serialize as `null`.
pub fn to_json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("plain data serializes");
    s.push('\n');
    s
}

pub fn use_cases() -> Vec<UseCaseKpis> {
    builtin_use_cases()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluateRequest {
    pub scenario: ScenarioConfig,
    /// Empty means every built-in use case.
    #[serde(default)]
    pub use_cases: Vec<UseCaseId>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluateResponse {
    pub overall: Verdict,
    pub reports: Vec<FeasibilityReport>,
}

pub fn evaluate_request(req: &EvaluateRequest) -> Result<EvaluateResponse, ApiError> {
    let ids = if req.use_cases.is_empty() { UseCaseId::ALL.to_vec() } else { req.use_cases.clone() };
    let reports = ids.iter().map(|id| evaluate(&req.scenario, &id.kpis())).collect::<Result<Vec<_>, _>>()?;
    let overall = if reports.iter().all(|r| r.overall == Verdict::Pass) { Verdict::Pass } else { Verdict::Fail };
    Ok(EvaluateResponse { overall, reports })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeatmapRequest {
    pub scenario: ScenarioConfig,
    pub metric: HeatmapMetric,
}

/// Evaluates over the scenario's region, or a 20 m square around the origin.
pub fn heatmap_request(req: &HeatmapRequest) -> Result<Heatmap, ApiError> {
    let s = &req.scenario;
    s.validate()?;
    let d = &s.deployment;
    let region = d.region.unwrap_or(DEFAULT_REGION);
    let view = DeploymentView { nodes: &d.nodes, mix: &d.mix, obstacles: &d.obstacles, dim: d.dim };
    let radio = s.radio_context();
    Ok(coverage_heatmap(&region, &view, req.metric, Some(&radio))?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepTarget {
    Rate,
    Peb,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRequest {
    pub scenario: ScenarioConfig,
    /// Dotted override key with its unit, e.g. `signal.bandwidth_ghz`.
    pub param: String,
    pub from: f64,
    pub to: f64,
    pub points: usize,
    pub target: SweepTarget,
    /// Defaults to C1 for rate targets and L1 for PEB targets.
    #[serde(default)]
    pub use_case: Option<UseCaseId>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub param: String,
    pub value: f64,
    /// Infinite when the target cannot be reached at any power or bandwidth.
    pub required: f64,
    pub feasible: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResponse {
    /// `required_power_dbm` or `required_bandwidth_hz`.
    pub column: String,
    pub rows: Vec<SweepRow>,
}

fn grid(from: f64, to: f64, points: usize) -> Vec<f64> {
    match points {
        1 => vec![from],
        n => (0..n).map(|i| from + (to - from) * i as f64 / (n - 1) as f64).collect(),
    }
}

/// Sweeping a transmit-power key against a rate target reports the required
/// bandwidth; every other combination reports the required per-element power.
pub fn sweep_request(req: &SweepRequest) -> Result<SweepResponse, ApiError> {
    if req.points == 0 || !req.from.is_finite() || !req.to.is_finite() {
        return Err(ApiError::BadRequest("need finite bounds and at least one point".into()));
    }
    let id = req.use_case.unwrap_or(match req.target {
        SweepTarget::Rate => UseCaseId::C1,
        SweepTarget::Peb => UseCaseId::L1,
    });
    let want = match req.target {
        SweepTarget::Rate => UseCaseClass::Communication,
        SweepTarget::Peb => UseCaseClass::Localization,
    };
    if id.class() != want {
        return Err(ApiError::BadRequest(format!("{id} has no {:?} target", req.target).to_lowercase()));
    }
    let kpis = id.kpis();
    let by_bandwidth = req.target == SweepTarget::Rate && req.param.contains("ptx");
    let mut rows = Vec::with_capacity(req.points);
    for v in grid(req.from, req.to, req.points) {
        let mut s = req.scenario.clone();
        apply_override(&mut s, &req.param, &v.to_string()).map_err(|(_, m)| ApiError::BadRequest(m))?;
        let report = evaluate(&s, &kpis)?;
        let pass = |name: &str| report.check(name).is_some_and(|c| c.verdict != Verdict::Fail);
        let (required, feasible) = match req.target {
            SweepTarget::Rate => {
                let d = Distance::new(kpis.link_range_m).expect("positive range");
                let rate = kpis.rate_bps.expect("communication KPI");
                let m = s.rate_model();
                let h = &s.hardware;
                let links = [(s.downlink(d), h.in_ptx_dbm), (s.uplink(d), h.ue_ptx_dbm)];
                let mut worst = f64::NEG_INFINITY;
                for (link, ptx) in links {
                    let r = if by_bandwidth {
                        let p = PowerDbm::new(ptx).expect("validated");
                        required_bandwidth(rate, p, &m, &link).map(|r| r.feasible().map(|b| b.value()))
                    } else {
                        required_power_per_element(rate, s.bandwidth(), &m, &link).map(|r| match r {
                            Requirement::Feasible(p) => Some(p.value()),
                            Requirement::Infeasible(_) => None,
                        })
                    };
                    let r = r.map_err(|e| ApiError::BadRequest(e.to_string()))?;
                    worst = worst.max(r.unwrap_or(f64::INFINITY));
                }
                (worst, pass("rate"))
            }
            SweepTarget::Peb => {
                let required = report.check("tx_power").and_then(|c| c.required).unwrap_or(f64::INFINITY);
                (required, pass("peb") && pass("tx_power"))
            }
        };
        rows.push(SweepRow { param: req.param.clone(), value: v, required, feasible });
    }
    let column = if by_bandwidth { "required_bandwidth_hz" } else { "required_power_dbm" };
    Ok(SweepResponse { column: column.into(), rows })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn evaluate_body_round_trips() {
        let req = EvaluateRequest { scenario: ScenarioConfig::default(), use_cases: vec![UseCaseId::L1] };
        let resp = evaluate_request(&req).unwrap();
        let text = to_json(&resp);
        let back: EvaluateResponse = serde_json::from_str(&text).unwrap();
        assert_eq!(to_json(&back), text);
        let req_back: EvaluateRequest = serde_json::from_str(&to_json(&req)).unwrap();
        assert_eq!(req_back, req);
    }

    #[test]
    fn empty_scenario_fails_without_panicking() {
        let resp = evaluate_request(&EvaluateRequest { scenario: ScenarioConfig::default(), use_cases: vec![] }).unwrap();
        assert_eq!(resp.reports.len(), 7);
        assert_eq!(resp.overall, Verdict::Fail);
    }

    #[test]
    fn sweep_bandwidth_lowers_required_power() {
        let req = SweepRequest {
            scenario: ScenarioConfig::default(),
            param: "signal.bandwidth_ghz".into(),
            from: 1.0,
            to: 4.0,
            points: 4,
            target: SweepTarget::Peb,
            use_case: None,
        };
        let r = sweep_request(&req).unwrap();
        assert_eq!(r.column, "required_power_dbm");
        assert_eq!(r.rows.len(), 4);
        assert_eq!(r.rows[3].value, 4.0);
        let bad = SweepRequest { use_case: Some(UseCaseId::S1), ..req };
        assert!(sweep_request(&bad).is_err());
    }

    #[test]
    fn power_sweep_reports_bandwidth() {
        let req = SweepRequest {
            scenario: ScenarioConfig::default(),
            param: "hardware.in_ptx_dbm".into(),
            from: 0.0,
            to: 10.0,
            points: 3,
            target: SweepTarget::Rate,
            use_case: Some(UseCaseId::C2),
        };
        let r = sweep_request(&req).unwrap();
        assert_eq!(r.column, "required_bandwidth_hz");
    }
}
