//! Infrastructure geometry: line of sight, anchor counts, position Fisher
//! information for ToA/TDoA/RTT/AoA mixes, coverage maps and the clock/pose
//! knowledge budgets of the infrastructure nodes.
//!
//! Obstacles are vertical prisms of unbounded height, so visibility is decided
//! on the horizontal projection. Touching an obstacle boundary does not block.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::channel::{link_snr_db, monostatic_snr_db, ArrayConfig, LinkParams, RadarParams};
use crate::linkbudget::{achievable_rate_bps, RateModel};
use crate::locbounds::orientation_error_to_position_error;
use crate::quantities::{Angle, Bandwidth, Distance, PowerDbm, SPEED_OF_LIGHT};
use crate::report::{Check, Verdict};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DeploymentError {
    #[error("invalid region: {0}")]
    Region(String),
    #[error("invalid obstacle: {0}")]
    Obstacle(String),
    #[error("invalid measurement mix: {0}")]
    Mix(String),
    #[error("invalid node {index}: {reason}")]
    Node { index: usize, reason: String },
    #[error("metric {0:?} needs radio parameters")]
    MissingRadio(HeatmapMetric),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NodeKind {
    Bs,
    Ris,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InfrastructureNode {
    pub position_m: [f64; 3],
    /// Yaw, pitch, roll.
    pub orientation_rad: [f64; 3],
    pub kind: NodeKind,
    pub array: ArrayConfig,
    /// Clock offset, 1σ.
    pub sync_error_s: f64,
    pub position_error_m: f64,
    pub orientation_error_rad: f64,
}

impl InfrastructureNode {
    pub fn bs(position_m: [f64; 3]) -> Self {
        Self {
            position_m,
            orientation_rad: [0.0; 3],
            kind: NodeKind::Bs,
            array: ArrayConfig::planar(16),
            sync_error_s: 0.0,
            position_error_m: 0.0,
            orientation_error_rad: 0.0,
        }
    }

    pub fn validate(&self, index: usize) -> Result<(), DeploymentError> {
        let bad = |reason: &str| DeploymentError::Node { index, reason: reason.into() };
        if self.position_m.iter().chain(&self.orientation_rad).any(|v| !v.is_finite()) {
            return Err(bad("position and orientation must be finite"));
        }
        for v in [self.sync_error_s, self.position_error_m, self.orientation_error_rad] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(bad("sync and knowledge errors must be finite and >= 0"));
            }
        }
        self.array.validate().map_err(|e| bad(&e.to_string()))
    }

    pub fn measures_time(&self) -> bool {
        self.kind == NodeKind::Bs
    }

    pub fn measures_angle(&self) -> bool {
        self.array.elements_per_dim >= 2
    }
}

/// Horizontal evaluation rectangle at a fixed height.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub min_m: [f64; 2],
    pub max_m: [f64; 2],
    pub height_m: f64,
    pub resolution_m: f64,
}

impl Region {
    pub fn validate(&self) -> Result<(), DeploymentError> {
        if !(self.max_m[0] > self.min_m[0] && self.max_m[1] > self.min_m[1]) {
            return Err(DeploymentError::Region("max must exceed min on both axes".into()));
        }
        if !(self.resolution_m > 0.0 && self.resolution_m.is_finite()) {
            return Err(DeploymentError::Region("resolution must be > 0".into()));
        }
        if !self.height_m.is_finite() {
            return Err(DeploymentError::Region("height must be finite".into()));
        }
        Ok(())
    }

    pub fn shape(&self) -> (usize, usize) {
        let n = |a: f64, b: f64| (((b - a) / self.resolution_m) - 1e-9).ceil().max(1.0) as usize;
        (n(self.min_m[0], self.max_m[0]), n(self.min_m[1], self.max_m[1]))
    }

    pub fn cell_center(&self, ix: usize, iy: usize) -> [f64; 3] {
        [
            self.min_m[0] + (ix as f64 + 0.5) * self.resolution_m,
            self.min_m[1] + (iy as f64 + 0.5) * self.resolution_m,
            self.height_m,
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Obstacle {
    pub vertices_m: Vec<[f64; 2]>,
}

type P2 = [f64; 2];

fn sub(a: P2, b: P2) -> P2 {
    [a[0] - b[0], a[1] - b[1]]
}

fn cross(a: P2, b: P2) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

fn segments_cross_properly(p: P2, q: P2, a: P2, b: P2) -> bool {
    let d1 = cross(sub(q, p), sub(a, p));
    let d2 = cross(sub(q, p), sub(b, p));
    let d3 = cross(sub(b, a), sub(p, a));
    let d4 = cross(sub(b, a), sub(q, a));
    d1 * d2 < 0.0 && d3 * d4 < 0.0
}

impl Obstacle {
    pub fn validate(&self) -> Result<(), DeploymentError> {
        let v = &self.vertices_m;
        if v.len() < 3 {
            return Err(DeploymentError::Obstacle(format!("needs >= 3 vertices, got {}", v.len())));
        }
        if v.iter().flatten().any(|x| !x.is_finite()) {
            return Err(DeploymentError::Obstacle("vertices must be finite".into()));
        }
        let n = v.len();
        let area2: f64 = (0..n).map(|i| cross(v[i], v[(i + 1) % n])).sum();
        if area2.abs() < 1e-12 {
            return Err(DeploymentError::Obstacle("polygon has zero area".into()));
        }
        for i in 0..n {
            for j in i + 1..n {
                let adjacent = j == i + 1 || (i == 0 && j == n - 1);
                if !adjacent && segments_cross_properly(v[i], v[(i + 1) % n], v[j], v[(j + 1) % n]) {
                    return Err(DeploymentError::Obstacle("polygon is not simple".into()));
                }
            }
        }
        Ok(())
    }

    fn edges(&self) -> impl Iterator<Item = (P2, P2)> + '_ {
        let v = &self.vertices_m;
        (0..v.len()).map(move |i| (v[i], v[(i + 1) % v.len()]))
    }

    fn on_boundary(&self, p: P2) -> bool {
        self.edges().any(|(a, b)| {
            let e = sub(b, a);
            let len2 = e[0] * e[0] + e[1] * e[1];
            let t = ((p[0] - a[0]) * e[0] + (p[1] - a[1]) * e[1]) / len2;
            let c = cross(e, sub(p, a));
            (0.0..=1.0).contains(&t) && c * c <= 1e-18 * len2.max(1.0)
        })
    }

    /// Point strictly inside (boundary excluded).
    pub fn contains_strictly(&self, p: P2) -> bool {
        if self.on_boundary(p) {
            return false;
        }
        let mut inside = false;
        for (a, b) in self.edges() {
            if (a[1] > p[1]) != (b[1] > p[1]) {
                let x = a[0] + (p[1] - a[1]) * (b[0] - a[0]) / (b[1] - a[1]);
                if p[0] < x {
                    inside = !inside;
                }
            }
        }
        inside
    }

    /// Whether the open segment p→q passes through the polygon interior.
    pub fn blocks(&self, p: P2, q: P2) -> bool {
        let d = sub(q, p);
        let len2 = d[0] * d[0] + d[1] * d[1];
        if len2 == 0.0 {
            return self.contains_strictly(p);
        }
        // Split the segment wherever it meets the boundary; each piece is then
        // wholly inside or wholly outside, decided by its midpoint.
        let mut ts = vec![0.0, 1.0];
        for (a, b) in self.edges() {
            let e = sub(b, a);
            let den = cross(d, e);
            if den.abs() > 1e-15 * len2.sqrt() * (e[0].hypot(e[1])) {
                let t = cross(sub(a, p), e) / den;
                let s = cross(sub(a, p), d) / den;
                if (0.0..=1.0).contains(&t) && (-1e-12..=1.0 + 1e-12).contains(&s) {
                    ts.push(t);
                }
            }
            let t = ((a[0] - p[0]) * d[0] + (a[1] - p[1]) * d[1]) / len2;
            if (0.0..=1.0).contains(&t) && cross(d, sub(a, p)).abs() <= 1e-12 * len2.sqrt().max(1.0) {
                ts.push(t);
            }
        }
        ts.sort_by(f64::total_cmp);
        ts.windows(2).any(|w| {
            w[1] - w[0] > 1e-12 && {
                let t = 0.5 * (w[0] + w[1]);
                self.contains_strictly([p[0] + t * d[0], p[1] + t * d[1]])
            }
        })
    }
}

pub fn los_visible(ue: [f64; 3], node: &InfrastructureNode, obstacles: &[Obstacle]) -> bool {
    let (p, q) = ([ue[0], ue[1]], [node.position_m[0], node.position_m[1]]);
    !obstacles.iter().any(|o| o.blocks(p, q))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MeasurementType {
    Toa,
    Tdoa,
    Rtt,
    Aoa,
}

/// Measurement types in use with their 1σ errors; `None` means not used.
/// Time errors are one-way delay errors in seconds; AoA error in radians.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct MeasurementMix {
    pub toa_s: Option<f64>,
    pub tdoa_s: Option<f64>,
    pub rtt_s: Option<f64>,
    pub aoa_rad: Option<f64>,
}

impl MeasurementMix {
    pub fn validate(&self) -> Result<(), DeploymentError> {
        let set: Vec<_> = self.types().collect();
        if set.is_empty() {
            return Err(DeploymentError::Mix("at least one measurement type is required".into()));
        }
        for (t, s) in set {
            if !(s > 0.0 && s.is_finite()) {
                return Err(DeploymentError::Mix(format!("{t:?} sigma must be > 0, got {s}")));
            }
        }
        Ok(())
    }

    pub fn types(&self) -> impl Iterator<Item = (MeasurementType, f64)> {
        [
            (MeasurementType::Toa, self.toa_s),
            (MeasurementType::Tdoa, self.tdoa_s),
            (MeasurementType::Rtt, self.rtt_s),
            (MeasurementType::Aoa, self.aoa_rad),
        ]
        .into_iter()
        .filter_map(|(t, s)| s.map(|s| (t, s)))
    }

    pub fn uses(&self, t: MeasurementType) -> bool {
        self.types().any(|(x, _)| x == t)
    }

    /// Range-equivalent σ of the first time measurement in ToA, TDoA, RTT order.
    pub fn reference_time_sigma_m(&self) -> Option<f64> {
        self.toa_s.or(self.tdoa_s).or(self.rtt_s).map(|s| s * SPEED_OF_LIGHT)
    }
}

pub fn required_anchors(t: MeasurementType, dim: u8) -> u32 {
    match t {
        MeasurementType::Tdoa => dim as u32 + 1,
        MeasurementType::Toa | MeasurementType::Rtt => dim as u32,
        MeasurementType::Aoa => 2,
    }
}

/// Fewest visible anchors that any single included measurement type needs.
pub fn min_anchors(mix: &MeasurementMix, dim: u8) -> u32 {
    mix.types().map(|(t, _)| required_anchors(t, dim)).min().unwrap_or(u32::MAX)
}

pub fn min_anchor_check(mix: &MeasurementMix, dim: u8, visible_count: u32) -> Check {
    let need = min_anchors(mix, dim);
    let kinds: Vec<String> = mix.types().map(|(t, _)| format!("{t:?}")).collect();
    Check::at_least("anchors", "deployments: LoS anchors", "count", need as f64, visible_count as f64)
        .note(format!("{}D, mix {}", dim, kinds.join("+")))
}

fn unit_and_distance(ue: &[f64], node: &[f64]) -> (DVector<f64>, f64) {
    let v = DVector::from_iterator(ue.len(), node.iter().zip(ue).map(|(n, u)| u - n));
    let d = v.norm();
    (v / d, d)
}

fn angle_information(u: &DVector<f64>, d: f64, sigma: f64) -> DMatrix<f64> {
    let n = u.len();
    let proj = DMatrix::identity(n, n) - u * u.transpose();
    proj / (d * d * sigma * sigma)
}

/// Fisher information about the user position (2×2 or 3×3, metres⁻²).
///
/// In 2D the z coordinates are ignored. TDoA uses differences against the
/// first visible time-capable node; the shared reference makes the differences
/// correlated, with covariance σ²(I + 11ᵀ), which is accounted for exactly.
pub fn position_fim(
    ue: [f64; 3],
    nodes: &[InfrastructureNode],
    mix: &MeasurementMix,
    obstacles: &[Obstacle],
    dim: u8,
) -> DMatrix<f64> {
    let k = dim as usize;
    let ue = &ue[..k];
    let mut fim = DMatrix::zeros(k, k);
    let visible: Vec<_> = nodes
        .iter()
        .filter(|n| los_visible([ue[0], ue[1], 0.0], n, obstacles))
        .map(|n| {
            let (u, d) = unit_and_distance(ue, &n.position_m[..k]);
            (n, u, d)
        })
        .filter(|(_, _, d)| *d > 0.0)
        .collect();

    for (t, s) in mix.types() {
        match t {
            MeasurementType::Toa | MeasurementType::Rtt => {
                let sigma_m = s * SPEED_OF_LIGHT;
                for (n, u, _) in &visible {
                    if n.measures_time() {
                        fim += u * u.transpose() / (sigma_m * sigma_m);
                    }
                }
            }
            MeasurementType::Aoa => {
                for (n, u, d) in &visible {
                    if n.measures_angle() {
                        fim += angle_information(u, *d, s);
                    }
                }
            }
            MeasurementType::Tdoa => {
                let timed: Vec<_> = visible.iter().filter(|(n, _, _)| n.measures_time()).collect();
                if timed.len() >= 2 {
                    let m = timed.len() - 1;
                    let reference = &timed[0].1;
                    let h = DMatrix::from_fn(m, k, |i, j| timed[i + 1].1[j] - reference[j]);
                    let sigma_m = s * SPEED_OF_LIGHT;
                    let cov = (DMatrix::identity(m, m) + DMatrix::from_element(m, m, 1.0)) * (sigma_m * sigma_m);
                    let w = cov.cholesky().expect("I + 11ᵀ is positive definite").inverse();
                    fim += h.transpose() * w * h;
                }
            }
        }
    }
    fim
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GdopResult {
    pub rank: usize,
    pub observable: bool,
    /// `f64::INFINITY` when unobservable.
    pub peb_m: f64,
    pub gdop: f64,
}

pub fn numerical_rank(m: &DMatrix<f64>) -> usize {
    let eig = m.clone().symmetric_eigen().eigenvalues;
    let max = eig.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
    if max == 0.0 || !max.is_finite() {
        return 0;
    }
    eig.iter().filter(|&&e| e > max * 1e-10).count()
}

/// PEB and its geometry factor. GDOP normalises by the range σ of the first time
/// measurement, or by σ_AoA times the mean visible distance for angle-only mixes.
pub fn gdop(
    ue: [f64; 3],
    nodes: &[InfrastructureNode],
    mix: &MeasurementMix,
    obstacles: &[Obstacle],
    dim: u8,
) -> GdopResult {
    let fim = position_fim(ue, nodes, mix, obstacles, dim);
    let rank = numerical_rank(&fim);
    let inverse = (rank == dim as usize).then(|| fim.clone().try_inverse()).flatten();
    let Some(inv) = inverse else {
        return GdopResult { rank, observable: false, peb_m: f64::INFINITY, gdop: f64::INFINITY };
    };
    let peb = inv.trace().sqrt();
    let sigma_ref = mix.reference_time_sigma_m().unwrap_or_else(|| {
        let k = dim as usize;
        let ds: Vec<f64> = nodes
            .iter()
            .filter(|n| n.measures_angle() && los_visible(ue, n, obstacles))
            .map(|n| unit_and_distance(&ue[..k], &n.position_m[..k]).1)
            .collect();
        mix.aoa_rad.unwrap_or(1.0) * ds.iter().sum::<f64>() / ds.len().max(1) as f64
    });
    GdopResult { rank, observable: true, peb_m: peb, gdop: peb / sigma_ref }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HeatmapMetric {
    Peb,
    Gdop,
    VisibleCount,
    Rate,
    SensingSnr,
}

/// Radio parameters for rate and sensing-SNR maps. `link.distance` is replaced
/// per cell; the best visible base station is used.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadioContext {
    pub link: LinkParams,
    pub ptx_per_element: PowerDbm,
    pub bandwidth: Bandwidth,
    pub rate: RateModel,
    pub radar: RadarParams,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Heatmap {
    pub metric: HeatmapMetric,
    pub region: Region,
    pub nx: usize,
    pub ny: usize,
    /// Row-major, y outer: `values[iy * nx + ix]`. Unobservable cells are infinite.
    pub values: Vec<f64>,
}

pub struct DeploymentView<'a> {
    pub nodes: &'a [InfrastructureNode],
    pub mix: &'a MeasurementMix,
    pub obstacles: &'a [Obstacle],
    pub dim: u8,
}

pub fn metric_at(
    p: [f64; 3],
    view: &DeploymentView<'_>,
    metric: HeatmapMetric,
    radio: Option<&RadioContext>,
) -> f64 {
    let visible = || view.nodes.iter().filter(|n| los_visible(p, n, view.obstacles));
    let distance = |n: &InfrastructureNode| {
        let k = view.dim as usize;
        let d = unit_and_distance(&p[..k], &n.position_m[..k]).1;
        Distance::new(d.max(1e-3)).expect("finite distance")
    };
    match metric {
        HeatmapMetric::Peb => gdop(p, view.nodes, view.mix, view.obstacles, view.dim).peb_m,
        HeatmapMetric::Gdop => gdop(p, view.nodes, view.mix, view.obstacles, view.dim).gdop,
        HeatmapMetric::VisibleCount => visible().count() as f64,
        HeatmapMetric::Rate => {
            let r = radio.expect("checked by caller");
            visible()
                .filter(|n| n.kind == NodeKind::Bs)
                .filter_map(|n| {
                    let link = LinkParams { distance: distance(n), ..r.link };
                    link_snr_db(r.ptx_per_element, &link, r.bandwidth).ok()
                })
                .map(|snr| achievable_rate_bps(snr, r.bandwidth, &r.rate))
                .fold(0.0, f64::max)
        }
        HeatmapMetric::SensingSnr => {
            let r = radio.expect("checked by caller");
            visible()
                .filter(|n| n.kind == NodeKind::Bs)
                .filter_map(|n| monostatic_snr_db(r.ptx_per_element, &r.radar, distance(n), r.bandwidth).ok())
                .map(|s| s.value())
                .fold(f64::NEG_INFINITY, f64::max)
        }
    }
}

pub fn coverage_heatmap(
    region: &Region,
    view: &DeploymentView<'_>,
    metric: HeatmapMetric,
    radio: Option<&RadioContext>,
) -> Result<Heatmap, DeploymentError> {
    region.validate()?;
    if matches!(metric, HeatmapMetric::Rate | HeatmapMetric::SensingSnr) && radio.is_none() {
        return Err(DeploymentError::MissingRadio(metric));
    }
    let (nx, ny) = region.shape();
    let values = (0..nx * ny)
        .into_par_iter()
        .map(|i| metric_at(region.cell_center(i % nx, i / nx), view, metric, radio))
        .collect();
    Ok(Heatmap { metric, region: *region, nx, ny, values })
}

/// Largest pairwise clock disagreement, sqrt(σi² + σj²).
pub fn max_pairwise_sync_error(nodes: &[InfrastructureNode]) -> f64 {
    let mut s: Vec<f64> = nodes.iter().map(|n| n.sync_error_s).collect();
    s.sort_by(|a, b| b.total_cmp(a));
    match s.as_slice() {
        [a, b, ..] => a.hypot(*b),
        _ => 0.0,
    }
}

/// `budget_s = None` means the use case does not constrain synchronization.
pub fn sync_budget_check(budget_s: Option<f64>, nodes: &[InfrastructureNode], row: &str) -> Check {
    match budget_s {
        Some(b) => Check::at_most("sync", row, "s", b, max_pairwise_sync_error(nodes)),
        None => Check::flag("sync", row, Verdict::Pass, "not required"),
    }
}

/// Pose-knowledge budget of the infrastructure for one use case.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KnowledgeBudget {
    /// Node position error allowed (1σ); `None` when not checked.
    pub position_m: Option<f64>,
    /// Location accuracy that the lever-arm error must stay within.
    pub location_accuracy_m: f64,
}

pub fn in_knowledge_check(
    budget: &KnowledgeBudget,
    nodes: &[InfrastructureNode],
    operating_distance: Distance,
    row: &str,
) -> Vec<Check> {
    let pos = nodes.iter().map(|n| n.position_error_m).fold(0.0, f64::max);
    let orient = nodes.iter().map(|n| n.orientation_error_rad).fold(0.0, f64::max);
    let lever = orientation_error_to_position_error(Angle::from_radians(orient), operating_distance).value();
    let position = match budget.position_m {
        Some(b) => Check::at_most("in_position", row, "m", b, pos),
        None => Check::flag("in_position", row, Verdict::Pass, "not required"),
    };
    let orientation = Check::at_most("in_orientation", row, "m", budget.location_accuracy_m, lever).note(format!(
        "{:.3} deg orientation error at {} m",
        orient.to_degrees(),
        operating_distance.value()
    ));
    vec![position, orientation]
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    fn square(half: f64) -> Vec<InfrastructureNode> {
        [[-half, -half], [half, -half], [half, half], [-half, half]]
            .iter()
            .map(|p| InfrastructureNode::bs([p[0], p[1], 0.0]))
            .collect()
    }

    fn toa(sigma_m: f64) -> MeasurementMix {
        MeasurementMix { toa_s: Some(sigma_m / SPEED_OF_LIGHT), ..Default::default() }
    }

    fn rect(x0: f64, y0: f64, x1: f64, y1: f64) -> Obstacle {
        Obstacle { vertices_m: vec![[x0, y0], [x1, y0], [x1, y1], [x0, y1]] }
    }

    #[test]
    fn los_examples() {
        let node = InfrastructureNode::bs([10.0, 0.0, 0.0]);
        assert!(los_visible([0.0, 0.0, 0.0], &node, &[]));
        assert!(!los_visible([0.0, 0.0, 0.0], &node, &[rect(4.0, -1.0, 6.0, 1.0)]));
        // ue sits on the obstacle edge, segment leaves away from it
        assert!(los_visible([4.0, 0.0, 0.0], &InfrastructureNode::bs([0.0, 0.0, 0.0]), &[rect(4.0, -1.0, 6.0, 1.0)]));
        // grazing along an edge or through a vertex does not block
        assert!(los_visible([0.0, 1.0, 0.0], &InfrastructureNode::bs([10.0, 1.0, 0.0]), &[rect(4.0, -1.0, 6.0, 1.0)]));
        assert!(los_visible([3.0, 0.0, 0.0], &InfrastructureNode::bs([5.0, 2.0, 0.0]), &[rect(4.0, -1.0, 6.0, 1.0)]));
    }

    #[test]
    fn obstacle_validation() {
        assert!(Obstacle { vertices_m: vec![[0.0, 0.0], [1.0, 0.0]] }.validate().is_err());
        let bowtie = Obstacle { vertices_m: vec![[0.0, 0.0], [1.0, 1.0], [1.0, 0.0], [0.0, 1.0]] };
        assert!(bowtie.validate().is_err());
        assert!(rect(0.0, 0.0, 1.0, 1.0).validate().is_ok());
    }

    #[test]
    fn anchor_rules() {
        let tdoa = MeasurementMix { tdoa_s: Some(1e-10), ..Default::default() };
        let aoa = MeasurementMix { aoa_rad: Some(0.01), ..Default::default() };
        assert_eq!(min_anchor_check(&tdoa, 3, 4).verdict, Verdict::Pass);
        assert_eq!(min_anchor_check(&tdoa, 3, 3).verdict, Verdict::Fail);
        assert_eq!(min_anchor_check(&aoa, 3, 2).verdict, Verdict::Pass);
        assert_eq!(min_anchors(&MeasurementMix { aoa_rad: Some(0.01), ..tdoa }, 3), 2);
        assert_eq!(min_anchors(&toa(1.0), 3), 3);
    }

    #[test]
    fn square_corner_peb_is_one_metre() {
        let r = gdop([0.0; 3], &square(10.0), &toa(1.0), &[], 2);
        assert_eq!(r.rank, 2);
        assert_relative_eq!(r.peb_m, 1.0, max_relative = 1e-12);
        assert_relative_eq!(r.gdop, 1.0, max_relative = 1e-12);
        let fim = position_fim([0.0; 3], &square(10.0), &toa(1.0), &[], 2);
        assert_relative_eq!(fim[(0, 0)], 2.0, max_relative = 1e-12);
        assert_relative_eq!(fim[(0, 1)], 0.0, epsilon = 1e-12);
    }

    // Gauss-Newton least squares on noisy ranges; the oracle for the bound.
    fn monte_carlo_rmse(nodes: &[InfrastructureNode], truth: [f64; 2], sigma: f64, trials: usize) -> f64 {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let noise = Normal::new(0.0, sigma).unwrap();
        let mut sq = 0.0;
        for _ in 0..trials {
            let meas: Vec<f64> = nodes
                .iter()
                .map(|n| (truth[0] - n.position_m[0]).hypot(truth[1] - n.position_m[1]) + noise.sample(&mut rng))
                .collect();
            let mut x = [truth[0] + rng.random_range(-0.5..0.5), truth[1] + rng.random_range(-0.5..0.5)];
            for _ in 0..20 {
                let (mut jtj, mut jtr) = ([[0.0; 2]; 2], [0.0; 2]);
                for (n, m) in nodes.iter().zip(&meas) {
                    let (dx, dy) = (x[0] - n.position_m[0], x[1] - n.position_m[1]);
                    let r = dx.hypot(dy);
                    let g = [dx / r, dy / r];
                    let res = m - r;
                    for i in 0..2 {
                        jtr[i] += g[i] * res;
                        for j in 0..2 {
                            jtj[i][j] += g[i] * g[j];
                        }
                    }
                }
                let det = jtj[0][0] * jtj[1][1] - jtj[0][1] * jtj[1][0];
                x[0] += (jtj[1][1] * jtr[0] - jtj[0][1] * jtr[1]) / det;
                x[1] += (jtj[0][0] * jtr[1] - jtj[1][0] * jtr[0]) / det;
            }
            sq += (x[0] - truth[0]).powi(2) + (x[1] - truth[1]).powi(2);
        }
        (sq / trials as f64).sqrt()
    }

    #[test]
    fn square_corner_matches_least_squares() {
        let rmse = monte_carlo_rmse(&square(10.0), [0.0, 0.0], 1.0, 10_000);
        assert!((rmse - 1.0).abs() < 0.05, "rmse {rmse}");
    }

    #[test]
    fn collinear_is_unobservable() {
        let nodes: Vec<_> = [-10.0, 5.0, 20.0].iter().map(|&x| InfrastructureNode::bs([x, 0.0, 0.0])).collect();
        let r = gdop([1.0, 0.0, 0.0], &nodes, &toa(1.0), &[], 2);
        assert_eq!(r.rank, 1);
        assert!(!r.observable);
        assert!(r.peb_m.is_infinite() && r.gdop.is_infinite());
    }

    #[test]
    fn ris_contributes_angle_only() {
        let mut ris = InfrastructureNode::bs([0.0, 10.0, 0.0]);
        ris.kind = NodeKind::Ris;
        let fim = position_fim([0.0; 3], &[ris], &toa(1.0), &[], 2);
        assert_eq!(fim.norm(), 0.0);
        let mix = MeasurementMix { aoa_rad: Some(0.01), ..toa(1.0) };
        assert_eq!(numerical_rank(&position_fim([0.0; 3], &[ris], &mix, &[], 2)), 1);
    }

    #[test]
    fn blocked_anchor_drops_out() {
        let wall = rect(4.0, 4.0, 6.0, 6.0);
        let with = gdop([0.0; 3], &square(10.0), &toa(1.0), std::slice::from_ref(&wall), 2);
        let without = gdop([0.0; 3], &square(10.0)[..3], &toa(1.0), &[], 2);
        assert_relative_eq!(with.peb_m, without.peb_m, max_relative = 1e-12);
    }

    #[test]
    fn visible_count_map_without_obstacles_is_constant() {
        let nodes = square(10.0);
        let mix = toa(1.0);
        let view = DeploymentView { nodes: &nodes, mix: &mix, obstacles: &[], dim: 2 };
        let region = Region { min_m: [-10.0, -10.0], max_m: [10.0, 10.0], height_m: 0.0, resolution_m: 2.5 };
        let h = coverage_heatmap(&region, &view, HeatmapMetric::VisibleCount, None).unwrap();
        assert_eq!((h.nx, h.ny), (8, 8));
        assert!(h.values.iter().all(|&v| v == 4.0));
        assert!(coverage_heatmap(&region, &view, HeatmapMetric::Rate, None).is_err());
    }

    #[test]
    fn heatmap_cell_matches_pointwise_peb_and_any_traversal() {
        let nodes = square(10.0);
        let mix = toa(1.0);
        let obstacles = [rect(2.0, 2.0, 4.0, 3.0)];
        let view = DeploymentView { nodes: &nodes, mix: &mix, obstacles: &obstacles, dim: 2 };
        let region = Region { min_m: [-1.0, -1.0], max_m: [1.0, 1.0], height_m: 0.0, resolution_m: 2.0 };
        let h = coverage_heatmap(&region, &view, HeatmapMetric::Peb, None).unwrap();
        assert_eq!(h.values, vec![gdop([0.0; 3], &nodes, &mix, &obstacles, 2).peb_m]);

        let big = Region { min_m: [-9.0, -9.0], max_m: [9.0, 9.0], height_m: 0.0, resolution_m: 0.7 };
        let h = coverage_heatmap(&big, &view, HeatmapMetric::Peb, None).unwrap();
        let mut reversed = vec![0.0; h.values.len()];
        for i in (0..h.values.len()).rev() {
            reversed[i] = metric_at(big.cell_center(i % h.nx, i / h.nx), &view, HeatmapMetric::Peb, None);
        }
        assert_eq!(h.values, reversed);
    }

    #[test]
    fn heatmap_translation_invariance() {
        let nodes = square(10.0);
        let mix = toa(1.0);
        let obstacles = [rect(2.0, 2.0, 4.0, 3.0)];
        let region = Region { min_m: [-8.0, -8.0], max_m: [8.0, 8.0], height_m: 0.0, resolution_m: 1.0 };
        let view = DeploymentView { nodes: &nodes, mix: &mix, obstacles: &obstacles, dim: 2 };
        let a = coverage_heatmap(&region, &view, HeatmapMetric::Peb, None).unwrap();
        let (tx, ty) = (128.0, -64.0);
        let moved_nodes: Vec<_> = nodes
            .iter()
            .map(|n| InfrastructureNode { position_m: [n.position_m[0] + tx, n.position_m[1] + ty, 0.0], ..*n })
            .collect();
        let moved_obs = [rect(2.0 + tx, 2.0 + ty, 4.0 + tx, 3.0 + ty)];
        let moved_region = Region { min_m: [-8.0 + tx, -8.0 + ty], max_m: [8.0 + tx, 8.0 + ty], ..region };
        let view = DeploymentView { nodes: &moved_nodes, mix: &mix, obstacles: &moved_obs, dim: 2 };
        let b = coverage_heatmap(&moved_region, &view, HeatmapMetric::Peb, None).unwrap();
        for (x, y) in a.values.iter().zip(&b.values) {
            assert!(x == y || (x - y).abs() <= 1e-9 * x.abs(), "{x} vs {y}");
        }
    }

    #[test]
    fn sync_examples() {
        let mut nodes = square(10.0);
        for n in &mut nodes {
            n.sync_error_s = 50e-12;
        }
        assert_eq!(sync_budget_check(Some(100e-12), &nodes, "L1").verdict, Verdict::Pass);
        for n in &mut nodes {
            n.sync_error_s = 5e-9;
        }
        assert_eq!(sync_budget_check(Some(10e-9), &nodes, "L3").verdict, Verdict::Pass);
        assert_eq!(sync_budget_check(Some(0.5e-9), &nodes, "L2").verdict, Verdict::Fail);
        assert_eq!(sync_budget_check(None, &nodes, "S1").verdict, Verdict::Pass);
        assert_relative_eq!(max_pairwise_sync_error(&nodes), 5e-9 * 2f64.sqrt());
    }

    #[test]
    fn knowledge_examples() {
        let l1 = KnowledgeBudget { position_m: Some(0.005), location_accuracy_m: 0.01 };
        let mut nodes = square(10.0);
        nodes[2].orientation_error_rad = 0.1f64.to_radians();
        let at = |d: f64, nodes: &[InfrastructureNode]| {
            in_knowledge_check(&l1, nodes, Distance::new(d).unwrap(), "L1")
                .iter()
                .map(|c| c.verdict)
                .collect::<Vec<_>>()
        };
        assert_eq!(at(10.0, &nodes), vec![Verdict::Pass, Verdict::Fail]);
        assert_eq!(at(5.0, &nodes), vec![Verdict::Pass, Verdict::Pass]);
        assert_eq!(at(10.0, &square(10.0)), vec![Verdict::Pass, Verdict::Pass]);
        let l3 = KnowledgeBudget { position_m: Some(1.0), location_accuracy_m: 1.0 };
        nodes[1].position_error_m = 0.5;
        assert_eq!(in_knowledge_check(&l3, &nodes, Distance::new(100.0).unwrap(), "L3")[0].verdict, Verdict::Pass);
    }

    fn random_nodes(rng: &mut ChaCha8Rng, n: usize, dim: u8) -> Vec<InfrastructureNode> {
        (0..n)
            .map(|_| {
                let z = if dim == 3 { rng.random_range(0.0..20.0) } else { 0.0 };
                InfrastructureNode::bs([rng.random_range(-50.0..50.0), rng.random_range(-50.0..50.0), z])
            })
            .collect()
    }

    #[test]
    fn tdoa_reference_invariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mix = MeasurementMix { tdoa_s: Some(1e-9), ..Default::default() };
        for _ in 0..100 {
            let dim = if rng.random_bool(0.5) { 2 } else { 3 };
            let n = rng.random_range(dim as usize + 1..8);
            let mut nodes = random_nodes(&mut rng, n, dim);
            let ue = [rng.random_range(-40.0..40.0), rng.random_range(-40.0..40.0), 1.5];
            let a = gdop(ue, &nodes, &mix, &[], dim);
            let k = rng.random_range(1..n);
            nodes.swap(0, k);
            let b = gdop(ue, &nodes, &mix, &[], dim);
            assert_eq!(a.rank, b.rank);
            assert_relative_eq!(a.peb_m, b.peb_m, max_relative = 1e-9);
        }
    }

    #[test]
    fn anchor_count_agrees_with_rank_in_generic_position() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for (mix, _) in [
            (MeasurementMix { tdoa_s: Some(1e-9), ..Default::default() }, "tdoa"),
            (toa(1.0), "toa"),
            (MeasurementMix { aoa_rad: Some(0.01), ..Default::default() }, "aoa"),
        ] {
            for dim in [2u8, 3] {
                let need = min_anchors(&mix, dim) as usize;
                for n in 1..need {
                    let nodes = random_nodes(&mut rng, n, dim);
                    let r = gdop([3.0, -2.0, 25.0 * (dim - 2) as f64], &nodes, &mix, &[], dim);
                    assert!(r.rank < dim as usize, "{mix:?} dim {dim} n {n} rank {}", r.rank);
                }
            }
        }
    }

    fn rotate(p: [f64; 3], a: f64) -> [f64; 3] {
        let (s, c) = a.sin_cos();
        [c * p[0] - s * p[1], s * p[0] + c * p[1], p[2]]
    }

    proptest! {
        #[test]
        fn fim_is_psd_and_additive(seed in 0u64..1000, split in 1usize..5) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let nodes = random_nodes(&mut rng, 6, 3);
            let mix = MeasurementMix { aoa_rad: Some(0.02), ..toa(0.5) };
            let ue = [1.0, 2.0, 1.5];
            let all = position_fim(ue, &nodes, &mix, &[], 3);
            let parts = position_fim(ue, &nodes[..split], &mix, &[], 3) + position_fim(ue, &nodes[split..], &mix, &[], 3);
            prop_assert!((&all - &parts).norm() <= 1e-9 * all.norm());
            prop_assert!((&all - all.transpose()).norm() <= 1e-12 * all.norm());
            let eig = all.symmetric_eigen().eigenvalues;
            prop_assert!(eig.iter().all(|&e| e >= -1e-9 * eig.max()));
        }

        #[test]
        fn rigid_motion_keeps_peb(seed in 0u64..1000, angle in 0.0f64..std::f64::consts::TAU, tx in -100.0f64..100.0, ty in -100.0f64..100.0) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let nodes = random_nodes(&mut rng, 5, 2);
            let mix = MeasurementMix { aoa_rad: Some(0.02), tdoa_s: Some(1e-9), ..Default::default() };
            let ue = [rng.random_range(-30.0..30.0), rng.random_range(-30.0..30.0), 0.0];
            let obstacles = [rect(60.0, 60.0, 70.0, 70.0)];
            let a = gdop(ue, &nodes, &mix, &obstacles, 2);
            let mv = |p: [f64; 3]| { let r = rotate(p, angle); [r[0] + tx, r[1] + ty, r[2]] };
            let moved: Vec<_> = nodes.iter().map(|n| InfrastructureNode { position_m: mv(n.position_m), ..*n }).collect();
            let obs = [Obstacle { vertices_m: obstacles[0].vertices_m.iter().map(|v| { let m = mv([v[0], v[1], 0.0]); [m[0], m[1]] }).collect() }];
            let b = gdop(mv(ue), &moved, &mix, &obs, 2);
            let fa = position_fim(ue, &nodes, &mix, &obstacles, 2).symmetric_eigen().eigenvalues;
            let fb = position_fim(mv(ue), &moved, &mix, &obs, 2).symmetric_eigen().eigenvalues;
            let (mut fa, mut fb) = (fa.as_slice().to_vec(), fb.as_slice().to_vec());
            fa.sort_by(f64::total_cmp);
            fb.sort_by(f64::total_cmp);
            for (x, y) in fa.iter().zip(&fb) {
                prop_assert!((x - y).abs() <= 1e-6 * fa[1].abs());
            }
            prop_assert!((a.peb_m - b.peb_m).abs() <= 1e-6 * a.peb_m);
        }

        #[test]
        fn more_anchors_or_smaller_sigma_never_hurt(seed in 0u64..1000, k in 1.0f64..5.0) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let nodes = random_nodes(&mut rng, 5, 2);
            let mix = toa(1.0);
            let ue = [0.0, 0.0, 0.0];
            let base = gdop(ue, &nodes[..4], &mix, &[], 2).peb_m;
            prop_assert!(gdop(ue, &nodes, &mix, &[], 2).peb_m <= base * (1.0 + 1e-12));
            prop_assert!(gdop(ue, &nodes[..4], &toa(1.0 / k), &[], 2).peb_m <= base * (1.0 + 1e-12));
        }

        #[test]
        fn los_matches_sampled_oracle(
            x0 in -5.0f64..5.0, y0 in -5.0f64..5.0, w in 0.5f64..4.0, h in 0.5f64..4.0,
            px in -10.0f64..10.0, py in -10.0f64..10.0, qx in -10.0f64..10.0, qy in -10.0f64..10.0,
        ) {
            let o = rect(x0, y0, x0 + w, y0 + h);
            let blocked = o.blocks([px, py], [qx, qy]);
            // dense sampling sees any interior crossing deeper than the step
            let hits = (1..4000).any(|i| {
                let t = i as f64 / 4000.0;
                let p = [px + t * (qx - px), py + t * (qy - py)];
                p[0] > x0 + 1e-6 && p[0] < x0 + w - 1e-6 && p[1] > y0 + 1e-6 && p[1] < y0 + h - 1e-6
            });
            if hits { prop_assert!(blocked); }
            if blocked {
                let near = (0..=4000).any(|i| {
                    let t = i as f64 / 4000.0;
                    let p = [px + t * (qx - px), py + t * (qy - py)];
                    p[0] > x0 - 0.02 && p[0] < x0 + w + 0.02 && p[1] > y0 - 0.02 && p[1] < y0 + h + 0.02
                });
                prop_assert!(near);
            }
        }
    }
}
