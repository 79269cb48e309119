//! Sectioned key-value scenario files.
//!
//! ```text
//! [signal]
//! bandwidth_ghz = 2
//! [nodes]
//! position_m = 5, 5, 3
//! [overrides]
//! nodes.sync_error_ps = 50
//! ```
//!
//! Every dimensioned key carries a unit suffix. Any `*_sigma_*` key in
//! `[deployment]` replaces the default measurement mix instead of extending it.
// Setters are `Ok(field = value)` one-liners.
#![allow(clippy::unit_arg)]

use std::collections::HashMap;
use std::f64::consts::PI;
use std::fmt;

use serde::de::DeserializeOwned;
use serde::Serialize;
use thiserror::Error;

use crate::channel::ArrayConfig;
use crate::deployment::{InfrastructureNode, MeasurementMix, Obstacle, Region};
use crate::usecases::scenario::ScenarioConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DiagnosticKind {
    Syntax,
    UnknownSection,
    UnknownKey,
    DuplicateKey,
    MissingUnit,
    BadValue,
    Invariant,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Diagnostic {
    /// 1-based.
    pub line: usize,
    /// 1-based, in characters.
    pub column: usize,
    pub kind: DiagnosticKind,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = serde_json::to_value(self.kind).ok();
        let kind = kind.as_ref().and_then(|v| v.as_str()).unwrap_or("error");
        write!(f, "{}:{}: {}: {}", self.line, self.column, kind.replace('_', " "), self.message)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{}", .0.iter().map(|d| d.to_string()).collect::<Vec<_>>().join("\n"))]
pub struct ParseErrors(pub Vec<Diagnostic>);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Unit {
    None,
    Frequency,
    Time,
    Length,
    Angle,
    Dbm,
    Db,
    Dbi,
    Area,
    Wavelengths,
}

impl Unit {
    fn suffixes(self) -> &'static [(&'static str, f64)] {
        match self {
            Unit::None => &[],
            Unit::Frequency => &[("hz", 1.0), ("khz", 1e3), ("mhz", 1e6), ("ghz", 1e9)],
            Unit::Time => &[("s", 1.0), ("ms", 1e-3), ("us", 1e-6), ("ns", 1e-9), ("ps", 1e-12)],
            Unit::Length => &[("m", 1.0), ("km", 1e3), ("cm", 1e-2), ("mm", 1e-3)],
            Unit::Angle => &[("rad", 1.0), ("deg", PI / 180.0)],
            Unit::Dbm => &[("dbm", 1.0)],
            Unit::Db => &[("db", 1.0)],
            Unit::Dbi => &[("dbi", 1.0)],
            Unit::Area => &[("m2", 1.0)],
            Unit::Wavelengths => &[("lambda", 1.0)],
        }
    }
}

enum SetError {
    Bad(String),
    Invariant(String),
}

/// A raw value with the key's unit scale already resolved.
struct Val<'a> {
    text: &'a str,
    scale: f64,
}

impl Val<'_> {
    fn parse_num(s: &str, scale: f64) -> Result<f64, SetError> {
        let v: f64 = s.trim().parse().map_err(|_| SetError::Bad(format!("expected a number, got {:?}", s.trim())))?;
        if !v.is_finite() {
            return Err(SetError::Bad(format!("expected a finite number, got {:?}", s.trim())));
        }
        Ok(v * scale)
    }

    fn num(&self) -> Result<f64, SetError> {
        Self::parse_num(self.text, self.scale)
    }

    fn positive(&self) -> Result<f64, SetError> {
        let v = self.num()?;
        if v > 0.0 {
            Ok(v)
        } else {
            Err(SetError::Invariant(format!("must be > 0, got {}", self.text.trim())))
        }
    }

    fn non_negative(&self) -> Result<f64, SetError> {
        let v = self.num()?;
        if v >= 0.0 {
            Ok(v)
        } else {
            Err(SetError::Invariant(format!("must be >= 0, got {}", self.text.trim())))
        }
    }

    fn optional_positive(&self) -> Result<Option<f64>, SetError> {
        if self.text.trim().eq_ignore_ascii_case("none") {
            Ok(None)
        } else {
            self.positive().map(Some)
        }
    }

    fn tuple<const N: usize>(&self) -> Result<[f64; N], SetError> {
        Self::parse_tuple(self.text, self.scale)
    }

    fn parse_tuple<const N: usize>(s: &str, scale: f64) -> Result<[f64; N], SetError> {
        let parts: Vec<&str> = s.split(',').collect();
        if parts.len() != N {
            return Err(SetError::Bad(format!("expected {N} comma-separated numbers, got {:?}", s.trim())));
        }
        let mut out = [0.0; N];
        for (o, p) in out.iter_mut().zip(parts) {
            *o = Self::parse_num(p, scale)?;
        }
        Ok(out)
    }

    fn int<T: TryFrom<u64>>(&self, min: u64) -> Result<T, SetError> {
        let v: u64 = self
            .text
            .trim()
            .parse()
            .map_err(|_| SetError::Bad(format!("expected a whole number, got {:?}", self.text.trim())))?;
        if v < min {
            return Err(SetError::Invariant(format!("must be >= {min}, got {v}")));
        }
        T::try_from(v).map_err(|_| SetError::Bad(format!("{v} is out of range")))
    }

    fn boolean(&self) -> Result<bool, SetError> {
        match self.text.trim() {
            "true" => Ok(true),
            "false" => Ok(false),
            other => Err(SetError::Bad(format!("expected true or false, got {other:?}"))),
        }
    }

    fn choice<T: DeserializeOwned>(s: &str) -> Result<T, SetError> {
        let s = s.trim();
        serde_json::from_value(serde_json::Value::String(s.to_ascii_lowercase()))
            .map_err(|_| SetError::Bad(format!("unknown choice {s:?}")))
    }

    fn one<T: DeserializeOwned>(&self) -> Result<T, SetError> {
        Self::choice(self.text)
    }

    fn list<T: DeserializeOwned>(&self) -> Result<Vec<T>, SetError> {
        let t = self.text.trim();
        if t.is_empty() || t.eq_ignore_ascii_case("none") {
            return Ok(Vec::new());
        }
        t.split(',').map(Self::choice).collect()
    }
}

type Setter<T> = Box<dyn Fn(&mut T, &Val) -> Result<(), SetError> + Send + Sync>;

struct Field<T> {
    stem: &'static str,
    unit: Unit,
    set: Setter<T>,
}

fn field<T>(
    stem: &'static str,
    unit: Unit,
    set: impl Fn(&mut T, &Val) -> Result<(), SetError> + Send + Sync + 'static,
) -> Field<T> {
    Field { stem, unit, set: Box::new(set) }
}

fn sfield(
    stem: &'static str,
    unit: Unit,
    set: impl Fn(&mut ScenarioConfig, &Val) -> Result<(), SetError> + Send + Sync + 'static,
) -> Field<ScenarioConfig> {
    field(stem, unit, set)
}

fn array_fields<T: 'static>(
    prefix: &'static [&'static str; 5],
    get: fn(&mut T) -> &mut ArrayConfig,
) -> Vec<Field<T>> {
    vec![
        field(prefix[0], Unit::None, move |t, v| Ok(get(t).elements_per_dim = v.int(1)?)),
        field(prefix[1], Unit::None, move |t, v| {
            let d: u8 = v.int(1)?;
            if d > 2 {
                return Err(SetError::Invariant(format!("must be 1 or 2, got {d}")));
            }
            Ok(get(t).dims = d)
        }),
        field(prefix[2], Unit::None, move |t, v| Ok(get(t).kind = v.one()?)),
        field(prefix[3], Unit::Dbi, move |t, v| Ok(get(t).element_gain_dbi = v.num()?)),
        field(prefix[4], Unit::Wavelengths, move |t, v| Ok(get(t).spacing = v.positive()?)),
    ]
}

const IN_ARRAY: [&str; 5] =
    ["in_array_elements_per_dim", "in_array_dims", "in_array_kind", "in_array_element_gain", "in_array_spacing"];
const UE_ARRAY: [&str; 5] =
    ["ue_array_elements_per_dim", "ue_array_dims", "ue_array_kind", "ue_array_element_gain", "ue_array_spacing"];
const NODE_ARRAY: [&str; 5] =
    ["array_elements_per_dim", "array_dims", "array_kind", "array_element_gain", "array_spacing"];

fn signal_fields() -> Vec<Field<ScenarioConfig>> {
    vec![
        sfield("bandwidth", Unit::Frequency, |s, v| Ok(s.signal.bandwidth_hz = v.positive()?)),
        sfield("waveform", Unit::None, |s, v| Ok(s.signal.waveform = v.one()?)),
        sfield("coherent", Unit::None, |s, v| Ok(s.signal.coherent = v.boolean()?)),
        sfield("shaping", Unit::None, |s, v| Ok(s.signal.shaping = v.list()?)),
        sfield("streams", Unit::None, |s, v| Ok(s.signal.streams = v.int(1)?)),
        sfield("se_cap_bps_per_hz", Unit::None, |s, v| Ok(s.signal.se_cap_bps_per_hz = v.positive()?)),
        sfield("subcarriers", Unit::None, |s, v| Ok(s.signal.numerology.subcarriers = v.int(1)?)),
        sfield("cp_overhead", Unit::None, |s, v| {
            let x = v.non_negative()?;
            if x >= 1.0 {
                return Err(SetError::Invariant(format!("must be < 1, got {x}")));
            }
            Ok(s.signal.numerology.cp_overhead = x)
        }),
        sfield("symbols_per_slot", Unit::None, |s, v| Ok(s.signal.numerology.symbols_per_slot = v.int(1)?)),
    ]
}

fn hardware_fields() -> Vec<Field<ScenarioConfig>> {
    let mut f = vec![
        sfield("carrier", Unit::Frequency, |s, v| Ok(s.hardware.carrier_hz = v.positive()?)),
        sfield("channelized", Unit::None, |s, v| Ok(s.hardware.channelized = v.boolean()?)),
        sfield("channel_bandwidth", Unit::Frequency, |s, v| Ok(s.hardware.channel_bandwidth_hz = v.positive()?)),
        sfield("phase_coherent", Unit::None, |s, v| Ok(s.hardware.phase_coherent = v.boolean()?)),
        sfield("in_ptx", Unit::Dbm, |s, v| Ok(s.hardware.in_ptx_dbm = v.num()?)),
        sfield("ue_ptx", Unit::Dbm, |s, v| Ok(s.hardware.ue_ptx_dbm = v.num()?)),
        sfield("in_noise_figure", Unit::Db, |s, v| Ok(s.hardware.in_noise_figure_db = v.non_negative()?)),
        sfield("ue_noise_figure", Unit::Db, |s, v| Ok(s.hardware.ue_noise_figure_db = v.non_negative()?)),
        sfield("impl_loss", Unit::Db, |s, v| Ok(s.hardware.impl_loss_db = v.num()?)),
        sfield("calibration", Unit::Db, |s, v| Ok(s.hardware.calibration_db = v.num()?)),
        sfield("pathloss_exponent", Unit::None, |s, v| {
            let x = v.num()?;
            if !(1.5..=6.0).contains(&x) {
                return Err(SetError::Invariant(format!("must be in [1.5, 6], got {x}")));
            }
            Ok(s.hardware.pathloss_exponent = x)
        }),
    ];
    f.extend(array_fields(&IN_ARRAY, |s: &mut ScenarioConfig| &mut s.hardware.in_array));
    f.extend(array_fields(&UE_ARRAY, |s: &mut ScenarioConfig| &mut s.hardware.ue_array));
    f
}

/// Region used when a file sets only some region keys.
pub const DEFAULT_REGION: Region = Region { min_m: [-10.0, -10.0], max_m: [10.0, 10.0], height_m: 1.5, resolution_m: 0.5 };

fn region(s: &mut ScenarioConfig) -> &mut Region {
    s.deployment.region.get_or_insert(DEFAULT_REGION)
}

fn deployment_fields() -> Vec<Field<ScenarioConfig>> {
    vec![
        sfield("dim", Unit::None, |s, v| {
            let d: u8 = v.int(2)?;
            if d > 3 {
                return Err(SetError::Invariant(format!("must be 2 or 3, got {d}")));
            }
            Ok(s.deployment.dim = d)
        }),
        sfield("ue_position", Unit::Length, |s, v| Ok(s.deployment.ue_position_m = v.tuple()?)),
        sfield("dmimo", Unit::None, |s, v| Ok(s.deployment.dmimo = v.boolean()?)),
        sfield("tx_rx_los", Unit::None, |s, v| Ok(s.deployment.tx_rx_los = v.boolean()?)),
        sfield("target_rcs", Unit::Area, |s, v| Ok(s.deployment.target_rcs_m2 = v.positive()?)),
        sfield("detection_threshold", Unit::Db, |s, v| Ok(s.deployment.detection_threshold_db = v.num()?)),
        sfield("toa_sigma", Unit::Time, |s, v| Ok(s.deployment.mix.toa_s = v.optional_positive()?)),
        sfield("tdoa_sigma", Unit::Time, |s, v| Ok(s.deployment.mix.tdoa_s = v.optional_positive()?)),
        sfield("rtt_sigma", Unit::Time, |s, v| Ok(s.deployment.mix.rtt_s = v.optional_positive()?)),
        sfield("aoa_sigma", Unit::Angle, |s, v| Ok(s.deployment.mix.aoa_rad = v.optional_positive()?)),
        sfield("region_min", Unit::Length, |s, v| Ok(region(s).min_m = v.tuple()?)),
        sfield("region_max", Unit::Length, |s, v| Ok(region(s).max_m = v.tuple()?)),
        sfield("region_height", Unit::Length, |s, v| Ok(region(s).height_m = v.num()?)),
        sfield("region_resolution", Unit::Length, |s, v| Ok(region(s).resolution_m = v.positive()?)),
    ]
}

fn node_fields() -> Vec<Field<InfrastructureNode>> {
    let mut f = vec![
        field("position", Unit::Length, |n: &mut InfrastructureNode, v| Ok(n.position_m = v.tuple()?)),
        field("orientation", Unit::Angle, |n: &mut InfrastructureNode, v| Ok(n.orientation_rad = v.tuple()?)),
        field("kind", Unit::None, |n: &mut InfrastructureNode, v| Ok(n.kind = v.one()?)),
        field("sync_error", Unit::Time, |n: &mut InfrastructureNode, v| Ok(n.sync_error_s = v.non_negative()?)),
        field("position_error", Unit::Length, |n: &mut InfrastructureNode, v| Ok(n.position_error_m = v.non_negative()?)),
        field("orientation_error", Unit::Angle, |n: &mut InfrastructureNode, v| {
            Ok(n.orientation_error_rad = v.non_negative()?)
        }),
    ];
    f.extend(array_fields(&NODE_ARRAY, |n: &mut InfrastructureNode| &mut n.array));
    f
}

fn obstacle_fields() -> Vec<Field<Obstacle>> {
    vec![field("vertices", Unit::Length, |o: &mut Obstacle, v| {
        o.vertices_m =
            v.text.split(';').filter(|p| !p.trim().is_empty()).map(|p| Val::parse_tuple(p, v.scale)).collect::<Result<_, _>>()?;
        Ok(())
    })]
}

enum Lookup<'f, T> {
    Found(&'f Field<T>, f64),
    MissingUnit(&'f Field<T>),
    Unknown,
}

fn lookup<'f, T>(fields: &'f [Field<T>], key: &str) -> Lookup<'f, T> {
    for f in fields {
        if key == f.stem {
            return if f.unit == Unit::None { Lookup::Found(f, 1.0) } else { Lookup::MissingUnit(f) };
        }
        if let Some(rest) = key.strip_prefix(f.stem).and_then(|r| r.strip_prefix('_')) {
            if let Some((_, scale)) = f.unit.suffixes().iter().find(|(s, _)| *s == rest) {
                return Lookup::Found(f, *scale);
            }
        }
    }
    Lookup::Unknown
}

fn unit_hint(u: Unit) -> String {
    u.suffixes().iter().map(|(s, _)| format!("_{s}")).collect::<Vec<_>>().join(", ")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Section {
    Signal,
    Hardware,
    Deployment,
    Nodes,
    Obstacles,
    Overrides,
}

impl Section {
    fn parse(name: &str) -> Option<Self> {
        Some(match name {
            "signal" => Self::Signal,
            "hardware" => Self::Hardware,
            "deployment" => Self::Deployment,
            "nodes" => Self::Nodes,
            "obstacles" => Self::Obstacles,
            "overrides" => Self::Overrides,
            _ => return None,
        })
    }
}

struct Tables {
    signal: Vec<Field<ScenarioConfig>>,
    hardware: Vec<Field<ScenarioConfig>>,
    deployment: Vec<Field<ScenarioConfig>>,
    node: Vec<Field<InfrastructureNode>>,
    obstacle: Vec<Field<Obstacle>>,
}

impl Tables {
    fn new() -> Self {
        Self {
            signal: signal_fields(),
            hardware: hardware_fields(),
            deployment: deployment_fields(),
            node: node_fields(),
            obstacle: obstacle_fields(),
        }
    }

    fn scenario(&self, section: Section) -> &[Field<ScenarioConfig>] {
        match section {
            Section::Signal => &self.signal,
            Section::Hardware => &self.hardware,
            _ => &self.deployment,
        }
    }
}

fn apply<T>(fields: &[Field<T>], target: &mut T, key: &str, value: &str) -> Result<(), (DiagnosticKind, String)> {
    match lookup(fields, key) {
        Lookup::Found(f, scale) => (f.set)(target, &Val { text: value, scale }).map_err(|e| match e {
            SetError::Bad(m) => (DiagnosticKind::BadValue, format!("{key}: {m}")),
            SetError::Invariant(m) => (DiagnosticKind::Invariant, format!("{key} {m}")),
        }),
        Lookup::MissingUnit(f) => {
            Err((DiagnosticKind::MissingUnit, format!("{key} needs a unit suffix ({})", unit_hint(f.unit))))
        }
        Lookup::Unknown => Err((DiagnosticKind::UnknownKey, format!("unknown key {key:?}"))),
    }
}

/// Applies one dotted override such as `signal.streams` or `nodes.2.sync_error_ps`.
/// `nodes.<key>` and `obstacles.<key>` without an index apply to every entry.
pub fn apply_override(s: &mut ScenarioConfig, dotted: &str, value: &str) -> Result<(), (DiagnosticKind, String)> {
    apply_override_with(&Tables::new(), s, dotted, value)
}

fn apply_override_with(
    t: &Tables,
    s: &mut ScenarioConfig,
    dotted: &str,
    value: &str,
) -> Result<(), (DiagnosticKind, String)> {
    let parts: Vec<&str> = dotted.split('.').collect();
    let (section, index, key) = match parts.as_slice() {
        [sec, key] => (*sec, None, *key),
        [sec, idx, key] => {
            let i: usize =
                idx.parse().map_err(|_| (DiagnosticKind::Syntax, format!("bad index {idx:?} in {dotted:?}")))?;
            (*sec, Some(i), *key)
        }
        _ => return Err((DiagnosticKind::Syntax, format!("expected section.key or section.index.key, got {dotted:?}"))),
    };
    let out_of_range = |n: usize| (DiagnosticKind::UnknownKey, format!("{dotted}: index out of range ({n} entries)"));
    match (Section::parse(section), index) {
        (Some(sec @ (Section::Signal | Section::Hardware | Section::Deployment)), None) => {
            apply(t.scenario(sec), s, key, value)
        }
        (Some(Section::Nodes), None) => {
            let n = &mut s.deployment.nodes;
            n.iter_mut().try_for_each(|node| apply(&t.node, node, key, value))?;
            // Still report bad keys when there is nothing to apply them to.
            apply(&t.node, &mut InfrastructureNode::bs([0.0; 3]), key, value)
        }
        (Some(Section::Nodes), Some(i)) => {
            let len = s.deployment.nodes.len();
            let node = s.deployment.nodes.get_mut(i).ok_or_else(|| out_of_range(len))?;
            apply(&t.node, node, key, value)
        }
        (Some(Section::Obstacles), None) => {
            s.deployment.obstacles.iter_mut().try_for_each(|o| apply(&t.obstacle, o, key, value))?;
            apply(&t.obstacle, &mut Obstacle { vertices_m: vec![] }, key, value)
        }
        (Some(Section::Obstacles), Some(i)) => {
            let len = s.deployment.obstacles.len();
            let o = s.deployment.obstacles.get_mut(i).ok_or_else(|| out_of_range(len))?;
            apply(&t.obstacle, o, key, value)
        }
        _ => Err((DiagnosticKind::UnknownSection, format!("cannot override {dotted:?}"))),
    }
}

struct Located<'a> {
    line: usize,
    key: &'a str,
    key_col: usize,
    value: &'a str,
    value_col: usize,
}

fn column_of(line: &str, part: &str) -> usize {
    let offset = part.as_ptr() as usize - line.as_ptr() as usize;
    line[..offset].chars().count() + 1
}

pub fn parse_scenario(text: &str) -> Result<ScenarioConfig, ParseErrors> {
    let t = Tables::new();
    let mut s = ScenarioConfig::default();
    let mut diags = Vec::new();
    let mut section: Option<Section> = None;
    let mut seen: HashMap<String, usize> = HashMap::new();
    // Line where each entity or key was last set, to place whole-scenario problems.
    let mut origin: Vec<(String, usize, usize)> = Vec::new();
    let mut mix_replaced = false;
    let mut overrides = Vec::new();
    let mut last_line = 1;

    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        last_line = line_no;
        let content = raw.split('#').next().unwrap_or("");
        let trimmed = content.trim();
        if trimmed.is_empty() {
            continue;
        }
        let col = column_of(raw, trimmed);
        let diag = |column: usize, kind, message: String| Diagnostic { line: line_no, column, kind, message };

        if let Some(rest) = trimmed.strip_prefix('[') {
            let Some(name) = rest.strip_suffix(']') else {
                diags.push(diag(col, DiagnosticKind::Syntax, "section header is missing ']'".into()));
                section = None;
                continue;
            };
            let name = name.trim();
            match Section::parse(name) {
                Some(sec) => {
                    section = Some(sec);
                    seen.clear();
                    match sec {
                        Section::Nodes => {
                            s.deployment.nodes.push(InfrastructureNode::bs([0.0; 3]));
                            origin.push((format!("node {}", s.deployment.nodes.len() - 1), line_no, col));
                        }
                        Section::Obstacles => {
                            s.deployment.obstacles.push(Obstacle { vertices_m: vec![] });
                            origin.push((format!("obstacles[{}]", s.deployment.obstacles.len() - 1), line_no, col));
                        }
                        _ => {}
                    }
                }
                None => {
                    diags.push(diag(col, DiagnosticKind::UnknownSection, format!("unknown section [{name}]")));
                    section = None;
                }
            }
            continue;
        }

        let Some((k, v)) = trimmed.split_once('=') else {
            diags.push(diag(col, DiagnosticKind::Syntax, "expected `key = value` or `[section]`".into()));
            continue;
        };
        let key = k.trim();
        let value = v.trim();
        let key_col = column_of(raw, if key.is_empty() { trimmed } else { key });
        let value_col = if value.is_empty() { col + trimmed.chars().count() } else { column_of(raw, value) };
        if key.is_empty() || key.contains(char::is_whitespace) {
            diags.push(diag(key_col, DiagnosticKind::Syntax, format!("malformed key {key:?}")));
            continue;
        }
        if value.is_empty() {
            diags.push(diag(value_col, DiagnosticKind::Syntax, format!("{key} has no value")));
            continue;
        }
        let Some(sec) = section else {
            diags.push(diag(key_col, DiagnosticKind::Syntax, format!("{key} appears outside any known section")));
            continue;
        };
        if let Some(prev) = seen.insert(key.to_string(), line_no) {
            diags.push(diag(key_col, DiagnosticKind::DuplicateKey, format!("{key} already set on line {prev}")));
            continue;
        }
        let at = Located { line: line_no, key, key_col, value, value_col };
        let result = match sec {
            Section::Signal | Section::Hardware | Section::Deployment => {
                if sec == Section::Deployment && key.contains("_sigma") && !mix_replaced {
                    s.deployment.mix = MeasurementMix::default();
                    mix_replaced = true;
                }
                let prefix = match sec {
                    Section::Signal => "signal",
                    Section::Hardware => "hardware",
                    _ => "deployment",
                };
                origin.push((format!("{prefix}.{}", stem_of(key)), line_no, key_col));
                if key.contains("_sigma") {
                    origin.push(("deployment: measurement mix".into(), line_no, key_col));
                }
                if key.starts_with("region") {
                    origin.push(("deployment: region".into(), line_no, key_col));
                }
                apply(t.scenario(sec), &mut s, key, value)
            }
            Section::Nodes => {
                let n = s.deployment.nodes.last_mut().expect("pushed at header");
                apply(&t.node, n, key, value)
            }
            Section::Obstacles => {
                let o = s.deployment.obstacles.last_mut().expect("pushed at header");
                apply(&t.obstacle, o, key, value)
            }
            Section::Overrides => {
                overrides.push(at);
                continue;
            }
        };
        if let Err((kind, message)) = result {
            let column = if matches!(kind, DiagnosticKind::BadValue | DiagnosticKind::Invariant) { at.value_col } else { at.key_col };
            diags.push(Diagnostic { line: at.line, column, kind, message });
        }
    }

    for o in overrides {
        if let Err((kind, message)) = apply_override_with(&t, &mut s, o.key, o.value) {
            let column = if matches!(kind, DiagnosticKind::BadValue | DiagnosticKind::Invariant) { o.value_col } else { o.key_col };
            diags.push(Diagnostic { line: o.line, column, kind, message });
        }
        origin.push((o.key.to_string(), o.line, o.key_col));
    }

    if diags.is_empty() {
        if let Err(e) = s.validate() {
            for p in e.problems {
                let (line, column) = origin
                    .iter()
                    .rev()
                    .find(|(tag, _, _)| p.contains(tag.as_str()))
                    .map(|(_, l, c)| (*l, *c))
                    .unwrap_or((last_line, 1));
                diags.push(Diagnostic { line, column, kind: DiagnosticKind::Invariant, message: p });
            }
        }
    }
    if diags.is_empty() {
        Ok(s)
    } else {
        diags.sort_by_key(|d| (d.line, d.column));
        Err(ParseErrors(diags))
    }
}

/// Key without its unit suffix, for matching validation messages.
fn stem_of(key: &str) -> &str {
    key.rsplit_once('_').map(|(a, _)| a).unwrap_or(key)
}

fn num(v: f64) -> String {
    let plain = format!("{v}");
    let exp = format!("{v:e}");
    if exp.len() < plain.len() {
        exp
    } else {
        plain
    }
}

fn tuple(v: &[f64]) -> String {
    v.iter().map(|x| num(*x)).collect::<Vec<_>>().join(", ")
}

fn label<T: Serialize>(v: &T) -> String {
    serde_json::to_value(v).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default()
}

fn write_array(out: &mut String, names: &[&str; 5], a: &ArrayConfig) {
    use std::fmt::Write;
    let _ = writeln!(out, "{} = {}", names[0], a.elements_per_dim);
    let _ = writeln!(out, "{} = {}", names[1], a.dims);
    let _ = writeln!(out, "{} = {}", names[2], label(&a.kind));
    let _ = writeln!(out, "{}_dbi = {}", names[3], num(a.element_gain_dbi));
    let _ = writeln!(out, "{}_lambda = {}", names[4], num(a.spacing));
}

/// Canonical text form; `parse_scenario(&write_scenario(s)) == s` for any valid `s`.
pub fn write_scenario(s: &ScenarioConfig) -> String {
    use std::fmt::Write;
    let mut o = String::new();
    let sig = &s.signal;
    let h = &s.hardware;
    let d = &s.deployment;
    let opt = |v: Option<f64>| v.map(num).unwrap_or_else(|| "none".into());

    let _ = writeln!(o, "[signal]");
    let _ = writeln!(o, "bandwidth_hz = {}", num(sig.bandwidth_hz));
    let _ = writeln!(o, "waveform = {}", label(&sig.waveform));
    let _ = writeln!(o, "coherent = {}", sig.coherent);
    let shaping: Vec<String> = sig.shaping.iter().map(label).collect();
    let _ = writeln!(o, "shaping = {}", if shaping.is_empty() { "none".into() } else { shaping.join(", ") });
    let _ = writeln!(o, "streams = {}", sig.streams);
    let _ = writeln!(o, "se_cap_bps_per_hz = {}", num(sig.se_cap_bps_per_hz));
    let _ = writeln!(o, "subcarriers = {}", sig.numerology.subcarriers);
    let _ = writeln!(o, "cp_overhead = {}", num(sig.numerology.cp_overhead));
    let _ = writeln!(o, "symbols_per_slot = {}", sig.numerology.symbols_per_slot);

    let _ = writeln!(o, "\n[hardware]");
    let _ = writeln!(o, "carrier_hz = {}", num(h.carrier_hz));
    let _ = writeln!(o, "channelized = {}", h.channelized);
    let _ = writeln!(o, "channel_bandwidth_hz = {}", num(h.channel_bandwidth_hz));
    let _ = writeln!(o, "phase_coherent = {}", h.phase_coherent);
    write_array(&mut o, &IN_ARRAY, &h.in_array);
    write_array(&mut o, &UE_ARRAY, &h.ue_array);
    let _ = writeln!(o, "in_ptx_dbm = {}", num(h.in_ptx_dbm));
    let _ = writeln!(o, "ue_ptx_dbm = {}", num(h.ue_ptx_dbm));
    let _ = writeln!(o, "in_noise_figure_db = {}", num(h.in_noise_figure_db));
    let _ = writeln!(o, "ue_noise_figure_db = {}", num(h.ue_noise_figure_db));
    let _ = writeln!(o, "impl_loss_db = {}", num(h.impl_loss_db));
    let _ = writeln!(o, "calibration_db = {}", num(h.calibration_db));
    let _ = writeln!(o, "pathloss_exponent = {}", num(h.pathloss_exponent));

    let _ = writeln!(o, "\n[deployment]");
    let _ = writeln!(o, "dim = {}", d.dim);
    let _ = writeln!(o, "ue_position_m = {}", tuple(&d.ue_position_m));
    let _ = writeln!(o, "dmimo = {}", d.dmimo);
    let _ = writeln!(o, "tx_rx_los = {}", d.tx_rx_los);
    let _ = writeln!(o, "target_rcs_m2 = {}", num(d.target_rcs_m2));
    let _ = writeln!(o, "detection_threshold_db = {}", num(d.detection_threshold_db));
    let _ = writeln!(o, "toa_sigma_s = {}", opt(d.mix.toa_s));
    let _ = writeln!(o, "tdoa_sigma_s = {}", opt(d.mix.tdoa_s));
    let _ = writeln!(o, "rtt_sigma_s = {}", opt(d.mix.rtt_s));
    let _ = writeln!(o, "aoa_sigma_rad = {}", opt(d.mix.aoa_rad));
    if let Some(r) = &d.region {
        let _ = writeln!(o, "region_min_m = {}", tuple(&r.min_m));
        let _ = writeln!(o, "region_max_m = {}", tuple(&r.max_m));
        let _ = writeln!(o, "region_height_m = {}", num(r.height_m));
        let _ = writeln!(o, "region_resolution_m = {}", num(r.resolution_m));
    }

    for n in &d.nodes {
        let _ = writeln!(o, "\n[nodes]");
        let _ = writeln!(o, "position_m = {}", tuple(&n.position_m));
        let _ = writeln!(o, "orientation_rad = {}", tuple(&n.orientation_rad));
        let _ = writeln!(o, "kind = {}", label(&n.kind));
        write_array(&mut o, &NODE_ARRAY, &n.array);
        let _ = writeln!(o, "sync_error_s = {}", num(n.sync_error_s));
        let _ = writeln!(o, "position_error_m = {}", num(n.position_error_m));
        let _ = writeln!(o, "orientation_error_rad = {}", num(n.orientation_error_rad));
    }
    for ob in &d.obstacles {
        let _ = writeln!(o, "\n[obstacles]");
        let v: Vec<String> = ob.vertices_m.iter().map(|p| tuple(p)).collect();
        let _ = writeln!(o, "vertices_m = {}", v.join("; "));
    }
    o
}
