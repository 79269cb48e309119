//! Command-line front end and HTTP service for the feasibility engine.

pub mod server;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use isacfeas::linkbudget::{bandwidth_vs_power, BandwidthCurve};
use isacfeas::locbounds::{error_vs_distance_curve, ErrorCurveScenario, SpebConstants};
use isacfeas::quantities::PowerDbm;
use isacfeas::shell::api::{
    evaluate_request, heatmap_request, sweep_request, to_json, EvaluateRequest, EvaluateResponse, HeatmapRequest,
    SweepRequest, SweepTarget,
};
use isacfeas::shell::emit::{bandwidth_curve_csv, error_curve_csv, heatmap_csv, heatmap_pgm, sweep_csv};
use isacfeas::shell::{parse_scenario, write_scenario};
use isacfeas::{recommend, HeatmapMetric, ScenarioConfig, UseCaseId, Verdict};

#[derive(Debug, Parser)]
#[command(name = "isacfeas", version, about = "Feasibility checks for communication, localization and sensing use cases")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evaluate a scenario against one or all use cases.
    Report {
        scenario: PathBuf,
        /// Use case id (C1 C2 L1 L2 L3 S1 S2) or `all`.
        #[arg(long, default_value = "all")]
        use_case: String,
        /// Also write the JSON report here (`-` for stdout instead of the text summary).
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Sweep one scenario key and report what the target needs at each point.
    Sweep {
        scenario: PathBuf,
        /// Dotted key with unit, e.g. `signal.bandwidth_ghz`.
        #[arg(long)]
        param: String,
        #[arg(long)]
        from: f64,
        #[arg(long)]
        to: f64,
        #[arg(long, default_value_t = 11)]
        points: usize,
        #[arg(long, value_enum)]
        target: Target,
        #[arg(long)]
        use_case: Option<UseCaseId>,
    },
    /// Reference curves: error bounds vs distance, or bandwidth vs power.
    Curve {
        /// Take carrier, bandwidth and arrays from this scenario instead of the reference preset.
        scenario: Option<PathBuf>,
        #[arg(long, value_enum)]
        figure: Figure,
    },
    /// Grid a deployment metric over the scenario region.
    Heatmap {
        scenario: PathBuf,
        #[arg(long, value_enum)]
        metric: Metric,
        /// Write `<out>.csv` and `<out>.pgm` instead of printing CSV.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Smallest deployment covering the given use cases.
    Recommend {
        /// Use case ids or `all`.
        #[arg(default_value = "all")]
        use_cases: Vec<String>,
        /// Write the scenario file here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Serve the JSON API.
    Serve {
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Target {
    Rate,
    Peb,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Figure {
    Fig2,
    Fig3,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Metric {
    Peb,
    Gdop,
    VisibleCount,
    Rate,
    SensingSnr,
}

impl From<Metric> for HeatmapMetric {
    fn from(m: Metric) -> Self {
        match m {
            Metric::Peb => HeatmapMetric::Peb,
            Metric::Gdop => HeatmapMetric::Gdop,
            Metric::VisibleCount => HeatmapMetric::VisibleCount,
            Metric::Rate => HeatmapMetric::Rate,
            Metric::SensingSnr => HeatmapMetric::SensingSnr,
        }
    }
}

/// Successful runs end in one of these; errors map to exit code 2.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Ok,
    Infeasible,
}

impl Outcome {
    pub fn code(self) -> u8 {
        match self {
            Outcome::Ok => 0,
            Outcome::Infeasible => 1,
        }
    }

    fn from_pass(pass: bool) -> Self {
        if pass {
            Outcome::Ok
        } else {
            Outcome::Infeasible
        }
    }
}

pub fn load_scenario(path: &Path) -> Result<ScenarioConfig> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    parse_scenario(&text).map_err(|e| {
        let lines: Vec<String> = e.0.iter().map(|d| format!("{}:{d}", path.display())).collect();
        anyhow::anyhow!("{}", lines.join("\n"))
    })
}

pub fn parse_use_cases(args: &[String]) -> Result<Vec<UseCaseId>> {
    if args.is_empty() || args.iter().any(|a| a.eq_ignore_ascii_case("all")) {
        return Ok(UseCaseId::ALL.to_vec());
    }
    args.iter()
        .flat_map(|a| a.split(','))
        .map(|a| a.trim().parse::<UseCaseId>().map_err(anyhow::Error::msg))
        .collect()
}

fn fmt_value(v: Option<f64>) -> String {
    match v {
        Some(x) if x.is_infinite() => if x > 0.0 { "inf" } else { "-inf" }.into(),
        Some(x) => format!("{x:.4e}"),
        None => "-".into(),
    }
}

/// Plain-text summary of an evaluation, one line per check.
pub fn render_report(resp: &EvaluateResponse) -> String {
    let mut out = String::new();
    for r in &resp.reports {
        let verdict = if r.overall == Verdict::Pass { "PASS" } else { "FAIL" };
        let limiting = r.limiting_constraint.as_deref().unwrap_or("-");
        let _ = writeln!(out, "{} {verdict}  limiting: {limiting}", r.use_case);
        for c in &r.checks {
            let tag = match c.verdict {
                Verdict::Pass => "pass",
                Verdict::Warn => "warn",
                Verdict::Fail => "FAIL",
            };
            let margin = match c.margin_db {
                Some(m) if m.abs() >= f64::MAX => if m > 0.0 { "+inf dB" } else { "-inf dB" }.to_string(),
                Some(m) => format!("{m:+.2} dB"),
                None => String::new(),
            };
            let _ = write!(out, "  [{tag}] {:<20}", c.name);
            if c.required.is_some() || c.achieved.is_some() {
                let _ = write!(out, " {} vs {} {} {margin}", fmt_value(c.achieved), fmt_value(c.required), c.unit);
            }
            if let Some(n) = &c.note {
                let _ = write!(out, "  ({n})");
            }
            let _ = writeln!(out, "  <{}>", c.requirement_row);
        }
    }
    out
}

/// Log-spaced distances from 1 m to 200 m.
pub fn error_curve_grid() -> Vec<f64> {
    let n = 41;
    (0..n).map(|i| 200f64.powf(i as f64 / (n - 1) as f64)).collect()
}

/// Per-element powers for bandwidth-vs-power curves, dBm.
pub fn power_grid() -> Vec<f64> {
    (-10..=20).map(f64::from).collect()
}

fn fig2_scenario(s: &ScenarioConfig) -> ErrorCurveScenario {
    let ue = &s.hardware.ue_array;
    ErrorCurveScenario {
        carrier: s.carrier(),
        bandwidth: s.bandwidth(),
        ptx: PowerDbm::new(s.hardware.ue_ptx_dbm + 10.0 * (ue.total_elements() as f64).log10()).expect("finite"),
        rx_elements: s.hardware.in_array.elements_per_dim,
        rx_noise: s.in_noise(),
        constants: SpebConstants::default(),
        rate: s.rate_model(),
        ..ErrorCurveScenario::reference()
    }
}

fn fig3_curves(s: &ScenarioConfig) -> Vec<BandwidthCurve> {
    BandwidthCurve::reference_pair()
        .into_iter()
        .map(|c| BandwidthCurve { link: s.downlink(c.link.distance), rate: s.rate_model(), ..c })
        .collect()
}

fn write_out(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

/// Runs every command except `serve`, writing primary output to `out`.
pub fn run(command: &Command, out: &mut String) -> Result<Outcome> {
    match command {
        Command::Report { scenario, use_case, json } => {
            let s = load_scenario(scenario)?;
            let req = EvaluateRequest { scenario: s, use_cases: parse_use_cases(std::slice::from_ref(use_case))? };
            let resp = evaluate_request(&req)?;
            match json.as_deref() {
                Some(p) if p == Path::new("-") => out.push_str(&to_json(&resp)),
                Some(p) => {
                    write_out(p, &to_json(&resp))?;
                    out.push_str(&render_report(&resp));
                }
                None => out.push_str(&render_report(&resp)),
            }
            Ok(Outcome::from_pass(resp.overall == Verdict::Pass))
        }
        Command::Sweep { scenario, param, from, to, points, target, use_case } => {
            let req = SweepRequest {
                scenario: load_scenario(scenario)?,
                param: param.clone(),
                from: *from,
                to: *to,
                points: *points,
                target: match target {
                    Target::Rate => SweepTarget::Rate,
                    Target::Peb => SweepTarget::Peb,
                },
                use_case: *use_case,
            };
            let resp = sweep_request(&req)?;
            out.push_str(&sweep_csv(&resp));
            Ok(Outcome::from_pass(resp.rows.iter().any(|r| r.feasible)))
        }
        Command::Curve { scenario, figure } => {
            let s = scenario.as_deref().map(load_scenario).transpose()?;
            match figure {
                Figure::Fig2 => {
                    let c = s.as_ref().map(fig2_scenario).unwrap_or_else(ErrorCurveScenario::reference);
                    out.push_str(&error_curve_csv(&error_vs_distance_curve(&c, &error_curve_grid())?));
                }
                Figure::Fig3 => {
                    let curves = s.as_ref().map(fig3_curves).unwrap_or_else(|| BandwidthCurve::reference_pair().to_vec());
                    out.push_str(&bandwidth_curve_csv(&bandwidth_vs_power(&curves, &power_grid())?));
                }
            }
            Ok(Outcome::Ok)
        }
        Command::Heatmap { scenario, metric, out: prefix } => {
            let h = heatmap_request(&HeatmapRequest { scenario: load_scenario(scenario)?, metric: (*metric).into() })?;
            match prefix {
                Some(p) => {
                    write_out(&p.with_extension("csv"), &heatmap_csv(&h))?;
                    write_out(&p.with_extension("pgm"), &heatmap_pgm(&h))?;
                }
                None => out.push_str(&heatmap_csv(&h)),
            }
            Ok(Outcome::Ok)
        }
        Command::Recommend { use_cases, out: path } => {
            let ids = parse_use_cases(use_cases)?;
            let rec = match recommend(&ids) {
                Ok(r) => r,
                Err(e @ isacfeas::RecommendError::Unresolved { .. }) => {
                    let _ = writeln!(out, "# {e}");
                    return Ok(Outcome::Infeasible);
                }
                Err(e) => bail!(e),
            };
            let ids: Vec<String> = ids.iter().map(|i| i.to_string()).collect();
            let mut text = format!("# Recommended deployment for {}.\n", ids.join(" "));
            for n in &rec.notes {
                let _ = writeln!(text, "# {n}");
            }
            text.push('\n');
            text.push_str(&write_scenario(&rec.scenario));
            match path {
                Some(p) => {
                    write_out(p, &text)?;
                    out.push_str(&text.lines().take_while(|l| l.starts_with('#')).collect::<Vec<_>>().join("\n"));
                    out.push('\n');
                }
                None => out.push_str(&text),
            }
            Ok(Outcome::Ok)
        }
        Command::Serve { .. } => bail!("serve runs in the async entry point"),
    }
}
