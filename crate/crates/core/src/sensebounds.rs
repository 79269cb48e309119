//! Radar-style sensing: resolution limits and a feasibility check against
//! sensing KPIs.
//!
//! Accuracy is modelled as `resolution / sqrt(2·SNR)` with SNR integrated over
//! every OFDM symbol of one observation window. Detection requires the
//! integrated SNR at the maximum range to reach a configurable threshold.

use serde::{Deserialize, Serialize};

use crate::channel::{bistatic_snr_db, monostatic_snr_db, ArrayConfig, RadarParams};
use crate::linkbudget::Numerology;
use crate::quantities::{wavelength, Angle, Bandwidth, Distance, Duration, PowerDbm, SPEED_OF_LIGHT};
use crate::report::{Check, Verdict};

pub const DEFAULT_DETECTION_THRESHOLD_DB: f64 = 10.0;

/// Half-power beamwidth of a uniform aperture, degrees·elements at λ/2 spacing.
pub const BEAMWIDTH_DEG_ELEMENTS: f64 = 101.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SensingMode {
    Monostatic,
    Bistatic,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SensingKpis {
    pub range_acc_m: f64,
    pub range_res_m: f64,
    /// Velocity resolution target, m/s.
    pub velocity_mps: f64,
    pub ang_res_deg: f64,
    pub ang_acc_deg: f64,
    pub max_range_m: f64,
    pub update_rate_hz: f64,
    /// The update rate is an upper bound ("up to"), so slower refresh is acceptable.
    pub update_rate_is_ceiling: bool,
    pub mode: SensingMode,
}

pub fn range_resolution(b: Bandwidth) -> Distance {
    Distance::new(SPEED_OF_LIGHT / (2.0 * b.value())).expect("positive bandwidth")
}

/// Beamwidth-limited angular resolution of one array axis; `None` below two elements.
pub fn angular_resolution_deg(a: &ArrayConfig) -> Option<Angle> {
    if a.elements_per_dim < 2 {
        return None;
    }
    // 0.886·λ/(N·s·λ) rad; 0.886 rad ≈ 50.76° so 101.5/N at s = 0.5
    let deg = BEAMWIDTH_DEG_ELEMENTS * 0.5 / (a.elements_per_dim as f64 * a.spacing);
    Some(Angle::from_degrees(deg))
}

/// Doppler resolution λ/(2·t_obs), m/s.
pub fn velocity_resolution(lambda: Distance, t_obs: Duration) -> f64 {
    lambda.value() / (2.0 * t_obs.value())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SensingScenario {
    /// May be zero or negative in a malformed what-if; the range check then fails.
    pub bandwidth_hz: f64,
    pub radar: RadarParams,
    pub ptx_per_element: PowerDbm,
    pub numerology: Numerology,
    pub detection_threshold_db: f64,
}

const ROW: &str = "sensing KPI";

fn row(what: &str) -> String {
    format!("{ROW}: {what}")
}

/// Integrated SNR at the maximum range over one observation window, dB.
pub fn integrated_snr_db(kpis: &SensingKpis, s: &SensingScenario) -> Option<f64> {
    let b = Bandwidth::new(s.bandwidth_hz).ok()?;
    let d = Distance::new(kpis.max_range_m).ok()?;
    let per_symbol = match kpis.mode {
        SensingMode::Monostatic => monostatic_snr_db(s.ptx_per_element, &s.radar, d, b),
        SensingMode::Bistatic => bistatic_snr_db(s.ptx_per_element, &s.radar, d, d, b),
    }
    .ok()?;
    let t_obs = Duration::new(1.0 / kpis.update_rate_hz).ok()?;
    let symbols = s.numerology.symbols_in(t_obs, b).max(1);
    Some(per_symbol.value() + 10.0 * (symbols as f64).log10())
}

pub fn sensing_feasibility(kpis: &SensingKpis, s: &SensingScenario) -> Vec<Check> {
    let mut checks = Vec::new();
    let snr_db = integrated_snr_db(kpis, s);
    let accuracy_factor = snr_db.map_or(f64::INFINITY, |x| 1.0 / (2.0 * 10f64.powf(x / 10.0)).sqrt());

    match Bandwidth::new(s.bandwidth_hz) {
        Ok(b) => {
            let res = range_resolution(b).value();
            checks.push(Check::at_most("range_resolution", &row("range resolution"), "m", kpis.range_res_m, res));
            checks.push(
                Check::at_most("range_accuracy", &row("range accuracy"), "m", kpis.range_acc_m, res * accuracy_factor)
                    .note("resolution / sqrt(2 SNR)"),
            );
        }
        Err(_) => {
            let note = format!("bandwidth {} Hz gives no range resolution", s.bandwidth_hz);
            checks.push(Check::flag("range_resolution", &row("range resolution"), Verdict::Fail, note.clone()));
            checks.push(Check::flag("range_accuracy", &row("range accuracy"), Verdict::Fail, note));
        }
    }

    match angular_resolution_deg(&s.radar.rx) {
        Some(a) => {
            let res = a.degrees();
            checks.push(Check::at_most("angular_resolution", &row("angular resolution"), "deg", kpis.ang_res_deg, res));
            checks.push(
                Check::at_most("angular_accuracy", &row("angular accuracy"), "deg", kpis.ang_acc_deg, res * accuracy_factor)
                    .note("resolution / sqrt(2 SNR)"),
            );
        }
        None => {
            let note = "receive array has fewer than 2 elements per dimension";
            checks.push(Check::flag("angular_resolution", &row("angular resolution"), Verdict::Fail, note));
            checks.push(Check::flag("angular_accuracy", &row("angular accuracy"), Verdict::Fail, note));
        }
    }

    let lambda = wavelength(s.radar.carrier);
    let t_obs = 1.0 / kpis.update_rate_hz;
    let v = Duration::new(t_obs).map_or(f64::INFINITY, |t| velocity_resolution(lambda, t));
    let mut vc = Check::at_most("velocity_resolution", &row("velocity resolution"), "m/s", kpis.velocity_mps, v);
    if vc.verdict == Verdict::Fail && kpis.update_rate_is_ceiling {
        let needed = lambda.value() / (2.0 * kpis.velocity_mps);
        vc = vc.advisory().note(format!(
            "needs {:.2} ms of observation, so refresh must drop to {:.0} Hz or below",
            needed * 1e3,
            1.0 / needed
        ));
    }
    checks.push(vc);

    checks.push(match snr_db {
        Some(x) => Check::at_least_db("detection_snr", &row("maximum range"), s.detection_threshold_db, x)
            .note(format!("integrated over {:.0} ms at {} m", t_obs * 1e3, kpis.max_range_m)),
        None => Check::flag("detection_snr", &row("maximum range"), Verdict::Fail, "SNR undefined for this scenario"),
    });
    checks
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{GainModel, NoiseModel, RadarTarget};
    use crate::quantities::{Decibel, Frequency};
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn s1() -> SensingKpis {
        SensingKpis {
            range_acc_m: 0.1,
            range_res_m: 0.1,
            velocity_mps: 0.04,
            ang_res_deg: 3.0,
            ang_acc_deg: 0.2,
            max_range_m: 50.0,
            update_rate_hz: 25.0,
            update_rate_is_ceiling: false,
            mode: SensingMode::Monostatic,
        }
    }

    fn scenario(b: f64, rx: u32) -> SensingScenario {
        SensingScenario {
            bandwidth_hz: b,
            radar: RadarParams {
                tx: ArrayConfig::planar(16),
                rx: ArrayConfig::planar(rx),
                carrier: Frequency::new(140e9).unwrap(),
                target: RadarTarget::with_rcs(1.0),
                noise: NoiseModel { noise_figure_db: 10.0 },
                impl_loss: Decibel(0.0),
                gains: GainModel::default(),
            },
            ptx_per_element: PowerDbm::new(10.0).unwrap(),
            numerology: Numerology::default(),
            detection_threshold_db: DEFAULT_DETECTION_THRESHOLD_DB,
        }
    }

    fn verdict(c: &[Check], name: &str) -> Verdict {
        c.iter().find(|c| c.name == name).unwrap().verdict
    }

    #[test]
    fn resolution_examples() {
        assert_relative_eq!(range_resolution(Bandwidth::new(2e9).unwrap()).value(), 0.074_948, max_relative = 1e-4);
        assert_relative_eq!(range_resolution(Bandwidth::new(1.5e9).unwrap()).value(), 0.099_931, max_relative = 1e-4);
        for (n, want) in [(100, 1.015), (35, 2.9), (10, 10.15)] {
            let a = angular_resolution_deg(&ArrayConfig::planar(n)).unwrap().degrees();
            assert_relative_eq!(a, want, max_relative = 1e-12);
        }
        assert!(angular_resolution_deg(&ArrayConfig::planar(1)).is_none());
    }

    #[test]
    fn velocity_examples() {
        let lambda = wavelength(Frequency::new(140e9).unwrap());
        let t_needed = lambda.value() / (2.0 * 0.04);
        assert_relative_eq!(t_needed, 26.767e-3, max_relative = 1e-4);
        assert!(t_needed < 1.0 / 25.0);
        let v1 = velocity_resolution(lambda, Duration::new(0.01).unwrap());
        let v2 = velocity_resolution(lambda, Duration::new(0.02).unwrap());
        assert_relative_eq!(v2, v1 / 2.0);
        let half_carrier = wavelength(Frequency::new(70e9).unwrap());
        assert_relative_eq!(velocity_resolution(half_carrier, Duration::new(0.01).unwrap()), 2.0 * v1);
    }

    #[test]
    fn s1_passes_with_35_elements() {
        let c = sensing_feasibility(&s1(), &scenario(2e9, 35));
        assert_eq!(verdict(&c, "range_resolution"), Verdict::Pass);
        assert_eq!(verdict(&c, "angular_resolution"), Verdict::Pass);
        assert_eq!(verdict(&c, "velocity_resolution"), Verdict::Pass);
        assert_eq!(verdict(&c, "detection_snr"), Verdict::Pass);
    }

    #[test]
    fn small_rx_array_fails_fine_angular_kpi() {
        let kpis = SensingKpis { ang_res_deg: 1.0, max_range_m: 10.0, mode: SensingMode::Bistatic, ..s1() };
        let c = sensing_feasibility(&kpis, &scenario(4e9, 10));
        assert_eq!(verdict(&c, "angular_resolution"), Verdict::Fail);
        let a = c.iter().find(|c| c.name == "angular_resolution").unwrap();
        assert_relative_eq!(a.achieved.unwrap(), 10.15, max_relative = 1e-12);
    }

    #[test]
    fn zero_bandwidth_fails_range() {
        let c = sensing_feasibility(&s1(), &scenario(0.0, 35));
        assert_eq!(verdict(&c, "range_resolution"), Verdict::Fail);
        assert_eq!(verdict(&c, "detection_snr"), Verdict::Fail);
    }

    #[test]
    fn velocity_tension_is_a_warning_when_rate_is_a_ceiling() {
        let kpis = SensingKpis { velocity_mps: 0.1, update_rate_hz: 1000.0, update_rate_is_ceiling: true, ..s1() };
        let c = sensing_feasibility(&kpis, &scenario(2e9, 35));
        let v = c.iter().find(|c| c.name == "velocity_resolution").unwrap();
        assert_eq!(v.verdict, Verdict::Warn);
        assert!(v.note.as_ref().unwrap().contains("10.71 ms"));
        let strict = SensingKpis { update_rate_is_ceiling: false, ..kpis };
        assert_eq!(verdict(&sensing_feasibility(&strict, &scenario(2e9, 35)), "velocity_resolution"), Verdict::Fail);
    }

    fn rank(v: Verdict) -> u8 {
        match v {
            Verdict::Pass => 2,
            Verdict::Warn => 1,
            Verdict::Fail => 0,
        }
    }

    proptest! {
        #[test]
        fn range_verdict_is_homogeneous(b in 1e8f64..1e10, res in 0.005f64..1.0, k in 1.0f64..8.0) {
            let kpis = SensingKpis { range_res_m: res, ..s1() };
            let base = verdict(&sensing_feasibility(&kpis, &scenario(b, 35)), "range_resolution");
            let scaled = SensingKpis { range_res_m: res / k, ..s1() };
            let after = verdict(&sensing_feasibility(&scaled, &scenario(b * k, 35)), "range_resolution");
            prop_assert_eq!(base, after);
        }

        #[test]
        fn more_resources_never_hurt(
            b in 1e8f64..8e9, n in 2u32..120, p in -20.0f64..20.0, rate in 5.0f64..2000.0,
            kb in 1.0f64..4.0, dn in 0u32..50, dp in 0.0f64..20.0, kr in 1.0f64..10.0,
        ) {
            let kpis = SensingKpis { update_rate_hz: rate, ..s1() };
            let mut s = scenario(b, n);
            s.ptx_per_element = PowerDbm::new(p).unwrap();
            let before = sensing_feasibility(&kpis, &s);
            let mut more = scenario(b * kb, n + dn);
            more.ptx_per_element = PowerDbm::new(p + dp).unwrap();
            let slower = SensingKpis { update_rate_hz: rate / kr, ..kpis };
            let after = sensing_feasibility(&slower, &more);
            for (x, y) in before.iter().zip(&after) {
                prop_assert!(rank(y.verdict) >= rank(x.verdict), "{} regressed", x.name);
            }
        }
    }
}
