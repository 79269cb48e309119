//! Rate from SNR, its inversions (power for a rate, bandwidth for a rate), and
//! the OFDM slot latency model.

use serde::{Deserialize, Serialize};

use crate::channel::{ArrayConfig, ChannelError, GainModel, LinkParams, NoiseModel, PathlossModel};
use crate::quantities::{Bandwidth, Decibel, Distance, Duration, Frequency, PowerDbm};

/// Bandwidth search interval for [`required_bandwidth`].
pub const MIN_SEARCH_BANDWIDTH_HZ: f64 = 1e6;
pub const MAX_SEARCH_BANDWIDTH_HZ: f64 = 100e9;

/// Fraction of an end-to-end latency budget granted to the physical layer; the
/// rest is left to processing and the core network.
pub const PHY_LATENCY_SHARE: f64 = 0.3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateModel {
    /// Per-stream spectral efficiency ceiling (bps/Hz). `f64::INFINITY` disables it.
    pub se_cap_bps_per_hz: f64,
    pub streams: u32,
}

impl Default for RateModel {
    fn default() -> Self {
        Self {
            se_cap_bps_per_hz: 6.0,
            streams: 1,
        }
    }
}

impl RateModel {
    pub fn uncapped(streams: u32) -> Self {
        Self {
            se_cap_bps_per_hz: f64::INFINITY,
            streams,
        }
    }

    pub fn with_streams(streams: u32) -> Self {
        Self {
            streams,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        if !(self.se_cap_bps_per_hz > 0.0) {
            return Err(format!("se cap must be > 0, got {}", self.se_cap_bps_per_hz));
        }
        if self.streams < 1 {
            return Err("streams must be >= 1".into());
        }
        Ok(())
    }

    /// Highest rate reachable at bandwidth `b` with unlimited SNR.
    pub fn ceiling_bps(&self, b: Bandwidth) -> f64 {
        self.streams as f64 * b.value() * self.se_cap_bps_per_hz
    }
}

/// streams · B · min(log2(1 + snr), cap).
pub fn achievable_rate_bps(snr_db: Decibel, b: Bandwidth, m: &RateModel) -> f64 {
    let se = (1.0 + snr_db.to_linear()).log2().min(m.se_cap_bps_per_hz);
    m.streams as f64 * b.value() * se
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "reason", rename_all = "snake_case")]
pub enum Infeasibility {
    /// The target needs more spectral efficiency per stream than the cap allows.
    SpectralEfficiencyCap { needed_bps_per_hz: f64, cap_bps_per_hz: f64 },
    /// No bandwidth inside the search interval reaches the target.
    NoBandwidthInRange { min_hz: f64, max_hz: f64 },
}

impl std::fmt::Display for Infeasibility {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Infeasibility::SpectralEfficiencyCap {
                needed_bps_per_hz,
                cap_bps_per_hz,
            } => write!(
                f,
                "needs {needed_bps_per_hz:.3} bps/Hz per stream, cap is {cap_bps_per_hz}"
            ),
            Infeasibility::NoBandwidthInRange { min_hz, max_hz } => {
                write!(f, "no bandwidth in [{min_hz:e}, {max_hz:e}] Hz meets the target")
            }
        }
    }
}

/// Outcome of an inversion: a value, or a reason why no value exists.
#[derive(Debug, Clone, PartialEq)]
pub enum Requirement<T> {
    Feasible(T),
    Infeasible(Infeasibility),
}

impl<T: Copy> Requirement<T> {
    pub fn feasible(&self) -> Option<T> {
        match self {
            Requirement::Feasible(v) => Some(*v),
            Requirement::Infeasible(_) => None,
        }
    }
}

/// SNR (dB) needed for `rate_bps` at bandwidth `b`, or why it cannot be reached.
pub fn required_snr_db(rate_bps: f64, b: Bandwidth, m: &RateModel) -> Requirement<Decibel> {
    let se = rate_bps / (m.streams as f64 * b.value());
    if se > m.se_cap_bps_per_hz {
        return Requirement::Infeasible(Infeasibility::SpectralEfficiencyCap {
            needed_bps_per_hz: se,
            cap_bps_per_hz: m.se_cap_bps_per_hz,
        });
    }
    // exp_m1 keeps precision when the needed SNR is tiny.
    let snr = (se * std::f64::consts::LN_2).exp_m1();
    Requirement::Feasible(Decibel(10.0 * snr.log10()))
}

/// Minimum per-element transmit power reaching `rate_bps` over the link.
pub fn required_power_per_element(
    rate_bps: f64,
    b: Bandwidth,
    m: &RateModel,
    link: &LinkParams,
) -> Result<Requirement<PowerDbm>, ChannelError> {
    let per_mw = link.snr_at_0dbm(b)?;
    Ok(match required_snr_db(rate_bps, b, m) {
        Requirement::Feasible(snr) => {
            Requirement::Feasible(PowerDbm::new(snr.value() - per_mw.value()).map_err(ChannelError::from)?)
        }
        Requirement::Infeasible(why) => Requirement::Infeasible(why),
    })
}

fn rate_at(ptx: PowerDbm, b: f64, m: &RateModel, link: &LinkParams) -> Result<f64, ChannelError> {
    let b = Bandwidth::new(b)?;
    let snr = Decibel(ptx.value() + link.snr_at_0dbm(b)?.value());
    Ok(achievable_rate_bps(snr, b, m))
}

/// Smallest bandwidth in [1 MHz, 100 GHz] at which `ptx_per_element` reaches
/// `rate_bps`.
///
/// A coarse logarithmic scan locates the first feasible grid point, then
/// geometric bisection refines the bracket below it.
pub fn required_bandwidth(
    rate_bps: f64,
    ptx_per_element: PowerDbm,
    m: &RateModel,
    link: &LinkParams,
) -> Result<Requirement<Bandwidth>, ChannelError> {
    const STEPS_PER_DECADE: usize = 20;
    let decades = (MAX_SEARCH_BANDWIDTH_HZ / MIN_SEARCH_BANDWIDTH_HZ).log10();
    let steps = (decades * STEPS_PER_DECADE as f64).round() as usize;
    let grid = |i: usize| MIN_SEARCH_BANDWIDTH_HZ * 10f64.powf(i as f64 / STEPS_PER_DECADE as f64);

    let mut first = None;
    for i in 0..=steps {
        if rate_at(ptx_per_element, grid(i), m, link)? >= rate_bps {
            first = Some(i);
            break;
        }
    }
    let Some(i) = first else {
        return Ok(Requirement::Infeasible(Infeasibility::NoBandwidthInRange {
            min_hz: MIN_SEARCH_BANDWIDTH_HZ,
            max_hz: MAX_SEARCH_BANDWIDTH_HZ,
        }));
    };
    if i == 0 {
        return Ok(Requirement::Feasible(Bandwidth::new(MIN_SEARCH_BANDWIDTH_HZ)?));
    }
    let (mut lo, mut hi) = (grid(i - 1), grid(i));
    while hi / lo - 1.0 > 1e-12 {
        let mid = (lo * hi).sqrt();
        if rate_at(ptx_per_element, mid, m, link)? >= rate_bps {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(Requirement::Feasible(Bandwidth::new(hi)?))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Numerology {
    pub subcarriers: u32,
    pub cp_overhead: f64,
    pub symbols_per_slot: u32,
}

impl Default for Numerology {
    fn default() -> Self {
        Self {
            subcarriers: 4096,
            cp_overhead: 0.07,
            symbols_per_slot: 14,
        }
    }
}

impl Numerology {
    pub fn validate(&self) -> Result<(), String> {
        if self.subcarriers < 1 {
            return Err("subcarriers must be >= 1".into());
        }
        if !(0.0..1.0).contains(&self.cp_overhead) {
            return Err(format!("cp overhead must be in [0, 1), got {}", self.cp_overhead));
        }
        if self.symbols_per_slot < 1 {
            return Err("symbols per slot must be >= 1".into());
        }
        Ok(())
    }

    /// OFDM symbol duration including the cyclic prefix.
    pub fn symbol_duration(&self, b: Bandwidth) -> Duration {
        Duration::new(self.subcarriers as f64 / b.value() * (1.0 + self.cp_overhead))
            .expect("positive for positive bandwidth")
    }

    pub fn slot_duration(&self, b: Bandwidth) -> Duration {
        Duration::new(self.symbols_per_slot as f64 * self.symbol_duration(b).value())
            .expect("positive for positive bandwidth")
    }

    /// Whole symbols that fit in `available`.
    pub fn symbols_in(&self, available: Duration, b: Bandwidth) -> u64 {
        (available.value() / self.symbol_duration(b).value()).floor() as u64
    }
}

/// Bidirectional physical-layer latency: one slot each way.
pub fn phy_latency(b: Bandwidth, n: &Numerology) -> Duration {
    Duration::new(2.0 * n.slot_duration(b).value()).expect("positive for positive bandwidth")
}

/// Lumped array-gain offset that brings the 256/64-element downlink budget in
/// line with the published bandwidth-vs-power anchors.
pub const REFERENCE_CALIBRATION_DB: f64 = 7.0;

/// One required-bandwidth-vs-power curve: a rate target over a fixed link.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BandwidthCurve {
    pub label: &'static str,
    pub rate_bps: f64,
    pub link: LinkParams,
    pub rate: RateModel,
}

impl BandwidthCurve {
    /// 140 GHz downlink, 256 BS and 64 UE elements on a line, UE noise figure
    /// 10 dB, 20 dB implementation loss, single uncapped stream.
    pub fn reference(label: &'static str, rate_bps: f64, distance_m: f64) -> Self {
        let carrier = Frequency::new(140e9).expect("positive");
        Self {
            label,
            rate_bps,
            link: LinkParams {
                tx: ArrayConfig::linear(256),
                rx: ArrayConfig::linear(64),
                pathloss: PathlossModel { reference_distance_m: 1.0, exponent: 2.0, carrier },
                distance: Distance::new(distance_m).expect("positive"),
                noise: NoiseModel { noise_figure_db: 10.0 },
                impl_loss: Decibel(20.0),
                gains: GainModel { calibration_db: REFERENCE_CALIBRATION_DB },
            },
            rate: RateModel::uncapped(1),
        }
    }

    /// 10 Gbps at 100 m and 100 Gbps at 10 m.
    pub fn reference_pair() -> [Self; 2] {
        [Self::reference("10gbps_100m", 10e9, 100.0), Self::reference("100gbps_10m", 100e9, 10.0)]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BandwidthRow {
    pub curve: String,
    pub ptx_dbm: f64,
    /// Infinite when no bandwidth in the search range reaches the target.
    pub required_bandwidth_hz: f64,
    pub feasible: bool,
}

/// Required bandwidth for each curve at each per-element power; curve-major order.
pub fn bandwidth_vs_power(curves: &[BandwidthCurve], ptx_dbm: &[f64]) -> Result<Vec<BandwidthRow>, ChannelError> {
    let mut rows = Vec::with_capacity(curves.len() * ptx_dbm.len());
    for c in curves {
        for &p in ptx_dbm {
            let b = required_bandwidth(c.rate_bps, PowerDbm::new(p)?, &c.rate, &c.link)?.feasible();
            rows.push(BandwidthRow {
                curve: c.label.to_string(),
                ptx_dbm: p,
                required_bandwidth_hz: b.map_or(f64::INFINITY, |b| b.value()),
                feasible: b.is_some(),
            });
        }
    }
    Ok(rows)
}
