//! CSV and PGM writers. Rows keep the order they were computed in so output is
//! bit-stable; `inf` marks values with no finite answer.

use std::fmt::Write;

use crate::deployment::Heatmap;
use crate::linkbudget::BandwidthRow;
use crate::locbounds::CurveRow;

use super::api::SweepResponse;

fn csv<I: IntoIterator<Item = String>>(header: &str, rows: I) -> String {
    let mut out = String::from(header);
    out.push('\n');
    for r in rows {
        out.push_str(&r);
        out.push('\n');
    }
    out
}

pub const BANDWIDTH_CURVE_HEADER: &str = "curve,ptx_dbm,required_bandwidth_hz,feasible";
pub const ERROR_CURVE_HEADER: &str = "d_m,range_err_m,angle_err_deg,peb_m,rate_bps";
pub const HEATMAP_HEADER: &str = "x_m,y_m,value";

pub fn bandwidth_curve_csv(rows: &[BandwidthRow]) -> String {
    csv(
        BANDWIDTH_CURVE_HEADER,
        rows.iter().map(|r| format!("{},{},{},{}", r.curve, r.ptx_dbm, r.required_bandwidth_hz, r.feasible)),
    )
}

pub fn error_curve_csv(rows: &[CurveRow]) -> String {
    csv(
        ERROR_CURVE_HEADER,
        rows.iter().map(|r| format!("{},{},{},{},{}", r.d_m, r.range_err_m, r.angle_err_deg, r.peb_m, r.rate_bps)),
    )
}

pub fn sweep_csv(s: &SweepResponse) -> String {
    csv(
        &format!("param,value,{},feasible", s.column),
        s.rows.iter().map(|r| format!("{},{},{},{}", r.param, r.value, r.required, r.feasible)),
    )
}

/// One row per cell, y outer, matching [`Heatmap::values`].
pub fn heatmap_csv(h: &Heatmap) -> String {
    csv(
        HEATMAP_HEADER,
        h.values.iter().enumerate().map(|(i, v)| {
            let c = h.region.cell_center(i % h.nx, i / h.nx);
            format!("{},{},{}", c[0], c[1], v)
        }),
    )
}

/// Plain PGM (P2), north up. Finite values map linearly onto 1..=255; infinite
/// or undefined cells are 0.
pub fn heatmap_pgm(h: &Heatmap) -> String {
    let finite = h.values.iter().copied().filter(|v| v.is_finite());
    let (lo, hi) = finite.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    let level = |v: f64| -> u8 {
        if !v.is_finite() {
            0
        } else if hi > lo {
            (1.0 + 254.0 * (v - lo) / (hi - lo)).round() as u8
        } else {
            255
        }
    };
    let mut out = String::new();
    let _ = writeln!(out, "P2\n{} {}\n255", h.nx, h.ny);
    for iy in (0..h.ny).rev() {
        let row: Vec<String> = (0..h.nx).map(|ix| level(h.values[iy * h.nx + ix]).to_string()).collect();
        let _ = writeln!(out, "{}", row.join(" "));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::deployment::{HeatmapMetric, Region};

    fn map() -> Heatmap {
        Heatmap {
            metric: HeatmapMetric::Peb,
            region: Region { min_m: [0.0, 0.0], max_m: [2.0, 1.0], height_m: 1.5, resolution_m: 1.0 },
            nx: 2,
            ny: 1,
            values: vec![0.5, f64::INFINITY],
        }
    }

    #[test]
    fn heatmap_csv_layout() {
        assert_eq!(heatmap_csv(&map()), "x_m,y_m,value\n0.5,0.5,0.5\n1.5,0.5,inf\n");
    }

    #[test]
    fn pgm_marks_infinite_cells_black() {
        assert_eq!(heatmap_pgm(&map()), "P2\n2 1\n255\n255 0\n");
        let mut h = map();
        h.ny = 2;
        h.values = vec![0.0, 1.0, 2.0, 3.0];
        // Top row is the largest y.
        assert_eq!(heatmap_pgm(&h), "P2\n2 2\n255\n170 255\n1 86\n");
    }
}
