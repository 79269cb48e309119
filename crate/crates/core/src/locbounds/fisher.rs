//! Numerical Fisher information for joint delay/angle estimation from a
//! flat-spectrum OFDM pilot received on a uniform linear array.
//!
//! The model is the exact spherical wavefront: element `n` sits at
//! `x_n` on the array axis, the user at `(d sinθ, d cosθ)`, and subcarrier `k`
//! at `fc + f_k` sees phase `−2π(fc + f_k) r_n / c`. The unknown complex channel
//! gain (amplitude and phase) is carried as a nuisance parameter and removed by a
//! Schur complement, so no closed-form CRLB expression is used anywhere here.

use nalgebra::{Matrix2, Matrix4};

use crate::quantities::SPEED_OF_LIGHT;

/// Inputs of one oracle evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleScenario {
    /// Pilot transmissions integrated (T).
    pub pilots: f64,
    pub bandwidth_hz: f64,
    /// Linear SNR of one transmission on one antenna, summed over the band.
    pub snr: f64,
    pub rx_elements: u32,
    pub subcarriers: u32,
    pub carrier_hz: f64,
    pub distance_m: f64,
    /// Angle from array broadside, rad.
    pub angle_rad: f64,
    /// Element spacing in carrier wavelengths.
    pub spacing: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleResult {
    /// Equivalent FIM over (distance m, angle rad) after removing the nuisance gain.
    pub fim: Matrix2<f64>,
    pub rank: usize,
    /// Inverse FIM when it exists.
    pub crb: Option<Matrix2<f64>>,
}

impl OracleResult {
    /// Position error bound squared: var(d) + d²·var(θ).
    pub fn position_bound_m2(&self, distance_m: f64) -> Option<f64> {
        self.crb.map(|c| c[(0, 0)] + distance_m * distance_m * c[(1, 1)])
    }
}

fn numerical_rank2(m: &Matrix2<f64>) -> usize {
    let eig = m.symmetric_eigen().eigenvalues;
    let max = eig.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
    if max == 0.0 {
        return 0;
    }
    eig.iter().filter(|&&e| e.abs() > max * 1e-10).count()
}

pub fn fisher_oracle(s: &OracleScenario) -> OracleResult {
    let n = s.rx_elements.max(1) as usize;
    let k = s.subcarriers.max(1) as usize;
    let lambda_c = SPEED_OF_LIGHT / s.carrier_hz;
    let (sin_t, cos_t) = s.angle_rad.sin_cos();
    let (px, py) = (s.distance_m * sin_t, s.distance_m * cos_t);

    // Sums of per-sample phase sensitivities: g_x = 2π f / c · ∂r/∂x.
    let (mut gdd, mut gdt, mut gtt, mut gd, mut gt) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for e in 0..n {
        let x = (e as f64 - (n as f64 - 1.0) / 2.0) * s.spacing * lambda_c;
        let (dx, dy) = (px - x, py);
        let r = (dx * dx + dy * dy).sqrt();
        let dr_dd = (dx * sin_t + dy * cos_t) / r;
        let dr_dt = (dx * s.distance_m * cos_t - dy * s.distance_m * sin_t) / r;
        for sc in 0..k {
            let f = s.carrier_hz + (sc as f64 - (k as f64 - 1.0) / 2.0) * s.bandwidth_hz / k as f64;
            let w = 2.0 * std::f64::consts::PI * f / SPEED_OF_LIGHT;
            let (a, b) = (w * dr_dd, w * dr_dt);
            gdd += a * a;
            gdt += a * b;
            gtt += b * b;
            gd += a;
            gt += b;
        }
    }
    let samples = (n * k) as f64;
    // Per-sample SNR is snr / k; complex-Gaussian FIM is 2/σ² Σ Re{∂sᴴ ∂s}.
    let scale = 2.0 * s.pilots * s.snr / k as f64;
    #[rustfmt::skip]
    let full = Matrix4::new(
        gdd, gdt, 0.0,     -gd,
        gdt, gtt, 0.0,     -gt,
        0.0, 0.0, samples, 0.0,
        -gd, -gt, 0.0,     samples,
    ) * scale;

    let a = full.fixed_view::<2, 2>(0, 0).into_owned();
    let b = full.fixed_view::<2, 2>(0, 2).into_owned();
    let c = full.fixed_view::<2, 2>(2, 2).into_owned();
    let c_inv = c.try_inverse().expect("nuisance block is diagonal and positive");
    let efim = a - b * c_inv * b.transpose();
    let efim = (efim + efim.transpose()) * 0.5;
    let rank = numerical_rank2(&efim);
    let crb = if rank == 2 { efim.try_inverse() } else { None };
    OracleResult { fim: efim, rank, crb }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scenario() -> OracleScenario {
        OracleScenario {
            pilots: 120.0,
            bandwidth_hz: 2e9,
            snr: 3.0,
            rx_elements: 16,
            subcarriers: 256,
            carrier_hz: 140e9,
            distance_m: 20.0,
            angle_rad: 0.2,
            spacing: 0.5,
        }
    }

    #[test]
    fn fim_is_symmetric_psd() {
        for angle in [-0.9, 0.0, 0.4] {
            let r = fisher_oracle(&OracleScenario { angle_rad: angle, ..scenario() });
            assert_eq!(r.fim[(0, 1)], r.fim[(1, 0)]);
            let eig = r.fim.symmetric_eigen().eigenvalues;
            assert!(eig.iter().all(|&e| e >= -1e-9 * eig.max().abs()));
            assert_eq!(r.rank, 2);
        }
    }

    #[test]
    fn fim_linear_in_snr() {
        let a = fisher_oracle(&scenario());
        let b = fisher_oracle(&OracleScenario { snr: 7.5, ..scenario() });
        for i in 0..2 {
            for j in 0..2 {
                let want = a.fim[(i, j)] * 2.5;
                assert!((b.fim[(i, j)] - want).abs() <= 1e-9 * want.abs().max(1e-30));
            }
        }
    }

    #[test]
    fn single_element_has_no_angle_information() {
        let r = fisher_oracle(&OracleScenario { rx_elements: 1, ..scenario() });
        assert_eq!(r.rank, 1);
        assert!(r.crb.is_none());
        assert!(r.position_bound_m2(20.0).is_none());
    }

    #[test]
    fn matches_textbook_bounds_at_broadside() {
        // Flat spectrum: var(d) = c²/(8π² β² SNR_tot), β² = B²(K²−1)/(12K²).
        // Half-wavelength ULA: var(θ) = 6/(π² SNR_ant T N(N²−1)).
        let s = OracleScenario { angle_rad: 0.0, distance_m: 200.0, ..scenario() };
        let r = fisher_oracle(&s);
        let crb = r.crb.unwrap();
        let k = s.subcarriers as f64;
        let n = s.rx_elements as f64;
        let pi = std::f64::consts::PI;
        let beta2 = s.bandwidth_hz.powi(2) * (k * k - 1.0) / (12.0 * k * k);
        let var_d = SPEED_OF_LIGHT.powi(2) / (8.0 * pi * pi * beta2 * s.snr * s.pilots * n);
        let var_t = 6.0 / (pi * pi * s.snr * s.pilots * n * (n * n - 1.0));
        assert!((crb[(0, 0)] / var_d - 1.0).abs() < 1e-3, "{} vs {}", crb[(0, 0)], var_d);
        assert!((crb[(1, 1)] / var_t - 1.0).abs() < 1e-3, "{} vs {}", crb[(1, 1)], var_t);
    }
}
