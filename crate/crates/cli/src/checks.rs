//! Acceptance tolerances, pinned in one place, plus the independent
//! numerical-convolution reference for the detector-washout check.

/// Thermal bunching peak target and tolerance: fitted g²(0) = 2.00 ± 0.05.
pub const HBT_PEAK: f64 = 2.0;
pub const HBT_PEAK_TOL: f64 = 0.05;
/// Flat baseline away from the peak: 1.00 ± 0.02.
pub const HBT_BASELINE_TOL: f64 = 0.02;
/// Speckle scenario runtime target (seconds).
pub const SPECKLE_RUNTIME_LIMIT_S: f64 = 60.0;
/// Siegert agreement window in combined standard errors.
pub const SIEGERT_SIGMA: f64 = 3.0;
/// Coherent/Poisson flatness: every bin within 1.00 ± 0.02.
pub const BEC_FLAT_TOL: f64 = 0.02;
/// Fermionic antibunching: fitted g²(0) at most this.
pub const FERMION_G2_ZERO_MAX: f64 = 0.05;
/// Cloud width recovery tolerance (relative).
pub const CLOUD_WIDTH_REL_TOL: f64 = 0.10;
/// Isotope correlation-length ratio 4/3 within 5% (relative).
pub const ISOTOPE_RATIO: f64 = 4.0 / 3.0;
pub const ISOTOPE_RATIO_REL_TOL: f64 = 0.05;
/// Detector washout: measured g²(0) within 1% of the convolution reference.
pub const PSF_ORACLE_REL_TOL: f64 = 0.01;
/// Classical baseline: suppression ratio 0.500 ± 0.01, joint 0.125 ± 0.003.
pub const CLASSICAL_RATIO: f64 = 0.5;
pub const CLASSICAL_RATIO_TOL: f64 = 0.01;
pub const CLASSICAL_JOINT: f64 = 0.125;
pub const CLASSICAL_JOINT_TOL: f64 = 0.003;
/// Twin-source mean-occupation recovery (relative).
pub const CONTAMINATION_REL_TOL: f64 = 0.10;
/// Analytic CHSH at the optimal settings: |S − 2√2| below this.
pub const CHSH_ANALYTIC_TOL: f64 = 1e-10;

/// Unnormalized Gaussian mass of the pair-displacement kernel over [a, b]
/// (a common normalization cancels in the mass ratios below).
fn kernel_mass(a: f64, b: f64, sd: f64) -> f64 {
    let lo = a.max(-8.0 * sd);
    let hi = b.min(8.0 * sd);
    if hi <= lo {
        return 0.0;
    }
    let n = 96usize;
    let step = (hi - lo) / n as f64;
    (0..n)
        .map(|i| {
            let u = lo + (i as f64 + 0.5) * step;
            (-u * u / (2.0 * sd * sd)).exp()
        })
        .sum::<f64>()
        * step
}

/// Per-axis masses of the blurred pair measure: the pre-blur separation d
/// carries the window pair density (W − |d|), each event's displacement
/// adds a pair kernel N(0, 2σ²), and the observed |d + u| must land in
/// [obs_lo, obs_hi). Returns (acceptance mass, mass weighted by
/// exp(−d²/l²)).
fn blurred_axis_masses(
    window: f64,
    length: f64,
    sigma: f64,
    obs_lo: f64,
    obs_hi: f64,
) -> (f64, f64) {
    let pair_sd = (2.0f64).sqrt() * sigma;
    let reach = 8.0 * pair_sd;
    // pre-blur separations outside this range cannot land in the window
    let half = window.min(obs_hi + reach);
    let n_d = 2000usize;
    let d_step = 2.0 * half / n_d as f64;
    let mut a0 = 0.0;
    let mut a1 = 0.0;
    for i in 0..n_d {
        let d = -half + (i as f64 + 0.5) * d_step;
        let weight = window - d.abs();
        if weight <= 0.0 {
            continue;
        }
        let g = (-d * d / (length * length)).exp();
        let mass = if sigma == 0.0 {
            if d.abs() >= obs_lo && d.abs() < obs_hi {
                1.0
            } else {
                0.0
            }
        } else {
            // accepted displacement intervals for |d + u| ∈ [obs_lo, obs_hi)
            kernel_mass(obs_lo - d, obs_hi - d, pair_sd)
                + kernel_mass(-obs_hi - d, -obs_lo - d, pair_sd)
        };
        if mass > 0.0 {
            a0 += weight * mass;
            a1 += weight * mass * g;
        }
    }
    (a0, a1)
}

/// Brute-force reference for the detector-washout measurement: the ideal
/// pair correlation 1 + exp(−Δx²/lx²)·exp(−Δy²/ly²) integrated against the
/// exact acceptance measure of the estimator — window pair densities,
/// per-axis PSF pair kernels, the Δx bin `[dx_lo, dx_hi)` and the
/// |Δy| ≤ `dy_gate` window. Independent of the sampling pipeline.
pub fn psf_washout_reference(
    lengths: [f64; 2],
    sigmas: [f64; 2],
    windows: [f64; 2],
    dx_lo: f64,
    dx_hi: f64,
    dy_gate: f64,
) -> f64 {
    let (ax0, ax1) = blurred_axis_masses(windows[0], lengths[0], sigmas[0], dx_lo, dx_hi);
    // boundary inclusion is measure-zero here, so [0, gate) stands in for
    // the closed gate window
    let (ay0, ay1) = blurred_axis_masses(windows[1], lengths[1], sigmas[1], 0.0, dy_gate);
    1.0 + (ax1 / ax0) * (ay1 / ay0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unblurred_reference_matches_direct_average() {
        // σ = 0 reduces to the windowed bin average of the ideal g²
        let g = psf_washout_reference([0.5, 2.0], [0.0, 0.0], [100.0, 100.0], 0.0, 0.1, 0.2);
        // with windows ≫ everything, weights are flat: direct quadrature
        let avg = |lo: f64, hi: f64, l: f64| -> f64 {
            let n = 4000;
            (0..n)
                .map(|i| {
                    let d = lo + (hi - lo) * (i as f64 + 0.5) / n as f64;
                    (-d * d / (l * l)).exp()
                })
                .sum::<f64>()
                / n as f64
        };
        let expect = 1.0 + avg(0.0, 0.1, 0.5) * avg(-0.2, 0.2, 2.0) / 1.0;
        assert!((g - expect).abs() < 2e-3, "{g} vs {expect}");
    }

    #[test]
    fn wide_window_blur_matches_closed_form() {
        // windows ≫ blur reach: the classic convolution result
        // amplitude l/√(l²+4σ²) per axis at zero separation
        let g = psf_washout_reference([0.2, 3.0], [0.4, 0.0], [1000.0, 1000.0], 0.0, 0.01, 0.01);
        let expect = 1.0 + (0.2 / (0.04f64 + 0.64).sqrt()) * 1.0;
        assert!((g - expect).abs() < 5e-3, "{g} vs {expect}");
    }

    #[test]
    fn washout_reference_sits_between_one_and_two() {
        let g = psf_washout_reference([0.15, 3.0], [0.5, 0.5], [3.2, 12.0], 0.0, 0.2, 0.8);
        assert!(g > 1.0 && g < 2.0, "reference = {g}");
    }
}
