//! Weighted least-squares fit of a Gaussian bump or dip on a fixed baseline,
//! `y(s) = baseline + A·exp(−s²/w²)`. Used to read peak heights and
//! correlation widths off binned curves. The width is scanned on a log grid
//! and refined; the amplitude is solved analytically at each width.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub struct PeakFit {
    /// Fitted amplitude A (negative for a dip).
    pub amplitude: f64,
    /// 1σ statistical error on the amplitude at the fitted width.
    pub amplitude_stderr: f64,
    /// Fitted 1/e half-width w.
    pub width: f64,
    pub chi2: f64,
}

impl PeakFit {
    /// Value of the fitted model at zero separation.
    pub fn peak_value(&self, baseline: f64) -> f64 {
        baseline + self.amplitude
    }
}

/// Fit `baseline + A exp(−s²/w²)` to `(centers, values ± stderr)`.
/// Bins with non-finite values or errors are ignored.
pub fn fit_gaussian_peak(
    centers: &[f64],
    values: &[f64],
    stderr: &[f64],
    baseline: f64,
) -> Result<PeakFit> {
    if centers.len() != values.len() || centers.len() != stderr.len() {
        return Err(Error::validation("fit inputs must have equal lengths"));
    }
    let pts: Vec<(f64, f64, f64)> = centers
        .iter()
        .zip(values)
        .zip(stderr)
        .filter(|((c, v), e)| c.is_finite() && v.is_finite() && e.is_finite() && **e > 0.0)
        .map(|((c, v), e)| (*c, *v - baseline, 1.0 / (*e * *e)))
        .collect();
    if pts.len() < 3 {
        return Err(Error::validation(
            "need at least three finite bins to fit a peak",
        ));
    }

    let max_s = pts.iter().map(|p| p.0.abs()).fold(0.0f64, f64::max);
    let min_s = pts
        .iter()
        .map(|p| p.0.abs())
        .filter(|s| *s > 0.0)
        .fold(f64::INFINITY, f64::min);
    let lo = if min_s.is_finite() { min_s / 2.0 } else { max_s / 100.0 };
    let hi = 2.0 * max_s;
    if !(lo > 0.0) || !(hi > lo) {
        return Err(Error::validation("degenerate separation range for fit"));
    }

    let eval = |w: f64| -> (f64, f64, f64) {
        // analytic weighted LSQ amplitude at fixed width
        let mut num = 0.0;
        let mut den = 0.0;
        for &(s, y, wt) in &pts {
            let u = (-s * s / (w * w)).exp();
            num += wt * u * y;
            den += wt * u * u;
        }
        let a = if den > 0.0 { num / den } else { 0.0 };
        let chi2: f64 = pts
            .iter()
            .map(|&(s, y, wt)| {
                let r = y - a * (-s * s / (w * w)).exp();
                wt * r * r
            })
            .sum();
        (chi2, a, den)
    };

    // Log-grid scan.
    const STEPS: usize = 256;
    let ratio = (hi / lo).ln() / (STEPS - 1) as f64;
    let mut best = (f64::INFINITY, lo, 0.0, 0.0);
    for i in 0..STEPS {
        let w = lo * (ratio * i as f64).exp();
        let (chi2, a, den) = eval(w);
        if chi2 < best.0 {
            best = (chi2, w, a, den);
        }
    }

    // Golden-section refinement around the best grid point.
    let mut a_lo = best.1 / (ratio.exp());
    let mut a_hi = best.1 * ratio.exp();
    const GOLD: f64 = 0.618_033_988_749_895;
    for _ in 0..60 {
        let m1 = a_hi - GOLD * (a_hi - a_lo);
        let m2 = a_lo + GOLD * (a_hi - a_lo);
        if eval(m1).0 < eval(m2).0 {
            a_hi = m2;
        } else {
            a_lo = m1;
        }
    }
    let w = 0.5 * (a_lo + a_hi);
    let (chi2, amplitude, den) = eval(w);

    Ok(PeakFit {
        amplitude,
        amplitude_stderr: if den > 0.0 { den.sqrt().recip() } else { f64::NAN },
        width: w,
        chi2,
    })
}
