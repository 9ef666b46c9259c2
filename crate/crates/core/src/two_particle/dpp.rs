//! Determinantal point process sampler with a separable Gaussian kernel.
//!
//! The kernel K(r, r′) = ρ·Π_axes exp(−Δᵢ²/(2lᵢ²)) is discretized per axis
//! on a grid of pitch l/6, eigendecomposed (3D eigenpairs are tensor
//! products), and sampled by the standard spectral algorithm: Bernoulli
//! selection of eigenfunctions, then sequential point draws with
//! Gram–Schmidt conditioning. Pair correlations obey
//! g²(Δ) = 1 − exp(−Σ Δᵢ²/lᵢ²).

use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::rng::{domain, stream};
use crate::types::{DetectionEvent, RngSpec, Shot};

use super::linalg::symmetric_eigen;
use super::CloudSpec;

/// Eigenvalues may stick out of [0, 1] by at most this much before the
/// discretized kernel is rejected; smaller excursions are clipped.
pub const DPP_EIGENVALUE_TOL: f64 = 1e-9;
/// Grid pitch as a fraction of the correlation length.
const PITCH_FRACTION: f64 = 6.0;
/// Per-axis grid cap and total cell cap.
const MAX_AXIS_POINTS: usize = 320;
const MAX_CELLS: usize = 65_536;
/// 3D eigenvalues below this are dropped from the spectrum.
const EIGENVALUE_FLOOR: f64 = 1e-12;

struct AxisGrid {
    /// Cell centers; empty axis collapses to a single center at 0.
    centers: Vec<f64>,
    pitch: f64,
    eigenvalues: Vec<f64>,
    eigenvectors: Vec<Vec<f64>>,
}

fn build_axis(window: f64, length: f64) -> Result<AxisGrid> {
    if window == 0.0 {
        return Ok(AxisGrid {
            centers: vec![0.0],
            pitch: 0.0,
            eigenvalues: vec![1.0],
            eigenvectors: vec![vec![1.0]],
        });
    }
    let pitch = length / PITCH_FRACTION;
    let n = (window / pitch).ceil() as usize;
    if n > MAX_AXIS_POINTS {
        return Err(Error::validation(format!(
            "DPP grid needs {n} points on one axis (cap {MAX_AXIS_POINTS}); \
             shrink the window or increase the correlation length"
        )));
    }
    let pitch = window / n as f64;
    let centers: Vec<f64> = (0..n)
        .map(|i| -window / 2.0 + (i as f64 + 0.5) * pitch)
        .collect();
    let mut kernel = vec![0.0f64; n * n];
    for i in 0..n {
        for j in 0..n {
            let d = centers[i] - centers[j];
            kernel[i * n + j] = pitch * (-d * d / (2.0 * length * length)).exp();
        }
    }
    let (mut eigenvalues, eigenvectors) = symmetric_eigen(&kernel, n);
    let top = eigenvalues[0].max(1e-300);
    for ev in eigenvalues.iter_mut() {
        if *ev < -DPP_EIGENVALUE_TOL * top {
            return Err(Error::KernelSpectrum {
                worst: *ev,
                tolerance: DPP_EIGENVALUE_TOL,
            });
        }
        *ev = ev.max(0.0);
    }
    Ok(AxisGrid {
        centers,
        pitch,
        eigenvalues,
        eigenvectors,
    })
}

struct Spectrum {
    /// (λ, per-axis eigenvector indices), λ descending-ish, λ > floor.
    modes: Vec<(f64, [usize; 3])>,
}

fn enumerate_modes(axes: &[AxisGrid; 3], rho: f64) -> Result<Spectrum> {
    let lambda_max =
        rho * axes[0].eigenvalues[0] * axes[1].eigenvalues[0] * axes[2].eigenvalues[0];
    if lambda_max > 1.0 + DPP_EIGENVALUE_TOL {
        return Err(Error::KernelSpectrum {
            worst: lambda_max,
            tolerance: DPP_EIGENVALUE_TOL,
        });
    }
    let mut modes = Vec::new();
    for (ix, &bx) in axes[0].eigenvalues.iter().enumerate() {
        if rho * bx * axes[1].eigenvalues[0] * axes[2].eigenvalues[0] < EIGENVALUE_FLOOR {
            break;
        }
        for (iy, &by) in axes[1].eigenvalues.iter().enumerate() {
            if rho * bx * by * axes[2].eigenvalues[0] < EIGENVALUE_FLOOR {
                break;
            }
            for (it, &bt) in axes[2].eigenvalues.iter().enumerate() {
                let lambda = rho * bx * by * bt;
                if lambda < EIGENVALUE_FLOOR {
                    break;
                }
                modes.push((lambda.min(1.0), [ix, iy, it]));
            }
        }
    }
    Ok(Spectrum { modes })
}

/// Draw `n_shots` determinantal shots; see module docs for the algorithm.
pub fn sample_fermion_cloud(spec: &CloudSpec, n_shots: usize, rng: RngSpec) -> Result<Vec<Shot>> {
    spec.validate()?;
    if spec.statistics != super::Statistics::Fermion {
        return Err(Error::validation(
            "sample_fermion_cloud requires fermion statistics",
        ));
    }
    if spec.mean_atoms > 64.0 {
        return Err(Error::validation(format!(
            "mean atom number {} exceeds the DPP sampling cap of 64",
            spec.mean_atoms
        )));
    }
    let lengths = spec.effective_lengths();
    let axes = [
        build_axis(spec.window[0], lengths[0])?,
        build_axis(spec.window[1], lengths[1])?,
        build_axis(spec.window[2], lengths[2])?,
    ];
    let n_cells = axes[0].centers.len() * axes[1].centers.len() * axes[2].centers.len();
    if n_cells > MAX_CELLS {
        return Err(Error::validation(format!(
            "DPP grid has {n_cells} cells (cap {MAX_CELLS}); shrink the window"
        )));
    }
    // Operator trace per axis is the window extent; the overall trace must
    // equal the mean atom number, fixing the density ρ.
    let trace: f64 = axes
        .iter()
        .map(|a| a.eigenvalues.iter().sum::<f64>())
        .product();
    if !(trace > 0.0) {
        return Err(Error::validation("degenerate kernel trace"));
    }
    let rho = spec.mean_atoms / trace;
    let spectrum = enumerate_modes(&axes, rho)?;

    let (nx, ny) = (axes[0].centers.len(), axes[1].centers.len());
    let nt = axes[2].centers.len();

    let shots: Vec<Shot> = (0..n_shots as u64)
        .into_par_iter()
        .map(|shot_id| {
            let mut gen = stream(rng, domain::FERMION_CLOUD, shot_id);
            let selected: Vec<[usize; 3]> = spectrum
                .modes
                .iter()
                .filter_map(|(lambda, idx)| {
                    if gen.gen::<f64>() < *lambda {
                        Some(*idx)
                    } else {
                        None
                    }
                })
                .collect();
            let k = selected.len();
            if k == 0 {
                return Shot::new(shot_id, Vec::new());
            }

            // Feature matrix: per cell, the k selected eigenfunction values.
            let mut features = vec![0.0f64; n_cells * k];
            let mut residual = vec![0.0f64; n_cells];
            for (m, idx) in selected.iter().enumerate() {
                let vx = &axes[0].eigenvectors[idx[0]];
                let vy = &axes[1].eigenvectors[idx[1]];
                let vt = &axes[2].eigenvectors[idx[2]];
                for ix in 0..nx {
                    for iy in 0..ny {
                        let pxy = vx[ix] * vy[iy];
                        for it in 0..nt {
                            let cell = (ix * ny + iy) * nt + it;
                            let f = pxy * vt[it];
                            features[cell * k + m] = f;
                            residual[cell] += f * f;
                        }
                    }
                }
            }

            let mut basis: Vec<Vec<f64>> = Vec::with_capacity(k);
            let mut events = Vec::with_capacity(k);
            for _step in 0..k {
                let total: f64 = residual.iter().map(|r| r.max(0.0)).sum();
                if !(total > 0.0) {
                    break;
                }
                let target = gen.gen::<f64>() * total;
                let mut acc = 0.0;
                let mut chosen = n_cells - 1;
                for (cell, r) in residual.iter().enumerate() {
                    acc += r.max(0.0);
                    if acc >= target {
                        chosen = cell;
                        break;
                    }
                }

                // Gram–Schmidt: orthogonalize the chosen feature vector
                // against the basis, then deflate the residual field.
                let mut w: Vec<f64> = features[chosen * k..(chosen + 1) * k].to_vec();
                for e in &basis {
                    let dot: f64 = e.iter().zip(&w).map(|(a, b)| a * b).sum();
                    for (wi, ei) in w.iter_mut().zip(e) {
                        *wi -= dot * ei;
                    }
                }
                let norm: f64 = w.iter().map(|x| x * x).sum::<f64>().sqrt();
                if norm < 1e-12 {
                    residual[chosen] = 0.0;
                    continue;
                }
                for wi in w.iter_mut() {
                    *wi /= norm;
                }
                for cell in 0..n_cells {
                    let dot: f64 = w
                        .iter()
                        .zip(&features[cell * k..(cell + 1) * k])
                        .map(|(a, b)| a * b)
                        .sum();
                    residual[cell] -= dot * dot;
                }
                residual[chosen] = 0.0;
                basis.push(w);

                // cell index -> coordinates with sub-cell jitter
                let it = chosen % nt;
                let iy = (chosen / nt) % ny;
                let ix = chosen / (nt * ny);
                let jitter = |pitch: f64, gen: &mut rand_chacha::ChaCha12Rng| {
                    if pitch > 0.0 {
                        (gen.gen::<f64>() - 0.5) * pitch
                    } else {
                        0.0
                    }
                };
                let x = axes[0].centers[ix] + jitter(axes[0].pitch, &mut gen);
                let y = axes[1].centers[iy] + jitter(axes[1].pitch, &mut gen);
                let t = axes[2].centers[it] + jitter(axes[2].pitch, &mut gen);
                // time axis is shifted to start at 0
                events.push(DetectionEvent::new(x, y, t + spec.window[2] / 2.0));
            }
            Shot::new(shot_id, events)
        })
        .collect();
    Ok(shots)
}
