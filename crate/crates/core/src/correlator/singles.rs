//! Product-of-singles normalization.
//!
//! The expected pair rate under independence is built from the empirical
//! single-event density on a pixel grid (the counting-mode route: occupancy
//! per pixel, joint rate = product of single rates). Pixels span the binning
//! axis (fine pitch) and any gated axes (pitch = half the gate). Events are
//! modeled as uniform within their pixel, so a pixel pair spreads its weight
//! over bins with the exact folded-triangular law of the separation (a
//! two-axis quadrature approximates it for radial binning); gate acceptance
//! uses pixel centers. The numerator always uses true separations.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::types::{DetectionEvent, Shot};

use super::pairs::{Axis, BinningSpec};

/// Hard cap on occupied pixels (bounds the quadratic pass).
const MAX_PIXELS: usize = 8192;
/// Quadrature nodes per axis for radial spreading.
const RADIAL_NODES: usize = 6;

#[derive(Clone, Copy, PartialEq)]
enum Coord {
    X,
    Y,
    T,
}

impl Coord {
    fn get(self, ev: &DetectionEvent) -> f64 {
        match self {
            Coord::X => ev.x,
            Coord::Y => ev.y,
            Coord::T => ev.t,
        }
    }
}

struct GridDim {
    coord: Coord,
    origin: f64,
    pitch: f64,
    n: usize,
}

impl GridDim {
    fn index(&self, v: f64) -> usize {
        if self.pitch <= 0.0 || self.n <= 1 {
            return 0;
        }
        let i = ((v - self.origin) / self.pitch).floor();
        (i.max(0.0) as usize).min(self.n - 1)
    }

    fn center(&self, i: usize) -> f64 {
        self.origin + (i as f64 + 0.5) * self.pitch
    }
}

/// CDF of the triangular distribution on [−h, h] (difference of two
/// uniforms of width h).
fn tri_cdf(x: f64, h: f64) -> f64 {
    if x <= -h {
        0.0
    } else if x >= h {
        1.0
    } else if x <= 0.0 {
        let u = x + h;
        u * u / (2.0 * h * h)
    } else {
        1.0 - (h - x) * (h - x) / (2.0 * h * h)
    }
}

/// Equal-mass quantile midpoints of the triangular distribution on [−h, h].
fn tri_nodes(h: f64) -> [f64; RADIAL_NODES] {
    let mut nodes = [0.0f64; RADIAL_NODES];
    for (i, node) in nodes.iter_mut().enumerate() {
        let u = (i as f64 + 0.5) / RADIAL_NODES as f64;
        *node = if u < 0.5 {
            h * ((2.0 * u).sqrt() - 1.0)
        } else {
            h * (1.0 - (2.0 * (1.0 - u)).sqrt())
        };
    }
    nodes
}

/// Expected-pairs model: E_b = ½ NᵀW_b N / S, with W_b the pixel-pair
/// incidence of bin b weighted by the within-pixel separation spread.
pub(super) struct SinglesNormalizer {
    /// ½ NᵀW_b N per bin.
    e_raw: Vec<f64>,
    /// Per shot and bin: n_sᵀ W_b N.
    shot_cross: Vec<Vec<f64>>,
    /// Per shot and bin: ½ n_sᵀ W_b n_s.
    shot_self: Vec<Vec<f64>>,
    n_shots: f64,
}

struct PixelModel<'a> {
    spec: &'a BinningSpec,
    centers: Vec<DetectionEvent>,
    /// Pitch of the binning-axis dimension(s).
    axis_pitch: [f64; 2],
}

impl PixelModel<'_> {
    /// Distribute the unit weight of a pixel pair over bins.
    fn for_each_bin_mass(&self, p: usize, q: usize, mut sink: impl FnMut(usize, f64)) {
        let a = &self.centers[p];
        let b = &self.centers[q];
        if !self.spec.passes_gates(a, b) {
            return;
        }
        match self.spec.axis {
            Axis::Dx | Axis::Dy | Axis::Dt => {
                let d = self.spec.separation(a, b);
                let h = self.axis_pitch[0];
                if h <= 0.0 {
                    if let Some(bin) = self.spec.bin_index(d) {
                        sink(bin, 1.0);
                    }
                    return;
                }
                // |d + j| with j triangular on [−h, h]: spread the mass over
                // every bin overlapping [d − h, d + h].
                let edges = &self.spec.edges;
                let lo_idx = edges.partition_point(|e| *e <= d - h).saturating_sub(1);
                for bin in lo_idx..self.spec.n_bins() {
                    let lo = edges[bin];
                    if lo >= d + h {
                        break;
                    }
                    let hi = edges[bin + 1];
                    let direct = tri_cdf(hi - d, h) - tri_cdf(lo - d, h);
                    let folded = tri_cdf(-lo - d, h) - tri_cdf(-hi - d, h);
                    let mass = direct + folded;
                    if mass > 0.0 {
                        sink(bin, mass);
                    }
                }
            }
            Axis::Radial => {
                let dx = a.x - b.x;
                let dy = a.y - b.y;
                let (hx, hy) = (self.axis_pitch[0], self.axis_pitch[1]);
                if hx <= 0.0 && hy <= 0.0 {
                    if let Some(bin) = self.spec.bin_index((dx * dx + dy * dy).sqrt()) {
                        sink(bin, 1.0);
                    }
                    return;
                }
                let nx = tri_nodes(hx.max(0.0));
                let ny = tri_nodes(hy.max(0.0));
                let w = 1.0 / (RADIAL_NODES * RADIAL_NODES) as f64;
                for jx in nx {
                    for jy in ny {
                        let sx = dx + jx;
                        let sy = dy + jy;
                        if let Some(bin) = self.spec.bin_index((sx * sx + sy * sy).sqrt()) {
                            sink(bin, w);
                        }
                    }
                }
            }
        }
    }
}

impl SinglesNormalizer {
    pub(super) fn build(shots: &[Shot], spec: &BinningSpec) -> Result<Self> {
        let dims = build_dims(shots, spec)?;
        let n_bins = spec.n_bins();

        // Map events to occupied pixels.
        let mut key_to_dense: HashMap<u64, usize> = HashMap::new();
        let mut centers: Vec<DetectionEvent> = Vec::new();
        let mut totals: Vec<f64> = Vec::new();
        let mut shot_occupancy: Vec<Vec<(usize, f64)>> = Vec::with_capacity(shots.len());
        for shot in shots {
            let mut local: HashMap<usize, f64> = HashMap::new();
            for ev in shot.events() {
                let mut key = 0u64;
                for d in &dims {
                    key = key * (d.n as u64) + d.index(d.coord.get(ev)) as u64;
                }
                let dense = *key_to_dense.entry(key).or_insert_with(|| {
                    let mut c = [0.0f64; 3];
                    let mut k = key;
                    for d in dims.iter().rev() {
                        let i = (k % d.n as u64) as usize;
                        k /= d.n as u64;
                        match d.coord {
                            Coord::X => c[0] = d.center(i),
                            Coord::Y => c[1] = d.center(i),
                            Coord::T => c[2] = d.center(i),
                        }
                    }
                    centers.push(DetectionEvent { x: c[0], y: c[1], t: c[2] });
                    totals.push(0.0);
                    totals.len() - 1
                });
                totals[dense] += 1.0;
                *local.entry(dense).or_insert(0.0) += 1.0;
            }
            let mut occ: Vec<(usize, f64)> = local.into_iter().collect();
            occ.sort_unstable_by_key(|(p, _)| *p);
            shot_occupancy.push(occ);
        }

        if centers.len() > MAX_PIXELS {
            return Err(Error::validation(format!(
                "product-of-singles pixelization too fine: {} occupied pixels (cap {MAX_PIXELS})",
                centers.len()
            )));
        }

        let axis_pitch = match spec.axis {
            Axis::Dx => [pitch_of(&dims, Coord::X), 0.0],
            Axis::Dy => [pitch_of(&dims, Coord::Y), 0.0],
            Axis::Dt => [pitch_of(&dims, Coord::T), 0.0],
            Axis::Radial => [pitch_of(&dims, Coord::X), pitch_of(&dims, Coord::Y)],
        };
        let model = PixelModel {
            spec,
            centers,
            axis_pitch,
        };

        // Quadratic pass over occupied pixels: totals and u_b = W_b N.
        let n_pix = model.centers.len();
        let mut e_raw = vec![0.0f64; n_bins];
        let mut u = vec![vec![0.0f64; n_pix]; n_bins];
        for p in 0..n_pix {
            for q in p..n_pix {
                model.for_each_bin_mass(p, q, |b, mass| {
                    if p == q {
                        e_raw[b] += 0.5 * mass * totals[p] * totals[p];
                        u[b][p] += mass * totals[p];
                    } else {
                        e_raw[b] += mass * totals[p] * totals[q];
                        u[b][p] += mass * totals[q];
                        u[b][q] += mass * totals[p];
                    }
                });
            }
        }

        // Per-shot jackknife corrections.
        let mut shot_cross = vec![vec![0.0f64; n_bins]; shots.len()];
        let mut shot_self = vec![vec![0.0f64; n_bins]; shots.len()];
        for (s, occ) in shot_occupancy.iter().enumerate() {
            for &(p, n) in occ {
                for (b, ub) in u.iter().enumerate() {
                    shot_cross[s][b] += n * ub[p];
                }
            }
            for (i, &(p, np)) in occ.iter().enumerate() {
                for &(q, nq) in &occ[i..] {
                    model.for_each_bin_mass(p, q, |b, mass| {
                        shot_self[s][b] += mass * if p == q { 0.5 * np * np } else { np * nq };
                    });
                }
            }
        }

        Ok(SinglesNormalizer {
            e_raw,
            shot_cross,
            shot_self,
            n_shots: shots.len() as f64,
        })
    }

    /// Expected pair count in bin `b` from the full dataset.
    pub(super) fn expected(&self, b: usize) -> f64 {
        self.e_raw[b] / self.n_shots
    }

    /// Expected pair count in bin `b` with shot `s` left out.
    pub(super) fn expected_without(&self, s: usize, b: usize) -> f64 {
        (self.e_raw[b] - self.shot_cross[s][b] + self.shot_self[s][b]) / (self.n_shots - 1.0)
    }
}

fn pitch_of(dims: &[GridDim], coord: Coord) -> f64 {
    dims.iter()
        .find(|d| d.coord == coord)
        .map(|d| if d.n > 1 { d.pitch } else { 0.0 })
        .unwrap_or(0.0)
}

fn build_dims(shots: &[Shot], spec: &BinningSpec) -> Result<Vec<GridDim>> {
    let min_bin_width = spec
        .edges
        .windows(2)
        .map(|w| w[1] - w[0])
        .fold(f64::INFINITY, f64::min);
    let fine_pitch = min_bin_width / 4.0;

    let mut wanted: Vec<(Coord, f64)> = Vec::new();
    match spec.axis {
        Axis::Dx => wanted.push((Coord::X, fine_pitch)),
        Axis::Dy => wanted.push((Coord::Y, fine_pitch)),
        Axis::Dt => wanted.push((Coord::T, fine_pitch)),
        Axis::Radial => {
            wanted.push((Coord::X, fine_pitch));
            wanted.push((Coord::Y, fine_pitch));
        }
    }
    let gate_dims = [
        (Coord::X, spec.gates.x),
        (Coord::Y, spec.gates.y),
        (Coord::T, spec.gates.t),
    ];
    for (coord, gate) in gate_dims {
        if let Some(g) = gate {
            if g <= 0.0 {
                return Err(Error::validation(
                    "product-of-singles requires strictly positive gates",
                ));
            }
            wanted.push((coord, g / 2.0));
        }
    }

    let mut dims = Vec::with_capacity(wanted.len());
    for (coord, mut pitch) in wanted {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for shot in shots {
            for ev in shot.events() {
                let v = coord.get(ev);
                lo = lo.min(v);
                hi = hi.max(v);
            }
        }
        // Degenerate range collapses to a single pixel.
        let span = (hi - lo).max(0.0);
        let mut n = (span / pitch).floor() as usize + 1;
        while n > MAX_PIXELS {
            pitch *= 2.0;
            n = (span / pitch).floor() as usize + 1;
        }
        dims.push(GridDim {
            coord,
            origin: lo,
            pitch,
            n,
        });
    }
    Ok(dims)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tri_cdf_basics() {
        let h = 2.0;
        assert_eq!(tri_cdf(-2.5, h), 0.0);
        assert_eq!(tri_cdf(2.5, h), 1.0);
        assert!((tri_cdf(0.0, h) - 0.5).abs() < 1e-15);
        // symmetry
        assert!((tri_cdf(-0.7, h) + tri_cdf(0.7, h) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn tri_nodes_have_zero_mean() {
        let nodes = tri_nodes(1.0);
        let mean: f64 = nodes.iter().sum::<f64>() / nodes.len() as f64;
        assert!(mean.abs() < 1e-12);
        assert!(nodes.windows(2).all(|w| w[0] < w[1]));
    }
}
