//! Pair enumeration engines.
//!
//! Two routes produce bit-identical per-bin pair counts on any dataset:
//! a brute-force O(n²) sweep and a sort-and-window sweep that prunes by the
//! coordinate bounding the separation. Both share the same separation,
//! gate and bin-assignment code so the counts agree exactly.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::DetectionEvent;

/// Separation axis for binning.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Axis {
    Dx,
    Dy,
    Dt,
    /// Transverse radius sqrt(Δx² + Δy²).
    Radial,
}

/// Optional half-width windows on the non-binning axes: a pair enters the
/// histogram only if |Δ| ≤ gate on every gated axis.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TransverseGates {
    pub x: Option<f64>,
    pub y: Option<f64>,
    pub t: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BinningSpec {
    pub axis: Axis,
    /// Strictly increasing bin edges; bins are half-open [lo, hi), so a
    /// separation exactly on an edge goes to the upper bin.
    pub edges: Vec<f64>,
    #[serde(default)]
    pub gates: TransverseGates,
}

impl BinningSpec {
    pub fn new(axis: Axis, edges: Vec<f64>, gates: TransverseGates) -> Result<Self> {
        let spec = BinningSpec { axis, edges, gates };
        spec.validate()?;
        Ok(spec)
    }

    /// `n` equal bins spanning [lo, hi).
    pub fn linear(axis: Axis, lo: f64, hi: f64, n: usize, gates: TransverseGates) -> Result<Self> {
        if n == 0 || !lo.is_finite() || !hi.is_finite() || hi <= lo {
            return Err(Error::validation(format!(
                "bad linear binning lo={lo} hi={hi} n={n}"
            )));
        }
        let step = (hi - lo) / n as f64;
        let mut edges: Vec<f64> = (0..n).map(|i| lo + step * i as f64).collect();
        edges.push(hi);
        Self::new(axis, edges, gates)
    }

    pub fn validate(&self) -> Result<()> {
        if self.edges.len() < 2 {
            return Err(Error::validation("need at least two bin edges"));
        }
        if !self.edges.iter().all(|e| e.is_finite()) {
            return Err(Error::validation("bin edges must be finite"));
        }
        if !self.edges.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::validation("bin edges must be strictly increasing"));
        }
        let gate_fields = [
            ('x', self.gates.x),
            ('y', self.gates.y),
            ('t', self.gates.t),
        ];
        for (name, gate) in gate_fields {
            if let Some(g) = gate {
                if !g.is_finite() || g < 0.0 {
                    return Err(Error::validation(format!(
                        "gate on {name} must be finite and >= 0, got {g}"
                    )));
                }
            }
        }
        let gated_axis = match self.axis {
            Axis::Dx => self.gates.x.is_some(),
            Axis::Dy => self.gates.y.is_some(),
            Axis::Dt => self.gates.t.is_some(),
            Axis::Radial => self.gates.x.is_some() || self.gates.y.is_some(),
        };
        if gated_axis {
            return Err(Error::validation(
                "a gate on the binning axis itself is not allowed",
            ));
        }
        Ok(())
    }

    pub fn n_bins(&self) -> usize {
        self.edges.len() - 1
    }

    pub fn max_edge(&self) -> f64 {
        *self.edges.last().unwrap()
    }

    pub fn bin_centers(&self) -> Vec<f64> {
        self.edges.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect()
    }

    /// Index of the bin containing zero separation, if any.
    pub fn zero_bin(&self) -> Option<usize> {
        self.bin_index(0.0)
    }

    /// Pair separation along the binning axis. Symmetric in its arguments
    /// at the bit level.
    #[inline]
    pub fn separation(&self, a: &DetectionEvent, b: &DetectionEvent) -> f64 {
        match self.axis {
            Axis::Dx => (a.x - b.x).abs(),
            Axis::Dy => (a.y - b.y).abs(),
            Axis::Dt => (a.t - b.t).abs(),
            Axis::Radial => {
                let dx = a.x - b.x;
                let dy = a.y - b.y;
                (dx * dx + dy * dy).sqrt()
            }
        }
    }

    #[inline]
    pub fn passes_gates(&self, a: &DetectionEvent, b: &DetectionEvent) -> bool {
        if let Some(g) = self.gates.x {
            if (a.x - b.x).abs() > g {
                return false;
            }
        }
        if let Some(g) = self.gates.y {
            if (a.y - b.y).abs() > g {
                return false;
            }
        }
        if let Some(g) = self.gates.t {
            if (a.t - b.t).abs() > g {
                return false;
            }
        }
        true
    }

    /// Half-open bin lookup: lo ≤ s < hi.
    #[inline]
    pub fn bin_index(&self, sep: f64) -> Option<usize> {
        let idx = self.edges.partition_point(|e| *e <= sep);
        if idx == 0 || idx == self.edges.len() {
            None
        } else {
            Some(idx - 1)
        }
    }

    /// Coordinate whose difference lower-bounds the separation; used by the
    /// windowed engine to prune.
    #[inline]
    fn prune_key(&self, ev: &DetectionEvent) -> f64 {
        match self.axis {
            Axis::Dx | Axis::Radial => ev.x,
            Axis::Dy => ev.y,
            Axis::Dt => ev.t,
        }
    }

    #[inline]
    fn tally(&self, a: &DetectionEvent, b: &DetectionEvent, hist: &mut [u64]) {
        if !self.passes_gates(a, b) {
            return;
        }
        if let Some(bin) = self.bin_index(self.separation(a, b)) {
            hist[bin] += 1;
        }
    }
}

/// Reference engine: every unordered pair, no pruning.
pub fn count_pairs_brute(events: &[DetectionEvent], spec: &BinningSpec, hist: &mut [u64]) {
    debug_assert_eq!(hist.len(), spec.n_bins());
    for i in 0..events.len() {
        for j in (i + 1)..events.len() {
            spec.tally(&events[i], &events[j], hist);
        }
    }
}

/// Windowed engine: sort by the pruning coordinate, then only visit pairs
/// whose coordinate difference is below the top bin edge.
pub fn count_pairs_sorted(events: &[DetectionEvent], spec: &BinningSpec, hist: &mut [u64]) {
    debug_assert_eq!(hist.len(), spec.n_bins());
    let mut sorted: Vec<&DetectionEvent> = events.iter().collect();
    sorted.sort_by(|a, b| spec.prune_key(a).total_cmp(&spec.prune_key(b)));
    let max = spec.max_edge();
    for i in 0..sorted.len() {
        let key_i = spec.prune_key(sorted[i]);
        for j in (i + 1)..sorted.len() {
            if spec.prune_key(sorted[j]) - key_i >= max {
                break;
            }
            spec.tally(sorted[i], sorted[j], hist);
        }
    }
}

/// Cross-dataset pairs (one event from each slice), windowed.
pub fn count_pairs_cross(
    left: &[DetectionEvent],
    right: &[DetectionEvent],
    spec: &BinningSpec,
    hist: &mut [u64],
) {
    debug_assert_eq!(hist.len(), spec.n_bins());
    let mut l: Vec<&DetectionEvent> = left.iter().collect();
    let mut r: Vec<&DetectionEvent> = right.iter().collect();
    l.sort_by(|a, b| spec.prune_key(a).total_cmp(&spec.prune_key(b)));
    r.sort_by(|a, b| spec.prune_key(a).total_cmp(&spec.prune_key(b)));
    let max = spec.max_edge();
    let mut lo = 0usize;
    for a in &l {
        let key = spec.prune_key(a);
        while lo < r.len() && key - spec.prune_key(r[lo]) >= max {
            lo += 1;
        }
        for b in &r[lo..] {
            if spec.prune_key(b) - key >= max {
                break;
            }
            spec.tally(a, b, hist);
        }
    }
}
