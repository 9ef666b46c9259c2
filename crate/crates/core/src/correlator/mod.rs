//! Estimation engine: g1/g2 from field records or detection events, the
//! detector point-spread function, and the Cauchy–Schwarz classicality test.
//!
//! Pair histograms accumulate in 64-bit integers; normalization happens in
//! floating point only at the end, and all merges are sequential in shot
//! order, so results are independent of thread count.

mod fit;
mod pairs;
mod singles;

pub use fit::{fit_gaussian_peak, PeakFit};
pub use pairs::{count_pairs_brute, count_pairs_cross, count_pairs_sorted};
pub use pairs::{Axis, BinningSpec, TransverseGates};

use rand::Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{domain, stream};
use crate::types::{ComplexAmplitude, DetectionEvent, Detector, RngSpec, Shot};

use singles::SinglesNormalizer;

/// How the expected independent-pair rate is estimated.
///
/// Shot-mixing (pairs drawn from different shots) is the default because it
/// cancels single-particle density profiles; the product-of-singles route
/// assumes the empirical pixel densities multiply.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Normalization {
    ShotMixed {
        /// Number of following shots each shot is mixed with.
        #[serde(default = "default_partners")]
        partners: usize,
    },
    ProductOfSingles,
}

fn default_partners() -> usize {
    8
}

impl Default for Normalization {
    fn default() -> Self {
        Normalization::ShotMixed {
            partners: default_partners(),
        }
    }
}

/// Binned second-order correlation estimate.
///
/// Flagged bins (no normalization pairs) carry NaN in `g2` and `stderr`;
/// `pair_count` is always the exact same-shot pair tally.
#[derive(Debug, Clone, Serialize)]
pub struct CorrelationCurve {
    pub bin_edges: Vec<f64>,
    pub g2: Vec<f64>,
    pub stderr: Vec<f64>,
    pub pair_count: Vec<u64>,
    pub normalization: Normalization,
}

impl CorrelationCurve {
    pub fn n_bins(&self) -> usize {
        self.bin_edges.len() - 1
    }

    pub fn bin_centers(&self) -> Vec<f64> {
        self.bin_edges
            .windows(2)
            .map(|w| 0.5 * (w[0] + w[1]))
            .collect()
    }

    /// Index of the bin containing zero separation.
    pub fn zero_bin(&self) -> Option<usize> {
        let idx = self.bin_edges.partition_point(|e| *e <= 0.0);
        if idx == 0 || idx == self.bin_edges.len() {
            None
        } else {
            Some(idx - 1)
        }
    }

    /// Canonical correlation CSV: `bin_lo,bin_hi,g2,stderr,pair_count`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("bin_lo,bin_hi,g2,stderr,pair_count\n");
        for b in 0..self.n_bins() {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                self.bin_edges[b],
                self.bin_edges[b + 1],
                self.g2[b],
                self.stderr[b],
                self.pair_count[b]
            ));
        }
        out
    }

    /// Fit `1 + A exp(−s²/w²)` to the curve.
    pub fn fit_peak(&self) -> Result<PeakFit> {
        fit_gaussian_peak(&self.bin_centers(), &self.g2, &self.stderr, 1.0)
    }
}

struct ShotTallies {
    dd: Vec<Vec<u64>>,    // per shot, per bin
    dd_total: Vec<u64>,   // per bin
    same_pairs_total: f64,
}

fn tally_same_shot(shots: &[Shot], spec: &BinningSpec) -> ShotTallies {
    let dd: Vec<Vec<u64>> = shots
        .par_iter()
        .map(|shot| {
            let mut hist = vec![0u64; spec.n_bins()];
            count_pairs_sorted(shot.events(), spec, &mut hist);
            hist
        })
        .collect();
    let mut dd_total = vec![0u64; spec.n_bins()];
    for h in &dd {
        for (acc, v) in dd_total.iter_mut().zip(h) {
            *acc += v;
        }
    }
    let same_pairs_total = shots
        .iter()
        .map(|s| {
            let n = s.len() as f64;
            0.5 * n * (n - 1.0)
        })
        .sum();
    ShotTallies {
        dd,
        dd_total,
        same_pairs_total,
    }
}

fn jackknife_stderr(replicates: &[f64]) -> f64 {
    let n = replicates.len() as f64;
    if replicates.len() < 2 {
        return f64::NAN;
    }
    let mean = replicates.iter().sum::<f64>() / n;
    let var = replicates.iter().map(|r| (r - mean) * (r - mean)).sum::<f64>();
    ((n - 1.0) / n * var).sqrt()
}

/// Estimate g² from detection events.
///
/// Counts same-shot pairs per separation bin and normalizes by the pair
/// rate expected from independent events. Standard errors come from a
/// leave-one-shot-out jackknife; at least ~100 shots are needed for them to
/// mean much. A bin with zero normalization pairs is flagged NaN.
pub fn g2_from_events(
    shots: &[Shot],
    spec: &BinningSpec,
    normalization: Normalization,
) -> Result<CorrelationCurve> {
    spec.validate()?;
    let n_shots = shots.len();
    if n_shots < 2 {
        return Err(Error::validation("need at least two shots"));
    }
    if shots.iter().all(|s| s.is_empty()) {
        return Err(Error::validation("empty shots everywhere"));
    }
    let tallies = tally_same_shot(shots, spec);
    if tallies.same_pairs_total == 0.0 {
        return Err(Error::validation(
            "no same-shot pairs: every shot has fewer than two events",
        ));
    }
    let n_bins = spec.n_bins();

    match normalization {
        Normalization::ShotMixed { partners } => {
            let partners = partners.min(n_shots - 1);
            if partners == 0 {
                return Err(Error::validation("shot mixing needs at least two shots"));
            }
            // Cross histograms, shot s against its next `partners` shots.
            // The estimator is (same-shot pairs per shot) over (cross-shot
            // pairs per shot pairing): cross pairs from independent
            // realizations carry the single-particle densities but no
            // correlation, and no per-shot count enters the normalization
            // (thermal number fluctuations would bias it).
            let forward: Vec<Vec<(usize, Vec<u64>)>> = (0..n_shots)
                .into_par_iter()
                .map(|s| {
                    (1..=partners)
                        .map(|k| {
                            let s2 = (s + k) % n_shots;
                            let mut hist = vec![0u64; n_bins];
                            count_pairs_cross(
                                shots[s].events(),
                                shots[s2].events(),
                                spec,
                                &mut hist,
                            );
                            (s2, hist)
                        })
                        .collect()
                })
                .collect();

            let mut dm_total = vec![0u64; n_bins];
            let mut involved = vec![vec![0u64; n_bins]; n_shots];
            let mut pairings_involving = vec![0.0f64; n_shots];
            let pairings_total = (n_shots * partners) as f64;
            for (s, partner_hists) in forward.iter().enumerate() {
                for (s2, hist) in partner_hists {
                    pairings_involving[s] += 1.0;
                    pairings_involving[*s2] += 1.0;
                    for b in 0..n_bins {
                        dm_total[b] += hist[b];
                        involved[s][b] += hist[b];
                        involved[*s2][b] += hist[b];
                    }
                }
            }

            let shots_f = n_shots as f64;
            let mut g2 = vec![f64::NAN; n_bins];
            let mut stderr = vec![f64::NAN; n_bins];
            for b in 0..n_bins {
                if dm_total[b] == 0 {
                    continue; // flagged
                }
                // factor 2: same-shot pairs are unordered (n(n−1)/2 per
                // shot), cross pairs are n·n′ per shot pairing
                g2[b] = 2.0 * (tallies.dd_total[b] as f64 / shots_f)
                    / (dm_total[b] as f64 / pairings_total);
                let mut reps = Vec::with_capacity(n_shots);
                for s in 0..n_shots {
                    let den = (dm_total[b] - involved[s][b]) as f64;
                    let pairings = pairings_total - pairings_involving[s];
                    if den <= 0.0 || pairings <= 0.0 {
                        continue;
                    }
                    let num = (tallies.dd_total[b] - tallies.dd[s][b]) as f64;
                    reps.push(2.0 * (num / (shots_f - 1.0)) / (den / pairings));
                }
                stderr[b] = jackknife_stderr(&reps);
            }
            Ok(CorrelationCurve {
                bin_edges: spec.edges.clone(),
                g2,
                stderr,
                pair_count: tallies.dd_total,
                normalization,
            })
        }
        Normalization::ProductOfSingles => {
            let norm = SinglesNormalizer::build(shots, spec)?;
            let mut g2 = vec![f64::NAN; n_bins];
            let mut stderr = vec![f64::NAN; n_bins];
            for b in 0..n_bins {
                let expected = norm.expected(b);
                if expected <= 0.0 {
                    continue; // flagged
                }
                g2[b] = tallies.dd_total[b] as f64 / expected;
                let mut reps = Vec::with_capacity(n_shots);
                for s in 0..n_shots {
                    let e = norm.expected_without(s, b);
                    if e <= 0.0 {
                        continue;
                    }
                    reps.push((tallies.dd_total[b] - tallies.dd[s][b]) as f64 / e);
                }
                stderr[b] = jackknife_stderr(&reps);
            }
            Ok(CorrelationCurve {
                bin_edges: spec.edges.clone(),
                g2,
                stderr,
                pair_count: tallies.dd_total,
                normalization,
            })
        }
    }
}

/// Apply the detector point-spread function and acceptance to event data.
///
/// Each event is displaced by an independent Gaussian with the detector's
/// per-axis sigmas. Events pushed beyond the plate radius or to negative
/// times are dropped. If `dead_radius_mm > 0`, an event landing within the
/// dead radius (in the plane) of an earlier retained event in the same shot
/// is dropped (local saturation).
pub fn apply_detector_psf(shots: &[Shot], detector: &Detector, rng: RngSpec) -> Result<Vec<Shot>> {
    detector.validate()?;
    let nx = Normal::new(0.0, detector.psf_sigma_mm[0]).map_err(|e| Error::validation(e.to_string()))?;
    let ny = Normal::new(0.0, detector.psf_sigma_mm[1]).map_err(|e| Error::validation(e.to_string()))?;
    let nt = Normal::new(0.0, detector.psf_sigma_t_ns).map_err(|e| Error::validation(e.to_string()))?;
    let r2 = detector.radius_mm * detector.radius_mm;
    let dead2 = detector.dead_radius_mm * detector.dead_radius_mm;

    Ok(shots
        .par_iter()
        .map(|shot| {
            let mut gen = stream(rng, domain::DETECTOR_PSF, shot.shot_id);
            let mut displaced: Vec<DetectionEvent> = Vec::with_capacity(shot.len());
            for ev in shot.events() {
                let x = ev.x + nx.sample(&mut gen);
                let y = ev.y + ny.sample(&mut gen);
                let t = ev.t + nt.sample(&mut gen);
                if x * x + y * y > r2 || t < 0.0 {
                    continue;
                }
                displaced.push(DetectionEvent::new(x, y, t));
            }
            displaced.sort_by(DetectionEvent::canonical_cmp);
            let kept = if dead2 > 0.0 {
                let mut kept: Vec<DetectionEvent> = Vec::with_capacity(displaced.len());
                for ev in displaced {
                    let saturated = kept.iter().any(|k| {
                        let dx = ev.x - k.x;
                        let dy = ev.y - k.y;
                        dx * dx + dy * dy < dead2
                    });
                    if !saturated {
                        kept.push(ev);
                    }
                }
                kept
            } else {
                displaced
            };
            Shot::new(shot.shot_id, kept)
        })
        .collect())
}

/// Reassign every event to a uniformly random shot. Destroys same-shot
/// correlations in both position and multiplicity (per-shot counts become
/// multinomial), so the estimated g² of the result is flat at 1. This is
/// the built-in null test.
pub fn shuffle_across_shots(shots: &[Shot], rng: RngSpec) -> Vec<Shot> {
    let mut gen = stream(rng, domain::SHUFFLE, 0);
    let mut buckets: Vec<Vec<DetectionEvent>> = vec![Vec::new(); shots.len()];
    for shot in shots {
        for ev in shot.events() {
            buckets[gen.gen_range(0..shots.len())].push(*ev);
        }
    }
    shots
        .iter()
        .zip(buckets)
        .map(|(shot, events)| Shot::new(shot.shot_id, events))
        .collect()
}

/// First-order coherence estimate over field realizations.
#[derive(Debug, Clone)]
pub struct G1Curve {
    pub g1: Vec<ComplexAmplitude>,
    pub g1_sq: Vec<f64>,
    pub g1_sq_stderr: Vec<f64>,
    pub n_realizations: usize,
}

/// Estimate g¹ between sampling slots from per-realization field records.
///
/// `records[r][i]` is the complex field of realization `r` at slot `i`;
/// `pairs` selects (slot, slot) combinations. Normalization forces
/// g¹ = 1 exactly for a slot paired with itself.
pub fn g1_estimate(
    records: &[Vec<ComplexAmplitude>],
    pairs: &[(usize, usize)],
) -> Result<G1Curve> {
    let n_real = records.len();
    if n_real < 2 {
        return Err(Error::validation("need at least two field realizations"));
    }
    let n_slots = records[0].len();
    if records.iter().any(|r| r.len() != n_slots) {
        return Err(Error::validation(
            "all realizations must sample identical slots",
        ));
    }
    for &(i, j) in pairs {
        if i >= n_slots || j >= n_slots {
            return Err(Error::validation(format!(
                "pair ({i}, {j}) out of range for {n_slots} slots"
            )));
        }
    }

    let mut g1 = Vec::with_capacity(pairs.len());
    let mut g1_sq = Vec::with_capacity(pairs.len());
    let mut g1_sq_stderr = Vec::with_capacity(pairs.len());
    for &(i, j) in pairs {
        if i == j {
            g1.push(ComplexAmplitude::new(1.0, 0.0));
            g1_sq.push(1.0);
            g1_sq_stderr.push(0.0);
            continue;
        }
        let mut cross = ComplexAmplitude::new(0.0, 0.0);
        let mut int_i = 0.0;
        let mut int_j = 0.0;
        let mut terms = Vec::with_capacity(n_real);
        for rec in records {
            let c = rec[i].conj() * rec[j];
            let ii = rec[i].norm_sqr();
            let jj = rec[j].norm_sqr();
            cross += c;
            int_i += ii;
            int_j += jj;
            terms.push((c, ii, jj));
        }
        if int_i <= 0.0 || int_j <= 0.0 {
            return Err(Error::DegenerateNormalization(format!(
                "zero average intensity at slot {}",
                if int_i <= 0.0 { i } else { j }
            )));
        }
        let value = cross / (int_i.sqrt() * int_j.sqrt());
        g1.push(value);
        g1_sq.push(value.norm_sqr());
        let reps: Vec<f64> = terms
            .iter()
            .filter_map(|&(c, ii, jj)| {
                let ni = int_i - ii;
                let nj = int_j - jj;
                if ni <= 0.0 || nj <= 0.0 {
                    return None;
                }
                Some((cross - c).norm_sqr() / (ni * nj))
            })
            .collect();
        g1_sq_stderr.push(jackknife_stderr(&reps));
    }
    Ok(G1Curve {
        g1,
        g1_sq,
        g1_sq_stderr,
        n_realizations: n_real,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct SiegertBin {
    pub bin_lo: f64,
    pub bin_hi: f64,
    pub g2: f64,
    pub g2_stderr: f64,
    pub siegert: f64,
    pub siegert_stderr: f64,
    pub z: f64,
    pub pass: bool,
}

/// Pointwise comparison of g² against 1 + |g¹|².
#[derive(Debug, Clone, Serialize)]
pub struct SiegertReport {
    pub tolerance_sigma: f64,
    pub bins: Vec<SiegertBin>,
    pub n_failed: usize,
    pub n_excluded: usize,
    pub pass: bool,
}

/// Verify the Gaussian-field relation g² = 1 + |g¹|² bin by bin, within
/// `tolerance_sigma` combined standard errors. `g1` entries must align with
/// the g² bins (same count, same order).
pub fn siegert_check(
    g1: &G1Curve,
    g2: &CorrelationCurve,
    tolerance_sigma: f64,
) -> Result<SiegertReport> {
    if g1.g1_sq.len() != g2.n_bins() {
        return Err(Error::BinMismatch(format!(
            "g1 has {} entries, g2 has {} bins",
            g1.g1_sq.len(),
            g2.n_bins()
        )));
    }
    let mut bins = Vec::with_capacity(g2.n_bins());
    let mut n_failed = 0;
    let mut n_excluded = 0;
    for b in 0..g2.n_bins() {
        if !g2.g2[b].is_finite() {
            n_excluded += 1;
            continue;
        }
        let siegert = 1.0 + g1.g1_sq[b];
        let sigma = (g2.stderr[b] * g2.stderr[b] + g1.g1_sq_stderr[b] * g1.g1_sq_stderr[b]).sqrt();
        let z = if sigma > 0.0 {
            (g2.g2[b] - siegert) / sigma
        } else if g2.g2[b] == siegert {
            0.0
        } else {
            f64::INFINITY
        };
        let pass = z.abs() <= tolerance_sigma;
        if !pass {
            n_failed += 1;
        }
        bins.push(SiegertBin {
            bin_lo: g2.bin_edges[b],
            bin_hi: g2.bin_edges[b + 1],
            g2: g2.g2[b],
            g2_stderr: g2.stderr[b],
            siegert,
            siegert_stderr: g1.g1_sq_stderr[b],
            z,
            pass,
        });
    }
    Ok(SiegertReport {
        tolerance_sigma,
        bins,
        n_failed,
        n_excluded,
        pass: n_failed == 0,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    /// g²(0) ≥ 1 − 3σ: compatible with the intensity Cauchy–Schwarz bound.
    ClassicalCompatible,
    /// g²(0) < 1 − 3σ: impossible for a classical intensity.
    Nonclassical,
}

#[derive(Debug, Clone, Serialize)]
pub struct ClassicalityVerdict {
    pub verdict: Verdict,
    pub g2_zero: f64,
    pub stderr: f64,
    /// (g²(0) − 1)/σ; ≤ −3 is the nonclassical regime.
    pub sigma_margin: f64,
}

/// Classicality test on the zero-separation bin.
pub fn classicality_check(curve: &CorrelationCurve) -> Result<ClassicalityVerdict> {
    let zero = curve
        .zero_bin()
        .ok_or_else(|| Error::validation("curve has no zero-separation bin"))?;
    let g2_zero = curve.g2[zero];
    let stderr = curve.stderr[zero];
    if !g2_zero.is_finite() || !stderr.is_finite() {
        return Err(Error::validation("zero-separation bin is flagged/undefined"));
    }
    let verdict = if g2_zero < 1.0 - 3.0 * stderr {
        Verdict::Nonclassical
    } else {
        Verdict::ClassicalCompatible
    };
    Ok(ClassicalityVerdict {
        verdict,
        g2_zero,
        stderr,
        sigma_margin: (g2_zero - 1.0) / stderr,
    })
}
