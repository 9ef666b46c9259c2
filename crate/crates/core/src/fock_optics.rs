//! Small-Fock-space engine: beam-splitter unitaries on occupation states,
//! the Hong–Ou–Mandel dip with partial wave-packet overlap, the classical
//! random-phase baseline, the twin-pair source with local-g² contamination
//! inference, and the Rarity–Tapster four-mode Bell test.

use std::collections::BTreeMap;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{domain, stream};
use crate::types::RngSpec;

/// Total particle cap per state term.
pub const PARTICLE_CAP: u8 = 8;
/// Norm / probability bookkeeping tolerance.
pub const NORM_TOL: f64 = 1e-12;
/// Admissible probability mass above the pair-number truncation in the
/// twin-mode computations. Bounds the usable mean occupation at
/// x⁵ = n̄⁵/(1+n̄)⁵ ≤ 2·10⁻³, i.e. n̄ ≲ 0.4.
pub const TMSV_TRUNCATION_TOL: f64 = 2e-3;
/// Largest pair number carried by the twin-mode computations (cap/2).
pub const TMSV_MAX_PAIRS: u64 = (PARTICLE_CAP / 2) as u64;

const FACTORIAL: [f64; 9] = [1.0, 1.0, 2.0, 6.0, 24.0, 120.0, 720.0, 5040.0, 40320.0];

fn binomial(n: u8, k: u8) -> f64 {
    FACTORIAL[n as usize] / (FACTORIAL[k as usize] * FACTORIAL[(n - k) as usize])
}

/// A complex superposition over occupation-number vectors on a fixed set of
/// labeled modes. Terms are kept in a sorted map, so iteration order (and
/// every derived float accumulation) is deterministic.
#[derive(Debug, Clone, PartialEq)]
pub struct FockState {
    modes: Vec<String>,
    terms: BTreeMap<Vec<u8>, Complex64>,
}

impl FockState {
    /// Build a state from explicit terms; validates occupancy shape, the
    /// particle cap and unit norm (within 1e-12).
    pub fn new(modes: Vec<String>, terms: BTreeMap<Vec<u8>, Complex64>) -> Result<Self> {
        if modes.is_empty() {
            return Err(Error::validation("state needs at least one mode"));
        }
        if terms.is_empty() {
            return Err(Error::validation("state needs at least one term"));
        }
        for occ in terms.keys() {
            if occ.len() != modes.len() {
                return Err(Error::validation(
                    "occupation vector length must match mode count",
                ));
            }
            let total: u64 = occ.iter().map(|&n| n as u64).sum();
            if total > PARTICLE_CAP as u64 {
                return Err(Error::ParticleCap {
                    requested: total as usize,
                    cap: PARTICLE_CAP as usize,
                });
            }
        }
        let state = FockState { modes, terms };
        let norm = state.norm_sqr();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::validation(format!(
                "state norm² = {norm} is not 1 within {NORM_TOL:.0e}"
            )));
        }
        Ok(state)
    }

    /// A single occupation-number basis state.
    pub fn from_occupation(modes: Vec<String>, occupation: Vec<u8>) -> Result<Self> {
        let mut terms = BTreeMap::new();
        terms.insert(occupation, Complex64::new(1.0, 0.0));
        FockState::new(modes, terms)
    }

    pub fn modes(&self) -> &[String] {
        &self.modes
    }

    pub fn mode_index(&self, label: &str) -> Result<usize> {
        self.modes
            .iter()
            .position(|m| m == label)
            .ok_or_else(|| Error::UnknownMode(label.to_string()))
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Vec<u8>, &Complex64)> {
        self.terms.iter()
    }

    pub fn amplitude(&self, occupation: &[u8]) -> Complex64 {
        self.terms
            .get(occupation)
            .copied()
            .unwrap_or(Complex64::new(0.0, 0.0))
    }

    pub fn probability(&self, occupation: &[u8]) -> f64 {
        self.amplitude(occupation).norm_sqr()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.terms.values().map(|a| a.norm_sqr()).sum()
    }

    /// Multiply each term by exp(i·φ·n_mode).
    pub fn phase_shift(&self, mode: &str, phi: f64) -> Result<FockState> {
        let idx = self.mode_index(mode)?;
        let terms = self
            .terms
            .iter()
            .map(|(occ, amp)| {
                let rot = Complex64::from_polar(1.0, phi * occ[idx] as f64);
                (occ.clone(), amp * rot)
            })
            .collect();
        Ok(FockState {
            modes: self.modes.clone(),
            terms,
        })
    }

    /// Probabilities of every occupation pattern with nonzero amplitude.
    pub fn outcome_table(&self) -> Result<OutcomeTable> {
        let probabilities = self
            .terms
            .iter()
            .map(|(occ, amp)| (occ.clone(), amp.norm_sqr()))
            .collect();
        OutcomeTable::new(self.modes.clone(), probabilities)
    }
}

/// Real beam-splitter amplitudes with t² + r² = 1; the reflection sign
/// convention puts the minus on the second mode's reflection.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitterSpec {
    pub transmission: f64,
    pub reflection: f64,
}

impl SplitterSpec {
    /// Build from the transmission amplitude; reflection is √(1−t²).
    pub fn from_transmission(t: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&t) {
            return Err(Error::validation(format!(
                "transmission amplitude must be in [0, 1], got {t}"
            )));
        }
        Ok(SplitterSpec {
            transmission: t,
            reflection: (1.0 - t * t).sqrt(),
        })
    }

    pub fn balanced() -> Self {
        SplitterSpec {
            transmission: std::f64::consts::FRAC_1_SQRT_2,
            reflection: std::f64::consts::FRAC_1_SQRT_2,
        }
    }

    /// The inverse element: same transmission, negated reflection.
    pub fn inverse(self) -> Self {
        SplitterSpec {
            transmission: self.transmission,
            reflection: -self.reflection,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let unit = self.transmission * self.transmission + self.reflection * self.reflection;
        if (unit - 1.0).abs() > NORM_TOL {
            return Err(Error::validation(format!(
                "splitter is not unitary: t² + r² = {unit}"
            )));
        }
        Ok(())
    }
}

/// Apply the two-mode splitter unitary to every term: creation operators
/// mix as a† → t·a† + r·b†, b† → t·b† − r·a†. Norm and particle number are
/// preserved.
pub fn splitter_transform(
    state: &FockState,
    splitter: &SplitterSpec,
    modes: (&str, &str),
) -> Result<FockState> {
    splitter.validate()?;
    let ia = state.mode_index(modes.0)?;
    let ib = state.mode_index(modes.1)?;
    if ia == ib {
        return Err(Error::validation("splitter needs two distinct modes"));
    }
    let (t, r) = (splitter.transmission, splitter.reflection);
    let mut out: BTreeMap<Vec<u8>, Complex64> = BTreeMap::new();
    for (occ, amp) in &state.terms {
        let na = occ[ia];
        let nb = occ[ib];
        let base = amp / (FACTORIAL[na as usize] * FACTORIAL[nb as usize]).sqrt();
        for k in 0..=na {
            for m in 0..=nb {
                let p = k + m;
                let q = na + nb - p;
                let coeff = binomial(na, k)
                    * binomial(nb, m)
                    * t.powi((k + nb - m) as i32)
                    * r.powi((na - k + m) as i32)
                    * if m % 2 == 1 { -1.0 } else { 1.0 }
                    * (FACTORIAL[p as usize] * FACTORIAL[q as usize]).sqrt();
                let mut new_occ = occ.clone();
                new_occ[ia] = p;
                new_occ[ib] = q;
                *out.entry(new_occ).or_insert(Complex64::new(0.0, 0.0)) += base * coeff;
            }
        }
    }
    out.retain(|_, a| a.norm_sqr() > 1e-30);
    Ok(FockState {
        modes: state.modes.clone(),
        terms: out,
    })
}

/// Joint detection pattern probabilities.
#[derive(Debug, Clone, Serialize)]
pub struct OutcomeTable {
    pub modes: Vec<String>,
    pub probabilities: BTreeMap<Vec<u8>, f64>,
}

impl OutcomeTable {
    pub fn new(modes: Vec<String>, probabilities: BTreeMap<Vec<u8>, f64>) -> Result<Self> {
        if probabilities.values().any(|p| *p < 0.0 || !p.is_finite()) {
            return Err(Error::validation("outcome probabilities must be >= 0"));
        }
        let sum: f64 = probabilities.values().sum();
        if (sum - 1.0).abs() > NORM_TOL {
            return Err(Error::validation(format!(
                "outcome probabilities sum to {sum}, not 1"
            )));
        }
        Ok(OutcomeTable {
            modes,
            probabilities,
        })
    }

    pub fn probability(&self, occupation: &[u8]) -> f64 {
        self.probabilities.get(occupation).copied().unwrap_or(0.0)
    }
}

// ---------------------------------------------------------------------------
// Hong–Ou–Mandel
// ---------------------------------------------------------------------------

/// Temporal-mode overlap of two identical Gaussian packets offset by
/// `delay`: v(δ) = exp(−δ²/(4σ²)).
pub fn packet_overlap(delay: f64, packet_sigma: f64) -> f64 {
    (-delay * delay / (4.0 * packet_sigma * packet_sigma)).exp()
}

/// Photon-pair source feeding the HOM splitter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum PairSource {
    /// Exactly one particle per input port.
    IdealPair,
    /// Two-mode squeezed vacuum with mean occupation n̄ per mode.
    Tmsv { nbar: f64 },
}

/// Twin-mode source specification.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairSourceSpec {
    /// Mean occupation per mode (n̄ < 1, the perturbative pair regime).
    pub nbar: f64,
    pub n_shots: usize,
}

impl PairSourceSpec {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.nbar) {
            return Err(Error::validation(format!(
                "mean occupation must satisfy 0 <= n̄ < 1, got {}",
                self.nbar
            )));
        }
        Ok(())
    }
}

fn geometric_x(nbar: f64) -> f64 {
    nbar / (1.0 + nbar)
}

/// Joint click probability (at least one particle on each output port) for
/// n indistinguishable pairs with temporal-mode overlap v, computed through
/// the Fock splitter engine.
fn joint_click_probability(n_pairs: u64, overlap: f64) -> Result<f64> {
    if n_pairs == 0 {
        return Ok(0.0);
    }
    if n_pairs > TMSV_MAX_PAIRS {
        return Err(Error::ParticleCap {
            requested: 2 * n_pairs as usize,
            cap: PARTICLE_CAP as usize,
        });
    }
    let n = n_pairs as u8;
    let v = overlap;
    let u = (1.0 - v * v).max(0.0).sqrt();
    let modes: Vec<String> = ["3:m", "3:o", "4:m", "4:o"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    // Port 3 carries |n⟩ in the matched temporal mode; port 4 carries n
    // particles in v·(matched) + u·(orthogonal).
    let mut terms = BTreeMap::new();
    for j in 0..=n {
        let amp = binomial(n, j).sqrt() * v.powi(j as i32) * u.powi((n - j) as i32);
        if amp.abs() < 1e-300 {
            continue;
        }
        terms.insert(vec![n, 0, j, n - j], Complex64::new(amp, 0.0));
    }
    let state = FockState::new(modes, terms)?;
    let balanced = SplitterSpec::balanced();
    let state = splitter_transform(&state, &balanced, ("3:m", "4:m"))?;
    let state = splitter_transform(&state, &balanced, ("3:o", "4:o"))?;
    let mut p = 0.0;
    for (occ, amp) in state.terms() {
        let side3 = occ[0] + occ[1];
        let side4 = occ[2] + occ[3];
        if side3 >= 1 && side4 >= 1 {
            p += amp.norm_sqr();
        }
    }
    Ok(p)
}

/// Probability of a joint detection (one click on each side of the
/// splitter) at packet delay `delay`.
///
/// For the ideal pair this is ½(1 − v²) with v the packet overlap; the
/// δ = 0 zero is algebraic (the two-path amplitudes cancel exactly in the
/// splitter transform), not statistical. For the twin-mode source the
/// multi-pair terms (up to 4 pairs; geometric tail below
/// [`TMSV_TRUNCATION_TOL`]) produce a strictly positive floor.
pub fn hom_coincidence(delay: f64, packet_sigma: f64, source: PairSource) -> Result<f64> {
    if !(packet_sigma > 0.0) {
        return Err(Error::validation("packet sigma must be > 0"));
    }
    let v = packet_overlap(delay, packet_sigma);
    match source {
        PairSource::IdealPair => joint_click_probability(1, v),
        PairSource::Tmsv { nbar } => {
            let x = geometric_x(validated_nbar(nbar)?);
            let mut p = 0.0;
            for n in 1..=TMSV_MAX_PAIRS {
                let weight = (1.0 - x) * x.powi(n as i32);
                p += weight * joint_click_probability(n, v)?;
            }
            Ok(p)
        }
    }
}

fn validated_nbar(nbar: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&nbar) {
        return Err(Error::validation(format!(
            "mean occupation must satisfy 0 <= n̄ < 1, got {nbar}"
        )));
    }
    let tail = geometric_x(nbar).powi(TMSV_MAX_PAIRS as i32 + 1);
    if tail > TMSV_TRUNCATION_TOL {
        return Err(Error::validation(format!(
            "n̄ = {nbar} leaves probability {tail:.2e} above the {TMSV_MAX_PAIRS}-pair \
             truncation (tolerance {TMSV_TRUNCATION_TOL:.0e})"
        )));
    }
    Ok(nbar)
}

/// Classical random-phase baseline rates.
#[derive(Debug, Clone, Serialize)]
pub struct ClassicalBaseline {
    pub w1_d3: f64,
    pub w1_d4: f64,
    pub w2_joint: f64,
    pub w2_stderr: f64,
    /// w² / (w¹·w¹): ½ for the uniform phase ensemble.
    pub suppression_ratio: f64,
    pub suppression_stderr: f64,
    pub n_samples: usize,
}

/// Single-shot classical rates at a fixed splitter phase: singles ∝ sin²φ
/// and cos²φ, joint their product.
pub fn classical_rates_at_phase(phi: f64) -> (f64, f64, f64) {
    let s2 = phi.sin() * phi.sin();
    let c2 = phi.cos() * phi.cos();
    (s2, c2, s2 * c2)
}

/// Monte-Carlo average of the classical-wave rates over a uniform phase:
/// ⟨w¹⟩ = ½ each, ⟨w²⟩ = ⅛, suppression ratio ½ — the classical bound on
/// the HOM dip.
pub fn classical_hom_baseline(n_phase_samples: usize, rng: RngSpec) -> Result<ClassicalBaseline> {
    if n_phase_samples < 10_000 {
        return Err(Error::validation(
            "classical baseline needs at least 10^4 phase samples",
        ));
    }
    let mut gen = stream(rng, domain::CLASSICAL_BASELINE, 0);
    let mut sum3 = 0.0;
    let mut sum4 = 0.0;
    let mut sum2 = 0.0;
    let mut sum2_sq = 0.0;
    for _ in 0..n_phase_samples {
        let phi = gen.gen::<f64>() * std::f64::consts::TAU;
        let (w3, w4, w2) = classical_rates_at_phase(phi);
        sum3 += w3;
        sum4 += w4;
        sum2 += w2;
        sum2_sq += w2 * w2;
    }
    let n = n_phase_samples as f64;
    let w1_d3 = sum3 / n;
    let w1_d4 = sum4 / n;
    let w2_joint = sum2 / n;
    let w2_var = (sum2_sq / n - w2_joint * w2_joint).max(0.0);
    let w2_stderr = (w2_var / n).sqrt();
    let suppression_ratio = w2_joint / (w1_d3 * w1_d4);
    Ok(ClassicalBaseline {
        w1_d3,
        w1_d4,
        w2_joint,
        w2_stderr,
        suppression_ratio,
        suppression_stderr: w2_stderr / (w1_d3 * w1_d4),
        n_samples: n_phase_samples,
    })
}

/// Source options for a sampled dip scan.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum DipSource {
    IdealPair,
    Tmsv { nbar: f64 },
    /// Classical waves with a uniform random relative phase per shot.
    ClassicalBaseline,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WitnessVerdict {
    /// Visibility exceeds ½ by at least 3σ: no classical-wave explanation.
    QuantumWitness,
    NotFired,
    /// Too few far-delay joint detections to decide.
    Inconclusive,
}

#[derive(Debug, Clone, Serialize)]
pub struct VisibilityReport {
    pub visibility: f64,
    pub stderr: f64,
    pub p_zero: f64,
    pub p_far: f64,
    pub witness: WitnessVerdict,
}

/// A sampled HOM dip.
#[derive(Debug, Clone, Serialize)]
pub struct DipScan {
    pub delays: Vec<f64>,
    pub p_joint: Vec<f64>,
    pub stderr: Vec<f64>,
    pub joint_counts: Vec<u64>,
    pub n_shots: usize,
    pub visibility: VisibilityReport,
}

/// Minimum far-delay joint count for the witness to be decidable.
const WITNESS_MIN_FAR_COUNTS: f64 = 25.0;
/// A delay counts as "far" beyond this many packet sigmas.
const FAR_DELAY_SIGMAS: f64 = 4.0;

/// Simulate per-shot joint detections across a delay scan and report the
/// dip with its visibility V = (P_far − P₀)/P_far. The QUANTUM-WITNESS flag
/// fires when V > ½ by at least 3σ.
pub fn hom_dip_scan(
    delays: &[f64],
    packet_sigma: f64,
    source: DipSource,
    n_shots: usize,
    rng: RngSpec,
) -> Result<DipScan> {
    if !(packet_sigma > 0.0) {
        return Err(Error::validation("packet sigma must be > 0"));
    }
    if n_shots == 0 {
        return Err(Error::validation("need at least one shot per delay"));
    }
    if !delays.contains(&0.0) {
        return Err(Error::validation("delay scan must include 0"));
    }
    if !delays
        .iter()
        .any(|d| d.abs() >= FAR_DELAY_SIGMAS * packet_sigma)
    {
        return Err(Error::validation(format!(
            "delay scan must include a point beyond {FAR_DELAY_SIGMAS}σ"
        )));
    }

    let tmsv_x = match source {
        DipSource::Tmsv { nbar } => Some(geometric_x(validated_nbar(nbar)?)),
        _ => None,
    };

    let mut p_joint = Vec::with_capacity(delays.len());
    let mut stderr = Vec::with_capacity(delays.len());
    let mut joint_counts = Vec::with_capacity(delays.len());
    for (d_idx, &delay) in delays.iter().enumerate() {
        let v = packet_overlap(delay, packet_sigma);
        let mut gen = stream(rng, domain::HOM_SAMPLING, d_idx as u64);
        let count = match source {
            DipSource::IdealPair => {
                let p = joint_click_probability(1, v)?;
                (0..n_shots).filter(|_| gen.gen::<f64>() < p).count() as u64
            }
            DipSource::Tmsv { .. } => {
                let x = tmsv_x.unwrap();
                let p_by_n: Vec<f64> = (0..=TMSV_MAX_PAIRS)
                    .map(|n| joint_click_probability(n, v))
                    .collect::<Result<_>>()?;
                let mut count = 0u64;
                for _ in 0..n_shots {
                    // pair numbers above the cap (tail mass within the
                    // truncation tolerance) reuse the cap probability
                    let n = sample_geometric(x, gen.gen::<f64>()).min(TMSV_MAX_PAIRS);
                    if gen.gen::<f64>() < p_by_n[n as usize] {
                        count += 1;
                    }
                }
                count
            }
            DipSource::ClassicalBaseline => {
                let mut count = 0u64;
                for _ in 0..n_shots {
                    let phi = gen.gen::<f64>() * std::f64::consts::TAU;
                    let c = (2.0 * phi).cos();
                    let p = (1.0 - v * v * c * c) / 4.0;
                    if gen.gen::<f64>() < p {
                        count += 1;
                    }
                }
                count
            }
        };
        let p = count as f64 / n_shots as f64;
        p_joint.push(p);
        stderr.push((p * (1.0 - p) / n_shots as f64).sqrt());
        joint_counts.push(count);
    }

    // Visibility from the zero-delay point and the pooled far points.
    let mut far_counts = 0u64;
    let mut far_shots = 0u64;
    let mut zero_counts = 0u64;
    let mut zero_shots = 0u64;
    for (i, &delay) in delays.iter().enumerate() {
        if delay == 0.0 {
            zero_counts += joint_counts[i];
            zero_shots += n_shots as u64;
        } else if delay.abs() >= FAR_DELAY_SIGMAS * packet_sigma {
            far_counts += joint_counts[i];
            far_shots += n_shots as u64;
        }
    }
    let p_zero = zero_counts as f64 / zero_shots as f64;
    let p_far = far_counts as f64 / far_shots as f64;
    let se_zero = (p_zero * (1.0 - p_zero) / zero_shots as f64).sqrt();
    let se_far = (p_far * (1.0 - p_far) / far_shots as f64).sqrt();
    let (visibility, vis_stderr, witness) = if far_counts as f64 <= WITNESS_MIN_FAR_COUNTS {
        (f64::NAN, f64::NAN, WitnessVerdict::Inconclusive)
    } else {
        let v = (p_far - p_zero) / p_far;
        let se = ((se_zero / p_far).powi(2) + (p_zero * se_far / (p_far * p_far)).powi(2)).sqrt();
        let witness = if v - 0.5 >= 3.0 * se {
            WitnessVerdict::QuantumWitness
        } else {
            WitnessVerdict::NotFired
        };
        (v, se, witness)
    };

    Ok(DipScan {
        delays: delays.to_vec(),
        p_joint,
        stderr,
        joint_counts,
        n_shots,
        visibility: VisibilityReport {
            visibility,
            stderr: vis_stderr,
            p_zero,
            p_far,
            witness,
        },
    })
}

fn sample_geometric(x: f64, u: f64) -> u64 {
    if x <= 0.0 {
        return 0;
    }
    // P(n = k) = (1−x)x^k
    let v = (1.0 - u).max(f64::MIN_POSITIVE);
    (v.ln() / x.ln()).floor() as u64
}

/// Per-shot twin occupations (n, n) of the two-mode squeezed source: n is
/// geometric with mean n̄ and both modes always agree.
pub fn tmsv_sample(source: &PairSourceSpec, rng: RngSpec) -> Result<Vec<(u64, u64)>> {
    source.validate()?;
    let x = geometric_x(source.nbar);
    let mut gen = stream(rng, domain::TMSV_SOURCE, 0);
    Ok((0..source.n_shots)
        .map(|_| {
            let n = sample_geometric(x, gen.gen::<f64>());
            (n, n)
        })
        .collect())
}

/// Local-mode contamination inference.
#[derive(Debug, Clone, Serialize)]
pub struct Contamination {
    /// Normalized same-mode pair rate ⟨n(n−1)⟩/⟨n⟩² (2 for a thermal mode).
    pub local_pair_rate: f64,
    pub mean_occupation: f64,
    /// n̄ inferred from the raw pair rate assuming a thermal marginal:
    /// ⟨n(n−1)⟩ = 2n̄².
    pub nbar_estimate: f64,
    /// Fraction of occupied shots holding two or more particles.
    pub two_particle_fraction: f64,
    pub n_shots: usize,
}

/// Estimate the two-particle contamination of a pair source from per-shot
/// occupation samples of a single outgoing mode.
pub fn infer_contamination(samples: &[u64]) -> Result<Contamination> {
    if samples.is_empty() {
        return Err(Error::validation("no occupation samples"));
    }
    let n = samples.len() as f64;
    let mean = samples.iter().map(|&k| k as f64).sum::<f64>() / n;
    if mean == 0.0 {
        return Err(Error::validation("zero occupancy: nothing to infer from"));
    }
    let pair_rate_raw = samples
        .iter()
        .map(|&k| (k as f64) * (k as f64 - 1.0))
        .sum::<f64>()
        / n;
    let occupied = samples.iter().filter(|&&k| k >= 1).count() as f64;
    let multi = samples.iter().filter(|&&k| k >= 2).count() as f64;
    Ok(Contamination {
        local_pair_rate: pair_rate_raw / (mean * mean),
        mean_occupation: mean,
        nbar_estimate: (pair_rate_raw / 2.0).sqrt(),
        two_particle_fraction: if occupied > 0.0 { multi / occupied } else { 0.0 },
        n_shots: samples.len(),
    })
}

// ---------------------------------------------------------------------------
// Rarity–Tapster / CHSH
// ---------------------------------------------------------------------------

/// Output of the four-mode Bell interferometer at one phase setting.
#[derive(Debug, Clone, Serialize)]
pub struct RarityTapster {
    pub table: OutcomeTable,
    /// E(φ_a, φ_b) = cos(φ_a + φ_b).
    pub correlation: f64,
}

const RT_MODES: [&str; 4] = ["p3", "p3p", "p4", "p4p"];

/// The Rarity–Tapster scheme: the momentum-entangled state
/// (|p₃,p₄⟩ + |p₃′,p₄′⟩)/√2, phase shifts on the primed arms, balanced
/// splitters mixing (p₃, p₃′) and (p₄, p₄′). Outcome patterns keep one
/// particle per side; the correlation takes the unprimed outputs as +1.
pub fn rarity_tapster(phi_a: f64, phi_b: f64) -> Result<RarityTapster> {
    if !phi_a.is_finite() || !phi_b.is_finite() {
        return Err(Error::validation("phases must be finite"));
    }
    let modes: Vec<String> = RT_MODES.iter().map(|s| s.to_string()).collect();
    let amp = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    let mut terms = BTreeMap::new();
    terms.insert(vec![1, 0, 1, 0], amp);
    terms.insert(vec![0, 1, 0, 1], amp);
    let state = FockState::new(modes, terms)?;
    let state = state.phase_shift("p3p", phi_a)?;
    let state = state.phase_shift("p4p", phi_b)?;
    let balanced = SplitterSpec::balanced();
    let state = splitter_transform(&state, &balanced, ("p3", "p3p"))?;
    let state = splitter_transform(&state, &balanced, ("p4", "p4p"))?;
    let table = state.outcome_table()?;
    let e = table.probability(&[1, 0, 1, 0]) + table.probability(&[0, 1, 0, 1])
        - table.probability(&[1, 0, 0, 1])
        - table.probability(&[0, 1, 1, 0]);
    Ok(RarityTapster {
        table,
        correlation: e,
    })
}

/// Four phase settings for the CHSH combination
/// S = |E(a,b) + E(a,b′) + E(a′,b) − E(a′,b′)|.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChshSettings {
    pub a: f64,
    pub a_prime: f64,
    pub b: f64,
    pub b_prime: f64,
}

/// Settings maximizing S at 2√2 for the cos(φ_a + φ_b) correlation.
pub fn chsh_optimal_settings() -> ChshSettings {
    ChshSettings {
        a: 0.0,
        a_prime: std::f64::consts::FRAC_PI_2,
        b: -std::f64::consts::FRAC_PI_4,
        b_prime: std::f64::consts::FRAC_PI_4,
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ChshValue {
    pub s: f64,
    /// E(a,b), E(a,b′), E(a′,b), E(a′,b′).
    pub correlations: [f64; 4],
}

/// Analytic CHSH value from the four interferometer outcome tables.
pub fn chsh(settings: &ChshSettings) -> Result<ChshValue> {
    let e = [
        rarity_tapster(settings.a, settings.b)?.correlation,
        rarity_tapster(settings.a, settings.b_prime)?.correlation,
        rarity_tapster(settings.a_prime, settings.b)?.correlation,
        rarity_tapster(settings.a_prime, settings.b_prime)?.correlation,
    ];
    Ok(ChshValue {
        s: (e[0] + e[1] + e[2] - e[3]).abs(),
        correlations: e,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct SampledChsh {
    pub s: f64,
    pub stderr: f64,
    pub correlations: [f64; 4],
    pub correlation_stderr: [f64; 4],
    pub n_shots_per_setting: usize,
}

/// Monte-Carlo CHSH: sample joint outcomes from each setting's outcome
/// table and form S from the empirical correlations.
pub fn chsh_sampled(
    settings: &ChshSettings,
    n_shots_per_setting: usize,
    rng: RngSpec,
) -> Result<SampledChsh> {
    if n_shots_per_setting == 0 {
        return Err(Error::validation("need at least one shot per setting"));
    }
    let pairs = [
        (settings.a, settings.b),
        (settings.a, settings.b_prime),
        (settings.a_prime, settings.b),
        (settings.a_prime, settings.b_prime),
    ];
    let mut correlations = [0.0f64; 4];
    let mut correlation_stderr = [0.0f64; 4];
    for (i, (pa, pb)) in pairs.iter().enumerate() {
        let table = rarity_tapster(*pa, *pb)?.table;
        let outcomes: Vec<(Vec<u8>, f64)> = table
            .probabilities
            .iter()
            .map(|(occ, p)| (occ.clone(), *p))
            .collect();
        let mut gen = stream(rng, domain::CHSH_SAMPLING, i as u64);
        let mut sum = 0i64;
        for _ in 0..n_shots_per_setting {
            let u = gen.gen::<f64>();
            let mut acc = 0.0;
            let mut product = 1i64;
            for (occ, p) in &outcomes {
                acc += p;
                if u < acc {
                    let left = if occ[0] == 1 { 1i64 } else { -1 };
                    let right = if occ[2] == 1 { 1i64 } else { -1 };
                    product = left * right;
                    break;
                }
            }
            sum += product;
        }
        let n = n_shots_per_setting as f64;
        let e = sum as f64 / n;
        correlations[i] = e;
        correlation_stderr[i] = ((1.0 - e * e).max(0.0) / n).sqrt();
    }
    let s = (correlations[0] + correlations[1] + correlations[2] - correlations[3]).abs();
    let stderr = correlation_stderr
        .iter()
        .map(|se| se * se)
        .sum::<f64>()
        .sqrt();
    Ok(SampledChsh {
        s,
        stderr,
        correlations,
        correlation_stderr,
        n_shots_per_setting,
    })
}

// ---------------------------------------------------------------------------
// Local hidden variables
// ---------------------------------------------------------------------------

/// Deterministic or coin-driven local strategies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum LhvStrategy {
    /// Fixed ±1 outcomes for each setting.
    Deterministic {
        a: i8,
        a_prime: i8,
        b: i8,
        b_prime: i8,
    },
    /// Both particles exit the same side, chosen by a hidden coin: the HOM
    /// statistics (never a joint detection) with no entanglement.
    SameSideCoin,
    /// Independent fair coins on each side.
    RandomOutcomes,
}

impl LhvStrategy {
    /// Outcomes for a shot with shared hidden variables, at the chosen
    /// settings (false = unprimed).
    pub fn outcomes(&self, hidden: [f64; 2], use_a_prime: bool, use_b_prime: bool) -> (i8, i8) {
        match self {
            LhvStrategy::Deterministic {
                a,
                a_prime,
                b,
                b_prime,
            } => (
                if use_a_prime { *a_prime } else { *a },
                if use_b_prime { *b_prime } else { *b },
            ),
            LhvStrategy::SameSideCoin => {
                let side = if hidden[0] < 0.5 { 1 } else { -1 };
                (side, side)
            }
            LhvStrategy::RandomOutcomes => (
                if hidden[0] < 0.5 { 1 } else { -1 },
                if hidden[1] < 0.5 { 1 } else { -1 },
            ),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let LhvStrategy::Deterministic {
            a,
            a_prime,
            b,
            b_prime,
        } = self
        {
            for v in [a, a_prime, b, b_prime] {
                if *v != 1 && *v != -1 {
                    return Err(Error::validation("deterministic outcomes must be ±1"));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct LhvResult {
    pub s: f64,
    pub stderr: f64,
    pub correlations: [f64; 4],
}

/// Monte-Carlo CHSH for a local strategy; always ≤ 2 up to sampling error.
pub fn lhv_simulation(strategy: &LhvStrategy, n_shots: usize, rng: RngSpec) -> Result<LhvResult> {
    strategy.validate()?;
    if n_shots == 0 {
        return Err(Error::validation("need at least one shot"));
    }
    let combos = [(false, false), (false, true), (true, false), (true, true)];
    let mut correlations = [0.0f64; 4];
    let mut variances = [0.0f64; 4];
    for (i, (ap, bp)) in combos.iter().enumerate() {
        let mut gen = stream(rng, domain::LHV, i as u64);
        let mut sum = 0i64;
        for _ in 0..n_shots {
            let hidden = [gen.gen::<f64>(), gen.gen::<f64>()];
            let (left, right) = strategy.outcomes(hidden, *ap, *bp);
            sum += (left * right) as i64;
        }
        let n = n_shots as f64;
        let e = sum as f64 / n;
        correlations[i] = e;
        variances[i] = (1.0 - e * e).max(0.0) / n;
    }
    Ok(LhvResult {
        s: (correlations[0] + correlations[1] + correlations[2] - correlations[3]).abs(),
        stderr: variances.iter().sum::<f64>().sqrt(),
        correlations,
    })
}

/// Exhaustive enumeration of the 16 deterministic strategies: the maximal
/// CHSH value is exactly 2 (integer arithmetic).
pub fn lhv_deterministic_max() -> (f64, LhvStrategy) {
    let mut best = (i32::MIN, [1i8, 1, 1, 1]);
    for bits in 0u8..16 {
        let pick = |i: u8| if bits & (1 << i) != 0 { 1i8 } else { -1 };
        let (a, ap, b, bp) = (pick(0), pick(1), pick(2), pick(3));
        let s = (a as i32) * (b as i32) + (a as i32) * (bp as i32) + (ap as i32) * (b as i32)
            - (ap as i32) * (bp as i32);
        if s.abs() > best.0 {
            best = (s.abs(), [a, ap, b, bp]);
        }
    }
    (
        best.0 as f64,
        LhvStrategy::Deterministic {
            a: best.1[0],
            a_prime: best.1[1],
            b: best.1[2],
            b_prime: best.1[3],
        },
    )
}

// ---------------------------------------------------------------------------
// Independent oracles (test builds)
// ---------------------------------------------------------------------------

/// Brute-force reference computations, independent of the operator-algebra
/// engine above: first-quantized path sums evaluated through matrix
/// permanents. Used by the test suites only.
#[cfg(any(test, feature = "test-oracles"))]
pub mod oracle {
    use num_complex::Complex64;

    use super::FACTORIAL;

    /// Permanent by Ryser's formula.
    fn permanent(n: usize, a: &[Complex64]) -> Complex64 {
        let mut total = Complex64::new(0.0, 0.0);
        for mask in 1u64..(1 << n) {
            let mut product = Complex64::new(1.0, 0.0);
            for i in 0..n {
                let mut row = Complex64::new(0.0, 0.0);
                for j in 0..n {
                    if mask & (1 << j) != 0 {
                        row += a[i * n + j];
                    }
                }
                product *= row;
            }
            if (n - mask.count_ones() as usize) % 2 == 0 {
                total += product;
            } else {
                total -= product;
            }
        }
        total
    }

    /// Output-pattern distribution of `(na, nb)` bosons on a two-mode
    /// splitter via the first-quantized permanent formula
    /// P(k, l) = |perm(U_sub)|² / (na! nb! k! l!).
    pub fn splitter_output_distribution(na: u8, nb: u8, t: f64, r: f64) -> Vec<((u8, u8), f64)> {
        let total = na + nb;
        // single-particle map: port a → (t, r), port b → (−r, t)
        let u = [
            Complex64::new(t, 0.0),
            Complex64::new(r, 0.0),
            Complex64::new(-r, 0.0),
            Complex64::new(t, 0.0),
        ];
        let mut out = Vec::new();
        for k in 0..=total {
            let l = total - k;
            let n = total as usize;
            let mut sub = vec![Complex64::new(0.0, 0.0); n * n];
            for (row_idx, src) in (0..na).map(|_| 0usize).chain((0..nb).map(|_| 1)).enumerate() {
                for (col_idx, dst) in (0..k).map(|_| 0usize).chain((0..l).map(|_| 1)).enumerate() {
                    sub[row_idx * n + col_idx] = u[src * 2 + dst];
                }
            }
            let amp = permanent(n, &sub);
            let p = amp.norm_sqr()
                / (FACTORIAL[na as usize]
                    * FACTORIAL[nb as usize]
                    * FACTORIAL[k as usize]
                    * FACTORIAL[l as usize]);
            out.push(((k, l), p));
        }
        out
    }

    /// Joint click probability for n pairs with temporal overlap v, via the
    /// first-quantized route: 2n particles over four output modes
    /// (port × temporal), pattern amplitudes from permanents.
    pub fn hom_joint_click(n_pairs: u8, v: f64) -> f64 {
        if n_pairs == 0 {
            return 0.0;
        }
        let u_orth = (1.0 - v * v).max(0.0).sqrt();
        let t = std::f64::consts::FRAC_1_SQRT_2;
        // Output modes: (3, ψ), (3, ψ̃), (4, ψ), (4, ψ̃).
        // Port a → t·3 + r·4; port b → t·4 − r·3 (balanced: r = t), applied
        // per temporal component.
        let alpha = [t, 0.0, t, 0.0];
        let beta = [-t * v, -t * u_orth, t * v, t * u_orth];
        let n = 2 * n_pairs as usize;
        let mut p_joint = 0.0;
        let total = n as u8;
        for m0 in 0..=total {
            for m1 in 0..=(total - m0) {
                for m2 in 0..=(total - m0 - m1) {
                    let m3 = total - m0 - m1 - m2;
                    let counts = [m0, m1, m2, m3];
                    if m0 + m1 == 0 || m2 + m3 == 0 {
                        continue;
                    }
                    let mut sub = vec![Complex64::new(0.0, 0.0); n * n];
                    for row in 0..n {
                        let src: &[f64; 4] = if row < n_pairs as usize { &alpha } else { &beta };
                        let mut col = 0;
                        for (mode, &count) in counts.iter().enumerate() {
                            for _ in 0..count {
                                sub[row * n + col] = Complex64::new(src[mode], 0.0);
                                col += 1;
                            }
                        }
                    }
                    let amp = permanent(n, &sub);
                    let norm = FACTORIAL[n_pairs as usize]
                        * FACTORIAL[n_pairs as usize]
                        * counts
                            .iter()
                            .map(|&c| FACTORIAL[c as usize])
                            .product::<f64>();
                    p_joint += amp.norm_sqr() / norm;
                }
            }
        }
        p_joint
    }

    /// Truncated twin-mode joint click probability (pairs ≤ `max_pairs`).
    pub fn tmsv_joint_click(nbar: f64, v: f64, max_pairs: u8) -> f64 {
        let x = nbar / (1.0 + nbar);
        (1..=max_pairs)
            .map(|n| (1.0 - x) * x.powi(n as i32) * hom_joint_click(n, v))
            .sum()
    }

    /// Truncated twin-mode dip visibility.
    pub fn tmsv_visibility(nbar: f64, max_pairs: u8) -> f64 {
        let p0 = tmsv_joint_click(nbar, 1.0, max_pairs);
        let pf = tmsv_joint_click(nbar, 0.0, max_pairs);
        (pf - p0) / pf
    }
}
