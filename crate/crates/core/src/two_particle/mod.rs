//! Two-particle amplitude interference: permanent/determinant joint
//! detection probabilities, the two-emitter/two-detector toy model, and
//! synthetic bosonic (bunched) and fermionic (antibunched) clouds.

mod dpp;
mod linalg;

pub use dpp::{sample_fermion_cloud, DPP_EIGENVALUE_TOL};

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Normal, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{domain, stream};
use crate::types::{DetectionEvent, RngSpec, Shot};

/// Exchange statistics of the particles feeding a joint detection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Statistics {
    Boson,
    Fermion,
    Distinguishable,
}

/// n×n single-particle transition amplitudes ⟨detector j | U | emitter i⟩.
/// Kept small (n ≤ 6) so joint probabilities stay exact.
#[derive(Debug, Clone)]
pub struct AmplitudeMatrix {
    n: usize,
    entries: Vec<Complex64>,
    pub statistics: Statistics,
}

impl AmplitudeMatrix {
    pub fn new(n: usize, entries: Vec<Complex64>, statistics: Statistics) -> Result<Self> {
        if !(2..=6).contains(&n) {
            return Err(Error::validation(format!(
                "amplitude matrix size must be in [2, 6], got {n}"
            )));
        }
        if entries.len() != n * n {
            return Err(Error::validation(format!(
                "expected {} entries, got {}",
                n * n,
                entries.len()
            )));
        }
        if entries.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::validation("amplitude entries must be finite"));
        }
        Ok(AmplitudeMatrix {
            n,
            entries,
            statistics,
        })
    }

    pub fn size(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn entry(&self, i: usize, j: usize) -> Complex64 {
        self.entries[i * self.n + j]
    }

    /// Permanent via Ryser's inclusion-exclusion (2ⁿ subsets).
    pub fn permanent(&self) -> Complex64 {
        let n = self.n;
        if n == 2 {
            return self.entry(0, 0) * self.entry(1, 1) + self.entry(0, 1) * self.entry(1, 0);
        }
        let mut total = Complex64::new(0.0, 0.0);
        for mask in 1u32..(1 << n) {
            let mut product = Complex64::new(1.0, 0.0);
            for i in 0..n {
                let mut row = Complex64::new(0.0, 0.0);
                for j in 0..n {
                    if mask & (1 << j) != 0 {
                        row += self.entry(i, j);
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

    /// Determinant: direct expansion for n ≤ 3, partial-pivot elimination
    /// beyond.
    pub fn determinant(&self) -> Complex64 {
        match self.n {
            2 => self.entry(0, 0) * self.entry(1, 1) - self.entry(0, 1) * self.entry(1, 0),
            3 => {
                let a = |i, j| self.entry(i, j);
                a(0, 0) * (a(1, 1) * a(2, 2) - a(1, 2) * a(2, 1))
                    - a(0, 1) * (a(1, 0) * a(2, 2) - a(1, 2) * a(2, 0))
                    + a(0, 2) * (a(1, 0) * a(2, 1) - a(1, 1) * a(2, 0))
            }
            n => {
                let mut a = self.entries.clone();
                let mut det = Complex64::new(1.0, 0.0);
                for col in 0..n {
                    let pivot = (col..n)
                        .max_by(|&i, &j| a[i * n + col].norm_sqr().total_cmp(&a[j * n + col].norm_sqr()))
                        .unwrap();
                    if a[pivot * n + col].norm_sqr() == 0.0 {
                        return Complex64::new(0.0, 0.0);
                    }
                    if pivot != col {
                        for j in 0..n {
                            a.swap(col * n + j, pivot * n + j);
                        }
                        det = -det;
                    }
                    let diag = a[col * n + col];
                    det *= diag;
                    for i in (col + 1)..n {
                        let factor = a[i * n + col] / diag;
                        for j in col..n {
                            let sub = factor * a[col * n + j];
                            a[i * n + j] -= sub;
                        }
                    }
                }
                det
            }
        }
    }

    /// Σ over permutations of Π |entry|²: the distinguishable joint weight
    /// (a permanent of the modulus-squared matrix).
    pub fn distinguishable_weight(&self) -> f64 {
        let n = self.n;
        if n == 2 {
            return self.entry(0, 0).norm_sqr() * self.entry(1, 1).norm_sqr()
                + self.entry(0, 1).norm_sqr() * self.entry(1, 0).norm_sqr();
        }
        let mut total = 0.0f64;
        for mask in 1u32..(1 << n) {
            let mut product = 1.0f64;
            for i in 0..n {
                let mut row = 0.0f64;
                for j in 0..n {
                    if mask & (1 << j) != 0 {
                        row += self.entry(i, j).norm_sqr();
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
}

/// Normalized joint detection enhancement: |permanent|² (bosons) or
/// |determinant|² (fermions) divided by the distinguishable weight, so
/// distinguishable particles give exactly 1.
pub fn joint_probability(matrix: &AmplitudeMatrix) -> Result<f64> {
    let weight = matrix.distinguishable_weight();
    if !(weight > 0.0) {
        return Err(Error::DegenerateNormalization(
            "distinguishable joint weight is zero: no detection probability at all".into(),
        ));
    }
    Ok(match matrix.statistics {
        Statistics::Boson => matrix.permanent().norm_sqr() / weight,
        Statistics::Fermion => matrix.determinant().norm_sqr() / weight,
        Statistics::Distinguishable => 1.0,
    })
}

/// Two emitters, two detectors, spherical waves with wavenumber k.
///
/// `source_extent` is the side of the cube each emitter wanders in from one
/// realization to the next: the ensemble of "many different pairs of
/// emitters" behind the chaotic source. (Averaging over emitter phases
/// alone is inert here — a per-emitter phase multiplies both exchange paths
/// equally — so the decorrelation between distant detectors comes from the
/// emitter-position ensemble, with coherence scale λ·distance/extent.)
#[derive(Debug, Clone, Copy)]
pub struct ToyModelGeometry {
    pub emitters: [[f64; 3]; 2],
    pub detectors: [[f64; 3]; 2],
    pub wavenumber: f64,
    pub source_extent: f64,
}

impl ToyModelGeometry {
    /// Geometry with the source extent set to the emitter separation.
    pub fn new(emitters: [[f64; 3]; 2], detectors: [[f64; 3]; 2], wavenumber: f64) -> Self {
        ToyModelGeometry {
            emitters,
            detectors,
            wavenumber,
            source_extent: dist(&emitters[0], &emitters[1]),
        }
    }

    fn distances(&self, emitters: &[[f64; 3]; 2]) -> Result<[[f64; 2]; 2]> {
        let de = dist(&self.emitters[0], &self.emitters[1]);
        if de < 1e-12 {
            return Err(Error::SingularGeometry("coincident emitters".into()));
        }
        let mut d = [[0.0; 2]; 2];
        for (i, e) in emitters.iter().enumerate() {
            for (j, det) in self.detectors.iter().enumerate() {
                d[i][j] = dist(e, det);
                if d[i][j] < 1e-12 {
                    return Err(Error::SingularGeometry(format!(
                        "emitter {i} coincides with detector {j}"
                    )));
                }
            }
        }
        Ok(d)
    }
}

fn dist(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    let dz = a[2] - b[2];
    (dx * dx + dy * dy + dz * dz).sqrt()
}

/// Ensemble-averaged normalized joint detection for the toy model: per
/// realization the emitter pair is redrawn within the source extent and
/// each emitter gets a fresh uniform phase; propagation enters as
/// e^{ikd}/d.
pub fn toy_model_g2(
    geometry: &ToyModelGeometry,
    statistics: Statistics,
    n_phase_realizations: usize,
    rng: RngSpec,
) -> Result<f64> {
    if n_phase_realizations == 0 {
        return Err(Error::validation("need at least one phase realization"));
    }
    if !(geometry.wavenumber > 0.0) {
        return Err(Error::validation("wavenumber must be > 0"));
    }
    if geometry.source_extent < 0.0 {
        return Err(Error::validation("source extent must be >= 0"));
    }
    let mut gen = stream(rng, domain::TOY_MODEL, 0);
    let mut acc = 0.0;
    for _ in 0..n_phase_realizations {
        let mut emitters = geometry.emitters;
        for e in emitters.iter_mut() {
            for coord in e.iter_mut() {
                *coord += geometry.source_extent * (gen.gen::<f64>() - 0.5);
            }
        }
        let phi = [
            gen.gen::<f64>() * std::f64::consts::TAU,
            gen.gen::<f64>() * std::f64::consts::TAU,
        ];
        let d = geometry.distances(&emitters)?;
        let mut entries = Vec::with_capacity(4);
        for i in 0..2 {
            for j in 0..2 {
                let amp = Complex64::from_polar(
                    1.0 / d[i][j],
                    phi[i] + geometry.wavenumber * d[i][j],
                );
                entries.push(amp);
            }
        }
        let matrix = AmplitudeMatrix::new(2, entries, statistics)?;
        acc += joint_probability(&matrix)?;
    }
    Ok(acc / n_phase_realizations as f64)
}

/// Synthetic cloud at the detector plane: per-axis correlation lengths in
/// event units (x mm, y mm, t ns), sampled inside a centered box window.
/// A zero window collapses that axis (every event at the same coordinate).
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CloudSpec {
    /// Correlation lengths (l_x, l_y, l_t) for the reference mass.
    pub correlation_lengths: [f64; 3],
    /// Mean atom number per shot.
    pub mean_atoms: f64,
    pub statistics: Statistics,
    /// Species mass handle: correlation lengths scale as 1/mass at fixed
    /// velocity (de Broglie), so the effective lengths are l / mass_ratio.
    #[serde(default = "default_mass_ratio")]
    pub mass_ratio: f64,
    /// Full window extents per axis; 0 collapses the axis.
    pub window: [f64; 3],
}

fn default_mass_ratio() -> f64 {
    1.0
}

impl CloudSpec {
    pub fn validate(&self) -> Result<()> {
        for (i, &l) in self.correlation_lengths.iter().enumerate() {
            if !(l > 0.0) || !l.is_finite() {
                return Err(Error::validation(format!(
                    "correlation length on axis {i} must be finite and > 0"
                )));
            }
        }
        if !(self.mean_atoms >= 1.0) {
            return Err(Error::validation("mean atom number must be >= 1"));
        }
        if self.statistics == Statistics::Distinguishable {
            return Err(Error::validation(
                "cloud statistics must be boson or fermion",
            ));
        }
        if !(self.mass_ratio > 0.0) {
            return Err(Error::validation("mass ratio must be > 0"));
        }
        if self.window.iter().any(|w| *w < 0.0 || !w.is_finite()) {
            return Err(Error::validation("window extents must be finite and >= 0"));
        }
        if self.window.iter().all(|w| *w == 0.0) {
            return Err(Error::validation("at least one window axis must be > 0"));
        }
        Ok(())
    }

    /// De Broglie-scaled correlation lengths.
    pub fn effective_lengths(&self) -> [f64; 3] {
        [
            self.correlation_lengths[0] / self.mass_ratio,
            self.correlation_lengths[1] / self.mass_ratio,
            self.correlation_lengths[2] / self.mass_ratio,
        ]
    }
}

/// Modes in the Gaussian-field mixture behind the boson sampler. The
/// residual flat offset of the sampled g² above 1 at large separation is
/// O(1/FIELD_MODES).
pub const FIELD_MODES: usize = 512;
const BOSON_PITCH_FRACTION: f64 = 6.0;
const BOSON_MAX_CELLS: usize = 1 << 18;

struct BosonAxis {
    centers: Vec<f64>,
    pitch: f64,
    /// inverse correlation length (0 for collapsed axes)
    inv_length: f64,
}

fn boson_axes(spec: &CloudSpec) -> Result<[BosonAxis; 3]> {
    let lengths = spec.effective_lengths();
    let mut scale = 1.0f64;
    loop {
        let mut axes = Vec::with_capacity(3);
        let mut cells = 1usize;
        for axis in 0..3 {
            let w = spec.window[axis];
            if w == 0.0 {
                axes.push(BosonAxis {
                    centers: vec![0.0],
                    pitch: 0.0,
                    inv_length: 0.0,
                });
                continue;
            }
            let pitch = scale * lengths[axis] / BOSON_PITCH_FRACTION;
            let n = ((w / pitch).ceil() as usize).max(1);
            let pitch = w / n as f64;
            if pitch > lengths[axis] / 4.0 {
                return Err(Error::validation(format!(
                    "boson field grid pitch {pitch:.3e} is coarser than l/4 on axis {axis}; \
                     shrink the window"
                )));
            }
            cells *= n;
            axes.push(BosonAxis {
                centers: (0..n).map(|i| -w / 2.0 + (i as f64 + 0.5) * pitch).collect(),
                pitch,
                inv_length: 1.0 / lengths[axis],
            });
        }
        if cells <= BOSON_MAX_CELLS {
            return Ok(axes.try_into().map_err(|_| Error::validation("axis build"))?);
        }
        scale *= 1.2599; // cube root of 2 per retry
    }
}

/// Sample thermal bosonic shots whose pair correlation is
/// g²(Δ) = 1 + exp(−Σ Δᵢ²/lᵢ²).
///
/// A complex Gaussian field with the matching g¹ (a mixture of plane-wave
/// modes with Gaussian-distributed wavevectors, redrawn per shot) is
/// evaluated on a fine grid (pitch l/6) and its intensity Poisson-thinned
/// cell by cell.
pub fn sample_boson_cloud(spec: &CloudSpec, n_shots: usize, rng: RngSpec) -> Result<Vec<Shot>> {
    spec.validate()?;
    if spec.statistics != Statistics::Boson {
        return Err(Error::validation(
            "sample_boson_cloud requires boson statistics",
        ));
    }
    let axes = boson_axes(spec)?;
    let n_cells: usize = axes.iter().map(|a| a.centers.len()).product();
    let rate_per_cell = spec.mean_atoms / n_cells as f64;
    let amp_sigma = (0.5 / FIELD_MODES as f64).sqrt();
    let normal = Normal::new(0.0, 1.0).map_err(|e| Error::validation(e.to_string()))?;

    let shots: Result<Vec<Shot>> = (0..n_shots as u64)
        .into_par_iter()
        .map(|shot_id| {
            let mut gen = stream(rng, domain::BOSON_CLOUD, shot_id);
            // Draw the field modes: complex Gaussian amplitude + wavevector.
            let mut amps = Vec::with_capacity(FIELD_MODES);
            let mut kvecs = Vec::with_capacity(FIELD_MODES);
            for _ in 0..FIELD_MODES {
                let a = Complex64::new(
                    amp_sigma * normal.sample(&mut gen),
                    amp_sigma * normal.sample(&mut gen),
                );
                let k = [
                    axes[0].inv_length * normal.sample(&mut gen),
                    axes[1].inv_length * normal.sample(&mut gen),
                    axes[2].inv_length * normal.sample(&mut gen),
                ];
                amps.push(a);
                kvecs.push(k);
            }
            // Per-axis phase tables, then separable accumulation.
            let (ny, nt) = (axes[1].centers.len(), axes[2].centers.len());
            let table = |axis: usize, kidx: usize| -> Vec<Complex64> {
                axes[axis]
                    .centers
                    .iter()
                    .map(|&c| Complex64::from_polar(1.0, kvecs[kidx][axis] * c))
                    .collect()
            };
            let mut field = vec![Complex64::new(0.0, 0.0); n_cells];
            for m in 0..FIELD_MODES {
                let tx = table(0, m);
                let ty = table(1, m);
                let tt = table(2, m);
                for (ix, px) in tx.iter().enumerate() {
                    let ax = amps[m] * px;
                    for (iy, py) in ty.iter().enumerate() {
                        let axy = ax * py;
                        let base = (ix * ny + iy) * nt;
                        for (it, pt) in tt.iter().enumerate() {
                            field[base + it] += axy * pt;
                        }
                    }
                }
            }

            // Poisson thinning of the intensity, cell by cell.
            let mut events = Vec::new();
            for (cell, e) in field.iter().enumerate() {
                let lambda = rate_per_cell * e.norm_sqr();
                if lambda <= 0.0 {
                    continue;
                }
                let count = Poisson::new(lambda)
                    .map_err(|err| Error::validation(err.to_string()))?
                    .sample(&mut gen) as usize;
                if count == 0 {
                    continue;
                }
                let it = cell % nt;
                let iy = (cell / nt) % ny;
                let ix = cell / (nt * ny);
                for _ in 0..count {
                    let jitter = |axis: usize, gen: &mut rand_chacha::ChaCha12Rng| {
                        if axes[axis].pitch > 0.0 {
                            (gen.gen::<f64>() - 0.5) * axes[axis].pitch
                        } else {
                            0.0
                        }
                    };
                    let x = axes[0].centers[ix] + jitter(0, &mut gen);
                    let y = axes[1].centers[iy] + jitter(1, &mut gen);
                    let t = axes[2].centers[it] + jitter(2, &mut gen) + spec.window[2] / 2.0;
                    events.push(DetectionEvent::new(x, y, t));
                }
            }
            Ok(Shot::new(shot_id, events))
        })
        .collect();
    shots
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::correlator::{
        classicality_check, g2_from_events, shuffle_across_shots, Axis, BinningSpec,
        Normalization, TransverseGates, Verdict,
    };

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    // -- permanent / determinant ------------------------------------------

    /// Brute-force oracle: explicit sum over all n! permutations, with the
    /// inversion-count sign for determinants.
    fn permutation_sum(n: usize, entries: &[Complex64], signed: bool) -> Complex64 {
        let mut perm: Vec<usize> = (0..n).collect();
        let mut total = Complex64::new(0.0, 0.0);
        loop {
            let mut prod = Complex64::new(1.0, 0.0);
            for (i, &j) in perm.iter().enumerate() {
                prod *= entries[i * n + j];
            }
            if signed {
                let mut inversions = 0;
                for a in 0..n {
                    for b in (a + 1)..n {
                        if perm[a] > perm[b] {
                            inversions += 1;
                        }
                    }
                }
                if inversions % 2 == 1 {
                    prod = -prod;
                }
            }
            total += prod;
            // next lexicographic permutation
            let mut i = n as isize - 2;
            while i >= 0 && perm[i as usize] >= perm[i as usize + 1] {
                i -= 1;
            }
            if i < 0 {
                break;
            }
            let mut j = n - 1;
            while perm[j] <= perm[i as usize] {
                j -= 1;
            }
            perm.swap(i as usize, j);
            perm[i as usize + 1..].reverse();
        }
        total
    }

    #[test]
    fn full_overlap_bosons_give_factor_two() {
        let v = std::f64::consts::FRAC_1_SQRT_2;
        let m = AmplitudeMatrix::new(2, vec![c(v, 0.0); 4], Statistics::Boson).unwrap();
        let g = joint_probability(&m).unwrap();
        assert!((g - 2.0).abs() < 1e-12, "boson factor = {g}");
    }

    #[test]
    fn identical_columns_pauli_blocked() {
        let col = [c(0.3, 0.7), c(-0.5, 0.2)];
        let m = AmplitudeMatrix::new(
            2,
            vec![col[0], col[0], col[1], col[1]],
            Statistics::Fermion,
        )
        .unwrap();
        assert_eq!(joint_probability(&m).unwrap(), 0.0);
    }

    #[test]
    fn random_matrices_match_permutation_oracle() {
        let mut gen = stream(RngSpec::new(99, 0), 0xAB, 0);
        for n in 2..=4usize {
            for _ in 0..20 {
                let entries: Vec<Complex64> = (0..n * n)
                    .map(|_| c(gen.gen_range(-1.0..1.0), gen.gen_range(-1.0..1.0)))
                    .collect();
                let m = AmplitudeMatrix::new(n, entries.clone(), Statistics::Boson).unwrap();
                let perm_oracle = permutation_sum(n, &entries, false);
                let det_oracle = permutation_sum(n, &entries, true);
                assert!(
                    (m.permanent() - perm_oracle).norm() < 1e-12,
                    "n={n} permanent mismatch"
                );
                assert!(
                    (m.determinant() - det_oracle).norm() < 1e-12,
                    "n={n} determinant mismatch"
                );
                let abs2: Vec<Complex64> =
                    entries.iter().map(|z| c(z.norm_sqr(), 0.0)).collect();
                let dist_oracle = permutation_sum(n, &abs2, false);
                assert!((m.distinguishable_weight() - dist_oracle.re).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn boson_plus_fermion_factors_sum_to_two() {
        let mut gen = stream(RngSpec::new(5, 0), 0xAC, 0);
        for _ in 0..200 {
            let entries: Vec<Complex64> = (0..4)
                .map(|_| c(gen.gen_range(-1.0..1.0), gen.gen_range(-1.0..1.0)))
                .collect();
            let b = AmplitudeMatrix::new(2, entries.clone(), Statistics::Boson).unwrap();
            let f = AmplitudeMatrix::new(2, entries, Statistics::Fermion).unwrap();
            let (gb, gf) = (joint_probability(&b), joint_probability(&f));
            if let (Ok(gb), Ok(gf)) = (gb, gf) {
                assert!((gb + gf - 2.0).abs() < 1e-10, "sum = {}", gb + gf);
            }
        }
    }

    #[test]
    fn single_permutation_term_permanent_equals_determinant() {
        // diagonal: only the identity permutation contributes
        let m = AmplitudeMatrix::new(
            3,
            vec![
                c(3.0, 0.0), c(0.0, 0.0), c(0.0, 0.0),
                c(0.0, 0.0), c(-2.0, 0.0), c(0.0, 0.0),
                c(0.0, 0.0), c(0.0, 0.0), c(5.0, 0.0),
            ],
            Statistics::Boson,
        )
        .unwrap();
        assert_eq!(m.permanent(), m.determinant());
        assert_eq!(m.permanent(), c(-30.0, 0.0));

        // even permutation: one off-diagonal cycle, still a single term
        let m = AmplitudeMatrix::new(
            3,
            vec![
                c(0.0, 0.0), c(2.0, 0.0), c(0.0, 0.0),
                c(0.0, 0.0), c(0.0, 0.0), c(3.0, 0.0),
                c(4.0, 0.0), c(0.0, 0.0), c(0.0, 0.0),
            ],
            Statistics::Boson,
        )
        .unwrap();
        assert_eq!(m.permanent(), m.determinant());
        assert_eq!(m.permanent(), c(24.0, 0.0));
    }

    #[test]
    fn degenerate_normalizer_is_error() {
        let m = AmplitudeMatrix::new(2, vec![c(0.0, 0.0); 4], Statistics::Boson).unwrap();
        assert!(matches!(
            joint_probability(&m),
            Err(Error::DegenerateNormalization(_))
        ));
    }

    // -- toy model ---------------------------------------------------------

    fn toy(det_sep: f64) -> ToyModelGeometry {
        ToyModelGeometry::new(
            [[-0.5, 0.0, -10.0], [0.5, 0.0, -10.0]],
            [[-det_sep / 2.0, 0.0, 0.0], [det_sep / 2.0, 0.0, 0.0]],
            2.0 * std::f64::consts::PI / 1e-6,
        )
    }

    #[test]
    fn coincident_detectors_bunch_and_antibunch() {
        let geom = toy(0.0);
        let boson = toy_model_g2(&geom, Statistics::Boson, 200, RngSpec::new(1, 0)).unwrap();
        let fermion = toy_model_g2(&geom, Statistics::Fermion, 200, RngSpec::new(1, 0)).unwrap();
        assert!((boson - 2.0).abs() < 1e-9, "boson g2 = {boson}");
        assert!(fermion.abs() < 1e-9, "fermion g2 = {fermion}");
    }

    #[test]
    fn distant_detectors_decorrelate() {
        // separation far beyond the coherence scale λ D / d_emitters
        let geom = toy(0.4);
        for stats in [Statistics::Boson, Statistics::Fermion] {
            let g = toy_model_g2(&geom, stats, 40_000, RngSpec::new(2, 0)).unwrap();
            assert!((g - 1.0).abs() < 0.05, "{stats:?}: g2 = {g}");
        }
    }

    #[test]
    fn distinguishable_toy_model_is_exactly_one() {
        let g = toy_model_g2(&toy(0.1), Statistics::Distinguishable, 10, RngSpec::new(3, 0))
            .unwrap();
        assert_eq!(g, 1.0);
    }

    #[test]
    fn degenerate_geometry_is_error() {
        let mut geom = toy(0.1);
        geom.emitters[1] = geom.emitters[0];
        assert!(matches!(
            toy_model_g2(&geom, Statistics::Boson, 10, RngSpec::new(1, 0)),
            Err(Error::SingularGeometry(_))
        ));
    }

    // -- cloud samplers ------------------------------------------------------

    fn boson_1d(l: f64, mean: f64) -> CloudSpec {
        CloudSpec {
            correlation_lengths: [l, 1.0, 1.0],
            mean_atoms: mean,
            statistics: Statistics::Boson,
            mass_ratio: 1.0,
            window: [12.0 * l, 0.0, 0.0],
        }
    }

    #[test]
    fn boson_cloud_bunches_with_spec_width() {
        let spec = boson_1d(1.5, 30.0);
        let shots = sample_boson_cloud(&spec, 3000, RngSpec::new(42, 0)).unwrap();
        let total: usize = shots.iter().map(|s| s.len()).sum();
        let mean = total as f64 / shots.len() as f64;
        assert!((mean - 30.0).abs() < 1.0, "mean atoms = {mean}");

        let bins = BinningSpec::linear(Axis::Dx, 0.0, 6.0, 24, TransverseGates::default()).unwrap();
        let curve = g2_from_events(&shots, &bins, Normalization::default()).unwrap();
        let fit = curve.fit_peak().unwrap();
        let g2_zero = fit.peak_value(1.0);
        assert!(
            (g2_zero - 2.0).abs() < 0.08,
            "fitted g2(0) = {g2_zero} (A = {})",
            fit.amplitude
        );
        // g²−1 = exp(−Δ²/l²): fitted width is the correlation length
        assert!(
            (fit.width - 1.5).abs() < 0.15,
            "fitted width = {} vs l = 1.5",
            fit.width
        );
        assert_eq!(
            classicality_check(&curve).unwrap().verdict,
            Verdict::ClassicalCompatible
        );
    }

    #[test]
    fn boson_cloud_satisfies_siegert_against_analytic_g1() {
        let spec = boson_1d(1.0, 25.0);
        let shots = sample_boson_cloud(&spec, 2500, RngSpec::new(7, 0)).unwrap();
        let bins = BinningSpec::linear(Axis::Dx, 0.0, 4.0, 16, TransverseGates::default()).unwrap();
        let curve = g2_from_events(&shots, &bins, Normalization::default()).unwrap();
        for (b, center) in curve.bin_centers().iter().enumerate() {
            // bin-averaged 1 + |g1|² for the Gaussian model
            let lo = curve.bin_edges[b];
            let hi = curve.bin_edges[b + 1];
            let steps = 64;
            let mut avg = 0.0;
            for s in 0..steps {
                let d = lo + (hi - lo) * (s as f64 + 0.5) / steps as f64;
                avg += 1.0 + (-d * d / 1.0).exp();
            }
            avg /= steps as f64;
            let slack = 4.0 * curve.stderr[b] + 1.5 / FIELD_MODES as f64;
            assert!(
                (curve.g2[b] - avg).abs() <= slack,
                "bin {b} (Δ = {center:.2}): g2 = {} vs Siegert {avg}",
                curve.g2[b]
            );
        }
    }

    #[test]
    fn fermion_cloud_antibunches() {
        let spec = CloudSpec {
            correlation_lengths: [1.0, 1.0, 1.0],
            mean_atoms: 12.0,
            statistics: Statistics::Fermion,
            mass_ratio: 1.0,
            window: [12.0, 12.0, 0.0],
        };
        let shots = sample_fermion_cloud(&spec, 1500, RngSpec::new(11, 0)).unwrap();
        let total: usize = shots.iter().map(|s| s.len()).sum();
        let mean = total as f64 / shots.len() as f64;
        assert!(
            (mean - 12.0).abs() < 4.0 * (12.0 / 1500.0f64).sqrt(),
            "mean count {mean} vs kernel trace 12"
        );
        // no two events closer than numerical zero
        for s in &shots {
            for w in s.events().windows(2) {
                assert!(
                    w[0].x != w[1].x || w[0].y != w[1].y || w[0].t != w[1].t,
                    "duplicate event in shot {}",
                    s.shot_id
                );
            }
        }

        let bins =
            BinningSpec::linear(Axis::Radial, 0.0, 4.0, 16, TransverseGates::default()).unwrap();
        let curve = g2_from_events(&shots, &bins, Normalization::default()).unwrap();
        let fit = curve.fit_peak().unwrap();
        let g2_zero = fit.peak_value(1.0);
        assert!(g2_zero < 0.15, "fitted g2(0) = {g2_zero}");
        assert_eq!(
            classicality_check(&curve).unwrap().verdict,
            Verdict::Nonclassical
        );

        // close-pair deficit against the shuffled null
        let mut close_same = 0u64;
        let shuffled = shuffle_across_shots(&shots, RngSpec::new(12, 0));
        let mut close_null = 0u64;
        let tight = BinningSpec::linear(Axis::Radial, 0.0, 0.5, 1, TransverseGates::default())
            .unwrap();
        for (a, b) in shots.iter().zip(&shuffled) {
            let mut h = [0u64];
            crate::correlator::count_pairs_sorted(a.events(), &tight, &mut h);
            close_same += h[0];
            let mut h = [0u64];
            crate::correlator::count_pairs_sorted(b.events(), &tight, &mut h);
            close_null += h[0];
        }
        assert!(
            (close_same as f64) < 0.5 * close_null as f64,
            "close pairs: same-shot {close_same} vs shuffled {close_null}"
        );
    }

    #[test]
    fn fermion_dip_vanishes_as_length_shrinks() {
        let mk = |l: f64| CloudSpec {
            correlation_lengths: [l, 1.0, 1.0],
            mean_atoms: 2.5,
            statistics: Statistics::Fermion,
            mass_ratio: 1.0,
            window: [4.0, 0.0, 0.0],
        };
        let bins = BinningSpec::linear(Axis::Dx, 0.0, 2.0, 2, TransverseGates::default()).unwrap();
        let wide = g2_from_events(
            &sample_fermion_cloud(&mk(0.4), 4000, RngSpec::new(3, 0)).unwrap(),
            &bins,
            Normalization::default(),
        )
        .unwrap();
        let narrow = g2_from_events(
            &sample_fermion_cloud(&mk(0.08), 4000, RngSpec::new(3, 0)).unwrap(),
            &bins,
            Normalization::default(),
        )
        .unwrap();
        // exchange term vanishes: the first bin recovers toward 1
        assert!(narrow.g2[0] > wide.g2[0] + 0.1);
        assert!(narrow.g2[0] > 0.85, "first bin = {}", narrow.g2[0]);
        for b in 1..narrow.n_bins() {
            assert!(
                (narrow.g2[b] - 1.0).abs() <= 4.0 * narrow.stderr[b],
                "bin {b}: {}",
                narrow.g2[b]
            );
        }
    }

    #[test]
    fn fermion_cap_and_statistics_validated() {
        let mut spec = boson_1d(1.0, 10.0);
        assert!(sample_fermion_cloud(&spec, 10, RngSpec::new(1, 0)).is_err());
        spec.statistics = Statistics::Fermion;
        spec.mean_atoms = 100.0;
        assert!(sample_fermion_cloud(&spec, 10, RngSpec::new(1, 0)).is_err());
    }

    #[test]
    fn samplers_are_deterministic() {
        let spec = boson_1d(1.0, 10.0);
        let a = sample_boson_cloud(&spec, 20, RngSpec::new(9, 1)).unwrap();
        let b = sample_boson_cloud(&spec, 20, RngSpec::new(9, 1)).unwrap();
        assert_eq!(a, b);
        let mut fspec = spec;
        fspec.statistics = Statistics::Fermion;
        fspec.mean_atoms = 3.0;
        fspec.window = [40.0, 0.0, 0.0];
        let a = sample_fermion_cloud(&fspec, 20, RngSpec::new(9, 1)).unwrap();
        let b = sample_fermion_cloud(&fspec, 20, RngSpec::new(9, 1)).unwrap();
        assert_eq!(a, b);
    }
}
