//! Semi-classical incoherent source: a sum of independent random-phase
//! emitters producing a complex Gaussian field, speckled intensity patterns,
//! and intensity-driven detection events.
//!
//! Geometry is in metres/seconds (source plane at negative z, detection
//! plane at z = 0); emitted events are converted to the mm/ns event
//! currency at the detector boundary.

use rand::Rng;
use rand_distr::{Distribution, Normal, Poisson};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::rng::{domain, stream};
use crate::types::{ComplexAmplitude, DetectionEvent, Detector, RngSpec, Shot};

/// Speed of light (m/s).
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Minimum emitter count for the thermal (chaotic) regime: below this the
/// central-limit Gaussianity of the summed field degrades.
pub const MIN_THERMAL_EMITTERS: usize = 100;

/// An ensemble of independent monochromatic-ish emitters. Emitter phases are
/// not stored: they are drawn i.i.d. uniform on [0, 2π) per realization.
#[derive(Debug, Clone)]
pub struct SpeckleSource {
    positions: Vec<[f64; 3]>,
    amplitudes: Vec<f64>,
    omegas: Vec<f64>,
    wavelength: f64,
    angular_diameter: f64,
    bandwidth: f64,
}

impl SpeckleSource {
    /// Assemble a source from explicit emitter data. Any emitter count ≥ 1
    /// is accepted here; single-emitter sources model fully coherent light
    /// (constant intensity). Thermal-ensemble claims (Gaussian statistics,
    /// the factor 2) only hold for the [`Self::disk_thermal`] regime.
    pub fn from_parts(
        positions: Vec<[f64; 3]>,
        amplitudes: Vec<f64>,
        omegas: Vec<f64>,
        wavelength: f64,
        angular_diameter: f64,
        bandwidth: f64,
    ) -> Result<Self> {
        if positions.is_empty() {
            return Err(Error::validation("source needs at least one emitter"));
        }
        if positions.len() != amplitudes.len() || positions.len() != omegas.len() {
            return Err(Error::validation(
                "positions, amplitudes and frequencies must have equal lengths",
            ));
        }
        if amplitudes.iter().any(|a| !a.is_finite() || *a < 0.0) {
            return Err(Error::validation("amplitudes must be finite and >= 0"));
        }
        if wavelength <= 0.0 || angular_diameter < 0.0 || bandwidth < 0.0 {
            return Err(Error::validation(
                "wavelength must be > 0; angular diameter and bandwidth >= 0",
            ));
        }
        Ok(SpeckleSource {
            positions,
            amplitudes,
            omegas,
            wavelength,
            angular_diameter,
            bandwidth,
        })
    }

    /// Thermal source: `n_emitters` drawn uniformly on a disk of radius
    /// `source_radius` at distance `distance` behind the detection plane,
    /// frequencies from a Gaussian band of width `bandwidth` (rad/s) around
    /// the carrier 2πc/λ. The angular diameter is 2·radius/distance.
    pub fn disk_thermal(
        n_emitters: usize,
        source_radius: f64,
        distance: f64,
        wavelength: f64,
        bandwidth: f64,
        rng: RngSpec,
    ) -> Result<Self> {
        if n_emitters < MIN_THERMAL_EMITTERS {
            return Err(Error::validation(format!(
                "thermal source needs >= {MIN_THERMAL_EMITTERS} emitters for the \
                 Gaussian-statistics regime, got {n_emitters}"
            )));
        }
        if source_radius <= 0.0 || distance <= 0.0 {
            return Err(Error::validation("source radius and distance must be > 0"));
        }
        let omega0 = 2.0 * std::f64::consts::PI * SPEED_OF_LIGHT / wavelength;
        let mut gen = stream(rng, domain::SPECKLE_SOURCE, 0);
        let band = Normal::new(omega0, bandwidth).map_err(|e| Error::validation(e.to_string()))?;
        let mut positions = Vec::with_capacity(n_emitters);
        let mut omegas = Vec::with_capacity(n_emitters);
        for _ in 0..n_emitters {
            let r = source_radius * gen.gen::<f64>().sqrt();
            let theta = gen.gen::<f64>() * std::f64::consts::TAU;
            positions.push([r * theta.cos(), r * theta.sin(), -distance]);
            omegas.push(band.sample(&mut gen));
        }
        let amp = 1.0 / (n_emitters as f64).sqrt();
        SpeckleSource::from_parts(
            positions,
            vec![amp; n_emitters],
            omegas,
            wavelength,
            2.0 * source_radius / distance,
            bandwidth,
        )
    }

    pub fn n_emitters(&self) -> usize {
        self.positions.len()
    }

    pub fn wavelength(&self) -> f64 {
        self.wavelength
    }

    pub fn angular_diameter(&self) -> f64 {
        self.angular_diameter
    }

    /// Ensemble-mean intensity Σ a².
    pub fn mean_intensity(&self) -> f64 {
        self.amplitudes.iter().map(|a| a * a).sum()
    }

    /// Transverse coherence length λ/α at the detection plane.
    pub fn coherence_length_m(&self) -> Result<f64> {
        coherence_length(self.wavelength, self.angular_diameter)
    }

    /// Coherence time 1/Δω; infinite for a zero-bandwidth source.
    pub fn coherence_time_s(&self) -> f64 {
        if self.bandwidth > 0.0 {
            1.0 / self.bandwidth
        } else {
            f64::INFINITY
        }
    }

    /// Per-realization phase draw: same `(rng, realization_id)` always
    /// yields the same phases.
    fn phases(&self, rng: RngSpec, realization_id: u64) -> Vec<f64> {
        let mut gen = stream(rng, domain::SPECKLE_PHASES, realization_id);
        (0..self.positions.len())
            .map(|_| gen.gen::<f64>() * std::f64::consts::TAU)
            .collect()
    }

    /// Field value given an already-realized phase vector.
    fn field_with_phases(&self, phases: &[f64], point: [f64; 3], time: f64) -> Result<ComplexAmplitude> {
        let mut acc = ComplexAmplitude::new(0.0, 0.0);
        for (((pos, &a), &omega), &phi) in self
            .positions
            .iter()
            .zip(&self.amplitudes)
            .zip(&self.omegas)
            .zip(phases)
        {
            let dx = point[0] - pos[0];
            let dy = point[1] - pos[1];
            let dz = point[2] - pos[2];
            let dist = (dx * dx + dy * dy + dz * dz).sqrt();
            if dist < 1e-12 {
                return Err(Error::SingularGeometry(
                    "sampling point coincides with an emitter".into(),
                ));
            }
            let arg = phi + omega / SPEED_OF_LIGHT * dist - omega * time;
            let (s, c) = arg.sin_cos();
            acc += ComplexAmplitude::new(a * c, a * s);
        }
        Ok(acc)
    }
}

/// Transverse coherence length λ/α.
pub fn coherence_length(wavelength: f64, angular_diameter: f64) -> Result<f64> {
    if !(wavelength > 0.0) {
        return Err(Error::validation(format!(
            "wavelength must be > 0, got {wavelength}"
        )));
    }
    if angular_diameter == 0.0 {
        return Err(Error::validation(
            "zero angular diameter (plane wave): coherence length is infinite",
        ));
    }
    if !(angular_diameter > 0.0) {
        return Err(Error::validation(format!(
            "angular diameter must be > 0, got {angular_diameter}"
        )));
    }
    Ok(wavelength / angular_diameter)
}

/// Sample the complex field at one space-time point of one realization.
///
/// Within a realization the field is a consistent deterministic function of
/// `(point, time)`: the phase draw is fixed by `(rng, realization_id)`.
pub fn sample_field(
    source: &SpeckleSource,
    point: [f64; 3],
    time: f64,
    rng: RngSpec,
    realization_id: u64,
) -> Result<ComplexAmplitude> {
    let phases = source.phases(rng, realization_id);
    source.field_with_phases(&phases, point, time)
}

/// Sample the field at many points of the same realization (single phase
/// draw, then a pure function of position/time).
pub fn sample_field_batch(
    source: &SpeckleSource,
    points: &[[f64; 3]],
    time: f64,
    rng: RngSpec,
    realization_id: u64,
) -> Result<Vec<ComplexAmplitude>> {
    let phases = source.phases(rng, realization_id);
    points
        .iter()
        .map(|p| source.field_with_phases(&phases, *p, time))
        .collect()
}

/// Regular grid on the detection plane (z = 0).
#[derive(Debug, Clone, Copy)]
pub struct MapGridSpec {
    /// Lower-left corner (m).
    pub origin: [f64; 2],
    /// Pixel pitch (m); should resolve the grains (pitch < L_c/4).
    pub pitch: f64,
    pub nx: usize,
    pub ny: usize,
}

#[derive(Debug, Clone)]
pub struct IntensityMap {
    /// Row-major intensities, y-major ordering: `values[iy * nx + ix]`.
    pub values: Vec<f64>,
    pub nx: usize,
    pub ny: usize,
    pub pitch: f64,
    pub origin: [f64; 2],
    /// Set when the requested pitch is too coarse to resolve the grains.
    pub coarse_pitch_warning: bool,
}

/// Sidecar metadata for an emitted map.
#[derive(Debug, Clone, Serialize)]
pub struct MapMetadata {
    pub pitch_m: f64,
    pub nx: usize,
    pub ny: usize,
    pub origin_m: [f64; 2],
    pub wavelength_m: f64,
    pub angular_diameter_rad: f64,
    pub realization_id: u64,
    pub coarse_pitch_warning: bool,
}

impl IntensityMap {
    /// CSV grid, one row of comma-separated intensities per y line.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for iy in 0..self.ny {
            let row: Vec<String> = (0..self.nx)
                .map(|ix| format!("{:.8e}", self.values[iy * self.nx + ix]))
                .collect();
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }

    pub fn metadata(&self, source: &SpeckleSource, realization_id: u64) -> MapMetadata {
        MapMetadata {
            pitch_m: self.pitch,
            nx: self.nx,
            ny: self.ny,
            origin_m: self.origin,
            wavelength_m: source.wavelength(),
            angular_diameter_rad: source.angular_diameter(),
            realization_id,
            coarse_pitch_warning: self.coarse_pitch_warning,
        }
    }
}

/// Evaluate I(r) = |E(r)|² on a grid for one realization.
pub fn generate_intensity_map(
    source: &SpeckleSource,
    grid: &MapGridSpec,
    time: f64,
    rng: RngSpec,
    realization_id: u64,
) -> Result<IntensityMap> {
    if grid.nx == 0 || grid.ny == 0 || !(grid.pitch > 0.0) {
        return Err(Error::validation("map grid must be non-empty with pitch > 0"));
    }
    let coarse = match source.coherence_length_m() {
        Ok(lc) => grid.pitch >= lc / 4.0,
        Err(_) => false,
    };
    let phases = source.phases(rng, realization_id);
    let mut values = Vec::with_capacity(grid.nx * grid.ny);
    for iy in 0..grid.ny {
        for ix in 0..grid.nx {
            let p = [
                grid.origin[0] + (ix as f64 + 0.5) * grid.pitch,
                grid.origin[1] + (iy as f64 + 0.5) * grid.pitch,
                0.0,
            ];
            values.push(source.field_with_phases(&phases, p, time)?.norm_sqr());
        }
    }
    Ok(IntensityMap {
        values,
        nx: grid.nx,
        ny: grid.ny,
        pitch: grid.pitch,
        origin: grid.origin,
        coarse_pitch_warning: coarse,
    })
}

/// Exposure window per shot. With zero duration the field is frozen at
/// t = 0 and events carry t = 0 (a purely spatial pattern).
#[derive(Debug, Clone, Copy)]
pub struct ExposureModel {
    pub duration_s: f64,
}

const ENVELOPE_FACTOR: f64 = 1.2;
const PRESCAN_MAX_PER_AXIS: usize = 128;

/// Sample detection events: one field realization per shot, then an
/// inhomogeneous Poisson process in (x, y, t) with rate ∝ I(r, t), drawn by
/// thinning against the realization's intensity. The thinning envelope is
/// 1.2 × the maximum intensity seen on a pre-scan grid (pitch L_c/4, τ_c/4);
/// a candidate exceeding the envelope is an error, never silent clipping.
pub fn sample_detection_events(
    source: &SpeckleSource,
    detector: &Detector,
    n_shots: usize,
    mean_events_per_shot: f64,
    exposure: &ExposureModel,
    rng: RngSpec,
) -> Result<Vec<Shot>> {
    detector.validate()?;
    if !(mean_events_per_shot > 0.0) {
        return Err(Error::validation("mean_events_per_shot must be > 0"));
    }
    if !(detector.radius_mm > 0.0) {
        return Err(Error::validation("detector radius must be > 0"));
    }
    if exposure.duration_s < 0.0 {
        return Err(Error::validation("exposure duration must be >= 0"));
    }

    let radius_m = detector.radius_mm * 1e-3;
    // Pre-scan layout: spatial pitch L_c/4 (capped), temporal pitch τ_c/4.
    let lc = source.coherence_length_m().unwrap_or(f64::INFINITY);
    let spatial_pitch = if lc.is_finite() { lc / 4.0 } else { radius_m };
    let n_side = ((2.0 * radius_m / spatial_pitch).ceil() as usize + 1).clamp(2, PRESCAN_MAX_PER_AXIS);
    let tau_c = source.coherence_time_s();
    let n_t = if exposure.duration_s > 0.0 && tau_c.is_finite() {
        ((exposure.duration_s / (tau_c / 4.0)).ceil() as usize + 1).clamp(1, 64)
    } else {
        1
    };

    let mean_intensity = source.mean_intensity();
    if !(mean_intensity > 0.0) {
        return Err(Error::validation("source has zero mean intensity"));
    }

    let shots: Result<Vec<Shot>> = (0..n_shots as u64)
        .into_par_iter()
        .map(|shot_id| {
            let phases = source.phases(rng, shot_id);
            // Envelope from the pre-scan.
            let mut max_i = 0.0f64;
            for it in 0..n_t {
                let t = if n_t > 1 {
                    exposure.duration_s * it as f64 / (n_t - 1) as f64
                } else {
                    0.0
                };
                for iy in 0..n_side {
                    for ix in 0..n_side {
                        let x = -radius_m + 2.0 * radius_m * ix as f64 / (n_side - 1) as f64;
                        let y = -radius_m + 2.0 * radius_m * iy as f64 / (n_side - 1) as f64;
                        if x * x + y * y > (radius_m + spatial_pitch) * (radius_m + spatial_pitch) {
                            continue;
                        }
                        let i = source.field_with_phases(&phases, [x, y, 0.0], t)?.norm_sqr();
                        max_i = max_i.max(i);
                    }
                }
            }
            let envelope = ENVELOPE_FACTOR * max_i;
            if envelope <= 0.0 {
                return Ok(Shot::new(shot_id, Vec::new()));
            }

            let mut gen = stream(rng, domain::SPECKLE_EVENTS, shot_id);
            let n_candidates_mean = mean_events_per_shot * envelope / mean_intensity;
            let n_candidates = Poisson::new(n_candidates_mean)
                .map_err(|e| Error::validation(e.to_string()))?
                .sample(&mut gen) as usize;
            let mut events = Vec::new();
            for _ in 0..n_candidates {
                let r = radius_m * gen.gen::<f64>().sqrt();
                let theta = gen.gen::<f64>() * std::f64::consts::TAU;
                let (x, y) = (r * theta.cos(), r * theta.sin());
                let t = if exposure.duration_s > 0.0 {
                    gen.gen::<f64>() * exposure.duration_s
                } else {
                    0.0
                };
                let u: f64 = gen.gen();
                let intensity = source.field_with_phases(&phases, [x, y, 0.0], t)?.norm_sqr();
                if intensity > envelope {
                    return Err(Error::EnvelopeViolation {
                        intensity,
                        envelope,
                    });
                }
                if u * envelope < intensity {
                    events.push(DetectionEvent::new(x * 1e3, y * 1e3, t * 1e9));
                }
            }
            Ok(Shot::new(shot_id, events))
        })
        .collect();
    shots
}
