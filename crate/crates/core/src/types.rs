//! Domain types shared by every module: detection events, shots, detectors
//! and the deterministic RNG specification.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Complex field amplitude (dimensionless).
pub use num_complex::Complex64 as ComplexAmplitude;

/// Quantize a coordinate to 9 significant digits, the precision carried by
/// the event CSV. Values produced by the simulators live on this grid so that
/// encode/decode round-trips are exact.
pub fn quantize_coord(value: f64) -> f64 {
    if !value.is_finite() {
        return value;
    }
    // Formatting with 8 fractional digits in scientific notation keeps
    // exactly 9 significant digits; parsing back lands on the nearest f64,
    // which then reprints to the same string.
    format!("{value:.8e}").parse().unwrap_or(value)
}

/// A single particle detection: transverse position in millimetres and
/// arrival time in nanoseconds, relative to the shot's time origin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectionEvent {
    pub x: f64,
    pub y: f64,
    pub t: f64,
}

impl DetectionEvent {
    /// Build an event, snapping coordinates onto the 9-significant-digit
    /// grid used by the on-disk format.
    pub fn new(x_mm: f64, y_mm: f64, t_ns: f64) -> Self {
        DetectionEvent {
            x: quantize_coord(x_mm),
            y: quantize_coord(y_mm),
            t: quantize_coord(t_ns),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.t.is_finite()
    }

    /// Canonical event ordering: (t, x, y) ascending, total order on floats.
    pub fn canonical_cmp(&self, other: &Self) -> Ordering {
        self.t
            .total_cmp(&other.t)
            .then(self.x.total_cmp(&other.x))
            .then(self.y.total_cmp(&other.y))
    }
}

/// One realization (one cloud, one pulse): an ordered list of detections.
#[derive(Debug, Clone, PartialEq)]
pub struct Shot {
    pub shot_id: u64,
    events: Vec<DetectionEvent>,
}

impl Shot {
    /// Build a shot; events are sorted into canonical (t, x, y) order.
    pub fn new(shot_id: u64, mut events: Vec<DetectionEvent>) -> Self {
        events.sort_by(DetectionEvent::canonical_cmp);
        Shot { shot_id, events }
    }

    pub fn events(&self) -> &[DetectionEvent] {
        &self.events
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    /// All coordinates finite. Used by the encoder before writing.
    pub fn validate(&self) -> Result<()> {
        for (i, ev) in self.events.iter().enumerate() {
            if !ev.is_finite() {
                return Err(Error::BadShot {
                    shot_id: self.shot_id,
                    message: format!("event {i} has a non-finite coordinate"),
                });
            }
        }
        Ok(())
    }
}

/// Micro-channel-plate style detector: a circular plate with a Gaussian
/// point-spread function per axis and a minimum resolvable pair separation.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Detector {
    /// Plate radius (mm). The reference geometry is a 70 mm diameter plate.
    pub radius_mm: f64,
    /// Per-axis spatial PSF sigma (mm). The reference resolution is 0.2 mm.
    pub psf_sigma_mm: [f64; 2],
    /// Temporal PSF sigma (ns).
    pub psf_sigma_t_ns: f64,
    /// Pairs closer than this (mm, in the plane) lose one member. Default 0.
    #[serde(default)]
    pub dead_radius_mm: f64,
}

impl Detector {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("radius_mm", self.radius_mm),
            ("psf_sigma_mm[0]", self.psf_sigma_mm[0]),
            ("psf_sigma_mm[1]", self.psf_sigma_mm[1]),
            ("psf_sigma_t_ns", self.psf_sigma_t_ns),
            ("dead_radius_mm", self.dead_radius_mm),
        ];
        for (name, v) in fields {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::validation(format!(
                    "detector field {name} must be finite and >= 0, got {v}"
                )));
            }
        }
        Ok(())
    }

    /// An ideal detector: no blur, no dead zone.
    pub fn ideal(radius_mm: f64) -> Self {
        Detector {
            radius_mm,
            psf_sigma_mm: [0.0, 0.0],
            psf_sigma_t_ns: 0.0,
            dead_radius_mm: 0.0,
        }
    }
}

/// Seed and stream identifier. Identical `(seed, stream_id)` yields
/// bit-identical output from every stochastic operation in the crate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RngSpec {
    pub seed: u64,
    #[serde(default)]
    pub stream_id: u64,
}

impl RngSpec {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        RngSpec { seed, stream_id }
    }
}
