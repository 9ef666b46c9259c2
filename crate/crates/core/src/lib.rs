//! Event-level simulators and estimators for second-order coherence
//! experiments: speckle fields and intensity-driven detections, g1/g2
//! estimation with detector effects, two-particle amplitude interference,
//! bosonic/fermionic cloud samplers, Fock-space beam-splitter optics
//! (Hong–Ou–Mandel, twin-pair sources, Bell tests), and the free-fall
//! kinematics mapping the atomic interferometer onto the optical one.
//!
//! All stochastic operations are deterministic functions of an
//! [`types::RngSpec`]: identical seeds give bit-identical results, including
//! under parallel shot generation.

pub mod atom_hom;
pub mod correlator;
pub mod error;
pub mod fock_optics;
pub mod io;
pub mod rng;
pub mod speckle;
pub mod two_particle;
pub mod types;

pub use error::{Error, Result};
pub use types::{ComplexAmplitude, DetectionEvent, Detector, RngSpec, Shot};
