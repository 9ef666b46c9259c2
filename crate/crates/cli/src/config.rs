//! Run configuration: one JSON document per run, versioned, with unknown
//! keys rejected everywhere.

use serde::{Deserialize, Serialize};

use qcorr_core::correlator::{Axis, BinningSpec, Normalization, TransverseGates};
use qcorr_core::fock_optics::{ChshSettings, DipSource, LhvStrategy};
use qcorr_core::two_particle::CloudSpec;
use qcorr_core::{Detector, RngSpec};

use crate::CliError;

pub const SCHEMA_VERSION: u32 = 1;

/// Top-level run configuration.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub schema_version: u32,
    pub scenario: ScenarioName,
    pub rng: RngSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<String>,
    pub params: serde_json::Value,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScenarioName {
    HbtSpeckle,
    HbtBosonCloud,
    HbtFermionCloud,
    HbtBecFlat,
    HomPhoton,
    HomAtom,
    HomClassicalBaseline,
    BellChsh,
    BellLhv,
}

impl std::fmt::Display for ScenarioName {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            ScenarioName::HbtSpeckle => "hbt-speckle",
            ScenarioName::HbtBosonCloud => "hbt-boson-cloud",
            ScenarioName::HbtFermionCloud => "hbt-fermion-cloud",
            ScenarioName::HbtBecFlat => "hbt-bec-flat",
            ScenarioName::HomPhoton => "hom-photon",
            ScenarioName::HomAtom => "hom-atom",
            ScenarioName::HomClassicalBaseline => "hom-classical-baseline",
            ScenarioName::BellChsh => "bell-chsh",
            ScenarioName::BellLhv => "bell-lhv",
        };
        write!(f, "{name}")
    }
}

impl ScenarioConfig {
    pub fn from_json(bytes: &[u8]) -> Result<Self, CliError> {
        let config: ScenarioConfig = serde_json::from_slice(bytes)
            .map_err(|e| CliError::Config(format!("cannot parse config: {e}")))?;
        if config.schema_version != SCHEMA_VERSION {
            return Err(CliError::Config(format!(
                "unsupported schema_version {} (expected {SCHEMA_VERSION})",
                config.schema_version
            )));
        }
        Ok(config)
    }

    /// Parse the scenario-specific parameter block (strict: unknown keys
    /// are errors, naming the offending field).
    pub fn params<T: serde::de::DeserializeOwned>(&self) -> Result<T, CliError> {
        serde_json::from_value(self.params.clone())
            .map_err(|e| CliError::Config(format!("bad params for {}: {e}", self.scenario)))
    }

    /// Canonical serialized form used for the manifest digest.
    pub fn canonical_bytes(&self) -> Vec<u8> {
        serde_json::to_vec(self).expect("config serializes")
    }
}

/// CLI-friendly linear binning block, lowered to a [`BinningSpec`].
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BinningParams {
    pub axis: Axis,
    pub lo: f64,
    pub hi: f64,
    pub n_bins: usize,
    #[serde(default)]
    pub gate_x: Option<f64>,
    #[serde(default)]
    pub gate_y: Option<f64>,
    #[serde(default)]
    pub gate_t: Option<f64>,
}

impl BinningParams {
    pub fn to_spec(&self) -> Result<BinningSpec, CliError> {
        let gates = TransverseGates {
            x: self.gate_x,
            y: self.gate_y,
            t: self.gate_t,
        };
        Ok(BinningSpec::linear(
            self.axis, self.lo, self.hi, self.n_bins, gates,
        )?)
    }
}

fn default_normalization() -> Normalization {
    Normalization::default()
}

// --- per-scenario parameter blocks -----------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpeckleParams {
    pub n_shots: usize,
    pub mean_events_per_shot: f64,
    #[serde(default = "default_emitters")]
    pub n_emitters: usize,
    /// He* cooling transition wavelength by default.
    #[serde(default = "default_wavelength")]
    pub wavelength_m: f64,
    pub source_radius_m: f64,
    pub distance_m: f64,
    /// Gaussian frequency band width (rad/s); 0 freezes the pattern.
    #[serde(default)]
    pub bandwidth_rad_per_s: f64,
    /// Exposure window per shot (ns); 0 samples the static pattern.
    #[serde(default)]
    pub exposure_ns: f64,
    pub detector: Detector,
    pub binning: BinningParams,
    #[serde(default = "default_normalization")]
    pub normalization: Normalization,
    /// Separation (same unit as the binning axis) beyond which bins count
    /// as the flat baseline.
    pub far_separation: f64,
    /// Field-record realizations for the g1/Siegert block (0 disables it).
    #[serde(default)]
    pub siegert_realizations: usize,
    /// Optional speckle intensity map of one realization.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub intensity_map: Option<IntensityMapParams>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntensityMapParams {
    /// Pixels per side of the square map.
    pub pixels: usize,
    /// Pixel pitch as a fraction of the coherence length (must resolve the
    /// grains: values above 1/4 set the coarse-pitch warning flag).
    pub pitch_coherence_fraction: f64,
    /// Which realization to render.
    #[serde(default)]
    pub realization_id: u64,
}

fn default_emitters() -> usize {
    1000
}

fn default_wavelength() -> f64 {
    1.08e-6
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CloudParams {
    pub n_shots: usize,
    pub cloud: CloudSpec,
    /// Optional detector: applies the PSF/acceptance to the sampled events.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detector: Option<Detector>,
    pub binning: BinningParams,
    #[serde(default = "default_normalization")]
    pub normalization: Normalization,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BecFlatParams {
    pub n_shots: usize,
    pub mean_events_per_shot: f64,
    pub detector: Detector,
    pub binning: BinningParams,
    #[serde(default = "default_normalization")]
    pub normalization: Normalization,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HomPhotonParams {
    pub packet_sigma_ns: f64,
    /// Explicit delay list; the default scan spans ±8σ including 0.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delays_ns: Option<Vec<f64>>,
    pub source: DipSource,
    pub n_shots: usize,
}

impl HomPhotonParams {
    pub fn delays(&self) -> Vec<f64> {
        match &self.delays_ns {
            Some(d) => d.clone(),
            None => default_delay_scan(self.packet_sigma_ns),
        }
    }
}

pub fn default_delay_scan(sigma: f64) -> Vec<f64> {
    [-8.0, -5.0, -3.0, -2.0, -1.5, -1.0, -0.5, 0.0, 0.5, 1.0, 1.5, 2.0, 3.0, 5.0, 8.0]
        .iter()
        .map(|k| k * sigma)
        .collect()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HomAtomParams {
    pub t0_ms: f64,
    pub t1_ms: f64,
    pub velocity_mm_per_ms: f64,
    pub velocity_prime_mm_per_ms: f64,
    #[serde(default = "default_gravity")]
    pub gravity_mm_per_ms2: f64,
    /// Detunings of t₂ from the nominal t₁ + (t₁ − t₀), in ms; must
    /// include 0.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detunings_ms: Option<Vec<f64>>,
    pub packet_sigma_ms: f64,
    pub source: DipSource,
    pub n_shots: usize,
}

fn default_gravity() -> f64 {
    9.81e-3
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassicalBaselineParams {
    #[serde(default = "default_phase_samples")]
    pub n_phase_samples: usize,
    /// Also emit a sampled dip driven by the classical source.
    #[serde(default)]
    pub dip: Option<HomPhotonDipBlock>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HomPhotonDipBlock {
    pub packet_sigma_ns: f64,
    pub n_shots: usize,
}

fn default_phase_samples() -> usize {
    1_000_000
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BellChshParams {
    /// Defaults to the settings maximizing S at 2√2.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub settings: Option<ChshSettings>,
    pub n_shots_per_setting: usize,
    /// Optional analytic correlation scan grid (points per phase axis).
    #[serde(default)]
    pub grid_points: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BellLhvParams {
    pub strategy: LhvStrategy,
    pub n_shots: usize,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_minimal_config() {
        let json = r#"{
            "schema_version": 1,
            "scenario": "bell-lhv",
            "rng": {"seed": 7},
            "params": {"strategy": {"kind": "same-side-coin"}, "n_shots": 100}
        }"#;
        let config = ScenarioConfig::from_json(json.as_bytes()).unwrap();
        assert_eq!(config.scenario, ScenarioName::BellLhv);
        let params: BellLhvParams = config.params().unwrap();
        assert_eq!(params.n_shots, 100);
    }

    #[test]
    fn unknown_keys_are_errors() {
        let json = r#"{
            "schema_version": 1,
            "scenario": "bell-lhv",
            "rng": {"seed": 7},
            "params": {"strategy": {"kind": "random-outcomes"}, "n_shots": 1, "bogus": 2}
        }"#;
        let config = ScenarioConfig::from_json(json.as_bytes()).unwrap();
        let err = config.params::<BellLhvParams>().unwrap_err();
        assert!(err.to_string().contains("bogus"));

        let top = r#"{"schema_version": 1, "scenario": "bell-lhv", "rng": {"seed": 1},
                      "params": {}, "extra": true}"#;
        assert!(ScenarioConfig::from_json(top.as_bytes()).is_err());
    }

    #[test]
    fn schema_version_is_enforced() {
        let json = r#"{"schema_version": 2, "scenario": "bell-lhv", "rng": {"seed": 1}, "params": {}}"#;
        let err = ScenarioConfig::from_json(json.as_bytes()).unwrap_err();
        assert!(matches!(err, CliError::Config(_)));
    }

    #[test]
    fn binning_params_lower_to_spec() {
        let params = BinningParams {
            axis: Axis::Dx,
            lo: 0.0,
            hi: 5.0,
            n_bins: 10,
            gate_x: None,
            gate_y: Some(1.0),
            gate_t: None,
        };
        let spec = params.to_spec().unwrap();
        assert_eq!(spec.n_bins(), 10);
        // gate on the binning axis is rejected
        let bad = BinningParams {
            gate_x: Some(1.0),
            gate_y: None,
            ..params
        };
        assert!(bad.to_spec().is_err());
    }
}
