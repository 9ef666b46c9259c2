//! Analysis mode: run the correlator on an externally supplied event file
//! (real or synthetic) and emit the correlation CSV plus the classicality
//! verdict.

use std::path::{Path, PathBuf};

use qcorr_core::correlator::{
    classicality_check, g2_from_events, shuffle_across_shots, Axis, BinningSpec, Normalization,
    TransverseGates,
};
use qcorr_core::io::decode_shots;
use qcorr_core::RngSpec;

use crate::CliError;

#[derive(Debug, Clone)]
pub struct AnalyzeRequest {
    pub events_path: PathBuf,
    pub axis: Axis,
    /// (lo, hi, n_bins)
    pub bins: (f64, f64, usize),
    pub normalization: Normalization,
    pub gates: TransverseGates,
    pub output_dir: PathBuf,
    /// Cross-shot shuffle before estimation: the built-in null test.
    pub shuffle: Option<RngSpec>,
}

/// Parse a `LO:HI:N` binning argument.
pub fn parse_bins(spec: &str) -> Result<(f64, f64, usize), CliError> {
    let parts: Vec<&str> = spec.split(':').collect();
    if parts.len() != 3 {
        return Err(CliError::Config(format!(
            "bins must be LO:HI:N, got '{spec}'"
        )));
    }
    let lo: f64 = parts[0]
        .parse()
        .map_err(|e| CliError::Config(format!("bad bins lo: {e}")))?;
    let hi: f64 = parts[1]
        .parse()
        .map_err(|e| CliError::Config(format!("bad bins hi: {e}")))?;
    let n: usize = parts[2]
        .parse()
        .map_err(|e| CliError::Config(format!("bad bins count: {e}")))?;
    Ok((lo, hi, n))
}

pub fn parse_axis(axis: &str) -> Result<Axis, CliError> {
    match axis {
        "dx" => Ok(Axis::Dx),
        "dy" => Ok(Axis::Dy),
        "dt" => Ok(Axis::Dt),
        "r" => Ok(Axis::Radial),
        other => Err(CliError::Config(format!(
            "axis must be one of dx|dy|dt|r, got '{other}'"
        ))),
    }
}

pub struct AnalyzeOutput {
    pub curve_path: PathBuf,
    pub verdict_path: PathBuf,
    pub n_shots: usize,
    pub n_events: usize,
}

pub fn analyze(request: &AnalyzeRequest) -> Result<AnalyzeOutput, CliError> {
    let bytes = std::fs::read(&request.events_path)?;
    let shots = decode_shots(&bytes).map_err(|e| CliError::Runtime(e.to_string()))?;
    let shots = match request.shuffle {
        Some(rng) => shuffle_across_shots(&shots, rng),
        None => shots,
    };
    let (lo, hi, n) = request.bins;
    let spec = BinningSpec::linear(request.axis, lo, hi, n, request.gates)?;
    let curve = g2_from_events(&shots, &spec, request.normalization)?;
    let verdict = classicality_check(&curve)?;

    std::fs::create_dir_all(&request.output_dir)?;
    let curve_path = request.output_dir.join("g2.csv");
    std::fs::write(&curve_path, curve.to_csv())?;
    let verdict_path = request.output_dir.join("classicality.json");
    let mut verdict_bytes = serde_json::to_vec_pretty(&verdict)
        .map_err(|e| CliError::Runtime(format!("serialize verdict: {e}")))?;
    verdict_bytes.push(b'\n');
    std::fs::write(&verdict_path, verdict_bytes)?;

    Ok(AnalyzeOutput {
        curve_path,
        verdict_path,
        n_shots: shots.len(),
        n_events: shots.iter().map(|s| s.len()).sum(),
    })
}

/// Convenience used by tests: analyze a file that sits in `dir`.
pub fn default_output_dir(events_path: &Path) -> PathBuf {
    events_path
        .parent()
        .map(|p| p.to_path_buf())
        .unwrap_or_else(|| PathBuf::from("."))
}
