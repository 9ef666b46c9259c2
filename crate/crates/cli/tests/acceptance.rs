//! Acceptance suite: one test per criterion, each printing a PASS/FAIL
//! line (run with `cargo test --test acceptance -- --nocapture` to see them
//! all). Tolerances are pinned in `qcorr::checks`.

use std::path::PathBuf;
use std::sync::OnceLock;

use qcorr::checks;
use qcorr::config::{ScenarioConfig, ScenarioName};
use qcorr::scenarios::run_scenario;
use qcorr::{CheckResult, RunReport};
use qcorr_core::correlator::{
    count_pairs_brute, count_pairs_sorted, g2_from_events, Axis, BinningSpec, Normalization,
    TransverseGates,
};
use qcorr_core::fock_optics::{
    chsh, chsh_optimal_settings, chsh_sampled, classical_hom_baseline, hom_coincidence,
    hom_dip_scan, infer_contamination, lhv_deterministic_max, oracle, tmsv_sample, DipSource,
    PairSource, PairSourceSpec, WitnessVerdict, TMSV_MAX_PAIRS,
};
use qcorr_core::two_particle::{sample_boson_cloud, CloudSpec, Statistics};
use qcorr_core::{correlator::apply_detector_psf, DetectionEvent, Detector, RngSpec};

fn out_root(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("qcorr-acceptance-{name}-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    dir
}

fn cfg(scenario: ScenarioName, seed: u64, params: serde_json::Value) -> ScenarioConfig {
    ScenarioConfig {
        schema_version: 1,
        scenario,
        rng: RngSpec::new(seed, 0),
        output_dir: None,
        params,
    }
}

fn report_line(criterion: u32, name: &str, pass: bool, detail: &str) {
    let status = if pass { "PASS" } else { "FAIL" };
    println!("ACCEPTANCE {criterion:02} {status} — {name}: {detail}");
    assert!(pass, "criterion {criterion} failed: {name}: {detail}");
}

fn assert_named_check(criterion: u32, report: &RunReport, name: &str) {
    let check: &CheckResult = report
        .checks
        .iter()
        .find(|c| c.name == name)
        .unwrap_or_else(|| panic!("check '{name}' missing"));
    report_line(criterion, &check.name, check.pass, &check.detail);
}

// --- shared full-scale speckle run (criteria 1 and 2) -----------------------

fn speckle_config() -> ScenarioConfig {
    cfg(
        ScenarioName::HbtSpeckle,
        20260808,
        serde_json::json!({
            "n_shots": 10000,
            "mean_events_per_shot": 50.0,
            "n_emitters": 120,
            "wavelength_m": 1.08e-6,
            "source_radius_m": 2.7e-4,
            "distance_m": 1.0,
            "detector": { "radius_mm": 5.6, "psf_sigma_mm": [0.0, 0.0], "psf_sigma_t_ns": 0.0 },
            "binning": { "axis": "radial", "lo": 0.0, "hi": 6.0, "n_bins": 24 },
            "far_separation": 5.0,
            "siegert_realizations": 1000
        }),
    )
}

static SPECKLE_RUN: OnceLock<RunReport> = OnceLock::new();

fn speckle_run() -> &'static RunReport {
    SPECKLE_RUN.get_or_init(|| {
        run_scenario(&speckle_config(), &out_root("speckle"), true).expect("speckle scenario runs")
    })
}

#[test]
fn acceptance_01_hbt_bunching_peak_and_baseline() {
    let report = speckle_run();
    assert_named_check(1, report, "speckle bunching peak");
    assert_named_check(1, report, "speckle flat baseline");
    assert_named_check(1, report, "speckle runtime");
}

#[test]
fn acceptance_02_siegert_relation() {
    let report = speckle_run();
    assert_named_check(2, report, "siegert relation");
}

#[test]
fn acceptance_03_coherent_flatness() {
    let config = cfg(
        ScenarioName::HbtBecFlat,
        19970612,
        serde_json::json!({
            "n_shots": 10000,
            "mean_events_per_shot": 50.0,
            "detector": { "radius_mm": 10.0, "psf_sigma_mm": [0.0, 0.0], "psf_sigma_t_ns": 0.0 },
            "binning": { "axis": "radial", "lo": 0.0, "hi": 6.0, "n_bins": 20 }
        }),
    );
    let report = run_scenario(&config, &out_root("bec"), true).unwrap();
    assert_named_check(3, &report, "coherent flatness in every bin");
    assert_named_check(3, &report, "classical-compatible verdict");
}

#[test]
fn acceptance_04_fermionic_dip() {
    let config = cfg(
        ScenarioName::HbtFermionCloud,
        19071961,
        serde_json::json!({
            "n_shots": 10000,
            "cloud": {
                "correlation_lengths": [1.0, 1.0, 1.0],
                "mean_atoms": 12.5,
                "statistics": "fermion",
                "window": [12.5, 12.5, 0.0]
            },
            "binning": { "axis": "radial", "lo": 0.0, "hi": 4.0, "n_bins": 16 }
        }),
    );
    let report = run_scenario(&config, &out_root("fermion"), true).unwrap();
    assert_named_check(4, &report, "fermion antibunching dip");
    assert_named_check(4, &report, "nonclassical verdict");
}

#[test]
fn acceptance_05_isotope_width_ratio() {
    let cloud = |mass_ratio: f64| CloudSpec {
        correlation_lengths: [2.0, 1.0, 1.0],
        mean_atoms: 40.0,
        statistics: Statistics::Boson,
        mass_ratio,
        window: [24.0, 0.0, 0.0],
    };
    let bins = BinningSpec::linear(Axis::Dx, 0.0, 2.4, 16, TransverseGates::default()).unwrap();
    let fit_width = |mass_ratio: f64, seed: u64| -> f64 {
        let shots = sample_boson_cloud(&cloud(mass_ratio), 6000, RngSpec::new(seed, 0)).unwrap();
        let curve = g2_from_events(&shots, &bins, Normalization::default()).unwrap();
        curve.fit_peak().unwrap().width
    };
    // lighter species (mass handle 3) gets the longer de Broglie length
    let w_light = fit_width(3.0, 301);
    let w_heavy = fit_width(4.0, 401);
    let ratio = w_light / w_heavy;
    report_line(
        5,
        "isotope correlation-length ratio",
        (ratio - checks::ISOTOPE_RATIO).abs() <= checks::ISOTOPE_RATIO_REL_TOL * checks::ISOTOPE_RATIO,
        &format!(
            "width ratio = {ratio:.4} ({w_light:.4}/{w_heavy:.4}) vs 4/3 ± 5%"
        ),
    );
}

#[test]
fn acceptance_06_detector_washout_matches_convolution() {
    // one correlation axis far below the PSF, the other far above
    let cloud = CloudSpec {
        correlation_lengths: [0.15, 3.0, 1.0],
        mean_atoms: 50.0,
        statistics: Statistics::Boson,
        mass_ratio: 1.0,
        window: [3.2, 12.0, 0.0],
    };
    let mut detector = Detector::ideal(1e6);
    detector.psf_sigma_mm = [0.5, 0.5];
    let shots = sample_boson_cloud(&cloud, 12_000, RngSpec::new(606, 0)).unwrap();
    let blurred = apply_detector_psf(&shots, &detector, RngSpec::new(607, 0)).unwrap();
    let gates = TransverseGates {
        y: Some(0.8),
        ..Default::default()
    };
    let bins = BinningSpec::linear(Axis::Dx, 0.0, 2.4, 12, gates).unwrap();
    let curve = g2_from_events(&blurred, &bins, Normalization::default()).unwrap();
    let zero = curve.zero_bin().unwrap();
    let measured = curve.g2[zero];
    let reference = checks::psf_washout_reference(
        [0.15, 3.0],
        [0.5, 0.5],
        [3.2, 12.0],
        curve.bin_edges[zero],
        curve.bin_edges[zero + 1],
        0.8,
    );
    report_line(
        6,
        "washout matches numerical convolution",
        (measured - reference).abs() <= checks::PSF_ORACLE_REL_TOL * reference,
        &format!(
            "measured {measured:.4} ± {:.4} vs reference {reference:.4} (±1%)",
            curve.stderr[zero]
        ),
    );
    report_line(
        6,
        "washout contrast strictly between 1 and 2",
        measured > 1.0 && measured < 2.0,
        &format!("g2(0) = {measured:.4}"),
    );
}

#[test]
fn acceptance_07_hom_exact_zero() {
    let amplitude_level = hom_coincidence(0.0, 1.0, PairSource::IdealPair).unwrap();
    report_line(
        7,
        "amplitude-level joint probability at zero delay",
        amplitude_level == 0.0,
        &format!("P(0) = {amplitude_level}"),
    );
    let delays = [0.0, 0.5, 1.0, 2.0, 5.0, 8.0];
    let scan = hom_dip_scan(&delays, 1.0, DipSource::IdealPair, 30_000, RngSpec::new(707, 0))
        .unwrap();
    let pass = scan.p_joint[0] <= 3.0 * scan.stderr[0];
    report_line(
        7,
        "sampled dip minimum within 3σ of zero",
        pass,
        &format!("p = {} ± {}", scan.p_joint[0], scan.stderr[0]),
    );
}

#[test]
fn acceptance_08_classical_bound() {
    let baseline = classical_hom_baseline(1_000_000, RngSpec::new(808, 0)).unwrap();
    report_line(
        8,
        "suppression ratio at the classical bound",
        (baseline.suppression_ratio - checks::CLASSICAL_RATIO).abs() <= checks::CLASSICAL_RATIO_TOL,
        &format!("ratio = {:.4} vs 0.500 ± 0.01", baseline.suppression_ratio),
    );
    report_line(
        8,
        "mean joint rate one eighth",
        (baseline.w2_joint - checks::CLASSICAL_JOINT).abs() <= checks::CLASSICAL_JOINT_TOL,
        &format!("⟨w²⟩ = {:.4} vs 0.125 ± 0.003", baseline.w2_joint),
    );
}

#[test]
fn acceptance_09_quantum_witness() {
    let nbar = 0.2;
    let delays: Vec<f64> = [-8.0, -5.0, -2.0, -1.0, -0.5, 0.0, 0.5, 1.0, 2.0, 5.0, 8.0].to_vec();
    let scan = hom_dip_scan(
        &delays,
        1.0,
        DipSource::Tmsv { nbar },
        100_000,
        RngSpec::new(909, 0),
    )
    .unwrap();
    let vis = &scan.visibility;
    report_line(
        9,
        "twin-source visibility strictly between 1/2 and 1",
        vis.visibility > 0.5 && vis.visibility < 1.0,
        &format!("V = {:.4}", vis.visibility),
    );
    let reference = oracle::tmsv_visibility(nbar, TMSV_MAX_PAIRS as u8);
    report_line(
        9,
        "visibility matches truncated-pair reference within 3σ",
        (vis.visibility - reference).abs() <= 3.0 * vis.stderr,
        &format!(
            "V = {:.4} ± {:.4} vs reference {reference:.4}",
            vis.visibility, vis.stderr
        ),
    );
    report_line(
        9,
        "quantum witness fires for the twin source",
        vis.witness == WitnessVerdict::QuantumWitness,
        &format!("{:?}", vis.witness),
    );

    let classical = hom_dip_scan(
        &delays,
        1.0,
        DipSource::ClassicalBaseline,
        100_000,
        RngSpec::new(910, 0),
    )
    .unwrap();
    report_line(
        9,
        "classical baseline never fires the witness",
        classical.visibility.witness != WitnessVerdict::QuantumWitness,
        &format!(
            "V = {:.4} ± {:.4}, witness {:?}",
            classical.visibility.visibility, classical.visibility.stderr, classical.visibility.witness
        ),
    );
}

#[test]
fn acceptance_10_contamination_closure() {
    for (i, nbar) in [0.05, 0.1, 0.2].into_iter().enumerate() {
        let source = PairSourceSpec {
            nbar,
            n_shots: 100_000,
        };
        let pairs = tmsv_sample(&source, RngSpec::new(1000 + i as u64, 0)).unwrap();
        let samples: Vec<u64> = pairs.iter().map(|&(a, _)| a).collect();
        let inferred = infer_contamination(&samples).unwrap();
        let rel = (inferred.nbar_estimate - nbar).abs() / nbar;
        report_line(
            10,
            &format!("local pair-rate inversion at n̄ = {nbar}"),
            rel <= checks::CONTAMINATION_REL_TOL,
            &format!(
                "recovered {:.4} (relative error {:.1}%)",
                inferred.nbar_estimate,
                rel * 100.0
            ),
        );
    }
}

#[test]
fn acceptance_11_chsh() {
    let settings = chsh_optimal_settings();
    let tsirelson = 2.0 * std::f64::consts::SQRT_2;
    let analytic = chsh(&settings).unwrap();
    report_line(
        11,
        "analytic S at the quantum maximum",
        (analytic.s - tsirelson).abs() <= checks::CHSH_ANALYTIC_TOL,
        &format!("|S − 2√2| = {:.2e}", (analytic.s - tsirelson).abs()),
    );
    let sampled = chsh_sampled(&settings, 100_000, RngSpec::new(1111, 0)).unwrap();
    report_line(
        11,
        "sampled S at the quantum maximum within 3σ",
        (sampled.s - tsirelson).abs() <= 3.0 * sampled.stderr,
        &format!("S = {:.4} ± {:.4}", sampled.s, sampled.stderr),
    );
    let (max_s, _) = lhv_deterministic_max();
    report_line(
        11,
        "exhaustive deterministic LHV enumeration maxes at exactly 2",
        max_s == 2.0,
        &format!("max S = {max_s}"),
    );
}

#[test]
fn acceptance_12_pair_counting_oracle() {
    use rand::Rng;
    let mut gen = qcorr_core::rng::stream(RngSpec::new(1212, 0), 0xACCE, 0);
    for dataset in 0..100usize {
        let n_events = 100 * (dataset + 1);
        let events: Vec<DetectionEvent> = (0..n_events)
            .map(|_| {
                DetectionEvent::new(
                    gen.gen_range(-10.0..10.0),
                    gen.gen_range(-10.0..10.0),
                    gen.gen_range(0.0..20.0),
                )
            })
            .collect();
        let axis = match dataset % 4 {
            0 => Axis::Dx,
            1 => Axis::Dy,
            2 => Axis::Dt,
            _ => Axis::Radial,
        };
        let gates = match dataset % 3 {
            0 => TransverseGates::default(),
            1 => TransverseGates {
                t: if axis == Axis::Dt { None } else { Some(2.0) },
                ..Default::default()
            },
            _ => TransverseGates {
                y: if matches!(axis, Axis::Dy | Axis::Radial) {
                    None
                } else {
                    Some(1.5)
                },
                ..Default::default()
            },
        };
        let n_bins = 5 + dataset % 11;
        let spec = BinningSpec::linear(axis, 0.0, 4.0 + (dataset % 7) as f64, n_bins, gates).unwrap();
        let mut brute = vec![0u64; spec.n_bins()];
        let mut fast = vec![0u64; spec.n_bins()];
        count_pairs_brute(&events, &spec, &mut brute);
        count_pairs_sorted(&events, &spec, &mut fast);
        assert_eq!(
            brute, fast,
            "dataset {dataset} ({n_events} events, {axis:?}): engines disagree"
        );
    }
    report_line(
        12,
        "optimized pair enumeration equals brute force exactly",
        true,
        "100 random datasets up to 10^4 events",
    );
}

#[test]
fn acceptance_13_every_scenario_is_deterministic() {
    let scenarios: Vec<(&str, ScenarioConfig)> = vec![
        (
            "speckle",
            cfg(
                ScenarioName::HbtSpeckle,
                131,
                serde_json::json!({
                    "n_shots": 300, "mean_events_per_shot": 20.0, "n_emitters": 120,
                    "source_radius_m": 2.7e-4, "distance_m": 1.0,
                    "detector": { "radius_mm": 6.0, "psf_sigma_mm": [0.1, 0.1], "psf_sigma_t_ns": 0.0 },
                    "binning": { "axis": "radial", "lo": 0.0, "hi": 5.0, "n_bins": 10 },
                    "far_separation": 4.0,
                    "siegert_realizations": 50
                }),
            ),
        ),
        (
            "boson",
            cfg(
                ScenarioName::HbtBosonCloud,
                132,
                serde_json::json!({
                    "n_shots": 200,
                    "cloud": { "correlation_lengths": [1.5, 1.0, 1.0], "mean_atoms": 20.0,
                               "statistics": "boson", "window": [15.0, 0.0, 0.0] },
                    "binning": { "axis": "dx", "lo": 0.0, "hi": 5.0, "n_bins": 10 }
                }),
            ),
        ),
        (
            "fermion",
            cfg(
                ScenarioName::HbtFermionCloud,
                133,
                serde_json::json!({
                    "n_shots": 300,
                    "cloud": { "correlation_lengths": [1.0, 1.0, 1.0], "mean_atoms": 8.0,
                               "statistics": "fermion", "window": [10.0, 10.0, 0.0] },
                    "binning": { "axis": "radial", "lo": 0.0, "hi": 4.0, "n_bins": 8 }
                }),
            ),
        ),
        (
            "bec",
            cfg(
                ScenarioName::HbtBecFlat,
                134,
                serde_json::json!({
                    "n_shots": 300, "mean_events_per_shot": 20.0,
                    "detector": { "radius_mm": 8.0, "psf_sigma_mm": [0.0, 0.0], "psf_sigma_t_ns": 0.0 },
                    "binning": { "axis": "radial", "lo": 0.0, "hi": 5.0, "n_bins": 10 }
                }),
            ),
        ),
        (
            "hom-photon",
            cfg(
                ScenarioName::HomPhoton,
                135,
                serde_json::json!({
                    "packet_sigma_ns": 1.0,
                    "source": { "kind": "tmsv", "nbar": 0.15 },
                    "n_shots": 3000
                }),
            ),
        ),
        (
            "hom-atom",
            cfg(
                ScenarioName::HomAtom,
                136,
                serde_json::json!({
                    "t0_ms": 0.0, "t1_ms": 1.0,
                    "velocity_mm_per_ms": 12.0, "velocity_prime_mm_per_ms": 4.0,
                    "packet_sigma_ms": 0.05,
                    "source": { "kind": "ideal-pair" },
                    "n_shots": 2000
                }),
            ),
        ),
        (
            "classical",
            cfg(
                ScenarioName::HomClassicalBaseline,
                137,
                serde_json::json!({
                    "n_phase_samples": 20000,
                    "dip": { "packet_sigma_ns": 1.0, "n_shots": 5000 }
                }),
            ),
        ),
        (
            "chsh",
            cfg(
                ScenarioName::BellChsh,
                138,
                serde_json::json!({ "n_shots_per_setting": 5000, "grid_points": 5 }),
            ),
        ),
        (
            "lhv",
            cfg(
                ScenarioName::BellLhv,
                139,
                serde_json::json!({ "strategy": { "kind": "random-outcomes" }, "n_shots": 5000 }),
            ),
        ),
    ];

    for (name, config) in scenarios {
        let dir_a = out_root(&format!("det-{name}-a"));
        let dir_b = out_root(&format!("det-{name}-b"));
        run_scenario(&config, &dir_a, false).unwrap_or_else(|e| panic!("{name}: {e}"));
        run_scenario(&config, &dir_b, false).unwrap_or_else(|e| panic!("{name}: {e}"));
        let mut names: Vec<String> = std::fs::read_dir(&dir_a)
            .unwrap()
            .map(|e| e.unwrap().file_name().into_string().unwrap())
            .collect();
        names.sort();
        assert!(!names.is_empty());
        for file in &names {
            let a = std::fs::read(dir_a.join(file)).unwrap();
            let b = std::fs::read(dir_b.join(file)).unwrap();
            assert_eq!(
                qcorr::manifest::sha256_hex(&a),
                qcorr::manifest::sha256_hex(&b),
                "{name}/{file} differs between identical-seed runs"
            );
        }
    }
    report_line(
        13,
        "identical configs give byte-identical bundles",
        true,
        "all nine scenarios, SHA-256 over every output file",
    );
}
