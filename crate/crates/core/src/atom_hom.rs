//! Kinematics for the atomic interferometer: the free-fall frame
//! transformation, Bragg π (mirror) and π/2 (splitter) pulses as two-mode
//! rotations, and the timing-to-delay mapping that lands the atom
//! experiment on the photonic Hong–Ou–Mandel machinery.
//!
//! Vertical positions in mm, times in ms. Both atoms of a pair are emitted
//! at a common point at t₀ with velocities v and v′; the mirror pulse fires
//! at t₁ and the splitter pulse at t₂, nominally t₂ − t₁ = t₁ − t₀.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock_optics::{
    hom_dip_scan, packet_overlap, splitter_transform, DipScan, DipSource, FockState, SplitterSpec,
};
use crate::types::RngSpec;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrajectorySpec {
    pub t0_ms: f64,
    pub t1_ms: f64,
    pub t2_ms: f64,
    /// Vertical emission velocity of the first atom (mm/ms).
    pub velocity: f64,
    /// Vertical emission velocity of the second atom (mm/ms).
    pub velocity_prime: f64,
    /// Gravitational acceleration (mm/ms²), pointing down (negative z).
    pub gravity: f64,
    /// The standing waves are chirped to be stationary in the falling
    /// frame; the pulse model below assumes this.
    pub freefall_chirp: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    /// The atom emitted with velocity v.
    First,
    /// The atom emitted with velocity v′.
    Second,
}

impl TrajectorySpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.t0_ms < self.t1_ms && self.t1_ms < self.t2_ms) {
            return Err(Error::validation(format!(
                "pulse times must be ordered t0 < t1 < t2, got {} {} {}",
                self.t0_ms, self.t1_ms, self.t2_ms
            )));
        }
        if self.velocity == self.velocity_prime {
            return Err(Error::validation("pair velocities must differ"));
        }
        Ok(())
    }

    /// Lab-frame height of a branch at time t (common emission point z = 0;
    /// the mirror pulse at t₁ reverses the falling-frame velocity).
    pub fn lab_position(&self, branch: Branch, t_ms: f64) -> f64 {
        self.com_position(t_ms) + self.to_freefall().position(branch, t_ms)
    }

    /// Center-of-mass parabola.
    pub fn com_position(&self, t_ms: f64) -> f64 {
        let dt = t_ms - self.t0_ms;
        let v_com = 0.5 * (self.velocity + self.velocity_prime);
        v_com * dt - 0.5 * self.gravity * dt * dt
    }

    fn to_freefall(&self) -> FreefallTrajectory {
        FreefallTrajectory {
            lab: *self,
            half_relative_velocity: 0.5 * (self.velocity - self.velocity_prime),
        }
    }
}

/// The trajectory seen from the frame falling with the pair's center of
/// mass: two straight lines ±u(t − t₀) folded by the mirror pulse at t₁.
#[derive(Debug, Clone, Copy)]
pub struct FreefallTrajectory {
    lab: TrajectorySpec,
    pub half_relative_velocity: f64,
}

impl FreefallTrajectory {
    /// Branch height in the falling frame.
    pub fn position(&self, branch: Branch, t_ms: f64) -> f64 {
        let u = match branch {
            Branch::First => self.half_relative_velocity,
            Branch::Second => -self.half_relative_velocity,
        };
        if t_ms <= self.lab.t1_ms {
            u * (t_ms - self.lab.t0_ms)
        } else {
            u * (self.lab.t1_ms - self.lab.t0_ms) - u * (t_ms - self.lab.t1_ms)
        }
    }

    /// Back to the lab frame (the transformation is parameter-level, so the
    /// round trip is exact).
    pub fn to_lab(&self) -> TrajectorySpec {
        self.lab
    }
}

/// Subtract the center-of-mass parabola: in the falling frame the branches
/// are straight lines z = ±½(v − v′)(t − t₀) until the mirror pulse.
pub fn to_freefall_frame(lab: &TrajectorySpec) -> Result<FreefallTrajectory> {
    lab.validate()?;
    Ok(lab.to_freefall())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PulseArea {
    /// Mirror: swaps the two momentum modes.
    Pi,
    /// Balanced beam splitter between the two momentum modes.
    PiOver2,
}

/// An ideal instantaneous Bragg pulse coupling two momentum modes.
#[derive(Debug, Clone)]
pub struct PulseSpec {
    pub area: PulseArea,
    pub modes: (String, String),
}

/// Apply a Bragg pulse to a Fock state: π is the t = 0 limit of the
/// splitter (a mode swap up to sign), π/2 is the balanced splitter.
pub fn apply_pulse(state: &FockState, pulse: &PulseSpec) -> Result<FockState> {
    let splitter = match pulse.area {
        PulseArea::Pi => SplitterSpec::from_transmission(0.0)?,
        PulseArea::PiOver2 => SplitterSpec::balanced(),
    };
    splitter_transform(state, &splitter, (&pulse.modes.0, &pulse.modes.1))
}

/// The timing detuning mapped to an interferometer delay.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct TimingOverlap {
    /// t₂ − t₁ − (t₁ − t₀): zero at the nominal pulse timing.
    pub detuning_ms: f64,
    /// Arrival-time mismatch at the splitter: δ = 2 × detuning (the two
    /// branches approach at |v − v′| and sit 2u·Δt apart at the pulse).
    pub delay_ms: f64,
    /// Gaussian packet overlap v(δ).
    pub overlap: f64,
}

/// Convert the deviation of t₂ from the nominal t₁ + (t₁ − t₀) into the
/// wave-packet delay entering the HOM coincidence probability.
pub fn overlap_from_timing(traj: &TrajectorySpec, packet_sigma_ms: f64) -> Result<TimingOverlap> {
    traj.validate()?;
    if !(packet_sigma_ms > 0.0) {
        return Err(Error::validation("packet sigma must be > 0"));
    }
    let detuning = traj.t2_ms - traj.t1_ms - (traj.t1_ms - traj.t0_ms);
    let delay = 2.0 * detuning;
    Ok(TimingOverlap {
        detuning_ms: detuning,
        delay_ms: delay,
        overlap: packet_overlap(delay, packet_sigma_ms),
    })
}

/// One row of a t₂ scan.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct T2ScanPoint {
    pub t2_ms: f64,
    pub delay_ms: f64,
}

/// Scan the splitter-pulse time t₂ and run the equivalent HOM dip: each t₂
/// maps to a delay through [`overlap_from_timing`], and the same RNG over
/// the same delays reproduces a direct [`hom_dip_scan`] bit for bit.
pub fn hom_scan_over_t2(
    base: &TrajectorySpec,
    t2_values_ms: &[f64],
    packet_sigma_ms: f64,
    source: DipSource,
    n_shots: usize,
    rng: RngSpec,
) -> Result<(Vec<T2ScanPoint>, DipScan)> {
    base.validate()?;
    if !base.freefall_chirp {
        return Err(Error::validation(
            "the ideal pulse model needs standing waves stationary in the falling frame \
             (freefall_chirp = true)",
        ));
    }
    let mut points = Vec::with_capacity(t2_values_ms.len());
    let mut delays = Vec::with_capacity(t2_values_ms.len());
    for &t2 in t2_values_ms {
        let mut traj = *base;
        traj.t2_ms = t2;
        let timing = overlap_from_timing(&traj, packet_sigma_ms)?;
        points.push(T2ScanPoint {
            t2_ms: t2,
            delay_ms: timing.delay_ms,
        });
        delays.push(timing.delay_ms);
    }
    let scan = hom_dip_scan(&delays, packet_sigma_ms, source, n_shots, rng)?;
    Ok((points, scan))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock_optics::WitnessVerdict;
    use crate::rng::stream;
    use num_complex::Complex64;
    use rand::Rng;
    use std::collections::BTreeMap;

    fn base_traj() -> TrajectorySpec {
        TrajectorySpec {
            t0_ms: 0.0,
            t1_ms: 1.0,
            t2_ms: 2.0,
            velocity: 12.0,
            velocity_prime: 4.0,
            gravity: 9.81e-3,
            freefall_chirp: true,
        }
    }

    #[test]
    fn frame_round_trip_is_identity() {
        let lab = base_traj();
        let frame = to_freefall_frame(&lab).unwrap();
        assert_eq!(frame.to_lab(), lab);
        // positional consistency: lab = com + falling-frame, to 1e-12
        for t in [0.0, 0.3, 0.9, 1.4, 1.9] {
            for branch in [Branch::First, Branch::Second] {
                let lhs = lab.lab_position(branch, t);
                let rhs = lab.com_position(t) + frame.position(branch, t);
                assert!((lhs - rhs).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn zero_gravity_transform_removes_com_velocity_only() {
        let mut lab = base_traj();
        lab.gravity = 0.0;
        let frame = to_freefall_frame(&lab).unwrap();
        let v_com = 0.5 * (lab.velocity + lab.velocity_prime);
        for t in [0.2, 0.7] {
            let expect = lab.velocity * t - v_com * t;
            assert!((frame.position(Branch::First, t) - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn symmetric_pair_branches_mirror_about_zero() {
        let mut lab = base_traj();
        lab.velocity = 5.0;
        lab.velocity_prime = -5.0;
        let frame = to_freefall_frame(&lab).unwrap();
        for t in [0.1, 0.8, 1.5] {
            let a = frame.position(Branch::First, t);
            let b = frame.position(Branch::Second, t);
            assert!((a + b).abs() < 1e-12, "branches not mirrored at t = {t}");
        }
    }

    #[test]
    fn branch_separation_at_mirror_pulse() {
        let lab = base_traj();
        let frame = to_freefall_frame(&lab).unwrap();
        let sep = (frame.position(Branch::First, lab.t1_ms)
            - frame.position(Branch::Second, lab.t1_ms))
        .abs();
        let expect = (lab.velocity - lab.velocity_prime).abs() * (lab.t1_ms - lab.t0_ms);
        assert!((sep - expect).abs() < 1e-12);
        // lab-frame separation agrees (the com motion cancels in differences)
        let lab_sep = (lab.lab_position(Branch::First, lab.t1_ms)
            - lab.lab_position(Branch::Second, lab.t1_ms))
        .abs();
        assert!((lab_sep - expect).abs() < 1e-12);
    }

    fn momentum_state(occ: [u8; 2]) -> FockState {
        FockState::from_occupation(vec!["p".into(), "p'".into()], occ.to_vec()).unwrap()
    }

    fn pulse(area: PulseArea) -> PulseSpec {
        PulseSpec {
            area,
            modes: ("p".to_string(), "p'".to_string()),
        }
    }

    #[test]
    fn pi_pulse_is_a_mirror() {
        let state = momentum_state([1, 0]);
        let out = apply_pulse(&state, &pulse(PulseArea::Pi)).unwrap();
        assert!((out.probability(&[0, 1]) - 1.0).abs() < 1e-12);
        // two mirrors: identity on probabilities
        let back = apply_pulse(&out, &pulse(PulseArea::Pi)).unwrap();
        assert!((back.probability(&[1, 0]) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn missing_mode_is_an_error() {
        let state = momentum_state([1, 0]);
        let bad = PulseSpec {
            area: PulseArea::Pi,
            modes: ("p".to_string(), "q".to_string()),
        };
        assert!(apply_pulse(&state, &bad).is_err());
    }

    #[test]
    fn two_half_pulses_compose_to_a_mirror() {
        let mut gen = stream(RngSpec::new(12, 0), 0xA70B, 0);
        for _ in 0..20 {
            let mut terms = BTreeMap::new();
            let mut norm = 0.0;
            for na in 0..=3u8 {
                for nb in 0..=(3 - na) {
                    let amp = Complex64::new(gen.gen_range(-1.0..1.0), gen.gen_range(-1.0..1.0));
                    norm += amp.norm_sqr();
                    terms.insert(vec![na, nb], amp);
                }
            }
            let scale = norm.sqrt();
            for a in terms.values_mut() {
                *a /= scale;
            }
            let state = FockState::new(vec!["p".into(), "p'".into()], terms).unwrap();
            let twice = apply_pulse(
                &apply_pulse(&state, &pulse(PulseArea::PiOver2)).unwrap(),
                &pulse(PulseArea::PiOver2),
            )
            .unwrap();
            let mirror = apply_pulse(&state, &pulse(PulseArea::Pi)).unwrap();
            for (occ, amp) in mirror.terms() {
                assert!(
                    (twice.amplitude(occ) - amp).norm() < 1e-12,
                    "π/2 twice differs from π at {occ:?}"
                );
            }
        }
    }

    #[test]
    fn half_pulse_on_twin_input_blocks_joint_detection() {
        let state = momentum_state([1, 1]);
        let out = apply_pulse(&state, &pulse(PulseArea::PiOver2)).unwrap();
        assert_eq!(out.probability(&[1, 1]), 0.0);
        assert!((out.probability(&[2, 0]) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn nominal_timing_gives_zero_delay() {
        let traj = base_traj(); // t2 − t1 = t1 − t0 exactly
        let timing = overlap_from_timing(&traj, 0.05).unwrap();
        assert_eq!(timing.delay_ms, 0.0);
        assert_eq!(timing.overlap, 1.0);
        // large detuning: distinguishable packets
        let mut far = traj;
        far.t2_ms = 3.0;
        let timing = overlap_from_timing(&far, 0.05).unwrap();
        assert!(timing.overlap < 1e-10);
    }

    #[test]
    fn delay_matches_brute_force_crossing_time() {
        let mut traj = base_traj();
        traj.t2_ms = 2.37;
        let frame = to_freefall_frame(&traj).unwrap();
        // bisect for the post-mirror zero crossing of each branch
        let crossing = |branch: Branch| -> f64 {
            let mut lo = traj.t1_ms;
            let mut hi = traj.t1_ms + 10.0;
            let sign = frame.position(branch, lo).signum();
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if (frame.position(branch, mid) * sign) > 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            0.5 * (lo + hi)
        };
        let t_star_a = crossing(Branch::First);
        let t_star_b = crossing(Branch::Second);
        assert!((t_star_a - t_star_b).abs() < 1e-9, "branches cross together");
        let oracle_delay = 2.0 * (traj.t2_ms - t_star_a);
        let timing = overlap_from_timing(&traj, 0.05).unwrap();
        assert!(
            (timing.delay_ms - oracle_delay).abs() < 1e-9,
            "delay {} vs geometric {}",
            timing.delay_ms,
            oracle_delay
        );
    }

    #[test]
    fn t2_scan_reproduces_direct_dip_scan_bit_for_bit() {
        let base = base_traj();
        let sigma = 0.05;
        // t2 grid: nominal (δ = 0) plus offsets out to ≫ σ
        let t2s: Vec<f64> = [0.0, 0.02, 0.05, 0.1, 0.3]
            .iter()
            .map(|off| 2.0 + off)
            .collect();
        let rng = RngSpec::new(41, 0);
        let (points, scan) =
            hom_scan_over_t2(&base, &t2s, sigma, DipSource::IdealPair, 4000, rng).unwrap();
        let delays: Vec<f64> = points.iter().map(|p| p.delay_ms).collect();
        let direct = hom_dip_scan(&delays, sigma, DipSource::IdealPair, 4000, rng).unwrap();
        assert_eq!(scan.joint_counts, direct.joint_counts);
        assert_eq!(scan.p_joint, direct.p_joint);
        assert_eq!(scan.visibility.witness, WitnessVerdict::QuantumWitness);
        assert_eq!(scan.p_joint[0], 0.0, "dip minimum at the nominal timing");
    }

    #[test]
    fn chirp_flag_is_required_for_the_pulse_model() {
        let mut base = base_traj();
        base.freefall_chirp = false;
        let err = hom_scan_over_t2(
            &base,
            &[2.0, 2.5],
            0.05,
            DipSource::IdealPair,
            10,
            RngSpec::new(1, 0),
        );
        assert!(err.is_err());
    }
}
