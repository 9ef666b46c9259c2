//! Deterministic RNG plumbing.
//!
//! Every stochastic operation derives its generator from an [`RngSpec`]
//! plus a domain tag and an index (usually a shot or realization id). The
//! derivation is a keyed hash, so streams are independent and insensitive
//! to the order in which they are created — shots can be generated in
//! parallel without changing any result.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;

use crate::types::RngSpec;

/// Domain separation tags, one per stochastic operation family.
pub mod domain {
    pub const SPECKLE_PHASES: u64 = 0x5350_4841; // per-realization emitter phases
    pub const SPECKLE_EVENTS: u64 = 0x5350_4556; // thinning candidates
    pub const SPECKLE_SOURCE: u64 = 0x5350_5343; // emitter positions/frequencies
    pub const DETECTOR_PSF: u64 = 0x5053_4621;
    pub const BOSON_CLOUD: u64 = 0x424f_534e;
    pub const FERMION_CLOUD: u64 = 0x4645_524d;
    pub const TOY_MODEL: u64 = 0x544f_594d;
    pub const HOM_SAMPLING: u64 = 0x484f_4d53;
    pub const TMSV_SOURCE: u64 = 0x544d_5356;
    pub const CHSH_SAMPLING: u64 = 0x4348_5348;
    pub const LHV: u64 = 0x4c48_5621;
    pub const CLASSICAL_BASELINE: u64 = 0x434c_4253;
    pub const SHUFFLE: u64 = 0x5348_5546;
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derive an independent ChaCha stream for `(spec, domain, index)`.
pub fn stream(spec: RngSpec, domain: u64, index: u64) -> ChaCha12Rng {
    let mut state = spec.seed;
    // Fold all identifiers into the splitmix chain, then expand to a key.
    for word in [spec.stream_id, domain, index] {
        state ^= splitmix64(&mut state) ^ word.wrapping_mul(0xd1b5_4a32_d192_ed03);
    }
    let mut key = [0u8; 32];
    for chunk in key.chunks_exact_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
    }
    ChaCha12Rng::from_seed(key)
}
