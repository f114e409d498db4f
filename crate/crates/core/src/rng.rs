//! Deterministic random streams.
//!
//! Every replication owns a xoshiro256++ generator whose state is expanded
//! from a single 64-bit seed with splitmix64. Uniforms take the top 53 bits
//! of each output, so `uniform()` lies in `[0, 1)`. Standard normals use the
//! Box–Muller transform: each pair of uniforms yields two variates, returned
//! in order (cosine branch first, sine branch second).

use std::f64::consts::TAU;

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// The splitmix64 finalizer (a bijection on `u64`; maps 0 to 0).
pub fn splitmix64_finalize(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// One splitmix64 output from state `x`: increment by the golden gamma,
/// then finalize. `splitmix64_mix(0)` is the generator's first output
/// for seed 0, `0xE220A8397B1DCDAF`.
pub fn splitmix64_mix(x: u64) -> u64 {
    splitmix64_finalize(x.wrapping_add(GOLDEN_GAMMA))
}

/// Advances a splitmix64 state and returns the next output.
pub fn splitmix64_next(state: &mut u64) -> u64 {
    let out = splitmix64_mix(*state);
    *state = state.wrapping_add(GOLDEN_GAMMA);
    out
}

/// Seed of replication `rep_index` under master seed `master`.
///
/// `splitmix64_mix(master ^ (rep_index + 1) * 0x9E3779B97F4A7C15)`; this
/// mapping is part of the reproducibility contract and must never change.
pub fn derive_seed(master: u64, rep_index: u64) -> u64 {
    splitmix64_mix(master ^ rep_index.wrapping_add(1).wrapping_mul(GOLDEN_GAMMA))
}

/// Source of randomness consumed by the simulator.
pub trait RandomStream {
    fn next_u64(&mut self) -> u64;

    /// Uniform draw in `[0, 1)` with 53 bits of precision.
    fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Standard normal draw.
    fn standard_normal(&mut self) -> f64;
}

/// xoshiro256++ (Blackman & Vigna) with a Box–Muller normal cache.
#[derive(Debug, Clone, PartialEq)]
pub struct Xoshiro256PlusPlus {
    s: [u64; 4],
    spare_normal: Option<f64>,
}

impl Xoshiro256PlusPlus {
    /// Expands `seed` into the 256-bit state with four splitmix64 outputs.
    pub fn seed_from_u64(seed: u64) -> Self {
        let mut sm = seed;
        let s = [
            splitmix64_next(&mut sm),
            splitmix64_next(&mut sm),
            splitmix64_next(&mut sm),
            splitmix64_next(&mut sm),
        ];
        Self { s, spare_normal: None }
    }

    pub fn from_state(s: [u64; 4]) -> Self {
        assert!(s.iter().any(|&w| w != 0), "xoshiro state must not be all zero");
        Self { s, spare_normal: None }
    }
}

impl RandomStream for Xoshiro256PlusPlus {
    #[inline]
    fn next_u64(&mut self) -> u64 {
        let s = &mut self.s;
        let result = s[0].wrapping_add(s[3]).rotate_left(23).wrapping_add(s[0]);
        let t = s[1] << 17;
        s[2] ^= s[0];
        s[3] ^= s[1];
        s[1] ^= s[2];
        s[0] ^= s[3];
        s[2] ^= t;
        s[3] = s[3].rotate_left(45);
        result
    }

    fn standard_normal(&mut self) -> f64 {
        if let Some(z) = self.spare_normal.take() {
            return z;
        }
        // 1 - u lies in (0, 1], keeping the logarithm finite.
        let u1 = 1.0 - self.uniform();
        let u2 = self.uniform();
        let radius = (-2.0 * u1.ln()).sqrt();
        let angle = TAU * u2;
        self.spare_normal = Some(radius * angle.sin());
        radius * angle.cos()
    }
}
