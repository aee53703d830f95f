//! Deterministic random-stream discipline.
//!
//! Every random draw in a run is tied to a named substream derived from the
//! run seed by counter-based splitting: `(seed, domain, a, b)` is expanded
//! through SplitMix64 into a ChaCha8 key. Simulated runs, live runs in
//! handshake mode, and reference loops that follow the same discipline
//! consume bitwise-identical randomness, which is what the zero-delay and
//! live-equivalence checks rely on.
//!
//! Stream map:
//!   * `DOMAIN_ZETA`      — isotropic perturbation of step `t`, key `(t, 0)`
//!   * `DOMAIN_GRAD`      — gradient slot `(t, i)`: first draw is the sample
//!     index theta, the rest is the per-sample noise
//!   * `DOMAIN_LIVE`      — live-mode worker draws, key `(worker, counter)`
//!   * `DOMAIN_SCHEDULE`  — delay-schedule generation, key `(t, i)`
//!   * `DOMAIN_TRIAL`     — per-trial seed derivation in experiments

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub const DOMAIN_ZETA: u64 = 1;
pub const DOMAIN_GRAD: u64 = 2;
pub const DOMAIN_LIVE: u64 = 3;
pub const DOMAIN_SCHEDULE: u64 = 4;
pub const DOMAIN_TRIAL: u64 = 5;

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e3779b97f4a7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

/// Substream for `(seed, domain, a, b)`. Distinct tuples give statistically
/// independent ChaCha8 streams; equal tuples give bitwise-equal streams.
pub fn substream(seed: u64, domain: u64, a: u64, b: u64) -> ChaCha8Rng {
    let mut state = seed ^ 0x6a09e667f3bcc908;
    let mut key = [0u8; 32];
    let words = [
        splitmix64(&mut state) ^ domain.wrapping_mul(0xff51afd7ed558ccd),
        splitmix64(&mut state) ^ a.wrapping_mul(0xc4ceb9fe1a85ec53),
        splitmix64(&mut state) ^ b.wrapping_mul(0x2545f4914f6cdd1d),
        splitmix64(&mut state),
    ];
    for (chunk, w) in key.chunks_exact_mut(8).zip(words) {
        let mut s = w;
        chunk.copy_from_slice(&splitmix64(&mut s).to_le_bytes());
    }
    ChaCha8Rng::from_seed(key)
}

/// d-vector of independent N(0, scale^2) entries.
pub fn normal_vec(rng: &mut impl Rng, dim: usize, scale: f64) -> Vec<f64> {
    (0..dim)
        .map(|_| {
            let z: f64 = rng.sample(StandardNormal);
            scale * z
        })
        .collect()
}

/// Per-sample gradient noise: N(0, (s^2/d) I) conditioned on norm <= 6 s.
///
/// The symmetric truncation keeps the mean at zero exactly and certifies the
/// norm-sub-Gaussian tail with constant s. The rejection loop accepts on the
/// first draw except with probability ~ exp(-18 d).
pub fn truncated_noise(rng: &mut impl Rng, dim: usize, s: f64) -> Vec<f64> {
    if s == 0.0 {
        return vec![0.0; dim];
    }
    let per_coord = s / (dim as f64).sqrt();
    let cap_sq = (6.0 * s) * (6.0 * s);
    loop {
        let v = normal_vec(rng, dim, per_coord);
        if crate::linalg::norm_sq(&v) <= cap_sq {
            return v;
        }
    }
}
