//! Counter-based random streams.
//!
//! Reproducibility in this simulator does not come from carefully replaying
//! one sequential generator — that breaks as soon as two configurations
//! consume different numbers of draws (e.g. an estimator that skips the
//! previous-point gradients) or work moves between threads. Instead, every
//! random decision is drawn from a stream addressed by a structured key:
//!
//! ```text
//! (global seed, round, phase, client, step)
//! ```
//!
//! The key is written verbatim into a ChaCha8 cipher key. Because ChaCha is a
//! pseudorandom function of its key, streams with distinct keys are
//! statistically independent, and identical keys always reproduce identical
//! draws — no matter which worker asks, in which order, or how many draws any
//! other stream consumed. This is what makes runs bit-identical across rerun
//! and across thread counts, and what keeps shared-seed sweep cells on
//! identical datasets and client-sampling sequences.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Which part of the simulation a stream feeds. Each phase owns a disjoint
/// family of keys, so adding draws to one phase can never perturb another.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u8)]
pub enum Phase {
    /// Dataset synthesis (client centers, features, labels).
    DataGen = 1,
    /// Shuffle that fixes the held-out evaluation split.
    HoldoutSplit = 2,
    /// Per-round client subset for the gradient-collection phase.
    CollectSubset = 3,
    /// Per-round client subset for the parameter-update phase.
    UpdateSubset = 4,
    /// Per-(round, client, local step) minibatch indices.
    LocalBatch = 5,
    /// Probe points for the gradient-dispersion estimate.
    SigmaProbe = 6,
    /// Random draws consumed by the verification suite.
    Verify = 7,
    /// Restart points for the best-minimum search.
    MinSearch = 8,
}

/// Address of one random stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct StreamKey {
    pub seed: u64,
    pub round: u64,
    pub phase: Phase,
    pub client: u64,
    pub step: u64,
}

impl StreamKey {
    /// Key for draws that are not tied to a particular round/client/step.
    pub fn global(seed: u64, phase: Phase) -> Self {
        StreamKey {
            seed,
            round: 0,
            phase,
            client: 0,
            step: 0,
        }
    }

    /// Materialize the stream this key addresses.
    pub fn rng(self) -> ChaCha8Rng {
        // Lay the key fields out verbatim in the 256-bit cipher key. The
        // client index shares a word with the phase tag; indices up to 2^56
        // are representable, far beyond any realistic federation size.
        debug_assert!(self.client < 1 << 56, "client index exceeds key capacity");
        let mut key = [0u8; 32];
        key[0..8].copy_from_slice(&self.seed.to_le_bytes());
        key[8..16].copy_from_slice(&self.round.to_le_bytes());
        let tagged = ((self.phase as u64) << 56) | self.client;
        key[16..24].copy_from_slice(&tagged.to_le_bytes());
        key[24..32].copy_from_slice(&self.step.to_le_bytes());
        ChaCha8Rng::from_seed(key)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn draw16(key: StreamKey) -> Vec<f64> {
        let mut rng = key.rng();
        (0..16).map(|_| rng.gen::<f64>()).collect()
    }

    #[test]
    fn identical_keys_reproduce_identical_draws() {
        let key = StreamKey {
            seed: 7,
            round: 123,
            phase: Phase::LocalBatch,
            client: 4,
            step: 2,
        };
        assert_eq!(draw16(key), draw16(key));
    }

    #[test]
    fn changing_any_key_field_changes_the_stream() {
        let base = StreamKey {
            seed: 7,
            round: 123,
            phase: Phase::LocalBatch,
            client: 4,
            step: 2,
        };
        let variants = [
            StreamKey { seed: 8, ..base },
            StreamKey { round: 124, ..base },
            StreamKey {
                phase: Phase::CollectSubset,
                ..base
            },
            StreamKey { client: 5, ..base },
            StreamKey { step: 3, ..base },
        ];
        let reference = draw16(base);
        for v in variants {
            assert_ne!(
                draw16(v),
                reference,
                "stream for {v:?} collided with the base key"
            );
        }
    }

    #[test]
    fn draws_are_identical_across_threads() {
        let key = StreamKey::global(99, Phase::SigmaProbe);
        let here = draw16(key);
        let elsewhere = std::thread::spawn(move || draw16(key)).join().unwrap();
        assert_eq!(here, elsewhere);
    }

    #[test]
    fn streams_look_mutually_uncorrelated() {
        // Crude decorrelation check across 64 adjacent keys: the empirical
        // correlation of uniform draws from neighboring rounds should be
        // small. With 1024 samples the standard error is ~0.03, so 0.15 is a
        // five-sigma allowance.
        let mut prev = draw1024(0);
        for round in 1..64 {
            let curr = draw1024(round);
            let n = curr.len() as f64;
            let (mp, mc) = (
                prev.iter().sum::<f64>() / n,
                curr.iter().sum::<f64>() / n,
            );
            let mut cov = 0.0;
            let mut vp = 0.0;
            let mut vc = 0.0;
            for (a, b) in prev.iter().zip(&curr) {
                cov += (a - mp) * (b - mc);
                vp += (a - mp) * (a - mp);
                vc += (b - mc) * (b - mc);
            }
            let corr = cov / (vp * vc).sqrt();
            assert!(
                corr.abs() < 0.15,
                "rounds {} and {} correlate at {corr}",
                round - 1,
                round
            );
            prev = curr;
        }

        fn draw1024(round: u64) -> Vec<f64> {
            let mut rng = StreamKey {
                seed: 5,
                round,
                phase: Phase::DataGen,
                client: 0,
                step: 0,
            }
            .rng();
            (0..1024).map(|_| rng.gen::<f64>()).collect()
        }
    }
}
