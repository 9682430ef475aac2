//! Per-worker random streams.
//!
//! Every worker owns one ChaCha8 stream keyed by `(master_seed, worker)`: the
//! master seed selects the key and the worker index selects the ChaCha stream
//! id, so streams never overlap and can be regenerated independently. A
//! scripted variant replays a fixed list of unit draws, which is how the
//! exhaustive oracle walks every noise realisation.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone)]
enum Source {
    Seeded(ChaCha8Rng),
    Scripted { values: Vec<f64>, pos: usize },
}

/// A worker-private source of uniform draws in `[0, 1)`.
#[derive(Debug, Clone)]
pub struct WorkerStream {
    source: Source,
    draws: u64,
}

impl WorkerStream {
    pub fn seeded(master_seed: u64, worker: usize) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
        rng.set_stream(worker as u64);
        Self {
            source: Source::Seeded(rng),
            draws: 0,
        }
    }

    /// Replays `values` in order. Each value must lie in `[0, 1)`.
    ///
    /// Panics when more draws are requested than were scripted.
    pub fn scripted(values: Vec<f64>) -> Self {
        debug_assert!(values.iter().all(|u| (0.0..1.0).contains(u)));
        Self {
            source: Source::Scripted { values, pos: 0 },
            draws: 0,
        }
    }

    /// One stream per worker, all derived from `master_seed`.
    pub fn for_workers(master_seed: u64, workers: usize) -> Vec<Self> {
        (0..workers).map(|w| Self::seeded(master_seed, w)).collect()
    }

    #[inline]
    pub fn next_unit(&mut self) -> f64 {
        self.draws += 1;
        match &mut self.source {
            Source::Seeded(rng) => rng.random::<f64>(),
            Source::Scripted { values, pos } => {
                let u = *values
                    .get(*pos)
                    .unwrap_or_else(|| panic!("scripted stream exhausted after {} draws", pos));
                *pos += 1;
                u
            }
        }
    }

    /// Number of draws consumed so far; the index the next draw will carry.
    pub fn draw_index(&self) -> u64 {
        self.draws
    }
}
