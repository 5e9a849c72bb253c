//! Reproducible random streams.
//!
//! Every replication owns a ChaCha8 stream addressed by `(seed, stream id)`,
//! so results do not depend on how replications are spread over threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

pub type SimRng = ChaCha8Rng;

/// Purpose tags keep the streams of different estimators disjoint.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u16)]
pub enum Purpose {
    Skeleton = 1,
    Reference = 2,
    Positivity = 3,
    Exit = 4,
    Scaling = 5,
    Identity = 6,
    Multilevel = 7,
    WienerHopf = 8,
    Auxiliary = 9,
}

pub fn stream(seed: u64, id: u64) -> SimRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

pub fn stream_id(purpose: Purpose, replication: u64) -> u64 {
    ((purpose as u64) << 48) | (replication & ((1 << 48) - 1))
}

pub fn replication_rng(seed: u64, purpose: Purpose, replication: u64) -> SimRng {
    stream(seed, stream_id(purpose, replication))
}

/// Run `f(rep, rng)` for `rep in 0..n` on `workers` threads and return the
/// results in replication order.
pub fn replicate<T, F>(seed: u64, purpose: Purpose, n: usize, workers: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize, &mut SimRng) -> T + Sync + Send,
{
    let run = || {
        (0..n)
            .into_par_iter()
            .map(|rep| {
                let mut rng = replication_rng(seed, purpose, rep as u64);
                f(rep, &mut rng)
            })
            .collect::<Vec<T>>()
    };
    match rayon::ThreadPoolBuilder::new().num_threads(workers.max(1)).build() {
        Ok(pool) => pool.install(run),
        Err(_) => run(),
    }
}
