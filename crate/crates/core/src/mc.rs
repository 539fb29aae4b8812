//! Fan-out of Monte Carlo trials over independent streams.
//!
//! Trials are split into `streams` contiguous chunks, stream `s` drawing from
//! [`StreamKey`]`(seed, s)`. Workers process whole streams and the results come
//! back ordered by stream id, so a fixed plan gives the same merged estimate
//! for any number of threads.

use serde::{Deserialize, Serialize};

use crate::rng::StreamKey;

/// Environment variable capping the number of worker threads.
pub const THREADS_ENV: &str = "WINDSTAT_THREADS";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct McPlan {
    pub seed: u64,
    pub streams: u64,
    pub trials: u64,
}

impl McPlan {
    pub fn new(seed: u64, streams: u64, trials: u64) -> Self {
        Self { seed, streams: streams.max(1), trials }
    }

    /// `(key, number of draws)` for each stream.
    pub fn chunks(&self) -> Vec<(StreamKey, u64)> {
        let base = self.trials / self.streams;
        let extra = self.trials % self.streams;
        (0..self.streams)
            .map(|s| (StreamKey::new(self.seed, s), base + u64::from(s < extra)))
            .collect()
    }
}

fn thread_cap() -> Option<usize> {
    std::env::var(THREADS_ENV).ok()?.parse().ok().filter(|&n: &usize| n > 0)
}

/// Runs `work(key, draws)` for every stream and returns the results in stream
/// order.
pub fn run_streams<T, F>(plan: &McPlan, work: F) -> Vec<T>
where
    T: Send,
    F: Fn(StreamKey, u64) -> T + Sync + Send,
{
    let chunks = plan.chunks();
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        let go = || chunks.par_iter().map(|&(k, n)| work(k, n)).collect::<Vec<T>>();
        match thread_cap().and_then(|n| rayon::ThreadPoolBuilder::new().num_threads(n).build().ok()) {
            Some(pool) => pool.install(go),
            None => go(),
        }
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = thread_cap();
        chunks.iter().map(|&(k, n)| work(k, n)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chunks_cover_all_trials() {
        let plan = McPlan::new(1, 7, 100);
        let c = plan.chunks();
        assert_eq!(c.len(), 7);
        assert_eq!(c.iter().map(|x| x.1).sum::<u64>(), 100);
        assert!(c.iter().all(|x| x.1 == 14 || x.1 == 15));
        assert_eq!(c[3].0, StreamKey::new(1, 3));
    }

    #[test]
    fn results_in_stream_order() {
        let plan = McPlan::new(9, 16, 160);
        let out = run_streams(&plan, |k, n| (k.stream_id, n));
        assert_eq!(out.iter().map(|x| x.0).collect::<Vec<_>>(), (0..16).collect::<Vec<_>>());
    }
}
