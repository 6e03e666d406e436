//! Deterministic parallel execution over trial indices.
//!
//! Results are always gathered in trial order, so any reduction applied to
//! them is independent of the number of workers.

use std::ops::Range;

use rayon::prelude::*;

const BATCH: u64 = 256;

fn pool(workers: usize) -> rayon::ThreadPool {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .expect("thread pool")
}

/// Evaluates `f` on every trial index in `trials`, returning outputs in index
/// order.
pub fn map_trials<T, F>(workers: usize, trials: Range<u64>, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64) -> T + Sync + Send,
{
    if workers <= 1 {
        return trials.map(f).collect();
    }
    let batches: Vec<Range<u64>> = (trials.start..trials.end)
        .step_by(BATCH as usize)
        .map(|lo| lo..(lo + BATCH).min(trials.end))
        .collect();
    let chunks: Vec<Vec<T>> = pool(workers).install(|| batches.into_par_iter().map(|r| r.map(&f).collect()).collect());
    chunks.into_iter().flatten().collect()
}

/// Maps batches of trials to partial aggregates and folds them in batch
/// order. `init` is the identity of `merge`.
pub fn fold_trials<A, F, M>(workers: usize, trials: Range<u64>, batch: u64, init: A, f: F, merge: M) -> A
where
    A: Send + Clone,
    F: Fn(Range<u64>) -> A + Sync + Send,
    M: Fn(A, A) -> A,
{
    let batches: Vec<Range<u64>> = (trials.start..trials.end)
        .step_by(batch.max(1) as usize)
        .map(|lo| lo..(lo + batch.max(1)).min(trials.end))
        .collect();
    let parts: Vec<A> = if workers <= 1 {
        batches.into_iter().map(&f).collect()
    } else {
        pool(workers).install(|| batches.into_par_iter().map(&f).collect())
    };
    parts.into_iter().fold(init, merge)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_is_independent_of_workers() {
        let f = |i: u64| crate::rng::derive_seed(3, i) as f64 / u64::MAX as f64;
        let a = map_trials(1, 5..2000, f);
        let b = map_trials(8, 5..2000, f);
        assert_eq!(a, b);
        let sum = |w| fold_trials(w, 0..10_000, 97, 0.0f64, |r| r.map(f).sum::<f64>(), |a, b| a + b);
        assert_eq!(sum(1).to_bits(), sum(8).to_bits());
    }
}
