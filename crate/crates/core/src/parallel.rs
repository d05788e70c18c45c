//! Trial-level parallelism. Results come back in trial order, so any
//! aggregation over them is independent of the worker count.

use rayon::prelude::*;

/// Evaluates `f(0..n)` on `workers` threads (sequentially when `workers <= 1`).
pub fn map_trials<T, F>(n: u64, workers: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64) -> T + Sync + Send,
{
    if workers <= 1 || n <= 1 {
        return (0..n).map(f).collect();
    }
    match rayon::ThreadPoolBuilder::new().num_threads(workers).build() {
        Ok(pool) => pool.install(|| (0..n).into_par_iter().map(&f).collect()),
        Err(_) => (0..n).map(f).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_is_preserved_for_any_worker_count() {
        let seq = map_trials(100, 1, |i| i * i);
        let par = map_trials(100, 4, |i| i * i);
        assert_eq!(seq, par);
    }
}
