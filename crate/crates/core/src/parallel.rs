//! Order-preserving work pool for per-block solving.
//!
//! With the `parallel` feature (on by default) work is spread over a rayon
//! pool of `jobs` threads; without it, [`run_parallel`] is [`run_sequential`].
//! Results always come back in input order, and a panicking worker only
//! loses its own item.

use std::panic::{catch_unwind, AssertUnwindSafe};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("worker panicked: {0}")]
pub struct WorkerPanic(pub String);

fn guarded<T, R>(f: &(impl Fn(usize, &T) -> R + Sync), i: usize, item: &T) -> Result<R, WorkerPanic> {
    catch_unwind(AssertUnwindSafe(|| f(i, item))).map_err(|payload| {
        let msg = payload
            .downcast_ref::<&str>()
            .map(|s| s.to_string())
            .or_else(|| payload.downcast_ref::<String>().cloned())
            .unwrap_or_else(|| "non-string panic payload".into());
        WorkerPanic(msg)
    })
}

pub fn run_sequential<T, R>(
    items: &[T],
    f: impl Fn(usize, &T) -> R + Sync,
) -> Vec<Result<R, WorkerPanic>> {
    items
        .iter()
        .enumerate()
        .map(|(i, item)| guarded(&f, i, item))
        .collect()
}

#[cfg(feature = "parallel")]
pub fn run_parallel<T: Sync, R: Send>(
    items: &[T],
    jobs: usize,
    f: impl Fn(usize, &T) -> R + Sync,
) -> Vec<Result<R, WorkerPanic>> {
    use rayon::prelude::*;

    if jobs <= 1 || items.len() <= 1 {
        return run_sequential(items, f);
    }
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(jobs).build() {
        Ok(pool) => pool,
        Err(e) => {
            log::warn!("thread pool unavailable ({e}); running sequentially");
            return run_sequential(items, f);
        }
    };
    pool.install(|| {
        items
            .par_iter()
            .enumerate()
            .map(|(i, item)| guarded(&f, i, item))
            .collect()
    })
}

#[cfg(not(feature = "parallel"))]
pub fn run_parallel<T: Sync, R: Send>(
    items: &[T],
    _jobs: usize,
    f: impl Fn(usize, &T) -> R + Sync,
) -> Vec<Result<R, WorkerPanic>> {
    run_sequential(items, f)
}

/// Worker count to use when none is given.
pub fn default_jobs() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_is_preserved() {
        let items: Vec<u64> = (0..200).collect();
        let work = |i: usize, x: &u64| {
            // Uneven work so completion order differs from input order.
            let spins = (x * 7919) % 5000;
            (0..spins).fold(*x, |a, b| a.wrapping_mul(31).wrapping_add(b)) ^ i as u64
        };
        let seq: Vec<u64> = run_sequential(&items, work).into_iter().map(Result::unwrap).collect();
        for jobs in [1, 2, 8] {
            let par: Vec<u64> = run_parallel(&items, jobs, work).into_iter().map(Result::unwrap).collect();
            assert_eq!(par, seq);
        }
    }

    #[test]
    fn panics_are_isolated() {
        let items = [1, 2, 3, 4];
        let out = run_parallel(&items, 4, |_, &x| {
            if x == 3 {
                panic!("boom");
            }
            x * 10
        });
        assert_eq!(out[0], Ok(10));
        assert_eq!(out[2], Err(WorkerPanic("boom".into())));
        assert_eq!(out[3], Ok(40));
    }
}
