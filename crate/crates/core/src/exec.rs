//! Data-parallel helpers with a sequential fallback.
//!
//! With the default `parallel` feature the helpers run on rayon; without it
//! they degrade to plain iterators with identical results. Reductions are
//! written so the outcome is bit-identical regardless of thread count:
//! mapped values are collected in index order and floating-point sums are
//! always taken sequentially over that order, while trajectory counts are
//! integer sums, which are order-independent.

/// Number of worker threads requested via the `FPTC_THREADS` environment
/// variable; `0` or unset means automatic.
pub const THREADS_ENV_VAR: &str = "FPTC_THREADS";

/// Parallelism degree from [`THREADS_ENV_VAR`]: `None` for automatic.
pub fn threads_from_env() -> Option<usize> {
    std::env::var(THREADS_ENV_VAR).ok().and_then(|s| parse_threads(&s))
}

fn parse_threads(s: &str) -> Option<usize> {
    match s.trim().parse::<usize>() {
        Ok(0) | Err(_) => None,
        Ok(n) => Some(n),
    }
}

/// Run `f` under the configured parallelism degree. With the `parallel`
/// feature this installs a scoped rayon pool when an explicit degree is
/// requested; otherwise `f` runs on the global pool. Without the feature `f`
/// just runs sequentially.
#[cfg(feature = "parallel")]
pub fn with_parallelism<R: Send>(threads: Option<usize>, f: impl FnOnce() -> R + Send) -> R {
    match threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .expect("thread pool construction")
            .install(f),
        None => f(),
    }
}

#[cfg(not(feature = "parallel"))]
pub fn with_parallelism<R: Send>(_threads: Option<usize>, f: impl FnOnce() -> R + Send) -> R {
    f()
}

/// Map `f` over `items`, preserving order.
#[cfg(feature = "parallel")]
pub fn map_collect<T: Sync, R: Send>(items: &[T], f: impl Fn(&T) -> R + Send + Sync) -> Vec<R> {
    use rayon::prelude::*;
    items.par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub fn map_collect<T: Sync, R: Send>(items: &[T], f: impl Fn(&T) -> R + Send + Sync) -> Vec<R> {
    items.iter().map(f).collect()
}

/// Map `f` over the index range `0..n`, preserving order.
#[cfg(feature = "parallel")]
pub fn map_indices<R: Send>(n: usize, f: impl Fn(usize) -> R + Send + Sync) -> Vec<R> {
    use rayon::prelude::*;
    (0..n).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub fn map_indices<R: Send>(n: usize, f: impl Fn(usize) -> R + Send + Sync) -> Vec<R> {
    (0..n).map(f).collect()
}

/// Sum `f(i)` over `0..n` as integers (order-independent, so the parallel and
/// sequential results are identical). Work is chunked to amortize scheduling.
#[cfg(feature = "parallel")]
pub fn sum_indexed_u64(n: u64, f: impl Fn(u64) -> u64 + Send + Sync) -> u64 {
    use rayon::prelude::*;
    const CHUNK: u64 = 1024;
    let chunks = n.div_ceil(CHUNK);
    (0..chunks)
        .into_par_iter()
        .map(|c| {
            let lo = c * CHUNK;
            let hi = ((c + 1) * CHUNK).min(n);
            (lo..hi).map(&f).sum::<u64>()
        })
        .sum()
}

#[cfg(not(feature = "parallel"))]
pub fn sum_indexed_u64(n: u64, f: impl Fn(u64) -> u64 + Send + Sync) -> u64 {
    (0..n).map(f).sum()
}
