//! Data-parallel helpers with a sequential fallback.
//!
//! With the `parallel` feature (default) pointwise maps and per-line FFT
//! passes run on rayon. Reductions are never split across threads, so every
//! result is bit-identical regardless of worker count.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[cfg(feature = "parallel")]
const MIN_LEN: usize = 256;

/// `(0..n).map(f).collect()`, possibly in parallel.
#[cfg(feature = "parallel")]
pub fn map_indexed<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    (0..n).into_par_iter().with_min_len(MIN_LEN).map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub fn map_indexed<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    (0..n).map(f).collect()
}

/// Fallible variant of [`map_indexed`]; returns the error with the lowest
/// index when several points fail.
pub fn try_map_indexed<T, E, F>(n: usize, f: F) -> Result<Vec<T>, E>
where
    T: Send,
    E: Send,
    F: Fn(usize) -> Result<T, E> + Sync + Send,
{
    map_indexed(n, f).into_iter().collect()
}

/// Applies `f` to consecutive chunks of length `chunk`, giving each worker
/// its own scratch value built by `init`.
#[cfg(feature = "parallel")]
pub fn for_each_chunk_init<T, S, I, F>(data: &mut [T], chunk: usize, init: I, f: F)
where
    T: Send,
    I: Fn() -> S + Sync + Send,
    F: Fn(&mut S, &mut [T]) + Sync + Send,
{
    data.par_chunks_mut(chunk).with_min_len(MIN_LEN.div_ceil(chunk)).for_each_init(init, f);
}

#[cfg(not(feature = "parallel"))]
pub fn for_each_chunk_init<T, S, I, F>(data: &mut [T], chunk: usize, init: I, f: F)
where
    T: Send,
    I: Fn() -> S + Sync + Send,
    F: Fn(&mut S, &mut [T]) + Sync + Send,
{
    let mut scratch = init();
    for c in data.chunks_mut(chunk) {
        f(&mut scratch, c);
    }
}

/// Applies `f(k, chunk)` to the `k`-th chunk of length `chunk`.
#[cfg(feature = "parallel")]
pub fn for_each_chunk_indexed<T, F>(data: &mut [T], chunk: usize, f: F)
where
    T: Send,
    F: Fn(usize, &mut [T]) + Sync + Send,
{
    data.par_chunks_mut(chunk).with_min_len(MIN_LEN.div_ceil(chunk)).enumerate().for_each(|(k, c)| f(k, c));
}

#[cfg(not(feature = "parallel"))]
pub fn for_each_chunk_indexed<T, F>(data: &mut [T], chunk: usize, f: F)
where
    T: Send,
    F: Fn(usize, &mut [T]) + Sync + Send,
{
    data.chunks_mut(chunk).enumerate().for_each(|(k, c)| f(k, c));
}

/// Runs `f` on a dedicated pool with `workers` threads (`None` = rayon's
/// global default). Without the `parallel` feature this just calls `f`.
#[cfg(feature = "parallel")]
pub fn with_workers<R, F>(workers: Option<usize>, f: F) -> R
where
    R: Send,
    F: FnOnce() -> R + Send,
{
    match workers {
        Some(n) if n > 0 => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(f),
            Err(_) => f(),
        },
        _ => f(),
    }
}

#[cfg(not(feature = "parallel"))]
pub fn with_workers<R, F>(_workers: Option<usize>, f: F) -> R
where
    R: Send,
    F: FnOnce() -> R + Send,
{
    f()
}

pub fn is_parallel() -> bool {
    cfg!(feature = "parallel")
}
