//! Data-parallel helpers with a sequential fallback.
//!
//! With the `parallel` feature the helpers dispatch to rayon; without it, or
//! inside [`run_sequential`], they iterate on the calling thread. Work is always
//! split into fixed-size chunks and partial results are combined in chunk
//! order, so floating-point reductions are bit-identical in both modes and
//! across thread counts.

use std::cell::Cell;
use std::ops::Range;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Rows per work unit for row-parallel loops.
pub const CHUNK: usize = 1024;

thread_local! {
    static FORCE_SEQUENTIAL: Cell<bool> = const { Cell::new(false) };
}

/// Run `f` with every helper in this module forced onto the calling thread.
pub fn run_sequential<R>(f: impl FnOnce() -> R) -> R {
    struct Reset(bool);
    impl Drop for Reset {
        fn drop(&mut self) {
            FORCE_SEQUENTIAL.with(|c| c.set(self.0));
        }
    }
    let prev = FORCE_SEQUENTIAL.with(|c| c.replace(true));
    let _reset = Reset(prev);
    f()
}

pub fn is_parallel() -> bool {
    cfg!(feature = "parallel") && !FORCE_SEQUENTIAL.with(|c| c.get())
}

/// Run `f` on a dedicated pool of `threads` workers (`None`: rayon's default).
pub fn with_threads<R: Send>(threads: Option<usize>, f: impl FnOnce() -> R + Send) -> R {
    #[cfg(feature = "parallel")]
    {
        if let Some(t) = threads {
            let pool = rayon::ThreadPoolBuilder::new().num_threads(t.max(1)).build().expect("thread pool construction");
            return pool.install(f);
        }
    }
    let _ = threads;
    f()
}

/// Apply `f` to consecutive chunks of `0..len`; results come back in chunk order.
pub fn map_chunks<T, F>(len: usize, chunk: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(Range<usize>) -> T + Sync + Send,
{
    let chunk = chunk.max(1);
    let n_chunks = len.div_ceil(chunk);
    let range = move |c: usize| c * chunk..((c + 1) * chunk).min(len);
    #[cfg(feature = "parallel")]
    if is_parallel() && n_chunks > 1 {
        return (0..n_chunks).into_par_iter().map(|c| f(range(c))).collect();
    }
    (0..n_chunks).map(|c| f(range(c))).collect()
}

/// Apply `f` to every index in `0..len`, preserving order.
pub fn map_indices<T, F>(len: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if is_parallel() && len > 1 {
        return (0..len).into_par_iter().map(f).collect();
    }
    (0..len).map(f).collect()
}

/// Mutate `data` in chunks of `chunk` elements; `f` receives the chunk's start offset.
pub fn for_each_chunk_mut<T, F>(data: &mut [T], chunk: usize, f: F)
where
    T: Send,
    F: Fn(usize, &mut [T]) + Sync + Send,
{
    let chunk = chunk.max(1);
    #[cfg(feature = "parallel")]
    if is_parallel() && data.len() > chunk {
        data.par_chunks_mut(chunk).enumerate().for_each(|(c, s)| f(c * chunk, s));
        return;
    }
    for (c, s) in data.chunks_mut(chunk).enumerate() {
        f(c * chunk, s);
    }
}

/// Deterministic chunked sum of `f` over `0..len`.
pub fn sum_chunks<F>(len: usize, chunk: usize, f: F) -> f64
where
    F: Fn(Range<usize>) -> f64 + Sync + Send,
{
    map_chunks(len, chunk, f).into_iter().sum()
}
