//! Deterministic chunked parallelism.
//!
//! Per-element work is mapped in parallel into index-ordered buffers and
//! reduced sequentially by the caller, so results are bit-identical for
//! every thread count.

use std::sync::atomic::{AtomicUsize, Ordering};

static THREAD_LIMIT: AtomicUsize = AtomicUsize::new(1);

/// Sets the maximum number of worker threads (1 = sequential).
pub fn set_threads(n: usize) {
    THREAD_LIMIT.store(n.max(1), Ordering::Relaxed);
}

pub fn threads() -> usize {
    THREAD_LIMIT.load(Ordering::Relaxed)
}

/// Computes `f(i)` for `i in 0..n` into a Vec, splitting the index range
/// over at most [`threads`] scoped workers. Chunk results are concatenated
/// in index order.
pub fn map_indexed<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync,
{
    let workers = threads().min(n.max(1));
    if workers <= 1 || n < 1024 {
        return (0..n).map(f).collect();
    }
    let chunk = n.div_ceil(workers);
    let mut out = Vec::with_capacity(n);
    std::thread::scope(|scope| {
        let mut handles = Vec::with_capacity(workers);
        for w in 0..workers {
            let lo = w * chunk;
            let hi = ((w + 1) * chunk).min(n);
            let f = &f;
            handles.push(scope.spawn(move || (lo..hi).map(f).collect::<Vec<T>>()));
        }
        for h in handles {
            out.extend(h.join().expect("worker panicked"));
        }
    });
    out
}
