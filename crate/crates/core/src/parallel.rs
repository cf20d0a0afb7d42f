//! Data-parallel helpers. With the `parallel` feature these run on rayon;
//! without it they fall back to plain sequential loops with the same results.
//!
//! Nothing here performs a floating-point reduction across items, so output
//! never depends on the thread count.

/// Applies `f` to every element in place.
pub fn update_each<T, F>(items: &mut [T], f: F)
where
    T: Send,
    F: Fn(&mut T) + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        items.par_iter_mut().for_each(f);
    }
    #[cfg(not(feature = "parallel"))]
    {
        items.iter_mut().for_each(f);
    }
}

/// Runs `job` once per chunk on a pool of `threads` workers and returns the
/// results in chunk order.
pub fn map_chunks<C, R, F>(chunks: Vec<C>, threads: usize, job: F) -> Vec<R>
where
    C: Send,
    R: Send,
    F: Fn(C) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        if threads > 1 && chunks.len() > 1 {
            if let Ok(pool) = rayon::ThreadPoolBuilder::new().num_threads(threads).build() {
                return pool.install(|| chunks.into_par_iter().map(&job).collect());
            }
        }
    }
    let _ = threads;
    chunks.into_iter().map(job).collect()
}

/// True when the crate was built with rayon support.
pub const fn is_parallel() -> bool {
    cfg!(feature = "parallel")
}
