//! Data-parallel helpers with a sequential fallback.
//!
//! With the `parallel` feature the sweeps run on the rayon pool unless
//! parallelism has been switched off at runtime through [`set_parallel`].
//! Results are always collected in index order, so outputs never depend on
//! scheduling.

use std::sync::atomic::{AtomicBool, Ordering};

static ENABLED: AtomicBool = AtomicBool::new(true);

/// Enable or disable parallel execution at runtime. Without the `parallel`
/// feature this is a no-op and everything runs sequentially.
pub fn set_parallel(enabled: bool) {
    ENABLED.store(enabled, Ordering::Relaxed);
    #[cfg(feature = "parallel")]
    {
        let par = if enabled { faer::Par::rayon(0) } else { faer::Par::Seq };
        faer::set_global_parallelism(par);
    }
}

pub fn is_parallel() -> bool {
    cfg!(feature = "parallel") && ENABLED.load(Ordering::Relaxed)
}

/// Configure the global worker pool. Only the first call has an effect.
pub fn init_pool(jobs: Option<usize>) {
    #[cfg(feature = "parallel")]
    if let Some(n) = jobs {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
        if n <= 1 {
            set_parallel(false);
        }
    }
    #[cfg(not(feature = "parallel"))]
    let _ = jobs;
}

/// `(0..n).map(f)` evaluated in parallel when enabled, returned in index order.
pub fn map_range<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if is_parallel() {
        use rayon::prelude::*;
        return (0..n).into_par_iter().map(f).collect();
    }
    (0..n).map(f).collect()
}

/// `items.iter().map(f)` evaluated in parallel when enabled.
pub fn map_slice<I, T, F>(items: &[I], f: F) -> Vec<T>
where
    I: Sync,
    T: Send,
    F: Fn(&I) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if is_parallel() {
        use rayon::prelude::*;
        return items.par_iter().map(f).collect();
    }
    items.iter().map(f).collect()
}

/// Fallible variant of [`map_range`]; the first error in index order wins.
pub fn try_map_range<T, E, F>(n: usize, f: F) -> Result<Vec<T>, E>
where
    T: Send,
    E: Send,
    F: Fn(usize) -> Result<T, E> + Sync + Send,
{
    map_range(n, f).into_iter().collect()
}
