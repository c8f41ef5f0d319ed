//! Batch execution over independent work items (multi-seed runs, model
//! grids, sampling audits).
//!
//! Everything in the core library is a single trajectory; batches of
//! trajectories are embarrassingly parallel. [`map_indexed`] runs a closure
//! over `0..n` either sequentially or on the rayon pool. The `parallel`
//! cargo feature (on by default) gates the rayon dependency; without it,
//! [`ExecMode::Parallel`] silently degrades to sequential so callers never
//! need their own cfg checks.

/// How a batch should execute.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExecMode {
    Sequential,
    Parallel,
}

impl ExecMode {
    /// The mode that will actually run: `Parallel` degrades to `Sequential`
    /// when the `parallel` feature is compiled out.
    pub fn effective(self) -> Self {
        if cfg!(feature = "parallel") {
            self
        } else {
            ExecMode::Sequential
        }
    }
}

/// Maps `f` over `0..n`, preserving index order in the output.
pub fn map_indexed<T, F>(mode: ExecMode, n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if mode.effective() == ExecMode::Parallel {
        use rayon::prelude::*;
        return (0..n).into_par_iter().map(f).collect();
    }
    let _ = mode;
    (0..n).map(f).collect()
}

/// Parses a thread-cap setting (the `MINIMAX_CUBIC_THREADS` convention).
pub fn parse_thread_cap(raw: Option<&str>) -> Option<usize> {
    raw.and_then(|s| s.trim().parse::<usize>().ok())
        .filter(|&n| n >= 1)
}

/// Thread cap from the `MINIMAX_CUBIC_THREADS` environment variable, if set
/// to a positive integer.
pub fn thread_cap_from_env() -> Option<usize> {
    parse_thread_cap(std::env::var("MINIMAX_CUBIC_THREADS").ok().as_deref())
}

/// Runs `f` under an optional thread cap. With the `parallel` feature this
/// installs a dedicated rayon pool of `cap` threads; otherwise (or when
/// `cap` is `None`, or pool construction fails) `f` runs as-is.
pub fn run_with_thread_cap<R: Send>(cap: Option<usize>, f: impl FnOnce() -> R + Send) -> R {
    #[cfg(feature = "parallel")]
    if let Some(n) = cap {
        if let Ok(pool) = rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            return pool.install(f);
        }
    }
    let _ = cap;
    f()
}
