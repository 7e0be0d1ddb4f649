//! Trial fan-out. With the `parallel` feature (default) trials run on the
//! rayon pool; without it they run in order on the calling thread. Each trial
//! gets its own seed, so results are identical either way.

/// Seed for trial `i` of a batch seeded with `base`.
pub fn trial_seed(base: u64, i: u64) -> u64 {
    base ^ i.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// Runs `f(trial_seed(base, i))` for `i in 0..count` on the calling thread.
pub fn map_trials_sequential<T, F>(count: usize, base: u64, f: F) -> Vec<T>
where
    F: Fn(u64) -> T,
{
    (0..count as u64).map(|i| f(trial_seed(base, i))).collect()
}

/// Runs `f(trial_seed(base, i))` for `i in 0..count` on the rayon pool,
/// preserving trial order in the output.
#[cfg(feature = "parallel")]
pub fn map_trials_parallel<T, F>(count: usize, base: u64, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64) -> T + Sync + Send,
{
    use rayon::prelude::*;
    (0..count as u64)
        .into_par_iter()
        .map(|i| f(trial_seed(base, i)))
        .collect()
}

/// The default fan-out: parallel when the feature is on.
pub fn map_trials<T, F>(count: usize, base: u64, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        map_trials_parallel(count, base, f)
    }
    #[cfg(not(feature = "parallel"))]
    {
        map_trials_sequential(count, base, f)
    }
}

/// Same as [`map_trials`] over explicit items.
pub fn map_items<I, T, F>(items: &[I], f: F) -> Vec<T>
where
    I: Sync,
    T: Send,
    F: Fn(&I) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        items.par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        items.iter().map(f).collect()
    }
}
