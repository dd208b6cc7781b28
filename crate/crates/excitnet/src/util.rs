//! Small shared helpers: execution strategy and seed derivation.

/// How fan-out operations (realization checks, basin sampling, sweeps)
/// execute their independent work items.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Parallelism {
    /// Use rayon when the `parallel` feature is enabled, otherwise run
    /// sequentially.
    #[default]
    Auto,
    /// Always run sequentially, even when rayon is available.
    Sequential,
}

/// Maps `f` over `items`, in parallel when requested and available.
/// Output order always matches input order.
pub(crate) fn maybe_par_map<I, O, F>(items: &[I], par: Parallelism, f: F) -> Vec<O>
where
    I: Sync,
    O: Send,
    F: Fn(&I) -> O + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        if par == Parallelism::Auto {
            return items.par_iter().map(f).collect();
        }
    }
    let _ = par;
    items.iter().map(f).collect()
}

/// Derives a stream seed from a base seed and an index (splitmix64 finalizer).
/// Used so that grid cells / repetitions get independent, reproducible RNG
/// streams regardless of execution order.
pub(crate) fn derive_seed(base: u64, index: u64) -> u64 {
    let mut z = base
        .wrapping_add(0x9e37_79b9_7f4a_7c15)
        .wrapping_add(index.wrapping_mul(0xbf58_476d_1ce4_e5b9));
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
