//! Data-parallel map with a sequential fallback.
//!
//! With the default `parallel` feature the work is spread over rayon; without
//! it (or with `parallel == false` at runtime) the same closure runs
//! sequentially. Reductions downstream always fold the returned `Vec` in input
//! order, so results are identical either way.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Map `f` over `items`, in parallel when both the feature and the flag allow.
pub fn map_maybe_par<T, U, F>(parallel: bool, items: Vec<T>, f: F) -> Vec<U>
where
    T: Send,
    U: Send,
    F: Fn(T) -> U + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        if parallel {
            return items.into_par_iter().map(f).collect();
        }
    }
    let _ = parallel;
    items.into_iter().map(f).collect()
}

/// Map `f` over `0..n`.
pub fn map_range_maybe_par<U, F>(parallel: bool, n: usize, f: F) -> Vec<U>
where
    U: Send,
    F: Fn(usize) -> U + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        if parallel {
            return (0..n).into_par_iter().map(f).collect();
        }
    }
    let _ = parallel;
    (0..n).map(f).collect()
}

/// Configure the global worker count from the `ASSOUAD_THREADS` env var
/// (0 or unset means automatic). Safe to call more than once.
pub fn init_thread_pool_from_env() {
    #[cfg(feature = "parallel")]
    {
        if let Ok(v) = std::env::var("ASSOUAD_THREADS") {
            if let Ok(n) = v.trim().parse::<usize>() {
                if n > 0 {
                    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parallel_and_sequential_agree() {
        let xs: Vec<u64> = (0..1000).collect();
        let seq = map_maybe_par(false, xs.clone(), |x| x * x);
        let par = map_maybe_par(true, xs, |x| x * x);
        assert_eq!(seq, par);
    }
}
