//! Order-preserving map over independent work items, parallel when the
//! `parallel` feature is on.

/// Apply `f` to every item and return results in input order.
///
/// `parallelism` is the worker count: `1` runs inline on the calling
/// thread, `0` lets the pool pick one thread per core. Without the
/// `parallel` feature everything runs inline.
pub fn par_map<T, R, F>(items: Vec<T>, parallelism: usize, f: F) -> Vec<R>
where
    T: Send,
    R: Send,
    F: Fn(T) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        if parallelism != 1 && items.len() > 1 {
            use rayon::prelude::*;
            let pool = rayon::ThreadPoolBuilder::new().num_threads(parallelism).build();
            if let Ok(pool) = pool {
                return pool.install(|| items.into_par_iter().map(&f).collect());
            }
        }
    }
    let _ = parallelism;
    items.into_iter().map(f).collect()
}

/// Whether this build can run work items concurrently.
pub fn parallel_enabled() -> bool {
    cfg!(feature = "parallel")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn keeps_order_at_any_width() {
        let want: Vec<u64> = (0..200u64).map(|i| i * i).collect();
        for p in [1, 2, 4, 0] {
            assert_eq!(par_map((0..200u64).collect(), p, |i| i * i), want);
        }
    }
}
