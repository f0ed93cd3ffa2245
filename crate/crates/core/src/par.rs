//! Data-parallel helpers with a sequential fallback.
//!
//! With the `parallel` feature (default) [`Execution::Parallel`] fans work out
//! over rayon; without it every call runs on the current thread. Results are
//! always returned in input order, so the choice never changes an outcome.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    Sequential,
    #[default]
    Parallel,
}

impl Execution {
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Execution::Parallel
    }
}

/// Maps `f` over `0..n`, preserving index order in the output.
pub fn map_range<T, F>(exec: Execution, n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        return (0..n).into_par_iter().map(f).collect();
    }
    let _ = exec;
    (0..n).map(f).collect()
}

/// Maps `f` over a slice, preserving order.
pub fn map_slice<I, T, F>(exec: Execution, items: &[I], f: F) -> Vec<T>
where
    I: Sync,
    T: Send,
    F: Fn(&I) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        return items.par_iter().map(f).collect();
    }
    let _ = exec;
    items.iter().map(f).collect()
}

/// Runs `f` inside a pool of `workers` threads (0 = rayon default).
pub fn with_workers<R: Send>(workers: usize, f: impl FnOnce() -> R + Send) -> R {
    #[cfg(feature = "parallel")]
    if workers > 0 {
        if let Ok(pool) = rayon::ThreadPoolBuilder::new().num_threads(workers).build() {
            return pool.install(f);
        }
    }
    let _ = workers;
    f()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn both_modes_agree() {
        let seq = map_range(Execution::Sequential, 1000, |i| i * i);
        let par = map_range(Execution::Parallel, 1000, |i| i * i);
        assert_eq!(seq, par);
        let s: Vec<u32> = (0..50).collect();
        assert_eq!(
            map_slice(Execution::Sequential, &s, |x| x + 1),
            map_slice(Execution::Parallel, &s, |x| x + 1)
        );
        assert_eq!(with_workers(2, || 5), 5);
    }
}
