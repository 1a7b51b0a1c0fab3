//! Data-parallel helpers with a sequential fallback.
//!
//! With the `parallel` feature (default) the helpers fan out over rayon;
//! without it every call runs on the calling thread. Results are always
//! returned in index order so callers see identical output either way.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Below this many items the in-place fill stays sequential.
const FILL_GRAIN: usize = 4096;

/// How a batch of independent jobs is executed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    Sequential,
    /// Rayon pool; `jobs = None` uses the global pool.
    #[default]
    Parallel,
    /// Dedicated pool limited to this many threads.
    Jobs(usize),
}

impl Execution {
    pub fn from_jobs(jobs: Option<usize>) -> Self {
        match jobs {
            Some(1) => Execution::Sequential,
            Some(n) => Execution::Jobs(n),
            None => Execution::Parallel,
        }
    }

    /// Whether this build can actually run work concurrently.
    pub fn is_parallel_available() -> bool {
        cfg!(feature = "parallel")
    }
}

/// `(0..n).map(f)` under the chosen execution mode.
pub fn map_indexed<T, F>(n: usize, exec: Execution, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    match exec {
        Execution::Sequential => (0..n).map(f).collect(),
        #[cfg(feature = "parallel")]
        Execution::Parallel => (0..n).into_par_iter().map(f).collect(),
        #[cfg(feature = "parallel")]
        Execution::Jobs(jobs) => match rayon::ThreadPoolBuilder::new().num_threads(jobs).build() {
            Ok(pool) => pool.install(|| (0..n).into_par_iter().map(f).collect()),
            Err(_) => (0..n).map(f).collect(),
        },
        #[cfg(not(feature = "parallel"))]
        _ => (0..n).map(f).collect(),
    }
}

/// `out[i] = f(i)` for every slot, split across threads for large slices.
pub(crate) fn fill_indexed<T, F>(out: &mut [T], f: F)
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if out.len() >= FILL_GRAIN {
        out.par_iter_mut().enumerate().for_each(|(i, slot)| *slot = f(i));
        return;
    }
    let _ = FILL_GRAIN;
    for (i, slot) in out.iter_mut().enumerate() {
        *slot = f(i);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn modes_agree() {
        let f = |i: usize| (i as f64).sqrt() * 3.0;
        let seq = map_indexed(1000, Execution::Sequential, f);
        assert_eq!(seq, map_indexed(1000, Execution::Parallel, f));
        assert_eq!(seq, map_indexed(1000, Execution::Jobs(3), f));
    }

    #[test]
    fn fill_matches_map() {
        let mut big = vec![0usize; 10_000];
        fill_indexed(&mut big, |i| i * 2);
        assert!(big.iter().enumerate().all(|(i, &v)| v == 2 * i));
    }
}
