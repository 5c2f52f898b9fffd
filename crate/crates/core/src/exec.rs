//! Data-parallel loops over spatial cells.
//!
//! With the `parallel` feature (on by default) per-cell work is spread over
//! the rayon thread pool; otherwise it runs sequentially. Either way every
//! cell is computed independently and written to its own slot, so results do
//! not depend on the worker count.

use crate::error::Result;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    Sequential,
    /// Uses rayon when the `parallel` feature is enabled, sequential otherwise.
    #[default]
    Parallel,
}

impl Execution {
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Execution::Parallel
    }
}

/// Calls `f(i, row)` for every `width`-sized row of `data`.
pub(crate) fn try_for_each_row<F>(exec: Execution, data: &mut [f64], width: usize, f: F) -> Result<()>
where
    F: Fn(usize, &mut [f64]) -> Result<()> + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        return data
            .par_chunks_mut(width)
            .enumerate()
            .try_for_each(|(i, row)| f(i, row));
    }
    let _ = exec;
    data.chunks_mut(width)
        .enumerate()
        .try_for_each(|(i, row)| f(i, row))
}

/// Same as [`try_for_each_row`] for infallible work.
pub(crate) fn for_each_row<F>(exec: Execution, data: &mut [f64], width: usize, f: F)
where
    F: Fn(usize, &mut [f64]) + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        data.par_chunks_mut(width)
            .enumerate()
            .for_each(|(i, row)| f(i, row));
        return;
    }
    let _ = exec;
    data.chunks_mut(width)
        .enumerate()
        .for_each(|(i, row)| f(i, row));
}

/// `(0..n).map(f).collect()`, in index order.
pub(crate) fn map_indices<T, F>(exec: Execution, n: usize, f: F) -> Vec<T>
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

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sequential_and_parallel_agree() {
        let mut a: Vec<f64> = (0..64).map(|i| i as f64).collect();
        let mut b = a.clone();
        for_each_row(Execution::Sequential, &mut a, 8, |i, r| r.iter_mut().for_each(|x| *x *= i as f64));
        for_each_row(Execution::Parallel, &mut b, 8, |i, r| r.iter_mut().for_each(|x| *x *= i as f64));
        assert_eq!(a, b);
        assert_eq!(
            map_indices(Execution::Sequential, 10, |i| i * i),
            map_indices(Execution::Parallel, 10, |i| i * i)
        );
    }
}
