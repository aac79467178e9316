//! Sequential / data-parallel execution of row-wise loops.
//!
//! Every parallel loop in the crate goes through these helpers. Work is
//! always split into the same units regardless of thread count, and each
//! output element is produced by exactly one unit with a fixed summation
//! order, so results are bit-identical between [`Execution::Sequential`]
//! and [`Execution::Parallel`] at any pool size.
//!
//! Without the `parallel` feature, `Parallel` silently runs sequentially.

/// How a data-parallel loop is executed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    Sequential,
    #[default]
    Parallel,
}

impl Execution {
    /// True when work will actually be spread over the rayon pool.
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Execution::Parallel
    }
}

/// Calls `f(chunk_index, chunk)` for consecutive `chunk_len`-sized chunks of `data`.
pub fn for_each_chunk_mut<T, F>(exec: Execution, data: &mut [T], chunk_len: usize, f: F)
where
    T: Send,
    F: Fn(usize, &mut [T]) + Send + Sync,
{
    assert!(chunk_len > 0);
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        use rayon::prelude::*;
        data.par_chunks_mut(chunk_len)
            .enumerate()
            .for_each(|(i, c)| f(i, c));
        return;
    }
    let _ = exec;
    data.chunks_mut(chunk_len)
        .enumerate()
        .for_each(|(i, c)| f(i, c));
}

/// Like [`for_each_chunk_mut`], with per-worker scratch state built by `init`.
pub fn for_each_chunk_mut_init<T, S, I, F>(
    exec: Execution,
    data: &mut [T],
    chunk_len: usize,
    init: I,
    f: F,
) where
    T: Send,
    I: Fn() -> S + Send + Sync,
    F: Fn(&mut S, usize, &mut [T]) + Send + Sync,
{
    assert!(chunk_len > 0);
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        use rayon::prelude::*;
        data.par_chunks_mut(chunk_len)
            .enumerate()
            .for_each_init(&init, |s, (i, c)| f(s, i, c));
        return;
    }
    let _ = exec;
    let mut scratch = init();
    data.chunks_mut(chunk_len)
        .enumerate()
        .for_each(|(i, c)| f(&mut scratch, i, c));
}

/// Ordered map over `0..len`.
pub fn map_indices<R, F>(exec: Execution, len: usize, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(usize) -> R + Send + Sync,
{
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        use rayon::prelude::*;
        return (0..len).into_par_iter().map(f).collect();
    }
    let _ = exec;
    (0..len).map(f).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chunks_cover_everything_once() {
        for exec in [Execution::Sequential, Execution::Parallel] {
            let mut v = vec![0usize; 103];
            for_each_chunk_mut(exec, &mut v, 10, |ci, c| {
                for (k, x) in c.iter_mut().enumerate() {
                    *x += ci * 10 + k;
                }
            });
            assert!(v.iter().enumerate().all(|(i, &x)| i == x));
        }
    }

    #[test]
    fn map_keeps_order() {
        let a = map_indices(Execution::Parallel, 50, |i| i * i);
        let b = map_indices(Execution::Sequential, 50, |i| i * i);
        assert_eq!(a, b);
    }
}
