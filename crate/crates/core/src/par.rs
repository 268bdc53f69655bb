//! Data-parallel helpers with a sequential fallback.
//!
//! With the `parallel` feature (default) [`Exec::Parallel`] fans work out on
//! the rayon pool; without it every call runs sequentially. Both paths
//! produce the same values in the same order: maps collect by index and
//! reductions combine fixed-size chunks left to right, so results never
//! depend on the thread count.

/// Execution strategy for the data-parallel kernels.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Exec {
    Sequential,
    Parallel,
}

impl Default for Exec {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            Exec::Parallel
        } else {
            Exec::Sequential
        }
    }
}

impl Exec {
    /// True when this strategy actually runs on multiple threads.
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Exec::Parallel
    }
}

/// Maps `f` over `0..n`, preserving index order in the output.
pub fn map_indexed<T, F>(exec: Exec, n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        use rayon::prelude::*;
        return (0..n).into_par_iter().map(f).collect();
    }
    let _ = exec;
    (0..n).map(f).collect()
}

/// Maps `f` over `items`, preserving order.
pub fn map_slice<S, T, F>(exec: Exec, items: &[S], f: F) -> Vec<T>
where
    S: Sync,
    T: Send,
    F: Fn(&S) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        use rayon::prelude::*;
        return items.par_iter().map(f).collect();
    }
    let _ = exec;
    items.iter().map(f).collect()
}

/// Sums per-chunk vectors produced by `f` over `0..n` in chunks of
/// `chunk` indices. Chunk boundaries are independent of the thread count
/// and partial sums are added in chunk order.
pub fn chunked_sum<F>(exec: Exec, n: usize, chunk: usize, dim: usize, f: F) -> Vec<f64>
where
    F: Fn(std::ops::Range<usize>, &mut [f64]) + Sync + Send,
{
    let chunk = chunk.max(1);
    let n_chunks = n.div_ceil(chunk);
    let partials = map_indexed(exec, n_chunks, |c| {
        let mut acc = vec![0.0; dim];
        let start = c * chunk;
        f(start..(start + chunk).min(n), &mut acc);
        acc
    });
    let mut total = vec![0.0; dim];
    for part in &partials {
        for (t, p) in total.iter_mut().zip(part) {
            *t += p;
        }
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn map_preserves_order_under_both_strategies() {
        for exec in [Exec::Sequential, Exec::Parallel] {
            let out = map_indexed(exec, 1000, |i| i * 2);
            assert_eq!(out, (0..1000).map(|i| i * 2).collect::<Vec<_>>());
        }
    }

    #[test]
    fn chunked_sum_is_bit_identical_across_strategies() {
        let values: Vec<f64> = (0..997)
            .map(|i| (i as f64).sin() * 1e-3 + 1.0 / (i + 1) as f64)
            .collect();
        let run = |exec| {
            chunked_sum(exec, values.len(), 16, 2, |range, acc| {
                for i in range {
                    acc[0] += values[i];
                    acc[1] += values[i] * values[i];
                }
            })
        };
        let a = run(Exec::Sequential);
        let b = run(Exec::Parallel);
        assert_eq!(a[0].to_bits(), b[0].to_bits());
        assert_eq!(a[1].to_bits(), b[1].to_bits());
    }
}
