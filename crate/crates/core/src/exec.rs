//! Deterministic work distribution.
//!
//! Every parallel site in this crate maps an index range to a value vector
//! and reduces *sequentially* in index order afterwards.  Results are
//! therefore bit-identical for any worker count: threads only decide who
//! computes which slot, never the order of the floating-point reduction.
//!
//! `BERGMAN_LAB_THREADS` caps the worker count (useful for reproducibility
//! experiments); it never changes results, only wall time.

#[cfg(feature = "parallel")]
use std::sync::OnceLock;

#[cfg(feature = "parallel")]
fn pool() -> Option<&'static rayon::ThreadPool> {
    static POOL: OnceLock<Option<rayon::ThreadPool>> = OnceLock::new();
    POOL.get_or_init(|| {
        let n: usize = std::env::var("BERGMAN_LAB_THREADS").ok()?.parse().ok()?;
        if n == 0 {
            return None;
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build().ok()
    })
    .as_ref()
}

/// Evaluate `f` on `0..n`, collecting results in index order.
#[cfg(feature = "parallel")]
pub fn map_indexed<R: Send, F: Fn(usize) -> R + Sync>(n: usize, f: F) -> Vec<R> {
    use rayon::prelude::*;
    match pool() {
        Some(p) => p.install(|| (0..n).into_par_iter().map(&f).collect()),
        None => (0..n).into_par_iter().map(&f).collect(),
    }
}

#[cfg(not(feature = "parallel"))]
pub fn map_indexed<R: Send, F: Fn(usize) -> R + Sync>(n: usize, f: F) -> Vec<R> {
    map_indexed_seq(n, f)
}

/// Single-threaded twin of [`map_indexed`]; the reference path for the
/// determinism tests and the benchmark baseline.
pub fn map_indexed_seq<R: Send, F: Fn(usize) -> R + Sync>(n: usize, f: F) -> Vec<R> {
    (0..n).map(f).collect()
}

/// Kahan–Babuška–Neumaier compensated sum over a fixed slice order.
pub fn compensated_sum(terms: &[f64]) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for &x in terms {
        let t = sum + x;
        comp += if sum.abs() >= x.abs() { (sum - t) + x } else { (x - t) + sum };
        sum = t;
    }
    sum + comp
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn map_matches_sequential_bitwise() {
        let f = |i: usize| (i as f64).sin() * (i as f64 + 0.5).sqrt();
        let a = map_indexed(10_000, f);
        let b = map_indexed_seq(10_000, f);
        assert_eq!(a, b);
    }

    #[test]
    fn compensated_sum_beats_naive() {
        // 1 + 1e-16 * 10^8 accumulated naively loses the small terms entirely.
        let mut terms = vec![1.0f64];
        terms.extend(std::iter::repeat(1e-16).take(100_000_000 / 1000)); // keep the test fast
        let exact = 1.0 + 1e-16 * (terms.len() - 1) as f64;
        let got = compensated_sum(&terms);
        assert!((got - exact).abs() <= f64::EPSILON * exact);
    }

    #[test]
    fn compensated_sum_empty_is_zero() {
        assert_eq!(compensated_sum(&[]), 0.0);
    }
}
