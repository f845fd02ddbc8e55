//! Data-parallel helpers. With the `parallel` feature the work is spread over
//! the rayon pool; without it (or with `parallel = false`) it runs in order.
//! Results always come back in index order.

/// Whether this build can run work in parallel.
pub fn is_enabled() -> bool {
    cfg!(feature = "parallel")
}

/// `(0..n).map(f)`, in parallel when requested and available.
pub fn map_range<T, F>(n: usize, parallel: bool, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if parallel && n > 1 {
        use rayon::prelude::*;
        return (0..n).into_par_iter().map(f).collect();
    }
    let _ = parallel;
    (0..n).map(f).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_is_preserved() {
        let seq = map_range(100, false, |i| i * i);
        let par = map_range(100, true, |i| i * i);
        assert_eq!(seq, par);
    }
}
