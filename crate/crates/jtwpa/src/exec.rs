//! Data-parallel map with a sequential fallback.
//!
//! Sweeps in this crate are embarrassingly parallel over grid points: every
//! point is profiled independently and order must be preserved. With the
//! default `parallel` feature the work is spread over the rayon pool; built
//! with `--no-default-features` the same call runs sequentially, which is
//! handy for profiling single points and for wasm-style targets.

#[cfg(feature = "parallel")]
pub(crate) fn map_ordered<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> U + Sync + Send,
{
    use rayon::prelude::*;
    items.par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub(crate) fn map_ordered<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    F: Fn(&T) -> U,
{
    items.iter().map(f).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn map_preserves_input_order() {
        let xs: Vec<u64> = (0..1000).collect();
        let ys = map_ordered(&xs, |x| x * x);
        for (i, y) in ys.iter().enumerate() {
            assert_eq!(*y, (i * i) as u64);
        }
    }
}
