//! Data-parallel map helpers.
//!
//! With the default `parallel` feature the batch entry points fan out over
//! rayon; without it they degrade to the sequential loop. `map_collect_seq`
//! is always sequential and serves as the baseline in benchmarks.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Map over owned items, collecting results in input order.
#[cfg(feature = "parallel")]
pub fn map_collect<T, U, F>(items: Vec<T>, f: F) -> Vec<U>
where
    T: Send,
    U: Send,
    F: Fn(T) -> U + Sync + Send,
{
    items.into_par_iter().map(f).collect()
}

/// Map over owned items, collecting results in input order.
#[cfg(not(feature = "parallel"))]
pub fn map_collect<T, U, F>(items: Vec<T>, f: F) -> Vec<U>
where
    F: Fn(T) -> U,
{
    items.into_iter().map(f).collect()
}

/// Sequential reference implementation of [`map_collect`].
pub fn map_collect_seq<T, U, F>(items: Vec<T>, f: F) -> Vec<U>
where
    F: Fn(T) -> U,
{
    items.into_iter().map(f).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parallel_and_sequential_agree() {
        let xs: Vec<u64> = (0..100).collect();
        let par = map_collect(xs.clone(), |x| x * x);
        let seq = map_collect_seq(xs, |x| x * x);
        assert_eq!(par, seq);
    }
}
