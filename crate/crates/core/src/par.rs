//! Data-parallel helpers.
//!
//! With the `parallel` feature (default) these dispatch to rayon; without it
//! they run sequentially. Every helper preserves input order, so results never
//! depend on the thread count.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Order-preserving map over an index range.
pub fn map_range<T, F>(len: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        (0..len).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..len).map(f).collect()
    }
}

/// Order-preserving map over a slice.
pub fn map_slice<S, T, F>(items: &[S], f: F) -> Vec<T>
where
    S: Sync,
    T: Send,
    F: Fn(&S) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        items.par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        items.iter().map(f).collect()
    }
}

/// Fallible order-preserving map; returns the error of the lowest failing index.
pub fn try_map_range<T, E, F>(len: usize, f: F) -> Result<Vec<T>, E>
where
    T: Send,
    E: Send,
    F: Fn(usize) -> Result<T, E> + Sync + Send,
{
    map_range(len, f).into_iter().collect()
}

/// Smallest `(value, index)` pair over `0..len`, with NaN treated as `+inf`
/// and ties going to the lowest index.
pub fn argmin_range<F>(len: usize, f: F) -> Option<(usize, f64)>
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    let key = |i: usize| {
        let v = f(i);
        (if v.is_nan() { f64::INFINITY } else { v }, i)
    };
    let better = |a: (f64, usize), b: (f64, usize)| {
        if b.0 < a.0 || (b.0 == a.0 && b.1 < a.1) {
            b
        } else {
            a
        }
    };
    #[cfg(feature = "parallel")]
    let best = (0..len).into_par_iter().map(key).reduce_with(better);
    #[cfg(not(feature = "parallel"))]
    let best = (0..len).map(key).reduce(better);
    best.map(|(v, i)| (i, v))
}

/// Sequential counterpart of [`argmin_range`]; used by benches and as a reference.
pub fn argmin_range_sequential<F>(len: usize, f: F) -> Option<(usize, f64)>
where
    F: Fn(usize) -> f64,
{
    let mut best: Option<(usize, f64)> = None;
    for i in 0..len {
        let mut v = f(i);
        if v.is_nan() {
            v = f64::INFINITY;
        }
        match best {
            Some((_, b)) if v >= b => {}
            _ => best = Some((i, v)),
        }
    }
    best
}
