//! Data-parallel kernels. With the `parallel` feature these dispatch to
//! rayon; without it the same chunking runs on the calling thread. Sums are
//! formed per fixed-size chunk and the chunk totals are added in order, so
//! both builds produce bit-identical results.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Elements per reduction chunk and per parallel task.
pub const CHUNK: usize = 2048;

/// Whether this build dispatches to rayon.
pub const fn is_parallel() -> bool {
    cfg!(feature = "parallel")
}

/// `Σ f(i)` over `0..len`, summed chunk by chunk.
pub fn sum_indexed<F>(len: usize, f: F) -> f64
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    let chunks = len.div_ceil(CHUNK);
    let partial = |c: usize| {
        let start = c * CHUNK;
        let end = (start + CHUNK).min(len);
        (start..end).map(&f).sum::<f64>()
    };
    #[cfg(feature = "parallel")]
    let partials: Vec<f64> = if chunks > 1 {
        (0..chunks).into_par_iter().map(partial).collect()
    } else {
        (0..chunks).map(partial).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let partials: Vec<f64> = (0..chunks).map(partial).collect();
    partials.into_iter().sum()
}

/// `max f(i)` over `0..len`; `0` for an empty range. NaN propagates.
pub fn max_indexed<F>(len: usize, f: F) -> f64
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    let fold = |acc: f64, v: f64| if v.is_nan() || acc.is_nan() { f64::NAN } else { acc.max(v) };
    let chunks = len.div_ceil(CHUNK);
    let partial = |c: usize| {
        let start = c * CHUNK;
        let end = (start + CHUNK).min(len);
        (start..end).map(&f).fold(0.0, fold)
    };
    #[cfg(feature = "parallel")]
    let partials: Vec<f64> = (0..chunks).into_par_iter().map(partial).collect();
    #[cfg(not(feature = "parallel"))]
    let partials: Vec<f64> = (0..chunks).map(partial).collect();
    partials.into_iter().fold(0.0, fold)
}

/// Calls `f(i, &mut data[i])` for every element.
pub fn for_each_mut<T, F>(data: &mut [T], f: F)
where
    T: Send,
    F: Fn(usize, &mut T) + Sync + Send,
{
    let body = |(c, chunk): (usize, &mut [T])| {
        let offset = c * CHUNK;
        for (i, v) in chunk.iter_mut().enumerate() {
            f(offset + i, v);
        }
    };
    #[cfg(feature = "parallel")]
    data.par_chunks_mut(CHUNK).enumerate().for_each(body);
    #[cfg(not(feature = "parallel"))]
    data.chunks_mut(CHUNK).enumerate().for_each(body);
}

/// Calls `f(c, chunk)` on consecutive chunks of exactly `size` elements
/// (the last may be shorter).
pub fn for_each_chunk_mut<T, F>(data: &mut [T], size: usize, f: F)
where
    T: Send,
    F: Fn(usize, &mut [T]) + Sync + Send,
{
    #[cfg(feature = "parallel")]
    data.par_chunks_mut(size).enumerate().for_each(|(c, chunk)| f(c, chunk));
    #[cfg(not(feature = "parallel"))]
    data.chunks_mut(size).enumerate().for_each(|(c, chunk)| f(c, chunk));
}

/// `(0..len).map(f).collect()`, in parallel when enabled.
pub fn map_collect<T, F>(len: usize, f: F) -> Vec<T>
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

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chunked_sum_matches_sequential_chunking() {
        let len = 3 * CHUNK + 17;
        let f = |i: usize| ((i as f64) * 0.37).sin();
        let expected: f64 =
            (0..len.div_ceil(CHUNK)).map(|c| (c * CHUNK..((c + 1) * CHUNK).min(len)).map(f).sum::<f64>()).sum();
        assert_eq!(sum_indexed(len, f).to_bits(), expected.to_bits());
        assert_eq!(sum_indexed(0, f), 0.0);
    }

    #[test]
    fn max_and_for_each() {
        let mut v: Vec<f64> = (0..5000).map(|i| i as f64).collect();
        for_each_mut(&mut v, |i, x| *x += i as f64);
        assert_eq!(v[4999], 9998.0);
        assert_eq!(max_indexed(v.len(), |i| v[i]), 9998.0);
        assert!(max_indexed(3, |i| if i == 1 { f64::NAN } else { 1.0 }).is_nan());
        let squares = map_collect(4, |i| i * i);
        assert_eq!(squares, vec![0, 1, 4, 9]);
    }
}
