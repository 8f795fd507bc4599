//! Order-independent parallel reductions.
//!
//! Work is split into fixed-size chunks whose partial sums are combined
//! sequentially, so results are bit-identical for any thread count.

use rayon::prelude::*;

use crate::error::Result;

const CHUNK: usize = 1024;

pub fn par_sum<F>(len: usize, f: F) -> f64
where
    F: Fn(usize) -> f64 + Sync,
{
    let partials: Vec<f64> = (0..len.div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| {
            let lo = c * CHUNK;
            let hi = (lo + CHUNK).min(len);
            (lo..hi).map(&f).sum::<f64>()
        })
        .collect();
    partials.iter().sum()
}

/// Like [`par_sum`]; the error with the smallest index wins.
pub fn try_par_sum<F>(len: usize, f: F) -> Result<f64>
where
    F: Fn(usize) -> Result<f64> + Sync,
{
    let partials: Vec<Result<f64>> = (0..len.div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| {
            let lo = c * CHUNK;
            let hi = (lo + CHUNK).min(len);
            let mut acc = 0.0;
            for i in lo..hi {
                acc += f(i)?;
            }
            Ok(acc)
        })
        .collect();
    let mut total = 0.0;
    for p in partials {
        total += p?;
    }
    Ok(total)
}

/// Evaluates `f` at every index in parallel, preserving order.
pub fn try_par_map<T, F>(len: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> Result<T> + Sync,
{
    let out: Vec<Result<T>> = (0..len).into_par_iter().map(&f).collect();
    out.into_iter().collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sum_is_thread_count_independent() {
        let f = |i: usize| ((i as f64) * 0.37).sin() * 1e-3 + 1.0 / (1.0 + i as f64);
        let one = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap()
            .install(|| par_sum(100_003, f));
        let four = rayon::ThreadPoolBuilder::new()
            .num_threads(4)
            .build()
            .unwrap()
            .install(|| par_sum(100_003, f));
        assert_eq!(one.to_bits(), four.to_bits());
    }

    #[test]
    fn first_error_wins() {
        use crate::error::Error;
        let r = try_par_sum(10_000, |i| {
            if i == 5000 || i == 9000 {
                Err(Error::invalid(format!("{i}")))
            } else {
                Ok(1.0)
            }
        });
        assert_eq!(r, Err(Error::invalid("5000")));
    }
}
