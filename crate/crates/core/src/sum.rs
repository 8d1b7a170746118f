//! Deterministic reductions.
//!
//! Every long sum in the crate is cut into fixed blocks, each block summed
//! sequentially, and the block totals combined by a balanced pairwise tree.
//! The result therefore does not depend on how blocks are scheduled across
//! threads.

use num_complex::Complex64;
use rayon::prelude::*;

pub const BLOCK: usize = 4096;

pub fn pairwise(values: &[Complex64]) -> Complex64 {
    match values.len() {
        0 => Complex64::new(0.0, 0.0),
        1 => values[0],
        n => {
            let (l, r) = values.split_at(n / 2);
            pairwise(l) + pairwise(r)
        }
    }
}

pub fn pairwise_f64(values: &[f64]) -> f64 {
    match values.len() {
        0 => 0.0,
        1 => values[0],
        n => {
            let (l, r) = values.split_at(n / 2);
            pairwise_f64(l) + pairwise_f64(r)
        }
    }
}

/// Sums `term(i)` for `i` in `start..end` using blocks of `block` indices.
///
/// Blocks are evaluated in parallel; block totals are then reduced pairwise
/// in index order.
pub fn blocked_sum<F>(start: u64, end: u64, block: usize, term: F) -> Complex64
where
    F: Fn(u64) -> Complex64 + Sync,
{
    if end <= start {
        return Complex64::new(0.0, 0.0);
    }
    let block = block.max(1) as u64;
    let nblocks = (end - start).div_ceil(block);
    let partial: Vec<Complex64> = (0..nblocks)
        .into_par_iter()
        .map(|j| {
            let lo = start + j * block;
            let hi = (lo + block).min(end);
            let mut acc = Complex64::new(0.0, 0.0);
            for i in lo..hi {
                acc += term(i);
            }
            acc
        })
        .collect();
    pairwise(&partial)
}

/// Fallible variant of [`blocked_sum`]; the first error in index order wins.
pub fn try_blocked_sum<F, E>(start: u64, end: u64, block: usize, term: F) -> Result<Complex64, E>
where
    F: Fn(u64) -> Result<Complex64, E> + Sync,
    E: Send,
{
    if end <= start {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let block = block.max(1) as u64;
    let nblocks = (end - start).div_ceil(block);
    let partial: Vec<Result<Complex64, E>> = (0..nblocks)
        .into_par_iter()
        .map(|j| {
            let lo = start + j * block;
            let hi = (lo + block).min(end);
            let mut acc = Complex64::new(0.0, 0.0);
            for i in lo..hi {
                acc += term(i)?;
            }
            Ok(acc)
        })
        .collect();
    let partial = partial.into_iter().collect::<Result<Vec<_>, E>>()?;
    Ok(pairwise(&partial))
}
