//! Oriented site percolation on `{(m, n) : m + n even}` with paths
//! `(m, n) → (m ± 1, n + 1)` through open sites.
//!
//! Rows are reachability bitsets over a strip of `width + 1` columns
//! centred on the origin; sites outside the strip are closed, so the
//! estimate is a lower bound for the infinite lattice. Openness of `(m, n)`
//! is decided by a uniform that depends only on `(seed, trial, m, n)`, which
//! couples runs across `p` and across strip widths.

use crate::error::{arg, Result};
use crate::parallel::map_trials;
use crate::stats::{wilson, Z95};

#[derive(Debug, Clone, PartialEq)]
pub struct PercolationCurve {
    pub p: f64,
    pub width: usize,
    pub trials: u64,
    /// `survival[n]`: fraction of trials with a wet site in row `n`.
    pub survival: Vec<f64>,
    /// Trials reaching the last row.
    pub successes: u64,
    pub ci: (f64, f64),
}

impl PercolationCurve {
    pub fn estimate(&self) -> f64 {
        *self.survival.last().unwrap_or(&1.0)
    }
}

fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Uniform on `[0, 1)` attached to site `(m, n)` of one trial.
pub fn site_uniform(seed: u64, trial: u64, m: i64, n: u64) -> f64 {
    let h = mix(seed
        ^ mix(trial.wrapping_add(0x9e37_79b9_7f4a_7c15)
            ^ mix((m as u64) ^ mix(n.wrapping_mul(0x2545_f491_4f6c_dd1d)))));
    (h >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

struct Strip {
    half: i64,
    words: usize,
}

impl Strip {
    fn new(width: usize) -> Self {
        let cols = width + 1;
        Strip {
            half: (width / 2) as i64,
            words: cols.div_ceil(64),
        }
    }

    fn cols(&self) -> usize {
        (2 * self.half + 1) as usize
    }

    fn step(&self, wet: &[u64], next: &mut [u64]) {
        let w = self.words;
        for k in 0..w {
            let left = (wet[k] << 1) | if k > 0 { wet[k - 1] >> 63 } else { 0 };
            let right = (wet[k] >> 1) | if k + 1 < w { wet[k + 1] << 63 } else { 0 };
            next[k] = left | right;
        }
        let cols = self.cols();
        if !cols.is_multiple_of(64) {
            next[w - 1] &= (1u64 << (cols % 64)) - 1;
        }
    }
}

/// Rows reached by one trial (0 if the origin alone never leaves row 0).
fn trial_depth(p: f64, rows: usize, strip: &Strip, seed: u64, trial: u64) -> usize {
    let mut wet = vec![0u64; strip.words];
    let mut next = vec![0u64; strip.words];
    let origin = strip.half as usize;
    wet[origin / 64] |= 1 << (origin % 64);
    for n in 1..=rows {
        strip.step(&wet, &mut next);
        let mut any = false;
        for (k, word) in next.iter_mut().enumerate() {
            let mut bits = *word;
            while bits != 0 {
                let b = bits.trailing_zeros() as usize;
                bits &= bits - 1;
                let m = (k * 64 + b) as i64 - strip.half;
                if site_uniform(seed, trial, m, n as u64) >= p {
                    *word &= !(1u64 << b);
                }
            }
            any |= *word != 0;
        }
        if !any {
            return n - 1;
        }
        std::mem::swap(&mut wet, &mut next);
    }
    rows
}

/// Probability that an open path from the origin reaches row `rows`,
/// with the full survival-by-row curve.
pub fn oriented_percolation(
    p: f64,
    rows: usize,
    width: usize,
    trials: u64,
    seed: u64,
    parallelism: usize,
) -> Result<PercolationCurve> {
    if !(0.0..=1.0).contains(&p) {
        return arg(format!("p must lie in [0, 1], got {p}"));
    }
    if trials == 0 {
        return arg("trials must be >= 1");
    }
    let strip = Strip::new(width);
    let depths = map_trials(trials, parallelism, |i| {
        trial_depth(p, rows, &strip, seed, i)
    });
    let mut reached = vec![0u64; rows + 1];
    for d in depths {
        reached[d] += 1;
    }
    // survival[n] = P(depth >= n)
    let mut survival = vec![0.0; rows + 1];
    let mut acc = 0u64;
    for n in (0..=rows).rev() {
        acc += reached[n];
        survival[n] = acc as f64 / trials as f64;
    }
    let successes = reached[rows];
    Ok(PercolationCurve {
        p,
        width,
        trials,
        survival,
        successes,
        ci: wilson(successes, trials, Z95),
    })
}
