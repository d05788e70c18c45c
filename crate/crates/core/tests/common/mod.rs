//! Hand-built generators of small closed boxes.

#![allow(dead_code)]

use nalgebra::DMatrix;

pub const A: usize = 1;
pub const B: usize = 2;

/// Closed path of `n` sites; each site carries two bits (A, B). Births of a
/// species at `x` occur at rate `λ·(#neighbours holding it)/2`, a species
/// dies at rate 1 alone and `μ` beside the other one. With `stir > 0` each
/// level is exchanged across every edge at that rate.
pub fn scp_generator(n: usize, lambda: f64, mu: f64, stir: f64, species: &[usize]) -> DMatrix<f64> {
    let states = 1usize << (2 * n);
    let bit = |c: usize, x: usize, s: usize| (c >> (2 * x)) & s != 0;
    let mut q = DMatrix::<f64>::zeros(states, states);
    for c in 0..states {
        let mut add = |to: usize, r: f64| {
            if r > 0.0 && to != c {
                q[(c, to)] += r;
                q[(c, c)] -= r;
            }
        };
        for x in 0..n {
            for &s in species {
                let other = if s == A { B } else { A };
                if bit(c, x, s) {
                    let r = if bit(c, x, other) { mu } else { 1.0 };
                    add(c & !(s << (2 * x)), r);
                } else {
                    let k = [x.wrapping_sub(1), x + 1]
                        .iter()
                        .filter(|&&y| y < n && bit(c, y, s))
                        .count();
                    add(c | (s << (2 * x)), lambda * k as f64 / 2.0);
                }
            }
            if stir > 0.0 && x + 1 < n {
                for &s in species {
                    if bit(c, x, s) != bit(c, x + 1, s) {
                        add(c ^ (s << (2 * x)) ^ (s << (2 * (x + 1))), stir);
                    }
                }
            }
        }
    }
    q
}

/// Single-type contact process on a closed path, one bit per site.
pub fn contact_generator(n: usize, lambda: f64) -> DMatrix<f64> {
    let states = 1usize << n;
    let mut q = DMatrix::<f64>::zeros(states, states);
    for c in 0..states {
        for x in 0..n {
            let (to, r) = if c >> x & 1 == 1 {
                (c & !(1 << x), 1.0)
            } else {
                let k = [x.wrapping_sub(1), x + 1]
                    .iter()
                    .filter(|&&y| y < n && c >> y & 1 == 1)
                    .count();
                (c | 1 << x, lambda * k as f64 / 2.0)
            };
            q[(c, to)] += r;
            q[(c, c)] -= r;
        }
    }
    q
}

pub fn law_at(q: &DMatrix<f64>, start: usize, t: f64) -> Vec<f64> {
    let p = (q * t).exp();
    (0..q.ncols()).map(|j| p[(start, j)]).collect()
}

/// Both species present somewhere in a two-bit-per-site configuration.
pub fn both_alive(c: usize, n: usize) -> bool {
    let any = |s: usize| (0..n).any(|x| (c >> (2 * x)) & s != 0);
    any(A) && any(B)
}
