//! Symbiotic biased voter model reduced to its two fronts.
//!
//! Species `s` occupies `(-∞, r_s]`. Each front advances by one at rate
//! λ/2. A front on a doubly occupied site (trailing or tied) retreats at
//! rate μ; a strictly leading front sits on a singly occupied site and
//! retreats at rate 1. The gap `N = |r_A − r_B|` is then a birth-death
//! chain with `up(0) = λ + 2μ`, `up(n) = μ + λ/2` and `down(n) = 1 + λ/2`.

use rand::Rng;
use rand_distr::{Distribution, Exp};

use crate::error::{arg, Error, Result};
use crate::random::GraphicalRandomSource;
use crate::stats::{fit_line, mean_var, total_variation, Z95};

/// Rates of the gap chain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GapChain {
    pub lambda: f64,
    pub mu: f64,
}

impl GapChain {
    pub fn new(lambda: f64, mu: f64) -> Self {
        GapChain { lambda, mu }
    }

    pub fn up(&self, n: usize) -> f64 {
        if n == 0 {
            self.lambda + 2.0 * self.mu
        } else {
            self.mu + self.lambda / 2.0
        }
    }

    pub fn down(&self, n: usize) -> f64 {
        if n == 0 {
            0.0
        } else {
            1.0 + self.lambda / 2.0
        }
    }

    /// Largest violation of `π(n) up(n) = π(n+1) down(n+1)` on `0..n_max`,
    /// the balance equations of a birth-death chain truncated at `n_max`.
    pub fn balance_residual(&self, pi: &[f64]) -> f64 {
        pi.windows(2)
            .enumerate()
            .map(|(n, w)| (w[0] * self.up(n) - w[1] * self.down(n + 1)).abs())
            .fold(0.0, f64::max)
    }
}

/// Closed-form stationary law of the gap.
#[derive(Debug, Clone, PartialEq)]
pub struct GapStationary {
    /// `π(0..=n_max)`.
    pub pi: Vec<f64>,
    /// `Σ_{n > n_max} π(n)`.
    pub tail_mass: f64,
    /// `π(1)`.
    pub c: f64,
    /// `(λ+2μ)/(λ+2)`.
    pub ratio: f64,
}

pub fn gap_stationary(lambda: f64, mu: f64, n_max: usize) -> Result<GapStationary> {
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return arg(format!("lambda must be finite and >= 0, got {lambda}"));
    }
    if !(mu >= 0.0) {
        return arg(format!("mu must be >= 0, got {mu}"));
    }
    if mu >= 1.0 {
        return Err(Error::NonSummable(format!(
            "mu = {mu} makes the gap ratio (λ+2μ)/(λ+2) >= 1"
        )));
    }
    if lambda + 2.0 * mu == 0.0 {
        return arg("lambda + 2 mu must be positive");
    }
    let ratio = (lambda + 2.0 * mu) / (lambda + 2.0);
    let c =
        1.0 / ((1.0 + lambda / 2.0) / (lambda + 2.0 * mu) + (lambda + 2.0) / (2.0 * (1.0 - mu)));
    let mut pi = Vec::with_capacity(n_max + 1);
    pi.push(c * (1.0 + lambda / 2.0) / (lambda + 2.0 * mu));
    for n in 1..=n_max {
        pi.push(c * ratio.powi(n as i32 - 1));
    }
    let tail_mass = c * ratio.powi(n_max as i32) / (1.0 - ratio);
    Ok(GapStationary {
        pi,
        tail_mass,
        c,
        ratio,
    })
}

/// Smallest `n_max` whose geometric tail is below `tol`.
pub fn truncation_for(lambda: f64, mu: f64, tol: f64) -> Result<usize> {
    let g = gap_stationary(lambda, mu, 0)?;
    let n = ((tol * (1.0 - g.ratio) / g.c).ln() / g.ratio.ln()).ceil();
    Ok(n.max(1.0) as usize)
}

/// The equilibrium drift of `r(t)` as printed with the gap law:
/// `c(1+λ/2)·[(λ−2μ)/(λ+2μ) + (λ/2−1)/(1−μ)]`.
pub fn edge_drift_paper(lambda: f64, mu: f64) -> Result<f64> {
    if !(mu > 0.0 && mu < 1.0) {
        return arg(format!("mu must lie in (0, 1), got {mu}"));
    }
    let g = gap_stationary(lambda, mu, 0)?;
    Ok(g.c
        * (1.0 + lambda / 2.0)
        * ((lambda - 2.0 * mu) / (lambda + 2.0 * mu) + (lambda / 2.0 - 1.0) / (1.0 - mu)))
}

/// Equilibrium drift of `max(r_A, r_B)` itself: `+λ` at a tie (either
/// front may advance, a retreat leaves the other in place) and `λ/2 − 1`
/// from the leading front when the gap is positive.
pub fn edge_drift_max_front(lambda: f64, mu: f64) -> Result<f64> {
    if !(mu > 0.0 && mu < 1.0) {
        return arg(format!("mu must lie in (0, 1), got {mu}"));
    }
    let g = gap_stationary(lambda, mu, 0)?;
    Ok(g.c
        * ((1.0 + lambda / 2.0) / (lambda + 2.0 * mu) * lambda
            + (lambda + 2.0) / (2.0 * (1.0 - mu)) * (lambda / 2.0 - 1.0)))
}

/// `√(8μ − 4μ²)`.
pub fn sbvm_critical(mu: f64) -> Result<f64> {
    if !(mu > 0.0 && mu <= 1.0) {
        return arg(format!("mu must lie in (0, 1], got {mu}"));
    }
    Ok((8.0 * mu - 4.0 * mu * mu).sqrt())
}

/// Zero of the max-front drift, `2√μ`.
pub fn max_front_critical(mu: f64) -> f64 {
    2.0 * mu.sqrt()
}

/// Zero in λ of `f` on `[lo, hi]` by bisection to `tol`.
pub fn bisect_zero(
    mut f: impl FnMut(f64) -> Result<f64>,
    mut lo: f64,
    mut hi: f64,
    tol: f64,
) -> Result<f64> {
    let mut flo = f(lo)?;
    let fhi = f(hi)?;
    if flo.signum() == fhi.signum() {
        return arg(format!("no sign change on [{lo}, {hi}]"));
    }
    while hi - lo > tol {
        let m = 0.5 * (lo + hi);
        let fm = f(m)?;
        if fm == 0.0 {
            return Ok(m);
        }
        if fm.signum() == flo.signum() {
            lo = m;
            flo = fm;
        } else {
            hi = m;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FrontState {
    pub r_a: i64,
    pub r_b: i64,
}

impl FrontState {
    pub fn gap(&self) -> usize {
        self.r_a.abs_diff(self.r_b) as usize
    }

    pub fn edge(&self) -> i64 {
        self.r_a.max(self.r_b)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrontSample {
    pub t: f64,
    pub state: FrontState,
}

/// Time spent in each gap value and the transitions out of it.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct GapAudit {
    pub time: Vec<f64>,
    pub up: Vec<u64>,
    pub down: Vec<u64>,
}

impl GapAudit {
    fn record(&mut self, n: usize, dt: f64, up: Option<bool>) {
        if self.time.len() <= n {
            self.time.resize(n + 1, 0.0);
            self.up.resize(n + 1, 0);
            self.down.resize(n + 1, 0);
        }
        self.time[n] += dt;
        match up {
            Some(true) => self.up[n] += 1,
            Some(false) => self.down[n] += 1,
            None => {}
        }
    }

    /// Occupation fractions of the gap values.
    pub fn occupation(&self) -> Vec<f64> {
        let total: f64 = self.time.iter().sum();
        self.time.iter().map(|t| t / total).collect()
    }

    /// Empirical `up(n)` and `down(n)` where the chain spent time.
    pub fn rates(&self, n: usize) -> Option<(f64, f64)> {
        let t = *self.time.get(n)?;
        (t > 0.0).then(|| (self.up[n] as f64 / t, self.down[n] as f64 / t))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrontRun {
    pub samples: Vec<FrontSample>,
    /// Least-squares slope of `max(r_A, r_B)` over the second half.
    pub speed: f64,
    /// Batch-means 95% interval of the speed.
    pub speed_ci: (f64, f64),
    pub speed_a: f64,
    pub speed_b: f64,
    pub audit: GapAudit,
    pub final_state: FrontState,
}

const FRONT_STREAM: u64 = 0x5b7e_f007;
const BATCHES: usize = 20;

/// Exact simulation of the two-front chain from a tie at the origin,
/// sampled every `sample_dt`.
pub fn simulate_front(
    lambda: f64,
    mu: f64,
    t_end: f64,
    sample_dt: f64,
    source: &GraphicalRandomSource,
) -> Result<FrontRun> {
    if !(t_end > 0.0 && t_end.is_finite()) {
        return arg(format!("t_end must be positive, got {t_end}"));
    }
    if !(sample_dt > 0.0 && sample_dt * (2 * BATCHES) as f64 <= t_end) {
        return arg("sample_dt must be positive and leave at least 40 samples");
    }
    if !(lambda >= 0.0 && (0.0..=1.0).contains(&mu)) {
        return arg("need lambda >= 0 and mu in [0, 1]");
    }
    let mut rng = source.auxiliary_rng(FRONT_STREAM);
    let mut s = FrontState { r_a: 0, r_b: 0 };
    let mut t = 0.0;
    let mut audit = GapAudit::default();
    let mut samples = vec![FrontSample { t: 0.0, state: s }];
    let mut next_sample = sample_dt;
    let advance = lambda / 2.0;
    loop {
        let (death_a, death_b) = match s.r_a.cmp(&s.r_b) {
            std::cmp::Ordering::Equal => (mu, mu),
            std::cmp::Ordering::Greater => (1.0, mu),
            std::cmp::Ordering::Less => (mu, 1.0),
        };
        let rates = [advance, advance, death_a, death_b];
        let total: f64 = rates.iter().sum();
        let dt = if total > 0.0 {
            Exp::new(total)
                .map_err(|e| Error::Argument(e.to_string()))?
                .sample(&mut rng)
        } else {
            f64::INFINITY
        };
        let t_next = t + dt;
        while next_sample <= t_end && next_sample < t_next {
            samples.push(FrontSample {
                t: next_sample,
                state: s,
            });
            next_sample += sample_dt;
        }
        let gap = s.gap();
        if t_next > t_end {
            audit.record(gap, t_end - t, None);
            break;
        }
        let mut u = rng.random::<f64>() * total;
        let mut k = 0;
        while k < 3 && u >= rates[k] {
            u -= rates[k];
            k += 1;
        }
        match k {
            0 => s.r_a += 1,
            1 => s.r_b += 1,
            2 => s.r_a -= 1,
            _ => s.r_b -= 1,
        }
        let new_gap = s.gap();
        audit.record(gap, dt, (new_gap != gap).then_some(new_gap > gap));
        t = t_next;
    }
    while next_sample <= t_end + 1e-9 {
        samples.push(FrontSample {
            t: next_sample,
            state: s,
        });
        next_sample += sample_dt;
    }
    let half = &samples[samples.len() / 2..];
    let slope = |pick: fn(&FrontState) -> i64| -> Result<f64> {
        let xs: Vec<f64> = half.iter().map(|p| p.t).collect();
        let ys: Vec<f64> = half.iter().map(|p| pick(&p.state) as f64).collect();
        fit_line(&xs, &ys, None)
            .map(|f| f.slope)
            .ok_or_else(|| Error::Fit("speed regression is degenerate".into()))
    };
    let speed = slope(FrontState::edge)?;
    let speed_a = slope(|s| s.r_a)?;
    let speed_b = slope(|s| s.r_b)?;
    let per = half.len() / BATCHES;
    let batch: Vec<f64> = (0..BATCHES)
        .map(|b| {
            let (p, q) = (&half[b * per], &half[(b + 1) * per - 1]);
            (q.state.edge() - p.state.edge()) as f64 / (q.t - p.t)
        })
        .collect();
    let (_, v) = mean_var(&batch);
    let half_width = Z95 * (v / BATCHES as f64).sqrt();
    Ok(FrontRun {
        samples,
        speed,
        speed_ci: (speed - half_width, speed + half_width),
        speed_a,
        speed_b,
        audit,
        final_state: s,
    })
}

/// Total-variation distance between the simulated gap occupation and the
/// stationary law (both truncated at `n_max`, tails lumped).
pub fn gap_tv(run: &FrontRun, lambda: f64, mu: f64, n_max: usize) -> Result<f64> {
    let law = gap_stationary(lambda, mu, n_max)?;
    let occ = run.audit.occupation();
    let mut emp: Vec<f64> = (0..=n_max)
        .map(|n| occ.get(n).copied().unwrap_or(0.0))
        .collect();
    emp.push(occ.iter().skip(n_max + 1).sum());
    let mut exact = law.pi.clone();
    exact.push(law.tail_mass);
    Ok(total_variation(&emp, &exact))
}

/// λ where the simulated edge speed changes sign, by bisection with one
/// shared seed.
pub fn mc_speed_zero(
    mu: f64,
    lo: f64,
    hi: f64,
    tol: f64,
    t_end: f64,
    source: &GraphicalRandomSource,
) -> Result<f64> {
    bisect_zero(
        |l| Ok(simulate_front(l, mu, t_end, 1.0, source)?.speed),
        lo,
        hi,
        tol,
    )
}

/// Column header of the SBVM CSV rows.
pub const SBVM_CSV_HEADER: &str =
    "lambda,mu,pi0,ratio,drift_paper,drift_max_front,lambda_c_formula,mc_speed,mc_ci_lo,mc_ci_hi";
