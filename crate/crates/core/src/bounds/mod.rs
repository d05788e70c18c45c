//! Constants and checks behind the two-sided bounds on the critical value:
//! the block construction used for the upper bound, its comparison with
//! oriented percolation, the supermartingale used for the lower bound and
//! the block constant of the renormalisation.

mod percolation;

pub use percolation::{oriented_percolation, site_uniform, PercolationCurve};

use rand::Rng;
use rand_distr::{Distribution, Exp, Geometric};

use crate::engine::{simulate_trajectory, Simulation, Trajectory};
use crate::error::{arg, Error, Result};
use crate::model::{transition_rates, Boundary, Lattice, ModelParams, SiteState};
use crate::parallel::map_trials;
use crate::random::GraphicalRandomSource;
use crate::stats::{mean_var, wilson, Z95, Z99};

/// Largest failure probability for which a wet block still dominates
/// supercritical oriented percolation.
pub const FAILURE_BUDGET: f64 = 0.274;

/// `X_1 + … + X_N` with `N ~ Geometric(p)` on `{1, 2, …}` and `X_i ~ Exp(r)`.
pub fn geom_exp_sum<R: Rng + ?Sized>(p: f64, r: f64, rng: &mut R) -> Result<f64> {
    if !(p > 0.0 && p <= 1.0) {
        return arg(format!("p must lie in (0, 1], got {p}"));
    }
    if !(r > 0.0 && r.is_finite()) {
        return arg(format!("rate must be positive, got {r}"));
    }
    let failures = Geometric::new(p).map_err(|e| Error::Argument(e.to_string()))?;
    let exp = Exp::new(r).map_err(|e| Error::Argument(e.to_string()))?;
    let n = failures.sample(rng) + 1;
    Ok((0..n).map(|_| exp.sample(rng)).sum())
}

/// `n` independent draws of [`geom_exp_sum`] from one trial stream.
pub fn geom_exp_samples(
    p: f64,
    r: f64,
    n: usize,
    source: &GraphicalRandomSource,
) -> Result<Vec<f64>> {
    let mut rng = source.auxiliary_rng(0x6e0_5a3);
    (0..n).map(|_| geom_exp_sum(p, r, &mut rng)).collect()
}

/// Rates and time budget for an AB site to create AB at a neighbour.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpreadRates {
    /// Rate of the time spent waiting for births, `λ²/(λ+2)`.
    pub rate1: f64,
    /// Rate of the time spent in single occupancy, `λ/2`.
    pub rate2: f64,
    lambda: f64,
}

impl SpreadRates {
    /// `T = c (E T¹ + E T²) = c (3λ+2)/λ²`.
    pub fn t_budget(&self, c: f64) -> f64 {
        c * (3.0 * self.lambda + 2.0) / (self.lambda * self.lambda)
    }

    /// Success probability of the geometric number of attempts.
    pub fn attempt_success(&self) -> f64 {
        self.lambda / (self.lambda + 2.0)
    }
}

pub fn ab_spread_rates(lambda: f64) -> Result<SpreadRates> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return arg(format!("lambda must be positive, got {lambda}"));
    }
    Ok(SpreadRates {
        rate1: lambda * lambda / (lambda + 2.0),
        rate2: lambda / 2.0,
        lambda,
    })
}

/// Bound on `P(S > T)` when `T` is `c` times the mean of each of the two
/// exponential parts.
pub fn spread_tail_bound(c: f64) -> f64 {
    2.0 * (-c).exp()
}

/// One run of the neighbour-site chain next to a fixed AB site:
/// `0 → single` at rate `λ`, `single → 0` at rate 1, `single → AB` at `λ/2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SiteAutomatonRun {
    /// Number of `0 → single` transitions up to absorption.
    pub attempts: u64,
    /// Total time spent empty.
    pub t1: f64,
    /// Total time spent singly occupied.
    pub t2: f64,
}

pub fn site_automaton(
    lambda: f64,
    runs: usize,
    source: &GraphicalRandomSource,
) -> Result<Vec<SiteAutomatonRun>> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return arg(format!("lambda must be positive, got {lambda}"));
    }
    let mut rng = source.auxiliary_rng(0x517e_a070);
    let empty = Exp::new(lambda).map_err(|e| Error::Argument(e.to_string()))?;
    let single = Exp::new(1.0 + lambda / 2.0).map_err(|e| Error::Argument(e.to_string()))?;
    let p_up = (lambda / 2.0) / (1.0 + lambda / 2.0);
    Ok((0..runs)
        .map(|_| {
            let mut r = SiteAutomatonRun {
                attempts: 0,
                t1: 0.0,
                t2: 0.0,
            };
            loop {
                r.attempts += 1;
                r.t1 += empty.sample(&mut rng);
                r.t2 += single.sample(&mut rng);
                if rng.random::<f64>() < p_up {
                    break r;
                }
            }
        })
        .collect())
}

/// Failure bound of one block step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlockBudget {
    pub c: f64,
    /// `μ T`.
    pub b: f64,
    /// `2e^{−c} + 4e^{−c/2} + 1 − e^{−4b}`.
    pub failure_bound: f64,
    pub satisfied: bool,
}

pub fn block_budget(c: f64, b: f64) -> Result<BlockBudget> {
    if !(c > 0.0 && b > 0.0) {
        return arg(format!("need c > 0 and b > 0, got c = {c}, b = {b}"));
    }
    let failure_bound = 2.0 * (-c).exp() + 4.0 * (-c / 2.0).exp() - (-4.0 * b).exp_m1();
    Ok(BlockBudget {
        c,
        b,
        failure_bound,
        satisfied: failure_bound < FAILURE_BUDGET,
    })
}

/// Largest `b` with `1 − e^{−4b}` equal to the budget left after the
/// `c` terms, or `None` when those alone exhaust it.
pub fn saturating_b(c: f64) -> Option<f64> {
    let left = FAILURE_BUDGET - 2.0 * (-c).exp() - 4.0 * (-c / 2.0).exp();
    (left > 0.0).then(|| -(1.0 - left).ln() / 4.0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlockEventEstimate {
    pub lambda: f64,
    pub mu: f64,
    pub c: f64,
    pub t_budget: f64,
    pub trials: u64,
    pub successes: u64,
    pub estimate: f64,
    pub ci95: (f64, f64),
    pub ci99: (f64, f64),
}

pub const BLOCK_CSV_HEADER: &str = "lambda,mu,c,T,trials,successes,estimate,ci99_lo,ci99_hi";

impl BlockEventEstimate {
    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{}",
            self.lambda,
            self.mu,
            self.c,
            self.t_budget,
            self.trials,
            self.successes,
            self.estimate,
            self.ci99.0,
            self.ci99.1
        )
    }
}

/// Probability that an AB at site 0 of the closed box `{−1, 0, 1, 2}`
/// leaves AB at both end sites `−1` and `2` at time `T(c)`.
///
/// `birth_ceiling` couples estimates across λ.
pub fn block_event_mc(
    lambda: f64,
    mu: f64,
    c: f64,
    trials: u64,
    base_seed: u64,
    parallelism: usize,
    birth_ceiling: Option<f64>,
) -> Result<BlockEventEstimate> {
    if !(lambda >= 0.0 && mu >= 0.0 && c > 0.0) {
        return arg("need lambda >= 0, mu >= 0 and c > 0");
    }
    if trials == 0 {
        return arg("trials must be >= 1");
    }
    let t_budget = if lambda > 0.0 {
        ab_spread_rates(lambda)?.t_budget(c)
    } else {
        f64::INFINITY
    };
    let params = ModelParams::scp(lambda, mu).with_box(1, 4, Boundary::Closed);
    params.validate()?;
    let mut initial = Lattice::for_params(&params)?;
    initial.set(1, SiteState::AB);
    let hits = map_trials(trials, parallelism, |i| -> Result<bool> {
        if lambda == 0.0 {
            return Ok(false);
        }
        let mut src = GraphicalRandomSource::new(base_seed).for_trial(i);
        if let Some(cap) = birth_ceiling {
            src = src.with_birth_ceiling(cap);
        }
        let mut sim = Simulation::new(params, initial.clone(), src)?;
        sim.run_until(t_budget);
        let l = sim.lattice();
        Ok(l.get(0) == SiteState::AB && l.get(3) == SiteState::AB)
    });
    let mut successes = 0;
    for h in hits {
        successes += h? as u64;
    }
    Ok(BlockEventEstimate {
        lambda,
        mu,
        c,
        t_budget,
        trials,
        successes,
        estimate: successes as f64 / trials as f64,
        ci95: wilson(successes, trials, Z95),
        ci99: wilson(successes, trials, Z99),
    })
}

/// Admissible range of the weight δ in `M = AB + δ(A + B)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LowerBoundRegion {
    pub lambda: f64,
    pub mu: f64,
    /// `(2λ/(λ+1), μ/(μ+λ))`, present when the interval is nonempty.
    pub delta: Option<(f64, f64)>,
    /// `(−μ + √(μ² + 8μ))/4`.
    pub lambda_max: f64,
    /// `√(μ/2) − μ/4`.
    pub simplified: f64,
}

pub fn lambda_max(mu: f64) -> f64 {
    (-mu + (mu * mu + 8.0 * mu).sqrt()) / 4.0
}

pub fn simplified_lower_bound(mu: f64) -> f64 {
    (mu / 2.0).sqrt() - mu / 4.0
}

pub fn lower_bound_region(lambda: f64, mu: f64) -> Result<LowerBoundRegion> {
    if !(lambda > 0.0 && mu > 0.0) {
        return arg(format!("need lambda > 0 and mu > 0, got {lambda}, {mu}"));
    }
    let lo = 2.0 * lambda / (lambda + 1.0);
    let hi = mu / (mu + lambda);
    Ok(LowerBoundRegion {
        lambda,
        mu,
        delta: (lo < hi).then_some((lo, hi)),
        lambda_max: lambda_max(mu),
        simplified: simplified_lower_bound(mu),
    })
}

/// `M = AB + δ (A + B)` with `A`, `B` counting singly occupied sites.
pub fn martingale_value(l: &Lattice, delta: f64) -> f64 {
    let c = l.counts();
    c.ab as f64 + delta * (c.only_a() + c.only_b()) as f64
}

/// Exact generator applied to `M` at configuration `l`.
pub fn generator_drift(l: &Lattice, params: &ModelParams, delta: f64) -> Result<f64> {
    let mut g = 0.0;
    for x in 0..l.len() {
        let s = l.get(x);
        let r = transition_rates(l, x, params)?;
        let gain = |other_present: bool| if other_present { 1.0 - delta } else { delta };
        g += r.birth_a * gain(s.b_present()) + r.birth_b * gain(s.a_present());
        g -= r.death_a * gain(s.b_present()) + r.death_b * gain(s.a_present());
    }
    Ok(g)
}

/// `M` along one trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct MartingaleTrace {
    pub delta: f64,
    pub m0: f64,
    pub m_end: f64,
    /// `(M_T − M_0)/T`.
    pub increment_rate: f64,
    /// Time average of the generator drift over `[0, T]`.
    pub mean_generator: f64,
    /// Largest generator drift seen along the path.
    pub max_generator: f64,
    pub m_min: f64,
    /// No jump of `M` was upward.
    pub nonincreasing: bool,
}

pub fn supermartingale_check(traj: &Trajectory, delta: f64) -> Result<MartingaleTrace> {
    if !(delta > 0.0 && delta < 1.0) {
        return arg(format!("delta must lie in (0, 1), got {delta}"));
    }
    if !(traj.t_end > 0.0) {
        return arg("trajectory must span positive time");
    }
    for s in &traj.samples {
        if traj.replay_to(s.t).counts() != s.counts {
            return Err(Error::MissingLog(format!(
                "event log does not reproduce the sampled counts at t = {}",
                s.t
            )));
        }
    }
    let mut l = traj.initial.clone();
    let m0 = martingale_value(&l, delta);
    let mut m = m0;
    let mut m_min = m0;
    let mut nonincreasing = true;
    let mut last = 0.0;
    let mut g = generator_drift(&l, &traj.params, delta)?;
    let mut max_g = g;
    let mut integral = 0.0;
    let events = &traj.events;
    let mut i = 0;
    while i < events.len() && events[i].time <= traj.t_end {
        let t = events[i].time;
        integral += g * (t - last);
        last = t;
        while i < events.len() && events[i].time == t {
            let e = events[i];
            l.set(e.site, e.kind.apply(l.get(e.site)));
            i += 1;
        }
        let next = martingale_value(&l, delta);
        nonincreasing &= next <= m + 1e-12;
        m = next;
        m_min = m_min.min(m);
        g = generator_drift(&l, &traj.params, delta)?;
        max_g = max_g.max(g);
    }
    integral += g * (traj.t_end - last);
    Ok(MartingaleTrace {
        delta,
        m0,
        m_end: m,
        increment_rate: (m - m0) / traj.t_end,
        mean_generator: integral / traj.t_end,
        max_generator: max_g,
        m_min,
        nonincreasing,
    })
}

/// Drift of `M` averaged over independent runs from the all-AB
/// configuration of a periodic box.
#[derive(Debug, Clone, PartialEq)]
pub struct DriftEstimate {
    pub lambda: f64,
    pub mu: f64,
    pub delta: f64,
    pub trials: u64,
    /// Mean of `(M_T − M_0)/T` with a 95% interval.
    pub increment: f64,
    pub increment_ci: (f64, f64),
    /// Mean of the time-averaged generator drift with a 95% interval.
    pub generator: f64,
    pub generator_ci: (f64, f64),
    pub max_generator: f64,
    pub m_min: f64,
}

pub const DRIFT_CSV_HEADER: &str = "lambda,mu,delta,trials,increment,increment_ci_lo,increment_ci_hi,generator,generator_ci_lo,generator_ci_hi,max_generator";

impl DriftEstimate {
    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{}",
            self.lambda,
            self.mu,
            self.delta,
            self.trials,
            self.increment,
            self.increment_ci.0,
            self.increment_ci.1,
            self.generator,
            self.generator_ci.0,
            self.generator_ci.1,
            self.max_generator
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DriftOptions {
    pub lambda: f64,
    pub mu: f64,
    pub delta: f64,
    pub dim: usize,
    pub side: usize,
    pub t_end: f64,
    pub trials: u64,
    pub base_seed: u64,
    pub parallelism: usize,
}

impl DriftOptions {
    pub fn new(lambda: f64, mu: f64, delta: f64, trials: u64, base_seed: u64) -> Self {
        DriftOptions {
            lambda,
            mu,
            delta,
            dim: 1,
            side: 20,
            t_end: 10.0,
            trials,
            base_seed,
            parallelism: 1,
        }
    }
}

pub fn supermartingale_drift(opts: &DriftOptions) -> Result<DriftEstimate> {
    if opts.trials < 2 {
        return arg("need at least 2 trials");
    }
    let params =
        ModelParams::scp(opts.lambda, opts.mu).with_box(opts.dim, opts.side, Boundary::Periodic);
    params.validate()?;
    let mut initial = Lattice::for_params(&params)?;
    initial.fill(SiteState::AB);
    let traces = map_trials(opts.trials, opts.parallelism, |i| {
        let src = GraphicalRandomSource::new(opts.base_seed).for_trial(i);
        let traj = simulate_trajectory(params, initial.clone(), src, opts.t_end, 0.0)?;
        supermartingale_check(&traj, opts.delta)
    });
    let traces: Vec<MartingaleTrace> = traces.into_iter().collect::<Result<_>>()?;
    let ci = |xs: Vec<f64>| {
        let (m, v) = mean_var(&xs);
        let h = Z95 * (v / xs.len() as f64).sqrt();
        (m, (m - h, m + h))
    };
    let (increment, increment_ci) = ci(traces.iter().map(|t| t.increment_rate).collect());
    let (generator, generator_ci) = ci(traces.iter().map(|t| t.mean_generator).collect());
    Ok(DriftEstimate {
        lambda: opts.lambda,
        mu: opts.mu,
        delta: opts.delta,
        trials: opts.trials,
        increment,
        increment_ci,
        generator,
        generator_ci,
        max_generator: traces
            .iter()
            .map(|t| t.max_generator)
            .fold(f64::NEG_INFINITY, f64::max),
        m_min: traces.iter().map(|t| t.m_min).fold(f64::INFINITY, f64::min),
    })
}

/// `log(e⁸ (1 − e^{−λ/2d})^{−4}) / log(1/κ)`, the exponent at which
/// `κ^a e⁸ (1 − e^{−λ/2d})^{−4}` reaches 1.
pub fn block_constant_threshold(kappa: f64, lambda: f64, d: usize) -> Result<f64> {
    if !(kappa > 0.0 && kappa < 1.0) {
        return arg(format!("kappa must lie in (0, 1), got {kappa}"));
    }
    if !(lambda > 0.0) || d == 0 {
        return arg("need lambda > 0 and d >= 1");
    }
    let q = -(-lambda / (2.0 * d as f64)).exp_m1();
    Ok((8.0 - 4.0 * q.ln()) / -kappa.ln())
}

fn block_condition_log(a: f64, kappa: f64, lambda: f64, d: usize) -> f64 {
    let q = -(-lambda / (2.0 * d as f64)).exp_m1();
    a * kappa.ln() + 8.0 - 4.0 * q.ln()
}

/// Smallest `a` on the `1e−9` grid with `κ^a e⁸ (1 − e^{−λ/2d})^{−4} < 1`.
pub fn block_constant_a(kappa: f64, lambda: f64, d: usize) -> Result<f64> {
    let a0 = block_constant_threshold(kappa, lambda, d)?;
    let mut a = (a0 * 1e9).ceil() / 1e9;
    while !(block_condition_log(a, kappa, lambda, d) < 0.0) {
        a += 1e-9;
    }
    Ok(a)
}

/// Which side of the `μ = 1/1600` split the upper bound uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UpperCase {
    SqrtMu,
    MinWithOneD,
    LambdaC1,
}

impl UpperCase {
    pub fn label(self) -> &'static str {
        match self {
            UpperCase::SqrtMu => "40*sqrt(mu)",
            UpperCase::MinWithOneD => "min(40d*sqrt(mu),lambda_c(1))",
            UpperCase::LambdaC1 => "lambda_c(1)",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundsRow {
    pub mu: f64,
    pub d: usize,
    pub c1: f64,
    /// `None` when the case needs `λ_c(1)` and no proxy was supplied.
    pub c2: Option<f64>,
    pub case: UpperCase,
    /// Value of the `λ_c(1)` proxy used, if any.
    pub lambda_c1_proxy: Option<f64>,
}

pub const BOUNDS_CSV_HEADER: &str = "mu,d,C1,C2,C2_case,lambda_c1_proxy";

impl BoundsRow {
    pub fn csv_row(&self) -> String {
        let opt = |x: Option<f64>| x.map(|v| v.to_string()).unwrap_or_default();
        format!(
            "{},{},{},{},{},{}",
            self.mu,
            self.d,
            self.c1,
            opt(self.c2),
            self.case.label(),
            opt(self.lambda_c1_proxy)
        )
    }
}

pub fn lower_constant(mu: f64, d: usize) -> f64 {
    if d == 1 {
        (8.0 * mu - 4.0 * mu * mu).sqrt()
    } else {
        simplified_lower_bound(mu)
    }
}

/// `C1(μ)` and `C2(μ)` on a grid of `μ` for each dimension. `lambda_c1`
/// supplies an estimate of the critical value at `μ = 1` per dimension.
pub fn bounds_report(
    mu_grid: &[f64],
    dims: &[usize],
    lambda_c1: impl Fn(usize) -> Option<f64>,
) -> Result<Vec<BoundsRow>> {
    let mut rows = Vec::new();
    for &d in dims {
        if d == 0 {
            return arg("dimension must be >= 1");
        }
        let proxy = lambda_c1(d);
        for &mu in mu_grid {
            if !(mu > 0.0 && mu <= 1.0) {
                return arg(format!("mu must lie in (0, 1], got {mu}"));
            }
            let small = mu < 1.0 / 1600.0;
            let root = 40.0 * d as f64 * mu.sqrt();
            let (case, c2) = match (small, d) {
                (true, 1) => (UpperCase::SqrtMu, Some(root)),
                (true, _) => (
                    UpperCase::MinWithOneD,
                    Some(proxy.map_or(root, |p| root.min(p))),
                ),
                (false, _) => (UpperCase::LambdaC1, proxy),
            };
            rows.push(BoundsRow {
                mu,
                d,
                c1: lower_constant(mu, d),
                c2,
                case,
                lambda_c1_proxy: proxy,
            });
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn src(seed: u64) -> GraphicalRandomSource {
        GraphicalRandomSource::new(seed)
    }

    #[test]
    fn geometric_sum_with_certain_success_is_exponential() {
        let xs = geom_exp_samples(1.0, 2.0, 50_000, &src(1)).unwrap();
        let d = crate::stats::ks_distance(&xs, |x| 1.0 - (-2.0 * x).exp());
        assert!(d < 0.01, "ks = {d}");
    }

    #[test]
    fn geometric_sum_mean_is_one_over_pr() {
        let xs = geom_exp_samples(0.5, 2.0, 100_000, &src(2)).unwrap();
        let (m, v) = mean_var(&xs);
        assert!((m - 1.0).abs() < 0.015, "mean {m}");
        assert!((v - 1.0).abs() < 0.05, "var {v}");
    }

    #[test]
    fn geometric_sum_rejects_bad_arguments() {
        let mut rng = src(1).auxiliary_rng(1);
        assert!(geom_exp_sum(0.0, 1.0, &mut rng).is_err());
        assert!(geom_exp_sum(0.5, 0.0, &mut rng).is_err());
    }

    #[test]
    fn spread_rates_at_two() {
        let r = ab_spread_rates(2.0).unwrap();
        assert_eq!(r.rate1, 1.0);
        assert_eq!(r.rate2, 1.0);
        assert_eq!(r.t_budget(9.0), 18.0);
        assert!((spread_tail_bound(9.0) - 2.0 * (-9.0f64).exp()).abs() < 1e-18);
        assert!(ab_spread_rates(0.0).is_err());
    }

    #[test]
    fn site_automaton_attempts_are_geometric() {
        let lambda = 1.0;
        let n = 100_000;
        let runs = site_automaton(lambda, n, &src(3)).unwrap();
        let p = lambda / (lambda + 2.0);
        for k in 1..=6u64 {
            let emp = runs.iter().filter(|r| r.attempts == k).count() as f64 / n as f64;
            let exact = (1.0 - p).powi(k as i32 - 1) * p;
            assert!(
                (emp - exact).abs() < 4.0 * (exact / n as f64).sqrt() + 1e-3,
                "k={k}: {emp} vs {exact}"
            );
        }
        let (m1, _) = mean_var(&runs.iter().map(|r| r.t1).collect::<Vec<_>>());
        let (m2, _) = mean_var(&runs.iter().map(|r| r.t2).collect::<Vec<_>>());
        assert!((m1 / 3.0 - 1.0).abs() < 0.02, "E T1 = {m1}");
        assert!((m2 / 2.0 - 1.0).abs() < 0.02, "E T2 = {m2}");
    }

    #[test]
    #[allow(clippy::excessive_precision)]
    fn budget_values_match_high_precision_references() {
        // 50-digit decimal evaluations
        let b = block_budget(9.0, 0.028281).unwrap();
        assert!((b.failure_bound - 0.151_642_889_460_722_985_802).abs() < 1e-15);
        assert!(b.satisfied);
        let b0 = 0.25 * (1.0f64 / 0.77069).ln();
        let nat = block_budget(9.0, b0).unwrap();
        assert!((nat.failure_bound - 0.273_992_805_761_142_585).abs() < 1e-14);
        assert!(nat.satisfied);
        assert!((2.0 * (-9.0f64).exp() - 0.000_246_819_608_173_359_099).abs() < 1e-18);
        assert!((4.0 * (-4.5f64).exp() - 0.044_435_986_152_969_225_984_6).abs() < 1e-16);
    }

    #[test]
    fn budget_limits_and_failures() {
        assert!(block_budget(200.0, 1e-12).unwrap().failure_bound < 1e-10);
        let b = block_budget(1.0, 1.0).unwrap();
        assert!(b.failure_bound > FAILURE_BUDGET && !b.satisfied);
        assert!(block_budget(0.0, 1.0).is_err());
        let s = saturating_b(9.0).unwrap();
        assert!((block_budget(9.0, s).unwrap().failure_bound - FAILURE_BUDGET).abs() < 1e-12);
        assert!(saturating_b(1.0).is_none());
    }

    #[test]
    fn block_event_is_zero_without_births() {
        let e = block_event_mc(0.0, 0.5, 9.0, 50, 1, 1, None).unwrap();
        assert_eq!(e.estimate, 0.0);
    }

    #[test]
    fn block_event_is_monotone_under_coupling() {
        let mut last = 0;
        for lambda in [0.3, 0.6, 0.9, 1.2] {
            let e = block_event_mc(lambda, 0.3, 2.0, 400, 8, 1, Some(1.2)).unwrap();
            assert!(e.successes >= last, "lambda {lambda}");
            last = e.successes;
        }
    }

    #[test]
    fn lower_bound_region_examples() {
        let r = lower_bound_region(0.3, 0.5).unwrap();
        assert!((r.lambda_max - (-0.5 + 4.25f64.sqrt()) / 4.0).abs() < 1e-15);
        assert!((r.lambda_max - 0.390_388).abs() < 1e-6);
        let (lo, hi) = r.delta.unwrap();
        assert!((lo - 0.6 / 1.3).abs() < 1e-15 && (hi - 0.5 / 0.8).abs() < 1e-15);
        assert!(lower_bound_region(0.5, 0.5).unwrap().delta.is_none());
        for k in 1..=100 {
            let mu = k as f64 / 100.0;
            assert!(lambda_max(mu) >= simplified_lower_bound(mu));
        }
    }

    #[test]
    fn region_is_nonempty_exactly_below_lambda_max() {
        for k in 1..=20 {
            let mu = k as f64 / 20.0;
            let m = lambda_max(mu);
            assert!(lower_bound_region(m * 0.999, mu).unwrap().delta.is_some());
            assert!(lower_bound_region(m * 1.001, mu).unwrap().delta.is_none());
        }
    }

    fn small_run(lambda: f64, mu: f64, seed: u64) -> Trajectory {
        let params = ModelParams::scp(lambda, mu).with_box(1, 12, Boundary::Periodic);
        let mut l = Lattice::for_params(&params).unwrap();
        l.fill(SiteState::AB);
        simulate_trajectory(params, l, src(seed), 5.0, 1.0).unwrap()
    }

    #[test]
    fn pure_death_martingale_is_pathwise_nonincreasing() {
        let tr = supermartingale_check(&small_run(0.0, 0.5, 1), 0.5).unwrap();
        assert!(tr.nonincreasing);
        assert!(tr.m_min >= 0.0);
        assert!(tr.max_generator <= 0.0);
    }

    #[test]
    fn generator_matches_hand_count() {
        let params = ModelParams::scp(0.2, 0.5).with_box(1, 5, Boundary::Closed);
        let mut l = Lattice::for_params(&params).unwrap();
        l.set(2, SiteState::AB);
        // AB pushes each species to two empty neighbours at rate λ/2 each,
        // each species dies at rate μ
        let g = generator_drift(&l, &params, 0.4).unwrap();
        let expected = 4.0 * 0.1 * 0.4 - 2.0 * 0.5 * 0.6;
        assert!((g - expected).abs() < 1e-15);
    }

    #[test]
    fn inconsistent_log_is_rejected() {
        let mut t = small_run(1.0, 0.5, 2);
        t.events.truncate(t.events.len() / 2);
        assert!(matches!(
            supermartingale_check(&t, 0.5),
            Err(Error::MissingLog(_))
        ));
    }

    #[test]
    fn admissible_drift_is_nonpositive() {
        let mut o = DriftOptions::new(0.2, 0.5, 0.4, 200, 5);
        o.t_end = 5.0;
        let e = supermartingale_drift(&o).unwrap();
        assert!(e.generator_ci.0 <= 0.0);
        assert!(e.max_generator <= 0.0);
        assert!(e.m_min >= 0.0);
    }

    #[test]
    fn block_constant_identity() {
        // 1 − e^{−λ/2} = e^{−1}
        let lambda = -2.0 * (1.0 - (-1.0f64).exp()).ln();
        let a = block_constant_a((-1.0f64).exp(), lambda, 1).unwrap();
        assert!((a - 12.0).abs() < 2e-9, "a = {a}");
        assert!(block_condition_log(a, (-1.0f64).exp(), lambda, 1) < 0.0);
        assert!(block_constant_a(1.0, 1.0, 1).is_err());
    }

    #[test]
    fn block_constant_decreases_in_lambda() {
        let mut last = f64::INFINITY;
        for k in 1..=40 {
            let a = block_constant_a(0.7, k as f64 * 0.1, 2).unwrap();
            assert!(a < last);
            last = a;
        }
    }

    #[test]
    fn report_splits_at_one_over_1600() {
        let rows = bounds_report(&[1e-4, 1e-3, 1.0], &[1, 2], |d| Some(3.3 + d as f64)).unwrap();
        assert_eq!(rows.len(), 6);
        assert_eq!(rows[0].case, UpperCase::SqrtMu);
        assert!((rows[0].c2.unwrap() - 0.4).abs() < 1e-12);
        assert_eq!(rows[1].case, UpperCase::LambdaC1);
        assert_eq!(rows[1].c2, Some(4.3));
        assert!((rows[2].c1 - 2.0).abs() < 1e-15);
        assert_eq!(rows[3].case, UpperCase::MinWithOneD);
        assert!((rows[3].c2.unwrap() - 0.8).abs() < 1e-12);
        assert!((rows[5].c1 - (0.5f64.sqrt() - 0.25)).abs() < 1e-15);
        let missing = bounds_report(&[0.5], &[1], |_| None).unwrap();
        assert_eq!(missing[0].c2, None);
    }

    proptest! {
        #[test]
        fn budget_is_exact(c in 0.1f64..30.0, b in 1e-6f64..2.0) {
            let x = block_budget(c, b).unwrap();
            let direct = 2.0 * (-c).exp() + 4.0 * (-c / 2.0).exp() + 1.0 - (-4.0 * b).exp();
            prop_assert!((x.failure_bound - direct).abs() < 1e-14);
            prop_assert_eq!(x.satisfied, x.failure_bound < FAILURE_BUDGET);
        }

        #[test]
        fn returned_a_satisfies_strict_inequality(kappa in 0.01f64..0.99, lambda in 0.01f64..10.0, d in 1usize..4) {
            let a = block_constant_a(kappa, lambda, d).unwrap();
            let lhs = kappa.powf(a) * 8f64.exp() * (1.0 - (-lambda / (2.0 * d as f64)).exp()).powi(-4);
            prop_assert!(lhs < 1.0 + 1e-9);
            prop_assert!(block_condition_log(a, kappa, lambda, d) < 0.0);
            prop_assert!(a - block_constant_threshold(kappa, lambda, d).unwrap() <= 2e-9 * a.max(1.0));
        }
    }
}
