//! Finite-horizon survival estimates and the λ bisection built on them.
//!
//! A finite box always dies out eventually, so "survival" here means both
//! species are present at `t_max` (optionally with at least `threshold`
//! doubly occupied sites). The box should be large enough that the cluster
//! grown from the centre never reaches the boundary; [`recommended_side`]
//! uses a linear-growth bound for that, and every trial reports whether a
//! particle touched the boundary anyway.

use super::{single_ab_at_center, Simulation, StepOutcome};
use crate::error::{arg, Error, Result};
use crate::model::{Boundary, ModelParams, Variant};
use crate::parallel::map_trials;
use crate::random::GraphicalRandomSource;
use crate::stats::{wilson, Z95};

/// Column header of the survival CSV rows.
pub const SURVIVAL_CSV_HEADER: &str =
    "variant,d,lambda,mu,epsilon,t_max,trials,successes,estimate,ci_lo,ci_hi,seed";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialOutcome {
    pub survived: bool,
    /// A particle reached a site on the box boundary.
    pub boundary_contact: bool,
    /// Time at which one of the species vanished, if it did.
    pub extinction_time: Option<f64>,
}

/// Box side `ceil(2·t_max·(1+λ)) + 1`, enough to keep a cluster started at
/// the centre away from the boundary up to `t_max`.
pub fn recommended_side(t_max: f64, lambda: f64) -> usize {
    (2.0 * t_max * (1.0 + lambda)).ceil() as usize + 1
}

/// One trial from a single AB at the box centre.
pub fn survival_trial(
    params: &ModelParams,
    t_max: f64,
    threshold: Option<usize>,
    source: GraphicalRandomSource,
) -> Result<TrialOutcome> {
    if !(t_max >= 0.0 && t_max.is_finite()) {
        return arg(format!("t_max must be finite and >= 0, got {t_max}"));
    }
    let start = single_ab_at_center(params)?;
    let mut sim = Simulation::new(*params, start, source)?;
    let alive = |s: &Simulation| {
        let c = s.lattice().counts();
        c.a > 0 && c.b > 0
    };
    let mut extinction_time = None;
    while alive(&sim) {
        match sim.step_until(t_max) {
            StepOutcome::Event { time, .. } => {
                if !alive(&sim) {
                    extinction_time = Some(time);
                }
            }
            StepOutcome::Horizon | StepOutcome::Quiescent => break,
        }
    }
    let c = sim.lattice().counts();
    let survived = c.a > 0 && c.b > 0 && threshold.is_none_or(|k| c.ab >= k);
    Ok(TrialOutcome {
        survived,
        boundary_contact: sim.boundary_contact(),
        extinction_time,
    })
}

/// Aggregated survival estimate at one parameter point.
#[derive(Debug, Clone, PartialEq)]
pub struct SurvivalStats {
    pub params: ModelParams,
    pub t_max: f64,
    pub trials: u64,
    pub successes: u64,
    pub estimate: f64,
    /// Wilson 95% interval.
    pub ci: (f64, f64),
    pub seed: u64,
    /// Trials in which a particle touched the box boundary.
    pub boundary_contacts: u64,
}

impl SurvivalStats {
    pub fn csv_row(&self) -> String {
        let p = &self.params;
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            p.variant,
            p.dim,
            p.lambda,
            p.mu,
            p.epsilon.map_or(String::new(), |e| e.to_string()),
            self.t_max,
            self.trials,
            self.successes,
            self.estimate,
            self.ci.0,
            self.ci.1,
            self.seed
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurvivalOptions {
    pub t_max: f64,
    pub trials: u64,
    pub base_seed: u64,
    pub parallelism: usize,
    /// Require at least this many AB sites at `t_max`.
    pub threshold: Option<usize>,
    /// Shared birth-clock ceiling, for runs coupled across λ.
    pub birth_ceiling: Option<f64>,
}

impl SurvivalOptions {
    pub fn new(t_max: f64, trials: u64, base_seed: u64) -> Self {
        SurvivalOptions {
            t_max,
            trials,
            base_seed,
            parallelism: 1,
            threshold: None,
            birth_ceiling: None,
        }
    }
}

pub fn estimate_survival(
    params: &ModelParams,
    t_max: f64,
    trials: u64,
    base_seed: u64,
    parallelism: usize,
) -> Result<SurvivalStats> {
    estimate_survival_with(
        params,
        &SurvivalOptions {
            parallelism,
            ..SurvivalOptions::new(t_max, trials, base_seed)
        },
    )
}

/// Independent trials on streams `(base_seed, trial)`.
pub fn estimate_survival_with(
    params: &ModelParams,
    opts: &SurvivalOptions,
) -> Result<SurvivalStats> {
    if opts.trials == 0 {
        return arg("trials must be >= 1");
    }
    params.validate()?;
    let outcomes = map_trials(opts.trials, opts.parallelism, |i| {
        let mut src = GraphicalRandomSource::new(opts.base_seed).for_trial(i);
        if let Some(c) = opts.birth_ceiling {
            src = src.with_birth_ceiling(c);
        }
        survival_trial(params, opts.t_max, opts.threshold, src)
    });
    let mut successes = 0;
    let mut contacts = 0;
    for o in outcomes {
        let o = o?;
        successes += o.survived as u64;
        contacts += o.boundary_contact as u64;
    }
    Ok(SurvivalStats {
        params: *params,
        t_max: opts.t_max,
        trials: opts.trials,
        successes,
        estimate: successes as f64 / opts.trials as f64,
        ci: wilson(successes, opts.trials, Z95),
        seed: opts.base_seed,
        boundary_contacts: contacts,
    })
}

/// Settings of the finite-size critical-value bisection.
#[derive(Debug, Clone, PartialEq)]
pub struct BisectOptions {
    pub mu: f64,
    pub dim: usize,
    pub t_max: f64,
    pub trials: u64,
    pub tol: f64,
    /// Survival probability at `t_max` that defines the effective λ.
    pub target: f64,
    /// Initial bracket; the estimate must be below `target` at the lower end
    /// and at or above it at the upper end.
    pub bracket: (f64, f64),
    /// Box side; defaults to [`recommended_side`] at the bracket top.
    pub side: Option<usize>,
    pub boundary: Boundary,
    pub base_seed: u64,
    pub parallelism: usize,
}

impl BisectOptions {
    pub fn new(mu: f64, t_max: f64, trials: u64, tol: f64, base_seed: u64) -> Self {
        BisectOptions {
            mu,
            dim: 1,
            t_max,
            trials,
            tol,
            target: 0.3,
            bracket: (0.5, 3.0),
            side: None,
            boundary: Boundary::Periodic,
            base_seed,
            parallelism: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BisectResult {
    /// Bracket `[lo, hi]` with estimate(lo) < target <= estimate(hi).
    pub interval: (f64, f64),
    /// Every evaluated point, sorted by λ.
    pub samples: Vec<SurvivalStats>,
}

impl BisectResult {
    pub fn midpoint(&self) -> f64 {
        0.5 * (self.interval.0 + self.interval.1)
    }
}

/// Bisects λ for the finite-horizon survival proxy. Every λ uses the same
/// seeds and birth ceiling, so the estimates are coupled and the empirical
/// curve is monotone.
pub fn bisect_lambda_c(opts: &BisectOptions) -> Result<BisectResult> {
    let (mut lo, mut hi) = opts.bracket;
    if !(opts.tol > 0.0) {
        return arg("tol must be > 0");
    }
    if !(0.0 <= lo && lo < hi && hi.is_finite()) {
        return arg(format!("invalid bracket [{lo}, {hi}]"));
    }
    if !(0.0 < opts.target && opts.target < 1.0) {
        return arg("target probability must lie in (0, 1)");
    }
    let ceiling = hi;
    let side = opts
        .side
        .unwrap_or_else(|| recommended_side(opts.t_max, hi));
    let base = ModelParams {
        side,
        dim: opts.dim,
        boundary: opts.boundary,
        ..ModelParams::new(Variant::Scp, lo, opts.mu)
    };
    let run = |lambda: f64| {
        estimate_survival_with(
            &base.with_lambda(lambda),
            &SurvivalOptions {
                t_max: opts.t_max,
                trials: opts.trials,
                base_seed: opts.base_seed,
                parallelism: opts.parallelism,
                threshold: None,
                birth_ceiling: Some(ceiling),
            },
        )
    };
    let mut samples = vec![run(lo)?, run(hi)?];
    if samples[0].estimate >= opts.target || samples[1].estimate < opts.target {
        return arg(format!(
            "bracket [{lo}, {hi}] does not straddle target {}: estimates {} and {}",
            opts.target, samples[0].estimate, samples[1].estimate
        ));
    }
    while hi - lo > opts.tol {
        let mid = 0.5 * (lo + hi);
        let s = run(mid)?;
        if s.estimate < opts.target {
            lo = mid;
        } else {
            hi = mid;
        }
        samples.push(s);
    }
    samples.sort_by(|a, b| a.params.lambda.total_cmp(&b.params.lambda));
    check_monotone(&samples)?;
    Ok(BisectResult {
        interval: (lo, hi),
        samples,
    })
}

fn check_monotone(samples: &[SurvivalStats]) -> Result<()> {
    for (i, a) in samples.iter().enumerate() {
        for b in &samples[i + 1..] {
            if a.ci.0 > b.ci.1 {
                return Err(Error::NonMonotone(format!(
                    "estimate {} at lambda {} exceeds {} at lambda {} beyond the 95% intervals",
                    a.estimate, a.params.lambda, b.estimate, b.params.lambda
                )));
            }
        }
    }
    Ok(())
}
