use super::Simulation;
use crate::error::{arg, Result};
use crate::model::{Boundary, Lattice, ModelParams, SiteState};
use crate::parallel::map_trials;
use crate::random::GraphicalRandomSource;
use crate::stats::mean_var;

/// Settings for equilibrium density estimates of the stirred process.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityOptions {
    pub lambda: f64,
    pub mu: f64,
    pub epsilon: f64,
    pub dim: usize,
    pub side: usize,
    /// Samples before this time are discarded.
    pub t_burn: f64,
    pub t_end: f64,
    pub sample_dt: f64,
    pub trials: u64,
    pub base_seed: u64,
    pub parallelism: usize,
}

impl DensityOptions {
    pub fn new(lambda: f64, mu: f64, epsilon: f64, trials: u64, base_seed: u64) -> Self {
        DensityOptions {
            lambda,
            mu,
            epsilon,
            dim: 1,
            side: 200,
            t_burn: 10.0,
            t_end: 30.0,
            sample_dt: 0.5,
            trials,
            base_seed,
            parallelism: 1,
        }
    }

    fn params(&self) -> ModelParams {
        ModelParams::scpd(self.lambda, self.mu, self.epsilon).with_box(
            self.dim,
            self.side,
            Boundary::Periodic,
        )
    }
}

/// Time-averaged fractions of sites in states A only, B only and AB.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityEstimate {
    pub epsilon: f64,
    pub p_a: f64,
    pub p_b: f64,
    pub p_ab: f64,
    /// Standard errors across trials.
    pub se_a: f64,
    pub se_b: f64,
    pub se_ab: f64,
    /// Trials that died out before `t_end`.
    pub extinct: u64,
}

impl DensityEstimate {
    /// Euclidean distance of `(p_A, p_AB)` to a target pair.
    pub fn distance_to(&self, p_a: f64, p_ab: f64) -> f64 {
        ((self.p_a - p_a).powi(2) + (self.p_ab - p_ab).powi(2)).sqrt()
    }
}

fn trial_averages(
    params: &ModelParams,
    opts: &DensityOptions,
    src: GraphicalRandomSource,
) -> Result<([f64; 3], bool)> {
    let mut l = Lattice::for_params(params)?;
    l.fill(SiteState::AB);
    let mut sim = Simulation::new(*params, l, src)?;
    let n = sim.lattice().len() as f64;
    let mut acc = [0.0; 3];
    let mut samples = 0usize;
    let mut k = 0u64;
    loop {
        let t = opts.t_burn + k as f64 * opts.sample_dt;
        if t > opts.t_end + 1e-12 {
            break;
        }
        sim.run_until(t);
        let c = sim.lattice().counts();
        acc[0] += c.only_a() as f64 / n;
        acc[1] += c.only_b() as f64 / n;
        acc[2] += c.ab as f64 / n;
        samples += 1;
        k += 1;
    }
    let extinct = sim.lattice().counts().occupied() == 0;
    Ok((acc.map(|x| x / samples as f64), extinct))
}

/// Starts every trial from the all-AB configuration on a periodic box and
/// averages the state fractions over `[t_burn, t_end]`.
pub fn estimate_densities(opts: &DensityOptions) -> Result<DensityEstimate> {
    if opts.trials == 0 {
        return arg("trials must be >= 1");
    }
    if !(opts.sample_dt > 0.0 && opts.t_burn >= 0.0 && opts.t_end >= opts.t_burn) {
        return arg("need sample_dt > 0 and 0 <= t_burn <= t_end");
    }
    let params = opts.params();
    params.validate()?;
    let runs = map_trials(opts.trials, opts.parallelism, |i| {
        trial_averages(
            &params,
            opts,
            GraphicalRandomSource::new(opts.base_seed).for_trial(i),
        )
    });
    let mut cols: [Vec<f64>; 3] = Default::default();
    let mut extinct = 0;
    for r in runs {
        let (avg, dead) = r?;
        for (c, x) in cols.iter_mut().zip(avg) {
            c.push(x);
        }
        extinct += dead as u64;
    }
    let stat = |xs: &[f64]| {
        let (m, v) = mean_var(xs);
        (m, (v / xs.len() as f64).sqrt())
    };
    let (p_a, se_a) = stat(&cols[0]);
    let (p_b, se_b) = stat(&cols[1]);
    let (p_ab, se_ab) = stat(&cols[2]);
    Ok(DensityEstimate {
        epsilon: opts.epsilon,
        p_a,
        p_b,
        p_ab,
        se_a,
        se_b,
        se_ab,
        extinct,
    })
}
