//! Exponential decay of the subcritical single-type contact process.
//!
//! Runs start from one particle at the box centre and record `|η_t|` on a
//! time grid. The decay constant comes from a weighted least-squares fit of
//! `log E|η_t| = log C + t log κ` over the tail of the grid, with weights
//! from the delta method (`n m² / var`).

use super::{Simulation, StepOutcome};
use crate::error::{arg, Error, Result};
use crate::model::{Boundary, Lattice, ModelParams, SiteState};
use crate::parallel::map_trials;
use crate::random::GraphicalRandomSource;
use crate::stats::{fit_line, Z95};

#[derive(Debug, Clone, PartialEq)]
pub struct KappaOptions {
    pub lambda: f64,
    pub dim: usize,
    /// Increasing sampling times.
    pub t_grid: Vec<f64>,
    pub trials: u64,
    pub base_seed: u64,
    pub parallelism: usize,
    /// Box side; defaults to a box the cluster cannot cross by the last
    /// grid time.
    pub side: Option<usize>,
    pub boundary: Boundary,
    /// Fraction of the grid (from the end) used by the fit.
    pub tail_fraction: f64,
    /// Shared birth ceiling for fits coupled across λ.
    pub birth_ceiling: Option<f64>,
}

impl KappaOptions {
    pub fn new(lambda: f64, t_grid: Vec<f64>, trials: u64, base_seed: u64) -> Self {
        KappaOptions {
            lambda,
            dim: 1,
            t_grid,
            trials,
            base_seed,
            parallelism: 1,
            side: None,
            boundary: Boundary::Closed,
            tail_fraction: 0.5,
            birth_ceiling: None,
        }
    }
}

/// Sample mean and variance of `|η_t|` at one grid time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OccupancyMoment {
    pub t: f64,
    pub mean: f64,
    pub var: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KappaFit {
    pub kappa: f64,
    /// 95% interval from the slope standard error.
    pub kappa_ci: (f64, f64),
    pub log_c: f64,
    pub slope: f64,
    pub slope_se: f64,
    /// Weighted residual sum of squares of the tail fit.
    pub rss: f64,
    pub points_used: usize,
    pub moments: Vec<OccupancyMoment>,
}

/// Occupancy `|η_t|` at each grid time for one trial.
fn occupancy_path(
    params: &ModelParams,
    grid: &[f64],
    source: GraphicalRandomSource,
) -> Result<Vec<f64>> {
    let mut l = Lattice::for_params(params)?;
    let c = l.center();
    l.set(c, SiteState::A);
    let mut sim = Simulation::new(*params, l, source)?;
    let mut out = Vec::with_capacity(grid.len());
    for &t in grid {
        let n = sim.lattice().counts().a;
        if n == 0 {
            out.push(0.0);
            continue;
        }
        if let StepOutcome::Event { .. } = sim.run_until(t) {
            unreachable!("run_until only returns on horizon or quiescence");
        }
        out.push(sim.lattice().counts().a as f64);
    }
    Ok(out)
}

/// Mean and variance of `|η_t|` over independent trials.
pub fn occupancy_moments(opts: &KappaOptions) -> Result<Vec<OccupancyMoment>> {
    if opts.trials < 2 {
        return arg("need at least 2 trials");
    }
    if opts.t_grid.is_empty()
        || opts.t_grid.windows(2).any(|w| w[0] >= w[1])
        || opts.t_grid[0] < 0.0
    {
        return arg("t_grid must be nonempty, nonnegative and strictly increasing");
    }
    let t_last = *opts.t_grid.last().unwrap_or(&0.0);
    let side = opts
        .side
        .unwrap_or_else(|| super::recommended_side(t_last, opts.lambda));
    let params = ModelParams::contact(opts.lambda).with_box(opts.dim, side, opts.boundary);
    params.validate()?;
    let paths = map_trials(opts.trials, opts.parallelism, |i| {
        let mut src = GraphicalRandomSource::new(opts.base_seed).for_trial(i);
        if let Some(c) = opts.birth_ceiling {
            src = src.with_birth_ceiling(c);
        }
        occupancy_path(&params, &opts.t_grid, src)
    });
    let n = opts.trials as f64;
    let mut sum = vec![0.0; opts.t_grid.len()];
    let mut sq = vec![0.0; opts.t_grid.len()];
    for p in paths {
        for (k, x) in p?.into_iter().enumerate() {
            sum[k] += x;
            sq[k] += x * x;
        }
    }
    Ok(opts
        .t_grid
        .iter()
        .enumerate()
        .map(|(k, &t)| {
            let mean = sum[k] / n;
            OccupancyMoment {
                t,
                mean,
                var: ((sq[k] - n * mean * mean) / (n - 1.0)).max(0.0),
            }
        })
        .collect())
}

/// Fits the decay constant from already estimated moments.
pub fn fit_kappa(moments: &[OccupancyMoment], trials: u64, tail_fraction: f64) -> Result<KappaFit> {
    if !(tail_fraction > 0.0 && tail_fraction <= 1.0) {
        return arg("tail_fraction must lie in (0, 1]");
    }
    let start = ((1.0 - tail_fraction) * moments.len() as f64).floor() as usize;
    let tail: Vec<&OccupancyMoment> = moments[start..].iter().filter(|m| m.mean > 0.0).collect();
    if tail.len() < 2 {
        return Err(Error::Fit(
            "fewer than two tail points with positive mean occupancy".into(),
        ));
    }
    let xs: Vec<f64> = tail.iter().map(|m| m.t).collect();
    let ys: Vec<f64> = tail.iter().map(|m| m.mean.ln()).collect();
    let n = trials as f64;
    // var(log m̂) ≈ var / (n m²); a zero variance (every trial alive with the
    // same size) is floored at one trial's worth of spread
    let ws: Vec<f64> = tail
        .iter()
        .map(|m| n * m.mean * m.mean / m.var.max(m.mean * m.mean / n))
        .collect();
    let fit =
        fit_line(&xs, &ys, Some(&ws)).ok_or_else(|| Error::Fit("degenerate time grid".into()))?;
    if !(fit.slope < 0.0) {
        return Err(Error::Fit(format!(
            "occupancy does not decay (log-slope {}); lambda is likely supercritical",
            fit.slope
        )));
    }
    let kappa = fit.slope.exp();
    Ok(KappaFit {
        kappa,
        kappa_ci: (
            (fit.slope - Z95 * fit.slope_se).exp(),
            (fit.slope + Z95 * fit.slope_se).exp().min(1.0),
        ),
        log_c: fit.intercept,
        slope: fit.slope,
        slope_se: fit.slope_se,
        rss: fit.rss,
        points_used: fit.points,
        moments: moments.to_vec(),
    })
}

/// Estimates κ(λ) with `E|η_t| ≈ C κ^t`.
pub fn kappa_fit(opts: &KappaOptions) -> Result<KappaFit> {
    let moments = occupancy_moments(opts)?;
    fit_kappa(&moments, opts.trials, opts.tail_fraction)
}

/// Column header of the decay CSV rows.
pub const KAPPA_CSV_HEADER: &str =
    "lambda,d,trials,kappa,kappa_ci_lo,kappa_ci_hi,log_c,slope_se,rss,seed";

impl KappaFit {
    pub fn csv_row(&self, opts: &KappaOptions) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{}",
            opts.lambda,
            opts.dim,
            opts.trials,
            self.kappa,
            self.kappa_ci.0,
            self.kappa_ci.1,
            self.log_c,
            self.slope_se,
            self.rss,
            opts.base_seed
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(step: f64, n: usize) -> Vec<f64> {
        (1..=n).map(|k| k as f64 * step).collect()
    }

    #[test]
    fn pure_death_gives_inverse_e() {
        let opts = KappaOptions::new(0.0, grid(0.5, 8), 20_000, 3);
        let fit = kappa_fit(&opts).unwrap();
        let target = (-1.0f64).exp();
        assert!(
            (fit.kappa / target - 1.0).abs() < 0.03,
            "kappa = {}",
            fit.kappa
        );
        for m in &fit.moments {
            // |η_t| is Bernoulli(e^{-t})
            assert!((m.mean - (-m.t).exp()).abs() < 4.0 * ((-m.t).exp() / 20_000.0).sqrt() + 1e-3);
        }
    }

    #[test]
    fn growth_is_a_fit_error() {
        let mut opts = KappaOptions::new(4.0, grid(1.0, 6), 50, 1);
        opts.side = Some(61);
        assert!(matches!(kappa_fit(&opts), Err(Error::Fit(_))));
    }

    #[test]
    fn bad_grids_are_rejected() {
        assert!(kappa_fit(&KappaOptions::new(0.2, vec![], 10, 1)).is_err());
        assert!(kappa_fit(&KappaOptions::new(0.2, vec![2.0, 1.0], 10, 1)).is_err());
        assert!(kappa_fit(&KappaOptions::new(0.2, vec![1.0, 2.0], 1, 1)).is_err());
    }

    #[test]
    fn fit_is_deterministic() {
        let opts = KappaOptions::new(0.5, grid(1.0, 6), 500, 9);
        assert_eq!(kappa_fit(&opts).unwrap(), kappa_fit(&opts).unwrap());
    }

    #[test]
    fn exact_exponential_moments_are_recovered() {
        let moments: Vec<OccupancyMoment> = (0..10)
            .map(|k| {
                let t = k as f64;
                let m = 2.0 * 0.6f64.powf(t);
                OccupancyMoment { t, mean: m, var: m }
            })
            .collect();
        let fit = fit_kappa(&moments, 1000, 1.0).unwrap();
        assert!((fit.kappa - 0.6).abs() < 1e-12);
        assert!((fit.log_c - 2f64.ln()).abs() < 1e-12);
        assert!(fit.rss < 1e-20);
    }
}
