//! Finite differences for the fast-stirring limit
//!
//! `∂q_A/∂t = ½Δq_A + q_A(λ(1 − q_A) − 1 + (1 − μ)q_B)` and its mirror for
//! `q_B`. With `q_A = q_B = q` this reduces to
//! `∂q/∂t = ½Δq + (λ − 1)q − (λ − 1 + μ)q²`.
//!
//! Time stepping is forward Euler with the centred second difference; fields
//! leaving `[0, 1]` by more than `1e−9` abort the run.

use crate::error::{arg, Error, Result};
use crate::stats::fit_line;

const RANGE_SLACK: f64 = 1e-9;

/// Fraction of the explicit stability limit `dx²/d` allowed for `dt`.
pub const STABILITY_SAFETY: f64 = 0.9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PdeBoundary {
    Neumann,
    Periodic,
}

/// Values on a uniform grid of `nx` points (1-d) or `nx × ny` points
/// (2-d, row-major with `x` fastest).
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    pub dx: f64,
    pub nx: usize,
    pub ny: usize,
    pub boundary: PdeBoundary,
    pub values: Vec<f64>,
}

impl ScalarField {
    pub fn new_1d(values: Vec<f64>, dx: f64, boundary: PdeBoundary) -> Result<Self> {
        let nx = values.len();
        Self::new_2d(values, nx, 1, dx, boundary)
    }

    pub fn new_2d(
        values: Vec<f64>,
        nx: usize,
        ny: usize,
        dx: f64,
        boundary: PdeBoundary,
    ) -> Result<Self> {
        if !(dx > 0.0 && dx.is_finite()) {
            return arg(format!("dx must be positive, got {dx}"));
        }
        if nx < 2 || ny == 0 || values.len() != nx * ny {
            return Err(Error::GridMismatch(format!(
                "{} values do not form a {nx} x {ny} grid with at least two points per axis",
                values.len()
            )));
        }
        if ny == 2 {
            return Err(Error::GridMismatch(
                "a 2-d grid needs at least three rows".into(),
            ));
        }
        let f = ScalarField {
            dx,
            nx,
            ny,
            boundary,
            values,
        };
        f.check_range(0.0)?;
        Ok(f)
    }

    /// 1-d field of `n` points sampling `f` at `x = i·dx`.
    pub fn from_fn(
        n: usize,
        dx: f64,
        boundary: PdeBoundary,
        f: impl Fn(f64) -> f64,
    ) -> Result<Self> {
        Self::new_1d((0..n).map(|i| f(i as f64 * dx)).collect(), dx, boundary)
    }

    pub fn dim(&self) -> usize {
        if self.ny > 1 {
            2
        } else {
            1
        }
    }

    pub fn x(&self, i: usize) -> f64 {
        (i % self.nx) as f64 * self.dx
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    fn same_grid(&self, other: &ScalarField) -> Result<()> {
        if self.nx != other.nx
            || self.ny != other.ny
            || self.dx != other.dx
            || self.boundary != other.boundary
        {
            return Err(Error::GridMismatch(format!(
                "{}x{} (dx {}) vs {}x{} (dx {})",
                self.nx, self.ny, self.dx, other.nx, other.ny, other.dx
            )));
        }
        Ok(())
    }

    fn check_range(&self, t: f64) -> Result<()> {
        match self
            .values
            .iter()
            .position(|&v| !(-RANGE_SLACK..=1.0 + RANGE_SLACK).contains(&v))
        {
            None => Ok(()),
            Some(i) => Err(Error::Stability(format!(
                "value {} at grid point {i} left [0, 1] at t = {t}",
                self.values[i]
            ))),
        }
    }

    fn axis_neighbors(&self, i: usize, n: usize) -> (usize, usize) {
        match self.boundary {
            PdeBoundary::Periodic => ((i + n - 1) % n, (i + 1) % n),
            // mirror ghost points: q_{−1} = q_1, q_n = q_{n−2}
            PdeBoundary::Neumann => (
                if i == 0 { 1 } else { i - 1 },
                if i + 1 == n { n - 2 } else { i + 1 },
            ),
        }
    }

    /// `½Δq` with the centred second difference.
    pub fn half_laplacian(&self) -> Vec<f64> {
        let h2 = self.dx * self.dx;
        let q = &self.values;
        let mut out = vec![0.0; q.len()];
        for j in 0..self.ny {
            for i in 0..self.nx {
                let k = j * self.nx + i;
                let (l, r) = self.axis_neighbors(i, self.nx);
                let mut s = q[j * self.nx + l] + q[j * self.nx + r] - 2.0 * q[k];
                if self.ny > 1 {
                    let (d, u) = self.axis_neighbors(j, self.ny);
                    s += q[d * self.nx + i] + q[u * self.nx + i] - 2.0 * q[k];
                }
                out[k] = 0.5 * s / h2;
            }
        }
        out
    }
}

fn coupled_reaction(a: f64, b: f64, lambda: f64, mu: f64) -> f64 {
    a * (lambda * (1.0 - a) - 1.0 + (1.0 - mu) * b)
}

/// Reaction of the symmetric reduction.
pub fn scalar_reaction(q: f64, lambda: f64, mu: f64) -> f64 {
    (lambda - 1.0) * q - (lambda - 1.0 + mu) * q * q
}

pub fn coupled_rhs(
    qa: &ScalarField,
    qb: &ScalarField,
    lambda: f64,
    mu: f64,
) -> Result<(Vec<f64>, Vec<f64>)> {
    qa.same_grid(qb)?;
    let mut da = qa.half_laplacian();
    let mut db = qb.half_laplacian();
    for k in 0..da.len() {
        let (a, b) = (qa.values[k], qb.values[k]);
        da[k] += coupled_reaction(a, b, lambda, mu);
        db[k] += coupled_reaction(b, a, lambda, mu);
    }
    Ok((da, db))
}

pub fn scalar_rhs(q: &ScalarField, lambda: f64, mu: f64) -> Vec<f64> {
    let mut d = q.half_laplacian();
    for (dk, &v) in d.iter_mut().zip(&q.values) {
        *dk += scalar_reaction(v, lambda, mu);
    }
    d
}

/// Checks `dt ≤ 0.9 dx²/d`.
pub fn check_time_step(dt: f64, dx: f64, dim: usize) -> Result<()> {
    let limit = STABILITY_SAFETY * dx * dx / dim as f64;
    if !(dt > 0.0 && dt <= limit) {
        return Err(Error::Stability(format!(
            "dt = {dt} exceeds the explicit limit {limit} for dx = {dx} in {dim} dimension(s)"
        )));
    }
    Ok(())
}

fn step_count(span: f64, dt: f64) -> (usize, f64) {
    if span <= 0.0 {
        return (0, 0.0);
    }
    let n = (span / dt - 1e-9).ceil().max(1.0) as usize;
    (n, span / n as f64)
}

/// Forward-Euler integrator of the symmetric scalar equation.
#[derive(Debug, Clone)]
pub struct ScalarSolver {
    pub q: ScalarField,
    pub lambda: f64,
    pub mu: f64,
    pub dt: f64,
    pub t: f64,
}

impl ScalarSolver {
    pub fn new(q: ScalarField, lambda: f64, mu: f64, dt: f64) -> Result<Self> {
        check_time_step(dt, q.dx, q.dim())?;
        Ok(ScalarSolver {
            q,
            lambda,
            mu,
            dt,
            t: 0.0,
        })
    }

    /// Steps to time `t` with steps no longer than `dt`.
    pub fn advance_to(&mut self, t: f64) -> Result<()> {
        let (n, h) = step_count(t - self.t, self.dt);
        for k in 1..=n {
            let d = scalar_rhs(&self.q, self.lambda, self.mu);
            for (v, dv) in self.q.values.iter_mut().zip(d) {
                *v += h * dv;
            }
            self.t = if k == n { t } else { self.t + h };
            self.q.check_range(self.t)?;
        }
        Ok(())
    }
}

/// Forward-Euler integrator of the coupled system.
#[derive(Debug, Clone)]
pub struct CoupledSolver {
    pub qa: ScalarField,
    pub qb: ScalarField,
    pub lambda: f64,
    pub mu: f64,
    pub dt: f64,
    pub t: f64,
}

impl CoupledSolver {
    pub fn new(qa: ScalarField, qb: ScalarField, lambda: f64, mu: f64, dt: f64) -> Result<Self> {
        qa.same_grid(&qb)?;
        check_time_step(dt, qa.dx, qa.dim())?;
        Ok(CoupledSolver {
            qa,
            qb,
            lambda,
            mu,
            dt,
            t: 0.0,
        })
    }

    pub fn advance_to(&mut self, t: f64) -> Result<()> {
        let (n, h) = step_count(t - self.t, self.dt);
        for k in 1..=n {
            let (da, db) = coupled_rhs(&self.qa, &self.qb, self.lambda, self.mu)?;
            for (v, dv) in self.qa.values.iter_mut().zip(da) {
                *v += h * dv;
            }
            for (v, dv) in self.qb.values.iter_mut().zip(db) {
                *v += h * dv;
            }
            self.t = if k == n { t } else { self.t + h };
            self.qa.check_range(self.t)?;
            self.qb.check_range(self.t)?;
        }
        Ok(())
    }
}

/// Integrates the coupled system to `t_end`.
pub fn evolve(
    qa: ScalarField,
    qb: ScalarField,
    lambda: f64,
    mu: f64,
    t_end: f64,
    dt: f64,
) -> Result<(ScalarField, ScalarField)> {
    let mut s = CoupledSolver::new(qa, qb, lambda, mu, dt)?;
    s.advance_to(t_end)?;
    Ok((s.qa, s.qb))
}

pub fn evolve_scalar(
    q: ScalarField,
    lambda: f64,
    mu: f64,
    t_end: f64,
    dt: f64,
) -> Result<ScalarField> {
    let mut s = ScalarSolver::new(q, lambda, mu, dt)?;
    s.advance_to(t_end)?;
    Ok(s.q)
}

/// Homogeneous equilibrium of the stirred limit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Equilibrium {
    /// `(λ − 1)/(λ + μ − 1)`.
    pub q_star: f64,
    pub p_ab: f64,
    /// Also the density of sites holding only B.
    pub p_a: f64,
    pub extinct: bool,
}

pub fn equilibrium_densities(lambda: f64, mu: f64) -> Result<Equilibrium> {
    if !(lambda.is_finite() && (0.0..=1.0).contains(&mu)) {
        return arg(format!(
            "need finite lambda and mu in [0, 1], got {lambda}, {mu}"
        ));
    }
    if lambda <= 1.0 {
        return Ok(Equilibrium {
            q_star: 0.0,
            p_ab: 0.0,
            p_a: 0.0,
            extinct: true,
        });
    }
    let s = lambda + mu - 1.0;
    let q_star = (lambda - 1.0) / s;
    Ok(Equilibrium {
        q_star,
        p_ab: q_star * q_star,
        p_a: (lambda - 1.0) * mu / (s * s),
        extinct: false,
    })
}

/// `√(2(λ − 1))`.
pub fn predicted_front_speed(lambda: f64) -> f64 {
    (2.0 * (lambda - 1.0)).max(0.0).sqrt()
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrontOptions {
    pub lambda: f64,
    pub mu: f64,
    pub length: f64,
    pub dx: f64,
    /// Defaults to `0.8 dx²`.
    pub dt: Option<f64>,
    /// Positions are regressed over `[t_burn, t_end]`.
    pub t_burn: f64,
    pub t_end: f64,
    pub sample_dt: f64,
}

impl FrontOptions {
    pub fn new(lambda: f64, mu: f64) -> Self {
        FrontOptions {
            lambda,
            mu,
            length: 400.0,
            dx: 0.1,
            dt: None,
            t_burn: 40.0,
            t_end: 120.0,
            sample_dt: 1.0,
        }
    }

    pub fn time_step(&self) -> f64 {
        self.dt.unwrap_or(0.8 * self.dx * self.dx)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrontSpeed {
    pub speed: f64,
    /// Standard error of the regression slope.
    pub fit_err: f64,
    pub predicted: f64,
    /// `(t, position)` of the level set over the window.
    pub positions: Vec<(f64, f64)>,
    pub dt: f64,
}

pub const FRONT_CSV_HEADER: &str = "lambda,mu,dx,dt,speed,fit_err";

impl FrontSpeed {
    pub fn csv_row(&self, opts: &FrontOptions) -> String {
        format!(
            "{},{},{},{},{},{}",
            opts.lambda, opts.mu, opts.dx, self.dt, self.speed, self.fit_err
        )
    }
}

/// Rightmost crossing of `level`, interpolated linearly between grid points.
pub fn level_crossing(q: &ScalarField, level: f64) -> Option<f64> {
    let v = &q.values[..q.nx];
    let i = (0..v.len()).rev().find(|&i| v[i] >= level)?;
    if i + 1 == v.len() {
        return None;
    }
    let frac = (v[i] - level) / (v[i] - v[i + 1]);
    Some((i as f64 + frac) * q.dx)
}

/// Speed of the invasion front from a step `q = q*` on the left half of a
/// Neumann interval into `q = 0`.
pub fn front_speed(opts: &FrontOptions) -> Result<FrontSpeed> {
    let eq = equilibrium_densities(opts.lambda, opts.mu)?;
    if eq.extinct {
        return arg(format!("front speed needs lambda > 1, got {}", opts.lambda));
    }
    if !(opts.t_burn >= 0.0 && opts.t_end > opts.t_burn && opts.sample_dt > 0.0) {
        return arg("need 0 <= t_burn < t_end and sample_dt > 0");
    }
    let n = (opts.length / opts.dx).round() as usize + 1;
    let half = opts.length / 2.0;
    let q0 = ScalarField::from_fn(n, opts.dx, PdeBoundary::Neumann, |x| {
        if x < half {
            eq.q_star
        } else {
            0.0
        }
    })?;
    let dt = opts.time_step();
    let mut solver = ScalarSolver::new(q0, opts.lambda, opts.mu, dt)?;
    let level = eq.q_star / 2.0;
    let mut positions = Vec::new();
    let mut k = 0usize;
    loop {
        let t = opts.t_burn + k as f64 * opts.sample_dt;
        if t > opts.t_end + 1e-9 {
            break;
        }
        solver.advance_to(t)?;
        let edge = solver.q.values[n - 1];
        if edge > 1e-6 * eq.q_star {
            return Err(Error::Window(format!(
                "front reached the right boundary by t = {t} (edge value {edge:e}); enlarge the domain or shorten the window"
            )));
        }
        let x = level_crossing(&solver.q, level)
            .ok_or_else(|| Error::Window(format!("no crossing of level {level} at t = {t}")))?;
        positions.push((t, x));
        k += 1;
    }
    let xs: Vec<f64> = positions.iter().map(|p| p.0).collect();
    let ys: Vec<f64> = positions.iter().map(|p| p.1).collect();
    let fit = fit_line(&xs, &ys, None)
        .ok_or_else(|| Error::Window("window holds fewer than two samples".into()))?;
    Ok(FrontSpeed {
        speed: fit.slope,
        fit_err: fit.slope_se,
        predicted: predicted_front_speed(opts.lambda),
        positions,
        dt,
    })
}
