//! Mean-field ODE for the symbiotic contact process: right-hand side,
//! RK4 integration, closed-form symmetric equilibria with their stability,
//! phase classification and the ρ_A equilibrium curves.

use nalgebra::Matrix3;

use crate::error::{arg, Error, Result};

/// Tolerance on the simplex constraint after every integration step.
pub const SIMPLEX_TOL: f64 = 1e-12;
/// Real parts of eigenvalues within this distance of 0 count as ties.
pub const STABILITY_TIE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanFieldState {
    pub p0: f64,
    pub pa: f64,
    pub pb: f64,
    pub pab: f64,
}

impl MeanFieldState {
    pub fn new(pa: f64, pb: f64, pab: f64) -> Self {
        MeanFieldState {
            p0: 1.0 - pa - pb - pab,
            pa,
            pb,
            pab,
        }
    }

    pub fn all_ab() -> Self {
        MeanFieldState::new(0.0, 0.0, 1.0)
    }

    /// Symmetric state `pA = pB = p` with the given `pAB`.
    pub fn symmetric(p: f64, pab: f64) -> Self {
        MeanFieldState::new(p, p, pab)
    }

    pub fn rho_a(&self) -> f64 {
        self.pa + self.pab
    }

    pub fn rho_b(&self) -> f64 {
        self.pb + self.pab
    }

    fn as_array(&self) -> [f64; 4] {
        [self.p0, self.pa, self.pb, self.pab]
    }

    fn from_array(a: [f64; 4]) -> Self {
        MeanFieldState {
            p0: a[0],
            pa: a[1],
            pb: a[2],
            pab: a[3],
        }
    }

    /// Largest violation of nonnegativity or of the unit sum.
    pub fn simplex_error(&self) -> f64 {
        let a = self.as_array();
        let neg = a.iter().fold(0.0f64, |m, &x| m.max(-x));
        neg.max((a.iter().sum::<f64>() - 1.0).abs())
    }

    pub fn max_abs_diff(&self, other: &MeanFieldState) -> f64 {
        self.as_array()
            .iter()
            .zip(other.as_array())
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()))
    }
}

/// Time derivative `(dp0, dpA, dpB, dpAB)`.
pub fn mf_rhs(s: &MeanFieldState, lambda: f64, mu: f64) -> MeanFieldState {
    let MeanFieldState { p0, pa, pb, pab } = *s;
    let da = lambda * p0 * (pa + pab) + mu * pab - pa - lambda * pa * (pb + pab);
    let db = lambda * p0 * (pb + pab) + mu * pab - pb - lambda * pb * (pa + pab);
    let dab = 2.0 * lambda * pa * pb + lambda * (pa + pb) * pab - 2.0 * mu * pab;
    MeanFieldState {
        p0: -(da + db + dab),
        pa: da,
        pb: db,
        pab: dab,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeanFieldTrajectory {
    pub times: Vec<f64>,
    pub states: Vec<MeanFieldState>,
    /// The right-hand side at the final state is below 1e-10 in sup-norm.
    pub converged: bool,
}

impl MeanFieldTrajectory {
    pub fn last(&self) -> &MeanFieldState {
        self.states
            .last()
            .expect("trajectory holds the initial state")
    }
}

/// Fixed-step RK4 from `state0` to `t_end`, storing every `stride`-th step
/// (and always the final one).
pub fn mf_integrate_strided(
    state0: MeanFieldState,
    lambda: f64,
    mu: f64,
    t_end: f64,
    dt: f64,
    stride: usize,
) -> Result<MeanFieldTrajectory> {
    if !(dt > 0.0 && dt.is_finite()) {
        return arg(format!("dt must be positive, got {dt}"));
    }
    if !(t_end >= 0.0 && t_end.is_finite()) {
        return arg(format!("t_end must be finite and >= 0, got {t_end}"));
    }
    if state0.simplex_error() > SIMPLEX_TOL {
        return Err(Error::Simplex {
            t: 0.0,
            detail: format!("initial state {state0:?} is not on the simplex"),
        });
    }
    let steps = (t_end / dt).round() as usize;
    let stride = stride.max(1);
    let f = |s: [f64; 4]| mf_rhs(&MeanFieldState::from_array(s), lambda, mu).as_array();
    let axpy = |a: [f64; 4], h: f64, k: [f64; 4]| std::array::from_fn(|i| a[i] + h * k[i]);
    let mut y = state0.as_array();
    let mut times = vec![0.0];
    let mut states = vec![state0];
    for n in 1..=steps {
        let k1 = f(y);
        let k2 = f(axpy(y, dt / 2.0, k1));
        let k3 = f(axpy(y, dt / 2.0, k2));
        let k4 = f(axpy(y, dt, k3));
        y = std::array::from_fn(|i| y[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]));
        // p0 is carried as the complement so rounding cannot drift the sum
        y[0] = 1.0 - y[1] - y[2] - y[3];
        let s = MeanFieldState::from_array(y);
        let t = n as f64 * dt;
        let err = s.simplex_error();
        if err > SIMPLEX_TOL {
            return Err(Error::Simplex {
                t,
                detail: format!("violation {err:e} with dt = {dt}; reduce the step size"),
            });
        }
        if n % stride == 0 || n == steps {
            times.push(t);
            states.push(s);
        }
    }
    let last = *states.last().unwrap_or(&state0);
    let r = mf_rhs(&last, lambda, mu);
    let converged = r.max_abs_diff(&MeanFieldState::from_array([0.0; 4])) < 1e-10;
    Ok(MeanFieldTrajectory {
        times,
        states,
        converged,
    })
}

/// Fixed-step RK4 storing every step.
pub fn mf_integrate(
    state0: MeanFieldState,
    lambda: f64,
    mu: f64,
    t_end: f64,
    dt: f64,
) -> Result<MeanFieldTrajectory> {
    mf_integrate_strided(state0, lambda, mu, t_end, dt, 1)
}

/// `pAB` of the symmetric equilibrium with `pA = pB = p`.
pub fn pab_of(p: f64, lambda: f64, mu: f64) -> f64 {
    lambda * p * p / (mu - lambda * p)
}

/// The quadratic whose roots are the nonzero symmetric equilibria.
pub fn equilibrium_quadratic(p: f64, lambda: f64, mu: f64) -> f64 {
    mu * mu * (lambda - 1.0)
        + mu * lambda * (2.0 - lambda - 2.0 * mu) * p
        + lambda * lambda * (mu - 1.0) * p * p
}

/// Jacobian of `(dpA, dpB, dpAB)` with `p0` eliminated.
pub fn jacobian(s: &MeanFieldState, lambda: f64, mu: f64) -> Matrix3<f64> {
    let (x, y, z) = (s.pa, s.pb, s.pab);
    let p0 = 1.0 - x - y - z;
    let l = lambda;
    Matrix3::new(
        l * (p0 - (x + z)) - 1.0 - l * (y + z),
        -l * (x + z) - l * x,
        l * (p0 - (x + z)) + mu - l * x,
        -l * (y + z) - l * y,
        l * (p0 - (y + z)) - 1.0 - l * (x + z),
        l * (p0 - (y + z)) + mu - l * y,
        2.0 * l * y + l * z,
        2.0 * l * x + l * z,
        l * (x + y) - 2.0 * mu,
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stability {
    Stable,
    Unstable,
    /// Leading real part within [`STABILITY_TIE`] of 0.
    Marginal,
}

impl Stability {
    pub fn tag(self) -> &'static str {
        match self {
            Stability::Stable => "S",
            Stability::Unstable => "U",
            Stability::Marginal => "M",
        }
    }
}

pub fn stability_at(s: &MeanFieldState, lambda: f64, mu: f64) -> Stability {
    let lead = jacobian(s, lambda, mu)
        .complex_eigenvalues()
        .iter()
        .map(|e| e.re)
        .fold(f64::NEG_INFINITY, f64::max);
    if lead > STABILITY_TIE {
        Stability::Unstable
    } else if lead < -STABILITY_TIE {
        Stability::Stable
    } else {
        Stability::Marginal
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    Extinction,
    ContinuousSurvival,
    Bistable,
}

impl Regime {
    pub fn name(self) -> &'static str {
        match self {
            Regime::Extinction => "extinction",
            Regime::ContinuousSurvival => "continuous-survival",
            Regime::Bistable => "bistable",
        }
    }
}

impl std::fmt::Display for Regime {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Symmetric equilibrium `pA = pB = p`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Root {
    pub p: f64,
    pub pab: f64,
    pub stability: Stability,
    /// Value of the defining quadratic at `p` (0 for the trivial root).
    pub residual: f64,
}

impl Root {
    pub fn state(&self) -> MeanFieldState {
        MeanFieldState::symmetric(self.p, self.pab)
    }

    pub fn rho_a(&self) -> f64 {
        self.p + self.pab
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhaseReport {
    pub mu: f64,
    pub lambda: f64,
    /// Ascending in `p`, starting with the trivial root.
    pub roots: Vec<Root>,
    pub regime: Regime,
}

impl PhaseReport {
    /// Largest root that is not unstable. Marginal roots count as stable,
    /// which keeps `ρ_A` continuous where a root crosses the tie band.
    pub fn largest_stable(&self) -> Option<&Root> {
        self.roots
            .iter()
            .rev()
            .find(|r| r.stability != Stability::Unstable)
    }

    /// `ρ_A` at the largest stable root.
    pub fn rho_a(&self) -> f64 {
        self.largest_stable().map_or(0.0, Root::rho_a)
    }
}

/// Closed-form symmetric equilibria.
pub fn equilibrium_roots(lambda: f64, mu: f64) -> Result<PhaseReport> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return arg(format!("lambda must be positive, got {lambda}"));
    }
    if !(mu > 0.0 && mu < 1.0) {
        return arg(format!("mu must lie in (0, 1), got {mu}"));
    }
    let zero = MeanFieldState::symmetric(0.0, 0.0);
    let mut roots = vec![Root {
        p: 0.0,
        pab: 0.0,
        stability: stability_at(&zero, lambda, mu),
        residual: 0.0,
    }];
    let disc = lambda * lambda - 4.0 * mu * (1.0 - mu);
    if disc >= 0.0 {
        let scale = mu / (2.0 * lambda * (1.0 - mu));
        let b = 2.0 * (1.0 - mu) - lambda;
        let mut ps = vec![scale * (b - disc.sqrt()), scale * (b + disc.sqrt())];
        ps.dedup();
        for p in ps {
            // a root within rounding of 0 is the trivial one
            if p > 1e-12 && p < 1.0 && mu - lambda * p > 0.0 {
                let pab = pab_of(p, lambda, mu);
                if 2.0 * p + pab > 1.0 {
                    continue;
                }
                let s = MeanFieldState::symmetric(p, pab);
                roots.push(Root {
                    p,
                    pab,
                    stability: stability_at(&s, lambda, mu),
                    residual: equilibrium_quadratic(p, lambda, mu),
                });
            }
        }
    }
    Ok(PhaseReport {
        mu,
        lambda,
        roots,
        regime: classify_phase(lambda, mu),
    })
}

/// `√(4μ(1−μ))`, where positive roots first appear when μ < 1/2.
pub fn bistability_onset(mu: f64) -> f64 {
    (4.0 * mu * (1.0 - mu)).sqrt()
}

pub fn classify_phase(lambda: f64, mu: f64) -> Regime {
    if lambda > 1.0 {
        Regime::ContinuousSurvival
    } else if mu < 0.5 && bistability_onset(mu) < lambda && lambda < 1.0 {
        Regime::Bistable
    } else {
        Regime::Extinction
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Figure1Row {
    pub mu: f64,
    pub lambda: f64,
    pub rho_a: f64,
    pub regime: Regime,
}

/// `ρ_A = p* + pAB(p*)` at the largest stable root for every grid point.
pub fn figure1_data(mu_list: &[f64], lambda_grid: &[f64]) -> Result<Vec<Figure1Row>> {
    if mu_list.is_empty() || lambda_grid.is_empty() {
        return arg("mu list and lambda grid must be nonempty");
    }
    let mut out = Vec::with_capacity(mu_list.len() * lambda_grid.len());
    for &mu in mu_list {
        for &lambda in lambda_grid {
            let rep = equilibrium_roots(lambda, mu)?;
            out.push(Figure1Row {
                mu,
                lambda,
                rho_a: rep.rho_a(),
                regime: rep.regime,
            });
        }
    }
    Ok(out)
}

pub fn rho_a_at(lambda: f64, mu: f64) -> Result<f64> {
    Ok(equilibrium_roots(lambda, mu)?.rho_a())
}

/// A discontinuity of the `ρ_A` curve located by refinement.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jump {
    pub lambda: f64,
    pub size: f64,
}

/// Discontinuities of `λ ↦ ρ_A(λ, μ)` inside the grid: every grid interval
/// is halved 60 times towards its steeper half, and an increment that
/// survives the refinement above `tol` is reported as a jump.
pub fn find_jumps(mu: f64, lambda_grid: &[f64], tol: f64) -> Result<Vec<Jump>> {
    let mut out = Vec::new();
    for w in lambda_grid.windows(2) {
        let (mut a, mut b) = (w[0], w[1]);
        let (mut ra, mut rb) = (rho_a_at(a, mu)?, rho_a_at(b, mu)?);
        if (rb - ra).abs() <= tol {
            continue;
        }
        for _ in 0..60 {
            let m = 0.5 * (a + b);
            let rm = rho_a_at(m, mu)?;
            if (rm - ra).abs() >= (rb - rm).abs() {
                b = m;
                rb = rm;
            } else {
                a = m;
                ra = rm;
            }
        }
        if (rb - ra).abs() > tol {
            out.push(Jump {
                lambda: 0.5 * (a + b),
                size: rb - ra,
            });
        }
    }
    Ok(out)
}

/// Column header of the mean-field CSV rows.
pub const MEANFIELD_CSV_HEADER: &str = "mu,lambda,root0,root1,root2,stable_flags,rho_A,regime";

impl PhaseReport {
    pub fn csv_row(&self) -> String {
        let root = |k: usize| self.roots.get(k).map_or(String::new(), |r| r.p.to_string());
        let flags: String = self.roots.iter().map(|r| r.stability.tag()).collect();
        format!(
            "{},{},{},{},{},{},{},{}",
            self.mu,
            self.lambda,
            root(0),
            root(1),
            root(2),
            flags,
            self.rho_a(),
            self.regime
        )
    }
}
