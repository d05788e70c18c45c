use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::PathBuf;

use symbiosim::bounds::{
    block_budget, block_event_mc, bounds_report, oriented_percolation, supermartingale_drift,
    DriftOptions, BLOCK_CSV_HEADER, BOUNDS_CSV_HEADER, DRIFT_CSV_HEADER,
};
use symbiosim::engine::decay::{kappa_fit, KappaOptions, KAPPA_CSV_HEADER};
use symbiosim::engine::{
    bisect_lambda_c, estimate_survival_with, read_event_log, recommended_side, simulate_trajectory,
    single_ab_at_center, slab_count, write_event_log, BisectOptions, SlabSpecies, SpaceTimeRegion,
    SurvivalOptions, SURVIVAL_CSV_HEADER,
};
use symbiosim::meanfield::{equilibrium_roots, find_jumps, MEANFIELD_CSV_HEADER};
use symbiosim::model::{ModelParams, Variant};
use symbiosim::pde::{
    check_time_step, equilibrium_densities, front_speed, CoupledSolver, FrontOptions, PdeBoundary,
    ScalarField, FRONT_CSV_HEADER,
};
use symbiosim::random::GraphicalRandomSource;
use symbiosim::sbvm::{
    edge_drift_max_front, edge_drift_paper, gap_stationary, max_front_critical, mc_speed_zero,
    sbvm_critical, simulate_front, SBVM_CSV_HEADER,
};

use crate::config::{def, flag, opt, req, Key, Params};
use crate::error::CliError;
use crate::manifest::Run;
use crate::plot::{gnuplot_blocks, series, svg_chart, Table};

type Out = Result<(), CliError>;

const OUT_DIR: Key = def(
    "out-dir",
    "results",
    "directory for CSV outputs and manifest.jsonl",
);
const PARALLELISM: Key = def("parallelism", "1", "trial-level worker threads");
const SEED: Key = opt("seed", "base seed (falls back to SYMBIOSIM_SEED)");

pub struct Subcommand {
    pub name: &'static str,
    pub about: &'static str,
    pub keys: &'static [Key],
    pub run: fn(&Params) -> Out,
}

pub const SUBCOMMANDS: &[Subcommand] = &[
    Subcommand {
        name: "survival",
        about: "Survival probability from a single AB over a lambda x mu grid",
        keys: &[
            req("lambda", "birth rates: list or start:stop:step"),
            req("mu", "AB death rates: list or start:stop:step"),
            req("trials", "trials per grid point"),
            req("tmax", "time horizon"),
            SEED,
            def("variant", "scp", "scp or scpd"),
            opt("epsilon", "stirring scale for scpd"),
            def("dim", "1", "lattice dimension"),
            opt("side", "box side (default: large enough for tmax)"),
            def("boundary", "closed", "closed or periodic"),
            opt(
                "threshold",
                "also require at least this many AB sites at tmax",
            ),
            flag("coupled", "share one birth ceiling across the lambda grid"),
            flag(
                "log-events",
                "write the event log of trial 0 at every grid point",
            ),
            PARALLELISM,
            OUT_DIR,
        ],
        run: survival,
    },
    Subcommand {
        name: "bisect",
        about: "Bisect the finite-horizon critical birth rate",
        keys: &[
            req("mu", "AB death rate"),
            req("tmax", "time horizon"),
            req("trials", "trials per evaluated lambda"),
            SEED,
            def("tol", "0.05", "final bracket width"),
            def(
                "target",
                "0.3",
                "survival probability defining the effective critical value",
            ),
            def("lo", "0.5", "lower end of the initial bracket"),
            def("hi", "3.0", "upper end of the initial bracket"),
            def("dim", "1", "lattice dimension"),
            opt("side", "box side (default: large enough for tmax at hi)"),
            def("boundary", "periodic", "closed or periodic"),
            PARALLELISM,
            OUT_DIR,
        ],
        run: bisect,
    },
    Subcommand {
        name: "meanfield",
        about: "Equilibria, stability and rho_A of the mean-field ODE",
        keys: &[
            req("mu", "AB death rates: list or start:stop:step"),
            req("lambda-grid", "birth rates: list or start:stop:step"),
            def("jump-tol", "1e-6", "minimal rho_A jump reported"),
            OUT_DIR,
        ],
        run: meanfield,
    },
    Subcommand {
        name: "sbvm",
        about: "Symbiotic biased voter model: gap law, edge drifts and front simulation",
        keys: &[
            req("lambda", "birth rates: list or start:stop:step"),
            req("mu", "AB death rates in [0, 1): list or start:stop:step"),
            def("n-max", "400", "gap truncation of the stationary law"),
            def("t-end", "0", "length of the front simulation (0 skips it)"),
            def("sample-dt", "1", "sampling step of the front simulation"),
            flag("mc-zero", "bisect the simulated speed zero for every mu"),
            def("zero-lo", "0.05", "lower end of the speed-zero bracket"),
            def("zero-hi", "3", "upper end of the speed-zero bracket"),
            def("zero-tol", "0.01", "width of the speed-zero bracket"),
            SEED,
            OUT_DIR,
        ],
        run: sbvm,
    },
    Subcommand {
        name: "bounds",
        about: "Bounds on the critical value and the block-construction checks",
        keys: &[
            def(
                "mu-grid",
                "0.0001,0.0005,0.001,0.01,0.05,0.1,0.25,0.5,0.75,1",
                "mu values of the report",
            ),
            def("dims", "1,2", "dimensions of the report"),
            opt(
                "lambda-c1",
                "estimates of the critical value at mu = 1, one per dimension",
            ),
            def("c", "9", "time-scaling constant of the block budget"),
            def("b", "0.028281", "mu*T of the block budget"),
            def(
                "block-trials",
                "0",
                "trials of the wet-block simulation (0 skips it)",
            ),
            def(
                "block-lambda",
                "0.5",
                "birth rate of the wet-block simulation",
            ),
            def(
                "block-mu",
                "0.0001",
                "AB death rate of the wet-block simulation",
            ),
            def(
                "perc-trials",
                "0",
                "trials of the oriented percolation run (0 skips it)",
            ),
            def("perc-p", "0.99", "open-site probability"),
            def("perc-rows", "200", "rows to reach"),
            def("perc-width", "400", "strip width"),
            def(
                "drift-trials",
                "0",
                "trials of the supermartingale drift check (0 skips it)",
            ),
            def("drift-lambda", "0.2", "birth rate of the drift check"),
            def("drift-mu", "0.5", "AB death rate of the drift check"),
            def("drift-delta", "0.4", "weight of single occupancy in M"),
            SEED,
            PARALLELISM,
            OUT_DIR,
        ],
        run: bounds,
    },
    Subcommand {
        name: "pde",
        about: "Fast-stirring limit: front speed or field evolution",
        keys: &[
            req("lambda", "birth rate"),
            req("mu", "AB death rate"),
            def("mode", "front", "front or evolve"),
            opt("length", "domain length (front: 400, evolve: 100)"),
            def("dx", "0.1", "grid spacing"),
            opt("dt", "time step (default 0.8 dx^2)"),
            def("t-burn", "40", "front: start of the regression window"),
            def(
                "t-end",
                "120",
                "front: end of the window; evolve: final time",
            ),
            def("init", "step", "evolve: step, bump or a constant in [0, 1]"),
            opt("init-b", "evolve: initial q_B if different from q_A"),
            def("snapshot-dt", "10", "evolve: time between snapshots"),
            def("boundary", "neumann", "evolve: neumann or periodic"),
            OUT_DIR,
        ],
        run: pde,
    },
    Subcommand {
        name: "decay",
        about: "Decay constant of the subcritical contact process",
        keys: &[
            req("lambda", "birth rates: list or start:stop:step"),
            req("t-grid", "sampling times: list or start:stop:step"),
            req("trials", "trials per lambda"),
            SEED,
            def("dim", "1", "lattice dimension"),
            opt("side", "box side"),
            def("tail", "0.5", "fraction of the grid used by the fit"),
            PARALLELISM,
            OUT_DIR,
        ],
        run: decay,
    },
    Subcommand {
        name: "slab",
        about: "Count separated occupied points of a space-time slab in a stored event log",
        keys: &[
            req("log", "event log written by survival --log-events"),
            req("lo", "lower corner, comma-separated lattice coordinates"),
            req("hi", "upper corner, comma-separated lattice coordinates"),
            req("t0", "start of the time window"),
            req("t1", "end of the time window"),
            def("species", "AB", "A, B or AB"),
            OUT_DIR,
        ],
        run: slab,
    },
    Subcommand {
        name: "plot",
        about: "Gnuplot data blocks and an SVG line chart from a CSV table",
        keys: &[
            req("input", "CSV file with a header row"),
            opt("x", "x column (default: first column)"),
            opt("y", "y column (default: second column)"),
            opt("group", "column whose values split the series"),
            def("format", "both", "svg, gnuplot or both"),
            OUT_DIR,
        ],
        run: plot,
    },
];

fn model_params(p: &Params, lambda: f64, mu: f64, side: usize) -> Result<ModelParams, CliError> {
    let variant: Variant = p.get("variant")?;
    let base = match variant {
        Variant::Scp => ModelParams::scp(lambda, mu),
        Variant::Scpd => ModelParams::scpd(lambda, mu, p.get("epsilon")?),
        other => {
            return Err(CliError::usage(format!(
                "survival needs variant scp or scpd, got {other}"
            )))
        }
    };
    Ok(base.with_box(p.get("dim")?, side, p.get("boundary")?))
}

fn survival(p: &Params) -> Out {
    let seed = p.seed()?;
    let lambdas = p.grid("lambda")?;
    let mus = p.grid("mu")?;
    let t_max: f64 = p.get("tmax")?;
    let lambda_top = lambdas.iter().cloned().fold(0.0, f64::max);
    let side = match p.get_opt("side")? {
        Some(s) => s,
        None => recommended_side(t_max, lambda_top),
    };
    let mut run = Run::begin("survival", p, Some(seed))?;
    let mut rows = Vec::new();
    let mut k = 0;
    for &mu in &mus {
        for &lambda in &lambdas {
            let params = model_params(p, lambda, mu, side)?;
            let opts = SurvivalOptions {
                parallelism: p.get("parallelism")?,
                threshold: p.get_opt("threshold")?,
                birth_ceiling: p
                    .flag("coupled")?
                    .then_some(lambda_top.max(f64::MIN_POSITIVE)),
                ..SurvivalOptions::new(t_max, p.get("trials")?, seed)
            };
            let s = estimate_survival_with(&params, &opts)?;
            if s.boundary_contacts > 0 {
                eprintln!(
                    "warning: {} of {} trials reached the box boundary at lambda {lambda}, mu {mu}",
                    s.boundary_contacts, s.trials
                );
            }
            rows.push(s.csv_row());
            if p.flag("log-events")? {
                let traj = simulate_trajectory(
                    params,
                    single_ab_at_center(&params)?,
                    GraphicalRandomSource::new(seed).for_trial(0),
                    t_max,
                    0.0,
                )?;
                let path = run.path(Some(&format!("events-{k}")), "log");
                write_event_log(BufWriter::new(File::create(&path)?), &traj)?;
            }
            k += 1;
        }
    }
    run.write_csv(None, SURVIVAL_CSV_HEADER, &rows)?;
    run.finish()?;
    Ok(())
}

fn bisect(p: &Params) -> Out {
    let seed = p.seed()?;
    let mut o = BisectOptions::new(
        p.get("mu")?,
        p.get("tmax")?,
        p.get("trials")?,
        p.get("tol")?,
        seed,
    );
    o.target = p.get("target")?;
    o.bracket = (p.get("lo")?, p.get("hi")?);
    o.dim = p.get("dim")?;
    o.side = p.get_opt("side")?;
    o.boundary = p.get("boundary")?;
    o.parallelism = p.get("parallelism")?;
    let mut run = Run::begin("bisect", p, Some(seed))?;
    let r = bisect_lambda_c(&o)?;
    let rows: Vec<String> = r.samples.iter().map(|s| s.csv_row()).collect();
    run.write_csv(None, SURVIVAL_CSV_HEADER, &rows)?;
    run.write_csv(
        Some("interval"),
        "mu,d,t_max,trials,target,lambda_lo,lambda_hi,midpoint,seed",
        &[format!(
            "{},{},{},{},{},{},{},{},{}",
            o.mu,
            o.dim,
            o.t_max,
            o.trials,
            o.target,
            r.interval.0,
            r.interval.1,
            r.midpoint(),
            seed
        )],
    )?;
    run.finish()?;
    Ok(())
}

fn meanfield(p: &Params) -> Out {
    let mus = p.grid("mu")?;
    let grid = p.grid("lambda-grid")?;
    let tol: f64 = p.get("jump-tol")?;
    let mut run = Run::begin("meanfield", p, None)?;
    let mut rows = Vec::new();
    let mut jumps = Vec::new();
    for &mu in &mus {
        for &lambda in &grid {
            rows.push(equilibrium_roots(lambda, mu)?.csv_row());
        }
        for j in find_jumps(mu, &grid, tol)? {
            jumps.push(format!("{mu},{},{}", j.lambda, j.size));
        }
    }
    run.write_csv(None, MEANFIELD_CSV_HEADER, &rows)?;
    run.write_csv(Some("jumps"), "mu,lambda,size", &jumps)?;
    run.finish()?;
    Ok(())
}

fn sbvm(p: &Params) -> Out {
    let lambdas = p.grid("lambda")?;
    let mus = p.grid("mu")?;
    let n_max: usize = p.get("n-max")?;
    let t_end: f64 = p.get("t-end")?;
    let mc_zero = p.flag("mc-zero")?;
    let seed = if t_end > 0.0 || mc_zero {
        Some(p.seed()?)
    } else {
        None
    };
    let mut run = Run::begin("sbvm", p, seed)?;
    let mut rows = Vec::new();
    for &mu in &mus {
        for &lambda in &lambdas {
            let law = gap_stationary(lambda, mu, n_max)?;
            let mut row = format!(
                "{lambda},{mu},{},{},{},{},{}",
                law.pi[0],
                law.ratio,
                edge_drift_paper(lambda, mu)?,
                edge_drift_max_front(lambda, mu)?,
                sbvm_critical(mu)?
            );
            match seed {
                Some(s) if t_end > 0.0 => {
                    let f = simulate_front(
                        lambda,
                        mu,
                        t_end,
                        p.get("sample-dt")?,
                        &GraphicalRandomSource::new(s),
                    )?;
                    row.push_str(&format!(",{},{},{}", f.speed, f.speed_ci.0, f.speed_ci.1));
                }
                _ => row.push_str(",,,"),
            }
            rows.push(row);
        }
    }
    run.write_csv(None, SBVM_CSV_HEADER, &rows)?;
    if mc_zero {
        let (lo, hi, tol) = (p.get("zero-lo")?, p.get("zero-hi")?, p.get("zero-tol")?);
        if !(t_end > 0.0) {
            return Err(CliError::usage("mc-zero needs t-end > 0"));
        }
        let src = GraphicalRandomSource::new(seed.unwrap_or_default());
        let mut zeros = Vec::new();
        for &mu in &mus {
            let z = mc_speed_zero(mu, lo, hi, tol, t_end, &src)?;
            zeros.push(format!(
                "{mu},{},{},{z}",
                sbvm_critical(mu)?,
                max_front_critical(mu)
            ));
        }
        run.write_csv(
            Some("zeros"),
            "mu,lambda_c_formula,lambda_c_max_front,lambda_c_mc",
            &zeros,
        )?;
    }
    run.finish()?;
    Ok(())
}

fn bounds(p: &Params) -> Out {
    let mus = p.grid("mu-grid")?;
    let dims: Vec<usize> = p.list("dims")?;
    let proxies: Vec<f64> = if p.has("lambda-c1") {
        p.list("lambda-c1")?
    } else {
        Vec::new()
    };
    if !proxies.is_empty() && proxies.len() != dims.len() {
        return Err(CliError::usage(
            "lambda-c1 needs one value per entry of dims",
        ));
    }
    let block_trials: u64 = p.get("block-trials")?;
    let perc_trials: u64 = p.get("perc-trials")?;
    let drift_trials: u64 = p.get("drift-trials")?;
    let seed = if block_trials + perc_trials + drift_trials > 0 {
        Some(p.seed()?)
    } else {
        None
    };
    let workers: usize = p.get("parallelism")?;
    let mut run = Run::begin("bounds", p, seed)?;
    let report = bounds_report(&mus, &dims, |d| {
        dims.iter()
            .position(|&x| x == d)
            .and_then(|i| proxies.get(i).copied())
    })?;
    let rows: Vec<String> = report.iter().map(|r| r.csv_row()).collect();
    run.write_csv(None, BOUNDS_CSV_HEADER, &rows)?;
    let b = block_budget(p.get("c")?, p.get("b")?)?;
    run.write_csv(
        Some("budget"),
        "c,b,failure_bound,satisfied",
        &[format!(
            "{},{},{},{}",
            b.c, b.b, b.failure_bound, b.satisfied
        )],
    )?;
    if let Some(seed) = seed {
        if block_trials > 0 {
            let e = block_event_mc(
                p.get("block-lambda")?,
                p.get("block-mu")?,
                p.get("c")?,
                block_trials,
                seed,
                workers,
                None,
            )?;
            run.write_csv(Some("block"), BLOCK_CSV_HEADER, &[e.csv_row()])?;
        }
        if perc_trials > 0 {
            let rows_n: usize = p.get("perc-rows")?;
            let c = oriented_percolation(
                p.get("perc-p")?,
                rows_n,
                p.get("perc-width")?,
                perc_trials,
                seed,
                workers,
            )?;
            let curve: Vec<String> = c
                .survival
                .iter()
                .enumerate()
                .map(|(n, s)| format!("{},{n},{s}", c.p))
                .collect();
            run.write_csv(Some("percolation"), "p,row,survival", &curve)?;
        }
        if drift_trials > 0 {
            let mut o = DriftOptions::new(
                p.get("drift-lambda")?,
                p.get("drift-mu")?,
                p.get("drift-delta")?,
                drift_trials,
                seed,
            );
            o.parallelism = workers;
            let e = supermartingale_drift(&o)?;
            run.write_csv(Some("drift"), DRIFT_CSV_HEADER, &[e.csv_row()])?;
        }
    }
    run.finish()?;
    Ok(())
}

fn initial_field(
    spec: &str,
    n: usize,
    dx: f64,
    boundary: PdeBoundary,
    q_star: f64,
) -> Result<ScalarField, CliError> {
    let len = (n - 1) as f64 * dx;
    let level = if q_star > 0.0 { q_star } else { 1.0 };
    let f: Box<dyn Fn(f64) -> f64> = match spec {
        "step" => Box::new(move |x| if x < len / 2.0 { level } else { 0.0 }),
        "bump" => Box::new(move |x| {
            if (x - len / 2.0).abs() < len / 20.0 {
                level
            } else {
                0.0
            }
        }),
        other => {
            let v: f64 = other.parse().map_err(|_| {
                CliError::usage(format!(
                    "init must be step, bump or a number, got {other:?}"
                ))
            })?;
            Box::new(move |_| v)
        }
    };
    Ok(ScalarField::from_fn(n, dx, boundary, f)?)
}

fn pde(p: &Params) -> Out {
    let lambda: f64 = p.get("lambda")?;
    let mu: f64 = p.get("mu")?;
    let dx: f64 = p.get("dx")?;
    let eq = equilibrium_densities(lambda, mu)?;
    let dt: f64 = p.get_opt("dt")?.unwrap_or(0.8 * dx * dx);
    check_time_step(dt, dx, 1).map_err(|e| CliError::usage(e.to_string()))?;
    let mode = p.str("mode")?.to_string();
    let mut run = Run::begin("pde", p, None)?;
    run.write_csv(
        Some("equilibrium"),
        "lambda,mu,q_star,p_AB,p_A,extinct",
        &[format!(
            "{lambda},{mu},{},{},{},{}",
            eq.q_star, eq.p_ab, eq.p_a, eq.extinct
        )],
    )?;
    match mode.as_str() {
        "front" => {
            let mut o = FrontOptions::new(lambda, mu);
            o.dx = dx;
            o.dt = Some(dt);
            o.length = p.get_opt("length")?.unwrap_or(o.length);
            o.t_burn = p.get("t-burn")?;
            o.t_end = p.get("t-end")?;
            let f = front_speed(&o)?;
            run.write_csv(None, FRONT_CSV_HEADER, &[f.csv_row(&o)])?;
            let pos: Vec<String> = f
                .positions
                .iter()
                .map(|(t, x)| format!("{t},{x}"))
                .collect();
            run.write_csv(Some("positions"), "t,position", &pos)?;
        }
        "evolve" => {
            let length: f64 = p.get_opt("length")?.unwrap_or(100.0);
            let boundary = match p.str("boundary")? {
                "neumann" => PdeBoundary::Neumann,
                "periodic" => PdeBoundary::Periodic,
                other => return Err(CliError::usage(format!("unknown boundary {other:?}"))),
            };
            let n = (length / dx).round() as usize + 1;
            let qa = initial_field(p.str("init")?, n, dx, boundary, eq.q_star)?;
            let qb = match p.get_opt::<String>("init-b")? {
                Some(s) => initial_field(&s, n, dx, boundary, eq.q_star)?,
                None => qa.clone(),
            };
            let mut solver = CoupledSolver::new(qa, qb, lambda, mu, dt)?;
            let t_end: f64 = p.get("t-end")?;
            let every: f64 = p.get("snapshot-dt")?;
            if !(every > 0.0) {
                return Err(CliError::usage("snapshot-dt must be positive"));
            }
            let mut rows = Vec::new();
            let mut k = 0usize;
            loop {
                let t = (k as f64 * every).min(t_end);
                solver.advance_to(t)?;
                for i in 0..n {
                    rows.push(format!(
                        "{t},{},{},{}",
                        solver.qa.x(i),
                        solver.qa.values[i],
                        solver.qb.values[i]
                    ));
                }
                if t >= t_end {
                    break;
                }
                k += 1;
            }
            run.write_csv(None, "t,x,qA,qB", &rows)?;
        }
        other => {
            return Err(CliError::usage(format!(
                "mode must be front or evolve, got {other:?}"
            )))
        }
    }
    run.finish()?;
    Ok(())
}

fn decay(p: &Params) -> Out {
    let seed = p.seed()?;
    let grid = p.grid("t-grid")?;
    let mut run = Run::begin("decay", p, Some(seed))?;
    let mut rows = Vec::new();
    for lambda in p.grid("lambda")? {
        let mut o = KappaOptions::new(lambda, grid.clone(), p.get("trials")?, seed);
        o.dim = p.get("dim")?;
        o.side = p.get_opt("side")?;
        o.tail_fraction = p.get("tail")?;
        o.parallelism = p.get("parallelism")?;
        rows.push(kappa_fit(&o)?.csv_row(&o));
    }
    run.write_csv(None, KAPPA_CSV_HEADER, &rows)?;
    run.finish()?;
    Ok(())
}

fn slab(p: &Params) -> Out {
    let path = PathBuf::from(p.str("log")?);
    let file = File::open(&path)
        .map_err(|e| CliError::usage(format!("cannot open {}: {e}", path.display())))?;
    let traj = read_event_log(BufReader::new(file))?;
    let lo: Vec<i64> = p.list("lo")?;
    let hi: Vec<i64> = p.list("hi")?;
    let species: SlabSpecies = p.get("species")?;
    let region = SpaceTimeRegion::new(lo.clone(), hi.clone(), p.get("t0")?, p.get("t1")?)?;
    let count = slab_count(&traj, &region, species)?;
    let mut run = Run::begin("slab", p, None)?;
    let join = |v: &[i64]| {
        v.iter()
            .map(|x| x.to_string())
            .collect::<Vec<_>>()
            .join(";")
    };
    run.write_csv(
        None,
        "log,species,lo,hi,t0,t1,count",
        &[format!(
            "{},{},{},{},{},{},{count}",
            path.display(),
            p.str("species")?,
            join(&lo),
            join(&hi),
            region.t0,
            region.t1
        )],
    )?;
    run.finish()?;
    Ok(())
}

fn plot(p: &Params) -> Out {
    let table = Table::read(&PathBuf::from(p.str("input")?))?;
    let pick = |key: &str, idx: usize| -> Result<String, CliError> {
        match p.get_opt::<String>(key)? {
            Some(c) => Ok(c),
            None => Ok(table.columns.get(idx).cloned().unwrap_or_default()),
        }
    };
    let (x, y) = (pick("x", 0)?, pick("y", 1)?);
    let group = p.get_opt::<String>("group")?;
    let s = series(&table, &x, &y, group.as_deref())?;
    if s.is_empty() {
        eprintln!(
            "warning: no data points in {}; writing an empty plot",
            p.str("input")?
        );
    }
    let format = p.str("format")?.to_string();
    if !matches!(format.as_str(), "svg" | "gnuplot" | "both") {
        return Err(CliError::usage(format!(
            "format must be svg, gnuplot or both, got {format:?}"
        )));
    }
    let mut run = Run::begin("plot", p, None)?;
    if format != "svg" {
        let path = run.path(None, "dat");
        std::fs::write(path, gnuplot_blocks(&s, &x, &y, group.as_deref()))?;
    }
    if format != "gnuplot" {
        let path = run.path(None, "svg");
        std::fs::write(path, svg_chart(&s, &x, &y, group.as_deref()))?;
    }
    run.finish()?;
    Ok(())
}
