use std::io::{BufRead, Write};

use super::{Event, EventKind, Simulation, StepOutcome};
use crate::error::{arg, Error, Result};
use crate::model::{Boundary, Counts, Lattice, ModelParams, SiteState, Variant};
use crate::random::GraphicalRandomSource;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CountSample {
    pub t: f64,
    pub counts: Counts,
}

/// Full record of one run: initial configuration, every site change and
/// the count series on a sampling grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub params: ModelParams,
    pub initial: Lattice,
    pub events: Vec<Event>,
    pub samples: Vec<CountSample>,
    /// Time up to which the record is complete.
    pub t_end: f64,
}

impl Trajectory {
    /// Configuration at time `t` (events at exactly `t` included).
    pub fn replay_to(&self, t: f64) -> Lattice {
        let mut l = self.initial.clone();
        for e in self.events.iter().take_while(|e| e.time <= t) {
            l.set(e.site, e.kind.apply(l.get(e.site)));
        }
        l
    }

    pub fn final_state(&self) -> Lattice {
        self.replay_to(f64::INFINITY)
    }

    /// Times of the effective events, strictly increasing except for the
    /// paired records of a stirring exchange.
    pub fn is_time_ordered(&self) -> bool {
        self.events.windows(2).all(|w| {
            w[0].time < w[1].time
                || (w[0].time == w[1].time
                    && matches!(w[1].kind, EventKind::Stir(_))
                    && w[0].kind == w[1].kind)
        })
    }

    /// Counts after every event, starting with the initial counts at t = 0.
    pub fn count_path(&self) -> Vec<(f64, Counts)> {
        let mut l = self.initial.clone();
        let mut out = Vec::with_capacity(self.events.len() + 1);
        out.push((0.0, l.counts()));
        for (i, e) in self.events.iter().enumerate() {
            l.set(e.site, e.kind.apply(l.get(e.site)));
            let paired = self.events.get(i + 1).is_some_and(|n| n.time == e.time);
            if !paired {
                out.push((e.time, l.counts()));
            }
        }
        out
    }
}

/// Runs the process from `initial` to `t_end`, logging every event and
/// sampling counts every `sample_dt` (no samples when `sample_dt` is not
/// positive).
pub fn simulate_trajectory(
    params: ModelParams,
    initial: Lattice,
    source: GraphicalRandomSource,
    t_end: f64,
    sample_dt: f64,
) -> Result<Trajectory> {
    if !(t_end >= 0.0 && t_end.is_finite()) {
        return arg(format!("t_end must be finite and >= 0, got {t_end}"));
    }
    let mut sim = Simulation::new(params, initial.clone(), source)?.with_event_log();
    let mut samples = Vec::new();
    let grid: Vec<f64> = if sample_dt > 0.0 {
        let n = (t_end / sample_dt).floor() as usize;
        (0..=n).map(|k| k as f64 * sample_dt).collect()
    } else {
        Vec::new()
    };
    for &t in &grid {
        sim.run_until(t);
        samples.push(CountSample {
            t,
            counts: sim.lattice().counts(),
        });
    }
    if let StepOutcome::Event { .. } = sim.run_until(t_end) {
        unreachable!("run_until only returns on horizon or quiescence");
    }
    Ok(Trajectory {
        params,
        initial,
        events: sim.take_events(),
        samples,
        t_end,
    })
}

const LOG_MAGIC: &str = "# symbiosim-events v1";

/// Writes the trajectory as a line-delimited event log: a header carrying
/// geometry and the initial occupied sites, then one `time site code` record
/// per site change.
pub fn write_event_log<W: Write>(mut w: W, traj: &Trajectory) -> std::io::Result<()> {
    let p = &traj.params;
    writeln!(w, "{LOG_MAGIC}")?;
    writeln!(
        w,
        "# variant={} lambda={:?} mu={:?} epsilon={} dim={} side={} boundary={} t_end={:?}",
        p.variant,
        p.lambda,
        p.mu,
        p.epsilon.map_or("none".to_string(), |e| format!("{e:?}")),
        p.dim,
        p.side,
        p.boundary,
        traj.t_end
    )?;
    for (site, state) in traj.initial.occupied() {
        writeln!(w, "# init {site} {state}")?;
    }
    for e in &traj.events {
        writeln!(w, "{:?} {} {}", e.time, e.site, e.kind.code())?;
    }
    Ok(())
}

fn parse_err(line: usize, msg: impl std::fmt::Display) -> Error {
    Error::Argument(format!("event log line {line}: {msg}"))
}

/// Reads a log written by [`write_event_log`].
pub fn read_event_log<R: BufRead>(r: R) -> Result<Trajectory> {
    let mut lines = r.lines().enumerate();
    let mut next = || -> Result<Option<(usize, String)>> {
        match lines.next() {
            None => Ok(None),
            Some((i, l)) => l
                .map(|l| Some((i + 1, l)))
                .map_err(|e| Error::Argument(format!("reading event log: {e}"))),
        }
    };
    match next()? {
        Some((_, l)) if l.trim() == LOG_MAGIC => {}
        _ => return arg("not a symbiosim event log (missing header)"),
    }
    let (hline, header) = next()?.ok_or_else(|| Error::Argument("event log truncated".into()))?;
    let mut params = ModelParams::scp(0.0, 0.0);
    let mut t_end = None;
    for field in header.trim_start_matches('#').split_whitespace() {
        let (k, v) = field
            .split_once('=')
            .ok_or_else(|| parse_err(hline, field))?;
        let num = |v: &str| v.parse::<f64>().map_err(|e| parse_err(hline, e));
        let int = |v: &str| v.parse::<usize>().map_err(|e| parse_err(hline, e));
        match k {
            "variant" => params.variant = v.parse::<Variant>()?,
            "lambda" => params.lambda = num(v)?,
            "mu" => params.mu = num(v)?,
            "epsilon" => params.epsilon = if v == "none" { None } else { Some(num(v)?) },
            "dim" => params.dim = int(v)?,
            "side" => params.side = int(v)?,
            "boundary" => params.boundary = v.parse::<Boundary>()?,
            "t_end" => t_end = Some(num(v)?),
            other => return Err(parse_err(hline, format!("unknown header key {other}"))),
        }
    }
    let mut initial = Lattice::for_params(&params)?;
    let mut events = Vec::new();
    let mut current = initial.clone();
    while let Some((i, line)) = next()? {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix("# init ") {
            let mut it = rest.split_whitespace();
            let site: usize = it
                .next()
                .ok_or_else(|| parse_err(i, "missing site"))?
                .parse()
                .map_err(|e| parse_err(i, e))?;
            let state: SiteState = it
                .next()
                .ok_or_else(|| parse_err(i, "missing state"))?
                .parse()?;
            if site >= initial.len() {
                return Err(parse_err(i, "site outside the box"));
            }
            initial.set(site, state);
            current.set(site, state);
            continue;
        }
        if line.starts_with('#') {
            continue;
        }
        let mut it = line.split_whitespace();
        let mut field = |name: &str| {
            it.next()
                .ok_or_else(|| parse_err(i, format!("missing {name}")))
        };
        let time: f64 = field("time")?.parse().map_err(|e| parse_err(i, e))?;
        let site: usize = field("site")?.parse().map_err(|e| parse_err(i, e))?;
        let kind = EventKind::from_code(field("code")?)?;
        if site >= current.len() {
            return Err(parse_err(i, "site outside the box"));
        }
        let state = kind.apply(current.get(site));
        current.set(site, state);
        events.push(Event {
            time,
            site,
            kind,
            state,
        });
    }
    let t_end = t_end.unwrap_or_else(|| events.last().map_or(0.0, |e| e.time));
    Ok(Trajectory {
        params,
        initial,
        events,
        samples: Vec::new(),
        t_end,
    })
}

/// Number of event times (of either trajectory) at which the configuration
/// of `lower` is not contained, site by site and level by level, in that of
/// `upper`. The initial configurations count as one more check.
pub fn containment_violations(lower: &Trajectory, upper: &Trajectory) -> Result<usize> {
    if lower.initial.len() != upper.initial.len() {
        return arg("trajectories live on different boxes");
    }
    let mut lo = lower.initial.clone();
    let mut hi = upper.initial.clone();
    let mut bad = usize::from(!hi.dominates(&lo));
    let (mut i, mut j) = (0, 0);
    let (el, eu) = (&lower.events, &upper.events);
    while i < el.len() || j < eu.len() {
        let t = match (el.get(i), eu.get(j)) {
            (Some(a), Some(b)) => a.time.min(b.time),
            (Some(a), None) => a.time,
            (None, Some(b)) => b.time,
            (None, None) => unreachable!(),
        };
        while i < el.len() && el[i].time == t {
            lo.set(el[i].site, el[i].state);
            i += 1;
        }
        while j < eu.len() && eu[j].time == t {
            hi.set(eu[j].site, eu[j].state);
            j += 1;
        }
        if !hi.dominates(&lo) {
            bad += 1;
        }
    }
    Ok(bad)
}
