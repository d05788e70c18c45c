use super::Trajectory;
use crate::error::{arg, Error, Result};
use crate::model::SiteState;

/// Which occupancy a slab count looks for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SlabSpecies {
    A,
    B,
    AB,
}

impl SlabSpecies {
    fn matches(self, s: SiteState) -> bool {
        match self {
            SlabSpecies::A => s.a_present(),
            SlabSpecies::B => s.b_present(),
            SlabSpecies::AB => s == SiteState::AB,
        }
    }
}

impl std::str::FromStr for SlabSpecies {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "A" | "a" => Ok(SlabSpecies::A),
            "B" | "b" => Ok(SlabSpecies::B),
            "AB" | "ab" => Ok(SlabSpecies::AB),
            other => arg(format!(
                "unknown slab species {other:?} (expected A, B or AB)"
            )),
        }
    }
}

/// Box of lattice coordinates `lo..=hi` times the interval `[t0, t1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpaceTimeRegion {
    pub lo: Vec<i64>,
    pub hi: Vec<i64>,
    pub t0: f64,
    pub t1: f64,
}

impl SpaceTimeRegion {
    pub fn new(lo: Vec<i64>, hi: Vec<i64>, t0: f64, t1: f64) -> Result<Self> {
        if lo.len() != hi.len() || lo.is_empty() {
            return arg("region corners must have the same positive dimension");
        }
        if lo.iter().zip(&hi).any(|(a, b)| a > b) {
            return arg("region is empty in space");
        }
        if !(t0.is_finite() && t1.is_finite() && t0 <= t1) {
            return arg(format!("invalid time interval [{t0}, {t1}]"));
        }
        Ok(SpaceTimeRegion { lo, hi, t0, t1 })
    }

    fn coords(&self) -> Vec<Vec<i64>> {
        let mut out = vec![Vec::new()];
        for (a, b) in self.lo.iter().zip(&self.hi) {
            out = out
                .into_iter()
                .flat_map(|p| {
                    (*a..=*b).map(move |c| {
                        let mut q = p.clone();
                        q.push(c);
                        q
                    })
                })
                .collect();
        }
        out
    }
}

/// Greedy earliest-point count over disjoint, time-ordered intervals.
fn greedy(intervals: &[(f64, f64, bool)]) -> u64 {
    let mut next = f64::NEG_INFINITY;
    let mut count = 0;
    for &(s, e, closed) in intervals {
        if next < s {
            next = s;
        }
        while next < e || (closed && next <= e) {
            count += 1;
            next += 1.0;
        }
    }
    count
}

/// Largest number of space-time points in `region` at which a site carries
/// `species`, with any two points on the same site at least one time unit
/// apart. Sites do not constrain each other, so the per-site maxima add up.
pub fn slab_count(
    traj: &Trajectory,
    region: &SpaceTimeRegion,
    species: SlabSpecies,
) -> Result<u64> {
    let lattice = &traj.initial;
    if region.lo.len() != lattice.dim() {
        return arg("region dimension differs from the lattice");
    }
    if region.t1 > traj.t_end {
        return arg(format!(
            "region ends at {} but the trajectory only covers [0, {}]",
            region.t1, traj.t_end
        ));
    }
    let sites = region
        .coords()
        .iter()
        .map(|c| lattice.index(c))
        .collect::<Result<Vec<usize>>>()?;
    let mut slot = vec![usize::MAX; lattice.len()];
    for (k, &s) in sites.iter().enumerate() {
        slot[s] = k;
    }
    let mut changes: Vec<Vec<(f64, SiteState)>> = vec![Vec::new(); sites.len()];
    for e in &traj.events {
        if slot[e.site] != usize::MAX {
            changes[slot[e.site]].push((e.time, e.state));
        }
    }
    let (t0, t1) = (region.t0, region.t1);
    let mut total = 0;
    for (k, &site) in sites.iter().enumerate() {
        let mut intervals = Vec::new();
        let mut state = lattice.get(site);
        let mut since = f64::NEG_INFINITY;
        for &(t, s) in &changes[k] {
            if species.matches(state) {
                let (a, b) = (since.max(t0), t.min(t1));
                if a < b || (a == b && t > t1) {
                    intervals.push((a, b, t > t1));
                }
            }
            state = s;
            since = t;
        }
        if species.matches(state) && since <= t1 {
            intervals.push((since.max(t0), t1, true));
        }
        total += greedy(&intervals);
    }
    Ok(total)
}
