//! Exact event-driven simulation of SCP, SCPD and the single-type contact
//! process on a finite box.
//!
//! The process is built from the graphical representation: every Poisson
//! clock keeps its own arrival stream, and the scheduler (a next-reaction
//! queue) only tracks clocks whose next ring could change the configuration.
//! A clock that becomes relevant again skips the arrivals that fell while it
//! was ignored, so its arrival sequence is the same whatever the history of
//! the configuration. Processes that share a source and a birth ceiling are
//! thus coupled exactly.

mod density;
mod slab;
mod survival;
mod trajectory;

pub mod decay;

pub use density::{estimate_densities, DensityEstimate, DensityOptions};
pub use slab::{slab_count, SlabSpecies, SpaceTimeRegion};
pub use survival::{
    bisect_lambda_c, estimate_survival, estimate_survival_with, recommended_side, survival_trial,
    BisectOptions, BisectResult, SurvivalOptions, SurvivalStats, TrialOutcome, SURVIVAL_CSV_HEADER,
};
pub use trajectory::{
    containment_violations, read_event_log, simulate_trajectory, write_event_log, CountSample,
    Trajectory,
};

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::fmt;

use crate::error::{arg, Error, Result};
use crate::model::{Lattice, ModelParams, SiteState, Species, Variant};
use crate::random::{pack_offset, ClockAddress, ClockKind, GraphicalRandomSource, PoissonClock};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EventKind {
    Birth(Species),
    Death(Species),
    /// One side of a stirring exchange on the species' level.
    Stir(Species),
}

impl EventKind {
    pub fn species(self) -> Species {
        match self {
            EventKind::Birth(s) | EventKind::Death(s) | EventKind::Stir(s) => s,
        }
    }

    pub fn code(self) -> &'static str {
        match self {
            EventKind::Birth(Species::A) => "bA",
            EventKind::Birth(Species::B) => "bB",
            EventKind::Death(Species::A) => "dA",
            EventKind::Death(Species::B) => "dB",
            EventKind::Stir(Species::A) => "sA",
            EventKind::Stir(Species::B) => "sB",
        }
    }

    pub fn from_code(code: &str) -> Result<Self> {
        Ok(match code {
            "bA" => EventKind::Birth(Species::A),
            "bB" => EventKind::Birth(Species::B),
            "dA" => EventKind::Death(Species::A),
            "dB" => EventKind::Death(Species::B),
            "sA" => EventKind::Stir(Species::A),
            "sB" => EventKind::Stir(Species::B),
            other => return arg(format!("unknown event code {other:?}")),
        })
    }

    /// State of a site after this event acted on `before`.
    pub fn apply(self, before: SiteState) -> SiteState {
        match self {
            EventKind::Birth(s) => before.with(s, true),
            EventKind::Death(s) => before.with(s, false),
            EventKind::Stir(s) => before.with(s, !before.has(s)),
        }
    }

    pub fn swapped(self) -> Self {
        match self {
            EventKind::Birth(s) => EventKind::Birth(s.other()),
            EventKind::Death(s) => EventKind::Death(s.other()),
            EventKind::Stir(s) => EventKind::Stir(s.other()),
        }
    }
}

impl fmt::Display for EventKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

/// One site change. A stirring exchange produces two records with the same
/// time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Event {
    pub time: f64,
    pub site: usize,
    pub kind: EventKind,
    pub state: SiteState,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepOutcome {
    /// A clock rang and changed the configuration.
    Event {
        time: f64,
        kind: EventKind,
        site: usize,
        /// Second site of a stirring exchange.
        partner: Option<usize>,
    },
    /// The next effective arrival lies beyond the requested limit.
    Horizon,
    /// No clock can change the configuration any more.
    Quiescent,
}

#[derive(Debug, Clone, Copy)]
struct Pending {
    time: f64,
    id: u32,
    generation: u32,
}

impl PartialEq for Pending {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Pending {}

impl PartialOrd for Pending {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Pending {
    // reversed: BinaryHeap pops the earliest arrival
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .time
            .total_cmp(&self.time)
            .then_with(|| other.id.cmp(&self.id))
            .then_with(|| other.generation.cmp(&self.generation))
    }
}

const NO_CURSOR: u32 = u32::MAX;

#[derive(Debug, Clone, Copy)]
struct ClockSlot {
    cursor: u32,
    generation: u32,
    active: bool,
}

#[derive(Debug, Clone, Copy)]
enum Clock {
    Birth {
        site: usize,
        dir: usize,
        species: Species,
    },
    Death {
        site: usize,
        species: Species,
        conditional: bool,
    },
    Stir {
        site: usize,
        axis: usize,
        species: Species,
    },
}

/// A single trajectory of the lattice process.
pub struct Simulation {
    params: ModelParams,
    lattice: Lattice,
    source: GraphicalRandomSource,
    ceiling: f64,
    now: f64,
    center: Vec<i64>,
    slots: Vec<ClockSlot>,
    cursors: Vec<PoissonClock>,
    queue: BinaryHeap<Pending>,
    log: Option<Vec<Event>>,
    audit: bool,
    boundary_contact: bool,
    events: u64,
}

impl Simulation {
    pub fn new(
        params: ModelParams,
        lattice: Lattice,
        source: GraphicalRandomSource,
    ) -> Result<Self> {
        params.validate()?;
        if params.variant == Variant::Sbvm {
            return Err(Error::UnsupportedVariant("sbvm"));
        }
        if lattice.dim() != params.dim
            || lattice.side() != params.side
            || lattice.boundary() != params.boundary
        {
            return arg("lattice geometry differs from the parameters");
        }
        if params.variant == Variant::SingleTypeContact && lattice.counts().b > 0 {
            return arg("single-type contact process cannot carry B particles");
        }
        let ceiling = source.effective_ceiling(params.lambda)?;
        let per_site = 6 * params.dim + 4;
        let n_clocks = lattice.len() * per_site;
        if n_clocks >= NO_CURSOR as usize {
            return arg("box too large for the clock table");
        }
        let center = vec![(params.side / 2) as i64; params.dim];
        let mut sim = Simulation {
            params,
            lattice,
            source,
            ceiling,
            now: 0.0,
            center,
            slots: vec![
                ClockSlot {
                    cursor: NO_CURSOR,
                    generation: 0,
                    active: false,
                };
                n_clocks
            ],
            cursors: Vec::new(),
            queue: BinaryHeap::new(),
            log: None,
            audit: false,
            boundary_contact: false,
            events: 0,
        };
        let occupied: Vec<usize> = sim.lattice.occupied().map(|(i, _)| i).collect();
        for site in occupied {
            sim.reconcile_site(site);
        }
        Ok(sim)
    }

    /// Records every site change.
    pub fn with_event_log(mut self) -> Self {
        self.log = Some(Vec::new());
        self
    }

    /// Recounts the configuration after every event and panics on mismatch.
    pub fn with_audit(mut self, audit: bool) -> Self {
        self.audit = audit;
        self
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    pub fn now(&self) -> f64 {
        self.now
    }

    pub fn events(&self) -> Option<&[Event]> {
        self.log.as_deref()
    }

    pub fn take_events(&mut self) -> Vec<Event> {
        self.log.as_mut().map(std::mem::take).unwrap_or_default()
    }

    /// Number of effective events so far.
    pub fn event_count(&self) -> u64 {
        self.events
    }

    /// A particle has been placed on a site touching the box boundary.
    pub fn boundary_contact(&self) -> bool {
        self.boundary_contact
    }

    /// Time of the next pending arrival (effective or not).
    pub fn peek_time(&mut self) -> Option<f64> {
        while let Some(top) = self.queue.peek() {
            let slot = self.slots[top.id as usize];
            if slot.active && slot.generation == top.generation {
                return Some(top.time);
            }
            self.queue.pop();
        }
        None
    }

    /// Advances to the next effective event, provided it happens no later
    /// than `limit`.
    pub fn step_until(&mut self, limit: f64) -> StepOutcome {
        loop {
            let Some(top) = self.queue.peek().copied() else {
                return StepOutcome::Quiescent;
            };
            let id = top.id as usize;
            let slot = self.slots[id];
            if !slot.active || slot.generation != top.generation {
                self.queue.pop();
                continue;
            }
            if top.time > limit {
                if limit.is_finite() && limit > self.now {
                    self.now = limit;
                }
                return StepOutcome::Horizon;
            }
            self.queue.pop();
            self.now = top.time;
            let cursor = &mut self.cursors[slot.cursor as usize];
            let mark = cursor.mark();
            cursor.advance();
            self.slots[id].active = false;
            self.slots[id].generation = self.slots[id].generation.wrapping_add(1);

            let clock = self.decode(id);
            let outcome = self.fire(clock, mark);
            self.reconcile(id);
            if let Some(outcome) = outcome {
                self.events += 1;
                if self.audit {
                    let recount = self.lattice.recount();
                    assert_eq!(
                        self.lattice.counts(),
                        recount,
                        "incremental counts drifted at t = {}",
                        self.now
                    );
                }
                return outcome;
            }
        }
    }

    /// Next effective event with no time limit.
    pub fn step(&mut self) -> StepOutcome {
        self.step_until(f64::INFINITY)
    }

    /// Runs until time `t` or until quiescence, returning the last outcome.
    pub fn run_until(&mut self, t: f64) -> StepOutcome {
        loop {
            match self.step_until(t) {
                StepOutcome::Event { .. } => continue,
                other => return other,
            }
        }
    }

    fn fire(&mut self, clock: Clock, mark: f64) -> Option<StepOutcome> {
        let time = self.now;
        match clock {
            Clock::Birth { site, dir, species } => {
                if mark * self.ceiling > self.params.lambda {
                    return None;
                }
                let target = self.lattice.neighbor(site, dir)?;
                if !self.lattice.get(site).has(species) || self.lattice.get(target).has(species) {
                    return None;
                }
                self.change(target, EventKind::Birth(species));
                Some(StepOutcome::Event {
                    time,
                    kind: EventKind::Birth(species),
                    site: target,
                    partner: None,
                })
            }
            Clock::Death {
                site,
                species,
                conditional,
            } => {
                let s = self.lattice.get(site);
                if !s.has(species) || (conditional && s.has(species.other())) {
                    return None;
                }
                self.change(site, EventKind::Death(species));
                Some(StepOutcome::Event {
                    time,
                    kind: EventKind::Death(species),
                    site,
                    partner: None,
                })
            }
            Clock::Stir {
                site,
                axis,
                species,
            } => {
                let other = self.lattice.neighbor(site, 2 * axis)?;
                if other == site
                    || self.lattice.get(site).has(species) == self.lattice.get(other).has(species)
                {
                    return None;
                }
                self.change(site, EventKind::Stir(species));
                self.change(other, EventKind::Stir(species));
                Some(StepOutcome::Event {
                    time,
                    kind: EventKind::Stir(species),
                    site,
                    partner: Some(other),
                })
            }
        }
    }

    fn change(&mut self, site: usize, kind: EventKind) {
        let state = kind.apply(self.lattice.get(site));
        self.lattice.set(site, state);
        if state.has(kind.species()) && self.lattice.on_boundary(site) {
            self.boundary_contact = true;
        }
        if let Some(log) = self.log.as_mut() {
            log.push(Event {
                time: self.now,
                site,
                kind,
                state,
            });
        }
        self.reconcile_site(site);
    }

    fn degree(&self) -> usize {
        2 * self.params.dim
    }

    fn n_sites(&self) -> usize {
        self.lattice.len()
    }

    fn birth_id(&self, site: usize, dir: usize, species: Species) -> usize {
        (site * self.degree() + dir) * 2 + species.index()
    }

    fn death_id(&self, site: usize, species: Species, conditional: bool) -> usize {
        self.n_sites() * 2 * self.degree() + (site * 2 + species.index()) * 2 + conditional as usize
    }

    fn stir_id(&self, site: usize, axis: usize, species: Species) -> usize {
        self.n_sites() * (2 * self.degree() + 4)
            + (site * self.params.dim + axis) * 2
            + species.index()
    }

    fn decode(&self, id: usize) -> Clock {
        let births = self.n_sites() * 2 * self.degree();
        let deaths = self.n_sites() * 4;
        let species = if id.is_multiple_of(2) {
            Species::A
        } else {
            Species::B
        };
        if id < births {
            let k = id / 2;
            Clock::Birth {
                site: k / self.degree(),
                dir: k % self.degree(),
                species,
            }
        } else if id < births + deaths {
            let k = id - births;
            Clock::Death {
                site: k / 4,
                species: if (k / 2).is_multiple_of(2) {
                    Species::A
                } else {
                    Species::B
                },
                conditional: k % 2 == 1,
            }
        } else {
            let k = (id - births - deaths) / 2;
            Clock::Stir {
                site: k / self.params.dim,
                axis: k % self.params.dim,
                species,
            }
        }
    }

    /// The clock's next ring could change the configuration.
    fn relevant(&self, clock: Clock) -> bool {
        let p = &self.params;
        match clock {
            Clock::Birth { site, dir, species } => {
                p.lambda > 0.0
                    && self.lattice.get(site).has(species)
                    && self
                        .lattice
                        .neighbor(site, dir)
                        .is_some_and(|y| !self.lattice.get(y).has(species))
            }
            Clock::Death {
                site,
                species,
                conditional,
            } => {
                let s = self.lattice.get(site);
                if conditional {
                    p.mu < 1.0 && s.has(species) && !s.has(species.other())
                } else {
                    p.mu > 0.0 && s.has(species)
                }
            }
            Clock::Stir {
                site,
                axis,
                species,
            } => {
                p.stir_rate() > 0.0
                    && self.lattice.neighbor(site, 2 * axis).is_some_and(|y| {
                        y != site
                            && self.lattice.get(y).has(species)
                                != self.lattice.get(site).has(species)
                    })
            }
        }
    }

    fn address(&self, clock: Clock) -> ClockAddress {
        let (site, kind, species) = match clock {
            Clock::Birth { site, dir, species } => {
                (site, ClockKind::Birth { dir: dir as u8 }, species)
            }
            Clock::Death {
                site,
                species,
                conditional,
            } => (
                site,
                if conditional {
                    ClockKind::DeathConditional
                } else {
                    ClockKind::DeathUnconditional
                },
                species,
            ),
            Clock::Stir {
                site,
                axis,
                species,
            } => (site, ClockKind::Stir { axis: axis as u8 }, species),
        };
        let offset: Vec<i64> = self
            .lattice
            .coords(site)
            .iter()
            .zip(&self.center)
            .map(|(c, o)| c - o)
            .collect();
        ClockAddress {
            kind,
            species,
            position: pack_offset(&offset),
        }
    }

    fn rate(&self, clock: Clock) -> (f64, bool) {
        match clock {
            Clock::Birth { .. } => (self.ceiling / self.degree() as f64, true),
            Clock::Death {
                conditional: false, ..
            } => (self.params.mu, false),
            Clock::Death {
                conditional: true, ..
            } => (1.0 - self.params.mu, false),
            Clock::Stir { .. } => (self.params.stir_rate(), false),
        }
    }

    fn reconcile(&mut self, id: usize) {
        let clock = self.decode(id);
        let want = self.relevant(clock);
        let slot = self.slots[id];
        if want == slot.active {
            return;
        }
        let generation = slot.generation.wrapping_add(1);
        if !want {
            self.slots[id] = ClockSlot {
                active: false,
                generation,
                ..slot
            };
            return;
        }
        let cursor = if slot.cursor == NO_CURSOR {
            let (rate, marked) = self.rate(clock);
            let stream = self.source.clock_stream(self.address(clock));
            self.cursors.push(PoissonClock::new(stream, rate, marked));
            (self.cursors.len() - 1) as u32
        } else {
            slot.cursor
        };
        let c = &mut self.cursors[cursor as usize];
        c.skip_through(self.now);
        let time = c.next_time();
        self.slots[id] = ClockSlot {
            cursor,
            generation,
            active: true,
        };
        self.queue.push(Pending {
            time,
            id: id as u32,
            generation,
        });
    }

    /// Re-examines every clock whose relevance depends on `site`.
    fn reconcile_site(&mut self, site: usize) {
        let degree = self.degree();
        for species in Species::BOTH {
            for dir in 0..degree {
                self.reconcile(self.birth_id(site, dir, species));
                if let Some(y) = self.lattice.neighbor(site, dir) {
                    self.reconcile(self.birth_id(y, Lattice::opposite(dir), species));
                }
            }
            for conditional in [false, true] {
                self.reconcile(self.death_id(site, species, conditional));
            }
            if self.params.stir_rate() > 0.0 {
                for axis in 0..self.params.dim {
                    self.reconcile(self.stir_id(site, axis, species));
                    if let Some(y) = self.lattice.neighbor(site, 2 * axis + 1) {
                        self.reconcile(self.stir_id(y, axis, species));
                    }
                }
            }
        }
    }
}

/// Lattice with a single doubly occupied site at the box centre.
pub fn single_ab_at_center(params: &ModelParams) -> Result<Lattice> {
    let mut l = Lattice::for_params(params)?;
    let c = l.center();
    l.set(c, SiteState::AB);
    Ok(l)
}

#[cfg(test)]
mod tests;
