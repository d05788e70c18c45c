//! Seeded, stream-addressed randomness for the graphical representation.
//!
//! Every Poisson clock of the construction (birth arrows per ordered
//! neighbour pair and species, the two death clocks per site and species,
//! stirring clocks per unordered pair and level) owns an independent ChaCha8
//! stream. The key is derived from `(seed, trial)` and the stream number from
//! the clock's address, so a clock's arrival sequence does not depend on the
//! order in which clocks are consulted or on which thread runs the trial.
//!
//! Clock positions are addressed by coordinates relative to the box centre,
//! which keeps the clocks near the origin identical when the box grows.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{arg, Result};
use crate::model::Species;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ClockKind {
    /// Arrow from a site towards its neighbour in direction `dir`.
    Birth { dir: u8 },
    /// Rate-μ death acting regardless of the partner species.
    DeathUnconditional,
    /// Rate-(1−μ) death acting only when the partner species is absent.
    DeathConditional,
    /// Exchange along the positive step of `axis` on one level.
    Stir { axis: u8 },
}

impl ClockKind {
    fn tag(self) -> u64 {
        match self {
            ClockKind::Birth { dir } => u64::from(dir) << 2,
            ClockKind::DeathUnconditional => 1,
            ClockKind::DeathConditional => 2,
            ClockKind::Stir { axis } => 3 | u64::from(axis) << 2,
        }
    }
}

/// Identity of one Poisson clock: kind, species level and site.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ClockAddress {
    pub kind: ClockKind,
    pub species: Species,
    /// Packed site offset from the box centre, see [`pack_offset`].
    pub position: u64,
}

impl ClockAddress {
    fn stream_id(&self, swap: bool) -> u64 {
        let species = if swap {
            self.species.other()
        } else {
            self.species
        };
        (self.position << 8) | (self.kind.tag() << 1) | species.index() as u64
    }
}

/// Packs a coordinate offset into 56 bits, `56 / d` bits per axis.
pub fn pack_offset(offset: &[i64]) -> u64 {
    let d = offset.len().max(1);
    let bits = (56 / d) as u32;
    let bias = 1i64 << (bits - 1);
    let mask = (1u64 << bits) - 1;
    offset.iter().enumerate().fold(0u64, |acc, (axis, &c)| {
        acc | (((c + bias) as u64 & mask) << (bits * axis as u32))
    })
}

/// Root of all randomness for one trial of a lattice simulation.
///
/// `birth_ceiling` fixes the rate of the underlying birth clocks: arrows
/// fire at rate `ceiling / 2d` and carry a uniform mark; a process with birth
/// rate `λ ≤ ceiling` keeps the arrivals whose mark falls below `λ`. Two
/// processes sharing a source and a ceiling are therefore coupled so that the
/// arrows of the smaller λ form a subset of those of the larger one.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GraphicalRandomSource {
    seed: u64,
    trial: u64,
    birth_ceiling: Option<f64>,
    swap_species: bool,
}

impl GraphicalRandomSource {
    pub fn new(seed: u64) -> Self {
        GraphicalRandomSource {
            seed,
            trial: 0,
            birth_ceiling: None,
            swap_species: false,
        }
    }

    pub fn for_trial(mut self, trial: u64) -> Self {
        self.trial = trial;
        self
    }

    pub fn with_birth_ceiling(mut self, ceiling: f64) -> Self {
        self.birth_ceiling = Some(ceiling);
        self
    }

    /// Source whose species-indexed streams are exchanged.
    pub fn species_swapped(mut self) -> Self {
        self.swap_species = !self.swap_species;
        self
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn trial(&self) -> u64 {
        self.trial
    }

    pub fn birth_ceiling(&self) -> Option<f64> {
        self.birth_ceiling
    }

    /// Ceiling used for a process with birth rate `lambda`.
    pub fn effective_ceiling(&self, lambda: f64) -> Result<f64> {
        match self.birth_ceiling {
            None => Ok(lambda),
            Some(c) if c >= lambda => Ok(c),
            Some(c) => arg(format!("birth ceiling {c} is below lambda {lambda}")),
        }
    }

    fn key(&self) -> [u8; 32] {
        let mut key = [0u8; 32];
        key[..8].copy_from_slice(&self.seed.to_le_bytes());
        key[8..16].copy_from_slice(&self.trial.to_le_bytes());
        key[16..24].copy_from_slice(b"scpclock");
        key
    }

    /// Independent uniform stream of one clock.
    pub fn clock_stream(&self, address: ClockAddress) -> ClockStream {
        let mut rng = ChaCha8Rng::from_seed(self.key());
        rng.set_stream(address.stream_id(self.swap_species));
        ClockStream { rng }
    }

    /// General-purpose generator for auxiliary randomness of this trial
    /// (e.g. chains that are not built from lattice clocks).
    pub fn auxiliary_rng(&self, purpose: u64) -> ChaCha8Rng {
        let mut key = self.key();
        key[16..24].copy_from_slice(b"auxiliar");
        let mut rng = ChaCha8Rng::from_seed(key);
        rng.set_stream(purpose);
        rng
    }
}

/// Uniform stream owned by a single clock.
#[derive(Debug, Clone)]
pub struct ClockStream {
    rng: ChaCha8Rng,
}

impl ClockStream {
    /// Uniform on `(0, 1]`.
    #[inline]
    pub fn uniform(&mut self) -> f64 {
        ((self.rng.next_u64() >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64)
    }
}

/// Arrival cursor of a homogeneous Poisson clock, optionally with a uniform
/// mark on each arrival.
#[derive(Debug, Clone)]
pub struct PoissonClock {
    stream: ClockStream,
    rate: f64,
    marked: bool,
    next: f64,
    mark: f64,
}

impl PoissonClock {
    pub fn new(stream: ClockStream, rate: f64, marked: bool) -> Self {
        let mut clock = PoissonClock {
            stream,
            rate,
            marked,
            next: 0.0,
            mark: 0.0,
        };
        if rate > 0.0 {
            clock.advance();
        } else {
            clock.next = f64::INFINITY;
        }
        clock
    }

    #[inline]
    pub fn next_time(&self) -> f64 {
        self.next
    }

    /// Mark of the pending arrival, uniform on `(0, 1]`.
    #[inline]
    pub fn mark(&self) -> f64 {
        self.mark
    }

    /// Moves to the following arrival.
    #[inline]
    pub fn advance(&mut self) {
        if self.rate <= 0.0 {
            return;
        }
        self.next += -self.stream.uniform().ln() / self.rate;
        if self.marked {
            self.mark = self.stream.uniform();
        }
    }

    /// Discards arrivals at times `<= t`.
    pub fn skip_through(&mut self, t: f64) {
        while self.next <= t {
            self.advance();
        }
    }
}

/// Arrival times in `[0, horizon]` of one birth arrow under two coupled
/// birth rates `lambda1 <= lambda2`: the second stream is the first one
/// superposed with extra arrivals at rate `(lambda2 - lambda1) / 2d`.
pub fn coupled_clock_split(
    lambda1: f64,
    lambda2: f64,
    dim: usize,
    source: &GraphicalRandomSource,
    address: ClockAddress,
    horizon: f64,
) -> Result<(Vec<f64>, Vec<f64>)> {
    if !(lambda1 >= 0.0 && lambda1 <= lambda2) {
        return arg(format!(
            "need 0 <= lambda1 <= lambda2, got {lambda1} and {lambda2}"
        ));
    }
    if dim == 0 {
        return arg("dim must be >= 1");
    }
    let ceiling = source.effective_ceiling(lambda2)?;
    let mut clock = PoissonClock::new(
        source.clock_stream(address),
        ceiling / (2 * dim) as f64,
        true,
    );
    let (mut first, mut second) = (Vec::new(), Vec::new());
    while clock.next_time() <= horizon {
        let level = clock.mark() * ceiling;
        if level <= lambda1 {
            first.push(clock.next_time());
        }
        if level <= lambda2 {
            second.push(clock.next_time());
        }
        clock.advance();
    }
    Ok((first, second))
}
