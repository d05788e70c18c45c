//! Lattice state, neighbour geometry and model parameters.

use std::fmt;

use crate::error::{arg, Error, Result};

/// One of the two species. Species A lives on level 0, species B on level 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Species {
    A,
    B,
}

impl Species {
    pub const BOTH: [Species; 2] = [Species::A, Species::B];

    pub fn other(self) -> Species {
        match self {
            Species::A => Species::B,
            Species::B => Species::A,
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }

    fn bit(self) -> u8 {
        1 << (self as u8)
    }
}

impl fmt::Display for Species {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Species::A => f.write_str("A"),
            Species::B => f.write_str("B"),
        }
    }
}

/// Occupancy of a single site: `(a_present, b_present)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct SiteState(u8);

impl SiteState {
    pub const EMPTY: SiteState = SiteState(0);
    pub const A: SiteState = SiteState(1);
    pub const B: SiteState = SiteState(2);
    pub const AB: SiteState = SiteState(3);
    pub const ALL: [SiteState; 4] = [Self::EMPTY, Self::A, Self::B, Self::AB];

    pub fn new(a_present: bool, b_present: bool) -> Self {
        SiteState(a_present as u8 | (b_present as u8) << 1)
    }

    /// Decodes the 2-bit code; only the low two bits are read.
    pub fn from_code(code: u8) -> Self {
        SiteState(code & 3)
    }

    pub fn code(self) -> u8 {
        self.0
    }

    pub fn a_present(self) -> bool {
        self.0 & 1 != 0
    }

    pub fn b_present(self) -> bool {
        self.0 & 2 != 0
    }

    pub fn has(self, s: Species) -> bool {
        self.0 & s.bit() != 0
    }

    pub fn with(self, s: Species, present: bool) -> Self {
        if present {
            SiteState(self.0 | s.bit())
        } else {
            SiteState(self.0 & !s.bit())
        }
    }

    /// Exchanges the roles of the two species.
    pub fn swapped(self) -> Self {
        SiteState::new(self.b_present(), self.a_present())
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    /// `self` carries every particle `other` carries.
    pub fn dominates(self, other: SiteState) -> bool {
        other.0 & !self.0 == 0
    }
}

impl fmt::Display for SiteState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self.0 {
            0 => "0",
            1 => "A",
            2 => "B",
            _ => "AB",
        })
    }
}

impl std::str::FromStr for SiteState {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "0" => Ok(Self::EMPTY),
            "A" => Ok(Self::A),
            "B" => Ok(Self::B),
            "AB" => Ok(Self::AB),
            other => arg(format!("unknown site state {other:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Boundary {
    #[default]
    Periodic,
    /// Sites outside the box are permanently vacant and receive no births.
    Closed,
}

impl fmt::Display for Boundary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Boundary::Periodic => "periodic",
            Boundary::Closed => "closed",
        })
    }
}

impl std::str::FromStr for Boundary {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "periodic" => Ok(Boundary::Periodic),
            "closed" => Ok(Boundary::Closed),
            other => arg(format!("unknown boundary {other:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Variant {
    /// Symbiotic contact process.
    Scp,
    /// Symbiotic contact process with stirring on each level.
    Scpd,
    /// Ordinary contact process (species A only).
    SingleTypeContact,
    /// Symbiotic biased voter model; handled by the front chain in [`crate::sbvm`].
    Sbvm,
}

impl Variant {
    pub fn name(self) -> &'static str {
        match self {
            Variant::Scp => "scp",
            Variant::Scpd => "scpd",
            Variant::SingleTypeContact => "contact",
            Variant::Sbvm => "sbvm",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "scp" => Ok(Variant::Scp),
            "scpd" => Ok(Variant::Scpd),
            "contact" | "single" | "singletypecontact" => Ok(Variant::SingleTypeContact),
            "sbvm" => Ok(Variant::Sbvm),
            other => arg(format!("unknown variant {other:?}")),
        }
    }
}

/// Model and geometry parameters. The box is a cube of `side^dim` sites.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    pub variant: Variant,
    pub lambda: f64,
    pub mu: f64,
    pub epsilon: Option<f64>,
    pub dim: usize,
    pub side: usize,
    pub boundary: Boundary,
}

impl ModelParams {
    /// SCP-family parameters on a 64-site periodic ring.
    pub fn new(variant: Variant, lambda: f64, mu: f64) -> Self {
        ModelParams {
            variant,
            lambda,
            mu,
            epsilon: None,
            dim: 1,
            side: 64,
            boundary: Boundary::Periodic,
        }
    }

    pub fn scp(lambda: f64, mu: f64) -> Self {
        Self::new(Variant::Scp, lambda, mu)
    }

    pub fn contact(lambda: f64) -> Self {
        Self::new(Variant::SingleTypeContact, lambda, 1.0)
    }

    pub fn scpd(lambda: f64, mu: f64, epsilon: f64) -> Self {
        ModelParams {
            epsilon: Some(epsilon),
            ..Self::new(Variant::Scpd, lambda, mu)
        }
    }

    pub fn with_box(mut self, dim: usize, side: usize, boundary: Boundary) -> Self {
        self.dim = dim;
        self.side = side;
        self.boundary = boundary;
        self
    }

    pub fn with_lambda(mut self, lambda: f64) -> Self {
        self.lambda = lambda;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return arg(format!(
                "lambda must be finite and >= 0, got {}",
                self.lambda
            ));
        }
        if !(0.0..=1.0).contains(&self.mu) {
            return arg(format!("mu must lie in [0, 1], got {}", self.mu));
        }
        match (self.variant, self.epsilon) {
            (Variant::Scpd, Some(e)) if e > 0.0 && e.is_finite() => {}
            (Variant::Scpd, _) => return arg("SCPD requires epsilon > 0"),
            (_, Some(_)) => return arg("epsilon is only meaningful for SCPD"),
            _ => {}
        }
        if self.dim == 0 || self.side == 0 {
            return arg("box must have dim >= 1 and side >= 1");
        }
        if (self.side as f64).powi(self.dim as i32) > 1e8 {
            return arg("box too large for a dense lattice");
        }
        Ok(())
    }

    /// Rate of the stirring clock on each unordered pair and level.
    pub fn stir_rate(&self) -> f64 {
        match (self.variant, self.epsilon) {
            (Variant::Scpd, Some(e)) => 1.0 / (e * e),
            _ => 0.0,
        }
    }
}

/// Maintained global counts of a configuration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Hash)]
pub struct Counts {
    /// Sites carrying an A particle.
    pub a: usize,
    /// Sites carrying a B particle.
    pub b: usize,
    /// Doubly occupied sites.
    pub ab: usize,
}

impl Counts {
    pub fn of(&self, s: Species) -> usize {
        match s {
            Species::A => self.a,
            Species::B => self.b,
        }
    }

    pub fn only_a(&self) -> usize {
        self.a - self.ab
    }

    pub fn only_b(&self) -> usize {
        self.b - self.ab
    }

    pub fn occupied(&self) -> usize {
        self.a + self.b - self.ab
    }
}

const SITES_PER_WORD: usize = 32;

/// Dense `side^dim` box of site states packed two bits per site.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Lattice {
    dim: usize,
    side: usize,
    boundary: Boundary,
    len: usize,
    words: Vec<u64>,
    counts: Counts,
}

impl Lattice {
    pub fn new(dim: usize, side: usize, boundary: Boundary) -> Result<Self> {
        if dim == 0 || side == 0 {
            return arg("box must have dim >= 1 and side >= 1");
        }
        let len = side
            .checked_pow(dim as u32)
            .ok_or_else(|| Error::Argument("box too large".into()))?;
        Ok(Lattice {
            dim,
            side,
            boundary,
            len,
            words: vec![0; len.div_ceil(SITES_PER_WORD)],
            counts: Counts::default(),
        })
    }

    pub fn for_params(params: &ModelParams) -> Result<Self> {
        Self::new(params.dim, params.side, params.boundary)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn side(&self) -> usize {
        self.side
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.counts.occupied() == 0
    }

    pub fn counts(&self) -> Counts {
        self.counts
    }

    /// Number of neighbour directions, `2d`.
    pub fn degree(&self) -> usize {
        2 * self.dim
    }

    /// Site index of the coordinate tuple (row-major, axis 0 fastest).
    pub fn index(&self, coord: &[i64]) -> Result<usize> {
        let out = || Error::Coordinate {
            coord: coord.to_vec(),
            side: self.side,
            dim: self.dim,
        };
        if coord.len() != self.dim {
            return Err(out());
        }
        let mut idx = 0usize;
        for &c in coord.iter().rev() {
            if c < 0 || c as usize >= self.side {
                return Err(out());
            }
            idx = idx * self.side + c as usize;
        }
        Ok(idx)
    }

    pub fn coords(&self, mut site: usize) -> Vec<i64> {
        let mut out = Vec::with_capacity(self.dim);
        for _ in 0..self.dim {
            out.push((site % self.side) as i64);
            site /= self.side;
        }
        out
    }

    /// The site `(side/2, …, side/2)`.
    pub fn center(&self) -> usize {
        let c = (self.side / 2) as i64;
        self.index(&vec![c; self.dim])
            .expect("center lies in the box")
    }

    /// Neighbour of `site` in direction `dir ∈ 0..2d`: axis `dir / 2`,
    /// positive step when `dir` is even. `None` when the step leaves a
    /// closed box.
    #[inline]
    pub fn neighbor(&self, site: usize, dir: usize) -> Option<usize> {
        let axis = dir / 2;
        let stride = self.side.pow(axis as u32);
        let c = (site / stride) % self.side;
        if dir.is_multiple_of(2) {
            if c + 1 < self.side {
                Some(site + stride)
            } else {
                match self.boundary {
                    Boundary::Periodic => Some(site + stride - self.side * stride),
                    Boundary::Closed => None,
                }
            }
        } else if c > 0 {
            Some(site - stride)
        } else {
            match self.boundary {
                Boundary::Periodic => Some(site + (self.side - 1) * stride),
                Boundary::Closed => None,
            }
        }
    }

    /// Direction pointing back along `dir`.
    #[inline]
    pub fn opposite(dir: usize) -> usize {
        dir ^ 1
    }

    /// The site touches the box boundary along some axis.
    pub fn on_boundary(&self, site: usize) -> bool {
        let mut s = site;
        for _ in 0..self.dim {
            let c = s % self.side;
            if c == 0 || c + 1 == self.side {
                return true;
            }
            s /= self.side;
        }
        false
    }

    #[inline]
    pub fn get(&self, site: usize) -> SiteState {
        let w = self.words[site / SITES_PER_WORD];
        SiteState::from_code((w >> (2 * (site % SITES_PER_WORD))) as u8)
    }

    /// Site state with out-of-range coordinates treated as vacant.
    pub fn get_coord(&self, coord: &[i64]) -> Result<SiteState> {
        self.index(coord).map(|i| self.get(i))
    }

    #[inline]
    pub fn set(&mut self, site: usize, state: SiteState) {
        let old = self.get(site);
        if old == state {
            return;
        }
        let shift = 2 * (site % SITES_PER_WORD);
        let w = &mut self.words[site / SITES_PER_WORD];
        *w = (*w & !(3u64 << shift)) | (u64::from(state.code()) << shift);
        let c = &mut self.counts;
        c.a = c.a + state.a_present() as usize - old.a_present() as usize;
        c.b = c.b + state.b_present() as usize - old.b_present() as usize;
        let was_ab = old == SiteState::AB;
        let is_ab = state == SiteState::AB;
        c.ab = c.ab + is_ab as usize - was_ab as usize;
    }

    pub fn set_coord(&mut self, coord: &[i64], state: SiteState) -> Result<()> {
        let i = self.index(coord)?;
        self.set(i, state);
        Ok(())
    }

    pub fn fill(&mut self, state: SiteState) {
        for i in 0..self.len {
            self.set(i, state);
        }
    }

    pub fn clear(&mut self) {
        self.fill(SiteState::EMPTY);
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, SiteState)> + '_ {
        (0..self.len).map(move |i| (i, self.get(i)))
    }

    pub fn occupied(&self) -> impl Iterator<Item = (usize, SiteState)> + '_ {
        self.iter().filter(|(_, s)| !s.is_empty())
    }

    /// Counts obtained by scanning every site.
    pub fn recount(&self) -> Counts {
        let mut c = Counts::default();
        for (_, s) in self.iter() {
            c.a += s.a_present() as usize;
            c.b += s.b_present() as usize;
            c.ab += (s == SiteState::AB) as usize;
        }
        c
    }

    /// Every site of `self` carries every particle that `other` carries.
    pub fn dominates(&self, other: &Lattice) -> bool {
        self.len == other.len
            && self
                .words
                .iter()
                .zip(&other.words)
                .all(|(&mine, &theirs)| theirs & !mine == 0)
    }

    /// Same configuration with species labels exchanged.
    pub fn swapped(&self) -> Lattice {
        let mut out = Lattice::new(self.dim, self.side, self.boundary).expect("same geometry");
        for (i, s) in self.occupied() {
            out.set(i, s.swapped());
        }
        out
    }

    /// Fractions `(f_A, f_B)` of the `2d` neighbours of `x` carrying each
    /// species. Missing neighbours of a closed box count as vacant.
    pub fn neighbor_fractions(&self, x: usize) -> Result<(f64, f64)> {
        if x >= self.len {
            return Err(Error::Coordinate {
                coord: vec![x as i64],
                side: self.side,
                dim: self.dim,
            });
        }
        let (mut na, mut nb) = (0usize, 0usize);
        for dir in 0..self.degree() {
            if let Some(y) = self.neighbor(x, dir) {
                let s = self.get(y);
                na += s.a_present() as usize;
                nb += s.b_present() as usize;
            }
        }
        let deg = self.degree() as f64;
        Ok((na as f64 / deg, nb as f64 / deg))
    }
}

/// Flip rates of one site under the SCP rate table.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RateTable {
    pub birth_a: f64,
    pub birth_b: f64,
    pub death_a: f64,
    pub death_b: f64,
}

impl RateTable {
    pub fn total(&self) -> f64 {
        self.birth_a + self.birth_b + self.death_a + self.death_b
    }
}

/// SCP (or single-type contact) transition rates at site `x`.
pub fn transition_rates(lattice: &Lattice, x: usize, params: &ModelParams) -> Result<RateTable> {
    let single = match params.variant {
        Variant::Scp => false,
        Variant::SingleTypeContact => true,
        other => {
            return arg(format!(
                "rate table is defined for SCP and contact, not {other}"
            ))
        }
    };
    let (fa, fb) = lattice.neighbor_fractions(x)?;
    let s = lattice.get(x);
    let death = |sp: Species| match (s.has(sp), s.has(sp.other())) {
        (false, _) => 0.0,
        (true, false) => 1.0,
        (true, true) => params.mu,
    };
    let mut table = RateTable {
        birth_a: if s.a_present() {
            0.0
        } else {
            params.lambda * fa
        },
        birth_b: if s.b_present() {
            0.0
        } else {
            params.lambda * fb
        },
        death_a: death(Species::A),
        death_b: death(Species::B),
    };
    if single {
        table.birth_b = 0.0;
        table.death_b = 0.0;
    }
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn site_state_round_trips() {
        for s in SiteState::ALL {
            assert_eq!(SiteState::new(s.a_present(), s.b_present()), s);
            assert_eq!(SiteState::from_code(s.code()), s);
            assert_eq!(s.to_string().parse::<SiteState>().unwrap(), s);
        }
        assert_eq!(SiteState::ALL.len(), 4);
    }

    #[test]
    fn fractions_on_empty_ring_are_zero() {
        let l = Lattice::new(1, 9, Boundary::Periodic).unwrap();
        for x in 0..9 {
            assert_eq!(l.neighbor_fractions(x).unwrap(), (0.0, 0.0));
        }
    }

    #[test]
    fn ab_neighbours_count_for_both_species() {
        let mut l = Lattice::new(1, 9, Boundary::Periodic).unwrap();
        l.set(3, SiteState::AB);
        l.set(5, SiteState::AB);
        assert_eq!(l.neighbor_fractions(4).unwrap(), (1.0, 1.0));
    }

    #[test]
    fn one_a_neighbour_in_two_dimensions() {
        let mut l = Lattice::new(2, 5, Boundary::Periodic).unwrap();
        let x = l.index(&[0, 0]).unwrap();
        // wraps around axis 1
        l.set_coord(&[0, 4], SiteState::A).unwrap();
        assert_eq!(l.neighbor_fractions(x).unwrap(), (0.25, 0.0));
    }

    #[test]
    fn closed_box_keeps_denominator() {
        let mut l = Lattice::new(1, 3, Boundary::Closed).unwrap();
        l.set(1, SiteState::A);
        assert_eq!(l.neighbor_fractions(0).unwrap(), (0.5, 0.0));
        assert_eq!(l.neighbor(0, 1), None);
        assert_eq!(l.neighbor(2, 0), None);
    }

    #[test]
    fn out_of_box_site_is_rejected() {
        let l = Lattice::new(1, 3, Boundary::Closed).unwrap();
        assert!(matches!(
            l.neighbor_fractions(3),
            Err(Error::Coordinate { .. })
        ));
        assert!(l.index(&[-1]).is_err());
    }

    #[test]
    fn rate_table_entries() {
        let mut l = Lattice::new(1, 5, Boundary::Periodic).unwrap();
        l.set(2, SiteState::AB);
        let p = ModelParams::scp(2.0, 0.3);
        let r = transition_rates(&l, 2, &p).unwrap();
        assert_eq!((r.death_a, r.death_b), (0.3, 0.3));

        l.set(2, SiteState::A);
        let r = transition_rates(&l, 2, &ModelParams::scp(2.0, 0.7)).unwrap();
        assert_eq!(r.death_a, 1.0);

        l.set(2, SiteState::EMPTY);
        l.set(1, SiteState::A);
        let r = transition_rates(&l, 2, &p).unwrap();
        assert_eq!(r.birth_a, 1.0);
        assert_eq!(r.birth_b, 0.0);

        let r = transition_rates(&l, 2, &ModelParams::scpd(2.0, 0.3, 0.5));
        assert!(r.is_err());
    }

    #[test]
    fn single_type_suppresses_b() {
        let mut l = Lattice::new(1, 5, Boundary::Periodic).unwrap();
        l.set(1, SiteState::AB);
        l.set(2, SiteState::B);
        let r = transition_rates(&l, 2, &ModelParams::contact(2.0)).unwrap();
        assert_eq!(r.birth_b, 0.0);
        assert_eq!(r.death_b, 0.0);
        assert_eq!(r.birth_a, 1.0);
    }

    #[test]
    fn params_validation() {
        assert!(ModelParams::scp(1.0, 1.2).validate().is_err());
        assert!(ModelParams::scp(-1.0, 0.5).validate().is_err());
        assert!(ModelParams::new(Variant::Scpd, 1.0, 0.5)
            .validate()
            .is_err());
        assert!(ModelParams::scpd(1.0, 0.5, 0.25).validate().is_ok());
        let mut p = ModelParams::scp(1.0, 0.5);
        p.epsilon = Some(0.5);
        assert!(p.validate().is_err());
    }

    proptest! {
        #[test]
        fn counts_track_arbitrary_writes(
            side in 1usize..40,
            writes in proptest::collection::vec((0usize..1600, 0u8..4), 0..200),
        ) {
            let mut l = Lattice::new(2, side, Boundary::Closed).unwrap();
            for (site, code) in writes {
                l.set(site % l.len(), SiteState::from_code(code));
                let c = l.counts();
                prop_assert_eq!(c, l.recount());
                prop_assert!(c.ab <= c.a.min(c.b));
            }
        }

        #[test]
        fn neighbour_relation_is_symmetric(side in 1usize..8, dim in 1usize..4, site in 0usize..512) {
            for boundary in [Boundary::Periodic, Boundary::Closed] {
                let l = Lattice::new(dim, side, boundary).unwrap();
                let x = site % l.len();
                for dir in 0..l.degree() {
                    if let Some(y) = l.neighbor(x, dir) {
                        prop_assert_eq!(l.neighbor(y, Lattice::opposite(dir)), Some(x));
                    }
                }
                prop_assert_eq!(l.index(&l.coords(x)).unwrap(), x);
            }
        }
    }
}
