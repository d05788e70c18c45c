//! Small boxes solved exactly through the matrix exponential of the
//! generator, written out here from the rate description alone.

mod common;

use common::{both_alive, contact_generator, law_at, scp_generator, A, B};
use statrs::distribution::{ChiSquared, ContinuousCDF};
use symbiosim::engine::decay::{occupancy_moments, KappaOptions};
use symbiosim::engine::{estimate_survival, Simulation};
use symbiosim::model::{Boundary, Lattice, ModelParams, SiteState};
use symbiosim::random::GraphicalRandomSource;

fn encode(l: &Lattice) -> usize {
    l.iter()
        .map(|(x, s)| (s.a_present() as usize * A + s.b_present() as usize * B) << (2 * x))
        .sum()
}

fn chi_square_test(counts: &[u64], law: &[f64], trials: u64) {
    let mut stat = 0.0;
    let mut bins = 0;
    let (mut lump_obs, mut lump_exp) = (0.0, 0.0);
    for (o, p) in counts.iter().zip(law) {
        let e = p * trials as f64;
        if e >= 5.0 {
            stat += (*o as f64 - e).powi(2) / e;
            bins += 1;
        } else {
            lump_obs += *o as f64;
            lump_exp += e;
        }
    }
    if lump_exp >= 5.0 {
        stat += (lump_obs - lump_exp).powi(2) / lump_exp;
        bins += 1;
    }
    let crit = ChiSquared::new((bins - 1) as f64)
        .unwrap()
        .inverse_cdf(0.999);
    assert!(
        stat < crit,
        "chi-square {stat} over {bins} bins exceeds {crit}"
    );
}

#[test]
fn two_site_survival_matches_matrix_exponential() {
    let (lambda, mu) = (1.0, 0.5);
    let q = scp_generator(2, lambda, mu, 0.0, &[A, B]);
    // AB at the centre of a 2-site box is site 1
    let law = law_at(&q, (A | B) << 2, 1.0);
    let p: f64 = law
        .iter()
        .enumerate()
        .filter(|(c, _)| both_alive(*c, 2))
        .map(|(_, w)| w)
        .sum();
    let params = ModelParams::scp(lambda, mu).with_box(1, 2, Boundary::Closed);
    let n = 100_000;
    let s = estimate_survival(&params, 1.0, n, 17, 1).unwrap();
    let band = 2.576 * (p * (1.0 - p) / n as f64).sqrt();
    assert!(
        (s.estimate - p).abs() < band,
        "mc {} vs exact {p} (band {band})",
        s.estimate
    );
}

fn sampled_configurations(
    params: ModelParams,
    start: &Lattice,
    t: f64,
    trials: u64,
    seed: u64,
) -> Vec<u64> {
    let mut counts = vec![0u64; 1 << (2 * start.len())];
    for i in 0..trials {
        let mut sim = Simulation::new(
            params,
            start.clone(),
            GraphicalRandomSource::new(seed).for_trial(i),
        )
        .unwrap();
        sim.run_until(t);
        counts[encode(sim.lattice())] += 1;
    }
    counts
}

#[test]
fn three_site_configuration_law_passes_chi_square() {
    let (lambda, mu, t) = (2.0, 0.3, 1.5);
    let params = ModelParams::scp(lambda, mu).with_box(1, 3, Boundary::Closed);
    let mut start = Lattice::for_params(&params).unwrap();
    start.set(1, SiteState::AB);
    let law = law_at(
        &scp_generator(3, lambda, mu, 0.0, &[A, B]),
        encode(&start),
        t,
    );
    let trials = 40_000;
    chi_square_test(
        &sampled_configurations(params, &start, t, trials, 3),
        &law,
        trials,
    );
}

#[test]
fn stirred_three_site_law_passes_chi_square() {
    let (lambda, mu, eps, t) = (1.5, 0.4, 1.0, 1.0);
    let params = ModelParams::scpd(lambda, mu, eps).with_box(1, 3, Boundary::Closed);
    let mut start = Lattice::for_params(&params).unwrap();
    start.set(0, SiteState::AB);
    start.set(2, SiteState::A);
    let law = law_at(
        &scp_generator(3, lambda, mu, 1.0 / (eps * eps), &[A, B]),
        encode(&start),
        t,
    );
    let trials = 40_000;
    chi_square_test(
        &sampled_configurations(params, &start, t, trials, 4),
        &law,
        trials,
    );
}

#[test]
fn seven_site_occupancy_means_match_exact_values() {
    let lambda = 0.8;
    let n = 7;
    let q = contact_generator(n, lambda);
    let start = 1 << 3;
    let grid = vec![0.5, 1.0, 2.0, 3.0];
    let mut opts = KappaOptions::new(lambda, grid.clone(), 20_000, 6);
    opts.side = Some(n);
    let moments = occupancy_moments(&opts).unwrap();
    for (m, &t) in moments.iter().zip(&grid) {
        let law = law_at(&q, start, t);
        let mean: f64 = law
            .iter()
            .enumerate()
            .map(|(c, w)| w * c.count_ones() as f64)
            .sum();
        let se = (m.var / opts.trials as f64).sqrt();
        assert!(
            (m.mean - mean).abs() < 4.0 * se,
            "t = {t}: mc {} vs exact {mean}",
            m.mean
        );
    }
}

#[test]
fn species_decouple_at_mu_one() {
    let (lambda, n, t) = (1.5, 3, 2.0);
    let start = (A | B) << 2;
    let joint = law_at(&scp_generator(n, lambda, 1.0, 0.0, &[A, B]), start, t);
    let p_joint: f64 = joint
        .iter()
        .enumerate()
        .filter(|(c, _)| both_alive(*c, n))
        .map(|(_, w)| w)
        .sum();
    let single = law_at(&contact_generator(n, lambda), 1 << 1, t);
    let p_single = 1.0 - single[0];
    assert!((p_joint - p_single * p_single).abs() < 1e-12);
    let params = ModelParams::scp(lambda, 1.0).with_box(1, n, Boundary::Closed);
    let trials = 50_000;
    let s = estimate_survival(&params, t, trials, 8, 1).unwrap();
    let band = 2.576 * (p_joint * (1.0 - p_joint) / trials as f64).sqrt();
    assert!(
        (s.estimate - p_joint).abs() < band,
        "mc {} vs exact {p_joint}",
        s.estimate
    );
}
