use super::*;
use crate::model::{Boundary, Counts};
use proptest::prelude::*;

fn ring(lambda: f64, mu: f64, side: usize) -> ModelParams {
    ModelParams::scp(lambda, mu).with_box(1, side, Boundary::Periodic)
}

fn lattice_with(params: &ModelParams, sites: &[(usize, SiteState)]) -> Lattice {
    let mut l = Lattice::for_params(params).unwrap();
    for &(i, s) in sites {
        l.set(i, s);
    }
    l
}

#[test]
fn empty_box_is_absorbing() {
    let p = ring(2.0, 0.5, 16);
    let mut sim = Simulation::new(
        p,
        Lattice::for_params(&p).unwrap(),
        GraphicalRandomSource::new(1),
    )
    .unwrap();
    assert_eq!(sim.step(), StepOutcome::Quiescent);
    assert_eq!(sim.event_count(), 0);
}

#[test]
fn lone_particle_without_births_dies_once() {
    let p = ModelParams::contact(0.0).with_box(1, 9, Boundary::Closed);
    let l = lattice_with(&p, &[(4, SiteState::A)]);
    let mut sim = Simulation::new(p, l, GraphicalRandomSource::new(3)).unwrap();
    match sim.step() {
        StepOutcome::Event { kind, site, .. } => {
            assert_eq!(kind, EventKind::Death(Species::A));
            assert_eq!(site, 4);
        }
        other => panic!("unexpected {other:?}"),
    }
    assert_eq!(sim.step(), StepOutcome::Quiescent);
}

#[test]
fn death_time_of_lone_particle_is_unit_exponential() {
    let p = ModelParams::contact(0.0).with_box(1, 3, Boundary::Closed);
    let n = 20_000;
    let mut sum = 0.0;
    for trial in 0..n {
        let l = lattice_with(&p, &[(1, SiteState::A)]);
        let mut sim =
            Simulation::new(p, l, GraphicalRandomSource::new(8).for_trial(trial)).unwrap();
        let StepOutcome::Event { time, .. } = sim.step() else {
            panic!()
        };
        sum += time;
    }
    let mean = sum / n as f64;
    // sd of the mean of Exp(1) over 2·10^4 draws is about 0.007
    assert!((mean - 1.0).abs() < 0.03, "mean death time {mean}");
}

#[test]
fn doubly_occupied_site_is_frozen_without_mu_deaths() {
    // μ = 0 and λ = 0: no clock can touch an AB site
    let p = ring(0.0, 0.0, 8);
    let l = lattice_with(&p, &[(3, SiteState::AB)]);
    let mut sim = Simulation::new(p, l, GraphicalRandomSource::new(1)).unwrap();
    assert_eq!(sim.step(), StepOutcome::Quiescent);
    assert_eq!(sim.lattice().get(3), SiteState::AB);
}

#[test]
fn stirring_moves_a_lone_particle_at_rate_two_d_over_eps_squared() {
    // λ = 0, μ = 0: the lone A still dies through the rate-1 conditional
    // clock, so count jumps per unit of lifetime
    let p = ModelParams::scpd(0.0, 0.0, 0.5).with_box(1, 101, Boundary::Periodic);
    let l = lattice_with(&p, &[(50, SiteState::A)]);
    let (mut jumps, mut life, mut net) = (0u64, 0.0, 0i64);
    for trial in 0..2000 {
        let mut sim =
            Simulation::new(p, l.clone(), GraphicalRandomSource::new(5).for_trial(trial)).unwrap();
        let mut pos = 50usize;
        loop {
            match sim.step() {
                StepOutcome::Event {
                    kind: EventKind::Stir(Species::A),
                    site,
                    partner: Some(other),
                    ..
                } => {
                    assert!(site == pos || other == pos);
                    pos = if site == pos { other } else { site };
                    assert_eq!(sim.lattice().counts().a, 1);
                    jumps += 1;
                }
                StepOutcome::Event {
                    time,
                    kind: EventKind::Death(Species::A),
                    ..
                } => {
                    life += time;
                    break;
                }
                other => panic!("unexpected {other:?}"),
            }
        }
        net += pos as i64 - 50;
        assert_eq!(sim.step(), StepOutcome::Quiescent);
    }
    let rate = jumps as f64 / life;
    assert!((rate - 8.0).abs() < 0.3, "jump rate {rate}");
    // symmetric walk: mean displacement per trial is near 0 (sd ≈ 0.06)
    assert!((net as f64 / 2000.0).abs() < 0.3);
}

#[test]
fn runs_are_reproducible() {
    let p = ring(1.8, 0.3, 64);
    let l = single_ab_at_center(&p).unwrap();
    let src = GraphicalRandomSource::new(77).for_trial(4);
    let a = simulate_trajectory(p, l.clone(), src, 30.0, 1.0).unwrap();
    let b = simulate_trajectory(p, l, src, 30.0, 1.0).unwrap();
    assert_eq!(a, b);
    assert!(!a.events.is_empty());
    assert!(a.is_time_ordered());
}

#[test]
fn samples_match_replay() {
    let p = ring(2.0, 0.4, 48);
    let l = single_ab_at_center(&p).unwrap();
    let tr = simulate_trajectory(p, l, GraphicalRandomSource::new(9), 20.0, 0.5).unwrap();
    for s in &tr.samples {
        assert_eq!(tr.replay_to(s.t).counts(), s.counts);
    }
}

#[test]
fn event_log_round_trips() {
    let p = ModelParams::scpd(1.5, 0.5, 0.7).with_box(2, 9, Boundary::Closed);
    let mut l = Lattice::for_params(&p).unwrap();
    l.fill(SiteState::AB);
    let tr = simulate_trajectory(p, l, GraphicalRandomSource::new(4), 3.0, 0.0).unwrap();
    let mut buf = Vec::new();
    write_event_log(&mut buf, &tr).unwrap();
    let back = read_event_log(buf.as_slice()).unwrap();
    assert_eq!(back.params, tr.params);
    assert_eq!(back.initial, tr.initial);
    assert_eq!(back.events, tr.events);
    assert_eq!(back.t_end, tr.t_end);
}

#[test]
fn malformed_logs_are_rejected() {
    assert!(read_event_log("hello\n".as_bytes()).is_err());
    let bad = "# symbiosim-events v1\n# variant=scp lambda=1.0 mu=0.5 epsilon=none dim=1 side=4 boundary=closed t_end=1.0\n0.5 9 bA\n";
    assert!(read_event_log(bad.as_bytes()).is_err());
    let bad = "# symbiosim-events v1\n# variant=scp lambda=1.0 mu=0.5 epsilon=none dim=1 side=4 boundary=closed t_end=1.0\n0.5 1 xx\n";
    assert!(read_event_log(bad.as_bytes()).is_err());
}

#[test]
fn audited_run_keeps_counts_consistent() {
    let p = ModelParams::scpd(2.0, 0.5, 0.5).with_box(2, 12, Boundary::Periodic);
    let mut l = Lattice::for_params(&p).unwrap();
    l.fill(SiteState::AB);
    let mut sim = Simulation::new(p, l, GraphicalRandomSource::new(12))
        .unwrap()
        .with_audit(true);
    sim.run_until(5.0);
    assert!(sim.event_count() > 100);
    assert_eq!(sim.lattice().counts(), sim.lattice().recount());
}

#[test]
fn stirring_conserves_particles_per_level() {
    let p = ModelParams::scpd(2.0, 0.5, 0.3).with_box(1, 40, Boundary::Periodic);
    let mut l = Lattice::for_params(&p).unwrap();
    l.fill(SiteState::AB);
    let mut sim = Simulation::new(p, l, GraphicalRandomSource::new(6)).unwrap();
    let mut stirs = 0;
    for _ in 0..5000 {
        let before: Counts = sim.lattice().counts();
        match sim.step() {
            StepOutcome::Event {
                kind: EventKind::Stir(_),
                ..
            } => {
                let after = sim.lattice().counts();
                assert_eq!((before.a, before.b), (after.a, after.b));
                stirs += 1;
            }
            StepOutcome::Event { .. } => {}
            _ => break,
        }
    }
    assert!(stirs > 1000);
}

#[test]
fn contact_variant_rejects_b_particles() {
    let p = ModelParams::contact(1.0).with_box(1, 5, Boundary::Closed);
    let l = lattice_with(&p, &[(2, SiteState::B)]);
    assert!(Simulation::new(p, l, GraphicalRandomSource::new(1)).is_err());
}

#[test]
fn sbvm_is_not_a_lattice_variant() {
    let p = ModelParams::new(Variant::Sbvm, 1.0, 0.5);
    let l = Lattice::for_params(&p).unwrap();
    assert_eq!(
        Simulation::new(p, l, GraphicalRandomSource::new(1)).err(),
        Some(Error::UnsupportedVariant("sbvm"))
    );
}

#[test]
fn ceiling_below_lambda_is_rejected() {
    let p = ring(2.0, 0.5, 8);
    let l = single_ab_at_center(&p).unwrap();
    assert!(Simulation::new(p, l, GraphicalRandomSource::new(1).with_birth_ceiling(1.0)).is_err());
}

#[test]
fn lambda_coupling_keeps_containment() {
    let p = ring(0.5, 0.3, 64);
    for seed in 0..5 {
        let src = GraphicalRandomSource::new(seed).with_birth_ceiling(1.5);
        let l = single_ab_at_center(&p).unwrap();
        let low = simulate_trajectory(p.with_lambda(1.0), l.clone(), src, 30.0, 0.0).unwrap();
        let high = simulate_trajectory(p.with_lambda(1.5), l, src, 30.0, 0.0).unwrap();
        assert_eq!(containment_violations(&low, &high).unwrap(), 0);
    }
}

#[test]
fn growing_the_box_keeps_clocks_near_the_centre() {
    // the same trial on a bigger box agrees until the cluster sees the edge
    let small = ring(1.5, 0.5, 41);
    let big = ring(1.5, 0.5, 81);
    let src = GraphicalRandomSource::new(31);
    let a =
        simulate_trajectory(small, single_ab_at_center(&small).unwrap(), src, 3.0, 0.0).unwrap();
    let b = simulate_trajectory(big, single_ab_at_center(&big).unwrap(), src, 3.0, 0.0).unwrap();
    assert_eq!(a.events.len(), b.events.len());
    for (x, y) in a.events.iter().zip(&b.events) {
        assert_eq!(x.time, y.time);
        assert_eq!(x.kind, y.kind);
        assert_eq!(x.site as i64 - 20, y.site as i64 - 40);
    }
}

#[test]
fn species_swap_gives_the_mirrored_trajectory() {
    let p = ring(1.7, 0.4, 32);
    let l = lattice_with(
        &p,
        &[(10, SiteState::A), (11, SiteState::AB), (20, SiteState::B)],
    );
    let src = GraphicalRandomSource::new(19);
    let a = simulate_trajectory(p, l.clone(), src, 20.0, 0.0).unwrap();
    let b = simulate_trajectory(p, l.swapped(), src.species_swapped(), 20.0, 0.0).unwrap();
    assert_eq!(a.events.len(), b.events.len());
    for (x, y) in a.events.iter().zip(&b.events) {
        assert_eq!(x.time, y.time);
        assert_eq!(x.site, y.site);
        assert_eq!(x.kind.swapped(), y.kind);
        assert_eq!(x.state.swapped(), y.state);
    }
}

fn arb_config(n: usize) -> impl Strategy<Value = Vec<u8>> {
    proptest::collection::vec(0u8..4, n)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn attractiveness_under_shared_clocks(
        upper in arb_config(12),
        mask in arb_config(12),
        seed in 0u64..1000,
        lambda in 0.5f64..3.0,
        mu in 0.0f64..1.0,
    ) {
        let p = ModelParams::scp(lambda, mu).with_box(1, 12, Boundary::Closed);
        let mut hi = Lattice::for_params(&p).unwrap();
        let mut lo = Lattice::for_params(&p).unwrap();
        for i in 0..12 {
            hi.set(i, SiteState::from_code(upper[i]));
            lo.set(i, SiteState::from_code(upper[i] & mask[i]));
        }
        let src = GraphicalRandomSource::new(seed);
        let a = simulate_trajectory(p, lo, src, 10.0, 0.0).unwrap();
        let b = simulate_trajectory(p, hi, src, 10.0, 0.0).unwrap();
        prop_assert_eq!(containment_violations(&a, &b).unwrap(), 0);
    }

    #[test]
    fn lambda_coupling_is_monotone(
        seed in 0u64..1000,
        l1 in 0.0f64..2.0,
        dl in 0.0f64..1.5,
        mu in 0.0f64..1.0,
    ) {
        let p = ModelParams::scp(l1, mu).with_box(1, 24, Boundary::Periodic);
        let src = GraphicalRandomSource::new(seed).with_birth_ceiling(l1 + dl);
        let l = single_ab_at_center(&p).unwrap();
        let a = simulate_trajectory(p, l.clone(), src, 10.0, 0.0).unwrap();
        let b = simulate_trajectory(p.with_lambda(l1 + dl), l, src, 10.0, 0.0).unwrap();
        prop_assert_eq!(containment_violations(&a, &b).unwrap(), 0);
    }

    #[test]
    fn counts_track_events(seed in 0u64..1000, lambda in 0.0f64..3.0, mu in 0.0f64..1.0) {
        let p = ring(lambda, mu, 20);
        let mut l = Lattice::for_params(&p).unwrap();
        l.fill(SiteState::AB);
        let mut sim = Simulation::new(p, l, GraphicalRandomSource::new(seed)).unwrap().with_audit(true);
        sim.run_until(5.0);
        prop_assert_eq!(sim.lattice().counts(), sim.lattice().recount());
    }
}
