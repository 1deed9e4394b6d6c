use oodt_core::auction::CfsClass;
use oodt_core::geometry::Point2D;
use oodt_core::obstacles::{los_clear, ObstacleMap};
use oodt_core::sim::*;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

fn quiet(su: usize) -> Scenario {
    Scenario {
        su_count: su,
        pu_count: 1,
        pu_range: 1e-3,
        packet_rate: 0.0,
        speed_min: 1e-6,
        speed_max: 1e-6,
        duration: 5.0,
        ..Scenario::default()
    }
}

#[test]
fn busy_dwell_has_rate_mean() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let n = 100_000;
    let total: f64 = (0..n).map(|_| pu_transition(false, 0.0, 10.0, 10.0, &mut rng).1).sum();
    assert!((total / n as f64 - 0.1).abs() < 0.1 * 0.02);
}

#[test]
fn symmetric_rates_give_half_busy_time() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let (mut on, mut t, mut busy) = (false, 0.0, 0.0);
    for k in 0..100_000 {
        let (next, until) = pu_transition(on, t, 10.0, 10.0, &mut rng);
        assert_eq!(next, k % 2 == 0);
        if next {
            busy += until - t;
        }
        on = next;
        t = until;
    }
    assert!((busy / t - 0.5).abs() < 0.01);
}

#[test]
fn pu_field_audit_log_matches_state() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut f = PuField::new(vec![Point2D::new(0.0, 0.0)], 2, 50.0, 10.0, 10.0, &mut rng);
    for k in 1..200 {
        let t = k as f64 * 0.05;
        f.advance(t, &mut rng);
        for c in 0..2 {
            let hit = f.busy_intervals(0, c).iter().any(|&(a, b)| a <= t && t < b);
            assert_eq!(hit, f.is_on(0, c));
            assert_eq!(f.blocks(c, Point2D::new(10.0, 0.0)), f.is_on(0, c));
            assert!(!f.blocks(c, Point2D::new(60.0, 0.0)));
        }
    }
}

#[test]
fn link_probability_shape() {
    let s = Scenario::default();
    let m = LinkModel::new(&s);
    assert!(m.delivery_prob(1e-3) > 0.999_999);
    assert_eq!(link_delivery_prob(121.0, &s), 0.0);
    assert!((m.success_given_shadow(60.0, 0.0) - 0.9).abs() < 1e-9);
    let mut last = 1.0;
    for k in 1..=240 {
        let p = m.delivery_prob(k as f64 * 0.5);
        assert!(p <= last + 1e-12, "not monotone at {}", k as f64 * 0.5);
        last = p;
    }
}

/// Sample-mean estimate of the shadowing expectation.
#[test]
fn quadrature_matches_monte_carlo() {
    let s = Scenario::default();
    let m = LinkModel::new(&s);
    let shadow = Normal::new(0.0, s.shadowing_sigma_db).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for d in [20.0, 60.0, 90.0, 119.0] {
        let n = 200_000;
        let mc: f64 = (0..n).map(|_| m.success_given_shadow(d, shadow.sample(&mut rng))).sum::<f64>() / n as f64;
        assert!((mc - m.delivery_prob(d)).abs() < 4e-3, "d={d} mc={mc} gh={}", m.delivery_prob(d));
    }
    let nak = LinkModel::new(&Scenario { fading_m: 2.0, ..s.clone() });
    assert!((nak.success_given_shadow(60.0, 0.0) - 0.9).abs() < 1e-9);
    assert!(nak.delivery_prob(119.0) > 0.0);
}

#[test]
fn waypoint_reached_means_redraw() {
    let map = ObstacleMap::empty(100.0, 100.0);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let p = Point2D::new(50.0, 50.0);
    let mut w = Walker { position: p, waypoint: p, speed: 1.0 };
    mobility_step(&mut w, 0.1, &map, (0.1, 2.0), &mut rng);
    assert_ne!(w.waypoint, p);
    assert!(w.position.dist(p) <= 2.0 * 0.1 + 1e-12);
}

#[test]
fn random_waypoint_bounds_and_center_bias() {
    let map = ObstacleMap::empty(100.0, 100.0);
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut w = Walker::new(&map, (0.1, 2.0), &mut rng);
    let (mut center, mut corner) = (0, 0);
    for _ in 0..100_000 {
        let before = w.position;
        mobility_step(&mut w, 1.0, &map, (0.1, 2.0), &mut rng);
        assert!(w.position.dist(before) <= 2.0 + 1e-9);
        assert!(map.in_area(w.position));
        let p = w.position;
        if (40.0..60.0).contains(&p.x) && (40.0..60.0).contains(&p.y) {
            center += 1;
        }
        if p.x < 20.0 && p.y < 20.0 {
            corner += 1;
        }
    }
    assert!(center > corner, "center {center} corner {corner}");
}

#[test]
fn walkers_stay_out_of_obstacles() {
    let block = oodt_core::geometry::Polygon::new(&[(40.0, 40.0), (40.0, 60.0), (60.0, 60.0), (60.0, 40.0)].map(Point2D::from)).unwrap();
    let map = ObstacleMap::new(100.0, 100.0, vec![block]).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut w = Walker::new(&map, (0.5, 2.0), &mut rng);
    for _ in 0..20_000 {
        let before = w.position;
        mobility_step(&mut w, 1.0, &map, (0.5, 2.0), &mut rng);
        assert!(!map.inside_obstacle(w.position));
        assert!(los_clear(&map, before, w.position).unwrap());
    }
}

#[test]
fn idle_network() {
    let s = Scenario { packet_rate: 0.0, su_count: 10, duration: 10.0, ..Scenario::default() };
    let r = run(&s).unwrap();
    assert_eq!(r.pdr, 0.0);
    assert_eq!(r.avg_delay, None);
    assert_eq!(r.network_lifetime, 10.0);
    assert_eq!(r.counters.generated, 0);
}

#[test]
fn runs_are_reproducible() {
    let s = Scenario { su_count: 30, obstacle_count: 4, duration: 30.0, seed: 77, ..Scenario::default() };
    let a = run(&s).unwrap();
    let b = run(&s).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.csv_row("OODT", 77), b.csv_row("OODT", 77));
    let c = run(&Scenario { seed: 78, ..s }).unwrap();
    assert_ne!(a.csv_row("OODT", 0), c.csv_row("OODT", 0));
}

#[test]
fn smoke_run_with_obstacles() {
    let s = Scenario { su_count: 30, obstacle_count: 6, duration: 100.0, seed: 9, ..Scenario::default() };
    let r = run(&s).unwrap();
    assert!((0.0..=1.0).contains(&r.pdr));
    assert!(r.counters.generated > 0);
    assert!(r.network_lifetime <= s.duration);
    assert_eq!(r.invariants.violations(), 0, "{}", r.invariants.summary());
    let row = r.csv_row("OODT", 9);
    assert_eq!(row.split(',').count(), MetricsReport::CSV_HEADER.split(',').count());
}

#[test]
fn single_sure_link_delivers_in_one_transmission() {
    let mut sim = Simulation::new(quiet(2)).unwrap();
    sim.set_position(0, Point2D::new(500.0, 500.0));
    sim.set_position(1, Point2D::new(500.001, 500.0));
    let id = sim.inject_packet(0, 1);
    let out = sim.step();
    assert_eq!(out.len(), 1);
    assert_eq!(out[0].kind, RoundKind::Forwarded);
    assert!(out[0].delivered);
    assert_eq!(out[0].winner, Some((1, CfsClass::Primary)));
    let e = sim.scenario().energy;
    let res = &sim.energy().residual;
    assert!((e.e_initial - res[0] - e.e_forward).abs() < 1e-12);
    assert!((e.e_initial - res[1] - e.e_receive - e.e_ack).abs() < 1e-12);
    assert_eq!(sim.packets()[id as usize].status, PacketStatus::Delivered);
    assert_eq!(sim.counters().data_tx, 1);
    assert_eq!(sim.counters().ack_tx, 1);
}

#[test]
fn busy_primary_users_starve_the_packet() {
    let s = Scenario {
        pu_range: 5000.0,
        lambda_busy: 1e-3,
        lambda_idle: 1e3,
        ..quiet(2)
    };
    let mut sim = Simulation::new(s.clone()).unwrap();
    sim.set_position(0, Point2D::new(500.0, 500.0));
    sim.set_position(1, Point2D::new(510.0, 500.0));
    sim.inject_packet(0, 1);
    let mut kinds = Vec::new();
    for _ in 0..20 {
        kinds.extend(sim.step().into_iter().map(|o| (o.kind, o.dropped)));
    }
    assert_eq!(kinds.len(), s.retry_limit as usize);
    assert!(kinds.iter().all(|k| matches!(k.0, RoundKind::NoChannel | RoundKind::Blocked)));
    assert!(kinds.last().unwrap().1);
    assert_eq!(sim.counters().data_tx, 0);
    let r = sim.finish().report;
    assert_eq!(r.counters.dropped, 1);
    assert_eq!(r.pdr, 0.0);
}

#[test]
fn forwarder_choice_prefers_rank_then_primary() {
    let ranked = [(4, CfsClass::Primary), (2, CfsClass::Primary), (7, CfsClass::Backup)];
    assert_eq!(pick_forwarder(&ranked, &[true, true, true]), Some((4, CfsClass::Primary)));
    assert_eq!(pick_forwarder(&ranked, &[false, true, true]), Some((2, CfsClass::Primary)));
    assert_eq!(pick_forwarder(&ranked, &[false, false, true]), Some((7, CfsClass::Backup)));
    assert_eq!(pick_forwarder(&ranked, &[false, false, false]), None);
    let mixed = [(1, CfsClass::Backup), (3, CfsClass::Primary)];
    assert_eq!(pick_forwarder(&mixed, &[true, true]), Some((3, CfsClass::Primary)));
}

/// Every forwarding round in dense runs: one forwarder, the best-ranked
/// receiver, everyone else suppressed.
#[test]
fn event_trace_has_single_forwarders() {
    let mut multi = 0;
    for seed in 0..4 {
        let s = Scenario {
            su_count: 60,
            width: 400.0,
            height: 400.0,
            pu_count: 3,
            packet_rate: 5.0,
            obstacle_count: 2,
            obstacle_min_side: 20.0,
            obstacle_max_side: 60.0,
            duration: 20.0,
            seed,
            ..Scenario::default()
        };
        let mut sim = Simulation::new(s).unwrap();
        for _ in 0..200 {
            for o in sim.step() {
                if o.kind != RoundKind::Forwarded {
                    assert!(o.winner.is_none());
                    continue;
                }
                let (w, class) = o.winner.unwrap();
                assert!(o.receivers.contains(&w));
                let best = o.candidates.iter().find(|c| o.receivers.contains(&c.0) && c.1 == CfsClass::Primary);
                let best = best.or_else(|| o.candidates.iter().find(|c| o.receivers.contains(&c.0)));
                assert_eq!(best, Some(&(w, class)));
                let mut rest: Vec<usize> = o.receivers.iter().copied().filter(|&r| r != w).collect();
                rest.sort();
                let mut sup = o.suppressed.clone();
                sup.sort();
                assert_eq!(sup, rest);
                if o.receivers.len() >= 3 {
                    multi += 1;
                }
            }
        }
        let r = sim.finish().report;
        assert_eq!(r.invariants.violations(), 0, "{}", r.invariants.summary());
        assert!(r.invariants.checked_rounds > 0);
    }
    assert!(multi > 0);
}

#[test]
fn metric_arithmetic() {
    let k = 5;
    let acks = 3;
    let log = RunLog {
        counters: RunCounters { generated: k, delivered: k, data_tx: k, ack_tx: k * acks, ..RunCounters::default() },
        delays: vec![0.1; k as usize],
        duration: 100.0,
        ..RunLog::default()
    };
    let r = compute_metrics(&log);
    assert_eq!(r.expected_routing_cost, Some(1.0 + acks as f64));
    assert_eq!(r.network_lifetime, 100.0);
    assert_eq!(r.pdr, 1.0);
    let none = compute_metrics(&RunLog { counters: RunCounters { generated: 4, ..RunCounters::default() }, duration: 50.0, ..RunLog::default() });
    assert_eq!(none.pdr, 0.0);
    assert_eq!(none.avg_delay, None);
    assert!(none.csv_row("x", 1).contains(ABSENT));
    let died = compute_metrics(&RunLog { first_death: Some(42.0), duration: 50.0, ..RunLog::default() });
    assert_eq!(died.network_lifetime, 42.0);
    assert_eq!(friend_pairs(&[0.0, 0.25, 0.5, 0.75]), 2);
    assert_eq!(friend_pairs(&[0.0, 0.0]), 0);
}

#[test]
fn scenario_text_round_trips() {
    let mut s = Scenario { su_count: 33, obstacle_count: 3, protocol: Protocol::ShortestEtx, trace: true, ..Scenario::default() };
    s.auction.bid_strategy = oodt_core::auction::BidStrategy::Derived;
    assert_eq!(Scenario::parse(&s.to_text(), None).unwrap(), s);
    let p = Scenario::parse("# comment\narea = 500x400\nsu_count = 12 # trailing\nprotocol = oodt-noobstacle\n", None).unwrap();
    assert_eq!((p.width, p.height, p.su_count, p.protocol), (500.0, 400.0, 12, Protocol::OodtNoObstacle));
    assert!(matches!(Scenario::parse("bogus = 1", None), Err(SimError::ConfigInvalid(_))));
    assert!(matches!(Scenario::parse("slot = 0.2", None), Err(SimError::ConfigInvalid(_))));
    assert!(matches!(Scenario::parse("su_count = 0", None), Err(SimError::ConfigInvalid(_))));
    assert!(matches!(Scenario::parse("phi1 = 0.9", None), Err(SimError::ConfigInvalid(_))));
    assert!(matches!(Scenario::parse("su_count", None), Err(SimError::ConfigInvalid(_))));
    for p in Protocol::ALL {
        assert_eq!(p.name().parse::<Protocol>().unwrap(), p);
    }
}

#[test]
fn obstacle_file_and_contact_trace_load() {
    let dir = std::env::temp_dir().join(format!("oodt-sim-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    std::fs::write(dir.join("walls.txt"), "AREA 300 300\n100 100\n100 200\n120 200\n120 100\n").unwrap();
    std::fs::write(dir.join("trace.csv"), "node_a,node_b,start_s,end_s\n0,1,-5,-1\n").unwrap();
    let text = "area = 300x300\nsu_count = 5\nobstacle_file = walls.txt\ncontact_trace = trace.csv\nduration = 2\n";
    std::fs::write(dir.join("s.cfg"), text).unwrap();
    let s = Scenario::load(&dir.join("s.cfg")).unwrap();
    let sim = Simulation::new(s.clone()).unwrap();
    assert_eq!(sim.map().len(), 1);
    assert!(run(&s).is_ok());
    let bad = Scenario { width: 500.0, ..s };
    assert!(matches!(Simulation::new(bad), Err(SimError::ConfigInvalid(_))));
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn trace_output_lists_events() {
    let s = Scenario { su_count: 40, width: 400.0, height: 400.0, duration: 5.0, trace: true, packet_rate: 4.0, ..Scenario::default() };
    let out = run_with_trace(&s).unwrap();
    let t = out.trace.unwrap();
    assert!(t.lines().any(|l| l.contains(" gen ")));
    assert!(t.lines().last().unwrap().contains("end"));
    let a = out.auction_trace.unwrap();
    assert!(a.starts_with(oodt_core::auction::TRACE_HEADER));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn random_runs_keep_invariants(seed in any::<u64>(), obstacles in 0usize..5, proto in 0usize..3) {
        let s = Scenario {
            su_count: 25,
            width: 500.0,
            height: 500.0,
            obstacle_count: obstacles,
            obstacle_min_side: 20.0,
            obstacle_max_side: 80.0,
            packet_rate: 3.0,
            duration: 15.0,
            protocol: Protocol::ALL[proto],
            seed,
            ..Scenario::default()
        };
        let r = run(&s).unwrap();
        prop_assert_eq!(r.invariants.violations(), 0, "{}", r.invariants.summary());
        let c = &r.counters;
        prop_assert_eq!(c.generated, c.delivered + c.dropped + c.in_flight);
    }

    #[test]
    fn link_probability_is_monotone(a in 0.1f64..120.0, b in 0.1f64..120.0) {
        let m = LinkModel::new(&Scenario::default());
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        prop_assert!(m.delivery_prob(lo) >= m.delivery_prob(hi) - 1e-12);
    }
}

#[test]
fn displacement_never_exceeds_speed() {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let map = ObstacleMap::random_blocks(&mut rng, 300.0, 300.0, 4, 20.0, 60.0, 5.0);
    let mut w = Walker::new(&map, (0.1, 2.0), &mut rng);
    for _ in 0..10_000 {
        let dt = rng.gen_range(0.01..2.0);
        let before = w.position;
        mobility_step(&mut w, dt, &map, (0.1, 2.0), &mut rng);
        assert!(w.position.dist(before) <= 2.0 * dt + 1e-9);
    }
}
