use std::collections::BTreeSet;

use oodt_core::social::*;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn history(events: &[(usize, usize, f64, f64)]) -> ContactHistory {
    let mut h = ContactHistory::new();
    for &(a, b, s, e) in events {
        h.push(ContactEvent::new(a, b, s, e).unwrap());
    }
    h
}

/// Midpoint-rule integral of the waiting time, evaluated pointwise.
fn spm_numeric(intervals: &[(f64, f64)], t0: f64, window: f64) -> f64 {
    let steps = 200_000;
    let dt = window / steps as f64;
    let mut sum = 0.0;
    for k in 0..steps {
        let t = t0 + (k as f64 + 0.5) * dt;
        let in_contact = intervals.iter().any(|&(s, e)| s <= t && t < e);
        let wait = if in_contact {
            0.0
        } else {
            intervals.iter().filter(|&&(s, _)| s > t && s < t0 + window).map(|&(s, _)| s - t).fold(t0 + window - t, f64::min)
        };
        sum += wait * dt;
    }
    sum / window
}

#[test]
fn spm_examples() {
    let t = 10.0;
    let full = history(&[(1, 2, 0.0, t)]);
    assert_eq!(spm(&full, 1, 2, 0.0, t), 1.0);
    let none = ContactHistory::new();
    assert!((spm(&none, 1, 2, 0.0, t) - 2.0 / (2.0 + t)).abs() < 1e-12);
    let half = history(&[(2, 1, 0.0, t / 2.0)]);
    assert!((spm(&half, 1, 2, 0.0, t) - 8.0 / (8.0 + t)).abs() < 1e-12);
}

#[test]
fn spm_matches_numeric_integral() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..20 {
        let mut iv = Vec::new();
        let mut t = rng.gen_range(-3.0..2.0);
        while t < 12.0 {
            let e = t + rng.gen_range(0.1..2.0);
            iv.push((t, e));
            t = e + rng.gen_range(0.1..3.0);
        }
        let exact = spm_raw(&iv, 0.0, 10.0);
        assert!((exact - spm_numeric(&iv, 0.0, 10.0)).abs() < 1e-3, "{iv:?}");
    }
}

#[test]
fn open_contacts_count_until_now() {
    let mut h = ContactHistory::new();
    h.open(3, 1, 2.0);
    assert!(h.is_open(1, 3));
    assert_eq!(h.intervals(1, 3, 5.0), vec![(2.0, 5.0)]);
    h.close(1, 3, 6.0);
    assert_eq!(h.intervals(3, 1, 9.0), vec![(2.0, 6.0)]);
}

#[test]
fn socsim_examples() {
    let a: BTreeSet<usize> = [1, 2, 3].into();
    let b: BTreeSet<usize> = [2, 3, 4, 5].into();
    assert!((socsim(&a, &b) - 2.0 / 7.0).abs() < 1e-15);
    assert_eq!(socsim(&a, &a), 0.5);
    assert_eq!(socsim(&a, &[7, 8].into()), 0.0);
    assert_eq!(socsim(&BTreeSet::new(), &BTreeSet::new()), 0.0);
}

#[test]
fn social_tie_examples() {
    let p = SocialParams::new(0.5, 10.0).unwrap();
    assert!((social_tie(&p, 0.4, 0.2) - 0.3).abs() < 1e-15);
    assert_eq!(social_tie(&SocialParams::new(1.0, 10.0).unwrap(), 0.37, 0.9), 0.37);
    assert_eq!(social_tie(&SocialParams::new(0.0, 10.0).unwrap(), 0.37, 0.9), 0.9);
    assert!(SocialParams::new(1.5, 10.0).is_err());
    assert!(SocialParams::new(0.5, 0.0).is_err());
}

#[test]
fn energy_examples() {
    let p = EnergyParams::default();
    assert!((energy_tx_cost(&p, 2) - 7.36e-3).abs() < 1e-15);
    assert!((energy_tx_cost(&p, 0) - 3.76e-3).abs() < 1e-15);
    assert!((energy_tx_cost(&p, 10) - 21.76e-3).abs() < 1e-15);
}

#[test]
fn etx_examples() {
    assert_eq!(etx_link(1.0, 1.0), 1.0);
    assert_eq!(etx_link(0.5, 0.5), 4.0);
    assert_eq!(etx_link(0.8, 1.0), 1.25);
    assert_eq!(etx_link(0.0, 1.0), f64::INFINITY);
    let mut g = EtxGraph::new(3);
    assert_eq!(etx_to_destination(&g, 1, 1), 0.0);
    g.add_link(0, 1, 1.25);
    g.add_link(1, 2, 1.25);
    assert_eq!(etx_to_destination(&g, 0, 2), 2.5);
    assert_eq!(etx_to_destination(&EtxGraph::new(2), 0, 1), f64::INFINITY);
}

fn brute_min_path(g: &EtxGraph, src: usize, dst: usize) -> f64 {
    fn go(g: &EtxGraph, u: usize, dst: usize, seen: &mut Vec<bool>, cost: f64, best: &mut f64) {
        if u == dst {
            *best = best.min(cost);
            return;
        }
        for &(v, w) in g.neighbors(u) {
            if !seen[v] {
                seen[v] = true;
                go(g, v, dst, seen, cost + w, best);
                seen[v] = false;
            }
        }
    }
    let mut seen = vec![false; g.len()];
    seen[src] = true;
    let mut best = f64::INFINITY;
    go(g, src, dst, &mut seen, 0.0, &mut best);
    best
}

#[test]
fn dijkstra_matches_path_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for _ in 0..200 {
        let mut g = EtxGraph::new(6);
        for a in 0..6 {
            for b in (a + 1)..6 {
                if rng.gen_bool(0.45) {
                    g.add_link(a, b, etx_link(rng.gen_range(0.05..1.0), rng.gen_range(0.05..1.0)));
                }
            }
        }
        for s in 0..6 {
            for d in 0..6 {
                let a = etx_to_destination(&g, s, d);
                let b = brute_min_path(&g, s, d);
                assert!(a == b || (a - b).abs() < 1e-9, "{s}->{d}: {a} vs {b}");
            }
        }
    }
}

#[test]
fn trace_csv_round_trip() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let h = synthetic_trace(&mut rng, 12, 3, 500.0, 0.01, 0.001, 20.0);
    assert!(!h.events().is_empty());
    let back = ContactHistory::parse_csv(&h.to_csv()).unwrap();
    assert_eq!(back.events(), h.events());
    assert!(matches!(ContactHistory::parse_csv("1,2,5,3\n"), Err(SocialError::Parse { line: 1, .. })));
    assert!(matches!(ContactHistory::parse_csv("node_a,node_b,start_s,end_s\n1,1,0,3\n"), Err(SocialError::Parse { line: 2, .. })));
}

#[test]
fn synthetic_trace_favours_communities() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let h = synthetic_trace(&mut rng, 20, 1, 1000.0, 0.01, 0.0, 10.0);
    assert!(h.events().iter().all(|c| c.start < c.end && c.end <= 1000.0));
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let sparse = synthetic_trace(&mut rng, 20, 20, 1000.0, 0.01, 0.0, 10.0);
    assert!(sparse.events().len() < h.events().len());
}

proptest! {
    #[test]
    fn social_tie_is_bounded_and_monotone(chi in 0.0f64..=1.0, s in 0.0f64..=1.0, c in 0.0f64..=1.0, ds in 0.0f64..0.5, dc in 0.0f64..0.5) {
        let p = SocialParams::new(chi, 10.0).unwrap();
        let v = social_tie(&p, s, c);
        prop_assert!((0.0..=1.0).contains(&v));
        prop_assert!(social_tie(&p, (s + ds).min(1.0), c) >= v - 1e-15);
        prop_assert!(social_tie(&p, s, (c + dc).min(1.0)) >= v - 1e-15);
    }

    #[test]
    fn energy_is_linear(n in 0usize..1000) {
        let p = EnergyParams::default();
        let slope = energy_tx_cost(&p, n + 1) - energy_tx_cost(&p, n);
        prop_assert!((slope - p.e_receive).abs() < 1e-12);
    }

    #[test]
    fn spm_waiting_fraction_is_scale_free(starts in prop::collection::vec((0.0f64..10.0, 0.01f64..2.0), 0..6), k in 0.1f64..10.0) {
        let iv: Vec<(f64, f64)> = starts.iter().map(|&(s, d)| (s, s + d)).collect();
        let scaled: Vec<(f64, f64)> = iv.iter().map(|&(s, e)| (k * s, k * e)).collect();
        let a = spm_raw(&iv, 0.0, 10.0) / 10.0;
        let b = spm_raw(&scaled, 0.0, 10.0 * k) / (10.0 * k);
        prop_assert!((a - b).abs() < 1e-9);
        let h = {
            let mut h = ContactHistory::new();
            for &(s, e) in &iv { h.push(ContactEvent::new(0, 1, s, e).unwrap()); }
            h
        };
        let v = spm(&h, 0, 1, 0.0, 10.0);
        prop_assert!(v > 0.0 && v <= 1.0);
    }

    #[test]
    fn residuals_never_increase(debits in prop::collection::vec((0usize..4, 0.0f64..0.5), 1..60)) {
        let mut b = EnergyBook::new(4, 2.0);
        let mut deaths = vec![None; 4];
        for (t, &(n, x)) in debits.iter().enumerate() {
            let before = b.residual.clone();
            b.debit(n, x, t as f64);
            prop_assert!(b.residual.iter().zip(&before).all(|(a, c)| a <= c));
            for i in 0..4 {
                if deaths[i].is_some() {
                    prop_assert_eq!(b.death_time[i], deaths[i]);
                }
                deaths[i] = b.death_time[i];
            }
        }
    }

    #[test]
    fn etx_path_is_a_lower_bound(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut g = EtxGraph::new(8);
        let path: Vec<usize> = (0..8).collect();
        let mut explicit = 0.0;
        for w in path.windows(2) {
            let e = etx_link(rng.gen_range(0.1..1.0), 1.0);
            g.add_link(w[0], w[1], e);
            explicit += e;
        }
        for _ in 0..6 {
            let (a, b) = (rng.gen_range(0..8), rng.gen_range(0..8));
            g.add_link(a, b, etx_link(rng.gen_range(0.1..1.0), 1.0));
        }
        prop_assert!(etx_to_destination(&g, 0, 7) <= explicit + 1e-12);
    }
}
