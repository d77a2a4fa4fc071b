use num_rational::BigRational;
use num_traits::{One, Zero};
use proptest::prelude::*;
use wdvv_core::format::{parse_potential, write_potential};
use wdvv_core::reconstruct::{
    build_schedule, degree_one_key, reconstruct_with_schedule, solve_with_candidate, TraceEntry,
};
use wdvv_core::{
    admissible_keys, admissible_targets, reconstruct, rescale_novikov, residual_scan,
    wdvv_coefficient, CoordLabel, Geometry, Multiplet, Potential, ScheduleKind, SeedMode,
    SeriesKey, WdvvQuad,
};

fn q(n: i64, d: i64) -> BigRational {
    BigRational::new(n.into(), d.into())
}

fn arb_multiplet() -> impl Strategy<Value = Multiplet> {
    prop::collection::vec(2u32..5, 3..5).prop_map(|mut v| {
        v.sort();
        Multiplet::new(v).unwrap()
    })
}

/// A potential with arbitrary values on every admissible key up to `m_max`.
fn arb_potential(m_max: u32) -> impl Strategy<Value = Potential> {
    (arb_multiplet(), any::<u64>()).prop_map(move |(a, seed)| {
        let g = Geometry::new(a);
        let mut p = Potential::new(g.clone(), SeedMode::Standard, m_max);
        let mut s = seed | 1;
        for m in 0..=m_max {
            for alpha in admissible_keys(&g, m) {
                s ^= s << 13;
                s ^= s >> 7;
                s ^= s << 17;
                let num = (s % 11) as i64 - 5;
                let den = ((s >> 20) % 4) as i64 + 1;
                p.insert(SeriesKey::new(alpha, m), q(num, den)).unwrap();
            }
        }
        p
    })
}

fn pick<T: Clone>(v: &[T], i: usize) -> T {
    v[i % v.len()].clone()
}

/// A quad and an admissible target for it, chosen from index seeds.
fn probe(p: &Potential, idx: &[usize; 6], m_max: u32) -> Option<(WdvvQuad, SeriesKey)> {
    let g = p.geometry();
    let labels = g.labels();
    let quad = WdvvQuad::new(
        pick(labels, idx[0]),
        pick(labels, idx[1]),
        pick(labels, idx[2]),
        pick(labels, idx[3]),
    );
    let m = (idx[4] % (m_max as usize + 1)) as u32;
    let targets = admissible_targets(g, &quad, m);
    if targets.is_empty() {
        return None;
    }
    Some((quad, SeriesKey::new(pick(&targets, idx[5]), m)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn unit_quads_vanish(p in arb_potential(2), idx in any::<[usize; 6]>(), pos in 0usize..4) {
        let g = p.geometry();
        let mut labels: Vec<CoordLabel> = (0..4).map(|k| pick(g.labels(), idx[k])).collect();
        labels[pos] = CoordLabel::Unit;
        let quad = WdvvQuad::new(labels[0], labels[1], labels[2], labels[3]);
        let m = (idx[4] % 3) as u32;
        for alpha in admissible_targets(g, &quad, m).into_iter().take(8) {
            let key = SeriesKey::new(alpha, m);
            prop_assert!(wdvv_coefficient(&p, &quad, &key).is_zero());
        }
    }

    #[test]
    fn wdvv_symmetries(p in arb_potential(2), idx in any::<[usize; 6]>()) {
        if let Some((quad, key)) = probe(&p, &idx, 2) {
            let base = wdvv_coefficient(&p, &quad, &key);
            for (other, sign) in quad.orbit() {
                let v = wdvv_coefficient(&p, &other, &key);
                let expect = if sign > 0 { base.clone() } else { -base.clone() };
                prop_assert_eq!(v, expect, "{} vs {}", quad, other);
            }
            let (canon, sign) = quad.canonical();
            let v = wdvv_coefficient(&p, &canon, &key);
            prop_assert_eq!(if sign > 0 { v } else { -v }, base.clone());
            // the three pairings of a multiset sum to zero
            let [a, b, c, d] = quad.labels();
            let s = base
                + wdvv_coefficient(&p, &WdvvQuad::new(a, c, d, b), &key)
                + wdvv_coefficient(&p, &WdvvQuad::new(a, d, b, c), &key);
            prop_assert!(s.is_zero());
        }
    }

    #[test]
    fn potential_text_round_trip(p in arb_potential(2)) {
        let text = write_potential(&p);
        let back = parse_potential(&text).unwrap();
        prop_assert_eq!(&back, &p);
        prop_assert_eq!(write_potential(&back), text);
    }

    #[test]
    fn targets_outside_admissible_set_vanish(p in arb_potential(1), idx in any::<[usize; 6]>()) {
        let g = p.geometry();
        let labels = g.labels();
        let quad = WdvvQuad::new(
            pick(labels, idx[0]), pick(labels, idx[1]), pick(labels, idx[2]), pick(labels, idx[3]),
        );
        // a degree-2 key is admissible for the quad only if the degrees line up
        for alpha in admissible_keys(g, 1).into_iter().take(6) {
            let key = SeriesKey::new(alpha, 1);
            if !admissible_targets(g, &quad, 1).contains(&key.alpha) {
                prop_assert!(wdvv_coefficient(&p, &quad, &key).is_zero());
            }
        }
    }
}

fn mult(s: &str) -> Multiplet {
    s.parse().unwrap()
}

#[test]
fn targeted_and_exhaustive_schedules_agree() {
    for (a, m) in [("2,2,3", 2u32), ("2,2,2", 3), ("2,3,3", 1)] {
        let (p1, t1) =
            reconstruct_with_schedule(&mult(a), m, SeedMode::Standard, ScheduleKind::Targeted)
                .unwrap();
        let (p2, t2) =
            reconstruct_with_schedule(&mult(a), m, SeedMode::Standard, ScheduleKind::Exhaustive)
                .unwrap();
        assert_eq!(write_potential(&p1), write_potential(&p2), "{a}");
        assert!(t2
            .entries
            .iter()
            .all(|e| matches!(e, TraceEntry::Solve { fallback: true, .. })));
        assert!(t1.entries.len() == t2.entries.len());
    }
}

#[test]
fn reconstruction_is_deterministic() {
    let (p1, t1) = reconstruct(&mult("2,3,4"), 2, SeedMode::Standard).unwrap();
    let (p2, t2) = reconstruct(&mult("2,3,4"), 2, SeedMode::Standard).unwrap();
    assert_eq!(write_potential(&p1), write_potential(&p2));
    assert_eq!(t1, t2);
}

#[test]
fn every_solving_equation_gives_the_same_value() {
    for (a, m) in [("2,2,3", 3u32), ("2,3,4", 2), ("3,3,3", 1)] {
        let (p, trace) = reconstruct(&mult(a), m, SeedMode::Standard).unwrap();
        let g = p.geometry();
        let mut checked = 0;
        for entry in build_schedule(g, m, p.mode(), ScheduleKind::Targeted) {
            let want = p.coefficient(&entry.target);
            for cand in &entry.candidates {
                if let Some((_, v)) = solve_with_candidate(&p, &entry.target, cand) {
                    assert_eq!(
                        v,
                        want,
                        "{a}: {} via {}",
                        entry.target.display(g),
                        cand.quad
                    );
                    checked += 1;
                }
            }
        }
        assert!(checked > trace.entries.len());
    }
}

#[test]
fn standard_mode_low_degree_one_terms() {
    for a in ["2,2,2", "2,2,3", "2,3,4", "3,3,3", "2,3,7"] {
        let (p, _) = reconstruct(&mult(a), 1, SeedMode::Standard).unwrap();
        let g = p.geometry();
        let special = degree_one_key(g);
        for alpha in admissible_keys(g, 1) {
            if alpha.length() as usize <= g.sectors() {
                let key = SeriesKey::new(alpha, 1);
                let want = if key == special {
                    BigRational::one()
                } else {
                    BigRational::zero()
                };
                assert_eq!(p.coefficient(&key), want, "{a}");
            }
        }
    }
}

#[test]
fn constant_terms_vanish_without_positive_euler_number() {
    for (a, m) in [("3,3,3", 3u32), ("2,3,7", 2), ("2,4,4", 2)] {
        let (p, _) = reconstruct(&mult(a), m, SeedMode::Standard).unwrap();
        let g = p.geometry();
        for k in 1..=m {
            assert!(p
                .coefficient(&SeriesKey::new(
                    wdvv_core::ExponentVector::zero(g.twisted_len()),
                    k
                ))
                .is_zero());
        }
    }
}

#[test]
fn rescaling_matches_rescaled_seed() {
    for a in ["2,2,3", "2,3,4"] {
        let (p, _) = reconstruct(&mult(a), 2, SeedMode::Standard).unwrap();
        for f in [q(7, 3), q(-2, 1), q(5, 1)] {
            let r = rescale_novikov(&p, &f).unwrap();
            let (direct, _) = reconstruct(&mult(a), 2, SeedMode::Rescaled(f.clone())).unwrap();
            assert_eq!(write_potential(&r), write_potential(&direct), "{a} {f}");
            assert!(residual_scan(&r, 2).is_clean());
        }
    }
}

#[test]
fn residuals_are_stable_under_extending_the_store() {
    let (p2, _) = reconstruct(&mult("2,2,3"), 2, SeedMode::Standard).unwrap();
    let (p4, _) = reconstruct(&mult("2,2,3"), 4, SeedMode::Standard).unwrap();
    let mut bad2 = p2.clone();
    let mut bad4 = p4.clone();
    let g = p2.geometry().clone();
    let k = SeriesKey::from_pairs(&g, &[((3, 1), 2), ((3, 2), 2)], 0);
    for p in [&mut bad2, &mut bad4] {
        let v = p.coefficient(&k) + q(1, 1);
        p.insert(k.clone(), v).unwrap();
    }
    let r2 = residual_scan(&bad2, 2);
    let r4 = residual_scan(&bad4, 4);
    let low: Vec<_> = r4
        .residuals
        .iter()
        .filter(|r| r.target.m <= 2)
        .cloned()
        .collect();
    assert!(!r2.residuals.is_empty());
    assert_eq!(r2.residuals, low);
}
