use probserial::engine::{completion_time, run_ps, run_with_pauses};
use probserial::generators::{default_epsilon, dichotomous_for, random_pause_plan, random_profile, Seed};
use probserial::manipulation::{best_response, best_response_parallel, SearchSpace};
use probserial::rational::r;
use probserial::theory::{pause_monotonicity_check, time_chain};
use probserial::{Horizon, OrdinalProfile, PausePlan, Rational, Valuation};
use proptest::prelude::*;
use rand::seq::SliceRandom;

fn profile(max_n: usize, max_m: usize) -> impl Strategy<Value = OrdinalProfile> {
    (1..=max_n, 1..=max_m, any::<u64>()).prop_map(|(n, m, s)| random_profile(n, m, Seed(s)).unwrap())
}

/// Profiles with `n >= m` and at least two agents.
fn square_or_tall(max_n: usize) -> impl Strategy<Value = OrdinalProfile> {
    (2..=max_n)
        .prop_flat_map(|n| (Just(n), 1..=n, any::<u64>()))
        .prop_map(|(n, m, s)| random_profile(n, m, Seed(s)).unwrap())
}

fn shuffled(order: &[usize], seed: u64) -> Vec<usize> {
    let mut v = order.to_vec();
    v.shuffle(&mut Seed(seed).rng());
    v
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn every_item_is_eaten_and_agents_never_idle(p in profile(7, 7)) {
        let t = run_ps(&p);
        let horizon = r(p.m() as i64, p.n() as i64);
        for j in 0..p.m() {
            prop_assert_eq!(t.column_sum(j), Rational::one());
            prop_assert!(matches!(t.depletion_time(j), Horizon::At(d) if *d <= horizon));
        }
        for i in 0..p.n() {
            prop_assert_eq!(t.row_sum(i), horizon.clone());
        }
        prop_assert_eq!(t.end_time(), horizon);
        // segment lengths times eaters reproduce the allocation
        let mut acc = vec![vec![Rational::zero(); p.m()]; p.n()];
        for seg in &t.segments {
            for (i, e) in seg.eating.iter().enumerate() {
                if let Some(j) = e {
                    acc[i][*j] += seg.len();
                }
            }
        }
        prop_assert_eq!(acc, t.allocation);
    }

    #[test]
    fn allocation_is_envy_free_in_the_ordinal_sense(p in profile(6, 6)) {
        let t = run_ps(&p);
        for i in 0..p.n() {
            for other in 0..p.n() {
                let (mut mine, mut theirs) = (Rational::zero(), Rational::zero());
                for &j in p.ordering(i) {
                    mine += &t.allocation[i][j];
                    theirs += &t.allocation[other][j];
                    prop_assert!(mine >= theirs);
                }
            }
        }
    }

    #[test]
    fn relabelling_items_permutes_columns(p in profile(6, 6), s in any::<u64>()) {
        let perm = shuffled(&(0..p.m()).collect::<Vec<_>>(), s);
        let relabelled = OrdinalProfile::new(
            p.m(),
            p.prefs().iter().map(|row| row.iter().map(|&j| perm[j]).collect()).collect(),
        ).unwrap();
        let (a, b) = (run_ps(&p), run_ps(&relabelled));
        for i in 0..p.n() {
            for (j, &to) in perm.iter().enumerate() {
                prop_assert_eq!(&a.allocation[i][j], &b.allocation[i][to]);
            }
        }
    }

    #[test]
    fn pauses_never_speed_up_depletion(p in profile(8, 8), s in any::<u64>()) {
        let plan = random_pause_plan(p.n(), Seed(s));
        prop_assert!(pause_monotonicity_check(&p, &plan).unwrap().passed());
        let (plain, paused) = (run_ps(&p), run_with_pauses(&p, &plan).unwrap());
        for j in 0..p.m() {
            prop_assert!(paused.depletion_time(j) >= plain.depletion_time(j));
            let eaten = paused.column_sum(j);
            prop_assert!(eaten <= Rational::one());
            prop_assert_eq!(eaten == Rational::one(), !paused.depletion_time(j).is_never());
        }
    }

    #[test]
    fn empty_plan_is_the_plain_run(p in profile(6, 6)) {
        prop_assert_eq!(run_with_pauses(&p, &PausePlan::empty()).unwrap(), run_ps(&p));
    }

    #[test]
    fn eliminated_agent_report_is_irrelevant(p in profile(6, 6), s in any::<u64>()) {
        let plan = PausePlan::eliminate(0);
        let lied = p.with_report(0, &shuffled(p.ordering(0), s)).unwrap();
        prop_assert_eq!(run_with_pauses(&p, &plan).unwrap(), run_with_pauses(&lied, &plan).unwrap());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn completion_times_are_ordered(p in square_or_tall(6), k in 1usize..=6) {
        let k = k.min(p.m());
        let v = dichotomous_for(&p, 0, k, default_epsilon()).unwrap();
        let interested = v.interested().to_vec();
        let best = best_response(&p, 0, &v.into(), &SearchSpace::full()).unwrap();
        let chain = time_chain(&p, 0, &interested, &best.best_report).unwrap();
        prop_assert!(chain.holds(), "{:?}", chain);
        prop_assert!(best.truthful_utility <= chain.truthful);
    }

    #[test]
    fn restricted_search_never_beats_full_search(p in profile(6, 6), k in 1usize..=6) {
        let k = k.min(p.m());
        let v: Valuation = dichotomous_for(&p, 0, k, default_epsilon()).unwrap().into();
        let head = p.ordering(0)[..k].to_vec();
        let restricted = best_response(&p, 0, &v, &SearchSpace::interested_first(head)).unwrap();
        let full = best_response(&p, 0, &v, &SearchSpace::full()).unwrap();
        prop_assert!(restricted.best_utility <= full.best_utility);
        prop_assert!(restricted.best_utility >= restricted.truthful_utility);
        prop_assert_eq!(&restricted.truthful_utility, &full.truthful_utility);
    }

    #[test]
    fn parallel_search_agrees(p in profile(5, 5), k in 1usize..=5, agent in 0usize..5) {
        let (k, agent) = (k.min(p.m()), agent % p.n());
        let v: Valuation = dichotomous_for(&p, agent, k, default_epsilon()).unwrap().into();
        let space = SearchSpace::full();
        prop_assert_eq!(best_response(&p, agent, &v, &space).unwrap(), best_response_parallel(&p, agent, &v, &space).unwrap());
    }

    #[test]
    fn best_report_reproduces_best_utility(p in profile(5, 5), k in 1usize..=5) {
        let k = k.min(p.m());
        let v: Valuation = dichotomous_for(&p, 0, k, default_epsilon()).unwrap().into();
        let best = best_response(&p, 0, &v, &SearchSpace::full()).unwrap();
        let lied = run_ps(&p.with_report(0, &best.best_report).unwrap());
        prop_assert_eq!(v.utility(lied.row(0)).unwrap(), best.best_utility);
        let interested = p.ordering(0)[..k].to_vec();
        if let Horizon::At(t) = completion_time(&run_ps(&p), &interested).unwrap() {
            prop_assert!(best.truthful_utility <= t);
        }
    }
}
