mod common;

use proptest::prelude::*;
use pslab::cultures::{gen_ic, random_utility_profile};
use pslab::equilibria::profile_id;
use pslab::ps::{finish_times, ps_assignment};
use pslab::relations::Payoff;
use pslab::strategy::Terminal;
use pslab::threat::threat_profile_counted;
use pslab::{
    compute_granularity, dl_best_response, dl_compare, enumerate_pne, eu_best_response, eu_value,
    run_dynamics, spne_construct, threat_profile, verify_pne, Bounds, Comparison, Instance,
    LinearOrder, MoverPolicy, Rational, Relation, UtilityProfile,
};

use common::rankings;

fn relabel_instance(instance: &Instance, sigma: &[usize]) -> Instance {
    Instance::new(
        instance
            .profile()
            .iter()
            .map(|o| relabel(o, sigma))
            .collect(),
    )
    .unwrap()
}

fn relabel(order: &LinearOrder, sigma: &[usize]) -> LinearOrder {
    LinearOrder::new(order.ranking().iter().map(|&h| sigma[h]).collect()).unwrap()
}

fn relabel_utilities(u: &UtilityProfile, sigma: &[usize]) -> UtilityProfile {
    let rows = u
        .to_rows()
        .into_iter()
        .map(|row| {
            let mut out = vec![Rational::zero(); row.len()];
            for (h, x) in row.into_iter().enumerate() {
                out[sigma[h]] = x;
            }
            out
        })
        .collect();
    UtilityProfile::from_rows(rows).unwrap()
}

fn strictly_improves(
    relation: &Relation<'_>,
    order: &LinearOrder,
    old: &Payoff,
    new: &Payoff,
) -> bool {
    match (relation, old, new) {
        (Relation::Eu(_), Payoff::Utility(a), Payoff::Utility(b)) => b > a,
        (Relation::Dl, Payoff::Allocation(a), Payoff::Allocation(b)) => {
            dl_compare(b, a, order).unwrap() == Comparison::FirstPreferred
        }
        _ => false,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn truth_is_never_better_than_eu_best_response(n in 1usize..4, m in 1usize..5, seed in any::<u64>()) {
        let inst = gen_ic(n, m, seed).unwrap();
        let u = random_utility_profile(&inst, seed ^ 1);
        let (p, _) = pslab::run_ps(&inst);
        for i in 0..n {
            let br = eu_best_response(&inst, &u, i, &Bounds::default()).unwrap();
            let Payoff::Utility(v) = &br.value else { unreachable!() };
            prop_assert!(*v >= eu_value(p.row(i), u.row(i)).unwrap());
        }
    }

    #[test]
    fn two_agent_dl_best_response_is_eu_optimal(m in 1usize..6, seed in any::<u64>()) {
        let inst = gen_ic(2, m, seed).unwrap();
        let b = Bounds::default();
        for k in 0..3 {
            let u = random_utility_profile(&inst, seed.wrapping_add(k));
            for i in 0..2 {
                let dl = dl_best_response(&inst, i, &b).unwrap();
                let eu = eu_best_response(&inst, &u, i, &b).unwrap();
                let Payoff::Utility(best) = eu.value else { unreachable!() };
                prop_assert_eq!(eu_value(&dl.row, u.row(i)).unwrap(), best);
            }
        }
    }

    #[test]
    fn dynamics_only_revisit_through_a_cycle(n in 2usize..4, m in 2usize..5, seed in any::<u64>()) {
        let inst = gen_ic(n, m, seed).unwrap();
        let u = random_utility_profile(&inst, seed ^ 7);
        for policy in [MoverPolicy::RoundRobin, MoverPolicy::FirstImproving] {
            let out = run_dynamics(&inst, &Relation::Eu(&u), inst.profile(), policy, 30, &Bounds::default()).unwrap();
            let t = &out.trajectory;
            let distinct_prefix = match out.terminal {
                Terminal::Cycle { start, period } => {
                    prop_assert_eq!(&t[start + period], &t[start]);
                    t.len() - 1
                }
                _ => t.len(),
            };
            let ids: std::collections::HashSet<u64> = t[..distinct_prefix].iter().map(|p| profile_id(p)).collect();
            prop_assert_eq!(ids.len(), distinct_prefix);
        }
    }

    #[test]
    fn witness_present_iff_not_equilibrium(n in 2usize..4, m in 2usize..4, seed in any::<u64>(), report_seed in any::<u64>()) {
        let inst = gen_ic(n, m, seed).unwrap();
        let reported = gen_ic(n, m, report_seed).unwrap().profile().to_vec();
        let u = UtilityProfile::borda(&inst);
        for relation in [Relation::Dl, Relation::Eu(&u)] {
            let v = verify_pne(&inst, &relation, &reported, &Bounds::default()).unwrap();
            prop_assert_eq!(v.is_pne, v.witness.is_none());
            if let Some(d) = &v.witness {
                prop_assert!(strictly_improves(&relation, inst.order(d.agent), &d.old, &d.new));
            }
        }
    }

    #[test]
    fn equilibria_follow_house_relabeling(n in 2usize..4, m in 2usize..4, seed in any::<u64>(), perm in any::<u64>()) {
        let inst = gen_ic(n, m, seed).unwrap();
        let sigma = pslab::perm::unrank(perm % pslab::perm::factorial(m).unwrap(), m);
        let moved = relabel_instance(&inst, &sigma);
        let u = random_utility_profile(&inst, seed ^ 3);
        let moved_u = relabel_utilities(&u, &sigma);
        let b = Bounds::default();
        for (rel, moved_rel) in [(Relation::Dl, Relation::Dl), (Relation::Eu(&u), Relation::Eu(&moved_u))] {
            let mut expected: Vec<u64> = enumerate_pne(&inst, &rel, None, &b)
                .unwrap()
                .iter()
                .map(|r| profile_id(&r.profile.iter().map(|o| relabel(o, &sigma)).collect::<Vec<_>>()))
                .collect();
            expected.sort_unstable();
            let found: Vec<u64> = enumerate_pne(&moved, &moved_rel, None, &b).unwrap().iter().map(|r| r.profile_id).collect();
            prop_assert_eq!(found, expected);
        }
    }

    #[test]
    fn granularity_divides_every_gap(n in 1usize..4, m in 1usize..4, seed in any::<u64>()) {
        let inst = gen_ic(n, m, seed).unwrap();
        let g = compute_granularity(&inst, &Bounds::default()).unwrap();
        prop_assert!(g.g > Rational::zero());
        prop_assert!((&g.g / &g.quantum).is_integer());
        prop_assert!((Rational::one() / &g.quantum).is_integer());
        prop_assert_eq!(g.quantum.clone(), g.g.gcd(&Rational::one()) / Rational::from_integer(n as i64));
        for report in enumerate_all(n, m) {
            let refs: Vec<&[usize]> = report.iter().map(Vec::as_slice).collect();
            let mut prev = Rational::zero();
            for t in finish_times(m, &refs) {
                prop_assert!(((&t - &prev) / &g.g).is_integer());
                prev = t;
            }
        }
    }

    #[test]
    fn game_path_is_a_ps_run(n in 1usize..4, m in 1usize..4, seed in any::<u64>()) {
        let inst = gen_ic(n, m, seed).unwrap();
        let u = random_utility_profile(&inst, seed ^ 5);
        for relation in [Relation::Dl, Relation::Eu(&u)] {
            let (game, _) = spne_construct(&inst, &relation, None, &Bounds::default()).unwrap();
            game.allocation.validate().unwrap();
            prop_assert_eq!(game.path.len(), game.depth);
            prop_assert!(game.path.iter().enumerate().all(|(k, &(agent, _))| agent == k % n));
            prop_assert_eq!(ps_assignment(m, &game.profile), game.allocation.clone());
        }
    }

    #[test]
    fn threat_lists_are_permutations(m in 1usize..9, a in any::<u64>(), b in any::<u64>()) {
        let o1 = order_from(a, m);
        let o2 = order_from(b, m);
        let (q1, q2, ops) = threat_profile_counted(&o1, &o2).unwrap();
        for q in [&q1, &q2] {
            let mut seen = q.ranking().to_vec();
            seen.sort_unstable();
            prop_assert_eq!(seen, (0..m).collect::<Vec<_>>());
        }
        prop_assert!(ops <= 4 * m);
    }

    #[test]
    fn threat_lists_recurse_on_the_remaining_houses(m in 2usize..9, a in any::<u64>(), b in any::<u64>()) {
        let (o1, o2) = (order_from(a, m), order_from(b, m));
        let (q1, q2) = threat_profile(&o1, &o2).unwrap();
        let (h, h2) = (o1.ranking()[0], o2.ranking()[0]);
        let round = if h == h2 { 1 } else { 2 };
        prop_assert_eq!(q1.ranking()[0], h);
        prop_assert_eq!(q2.ranking()[0], h2);
        if round == 2 {
            prop_assert_eq!(q1.ranking()[1], h2);
            prop_assert_eq!(q2.ranking()[1], h);
        }
        // the rest is the threat profile of the orders with both tops removed
        let kept: Vec<usize> = (0..m).filter(|&x| x != h && x != h2).collect();
        if kept.is_empty() {
            return Ok(());
        }
        let compact = |o: &LinearOrder| {
            LinearOrder::new(
                o.ranking().iter().filter(|x| kept.contains(x)).map(|x| kept.iter().position(|k| k == x).unwrap()).collect(),
            )
            .unwrap()
        };
        let (r1, r2) = threat_profile(&compact(&o1), &compact(&o2)).unwrap();
        let expand = |o: &LinearOrder| o.ranking().iter().map(|&x| kept[x]).collect::<Vec<_>>();
        let (e1, e2) = (expand(&r1), expand(&r2));
        prop_assert_eq!(&q1.ranking()[round..], e1.as_slice());
        prop_assert_eq!(&q2.ranking()[round..], e2.as_slice());
    }
}

fn order_from(seed: u64, m: usize) -> LinearOrder {
    LinearOrder::new(pslab::perm::unrank(
        seed % pslab::perm::factorial(m).unwrap(),
        m,
    ))
    .unwrap()
}

fn enumerate_all(n: usize, m: usize) -> Vec<Vec<Vec<usize>>> {
    let perms = pslab::perm::all_permutations(m);
    let mut out = vec![vec![]];
    for _ in 0..n {
        out = out
            .into_iter()
            .flat_map(|prefix: Vec<Vec<usize>>| {
                perms.iter().map(move |p| {
                    let mut next = prefix.clone();
                    next.push(p.clone());
                    next
                })
            })
            .collect();
    }
    out
}

#[test]
fn threat_guarantees_hold_for_five_houses() {
    let b = Bounds::default();
    for k in 0..100u64 {
        let inst = gen_ic(2, 5, 70_000 + k).unwrap();
        let u = random_utility_profile(&inst, 80_000 + k);
        let report =
            pslab::check_threat_guarantees(inst.order(0), inst.order(1), &[u], &b).unwrap();
        assert!(
            report.holds(),
            "seed {}: {:?}",
            70_000 + k,
            report.falsifications()
        );
    }
}

#[test]
fn corpus_profiles_round_trip_through_ids() {
    for inst in common::small_corpus(2) {
        let id = profile_id(inst.profile());
        let back = pslab::equilibria::profile_from_id(id, inst.n(), inst.m());
        assert_eq!(back, inst.profile(), "{:?}", rankings(&inst));
    }
}
