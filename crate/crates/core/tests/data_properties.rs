mod common;

use proptest::prelude::*;
use pslab::cultures::{
    gen_ic, gen_mallows, gen_random_utilities, gen_sp_ic, gen_urn, is_single_peaked,
    random_utility_profile,
};
use pslab::experiments::{emit_figures_data, run_experiment, samples_csv, ExperimentConfig};
use pslab::preflib::{parse_soc, sample_instance, PrefLibDocument};
use pslab::{LinearOrder, Rational};

use common::{order, rankings};

fn fixture(name: &str) -> String {
    std::fs::read_to_string(format!(
        "{}/tests/fixtures/{name}",
        env!("CARGO_MANIFEST_DIR")
    ))
    .unwrap()
}

fn arb_document() -> impl Strategy<Value = PrefLibDocument> {
    (1usize..6)
        .prop_flat_map(|m| {
            let row = (1u64..20, Just((0..m).collect::<Vec<_>>()).prop_shuffle());
            (
                Just(m),
                prop::collection::vec(row, 1..6),
                prop::collection::vec(prop::option::of("[a-z]{1,8}"), m),
            )
        })
        .prop_map(|(m, rows, names)| {
            // unique orders only, as a document lists each order once
            let mut unique: Vec<(u64, Vec<usize>)> = Vec::new();
            for (count, order) in rows {
                if !unique.iter().any(|(_, o)| *o == order) {
                    unique.push((count, order));
                }
            }
            PrefLibDocument {
                alternatives: m,
                names,
                rows: unique,
                comments: vec![],
            }
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn generators_are_pure(n in 1usize..6, m in 1usize..6, seed in any::<u64>()) {
        prop_assert_eq!(gen_ic(n, m, seed).unwrap(), gen_ic(n, m, seed).unwrap());
        prop_assert_eq!(gen_sp_ic(n, m, seed).unwrap(), gen_sp_ic(n, m, seed).unwrap());
        prop_assert_eq!(gen_urn(n, m, seed).unwrap(), gen_urn(n, m, seed).unwrap());
        prop_assert_eq!(gen_mallows(n, m, 0.4, None, seed).unwrap(), gen_mallows(n, m, 0.4, None, seed).unwrap());
    }

    #[test]
    fn sampled_utilities_are_consistent(n in 1usize..6, m in 1usize..7, seed in any::<u64>()) {
        let inst = gen_ic(n, m, seed).unwrap();
        let u = random_utility_profile(&inst, seed);
        u.check_consistent(&inst).unwrap();
        for i in 0..n {
            prop_assert_eq!(u.row(i).iter().sum::<Rational>(), Rational::from_integer(m as i64));
        }
    }

    #[test]
    fn soc_render_round_trips(doc in arb_document()) {
        let text = doc.render();
        let parsed = parse_soc(&text).unwrap();
        prop_assert_eq!(&parsed, &doc);
        prop_assert_eq!(parsed.render(), text);
    }

    #[test]
    fn sampling_keeps_relative_order(doc in arb_document(), n in 1usize..5, k in 1usize..6, seed in any::<u64>()) {
        let m = k.min(doc.alternatives);
        let inst = sample_instance(&doc, n, m, seed).unwrap();
        // some m-subset of alternatives, relabelled in ascending id order, explains every agent
        let explains = |subset: &[usize]| {
            rankings(&inst).iter().all(|agent| {
                doc.rows.iter().any(|(_, row)| {
                    let restricted: Vec<usize> =
                        row.iter().filter_map(|a| subset.iter().position(|s| s == a)).collect();
                    restricted == *agent
                })
            })
        };
        let subsets = (0u32..1 << doc.alternatives)
            .filter(|mask| mask.count_ones() as usize == m)
            .map(|mask| (0..doc.alternatives).filter(|a| mask >> a & 1 == 1).collect::<Vec<_>>());
        let mut any = false;
        for s in subsets {
            any |= explains(&s);
        }
        prop_assert!(any);
    }
}

#[test]
fn sp_ic_draws_are_single_peaked() {
    for seed in 0..2_000 {
        let inst = gen_sp_ic(5, 6, seed).unwrap();
        assert!(inst.profile().iter().all(is_single_peaked), "seed {seed}");
    }
}

#[test]
fn golden_ic_profile() {
    let inst = gen_ic(2, 3, 42).unwrap();
    assert_eq!(inst.profile(), [order("h2,h3,h1"), order("h3,h1,h2")]);
}

#[test]
fn golden_utility_row() {
    let row = gen_random_utilities(&order("h2,h3,h1"), 42);
    let expected = [
        Rational::new(13_023_874_042_386, 20_915_468_144_465),
        Rational::new(5_135_591_966_271_774, 3_710_404_048_828_091),
        Rational::new(18_425_924_625_466_113, 18_552_020_244_140_455),
    ];
    assert_eq!(row, expected);
    assert_eq!(row.iter().sum::<Rational>(), Rational::from_integer(3));
}

#[test]
fn golden_preflib_sample() {
    let doc = parse_soc(&fixture("courses.soc")).unwrap();
    let inst = sample_instance(&doc, 3, 2, 7).unwrap();
    let want: Vec<LinearOrder> = vec![order("h1,h2"); 3];
    assert_eq!(inst.profile(), want.as_slice());
}

fn ic_experiment() -> ExperimentConfig {
    let cells = ExperimentConfig::parse_cells("ic,2,3,10", |_| unreachable!()).unwrap();
    ExperimentConfig::new(cells, 42)
}

#[test]
fn golden_experiment_csvs() {
    let out = run_experiment(&ic_experiment()).unwrap();
    let (classification, extremes) = emit_figures_data(&out.summaries);
    assert_eq!(
        samples_csv(&out.samples),
        fixture("golden/ic-2x3-seed42-samples.csv")
    );
    assert_eq!(
        classification,
        fixture("golden/ic-2x3-seed42-classification.csv")
    );
    assert_eq!(extremes, fixture("golden/ic-2x3-seed42-extremes.csv"));
}

#[test]
fn experiment_csvs_ignore_thread_count() {
    let cells = ExperimentConfig::parse_cells(
        "ic,2,3,8\nurn,3,2,8\nmallows:0.7,2,4,3\nsp-ic,3,3,4",
        |_| unreachable!(),
    )
    .unwrap();
    let cfg = ExperimentConfig::new(cells, 7);
    let render = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap();
        let out = pool.install(|| run_experiment(&cfg)).unwrap();
        let (c, e) = emit_figures_data(&out.summaries);
        (samples_csv(&out.samples), c, e)
    };
    let one = render(1);
    assert_eq!(one, render(3));
    assert_eq!(one, render(8));
}

#[test]
fn sample_fractions_sum_to_one() {
    let cells =
        ExperimentConfig::parse_cells("ic,2,3,20\nurn,3,3,10\nsp-ic,2,4,5", |_| unreachable!())
            .unwrap();
    let out = run_experiment(&ExperimentConfig::new(cells, 3)).unwrap();
    for s in &out.samples {
        assert!(s.num_pne >= 1);
        assert_eq!(
            s.fractions().into_iter().sum::<Rational>(),
            Rational::one(),
            "sample {} seed {}",
            s.sample,
            s.seed
        );
        assert_eq!(s.equal + s.increase + s.decrease, s.num_pne);
    }
}
