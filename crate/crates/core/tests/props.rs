//! Property tests: streaming selection against a full-sort oracle, merge
//! algebra, schedule shape, allocation accounting, numeric identities, and
//! file round trips.

use std::collections::HashSet;

use proptest::prelude::*;

use semisup::classifier::{softmax, SoftmaxClassifier};
use semisup::data::{
    read_features, write_features, ExampleId, FeatureContainer, LabeledDataset, LabeledExample,
    ManifestEntry, PoolExample, UnlabeledPool,
};
use semisup::dedup::l2_normalize;
use semisup::selector::{
    build_ranked_lists, merge_ranked_banks, top_p_truncate, zipfian_allocate, RankedEntry,
    RankedList,
};
use semisup::trainer::{LrSchedule, ScheduleKind};

/// Reference selection: materialize every (class, score, id) candidate whose
/// class is in the example's top P, sort each class fully, truncate.
fn oracle_lists(stream: &[(ExampleId, Vec<f64>)], caps: &[usize], p: usize) -> Vec<RankedList> {
    let l = caps.len();
    let mut per_class: Vec<Vec<(f64, ExampleId)>> = vec![Vec::new(); l];
    for (id, probs) in stream {
        let mut order: Vec<usize> = (0..l).collect();
        order.sort_by(|&a, &b| probs[b].total_cmp(&probs[a]).then(a.cmp(&b)));
        for &class in &order[..p] {
            per_class[class].push((probs[class], *id));
        }
    }
    per_class
        .into_iter()
        .enumerate()
        .map(|(class, mut cands)| {
            cands.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
            cands.truncate(caps[class]);
            RankedList {
                class: class as u32,
                capacity: caps[class],
                entries: cands
                    .into_iter()
                    .map(|(score, id)| RankedEntry { id, score })
                    .collect(),
            }
        })
        .collect()
}

/// Random stream of unique-id softmax rows.
fn stream_strategy(
    max_len: usize,
    num_classes: usize,
) -> impl Strategy<Value = Vec<(ExampleId, Vec<f64>)>> {
    prop::collection::vec(
        prop::collection::vec(1e-6f64..1.0, num_classes),
        0..max_len,
    )
    .prop_map(|rows| {
        rows.into_iter()
            .enumerate()
            .map(|(i, raw)| {
                let sum: f64 = raw.iter().sum();
                (ExampleId(i as u64), raw.into_iter().map(|v| v / sum).collect())
            })
            .collect()
    })
}

proptest! {
    #[test]
    fn streaming_matches_oracle(
        stream in stream_strategy(80, 5),
        k in 1usize..12,
        p in 1usize..=5,
    ) {
        let caps = vec![k; 5];
        let got = build_ranked_lists(stream.clone(), &caps, p).unwrap();
        let want = oracle_lists(&stream, &caps, p);
        prop_assert_eq!(got, want);
    }

    #[test]
    fn stream_permutation_is_irrelevant(
        stream in stream_strategy(60, 4),
        rotation in 0usize..60,
    ) {
        let caps = vec![5; 4];
        let base = build_ranked_lists(stream.clone(), &caps, 2).unwrap();
        let mut rotated = stream.clone();
        if !rotated.is_empty() {
            let n = rotated.len();
            rotated.rotate_left(rotation % n);
        }
        let got = build_ranked_lists(rotated, &caps, 2).unwrap();
        prop_assert_eq!(got, base.clone());
        let mut reversed = stream;
        reversed.reverse();
        let got = build_ranked_lists(reversed, &caps, 2).unwrap();
        prop_assert_eq!(got, base);
    }

    #[test]
    fn sharded_fold_matches_single_pass(
        stream in stream_strategy(64, 4),
        shards in 1usize..8,
    ) {
        let caps = vec![6; 4];
        let single = build_ranked_lists(stream.clone(), &caps, 3).unwrap();
        let chunk = stream.len().div_ceil(shards).max(1);
        let mut acc: Option<Vec<RankedList>> = None;
        for shard in stream.chunks(chunk) {
            let bank = build_ranked_lists(shard.to_vec(), &caps, 3).unwrap();
            acc = Some(match acc {
                None => bank,
                Some(prev) => merge_ranked_banks(&prev, &bank).unwrap(),
            });
        }
        let merged = acc.unwrap_or_else(|| {
            build_ranked_lists(Vec::new(), &caps, 3).unwrap()
        });
        prop_assert_eq!(merged, single);
    }

    #[test]
    fn merge_commutes_on_disjoint_shards(
        stream in stream_strategy(50, 3),
        cut in 0usize..50,
    ) {
        let caps = vec![4; 3];
        let cut = cut.min(stream.len());
        let a = build_ranked_lists(stream[..cut].to_vec(), &caps, 2).unwrap();
        let b = build_ranked_lists(stream[cut..].to_vec(), &caps, 2).unwrap();
        let ab = merge_ranked_banks(&a, &b).unwrap();
        let ba = merge_ranked_banks(&b, &a).unwrap();
        prop_assert_eq!(ab, ba);
    }

    #[test]
    fn selected_lists_always_satisfy_invariants(
        stream in stream_strategy(60, 4),
        k in 1usize..10,
        p in 1usize..=4,
    ) {
        let caps = vec![k; 4];
        for list in build_ranked_lists(stream, &caps, p).unwrap() {
            prop_assert!(list.validate().is_ok());
        }
    }

    #[test]
    fn dhat_size_is_monotone_in_p(stream in stream_strategy(70, 5), k in 1usize..8) {
        let caps = vec![k; 5];
        let mut prev = 0usize;
        for p in 1..=5 {
            let lists = build_ranked_lists(stream.clone(), &caps, p).unwrap();
            let total: usize = lists.iter().map(|l| l.entries.len()).sum();
            prop_assert!(total >= prev, "P={p}: {total} < {prev}");
            prev = total;
        }
    }

    #[test]
    fn top_p_is_a_sorted_prefix_of_the_argsort(
        probs_raw in prop::collection::vec(1e-6f64..1.0, 2..8),
        p_frac in 0.0f64..1.0,
    ) {
        let sum: f64 = probs_raw.iter().sum();
        let probs: Vec<f64> = probs_raw.iter().map(|v| v / sum).collect();
        let l = probs.len();
        let p = 1 + ((l - 1) as f64 * p_frac) as usize;
        let got = top_p_truncate(&probs, p).unwrap();
        prop_assert_eq!(got.len(), p);
        for w in got.windows(2) {
            prop_assert!(w[0].1 > w[1].1 || (w[0].1 == w[1].1 && w[0].0 < w[1].0));
        }
        // Nothing outside the selection beats anything inside it.
        let inside: HashSet<u32> = got.iter().map(|e| e.0).collect();
        let floor = got.last().unwrap().1;
        for (c, &v) in probs.iter().enumerate() {
            if !inside.contains(&(c as u32)) {
                prop_assert!(v <= floor);
            }
        }
    }

    #[test]
    fn softmax_output_is_a_distribution(z in prop::collection::vec(-50.0f64..50.0, 1..10)) {
        let p = softmax(&z).unwrap();
        let sum: f64 = p.iter().sum();
        prop_assert!((sum - 1.0).abs() < 1e-12);
        prop_assert!(p.iter().all(|&v| v >= 0.0 && v <= 1.0));
        // Shift invariance.
        let shifted: Vec<f64> = z.iter().map(|v| v + 13.25).collect();
        let q = softmax(&shifted).unwrap();
        for (a, b) in p.iter().zip(&q) {
            prop_assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn lr_never_increases_after_warmup(
        w in 0u64..20,
        span in 2u64..200,
        r in 1u64..15,
        factor in 0.1f64..0.9,
    ) {
        let t = w + span;
        let s = LrSchedule::new(ScheduleKind::Pretrain, 0.0, 1.0, w, t, r, factor).unwrap();
        let mut prev = f64::INFINITY;
        for step in w..t {
            let lr = s.lr_at(step).unwrap();
            prop_assert!(lr <= prev);
            prev = lr;
        }
    }

    #[test]
    fn allocation_sums_exactly_and_covers_classes(
        weights in prop::collection::vec(0.01f64..100.0, 1..20),
        extra in 0usize..500,
    ) {
        let budget = weights.len() + extra;
        let counts = zipfian_allocate(&weights, budget, false).unwrap();
        prop_assert_eq!(counts.iter().sum::<usize>(), budget);
        prop_assert!(counts.iter().all(|&c| c >= 1));
        let zero_ok = zipfian_allocate(&weights, extra, true).unwrap();
        prop_assert_eq!(zero_ok.iter().sum::<usize>(), extra);
    }

    #[test]
    fn normalize_gives_unit_norm(v in prop::collection::vec(-10.0f64..10.0, 1..16)) {
        prop_assume!(v.iter().any(|&x| x != 0.0));
        let n = l2_normalize(&v).unwrap();
        let norm: f64 = n.iter().map(|x| x * x).sum::<f64>().sqrt();
        prop_assert!((norm - 1.0).abs() < 1e-12);
        let again = l2_normalize(&n).unwrap();
        for (a, b) in n.iter().zip(&again) {
            prop_assert!((a - b).abs() < 1e-12);
        }
    }
}

fn arb_labeled() -> impl Strategy<Value = LabeledDataset> {
    (1usize..6, 1usize..5).prop_flat_map(|(dim, l)| {
        prop::collection::vec(
            (prop::collection::vec(-100.0f32..100.0, dim), 0u32..l as u32),
            0..20,
        )
        .prop_map(move |rows| {
            let examples = rows
                .into_iter()
                .enumerate()
                .map(|(i, (features, label))| LabeledExample {
                    id: ExampleId(i as u64 * 3 + 1),
                    features,
                    label,
                })
                .collect();
            LabeledDataset::new(dim, l, examples).unwrap()
        })
    })
}

fn arb_pool() -> impl Strategy<Value = UnlabeledPool> {
    (1usize..6, 0usize..4).prop_flat_map(|(dim, max_tags)| {
        prop::collection::vec(
            (
                prop::collection::vec(-100.0f32..100.0, dim),
                prop::collection::btree_set(0u32..9, 0..=max_tags),
            ),
            0..20,
        )
        .prop_map(move |rows| {
            let examples = rows
                .into_iter()
                .enumerate()
                .map(|(i, (features, tags))| PoolExample {
                    id: ExampleId(i as u64 * 7 + 2),
                    features,
                    tags: tags.into_iter().collect(),
                })
                .collect();
            UnlabeledPool::new(dim, examples).unwrap()
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn labeled_feature_file_round_trips(ds in arb_labeled()) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("l.sslf");
        write_features(&FeatureContainer::Labeled(ds.clone()), &path).unwrap();
        match read_features(&path).unwrap() {
            FeatureContainer::Labeled(got) => {
                prop_assert_eq!(got.dim(), ds.dim());
                prop_assert_eq!(got.num_classes(), ds.num_classes());
                prop_assert_eq!(got.examples(), ds.examples());
            }
            FeatureContainer::Pool(_) => prop_assert!(false, "wrong container kind"),
        }
    }

    #[test]
    fn pool_feature_file_round_trips(pool in arb_pool()) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("p.sslf");
        write_features(&FeatureContainer::Pool(pool.clone()), &path).unwrap();
        match read_features(&path).unwrap() {
            FeatureContainer::Pool(got) => {
                prop_assert_eq!(got.dim(), pool.dim());
                prop_assert_eq!(got.examples(), pool.examples());
            }
            FeatureContainer::Labeled(_) => prop_assert!(false, "wrong container kind"),
        }
    }

    #[test]
    fn manifest_round_trips(
        rows in prop::collection::vec((0u32..6, prop::option::of(0.0f64..=1.0)), 0..20)
    ) {
        let entries: Vec<ManifestEntry> = rows
            .into_iter()
            .enumerate()
            .map(|(i, (label, score))| ManifestEntry {
                id: ExampleId(i as u64),
                label,
                score,
            })
            .collect();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.jsonl");
        semisup::data::write_manifest(&entries, &path).unwrap();
        let got = semisup::data::read_manifest(&path).unwrap();
        prop_assert_eq!(got, entries);
    }

    #[test]
    fn model_file_round_trips(l in 1usize..5, d in 1usize..6, seed in 0u64..1000) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.sslm");
        let model = SoftmaxClassifier::init(l, d, seed).unwrap();
        model.save(&path).unwrap();
        let got = SoftmaxClassifier::load(&path).unwrap();
        prop_assert_eq!(got, model);
    }
}
