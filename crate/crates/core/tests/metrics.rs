//! Evaluation metrics and the oracle ceiling against brute-force oracles.

mod common;

use std::collections::{BTreeMap, BTreeSet};

use common::{brute_ceiling, brute_mean_recall, brute_recall, materialize, random_case};
use lsa_core::benchmark::{build_benchmark, compute_object_dynamics, oracle_ceiling, LsaInstance};
use lsa_core::eval::{
    corpus_recall_at_k, mean_recall_at_k, object_set_metrics, recall_at_k, relation_accuracy, Aggregation,
    ObjectSetPair, VideoPair,
};
use lsa_core::graph::{FrameGraph, ObjectState};
use lsa_core::synthetic::{dynamics_corpus, random_corpus};
use lsa_core::vocab::Vocabulary;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn pairs(m: &[(Vec<FrameGraph>, Vec<FrameGraph>)]) -> Vec<VideoPair<'_>> {
    m.iter().map(|(p, t)| VideoPair { prediction: p, truth: t }).collect()
}

#[test]
fn recall_matches_brute_force() {
    let v = Vocabulary::action_genome();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for case in 0..1000 {
        let videos = random_case(&mut rng, v);
        let m = materialize(&videos, v);
        let vp = pairs(&m);
        for k in [1, 2, 3, 5, 10] {
            assert_eq!(corpus_recall_at_k(&vp, k, Aggregation::Macro), brute_recall(&videos, k, None, v), "case {case} k {k}");
            assert_eq!(mean_recall_at_k(&vp, k, Aggregation::Macro), brute_mean_recall(&videos, k, v), "case {case} k {k}");
        }
    }
}

#[test]
fn recall_properties() {
    let v = Vocabulary::action_genome();
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for _ in 0..500 {
        let videos = random_case(&mut rng, v);
        let m = materialize(&videos, v);
        let vp = pairs(&m);
        let mut prev = 0.0;
        for k in 1..=12 {
            let Some(r) = corpus_recall_at_k(&vp, k, Aggregation::Macro) else { break };
            assert!((0.0..=1.0).contains(&r));
            assert!(r >= prev, "R@K decreased at {k}");
            prev = r;
            let mr = mean_recall_at_k(&vp, k, Aggregation::Macro).unwrap();
            assert!((0.0..=1.0).contains(&mr));
            let classes: BTreeSet<&str> = videos.iter().flat_map(|x| x.truth.iter().flatten().map(|t| t.1.as_str())).collect();
            if classes.len() == 1 {
                assert_eq!(mr, r);
            }
        }
    }
}

fn st(name: &str, a: &str, s: &str, c: &str) -> ObjectState {
    ObjectState::new(name, &[a], &[s], &[c])
}

#[test]
fn recall_hand_cases() {
    let gt = vec![FrameGraph::new(1, vec![st("table", "looking_at", "in_front_of", "touching")])];
    let two = vec![FrameGraph::new(1, vec![st("table", "looking_at", "behind", "touching")])];
    assert_eq!(recall_at_k(&two, &gt, 10), Some(2.0 / 3.0));
    assert_eq!(recall_at_k(&gt, &gt, 10), Some(1.0));
    let names = ["table", "chair", "book", "laptop"];
    let dense = vec![FrameGraph::new(1, names.iter().map(|n| st(n, "looking_at", "in_front_of", "touching")).collect())];
    assert_eq!(recall_at_k(&dense, &dense, 10), Some(10.0 / 12.0));
    // Empty ground truth frames are skipped; nothing scorable gives None.
    assert_eq!(recall_at_k(&gt, &[FrameGraph::empty(1)], 10), None);
}

#[test]
fn object_set_categories() {
    let truth = vec![
        FrameGraph::new(1, vec![st("broom", "looking_at", "in_front_of", "holding")]),
        FrameGraph::new(2, vec![st("broom", "looking_at", "in_front_of", "holding")]),
        FrameGraph::new(3, vec![st("broom", "looking_at", "in_front_of", "holding")]),
        FrameGraph::new(
            4,
            vec![st("broom", "looking_at", "in_front_of", "holding"), st("floor", "unsure", "beneath", "standing_on")],
        ),
        FrameGraph::new(
            5,
            vec![st("broom", "looking_at", "in_front_of", "holding"), st("floor", "unsure", "beneath", "standing_on")],
        ),
    ];
    let pred: BTreeMap<u32, Vec<String>> = [
        (1, vec!["floor", "broom", "doorway"]),
        (2, vec!["broom"]),
        (3, vec!["table"]),
        (4, vec!["broom"]),
        (5, vec!["broom", "doorway"]),
    ]
    .into_iter()
    .map(|(f, v)| (f, v.into_iter().map(String::from).collect()))
    .collect();
    let m = object_set_metrics(&[ObjectSetPair { prediction: &pred, truth: &truth }]);
    assert_eq!(m.frames, 5);
    assert_eq!((m.contain, m.strict, m.no_overlap, m.subset, m.partial_overlap), (0.2, 0.2, 0.2, 0.2, 0.2));
    assert_eq!(m.partial_acc, 0.8);
    assert!((m.strict + m.contain + m.subset + m.partial_overlap + m.no_overlap - 1.0).abs() < 1e-12);
}

#[test]
fn relation_accuracy_hand_count() {
    // Five (frame, object) pairs; correct partitions counted by hand:
    // attention 4/5, spatial 3/5, contact 2/5.
    let truth = vec![
        FrameGraph::new(1, vec![st("cup/glass/bottle", "looking_at", "in_front_of", "holding"), st("table", "unsure", "behind", "touching")]),
        FrameGraph::new(2, vec![st("cup/glass/bottle", "looking_at", "in_front_of", "holding"), st("table", "unsure", "behind", "touching")]),
        FrameGraph::new(3, vec![st("cup/glass/bottle", "looking_at", "in_front_of", "holding")]),
    ];
    let pred = vec![
        FrameGraph::new(1, vec![st("cup/glass/bottle", "looking_at", "in_front_of", "holding"), st("table", "unsure", "behind", "not_contacting")]),
        FrameGraph::new(2, vec![st("cup/glass/bottle", "looking_at", "beneath", "touching"), st("table", "unsure", "behind", "holding")]),
        FrameGraph::new(3, vec![st("cup/glass/bottle", "not_looking_at", "above", "holding"), st("floor", "unsure", "beneath", "standing_on")]),
    ];
    let r = relation_accuracy(&[VideoPair { prediction: &pred, truth: &truth }]);
    assert_eq!(r.pairs, 5);
    assert_eq!(r.attention, Some(0.8));
    assert_eq!(r.spatial, Some(0.6));
    assert_eq!(r.contact, Some(0.4));
    assert!((r.overall.unwrap() - 0.6).abs() < 1e-12);
}

/// Oracle predictions built here from the ground truth, without the library helper.
fn explicit_oracle(inst: &LsaInstance) -> Vec<FrameGraph> {
    let last: BTreeSet<String> = inst.observed.last_frame().unwrap().object_names().map(String::from).collect();
    inst.future
        .expand()
        .into_iter()
        .map(|f| FrameGraph::new(f.frame_id, f.objects.into_iter().filter(|o| last.contains(&o.object)).collect()))
        .collect()
}

#[test]
fn ceiling_equals_recall_of_oracle_predictions() {
    let v = Vocabulary::action_genome();
    for seed in 0..40 {
        let corpus = random_corpus(seed, 12, 10, v);
        let instances = build_benchmark(&corpus, &[0.3, 0.5, 0.7, 0.9], v).unwrap();
        for f in [0.3, 0.5, 0.7, 0.9] {
            let group: Vec<&LsaInstance> = instances.iter().filter(|i| i.fraction == f).collect();
            let owned: Vec<LsaInstance> = group.iter().map(|i| (*i).clone()).collect();
            let preds: Vec<Vec<FrameGraph>> = group.iter().map(|i| explicit_oracle(i)).collect();
            let truths: Vec<Vec<FrameGraph>> = group.iter().map(|i| i.future.expand()).collect();
            let vp: Vec<VideoPair<'_>> = preds.iter().zip(&truths).map(|(p, t)| VideoPair { prediction: p, truth: t }).collect();
            let lasts: Vec<BTreeSet<String>> = group
                .iter()
                .map(|i| i.observed.last_frame().unwrap().object_names().map(String::from).collect())
                .collect();
            for k in [1, 3, 10, 20, 50] {
                let c = oracle_ceiling(&owned, k, Aggregation::Macro);
                assert_eq!(c, corpus_recall_at_k(&vp, k, Aggregation::Macro), "seed {seed} f {f} k {k}");
                assert_eq!(c, brute_ceiling(&lasts, &truths, k), "seed {seed} f {f} k {k}");
                assert_eq!(
                    oracle_ceiling(&owned, k, Aggregation::Micro),
                    corpus_recall_at_k(&vp, k, Aggregation::Micro)
                );
            }
        }
    }
}

#[test]
fn composition_corpus_ceiling() {
    let v = Vocabulary::action_genome();
    let instances = build_benchmark(&dynamics_corpus(), &[0.5], v).unwrap();
    assert_eq!(instances.len(), 100);
    let d = compute_object_dynamics(&instances).unwrap();
    assert_eq!((d.consistent_rate, d.new_object_rate, d.disappeared_rate), (0.61, 0.14, 0.25));
    assert!((d.changed_rate - 0.39).abs() < 1e-12);
    // 50 videos at 1, 11 dense at 10/12, 14 with a new object at 3/6, 25 at 1.
    let c10 = oracle_ceiling(&instances, 10, Aggregation::Macro).unwrap();
    assert!((c10 - 547.0 / 600.0).abs() < 1e-9, "{c10}");
    assert!(c10 < 1.0);
    let c20 = oracle_ceiling(&instances, 20, Aggregation::Macro).unwrap();
    assert!((c20 - 0.93).abs() < 1e-9, "{c20}");
}

#[test]
fn dynamics_needs_one_fraction() {
    let v = Vocabulary::action_genome();
    let instances = build_benchmark(&dynamics_corpus(), &[0.5, 0.7], v).unwrap();
    assert!(compute_object_dynamics(&instances).is_err());
}
