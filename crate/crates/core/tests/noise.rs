//! Noise injection: counts, validity, reproducibility.

use lsa_core::benchmark::{build_benchmark, inject_noise, LsaInstance, NoiseKind, NoiseSpec};
use lsa_core::graph::{FrameGraph, GraphSequence, ObjectState};
use lsa_core::synthetic::random_corpus;
use lsa_core::text::serialize_sequence;
use lsa_core::vocab::Vocabulary;

fn instance(observed: Vec<FrameGraph>) -> LsaInstance {
    let last = observed.last().map_or(0, |f| f.frame_id);
    let future = vec![FrameGraph::new(last + 1, observed.last().unwrap().objects.clone())];
    LsaInstance {
        video_id: "v".into(),
        fraction: 0.5,
        observed: GraphSequence::merge("v", &observed).unwrap(),
        future: GraphSequence::merge("v", &future).unwrap(),
    }
}

fn distinct_frames(n: u32) -> Vec<FrameGraph> {
    let v = Vocabulary::action_genome();
    let objects: Vec<&str> = v.object_classes().collect();
    (0..n)
        .map(|i| {
            let a = objects[i as usize % objects.len()];
            let b = objects[(i as usize + 7) % objects.len()];
            FrameGraph::new(
                10 + 2 * i,
                vec![
                    ObjectState::new(a, &["looking_at"], &["in_front_of"], &["touching"]),
                    ObjectState::new(b, &["unsure"], &["beneath", "behind"], &["holding", "wiping"]),
                ],
            )
        })
        .collect()
}

#[test]
fn perturbs_the_floor_count() {
    let v = Vocabulary::action_genome();
    let inst = instance(distinct_frames(20));
    for kind in [NoiseKind::Drop, NoiseKind::Modify] {
        for (rate, want) in [(0.0, 0), (0.15, 3), (0.3, 6), (0.33, 6), (0.5, 10), (1.0, 20)] {
            let spec = NoiseSpec { kind, range: (0.0, 1.0), rate, seed: 4 };
            let out = inject_noise(&inst, &spec, v).unwrap();
            assert_eq!(out.perturbed.len(), want, "{kind} {rate}");
            if rate == 0.0 {
                assert_eq!(out.instance, inst);
            }
        }
    }
    // 40 frames with a 0.5..1.0 range: 20 in range, 15% of them is 3.
    let inst = instance(distinct_frames(40));
    let spec = NoiseSpec { kind: NoiseKind::Drop, range: (0.5, 1.0), rate: 0.15, seed: 1 };
    let out = inject_noise(&inst, &spec, v).unwrap();
    assert_eq!(out.perturbed.len(), 3);
    assert!(out.perturbed.iter().all(|id| *id >= 10 + 2 * 20));
}

#[test]
fn drop_on_single_object_frame_keeps_header() {
    let v = Vocabulary::action_genome();
    let frames = vec![
        FrameGraph::new(1, vec![ObjectState::new("table", &["looking_at"], &["in_front_of"], &["touching"])]),
        FrameGraph::new(2, vec![ObjectState::new("chair", &["unsure"], &["behind"], &["not_contacting"])]),
    ];
    let inst = instance(frames);
    let spec = NoiseSpec { kind: NoiseKind::Drop, range: (0.0, 1.0), rate: 1.0, seed: 0 };
    let out = inject_noise(&inst, &spec, v).unwrap();
    let expanded = out.instance.observed.expand();
    assert_eq!(expanded.iter().map(|f| f.frame_id).collect::<Vec<_>>(), [1, 2]);
    assert!(expanded.iter().all(|f| f.objects.is_empty()));
    assert_eq!(serialize_sequence(&out.instance.observed, v).unwrap(), "Frame 1..2:");
}

#[test]
fn empty_range_warns() {
    let v = Vocabulary::action_genome();
    let inst = instance(distinct_frames(5));
    let spec = NoiseSpec { kind: NoiseKind::Modify, range: (0.5, 0.5), rate: 1.0, seed: 0 };
    let out = inject_noise(&inst, &spec, v).unwrap();
    assert!(out.warning.is_some());
    assert_eq!(out.instance, inst);
    let bad = NoiseSpec { rate: 1.5, ..spec };
    assert!(inject_noise(&inst, &bad, v).is_err());
}

#[test]
fn fuzzed_frames_stay_valid() {
    let v = Vocabulary::action_genome();
    let corpus = random_corpus(17, 800, 30, v);
    let instances = build_benchmark(&corpus, &[0.9], v).unwrap();
    let mut frames = 0usize;
    for (i, inst) in instances.iter().enumerate() {
        for kind in [NoiseKind::Drop, NoiseKind::Modify] {
            let spec = NoiseSpec { kind, range: (0.0, 1.0), rate: 1.0, seed: i as u64 };
            let out = inject_noise(inst, &spec, v).unwrap();
            out.instance.observed.validate(v).unwrap();
            assert_eq!(out.instance.observed.frame_ids(), inst.observed.frame_ids());
            assert_eq!(out.instance.future, inst.future);
            frames += out.perturbed.len();
        }
    }
    assert!(frames >= 10_000, "only {frames} frames fuzzed");
}

#[test]
fn seeds_reproduce_and_differ() {
    let v = Vocabulary::action_genome();
    let inst = instance(distinct_frames(30));
    let spec = NoiseSpec { kind: NoiseKind::Modify, range: (0.2, 0.9), rate: 0.3, seed: 42 };
    let a = inject_noise(&inst, &spec, v).unwrap();
    let b = inject_noise(&inst, &spec, v).unwrap();
    assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    let differing = (0..20)
        .filter(|s| inject_noise(&inst, &NoiseSpec { seed: 100 + s, ..spec }, v).unwrap().perturbed != a.perturbed)
        .count();
    assert!(differing >= 18, "{differing}");
}
