//! Small generated corpora with known structure, used by the test suites and
//! benches when the licensed annotations are not at hand.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::benchmark::{Split, VideoRecord};
use crate::graph::{FrameGraph, ObjectState};
use crate::vocab::{Partition, Vocabulary};

fn state(name: &str, a: &str, s: &str, c: &str) -> ObjectState {
    ObjectState::new(name, &[a], &[s], &[c])
}

/// A random vocabulary-valid frame with up to `max_objects` objects and one
/// to two relations per partition.
pub fn random_frame(rng: &mut impl Rng, frame_id: u32, max_objects: usize, vocab: &Vocabulary) -> FrameGraph {
    let classes: Vec<&str> = vocab.object_classes().collect();
    let n = rng.gen_range(0..=max_objects.min(classes.len()));
    let objects = classes
        .choose_multiple(rng, n)
        .map(|name| {
            let mut o = ObjectState::new(*name, &[], &[], &[]);
            for p in Partition::ALL {
                let pool = vocab.relations(p);
                let k = rng.gen_range(1..=2.min(pool.len()));
                *o.relations_mut(p) = pool.choose_multiple(rng, k).cloned().collect();
            }
            o
        })
        .collect();
    FrameGraph::new(frame_id, objects)
}

/// A random test-split corpus; frame ids increase with random gaps and
/// consecutive frames repeat with probability one half so merging matters.
pub fn random_corpus(seed: u64, videos: usize, max_frames: usize, vocab: &Vocabulary) -> Vec<VideoRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..videos)
        .map(|v| {
            let n = rng.gen_range(3..=max_frames.max(3));
            let mut id = rng.gen_range(0..20u32);
            let mut frames: Vec<FrameGraph> = Vec::with_capacity(n);
            for _ in 0..n {
                let frame = match frames.last() {
                    Some(prev) if rng.gen_bool(0.5) => FrameGraph::new(id, prev.objects.clone()),
                    _ => random_frame(&mut rng, id, 4, vocab),
                };
                frames.push(frame);
                id += rng.gen_range(1..15);
            }
            VideoRecord {
                video_id: format!("rand_{v:03}"),
                split: Split::Test,
                frames,
            }
        })
        .collect()
}

const SCENE_OBJECTS: [&str; 6] = ["table", "chair", "laptop", "book", "sofa/couch", "television"];

/// A continuity corpus of `videos` ten-frame videos. At an observation
/// fraction of 0.5 the last observed frame is position 4 and holds two
/// objects with three relations each.
///
/// Even videos continue with: the same frame; one contact changed; only the
/// first object; the first object plus `floor`; the same frame.
/// Odd videos continue with the same frame except position 7, which shows
/// only `floor` and `doorway`.
pub fn continuity_corpus(videos: usize) -> Vec<VideoRecord> {
    (0..videos)
        .map(|v| {
            let a = SCENE_OBJECTS[v % SCENE_OBJECTS.len()];
            let b = SCENE_OBJECTS[(v + 1) % SCENE_OBJECTS.len()];
            let first = state(a, "looking_at", "in_front_of", "touching");
            let second = state(b, "not_looking_at", "beneath", "not_contacting");
            let last = vec![first.clone(), second.clone()];
            let base = 10 * v as u32;
            let at = |pos: u32, objects: Vec<ObjectState>| FrameGraph::new(base + 3 * pos + 1, objects);
            let mut frames = vec![
                at(0, vec![state(a, "unsure", "in_front_of", "not_contacting")]),
                at(1, vec![state(a, "unsure", "in_front_of", "not_contacting")]),
                at(2, vec![first.clone()]),
                at(3, vec![first.clone(), state(b, "not_looking_at", "behind", "not_contacting")]),
                at(4, last.clone()),
            ];
            let floor = state("floor", "not_looking_at", "beneath", "standing_on");
            if v % 2 == 0 {
                let changed = state(a, "looking_at", "in_front_of", "holding");
                frames.extend([
                    at(5, last.clone()),
                    at(6, vec![changed, second.clone()]),
                    at(7, vec![first.clone()]),
                    at(8, vec![first.clone(), floor]),
                    at(9, last.clone()),
                ]);
            } else {
                let doorway = state("doorway", "looking_at", "in_front_of", "not_contacting");
                frames.extend([
                    at(5, last.clone()),
                    at(6, last.clone()),
                    at(7, vec![floor, doorway]),
                    at(8, last.clone()),
                    at(9, last.clone()),
                ]);
            }
            VideoRecord {
                video_id: format!("cont_{v:02}"),
                split: Split::Test,
                frames,
            }
        })
        .collect()
}

/// Which object-set change a generated video exhibits.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DynamicsKind {
    /// Same objects, at most three triples per future frame.
    Consistent,
    /// Same four objects, twelve triples per future frame.
    ConsistentDense,
    /// The future adds an unseen object next to the observed one.
    NewObject,
    /// One observed object leaves.
    Disappearing,
}

/// Four-frame video (two observed, two future at fraction 0.5).
pub fn dynamics_video(id: &str, kind: DynamicsKind) -> VideoRecord {
    let obj = |n: &str| state(n, "looking_at", "in_front_of", "touching");
    let (observed, future): (Vec<ObjectState>, Vec<ObjectState>) = match kind {
        DynamicsKind::Consistent => (vec![obj("table")], vec![obj("table")]),
        DynamicsKind::ConsistentDense => {
            let four: Vec<_> = ["table", "chair", "book", "laptop"].into_iter().map(obj).collect();
            (four.clone(), four)
        }
        DynamicsKind::NewObject => (vec![obj("table")], vec![obj("table"), obj("floor")]),
        DynamicsKind::Disappearing => (vec![obj("table"), obj("chair")], vec![obj("table")]),
    };
    VideoRecord {
        video_id: id.to_string(),
        split: Split::Test,
        frames: vec![
            FrameGraph::new(1, observed.clone()),
            FrameGraph::new(2, observed),
            FrameGraph::new(3, future.clone()),
            FrameGraph::new(4, future),
        ],
    }
}

/// One hundred videos: 50 consistent, 11 consistent with dense frames,
/// 14 with a new object and 25 with a disappearing object.
pub fn dynamics_corpus() -> Vec<VideoRecord> {
    let plan = [
        (DynamicsKind::Consistent, 50),
        (DynamicsKind::ConsistentDense, 11),
        (DynamicsKind::NewObject, 14),
        (DynamicsKind::Disappearing, 25),
    ];
    let mut out = Vec::with_capacity(100);
    for (kind, count) in plan {
        for _ in 0..count {
            out.push(dynamics_video(&format!("dyn_{:03}", out.len()), kind));
        }
    }
    out
}
