//! Inputs shared by the criterion benches.

use lsa_core::benchmark::{build_benchmark, oracle_predictions, LsaInstance};
use lsa_core::graph::FrameGraph;
use lsa_core::synthetic::random_corpus;
use lsa_core::vocab::Vocabulary;

/// Frames of long random videos, for merge and serialization.
pub fn long_videos(videos: usize, frames: usize) -> Vec<Vec<FrameGraph>> {
    random_corpus(7, videos, frames, Vocabulary::action_genome())
        .into_iter()
        .map(|r| r.frames)
        .collect()
}

/// Instances at one fraction with continuous-object predictions.
pub fn scored_instances(videos: usize) -> (Vec<LsaInstance>, Vec<Vec<FrameGraph>>, Vec<Vec<FrameGraph>>) {
    let v = Vocabulary::action_genome();
    let instances = build_benchmark(&random_corpus(11, videos, 40, v), &[0.5], v).expect("random corpus builds");
    let preds = instances.iter().map(oracle_predictions).collect();
    let truths = instances.iter().map(|i| i.future.expand()).collect();
    (instances, preds, truths)
}
