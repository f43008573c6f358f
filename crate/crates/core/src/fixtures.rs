//! The bundled broom-sweeping video and the stored model outputs for it.
//!
//! The corpus holds 36 annotated frames; at an observation fraction of 0.9
//! the last three (486, 499, 518) are the future. Stored outputs exist for
//! four models and back a [`FixtureBackend`] keyed by prompt hash.

use std::collections::BTreeMap;

use serde::Deserialize;

use crate::benchmark::{build_benchmark, load_corpus, LsaInstance, VideoRecord};
use crate::graph::FrameGraph;
use crate::llm::FixtureBackend;
use crate::parse_llm::{parse_goa_response, ParseOptions};
use crate::prompts::{build_goa_prompt, build_oora_prompt};
use crate::text::parse_frames;
use crate::vocab::Vocabulary;

pub const BROOM_SWEEP_CORPUS: &str = include_str!("../data/broom_sweep.json");
pub const BROOM_SWEEP_RESPONSES: &str = include_str!("../data/broom_sweep_responses.json");

pub const BROOM_SWEEP_ID: &str = "broom_sweep";
pub const BROOM_SWEEP_FRACTION: f64 = 0.9;

/// Models with stored outputs, in the order they are usually reported.
pub const FIXTURE_MODELS: [&str; 4] = ["gpt-4o-mini", "gpt-4o", "deepseek-v3", "finetuned"];

#[derive(Debug, Clone, Deserialize)]
pub struct ModelResponses {
    pub goa: String,
    pub oora: BTreeMap<String, String>,
}

#[derive(Deserialize)]
struct ResponseFile {
    ground_truth: String,
    #[serde(flatten)]
    models: BTreeMap<String, serde_json::Value>,
}

fn responses_file() -> ResponseFile {
    serde_json::from_str(BROOM_SWEEP_RESPONSES).expect("bundled responses are valid JSON")
}

pub fn broom_sweep_corpus() -> Vec<VideoRecord> {
    load_corpus(BROOM_SWEEP_CORPUS).expect("bundled corpus is valid")
}

pub fn broom_sweep_instance() -> LsaInstance {
    build_benchmark(&broom_sweep_corpus(), &[BROOM_SWEEP_FRACTION], Vocabulary::action_genome())
        .expect("bundled corpus builds")
        .remove(0)
}

/// Stored outputs of one model, if it is one of [`FIXTURE_MODELS`].
pub fn model_responses(model: &str) -> Option<ModelResponses> {
    let value = responses_file().models.remove(model)?;
    serde_json::from_value(value).ok()
}

/// The stored ground-truth text of the future frames.
pub fn ground_truth_text() -> String {
    responses_file().ground_truth
}

pub fn ground_truth() -> Vec<FrameGraph> {
    parse_frames(&ground_truth_text(), Vocabulary::action_genome()).expect("bundled ground truth parses")
}

/// Registers the stored outputs of `model` under the prompts the pipeline
/// would render for every bundled-video instance in `instances`, in both
/// modes and both shot settings.
pub fn fixture_backend(model: &str, instances: &[LsaInstance], vocab: &Vocabulary) -> Option<FixtureBackend> {
    let responses = model_responses(model)?;
    let mut backend = FixtureBackend::new(model);
    for inst in instances.iter().filter(|i| i.video_id == BROOM_SWEEP_ID) {
        let future = inst.future.frame_ids();
        let last_objects: Vec<String> = inst
            .observed
            .last_frame()
            .map(|f| f.object_names().map(str::to_string).collect())
            .unwrap_or_default();
        for one_shot in [false, true] {
            let Ok(goa) = build_goa_prompt(&inst.observed, &future, one_shot, vocab) else { continue };
            backend.insert(&goa.text, responses.goa.clone());
            let mut schedule: BTreeMap<String, Vec<u32>> = BTreeMap::new();
            if let Ok(parsed) = parse_goa_response(&responses.goa, &future, vocab, ParseOptions::default()) {
                for (frame, objects) in parsed.frames {
                    for o in objects {
                        schedule.entry(o).or_default().push(frame);
                    }
                }
            }
            let mut requests: Vec<(String, Vec<u32>)> = schedule.into_iter().collect();
            requests.extend(last_objects.iter().map(|o| (o.clone(), future.clone())));
            for (object, frames) in requests {
                let Some(text) = responses.oora.get(&object) else { continue };
                if let Ok(p) = build_oora_prompt(&inst.observed, &object, &frames, one_shot, vocab) {
                    backend.insert(&p.text, text.clone());
                }
            }
        }
    }
    Some(backend)
}
