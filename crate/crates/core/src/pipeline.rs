//! Two-stage anticipation (object set, then per-object relations), the
//! continuous-object fallback, integration into predicted frames, and the
//! detector-output ingestion path.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::benchmark::LsaInstance;
use crate::error::{Error, GraphError, LlmError, PromptError};
use crate::graph::{BBox, FrameGraph, GraphSequence, ObjectState};
use crate::llm::{Client, Completion};
use crate::parse_llm::{parse_goa_response, parse_oora_response, Diagnostic, ParseOptions};
use crate::prompts::{build_goa_prompt, build_oora_prompt, truncate_to_budget, CharHeuristic, PromptBundle};
use crate::vocab::{Partition, Vocabulary};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PipelineMode {
    /// Predict the object set first, then relations for each predicted object.
    #[default]
    WithGoa,
    /// Carry the last observed frame's objects into every future frame.
    WithoutGoa,
}

impl std::str::FromStr for PipelineMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "with_goa" => Ok(PipelineMode::WithGoa),
            "without_goa" => Ok(PipelineMode::WithoutGoa),
            other => Err(format!("unknown mode `{other}` (expected with_goa or without_goa)")),
        }
    }
}

impl std::fmt::Display for PipelineMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            PipelineMode::WithGoa => "with_goa",
            PipelineMode::WithoutGoa => "without_goa",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AnticipateConfig {
    pub one_shot: bool,
    pub parse: ParseOptions,
    /// Token budget per prompt; oldest observed segments are dropped to fit.
    pub prompt_budget: Option<usize>,
    /// Concurrent relation requests per video.
    pub parallelism: usize,
    /// Permutes the order relation requests are dispatched in.
    pub shuffle_seed: Option<u64>,
}

impl Default for AnticipateConfig {
    fn default() -> Self {
        AnticipateConfig {
            one_shot: false,
            parse: ParseOptions::default(),
            prompt_budget: None,
            parallelism: 4,
            shuffle_seed: None,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub backend: String,
    pub model: String,
    pub temperature: f64,
    pub top_p: f64,
    pub one_shot: bool,
    /// GOA prompt hash (when issued), then relation prompts in target order.
    pub prompt_hashes: Vec<String>,
    pub requests: usize,
    pub latency_ms: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PipelineDiagnostics {
    /// GOA failed completely and the run fell back to the last observed objects.
    pub goa_fallback: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub goa_error: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub goa: Vec<Diagnostic>,
    /// Objects relations were requested for.
    pub oora_targets: usize,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub oora: BTreeMap<String, Vec<Diagnostic>>,
    /// Objects whose relation request failed or produced nothing parseable.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub oora_failures: BTreeMap<String, String>,
    /// Predicted objects never seen in the observed frames, left out.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub dropped_new_objects: Vec<String>,
    /// (frame, object) pairs filled with the last observed state.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub fallback_states: Vec<(u32, String)>,
    /// (frame, object) pairs dropped because no state could be produced.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub dropped_states: Vec<(u32, String)>,
}

/// Predicted future frames of one instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub video_id: String,
    pub fraction: f64,
    pub mode: PipelineMode,
    pub future: Vec<FrameGraph>,
    /// Per-frame object lists from the GOA stage, when it ran.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub goa_objects: Option<BTreeMap<u32, Vec<String>>>,
    pub provenance: Provenance,
    pub diagnostics: PipelineDiagnostics,
}

impl PredictionRecord {
    /// Predicted object list per frame: the GOA output when available,
    /// otherwise the objects of the emitted frames.
    pub fn object_sets(&self) -> BTreeMap<u32, Vec<String>> {
        match &self.goa_objects {
            Some(g) => g.clone(),
            None => self
                .future
                .iter()
                .map(|f| (f.frame_id, f.object_names().map(str::to_string).collect()))
                .collect(),
        }
    }
}

fn is_fatal(e: &LlmError) -> bool {
    matches!(e, LlmError::Auth { .. })
}

struct Requested {
    object: String,
    frames: Vec<u32>,
}

enum OoraOutcome {
    Parsed(BTreeMap<u32, ObjectState>, Vec<Diagnostic>),
    Failed(String),
}

fn render(bundle: Result<PromptBundle, PromptError>, cfg: &AnticipateConfig) -> Result<PromptBundle, PromptError> {
    let bundle = bundle?;
    match cfg.prompt_budget {
        Some(b) => truncate_to_budget(&bundle, b, &CharHeuristic),
        None => Ok(bundle),
    }
}

/// Runs the pipeline on one instance.
///
/// Only authentication failures abort; every other client or parse failure
/// is recorded and handled by falling back.
pub fn anticipate(
    instance: &LsaInstance,
    mode: PipelineMode,
    client: &Client,
    cfg: &AnticipateConfig,
    vocab: &Vocabulary,
) -> Result<PredictionRecord, Error> {
    let observed = &instance.observed;
    let last = observed.last_frame().ok_or(PromptError::EmptyObserved)?;
    let future_ids = instance.future.frame_ids();
    if future_ids.is_empty() {
        return Err(PromptError::NoFutureFrames.into());
    }
    let decode = client.config();
    let mut provenance = Provenance {
        backend: client.backend_name(),
        model: decode.model.clone(),
        temperature: decode.temperature,
        top_p: decode.top_p,
        one_shot: cfg.one_shot,
        ..Provenance::default()
    };
    let mut diag = PipelineDiagnostics::default();
    let account = |p: &mut Provenance, c: &Completion| {
        p.requests += 1;
        p.latency_ms += c.latency_ms;
    };

    // Stage 1: which objects appear in which frame.
    let mut goa_objects: Option<BTreeMap<u32, Vec<String>>> = None;
    if mode == PipelineMode::WithGoa {
        let bundle = render(build_goa_prompt(observed, &future_ids, cfg.one_shot, vocab), cfg)?;
        provenance.prompt_hashes.push(bundle.hash());
        match client.complete(&bundle.text) {
            Ok(c) => {
                account(&mut provenance, &c);
                match parse_goa_response(&c.text, &future_ids, vocab, cfg.parse) {
                    Ok(p) => {
                        diag.goa = p.diagnostics;
                        goa_objects = Some(p.frames);
                    }
                    Err(e) => diag.goa_error = Some(e.to_string()),
                }
            }
            Err(e) if is_fatal(&e) => return Err(e.into()),
            Err(e) => {
                provenance.requests += 1;
                diag.goa_error = Some(e.to_string());
            }
        }
        diag.goa_fallback = goa_objects.is_none();
    }

    // Per-frame object order and the relation requests it implies.
    let layout: BTreeMap<u32, Vec<String>> = match &goa_objects {
        Some(g) => g.clone(),
        None => {
            let names: Vec<String> = last.object_names().map(str::to_string).collect();
            future_ids.iter().map(|&f| (f, names.clone())).collect()
        }
    };
    let mut requests: Vec<Requested> = Vec::new();
    for (&frame, objects) in &layout {
        for o in objects {
            match requests.iter_mut().find(|r| &r.object == o) {
                Some(r) => r.frames.push(frame),
                None => requests.push(Requested {
                    object: o.clone(),
                    frames: vec![frame],
                }),
            }
        }
    }
    requests.retain(|r| {
        let seen = observed.mentions(&r.object);
        if !seen {
            diag.dropped_new_objects.push(r.object.clone());
        }
        seen
    });
    diag.oora_targets = requests.len();

    // Stage 2: relations per object, dispatched concurrently.
    let mut bundles = Vec::with_capacity(requests.len());
    for r in &requests {
        let b = render(build_oora_prompt(observed, &r.object, &r.frames, cfg.one_shot, vocab), cfg)?;
        provenance.prompt_hashes.push(b.hash());
        bundles.push(b);
    }
    let mut order: Vec<usize> = (0..requests.len()).collect();
    if let Some(seed) = cfg.shuffle_seed {
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    }
    let results: Mutex<BTreeMap<usize, Result<Completion, LlmError>>> = Mutex::new(BTreeMap::new());
    let next = AtomicUsize::new(0);
    let workers = cfg.parallelism.clamp(1, requests.len().max(1));
    std::thread::scope(|s| {
        for _ in 0..workers {
            s.spawn(|| loop {
                let slot = next.fetch_add(1, Ordering::SeqCst);
                let Some(&idx) = order.get(slot) else { break };
                let out = client.complete(&bundles[idx].text);
                results.lock().unwrap_or_else(|e| e.into_inner()).insert(idx, out);
            });
        }
    });
    let results = results.into_inner().unwrap_or_else(|e| e.into_inner());

    let mut outcomes: BTreeMap<String, OoraOutcome> = BTreeMap::new();
    for (idx, r) in requests.iter().enumerate() {
        let outcome = match &results[&idx] {
            Ok(c) => {
                account(&mut provenance, c);
                match parse_oora_response(&c.text, &r.object, &r.frames, vocab, cfg.parse) {
                    Ok(p) => OoraOutcome::Parsed(p.frames, p.diagnostics),
                    Err(e) => OoraOutcome::Failed(e.to_string()),
                }
            }
            Err(e) if is_fatal(e) => return Err(e.clone().into()),
            Err(e) => {
                provenance.requests += 1;
                OoraOutcome::Failed(e.to_string())
            }
        };
        outcomes.insert(r.object.clone(), outcome);
    }

    // Integration, in frame order then per-frame object order.
    let mut future = Vec::with_capacity(future_ids.len());
    for &frame in &future_ids {
        let mut objects = Vec::new();
        for name in layout.get(&frame).into_iter().flatten() {
            let Some(outcome) = outcomes.get(name) else { continue };
            let state = match outcome {
                OoraOutcome::Parsed(frames, _) => frames.get(&frame).cloned(),
                OoraOutcome::Failed(_) => None,
            };
            match state.or_else(|| fallback_state(observed, name)) {
                Some(s) => {
                    if !matches!(outcome, OoraOutcome::Parsed(f, _) if f.contains_key(&frame)) {
                        diag.fallback_states.push((frame, name.clone()));
                    }
                    objects.push(s);
                }
                None => diag.dropped_states.push((frame, name.clone())),
            }
        }
        future.push(FrameGraph::new(frame, objects));
    }
    for (name, outcome) in outcomes {
        match outcome {
            OoraOutcome::Parsed(_, d) if !d.is_empty() => {
                diag.oora.insert(name, d);
            }
            OoraOutcome::Failed(e) => {
                diag.oora_failures.insert(name, e);
            }
            _ => {}
        }
    }

    Ok(PredictionRecord {
        video_id: instance.video_id.clone(),
        fraction: instance.fraction,
        mode,
        future,
        goa_objects,
        provenance,
        diagnostics: diag,
    })
}

fn fallback_state(observed: &GraphSequence, object: &str) -> Option<ObjectState> {
    observed.last_state_of(object).map(|mut s| {
        s.bbox = None;
        s
    })
}

/// Runs [`anticipate`] over many instances with up to `parallelism` videos in
/// flight. Output order follows input order.
pub fn anticipate_all(
    instances: &[LsaInstance],
    mode: PipelineMode,
    client: &Client,
    cfg: &AnticipateConfig,
    vocab: &Vocabulary,
    parallelism: usize,
) -> Result<Vec<PredictionRecord>, Error> {
    let next = AtomicUsize::new(0);
    let slots: Vec<Mutex<Option<Result<PredictionRecord, Error>>>> =
        instances.iter().map(|_| Mutex::new(None)).collect();
    let workers = parallelism.clamp(1, instances.len().max(1));
    std::thread::scope(|s| {
        for _ in 0..workers {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                let Some(inst) = instances.get(i) else { break };
                let out = anticipate(inst, mode, client, cfg, vocab);
                if let Err(e) = &out {
                    log::error!("video `{}`: {e}", inst.video_id);
                }
                *slots[i].lock().unwrap_or_else(|e| e.into_inner()) = Some(out);
            });
        }
    });
    slots
        .into_iter()
        .map(|m| m.into_inner().unwrap_or_else(|e| e.into_inner()).expect("every slot is filled"))
        .collect()
}

pub fn write_records(records: &[PredictionRecord]) -> Result<String, serde_json::Error> {
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(r)?);
        out.push('\n');
    }
    Ok(out)
}

pub fn read_records(text: &str) -> Result<Vec<PredictionRecord>, Error> {
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| serde_json::from_str(l).map_err(Error::from))
        .collect()
}

/// Default binarization threshold for detector probabilities (strict `>`).
pub const SGG_THRESHOLD: f64 = 0.6;

/// Relation evidence for one detected object.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RelationEvidence {
    /// Hard labels, taken as given.
    Labels {
        #[serde(default)]
        attention: Vec<String>,
        #[serde(default)]
        spatial: Vec<String>,
        #[serde(default)]
        contact: Vec<String>,
    },
    /// Per-relation probabilities.
    Probabilities(BTreeMap<String, f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bbox: Option<BBox>,
    pub relations: RelationEvidence,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionFrame {
    pub frame_id: u32,
    #[serde(default)]
    pub detections: Vec<Detection>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IngestOutcome {
    pub sequence: GraphSequence,
    /// Frames with an object whose relation set came out empty in some partition.
    pub flagged_frames: Vec<u32>,
}

/// Converts detector output into a merged graph sequence.
pub fn ingest_sgg_text(
    video_id: &str,
    frames: &[DetectionFrame],
    threshold: f64,
    vocab: &Vocabulary,
) -> Result<IngestOutcome, GraphError> {
    let mut graphs = Vec::with_capacity(frames.len());
    let mut flagged = BTreeSet::new();
    for frame in frames {
        let mut objects = Vec::with_capacity(frame.detections.len());
        for det in &frame.detections {
            let mut state = ObjectState::new(det.name.clone(), &[], &[], &[]);
            state.bbox = det.bbox;
            match &det.relations {
                RelationEvidence::Labels { attention, spatial, contact } => {
                    state.attention = attention.clone();
                    state.spatial = spatial.clone();
                    state.contact = contact.clone();
                }
                RelationEvidence::Probabilities(probs) => {
                    for (rel, &p) in probs {
                        let partition = vocab
                            .partition_of(rel)
                            .ok_or_else(|| GraphError::UnknownRelation(rel.clone()))?;
                        if p > threshold {
                            state.relations_mut(partition).push(rel.clone());
                        }
                    }
                    for p in Partition::ALL {
                        let sorted = vocab.canonical_order(state.relations(p));
                        *state.relations_mut(p) = sorted;
                    }
                }
            }
            if state.has_empty_partition() {
                flagged.insert(frame.frame_id);
            }
            objects.push(state);
        }
        let graph = FrameGraph::new(frame.frame_id, objects);
        graph.validate(vocab)?;
        graphs.push(graph);
    }
    Ok(IngestOutcome {
        sequence: GraphSequence::merge(video_id, &graphs)?,
        flagged_frames: flagged.into_iter().collect(),
    })
}

/// Gives each predicted object the box it had in the nearest preceding
/// observed frame that shows it with a box; otherwise no box.
pub fn map_back_to_boxes(record: &PredictionRecord, observed: &GraphSequence) -> PredictionRecord {
    let frames = observed.expand();
    let mut out = record.clone();
    for pred in &mut out.future {
        for obj in &mut pred.objects {
            obj.bbox = frames
                .iter()
                .rev()
                .filter(|f| f.frame_id < pred.frame_id)
                .find_map(|f| f.object(&obj.object).and_then(|o| o.bbox));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::llm::{CompletionBackend, DecodeConfig, EchoLastFrame};
    use std::sync::Arc;

    fn vocab() -> &'static Vocabulary {
        Vocabulary::action_genome()
    }

    fn state(name: &str, c: &str) -> ObjectState {
        ObjectState::new(name, &["looking_at"], &["in_front_of"], &[c])
    }

    fn instance() -> LsaInstance {
        let obs = vec![
            FrameGraph::new(1, vec![state("table", "touching"), state("chair", "sitting_on")]),
            FrameGraph::new(2, vec![state("table", "holding"), state("chair", "sitting_on")]),
        ];
        let fut = vec![
            FrameGraph::new(5, vec![state("table", "holding")]),
            FrameGraph::new(9, vec![state("table", "touching"), state("floor", "standing_on")]),
        ];
        LsaInstance {
            video_id: "v".into(),
            fraction: 0.5,
            observed: GraphSequence::merge("v", &obs).unwrap(),
            future: GraphSequence::merge("v", &fut).unwrap(),
        }
    }

    fn echo() -> Client {
        Client::new(Arc::new(EchoLastFrame::new(vocab().clone())), DecodeConfig::default(), 4)
    }

    #[test]
    fn echo_without_goa_repeats_last_frame() {
        let inst = instance();
        let rec = anticipate(&inst, PipelineMode::WithoutGoa, &echo(), &AnticipateConfig::default(), vocab()).unwrap();
        let last = inst.observed.last_frame().unwrap();
        assert_eq!(rec.future.len(), 2);
        for (f, id) in rec.future.iter().zip([5, 9]) {
            assert_eq!(f.frame_id, id);
            assert!(f.same_content(&last));
        }
        assert!(rec.goa_objects.is_none());
        assert_eq!(rec.provenance.requests, 2);
    }

    #[test]
    fn echo_with_goa_matches_without() {
        let inst = instance();
        let cfg = AnticipateConfig::default();
        let a = anticipate(&inst, PipelineMode::WithGoa, &echo(), &cfg, vocab()).unwrap();
        let b = anticipate(&inst, PipelineMode::WithoutGoa, &echo(), &cfg, vocab()).unwrap();
        assert_eq!(a.future, b.future);
        assert_eq!(a.provenance.requests, 3);
    }

    struct Scripted {
        goa: String,
    }

    impl CompletionBackend for Scripted {
        fn name(&self) -> String {
            "scripted".into()
        }
        fn complete(&self, prompt: &str, cfg: &DecodeConfig) -> Result<Completion, LlmError> {
            if prompt.contains("Observed segment for object [") {
                EchoLastFrame::new(Vocabulary::default()).complete(prompt, cfg)
            } else {
                Ok(Completion { text: self.goa.clone(), usage: None, latency_ms: 1, attempts: 1 })
            }
        }
    }

    fn scripted(goa: &str) -> Client {
        Client::new(Arc::new(Scripted { goa: goa.into() }), DecodeConfig::default(), 2)
    }

    #[test]
    fn never_observed_object_is_dropped() {
        let c = scripted("Frame 5: table\nFrame 9: table, refrigerator");
        let rec = anticipate(&instance(), PipelineMode::WithGoa, &c, &AnticipateConfig::default(), vocab()).unwrap();
        assert_eq!(rec.diagnostics.dropped_new_objects, vec!["refrigerator"]);
        assert!(rec.future.iter().all(|f| !f.contains("refrigerator")));
        assert_eq!(rec.goa_objects.unwrap()[&9], vec!["table", "refrigerator"]);
    }

    #[test]
    fn per_frame_gating() {
        let c = scripted("Frame 5: table\nFrame 9: table, chair");
        let rec = anticipate(&instance(), PipelineMode::WithGoa, &c, &AnticipateConfig::default(), vocab()).unwrap();
        assert_eq!(rec.future[0].object_names().collect::<Vec<_>>(), vec!["table"]);
        assert_eq!(rec.future[1].object_names().collect::<Vec<_>>(), vec!["table", "chair"]);
    }

    #[test]
    fn goa_garbage_falls_back() {
        let c = scripted("I am not sure what you mean.");
        let rec = anticipate(&instance(), PipelineMode::WithGoa, &c, &AnticipateConfig::default(), vocab()).unwrap();
        assert!(rec.diagnostics.goa_fallback);
        assert!(rec.goa_objects.is_none());
        assert_eq!(rec.future[0].object_names().collect::<Vec<_>>(), vec!["table", "chair"]);
    }

    #[test]
    fn shuffled_dispatch_is_invisible() {
        let inst = instance();
        let base = anticipate(&inst, PipelineMode::WithoutGoa, &echo(), &AnticipateConfig::default(), vocab()).unwrap();
        for seed in 0..5 {
            let cfg = AnticipateConfig { shuffle_seed: Some(seed), parallelism: 3, ..AnticipateConfig::default() };
            let r = anticipate(&inst, PipelineMode::WithoutGoa, &echo(), &cfg, vocab()).unwrap();
            assert_eq!(r, base);
        }
    }

    #[test]
    fn ingest_thresholds() {
        let probs: BTreeMap<String, f64> = [("holding".to_string(), 0.7), ("touching".to_string(), 0.55)].into();
        let frames = vec![DetectionFrame {
            frame_id: 3,
            detections: vec![Detection { name: "cup/glass/bottle".into(), bbox: None, relations: RelationEvidence::Probabilities(probs) }],
        }];
        let out = ingest_sgg_text("v", &frames, SGG_THRESHOLD, vocab()).unwrap();
        let f = out.sequence.expand();
        assert_eq!(f[0].objects[0].contact, vec!["holding"]);
        assert!(f[0].objects[0].attention.is_empty());
        assert_eq!(out.flagged_frames, vec![3]);
    }

    #[test]
    fn ingest_hard_labels_and_empty_frames() {
        let json = r#"[{"frame_id": 1, "detections": [{"name": "table", "bbox": [1, 2, 3, 4],
            "relations": {"attention": ["unsure"], "spatial": ["in"], "contact": ["touching"]}}]},
            {"frame_id": 2}]"#;
        let frames: Vec<DetectionFrame> = serde_json::from_str(json).unwrap();
        let out = ingest_sgg_text("v", &frames, SGG_THRESHOLD, vocab()).unwrap();
        let f = out.sequence.expand();
        assert_eq!(f[0].objects[0], state_of("table", "unsure", "in", "touching").with_bbox(BBox { x: 1.0, y: 2.0, w: 3.0, h: 4.0 }));
        assert!(f[1].objects.is_empty());
        assert!(out.flagged_frames.is_empty());
    }

    fn state_of(n: &str, a: &str, s: &str, c: &str) -> ObjectState {
        ObjectState::new(n, &[a], &[s], &[c])
    }

    #[test]
    fn boxes_from_nearest_preceding_frame() {
        let b = |x| BBox { x, y: 0.0, w: 1.0, h: 1.0 };
        let obs = vec![
            FrameGraph::new(10, vec![state("table", "touching").with_bbox(b(10.0))]),
            FrameGraph::new(20, vec![state("chair", "sitting_on").with_bbox(b(20.0))]),
            FrameGraph::new(40, vec![state("table", "holding").with_bbox(b(40.0))]),
        ];
        let observed = GraphSequence::merge("v", &obs).unwrap();
        let rec = PredictionRecord {
            video_id: "v".into(),
            fraction: 0.5,
            mode: PipelineMode::WithGoa,
            future: vec![FrameGraph::new(45, vec![state("table", "holding"), state("floor", "standing_on")])],
            goa_objects: None,
            provenance: Provenance::default(),
            diagnostics: PipelineDiagnostics::default(),
        };
        let out = map_back_to_boxes(&rec, &observed);
        assert_eq!(out.future[0].objects[0].bbox, Some(b(40.0)));
        assert_eq!(out.future[0].objects[1].bbox, None);
    }
}
