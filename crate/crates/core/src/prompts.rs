//! Prompt rendering for global object anticipation (GOA) and per-object
//! relation anticipation (OORA).
//!
//! Both prompts are a fixed header, an optional one-shot example, a
//! vocabulary block, the observed graph text, an output-format instruction
//! and a closing cue naming the frames to predict. Rendering is a pure
//! function of its inputs.

use std::fmt::Write as _;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::PromptError;
use crate::graph::GraphSequence;
use crate::text::render_block;
use crate::vocab::{Partition, Vocabulary, BACKGROUND_CLASS};

const GOA_HEADER: &str = "You are an object prediction assistant for scene understanding. In this task, you are provided with observed scene information from past frames and a list of future frame numbers. Your task is to predict the possible objects for the exact future frames and answer in a fixed format.";

const GOA_EXAMPLE: &str = "Example:
Observed:
Frame 42: object: medicine attention: looking_at, spatial: in_front_of, contact: holding.
Frame 87: object: medicine attention: looking_at, spatial: in_front_of, contact: holding.
object: cup/glass/bottle attention: looking_at, spatial: in_front_of, contact: holding, touching.
Frame 111: object: medicine attention: looking_at, spatial: in_front_of, contact: holding.
Future frame numbers to predict objects for: Frame 125, 136
Frame 125: medicine, cup/glass/bottle
Frame 136: medicine, cup/glass/bottle";

const GOA_GUIDANCE: &str = "IMPORTANT: Objects may appear or disappear over time. Consider the following:
1. Objects that were recently visible may still be present even if not mentioned
2. New objects may appear as the scene changes
3. Some objects may disappear from view as time progresses
4. The longer the time gap, the more likely the scene has changed significantly";

const GOA_FORMAT: &str = "Please output in the following format:
Frame <index>: <objects>
Each frame should be on a separate line with no additional commentary.";

/// Prefix of the GOA closing cue line.
pub const GOA_CUE: &str = "Future frame numbers to predict objects for: ";

const OORA_HEADER: &str = "You are a scene graph anticipation assistant. In scene graph anticipation, you are given a series of observed frames containing a specific object. Your task is to predict how a person will interact with this object in the future.
Note:
Attention indicates whether the person is looking at the object.
Contact indicates whether the person physically touches or interacts with the object.
Spatial indicates the relative spatial position of the object with respect to the person.";

const OORA_EXAMPLE: &str = "Example: Observed segment for object medicine:
Frame 42..207: object: medicine attention: not_looking_at, spatial: in_front_of, contact: holding.
Frame 222: object: medicine attention: not_looking_at, spatial: in_front_of, contact: holding.
Future frames: Frame 226, 236 for object [medicine]:
Frame 226: medicine attention: not_looking_at, spatial: in_front_of, contact: holding.
Frame 236: medicine attention: not_looking_at, spatial: in_front_of, contact: holding, eating.";

/// Prefix of the OORA observed block; the object name follows in brackets.
pub const OORA_OBSERVED_PREFIX: &str = "Observed segment for object [";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PromptMode {
    Goa,
    Oora,
}

/// A rendered prompt plus what it asks for.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PromptBundle {
    pub mode: PromptMode,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub target_object: Option<String>,
    pub text: String,
    pub future_frames: Vec<u32>,
    pub one_shot: bool,
    /// Observed segments removed by [`truncate_to_budget`].
    pub dropped_segments: usize,
    #[serde(skip)]
    head: String,
    #[serde(skip)]
    observed: Vec<String>,
    #[serde(skip)]
    tail: String,
}

impl PromptBundle {
    fn assemble(
        mode: PromptMode,
        target_object: Option<String>,
        future_frames: Vec<u32>,
        one_shot: bool,
        head: String,
        observed: Vec<String>,
        tail: String,
    ) -> Self {
        let text = format!("{head}{}{tail}", observed.join("\n"));
        PromptBundle {
            mode,
            target_object,
            text,
            future_frames,
            one_shot,
            dropped_segments: 0,
            head,
            observed,
            tail,
        }
    }

    /// Hex SHA-256 of the prompt text.
    pub fn hash(&self) -> String {
        prompt_hash(&self.text)
    }

    /// Number of observed segment blocks still in the prompt.
    pub fn observed_segments(&self) -> usize {
        self.observed.len()
    }

    fn scaffold(&self) -> String {
        format!("{}{}", self.head, self.tail)
    }
}

pub fn prompt_hash(text: &str) -> String {
    hex::encode(Sha256::digest(text.as_bytes()))
}

fn check_future(observed: &GraphSequence, future_frames: &[u32]) -> Result<(), PromptError> {
    let last = observed.last_frame_id().ok_or(PromptError::EmptyObserved)?;
    if future_frames.is_empty() {
        return Err(PromptError::NoFutureFrames);
    }
    if let Some(&bad) = future_frames.iter().find(|&&f| f <= last) {
        return Err(PromptError::FutureNotAfterObserved {
            future: bad,
            last_observed: last,
        });
    }
    Ok(())
}

fn observed_blocks(seq: &GraphSequence) -> Vec<String> {
    seq.segments
        .iter()
        .map(|s| render_block(s.start_frame, s.end_frame, &s.objects))
        .collect()
}

fn join_ids(ids: &[u32], prefix: &str) -> String {
    ids.iter()
        .map(|id| format!("{prefix}{id}"))
        .collect::<Vec<_>>()
        .join(", ")
}

pub fn build_goa_prompt(
    observed: &GraphSequence,
    future_frames: &[u32],
    one_shot: bool,
    vocab: &Vocabulary,
) -> Result<PromptBundle, PromptError> {
    check_future(observed, future_frames)?;
    observed.validate(vocab)?;

    let mut head = String::new();
    head.push_str(GOA_HEADER);
    head.push_str("\n\n");
    if one_shot {
        head.push_str(GOA_EXAMPLE);
        head.push_str("\n\n");
    }
    head.push_str(GOA_GUIDANCE);
    head.push_str("\n\n");
    let objects: Vec<&str> = std::iter::once(BACKGROUND_CLASS)
        .chain(vocab.objects().iter().map(String::as_str))
        .collect();
    let _ = writeln!(head, "Available objects: {}", objects.join(", "));
    head.push_str("Observed:\n\n");

    let tail = format!(
        "\n\n{GOA_FORMAT}\n\n{GOA_CUE}{}:",
        join_ids(future_frames, "Frame ")
    );

    Ok(PromptBundle::assemble(
        PromptMode::Goa,
        None,
        future_frames.to_vec(),
        one_shot,
        head,
        observed_blocks(observed),
        tail,
    ))
}

pub fn build_oora_prompt(
    observed: &GraphSequence,
    object: &str,
    future_frames: &[u32],
    one_shot: bool,
    vocab: &Vocabulary,
) -> Result<PromptBundle, PromptError> {
    check_future(observed, future_frames)?;
    observed.validate(vocab)?;
    let restricted = observed.restrict_to_object(object, vocab);
    if restricted.is_empty() {
        return Err(PromptError::ObjectNotObserved(object.to_string()));
    }

    let mut head = String::new();
    head.push_str(OORA_HEADER);
    head.push_str("\n\n");
    if one_shot {
        head.push_str(OORA_EXAMPLE);
        head.push_str("\n\n");
    }
    head.push_str("The possible relationship categories are:\n");
    for p in Partition::ALL {
        let label = match p {
            Partition::Attention => "Attention",
            Partition::Spatial => "Spatial",
            Partition::Contact => "Contact",
        };
        let _ = writeln!(head, "{label}: {}", vocab.relations(p).join(", "));
    }
    let _ = writeln!(head, "\n{OORA_OBSERVED_PREFIX}{object}]:");

    let frames = join_ids(future_frames, "");
    let tail = format!(
        "\n\nPlease generate the scene graph for object [{object}] in each of the following future frames: {frames}.\n\
         Output one scene graph per frame in the following format:\n\
         Frame <index>: object: {object} attention: <attention_relationship>, spatial: <spatial_relationship>, contact: <contact_relationship>\n\
         Ensure each frame is on a separate line and no additional commentary is included.\n\n\
         Future frames {frames} for object [{object}]:"
    );

    Ok(PromptBundle::assemble(
        PromptMode::Oora,
        Some(object.to_string()),
        future_frames.to_vec(),
        one_shot,
        head,
        observed_blocks(&restricted),
        tail,
    ))
}

/// Estimates how many model tokens a text occupies.
pub trait TokenEstimator {
    fn estimate(&self, text: &str) -> usize;
}

/// Roughly four characters per token, rounded up.
#[derive(Debug, Clone, Copy, Default)]
pub struct CharHeuristic;

impl TokenEstimator for CharHeuristic {
    fn estimate(&self, text: &str) -> usize {
        text.chars().count().div_ceil(4)
    }
}

impl<F: Fn(&str) -> usize> TokenEstimator for F {
    fn estimate(&self, text: &str) -> usize {
        self(text)
    }
}

/// Drops the oldest observed segments until the estimate fits `budget`.
/// The scaffold and the closing cue are never removed.
pub fn truncate_to_budget(
    bundle: &PromptBundle,
    budget: usize,
    estimator: &dyn TokenEstimator,
) -> Result<PromptBundle, PromptError> {
    let needed = estimator.estimate(&bundle.scaffold());
    if needed > budget {
        return Err(PromptError::BudgetTooSmall { needed, budget });
    }
    let mut out = bundle.clone();
    while estimator.estimate(&out.text) > budget && !out.observed.is_empty() {
        out.observed.remove(0);
        out.dropped_segments += 1;
        out.text = format!("{}{}{}", out.head, out.observed.join("\n"), out.tail);
    }
    Ok(out)
}
