//! Linguistic scene-graph anticipation toolkit.
//!
//! Observed human-object scene graphs are rendered as compact text, fed to a
//! language model in two stages (which objects will be present, then how the
//! person relates to each of them), parsed back into graphs and scored.

pub mod benchmark;
pub mod error;
pub mod eval;
pub mod fixtures;
pub mod graph;
pub mod llm;
pub mod losses;
pub mod parse_llm;
pub mod pipeline;
pub mod prompts;
pub mod report;
pub mod synthetic;
pub mod text;
pub mod vocab;

pub use benchmark::{LsaInstance, NoiseKind, NoiseSpec, Split, VideoRecord};
pub use error::{Error, Result};
pub use eval::{Aggregation, EvalReport};
pub use graph::{BBox, FrameGraph, GraphSegment, GraphSequence, ObjectState};
pub use llm::{Client, DecodeConfig};
pub use losses::LossConfig;
pub use pipeline::{PipelineMode, PredictionRecord};
pub use prompts::PromptBundle;
pub use vocab::{Partition, Vocabulary};
