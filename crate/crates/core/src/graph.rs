//! Frame-level human-object scene graphs and merged graph sequences.

use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::error::GraphError;
use crate::vocab::{Partition, Vocabulary};

/// Pixel rectangle carried as opaque metadata; serialized as `[x, y, w, h]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 4]", into = "[f64; 4]")]
pub struct BBox {
    pub x: f64,
    pub y: f64,
    pub w: f64,
    pub h: f64,
}

impl From<[f64; 4]> for BBox {
    fn from([x, y, w, h]: [f64; 4]) -> Self {
        BBox { x, y, w, h }
    }
}

impl From<BBox> for [f64; 4] {
    fn from(b: BBox) -> Self {
        [b.x, b.y, b.w, b.h]
    }
}

/// One object in one frame and the person's relations to it.
///
/// Relation lists keep their stored order; they behave as sets (no repeats).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectState {
    #[serde(rename = "name")]
    pub object: String,
    #[serde(default)]
    pub attention: Vec<String>,
    #[serde(default)]
    pub spatial: Vec<String>,
    #[serde(default)]
    pub contact: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bbox: Option<BBox>,
}

impl ObjectState {
    pub fn new<S: Into<String>>(object: S, attention: &[&str], spatial: &[&str], contact: &[&str]) -> Self {
        let own = |xs: &[&str]| xs.iter().map(|s| s.to_string()).collect();
        ObjectState {
            object: object.into(),
            attention: own(attention),
            spatial: own(spatial),
            contact: own(contact),
            bbox: None,
        }
    }

    pub fn with_bbox(mut self, bbox: BBox) -> Self {
        self.bbox = Some(bbox);
        self
    }

    pub fn relations(&self, partition: Partition) -> &[String] {
        match partition {
            Partition::Attention => &self.attention,
            Partition::Spatial => &self.spatial,
            Partition::Contact => &self.contact,
        }
    }

    pub fn relations_mut(&mut self, partition: Partition) -> &mut Vec<String> {
        match partition {
            Partition::Attention => &mut self.attention,
            Partition::Spatial => &mut self.spatial,
            Partition::Contact => &mut self.contact,
        }
    }

    /// Relations in generation order: attention, then spatial, then contact.
    pub fn all_relations(&self) -> impl Iterator<Item = &str> {
        self.attention
            .iter()
            .chain(&self.spatial)
            .chain(&self.contact)
            .map(String::as_str)
    }

    /// Exact equality of name and relation lists, ignoring the box.
    pub fn same_relations(&self, other: &ObjectState) -> bool {
        self.object == other.object
            && self.attention == other.attention
            && self.spatial == other.spatial
            && self.contact == other.contact
    }

    /// Set equality per partition, ignoring order and box.
    pub fn same_relation_sets(&self, other: &ObjectState) -> bool {
        fn as_set(v: &[String]) -> HashSet<&str> {
            v.iter().map(String::as_str).collect()
        }
        self.object == other.object
            && Partition::ALL
                .iter()
                .all(|&p| as_set(self.relations(p)) == as_set(other.relations(p)))
    }

    /// Copy with relations reordered to vocabulary order and the box dropped.
    pub fn canonicalized(&self, vocab: &Vocabulary) -> ObjectState {
        ObjectState {
            object: self.object.clone(),
            attention: vocab.canonical_order(&self.attention),
            spatial: vocab.canonical_order(&self.spatial),
            contact: vocab.canonical_order(&self.contact),
            bbox: None,
        }
    }

    pub fn has_empty_partition(&self) -> bool {
        self.attention.is_empty() || self.spatial.is_empty() || self.contact.is_empty()
    }

    pub fn validate(&self, vocab: &Vocabulary) -> Result<(), GraphError> {
        if !vocab.is_object(&self.object) {
            return Err(GraphError::UnknownObject(self.object.clone()));
        }
        for partition in Partition::ALL {
            let mut seen = HashSet::new();
            for r in self.relations(partition) {
                match vocab.partition_of(r) {
                    None => return Err(GraphError::UnknownRelation(r.clone())),
                    Some(actual) if actual != partition => {
                        return Err(GraphError::PartitionViolation {
                            relation: r.clone(),
                            expected: partition,
                            actual,
                        })
                    }
                    Some(_) => {}
                }
                if !seen.insert(r.as_str()) {
                    return Err(GraphError::DuplicateRelation(r.clone()));
                }
            }
        }
        Ok(())
    }
}

/// All person-object relations of one annotated frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameGraph {
    pub frame_id: u32,
    #[serde(default)]
    pub objects: Vec<ObjectState>,
}

impl FrameGraph {
    pub fn new(frame_id: u32, objects: Vec<ObjectState>) -> Self {
        FrameGraph { frame_id, objects }
    }

    pub fn empty(frame_id: u32) -> Self {
        FrameGraph::new(frame_id, Vec::new())
    }

    pub fn object(&self, name: &str) -> Option<&ObjectState> {
        self.objects.iter().find(|o| o.object == name)
    }

    pub fn contains(&self, name: &str) -> bool {
        self.object(name).is_some()
    }

    pub fn object_names(&self) -> impl Iterator<Item = &str> {
        self.objects.iter().map(|o| o.object.as_str())
    }

    /// Content equality used by temporal merging: same objects in the same
    /// order with identical relation lists. Boxes and frame ids are ignored.
    pub fn same_content(&self, other: &FrameGraph) -> bool {
        self.objects.len() == other.objects.len()
            && self
                .objects
                .iter()
                .zip(&other.objects)
                .all(|(a, b)| a.same_relations(b))
    }

    /// Number of (human, object, relation) triples.
    pub fn triple_count(&self) -> usize {
        self.objects.iter().map(|o| o.all_relations().count()).sum()
    }

    pub fn validate(&self, vocab: &Vocabulary) -> Result<(), GraphError> {
        let mut seen = HashSet::new();
        for o in &self.objects {
            o.validate(vocab)?;
            if !seen.insert(o.object.as_str()) {
                return Err(GraphError::DuplicateObject(o.object.clone()));
            }
        }
        Ok(())
    }
}

/// A run of annotated frames sharing one graph, rendered as `Frame a..b`.
///
/// `frame_ids` lists the annotated frames the run covers; they all lie in
/// `[start_frame, end_frame]`. Per-frame boxes are kept in `boxes` (keyed by
/// frame id, aligned with `objects`) so expansion is lossless.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphSegment {
    pub start_frame: u32,
    pub end_frame: u32,
    pub frame_ids: Vec<u32>,
    pub objects: Vec<ObjectState>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub boxes: BTreeMap<u32, Vec<Option<BBox>>>,
}

impl GraphSegment {
    /// A one-frame segment. Boxes move out of `frame.objects` into `boxes`.
    pub fn from_frame(frame: &FrameGraph) -> Self {
        let mut seg = GraphSegment {
            start_frame: frame.frame_id,
            end_frame: frame.frame_id,
            frame_ids: vec![frame.frame_id],
            objects: frame
                .objects
                .iter()
                .map(|o| ObjectState { bbox: None, ..o.clone() })
                .collect(),
            boxes: BTreeMap::new(),
        };
        seg.record_boxes(frame);
        seg
    }

    fn record_boxes(&mut self, frame: &FrameGraph) {
        if frame.objects.iter().any(|o| o.bbox.is_some()) {
            self.boxes
                .insert(frame.frame_id, frame.objects.iter().map(|o| o.bbox).collect());
        }
    }

    fn absorb(&mut self, frame: &FrameGraph) {
        self.end_frame = frame.frame_id;
        self.frame_ids.push(frame.frame_id);
        self.record_boxes(frame);
    }

    /// The shared graph, stamped with the segment's first annotated frame.
    pub fn graph(&self) -> FrameGraph {
        FrameGraph::new(self.first_frame(), self.objects.clone())
    }

    pub fn first_frame(&self) -> u32 {
        self.frame_ids.first().copied().unwrap_or(self.start_frame)
    }

    pub fn last_frame(&self) -> u32 {
        self.frame_ids.last().copied().unwrap_or(self.end_frame)
    }

    /// Reconstructs one annotated frame including its boxes.
    pub fn frame(&self, frame_id: u32) -> FrameGraph {
        let mut objects = self.objects.clone();
        if let Some(boxes) = self.boxes.get(&frame_id) {
            for (o, b) in objects.iter_mut().zip(boxes) {
                o.bbox = *b;
            }
        }
        FrameGraph::new(frame_id, objects)
    }

    pub fn same_content(&self, other: &GraphSegment) -> bool {
        self.objects.len() == other.objects.len()
            && self
                .objects
                .iter()
                .zip(&other.objects)
                .all(|(a, b)| a.same_relations(b))
    }

    pub fn is_range(&self) -> bool {
        self.start_frame < self.end_frame
    }
}

/// Ordered, non-overlapping segments of one video.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphSequence {
    pub video_id: String,
    pub segments: Vec<GraphSegment>,
}

impl GraphSequence {
    pub fn empty<S: Into<String>>(video_id: S) -> Self {
        GraphSequence {
            video_id: video_id.into(),
            segments: Vec::new(),
        }
    }

    /// Merges adjacent frames with identical content into maximal segments.
    pub fn merge<S: Into<String>>(video_id: S, frames: &[FrameGraph]) -> Result<Self, GraphError> {
        check_increasing(frames.iter().map(|f| f.frame_id))?;
        let mut segments: Vec<GraphSegment> = Vec::new();
        let mut last_graph: Option<&FrameGraph> = None;
        for frame in frames {
            match (segments.last_mut(), last_graph) {
                (Some(seg), Some(prev)) if prev.same_content(frame) => seg.absorb(frame),
                _ => segments.push(GraphSegment::from_frame(frame)),
            }
            last_graph = Some(frame);
        }
        Ok(GraphSequence {
            video_id: video_id.into(),
            segments,
        })
    }

    /// Expands back to one graph per annotated frame.
    pub fn expand(&self) -> Vec<FrameGraph> {
        self.segments
            .iter()
            .flat_map(|s| s.frame_ids.iter().map(move |&id| s.frame(id)))
            .collect()
    }

    pub fn frame_ids(&self) -> Vec<u32> {
        self.segments
            .iter()
            .flat_map(|s| s.frame_ids.iter().copied())
            .collect()
    }

    pub fn frame_count(&self) -> usize {
        self.segments.iter().map(|s| s.frame_ids.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }

    pub fn last_frame_id(&self) -> Option<u32> {
        self.segments.last().map(GraphSegment::last_frame)
    }

    /// Graph of the last annotated frame, boxes included.
    pub fn last_frame(&self) -> Option<FrameGraph> {
        self.segments.last().map(|s| s.frame(s.last_frame()))
    }

    /// Whether the object appears in any segment.
    pub fn mentions(&self, object: &str) -> bool {
        self.segments
            .iter()
            .any(|s| s.objects.iter().any(|o| o.object == object))
    }

    /// Latest observed state of an object, if it was ever seen.
    pub fn last_state_of(&self, object: &str) -> Option<ObjectState> {
        self.segments.iter().rev().find_map(|s| {
            let idx = s.objects.iter().position(|o| o.object == object)?;
            let last = s.last_frame();
            let mut state = s.objects[idx].clone();
            state.bbox = s.boxes.get(&last).and_then(|b| b[idx]);
            Some(state)
        })
    }

    pub fn validate(&self, vocab: &Vocabulary) -> Result<(), GraphError> {
        check_increasing(self.frame_ids().into_iter())?;
        let mut prev_end: Option<u32> = None;
        for seg in &self.segments {
            if seg.frame_ids.is_empty() || seg.start_frame > seg.end_frame {
                return Err(GraphError::Parse {
                    line: 0,
                    message: format!("segment {}..{} is malformed", seg.start_frame, seg.end_frame),
                });
            }
            if let Some(end) = prev_end {
                if seg.start_frame <= end {
                    return Err(GraphError::NonIncreasingFrames {
                        previous: end,
                        next: seg.start_frame,
                    });
                }
            }
            prev_end = Some(seg.end_frame);
            seg.graph().validate(vocab)?;
        }
        Ok(())
    }

    /// Per-object view of the sequence used by relation prompts.
    ///
    /// Keeps only annotated frames that contain `object`, normalizes relation
    /// order to vocabulary order, and re-merges. A run that directly follows
    /// an earlier run of the same object (no absent annotated frame between
    /// them) is displayed from the frame after the previous annotated frame,
    /// so the ranges tile the interval in which the object stays visible.
    pub fn restrict_to_object(&self, object: &str, vocab: &Vocabulary) -> GraphSequence {
        let frames = self.expand();
        let mut segments: Vec<GraphSegment> = Vec::new();
        let mut prev_frame: Option<(u32, bool)> = None;
        for frame in &frames {
            let state = frame.object(object).map(|o| {
                let mut s = o.canonicalized(vocab);
                s.bbox = o.bbox;
                s
            });
            let prev_had = prev_frame.map(|(_, had)| had).unwrap_or(false);
            if let Some(state) = state {
                let one = FrameGraph::new(frame.frame_id, vec![state]);
                match segments.last_mut() {
                    Some(seg) if prev_had && seg.objects[0].same_relations(&one.objects[0]) => {
                        seg.absorb(&one)
                    }
                    _ => {
                        let mut seg = GraphSegment::from_frame(&one);
                        if prev_had {
                            if let Some((prev_id, _)) = prev_frame {
                                seg.start_frame = prev_id + 1;
                            }
                        }
                        segments.push(seg);
                    }
                }
            }
            prev_frame = Some((frame.frame_id, frame.contains(object)));
        }
        GraphSequence {
            video_id: self.video_id.clone(),
            segments,
        }
    }
}

fn check_increasing(ids: impl Iterator<Item = u32>) -> Result<(), GraphError> {
    let mut prev: Option<u32> = None;
    for id in ids {
        if let Some(p) = prev {
            if id <= p {
                return Err(GraphError::NonIncreasingFrames { previous: p, next: id });
            }
        }
        prev = Some(id);
    }
    Ok(())
}
