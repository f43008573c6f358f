//! Canonical text form of frame graphs.
//!
//! ```text
//! Frame 168: object: floor attention: looking_at, spatial: beneath,in_front_of, contact: standing_on.
//! object: broom attention: looking_at, spatial: in_front_of, contact: not_contacting.
//! ```
//!
//! The first object clause shares the header line, later clauses of the same
//! frame follow on their own lines. Multi-valued relations are joined by a
//! bare comma. The parser here is strict; model output goes through
//! [`crate::parse_llm`] instead.

use crate::error::GraphError;
use crate::graph::{FrameGraph, GraphSegment, GraphSequence, ObjectState};
use crate::vocab::Vocabulary;

/// `Frame a` or `Frame a..b`.
pub fn frame_header(start: u32, end: u32) -> String {
    if start < end {
        format!("Frame {start}..{end}:")
    } else {
        format!("Frame {start}:")
    }
}

/// `object: <name> attention: <..>, spatial: <..>, contact: <..>.`
pub fn object_clause(state: &ObjectState) -> String {
    format!(
        "object: {} attention: {}, spatial: {}, contact: {}.",
        state.object,
        state.attention.join(","),
        state.spatial.join(","),
        state.contact.join(",")
    )
}

pub(crate) fn render_block(start: u32, end: u32, objects: &[ObjectState]) -> String {
    let mut out = frame_header(start, end);
    for (i, o) in objects.iter().enumerate() {
        out.push(if i == 0 { ' ' } else { '\n' });
        out.push_str(&object_clause(o));
    }
    out
}

pub fn serialize_frame(frame: &FrameGraph, vocab: &Vocabulary) -> Result<String, GraphError> {
    frame.validate(vocab)?;
    Ok(render_block(frame.frame_id, frame.frame_id, &frame.objects))
}

pub fn serialize_segment(seg: &GraphSegment, vocab: &Vocabulary) -> Result<String, GraphError> {
    seg.graph().validate(vocab)?;
    Ok(render_block(seg.start_frame, seg.end_frame, &seg.objects))
}

/// One block per segment, newline separated, no trailing newline.
pub fn serialize_sequence(seq: &GraphSequence, vocab: &Vocabulary) -> Result<String, GraphError> {
    let blocks = seq
        .segments
        .iter()
        .map(|s| serialize_segment(s, vocab))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(blocks.join("\n"))
}

/// Parses a `Frame a[..b]:` prefix, returning the range and the remainder.
pub(crate) fn split_header(line: &str) -> Option<(u32, u32, &str)> {
    let rest = line.strip_prefix("Frame ")?;
    let colon = rest.find(':')?;
    let (range, tail) = (&rest[..colon], &rest[colon + 1..]);
    let (a, b) = match range.split_once("..") {
        Some((a, b)) => (a.parse().ok()?, b.parse().ok()?),
        None => {
            let a = range.parse().ok()?;
            (a, a)
        }
    };
    if a > b {
        return None;
    }
    Some((a, b, tail))
}

fn split_values(field: &str) -> Vec<String> {
    field
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(str::to_string)
        .collect()
}

fn parse_clause(clause: &str, vocab: &Vocabulary) -> Result<ObjectState, GraphError> {
    let malformed = |what: &str| GraphError::Parse {
        line: 0,
        message: format!("{what} in `{clause}`"),
    };
    let body = clause.trim_end();
    let body = body.strip_suffix('.').unwrap_or(body);
    let body = body
        .strip_prefix("object: ")
        .ok_or_else(|| malformed("expected `object: `"))?;
    let (name, rest) = body
        .split_once(" attention: ")
        .ok_or_else(|| malformed("missing `attention:`"))?;
    let (attention, rest) = rest
        .split_once(", spatial: ")
        .ok_or_else(|| malformed("missing `spatial:`"))?;
    let (spatial, contact) = rest
        .split_once(", contact: ")
        .ok_or_else(|| malformed("missing `contact:`"))?;
    let state = ObjectState {
        object: name.to_string(),
        attention: split_values(attention),
        spatial: split_values(spatial),
        contact: split_values(contact),
        bbox: None,
    };
    state.validate(vocab)?;
    Ok(state)
}

/// Strict inverse of [`serialize_sequence`].
///
/// A `Frame a..b` header yields a segment whose recorded annotated ids are
/// just the endpoints; interior ids are not present in the text.
pub fn parse_frame_text(text: &str, vocab: &Vocabulary) -> Result<Vec<GraphSegment>, GraphError> {
    let mut segments: Vec<GraphSegment> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim_end();
        if line.trim().is_empty() {
            continue;
        }
        if let Some((a, b, tail)) = split_header(line) {
            if let Some(prev) = segments.last() {
                if a <= prev.end_frame {
                    return Err(GraphError::NonIncreasingFrames {
                        previous: prev.end_frame,
                        next: a,
                    }
                    .at_line(line_no));
                }
            }
            let mut seg = GraphSegment::from_frame(&FrameGraph::empty(a));
            seg.end_frame = b;
            if b > a {
                seg.frame_ids.push(b);
            }
            let tail = tail.trim_start();
            if !tail.is_empty() {
                let state = parse_clause(tail, vocab).map_err(|e| relabel(e, line_no))?;
                seg.objects.push(state);
            }
            segments.push(seg);
        } else if line.starts_with("object:") {
            let seg = segments.last_mut().ok_or_else(|| GraphError::Parse {
                line: line_no,
                message: "object clause before any frame header".into(),
            })?;
            let state = parse_clause(line, vocab).map_err(|e| relabel(e, line_no))?;
            if seg.objects.iter().any(|o| o.object == state.object) {
                return Err(GraphError::DuplicateObject(state.object).at_line(line_no));
            }
            seg.objects.push(state);
        } else {
            return Err(GraphError::Parse {
                line: line_no,
                message: format!("malformed frame header `{line}`"),
            });
        }
    }
    Ok(segments)
}

fn relabel(err: GraphError, line: usize) -> GraphError {
    match err {
        GraphError::Parse { message, .. } => GraphError::Parse { line, message },
        other => other.at_line(line),
    }
}

/// Parses single-frame text into frame graphs (each header must be a single id).
pub fn parse_frames(text: &str, vocab: &Vocabulary) -> Result<Vec<FrameGraph>, GraphError> {
    parse_frame_text(text, vocab)?
        .into_iter()
        .map(|s| {
            if s.is_range() {
                Err(GraphError::Parse {
                    line: 0,
                    message: format!("range {}..{} where a single frame was expected", s.start_frame, s.end_frame),
                })
            } else {
                Ok(s.graph())
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vocab() -> &'static Vocabulary {
        Vocabulary::action_genome()
    }

    #[test]
    fn range_header() {
        let seg = GraphSegment {
            start_frame: 82,
            end_frame: 98,
            frame_ids: vec![82, 98],
            objects: vec![ObjectState::new("table", &["not_looking_at"], &["in_front_of"], &["touching"])],
            boxes: Default::default(),
        };
        assert_eq!(
            serialize_segment(&seg, vocab()).unwrap(),
            "Frame 82..98: object: table attention: not_looking_at, spatial: in_front_of, contact: touching."
        );
    }

    #[test]
    fn multi_valued_field() {
        let f = FrameGraph::new(
            187,
            vec![ObjectState::new("floor", &["looking_at"], &["beneath", "in_front_of"], &["standing_on"])],
        );
        let s = serialize_frame(&f, vocab()).unwrap();
        assert!(s.contains("spatial: beneath,in_front_of,"), "{s}");
    }

    #[test]
    fn empty_frame_is_bare_header() {
        assert_eq!(serialize_frame(&FrameGraph::empty(7), vocab()).unwrap(), "Frame 7:");
        let parsed = parse_frames("Frame 7:", vocab()).unwrap();
        assert_eq!(parsed, vec![FrameGraph::empty(7)]);
    }

    #[test]
    fn serialization_names_bad_token() {
        let f = FrameGraph::new(1, vec![ObjectState::new("table", &["gazing"], &["in"], &["touching"])]);
        assert_eq!(
            serialize_frame(&f, vocab()).unwrap_err(),
            GraphError::UnknownRelation("gazing".into())
        );
    }

    #[test]
    fn parses_single_object_frame() {
        let text = "Frame 486: object: broom attention: looking_at, spatial: in_front_of, contact: not_contacting.";
        let frames = parse_frames(text, vocab()).unwrap();
        assert_eq!(
            frames,
            vec![FrameGraph::new(
                486,
                vec![ObjectState::new("broom", &["looking_at"], &["in_front_of"], &["not_contacting"])]
            )]
        );
    }

    #[test]
    fn tolerates_missing_period_and_trailing_space() {
        let text = "Frame 1: object: table attention: unsure, spatial: in, contact: touching   ";
        assert_eq!(parse_frames(text, vocab()).unwrap()[0].objects[0].contact, vec!["touching"]);
    }

    #[test]
    fn unknown_object_reports_line() {
        let text = "Frame 1: object: table attention: unsure, spatial: in, contact: touching.\n\
                    Frame 5: object: spoon attention: unsure, spatial: in, contact: touching.";
        match parse_frame_text(text, vocab()).unwrap_err() {
            GraphError::AtLine { line, source } => {
                assert_eq!(line, 2);
                assert_eq!(*source, GraphError::UnknownObject("spoon".into()));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn malformed_header() {
        let err = parse_frame_text("Frme 3: object: table", vocab()).unwrap_err();
        assert!(matches!(err, GraphError::Parse { line: 1, .. }));
        let err = parse_frame_text("Frame 9..3: object: table", vocab()).unwrap_err();
        assert!(matches!(err, GraphError::Parse { line: 1, .. }));
    }

    #[test]
    fn continuation_clauses() {
        let text = "Frame 168: object: floor attention: looking_at, spatial: beneath,in_front_of, contact: standing_on.\n\
                    object: broom attention: looking_at, spatial: in_front_of, contact: not_contacting.";
        let segs = parse_frame_text(text, vocab()).unwrap();
        assert_eq!(segs.len(), 1);
        assert_eq!(segs[0].objects.len(), 2);
        assert_eq!(serialize_segment(&segs[0], vocab()).unwrap(), text);
    }
}
