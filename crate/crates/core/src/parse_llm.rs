//! Lenient parsers for model completions.
//!
//! Lines are salvaged one at a time. Anything that is dropped (prose, names
//! outside the vocabulary, relations in the wrong partition, repeats) is
//! recorded as a [`Diagnostic`] so no token disappears silently.

use std::collections::{BTreeMap, HashMap, HashSet};

use once_cell::sync::Lazy;
use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::error::ParseError;
use crate::graph::ObjectState;
use crate::vocab::{Partition, Vocabulary};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Diagnostic {
    UnknownObject { line: usize, token: String },
    UnknownRelation { line: usize, token: String },
    PartitionViolation { line: usize, token: String, expected: Partition, actual: Partition },
    DuplicateToken { line: usize, token: String },
    MissingPartition { line: usize, partition: Partition },
    WrongObject { line: usize, found: String },
    UnparsedLine { line: usize, text: String },
    ExtraFrame { line: usize, frame: u32 },
    DuplicateFrame { line: usize, frame: u32 },
    MissingFrame { frame: u32 },
}

impl Diagnostic {
    /// The dropped token, when the diagnostic is about one.
    pub fn token(&self) -> Option<&str> {
        match self {
            Diagnostic::UnknownObject { token, .. }
            | Diagnostic::UnknownRelation { token, .. }
            | Diagnostic::PartitionViolation { token, .. }
            | Diagnostic::DuplicateToken { token, .. } => Some(token),
            Diagnostic::WrongObject { found, .. } => Some(found),
            Diagnostic::UnparsedLine { text, .. } => Some(text),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParseOptions {
    /// Match names after lowercasing and turning spaces and hyphens into
    /// underscores. Off by default: lookup is exact.
    pub normalize: bool,
}

/// GOA output: the ordered object list per requested frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GoaPrediction {
    pub frames: BTreeMap<u32, Vec<String>>,
    pub diagnostics: Vec<Diagnostic>,
}

/// OORA output for one object: its relations per frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OoraPrediction {
    pub object: String,
    pub frames: BTreeMap<u32, ObjectState>,
    pub diagnostics: Vec<Diagnostic>,
}

static FRAME_LINE: Lazy<Regex> =
    Lazy::new(|| Regex::new(r"^\s*(?:[-*•]\s+)?\**\s*(?i:frame)\s*(\d+)\s*\**\s*:\**\s*(.*)$").unwrap());

static KEYWORD: Lazy<Regex> = Lazy::new(|| Regex::new(r"(?i)\b(attention|spatial|contact)\s*:").unwrap());

fn norm_key(s: &str) -> String {
    s.trim()
        .to_lowercase()
        .chars()
        .map(|c| if c == ' ' || c == '-' { '_' } else { c })
        .collect()
}

struct Lookup<'v> {
    vocab: &'v Vocabulary,
    objects: HashMap<String, String>,
    relations: HashMap<String, String>,
    normalize: bool,
}

impl<'v> Lookup<'v> {
    fn new(vocab: &'v Vocabulary, opts: ParseOptions) -> Self {
        let (mut objects, mut relations) = (HashMap::new(), HashMap::new());
        if opts.normalize {
            for o in vocab.object_classes() {
                objects.insert(norm_key(o), o.to_string());
            }
            for r in vocab.all_relations() {
                relations.insert(norm_key(r), r.to_string());
            }
        }
        Lookup {
            vocab,
            objects,
            relations,
            normalize: opts.normalize,
        }
    }

    fn object(&self, token: &str) -> Option<String> {
        if self.vocab.object_classes().any(|o| o == token) {
            Some(token.to_string())
        } else if self.normalize {
            self.objects.get(&norm_key(token)).cloned()
        } else {
            None
        }
    }

    fn relation(&self, token: &str) -> Option<(String, Partition)> {
        let name = if self.vocab.partition_of(token).is_some() {
            token.to_string()
        } else if self.normalize {
            self.relations.get(&norm_key(token))?.clone()
        } else {
            return None;
        };
        let p = self.vocab.partition_of(&name)?;
        Some((name, p))
    }
}

fn clean_token(s: &str) -> &str {
    s.trim()
        .trim_end_matches('.')
        .trim_matches(|c: char| c == '"' || c == '\'' || c == '`' || c == '[' || c == ']' || c == '*')
        .trim()
}

fn split_tokens(field: &str) -> impl Iterator<Item = &str> {
    field.split(',').map(clean_token).filter(|t| !t.is_empty())
}

fn finish_frames<T>(
    frames: &mut BTreeMap<u32, T>,
    requested: &[u32],
    diagnostics: &mut Vec<Diagnostic>,
    default: impl Fn() -> Option<T>,
) {
    for &f in requested {
        if let std::collections::btree_map::Entry::Vacant(e) = frames.entry(f) {
            diagnostics.push(Diagnostic::MissingFrame { frame: f });
            if let Some(v) = default() {
                e.insert(v);
            }
        }
    }
}

/// Parses `Frame <id>: <obj>, <obj>, ...` lines.
///
/// Every requested frame is present in the result; frames the model skipped
/// map to an empty list and get a `MissingFrame` diagnostic.
pub fn parse_goa_response(
    text: &str,
    requested: &[u32],
    vocab: &Vocabulary,
    opts: ParseOptions,
) -> Result<GoaPrediction, ParseError> {
    let lookup = Lookup::new(vocab, opts);
    let wanted: HashSet<u32> = requested.iter().copied().collect();
    let mut frames = BTreeMap::new();
    let mut diagnostics = Vec::new();
    let mut parsed = 0usize;
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        if raw.trim().is_empty() {
            continue;
        }
        let Some(caps) = FRAME_LINE.captures(raw) else {
            diagnostics.push(Diagnostic::UnparsedLine { line, text: raw.trim().to_string() });
            continue;
        };
        let Ok(frame) = caps[1].parse::<u32>() else {
            diagnostics.push(Diagnostic::UnparsedLine { line, text: raw.trim().to_string() });
            continue;
        };
        parsed += 1;
        let mut objects: Vec<String> = Vec::new();
        for token in split_tokens(&caps[2]) {
            match lookup.object(token) {
                Some(name) if objects.contains(&name) => {
                    diagnostics.push(Diagnostic::DuplicateToken { line, token: token.to_string() })
                }
                Some(name) => objects.push(name),
                None => diagnostics.push(Diagnostic::UnknownObject { line, token: token.to_string() }),
            }
        }
        if !wanted.contains(&frame) {
            diagnostics.push(Diagnostic::ExtraFrame { line, frame });
            continue;
        }
        if frames.insert(frame, objects).is_some() {
            diagnostics.push(Diagnostic::DuplicateFrame { line, frame });
        }
    }
    if parsed == 0 {
        return Err(ParseError::TotalParseFailure);
    }
    finish_frames(&mut frames, requested, &mut diagnostics, || Some(Vec::new()));
    Ok(GoaPrediction { frames, diagnostics })
}

/// Parses `Frame <id>: [object:] <name> attention: .., spatial: .., contact: ..[.]` lines.
///
/// Frames the model skipped are absent from the result and get a
/// `MissingFrame` diagnostic.
pub fn parse_oora_response(
    text: &str,
    object: &str,
    requested: &[u32],
    vocab: &Vocabulary,
    opts: ParseOptions,
) -> Result<OoraPrediction, ParseError> {
    let lookup = Lookup::new(vocab, opts);
    let wanted: HashSet<u32> = requested.iter().copied().collect();
    let mut frames = BTreeMap::new();
    let mut diagnostics = Vec::new();
    let mut parsed = 0usize;
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        if raw.trim().is_empty() {
            continue;
        }
        let unparsed = |d: &mut Vec<Diagnostic>| d.push(Diagnostic::UnparsedLine { line, text: raw.trim().to_string() });
        let Some(caps) = FRAME_LINE.captures(raw) else {
            unparsed(&mut diagnostics);
            continue;
        };
        let (Ok(frame), body) = (caps[1].parse::<u32>(), caps.get(2).map_or("", |m| m.as_str())) else {
            unparsed(&mut diagnostics);
            continue;
        };
        let keys: Vec<_> = KEYWORD.captures_iter(body).collect();
        if keys.is_empty() {
            unparsed(&mut diagnostics);
            continue;
        }
        let name_part = &body[..keys[0].get(0).unwrap().start()];
        let name_part = name_part.trim();
        let name_part = name_part
            .strip_prefix("object:")
            .or_else(|| name_part.strip_prefix("Object:"))
            .unwrap_or(name_part);
        let name = clean_token(name_part);
        let matches_target = name == object || (opts.normalize && norm_key(name) == norm_key(object));
        if !matches_target {
            diagnostics.push(Diagnostic::WrongObject { line, found: name.to_string() });
            continue;
        }
        parsed += 1;

        let mut state = ObjectState::new(object, &[], &[], &[]);
        let mut seen_partitions = HashSet::new();
        for (i, cap) in keys.iter().enumerate() {
            let whole = cap.get(0).unwrap();
            let end = keys.get(i + 1).map_or(body.len(), |n| n.get(0).unwrap().start());
            let field = &body[whole.end()..end];
            let partition = match cap[1].to_lowercase().as_str() {
                "attention" => Partition::Attention,
                "spatial" => Partition::Spatial,
                _ => Partition::Contact,
            };
            seen_partitions.insert(partition);
            for token in split_tokens(field) {
                match lookup.relation(token) {
                    None => diagnostics.push(Diagnostic::UnknownRelation { line, token: token.to_string() }),
                    Some((_, actual)) if actual != partition => diagnostics.push(Diagnostic::PartitionViolation {
                        line,
                        token: token.to_string(),
                        expected: partition,
                        actual,
                    }),
                    Some((rel, _)) => {
                        let set = state.relations_mut(partition);
                        if set.contains(&rel) {
                            diagnostics.push(Diagnostic::DuplicateToken { line, token: token.to_string() });
                        } else {
                            set.push(rel);
                        }
                    }
                }
            }
        }
        for p in Partition::ALL {
            if !seen_partitions.contains(&p) {
                diagnostics.push(Diagnostic::MissingPartition { line, partition: p });
            }
        }
        if !wanted.contains(&frame) {
            diagnostics.push(Diagnostic::ExtraFrame { line, frame });
            continue;
        }
        if frames.insert(frame, state).is_some() {
            diagnostics.push(Diagnostic::DuplicateFrame { line, frame });
        }
    }
    if parsed == 0 {
        return Err(ParseError::TotalParseFailure);
    }
    finish_frames(&mut frames, requested, &mut diagnostics, || None);
    Ok(OoraPrediction {
        object: object.to_string(),
        frames,
        diagnostics,
    })
}
