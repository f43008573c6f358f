//! Recall@K, meanRecall@K, object-set diagnostics, relation accuracy and
//! noise-robustness deltas.
//!
//! Model outputs carry no confidences, so the ranking used for top-K is
//! generation order: objects in the order they were emitted, and within an
//! object attention, spatial, then contact relations. A triple matches on
//! exact (object, relation) equality; boxes are ignored.

use std::collections::{BTreeMap, BTreeSet, HashSet};

use serde::{Deserialize, Serialize};

use crate::benchmark::{LsaInstance, NoiseKind, NoiseSpec};
use crate::graph::FrameGraph;
use crate::pipeline::PredictionRecord;
use crate::report::{pct, Table};
use crate::vocab::Partition;

/// The cut-offs reported by default.
pub const DEFAULT_KS: [usize; 3] = [10, 20, 50];

/// How per-frame recalls are combined into a corpus score.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Aggregation {
    /// Mean over scored frames per video, then mean over videos.
    #[default]
    Macro,
    /// Total matched over total ground-truth triples.
    Micro,
}

/// Matched and total ground-truth triples of one scored frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FrameScore {
    pub matched: usize,
    pub total: usize,
}

/// Combines per-video frame scores. Videos without scored frames are skipped;
/// `None` when nothing is scorable.
pub fn aggregate(videos: &[Vec<FrameScore>], agg: Aggregation) -> Option<f64> {
    match agg {
        Aggregation::Macro => {
            let per_video: Vec<f64> = videos
                .iter()
                .filter(|v| !v.is_empty())
                .map(|v| v.iter().map(|s| s.matched as f64 / s.total as f64).sum::<f64>() / v.len() as f64)
                .collect();
            if per_video.is_empty() {
                None
            } else {
                Some(per_video.iter().sum::<f64>() / per_video.len() as f64)
            }
        }
        Aggregation::Micro => {
            let total: usize = videos.iter().flatten().map(|s| s.total).sum();
            let matched: usize = videos.iter().flatten().map(|s| s.matched).sum();
            (total > 0).then(|| matched as f64 / total as f64)
        }
    }
}

/// (object, relation) pairs of a frame in generation order, without repeats.
pub fn frame_triples(frame: &FrameGraph) -> Vec<(&str, &str)> {
    let mut seen = HashSet::new();
    frame
        .objects
        .iter()
        .flat_map(|o| o.all_relations().map(move |r| (o.object.as_str(), r)))
        .filter(|t| seen.insert(*t))
        .collect()
}

fn top_k(prediction: Option<&FrameGraph>, k: usize) -> HashSet<(&str, &str)> {
    prediction
        .map(|p| frame_triples(p).into_iter().take(k).collect())
        .unwrap_or_default()
}

fn index_frames(frames: &[FrameGraph]) -> BTreeMap<u32, &FrameGraph> {
    frames.iter().map(|f| (f.frame_id, f)).collect()
}

/// Per-frame scores of one video. Ground-truth frames with no triples are skipped;
/// a ground-truth frame without a prediction scores zero.
pub fn recall_frames(prediction: &[FrameGraph], truth: &[FrameGraph], k: usize) -> Vec<FrameScore> {
    let pred = index_frames(prediction);
    truth
        .iter()
        .filter_map(|gt| {
            let gt_triples = frame_triples(gt);
            if gt_triples.is_empty() {
                return None;
            }
            let top = top_k(pred.get(&gt.frame_id).copied(), k);
            let matched = gt_triples.iter().filter(|t| top.contains(*t)).count();
            Some(FrameScore {
                matched,
                total: gt_triples.len(),
            })
        })
        .collect()
}

/// Recall@K of a single video (mean over scored frames).
pub fn recall_at_k(prediction: &[FrameGraph], truth: &[FrameGraph], k: usize) -> Option<f64> {
    aggregate(&[recall_frames(prediction, truth, k)], Aggregation::Macro)
}

/// A video's predicted and ground-truth future frames.
#[derive(Debug, Clone, Copy)]
pub struct VideoPair<'a> {
    pub prediction: &'a [FrameGraph],
    pub truth: &'a [FrameGraph],
}

pub fn corpus_recall_at_k(videos: &[VideoPair<'_>], k: usize, agg: Aggregation) -> Option<f64> {
    let scores: Vec<_> = videos
        .iter()
        .map(|v| recall_frames(v.prediction, v.truth, k))
        .collect();
    aggregate(&scores, agg)
}

/// Recall@K restricted to ground-truth triples of each relation class.
pub fn per_class_recall(videos: &[VideoPair<'_>], k: usize, agg: Aggregation) -> BTreeMap<String, f64> {
    let classes: BTreeSet<&str> = videos
        .iter()
        .flat_map(|v| v.truth.iter().flat_map(|f| frame_triples(f).into_iter().map(|(_, r)| r)))
        .collect();
    let mut out = BTreeMap::new();
    for class in classes {
        let scores: Vec<Vec<FrameScore>> = videos
            .iter()
            .map(|v| {
                let pred = index_frames(v.prediction);
                v.truth
                    .iter()
                    .filter_map(|gt| {
                        let gt_c: Vec<_> = frame_triples(gt).into_iter().filter(|(_, r)| *r == class).collect();
                        if gt_c.is_empty() {
                            return None;
                        }
                        let top = top_k(pred.get(&gt.frame_id).copied(), k);
                        Some(FrameScore {
                            matched: gt_c.iter().filter(|t| top.contains(*t)).count(),
                            total: gt_c.len(),
                        })
                    })
                    .collect()
            })
            .collect();
        if let Some(r) = aggregate(&scores, agg) {
            out.insert(class.to_string(), r);
        }
    }
    out
}

/// Unweighted mean of per-class recalls over classes present in the ground truth.
pub fn mean_recall_at_k(videos: &[VideoPair<'_>], k: usize, agg: Aggregation) -> Option<f64> {
    let per_class = per_class_recall(videos, k, agg);
    (!per_class.is_empty()).then(|| per_class.values().sum::<f64>() / per_class.len() as f64)
}

/// How one predicted object set relates to the ground-truth set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SetRelation {
    /// P = G.
    Strict,
    /// P ⊋ G.
    Contain,
    /// ∅ ≠ P ⊊ G.
    Subset,
    /// P ∩ G ≠ ∅ and neither contains the other.
    PartialOverlap,
    /// P ∩ G = ∅ (and not both empty).
    NoOverlap,
}

pub fn classify_sets(pred: &BTreeSet<&str>, truth: &BTreeSet<&str>) -> SetRelation {
    if pred == truth {
        SetRelation::Strict
    } else if pred.is_superset(truth) {
        SetRelation::Contain
    } else if pred.is_disjoint(truth) {
        SetRelation::NoOverlap
    } else if pred.is_subset(truth) {
        SetRelation::Subset
    } else {
        SetRelation::PartialOverlap
    }
}

/// Frame-level object-set diagnostics. The five category rates sum to one.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ObjectSetMetrics {
    pub frames: usize,
    /// Frames where P ∩ G ≠ ∅.
    pub partial_acc: f64,
    pub strict: f64,
    pub contain: f64,
    pub subset: f64,
    pub partial_overlap: f64,
    pub no_overlap: f64,
}

/// A video's predicted object list per future frame and its ground truth.
#[derive(Debug, Clone, Copy)]
pub struct ObjectSetPair<'a> {
    pub prediction: &'a BTreeMap<u32, Vec<String>>,
    pub truth: &'a [FrameGraph],
}

pub fn object_set_metrics(videos: &[ObjectSetPair<'_>]) -> ObjectSetMetrics {
    let mut counts: BTreeMap<&'static str, usize> = BTreeMap::new();
    let mut frames = 0usize;
    let mut overlap = 0usize;
    for v in videos {
        for gt in v.truth {
            let truth: BTreeSet<&str> = gt.object_names().collect();
            let pred: BTreeSet<&str> = v
                .prediction
                .get(&gt.frame_id)
                .map(|p| p.iter().map(String::as_str).collect())
                .unwrap_or_default();
            frames += 1;
            if !pred.is_disjoint(&truth) {
                overlap += 1;
            }
            let key = match classify_sets(&pred, &truth) {
                SetRelation::Strict => "strict",
                SetRelation::Contain => "contain",
                SetRelation::Subset => "subset",
                SetRelation::PartialOverlap => "partial_overlap",
                SetRelation::NoOverlap => "no_overlap",
            };
            *counts.entry(key).or_default() += 1;
        }
    }
    if frames == 0 {
        return ObjectSetMetrics::default();
    }
    let rate = |k: &str| counts.get(k).copied().unwrap_or(0) as f64 / frames as f64;
    ObjectSetMetrics {
        frames,
        partial_acc: overlap as f64 / frames as f64,
        strict: rate("strict"),
        contain: rate("contain"),
        subset: rate("subset"),
        partial_overlap: rate("partial_overlap"),
        no_overlap: rate("no_overlap"),
    }
}

/// Exact-set accuracy per relation partition over (frame, object) pairs
/// present in both prediction and ground truth.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct RelationAccuracy {
    pub pairs: usize,
    pub attention: Option<f64>,
    pub spatial: Option<f64>,
    pub contact: Option<f64>,
    pub overall: Option<f64>,
}

pub fn relation_accuracy(videos: &[VideoPair<'_>]) -> RelationAccuracy {
    let mut pairs = 0usize;
    let mut correct = [0usize; 3];
    for v in videos {
        let pred = index_frames(v.prediction);
        for gt in v.truth {
            let Some(p) = pred.get(&gt.frame_id) else { continue };
            for gt_obj in &gt.objects {
                let Some(p_obj) = p.object(&gt_obj.object) else { continue };
                pairs += 1;
                for (i, part) in Partition::ALL.into_iter().enumerate() {
                    let a: BTreeSet<&String> = p_obj.relations(part).iter().collect();
                    let b: BTreeSet<&String> = gt_obj.relations(part).iter().collect();
                    if a == b {
                        correct[i] += 1;
                    }
                }
            }
        }
    }
    if pairs == 0 {
        return RelationAccuracy::default();
    }
    let acc: Vec<f64> = correct.iter().map(|c| *c as f64 / pairs as f64).collect();
    RelationAccuracy {
        pairs,
        attention: Some(acc[0]),
        spatial: Some(acc[1]),
        contact: Some(acc[2]),
        overall: Some(acc.iter().sum::<f64>() / 3.0),
    }
}

/// Recall values of one run keyed by K.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RecallSummary {
    pub recall: BTreeMap<usize, Option<f64>>,
    pub mean_recall: BTreeMap<usize, Option<f64>>,
}

impl RecallSummary {
    pub fn compute(videos: &[VideoPair<'_>], ks: &[usize], agg: Aggregation) -> Self {
        RecallSummary {
            recall: ks.iter().map(|&k| (k, corpus_recall_at_k(videos, k, agg))).collect(),
            mean_recall: ks.iter().map(|&k| (k, mean_recall_at_k(videos, k, agg))).collect(),
        }
    }

    pub fn at(&self, k: usize) -> Option<f64> {
        self.recall.get(&k).copied().flatten()
    }
}

/// One noisy run compared against the clean run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RobustnessRow {
    pub kind: NoiseKind,
    pub range: (f64, f64),
    pub rate: f64,
    pub r10: Option<f64>,
    pub r50: Option<f64>,
    /// Change versus clean, in percentage points.
    pub delta_r10: Option<f64>,
    pub delta_r50: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RobustnessTable {
    pub clean_r10: Option<f64>,
    pub clean_r50: Option<f64>,
    pub rows: Vec<RobustnessRow>,
    /// Mean delta per noise kind: (kind, mean ΔR@10, mean ΔR@50).
    pub average: Vec<(NoiseKind, Option<f64>, Option<f64>)>,
}

fn delta(noisy: Option<f64>, clean: Option<f64>) -> Option<f64> {
    Some((noisy? - clean?) * 100.0)
}

fn mean(xs: impl Iterator<Item = Option<f64>>) -> Option<f64> {
    let v: Vec<f64> = xs.flatten().collect();
    (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
}

pub fn robustness_delta(clean: &RecallSummary, noisy: &[(NoiseSpec, RecallSummary)]) -> RobustnessTable {
    let (c10, c50) = (clean.at(10), clean.at(50));
    let rows: Vec<RobustnessRow> = noisy
        .iter()
        .map(|(spec, s)| RobustnessRow {
            kind: spec.kind,
            range: spec.range,
            rate: spec.rate,
            r10: s.at(10),
            r50: s.at(50),
            delta_r10: delta(s.at(10), c10),
            delta_r50: delta(s.at(50), c50),
        })
        .collect();
    let average = [NoiseKind::Drop, NoiseKind::Modify]
        .into_iter()
        .filter(|k| rows.iter().any(|r| r.kind == *k))
        .map(|k| {
            let of_kind = rows.iter().filter(|r| r.kind == k);
            (
                k,
                mean(of_kind.clone().map(|r| r.delta_r10)),
                mean(of_kind.map(|r| r.delta_r50)),
            )
        })
        .collect();
    RobustnessTable {
        clean_r10: c10,
        clean_r50: c50,
        rows,
        average,
    }
}

impl RobustnessTable {
    pub fn table(&self) -> Table {
        let signed = |v: Option<f64>| v.map(|d| format!("{d:+.2}")).unwrap_or_else(|| "n/a".into());
        let mut t = Table::new(["noise", "range", "rate", "R@10", "R@50", "dR@10", "dR@50"]);
        t.push(["clean".into(), "-".into(), "0".into(), pct(self.clean_r10), pct(self.clean_r50), "-".into(), "-".into()]);
        for r in &self.rows {
            t.push([
                r.kind.to_string(),
                format!("{:.0}-{:.0}%", r.range.0 * 100.0, r.range.1 * 100.0),
                format!("{:.0}%", r.rate * 100.0),
                pct(r.r10),
                pct(r.r50),
                signed(r.delta_r10),
                signed(r.delta_r50),
            ]);
        }
        for (k, d10, d50) in &self.average {
            t.push([format!("avg {k}"), "".into(), "".into(), "".into(), "".into(), signed(*d10), signed(*d50)]);
        }
        t
    }
}

/// Everything reported for one set of predictions.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub aggregation: Aggregation,
    pub ks: Vec<usize>,
    /// Keyed by observation fraction (formatted with two decimals).
    pub by_fraction: BTreeMap<String, FractionReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FractionReport {
    pub videos: usize,
    pub summary: RecallSummary,
    /// Per-class recall at the largest K.
    pub per_class: BTreeMap<String, f64>,
    pub objects: ObjectSetMetrics,
    pub relations: RelationAccuracy,
    pub goa_fallback_rate: f64,
    pub oora_failure_rate: f64,
    pub dropped_new_objects: usize,
    pub latency_ms_total: u64,
    pub latency_ms_mean: f64,
}

pub fn fraction_key(f: f64) -> String {
    format!("{f:.2}")
}

/// Pairs each prediction record with its instance by (video id, fraction).
pub fn match_records<'a>(
    records: &'a [PredictionRecord],
    instances: &'a [LsaInstance],
) -> Vec<(&'a PredictionRecord, &'a LsaInstance)> {
    let index: BTreeMap<(String, String), &LsaInstance> = instances
        .iter()
        .map(|i| ((i.video_id.clone(), fraction_key(i.fraction)), i))
        .collect();
    records
        .iter()
        .filter_map(|r| {
            index
                .get(&(r.video_id.clone(), fraction_key(r.fraction)))
                .map(|i| (r, *i))
        })
        .collect()
}

pub fn evaluate(
    records: &[PredictionRecord],
    instances: &[LsaInstance],
    ks: &[usize],
    agg: Aggregation,
) -> EvalReport {
    let matched = match_records(records, instances);
    let mut groups: BTreeMap<String, Vec<(&PredictionRecord, Vec<FrameGraph>)>> = BTreeMap::new();
    for (r, i) in matched {
        groups
            .entry(fraction_key(r.fraction))
            .or_default()
            .push((r, i.future.expand()));
    }
    let max_k = ks.iter().copied().max().unwrap_or(10);
    let by_fraction = groups
        .into_iter()
        .map(|(key, group)| {
            let pairs: Vec<VideoPair<'_>> = group
                .iter()
                .map(|(r, truth)| VideoPair {
                    prediction: &r.future,
                    truth,
                })
                .collect();
            let goa_sets: Vec<BTreeMap<u32, Vec<String>>> = group.iter().map(|(r, _)| r.object_sets()).collect();
            let set_pairs: Vec<ObjectSetPair<'_>> = group
                .iter()
                .zip(&goa_sets)
                .map(|((_, truth), p)| ObjectSetPair { prediction: p, truth })
                .collect();
            let n = group.len();
            let fallback = group.iter().filter(|(r, _)| r.diagnostics.goa_fallback).count();
            let targets: usize = group.iter().map(|(r, _)| r.diagnostics.oora_targets).sum();
            let failures: usize = group.iter().map(|(r, _)| r.diagnostics.oora_failures.len()).sum();
            let latency: u64 = group.iter().map(|(r, _)| r.provenance.latency_ms).sum();
            let report = FractionReport {
                videos: n,
                summary: RecallSummary::compute(&pairs, ks, agg),
                per_class: per_class_recall(&pairs, max_k, agg),
                objects: object_set_metrics(&set_pairs),
                relations: relation_accuracy(&pairs),
                goa_fallback_rate: if n == 0 { 0.0 } else { fallback as f64 / n as f64 },
                oora_failure_rate: if targets == 0 { 0.0 } else { failures as f64 / targets as f64 },
                dropped_new_objects: group.iter().map(|(r, _)| r.diagnostics.dropped_new_objects.len()).sum(),
                latency_ms_total: latency,
                latency_ms_mean: if n == 0 { 0.0 } else { latency as f64 / n as f64 },
            };
            (key, report)
        })
        .collect();
    EvalReport {
        aggregation: agg,
        ks: ks.to_vec(),
        by_fraction,
    }
}

impl EvalReport {
    pub fn recall_table(&self) -> Table {
        let mut headers = vec!["F".to_string(), "videos".to_string()];
        headers.extend(self.ks.iter().map(|k| format!("R@{k}")));
        headers.extend(self.ks.iter().map(|k| format!("mR@{k}")));
        let mut t = Table::new(headers);
        for (f, r) in &self.by_fraction {
            let mut row = vec![f.clone(), r.videos.to_string()];
            row.extend(self.ks.iter().map(|k| pct(r.summary.recall.get(k).copied().flatten())));
            row.extend(self.ks.iter().map(|k| pct(r.summary.mean_recall.get(k).copied().flatten())));
            t.push(row);
        }
        t
    }

    pub fn objects_table(&self) -> Table {
        let mut t = Table::new(["F", "frames", "partial", "strict", "contain", "subset", "overlap", "none"]);
        for (f, r) in &self.by_fraction {
            let o = &r.objects;
            t.push([
                f.clone(),
                o.frames.to_string(),
                pct(Some(o.partial_acc)),
                pct(Some(o.strict)),
                pct(Some(o.contain)),
                pct(Some(o.subset)),
                pct(Some(o.partial_overlap)),
                pct(Some(o.no_overlap)),
            ]);
        }
        t
    }

    pub fn relations_table(&self) -> Table {
        let mut t = Table::new(["F", "pairs", "attention", "spatial", "contact", "overall"]);
        for (f, r) in &self.by_fraction {
            let a = &r.relations;
            t.push([
                f.clone(),
                a.pairs.to_string(),
                pct(a.attention),
                pct(a.spatial),
                pct(a.contact),
                pct(a.overall),
            ]);
        }
        t
    }
}
