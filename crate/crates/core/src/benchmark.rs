//! Benchmark construction from the interchange corpus, dataset statistics,
//! the continuous-object oracle ceiling and noise-perturbed variants.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{BenchmarkError, GraphError};
use crate::eval::{aggregate, frame_triples, fraction_key, Aggregation, FrameScore};
use crate::graph::{FrameGraph, GraphSequence};
use crate::report::{pct, Table};
use crate::vocab::{Partition, Vocabulary};

pub const DEFAULT_FRACTIONS: [f64; 4] = [0.3, 0.5, 0.7, 0.9];

/// Videos with fewer annotated frames are excluded.
pub const MIN_FRAMES: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Test,
}

/// One video of the interchange corpus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VideoRecord {
    pub video_id: String,
    pub split: Split,
    pub frames: Vec<FrameGraph>,
}

impl VideoRecord {
    pub fn validate(&self, vocab: &Vocabulary) -> Result<(), BenchmarkError> {
        let wrap = |source: GraphError| BenchmarkError::Record {
            video_id: self.video_id.clone(),
            source,
        };
        for pair in self.frames.windows(2) {
            if pair[1].frame_id <= pair[0].frame_id {
                return Err(wrap(GraphError::NonIncreasingFrames {
                    previous: pair[0].frame_id,
                    next: pair[1].frame_id,
                }));
            }
        }
        self.frames.iter().try_for_each(|f| f.validate(vocab)).map_err(wrap)
    }
}

/// Accepts either a JSON array of records or one record per line.
pub fn load_corpus(text: &str) -> Result<Vec<VideoRecord>, BenchmarkError> {
    let trimmed = text.trim_start();
    if trimmed.is_empty() {
        return Err(BenchmarkError::EmptyCorpus);
    }
    let records = if trimmed.starts_with('[') {
        let values: Vec<serde_json::Value> =
            serde_json::from_str(text).map_err(|e| BenchmarkError::Malformed(e.to_string()))?;
        values
            .into_iter()
            .enumerate()
            .map(|(i, v)| parse_record(v, i + 1))
            .collect::<Result<Vec<_>, _>>()?
    } else {
        text.lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty())
            .map(|(i, l)| {
                let v: serde_json::Value = serde_json::from_str(l)
                    .map_err(|e| BenchmarkError::Malformed(format!("line {}: {e}", i + 1)))?;
                parse_record(v, i + 1)
            })
            .collect::<Result<Vec<_>, _>>()?
    };
    if records.is_empty() {
        return Err(BenchmarkError::EmptyCorpus);
    }
    Ok(records)
}

fn parse_record(value: serde_json::Value, position: usize) -> Result<VideoRecord, BenchmarkError> {
    let id = value
        .get("video_id")
        .and_then(|v| v.as_str())
        .map(str::to_string)
        .unwrap_or_else(|| format!("#{position}"));
    serde_json::from_value(value).map_err(|e| BenchmarkError::Malformed(format!("record `{id}`: {e}")))
}

/// One benchmark item: an observed prefix and the hidden future suffix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LsaInstance {
    pub video_id: String,
    pub fraction: f64,
    pub observed: GraphSequence,
    pub future: GraphSequence,
}

impl LsaInstance {
    pub fn future_frame_ids(&self) -> Vec<u32> {
        self.future.frame_ids()
    }
}

/// Number of observed frames: ⌈f·n⌉ clamped to `[1, n-1]`.
pub fn split_index(n: usize, fraction: f64) -> usize {
    // The epsilon keeps products like 0.3 * 10 from rounding up to 4.
    let raw = (fraction * n as f64 - 1e-9).ceil().max(0.0) as usize;
    raw.clamp(1, n.saturating_sub(1).max(1))
}

pub fn validate_fraction(f: f64) -> Result<(), BenchmarkError> {
    if f.is_finite() && f > 0.0 && f < 1.0 {
        Ok(())
    } else {
        Err(BenchmarkError::InvalidFraction(f))
    }
}

/// One instance per (test video, fraction), in corpus order then fraction order.
pub fn build_benchmark(
    corpus: &[VideoRecord],
    fractions: &[f64],
    vocab: &Vocabulary,
) -> Result<Vec<LsaInstance>, BenchmarkError> {
    if corpus.is_empty() {
        return Err(BenchmarkError::EmptyCorpus);
    }
    fractions.iter().try_for_each(|f| validate_fraction(*f))?;
    let mut out = Vec::new();
    for record in corpus {
        record.validate(vocab)?;
        if record.split != Split::Test || record.frames.len() < MIN_FRAMES {
            continue;
        }
        let n = record.frames.len();
        for &fraction in fractions {
            let cut = split_index(n, fraction);
            let merge = |frames: &[FrameGraph]| {
                GraphSequence::merge(record.video_id.clone(), frames).map_err(|source| BenchmarkError::Record {
                    video_id: record.video_id.clone(),
                    source,
                })
            };
            out.push(LsaInstance {
                video_id: record.video_id.clone(),
                fraction,
                observed: merge(&record.frames[..cut])?,
                future: merge(&record.frames[cut..])?,
            });
        }
    }
    Ok(out)
}

/// How the object set changes between the last observed frame and the future.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ObjectDynamicsStats {
    pub fraction: Option<f64>,
    pub videos: usize,
    pub consistent_rate: f64,
    pub new_object_rate: f64,
    pub disappeared_rate: f64,
    /// Share of videos with any change; equals `1 - consistent_rate`.
    pub changed_rate: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DynamicsFlags {
    pub new_objects: bool,
    pub disappeared: bool,
}

impl DynamicsFlags {
    pub fn consistent(self) -> bool {
        !self.new_objects && !self.disappeared
    }
}

pub fn object_dynamics(instance: &LsaInstance) -> DynamicsFlags {
    let last: BTreeSet<String> = instance
        .observed
        .last_frame()
        .map(|f| f.object_names().map(str::to_string).collect())
        .unwrap_or_default();
    let future: BTreeSet<String> = instance
        .future
        .segments
        .iter()
        .flat_map(|s| s.objects.iter().map(|o| o.object.clone()))
        .collect();
    DynamicsFlags {
        new_objects: future.difference(&last).next().is_some(),
        disappeared: last.difference(&future).next().is_some(),
    }
}

/// Rates over videos. All instances must share one fraction.
pub fn compute_object_dynamics(instances: &[LsaInstance]) -> Result<ObjectDynamicsStats, BenchmarkError> {
    let fractions: BTreeSet<String> = instances.iter().map(|i| fraction_key(i.fraction)).collect();
    if fractions.len() > 1 {
        return Err(BenchmarkError::Malformed(format!(
            "object dynamics needs a single fraction, got {}",
            fractions.into_iter().collect::<Vec<_>>().join(", ")
        )));
    }
    let n = instances.len();
    if n == 0 {
        return Ok(ObjectDynamicsStats::default());
    }
    let flags: Vec<DynamicsFlags> = instances.iter().map(object_dynamics).collect();
    let rate = |pred: &dyn Fn(&DynamicsFlags) -> bool| flags.iter().filter(|f| pred(f)).count() as f64 / n as f64;
    let consistent = rate(&|f| f.consistent());
    Ok(ObjectDynamicsStats {
        fraction: instances.first().map(|i| i.fraction),
        videos: n,
        consistent_rate: consistent,
        new_object_rate: rate(&|f| f.new_objects),
        disappeared_rate: rate(&|f| f.disappeared),
        changed_rate: rate(&|f| !f.consistent()),
    })
}

/// The predictions a perfect relation model would make under the
/// continuous-object assumption: each future frame's ground truth restricted
/// to objects of the last observed frame.
pub fn oracle_predictions(instance: &LsaInstance) -> Vec<FrameGraph> {
    let last = instance.observed.last_frame().unwrap_or_else(|| FrameGraph::empty(0));
    instance
        .future
        .expand()
        .into_iter()
        .map(|mut f| {
            f.objects.retain(|o| last.contains(&o.object));
            f
        })
        .collect()
}

/// Upper bound on Recall@K when only last-observed objects can be predicted.
pub fn oracle_ceiling(instances: &[LsaInstance], k: usize, agg: Aggregation) -> Option<f64> {
    let videos: Vec<Vec<FrameScore>> = instances
        .iter()
        .map(|inst| {
            let last = inst.observed.last_frame().unwrap_or_else(|| FrameGraph::empty(0));
            inst.future
                .expand()
                .iter()
                .filter_map(|f| {
                    let triples = frame_triples(f);
                    if triples.is_empty() {
                        return None;
                    }
                    let persistent = triples.iter().filter(|(o, _)| last.contains(o)).count();
                    Some(FrameScore {
                        matched: persistent.min(k),
                        total: triples.len(),
                    })
                })
                .collect()
        })
        .collect();
    aggregate(&videos, agg)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NoiseKind {
    /// Remove one object clause from each selected frame.
    Drop,
    /// Resample every relation of one object in each selected frame.
    Modify,
}

impl fmt::Display for NoiseKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            NoiseKind::Drop => "drop",
            NoiseKind::Modify => "modify",
        })
    }
}

impl std::str::FromStr for NoiseKind {
    type Err = BenchmarkError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "drop" => Ok(NoiseKind::Drop),
            "modify" => Ok(NoiseKind::Modify),
            other => Err(BenchmarkError::InvalidNoise(format!("unknown kind `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub kind: NoiseKind,
    /// Fractional interval `[lo, hi)` of the observed prefix.
    pub range: (f64, f64),
    pub rate: f64,
    pub seed: u64,
}

impl NoiseSpec {
    pub fn validate(&self) -> Result<(), BenchmarkError> {
        let (lo, hi) = self.range;
        let unit = |x: f64| (0.0..=1.0).contains(&x);
        if !unit(self.rate) {
            return Err(BenchmarkError::InvalidNoise(format!("rate {} outside [0, 1]", self.rate)));
        }
        if !unit(lo) || !unit(hi) || lo > hi {
            return Err(BenchmarkError::InvalidNoise(format!("range {lo}-{hi} is not a sub-interval of [0, 1]")));
        }
        Ok(())
    }

    /// Observed positions falling in the range.
    pub fn in_range(&self, observed_frames: usize) -> Vec<usize> {
        let m = observed_frames as f64;
        let (lo, hi) = (self.range.0 * m - 1e-9, self.range.1 * m - 1e-9);
        (0..observed_frames)
            .filter(|&i| (i as f64) >= lo && (i as f64) < hi)
            .collect()
    }

    /// ⌊rate · in-range⌋.
    pub fn target_count(&self, in_range: usize) -> usize {
        (self.rate * in_range as f64 + 1e-9).floor() as usize
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NoiseOutcome {
    pub instance: LsaInstance,
    /// Frame ids that were selected for perturbation.
    pub perturbed: Vec<u32>,
    /// Selected frames whose content actually differs afterwards.
    pub changed: usize,
    /// `changed` over all observed frames.
    pub frame_error_rate: f64,
    pub warning: Option<String>,
}

pub fn inject_noise(
    instance: &LsaInstance,
    spec: &NoiseSpec,
    vocab: &Vocabulary,
) -> Result<NoiseOutcome, BenchmarkError> {
    spec.validate()?;
    let mut frames = instance.observed.expand();
    let candidates = spec.in_range(frames.len());
    let unchanged = |warning: Option<String>| NoiseOutcome {
        instance: instance.clone(),
        perturbed: Vec::new(),
        changed: 0,
        frame_error_rate: 0.0,
        warning,
    };
    if candidates.is_empty() {
        return Ok(unchanged(Some(format!(
            "range {}-{} selects no observed frame of `{}`",
            spec.range.0, spec.range.1, instance.video_id
        ))));
    }
    let count = spec.target_count(candidates.len());
    if count == 0 {
        return Ok(unchanged(None));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut chosen: Vec<usize> = sample(&mut rng, candidates.len(), count)
        .into_iter()
        .map(|i| candidates[i])
        .collect();
    chosen.sort_unstable();
    let mut changed = 0;
    for &pos in &chosen {
        let frame = &mut frames[pos];
        if frame.objects.is_empty() {
            continue;
        }
        let before = frame.clone();
        let target = rng.gen_range(0..frame.objects.len());
        match spec.kind {
            NoiseKind::Drop => {
                frame.objects.remove(target);
            }
            NoiseKind::Modify => {
                let obj = &mut frame.objects[target];
                for p in Partition::ALL {
                    let n = obj.relations(p).len();
                    let pool = vocab.relations(p);
                    if n == 0 || pool.is_empty() {
                        continue;
                    }
                    let mut picks: Vec<usize> = sample(&mut rng, pool.len(), n.min(pool.len())).into_vec();
                    picks.sort_unstable();
                    *obj.relations_mut(p) = picks.into_iter().map(|i| pool[i].clone()).collect();
                }
            }
        }
        if !before.same_content(frame) {
            changed += 1;
        }
    }
    let perturbed = chosen.iter().map(|&i| frames[i].frame_id).collect();
    let observed = GraphSequence::merge(instance.video_id.clone(), &frames).map_err(|source| {
        BenchmarkError::Record {
            video_id: instance.video_id.clone(),
            source,
        }
    })?;
    Ok(NoiseOutcome {
        frame_error_rate: changed as f64 / frames.len() as f64,
        instance: LsaInstance {
            observed,
            ..instance.clone()
        },
        perturbed,
        changed,
        warning: None,
    })
}

/// Serializes instances one per line.
pub fn write_instances(instances: &[LsaInstance]) -> Result<String, serde_json::Error> {
    let mut out = String::new();
    for i in instances {
        out.push_str(&serde_json::to_string(i)?);
        out.push('\n');
    }
    Ok(out)
}

pub fn read_instances(text: &str) -> Result<Vec<LsaInstance>, BenchmarkError> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| BenchmarkError::Malformed(format!("bundle line {}: {e}", i + 1)))
        })
        .collect()
}

/// Dataset summary written by `bench stats`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchmarkStats {
    pub corpus_videos: usize,
    pub test_videos: usize,
    pub short_videos_dropped: usize,
    pub fractions: BTreeMap<String, FractionStats>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FractionStats {
    pub instances: usize,
    pub mean_observed_frames: f64,
    pub mean_future_frames: f64,
    pub mean_observed_segments: f64,
    pub dynamics: ObjectDynamicsStats,
    pub oracle_ceiling: BTreeMap<usize, Option<f64>>,
}

pub fn benchmark_stats(
    corpus: &[VideoRecord],
    instances: &[LsaInstance],
    ks: &[usize],
    agg: Aggregation,
) -> Result<BenchmarkStats, BenchmarkError> {
    let test: Vec<&VideoRecord> = corpus.iter().filter(|r| r.split == Split::Test).collect();
    let mut groups: BTreeMap<String, Vec<LsaInstance>> = BTreeMap::new();
    for i in instances {
        groups.entry(fraction_key(i.fraction)).or_default().push(i.clone());
    }
    let mut fractions = BTreeMap::new();
    for (key, group) in groups {
        let n = group.len() as f64;
        let mean = |f: &dyn Fn(&LsaInstance) -> usize| group.iter().map(f).sum::<usize>() as f64 / n;
        fractions.insert(
            key,
            FractionStats {
                instances: group.len(),
                mean_observed_frames: mean(&|i| i.observed.frame_count()),
                mean_future_frames: mean(&|i| i.future.frame_count()),
                mean_observed_segments: mean(&|i| i.observed.segments.len()),
                dynamics: compute_object_dynamics(&group)?,
                oracle_ceiling: ks.iter().map(|&k| (k, oracle_ceiling(&group, k, agg))).collect(),
            },
        );
    }
    Ok(BenchmarkStats {
        corpus_videos: corpus.len(),
        test_videos: test.len(),
        short_videos_dropped: test.iter().filter(|r| r.frames.len() < MIN_FRAMES).count(),
        fractions,
    })
}

impl BenchmarkStats {
    pub fn table(&self) -> Table {
        let ks: BTreeSet<usize> = self
            .fractions
            .values()
            .flat_map(|f| f.oracle_ceiling.keys().copied())
            .collect();
        let mut headers: Vec<String> = ["F", "videos", "obs", "future", "segments", "consistent", "new", "disappeared"]
            .map(String::from)
            .to_vec();
        headers.extend(ks.iter().map(|k| format!("ceil@{k}")));
        let mut t = Table::new(headers);
        for (key, f) in &self.fractions {
            let mut row = vec![
                key.clone(),
                f.instances.to_string(),
                format!("{:.1}", f.mean_observed_frames),
                format!("{:.1}", f.mean_future_frames),
                format!("{:.1}", f.mean_observed_segments),
                pct(Some(f.dynamics.consistent_rate)),
                pct(Some(f.dynamics.new_object_rate)),
                pct(Some(f.dynamics.disappeared_rate)),
            ];
            row.extend(ks.iter().map(|k| pct(f.oracle_ceiling.get(k).copied().flatten())));
            t.push(row);
        }
        t
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::ObjectState;

    fn vocab() -> &'static Vocabulary {
        Vocabulary::action_genome()
    }

    fn frames(n: usize) -> Vec<FrameGraph> {
        (0..n as u32)
            .map(|i| {
                let c = if i % 2 == 0 { "holding" } else { "touching" };
                FrameGraph::new(i * 10, vec![ObjectState::new("cup/glass/bottle", &["looking_at"], &["in_front_of"], &[c])])
            })
            .collect()
    }

    fn video(id: &str, n: usize) -> VideoRecord {
        VideoRecord {
            video_id: id.into(),
            split: Split::Test,
            frames: frames(n),
        }
    }

    #[test]
    fn split_arithmetic() {
        assert_eq!(split_index(10, 0.9), 9);
        assert_eq!(split_index(10, 0.3), 3);
        assert_eq!(split_index(3, 0.9), 2);
        assert_eq!(split_index(3, 0.3), 1);
        assert_eq!(split_index(36, 0.9), 33);
    }

    #[test]
    fn short_and_train_videos_excluded() {
        let mut train = video("t", 5);
        train.split = Split::Train;
        let corpus = vec![video("a", 2), video("b", 10), train];
        let out = build_benchmark(&corpus, &[0.3, 0.9], vocab()).unwrap();
        assert_eq!(out.len(), 2);
        assert_eq!(out[0].observed.frame_count(), 3);
        assert_eq!(out[0].future.frame_count(), 7);
        assert_eq!(out[1].observed.frame_count(), 9);
        assert_eq!(out[1].future.frame_count(), 1);
    }

    #[test]
    fn empty_corpus_and_bad_fraction() {
        assert!(matches!(build_benchmark(&[], &[0.5], vocab()), Err(BenchmarkError::EmptyCorpus)));
        assert!(matches!(
            build_benchmark(&[video("a", 4)], &[1.0], vocab()),
            Err(BenchmarkError::InvalidFraction(_))
        ));
        assert!(matches!(load_corpus("  "), Err(BenchmarkError::EmptyCorpus)));
    }

    #[test]
    fn bad_record_names_video() {
        let mut v = video("bad_one", 4);
        v.frames[2].objects[0].object = "spoon".into();
        match build_benchmark(&[v], &[0.5], vocab()) {
            Err(BenchmarkError::Record { video_id, source }) => {
                assert_eq!(video_id, "bad_one");
                assert_eq!(source, GraphError::UnknownObject("spoon".into()));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn corpus_json_and_jsonl() {
        let recs = vec![video("a", 3), video("b", 4)];
        let arr = serde_json::to_string(&recs).unwrap();
        let lines: String = recs.iter().map(|r| serde_json::to_string(r).unwrap() + "\n").collect();
        assert_eq!(load_corpus(&arr).unwrap(), recs);
        assert_eq!(load_corpus(&lines).unwrap(), recs);
        let err = load_corpus("[{\"video_id\": \"x\", \"split\": \"dev\", \"frames\": []}]").unwrap_err();
        assert!(err.to_string().contains("record `x`"), "{err}");
    }

    fn instance(last: &[&str], future: &[&[&str]]) -> LsaInstance {
        let obj = |n: &str| ObjectState::new(n, &["looking_at"], &["in_front_of"], &["touching"]);
        let observed = vec![FrameGraph::new(1, last.iter().map(|n| obj(n)).collect())];
        let fut: Vec<FrameGraph> = future
            .iter()
            .enumerate()
            .map(|(i, names)| FrameGraph::new(10 + i as u32, names.iter().map(|n| obj(n)).collect()))
            .collect();
        LsaInstance {
            video_id: "v".into(),
            fraction: 0.5,
            observed: GraphSequence::merge("v", &observed).unwrap(),
            future: GraphSequence::merge("v", &fut).unwrap(),
        }
    }

    #[test]
    fn dynamics_flags() {
        let f = object_dynamics(&instance(&["broom"], &[&["broom"]]));
        assert!(f.consistent());
        let f = object_dynamics(&instance(&["table"], &[&["floor", "broom"]]));
        assert!(f.new_objects && f.disappeared);
    }

    #[test]
    fn ceiling_cases() {
        let persistent = instance(&["table", "chair"], &[&["table"], &["table", "chair"]]);
        assert_eq!(oracle_ceiling(&[persistent], 10, Aggregation::Macro), Some(1.0));
        let new_only = instance(&["table"], &[&["floor"]]);
        assert_eq!(oracle_ceiling(&[new_only], 10, Aggregation::Macro), Some(0.0));
        let many = instance(&["table", "chair", "floor", "broom"], &[&["table", "chair", "floor", "broom"]]);
        assert_eq!(oracle_ceiling(&[many], 10, Aggregation::Macro), Some(10.0 / 12.0));
    }

    #[test]
    fn noise_count_is_floor() {
        let inst = build_benchmark(&[video("v", 21)], &[0.99], vocab()).unwrap().remove(0);
        assert_eq!(inst.observed.frame_count(), 20);
        let spec = NoiseSpec { kind: NoiseKind::Drop, range: (0.0, 1.0), rate: 0.15, seed: 3 };
        let out = inject_noise(&inst, &spec, vocab()).unwrap();
        assert_eq!(out.perturbed.len(), 3);
        assert_eq!(out.instance.observed.frame_ids(), inst.observed.frame_ids());
        let frames = out.instance.observed.expand();
        let emptied: Vec<u32> = frames.iter().filter(|f| f.objects.is_empty()).map(|f| f.frame_id).collect();
        assert_eq!(emptied, out.perturbed);
        let text = crate::text::serialize_sequence(&out.instance.observed, vocab()).unwrap();
        assert!(text.lines().any(|l| l.starts_with("Frame ") && l.ends_with(':')), "{text}");
    }

    #[test]
    fn rate_zero_and_empty_range() {
        let inst = build_benchmark(&[video("v", 10)], &[0.5], vocab()).unwrap().remove(0);
        let spec = NoiseSpec { kind: NoiseKind::Modify, range: (0.0, 1.0), rate: 0.0, seed: 1 };
        let out = inject_noise(&inst, &spec, vocab()).unwrap();
        assert_eq!(out.instance, inst);
        assert!(out.warning.is_none());
        let spec = NoiseSpec { range: (0.5, 0.5), rate: 1.0, ..spec };
        let out = inject_noise(&inst, &spec, vocab()).unwrap();
        assert_eq!(out.instance, inst);
        assert!(out.warning.is_some());
    }

    #[test]
    fn range_positions() {
        let spec = NoiseSpec { kind: NoiseKind::Drop, range: (0.6, 0.9), rate: 1.0, seed: 0 };
        assert_eq!(spec.in_range(10), vec![6, 7, 8]);
        let spec = NoiseSpec { range: (0.0, 1.0), ..spec };
        assert_eq!(spec.in_range(4), vec![0, 1, 2, 3]);
    }

    #[test]
    fn bundle_round_trip() {
        let inst = build_benchmark(&[video("a", 5), video("b", 7)], &DEFAULT_FRACTIONS, vocab()).unwrap();
        assert_eq!(inst.len(), 8);
        let text = write_instances(&inst).unwrap();
        assert_eq!(read_instances(&text).unwrap(), inst);
    }
}
