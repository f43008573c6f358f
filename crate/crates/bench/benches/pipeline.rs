use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use lsa_bench::{long_videos, scored_instances};
use lsa_core::eval::{corpus_recall_at_k, mean_recall_at_k, Aggregation, VideoPair};
use lsa_core::fixtures::{broom_sweep_instance, model_responses};
use lsa_core::graph::GraphSequence;
use lsa_core::parse_llm::{parse_goa_response, parse_oora_response, ParseOptions};
use lsa_core::prompts::{build_goa_prompt, build_oora_prompt};
use lsa_core::text::{parse_frame_text, serialize_sequence};
use lsa_core::vocab::Vocabulary;

fn merge(c: &mut Criterion) {
    let v = Vocabulary::action_genome();
    let videos = long_videos(50, 200);
    c.bench_function("merge 50x200 frames", |b| {
        b.iter(|| {
            for frames in &videos {
                black_box(GraphSequence::merge("v", frames).unwrap());
            }
        })
    });
    let seqs: Vec<GraphSequence> = videos.iter().map(|f| GraphSequence::merge("v", f).unwrap()).collect();
    c.bench_function("serialize 50 sequences", |b| {
        b.iter(|| {
            for s in &seqs {
                black_box(serialize_sequence(s, v).unwrap());
            }
        })
    });
    let texts: Vec<String> = seqs.iter().map(|s| serialize_sequence(s, v).unwrap()).collect();
    c.bench_function("parse 50 sequences", |b| {
        b.iter(|| {
            for t in &texts {
                black_box(parse_frame_text(t, v).unwrap());
            }
        })
    });
}

fn prompts(c: &mut Criterion) {
    let v = Vocabulary::action_genome();
    let inst = broom_sweep_instance();
    let future = inst.future.frame_ids();
    c.bench_function("render goa prompt", |b| {
        b.iter(|| black_box(build_goa_prompt(&inst.observed, &future, true, v).unwrap()))
    });
    c.bench_function("render oora prompt", |b| {
        b.iter(|| black_box(build_oora_prompt(&inst.observed, "broom", &future, true, v).unwrap()))
    });
}

fn parse(c: &mut Criterion) {
    let v = Vocabulary::action_genome();
    let r = model_responses("finetuned").unwrap();
    let future = [486, 499, 518];
    c.bench_function("parse goa response", |b| {
        b.iter(|| black_box(parse_goa_response(&r.goa, &future, v, ParseOptions::default()).unwrap()))
    });
    c.bench_function("parse oora response", |b| {
        b.iter(|| black_box(parse_oora_response(&r.oora["broom"], "broom", &future, v, ParseOptions::default()).unwrap()))
    });
}

fn recall(c: &mut Criterion) {
    let (_, preds, truths) = scored_instances(200);
    let pairs: Vec<VideoPair<'_>> = preds.iter().zip(&truths).map(|(p, t)| VideoPair { prediction: p, truth: t }).collect();
    c.bench_function("R@50 over 200 videos", |b| b.iter(|| black_box(corpus_recall_at_k(&pairs, 50, Aggregation::Macro))));
    c.bench_function("mR@50 over 200 videos", |b| b.iter(|| black_box(mean_recall_at_k(&pairs, 50, Aggregation::Macro))));
}

criterion_group!(benches, merge, prompts, parse, recall);
criterion_main!(benches);
