//! Subcommand implementations. Tables go to stdout, logs to stderr, and every
//! written file gets a manifest beside it.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{bail, Context};
use lsa_core::benchmark::{
    benchmark_stats, build_benchmark, inject_noise, load_corpus, oracle_ceiling, read_instances, write_instances,
    LsaInstance, NoiseKind, NoiseSpec, VideoRecord,
};
use lsa_core::eval::{evaluate, fraction_key, match_records, RecallSummary, VideoPair};
use lsa_core::graph::FrameGraph;
use lsa_core::llm::{Client, CompletionBackend, EchoLastFrame, FixtureBackend, HttpBackend};
use lsa_core::losses::{export_token_weights, score_transition_consistency, TransitionScore};
use lsa_core::pipeline::{anticipate_all, read_records, write_records, PredictionRecord};
use lsa_core::prompts::{build_goa_prompt, build_oora_prompt, truncate_to_budget, CharHeuristic, PromptBundle};
use lsa_core::report::{pct, Table};
use lsa_core::{fixtures, synthetic, Vocabulary};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::cli::{
    AnticipateArgs, BenchCmd, Cli, Command, EvalCmd, EvalInputs, Format, LossCmd, PromptCmd, RunCmd, ScoreArgs, Stage,
    SynthKind,
};
use crate::config::{pick_path, require_file, require_parent, MockKind, RunConfig};
use crate::manifest::Manifest;
use crate::UsageError;

fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError::new(msg).into()
}

fn read_text(path: &Path, what: &str) -> anyhow::Result<String> {
    require_file(path, what)?;
    std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn read_bundle(path: &Path) -> anyhow::Result<Vec<LsaInstance>> {
    let text = read_text(path, "benchmark bundle")?;
    read_instances(&text).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn read_predictions(path: &Path) -> anyhow::Result<Vec<PredictionRecord>> {
    let text = read_text(path, "predictions")?;
    read_records(&text).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn read_corpus(path: &Path) -> anyhow::Result<Vec<VideoRecord>> {
    let text = read_text(path, "corpus")?;
    load_corpus(&text).map_err(|e| usage(format!("{}: {e}", path.display())))
}

/// Writes `contents` to `out` and a manifest beside it.
fn write_output(out: &Path, contents: &str, command: &str, cfg: &RunConfig, inputs: &[&Path]) -> anyhow::Result<()> {
    std::fs::write(out, contents).with_context(|| format!("writing {}", out.display()))?;
    Manifest::new(command, cfg, inputs, &[out])?.write_beside(out)?;
    log::info!("wrote {}", out.display());
    Ok(())
}

/// Writes to stdout; a closed pipe ends the process quietly.
fn emit(text: &str) -> anyhow::Result<()> {
    use std::io::Write;
    let mut out = std::io::stdout().lock();
    match out.write_all(text.as_bytes()).and_then(|_| out.flush()) {
        Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => std::process::exit(crate::EXIT_OK),
        r => Ok(r?),
    }
}

fn print_report<T: Serialize>(table: &Table, value: &T, format: Format) -> anyhow::Result<()> {
    match format {
        Format::Table => emit(&table.to_string()),
        Format::Csv => emit(&table.to_csv()),
        Format::Json => emit(&(serde_json::to_string_pretty(value)? + "\n")),
    }
}

fn apply_score_args(cfg: &mut RunConfig, score: &ScoreArgs) {
    if let Some(ks) = &score.k {
        cfg.ks = ks.clone();
    }
    if let Some(agg) = score.aggregation {
        cfg.aggregation = agg;
    }
}

pub fn run(cli: Cli) -> anyhow::Result<()> {
    let cfg = RunConfig::load_or_default(cli.config.as_deref())?;
    let vocab = Vocabulary::action_genome();
    match cli.command {
        Command::Bench(cmd) => bench(cmd, cfg, vocab),
        Command::Prompt(PromptCmd::Render {
            benchmark,
            video,
            fraction,
            stage,
            object,
            one_shot,
            budget,
            out_dir,
        }) => {
            let bench = pick_path(benchmark, &cfg.paths.benchmark, "benchmark bundle")?;
            if let Some(dir) = &out_dir {
                if !dir.is_dir() {
                    bail!(usage(format!("output directory does not exist: {}", dir.display())));
                }
            }
            let instances = read_bundle(&bench)?;
            let inst = instances
                .iter()
                .find(|i| {
                    video.as_ref().is_none_or(|v| *v == i.video_id)
                        && fraction.is_none_or(|f| fraction_key(f) == fraction_key(i.fraction))
                })
                .ok_or_else(|| usage("no instance matches the given video/fraction"))?;
            let one_shot = one_shot || cfg.one_shot;
            let budget = budget.or(cfg.prompt_budget);
            let prompts = render_prompts(inst, stage, &object, one_shot, budget, vocab)?;
            for (name, bundle) in &prompts {
                match &out_dir {
                    Some(dir) => {
                        let path = dir.join(format!("{name}.txt"));
                        write_output(&path, &bundle.text, "prompt render", &cfg, &[&bench])?;
                    }
                    None => emit(&format!("=== {name} ({}) ===\n{}\n\n", bundle.hash(), bundle.text))?,
                }
                if bundle.dropped_segments > 0 {
                    log::warn!("{name}: dropped {} oldest segments to fit the budget", bundle.dropped_segments);
                }
            }
            Ok(())
        }
        Command::Run(RunCmd::Anticipate(args)) => run_anticipate(args, cfg, vocab),
        Command::Eval(cmd) => eval(cmd, cfg),
        Command::Loss(cmd) => loss(cmd, cfg),
    }
}

fn render_prompts(
    inst: &LsaInstance,
    stage: Stage,
    objects: &[String],
    one_shot: bool,
    budget: Option<usize>,
    vocab: &Vocabulary,
) -> anyhow::Result<Vec<(String, PromptBundle)>> {
    let future = inst.future_frame_ids();
    let fit = |b: PromptBundle| -> anyhow::Result<PromptBundle> {
        match budget {
            Some(n) => truncate_to_budget(&b, n, &CharHeuristic).map_err(|e| usage(e.to_string())),
            None => Ok(b),
        }
    };
    match stage {
        Stage::Goa => {
            let b = build_goa_prompt(&inst.observed, &future, one_shot, vocab).map_err(|e| usage(e.to_string()))?;
            Ok(vec![("goa".into(), fit(b)?)])
        }
        Stage::Oora => {
            let targets: Vec<String> = if objects.is_empty() {
                inst.observed
                    .last_frame()
                    .map(|f| f.object_names().map(String::from).collect())
                    .unwrap_or_default()
            } else {
                objects.to_vec()
            };
            targets
                .iter()
                .map(|o| {
                    let b = build_oora_prompt(&inst.observed, o, &future, one_shot, vocab)
                        .map_err(|e| usage(format!("{o}: {e}")))?;
                    Ok((format!("oora_{o}"), fit(b)?))
                })
                .collect()
        }
    }
}

/// Per-instance seed, independent of bundle order.
fn instance_seed(seed: u64, inst: &LsaInstance) -> u64 {
    let digest = Sha256::digest(format!("{seed}:{}:{}", inst.video_id, fraction_key(inst.fraction)));
    u64::from_le_bytes(digest[..8].try_into().expect("8 bytes"))
}

fn bench(cmd: BenchCmd, mut cfg: RunConfig, vocab: &Vocabulary) -> anyhow::Result<()> {
    match cmd {
        BenchCmd::Build { corpus, fractions, out } => {
            if let Some(f) = fractions {
                cfg.fractions = f;
            }
            cfg.validate()?;
            let corpus_path = pick_path(corpus, &cfg.paths.corpus, "corpus")?;
            let out = pick_path(out, &cfg.paths.benchmark, "benchmark output path")?;
            require_parent(&out)?;
            let corpus = read_corpus(&corpus_path)?;
            let instances = build_benchmark(&corpus, &cfg.fractions, vocab).map_err(|e| usage(e.to_string()))?;
            write_output(&out, &write_instances(&instances)?, "bench build", &cfg, &[&corpus_path])?;
            eprintln!("{} instances written to {}", instances.len(), out.display());
            Ok(())
        }
        BenchCmd::Stats { corpus, benchmark, score } => {
            apply_score_args(&mut cfg, &score);
            cfg.validate()?;
            let corpus_path = pick_path(corpus, &cfg.paths.corpus, "corpus")?;
            if let Some(out) = &score.out {
                require_parent(out)?;
            }
            let corpus = read_corpus(&corpus_path)?;
            let bench_path = benchmark.or_else(|| cfg.paths.benchmark.clone());
            let instances = match &bench_path {
                Some(p) => read_bundle(p)?,
                None => build_benchmark(&corpus, &cfg.fractions, vocab).map_err(|e| usage(e.to_string()))?,
            };
            let stats =
                benchmark_stats(&corpus, &instances, &cfg.ks, cfg.aggregation).map_err(|e| usage(e.to_string()))?;
            print_report(&stats.table(), &stats, score.format)?;
            if let Some(out) = &score.out {
                let mut inputs = vec![corpus_path.as_path()];
                inputs.extend(bench_path.as_deref());
                write_output(out, &(serde_json::to_string_pretty(&stats)? + "\n"), "bench stats", &cfg, &inputs)?;
            }
            Ok(())
        }
        BenchCmd::Oracle { benchmark, score } => {
            apply_score_args(&mut cfg, &score);
            cfg.validate()?;
            let bench_path = pick_path(benchmark, &cfg.paths.benchmark, "benchmark bundle")?;
            if let Some(out) = &score.out {
                require_parent(out)?;
            }
            let instances = read_bundle(&bench_path)?;
            let mut groups: BTreeMap<String, Vec<LsaInstance>> = BTreeMap::new();
            for i in instances {
                groups.entry(fraction_key(i.fraction)).or_default().push(i);
            }
            let ceilings: BTreeMap<String, BTreeMap<usize, Option<f64>>> = groups
                .iter()
                .map(|(f, g)| (f.clone(), cfg.ks.iter().map(|&k| (k, oracle_ceiling(g, k, cfg.aggregation))).collect()))
                .collect();
            let mut table = Table::new(std::iter::once("F".to_string()).chain(cfg.ks.iter().map(|k| format!("ceil@{k}"))));
            for (f, row) in &ceilings {
                table.push(std::iter::once(f.clone()).chain(row.values().map(|v| pct(*v))));
            }
            print_report(&table, &ceilings, score.format)?;
            if let Some(out) = &score.out {
                write_output(out, &(serde_json::to_string_pretty(&ceilings)? + "\n"), "bench oracle", &cfg, &[&bench_path])?;
            }
            Ok(())
        }
        BenchCmd::Noise { benchmark, kind, range, rate, seed, out } => {
            if let Some(s) = seed {
                cfg.seed = s;
            }
            let bench_path = pick_path(benchmark, &cfg.paths.benchmark, "benchmark bundle")?;
            require_parent(&out)?;
            let instances = read_bundle(&bench_path)?;
            let mut noisy = Vec::with_capacity(instances.len());
            let (mut perturbed, mut changed, mut error_rate) = (0usize, 0usize, 0.0);
            for inst in &instances {
                let spec = NoiseSpec { kind, range, rate, seed: instance_seed(cfg.seed, inst) };
                let outcome = inject_noise(inst, &spec, vocab).map_err(|e| usage(e.to_string()))?;
                if let Some(w) = &outcome.warning {
                    log::warn!("{} @ {}: {w}", inst.video_id, fraction_key(inst.fraction));
                }
                perturbed += outcome.perturbed.len();
                changed += outcome.changed;
                error_rate += outcome.frame_error_rate;
                noisy.push(outcome.instance);
            }
            write_output(&out, &write_instances(&noisy)?, "bench noise", &cfg, &[&bench_path])?;
            let mut table = Table::new(["noise", "range", "rate", "instances", "frames perturbed", "objects changed", "frame error"]);
            table.push([
                kind.to_string(),
                format!("{}-{}", range.0, range.1),
                rate.to_string(),
                noisy.len().to_string(),
                perturbed.to_string(),
                changed.to_string(),
                pct((!noisy.is_empty()).then(|| error_rate / noisy.len() as f64)),
            ]);
            emit(&table.to_string())?;
            Ok(())
        }
        BenchCmd::Synth { kind, videos, seed, out } => {
            require_parent(&out)?;
            if videos == 0 {
                bail!(usage("--videos must be positive"));
            }
            let corpus = match kind {
                SynthKind::Continuity => synthetic::continuity_corpus(videos),
                SynthKind::Dynamics => synthetic::dynamics_corpus(),
                SynthKind::Random => synthetic::random_corpus(seed.unwrap_or(cfg.seed), videos, 30, vocab),
                SynthKind::Example => fixtures::broom_sweep_corpus(),
            };
            let mut text = String::new();
            for r in &corpus {
                text.push_str(&serde_json::to_string(r)?);
                text.push('\n');
            }
            write_output(&out, &text, "bench synth", &cfg, &[])?;
            eprintln!("{} videos written to {}", corpus.len(), out.display());
            Ok(())
        }
    }
}

fn select_instances(instances: Vec<LsaInstance>, args: &AnticipateArgs) -> Vec<LsaInstance> {
    let videos: BTreeSet<&str> = args.video.iter().map(String::as_str).collect();
    let selected = instances.into_iter().filter(|i| {
        (videos.is_empty() || videos.contains(i.video_id.as_str()))
            && args.fraction.is_none_or(|f| fraction_key(f) == fraction_key(i.fraction))
    });
    match args.limit {
        Some(n) => selected.take(n).collect(),
        None => selected.collect(),
    }
}

fn run_anticipate(args: AnticipateArgs, mut cfg: RunConfig, vocab: &Vocabulary) -> anyhow::Result<()> {
    if let Some(m) = args.mode {
        cfg.mode = m;
    }
    if args.mock.is_some() {
        cfg.mock = args.mock;
    }
    if let Some(m) = &args.fixture_model {
        cfg.fixture_model = m.clone();
    }
    if args.fixture.is_some() {
        cfg.paths.fixture = args.fixture.clone();
    }
    if let Some(p) = args.parallelism {
        cfg.parallelism = p;
    }
    cfg.one_shot |= args.one_shot;
    if args.request_log.is_some() {
        cfg.paths.request_log = args.request_log.clone();
    }
    if let Some(m) = &args.model {
        cfg.decode.model = m.clone();
    }
    if let Some(e) = &args.endpoint {
        cfg.decode.endpoint = e.clone();
    }
    if let Some(t) = args.temperature {
        cfg.decode.temperature = t;
    }
    if let Some(p) = args.top_p {
        cfg.decode.top_p = p;
    }
    cfg.validate()?;

    let bench_path = pick_path(args.benchmark.clone(), &cfg.paths.benchmark, "benchmark bundle")?;
    let out = pick_path(args.out.clone(), &cfg.paths.predictions, "predictions output path")?;
    require_parent(&out)?;
    if let Some(log_path) = &cfg.paths.request_log {
        require_parent(log_path)?;
    }
    if let (Some(MockKind::Fixture), Some(p)) = (cfg.mock, &cfg.paths.fixture) {
        require_file(p, "fixture file")?;
    }
    let instances = select_instances(read_bundle(&bench_path)?, &args);
    if instances.is_empty() {
        bail!(usage("no instances selected"));
    }

    let backend: Arc<dyn CompletionBackend> = match cfg.mock {
        Some(MockKind::EchoLastFrame) => Arc::new(EchoLastFrame::new(vocab.clone())),
        Some(MockKind::Fixture) => match &cfg.paths.fixture {
            Some(p) => Arc::new(
                FixtureBackend::from_json(&read_text(p, "fixture file")?)
                    .map_err(|e| usage(format!("{}: {e}", p.display())))?,
            ),
            None => Arc::new(
                fixtures::fixture_backend(&cfg.fixture_model, &instances, vocab)
                    .ok_or_else(|| usage(format!("no bundled outputs for model `{}`", cfg.fixture_model)))?,
            ),
        },
        None => Arc::new(HttpBackend::from_env(&cfg.decode)?),
    };
    let mut client = Client::new(backend, cfg.decode.clone(), cfg.parallelism);
    if let Some(log_path) = &cfg.paths.request_log {
        let file = File::create(log_path).with_context(|| format!("creating {}", log_path.display()))?;
        client = client.with_log(Box::new(BufWriter::new(file)));
    }

    let records = anticipate_all(&instances, cfg.mode, &client, &cfg.anticipate(), vocab, cfg.parallelism)?;
    let stats = client.stats();
    drop(client);

    let mut inputs: Vec<&Path> = vec![&bench_path];
    if cfg.mock == Some(MockKind::Fixture) {
        inputs.extend(cfg.paths.fixture.as_deref());
    }
    write_output(&out, &write_records(&records)?, "run anticipate", &cfg, &inputs)?;

    let requests: usize = records.iter().map(|r| r.provenance.requests).sum();
    let fallbacks = records.iter().filter(|r| r.diagnostics.goa_fallback).count();
    let failures: usize = records.iter().map(|r| r.diagnostics.oora_failures.len()).sum();
    let latency: u64 = records.iter().map(|r| r.provenance.latency_ms).sum();
    let mut table = Table::new(["mode", "instances", "requests", "goa fallbacks", "oora failures", "latency ms"]);
    table.push([
        cfg.mode.to_string(),
        records.len().to_string(),
        requests.to_string(),
        fallbacks.to_string(),
        failures.to_string(),
        latency.to_string(),
    ]);
    emit(&table.to_string())?;
    if stats.succeeded == 0 {
        if let Some(e) = stats.last_error {
            return Err(anyhow::Error::from(e).context(format!("all {} completion requests failed", stats.failed)));
        }
    }
    Ok(())
}

fn load_pairs(
    predictions: Option<PathBuf>,
    benchmark: Option<PathBuf>,
    cfg: &RunConfig,
) -> anyhow::Result<(PathBuf, PathBuf, Vec<PredictionRecord>, Vec<LsaInstance>)> {
    let pred_path = pick_path(predictions, &cfg.paths.predictions, "predictions")?;
    let bench_path = pick_path(benchmark, &cfg.paths.benchmark, "benchmark bundle")?;
    let records = read_predictions(&pred_path)?;
    let instances = read_bundle(&bench_path)?;
    let matched = match_records(&records, &instances).len();
    if matched < records.len() {
        log::warn!("{} prediction records have no matching instance", records.len() - matched);
    }
    if matched == 0 {
        bail!(usage("no prediction matches an instance of the bundle"));
    }
    Ok((pred_path, bench_path, records, instances))
}

fn eval(cmd: EvalCmd, mut cfg: RunConfig) -> anyhow::Result<()> {
    let (inputs, which, name) = match cmd {
        EvalCmd::Recall(i) => (i, 0, "eval recall"),
        EvalCmd::Objects(i) => (i, 1, "eval objects"),
        EvalCmd::Relations(i) => (i, 2, "eval relations"),
        EvalCmd::Robustness { benchmark, clean, noisy, aggregation, format, out } => {
            if let Some(a) = aggregation {
                cfg.aggregation = a;
            }
            return robustness(benchmark, clean, &noisy, format, out, &cfg);
        }
    };
    let EvalInputs { predictions, benchmark, score } = inputs;
    apply_score_args(&mut cfg, &score);
    cfg.validate()?;
    if let Some(out) = &score.out {
        require_parent(out)?;
    }
    let (pred_path, bench_path, records, instances) = load_pairs(predictions, benchmark, &cfg)?;
    let report = evaluate(&records, &instances, &cfg.ks, cfg.aggregation);
    let table = match which {
        0 => report.recall_table(),
        1 => report.objects_table(),
        _ => report.relations_table(),
    };
    print_report(&table, &report, score.format)?;
    if let Some(out) = &score.out {
        write_output(out, &(serde_json::to_string_pretty(&report)? + "\n"), name, &cfg, &[&pred_path, &bench_path])?;
    }
    Ok(())
}

/// `kind:lo-hi:rate=path`, rate as a fraction or a percentage.
pub fn parse_noisy_spec(s: &str) -> anyhow::Result<(NoiseKind, (f64, f64), f64, PathBuf)> {
    let bad = || usage(format!("noisy run `{s}` is not kind:lo-hi:rate=path"));
    let (spec, path) = s.split_once('=').ok_or_else(bad)?;
    let mut parts = spec.split(':');
    let (Some(kind), Some(range), Some(rate), None) = (parts.next(), parts.next(), parts.next(), parts.next()) else {
        return Err(bad());
    };
    let kind: NoiseKind = kind.parse().map_err(|e| usage(format!("`{s}`: {e}")))?;
    let range = crate::cli::parse_range(range).map_err(usage)?;
    let rate = match rate.strip_suffix('%') {
        Some(p) => p.parse::<f64>().map(|v| v / 100.0),
        None => rate.parse::<f64>(),
    }
    .map_err(|e| usage(format!("`{s}`: rate: {e}")))?;
    if path.is_empty() {
        return Err(bad());
    }
    Ok((kind, range, rate, PathBuf::from(path)))
}

fn summarize(records: &[PredictionRecord], instances: &[LsaInstance], cfg: &RunConfig) -> anyhow::Result<RecallSummary> {
    let matched = match_records(records, instances);
    let fractions: BTreeSet<String> = matched.iter().map(|(r, _)| fraction_key(r.fraction)).collect();
    if fractions.len() > 1 {
        bail!(usage(format!(
            "robustness compares runs at one fraction, found {}",
            fractions.into_iter().collect::<Vec<_>>().join(", ")
        )));
    }
    let truths: Vec<Vec<FrameGraph>> = matched.iter().map(|(_, i)| i.future.expand()).collect();
    let pairs: Vec<VideoPair<'_>> = matched
        .iter()
        .zip(&truths)
        .map(|((r, _), t)| VideoPair { prediction: &r.future, truth: t })
        .collect();
    Ok(RecallSummary::compute(&pairs, &[10, 50], cfg.aggregation))
}

fn robustness(
    benchmark: Option<PathBuf>,
    clean: PathBuf,
    noisy: &[String],
    format: Format,
    out: Option<PathBuf>,
    cfg: &RunConfig,
) -> anyhow::Result<()> {
    let specs = noisy.iter().map(|s| parse_noisy_spec(s)).collect::<anyhow::Result<Vec<_>>>()?;
    if let Some(o) = &out {
        require_parent(o)?;
    }
    let (clean_path, bench_path, clean_records, instances) = load_pairs(Some(clean), benchmark, cfg)?;
    let clean_summary = summarize(&clean_records, &instances, cfg)?;
    let mut runs = Vec::with_capacity(specs.len());
    for (kind, range, rate, path) in &specs {
        let records = read_predictions(path)?;
        let spec = NoiseSpec { kind: *kind, range: *range, rate: *rate, seed: cfg.seed };
        spec.validate().map_err(|e| usage(e.to_string()))?;
        runs.push((spec, summarize(&records, &instances, cfg)?));
    }
    let table = lsa_core::eval::robustness_delta(&clean_summary, &runs);
    print_report(&table.table(), &table, format)?;
    if let Some(o) = &out {
        let mut inputs: Vec<&Path> = vec![&clean_path, &bench_path];
        inputs.extend(specs.iter().map(|s| s.3.as_path()));
        write_output(o, &(serde_json::to_string_pretty(&table)? + "\n"), "eval robustness", cfg, &inputs)?;
    }
    Ok(())
}

#[derive(Serialize)]
struct ScoredVideo {
    video_id: String,
    fraction: f64,
    score: TransitionScore,
}

#[derive(Serialize)]
struct TransitionReport {
    videos: Vec<ScoredVideo>,
    skipped: Vec<String>,
    mean: Option<f64>,
}

fn loss(cmd: LossCmd, mut cfg: RunConfig) -> anyhow::Result<()> {
    match cmd {
        LossCmd::ScoreTransitions { predictions, benchmark, tau, delta, gate, format, out } => {
            if let Some(t) = tau {
                cfg.loss.tau = t;
            }
            if let Some(d) = delta {
                cfg.loss.delta = d;
            }
            if let Some(g) = gate {
                cfg.loss.gate = g;
            }
            cfg.validate()?;
            if let Some(o) = &out {
                require_parent(o)?;
            }
            let (pred_path, bench_path, records, instances) = load_pairs(predictions, benchmark, &cfg)?;
            let mut report = TransitionReport { videos: Vec::new(), skipped: Vec::new(), mean: None };
            for (r, inst) in match_records(&records, &instances) {
                let truth = inst.future.expand();
                match score_transition_consistency(&r.future, &truth, &cfg.loss) {
                    Ok(score) => report.videos.push(ScoredVideo {
                        video_id: r.video_id.clone(),
                        fraction: r.fraction,
                        score,
                    }),
                    Err(e) => {
                        log::warn!("{}: {e}", r.video_id);
                        report.skipped.push(r.video_id.clone());
                    }
                }
            }
            let valid: Vec<f64> = report
                .videos
                .iter()
                .filter(|v| !v.score.no_valid_relations)
                .map(|v| v.score.aggregate)
                .collect();
            report.mean = (!valid.is_empty()).then(|| valid.iter().sum::<f64>() / valid.len() as f64);
            let mut table = Table::new(["video", "F", "tracks", "scored", "loss"]);
            for v in &report.videos {
                let scored = v.score.per_relation.iter().filter(|p| p.score.is_some()).count();
                table.push([
                    v.video_id.clone(),
                    fraction_key(v.fraction),
                    v.score.per_relation.len().to_string(),
                    scored.to_string(),
                    if v.score.no_valid_relations { "n/a".into() } else { format!("{:.6}", v.score.aggregate) },
                ]);
            }
            table.push([
                "mean".to_string(),
                String::new(),
                String::new(),
                String::new(),
                report.mean.map_or_else(|| "n/a".into(), |m| format!("{m:.6}")),
            ]);
            print_report(&table, &report, format)?;
            if let Some(o) = &out {
                write_output(o, &(serde_json::to_string_pretty(&report)? + "\n"), "loss score-transitions", &cfg, &[&pred_path, &bench_path])?;
            }
            Ok(())
        }
        LossCmd::ExportWeights { n, horizon, beta, token_counts, out } => {
            if let Some(b) = beta {
                cfg.loss.beta = b;
            }
            cfg.validate()?;
            if let Some(o) = &out {
                require_parent(o)?;
            }
            let weights =
                export_token_weights(n, horizon, cfg.loss.beta, &token_counts).map_err(|e| usage(e.to_string()))?;
            let text = serde_json::to_string_pretty(&weights)? + "\n";
            match &out {
                Some(o) => write_output(o, &text, "loss export-weights", &cfg, &[])?,
                None => emit(&text)?,
            }
            Ok(())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn noisy_specs() {
        let (kind, range, rate, path) = parse_noisy_spec("drop:0.6-0.9:15%=runs/a.jsonl").unwrap();
        assert_eq!(kind, NoiseKind::Drop);
        assert_eq!(range, (0.6, 0.9));
        assert!((rate - 0.15).abs() < 1e-12);
        assert_eq!(path, PathBuf::from("runs/a.jsonl"));
        assert_eq!(parse_noisy_spec("modify:0-1:0.3=x").unwrap().2, 0.3);
        for bad in ["drop:0-1=x", "blur:0-1:0.1=x", "drop:0-1:0.1=", "drop:01:0.1=x", "drop:0-1:0.1"] {
            assert!(parse_noisy_spec(bad).is_err(), "{bad}");
        }
    }
}
