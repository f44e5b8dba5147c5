use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use relcorpus::augment::{augment_corpus, AugmentReport};
use relcorpus::corpus::{
    parse_semeval_file, read_jsonl, write_jsonl, write_semeval, Corpus, RawSentence, TaggedSentence,
};
use relcorpus::fusion::export_marked;
use relcorpus::repair::{run_repair, validate, FateCounts, RepairReport, ReplacementList};
use relcorpus::score::{
    per_relation_report, read_prediction_jsonl, read_prediction_tsv, score, PredictionSet,
};
use relcorpus::translate::mock::IdentityBackend;
use relcorpus::translate::{HttpBackend, RecordingBackend, ReplayBackend, TranslationBackend};
use serde_json::{json, Value};

use crate::config::{BackendKind, Format, PipelineConfig};
use crate::manifest::{file_sha256, sha256_hex, FileDigest, Manifest, Staging};

/// One command invocation: the effective config and bookkeeping for the
/// manifest.
pub struct Run {
    pub command: &'static str,
    pub args: Vec<String>,
    pub config: PipelineConfig,
    pub started_at: String,
}

impl Run {
    fn staging(&self, inputs: &[PathBuf]) -> Result<Staging> {
        Staging::new(&self.config.out, inputs)
    }

    fn finish(
        self,
        staging: Staging,
        inputs: &[PathBuf],
        counts: Value,
        extra_outputs: Vec<FileDigest>,
    ) -> Result<()> {
        let out_dir = staging.dir().to_path_buf();
        let mut outputs = staging.commit()?;
        outputs.extend(extra_outputs);
        let inputs = inputs
            .iter()
            .map(|p| {
                Ok(FileDigest {
                    path: p.clone(),
                    sha256: file_sha256(p)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let config = serde_json::to_value(&self.config)?;
        let manifest = Manifest {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            command: self.command.to_string(),
            args: self.args,
            inputs,
            config_sha256: sha256_hex(serde_json::to_string(&config)?.as_bytes()),
            config,
            seed: self.config.effective_seed(),
            counts,
            outputs,
            started_at: self.started_at,
            finished_at: chrono::Utc::now().to_rfc3339(),
        };
        let path = manifest.write(&out_dir)?;
        eprintln!("manifest: {}", path.display());
        Ok(())
    }
}

fn stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "corpus".to_string())
}

fn load_raw(path: &Path) -> Result<Corpus<RawSentence>> {
    let mut corpus = match Format::of_path(path) {
        Format::Jsonl => load_tagged(path)?.to_raw(),
        Format::Semeval => {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading {}", path.display()))?;
            parse_semeval_file(&text).with_context(|| format!("in {}", path.display()))?
        }
    };
    corpus.meta.source = Some(path.to_path_buf());
    Ok(corpus)
}

fn load_tagged(path: &Path) -> Result<Corpus<TaggedSentence>> {
    let mut corpus = match Format::of_path(path) {
        Format::Jsonl => {
            let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
            read_jsonl(BufReader::new(file)).with_context(|| format!("in {}", path.display()))?
        }
        Format::Semeval => load_raw(path)?
            .bind_all()
            .with_context(|| format!("in {}", path.display()))?,
    };
    corpus.meta.source = Some(path.to_path_buf());
    Ok(corpus)
}

fn corpus_bytes(corpus: &Corpus<TaggedSentence>, format: Format) -> Result<Vec<u8>> {
    Ok(match format {
        Format::Jsonl => {
            let mut buf = Vec::new();
            write_jsonl(&mut buf, corpus)?;
            buf
        }
        Format::Semeval => write_semeval(corpus.to_raw().iter()).into_bytes(),
    })
}

fn jsonl_lines<T: serde::Serialize>(items: impl IntoIterator<Item = T>) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    for item in items {
        serde_json::to_writer(&mut buf, &item)?;
        buf.push(b'\n');
    }
    Ok(buf)
}

fn require_inputs(inputs: &[PathBuf]) -> Result<()> {
    if inputs.is_empty() {
        bail!("no input files (pass them as arguments or set `inputs` in the config)");
    }
    Ok(())
}

pub fn parse(run: Run) -> Result<()> {
    let inputs = run.config.inputs.clone();
    require_inputs(&inputs)?;
    let mut staging = run.staging(&inputs)?;
    let format = run.config.format;
    let mut counts = BTreeMap::new();
    for path in &inputs {
        let corpus = load_tagged(path)?;
        let name = format!("{}.parsed.{}", stem(path), format.extension());
        staging.write(&name, &corpus_bytes(&corpus, format)?)?;
        println!("{}: {} sentences", path.display(), corpus.len());
        counts.insert(path.display().to_string(), corpus.len());
    }
    run.finish(staging, &inputs, json!({ "sentences": counts }), vec![])
}

/// Lists tag faults; returns whether any were found.
pub fn validate_cmd(run: Run) -> Result<bool> {
    let inputs = run.config.inputs.clone();
    require_inputs(&inputs)?;
    let mut staging = run.staging(&inputs)?;
    let mut counts = BTreeMap::new();
    let mut any = false;
    for path in &inputs {
        let corpus = load_raw(path)?;
        let mut faults = Vec::new();
        let mut faulty = 0;
        let mut by_kind: BTreeMap<&str, usize> = BTreeMap::new();
        for raw in &corpus {
            let found = validate(raw);
            if !found.is_empty() {
                faulty += 1;
            }
            for f in &found {
                println!("{}:{}: {} {}", path.display(), f.id, f.code, f.detail);
                *by_kind.entry(f.code.kind()).or_default() += 1;
            }
            faults.extend(found);
        }
        println!(
            "{}: {} sentences, {} with faults",
            path.display(),
            corpus.len(),
            faulty
        );
        any |= faulty > 0;
        staging.write(
            &format!("{}.faults.jsonl", stem(path)),
            &jsonl_lines(&faults)?,
        )?;
        counts.insert(
            path.display().to_string(),
            json!({ "sentences": corpus.len(), "faulty": faulty, "faults": by_kind }),
        );
    }
    run.finish(staging, &inputs, json!(counts), vec![])?;
    Ok(any)
}

fn load_replacements(config: &PipelineConfig) -> Result<ReplacementList> {
    match &config.replacements {
        None => Ok(ReplacementList::new()),
        Some(path) => {
            let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
            ReplacementList::read_jsonl(BufReader::new(file))
                .with_context(|| format!("in {}", path.display()))
        }
    }
}

fn add_report(total: &mut RepairReport, report: &RepairReport) {
    total.counts.add(&report.counts);
    for (k, n) in &report.removed_by_fault {
        *total.removed_by_fault.entry(k.clone()).or_default() += n;
    }
    for (k, n) in &report.repaired_by_fault {
        *total.repaired_by_fault.entry(k.clone()).or_default() += n;
    }
}

fn repair_one(
    path: &Path,
    replacements: &ReplacementList,
    staging: &mut Staging,
    format: Format,
) -> Result<(Corpus<TaggedSentence>, RepairReport)> {
    let (repaired, report) = run_repair(&load_raw(path)?, replacements)
        .with_context(|| format!("in {}", path.display()))?;
    let name = stem(path);
    staging.write(
        &format!("{name}.repaired.{}", format.extension()),
        &corpus_bytes(&repaired, format)?,
    )?;
    staging.write_json(&format!("{name}.repair-report.json"), &report)?;
    println!("{}:\n{report}", path.display());
    Ok((repaired, report))
}

fn print_repair_total(total: &RepairReport, files: usize, unused: &BTreeSet<u64>) {
    if files > 1 {
        println!("total over {files} files:\n{total}");
    }
    if !unused.is_empty() {
        eprintln!("warning: replacement ids matched no sentence: {unused:?}");
    }
}

fn repair_counts(total: &RepairReport) -> Value {
    let FateCounts {
        kept,
        repaired,
        removed,
        replaced,
    } = total.counts;
    json!({
        "kept": kept,
        "repaired": repaired,
        "removed": removed,
        "replaced": replaced,
        "removed_by_fault": total.removed_by_fault,
        "repaired_by_fault": total.repaired_by_fault,
    })
}

pub fn repair(run: Run) -> Result<()> {
    let mut inputs = run.config.inputs.clone();
    require_inputs(&inputs)?;
    let replacements = load_replacements(&run.config)?;
    let mut staging = run.staging(&inputs)?;
    let mut total = RepairReport::default();
    let mut unused: Option<BTreeSet<u64>> = None;
    for path in &inputs {
        let (_, report) = repair_one(path, &replacements, &mut staging, run.config.format)?;
        add_report(&mut total, &report);
        let here: BTreeSet<u64> = report.unused_replacements.iter().copied().collect();
        unused = Some(match unused {
            None => here,
            Some(prev) => prev.intersection(&here).copied().collect(),
        });
    }
    print_repair_total(&total, inputs.len(), &unused.unwrap_or_default());
    inputs.extend(run.config.replacements.clone());
    let counts = repair_counts(&total);
    run.finish(staging, &inputs, counts, vec![])
}

/// The configured backend, wrapped in a recorder when a transcript path is
/// set (live HTTP always records, by default into the output directory).
fn build_backend(
    config: &PipelineConfig,
) -> Result<(Box<dyn TranslationBackend>, Option<PathBuf>)> {
    let t = &config.translate;
    let inner: Box<dyn TranslationBackend> = match t.backend {
        BackendKind::Replay => {
            let path = t
                .replay
                .as_ref()
                .context("replay backend needs a transcript")?;
            Box::new(
                ReplayBackend::from_path(path)
                    .with_context(|| format!("loading transcript {}", path.display()))?,
            )
        }
        BackendKind::Identity => Box::new(IdentityBackend),
        BackendKind::Http => Box::new(HttpBackend::new(t.endpoint.clone())?),
    };
    let record = match (&t.record, t.backend) {
        (Some(path), _) => Some(path.clone()),
        (None, BackendKind::Http) => Some(config.out.join("transcript.jsonl")),
        (None, _) => None,
    };
    match record {
        Some(path) if t.backend != BackendKind::Replay => {
            std::fs::create_dir_all(&config.out)?;
            let recorder = RecordingBackend::to_file(inner, &path)
                .with_context(|| format!("opening transcript {}", path.display()))?;
            Ok((Box::new(recorder), Some(path)))
        }
        _ => Ok((inner, None)),
    }
}

fn augment_one(
    path: &Path,
    corpus: &Corpus<TaggedSentence>,
    config: &PipelineConfig,
    backend: Option<&dyn TranslationBackend>,
    staging: &mut Staging,
) -> Result<(Corpus<TaggedSentence>, AugmentReport)> {
    let (augmented, report) = augment_corpus(corpus, &config.augment, backend)
        .with_context(|| format!("augmenting {}", path.display()))?;
    let name = stem(path);
    staging.write(
        &format!("{name}.augmented.{}", config.format.extension()),
        &corpus_bytes(&augmented, config.format)?,
    )?;
    staging.write_json(&format!("{name}.augment-report.json"), &report)?;
    let p = &report.produced;
    println!(
        "{}: {} -> {} sentences (orig {}, bt {}, del {}, swap {}; dropped {})",
        path.display(),
        report.input,
        report.output,
        p.orig,
        p.bt,
        p.del,
        p.swap,
        report
            .dropped
            .values()
            .flat_map(|m| m.values())
            .sum::<usize>()
    );
    Ok((augmented, report))
}

fn transcript_digest(path: Option<PathBuf>) -> Result<Vec<FileDigest>> {
    path.filter(|p| p.exists())
        .map(|p| {
            Ok(FileDigest {
                sha256: file_sha256(&p)?,
                path: p,
            })
        })
        .into_iter()
        .collect()
}

pub fn augment(run: Run) -> Result<()> {
    let mut inputs = run.config.inputs.clone();
    require_inputs(&inputs)?;
    let mut staging = run.staging(&inputs)?;
    let (backend, transcript) = if run.config.augment.backtranslate {
        let (b, t) = build_backend(&run.config)?;
        (Some(b), t)
    } else {
        (None, None)
    };
    let mut reports = BTreeMap::new();
    for path in &inputs {
        let corpus = load_tagged(path)?;
        let (_, report) =
            augment_one(path, &corpus, &run.config, backend.as_deref(), &mut staging)?;
        reports.insert(path.display().to_string(), report);
    }
    drop(backend);
    inputs.extend(run.config.translate.replay.clone());
    let extra = transcript_digest(transcript)?;
    run.finish(staging, &inputs, json!(reports), extra)
}

fn export_one(
    path: &Path,
    corpus: &Corpus<TaggedSentence>,
    max_tokens: Option<usize>,
    staging: &mut Staging,
) -> Result<Value> {
    let out = export_marked(corpus, max_tokens);
    let name = stem(path);
    staging.write(&format!("{name}.marked.jsonl"), &jsonl_lines(&out.records)?)?;
    staging.write(
        &format!("{name}.rejects.jsonl"),
        &jsonl_lines(&out.rejects)?,
    )?;
    println!(
        "{}: exported {}, truncated {}, rejected {}",
        path.display(),
        out.records.len(),
        out.truncated,
        out.rejects.len()
    );
    Ok(json!({
        "exported": out.records.len(),
        "truncated": out.truncated,
        "rejected": out.rejects.len(),
    }))
}

pub fn export(run: Run) -> Result<()> {
    let inputs = run.config.inputs.clone();
    require_inputs(&inputs)?;
    let mut staging = run.staging(&inputs)?;
    let mut counts = BTreeMap::new();
    for path in &inputs {
        let corpus = load_tagged(path)?;
        let c = export_one(path, &corpus, run.config.export.max_tokens, &mut staging)?;
        counts.insert(path.display().to_string(), c);
    }
    run.finish(staging, &inputs, json!(counts), vec![])
}

pub fn score_cmd(run: Run, gold: Option<PathBuf>, pred: PathBuf) -> Result<()> {
    let preds: PredictionSet = match &gold {
        Some(gold_path) => {
            let gold = load_tagged(gold_path)?;
            let file = File::open(&pred).with_context(|| format!("opening {}", pred.display()))?;
            read_prediction_tsv(&gold, BufReader::new(file))
                .with_context(|| format!("in {}", pred.display()))?
        }
        None => {
            let file = File::open(&pred).with_context(|| format!("opening {}", pred.display()))?;
            read_prediction_jsonl(BufReader::new(file))
                .with_context(|| format!("in {}", pred.display()))?
        }
    };
    let inputs: Vec<PathBuf> = gold.into_iter().chain([pred]).collect();
    let mut staging = run.staging(&inputs)?;
    let regime = run.config.score.regime();
    let report = score(&preds, regime);
    let relations = per_relation_report(&preds);
    let table = report.to_table();
    print!("{table}\n{relations}");
    println!("micro F1 = {:.4}", report.micro.f1);
    println!("macro F1 = {:.4}", report.macro_avg.f1);
    staging.write_json(
        "score.json",
        &json!({ "report": report, "relations": relations }),
    )?;
    staging.write("score.txt", format!("{table}\n{relations}").as_bytes())?;
    let counts = json!({
        "predictions": preds.len(),
        "micro_f1": report.micro.f1,
        "macro_f1": report.macro_avg.f1,
    });
    run.finish(staging, &inputs, counts, vec![])
}

/// repair → augment → export over each input.
pub fn pipeline(run: Run) -> Result<()> {
    let mut inputs = run.config.inputs.clone();
    require_inputs(&inputs)?;
    let replacements = load_replacements(&run.config)?;
    let mut staging = run.staging(&inputs)?;
    let (backend, transcript) = if run.config.augment.backtranslate {
        let (b, t) = build_backend(&run.config)?;
        (Some(b), t)
    } else {
        (None, None)
    };
    let mut total = RepairReport::default();
    let mut per_file = BTreeMap::new();
    for path in &inputs {
        let (repaired, rep) = repair_one(path, &replacements, &mut staging, run.config.format)?;
        add_report(&mut total, &rep);
        let (augmented, aug) = augment_one(
            path,
            &repaired,
            &run.config,
            backend.as_deref(),
            &mut staging,
        )?;
        let exported = export_one(path, &augmented, run.config.export.max_tokens, &mut staging)?;
        per_file.insert(
            path.display().to_string(),
            json!({ "repair": repair_counts(&rep), "augment": aug, "export": exported }),
        );
    }
    drop(backend);
    print_repair_total(&total, inputs.len(), &BTreeSet::new());
    inputs.extend(run.config.replacements.clone());
    inputs.extend(run.config.translate.replay.clone());
    let extra = transcript_digest(transcript)?;
    let counts = json!({ "total_repair": repair_counts(&total), "files": per_file });
    run.finish(staging, &inputs, counts, extra)
}
