//! The `sck` command line.
//!
//! Every subcommand reads and writes only the paths given by its flags and
//! prints a human-readable report, or JSON with `--json`. Exit status is 0
//! on success, 1 when inputs fail validation and 2 on usage errors.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::json;

use crate::analysis::{agreement_items, cohens_kappa, distance_histogram, error_report, AgreementItem};
use crate::augment::{
    generate_synthetic, paraphrase_corpus, AugmentOutcome, GenerationPlan, ParaphraseConfig,
    SyntheticConfig,
};
use crate::baselines::{parse_srl_file, run_llm_baseline, score_srl_baseline, LlmBaselineConfig};
use crate::chat::{ChatSettings, HttpChatClient, RetryPolicy, API_KEY_ENV};
use crate::error::{Error, Result};
use crate::eval::{aggregate_runs, parse_predictions, score_dataset, PredictionRecord, ScoreOptions};
use crate::ingest::{
    corpus_stats, parse_labelstudio_export, parse_markup_passage, split_dataset, split_markup_file,
    IngestConfig,
};
use crate::jsonl;
use crate::model::AnnotatedPassage;
use crate::promptgen::{emit_training_pairs, DecodedRecord};
use crate::prompts::PromptTemplates;

#[derive(Parser, Debug)]
#[command(name = "sck", version, about = "Scenario-context data toolkit")]
struct Cli {
    /// Print machine-readable JSON instead of tables.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Convert a LabelStudio export (or tagged text) into passage JSONL.
    Ingest(IngestArgs),
    /// Corpus statistics of a passage file.
    Stats(InputArgs),
    /// Seeded train/test split balanced on relation count.
    Split(SplitArgs),
    /// Write (input, target) training pairs.
    EmitTraining(EmitArgs),
    /// Paraphrase gold passages through an LLM.
    AugmentParaphrase(ParaphraseArgs),
    /// Generate tagged synthetic passages through an LLM.
    AugmentSynthetic(SyntheticArgs),
    /// Turn decoded model strings into parsed predictions.
    PredictParse(PredictParseArgs),
    /// Span- and token-level scores of predictions against gold.
    Score(ScoreArgs),
    /// Zero-shot LLM predictions for every gold event.
    BaselineLlm(BaselineLlmArgs),
    /// Score SRL modifier arguments against gold relations.
    BaselineSrl(BaselineSrlArgs),
    /// Error taxonomy of predictions.
    Errors(GoldPredArgs),
    /// Cohen's kappa between two annotators.
    Kappa(KappaArgs),
    /// Sentence distances between events and their contexts.
    Distances(DistancesArgs),
}

#[derive(Args, Debug)]
struct InputArgs {
    /// Passage JSONL.
    #[arg(long)]
    input: PathBuf,
}

#[derive(Args, Debug)]
struct IngestArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    output: PathBuf,
    /// Label mapping (TOML); the bundled mapping is used otherwise.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Treat the input as tagged text, passages separated by blank lines.
    #[arg(long)]
    markup: bool,
}

#[derive(Args, Debug)]
struct SplitArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    train_out: PathBuf,
    #[arg(long)]
    test_out: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 0.2)]
    test_fraction: f64,
}

#[derive(Args, Debug)]
struct EmitArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    output: PathBuf,
}

#[derive(Args, Debug)]
struct ChatArgs {
    /// Base URL of a chat-completions API. The key is read from
    /// SCK_LLM_API_KEY.
    #[arg(long, default_value = "https://api.openai.com/v1")]
    provider_url: String,
    #[arg(long, default_value = "gpt-4")]
    model: String,
    #[arg(long, default_value_t = 0.7)]
    temperature: f64,
    #[arg(long, default_value_t = 1024)]
    max_tokens: u32,
    #[arg(long, default_value_t = 4, value_parser = clap::value_parser!(u64).range(1..))]
    parallelism: u64,
    #[arg(long, default_value_t = 3)]
    retries: u32,
    /// Directory of prompt template overrides.
    #[arg(long)]
    templates: Option<PathBuf>,
}

impl ChatArgs {
    fn settings(&self) -> ChatSettings {
        ChatSettings {
            model_name: self.model.clone(),
            temperature: self.temperature,
            max_tokens: self.max_tokens,
        }
    }

    fn retry(&self) -> RetryPolicy {
        RetryPolicy {
            retries: self.retries,
            ..RetryPolicy::default()
        }
    }

    fn templates(&self) -> Result<PromptTemplates> {
        match &self.templates {
            Some(dir) => PromptTemplates::with_overrides(dir),
            None => Ok(PromptTemplates::default()),
        }
    }

    fn client(&self) -> HttpChatClient {
        if std::env::var(API_KEY_ENV).map_or(true, |k| k.is_empty()) {
            log::warn!("{API_KEY_ENV} is not set; sending requests without credentials");
        }
        HttpChatClient::from_env(&self.provider_url)
    }
}

#[derive(Args, Debug)]
struct ParaphraseArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    output: PathBuf,
    /// Free rephrasings per passage.
    #[arg(long, default_value_t = 1)]
    free: usize,
    #[arg(long)]
    no_substitute: bool,
    #[arg(long)]
    no_fixed_phrase: bool,
    /// Word replacement as WORD=REPLACEMENT; repeatable.
    #[arg(long = "replace", value_parser = parse_replacement)]
    replacements: Vec<(String, String)>,
    #[command(flatten)]
    chat: ChatArgs,
}

fn parse_replacement(raw: &str) -> std::result::Result<(String, String), String> {
    match raw.split_once('=') {
        Some((w, r)) if !w.trim().is_empty() && !r.trim().is_empty() => {
            Ok((w.trim().to_owned(), r.trim().to_owned()))
        }
        _ => Err(format!("expected WORD=REPLACEMENT, got '{raw}'")),
    }
}

#[derive(Args, Debug)]
struct SyntheticArgs {
    #[arg(long)]
    output: PathBuf,
    /// Generation plan (JSON); flags below override single fields.
    #[arg(long)]
    plan: Option<PathBuf>,
    /// Event type; repeatable.
    #[arg(long = "event-type")]
    event_types: Vec<String>,
    #[arg(long)]
    names: Option<usize>,
    #[arg(long)]
    roles: Option<usize>,
    /// Length phrase such as "one paragraph"; repeatable.
    #[arg(long = "length")]
    lengths: Vec<String>,
    #[arg(long)]
    loc_distractors: Option<usize>,
    #[arg(long)]
    tmp_distractors: Option<usize>,
    #[command(flatten)]
    chat: ChatArgs,
}

#[derive(Args, Debug)]
struct PredictParseArgs {
    /// Decoded JSONL: {passage_id, event_id, decoded}.
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    output: PathBuf,
}

#[derive(Args, Debug)]
struct ScoreArgs {
    #[arg(long)]
    gold: PathBuf,
    /// Prediction JSONL; repeat to average several runs.
    #[arg(long = "pred", required = true)]
    preds: Vec<PathBuf>,
    /// Average each type only over events with gold context of that type.
    #[arg(long)]
    only_gold_typed: bool,
}

#[derive(Args, Debug)]
struct BaselineLlmArgs {
    #[arg(long)]
    gold: PathBuf,
    #[arg(long)]
    output: PathBuf,
    #[command(flatten)]
    chat: ChatArgs,
}

#[derive(Args, Debug)]
struct BaselineSrlArgs {
    #[arg(long)]
    gold: PathBuf,
    /// SRL parse JSONL.
    #[arg(long)]
    parses: PathBuf,
}

#[derive(Args, Debug)]
struct GoldPredArgs {
    #[arg(long)]
    gold: PathBuf,
    #[arg(long)]
    pred: PathBuf,
}

#[derive(Args, Debug)]
struct KappaArgs {
    /// First annotator's passages.
    #[arg(long, requires = "b", conflicts_with = "items")]
    a: Option<PathBuf>,
    #[arg(long, requires = "a")]
    b: Option<PathBuf>,
    /// Pre-built items: {item_id, rater_a, rater_b} per line.
    #[arg(long, required_unless_present = "a")]
    items: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct DistancesArgs {
    #[arg(long)]
    input: PathBuf,
    /// Also write the histogram as CSV.
    #[arg(long)]
    csv: Option<PathBuf>,
}

/// Runs `sck` with the given arguments (program name first), printing to
/// stdout and stderr. Returns the exit status.
pub fn dispatch<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    dispatch_to(argv, &mut std::io::stdout(), &mut std::io::stderr())
}

/// [`dispatch`] with explicit output streams.
pub fn dispatch_to<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let rendered = e.render().to_string();
            let _ = if code == 0 {
                out.write_all(rendered.as_bytes())
            } else {
                err.write_all(rendered.as_bytes())
            };
            return code;
        }
    };
    match run(cli, out) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            1
        }
    }
}

struct Output<'a> {
    out: &'a mut dyn Write,
    json: bool,
}

impl Output<'_> {
    fn report<T: Serialize + ?Sized>(&mut self, value: &T, text: impl FnOnce() -> String) -> Result<()> {
        if self.json {
            let s = serde_json::to_string_pretty(value).expect("report serializes");
            writeln!(self.out, "{s}")?;
        } else {
            write!(self.out, "{}", text())?;
        }
        Ok(())
    }
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path)
        .map_err(|e| Error::InvalidInput(format!("cannot read {}: {e}", path.display())))
}

fn read_passages(path: &Path) -> Result<Vec<AnnotatedPassage>> {
    let passages: Vec<AnnotatedPassage> = jsonl::parse(&read_text(path)?, &path.display().to_string())?;
    let problems: Vec<String> = passages
        .iter()
        .flat_map(|p| {
            p.check_invariants()
                .into_iter()
                .map(move |m| format!("{}: {m}", p.passage_id))
        })
        .collect();
    if !problems.is_empty() {
        return Err(Error::InvalidInput(format!(
            "{}: {}",
            path.display(),
            problems.join("; ")
        )));
    }
    Ok(passages)
}

fn read_predictions(path: &Path) -> Result<Vec<PredictionRecord>> {
    parse_predictions(&read_text(path)?, &path.display().to_string())
}

fn write_jsonl<T: Serialize>(path: &Path, records: &[T]) -> Result<()> {
    jsonl::write(path, records)
        .map_err(|e| Error::InvalidInput(format!("cannot write {}: {e}", path.display())))
}

fn run(cli: Cli, out: &mut dyn Write) -> Result<()> {
    let mut o = Output { out, json: cli.json };
    match cli.command {
        Command::Ingest(a) => ingest(a, &mut o),
        Command::Stats(a) => {
            let stats = corpus_stats(&read_passages(&a.input)?);
            o.report(&stats, || stats.to_string())
        }
        Command::Split(a) => {
            let split = split_dataset(&read_passages(&a.input)?, a.seed, a.test_fraction)?;
            write_jsonl(&a.train_out, &split.train)?;
            write_jsonl(&a.test_out, &split.test)?;
            let summary = json!({
                "seed": split.seed,
                "test_fraction": split.test_fraction,
                "train_passages": split.train.len(),
                "test_passages": split.test.len(),
                "train_relations": split.train.iter().map(|p| p.relations.len()).sum::<usize>(),
                "test_relations": split.test_relations(),
            });
            o.report(&summary, || {
                format!(
                    "train: {} passages, test: {} passages ({} relations)\n",
                    split.train.len(),
                    split.test.len(),
                    split.test_relations()
                )
            })
        }
        Command::EmitTraining(a) => {
            let (pairs, skipped) = emit_training_pairs(&read_passages(&a.input)?);
            for s in &skipped {
                log::warn!("skipped {}/{}: {}", s.passage_id, s.event_id, s.reason);
            }
            write_jsonl(&a.output, &pairs)?;
            let summary = json!({"pairs": pairs.len(), "skipped": skipped});
            o.report(&summary, || {
                format!("{} training pairs, {} events skipped\n", pairs.len(), skipped.len())
            })
        }
        Command::AugmentParaphrase(a) => {
            let passages = read_passages(&a.input)?;
            let config = ParaphraseConfig {
                substitute_contexts: !a.no_substitute,
                fixed_phrase: !a.no_fixed_phrase,
                free_rephrasings: a.free,
                word_replacements: a.replacements.clone(),
                settings: a.chat.settings(),
                retry: a.chat.retry(),
                templates: a.chat.templates()?,
            };
            let client = a.chat.client();
            let outcome = paraphrase_corpus(&passages, &client, &config, a.chat.parallelism as usize);
            finish_augment(&a.output, outcome, &mut o)
        }
        Command::AugmentSynthetic(a) => {
            let mut plan = match &a.plan {
                Some(path) => serde_json::from_str(&read_text(path)?)
                    .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?,
                None => GenerationPlan::default(),
            };
            if !a.event_types.is_empty() {
                plan.event_types = a.event_types.clone();
            }
            if !a.lengths.is_empty() {
                plan.lengths = a.lengths.clone();
            }
            plan.names_per_type = a.names.unwrap_or(plan.names_per_type);
            plan.roles_per_type = a.roles.unwrap_or(plan.roles_per_type);
            plan.loc_distractors = a.loc_distractors.unwrap_or(plan.loc_distractors);
            plan.tmp_distractors = a.tmp_distractors.unwrap_or(plan.tmp_distractors);
            plan.validate()?;
            let config = SyntheticConfig {
                settings: a.chat.settings(),
                retry: a.chat.retry(),
                templates: a.chat.templates()?,
                parallelism: a.chat.parallelism as usize,
            };
            let outcome = generate_synthetic(&plan, &a.chat.client(), &config)?;
            finish_augment(&a.output, outcome, &mut o)
        }
        Command::PredictParse(a) => {
            let decoded: Vec<DecodedRecord> =
                jsonl::parse(&read_text(&a.input)?, &a.input.display().to_string())?;
            let records: Vec<PredictionRecord> = decoded.into_iter().map(Into::into).collect();
            let invalid = records.iter().filter(|r| !r.valid_parse).count();
            write_jsonl(&a.output, &records)?;
            let summary = json!({"records": records.len(), "invalid": invalid});
            o.report(&summary, || {
                format!("{} predictions, {invalid} unparseable\n", records.len())
            })
        }
        Command::Score(a) => {
            let gold = read_passages(&a.gold)?;
            let options = ScoreOptions {
                only_gold_typed: a.only_gold_typed,
            };
            let mut reports = Vec::new();
            for path in &a.preds {
                let outcome = score_dataset(&gold, &read_predictions(path)?, options)?;
                if !outcome.missing.is_empty() {
                    log::warn!(
                        "{}: {} gold events without prediction, scored as empty",
                        path.display(),
                        outcome.missing.len()
                    );
                }
                if !outcome.unmatched.is_empty() {
                    log::warn!(
                        "{}: {} predictions match no gold event",
                        path.display(),
                        outcome.unmatched.len()
                    );
                }
                reports.push(outcome.report);
            }
            let report = aggregate_runs(&reports)?;
            o.report(&report, || report.to_string())
        }
        Command::BaselineLlm(a) => {
            let gold = read_passages(&a.gold)?;
            let config = LlmBaselineConfig {
                settings: a.chat.settings(),
                retry: a.chat.retry(),
                templates: a.chat.templates()?,
                parallelism: a.chat.parallelism as usize,
            };
            let run = run_llm_baseline(&gold, &a.chat.client(), &config);
            write_jsonl(&a.output, &run.records)?;
            let summary = json!({"records": run.records.len(), "failures": run.failures});
            o.report(&summary, || {
                format!(
                    "{} predictions, {} failed requests\n",
                    run.records.len(),
                    run.failures.len()
                )
            })
        }
        Command::BaselineSrl(a) => {
            let gold = read_passages(&a.gold)?;
            let parses = parse_srl_file(&read_text(&a.parses)?, &a.parses.display().to_string())?;
            let score = score_srl_baseline(&gold, &parses)?;
            o.report(&score, || {
                let mut s = String::new();
                for (name, c, prf) in [
                    ("location", score.counts.location, score.prf.location),
                    ("temporal", score.counts.temporal, score.prf.temporal),
                ] {
                    s.push_str(&format!(
                        "{name:<9} TP={} FP={} FN={}  {prf}\n",
                        c.true_positives, c.false_positives, c.false_negatives
                    ));
                }
                s
            })
        }
        Command::Errors(a) => {
            let report = error_report(&read_passages(&a.gold)?, &read_predictions(&a.pred)?)?;
            o.report(&report, || report.to_string())
        }
        Command::Kappa(a) => {
            let items: Vec<AgreementItem> = match (&a.a, &a.b, &a.items) {
                (Some(pa), Some(pb), _) => agreement_items(&read_passages(pa)?, &read_passages(pb)?),
                (_, _, Some(path)) => jsonl::parse(&read_text(path)?, &path.display().to_string())?,
                _ => unreachable!("clap enforces --a/--b or --items"),
            };
            let kappa = cohens_kappa(&items)?;
            let summary = json!({"items": items.len(), "kappa": kappa});
            o.report(&summary, || format!("kappa = {kappa:.4} over {} items\n", items.len()))
        }
        Command::Distances(a) => {
            let hist = distance_histogram(&read_passages(&a.input)?);
            if let Some(path) = &a.csv {
                fs::write(path, hist.to_csv())
                    .map_err(|e| Error::InvalidInput(format!("cannot write {}: {e}", path.display())))?;
            }
            let summary = json!({
                "intra_sentential": hist.intra_sentential,
                "inter_sentential": hist.inter_sentential,
                "missing_offsets": hist.missing_offsets,
                "intersentential_fraction": hist.intersentential_fraction(),
            });
            o.report(&summary, || {
                let mut s = format!("{:<10}{:>8}\n", "distance", "count");
                s.push_str(&format!("{:<10}{:>8}\n", 0, hist.intra_sentential));
                for (d, n) in &hist.inter_sentential {
                    s.push_str(&format!("{d:<10}{n:>8}\n"));
                }
                s.push_str(&format!(
                    "inter-sentential fraction: {:.3}\n",
                    hist.intersentential_fraction()
                ));
                s
            })
        }
    }
}

fn ingest(a: IngestArgs, o: &mut Output) -> Result<()> {
    let (passages, skipped) = if a.markup {
        let raw = read_text(&a.input)?;
        let mut passages = Vec::new();
        let mut skipped = Vec::new();
        for (i, chunk) in split_markup_file(&raw).iter().enumerate() {
            match parse_markup_passage(chunk) {
                Ok(p) => passages.push(p),
                Err(e) => skipped.push(json!({"passage": i, "message": e.to_string()})),
            }
        }
        (passages, skipped)
    } else {
        let config = match &a.config {
            Some(path) => IngestConfig::from_toml(&read_text(path)?)?,
            None => IngestConfig::default(),
        };
        let raw = fs::read(&a.input)
            .map_err(|e| Error::InvalidInput(format!("cannot read {}: {e}", a.input.display())))?;
        let import = parse_labelstudio_export(&raw, &config)?;
        let skipped = import
            .skipped
            .iter()
            .map(|d| json!({"task": d.task_id, "message": d.message}))
            .collect();
        (import.passages, skipped)
    };
    for s in &skipped {
        log::warn!("skipped {s}");
    }
    write_jsonl(&a.output, &passages)?;
    let relations: usize = passages.iter().map(|p| p.relations.len()).sum();
    let summary = json!({"passages": passages.len(), "relations": relations, "skipped": skipped});
    o.report(&summary, || {
        format!(
            "{} passages, {relations} relations, {} skipped\n",
            passages.len(),
            skipped.len()
        )
    })
}

fn finish_augment(output: &Path, outcome: AugmentOutcome, o: &mut Output) -> Result<()> {
    write_jsonl(output, &outcome.passages)?;
    let mut reasons: BTreeMap<&str, usize> = BTreeMap::new();
    for d in &outcome.discarded {
        log::info!("discarded {}: {}", d.variant, d.reason);
        *reasons.entry(d.reason.as_str()).or_default() += 1;
    }
    for f in &outcome.failures {
        log::warn!("request failed for {} ({}): {}", f.source, f.variant, f.error);
    }
    let summary = json!({
        "passages": outcome.passages.len(),
        "relations": outcome.relation_count(),
        "discarded": outcome.discarded,
        "failures": outcome.failures,
    });
    o.report(&summary, || {
        format!(
            "{} passages, {} relations, {} discarded, {} failed requests\n",
            outcome.passages.len(),
            outcome.relation_count(),
            outcome.discarded.len(),
            outcome.failures.len()
        )
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_args(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let code = dispatch_to(
            std::iter::once("sck").chain(args.iter().copied()),
            &mut out,
            &mut err,
        );
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn usage_errors_exit_2() {
        let (code, _, err) = run_args(&["frobnicate"]);
        assert_eq!(code, 2);
        assert!(err.contains("Usage"));
        assert_eq!(run_args(&["score", "--gold", "g.jsonl"]).0, 2);
        assert_eq!(run_args(&["--help"]).0, 0);
    }

    #[test]
    fn missing_input_exits_1() {
        let (code, _, err) = run_args(&["stats", "--input", "/nonexistent/x.jsonl"]);
        assert_eq!(code, 1);
        assert!(err.contains("cannot read"));
    }

    #[test]
    fn replacement_flag_parsing() {
        assert_eq!(parse_replacement("cases=infections").unwrap(), ("cases".into(), "infections".into()));
        assert!(parse_replacement("cases").is_err());
    }
}
