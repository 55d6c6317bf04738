//! Span-level and token-level scoring of predicted context sets.
//!
//! Both levels compute precision, recall and F1 per event and per context
//! type, then macro-average over events. Strings are compared after
//! [`normalize`](crate::text::normalize) and treated as multisets. An event
//! with neither gold nor predicted context of a type scores (1, 1, 1); one
//! with exactly one side empty scores (0, 0, 0).

use std::collections::{HashMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::model::{AnnotatedPassage, ContextSet, ContextType, PerType};
use crate::promptgen::{parse_model_output, DecodedRecord};
use crate::text::{normalize, tokenize};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub passage_id: String,
    pub event_id: String,
    pub predicted: ContextSet,
    #[serde(default = "default_true")]
    pub valid_parse: bool,
}

fn default_true() -> bool {
    true
}

impl From<DecodedRecord> for PredictionRecord {
    fn from(r: DecodedRecord) -> Self {
        let parsed = parse_model_output(&r.decoded);
        PredictionRecord {
            passage_id: r.passage_id,
            event_id: r.event_id,
            predicted: parsed.context,
            valid_parse: parsed.valid,
        }
    }
}

/// Reads prediction JSONL in either form: decoded strings
/// (`{passage_id, event_id, decoded}`) or parsed sets
/// (`{passage_id, event_id, predicted: {locations, times}}`).
pub fn parse_predictions(input: &str, name: &str) -> Result<Vec<PredictionRecord>> {
    let mut out = Vec::new();
    for (i, line) in input.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let err = |message: String| Error::JsonLine {
            path: name.to_owned(),
            line: i + 1,
            message,
        };
        let value: Value = serde_json::from_str(line).map_err(|e| err(e.to_string()))?;
        let record = if value.get("decoded").is_some() {
            serde_json::from_value::<DecodedRecord>(value).map(PredictionRecord::from)
        } else {
            serde_json::from_value::<PredictionRecord>(value)
        };
        out.push(record.map_err(|e| err(e.to_string()))?);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PRF {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl PRF {
    pub const PERFECT: PRF = PRF {
        precision: 1.0,
        recall: 1.0,
        f1: 1.0,
    };
    pub const ZERO: PRF = PRF {
        precision: 0.0,
        recall: 0.0,
        f1: 0.0,
    };

    pub fn new(precision: f64, recall: f64) -> Self {
        let f1 = if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        PRF {
            precision,
            recall,
            f1,
        }
    }

    /// From raw counts; a zero denominator gives 0 for that component.
    pub fn from_counts(matched: usize, predicted: usize, gold: usize) -> Self {
        let ratio = |n: usize, d: usize| if d == 0 { 0.0 } else { n as f64 / d as f64 };
        PRF::new(ratio(matched, predicted), ratio(matched, gold))
    }
}

impl fmt::Display for PRF {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "P={:.4} R={:.4} F1={:.4}", self.precision, self.recall, self.f1)
    }
}

/// Size of the multiset intersection of two string lists.
pub(crate) fn multiset_overlap<S: AsRef<str>>(a: &[S], b: &[S]) -> usize {
    let mut counts: HashMap<&str, usize> = HashMap::new();
    for x in a {
        *counts.entry(x.as_ref()).or_default() += 1;
    }
    b.iter()
        .filter(|y| match counts.get_mut(y.as_ref()) {
            Some(c) if *c > 0 => {
                *c -= 1;
                true
            }
            _ => false,
        })
        .count()
}

fn score_units(gold: &[String], pred: &[String]) -> PRF {
    match (gold.is_empty(), pred.is_empty()) {
        (true, true) => PRF::PERFECT,
        (true, false) | (false, true) => PRF::ZERO,
        (false, false) => PRF::from_counts(multiset_overlap(gold, pred), pred.len(), gold.len()),
    }
}

fn normalized_spans(items: &[String]) -> Vec<String> {
    items
        .iter()
        .map(|s| normalize(s))
        .filter(|s| !s.is_empty())
        .collect()
}

fn pooled_tokens(items: &[String]) -> Vec<String> {
    items.iter().flat_map(|s| tokenize(s)).collect()
}

/// Exact match of normalized spans.
pub fn span_score_event(gold: &ContextSet, pred: &ContextSet, ctype: ContextType) -> PRF {
    score_units(
        &normalized_spans(gold.get(ctype)),
        &normalized_spans(pred.get(ctype)),
    )
}

/// Overlap of the pooled token multisets of all spans of `ctype`.
pub fn token_score_event(gold: &ContextSet, pred: &ContextSet, ctype: ContextType) -> PRF {
    score_units(&pooled_tokens(gold.get(ctype)), &pooled_tokens(pred.get(ctype)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreReport {
    pub span: PerType<PRF>,
    pub token: PerType<PRF>,
    /// Number of gold events scored.
    pub event_count: usize,
    /// Events averaged over, per type. Equals `event_count` unless scoring
    /// was restricted to events with gold context of the type.
    pub evaluated: PerType<usize>,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct ScoreOptions {
    /// Average each type only over events that have at least one gold
    /// context of that type.
    pub only_gold_typed: bool,
}

/// Key of an event within a dataset.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct EventKey {
    pub passage_id: String,
    pub event_id: String,
}

#[derive(Debug, Clone)]
pub struct ScoreOutcome {
    pub report: ScoreReport,
    /// Gold events without a prediction; scored as empty predictions.
    pub missing: Vec<EventKey>,
    /// Predictions that match no gold event; ignored.
    pub unmatched: Vec<EventKey>,
}

/// Gold context and prediction per gold event, in gold order.
pub(crate) struct Alignment<'a> {
    pub pairs: Vec<(EventKey, ContextSet, Option<&'a PredictionRecord>)>,
    pub unmatched: Vec<EventKey>,
}

pub(crate) fn align<'a>(
    gold: &[AnnotatedPassage],
    preds: &'a [PredictionRecord],
) -> Result<Alignment<'a>> {
    let mut by_key: HashMap<(&str, &str), &PredictionRecord> = HashMap::new();
    for r in preds {
        if by_key
            .insert((r.passage_id.as_str(), r.event_id.as_str()), r)
            .is_some()
        {
            return Err(Error::DuplicatePrediction {
                passage_id: r.passage_id.clone(),
                event_id: r.event_id.clone(),
            });
        }
    }
    let mut seen = HashSet::new();
    let mut pairs = Vec::new();
    for p in gold {
        for e in &p.events {
            let key = (p.passage_id.as_str(), e.id.as_str());
            seen.insert(key);
            pairs.push((
                EventKey {
                    passage_id: p.passage_id.clone(),
                    event_id: e.id.clone(),
                },
                p.gold_context(&e.id),
                by_key.get(&key).copied(),
            ));
        }
    }
    let unmatched = preds
        .iter()
        .filter(|r| !seen.contains(&(r.passage_id.as_str(), r.event_id.as_str())))
        .map(|r| EventKey {
            passage_id: r.passage_id.clone(),
            event_id: r.event_id.clone(),
        })
        .collect();
    Ok(Alignment { pairs, unmatched })
}

pub fn score_dataset(
    gold: &[AnnotatedPassage],
    preds: &[PredictionRecord],
    options: ScoreOptions,
) -> Result<ScoreOutcome> {
    let alignment = align(gold, preds)?;
    let empty = ContextSet::default();
    let mut span_sum = PerType::<[f64; 3]>::default();
    let mut token_sum = PerType::<[f64; 3]>::default();
    let mut evaluated = PerType::<usize>::default();
    let mut missing = Vec::new();

    for (key, gold_ctx, pred) in &alignment.pairs {
        let predicted = match pred {
            Some(r) => &r.predicted,
            None => {
                missing.push(key.clone());
                &empty
            }
        };
        for ctype in ContextType::ALL {
            if options.only_gold_typed && gold_ctx.get(ctype).is_empty() {
                continue;
            }
            *evaluated.get_mut(ctype) += 1;
            accumulate(span_sum.get_mut(ctype), span_score_event(gold_ctx, predicted, ctype));
            accumulate(token_sum.get_mut(ctype), token_score_event(gold_ctx, predicted, ctype));
        }
    }

    let mean = |sums: &PerType<[f64; 3]>| {
        sums.map(|t, s| {
            let n = *evaluated.get(t);
            if n == 0 {
                PRF::ZERO
            } else {
                let n = n as f64;
                PRF {
                    precision: s[0] / n,
                    recall: s[1] / n,
                    f1: s[2] / n,
                }
            }
        })
    };
    Ok(ScoreOutcome {
        report: ScoreReport {
            span: mean(&span_sum),
            token: mean(&token_sum),
            event_count: alignment.pairs.len(),
            evaluated,
        },
        missing,
        unmatched: alignment.unmatched,
    })
}

fn accumulate(sum: &mut [f64; 3], prf: PRF) {
    sum[0] += prf.precision;
    sum[1] += prf.recall;
    sum[2] += prf.f1;
}

/// Component-wise mean of several runs over the same test set.
pub fn aggregate_runs(reports: &[ScoreReport]) -> Result<ScoreReport> {
    let first = reports
        .first()
        .ok_or_else(|| Error::InvalidInput("no reports to aggregate".into()))?;
    if let Some(r) = reports.iter().find(|r| r.event_count != first.event_count) {
        return Err(Error::InvalidInput(format!(
            "mismatched event counts: {} vs {}",
            first.event_count, r.event_count
        )));
    }
    let n = reports.len() as f64;
    let mean_prf = |select: &dyn Fn(&ScoreReport) -> PRF| {
        let (p, r, f) = reports.iter().map(select).fold((0.0, 0.0, 0.0), |acc, x| {
            (acc.0 + x.precision, acc.1 + x.recall, acc.2 + x.f1)
        });
        PRF {
            precision: p / n,
            recall: r / n,
            f1: f / n,
        }
    };
    Ok(ScoreReport {
        span: PerType::new(
            mean_prf(&|r| r.span.location),
            mean_prf(&|r| r.span.temporal),
        ),
        token: PerType::new(
            mean_prf(&|r| r.token.location),
            mean_prf(&|r| r.token.temporal),
        ),
        event_count: first.event_count,
        evaluated: first.evaluated,
    })
}

impl fmt::Display for ScoreReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let header = [
            format!("{:<10}| {:^32} | {:^32}", "", "Span-level", "Token-level"),
            format!(
                "{:<10}| {:^15}  {:^15} | {:^15}  {:^15}",
                "", "Location", "Temporal", "Location", "Temporal"
            ),
        ];
        for line in header {
            writeln!(f, "{}", line.trim_end())?;
        }
        writeln!(
            f,
            "{:<10}| {:>4} {:>4} {:>5}  {:>4} {:>4} {:>5} | {:>4} {:>4} {:>5}  {:>4} {:>4} {:>5}",
            "", "P", "R", "F1", "P", "R", "F1", "P", "R", "F1", "P", "R", "F1"
        )?;
        let cells = [
            self.span.location,
            self.span.temporal,
            self.token.location,
            self.token.temporal,
        ];
        let [a, b, c, d] = cells.map(|c| format!("{:.2} {:.2} {:>5.2}", c.precision, c.recall, c.f1));
        writeln!(f, "{:<10}| {a}  {b} | {c}  {d}", "scores")?;
        writeln!(f, "events: {}", self.event_count)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::parse_markup_passage;

    fn loc(items: &[&str]) -> ContextSet {
        ContextSet::new(items.iter().map(|s| s.to_string()).collect(), vec![])
    }

    fn tmp(items: &[&str]) -> ContextSet {
        ContextSet::new(vec![], items.iter().map(|s| s.to_string()).collect())
    }

    fn close(a: PRF, p: f64, r: f64, f: f64) -> bool {
        (a.precision - p).abs() < 1e-4 && (a.recall - r).abs() < 1e-4 && (a.f1 - f).abs() < 1e-4
    }

    #[test]
    fn span_examples() {
        let l = ContextType::Location;
        assert_eq!(span_score_event(&loc(&["wuhan china"]), &loc(&["Wuhan, China"]), l), PRF::PERFECT);
        let s = span_score_event(&loc(&["uk", "france"]), &loc(&["france", "germany"]), l);
        assert!(close(s, 0.5, 0.5, 0.5));
        assert_eq!(span_score_event(&loc(&[]), &loc(&["paris"]), l), PRF::ZERO);
        assert_eq!(span_score_event(&loc(&["paris"]), &loc(&[]), l), PRF::ZERO);
    }

    #[test]
    fn token_examples() {
        let s = token_score_event(
            &loc(&["western and northern europe united kingdom"]),
            &loc(&["western and northern europe"]),
            ContextType::Location,
        );
        assert!(close(s, 1.0, 0.6667, 0.8));
        let s = token_score_event(
            &tmp(&["between 2009 and 2014"]),
            &tmp(&["2009", "2014"]),
            ContextType::Temporal,
        );
        assert!(close(s, 1.0, 0.5, 0.6667));
        assert_eq!(
            token_score_event(&tmp(&[]), &tmp(&[]), ContextType::Temporal),
            PRF::PERFECT
        );
    }

    #[test]
    fn multisets_count_repeats() {
        let s = span_score_event(&loc(&["a", "a"]), &loc(&["a"]), ContextType::Location);
        assert!(close(s, 1.0, 0.5, 0.6667));
        let s = span_score_event(&loc(&["a"]), &loc(&["a", "a"]), ContextType::Location);
        assert!(close(s, 0.5, 1.0, 0.6667));
    }

    #[test]
    fn normalizes_away_empty_predictions() {
        // A prediction consisting only of commas is an abstention.
        assert_eq!(span_score_event(&loc(&[]), &loc(&[" , "]), ContextType::Location), PRF::PERFECT);
    }

    fn dataset() -> Vec<AnnotatedPassage> {
        vec![
            parse_markup_passage("<evt>A</evt> in <loc>Rome</loc> in <tmp>1990</tmp>.").unwrap(),
            parse_markup_passage("<evt>B</evt> in <loc>Oslo</loc>.").unwrap(),
        ]
    }

    fn predict(passages: &[AnnotatedPassage], f: impl Fn(ContextSet) -> ContextSet) -> Vec<PredictionRecord> {
        passages
            .iter()
            .flat_map(|p| {
                p.events.iter().map(|e| PredictionRecord {
                    passage_id: p.passage_id.clone(),
                    event_id: e.id.clone(),
                    predicted: f(p.gold_context(&e.id)),
                    valid_parse: true,
                })
            })
            .collect::<Vec<_>>()
    }

    #[test]
    fn identical_predictions_score_perfectly() {
        let gold = dataset();
        let preds = predict(&gold, |g| g);
        let out = score_dataset(&gold, &preds, ScoreOptions::default()).unwrap();
        for t in ContextType::ALL {
            assert_eq!(*out.report.span.get(t), PRF::PERFECT);
            assert_eq!(*out.report.token.get(t), PRF::PERFECT);
        }
        assert_eq!(out.report.event_count, 2);
        assert!(out.missing.is_empty());
    }

    #[test]
    fn macro_average_over_events() {
        let gold = dataset();
        let preds = predict(&gold, |g| {
            if g.locations == ["Rome"] {
                g
            } else {
                loc(&["bergen"])
            }
        });
        let out = score_dataset(&gold, &preds, ScoreOptions::default()).unwrap();
        assert!((out.report.span.location.f1 - 0.5).abs() < 1e-12);
        // Event B has no temporal gold and no temporal prediction.
        assert_eq!(out.report.span.temporal, PRF::PERFECT);

        let restricted = score_dataset(&gold, &preds, ScoreOptions { only_gold_typed: true }).unwrap();
        assert_eq!(restricted.report.evaluated, PerType::new(2, 1));
        assert_eq!(restricted.report.span.temporal, PRF::PERFECT);
    }

    #[test]
    fn empty_predictions_score_zero() {
        let gold = vec![parse_markup_passage("<evt>A</evt> in <loc>Rome</loc> in <tmp>1990</tmp>.").unwrap()];
        let out = score_dataset(&gold, &predict(&gold, |_| ContextSet::default()), ScoreOptions::default()).unwrap();
        for t in ContextType::ALL {
            assert_eq!(*out.report.span.get(t), PRF::ZERO);
            assert_eq!(*out.report.token.get(t), PRF::ZERO);
        }
    }

    #[test]
    fn missing_and_duplicate_predictions() {
        let gold = dataset();
        let mut preds = predict(&gold, |g| g);
        let dropped = preds.pop().unwrap();
        let out = score_dataset(&gold, &preds, ScoreOptions::default()).unwrap();
        assert_eq!(out.missing.len(), 1);
        assert_eq!(out.missing[0].passage_id, dropped.passage_id);

        preds.push(preds[0].clone());
        assert!(matches!(
            score_dataset(&gold, &preds, ScoreOptions::default()),
            Err(Error::DuplicatePrediction { .. })
        ));
    }

    #[test]
    fn aggregates_runs() {
        let gold = dataset();
        let a = score_dataset(&gold, &predict(&gold, |g| g), ScoreOptions::default()).unwrap().report;
        assert_eq!(aggregate_runs(&[a.clone(), a.clone()]).unwrap(), a);

        let mut b = a.clone();
        let mut c = a.clone();
        b.span.location.f1 = 0.8;
        c.span.location.f1 = 0.6;
        assert!((aggregate_runs(&[b, c.clone()]).unwrap().span.location.f1 - 0.7).abs() < 1e-12);
        assert!(aggregate_runs(&[]).is_err());
        c.event_count = 5;
        assert!(aggregate_runs(&[a, c]).is_err());
    }

    #[test]
    fn reads_both_prediction_forms() {
        let input = concat!(
            r#"{"passage_id":"p","event_id":"e0","decoded":"location: Paris; time: "}"#,
            "\n",
            r#"{"passage_id":"p","event_id":"e1","predicted":{"locations":[],"times":["1990"]}}"#,
            "\n",
            r#"{"passage_id":"p","event_id":"e2","decoded":"no idea"}"#,
        );
        let recs = parse_predictions(input, "preds").unwrap();
        assert_eq!(recs[0].predicted.locations, vec!["paris"]);
        assert!(recs[1].valid_parse);
        assert_eq!(recs[1].predicted.times, vec!["1990"]);
        assert!(!recs[2].valid_parse);
    }

    #[test]
    fn report_table_mentions_both_levels() {
        let gold = dataset();
        let r = score_dataset(&gold, &predict(&gold, |g| g), ScoreOptions::default()).unwrap().report;
        let table = r.to_string();
        assert!(table.contains("Span-level") && table.contains("Token-level"));
    }
}
