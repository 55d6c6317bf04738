//! Error taxonomy, inter-annotator agreement and sentence-distance
//! statistics.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::{align, multiset_overlap, PredictionRecord};
use crate::model::{AnnotatedPassage, ContextSet, ContextType, PerType};
use crate::text::{normalize, tokenize, SentenceIndex};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorCategory {
    ExactAfterNorm,
    Spurious,
    Missing,
    Partial,
    Over,
    /// Shares tokens with the gold context without containing or being
    /// contained in it.
    Overlap,
    Disjoint,
}

impl ErrorCategory {
    /// Table rows, in display order. `ExactAfterNorm` is not an error.
    pub const ERRORS: [ErrorCategory; 6] = [
        ErrorCategory::Spurious,
        ErrorCategory::Missing,
        ErrorCategory::Partial,
        ErrorCategory::Over,
        ErrorCategory::Overlap,
        ErrorCategory::Disjoint,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ErrorCategory::ExactAfterNorm => "exact_after_norm",
            ErrorCategory::Spurious => "spurious",
            ErrorCategory::Missing => "missing",
            ErrorCategory::Partial => "partial",
            ErrorCategory::Over => "over",
            ErrorCategory::Overlap => "overlap",
            ErrorCategory::Disjoint => "disjoint",
        }
    }
}

fn joined(items: &[String]) -> Vec<String> {
    items.iter().flat_map(|s| tokenize(s)).collect()
}

/// True when `needle` occurs as a contiguous token run inside `haystack`
/// and is shorter.
fn strict_token_substring(needle: &[String], haystack: &[String]) -> bool {
    needle.len() < haystack.len() && haystack.windows(needle.len()).any(|w| w == needle)
}

/// Classifies one (event, type) prediction against gold.
///
/// Spans on each side are normalized and joined in passage order, then the
/// first matching rule wins: both empty, gold empty (spurious), prediction
/// empty (missing), equal, prediction inside gold (partial), gold inside
/// prediction (over), any shared token (overlap), otherwise disjoint.
/// Containment is checked on token boundaries.
pub fn classify_error(gold: &ContextSet, pred: &ContextSet, ctype: ContextType) -> ErrorCategory {
    let g = joined(gold.get(ctype));
    let p = joined(pred.get(ctype));
    match (g.is_empty(), p.is_empty()) {
        (true, true) => return ErrorCategory::ExactAfterNorm,
        (true, false) => return ErrorCategory::Spurious,
        (false, true) => return ErrorCategory::Missing,
        (false, false) => {}
    }
    if g == p {
        ErrorCategory::ExactAfterNorm
    } else if strict_token_substring(&p, &g) {
        ErrorCategory::Partial
    } else if strict_token_substring(&g, &p) {
        ErrorCategory::Over
    } else if multiset_overlap(&g, &p) > 0 {
        ErrorCategory::Overlap
    } else {
        ErrorCategory::Disjoint
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ErrorReport {
    /// Error counts per type; `ExactAfterNorm` never appears here.
    pub errors: PerType<BTreeMap<ErrorCategory, usize>>,
    /// (event, type) pairs with context on some side that matched exactly.
    pub exact: PerType<usize>,
}

impl ErrorReport {
    pub fn count(&self, category: ErrorCategory, ctype: ContextType) -> usize {
        self.errors.get(ctype).get(&category).copied().unwrap_or(0)
    }

    pub fn total(&self, ctype: ContextType) -> usize {
        self.errors.get(ctype).values().sum()
    }
}

/// Classifies every (event, type) pair with gold or predicted context.
/// Events without a prediction are treated as predicting nothing.
pub fn error_report(gold: &[AnnotatedPassage], preds: &[PredictionRecord]) -> Result<ErrorReport> {
    let alignment = align(gold, preds)?;
    let empty = ContextSet::default();
    let mut report = ErrorReport::default();
    for (_, gold_ctx, pred) in &alignment.pairs {
        let predicted = pred.map(|r| &r.predicted).unwrap_or(&empty);
        let predicted = predicted.normalized();
        let gold_ctx = gold_ctx.normalized();
        for ctype in ContextType::ALL {
            if gold_ctx.get(ctype).is_empty() && predicted.get(ctype).is_empty() {
                continue;
            }
            match classify_error(&gold_ctx, &predicted, ctype) {
                ErrorCategory::ExactAfterNorm => *report.exact.get_mut(ctype) += 1,
                cat => *report.errors.get_mut(ctype).entry(cat).or_default() += 1,
            }
        }
    }
    Ok(report)
}

impl fmt::Display for ErrorReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{:<12}{:>10}{:>10}", "Error Type", "Location", "Temporal")?;
        for cat in ErrorCategory::ERRORS {
            writeln!(
                f,
                "{:<12}{:>10}{:>10}",
                cat.as_str(),
                self.count(cat, ContextType::Location),
                self.count(cat, ContextType::Temporal)
            )?;
        }
        writeln!(
            f,
            "{:<12}{:>10}{:>10}",
            "Total",
            self.total(ContextType::Location),
            self.total(ContextType::Temporal)
        )?;
        writeln!(
            f,
            "{:<12}{:>10}{:>10}",
            "(exact)", self.exact.location, self.exact.temporal
        )
    }
}

/// One item rated by two annotators.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AgreementItem {
    pub item_id: String,
    pub rater_a: String,
    pub rater_b: String,
}

/// Cohen's kappa over categorical ratings.
///
/// Returns 1 when both observed and chance agreement are 1 (every item
/// in a single shared category).
pub fn cohens_kappa(items: &[AgreementItem]) -> Result<f64> {
    if items.is_empty() {
        return Err(Error::InvalidInput("kappa needs at least one item".into()));
    }
    let n = items.len() as f64;
    let mut a_counts: HashMap<&str, usize> = HashMap::new();
    let mut b_counts: HashMap<&str, usize> = HashMap::new();
    let mut agree = 0usize;
    for it in items {
        *a_counts.entry(&it.rater_a).or_default() += 1;
        *b_counts.entry(&it.rater_b).or_default() += 1;
        if it.rater_a == it.rater_b {
            agree += 1;
        }
    }
    let p_o = agree as f64 / n;
    let p_e: f64 = a_counts
        .iter()
        .map(|(label, &ca)| {
            let cb = b_counts.get(label).copied().unwrap_or(0);
            (ca as f64 / n) * (cb as f64 / n)
        })
        .sum();
    if p_e == 1.0 {
        return Ok(1.0);
    }
    Ok((p_o - p_e) / (1.0 - p_e))
}

/// Like [`cohens_kappa`], rejecting labels outside `labels`.
pub fn cohens_kappa_checked(items: &[AgreementItem], labels: &BTreeSet<String>) -> Result<f64> {
    for it in items {
        for l in [&it.rater_a, &it.rater_b] {
            if !labels.contains(l) {
                return Err(Error::InvalidInput(format!(
                    "item {} uses undeclared label '{l}'",
                    it.item_id
                )));
            }
        }
    }
    cohens_kappa(items)
}

pub const NO_RELATION: &str = "none";

/// Builds agreement items from two annotators' versions of the same
/// passages.
///
/// Each item is a candidate (event span, context span) pair within a
/// passage that either annotator linked; a rater's label is the relation's
/// context type, or `"none"` if that rater did not link the pair. Only
/// passages present in both sets are compared. Spans are identified by
/// offsets when available, else by text.
pub fn agreement_items(a: &[AnnotatedPassage], b: &[AnnotatedPassage]) -> Vec<AgreementItem> {
    let b_by_id: HashMap<&str, &AnnotatedPassage> =
        b.iter().map(|p| (p.passage_id.as_str(), p)).collect();
    let mut items = Vec::new();
    for pa in a {
        let Some(pb) = b_by_id.get(pa.passage_id.as_str()) else {
            continue;
        };
        let la = linked_pairs(pa);
        let lb = linked_pairs(pb);
        let keys: BTreeSet<&String> = la.keys().chain(lb.keys()).collect();
        for key in keys {
            let label = |m: &BTreeMap<String, ContextType>| {
                m.get(key)
                    .map(|t| t.as_str().to_owned())
                    .unwrap_or_else(|| NO_RELATION.to_owned())
            };
            items.push(AgreementItem {
                item_id: format!("{}:{key}", pa.passage_id),
                rater_a: label(&la),
                rater_b: label(&lb),
            });
        }
    }
    items
}

fn span_key(span: &crate::model::TextSpan) -> String {
    match span.offsets() {
        Some((s, e)) => format!("{s}-{e}"),
        None => normalize(&span.text),
    }
}

fn linked_pairs(p: &AnnotatedPassage) -> BTreeMap<String, ContextType> {
    p.relations
        .iter()
        .filter_map(|r| {
            let e = p.event(&r.event_id)?;
            let m = p.mention(&r.mention_id)?;
            Some((format!("{}>{}", span_key(&e.span), span_key(&m.span)), r.ctype))
        })
        .collect()
}

/// Sentence distance of each relation, `None` when either end lacks
/// offsets.
pub fn relation_distances(p: &AnnotatedPassage) -> Vec<Option<usize>> {
    let index = SentenceIndex::new(&p.text);
    p.relations
        .iter()
        .map(|r| {
            let e = p.event(&r.event_id)?.span.char_start?;
            let m = p.mention(&r.mention_id)?.span.char_start?;
            if e >= index.char_len() || m >= index.char_len() {
                return None;
            }
            Some(index.sentence_of(e).abs_diff(index.sentence_of(m)))
        })
        .collect()
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DistanceHistogram {
    /// Relations with event and mention in the same sentence.
    pub intra_sentential: usize,
    /// Counts for distances of one sentence or more.
    pub inter_sentential: BTreeMap<usize, usize>,
    /// Relations skipped because an end lacks offsets.
    pub missing_offsets: usize,
}

impl DistanceHistogram {
    pub fn measured(&self) -> usize {
        self.intra_sentential + self.inter_sentential.values().sum::<usize>()
    }

    pub fn intersentential_fraction(&self) -> f64 {
        let total = self.measured();
        if total == 0 {
            0.0
        } else {
            self.inter_sentential.values().sum::<usize>() as f64 / total as f64
        }
    }

    /// `distance,count` rows, distance 0 first.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("distance,count\n");
        out.push_str(&format!("0,{}\n", self.intra_sentential));
        for (d, c) in &self.inter_sentential {
            out.push_str(&format!("{d},{c}\n"));
        }
        out
    }
}

pub fn distance_histogram(passages: &[AnnotatedPassage]) -> DistanceHistogram {
    let mut h = DistanceHistogram::default();
    for p in passages {
        for d in relation_distances(p) {
            match d {
                None => h.missing_offsets += 1,
                Some(0) => h.intra_sentential += 1,
                Some(d) => *h.inter_sentential.entry(d).or_default() += 1,
            }
        }
    }
    h
}
