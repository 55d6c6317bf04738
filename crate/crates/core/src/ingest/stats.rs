use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::analysis::relation_distances;
use crate::model::{AnnotatedPassage, ContextType};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub passage_count: usize,
    pub relation_count: usize,
    pub location_relations: usize,
    pub temporal_relations: usize,
    /// Share of relations (with offsets) whose event and mention lie in
    /// different sentences.
    pub intersentential_fraction: f64,
    /// Sentence distance to relation count, including distance 0.
    pub distance_histogram: BTreeMap<usize, usize>,
}

pub fn corpus_stats(passages: &[AnnotatedPassage]) -> CorpusStats {
    let mut stats = CorpusStats {
        passage_count: passages.len(),
        relation_count: 0,
        location_relations: 0,
        temporal_relations: 0,
        intersentential_fraction: 0.0,
        distance_histogram: BTreeMap::new(),
    };
    for p in passages {
        stats.relation_count += p.relations.len();
        stats.location_relations += p.relation_count(ContextType::Location);
        stats.temporal_relations += p.relation_count(ContextType::Temporal);
        for d in relation_distances(p).into_iter().flatten() {
            *stats.distance_histogram.entry(d).or_default() += 1;
        }
    }
    let measured: usize = stats.distance_histogram.values().sum();
    let inter: usize = stats
        .distance_histogram
        .iter()
        .filter(|(&d, _)| d > 0)
        .map(|(_, &c)| c)
        .sum();
    if measured > 0 {
        stats.intersentential_fraction = inter as f64 / measured as f64;
    }
    stats
}

impl fmt::Display for CorpusStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let pct = |n: usize| {
            if self.relation_count == 0 {
                0.0
            } else {
                100.0 * n as f64 / self.relation_count as f64
            }
        };
        writeln!(f, "{:<26}{:>8}", "passages", self.passage_count)?;
        writeln!(f, "{:<26}{:>8}", "relations", self.relation_count)?;
        writeln!(
            f,
            "{:<26}{:>8}  ({:.1}%)",
            "  location",
            self.location_relations,
            pct(self.location_relations)
        )?;
        writeln!(
            f,
            "{:<26}{:>8}  ({:.1}%)",
            "  temporal",
            self.temporal_relations,
            pct(self.temporal_relations)
        )?;
        writeln!(
            f,
            "{:<26}{:>8.3}",
            "inter-sentential fraction", self.intersentential_fraction
        )?;
        writeln!(f, "sentence distance histogram")?;
        for (d, c) in &self.distance_histogram {
            writeln!(f, "  {d:>4} {c:>8}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::parse_markup_passage;

    #[test]
    fn same_sentence_relation_is_intrasentential() {
        let p = parse_markup_passage("<evt>It</evt> happened in <loc>Rome</loc>.").unwrap();
        let s = corpus_stats(&[p]);
        assert_eq!(s.relation_count, 1);
        assert_eq!(s.location_relations, 1);
        assert_eq!(s.intersentential_fraction, 0.0);
        assert_eq!(s.distance_histogram.get(&0), Some(&1));
    }

    #[test]
    fn counts_cross_sentence_relations() {
        let p = parse_markup_passage(
            "In <tmp>1990</tmp> things changed. Later <evt>the flood</evt> hit <loc>Dhaka</loc>.",
        )
        .unwrap();
        let s = corpus_stats(&[p.clone(), p]);
        assert_eq!(s.relation_count, 4);
        assert_eq!(s.location_relations + s.temporal_relations, s.relation_count);
        assert_eq!(s.intersentential_fraction, 0.5);
        assert_eq!(s.distance_histogram.get(&1), Some(&2));
        assert!(s.to_string().contains("inter-sentential fraction"));
    }
}
