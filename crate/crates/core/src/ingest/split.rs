use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::AnnotatedPassage;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSplit {
    pub train: Vec<AnnotatedPassage>,
    pub test: Vec<AnnotatedPassage>,
    pub seed: u64,
    pub test_fraction: f64,
}

impl DatasetSplit {
    pub fn test_relations(&self) -> usize {
        self.test.iter().map(|p| p.relations.len()).sum()
    }
}

/// Passage-level train/test split targeting `test_fraction` of the
/// relations.
///
/// Passages are shuffled with a seeded ChaCha8 generator and greedily moved
/// into the test side while doing so brings the test relation count closer
/// to the target. Passages without relations are split by count. Both
/// sides keep input order.
pub fn split_dataset(
    passages: &[AnnotatedPassage],
    seed: u64,
    test_fraction: f64,
) -> Result<DatasetSplit> {
    if passages.is_empty() {
        return Err(Error::InvalidInput("cannot split an empty dataset".into()));
    }
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::InvalidInput(format!(
            "test fraction must lie in (0, 1), got {test_fraction}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..passages.len()).collect();
    order.shuffle(&mut rng);

    let total: usize = passages.iter().map(|p| p.relations.len()).sum();
    let target = test_fraction * total as f64;
    let mut in_test = vec![false; passages.len()];
    let mut test_rel = 0usize;
    for &i in &order {
        let r = passages[i].relations.len();
        if r == 0 {
            continue;
        }
        let before = (test_rel as f64 - target).abs();
        let after = ((test_rel + r) as f64 - target).abs();
        if after < before {
            in_test[i] = true;
            test_rel += r;
        }
    }

    let empty: Vec<usize> = order
        .iter()
        .copied()
        .filter(|&i| passages[i].relations.is_empty())
        .collect();
    let k = (test_fraction * empty.len() as f64).round() as usize;
    for &i in empty.iter().take(k) {
        in_test[i] = true;
    }

    let (test, train): (Vec<_>, Vec<_>) = passages
        .iter()
        .zip(&in_test)
        .partition(|(_, &t)| t);
    Ok(DatasetSplit {
        train: train.into_iter().map(|(p, _)| p.clone()).collect(),
        test: test.into_iter().map(|(p, _)| p.clone()).collect(),
        seed,
        test_fraction,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{ContextType, Provenance, ScenarioRelation};
    use std::collections::BTreeSet;

    fn passage(id: usize, relations: usize) -> AnnotatedPassage {
        AnnotatedPassage {
            passage_id: format!("p{id}"),
            doc_id: "d".into(),
            text: "x".into(),
            events: vec![],
            mentions: vec![],
            relations: (0..relations)
                .map(|j| ScenarioRelation {
                    event_id: "e".into(),
                    mention_id: format!("m{j}"),
                    ctype: ContextType::Location,
                })
                .collect(),
            provenance: Provenance::Gold,
        }
    }

    #[test]
    fn exact_fraction_for_unit_passages() {
        let ps: Vec<_> = (0..10).map(|i| passage(i, 1)).collect();
        let split = split_dataset(&ps, 7, 0.2).unwrap();
        assert_eq!(split.train.len(), 8);
        assert_eq!(split.test.len(), 2);
        assert_eq!(split, split_dataset(&ps, 7, 0.2).unwrap());
    }

    #[test]
    fn partitions_by_passage_id() {
        let ps: Vec<_> = (0..40).map(|i| passage(i, i % 6)).collect();
        for seed in 0..20 {
            let split = split_dataset(&ps, seed, 0.2).unwrap();
            let train: BTreeSet<_> = split.train.iter().map(|p| &p.passage_id).collect();
            let test: BTreeSet<_> = split.test.iter().map(|p| &p.passage_id).collect();
            assert!(train.is_disjoint(&test));
            assert_eq!(train.len() + test.len(), ps.len());
            let total: usize = ps.iter().map(|p| p.relations.len()).sum();
            let target = 0.2 * total as f64;
            assert!((split.test_relations() as f64 - target).abs() <= 2.0);
        }
    }

    #[test]
    fn rejects_bad_input() {
        assert!(split_dataset(&[], 1, 0.2).is_err());
        assert!(split_dataset(&[passage(0, 1)], 1, 1.0).is_err());
        assert!(split_dataset(&[passage(0, 1)], 1, 0.0).is_err());
    }
}
