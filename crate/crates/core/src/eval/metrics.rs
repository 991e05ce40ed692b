//! Precision, recall and F1 over tags and entities.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::crf::{Tag, TaggedEntity, NUM_TAGS};
use crate::error::{Error, Result};
use crate::gold::{EntityKind, GoldAnnotations};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Prf {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub true_positives: usize,
    pub predicted: usize,
    pub actual: usize,
}

impl Prf {
    /// Ratios from counts, with `0/0` taken as 0.
    pub fn from_counts(true_positives: usize, predicted: usize, actual: usize) -> Self {
        let div = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
        let precision = div(true_positives, predicted);
        let recall = div(true_positives, actual);
        let f1 = if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        Prf {
            precision,
            recall,
            f1,
            true_positives,
            predicted,
            actual,
        }
    }
}

/// Per-tag scores over aligned tag sequences.
pub fn label_prf(pred: &[Vec<Tag>], gold: &[Vec<Tag>]) -> Result<BTreeMap<Tag, Prf>> {
    if pred.len() != gold.len() {
        return Err(Error::LengthMismatch(pred.len(), gold.len()));
    }
    let mut tp = [0usize; NUM_TAGS];
    let mut predicted = [0usize; NUM_TAGS];
    let mut actual = [0usize; NUM_TAGS];
    for (p, g) in pred.iter().zip(gold) {
        if p.len() != g.len() {
            return Err(Error::LengthMismatch(p.len(), g.len()));
        }
        for (a, b) in p.iter().zip(g) {
            predicted[a.index()] += 1;
            actual[b.index()] += 1;
            if a == b {
                tp[a.index()] += 1;
            }
        }
    }
    Ok(Tag::ALL
        .into_iter()
        .map(|t| {
            (
                t,
                Prf::from_counts(tp[t.index()], predicted[t.index()], actual[t.index()]),
            )
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct EntityScores {
    pub person: Prf,
    pub location: Prf,
    /// Both kinds pooled.
    pub overall: Prf,
}

/// Exact-match scoring: a prediction counts only if its document, start, end
/// and kind all equal a gold entity. Predictions in documents without gold
/// are false positives.
pub fn entity_prf(pred: &[TaggedEntity], gold: &GoldAnnotations) -> EntityScores {
    let gold_set: BTreeSet<(&str, usize, usize, EntityKind)> = gold
        .docs()
        .flat_map(|d| {
            d.entities
                .iter()
                .map(move |e| (d.doc_id.as_str(), e.start, e.end, e.kind))
        })
        .collect();
    let pred_set: BTreeSet<(&str, usize, usize, EntityKind)> = pred
        .iter()
        .map(|e| (e.doc_id.as_str(), e.start, e.end, e.kind))
        .collect();
    let count = |kind: Option<EntityKind>| {
        let keep = |k: &EntityKind| kind.is_none_or(|want| *k == want);
        let p = pred_set.iter().filter(|e| keep(&e.3)).count();
        let g = gold_set.iter().filter(|e| keep(&e.3)).count();
        let tp = pred_set.iter().filter(|e| keep(&e.3) && gold_set.contains(*e)).count();
        Prf::from_counts(tp, p, g)
    };
    EntityScores {
        person: count(Some(EntityKind::Person)),
        location: count(Some(EntityKind::Location)),
        overall: count(None),
    }
}

pub fn label_report_tsv(scores: &BTreeMap<Tag, Prf>) -> String {
    let mut out = String::from("tag\tprecision\trecall\tf1\tpredicted\tactual\n");
    for (t, s) in scores {
        out.push_str(&format!(
            "{t}\t{:.4}\t{:.4}\t{:.4}\t{}\t{}\n",
            s.precision, s.recall, s.f1, s.predicted, s.actual
        ));
    }
    out
}

pub fn entity_report_tsv(scores: &EntityScores) -> String {
    let mut out = String::from("kind\tprecision\trecall\tf1\tcorrect\tpredicted\tactual\n");
    for (name, s) in [
        ("PERSON", scores.person),
        ("LOCATION", scores.location),
        ("ALL", scores.overall),
    ] {
        out.push_str(&format!(
            "{name}\t{:.4}\t{:.4}\t{:.4}\t{}\t{}\t{}\n",
            s.precision, s.recall, s.f1, s.true_positives, s.predicted, s.actual
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gold::{GoldDoc, GoldEntity};
    use Tag::*;

    #[test]
    fn perfect_tags() {
        let seqs = vec![vec![NB, NE, O, AB, AI, AE]];
        let s = label_prf(&seqs, &seqs).unwrap();
        for tag in [NB, NE, O, AB, AI, AE] {
            assert_eq!((s[&tag].precision, s[&tag].recall, s[&tag].f1), (1.0, 1.0, 1.0));
        }
        // NI never occurs: 0/0 on both sides.
        assert_eq!(s[&NI].f1, 0.0);
    }

    #[test]
    fn all_o_prediction() {
        let gold = vec![vec![NB, NE, O]];
        let pred = vec![vec![O, O, O]];
        let s = label_prf(&pred, &gold).unwrap();
        assert_eq!((s[&NB].precision, s[&NB].recall), (0.0, 0.0));
        assert_eq!(s[&O].precision, 1.0 / 3.0);
        assert_eq!(s[&O].recall, 1.0);
    }

    #[test]
    fn three_document_tally() {
        let gold = vec![vec![NB, NE, O, O], vec![AB, AE, O], vec![NB, NI, NE, O, AB, AE]];
        let pred = vec![vec![NB, NE, O, AB], vec![AB, O, O], vec![NB, NE, NE, O, NB, AE]];
        let s = label_prf(&pred, &gold).unwrap();
        // NB: predicted 3, gold 2, correct 2.
        assert_eq!((s[&NB].true_positives, s[&NB].predicted, s[&NB].actual), (2, 3, 2));
        assert!((s[&NB].f1 - 0.8).abs() < 1e-12);
        // NE: predicted 3, gold 2, correct 2.
        assert!((s[&NE].precision - 2.0 / 3.0).abs() < 1e-12);
        // AE: predicted 1, gold 2, correct 1.
        assert_eq!((s[&AE].precision, s[&AE].recall), (1.0, 0.5));
        // O: predicted 4, gold 4, correct 3.
        assert_eq!((s[&O].precision, s[&O].recall), (0.75, 0.75));
        // AB: predicted 2, gold 2, correct 1.
        assert_eq!(s[&AB].f1, 0.5);
        assert!(label_prf(&pred[..1], &gold).is_err());
        assert!(label_prf(&[vec![O]], &[vec![O, O]]).is_err());
    }

    fn ent(start: usize, end: usize, kind: EntityKind) -> TaggedEntity {
        TaggedEntity {
            doc_id: "d".into(),
            start,
            end,
            kind,
            surface: String::new(),
            confidence: 1.0,
        }
    }

    fn gold_of(entities: Vec<GoldEntity>) -> GoldAnnotations {
        let mut g = GoldAnnotations::new();
        let mut d = GoldDoc::new("d");
        d.entities = entities;
        g.insert(d);
        g
    }

    #[test]
    fn exact_match_only() {
        let gold = gold_of(vec![GoldEntity::new(0, 2, EntityKind::Person)]);
        let hit = entity_prf(&[ent(0, 2, EntityKind::Person)], &gold);
        assert_eq!(hit.person.f1, 1.0);
        let partial = entity_prf(&[ent(0, 3, EntityKind::Person)], &gold);
        assert_eq!((partial.person.precision, partial.person.recall), (0.0, 0.0));
        let wrong_kind = entity_prf(&[ent(0, 2, EntityKind::Location)], &gold);
        assert_eq!(wrong_kind.overall.true_positives, 0);
        let empty = entity_prf(&[], &gold);
        assert_eq!((empty.person.precision, empty.person.recall), (0.0, 0.0));
    }

    #[test]
    fn self_evaluation_is_perfect() {
        let pred = vec![ent(0, 2, EntityKind::Person), ent(5, 7, EntityKind::Location)];
        let gold = gold_of(pred.iter().map(|e| GoldEntity::new(e.start, e.end, e.kind)).collect());
        let s = entity_prf(&pred, &gold);
        assert_eq!((s.overall.precision, s.overall.recall, s.overall.f1), (1.0, 1.0, 1.0));
    }
}
