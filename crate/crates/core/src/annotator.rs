//! Lexicon labelling and dynasty-consistency filtering.
//!
//! [`annotate`] keeps every plausible reading of the text: for each position
//! and label type it emits the longest lexicon match, and for dynasty-bearing
//! types it also emits shorter matches for dynasties the longer ones do not
//! cover (`中書省都事` is a Yuan office, `中書` a Ming one).
//! [`enforce_consistency`] then splits the readings into per-dynasty
//! sequences.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::corpus::Document;
use crate::error::{Error, Result};
use crate::knowledge_base::{Dynasties, KnowledgeBase, LabelType};

/// Default number of labels that must agree on a dynasty.
pub const DEFAULT_WINDOW: usize = 6;

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LabelSpan {
    pub doc_id: String,
    pub start: usize,
    pub end: usize,
    pub label: LabelType,
    pub surface: String,
    pub dynasties: Dynasties,
}

impl LabelSpan {
    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.end == self.start
    }

    pub fn overlaps(&self, other: &LabelSpan) -> bool {
        self.start < other.end && other.start < self.end
    }

    fn is_dynasty_evidence(&self) -> bool {
        self.label.is_dynasty_bearing() && !self.dynasties.is_empty()
    }

    fn compatible_with(&self, dynasty: &str) -> bool {
        !self.label.is_dynasty_bearing() || self.dynasties.contains(dynasty)
    }

    pub fn tsv_row(&self) -> String {
        let dyn_list: Vec<&str> = self.dynasties.iter().map(String::as_str).collect();
        format!(
            "{}\t{}\t{}\t{}\t{}\t{}\n",
            self.doc_id,
            self.start,
            self.end,
            self.label,
            self.surface,
            dyn_list.join(",")
        )
    }
}

/// Spans of one document that agree on a single dynasty.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConsistentSequence {
    pub doc_id: String,
    pub dynasty: String,
    pub spans: Vec<LabelSpan>,
}

impl ConsistentSequence {
    pub fn labels(&self) -> Vec<LabelType> {
        self.spans.iter().map(|s| s.label).collect()
    }

    pub fn has_name(&self) -> bool {
        self.spans.iter().any(|s| s.label == LabelType::Name)
    }
}

/// Labels `doc` with every label type.
pub fn annotate(doc: &Document, kb: &KnowledgeBase) -> Vec<LabelSpan> {
    annotate_with(doc, kb, &LabelType::ALL)
}

/// Labels `doc` with the given label types only.
pub fn annotate_with(doc: &Document, kb: &KnowledgeBase, labels: &[LabelType]) -> Vec<LabelSpan> {
    let mut out = Vec::new();
    for pos in 0..doc.len() {
        for &label in labels {
            let matches = kb.prefix_matches(doc.chars(), pos, label);
            let mut covered = Dynasties::new();
            for (rank, m) in matches.iter().rev().enumerate() {
                let dynasties = if rank == 0 {
                    m.entry.dynasties.clone()
                } else if label.is_dynasty_bearing() {
                    let rest: Dynasties = m.entry.dynasties.difference(&covered).cloned().collect();
                    if rest.is_empty() {
                        continue;
                    }
                    rest
                } else {
                    break;
                };
                covered.extend(m.entry.dynasties.iter().cloned());
                out.push(LabelSpan {
                    doc_id: doc.id().to_string(),
                    start: m.start,
                    end: m.end,
                    label,
                    surface: m.entry.surface.clone(),
                    dynasties,
                });
            }
        }
    }
    out
}

/// Clusters of mutually overlapping dynasty-evidence spans.
struct Region {
    start: usize,
    end: usize,
    members: Vec<usize>,
}

fn regions(spans: &[LabelSpan]) -> Vec<Region> {
    let mut out: Vec<Region> = Vec::new();
    for (i, s) in spans.iter().enumerate().filter(|(_, s)| s.is_dynasty_evidence()) {
        match out.last_mut() {
            Some(r) if s.start < r.end => {
                r.end = r.end.max(s.end);
                r.members.push(i);
            }
            _ => out.push(Region {
                start: s.start,
                end: s.end,
                members: vec![i],
            }),
        }
    }
    out
}

/// Splits labelled spans into per-dynasty consistent sequences.
///
/// Dynasty-evidence spans (NAME/OFFICE/ENTRY/NIANHAO with a non-empty
/// dynasty set) are grouped into regions of overlapping readings. For each
/// dynasty `d`, a run is a maximal stretch of consecutive regions that each
/// offer a `d` reading. A run shorter than `window` is dropped when another
/// dynasty's run covers it and more; runs of `window` or more regions stand
/// on their own. Every surviving run yields one sequence holding the
/// `d`-compatible spans between its neighbouring regions, overlaps resolved
/// longest first.
pub fn enforce_consistency(spans: &[LabelSpan], window: usize) -> Result<Vec<ConsistentSequence>> {
    if window == 0 {
        return Err(Error::Invalid("consistency window must be at least 1".into()));
    }
    if spans.windows(2).any(|w| w[1].start < w[0].start) {
        return Err(Error::UnsortedSpans);
    }
    let mut doc_ids: Vec<&str> = Vec::new();
    for s in spans {
        if !doc_ids.contains(&s.doc_id.as_str()) {
            doc_ids.push(&s.doc_id);
        }
    }
    let mut out = Vec::new();
    for id in doc_ids {
        let doc_spans: Vec<LabelSpan> = spans.iter().filter(|s| s.doc_id == id).cloned().collect();
        out.extend(consistent_in_doc(&doc_spans, window));
    }
    out.sort_by(|a, b| {
        (&a.doc_id, &a.dynasty, a.spans.first().map(|s| s.start)).cmp(&(
            &b.doc_id,
            &b.dynasty,
            b.spans.first().map(|s| s.start),
        ))
    });
    Ok(out)
}

fn consistent_in_doc(spans: &[LabelSpan], window: usize) -> Vec<ConsistentSequence> {
    let regions = regions(spans);
    let dynasties: BTreeSet<&String> = spans
        .iter()
        .filter(|s| s.is_dynasty_evidence())
        .flat_map(|s| s.dynasties.iter())
        .collect();

    let mut runs: Vec<(&String, usize, usize)> = Vec::new();
    for &d in &dynasties {
        let mut lo = None;
        for (r, region) in regions.iter().enumerate() {
            let supports = region.members.iter().any(|&i| spans[i].dynasties.contains(d));
            match (supports, lo) {
                (true, None) => lo = Some(r),
                (false, Some(l)) => {
                    runs.push((d, l, r - 1));
                    lo = None;
                }
                _ => {}
            }
        }
        if let Some(l) = lo {
            runs.push((d, l, regions.len() - 1));
        }
    }

    let dominated = |&(d, lo, hi): &(&String, usize, usize)| {
        hi - lo + 1 < window
            && runs
                .iter()
                .any(|&(d2, lo2, hi2)| d2 != d && lo2 <= lo && hi2 >= hi && (lo2, hi2) != (lo, hi))
    };

    let mut out = Vec::new();
    for run in runs.iter().filter(|r| !dominated(r)) {
        let (d, lo, hi) = *run;
        let extent_start = if lo > 0 { regions[lo - 1].end } else { 0 };
        let extent_end = regions.get(hi + 1).map_or(usize::MAX, |r| r.start);
        let in_run: BTreeSet<usize> = regions[lo..=hi]
            .iter()
            .flat_map(|r| r.members.iter().copied())
            .collect();

        let mut candidates: Vec<&LabelSpan> = spans
            .iter()
            .enumerate()
            .filter(|(i, s)| {
                if s.is_dynasty_evidence() {
                    in_run.contains(i) && s.dynasties.contains(d.as_str())
                } else {
                    !s.label.is_dynasty_bearing()
                        && s.compatible_with(d)
                        && s.start >= extent_start
                        && s.end <= extent_end
                }
            })
            .map(|(_, s)| s)
            .collect();
        candidates.sort_by(|a, b| {
            b.len()
                .cmp(&a.len())
                .then(b.label.is_dynasty_bearing().cmp(&a.label.is_dynasty_bearing()))
                .then(a.start.cmp(&b.start))
                .then(a.label.cmp(&b.label))
        });
        let mut chosen: Vec<&LabelSpan> = Vec::new();
        for c in candidates {
            if chosen.iter().all(|k| !k.overlaps(c)) {
                chosen.push(c);
            }
        }
        chosen.sort_by_key(|s| (s.start, s.end));
        out.push(ConsistentSequence {
            doc_id: spans[0].doc_id.clone(),
            dynasty: d.clone(),
            spans: chosen.into_iter().cloned().collect(),
        });
    }
    out
}

/// Annotation dump, one TSV row per span.
pub fn spans_tsv(spans: &[LabelSpan]) -> String {
    spans.iter().map(LabelSpan::tsv_row).collect()
}
