//! Paragraph beginnings and segmentation scoring.
//!
//! A biography usually opens with the subject's name, so name records and a
//! few opening patterns mark where paragraphs begin:
//!
//! * `P8`: name, address, `人`
//! * `P9`: name, address, address, `人`
//! * `P10`: name, reign period, office (one unlabeled character may sit
//!   between the reign period and the office, as in `楊嘉至正間教諭`)

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::annotator::{ConsistentSequence, LabelSpan};
use crate::corpus::Document;
use crate::error::{Error, Result};
use crate::gold::GoldAnnotations;
use crate::knowledge_base::LabelType;
use crate::pattern_miner::CandidateRecord;

/// Character that closes a native-place phrase.
pub const REN: char = '人';

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Origin {
    #[serde(rename = "RECORD")]
    Record,
    P8,
    P9,
    P10,
}

impl Origin {
    pub fn as_str(self) -> &'static str {
        match self {
            Origin::Record => "RECORD",
            Origin::P8 => "P8",
            Origin::P9 => "P9",
            Origin::P10 => "P10",
        }
    }
}

impl fmt::Display for Origin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Origin {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "RECORD" => Ok(Origin::Record),
            "P8" => Ok(Origin::P8),
            "P9" => Ok(Origin::P9),
            "P10" => Ok(Origin::P10),
            other => Err(Error::Invalid(format!("unknown beginning origin `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Beginning {
    pub doc_id: String,
    pub position: usize,
    pub origin: Origin,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Paragraph {
    pub start: usize,
    pub end: usize,
}

/// Beginnings from name records only.
pub fn record_beginnings(doc: &Document, records: &[CandidateRecord]) -> Vec<Beginning> {
    let mut found = BTreeMap::new();
    for r in records
        .iter()
        .filter(|r| r.doc_id == doc.id() && r.name_start < doc.len())
    {
        found.entry(r.name_start).or_insert(Origin::Record);
    }
    into_beginnings(doc, found)
}

/// Beginnings from records plus the `P8`–`P10` opening patterns, sorted by
/// position. A position found several ways keeps the first origin in
/// `RECORD, P8, P9, P10` order.
pub fn find_beginnings(
    doc: &Document,
    records: &[CandidateRecord],
    sequences: &[ConsistentSequence],
) -> Vec<Beginning> {
    let mut found: BTreeMap<usize, Origin> = record_beginnings(doc, records)
        .into_iter()
        .map(|b| (b.position, b.origin))
        .collect();
    for seq in sequences.iter().filter(|s| s.doc_id == doc.id()) {
        for (pos, origin) in pattern_beginnings(doc, &seq.spans) {
            let slot = found.entry(pos).or_insert(origin);
            *slot = (*slot).min(origin);
        }
    }
    into_beginnings(doc, found)
}

fn into_beginnings(doc: &Document, found: BTreeMap<usize, Origin>) -> Vec<Beginning> {
    found
        .into_iter()
        .map(|(position, origin)| Beginning {
            doc_id: doc.id().to_string(),
            position,
            origin,
        })
        .collect()
}

fn pattern_beginnings(doc: &Document, spans: &[LabelSpan]) -> Vec<(usize, Origin)> {
    let by_start: BTreeMap<usize, &LabelSpan> = spans.iter().map(|s| (s.start, s)).collect();
    let covered = |i: usize| spans.iter().any(|s| s.start <= i && i < s.end);
    let next = |after: &LabelSpan, label: LabelType| {
        by_start
            .get(&doc.skip_markers(after.end))
            .copied()
            .filter(|s| s.label == label)
    };
    let ren_after = |s: &LabelSpan| doc.chars().get(doc.skip_markers(s.end)) == Some(&REN);

    let mut out = Vec::new();
    for name in spans.iter().filter(|s| s.label == LabelType::Name) {
        if let Some(addr) = next(name, LabelType::Address) {
            if ren_after(addr) {
                out.push((name.start, Origin::P8));
            } else if next(addr, LabelType::Address).is_some_and(ren_after) {
                out.push((name.start, Origin::P9));
            }
        }
        if let Some(nianhao) = next(name, LabelType::Nianhao) {
            let direct = next(nianhao, LabelType::Office).is_some();
            let gap = doc.skip_markers(nianhao.end);
            let bridged = gap < doc.len()
                && !covered(gap)
                && !doc.chars()[gap].is_whitespace()
                && by_start
                    .get(&doc.skip_markers(gap + 1))
                    .is_some_and(|s| s.label == LabelType::Office);
            if direct || bridged {
                out.push((name.start, Origin::P10));
            }
        }
    }
    out
}

/// Tiles the document from the first beginning onwards. Text before the
/// first beginning is a preamble and belongs to no paragraph.
pub fn segment(doc: &Document, beginnings: &[Beginning]) -> Vec<Paragraph> {
    let mut starts: Vec<usize> = beginnings
        .iter()
        .map(|b| b.position)
        .filter(|&p| p < doc.len())
        .collect();
    starts.sort_unstable();
    starts.dedup();
    starts
        .iter()
        .enumerate()
        .map(|(i, &start)| Paragraph {
            start,
            end: starts.get(i + 1).copied().unwrap_or(doc.len()),
        })
        .collect()
}

/// Two consecutive beginnings in one document.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct BeginningPair {
    pub doc_id: String,
    pub first: usize,
    pub second: usize,
}

/// Consecutive beginnings per document. The last beginning of a document has
/// no partner and forms no pair.
pub fn name_pairs(beginnings: &[Beginning]) -> Vec<BeginningPair> {
    let mut by_doc: BTreeMap<&str, BTreeSet<usize>> = BTreeMap::new();
    for b in beginnings {
        by_doc.entry(&b.doc_id).or_default().insert(b.position);
    }
    let mut out = Vec::new();
    for (doc_id, positions) in by_doc {
        let positions: Vec<usize> = positions.into_iter().collect();
        for w in positions.windows(2) {
            out.push(BeginningPair {
                doc_id: doc_id.to_string(),
                first: w[0],
                second: w[1],
            });
        }
    }
    out
}

/// Gold paragraph boundaries per document. Pairs in documents absent from
/// the map cannot be verified.
pub type GoldBoundaries = BTreeMap<String, BTreeSet<usize>>;

pub fn gold_boundaries(gold: &GoldAnnotations) -> GoldBoundaries {
    gold.docs()
        .map(|d| (d.doc_id.clone(), d.boundaries.iter().copied().collect()))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SegmentationScore {
    /// First name of the pair sits on a gold boundary.
    pub x1: f64,
    /// Second name sits on a gold boundary.
    pub x2: f64,
    /// Both do.
    pub x3: f64,
    /// The pair brackets exactly one gold paragraph.
    pub y1: f64,
    /// Same as `y1`, among the pairs counted by `x3`.
    pub y2: f64,
    pub n_pairs: usize,
    pub n_excluded: usize,
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

pub fn score_segmentation(pairs: &[BeginningPair], gold: &GoldBoundaries) -> Result<SegmentationScore> {
    let (mut n, mut excluded) = (0, 0);
    let (mut first, mut second, mut both, mut exact, mut exact_both) = (0, 0, 0, 0, 0);
    for p in pairs {
        let Some(bounds) = gold.get(&p.doc_id) else {
            excluded += 1;
            continue;
        };
        n += 1;
        let a = bounds.contains(&p.first);
        let b = bounds.contains(&p.second);
        first += a as usize;
        second += b as usize;
        if a && b {
            both += 1;
            let single = p.first < p.second && bounds.range(p.first + 1..p.second).next().is_none();
            if single {
                exact += 1;
                exact_both += 1;
            }
        }
    }
    if n == 0 {
        return Err(Error::NoVerifiablePairs);
    }
    Ok(SegmentationScore {
        x1: ratio(first, n),
        x2: ratio(second, n),
        x3: ratio(both, n),
        y1: ratio(exact, n),
        y2: ratio(exact_both, both),
        n_pairs: n,
        n_excluded: excluded,
    })
}

pub fn beginnings_tsv(beginnings: &[Beginning]) -> String {
    beginnings
        .iter()
        .map(|b| format!("{}\t{}\t{}\n", b.doc_id, b.position, b.origin))
        .collect()
}

pub fn parse_beginnings(text: &str, file: &str) -> Result<Vec<Beginning>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 3 {
            return Err(Error::parse(file, i + 1, "expected doc_id, position, origin"));
        }
        let position = cols[1]
            .trim()
            .parse()
            .map_err(|_| Error::parse(file, i + 1, format!("bad position `{}`", cols[1])))?;
        let origin = cols[2]
            .parse()
            .map_err(|e: Error| Error::parse(file, i + 1, e.to_string()))?;
        out.push(Beginning {
            doc_id: cols[0].to_string(),
            position,
            origin,
        });
    }
    Ok(out)
}

/// Reads `doc_id<TAB>position` rows.
pub fn parse_gold_boundaries(text: &str, file: &str) -> Result<GoldBoundaries> {
    let mut out = GoldBoundaries::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 2 {
            return Err(Error::parse(file, i + 1, "expected doc_id, position"));
        }
        let position = cols[1]
            .trim()
            .parse()
            .map_err(|_| Error::parse(file, i + 1, format!("bad position `{}`", cols[1])))?;
        out.entry(cols[0].to_string()).or_default().insert(position);
    }
    Ok(out)
}

pub fn gold_boundaries_tsv(gold: &GoldBoundaries) -> String {
    gold.iter()
        .flat_map(|(doc, ps)| ps.iter().map(move |p| format!("{doc}\t{p}\n")))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::annotator::{annotate, enforce_consistency, DEFAULT_WINDOW};
    use crate::knowledge_base::{KbEntry, KnowledgeBase};
    use crate::pattern_miner::RecordSource;
    use proptest::prelude::*;

    fn kb() -> KnowledgeBase {
        let mut kb = KnowledgeBase::new();
        for (s, l) in [
            ("葉溥", LabelType::Name),
            ("楊嘉", LabelType::Name),
            ("浙江", LabelType::Address),
            ("龍泉", LabelType::Address),
            ("至正", LabelType::Nianhao),
            ("教諭", LabelType::Office),
        ] {
            kb.add_entry(KbEntry::new(s, l, ["Yuan"])).unwrap();
        }
        kb
    }

    fn beginnings_of(text: &str) -> Vec<Beginning> {
        let doc = Document::new("d", text);
        let seqs = enforce_consistency(&annotate(&doc, &kb()), DEFAULT_WINDOW).unwrap();
        find_beginnings(&doc, &[], &seqs)
    }

    #[test]
    fn p9_native_place() {
        let b = beginnings_of("葉溥浙江龍泉人");
        assert_eq!(b.len(), 1);
        assert_eq!((b[0].position, b[0].origin), (0, Origin::P9));
    }

    #[test]
    fn p8_with_marker() {
        let b = beginnings_of("某某葉溥○浙江人");
        assert_eq!((b[0].position, b[0].origin), (2, Origin::P8));
    }

    #[test]
    fn p10_tolerates_one_character() {
        let b = beginnings_of("楊嘉至正間教諭");
        assert_eq!((b[0].position, b[0].origin), (0, Origin::P10));
        assert_eq!(beginnings_of("楊嘉至正教諭")[0].origin, Origin::P10);
        assert!(beginnings_of("楊嘉至正間間教諭").is_empty());
    }

    #[test]
    fn nothing_found() {
        assert!(beginnings_of("之乎者也").is_empty());
        let doc = Document::new("d", "之乎者也");
        assert!(find_beginnings(&doc, &[], &[]).is_empty());
    }

    #[test]
    fn records_give_beginnings() {
        let doc = Document::new("d", "甲乙丙丁");
        let recs = vec![
            CandidateRecord::new(None, "丙丁", None, "d", 2, RecordSource::P7),
            CandidateRecord::new(None, "丙丁", None, "other", 1, RecordSource::P7),
        ];
        let b = find_beginnings(&doc, &recs, &[]);
        assert_eq!(b.len(), 1);
        assert_eq!((b[0].position, b[0].origin), (2, Origin::Record));
    }

    #[test]
    fn tiling() {
        let doc = Document::new("d", &"之".repeat(100));
        let mk = |ps: &[usize]| {
            ps.iter()
                .map(|&position| Beginning {
                    doc_id: "d".into(),
                    position,
                    origin: Origin::Record,
                })
                .collect::<Vec<_>>()
        };
        assert_eq!(
            segment(&doc, &mk(&[10, 50])),
            vec![Paragraph { start: 10, end: 50 }, Paragraph { start: 50, end: 100 }]
        );
        assert_eq!(segment(&doc, &mk(&[0])), vec![Paragraph { start: 0, end: 100 }]);
        assert!(segment(&doc, &[]).is_empty());
    }

    fn pair(first: usize, second: usize) -> BeginningPair {
        BeginningPair {
            doc_id: "d".into(),
            first,
            second,
        }
    }

    #[test]
    fn four_pair_fixture() {
        let gold: GoldBoundaries = [("d".to_string(), [0, 10, 20, 30, 40].into_iter().collect())].into();
        let pairs = [pair(0, 10), pair(20, 30), pair(40, 45), pair(5, 15)];
        let s = score_segmentation(&pairs, &gold).unwrap();
        assert_eq!((s.x1, s.x2, s.x3, s.y1, s.y2), (0.75, 0.5, 0.5, 0.5, 1.0));
        assert_eq!((s.n_pairs, s.n_excluded), (4, 0));
    }

    #[test]
    fn multi_paragraph_gap_counts_for_x3_only() {
        let gold: GoldBoundaries = [("d".to_string(), [0, 10, 20].into_iter().collect())].into();
        let s = score_segmentation(&[pair(0, 20)], &gold).unwrap();
        assert_eq!((s.x3, s.y1, s.y2), (1.0, 0.0, 0.0));
    }

    #[test]
    fn unverifiable_pairs() {
        let gold: GoldBoundaries = [("d".to_string(), [0].into_iter().collect())].into();
        let other = BeginningPair {
            doc_id: "x".into(),
            first: 0,
            second: 3,
        };
        let s = score_segmentation(&[pair(0, 5), other.clone()], &gold).unwrap();
        assert_eq!((s.n_pairs, s.n_excluded), (1, 1));
        assert!(matches!(
            score_segmentation(&[other], &gold),
            Err(Error::NoVerifiablePairs)
        ));
    }

    #[test]
    fn tsv_roundtrip() {
        let b = vec![
            Beginning {
                doc_id: "a".into(),
                position: 3,
                origin: Origin::P10,
            },
            Beginning {
                doc_id: "b".into(),
                position: 0,
                origin: Origin::Record,
            },
        ];
        assert_eq!(parse_beginnings(&beginnings_tsv(&b), "b.tsv").unwrap(), b);
        let gold: GoldBoundaries = [("a".to_string(), [1, 9].into_iter().collect())].into();
        assert_eq!(
            parse_gold_boundaries(&gold_boundaries_tsv(&gold), "g.tsv").unwrap(),
            gold
        );
        assert!(parse_beginnings("a\t1\tP11\n", "b.tsv").is_err());
    }

    proptest! {
        #[test]
        fn x3_bounded_and_ratios_in_unit_interval(
            gold in prop::collection::btree_set(0usize..200, 0..30),
            raw in prop::collection::btree_set(0usize..200, 2..30),
        ) {
            let positions: Vec<usize> = raw.into_iter().collect();
            let pairs: Vec<BeginningPair> = positions.windows(2).map(|w| pair(w[0], w[1])).collect();
            let gold: GoldBoundaries = [("d".to_string(), gold)].into();
            let s = score_segmentation(&pairs, &gold).unwrap();
            prop_assert!(s.x3 <= s.x1.min(s.x2));
            prop_assert!(s.y1 <= s.x3);
            for v in [s.x1, s.x2, s.x3, s.y1, s.y2] {
                prop_assert!((0.0..=1.0).contains(&v));
            }
        }

        #[test]
        fn segments_tile_the_tail(len in 1usize..300, raw in prop::collection::vec(0usize..300, 0..20)) {
            let doc = Document::new("d", &"之".repeat(len));
            let bs: Vec<Beginning> = raw
                .iter()
                .map(|&position| Beginning { doc_id: "d".into(), position, origin: Origin::Record })
                .collect();
            let paras = segment(&doc, &bs);
            if let Some(first) = paras.first() {
                prop_assert_eq!(Some(first.start), raw.iter().copied().filter(|&p| p < len).min());
                prop_assert_eq!(paras.last().unwrap().end, len);
                for w in paras.windows(2) {
                    prop_assert_eq!(w[0].end, w[1].start);
                    prop_assert!(w[0].start < w[0].end);
                }
            }
        }

        #[test]
        fn patterns_never_reduce_beginnings(seed in 0u64..500) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let pieces = ["葉溥", "楊嘉", "浙江", "龍泉", "人", "至正", "間", "教諭", "○", "之"];
            let text: String = (0..20).map(|_| pieces[rng.gen_range(0..pieces.len())]).collect();
            let doc = Document::new("d", &text);
            let seqs = enforce_consistency(&annotate(&doc, &kb()), DEFAULT_WINDOW).unwrap();
            let recs: Vec<CandidateRecord> = (0..3)
                .map(|_| CandidateRecord::new(None, "x", None, "d", rng.gen_range(0..doc.len()), RecordSource::P5))
                .collect();
            let only = record_beginnings(&doc, &recs);
            let all = find_beginnings(&doc, &recs, &seqs);
            prop_assert!(all.len() >= only.len());
            let all_pos: BTreeSet<usize> = all.iter().map(|b| b.position).collect();
            prop_assert!(only.iter().all(|b| all_pos.contains(&b.position)));
        }
    }
}
