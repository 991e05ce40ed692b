//! Frequent label-type patterns and candidate record extraction.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::annotator::{ConsistentSequence, LabelSpan};
use crate::corpus::{Corpus, Document, MARKER, ZI};
use crate::error::{Error, Result};
use crate::knowledge_base::{KnowledgeBase, LabelType};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PatternStatus {
    #[default]
    Proposed,
    Approved,
    Rejected,
}

impl PatternStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            PatternStatus::Proposed => "proposed",
            PatternStatus::Approved => "approved",
            PatternStatus::Rejected => "rejected",
        }
    }
}

impl FromStr for PatternStatus {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "proposed" => Ok(PatternStatus::Proposed),
            "approved" => Ok(PatternStatus::Approved),
            "rejected" => Ok(PatternStatus::Rejected),
            other => Err(Error::Invalid(format!("unknown status `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FilterPattern {
    pub id: String,
    pub sequence: Vec<LabelType>,
    pub support: usize,
    pub status: PatternStatus,
}

impl FilterPattern {
    pub fn new(sequence: Vec<LabelType>) -> Self {
        FilterPattern {
            id: pattern_id(&sequence),
            sequence,
            support: 0,
            status: PatternStatus::Proposed,
        }
    }

    pub fn approved(mut self) -> Self {
        self.status = PatternStatus::Approved;
        self
    }

    /// Parses `NAME-ADDRESS-ADDRESS-OFFICE`.
    pub fn parse_sequence(s: &str) -> Result<Vec<LabelType>> {
        let seq = s.split('-').map(LabelType::from_str).collect::<Result<Vec<_>>>()?;
        if seq.len() < 2 {
            return Err(Error::Invalid(format!("pattern `{s}` has fewer than two labels")));
        }
        Ok(seq)
    }

    pub fn joined(&self) -> String {
        join_labels(&self.sequence)
    }
}

fn join_labels(seq: &[LabelType]) -> String {
    seq.iter().map(|l| l.as_str()).collect::<Vec<_>>().join("-")
}

/// Stable identifier derived from the label sequence.
pub fn pattern_id(seq: &[LabelType]) -> String {
    join_labels(seq).to_ascii_lowercase()
}

/// P1..P4, the filter patterns reported for the gazetteer corpus.
pub fn reference_patterns() -> Vec<FilterPattern> {
    use LabelType::*;
    [
        vec![Name, Address, Nianhao, Entry],
        vec![Name, Address, Entry, Nianhao],
        vec![Name, Name, Address, Address],
        vec![Name, Address, Address, Office],
    ]
    .into_iter()
    .map(FilterPattern::new)
    .collect()
}

/// Counts label-type n-grams over the sequences that contain a NAME.
///
/// An occurrence is identified by its document and span offsets, so the
/// same stretch of text seen through two dynasty readings counts once.
pub fn mine_patterns(
    sequences: &[ConsistentSequence],
    n_min: usize,
    n_max: usize,
    min_support: usize,
) -> Result<Vec<FilterPattern>> {
    if n_min < 2 || n_min > n_max {
        return Err(Error::InvalidNgramRange { n_min, n_max });
    }
    // An occurrence is its document plus the offsets of its spans.
    type Occurrence<'a> = (&'a str, Vec<(usize, usize)>);
    let mut occurrences: BTreeMap<Vec<LabelType>, BTreeSet<Occurrence>> = BTreeMap::new();
    for seq in sequences.iter().filter(|s| s.has_name()) {
        for n in n_min..=n_max {
            for window in seq.spans.windows(n) {
                let key: Vec<LabelType> = window.iter().map(|s| s.label).collect();
                let offsets = window.iter().map(|s| (s.start, s.end)).collect();
                occurrences
                    .entry(key)
                    .or_default()
                    .insert((seq.doc_id.as_str(), offsets));
            }
        }
    }
    let mut out: Vec<FilterPattern> = occurrences
        .into_iter()
        .filter(|(_, occ)| occ.len() >= min_support)
        .map(|(seq, occ)| {
            let mut p = FilterPattern::new(seq);
            p.support = occ.len();
            p
        })
        .collect();
    out.sort_by(|a, b| b.support.cmp(&a.support).then_with(|| a.joined().cmp(&b.joined())));
    Ok(out)
}

/// A stretch of text whose spans conform to an approved pattern.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Excerpt {
    pub pattern_id: String,
    pub doc_id: String,
    pub dynasty: String,
    pub start: usize,
    pub end: usize,
    pub text: String,
    pub spans: Vec<LabelSpan>,
}

impl Excerpt {
    pub fn tsv_row(&self) -> String {
        let layout: Vec<String> = self
            .spans
            .iter()
            .map(|s| format!("{}:{}:{}", s.label, s.start, s.end))
            .collect();
        format!(
            "{}\t{}\t{}\t{}\t{}\t{}\t{}\n",
            self.pattern_id,
            self.doc_id,
            self.dynasty,
            self.start,
            self.end,
            self.text,
            layout.join(" ")
        )
    }
}

/// Every occurrence of an approved pattern inside a consistent sequence.
pub fn match_filter_patterns(
    sequences: &[ConsistentSequence],
    patterns: &[FilterPattern],
    corpus: &Corpus,
) -> Vec<Excerpt> {
    let approved: Vec<&FilterPattern> = patterns
        .iter()
        .filter(|p| p.status == PatternStatus::Approved)
        .collect();
    let mut out = Vec::new();
    for seq in sequences {
        let Some(doc) = corpus.get(&seq.doc_id) else {
            continue;
        };
        for p in &approved {
            let n = p.sequence.len();
            for window in seq.spans.windows(n) {
                if window.iter().map(|s| s.label).eq(p.sequence.iter().copied()) {
                    let start = window[0].start;
                    let end = window[n - 1].end;
                    out.push(Excerpt {
                        pattern_id: p.id.clone(),
                        doc_id: seq.doc_id.clone(),
                        dynasty: seq.dynasty.clone(),
                        start,
                        end,
                        text: doc.slice(start, end),
                        spans: window.to_vec(),
                    });
                }
            }
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum RecordSource {
    P5,
    P6,
    P7,
}

impl RecordSource {
    pub fn as_str(self) -> &'static str {
        match self {
            RecordSource::P5 => "P5",
            RecordSource::P6 => "P6",
            RecordSource::P7 => "P7",
        }
    }
}

impl FromStr for RecordSource {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "P5" => Ok(RecordSource::P5),
            "P6" => Ok(RecordSource::P6),
            "P7" => Ok(RecordSource::P7),
            other => Err(Error::Invalid(format!("unknown record source `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateRecord {
    pub dynasty: Option<String>,
    pub official_name: String,
    pub style_name: Option<String>,
    pub doc_id: String,
    pub name_start: usize,
    pub evidence: String,
    pub source: RecordSource,
    pub score: Option<f64>,
}

impl CandidateRecord {
    pub fn new(
        dynasty: Option<&str>,
        official_name: &str,
        style_name: Option<&str>,
        doc_id: &str,
        name_start: usize,
        source: RecordSource,
    ) -> Self {
        CandidateRecord {
            dynasty: dynasty.map(str::to_string),
            official_name: official_name.to_string(),
            style_name: style_name.map(str::to_string),
            doc_id: doc_id.to_string(),
            name_start,
            evidence: String::new(),
            source,
            score: None,
        }
    }

    fn key(&self) -> (Option<&str>, &str, Option<&str>, &str, usize) {
        (
            self.dynasty.as_deref(),
            &self.official_name,
            self.style_name.as_deref(),
            &self.doc_id,
            self.name_start,
        )
    }
}

/// Applies `<name> 字 Z1 Z2 <address>` to excerpts. Circle markers between
/// the parts are skipped.
pub fn extract_style_records(excerpts: &[Excerpt]) -> Vec<CandidateRecord> {
    let mut out: Vec<CandidateRecord> = Vec::new();
    let mut seen = BTreeSet::new();
    for ex in excerpts {
        let chars: Vec<char> = ex.text.chars().collect();
        let at = |abs: usize| chars.get(abs.wrapping_sub(ex.start)).copied();
        let skip = |mut abs: usize| {
            while at(abs) == Some(MARKER) {
                abs += 1;
            }
            abs
        };
        for pair in ex.spans.windows(2) {
            let (name, addr) = (&pair[0], &pair[1]);
            if name.label != LabelType::Name || addr.label != LabelType::Address {
                continue;
            }
            let zi = skip(name.end);
            if at(zi) != Some(ZI) {
                continue;
            }
            let z1 = skip(zi + 1);
            let z2 = skip(z1 + 1);
            let style: Option<String> = [at(z1), at(z2)]
                .into_iter()
                .map(|c| c.filter(|&c| is_name_char(c)))
                .collect();
            let Some(style) = style else {
                continue;
            };
            if z2 >= addr.start || skip(z2 + 1) != addr.start {
                continue;
            }
            let mut rec = CandidateRecord::new(
                Some(&ex.dynasty),
                &name.surface,
                Some(&style),
                &ex.doc_id,
                name.start,
                RecordSource::P5,
            );
            rec.evidence = ex.text.clone();
            let key = format!("{:?}", rec.key());
            if seen.insert(key) {
                out.push(rec);
            }
        }
    }
    out
}

fn is_name_char(c: char) -> bool {
    c != MARKER && c != ZI && !c.is_whitespace()
}

/// Scans raw text for `○ C1 C2 C3 字 Z1 Z2` and `○ C1 C2 字 Z1 Z2`.
///
/// One circle may sit between the name block and `字`. The three-character
/// form is tried first and each circle yields at most one record.
pub fn extract_circle_pairs(doc: &Document) -> Vec<CandidateRecord> {
    let chars = doc.chars();
    let mut out = Vec::new();
    for (i, _) in chars.iter().enumerate().filter(|(_, &c)| c == MARKER) {
        for (name_len, source) in [(3, RecordSource::P6), (2, RecordSource::P7)] {
            if let Some(rec) = circle_pair_at(doc, i, name_len, source) {
                out.push(rec);
                break;
            }
        }
    }
    out
}

fn circle_pair_at(doc: &Document, marker: usize, name_len: usize, source: RecordSource) -> Option<CandidateRecord> {
    let chars = doc.chars();
    let name_start = marker + 1;
    let name_end = name_start + name_len;
    let name = chars.get(name_start..name_end)?;
    if !name.iter().all(|&c| is_name_char(c)) {
        return None;
    }
    let mut zi = name_end;
    if chars.get(zi) == Some(&MARKER) {
        zi += 1;
    }
    if chars.get(zi) != Some(&ZI) {
        return None;
    }
    let style = chars.get(zi + 1..zi + 3)?;
    if !style.iter().all(|&c| is_name_char(c)) {
        return None;
    }
    let name: String = name.iter().collect();
    let style: String = style.iter().collect();
    let mut rec = CandidateRecord::new(None, &name, Some(&style), doc.id(), name_start, source);
    rec.evidence = doc.slice(marker, zi + 3);
    Some(rec)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum MatchScheme {
    #[serde(rename = "TABLE1")]
    Table1,
    #[serde(rename = "TABLE2")]
    Table2,
}

impl MatchScheme {
    pub fn as_str(self) -> &'static str {
        match self {
            MatchScheme::Table1 => "TABLE1",
            MatchScheme::Table2 => "TABLE2",
        }
    }
}

impl FromStr for MatchScheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "TABLE1" => Ok(MatchScheme::Table1),
            "TABLE2" => Ok(MatchScheme::Table2),
            other => Err(Error::Invalid(format!("unknown match scheme `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct MatchType {
    pub scheme: MatchScheme,
    pub type_id: u8,
}

impl fmt::Display for MatchType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.scheme.as_str(), self.type_id)
    }
}

/// Row lookup in the seven-type dynasty/name/style table.
pub fn table1_type(dynasty: bool, name: bool, style: bool) -> u8 {
    match (dynasty, name, style) {
        (true, true, true) => 1,
        (true, true, false) => 2,
        (false, true, true) => 3,
        (true, false, true) => 4,
        (false, true, false) => 5,
        (false, false, true) => 6,
        (_, false, false) => 7,
    }
}

/// Row lookup in the four-type name/style table.
pub fn table2_type(name: bool, style: bool) -> u8 {
    match (name, style) {
        (true, true) => 1,
        (true, false) => 2,
        (false, true) => 3,
        (false, false) => 4,
    }
}

/// Compares a record with the person list.
///
/// Table 1: the dynasty matches when a person with this name lived in this
/// dynasty, the name matches when any person bears it, and the style
/// matches when one person carries both the name and the style. Table 2
/// checks the name and the style independently.
pub fn classify_record(record: &CandidateRecord, kb: &KnowledgeBase, scheme: MatchScheme) -> Result<MatchType> {
    let name = &record.official_name;
    let style = record.style_name.as_deref();
    let name_match = kb.has_person_named(name);
    let type_id = match scheme {
        MatchScheme::Table1 => {
            let dynasty = record.dynasty.as_deref().ok_or(Error::MissingDynasty)?;
            let dynasty_match = kb
                .persons()
                .any(|p| &p.official_name == name && p.dynasty.as_deref() == Some(dynasty));
            let style_match = style.is_some_and(|s| {
                kb.persons()
                    .any(|p| &p.official_name == name && p.style_name.as_deref() == Some(s))
            });
            table1_type(dynasty_match, name_match, style_match)
        }
        MatchScheme::Table2 => {
            let style_match = style.is_some_and(|s| kb.persons().any(|p| p.style_name.as_deref() == Some(s)));
            table2_type(name_match, style_match)
        }
    };
    Ok(MatchType { scheme, type_id })
}

/// The scheme a record is classified under: Table 1 when it carries a
/// dynasty, Table 2 otherwise.
pub fn default_scheme(record: &CandidateRecord) -> MatchScheme {
    if record.dynasty.is_some() {
        MatchScheme::Table1
    } else {
        MatchScheme::Table2
    }
}

pub fn patterns_tsv(patterns: &[FilterPattern]) -> String {
    patterns
        .iter()
        .map(|p| format!("{}\t{}\t{}\t{}\n", p.id, p.joined(), p.support, p.status.as_str()))
        .collect()
}

pub fn parse_patterns(text: &str, file: &str) -> Result<Vec<FilterPattern>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        let err = |m: String| Error::parse(file, i + 1, m);
        if cols.len() != 4 {
            return Err(err(format!("expected 4 columns, found {}", cols.len())));
        }
        let sequence = FilterPattern::parse_sequence(cols[1]).map_err(|e| err(e.to_string()))?;
        out.push(FilterPattern {
            id: cols[0].to_string(),
            sequence,
            support: cols[2]
                .trim()
                .parse()
                .map_err(|_| err(format!("bad support `{}`", cols[2])))?,
            status: cols[3].parse().map_err(|e: Error| err(e.to_string()))?,
        });
    }
    Ok(out)
}

/// A record as stored in the record file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordRow {
    pub record: CandidateRecord,
    pub match_type: Option<MatchType>,
}

pub fn records_tsv(rows: &[RecordRow]) -> String {
    rows.iter()
        .map(|r| {
            let rec = &r.record;
            format!(
                "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\n",
                rec.dynasty.as_deref().unwrap_or(""),
                rec.official_name,
                rec.style_name.as_deref().unwrap_or(""),
                rec.doc_id,
                rec.name_start,
                rec.source.as_str(),
                r.match_type.map_or("", |m| m.scheme.as_str()),
                r.match_type.map_or(String::new(), |m| m.type_id.to_string()),
            )
        })
        .collect()
}

pub fn parse_records(text: &str, file: &str) -> Result<Vec<RecordRow>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        let err = |m: String| Error::parse(file, i + 1, m);
        if cols.len() != 8 {
            return Err(err(format!("expected 8 columns, found {}", cols.len())));
        }
        let opt = |s: &str| (!s.trim().is_empty()).then(|| s.trim().to_string());
        if cols[1].trim().is_empty() {
            return Err(err("empty official name".into()));
        }
        let record = CandidateRecord {
            dynasty: opt(cols[0]),
            official_name: cols[1].trim().to_string(),
            style_name: opt(cols[2]),
            doc_id: cols[3].to_string(),
            name_start: cols[4]
                .trim()
                .parse()
                .map_err(|_| err(format!("bad offset `{}`", cols[4])))?,
            evidence: String::new(),
            source: cols[5].parse().map_err(|e: Error| err(e.to_string()))?,
            score: None,
        };
        let match_type = match (opt(cols[6]), opt(cols[7])) {
            (Some(s), Some(t)) => Some(MatchType {
                scheme: s.parse().map_err(|e: Error| err(e.to_string()))?,
                type_id: t.parse().map_err(|_| err(format!("bad match type `{t}`")))?,
            }),
            _ => None,
        };
        out.push(RecordRow { record, match_type });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::knowledge_base::PersonRecord;
    use LabelType::*;

    fn seq(doc: &str, dynasty: &str, labels: &[(LabelType, usize, usize)]) -> ConsistentSequence {
        ConsistentSequence {
            doc_id: doc.into(),
            dynasty: dynasty.into(),
            spans: labels
                .iter()
                .map(|&(label, start, end)| LabelSpan {
                    doc_id: doc.into(),
                    start,
                    end,
                    label,
                    surface: String::new(),
                    dynasties: Default::default(),
                })
                .collect(),
        }
    }

    #[test]
    fn p4_shaped_pattern_ranks_first() {
        let seqs: Vec<_> = (0..10)
            .map(|i| {
                seq(
                    &format!("d{i}"),
                    "Ming",
                    &[(Name, 0, 2), (Address, 5, 7), (Address, 8, 10), (Office, 10, 12)],
                )
            })
            .collect();
        let pats = mine_patterns(&seqs, 4, 4, 5).unwrap();
        assert_eq!(pats[0].joined(), "NAME-ADDRESS-ADDRESS-OFFICE");
        assert_eq!(pats[0].support, 10);
        assert!(mine_patterns(&seqs, 2, 4, 11).unwrap().is_empty());
        assert!(matches!(
            mine_patterns(&seqs, 4, 3, 1),
            Err(Error::InvalidNgramRange { .. })
        ));
    }

    #[test]
    fn sequences_without_names_are_ignored() {
        let seqs = vec![seq("d", "Ming", &[(Office, 0, 2), (Address, 3, 5)])];
        assert!(mine_patterns(&seqs, 2, 2, 1).unwrap().is_empty());
    }

    #[test]
    fn identical_offsets_count_once_across_dynasties() {
        let a = seq("d", "Ming", &[(Name, 0, 2), (Address, 3, 5)]);
        let b = seq("d", "Yuan", &[(Name, 0, 2), (Address, 3, 5)]);
        let pats = mine_patterns(&[a, b], 2, 2, 1).unwrap();
        assert_eq!(pats[0].support, 1);
    }

    #[test]
    fn reference_patterns_roundtrip_through_file() {
        let pats = reference_patterns();
        assert_eq!(pats[0].joined(), "NAME-ADDRESS-NIANHAO-ENTRY");
        assert_eq!(pats[3].id, "name-address-address-office");
        let text = patterns_tsv(&pats);
        assert_eq!(parse_patterns(&text, "p").unwrap(), pats);
    }

    #[test]
    fn no_approved_patterns_no_excerpts() {
        let corpus = Corpus::from_documents(vec![Document::new("d", "陳瑜雷州")]).unwrap();
        let s = seq("d", "Ming", &[(Name, 0, 2), (Address, 2, 4)]);
        let p = FilterPattern::new(vec![Name, Address]);
        assert!(match_filter_patterns(std::slice::from_ref(&s), std::slice::from_ref(&p), &corpus).is_empty());
        assert_eq!(match_filter_patterns(&[s], &[p.approved()], &corpus).len(), 1);
    }

    fn excerpt(text: &str, spans: &[(LabelType, usize, usize)]) -> Excerpt {
        let s = seq("d", "Ming", spans);
        Excerpt {
            pattern_id: "p".into(),
            doc_id: "d".into(),
            dynasty: "Ming".into(),
            start: 0,
            end: text.chars().count(),
            text: text.into(),
            spans: s
                .spans
                .into_iter()
                .map(|mut sp| {
                    sp.surface = text.chars().skip(sp.start).take(sp.end - sp.start).collect();
                    sp
                })
                .collect(),
        }
    }

    #[test]
    fn style_rule_needs_exactly_two_chars() {
        let ex = excerpt("陳瑜字仲庸雷州", &[(Name, 0, 2), (Address, 5, 7)]);
        let recs = extract_style_records(&[ex]);
        assert_eq!(recs.len(), 1);
        assert_eq!(recs[0].style_name.as_deref(), Some("仲庸"));
        assert_eq!(recs[0].dynasty.as_deref(), Some("Ming"));

        let ex = excerpt("陳瑜字仲庸之雷州", &[(Name, 0, 2), (Address, 6, 8)]);
        assert!(extract_style_records(&[ex]).is_empty());
    }

    #[test]
    fn circle_pairs() {
        let doc = Document::new("f4", "郡人感其德立廟祀之○陳瑜○字仲庸雷州人");
        let recs = extract_circle_pairs(&doc);
        assert_eq!(recs.len(), 1);
        assert_eq!(recs[0].official_name, "陳瑜");
        assert_eq!(recs[0].style_name.as_deref(), Some("仲庸"));
        assert_eq!(recs[0].source, RecordSource::P7);
        assert_eq!(recs[0].dynasty, None);

        let doc = Document::new("y", "○也兒吉尼字尚文唐兀氏人");
        assert!(extract_circle_pairs(&doc).is_empty());
        assert!(extract_circle_pairs(&Document::new("n", "陳瑜字仲庸")).is_empty());

        let doc = Document::new("p6", "○曾尚賓字子用");
        let recs = extract_circle_pairs(&doc);
        assert_eq!(recs.len(), 1);
        assert_eq!(recs[0].source, RecordSource::P6);
        assert_eq!(recs[0].official_name, "曾尚賓");
    }

    #[test]
    fn table1_rows() {
        assert_eq!(table1_type(true, true, true), 1);
        assert_eq!(table1_type(true, true, false), 2);
        assert_eq!(table1_type(false, true, true), 3);
        assert_eq!(table1_type(true, false, true), 4);
        assert_eq!(table1_type(false, true, false), 5);
        assert_eq!(table1_type(false, false, true), 6);
        assert_eq!(table1_type(true, false, false), 7);
        assert_eq!(table1_type(false, false, false), 7);
    }

    #[test]
    fn classification_examples() {
        let mut kb = KnowledgeBase::new();
        kb.add_person(PersonRecord::new("陳瑜").with_dynasty("Yuan")).unwrap();
        let rec = CandidateRecord::new(Some("Yuan"), "陳瑜", Some("仲庸"), "t1", 0, RecordSource::P5);
        assert_eq!(classify_record(&rec, &kb, MatchScheme::Table1).unwrap().type_id, 2);

        let mut kb = KnowledgeBase::new();
        kb.add_person(PersonRecord::new("陳瑜").with_style("仲庸")).unwrap();
        let rec = CandidateRecord::new(None, "陳瑜", Some("仲庸"), "t1", 0, RecordSource::P7);
        assert_eq!(classify_record(&rec, &kb, MatchScheme::Table2).unwrap().type_id, 1);
        assert!(matches!(
            classify_record(&rec, &kb, MatchScheme::Table1),
            Err(Error::MissingDynasty)
        ));

        let rec = CandidateRecord::new(None, "甲乙", Some("丙丁"), "t1", 0, RecordSource::P7);
        let empty = KnowledgeBase::new();
        assert_eq!(classify_record(&rec, &empty, MatchScheme::Table2).unwrap().type_id, 4);
    }

    #[test]
    fn record_file_roundtrip() {
        let rec = CandidateRecord::new(Some("Yuan"), "陳瑜", Some("仲庸"), "t1", 0, RecordSource::P5);
        let rows = vec![
            RecordRow {
                record: rec,
                match_type: Some(MatchType {
                    scheme: MatchScheme::Table1,
                    type_id: 2,
                }),
            },
            RecordRow {
                record: CandidateRecord::new(None, "甲乙", None, "t2", 4, RecordSource::P7),
                match_type: None,
            },
        ];
        let text = records_tsv(&rows);
        assert_eq!(text.lines().next().unwrap(), "Yuan\t陳瑜\t仲庸\tt1\t0\tP5\tTABLE1\t2");
        assert_eq!(parse_records(&text, "r").unwrap(), rows);
    }
}
