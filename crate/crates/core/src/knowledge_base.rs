//! Lexicon and biographical records.
//!
//! The lexicon is a set of [`KbEntry`] values indexed by a per-type prefix
//! trie so that every entry starting at a document position can be found in
//! one walk. Person records back the record classification and the
//! name/address pairing.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::{is_blocking, Corpus, Document};
use crate::error::{Error, Result};
use crate::gold::{EntityKind, GoldAnnotations};
use crate::pattern_miner::CandidateRecord;

pub type Dynasties = BTreeSet<String>;

const SURNAMES_TSV: &str = include_str!("../resources/surnames.tsv");
const TIME_TSV: &str = include_str!("../resources/time.tsv");

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum LabelType {
    Name,
    Style,
    Address,
    Office,
    Entry,
    Nianhao,
    Time,
    Surname,
}

impl LabelType {
    pub const ALL: [LabelType; 8] = [
        LabelType::Name,
        LabelType::Style,
        LabelType::Address,
        LabelType::Office,
        LabelType::Entry,
        LabelType::Nianhao,
        LabelType::Time,
        LabelType::Surname,
    ];

    /// The label types used when mining consistent n-gram patterns.
    pub const MINING: [LabelType; 5] = [
        LabelType::Name,
        LabelType::Address,
        LabelType::Office,
        LabelType::Entry,
        LabelType::Nianhao,
    ];

    /// Named-entity types that drive CRF feature groups 3 and 6.
    pub const FEATURE_NE: [LabelType; 4] = [LabelType::Office, LabelType::Entry, LabelType::Nianhao, LabelType::Time];

    pub fn is_dynasty_bearing(self) -> bool {
        matches!(
            self,
            LabelType::Name | LabelType::Office | LabelType::Entry | LabelType::Nianhao
        )
    }

    pub fn as_str(self) -> &'static str {
        match self {
            LabelType::Name => "NAME",
            LabelType::Style => "STYLE",
            LabelType::Address => "ADDRESS",
            LabelType::Office => "OFFICE",
            LabelType::Entry => "ENTRY",
            LabelType::Nianhao => "NIANHAO",
            LabelType::Time => "TIME",
            LabelType::Surname => "SURNAME",
        }
    }

    /// Lower-case token used in feature identifiers (`officeRight@3`).
    pub fn feature_token(self) -> &'static str {
        match self {
            LabelType::Name => "name",
            LabelType::Style => "style",
            LabelType::Address => "address",
            LabelType::Office => "office",
            LabelType::Entry => "entry",
            LabelType::Nianhao => "nianhao",
            LabelType::Time => "time",
            LabelType::Surname => "surname",
        }
    }
}

impl fmt::Display for LabelType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for LabelType {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        LabelType::ALL
            .into_iter()
            .find(|t| t.as_str().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::UnknownLabelType(s.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KbEntry {
    pub surface: String,
    pub label: LabelType,
    pub dynasties: Dynasties,
}

impl KbEntry {
    pub fn new<I, S>(surface: impl Into<String>, label: LabelType, dynasties: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        KbEntry {
            surface: surface.into(),
            label,
            dynasties: dynasties.into_iter().map(Into::into).collect(),
        }
    }

    pub fn char_len(&self) -> usize {
        self.surface.chars().count()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct PersonRecord {
    pub official_name: String,
    pub style_name: Option<String>,
    pub dynasty: Option<String>,
    pub native_place: Option<String>,
}

impl PersonRecord {
    pub fn new(official_name: impl Into<String>) -> Self {
        PersonRecord {
            official_name: official_name.into(),
            style_name: None,
            dynasty: None,
            native_place: None,
        }
    }

    pub fn with_style(mut self, style: impl Into<String>) -> Self {
        self.style_name = Some(style.into());
        self
    }

    pub fn with_dynasty(mut self, dynasty: impl Into<String>) -> Self {
        self.dynasty = Some(dynasty.into());
        self
    }

    pub fn with_native_place(mut self, place: impl Into<String>) -> Self {
        self.native_place = Some(place.into());
        self
    }
}

/// Per-character usage counts behind the group-4 probabilities.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CharCount {
    pub total: u64,
    pub person: u64,
    pub location: u64,
}

impl CharCount {
    pub fn person_prob(&self) -> Option<f64> {
        (self.total > 0).then(|| self.person as f64 / self.total as f64)
    }

    pub fn location_prob(&self) -> Option<f64> {
        (self.total > 0).then(|| self.location as f64 / self.total as f64)
    }
}

pub type CharStats = BTreeMap<char, CharCount>;

#[derive(Debug, Clone, Default)]
struct TrieNode {
    children: BTreeMap<char, usize>,
    entry: Option<usize>,
}

/// Forward prefix index over entry surfaces of one label type.
#[derive(Debug, Clone)]
struct Trie {
    nodes: Vec<TrieNode>,
}

impl Default for Trie {
    fn default() -> Self {
        Trie {
            nodes: vec![TrieNode::default()],
        }
    }
}

impl Trie {
    fn insert(&mut self, surface: &str, entry: usize) {
        let mut node = 0;
        for c in surface.chars() {
            node = match self.nodes[node].children.get(&c) {
                Some(&next) => next,
                None => {
                    self.nodes.push(TrieNode::default());
                    let next = self.nodes.len() - 1;
                    self.nodes[node].children.insert(c, next);
                    next
                }
            };
        }
        self.nodes[node].entry = Some(entry);
    }

    /// Entries whose surface starts at `pos`, shortest first, as
    /// `(entry index, end offset)`.
    fn walk(&self, chars: &[char], pos: usize) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        let mut node = 0;
        for (i, &c) in chars.iter().enumerate().skip(pos) {
            if is_blocking(c) {
                break;
            }
            match self.nodes[node].children.get(&c) {
                Some(&next) => node = next,
                None => break,
            }
            if let Some(e) = self.nodes[node].entry {
                out.push((e, i + 1));
            }
        }
        out
    }
}

/// One lexicon hit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LexiconMatch<'a> {
    pub entry: &'a KbEntry,
    pub start: usize,
    pub end: usize,
}

#[derive(Debug, Clone, Default)]
pub struct KnowledgeBase {
    entries: Vec<KbEntry>,
    index: HashMap<(String, LabelType), usize>,
    tries: HashMap<LabelType, Trie>,
    persons: BTreeSet<PersonRecord>,
    char_stats: CharStats,
}

impl PartialEq for KnowledgeBase {
    fn eq(&self, other: &Self) -> bool {
        self.entry_set() == other.entry_set() && self.persons == other.persons && self.char_stats == other.char_stats
    }
}

impl KnowledgeBase {
    pub fn new() -> Self {
        Self::default()
    }

    /// The bundled surname and time-marker lists.
    pub fn default_resources() -> Self {
        let mut kb = KnowledgeBase::new();
        kb.extend_entries(parse_entries(SURNAMES_TSV, "surnames.tsv").expect("bundled surnames"));
        kb.extend_entries(parse_entries(TIME_TSV, "time.tsv").expect("bundled time markers"));
        kb
    }

    /// Adds an entry, unioning dynasty sets with an existing
    /// `(surface, type)` entry. Surfaces containing markers or spaces are
    /// rejected.
    pub fn add_entry(&mut self, mut entry: KbEntry) -> Result<()> {
        if entry.surface.is_empty() || entry.surface.chars().any(is_blocking) {
            return Err(Error::Invalid(format!("invalid lexicon surface `{}`", entry.surface)));
        }
        if entry.label == LabelType::Address {
            entry.dynasties.clear();
        }
        let key = (entry.surface.clone(), entry.label);
        match self.index.get(&key) {
            Some(&i) => self.entries[i].dynasties.extend(entry.dynasties),
            None => {
                let i = self.entries.len();
                self.tries.entry(entry.label).or_default().insert(&entry.surface, i);
                self.index.insert(key, i);
                self.entries.push(entry);
            }
        }
        Ok(())
    }

    pub fn extend_entries(&mut self, entries: impl IntoIterator<Item = KbEntry>) {
        for e in entries {
            // Parsed entries are already validated.
            let _ = self.add_entry(e);
        }
    }

    pub fn add_person(&mut self, person: PersonRecord) -> Result<()> {
        if person.official_name.is_empty() {
            return Err(Error::Invalid("person record without official name".into()));
        }
        self.persons.insert(person);
        Ok(())
    }

    pub fn entries(&self) -> &[KbEntry] {
        &self.entries
    }

    pub fn entries_of(&self, label: LabelType) -> impl Iterator<Item = &KbEntry> {
        self.entries.iter().filter(move |e| e.label == label)
    }

    pub fn entry(&self, surface: &str, label: LabelType) -> Option<&KbEntry> {
        self.index.get(&(surface.to_string(), label)).map(|&i| &self.entries[i])
    }

    pub fn persons(&self) -> impl Iterator<Item = &PersonRecord> {
        self.persons.iter()
    }

    pub fn person_count(&self) -> usize {
        self.persons.len()
    }

    pub fn char_stats(&self) -> &CharStats {
        &self.char_stats
    }

    pub fn char_count(&self, c: char) -> CharCount {
        self.char_stats.get(&c).copied().unwrap_or_default()
    }

    /// Every surface character of every entry.
    pub fn surface_chars(&self) -> BTreeSet<char> {
        self.entries.iter().flat_map(|e| e.surface.chars()).collect()
    }

    fn entry_set(&self) -> BTreeSet<(String, LabelType, Vec<String>)> {
        self.entries
            .iter()
            .map(|e| (e.surface.clone(), e.label, e.dynasties.iter().cloned().collect()))
            .collect()
    }

    /// All entries of `label` starting at `pos`, shortest first.
    pub fn prefix_matches(&self, chars: &[char], pos: usize, label: LabelType) -> Vec<LexiconMatch<'_>> {
        match self.tries.get(&label) {
            Some(trie) => trie
                .walk(chars, pos)
                .into_iter()
                .map(|(i, end)| LexiconMatch {
                    entry: &self.entries[i],
                    start: pos,
                    end,
                })
                .collect(),
            None => Vec::new(),
        }
    }

    /// Longest entry of `label` whose surface starts at `pos`.
    pub fn lookup_longest(&self, doc: &Document, pos: usize, label: LabelType) -> Result<Option<(&KbEntry, usize)>> {
        if pos >= doc.len() {
            return Err(Error::IndexOutOfRange {
                index: pos,
                len: doc.len(),
            });
        }
        Ok(self
            .prefix_matches(doc.chars(), pos, label)
            .pop()
            .map(|m| (m.entry, m.end)))
    }

    /// Longest match per start position over a whole document, for the
    /// given label types.
    pub fn longest_matches(&self, doc: &Document, labels: &[LabelType]) -> Vec<LexiconMatch<'_>> {
        let mut out = Vec::new();
        for pos in 0..doc.len() {
            for &label in labels {
                if let Some(m) = self.prefix_matches(doc.chars(), pos, label).pop() {
                    out.push(m);
                }
            }
        }
        out
    }

    /// Recomputes character usage counts from gold-annotated training data.
    pub fn compute_char_stats(&self, corpus: &Corpus, gold: &GoldAnnotations) -> Result<KnowledgeBase> {
        let mut stats = CharStats::new();
        for doc in corpus.documents() {
            for &c in doc.chars() {
                stats.entry(c).or_default().total += 1;
            }
        }
        for gdoc in gold.docs() {
            let doc = corpus
                .get(&gdoc.doc_id)
                .ok_or_else(|| Error::UnknownDocument(gdoc.doc_id.clone()))?;
            for ent in &gdoc.entities {
                if ent.start >= ent.end || ent.end > doc.len() {
                    return Err(Error::SpanOutOfBounds {
                        doc_id: gdoc.doc_id.clone(),
                        start: ent.start,
                        end: ent.end,
                        len: doc.len(),
                    });
                }
                for &c in &doc.chars()[ent.start..ent.end] {
                    let count = stats.entry(c).or_default();
                    match ent.kind {
                        EntityKind::Person => count.person += 1,
                        EntityKind::Location => count.location += 1,
                    }
                }
            }
        }
        let mut kb = self.clone();
        kb.char_stats = stats;
        Ok(kb)
    }

    /// Folds approved records into the lexicon and person list.
    pub fn merge_records(&self, approved: &[CandidateRecord]) -> KnowledgeBase {
        let mut kb = self.clone();
        for rec in approved {
            if rec.official_name.is_empty() {
                continue;
            }
            let dynasties: Vec<String> = rec.dynasty.iter().cloned().collect();
            let _ = kb.add_entry(KbEntry::new(
                rec.official_name.clone(),
                LabelType::Name,
                dynasties.clone(),
            ));
            if let Some(style) = &rec.style_name {
                let _ = kb.add_entry(KbEntry::new(style.clone(), LabelType::Style, dynasties));
            }
            let mut person = PersonRecord::new(rec.official_name.clone());
            person.style_name = rec.style_name.clone();
            person.dynasty = rec.dynasty.clone();
            let _ = kb.add_person(person);
        }
        kb
    }

    pub fn with_char_stats(mut self, stats: CharStats) -> KnowledgeBase {
        self.char_stats = stats;
        self
    }

    pub fn has_person_named(&self, name: &str) -> bool {
        self.persons.iter().any(|p| p.official_name == name)
    }

    pub fn entries_tsv(&self) -> String {
        let mut out = String::new();
        for e in &self.entries {
            out.push_str(&entry_row(e));
        }
        out
    }

    pub fn persons_tsv(&self) -> String {
        persons_tsv(self.persons.iter())
    }
}

pub fn entry_row(e: &KbEntry) -> String {
    let dyn_list: Vec<&str> = e.dynasties.iter().map(String::as_str).collect();
    format!("{}\t{}\t{}\n", e.surface, e.label, dyn_list.join(","))
}

pub fn persons_tsv<'a>(persons: impl IntoIterator<Item = &'a PersonRecord>) -> String {
    let mut out = String::new();
    for p in persons {
        out.push_str(&format!(
            "{}\t{}\t{}\t{}\n",
            p.official_name,
            p.style_name.as_deref().unwrap_or(""),
            p.dynasty.as_deref().unwrap_or(""),
            p.native_place.as_deref().unwrap_or("")
        ));
    }
    out
}

/// `char <TAB> total <TAB> person <TAB> location`, one row per character.
pub fn char_stats_tsv(stats: &CharStats) -> String {
    stats
        .iter()
        .map(|(c, n)| format!("{c}\t{}\t{}\t{}\n", n.total, n.person, n.location))
        .collect()
}

pub fn parse_char_stats(text: &str, file: &str) -> Result<CharStats> {
    let mut out = CharStats::new();
    for (line_no, line) in text.lines().enumerate().map(|(i, l)| (i + 1, l.trim_end_matches('\r'))) {
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        let mut chars = cols[0].chars();
        let (Some(c), None, 4) = (chars.next(), chars.next(), cols.len()) else {
            return Err(Error::parse(
                file,
                line_no,
                "expected `char<TAB>total<TAB>person<TAB>location`",
            ));
        };
        let num = |s: &str| {
            s.trim()
                .parse::<u64>()
                .map_err(|_| Error::parse(file, line_no, format!("bad count `{s}`")))
        };
        let count = CharCount {
            total: num(cols[1])?,
            person: num(cols[2])?,
            location: num(cols[3])?,
        };
        if count.person + count.location > count.total {
            return Err(Error::parse(
                file,
                line_no,
                format!("entity counts exceed total for `{c}`"),
            ));
        }
        out.insert(c, count);
    }
    Ok(out)
}

fn data_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim_end_matches('\r')))
        .filter(|(_, l)| !l.trim().is_empty() && !l.starts_with('#'))
}

fn non_empty(s: &str) -> Option<String> {
    let s = s.trim();
    (!s.is_empty()).then(|| s.to_string())
}

/// Parses an entry TSV: `surface <TAB> TYPE <TAB> dynasty,dynasty`.
pub fn parse_entries(text: &str, file: &str) -> Result<Vec<KbEntry>> {
    let mut out = Vec::new();
    for (line_no, line) in data_lines(text) {
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() < 2 || cols.len() > 3 {
            return Err(Error::parse(
                file,
                line_no,
                format!("expected 2 or 3 columns, found {}", cols.len()),
            ));
        }
        let surface = cols[0].trim();
        if surface.is_empty() || surface.chars().any(is_blocking) {
            return Err(Error::parse(file, line_no, format!("invalid surface `{surface}`")));
        }
        let label: LabelType = cols[1]
            .parse()
            .map_err(|_| Error::parse(file, line_no, format!("unknown label type `{}`", cols[1])))?;
        let dynasties = cols
            .get(2)
            .map(|d| d.split(',').filter_map(non_empty).collect::<Vec<_>>())
            .unwrap_or_default();
        out.push(KbEntry::new(surface, label, dynasties));
    }
    Ok(out)
}

/// Parses a person TSV: `official_name, style_name, dynasty, native_place`.
pub fn parse_persons(text: &str, file: &str) -> Result<Vec<PersonRecord>> {
    let mut out = Vec::new();
    for (line_no, line) in data_lines(text) {
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.is_empty() || cols.len() > 4 {
            return Err(Error::parse(
                file,
                line_no,
                format!("expected up to 4 columns, found {}", cols.len()),
            ));
        }
        let name = cols[0].trim();
        if name.is_empty() {
            return Err(Error::parse(file, line_no, "empty official name"));
        }
        let col = |i: usize| cols.get(i).and_then(|s| non_empty(s));
        out.push(PersonRecord {
            official_name: name.to_string(),
            style_name: col(1),
            dynasty: col(2),
            native_place: col(3),
        });
    }
    Ok(out)
}

pub fn load_kb<P: AsRef<Path>, Q: AsRef<Path>>(entry_files: &[P], person_files: &[Q]) -> Result<KnowledgeBase> {
    let mut kb = KnowledgeBase::new();
    for path in entry_files {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        kb.extend_entries(parse_entries(&text, &path.display().to_string())?);
    }
    for path in person_files {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        for p in parse_persons(&text, &path.display().to_string())? {
            kb.add_person(p)?;
        }
    }
    Ok(kb)
}
