//! Standoff gold annotations.
//!
//! File format, one block per document, fields separated by tabs:
//!
//! ```text
//! doc <doc_id>
//! ent <start> <end> PERSON|LOCATION
//! ne <start> <end> OFFICE|ENTRY|NIANHAO|TIME
//! bnd <position>
//! ```
//!
//! Offsets are codepoint indices, ends exclusive. `#` starts a comment line.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::Corpus;
use crate::error::{Error, Result};
use crate::knowledge_base::LabelType;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum EntityKind {
    Person,
    Location,
}

impl EntityKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EntityKind::Person => "PERSON",
            EntityKind::Location => "LOCATION",
        }
    }
}

impl fmt::Display for EntityKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EntityKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "PERSON" => Ok(EntityKind::Person),
            "LOCATION" => Ok(EntityKind::Location),
            other => Err(Error::Invalid(format!("unknown entity kind `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct GoldEntity {
    pub start: usize,
    pub end: usize,
    pub kind: EntityKind,
}

impl GoldEntity {
    pub fn new(start: usize, end: usize, kind: EntityKind) -> Self {
        GoldEntity { start, end, kind }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct GoldNe {
    pub start: usize,
    pub end: usize,
    pub label: LabelType,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GoldDoc {
    pub doc_id: String,
    pub entities: Vec<GoldEntity>,
    pub nes: Vec<GoldNe>,
    pub boundaries: Vec<usize>,
}

impl GoldDoc {
    pub fn new(doc_id: impl Into<String>) -> Self {
        GoldDoc {
            doc_id: doc_id.into(),
            ..Default::default()
        }
    }

    /// Gold paragraphs: consecutive boundaries, the last running to `len`.
    pub fn paragraphs(&self, len: usize) -> Vec<(usize, usize)> {
        let mut b = self.boundaries.clone();
        b.sort_unstable();
        b.dedup();
        b.iter()
            .enumerate()
            .map(|(i, &s)| (s, b.get(i + 1).copied().unwrap_or(len)))
            .collect()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GoldAnnotations {
    docs: BTreeMap<String, GoldDoc>,
}

impl GoldAnnotations {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, doc: GoldDoc) {
        self.docs.insert(doc.doc_id.clone(), doc);
    }

    pub fn get(&self, doc_id: &str) -> Option<&GoldDoc> {
        self.docs.get(doc_id)
    }

    pub fn docs(&self) -> impl Iterator<Item = &GoldDoc> {
        self.docs.values()
    }

    pub fn len(&self) -> usize {
        self.docs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.docs.is_empty()
    }

    pub fn entity_count(&self) -> usize {
        self.docs.values().map(|d| d.entities.len()).sum()
    }

    /// Restricts to the given document ids.
    pub fn subset<'a>(&self, ids: impl IntoIterator<Item = &'a str>) -> GoldAnnotations {
        let mut out = GoldAnnotations::new();
        for id in ids {
            if let Some(d) = self.docs.get(id) {
                out.insert(d.clone());
            }
        }
        out
    }

    /// Checks bounds, minimum entity length and per-kind non-overlap.
    pub fn validate(&self, corpus: &Corpus) -> Result<()> {
        for gdoc in self.docs.values() {
            let doc = corpus
                .get(&gdoc.doc_id)
                .ok_or_else(|| Error::UnknownDocument(gdoc.doc_id.clone()))?;
            let oob = |start: usize, end: usize| Error::SpanOutOfBounds {
                doc_id: gdoc.doc_id.clone(),
                start,
                end,
                len: doc.len(),
            };
            for e in &gdoc.entities {
                if e.start >= e.end || e.end > doc.len() {
                    return Err(oob(e.start, e.end));
                }
                if e.end - e.start < 2 {
                    return Err(Error::Invalid(format!(
                        "{}: single-character {} entity at {} is not representable",
                        gdoc.doc_id, e.kind, e.start
                    )));
                }
            }
            for n in &gdoc.nes {
                if n.start >= n.end || n.end > doc.len() {
                    return Err(oob(n.start, n.end));
                }
            }
            for &b in &gdoc.boundaries {
                if b >= doc.len() {
                    return Err(oob(b, b + 1));
                }
            }
            for kind in [EntityKind::Person, EntityKind::Location] {
                let mut spans: Vec<_> = gdoc.entities.iter().filter(|e| e.kind == kind).collect();
                spans.sort();
                for w in spans.windows(2) {
                    if w[1].start < w[0].end {
                        return Err(Error::Invalid(format!(
                            "{}: overlapping {kind} spans at {} and {}",
                            gdoc.doc_id, w[0].start, w[1].start
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn parse(text: &str, file: &str) -> Result<GoldAnnotations> {
        let mut gold = GoldAnnotations::new();
        let mut current: Option<GoldDoc> = None;
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.trim_end_matches('\r');
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let cols: Vec<&str> = line.split('\t').collect();
            let num = |s: &str| {
                s.trim()
                    .parse::<usize>()
                    .map_err(|_| Error::parse(file, line_no, format!("bad offset `{s}`")))
            };
            let need = |n: usize| {
                if cols.len() != n {
                    Err(Error::parse(
                        file,
                        line_no,
                        format!("expected {n} columns, found {}", cols.len()),
                    ))
                } else {
                    Ok(())
                }
            };
            match cols[0] {
                "doc" => {
                    need(2)?;
                    if let Some(d) = current.take() {
                        gold.insert(d);
                    }
                    current = Some(GoldDoc::new(cols[1].trim()));
                }
                tag @ ("ent" | "ne" | "bnd") => {
                    let doc = current
                        .as_mut()
                        .ok_or_else(|| Error::parse(file, line_no, "annotation before any `doc` line"))?;
                    match tag {
                        "ent" => {
                            need(4)?;
                            let kind = cols[3]
                                .parse()
                                .map_err(|e: Error| Error::parse(file, line_no, e.to_string()))?;
                            doc.entities.push(GoldEntity::new(num(cols[1])?, num(cols[2])?, kind));
                        }
                        "ne" => {
                            need(4)?;
                            let label: LabelType = cols[3]
                                .parse()
                                .map_err(|e: Error| Error::parse(file, line_no, e.to_string()))?;
                            doc.nes.push(GoldNe {
                                start: num(cols[1])?,
                                end: num(cols[2])?,
                                label,
                            });
                        }
                        _ => {
                            need(2)?;
                            doc.boundaries.push(num(cols[1])?);
                        }
                    }
                }
                other => return Err(Error::parse(file, line_no, format!("unknown record `{other}`"))),
            }
        }
        if let Some(d) = current.take() {
            gold.insert(d);
        }
        Ok(gold)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<GoldAnnotations> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, &path.display().to_string())
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for d in self.docs.values() {
            out.push_str(&format!("doc\t{}\n", d.doc_id));
            for e in &d.entities {
                out.push_str(&format!("ent\t{}\t{}\t{}\n", e.start, e.end, e.kind));
            }
            for n in &d.nes {
                out.push_str(&format!("ne\t{}\t{}\t{}\n", n.start, n.end, n.label));
            }
            for b in &d.boundaries {
                out.push_str(&format!("bnd\t{b}\n"));
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Document;

    #[test]
    fn parse_and_serialize() {
        let text = "doc\tt1\nent\t0\t2\tPERSON\nent\t5\t7\tLOCATION\nne\t10\t15\tOFFICE\nbnd\t0\n";
        let gold = GoldAnnotations::parse(text, "gold").unwrap();
        let d = gold.get("t1").unwrap();
        assert_eq!(d.entities.len(), 2);
        assert_eq!(d.nes[0].label, LabelType::Office);
        assert_eq!(gold.to_text(), text);
    }

    #[test]
    fn rejects_single_char_and_overlap() {
        let corpus = Corpus::from_documents(vec![Document::new("t1", "陳瑜字仲庸雷州人")]).unwrap();
        let gold = GoldAnnotations::parse("doc\tt1\nent\t0\t1\tPERSON\n", "g").unwrap();
        assert!(gold.validate(&corpus).is_err());
        let gold = GoldAnnotations::parse("doc\tt1\nent\t0\t3\tPERSON\nent\t2\t4\tPERSON\n", "g").unwrap();
        assert!(gold.validate(&corpus).is_err());
        let gold = GoldAnnotations::parse("doc\tt1\nent\t6\t9\tLOCATION\n", "g").unwrap();
        assert!(matches!(gold.validate(&corpus), Err(Error::SpanOutOfBounds { .. })));
        let gold = GoldAnnotations::parse("doc\tt1\nent\t0\t2\tPERSON\nent\t5\t7\tLOCATION\n", "g").unwrap();
        gold.validate(&corpus).unwrap();
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let err = GoldAnnotations::parse("ent\t0\t2\tPERSON\n", "g.txt").unwrap_err();
        assert!(err.to_string().starts_with("g.txt:1:"));
        let err = GoldAnnotations::parse("doc\tx\nent\t0\tz\tPERSON\n", "g.txt").unwrap_err();
        assert!(err.to_string().starts_with("g.txt:2:"));
    }

    #[test]
    fn paragraphs_from_boundaries() {
        let mut d = GoldDoc::new("x");
        d.boundaries = vec![50, 10];
        assert_eq!(d.paragraphs(100), vec![(10, 50), (50, 100)]);
    }
}
