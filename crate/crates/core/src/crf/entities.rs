//! Conversion between tag sequences and entity spans.

use serde::{Deserialize, Serialize};

use super::model::TagScores;
use super::tag::Tag;
use crate::corpus::Document;
use crate::error::{Error, Result};
use crate::gold::{EntityKind, GoldEntity};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaggedEntity {
    pub doc_id: String,
    pub start: usize,
    pub end: usize,
    pub kind: EntityKind,
    pub surface: String,
    /// Geometric mean of the per-position marginals of the assigned tags.
    pub confidence: f64,
}

impl TaggedEntity {
    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.start == self.end
    }

    pub fn tsv_row(&self) -> String {
        format!(
            "{}\t{}\t{}\t{}\t{}\t{:.6}",
            self.doc_id, self.start, self.end, self.kind, self.surface, self.confidence
        )
    }
}

fn tags_for(kind: EntityKind) -> (Tag, Tag, Tag) {
    match kind {
        EntityKind::Person => (Tag::NB, Tag::NI, Tag::NE),
        EntityKind::Location => (Tag::AB, Tag::AI, Tag::AE),
    }
}

/// Parses well-formed `B I* E` runs. Malformed runs are skipped.
pub fn entity_spans(tags: &[Tag]) -> Vec<(usize, usize, EntityKind)> {
    let mut out = Vec::new();
    let mut i = 0;
    while i < tags.len() {
        let kind = match tags[i] {
            Tag::NB => EntityKind::Person,
            Tag::AB => EntityKind::Location,
            _ => {
                i += 1;
                continue;
            }
        };
        let (_, inside, end) = tags_for(kind);
        let mut j = i + 1;
        while j < tags.len() && tags[j] == inside {
            j += 1;
        }
        if j < tags.len() && tags[j] == end {
            out.push((i, j + 1, kind));
            i = j + 1;
        } else {
            i = j;
        }
    }
    out
}

pub fn extract_entities(tags: &[Tag], marginals: &[TagScores], doc: &Document) -> Result<Vec<TaggedEntity>> {
    if tags.len() != doc.len() {
        return Err(Error::LengthMismatch(tags.len(), doc.len()));
    }
    if marginals.len() != tags.len() {
        return Err(Error::LengthMismatch(marginals.len(), tags.len()));
    }
    Ok(entity_spans(tags)
        .into_iter()
        .map(|(start, end, kind)| {
            let log_sum: f64 = (start..end)
                .map(|t| marginals[t][tags[t].index()].max(f64::MIN_POSITIVE).ln())
                .sum();
            let confidence = (log_sum / (end - start) as f64).exp().clamp(f64::MIN_POSITIVE, 1.0);
            TaggedEntity {
                doc_id: doc.id().to_string(),
                start,
                end,
                kind,
                surface: doc.slice(start, end),
                confidence,
            }
        })
        .collect())
}

/// Tags for a document of length `len` from gold spans. Spans must be in
/// bounds, at least two characters long and mutually disjoint.
pub fn gold_to_tags(len: usize, entities: &[GoldEntity]) -> Result<Vec<Tag>> {
    let mut tags = vec![Tag::O; len];
    let mut taken = vec![false; len];
    for e in entities {
        if e.end > len || e.start >= e.end {
            return Err(Error::IndexOutOfRange { index: e.end, len });
        }
        if e.end - e.start < 2 {
            return Err(Error::Invalid(format!(
                "single-character entity at {} cannot be tagged",
                e.start
            )));
        }
        if taken[e.start..e.end].iter().any(|&t| t) {
            return Err(Error::Invalid(format!(
                "overlapping entities at {}..{}",
                e.start, e.end
            )));
        }
        let (b, i, end) = tags_for(e.kind);
        tags[e.start] = b;
        for t in &mut tags[e.start + 1..e.end - 1] {
            *t = i;
        }
        tags[e.end - 1] = end;
        taken[e.start..e.end].iter_mut().for_each(|t| *t = true);
    }
    Ok(tags)
}

pub fn entities_tsv(entities: &[TaggedEntity]) -> String {
    entities.iter().map(|e| format!("{}\n", e.tsv_row())).collect()
}

/// Parses rows written by [`entities_tsv`].
pub fn parse_entities(text: &str, file: &str) -> Result<Vec<TaggedEntity>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let err = |m: String| Error::parse(file, i + 1, m);
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 6 {
            return Err(err(format!("expected 6 columns, found {}", cols.len())));
        }
        let offset = |s: &str| s.trim().parse::<usize>().map_err(|_| err(format!("bad offset `{s}`")));
        let (start, end) = (offset(cols[1])?, offset(cols[2])?);
        if end <= start {
            return Err(err(format!("empty span [{start}, {end})")));
        }
        let confidence: f64 = cols[5]
            .trim()
            .parse()
            .map_err(|_| err(format!("bad confidence `{}`", cols[5])))?;
        if !(0.0..=1.0).contains(&confidence) {
            return Err(err(format!("confidence {confidence} outside [0, 1]")));
        }
        out.push(TaggedEntity {
            doc_id: cols[0].to_string(),
            start,
            end,
            kind: cols[3].parse().map_err(|e: Error| err(e.to_string()))?,
            surface: cols[4].to_string(),
            confidence,
        });
    }
    Ok(out)
}

/// One line per document: the id, a tab, then space-separated tags.
pub fn tags_tsv<'a>(docs: impl IntoIterator<Item = (&'a str, &'a [Tag])>) -> String {
    docs.into_iter()
        .map(|(id, tags)| {
            let joined: Vec<&str> = tags.iter().map(|t| t.as_str()).collect();
            format!("{id}\t{}\n", joined.join(" "))
        })
        .collect()
}

pub fn parse_tags(text: &str, file: &str) -> Result<Vec<(String, Vec<Tag>)>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let (id, tags) = line
            .split_once('\t')
            .ok_or_else(|| Error::parse(file, i + 1, "expected `doc_id<TAB>tags`"))?;
        let tags = tags
            .split_whitespace()
            .map(|t| t.parse())
            .collect::<Result<Vec<Tag>>>()
            .map_err(|e| Error::parse(file, i + 1, e.to_string()))?;
        out.push((id.to_string(), tags));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use Tag::*;

    fn certain(tags: &[Tag]) -> Vec<TagScores> {
        tags.iter()
            .map(|t| {
                let mut m = [0.0; 7];
                m[t.index()] = 1.0;
                m
            })
            .collect()
    }

    #[test]
    fn person_and_location() {
        let doc = Document::new("d", "陳瑜字雷州人");
        let tags = [NB, NE, O, AB, AE, O];
        let ents = extract_entities(&tags, &certain(&tags), &doc).unwrap();
        assert_eq!(ents.len(), 2);
        assert_eq!((ents[0].start, ents[0].end, ents[0].kind), (0, 2, EntityKind::Person));
        assert_eq!(ents[0].surface, "陳瑜");
        assert_eq!(ents[1].surface, "雷州");
        assert_eq!(ents[1].kind, EntityKind::Location);
        assert_eq!(ents[1].confidence, 1.0);
    }

    #[test]
    fn malformed_runs_yield_nothing() {
        let doc = Document::new("d", "陳瑜字");
        for tags in [[O, O, O], [NB, NI, O], [NB, AE, O], [NI, NE, O]] {
            assert!(extract_entities(&tags, &certain(&tags), &doc).unwrap().is_empty());
        }
    }

    #[test]
    fn confidence_is_geometric_mean() {
        let doc = Document::new("d", "陳瑜");
        let tags = [NB, NE];
        let mut m = certain(&tags);
        m[0][0] = 0.5;
        m[1][2] = 0.8;
        let e = &extract_entities(&tags, &m, &doc).unwrap()[0];
        assert!((e.confidence - (0.4f64).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn gold_round_trip() {
        let gold = vec![
            GoldEntity::new(0, 2, EntityKind::Person),
            GoldEntity::new(2, 5, EntityKind::Location),
            GoldEntity::new(7, 11, EntityKind::Person),
        ];
        let tags = gold_to_tags(12, &gold).unwrap();
        assert_eq!(tags[..5], [NB, NE, AB, AI, AE]);
        let spans = entity_spans(&tags);
        let back: Vec<_> = gold.iter().map(|e| (e.start, e.end, e.kind)).collect();
        assert_eq!(spans, back);
    }

    #[test]
    fn gold_rejects_single_chars_and_overlaps() {
        assert!(gold_to_tags(5, &[GoldEntity::new(1, 2, EntityKind::Person)]).is_err());
        assert!(gold_to_tags(
            5,
            &[
                GoldEntity::new(0, 3, EntityKind::Person),
                GoldEntity::new(2, 4, EntityKind::Location)
            ]
        )
        .is_err());
        assert!(gold_to_tags(3, &[GoldEntity::new(1, 4, EntityKind::Person)]).is_err());
    }

    #[test]
    fn entity_and_tag_files_round_trip() {
        let doc = Document::new("d", "陳瑜字仲庸雷州人");
        let tags = vec![Tag::NB, Tag::NE, Tag::O, Tag::O, Tag::O, Tag::AB, Tag::AE, Tag::O];
        let marg: Vec<TagScores> = tags
            .iter()
            .map(|t| {
                let mut m = [0.0; 7];
                m[t.index()] = 1.0;
                m
            })
            .collect();
        let ents = extract_entities(&tags, &marg, &doc).unwrap();
        assert_eq!(parse_entities(&entities_tsv(&ents), "e").unwrap(), ents);
        let text = tags_tsv([("d", tags.as_slice())]);
        assert_eq!(parse_tags(&text, "t").unwrap(), vec![("d".to_string(), tags)]);
        assert!(parse_entities("d\t3\t3\tPERSON\tx\t0.5\n", "e").is_err());
        assert!(parse_tags("d\tNB XX\n", "t").is_err());
    }
}
