//! Person–place pairing and knowledge-base classification.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::corpus::Corpus;
use crate::crf::TaggedEntity;
use crate::error::{Error, Result};
use crate::gold::EntityKind;
use crate::knowledge_base::KnowledgeBase;

pub const DEFAULT_MAX_GAP: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum KbClass {
    /// Some known person has this name and this native place.
    BirthplaceMatch,
    /// The name is known, the place is not recorded for it.
    PersonKnown,
    New,
}

impl KbClass {
    pub fn as_str(self) -> &'static str {
        match self {
            KbClass::BirthplaceMatch => "BIRTHPLACE_MATCH",
            KbClass::PersonKnown => "PERSON_KNOWN",
            KbClass::New => "NEW",
        }
    }
}

impl fmt::Display for KbClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamePair {
    pub person: TaggedEntity,
    pub location: TaggedEntity,
    /// Characters strictly between the spans, circle markers excluded.
    pub gap: usize,
    pub kb_class: KbClass,
}

impl NamePair {
    pub fn tsv_row(&self) -> String {
        format!(
            "{}\t{}\t{}\t{}\t{}\t{}\t{}\n",
            self.person.doc_id,
            self.person.start,
            self.person.surface,
            self.location.start,
            self.location.surface,
            self.gap,
            self.kb_class
        )
    }
}

pub fn classify_pair(kb: &KnowledgeBase, person: &str, place: &str) -> KbClass {
    if kb
        .persons()
        .any(|p| p.official_name == person && p.native_place.as_deref() == Some(place))
    {
        KbClass::BirthplaceMatch
    } else if kb.has_person_named(person) {
        KbClass::PersonKnown
    } else {
        KbClass::New
    }
}

/// Pairs every person with every location that starts at or after the
/// person's end, within `max_gap` non-marker characters. A person may
/// appear in several pairs.
pub fn pair_names_addresses(
    entities: &[TaggedEntity],
    corpus: &Corpus,
    kb: &KnowledgeBase,
    max_gap: usize,
) -> Result<Vec<NamePair>> {
    let mut by_doc: BTreeMap<&str, Vec<&TaggedEntity>> = BTreeMap::new();
    for e in entities {
        by_doc.entry(&e.doc_id).or_default().push(e);
    }
    let mut out = Vec::new();
    for (doc_id, mut ents) in by_doc {
        let doc = corpus
            .get(doc_id)
            .ok_or_else(|| Error::UnknownDocument(doc_id.to_string()))?;
        ents.sort_by_key(|e| (e.start, e.end));
        for (i, person) in ents.iter().enumerate().filter(|(_, e)| e.kind == EntityKind::Person) {
            for loc in ents[i + 1..].iter().filter(|e| e.kind == EntityKind::Location) {
                if loc.start < person.end {
                    continue;
                }
                let gap = doc.count_non_markers(person.end, loc.start);
                if gap > max_gap {
                    // Later locations are further away still.
                    break;
                }
                out.push(NamePair {
                    person: (*person).clone(),
                    location: (*loc).clone(),
                    gap,
                    kb_class: classify_pair(kb, &person.surface, &loc.surface),
                });
            }
        }
    }
    Ok(out)
}

pub fn pairs_tsv(pairs: &[NamePair]) -> String {
    let mut out = String::from("doc_id\tperson_start\tperson\tlocation_start\tlocation\tgap\tclass\n");
    for p in pairs {
        out.push_str(&p.tsv_row());
    }
    out
}

/// Number of pairs per class.
pub fn class_counts(pairs: &[NamePair]) -> BTreeMap<KbClass, usize> {
    let mut out = BTreeMap::new();
    for p in pairs {
        *out.entry(p.kb_class).or_insert(0) += 1;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Document;
    use crate::knowledge_base::PersonRecord;

    const T1: &str = "陳瑜字仲庸雷州人廣西中書省都事";

    fn ent(doc: &Document, start: usize, end: usize, kind: EntityKind) -> TaggedEntity {
        TaggedEntity {
            doc_id: doc.id().to_string(),
            start,
            end,
            kind,
            surface: doc.slice(start, end),
            confidence: 1.0,
        }
    }

    #[test]
    fn t1_pairs_at_gap_three() {
        let doc = Document::new("t1", T1);
        let corpus = Corpus::from_documents(vec![doc.clone()]).unwrap();
        let ents = vec![
            ent(&doc, 0, 2, EntityKind::Person),
            ent(&doc, 5, 7, EntityKind::Location),
        ];
        let mut kb = KnowledgeBase::new();
        let pairs = pair_names_addresses(&ents, &corpus, &kb, DEFAULT_MAX_GAP).unwrap();
        assert_eq!(pairs.len(), 1);
        assert_eq!(pairs[0].gap, 3);
        assert_eq!(pairs[0].kb_class, KbClass::New);

        kb.add_person(PersonRecord::new("陳瑜")).unwrap();
        assert_eq!(
            pair_names_addresses(&ents, &corpus, &kb, 10).unwrap()[0].kb_class,
            KbClass::PersonKnown
        );
        kb.add_person(PersonRecord::new("陳瑜").with_native_place("雷州"))
            .unwrap();
        assert_eq!(
            pair_names_addresses(&ents, &corpus, &kb, 10).unwrap()[0].kb_class,
            KbClass::BirthplaceMatch
        );
    }

    #[test]
    fn gap_threshold_and_markers() {
        let doc = Document::new("d", "陳瑜之之之之之之之之之之雷州");
        let corpus = Corpus::from_documents(vec![doc.clone()]).unwrap();
        let ents = vec![
            ent(&doc, 0, 2, EntityKind::Person),
            ent(&doc, 13, 15, EntityKind::Location),
        ];
        assert_eq!(doc.count_non_markers(2, 13), 11);
        assert!(pair_names_addresses(&ents, &corpus, &KnowledgeBase::new(), 10)
            .unwrap()
            .is_empty());

        let doc = Document::new("d", "陳瑜之之之之之之之之之○雷州");
        let corpus = Corpus::from_documents(vec![doc.clone()]).unwrap();
        let ents = vec![
            ent(&doc, 0, 2, EntityKind::Person),
            ent(&doc, 12, 14, EntityKind::Location),
        ];
        let pairs = pair_names_addresses(&ents, &corpus, &KnowledgeBase::new(), 10).unwrap();
        assert_eq!(pairs[0].gap, 9);
    }

    #[test]
    fn earlier_locations_are_ignored() {
        let doc = Document::new("d", "雷州陳瑜之廣西");
        let corpus = Corpus::from_documents(vec![doc.clone()]).unwrap();
        let ents = vec![
            ent(&doc, 0, 2, EntityKind::Location),
            ent(&doc, 2, 4, EntityKind::Person),
            ent(&doc, 5, 7, EntityKind::Location),
        ];
        let pairs = pair_names_addresses(&ents, &corpus, &KnowledgeBase::new(), 10).unwrap();
        assert_eq!(pairs.len(), 1);
        assert_eq!(pairs[0].location.surface, "廣西");
    }
}
