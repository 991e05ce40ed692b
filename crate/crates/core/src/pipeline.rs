//! Corpus-level drivers that chain the per-document steps.

use rayon::prelude::*;

use crate::annotator::{annotate_with, enforce_consistency, ConsistentSequence, LabelSpan};
use crate::corpus::{Corpus, Document};
use crate::crf::{build_features, extract_entities, gold_to_tags, CrfModel, Example, FeatureConfig, Tag, TaggedEntity};
use crate::error::{Error, Result};
use crate::gold::GoldAnnotations;
use crate::knowledge_base::{KnowledgeBase, LabelType};
use crate::pattern_miner::{
    extract_circle_pairs, extract_style_records, match_filter_patterns, CandidateRecord, Excerpt, FilterPattern,
};

/// Mining-type spans and their consistent sequences for every document.
pub fn annotate_corpus(
    corpus: &Corpus,
    kb: &KnowledgeBase,
    window: usize,
) -> Result<(Vec<LabelSpan>, Vec<ConsistentSequence>)> {
    let per_doc: Vec<(Vec<LabelSpan>, Vec<ConsistentSequence>)> = corpus
        .documents()
        .par_iter()
        .map(|doc| {
            let spans = annotate_with(doc, kb, &LabelType::MINING);
            let seqs = enforce_consistency(&spans, window)?;
            Ok((spans, seqs))
        })
        .collect::<Result<_>>()?;
    let mut spans = Vec::new();
    let mut seqs = Vec::new();
    for (s, q) in per_doc {
        spans.extend(s);
        seqs.extend(q);
    }
    Ok((spans, seqs))
}

/// Style-name records from approved patterns, plus circle-marker records
/// when `circles` is set.
pub fn extract_records(
    corpus: &Corpus,
    sequences: &[ConsistentSequence],
    patterns: &[FilterPattern],
    circles: bool,
) -> (Vec<Excerpt>, Vec<CandidateRecord>) {
    let excerpts = match_filter_patterns(sequences, patterns, corpus);
    let mut records = extract_style_records(&excerpts);
    if circles {
        for doc in corpus.documents() {
            records.extend(extract_circle_pairs(doc));
        }
    }
    (excerpts, records)
}

/// Feature and tag sequences for the gold-annotated documents of `corpus`.
pub fn training_examples(
    corpus: &Corpus,
    gold: &GoldAnnotations,
    kb: &KnowledgeBase,
    cfg: &FeatureConfig,
) -> Result<Vec<Example>> {
    let docs: Vec<&Document> = corpus
        .documents()
        .iter()
        .filter(|d| gold.get(d.id()).is_some())
        .collect();
    if docs.is_empty() {
        return Err(Error::NoExamples);
    }
    docs.par_iter()
        .map(|doc| {
            let g = gold.get(doc.id()).expect("filtered above");
            let tags = gold_to_tags(doc.len(), &g.entities)?;
            Ok((build_features(doc, kb, cfg)?, tags))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct TaggedDoc {
    pub doc_id: String,
    pub tags: Vec<Tag>,
    pub entities: Vec<TaggedEntity>,
}

/// Decodes every document with `model` and extracts entities.
pub fn tag_corpus(model: &CrfModel, corpus: &Corpus, kb: &KnowledgeBase) -> Result<Vec<TaggedDoc>> {
    corpus
        .documents()
        .par_iter()
        .map(|doc| {
            let feats = build_features(doc, kb, model.config())?;
            let seq = model.compile(&feats);
            let (tags, _) = model.decode_compiled(&seq);
            let marg = model.marginals_compiled(&seq);
            let entities = extract_entities(&tags, &marg, doc)?;
            Ok(TaggedDoc {
                doc_id: doc.id().to_string(),
                tags,
                entities,
            })
        })
        .collect()
}

/// Splits document ids into a leading training share and the rest, in
/// corpus order.
pub fn split_ids(corpus: &Corpus, train_fraction: f64) -> (Vec<String>, Vec<String>) {
    let n = corpus.len();
    let cut = ((n as f64) * train_fraction.clamp(0.0, 1.0)).round() as usize;
    let ids: Vec<String> = corpus.documents().iter().map(|d| d.id().to_string()).collect();
    let (a, b) = ids.split_at(cut.min(n));
    (a.to_vec(), b.to_vec())
}

pub fn subcorpus(corpus: &Corpus, ids: &[String]) -> Result<Corpus> {
    Corpus::from_documents(
        ids.iter()
            .map(|id| {
                corpus
                    .get(id)
                    .cloned()
                    .ok_or_else(|| Error::UnknownDocument(id.clone()))
            })
            .collect::<Result<Vec<_>>>()?,
    )
}

/// Sets each record's score to the confidence of a tagged person entity
/// starting at the record's name, when there is one.
pub fn score_records(records: &mut [CandidateRecord], tagged: &[TaggedDoc]) {
    for r in records.iter_mut() {
        r.score = tagged
            .iter()
            .filter(|t| t.doc_id == r.doc_id)
            .flat_map(|t| &t.entities)
            .find(|e| e.start == r.name_start && e.surface == r.official_name)
            .map(|e| e.confidence);
    }
}
