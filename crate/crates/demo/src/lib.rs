//! WebAssembly bindings for the browser demo. Every operation takes the
//! pasted text plus lexicon and person tables and returns JSON.

use gzm_core::annotator::{annotate_with, enforce_consistency, ConsistentSequence, LabelSpan};
use gzm_core::corpus::{Corpus, Document};
use gzm_core::knowledge_base::{parse_entries, parse_persons, KnowledgeBase, LabelType};
use gzm_core::pattern_miner::{
    classify_record, default_scheme, extract_circle_pairs, extract_style_records, match_filter_patterns,
    reference_patterns, CandidateRecord, MatchType,
};
use gzm_core::segmenter::{find_beginnings, segment, Beginning, Paragraph};
use serde::Serialize;
use wasm_bindgen::prelude::*;

const DOC_ID: &str = "input";

#[derive(Debug, Serialize)]
pub struct Annotation {
    pub spans: Vec<LabelSpan>,
    pub sequences: Vec<ConsistentSequence>,
}

#[derive(Debug, Serialize)]
pub struct Extracted {
    pub record: CandidateRecord,
    pub match_type: MatchType,
}

#[derive(Debug, Serialize)]
pub struct Segmentation {
    pub beginnings: Vec<Beginning>,
    pub paragraphs: Vec<Paragraph>,
}

fn knowledge_base(lexicon: &str, persons: &str) -> Result<KnowledgeBase, String> {
    let mut kb = KnowledgeBase::default_resources();
    kb.extend_entries(parse_entries(lexicon, "lexicon").map_err(|e| e.to_string())?);
    for p in parse_persons(persons, "persons").map_err(|e| e.to_string())? {
        kb.add_person(p).map_err(|e| e.to_string())?;
    }
    Ok(kb)
}

fn annotated(
    text: &str,
    kb: &KnowledgeBase,
    labels: &[LabelType],
    window: usize,
) -> Result<(Document, Annotation), String> {
    let doc = Document::new(DOC_ID, text);
    let spans = annotate_with(&doc, kb, labels);
    let sequences = enforce_consistency(&spans, window).map_err(|e| e.to_string())?;
    Ok((doc, Annotation { spans, sequences }))
}

pub fn annotate_text(text: &str, lexicon: &str, window: usize) -> Result<Annotation, String> {
    let kb = knowledge_base(lexicon, "")?;
    annotated(text, &kb, &LabelType::ALL, window).map(|(_, a)| a)
}

/// Records from the four reference patterns and from circle markers, typed
/// against the person table.
pub fn extract_text(text: &str, lexicon: &str, persons: &str) -> Result<Vec<Extracted>, String> {
    let kb = knowledge_base(lexicon, persons)?;
    let (doc, ann) = annotated(text, &kb, &LabelType::MINING, 6)?;
    let patterns: Vec<_> = reference_patterns().into_iter().map(|p| p.approved()).collect();
    let corpus = Corpus::from_documents(vec![doc.clone()]).map_err(|e| e.to_string())?;
    let excerpts = match_filter_patterns(&ann.sequences, &patterns, &corpus);
    let mut records = extract_style_records(&excerpts);
    records.extend(extract_circle_pairs(&doc));
    records
        .into_iter()
        .map(|record| {
            let match_type = classify_record(&record, &kb, default_scheme(&record)).map_err(|e| e.to_string())?;
            Ok(Extracted { record, match_type })
        })
        .collect()
}

pub fn segment_text(text: &str, lexicon: &str) -> Result<Segmentation, String> {
    let kb = knowledge_base(lexicon, "")?;
    let (doc, ann) = annotated(text, &kb, &LabelType::MINING, 6)?;
    let beginnings = find_beginnings(&doc, &[], &ann.sequences);
    let paragraphs = segment(&doc, &beginnings);
    Ok(Segmentation { beginnings, paragraphs })
}

fn to_js<T: Serialize>(r: Result<T, String>) -> Result<String, JsError> {
    let value = r.map_err(|e| JsError::new(&e))?;
    serde_json::to_string(&value).map_err(|e| JsError::new(&e.to_string()))
}

#[wasm_bindgen]
pub fn annotate_json(text: &str, lexicon: &str, window: usize) -> Result<String, JsError> {
    to_js(annotate_text(text, lexicon, window))
}

#[wasm_bindgen]
pub fn extract_json(text: &str, lexicon: &str, persons: &str) -> Result<String, JsError> {
    to_js(extract_text(text, lexicon, persons))
}

#[wasm_bindgen]
pub fn segment_json(text: &str, lexicon: &str) -> Result<String, JsError> {
    to_js(segment_text(text, lexicon))
}
