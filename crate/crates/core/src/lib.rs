//! Mining person, style and place names from unpunctuated literary Chinese.
//!
//! The pipeline has two independent routes to names:
//!
//! * a lexicon route: [`annotator`] labels text with knowledge-base entries,
//!   filters the labels by dynasty consistency, and [`pattern_miner`] turns
//!   frequent label-type patterns into candidate (dynasty, name, style)
//!   records;
//! * a statistical route: [`crf`] tags characters with a linear-chain CRF
//!   over the NB/NI/NE/AB/AI/AE/O tagset.
//!
//! [`segmenter`] uses detected names to cut the character stream into
//! paragraphs, and [`eval`] holds the measurement code plus a synthetic
//! corpus generator.

pub mod annotator;
pub mod corpus;
pub mod crf;
pub mod error;
pub mod eval;
pub mod gold;
pub mod knowledge_base;
pub mod pattern_miner;
pub mod pipeline;
pub mod segmenter;

pub use error::{Error, Result};
