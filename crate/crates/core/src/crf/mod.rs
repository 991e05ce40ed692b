//! Linear-chain CRF tagger over the seven-tag scheme.

mod entities;
mod features;
mod model;
mod tag;
mod train;

pub use entities::{
    entities_tsv, entity_spans, extract_entities, gold_to_tags, parse_entities, parse_tags, tags_tsv, TaggedEntity,
};
pub use features::{build_features, usage_bin, FeatureConfig, FeatureVector};
pub use model::{CompiledSeq, CrfModel, TagScores, MODEL_FORMAT_VERSION};
pub use tag::{Tag, NUM_TAGS};
pub use train::{train, train_with_report, Example, TrainOptions, TrainReport};

#[cfg(test)]
mod oracle_tests;
