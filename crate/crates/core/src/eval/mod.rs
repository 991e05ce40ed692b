//! Measurement: tag and entity scores, zone analysis, person–place pairing,
//! and a synthetic corpus generator.

mod metrics;
mod pairing;
mod synthetic;
mod zones;

pub use metrics::{entity_prf, entity_report_tsv, label_prf, label_report_tsv, EntityScores, Prf};
pub use pairing::{class_counts, classify_pair, pair_names_addresses, pairs_tsv, KbClass, NamePair, DEFAULT_MAX_GAP};
pub use synthetic::{
    generate_synthetic, generate_synthetic_with, synthetic_kb, PlantedRecord, SynthOptions, SyntheticCorpus, Template,
};
pub use zones::{
    equal_zones, rank_by_score, table5_fixture, zone_analysis, zone_analysis_with_sizes, Zone, ZoneReport,
};
