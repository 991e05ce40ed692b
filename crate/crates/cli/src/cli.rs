//! Command-line surface.

use std::net::SocketAddr;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(
    name = "gzm",
    version,
    about = "Named-entity mining for unpunctuated literary Chinese"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Load a corpus and write it back normalized, one file per document.
    Ingest(IngestArgs),
    /// Label lexicon matches and build dynasty-consistent sequences.
    Annotate(AnnotateArgs),
    /// Count label-type n-grams over consistent sequences.
    Mine(MineArgs),
    /// Apply approved patterns and pull out style-name records.
    Extract(ExtractArgs),
    /// Train a CRF tagger on gold-annotated documents.
    Train(TrainArgs),
    /// Tag documents with a trained model.
    Tag(TagArgs),
    /// Detect paragraph beginnings and split documents.
    Segment(SegmentArgs),
    /// Per-tag precision, recall and F1.
    EvalLabels(EvalLabelsArgs),
    /// Exact-match entity precision, recall and F1.
    EvalEntities(EvalEntitiesArgs),
    /// Expected correct counts over confidence zones.
    EvalZones(EvalZonesArgs),
    /// Pair tagged person names with following locations.
    Pairs(PairsArgs),
    /// Generate a synthetic annotated corpus.
    Synth(SynthArgs),
    /// Run the review service.
    Serve(ServeArgs),
}

#[derive(Debug, Args)]
pub struct OutArgs {
    /// Directory that receives every output file.
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct KbArgs {
    /// Lexicon file(s): surface, TYPE, comma-separated dynasties.
    #[arg(long = "kb", required = true)]
    pub entries: Vec<PathBuf>,
    /// Person file(s): official name, style name, dynasty, native place.
    #[arg(long)]
    pub persons: Vec<PathBuf>,
    /// Do not add the bundled surname and time-marker lists.
    #[arg(long)]
    pub no_default_resources: bool,
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Args)]
pub struct AnnotateArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    #[command(flatten)]
    pub kb: KbArgs,
    /// Consistency window in dynasty-bearing labels.
    #[arg(long, default_value_t = 6)]
    pub window: usize,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Args)]
pub struct MineArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    #[command(flatten)]
    pub kb: KbArgs,
    #[arg(long, default_value_t = 6)]
    pub window: usize,
    #[arg(long, default_value_t = 2)]
    pub n_min: usize,
    #[arg(long, default_value_t = 4)]
    pub n_max: usize,
    #[arg(long, default_value_t = 2)]
    pub min_support: usize,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Args)]
pub struct ExtractArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    #[command(flatten)]
    pub kb: KbArgs,
    /// Pattern file; only approved patterns are applied.
    #[arg(long)]
    pub patterns: PathBuf,
    /// Review log whose pattern verdicts override the file statuses.
    #[arg(long)]
    pub decisions: Option<PathBuf>,
    /// Approve the N best-supported patterns nobody rejected.
    #[arg(long, value_name = "N")]
    pub auto_approve_top: Option<usize>,
    /// Also extract name/style pairs around circle markers.
    #[arg(long)]
    pub circles: bool,
    #[arg(long, default_value_t = 6)]
    pub window: usize,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long)]
    pub gold: PathBuf,
    #[command(flatten)]
    pub kb: KbArgs,
    /// Feature groups to enable.
    #[arg(long, value_delimiter = ',', default_values_t = [1u8, 2, 4, 5, 6])]
    pub groups: Vec<u8>,
    /// Character context radius.
    #[arg(long, default_value_t = 5)]
    pub k: usize,
    /// Search radius for nearby named entities.
    #[arg(long, default_value_t = 30)]
    pub ne_window: usize,
    /// Usage-probability bins.
    #[arg(long, default_value_t = 5)]
    pub bins: usize,
    /// L2 regularization strength.
    #[arg(long, default_value_t = 1.0)]
    pub lambda: f64,
    #[arg(long, default_value_t = 200)]
    pub max_iter: usize,
    #[arg(long, default_value_t = 1e-4)]
    pub tol: f64,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Args)]
pub struct TagArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long)]
    pub model: PathBuf,
    #[command(flatten)]
    pub kb: KbArgs,
    /// Character statistics written by `train`.
    #[arg(long)]
    pub char_stats: Option<PathBuf>,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Args)]
pub struct SegmentArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    #[command(flatten)]
    pub kb: KbArgs,
    /// Record file whose name offsets count as beginnings.
    #[arg(long)]
    pub records: Option<PathBuf>,
    /// Gold standoff file with boundary lines, for scoring.
    #[arg(long)]
    pub gold: Option<PathBuf>,
    #[arg(long, default_value_t = 6)]
    pub window: usize,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Args)]
pub struct EvalLabelsArgs {
    /// Tag file written by `tag`.
    #[arg(long)]
    pub pred: PathBuf,
    #[arg(long)]
    pub gold: PathBuf,
    #[arg(long)]
    pub corpus: PathBuf,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Args)]
pub struct EvalEntitiesArgs {
    /// Entity file written by `tag`.
    #[arg(long)]
    pub pred: PathBuf,
    #[arg(long)]
    pub gold: PathBuf,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Args)]
pub struct EvalZonesArgs {
    /// Report the published ten-zone example instead of scoring input.
    #[arg(long, conflicts_with_all = ["pred", "gold"])]
    pub table5_fixture: bool,
    /// Entity file written by `tag`, ranked by confidence.
    #[arg(long, required_unless_present = "table5_fixture")]
    pub pred: Option<PathBuf>,
    /// Gold standoff file acting as the correctness oracle.
    #[arg(long, required_unless_present = "table5_fixture")]
    pub gold: Option<PathBuf>,
    #[arg(long, default_value_t = 10)]
    pub zones: usize,
    #[arg(long, default_value_t = 100)]
    pub sample: usize,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Args)]
pub struct PairsArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    /// Entity file written by `tag`.
    #[arg(long)]
    pub entities: PathBuf,
    #[command(flatten)]
    pub kb: KbArgs,
    #[arg(long, default_value_t = 10)]
    pub max_gap: usize,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long, default_value_t = 250)]
    pub docs: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Seed of the generated knowledge base.
    #[arg(long, default_value_t = 1)]
    pub kb_seed: u64,
    #[arg(long, value_delimiter = ',', default_value = "P5,P8,P9,P10")]
    pub templates: Vec<String>,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    #[command(flatten)]
    pub kb: KbArgs,
    /// Pattern file written by `mine`.
    #[arg(long)]
    pub patterns: PathBuf,
    /// Record file written by `extract`.
    #[arg(long)]
    pub records: PathBuf,
    /// Holds the decision log and export files.
    #[arg(long, env = "GZM_STATE_DIR", default_value = "state")]
    pub state_dir: PathBuf,
    /// Static review UI bundle.
    #[arg(long)]
    pub ui: Option<PathBuf>,
    #[arg(long, default_value = "127.0.0.1:8080")]
    pub addr: SocketAddr,
    #[arg(long, default_value_t = 6)]
    pub window: usize,
}
