//! Append-only review decisions and the status map they resolve to.

use std::collections::BTreeMap;
use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use chrono::{DateTime, FixedOffset, SecondsFormat, Utc};
use gzm_core::pattern_miner::{CandidateRecord, FilterPattern, PatternStatus};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Debug, thiserror::Error)]
pub enum ReviewError {
    #[error("cannot access {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Log {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("timestamp `{0}` is not ISO-8601")]
    Timestamp(String),
    #[error("reviewer must not be empty")]
    EmptyReviewer,
}

pub type Result<T> = std::result::Result<T, ReviewError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum TargetKind {
    Pattern,
    Record,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Verdict {
    Approve,
    Reject,
}

impl Verdict {
    pub fn status(self) -> PatternStatus {
        match self {
            Verdict::Approve => PatternStatus::Approved,
            Verdict::Reject => PatternStatus::Rejected,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReviewDecision {
    pub target_kind: TargetKind,
    pub target_id: String,
    pub verdict: Verdict,
    pub reviewer: String,
    pub timestamp: String,
}

impl ReviewDecision {
    pub fn new(target_kind: TargetKind, target_id: &str, verdict: Verdict, reviewer: &str) -> Self {
        ReviewDecision {
            target_kind,
            target_id: target_id.to_string(),
            verdict,
            reviewer: reviewer.to_string(),
            timestamp: now(),
        }
    }

    pub fn instant(&self) -> Result<DateTime<FixedOffset>> {
        parse_timestamp(&self.timestamp)
    }
}

pub fn now() -> String {
    Utc::now().to_rfc3339_opts(SecondsFormat::Micros, true)
}

pub fn parse_timestamp(s: &str) -> Result<DateTime<FixedOffset>> {
    DateTime::parse_from_rfc3339(s).map_err(|_| ReviewError::Timestamp(s.to_string()))
}

/// Latest verdict per target. Equal timestamps resolve to the later log line.
pub fn resolve(decisions: &[ReviewDecision], kind: TargetKind) -> BTreeMap<String, Verdict> {
    let mut latest: BTreeMap<&str, (DateTime<FixedOffset>, Verdict)> = BTreeMap::new();
    for d in decisions.iter().filter(|d| d.target_kind == kind) {
        let Ok(at) = d.instant() else { continue };
        match latest.get(d.target_id.as_str()) {
            Some((prev, _)) if *prev > at => {}
            _ => {
                latest.insert(&d.target_id, (at, d.verdict));
            }
        }
    }
    latest.into_iter().map(|(id, (_, v))| (id.to_string(), v)).collect()
}

/// A line-delimited JSON log of decisions. Lines are only ever appended.
#[derive(Debug)]
pub struct DecisionLog {
    path: PathBuf,
    decisions: Vec<ReviewDecision>,
}

impl DecisionLog {
    /// Reads the log at `path`; a missing file is an empty log.
    pub fn open(path: impl Into<PathBuf>) -> Result<Self> {
        let path = path.into();
        let mut decisions = Vec::new();
        if path.exists() {
            let io = |source| ReviewError::Io {
                path: path.clone(),
                source,
            };
            let reader = BufReader::new(File::open(&path).map_err(io)?);
            for (i, line) in reader.lines().enumerate() {
                let line = line.map_err(io)?;
                if line.trim().is_empty() {
                    continue;
                }
                let d: ReviewDecision = serde_json::from_str(&line).map_err(|e| ReviewError::Log {
                    path: path.clone(),
                    line: i + 1,
                    message: e.to_string(),
                })?;
                d.instant().map_err(|e| ReviewError::Log {
                    path: path.clone(),
                    line: i + 1,
                    message: e.to_string(),
                })?;
                decisions.push(d);
            }
        }
        Ok(DecisionLog { path, decisions })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn decisions(&self) -> &[ReviewDecision] {
        &self.decisions
    }

    pub fn append(&mut self, decision: ReviewDecision) -> Result<()> {
        decision.instant()?;
        if decision.reviewer.trim().is_empty() {
            return Err(ReviewError::EmptyReviewer);
        }
        let io = |source| ReviewError::Io {
            path: self.path.clone(),
            source,
        };
        if let Some(dir) = self.path.parent().filter(|d| !d.as_os_str().is_empty()) {
            fs::create_dir_all(dir).map_err(io)?;
        }
        let mut file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(&self.path)
            .map_err(io)?;
        let mut line = serde_json::to_string(&decision).expect("decision serializes");
        line.push('\n');
        file.write_all(line.as_bytes()).map_err(io)?;
        file.sync_data().map_err(io)?;
        self.decisions.push(decision);
        Ok(())
    }

    pub fn status_map(&self, kind: TargetKind) -> BTreeMap<String, Verdict> {
        resolve(&self.decisions, kind)
    }
}

/// Overrides pattern statuses with logged verdicts.
pub fn apply_pattern_decisions(patterns: &mut [FilterPattern], verdicts: &BTreeMap<String, Verdict>) {
    for p in patterns {
        if let Some(v) = verdicts.get(&p.id) {
            p.status = v.status();
        }
    }
}

/// Approves the `n` highest-support patterns that nobody rejected.
pub fn auto_approve_top(patterns: &mut [FilterPattern], n: usize) {
    let mut order: Vec<usize> = (0..patterns.len())
        .filter(|&i| patterns[i].status != PatternStatus::Rejected)
        .collect();
    order.sort_by(|&a, &b| patterns[b].support.cmp(&patterns[a].support).then(a.cmp(&b)));
    for i in order.into_iter().take(n) {
        patterns[i].status = PatternStatus::Approved;
    }
}

/// Stable identifier of a candidate record, derived from its content.
pub fn record_id(r: &CandidateRecord) -> String {
    let key = format!(
        "{}\t{}\t{}\t{}\t{}\t{}",
        r.dynasty.as_deref().unwrap_or(""),
        r.official_name,
        r.style_name.as_deref().unwrap_or(""),
        r.doc_id,
        r.name_start,
        r.source.as_str()
    );
    let digest = Sha256::digest(key.as_bytes());
    let hex: String = digest[..8].iter().map(|b| format!("{b:02x}")).collect();
    format!("r{hex}")
}

#[cfg(test)]
mod tests {
    use super::*;
    use gzm_core::knowledge_base::LabelType;
    use gzm_core::pattern_miner::RecordSource;

    fn at(id: &str, verdict: Verdict, ts: &str) -> ReviewDecision {
        ReviewDecision {
            target_kind: TargetKind::Pattern,
            target_id: id.into(),
            verdict,
            reviewer: "a".into(),
            timestamp: ts.into(),
        }
    }

    #[test]
    fn latest_timestamp_wins_regardless_of_log_order() {
        let log = vec![
            at("p", Verdict::Reject, "2024-05-02T10:00:00Z"),
            at("p", Verdict::Approve, "2024-05-01T10:00:00Z"),
            at("q", Verdict::Approve, "2024-05-01T10:00:00+08:00"),
            at("q", Verdict::Reject, "2024-05-01T03:00:00Z"),
        ];
        let m = resolve(&log, TargetKind::Pattern);
        assert_eq!(m["p"], Verdict::Reject);
        assert_eq!(m["q"], Verdict::Reject);
        assert!(resolve(&log, TargetKind::Record).is_empty());
    }

    #[test]
    fn equal_timestamps_favour_the_later_line() {
        let log = vec![
            at("p", Verdict::Approve, "2024-05-01T10:00:00Z"),
            at("p", Verdict::Reject, "2024-05-01T10:00:00Z"),
        ];
        assert_eq!(resolve(&log, TargetKind::Pattern)["p"], Verdict::Reject);
    }

    #[test]
    fn replaying_the_file_reconstructs_the_status_map() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("state/decisions.jsonl");
        let mut log = DecisionLog::open(&path).unwrap();
        log.append(at("p", Verdict::Approve, "2024-05-01T10:00:00Z")).unwrap();
        log.append(at("p", Verdict::Reject, "2024-05-03T10:00:00Z")).unwrap();
        log.append(at("q", Verdict::Approve, "2024-05-02T10:00:00Z")).unwrap();
        assert!(log.append(at("q", Verdict::Reject, "yesterday")).is_err());
        let again = DecisionLog::open(&path).unwrap();
        assert_eq!(again.decisions(), log.decisions());
        assert_eq!(
            again.status_map(TargetKind::Pattern),
            log.status_map(TargetKind::Pattern)
        );
        assert_eq!(fs::read_to_string(&path).unwrap().lines().count(), 3);
    }

    #[test]
    fn auto_approval_skips_rejected_patterns() {
        use LabelType::*;
        let mut ps: Vec<FilterPattern> = [
            (vec![Name, Address], 9),
            (vec![Name, Office], 7),
            (vec![Address, Office], 3),
        ]
        .into_iter()
        .map(|(s, n)| {
            let mut p = FilterPattern::new(s);
            p.support = n;
            p
        })
        .collect();
        ps[0].status = PatternStatus::Rejected;
        auto_approve_top(&mut ps, 1);
        let st: Vec<PatternStatus> = ps.iter().map(|p| p.status).collect();
        assert_eq!(
            st,
            [
                PatternStatus::Rejected,
                PatternStatus::Approved,
                PatternStatus::Proposed
            ]
        );
    }

    #[test]
    fn record_ids_are_stable_and_distinct() {
        let a = CandidateRecord::new(Some("Yuan"), "陳瑜", Some("仲庸"), "t1", 0, RecordSource::P5);
        let b = CandidateRecord::new(Some("Ming"), "陳瑜", Some("仲庸"), "t1", 0, RecordSource::P5);
        assert_eq!(record_id(&a), record_id(&a.clone()));
        assert_ne!(record_id(&a), record_id(&b));
        assert_eq!(record_id(&a).len(), 17);
    }
}
