//! Per-character feature extraction.
//!
//! | group | features                                                      |
//! |-------|---------------------------------------------------------------|
//! | 1     | `char=c`                                                      |
//! | 2     | `left{j}=c`, `right{j}=c` for `j` in `1..=k`                  |
//! | 3     | `{ne}{Left,Right}@{d}` for the nearest office/entry/nianhao/time match on each side |
//! | 4     | `probPerson@{bin}`, `probLoc@{bin}`                           |
//! | 5     | `surname@{p}` for the `p`-th character of a surname match     |
//! | 6     | `ne={type}` on characters inside an office/entry/nianhao/time match, replacing groups 1-5 |

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::corpus::Document;
use crate::error::{Error, Result};
use crate::knowledge_base::{KnowledgeBase, LabelType};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureConfig {
    /// Context radius for group 2.
    pub k: usize,
    /// Search radius for group 3.
    pub ne_window: usize,
    pub bins: usize,
    pub groups: BTreeSet<u8>,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        FeatureConfig {
            k: 5,
            ne_window: 30,
            bins: 5,
            groups: [1, 2, 4, 5, 6].into_iter().collect(),
        }
    }
}

impl FeatureConfig {
    pub fn with_groups(groups: &[u8]) -> Self {
        FeatureConfig {
            groups: groups.iter().copied().collect(),
            ..Default::default()
        }
    }

    pub fn has(&self, group: u8) -> bool {
        self.groups.contains(&group)
    }

    pub fn validate(&self) -> Result<()> {
        if self.ne_window == 0 {
            return Err(Error::Invalid("ne_window must be at least 1".into()));
        }
        if self.bins != 5 {
            return Err(Error::Invalid("usage probabilities use exactly 5 bins".into()));
        }
        if let Some(g) = self.groups.iter().find(|g| !(1..=6).contains(*g)) {
            return Err(Error::Invalid(format!("unknown feature group {g}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub position: usize,
    pub features: Vec<String>,
}

impl FeatureVector {
    pub fn new(position: usize, features: Vec<String>) -> Self {
        FeatureVector { position, features }
    }

    pub fn contains(&self, feature: &str) -> bool {
        self.features.iter().any(|f| f == feature)
    }
}

/// Discretizes a probability into `[0, .2) [.2, .4) [.4, .6) [.6, .8) [.8, 1]`.
pub fn usage_bin(p: f64) -> Result<u8> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::ProbabilityOutOfRange(p));
    }
    Ok(((p * 5.0).floor() as u8 + 1).min(5))
}

#[derive(Debug, Clone, Copy)]
struct NeSpan {
    start: usize,
    end: usize,
    label: LabelType,
}

pub fn build_features(doc: &Document, kb: &KnowledgeBase, cfg: &FeatureConfig) -> Result<Vec<FeatureVector>> {
    cfg.validate()?;
    if cfg.has(4) && kb.char_stats().is_empty() {
        return Err(Error::EmptyCharStats);
    }
    let chars = doc.chars();
    let n = chars.len();

    let ne_spans: Vec<NeSpan> = if cfg.has(3) || cfg.has(6) {
        kb.longest_matches(doc, &LabelType::FEATURE_NE)
            .into_iter()
            .map(|m| NeSpan {
                start: m.start,
                end: m.end,
                label: m.entry.label,
            })
            .collect()
    } else {
        Vec::new()
    };

    // Longest covering NE per position; ties go to the earlier type.
    let mut cover: Vec<Option<NeSpan>> = vec![None; n];
    if cfg.has(6) {
        for s in &ne_spans {
            for slot in &mut cover[s.start..s.end] {
                let better = match slot {
                    None => true,
                    Some(cur) => {
                        let (len, cur_len) = (s.end - s.start, cur.end - cur.start);
                        len > cur_len || (len == cur_len && s.label < cur.label)
                    }
                };
                if better {
                    *slot = Some(*s);
                }
            }
        }
    }

    let mut surname_pos: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); n];
    if cfg.has(5) {
        for pos in 0..n {
            if let Some(m) = kb.prefix_matches(chars, pos, LabelType::Surname).pop() {
                for (offset, i) in (m.start..m.end).enumerate() {
                    surname_pos[i].insert(offset + 1);
                }
            }
        }
    }

    let mut out = Vec::with_capacity(n);
    for (p, &c) in chars.iter().enumerate() {
        if let Some(ne) = cover[p] {
            out.push(FeatureVector::new(p, vec![format!("ne={}", ne.label.feature_token())]));
            continue;
        }
        let mut f = Vec::new();
        if cfg.has(1) {
            f.push(format!("char={c}"));
        }
        if cfg.has(2) {
            for j in 1..=cfg.k {
                if j <= p {
                    f.push(format!("left{j}={}", chars[p - j]));
                }
                if p + j < n {
                    f.push(format!("right{j}={}", chars[p + j]));
                }
            }
        }
        if cfg.has(3) {
            for label in LabelType::FEATURE_NE {
                let token = label.feature_token();
                let right = ne_spans
                    .iter()
                    .filter(|s| s.label == label && s.start > p)
                    .map(|s| s.start - p - 1)
                    .min();
                let left = ne_spans
                    .iter()
                    .filter(|s| s.label == label && s.end <= p)
                    .map(|s| p - s.end)
                    .min();
                if let Some(d) = right.filter(|&d| d < cfg.ne_window) {
                    f.push(format!("{token}Right@{d}"));
                }
                if let Some(d) = left.filter(|&d| d < cfg.ne_window) {
                    f.push(format!("{token}Left@{d}"));
                }
            }
        }
        if cfg.has(4) {
            let count = kb.char_count(c);
            if let (Some(pp), Some(pl)) = (count.person_prob(), count.location_prob()) {
                f.push(format!("probPerson@{}", usage_bin(pp)?));
                f.push(format!("probLoc@{}", usage_bin(pl)?));
            }
        }
        if cfg.has(5) {
            for pos in &surname_pos[p] {
                f.push(format!("surname@{pos}"));
            }
        }
        out.push(FeatureVector::new(p, f));
    }
    Ok(out)
}
