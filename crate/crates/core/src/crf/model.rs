//! Linear-chain CRF scoring, inference and the regularized likelihood.
//!
//! Parameters live in one flat vector:
//!
//! ```text
//! [ emission (feature × tag) | transition (tag × tag) | start (tag) | end (tag) ]
//! ```
//!
//! A path `y` over a sequence `x` scores
//! `start[y0] + Σt emit(xt, yt) + Σt trans[yt-1, yt] + end[yT-1]`.

#![allow(clippy::needless_range_loop)]

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::features::{FeatureConfig, FeatureVector};
use super::tag::{Tag, NUM_TAGS};
use crate::error::{Error, Result};

pub const MODEL_FORMAT_VERSION: u32 = 1;

pub type TagScores = [f64; NUM_TAGS];

#[derive(Debug, Clone, PartialEq)]
pub struct CrfModel {
    config: FeatureConfig,
    l2_lambda: f64,
    features: Vec<String>,
    feature_ids: HashMap<String, u32>,
    weights: Vec<f64>,
}

/// A sequence with features resolved to ids; unknown features are dropped.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CompiledSeq {
    pub ids: Vec<Vec<u32>>,
}

impl CompiledSeq {
    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }
}

pub(crate) fn log_sum_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + xs.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

struct Lattice {
    emissions: Vec<TagScores>,
    alpha: Vec<TagScores>,
    beta: Vec<TagScores>,
    log_z: f64,
}

impl CrfModel {
    /// A zero-weight model over the given feature names.
    pub fn new(config: FeatureConfig, l2_lambda: f64, features: Vec<String>) -> Self {
        let feature_ids = features
            .iter()
            .enumerate()
            .map(|(i, f)| (f.clone(), i as u32))
            .collect();
        let weights = vec![0.0; features.len() * NUM_TAGS + NUM_TAGS * NUM_TAGS + 2 * NUM_TAGS];
        CrfModel {
            config,
            l2_lambda,
            features,
            feature_ids,
            weights,
        }
    }

    /// Collects every distinct feature name in `sequences`, in first-seen
    /// order.
    pub fn from_feature_sequences<'a>(
        config: FeatureConfig,
        l2_lambda: f64,
        sequences: impl IntoIterator<Item = &'a [FeatureVector]>,
    ) -> Self {
        let mut seen = HashMap::new();
        let mut names = Vec::new();
        for seq in sequences {
            for fv in seq {
                for f in &fv.features {
                    if !seen.contains_key(f) {
                        seen.insert(f.clone(), names.len());
                        names.push(f.clone());
                    }
                }
            }
        }
        CrfModel::new(config, l2_lambda, names)
    }

    pub fn config(&self) -> &FeatureConfig {
        &self.config
    }

    pub fn l2_lambda(&self) -> f64 {
        self.l2_lambda
    }

    pub fn feature_names(&self) -> &[String] {
        &self.features
    }

    pub fn num_features(&self) -> usize {
        self.features.len()
    }

    pub fn num_params(&self) -> usize {
        self.weights.len()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn set_weights(&mut self, weights: Vec<f64>) -> Result<()> {
        if weights.len() != self.weights.len() {
            return Err(Error::LengthMismatch(weights.len(), self.weights.len()));
        }
        if weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::Model("non-finite weight".into()));
        }
        self.weights = weights;
        Ok(())
    }

    pub fn feature_id(&self, name: &str) -> Option<u32> {
        self.feature_ids.get(name).copied()
    }

    fn trans_offset(&self) -> usize {
        self.features.len() * NUM_TAGS
    }

    pub fn emission_index(&self, feature: u32, tag: Tag) -> usize {
        feature as usize * NUM_TAGS + tag.index()
    }

    pub fn transition_index(&self, from: Tag, to: Tag) -> usize {
        self.trans_offset() + from.index() * NUM_TAGS + to.index()
    }

    pub fn start_index(&self, tag: Tag) -> usize {
        self.trans_offset() + NUM_TAGS * NUM_TAGS + tag.index()
    }

    pub fn end_index(&self, tag: Tag) -> usize {
        self.trans_offset() + NUM_TAGS * NUM_TAGS + NUM_TAGS + tag.index()
    }

    fn trans(&self, w: &[f64], from: usize, to: usize) -> f64 {
        w[self.trans_offset() + from * NUM_TAGS + to]
    }

    fn start(&self, w: &[f64], s: usize) -> f64 {
        w[self.trans_offset() + NUM_TAGS * NUM_TAGS + s]
    }

    fn end(&self, w: &[f64], s: usize) -> f64 {
        w[self.trans_offset() + NUM_TAGS * NUM_TAGS + NUM_TAGS + s]
    }

    pub fn compile(&self, x: &[FeatureVector]) -> CompiledSeq {
        CompiledSeq {
            ids: x
                .iter()
                .map(|fv| fv.features.iter().filter_map(|f| self.feature_id(f)).collect())
                .collect(),
        }
    }

    fn emissions(&self, w: &[f64], seq: &CompiledSeq) -> Vec<TagScores> {
        seq.ids
            .iter()
            .map(|ids| {
                let mut s = [0.0; NUM_TAGS];
                for &f in ids {
                    let base = f as usize * NUM_TAGS;
                    for (t, v) in s.iter_mut().enumerate() {
                        *v += w[base + t];
                    }
                }
                s
            })
            .collect()
    }

    /// Unnormalized log score of one tag path.
    pub fn path_score(&self, seq: &CompiledSeq, tags: &[Tag]) -> f64 {
        self.path_score_with(&self.weights, seq, tags)
    }

    fn path_score_with(&self, w: &[f64], seq: &CompiledSeq, tags: &[Tag]) -> f64 {
        let em = self.emissions(w, seq);
        let mut score = 0.0;
        for (t, tag) in tags.iter().enumerate() {
            score += em[t][tag.index()];
            if t == 0 {
                score += self.start(w, tag.index());
            } else {
                score += self.trans(w, tags[t - 1].index(), tag.index());
            }
        }
        if let Some(last) = tags.last() {
            score += self.end(w, last.index());
        }
        score
    }

    fn lattice(&self, w: &[f64], seq: &CompiledSeq) -> Lattice {
        let em = self.emissions(w, seq);
        let n = em.len();
        let mut alpha = vec![[0.0; NUM_TAGS]; n];
        let mut beta = vec![[0.0; NUM_TAGS]; n];
        if n == 0 {
            return Lattice {
                emissions: em,
                alpha,
                beta,
                log_z: 0.0,
            };
        }
        for s in 0..NUM_TAGS {
            alpha[0][s] = self.start(w, s) + em[0][s];
        }
        let mut buf = [0.0; NUM_TAGS];
        for t in 1..n {
            for s in 0..NUM_TAGS {
                for (i, b) in buf.iter_mut().enumerate() {
                    *b = alpha[t - 1][i] + self.trans(w, i, s);
                }
                alpha[t][s] = em[t][s] + log_sum_exp(&buf);
            }
        }
        for s in 0..NUM_TAGS {
            beta[n - 1][s] = self.end(w, s);
        }
        for t in (0..n - 1).rev() {
            for i in 0..NUM_TAGS {
                for (j, b) in buf.iter_mut().enumerate() {
                    *b = self.trans(w, i, j) + em[t + 1][j] + beta[t + 1][j];
                }
                beta[t][i] = log_sum_exp(&buf);
            }
        }
        for (s, b) in buf.iter_mut().enumerate() {
            *b = alpha[n - 1][s] + self.end(w, s);
        }
        let log_z = log_sum_exp(&buf);
        Lattice {
            emissions: em,
            alpha,
            beta,
            log_z,
        }
    }

    /// Log partition function by the forward recursion.
    pub fn log_partition(&self, seq: &CompiledSeq) -> f64 {
        self.lattice(&self.weights, seq).log_z
    }

    /// Posterior tag distribution at every position.
    pub fn marginals(&self, x: &[FeatureVector]) -> Vec<TagScores> {
        self.marginals_compiled(&self.compile(x))
    }

    pub fn marginals_compiled(&self, seq: &CompiledSeq) -> Vec<TagScores> {
        let lat = self.lattice(&self.weights, seq);
        lat.alpha
            .iter()
            .zip(&lat.beta)
            .map(|(a, b)| {
                let mut m = [0.0; NUM_TAGS];
                for s in 0..NUM_TAGS {
                    m[s] = (a[s] + b[s] - lat.log_z).exp();
                }
                m
            })
            .collect()
    }

    /// Viterbi decoding. Ties go to the earliest tag in [`Tag::ALL`].
    pub fn decode(&self, x: &[FeatureVector]) -> (Vec<Tag>, f64) {
        self.decode_compiled(&self.compile(x))
    }

    pub fn decode_compiled(&self, seq: &CompiledSeq) -> (Vec<Tag>, f64) {
        let w = &self.weights;
        let em = self.emissions(w, seq);
        let n = em.len();
        if n == 0 {
            return (Vec::new(), 0.0);
        }
        let mut delta = vec![[0.0; NUM_TAGS]; n];
        let mut back = vec![[0usize; NUM_TAGS]; n];
        for s in 0..NUM_TAGS {
            delta[0][s] = self.start(w, s) + em[0][s];
        }
        for t in 1..n {
            for s in 0..NUM_TAGS {
                let mut best = f64::NEG_INFINITY;
                let mut arg = 0;
                for i in 0..NUM_TAGS {
                    let v = delta[t - 1][i] + self.trans(w, i, s);
                    if v > best {
                        best = v;
                        arg = i;
                    }
                }
                delta[t][s] = best + em[t][s];
                back[t][s] = arg;
            }
        }
        let mut best = f64::NEG_INFINITY;
        let mut last = 0;
        for s in 0..NUM_TAGS {
            let v = delta[n - 1][s] + self.end(w, s);
            if v > best {
                best = v;
                last = s;
            }
        }
        let mut path = vec![last; n];
        for t in (1..n).rev() {
            path[t - 1] = back[t][path[t]];
        }
        (path.into_iter().map(Tag::from_index).collect(), best)
    }

    /// Adds `∇ log P(y|x)` at weights `w` into `grad` and returns
    /// `log P(y|x)`. No regularization.
    pub(crate) fn accumulate(&self, w: &[f64], seq: &CompiledSeq, tags: &[Tag], grad: &mut [f64]) -> f64 {
        let lat = self.lattice(w, seq);
        let n = seq.len();
        let gold = self.path_score_with(w, seq, tags);

        // Empirical counts.
        for (t, tag) in tags.iter().enumerate() {
            for &f in &seq.ids[t] {
                grad[self.emission_index(f, *tag)] += 1.0;
            }
            if t == 0 {
                grad[self.start_index(*tag)] += 1.0;
            } else {
                grad[self.transition_index(tags[t - 1], *tag)] += 1.0;
            }
        }
        if let Some(last) = tags.last() {
            grad[self.end_index(*last)] += 1.0;
        }

        // Expected counts.
        let off = self.trans_offset();
        for t in 0..n {
            let mut m = [0.0; NUM_TAGS];
            for s in 0..NUM_TAGS {
                m[s] = (lat.alpha[t][s] + lat.beta[t][s] - lat.log_z).exp();
            }
            for &f in &seq.ids[t] {
                let base = f as usize * NUM_TAGS;
                for s in 0..NUM_TAGS {
                    grad[base + s] -= m[s];
                }
            }
            if t == 0 {
                for s in 0..NUM_TAGS {
                    grad[off + NUM_TAGS * NUM_TAGS + s] -= m[s];
                }
            } else {
                for i in 0..NUM_TAGS {
                    for j in 0..NUM_TAGS {
                        let p = (lat.alpha[t - 1][i] + self.trans(w, i, j) + lat.emissions[t][j] + lat.beta[t][j]
                            - lat.log_z)
                            .exp();
                        grad[off + i * NUM_TAGS + j] -= p;
                    }
                }
            }
            if t == n - 1 {
                for s in 0..NUM_TAGS {
                    grad[off + NUM_TAGS * NUM_TAGS + NUM_TAGS + s] -= m[s];
                }
            }
        }
        gold - lat.log_z
    }

    /// `log P(y|x) - (λ/2)‖θ‖²` and its gradient.
    pub fn log_likelihood_and_gradient(&self, x: &[FeatureVector], y: &[Tag]) -> Result<(f64, Vec<f64>)> {
        if x.len() != y.len() {
            return Err(Error::LengthMismatch(x.len(), y.len()));
        }
        if x.is_empty() {
            return Err(Error::Invalid("empty sequence".into()));
        }
        let seq = self.compile(x);
        let mut grad = vec![0.0; self.weights.len()];
        let ll = self.accumulate(&self.weights, &seq, y, &mut grad);
        let mut sq = 0.0;
        for (g, w) in grad.iter_mut().zip(&self.weights) {
            *g -= self.l2_lambda * w;
            sq += w * w;
        }
        Ok((ll - 0.5 * self.l2_lambda * sq, grad))
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<CrfModel> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        CrfModel::from_json(&text)
    }

    pub fn to_json(&self) -> Result<String> {
        let off = self.trans_offset();
        let w = &self.weights;
        let file = ModelFile {
            format_version: MODEL_FORMAT_VERSION,
            config: self.config.clone(),
            l2_lambda: self.l2_lambda,
            features: self.features.clone(),
            emission: w[..off].chunks(NUM_TAGS).map(|c| c.to_vec()).collect(),
            transition: w[off..off + NUM_TAGS * NUM_TAGS]
                .chunks(NUM_TAGS)
                .map(|c| c.to_vec())
                .collect(),
            start: w[off + NUM_TAGS * NUM_TAGS..off + NUM_TAGS * NUM_TAGS + NUM_TAGS].to_vec(),
            end: w[off + NUM_TAGS * NUM_TAGS + NUM_TAGS..].to_vec(),
        };
        Ok(serde_json::to_string_pretty(&file)?)
    }

    pub fn from_json(text: &str) -> Result<CrfModel> {
        let probe: VersionProbe = serde_json::from_str(text)?;
        if probe.format_version != MODEL_FORMAT_VERSION {
            return Err(Error::ModelVersion {
                found: probe.format_version,
                expected: MODEL_FORMAT_VERSION,
            });
        }
        let file: ModelFile = serde_json::from_str(text)?;
        if file.emission.len() != file.features.len() {
            return Err(Error::Model("emission rows do not match the feature dictionary".into()));
        }
        let rows_ok = file
            .emission
            .iter()
            .chain(&file.transition)
            .all(|r| r.len() == NUM_TAGS);
        if !rows_ok || file.transition.len() != NUM_TAGS || file.start.len() != NUM_TAGS || file.end.len() != NUM_TAGS {
            return Err(Error::Model("weight arrays have the wrong shape".into()));
        }
        let mut model = CrfModel::new(file.config, file.l2_lambda, file.features);
        if model.feature_ids.len() != model.features.len() {
            return Err(Error::Model("duplicate feature names".into()));
        }
        let weights: Vec<f64> = file
            .emission
            .into_iter()
            .chain(file.transition)
            .flatten()
            .chain(file.start)
            .chain(file.end)
            .collect();
        model.set_weights(weights)?;
        Ok(model)
    }
}

#[derive(Deserialize)]
struct VersionProbe {
    format_version: u32,
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    format_version: u32,
    config: FeatureConfig,
    l2_lambda: f64,
    features: Vec<String>,
    emission: Vec<Vec<f64>>,
    transition: Vec<Vec<f64>>,
    start: Vec<f64>,
    end: Vec<f64>,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seq_of(features: &[&[&str]]) -> Vec<FeatureVector> {
        features
            .iter()
            .enumerate()
            .map(|(i, f)| FeatureVector::new(i, f.iter().map(|s| s.to_string()).collect()))
            .collect()
    }

    #[test]
    fn zero_weights_give_uniform_likelihood() {
        let x = seq_of(&[&["a"], &["b"], &["c"], &["a"]]);
        let model = CrfModel::from_feature_sequences(FeatureConfig::default(), 1.0, [x.as_slice()]);
        let y = vec![Tag::NB, Tag::NE, Tag::O, Tag::AB];
        let (ll, _) = model.log_likelihood_and_gradient(&x, &y).unwrap();
        assert!((ll + 4.0 * 7f64.ln()).abs() < 1e-12);
        for m in model.marginals(&x) {
            for p in m {
                assert!((p - 1.0 / 7.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn zero_weights_decode_to_first_tag() {
        let x = seq_of(&[&[], &[], &[]]);
        let model = CrfModel::new(FeatureConfig::default(), 1.0, vec![]);
        assert_eq!(model.decode(&x).0, vec![Tag::NB; 3]);
    }

    #[test]
    fn strong_feature_wins() {
        let x = seq_of(&[&["other"]]);
        let mut model = CrfModel::from_feature_sequences(FeatureConfig::default(), 1.0, [x.as_slice()]);
        let mut w = model.weights().to_vec();
        w[model.emission_index(0, Tag::O)] = 5.0;
        model.set_weights(w).unwrap();
        assert_eq!(model.decode(&x).0, vec![Tag::O]);
    }

    #[test]
    fn length_mismatch() {
        let x = seq_of(&[&["a"]]);
        let model = CrfModel::new(FeatureConfig::default(), 1.0, vec![]);
        assert!(matches!(
            model.log_likelihood_and_gradient(&x, &[Tag::O, Tag::O]),
            Err(Error::LengthMismatch(1, 2))
        ));
    }

    #[test]
    fn model_file_roundtrip_and_version_check() {
        let x = seq_of(&[&["a", "b"], &["c"]]);
        let mut model = CrfModel::from_feature_sequences(FeatureConfig::default(), 0.5, [x.as_slice()]);
        let w: Vec<f64> = (0..model.num_params()).map(|i| (i as f64 * 0.37).sin()).collect();
        model.set_weights(w).unwrap();
        let text = model.to_json().unwrap();
        assert_eq!(CrfModel::from_json(&text).unwrap(), model);

        let bumped = text.replacen("\"format_version\": 1", "\"format_version\": 99", 1);
        assert!(matches!(
            CrfModel::from_json(&bumped),
            Err(Error::ModelVersion { found: 99, .. })
        ));
    }
}
