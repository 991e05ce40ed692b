//! Forward-backward, Viterbi and gradients checked against enumeration and
//! finite differences.

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;

const FEATS: [&str; 5] = ["f0", "f1", "f2", "f3", "f4"];

fn random_seq(rng: &mut ChaCha8Rng, len: usize) -> Vec<FeatureVector> {
    (0..len)
        .map(|p| {
            let feats = FEATS
                .iter()
                .filter(|_| rng.gen_bool(0.4))
                .map(|s| s.to_string())
                .collect();
            FeatureVector::new(p, feats)
        })
        .collect()
}

fn random_model(rng: &mut ChaCha8Rng, lambda: f64, scale: f64) -> CrfModel {
    let mut m = CrfModel::new(
        FeatureConfig::default(),
        lambda,
        FEATS.iter().map(|s| s.to_string()).collect(),
    );
    let w = (0..m.num_params()).map(|_| rng.gen_range(-scale..scale)).collect();
    m.set_weights(w).unwrap();
    m
}

fn all_paths(len: usize) -> Vec<Vec<Tag>> {
    let mut paths = vec![Vec::new()];
    for _ in 0..len {
        paths = paths
            .into_iter()
            .flat_map(|p| {
                Tag::ALL.into_iter().map(move |t| {
                    let mut q = p.clone();
                    q.push(t);
                    q
                })
            })
            .collect();
    }
    paths
}

fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

struct Enumeration {
    log_z: f64,
    marginals: Vec<TagScores>,
    best_score: f64,
}

fn enumerate(model: &CrfModel, x: &[FeatureVector]) -> Enumeration {
    let seq = model.compile(x);
    let paths = all_paths(x.len());
    let scores: Vec<f64> = paths.iter().map(|p| model.path_score(&seq, p)).collect();
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let z: f64 = scores.iter().map(|s| (s - max).exp()).sum();
    let mut marginals = vec![[0.0; NUM_TAGS]; x.len()];
    for (p, s) in paths.iter().zip(&scores) {
        let prob = (s - max).exp() / z;
        for (t, tag) in p.iter().enumerate() {
            marginals[t][tag.index()] += prob;
        }
    }
    Enumeration {
        log_z: max + z.ln(),
        marginals,
        best_score: max,
    }
}

#[test]
fn forward_backward_and_viterbi_match_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..60 {
        let len = rng.gen_range(1..=5);
        let model = random_model(&mut rng, 1.0, 2.0);
        let x = random_seq(&mut rng, len);
        let brute = enumerate(&model, &x);
        let seq = model.compile(&x);

        assert!(rel_err(model.log_partition(&seq), brute.log_z) <= 1e-9);
        for (m, b) in model.marginals(&x).iter().zip(&brute.marginals) {
            assert!((m.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
            for s in 0..NUM_TAGS {
                assert!(rel_err(m[s], b[s]) <= 1e-9, "{} vs {}", m[s], b[s]);
            }
        }
        let (path, score) = model.decode(&x);
        assert!((score - model.path_score(&seq, &path)).abs() <= 1e-12 * score.abs().max(1.0));
        assert!((score - brute.best_score).abs() <= 1e-12 * brute.best_score.abs().max(1.0));
    }
}

#[test]
fn gradient_matches_central_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let h = 1e-5;
    for _ in 0..20 {
        let len = rng.gen_range(1..=6);
        let model = random_model(&mut rng, 0.3, 1.0);
        let x = random_seq(&mut rng, len);
        let y: Vec<Tag> = (0..len).map(|_| Tag::from_index(rng.gen_range(0..NUM_TAGS))).collect();
        let (_, grad) = model.log_likelihood_and_gradient(&x, &y).unwrap();
        for i in 0..model.num_params() {
            let mut plus = model.clone();
            let mut w = model.weights().to_vec();
            w[i] += h;
            plus.set_weights(w.clone()).unwrap();
            let mut minus = model.clone();
            w[i] -= 2.0 * h;
            minus.set_weights(w).unwrap();
            let fp = plus.log_likelihood_and_gradient(&x, &y).unwrap().0;
            let fm = minus.log_likelihood_and_gradient(&x, &y).unwrap().0;
            let numeric = (fp - fm) / (2.0 * h);
            let err = (numeric - grad[i]).abs() / grad[i].abs().max(1e-3);
            assert!(err <= 1e-4, "param {i}: {numeric} vs {}", grad[i]);
        }
    }
}

#[test]
fn separable_toy_set_is_learned() {
    let examples: Vec<Example> = [
        vec![Tag::NB, Tag::NI, Tag::NE, Tag::O, Tag::AB, Tag::AE],
        vec![Tag::O, Tag::AB, Tag::AI, Tag::AE, Tag::NB, Tag::NE],
        vec![Tag::NB, Tag::NE, Tag::O, Tag::O],
    ]
    .into_iter()
    .map(|y| {
        let x = y
            .iter()
            .enumerate()
            .map(|(p, t)| FeatureVector::new(p, vec![format!("char={t}")]))
            .collect();
        (x, y)
    })
    .collect();
    let model = train(
        &examples,
        &FeatureConfig::default(),
        &TrainOptions {
            l2_lambda: 0.1,
            ..Default::default()
        },
    )
    .unwrap();
    for (x, y) in &examples {
        assert_eq!(&model.decode(x).0, y);
    }
}

#[test]
fn huge_regularization_zeroes_weights() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let examples: Vec<Example> = (0..4)
        .map(|_| {
            let x = random_seq(&mut rng, 5);
            let y = (0..5).map(|_| Tag::from_index(rng.gen_range(0..NUM_TAGS))).collect();
            (x, y)
        })
        .collect();
    let model = train(
        &examples,
        &FeatureConfig::default(),
        &TrainOptions {
            l2_lambda: 1e6,
            ..Default::default()
        },
    )
    .unwrap();
    assert!(model.weights().iter().all(|w| w.abs() < 1e-5));
    assert_eq!(model.decode(&examples[0].0).0, vec![Tag::NB; 5]);
}

#[test]
fn transitions_only_chain() {
    // No emission features: the likelihood depends only on start, transition
    // and end weights.
    let empty = |n: usize| (0..n).map(|p| FeatureVector::new(p, vec![])).collect::<Vec<_>>();
    let examples: Vec<Example> = vec![
        (empty(2), vec![Tag::NB, Tag::NE]),
        (empty(3), vec![Tag::NB, Tag::NI, Tag::NE]),
    ];
    let lambda = 0.5;
    let (model, report) = train_with_report(
        &examples,
        &FeatureConfig::default(),
        &TrainOptions {
            l2_lambda: lambda,
            max_iter: 500,
            tol: 1e-7,
        },
    )
    .unwrap();
    assert_eq!(model.num_features(), 0);
    assert!(report.converged);

    // Objective recomputed by enumeration at the returned weights.
    let sq: f64 = model.weights().iter().map(|w| w * w).sum();
    let ll: f64 = examples
        .iter()
        .map(|(x, y)| model.path_score(&model.compile(x), y) - enumerate(&model, x).log_z)
        .sum();
    assert!((report.objective - (ll - 0.5 * lambda * sq)).abs() < 1e-9);

    // Stationarity: empirical minus expected counts equals λθ.
    let mut grad = vec![0.0; model.num_params()];
    for (x, y) in &examples {
        let (_, g) = model.log_likelihood_and_gradient(x, y).unwrap();
        grad.iter_mut().zip(g).for_each(|(a, b)| *a += b);
    }
    // Each per-example gradient subtracts λθ once; the dataset objective
    // subtracts it once in total.
    for (g, w) in grad.iter_mut().zip(model.weights()) {
        *g += lambda * w;
    }
    assert!(grad.iter().all(|g| g.abs() < 1e-6), "{grad:?}");

    assert_eq!(model.decode(&empty(2)).0, vec![Tag::NB, Tag::NE]);
    assert_eq!(model.decode(&empty(3)).0, vec![Tag::NB, Tag::NI, Tag::NE]);

    // At zero weights the objective is -T log 7 per example.
    let zero = CrfModel::new(FeatureConfig::default(), lambda, vec![]);
    let total: f64 = examples
        .iter()
        .map(|(x, y)| zero.log_likelihood_and_gradient(x, y).unwrap().0)
        .sum();
    assert!((total + 5.0 * 7f64.ln()).abs() < 1e-12);
}

#[test]
fn training_is_deterministic_across_thread_counts() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let examples: Vec<Example> = (0..70)
        .map(|_| {
            let x = random_seq(&mut rng, 6);
            let y = (0..6).map(|_| Tag::from_index(rng.gen_range(0..NUM_TAGS))).collect();
            (x, y)
        })
        .collect();
    let opts = TrainOptions {
        max_iter: 15,
        ..Default::default()
    };
    let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let four = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
    let a = one.install(|| train(&examples, &FeatureConfig::default(), &opts).unwrap());
    let b = four.install(|| train(&examples, &FeatureConfig::default(), &opts).unwrap());
    assert_eq!(a.weights(), b.weights());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn marginals_normalize(seed in any::<u64>(), len in 1usize..12) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let model = random_model(&mut rng, 1.0, 4.0);
        let x = random_seq(&mut rng, len);
        for m in model.marginals(&x) {
            prop_assert!((m.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn decode_is_pure(seed in any::<u64>(), len in 1usize..12) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let model = random_model(&mut rng, 1.0, 1.0);
        let x = random_seq(&mut rng, len);
        prop_assert_eq!(model.decode(&x), model.decode(&x));
    }
}
