//! Maximum-likelihood training with L-BFGS.

use std::collections::VecDeque;

use rayon::prelude::*;

use super::features::{FeatureConfig, FeatureVector};
use super::model::{CompiledSeq, CrfModel};
use super::tag::Tag;
use crate::error::{Error, Result};

/// Examples are reduced in fixed-size chunks so the summation order, and
/// therefore the result, does not depend on the number of worker threads.
const CHUNK: usize = 16;
const HISTORY: usize = 10;

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOptions {
    pub l2_lambda: f64,
    pub max_iter: usize,
    /// Stop once the gradient norm falls to this value.
    pub tol: f64,
}

impl Default for TrainOptions {
    fn default() -> Self {
        TrainOptions {
            l2_lambda: 1.0,
            max_iter: 200,
            tol: 1e-4,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    pub iterations: usize,
    pub objective: f64,
    pub grad_norm: f64,
    pub converged: bool,
}

pub type Example = (Vec<FeatureVector>, Vec<Tag>);

pub fn train(examples: &[Example], cfg: &FeatureConfig, opts: &TrainOptions) -> Result<CrfModel> {
    train_with_report(examples, cfg, opts).map(|(m, _)| m)
}

pub fn train_with_report(
    examples: &[Example],
    cfg: &FeatureConfig,
    opts: &TrainOptions,
) -> Result<(CrfModel, TrainReport)> {
    if examples.is_empty() {
        return Err(Error::NoExamples);
    }
    if !(opts.l2_lambda >= 0.0 && opts.l2_lambda.is_finite()) {
        return Err(Error::Invalid(format!("invalid regularization {}", opts.l2_lambda)));
    }
    for (x, y) in examples {
        if x.len() != y.len() {
            return Err(Error::LengthMismatch(x.len(), y.len()));
        }
    }
    let mut model =
        CrfModel::from_feature_sequences(cfg.clone(), opts.l2_lambda, examples.iter().map(|(x, _)| x.as_slice()));
    let compiled: Vec<(CompiledSeq, &[Tag])> = examples
        .iter()
        .filter(|(x, _)| !x.is_empty())
        .map(|(x, y)| (model.compile(x), y.as_slice()))
        .collect();

    let n = model.num_params();
    let lambda = opts.l2_lambda;
    // Minimizes the negated regularized log-likelihood.
    let objective = |w: &[f64]| -> (f64, Vec<f64>) {
        let parts: Vec<(f64, Vec<f64>)> = compiled
            .par_chunks(CHUNK)
            .map(|chunk| {
                let mut g = vec![0.0; n];
                let ll: f64 = chunk.iter().map(|(seq, y)| model.accumulate(w, seq, y, &mut g)).sum();
                (ll, g)
            })
            .collect();
        let mut ll = 0.0;
        let mut grad = vec![0.0; n];
        for (l, g) in parts {
            ll += l;
            for (a, b) in grad.iter_mut().zip(g) {
                *a += b;
            }
        }
        let mut sq = 0.0;
        for (g, wi) in grad.iter_mut().zip(w) {
            sq += wi * wi;
            *g = -(*g - lambda * wi);
        }
        (-(ll - 0.5 * lambda * sq), grad)
    };

    let result = minimize(objective, vec![0.0; n], opts.max_iter, opts.tol)?;
    model.set_weights(result.x)?;
    Ok((
        model,
        TrainReport {
            iterations: result.iterations,
            objective: -result.f,
            grad_norm: result.grad_norm,
            converged: result.converged,
        },
    ))
}

#[derive(Debug)]
struct Minimum {
    x: Vec<f64>,
    f: f64,
    grad_norm: f64,
    iterations: usize,
    converged: bool,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn check_finite(f: f64, g: &[f64], iteration: usize) -> Result<()> {
    if f.is_finite() && g.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(iteration))
    }
}

/// L-BFGS with a backtracking Armijo line search.
fn minimize(
    mut fg: impl FnMut(&[f64]) -> (f64, Vec<f64>),
    mut x: Vec<f64>,
    max_iter: usize,
    tol: f64,
) -> Result<Minimum> {
    let (mut f, mut g) = fg(&x);
    check_finite(f, &g, 0)?;
    let mut history: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::with_capacity(HISTORY);
    let mut iterations = 0;

    while iterations < max_iter {
        let gnorm = norm(&g);
        if gnorm <= tol {
            return Ok(Minimum {
                x,
                f,
                grad_norm: gnorm,
                iterations,
                converged: true,
            });
        }

        // Two-loop recursion.
        let mut d: Vec<f64> = g.iter().map(|v| -v).collect();
        let mut alphas = Vec::with_capacity(history.len());
        for (s, y, rho) in history.iter().rev() {
            let a = rho * dot(s, &d);
            for (di, yi) in d.iter_mut().zip(y) {
                *di -= a * yi;
            }
            alphas.push(a);
        }
        if let Some((s, y, _)) = history.back() {
            let gamma = dot(s, y) / dot(y, y);
            d.iter_mut().for_each(|v| *v *= gamma);
        }
        for ((s, y, rho), a) in history.iter().zip(alphas.into_iter().rev()) {
            let b = rho * dot(y, &d);
            for (di, si) in d.iter_mut().zip(s) {
                *di += (a - b) * si;
            }
        }

        let mut slope = dot(&g, &d);
        if slope >= 0.0 {
            history.clear();
            d = g.iter().map(|v| -v).collect();
            slope = -gnorm * gnorm;
        }
        let mut step = if history.is_empty() {
            (1.0 / gnorm).min(1.0)
        } else {
            1.0
        };

        iterations += 1;
        let mut accepted = None;
        for _ in 0..40 {
            let trial: Vec<f64> = x.iter().zip(&d).map(|(xi, di)| xi + step * di).collect();
            let (ft, gt) = fg(&trial);
            if ft.is_finite() && ft <= f + 1e-4 * step * slope {
                check_finite(ft, &gt, iterations)?;
                accepted = Some((trial, ft, gt));
                break;
            }
            if ft.is_nan() {
                return Err(Error::NonFinite(iterations));
            }
            step *= 0.5;
        }
        let Some((xn, fn_, gn)) = accepted else {
            // No further decrease is representable.
            let grad_norm = norm(&g);
            return Ok(Minimum {
                x,
                f,
                grad_norm,
                iterations,
                converged: grad_norm <= tol,
            });
        };

        let s: Vec<f64> = xn.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = gn.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-12 * norm(&s) * norm(&y) {
            if history.len() == HISTORY {
                history.pop_front();
            }
            history.push_back((s, y, 1.0 / sy));
        }
        let relative_drop = (f - fn_).abs() / f.abs().max(fn_.abs()).max(1.0);
        x = xn;
        f = fn_;
        g = gn;
        if relative_drop < 1e-15 {
            break;
        }
    }
    let grad_norm = norm(&g);
    Ok(Minimum {
        x,
        f,
        grad_norm,
        iterations,
        converged: grad_norm <= tol,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimizes_a_quadratic() {
        let target = [3.0, -1.0, 0.5];
        let r = minimize(
            |x| {
                let f = x
                    .iter()
                    .zip(&target)
                    .enumerate()
                    .map(|(i, (a, b))| (i as f64 + 1.0) * (a - b).powi(2))
                    .sum();
                let g = x
                    .iter()
                    .zip(&target)
                    .enumerate()
                    .map(|(i, (a, b))| 2.0 * (i as f64 + 1.0) * (a - b))
                    .collect();
                (f, g)
            },
            vec![0.0; 3],
            100,
            1e-10,
        )
        .unwrap();
        assert!(r.converged);
        for (a, b) in r.x.iter().zip(&target) {
            assert!((a - b).abs() < 1e-8);
        }
    }

    #[test]
    fn rosenbrock() {
        let r = minimize(
            |x| {
                let (a, b) = (x[0], x[1]);
                let f = (1.0 - a).powi(2) + 100.0 * (b - a * a).powi(2);
                let g = vec![-2.0 * (1.0 - a) - 400.0 * a * (b - a * a), 200.0 * (b - a * a)];
                (f, g)
            },
            vec![-1.2, 1.0],
            500,
            1e-8,
        )
        .unwrap();
        assert!((r.x[0] - 1.0).abs() < 1e-5 && (r.x[1] - 1.0).abs() < 1e-5, "{:?}", r.x);
    }

    #[test]
    fn nan_objective_reports_iteration() {
        let err = minimize(|_| (f64::NAN, vec![0.0]), vec![0.0], 10, 1e-6).unwrap_err();
        assert!(matches!(err, Error::NonFinite(0)));
    }

    #[test]
    fn empty_examples_rejected() {
        assert!(matches!(
            train(&[], &FeatureConfig::default(), &TrainOptions::default()),
            Err(Error::NoExamples)
        ));
    }
}
