//! Finite-difference verification of the belief-update gradient.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::burn::{self, BurnModel, BurnParams, GatingTable, InferenceConfig, GATE_BINS};
use crate::error::Result;
use crate::features::DocFeatures;
use crate::model::{mix_seed, Model};

/// Tolerance small enough that inference always runs all `T` steps, which
/// keeps the loss smooth in the parameters.
pub const NO_EARLY_STOP: f64 = 1e-300;

/// Below this magnitude, errors are measured against it instead of the
/// gradient itself.
pub const ERROR_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradcheckConfig {
    pub instances: usize,
    pub step: f64,
    pub tolerance: f64,
    pub max_mentions: usize,
    pub max_candidates: usize,
    pub hidden: usize,
    pub dim: usize,
    pub max_iterations: usize,
    pub seed: u64,
}

impl Default for GradcheckConfig {
    fn default() -> Self {
        GradcheckConfig {
            instances: 50,
            step: 1e-5,
            tolerance: 1e-4,
            max_mentions: 3,
            max_candidates: 3,
            hidden: 4,
            dim: 4,
            max_iterations: 3,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WorstCoordinate {
    pub instance: usize,
    pub tensor: String,
    pub index: usize,
    pub analytic: f64,
    pub numeric: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GradcheckReport {
    pub instances: usize,
    pub coordinates: usize,
    pub max_relative_error: f64,
    pub tolerance: f64,
    pub passed: bool,
    pub worst: Option<WorstCoordinate>,
}

pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    let scale = analytic.abs().max(numeric.abs()).max(ERROR_FLOOR);
    (analytic - numeric).abs() / scale
}

/// A random document and model of the configured size.
pub fn random_instance(rng: &mut ChaCha8Rng, cfg: &GradcheckConfig) -> Result<(DocFeatures, BurnModel)> {
    let n_mentions = rng.gen_range(1..=cfg.max_mentions);
    let mut spans = Vec::with_capacity(n_mentions);
    let mut pos = 0;
    for _ in 0..n_mentions {
        pos += rng.gen_range(0..24);
        let len = rng.gen_range(1..3);
        spans.push((pos, pos + len));
        pos += len;
    }
    let mut unary = Vec::with_capacity(n_mentions);
    let mut gold = Vec::with_capacity(n_mentions);
    for _ in 0..n_mentions {
        let k = rng.gen_range(1..=cfg.max_candidates);
        unary.push(
            (0..k)
                .map(|_| (0..cfg.dim).map(|_| rng.gen_range(-1.0..1.0)).collect())
                .collect::<Vec<Vec<f64>>>(),
        );
        gold.push(Some(rng.gen_range(0..k)));
    }
    let total: usize = unary.iter().map(Vec::len).sum();
    let table: Vec<Vec<f64>> = (0..total * total)
        .map(|_| (0..cfg.dim).map(|_| rng.gen_range(-1.0..1.0)).collect())
        .collect();
    let offsets: Vec<usize> = unary
        .iter()
        .scan(0, |acc, m| {
            let start = *acc;
            *acc += m.len();
            Some(start)
        })
        .collect();
    let doc = DocFeatures::from_raw("gradcheck", &spans, &unary, &gold, (cfg.dim, cfg.dim), |i, j, k, w| {
        table[(offsets[i] + j) * total + offsets[k] + w].clone()
    })?;

    let mut params = BurnParams::init(cfg.dim, cfg.dim, cfg.hidden, rng.gen());
    params.gating = GatingTable {
        values: (0..GATE_BINS).map(|_| rng.gen_range(-1.0..1.0)).collect(),
    };
    let t = rng.gen_range(1..=cfg.max_iterations);
    let inference = InferenceConfig::new(t, NO_EARLY_STOP, 30)?;
    Ok((doc, BurnModel::new(params, inference)))
}

/// Compares every analytic partial derivative against central differences.
pub fn gradcheck(cfg: &GradcheckConfig) -> Result<GradcheckReport> {
    let mut report = GradcheckReport {
        instances: cfg.instances,
        coordinates: 0,
        max_relative_error: 0.0,
        tolerance: cfg.tolerance,
        passed: true,
        worst: None,
    };
    for instance in 0..cfg.instances {
        let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(&[cfg.seed, instance as u64]));
        let (doc, model) = random_instance(&mut rng, cfg)?;
        let docs = std::slice::from_ref(&doc);
        let (_, analytic) = burn::grad(docs, &model)?;
        let analytic: Vec<(&'static str, Vec<f64>)> =
            analytic.tensors().into_iter().map(|(n, t)| (n, t.to_vec())).collect();
        let mut probe = model.clone();
        for (ti, (name, grads)) in analytic.iter().enumerate() {
            for (idx, &a) in grads.iter().enumerate() {
                let original = probe.tensors_mut()[ti][idx];
                probe.tensors_mut()[ti][idx] = original + cfg.step;
                let up = burn::loss(docs, &probe)?;
                probe.tensors_mut()[ti][idx] = original - cfg.step;
                let down = burn::loss(docs, &probe)?;
                probe.tensors_mut()[ti][idx] = original;
                let numeric = (up - down) / (2.0 * cfg.step);
                let err = relative_error(a, numeric);
                report.coordinates += 1;
                if err > report.max_relative_error || report.worst.is_none() {
                    report.max_relative_error = report.max_relative_error.max(err);
                    report.worst = Some(WorstCoordinate {
                        instance,
                        tensor: name.to_string(),
                        index: idx,
                        analytic: a,
                        numeric,
                    });
                }
            }
        }
    }
    report.passed = report.max_relative_error <= cfg.tolerance;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn relative_error_examples() {
        assert_eq!(relative_error(1.0, 1.0), 0.0);
        assert!((relative_error(2.0, 1.0) - 0.5).abs() < 1e-15);
        assert!(relative_error(0.0, 1e-9) < 1e-2);
    }

    #[test]
    fn small_run_passes() {
        let report = gradcheck(&GradcheckConfig {
            instances: 5,
            seed: 3,
            ..GradcheckConfig::default()
        })
        .unwrap();
        assert!(report.passed, "{report:?}");
        assert!(report.coordinates > 0);
    }
}
