//! Linear scoring with greedy mention evidence.
//!
//! `s(e_ij) = s_l(e_ij) + (1/|M|) Σ_{k≠i} max_w s_e(e_ij, e_kw)`, where both
//! `s_l` and `s_e` are dot products of weights with feature vectors and `|M|`
//! counts the mentions that have candidates.

use crate::error::{Error, Result};
use crate::features::{DocFeatures, FeatureSet};
use crate::model::{argmax, log_sum_exp, softmax, DocObjective, Dropout, Model};

#[derive(Debug, Clone, PartialEq)]
pub struct LinearParams {
    pub w_local: Vec<f64>,
    pub w_pair: Vec<f64>,
}

impl LinearParams {
    pub fn zeros(feature_set: FeatureSet) -> Self {
        LinearParams {
            w_local: vec![0.0; feature_set.unary_dim()],
            w_pair: vec![0.0; feature_set.binary_dim()],
        }
    }

    /// Unit weights; a sensible untrained default since every feature grows
    /// with evidence for the candidate.
    pub fn ones(feature_set: FeatureSet) -> Self {
        LinearParams {
            w_local: vec![1.0; feature_set.unary_dim()],
            w_pair: vec![1.0; feature_set.binary_dim()],
        }
    }

    fn check(&self, doc: &DocFeatures) -> Result<()> {
        if self.w_local.len() != doc.d_l {
            return Err(Error::DimensionMismatch {
                expected: doc.d_l,
                actual: self.w_local.len(),
            });
        }
        if self.w_pair.len() != doc.d_g {
            return Err(Error::DimensionMismatch {
                expected: doc.d_g,
                actual: self.w_pair.len(),
            });
        }
        Ok(())
    }
}

fn dot(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: b.len(),
            actual: a.len(),
        });
    }
    Ok(a.iter().zip(b).map(|(x, y)| x * y).sum())
}

/// `W_lᵀ Φ`.
pub fn local_score(phi: &[f64], w_local: &[f64]) -> Result<f64> {
    dot(phi, w_local)
}

/// `W_gᵀ Ψ`.
pub fn pair_score(psi: &[f64], w_pair: &[f64]) -> Result<f64> {
    dot(psi, w_pair)
}

#[derive(Debug, Clone, PartialEq)]
pub struct GreedyMention {
    pub local: Vec<f64>,
    pub global: Vec<f64>,
    /// `local + global` per candidate.
    pub scores: Vec<f64>,
    pub prediction: Option<usize>,
}

/// Greedy scoring from precomputed scores. `local[i][j]` is `s_l` and
/// `pair(i, j, k, w)` is `s_e` between candidate j of mention i and
/// candidate w of mention k. Returns, per mention, the table and for each
/// candidate the index `w` chosen in every other mention.
fn greedy_tables(
    local: &[Vec<f64>],
    pair: impl Fn(usize, usize, usize, usize) -> f64,
) -> (Vec<GreedyMention>, Vec<Vec<Vec<(usize, usize)>>>) {
    let active = local.iter().filter(|l| !l.is_empty()).count();
    let mut out = Vec::with_capacity(local.len());
    let mut choices = Vec::with_capacity(local.len());
    for (i, li) in local.iter().enumerate() {
        let mut global = vec![0.0; li.len()];
        let mut chosen = vec![Vec::new(); li.len()];
        for (j, g) in global.iter_mut().enumerate() {
            let mut sum = 0.0;
            for (k, lk) in local.iter().enumerate() {
                if k == i || lk.is_empty() {
                    continue;
                }
                let mut best_w = 0;
                let mut best = pair(i, j, k, 0);
                for w in 1..lk.len() {
                    let s = pair(i, j, k, w);
                    if s > best {
                        best = s;
                        best_w = w;
                    }
                }
                sum += best;
                chosen[j].push((k, best_w));
            }
            *g = if active == 0 { 0.0 } else { sum / active as f64 };
        }
        let scores: Vec<f64> = li.iter().zip(&global).map(|(l, g)| l + g).collect();
        out.push(GreedyMention {
            local: li.clone(),
            prediction: argmax(&scores),
            global,
            scores,
        });
        choices.push(chosen);
    }
    (out, choices)
}

/// Greedy linking from already-computed local and pair scores.
pub fn greedy_from_scores(
    local: &[Vec<f64>],
    pair: impl Fn(usize, usize, usize, usize) -> f64,
) -> Vec<GreedyMention> {
    greedy_tables(local, pair).0
}

fn score_tables(doc: &DocFeatures, params: &LinearParams) -> Vec<Vec<f64>> {
    doc.mentions
        .iter()
        .enumerate()
        .map(|(i, m)| {
            (0..m.n_candidates())
                .map(|j| doc.unary(i, j).iter().zip(&params.w_local).map(|(x, w)| x * w).sum())
                .collect()
        })
        .collect()
}

fn pair_value(doc: &DocFeatures, params: &LinearParams, i: usize, j: usize, k: usize, w: usize) -> f64 {
    doc.pair(i, j, k, w)
        .iter()
        .zip(&params.w_pair)
        .map(|(x, w)| x * w)
        .sum()
}

pub fn greedy_link(doc: &DocFeatures, params: &LinearParams) -> Result<Vec<GreedyMention>> {
    params.check(doc)?;
    let local = score_tables(doc, params);
    Ok(greedy_from_scores(&local, |i, j, k, w| pair_value(doc, params, i, j, k, w)))
}

/// Linear model trained with a per-mention softmax over greedy scores.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel {
    pub params: LinearParams,
}

impl LinearModel {
    pub fn new(params: LinearParams) -> Self {
        LinearModel { params }
    }
}

impl Model for LinearModel {
    fn tensors(&self) -> Vec<(&'static str, &[f64])> {
        vec![("W_l", &self.params.w_local), ("W_g", &self.params.w_pair)]
    }

    fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        vec![&mut self.params.w_local, &mut self.params.w_pair]
    }

    fn zeroed(&self) -> Self {
        LinearModel {
            params: LinearParams {
                w_local: vec![0.0; self.params.w_local.len()],
                w_pair: vec![0.0; self.params.w_pair.len()],
            },
        }
    }

    fn objective(
        &self,
        doc: &DocFeatures,
        _dropout: Option<&mut Dropout>,
        mut grad: Option<&mut Self>,
    ) -> DocObjective {
        let local = score_tables(doc, &self.params);
        let (tables, choices) = greedy_tables(&local, |i, j, k, w| pair_value(doc, &self.params, i, j, k, w));
        let active = doc.active_mentions();
        let mut obj = DocObjective::default();
        for (i, (m, t)) in doc.mentions.iter().zip(&tables).enumerate() {
            let Some(gold) = m.gold else {
                if m.labeled {
                    obj.excluded += 1;
                }
                continue;
            };
            obj.counted += 1;
            obj.loss += log_sum_exp(&t.scores) - t.scores[gold];
            if t.prediction == Some(gold) {
                obj.correct += 1;
            }
            let Some(g) = grad.as_deref_mut() else {
                continue;
            };
            let mut ds = softmax(&t.scores);
            ds[gold] -= 1.0;
            for (j, dsj) in ds.iter().enumerate() {
                for (gw, x) in g.params.w_local.iter_mut().zip(doc.unary(i, j)) {
                    *gw += dsj * x;
                }
                let scale = dsj / active as f64;
                for &(k, w) in &choices[i][j] {
                    for (gw, x) in g.params.w_pair.iter_mut().zip(doc.pair(i, j, k, w)) {
                        *gw += scale * x;
                    }
                }
            }
        }
        obj
    }

    fn predict(&self, doc: &DocFeatures) -> Vec<Option<usize>> {
        let local = score_tables(doc, &self.params);
        greedy_from_scores(&local, |i, j, k, w| pair_value(doc, &self.params, i, j, k, w))
            .into_iter()
            .map(|m| m.prediction)
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn score_examples() {
        let phi = [-0.2877, -3.0, 1.0, 2.0];
        assert_eq!(local_score(&phi, &[1.0, 0.0, 0.0, 0.0]).unwrap(), -0.2877);
        assert_eq!(local_score(&phi, &[0.0; 4]).unwrap(), 0.0);
        assert_eq!(local_score(&[3.0], &[2.0]).unwrap(), 6.0);
        assert!(local_score(&[3.0], &[2.0, 1.0]).is_err());

        let psi = [0.5, -1.25, 2.0, 4.0];
        assert_eq!(pair_score(&psi, &[1.0; 4]).unwrap(), 0.5 - 1.25 + 2.0 + 4.0);
        assert_eq!(pair_score(&psi, &[0.0; 4]).unwrap(), 0.0);
    }

    #[test]
    fn two_by_two_hand_example() {
        // m1 candidates a1, a2; m2 candidates b1, b2.
        let local = vec![vec![0.0, 0.0], vec![0.0, 0.0]];
        let pair = |i: usize, j: usize, _k: usize, w: usize| match (i, j, w) {
            (0, 0, 0) => 1.0,
            (0, 0, 1) => 3.0,
            (0, 1, _) => 0.0,
            _ => 0.0,
        };
        let out = greedy_from_scores(&local, pair);
        assert_eq!(out[0].global, vec![1.5, 0.0]);
        assert_eq!(out[0].prediction, Some(0));
    }

    #[test]
    fn single_mention_uses_local_only() {
        let out = greedy_from_scores(&[vec![0.1, 0.7, 0.3]], |_, _, _, _| 100.0);
        assert_eq!(out[0].global, vec![0.0; 3]);
        assert_eq!(out[0].prediction, Some(1));
    }

    #[test]
    fn zero_params_pick_first_candidate() {
        let doc = DocFeatures::from_raw(
            "d",
            &[(0, 1), (3, 4)],
            &[vec![vec![0.3], vec![0.9]], vec![vec![-1.0], vec![2.0], vec![0.0]]],
            &[None, None],
            (1, 1),
            |i, j, k, w| vec![(i + 2 * j + 3 * k + 5 * w) as f64],
        )
        .unwrap();
        let out = greedy_link(&doc, &LinearParams::zeros(FeatureSet::Base)).unwrap();
        assert!(out.iter().all(|m| m.prediction == Some(0)));
        assert!(greedy_link(&doc, &LinearParams::zeros(FeatureSet::Feat)).is_err());
    }

    #[test]
    fn empty_candidate_list_predicts_none() {
        let out = greedy_from_scores(&[vec![], vec![1.0]], |_, _, _, _| 1.0);
        assert_eq!(out[0].prediction, None);
        assert_eq!(out[1].prediction, Some(0));
        assert_eq!(out[1].global, vec![0.0]);
    }
}
