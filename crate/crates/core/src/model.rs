//! Shared interface of the trainable disambiguators.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::features::DocFeatures;

/// Per-document result of a forward pass.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct DocObjective {
    /// Negative log-likelihood summed over counted mentions.
    pub loss: f64,
    /// Mentions whose gold entity is among the candidates.
    pub counted: usize,
    /// Counted mentions predicted correctly.
    pub correct: usize,
    /// Labeled mentions whose gold entity is missing from the candidates.
    pub excluded: usize,
}

impl DocObjective {
    pub fn accumulate(&mut self, other: &DocObjective) {
        self.loss += other.loss;
        self.counted += other.counted;
        self.correct += other.correct;
        self.excluded += other.excluded;
    }
}

/// Inverted dropout on hidden units, driven by a seeded generator.
#[derive(Debug, Clone)]
pub struct Dropout {
    rate: f64,
    rng: ChaCha8Rng,
}

impl Dropout {
    pub fn new(rate: f64, seed: u64) -> Self {
        Dropout {
            rate,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    /// Scale applied to kept units.
    pub fn keep_scale(&self) -> f64 {
        1.0 / (1.0 - self.rate)
    }

    /// Appends a keep-mask of `h` bits to `words` (64 units per word).
    pub fn sample_into(&mut self, h: usize, words: &mut Vec<u64>) {
        let n_words = h.div_ceil(64);
        for wi in 0..n_words {
            let mut bits = 0u64;
            for b in 0..64.min(h - wi * 64) {
                if self.rng.gen::<f64>() >= self.rate {
                    bits |= 1 << b;
                }
            }
            words.push(bits);
        }
    }
}

/// A disambiguator with flat trainable tensors. A gradient has the same type
/// as the model it differentiates.
pub trait Model: Clone + Send + Sync {
    /// Named trainable tensors, in a fixed order.
    fn tensors(&self) -> Vec<(&'static str, &[f64])>;

    /// Same order as [`Model::tensors`].
    fn tensors_mut(&mut self) -> Vec<&mut [f64]>;

    /// A copy with every trainable entry set to zero.
    fn zeroed(&self) -> Self;

    /// Loss and accuracy on one document; accumulates the gradient into
    /// `grad` when given. Dropout applies only when `dropout` is given.
    fn objective(
        &self,
        doc: &DocFeatures,
        dropout: Option<&mut Dropout>,
        grad: Option<&mut Self>,
    ) -> DocObjective;

    /// Index of the chosen candidate per mention; `None` for empty lists.
    fn predict(&self, doc: &DocFeatures) -> Vec<Option<usize>>;

    fn add_assign(&mut self, other: &Self) {
        let src: Vec<Vec<f64>> = other.tensors().into_iter().map(|(_, t)| t.to_vec()).collect();
        for (dst, src) in self.tensors_mut().into_iter().zip(src) {
            for (d, s) in dst.iter_mut().zip(src) {
                *d += s;
            }
        }
    }

    fn num_params(&self) -> usize {
        self.tensors().iter().map(|(_, t)| t.len()).sum()
    }
}

/// Numerically stable softmax.
pub fn softmax(scores: &[f64]) -> Vec<f64> {
    if scores.is_empty() {
        return Vec::new();
    }
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = scores.iter().map(|s| (s - max).exp()).collect();
    let z: f64 = exps.iter().sum();
    exps.into_iter().map(|x| x / z).collect()
}

/// `ln Σ exp(s)`.
pub fn log_sum_exp(scores: &[f64]) -> f64 {
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    max + scores.iter().map(|s| (s - max).exp()).sum::<f64>().ln()
}

/// First index of the maximum.
pub fn argmax(xs: &[f64]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, &x) in xs.iter().enumerate() {
        match best {
            Some(b) if xs[b] >= x => {}
            _ => best = Some(i),
        }
    }
    best
}

/// Stateless 64-bit mixer used to derive per-document seeds.
pub(crate) fn mix_seed(parts: &[u64]) -> u64 {
    let mut h = 0x9E37_79B9_7F4A_7C15u64;
    for &p in parts {
        let mut z = h ^ p.wrapping_add(0x9E37_79B9_7F4A_7C15);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        h = z ^ (z >> 31);
    }
    h
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn softmax_and_lse_agree() {
        let s = [1.0, -2.0, 0.5, 1000.0];
        let p = softmax(&s);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        let lse = log_sum_exp(&s);
        for (pi, si) in p.iter().zip(s) {
            if *pi > 0.0 {
                assert!((pi.ln() - (si - lse)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn argmax_prefers_first() {
        assert_eq!(argmax(&[1.0, 3.0, 3.0]), Some(1));
        assert_eq!(argmax(&[0.0, 0.0]), Some(0));
        assert_eq!(argmax(&[]), None);
    }

    #[test]
    fn dropout_rate_is_respected() {
        let mut d = Dropout::new(0.5, 11);
        let mut words = Vec::new();
        for _ in 0..100 {
            d.sample_into(128, &mut words);
        }
        let kept: u32 = words.iter().map(|w| w.count_ones()).sum();
        let frac = kept as f64 / 12800.0;
        assert!((frac - 0.5).abs() < 0.03, "{frac}");

        let mut partial = Vec::new();
        Dropout::new(0.0, 1).sample_into(70, &mut partial);
        assert_eq!(partial.len(), 2);
        assert_eq!(partial[0], u64::MAX);
        assert_eq!(partial[1], (1u64 << 6) - 1);
    }

    #[test]
    fn seed_mixing_separates_inputs() {
        assert_ne!(mix_seed(&[1, 2, 3]), mix_seed(&[1, 3, 2]));
        assert_eq!(mix_seed(&[7, 0]), mix_seed(&[7, 0]));
    }
}
