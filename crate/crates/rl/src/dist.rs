//! Action distributions with the derivatives PPO needs.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

const LN_2PI: f64 = 1.837_877_066_409_345_3;

/// Softmax over the allowed entries of `logits`; masked entries get probability 0.
#[derive(Clone, Debug, PartialEq)]
pub struct Categorical {
    pub probs: Vec<f64>,
    pub log_probs: Vec<f64>,
}

impl Categorical {
    pub fn new(logits: &[f64], mask: Option<&[bool]>) -> Self {
        let allowed = |i: usize| mask.is_none_or(|m| m[i]);
        let max = (0..logits.len()).filter(|&i| allowed(i)).map(|i| logits[i]).fold(f64::NEG_INFINITY, f64::max);
        assert!(max.is_finite(), "no allowed action or non-finite logits");
        let sum: f64 = (0..logits.len()).filter(|&i| allowed(i)).map(|i| (logits[i] - max).exp()).sum();
        let lse = max + sum.ln();
        let log_probs: Vec<f64> =
            (0..logits.len()).map(|i| if allowed(i) { logits[i] - lse } else { f64::NEG_INFINITY }).collect();
        let probs = log_probs.iter().map(|l| l.exp()).collect();
        Categorical { probs, log_probs }
    }

    pub fn sample<R: Rng>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        let mut last = 0;
        for (i, p) in self.probs.iter().enumerate() {
            if *p > 0.0 {
                acc += p;
                last = i;
                if u < acc {
                    return i;
                }
            }
        }
        last
    }

    /// Most likely action, lowest index on ties.
    pub fn mode(&self) -> usize {
        let mut best = 0;
        for (i, p) in self.probs.iter().enumerate() {
            if *p > self.probs[best] {
                best = i;
            }
        }
        best
    }

    pub fn log_prob(&self, a: usize) -> f64 {
        self.log_probs[a]
    }

    pub fn entropy(&self) -> f64 {
        self.probs.iter().zip(&self.log_probs).filter(|(p, _)| **p > 0.0).map(|(p, l)| -p * l).sum()
    }

    /// `d log p(a) / d logits`.
    pub fn grad_log_prob(&self, a: usize) -> Vec<f64> {
        self.probs.iter().enumerate().map(|(i, p)| f64::from(u8::from(i == a)) - p).collect()
    }

    /// `d H / d logits = -p_i (log p_i + H)`, zero on masked entries.
    pub fn grad_entropy(&self) -> Vec<f64> {
        let h = self.entropy();
        self.probs.iter().zip(&self.log_probs).map(|(p, l)| if *p > 0.0 { -p * (l + h) } else { 0.0 }).collect()
    }
}

/// Diagonal Gaussian with state-independent log standard deviations.
#[derive(Clone, Debug, PartialEq)]
pub struct DiagGaussian<'a> {
    pub mean: &'a [f64],
    pub log_std: &'a [f64],
}

impl DiagGaussian<'_> {
    pub fn sample<R: Rng>(&self, rng: &mut R) -> Vec<f64> {
        self.mean
            .iter()
            .zip(self.log_std)
            .map(|(m, s)| {
                let z: f64 = StandardNormal.sample(rng);
                m + s.exp() * z
            })
            .collect()
    }

    pub fn log_prob(&self, x: &[f64]) -> f64 {
        self.mean
            .iter()
            .zip(self.log_std)
            .zip(x)
            .map(|((m, s), x)| {
                let z = (x - m) / s.exp();
                -0.5 * z * z - s - 0.5 * LN_2PI
            })
            .sum()
    }

    pub fn entropy(&self) -> f64 {
        self.log_std.iter().map(|s| s + 0.5 * (1.0 + LN_2PI)).sum()
    }

    /// `(d log p / d mean, d log p / d log_std)`.
    pub fn grad_log_prob(&self, x: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let mut dm = Vec::with_capacity(x.len());
        let mut ds = Vec::with_capacity(x.len());
        for ((m, s), x) in self.mean.iter().zip(self.log_std).zip(x) {
            let var = (2.0 * s).exp();
            dm.push((x - m) / var);
            ds.push((x - m) * (x - m) / var - 1.0);
        }
        (dm, ds)
    }
}
