use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// A probability distribution over a player's action indices.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MixedStrategy<S> {
    probs: Vec<S>,
}

impl<S: Scalar> MixedStrategy<S> {
    /// Validates non-negativity and unit mass (within 1e-9, or exactly for rationals).
    pub fn new(probs: Vec<S>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::InvalidDistribution("empty action set".into()));
        }
        let mut total = S::zero();
        for p in &probs {
            if !p.is_finite_value() || *p < S::zero() {
                return Err(Error::InvalidDistribution(format!("bad entry {p:?}")));
            }
            total = total + p.clone();
        }
        let slack = if S::tolerance() == S::zero() {
            S::zero()
        } else {
            S::lit(1e-9)
        };
        if (total.clone() - S::one()).abs() > slack {
            return Err(Error::InvalidDistribution(format!(
                "entries sum to {total:?}"
            )));
        }
        Ok(Self { probs })
    }

    /// Normalizes non-negative weights; all-zero weights give the uniform strategy.
    pub fn from_weights(weights: &[S]) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidDistribution("empty action set".into()));
        }
        let total = weights
            .iter()
            .fold(S::zero(), |acc, w| acc + w.positive_part());
        if total > S::zero() {
            Ok(Self {
                probs: weights
                    .iter()
                    .map(|w| w.positive_part() / total.clone())
                    .collect(),
            })
        } else {
            Ok(Self::uniform(weights.len()))
        }
    }

    pub fn uniform(n: usize) -> Self {
        assert!(n > 0, "uniform strategy over zero actions");
        let p = S::one() / S::from_usize(n).expect("count fits scalar");
        Self { probs: vec![p; n] }
    }

    pub fn pure(n: usize, action: usize) -> Self {
        assert!(action < n);
        let mut probs = vec![S::zero(); n];
        probs[action] = S::one();
        Self { probs }
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn probs(&self) -> &[S] {
        &self.probs
    }

    pub fn prob(&self, action: usize) -> &S {
        &self.probs[action]
    }

    pub fn into_probs(self) -> Vec<S> {
        self.probs
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        sample_index(&self.probs, rng)
    }

    /// Indices sorted by descending probability, ties by index.
    pub fn ranked(&self) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..self.probs.len()).collect();
        idx.sort_by(|&a, &b| {
            self.probs[b]
                .partial_cmp(&self.probs[a])
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(a.cmp(&b))
        });
        idx
    }

    pub fn linf_distance(&self, other: &[f64]) -> f64 {
        self.probs
            .iter()
            .zip(other)
            .map(|(p, q)| (p.to_f64_lossy() - q).abs())
            .fold(0.0, f64::max)
    }

    pub fn to_f64(&self) -> MixedStrategy<f64> {
        MixedStrategy {
            probs: self.probs.iter().map(Scalar::to_f64_lossy).collect(),
        }
    }
}

/// Inverse-CDF sampling; the last positive entry absorbs rounding.
pub fn sample_index<S: Scalar, R: Rng + ?Sized>(probs: &[S], rng: &mut R) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    let mut last_positive = 0;
    for (i, p) in probs.iter().enumerate() {
        let p = p.to_f64_lossy();
        if p > 0.0 {
            last_positive = i;
            acc += p;
            if u < acc {
                return i;
            }
        }
    }
    last_positive
}
