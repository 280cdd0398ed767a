//! Entropy and relevance of partition questions.
//!
//! A question is represented by the partition it induces on a finite set of
//! mutually exclusive states. The relevance of a partition question with
//! respect to the central issue (the partition into singletons) is the
//! entropy of the coarsened distribution divided by the entropy of the full
//! distribution.

use num_bigint::BigUint;
use thiserror::Error;

/// Sum tolerance accepted when validating a probability vector.
pub const SUM_TOLERANCE: f64 = 1e-9;

/// Largest `n` accepted by [`partition_count`].
pub const DEFAULT_PARTITION_BOUND: usize = 200;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum InquiryError {
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),
    #[error("invalid partition: {0}")]
    InvalidPartition(String),
    #[error("relevance is undefined for a distribution with zero entropy")]
    UndefinedRelevance,
    #[error("partition count requested for n = {n}, above the bound {bound}")]
    OutOfRange { n: usize, bound: usize },
}

/// A validated probability vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Distribution {
    probs: Vec<f64>,
}

impl Distribution {
    pub fn new(probs: Vec<f64>) -> Result<Self, InquiryError> {
        if probs.is_empty() {
            return Err(InquiryError::InvalidDistribution("no entries".into()));
        }
        for (i, &p) in probs.iter().enumerate() {
            if !p.is_finite() || p < 0.0 {
                return Err(InquiryError::InvalidDistribution(format!(
                    "entry {i} is {p}"
                )));
            }
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > SUM_TOLERANCE {
            return Err(InquiryError::InvalidDistribution(format!(
                "entries sum to {total}"
            )));
        }
        Ok(Self { probs })
    }

    /// Uniform distribution over `n` outcomes.
    pub fn uniform(n: usize) -> Result<Self, InquiryError> {
        if n == 0 {
            return Err(InquiryError::InvalidDistribution("no entries".into()));
        }
        Ok(Self {
            probs: vec![1.0 / n as f64; n],
        })
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn entropy(&self) -> f64 {
        entropy_bits(&self.probs)
    }
}

/// Disjoint, non-empty blocks of indices covering `0..len`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    blocks: Vec<Vec<usize>>,
    len: usize,
}

impl Partition {
    pub fn new(blocks: Vec<Vec<usize>>) -> Result<Self, InquiryError> {
        let len: usize = blocks.iter().map(Vec::len).sum();
        let mut seen = vec![false; len];
        for (b, block) in blocks.iter().enumerate() {
            if block.is_empty() {
                return Err(InquiryError::InvalidPartition(format!(
                    "block {b} is empty"
                )));
            }
            for &i in block {
                if i >= len {
                    return Err(InquiryError::InvalidPartition(format!(
                        "index {i} outside 0..{len}"
                    )));
                }
                if seen[i] {
                    return Err(InquiryError::InvalidPartition(format!(
                        "index {i} appears in more than one block"
                    )));
                }
                seen[i] = true;
            }
        }
        Ok(Self { blocks, len })
    }

    /// The central issue: every state in its own block.
    pub fn singletons(len: usize) -> Self {
        Self {
            blocks: (0..len).map(|i| vec![i]).collect(),
            len,
        }
    }

    /// The trivial question whose only answer is "some state".
    pub fn single_block(len: usize) -> Self {
        Self {
            blocks: vec![(0..len).collect()],
            len,
        }
    }

    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    /// Number of indices covered.
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }
}

/// Shannon entropy in bits of a non-negative weight vector, with `0 log 0 = 0`.
///
/// Terms are summed in ascending order, so the result does not depend on the
/// order of the inputs.
pub fn entropy_bits(probs: &[f64]) -> f64 {
    const STACK: usize = 16;
    let term = |p: f64| -p * p.log2();
    if probs.len() <= STACK {
        let mut buf = [0.0f64; STACK];
        let mut n = 0;
        for &p in probs.iter().filter(|&&p| p > 0.0) {
            buf[n] = term(p);
            n += 1;
        }
        let terms = &mut buf[..n];
        terms.sort_unstable_by(f64::total_cmp);
        return terms.iter().sum::<f64>().max(0.0);
    }
    let mut terms: Vec<f64> = probs
        .iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| term(p))
        .collect();
    terms.sort_unstable_by(f64::total_cmp);
    terms.iter().sum::<f64>().max(0.0)
}

/// Entropy in bits of a validated distribution.
pub fn shannon_entropy(d: &Distribution) -> f64 {
    d.entropy()
}

/// Probability of each block of `p` under `d`.
pub fn coarsen(d: &Distribution, p: &Partition) -> Result<Distribution, InquiryError> {
    if d.len() != p.len() {
        return Err(InquiryError::InvalidPartition(format!(
            "partition covers {} indices, distribution has {}",
            p.len(),
            d.len()
        )));
    }
    let probs = p
        .blocks()
        .iter()
        .map(|block| block.iter().map(|&i| d.probs[i]).sum())
        .collect();
    Distribution::new(probs)
}

/// Degree to which answering `p` answers the central issue of `d`.
pub fn relevance(d: &Distribution, p: &Partition) -> Result<f64, InquiryError> {
    let base = d.entropy();
    if base <= 0.0 {
        return Err(InquiryError::UndefinedRelevance);
    }
    let coarse = coarsen(d, p)?.entropy();
    Ok((coarse / base).clamp(0.0, 1.0))
}

/// Number of integer partitions of `n`, with `n` capped at [`DEFAULT_PARTITION_BOUND`].
pub fn partition_count(n: usize) -> Result<BigUint, InquiryError> {
    partition_count_bounded(n, DEFAULT_PARTITION_BOUND)
}

/// Coefficient of `x^n` in `prod_k 1 / (1 - x^k)`.
///
/// Expands the product one factor at a time: multiplying by `1 / (1 - x^k)`
/// is the running-sum update `c[m] += c[m - k]`.
pub fn partition_count_bounded(n: usize, bound: usize) -> Result<BigUint, InquiryError> {
    if n > bound {
        return Err(InquiryError::OutOfRange { n, bound });
    }
    let mut coeffs = vec![BigUint::from(0u8); n + 1];
    coeffs[0] = BigUint::from(1u8);
    for k in 1..=n {
        for m in k..=n {
            let add = coeffs[m - k].clone();
            coeffs[m] += add;
        }
    }
    Ok(coeffs.swap_remove(n))
}
