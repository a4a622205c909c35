//! Bitstrings and measured outcome distributions.
//!
//! Bit 0 of a [`Bitstring`] is the leftmost character, i.e. the most
//! significant bit of its integer value. For Grover circuits that is the top
//! wire `b_1`.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Bitstring {
    value: usize,
    len: usize,
}

impl Bitstring {
    pub fn new(value: usize, len: usize) -> Result<Self> {
        if len > usize::BITS as usize - 1 || (len < usize::BITS as usize && value >> len != 0) {
            return Err(Error::InvalidBitstring(format!("{value} does not fit in {len} bits")));
        }
        Ok(Self { value, len })
    }

    pub fn value(&self) -> usize {
        self.value
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Bit `i`, counted from the left.
    pub fn bit(&self, i: usize) -> bool {
        assert!(i < self.len, "bit index {i} out of range for {} bits", self.len);
        (self.value >> (self.len - 1 - i)) & 1 == 1
    }

    pub fn bits(&self) -> impl Iterator<Item = bool> + '_ {
        (0..self.len).map(|i| self.bit(i))
    }

    pub fn hamming_weight(&self) -> u32 {
        self.value.count_ones()
    }

    /// All `2^len` bitstrings in increasing numeric order.
    pub fn all(len: usize) -> impl Iterator<Item = Bitstring> {
        (0..1usize << len).map(move |value| Bitstring { value, len })
    }
}

impl fmt::Display for Bitstring {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in self.bits() {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl FromStr for Bitstring {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.is_empty() || s.len() >= usize::BITS as usize {
            return Err(Error::InvalidBitstring(s.to_string()));
        }
        let mut value = 0usize;
        for c in s.chars() {
            value = (value << 1)
                | match c {
                    '0' => 0,
                    '1' => 1,
                    _ => return Err(Error::InvalidBitstring(s.to_string())),
                };
        }
        Ok(Self { value, len: s.len() })
    }
}

impl Serialize for Bitstring {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Bitstring {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// A probability vector over `2^n_bits` outcomes, optionally backed by raw
/// shot counts.
#[derive(Clone, Debug, PartialEq)]
pub struct Distribution {
    n_bits: usize,
    probs: Vec<f64>,
    counts: Option<Vec<u64>>,
}

impl Distribution {
    pub fn from_probs(n_bits: usize, probs: Vec<f64>) -> Result<Self> {
        if probs.len() != 1 << n_bits {
            return Err(Error::DimensionMismatch { expected: 1 << n_bits, actual: probs.len() });
        }
        if probs.iter().any(|p| !p.is_finite() || *p < -1e-12) {
            return Err(Error::InvalidArgument("probabilities must be finite and nonnegative".into()));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-6 {
            return Err(Error::InvalidArgument(format!("probabilities sum to {total}, not 1")));
        }
        let probs = probs.into_iter().map(|p| p.max(0.0) / total).collect();
        Ok(Self { n_bits, probs, counts: None })
    }

    pub fn from_counts(n_bits: usize, counts: Vec<u64>) -> Result<Self> {
        if counts.len() != 1 << n_bits {
            return Err(Error::DimensionMismatch { expected: 1 << n_bits, actual: counts.len() });
        }
        let total: u64 = counts.iter().sum();
        if total == 0 {
            return Err(Error::EmptyInput("counts"));
        }
        let probs = counts.iter().map(|&c| c as f64 / total as f64).collect();
        Ok(Self { n_bits, probs, counts: Some(counts) })
    }

    /// Builds a distribution from a `{bitstring: count}` map. All keys must
    /// have the same length.
    pub fn from_count_map<'a>(map: impl IntoIterator<Item = (&'a Bitstring, &'a u64)>) -> Result<Self> {
        let entries: Vec<_> = map.into_iter().collect();
        let n_bits = entries.first().ok_or(Error::EmptyInput("counts"))?.0.len();
        let mut counts = vec![0u64; 1 << n_bits];
        for (b, &c) in entries {
            if b.len() != n_bits {
                return Err(Error::InvalidBitstring(format!("{b} has {} bits, expected {n_bits}", b.len())));
            }
            counts[b.value()] += c;
        }
        Self::from_counts(n_bits, counts)
    }

    pub fn n_bits(&self) -> usize {
        self.n_bits
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn counts(&self) -> Option<&[u64]> {
        self.counts.as_deref()
    }

    pub fn shots(&self) -> Option<u64> {
        self.counts.as_ref().map(|c| c.iter().sum())
    }

    pub fn prob(&self, b: Bitstring) -> f64 {
        debug_assert_eq!(b.len(), self.n_bits);
        self.probs[b.value()]
    }

    /// Draws `shots` samples from the distribution.
    pub fn sample<R: Rng + ?Sized>(&self, shots: u64, rng: &mut R) -> Self {
        let mut cdf = Vec::with_capacity(self.probs.len());
        let mut acc = 0.0;
        for p in &self.probs {
            acc += p;
            cdf.push(acc);
        }
        let mut counts = vec![0u64; self.probs.len()];
        for _ in 0..shots {
            let u: f64 = rng.random::<f64>() * acc;
            let i = cdf.partition_point(|&c| c <= u).min(counts.len() - 1);
            counts[i] += 1;
        }
        Self::from_counts(self.n_bits, counts).expect("at least one shot")
    }

    /// Sums out every bit not listed in `keep`; the result orders bits as in
    /// `keep`.
    pub fn marginal(&self, keep: &[usize]) -> Self {
        let k = keep.len();
        let mut probs = vec![0.0; 1 << k];
        let mut counts = self.counts.as_ref().map(|_| vec![0u64; 1 << k]);
        for (idx, &p) in self.probs.iter().enumerate() {
            let mut out = 0;
            for &bit in keep {
                out = (out << 1) | ((idx >> (self.n_bits - 1 - bit)) & 1);
            }
            probs[out] += p;
            if let (Some(dst), Some(src)) = (counts.as_mut(), self.counts.as_ref()) {
                dst[out] += src[idx];
            }
        }
        Self { n_bits: k, probs, counts }
    }

    /// The `{bitstring: count}` form, omitting zero entries. Only available
    /// when the distribution carries shot counts.
    pub fn count_map(&self) -> Option<BTreeMap<Bitstring, u64>> {
        let counts = self.counts.as_ref()?;
        Some(
            counts
                .iter()
                .enumerate()
                .filter(|(_, &c)| c > 0)
                .map(|(i, &c)| (Bitstring { value: i, len: self.n_bits }, c))
                .collect(),
        )
    }

    pub fn prob_map(&self) -> BTreeMap<Bitstring, f64> {
        self.probs
            .iter()
            .enumerate()
            .map(|(i, &p)| (Bitstring { value: i, len: self.n_bits }, p))
            .collect()
    }

    pub fn argmax(&self) -> Bitstring {
        let (i, _) = self
            .probs
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |best, (i, &p)| if p > best.1 { (i, p) } else { best });
        Bitstring { value: i, len: self.n_bits }
    }
}
