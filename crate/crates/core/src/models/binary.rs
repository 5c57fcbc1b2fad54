use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A fixed-length vector of {0, 1} entries.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<u8>", into = "Vec<u8>")]
pub struct BinaryVector(Vec<u8>);

impl BinaryVector {
    pub fn new(bits: Vec<u8>) -> Result<Self> {
        if let Some(pos) = bits.iter().position(|&b| b > 1) {
            return Err(Error::InvalidParameter(format!(
                "binary vector entry {pos} is {}, expected 0 or 1",
                bits[pos]
            )));
        }
        Ok(Self(bits))
    }

    pub fn zeros(len: usize) -> Self {
        Self(vec![0; len])
    }

    pub fn ones(len: usize) -> Self {
        Self(vec![1; len])
    }

    /// The `len` low bits of `code`, least significant bit first.
    pub fn from_index(code: u64, len: usize) -> Self {
        Self((0..len).map(|i| ((code >> i) & 1) as u8).collect())
    }

    /// Inverse of [`BinaryVector::from_index`]; `None` beyond 64 bits.
    pub fn to_index(&self) -> Option<u64> {
        if self.0.len() > 64 {
            return None;
        }
        Some(
            self.0
                .iter()
                .enumerate()
                .fold(0u64, |acc, (i, &b)| acc | ((b as u64) << i)),
        )
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn bits(&self) -> &[u8] {
        &self.0
    }

    pub fn count_ones(&self) -> usize {
        self.0.iter().filter(|&&b| b == 1).count()
    }
}

impl TryFrom<Vec<u8>> for BinaryVector {
    type Error = Error;
    fn try_from(bits: Vec<u8>) -> Result<Self> {
        Self::new(bits)
    }
}

impl From<BinaryVector> for Vec<u8> {
    fn from(v: BinaryVector) -> Self {
        v.0
    }
}

/// A latent configuration h′ drawn by a model's sampler.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LatentState {
    /// RBM hidden-unit configuration.
    Binary(BinaryVector),
    /// Mixture component index.
    Component(usize),
}

impl LatentState {
    pub fn as_binary(&self) -> Option<&BinaryVector> {
        match self {
            LatentState::Binary(b) => Some(b),
            LatentState::Component(_) => None,
        }
    }

    pub fn as_component(&self) -> Option<usize> {
        match self {
            LatentState::Component(k) => Some(*k),
            LatentState::Binary(_) => None,
        }
    }
}
