//! Named, shaped parameter blocks. A `ParamVector` is the unit the
//! optimizers and checkpoints operate on; models address their weights
//! by block index through a [`crate::TapeBinding`].

use crate::rng::DeterministicRng;
use crate::{AutodiffError, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ParamBlock {
    pub name: String,
    pub shape: Vec<usize>,
    pub values: Vec<f64>,
}

impl ParamBlock {
    pub fn new(name: impl Into<String>, shape: Vec<usize>, values: Vec<f64>) -> Self {
        let n: usize = shape.iter().product();
        assert_eq!(n, values.len(), "shape/value length mismatch");
        Self {
            name: name.into(),
            shape,
            values,
        }
    }

    pub fn zeros(name: impl Into<String>, shape: Vec<usize>) -> Self {
        let n: usize = shape.iter().product();
        Self::new(name, shape, vec![0.0; n])
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize, PartialEq)]
pub struct ParamVector {
    blocks: Vec<ParamBlock>,
}

impl ParamVector {
    pub fn new(blocks: Vec<ParamBlock>) -> Self {
        Self { blocks }
    }

    pub fn blocks(&self) -> &[ParamBlock] {
        &self.blocks
    }

    pub fn blocks_mut(&mut self) -> &mut [ParamBlock] {
        &mut self.blocks
    }

    pub fn push(&mut self, block: ParamBlock) {
        self.blocks.push(block);
    }

    pub fn block_index(&self, name: &str) -> Option<usize> {
        self.blocks.iter().position(|b| b.name == name)
    }

    pub fn block(&self, name: &str) -> Option<&ParamBlock> {
        self.blocks.iter().find(|b| b.name == name)
    }

    pub fn block_mut(&mut self, name: &str) -> Option<&mut ParamBlock> {
        self.blocks.iter_mut().find(|b| b.name == name)
    }

    pub fn total_len(&self) -> usize {
        self.blocks.iter().map(|b| b.values.len()).sum()
    }

    pub fn zeros_like(&self) -> Self {
        Self {
            blocks: self
                .blocks
                .iter()
                .map(|b| ParamBlock::zeros(b.name.clone(), b.shape.clone()))
                .collect(),
        }
    }

    /// Checks that `other` has identical block names and shapes.
    pub fn layout_matches(&self, other: &Self) -> bool {
        self.blocks.len() == other.blocks.len()
            && self
                .blocks
                .iter()
                .zip(&other.blocks)
                .all(|(a, b)| a.name == b.name && a.shape == b.shape)
    }

    pub fn require_layout(&self, other: &Self) -> Result<()> {
        if self.layout_matches(other) {
            Ok(())
        } else {
            Err(AutodiffError::ShapeMismatch(format!(
                "expected blocks {:?}, got {:?}",
                self.blocks
                    .iter()
                    .map(|b| (&b.name, &b.shape))
                    .collect::<Vec<_>>(),
                other
                    .blocks
                    .iter()
                    .map(|b| (&b.name, &b.shape))
                    .collect::<Vec<_>>()
            )))
        }
    }

    pub fn iter_values(&self) -> impl Iterator<Item = f64> + '_ {
        self.blocks.iter().flat_map(|b| b.values.iter().copied())
    }

    pub fn iter_values_mut(&mut self) -> impl Iterator<Item = &mut f64> {
        self.blocks.iter_mut().flat_map(|b| b.values.iter_mut())
    }

    pub fn to_flat(&self) -> Vec<f64> {
        self.iter_values().collect()
    }

    pub fn copy_from_flat(&mut self, flat: &[f64]) {
        assert_eq!(flat.len(), self.total_len());
        let mut i = 0;
        for b in &mut self.blocks {
            let n = b.values.len();
            b.values.copy_from_slice(&flat[i..i + n]);
            i += n;
        }
    }

    pub fn all_finite(&self) -> bool {
        self.iter_values().all(|v| v.is_finite())
    }

    /// Euclidean norm over all values.
    pub fn norm(&self) -> f64 {
        self.iter_values().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Scales every value in place.
    pub fn scale_in_place(&mut self, factor: f64) {
        for v in self.iter_values_mut() {
            *v *= factor;
        }
    }

    /// Order- and bit-sensitive fingerprint, for mutation assertions.
    pub fn fingerprint(&self) -> u64 {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        let mut mix = |x: u64| {
            h ^= x;
            h = h.wrapping_mul(0x1000_0000_01b3);
        };
        for b in &self.blocks {
            for byte in b.name.as_bytes() {
                mix(*byte as u64);
            }
            for &v in &b.values {
                mix(v.to_bits());
            }
        }
        h
    }
}

/// Xavier-normal initialization: weight blocks (2-D shapes) are drawn
/// from N(0, 2 / (fan_in + fan_out)), bias blocks (1-D shapes) are zero.
/// Deterministic for a fixed seed.
pub fn xavier_normal_init(shapes: &[(String, Vec<usize>)], seed: u64) -> ParamVector {
    assert!(!shapes.is_empty(), "xavier init needs at least one shape");
    let mut rng = DeterministicRng::from_seed(seed);
    let mut blocks = Vec::with_capacity(shapes.len());
    for (name, shape) in shapes {
        let n: usize = shape.iter().product();
        let values = if shape.len() >= 2 {
            // shape = [out, in]
            let fan_out = shape[0] as f64;
            let fan_in = shape[1] as f64;
            let std = (2.0 / (fan_in + fan_out)).sqrt();
            (0..n).map(|_| rng.normal() * std).collect()
        } else {
            vec![0.0; n]
        };
        blocks.push(ParamBlock::new(name.clone(), shape.clone(), values));
    }
    ParamVector::new(blocks)
}

/// Uniform fan-in initialization matching the common deep-learning
/// default for dense layers: W, b ~ U(-1/sqrt(fan_in), 1/sqrt(fan_in)).
/// The fan-in of a bias block is taken from the preceding weight block.
pub fn uniform_fan_in_init(shapes: &[(String, Vec<usize>)], seed: u64) -> ParamVector {
    assert!(!shapes.is_empty(), "init needs at least one shape");
    let mut rng = DeterministicRng::from_seed(seed);
    let mut blocks = Vec::with_capacity(shapes.len());
    let mut last_fan_in = 1.0_f64;
    for (name, shape) in shapes {
        let n: usize = shape.iter().product();
        if shape.len() >= 2 {
            last_fan_in = shape[1] as f64;
        }
        let bound = 1.0 / last_fan_in.sqrt();
        let values = (0..n).map(|_| rng.uniform(-bound, bound)).collect();
        blocks.push(ParamBlock::new(name.clone(), shape.clone(), values));
    }
    ParamVector::new(blocks)
}
