//! Dense feedforward layers over [`ParamVector`] blocks, with twin
//! forward paths: plain f64 for rollouts and a tape path for training.
//! Both accumulate in identical order so their results match bit for bit.

use crate::params::ParamVector;
use crate::tape::{NodeId, Tape, TapeBinding};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Activation {
    Tanh,
    Linear,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct LayerSpec {
    pub inputs: usize,
    pub outputs: usize,
    pub activation: Activation,
}

/// Layer-size description of an MLP. Parameters live in consecutive
/// blocks `<prefix>.w{i}` (shape [out, in]) and `<prefix>.b{i}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MlpArch {
    pub layers: Vec<LayerSpec>,
}

impl MlpArch {
    /// `sizes = [in, h1, ..., out]`; hidden layers use `hidden`, the last
    /// layer uses `output`.
    pub fn new(sizes: &[usize], hidden: Activation, output: Activation) -> Self {
        assert!(sizes.len() >= 2);
        let layers = sizes
            .windows(2)
            .enumerate()
            .map(|(i, w)| LayerSpec {
                inputs: w[0],
                outputs: w[1],
                activation: if i + 2 == sizes.len() { output } else { hidden },
            })
            .collect();
        Self { layers }
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].inputs
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().unwrap().outputs
    }

    pub fn num_blocks(&self) -> usize {
        self.layers.len() * 2
    }

    pub fn param_shapes(&self, prefix: &str) -> Vec<(String, Vec<usize>)> {
        let mut shapes = Vec::with_capacity(self.num_blocks());
        for (i, layer) in self.layers.iter().enumerate() {
            shapes.push((format!("{prefix}.w{i}"), vec![layer.outputs, layer.inputs]));
            shapes.push((format!("{prefix}.b{i}"), vec![layer.outputs]));
        }
        shapes
    }
}

/// Plain forward pass. `first_block` is the index of the MLP's first
/// weight block inside `params`.
pub fn mlp_forward(
    params: &ParamVector,
    first_block: usize,
    arch: &MlpArch,
    input: &[f64],
) -> Vec<f64> {
    debug_assert_eq!(input.len(), arch.input_dim());
    let mut activ: Vec<f64> = input.to_vec();
    for (li, layer) in arch.layers.iter().enumerate() {
        let w = &params.blocks()[first_block + 2 * li].values;
        let b = &params.blocks()[first_block + 2 * li + 1].values;
        let mut next = Vec::with_capacity(layer.outputs);
        for o in 0..layer.outputs {
            let row = &w[o * layer.inputs..(o + 1) * layer.inputs];
            let mut acc = 0.0;
            for (wij, xj) in row.iter().zip(&activ) {
                acc += wij * xj;
            }
            acc += b[o];
            next.push(match layer.activation {
                Activation::Tanh => acc.tanh(),
                Activation::Linear => acc,
            });
        }
        activ = next;
    }
    activ
}

/// Tape forward pass mirroring [`mlp_forward`]: each neuron is one fused
/// dot node over (weight leaf, input node) pairs plus the bias.
pub fn mlp_forward_tape(
    tape: &mut Tape,
    binding: &TapeBinding,
    first_block: usize,
    arch: &MlpArch,
    input: &[NodeId],
) -> Vec<NodeId> {
    debug_assert_eq!(input.len(), arch.input_dim());
    let one = tape.constant(1.0);
    let mut activ: Vec<NodeId> = input.to_vec();
    let mut pairs: Vec<(NodeId, NodeId)> = Vec::new();
    for (li, layer) in arch.layers.iter().enumerate() {
        let wb = first_block + 2 * li;
        let bb = wb + 1;
        let mut next = Vec::with_capacity(layer.outputs);
        for o in 0..layer.outputs {
            pairs.clear();
            for (j, &xj) in activ.iter().enumerate() {
                pairs.push((binding.node(wb, o * layer.inputs + j), xj));
            }
            pairs.push((binding.node(bb, o), one));
            let pre = tape.dot(&pairs);
            next.push(match layer.activation {
                Activation::Tanh => tape.tanh(pre),
                Activation::Linear => pre,
            });
        }
        activ = next;
    }
    activ
}
