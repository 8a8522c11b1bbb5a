//! Wengert-list tape: forward values are cached per node, adjoints are
//! propagated in reverse topological order, and tangent nodes can be
//! appended for forward-mode input derivatives.

use crate::params::ParamVector;
use crate::{AutodiffError, Result};

/// Handle to a node on a [`Tape`]. Plain index, cheap to copy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct NodeId(pub(crate) u32);

impl NodeId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Debug, Clone, Copy)]
enum Op {
    /// Differentiable input (parameter or designated input variable).
    Leaf,
    /// Recorded constant; no gradient flows into it.
    Const,
    Add(u32, u32),
    Sub(u32, u32),
    Mul(u32, u32),
    Div(u32, u32),
    Neg(u32),
    Tanh(u32),
    Exp(u32),
    Ln(u32),
    Sin(u32),
    Cos(u32),
    Sqrt(u32),
    Square(u32),
    Min(u32, u32),
    Max(u32, u32),
    /// Fused sum of products: value = sum_i val(a_i) * val(b_i).
    /// Pairs live in `dot_edges[start..start+len]`.
    Dot { start: u32, len: u32 },
    /// Externally computed value with fixed local partials, used to splice
    /// results of implicit solvers into the graph.
    /// Edges live in `custom_edges[start..start+len]`.
    Custom { start: u32, len: u32 },
}

impl Op {
    fn name(&self) -> &'static str {
        match self {
            Op::Leaf => "leaf",
            Op::Const => "const",
            Op::Add(..) => "add",
            Op::Sub(..) => "sub",
            Op::Mul(..) => "mul",
            Op::Div(..) => "div",
            Op::Neg(..) => "neg",
            Op::Tanh(..) => "tanh",
            Op::Exp(..) => "exp",
            Op::Ln(..) => "ln",
            Op::Sin(..) => "sin",
            Op::Cos(..) => "cos",
            Op::Sqrt(..) => "sqrt",
            Op::Square(..) => "square",
            Op::Min(..) => "min",
            Op::Max(..) => "max",
            Op::Dot { .. } => "dot",
            Op::Custom { .. } => "custom",
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Node {
    op: Op,
    val: f64,
}

/// Adjoints produced by [`Tape::backward`].
#[derive(Debug)]
pub struct Gradients {
    adj: Vec<f64>,
}

impl Gradients {
    pub fn get(&self, id: NodeId) -> f64 {
        self.adj[id.index()]
    }
}

/// Recording tape. Nodes are appended in evaluation order, so every
/// node's parents precede it and a single reverse sweep suffices for
/// backpropagation.
#[derive(Default)]
pub struct Tape {
    nodes: Vec<Node>,
    dot_edges: Vec<(u32, u32)>,
    custom_edges: Vec<(u32, f64)>,
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    /// Drops all nodes but keeps allocations for reuse across steps.
    pub fn clear(&mut self) {
        self.nodes.clear();
        self.dot_edges.clear();
        self.custom_edges.clear();
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, id: NodeId) -> f64 {
        self.nodes[id.index()].val
    }

    fn push(&mut self, op: Op, val: f64) -> NodeId {
        let id = self.nodes.len() as u32;
        self.nodes.push(Node { op, val });
        NodeId(id)
    }

    pub fn leaf(&mut self, value: f64) -> NodeId {
        self.push(Op::Leaf, value)
    }

    pub fn constant(&mut self, value: f64) -> NodeId {
        self.push(Op::Const, value)
    }

    /// Overwrites a leaf value; combine with [`Tape::replay`] to
    /// re-evaluate the recorded graph at a perturbed input.
    pub fn set_leaf(&mut self, id: NodeId, value: f64) {
        debug_assert!(matches!(self.nodes[id.index()].op, Op::Leaf));
        self.nodes[id.index()].val = value;
    }

    pub fn add(&mut self, a: NodeId, b: NodeId) -> NodeId {
        let v = self.value(a) + self.value(b);
        self.push(Op::Add(a.0, b.0), v)
    }

    pub fn sub(&mut self, a: NodeId, b: NodeId) -> NodeId {
        let v = self.value(a) - self.value(b);
        self.push(Op::Sub(a.0, b.0), v)
    }

    pub fn mul(&mut self, a: NodeId, b: NodeId) -> NodeId {
        let v = self.value(a) * self.value(b);
        self.push(Op::Mul(a.0, b.0), v)
    }

    pub fn div(&mut self, a: NodeId, b: NodeId) -> NodeId {
        let v = self.value(a) / self.value(b);
        self.push(Op::Div(a.0, b.0), v)
    }

    pub fn neg(&mut self, a: NodeId) -> NodeId {
        let v = -self.value(a);
        self.push(Op::Neg(a.0), v)
    }

    pub fn tanh(&mut self, a: NodeId) -> NodeId {
        let v = self.value(a).tanh();
        self.push(Op::Tanh(a.0), v)
    }

    pub fn exp(&mut self, a: NodeId) -> NodeId {
        let v = self.value(a).exp();
        self.push(Op::Exp(a.0), v)
    }

    pub fn ln(&mut self, a: NodeId) -> NodeId {
        let v = self.value(a).ln();
        self.push(Op::Ln(a.0), v)
    }

    pub fn sin(&mut self, a: NodeId) -> NodeId {
        let v = self.value(a).sin();
        self.push(Op::Sin(a.0), v)
    }

    pub fn cos(&mut self, a: NodeId) -> NodeId {
        let v = self.value(a).cos();
        self.push(Op::Cos(a.0), v)
    }

    pub fn sqrt(&mut self, a: NodeId) -> NodeId {
        let v = self.value(a).sqrt();
        self.push(Op::Sqrt(a.0), v)
    }

    pub fn square(&mut self, a: NodeId) -> NodeId {
        let v = self.value(a);
        self.push(Op::Square(a.0), v * v)
    }

    /// Subgradient convention: ties route the adjoint to the first operand.
    pub fn min(&mut self, a: NodeId, b: NodeId) -> NodeId {
        let v = self.value(a).min(self.value(b));
        self.push(Op::Min(a.0, b.0), v)
    }

    pub fn max(&mut self, a: NodeId, b: NodeId) -> NodeId {
        let v = self.value(a).max(self.value(b));
        self.push(Op::Max(a.0, b.0), v)
    }

    /// Fused sum of products over the given pairs. One node regardless of
    /// length, which keeps dense layers and squared norms cheap.
    pub fn dot(&mut self, pairs: &[(NodeId, NodeId)]) -> NodeId {
        let start = self.dot_edges.len() as u32;
        let mut v = 0.0;
        for &(a, b) in pairs {
            v += self.value(a) * self.value(b);
            self.dot_edges.push((a.0, b.0));
        }
        self.push(
            Op::Dot {
                start,
                len: pairs.len() as u32,
            },
            v,
        )
    }

    /// Node with an externally computed value and fixed partials with
    /// respect to the listed parents. Lets implicit functions (e.g. the
    /// solution map of an optimizer) participate in backpropagation.
    pub fn custom(&mut self, value: f64, partials: &[(NodeId, f64)]) -> NodeId {
        let start = self.custom_edges.len() as u32;
        for &(p, g) in partials {
            self.custom_edges.push((p.0, g));
        }
        self.push(
            Op::Custom {
                start,
                len: partials.len() as u32,
            },
            value,
        )
    }

    /// Convenience: `a + c` with a recorded constant.
    pub fn add_const(&mut self, a: NodeId, c: f64) -> NodeId {
        let k = self.constant(c);
        self.add(a, k)
    }

    /// Convenience: `a * c` with a recorded constant.
    pub fn scale(&mut self, a: NodeId, c: f64) -> NodeId {
        let k = self.constant(c);
        self.mul(a, k)
    }

    /// Recomputes every cached value in tape order. Leaves, constants and
    /// custom nodes keep their stored values.
    pub fn replay(&mut self) {
        for i in 0..self.nodes.len() {
            let op = self.nodes[i].op;
            let v = match op {
                Op::Leaf | Op::Const | Op::Custom { .. } => self.nodes[i].val,
                Op::Add(a, b) => self.nodes[a as usize].val + self.nodes[b as usize].val,
                Op::Sub(a, b) => self.nodes[a as usize].val - self.nodes[b as usize].val,
                Op::Mul(a, b) => self.nodes[a as usize].val * self.nodes[b as usize].val,
                Op::Div(a, b) => self.nodes[a as usize].val / self.nodes[b as usize].val,
                Op::Neg(a) => -self.nodes[a as usize].val,
                Op::Tanh(a) => self.nodes[a as usize].val.tanh(),
                Op::Exp(a) => self.nodes[a as usize].val.exp(),
                Op::Ln(a) => self.nodes[a as usize].val.ln(),
                Op::Sin(a) => self.nodes[a as usize].val.sin(),
                Op::Cos(a) => self.nodes[a as usize].val.cos(),
                Op::Sqrt(a) => self.nodes[a as usize].val.sqrt(),
                Op::Square(a) => {
                    let x = self.nodes[a as usize].val;
                    x * x
                }
                Op::Min(a, b) => self.nodes[a as usize].val.min(self.nodes[b as usize].val),
                Op::Max(a, b) => self.nodes[a as usize].val.max(self.nodes[b as usize].val),
                Op::Dot { start, len } => {
                    let mut acc = 0.0;
                    for &(a, b) in &self.dot_edges[start as usize..(start + len) as usize] {
                        acc += self.nodes[a as usize].val * self.nodes[b as usize].val;
                    }
                    acc
                }
            };
            self.nodes[i].val = v;
        }
    }

    /// Reverse sweep from a scalar output node. Returns the adjoint of
    /// every node up to and including `output`; leaves the cached forward
    /// values untouched.
    pub fn backward(&self, output: NodeId) -> Result<Gradients> {
        let n = output.index() + 1;
        for (i, node) in self.nodes[..n].iter().enumerate() {
            if !node.val.is_finite() {
                return Err(AutodiffError::NonFiniteForward {
                    node: i,
                    op: node.op.name(),
                });
            }
        }
        let mut adj = vec![0.0; self.nodes.len()];
        adj[output.index()] = 1.0;
        for i in (0..n).rev() {
            let g = adj[i];
            if g == 0.0 {
                continue;
            }
            match self.nodes[i].op {
                Op::Leaf | Op::Const => {}
                Op::Add(a, b) => {
                    adj[a as usize] += g;
                    adj[b as usize] += g;
                }
                Op::Sub(a, b) => {
                    adj[a as usize] += g;
                    adj[b as usize] -= g;
                }
                Op::Mul(a, b) => {
                    adj[a as usize] += g * self.nodes[b as usize].val;
                    adj[b as usize] += g * self.nodes[a as usize].val;
                }
                Op::Div(a, b) => {
                    let vb = self.nodes[b as usize].val;
                    adj[a as usize] += g / vb;
                    adj[b as usize] -= g * self.nodes[i].val / vb;
                }
                Op::Neg(a) => adj[a as usize] -= g,
                Op::Tanh(a) => {
                    let y = self.nodes[i].val;
                    adj[a as usize] += g * (1.0 - y * y);
                }
                Op::Exp(a) => adj[a as usize] += g * self.nodes[i].val,
                Op::Ln(a) => adj[a as usize] += g / self.nodes[a as usize].val,
                Op::Sin(a) => adj[a as usize] += g * self.nodes[a as usize].val.cos(),
                Op::Cos(a) => adj[a as usize] -= g * self.nodes[a as usize].val.sin(),
                Op::Sqrt(a) => adj[a as usize] += g * 0.5 / self.nodes[i].val,
                Op::Square(a) => adj[a as usize] += g * 2.0 * self.nodes[a as usize].val,
                Op::Min(a, b) => {
                    if self.nodes[a as usize].val <= self.nodes[b as usize].val {
                        adj[a as usize] += g;
                    } else {
                        adj[b as usize] += g;
                    }
                }
                Op::Max(a, b) => {
                    if self.nodes[a as usize].val >= self.nodes[b as usize].val {
                        adj[a as usize] += g;
                    } else {
                        adj[b as usize] += g;
                    }
                }
                Op::Dot { start, len } => {
                    for &(a, b) in &self.dot_edges[start as usize..(start + len) as usize] {
                        adj[a as usize] += g * self.nodes[b as usize].val;
                        adj[b as usize] += g * self.nodes[a as usize].val;
                    }
                }
                Op::Custom { start, len } => {
                    for &(p, d) in &self.custom_edges[start as usize..(start + len) as usize] {
                        adj[p as usize] += g * d;
                    }
                }
            }
        }
        Ok(Gradients { adj })
    }

    /// Forward-tangent propagation: appends nodes expressing
    /// `d(output)/d(input)` for each listed output and returns their ids.
    ///
    /// `input` must be a leaf. The returned nodes are ordinary tape nodes,
    /// so expressions built from them (e.g. a residual loss) can still be
    /// differentiated with [`Tape::backward`]. Outputs that do not depend
    /// on `input` yield a zero-valued constant node.
    pub fn input_derivative(&mut self, outputs: &[NodeId], input: NodeId) -> Result<Vec<NodeId>> {
        if !matches!(self.nodes[input.index()].op, Op::Leaf) {
            return Err(AutodiffError::NotALeaf(input.index()));
        }
        let start = input.index();
        let end = outputs.iter().map(|o| o.index()).max().unwrap_or(start);
        // Tangent ids for nodes in [start, end]; nodes before `start`
        // cannot depend on `input` because the tape is topologically
        // ordered. None = identically zero tangent.
        let mut tangent: Vec<Option<NodeId>> = vec![None; end - start + 1];
        let one = self.constant(1.0);
        tangent[0] = Some(one);

        for i in (start + 1)..=end {
            let op = self.nodes[i].op;
            let t = match op {
                Op::Leaf | Op::Const => None,
                Op::Add(a, b) => {
                    let (ta, tb) = (self.tan(&tangent, start, a), self.tan(&tangent, start, b));
                    match (ta, tb) {
                        (Some(x), Some(y)) => Some(self.add(x, y)),
                        (Some(x), None) | (None, Some(x)) => Some(x),
                        (None, None) => None,
                    }
                }
                Op::Sub(a, b) => {
                    let (ta, tb) = (self.tan(&tangent, start, a), self.tan(&tangent, start, b));
                    match (ta, tb) {
                        (Some(x), Some(y)) => Some(self.sub(x, y)),
                        (Some(x), None) => Some(x),
                        (None, Some(y)) => Some(self.neg(y)),
                        (None, None) => None,
                    }
                }
                Op::Mul(a, b) => {
                    let (ta, tb) = (self.tan(&tangent, start, a), self.tan(&tangent, start, b));
                    let (na, nb) = (NodeId(a), NodeId(b));
                    match (ta, tb) {
                        (Some(x), Some(y)) => {
                            let xa = self.mul(x, nb);
                            let yb = self.mul(na, y);
                            Some(self.add(xa, yb))
                        }
                        (Some(x), None) => Some(self.mul(x, nb)),
                        (None, Some(y)) => Some(self.mul(na, y)),
                        (None, None) => None,
                    }
                }
                Op::Div(a, b) => {
                    // d(a/b) = da/b - (a/b) * db/b
                    let (ta, tb) = (self.tan(&tangent, start, a), self.tan(&tangent, start, b));
                    let (nb, ni) = (NodeId(b), NodeId(i as u32));
                    match (ta, tb) {
                        (Some(x), Some(y)) => {
                            let da = self.div(x, nb);
                            let q = self.mul(ni, y);
                            let db = self.div(q, nb);
                            Some(self.sub(da, db))
                        }
                        (Some(x), None) => Some(self.div(x, nb)),
                        (None, Some(y)) => {
                            let q = self.mul(ni, y);
                            let db = self.div(q, nb);
                            Some(self.neg(db))
                        }
                        (None, None) => None,
                    }
                }
                Op::Neg(a) => self.tan(&tangent, start, a).map(|x| self.neg(x)),
                Op::Tanh(a) => self.tan(&tangent, start, a).map(|x| {
                    let y = NodeId(i as u32);
                    let y2 = self.square(y);
                    let one = self.constant(1.0);
                    let d = self.sub(one, y2);
                    self.mul(d, x)
                }),
                Op::Exp(a) => self
                    .tan(&tangent, start, a)
                    .map(|x| self.mul(NodeId(i as u32), x)),
                Op::Ln(a) => self.tan(&tangent, start, a).map(|x| self.div(x, NodeId(a))),
                Op::Sin(a) => self.tan(&tangent, start, a).map(|x| {
                    let c = self.cos(NodeId(a));
                    self.mul(c, x)
                }),
                Op::Cos(a) => self.tan(&tangent, start, a).map(|x| {
                    let s = self.sin(NodeId(a));
                    let m = self.mul(s, x);
                    self.neg(m)
                }),
                Op::Sqrt(a) => self.tan(&tangent, start, a).map(|x| {
                    let half = self.constant(0.5);
                    let h = self.mul(half, x);
                    self.div(h, NodeId(i as u32))
                }),
                Op::Square(a) => self.tan(&tangent, start, a).map(|x| {
                    let two = self.constant(2.0);
                    let m = self.mul(two, NodeId(a));
                    self.mul(m, x)
                }),
                Op::Min(a, b) => {
                    if self.nodes[a as usize].val <= self.nodes[b as usize].val {
                        self.tan(&tangent, start, a)
                    } else {
                        self.tan(&tangent, start, b)
                    }
                }
                Op::Max(a, b) => {
                    if self.nodes[a as usize].val >= self.nodes[b as usize].val {
                        self.tan(&tangent, start, a)
                    } else {
                        self.tan(&tangent, start, b)
                    }
                }
                Op::Dot { start: es, len } => {
                    // d(sum a_i b_i) = sum (da_i b_i + a_i db_i), assembled
                    // as a new fused dot over the tangent pairs.
                    let mut pairs: Vec<(NodeId, NodeId)> = Vec::new();
                    for k in es as usize..(es + len) as usize {
                        let (a, b) = self.dot_edges[k];
                        if let Some(ta) = self.tan(&tangent, start, a) {
                            pairs.push((ta, NodeId(b)));
                        }
                        if let Some(tb) = self.tan(&tangent, start, b) {
                            pairs.push((NodeId(a), tb));
                        }
                    }
                    if pairs.is_empty() {
                        None
                    } else {
                        Some(self.dot(&pairs))
                    }
                }
                Op::Custom { .. } => {
                    return Err(AutodiffError::UnsupportedTangent { op: "custom" });
                }
            };
            tangent[i - start] = t;
        }

        let zero = self.constant(0.0);
        Ok(outputs
            .iter()
            .map(|o| {
                if o.index() < start {
                    zero
                } else {
                    tangent[o.index() - start].unwrap_or(zero)
                }
            })
            .collect())
    }

    #[inline]
    fn tan(&self, tangent: &[Option<NodeId>], start: usize, parent: u32) -> Option<NodeId> {
        let p = parent as usize;
        if p < start {
            None
        } else {
            tangent[p - start]
        }
    }
}

/// Leaf ids for a [`ParamVector`] bound onto a tape, block by block in
/// declaration order.
pub struct TapeBinding {
    block_starts: Vec<(usize, usize)>, // (first leaf index, len)
}

impl TapeBinding {
    /// Pushes one leaf per parameter value and remembers the layout.
    pub fn bind(tape: &mut Tape, params: &ParamVector) -> Self {
        let mut block_starts = Vec::with_capacity(params.blocks().len());
        for block in params.blocks() {
            let start = tape.len();
            for &v in &block.values {
                tape.leaf(v);
            }
            block_starts.push((start, block.values.len()));
        }
        Self { block_starts }
    }

    pub fn node(&self, block: usize, idx: usize) -> NodeId {
        let (start, len) = self.block_starts[block];
        debug_assert!(idx < len);
        NodeId((start + idx) as u32)
    }

    pub fn block_len(&self, block: usize) -> usize {
        self.block_starts[block].1
    }

    /// Extracts the adjoints of every bound leaf into a vector shaped
    /// like `template`.
    pub fn gradient(&self, grads: &Gradients, template: &ParamVector) -> ParamVector {
        let mut out = template.zeros_like();
        for (bi, block) in out.blocks_mut().iter_mut().enumerate() {
            let (start, len) = self.block_starts[bi];
            for i in 0..len {
                block.values[i] = grads.adj[start + i];
            }
        }
        out
    }
}
