//! Sparse concatenation and parallelization.
//!
//! Concatenation stacks layers without merging adjacent affine maps, so
//! weight and layer counts add exactly. Parallelization runs equal-depth
//! networks side by side on row-stacked inputs; intermediate layers are laid
//! out as row blocks, padded on the right to the widest child.

use crate::error::{MnnError, Result};
use crate::matrix::Matrix;
use crate::mnn::{
    identity_mnn, Activation, ActivationMask, Entry, Layer, MatrixShape, Mnn, SparseLinearMap,
    UnitKind,
};

fn merge_activation(a: Option<Activation>, b: Option<Activation>) -> Result<Option<Activation>> {
    match (a, b) {
        (Some(x), Some(y)) if x != y => Err(MnnError::Incompatible(format!(
            "activation {x} cannot be combined with activation {y}"
        ))),
        (x, y) => Ok(x.or(y)),
    }
}

/// `first ⊙ second`: applies `second`, then `first`.
pub fn concat(first: &Mnn, second: &Mnn) -> Result<Mnn> {
    if second.out_shape() != first.in_shape() {
        return Err(MnnError::Incompatible(format!(
            "cannot feed a {} output into a network expecting {}",
            second.out_shape(),
            first.in_shape()
        )));
    }
    let activation = merge_activation(first.activation(), second.activation())?;
    let mut layers = Vec::with_capacity(first.num_layers() + second.num_layers());
    layers.extend_from_slice(second.layers());
    layers.extend_from_slice(first.layers());
    Ok(Mnn::from_parts_unchecked(layers, activation))
}

/// Concatenates a chain written left to right in `⊙` order: `chain(&[a, b, c]) = a ⊙ b ⊙ c`.
pub fn chain(nets: &[&Mnn]) -> Result<Mnn> {
    let (last, rest) = nets
        .split_last()
        .ok_or_else(|| MnnError::param("cannot chain an empty list of networks"))?;
    rest.iter()
        .rev()
        .try_fold((*last).clone(), |acc, net| concat(net, &acc))
}

/// Appends identity layers after `net` until it has `depth` layers.
pub fn pad_depth(net: &Mnn, depth: usize) -> Result<Mnn> {
    match depth.checked_sub(net.num_layers()) {
        None => Err(MnnError::param(format!(
            "network already has {} layers, more than {depth}",
            net.num_layers()
        ))),
        Some(0) => Ok(net.clone()),
        Some(extra) => concat(&identity_mnn(net.out_shape(), extra)?, net),
    }
}

/// Networks that can run side by side.
#[derive(Clone, Debug)]
pub struct ParallelBlock {
    nets: Vec<Mnn>,
    activation: Option<Activation>,
}

impl ParallelBlock {
    pub fn new(nets: Vec<Mnn>) -> Result<Self> {
        let first = nets
            .first()
            .ok_or_else(|| MnnError::param("parallelization needs at least one network"))?;
        let depth = first.num_layers();
        let in_cols = first.in_shape().cols();
        let out_cols = first.out_shape().cols();
        let mut activation = None;
        for (idx, net) in nets.iter().enumerate() {
            if net.num_layers() != depth {
                return Err(MnnError::Incompatible(format!(
                    "network {} has {} layers but network 1 has {depth}; pad the shorter one \
                     with identity layers (identity_mnn / pad_depth) first",
                    idx + 1,
                    net.num_layers()
                )));
            }
            if net.in_shape().cols() != in_cols || net.out_shape().cols() != out_cols {
                return Err(MnnError::Incompatible(format!(
                    "network {} maps {} -> {} but network 1 maps {} -> {}; column counts must agree",
                    idx + 1,
                    net.in_shape(),
                    net.out_shape(),
                    first.in_shape(),
                    first.out_shape()
                )));
            }
            activation = merge_activation(activation, net.activation())?;
        }
        Ok(ParallelBlock { nets, activation })
    }

    pub fn nets(&self) -> &[Mnn] {
        &self.nets
    }

    pub fn depth(&self) -> usize {
        self.nets[0].num_layers()
    }
}

/// `P(Phi_1, ..., Phi_k)`: maps `(A_1; ...; A_k)` to `(R(Phi_1)(A_1); ...; R(Phi_k)(A_k))`.
pub fn parallelize(block: &ParallelBlock) -> Mnn {
    let nets = block.nets();
    let layers = (0..block.depth())
        .map(|depth| {
            let parts: Vec<&Layer> = nets.iter().map(|n| &n.layers()[depth]).collect();
            stack_layers(&parts)
        })
        .collect();
    Mnn::from_parts_unchecked(layers, block.activation)
}

fn stack_shape(shapes: impl Iterator<Item = MatrixShape>) -> (Vec<usize>, MatrixShape) {
    let mut offsets = Vec::new();
    let mut rows = 0;
    let mut cols = 0;
    for s in shapes {
        offsets.push(rows);
        rows += s.rows();
        cols = cols.max(s.cols());
    }
    (
        offsets,
        MatrixShape::new(rows, cols).expect("stacked shape is nonempty"),
    )
}

fn stack_layers(parts: &[&Layer]) -> Layer {
    let (out_offsets, out_shape) = stack_shape(parts.iter().map(|l| l.out_shape()));
    let (in_offsets, in_shape) = stack_shape(parts.iter().map(|l| l.in_shape()));

    let total: usize = parts.iter().map(|l| l.map().num_weights()).sum();
    let mut entries = Vec::with_capacity(total);
    let mut bias = Matrix::zeros(out_shape.rows(), out_shape.cols());
    let mut mask = ActivationMask::identity(out_shape);
    for ((layer, out_off), in_off) in parts.iter().zip(&out_offsets).zip(&in_offsets) {
        let (out_off, in_off) = (*out_off as u32, *in_off as u32);
        entries.extend(layer.map().entries().iter().map(|e| Entry {
            row: e.row + out_off,
            in_row: e.in_row + in_off,
            ..*e
        }));
        bias.set_block(out_off as usize, 0, layer.bias());
        for (i, j) in layer.mask().rho_positions() {
            mask.set(i + out_off as usize, j, UnitKind::Rho);
        }
    }
    // Child blocks occupy disjoint rows, so entries stay unique and nonzero.
    let map = SparseLinearMap::from_parts_unchecked(out_shape, in_shape, entries);
    Layer::new(map, bias, mask).expect("stacked layer shapes agree")
}
