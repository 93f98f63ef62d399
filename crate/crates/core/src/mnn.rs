//! Matrix neural networks as data.
//!
//! A network is a sequence of layers. Each layer applies a sparse four-index
//! linear map to a matrix, adds a bias matrix and then applies, entry by
//! entry, either the identity or the network's activation function. The last
//! layer is always purely affine.
//!
//! Indices are zero-based in memory. The JSON network format in [`crate::io`]
//! uses one-based indices.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use crate::error::{MnnError, Result};
use crate::matrix::Matrix;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct MatrixShape {
    rows: usize,
    cols: usize,
}

impl MatrixShape {
    pub fn new(rows: usize, cols: usize) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(MnnError::param(format!(
                "matrix shape {rows}x{cols} has a zero extent"
            )));
        }
        Ok(MatrixShape { rows, cols })
    }

    pub fn square(n: usize) -> Result<Self> {
        Self::new(n, n)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn len(&self) -> usize {
        self.rows * self.cols
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, i: usize, j: usize) -> bool {
        i < self.rows && j < self.cols
    }
}

impl fmt::Display for MatrixShape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}", self.rows, self.cols)
    }
}

/// Smallest `k` with `2^k >= n`.
pub fn ceil_log2(n: usize) -> u32 {
    assert!(n >= 1, "ceil_log2 of zero");
    n.next_power_of_two().trailing_zeros()
}

/// The scalar nonlinearity a network is built for.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Activation {
    /// `t -> max(t, 0)`
    Relu,
    /// `t -> max(t, 0)^2`
    Relu2,
}

impl Activation {
    pub fn name(self) -> &'static str {
        match self {
            Activation::Relu => "relu",
            Activation::Relu2 => "relu2",
        }
    }

    #[inline]
    pub fn apply(self, t: f64) -> f64 {
        match self {
            Activation::Relu => t.max(0.0),
            Activation::Relu2 => {
                let r = t.max(0.0);
                r * r
            }
        }
    }
}

impl fmt::Display for Activation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Activation {
    type Err = MnnError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "relu" => Ok(Activation::Relu),
            "relu2" => Ok(Activation::Relu2),
            other => Err(MnnError::param(format!(
                "unknown activation '{other}' (expected relu or relu2)"
            ))),
        }
    }
}

/// What a single output entry of a layer passes through.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum UnitKind {
    Identity,
    Rho,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ActivationMask {
    shape: MatrixShape,
    rho: Vec<bool>,
}

impl ActivationMask {
    pub fn identity(shape: MatrixShape) -> Self {
        ActivationMask {
            shape,
            rho: vec![false; shape.len()],
        }
    }

    pub fn shape(&self) -> MatrixShape {
        self.shape
    }

    pub fn kind_at(&self, i: usize, j: usize) -> UnitKind {
        if self.rho[i * self.shape.cols + j] {
            UnitKind::Rho
        } else {
            UnitKind::Identity
        }
    }

    pub fn set(&mut self, i: usize, j: usize, kind: UnitKind) {
        assert!(self.shape.contains(i, j), "mask index out of range");
        self.rho[i * self.shape.cols + j] = kind == UnitKind::Rho;
    }

    pub fn is_identity(&self) -> bool {
        !self.rho.iter().any(|r| *r)
    }

    pub fn rho_positions(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let cols = self.shape.cols;
        self.rho
            .iter()
            .enumerate()
            .filter(|(_, r)| **r)
            .map(move |(idx, _)| (idx / cols, idx % cols))
    }

    fn flags(&self) -> &[bool] {
        &self.rho
    }
}

/// One nonzero coefficient `L[i, j, k, l]`: output entry `(i, j)` reads input entry `(k, l)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Entry {
    pub row: u32,
    pub col: u32,
    pub in_row: u32,
    pub in_col: u32,
    pub value: f64,
}

impl Entry {
    pub fn new(out: (usize, usize), input: (usize, usize), value: f64) -> Self {
        Entry {
            row: out.0 as u32,
            col: out.1 as u32,
            in_row: input.0 as u32,
            in_col: input.1 as u32,
            value,
        }
    }

    fn key(&self) -> (u32, u32, u32, u32) {
        (self.row, self.col, self.in_row, self.in_col)
    }
}

/// A linear map `R^{in} -> R^{out}` between matrix spaces, stored by its nonzero coefficients.
///
/// The number of weights is the number of stored entries, so zero
/// coefficients are never stored and each index quadruple appears once.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseLinearMap {
    out_shape: MatrixShape,
    in_shape: MatrixShape,
    entries: Vec<Entry>,
}

impl SparseLinearMap {
    pub fn new(out_shape: MatrixShape, in_shape: MatrixShape, entries: Vec<Entry>) -> Result<Self> {
        let mut seen = HashSet::with_capacity(entries.len());
        for e in &entries {
            if !out_shape.contains(e.row as usize, e.col as usize)
                || !in_shape.contains(e.in_row as usize, e.in_col as usize)
            {
                return Err(MnnError::InvalidMap(format!(
                    "entry {:?} outside {out_shape} <- {in_shape}",
                    e.key()
                )));
            }
            if e.value == 0.0 || !e.value.is_finite() {
                return Err(MnnError::InvalidMap(format!(
                    "entry {:?} has value {} (must be finite and nonzero)",
                    e.key(),
                    e.value
                )));
            }
            if !seen.insert(e.key()) {
                return Err(MnnError::InvalidMap(format!(
                    "duplicate entry {:?}",
                    e.key()
                )));
            }
        }
        Ok(SparseLinearMap {
            out_shape,
            in_shape,
            entries,
        })
    }

    /// Skips validation. Callers guarantee the invariants of [`SparseLinearMap::new`].
    pub(crate) fn from_parts_unchecked(
        out_shape: MatrixShape,
        in_shape: MatrixShape,
        entries: Vec<Entry>,
    ) -> Self {
        SparseLinearMap {
            out_shape,
            in_shape,
            entries,
        }
    }

    /// The identity map on `shape`.
    pub fn identity(shape: MatrixShape) -> Self {
        let entries = (0..shape.rows)
            .flat_map(|i| (0..shape.cols).map(move |j| Entry::new((i, j), (i, j), 1.0)))
            .collect();
        SparseLinearMap::from_parts_unchecked(shape, shape, entries)
    }

    pub fn out_shape(&self) -> MatrixShape {
        self.out_shape
    }

    pub fn in_shape(&self) -> MatrixShape {
        self.in_shape
    }

    pub fn entries(&self) -> &[Entry] {
        &self.entries
    }

    pub fn num_weights(&self) -> usize {
        self.entries.len()
    }

    /// `(L A)_{ij} = sum_{k,l} L_{ijkl} A_{kl}`, accumulated in entry order.
    pub fn apply(&self, input: &Matrix) -> Matrix {
        debug_assert_eq!(input.rows(), self.in_shape.rows);
        debug_assert_eq!(input.cols(), self.in_shape.cols);
        let mut out = Matrix::zeros(self.out_shape.rows, self.out_shape.cols);
        for e in &self.entries {
            out[(e.row as usize, e.col as usize)] +=
                e.value * input[(e.in_row as usize, e.in_col as usize)];
        }
        out
    }

    fn scaled(&self, c: f64) -> Result<Self> {
        let entries: Vec<Entry> = self
            .entries
            .iter()
            .map(|e| Entry {
                value: c * e.value,
                ..*e
            })
            .collect();
        if entries
            .iter()
            .any(|e| e.value == 0.0 || !e.value.is_finite())
        {
            return Err(MnnError::DegenerateScale(c));
        }
        Ok(SparseLinearMap { entries, ..*self })
    }
}

/// Collects entries for a map, dropping zero coefficients.
#[derive(Debug)]
pub struct MapBuilder {
    out_shape: MatrixShape,
    in_shape: MatrixShape,
    entries: Vec<Entry>,
}

impl MapBuilder {
    pub fn new(out_shape: MatrixShape, in_shape: MatrixShape) -> Self {
        MapBuilder {
            out_shape,
            in_shape,
            entries: Vec::new(),
        }
    }

    pub fn push(&mut self, out: (usize, usize), input: (usize, usize), value: f64) -> &mut Self {
        if value != 0.0 {
            self.entries.push(Entry::new(out, input, value));
        }
        self
    }

    pub fn build(self) -> Result<SparseLinearMap> {
        SparseLinearMap::new(self.out_shape, self.in_shape, self.entries)
    }
}

/// One layer `(L, C, alpha)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Layer {
    map: SparseLinearMap,
    bias: Matrix,
    mask: ActivationMask,
}

impl Layer {
    pub fn new(map: SparseLinearMap, bias: Matrix, mask: ActivationMask) -> Result<Self> {
        let out = map.out_shape();
        if bias.rows() != out.rows || bias.cols() != out.cols {
            return Err(MnnError::InvalidNetwork(format!(
                "bias is {}x{} but the map outputs {out}",
                bias.rows(),
                bias.cols()
            )));
        }
        if mask.shape() != out {
            return Err(MnnError::InvalidNetwork(format!(
                "activation mask is {} but the map outputs {out}",
                mask.shape()
            )));
        }
        if bias.as_slice().iter().any(|v| !v.is_finite()) {
            return Err(MnnError::InvalidNetwork(
                "bias has non-finite entries".into(),
            ));
        }
        Ok(Layer { map, bias, mask })
    }

    /// A purely affine layer with zero bias.
    pub fn linear(map: SparseLinearMap) -> Self {
        let out = map.out_shape();
        Layer {
            bias: Matrix::zeros(out.rows, out.cols),
            mask: ActivationMask::identity(out),
            map,
        }
    }

    pub fn map(&self) -> &SparseLinearMap {
        &self.map
    }

    pub fn bias(&self) -> &Matrix {
        &self.bias
    }

    pub fn mask(&self) -> &ActivationMask {
        &self.mask
    }

    pub fn in_shape(&self) -> MatrixShape {
        self.map.in_shape()
    }

    pub fn out_shape(&self) -> MatrixShape {
        self.map.out_shape()
    }

    /// Nonzero map coefficients plus nonzero bias entries.
    pub fn num_weights(&self) -> usize {
        self.map.num_weights() + self.bias.nnz()
    }

    fn forward(&self, input: &Matrix, rho: &impl Fn(f64) -> f64) -> Matrix {
        let mut out = self.map.apply(input);
        let flags = self.mask.flags();
        let bias = self.bias.as_slice();
        let cols = out.cols();
        for (idx, flag) in flags.iter().enumerate() {
            let (i, j) = (idx / cols, idx % cols);
            let pre = out[(i, j)] + bias[idx];
            out[(i, j)] = if *flag { rho(pre) } else { pre };
        }
        out
    }
}

/// A matrix neural network.
///
/// `activation` is `None` for networks whose every unit is the identity;
/// such networks compose with networks of any activation.
#[derive(Clone, Debug, PartialEq)]
pub struct Mnn {
    layers: Vec<Layer>,
    activation: Option<Activation>,
}

impl Mnn {
    pub fn new(layers: Vec<Layer>, activation: Option<Activation>) -> Result<Self> {
        let Some(last) = layers.last() else {
            return Err(MnnError::InvalidNetwork(
                "a network needs at least one layer".into(),
            ));
        };
        if !last.mask().is_identity() {
            return Err(MnnError::InvalidNetwork(
                "the last layer must not apply the activation".into(),
            ));
        }
        for (idx, pair) in layers.windows(2).enumerate() {
            if pair[1].in_shape() != pair[0].out_shape() {
                return Err(MnnError::ShapeMismatch {
                    layer: idx + 2,
                    expected: pair[0].out_shape(),
                    actual: pair[1].in_shape(),
                });
            }
        }
        let uses_rho = layers.iter().any(|l| !l.mask().is_identity());
        if uses_rho && activation.is_none() {
            return Err(MnnError::InvalidNetwork(
                "activation units present but no activation function named".into(),
            ));
        }
        Ok(Mnn { layers, activation })
    }

    /// Single-layer affine network with zero bias.
    pub fn linear(map: SparseLinearMap) -> Self {
        Mnn {
            layers: vec![Layer::linear(map)],
            activation: None,
        }
    }

    pub(crate) fn from_parts_unchecked(layers: Vec<Layer>, activation: Option<Activation>) -> Self {
        debug_assert!(!layers.is_empty());
        Mnn { layers, activation }
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn activation(&self) -> Option<Activation> {
        self.activation
    }

    pub fn in_shape(&self) -> MatrixShape {
        self.layers[0].in_shape()
    }

    pub fn out_shape(&self) -> MatrixShape {
        self.layers[self.layers.len() - 1].out_shape()
    }

    /// `L(Phi)`
    pub fn num_layers(&self) -> usize {
        self.layers.len()
    }

    /// `M(Phi)`
    pub fn num_weights(&self) -> usize {
        self.layers.iter().map(Layer::num_weights).sum()
    }

    /// Per-layer weight counts `M_l(Phi)`.
    pub fn layer_weights(&self) -> Vec<usize> {
        self.layers.iter().map(Layer::num_weights).collect()
    }

    /// Realization with the network's own activation.
    pub fn realize(&self, input: &Matrix) -> Result<Matrix> {
        match self.activation {
            Some(act) => self.realize_with(|t| act.apply(t), input),
            None => self.realize_with(|t| t, input),
        }
    }

    /// Realization with an explicit scalar nonlinearity for the activation units.
    pub fn realize_with(&self, rho: impl Fn(f64) -> f64, input: &Matrix) -> Result<Matrix> {
        let mut x = input.clone();
        for (idx, layer) in self.layers.iter().enumerate() {
            let expected = layer.in_shape();
            if x.rows() != expected.rows || x.cols() != expected.cols {
                return Err(MnnError::ShapeMismatch {
                    layer: idx + 1,
                    expected,
                    actual: MatrixShape {
                        rows: x.rows(),
                        cols: x.cols(),
                    },
                });
            }
            x = layer.forward(&x, &rho);
        }
        Ok(x)
    }

    /// Multiplies the last layer's map and bias by `c`, so the realization becomes `c * R(net)`.
    pub fn scale_output(&self, c: f64) -> Result<Mnn> {
        if c == 0.0 || !c.is_finite() {
            return Err(MnnError::DegenerateScale(c));
        }
        let mut layers = self.layers.clone();
        let last = layers.last_mut().expect("nonempty");
        last.map = last.map.scaled(c)?;
        last.bias = last.bias.scaled(c);
        Ok(Mnn {
            layers,
            activation: self.activation,
        })
    }
}

/// Exact `(M, L)` of a network.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Counts {
    pub weights: u64,
    pub layers: u64,
}

impl Counts {
    pub fn of(net: &Mnn) -> Self {
        Counts {
            weights: net.num_weights() as u64,
            layers: net.num_layers() as u64,
        }
    }
}

/// `depth` identity layers on `shape`.
pub fn identity_mnn(shape: MatrixShape, depth: usize) -> Result<Mnn> {
    if depth == 0 {
        return Err(MnnError::param("identity network depth must be at least 1"));
    }
    let layer = Layer::linear(SparseLinearMap::identity(shape));
    Ok(Mnn {
        layers: vec![layer; depth],
        activation: None,
    })
}

/// Splits a `2^(k+1)`-sided square matrix into its four quadrants
/// `(A[1,1], A[1,2], A[2,1], A[2,2])`.
pub fn quad_split(a: &Matrix) -> Result<[Matrix; 4]> {
    let n = a.rows();
    if n != a.cols() || n < 2 || !n.is_power_of_two() {
        return Err(MnnError::param(format!(
            "quad split needs a square matrix with power-of-two side >= 2, got {}x{}",
            a.rows(),
            a.cols()
        )));
    }
    let h = n / 2;
    Ok([
        a.block(0, 0, h, h),
        a.block(0, h, h, h),
        a.block(h, 0, h, h),
        a.block(h, h, h, h),
    ])
}

/// Inverse of [`quad_split`].
pub fn quad_join(blocks: &[Matrix; 4]) -> Result<Matrix> {
    let top = blocks[0].hcat(&blocks[1])?;
    let bottom = blocks[2].hcat(&blocks[3])?;
    top.vcat(&bottom)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m2(rows: [[f64; 2]; 2]) -> Matrix {
        Matrix::from_rows(&rows)
    }

    #[test]
    fn identity_network_realizes_identity() {
        let shape = MatrixShape::square(2).unwrap();
        let net = identity_mnn(shape, 1).unwrap();
        let x = m2([[1.0, 2.0], [3.0, 4.0]]);
        assert_eq!(net.realize(&x).unwrap(), x);
        assert_eq!(net.num_weights(), 4);
        assert_eq!(net.num_layers(), 1);

        let deep = identity_mnn(shape, 3).unwrap();
        assert_eq!((deep.num_layers(), deep.num_weights()), (3, 12));

        let scalar = identity_mnn(MatrixShape::square(1).unwrap(), 5).unwrap();
        let seven = Matrix::from_rows(&[[7.0]]);
        assert_eq!(scalar.realize(&seven).unwrap(), seven);
        assert!(identity_mnn(shape, 0).is_err());
    }

    #[test]
    fn bias_only_layer() {
        let shape = MatrixShape::square(2).unwrap();
        let layer = Layer::new(
            SparseLinearMap::identity(shape),
            Matrix::identity(2),
            ActivationMask::identity(shape),
        )
        .unwrap();
        let net = Mnn::new(vec![layer], None).unwrap();
        assert_eq!(
            net.realize(&Matrix::zeros(2, 2)).unwrap(),
            Matrix::identity(2)
        );
        // 4 map entries + 2 bias entries
        assert_eq!(net.num_weights(), 6);
    }

    #[test]
    fn scale_output_multiplies_realization() {
        let shape = MatrixShape::square(2).unwrap();
        let net = identity_mnn(shape, 2).unwrap();
        let scaled = net.scale_output(2.0).unwrap();
        assert_eq!(
            scaled.realize(&Matrix::identity(2)).unwrap(),
            Matrix::diag(&[2.0, 2.0])
        );
        assert_eq!(scaled.num_weights(), net.num_weights());
        assert_eq!(net.scale_output(1.0).unwrap(), net);
        assert!(matches!(
            net.scale_output(0.0),
            Err(MnnError::DegenerateScale(_))
        ));
    }

    #[test]
    fn shape_mismatch_names_layer() {
        let net = identity_mnn(MatrixShape::square(2).unwrap(), 2).unwrap();
        let err = net.realize(&Matrix::zeros(3, 2)).unwrap_err();
        match err {
            MnnError::ShapeMismatch { layer, .. } => assert_eq!(layer, 1),
            other => panic!("unexpected error {other}"),
        }
    }

    #[test]
    fn map_rejects_zero_and_duplicate_entries() {
        let s = MatrixShape::square(1).unwrap();
        assert!(SparseLinearMap::new(s, s, vec![Entry::new((0, 0), (0, 0), 0.0)]).is_err());
        let dup = vec![
            Entry::new((0, 0), (0, 0), 1.0),
            Entry::new((0, 0), (0, 0), 2.0),
        ];
        assert!(SparseLinearMap::new(s, s, dup).is_err());
        let out_of_range = vec![Entry::new((1, 0), (0, 0), 1.0)];
        assert!(SparseLinearMap::new(s, s, out_of_range).is_err());
    }

    #[test]
    fn last_layer_must_be_affine() {
        let s = MatrixShape::square(1).unwrap();
        let mut mask = ActivationMask::identity(s);
        mask.set(0, 0, UnitKind::Rho);
        let layer = Layer::new(SparseLinearMap::identity(s), Matrix::zeros(1, 1), mask).unwrap();
        assert!(Mnn::new(vec![layer], Some(Activation::Relu)).is_err());
    }

    #[test]
    fn quad_split_cases() {
        let [a11, a12, a21, a22] = quad_split(&m2([[1.0, 2.0], [3.0, 4.0]])).unwrap();
        assert_eq!(
            [a11[(0, 0)], a12[(0, 0)], a21[(0, 0)], a22[(0, 0)]],
            [1.0, 2.0, 3.0, 4.0]
        );

        let [i11, i12, i21, i22] = quad_split(&Matrix::identity(4)).unwrap();
        assert_eq!(i11, Matrix::identity(2));
        assert_eq!(i12, Matrix::zeros(2, 2));
        assert_eq!(i21, Matrix::zeros(2, 2));
        assert_eq!(i22, Matrix::identity(2));

        let a = Matrix::from_fn(4, 4, |i, j| (4 * i + j + 1) as f64);
        let blocks = quad_split(&a).unwrap();
        assert_eq!(blocks[0], m2([[1.0, 2.0], [5.0, 6.0]]));
        assert_eq!(blocks[1], m2([[3.0, 4.0], [7.0, 8.0]]));
        assert_eq!(blocks[2], m2([[9.0, 10.0], [13.0, 14.0]]));
        assert_eq!(blocks[3], m2([[11.0, 12.0], [15.0, 16.0]]));
        assert_eq!(quad_join(&blocks).unwrap(), a);

        assert!(quad_split(&Matrix::zeros(3, 3)).is_err());
        assert!(quad_split(&Matrix::zeros(1, 1)).is_err());
        assert!(quad_split(&Matrix::zeros(2, 4)).is_err());
    }

    #[test]
    fn ceil_log2_values() {
        assert_eq!(ceil_log2(1), 0);
        assert_eq!(ceil_log2(2), 1);
        assert_eq!(ceil_log2(3), 2);
        assert_eq!(ceil_log2(6), 3);
        assert_eq!(ceil_log2(8), 3);
    }
}
