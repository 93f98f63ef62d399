//! Strassen multiplication networks.
//!
//! For `n = 2^k` the network takes the row block `(A | B)` (an `n x 2n`
//! matrix) and returns an approximation of `AB`. One recursion level is
//! `MIX ⊙ PAR ⊙ SPLIT`:
//!
//! * `SPLIT` forms the seven operand pairs of Strassen's scheme as a
//!   `7h x 2h` stack, `h = n / 2`;
//! * `PAR` runs seven copies of the half-size network on the stack, each with
//!   budget `eps / 4` on the range `2K`;
//! * `MIX` recombines the seven `h x h` products into the four quadrants.
//!
//! The scalar case is a product gadget. Other sizes are zero-padded to the
//! next power of two and cropped afterwards.

use crate::combinators::{chain, parallelize, ParallelBlock};
use crate::error::{MnnError, Result};
use crate::gadgets::{GadgetFactory, GadgetSpec};
use crate::matrix::Matrix;
use crate::mnn::{ceil_log2, Counts, MapBuilder, MatrixShape, Mnn};

/// Signed quadrant combination: `(quadrant index, coefficient)` terms.
type Combo = &'static [(usize, f64)];

/// Operand pairs `(X_r, Y_r)` of the seven products as signed quadrant
/// combinations. Quadrants are numbered 0..4 as `[1,1], [1,2], [2,1], [2,2]`.
const OPERANDS: [(Combo, Combo); 7] = [
    (&[(0, 1.0), (3, 1.0)], &[(0, 1.0), (3, 1.0)]),
    (&[(2, 1.0), (3, 1.0)], &[(0, 1.0)]),
    (&[(0, 1.0)], &[(1, 1.0), (3, -1.0)]),
    (&[(3, 1.0)], &[(2, 1.0), (0, -1.0)]),
    (&[(0, 1.0), (1, 1.0)], &[(3, 1.0)]),
    (&[(2, 1.0), (0, -1.0)], &[(0, 1.0), (1, 1.0)]),
    (&[(1, 1.0), (3, -1.0)], &[(2, 1.0), (3, 1.0)]),
];

/// Quadrant `q` of `C` as a signed sum of the products `P_1..P_7` (0-based).
const RECOMBINATION: [Combo; 4] = [
    &[(0, 1.0), (3, 1.0), (4, -1.0), (6, 1.0)],
    &[(2, 1.0), (4, 1.0)],
    &[(1, 1.0), (3, 1.0)],
    &[(0, 1.0), (1, -1.0), (2, 1.0), (5, 1.0)],
];

fn shape(rows: usize, cols: usize) -> MatrixShape {
    MatrixShape::new(rows, cols).expect("nonzero Strassen shape")
}

fn quadrant_origin(q: usize, h: usize) -> (usize, usize) {
    ((q / 2) * h, (q % 2) * h)
}

fn check_level(k: u32) -> Result<usize> {
    if k == 0 {
        return Err(MnnError::param("MIX and SPLIT need k >= 1"));
    }
    if k > 30 {
        return Err(MnnError::param(format!(
            "k = {k} is far too large to build"
        )));
    }
    Ok(1usize << (k - 1))
}

/// `7h x h` stack of products to the `2h x 2h` result. 1 layer, `3 * 4^k` weights.
pub fn build_mix(k: u32) -> Result<Mnn> {
    let h = check_level(k)?;
    let mut map = MapBuilder::new(shape(2 * h, 2 * h), shape(7 * h, h));
    for (q, terms) in RECOMBINATION.iter().enumerate() {
        let (r0, c0) = quadrant_origin(q, h);
        for i in 0..h {
            for j in 0..h {
                for &(p, sign) in terms.iter() {
                    map.push((r0 + i, c0 + j), (p * h + i, j), sign);
                }
            }
        }
    }
    Ok(Mnn::linear(map.build()?))
}

/// `(A | B)` with `A, B` of side `2h` to the `7h x 2h` stack of operand pairs.
/// 1 layer, `6 * 4^k` weights.
pub fn build_split(k: u32) -> Result<Mnn> {
    let h = check_level(k)?;
    let n = 2 * h;
    let mut map = MapBuilder::new(shape(7 * h, 2 * h), shape(n, 2 * n));
    for (r, (left, right)) in OPERANDS.iter().enumerate() {
        for i in 0..h {
            for j in 0..h {
                for &(q, sign) in left.iter() {
                    let (r0, c0) = quadrant_origin(q, h);
                    map.push((r * h + i, j), (r0 + i, c0 + j), sign);
                }
                for &(q, sign) in right.iter() {
                    let (r0, c0) = quadrant_origin(q, h);
                    map.push((r * h + i, h + j), (r0 + i, n + c0 + j), sign);
                }
            }
        }
    }
    Ok(Mnn::linear(map.build()?))
}

/// Gadget accuracy and range at the leaves of a depth-`k` recursion.
pub fn leaf_spec(k: u32, eps: f64, range: f64) -> Result<GadgetSpec> {
    let scale = (1u64 << k) as f64;
    GadgetSpec::new(eps / (scale * scale), range * scale)
}

/// Seven copies of the half-size network side by side, each at `(eps / 4, 2K)`.
pub fn build_par(k: u32, eps: f64, range: f64, factory: &dyn GadgetFactory) -> Result<Mnn> {
    check_level(k)?;
    let child = build_str_pow2(k - 1, eps / 4.0, 2.0 * range, factory)?;
    Ok(parallelize(&ParallelBlock::new(vec![child; 7])?))
}

/// Network for `2^k x 2^k` products with `|R(A | B) - AB|_inf <= eps`
/// whenever `|A|_inf, |B|_inf <= range`.
pub fn build_str_pow2(k: u32, eps: f64, range: f64, factory: &dyn GadgetFactory) -> Result<Mnn> {
    GadgetSpec::new(eps, range)?;
    if k > 12 {
        return Err(MnnError::param(format!("k = {k} would need 7^{k} gadgets")));
    }
    if k == 0 {
        return factory.build(GadgetSpec::new(eps, range)?);
    }
    let par = build_par(k, eps, range, factory)?;
    chain(&[&build_mix(k)?, &par, &build_split(k)?])
}

fn overflow() -> MnnError {
    MnnError::param("count exceeds the 64-bit range")
}

/// Closed form `M = 7^k (M_g + 12) - 12 * 4^k`, `L = L_g + 2k` for the
/// power-of-two network built on a gadget with `(M_g, L_g)`.
pub fn formula_counts_pow2(k: u32, gadget_weights: u64, gadget_layers: u64) -> Result<Counts> {
    let seven = 7u64.checked_pow(k).ok_or_else(overflow)?;
    let four = 4u64.checked_pow(k).ok_or_else(overflow)?;
    let weights = seven
        .checked_mul(gadget_weights + 12)
        .and_then(|v| v.checked_sub(12 * four))
        .ok_or_else(overflow)?;
    Ok(Counts {
        weights,
        layers: gadget_layers + 2 * u64::from(k),
    })
}

/// The same counts from the recursion `M(k) = 7 M(k-1) + 9 * 4^k`, `L(k) = L(k-1) + 2`.
pub fn recursive_counts_pow2(k: u32, gadget_weights: u64, gadget_layers: u64) -> Result<Counts> {
    let mut counts = Counts {
        weights: gadget_weights,
        layers: gadget_layers,
    };
    for level in 1..=k {
        let mix_split = 9 * 4u64.checked_pow(level).ok_or_else(overflow)?;
        counts.weights = counts
            .weights
            .checked_mul(7)
            .and_then(|v| v.checked_add(mix_split))
            .ok_or_else(overflow)?;
        counts.layers += 2;
    }
    Ok(counts)
}

/// `9 * sum_{i=1..k} 4^i 7^(k-i)` and `12 (7^k - 4^k)`, the two sides of the
/// geometric sum that turns the recursion into the closed form.
pub fn geometric_sum_sides(k: u32) -> (u64, u64) {
    let lhs = (1..=k).map(|i| 9 * 4u64.pow(i) * 7u64.pow(k - i)).sum();
    let rhs = 12 * (7u64.pow(k) - 4u64.pow(k));
    (lhs, rhs)
}

/// Dimensions of a rectangular product: `A` is `m x n`, `B` is `n x p`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RectShape {
    m: usize,
    n: usize,
    p: usize,
}

impl RectShape {
    pub fn new(m: usize, n: usize, p: usize) -> Result<Self> {
        if m == 0 || n == 0 || p == 0 {
            return Err(MnnError::param(format!(
                "matrix dimensions must be positive, got m={m}, n={n}, p={p}"
            )));
        }
        if m.max(n).max(p) > 1 << 12 {
            return Err(MnnError::param(
                "matrix dimensions above 4096 are not supported",
            ));
        }
        Ok(RectShape { m, n, p })
    }

    pub fn square(n: usize) -> Result<Self> {
        RectShape::new(n, n, n)
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> usize {
        self.p
    }

    /// `max{m, n, p}`
    pub fn gamma(&self) -> usize {
        self.m.max(self.n).max(self.p)
    }

    /// Recursion depth `ceil(log2 gamma)`.
    pub fn k(&self) -> u32 {
        ceil_log2(self.gamma())
    }

    /// Padded side `2^k`.
    pub fn side(&self) -> usize {
        1 << self.k()
    }
}

/// `(A^T | B)` (`n x (m + p)`) to the zero-padded `(A | B)` of side `2^k`.
pub fn build_ext(shape_: RectShape) -> Result<Mnn> {
    let RectShape { m, n, p } = shape_;
    let s = shape_.side();
    let mut map = MapBuilder::new(shape(s, 2 * s), shape(n, m + p));
    for i in 0..m {
        for j in 0..n {
            map.push((i, j), (j, i), 1.0);
        }
    }
    for i in 0..n {
        for j in 0..p {
            map.push((i, s + j), (i, m + j), 1.0);
        }
    }
    Ok(Mnn::linear(map.build()?))
}

/// `(A | B)` with `A, B` of side `n` to the zero-padded pair of side `2^k`.
pub fn build_ext_star(n: usize) -> Result<Mnn> {
    let s = RectShape::square(n)?.side();
    let mut map = MapBuilder::new(shape(s, 2 * s), shape(n, 2 * n));
    for i in 0..n {
        for j in 0..n {
            map.push((i, j), (i, j), 1.0);
        }
        for j in 0..n {
            map.push((i, s + j), (i, n + j), 1.0);
        }
    }
    Ok(Mnn::linear(map.build()?))
}

/// Crops a `2^k x 2^k` matrix to its top-left `m x p` block.
pub fn build_shr(shape_: RectShape) -> Result<Mnn> {
    let s = shape_.side();
    let mut map = MapBuilder::new(shape(shape_.m, shape_.p), shape(s, s));
    for i in 0..shape_.m {
        for j in 0..shape_.p {
            map.push((i, j), (i, j), 1.0);
        }
    }
    Ok(Mnn::linear(map.build()?))
}

/// Rectangular product network with input `(A^T | B)` and output `AB`.
pub fn build_str_rect(
    shape_: RectShape,
    eps: f64,
    range: f64,
    factory: &dyn GadgetFactory,
) -> Result<Mnn> {
    let core = build_str_pow2(shape_.k(), eps, range, factory)?;
    chain(&[&build_shr(shape_)?, &core, &build_ext(shape_)?])
}

/// Square product network with input `(A | B)` and output `AB`.
pub fn build_str_square(
    n: usize,
    eps: f64,
    range: f64,
    factory: &dyn GadgetFactory,
) -> Result<Mnn> {
    let shape_ = RectShape::square(n)?;
    let core = build_str_pow2(shape_.k(), eps, range, factory)?;
    chain(&[&build_shr(shape_)?, &core, &build_ext_star(n)?])
}

/// Upper bounds on `(M, L)` of a padded product network.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CountBound {
    pub weights: f64,
    pub layers: f64,
}

impl CountBound {
    pub fn admits(&self, counts: Counts) -> bool {
        counts.weights as f64 <= self.weights && counts.layers as f64 <= self.layers
    }
}

/// Gadget whose size enters the padded-network bounds: accuracy
/// `eps / (4 gamma^2)` on range `2 gamma K`.
pub fn bound_gadget_spec(gamma: usize, eps: f64, range: f64) -> Result<GadgetSpec> {
    let g = gamma as f64;
    GadgetSpec::new(eps / (4.0 * g * g), 2.0 * g * range)
}

/// `M <= 7 gamma^{log2 7} (M_g + 12) - 9 gamma^2`, `L <= L_g + 2 (log2 gamma + 2)`.
pub fn padded_bound(gamma: usize, gadget: Counts) -> CountBound {
    let g = gamma as f64;
    CountBound {
        weights: 7.0 * g.powf(7f64.log2()) * (gadget.weights as f64 + 12.0) - 9.0 * g * g,
        layers: gadget.layers as f64 + 2.0 * (g.log2() + 2.0),
    }
}

/// Evaluates [`padded_bound`] with the gadget size reported by `factory`.
pub fn padded_bound_for(
    gamma: usize,
    eps: f64,
    range: f64,
    factory: &dyn GadgetFactory,
) -> Result<CountBound> {
    let gadget = factory.counts(bound_gadget_spec(gamma, eps, range)?)?;
    Ok(padded_bound(gamma, gadget))
}

/// `(A | B)` as one `n x 2n` input.
pub fn pack_ab(a: &Matrix, b: &Matrix) -> Result<Matrix> {
    a.hcat(b)
}

/// `(A^T | B)` as one `n x (m + p)` input.
pub fn pack_atb(a: &Matrix, b: &Matrix) -> Result<Matrix> {
    a.transpose().hcat(b)
}
