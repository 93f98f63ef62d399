//! Product gadgets: small networks with input `(x | y)` (a 1x2 matrix) and
//! output approximately `xy` (a 1x1 matrix) on the box `[-K, K]^2`.
//!
//! Both constructions rest on the polarization identity
//! `4xy = (x + y)^2 - (x - y)^2`.
//!
//! * [`build_product_relu2`] is exact: with `rho(t) = max(t, 0)^2` we have
//!   `rho(t) + rho(-t) = t^2`.
//! * [`build_product_relu`] rescales `u = (x + y) / 2K`, `v = (x - y) / 2K`
//!   into `[-1, 1]` and squares `|u|`, `|v|` with the sawtooth interpolant
//!   `f_m(s) = s - sum_{j=1..m} g_j(s) / 4^j`, where `g_j` is the `j`-fold
//!   composition of the hat function `g`. Since `0 <= f_m(s) - s^2 <= 4^-(m+1)`
//!   on `[0, 1]`, the output `K^2 (f_m(|u|) - f_m(|v|))` is within
//!   `K^2 4^-(m+1)` of `xy`.

use crate::error::{MnnError, Result};
use crate::matrix::Matrix;
use crate::mnn::{
    Activation, ActivationMask, Counts, Layer, MapBuilder, MatrixShape, Mnn, UnitKind,
};

/// Accuracy target `epsilon` on the input box `[-range, range]^2`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GadgetSpec {
    epsilon: f64,
    range: f64,
}

impl GadgetSpec {
    pub fn new(epsilon: f64, range: f64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(MnnError::param(format!(
                "gadget epsilon must be positive, got {epsilon}"
            )));
        }
        if !(range > 0.0 && range.is_finite()) {
            return Err(MnnError::param(format!(
                "gadget range K must be positive, got {range}"
            )));
        }
        Ok(GadgetSpec { epsilon, range })
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// Half-width `K` of the input box.
    pub fn range(&self) -> f64 {
        self.range
    }
}

/// Produces product gadgets for one activation function.
pub trait GadgetFactory: Send + Sync {
    fn activation(&self) -> Activation;

    /// A network with input shape 1x2 and output shape 1x1 whose realization is
    /// within `spec.epsilon()` of `xy` on `[-K, K]^2`.
    fn build(&self, spec: GadgetSpec) -> Result<Mnn>;

    /// `(M, L)` of the gadget for `spec`. Defaults to building it.
    fn counts(&self, spec: GadgetSpec) -> Result<Counts> {
        Ok(Counts::of(&self.build(spec)?))
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct Relu2Product;

impl GadgetFactory for Relu2Product {
    fn activation(&self) -> Activation {
        Activation::Relu2
    }

    fn build(&self, _spec: GadgetSpec) -> Result<Mnn> {
        Ok(build_product_relu2())
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct ReluProduct;

impl GadgetFactory for ReluProduct {
    fn activation(&self) -> Activation {
        Activation::Relu
    }

    fn build(&self, spec: GadgetSpec) -> Result<Mnn> {
        build_product_relu(spec)
    }

    /// Also answers for budgets below what f64 can certify, using the depth
    /// the construction needs in exact arithmetic.
    fn counts(&self, spec: GadgetSpec) -> Result<Counts> {
        let depth = match relu_sawtooth_depth(spec) {
            Ok(depth) => depth,
            Err(_) => Some(exact_sawtooth_depth(spec)),
        };
        Ok(match depth {
            None => Counts {
                weights: 0,
                layers: 1,
            },
            Some(m) => Counts {
                weights: 16 * u64::from(m) + 12,
                layers: u64::from(m) + 2,
            },
        })
    }
}

/// The shipped factory for `activation`.
pub fn factory(activation: Activation) -> &'static dyn GadgetFactory {
    match activation {
        Activation::Relu => &ReluProduct,
        Activation::Relu2 => &Relu2Product,
    }
}

fn shape(rows: usize, cols: usize) -> MatrixShape {
    MatrixShape::new(rows, cols).expect("nonzero gadget shape")
}

/// Exact product over `rho(t) = max(t, 0)^2`: 12 weights, 2 layers.
pub fn build_product_relu2() -> Mnn {
    let (input, hidden) = (shape(1, 2), shape(1, 4));
    let mut first = MapBuilder::new(hidden, input);
    // units: x+y, -(x+y), x-y, -(x-y)
    for (unit, (cx, cy)) in [(1.0, 1.0), (-1.0, -1.0), (1.0, -1.0), (-1.0, 1.0)]
        .into_iter()
        .enumerate()
    {
        first
            .push((0, unit), (0, 0), cx)
            .push((0, unit), (0, 1), cy);
    }
    let mut mask = ActivationMask::identity(hidden);
    for unit in 0..4 {
        mask.set(0, unit, UnitKind::Rho);
    }
    let first = Layer::new(first.build().expect("valid map"), Matrix::zeros(1, 4), mask)
        .expect("valid layer");

    let mut second = MapBuilder::new(shape(1, 1), hidden);
    for (unit, c) in [0.25, 0.25, -0.25, -0.25].into_iter().enumerate() {
        second.push((0, 0), (0, unit), c);
    }
    let second = Layer::linear(second.build().expect("valid map"));
    Mnn::new(vec![first, second], Some(Activation::Relu2)).expect("valid gadget")
}

/// Headroom reserved for floating-point rounding, relative to `K^2`.
const ROUNDING_ALLOWANCE: f64 = 1.0 / (1u64 << 44) as f64;

/// Sawtooth depth `m` used by [`build_product_relu`], or `None` when the zero
/// network already meets the budget (`epsilon >= K^2`).
///
/// `m` is the smallest integer with `K^2 (4^-(m+1) + 2^-44) <= epsilon`.
pub fn relu_sawtooth_depth(spec: GadgetSpec) -> Result<Option<u32>> {
    let k2 = spec.range * spec.range;
    if spec.epsilon >= k2 {
        return Ok(None);
    }
    let budget = spec.epsilon / k2;
    if budget <= 2.0 * ROUNDING_ALLOWANCE {
        return Err(MnnError::param(format!(
            "product accuracy {} on [-{}, {}] is below what f64 arithmetic can certify",
            spec.epsilon, spec.range, spec.range
        )));
    }
    let mut m = 0;
    let mut err = 0.25;
    while err + ROUNDING_ALLOWANCE > budget {
        err /= 4.0;
        m += 1;
    }
    Ok(Some(m))
}

/// Smallest `m` with `K^2 4^-(m+1) <= epsilon`, ignoring rounding.
fn exact_sawtooth_depth(spec: GadgetSpec) -> u32 {
    let budget = spec.epsilon / (spec.range * spec.range);
    let mut m = 0;
    let mut err = 0.25;
    while err > budget {
        err /= 4.0;
        m += 1;
    }
    m
}

/// ReLU product gadget with `16m + 12` weights and `m + 2` layers, where
/// `m = relu_sawtooth_depth(spec)`; the zero network (no weights, one layer)
/// when `epsilon >= K^2`.
pub fn build_product_relu(spec: GadgetSpec) -> Result<Mnn> {
    let Some(depth) = relu_sawtooth_depth(spec)? else {
        let zero = MapBuilder::new(shape(1, 1), shape(1, 2)).build()?;
        return Mnn::new(vec![Layer::linear(zero)], Some(Activation::Relu));
    };
    let k = spec.range;
    let k2 = k * k;
    let c = 1.0 / (2.0 * k);
    let mut layers = Vec::with_capacity(depth as usize + 2);

    // |u| = relu(u) + relu(-u), |v| likewise; units: relu(u), relu(-u), relu(v), relu(-v)
    let halves = shape(1, 4);
    let mut first = MapBuilder::new(halves, shape(1, 2));
    for (unit, (cx, cy)) in [(c, c), (-c, -c), (c, -c), (-c, c)].into_iter().enumerate() {
        first
            .push((0, unit), (0, 0), cx)
            .push((0, unit), (0, 1), cy);
    }
    let mut mask = ActivationMask::identity(halves);
    for unit in 0..4 {
        mask.set(0, unit, UnitKind::Rho);
    }
    layers.push(Layer::new(first.build()?, Matrix::zeros(1, 4), mask)?);

    if depth == 0 {
        // f_0(s) = s
        let mut out = MapBuilder::new(shape(1, 1), halves);
        for (unit, sign) in [1.0, 1.0, -1.0, -1.0].into_iter().enumerate() {
            out.push((0, 0), (0, unit), sign * k2);
        }
        layers.push(Layer::linear(out.build()?));
        return Mnn::new(layers, Some(Activation::Relu));
    }

    // Each tower carries three units: a = relu(t), b = relu(t - 1/2) and the
    // identity accumulator acc. The hat value is g(t) = 2a - 4b.
    let towers = shape(1, 6);
    let tower_mask = {
        let mut mask = ActivationMask::identity(towers);
        for tower in 0..2 {
            mask.set(0, 3 * tower, UnitKind::Rho);
            mask.set(0, 3 * tower + 1, UnitKind::Rho);
        }
        mask
    };
    let mut shift = Matrix::zeros(1, 6);
    shift[(0, 1)] = -0.5;
    shift[(0, 4)] = -0.5;

    let mut second = MapBuilder::new(towers, halves);
    for tower in 0..2 {
        let (pos, neg) = (2 * tower, 2 * tower + 1);
        for unit in 0..3 {
            second.push((0, 3 * tower + unit), (0, pos), 1.0).push(
                (0, 3 * tower + unit),
                (0, neg),
                1.0,
            );
        }
    }
    layers.push(Layer::new(
        second.build()?,
        shift.clone(),
        tower_mask.clone(),
    )?);

    let mut scale = 0.25;
    for _ in 1..depth {
        let mut step = MapBuilder::new(towers, towers);
        for tower in 0..2 {
            let (a, b, acc) = (3 * tower, 3 * tower + 1, 3 * tower + 2);
            for unit in [a, b] {
                step.push((0, unit), (0, a), 2.0)
                    .push((0, unit), (0, b), -4.0);
            }
            step.push((0, acc), (0, acc), 1.0)
                .push((0, acc), (0, a), -2.0 * scale)
                .push((0, acc), (0, b), 4.0 * scale);
        }
        layers.push(Layer::new(
            step.build()?,
            shift.clone(),
            tower_mask.clone(),
        )?);
        scale /= 4.0;
    }

    let mut out = MapBuilder::new(shape(1, 1), towers);
    for (tower, sign) in [(0, k2), (1, -k2)] {
        let (a, b, acc) = (3 * tower, 3 * tower + 1, 3 * tower + 2);
        out.push((0, 0), (0, acc), sign)
            .push((0, 0), (0, a), -2.0 * scale * sign)
            .push((0, 0), (0, b), 4.0 * scale * sign);
    }
    layers.push(Layer::linear(out.build()?));
    Mnn::new(layers, Some(Activation::Relu))
}

/// Evaluates a gadget at the scalar pair `(x, y)`.
pub fn eval_product(net: &Mnn, x: f64, y: f64) -> Result<f64> {
    let out = net.realize(&Matrix::from_rows(&[[x, y]]))?;
    Ok(out[(0, 0)])
}

/// Points `-K = x_0 < ... < x_n = K` with spacing at most `step`; both ends are hit exactly.
pub fn grid_points(range: f64, step: f64) -> Vec<f64> {
    let n = (2.0 * range / step).ceil().max(1.0) as usize;
    (0..=n)
        .map(|i| range * (2.0 * i as f64 / n as f64 - 1.0))
        .collect()
}

/// Largest `|xy - R(net)(x, y)|` over a uniform grid on `[-K, K]^2`, with
/// `rho` as the activation.
pub fn verify_gadget(
    net: &Mnn,
    rho: impl Fn(f64) -> f64,
    spec: GadgetSpec,
    grid_step: f64,
) -> Result<f64> {
    if !(grid_step > 0.0 && grid_step <= spec.range / 50.0) {
        return Err(MnnError::param(format!(
            "grid step {grid_step} must be positive and at most K/50 = {}",
            spec.range / 50.0
        )));
    }
    let points = grid_points(spec.range, grid_step);
    let mut worst: f64 = 0.0;
    for &x in &points {
        for &y in &points {
            let out = net.realize_with(&rho, &Matrix::from_rows(&[[x, y]]))?;
            worst = worst.max((x * y - out[(0, 0)]).abs());
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn relu2(t: f64) -> f64 {
        Activation::Relu2.apply(t)
    }

    #[test]
    fn relu2_gadget_values() {
        let net = build_product_relu2();
        assert_eq!((net.num_weights(), net.num_layers()), (12, 2));
        assert_eq!(eval_product(&net, 3.0, 4.0).unwrap(), 12.0);
        assert_eq!(eval_product(&net, 0.0, 7.5).unwrap(), 0.0);
        assert_eq!(eval_product(&net, -2.0, 5.0).unwrap(), -10.0);
    }

    #[test]
    fn relu2_gadget_grid_error_is_rounding_only() {
        let spec = GadgetSpec::new(1e-3, 1.0).unwrap();
        let err = verify_gadget(&build_product_relu2(), relu2, spec, 0.01).unwrap();
        assert!(err <= 1e-12, "error {err}");
    }

    #[test]
    fn relu_zero_network_branch() {
        let spec = GadgetSpec::new(2.0, 1.0).unwrap();
        let net = build_product_relu(spec).unwrap();
        assert_eq!((net.num_weights(), net.num_layers()), (0, 1));
        assert_eq!(eval_product(&net, 1.0, 1.0).unwrap(), 0.0);

        let spec = GadgetSpec::new(4.0, 2.0).unwrap();
        let net = build_product_relu(spec).unwrap();
        let err = verify_gadget(&net, |t| t.max(0.0), spec, 0.04).unwrap();
        assert_eq!(err, 4.0);
    }

    #[test]
    fn relu_gadget_meets_budget() {
        let spec = GadgetSpec::new(1e-3, 1.0).unwrap();
        let net = build_product_relu(spec).unwrap();
        let v = eval_product(&net, 0.5, 0.5).unwrap();
        assert!((v - 0.25).abs() <= 1e-3);
        for x in [-1.0, -0.3, 0.0, 0.7, 1.0] {
            assert!(eval_product(&net, x, 0.0).unwrap().abs() <= 1e-3);
        }
        let err = verify_gadget(&net, |t| t.max(0.0), spec, 0.01).unwrap();
        assert!(err <= 1e-3, "error {err}");

        let spec = GadgetSpec::new(0.1, 1.0).unwrap();
        let net = build_product_relu(spec).unwrap();
        let err = verify_gadget(&net, |t| t.max(0.0), spec, 0.01).unwrap();
        assert!(err <= 0.1, "error {err}");
    }

    #[test]
    fn relu_gadget_counts_follow_depth() {
        for (eps, range) in [(0.3, 1.0), (1e-2, 1.0), (1e-6, 3.0), (0.5, 2.0)] {
            let spec = GadgetSpec::new(eps, range).unwrap();
            let m = relu_sawtooth_depth(spec).unwrap().unwrap() as usize;
            let net = build_product_relu(spec).unwrap();
            assert_eq!(net.num_weights(), 16 * m + 12);
            assert_eq!(net.num_layers(), m + 2);
        }
    }

    #[test]
    fn depth_is_minimal() {
        let spec = GadgetSpec::new(1e-3, 1.0).unwrap();
        // 4^-5 = 9.8e-4 <= 1e-3 < 4^-4
        assert_eq!(relu_sawtooth_depth(spec).unwrap(), Some(4));
        let spec = GadgetSpec::new(0.3, 1.0).unwrap();
        assert_eq!(relu_sawtooth_depth(spec).unwrap(), Some(0));
    }

    #[test]
    fn rejects_bad_specs() {
        assert!(GadgetSpec::new(0.0, 1.0).is_err());
        assert!(GadgetSpec::new(1.0, -1.0).is_err());
        assert!(GadgetSpec::new(f64::NAN, 1.0).is_err());
        let spec = GadgetSpec::new(1e-20, 1.0).unwrap();
        assert!(build_product_relu(spec).is_err());
        let net = build_product_relu2();
        assert!(verify_gadget(&net, relu2, GadgetSpec::new(1.0, 1.0).unwrap(), 0.1).is_err());
    }

    #[test]
    fn grid_hits_both_ends() {
        let g = grid_points(2.0, 0.04);
        assert_eq!(g.first(), Some(&-2.0));
        assert_eq!(g.last(), Some(&2.0));
        assert_eq!(g.len(), 101);
    }
}
