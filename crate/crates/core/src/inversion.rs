//! Matrix inversion networks built on truncated Neumann series.
//!
//! For `|I - alpha A|_2 <= delta < 1` the inverse is
//! `A^-1 = alpha sum_k (I - alpha A)^k`. The partial sum with `2^N` terms
//! factors as `prod_{k<N} (B^{2^k} + I)`, and after rescaling as
//! `2^{2^N - 1} prod_{k<N} ((B/2)^{2^k} + (I/2)^{2^k})`, where every factor
//! has spectral norm at most one. The networks below evaluate that product
//! with Strassen multiplication networks, carrying two branches: the
//! repeated squares of `B/2` and the running product.

use crate::combinators::{chain, parallelize, ParallelBlock};
use crate::error::{MnnError, Result};
use crate::gadgets::{GadgetFactory, GadgetSpec};
use crate::matrix::Matrix;
use crate::mnn::{identity_mnn, ActivationMask, Counts, Layer, MapBuilder, MatrixShape, Mnn};
use crate::strassen::{build_str_square, CountBound};

/// Parameters of an inversion network: inputs are `n x n` with
/// `|I - alpha A|_2 <= delta`, and the output is within `epsilon` of `A^-1`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InversionSpec {
    n: usize,
    alpha: f64,
    epsilon: f64,
    delta: f64,
}

impl InversionSpec {
    pub fn new(n: usize, alpha: f64, epsilon: f64, delta: f64) -> Result<Self> {
        if n == 0 {
            return Err(MnnError::param("matrix size n must be at least 1"));
        }
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(MnnError::param(format!(
                "alpha must be positive, got {alpha}"
            )));
        }
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(MnnError::param(format!(
                "epsilon must be positive, got {epsilon}"
            )));
        }
        check_delta(delta)?;
        Ok(InversionSpec {
            n,
            alpha,
            epsilon,
            delta,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// Number of doubling stages, `N(epsilon / 2 alpha, delta)`.
    pub fn stages(&self) -> u32 {
        compute_n(self.epsilon / (2.0 * self.alpha), self.delta).expect("validated spec")
    }

    /// Accuracy handed to the Neumann network: `min{epsilon / 2 alpha, 1/8}`,
    /// kept strictly below `1/8`.
    pub fn neumann_epsilon(&self) -> f64 {
        let eps = self.epsilon / (2.0 * self.alpha);
        if eps >= 0.125 {
            0.125f64.next_down()
        } else {
            eps
        }
    }
}

fn check_delta(delta: f64) -> Result<()> {
    if delta > 0.0 && delta < 1.0 {
        Ok(())
    } else {
        Err(MnnError::param(format!(
            "delta must lie in (0, 1), got {delta}"
        )))
    }
}

/// `N(eps, delta) = max{ceil(log2(log2(eps (1 - delta)) / log2 delta)), 1}`.
///
/// The result always satisfies `delta^(2^N) / (1 - delta) <= eps` as
/// evaluated in f64; should rounding break that, `N` is raised until it holds.
pub fn compute_n(eps: f64, delta: f64) -> Result<u32> {
    check_delta(delta)?;
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(MnnError::param(format!(
            "epsilon must be positive, got {eps}"
        )));
    }
    let ratio = (eps * (1.0 - delta)).log2() / delta.log2();
    let mut n = if ratio > 1.0 {
        ratio.log2().ceil().max(1.0) as u32
    } else {
        1
    };
    while n < 64 && tail_bound(delta, n) > eps {
        n += 1;
    }
    Ok(n)
}

/// `delta^(2^N) / (1 - delta)`, the truncation error of `2^N` Neumann terms.
pub fn tail_bound(delta: f64, stages: u32) -> f64 {
    let mut power = delta;
    for _ in 0..stages {
        power *= power;
    }
    power / (1.0 - delta)
}

/// `Sigma(eps, delta, n) = 2^(-2^N(eps, delta)) min{eps, 1/4} / (16 n^3)`.
pub fn compute_sigma(eps: f64, delta: f64, n: usize) -> Result<f64> {
    let stages = compute_n(eps, delta)?;
    Ok(pow2_neg_pow2(stages) * eps.min(0.25) / (16.0 * (n as f64).powi(3)))
}

/// The pair `(N, Sigma)` for one accuracy target.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NeumannDepth {
    pub stages: u32,
    pub sigma: f64,
}

impl NeumannDepth {
    pub fn new(eps: f64, delta: f64, n: usize) -> Result<Self> {
        Ok(NeumannDepth {
            stages: compute_n(eps, delta)?,
            sigma: compute_sigma(eps, delta, n)?,
        })
    }
}

/// `2^(-2^k)`
fn pow2_neg_pow2(k: u32) -> f64 {
    2f64.powi(-(1i32 << k.min(30)))
}

fn shape(rows: usize, cols: usize) -> MatrixShape {
    MatrixShape::new(rows, cols).expect("nonzero inversion shape")
}

fn check_n(n: usize) -> Result<()> {
    if n == 0 {
        Err(MnnError::param("matrix size n must be at least 1"))
    } else {
        Ok(())
    }
}

/// Copies the `n x n` block at `from` of the input into the block at `to`, scaled by `c`.
fn push_block(map: &mut MapBuilder, n: usize, to: (usize, usize), from: (usize, usize), c: f64) {
    for i in 0..n {
        for j in 0..n {
            map.push((to.0 + i, to.1 + j), (from.0 + i, from.1 + j), c);
        }
    }
}

fn diagonal_bias(rows: usize, cols: usize, at: (usize, usize), n: usize, value: f64) -> Matrix {
    let mut bias = Matrix::zeros(rows, cols);
    for i in 0..n {
        bias[(at.0 + i, at.1 + i)] = value;
    }
    bias
}

fn affine(map: MapBuilder, bias: Matrix) -> Result<Mnn> {
    let map = map.build()?;
    let mask = ActivationMask::identity(map.out_shape());
    Mnn::new(vec![Layer::new(map, bias, mask)?], None)
}

/// `A -> A | A`. 1 layer, `2n^2` weights.
pub fn build_dup_simple(n: usize) -> Result<Mnn> {
    check_n(n)?;
    let mut map = MapBuilder::new(shape(n, 2 * n), shape(n, n));
    push_block(&mut map, n, (0, 0), (0, 0), 1.0);
    push_block(&mut map, n, (0, n), (0, 0), 1.0);
    Ok(Mnn::linear(map.build()?))
}

/// `A -> (A | A ; A | 0) / 2`. 1 layer, `3n^2` weights.
pub fn build_dup_half(n: usize) -> Result<Mnn> {
    check_n(n)?;
    let mut map = MapBuilder::new(shape(2 * n, 2 * n), shape(n, n));
    push_block(&mut map, n, (0, 0), (0, 0), 0.5);
    push_block(&mut map, n, (0, n), (0, 0), 0.5);
    push_block(&mut map, n, (n, 0), (0, 0), 0.5);
    Ok(Mnn::linear(map.build()?))
}

/// `(A | B) -> A + I/2`, stretched over `layers` layers so that it can run
/// beside a deeper network. `n^2 L + n` weights.
pub fn build_fill(n: usize, layers: usize) -> Result<Mnn> {
    check_n(n)?;
    if layers == 0 {
        return Err(MnnError::param("FILL needs at least one layer"));
    }
    let mut map = MapBuilder::new(shape(n, n), shape(n, 2 * n));
    push_block(&mut map, n, (0, 0), (0, 0), 1.0);
    let first = affine(map, diagonal_bias(n, n, (0, 0), n, 0.5))?;
    if layers == 1 {
        return Ok(first);
    }
    chain(&[&identity_mnn(shape(n, n), layers - 1)?, &first])
}

fn check_shift(k: u32) -> Result<f64> {
    if k > 9 {
        return Err(MnnError::param(format!(
            "shift 2^(-2^{k}) is not representable as a nonzero weight"
        )));
    }
    Ok(pow2_neg_pow2(k))
}

/// `(A ; B) -> (A + 2^(-2^k) I) | B`. 1 layer, `2n^2 + n` weights.
pub fn build_flip(n: usize, k: u32) -> Result<Mnn> {
    check_n(n)?;
    let shift = check_shift(k)?;
    let mut map = MapBuilder::new(shape(n, 2 * n), shape(2 * n, n));
    push_block(&mut map, n, (0, 0), (0, 0), 1.0);
    push_block(&mut map, n, (0, n), (n, 0), 1.0);
    affine(map, diagonal_bias(n, 2 * n, (0, 0), n, shift))
}

/// `(A ; B) -> (A | A ; A + 2^(-2^k) I | B)`. 1 layer, `4n^2 + n` weights.
pub fn build_mix_aux(n: usize, k: u32) -> Result<Mnn> {
    check_n(n)?;
    let shift = check_shift(k)?;
    let mut map = MapBuilder::new(shape(2 * n, 2 * n), shape(2 * n, n));
    push_block(&mut map, n, (0, 0), (0, 0), 1.0);
    push_block(&mut map, n, (0, n), (0, 0), 1.0);
    push_block(&mut map, n, (n, 0), (0, 0), 1.0);
    push_block(&mut map, n, (n, n), (n, 0), 1.0);
    affine(map, diagonal_bias(2 * n, 2 * n, (n, 0), n, shift))
}

/// `A -> I - alpha A`. 1 layer, `n^2 + n` weights.
pub fn build_in(n: usize, alpha: f64) -> Result<Mnn> {
    check_n(n)?;
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(MnnError::param(format!(
            "alpha must be positive, got {alpha}"
        )));
    }
    let mut map = MapBuilder::new(shape(n, n), shape(n, n));
    push_block(&mut map, n, (0, 0), (0, 0), -alpha);
    affine(map, Matrix::identity(n))
}

fn check_sqr_eps(eps: f64) -> Result<()> {
    if eps > 0.0 && eps < 0.25 {
        Ok(())
    } else {
        Err(MnnError::param(format!(
            "squaring accuracy must lie in (0, 1/4), got {eps}"
        )))
    }
}

/// Square product network used inside the squaring and Neumann chains:
/// accuracy `eps / 4n` on entries bounded by 1.
fn inner_product(n: usize, eps: f64, factory: &dyn GadgetFactory) -> Result<Mnn> {
    build_str_square(n, eps / (4.0 * n as f64), 1.0, factory)
}

/// `stages` repetitions of square-by-Strassen; approximates `A^(2^stages)`
/// within `eps` in spectral norm for `|A|_2 <= 1/2`.
pub fn build_sqr(stages: u32, n: usize, eps: f64, factory: &dyn GadgetFactory) -> Result<Mnn> {
    check_sqr_eps(eps)?;
    if stages == 0 {
        return Err(MnnError::param("squaring chain needs at least one stage"));
    }
    let step = chain(&[&inner_product(n, eps, factory)?, &build_dup_simple(n)?])?;
    let steps = vec![&step; stages as usize];
    chain(&steps)
}

/// Two-branch network with output `(SQR^i ; PROD^i)`, a `2n x n` stack
/// holding approximations of `(A/2)^(2^i)` and
/// `prod_{k<i} ((A/2)^(2^k) + (I/2)^(2^k))`.
pub fn build_aux(i: u32, n: usize, eps: f64, factory: &dyn GadgetFactory) -> Result<Mnn> {
    check_sqr_eps(eps)?;
    if i == 0 {
        return Err(MnnError::param("the auxiliary chain starts at i = 1"));
    }
    let product = inner_product(n, eps, factory)?;
    let fill = build_fill(n, product.num_layers())?;
    let first = parallelize(&ParallelBlock::new(vec![product.clone(), fill])?);
    let mut net = chain(&[&first, &build_dup_half(n)?])?;
    if i > 1 {
        let pair = parallelize(&ParallelBlock::new(vec![product.clone(), product])?);
        for stage in 2..=i {
            net = chain(&[&pair, &build_mix_aux(n, stage - 1)?, &net])?;
        }
    }
    Ok(net)
}

fn check_neu_eps(eps: f64) -> Result<()> {
    if eps > 0.0 && eps < 0.125 {
        Ok(())
    } else {
        Err(MnnError::param(format!(
            "Neumann accuracy must lie in (0, 1/8), got {eps}"
        )))
    }
}

/// `A -> A + I`, the one-stage Neumann network. 1 layer, `n^2 + n` weights.
pub fn build_neu_single(n: usize) -> Result<Mnn> {
    check_n(n)?;
    let mut map = MapBuilder::new(shape(n, n), shape(n, n));
    push_block(&mut map, n, (0, 0), (0, 0), 1.0);
    affine(map, Matrix::identity(n))
}

/// Approximates `sum_{k < 2^stages} A^k` within `eps` in spectral norm for
/// `|A|_2 <= 1`. One stage is exact and ignores `eps`.
pub fn build_neu(stages: u32, n: usize, eps: f64, factory: &dyn GadgetFactory) -> Result<Mnn> {
    if stages == 0 {
        return Err(MnnError::param("Neumann network needs at least one stage"));
    }
    if stages == 1 {
        return build_neu_single(n);
    }
    check_neu_eps(eps)?;
    if stages > 5 {
        return Err(MnnError::param(format!(
            "{stages} stages need accuracy 2^-{} below f64 resolution",
            1u64 << stages
        )));
    }
    let scale = 2f64.powi((1 << stages) - 1);
    let inner_eps = eps / scale;
    let net = chain(&[
        &inner_product(n, inner_eps, factory)?,
        &build_flip(n, stages - 1)?,
        &build_aux(stages - 1, n, inner_eps, factory)?,
    ])?;
    net.scale_output(scale)
}

/// Inversion network: `A -> alpha NEU(I - alpha A)`.
pub fn build_inv(spec: InversionSpec, factory: &dyn GadgetFactory) -> Result<Mnn> {
    let neu = build_neu(spec.stages(), spec.n, spec.neumann_epsilon(), factory)?;
    chain(&[
        &neu.scale_output(spec.alpha)?,
        &build_in(spec.n, spec.alpha)?,
    ])
}

/// Which stage count enters `Sigma` in the inversion size bounds.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SigmaReading {
    /// `Sigma(epsilon / alpha, delta, n)` as written, with its own stage count
    /// `N(epsilon / alpha, delta)`.
    Statement,
    /// The same expression with the stage count of the built network,
    /// `N(epsilon / 2 alpha, delta)`. This is what the size count of the
    /// Neumann network produces; the two differ when
    /// `N(epsilon / alpha) < N(epsilon / 2 alpha)`.
    Construction,
}

/// Gadget accuracy and range that enter the inversion size bounds:
/// `Sigma` on range `2n`.
pub fn inv_bound_gadget_spec(spec: InversionSpec, reading: SigmaReading) -> Result<GadgetSpec> {
    let eps = spec.epsilon / spec.alpha;
    let sigma = match reading {
        SigmaReading::Statement => compute_sigma(eps, spec.delta, spec.n)?,
        SigmaReading::Construction => {
            pow2_neg_pow2(spec.stages()) * eps.min(0.25) / (16.0 * (spec.n as f64).powi(3))
        }
    };
    GadgetSpec::new(sigma, 2.0 * spec.n as f64)
}

/// Size bounds of the inversion network for `N(epsilon / 2 alpha, delta) >= 2`:
///
/// `M <= 14 n^{log2 7} (N - 1)(M_g + 12) + n^2 (L_g - 14N + 20 + 2 log2 n) + n (N + 1)`,
/// `L <= N (2 log2 n + 5 + L_g)`.
///
/// For one stage the sizes are exact: `M = 2(n^2 + n)`, `L = 2`.
pub fn inv_bound(spec: InversionSpec, gadget: Counts) -> CountBound {
    let stages = spec.stages();
    let n = spec.n as f64;
    if stages == 1 {
        return CountBound {
            weights: 2.0 * (n * n + n),
            layers: 2.0,
        };
    }
    let big_n = stages as f64;
    let (mg, lg) = (gadget.weights as f64, gadget.layers as f64);
    CountBound {
        weights: 14.0 * n.powf(7f64.log2()) * (big_n - 1.0) * (mg + 12.0)
            + n * n * (lg - 14.0 * big_n + 20.0 + 2.0 * n.log2())
            + n * (big_n + 1.0),
        layers: big_n * (2.0 * n.log2() + 5.0 + lg),
    }
}

/// [`inv_bound`] with the gadget size reported by `factory`.
pub fn inv_bound_for(
    spec: InversionSpec,
    reading: SigmaReading,
    factory: &dyn GadgetFactory,
) -> Result<CountBound> {
    let gadget = factory.counts(inv_bound_gadget_spec(spec, reading)?)?;
    Ok(inv_bound(spec, gadget))
}
