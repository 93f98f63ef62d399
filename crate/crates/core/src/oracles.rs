//! Reference arithmetic used to check networks.
//!
//! Everything here is definitional and slow: triple-loop products, textbook
//! Strassen on explicit blocks, Gaussian elimination, power iteration. None of
//! it is reachable from the network builders.
//!
//! Random inputs come from ChaCha8 streams keyed by a [`Seed`], so a seed and a
//! stream number always reproduce the same matrices.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{MnnError, Result};
use crate::matrix::Matrix;

/// Default seed of the verification suites.
pub const DEFAULT_SEED: u64 = 42;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Seed(pub u64);

impl Seed {
    /// Independent generator for sub-experiment `stream` of this seed.
    pub fn rng(self, stream: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.0);
        rng.set_stream(stream);
        rng
    }
}

impl Default for Seed {
    fn default() -> Self {
        Seed(DEFAULT_SEED)
    }
}

pub fn random_uniform(rows: usize, cols: usize, lo: f64, hi: f64, rng: &mut impl Rng) -> Matrix {
    Matrix::from_fn(rows, cols, |_, _| rng.random_range(lo..=hi))
}

pub fn random_gaussian(rows: usize, cols: usize, rng: &mut impl Rng) -> Matrix {
    Matrix::from_fn(rows, cols, |_, _| rng.sample(StandardNormal))
}

pub fn matmul_naive(a: &Matrix, b: &Matrix) -> Result<Matrix> {
    if a.cols() != b.rows() {
        return Err(MnnError::param(format!(
            "cannot multiply {}x{} by {}x{}",
            a.rows(),
            a.cols(),
            b.rows(),
            b.cols()
        )));
    }
    let mut out = Matrix::zeros(a.rows(), b.cols());
    for i in 0..a.rows() {
        for j in 0..b.cols() {
            let mut acc = 0.0;
            for k in 0..a.cols() {
                acc += a[(i, k)] * b[(k, j)];
            }
            out[(i, j)] = acc;
        }
    }
    Ok(out)
}

fn mul(a: &Matrix, b: &Matrix) -> Matrix {
    matmul_naive(a, b).expect("square factors of equal size")
}

/// Recursive Strassen product of two `2^k x 2^k` matrices in plain arithmetic.
pub fn strassen_exact(a: &Matrix, b: &Matrix) -> Result<Matrix> {
    let n = a.rows();
    let square = |m: &Matrix| m.rows() == n && m.cols() == n;
    if !square(a) || !square(b) || !n.is_power_of_two() {
        return Err(MnnError::param(format!(
            "Strassen needs two square matrices with equal power-of-two sides, got {}x{} and {}x{}",
            a.rows(),
            a.cols(),
            b.rows(),
            b.cols()
        )));
    }
    Ok(strassen_rec(a, b))
}

fn strassen_rec(a: &Matrix, b: &Matrix) -> Matrix {
    let n = a.rows();
    if n == 1 {
        return Matrix::from_rows(&[[a[(0, 0)] * b[(0, 0)]]]);
    }
    let h = n / 2;
    let q = |m: &Matrix, r: usize, c: usize| m.block(r * h, c * h, h, h);
    let (a11, a12, a21, a22) = (q(a, 0, 0), q(a, 0, 1), q(a, 1, 0), q(a, 1, 1));
    let (b11, b12, b21, b22) = (q(b, 0, 0), q(b, 0, 1), q(b, 1, 0), q(b, 1, 1));

    let p1 = strassen_rec(&a11.add(&a22), &b11.add(&b22));
    let p2 = strassen_rec(&a21.add(&a22), &b11);
    let p3 = strassen_rec(&a11, &b12.sub(&b22));
    let p4 = strassen_rec(&a22, &b21.sub(&b11));
    let p5 = strassen_rec(&a11.add(&a12), &b22);
    let p6 = strassen_rec(&a21.sub(&a11), &b11.add(&b12));
    let p7 = strassen_rec(&a12.sub(&a22), &b21.add(&b22));

    let mut c = Matrix::zeros(n, n);
    c.set_block(0, 0, &p1.add(&p4).sub(&p5).add(&p7));
    c.set_block(0, h, &p3.add(&p5));
    c.set_block(h, 0, &p2.add(&p4));
    c.set_block(h, h, &p1.sub(&p2).add(&p3).add(&p6));
    c
}

/// `A^p` by repeated naive multiplication.
pub fn matrix_power(a: &Matrix, p: u32) -> Matrix {
    (0..p).fold(Matrix::identity(a.rows()), |acc, _| mul(&acc, a))
}

/// `sum_{k=0}^{terms-1} A^k`.
pub fn neumann_partial(a: &Matrix, terms: usize) -> Result<Matrix> {
    if terms == 0 || a.rows() != a.cols() {
        return Err(MnnError::param(
            "Neumann partial sum needs a square matrix and terms >= 1",
        ));
    }
    let n = a.rows();
    let mut power = Matrix::identity(n);
    let mut sum = Matrix::identity(n);
    for _ in 1..terms {
        power = mul(&power, a);
        sum = sum.add(&power);
    }
    Ok(sum)
}

/// `prod_{k=0}^{depth} (A^{2^k} + I)`, multiplied left to right.
pub fn neumann_product(a: &Matrix, depth: u32) -> Matrix {
    let n = a.rows();
    let id = Matrix::identity(n);
    let mut square = a.clone();
    let mut prod = Matrix::identity(n);
    for _ in 0..=depth {
        prod = mul(&prod, &square.add(&id));
        square = mul(&square, &square);
    }
    prod
}

/// `2^{2^{depth+1}-1} prod_{k=0}^{depth} ((A/2)^{2^k} + (I/2)^{2^k})`.
pub fn neumann_product_rescaled(a: &Matrix, depth: u32) -> Matrix {
    let n = a.rows();
    let mut square = a.scaled(0.5);
    let mut shift = 0.5;
    let mut prod = Matrix::identity(n);
    for _ in 0..=depth {
        prod = mul(&prod, &square.add(&Matrix::identity(n).scaled(shift)));
        square = mul(&square, &square);
        shift *= shift;
    }
    let exponent = (1i32 << (depth + 1)) - 1;
    prod.scaled(2f64.powi(exponent))
}

/// Inverse by Gauss-Jordan elimination with partial pivoting.
///
/// Rejects the matrix when a pivot falls below `1e-12 |A|_inf`.
pub fn exact_inverse(a: &Matrix) -> Result<Matrix> {
    let n = a.rows();
    if n != a.cols() {
        return Err(MnnError::param("only square matrices have inverses"));
    }
    let threshold = 1e-12 * a.max_abs();
    let mut work = a.clone();
    let mut inv = Matrix::identity(n);
    for col in 0..n {
        let pivot_row = (col..n)
            .max_by(|&r, &s| work[(r, col)].abs().total_cmp(&work[(s, col)].abs()))
            .expect("nonempty range");
        let pivot = work[(pivot_row, col)];
        if pivot.abs() <= threshold || pivot.is_nan() {
            return Err(MnnError::Singular {
                column: col + 1,
                pivot,
                threshold,
            });
        }
        if pivot_row != col {
            for j in 0..n {
                let t = work[(col, j)];
                work[(col, j)] = work[(pivot_row, j)];
                work[(pivot_row, j)] = t;
                let t = inv[(col, j)];
                inv[(col, j)] = inv[(pivot_row, j)];
                inv[(pivot_row, j)] = t;
            }
        }
        for j in 0..n {
            work[(col, j)] /= pivot;
            inv[(col, j)] /= pivot;
        }
        for r in 0..n {
            if r == col {
                continue;
            }
            let factor = work[(r, col)];
            if factor == 0.0 {
                continue;
            }
            for j in 0..n {
                work[(r, j)] -= factor * work[(col, j)];
                inv[(r, j)] -= factor * inv[(col, j)];
            }
        }
    }
    Ok(inv)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpectralNorm {
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
}

const POWER_TOLERANCE: f64 = 1e-12;
const POWER_MAX_ITERATIONS: usize = 100_000;

fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn gram_apply(a: &Matrix, v: &[f64]) -> Vec<f64> {
    let av: Vec<f64> = (0..a.rows())
        .map(|i| a.row(i).iter().zip(v).map(|(x, y)| x * y).sum())
        .collect();
    (0..a.cols())
        .map(|j| (0..a.rows()).map(|i| a[(i, j)] * av[i]).sum())
        .collect()
}

/// Largest singular value by power iteration on `A^T A`.
///
/// Starts from the normalized all-ones vector; if an iterate vanishes it
/// restarts once from a fixed perturbed vector. Converged once the eigen
/// residual `|A^T A v - lambda v|` drops below `1e-12 lambda`.
pub fn spectral_norm(a: &Matrix) -> SpectralNorm {
    let n = a.cols();
    if a.max_abs() == 0.0 {
        return SpectralNorm {
            value: 0.0,
            iterations: 0,
            converged: true,
        };
    }
    let normalize = |v: Vec<f64>| {
        let s = norm2(&v);
        v.into_iter().map(|x| x / s).collect::<Vec<_>>()
    };
    let perturbed: Vec<f64> = (0..n)
        .map(|i| 1.0 + 0.5 * ((i * 7 + 3) % 11) as f64)
        .collect();
    let mut v = normalize(vec![1.0; n]);
    let mut restarted = false;
    let mut lambda = 0.0;
    for iteration in 1..=POWER_MAX_ITERATIONS {
        let w = gram_apply(a, &v);
        let w_norm = norm2(&w);
        if w_norm == 0.0 {
            if restarted {
                break;
            }
            restarted = true;
            v = normalize(perturbed.clone());
            continue;
        }
        lambda = v.iter().zip(&w).map(|(x, y)| x * y).sum::<f64>();
        let residual = norm2(
            &w.iter()
                .zip(&v)
                .map(|(wi, vi)| wi - lambda * vi)
                .collect::<Vec<_>>(),
        );
        v = w.into_iter().map(|x| x / w_norm).collect();
        if residual <= POWER_TOLERANCE * lambda {
            return SpectralNorm {
                value: lambda.max(0.0).sqrt(),
                iterations: iteration,
                converged: true,
            };
        }
    }
    SpectralNorm {
        value: lambda.max(0.0).sqrt(),
        iterations: POWER_MAX_ITERATIONS,
        converged: false,
    }
}

pub fn spectral_norm_value(a: &Matrix) -> f64 {
    spectral_norm(a).value
}

/// Orthonormalizes the columns of `g` by modified Gram-Schmidt.
fn orthonormalize(g: &Matrix) -> Matrix {
    let n = g.rows();
    let mut cols: Vec<Vec<f64>> = (0..g.cols())
        .map(|j| (0..n).map(|i| g[(i, j)]).collect())
        .collect();
    for j in 0..cols.len() {
        for prev in 0..j {
            let dot: f64 = cols[j].iter().zip(&cols[prev]).map(|(x, y)| x * y).sum();
            let p = cols[prev].clone();
            for (x, y) in cols[j].iter_mut().zip(&p) {
                *x -= dot * y;
            }
        }
        let s = norm2(&cols[j]);
        for x in cols[j].iter_mut() {
            *x /= s;
        }
    }
    Matrix::from_fn(n, g.cols(), |i, j| cols[j][i])
}

/// A random matrix `A = (I - B) / alpha` with `B = Q D Q^T` symmetric and
/// `|B|_2 <= delta`, so that `|I - alpha A|_2 <= delta`.
#[derive(Clone, Debug)]
pub struct Contraction {
    pub a: Matrix,
    pub b: Matrix,
}

pub fn gen_contraction(
    n: usize,
    delta: f64,
    alpha: f64,
    seed: Seed,
    stream: u64,
) -> Result<Contraction> {
    if n == 0 || !(0.0..1.0).contains(&delta) || !(alpha > 0.0 && alpha.is_finite()) {
        return Err(MnnError::param(format!(
            "contraction needs n >= 1, delta in [0, 1) and alpha > 0 (got n={n}, delta={delta}, alpha={alpha})"
        )));
    }
    let mut rng = seed.rng(stream);
    let q = orthonormalize(&random_gaussian(n, n, &mut rng));
    let d: Vec<f64> = (0..n).map(|_| rng.random_range(-delta..=delta)).collect();
    let qd = Matrix::from_fn(n, n, |i, k| q[(i, k)] * d[k]);
    let b = mul(&qd, &q.transpose());
    let b = b.add(&b.transpose()).scaled(0.5);
    let a = Matrix::identity(n).sub(&b).scaled(1.0 / alpha);
    Ok(Contraction { a, b })
}

/// A Gaussian matrix rescaled to spectral norm uniform in `[0, max_norm)`.
pub fn gen_bounded_norm(n: usize, max_norm: f64, seed: Seed, stream: u64) -> Matrix {
    let mut rng = seed.rng(stream);
    let g = random_gaussian(n, n, &mut rng);
    let target = rng.random_range(0.0..max_norm) * (1.0 - 1e-9);
    let norm = spectral_norm_value(&g);
    if norm == 0.0 {
        return g;
    }
    g.scaled(target / norm)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn naive_products() {
        let x = Matrix::from_rows(&[[1.5, -2.0], [0.25, 3.0]]);
        assert_eq!(matmul_naive(&Matrix::identity(2), &x).unwrap(), x);
        let a = Matrix::from_rows(&[[1.0, 2.0], [3.0, 4.0]]);
        let b = Matrix::from_rows(&[[5.0, 6.0], [7.0, 8.0]]);
        assert_eq!(
            matmul_naive(&a, &b).unwrap(),
            Matrix::from_rows(&[[19.0, 22.0], [43.0, 50.0]])
        );
        assert_eq!(
            matmul_naive(&a, &Matrix::zeros(2, 3)).unwrap(),
            Matrix::zeros(2, 3)
        );
        assert!(matmul_naive(&a, &Matrix::zeros(3, 3)).is_err());
    }

    #[test]
    fn strassen_small_cases() {
        let three = Matrix::from_rows(&[[3.0]]);
        let four = Matrix::from_rows(&[[4.0]]);
        assert_eq!(strassen_exact(&three, &four).unwrap()[(0, 0)], 12.0);
        let mut rng = Seed(7).rng(0);
        let x = random_uniform(4, 4, -1.0, 1.0, &mut rng);
        assert_eq!(strassen_exact(&Matrix::identity(4), &x).unwrap(), x);
        assert!(strassen_exact(&Matrix::zeros(3, 3), &Matrix::zeros(3, 3)).is_err());
    }

    #[test]
    fn strassen_matches_naive() {
        let seed = Seed(DEFAULT_SEED);
        for stream in 0..200 {
            let mut rng = seed.rng(stream);
            let a = random_uniform(8, 8, -1.0, 1.0, &mut rng);
            let b = random_uniform(8, 8, -1.0, 1.0, &mut rng);
            let naive = matmul_naive(&a, &b).unwrap();
            let fast = strassen_exact(&a, &b).unwrap();
            let dev = fast.sub(&naive).max_abs() / naive.max_abs().max(1.0);
            assert!(dev <= 1e-10, "stream {stream}: {dev}");
        }
    }

    #[test]
    fn neumann_partial_cases() {
        let id = Matrix::identity(2);
        assert_eq!(neumann_partial(&Matrix::zeros(2, 2), 4).unwrap(), id);
        assert_eq!(
            neumann_partial(&Matrix::diag(&[0.5, 0.5]), 4).unwrap(),
            Matrix::diag(&[1.875, 1.875])
        );
        let x = Matrix::from_rows(&[[3.0, 1.0], [-2.0, 0.5]]);
        assert_eq!(neumann_partial(&x, 1).unwrap(), id);
        assert!(neumann_partial(&x, 0).is_err());
    }

    #[test]
    fn inverse_cases() {
        assert_eq!(
            exact_inverse(&Matrix::diag(&[2.0, 4.0])).unwrap(),
            Matrix::diag(&[0.5, 0.25])
        );
        assert_eq!(
            exact_inverse(&Matrix::identity(5)).unwrap(),
            Matrix::identity(5)
        );
        let singular = Matrix::from_rows(&[[1.0, 2.0], [2.0, 4.0]]);
        assert!(matches!(
            exact_inverse(&singular),
            Err(MnnError::Singular { .. })
        ));
        let mut rng = Seed(3).rng(1);
        for n in 1..=8 {
            let a = random_uniform(n, n, -1.0, 1.0, &mut rng)
                .add(&Matrix::identity(n).scaled(n as f64));
            let x = exact_inverse(&a).unwrap();
            let residual = matmul_naive(&a, &x)
                .unwrap()
                .sub(&Matrix::identity(n))
                .max_abs();
            assert!(residual <= 1e-8, "n={n}: {residual}");
        }
    }

    #[test]
    fn spectral_norm_cases() {
        assert!((spectral_norm_value(&Matrix::diag(&[3.0, 4.0])) - 4.0).abs() < 1e-12);
        let nilpotent = Matrix::from_rows(&[[0.0, 1.0], [0.0, 0.0]]);
        assert!((spectral_norm_value(&nilpotent) - 1.0).abs() < 1e-12);
        assert_eq!(spectral_norm_value(&Matrix::zeros(3, 3)), 0.0);
        // all-ones start vector is orthogonal to the top singular vector
        let orth = Matrix::from_rows(&[[1.0, -1.0], [0.0, 0.0]]);
        let s = spectral_norm(&orth);
        assert!(s.converged);
        assert!((s.value - 2f64.sqrt()).abs() < 1e-12, "{}", s.value);
    }

    #[test]
    fn spectral_norm_symmetric_closed_form() {
        // 2x2 symmetric: eigenvalues (a+c)/2 +- sqrt(((a-c)/2)^2 + b^2)
        for stream in 0..100 {
            let mut rng = Seed(11).rng(stream);
            let a: f64 = rng.random_range(-1.0..1.0);
            let b: f64 = rng.random_range(-1.0..1.0);
            let c: f64 = rng.random_range(-1.0..1.0);
            let mid = (a + c) / 2.0;
            let rad = (((a - c) / 2.0).powi(2) + b * b).sqrt();
            let expected = (mid + rad).abs().max((mid - rad).abs());
            let got = spectral_norm_value(&Matrix::from_rows(&[[a, b], [b, c]]));
            assert!(
                (got - expected).abs() <= 1e-10,
                "stream {stream}: {got} vs {expected}"
            );
        }
    }

    #[test]
    fn contraction_generator() {
        let c = gen_contraction(2, 0.5, 1.0, Seed(42), 0).unwrap();
        let norm = spectral_norm_value(&Matrix::identity(2).sub(&c.a));
        assert!(norm <= 0.5 + 1e-10, "{norm}");
        assert!(c.b.sub(&c.b.transpose()).max_abs() <= 1e-12);

        let flat = gen_contraction(3, 0.0, 2.0, Seed(1), 0).unwrap();
        assert!(flat.a.sub(&Matrix::identity(3).scaled(0.5)).max_abs() <= 1e-15);

        for stream in 0..20 {
            let c = gen_contraction(6, 0.9, 2.0, Seed(5), stream).unwrap();
            let norm = spectral_norm_value(&Matrix::identity(6).sub(&c.a.scaled(2.0)));
            assert!(norm <= 0.9 + 1e-10);
        }
        assert!(gen_contraction(2, 1.0, 1.0, Seed(1), 0).is_err());
        assert!(gen_contraction(2, 0.5, -1.0, Seed(1), 0).is_err());
    }

    #[test]
    fn seeded_streams_are_reproducible() {
        let a = random_uniform(3, 3, -1.0, 1.0, &mut Seed(9).rng(4));
        let b = random_uniform(3, 3, -1.0, 1.0, &mut Seed(9).rng(4));
        let c = random_uniform(3, 3, -1.0, 1.0, &mut Seed(9).rng(5));
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn bounded_norm_generator() {
        for stream in 0..50 {
            let a = gen_bounded_norm(4, 0.5, Seed(2), stream);
            assert!(spectral_norm_value(&a) <= 0.5);
        }
    }
}
