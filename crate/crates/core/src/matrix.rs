//! Small dense symmetric-matrix kernels and reproducible random streams.
//!
//! Every covariance in the pipeline is an [`SpdMatrix`]: the matrix is
//! symmetrized and Cholesky-factored once at construction, and all
//! determinants and quadratic forms go through that factor.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::RngCore;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};

/// Absolute tolerance for accepting an input as symmetric.
pub const SYMMETRY_TOL: f64 = 1e-10;

/// Lower-triangular Cholesky factor of a symmetric matrix.
///
/// Fails with [`Error::NotPositiveDefinite`] as soon as a pivot is not
/// strictly positive.
pub fn cholesky_lower(a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: a.ncols(),
        });
    }
    let mut l = DMatrix::<f64>::zeros(n, n);
    for j in 0..n {
        let mut pivot = a[(j, j)];
        for k in 0..j {
            pivot -= l[(j, k)] * l[(j, k)];
        }
        if !(pivot > 0.0) || !pivot.is_finite() {
            return Err(Error::NotPositiveDefinite);
        }
        let d = pivot.sqrt();
        l[(j, j)] = d;
        for i in (j + 1)..n {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / d;
        }
    }
    Ok(l)
}

/// A symmetric positive definite matrix together with its Cholesky factor.
#[derive(Debug, Clone, PartialEq)]
pub struct SpdMatrix {
    m: DMatrix<f64>,
    l: DMatrix<f64>,
}

impl SpdMatrix {
    /// Validates symmetry, symmetrizes as `(m + mᵀ)/2` and factorizes.
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        let p = m.nrows();
        if m.ncols() != p {
            return Err(Error::DimensionMismatch {
                expected: p,
                found: m.ncols(),
            });
        }
        if p == 0 {
            return Err(Error::EmptyInput);
        }
        for i in 0..p {
            for j in (i + 1)..p {
                if (m[(i, j)] - m[(j, i)]).abs() > SYMMETRY_TOL {
                    return Err(Error::InvalidConfig(format!(
                        "matrix not symmetric at ({i}, {j}): {} vs {}",
                        m[(i, j)],
                        m[(j, i)]
                    )));
                }
            }
        }
        let m = symmetrize(&m);
        let l = cholesky_lower(&m)?;
        Ok(Self { m, l })
    }

    pub fn from_rows(rows: &[&[f64]]) -> Result<Self> {
        let p = rows.len();
        for r in rows {
            if r.len() != p {
                return Err(Error::DimensionMismatch {
                    expected: p,
                    found: r.len(),
                });
            }
        }
        Self::new(DMatrix::from_fn(p, p, |i, j| rows[i][j]))
    }

    pub fn identity(p: usize) -> Self {
        Self {
            m: DMatrix::identity(p, p),
            l: DMatrix::identity(p, p),
        }
    }

    pub fn from_diagonal(d: &[f64]) -> Result<Self> {
        Self::new(DMatrix::from_diagonal(&DVector::from_column_slice(d)))
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.m
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.m
    }

    /// Lower Cholesky factor `L` with `L·Lᵀ = m`.
    pub fn cholesky(&self) -> &DMatrix<f64> {
        &self.l
    }

    /// Log determinant as twice the sum of log pivots.
    pub fn log_det(&self) -> f64 {
        2.0 * self.l.diagonal().iter().map(|d| d.ln()).sum::<f64>()
    }

    /// `xᵀ m⁻¹ x`, by forward substitution against the Cholesky factor.
    pub fn quad_form(&self, x: &DVector<f64>) -> Result<f64> {
        self.check_dim(x.len())?;
        let z = self.forward_solve(x);
        Ok(z.norm_squared())
    }

    /// Solves `L z = x`.
    pub fn forward_solve(&self, x: &DVector<f64>) -> DVector<f64> {
        let p = self.dim();
        let mut z = DVector::<f64>::zeros(p);
        for i in 0..p {
            let mut s = x[i];
            for k in 0..i {
                s -= self.l[(i, k)] * z[k];
            }
            z[i] = s / self.l[(i, i)];
        }
        z
    }

    /// Multiplies by a positive scalar; the factor scales by its square root.
    pub fn scaled(&self, k: f64) -> Result<Self> {
        if !(k > 0.0) || !k.is_finite() {
            return Err(Error::NotPositiveDefinite);
        }
        Ok(Self {
            m: &self.m * k,
            l: &self.l * k.sqrt(),
        })
    }

    /// Inverse of the symmetric square root from the spectral decomposition.
    pub fn inv_sqrt(&self) -> DMatrix<f64> {
        let eig = SymmetricEigen::new(self.m.clone());
        let scale = eig.eigenvalues.map(|v| 1.0 / v.sqrt());
        let q = &eig.eigenvectors;
        let r = q * DMatrix::from_diagonal(&scale) * q.transpose();
        symmetrize(&r)
    }

    fn check_dim(&self, n: usize) -> Result<()> {
        if n != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: n,
            });
        }
        Ok(())
    }
}

pub fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// Log determinant through the Cholesky factor.
pub fn log_det(m: &SpdMatrix) -> f64 {
    m.log_det()
}

pub fn quad_form(x: &DVector<f64>, m: &SpdMatrix) -> Result<f64> {
    m.quad_form(x)
}

pub fn sym_inv_sqrt(m: &SpdMatrix) -> DMatrix<f64> {
    m.inv_sqrt()
}

/// Draws `n` i.i.d. vectors `mean + L·z` with `z` standard normal.
pub fn sample_mvn(
    mean: &DVector<f64>,
    cov: &SpdMatrix,
    n: usize,
    rng: &mut RngStream,
) -> Result<Vec<DVector<f64>>> {
    cov.check_dim(mean.len())?;
    let p = mean.len();
    let l = cov.cholesky();
    let mut out = Vec::with_capacity(n);
    let mut z = DVector::<f64>::zeros(p);
    for _ in 0..n {
        for zi in z.iter_mut() {
            *zi = rng.standard_normal();
        }
        out.push(mean + l * &z);
    }
    Ok(out)
}

/// Seeded ChaCha8 stream.
///
/// Child streams are keyed by `(seed, index)` through SplitMix64, so a
/// batch of replications produces the same numbers no matter how the
/// work is scheduled.
#[derive(Debug, Clone)]
pub struct RngStream {
    seed: u64,
    rng: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Independent stream for replication `index`.
    pub fn child(&self, index: u64) -> Self {
        let a = splitmix64(self.seed);
        let b = splitmix64(index ^ 0xA076_1D64_78BD_642F);
        Self::new(splitmix64(a ^ b.rotate_left(17)))
    }

    pub fn standard_normal(&mut self) -> f64 {
        StandardNormal.sample(&mut self.rng)
    }

    /// Uniform on [0, 1).
    pub fn uniform(&mut self) -> f64 {
        (self.rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.rng.fill_bytes(dst)
    }
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}
