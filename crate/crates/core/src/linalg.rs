//! Small dense matrices, a cyclic Jacobi eigensolver and matrix
//! exponentials.
//!
//! The matrices in this crate are tiny (ring sizes up to a few dozen), so a
//! self-contained dense implementation doubles as an independent oracle for
//! the closed-form spectra. The exponential uses Higham's scaling-and-squaring
//! Padé-13 scheme for general input and an eigendecomposition route for
//! symmetric input; the two agree to ~1e-12 and are cross-checked in tests.

use alloc::vec;
use alloc::vec::Vec;

use crate::math;
use crate::{Result, SimError};

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DMatrix {
    n_rows: usize,
    n_cols: usize,
    data: Vec<f64>,
}

impl DMatrix {
    pub fn zeros(n_rows: usize, n_cols: usize) -> Self {
        DMatrix {
            n_rows,
            n_cols,
            data: vec![0.0; n_rows * n_cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_fn(n_rows: usize, n_cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(n_rows, n_cols);
        for i in 0..n_rows {
            for j in 0..n_cols {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    #[inline]
    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    #[inline]
    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn is_square(&self) -> bool {
        self.n_rows == self.n_cols
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        if !self.is_square() {
            return false;
        }
        for i in 0..self.n_rows {
            for j in 0..i {
                if math::abs(self[(i, j)] - self[(j, i)]) > tol {
                    return false;
                }
            }
        }
        true
    }

    pub fn matmul(&self, other: &DMatrix) -> DMatrix {
        assert_eq!(self.n_cols, other.n_rows);
        let mut out = DMatrix::zeros(self.n_rows, other.n_cols);
        for i in 0..self.n_rows {
            for k in 0..self.n_cols {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                for j in 0..other.n_cols {
                    out[(i, j)] += a * other[(k, j)];
                }
            }
        }
        out
    }

    /// Matrix-vector product.
    pub fn matvec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(self.n_cols, v.len());
        let mut out = vec![0.0; self.n_rows];
        for i in 0..self.n_rows {
            let mut acc = 0.0;
            for j in 0..self.n_cols {
                acc += self[(i, j)] * v[j];
            }
            out[i] = acc;
        }
        out
    }

    pub fn scale(&self, s: f64) -> DMatrix {
        DMatrix {
            n_rows: self.n_rows,
            n_cols: self.n_cols,
            data: self.data.iter().map(|x| x * s).collect(),
        }
    }

    pub fn add(&self, other: &DMatrix) -> DMatrix {
        assert_eq!((self.n_rows, self.n_cols), (other.n_rows, other.n_cols));
        DMatrix {
            n_rows: self.n_rows,
            n_cols: self.n_cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    pub fn sub(&self, other: &DMatrix) -> DMatrix {
        assert_eq!((self.n_rows, self.n_cols), (other.n_rows, other.n_cols));
        DMatrix {
            n_rows: self.n_rows,
            n_cols: self.n_cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }

    pub fn transpose(&self) -> DMatrix {
        DMatrix::from_fn(self.n_cols, self.n_rows, |i, j| self[(j, i)])
    }

    /// Maximum absolute column sum.
    pub fn norm_l1(&self) -> f64 {
        (0..self.n_cols)
            .map(|j| (0..self.n_rows).map(|i| math::abs(self[(i, j)])).sum())
            .fold(0.0, f64::max)
    }

    pub fn norm_frobenius(&self) -> f64 {
        math::sqrt(self.data.iter().map(|x| x * x).sum())
    }

    pub fn max_abs(&self) -> f64 {
        math::max_abs(&self.data)
    }

    /// Solve `self * X = rhs` in place of `rhs` by LU with partial pivoting.
    pub fn lu_solve(&self, rhs: &DMatrix) -> Result<DMatrix> {
        assert!(self.is_square());
        assert_eq!(self.n_rows, rhs.n_rows);
        let n = self.n_rows;
        let mut a = self.clone();
        let mut b = rhs.clone();
        for col in 0..n {
            let mut pivot = col;
            let mut best = math::abs(a[(col, col)]);
            for row in col + 1..n {
                let v = math::abs(a[(row, col)]);
                if v > best {
                    best = v;
                    pivot = row;
                }
            }
            if best == 0.0 {
                return Err(SimError::Numeric("singular matrix in LU solve".into()));
            }
            if pivot != col {
                for j in 0..n {
                    a.data.swap(col * n + j, pivot * n + j);
                }
                for j in 0..b.n_cols {
                    b.data.swap(col * b.n_cols + j, pivot * b.n_cols + j);
                }
            }
            let inv = 1.0 / a[(col, col)];
            for row in col + 1..n {
                let factor = a[(row, col)] * inv;
                if factor == 0.0 {
                    continue;
                }
                a[(row, col)] = 0.0;
                for j in col + 1..n {
                    a[(row, j)] -= factor * a[(col, j)];
                }
                for j in 0..b.n_cols {
                    b[(row, j)] -= factor * b[(col, j)];
                }
            }
        }
        for col in (0..n).rev() {
            let inv = 1.0 / a[(col, col)];
            for j in 0..b.n_cols {
                b[(col, j)] *= inv;
            }
            for row in 0..col {
                let factor = a[(row, col)];
                if factor == 0.0 {
                    continue;
                }
                for j in 0..b.n_cols {
                    let t = factor * b[(col, j)];
                    b[(row, j)] -= t;
                }
            }
        }
        Ok(b)
    }
}

impl core::ops::Index<(usize, usize)> for DMatrix {
    type Output = f64;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.n_cols + j]
    }
}

impl core::ops::IndexMut<(usize, usize)> for DMatrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.n_cols + j]
    }
}

/// Eigendecomposition of a symmetric matrix.
#[derive(Debug, Clone)]
pub struct SymEigen {
    /// Eigenvalues in ascending order.
    pub values: Vec<f64>,
    /// Orthonormal eigenvectors, column `k` belongs to `values[k]`.
    pub vectors: DMatrix,
}

/// Cyclic Jacobi eigensolver for symmetric matrices.
pub fn jacobi_eigh(a: &DMatrix) -> Result<SymEigen> {
    if !a.is_square() {
        return Err(SimError::Shape("eigensolver needs a square matrix".into()));
    }
    let n = a.n_rows();
    let scale = a.max_abs().max(1.0);
    if !a.is_symmetric(1e-12 * scale) {
        return Err(SimError::InvalidParameter(
            "eigensolver needs a symmetric matrix".into(),
        ));
    }
    let mut m = a.clone();
    let mut v = DMatrix::identity(n);
    let tol = 1e-15 * m.norm_frobenius().max(f64::MIN_POSITIVE);
    for _sweep in 0..64 {
        let mut off = 0.0;
        for i in 0..n {
            for j in i + 1..n {
                off += m[(i, j)] * m[(i, j)];
            }
        }
        if math::sqrt(2.0 * off) <= tol {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = m[(p, q)];
                if math::abs(apq) <= tol / (n as f64) {
                    continue;
                }
                let tau = (m[(q, q)] - m[(p, p)]) / (2.0 * apq);
                let t = if tau >= 0.0 {
                    1.0 / (tau + math::sqrt(1.0 + tau * tau))
                } else {
                    -1.0 / (-tau + math::sqrt(1.0 + tau * tau))
                };
                let c = 1.0 / math::sqrt(1.0 + t * t);
                let s = t * c;
                // rows/columns p and q of the similarity transform
                for k in 0..n {
                    let mkp = m[(k, p)];
                    let mkq = m[(k, q)];
                    m[(k, p)] = c * mkp - s * mkq;
                    m[(k, q)] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[(p, k)];
                    let mqk = m[(q, k)];
                    m[(p, k)] = c * mpk - s * mqk;
                    m[(q, k)] = s * mpk + c * mqk;
                }
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[(i, i)].partial_cmp(&m[(j, j)]).unwrap());
    let values: Vec<f64> = order.iter().map(|&i| m[(i, i)]).collect();
    let vectors = DMatrix::from_fn(n, n, |i, k| v[(i, order[k])]);
    Ok(SymEigen { values, vectors })
}

/// `exp(A)` for symmetric `A` via eigendecomposition.
pub fn expm_symmetric(a: &DMatrix) -> Result<DMatrix> {
    let eig = jacobi_eigh(a)?;
    let n = a.n_rows();
    let q = &eig.vectors;
    Ok(DMatrix::from_fn(n, n, |i, j| {
        (0..n)
            .map(|k| q[(i, k)] * math::exp(eig.values[k]) * q[(j, k)])
            .sum()
    }))
}

/// `exp(A)` by scaling and squaring with Padé approximants (Higham's
/// degree-13 scheme).
pub fn expm(a: &DMatrix) -> Result<DMatrix> {
    if !a.is_square() {
        return Err(SimError::Shape("expm needs a square matrix".into()));
    }
    if !a.data.iter().all(|x| x.is_finite()) {
        return Err(SimError::Numeric("expm of a non-finite matrix".into()));
    }
    let l1 = a.norm_l1();
    let (u, v, squarings) = if l1 < 1.495_585_217_958_292e-2 {
        let (u, v) = pade_uv(a, &[120.0, 60.0, 12.0, 1.0]);
        (u, v, 0u32)
    } else if l1 < 2.539_398_330_063_23e-1 {
        let (u, v) = pade_uv(a, &[30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0]);
        (u, v, 0)
    } else if l1 < 9.504_178_996_162_932e-1 {
        let (u, v) = pade_uv(
            a,
            &[
                17_297_280.0,
                8_648_640.0,
                1_995_840.0,
                277_200.0,
                25_200.0,
                1512.0,
                56.0,
                1.0,
            ],
        );
        (u, v, 0)
    } else {
        const MAX_NORM: f64 = 5.371_920_351_148_152;
        let mut squarings = 0u32;
        let mut scaled = a.clone();
        if l1 > MAX_NORM {
            squarings = libm::ceil(math::ln(l1 / MAX_NORM) / core::f64::consts::LN_2) as u32;
            let mut factor = 1.0;
            for _ in 0..squarings {
                factor *= 0.5;
            }
            scaled = a.scale(factor);
        }
        let (u, v) = pade13_uv(&scaled);
        (u, v, squarings)
    };
    let numer = u.add(&v);
    let denom = v.sub(&u);
    let mut result = denom
        .lu_solve(&numer)
        .map_err(|_| SimError::Numeric("singular Padé denominator in expm".into()))?;
    for _ in 0..squarings {
        result = result.matmul(&result);
    }
    if !result.data.iter().all(|x| x.is_finite()) {
        return Err(SimError::Numeric("non-finite matrix exponential".into()));
    }
    Ok(result)
}

/// Low-degree Padé numerator/denominator split `exp(A) ≈ (V+U)/(V-U)` with
/// `U = A (b1 I + b3 A² + ...)` and `V = b0 I + b2 A² + ...`.
fn pade_uv(a: &DMatrix, b: &[f64]) -> (DMatrix, DMatrix) {
    let n = a.n_rows();
    let ident = DMatrix::identity(n);
    let a2 = a.matmul(a);
    let mut even = ident.scale(b[0]);
    let mut odd = ident.scale(b[1]);
    let mut a2k = ident;
    let mut k = 1;
    while 2 * k < b.len() {
        a2k = a2k.matmul(&a2);
        even = even.add(&a2k.scale(b[2 * k]));
        if 2 * k + 1 < b.len() {
            odd = odd.add(&a2k.scale(b[2 * k + 1]));
        }
        k += 1;
    }
    (a.matmul(&odd), even)
}

fn pade13_uv(a: &DMatrix) -> (DMatrix, DMatrix) {
    const B: [f64; 14] = [
        64_764_752_532_480_000.0,
        32_382_376_266_240_000.0,
        7_771_770_303_897_600.0,
        1_187_353_796_428_800.0,
        129_060_195_264_000.0,
        10_559_470_521_600.0,
        670_442_572_800.0,
        33_522_128_640.0,
        1_323_241_920.0,
        40_840_800.0,
        960_960.0,
        16_380.0,
        182.0,
        1.0,
    ];
    let n = a.n_rows();
    let ident = DMatrix::identity(n);
    let a2 = a.matmul(a);
    let a4 = a2.matmul(&a2);
    let a6 = a4.matmul(&a2);
    let u_inner = a6
        .scale(B[13])
        .add(&a4.scale(B[11]))
        .add(&a2.scale(B[9]));
    let u = a.matmul(
        &a6.matmul(&u_inner)
            .add(&a6.scale(B[7]))
            .add(&a4.scale(B[5]))
            .add(&a2.scale(B[3]))
            .add(&ident.scale(B[1])),
    );
    let v_inner = a6
        .scale(B[12])
        .add(&a4.scale(B[10]))
        .add(&a2.scale(B[8]));
    let v = a6
        .matmul(&v_inner)
        .add(&a6.scale(B[6]))
        .add(&a4.scale(B[4]))
        .add(&a2.scale(B[2]))
        .add(&ident.scale(B[0]));
    (u, v)
}
