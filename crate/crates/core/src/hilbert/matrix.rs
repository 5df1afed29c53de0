use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{PcsftError, Result};
use crate::sum::pairwise_sum_by;

/// Dense square complex matrix, row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<[f64; 2]>>", into = "Vec<Vec<[f64; 2]>>")]
pub struct CMatrix {
    dim: usize,
    data: Vec<Complex64>,
}

impl CMatrix {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![Complex64::new(0.0, 0.0); dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self::from_real_diag(&vec![1.0; dim])
    }

    pub fn from_real_diag(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (j, &d) in diag.iter().enumerate() {
            m[(j, j)] = Complex64::new(d, 0.0);
        }
        m
    }

    /// Builds a matrix from row-major data of length `dim * dim`.
    pub fn from_vec(dim: usize, data: Vec<Complex64>) -> Result<Self> {
        if data.len() != dim * dim {
            return Err(PcsftError::Dimension {
                expected: dim * dim,
                found: data.len(),
            });
        }
        Ok(Self { dim, data })
    }

    pub fn from_rows(rows: Vec<Vec<Complex64>>) -> Result<Self> {
        let dim = rows.len();
        let mut data = Vec::with_capacity(dim * dim);
        for row in rows {
            if row.len() != dim {
                return Err(PcsftError::Dimension {
                    expected: dim,
                    found: row.len(),
                });
            }
            data.extend(row);
        }
        Ok(Self { dim, data })
    }

    /// `|a><b|`, i.e. entries `a_j * conj(b_k)`.
    pub fn outer(a: &[Complex64], b: &[Complex64]) -> Result<Self> {
        if a.len() != b.len() {
            return Err(PcsftError::Dimension {
                expected: a.len(),
                found: b.len(),
            });
        }
        let dim = a.len();
        let mut data = Vec::with_capacity(dim * dim);
        for aj in a {
            data.extend(b.iter().map(|bk| aj * bk.conj()));
        }
        Ok(Self { dim, data })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn row(&self, j: usize) -> &[Complex64] {
        &self.data[j * self.dim..(j + 1) * self.dim]
    }

    pub fn rows(&self) -> Vec<Vec<Complex64>> {
        self.data.chunks(self.dim.max(1)).map(<[_]>::to_vec).collect()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn matvec(&self, v: &[Complex64]) -> Result<Vec<Complex64>> {
        self.check_dim(v.len())?;
        Ok((0..self.dim)
            .map(|j| {
                let row = self.row(j);
                pairwise_sum_by(self.dim, |k| row[k] * v[k])
            })
            .collect())
    }

    pub fn matmul(&self, other: &Self) -> Result<Self> {
        self.check_dim(other.dim)?;
        let n = self.dim;
        let mut data = Vec::with_capacity(n * n);
        for j in 0..n {
            let row = self.row(j);
            for k in 0..n {
                data.push(pairwise_sum_by(n, |l| row[l] * other.data[l * n + k]));
            }
        }
        Ok(Self { dim: n, data })
    }

    pub fn adjoint(&self) -> Self {
        let n = self.dim;
        let mut data = Vec::with_capacity(n * n);
        for j in 0..n {
            for k in 0..n {
                data.push(self.data[k * n + j].conj());
            }
        }
        Self { dim: n, data }
    }

    pub fn trace(&self) -> Complex64 {
        pairwise_sum_by(self.dim, |j| self.data[j * self.dim + j])
    }

    /// `Tr(self * other)` without forming the product.
    pub fn trace_product(&self, other: &Self) -> Result<Complex64> {
        self.check_dim(other.dim)?;
        let n = self.dim;
        Ok(pairwise_sum_by(n * n, |idx| {
            let (j, k) = (idx / n, idx % n);
            self.data[idx] * other.data[k * n + j]
        }))
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            dim: self.dim,
            data: self.data.iter().map(|z| z * s).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn frobenius_norm(&self) -> f64 {
        pairwise_sum_by(self.data.len(), |i| self.data[i].norm_sqr()).sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// `max_{j,k} |M_jk - conj(M_kj)|`.
    pub fn hermitian_deviation(&self) -> f64 {
        let n = self.dim;
        let mut dev = 0.0_f64;
        for j in 0..n {
            for k in j..n {
                let d = (self.data[j * n + k] - self.data[k * n + j].conj()).norm();
                dev = dev.max(d);
            }
        }
        dev
    }

    fn zip_with(&self, other: &Self, f: impl Fn(Complex64, Complex64) -> Complex64) -> Result<Self> {
        self.check_dim(other.dim)?;
        Ok(Self {
            dim: self.dim,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    fn check_dim(&self, found: usize) -> Result<()> {
        if found != self.dim {
            return Err(PcsftError::Dimension {
                expected: self.dim,
                found,
            });
        }
        Ok(())
    }
}

impl std::ops::Index<(usize, usize)> for CMatrix {
    type Output = Complex64;

    fn index(&self, (j, k): (usize, usize)) -> &Complex64 {
        &self.data[j * self.dim + k]
    }
}

impl std::ops::IndexMut<(usize, usize)> for CMatrix {
    fn index_mut(&mut self, (j, k): (usize, usize)) -> &mut Complex64 {
        &mut self.data[j * self.dim + k]
    }
}

impl TryFrom<Vec<Vec<[f64; 2]>>> for CMatrix {
    type Error = PcsftError;

    fn try_from(rows: Vec<Vec<[f64; 2]>>) -> Result<Self> {
        CMatrix::from_rows(
            rows.into_iter()
                .map(|r| r.into_iter().map(|[re, im]| Complex64::new(re, im)).collect())
                .collect(),
        )
    }
}

impl From<CMatrix> for Vec<Vec<[f64; 2]>> {
    fn from(m: CMatrix) -> Self {
        m.rows()
            .into_iter()
            .map(|r| r.into_iter().map(|z| [z.re, z.im]).collect())
            .collect()
    }
}
