//! Dense Hermitian and unitary matrix carriers.
//!
//! Real-symmetric families keep real storage so the eigensolver can take the
//! cheaper real path; everything else is complex.

use faer::Mat;
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum HermitianMatrix {
    Real(Mat<f64>),
    Complex(Mat<C64>),
}

impl HermitianMatrix {
    pub fn real_from_fn(dim: usize, f: impl FnMut(usize, usize) -> f64) -> Self {
        HermitianMatrix::Real(Mat::from_fn(dim, dim, f))
    }

    pub fn complex_from_fn(dim: usize, f: impl FnMut(usize, usize) -> C64) -> Self {
        HermitianMatrix::Complex(Mat::from_fn(dim, dim, f))
    }

    /// Builds a real matrix from row-major entries.
    pub fn from_real_rows(dim: usize, data: &[f64]) -> Result<Self> {
        if dim == 0 || data.len() != dim * dim {
            return Err(Error::invalid(format!(
                "expected {} row-major entries for dim {dim}, got {}",
                dim * dim,
                data.len()
            )));
        }
        Ok(Self::real_from_fn(dim, |i, j| data[i * dim + j]))
    }

    /// Builds a complex matrix from row-major real and imaginary parts.
    pub fn from_complex_rows(dim: usize, re: &[f64], im: &[f64]) -> Result<Self> {
        if dim == 0 || re.len() != dim * dim || im.len() != dim * dim {
            return Err(Error::invalid(format!(
                "expected {} row-major entries for dim {dim}",
                dim * dim
            )));
        }
        Ok(Self::complex_from_fn(dim, |i, j| {
            C64::new(re[i * dim + j], im[i * dim + j])
        }))
    }

    pub fn zeros(dim: usize) -> Self {
        HermitianMatrix::Real(Mat::zeros(dim, dim))
    }

    pub fn identity(dim: usize) -> Self {
        Self::real_from_fn(dim, |i, j| if i == j { 1.0 } else { 0.0 })
    }

    pub fn dim(&self) -> usize {
        match self {
            HermitianMatrix::Real(m) => m.nrows(),
            HermitianMatrix::Complex(m) => m.nrows(),
        }
    }

    pub fn is_real(&self) -> bool {
        matches!(self, HermitianMatrix::Real(_))
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        match self {
            HermitianMatrix::Real(m) => C64::new(m[(i, j)], 0.0),
            HermitianMatrix::Complex(m) => m[(i, j)],
        }
    }

    pub fn to_complex(&self) -> Mat<C64> {
        match self {
            HermitianMatrix::Real(m) => Mat::from_fn(m.nrows(), m.ncols(), |i, j| {
                C64::new(m[(i, j)], 0.0)
            }),
            HermitianMatrix::Complex(m) => m.clone(),
        }
    }

    /// Row-major real parts followed by row-major imaginary parts.
    pub fn to_rows(&self) -> (Vec<f64>, Option<Vec<f64>>) {
        let d = self.dim();
        let mut re = Vec::with_capacity(d * d);
        let mut im = Vec::with_capacity(d * d);
        for i in 0..d {
            for j in 0..d {
                let z = self.get(i, j);
                re.push(z.re);
                im.push(z.im);
            }
        }
        if self.is_real() {
            (re, None)
        } else {
            (re, Some(im))
        }
    }

    pub fn max_norm(&self) -> f64 {
        let d = self.dim();
        let mut m = 0.0f64;
        for i in 0..d {
            for j in 0..d {
                m = m.max(self.get(i, j).norm());
            }
        }
        m
    }

    /// max |H_ij - conj(H_ji)|.
    pub fn hermiticity_defect(&self) -> f64 {
        let d = self.dim();
        let mut m = 0.0f64;
        for i in 0..d {
            for j in i..d {
                m = m.max((self.get(i, j) - self.get(j, i).conj()).norm());
            }
        }
        m
    }

    pub fn max_abs_diff(&self, other: &HermitianMatrix) -> f64 {
        assert_eq!(self.dim(), other.dim());
        let d = self.dim();
        let mut m = 0.0f64;
        for i in 0..d {
            for j in 0..d {
                m = m.max((self.get(i, j) - other.get(i, j)).norm());
            }
        }
        m
    }

    /// a*x + b*y, staying real when both inputs are real.
    pub fn combine(a: f64, x: &HermitianMatrix, b: f64, y: &HermitianMatrix) -> HermitianMatrix {
        assert_eq!(x.dim(), y.dim());
        let d = x.dim();
        match (x, y) {
            (HermitianMatrix::Real(p), HermitianMatrix::Real(q)) => {
                HermitianMatrix::Real(Mat::from_fn(d, d, |i, j| a * p[(i, j)] + b * q[(i, j)]))
            }
            _ => HermitianMatrix::Complex(Mat::from_fn(d, d, |i, j| {
                x.get(i, j) * a + y.get(i, j) * b
            })),
        }
    }

    pub fn scaled(&self, s: f64) -> HermitianMatrix {
        match self {
            HermitianMatrix::Real(m) => {
                HermitianMatrix::Real(Mat::from_fn(m.nrows(), m.ncols(), |i, j| s * m[(i, j)]))
            }
            HermitianMatrix::Complex(m) => {
                HermitianMatrix::Complex(Mat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)] * s))
            }
        }
    }

    /// Matrix-vector product.
    pub fn apply(&self, v: &[C64]) -> Vec<C64> {
        let d = self.dim();
        (0..d)
            .map(|i| (0..d).map(|j| self.get(i, j) * v[j]).sum())
            .collect()
    }
}

/// Dense unitary matrix, e.g. a one-period Floquet operator.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitaryMatrix(pub Mat<C64>);

impl UnitaryMatrix {
    pub fn identity(dim: usize) -> Self {
        UnitaryMatrix(Mat::from_fn(dim, dim, |i, j| {
            if i == j {
                C64::new(1.0, 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        }))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn as_mat(&self) -> &Mat<C64> {
        &self.0
    }

    /// ||U^dagger U - I||_max.
    pub fn unitarity_defect(&self) -> f64 {
        let u = &self.0;
        let prod = u.adjoint() * u;
        let d = u.nrows();
        let mut m = 0.0f64;
        for i in 0..d {
            for j in 0..d {
                let target = if i == j { 1.0 } else { 0.0 };
                m = m.max((prod[(i, j)] - C64::new(target, 0.0)).norm());
            }
        }
        m
    }

    pub fn max_abs_diff(&self, other: &UnitaryMatrix) -> f64 {
        max_abs_diff(&self.0, &other.0)
    }

    pub fn apply(&self, v: &[C64]) -> Vec<C64> {
        let d = self.dim();
        (0..d)
            .map(|i| (0..d).map(|j| self.0[(i, j)] * v[j]).sum())
            .collect()
    }
}

pub fn max_abs_diff(a: &Mat<C64>, b: &Mat<C64>) -> f64 {
    assert_eq!(a.nrows(), b.nrows());
    assert_eq!(a.ncols(), b.ncols());
    let mut m = 0.0f64;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            m = m.max((a[(i, j)] - b[(i, j)]).norm());
        }
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn combine_stays_real() {
        let a = HermitianMatrix::identity(2);
        let b = HermitianMatrix::from_real_rows(2, &[0.0, 1.0, 1.0, 0.0]).unwrap();
        let c = HermitianMatrix::combine(2.0, &a, 3.0, &b);
        assert!(c.is_real());
        assert_eq!(c.get(0, 1).re, 3.0);
        assert_eq!(c.get(1, 1).re, 2.0);
    }

    #[test]
    fn hermiticity_defect_detects_asymmetry() {
        let m = HermitianMatrix::from_real_rows(2, &[0.0, 1.0, 2.0, 0.0]).unwrap();
        assert_eq!(m.hermiticity_defect(), 1.0);
        let z = HermitianMatrix::from_complex_rows(2, &[0.0, 1.0, 1.0, 0.0], &[0.0, 1.0, -1.0, 0.0])
            .unwrap();
        assert_eq!(z.hermiticity_defect(), 0.0);
    }

    #[test]
    fn rows_round_trip() {
        let m = HermitianMatrix::from_complex_rows(2, &[1.0, 0.5, 0.5, -1.0], &[0.0, 0.25, -0.25, 0.0])
            .unwrap();
        let (re, im) = m.to_rows();
        let back = HermitianMatrix::from_complex_rows(2, &re, &im.unwrap()).unwrap();
        assert_eq!(m, back);
    }

    #[test]
    fn bad_row_count_is_rejected() {
        assert!(HermitianMatrix::from_real_rows(2, &[1.0; 3]).is_err());
    }

    #[test]
    fn identity_is_unitary() {
        assert_eq!(UnitaryMatrix::identity(4).unitarity_defect(), 0.0);
    }
}
