use std::fmt;

use num_complex::Complex64;

use crate::error::{Error, Result};

pub type Amplitude = Complex64;

/// Tolerance for `U†U = I` checks.
pub const UNITARY_TOL: f64 = 1e-10;

const ZERO: Amplitude = Complex64::new(0.0, 0.0);
const ONE: Amplitude = Complex64::new(1.0, 0.0);

/// Dense square complex matrix, row-major.
#[derive(Clone, PartialEq)]
pub struct Operator {
    dim: usize,
    data: Vec<Amplitude>,
}

impl Operator {
    pub fn from_rows(dim: usize, data: Vec<Amplitude>) -> Result<Self> {
        if dim == 0 || data.len() != dim * dim {
            return Err(Error::Usage(format!(
                "{} entries cannot form a {dim}x{dim} matrix",
                data.len()
            )));
        }
        if data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::Validation("matrix has non-finite entries".into()));
        }
        Ok(Self { dim, data })
    }

    /// Builds from real row-major entries.
    pub fn from_real(dim: usize, data: &[f64]) -> Result<Self> {
        Self::from_rows(dim, data.iter().map(|&x| Complex64::new(x, 0.0)).collect())
    }

    pub fn identity(dim: usize) -> Self {
        let mut data = vec![ZERO; dim * dim];
        for i in 0..dim {
            data[i * dim + i] = ONE;
        }
        Self { dim, data }
    }

    /// Matrix whose columns are the given vectors.
    pub fn from_columns(columns: &[Vec<Amplitude>]) -> Result<Self> {
        let dim = columns.len();
        if columns.iter().any(|c| c.len() != dim) {
            return Err(Error::Usage("columns must form a square matrix".into()));
        }
        let mut data = vec![ZERO; dim * dim];
        for (c, col) in columns.iter().enumerate() {
            for (r, &v) in col.iter().enumerate() {
                data[r * dim + c] = v;
            }
        }
        Self::from_rows(dim, data)
    }

    pub fn hadamard() -> Self {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        Self::from_real(2, &[h, h, h, -h]).unwrap()
    }

    pub fn pauli_x() -> Self {
        Self::from_real(2, &[0.0, 1.0, 1.0, 0.0]).unwrap()
    }

    /// Standard CNOT on (control, target), control most significant.
    pub fn cnot() -> Self {
        #[rustfmt::skip]
        let m = [
            1.0, 0.0, 0.0, 0.0,
            0.0, 1.0, 0.0, 0.0,
            0.0, 0.0, 0.0, 1.0,
            0.0, 0.0, 1.0, 0.0,
        ];
        Self::from_real(4, &m).unwrap()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, row: usize, col: usize) -> Amplitude {
        self.data[row * self.dim + col]
    }

    pub fn column(&self, col: usize) -> Vec<Amplitude> {
        (0..self.dim).map(|r| self.get(r, col)).collect()
    }

    pub fn adjoint(&self) -> Self {
        let n = self.dim;
        let mut data = vec![ZERO; n * n];
        for r in 0..n {
            for c in 0..n {
                data[c * n + r] = self.data[r * n + c].conj();
            }
        }
        Self { dim: n, data }
    }

    pub fn matmul(&self, other: &Self) -> Result<Self> {
        if self.dim != other.dim {
            return Err(Error::Usage("matrix dimensions differ".into()));
        }
        let n = self.dim;
        let mut data = vec![ZERO; n * n];
        for r in 0..n {
            for k in 0..n {
                let a = self.data[r * n + k];
                if a == ZERO {
                    continue;
                }
                for c in 0..n {
                    data[r * n + c] += a * other.data[k * n + c];
                }
            }
        }
        Ok(Self { dim: n, data })
    }

    /// Kronecker product `self ⊗ other`.
    pub fn kron(&self, other: &Self) -> Self {
        let (a, b) = (self.dim, other.dim);
        let n = a * b;
        let mut data = vec![ZERO; n * n];
        for r1 in 0..a {
            for c1 in 0..a {
                let x = self.data[r1 * a + c1];
                for r2 in 0..b {
                    for c2 in 0..b {
                        data[(r1 * b + r2) * n + c1 * b + c2] = x * other.data[r2 * b + c2];
                    }
                }
            }
        }
        Self { dim: n, data }
    }

    /// Largest entry-wise deviation of `U†U` from the identity.
    pub fn unitarity_defect(&self) -> f64 {
        let product = self.adjoint().matmul(self).expect("same dimension");
        let identity = Self::identity(self.dim);
        product
            .data
            .iter()
            .zip(&identity.data)
            .map(|(x, y)| (x - y).norm())
            .fold(0.0, f64::max)
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        self.unitarity_defect() <= tol
    }

    pub fn apply(&self, v: &[Amplitude]) -> Vec<Amplitude> {
        let n = self.dim;
        (0..n)
            .map(|r| (0..n).map(|c| self.data[r * n + c] * v[c]).sum())
            .collect()
    }

    /// Parses whitespace-separated `re,im` pairs in row-major order.
    pub fn parse_text(text: &str) -> Result<Self> {
        let entries = text
            .split_whitespace()
            .map(|tok| {
                let (re, im) = tok
                    .split_once(',')
                    .ok_or_else(|| Error::Parse(format!("expected re,im pair, got {tok:?}")))?;
                let re: f64 = re
                    .trim()
                    .parse()
                    .map_err(|_| Error::Parse(format!("bad real part in {tok:?}")))?;
                let im: f64 = im
                    .trim()
                    .parse()
                    .map_err(|_| Error::Parse(format!("bad imaginary part in {tok:?}")))?;
                Ok(Complex64::new(re, im))
            })
            .collect::<Result<Vec<_>>>()?;
        let dim = (entries.len() as f64).sqrt().round() as usize;
        if dim * dim != entries.len() || dim == 0 {
            return Err(Error::Parse(format!(
                "{} entries do not form a square matrix",
                entries.len()
            )));
        }
        Self::from_rows(dim, entries)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for r in 0..self.dim {
            let row: Vec<String> = (0..self.dim)
                .map(|c| {
                    let z = self.get(r, c);
                    format!("{},{}", z.re, z.im)
                })
                .collect();
            out.push_str(&row.join(" "));
            out.push('\n');
        }
        out
    }
}

impl fmt::Debug for Operator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Operator({}x{})", self.dim, self.dim)?;
        for r in 0..self.dim {
            let row: Vec<String> = (0..self.dim)
                .map(|c| {
                    let z = self.get(r, c);
                    format!("{:+.4}{:+.4}i", z.re, z.im)
                })
                .collect();
            writeln!(f, "  [{}]", row.join(", "))?;
        }
        Ok(())
    }
}
