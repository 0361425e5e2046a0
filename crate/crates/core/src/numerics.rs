//! Minimal dense linear-algebra and activation kernels.
//!
//! Everything is 64-bit floating point with fixed (row-major, left-to-right)
//! accumulation order so results are bit-reproducible across runs. All
//! operations are pure; values are immutable after construction.

use crate::error::{CoreError, Result};

/// Dense vector of `f64` with a fixed length.
#[derive(Debug, Clone, PartialEq)]
pub struct Vector {
    data: Vec<f64>,
}

impl Vector {
    pub fn new(data: Vec<f64>) -> Self {
        Vector { data }
    }

    pub fn zeros(len: usize) -> Self {
        Vector { data: vec![0.0; len] }
    }

    pub fn from_fn(len: usize, f: impl FnMut(usize) -> f64) -> Self {
        Vector { data: (0..len).map(f).collect() }
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn get(&self, i: usize) -> f64 {
        self.data[i]
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    pub fn inf_norm(&self) -> f64 {
        self.data.iter().fold(0.0, |acc, x| acc.max(x.abs()))
    }

    /// Element-wise in-place addition. Lengths must match.
    pub fn add_assign(&mut self, other: &Vector) -> Result<()> {
        if self.len() != other.len() {
            return Err(CoreError::contract(format!(
                "add_assign: length {} vs {}",
                self.len(),
                other.len()
            )));
        }
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += b;
        }
        Ok(())
    }

    pub fn scale(&self, s: f64) -> Vector {
        Vector::from_fn(self.len(), |i| s * self.data[i])
    }
}

/// Dense row-major matrix of `f64`.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(CoreError::contract(format!(
                "matrix {}x{} needs {} elements, got {}",
                rows,
                cols,
                rows * cols,
                data.len()
            )));
        }
        Ok(Matrix { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Matrix { rows, cols, data }
    }

    pub fn identity(n: usize) -> Self {
        Matrix::from_fn(n, n, |i, j| if i == j { 1.0 } else { 0.0 })
    }

    /// Square matrix with `d` on the diagonal, zeros elsewhere.
    pub fn diag(d: &Vector) -> Self {
        Matrix::from_fn(d.len(), d.len(), |i, j| if i == j { d.get(i) } else { 0.0 })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn get_mut(&mut self, i: usize, j: usize) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    /// Induced infinity norm (maximum absolute row sum).
    pub fn inf_norm(&self) -> f64 {
        (0..self.rows)
            .map(|i| (0..self.cols).map(|j| self.get(i, j).abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }
}

/// `M v`, accumulated in index order `j = 0..cols-1`.
pub fn matvec(m: &Matrix, v: &Vector) -> Result<Vector> {
    if m.cols() != v.len() {
        return Err(CoreError::contract(format!(
            "matvec: matrix is {}x{}, vector has length {}",
            m.rows(),
            m.cols(),
            v.len()
        )));
    }
    Ok(Vector::from_fn(m.rows(), |i| {
        let mut acc = 0.0;
        for j in 0..m.cols() {
            acc += m.get(i, j) * v.get(j);
        }
        acc
    }))
}

/// `M^T v`, accumulated in index order `i = 0..rows-1`.
pub fn matvec_t(m: &Matrix, v: &Vector) -> Result<Vector> {
    if m.rows() != v.len() {
        return Err(CoreError::contract(format!(
            "matvec_t: matrix is {}x{}, vector has length {}",
            m.rows(),
            m.cols(),
            v.len()
        )));
    }
    Ok(Vector::from_fn(m.cols(), |j| {
        let mut acc = 0.0;
        for i in 0..m.rows() {
            acc += m.get(i, j) * v.get(i);
        }
        acc
    }))
}

/// Rank-one update `M += a b^T`.
pub fn add_outer(m: &mut Matrix, a: &Vector, b: &Vector) -> Result<()> {
    if m.rows() != a.len() || m.cols() != b.len() {
        return Err(CoreError::contract(format!(
            "add_outer: matrix is {}x{}, vectors have lengths {} and {}",
            m.rows(),
            m.cols(),
            a.len(),
            b.len()
        )));
    }
    for i in 0..a.len() {
        for j in 0..b.len() {
            *m.get_mut(i, j) += a.get(i) * b.get(j);
        }
    }
    Ok(())
}

/// Element-wise (Hadamard) product.
pub fn hadamard(a: &Vector, b: &Vector) -> Result<Vector> {
    if a.len() != b.len() {
        return Err(CoreError::contract(format!(
            "hadamard: length {} vs {}",
            a.len(),
            b.len()
        )));
    }
    Ok(Vector::from_fn(a.len(), |i| a.get(i) * b.get(i)))
}

/// Element-wise sum of all terms, accumulated in list order.
pub fn axpy_sum(terms: &[&Vector]) -> Result<Vector> {
    let first = terms
        .first()
        .ok_or_else(|| CoreError::contract("axpy_sum: empty term list"))?;
    let len = first.len();
    for t in terms {
        if t.len() != len {
            return Err(CoreError::contract(format!(
                "axpy_sum: length {} vs {}",
                t.len(),
                len
            )));
        }
    }
    let mut out = (*first).clone();
    for t in &terms[1..] {
        for (a, b) in out.data.iter_mut().zip(t.as_slice()) {
            *a += b;
        }
    }
    Ok(out)
}

/// Numerically stable logistic: only ever exponentiates a non-positive value.
pub fn logistic_scalar(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Element-wise logistic function; output strictly inside (0, 1).
pub fn logistic(v: &Vector) -> Vector {
    Vector::from_fn(v.len(), |i| logistic_scalar(v.get(i)))
}

/// Point-wise activation nonlinearities used by the cell input block and the
/// memory-cell output.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ActivationKind {
    Tanh,
    Logistic,
    ReLU,
}

impl ActivationKind {
    pub fn apply_scalar(self, x: f64) -> f64 {
        match self {
            ActivationKind::Tanh => x.tanh(),
            ActivationKind::Logistic => logistic_scalar(x),
            ActivationKind::ReLU => x.max(0.0),
        }
    }

    /// Derivative at `input`, given the already-computed `output` so tanh and
    /// logistic avoid re-evaluating the transcendental.
    pub fn deriv_scalar(self, input: f64, output: f64) -> f64 {
        match self {
            ActivationKind::Tanh => 1.0 - output * output,
            ActivationKind::Logistic => output * (1.0 - output),
            ActivationKind::ReLU => {
                if input > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ActivationKind::Tanh => "tanh",
            ActivationKind::Logistic => "logistic",
            ActivationKind::ReLU => "relu",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "tanh" => Ok(ActivationKind::Tanh),
            "logistic" | "sigmoid" => Ok(ActivationKind::Logistic),
            "relu" => Ok(ActivationKind::ReLU),
            other => Err(CoreError::contract(format!("unknown activation '{other}'"))),
        }
    }
}

/// Element-wise application of `kind`.
pub fn apply_activation(kind: ActivationKind, v: &Vector) -> Vector {
    Vector::from_fn(v.len(), |i| kind.apply_scalar(v.get(i)))
}
