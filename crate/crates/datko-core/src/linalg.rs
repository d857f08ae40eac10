//! Small dense vectors and square matrices, row-major, with just
//! enough machinery for propagator norms: power iteration for the
//! spectral norm and the exact max-row-sum for the sup norm.

use alloc::vec;
use alloc::vec::Vec;

// Unused when a dependency turns on num-traits/std: inherent methods win.
#[allow(unused_imports)]
use num_traits::Float;

use crate::rng::SplitMix64;
use crate::CoreError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NormKind {
    Euclidean,
    Max,
}

impl NormKind {
    pub fn vector_norm(self, x: &[f64]) -> f64 {
        match self {
            NormKind::Euclidean => x.iter().map(|c| c * c).sum::<f64>().sqrt(),
            NormKind::Max => x.iter().fold(0.0, |acc, c| acc.max(c.abs())),
        }
    }
}

/// A state in R^n together with the norm it is measured in.
///
/// Invariants: n >= 1 and every component finite.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    components: Vec<f64>,
    norm_kind: NormKind,
}

impl StateVector {
    pub fn new(components: Vec<f64>, norm_kind: NormKind) -> Result<Self, CoreError> {
        if components.is_empty() {
            return Err(CoreError::EmptyInput { what: "state vector components" });
        }
        if let Some(index) = components.iter().position(|c| !c.is_finite()) {
            return Err(CoreError::NonFiniteComponent { index });
        }
        Ok(StateVector { components, norm_kind })
    }

    pub fn components(&self) -> &[f64] {
        &self.components
    }

    pub fn norm_kind(&self) -> NormKind {
        self.norm_kind
    }

    pub fn dim(&self) -> usize {
        self.components.len()
    }

    pub fn norm(&self) -> f64 {
        self.norm_kind.vector_norm(&self.components)
    }

    pub fn scaled(&self, c: f64) -> Self {
        StateVector {
            components: self.components.iter().map(|v| c * v).collect(),
            norm_kind: self.norm_kind,
        }
    }
}

/// Dense square matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    n: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(n: usize) -> Self {
        Matrix { n, data: vec![0.0; n * n] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Matrix::zeros(n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, CoreError> {
        let n = rows.len();
        if n == 0 {
            return Err(CoreError::EmptyInput { what: "matrix rows" });
        }
        let mut data = Vec::with_capacity(n * n);
        for row in rows {
            if row.len() != n {
                return Err(CoreError::DimensionMismatch { expected: n, got: row.len() });
            }
            data.extend_from_slice(row);
        }
        Ok(Matrix { n, data })
    }

    pub(crate) fn from_raw(n: usize, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), n * n);
        Matrix { n, data }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.n);
        let mut out = vec![0.0; self.n];
        self.mul_into(x, &mut out);
        out
    }

    pub fn mul_into(&self, x: &[f64], out: &mut [f64]) {
        debug_assert_eq!(x.len(), self.n);
        debug_assert_eq!(out.len(), self.n);
        for i in 0..self.n {
            let row = &self.data[i * self.n..(i + 1) * self.n];
            out[i] = row.iter().zip(x).map(|(a, b)| a * b).sum();
        }
    }

    fn mul_vec_transposed(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        for i in 0..self.n {
            let row = &self.data[i * self.n..(i + 1) * self.n];
            for (o, a) in out.iter_mut().zip(row) {
                *o += a * x[i];
            }
        }
        out
    }

    pub fn matmul(&self, rhs: &Matrix) -> Matrix {
        debug_assert_eq!(self.n, rhs.n);
        let n = self.n;
        let mut out = Matrix::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self.data[i * n + k];
                if a == 0.0 {
                    continue;
                }
                for j in 0..n {
                    out.data[i * n + j] += a * rhs.data[k * n + j];
                }
            }
        }
        out
    }

    /// Exact operator norm with respect to the max norm on vectors.
    pub fn max_row_sum(&self) -> f64 {
        (0..self.n)
            .map(|i| {
                self.data[i * self.n..(i + 1) * self.n]
                    .iter()
                    .map(|v| v.abs())
                    .sum::<f64>()
            })
            .fold(0.0, f64::max)
    }

    /// Largest singular value by power iteration on G^T G.
    ///
    /// Deterministic: the start vector comes from `seed` unless `warm`
    /// supplies one (sweeps chain the previous right singular vector).
    /// Stalling past `max_iters` is an error, never a silent value.
    pub fn spectral_norm(
        &self,
        seed: u64,
        tol: f64,
        max_iters: usize,
        warm: Option<&[f64]>,
    ) -> Result<SpectralNorm, CoreError> {
        let n = self.n;
        if n == 1 {
            let v = self.data[0].abs();
            return Ok(SpectralNorm { value: v, iterations: 0, residual: 0.0, vector: vec![1.0] });
        }
        let mut v: Vec<f64> = match warm {
            Some(w) if w.len() == n => w.to_vec(),
            _ => SplitMix64::new(seed).unit_vector(n),
        };
        let norm0 = NormKind::Euclidean.vector_norm(&v);
        if norm0 == 0.0 || !norm0.is_finite() {
            v = SplitMix64::new(seed).unit_vector(n);
        } else {
            for c in v.iter_mut() {
                *c /= norm0;
            }
        }
        let mut sigma_prev = f64::NAN;
        let mut last_residual = f64::INFINITY;
        for it in 1..=max_iters {
            let av = self.mul_vec(&v);
            let lambda: f64 = av.iter().map(|c| c * c).sum(); // v^T G^T G v with ||v|| = 1
            let sigma = lambda.sqrt();
            if !sigma.is_finite() {
                return Err(CoreError::NonFiniteValue { t: f64::NAN });
            }
            let residual = (sigma - sigma_prev).abs();
            if it > 1 {
                last_residual = residual;
                if residual <= tol * sigma.max(1.0) {
                    return Ok(SpectralNorm { value: sigma, iterations: it, residual, vector: v });
                }
            }
            sigma_prev = sigma;
            let mut z = self.mul_vec_transposed(&av);
            let zn = NormKind::Euclidean.vector_norm(&z);
            if zn == 0.0 {
                // G annihilates the whole current direction. For our
                // propagators G is invertible, so this only happens for
                // an exactly zero matrix.
                return Ok(SpectralNorm { value: 0.0, iterations: it, residual: 0.0, vector: v });
            }
            for c in z.iter_mut() {
                *c /= zn;
            }
            v = z;
        }
        Err(CoreError::PowerIterationStall { iterations: max_iters, residual: last_residual })
    }
}

#[derive(Debug, Clone)]
pub struct SpectralNorm {
    pub value: f64,
    pub iterations: usize,
    pub residual: f64,
    /// Right singular vector estimate, reusable as a warm start.
    pub vector: Vec<f64>,
}
