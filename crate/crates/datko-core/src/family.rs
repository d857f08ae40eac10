//! Two-parameter evolution families U(t, s) and their transition rules.
//!
//! Three backends share one interface: a scalar family driven by a
//! closed-form log-weight, a linear constant-coefficient system solved
//! by adaptive integration, and a tabulated family interpolating a
//! pregenerated grid of propagators. U(t, t) is the identity exactly,
//! and composition is delegated to the backend so that one-pass
//! trajectory evaluation and pointwise evaluation agree.

use alloc::vec::Vec;

// Unused when a dependency turns on num-traits/std: inherent methods win.
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::CoreError;
use crate::expr::Expr;
use crate::linalg::{Matrix, NormKind, StateVector};
use crate::ode::{integrate_path, integrate_to, OdeConfig};
use crate::rng::SplitMix64;

/// Which evaluation strategy backs a family.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BackendKind {
    /// Closed-form scalar weight times the identity; pointwise
    /// evaluation is cheap at any time.
    ScalarExp,
    /// Linear constant-coefficient system, solved by adaptive
    /// integration; batched ascending evaluation is much cheaper than
    /// pointwise.
    MatrixOde,
    /// Interpolated from a pregenerated propagator table; defined only
    /// inside the table's time range and only for t >= s.
    Tabulated,
}

/// How an operator norm value was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NormMethod {
    /// |e^{w}| for a scalar multiple of the identity.
    ClosedFormScalar,
    /// Power iteration on G^T G.
    PowerIteration,
    /// Max absolute row sum (exact for the sup norm).
    MaxRowSum,
}

#[derive(Debug, Clone)]
pub struct OperatorNormEstimate {
    pub value: f64,
    pub method: NormMethod,
    pub iterations: usize,
    pub residual: f64,
}

/// Deviations observed while probing the transition rules.
#[derive(Debug, Clone)]
pub struct CocycleReport {
    pub samples: usize,
    /// sup over probes of ||U(t,t)x - x|| / ||x||.
    pub max_identity_dev: f64,
    /// sup over probes of ||U(t,m)U(m,s)x - U(t,s)x|| / ||U(t,s)x||.
    pub max_composition_dev: f64,
    /// sup of ||U(s,t)U(t,s)x - x|| / ||x||; absent for one-way backends.
    pub max_reversal_dev: Option<f64>,
    pub worst_triple: (f64, f64, f64),
}

enum Backend {
    ScalarExp { f: Expr },
    MatrixOde { a: Matrix, ode: OdeConfig },
    Tabulated(Table),
}

struct Table {
    times: Vec<f64>,
    step: f64,
    dim: usize,
    /// blocks[i * m + j] = U(times[i], times[j]), filled for i >= j.
    blocks: Vec<Option<Matrix>>,
}

pub struct EvolutionFamily {
    backend: Backend,
    dimension: usize,
    reversible: bool,
    norm_kind: NormKind,
    opnorm_tol: f64,
    opnorm_max_iters: usize,
    norm_seed: u64,
}

impl EvolutionFamily {
    /// U(t, s) = e^{f(t) - f(s)} Id on R^dimension.
    pub fn scalar_exp(f: Expr, dimension: usize, norm_kind: NormKind) -> Result<Self, CoreError> {
        if dimension == 0 {
            return Err(CoreError::InvalidParameter {
                what: alloc::string::String::from("dimension must be at least 1"),
            });
        }
        Ok(EvolutionFamily {
            backend: Backend::ScalarExp { f },
            dimension,
            reversible: true,
            norm_kind,
            opnorm_tol: 1e-12,
            opnorm_max_iters: 10_000,
            norm_seed: 0x5eed,
        })
    }

    /// U(t, s) x solves y' = A y with y(s) = x.
    pub fn matrix_ode(
        a: Matrix,
        integrator_tol: f64,
        max_step: f64,
        norm_kind: NormKind,
    ) -> Result<Self, CoreError> {
        if !(integrator_tol > 0.0) || !integrator_tol.is_finite() {
            return Err(CoreError::InvalidParameter {
                what: alloc::string::String::from("integrator_tol must be positive and finite"),
            });
        }
        if !(max_step > 0.0) {
            return Err(CoreError::InvalidParameter {
                what: alloc::string::String::from("max_step must be positive"),
            });
        }
        let dimension = a.n();
        Ok(EvolutionFamily {
            backend: Backend::MatrixOde { a, ode: OdeConfig { tol: integrator_tol, max_step } },
            dimension,
            reversible: true,
            norm_kind,
            opnorm_tol: 1e-12,
            opnorm_max_iters: 10_000,
            norm_seed: 0x5eed,
        })
    }

    /// Builds a one-way family from sampled propagators.
    ///
    /// Each row is (t, s, entries) with entries the dim x dim block in
    /// row-major order. The t and s values must lie on one shared
    /// uniform grid and every pair with t > s on that grid must be
    /// present; diagonal pairs default to the identity.
    pub fn tabulated(
        rows: &[(f64, f64, Vec<f64>)],
        norm_kind: NormKind,
    ) -> Result<Self, CoreError> {
        let table = Table::from_rows(rows)?;
        let dimension = table.dim;
        Ok(EvolutionFamily {
            backend: Backend::Tabulated(table),
            dimension,
            reversible: false,
            norm_kind,
            opnorm_tol: 1e-12,
            opnorm_max_iters: 10_000,
            norm_seed: 0x5eed,
        })
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn kind(&self) -> BackendKind {
        match &self.backend {
            Backend::ScalarExp { .. } => BackendKind::ScalarExp,
            Backend::MatrixOde { .. } => BackendKind::MatrixOde,
            Backend::Tabulated(_) => BackendKind::Tabulated,
        }
    }

    pub fn norm_kind(&self) -> NormKind {
        self.norm_kind
    }

    /// Whether U(s, t) is available for s < t.
    pub fn reversible(&self) -> bool {
        self.reversible
    }

    /// First time the family is defined at, if bounded below.
    pub fn domain_start(&self) -> Option<f64> {
        match &self.backend {
            Backend::Tabulated(tb) => Some(tb.times[0]),
            _ => None,
        }
    }

    /// Last time the family is defined at, if bounded above.
    pub fn domain_end(&self) -> Option<f64> {
        match &self.backend {
            Backend::Tabulated(tb) => Some(*tb.times.last().unwrap()),
            _ => None,
        }
    }

    fn check_pair(&self, t: f64, s: f64) -> Result<(), CoreError> {
        if !t.is_finite() || !s.is_finite() {
            return Err(CoreError::NonFiniteValue { t: if t.is_finite() { s } else { t } });
        }
        if t < s && !self.reversible {
            return Err(CoreError::TimeOrder { t, s });
        }
        if let Some(end) = self.domain_end() {
            let start = self.domain_start().unwrap();
            for v in [t, s] {
                if v < start || v > end {
                    return Err(CoreError::OutOfDomain { t: v, domain_end: end });
                }
            }
        }
        Ok(())
    }

    /// U(t, s) x for a raw coordinate slice.
    pub fn apply_raw(&self, t: f64, s: f64, x: &[f64]) -> Result<Vec<f64>, CoreError> {
        if x.len() != self.dimension {
            return Err(CoreError::DimensionMismatch { expected: self.dimension, got: x.len() });
        }
        self.check_pair(t, s)?;
        if t == s {
            return Ok(x.to_vec());
        }
        match &self.backend {
            Backend::ScalarExp { f } => {
                let w = f.eval(t)? - f.eval(s)?;
                let g = w.exp();
                if !g.is_finite() {
                    return Err(CoreError::Overflow { t });
                }
                Ok(x.iter().map(|c| c * g).collect())
            }
            Backend::MatrixOde { a, ode } => {
                let deriv = |_t: f64, y: &[f64], dy: &mut [f64]| {
                    a.mul_into(y, dy);
                    Ok(())
                };
                integrate_to(&deriv, s, x, t, *ode)
            }
            Backend::Tabulated(tb) => {
                let g = tb.interpolate(t, s)?;
                Ok(g.mul_vec(x))
            }
        }
    }

    /// U(t, s) x.
    pub fn apply(&self, t: f64, s: f64, x: &StateVector) -> Result<StateVector, CoreError> {
        let out = self.apply_raw(t, s, x.components())?;
        StateVector::new(out, self.norm_kind)
    }

    /// States U(out_k, s) x for ascending output times, computed in one
    /// pass so the integrating backend does not restart from s each time.
    pub fn trajectory(
        &self,
        s: f64,
        x: &[f64],
        outputs: &[f64],
    ) -> Result<Vec<Vec<f64>>, CoreError> {
        if x.len() != self.dimension {
            return Err(CoreError::DimensionMismatch { expected: self.dimension, got: x.len() });
        }
        let mut states = Vec::with_capacity(outputs.len());
        match &self.backend {
            Backend::MatrixOde { a, ode } => {
                for &t in outputs {
                    self.check_pair(t, s)?;
                    if t < s {
                        return Err(CoreError::TimeOrder { t, s });
                    }
                }
                let deriv = |_t: f64, y: &[f64], dy: &mut [f64]| {
                    a.mul_into(y, dy);
                    Ok(())
                };
                integrate_path(&deriv, s, x, outputs, *ode, |_idx, _t, y| {
                    states.push(y.to_vec());
                })?;
            }
            _ => {
                for &t in outputs {
                    states.push(self.apply_raw(t, s, x)?);
                }
            }
        }
        Ok(states)
    }

    /// The full propagator matrix U(t, s).
    pub fn propagator(&self, t: f64, s: f64) -> Result<Matrix, CoreError> {
        self.check_pair(t, s)?;
        if t == s {
            return Ok(Matrix::identity(self.dimension));
        }
        match &self.backend {
            Backend::ScalarExp { f } => {
                let w = f.eval(t)? - f.eval(s)?;
                let g = w.exp();
                if !g.is_finite() {
                    return Err(CoreError::Overflow { t });
                }
                Ok(scaled_identity(self.dimension, g))
            }
            Backend::MatrixOde { a, ode } => {
                let n = self.dimension;
                let deriv = matrix_system_deriv(a, n);
                let y0 = Matrix::identity(n);
                let out = integrate_to(&deriv, s, y0.data(), t, *ode)?;
                Ok(Matrix::from_raw(n, out))
            }
            Backend::Tabulated(tb) => tb.interpolate(t, s),
        }
    }

    /// Propagators U(out_k, s) along ascending output times, one pass.
    pub fn propagator_trajectory(
        &self,
        s: f64,
        outputs: &[f64],
    ) -> Result<Vec<Matrix>, CoreError> {
        let mut mats = Vec::with_capacity(outputs.len());
        match &self.backend {
            Backend::MatrixOde { a, ode } => {
                for &t in outputs {
                    self.check_pair(t, s)?;
                    if t < s {
                        return Err(CoreError::TimeOrder { t, s });
                    }
                }
                let n = self.dimension;
                let deriv = matrix_system_deriv(a, n);
                let y0 = Matrix::identity(n);
                integrate_path(&deriv, s, y0.data(), outputs, *ode, |_idx, _t, y| {
                    mats.push(Matrix::from_raw(n, y.to_vec()));
                })?;
            }
            _ => {
                for &t in outputs {
                    mats.push(self.propagator(t, s)?);
                }
            }
        }
        Ok(mats)
    }

    fn norm_of(&self, g: &Matrix, warm: Option<&[f64]>) -> Result<OperatorNormEstimate, CoreError> {
        match self.norm_kind {
            NormKind::Max => Ok(OperatorNormEstimate {
                value: g.max_row_sum(),
                method: NormMethod::MaxRowSum,
                iterations: 0,
                residual: 0.0,
            }),
            NormKind::Euclidean => {
                let sn =
                    g.spectral_norm(self.norm_seed, self.opnorm_tol, self.opnorm_max_iters, warm)?;
                Ok(OperatorNormEstimate {
                    value: sn.value,
                    method: NormMethod::PowerIteration,
                    iterations: sn.iterations,
                    residual: sn.residual,
                })
            }
        }
    }

    /// The induced operator norm ||U(t, s)||.
    pub fn operator_norm(&self, t: f64, s: f64) -> Result<OperatorNormEstimate, CoreError> {
        match &self.backend {
            Backend::ScalarExp { f } => {
                self.check_pair(t, s)?;
                let w = f.eval(t)? - f.eval(s)?;
                let value = w.exp();
                if !value.is_finite() {
                    return Err(CoreError::Overflow { t });
                }
                Ok(OperatorNormEstimate {
                    value,
                    method: NormMethod::ClosedFormScalar,
                    iterations: 0,
                    residual: 0.0,
                })
            }
            _ => {
                let g = self.propagator(t, s)?;
                self.norm_of(&g, None)
            }
        }
    }

    /// Norms ||U(out_k, s)|| along ascending outputs. For the power
    /// iteration the singular vector of each point seeds the next, which
    /// converges in a handful of iterations on smooth sweeps.
    pub fn operator_norm_trajectory(
        &self,
        s: f64,
        outputs: &[f64],
    ) -> Result<Vec<OperatorNormEstimate>, CoreError> {
        match &self.backend {
            Backend::ScalarExp { .. } => {
                outputs.iter().map(|&t| self.operator_norm(t, s)).collect()
            }
            _ => {
                let mats = self.propagator_trajectory(s, outputs)?;
                let mut warm: Option<Vec<f64>> = None;
                let mut out = Vec::with_capacity(mats.len());
                for g in &mats {
                    match self.norm_kind {
                        NormKind::Max => out.push(OperatorNormEstimate {
                            value: g.max_row_sum(),
                            method: NormMethod::MaxRowSum,
                            iterations: 0,
                            residual: 0.0,
                        }),
                        NormKind::Euclidean => {
                            let sn = g.spectral_norm(
                                self.norm_seed,
                                self.opnorm_tol,
                                self.opnorm_max_iters,
                                warm.as_deref(),
                            )?;
                            out.push(OperatorNormEstimate {
                                value: sn.value,
                                method: NormMethod::PowerIteration,
                                iterations: sn.iterations,
                                residual: sn.residual,
                            });
                            warm = Some(sn.vector);
                        }
                    }
                }
                Ok(out)
            }
        }
    }

    /// ln ||U(t, s)||, evaluated without forming e^{w} for the scalar
    /// backend so large weights do not overflow.
    pub fn log_operator_norm(&self, t: f64, s: f64) -> Result<f64, CoreError> {
        match &self.backend {
            Backend::ScalarExp { f } => {
                self.check_pair(t, s)?;
                Ok(f.eval(t)? - f.eval(s)?)
            }
            _ => {
                let est = self.operator_norm(t, s)?;
                if !(est.value > 0.0) || !est.value.is_finite() {
                    return Err(CoreError::Overflow { t });
                }
                Ok(est.value.ln())
            }
        }
    }

    /// Probes the identity, composition, and (where available) reversal
    /// rules with random triples s <= m <= t inside [t_lo, t_hi].
    pub fn check_cocycle(
        &self,
        t_lo: f64,
        t_hi: f64,
        samples: usize,
        seed: u64,
    ) -> Result<CocycleReport, CoreError> {
        if !(t_hi > t_lo) {
            return Err(CoreError::InvalidParameter {
                what: alloc::string::String::from("cocycle window must have t_hi > t_lo"),
            });
        }
        let mut rng = SplitMix64::new(seed);
        let mut max_identity = 0.0f64;
        let mut max_comp = 0.0f64;
        let mut max_rev = 0.0f64;
        let mut worst = (t_lo, t_lo, t_lo);
        for _ in 0..samples {
            let mut abc = [
                rng.range(t_lo, t_hi),
                rng.range(t_lo, t_hi),
                rng.range(t_lo, t_hi),
            ];
            abc.sort_by(|p, q| p.partial_cmp(q).unwrap());
            let (s, m, t) = (abc[0], abc[1], abc[2]);
            let x = rng.unit_vector(self.dimension);

            let idt = self.apply_raw(t, t, &x)?;
            let id_dev = rel_dev(&idt, &x, self.norm_kind);
            max_identity = max_identity.max(id_dev);

            let direct = self.apply_raw(t, s, &x)?;
            let mid = self.apply_raw(m, s, &x)?;
            let two_leg = self.apply_raw(t, m, &mid)?;
            let comp_dev = rel_dev(&two_leg, &direct, self.norm_kind);
            if comp_dev > max_comp {
                max_comp = comp_dev;
                worst = (t, m, s);
            }

            if self.reversible {
                let back = self.apply_raw(s, t, &direct)?;
                max_rev = max_rev.max(rel_dev(&back, &x, self.norm_kind));
            }
        }
        Ok(CocycleReport {
            samples,
            max_identity_dev: max_identity,
            max_composition_dev: max_comp,
            max_reversal_dev: if self.reversible { Some(max_rev) } else { None },
            worst_triple: worst,
        })
    }
}

fn rel_dev(got: &[f64], want: &[f64], norm_kind: NormKind) -> f64 {
    let diff: Vec<f64> = got.iter().zip(want).map(|(a, b)| a - b).collect();
    let denom = norm_kind.vector_norm(want).max(1e-300);
    norm_kind.vector_norm(&diff) / denom
}

fn scaled_identity(n: usize, g: f64) -> Matrix {
    let mut data = alloc::vec![0.0; n * n];
    for i in 0..n {
        data[i * n + i] = g;
    }
    Matrix::from_raw(n, data)
}

/// Derivative of the n x n system Y' = A Y flattened row-major.
fn matrix_system_deriv(
    a: &Matrix,
    n: usize,
) -> impl Fn(f64, &[f64], &mut [f64]) -> Result<(), CoreError> + '_ {
    move |_t: f64, y: &[f64], dy: &mut [f64]| {
        for i in 0..n {
            for j in 0..n {
                let mut acc = 0.0;
                for k in 0..n {
                    acc += a.get(i, k) * y[k * n + j];
                }
                dy[i * n + j] = acc;
            }
        }
        Ok(())
    }
}

impl Table {
    fn from_rows(rows: &[(f64, f64, Vec<f64>)]) -> Result<Table, CoreError> {
        if rows.is_empty() {
            return Err(CoreError::EmptyInput { what: "tabulated rows" });
        }
        let entry_len = rows[0].2.len();
        let dim = (entry_len as f64).sqrt().round() as usize;
        if dim == 0 || dim * dim != entry_len {
            return Err(CoreError::TabulatedGrid { reason: "entry count is not a square" });
        }

        let mut times: Vec<f64> = Vec::new();
        for (t, s, entries) in rows {
            if entries.len() != entry_len {
                return Err(CoreError::TabulatedGrid { reason: "ragged entry rows" });
            }
            if !t.is_finite() || !s.is_finite() {
                return Err(CoreError::TabulatedGrid { reason: "non-finite grid time" });
            }
            times.push(*t);
            times.push(*s);
        }
        times.sort_by(|a, b| a.partial_cmp(b).unwrap());
        times.dedup_by(|a, b| (*a - *b).abs() <= 1e-9 * a.abs().max(1.0));
        if times.len() < 2 {
            return Err(CoreError::TabulatedGrid { reason: "grid needs at least two times" });
        }
        let step = times[1] - times[0];
        for w in times.windows(2) {
            if ((w[1] - w[0]) - step).abs() > 1e-7 * step {
                return Err(CoreError::TabulatedGrid { reason: "grid spacing is not uniform" });
            }
        }

        let m = times.len();
        let locate = |v: f64| -> Result<usize, CoreError> {
            let raw = (v - times[0]) / step;
            let idx = raw.round() as isize;
            if idx < 0 || idx as usize >= m || (raw - raw.round()).abs() > 1e-6 {
                return Err(CoreError::TabulatedGrid { reason: "row time off the grid" });
            }
            Ok(idx as usize)
        };

        let mut blocks: Vec<Option<Matrix>> = alloc::vec![];
        blocks.resize_with(m * m, || None);
        for (t, s, entries) in rows {
            let i = locate(*t)?;
            let j = locate(*s)?;
            if i < j {
                return Err(CoreError::TabulatedGrid { reason: "row has t < s" });
            }
            if blocks[i * m + j].is_some() {
                return Err(CoreError::TabulatedGrid { reason: "duplicate (t, s) pair" });
            }
            if entries.iter().any(|e| !e.is_finite()) {
                return Err(CoreError::TabulatedGrid { reason: "non-finite entry" });
            }
            blocks[i * m + j] = Some(Matrix::from_raw(dim, entries.clone()));
        }
        for i in 0..m {
            if blocks[i * m + i].is_none() {
                blocks[i * m + i] = Some(Matrix::identity(dim));
            }
            for j in 0..i {
                if blocks[i * m + j].is_none() {
                    return Err(CoreError::TabulatedGrid { reason: "missing (t, s) pair" });
                }
            }
        }
        Ok(Table { times, step, dim, blocks })
    }

    fn block(&self, i: usize, j: usize) -> &Matrix {
        self.blocks[i * self.times.len() + j].as_ref().unwrap()
    }

    /// Piecewise interpolation of U(t, s), t >= s. Cells strictly below
    /// the diagonal blend four corners bilinearly; cells touching the
    /// diagonal blend the two identity corners and the far corner over
    /// the triangle t >= s.
    fn interpolate(&self, t: f64, s: f64) -> Result<Matrix, CoreError> {
        let m = self.times.len();
        let end = self.times[m - 1];
        if t < s {
            return Err(CoreError::TimeOrder { t, s });
        }
        for v in [t, s] {
            if v < self.times[0] || v > end {
                return Err(CoreError::OutOfDomain { t: v, domain_end: end });
            }
        }
        if t == s {
            return Ok(Matrix::identity(self.dim));
        }
        let cell = |v: f64| -> usize {
            let raw = ((v - self.times[0]) / self.step).floor() as isize;
            (raw.max(0) as usize).min(m - 2)
        };
        let i = cell(t);
        let j = cell(s);
        let a = (t - self.times[i]) / self.step;
        let b = (s - self.times[j]) / self.step;
        let n2 = self.dim * self.dim;
        let mut data = alloc::vec![0.0; n2];
        if i >= j + 1 {
            let g00 = self.block(i, j);
            let g10 = self.block(i + 1, j);
            let g01 = self.block(i, j + 1);
            let g11 = self.block(i + 1, j + 1);
            for k in 0..n2 {
                data[k] = (1.0 - a) * (1.0 - b) * g00.data()[k]
                    + a * (1.0 - b) * g10.data()[k]
                    + (1.0 - a) * b * g01.data()[k]
                    + a * b * g11.data()[k];
            }
        } else {
            // Diagonal cell: vertices (a, b) = (0, 0), (1, 0), (1, 1)
            // carry Id, U(T_{i+1}, T_i), Id.
            let far = self.block(i + 1, j);
            let w_far = a - b;
            let w_id = 1.0 - w_far;
            for k in 0..n2 {
                data[k] = w_far * far.data()[k];
            }
            for d in 0..self.dim {
                data[d * self.dim + d] += w_id;
            }
        }
        Ok(Matrix::from_raw(self.dim, data))
    }
}
