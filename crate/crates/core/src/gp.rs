//! Gaussian-process field model: kernel evaluation, posterior variance under
//! repeated sampling, and the linear least-squares estimator (LLSE) form of
//! the same objective.
//!
//! Collecting `l` independent samples at a vertex is modelled as a single
//! observation with noise variance `sigma^2 / l`. Vertices with `l = 0` are
//! left out of the conditioning set entirely.

use nalgebra::{Cholesky, DMatrix, Dyn, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{input_err, LippError, Result};

/// Smallest admissible ratio between the smallest and largest Cholesky pivot.
pub const PIVOT_RATIO_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(&self, other: &Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KernelKind {
    #[default]
    SquaredExponential,
}

/// Stationary covariance kernel `k(a, b) = s^2 exp(-|a - b|^2 / (2 l^2))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Kernel {
    #[serde(default)]
    pub kind: KernelKind,
    pub signal_variance: f64,
    pub lengthscale: f64,
}

impl Kernel {
    pub fn squared_exponential(signal_variance: f64, lengthscale: f64) -> Result<Self> {
        let kernel = Self {
            kind: KernelKind::SquaredExponential,
            signal_variance,
            lengthscale,
        };
        kernel.validate()?;
        Ok(kernel)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.signal_variance.is_finite() && self.signal_variance > 0.0) {
            return input_err(format!(
                "kernel signal variance must be positive, got {}",
                self.signal_variance
            ));
        }
        if !(self.lengthscale.is_finite() && self.lengthscale > 0.0) {
            return input_err(format!("kernel lengthscale must be positive, got {}", self.lengthscale));
        }
        Ok(())
    }

    #[inline]
    pub fn eval(&self, a: &Point, b: &Point) -> f64 {
        match self.kind {
            KernelKind::SquaredExponential => {
                let dx = a.x - b.x;
                let dy = a.y - b.y;
                let r2 = dx * dx + dy * dy;
                self.signal_variance * (-0.5 * r2 / (self.lengthscale * self.lengthscale)).exp()
            }
        }
    }
}

/// Kernel matrix with entry `(i, j) = k(rows[i], cols[j])`.
pub fn kernel_matrix(kernel: &Kernel, rows: &[Point], cols: &[Point]) -> Result<DMatrix<f64>> {
    if let Some(p) = rows.iter().chain(cols).find(|p| !p.is_finite()) {
        return input_err(format!("non-finite coordinate ({}, {})", p.x, p.y));
    }
    Ok(DMatrix::from_fn(rows.len(), cols.len(), |i, j| {
        kernel.eval(&rows[i], &cols[j])
    }))
}

/// Everything needed to evaluate posterior variance at the test set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldModel {
    pub kernel: Kernel,
    /// Per-sample measurement noise variance.
    pub noise_variance: f64,
    pub test_points: Vec<Point>,
    /// Diagonal of the test-point importance matrix.
    pub test_weights: Vec<f64>,
}

impl FieldModel {
    pub fn new(kernel: Kernel, noise_variance: f64, test_points: Vec<Point>, test_weights: Vec<f64>) -> Result<Self> {
        let model = Self {
            kernel,
            noise_variance,
            test_points,
            test_weights,
        };
        model.validate()?;
        Ok(model)
    }

    /// Unit weight on every test point.
    pub fn with_identity_weights(kernel: Kernel, noise_variance: f64, test_points: Vec<Point>) -> Result<Self> {
        let weights = vec![1.0; test_points.len()];
        Self::new(kernel, noise_variance, test_points, weights)
    }

    pub fn validate(&self) -> Result<()> {
        self.kernel.validate()?;
        if !(self.noise_variance.is_finite() && self.noise_variance > 0.0) {
            return input_err(format!("noise variance must be positive, got {}", self.noise_variance));
        }
        if self.test_points.is_empty() {
            return input_err("test set must contain at least one point");
        }
        if self.test_points.len() != self.test_weights.len() {
            return input_err(format!(
                "{} test points but {} weights",
                self.test_points.len(),
                self.test_weights.len()
            ));
        }
        if self.test_weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return input_err("test weights must be finite and nonnegative");
        }
        if self.test_points.iter().any(|p| !p.is_finite()) {
            return input_err("test points must be finite");
        }
        Ok(())
    }

    pub fn test_count(&self) -> usize {
        self.test_points.len()
    }

    /// `trace(M k_TT)`: the objective before any sample is collected.
    pub fn prior_variance(&self) -> f64 {
        self.test_points
            .iter()
            .zip(&self.test_weights)
            .map(|(p, w)| w * self.kernel.eval(p, p))
            .sum()
    }
}

/// Per-vertex sample counts; `0` means the vertex is not sampled.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct SampleAllocation {
    counts: Vec<u32>,
}

impl SampleAllocation {
    pub fn empty(n: usize) -> Self {
        Self { counts: vec![0; n] }
    }

    pub fn from_counts(counts: Vec<u32>) -> Self {
        Self { counts }
    }

    pub fn from_pairs(n: usize, pairs: &[(usize, u32)]) -> Result<Self> {
        let mut alloc = Self::empty(n);
        for &(v, l) in pairs {
            if v >= n {
                return input_err(format!("vertex {v} out of range (n = {n})"));
            }
            alloc.counts[v] = l;
        }
        Ok(alloc)
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn get(&self, v: usize) -> u32 {
        self.counts.get(v).copied().unwrap_or(0)
    }

    pub fn set(&mut self, v: usize, count: u32) {
        self.counts[v] = count;
    }

    pub fn counts(&self) -> &[u32] {
        &self.counts
    }

    /// `(vertex, count)` for every vertex with at least one sample, by vertex id.
    pub fn sampled(&self) -> Vec<(usize, u32)> {
        self.counts
            .iter()
            .enumerate()
            .filter(|(_, &l)| l > 0)
            .map(|(v, &l)| (v, l))
            .collect()
    }

    pub fn validate(&self, n: usize, s_max: Option<u32>) -> Result<()> {
        if self.counts.len() != n {
            return input_err(format!(
                "allocation covers {} vertices, world has {n}",
                self.counts.len()
            ));
        }
        if let Some(cap) = s_max {
            if let Some((v, l)) = self.counts.iter().enumerate().find(|(_, &l)| l > cap) {
                return input_err(format!("vertex {v} has {l} samples, cap is {cap}"));
            }
        }
        Ok(())
    }
}

/// Linear estimator: test-point predictions are `A y` over sampled vertices.
#[derive(Debug, Clone, PartialEq)]
pub struct Estimator {
    /// `m x n` coefficient matrix.
    pub coefficients: DMatrix<f64>,
    /// Vertex ids whose columns may be nonzero, ascending.
    pub support: Vec<usize>,
}

impl Estimator {
    pub fn zeros(m: usize, n: usize) -> Self {
        Self {
            coefficients: DMatrix::zeros(m, n),
            support: Vec::new(),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.coefficients.iter().fold(0.0, |acc, a| acc.max(a.abs()))
    }
}

/// Kernel blocks precomputed for one (field, vertex geometry) pair.
///
/// Cheap to share across threads; every evaluation allocates only the small
/// sampled sub-block it factors.
#[derive(Debug, Clone)]
pub struct FieldEval {
    k_vv: DMatrix<f64>,
    k_tv: DMatrix<f64>,
    k_tt_diag: Vec<f64>,
    weights: Vec<f64>,
    noise_variance: f64,
    prior: f64,
}

impl FieldEval {
    pub fn new(model: &FieldModel, vertex_positions: &[Point]) -> Result<Self> {
        model.validate()?;
        let k_vv = kernel_matrix(&model.kernel, vertex_positions, vertex_positions)?;
        let k_tv = kernel_matrix(&model.kernel, &model.test_points, vertex_positions)?;
        let k_tt_diag = model.test_points.iter().map(|p| model.kernel.eval(p, p)).collect();
        Ok(Self {
            k_vv,
            k_tv,
            k_tt_diag,
            weights: model.test_weights.clone(),
            noise_variance: model.noise_variance,
            prior: model.prior_variance(),
        })
    }

    pub fn vertex_count(&self) -> usize {
        self.k_vv.nrows()
    }

    pub fn test_count(&self) -> usize {
        self.k_tv.nrows()
    }

    pub fn prior_variance(&self) -> f64 {
        self.prior
    }

    pub fn noise_variance(&self) -> f64 {
        self.noise_variance
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn k_vv(&self) -> &DMatrix<f64> {
        &self.k_vv
    }

    pub fn k_tv(&self) -> &DMatrix<f64> {
        &self.k_tv
    }

    pub fn k_tt_diag(&self) -> &[f64] {
        &self.k_tt_diag
    }

    fn check_sampled(&self, sampled: &[(usize, u32)]) -> Result<()> {
        let n = self.vertex_count();
        let mut prev: Option<usize> = None;
        for &(v, l) in sampled {
            if v >= n {
                return input_err(format!("vertex {v} out of range (n = {n})"));
            }
            if l == 0 {
                return input_err(format!("vertex {v} listed with zero samples"));
            }
            if prev.is_some_and(|p| p >= v) {
                return input_err("sampled vertices must be strictly ascending");
            }
            prev = Some(v);
        }
        Ok(())
    }

    /// Factors `k_SS + N_S` for the sampled sub-block.
    fn factor(&self, sampled: &[(usize, u32)]) -> Result<Cholesky<f64, Dyn>> {
        let s = sampled.len();
        let mut block = DMatrix::from_fn(s, s, |i, j| self.k_vv[(sampled[i].0, sampled[j].0)]);
        for (i, &(_, l)) in sampled.iter().enumerate() {
            block[(i, i)] += self.noise_variance / f64::from(l);
        }
        guarded_cholesky(block)
    }

    /// `k_ST` for the sampled rows.
    fn cross_block(&self, sampled: &[(usize, u32)]) -> DMatrix<f64> {
        DMatrix::from_fn(sampled.len(), self.test_count(), |i, t| self.k_tv[(t, sampled[i].0)])
    }

    /// `trace(M (k_TT - k_TS (k_SS + N_S)^-1 k_ST))` for an ascending list of
    /// `(vertex, count)` pairs with `count >= 1`.
    pub fn posterior_variance_sampled(&self, sampled: &[(usize, u32)]) -> Result<f64> {
        self.check_sampled(sampled)?;
        if sampled.is_empty() {
            return Ok(self.prior);
        }
        let chol = self.factor(sampled)?;
        let mut rhs = self.cross_block(sampled);
        if !chol.l_dirty().solve_lower_triangular_mut(&mut rhs) {
            return Err(LippError::Numerical {
                size: sampled.len(),
                min_pivot: 0.0,
                max_pivot: 0.0,
            });
        }
        let mut total = 0.0;
        for t in 0..self.test_count() {
            let explained: f64 = rhs.column(t).iter().map(|x| x * x).sum();
            total += self.weights[t] * (self.k_tt_diag[t] - explained);
        }
        Ok(total)
    }

    pub fn posterior_variance(&self, allocation: &SampleAllocation) -> Result<f64> {
        allocation.validate(self.vertex_count(), None)?;
        self.posterior_variance_sampled(&allocation.sampled())
    }

    /// Normal-equation solution `A_S = k_TS (k_SS + N_S)^-1`, columns outside
    /// the sampled set left at zero. The returned value is the LLSE quadratic
    /// evaluated at that estimator.
    pub fn optimal_llse(&self, allocation: &SampleAllocation) -> Result<(Estimator, f64)> {
        allocation.validate(self.vertex_count(), None)?;
        let sampled = allocation.sampled();
        let mut estimator = Estimator::zeros(self.test_count(), self.vertex_count());
        if !sampled.is_empty() {
            let chol = self.factor(&sampled)?;
            // (k_SS + N_S)^-1 k_ST, i.e. the transpose of A restricted to S
            let solved = chol.solve(&self.cross_block(&sampled));
            for (i, &(v, _)) in sampled.iter().enumerate() {
                for t in 0..self.test_count() {
                    estimator.coefficients[(t, v)] = solved[(i, t)];
                }
            }
            estimator.support = sampled.iter().map(|&(v, _)| v).collect();
        }
        let value = self.llse_objective(&estimator, allocation)?;
        Ok((estimator, value))
    }

    /// `tr(M (A (k_VV + N) A^T - 2 k_TV A^T + k_TT))`.
    pub fn llse_objective(&self, estimator: &Estimator, allocation: &SampleAllocation) -> Result<f64> {
        let n = self.vertex_count();
        let m = self.test_count();
        allocation.validate(n, None)?;
        let a = &estimator.coefficients;
        if a.nrows() != m || a.ncols() != n {
            return input_err(format!("estimator is {}x{}, expected {m}x{n}", a.nrows(), a.ncols()));
        }
        for v in 0..n {
            let column_nonzero = a.column(v).iter().any(|x| *x != 0.0);
            if column_nonzero && allocation.get(v) == 0 {
                return input_err(format!("estimator uses unsampled vertex {v}"));
            }
            if column_nonzero && !estimator.support.contains(&v) {
                return input_err(format!("estimator column {v} is outside its support"));
            }
        }
        let mut cov = self.k_vv.clone();
        for v in 0..n {
            let l = allocation.get(v);
            if l > 0 {
                cov[(v, v)] += self.noise_variance / f64::from(l);
            }
        }
        let mut total = 0.0;
        for t in 0..m {
            let row = a.row(t).transpose();
            let quad = (row.transpose() * &cov * &row)[(0, 0)];
            let cross = (self.k_tv.row(t) * &row)[(0, 0)];
            total += self.weights[t] * (quad - 2.0 * cross + self.k_tt_diag[t]);
        }
        Ok(total)
    }
}

/// Cholesky factorisation that rejects matrices whose pivot spread exceeds
/// [`PIVOT_RATIO_FLOOR`].
pub fn guarded_cholesky(matrix: DMatrix<f64>) -> Result<Cholesky<f64, Dyn>> {
    let size = matrix.nrows();
    let Some(chol) = Cholesky::new(matrix.clone()) else {
        let eig = SymmetricEigen::new(matrix);
        let min = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
        let max = eig.eigenvalues.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        return Err(LippError::Numerical {
            size,
            min_pivot: min,
            max_pivot: max,
        });
    };
    let l = chol.l_dirty();
    let (mut min, mut max) = (f64::INFINITY, 0.0f64);
    for i in 0..size {
        let pivot = l[(i, i)] * l[(i, i)];
        min = min.min(pivot);
        max = max.max(pivot);
    }
    if size > 0 && min < PIVOT_RATIO_FLOOR * max {
        return Err(LippError::Numerical {
            size,
            min_pivot: min,
            max_pivot: max,
        });
    }
    Ok(chol)
}

pub fn posterior_variance(
    model: &FieldModel,
    vertex_positions: &[Point],
    allocation: &SampleAllocation,
) -> Result<f64> {
    FieldEval::new(model, vertex_positions)?.posterior_variance(allocation)
}

pub fn llse_objective(
    model: &FieldModel,
    vertex_positions: &[Point],
    estimator: &Estimator,
    allocation: &SampleAllocation,
) -> Result<f64> {
    FieldEval::new(model, vertex_positions)?.llse_objective(estimator, allocation)
}

pub fn optimal_llse(
    model: &FieldModel,
    vertex_positions: &[Point],
    allocation: &SampleAllocation,
) -> Result<(Estimator, f64)> {
    FieldEval::new(model, vertex_positions)?.optimal_llse(allocation)
}
