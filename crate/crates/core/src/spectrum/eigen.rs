use nalgebra::{DMatrix, DVector, SymmetricEigen};

use super::circulant::circulant_eigenvalues;
use super::kernel::{axis_first_row, KernelMatrix, KernelSpec};
use crate::error::{invalid, Error, Result};
use crate::grid::GridDesign;

/// Matrices up to this size get a dense cross-check of the power iteration.
pub const DENSE_CROSS_CHECK_LIMIT: usize = 500;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerOptions {
    pub rel_tol: f64,
    pub max_iter: usize,
}

impl Default for PowerOptions {
    fn default() -> Self {
        Self {
            rel_tol: 1e-10,
            max_iter: 100_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EigenMethod {
    Formula,
    Circulant,
    Kronecker,
    PowerIteration,
    Dense,
}

impl EigenMethod {
    pub fn tag(self) -> &'static str {
        match self {
            EigenMethod::Formula => "formula",
            EigenMethod::Circulant => "circulant",
            EigenMethod::Kronecker => "kronecker",
            EigenMethod::PowerIteration => "power-iteration",
            EigenMethod::Dense => "dense",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaxEigenvalue {
    pub value: f64,
    pub method: EigenMethod,
    pub iterations: usize,
    /// Dense eigensolver result when the matrix is small enough to check.
    pub dense: Option<f64>,
}

/// Power iteration for the largest eigenvalue of a symmetric positive
/// semi-definite matrix. Starts from the all-ones vector with a small
/// deterministic perturbation and stops when the Rayleigh quotient changes
/// by less than `rel_tol` (relative) on two consecutive iterations.
pub fn power_iteration(m: &DMatrix<f64>, opts: PowerOptions) -> Result<(f64, usize)> {
    let n = m.nrows();
    if n == 0 || m.ncols() != n {
        return Err(invalid("power iteration needs a non-empty square matrix"));
    }
    let mut v = DVector::from_fn(n, |j, _| 1.0 + 1e-3 * (1.0 + 2.3 * j as f64).sin());
    v.normalize_mut();
    let mut lambda = f64::NAN;
    let mut calm = 0;
    let mut change = f64::INFINITY;
    for it in 1..=opts.max_iter {
        let w = m * &v;
        let next = v.dot(&w);
        let norm = w.norm();
        if norm == 0.0 {
            return Ok((0.0, it));
        }
        if lambda.is_finite() {
            change = (next - lambda).abs() / next.abs().max(f64::MIN_POSITIVE);
            calm = if change <= opts.rel_tol { calm + 1 } else { 0 };
        }
        lambda = next;
        v = w / norm;
        if calm >= 2 {
            return Ok((lambda, it));
        }
    }
    Err(Error::NoConvergence {
        iterations: opts.max_iter,
        last_change: change,
    })
}

/// All eigenvalues of a symmetric matrix, largest first.
pub fn dense_eigenvalues(m: &DMatrix<f64>) -> Vec<f64> {
    let mut ev: Vec<f64> = SymmetricEigen::new(m.clone()).eigenvalues.iter().copied().collect();
    ev.sort_by(|a, b| b.total_cmp(a));
    ev
}

/// `lambda_{1,N}` of a kernel matrix by power iteration, cross-checked with a
/// dense solver for `N <= 500`.
pub fn max_eigenvalue(km: &KernelMatrix) -> Result<MaxEigenvalue> {
    max_eigenvalue_with(km, PowerOptions::default())
}

pub fn max_eigenvalue_with(km: &KernelMatrix, opts: PowerOptions) -> Result<MaxEigenvalue> {
    let (value, iterations) = power_iteration(&km.values, opts)?;
    let dense = (km.n() <= DENSE_CROSS_CHECK_LIMIT).then(|| dense_eigenvalues(&km.values)[0]);
    if let Some(dv) = dense {
        let scale = dv.abs().max(value.abs()).max(f64::MIN_POSITIVE);
        if (dv - value).abs() > 1e-6 * scale {
            return Err(Error::Numerical(format!(
                "power iteration ({value:e}) disagrees with dense eigensolver ({dv:e})"
            )));
        }
    }
    Ok(MaxEigenvalue {
        value,
        method: EigenMethod::PowerIteration,
        iterations,
        dense,
    })
}

/// Fails if the smallest eigenvalue is below `-1e-8 * lambda_max`.
pub fn check_psd(m: &DMatrix<f64>) -> Result<()> {
    let ev = dense_eigenvalues(m);
    let (max, min) = (ev[0], *ev.last().unwrap());
    if min < -1e-8 * max.abs().max(f64::MIN_POSITIVE) {
        return Err(Error::NotPsd {
            min_eigenvalue: min,
            max_eigenvalue: max,
        });
    }
    Ok(())
}

/// Largest eigenvalue of `C_{N,k} = n^{1-d} (1 x ... x A x ... x 1)` given
/// the symmetric `n x n` axis block `A`. The all-ones factor has top
/// eigenvalue `n`, so the result is `n^{1-d} n^{d-1} lambda_max(A)`.
pub fn kronecker_max_eigenvalue(axis: &DMatrix<f64>, d: usize) -> Result<f64> {
    let n = axis.nrows();
    if n == 0 || axis.ncols() != n || d == 0 {
        return Err(invalid("axis block must be square and non-empty, d positive"));
    }
    let nf = n as f64;
    let weight = nf.powi(1 - d as i32);
    let ones_top = nf.powi(d as i32 - 1);
    Ok(weight * ones_top * dense_eigenvalues(axis)[0])
}

/// Explicitly assembles `C_{N,k} = n^{1-d} (1 x ... x A x ... x 1)` with the
/// axis block for coordinate `k` (1-based) in Kronecker position `d - k`, so
/// coordinate 1 is the trailing (fastest varying) factor.
pub fn kronecker_component(axis: &DMatrix<f64>, d: usize, k: usize) -> Result<DMatrix<f64>> {
    let n = axis.nrows();
    if k == 0 || k > d {
        return Err(invalid(format!("coordinate {k} outside 1..={d}")));
    }
    let ones = DMatrix::from_element(n, n, 1.0);
    let mut out = DMatrix::from_element(1, 1, (n as f64).powi(1 - d as i32));
    for pos in 0..d {
        let factor = if pos == d - k { axis } else { &ones };
        out = out.kronecker(factor);
    }
    Ok(out)
}

/// `lambda_{1,N}` of an additive circulant kernel on any regular grid
/// without assembling the `N x N` matrix.
///
/// Every axis component is diagonalized by the tensor Fourier basis. A mode
/// with frequencies `(f_1, .., f_d)` has eigenvalue `sum_k mu_k(0)` when all
/// frequencies vanish, `mu_k(f_k)` when only `f_k` is nonzero, and zero
/// otherwise, where `mu_k` are the circulant eigenvalues of axis `k`'s block.
pub fn structured_max_eigenvalue(spec: &KernelSpec, grid: &GridDesign) -> Result<f64> {
    if !spec.is_additive_circulant() {
        return Err(invalid(format!(
            "{} has no circulant structure",
            spec.describe()
        )));
    }
    if spec.dim() != grid.dim() {
        return Err(Error::DimensionMismatch {
            expected: spec.dim(),
            actual: grid.dim(),
        });
    }
    let mut constant_mode = 0.0;
    let mut best = f64::NEG_INFINITY;
    for &nk in grid.dims() {
        let mu = circulant_eigenvalues(&axis_first_row(spec, nk)?)?;
        constant_mode += mu[0];
        if let Some(top) = mu[1..].iter().cloned().reduce(f64::max) {
            best = best.max(top);
        }
    }
    Ok(best.max(constant_mode))
}
