use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;

use crate::error::{invalid, Error, Result};
use crate::grid::GridDesign;

/// Largest grid (in points) for which a dense `N x N` matrix is assembled.
pub const DEFAULT_DENSE_LIMIT: usize = 10_000;

/// An evaluable scalar function on `[0, 1]^d`.
pub type PointFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// Covariance kernel in Mercer form, `G(x, y) = sum_k lambda_k psi_k(x) psi_k(y)`.
#[derive(Clone)]
pub struct SpectralKernel {
    pub dim: usize,
    pub eigenvalues: Vec<f64>,
    pub eigenfunctions: Vec<PointFn>,
}

impl fmt::Debug for SpectralKernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SpectralKernel")
            .field("dim", &self.dim)
            .field("eigenvalues", &self.eigenvalues)
            .finish_non_exhaustive()
    }
}

/// Covariance kernel given as an explicit table over a grid.
#[derive(Debug, Clone)]
pub struct GridKernel {
    pub grid: GridDesign,
    /// `G(X_j, X_j')`, row-major `N x N`, *not* divided by `N`.
    pub values: Vec<f64>,
}

/// Covariance model of the subject-level process.
#[derive(Debug, Clone)]
pub enum KernelSpec {
    /// Additive Bernoulli polynomial kernel: per coordinate
    /// `G_0(x, y) = 2 sum_{k=1}^{k_max} cos(2 pi k (x - y)) / (2 pi k)^(varrho d)`,
    /// summed over the `d` coordinates.
    BernoulliPolynomial { varrho: f64, d: usize, k_max: usize },
    /// Cosine process `sum_k xi_k cos(2 pi x_k) + xi'_k sin(2 pi x_k)` with
    /// covariance `E xi^2 sum_k cos(2 pi (x_k - y_k))`, optionally divided by `d`.
    CosineProcess {
        xi_var: f64,
        d: usize,
        normalize_by_d: bool,
    },
    Spectral(SpectralKernel),
    Grid(GridKernel),
}

impl KernelSpec {
    /// Covariance used by the simulation presets: `sum_k cos(2 pi (x_k - y_k))`.
    pub fn simulation_cosine(d: usize) -> Self {
        KernelSpec::CosineProcess {
            xi_var: 1.0,
            d,
            normalize_by_d: false,
        }
    }

    /// The identically zero kernel on `[0, 1]^d`.
    pub fn zero(d: usize) -> Self {
        KernelSpec::CosineProcess {
            xi_var: 0.0,
            d,
            normalize_by_d: false,
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            KernelSpec::BernoulliPolynomial { d, .. } => *d,
            KernelSpec::CosineProcess { d, .. } => *d,
            KernelSpec::Spectral(s) => s.dim,
            KernelSpec::Grid(g) => g.grid.dim(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            KernelSpec::BernoulliPolynomial { varrho, d, k_max } => {
                if *d == 0 {
                    return Err(invalid("kernel dimension must be positive"));
                }
                if *k_max < 1 {
                    return Err(invalid("series truncation order k_max must be at least 1"));
                }
                if !(varrho * *d as f64 > 1.0) {
                    return Err(invalid(format!(
                        "Bernoulli kernel needs varrho * d > 1 for convergence (varrho={varrho}, d={d})"
                    )));
                }
            }
            KernelSpec::CosineProcess { xi_var, d, .. } => {
                if *d == 0 {
                    return Err(invalid("kernel dimension must be positive"));
                }
                if !(*xi_var >= 0.0) || !xi_var.is_finite() {
                    return Err(invalid(format!("E xi^2 must be finite and nonnegative, got {xi_var}")));
                }
            }
            KernelSpec::Spectral(s) => {
                if s.eigenvalues.len() != s.eigenfunctions.len() {
                    return Err(invalid("eigenvalue and eigenfunction counts differ"));
                }
                if s.eigenvalues.iter().any(|l| !(*l >= 0.0) || !l.is_finite()) {
                    return Err(invalid("spectral kernel eigenvalues must be finite and nonnegative"));
                }
                if s.eigenvalues.windows(2).any(|w| w[1] > w[0]) {
                    return Err(invalid("spectral kernel eigenvalues must be nonincreasing"));
                }
            }
            KernelSpec::Grid(g) => {
                let n = g.grid.len();
                if g.values.len() != n * n {
                    return Err(invalid(format!(
                        "grid kernel table has {} entries, expected {}",
                        g.values.len(),
                        n * n
                    )));
                }
                for i in 0..n {
                    for j in 0..i {
                        let (a, b) = (g.values[i * n + j], g.values[j * n + i]);
                        if (a - b).abs() > 1e-12 * a.abs().max(b.abs()).max(1.0) {
                            return Err(invalid("grid kernel table is not symmetric"));
                        }
                    }
                }
            }
        }
        Ok(())
    }

    /// Short identifier written into dataset metadata and CSV output.
    pub fn describe(&self) -> String {
        match self {
            KernelSpec::BernoulliPolynomial { varrho, d, k_max } => {
                format!("bernoulli(varrho={varrho},d={d},k_max={k_max})")
            }
            KernelSpec::CosineProcess {
                xi_var,
                d,
                normalize_by_d,
            } => format!("cosine(xi_var={xi_var},d={d},normalize_by_d={normalize_by_d})"),
            KernelSpec::Spectral(s) => format!("spectral(d={},terms={})", s.dim, s.eigenvalues.len()),
            KernelSpec::Grid(g) => format!("grid({})", g.grid),
        }
    }

    /// Whether the kernel is a sum of per-coordinate stationary periodic
    /// kernels, i.e. its grid matrices are sums of Kronecker products of
    /// circulant axis blocks with all-ones blocks.
    pub fn is_additive_circulant(&self) -> bool {
        matches!(
            self,
            KernelSpec::BernoulliPolynomial { .. } | KernelSpec::CosineProcess { .. }
        )
    }

    /// One coordinate's contribution to an additive kernel at lag `delta`.
    fn axis_value(&self, delta: f64) -> f64 {
        match self {
            KernelSpec::BernoulliPolynomial { varrho, d, k_max } => {
                let s = varrho * *d as f64;
                let mut sum = 0.0;
                for k in 1..=*k_max {
                    let w = 2.0 * PI * k as f64;
                    sum += (w * delta).cos() * w.powf(-s);
                }
                2.0 * sum
            }
            KernelSpec::CosineProcess {
                xi_var,
                d,
                normalize_by_d,
            } => {
                let scale = if *normalize_by_d { xi_var / *d as f64 } else { *xi_var };
                scale * (2.0 * PI * delta).cos()
            }
            _ => unreachable!("axis_value on a non-additive kernel"),
        }
    }

    /// Values of one coordinate's kernel at the lags `r / n` for
    /// `r = 0..n`. The kernel is even and 1-periodic in the lag, so this is
    /// also the first row of the circulant axis block up to the `1/n` factor.
    pub fn axis_lag_table(&self, n: usize) -> Result<Vec<f64>> {
        self.validate()?;
        match self {
            KernelSpec::BernoulliPolynomial { varrho, d, k_max } => {
                // fold the frequencies by residue so each lag costs O(n)
                let s = varrho * *d as f64;
                let mut by_residue = vec![0.0; n];
                for k in 1..=*k_max {
                    by_residue[k % n] += (2.0 * PI * k as f64).powf(-s);
                }
                Ok((0..n)
                    .map(|r| {
                        2.0 * by_residue
                            .iter()
                            .enumerate()
                            .map(|(q, c)| c * (2.0 * PI * ((q * r) % n) as f64 / n as f64).cos())
                            .sum::<f64>()
                    })
                    .collect())
            }
            KernelSpec::CosineProcess { .. } => Ok((0..n)
                .map(|r| self.axis_value(r as f64 / n as f64))
                .collect()),
            _ => Err(invalid(format!(
                "{} is not an additive per-coordinate kernel",
                self.describe()
            ))),
        }
    }
}

/// `G(x, y)`.
pub fn kernel_value(spec: &KernelSpec, x: &[f64], y: &[f64]) -> Result<f64> {
    spec.validate()?;
    let d = spec.dim();
    for p in [x, y] {
        if p.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                actual: p.len(),
            });
        }
    }
    match spec {
        KernelSpec::BernoulliPolynomial { .. } | KernelSpec::CosineProcess { .. } => {
            Ok(x.iter().zip(y).map(|(a, b)| spec.axis_value(a - b)).sum())
        }
        KernelSpec::Spectral(s) => Ok(s
            .eigenvalues
            .iter()
            .zip(&s.eigenfunctions)
            .map(|(l, psi)| l * psi(x) * psi(y))
            .sum()),
        KernelSpec::Grid(g) => {
            let i = g.grid.locate(x);
            let j = g.grid.locate(y);
            match (i, j) {
                (Some(i), Some(j)) => Ok(g.values[i * g.grid.len() + j]),
                _ => Err(invalid("grid kernel evaluated off its grid")),
            }
        }
    }
}

/// The scaled kernel matrix `C_N = [G(X_j, X_j') / N]`.
#[derive(Debug, Clone)]
pub struct KernelMatrix {
    pub grid: GridDesign,
    pub values: DMatrix<f64>,
}

impl KernelMatrix {
    pub fn n(&self) -> usize {
        self.grid.len()
    }
}

pub fn kernel_matrix(spec: &KernelSpec, grid: &GridDesign) -> Result<KernelMatrix> {
    kernel_matrix_with_limit(spec, grid, DEFAULT_DENSE_LIMIT)
}

pub fn kernel_matrix_with_limit(
    spec: &KernelSpec,
    grid: &GridDesign,
    dense_limit: usize,
) -> Result<KernelMatrix> {
    let g = covariance_matrix_with_limit(spec, grid, dense_limit)?;
    let n = grid.len() as f64;
    Ok(KernelMatrix {
        grid: grid.clone(),
        values: g / n,
    })
}

/// The unscaled covariance `[G(X_j, X_j')]` on the grid.
pub fn covariance_matrix(spec: &KernelSpec, grid: &GridDesign) -> Result<DMatrix<f64>> {
    covariance_matrix_with_limit(spec, grid, DEFAULT_DENSE_LIMIT)
}

pub(crate) fn covariance_matrix_with_limit(
    spec: &KernelSpec,
    grid: &GridDesign,
    dense_limit: usize,
) -> Result<DMatrix<f64>> {
    spec.validate()?;
    if spec.dim() != grid.dim() {
        return Err(Error::DimensionMismatch {
            expected: spec.dim(),
            actual: grid.dim(),
        });
    }
    let n = grid.len();
    if n > dense_limit {
        return Err(Error::DenseLimit {
            size: n,
            limit: dense_limit,
        });
    }
    match spec {
        KernelSpec::BernoulliPolynomial { .. } | KernelSpec::CosineProcess { .. } => {
            let tables: Vec<Vec<f64>> = grid
                .dims()
                .iter()
                .map(|&nk| spec.axis_lag_table(nk))
                .collect::<Result<_>>()?;
            let multi: Vec<Vec<usize>> = (0..n).map(|j| grid.multi_index_unchecked(j)).collect();
            let mut m = DMatrix::zeros(n, n);
            for i in 0..n {
                for j in 0..=i {
                    let v: f64 = tables
                        .iter()
                        .enumerate()
                        .map(|(k, t)| t[multi[i][k].abs_diff(multi[j][k])])
                        .sum();
                    m[(i, j)] = v;
                    m[(j, i)] = v;
                }
            }
            Ok(m)
        }
        KernelSpec::Spectral(s) => {
            let d = grid.dim();
            let coords = grid.coordinates();
            let terms = s.eigenvalues.len();
            let mut phi = DMatrix::zeros(n, terms);
            for j in 0..n {
                let x = &coords[j * d..(j + 1) * d];
                for (t, psi) in s.eigenfunctions.iter().enumerate() {
                    phi[(j, t)] = psi(x) * s.eigenvalues[t].sqrt();
                }
            }
            Ok(&phi * phi.transpose())
        }
        KernelSpec::Grid(gk) => {
            if gk.grid != *grid {
                return Err(invalid(format!(
                    "grid kernel defined on {} but requested on {}",
                    gk.grid, grid
                )));
            }
            Ok(DMatrix::from_row_slice(n, n, &gk.values))
        }
    }
}

/// The `n x n` axis block `[G_0(l/n, l'/n) / n]` of an additive kernel
/// (the circulant factor of its Kronecker representation).
pub fn axis_block(spec: &KernelSpec, n: usize) -> Result<DMatrix<f64>> {
    let table = spec.axis_lag_table(n)?;
    let nf = n as f64;
    Ok(DMatrix::from_fn(n, n, |i, j| table[i.abs_diff(j)] / nf))
}

/// First row of the circulant axis block.
pub fn axis_first_row(spec: &KernelSpec, n: usize) -> Result<Vec<f64>> {
    let nf = n as f64;
    Ok(spec.axis_lag_table(n)?.into_iter().map(|v| v / nf).collect())
}
