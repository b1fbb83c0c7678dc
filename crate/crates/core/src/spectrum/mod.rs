//! Covariance kernels, kernel matrices `C_N`, and the size of their top
//! eigenvalue as the grid grows.
//!
//! Three routes to `lambda_{1,N}` are provided and cross-checked in tests:
//! closed-form circulant eigenvalues (Bernoulli series via the Hurwitz zeta
//! function), Kronecker/circulant structure on an arbitrary regular grid,
//! and power iteration or a dense solver on the assembled matrix.

mod circulant;
mod eigen;
mod kernel;
mod zeta;

use std::io::Write;

pub use circulant::{
    bernoulli_eigenvalues, bernoulli_truncation_order, circulant_eigenvalues, circulant_spectrum,
    SeriesTruncation,
};
pub use eigen::{
    check_psd, dense_eigenvalues, kronecker_component, kronecker_max_eigenvalue, max_eigenvalue,
    max_eigenvalue_with, power_iteration, structured_max_eigenvalue, EigenMethod, MaxEigenvalue,
    PowerOptions, DENSE_CROSS_CHECK_LIMIT,
};
pub use kernel::{
    axis_block, axis_first_row, covariance_matrix, kernel_matrix, kernel_matrix_with_limit,
    kernel_value, GridKernel, KernelMatrix, KernelSpec, PointFn, SpectralKernel,
    DEFAULT_DENSE_LIMIT,
};
pub use zeta::{hurwitz_zeta, riemann_zeta};

use crate::error::{invalid, Error, Result};
use crate::grid::GridDesign;
use crate::stats::fit_line;

/// Fitted decay exponent of `lambda_{1,N} ~ N^{-varrho}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayFit {
    pub varrho: f64,
    pub std_err: f64,
    pub points: usize,
}

/// Least-squares fit of `log lambda_{1,N}` on `log N`; `varrho_hat` is
/// minus the slope.
pub fn estimate_decay_rate(lambda_by_n: &[(usize, f64)]) -> Result<DecayFit> {
    let mut distinct: Vec<usize> = lambda_by_n.iter().map(|p| p.0).collect();
    distinct.sort_unstable();
    distinct.dedup();
    if distinct.len() < 3 {
        return Err(invalid(format!(
            "decay fit needs at least 3 distinct N values, got {}",
            distinct.len()
        )));
    }
    if let Some(&(n, l)) = lambda_by_n.iter().find(|p| !(p.1 > 0.0) || p.0 == 0) {
        return Err(invalid(format!(
            "decay fit needs positive eigenvalues and N (N={n}, lambda={l})"
        )));
    }
    let xs: Vec<f64> = lambda_by_n.iter().map(|p| (p.0 as f64).ln()).collect();
    let ys: Vec<f64> = lambda_by_n.iter().map(|p| p.1.ln()).collect();
    let line = fit_line(&xs, &ys)?;
    Ok(DecayFit {
        varrho: -line.slope,
        std_err: line.slope_se,
        points: line.points,
    })
}

/// Kernel families with a per-axis count sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SweepKernel {
    Bernoulli { varrho: f64, d: usize, k_max: usize },
    Cosine {
        xi_var: f64,
        d: usize,
        normalize_by_d: bool,
    },
}

impl SweepKernel {
    pub fn spec(&self) -> KernelSpec {
        match *self {
            SweepKernel::Bernoulli { varrho, d, k_max } => {
                KernelSpec::BernoulliPolynomial { varrho, d, k_max }
            }
            SweepKernel::Cosine {
                xi_var,
                d,
                normalize_by_d,
            } => KernelSpec::CosineProcess {
                xi_var,
                d,
                normalize_by_d,
            },
        }
    }

    fn name(&self) -> &'static str {
        match self {
            SweepKernel::Bernoulli { .. } => "bernoulli",
            SweepKernel::Cosine { .. } => "cosine",
        }
    }

    fn dim(&self) -> usize {
        match *self {
            SweepKernel::Bernoulli { d, .. } | SweepKernel::Cosine { d, .. } => d,
        }
    }

    fn varrho(&self) -> Option<f64> {
        match *self {
            SweepKernel::Bernoulli { varrho, .. } => Some(varrho),
            SweepKernel::Cosine { .. } => None,
        }
    }

    /// Per-axis circulant eigenvalues from closed forms: the full Bernoulli
    /// series, or the cosine block's `scale/2` pair.
    fn axis_eigenvalues_formula(&self, n: usize) -> Result<Vec<f64>> {
        match *self {
            SweepKernel::Bernoulli { varrho, d, .. } => {
                bernoulli_eigenvalues(varrho, d, n, SeriesTruncation::Exact)
            }
            SweepKernel::Cosine {
                xi_var,
                d,
                normalize_by_d,
            } => {
                let scale = if normalize_by_d { xi_var / d as f64 } else { xi_var };
                let mut mu = vec![0.0; n];
                match n {
                    1 => mu[0] = scale,
                    2 => mu[1] = scale,
                    _ => {
                        mu[1] = scale / 2.0;
                        mu[n - 1] = scale / 2.0;
                    }
                }
                Ok(mu)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepMethod {
    Formula,
    Circulant,
    PowerIteration,
    Dense,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumRow {
    pub kernel: String,
    pub varrho: Option<f64>,
    pub d: usize,
    pub n: usize,
    pub lambda1: f64,
    pub method: EigenMethod,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumReport {
    pub rows: Vec<SpectrumRow>,
    pub fit: Option<DecayFit>,
}

impl SpectrumReport {
    /// CSV with columns `kernel,varrho,d,N,lambda1,method`, followed by a
    /// `#`-prefixed summary line with the fitted exponent.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "kernel,varrho,d,N,lambda1,method")?;
        for r in &self.rows {
            let varrho = r.varrho.map(|v| v.to_string()).unwrap_or_default();
            writeln!(
                w,
                "{},{},{},{},{:.17e},{}",
                r.kernel,
                varrho,
                r.d,
                r.n,
                r.lambda1,
                r.method.tag()
            )?;
        }
        match self.fit {
            Some(f) => writeln!(
                w,
                "# varrho_hat={:.6},se={:.6},points={}",
                f.varrho, f.std_err, f.points
            )?,
            None => writeln!(w, "# varrho_hat=unavailable (needs at least 3 distinct N)")?,
        }
        Ok(())
    }
}

/// `lambda_{1,N}` over grids with `n_d` points on each of the `d` axes.
pub fn spectrum_sweep(
    kernel: SweepKernel,
    axis_counts: &[usize],
    method: SweepMethod,
) -> Result<SpectrumReport> {
    if axis_counts.is_empty() {
        return Err(invalid("empty axis-count sweep"));
    }
    let d = kernel.dim();
    let spec = kernel.spec();
    spec.validate()?;
    let mut rows = Vec::with_capacity(axis_counts.len());
    for &nd in axis_counts {
        let grid = GridDesign::new(&vec![nd; d])?;
        let (lambda1, tag) = match method {
            SweepMethod::Formula => {
                let mu = kernel.axis_eigenvalues_formula(nd)?;
                let constant = d as f64 * mu[0];
                let top = mu[1..].iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                (constant.max(top), EigenMethod::Formula)
            }
            SweepMethod::Circulant => (structured_max_eigenvalue(&spec, &grid)?, EigenMethod::Circulant),
            SweepMethod::PowerIteration => {
                let km = kernel_matrix(&spec, &grid)?;
                (max_eigenvalue(&km)?.value, EigenMethod::PowerIteration)
            }
            SweepMethod::Dense => {
                let km = kernel_matrix(&spec, &grid)?;
                (dense_eigenvalues(&km.values)[0], EigenMethod::Dense)
            }
        };
        rows.push(SpectrumRow {
            kernel: kernel.name().to_string(),
            varrho: kernel.varrho(),
            d,
            n: grid.len(),
            lambda1,
            method: tag,
        });
    }
    let pairs: Vec<(usize, f64)> = rows.iter().map(|r| (r.n, r.lambda1)).collect();
    let fit = match estimate_decay_rate(&pairs) {
        Ok(f) => Some(f),
        Err(Error::InvalidArgument(_)) => None,
        Err(e) => return Err(e),
    };
    Ok(SpectrumReport { rows, fit })
}
