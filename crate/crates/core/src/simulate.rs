//! Functional data `Y_ij = f0(X_j) + eta_i(X_j) + tau(X_j) e_ij`.

use std::f64::consts::{PI, TAU};
use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;

use crate::error::{invalid, Error, Result};
use crate::grid::GridDesign;
use crate::rng::{standard_normal, substream, Rng, StreamRole};
use crate::spectrum::{covariance_matrix, KernelSpec};

/// `f: R -> R`, one coordinate of an additive model.
pub type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;
/// `g_i: R^{d_i} -> R^{d_{i+1}}`, one layer of a composition.
pub type LayerFn = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;

/// Exponent magnitude beyond which Case 1's logistic term is saturated.
const CASE1_SATURATION: f64 = 700.0;

/// Parameters of a composition class `g_q o ... o g_0`.
#[derive(Debug, Clone, PartialEq)]
pub struct CompositionSpec {
    /// Layer dimensions `d_0, .., d_{q+1}`.
    pub dims: Vec<usize>,
    /// Active-variable counts `t_0, .., t_q`.
    pub active: Vec<usize>,
    /// Hölder smoothness `beta_0, .., beta_q`.
    pub smoothness: Vec<f64>,
    /// Hölder radii `K_0, .., K_q`.
    pub radii: Vec<f64>,
}

impl CompositionSpec {
    /// Composition depth `q`.
    pub fn depth(&self) -> usize {
        self.active.len() - 1
    }

    pub fn validate(&self) -> Result<()> {
        let layers = self.active.len();
        if layers == 0 {
            return Err(invalid("composition needs at least one layer"));
        }
        if self.dims.len() != layers + 1 || self.smoothness.len() != layers || self.radii.len() != layers {
            return Err(invalid(
                "composition vectors must have lengths q+2 (dims) and q+1 (active, smoothness, radii)",
            ));
        }
        for i in 0..layers {
            if self.active[i] == 0 || self.active[i] > self.dims[i] {
                return Err(invalid(format!(
                    "layer {i}: active count {} must be in 1..={}",
                    self.active[i], self.dims[i]
                )));
            }
            if !(self.smoothness[i] > 0.0) || !(self.radii[i] > 0.0) {
                return Err(invalid(format!("layer {i}: smoothness and radius must be positive")));
            }
        }
        Ok(())
    }

    /// `beta*_i = beta_i prod_{k > i} min(beta_k, 1)`.
    pub fn effective_beta(&self, i: usize) -> f64 {
        self.smoothness[i]
            * self.smoothness[i + 1..]
                .iter()
                .map(|b| b.min(1.0))
                .product::<f64>()
    }

    /// `theta = min_i 2 beta*_i / t_i`, the exponent in the
    /// `(n N^varrho)^{-theta/(theta+1)}` rate.
    pub fn effective_smoothness(&self) -> Result<f64> {
        self.validate()?;
        Ok((0..self.active.len())
            .map(|i| 2.0 * self.effective_beta(i) / self.active[i] as f64)
            .fold(f64::INFINITY, f64::min))
    }

    /// `max_i K_i`.
    pub fn max_radius(&self) -> f64 {
        self.radii.iter().cloned().fold(0.0, f64::max)
    }
}

#[derive(Clone)]
pub enum MeanFunction {
    /// `-8 / (1 + exp(cot(x1^2) cos(2 pi x2)))`.
    Case1,
    /// `ln(sin(2 pi x1) + 2 |tan(2 pi x2)| + 2)`.
    Case2,
    /// `exp(x1/3 + x2/3 + sqrt(x3 + 0.1))`.
    Case3D,
    /// `intercept + sum_k slopes[k] x_k`.
    Linear { intercept: f64, slopes: Vec<f64> },
    /// `sum_k f_k(x_k)`.
    Additive(Vec<ScalarFn>),
    Composition {
        spec: CompositionSpec,
        layers: Vec<LayerFn>,
    },
}

impl fmt::Debug for MeanFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.id())
    }
}

impl MeanFunction {
    pub fn dim(&self) -> usize {
        match self {
            MeanFunction::Case1 | MeanFunction::Case2 => 2,
            MeanFunction::Case3D => 3,
            MeanFunction::Linear { slopes, .. } => slopes.len(),
            MeanFunction::Additive(c) => c.len(),
            MeanFunction::Composition { spec, .. } => spec.dims[0],
        }
    }

    /// Identifier used in file metadata; parseable by [`MeanFunction::from_id`]
    /// for the named and linear variants.
    pub fn id(&self) -> String {
        match self {
            MeanFunction::Case1 => "case1".into(),
            MeanFunction::Case2 => "case2".into(),
            MeanFunction::Case3D => "case3d".into(),
            MeanFunction::Linear { intercept, slopes } => {
                let s: Vec<String> = slopes.iter().map(|v| v.to_string()).collect();
                format!("linear:{intercept};{}", s.join(","))
            }
            MeanFunction::Additive(c) => format!("additive(d={})", c.len()),
            MeanFunction::Composition { spec, .. } => format!("composition(q={})", spec.depth()),
        }
    }

    /// Parses `case1`, `case2`, `case3d`, `identity` (1D `f(x) = x`) and
    /// `linear:<intercept>;<slope_1>,..,<slope_d>`.
    pub fn from_id(id: &str) -> Result<Self> {
        let id = id.trim();
        match id.to_ascii_lowercase().as_str() {
            "case1" | "case1-2d" => return Ok(MeanFunction::Case1),
            "case2" | "case2-2d" => return Ok(MeanFunction::Case2),
            "case3d" | "case3" => return Ok(MeanFunction::Case3D),
            "identity" => {
                return Ok(MeanFunction::Linear {
                    intercept: 0.0,
                    slopes: vec![1.0],
                })
            }
            _ => {}
        }
        let body = id
            .strip_prefix("linear:")
            .ok_or_else(|| invalid(format!("unknown mean function '{id}'")))?;
        let (b, s) = body
            .split_once(';')
            .ok_or_else(|| invalid("linear mean needs 'linear:<intercept>;<slopes>'"))?;
        let parse = |t: &str| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| invalid(format!("bad number '{t}' in mean id")))
        };
        let intercept = parse(b)?;
        let slopes = s.split(',').map(parse).collect::<Result<Vec<_>>>()?;
        if slopes.is_empty() {
            return Err(invalid("linear mean needs at least one slope"));
        }
        Ok(MeanFunction::Linear { intercept, slopes })
    }
}

fn case1(x1: f64, x2: f64) -> f64 {
    let z = (x1 * x1).tan().recip() * (TAU * x2).cos();
    if z > CASE1_SATURATION {
        0.0
    } else if z < -CASE1_SATURATION {
        -8.0
    } else {
        -8.0 / (1.0 + z.exp())
    }
}

fn case2(x1: f64, x2: f64) -> f64 {
    ((TAU * x1).sin() + 2.0 * (TAU * x2).tan().abs() + 2.0).ln()
}

fn case3d(x1: f64, x2: f64, x3: f64) -> f64 {
    (x1 / 3.0 + x2 / 3.0 + (x3 + 0.1).sqrt()).exp()
}

/// `f0(x)`.
pub fn eval_mean(f0: &MeanFunction, x: &[f64]) -> Result<f64> {
    let d = f0.dim();
    if x.len() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            actual: x.len(),
        });
    }
    let v = match f0 {
        MeanFunction::Case1 => case1(x[0], x[1]),
        MeanFunction::Case2 => case2(x[0], x[1]),
        MeanFunction::Case3D => case3d(x[0], x[1], x[2]),
        MeanFunction::Linear { intercept, slopes } => {
            intercept + slopes.iter().zip(x).map(|(a, b)| a * b).sum::<f64>()
        }
        MeanFunction::Additive(c) => c.iter().zip(x).map(|(f, &xi)| f(xi)).sum(),
        MeanFunction::Composition { spec, layers } => {
            spec.validate()?;
            if layers.len() != spec.active.len() {
                return Err(invalid("composition layer count does not match its spec"));
            }
            let mut z = x.to_vec();
            for (i, g) in layers.iter().enumerate() {
                z = g(&z);
                if z.len() != spec.dims[i + 1] {
                    return Err(Error::DimensionMismatch {
                        expected: spec.dims[i + 1],
                        actual: z.len(),
                    });
                }
            }
            if z.len() != 1 {
                return Err(invalid("composition must end in a scalar"));
            }
            z[0]
        }
    };
    if !v.is_finite() {
        return Err(Error::Numerical(format!("{} is not finite at {x:?}", f0.id())));
    }
    Ok(v)
}

/// `f0` at every grid point, in grid order.
pub fn mean_on_grid(f0: &MeanFunction, grid: &GridDesign) -> Result<Vec<f64>> {
    if f0.dim() != grid.dim() {
        return Err(Error::DimensionMismatch {
            expected: f0.dim(),
            actual: grid.dim(),
        });
    }
    let mut x = vec![0.0; grid.dim()];
    (0..grid.len())
        .map(|j| {
            grid.point_into(j, &mut x);
            eval_mean(f0, &x)
        })
        .collect()
}

/// Measurement-error standard deviation `tau(X_j)`.
#[derive(Debug, Clone, PartialEq)]
pub enum NoiseSpec {
    /// No measurement error (the `sigma -> 0` limit).
    Disabled,
    Constant(f64),
    /// One value per grid point, in grid order.
    Grid(Vec<f64>),
}

impl NoiseSpec {
    pub fn validate(&self, grid: &GridDesign) -> Result<()> {
        let ok = |v: f64| v > 0.0 && v.is_finite();
        match self {
            NoiseSpec::Disabled => Ok(()),
            NoiseSpec::Constant(s) if ok(*s) => Ok(()),
            NoiseSpec::Constant(s) => Err(invalid(format!("noise sd must be positive and finite, got {s}"))),
            NoiseSpec::Grid(t) => {
                if t.len() != grid.len() {
                    return Err(Error::DimensionMismatch {
                        expected: grid.len(),
                        actual: t.len(),
                    });
                }
                if t.iter().all(|&v| ok(v)) {
                    Ok(())
                } else {
                    Err(invalid("noise sd values must be positive and finite"))
                }
            }
        }
    }

    #[inline]
    fn sd(&self, j: usize) -> f64 {
        match self {
            NoiseSpec::Disabled => 0.0,
            NoiseSpec::Constant(s) => *s,
            NoiseSpec::Grid(t) => t[j],
        }
    }

    pub fn describe(&self) -> String {
        match self {
            NoiseSpec::Disabled => "none".into(),
            NoiseSpec::Constant(s) => format!("sigma={s}"),
            NoiseSpec::Grid(_) => "tau-grid".into(),
        }
    }

    /// Constant sd, if any.
    pub fn sigma(&self) -> Option<f64> {
        match self {
            NoiseSpec::Disabled => Some(0.0),
            NoiseSpec::Constant(s) => Some(*s),
            NoiseSpec::Grid(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct DatasetMeta {
    pub mean_id: String,
    pub kernel: String,
    pub noise: String,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FunctionalDataset {
    pub grid: GridDesign,
    /// Subject count `n`.
    pub n: usize,
    /// Row-major `n x N` observations.
    pub y: Vec<f64>,
    pub meta: DatasetMeta,
}

impl FunctionalDataset {
    pub fn new(grid: GridDesign, n: usize, y: Vec<f64>, meta: DatasetMeta) -> Result<Self> {
        if n == 0 {
            return Err(invalid("dataset needs at least one subject"));
        }
        if y.len() != n * grid.len() {
            return Err(Error::DimensionMismatch {
                expected: n * grid.len(),
                actual: y.len(),
            });
        }
        if let Some(p) = y.iter().position(|v| !v.is_finite()) {
            return Err(Error::Numerical(format!(
                "non-finite observation at subject {}, point {}",
                p / grid.len() + 1,
                p % grid.len() + 1
            )));
        }
        Ok(Self { grid, n, y, meta })
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let n = self.grid.len();
        &self.y[i * n..(i + 1) * n]
    }
}

/// Column means `Ybar_j = (1/n) sum_i Y_ij`.
pub fn pointwise_mean(data: &FunctionalDataset) -> Vec<f64> {
    let n_pts = data.grid.len();
    let mut acc = vec![0.0; n_pts];
    for row in data.y.chunks_exact(n_pts) {
        for (a, v) in acc.iter_mut().zip(row) {
            *a += v;
        }
    }
    let n = data.n as f64;
    acc.iter_mut().for_each(|a| *a /= n);
    acc
}

/// Draws mean-zero Gaussian process paths on a fixed grid.
#[derive(Debug, Clone)]
pub struct GpSampler {
    n_points: usize,
    kind: SamplerKind,
}

#[derive(Debug, Clone)]
enum SamplerKind {
    Zero,
    /// Exact spectral representation of the cosine process: row-major
    /// `N x 2d` table of `cos(2 pi x_k), sin(2 pi x_k)` and the sd of the
    /// coefficients.
    Cosine { basis: Vec<f64>, terms: usize, sd: f64 },
    /// Karhunen-Loeve factor `V sqrt(Lambda)`, `N x r`.
    Factor(DMatrix<f64>),
}

impl GpSampler {
    pub fn new(kernel: &KernelSpec, grid: &GridDesign) -> Result<Self> {
        kernel.validate()?;
        if kernel.dim() != grid.dim() {
            return Err(Error::DimensionMismatch {
                expected: kernel.dim(),
                actual: grid.dim(),
            });
        }
        let n_points = grid.len();
        let kind = match kernel {
            KernelSpec::CosineProcess {
                xi_var,
                d,
                normalize_by_d,
            } => {
                let var = if *normalize_by_d { xi_var / *d as f64 } else { *xi_var };
                if var == 0.0 {
                    SamplerKind::Zero
                } else {
                    let terms = 2 * d;
                    let mut basis = Vec::with_capacity(n_points * terms);
                    let mut x = vec![0.0; *d];
                    for j in 0..n_points {
                        grid.point_into(j, &mut x);
                        for &xk in &x {
                            basis.push((2.0 * PI * xk).cos());
                            basis.push((2.0 * PI * xk).sin());
                        }
                    }
                    SamplerKind::Cosine {
                        basis,
                        terms,
                        sd: var.sqrt(),
                    }
                }
            }
            _ => {
                let cov = covariance_matrix(kernel, grid)?;
                let eig = SymmetricEigen::new(cov);
                let max = eig.eigenvalues.iter().cloned().fold(0.0, f64::max);
                let min = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
                if min < -1e-8 * max.max(f64::MIN_POSITIVE) {
                    return Err(Error::NotPsd {
                        min_eigenvalue: min,
                        max_eigenvalue: max,
                    });
                }
                let keep: Vec<usize> = (0..n_points)
                    .filter(|&i| eig.eigenvalues[i] > 1e-14 * max)
                    .collect();
                if keep.is_empty() {
                    SamplerKind::Zero
                } else {
                    let mut factor = DMatrix::zeros(n_points, keep.len());
                    for (c, &i) in keep.iter().enumerate() {
                        let s = eig.eigenvalues[i].sqrt();
                        for r in 0..n_points {
                            factor[(r, c)] = eig.eigenvectors[(r, i)] * s;
                        }
                    }
                    SamplerKind::Factor(factor)
                }
            }
        };
        Ok(Self { n_points, kind })
    }

    pub fn len(&self) -> usize {
        self.n_points
    }

    pub fn is_empty(&self) -> bool {
        self.n_points == 0
    }

    /// Adds one draw to `out`.
    pub fn add_sample(&self, rng: &mut Rng, out: &mut [f64]) {
        debug_assert_eq!(out.len(), self.n_points);
        match &self.kind {
            SamplerKind::Zero => {}
            SamplerKind::Cosine { basis, terms, sd } => {
                let coef: Vec<f64> = (0..*terms).map(|_| sd * standard_normal(rng)).collect();
                for (o, b) in out.iter_mut().zip(basis.chunks_exact(*terms)) {
                    *o += b.iter().zip(&coef).map(|(u, c)| u * c).sum::<f64>();
                }
            }
            SamplerKind::Factor(f) => {
                let z: Vec<f64> = (0..f.ncols()).map(|_| standard_normal(rng)).collect();
                for (r, o) in out.iter_mut().enumerate() {
                    let mut acc = 0.0;
                    for (c, zc) in z.iter().enumerate() {
                        acc += f[(r, c)] * zc;
                    }
                    *o += acc;
                }
            }
        }
    }

    pub fn sample(&self, rng: &mut Rng) -> Vec<f64> {
        let mut out = vec![0.0; self.n_points];
        self.add_sample(rng, &mut out);
        out
    }
}

/// One draw of `eta` on the grid. Builds a fresh sampler; use
/// [`GpSampler`] directly for repeated draws.
pub fn sample_eta(kernel: &KernelSpec, grid: &GridDesign, rng: &mut Rng) -> Result<Vec<f64>> {
    Ok(GpSampler::new(kernel, grid)?.sample(rng))
}

/// `n` independent subjects. Subject `i` draws its process from stream
/// `(seed, i, SubjectEffect)` and its noise from `(seed, i, Noise)`, so a
/// smaller dataset is a prefix of a larger one with the same seed.
pub fn simulate_dataset(
    n: usize,
    grid: &GridDesign,
    f0: &MeanFunction,
    kernel: &KernelSpec,
    noise: &NoiseSpec,
    seed: u64,
) -> Result<FunctionalDataset> {
    if n == 0 {
        return Err(invalid("subject count must be at least 1"));
    }
    noise.validate(grid)?;
    let mean = mean_on_grid(f0, grid)?;
    let sampler = GpSampler::new(kernel, grid)?;
    let n_pts = grid.len();
    let mut y = vec![0.0; n * n_pts];
    y.par_chunks_mut(n_pts).enumerate().for_each(|(i, row)| {
        row.copy_from_slice(&mean);
        let mut eta_rng = substream(seed, i as u64, StreamRole::SubjectEffect);
        sampler.add_sample(&mut eta_rng, row);
        if !matches!(noise, NoiseSpec::Disabled) {
            let mut noise_rng = substream(seed, i as u64, StreamRole::Noise);
            for (j, v) in row.iter_mut().enumerate() {
                *v += noise.sd(j) * standard_normal(&mut noise_rng);
            }
        }
    });
    FunctionalDataset::new(
        grid.clone(),
        n,
        y,
        DatasetMeta {
            mean_id: f0.id(),
            kernel: kernel.describe(),
            noise: noise.describe(),
            seed,
        },
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectrum::kernel_value;

    #[test]
    fn case1_collapses_on_cosine_zero() {
        for x1 in [0.04, 0.3, 0.77, 1.0] {
            let v = eval_mean(&MeanFunction::Case1, &[x1, 0.25]).unwrap();
            assert!((v + 4.0).abs() < 1e-12);
        }
    }

    #[test]
    fn case1_saturates_within_range() {
        let g = GridDesign::new(&[60, 60]).unwrap();
        let vals = mean_on_grid(&MeanFunction::Case1, &g).unwrap();
        assert!(vals.iter().all(|&v| (-8.0..=0.0).contains(&v)));
        // tiny x1: cot(x1^2) is huge, so the exponent saturates
        assert_eq!(case1(1e-4, 0.0), 0.0);
        assert_eq!(case1(1e-4, 0.5), -8.0);
    }

    #[test]
    fn closed_form_values() {
        let v = eval_mean(&MeanFunction::Case2, &[0.25, 0.5]).unwrap();
        assert!((v - 3.0f64.ln()).abs() < 1e-12);
        let v = eval_mean(&MeanFunction::Case3D, &[0.3, 0.6, 0.9]).unwrap();
        assert!((v - 1.3f64.exp()).abs() < 1e-12);
        assert!((v - 3.669_296_667_619_244).abs() < 1e-12);
    }

    #[test]
    fn dimension_checked() {
        assert!(matches!(
            eval_mean(&MeanFunction::Case3D, &[0.1, 0.2]),
            Err(Error::DimensionMismatch { expected: 3, actual: 2 })
        ));
    }

    #[test]
    fn ids_round_trip() {
        for f in [
            MeanFunction::Case1,
            MeanFunction::Case2,
            MeanFunction::Case3D,
            MeanFunction::Linear {
                intercept: 0.5,
                slopes: vec![1.0, -2.0],
            },
        ] {
            let g = MeanFunction::from_id(&f.id()).unwrap();
            assert_eq!(f.id(), g.id());
        }
        assert!(MeanFunction::from_id("case9").is_err());
        assert_eq!(MeanFunction::from_id("identity").unwrap().dim(), 1);
    }

    #[test]
    fn additive_and_composition() {
        let f = MeanFunction::Additive(vec![Arc::new(|x| x * x), Arc::new(|x: f64| x.sin())]);
        let v = eval_mean(&f, &[0.5, 0.2]).unwrap();
        assert!((v - (0.25 + 0.2f64.sin())).abs() < 1e-15);

        // additive model as g1 o g0
        let spec = CompositionSpec {
            dims: vec![2, 2, 1],
            active: vec![1, 2],
            smoothness: vec![2.0, 2.0],
            radii: vec![1.0, 2.0],
        };
        let g0: LayerFn = Arc::new(|x: &[f64]| vec![x[0] * x[0], x[1].sin()]);
        let g1: LayerFn = Arc::new(|z: &[f64]| vec![z[0] + z[1]]);
        let c = MeanFunction::Composition {
            spec,
            layers: vec![g0, g1],
        };
        assert!((eval_mean(&c, &[0.5, 0.2]).unwrap() - v).abs() < 1e-15);
    }

    #[test]
    fn effective_smoothness_examples() {
        // additive model, d = 2: beta* = (2, 2), theta = min(4/1, 4/2) = 2
        let spec = CompositionSpec {
            dims: vec![2, 2, 1],
            active: vec![1, 2],
            smoothness: vec![2.0, 2.0],
            radii: vec![1.0, 1.0],
        };
        assert_eq!(spec.effective_beta(0), 2.0);
        assert_eq!(spec.effective_smoothness().unwrap(), 2.0);
        // single layer
        let single = CompositionSpec {
            dims: vec![3, 1],
            active: vec![3],
            smoothness: vec![1.5],
            radii: vec![1.0],
        };
        assert_eq!(single.effective_smoothness().unwrap(), 1.0);
        // all beta = 1
        let ones = CompositionSpec {
            dims: vec![4, 3, 2, 1],
            active: vec![2, 3, 1],
            smoothness: vec![1.0, 1.0, 1.0],
            radii: vec![1.0; 3],
        };
        assert!((ones.effective_smoothness().unwrap() - 2.0 / 3.0).abs() < 1e-15);
        // a rough outer layer caps inner smoothness
        let rough = CompositionSpec {
            dims: vec![1, 1, 1],
            active: vec![1, 1],
            smoothness: vec![3.0, 0.5],
            radii: vec![1.0; 2],
        };
        assert_eq!(rough.effective_beta(0), 1.5);
        assert_eq!(rough.effective_smoothness().unwrap(), 1.0);
        let bad = CompositionSpec {
            active: vec![3, 2],
            ..spec
        };
        assert!(bad.effective_smoothness().is_err());
    }

    #[test]
    fn pointwise_mean_by_hand() {
        let g = GridDesign::new(&[4]).unwrap();
        let y = vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 0.0, -2.0, 4.0, 9.0];
        let ds = FunctionalDataset::new(g.clone(), 3, y, DatasetMeta::default()).unwrap();
        assert_eq!(pointwise_mean(&ds), vec![2.0, 2.0, 14.0 / 3.0, 7.0]);
        let single = FunctionalDataset::new(g, 1, vec![1.5, 2.5, 3.5, 4.5], DatasetMeta::default()).unwrap();
        assert_eq!(pointwise_mean(&single), vec![1.5, 2.5, 3.5, 4.5]);
    }

    #[test]
    fn noiseless_zero_kernel_reproduces_mean() {
        let g = GridDesign::new(&[5, 4]).unwrap();
        let ds = simulate_dataset(3, &g, &MeanFunction::Case2, &KernelSpec::zero(2), &NoiseSpec::Disabled, 1).unwrap();
        let mean = mean_on_grid(&MeanFunction::Case2, &g).unwrap();
        for i in 0..3 {
            assert_eq!(ds.row(i), &mean[..]);
        }
    }

    #[test]
    fn zero_kernel_sample_is_zero() {
        let g = GridDesign::new(&[3, 3]).unwrap();
        let mut rng = substream(0, 0, StreamRole::Auxiliary);
        assert!(sample_eta(&KernelSpec::zero(2), &g, &mut rng).unwrap().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn prefix_property_and_reproducibility() {
        let g = GridDesign::new(&[6, 5]).unwrap();
        let k = KernelSpec::simulation_cosine(2);
        let noise = NoiseSpec::Constant(1.0);
        let small = simulate_dataset(5, &g, &MeanFunction::Case1, &k, &noise, 11).unwrap();
        let large = simulate_dataset(20, &g, &MeanFunction::Case1, &k, &noise, 11).unwrap();
        let again = simulate_dataset(20, &g, &MeanFunction::Case1, &k, &noise, 11).unwrap();
        assert_eq!(&large.y[..small.y.len()], &small.y[..]);
        assert_eq!(large.y, again.y);
        let other = simulate_dataset(5, &g, &MeanFunction::Case1, &k, &noise, 12).unwrap();
        assert_ne!(other.y, small.y);
    }

    #[test]
    fn rejects_bad_noise_and_sizes() {
        let g = GridDesign::new(&[3]).unwrap();
        let f = MeanFunction::from_id("identity").unwrap();
        let k = KernelSpec::zero(1);
        assert!(simulate_dataset(0, &g, &f, &k, &NoiseSpec::Constant(1.0), 0).is_err());
        assert!(simulate_dataset(2, &g, &f, &k, &NoiseSpec::Constant(0.0), 0).is_err());
        assert!(simulate_dataset(2, &g, &f, &k, &NoiseSpec::Grid(vec![1.0; 2]), 0).is_err());
        assert!(simulate_dataset(2, &g, &MeanFunction::Case1, &k, &NoiseSpec::Disabled, 0).is_err());
    }

    #[test]
    fn karhunen_loeve_matches_kernel_covariance() {
        // general-kernel path, checked by Monte Carlo against kernel_value
        let g = GridDesign::new(&[4]).unwrap();
        let k = KernelSpec::BernoulliPolynomial {
            varrho: 2.0,
            d: 1,
            k_max: 2000,
        };
        let sampler = GpSampler::new(&k, &g).unwrap();
        let draws = 100_000;
        let mut rng = substream(3, 0, StreamRole::Auxiliary);
        let mut acc = [[0.0f64; 4]; 4];
        for _ in 0..draws {
            let s = sampler.sample(&mut rng);
            for a in 0..4 {
                for b in 0..4 {
                    acc[a][b] += s[a] * s[b];
                }
            }
        }
        for a in 0..4 {
            for b in 0..4 {
                let truth = kernel_value(&k, &g.point_at(a).unwrap(), &g.point_at(b).unwrap()).unwrap();
                let est = acc[a][b] / draws as f64;
                // sd of the estimate is below 0.09 * sqrt(2 / draws)
                assert!((est - truth).abs() < 0.002, "({a},{b}): {est} vs {truth}");
            }
        }
    }

    #[test]
    fn non_psd_grid_kernel_rejected() {
        let g = GridDesign::new(&[2]).unwrap();
        let k = KernelSpec::Grid(crate::spectrum::GridKernel {
            grid: g.clone(),
            values: vec![1.0, 2.0, 2.0, 1.0],
        });
        assert!(matches!(GpSampler::new(&k, &g), Err(Error::NotPsd { .. })));
    }
}
