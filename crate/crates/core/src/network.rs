//! Sparse ReLU networks
//! `f(x) = W_L s_{v_L} W_{L-1} ... W_1 s_{v_1} W_0 x`, where
//! `s_v(y) = max(y - v, 0)` componentwise.
//!
//! Parameters live in one flat buffer: `W_0, .., W_L` (each `W_l` row-major
//! with shape `p_{l+1} x p_l`) followed by the shifts `v_1, .., v_L`. The
//! input layer has no shift and the output layer has no shift.

use rand_distr::{Distribution, Normal, Uniform};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::grid::GridDesign;
use crate::rng::Rng;

/// Default magnitude below which a parameter counts as zero.
pub const DEFAULT_ZERO_THRESHOLD: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Architecture {
    /// `p_0 = d, p_1, .., p_L, p_{L+1} = 1`.
    pub widths: Vec<usize>,
    /// Budget `s` on the number of nonzero parameters.
    pub sparsity: usize,
    /// Bound `F` on the empirical norm.
    pub f_bound: f64,
}

impl Architecture {
    pub fn new(widths: Vec<usize>, sparsity: usize, f_bound: f64) -> Result<Self> {
        let arch = Self {
            widths,
            sparsity,
            f_bound,
        };
        arch.validate()?;
        Ok(arch)
    }

    /// `d` inputs, the given hidden widths, one output.
    pub fn with_hidden(d: usize, hidden: &[usize], sparsity: usize, f_bound: f64) -> Result<Self> {
        let mut widths = Vec::with_capacity(hidden.len() + 2);
        widths.push(d);
        widths.extend_from_slice(hidden);
        widths.push(1);
        Self::new(widths, sparsity, f_bound)
    }

    pub fn validate(&self) -> Result<()> {
        if self.widths.len() < 3 {
            return Err(invalid("network needs at least one hidden layer"));
        }
        if self.widths.contains(&0) {
            return Err(invalid("layer widths must be positive"));
        }
        if *self.widths.last().unwrap() != 1 {
            return Err(invalid("output width p_{L+1} must be 1"));
        }
        if self.sparsity == 0 {
            return Err(invalid("sparsity budget s must be at least 1"));
        }
        if !(self.f_bound > 0.0) {
            return Err(invalid("norm bound F must be positive"));
        }
        Ok(())
    }

    /// Number of hidden layers `L`.
    pub fn hidden_layers(&self) -> usize {
        self.widths.len() - 2
    }

    pub fn input_dim(&self) -> usize {
        self.widths[0]
    }

    pub fn parameter_count(&self) -> usize {
        Layout::new(&self.widths).total
    }
}

/// Proportionality constants for the depth, width and sparsity orders.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TheoryConstants {
    pub depth: f64,
    pub width: f64,
    pub sparsity: f64,
}

impl Default for TheoryConstants {
    fn default() -> Self {
        Self {
            depth: 1.0,
            width: 1.0,
            sparsity: 1.0,
        }
    }
}

fn ceil_robust(x: f64) -> usize {
    // absorb rounding in powf so exact integers are not bumped up
    (x - 1e-9 * x.abs().max(1.0)).ceil().max(1.0) as usize
}

fn effective_size(n: usize, n_points: usize, varrho: f64, theta: f64, consts: TheoryConstants) -> Result<f64> {
    if n == 0 || n_points == 0 {
        return Err(invalid("n and N must be positive"));
    }
    if !(varrho >= 0.0) || !(theta > 0.0) {
        return Err(invalid(format!("need varrho >= 0 and theta > 0 (varrho={varrho}, theta={theta})")));
    }
    if !(consts.depth > 0.0 && consts.width > 0.0 && consts.sparsity > 0.0) {
        return Err(invalid("architecture constants must be positive"));
    }
    Ok(n as f64 * (n_points as f64).powf(varrho))
}

/// Architecture with the growth orders of the convergence theory, for
/// `m = n N^varrho`:
///
/// - `L = max(1, ceil(c_L log2 m))`
/// - every hidden width `ceil(c_p m^{1/(theta+1)})`
/// - `s = ceil(c_s m^{1/(theta+1)} L)`
pub fn architecture_from_theory(
    n: usize,
    n_points: usize,
    varrho: f64,
    theta: f64,
    consts: TheoryConstants,
    d: usize,
    f_bound: f64,
) -> Result<Architecture> {
    let m = effective_size(n, n_points, varrho, theta, consts)?;
    let depth = ceil_robust(consts.depth * m.log2());
    let root = m.powf(1.0 / (theta + 1.0));
    let width = ceil_robust(consts.width * root);
    let sparsity = ceil_robust(consts.sparsity * root * depth as f64);
    Architecture::with_hidden(d, &vec![width; depth], sparsity, f_bound)
}

/// Fixed-depth architecture whose equal hidden widths follow the theory's
/// width order, so they grow with `n` and `N`.
pub fn architecture_practical(
    n: usize,
    n_points: usize,
    varrho: f64,
    theta: f64,
    consts: TheoryConstants,
    d: usize,
    hidden_layers: usize,
    f_bound: f64,
) -> Result<Architecture> {
    let m = effective_size(n, n_points, varrho, theta, consts)?;
    if hidden_layers == 0 {
        return Err(invalid("need at least one hidden layer"));
    }
    let root = m.powf(1.0 / (theta + 1.0));
    let width = ceil_robust(consts.width * root);
    let sparsity = ceil_robust(consts.sparsity * root * hidden_layers as f64);
    Architecture::with_hidden(d, &vec![width; hidden_layers], sparsity, f_bound)
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct Layout {
    weight_offsets: Vec<usize>,
    shift_offsets: Vec<usize>,
    total: usize,
}

impl Layout {
    fn new(widths: &[usize]) -> Self {
        let layers = widths.len() - 1;
        let mut off = 0;
        let mut weight_offsets = Vec::with_capacity(layers + 1);
        for l in 0..layers {
            weight_offsets.push(off);
            off += widths[l] * widths[l + 1];
        }
        weight_offsets.push(off);
        let mut shift_offsets = Vec::with_capacity(layers);
        for &w in &widths[1..layers] {
            shift_offsets.push(off);
            off += w;
        }
        shift_offsets.push(off);
        Self {
            weight_offsets,
            shift_offsets,
            total: off,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum InitScheme {
    /// `U(-a, a)`, `a = sqrt(6 / fan_in)`.
    HeUniform,
    /// `N(0, 2 / fan_in)`.
    HeNormal,
    /// `U(-a, a)`, `a = sqrt(6 / (fan_in + fan_out))`.
    GlorotUniform,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetworkParams {
    widths: Vec<usize>,
    layout: Layout,
    values: Vec<f64>,
}

/// Outcome of a class-membership check; each conjunct is reported
/// separately.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassMembership {
    pub shapes_match: bool,
    pub bounded: bool,
    pub sparse: bool,
    pub norm_bounded: bool,
    pub nonzero: usize,
    pub empirical_norm: f64,
}

impl ClassMembership {
    pub fn passes(&self) -> bool {
        self.shapes_match && self.bounded && self.sparse && self.norm_bounded
    }
}

impl NetworkParams {
    pub fn zeros(widths: &[usize]) -> Result<Self> {
        Architecture::new(widths.to_vec(), 1, 1.0)?;
        let layout = Layout::new(widths);
        Ok(Self {
            widths: widths.to_vec(),
            values: vec![0.0; layout.total],
            layout,
        })
    }

    /// Builds from explicit `W_0..W_L` (row-major) and `v_1..v_L`.
    pub fn from_layers(widths: &[usize], weights: &[Vec<f64>], shifts: &[Vec<f64>]) -> Result<Self> {
        let mut p = Self::zeros(widths)?;
        let layers = widths.len() - 1;
        if weights.len() != layers || shifts.len() != layers - 1 {
            return Err(invalid(format!(
                "expected {} weight matrices and {} shift vectors",
                layers,
                layers - 1
            )));
        }
        for (l, w) in weights.iter().enumerate() {
            let dst = p.weight_mut(l);
            if dst.len() != w.len() {
                return Err(Error::DimensionMismatch {
                    expected: dst.len(),
                    actual: w.len(),
                });
            }
            dst.copy_from_slice(w);
        }
        for (l, v) in shifts.iter().enumerate() {
            let dst = p.shift_mut(l + 1);
            if dst.len() != v.len() {
                return Err(Error::DimensionMismatch {
                    expected: dst.len(),
                    actual: v.len(),
                });
            }
            dst.copy_from_slice(v);
        }
        Ok(p)
    }

    /// Builds from the flat buffer layout.
    pub fn from_flat(widths: &[usize], values: Vec<f64>) -> Result<Self> {
        let mut p = Self::zeros(widths)?;
        if values.len() != p.values.len() {
            return Err(Error::DimensionMismatch {
                expected: p.values.len(),
                actual: values.len(),
            });
        }
        p.values = values;
        Ok(p)
    }

    /// A zero buffer with the same shapes.
    pub fn zeros_like(&self) -> Self {
        Self {
            widths: self.widths.clone(),
            layout: self.layout.clone(),
            values: vec![0.0; self.values.len()],
        }
    }

    pub fn widths(&self) -> &[usize] {
        &self.widths
    }

    pub fn hidden_layers(&self) -> usize {
        self.widths.len() - 2
    }

    pub fn input_dim(&self) -> usize {
        self.widths[0]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// `W_l`, `l = 0..=L`.
    pub fn weight(&self, l: usize) -> &[f64] {
        &self.values[self.layout.weight_offsets[l]..self.layout.weight_offsets[l + 1]]
    }

    pub fn weight_mut(&mut self, l: usize) -> &mut [f64] {
        let (a, b) = (self.layout.weight_offsets[l], self.layout.weight_offsets[l + 1]);
        &mut self.values[a..b]
    }

    /// `v_l`, `l = 1..=L`.
    pub fn shift(&self, l: usize) -> &[f64] {
        &self.values[self.layout.shift_offsets[l - 1]..self.layout.shift_offsets[l]]
    }

    pub fn shift_mut(&mut self, l: usize) -> &mut [f64] {
        let (a, b) = (self.layout.shift_offsets[l - 1], self.layout.shift_offsets[l]);
        &mut self.values[a..b]
    }

    fn max_width(&self) -> usize {
        *self.widths.iter().max().unwrap()
    }

    pub fn forward(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.input_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.input_dim(),
                actual: x.len(),
            });
        }
        let mut scratch = Scratch::new(self.max_width());
        Ok(self.forward_with(x, &mut scratch))
    }

    /// Forward pass reusing `scratch`; `x` must have length `p_0`.
    pub(crate) fn forward_with(&self, x: &[f64], scratch: &mut Scratch) -> f64 {
        let layers = self.widths.len() - 1;
        let (cur, next) = (&mut scratch.a, &mut scratch.b);
        cur[..x.len()].copy_from_slice(x);
        for l in 0..layers {
            let (fan_in, fan_out) = (self.widths[l], self.widths[l + 1]);
            let w = self.weight(l);
            for (r, out) in next[..fan_out].iter_mut().enumerate() {
                let row = &w[r * fan_in..(r + 1) * fan_in];
                *out = row.iter().zip(&cur[..fan_in]).map(|(a, b)| a * b).sum();
            }
            if l + 1 < layers {
                let v = self.shift(l + 1);
                for (o, s) in next[..fan_out].iter_mut().zip(v) {
                    *o = (*o - s).max(0.0);
                }
            }
            std::mem::swap(cur, next);
        }
        cur[0]
    }

    /// `f` at every grid point, in grid order.
    pub fn forward_batch(&self, grid: &GridDesign) -> Result<Vec<f64>> {
        if grid.dim() != self.input_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.input_dim(),
                actual: grid.dim(),
            });
        }
        let d = grid.dim();
        let mut out = vec![0.0; grid.len()];
        const CHUNK: usize = 1024;
        out.par_chunks_mut(CHUNK).enumerate().for_each(|(c, chunk)| {
            let mut scratch = Scratch::new(self.max_width());
            let mut x = vec![0.0; d];
            for (i, o) in chunk.iter_mut().enumerate() {
                grid.point_into(c * CHUNK + i, &mut x);
                *o = self.forward_with(&x, &mut scratch);
            }
        });
        Ok(out)
    }

    /// Number of entries of all `W_l` and `v_l` with magnitude above
    /// `threshold`.
    pub fn count_nonzero(&self, threshold: f64) -> usize {
        self.values.iter().filter(|v| v.abs() > threshold).count()
    }

    /// Sets every entry with magnitude at most `threshold` to exactly zero.
    pub fn hard_threshold(&self, threshold: f64) -> Self {
        let mut p = self.clone();
        p.hard_threshold_mut(threshold);
        p
    }

    pub fn hard_threshold_mut(&mut self, threshold: f64) {
        for v in &mut self.values {
            if v.abs() <= threshold {
                *v = 0.0;
            }
        }
    }

    /// Clamps every entry to `[-1, 1]`.
    pub fn project(&self) -> Self {
        let mut p = self.clone();
        p.project_mut();
        p
    }

    pub fn project_mut(&mut self) {
        for v in &mut self.values {
            *v = v.clamp(-1.0, 1.0);
        }
    }

    /// `||f||_N = sqrt((1/N) sum_j f(X_j)^2)`.
    pub fn empirical_norm(&self, grid: &GridDesign) -> Result<f64> {
        let f = self.forward_batch(grid)?;
        Ok((f.iter().map(|v| v * v).sum::<f64>() / f.len() as f64).sqrt())
    }

    /// Checks membership in `F(L, p, s, F)` with entries bounded by one when
    /// `constrained`, the nonzero count taken at `zero_threshold`.
    pub fn is_in_class(
        &self,
        arch: &Architecture,
        grid: &GridDesign,
        constrained: bool,
        zero_threshold: f64,
    ) -> ClassMembership {
        let shapes_match = self.widths == arch.widths;
        let bounded = !constrained || self.values.iter().all(|v| v.abs() <= 1.0);
        let nonzero = self.count_nonzero(zero_threshold);
        let empirical_norm = self.empirical_norm(grid).unwrap_or(f64::INFINITY);
        ClassMembership {
            shapes_match,
            bounded,
            sparse: nonzero <= arch.sparsity,
            norm_bounded: empirical_norm <= arch.f_bound,
            nonzero,
            empirical_norm,
        }
    }
}

/// Two ping-pong activation buffers.
#[derive(Debug, Clone)]
pub(crate) struct Scratch {
    a: Vec<f64>,
    b: Vec<f64>,
}

impl Scratch {
    pub(crate) fn new(width: usize) -> Self {
        Self {
            a: vec![0.0; width],
            b: vec![0.0; width],
        }
    }
}

/// Random initial parameters: weights from a zero-mean distribution scaled
/// by fan-in, shifts zero. With `constrained`, weights are clamped to
/// `[-1, 1]`.
pub fn init_params(arch: &Architecture, scheme: InitScheme, rng: &mut Rng, constrained: bool) -> Result<NetworkParams> {
    arch.validate()?;
    let mut p = NetworkParams::zeros(&arch.widths)?;
    for l in 0..=arch.hidden_layers() {
        let (fan_in, fan_out) = (arch.widths[l] as f64, arch.widths[l + 1] as f64);
        let w = p.weight_mut(l);
        match scheme {
            InitScheme::HeUniform | InitScheme::GlorotUniform => {
                let a = if scheme == InitScheme::HeUniform {
                    (6.0 / fan_in).sqrt()
                } else {
                    (6.0 / (fan_in + fan_out)).sqrt()
                };
                let dist = Uniform::new_inclusive(-a, a).map_err(|e| invalid(e.to_string()))?;
                w.iter_mut().for_each(|v| *v = dist.sample(rng));
            }
            InitScheme::HeNormal => {
                let dist = Normal::new(0.0, (2.0 / fan_in).sqrt()).map_err(|e| invalid(e.to_string()))?;
                w.iter_mut().for_each(|v| *v = dist.sample(rng));
            }
        }
    }
    if constrained {
        p.project_mut();
    }
    Ok(p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{substream, StreamRole};

    fn identity_gadget() -> NetworkParams {
        NetworkParams::from_layers(&[1, 2, 1], &[vec![1.0, -1.0], vec![1.0, -1.0]], &[vec![0.0, 0.0]]).unwrap()
    }

    /// Straight-line evaluation of the composition, written independently of
    /// the buffered forward pass.
    fn interpret(widths: &[usize], weights: &[Vec<f64>], shifts: &[Vec<f64>], x: &[f64]) -> f64 {
        let mut h = x.to_vec();
        for l in 0..weights.len() {
            let mut z = vec![0.0; widths[l + 1]];
            for r in 0..widths[l + 1] {
                for c in 0..widths[l] {
                    z[r] += weights[l][r * widths[l] + c] * h[c];
                }
            }
            if l < shifts.len() {
                for r in 0..z.len() {
                    z[r] = if z[r] - shifts[l][r] > 0.0 { z[r] - shifts[l][r] } else { 0.0 };
                }
            }
            h = z;
        }
        h[0]
    }

    #[test]
    fn zero_params_output_zero() {
        let p = NetworkParams::zeros(&[2, 5, 3, 1]).unwrap();
        assert_eq!(p.forward(&[0.3, 0.9]).unwrap(), 0.0);
        let g = GridDesign::new(&[4, 4]).unwrap();
        assert!(p.forward_batch(&g).unwrap().iter().all(|&v| v == 0.0));
        assert_eq!(p.count_nonzero(0.0), 0);
        assert_eq!(p.empirical_norm(&g).unwrap(), 0.0);
    }

    #[test]
    fn identity_gadget_is_exact() {
        let p = identity_gadget();
        assert_eq!(p.forward(&[0.3]).unwrap(), 0.3);
        for k in 0..=1000 {
            let x = -1.0 + 2.0 * k as f64 / 1000.0;
            assert!((p.forward(&[x]).unwrap() - x).abs() <= 1e-15);
        }
        let g = GridDesign::new(&[4]).unwrap();
        assert_eq!(p.forward_batch(&g).unwrap(), vec![0.25, 0.5, 0.75, 1.0]);
        assert_eq!(p.count_nonzero(0.0), 4);
        let norm = p.empirical_norm(&g).unwrap();
        assert!((norm - 0.46875f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn matches_independent_interpreter() {
        let mut rng = substream(42, 0, StreamRole::Auxiliary);
        let widths = [3usize, 6, 4, 5, 1];
        let arch = Architecture::new(widths.to_vec(), 10, 1.0).unwrap();
        let mut p = init_params(&arch, InitScheme::HeNormal, &mut rng, false).unwrap();
        let u = Uniform::new(-0.5, 0.5).unwrap();
        for l in 1..=3 {
            p.shift_mut(l).iter_mut().for_each(|v| *v = u.sample(&mut rng));
        }
        let weights: Vec<Vec<f64>> = (0..4).map(|l| p.weight(l).to_vec()).collect();
        let shifts: Vec<Vec<f64>> = (1..=3).map(|l| p.shift(l).to_vec()).collect();
        let unit = Uniform::new(-1.0, 1.0).unwrap();
        for _ in 0..100 {
            let x: Vec<f64> = (0..3).map(|_| unit.sample(&mut rng)).collect();
            let a = p.forward(&x).unwrap();
            let b = interpret(&widths, &weights, &shifts, &x);
            assert!((a - b).abs() <= 1e-12 * b.abs().max(1.0));
        }
    }

    #[test]
    fn batch_agrees_with_loop() {
        let mut rng = substream(5, 0, StreamRole::Auxiliary);
        let arch = Architecture::with_hidden(2, &[16, 16, 16], 100, 1.0).unwrap();
        let p = init_params(&arch, InitScheme::HeUniform, &mut rng, false).unwrap();
        let g = GridDesign::new(&[25, 25]).unwrap();
        let batch = p.forward_batch(&g).unwrap();
        for j in 0..g.len() {
            let v = p.forward(&g.point_at(j).unwrap()).unwrap();
            assert!((batch[j] - v).abs() <= 1e-12);
        }
    }

    #[test]
    fn shape_errors() {
        let p = identity_gadget();
        assert!(matches!(p.forward(&[0.1, 0.2]), Err(Error::DimensionMismatch { .. })));
        assert!(p.forward_batch(&GridDesign::new(&[2, 2]).unwrap()).is_err());
        assert!(NetworkParams::from_layers(&[1, 2, 1], &[vec![1.0], vec![1.0, 1.0]], &[vec![0.0; 2]]).is_err());
        assert!(Architecture::new(vec![2, 3, 2], 5, 1.0).is_err());
        assert!(Architecture::new(vec![2, 1], 5, 1.0).is_err());
    }

    #[test]
    fn projection_and_thresholding() {
        let mut p = identity_gadget();
        p.weight_mut(0).copy_from_slice(&[3.7, -2.0]);
        p.shift_mut(1).copy_from_slice(&[0.5, 5e-5]);
        let q = p.project();
        assert_eq!(q.weight(0), &[1.0, -1.0]);
        assert_eq!(q.shift(1), &[0.5, 5e-5]);
        assert_eq!(q.project(), q);
        assert_eq!(identity_gadget().project(), identity_gadget());
        let t = 1e-4;
        assert_eq!(p.count_nonzero(t), p.hard_threshold(t).count_nonzero(0.0));
        assert_eq!(p.count_nonzero(0.0), 6);
        assert_eq!(p.count_nonzero(t), 5);
    }

    #[test]
    fn nonnegative_weights_give_nonnegative_output() {
        let mut rng = substream(9, 0, StreamRole::Auxiliary);
        let arch = Architecture::with_hidden(2, &[8, 8], 100, 1.0).unwrap();
        let mut p = init_params(&arch, InitScheme::HeUniform, &mut rng, false).unwrap();
        for l in 0..=2 {
            p.weight_mut(l).iter_mut().for_each(|v| *v = v.abs());
        }
        let g = GridDesign::new(&[9, 9]).unwrap();
        assert!(p.forward_batch(&g).unwrap().iter().all(|&v| v >= 0.0));
    }

    #[test]
    fn theory_architecture_arithmetic() {
        let c = TheoryConstants::default();
        let a = architecture_from_theory(100, 625, 0.0, 1.0, c, 2, 1.0).unwrap();
        assert_eq!(a.hidden_layers(), 7);
        assert!(a.widths[1..=7].iter().all(|&w| w == 10));
        assert_eq!(a.sparsity, 70);
        assert_eq!(a.widths[0], 2);
        assert_eq!(*a.widths.last().unwrap(), 1);
        // varrho = 0: independent of N
        assert_eq!(a, architecture_from_theory(100, 9, 0.0, 1.0, c, 2, 1.0).unwrap());
        // doubling the width constant doubles the widths
        let wide = architecture_from_theory(100, 625, 0.0, 1.0, TheoryConstants { width: 2.0, ..c }, 2, 1.0).unwrap();
        assert!(wide.widths[1..=7].iter().all(|&w| w == 20));
        assert!(architecture_from_theory(0, 625, 0.0, 1.0, c, 2, 1.0).is_err());
        assert!(architecture_from_theory(10, 625, -1.0, 1.0, c, 2, 1.0).is_err());
        assert!(architecture_from_theory(10, 625, 0.0, 0.0, c, 2, 1.0).is_err());
        let p = architecture_practical(200, 225, 0.0, 1.0, c, 2, 3, 1.0).unwrap();
        assert_eq!(p.widths, vec![2, 15, 15, 15, 1]);
    }

    #[test]
    fn init_is_seeded_and_bounded() {
        let arch = Architecture::with_hidden(1, &[200, 50], 10, 1.0).unwrap();
        let a = init_params(&arch, InitScheme::HeUniform, &mut substream(1, 0, StreamRole::Init), true).unwrap();
        let b = init_params(&arch, InitScheme::HeUniform, &mut substream(1, 0, StreamRole::Init), true).unwrap();
        assert_eq!(a, b);
        assert!(a.as_slice().iter().all(|v| v.abs() <= 1.0));
        assert!((1..=2).all(|l| a.shift(l).iter().all(|&v| v == 0.0)));
    }

    #[test]
    fn init_mean_is_zero() {
        // 10^4 draws of the middle layer, He normal with sd sqrt(2/100)
        let arch = Architecture::with_hidden(1, &[100, 100], 10, 1.0).unwrap();
        let p = init_params(&arch, InitScheme::HeNormal, &mut substream(3, 0, StreamRole::Init), false).unwrap();
        let w = p.weight(1);
        assert_eq!(w.len(), 10_000);
        let mean = w.iter().sum::<f64>() / w.len() as f64;
        let se = (2.0f64 / 100.0).sqrt() / 100.0;
        assert!(mean.abs() < 3.0 * se, "mean {mean}, se {se}");
    }
}
