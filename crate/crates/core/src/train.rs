//! Empirical risk minimization of `(1/N) sum_j (Ybar_j - f(X_j))^2` over a
//! sparse ReLU network, with an L1 surrogate for sparsity and Adam.

use std::io::Write;
use std::time::Instant;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::grid::GridDesign;
use crate::network::{init_params, Architecture, InitScheme, NetworkParams, Scratch, DEFAULT_ZERO_THRESHOLD};
use crate::rng::{substream, StreamRole};
use crate::simulate::{pointwise_mean, FunctionalDataset};

/// Abort when the epoch loss exceeds this multiple of the initial loss.
pub const DIVERGENCE_FACTOR: f64 = 1e6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Optimizer {
    Adam,
    /// Plain gradient descent, for debugging.
    Sgd,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub l1_coeff: f64,
    /// Clamp parameters to `[-1, 1]` after every step.
    pub constrained: bool,
    pub zero_threshold: f64,
    /// Prune by magnitude down to the budget `s`, gradually between the
    /// epoch fractions `prune_start` and `prune_end`, then train on that
    /// support.
    pub enforce_sparsity: bool,
    pub prune_start: f64,
    pub prune_end: f64,
    /// Rescale the output layer so the empirical norm is at most `F`.
    pub enforce_norm: bool,
    pub optimizer: Optimizer,
    pub init: InitScheme,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 300,
            batch_size: 32,
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            l1_coeff: 1e-5,
            constrained: false,
            zero_threshold: DEFAULT_ZERO_THRESHOLD,
            enforce_sparsity: false,
            prune_start: 0.2,
            prune_end: 0.6,
            enforce_norm: false,
            optimizer: Optimizer::Adam,
            init: InitScheme::HeUniform,
            seed: 0,
        }
    }
}

impl TrainConfig {
    /// Settings for fits that must land inside the bounded, sparse class.
    pub fn theory_mode() -> Self {
        Self {
            constrained: true,
            enforce_sparsity: true,
            enforce_norm: true,
            ..Self::default()
        }
    }

    pub fn validate(&self, n_points: usize) -> Result<()> {
        if self.epochs == 0 {
            return Err(invalid("epochs must be at least 1"));
        }
        if self.batch_size == 0 || self.batch_size > n_points {
            return Err(invalid(format!(
                "batch_size must lie in 1..={n_points}, got {}",
                self.batch_size
            )));
        }
        if !(self.learning_rate > 0.0) || !self.learning_rate.is_finite() {
            return Err(invalid("learning_rate must be positive"));
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) {
            return Err(invalid("beta1 and beta2 must lie in [0, 1)"));
        }
        if !(self.eps > 0.0) {
            return Err(invalid("eps must be positive"));
        }
        if !(self.l1_coeff >= 0.0) {
            return Err(invalid("l1_coeff must be nonnegative"));
        }
        if !(self.zero_threshold >= 0.0) {
            return Err(invalid("zero_threshold must be nonnegative"));
        }
        if !(0.0..=1.0).contains(&self.prune_start)
            || !(0.0..=1.0).contains(&self.prune_end)
            || self.prune_start > self.prune_end
        {
            return Err(invalid("need 0 <= prune_start <= prune_end <= 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    /// Full-grid data term after each epoch.
    pub data_loss: Vec<f64>,
    /// L1 penalty after each epoch.
    pub l1_loss: Vec<f64>,
    /// `(1/N) sum_j (Ybar_j - fhat(X_j))^2` after thresholding.
    pub train_risk: f64,
    pub nonzero: usize,
    pub empirical_norm: f64,
    pub seconds: f64,
}

impl TrainReport {
    /// CSV `epoch,data_loss,l1_loss` followed by a `#` summary line.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "epoch,data_loss,l1_loss")?;
        for (e, (a, b)) in self.data_loss.iter().zip(&self.l1_loss).enumerate() {
            writeln!(w, "{},{:.17e},{:.17e}", e + 1, a, b)?;
        }
        writeln!(
            w,
            "# train_risk={:.17e},nonzero={},empirical_norm={:.17e},seconds={:.3}",
            self.train_risk, self.nonzero, self.empirical_norm, self.seconds
        )?;
        Ok(())
    }
}

/// Trailing moving averages of `window` consecutive values; entry `t` covers
/// `values[t..t + window]`.
pub fn moving_average(values: &[f64], window: usize) -> Vec<f64> {
    if window == 0 || values.len() < window {
        return Vec::new();
    }
    values
        .windows(window)
        .map(|w| w.iter().sum::<f64>() / window as f64)
        .collect()
}

/// Grid points flattened row by row, `N x d`.
pub fn grid_points(grid: &GridDesign) -> Vec<f64> {
    grid.coordinates()
}

fn l1_norm(params: &NetworkParams) -> f64 {
    params.as_slice().iter().map(|v| v.abs()).sum()
}

fn data_loss(params: &NetworkParams, points: &[f64], targets: &[f64]) -> f64 {
    let d = params.input_dim();
    let mut scratch = Scratch::new(*params.widths().iter().max().unwrap());
    let sum: f64 = points
        .chunks_exact(d)
        .zip(targets)
        .map(|(x, y)| {
            let r = y - params.forward_with(x, &mut scratch);
            r * r
        })
        .sum();
    sum / targets.len() as f64
}

/// `(1/N) sum_j (Ybar_j - f(X_j))^2 + l1_coeff * sum |theta|`.
pub fn objective(params: &NetworkParams, targets: &[f64], grid: &GridDesign, l1_coeff: f64) -> Result<f64> {
    if targets.len() != grid.len() {
        return Err(Error::DimensionMismatch {
            expected: grid.len(),
            actual: targets.len(),
        });
    }
    if grid.dim() != params.input_dim() {
        return Err(Error::DimensionMismatch {
            expected: params.input_dim(),
            actual: grid.dim(),
        });
    }
    Ok(data_loss(params, &grid_points(grid), targets) + l1_coeff * l1_norm(params))
}

/// Per-sample buffers for backpropagation.
struct Workspace {
    /// `h_0 .. h_L`, each padded to the widest layer.
    acts: Vec<Vec<f64>>,
    /// Pre-activations minus shifts, `z_l - v_l` for `l = 1..=L`.
    pre: Vec<Vec<f64>>,
    delta: Vec<f64>,
    delta_prev: Vec<f64>,
}

impl Workspace {
    fn new(widths: &[usize]) -> Self {
        let max = *widths.iter().max().unwrap();
        let hidden = widths.len() - 2;
        Self {
            acts: vec![vec![0.0; max]; hidden + 1],
            pre: vec![vec![0.0; max]; hidden],
            delta: vec![0.0; max],
            delta_prev: vec![0.0; max],
        }
    }
}

/// Adds the gradient of `scale * (y - f(x))^2` to `grad`; returns the
/// squared residual.
fn accumulate_sample(
    params: &NetworkParams,
    x: &[f64],
    y: f64,
    scale: f64,
    ws: &mut Workspace,
    grad: &mut NetworkParams,
) -> f64 {
    let widths = params.widths();
    let hidden = widths.len() - 2;
    ws.acts[0][..x.len()].copy_from_slice(x);
    for l in 0..hidden {
        let (fan_in, fan_out) = (widths[l], widths[l + 1]);
        let w = params.weight(l);
        let v = params.shift(l + 1);
        let (head, tail) = ws.acts.split_at_mut(l + 1);
        let input = &head[l][..fan_in];
        let out = &mut tail[0][..fan_out];
        let pre = &mut ws.pre[l][..fan_out];
        for r in 0..fan_out {
            let row = &w[r * fan_in..(r + 1) * fan_in];
            let z: f64 = row.iter().zip(input).map(|(a, b)| a * b).sum::<f64>() - v[r];
            pre[r] = z;
            out[r] = z.max(0.0);
        }
    }
    let last_in = widths[hidden];
    let h = &ws.acts[hidden][..last_in];
    let w_out = params.weight(hidden);
    let f: f64 = w_out.iter().zip(h).map(|(a, b)| a * b).sum();
    let resid = y - f;
    let g = -2.0 * scale * resid;

    for (gw, hv) in grad.weight_mut(hidden).iter_mut().zip(h) {
        *gw += g * hv;
    }
    for (dv, wv) in ws.delta[..last_in].iter_mut().zip(w_out) {
        *dv = g * wv;
    }
    for l in (1..=hidden).rev() {
        let (fan_in, fan_out) = (widths[l - 1], widths[l]);
        // through the shifted ReLU; sigma'(0) = 0
        for (dv, &z) in ws.delta[..fan_out].iter_mut().zip(&ws.pre[l - 1][..fan_out]) {
            if z <= 0.0 {
                *dv = 0.0;
            }
        }
        for (gv, dv) in grad.shift_mut(l).iter_mut().zip(&ws.delta[..fan_out]) {
            *gv -= dv;
        }
        let input = &ws.acts[l - 1][..fan_in];
        let gw = grad.weight_mut(l - 1);
        for r in 0..fan_out {
            let dr = ws.delta[r];
            if dr != 0.0 {
                for (gwv, iv) in gw[r * fan_in..(r + 1) * fan_in].iter_mut().zip(input) {
                    *gwv += dr * iv;
                }
            }
        }
        if l > 1 {
            let w = params.weight(l - 1);
            let prev = &mut ws.delta_prev[..fan_in];
            prev.iter_mut().for_each(|p| *p = 0.0);
            for r in 0..fan_out {
                let dr = ws.delta[r];
                if dr != 0.0 {
                    for (p, wv) in prev.iter_mut().zip(&w[r * fan_in..(r + 1) * fan_in]) {
                        *p += dr * wv;
                    }
                }
            }
            std::mem::swap(&mut ws.delta, &mut ws.delta_prev);
        }
    }
    resid * resid
}

fn add_l1_subgradient(params: &NetworkParams, l1_coeff: f64, grad: &mut NetworkParams) {
    if l1_coeff == 0.0 {
        return;
    }
    for (g, &w) in grad.as_mut_slice().iter_mut().zip(params.as_slice()) {
        if w > 0.0 {
            *g += l1_coeff;
        } else if w < 0.0 {
            *g -= l1_coeff;
        }
    }
}

/// Gradient of `(1/B) sum_b (y_b - f(x_b))^2 + l1_coeff * sum |theta|` over a
/// batch given as flattened points (`B x d`) and targets.
pub fn gradients(params: &NetworkParams, points: &[f64], targets: &[f64], l1_coeff: f64) -> Result<NetworkParams> {
    let d = params.input_dim();
    if targets.is_empty() {
        return Err(invalid("empty batch"));
    }
    if points.len() != targets.len() * d {
        return Err(Error::DimensionMismatch {
            expected: targets.len() * d,
            actual: points.len(),
        });
    }
    let mut grad = params.zeros_like();
    let mut ws = Workspace::new(params.widths());
    let scale = 1.0 / targets.len() as f64;
    for (x, &y) in points.chunks_exact(d).zip(targets) {
        accumulate_sample(params, x, y, scale, &mut ws, &mut grad);
    }
    add_l1_subgradient(params, l1_coeff, &mut grad);
    Ok(grad)
}

/// Adam moment estimates.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub t: u64,
}

impl AdamState {
    pub fn new(len: usize) -> Self {
        Self {
            m: vec![0.0; len],
            v: vec![0.0; len],
            t: 0,
        }
    }
}

/// One bias-corrected Adam update in place, followed by projection onto
/// `[-1, 1]` when `config.constrained`.
pub fn adam_step(params: &mut NetworkParams, state: &mut AdamState, grads: &NetworkParams, config: &TrainConfig) -> Result<()> {
    if grads.len() != params.len() || state.m.len() != params.len() || state.v.len() != params.len() {
        return Err(Error::DimensionMismatch {
            expected: params.len(),
            actual: grads.len(),
        });
    }
    state.t += 1;
    let (b1, b2) = (config.beta1, config.beta2);
    let c1 = 1.0 - b1.powi(state.t as i32);
    let c2 = 1.0 - b2.powi(state.t as i32);
    let lr = config.learning_rate;
    for (((p, g), m), v) in params
        .as_mut_slice()
        .iter_mut()
        .zip(grads.as_slice())
        .zip(&mut state.m)
        .zip(&mut state.v)
    {
        *m = b1 * *m + (1.0 - b1) * g;
        *v = b2 * *v + (1.0 - b2) * g * g;
        let m_hat = *m / c1;
        let v_hat = *v / c2;
        *p -= lr * m_hat / (v_hat.sqrt() + config.eps);
    }
    if config.constrained {
        params.project_mut();
    }
    Ok(())
}

fn sgd_step(params: &mut NetworkParams, grads: &NetworkParams, config: &TrainConfig) {
    for (p, g) in params.as_mut_slice().iter_mut().zip(grads.as_slice()) {
        *p -= config.learning_rate * g;
    }
    if config.constrained {
        params.project_mut();
    }
}

/// Support of the `s` largest magnitudes (ties broken by position).
fn top_support(params: &NetworkParams, s: usize) -> Vec<bool> {
    let vals = params.as_slice();
    let mut order: Vec<usize> = (0..vals.len()).collect();
    order.sort_by(|&a, &b| vals[b].abs().total_cmp(&vals[a].abs()).then(a.cmp(&b)));
    let mut keep = vec![false; vals.len()];
    for &i in order.iter().take(s) {
        keep[i] = vals[i] != 0.0;
    }
    keep
}

/// Cubic schedule from `total` kept entries down to `s` over
/// `first..=last`.
fn prune_target(total: usize, s: usize, epoch: usize, first: usize, last: usize) -> usize {
    if total <= s || epoch >= last {
        return s.min(total);
    }
    let p = (epoch - first) as f64 / (last - first) as f64;
    let extra = (total - s) as f64 * (1.0 - p).powi(3);
    s + extra.round() as usize
}

fn apply_mask(params: &mut NetworkParams, mask: &[bool]) {
    for (p, &k) in params.as_mut_slice().iter_mut().zip(mask) {
        if !k {
            *p = 0.0;
        }
    }
}

/// Fits `arch` to the pointwise means of `data`.
pub fn fit(data: &FunctionalDataset, arch: &Architecture, config: &TrainConfig) -> Result<(NetworkParams, TrainReport)> {
    fit_targets(&data.grid, &pointwise_mean(data), arch, config)
}

/// Fits `arch` to `targets` on `grid`. Deterministic given `config.seed`.
pub fn fit_targets(
    grid: &GridDesign,
    targets: &[f64],
    arch: &Architecture,
    config: &TrainConfig,
) -> Result<(NetworkParams, TrainReport)> {
    let start = Instant::now();
    arch.validate()?;
    config.validate(grid.len())?;
    if grid.dim() != arch.input_dim() {
        return Err(Error::DimensionMismatch {
            expected: arch.input_dim(),
            actual: grid.dim(),
        });
    }
    if targets.len() != grid.len() {
        return Err(Error::DimensionMismatch {
            expected: grid.len(),
            actual: targets.len(),
        });
    }
    let d = grid.dim();
    let points = grid_points(grid);
    let mut params = init_params(arch, config.init, &mut substream(config.seed, 0, StreamRole::Init), config.constrained)?;
    let mut shuffle_rng = substream(config.seed, 0, StreamRole::Shuffle);
    let mut state = AdamState::new(params.len());
    let mut grad = params.zeros_like();
    let mut ws = Workspace::new(&arch.widths);
    let mut order: Vec<usize> = (0..grid.len()).collect();
    let mut batch_x = vec![0.0; config.batch_size * d];
    let mut batch_y = vec![0.0; config.batch_size];
    let mut mask: Option<Vec<bool>> = None;
    let epoch_at = |f: f64| ((config.epochs as f64 * f).round() as usize).min(config.epochs - 1);
    let (prune_first, prune_last) = (epoch_at(config.prune_start), epoch_at(config.prune_end));

    let initial = data_loss(&params, &points, targets) + config.l1_coeff * l1_norm(&params);
    let limit = DIVERGENCE_FACTOR * initial.max(f64::MIN_POSITIVE);
    let mut report = TrainReport {
        data_loss: Vec::with_capacity(config.epochs),
        l1_loss: Vec::with_capacity(config.epochs),
        train_risk: f64::NAN,
        nonzero: 0,
        empirical_norm: f64::NAN,
        seconds: 0.0,
    };

    for epoch in 0..config.epochs {
        if config.enforce_sparsity && epoch >= prune_first && epoch <= prune_last {
            let keep = top_support(&params, prune_target(params.len(), arch.sparsity, epoch, prune_first, prune_last));
            apply_mask(&mut params, &keep);
            mask = Some(keep);
        }
        order.shuffle(&mut shuffle_rng);
        for chunk in order.chunks(config.batch_size) {
            for (b, &j) in chunk.iter().enumerate() {
                batch_x[b * d..(b + 1) * d].copy_from_slice(&points[j * d..(j + 1) * d]);
                batch_y[b] = targets[j];
            }
            grad.as_mut_slice().iter_mut().for_each(|g| *g = 0.0);
            let scale = 1.0 / chunk.len() as f64;
            for b in 0..chunk.len() {
                accumulate_sample(&params, &batch_x[b * d..(b + 1) * d], batch_y[b], scale, &mut ws, &mut grad);
            }
            add_l1_subgradient(&params, config.l1_coeff, &mut grad);
            if let Some(keep) = &mask {
                apply_mask(&mut grad, keep);
            }
            match config.optimizer {
                Optimizer::Adam => adam_step(&mut params, &mut state, &grad, config)?,
                Optimizer::Sgd => sgd_step(&mut params, &grad, config),
            }
            if let Some(keep) = &mask {
                apply_mask(&mut params, keep);
            }
        }
        let dl = data_loss(&params, &points, targets);
        let pl = config.l1_coeff * l1_norm(&params);
        report.data_loss.push(dl);
        report.l1_loss.push(pl);
        let total = dl + pl;
        if !total.is_finite() || total > limit {
            report.seconds = start.elapsed().as_secs_f64();
            return Err(Error::Diverged {
                epoch: epoch + 1,
                loss: total,
                report: Box::new(report),
            });
        }
    }

    params.hard_threshold_mut(config.zero_threshold);
    let values = params.forward_batch(grid)?;
    let mut norm = (values.iter().map(|v| v * v).sum::<f64>() / values.len() as f64).sqrt();
    if config.enforce_norm && norm > arch.f_bound {
        let factor = arch.f_bound / norm;
        params.weight_mut(arch.hidden_layers()).iter_mut().for_each(|w| *w *= factor);
        params.hard_threshold_mut(config.zero_threshold);
        norm = params.empirical_norm(grid)?;
    }
    report.train_risk = data_loss(&params, &points, targets);
    report.nonzero = params.count_nonzero(config.zero_threshold);
    report.empirical_norm = norm;
    report.seconds = start.elapsed().as_secs_f64();
    Ok((params, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Rng;
    use rand_distr::{Distribution, Uniform};

    fn random_params(widths: &[usize], rng: &mut Rng) -> NetworkParams {
        let u = Uniform::new(-1.0, 1.0).unwrap();
        let mut p = NetworkParams::zeros(widths).unwrap();
        p.as_mut_slice().iter_mut().for_each(|v| *v = u.sample(rng));
        p
    }

    #[test]
    fn objective_trivial_cases() {
        let g = GridDesign::new(&[5, 3]).unwrap();
        let p = NetworkParams::zeros(&[2, 4, 1]).unwrap();
        assert_eq!(objective(&p, &[0.0; 15], &g, 0.0).unwrap(), 0.0);
        let c = 0.7;
        assert!((objective(&p, &[c; 15], &g, 0.0).unwrap() - c * c).abs() < 1e-15);
        assert!(objective(&p, &[c; 14], &g, 0.0).is_err());
    }

    #[test]
    fn objective_matches_literal_formula() {
        let mut rng = substream(11, 0, StreamRole::Auxiliary);
        let g = GridDesign::new(&[4, 6]).unwrap();
        let p = random_params(&[2, 5, 3, 1], &mut rng);
        let targets: Vec<f64> = (0..g.len()).map(|j| (j as f64).sin()).collect();
        let fx: Vec<f64> = (0..g.len()).map(|j| p.forward(&g.point_at(j).unwrap()).unwrap()).collect();
        let literal = targets.iter().zip(&fx).map(|(y, f)| (y - f).powi(2)).sum::<f64>() / g.len() as f64
            + 0.01 * p.as_slice().iter().map(|v| v.abs()).sum::<f64>();
        let got = objective(&p, &targets, &g, 0.01).unwrap();
        assert!((got - literal).abs() < 1e-12);
    }

    #[test]
    fn zero_network_zero_targets_zero_gradient() {
        let p = NetworkParams::zeros(&[2, 3, 1]).unwrap();
        let g = gradients(&p, &[0.1, 0.2, 0.3, 0.4], &[0.0, 0.0], 0.0).unwrap();
        assert!(g.as_slice().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn l1_subgradient_is_sign() {
        let p = NetworkParams::from_layers(&[1, 1, 1], &[vec![0.5], vec![-0.2]], &[vec![0.0]]).unwrap();
        let mut g = p.zeros_like();
        add_l1_subgradient(&p, 0.1, &mut g);
        assert_eq!(g.as_slice(), &[0.1, -0.1, 0.0]);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut rng = substream(2024, 0, StreamRole::Auxiliary);
        let widths = [2usize, 6, 5, 1];
        let p = random_params(&widths, &mut rng);
        let u = Uniform::new(0.0, 1.0).unwrap();
        let xs: Vec<f64> = (0..12).map(|_| u.sample(&mut rng)).collect();
        let ys: Vec<f64> = (0..6).map(|_| u.sample(&mut rng)).collect();
        let l1 = 1e-3;
        let grad = gradients(&p, &xs, &ys, l1).unwrap();
        let loss = |q: &NetworkParams| {
            let mut s = 0.0;
            for (x, y) in xs.chunks(2).zip(&ys) {
                s += (y - q.forward(x).unwrap()).powi(2);
            }
            s / ys.len() as f64 + l1 * q.as_slice().iter().map(|v| v.abs()).sum::<f64>()
        };
        let h = 1e-6;
        for i in 0..p.len() {
            let mut a = p.clone();
            let mut b = p.clone();
            a.as_mut_slice()[i] += h;
            b.as_mut_slice()[i] -= h;
            let fd = (loss(&a) - loss(&b)) / (2.0 * h);
            let an = grad.as_slice()[i];
            assert!((fd - an).abs() <= 1e-5 * an.abs().max(fd.abs()).max(1e-4), "coord {i}: {an} vs {fd}");
        }
    }

    #[test]
    fn adam_zero_gradient_keeps_params() {
        let mut rng = substream(3, 0, StreamRole::Auxiliary);
        let p0 = random_params(&[2, 4, 1], &mut rng);
        let mut p = p0.clone();
        let mut st = AdamState::new(p.len());
        st.m.iter_mut().for_each(|m| *m = 0.0);
        adam_step(&mut p, &mut st, &p0.zeros_like(), &TrainConfig::default()).unwrap();
        assert_eq!(p, p0);
        assert_eq!(st.t, 1);
    }

    #[test]
    fn adam_first_step_bounded_and_deterministic() {
        let mut rng = substream(4, 0, StreamRole::Auxiliary);
        let p0 = random_params(&[3, 8, 1], &mut rng);
        let g = random_params(&[3, 8, 1], &mut rng);
        let cfg = TrainConfig::default();
        let run = || {
            let mut p = p0.clone();
            let mut st = AdamState::new(p.len());
            adam_step(&mut p, &mut st, &g, &cfg).unwrap();
            (p, st)
        };
        let (p1, s1) = run();
        let (p2, s2) = run();
        assert_eq!(p1, p2);
        assert_eq!(s1, s2);
        for ((a, b), gv) in p1.as_slice().iter().zip(p0.as_slice()).zip(g.as_slice()) {
            let step = a - b;
            assert!(step.abs() <= cfg.learning_rate * (1.0 + 1e-6));
            assert!(step * gv <= 0.0);
        }
    }

    #[test]
    fn constant_target_is_learned() {
        let g = GridDesign::new(&[15, 15]).unwrap();
        let arch = Architecture::with_hidden(2, &[8], 100, 1.0).unwrap();
        let cfg = TrainConfig {
            l1_coeff: 0.0,
            seed: 1,
            ..TrainConfig::default()
        };
        let (_, rep) = fit_targets(&g, &vec![0.5; g.len()], &arch, &cfg).unwrap();
        assert!(rep.train_risk < 1e-4, "risk {}", rep.train_risk);
        assert_eq!(rep.data_loss.len(), 300);
    }

    #[test]
    fn identity_target_is_learned() {
        let g = GridDesign::new(&[64]).unwrap();
        let targets = g.coordinates();
        let arch = Architecture::with_hidden(1, &[16], 100, 1.0).unwrap();
        let cfg = TrainConfig {
            l1_coeff: 0.0,
            seed: 2,
            ..TrainConfig::default()
        };
        let (_, rep) = fit_targets(&g, &targets, &arch, &cfg).unwrap();
        assert!(rep.train_risk < 1e-3, "risk {}", rep.train_risk);
    }

    #[test]
    fn fit_is_deterministic_and_thresholded() {
        let g = GridDesign::new(&[10, 10]).unwrap();
        let targets: Vec<f64> = g.coordinates().chunks(2).map(|x| x[0] * x[1]).collect();
        let arch = Architecture::with_hidden(2, &[6, 6], 100, 1.0).unwrap();
        let cfg = TrainConfig {
            epochs: 20,
            l1_coeff: 1e-3,
            seed: 9,
            ..TrainConfig::default()
        };
        let (a, ra) = fit_targets(&g, &targets, &arch, &cfg).unwrap();
        let (b, rb) = fit_targets(&g, &targets, &arch, &cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(ra.data_loss, rb.data_loss);
        assert_eq!(a.count_nonzero(0.0), a.count_nonzero(cfg.zero_threshold));
        assert!(ra.data_loss.iter().chain(&ra.l1_loss).all(|v| v.is_finite()));
    }

    #[test]
    fn theory_mode_respects_class() {
        let g = GridDesign::new(&[12, 12]).unwrap();
        let targets: Vec<f64> = g.coordinates().chunks(2).map(|x| 3.0 * x[0] - x[1]).collect();
        let arch = Architecture::with_hidden(2, &[8, 8, 8], 30, 0.5).unwrap();
        let cfg = TrainConfig {
            epochs: 40,
            seed: 5,
            ..TrainConfig::theory_mode()
        };
        let (p, rep) = fit_targets(&g, &targets, &arch, &cfg).unwrap();
        let m = p.is_in_class(&arch, &g, true, cfg.zero_threshold);
        assert!(m.passes(), "{m:?}");
        assert_eq!(rep.nonzero, m.nonzero);
    }

    #[test]
    fn moving_average_values() {
        assert_eq!(moving_average(&[1.0, 2.0, 3.0, 4.0], 2), vec![1.5, 2.5, 3.5]);
        assert!(moving_average(&[1.0], 2).is_empty());
    }

    #[test]
    fn preset_loss_trend_stays_below_epoch_20() {
        use crate::evaluate::ExperimentPreset;
        use crate::simulate::{simulate_dataset, MeanFunction, NoiseSpec};
        let p = ExperimentPreset::named("case2-2d").unwrap();
        let g = GridDesign::new(&[15, 15]).unwrap();
        let data = simulate_dataset(50, &g, &MeanFunction::Case2, &p.kernel, &NoiseSpec::Constant(1.0), 3).unwrap();
        let arch = p.architecture(50, &g, p.f_bound_for(&pointwise_mean(&data))).unwrap();
        let cfg = TrainConfig { seed: 3, ..p.train.clone() };
        let (_, rep) = fit(&data, &arch, &cfg).unwrap();
        let total: Vec<f64> = rep.data_loss.iter().zip(&rep.l1_loss).map(|(a, b)| a + b).collect();
        let ma = moving_average(&total, 10);
        let at_20 = ma[19];
        assert!(ma[20..].iter().all(|&v| v <= at_20), "moving average rose above its epoch-20 value");
        assert!(ma.last().unwrap() < &(0.5 * at_20));
    }

    #[test]
    fn prune_schedule_ends_at_budget() {
        assert_eq!(prune_target(1000, 40, 10, 10, 20), 1000);
        assert_eq!(prune_target(1000, 40, 20, 10, 20), 40);
        assert_eq!(prune_target(1000, 40, 15, 10, 20), 160);
        assert_eq!(prune_target(30, 40, 12, 10, 20), 30);
        assert_eq!(prune_target(100, 10, 5, 5, 5), 10);
        for e in 10..20 {
            assert!(prune_target(1000, 40, e + 1, 10, 20) <= prune_target(1000, 40, e, 10, 20));
        }
    }

    #[test]
    fn divergence_is_reported() {
        let g = GridDesign::new(&[16]).unwrap();
        let targets: Vec<f64> = g.coordinates().iter().map(|x| 100.0 * x).collect();
        let arch = Architecture::with_hidden(1, &[8, 8, 8], 100, 1.0).unwrap();
        let cfg = TrainConfig {
            optimizer: Optimizer::Sgd,
            learning_rate: 10.0,
            epochs: 50,
            batch_size: 16,
            ..TrainConfig::default()
        };
        match fit_targets(&g, &targets, &arch, &cfg) {
            Err(Error::Diverged { report, .. }) => assert!(!report.data_loss.is_empty()),
            other => panic!("expected divergence, got {:?}", other.map(|r| r.1)),
        }
    }

    #[test]
    fn bad_config_rejected() {
        let g = GridDesign::new(&[4]).unwrap();
        let arch = Architecture::with_hidden(1, &[2], 10, 1.0).unwrap();
        for cfg in [
            TrainConfig { epochs: 0, ..Default::default() },
            TrainConfig { batch_size: 5, ..Default::default() },
            TrainConfig { learning_rate: 0.0, ..Default::default() },
            TrainConfig { beta1: 1.0, ..Default::default() },
        ] {
            assert!(matches!(fit_targets(&g, &[0.0; 4], &arch, &cfg), Err(Error::InvalidArgument(_))));
        }
    }
}
