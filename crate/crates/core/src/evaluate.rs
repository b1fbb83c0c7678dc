//! Empirical L2 risk, the Monte Carlo replication harness, rate diagnostics
//! and a tensor-product polynomial baseline.

use std::collections::{BTreeMap, HashSet};
use std::fs::File;
use std::io::Write;
use std::path::Path;
use std::sync::mpsc;
use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::grid::GridDesign;
use crate::network::{architecture_from_theory, architecture_practical, Architecture, NetworkParams, TheoryConstants};
use crate::rng::derive_seed;
use crate::simulate::{mean_on_grid, pointwise_mean, simulate_dataset, FunctionalDataset, MeanFunction, NoiseSpec};
use crate::spectrum::KernelSpec;
use crate::stats::{fit_line, mean, sample_sd};
use crate::train::{fit, TrainConfig};

/// `(1/N) sum_j (fhat_j - f0_j)^2`, with `fhat` clipped to `[-F, F]` when a
/// bound is given.
pub fn risk_from_values(fhat: &[f64], truth: &[f64], clip: Option<f64>) -> Result<f64> {
    if fhat.len() != truth.len() {
        return Err(Error::DimensionMismatch {
            expected: truth.len(),
            actual: fhat.len(),
        });
    }
    if fhat.is_empty() {
        return Err(invalid("risk over an empty grid"));
    }
    let sum: f64 = fhat
        .iter()
        .zip(truth)
        .map(|(&f, &t)| {
            let f = match clip {
                Some(b) => f.clamp(-b, b),
                None => f,
            };
            (f - t) * (f - t)
        })
        .sum();
    Ok(sum / fhat.len() as f64)
}

/// Empirical L2 risk of a network against `f0` on `grid`.
pub fn empirical_l2_risk(params: &NetworkParams, f0: &MeanFunction, grid: &GridDesign, clip: Option<f64>) -> Result<f64> {
    if f0.dim() != grid.dim() {
        return Err(Error::DimensionMismatch {
            expected: f0.dim(),
            actual: grid.dim(),
        });
    }
    risk_from_values(&params.forward_batch(grid)?, &mean_on_grid(f0, grid)?, clip)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiskRecord {
    pub sigma: f64,
    #[serde(rename = "N")]
    pub n_points: usize,
    pub n: usize,
    pub rep: usize,
    pub seed: u64,
    pub risk: f64,
    pub seconds: f64,
}

impl RiskRecord {
    pub fn key(&self) -> RecordKey {
        RecordKey::new(self.sigma, self.n_points, self.n, self.rep)
    }
}

/// Identity of one replication within a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RecordKey {
    sigma_bits: u64,
    pub n_points: usize,
    pub n: usize,
    pub rep: usize,
}

impl RecordKey {
    pub fn new(sigma: f64, n_points: usize, n: usize, rep: usize) -> Self {
        Self {
            sigma_bits: sigma.to_bits(),
            n_points,
            n,
            rep,
        }
    }

    pub fn sigma(&self) -> f64 {
        f64::from_bits(self.sigma_bits)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiskSummary {
    pub sigma: f64,
    #[serde(rename = "N")]
    pub n_points: usize,
    pub n: usize,
    pub reps: usize,
    pub mean_risk: f64,
    pub sd_risk: f64,
}

/// Groups by `(sigma, N, n)`; mean and sample SD (divisor `reps - 1`, zero
/// for one replication) over records sorted by replication id.
pub fn aggregate(records: &[RiskRecord]) -> Vec<RiskSummary> {
    let mut groups: BTreeMap<(u64, usize, usize), Vec<(usize, f64)>> = BTreeMap::new();
    for r in records {
        groups
            .entry((r.sigma.to_bits(), r.n_points, r.n))
            .or_default()
            .push((r.rep, r.risk));
    }
    let mut rows: Vec<RiskSummary> = groups
        .into_iter()
        .map(|((s, np, n), mut v)| {
            v.sort_by_key(|p| p.0);
            let risks: Vec<f64> = v.iter().map(|p| p.1).collect();
            RiskSummary {
                sigma: f64::from_bits(s),
                n_points: np,
                n,
                reps: risks.len(),
                mean_risk: mean(&risks),
                sd_risk: sample_sd(&risks),
            }
        })
        .collect();
    rows.sort_by(|a, b| {
        a.sigma
            .total_cmp(&b.sigma)
            .then(a.n_points.cmp(&b.n_points))
            .then(a.n.cmp(&b.n))
    });
    rows
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase")]
pub enum ArchitectureSource {
    Practical { hidden_layers: usize },
    Theory,
}

#[derive(Debug, Clone)]
pub struct ExperimentPreset {
    pub name: String,
    pub mean_id: String,
    pub kernel: KernelSpec,
    pub sigmas: Vec<f64>,
    pub grids: Vec<Vec<usize>>,
    pub ns: Vec<usize>,
    pub train: TrainConfig,
    pub architecture: ArchitectureSource,
    pub constants: TheoryConstants,
    pub varrho: f64,
    pub theta: f64,
    /// Norm bound `F`; `None` uses `max(1, max_j |Ybar_j|)`.
    pub f_bound: Option<f64>,
    pub reps: usize,
}

/// Width constant `c_p` of the named presets.
pub const PRESET_WIDTH_CONSTANT: f64 = 4.0;
/// Adam step size of the named presets.
pub const PRESET_LEARNING_RATE: f64 = 5e-3;

/// One `(sigma, grid, n)` setting of a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    pub sigma: f64,
    pub dims: Vec<usize>,
    pub n: usize,
}

impl ExperimentPreset {
    /// `case1-2d`, `case2-2d` or `case3d`.
    pub fn named(name: &str) -> Result<Self> {
        let (mean_id, d, grids) = match name {
            "case1-2d" => ("case1", 2, vec![vec![15, 15], vec![25, 25]]),
            "case2-2d" => ("case2", 2, vec![vec![15, 15], vec![25, 25]]),
            "case3d" => ("case3d", 3, vec![vec![20, 15, 10], vec![30, 15, 10]]),
            _ => {
                return Err(invalid(format!(
                    "unknown preset '{name}' (expected case1-2d, case2-2d or case3d)"
                )))
            }
        };
        Ok(Self {
            name: name.to_string(),
            mean_id: mean_id.to_string(),
            kernel: KernelSpec::simulation_cosine(d),
            sigmas: vec![1.0, 2.0],
            grids,
            ns: vec![50, 100, 200],
            train: TrainConfig {
                learning_rate: PRESET_LEARNING_RATE,
                ..TrainConfig::default()
            },
            architecture: ArchitectureSource::Practical { hidden_layers: 3 },
            constants: TheoryConstants {
                width: PRESET_WIDTH_CONSTANT,
                ..TheoryConstants::default()
            },
            varrho: 0.0,
            theta: 1.0,
            f_bound: None,
            reps: 100,
        })
    }

    /// Switches to the full-depth architecture with bounded parameters,
    /// enforced sparsity and the norm bound.
    pub fn into_theory_mode(mut self) -> Self {
        self.architecture = ArchitectureSource::Theory;
        self.train = TrainConfig {
            learning_rate: self.train.learning_rate,
            ..TrainConfig::theory_mode()
        };
        self
    }

    pub fn mean_function(&self) -> Result<MeanFunction> {
        MeanFunction::from_id(&self.mean_id)
    }

    pub fn validate(&self) -> Result<()> {
        let f0 = self.mean_function()?;
        self.kernel.validate()?;
        if self.sigmas.is_empty() || self.grids.is_empty() || self.ns.is_empty() {
            return Err(invalid("sweep lists must be nonempty"));
        }
        if self.kernel.dim() != f0.dim() {
            return Err(Error::DimensionMismatch {
                expected: f0.dim(),
                actual: self.kernel.dim(),
            });
        }
        for dims in &self.grids {
            let g = GridDesign::new(dims)?;
            if g.dim() != f0.dim() {
                return Err(Error::DimensionMismatch {
                    expected: f0.dim(),
                    actual: g.dim(),
                });
            }
        }
        if self.sigmas.iter().any(|s| !(*s >= 0.0)) || self.ns.contains(&0) {
            return Err(invalid("sigmas must be nonnegative and n positive"));
        }
        if self.reps == 0 {
            return Err(invalid("reps must be at least 1"));
        }
        Ok(())
    }

    pub fn cells(&self) -> Vec<Cell> {
        let mut out = Vec::new();
        for &sigma in &self.sigmas {
            for dims in &self.grids {
                for &n in &self.ns {
                    out.push(Cell {
                        sigma,
                        dims: dims.clone(),
                        n,
                    });
                }
            }
        }
        out
    }

    /// Network architecture for `n` subjects on `grid`.
    pub fn architecture(&self, n: usize, grid: &GridDesign, f_bound: f64) -> Result<Architecture> {
        match self.architecture {
            ArchitectureSource::Practical { hidden_layers } => architecture_practical(
                n,
                grid.len(),
                self.varrho,
                self.theta,
                self.constants,
                grid.dim(),
                hidden_layers,
                f_bound,
            ),
            ArchitectureSource::Theory => architecture_from_theory(
                n,
                grid.len(),
                self.varrho,
                self.theta,
                self.constants,
                grid.dim(),
                f_bound,
            ),
        }
    }

    /// Norm bound for a dataset with pointwise means `ybar`.
    pub fn f_bound_for(&self, ybar: &[f64]) -> f64 {
        self.f_bound
            .unwrap_or_else(|| ybar.iter().fold(1.0f64, |m, v| m.max(v.abs())))
    }
}

/// Seed of the simulated data for replication `rep`; shared by every cell so
/// that cells are compared on common random numbers.
pub fn replication_seed(base: u64, rep: usize) -> u64 {
    derive_seed(base, rep as u64)
}

/// Simulates, fits and scores one replication of one cell.
pub fn run_cell(preset: &ExperimentPreset, cell: &Cell, rep: usize, base_seed: u64) -> Result<(RiskRecord, NetworkParams)> {
    let start = Instant::now();
    let f0 = preset.mean_function()?;
    let grid = GridDesign::new(&cell.dims)?;
    let seed = replication_seed(base_seed, rep);
    let noise = if cell.sigma == 0.0 {
        NoiseSpec::Disabled
    } else {
        NoiseSpec::Constant(cell.sigma)
    };
    let data = simulate_dataset(cell.n, &grid, &f0, &preset.kernel, &noise, seed)?;
    let (params, risk) = fit_and_score(preset, &data, &f0, seed)?;
    Ok((
        RiskRecord {
            sigma: cell.sigma,
            n_points: grid.len(),
            n: cell.n,
            rep,
            seed,
            risk,
            seconds: start.elapsed().as_secs_f64(),
        },
        params,
    ))
}

fn fit_and_score(preset: &ExperimentPreset, data: &FunctionalDataset, f0: &MeanFunction, seed: u64) -> Result<(NetworkParams, f64)> {
    let ybar = pointwise_mean(data);
    let f_bound = preset.f_bound_for(&ybar);
    let arch = preset.architecture(data.n, &data.grid, f_bound)?;
    let cfg = TrainConfig {
        seed: derive_seed(seed, u64::MAX),
        ..preset.train.clone()
    };
    let (params, _) = fit(data, &arch, &cfg)?;
    let risk = empirical_l2_risk(&params, f0, &data.grid, Some(f_bound))?;
    Ok((params, risk))
}

#[derive(Debug, Clone, PartialEq)]
pub struct FailedRun {
    pub key: RecordKey,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ReplicationOutcome {
    /// Sorted by `(sigma, N, n, rep)`.
    pub records: Vec<RiskRecord>,
    pub failures: Vec<FailedRun>,
}

impl ReplicationOutcome {
    pub fn table(&self) -> Vec<RiskSummary> {
        aggregate(&self.records)
    }
}

#[derive(Debug, Clone, Default)]
pub struct ReplicationOptions {
    pub reps: usize,
    pub seed: u64,
    /// Worker threads; 0 uses the global pool.
    pub jobs: usize,
    /// Replications already on record.
    pub skip: HashSet<RecordKey>,
}

/// Runs every cell of `preset` for `opts.reps` replications. Each finished
/// record is passed to `on_record` on the calling thread as it completes;
/// diverged or otherwise failed runs are collected separately.
pub fn run_replications_with<F>(preset: &ExperimentPreset, opts: &ReplicationOptions, mut on_record: F) -> Result<ReplicationOutcome>
where
    F: FnMut(&RiskRecord) -> Result<()>,
{
    preset.validate()?;
    if opts.reps == 0 {
        return Err(invalid("reps must be at least 1"));
    }
    let mut tasks = Vec::new();
    for cell in preset.cells() {
        let n_points: usize = cell.dims.iter().product();
        for rep in 0..opts.reps {
            let key = RecordKey::new(cell.sigma, n_points, cell.n, rep);
            if !opts.skip.contains(&key) {
                tasks.push((key, cell.clone(), rep));
            }
        }
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.jobs)
        .build()
        .map_err(|e| invalid(format!("cannot start worker pool: {e}")))?;
    let (tx, rx) = mpsc::channel();
    let mut outcome = ReplicationOutcome::default();
    let mut sink_error = None;
    std::thread::scope(|scope| {
        scope.spawn(move || {
            pool.install(|| {
                tasks.par_iter().for_each_with(tx, |tx, (key, cell, rep)| {
                    let r = run_cell(preset, cell, *rep, opts.seed).map(|p| p.0);
                    let _ = tx.send((*key, r));
                });
            });
        });
        for (key, r) in rx {
            match r {
                Ok(rec) => {
                    if sink_error.is_none() {
                        if let Err(e) = on_record(&rec) {
                            sink_error = Some(e);
                        }
                    }
                    outcome.records.push(rec);
                }
                Err(e) => outcome.failures.push(FailedRun {
                    key,
                    message: e.to_string(),
                }),
            }
        }
    });
    if let Some(e) = sink_error {
        return Err(e);
    }
    outcome.records.sort_by_key(|r| r.key());
    outcome.failures.sort_by_key(|f| f.key);
    Ok(outcome)
}

pub fn run_replications(preset: &ExperimentPreset, reps: usize, seed: u64, jobs: usize) -> Result<ReplicationOutcome> {
    let opts = ReplicationOptions {
        reps,
        seed,
        jobs,
        skip: HashSet::new(),
    };
    run_replications_with(preset, &opts, |_| Ok(()))
}

pub const RECORD_COLUMNS: &str = "sigma,N,n,rep,seed,risk,seconds";
pub const TABLE_COLUMNS: &str = "sigma,N,n,reps,mean_risk,sd_risk";

/// Reads a records CSV; a missing file yields no records.
pub fn read_records(path: &Path) -> Result<Vec<RiskRecord>> {
    if !path.exists() {
        return Ok(Vec::new());
    }
    let mut rdr = csv::Reader::from_path(path)?;
    let mut out = Vec::new();
    for row in rdr.deserialize() {
        out.push(row?);
    }
    Ok(out)
}

/// Appends records, writing the header when the file is new or empty.
pub struct RecordWriter {
    inner: csv::Writer<File>,
}

impl RecordWriter {
    pub fn append(path: &Path) -> Result<Self> {
        let fresh = std::fs::metadata(path).map(|m| m.len() == 0).unwrap_or(true);
        let file = std::fs::OpenOptions::new().create(true).append(true).open(path)?;
        let mut inner = csv::WriterBuilder::new().has_headers(false).from_writer(file);
        if fresh {
            inner.write_record(RECORD_COLUMNS.split(','))?;
        }
        Ok(Self { inner })
    }

    pub fn write(&mut self, r: &RiskRecord) -> Result<()> {
        self.inner.serialize(r)?;
        self.inner.flush()?;
        Ok(())
    }
}

pub fn write_records<W: Write>(w: W, records: &[RiskRecord]) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    for r in records {
        wtr.serialize(r)?;
    }
    if records.is_empty() {
        wtr.write_record(RECORD_COLUMNS.split(','))?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn write_table<W: Write>(w: W, rows: &[RiskSummary]) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    for r in rows {
        wtr.serialize(r)?;
    }
    if rows.is_empty() {
        wtr.write_record(TABLE_COLUMNS.split(','))?;
    }
    wtr.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateDiagnostic {
    /// Slope of `log mean risk` on `log(n N^varrho)`.
    pub slope: f64,
    pub std_err: f64,
    /// `-theta / (theta + 1)`.
    pub target: f64,
    pub groups: usize,
}

pub fn rate_target(theta: f64) -> f64 {
    if theta.is_infinite() {
        -1.0
    } else {
        -theta / (theta + 1.0)
    }
}

/// Least-squares slope over `(n, N, mean_risk)` groups. The `log^6` factor of
/// the bound is ignored.
pub fn rate_diagnostic(groups: &[(usize, usize, f64)], varrho: f64, theta: f64) -> Result<RateDiagnostic> {
    if groups.len() < 3 {
        return Err(invalid(format!("rate diagnostic needs at least 3 groups, got {}", groups.len())));
    }
    if !(theta > 0.0) || !(varrho >= 0.0) {
        return Err(invalid("need theta > 0 and varrho >= 0"));
    }
    if groups.iter().any(|g| !(g.2 > 0.0) || g.0 == 0 || g.1 == 0) {
        return Err(invalid("rate diagnostic needs positive n, N and mean risks"));
    }
    let xs: Vec<f64> = groups
        .iter()
        .map(|&(n, np, _)| (n as f64).ln() + varrho * (np as f64).ln())
        .collect();
    let ys: Vec<f64> = groups.iter().map(|g| g.2.ln()).collect();
    let line = fit_line(&xs, &ys)?;
    Ok(RateDiagnostic {
        slope: line.slope,
        std_err: line.slope_se,
        target: rate_target(theta),
        groups: groups.len(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct PolynomialFit {
    pub degree: usize,
    /// Coefficients of `prod_k P_{a_k}(2 x_k - 1)`, first exponent fastest.
    pub coefficients: Vec<f64>,
    pub risk: f64,
    /// The design was rank deficient and a ridge term was added.
    pub regularized: bool,
}

fn legendre_all(t: f64, degree: usize, out: &mut [f64]) {
    out[0] = 1.0;
    if degree >= 1 {
        out[1] = t;
    }
    for k in 2..=degree {
        let kf = k as f64;
        out[k] = ((2.0 * kf - 1.0) * t * out[k - 1] - (kf - 1.0) * out[k - 2]) / kf;
    }
}

fn poly_design(grid: &GridDesign, degree: usize) -> DMatrix<f64> {
    let d = grid.dim();
    let per = degree + 1;
    let cols = per.pow(d as u32);
    let mut m = DMatrix::zeros(grid.len(), cols);
    let mut x = vec![0.0; d];
    let mut basis = vec![vec![0.0; per]; d];
    for j in 0..grid.len() {
        grid.point_into(j, &mut x);
        for k in 0..d {
            legendre_all(2.0 * x[k] - 1.0, degree, &mut basis[k]);
        }
        for c in 0..cols {
            let mut rest = c;
            let mut v = 1.0;
            for b in basis.iter() {
                v *= b[rest % per];
                rest /= per;
            }
            m[(j, c)] = v;
        }
    }
    m
}

/// Least-squares tensor-product Legendre fit of per-axis `degree` to the
/// pointwise means, scored against `f0`.
pub fn baseline_tensor_poly(data: &FunctionalDataset, degree: usize, f0: &MeanFunction) -> Result<PolynomialFit> {
    let grid = &data.grid;
    let cols = (degree + 1).checked_pow(grid.dim() as u32).unwrap_or(usize::MAX);
    if cols > grid.len() {
        return Err(invalid(format!(
            "(degree+1)^d = {cols} exceeds the {} grid points",
            grid.len()
        )));
    }
    let design = poly_design(grid, degree);
    let y = DVector::from_vec(pointwise_mean(data));
    let svd = design.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    let regularized = !(smin > 1e-10 * smax);
    let coef = if regularized {
        let lambda = 1e-8 * smax * smax;
        let mut normal = design.transpose() * &design;
        for i in 0..cols {
            normal[(i, i)] += lambda;
        }
        let rhs = design.transpose() * &y;
        normal
            .cholesky()
            .ok_or_else(|| Error::Numerical("regularized polynomial system is not positive definite".into()))?
            .solve(&rhs)
    } else {
        svd.solve(&y, 0.0).map_err(|e| Error::Numerical(e.to_string()))?
    };
    let fitted = &design * &coef;
    let risk = risk_from_values(fitted.as_slice(), &mean_on_grid(f0, grid)?, None)?;
    Ok(PolynomialFit {
        degree,
        coefficients: coef.iter().copied().collect(),
        risk,
        regularized,
    })
}
