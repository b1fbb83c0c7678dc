use std::collections::HashSet;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::Args;
use serde::Serialize;

use fdnet::evaluate::{
    aggregate, read_records, risk_from_values, write_table, ArchitectureSource, ExperimentPreset, RecordWriter,
    ReplicationOptions,
};
use fdnet::grid::GridDesign;
use fdnet::io::{
    ingest_raw, read_params_file, write_dataset_file, write_params_file, write_pgm_slices, write_values_csv,
    DatasetReader, ParamsRecord,
};
use fdnet::network::{architecture_from_theory, architecture_practical, Architecture, TheoryConstants};
use fdnet::simulate::{mean_on_grid, simulate_dataset, DatasetMeta, MeanFunction, NoiseSpec};
use fdnet::spectrum::{spectrum_sweep, KernelSpec, SweepKernel, SweepMethod};
use fdnet::train::{fit_targets, Optimizer, TrainConfig, TrainReport};

use crate::config::{self, ExperimentSection, FileConfig, NetworkSection, SimulateSection, SpectrumSection};
use crate::{Cli, CliError, Command, Common};

type CliResult<T> = Result<T, CliError>;

pub fn run(cli: Cli) -> CliResult<()> {
    let cfg = config::load(cli.common.config.as_deref())?;
    if let Some(j) = cli.common.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(j)
            .build_global()
            .map_err(|e| CliError::usage(format!("cannot set --jobs {j}: {e}")))?;
    }
    match cli.command {
        Command::Simulate(a) => simulate(&cli.common, cfg, a),
        Command::Train(a) => train(&cli.common, cfg, a),
        Command::Eval(a) => eval(&cli.common, a),
        Command::Spectrum(a) => spectrum(&cli.common, cfg, a),
        Command::Experiment(a) => experiment(&cli.common, cfg, a),
        Command::Ingest(a) => ingest(&cli.common, a),
        Command::Predict(a) => predict(&cli.common, a),
    }
}

fn resolve(common: &Common, path: &Path) -> PathBuf {
    match &common.out_dir {
        Some(dir) if path.is_relative() => dir.join(path),
        _ => path.to_path_buf(),
    }
}

fn input(path: &Path) -> CliResult<&Path> {
    if path.is_file() {
        Ok(path)
    } else {
        Err(CliError::io(format!("cannot read {}: no such file", path.display())))
    }
}

fn create(path: &Path) -> CliResult<BufWriter<File>> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent)
            .map_err(|e| CliError::io(format!("cannot create {}: {e}", parent.display())))?;
    }
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::io(format!("cannot create {}: {e}", path.display())))
}

fn ensure_parent(path: &Path) -> CliResult<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent)
            .map_err(|e| CliError::io(format!("cannot create {}: {e}", parent.display())))?;
    }
    Ok(())
}

fn dims_label(dims: &[usize]) -> String {
    dims.iter().map(|d| d.to_string()).collect::<Vec<_>>().join("x")
}

fn parse_grid_list(text: &str) -> CliResult<Vec<Vec<usize>>> {
    text.split(',')
        .map(|g| {
            g.split('x')
                .map(|v| {
                    v.trim()
                        .parse::<usize>()
                        .map_err(|_| CliError::usage(format!("bad grid '{g}' (expected e.g. 15x15)")))
                })
                .collect()
        })
        .collect()
}

fn mean_from(id: &str, key: &str) -> CliResult<MeanFunction> {
    MeanFunction::from_id(id).map_err(|e| CliError::usage(format!("{key}: {e}")))
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
pub struct SimulateArgs {
    #[arg(long, short)]
    pub output: PathBuf,
    /// case1, case2, case3d, identity or linear:<b>;<a1>,..
    #[arg(long)]
    pub mean: Option<String>,
    #[arg(long, value_delimiter = ',')]
    pub dims: Option<Vec<usize>>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub sigma: Option<f64>,
    /// cosine, zero or bernoulli
    #[arg(long)]
    pub kernel: Option<String>,
    #[arg(long)]
    pub xi_var: Option<f64>,
    #[arg(long)]
    pub varrho: Option<f64>,
    #[arg(long)]
    pub k_max: Option<usize>,
}

#[derive(Serialize)]
struct SimulateEcho<'a> {
    seed: u64,
    simulate: &'a SimulateSection,
}

fn kernel_from(s: &SimulateSection) -> CliResult<KernelSpec> {
    let d = s.dims.len();
    let k = match s.kernel.as_str() {
        "cosine" => KernelSpec::CosineProcess {
            xi_var: s.xi_var,
            d,
            normalize_by_d: false,
        },
        "zero" => KernelSpec::zero(d),
        "bernoulli" => KernelSpec::BernoulliPolynomial {
            varrho: s.varrho,
            d,
            k_max: s.k_max,
        },
        other => {
            return Err(CliError::usage(format!(
                "simulate.kernel: unknown kernel '{other}' (expected cosine, zero or bernoulli)"
            )))
        }
    };
    k.validate().map_err(|e| CliError::usage(format!("simulate.kernel: {e}")))?;
    Ok(k)
}

fn simulate(common: &Common, cfg: FileConfig, a: SimulateArgs) -> CliResult<()> {
    let mut s = cfg.simulate;
    if let Some(v) = a.mean {
        s.mean = v;
    }
    if let Some(v) = a.dims {
        s.dims = v;
    }
    if let Some(v) = a.n {
        s.n = v;
    }
    if let Some(v) = a.sigma {
        s.sigma = v;
    }
    if let Some(v) = a.kernel {
        s.kernel = v;
    }
    if let Some(v) = a.xi_var {
        s.xi_var = v;
    }
    if let Some(v) = a.varrho {
        s.varrho = v;
    }
    if let Some(v) = a.k_max {
        s.k_max = v;
    }
    let seed = common.seed.or(cfg.seed).unwrap_or(0);
    let f0 = mean_from(&s.mean, "simulate.mean")?;
    let grid = GridDesign::new(&s.dims).map_err(|e| CliError::usage(format!("simulate.dims: {e}")))?;
    if f0.dim() != grid.dim() {
        return Err(CliError::usage(format!(
            "simulate.dims: mean '{}' needs {} dimensions, got {}",
            s.mean,
            f0.dim(),
            grid.dim()
        )));
    }
    if s.n == 0 {
        return Err(CliError::usage("simulate.n: must be at least 1"));
    }
    let noise = if s.sigma == 0.0 {
        NoiseSpec::Disabled
    } else if s.sigma > 0.0 && s.sigma.is_finite() {
        NoiseSpec::Constant(s.sigma)
    } else {
        return Err(CliError::usage(format!("simulate.sigma: must be nonnegative, got {}", s.sigma)));
    };
    let kernel = kernel_from(&s)?;
    let data = simulate_dataset(s.n, &grid, &f0, &kernel, &noise, seed)?;
    let out = resolve(common, &a.output);
    ensure_parent(&out)?;
    write_dataset_file(&out, &data)?;
    config::echo(&out, &SimulateEcho { seed, simulate: &s })?;
    println!(
        "n={} N={} dims={} sigma={} seed={} mean={}",
        data.n,
        grid.len(),
        dims_label(grid.dims()),
        s.sigma,
        seed,
        f0.id()
    );
    Ok(())
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
pub struct TrainArgs {
    #[arg(long)]
    pub data: PathBuf,
    /// Parameter file; the report goes to `<output>.report.csv`
    #[arg(long, short)]
    pub output: PathBuf,
    /// practical or theory
    #[arg(long)]
    pub mode: Option<String>,
    #[arg(long)]
    pub layers: Option<usize>,
    #[arg(long)]
    pub width: Option<usize>,
    #[arg(long)]
    pub sparsity: Option<usize>,
    #[arg(long)]
    pub f_bound: Option<f64>,
    #[arg(long)]
    pub varrho: Option<f64>,
    #[arg(long)]
    pub theta: Option<f64>,
    #[arg(long)]
    pub c_depth: Option<f64>,
    #[arg(long)]
    pub c_width: Option<f64>,
    #[arg(long)]
    pub c_sparsity: Option<f64>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long = "batch")]
    pub batch_size: Option<usize>,
    #[arg(long = "lr")]
    pub learning_rate: Option<f64>,
    #[arg(long)]
    pub l1: Option<f64>,
    /// adam or sgd
    #[arg(long)]
    pub optimizer: Option<String>,
    #[arg(long)]
    pub constrained: bool,
    #[arg(long)]
    pub zero_threshold: Option<f64>,
}

#[derive(Serialize)]
struct TrainEcho<'a> {
    seed: u64,
    data: String,
    network: &'a NetworkSection,
    train: &'a TrainConfig,
}

fn build_architecture(net: &NetworkSection, n: usize, grid: &GridDesign, f_bound: f64) -> CliResult<Architecture> {
    let consts = TheoryConstants {
        depth: net.c_depth,
        width: net.c_width,
        sparsity: net.c_sparsity,
    };
    let mut arch = match net.mode.as_str() {
        "theory" => architecture_from_theory(n, grid.len(), net.varrho, net.theta, consts, grid.dim(), f_bound),
        "practical" => architecture_practical(
            n,
            grid.len(),
            net.varrho,
            net.theta,
            consts,
            grid.dim(),
            net.hidden_layers,
            f_bound,
        ),
        other => {
            return Err(CliError::usage(format!(
                "network.mode: unknown mode '{other}' (expected practical or theory)"
            )))
        }
    }
    .map_err(|e| CliError::usage(format!("network: {e}")))?;
    if let Some(w) = net.width {
        let l = arch.hidden_layers();
        arch.widths[1..=l].iter_mut().for_each(|p| *p = w);
    }
    if let Some(s) = net.sparsity {
        arch.sparsity = s;
    }
    arch.validate().map_err(|e| CliError::usage(format!("network: {e}")))?;
    Ok(arch)
}

fn arch_line(mode: &str, arch: &Architecture) -> String {
    format!(
        "# architecture mode={} L={} width={} widths={} s={} F={}",
        mode,
        arch.hidden_layers(),
        arch.widths[1],
        dims_label(&arch.widths),
        arch.sparsity,
        arch.f_bound
    )
}

fn write_report(path: &Path, header: &str, report: &TrainReport) -> CliResult<()> {
    let mut w = create(path)?;
    writeln!(w, "{header}")?;
    report.write_csv(&mut w)?;
    w.flush()?;
    Ok(())
}

fn train(common: &Common, cfg: FileConfig, a: TrainArgs) -> CliResult<()> {
    let mut net = cfg.network;
    let mut tc = cfg.train;
    if let Some(v) = a.mode {
        net.mode = v;
    }
    if let Some(v) = a.layers {
        net.hidden_layers = v;
    }
    if a.width.is_some() {
        net.width = a.width;
    }
    if a.sparsity.is_some() {
        net.sparsity = a.sparsity;
    }
    if a.f_bound.is_some() {
        net.f_bound = a.f_bound;
    }
    if let Some(v) = a.varrho {
        net.varrho = v;
    }
    if let Some(v) = a.theta {
        net.theta = v;
    }
    if let Some(v) = a.c_depth {
        net.c_depth = v;
    }
    if let Some(v) = a.c_width {
        net.c_width = v;
    }
    if let Some(v) = a.c_sparsity {
        net.c_sparsity = v;
    }
    if let Some(v) = a.epochs {
        tc.epochs = v;
    }
    if let Some(v) = a.batch_size {
        tc.batch_size = v;
    }
    if let Some(v) = a.learning_rate {
        tc.learning_rate = v;
    }
    if let Some(v) = a.l1 {
        tc.l1_coeff = v;
    }
    if let Some(v) = a.zero_threshold {
        tc.zero_threshold = v;
    }
    if let Some(v) = a.optimizer {
        tc.optimizer = match v.as_str() {
            "adam" => Optimizer::Adam,
            "sgd" => Optimizer::Sgd,
            other => return Err(CliError::usage(format!("train.optimizer: unknown optimizer '{other}'"))),
        };
    }
    if a.constrained {
        tc.constrained = true;
    }
    if net.mode == "theory" {
        tc.constrained = true;
        tc.enforce_sparsity = true;
        tc.enforce_norm = true;
    }
    if let Some(s) = common.seed.or(cfg.seed) {
        tc.seed = s;
    }

    let reader = DatasetReader::open(input(&a.data)?)?;
    let header = reader.header.clone();
    let ybar = reader.pointwise_mean()?;
    let f_bound = net
        .f_bound
        .unwrap_or_else(|| ybar.iter().fold(1.0f64, |m, v| m.max(v.abs())));
    let arch = build_architecture(&net, header.n, &header.grid, f_bound)?;
    tc.validate(header.grid.len())
        .map_err(|e| CliError::usage(format!("train: {e}")))?;

    let out = resolve(common, &a.output);
    ensure_parent(&out)?;
    let mut report_path = out.as_os_str().to_owned();
    report_path.push(".report.csv");
    let report_path = PathBuf::from(report_path);
    let head = arch_line(&net.mode, &arch);
    config::echo(
        &out,
        &TrainEcho {
            seed: tc.seed,
            data: a.data.display().to_string(),
            network: &net,
            train: &tc,
        },
    )?;
    match fit_targets(&header.grid, &ybar, &arch, &tc) {
        Ok((params, report)) => {
            write_report(&report_path, &head, &report)?;
            write_params_file(
                &out,
                &ParamsRecord {
                    params,
                    arch: arch.clone(),
                    constrained: tc.constrained,
                },
            )?;
            println!("{}", &head[2..]);
            println!(
                "train_risk={} nonzero={} empirical_norm={}",
                report.train_risk, report.nonzero, report.empirical_norm
            );
            Ok(())
        }
        Err(fdnet::Error::Diverged { epoch, loss, report }) => {
            write_report(&report_path, &head, &report)?;
            Err(CliError::numerical(format!(
                "training diverged at epoch {epoch} (loss {loss:e}); report kept at {}",
                report_path.display()
            )))
        }
        Err(e) => Err(e.into()),
    }
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub params: PathBuf,
    /// Mean function id; defaults to the dataset's when --data is given
    #[arg(long)]
    pub mean: Option<String>,
    #[arg(long, value_delimiter = ',')]
    pub dims: Option<Vec<usize>>,
    /// Take the grid and mean id from this dataset
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Per-point CSV of coordinates, fhat and f0
    #[arg(long)]
    pub dump: Option<PathBuf>,
    /// Score the raw network output instead of clipping to [-F, F]
    #[arg(long)]
    pub no_clip: bool,
}

#[derive(Serialize)]
struct EvalEcho {
    params: String,
    mean: String,
    dims: Vec<usize>,
    clip: Option<f64>,
}

fn grid_and_mean(dims: Option<Vec<usize>>, mean: Option<String>, data: Option<&Path>) -> CliResult<(GridDesign, String)> {
    let header = match data {
        Some(p) => Some(DatasetReader::open(input(p)?)?.header),
        None => None,
    };
    let grid = match (dims, &header) {
        (Some(d), _) => GridDesign::new(&d).map_err(|e| CliError::usage(format!("--dims: {e}")))?,
        (None, Some(h)) => h.grid.clone(),
        (None, None) => return Err(CliError::usage("--dims or --data is required")),
    };
    let mean = match (mean, &header) {
        (Some(m), _) => m,
        (None, Some(h)) => h.meta.mean_id.clone(),
        (None, None) => return Err(CliError::usage("--mean or --data is required")),
    };
    Ok((grid, mean))
}

/// Network values on `grid`, clipped to `[-F, F]` unless `clip` is `None`.
fn predictions(rec: &ParamsRecord, grid: &GridDesign, clip: Option<f64>) -> CliResult<Vec<f64>> {
    if rec.params.input_dim() != grid.dim() {
        return Err(CliError::usage(format!(
            "network takes {} inputs but the grid has {} dimensions",
            rec.params.input_dim(),
            grid.dim()
        )));
    }
    let mut v = rec.params.forward_batch(grid)?;
    if let Some(b) = clip {
        v.iter_mut().for_each(|x| *x = x.clamp(-b, b));
    }
    Ok(v)
}

fn eval(common: &Common, a: EvalArgs) -> CliResult<()> {
    let rec = read_params_file(input(&a.params)?)?;
    let (grid, mean_id) = grid_and_mean(a.dims, a.mean, a.data.as_deref())?;
    let f0 = mean_from(&mean_id, "--mean")?;
    if f0.dim() != grid.dim() {
        return Err(CliError::usage(format!(
            "mean '{mean_id}' takes {} inputs but the grid has {} dimensions",
            f0.dim(),
            grid.dim()
        )));
    }
    let clip = (!a.no_clip).then_some(rec.arch.f_bound);
    let fhat = predictions(&rec, &grid, clip)?;
    let truth = mean_on_grid(&f0, &grid)?;
    let risk = risk_from_values(&fhat, &truth, None)?;
    println!("{risk}");
    if let Some(d) = a.dump {
        let path = resolve(common, &d);
        let mut w = create(&path)?;
        write_values_csv(&mut w, &grid, &fhat, Some(&truth))?;
        w.flush()?;
        config::echo(
            &path,
            &EvalEcho {
                params: a.params.display().to_string(),
                mean: mean_id,
                dims: grid.dims().to_vec(),
                clip,
            },
        )?;
    }
    Ok(())
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
pub struct SpectrumArgs {
    /// bernoulli or cosine
    #[arg(long)]
    pub kernel: Option<String>,
    #[arg(long)]
    pub varrho: Option<f64>,
    #[arg(long)]
    pub d: Option<usize>,
    #[arg(long)]
    pub xi_var: Option<f64>,
    #[arg(long)]
    pub normalize_by_d: bool,
    #[arg(long)]
    pub k_max: Option<usize>,
    /// Points per axis, e.g. 8,16,32
    #[arg(long, value_delimiter = ',')]
    pub axis_counts: Option<Vec<usize>>,
    /// formula, circulant, power or dense
    #[arg(long)]
    pub method: Option<String>,
    /// CSV path; standard output when omitted
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

fn spectrum(common: &Common, cfg: FileConfig, a: SpectrumArgs) -> CliResult<()> {
    let mut s: SpectrumSection = cfg.spectrum;
    if let Some(v) = a.kernel {
        s.kernel = v;
    }
    if let Some(v) = a.varrho {
        s.varrho = v;
    }
    if let Some(v) = a.d {
        s.d = v;
    }
    if let Some(v) = a.xi_var {
        s.xi_var = v;
    }
    if a.normalize_by_d {
        s.normalize_by_d = true;
    }
    if let Some(v) = a.k_max {
        s.k_max = v;
    }
    if let Some(v) = a.axis_counts {
        s.axis_counts = v;
    }
    if let Some(v) = a.method {
        s.method = v;
    }
    let kernel = match s.kernel.as_str() {
        "bernoulli" => SweepKernel::Bernoulli {
            varrho: s.varrho,
            d: s.d,
            k_max: s.k_max,
        },
        "cosine" => SweepKernel::Cosine {
            xi_var: s.xi_var,
            d: s.d,
            normalize_by_d: s.normalize_by_d,
        },
        other => {
            return Err(CliError::usage(format!(
                "spectrum.kernel: unknown kernel '{other}' (expected bernoulli or cosine)"
            )))
        }
    };
    kernel
        .spec()
        .validate()
        .map_err(|e| CliError::usage(format!("spectrum: {e}")))?;
    let method = match s.method.as_str() {
        "formula" => SweepMethod::Formula,
        "circulant" => SweepMethod::Circulant,
        "power" => SweepMethod::PowerIteration,
        "dense" => SweepMethod::Dense,
        other => return Err(CliError::usage(format!("spectrum.method: unknown method '{other}'"))),
    };
    let report = spectrum_sweep(kernel, &s.axis_counts, method)?;
    match a.output {
        Some(p) => {
            let path = resolve(common, &p);
            let mut w = create(&path)?;
            report.write_csv(&mut w)?;
            w.flush()?;
            config::echo(&path, &s)?;
        }
        None => {
            let stdout = std::io::stdout();
            report.write_csv(stdout.lock())?;
        }
    }
    Ok(())
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
pub struct ExperimentArgs {
    /// case1-2d, case2-2d or case3d
    #[arg(long)]
    pub preset: Option<String>,
    /// practical or theory
    #[arg(long)]
    pub mode: Option<String>,
    #[arg(long, value_delimiter = ',')]
    pub sigmas: Option<Vec<f64>>,
    /// Grids, e.g. 15x15,25x25
    #[arg(long)]
    pub grids: Option<String>,
    #[arg(long, value_delimiter = ',')]
    pub ns: Option<Vec<usize>>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long = "batch")]
    pub batch_size: Option<usize>,
}

#[derive(Serialize)]
struct ExperimentEcho<'a> {
    seed: u64,
    out_dir: String,
    experiment: &'a ExperimentSection,
    train: &'a TrainConfig,
}

fn experiment(common: &Common, cfg: FileConfig, a: ExperimentArgs) -> CliResult<()> {
    let mut e = cfg.experiment;
    if let Some(v) = a.preset {
        e.preset = v;
    }
    if let Some(v) = a.mode {
        e.mode = v;
    }
    if a.sigmas.is_some() {
        e.sigmas = a.sigmas;
    }
    if let Some(g) = a.grids {
        e.grids = Some(parse_grid_list(&g)?);
    }
    if a.ns.is_some() {
        e.ns = a.ns;
    }
    if a.epochs.is_some() {
        e.epochs = a.epochs;
    }
    if a.batch_size.is_some() {
        e.batch_size = a.batch_size;
    }
    if let Some(r) = common.reps {
        e.reps = r;
    }
    if let Some(j) = common.jobs {
        e.jobs = j;
    }
    let seed = common.seed.or(cfg.seed).unwrap_or(0);
    let mut preset = ExperimentPreset::named(&e.preset).map_err(|err| CliError::usage(format!("experiment.preset: {err}")))?;
    preset.train.learning_rate = e.learning_rate;
    preset.constants.width = e.c_width;
    preset = match e.mode.as_str() {
        "practical" => preset,
        "theory" => preset.into_theory_mode(),
        other => return Err(CliError::usage(format!("experiment.mode: unknown mode '{other}'"))),
    };
    if let Some(v) = &e.sigmas {
        preset.sigmas = v.clone();
    }
    if let Some(v) = &e.grids {
        preset.grids = v.clone();
    }
    if let Some(v) = &e.ns {
        preset.ns = v.clone();
    }
    if let Some(v) = e.epochs {
        preset.train.epochs = v;
    }
    if let Some(v) = e.batch_size {
        preset.train.batch_size = v;
    }
    preset.reps = e.reps;
    preset.validate().map_err(|err| CliError::usage(format!("experiment: {err}")))?;
    if let Some(g) = preset.grids.iter().find(|g| g.iter().product::<usize>() < preset.train.batch_size) {
        return Err(CliError::usage(format!(
            "experiment.batch_size: {} exceeds the {} points of grid {}",
            preset.train.batch_size,
            g.iter().product::<usize>(),
            dims_label(g)
        )));
    }

    let dir = common.out_dir.clone().unwrap_or_else(|| PathBuf::from("fdnet-experiment"));
    std::fs::create_dir_all(&dir).map_err(|err| CliError::io(format!("cannot create {}: {err}", dir.display())))?;
    config::echo(
        &dir.join("experiment"),
        &ExperimentEcho {
            seed,
            out_dir: dir.display().to_string(),
            experiment: &e,
            train: &preset.train,
        },
    )?;
    let records_path = dir.join("records.csv");
    let existing = read_records(&records_path)?;
    let in_sweep = |r: &fdnet::evaluate::RiskRecord| {
        r.rep < preset.reps
            && preset.cells().iter().any(|c| {
                c.sigma == r.sigma && c.n == r.n && c.dims.iter().product::<usize>() == r.n_points
            })
    };
    let mut kept: Vec<_> = existing.into_iter().filter(|r| in_sweep(r)).collect();
    let skip: HashSet<_> = kept.iter().map(|r| r.key()).collect();
    if !skip.is_empty() {
        eprintln!("resuming: {} records already present", skip.len());
    }
    let mut writer = RecordWriter::append(&records_path)?;
    let opts = ReplicationOptions {
        reps: preset.reps,
        seed,
        jobs: e.jobs,
        skip,
    };
    let outcome = fdnet::evaluate::run_replications_with(&preset, &opts, |r| writer.write(r))?;
    for f in &outcome.failures {
        eprintln!(
            "warning: sigma={} N={} n={} rep={} failed: {}",
            f.key.sigma(),
            f.key.n_points,
            f.key.n,
            f.key.rep,
            f.message
        );
    }
    if !outcome.failures.is_empty() {
        eprintln!("warning: {} replications failed and are excluded", outcome.failures.len());
    }
    kept.extend(outcome.records);
    let table = aggregate(&kept);
    let mut w = create(&dir.join("table.csv"))?;
    write_table(&mut w, &table)?;
    w.flush()?;
    write_table(std::io::stdout().lock(), &table)?;
    if matches!(preset.architecture, ArchitectureSource::Theory) {
        eprintln!("architecture: theory mode (bounded, sparse, norm-bounded networks)");
    }
    Ok(())
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    /// Raw little-endian f64 stack, subject-major
    #[arg(long)]
    pub raw: PathBuf,
    #[arg(long, value_delimiter = ',', required = true)]
    pub dims: Vec<usize>,
    /// Subject count; inferred from the file length when omitted
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long, short)]
    pub output: PathBuf,
    #[arg(long, default_value = "")]
    pub mean_id: String,
}

#[derive(Serialize)]
struct IngestEcho {
    raw: String,
    dims: Vec<usize>,
    n: usize,
}

fn ingest(common: &Common, a: IngestArgs) -> CliResult<()> {
    let out = resolve(common, &a.output);
    ensure_parent(&out)?;
    let meta = DatasetMeta {
        mean_id: a.mean_id.clone(),
        kernel: "unknown".into(),
        noise: "unknown".into(),
        seed: 0,
    };
    let header = ingest_raw(input(&a.raw)?, &a.dims, a.n, &out, meta)?;
    config::echo(
        &out,
        &IngestEcho {
            raw: a.raw.display().to_string(),
            dims: a.dims.clone(),
            n: header.n,
        },
    )?;
    println!("n={} N={} dims={}", header.n, header.grid.len(), dims_label(header.grid.dims()));
    Ok(())
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[arg(long)]
    pub params: PathBuf,
    #[arg(long, value_delimiter = ',', required = true)]
    pub dims: Vec<usize>,
    #[arg(long, short)]
    pub output: PathBuf,
    /// csv or pgm
    #[arg(long, default_value = "csv")]
    pub format: String,
    #[arg(long)]
    pub no_clip: bool,
}

#[derive(Serialize)]
struct PredictEcho {
    params: String,
    dims: Vec<usize>,
    format: String,
    clip: Option<f64>,
}

fn predict(common: &Common, a: PredictArgs) -> CliResult<()> {
    let rec = read_params_file(input(&a.params)?)?;
    let grid = GridDesign::new(&a.dims).map_err(|e| CliError::usage(format!("--dims: {e}")))?;
    let clip = (!a.no_clip).then_some(rec.arch.f_bound);
    let values = predictions(&rec, &grid, clip)?;
    let out = resolve(common, &a.output);
    ensure_parent(&out)?;
    match a.format.as_str() {
        "csv" => {
            let mut w = create(&out)?;
            write_values_csv(&mut w, &grid, &values, None)?;
            w.flush()?;
        }
        "pgm" => {
            let dir = out.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
            let stem = out
                .file_stem()
                .and_then(|s| s.to_str())
                .ok_or_else(|| CliError::usage("--output needs a file name"))?;
            let files = write_pgm_slices(dir, stem, &grid, &values)?;
            eprintln!("wrote {} image(s)", files.len());
        }
        other => return Err(CliError::usage(format!("--format: unknown format '{other}' (expected csv or pgm)"))),
    }
    config::echo(
        &out,
        &PredictEcho {
            params: a.params.display().to_string(),
            dims: a.dims.clone(),
            format: a.format.clone(),
            clip,
        },
    )?;
    println!("values={} dims={}", values.len(), dims_label(grid.dims()));
    Ok(())
}
