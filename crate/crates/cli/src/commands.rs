use std::fs::File;
use std::io::BufWriter;
use std::path::Path;
use std::time::Instant;

use serde::Serialize;

use logcontrast::bench::{
    generate_synthetic, run_replications, tune_on_first_shard, BenchConfig, SyntheticSpec,
};
use logcontrast::io::{
    read_dataset, read_json, write_dataset, write_estimate, write_json, write_metrics, write_path,
    write_rows, write_trace, DatasetMeta, PathRow, RawDataset,
};
use logcontrast::penalty::PenaltyKind;
use logcontrast::tuning::{lambda_grid, penalty_template, select_lambda, DEFAULT_GRID_SIZE};
use logcontrast::{
    build_design, partition, CompositionMatrix, Error, LogContrastDesign, PenaltySpec, Result,
    SolverRegistry,
};

use crate::options::{single, Options};

fn with_path(path: &Path, e: std::io::Error) -> Error {
    Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display())))
}

fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|e| with_path(path, e))
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    let path = dir.join(name);
    Ok(BufWriter::new(File::create(&path).map_err(|e| with_path(&path, e))?))
}

pub fn gen(opts: &Options) -> Result<()> {
    let d = SyntheticSpec::default();
    let spec = SyntheticSpec {
        n: opts.n.unwrap_or(d.n),
        p: opts.p.unwrap_or(d.p),
        q: opts.q.unwrap_or(d.q),
        sigma: single(opts.sigma.as_ref(), "sigma", d.sigma)?,
        case: opts.case()?,
        noise_sd: opts.noise_sd.unwrap_or(d.noise_sd),
        seed: opts.seed.unwrap_or(d.seed),
        center: true,
        true_zeta: None,
    };
    let data = generate_synthetic(&spec)?;
    let dir = opts.out_dir()?;
    let raw = RawDataset {
        y: data.y.clone(),
        x: data.x.values().to_owned(),
        v: data.v.clone(),
    };
    write_dataset(create(dir, "data.csv")?, &raw)?;
    let meta = DatasetMeta {
        p: spec.p,
        q: spec.q,
        n: spec.n,
        centering: data.design.centering().cloned(),
        truth: Some(data.truth.zeta().to_vec()),
        seed: Some(spec.seed),
        sigma: Some(spec.sigma),
        case: Some(spec.case.number()),
    };
    write_json(create(dir, "data.json")?, &meta)?;
    println!("wrote {} rows to {}", spec.n, dir.join("data.csv").display());
    Ok(())
}

/// Dataset from `--in`, with `p` checked against the JSON sidecar if present.
fn load(opts: &Options) -> Result<LogContrastDesign> {
    let path = opts.input()?;
    let raw = read_dataset(open(path)?)?;
    let sidecar = path.with_extension("json");
    if sidecar.exists() {
        let meta: DatasetMeta = read_json(open(&sidecar)?)?;
        if meta.p != raw.x.ncols() || meta.q != raw.v.ncols() || meta.n != raw.y.len() {
            return Err(Error::Shape(format!(
                "{} says n = {}, p = {}, q = {}; the data has n = {}, p = {}, q = {}",
                sidecar.display(),
                meta.n,
                meta.p,
                meta.q,
                raw.y.len(),
                raw.x.ncols(),
                raw.v.ncols()
            )));
        }
    }
    let x = CompositionMatrix::new(raw.x)?;
    build_design(&x, raw.v.view(), raw.y.view(), true)
}

/// Penalty with λ fixed by `--lambda` or chosen by GIC on the first shard.
fn penalty(opts: &Options, data: &logcontrast::ShardedDataset, kind: PenaltyKind) -> Result<PenaltySpec> {
    let config = opts.solver_config()?;
    let grid_size = opts.grid_size.unwrap_or(DEFAULT_GRID_SIZE);
    match opts.lambda {
        Some(lambda) if !opts.tune_gic => {
            let first = data.only(0);
            let grid = lambda_grid(first.shard(0), data.p(), grid_size)?;
            Ok(penalty_template(kind, &first, &config, &grid, data.n())?.with_lambda(lambda))
        }
        _ if opts.tune_gic => tune_on_first_shard(data, kind, &config, grid_size),
        _ => Err(Error::Usage("give --lambda <value> or --tune-gic".into())),
    }
}

#[derive(Serialize)]
struct FitSummary<'a> {
    method: &'a str,
    penalty: &'a str,
    lambda: f64,
    machines: usize,
    rho: f64,
    rounds: usize,
    sweeps: usize,
    converged: bool,
    messages: u64,
    scalars: u64,
    zero_sum: f64,
    support: Vec<usize>,
    estimate: Vec<f64>,
    runtime_secs: f64,
}

pub fn fit(opts: &Options, registry: &SolverRegistry) -> Result<()> {
    let method = single(opts.method.as_ref(), "method", "dsgcdmm".to_string())?;
    let kind = single(Some(&opts.penalties()?), "penalty", PenaltyKind::AdaptiveLasso)?;
    let machines = single(opts.machines.as_ref(), "K", 1)?;
    let solver = registry.get(&method)?;
    let design = load(opts)?;
    let data = partition(&design, machines)?;
    solver.check(&data)?;
    let config = opts.solver_config()?;
    let penalty = penalty(opts, &data, kind)?;

    let started = Instant::now();
    let fit = solver.fit(&data, &penalty, &config)?;
    let runtime_secs = started.elapsed().as_secs_f64();
    if !fit.converged {
        log::warn!("{method}: not converged after {} rounds", fit.rounds);
    }

    let dir = opts.out_dir()?;
    write_estimate(create(dir, "estimate.csv")?, &fit.estimate)?;
    write_trace(create(dir, "trace.csv")?, &fit.trace)?;
    let summary = FitSummary {
        method: solver.name(),
        penalty: kind.name(),
        lambda: penalty.lambda,
        machines,
        rho: config.rho,
        rounds: fit.rounds,
        sweeps: fit.sweeps,
        converged: fit.converged,
        messages: fit.messages,
        scalars: fit.scalars,
        zero_sum: fit.estimate.zero_sum_residual(),
        support: fit.support(),
        estimate: fit.estimate.zeta().to_vec(),
        runtime_secs,
    };
    write_json(create(dir, "fit.json")?, &summary)?;
    println!(
        "{}-{} K={} lambda={:.4e} rounds={} converged={} support={:?}",
        solver.tag(),
        kind.tag(),
        machines,
        penalty.lambda,
        fit.rounds,
        fit.converged,
        summary.support
    );
    Ok(())
}

#[derive(Serialize)]
struct TuneSummary<'a> {
    penalty: &'a str,
    lambda: f64,
    index: usize,
    grid_size: usize,
    grid_degenerate: bool,
    failures: Vec<(f64, String)>,
}

pub fn tune(opts: &Options, registry: &SolverRegistry) -> Result<()> {
    let method = single(opts.method.as_ref(), "method", "gcdmm".to_string())?;
    let kind = single(Some(&opts.penalties()?), "penalty", PenaltyKind::AdaptiveLasso)?;
    let machines = single(opts.machines.as_ref(), "K", 1)?;
    let solver = registry.get(&method)?;
    let design = load(opts)?;
    let data = partition(&design, machines)?;
    let config = opts.solver_config()?;
    let grid_size = opts.grid_size.unwrap_or(DEFAULT_GRID_SIZE);

    let first = data.only(0);
    let grid = lambda_grid(first.shard(0), data.p(), grid_size)?;
    let template = penalty_template(kind, &first, &config, &grid, data.n())?;
    let selection = select_lambda(&first, solver.as_ref(), &template, &config, &grid)?;

    let dir = opts.out_dir()?;
    let rows: Vec<PathRow> = selection.path.iter().map(PathRow::from).collect();
    write_path(create(dir, "path.csv")?, &rows, data.d())?;
    write_json(
        create(dir, "tune.json")?,
        &TuneSummary {
            penalty: kind.name(),
            lambda: selection.lambda,
            index: selection.index,
            grid_size,
            grid_degenerate: selection.grid_degenerate,
            failures: selection.failures.clone(),
        },
    )?;
    println!(
        "lambda={:.6e} (grid point {} of {}) support={:?}",
        selection.lambda,
        selection.index + 1,
        grid.len(),
        selection.selected().support
    );
    Ok(())
}

pub fn bench(opts: &Options, registry: &SolverRegistry) -> Result<()> {
    let d = BenchConfig::default();
    let config = BenchConfig {
        n: opts.n.unwrap_or(d.n),
        p: opts.p.unwrap_or(d.p),
        q: opts.q.unwrap_or(d.q),
        case: opts.case()?,
        noise_sd: opts.noise_sd.unwrap_or(d.noise_sd),
        sigmas: opts.sigma.clone().unwrap_or(d.sigmas),
        machines: opts.machines.clone().unwrap_or(d.machines),
        methods: opts.method.clone().unwrap_or(d.methods),
        penalties: opts.penalties()?,
        reps: opts.reps.unwrap_or(d.reps),
        seed: opts.seed.unwrap_or(d.seed),
        grid_size: opts.grid_size.unwrap_or(d.grid_size),
        solver: opts.solver_config()?,
        tuning: None,
    };
    let report = run_replications(&config, registry)?;
    let dir = opts.out_dir()?;
    write_metrics(create(dir, "metrics.csv")?, &report.cells)?;
    write_rows(create(dir, "rows.csv")?, &report.rows)?;

    println!(
        "{:<10} {:>4} {:>5} {:>16} {:>6} {:>6} {:>6} {:>6} {:>5}",
        "method", "K", "sigma", "AEE (se)", "FP", "FN", "FP-C", "FP-NC", "reps"
    );
    for c in &report.cells {
        println!(
            "{:<10} {:>4} {:>5} {:>16} {:>6.2} {:>6.2} {:>6.2} {:>6.2} {:>5}",
            c.label,
            c.machines,
            c.sigma,
            format!("{:.4} ({:.4})", c.aee.mean, c.aee.stderr),
            c.fp.mean,
            c.fn_.mean,
            c.fp_c.mean,
            c.fp_nc.mean,
            c.reps
        );
        for f in &c.failures {
            log::warn!("{}: {f}", c.label);
        }
    }
    Ok(())
}
