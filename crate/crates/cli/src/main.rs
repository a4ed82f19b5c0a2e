//! `qphase`: command-line driver for training QCNN phase classifiers on
//! symmetric-noise data and probing them with exact-diagonalization sweeps,
//! order parameters, and twirling experiments.
//!
//! Every command is deterministic given its seeds: JSON outputs are
//! byte-identical across re-runs and CSV floats are fixed to 12 significant
//! digits. Exit codes: 0 success, 1 runtime failure, 2 config/schema error,
//! 3 training did not converge.

use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use qphase_core::config::{preset, RunConfig, PRESET_NAMES};
use qphase_core::dataset::{DatasetDescriptor, SampleFactory};
use qphase_core::exact_diag::{
    gap_scan, ground_state_seeded, build_model, sweep_predict, sweep_predict_ci, LambdaFamily,
};
use qphase_core::fixed_point::{build_fixed_point, FixedPointKind};
use qphase_core::order_param::{
    histogram_generator_set, noisy_string_histogram, sb_correlator, string_order,
    ti_order_parameter, RegionPair,
};
use qphase_core::pauli::{PauliOp, PauliString};
use qphase_core::qcnn::{build_architecture, param_count, QcnnParams};
use qphase_core::state::{pauli_matrix, StateVector};
use qphase_core::train::{
    batch_gradient, batch_loss, checkpoint_test_spec, evaluate_dataset, test_accuracy,
    train_session, Checkpoint,
};
use qphase_core::twirl_mc::{
    lemma_centralizer_report, log_log_slope, product_twirl_expectation, twirl_convergence,
    twirl_generator_set,
};
use qphase_core::Error as CoreError;

#[derive(Parser)]
#[command(
    name = "qphase",
    version,
    about = "Train and probe quantum-phase classifiers built from symmetric-noise data"
)]
struct Cli {
    /// Worker threads for data-parallel sections (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a training curriculum from a config file or a named preset.
    Train(TrainArgs),
    /// Evaluate a checkpoint on regenerated held-out datasets.
    Eval(EvalArgs),
    /// Classify exact ground states along a Hamiltonian parameter sweep.
    Sweep(SweepArgs),
    /// Order parameters (string order, two-copy invariant, ZZ correlator)
    /// on fixed points or exact ground states.
    Orderparam(OrderparamArgs),
    /// Histogram of the string order parameter under random symmetric noise.
    Histogram(HistogramArgs),
    /// Ground-state energy gaps over a coupling grid and several ring sizes.
    Gapscan(GapscanArgs),
    /// Monte-Carlo twirling experiments and centralizer reports.
    Twirl(TwirlArgs),
    /// Built-in self checks (layouts, stabilizers, gradients, centralizers).
    Verify(VerifyArgs),
}

fn main() -> std::process::ExitCode {
    let cli = Cli::parse();
    configure_threads(cli.threads);
    match run(cli.command) {
        Ok(code) => std::process::ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err:#}");
            std::process::ExitCode::from(classify_error(&err))
        }
    }
}

#[cfg(feature = "parallel")]
fn configure_threads(threads: Option<usize>) {
    if let Some(t) = threads {
        // Errors only if a global pool already exists, which cannot happen
        // this early; ignore to stay idempotent under tests.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global();
    }
}

#[cfg(not(feature = "parallel"))]
fn configure_threads(threads: Option<usize>) {
    if threads.is_some() {
        eprintln!("note: built without the parallel feature; --threads ignored");
    }
}

/// Config and schema problems exit 2; everything else unexpected exits 1.
fn classify_error(err: &anyhow::Error) -> u8 {
    if let Some(core) = err.downcast_ref::<CoreError>() {
        return match core {
            CoreError::Config(_) | CoreError::Serde(_) => 2,
            _ => 1,
        };
    }
    if err.downcast_ref::<serde_json::Error>().is_some() {
        return 2;
    }
    1
}

fn schema_err(msg: impl Into<String>) -> anyhow::Error {
    CoreError::Config(msg.into()).into()
}

fn run(command: Command) -> anyhow::Result<u8> {
    match command {
        Command::Train(args) => cmd_train(args),
        Command::Eval(args) => cmd_eval(args),
        Command::Sweep(args) => cmd_sweep(args),
        Command::Orderparam(args) => cmd_orderparam(args),
        Command::Histogram(args) => cmd_histogram(args),
        Command::Gapscan(args) => cmd_gapscan(args),
        Command::Twirl(args) => cmd_twirl(args),
        Command::Verify(args) => cmd_verify(args),
    }
}

// ---------------------------------------------------------------------------
// shared plumbing

/// Fixed-width float formatting: 12 significant digits, scientific.
fn fmt_f(x: f64) -> String {
    format!("{x:.11e}")
}

/// Parse "start:stop:count" into an inclusive linear grid.
fn parse_grid(text: &str) -> anyhow::Result<Vec<f64>> {
    let parts: Vec<&str> = text.split(':').collect();
    if parts.len() != 3 {
        return Err(schema_err(format!(
            "grid must be start:stop:count, got {text:?}"
        )));
    }
    let start: f64 = parts[0]
        .parse()
        .map_err(|_| schema_err(format!("bad grid start {:?}", parts[0])))?;
    let stop: f64 = parts[1]
        .parse()
        .map_err(|_| schema_err(format!("bad grid stop {:?}", parts[1])))?;
    let count: usize = parts[2]
        .parse()
        .map_err(|_| schema_err(format!("bad grid count {:?}", parts[2])))?;
    if count == 0 {
        return Err(schema_err("grid count must be positive"));
    }
    if count == 1 {
        return Ok(vec![start]);
    }
    Ok((0..count)
        .map(|i| start + (stop - start) * i as f64 / (count - 1) as f64)
        .collect())
}

/// Write to the path when given, otherwise print to stdout.
fn emit(output: Option<&Path>, content: &str) -> anyhow::Result<()> {
    match output {
        Some(path) => {
            if let Some(dir) = path.parent() {
                if !dir.as_os_str().is_empty() {
                    fs::create_dir_all(dir)
                        .with_context(|| format!("creating {}", dir.display()))?;
                }
            }
            fs::write(path, content).with_context(|| format!("writing {}", path.display()))?;
            println!("wrote {}", path.display());
            Ok(())
        }
        None => {
            print!("{content}");
            Ok(())
        }
    }
}

fn to_pretty_json<T: Serialize>(value: &T) -> anyhow::Result<String> {
    Ok(serde_json::to_string_pretty(value)? + "\n")
}

fn load_checkpoint(path: &Path) -> anyhow::Result<Checkpoint> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let ckpt: Checkpoint = serde_json::from_str(&text)?;
    Ok(ckpt)
}

fn csv(header: &str, rows: &[String]) -> String {
    let mut out = String::with_capacity(rows.len() * 40 + header.len() + 1);
    out.push_str(header);
    out.push('\n');
    for row in rows {
        out.push_str(row);
        out.push('\n');
    }
    out
}

fn parse_pauli_label(label: &str) -> anyhow::Result<PauliString> {
    let mut ops = Vec::new();
    for (q, ch) in label.chars().enumerate() {
        let op = match ch.to_ascii_uppercase() {
            'I' => PauliOp::I,
            'X' => PauliOp::X,
            'Y' => PauliOp::Y,
            'Z' => PauliOp::Z,
            other => return Err(schema_err(format!("bad Pauli letter {other:?} in {label:?}"))),
        };
        ops.push((q, op));
    }
    if ops.is_empty() {
        return Err(schema_err("empty Pauli label"));
    }
    let n = ops.len();
    Ok(PauliString::from_ops(n, &ops)?)
}

fn parse_fixed_point(name: &str) -> anyhow::Result<FixedPointKind> {
    Ok(match name {
        "plus" | "trivial" => FixedPointKind::TrivialPlus,
        "cat" => FixedPointKind::SbCat,
        "product0" => FixedPointKind::SbProduct0,
        "product1" => FixedPointKind::SbProduct1,
        "cluster" => FixedPointKind::SptCluster,
        _ => {
            return Err(schema_err(format!(
                "unknown fixed point {name:?} (plus|cat|product0|product1|cluster)"
            )))
        }
    })
}

fn parse_family(name: &str) -> anyhow::Result<LambdaFamily> {
    LambdaFamily::from_str(name)
        .map_err(|_| schema_err(format!("unknown family {name:?} (h1|h2|h3|h4|h4_perturbed)")))
}

// ---------------------------------------------------------------------------
// train

#[derive(Args)]
struct TrainArgs {
    /// Path to a run-config JSON file.
    #[arg(long, conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// Name of a shipped preset (run `train` with a bad name to list them).
    #[arg(long)]
    preset: Option<String>,
    /// Output directory (overrides the config; default `runs/<task>`).
    #[arg(long)]
    output_dir: Option<PathBuf>,
}

fn cmd_train(args: TrainArgs) -> anyhow::Result<u8> {
    let mut cfg: RunConfig = match (&args.config, &args.preset) {
        (Some(path), None) => {
            let text =
                fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            RunConfig::parse_json(&text)?
        }
        (None, Some(name)) => preset(name).ok_or_else(|| {
            schema_err(format!(
                "unknown preset {name:?}; available: {}",
                PRESET_NAMES.join(", ")
            ))
        })?,
        _ => return Err(schema_err("pass exactly one of --config or --preset")),
    };
    if let Ok(seed_text) = std::env::var("QPL_SEED") {
        cfg.seed = seed_text
            .trim()
            .parse()
            .map_err(|_| schema_err(format!("QPL_SEED must be an unsigned integer, got {seed_text:?}")))?;
    }
    cfg.validate()?;

    let outdir = args
        .output_dir
        .or_else(|| cfg.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("runs").join(&cfg.task));

    let outcome = train_session(&cfg)?;
    let report = &outcome.report;
    for stage in &report.stages {
        println!(
            "stage l_noise={}: epochs={} accuracy={:.4} reached_threshold={}",
            stage.l_noise, stage.epochs_run, stage.final_test_accuracy, stage.reached_threshold
        );
    }
    println!(
        "converged={} wall_seconds={:.1}",
        report.converged, report.wall_seconds
    );

    fs::create_dir_all(&outdir).with_context(|| format!("creating {}", outdir.display()))?;
    emit(Some(&outdir.join("config.json")), &to_pretty_json(&cfg)?)?;
    emit(Some(&outdir.join("report.json")), &to_pretty_json(report)?)?;
    let ckpt = Checkpoint::from_outcome(&cfg, &outcome);
    emit(Some(&outdir.join("checkpoint.json")), &to_pretty_json(&ckpt)?)?;

    let mut rows = Vec::new();
    for (stage_idx, stage) in report.stages.iter().enumerate() {
        for (i, loss) in stage.loss_curve.iter().enumerate() {
            let epoch = i + 1;
            let acc = stage
                .accuracy_history
                .iter()
                .find(|&&(e, _)| e == epoch)
                .map(|&(_, a)| fmt_f(a))
                .unwrap_or_default();
            rows.push(format!("{epoch},{stage_idx},{},{acc}", fmt_f(*loss)));
        }
    }
    emit(
        Some(&outdir.join("curves.csv")),
        &csv("epoch,stage,loss,test_acc", &rows),
    )?;

    Ok(if report.converged { 0 } else { 3 })
}

// ---------------------------------------------------------------------------
// eval

#[derive(Args)]
struct EvalArgs {
    /// Trained model (checkpoint JSON).
    #[arg(long)]
    checkpoint: PathBuf,
    /// Noise depths to evaluate, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "1,2,3")]
    l_noise: Vec<usize>,
    /// Explicit dataset descriptor JSON (overrides --l-noise/--size/--seed).
    #[arg(long)]
    descriptor: Option<PathBuf>,
    /// Held-out samples per depth.
    #[arg(long, default_value_t = 1000)]
    size: usize,
    /// Root seed for the test stream (default: the checkpoint's seed).
    #[arg(long)]
    seed: Option<u64>,
    /// Output CSV path (default: stdout).
    #[arg(long)]
    output: Option<PathBuf>,
    /// Also write per-sample predictions to this CSV.
    #[arg(long)]
    predictions: Option<PathBuf>,
}

fn cmd_eval(args: EvalArgs) -> anyhow::Result<u8> {
    let mut ckpt = load_checkpoint(&args.checkpoint)?;
    if let Some(seed) = args.seed {
        ckpt.meta.seed = seed;
    }
    let (arch, params) = ckpt.restore()?;
    let train_l = ckpt.trained_l_noise();

    let specs: Vec<(usize, qphase_core::dataset::DatasetSpec)> = match &args.descriptor {
        Some(path) => {
            let text =
                fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            let desc: DatasetDescriptor = serde_json::from_str(&text)?;
            if desc.n != ckpt.arch.n {
                return Err(schema_err(format!(
                    "descriptor window n={} does not match checkpoint n={}",
                    desc.n, ckpt.arch.n
                )));
            }
            vec![(desc.l_noise, desc.to_spec())]
        }
        None => args
            .l_noise
            .iter()
            .map(|&l| (l, checkpoint_test_spec(&ckpt, l, args.size)))
            .collect(),
    };

    let mut rows = Vec::new();
    let mut prediction_rows = Vec::new();
    for (test_l, spec) in &specs {
        let factory = SampleFactory::new(*spec)?;
        let acc = test_accuracy(&arch, &params, &factory)?;
        rows.push(format!("{train_l},{test_l},{}", fmt_f(acc)));
        println!("train_lnoise={train_l} test_lnoise={test_l} accuracy={acc:.4}");
        if args.predictions.is_some() {
            for r in evaluate_dataset(&arch, &params, &factory)? {
                prediction_rows.push(format!(
                    "{},{},{},{},{},{},{},{}",
                    test_l,
                    r.index,
                    r.label,
                    r.predicted,
                    fmt_f(r.probs[0]),
                    fmt_f(r.probs[1]),
                    fmt_f(r.probs[2]),
                    fmt_f(r.probs[3]),
                ));
            }
        }
    }
    emit(
        args.output.as_deref(),
        &csv("train_lnoise,test_lnoise,accuracy", &rows),
    )?;
    if let Some(path) = &args.predictions {
        emit(
            Some(path),
            &csv(
                "test_lnoise,index,label,predicted,p00,p01,p10,p11",
                &prediction_rows,
            ),
        )?;
    }
    Ok(0)
}

// ---------------------------------------------------------------------------
// sweep

#[derive(Args)]
struct SweepArgs {
    /// Trained model (checkpoint JSON).
    #[arg(long)]
    checkpoint: PathBuf,
    /// Hamiltonian family: h1|h2|h3|h4|h4_perturbed|ci|pci.
    #[arg(long)]
    family: String,
    /// λ grid `start:stop:count` (single-coupling families).
    #[arg(long, default_value = "0:1:21")]
    grid: String,
    /// ZZ anisotropy Δ for the bond-alternating family.
    #[arg(long, default_value_t = 1.0)]
    delta: f64,
    /// Ring size (even, ≥ window).
    #[arg(long, default_value_t = 12)]
    n_sites: usize,
    /// Cluster coupling for the ci/pci families.
    #[arg(long, default_value_t = 1.0)]
    g_zxz: f64,
    /// `g_zz` grid for ci/pci, `start:stop:count`.
    #[arg(long, default_value = "0:2:11")]
    g_zz: String,
    /// `g_x` grid for ci/pci, `start:stop:count`.
    #[arg(long, default_value = "0:2:11")]
    g_x: String,
    /// Eigensolver start-vector seed.
    #[arg(long, default_value_t = 7)]
    seed: u64,
    /// Output CSV path (default: stdout).
    #[arg(long)]
    output: Option<PathBuf>,
}

fn cmd_sweep(args: SweepArgs) -> anyhow::Result<u8> {
    let ckpt = load_checkpoint(&args.checkpoint)?;
    let (arch, params) = ckpt.restore()?;
    match args.family.as_str() {
        "ci" | "pci" => {
            let g_zz = parse_grid(&args.g_zz)?;
            let g_x = parse_grid(&args.g_x)?;
            let rows = sweep_predict_ci(
                args.family == "pci",
                args.g_zxz,
                &g_zz,
                &g_x,
                args.n_sites,
                &arch,
                &params,
                args.seed,
            )?;
            let lines: Vec<String> = rows
                .iter()
                .map(|r| {
                    format!(
                        "{},{},{},{},{},{},{},{},{},{},{},{}",
                        r.family,
                        fmt_f(r.g_zxz),
                        fmt_f(r.g_zz),
                        fmt_f(r.g_x),
                        r.n_sites,
                        fmt_f(r.probs[0]),
                        fmt_f(r.probs[1]),
                        fmt_f(r.probs[2]),
                        fmt_f(r.probs[3]),
                        r.predicted,
                        fmt_f(r.e0),
                        fmt_f(r.gap),
                    )
                })
                .collect();
            emit(
                args.output.as_deref(),
                &csv(
                    "family,g_zxz,g_zz,g_x,n_sites,p00,p01,p10,p11,argmax_label,e0,gap",
                    &lines,
                ),
            )?;
        }
        other => {
            let family = parse_family(other)?;
            let grid = parse_grid(&args.grid)?;
            let rows = sweep_predict(
                family,
                args.delta,
                &grid,
                args.n_sites,
                &arch,
                &params,
                args.seed,
            )?;
            let lines: Vec<String> = rows
                .iter()
                .map(|r| {
                    format!(
                        "{},{},{},{},{},{},{},{},{},{}",
                        r.family,
                        fmt_f(r.lambda),
                        r.n_sites,
                        fmt_f(r.probs[0]),
                        fmt_f(r.probs[1]),
                        fmt_f(r.probs[2]),
                        fmt_f(r.probs[3]),
                        r.predicted,
                        fmt_f(r.e0),
                        fmt_f(r.gap),
                    )
                })
                .collect();
            emit(
                args.output.as_deref(),
                &csv(
                    "family,lambda,n_sites,p00,p01,p10,p11,argmax_label,e0,gap",
                    &lines,
                ),
            )?;
        }
    }
    Ok(0)
}

// ---------------------------------------------------------------------------
// orderparam

#[derive(Args)]
struct OrderparamArgs {
    /// Evaluate on exact ground states of this family over the λ grid.
    #[arg(long, conflicts_with = "fixed_point")]
    family: Option<String>,
    /// ...or on a named fixed point: plus|cat|product0|product1|cluster.
    #[arg(long)]
    fixed_point: Option<String>,
    /// Which observable: string|ti|sbcorr|all.
    #[arg(long, default_value = "all")]
    observable: String,
    /// λ grid for family mode.
    #[arg(long, default_value = "0:1:21")]
    grid: String,
    /// Δ for the bond-alternating family.
    #[arg(long, default_value_t = 1.0)]
    delta: f64,
    /// Ring size (family mode) or chain length (fixed-point mode).
    #[arg(long, default_value_t = 12)]
    n_sites: usize,
    /// String-order end sites (defaults: 1 and n−2).
    #[arg(long)]
    string_i: Option<usize>,
    #[arg(long)]
    string_j: Option<usize>,
    /// Two-copy invariant region start (default: centered).
    #[arg(long)]
    region_start: Option<usize>,
    /// Two-copy invariant region length (multiple of 4; default 8).
    #[arg(long, default_value_t = 8)]
    region_len: usize,
    /// ZZ correlator base site and distance (defaults: 0 and n/2).
    #[arg(long, default_value_t = 0)]
    corr_i: usize,
    #[arg(long)]
    distance: Option<usize>,
    /// Use the staggered (antiferromagnetic) sign convention.
    #[arg(long)]
    staggered: bool,
    /// Eigensolver seed (family mode).
    #[arg(long, default_value_t = 7)]
    seed: u64,
    /// Output CSV path (default: stdout).
    #[arg(long)]
    output: Option<PathBuf>,
}

struct ObsPlan {
    string: bool,
    ti: bool,
    sbcorr: bool,
}

fn obs_plan(name: &str) -> anyhow::Result<ObsPlan> {
    Ok(match name {
        "string" => ObsPlan { string: true, ti: false, sbcorr: false },
        "ti" => ObsPlan { string: false, ti: true, sbcorr: false },
        "sbcorr" => ObsPlan { string: false, ti: false, sbcorr: true },
        "all" => ObsPlan { string: true, ti: true, sbcorr: true },
        _ => {
            return Err(schema_err(format!(
                "unknown observable {name:?} (string|ti|sbcorr|all)"
            )))
        }
    })
}

fn cmd_orderparam(args: OrderparamArgs) -> anyhow::Result<u8> {
    let plan = obs_plan(&args.observable)?;
    let n = args.n_sites;
    let si = args.string_i.unwrap_or(1);
    let sj = args.string_j.unwrap_or(n.saturating_sub(2));
    let region = RegionPair {
        start: args
            .region_start
            .unwrap_or_else(|| (n.saturating_sub(args.region_len)) / 2),
        len: args.region_len,
    };
    let ti_scale = (2.0f64).powi(args.region_len as i32 / 4);
    let dist = args.distance.unwrap_or(n / 2);

    // Rows per state: (key, observable, value).
    let evaluate = |state: &StateVector| -> anyhow::Result<Vec<(String, f64)>> {
        let mut vals = Vec::new();
        if plan.string {
            vals.push(("string_order".to_string(), string_order(state, si, sj)?));
        }
        if plan.ti {
            let raw = ti_order_parameter(state, region)?;
            vals.push(("two_copy_invariant_scaled".to_string(), ti_scale * raw));
        }
        if plan.sbcorr {
            vals.push((
                "zz_correlator".to_string(),
                sb_correlator(state, args.corr_i, dist, args.staggered)?,
            ));
        }
        Ok(vals)
    };

    match (&args.family, &args.fixed_point) {
        (Some(name), None) => {
            let family = parse_family(name)?;
            let grid = parse_grid(&args.grid)?;
            let mut rows = Vec::new();
            for &lambda in &grid {
                let h = build_model(&family.at(lambda, args.delta), n)?;
                let gs = ground_state_seeded(&h, args.seed)?;
                for (obs, value) in evaluate(&gs.state)? {
                    rows.push(format!("{},{obs},{}", fmt_f(lambda), fmt_f(value)));
                }
            }
            emit(args.output.as_deref(), &csv("lambda,observable,value", &rows))?;
        }
        (None, Some(name)) => {
            let kind = parse_fixed_point(name)?;
            let state = build_fixed_point(kind, n)?;
            let mut rows = Vec::new();
            for (obs, value) in evaluate(&state)? {
                rows.push(format!("{name},{obs},{}", fmt_f(value)));
            }
            emit(args.output.as_deref(), &csv("state,observable,value", &rows))?;
        }
        _ => return Err(schema_err("pass exactly one of --family or --fixed-point")),
    }
    Ok(0)
}

// ---------------------------------------------------------------------------
// histogram

#[derive(Args)]
struct HistogramArgs {
    /// Number of noisy samples.
    #[arg(long, default_value_t = 4000)]
    samples: usize,
    /// Symmetric-noise layers applied to the cluster state.
    #[arg(long, default_value_t = 2)]
    l_noise: usize,
    #[arg(long, default_value_t = 2024)]
    seed: u64,
    /// Output CSV path (default: stdout).
    #[arg(long)]
    output: Option<PathBuf>,
    /// Also write a JSON summary (mean, variance, standard error).
    #[arg(long)]
    summary: Option<PathBuf>,
}

#[derive(Serialize)]
struct HistogramSummary {
    samples: usize,
    l_noise: usize,
    seed: u64,
    mean: f64,
    variance: f64,
    std_error: f64,
}

fn cmd_histogram(args: HistogramArgs) -> anyhow::Result<u8> {
    let gens = histogram_generator_set();
    let hist = noisy_string_histogram(args.samples, args.l_noise, &gens, args.seed)?;
    let rows: Vec<String> = hist
        .values
        .iter()
        .enumerate()
        .map(|(i, v)| format!("{i},{}", fmt_f(*v)))
        .collect();
    emit(args.output.as_deref(), &csv("sample_index,value", &rows))?;
    println!(
        "samples={} mean={:.6} variance={:.6} std_error={:.6}",
        args.samples, hist.mean, hist.variance, hist.std_error
    );
    if let Some(path) = &args.summary {
        let summary = HistogramSummary {
            samples: args.samples,
            l_noise: args.l_noise,
            seed: args.seed,
            mean: hist.mean,
            variance: hist.variance,
            std_error: hist.std_error,
        };
        emit(Some(path), &to_pretty_json(&summary)?)?;
    }
    Ok(0)
}

// ---------------------------------------------------------------------------
// gapscan

#[derive(Args)]
struct GapscanArgs {
    /// Hamiltonian family: h1|h2|h3|h4|h4_perturbed.
    #[arg(long)]
    family: String,
    #[arg(long, default_value_t = 1.0)]
    delta: f64,
    /// λ grid `start:stop:count`.
    #[arg(long, default_value = "0:1:21")]
    grid: String,
    /// Ring sizes, comma separated (even, 6–16).
    #[arg(long, value_delimiter = ',', default_value = "8,12")]
    sizes: Vec<usize>,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    /// Output CSV path (default: stdout).
    #[arg(long)]
    output: Option<PathBuf>,
}

fn cmd_gapscan(args: GapscanArgs) -> anyhow::Result<u8> {
    let family = parse_family(&args.family)?;
    let grid = parse_grid(&args.grid)?;
    let points = gap_scan(family, args.delta, &grid, &args.sizes, args.seed)?;
    let rows: Vec<String> = points
        .iter()
        .map(|p| {
            format!(
                "{},{},{},{},{}",
                p.family,
                fmt_f(p.lambda),
                p.n_sites,
                fmt_f(p.e0),
                fmt_f(p.gap)
            )
        })
        .collect();
    emit(
        args.output.as_deref(),
        &csv("family,lambda,n_sites,e0,gap", &rows),
    )?;
    Ok(0)
}

// ---------------------------------------------------------------------------
// twirl

#[derive(Args)]
struct TwirlArgs {
    #[command(subcommand)]
    command: TwirlCommand,
}

#[derive(Subcommand)]
enum TwirlCommand {
    /// Centralizer dimensions of the three symmetric gate algebras (JSON).
    Lemmas {
        /// Output JSON path (default: stdout).
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Monte-Carlo convergence of the twirl average toward `(Tr M/N) I`.
    Converge {
        /// Two-site Pauli observable to twirl, e.g. ZI.
        #[arg(long, default_value = "ZI")]
        pauli: String,
        /// Sample counts, comma separated.
        #[arg(long, value_delimiter = ',', default_value = "100,1000,10000")]
        k: Vec<usize>,
        /// Independent repetitions per sample count.
        #[arg(long, default_value_t = 5)]
        reps: usize,
        /// Gates multiplied per sampled group element.
        #[arg(long, default_value_t = 10)]
        word_length: usize,
        #[arg(long, default_value_t = 2024)]
        seed: u64,
        /// Output CSV path (default: stdout).
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Expectation of an observable under independent block twirls.
    Product {
        /// Input state: plus|cat|product0|product1|cluster.
        #[arg(long, default_value = "cat")]
        state: String,
        /// Chain length (even).
        #[arg(long, default_value_t = 8)]
        n: usize,
        /// Weighted Pauli terms `w:LABEL`, comma separated; LABEL length n.
        #[arg(long)]
        observable: String,
        #[arg(long, default_value_t = 10000)]
        k: usize,
        #[arg(long, default_value_t = 10)]
        word_length: usize,
        #[arg(long, default_value_t = 2024)]
        seed: u64,
    },
}

fn cmd_twirl(args: TwirlArgs) -> anyhow::Result<u8> {
    match args.command {
        TwirlCommand::Lemmas { output } => {
            let reports = lemma_centralizer_report()?;
            for r in &reports {
                println!(
                    "{}: expected dim {} computed {} ({})",
                    r.lemma,
                    r.expected_dim,
                    r.computed_dim,
                    r.basis_labels.join(" ")
                );
            }
            emit(output.as_deref(), &to_pretty_json(&reports)?)?;
        }
        TwirlCommand::Converge {
            pauli,
            k,
            reps,
            word_length,
            seed,
            output,
        } => {
            if reps == 0 {
                return Err(schema_err("reps must be positive"));
            }
            let p = parse_pauli_label(&pauli)?;
            if p.num_qubits() != 2 {
                return Err(schema_err("converge twirls act on two-site observables"));
            }
            let m = pauli_matrix(&p, &[0, 1])?.to_dmatrix();
            let gens = twirl_generator_set();
            let points = twirl_convergence(&m, &gens, &k, reps, word_length, seed)?;
            let mut rows = Vec::new();
            for pt in &points {
                for (rep, d) in pt.distances.iter().enumerate() {
                    rows.push(format!("{},{rep},{}", pt.k, fmt_f(*d)));
                }
            }
            for pt in &points {
                println!("k={} mean_distance={:.6}", pt.k, pt.mean_distance);
            }
            if points.len() >= 2 {
                println!("log_log_slope={:.4}", log_log_slope(&points));
            }
            emit(output.as_deref(), &csv("k,rep,distance", &rows))?;
        }
        TwirlCommand::Product {
            state,
            n,
            observable,
            k,
            word_length,
            seed,
        } => {
            let kind = parse_fixed_point(&state)?;
            let psi = build_fixed_point(kind, n)?;
            let mut terms = Vec::new();
            for part in observable.split(',') {
                let (w, label) = match part.split_once(':') {
                    Some((w, label)) => (
                        w.parse::<f64>()
                            .map_err(|_| schema_err(format!("bad weight in {part:?}")))?,
                        label,
                    ),
                    None => (1.0, part),
                };
                let p = parse_pauli_label(label)?;
                if p.num_qubits() != n {
                    return Err(schema_err(format!(
                        "observable term {label:?} does not act on {n} qubits"
                    )));
                }
                terms.push((w, p));
            }
            let gens = twirl_generator_set();
            let (mean, se) = product_twirl_expectation(&psi, &terms, &gens, k, word_length, seed)?;
            println!("state={state} k={k} mean={mean:.6} std_error={se:.6}");
        }
    }
    Ok(0)
}

// ---------------------------------------------------------------------------
// verify

#[derive(Args)]
struct VerifyArgs {
    /// Output JSON path (default: stdout summary only).
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Serialize)]
struct CheckResult {
    name: String,
    pass: bool,
    detail: String,
}

#[derive(Serialize)]
struct VerifyReport {
    checks: Vec<CheckResult>,
    all_pass: bool,
}

fn check(name: &str, result: anyhow::Result<String>) -> CheckResult {
    match result {
        Ok(detail) => CheckResult {
            name: name.to_string(),
            pass: true,
            detail,
        },
        Err(err) => CheckResult {
            name: name.to_string(),
            pass: false,
            detail: format!("{err:#}"),
        },
    }
}

fn ensure(cond: bool, msg: String) -> anyhow::Result<()> {
    if cond {
        Ok(())
    } else {
        Err(anyhow::anyhow!(msg))
    }
}

fn verify_param_counts() -> anyhow::Result<String> {
    let cases = [(4, false, 3, 90), (8, false, 3, 255), (8, true, 5, 165)];
    let mut parts = Vec::new();
    for (n, uniform, depth, expected) in cases {
        let arch = build_architecture(n, uniform, depth)?;
        let count = param_count(&arch);
        ensure(
            count == expected,
            format!("N={n} uniform={uniform} depth={depth}: {count} != {expected}"),
        )?;
        parts.push(format!("{count}"));
    }
    Ok(format!("parameter counts {}", parts.join("/")))
}

fn verify_stabilizers() -> anyhow::Result<String> {
    let n = 12;
    let cluster = build_fixed_point(FixedPointKind::SptCluster, n)?;
    for i in 1..n - 1 {
        let zxz = PauliString::from_ops(
            n,
            &[(i - 1, PauliOp::Z), (i, PauliOp::X), (i + 1, PauliOp::Z)],
        )?;
        let v = cluster.pauli_expectation(&zxz).re;
        ensure((v + 1.0).abs() < 1e-10, format!("cluster ZXZ at {i}: {v}"))?;
    }
    let cat = build_fixed_point(FixedPointKind::SbCat, 8)?;
    let zz = PauliString::from_ops(8, &[(0, PauliOp::Z), (7, PauliOp::Z)])?;
    ensure(
        (cat.pauli_expectation(&zz).re - 1.0).abs() < 1e-10,
        "cat end-to-end ZZ".to_string(),
    )?;
    let xs: Vec<(usize, PauliOp)> = (0..8).map(|q| (q, PauliOp::X)).collect();
    let flip = PauliString::from_ops(8, &xs)?;
    ensure(
        (cat.pauli_expectation(&flip).re - 1.0).abs() < 1e-10,
        "cat global spin flip".to_string(),
    )?;
    let plus = build_fixed_point(FixedPointKind::TrivialPlus, 8)?;
    for q in 0..8 {
        let x = PauliString::from_ops(8, &[(q, PauliOp::X)])?;
        ensure(
            (plus.pauli_expectation(&x).re - 1.0).abs() < 1e-10,
            format!("plus X at {q}"),
        )?;
    }
    let s = string_order(&cluster, 2, 9)?;
    ensure((s - 1.0).abs() < 1e-10, format!("cluster string order {s}"))?;
    Ok("cluster ZXZ = −1 in bulk, cat/plus stabilizers, string order +1".to_string())
}

fn verify_two_copy_invariant() -> anyhow::Result<String> {
    let region = RegionPair { start: 2, len: 8 };
    let scale = 4.0;
    let cases = [
        (FixedPointKind::TrivialPlus, 1.0),
        (FixedPointKind::SptCluster, -0.125),
        (FixedPointKind::SbCat, 0.0),
    ];
    let mut got = Vec::new();
    for (kind, expected) in cases {
        let state = build_fixed_point(kind, 12)?;
        let v = scale * ti_order_parameter(&state, region)?;
        ensure(
            (v - expected).abs() < 1e-10,
            format!("{kind:?}: {v} != {expected}"),
        )?;
        got.push(format!("{v:.3}"));
    }
    Ok(format!("rescaled invariant = {}", got.join(" / ")))
}

fn verify_gradient() -> anyhow::Result<String> {
    use qphase_core::dataset::{DatasetSpec, NoiseConfig};
    use qphase_core::symmetry::SymmetryGroup;
    let arch = build_architecture(4, false, 3)?;
    let spec = DatasetSpec {
        window: 4,
        noise: NoiseConfig {
            group: SymmetryGroup::TimeReversal,
            layers: 1,
            support: 2,
            first_layer_offset: 0,
        },
        label_source: Default::default(),
        size: 6,
        seed: 11,
    };
    let factory = SampleFactory::new(spec)?;
    let params = QcnnParams::random_init(&arch, 5);
    let indices: Vec<usize> = (0..6).collect();
    let (_, grad) = batch_gradient(&arch, &params, &factory, &indices, 50.0)?;
    let mut worst = 0.0f64;
    // Central differences carry O(C²h²) truncation from the sharpened loss;
    // h = 3e-5 keeps the reference an order of magnitude below the 1e-5 bar
    // without running into cancellation roundoff.
    let h = 3e-5;
    let flat = params.flat();
    for k in 0..flat.len() {
        let mut plus = flat.clone();
        plus[k] += h;
        let mut minus = flat.clone();
        minus[k] -= h;
        let lp = batch_loss(
            &arch,
            &QcnnParams::from_flat(&arch, &plus)?,
            &factory,
            &indices,
            50.0,
        )?;
        let lm = batch_loss(
            &arch,
            &QcnnParams::from_flat(&arch, &minus)?,
            &factory,
            &indices,
            50.0,
        )?;
        let fd = (lp - lm) / (2.0 * h);
        let denom = grad[k].abs().max(fd.abs()).max(1e-8);
        worst = worst.max((grad[k] - fd).abs() / denom);
    }
    ensure(
        worst <= 1e-5,
        format!("max relative error {worst:.2e} > 1e-5"),
    )?;
    Ok(format!(
        "{} coordinates, max relative error {worst:.2e}",
        flat.len()
    ))
}

fn verify_centralizers() -> anyhow::Result<String> {
    let reports = lemma_centralizer_report()?;
    let dims: Vec<String> = reports.iter().map(|r| r.computed_dim.to_string()).collect();
    Ok(format!("centralizer dimensions {}", dims.join("/")))
}

fn cmd_verify(args: VerifyArgs) -> anyhow::Result<u8> {
    let checks = vec![
        check("parameter_counts", verify_param_counts()),
        check("fixed_point_stabilizers", verify_stabilizers()),
        check("two_copy_invariant", verify_two_copy_invariant()),
        check("gradient_finite_difference", verify_gradient()),
        check("centralizer_dimensions", verify_centralizers()),
    ];
    let all_pass = checks.iter().all(|c| c.pass);
    for c in &checks {
        println!("{} {} — {}", if c.pass { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    let report = VerifyReport { checks, all_pass };
    if let Some(path) = &args.output {
        emit(Some(path), &to_pretty_json(&report)?)?;
    }
    println!("all checks passed: {all_pass}");
    Ok(if all_pass { 0 } else { 1 })
}
