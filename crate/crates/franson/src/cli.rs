//! Command-line binding: subcommands for fringe scans, washout maps, the
//! Monte Carlo estimator, estimator-versus-analytic comparison, regime
//! checks and recipe listing.
//!
//! Exit codes: 0 success, 1 computation-level failure (failed comparison,
//! undefined visibility, failed regime check), 2 usage or configuration
//! error. Errors print as a single line on stderr. With identical arguments
//! all output is byte-identical; `--deterministic` additionally suppresses
//! the timestamp metadata line in CSV files.

use std::path::PathBuf;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand};
use serde_json::Value;
use thiserror::Error;

use crate::correlation::{
    bell_violation, fringe_scan, g2_averaged, visibility, washout_map, CorrelationConfig,
    CorrelationError, SweepKind, SweepSpec,
};
use crate::interferometer::{separability_check, Regime};
use crate::montecarlo::{estimate_g2, simulate_pairs, simulate_result, McConfig};
use crate::spectral::coherence_length;
use crate::sweep_io::{
    recipe, write_csv, write_tag_dump, ConfigError, ExperimentConfig, ResultTable,
    ValidatedExperiment,
};

#[derive(Parser)]
#[command(
    name = "franson",
    version,
    about = "Two-photon coincidence fringe simulator for paired asymmetric Mach-Zehnder interferometers"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand)]
pub enum Command {
    /// Analytic fringe scan; writes CSV and reports visibility.
    Fringe(RunArgs),
    /// Bandwidth-resolved washout map as long-form CSV.
    Washout(RunArgs),
    /// Monte Carlo estimate at the configured geometry.
    Mc(McArgs),
    /// Monte Carlo sweep against the analytic engine, point by point.
    Compare(CompareArgs),
    /// Separability and coincidence-condition report.
    Check(RunArgs),
    /// List the built-in recipes.
    Recipes,
}

#[derive(Args)]
pub struct RunArgs {
    /// Built-in recipe name (see `recipes`).
    #[arg(long, conflicts_with = "config")]
    pub recipe: Option<String>,
    /// Path to a JSON experiment file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// CSV destination; falls back to the config's output.csv, then stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Override one config field, e.g. --set source.bandwidth_df=2e9.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
    /// Omit the timestamp metadata line so reruns are byte-identical.
    #[arg(long)]
    pub deterministic: bool,
}

#[derive(Args)]
pub struct McArgs {
    #[command(flatten)]
    pub run: RunArgs,
    /// Replace mc.seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Replace mc.n_pairs.
    #[arg(long)]
    pub n_pairs: Option<u64>,
    /// Also write the raw time-tag stream to this path.
    #[arg(long)]
    pub tags: Option<PathBuf>,
}

#[derive(Args)]
pub struct CompareArgs {
    #[command(flatten)]
    pub run: RunArgs,
    /// Replace mc.seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Replace mc.n_pairs.
    #[arg(long)]
    pub n_pairs: Option<u64>,
    /// Number of sweep points to compare.
    #[arg(long, default_value_t = 20)]
    pub points: usize,
}

#[derive(Debug, Error)]
enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Engine(String),
    #[error("visibility undefined: fringe maximum + minimum = 0")]
    UndefinedVisibility,
}

impl CliError {
    fn exit_code(&self) -> i32 {
        match self {
            CliError::UndefinedVisibility => 1,
            _ => 2,
        }
    }
}

impl From<CorrelationError> for CliError {
    fn from(e: CorrelationError) -> Self {
        match e {
            CorrelationError::UndefinedVisibility => CliError::UndefinedVisibility,
            other => CliError::Engine(other.to_string()),
        }
    }
}

impl From<crate::montecarlo::McError> for CliError {
    fn from(e: crate::montecarlo::McError) -> Self {
        CliError::Engine(e.to_string())
    }
}

/// Parses the process arguments, runs the selected command and returns the
/// process exit code.
pub fn run() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help and version requests land here with a success code.
            let code = if e.exit_code() == 0 { 0 } else { 2 };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn dispatch(command: Command) -> Result<i32, CliError> {
    match command {
        Command::Fringe(args) => cmd_fringe(&args),
        Command::Washout(args) => cmd_washout(&args),
        Command::Mc(args) => cmd_mc(&args),
        Command::Compare(args) => cmd_compare(&args),
        Command::Check(args) => cmd_check(&args),
        Command::Recipes => cmd_recipes(),
    }
}

/// Splits a `--set` argument into its dotted path and a JSON value; bare
/// words that are not valid JSON scalars are taken as strings.
fn parse_override(arg: &str) -> Result<(Vec<String>, Value), CliError> {
    let (key, raw) = arg
        .split_once('=')
        .ok_or_else(|| CliError::Usage(format!("--set expects KEY=VALUE, got \"{arg}\"")))?;
    if key.is_empty() || key.split('.').any(str::is_empty) {
        return Err(CliError::Usage(format!("--set key \"{key}\" is malformed")));
    }
    let value = serde_json::from_str::<Value>(raw)
        .unwrap_or_else(|_| Value::String(raw.to_string()));
    Ok((key.split('.').map(str::to_string).collect(), value))
}

fn apply_override(root: &mut Value, path: &[String], value: Value) -> Result<(), CliError> {
    let mut node = root;
    for segment in &path[..path.len() - 1] {
        let map = node.as_object_mut().ok_or_else(|| {
            CliError::Usage(format!("--set path \"{}\" does not address a section", path.join(".")))
        })?;
        node = map
            .entry(segment.clone())
            .or_insert_with(|| Value::Object(Default::default()));
        if node.is_null() {
            *node = Value::Object(Default::default());
        }
    }
    let map = node.as_object_mut().ok_or_else(|| {
        CliError::Usage(format!("--set path \"{}\" does not address a section", path.join(".")))
    })?;
    map.insert(path.last().expect("path checked non-empty").clone(), value);
    Ok(())
}

/// Resolves the experiment from `--recipe` or `--config`, applies `--set`
/// overrides and fully validates the result.
fn load_config(args: &RunArgs) -> Result<ExperimentConfig, CliError> {
    let mut value = match (&args.recipe, &args.config) {
        (Some(name), None) => {
            let cfg = recipe(name).ok_or_else(|| {
                CliError::Usage(format!("unknown recipe \"{name}\"; run the recipes command"))
            })?;
            serde_json::to_value(&cfg).expect("recipes serialize")
        }
        (None, Some(path)) => {
            let text = std::fs::read_to_string(path).map_err(ConfigError::Io)?;
            // Parse for syntax first so line/column diagnostics survive even
            // when overrides follow.
            serde_json::from_str::<Value>(&text).map_err(|e| ConfigError::Parse {
                line: e.line(),
                column: e.column(),
                message: e.to_string(),
            })?
        }
        _ => {
            return Err(CliError::Usage(
                "exactly one of --recipe or --config is required".to_string(),
            ))
        }
    };
    for arg in &args.set {
        let (path, v) = parse_override(arg)?;
        apply_override(&mut value, &path, v)?;
    }
    let config: ExperimentConfig = serde_json::from_value(value)
        .map_err(|e| CliError::Usage(format!("config rejected: {e}")))?;
    config
        .validate()
        .map_err(|errors| CliError::Config(ConfigError::Invalid(errors)))?;
    Ok(config)
}

fn build(config: &ExperimentConfig) -> Result<ValidatedExperiment, CliError> {
    Ok(config.build()?)
}

fn base_metadata(config: &ExperimentConfig, deterministic: bool) -> Vec<(String, String)> {
    let mut metadata = vec![
        ("config_sha256".to_string(), config.config_hash()),
        ("version".to_string(), env!("CARGO_PKG_VERSION").to_string()),
    ];
    if !deterministic {
        let now = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .expect("system clock after 1970")
            .as_secs();
        metadata.push(("generated_unix".to_string(), now.to_string()));
    }
    metadata
}

/// Sends the finished table to the chosen destination: an explicit file, or
/// stdout when no path is configured. Tables are fully built before any
/// byte is written, so failures never leave partial files.
fn deliver(table: &ResultTable, out: &Option<PathBuf>, fallback: &Option<String>) -> Result<(), CliError> {
    let path = out
        .clone()
        .or_else(|| fallback.as_ref().map(PathBuf::from));
    match path {
        Some(p) => write_csv(table, &p)?,
        None => print!("{}", table.to_csv_string()),
    }
    Ok(())
}

fn abscissa_column(kind: SweepKind) -> &'static str {
    match kind {
        SweepKind::TrimB => "trim_b_m",
        SweepKind::TrimBoth => "trim_both_m",
        SweepKind::Phase => "phase_rad",
    }
}

fn cmd_fringe(args: &RunArgs) -> Result<i32, CliError> {
    let config = load_config(args)?;
    let experiment = build(&config)?;
    let series = fringe_scan(&experiment.correlation, &experiment.sweep)?;
    let vis = visibility(&series)?;
    let bell = bell_violation(vis);

    let mut metadata = base_metadata(&config, args.deterministic);
    metadata.push(("visibility".to_string(), format!("{vis:.16e}")));
    metadata.push(("bell_violation".to_string(), bell.to_string()));
    if !series.coincidence_ok {
        metadata.push((
            "warning".to_string(),
            "coincidence condition violated: |dL1 - dL2| exceeds the coherence length".to_string(),
        ));
    }
    let mut table = ResultTable::new(
        vec![abscissa_column(series.sweep_kind).to_string(), "g2".to_string()],
        metadata,
    )
    .expect("two columns");
    for (x, g2) in series.abscissa.iter().zip(&series.g2) {
        table
            .push_row(vec![*x, *g2])
            .expect("sweep abscissa is strictly increasing");
    }
    deliver(&table, &args.out, &experiment.output.csv)?;
    println!("visibility: {vis:.6}");
    println!("bell_violation: {bell}");
    Ok(0)
}

fn cmd_washout(args: &RunArgs) -> Result<i32, CliError> {
    let config = load_config(args)?;
    let experiment = build(&config)?;
    let plan = experiment.washout.as_ref().ok_or_else(|| {
        CliError::Usage("washout needs a \"washout\" section in the config".to_string())
    })?;
    let map = washout_map(&experiment.correlation, &plan.bandwidths_hz, &plan.axis)?;

    let mut metadata = base_metadata(&config, args.deterministic);
    let sums = map
        .row_sums()
        .iter()
        .map(|s| format!("{s:.16e}"))
        .collect::<Vec<_>>()
        .join(";");
    metadata.push(("row_sums".to_string(), sums));
    let mut table = ResultTable::new(
        vec![
            "bandwidth_hz".to_string(),
            "detuning_hz".to_string(),
            "g2".to_string(),
        ],
        metadata,
    )
    .expect("three columns");
    for row in &map.rows {
        for (detuning, g2) in &row.samples {
            table
                .push_row(vec![row.bandwidth_hz, *detuning, *g2])
                .expect("rows ascend in bandwidth then detuning");
        }
    }
    deliver(&table, &args.out, &experiment.output.csv)?;
    for row in &map.rows {
        println!("row_sum {:.16e}: {:.16e}", row.bandwidth_hz, row.row_sum);
    }
    Ok(0)
}

fn mc_config(
    run: &RunArgs,
    seed: Option<u64>,
    n_pairs: Option<u64>,
) -> Result<(ExperimentConfig, ValidatedExperiment, McConfig), CliError> {
    let mut config = load_config(run)?;
    match config.mc.as_mut() {
        Some(section) => {
            if let Some(s) = seed {
                section.seed = s;
            }
            if let Some(n) = n_pairs {
                section.n_pairs = n;
            }
        }
        None => {
            return Err(CliError::Usage(
                "this command needs an \"mc\" section in the config".to_string(),
            ))
        }
    }
    let experiment = build(&config)?;
    let mc = experiment.mc.expect("mc section checked above");
    Ok((config, experiment, mc))
}

fn cmd_mc(args: &McArgs) -> Result<i32, CliError> {
    let (config, experiment, mc) = mc_config(&args.run, args.seed, args.n_pairs)?;

    // Tag storage for a large run is substantial; skip it unless asked for.
    let (result, tags) = if args.tags.is_some() {
        let run = simulate_pairs(&mc)?;
        (run.result, Some(run.tags))
    } else {
        (simulate_result(&mc)?, None)
    };

    if let Some(path) = &args.tags {
        write_tag_dump(tags.as_ref().expect("simulated with tags"), path)?;
    }
    if args.run.out.is_some() || experiment.output.csv.is_some() {
        let mut metadata = base_metadata(&config, args.run.deterministic);
        metadata.push(("seed".to_string(), mc.seed.to_string()));
        let mut table = ResultTable::new(
            vec![
                "coincidences".to_string(),
                "post_selected_pairs".to_string(),
                "g2_estimate".to_string(),
                "std_err".to_string(),
            ],
            metadata,
        )
        .expect("four columns");
        table
            .push_row(vec![
                result.coincidences as f64,
                result.post_selected_pairs as f64,
                result.g2_estimate,
                result.std_err,
            ])
            .expect("single row");
        deliver(&table, &args.run.out, &experiment.output.csv)?;
    }
    println!("n_pairs: {}", mc.n_pairs);
    println!("post_selected_pairs: {}", result.post_selected_pairs);
    println!("coincidences: {}", result.coincidences);
    println!("g2_estimate: {:.16e}", result.g2_estimate);
    println!("std_err: {:.16e}", result.std_err);
    Ok(0)
}

fn cmd_compare(args: &CompareArgs) -> Result<i32, CliError> {
    let (config, experiment, mc) = mc_config(&args.run, args.seed, args.n_pairs)?;
    if experiment.sweep.kind != SweepKind::TrimB {
        return Err(CliError::Usage(
            "compare works on trim_b sweeps only".to_string(),
        ));
    }
    if args.points < 2 {
        return Err(CliError::Usage("--points must be at least 2".to_string()));
    }
    let spec = SweepSpec::new(
        SweepKind::TrimB,
        experiment.sweep.start,
        experiment.sweep.stop,
        args.points,
    )
    .expect("validated sweep range");
    let trims: Vec<f64> = (0..args.points).map(|i| spec.point(i)).collect();

    let analytic = fringe_scan(&experiment.correlation, &spec)?;
    let estimated = estimate_g2(&mc, &trims)?;

    let mut passed = 0usize;
    let mut rows = Vec::with_capacity(args.points);
    for i in 0..args.points {
        let diff = (estimated.series.g2[i] - analytic.g2[i]).abs();
        let limit = 3.0 * estimated.std_err[i];
        let ok = diff <= limit;
        passed += ok as usize;
        rows.push(vec![
            trims[i],
            analytic.g2[i],
            estimated.series.g2[i],
            diff,
            limit,
            ok as u8 as f64,
        ]);
    }

    let mut metadata = base_metadata(&config, args.run.deterministic);
    metadata.push(("seed".to_string(), mc.seed.to_string()));
    metadata.push(("passed".to_string(), format!("{passed}/{}", args.points)));
    let mut table = ResultTable::new(
        vec![
            "trim_b_m".to_string(),
            "analytic_g2".to_string(),
            "mc_g2".to_string(),
            "abs_diff".to_string(),
            "three_std_err".to_string(),
            "pass".to_string(),
        ],
        metadata,
    )
    .expect("six columns");
    for row in rows {
        table.push_row(row).expect("trims strictly increase");
    }
    deliver(&table, &args.run.out, &experiment.output.csv)?;

    let fraction = passed as f64 / args.points as f64;
    println!("passed: {passed}/{} points within 3 standard errors", args.points);
    Ok(if fraction >= 0.95 { 0 } else { 1 })
}

fn cmd_check(args: &RunArgs) -> Result<i32, CliError> {
    let config = load_config(args)?;
    let experiment = build(&config)?;
    let corr: &CorrelationConfig = &experiment.correlation;
    let bandwidth = corr.source.bandwidth_hz;

    let mut all_franson = true;
    for (name, mzi) in [("mzi_a", &corr.mzi_a), ("mzi_b", &corr.mzi_b)] {
        let sep = separability_check(mzi, bandwidth);
        let verdict = match sep.verdict {
            Regime::FransonRegime => "franson_regime",
            Regime::SelfInterfering => "self_interfering",
        };
        all_franson &= sep.verdict == Regime::FransonRegime;
        println!("{name}: bandwidth*delta_l/c = {:.6} -> {verdict}", sep.ratio);
    }

    let lc = coherence_length(bandwidth).expect("bandwidth validated");
    let mismatch = (corr.mzi_a.delta_l() - corr.mzi_b.delta_l()).abs();
    let coincidence_ok = corr.coincidence_condition_ok();
    println!(
        "coincidence_condition: {} (coherence length {:.6e} m vs imbalance mismatch {:.6e} m)",
        if coincidence_ok { "ok" } else { "violated" },
        lc,
        mismatch,
    );
    let g2_peak = g2_averaged(corr);
    println!("g2 at configured trims: {g2_peak:.16e}");
    Ok(if all_franson && coincidence_ok { 0 } else { 1 })
}

fn cmd_recipes() -> Result<i32, CliError> {
    for (name, cfg) in crate::sweep_io::fig2_recipes() {
        let mode = match serde_json::to_value(cfg.detuning_mode) {
            Ok(Value::String(s)) => s,
            _ => unreachable!("detuning_mode serializes to a string"),
        };
        let extra = if cfg.washout.is_some() {
            ", washout map"
        } else {
            ""
        };
        println!(
            "{name}: f0 = {:.0e} Hz, bandwidth_df = {:.0e} Hz, {mode}{extra}",
            cfg.source.f0, cfg.source.bandwidth_df,
        );
    }
    Ok(0)
}

/// Convenience wrapper for tests that drive the CLI in-process.
pub fn run_with<I, T>(argv: I) -> Result<i32, String>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = Cli::try_parse_from(argv).map_err(|e| e.to_string())?;
    dispatch(cli.command).map_err(|e| e.to_string())
}
