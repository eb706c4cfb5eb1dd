//! Command-line front end for BTBE monitoring: phase-I fitting, phase-II
//! monitoring, ATS evaluation, MEWMA calibration, and synthetic data
//! generation. Every run writes a JSON manifest sufficient to reproduce it.

mod dataset;
mod manifest;

use btbe::chart::{self, alpha_from_ats0, ChartConfig, ChartSide};
use btbe::estimation::{fit_gbe, fit_mobw_em_i1, FitError, FitResult};
use btbe::lifetimes::{GbeParams, LifetimeModel, MobeParams, MobwParams};
use btbe::mewma::{calibrate_h, MewmaConfig};
use btbe::numerics::{RngStream, Tolerance};
use btbe::performance::{
    ats_closed, ats_monte_carlo, ats_theorem3, AtsError, AtsEstimate, ShiftScenario,
};
use clap::{Args, Parser, Subcommand};
use manifest::RunManifest;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

/// Errors mapped onto the exit-code contract: 2 usage, 3 data, 4 numeric.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Data(String),
    Numeric(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Data(_) => 3,
            CliError::Numeric(_) => 4,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Data(m) | CliError::Numeric(m) => m,
        }
    }
}

impl From<AtsError> for CliError {
    fn from(e: AtsError) -> Self {
        match e {
            AtsError::NoClosedForm(_) | AtsError::FamilyMismatch { .. } => {
                CliError::Usage(e.to_string())
            }
            other => CliError::Numeric(other.to_string()),
        }
    }
}

impl From<FitError> for CliError {
    fn from(e: FitError) -> Self {
        match e {
            FitError::ZeroEventTime { .. }
            | FitError::InvalidEventTime { .. }
            | FitError::NotFirstLess { .. }
            | FitError::TooFewObservations { .. } => CliError::Data(e.to_string()),
            other => CliError::Numeric(other.to_string()),
        }
    }
}

#[derive(Parser)]
#[command(
    name = "btbe",
    version,
    about = "Bivariate time-between-events control charts"
)]
struct Cli {
    /// Worker threads for Monte Carlo work (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Explicit manifest path (default: next to the output file, or
    /// btbe-<command>-manifest.json in the working directory).
    #[arg(long, global = true)]
    manifest: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ModelArgs {
    /// Model family: gbe, mobe, or mobw.
    #[arg(long)]
    model: String,

    /// Comma-separated parameters: gbe theta1,theta2,delta;
    /// mobe lambda1,lambda2,lambda12; mobw lambda1,lambda2,lambda12,eta.
    #[arg(long)]
    params: String,
}

#[derive(Subcommand)]
enum Command {
    /// Fit a lifetime model to a dataset (phase I).
    Fit {
        /// Input CSV with header x1,x2.
        #[arg(long)]
        input: PathBuf,

        /// Estimator: gbe, mobe, or mobw-i1 (EM for data with x1 < x2).
        #[arg(long)]
        family: String,

        /// Multiply every event time by this factor before fitting.
        #[arg(long, default_value_t = 1.0)]
        scale: f64,

        /// Emit the fit as JSON instead of text.
        #[arg(long)]
        json: bool,
    },

    /// Run the chart over a dataset and emit the chart table (phase II).
    Monitor {
        #[arg(long)]
        input: PathBuf,

        #[command(flatten)]
        model: ModelArgs,

        /// Per-point false alarm rate (mutually exclusive with --ats0).
        #[arg(long)]
        alpha: Option<f64>,

        /// Target in-control average time-to-signal.
        #[arg(long)]
        ats0: Option<f64>,

        /// Chart side: upper or two (default per family).
        #[arg(long)]
        side: Option<String>,

        #[arg(long, default_value_t = 1.0)]
        scale: f64,

        /// Chart table destination (stdout if omitted).
        #[arg(long)]
        out: Option<PathBuf>,
    },

    /// Average time-to-signal for a shift scenario (or a batch of them).
    Ats {
        /// Model family for a single scenario.
        #[arg(long)]
        model: Option<String>,

        /// In-control parameters (comma-separated).
        #[arg(long)]
        ic: Option<String>,

        /// Out-of-control parameters (comma-separated).
        #[arg(long)]
        oc: Option<String>,

        #[arg(long)]
        side: Option<String>,

        #[arg(long)]
        ats0: Option<f64>,

        #[arg(long)]
        alpha: Option<f64>,

        /// Batch file: one scenario per line,
        /// `family ic_params oc_params side ats0`.
        #[arg(long)]
        batch: Option<PathBuf>,

        /// Evaluation method: closed, numeric, or mc.
        #[arg(long, default_value = "closed")]
        method: String,

        /// Monte Carlo replications (mc only).
        #[arg(long)]
        reps: Option<u64>,

        /// Master seed (required for mc).
        #[arg(long)]
        seed: Option<u64>,

        #[arg(long)]
        out: Option<PathBuf>,
    },

    /// Calibrate the MEWMA threshold h against a target in-control ATS.
    CalibrateMewma {
        /// GBE in-control parameters theta1,theta2,delta.
        #[arg(long)]
        params: String,

        /// EWMA smoothing parameter in (0, 1].
        #[arg(long)]
        r: f64,

        #[arg(long)]
        ats0: f64,

        #[arg(long)]
        reps: u64,

        #[arg(long)]
        seed: u64,
    },

    /// Draw event vectors from a model and write them as CSV.
    Simulate {
        #[command(flatten)]
        model: ModelArgs,

        /// Number of vectors.
        #[arg(short = 'n', long)]
        count: u64,

        #[arg(long)]
        seed: u64,

        #[arg(long)]
        out: PathBuf,
    },
}

fn parse_params(text: &str) -> Result<Vec<f64>, CliError> {
    text.split(',')
        .map(|p| {
            p.trim()
                .parse::<f64>()
                .map_err(|e| CliError::Usage(format!("bad parameter {p:?}: {e}")))
        })
        .collect()
}

fn build_model(family: &str, params: &[f64]) -> Result<LifetimeModel, CliError> {
    let wrong_arity = |n: usize| {
        CliError::Usage(format!(
            "{family} takes {n} parameters, got {}",
            params.len()
        ))
    };
    match family.to_ascii_lowercase().as_str() {
        "gbe" => {
            let [t1, t2, d] = *params else {
                return Err(wrong_arity(3));
            };
            Ok(LifetimeModel::Gbe(
                GbeParams::new(t1, t2, d).map_err(|e| CliError::Usage(e.to_string()))?,
            ))
        }
        "mobe" => {
            let [l1, l2, l12] = *params else {
                return Err(wrong_arity(3));
            };
            Ok(LifetimeModel::Mobe(
                MobeParams::new(l1, l2, l12).map_err(|e| CliError::Usage(e.to_string()))?,
            ))
        }
        "mobw" => {
            let [l1, l2, l12, eta] = *params else {
                return Err(wrong_arity(4));
            };
            Ok(LifetimeModel::Mobw(
                MobwParams::new(l1, l2, l12, eta).map_err(|e| CliError::Usage(e.to_string()))?,
            ))
        }
        other => Err(CliError::Usage(format!(
            "unknown model family {other:?} (expected gbe, mobe, or mobw)"
        ))),
    }
}

fn parse_side(side: Option<&str>) -> Result<Option<ChartSide>, CliError> {
    match side.map(|s| s.to_ascii_lowercase()) {
        None => Ok(None),
        Some(s) if s == "upper" => Ok(Some(ChartSide::UpperOneSided)),
        Some(s) if s == "two" || s == "two-sided" => Ok(Some(ChartSide::TwoSided)),
        Some(other) => Err(CliError::Usage(format!(
            "unknown side {other:?} (expected upper or two)"
        ))),
    }
}

fn resolve_config(
    model: LifetimeModel,
    side: Option<ChartSide>,
    alpha: Option<f64>,
    ats0: Option<f64>,
) -> Result<ChartConfig, CliError> {
    match (alpha, ats0) {
        (Some(_), Some(_)) => Err(CliError::Usage(
            "--alpha and --ats0 are mutually exclusive".into(),
        )),
        (None, None) => Err(CliError::Usage(
            "one of --alpha or --ats0 is required".into(),
        )),
        (Some(a), None) => {
            ChartConfig::from_alpha(model, side, a).map_err(|e| CliError::Usage(e.to_string()))
        }
        (None, Some(t)) => {
            ChartConfig::from_ats0(model, side, t).map_err(|e| CliError::Usage(e.to_string()))
        }
    }
}

fn model_params(model: &LifetimeModel) -> Vec<f64> {
    match model {
        LifetimeModel::Gbe(p) => vec![p.theta1(), p.theta2(), p.delta()],
        LifetimeModel::Mobe(p) => vec![p.lambda1(), p.lambda2(), p.lambda12()],
        LifetimeModel::Mobw(p) => vec![p.lambda1(), p.lambda2(), p.lambda12(), p.eta()],
    }
}

fn write_or_print(out: Option<&Path>, text: &str) -> Result<(), CliError> {
    match out {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| CliError::Data(format!("cannot write {}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(threads) = cli.threads {
        // A failure here only means a pool already exists (tests).
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global();
    }
    match run(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.code())
        }
    }
}

fn run(cli: &Cli) -> Result<ExitCode, CliError> {
    match &cli.command {
        Command::Fit {
            input,
            family,
            scale,
            json,
        } => cmd_fit(cli, input, family, *scale, *json),
        Command::Monitor {
            input,
            model,
            alpha,
            ats0,
            side,
            scale,
            out,
        } => cmd_monitor(cli, input, model, *alpha, *ats0, side.as_deref(), *scale, out.as_deref()),
        Command::Ats {
            model,
            ic,
            oc,
            side,
            ats0,
            alpha,
            batch,
            method,
            reps,
            seed,
            out,
        } => cmd_ats(
            cli,
            model.as_deref(),
            ic.as_deref(),
            oc.as_deref(),
            side.as_deref(),
            *ats0,
            *alpha,
            batch.as_deref(),
            method,
            *reps,
            *seed,
            out.as_deref(),
        ),
        Command::CalibrateMewma {
            params,
            r,
            ats0,
            reps,
            seed,
        } => cmd_calibrate(cli, params, *r, *ats0, *reps, *seed),
        Command::Simulate {
            model,
            count,
            seed,
            out,
        } => cmd_simulate(cli, model, *count, *seed, out),
    }
}

fn cmd_fit(
    cli: &Cli,
    input: &Path,
    family: &str,
    scale: f64,
    json: bool,
) -> Result<ExitCode, CliError> {
    let data = dataset::read_csv(input, scale)?;
    if !data.excluded_rows.is_empty() {
        eprintln!(
            "excluded {} zero-time row(s): lines {:?}",
            data.excluded_rows.len(),
            data.excluded_rows
        );
    }
    let fit: FitResult = match family.to_ascii_lowercase().as_str() {
        "gbe" => fit_gbe(&data.vectors)?,
        "mobe" => btbe::estimation::fit_mobe(&data.vectors)?,
        "mobw-i1" => fit_mobw_em_i1(&data.vectors, &Tolerance::strict())?,
        other => {
            return Err(CliError::Usage(format!(
                "unknown estimator {other:?} (expected gbe, mobe, or mobw-i1)"
            )))
        }
    };
    let params = model_params(&fit.model);
    if json {
        let body = serde_json::json!({
            "family": fit.model.family_name(),
            "params": params,
            "n_used": fit.n_used,
            "excluded_rows": data.excluded_rows,
            "iterations": fit.iterations,
            "converged": fit.converged,
            "loglik": fit.loglik,
        });
        println!("{body}");
    } else {
        println!("family: {}", fit.model.family_name());
        println!("params: {params:?}");
        println!(
            "n_used: {} (excluded {} zero-time rows)",
            fit.n_used,
            data.excluded_rows.len()
        );
        println!(
            "converged: {} after {} iterations, loglik {:.6}",
            fit.converged, fit.iterations, fit.loglik
        );
    }

    let mut m = RunManifest::new("fit");
    m.family = Some(family.to_string());
    m.params = Some(params);
    m.scale = Some(scale);
    m.input = Some(input.to_path_buf());
    m.threads = cli.threads;
    m.write(cli.manifest.as_deref(), None)?;
    Ok(ExitCode::SUCCESS)
}

#[allow(clippy::too_many_arguments)]
fn cmd_monitor(
    cli: &Cli,
    input: &Path,
    model_args: &ModelArgs,
    alpha: Option<f64>,
    ats0: Option<f64>,
    side: Option<&str>,
    scale: f64,
    out: Option<&Path>,
) -> Result<ExitCode, CliError> {
    let model = build_model(&model_args.model, &parse_params(&model_args.params)?)?;
    let config = resolve_config(model, parse_side(side)?, alpha, ats0)?;
    let data = dataset::read_csv(input, scale)?;
    if !data.excluded_rows.is_empty() {
        eprintln!(
            "excluded {} zero-time row(s): lines {:?}",
            data.excluded_rows.len(),
            data.excluded_rows
        );
    }
    let points = chart::monitor(&config, data.vectors)
        .map_err(|e| CliError::Numeric(e.to_string()))?;
    write_or_print(out, &chart::export_csv(&points))?;

    let flim = chart::first_event_limits(&config);
    eprintln!(
        "alpha = {:.6}, first-event limits: lcl = {}, ucl = {}",
        config.alpha(),
        flim.lcl.map(|v| v.to_string()).unwrap_or_else(|| "-".into()),
        flim.ucl
    );
    let signal = chart::first_signal(&points);
    match signal {
        Some((index, point)) => eprintln!(
            "first signal at event {index} (rank {})",
            point.event.rank.index()
        ),
        None => eprintln!("no signal in {} events", points.len()),
    }

    let mut m = RunManifest::new("monitor");
    m.family = Some(config.model().family_name().to_string());
    m.params = Some(model_params(config.model()));
    m.side = Some(config.side().label().to_string());
    m.alpha = Some(config.alpha());
    m.ats0 = ats0;
    m.scale = Some(scale);
    m.input = Some(input.to_path_buf());
    m.output = out.map(Path::to_path_buf);
    m.threads = cli.threads;
    m.write(cli.manifest.as_deref(), out)?;

    Ok(if signal.is_some() {
        ExitCode::from(1)
    } else {
        ExitCode::SUCCESS
    })
}

struct ScenarioRow {
    family: String,
    ic: Vec<f64>,
    oc: Vec<f64>,
    side: Option<ChartSide>,
    ats0: f64,
}

const ATS_HEADER: &str = "family,side,ats0,alpha,ic,oc,method,ats,stderr,reps,censored";

fn evaluate_scenario(
    row: &ScenarioRow,
    method: &str,
    reps: Option<u64>,
    seed: Option<u64>,
) -> Result<String, CliError> {
    let ic = build_model(&row.family, &row.ic)?;
    let oc = build_model(&row.family, &row.oc)?;
    let side = row.side.unwrap_or_else(|| ChartSide::default_for(&ic));
    let alpha = alpha_from_ats0(&ic, row.ats0).map_err(|e| CliError::Usage(e.to_string()))?;
    let scenario = ShiftScenario::new(ic, oc, side)?;
    let estimate: AtsEstimate = match method {
        "closed" => ats_closed(&scenario, alpha)?,
        "numeric" => ats_theorem3(&scenario, alpha)?,
        "mc" => {
            let reps = reps.ok_or_else(|| CliError::Usage("--reps is required for mc".into()))?;
            let seed = seed.ok_or_else(|| CliError::Usage("--seed is required for mc".into()))?;
            ats_monte_carlo(&scenario, alpha, reps, &RngStream::new(seed, 0))?
        }
        other => {
            return Err(CliError::Usage(format!(
                "unknown method {other:?} (expected closed, numeric, or mc)"
            )))
        }
    };
    let join = |v: &[f64]| {
        v.iter()
            .map(|x| x.to_string())
            .collect::<Vec<_>>()
            .join(";")
    };
    Ok(format!(
        "{},{},{},{},{},{},{},{},{},{},{}\n",
        row.family,
        side.label(),
        row.ats0,
        alpha,
        join(&row.ic),
        join(&row.oc),
        estimate.method.label(),
        estimate.value,
        estimate.stderr.map(|s| s.to_string()).unwrap_or_default(),
        estimate.reps.map(|r| r.to_string()).unwrap_or_default(),
        estimate
            .censored_runs
            .map(|c| c.to_string())
            .unwrap_or_default(),
    ))
}

fn parse_batch(path: &Path) -> Result<Vec<ScenarioRow>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Data(format!("cannot read {}: {e}", path.display())))?;
    let mut rows = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 5 {
            return Err(CliError::Data(format!(
                "{} line {}: expected `family ic oc side ats0`, got {line:?}",
                path.display(),
                i + 1
            )));
        }
        rows.push(ScenarioRow {
            family: fields[0].to_string(),
            ic: parse_params(fields[1])?,
            oc: parse_params(fields[2])?,
            side: parse_side(Some(fields[3]))?,
            ats0: fields[4]
                .parse()
                .map_err(|e| CliError::Data(format!("{} line {}: {e}", path.display(), i + 1)))?,
        });
    }
    Ok(rows)
}

#[allow(clippy::too_many_arguments)]
fn cmd_ats(
    cli: &Cli,
    model: Option<&str>,
    ic: Option<&str>,
    oc: Option<&str>,
    side: Option<&str>,
    ats0: Option<f64>,
    alpha: Option<f64>,
    batch: Option<&Path>,
    method: &str,
    reps: Option<u64>,
    seed: Option<u64>,
    out: Option<&Path>,
) -> Result<ExitCode, CliError> {
    if alpha.is_some() && ats0.is_some() {
        return Err(CliError::Usage(
            "--alpha and --ats0 are mutually exclusive".into(),
        ));
    }
    let rows: Vec<ScenarioRow> = if let Some(batch_path) = batch {
        if model.is_some() || ic.is_some() || oc.is_some() {
            return Err(CliError::Usage(
                "--batch cannot be combined with a single scenario".into(),
            ));
        }
        parse_batch(batch_path)?
    } else {
        let family = model
            .ok_or_else(|| CliError::Usage("--model is required without --batch".into()))?;
        let ic = parse_params(
            ic.ok_or_else(|| CliError::Usage("--ic is required without --batch".into()))?,
        )?;
        let oc = parse_params(
            oc.ok_or_else(|| CliError::Usage("--oc is required without --batch".into()))?,
        )?;
        // An explicit alpha is translated to the equivalent target so a
        // single code path resolves the chart.
        let ats0 = match (ats0, alpha) {
            (Some(t), None) => t,
            (None, Some(a)) => {
                let m = build_model(family, &ic)?;
                m.expected_tbe() / a
            }
            _ => return Err(CliError::Usage("one of --ats0 or --alpha is required".into())),
        };
        vec![ScenarioRow {
            family: family.to_string(),
            ic,
            oc,
            side: parse_side(side)?,
            ats0,
        }]
    };

    let mut table = String::from(ATS_HEADER);
    table.push('\n');
    for row in &rows {
        table.push_str(&evaluate_scenario(row, method, reps, seed)?);
    }
    write_or_print(out, &table)?;

    let mut m = RunManifest::new("ats");
    m.method = Some(method.to_string());
    m.seed = seed;
    m.reps = reps;
    m.ats0 = ats0;
    m.alpha = alpha;
    m.batch = batch.map(Path::to_path_buf);
    m.output = out.map(Path::to_path_buf);
    m.threads = cli.threads;
    if rows.len() == 1 {
        m.family = Some(rows[0].family.clone());
        m.params = Some(rows[0].ic.clone());
        m.oc_params = Some(rows[0].oc.clone());
        m.side = rows[0].side.map(|s| s.label().to_string());
    }
    m.write(cli.manifest.as_deref(), out)?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_calibrate(
    cli: &Cli,
    params: &str,
    r: f64,
    ats0: f64,
    reps: u64,
    seed: u64,
) -> Result<ExitCode, CliError> {
    if !(ats0 > 0.0) {
        return Err(CliError::Usage(format!(
            "--ats0 must be positive, got {ats0}"
        )));
    }
    let values = parse_params(params)?;
    let LifetimeModel::Gbe(gbe) = build_model("gbe", &values)? else {
        unreachable!()
    };
    MewmaConfig::new(r, 1.0).map_err(|e| CliError::Usage(e.to_string()))?;
    let rng = RngStream::new(seed, 0);
    let h = calibrate_h(&gbe, r, ats0, reps, &rng)
        .map_err(|e| CliError::Numeric(e.to_string()))?;
    println!("h={h}");

    let mut m = RunManifest::new("calibrate-mewma");
    m.family = Some("gbe".into());
    m.params = Some(values);
    m.smoothing = Some(r);
    m.ats0 = Some(ats0);
    m.reps = Some(reps);
    m.seed = Some(seed);
    m.threads = cli.threads;
    m.write(cli.manifest.as_deref(), None)?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_simulate(
    cli: &Cli,
    model_args: &ModelArgs,
    count: u64,
    seed: u64,
    out: &Path,
) -> Result<ExitCode, CliError> {
    let model = build_model(&model_args.model, &parse_params(&model_args.params)?)?;
    let mut rng = RngStream::new(seed, 0);
    let vectors = model.sample(&mut rng, count as usize);
    dataset::write_csv(out, &vectors)?;
    eprintln!("wrote {} vectors to {}", vectors.len(), out.display());

    let mut m = RunManifest::new("simulate");
    m.family = Some(model.family_name().to_string());
    m.params = Some(model_params(&model));
    m.count = Some(count);
    m.seed = Some(seed);
    m.output = Some(out.to_path_buf());
    m.threads = cli.threads;
    m.write(cli.manifest.as_deref(), Some(out))?;
    Ok(ExitCode::SUCCESS)
}
