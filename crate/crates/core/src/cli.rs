//! Command-line front end.
//!
//! Every subcommand is driven by a [`RunConfig`], which can also be read
//! from a JSON file (`sweep --config run.json`) using the flag names as keys.
//! Exit codes: 0 success, 2 invalid input, 3 solver or fit failure.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::analysis::{
    exact_over_approx_series, fit_grid, fit_leading_order, logical_series, model_threshold, physical_series,
    LeadingOrderFit, MetricSeries, THRESHOLD_DOMAIN,
};
use crate::approximator::{approximate, ApproximationResult, Variant};
use crate::channels::{ChannelModel, ChannelTag, ChiMatrix};
use crate::error::Error;
use crate::metrics::{metric_report_chi, Metric, MetricReport, DEFAULT_STATES};
use crate::qec::{build_code, logical_chi, CodeSpec};

/// Version of the JSON output layout.
pub const SCHEMA_VERSION: u32 = 1;
/// Environment variable holding the worker thread count.
pub const THREADS_ENV: &str = "QEC_CHI_THREADS";

#[derive(Parser, Debug)]
#[command(name = "qec-chi", version, about = "Process-matrix analysis of single-qubit noise under error correction")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Print the process matrix of a channel at each strength.
    Chi(RunConfig),
    /// Average error rate, average trace distance and diamond distance.
    Metrics(RunConfig),
    /// Fit a stabilizer-simulable approximation to the channel.
    Approx(RunConfig),
    /// Pseudo-threshold of a channel on a code with perfect EC.
    Threshold(RunConfig),
    /// Metric series over a strength grid with leading-order fits.
    Sweep(RunConfig),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CommandKind {
    Chi,
    Metrics,
    Approx,
    Threshold,
    Sweep,
}

/// Code given either by name or inline.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CodeArg {
    Name(String),
    Spec(Box<CodeSpec>),
}

/// Run description shared by the flags and the JSON config file.
#[derive(Args, Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Command to run; only read from config files.
    #[arg(skip)]
    #[serde(default)]
    pub command: Option<CommandKind>,
    /// Channel family: adc, pol, rz, rh, rx, dc, flip, identity,
    /// pauli:PX,PY,PZ or cmc:W1,...,W30.
    #[arg(long)]
    #[serde(default)]
    pub channel: Option<String>,
    /// Comma-separated strengths (γ, p or θ in radians).
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    #[serde(default)]
    pub strengths: Vec<f64>,
    /// Code name (bitflip3, steane7) or path to a JSON code description.
    #[arg(long, value_parser = parse_code_arg)]
    #[serde(default)]
    pub code: Option<CodeArg>,
    /// physical or logical.
    #[arg(long)]
    #[serde(default)]
    pub level: Option<String>,
    /// Comma-separated metrics: error_rate, trace_distance, diamond.
    #[arg(long = "metric", value_delimiter = ',')]
    #[serde(default, rename = "metric")]
    pub metrics: Vec<String>,
    /// Approximation: pca, pcw, cmca, cmcw or dc.
    #[arg(long)]
    #[serde(default)]
    pub approx: Option<String>,
    /// Output file; standard output when absent.
    #[arg(long)]
    #[serde(default)]
    pub out: Option<PathBuf>,
    /// text, csv or json.
    #[arg(long)]
    #[serde(default)]
    pub format: Option<String>,
    /// Bloch-sphere states for sampled averages.
    #[arg(long)]
    #[serde(default)]
    pub states: Option<usize>,
    /// Threshold search interval as LO,HI.
    #[arg(long, value_delimiter = ',')]
    #[serde(default)]
    pub domain: Vec<f64>,
    /// Digits printed in text output.
    #[arg(long)]
    #[serde(default)]
    pub precision: Option<usize>,
    /// JSON run description; its keys mirror these flags.
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
}

fn parse_code_arg(s: &str) -> std::result::Result<CodeArg, String> {
    Ok(CodeArg::Name(s.to_string()))
}

#[derive(Debug)]
enum CliError {
    Core(Error),
    Input(String),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Input(s) => f.write_str(s),
        }
    }
}

impl CliError {
    fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(
                Error::SolverFailure { .. } | Error::Infeasible { .. } | Error::FitRejected { .. } | Error::Leakage(_),
            ) => 3,
            _ => 2,
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Format {
    Text,
    Csv,
    Json,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum LevelArg {
    Physical,
    Logical,
}

/// Validated form of a [`RunConfig`].
struct Plan {
    command: CommandKind,
    channel_name: String,
    channel: ChannelModel,
    strengths: Vec<f64>,
    code: Option<CodeSpec>,
    level: LevelArg,
    metrics: Vec<Metric>,
    approx: Option<Variant>,
    format: Format,
    states: usize,
    domain: (f64, f64),
    precision: usize,
}

fn parse_list(s: &str) -> CliResult<Vec<f64>> {
    s.split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|_| CliError::Input(format!("bad number `{t}`"))))
        .collect()
}

/// Channel family from its command-line spelling.
pub fn parse_channel(spec: &str) -> Result<ChannelModel, Error> {
    let (head, tail) = match spec.split_once(':') {
        Some((h, t)) => (h, Some(t)),
        None => (spec, None),
    };
    let tag: ChannelTag = head.trim().parse()?;
    let model = match (tag, tail) {
        (ChannelTag::Pauli, Some(t)) => {
            let p = parse_list(t).map_err(|e| Error::Parse(e.to_string()))?;
            if p.len() != 3 {
                return Err(Error::Parse("pauli:PX,PY,PZ needs three probabilities".into()));
            }
            ChannelModel::pauli([p[0], p[1], p[2]])
        }
        (ChannelTag::CmcMixture, Some(t)) => ChannelModel::cmc_mixture(parse_list(t).map_err(|e| Error::Parse(e.to_string()))?),
        (ChannelTag::Pauli | ChannelTag::CmcMixture, None) => {
            return Err(Error::Parse(format!("`{head}` needs its parameters after a colon")))
        }
        (_, Some(_)) => return Err(Error::Parse(format!("`{head}` takes no parameters"))),
        (tag, None) => ChannelModel::new(tag, 0.0),
    };
    if !model.tag.has_strength() {
        model.validate()?;
    }
    Ok(model)
}

fn load_code(arg: &CodeArg) -> CliResult<CodeSpec> {
    match arg {
        CodeArg::Spec(spec) => Ok((**spec).clone()),
        CodeArg::Name(name) if name.ends_with(".json") => {
            let text = std::fs::read_to_string(name).map_err(|e| CliError::Input(format!("cannot read {name}: {e}")))?;
            serde_json::from_str(&text).map_err(|e| CliError::Input(format!("invalid code file {name}: {e}")))
        }
        CodeArg::Name(name) => Ok(build_code(name)?),
    }
}

impl Plan {
    fn new(cfg: &RunConfig) -> CliResult<Self> {
        let command = cfg.command.ok_or_else(|| CliError::Input("no command given".into()))?;
        let channel_name = cfg
            .channel
            .clone()
            .ok_or_else(|| CliError::Input("--channel is required".into()))?;
        let channel = parse_channel(&channel_name)?;
        let code = cfg.code.as_ref().map(load_code).transpose()?;
        let level = match cfg.level.as_deref().map(str::to_ascii_lowercase).as_deref() {
            None | Some("physical") => LevelArg::Physical,
            Some("logical") => LevelArg::Logical,
            Some(other) => return Err(CliError::Input(format!("unknown level `{other}`"))),
        };
        if level == LevelArg::Logical && code.is_none() {
            return Err(CliError::Input("--level logical needs --code".into()));
        }
        if command == CommandKind::Threshold && code.is_none() {
            return Err(CliError::Input("threshold needs --code".into()));
        }
        let metrics = if cfg.metrics.is_empty() {
            Metric::ALL.to_vec()
        } else {
            cfg.metrics.iter().map(|m| m.parse()).collect::<Result<Vec<Metric>, _>>()?
        };
        let approx = cfg.approx.as_deref().map(str::parse::<Variant>).transpose()?;
        if command == CommandKind::Approx && approx.is_none() {
            return Err(CliError::Input("approx needs --approx".into()));
        }
        let format = match cfg.format.as_deref().map(str::to_ascii_lowercase).as_deref() {
            None | Some("text") => Format::Text,
            Some("csv") => Format::Csv,
            Some("json") => Format::Json,
            Some(other) => return Err(CliError::Input(format!("unknown format `{other}`"))),
        };
        let strengths = if !channel.tag.has_strength() {
            if !cfg.strengths.is_empty() {
                return Err(CliError::Input(format!("{} channels take no strengths", channel.tag.name())));
            }
            vec![0.0]
        } else if cfg.strengths.is_empty() {
            fit_grid()
        } else {
            cfg.strengths.clone()
        };
        if channel.tag.has_strength() {
            for &s in &strengths {
                channel.at(s)?.validate()?;
            }
        }
        if command == CommandKind::Sweep && strengths.windows(2).any(|w| w[1] <= w[0]) {
            return Err(CliError::Input("sweep strengths must be strictly increasing".into()));
        }
        if (approx.is_some() || matches!(command, CommandKind::Sweep | CommandKind::Threshold)) && !channel.tag.has_strength() {
            return Err(CliError::Input("this command needs a channel family with a strength".into()));
        }
        let domain = match cfg.domain.as_slice() {
            [] => THRESHOLD_DOMAIN,
            [lo, hi] if *lo > 0.0 && hi > lo => (*lo, *hi),
            _ => return Err(CliError::Input("--domain needs LO,HI with 0 < LO < HI".into())),
        };
        let states = cfg.states.unwrap_or(DEFAULT_STATES);
        if states == 0 {
            return Err(CliError::Input("--states must be positive".into()));
        }
        Ok(Self {
            command,
            channel_name,
            channel,
            strengths,
            code,
            level,
            metrics,
            approx,
            format,
            states,
            domain,
            precision: cfg.precision.unwrap_or(6),
        })
    }

    fn header(&self) -> Value {
        json!({
            "schema": SCHEMA_VERSION,
            "command": self.command,
            "channel": self.channel_name,
            "code": self.code.as_ref().map(|c| c.name().to_string()),
            "level": match self.level { LevelArg::Physical => "physical", LevelArg::Logical => "logical" },
            "approx": self.approx,
        })
    }

    fn model_at(&self, s: f64) -> Result<ChannelModel, Error> {
        if self.channel.tag.has_strength() {
            self.channel.at(s)
        } else {
            Ok(self.channel.clone())
        }
    }

    /// χ at strength s, after the optional approximation and the optional
    /// trip through the code.
    fn chi_at(&self, s: f64) -> Result<(ChiMatrix, Option<ApproximationResult>), Error> {
        let mut chi = self.model_at(s)?.chi()?;
        let mut fit = None;
        if let Some(v) = self.approx {
            let r = approximate(&chi, v)?;
            chi = r.chi.clone();
            fit = Some(r);
        }
        if self.level == LevelArg::Logical {
            if let Some(code) = &self.code {
                chi = logical_chi(code, &chi)?;
            }
        }
        Ok((chi, fit))
    }
}

fn chi_json(chi: &ChiMatrix) -> Value {
    serde_json::to_value(chi).unwrap_or(Value::Null)
}

fn fmt_num(x: f64) -> String {
    format!("{x:e}")
}

fn run_chi(plan: &Plan) -> CliResult<String> {
    let chis = plan
        .strengths
        .par_iter()
        .map(|&s| plan.chi_at(s).map(|(c, _)| c))
        .collect::<Result<Vec<_>, _>>()?;
    let mut out = String::new();
    match plan.format {
        Format::Text => {
            for (s, chi) in plan.strengths.iter().zip(&chis) {
                let _ = writeln!(out, "# {} strength={}", plan.channel_name, fmt_num(*s));
                let _ = writeln!(out, "{chi:.prec$}", prec = plan.precision);
            }
        }
        Format::Csv => {
            out.push_str("strength,row,col,re,im\n");
            for (s, chi) in plan.strengths.iter().zip(&chis) {
                for i in 0..4 {
                    for j in 0..4 {
                        let z = chi.get(i, j);
                        let _ = writeln!(out, "{},{i},{j},{},{}", fmt_num(*s), fmt_num(z.re), fmt_num(z.im));
                    }
                }
            }
        }
        Format::Json => {
            let mut v = plan.header();
            v["results"] = plan
                .strengths
                .iter()
                .zip(&chis)
                .map(|(s, chi)| json!({"strength": s, "chi": chi_json(chi)}))
                .collect();
            out = to_json(&v)?;
        }
    }
    Ok(out)
}

fn run_metrics(plan: &Plan) -> CliResult<String> {
    let reports = plan
        .strengths
        .par_iter()
        .map(|&s| metric_report_chi(&plan.chi_at(s)?.0, plan.states))
        .collect::<Result<Vec<MetricReport>, _>>()?;
    let mut out = String::new();
    match plan.format {
        Format::Text | Format::Csv => {
            let sep = if plan.format == Format::Csv { "," } else { "  " };
            let cols = ["strength", "avg_error_rate", "error_rate_std", "avg_trace_distance", "trace_distance_std", "diamond"];
            out.push_str(&cols.join(sep));
            out.push('\n');
            for (s, r) in plan.strengths.iter().zip(&reports) {
                let row = [
                    *s,
                    r.avg_error_rate.mean,
                    r.avg_error_rate.std,
                    r.avg_trace_distance.mean,
                    r.avg_trace_distance.std,
                    r.diamond,
                ];
                out.push_str(&row.iter().map(|x| fmt_num(*x)).collect::<Vec<_>>().join(sep));
                out.push('\n');
            }
        }
        Format::Json => {
            let mut v = plan.header();
            v["states"] = json!(plan.states);
            v["results"] = plan
                .strengths
                .iter()
                .zip(&reports)
                .map(|(s, r)| json!({"strength": s, "metrics": r}))
                .collect();
            out = to_json(&v)?;
        }
    }
    Ok(out)
}

fn run_approx(plan: &Plan) -> CliResult<String> {
    let fits = plan
        .strengths
        .par_iter()
        .map(|&s| plan.chi_at(s).map(|(_, f)| f.expect("approx is set")))
        .collect::<Result<Vec<_>, _>>()?;
    let mut out = String::new();
    match plan.format {
        Format::Text => {
            for (s, f) in plan.strengths.iter().zip(&fits) {
                let _ = writeln!(
                    out,
                    "# {} {} strength={} hs_distance={} honest={} honesty_margin={}",
                    plan.channel_name,
                    f.variant,
                    fmt_num(*s),
                    fmt_num(f.hs_distance),
                    f.honest,
                    fmt_num(f.honesty_margin)
                );
                for (id, w) in f.member_ids.iter().zip(&f.weights) {
                    if *w > 0.0 {
                        let _ = writeln!(out, "{id}  {}", fmt_num(*w));
                    }
                }
            }
        }
        Format::Csv => {
            out.push_str("strength,variant,member_id,weight,hs_distance,honest,honesty_margin\n");
            for (s, f) in plan.strengths.iter().zip(&fits) {
                for (id, w) in f.member_ids.iter().zip(&f.weights) {
                    let _ = writeln!(
                        out,
                        "{},{},{id},{},{},{},{}",
                        fmt_num(*s),
                        f.variant,
                        fmt_num(*w),
                        fmt_num(f.hs_distance),
                        f.honest,
                        fmt_num(f.honesty_margin)
                    );
                }
            }
        }
        Format::Json => {
            let mut v = plan.header();
            v["results"] = plan
                .strengths
                .iter()
                .zip(&fits)
                .map(|(s, f)| json!({"strength": s, "approximation": f, "chi": chi_json(&f.chi)}))
                .collect();
            out = to_json(&v)?;
        }
    }
    Ok(out)
}

fn run_threshold(plan: &Plan) -> CliResult<String> {
    let code = plan.code.as_ref().expect("validated");
    let results = plan
        .metrics
        .iter()
        .map(|&m| model_threshold(&plan.channel, plan.approx, code, m, plan.domain))
        .collect::<Result<Vec<_>, _>>()?;
    let mut out = String::new();
    match plan.format {
        Format::Text | Format::Csv => {
            let sep = if plan.format == Format::Csv { "," } else { "  " };
            let cols = ["threshold_strength", "metric", "mode", "bracket_lo", "bracket_hi", "degenerate", "multiple_crossings"];
            out.push_str(&cols.join(sep));
            out.push('\n');
            for r in &results {
                let (lo, hi) = r.bracket.map(|(a, b)| (fmt_num(a), fmt_num(b))).unwrap_or_default();
                let row = [
                    fmt_num(r.threshold_strength),
                    r.metric.to_string(),
                    r.mode.to_string(),
                    lo,
                    hi,
                    r.degenerate.to_string(),
                    r.multiple_crossings.to_string(),
                ];
                out.push_str(&row.join(sep));
                out.push('\n');
            }
        }
        Format::Json => {
            let mut v = plan.header();
            v["domain"] = json!([plan.domain.0, plan.domain.1]);
            v["results"] = serde_json::to_value(&results).map_err(|e| CliError::Input(e.to_string()))?;
            out = to_json(&v)?;
        }
    }
    Ok(out)
}

fn run_sweep(plan: &Plan) -> CliResult<String> {
    let mut series: Vec<MetricSeries> = Vec::new();
    for &m in &plan.metrics {
        match (&plan.code, plan.approx) {
            (Some(code), Some(v)) => {
                let (p, l) = exact_over_approx_series(&plan.channel, v, code, m, &plan.strengths)?;
                series.push(p);
                series.push(l);
            }
            (Some(code), None) => {
                series.push(physical_series(&plan.channel, m, &plan.strengths)?);
                series.push(logical_series(&plan.channel, code, m, &plan.strengths)?);
            }
            (None, _) => {
                let values = plan
                    .strengths
                    .par_iter()
                    .map(|&s| crate::metrics::metric_value(&plan.chi_at(s)?.0, m, plan.states))
                    .collect::<Result<Vec<_>, _>>()?;
                series.push(MetricSeries::new(plan.strengths.clone(), values, m, crate::analysis::Level::Physical)?);
            }
        }
    }
    let fits: Vec<std::result::Result<LeadingOrderFit, String>> = series
        .iter()
        .map(|s| fit_leading_order(s, &crate::analysis::DEFAULT_DEGREES).map_err(|e| e.to_string()))
        .collect();
    let mut out = String::new();
    match plan.format {
        Format::Text | Format::Csv => {
            let sep = if plan.format == Format::Csv { "," } else { "  " };
            out.push_str(&["strength", "level", "metric", "value"].join(sep));
            out.push('\n');
            for s in &series {
                for (x, y) in s.strengths.iter().zip(&s.values) {
                    out.push_str(&[fmt_num(*x), s.level.to_string(), s.metric.to_string(), fmt_num(*y)].join(sep));
                    out.push('\n');
                }
            }
            if plan.format == Format::Text {
                for (s, f) in series.iter().zip(&fits) {
                    let _ = match f {
                        Ok(f) => writeln!(
                            out,
                            "# fit {} {}: {} x^{} (relative variance {})",
                            s.level,
                            s.metric,
                            fmt_num(f.coefficient),
                            f.degree,
                            fmt_num(f.relative_variance)
                        ),
                        Err(e) => writeln!(out, "# fit {} {}: {e}", s.level, s.metric),
                    };
                }
            }
        }
        Format::Json => {
            let mut v = plan.header();
            v["series"] = serde_json::to_value(&series).map_err(|e| CliError::Input(e.to_string()))?;
            v["fits"] = series
                .iter()
                .zip(&fits)
                .map(|(s, f)| match f {
                    Ok(f) => json!({"level": s.level, "metric": s.metric, "fit": f}),
                    Err(e) => json!({"level": s.level, "metric": s.metric, "error": e}),
                })
                .collect();
            out = to_json(&v)?;
        }
    }
    Ok(out)
}

fn to_json(v: &Value) -> CliResult<String> {
    let mut s = serde_json::to_string_pretty(v).map_err(|e| CliError::Input(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

fn load_config(path: &PathBuf) -> CliResult<RunConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Input(format!("invalid config {}: {e}", path.display())))
}

/// Executes a validated run and returns the rendered output.
pub fn execute(cfg: &RunConfig) -> Result<String, (i32, String)> {
    let plan = Plan::new(cfg).map_err(|e| (e.exit_code(), e.to_string()))?;
    let out = match plan.command {
        CommandKind::Chi => run_chi(&plan),
        CommandKind::Metrics => run_metrics(&plan),
        CommandKind::Approx => run_approx(&plan),
        CommandKind::Threshold => run_threshold(&plan),
        CommandKind::Sweep => run_sweep(&plan),
    };
    out.map_err(|e| (e.exit_code(), e.to_string()))
}

fn configure_threads() -> CliResult<()> {
    if let Ok(v) = std::env::var(THREADS_ENV) {
        let n: usize = v
            .trim()
            .parse()
            .map_err(|_| CliError::Input(format!("{THREADS_ENV} must be a positive integer, got `{v}`")))?;
        // A pool may already exist when called repeatedly in one process.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    Ok(())
}

/// Parses arguments, runs the command and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    if let Err(e) = configure_threads() {
        eprintln!("error: {e}");
        return 2;
    }
    let (kind, mut cfg) = match cli.command {
        Command::Chi(c) => (CommandKind::Chi, c),
        Command::Metrics(c) => (CommandKind::Metrics, c),
        Command::Approx(c) => (CommandKind::Approx, c),
        Command::Threshold(c) => (CommandKind::Threshold, c),
        Command::Sweep(c) => (CommandKind::Sweep, c),
    };
    if let Some(path) = cfg.config.clone() {
        match load_config(&path) {
            Ok(file) => {
                let out = cfg.out.take();
                cfg = RunConfig {
                    command: file.command.or(Some(kind)),
                    out: file.out.clone().or(out),
                    ..file
                };
            }
            Err(e) => {
                eprintln!("error: {e}");
                return e.exit_code();
            }
        }
    } else {
        cfg.command = Some(kind);
    }
    match execute(&cfg) {
        Ok(text) => match &cfg.out {
            Some(path) => match std::fs::write(path, text) {
                Ok(()) => 0,
                Err(e) => {
                    eprintln!("error: cannot write {}: {e}", path.display());
                    2
                }
            },
            None => {
                print!("{text}");
                0
            }
        },
        Err((code, msg)) => {
            eprintln!("error: {msg}");
            code
        }
    }
}
