//! `mevlab` command-line front end.

mod config;
mod grid;

use std::fmt::Display;
use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, CommandFactory, Parser, Subcommand, ValueEnum};
use mevlab::experiments::{
    self, best_estimator_table, fit_dataset, pairwise_efficiency_table, return_level_study, return_levels,
    run_study, simulate_dataset, MarginsMode, PairEffConfig, PairFamily, ReturnStudyConfig, RiskMargins,
    StudyConfig, Tuning,
};
use mevlab::fisher::{self, are_table, AreConfig, BlockInfoMethod, ThresholdMcConfig};
use mevlab::simulate::GeneratingModel;
use mevlab::{Estimator, SeedSpec};
use ndarray::Array2;
use serde::Serialize;
use serde_json::{json, Value};

use grid::{parse_grid, parse_list};

const EXIT_USAGE: u8 = 2;
const EXIT_ESTIMATION: u8 = 3;

#[derive(Parser, Debug)]
#[command(name = "mevlab", version, about = "Dependence estimation for multivariate extremes")]
struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true, env = "MEVLAB_THREADS")]
    threads: Option<usize>,

    /// Flat `key = value` file of flag defaults; flags on the command line win.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,

    #[command(subcommand)]
    command: Cmd,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Draw a dataset from the logistic or outer-power Clayton model.
    Simulate(SimulateArgs),
    /// Estimate α from a CSV dataset.
    Fit(FitArgs),
    /// Root asymptotic relative efficiencies against the censored estimator.
    Are(AreArgs),
    /// Replicated bias/SE/RMSE study at one α.
    Study(StudyArgs),
    /// RMSE-best estimator and tuning for each α.
    BestTable(BestArgs),
    /// Efficiency of pairwise against full likelihoods by dimension.
    PairEff(PairArgs),
    /// Return levels of Y1 + Y2, for one α or as a replicated study.
    ReturnLevels(ReturnArgs),
}

fn parse_model(s: &str) -> Result<GeneratingModel, String> {
    s.parse().map_err(|e: mevlab::Error| e.to_string())
}

fn parse_margins(s: &str) -> Result<MarginsMode, String> {
    s.parse().map_err(|e: mevlab::Error| e.to_string())
}

fn parse_estimator(s: &str) -> Result<Estimator, String> {
    s.parse().map_err(|e: mevlab::Error| e.to_string())
}

#[derive(Args, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
#[command(args_override_self = true)]
struct SimulateArgs {
    #[arg(long, value_parser = parse_model, default_value = "logistic")]
    #[serde(serialize_with = "as_display")]
    model: GeneratingModel,
    #[arg(long)]
    alpha: f64,
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 2)]
    dim: usize,
    /// `known-frechet` maps Clayton data to unit Fréchet; logistic data are always Fréchet.
    #[arg(long, value_parser = parse_margins, default_value = "two-step")]
    #[serde(serialize_with = "as_display")]
    margins: MarginsMode,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    #[serde(skip)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
#[command(args_override_self = true)]
struct FitArgs {
    #[arg(long, value_parser = parse_estimator)]
    #[serde(serialize_with = "as_display")]
    estimator: Estimator,
    #[arg(long = "in", value_name = "CSV")]
    #[serde(rename = "in")]
    input: PathBuf,
    #[arg(long = "block-length", visible_alias = "L")]
    block_length: Option<usize>,
    #[arg(long = "threshold-prob", visible_alias = "p")]
    threshold_prob: Option<f64>,
    #[arg(long, value_parser = parse_margins, default_value = "two-step")]
    #[serde(serialize_with = "as_display")]
    margins: MarginsMode,
    #[arg(long)]
    #[serde(skip)]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum BlockMethod {
    Quadrature,
    MonteCarlo,
}

#[derive(Args, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
#[command(args_override_self = true)]
struct AreArgs {
    /// Grid as `start:stop:step` or a comma list.
    #[arg(long)]
    alphas: String,
    /// Threshold probabilities, comma list or grid.
    #[arg(long = "threshold-prob", visible_alias = "p")]
    threshold_prob: String,
    #[arg(long = "block-length", visible_alias = "L", default_value_t = 100)]
    block_length: usize,
    #[arg(long = "block-method", value_enum, default_value_t = BlockMethod::Quadrature)]
    block_method: BlockMethod,
    /// Score samples per Monte Carlo block-maximum cell.
    #[arg(long = "mc-samples", default_value_t = 100_000)]
    mc_samples: usize,
    /// Replicate fits per cell for the Thr1/Thr2 rows; omit to skip them.
    #[arg(long = "threshold-replicates")]
    threshold_replicates: Option<usize>,
    /// Sample size of each Thr1/Thr2 replicate.
    #[arg(long = "threshold-n", default_value_t = 20_000)]
    threshold_n: usize,
    #[arg(long)]
    thr5: bool,
    /// Required with Monte Carlo block rows or Thr1/Thr2 rows.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    #[serde(skip)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
struct StudyCommon {
    #[arg(long, value_parser = parse_model, default_value = "opclayton")]
    #[serde(serialize_with = "as_display")]
    model: GeneratingModel,
    #[arg(long, default_value_t = 2)]
    dim: usize,
    #[arg(long, default_value_t = 10_000)]
    n: usize,
    #[arg(long, default_value_t = 200)]
    replicates: usize,
    /// Comma list of estimator names.
    #[arg(long, default_value = "max1,max2,max3,thr1,thr2,thr3,thr4,thr5")]
    estimators: String,
    /// Block lengths, comma list.
    #[arg(long = "block-length", visible_alias = "L", default_value = "100")]
    block_length: String,
    /// Threshold probabilities, comma list or grid.
    #[arg(long = "threshold-prob", visible_alias = "p", default_value = "0.95")]
    threshold_prob: String,
    #[arg(long, value_parser = parse_margins, default_value = "two-step")]
    #[serde(serialize_with = "as_display")]
    margins: MarginsMode,
    #[arg(long)]
    seed: u64,
}

#[derive(Args, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
#[command(args_override_self = true)]
struct StudyArgs {
    #[arg(long)]
    alpha: f64,
    #[command(flatten)]
    #[serde(flatten)]
    common: StudyCommon,
    /// Summary CSV (default: stdout).
    #[arg(long)]
    #[serde(skip)]
    out: Option<PathBuf>,
    /// Per-replicate CSV.
    #[arg(long = "replicates-out")]
    #[serde(skip)]
    replicates_out: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
#[command(args_override_self = true)]
struct BestArgs {
    #[arg(long, default_value = "0.1:0.9:0.1")]
    alphas: String,
    #[command(flatten)]
    #[serde(flatten)]
    common: StudyCommon,
    #[arg(long)]
    #[serde(skip)]
    out: Option<PathBuf>,
    /// Summary CSV of every cell of every study.
    #[arg(long = "summary-out")]
    #[serde(skip)]
    summary_out: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
#[command(args_override_self = true)]
struct PairArgs {
    #[arg(long, value_parser = parse_family)]
    #[serde(serialize_with = "as_display")]
    family: PairFamily,
    #[arg(long, value_parser = parse_model, default_value = "opclayton")]
    #[serde(serialize_with = "as_display")]
    model: GeneratingModel,
    #[arg(long)]
    alphas: String,
    #[arg(long, default_value = "2,5,10")]
    dims: String,
    #[arg(long, default_value_t = 10_000)]
    n: usize,
    #[arg(long, default_value_t = 200)]
    replicates: usize,
    #[arg(long = "block-length", visible_alias = "L", default_value_t = 100)]
    block_length: usize,
    #[arg(long = "threshold-prob", visible_alias = "p", default_value_t = 0.98)]
    threshold_prob: f64,
    #[arg(long, value_parser = parse_margins, default_value = "two-step")]
    #[serde(serialize_with = "as_display")]
    margins: MarginsMode,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    #[serde(skip)]
    out: Option<PathBuf>,
}

fn parse_family(s: &str) -> Result<PairFamily, String> {
    s.parse().map_err(|e: mevlab::Error| e.to_string())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum RiskMarginsArg {
    TruncatedT5,
    UnitFrechet,
}

#[derive(Args, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
#[command(args_override_self = true)]
struct ReturnArgs {
    /// Dependence parameter of a single return-level curve.
    #[arg(long, conflicts_with = "study")]
    alpha: Option<f64>,
    /// Run the replicated study over `--alphas` instead.
    #[arg(long)]
    study: bool,
    /// Return periods in years, within [1, 500].
    #[arg(long, default_value = "1,2,5,10,20,50,100,200,500")]
    periods: String,
    #[arg(long = "mc-size", default_value_t = 5_000_000)]
    mc_size: usize,
    #[arg(long = "risk-margins", value_enum, default_value_t = RiskMarginsArg::TruncatedT5)]
    risk_margins: RiskMarginsArg,
    #[arg(long, default_value = "0.3,0.6,0.9,0.95")]
    alphas: String,
    #[arg(long, default_value = "max1,max2,max3,thr1,thr2,thr3,thr4,thr5")]
    estimators: String,
    #[arg(long, default_value_t = 2000)]
    n: usize,
    #[arg(long, default_value_t = 200)]
    replicates: usize,
    #[arg(long = "block-length", visible_alias = "L", default_value_t = 100)]
    block_length: usize,
    #[arg(long = "threshold-prob", visible_alias = "p", default_value_t = 0.98)]
    threshold_prob: f64,
    /// Points of the α grid on which study return levels are tabulated.
    #[arg(long = "grid-points", default_value_t = 100)]
    grid_points: usize,
    #[arg(long, value_parser = parse_margins, default_value = "two-step")]
    #[serde(serialize_with = "as_display")]
    margins: MarginsMode,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    #[serde(skip)]
    out: Option<PathBuf>,
}

fn as_display<T: Display, S: serde::Serializer>(v: &T, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&v.to_string())
}

// ---------------------------------------------------------------------------

struct Failure {
    code: u8,
    message: String,
}

impl From<mevlab::Error> for Failure {
    fn from(e: mevlab::Error) -> Self {
        let code = if e.is_usage() { EXIT_USAGE } else { EXIT_ESTIMATION };
        Failure { code, message: e.to_string() }
    }
}

fn usage(msg: impl Into<String>) -> Failure {
    Failure { code: EXIT_USAGE, message: msg.into() }
}

fn io_failure(path: &std::path::Path, e: io::Error) -> Failure {
    usage(format!("{}: {e}", path.display()))
}

/// Collected output: header comment, CSV lines or JSON document.
struct Output<'a> {
    name: &'static str,
    format: Format,
    config: Value,
    out: Option<&'a PathBuf>,
}

impl Output<'_> {
    fn header(&self) -> String {
        let mut parts = vec![format!("# mevlab {}", self.name)];
        if let Value::Object(map) = &self.config {
            for (k, v) in map {
                let s = match v {
                    Value::Null => continue,
                    Value::String(s) => s.clone(),
                    other => other.to_string(),
                };
                parts.push(format!("{k}={s}"));
            }
        }
        parts.join(" ")
    }

    fn write_to(&self, path: Option<&PathBuf>, text: &str) -> Result<(), Failure> {
        match path {
            Some(p) => fs::write(p, text).map_err(|e| io_failure(p, e)),
            None => io::stdout().write_all(text.as_bytes()).map_err(|e| usage(format!("stdout: {e}"))),
        }
    }

    fn csv_text(&self, header: &str, rows: &[String]) -> String {
        let mut text = format!("{}\n{header}\n", self.header());
        for r in rows {
            text.push_str(r);
            text.push('\n');
        }
        text
    }

    /// CSV rows, or `json_rows` under `"rows"` in JSON mode.
    fn emit(&self, header: &str, rows: &[String], json_rows: Value) -> Result<(), Failure> {
        self.emit_at(self.out, header, rows, json_rows)
    }

    fn emit_at(&self, path: Option<&PathBuf>, header: &str, rows: &[String], json_rows: Value) -> Result<(), Failure> {
        let text = match self.format {
            Format::Csv => self.csv_text(header, rows),
            Format::Json => {
                let doc = json!({ "command": self.name, "config": self.config, "rows": json_rows });
                serde_json::to_string_pretty(&doc).expect("serializable") + "\n"
            }
        };
        self.write_to(path, &text)
    }
}

fn to_json<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("serializable")
}

fn estimators(list: &str) -> Result<Vec<Estimator>, Failure> {
    list.split(',').filter(|s| !s.trim().is_empty()).map(|s| s.parse().map_err(Failure::from)).collect()
}

fn usizes(list: &str) -> Result<Vec<usize>, Failure> {
    list.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| s.trim().parse().map_err(|_| usage(format!("expected a whole number, got '{s}'"))))
        .collect()
}

fn grid(list: &str) -> Result<Vec<f64>, Failure> {
    parse_grid(list).map_err(usage)
}

// ---------------------------------------------------------------------------

fn cmd_simulate(a: &SimulateArgs, o: &Output) -> Result<(), Failure> {
    let data = simulate_dataset(a.model, a.n, a.dim, a.alpha, a.margins, SeedSpec::new(a.seed, 0))?;
    let header = (1..=a.dim).map(|d| format!("y{d}")).collect::<Vec<_>>().join(",");
    let rows: Vec<String> = data
        .rows()
        .into_iter()
        .map(|r| r.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(","))
        .collect();
    let json_rows = Value::Array(data.rows().into_iter().map(|r| to_json(&r.to_vec())).collect());
    o.emit(&header, &rows, json_rows)
}

fn read_dataset(path: &PathBuf) -> Result<Array2<f64>, Failure> {
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| usage(format!("{}: {e}", path.display())))?;
    let mut values = Vec::new();
    let mut dim = 0;
    for (i, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| usage(format!("{}: {e}", path.display())))?;
        if i == 0 {
            dim = rec.len();
        }
        for field in rec.iter() {
            let v: f64 = field
                .parse()
                .map_err(|_| usage(format!("{}: row {}: '{field}' is not a number", path.display(), i + 1)))?;
            values.push(v);
        }
    }
    if dim == 0 {
        return Err(usage(format!("{}: no data rows", path.display())));
    }
    let n = values.len() / dim;
    Array2::from_shape_vec((n, dim), values).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn cmd_fit(a: &FitArgs, o: &Output) -> Result<(), Failure> {
    let raw = read_dataset(&a.input)?;
    let tuning = if a.estimator.is_block_maximum() {
        Tuning::Block(a.block_length.ok_or_else(|| usage(format!("{} needs --block-length", a.estimator)))?)
    } else {
        Tuning::Prob(a.threshold_prob.ok_or_else(|| usage(format!("{} needs --threshold-prob", a.estimator)))?)
    };
    let fit = fit_dataset(a.estimator, &raw, tuning, a.margins)?;
    let text = match o.format {
        Format::Csv => format!(
            "{}\nalpha_hat={}\nloglik={}\nconverged={}\nn={}\ndim={}\n{}",
            o.header(),
            fit.alpha_hat,
            fit.loglik,
            fit.converged,
            raw.nrows(),
            raw.ncols(),
            if fit.diagnostics.is_empty() { String::new() } else { format!("diagnostics={}\n", fit.diagnostics) }
        ),
        Format::Json => {
            let doc = json!({ "command": o.name, "config": o.config, "fit": to_json(&fit) });
            serde_json::to_string_pretty(&doc).expect("serializable") + "\n"
        }
    };
    o.write_to(o.out, &text)
}

fn cmd_are(a: &AreArgs, o: &Output) -> Result<(), Failure> {
    let alphas = grid(&a.alphas)?;
    let probs = grid(&a.threshold_prob)?;
    let needs_seed = a.block_method == BlockMethod::MonteCarlo || a.threshold_replicates.is_some();
    let seed = match (a.seed, needs_seed) {
        (None, true) => return Err(usage("Monte Carlo rows need --seed")),
        (s, _) => s.unwrap_or(0),
    };
    let config = AreConfig {
        block_method: match a.block_method {
            BlockMethod::Quadrature => BlockInfoMethod::Quadrature,
            BlockMethod::MonteCarlo => BlockInfoMethod::MonteCarlo { samples: a.mc_samples, seed },
        },
        threshold_mc: a.threshold_replicates.map(|r| ThresholdMcConfig { n: a.threshold_n, replicates: r, seed }),
        include_thr5: a.thr5,
    };
    let rows = are_table(&alphas, a.block_length, &probs, &config)?;
    let lines: Vec<String> = rows.iter().map(|r| r.csv_line()).collect();
    o.emit(fisher::ARE_CSV_HEADER, &lines, to_json(&rows))
}

fn study_config(c: &StudyCommon, alpha: f64) -> Result<StudyConfig, Failure> {
    Ok(StudyConfig {
        model: c.model,
        alpha,
        dim: c.dim,
        n: c.n,
        replicates: c.replicates,
        estimators: estimators(&c.estimators)?,
        block_lengths: usizes(&c.block_length)?,
        probs: parse_list(&c.threshold_prob).map_err(usage)?,
        margins_mode: c.margins,
        master_seed: c.seed,
    })
}

fn report_failures(rate: f64) {
    if rate > 0.0 {
        eprintln!("mevlab: {:.2}% of fits failed and were dropped", 100.0 * rate);
    }
}

fn cmd_study(a: &StudyArgs, o: &Output) -> Result<(), Failure> {
    let res = run_study(&study_config(&a.common, a.alpha)?)?;
    report_failures(res.failure_rate());
    if let Some(path) = &a.replicates_out {
        let reps = res.replicate_rows();
        o.emit_at(Some(path), experiments::REPLICATE_CSV_HEADER, &reps, to_json(&res.cells))?;
    }
    o.emit(experiments::SUMMARY_CSV_HEADER, &res.summary_rows(), to_json(&res.cells))
}

fn cmd_best(a: &BestArgs, o: &Output) -> Result<(), Failure> {
    let alphas = grid(&a.alphas)?;
    let base = study_config(&a.common, alphas.first().copied().unwrap_or(0.5))?;
    let (studies, best) = best_estimator_table(&base, &alphas)?;
    for s in &studies {
        report_failures(s.failure_rate());
    }
    if let Some(path) = &a.summary_out {
        let rows: Vec<String> = studies.iter().flat_map(|s| s.summary_rows()).collect();
        let cells: Vec<Value> = studies.iter().map(|s| to_json(&s.cells)).collect();
        o.emit_at(Some(path), experiments::SUMMARY_CSV_HEADER, &rows, Value::Array(cells))?;
    }
    let lines: Vec<String> = best.iter().map(|b| b.csv_line()).collect();
    o.emit(experiments::BEST_CSV_HEADER, &lines, to_json(&best))
}

fn cmd_pair(a: &PairArgs, o: &Output) -> Result<(), Failure> {
    let rows = pairwise_efficiency_table(&PairEffConfig {
        model: a.model,
        family: a.family,
        alphas: grid(&a.alphas)?,
        dims: usizes(&a.dims)?,
        n: a.n,
        replicates: a.replicates,
        block_length: a.block_length,
        prob: a.threshold_prob,
        margins_mode: a.margins,
        master_seed: a.seed,
    })?;
    let lines: Vec<String> = rows.iter().map(|r| r.csv_line()).collect();
    o.emit(experiments::PAIR_EFF_CSV_HEADER, &lines, to_json(&rows))
}

fn cmd_return(a: &ReturnArgs, o: &Output) -> Result<(), Failure> {
    let periods = parse_list(&a.periods).map_err(usage)?;
    if a.study {
        let rows = return_level_study(&ReturnStudyConfig {
            alphas: grid(&a.alphas)?,
            estimators: estimators(&a.estimators)?,
            n: a.n,
            replicates: a.replicates,
            block_length: a.block_length,
            prob: a.threshold_prob,
            periods,
            mc_size: a.mc_size,
            grid_points: a.grid_points,
            margins_mode: a.margins,
            master_seed: a.seed,
        })?;
        let lines: Vec<String> = rows.iter().map(|r| r.csv_line()).collect();
        return o.emit(experiments::RETURN_STUDY_CSV_HEADER, &lines, to_json(&rows));
    }
    let alpha = a.alpha.ok_or_else(|| usage("give --alpha, or --study with --alphas"))?;
    let margins = match a.risk_margins {
        RiskMarginsArg::TruncatedT5 => RiskMargins::TruncatedT5,
        RiskMarginsArg::UnitFrechet => RiskMargins::UnitFrechet,
    };
    let levels = return_levels(alpha, margins, &periods, a.mc_size, SeedSpec::new(a.seed, 0))?;
    let lines: Vec<String> =
        levels.iter().map(|r| format!("{},{},{},{}", r.period, r.prob, r.level, r.mc_stderr)).collect();
    o.emit(experiments::RETURN_LEVEL_CSV_HEADER, &lines, to_json(&levels))
}

fn run(cli: Cli) -> Result<(), Failure> {
    if let Some(t) = cli.threads {
        if t == 0 {
            return Err(usage("--threads must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| usage(format!("thread pool: {e}")))?;
    }
    let (name, config, out): (&'static str, Value, Option<&PathBuf>) = match &cli.command {
        Cmd::Simulate(a) => ("simulate", to_json(a), a.out.as_ref()),
        Cmd::Fit(a) => ("fit", to_json(a), a.out.as_ref()),
        Cmd::Are(a) => ("are", to_json(a), a.out.as_ref()),
        Cmd::Study(a) => ("study", to_json(a), a.out.as_ref()),
        Cmd::BestTable(a) => ("best-table", to_json(a), a.out.as_ref()),
        Cmd::PairEff(a) => ("pair-eff", to_json(a), a.out.as_ref()),
        Cmd::ReturnLevels(a) => ("return-levels", to_json(a), a.out.as_ref()),
    };
    let o = Output { name, format: cli.format, config, out };
    match &cli.command {
        Cmd::Simulate(a) => cmd_simulate(a, &o),
        Cmd::Fit(a) => cmd_fit(a, &o),
        Cmd::Are(a) => cmd_are(a, &o),
        Cmd::Study(a) => cmd_study(a, &o),
        Cmd::BestTable(a) => cmd_best(a, &o),
        Cmd::PairEff(a) => cmd_pair(a, &o),
        Cmd::ReturnLevels(a) => cmd_return(a, &o),
    }
}

fn main() -> ExitCode {
    let args = match config::expand(&Cli::command(), std::env::args().collect()) {
        Ok(a) => a,
        Err(msg) => {
            eprintln!("mevlab: {msg}");
            return ExitCode::from(EXIT_USAGE);
        }
    };
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("mevlab: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
