//! The `qsense` command line: argument parsing, config resolution and output
//! writing around the experiment runners in `qsense_core::harness`.

use std::fmt;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use qsense_core::harness::{
    self, AssumptionSummary, CertificateConfig, CertificateReport, InvarianceSummary, NormalityOutcome,
    RateReport,
};
use qsense_core::{Dataset, ExperimentConfig, FitResult, VERSION};

#[derive(Debug, Parser)]
#[command(name = "qsense", version = VERSION, about = "Low-rank quotient estimation: simulation, fitting and asymptotic checks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// JSON config file (experiment config, or constants for `certificate`).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory; reports go to stdout when omitted.
    #[arg(long, global = true)]
    pub out_dir: Option<PathBuf>,
    /// Worker threads for replications.
    #[arg(long, global = true, env = "QSENSE_THREADS")]
    pub threads: Option<usize>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Draw a dataset from the configured data-generating process.
    Simulate,
    /// Fit the factor model to a dataset.
    Fit {
        #[arg(long)]
        data: PathBuf,
    },
    /// Replicated check of asymptotic normality; writes report.json and z.csv.
    VerifyNormality,
    /// Replicated quotient distances over the configured sample-size grid.
    RateSweep,
    /// Monte Carlo checks of the score and curvature assumptions.
    CheckAssumptions,
    /// Certificate constants from problem constants.
    Certificate,
    /// Rotation invariance of the restricted inference objects.
    InvarianceAudit,
}

#[derive(Debug)]
enum CliError {
    Core(qsense_core::Error),
    Io(PathBuf, io::Error),
    Usage(String),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Io(p, e) => write!(f, "{}: {e}", p.display()),
            CliError::Usage(m) => f.write_str(m),
        }
    }
}

impl From<qsense_core::Error> for CliError {
    fn from(e: qsense_core::Error) -> Self {
        CliError::Core(e)
    }
}

impl CliError {
    fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(e) if e.is_numerical() => 2,
            _ => 1,
        }
    }
}

/// Runs the tool on `argv` (including the program name); returns the exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("qsense: {e}");
            e.exit_code()
        }
    }
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::Io(path.to_path_buf(), e))
}

fn experiment_config(cli: &Cli) -> Result<ExperimentConfig, CliError> {
    let mut config = match &cli.config {
        Some(p) => ExperimentConfig::from_json(&read(p)?)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    if cli.threads.is_some() {
        config.threads = cli.threads;
    }
    if cli.out_dir.is_some() {
        config.out_dir = cli.out_dir.clone();
    }
    config.validate()?;
    Ok(config)
}

fn execute(cli: &Cli) -> Result<(), CliError> {
    if let Command::Certificate = cli.command {
        let path = cli
            .config
            .as_ref()
            .ok_or_else(|| CliError::Usage("certificate needs --config with the problem constants".into()))?;
        let config: CertificateConfig = serde_json::from_str(&read(path)?)
            .map_err(|e| qsense_core::Error::Configuration(format!("certificate config: {e}")))?;
        let report = harness::certificate_report(&config)?;
        return emit(cli.out_dir.as_deref(), "certificate", cli.format, &report, certificate_csv);
    }
    let config = experiment_config(cli)?;
    let out = config.out_dir.clone();
    let out = out.as_deref();
    match &cli.command {
        Command::Simulate => {
            let data = harness::simulate_dataset(&config)?;
            let doc = Stamped { version: VERSION, config: &config, body: &data };
            emit(out, "dataset", cli.format, &doc, |d| dataset_csv(d.body))
        }
        Command::Fit { data } => {
            let data = Dataset::from_json(&read(data)?)?;
            let result = harness::fit_dataset(&config, &data)?;
            let doc = FitOutput { version: VERSION, config: &config, result: &result };
            emit(out, "fit", cli.format, &doc, |d| fit_csv(d.result))
        }
        Command::VerifyNormality => {
            let outcome = harness::normality_experiment(&config)?;
            write_normality(out.unwrap_or(Path::new(".")), cli.format, &outcome)
        }
        Command::RateSweep => {
            let report = harness::rate_experiment(&config)?;
            emit(out, "rate", cli.format, &report, rate_csv)
        }
        Command::CheckAssumptions => {
            let report = harness::assumption_experiment(&config)?;
            emit(out, "assumptions", cli.format, &report, assumptions_csv)
        }
        Command::InvarianceAudit => {
            let report = harness::invariance_experiment(&config)?;
            emit(out, "invariance", cli.format, &report, invariance_csv)
        }
        Command::Certificate => unreachable!("handled above"),
    }
}

/// A payload with the version and resolved config alongside its own fields.
#[derive(Serialize)]
struct Stamped<'a, T: Serialize> {
    version: &'a str,
    config: &'a ExperimentConfig,
    #[serde(flatten)]
    body: &'a T,
}

#[derive(Serialize)]
struct FitOutput<'a> {
    version: &'a str,
    config: &'a ExperimentConfig,
    result: &'a FitResult,
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("reports serialize to JSON");
    s.push('\n');
    s
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    fs::write(path, contents).map_err(|e| CliError::Io(path.to_path_buf(), e))
}

fn emit<T: Serialize>(
    out_dir: Option<&Path>,
    name: &str,
    format: Format,
    value: &T,
    csv: impl Fn(&T) -> String,
) -> Result<(), CliError> {
    let (contents, ext) = match format {
        Format::Json => (to_json(value), "json"),
        Format::Csv => (csv(value), "csv"),
    };
    match out_dir {
        Some(dir) => {
            fs::create_dir_all(dir).map_err(|e| CliError::Io(dir.to_path_buf(), e))?;
            write_file(&dir.join(format!("{name}.{ext}")), &contents)
        }
        None => io::stdout()
            .write_all(contents.as_bytes())
            .map_err(|e| CliError::Io(PathBuf::from("<stdout>"), e)),
    }
}

fn write_normality(dir: &Path, format: Format, outcome: &NormalityOutcome) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::Io(dir.to_path_buf(), e))?;
    write_file(&dir.join("report.json"), &to_json(&outcome.report))?;
    write_file(&dir.join("z.csv"), &z_csv(outcome))?;
    if format == Format::Csv {
        write_file(&dir.join("coordinates.csv"), &coordinates_csv(outcome))?;
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// CSV tables (header row, shortest round-trip decimals)

fn num(v: f64) -> String {
    format!("{v:?}")
}

fn table<S: AsRef<str>>(header: &[S], rows: impl IntoIterator<Item = Vec<String>>) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header.iter().map(AsRef::as_ref)).expect("in-memory CSV");
    for row in rows {
        w.write_record(&row).expect("in-memory CSV");
    }
    String::from_utf8(w.into_inner().expect("in-memory CSV")).expect("CSV is UTF-8")
}

fn z_csv(outcome: &NormalityOutcome) -> String {
    let header: Vec<String> = (0..outcome.report.dim).map(|j| format!("z{j}")).collect();
    table(&header, outcome.z.iter().map(|r| r.iter().map(|&v| num(v)).collect()))
}

fn coordinates_csv(outcome: &NormalityOutcome) -> String {
    let r = &outcome.report;
    table(
        &["coordinate", "mean", "variance", "coverage", "ks"],
        (0..r.dim).map(|j| {
            vec![
                j.to_string(),
                num(r.mean[j]),
                num(r.variance[j]),
                num(r.coverage_per_coordinate[j]),
                num(r.ks_per_coordinate[j]),
            ]
        }),
    )
}

fn dataset_csv(data: &Dataset) -> String {
    let d = data.d;
    let mut header = vec!["y".to_string()];
    header.extend((0..d * d).map(|i| format!("x{}_{}", i / d, i % d)));
    table(
        &header,
        data.samples.iter().map(|s| {
            let mut row = vec![num(s.y)];
            row.extend((0..d * d).map(|i| num(s.x[(i / d, i % d)])));
            row
        }),
    )
}

fn fit_csv(res: &FitResult) -> String {
    let k = res.theta0.ncols();
    let header: Vec<String> = (0..k).map(|j| format!("theta{j}")).collect();
    table(&header, res.theta0.row_iter().map(|r| r.iter().map(|&v| num(v)).collect()))
}

fn rate_csv(r: &RateReport) -> String {
    table(
        &["n", "successful", "median", "q25", "q75", "iqr", "bound"],
        r.points.iter().map(|p| {
            vec![
                p.n.to_string(),
                p.successful.to_string(),
                num(p.median),
                num(p.q25),
                num(p.q75),
                num(p.iqr),
                p.bound.map(num).unwrap_or_default(),
            ]
        }),
    )
}

fn assumptions_csv(s: &AssumptionSummary) -> String {
    let r = &s.report;
    table(
        &["check", "statistic", "threshold", "pass"],
        [
            ("score_mean_zero", r.score_mean_zero),
            ("curvature_positive", r.curvature_positive),
            ("bartlett_second", r.bartlett_second),
        ]
        .into_iter()
        .map(|(name, c)| vec![name.into(), num(c.statistic), num(c.threshold), c.pass.to_string()]),
    )
}

fn certificate_csv(r: &CertificateReport) -> String {
    let c = &r.certificate;
    let mut rows = vec![
        ("K".to_string(), c.k_lipschitz),
        ("n_required".into(), c.n_required),
        ("radius_required".into(), c.radius_required),
        ("lambda_min_lower_bound".into(), c.lambda_min_lower_bound),
        ("lambda_min_lower_bound_sharp".into(), c.lambda_min_lower_bound_sharp),
    ];
    for p in &r.at_n {
        rows.push((format!("rate_bound[n={}]", p.n), p.rate_bound));
    }
    table(&["quantity", "value"], rows.into_iter().map(|(k, v)| vec![k, num(v)]))
}

fn invariance_csv(s: &InvarianceSummary) -> String {
    let m = &s.max;
    table(
        &["object", "max_discrepancy"],
        [("phi0", m.phi0), ("phi_star", m.phi_star), ("g0", m.g0), ("h0", m.h0), ("h_star", m.h_star), ("max", m.max)]
            .into_iter()
            .map(|(k, v)| vec![k.into(), num(v)]),
    )
}
