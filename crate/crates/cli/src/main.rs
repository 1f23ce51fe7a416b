//! Command-line front end: run the exponentiality test on data files, look
//! up null-distribution quantiles, print spectra/cumulants/drifts/slopes,
//! and drive Monte Carlo studies from config files.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical failure.

use clap::{Args, Parser, Subcommand, ValueEnum};
use expgof::alternatives::{AlternativeModel, ScaledModel};
use expgof::bahadur::{efficiency, LocalFamily};
use expgof::inference::NeighbourhoodDecision;
use expgof::inference::{confidence_interval, neighbourhood_test, variance_estimate};
use expgof::mc::{coverage_study, limit_table, null_quantiles, power_study, StudyConfig};
use expgof::null_dist::{
    cumulants, eigen_spectrum, pearson_p_value, pearson_quantile, series_quantile,
};
use expgof::statistic::{statistic, statistic_g_oracle, Sample, TuningParam};
use serde::Serialize;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "expgof",
    about = "Goodness-of-fit tests for exponentiality based on the mean residual life",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Test a data file for exponentiality
    Test(TestArgs),
    /// Quantiles of the limiting null distribution
    Quantile(QuantileArgs),
    /// Eigenvalues of the limiting covariance operator
    Spectrum(SpectrumArgs),
    /// Cumulants of the limiting null distribution
    Cumulants(CumulantsArgs),
    /// Population drift and variance of an alternative family
    Delta(DeltaArgs),
    /// Approximate local Bahadur slope and efficiency
    Slope(SlopeArgs),
    /// Run a Monte Carlo study from a config file
    Study(StudyArgs),
}

#[derive(Args)]
struct TestArgs {
    /// Data file: one observation per line, or CSV with --column
    input: PathBuf,
    /// Tuning parameter of the weight exp(-a y)
    #[arg(long, default_value_t = 1.0)]
    a: f64,
    /// Significance level
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    /// Name of the CSV column holding the observations
    #[arg(long)]
    column: Option<String>,
    /// Attach the asymptotic confidence interval for the drift
    #[arg(long)]
    ci: bool,
    /// Run the neighbourhood-of-model validation with this tolerated drift
    #[arg(long, value_name = "DELTA")]
    neighbourhood: Option<f64>,
    /// Cross-check the statistic against its quadrature oracle
    #[arg(long)]
    verify: bool,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum QuantileBackend {
    Pearson,
    Series,
}

#[derive(Args)]
struct QuantileArgs {
    #[arg(long, default_value_t = 1.0)]
    a: f64,
    /// Quantile level in (0,1)
    #[arg(long)]
    q: f64,
    #[arg(long, value_enum, default_value_t = QuantileBackend::Pearson)]
    backend: QuantileBackend,
    /// Eigen-series truncation (series backend)
    #[arg(long, default_value_t = 500)]
    terms: u32,
    /// Simulation replications (series backend)
    #[arg(long, default_value_t = 200_000)]
    reps: u32,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct SpectrumArgs {
    #[arg(long, default_value_t = 1.0)]
    a: f64,
    #[arg(long, default_value_t = 20)]
    count: u32,
}

#[derive(Args)]
struct CumulantsArgs {
    #[arg(long, default_value_t = 1.0)]
    a: f64,
}

#[derive(Args)]
struct DeltaArgs {
    /// Family: exponential, gamma_bb, weibull, gamma_theta, lfr, emnw, makeham
    #[arg(long)]
    family: String,
    /// Shape for gamma_bb / emnw
    #[arg(long)]
    beta: Option<f64>,
    /// Family parameter
    #[arg(long)]
    theta: Option<f64>,
    #[arg(long, default_value_t = 1.0)]
    a: f64,
    /// Also compute the asymptotic variance (slower)
    #[arg(long)]
    with_sigma2: bool,
}

#[derive(Args)]
struct SlopeArgs {
    /// Local family: weibull, gamma, lfr, emnw3, makeham
    #[arg(long)]
    family: String,
    #[arg(long, default_value_t = 1.0)]
    a: f64,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum StudyKind {
    Power,
    Coverage,
    Limit,
    NullQuantiles,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum OutputFormat {
    Json,
    Csv,
}

#[derive(Args)]
struct StudyArgs {
    /// JSON config file mirroring the study parameters
    #[arg(long)]
    config: PathBuf,
    #[arg(long, value_enum)]
    kind: StudyKind,
    #[arg(long, value_enum, default_value_t = OutputFormat::Json)]
    format: OutputFormat,
    /// Override the config seed
    #[arg(long)]
    seed: Option<u64>,
    /// Override the config worker count
    #[arg(long)]
    workers: Option<usize>,
    /// Write output here instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
}

enum CliError {
    Usage(String),
    Data(String),
    Numeric(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
            CliError::Numeric(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Data(m) | CliError::Numeric(m) => m,
        }
    }
}

fn numeric(e: expgof::Error) -> CliError {
    CliError::Numeric(e.to_string())
}

fn usage(e: expgof::Error) -> CliError {
    CliError::Usage(e.to_string())
}

#[derive(Serialize)]
struct TestReport {
    n: usize,
    a: f64,
    alpha: f64,
    statistic: f64,
    critical_value: f64,
    approx_p_value: f64,
    decision: &'static str,
    delta_hat: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    sigma2_hat: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    confidence_interval: Option<ReportInterval>,
    #[serde(skip_serializing_if = "Option::is_none")]
    neighbourhood: Option<ReportNeighbourhood>,
    #[serde(skip_serializing_if = "Option::is_none")]
    oracle_check: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    warning: Option<String>,
}

#[derive(Serialize)]
struct ReportInterval {
    lower: f64,
    upper: f64,
    level: f64,
}

#[derive(Serialize)]
struct ReportNeighbourhood {
    delta_tilde: f64,
    decision: &'static str,
}

fn parse_data_file(path: &PathBuf, column: &Option<String>) -> Result<Sample, CliError> {
    let raw = std::fs::read_to_string(path)
        .map_err(|e| CliError::Data(format!("cannot read {}: {e}", path.display())))?;
    let mut values = Vec::new();
    match column {
        None => {
            for (lineno, line) in raw.lines().enumerate() {
                let t = line.trim();
                if t.is_empty() || t.starts_with('#') {
                    continue;
                }
                let v: f64 = t.parse().map_err(|_| {
                    CliError::Data(format!(
                        "line {}: cannot parse '{}' as a number (CSV input needs --column)",
                        lineno + 1,
                        t
                    ))
                })?;
                values.push(v);
            }
        }
        Some(name) => {
            let mut lines = raw.lines().enumerate();
            let (_, header) = lines
                .next()
                .ok_or_else(|| CliError::Data("empty file".into()))?;
            let cols: Vec<&str> = header.split(',').map(|c| c.trim()).collect();
            let idx = cols.iter().position(|c| c == name).ok_or_else(|| {
                CliError::Data(format!(
                    "column '{name}' not found in header: {}",
                    header.trim()
                ))
            })?;
            for (lineno, line) in lines {
                let t = line.trim();
                if t.is_empty() {
                    continue;
                }
                let fields: Vec<&str> = t.split(',').collect();
                let field = fields.get(idx).ok_or_else(|| {
                    CliError::Data(format!("line {}: missing column {}", lineno + 1, idx + 1))
                })?;
                let v: f64 = field.trim().parse().map_err(|_| {
                    CliError::Data(format!(
                        "line {}: cannot parse '{}' as a number",
                        lineno + 1,
                        field.trim()
                    ))
                })?;
                values.push(v);
            }
        }
    }
    Sample::new(values).map_err(|e| CliError::Data(e.to_string()))
}

fn cmd_test(args: &TestArgs) -> Result<String, CliError> {
    let sample = parse_data_file(&args.input, &args.column)?;
    let a = TuningParam::new(args.a).map_err(usage)?;
    if !(args.alpha > 0.0 && args.alpha < 1.0) {
        return Err(CliError::Usage(format!(
            "alpha must lie in (0,1), got {}",
            args.alpha
        )));
    }
    let t = statistic(&sample, a);
    let critical = pearson_quantile(a, 1.0 - args.alpha).map_err(numeric)?;
    let p = pearson_p_value(a, t).map_err(numeric)?.clamp(0.0, 1.0);
    let n = sample.n();

    let mut warning = None;
    let sigma2_hat = if args.ci || args.neighbourhood.is_some() {
        match variance_estimate(&sample, a) {
            Ok(v) => Some(v.sigma2_hat),
            Err(e) => {
                warning = Some(e.to_string());
                None
            }
        }
    } else {
        None
    };

    let confidence = if args.ci {
        match confidence_interval(&sample, a, args.alpha) {
            Ok(ci) => Some(ReportInterval {
                lower: ci.lower,
                upper: ci.upper,
                level: ci.level,
            }),
            Err(expgof::Error::DegenerateVariance(v)) => {
                warning = Some(expgof::Error::DegenerateVariance(v).to_string());
                None
            }
            Err(e) => return Err(numeric(e)),
        }
    } else {
        None
    };

    let neighbourhood = match args.neighbourhood {
        None => None,
        Some(dt) => match neighbourhood_test(&sample, a, dt, args.alpha) {
            Ok(d) => Some(ReportNeighbourhood {
                delta_tilde: dt,
                decision: match d {
                    NeighbourhoodDecision::Reject => "reject_neighbourhood_null",
                    NeighbourhoodDecision::Retain => "retain",
                },
            }),
            Err(expgof::Error::DegenerateVariance(v)) => {
                warning = Some(expgof::Error::DegenerateVariance(v).to_string());
                None
            }
            Err(expgof::Error::Domain(m)) => return Err(CliError::Usage(m)),
            Err(e) => return Err(numeric(e)),
        },
    };

    let oracle_check = if args.verify {
        Some(statistic_g_oracle(&sample, a).map_err(numeric)?)
    } else {
        None
    };

    let report = TestReport {
        n,
        a: args.a,
        alpha: args.alpha,
        statistic: t,
        critical_value: critical,
        approx_p_value: p,
        decision: if t > critical { "reject" } else { "retain" },
        delta_hat: t / n as f64,
        sigma2_hat,
        confidence_interval: confidence,
        neighbourhood,
        oracle_check,
        warning,
    };
    Ok(serde_json::to_string_pretty(&report).expect("report serialises"))
}

fn cmd_quantile(args: &QuantileArgs) -> Result<String, CliError> {
    let a = TuningParam::new(args.a).map_err(usage)?;
    if !(args.q > 0.0 && args.q < 1.0) {
        return Err(CliError::Usage(format!(
            "quantile level must lie in (0,1), got {}",
            args.q
        )));
    }
    let (backend, value) = match args.backend {
        QuantileBackend::Pearson => ("pearson", pearson_quantile(a, args.q).map_err(numeric)?),
        QuantileBackend::Series => (
            "series",
            series_quantile(a, args.q, args.terms, args.reps, args.seed).map_err(numeric)?,
        ),
    };
    #[derive(Serialize)]
    struct Out<'a> {
        a: f64,
        q: f64,
        backend: &'a str,
        value: f64,
    }
    Ok(serde_json::to_string_pretty(&Out {
        a: args.a,
        q: args.q,
        backend,
        value,
    })
    .unwrap())
}

fn cmd_spectrum(args: &SpectrumArgs) -> Result<String, CliError> {
    let a = TuningParam::new(args.a).map_err(usage)?;
    let s = eigen_spectrum(a, args.count).map_err(numeric)?;
    #[derive(Serialize)]
    struct Out {
        a: f64,
        nu: f64,
        zeros: Vec<f64>,
        lambdas: Vec<f64>,
    }
    Ok(serde_json::to_string_pretty(&Out {
        a: s.a,
        nu: s.nu.value(),
        zeros: s.zeros,
        lambdas: s.lambdas,
    })
    .unwrap())
}

fn cmd_cumulants(args: &CumulantsArgs) -> Result<String, CliError> {
    let a = TuningParam::new(args.a).map_err(usage)?;
    let c = cumulants(a);
    #[derive(Serialize)]
    struct Out {
        a: f64,
        kappa: [f64; 4],
    }
    Ok(serde_json::to_string_pretty(&Out {
        a: c.a,
        kappa: c.kappa,
    })
    .unwrap())
}

fn build_model(
    family: &str,
    beta: Option<f64>,
    theta: Option<f64>,
) -> Result<AlternativeModel, CliError> {
    let model = match family.to_ascii_lowercase().as_str() {
        "exponential" | "exp" => AlternativeModel::Exponential,
        "gamma_bb" => AlternativeModel::GammaBetaBeta {
            beta: beta.ok_or_else(|| CliError::Usage("gamma_bb needs --beta".into()))?,
        },
        "weibull" => AlternativeModel::Weibull {
            theta: theta.ok_or_else(|| CliError::Usage("weibull needs --theta".into()))?,
        },
        "gamma_theta" => AlternativeModel::GammaTheta {
            theta: theta.ok_or_else(|| CliError::Usage("gamma_theta needs --theta".into()))?,
        },
        "lfr" => AlternativeModel::Lfr {
            theta: theta.ok_or_else(|| CliError::Usage("lfr needs --theta".into()))?,
        },
        "emnw" => AlternativeModel::Emnw {
            beta: beta.unwrap_or(3.0),
            theta: theta.ok_or_else(|| CliError::Usage("emnw needs --theta".into()))?,
        },
        "makeham" => AlternativeModel::Makeham {
            theta: theta.ok_or_else(|| CliError::Usage("makeham needs --theta".into()))?,
        },
        other => {
            return Err(CliError::Usage(format!(
                "unknown family '{other}' (expected exponential, gamma_bb, weibull, gamma_theta, lfr, emnw or makeham)"
            )))
        }
    };
    model.validate().map_err(usage)?;
    Ok(model)
}

fn cmd_delta(args: &DeltaArgs) -> Result<String, CliError> {
    let a = TuningParam::new(args.a).map_err(usage)?;
    let model = build_model(&args.family, args.beta, args.theta)?;
    let scaled = ScaledModel::new(model).map_err(numeric)?;
    let delta = scaled.delta(a).map_err(numeric)?;
    let sigma2 = if args.with_sigma2 {
        Some(scaled.sigma2(a).map_err(numeric)?)
    } else {
        None
    };
    #[derive(Serialize)]
    struct Out {
        family: String,
        a: f64,
        mean: f64,
        delta: f64,
        #[serde(skip_serializing_if = "Option::is_none")]
        sigma2: Option<f64>,
    }
    Ok(serde_json::to_string_pretty(&Out {
        family: model.label(),
        a: args.a,
        mean: scaled.mu(),
        delta,
        sigma2,
    })
    .unwrap())
}

fn cmd_slope(args: &SlopeArgs) -> Result<String, CliError> {
    let a = TuningParam::new(args.a).map_err(usage)?;
    let family = LocalFamily::parse(&args.family).map_err(usage)?;
    let r = efficiency(family, a).map_err(numeric)?;
    #[derive(Serialize)]
    struct Out {
        family: &'static str,
        a: f64,
        b2: f64,
        kl: f64,
        eff: f64,
    }
    Ok(serde_json::to_string_pretty(&Out {
        family: family.label(),
        a: r.a,
        b2: r.b2,
        kl: r.kl,
        eff: r.eff,
    })
    .unwrap())
}

fn cmd_study(args: &StudyArgs) -> Result<String, CliError> {
    let raw = std::fs::read_to_string(&args.config)
        .map_err(|e| CliError::Data(format!("cannot read {}: {e}", args.config.display())))?;
    let mut config: StudyConfig = serde_json::from_str(&raw)
        .map_err(|e| CliError::Data(format!("config parse error: {e}")))?;
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    if let Some(workers) = args.workers {
        config.workers = workers;
    }
    config.validate().map_err(usage)?;

    let result = match args.kind {
        StudyKind::Power => power_study(&config).map_err(numeric)?,
        StudyKind::Coverage => coverage_study(&config).map_err(numeric)?,
        StudyKind::Limit => limit_table(&config).map_err(numeric)?,
        StudyKind::NullQuantiles => {
            let qs = [0.9, 0.95, 0.99];
            let mut cells = Vec::new();
            for &a in &config.a_grid {
                let tp = TuningParam::new(a).map_err(usage)?;
                for &n in &config.n_grid {
                    let vals =
                        null_quantiles(tp, n, config.reps, &qs, config.seed).map_err(numeric)?;
                    for (q, v) in qs.iter().zip(vals) {
                        cells.push(expgof::mc::CellRecord {
                            metric: format!("null_q{q}"),
                            a,
                            family: "exponential".into(),
                            n,
                            estimate: v,
                            mc_stderr: None,
                            reps: config.reps,
                        });
                    }
                }
            }
            expgof::mc::StudyResult {
                study: "null_quantiles".into(),
                cells,
            }
        }
    };

    let rendered = match args.format {
        OutputFormat::Json => result.to_json(),
        OutputFormat::Csv => result.to_csv(),
    };
    if let Some(path) = &args.out {
        std::fs::write(path, &rendered)
            .map_err(|e| CliError::Data(format!("cannot write {}: {e}", path.display())))?;
        Ok(format!(
            "wrote {} cells to {}",
            result.cells.len(),
            path.display()
        ))
    } else {
        Ok(rendered)
    }
}

fn dispatch(cli: Cli) -> Result<String, CliError> {
    match &cli.command {
        Command::Test(a) => cmd_test(a),
        Command::Quantile(a) => cmd_quantile(a),
        Command::Spectrum(a) => cmd_spectrum(a),
        Command::Cumulants(a) => cmd_cumulants(a),
        Command::Delta(a) => cmd_delta(a),
        Command::Slope(a) => cmd_slope(a),
        Command::Study(a) => cmd_study(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            // help and version requests are not errors
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return ExitCode::SUCCESS;
            }
            eprint!("{e}");
            return ExitCode::from(1);
        }
    };
    match dispatch(cli) {
        Ok(out) => {
            println!("{out}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.code())
        }
    }
}
