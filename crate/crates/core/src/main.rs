use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use log::info;

use belief_clt::gauss::{bvn_cdf, BvnParams};
use belief_clt::harness::{
    evaluate_one_sided, evaluate_two_sided, fit_rate, special_cases, FitStatus,
    VerificationReport, RATE_SLOPE_BAND,
};
use belief_clt::io::{
    self, format_float, load_model, load_plan, read_report_csv, write_csv, CsvRow, MomentsRow,
    OutputFormat, RatePointRow, RunConfig, SimRow,
};
use belief_clt::moments::{
    moments_by_enumeration, moments_by_integration, ChoquetMoments, DEFAULT_QUAD_TOL,
};
use belief_clt::montecarlo::{estimate_events_with_workers, workers_from_env, SimPlan, WORKERS_ENV};

#[derive(Parser, Debug)]
#[command(
    name = "belief-clt",
    version,
    about = "Limit parameters, Gaussian limits and simulation checks for i.i.d. belief measures",
    after_help = "Worker threads: set BELIEF_CLT_WORKERS (default: number of logical cores)."
)]
struct Cli {
    /// Override the plan's seed
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Override the plan's replications per n
    #[arg(long, global = true)]
    reps: Option<u64>,
    /// Write CSV files and summaries here instead of stdout
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// More logging (-v debug, -vv trace)
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Format {
    Csv,
    Text,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Limit parameters of a model by enumeration and by integration
    Moments {
        model: PathBuf,
        #[arg(long, default_value_t = DEFAULT_QUAD_TOL)]
        quad_tol: f64,
    },
    /// Standard bivariate normal CDF P(U <= a, V <= b) with correlation rho
    #[command(allow_negative_numbers = true)]
    Bvn { a: f64, b: f64, rho: f64 },
    /// Event frequencies for every (n, event) of a plan
    Simulate { plan: PathBuf },
    /// One-sided frequencies against 1 - Phi(alpha) and Phi(alpha)
    VerifyOneSided { plan: PathBuf },
    /// Two-sided frequencies against the bivariate normal limit
    VerifyTwoSided { plan: PathBuf },
    /// Bernoulli moments, additive degeneration and bound invariance
    SpecialCases,
    /// Log-log fit of the max deviation per n in a report CSV
    RateFit { report: PathBuf },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Moments { .. } => "moments",
            Command::Bvn { .. } => "bvn",
            Command::Simulate { .. } => "simulate",
            Command::VerifyOneSided { .. } => "verify-one-sided",
            Command::VerifyTwoSided { .. } => "verify-two-sided",
            Command::SpecialCases => "special-cases",
            Command::RateFit { .. } => "rate-fit",
        }
    }

    fn input(&self) -> Option<PathBuf> {
        match self {
            Command::Moments { model: p, .. }
            | Command::Simulate { plan: p }
            | Command::VerifyOneSided { plan: p }
            | Command::VerifyTwoSided { plan: p }
            | Command::RateFit { report: p } => Some(p.clone()),
            Command::Bvn { .. } | Command::SpecialCases => None,
        }
    }
}

struct BvnRow {
    a: f64,
    b: f64,
    rho: f64,
    cdf: f64,
}

impl CsvRow for BvnRow {
    fn schema() -> &'static [&'static str] {
        &["a", "b", "rho", "cdf"]
    }

    fn record(&self) -> Vec<String> {
        [self.a, self.b, self.rho, self.cdf].iter().map(|&x| format_float(x)).collect()
    }
}

type Failure = Box<dyn std::error::Error>;

struct Output<'a> {
    config: &'a RunConfig,
}

impl Output<'_> {
    fn table<R: CsvRow>(&self, rows: &[R], file_name: &str) -> Result<(), Failure> {
        let mut buf = Vec::new();
        match self.config.format {
            OutputFormat::Csv => write_csv(rows, &mut buf)?,
            OutputFormat::Text => buf.extend(render_text(rows).into_bytes()),
        }
        match &self.config.out_dir {
            Some(dir) => {
                let path = dir.join(match self.config.format {
                    OutputFormat::Csv => format!("{file_name}.csv"),
                    OutputFormat::Text => format!("{file_name}.txt"),
                });
                fs::write(&path, buf)?;
                info!("wrote {}", path.display());
            }
            None => std::io::stdout().write_all(&buf)?,
        }
        Ok(())
    }

    fn summary(&self, text: &str, file_name: &str) -> Result<(), Failure> {
        match &self.config.out_dir {
            Some(dir) => {
                let path = dir.join(format!("{file_name}_summary.txt"));
                fs::write(&path, format!("{text}\n"))?;
                println!("{text}");
            }
            None => eprintln!("{text}"),
        }
        Ok(())
    }
}

fn render_text<R: CsvRow>(rows: &[R]) -> String {
    let header: Vec<String> = R::schema().iter().map(|s| s.to_string()).collect();
    let records: Vec<Vec<String>> = rows.iter().map(CsvRow::record).collect();
    let mut widths: Vec<usize> = header.iter().map(String::len).collect();
    for r in &records {
        for (w, cell) in widths.iter_mut().zip(r) {
            *w = (*w).max(cell.len());
        }
    }
    let mut out = String::new();
    for line in std::iter::once(&header).chain(&records) {
        let cells: Vec<String> = line
            .iter()
            .zip(&widths)
            .map(|(c, &w)| format!("{c:>w$}"))
            .collect();
        out.push_str(cells.join("  ").trim_end());
        out.push('\n');
    }
    out
}

fn load_resolved_plan(path: &Path, config: &RunConfig) -> Result<SimPlan, Failure> {
    let mut plan = load_plan(path)?;
    config.apply(&mut plan);
    plan.validate()?;
    info!("plan: {}", io::plan_to_line(&plan));
    Ok(plan)
}

fn report_outputs(out: &Output, report: &VerificationReport, tag: &str) -> Result<bool, Failure> {
    let name = format!("{}_{tag}", report.run_id);
    out.table(&report.rows, &name)?;
    if let Some(fit) = &report.rate_fit {
        let points: Vec<RatePointRow> = fit.points.iter().copied().map(RatePointRow).collect();
        if out.config.out_dir.is_some() {
            out.table(&points, &format!("{name}_rate_fit"))?;
        }
    }
    out.summary(&report.summary(), &name)?;
    Ok(report.all_pass())
}

fn run(cli: Cli) -> Result<bool, Failure> {
    let config = RunConfig {
        command: cli.command.name().to_string(),
        input: cli.command.input(),
        seed: cli.seed,
        reps: cli.reps,
        out_dir: cli.out_dir.clone(),
        format: match cli.format {
            Format::Csv => OutputFormat::Csv,
            Format::Text => OutputFormat::Text,
        },
        verbosity: cli.verbose,
        workers: workers_from_env(),
    };
    config.check()?;
    info!("config: {config} ({WORKERS_ENV} controls workers)");
    let out = Output { config: &config };

    match cli.command {
        Command::Moments { model, quad_tol } => {
            let model = load_model(&model)?;
            info!("model: {}", io::model_to_string(&model).trim_end().replace('\n', "; "));
            let enumerated = moments_by_enumeration(&model)?;
            let integrated = moments_by_integration(&model, quad_tol)?;
            let [lower_mean, upper_mean, lower_sd, upper_sd, cross_moment, rho_prime, rho] =
                enumerated.deltas(&integrated);
            let delta = ChoquetMoments {
                bound: model.bound(),
                lower_mean,
                upper_mean,
                lower_sd,
                upper_sd,
                cross_moment,
                rho_prime,
                rho,
            };
            let rows = vec![
                MomentsRow { route: "enumeration".into(), moments: enumerated },
                MomentsRow { route: "integration".into(), moments: integrated },
                MomentsRow { route: "delta".into(), moments: delta },
            ];
            out.table(&rows, "moments")?;
            Ok(true)
        }
        Command::Bvn { a, b, rho } => {
            let cdf = bvn_cdf(&BvnParams::new(a, b, rho)?);
            out.table(&[BvnRow { a, b, rho, cdf }], "bvn")?;
            Ok(true)
        }
        Command::Simulate { plan } => {
            let plan = load_resolved_plan(&plan, &config)?;
            let moments = moments_by_enumeration(&plan.model)?;
            let result = estimate_events_with_workers(&plan, &moments, config.workers)?;
            out.table(&SimRow::from_result(&result), &format!("{}_simulate", plan.run_id))?;
            Ok(true)
        }
        Command::VerifyOneSided { plan } => {
            let plan = load_resolved_plan(&plan, &config)?;
            let moments = moments_by_enumeration(&plan.model)?;
            let result = estimate_events_with_workers(&plan, &moments, config.workers)?;
            let report = evaluate_one_sided(&result, plan.slack);
            report_outputs(&out, &report, "verify_one_sided")
        }
        Command::VerifyTwoSided { plan } => {
            let plan = load_resolved_plan(&plan, &config)?;
            let moments = moments_by_enumeration(&plan.model)?;
            info!("rho = {}", format_float(moments.rho));
            let result = estimate_events_with_workers(&plan, &moments, config.workers)?;
            let report = evaluate_two_sided(&result, moments.rho, plan.slack)?;
            report_outputs(&out, &report, "verify_two_sided")
        }
        Command::SpecialCases => {
            let report = special_cases()?;
            report_outputs(&out, &report, "report")
        }
        Command::RateFit { report } => {
            let report = read_report_csv(&report)?;
            let fit = fit_rate(&report);
            let points: Vec<RatePointRow> = fit.points.iter().copied().map(RatePointRow).collect();
            let name = format!("{}_rate_fit", report.run_id);
            out.table(&points, &name)?;
            out.summary(&format!("{}: {}", report.run_id, fit.status), &name)?;
            Ok(match fit.status {
                FitStatus::Fitted { slope, .. } => {
                    (RATE_SLOPE_BAND.0..=RATE_SLOPE_BAND.1).contains(&slope)
                }
                FitStatus::InsufficientSignal { .. } => true,
            })
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "info",
        1 => "debug",
        _ => "trace",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
