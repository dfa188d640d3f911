//! `infconv` command-line front end.
//!
//! Data goes to `--out` or standard output; diagnostics go to standard
//! error. Exit status: 0 on success, 1 when a check fails, 2 on usage or
//! configuration errors.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use infconv::harness::apply_overrides;
use infconv::{
    builtin_corpus, distance_fn, min_time, moreau_fast, run_suite, CheckCase, CheckReport,
    CheckSelector, ConvCase, FuncSpec, GaugeSet, Grid, GridFn, SetSpec,
};

#[derive(Parser, Debug)]
#[command(
    name = "infconv",
    version,
    about = "Infimal convolutions, Moreau envelopes and minimal time functions on grids"
)]
struct Cli {
    /// Worker threads (default: all available cores). Results do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Infimal convolution `(f ⊕ φ)(x) = inf_w f(w) + φ(w − x)`.
    Envelope {
        /// FuncSpec JSON file, or a grid-function CSV (its grid is used).
        #[arg(long)]
        f: PathBuf,
        /// FuncSpec JSON file for the kernel φ.
        #[arg(long)]
        phi: PathBuf,
        /// Grid `lo:hi:n` or `lo:hi:n,lo:hi:n`; required for a JSON `--f`.
        #[arg(long, allow_hyphen_values = true)]
        grid: Option<String>,
        #[command(flatten)]
        output: Output,
    },
    /// Moreau envelope with `φ = α|·|²` via the fast separable transform.
    Moreau {
        #[arg(long)]
        f: PathBuf,
        #[arg(long)]
        alpha: f64,
        #[arg(long, allow_hyphen_values = true)]
        grid: Option<String>,
        #[command(flatten)]
        output: Output,
    },
    /// Minimal time function to a target under gauge dynamics.
    Mintime {
        /// SetSpec JSON file for the target.
        #[arg(long)]
        target: PathBuf,
        /// SetSpec JSON file for the dynamics set F.
        #[arg(long)]
        dynamics: PathBuf,
        #[arg(long, allow_hyphen_values = true)]
        grid: String,
        #[command(flatten)]
        output: Output,
    },
    /// Euclidean distance function to a target.
    Distance {
        #[arg(long)]
        target: PathBuf,
        #[arg(long, allow_hyphen_values = true)]
        grid: String,
        #[command(flatten)]
        output: Output,
    },
    /// Runs the check suite; exits 1 if any check fails or errors.
    Check(SuiteArgs),
    /// Runs the check suite and exports the records (CSV by default)
    /// without gating on the outcome.
    Report(SuiteArgs),
}

#[derive(Args, Debug)]
struct Output {
    /// Output file (default: standard output).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Args, Debug)]
struct SuiteArgs {
    /// `builtin` or a JSON file holding an array of cases.
    #[arg(long, default_value = "builtin")]
    corpus: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Comma-separated check ids, or `all`.
    #[arg(long, default_value = "all")]
    checks: String,
    /// Tolerance override `KEY=VAL`; repeatable.
    #[arg(long = "tol", value_name = "KEY=VAL")]
    tol: Vec<String>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Report format (default: json for `check`, csv for `report`).
    #[arg(long, value_enum)]
    format: Option<Format>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

/// A failure that maps to exit status 2.
#[derive(Debug)]
struct ConfigError(anyhow::Error);

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("error: --threads must be at least 1");
            return ExitCode::from(2);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
        {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    match run(cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {:#}", e.0);
            ExitCode::from(2)
        }
    }
}

fn run(command: Command) -> std::result::Result<bool, ConfigError> {
    let result = match command {
        Command::Envelope {
            f,
            phi,
            grid,
            output,
        } => envelope(&f, &phi, grid.as_deref()).and_then(|g| emit_fn(&g, &output)),
        Command::Moreau {
            f,
            alpha,
            grid,
            output,
        } => load_f(&f, grid.as_deref())
            .and_then(|g| Ok(moreau_fast(&g, alpha)?))
            .and_then(|g| emit_fn(&g, &output)),
        Command::Mintime {
            target,
            dynamics,
            grid,
            output,
        } => (|| {
            let target: SetSpec = read_json(&target)?;
            let dynamics: GaugeSet = read_json(&dynamics)?;
            emit_fn(&min_time(&target, &dynamics, &parse_grid(&grid)?)?, &output)
        })(),
        Command::Distance {
            target,
            grid,
            output,
        } => (|| {
            let target: SetSpec = read_json(&target)?;
            emit_fn(&distance_fn(&target, &parse_grid(&grid)?)?, &output)
        })(),
        Command::Check(args) => return suite(&args, Format::Json, true),
        Command::Report(args) => return suite(&args, Format::Csv, false),
    };
    result.map(|_| true).map_err(ConfigError)
}

fn parse_grid(text: &str) -> Result<Grid> {
    Grid::parse(text).with_context(|| format!("invalid --grid {text:?}"))
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    serde_json::from_str(&read_text(path)?)
        .with_context(|| format!("cannot parse {}", path.display()))
}

fn read_spec(path: &Path) -> Result<FuncSpec> {
    FuncSpec::from_json(&read_text(path)?)
        .with_context(|| format!("cannot parse {}", path.display()))
}

fn is_csv(path: &Path) -> bool {
    path.extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("csv"))
}

/// Loads `f` as a sampled grid function.
fn load_f(path: &Path, grid: Option<&str>) -> Result<GridFn> {
    if is_csv(path) {
        if grid.is_some() {
            bail!("--grid cannot be combined with a CSV --f; the CSV carries its own grid");
        }
        let file =
            fs::File::open(path).with_context(|| format!("cannot read {}", path.display()))?;
        return GridFn::read_csv(file).with_context(|| format!("cannot parse {}", path.display()));
    }
    let Some(grid) = grid else {
        bail!("--grid is required when --f is a JSON function")
    };
    Ok(read_spec(path)?.sample(&parse_grid(grid)?)?)
}

fn envelope(f: &Path, phi: &Path, grid: Option<&str>) -> Result<GridFn> {
    let phi = read_spec(phi)?;
    let case = if is_csv(f) {
        ConvCase::from_grid(load_f(f, grid)?, phi)?
    } else {
        let Some(grid) = grid else {
            bail!("--grid is required when --f is a JSON function")
        };
        ConvCase::from_spec(read_spec(f)?, phi, &parse_grid(grid)?)?
    };
    Ok(case.inf_conv_brute()?)
}

fn emit_fn(g: &GridFn, output: &Output) -> Result<()> {
    let text = match output.format {
        Format::Csv => g.to_csv_string(),
        Format::Json => {
            let grid = g.grid();
            let points: Vec<Vec<f64>> = (0..grid.len()).map(|i| grid.point(i)).collect();
            let value = serde_json::json!({
                "grid": grid.to_string(),
                "points": points,
                "values": g.values(),
            });
            serde_json::to_string_pretty(&value)? + "\n"
        }
    };
    write_out(output.out.as_deref(), &text)
}

fn write_out(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => fs::write(p, text).with_context(|| format!("cannot write {}", p.display())),
        None => {
            let mut out = std::io::stdout().lock();
            match out.write_all(text.as_bytes()).and_then(|_| out.flush()) {
                Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
                other => Ok(other?),
            }
        }
    }
}

fn parse_overrides(items: &[String]) -> Result<BTreeMap<String, f64>> {
    let mut map = BTreeMap::new();
    for item in items {
        let Some((key, val)) = item.split_once('=') else {
            bail!("--tol expects KEY=VAL, got {item:?}")
        };
        let val: f64 = val
            .trim()
            .parse()
            .with_context(|| format!("--tol {key}: not a number"))?;
        map.insert(key.trim().to_string(), val);
    }
    Ok(map)
}

fn load_corpus(spec: &str) -> Result<Vec<CheckCase>> {
    if spec == "builtin" {
        return Ok(builtin_corpus());
    }
    let path = Path::new(spec);
    let corpus = CheckCase::corpus_from_json(&read_text(path)?)
        .with_context(|| format!("cannot parse {spec}"))?;
    for case in &corpus {
        case.validate()
            .with_context(|| format!("case {:?}", case.id))?;
    }
    Ok(corpus)
}

fn suite(
    args: &SuiteArgs,
    default_format: Format,
    gate: bool,
) -> std::result::Result<bool, ConfigError> {
    let prepared = (|| {
        let mut corpus = load_corpus(&args.corpus)?;
        apply_overrides(&mut corpus, &parse_overrides(&args.tol)?)?;
        let selector: CheckSelector = args.checks.parse()?;
        Ok((corpus, selector))
    })();
    let (corpus, selector) = prepared.map_err(ConfigError)?;
    let report = run_suite(&corpus, &selector, args.seed);
    let text = match args.format.unwrap_or(default_format) {
        Format::Json => report.to_json(),
        Format::Csv => report.to_csv_string(),
    };
    write_out(args.out.as_deref(), &text).map_err(ConfigError)?;
    summarize(&report);
    Ok(!gate || report.all_passed())
}

fn summarize(report: &CheckReport) {
    let s = &report.summary;
    eprintln!(
        "{} records: {} pass, {} fail, {} skip, {} error",
        s.total, s.pass, s.fail, s.skip, s.error
    );
    for r in report
        .records
        .iter()
        .filter(|r| r.verdict.as_str() == "fail" || r.verdict.as_str() == "error")
    {
        eprintln!(
            "  {} {} {}: {} ({})",
            r.verdict.as_str(),
            r.check,
            r.case,
            r.note,
            r.anchor
        );
    }
}
