//! `assoc-totient`: constants, totients, scans and series reports for
//! polynomial Euler products.

mod config;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use assoc_totient::analysis::{emit_report, series_report, Report, ReportFormat, ResidualReport};
use assoc_totient::euler::ConstantMethod;
use assoc_totient::selftest::{self, SelftestOptions};
use assoc_totient::sieve::{
    build_spf, bulk_alpha, bulk_coeff, bulk_phi_ratio, check_scan_memory, checkpoints_csv, fmt17,
    geometric_checkpoints, scan, DEFAULT_MEMORY_CAP,
};
use assoc_totient::{
    c_constant, c_constant_within_coverage, BuildOptions, ConstantResult, Error, EulerProductSpec, ProductDescriptor,
    Result,
};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{Map, Value};

use config::{parse_bytes, parse_checkpoints, parse_count, parse_real, ConfigFile};

/// `eprintln!` that ignores a closed stderr.
macro_rules! note {
    ($($arg:tt)*) => {{
        let _ = writeln!(std::io::stderr(), $($arg)*);
    }};
}

const EXIT_HELP: &str = "\
Exit codes:
  0  success
  1  other failure (I/O, failed selftest)
  2  eigenvalue data does not cover a needed prime
  3  malformed product spec, command line, config or data file
  4  argument outside its domain (range, checkpoint, tolerance, memory cap)

Product specs:
  zeta
  dirichlet:q=<Q>,index=<e1.e2...>
  gl2:source=delta[,chi=q=<Q>,index=<e1.e2...>]
  gl2:source=file:<path>[,chi=q=<Q>,index=<e1.e2...>]";

#[derive(Parser, Debug)]
#[command(name = "assoc-totient", version, about = "Associated Euler totients of polynomial Euler products", after_help = EXIT_HELP)]
struct Cli {
    /// Worker threads (default: available parallelism). Never changes output.
    #[arg(long, global = true, value_parser = parse_count)]
    threads: Option<u64>,

    /// Memory cap in bytes; accepts K/M/G suffixes [default: 2G].
    #[arg(long, global = true, value_parser = parse_bytes)]
    memory_cap: Option<u64>,

    /// Output format.
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,

    /// Write the main output here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Accept eigenvalue tables with |lambda(p)| > 2.
    #[arg(long, global = true)]
    allow_ramanujan_violations: bool,

    /// Tau coefficients computed for gl2:source=delta [default: 10000].
    #[arg(long, global = true, value_parser = parse_count)]
    delta_terms: Option<u64>,

    /// key=value file mirroring the flags; flags win.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
    PlotData,
}

impl From<Format> for ReportFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Csv => ReportFormat::Csv,
            Format::Json => ReportFormat::Json,
            Format::PlotData => ReportFormat::PlotData,
        }
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Main-term constant C(F) with its tail bound.
    Const {
        spec: String,
        #[command(flatten)]
        tol: TolArg,
    },
    /// phi(n, F) by the product formula and by the divisor sum.
    Phi {
        spec: String,
        #[arg(value_parser = parse_count)]
        n: u64,
    },
    /// Checkpointed summatory scan up to X, with a residual summary on stderr.
    Scan {
        spec: String,
        /// Upper end X of the scan.
        #[arg(long, value_parser = parse_count)]
        xmax: Option<u64>,
        /// Comma-separated checkpoints [default: round(10^(k/4)) for k >= 4].
        #[arg(long, value_delimiter = ',', value_parser = parse_count)]
        checkpoints: Option<Vec<u64>>,
        #[command(flatten)]
        tol: TolArg,
    },
    /// sum alpha(n)/n^2 against 2C, the h table and the constant identity.
    Series {
        spec: String,
        #[arg(long, value_parser = parse_count)]
        nmax: Option<u64>,
        #[command(flatten)]
        tol: TolArg,
    },
    /// Table of phi(n,F)/n, alpha, a_F or h for n <= N.
    Dump {
        spec: String,
        #[arg(long, value_parser = parse_count)]
        nmax: Option<u64>,
        #[arg(long, value_enum, default_value = "phi")]
        what: DumpWhat,
    },
    /// Run the embedded acceptance checks and print a pass/fail table.
    Selftest {
        /// Smaller runs; finishes well under a minute.
        #[arg(long)]
        quick: bool,
        /// Also scan a twisted form from this eigenvalue table.
        #[arg(long)]
        eigenvalues: Option<PathBuf>,
    },
}

#[derive(Args, Debug)]
struct TolArg {
    /// Relative tolerance for C(F) [default: 1e-12].
    #[arg(long, value_parser = parse_real)]
    tol: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum DumpWhat {
    /// phi(n, F) / n
    Phi,
    Alpha,
    /// Dirichlet coefficients a_F(n)
    Coeff,
    H,
}

/// Flags merged with the config file.
struct Settings {
    memory_cap: u64,
    format: Option<Format>,
    out: Option<PathBuf>,
    build: BuildOptions,
    config: ConfigFile,
}

impl Settings {
    fn tol(&self, flag: Option<f64>) -> Result<f64> {
        Ok(flag.or(self.config.real("tol")?).unwrap_or(1e-12))
    }

    fn count(&self, flag: Option<u64>, key: &'static str) -> Result<u64> {
        flag.or(self.config.count(key)?)
            .ok_or_else(|| Error::Domain(format!("--{key} is required")))
    }

    fn spec(&self, s: &str) -> Result<(ProductDescriptor, EulerProductSpec)> {
        let desc: ProductDescriptor = s.parse()?;
        let spec = desc.build(&self.build)?;
        Ok((desc, spec))
    }

    fn emit(&self, bytes: &[u8]) -> Result<()> {
        match &self.out {
            Some(path) => std::fs::write(path, bytes).map_err(|source| Error::Io {
                path: path.clone(),
                source,
            }),
            None => {
                let mut stdout = std::io::stdout().lock();
                stdout
                    .write_all(bytes)
                    .and_then(|_| stdout.flush())
                    .map_err(|source| Error::Io {
                        path: PathBuf::from("<stdout>"),
                        source,
                    })
            }
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::DataGap { .. } => 2,
        Error::Parse { .. } | Error::FileFormat { .. } | Error::RamanujanViolation { .. } => 3,
        Error::Domain(_) | Error::MemoryCap { .. } | Error::InsufficientPoints { .. } => 4,
        Error::Io { .. } => 1,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 3 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            note!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn run(cli: Cli) -> Result<u8> {
    let config = match &cli.config {
        Some(p) => ConfigFile::load(p)?,
        None => ConfigFile::default(),
    };
    let threads = cli.threads.or(config.count("threads")?);
    if let Some(t) = threads {
        if t == 0 {
            return Err(Error::Domain("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(t as usize)
            .build_global()
            .map_err(|e| Error::Domain(e.to_string()))?;
    }
    let memory_cap = match cli.memory_cap {
        Some(v) => v,
        None => match config.get("memory-cap") {
            Some(v) => parse_bytes(v).map_err(|r| Error::parse("memory-cap", v, r))?,
            None => DEFAULT_MEMORY_CAP,
        },
    };
    let format = match cli.format {
        Some(f) => Some(f),
        None => config
            .get("format")
            .map(|v| {
                Format::from_str(v, false).map_err(|_| Error::parse("format", v, "expected csv, json or plot-data"))
            })
            .transpose()?,
    };
    let delta_terms = cli.delta_terms.or(config.count("delta-terms")?);
    let settings = Settings {
        memory_cap,
        format,
        out: cli.out.or_else(|| config.get("out").map(PathBuf::from)),
        build: BuildOptions {
            allow_ramanujan_violations: cli.allow_ramanujan_violations || config.flag("allow-ramanujan-violations")?,
            delta_terms: delta_terms.map_or(BuildOptions::default().delta_terms, |t| t as usize),
        },
        config,
    };

    match cli.command {
        Command::Const { spec, tol } => cmd_const(&settings, &spec, tol.tol),
        Command::Phi { spec, n } => cmd_phi(&settings, &spec, n),
        Command::Scan {
            spec,
            xmax,
            checkpoints,
            tol,
        } => cmd_scan(&settings, &spec, xmax, checkpoints, tol.tol),
        Command::Series { spec, nmax, tol } => cmd_series(&settings, &spec, nmax, tol.tol),
        Command::Dump { spec, nmax, what } => cmd_dump(&settings, &spec, nmax, what),
        Command::Selftest { quick, eigenvalues } => cmd_selftest(&settings, quick, eigenvalues),
    }
}

fn method_name(m: ConstantMethod) -> &'static str {
    match m {
        ConstantMethod::EulerProduct => "euler-product",
        ConstantMethod::LValue => "l-value",
    }
}

/// Flat key/value record printed as `key: value` lines, one CSV row or a JSON object.
fn emit_record(settings: &Settings, what: &str, fields: &[(&str, String)]) -> Result<()> {
    let text = match settings.format {
        None => fields.iter().map(|(k, v)| format!("{k}: {v}\n")).collect::<String>(),
        Some(Format::Csv) => {
            let keys: Vec<&str> = fields.iter().map(|f| f.0).collect();
            let vals: Vec<&str> = fields.iter().map(|f| f.1.as_str()).collect();
            format!("{}\n{}\n", keys.join(","), vals.join(","))
        }
        Some(Format::Json) => {
            let mut m = Map::new();
            m.insert("schema".into(), Value::from(1));
            m.insert("report".into(), Value::from(what));
            for (k, v) in fields {
                let value = v
                    .parse::<serde_json::Number>()
                    .map(Value::Number)
                    .unwrap_or_else(|_| Value::String(v.clone()));
                m.insert((*k).into(), value);
            }
            let mut s = serde_json::to_string_pretty(&Value::Object(m)).expect("JSON values serialize");
            s.push('\n');
            s
        }
        Some(Format::PlotData) => {
            return Err(Error::Domain(format!("plot-data output is not available for `{what}`")));
        }
    };
    settings.emit(text.as_bytes())
}

fn cmd_const(settings: &Settings, spec: &str, tol: Option<f64>) -> Result<u8> {
    let (desc, spec) = settings.spec(spec)?;
    let c = c_constant(&spec, settings.tol(tol)?)?;
    emit_record(
        settings,
        "constant",
        &[
            ("spec", desc.to_string()),
            ("value_re", fmt17(c.value.re)),
            ("value_im", fmt17(c.value.im)),
            ("tail_bound", fmt17(c.tail_bound)),
            ("cutoff", c.cutoff.to_string()),
            ("method", method_name(c.method).to_string()),
        ],
    )?;
    Ok(0)
}

fn cmd_phi(settings: &Settings, spec: &str, n: u64) -> Result<u8> {
    if n == 0 {
        return Err(Error::Domain("n must be at least 1".into()));
    }
    let (desc, spec) = settings.spec(spec)?;
    let phi = spec.phi(n)?;
    let div = spec.phi_via_divisors(n)?;
    let gap = (phi - div).norm() / phi.norm().max(f64::MIN_POSITIVE);
    emit_record(
        settings,
        "phi",
        &[
            ("spec", desc.to_string()),
            ("n", n.to_string()),
            ("phi_re", fmt17(phi.re)),
            ("phi_im", fmt17(phi.im)),
            ("divisor_sum_re", fmt17(div.re)),
            ("divisor_sum_im", fmt17(div.im)),
            ("relative_gap", fmt17(gap)),
        ],
    )?;
    Ok(0)
}

/// `c_constant`, falling back to every covered prime for eigenvalue tables.
fn scan_constant(spec: &EulerProductSpec, tol: f64) -> Result<ConstantResult> {
    let c = c_constant_within_coverage(spec, tol)?;
    if c.tail_bound > tol {
        note!(
            "note: C(F) uses every covered prime (cutoff {}); tail bound {:.3e} is above the requested {tol:e}",
            c.cutoff,
            c.tail_bound
        );
    }
    Ok(c)
}

fn cmd_scan(
    settings: &Settings,
    spec: &str,
    xmax: Option<u64>,
    checkpoints: Option<Vec<u64>>,
    tol: Option<f64>,
) -> Result<u8> {
    let (desc, spec) = settings.spec(spec)?;
    let x = settings.count(xmax, "xmax")?;
    if x == 0 {
        return Err(Error::Domain("--xmax must be at least 1".into()));
    }
    let cps = match checkpoints {
        Some(c) => c,
        None => match settings.config.get("checkpoints") {
            Some(v) => parse_checkpoints(v).map_err(|r| Error::parse("checkpoints", v, r))?,
            None => geometric_checkpoints(x),
        },
    };
    check_scan_memory(x, cps.len(), rayon::current_num_threads(), settings.memory_cap)?;
    spec.ensure_covers(x)?;
    let c = scan_constant(&spec, settings.tol(tol)?)?;
    let rows = scan(&spec, x, &cps, &c)?;
    let report = ResidualReport::new(desc.to_string(), c, &rows);
    let bytes = match settings.format {
        None | Some(Format::Csv) => checkpoints_csv(&rows).into_bytes(),
        Some(f) => emit_report(Report::Residual(&report), f.into()),
    };
    settings.emit(&bytes)?;
    print_residual_summary(&report);
    Ok(0)
}

fn print_residual_summary(r: &ResidualReport) {
    note!(
        "C(F) = {} (tail bound {:.3e}, {})",
        r.constant.value,
        r.constant.tail_bound,
        method_name(r.constant.method)
    );
    match r.fit {
        Some(f) => note!(
            "fit log|R| ~ {:.4} + {:.4} sqrt(log x) over {} checkpoints ({} excluded)",
            f.intercept,
            f.slope,
            f.used,
            f.excluded
        ),
        None => note!("fit: fewer than 3 checkpoints with |R| > 1e-14"),
    }
    if let Some(t) = r.trend {
        note!(
            "max |R| = {:.6e} at x = {}; |R| rises {} time(s) between checkpoints",
            t.max_abs_r,
            t.argmax_x,
            t.monotonicity_violations
        );
    }
    note!(
        "smoothed-sum identity: worst scaled gap {:.3e} ({})",
        r.max_cross_check,
        if r.cross_check_ok() { "ok" } else { "VIOLATED" }
    );
}

fn cmd_series(settings: &Settings, spec: &str, nmax: Option<u64>, tol: Option<f64>) -> Result<u8> {
    let (_, spec) = settings.spec(spec)?;
    let n = settings.count(nmax, "nmax")?;
    check_table_memory(n, settings.memory_cap)?;
    let c = scan_constant(&spec, settings.tol(tol)?)?;
    let report = series_report(&spec, n, &c)?;
    let bytes = emit_report(Report::Series(&report), settings.format.unwrap_or(Format::Csv).into());
    settings.emit(&bytes)?;
    note!(
        "sum alpha(n)/n^2 up to {n} = {}; 2C = {}; gap {:.3e}",
        report.series.partial,
        report.series.target,
        report.series.gap
    );
    note!("H(2)/F(2) truncated: gap to 2C {:.3e}", report.identity.ratio_gap);
    note!(
        "max |h(n)| over squarefree n <= {n}: {:.6} at n = {}",
        report.h_max_squarefree,
        report.h_argmax
    );
    Ok(0)
}

/// Bulk tables hold a small-prime-factor entry and three complex values per `n`.
fn check_table_memory(n: u64, cap: u64) -> Result<()> {
    let required = n.saturating_mul(4 + 3 * 16);
    if required > cap {
        return Err(Error::MemoryCap { required, cap });
    }
    Ok(())
}

fn cmd_dump(settings: &Settings, spec: &str, nmax: Option<u64>, what: DumpWhat) -> Result<u8> {
    let (desc, spec) = settings.spec(spec)?;
    let n = settings.count(nmax, "nmax")?;
    if n == 0 {
        return Err(Error::Domain("--nmax must be at least 1".into()));
    }
    check_table_memory(n, settings.memory_cap)?;
    let values = match what {
        DumpWhat::H => assoc_totient::analysis::h_values(&spec, n)?,
        _ => {
            let table = build_spf(n.max(2), settings.memory_cap)?;
            let mut v = match what {
                DumpWhat::Phi => bulk_phi_ratio(&spec, &table, settings.memory_cap)?,
                DumpWhat::Alpha => bulk_alpha(&spec, &table)?,
                _ => bulk_coeff(&spec, &table)?,
            };
            v.truncate(n as usize);
            v
        }
    };
    let name = match what {
        DumpWhat::Phi => "phi_over_n",
        DumpWhat::Alpha => "alpha",
        DumpWhat::Coeff => "coeff",
        DumpWhat::H => "h",
    };
    let mut out = String::new();
    match settings.format.unwrap_or(Format::Csv) {
        Format::Csv => {
            out.push_str(&format!("n,{name}_re,{name}_im\n"));
            for (i, v) in values.iter().enumerate() {
                out.push_str(&format!("{},{},{}\n", i + 1, fmt17(v.re), fmt17(v.im)));
            }
        }
        Format::PlotData => {
            out.push_str(&format!("# n abs_{name}\n"));
            for (i, v) in values.iter().enumerate() {
                out.push_str(&format!("{} {}\n", i + 1, fmt17(v.norm())));
            }
        }
        Format::Json => {
            let rows: Vec<Value> = values
                .iter()
                .enumerate()
                .map(|(i, v)| {
                    let mut m = Map::new();
                    m.insert("n".into(), Value::from(i + 1));
                    m.insert("re".into(), num(v.re));
                    m.insert("im".into(), num(v.im));
                    Value::Object(m)
                })
                .collect();
            let mut m = Map::new();
            m.insert("schema".into(), Value::from(1));
            m.insert("report".into(), Value::from("dump"));
            m.insert("spec".into(), Value::from(desc.to_string()));
            m.insert("table".into(), Value::from(name));
            m.insert("values".into(), Value::Array(rows));
            out = serde_json::to_string_pretty(&Value::Object(m)).expect("JSON values serialize");
            out.push('\n');
        }
    }
    settings.emit(out.as_bytes())?;
    Ok(0)
}

fn num(v: f64) -> Value {
    if v.is_finite() {
        Value::Number(fmt17(v).parse().expect("formatted float is valid JSON"))
    } else {
        Value::Null
    }
}

fn cmd_selftest(settings: &Settings, quick: bool, eigenvalues: Option<PathBuf>) -> Result<u8> {
    let opts = SelftestOptions {
        quick,
        eigenvalue_file: eigenvalues,
        allow_ramanujan_violations: settings.build.allow_ramanujan_violations,
    };
    let rows = selftest::run(&opts);
    settings.emit(selftest::format_table(&rows).as_bytes())?;
    let failed = rows.iter().filter(|r| r.passed == Some(false)).count();
    note!(
        "{} passed, {failed} failed, {} skipped",
        rows.iter().filter(|r| r.passed == Some(true)).count(),
        rows.iter().filter(|r| r.passed.is_none()).count()
    );
    Ok(if failed == 0 { 0 } else { 1 })
}
