//! Command-line front end. Every subcommand prints one report in JSON, CSV or a
//! plain-text rendering; exit statuses follow [`crate::Error::exit_code`].

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::eigen::{self, SpectrumOptions, SpectrumReport, DEFAULT_RANK_CAP};
use crate::error::{invalid, Error, Result};
use crate::matrix::{self, DEFAULT_DENSE_CAP, MAX_DENSE_CAP};
use crate::qip::{self, QipInstance, SolveOptions, Symmetry, DEFAULT_ENUM_BUDGET};
use crate::ramsey::{self, GridSpec, SearchOptions, DEFAULT_STATE_CAP};
use crate::subset;

pub const CACHE_ENV: &str = "RSPEC_CACHE_DIR";

#[derive(Parser, Debug)]
#[command(
    name = "prodramsey",
    version,
    about = "Power-set matrix spectra and product Ramsey bounds"
)]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct GlobalArgs {
    /// Output format.
    #[arg(long, value_enum, default_value_t = OutputFormat::Json, global = true)]
    pub format: OutputFormat,
    /// Write the report here instead of standard output.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads (defaults to the number of CPUs).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Largest r for which M_r is materialized densely.
    #[arg(long, default_value_t = DEFAULT_DENSE_CAP, global = true)]
    pub dense_cap: u32,
    /// Enumeration budget for the exhaustive QIP solver.
    #[arg(long, default_value_t = DEFAULT_ENUM_BUDGET, global = true)]
    pub budget: u64,
    /// Directory for cached spectrum reports.
    #[arg(long, env = CACHE_ENV, global = true)]
    pub cache_dir: Option<PathBuf>,
    /// Skip the spectrum cache.
    #[arg(long, global = true)]
    pub no_cache: bool,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Json,
    Csv,
    Pretty,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Dense M_r (JSON with header, or row-major CSV).
    Matrix {
        #[arg(long)]
        r: u32,
        /// With CSV output, also write the JSON header to this file.
        #[arg(long)]
        header: Option<PathBuf>,
    },
    /// Quotient matrix N_r, cross-checked against column sums of M_r for r <= 12.
    Quotient {
        #[arg(long)]
        r: u32,
    },
    /// Verified eigendecomposition of M_r.
    Spectrum {
        #[arg(long)]
        r: u32,
        /// Largest r for which rank certificates are computed.
        #[arg(long, default_value_t = DEFAULT_RANK_CAP)]
        rank_cap: u32,
        /// Dump every basis vector to this CSV file.
        #[arg(long)]
        basis_csv: Option<PathBuf>,
        /// Also compare against a floating-point eigensolver at this relative tolerance (r <= 10).
        #[arg(long)]
        crosscheck: Option<f64>,
    },
    /// Positive semidefiniteness certificate.
    Psd {
        #[arg(long)]
        r: u32,
    },
    /// Solve the quadratic integer program and emit the 2-guaranteed triple.
    Bound {
        #[arg(long)]
        r: u32,
        #[arg(long)]
        s: u32,
        #[arg(long, value_enum, default_value_t = MethodArg::Bnb)]
        method: MethodArg,
        /// Disable symmetry pruning.
        #[arg(long)]
        no_symmetry: bool,
    },
    /// Decide whether a grid is c-guaranteed.
    Guaranteed {
        /// Comma-separated grid dimensions, e.g. 3,7.
        #[arg(long, value_delimiter = ',', required = true)]
        dims: Vec<u32>,
        #[arg(long, default_value_t = 2)]
        colors: u32,
        #[arg(long, value_enum, default_value_t = Toggle::On)]
        symmetry: Toggle,
    },
    /// Minimal guaranteed tuples below a bound.
    Scan {
        #[arg(long, default_value_t = 2)]
        colors: u32,
        #[arg(long)]
        d: usize,
        #[arg(long, value_delimiter = ',', required = true)]
        max: Vec<u32>,
        #[arg(long, value_enum, default_value_t = Toggle::On)]
        symmetry: Toggle,
        /// Report every scanned tuple instead of only the minimal list.
        #[arg(long)]
        detail: bool,
    },
    /// Check the binomial identities over a parameter grid.
    Identities {
        #[arg(long, default_value_t = 20)]
        max_n: i64,
        #[arg(long, default_value_t = 20)]
        max_k: i64,
        #[arg(long, default_value_t = 10)]
        max_x: i64,
    },
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Exhaustive,
    Bnb,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum Toggle {
    On,
    Off,
}

/// Resolved configuration shared by all subcommands.
#[derive(Clone, Debug)]
pub struct Config {
    pub dense_cap: u32,
    pub enum_budget: u64,
    pub threads: usize,
    pub cache_dir: Option<PathBuf>,
    pub output_format: OutputFormat,
}

impl Config {
    pub fn from_args(g: &GlobalArgs) -> Result<Self> {
        if g.dense_cap > MAX_DENSE_CAP {
            return Err(invalid(format!("--dense-cap must be <= {MAX_DENSE_CAP}")));
        }
        let threads = g.threads.unwrap_or_else(|| {
            std::thread::available_parallelism()
                .map(|n| n.get())
                .unwrap_or(1)
        });
        if threads == 0 {
            return Err(invalid("--threads must be >= 1"));
        }
        let cache_dir = if g.no_cache {
            None
        } else {
            g.cache_dir.clone().or_else(default_cache_dir)
        };
        Ok(Config {
            dense_cap: g.dense_cap,
            enum_budget: g.budget,
            threads,
            cache_dir,
            output_format: g.format,
        })
    }
}

fn default_cache_dir() -> Option<PathBuf> {
    if let Some(x) = std::env::var_os("XDG_CACHE_HOME") {
        return Some(PathBuf::from(x).join("prodramsey"));
    }
    std::env::var_os("HOME").map(|h| PathBuf::from(h).join(".cache").join("prodramsey"))
}

/// A rendered report.
pub struct Output {
    pub body: String,
}

fn json_string<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

#[derive(Serialize)]
struct MatrixJson<'a> {
    header: matrix::MatrixHeader,
    #[serde(serialize_with = "crate::json::exact_rows")]
    rows: &'a [Vec<i128>],
}

#[derive(Serialize)]
struct QuotientJson {
    #[serde(flatten)]
    quotient: matrix::QuotientMatrix,
    enumeration_check: Option<bool>,
}

#[derive(Serialize)]
struct BoundJson {
    #[serde(flatten)]
    solution: qip::QipSolution,
    #[serde(flatten)]
    triple: qip::GuaranteedTriple,
    nodes: u64,
}

#[derive(Serialize)]
struct IdentitiesJson {
    max_n: i64,
    max_k: i64,
    max_x: i64,
    identities: Vec<subset::IdentitySweep>,
    failures: usize,
}

#[derive(Serialize)]
struct SpectrumJson<'a> {
    #[serde(flatten)]
    report: &'a serde_json::Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    numeric_crosscheck: Option<eigen::CrosscheckReport>,
}

fn csv_line(fields: &[String]) -> String {
    let mut s = fields.join(",");
    s.push('\n');
    s
}

/// Parses arguments, runs, writes the report and returns the process exit status.
pub fn main() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

/// Runs a parsed command line, writing to `--out` or standard output.
pub fn execute(cli: &Cli) -> Result<()> {
    let out = run(cli)?;
    match &cli.global.out {
        Some(path) => std::fs::write(path, out.body.as_bytes())?,
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(out.body.as_bytes())?;
            stdout.flush()?;
        }
    }
    Ok(())
}

/// Runs a parsed command line and returns the rendered report.
pub fn run(cli: &Cli) -> Result<Output> {
    let config = Config::from_args(&cli.global)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.threads)
        .build()
        .map_err(|e| Error::Validation(format!("thread pool: {e}")))?;
    pool.install(|| dispatch(&cli.command, &config))
}

fn dispatch(command: &Command, config: &Config) -> Result<Output> {
    let fmt = config.output_format;
    let body = match command {
        Command::Matrix { r, header } => {
            let m = matrix::build_dense(*r, config.dense_cap)?;
            match fmt {
                OutputFormat::Csv => {
                    if let Some(path) = header {
                        std::fs::write(path, json_string(&m.header())?)?;
                    }
                    let mut buf = Vec::new();
                    m.write_csv(&mut buf)?;
                    String::from_utf8(buf).expect("ascii csv")
                }
                OutputFormat::Json => {
                    let rows: Vec<Vec<i128>> =
                        (0..m.dim() as u32).map(|s| m.row(s).to_vec()).collect();
                    json_string(&MatrixJson {
                        header: m.header(),
                        rows: &rows,
                    })?
                }
                OutputFormat::Pretty => {
                    let mut s = format!("M_{r}: {0} x {0}, trace {1}\n", m.dim(), m.trace());
                    for row in 0..m.dim() as u32 {
                        let cells: Vec<String> =
                            m.row(row).iter().map(|x| format!("{x:>3}")).collect();
                        let _ = writeln!(s, "{}", cells.join(" "));
                    }
                    s
                }
            }
        }
        Command::Quotient { r } => {
            let q = matrix::build_quotient(*r)?;
            let enumeration_check = if *r <= DEFAULT_DENSE_CAP {
                let ok = matrix::quotient_by_enumeration(*r)? == q;
                if !ok {
                    return Err(Error::Integrity(format!(
                        "closed-form N_{r} differs from column sums of M_{r}"
                    )));
                }
                Some(ok)
            } else {
                None
            };
            match fmt {
                OutputFormat::Json => json_string(&QuotientJson {
                    quotient: q,
                    enumeration_check,
                })?,
                OutputFormat::Csv | OutputFormat::Pretty => {
                    let sep = if fmt == OutputFormat::Csv { "," } else { " " };
                    let mut s = String::new();
                    for row in &q.entries {
                        let cells: Vec<String> = row.iter().map(|x| x.to_string()).collect();
                        let _ = writeln!(s, "{}", cells.join(sep));
                    }
                    s
                }
            }
        }
        Command::Spectrum {
            r,
            rank_cap,
            basis_csv,
            crosscheck,
        } => {
            let opts = SpectrumOptions {
                rank_cap: *rank_cap,
                dense_cap: config.dense_cap,
            };
            let needs_basis = basis_csv.is_some();
            let (json, report) = spectrum_cached(*r, opts, config, needs_basis)?;
            if let (Some(path), Some(report)) = (basis_csv, &report) {
                write_basis_csv(report, path)?;
            }
            let numeric_crosscheck = match crosscheck {
                Some(tol) => Some(eigen::numeric_crosscheck(*r, *tol)?),
                None => None,
            };
            match fmt {
                OutputFormat::Json if numeric_crosscheck.is_none() => json,
                OutputFormat::Json => {
                    let value: serde_json::Value = serde_json::from_str(&json)?;
                    json_string(&SpectrumJson {
                        report: &value,
                        numeric_crosscheck,
                    })?
                }
                OutputFormat::Csv | OutputFormat::Pretty => {
                    let value: serde_json::Value = serde_json::from_str(&json)?;
                    render_spectrum_table(&value, fmt, numeric_crosscheck.as_ref())
                }
            }
        }
        Command::Psd { r } => {
            let cert = eigen::psd_certificate(*r, config.dense_cap)?;
            match fmt {
                OutputFormat::Json => json_string(&cert)?,
                _ => {
                    let mut s = String::new();
                    if fmt == OutputFormat::Csv {
                        s.push_str("eigenvalue,multiplicity\n");
                    } else {
                        let _ = writeln!(
                            s,
                            "M_{r} = {}; reconstruction {} over {} entries, {} mismatches; psd = {}",
                            cert.factorization,
                            cert.reconstruction.mode,
                            cert.reconstruction.entries_checked,
                            cert.reconstruction.mismatches,
                            cert.psd
                        );
                    }
                    for (l, m) in cert.spectrum.iter().flatten() {
                        let _ = writeln!(
                            s,
                            "{l}{}{m}",
                            if fmt == OutputFormat::Csv { "," } else { " x" }
                        );
                    }
                    s
                }
            }
        }
        Command::Bound {
            r,
            s,
            method,
            no_symmetry,
        } => {
            let inst = QipInstance::new(*r, *s)?;
            let opts = SolveOptions {
                budget: config.enum_budget,
                symmetry: if *no_symmetry {
                    Symmetry::None
                } else {
                    Symmetry::Full
                },
                parallel: config.threads > 1,
            };
            let sol = match method {
                MethodArg::Exhaustive => qip::solve_exhaustive(inst, opts)?,
                MethodArg::Bnb => qip::solve_bnb(inst, opts)?,
            };
            let triple = qip::guaranteed_triple(inst, &sol);
            let third = triple
                .third
                .map_or("unbounded".to_string(), |x| x.to_string());
            let sets: Vec<String> = sol.argmin.iter().map(|x| x.to_string()).collect();
            match fmt {
                OutputFormat::Json => json_string(&BoundJson {
                    nodes: sol.nodes_explored,
                    solution: sol,
                    triple,
                })?,
                OutputFormat::Csv => {
                    csv_line(&["r,s,t,third,argmin".into()])
                        + &csv_line(&[
                            r.to_string(),
                            s.to_string(),
                            sol.t.to_string(),
                            third,
                            sets.join(" "),
                        ])
                }
                OutputFormat::Pretty => {
                    let verdict = match triple.third {
                        Some(x) => format!("[{r},{s},{x}] is 2-guaranteed"),
                        None => "no finite third dimension follows".to_string(),
                    };
                    format!(
                        "r = {r}, s = {s}: t = {} ({:?}, {} nodes); {verdict}\n  argmin subsets: {}\n",
                        sol.t,
                        sol.method,
                        sol.nodes_explored,
                        sets.join(" ")
                    )
                }
            }
        }
        Command::Guaranteed {
            dims,
            colors,
            symmetry,
        } => {
            let spec = GridSpec::new(dims.clone(), *colors)?;
            let opts = SearchOptions {
                symmetry: *symmetry == Toggle::On,
                cap: DEFAULT_STATE_CAP,
            };
            let v = ramsey::is_guaranteed(&spec, opts)?;
            let dims_s: Vec<String> = v.dims.iter().map(|d| d.to_string()).collect();
            match fmt {
                OutputFormat::Json => json_string(&v)?,
                OutputFormat::Csv => {
                    csv_line(&["dims,colors,guaranteed,checked".into()])
                        + &csv_line(&[
                            dims_s.join("x"),
                            colors.to_string(),
                            v.guaranteed.to_string(),
                            v.checked.to_string(),
                        ])
                }
                OutputFormat::Pretty => {
                    let mut s = format!(
                        "[{}] with {colors} colors: {} ({} colorings accounted for)\n",
                        dims_s.join(","),
                        if v.guaranteed {
                            "guaranteed"
                        } else {
                            "not guaranteed"
                        },
                        v.checked
                    );
                    if let Some(w) = &v.witness {
                        s.push_str("box-free coloring:\n");
                        for line in w.cells.chunks(spec.line_len()) {
                            let row: Vec<String> = line.iter().map(|c| c.to_string()).collect();
                            let _ = writeln!(s, "  {}", row.join(""));
                        }
                    }
                    s
                }
            }
        }
        Command::Scan {
            colors,
            d,
            max,
            symmetry,
            detail,
        } => {
            if max.len() != *d {
                return Err(invalid(format!(
                    "--max has {} entries but --d is {d}",
                    max.len()
                )));
            }
            let opts = SearchOptions {
                symmetry: *symmetry == Toggle::On,
                cap: DEFAULT_STATE_CAP,
            };
            let rep = ramsey::obstruction_scan(*colors, max, opts)?;
            match fmt {
                OutputFormat::Json if *detail => json_string(&rep)?,
                OutputFormat::Json => json_string(&rep.minimal)?,
                OutputFormat::Csv => {
                    let mut s = String::from("dims,guaranteed,decision,minimal\n");
                    for e in &rep.entries {
                        let dims: Vec<String> = e.dims.iter().map(|x| x.to_string()).collect();
                        let _ = writeln!(
                            s,
                            "{},{},{},{}",
                            dims.join("x"),
                            e.guaranteed,
                            serde_json::to_value(e.decision)?.as_str().unwrap_or(""),
                            rep.minimal.contains(&e.dims)
                        );
                    }
                    s
                }
                OutputFormat::Pretty => {
                    let mins: Vec<String> = rep
                        .minimal
                        .iter()
                        .map(|t| {
                            let p: Vec<String> = t.iter().map(|x| x.to_string()).collect();
                            format!("({})", p.join(","))
                        })
                        .collect();
                    format!(
                        "obstruction set (c = {colors}, d = {d}): {{{}}}\n",
                        mins.join(", ")
                    )
                }
            }
        }
        Command::Identities {
            max_n,
            max_k,
            max_x,
        } => {
            if *max_n < 0 || *max_k < 0 || *max_x < 0 {
                return Err(invalid("identity grid bounds must be nonnegative"));
            }
            let sweeps = subset::identity_sweep(*max_n, *max_k, *max_x)?;
            let failures = sweeps.iter().map(|s| s.failures.len()).sum();
            let out = IdentitiesJson {
                max_n: *max_n,
                max_k: *max_k,
                max_x: *max_x,
                identities: sweeps,
                failures,
            };
            match fmt {
                OutputFormat::Json => json_string(&out)?,
                _ => {
                    let mut s = String::new();
                    if fmt == OutputFormat::Csv {
                        s.push_str("identity,checked,failures\n");
                    }
                    for sw in &out.identities {
                        if fmt == OutputFormat::Csv {
                            let _ =
                                writeln!(s, "{},{},{}", sw.identity, sw.checked, sw.failures.len());
                        } else {
                            let _ = writeln!(
                                s,
                                "identity ({}): {} instances, {} failures",
                                sw.identity,
                                sw.checked,
                                sw.failures.len()
                            );
                        }
                    }
                    s
                }
            }
        }
    };
    Ok(Output { body })
}

fn cache_path(dir: &Path, r: u32, opts: SpectrumOptions) -> PathBuf {
    dir.join(format!(
        "spectrum-r{r}-rank{}-dense{}-v{}.json",
        opts.rank_cap,
        opts.dense_cap,
        env!("CARGO_PKG_VERSION")
    ))
}

/// Returns the JSON report, from the cache when possible. The full report (with
/// bases) is only computed when needed or on a cache miss.
fn spectrum_cached(
    r: u32,
    opts: SpectrumOptions,
    config: &Config,
    needs_basis: bool,
) -> Result<(String, Option<SpectrumReport>)> {
    let path = config.cache_dir.as_ref().map(|d| cache_path(d, r, opts));
    if let Some(p) = &path {
        if !needs_basis {
            if let Ok(cached) = std::fs::read_to_string(p) {
                return Ok((cached, None));
            }
        }
    }
    let report = eigen::assemble_spectrum_with(r, opts)?;
    let json = json_string(&report)?;
    if let Some(p) = &path {
        // A failed cache write only costs a recomputation next time.
        if let Some(parent) = p.parent() {
            let _ = std::fs::create_dir_all(parent);
        }
        let tmp = p.with_extension("json.tmp");
        if std::fs::write(&tmp, json.as_bytes()).is_ok() {
            let _ = std::fs::rename(&tmp, p);
        }
    }
    Ok((json, Some(report)))
}

fn write_basis_csv(report: &SpectrumReport, path: &Path) -> Result<()> {
    let mut s = String::from("eigenvalue,vector_index");
    let n = 1usize << report.r;
    for t in 0..n {
        let _ = write!(s, ",{t}");
    }
    s.push('\n');
    for class in &report.classes {
        for (i, v) in class.basis.iter().enumerate() {
            let _ = write!(s, "{},{i}", class.eigenvalue);
            for x in v.as_slice() {
                let _ = write!(s, ",{x}");
            }
            s.push('\n');
        }
    }
    std::fs::write(path, s)?;
    Ok(())
}

fn render_spectrum_table(
    value: &serde_json::Value,
    fmt: OutputFormat,
    crosscheck: Option<&eigen::CrosscheckReport>,
) -> String {
    let mut s = String::new();
    let classes = value["classes"].as_array().cloned().unwrap_or_default();
    if fmt == OutputFormat::Csv {
        s.push_str("eigenvalue,multiplicity,formula,verified\n");
        for c in &classes {
            let _ = writeln!(
                s,
                "{},{},{},{}",
                c["eigenvalue"],
                c["multiplicity"],
                c["formula"].as_str().unwrap_or(""),
                c["verified"]
            );
        }
        return s;
    }
    let _ = writeln!(s, "spectrum of M_{}", value["r"]);
    for c in &classes {
        let _ = writeln!(
            s,
            "  {:>10} x {:<6} {:<20} families {:<12} verified {}",
            c["eigenvalue"].to_string(),
            c["multiplicity"].to_string(),
            c["formula"].as_str().unwrap_or(""),
            c["families"].as_str().unwrap_or(""),
            c["verified"]
        );
    }
    let _ = writeln!(
        s,
        "  total {} ; trace {} (expected {})",
        value["total"], value["trace_check"], value["trace_expected"]
    );
    if let Some(cc) = crosscheck {
        let _ = writeln!(
            s,
            "  numeric cross-check at tol {:e}: {} (max rel. error {:.3e})",
            cc.tolerance,
            if cc.passed { "pass" } else { "FAIL" },
            cc.max_relative_error
        );
    }
    let _ = writeln!(
        s,
        "  note: {}",
        value["theorem_discrepancy_note"].as_str().unwrap_or("")
    );
    s
}
