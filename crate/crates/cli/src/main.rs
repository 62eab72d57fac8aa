//! `powerscale` command-line runner.
//!
//! Every subcommand writes a CSV table (or, with `--json`, the same rows
//! wrapped with the command, version and configuration) to `--out` or
//! stdout.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use powerscale::corpus::{self, BigramCounts, BigramStats, DOC_BOUNDARY};
use powerscale::experiments::{
    self, write_csv, CsvField, CsvRecord, ExperimentConfig, FitRow, DEFAULT_ALPHAS, DEFAULT_DS,
};
use powerscale::{Algorithm, Error, Result, ScalingFit};

#[derive(Parser)]
#[command(
    name = "powerscale",
    version,
    about = "Loss curves and scaling fits for GD and sign descent on bigram models"
)]
struct Cli {
    /// Worker threads (defaults to the number of cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// GD loss against the asymptotic rate on a tau grid.
    GdCurve {
        #[command(flatten)]
        grid: Grid,
        #[command(flatten)]
        output: Output,
    },
    /// Sign-descent loss at the scaled horizon and step-size.
    SdCurve {
        #[command(flatten)]
        grid: Grid,
        #[command(flatten)]
        output: Output,
    },
    /// Grid-optimal sign-descent step-size against the prediction.
    SdStepsize {
        #[command(flatten)]
        grid: Grid,
        #[command(flatten)]
        output: Output,
    },
    /// Iterations to reach each eps, with log-log fits against d.
    TimeToEps {
        #[command(flatten)]
        grid: Grid,
        #[arg(long, value_delimiter = ',', default_values_t = [0.25, 0.5, 0.75])]
        eps_grid: Vec<f64>,
        #[arg(long, value_enum, default_value_t = Algo::Gd)]
        algo: Algo,
        /// Also write the fits as CSV here.
        #[arg(long)]
        fit_out: Option<PathBuf>,
        #[command(flatten)]
        output: Output,
    },
    /// Count unigrams and bigrams of a token stream into a counts file.
    BigramCount {
        #[arg(long)]
        tokens: PathBuf,
        /// Vocabulary size; defaults to the largest id plus one.
        #[arg(long)]
        vocab: Option<u32>,
        /// Counts file to write.
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Rank-ordered unigram table of a counts file, with a Zipf fit.
    BigramStats {
        #[command(flatten)]
        source: Source,
        #[command(flatten)]
        output: Output,
    },
    /// Loss curve on corpus statistics with the power-law prediction.
    RealCurve {
        #[command(flatten)]
        source: Source,
        /// Exponent used for the time scaling and the prediction.
        #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
        alpha: f64,
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        tau_grid: Option<Vec<f64>>,
        #[arg(long, value_enum, default_value_t = Algo::Gd)]
        algo: Algo,
        #[command(flatten)]
        output: Output,
    },
    /// Exact GD loss against worst-case rates at alpha = 1.
    Baselines {
        #[arg(long = "d", value_delimiter = ',')]
        ds: Vec<usize>,
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        tau_grid: Option<Vec<f64>>,
        #[command(flatten)]
        output: Output,
    },
    /// Fit `t = c d^beta` to a time-to-eps table.
    Fit {
        /// CSV with columns `d` and `t_measured`, and optionally
        /// `algorithm`, `alpha` and `eps` to group by.
        #[arg(long = "in")]
        input: PathBuf,
        #[command(flatten)]
        output: Output,
    },
}

#[derive(Args)]
struct Grid {
    #[arg(long = "alpha", value_delimiter = ',', allow_negative_numbers = true)]
    alphas: Vec<f64>,
    #[arg(long = "d", value_delimiter = ',')]
    ds: Vec<usize>,
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    tau_grid: Option<Vec<f64>>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct Source {
    #[arg(long)]
    counts: Option<PathBuf>,
    #[arg(long)]
    tokens: Option<PathBuf>,
}

#[derive(Args)]
struct Output {
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    json: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum Algo {
    Gd,
    Sd,
}

impl From<Algo> for Algorithm {
    fn from(a: Algo) -> Self {
        match a {
            Algo::Gd => Algorithm::Gd,
            Algo::Sd => Algorithm::Sd,
        }
    }
}

impl Grid {
    fn config(&self, algorithm: Algorithm) -> ExperimentConfig {
        ExperimentConfig {
            alphas: if self.alphas.is_empty() {
                DEFAULT_ALPHAS.to_vec()
            } else {
                self.alphas.clone()
            },
            d_list: if self.ds.is_empty() {
                DEFAULT_DS.to_vec()
            } else {
                self.ds.clone()
            },
            tau_grid: self.tau_grid.clone(),
            algorithm,
            seed: self.seed,
            ..ExperimentConfig::default()
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) => 2,
        Error::Io(_) | Error::Format(_) => 3,
        Error::Domain(_) | Error::Size { .. } => 4,
    }
}

fn sink(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn json_error(e: serde_json::Error) -> Error {
    Error::Io(e.into())
}

fn emit<R: CsvRecord + Serialize>(
    output: &Output,
    command: &str,
    config: Value,
    rows: &[R],
    extra: Option<(&str, Value)>,
) -> Result<()> {
    let mut w = sink(output.out.as_deref())?;
    if output.json {
        let mut doc = json!({
            "command": command,
            "version": env!("CARGO_PKG_VERSION"),
            "config": config,
            "columns": R::HEADER,
            "rows": rows,
        });
        if let Some((k, v)) = extra {
            doc[k] = v;
        }
        serde_json::to_writer_pretty(&mut w, &doc).map_err(json_error)?;
        writeln!(w)?;
        w.flush()?;
        Ok(())
    } else {
        write_csv(w, rows)
    }
}

fn to_value<T: Serialize>(v: &T) -> Result<Value> {
    serde_json::to_value(v).map_err(json_error)
}

fn tokens_to_counts(path: &Path, vocab: Option<u32>) -> Result<BigramCounts> {
    let tokens = corpus::read_tokens(path)?;
    let vocab = match vocab {
        Some(v) => v,
        None => tokens
            .iter()
            .filter(|&&t| t != DOC_BOUNDARY)
            .max()
            .map_or(1, |m| m + 1),
    };
    corpus::count_bigrams(&tokens, vocab)
}

fn load_stats(source: &Source) -> Result<BigramStats> {
    let counts = match (&source.counts, &source.tokens) {
        (Some(p), _) => corpus::read_counts(p)?,
        (None, Some(p)) => tokens_to_counts(p, None)?,
        (None, None) => return Err(Error::Config("need --counts or --tokens".into())),
    };
    corpus::stats_from_counts(&counts)
}

#[derive(Serialize)]
struct RankRow {
    rank: usize,
    token: u32,
    pi: f64,
    row_entries: usize,
}

impl CsvRecord for RankRow {
    const HEADER: &'static [&'static str] = &["rank", "token", "pi", "row_entries"];
    fn fields(&self) -> Vec<String> {
        vec![
            self.rank.csv(),
            self.token.csv(),
            self.pi.csv(),
            self.row_entries.csv(),
        ]
    }
}

fn fit_table(path: &Path) -> Result<Vec<FitRow>> {
    let fmt = |e: csv::Error| Error::Format(format!("{}: {e}", path.display()));
    let mut reader = csv::Reader::from_path(path).map_err(fmt)?;
    let header = reader.headers().map_err(fmt)?.clone();
    let col = |name: &str| header.iter().position(|h| h == name);
    let (Some(di), Some(ti)) = (col("d"), col("t_measured")) else {
        return Err(Error::Format(format!(
            "{}: needs columns d and t_measured",
            path.display()
        )));
    };
    let (ai, al, ei) = (col("algorithm"), col("alpha"), col("eps"));

    let num = |rec: &csv::StringRecord, i: usize| -> Result<f64> {
        rec[i]
            .parse::<f64>()
            .map_err(|_| Error::Format(format!("bad number {:?} in {}", &rec[i], path.display())))
    };
    type Key = (String, String, String);
    let mut groups: BTreeMap<Key, (Vec<f64>, Vec<f64>)> = BTreeMap::new();
    for rec in reader.records() {
        let rec = rec.map_err(fmt)?;
        let key = |i: Option<usize>| i.map_or(String::new(), |i| rec[i].to_string());
        let g = groups.entry((key(ai), key(al), key(ei))).or_default();
        g.0.push(num(&rec, di)?);
        g.1.push(num(&rec, ti)?);
    }
    if groups.is_empty() {
        return Err(Error::Format(format!("{}: no rows", path.display())));
    }

    groups
        .into_iter()
        .map(|((algo, alpha, eps), (xs, ys))| {
            let f = ScalingFit::fit(&xs, &ys)?;
            let algorithm: Algorithm = if algo.is_empty() {
                Algorithm::Gd
            } else {
                algo.parse()
                    .map_err(|_| Error::Format(format!("unknown algorithm {algo:?}")))?
            };
            let parse = |s: &str| -> Result<f64> {
                if s.is_empty() {
                    Ok(f64::NAN)
                } else {
                    s.parse()
                        .map_err(|_| Error::Format(format!("bad number {s:?}")))
                }
            };
            let (alpha, eps) = (parse(&alpha)?, parse(&eps)?);
            Ok(FitRow {
                algorithm,
                alpha,
                eps,
                coefficient_c: f.coefficient_c,
                exponent_beta: f.exponent_beta,
                residual_rms: f.residual_rms,
                n_points: f.n_points,
                beta_theory: experiments::beta_theory(algorithm, alpha, eps),
            })
        })
        .collect()
}

fn run(cli: Cli) -> Result<()> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(Error::Config("--threads must be >= 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Config(e.to_string()))?;
    }

    match cli.command {
        Command::GdCurve { grid, output } => {
            let cfg = grid.config(Algorithm::Gd);
            let rows = experiments::run_gd_curves(&cfg)?;
            emit(&output, "gd-curve", to_value(&cfg)?, &rows, None)
        }
        Command::SdCurve { grid, output } => {
            let cfg = grid.config(Algorithm::Sd);
            let rows = experiments::run_sd_curves(&cfg)?;
            emit(&output, "sd-curve", to_value(&cfg)?, &rows, None)
        }
        Command::SdStepsize { grid, output } => {
            let cfg = grid.config(Algorithm::Sd);
            let rows = experiments::run_stepsize_convergence(&cfg)?;
            emit(&output, "sd-stepsize", to_value(&cfg)?, &rows, None)
        }
        Command::TimeToEps {
            grid,
            eps_grid,
            algo,
            fit_out,
            output,
        } => {
            let cfg = ExperimentConfig {
                eps_grid,
                ..grid.config(algo.into())
            };
            let (rows, fits) = experiments::run_time_to_eps(&cfg)?;
            if let Some(p) = &fit_out {
                write_csv(sink(Some(p))?, &fits)?;
            }
            emit(
                &output,
                "time-to-eps",
                to_value(&cfg)?,
                &rows,
                Some(("fits", to_value(&fits)?)),
            )
        }
        Command::BigramCount {
            tokens,
            vocab,
            out,
            json,
        } => {
            let counts = tokens_to_counts(&tokens, vocab)?;
            corpus::write_counts(&out, &counts)?;
            let summary = json!({
                "command": "bigram-count",
                "version": env!("CARGO_PKG_VERSION"),
                "vocab_size": counts.vocab_size,
                "total_tokens": counts.total_tokens,
                "distinct_unigrams": counts.unigram.len(),
                "distinct_bigrams": counts.bigram.len(),
                "bigrams": counts.n_bigrams(),
            });
            let mut w = sink(None)?;
            if json {
                serde_json::to_writer_pretty(&mut w, &summary).map_err(json_error)?;
                writeln!(w)?;
            } else {
                writeln!(
                    w,
                    "{} tokens, {} bigrams ({} distinct) -> {}",
                    counts.total_tokens,
                    counts.n_bigrams(),
                    counts.bigram.len(),
                    out.display()
                )?;
            }
            w.flush()?;
            Ok(())
        }
        Command::BigramStats { source, output } => {
            let stats = load_stats(&source)?;
            let rows: Vec<RankRow> = stats
                .pi
                .iter()
                .zip(&stats.rows)
                .zip(&stats.token_of_rank)
                .enumerate()
                .map(|(i, ((&pi, row), &token))| RankRow {
                    rank: i + 1,
                    token,
                    pi,
                    row_entries: row.len(),
                })
                .collect();
            let zipf = match corpus::zipf_fit_check(&stats) {
                Ok(z) => to_value(&z)?,
                Err(_) => Value::Null,
            };
            let config = json!({ "counts": source.counts, "tokens": source.tokens });
            emit(&output, "bigram-stats", config, &rows, Some(("zipf", zipf)))
        }
        Command::RealCurve {
            source,
            alpha,
            tau_grid,
            algo,
            output,
        } => {
            if !(alpha > 0.0 && alpha.is_finite()) {
                return Err(Error::Config(format!("alpha must be > 0, got {alpha}")));
            }
            let algorithm: Algorithm = algo.into();
            let taus = tau_grid.unwrap_or_else(|| experiments::default_tau_grid(algorithm, alpha));
            if taus.is_empty() {
                return Err(Error::Config("tau grid is empty".into()));
            }
            let stats = load_stats(&source)?;
            let rows = experiments::run_real_data(&stats, alpha, &taus, algorithm)?;
            let config = json!({
                "counts": source.counts,
                "tokens": source.tokens,
                "alpha": alpha,
                "tau_grid": taus,
                "algorithm": algorithm,
            });
            emit(&output, "real-curve", config, &rows, None)
        }
        Command::Baselines {
            ds,
            tau_grid,
            output,
        } => {
            let cfg = ExperimentConfig {
                alphas: vec![1.0],
                d_list: if ds.is_empty() {
                    DEFAULT_DS.to_vec()
                } else {
                    ds
                },
                tau_grid,
                ..ExperimentConfig::default()
            };
            let rows = experiments::run_baselines(&cfg)?;
            emit(&output, "baselines", to_value(&cfg)?, &rows, None)
        }
        Command::Fit { input, output } => {
            let rows = fit_table(&input)?;
            emit(&output, "fit", json!({ "in": input }), &rows, None)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Error::Io(e)) if e.kind() == io::ErrorKind::BrokenPipe => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("powerscale: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
