//! Command-line front end: generators, discrepancy, Weyl profiles,
//! convergents, segment certification and lemma suites with
//! machine-readable output.
//!
//! Exit codes: 0 success, 1 computation failure (diagnostic on stderr),
//! 2 usage error.

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use equidist_core::certify::{certify_range, CertificateRun};
use equidist_core::diophantine::{convergents_of, parse_theta, select_convergent_of};
use equidist_core::discrepancy::{
    extreme_discrepancy, extreme_discrepancy_oracle, star_discrepancy, DiscrepancyReport,
};
use equidist_core::lemmas::{run_suite, LemmaId, SuiteReport};
use equidist_core::seq::{
    fractional_parts, generate, hypothesis_scan, Evaluator, SequenceSpec,
};
use equidist_core::weyl::weyl_profile;

#[derive(Parser)]
#[command(name = "equidist", version, about = "Equidistribution measurement and certification")]
struct Cli {
    /// Worker threads (fallback: EQUIDIST_THREADS, then all cores)
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Write output to a file instead of stdout
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum OutputFormat {
    Json,
    Csv,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum DiscrepancyMethod {
    Fast,
    Oracle,
}

#[derive(Subcommand)]
enum Command {
    /// Materialize a named sequence over an index range
    Generate {
        /// Sequence spec: `pow:a=1.5`, `nlog`, `log`, `linear:theta=<v>`, `file:<path>`
        #[arg(long)]
        seq: String,
        #[arg(long, default_value_t = 1)]
        from: u128,
        #[arg(long)]
        to: u128,
        #[arg(long, value_enum, default_value_t = OutputFormat::Json)]
        output: OutputFormat,
    },
    /// Extreme discrepancy of the fractional parts of x_1..x_N
    Discrepancy {
        #[arg(long)]
        seq: String,
        /// Number of terms
        #[arg(long)]
        n: u128,
        #[arg(long, value_enum, default_value_t = DiscrepancyMethod::Fast)]
        method: DiscrepancyMethod,
        /// Also report the star (anchored-interval) discrepancy
        #[arg(long)]
        star: bool,
        #[arg(long, value_enum, default_value_t = OutputFormat::Json)]
        output: OutputFormat,
    },
    /// Weyl sum profile over frequencies and prefix lengths
    Weyl {
        #[arg(long)]
        seq: String,
        /// Largest |h|
        #[arg(long, default_value_t = 4)]
        hmax: i64,
        /// Comma-separated increasing prefix lengths, e.g. 1000,10000
        #[arg(long)]
        grid: String,
        #[arg(long, value_enum, default_value_t = OutputFormat::Csv)]
        output: OutputFormat,
    },
    /// Continued-fraction convergents of a real number
    Convergents {
        /// Decimal literal, `sqrt:<k>`, or `golden`
        #[arg(long)]
        theta: String,
        /// Largest admitted denominator
        #[arg(long)]
        qcap: u128,
        /// Also select the convergent straddling eps^-4
        #[arg(long)]
        eps: Option<f64>,
    },
    /// Certify equidistribution segment by segment
    Certify {
        #[arg(long)]
        seq: String,
        #[arg(long)]
        eps: f64,
        /// First index; defaults to the hypothesis-scan threshold
        #[arg(long)]
        start: Option<u128>,
        /// Last index (exclusive chain bound)
        #[arg(long)]
        end: u128,
        /// Abort when a segment's measured discrepancy exceeds C * eps
        #[arg(long, default_value_t = 10.0)]
        constant_c: f64,
        /// Stream one JSON line per segment instead of a single document
        #[arg(long)]
        jsonl: bool,
    },
    /// Randomized lemma suites
    Lemmas {
        /// all or one of: l1 l2 l3 l4 l5 l6 l7 l8 chebyshev
        #[arg(long, default_value = "all")]
        suite: String,
        /// Accepted instances per suite
        #[arg(long, default_value_t = 1000)]
        trials: u64,
        #[arg(long, default_value_t = 42)]
        seed: u64,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();

    let threads = cli
        .threads
        .or_else(|| {
            std::env::var("EQUIDIST_THREADS")
                .ok()
                .and_then(|v| v.parse().ok())
        })
        .unwrap_or(0);
    if threads > 0 {
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global();
    }

    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(1)
        }
    }
}

struct Sink {
    out: Box<dyn Write>,
}

impl Sink {
    fn new(path: &Option<PathBuf>) -> anyhow::Result<Sink> {
        let out: Box<dyn Write> = match path {
            Some(p) => Box::new(std::io::BufWriter::new(std::fs::File::create(p)?)),
            None => Box::new(std::io::BufWriter::new(std::io::stdout())),
        };
        Ok(Sink { out })
    }

    fn line(&mut self, s: &str) -> anyhow::Result<()> {
        writeln!(self.out, "{s}")?;
        Ok(())
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let mut sink = Sink::new(&cli.out)?;
    match cli.command {
        Command::Generate { seq, from, to, output } => {
            let spec = SequenceSpec::parse(&seq)?;
            let x = generate(&spec, from, to)?;
            match output {
                OutputFormat::Json => {
                    let doc = serde_json::json!({
                        "seq": seq,
                        "start_index": x.start_index(),
                        "values": x.values(),
                    });
                    sink.line(&serde_json::to_string(&doc)?)?;
                }
                OutputFormat::Csv => {
                    sink.line("n,value")?;
                    for (i, v) in x.values().iter().enumerate() {
                        sink.line(&format!("{},{v:.17e}", x.start_index() + i as u128))?;
                    }
                }
            }
        }
        Command::Discrepancy { seq, n, method, star, output } => {
            let spec = SequenceSpec::parse(&seq)?;
            let u = if matches!(spec, SequenceSpec::File(_)) {
                let eval = Evaluator::new(&spec)?;
                let (lo, _) = eval.domain();
                let x = generate(&spec, lo, lo + n - 1)?;
                fractional_parts(&x)
            } else {
                // fractional parts through the extended-precision path
                let eval = Evaluator::new(&spec)?;
                let mut pts = Vec::with_capacity(n as usize);
                for k in 1..=n {
                    pts.push(eval.frac_x(k)?);
                }
                equidist_core::seq::UnitSequence::new(pts)?
            };
            let report: DiscrepancyReport = match method {
                DiscrepancyMethod::Fast => extreme_discrepancy(&u),
                DiscrepancyMethod::Oracle => extreme_discrepancy_oracle(&u)?,
            };
            let star_value = star.then(|| star_discrepancy(&u));
            match output {
                OutputFormat::Json => {
                    let mut doc = serde_json::to_value(&report)?;
                    doc["n"] = serde_json::json!(n);
                    if let Some(s) = star_value {
                        doc["star"] = serde_json::json!(s);
                    }
                    sink.line(&serde_json::to_string(&doc)?)?;
                }
                OutputFormat::Csv => {
                    sink.line("n,value,witness_a,witness_b,method,star")?;
                    let (a, b) = report
                        .witness
                        .map(|w| (format!("{:.17e}", w.a), format!("{:.17e}", w.b)))
                        .unwrap_or_default();
                    let s = star_value.map(|s| format!("{s:.17e}")).unwrap_or_default();
                    let meth = if matches!(method, DiscrepancyMethod::Fast) { "fast" } else { "oracle" };
                    sink.line(&format!("{n},{:.17e},{a},{b},{meth},{s}", report.value))?;
                }
            }
        }
        Command::Weyl { seq, hmax, grid, output } => {
            let spec = SequenceSpec::parse(&seq)?;
            let grid: Vec<u64> = grid
                .split(',')
                .map(|s| s.trim().parse::<u64>())
                .collect::<Result<_, _>>()
                .map_err(|e| anyhow::anyhow!("bad --grid: {e}"))?;
            let rows = weyl_profile(&spec, hmax, &grid)?;
            match output {
                OutputFormat::Csv => {
                    sink.line("h,N,re,im,magnitude")?;
                    for w in rows {
                        sink.line(&format!(
                            "{},{},{:.17e},{:.17e},{:.17e}",
                            w.h, w.n, w.sum.re, w.sum.im, w.magnitude
                        ))?;
                    }
                }
                OutputFormat::Json => {
                    let docs: Vec<serde_json::Value> = rows
                        .iter()
                        .map(|w| {
                            serde_json::json!({
                                "h": w.h, "N": w.n,
                                "re": w.sum.re, "im": w.sum.im,
                                "magnitude": w.magnitude,
                            })
                        })
                        .collect();
                    sink.line(&serde_json::to_string(&docs)?)?;
                }
            }
        }
        Command::Convergents { theta, qcap, eps } => {
            let source = parse_theta(&theta)?;
            let list = convergents_of(&source, qcap);
            match eps {
                None => sink.line(&serde_json::to_string(&list)?)?,
                Some(e) => {
                    let selected = select_convergent_of(&source, e)?;
                    let doc = serde_json::json!({
                        "convergents": list,
                        "selected": selected,
                    });
                    sink.line(&serde_json::to_string(&doc)?)?;
                }
            }
        }
        Command::Certify { seq, eps, start, end, constant_c, jsonl } => {
            let spec = SequenceSpec::parse(&seq)?;
            let n_start = match start {
                Some(s) => s,
                None => {
                    let report = hypothesis_scan(&spec, eps, end)?;
                    let n_eps = report.n_epsilon.ok_or_else(|| {
                        anyhow::anyhow!(
                            "no admissible start below {end}: the second-difference \
                             window never stabilizes (first violations: {:?})",
                            report.violations.iter().take(3).collect::<Vec<_>>()
                        )
                    })?;
                    n_eps + 1 + n_eps / 1_000_000_000
                }
            };
            let run: CertificateRun = certify_range(&spec, eps, n_start, end, constant_c)?;
            if jsonl {
                for s in &run.segments {
                    sink.line(&serde_json::to_string(s)?)?;
                }
                let summary = serde_json::json!({
                    "epsilon": run.epsilon,
                    "n_epsilon": run.n_epsilon,
                    "constant_C": run.constant_c,
                    "segments": run.segments.len(),
                    "aggregate_D": run.aggregate_d,
                });
                sink.line(&serde_json::to_string(&summary)?)?;
            } else {
                sink.line(&serde_json::to_string(&run)?)?;
            }
        }
        Command::Lemmas { suite, trials, seed } => {
            let ids: Vec<LemmaId> = if suite == "all" {
                LemmaId::ALL.to_vec()
            } else {
                vec![LemmaId::parse(&suite)
                    .ok_or_else(|| anyhow::anyhow!("unknown suite {suite:?}"))?]
            };
            let reports: Vec<SuiteReport> =
                ids.iter().map(|&id| run_suite(id, trials, seed)).collect();
            sink.line(&serde_json::to_string(&reports)?)?;
            let failed: u64 = reports.iter().map(|r| r.failed).sum();
            if failed > 0 {
                anyhow::bail!("{failed} lemma instances failed");
            }
        }
    }
    sink.out.flush()?;
    Ok(())
}
