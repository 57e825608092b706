mod blockfile;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use qrmat::field::{parse_scalar, rat};
use qrmat::rmatrix::{block_keys, build_block, slnfinal_element, MultiIndex, NormalizationMode, Weight};
use qrmat::stochastic::stochastic_element;
use qrmat::verify::{run_suite, ybe_mismatches, CheckReport, SuiteConfig, SUITES};
use qrmat::weights3d::tetrahedron_mismatch;
use qrmat::{Error, EvalPoint, Scalar};

use blockfile::BlockFile;

const USAGE: u8 = 2;
const RESONANCE: u8 = 3;
const FAILURE: u8 = 1;

/// Exact R-matrices for symmetric tensor representations of U_q(sl_n).
///
/// The default worker count for parallel work is read from QRMAT_WORKERS.
#[derive(Parser, Debug)]
#[command(name = "qrmat", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Print one matrix element.
    Element {
        #[command(flatten)]
        block: BlockArgs,
        /// i, j, i', j' as 4(n-1) comma-separated integers.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        indices: Vec<i64>,
    },
    /// Build a whole block and write it as a block file.
    Block {
        #[command(flatten)]
        block: BlockArgs,
        /// Output file; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Read a block file and compare it with a fresh evaluation.
    Import { file: PathBuf },
    /// Run a verification suite, or `all` of them.
    Check {
        suite: String,
        #[arg(long)]
        rank: Option<usize>,
        #[arg(long)]
        weight_i: Option<i64>,
        #[arg(long)]
        weight_j: Option<i64>,
        /// Fix the point instead of sampling; needs --lambda too.
        #[arg(long, value_parser = scalar, requires = "lambda")]
        q_sqrt: Option<Scalar>,
        #[arg(long, value_parser = scalar, requires = "q_sqrt", allow_hyphen_values = true)]
        lambda: Option<Scalar>,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 3)]
        samples: usize,
    },
    /// Check the tetrahedron equation.
    Tetra {
        #[arg(long, default_value_t = 2)]
        max_occupation: i64,
        /// q = r²; by default q runs over 1/2 and 2/3.
        #[arg(long, value_parser = scalar)]
        q_sqrt: Option<Scalar>,
    },
    /// Time the full Yang–Baxter contraction on the exact and f64 backends.
    Bench {
        #[arg(long, default_value_t = 3)]
        rank: usize,
        #[arg(long, default_value_t = 2)]
        weight_i: i64,
        #[arg(long, default_value_t = 2)]
        weight_j: i64,
        #[arg(long, default_value_t = 2)]
        weight_k: i64,
        #[arg(long, value_parser = scalar, default_value = "2/3")]
        q_sqrt: Scalar,
        #[arg(long, value_parser = scalar, default_value = "1/5", allow_hyphen_values = true)]
        lambda: Scalar,
        #[arg(long, value_parser = scalar, default_value = "3/7", allow_hyphen_values = true)]
        mu: Scalar,
    },
}

#[derive(Args, Debug)]
struct BlockArgs {
    #[arg(long)]
    rank: usize,
    #[arg(long)]
    weight_i: i64,
    #[arg(long)]
    weight_j: i64,
    /// q = r².
    #[arg(long, value_parser = scalar)]
    q_sqrt: Scalar,
    #[arg(long, value_parser = scalar, allow_hyphen_values = true)]
    lambda: Scalar,
    /// default, b-restored or sigma.
    #[arg(long, default_value = "default", value_parser = mode)]
    mode: NormalizationMode,
    /// Apply the stochastic twist (default normalization only).
    #[arg(long)]
    stochastic: bool,
}

fn scalar(s: &str) -> Result<Scalar, String> {
    parse_scalar(s).map_err(|e| e.to_string())
}

fn mode(s: &str) -> Result<NormalizationMode, String> {
    NormalizationMode::from_name(s).map_err(|e| e.to_string())
}

fn fail(e: &Error) -> ExitCode {
    eprintln!("qrmat: {e}");
    ExitCode::from(if e.is_resonance() { RESONANCE } else { USAGE })
}

impl BlockArgs {
    fn point(&self) -> qrmat::Result<EvalPoint<Scalar>> {
        EvalPoint::new(self.q_sqrt.clone(), self.lambda.clone())
    }

    fn validate(&self) -> qrmat::Result<()> {
        if self.rank < 2 {
            return Err(Error::Domain("--rank must be at least 2".into()));
        }
        if self.stochastic && self.mode != NormalizationMode::BEqualsOne {
            return Err(Error::Domain("--stochastic needs --mode default".into()));
        }
        Ok(())
    }

    fn entry(&self, i: &MultiIndex, j: &MultiIndex, ip: &MultiIndex, jp: &MultiIndex) -> qrmat::Result<Scalar> {
        let (wi, wj) = (Weight::Int(self.weight_i), Weight::Int(self.weight_j));
        let pt = self.point()?;
        if self.stochastic {
            stochastic_element(self.rank, &wi, &wj, i, j, ip, jp, &pt)
        } else {
            slnfinal_element(self.rank, &wi, &wj, i, j, ip, jp, &pt, self.mode)
        }
    }
}

fn element(args: &BlockArgs, indices: &[i64]) -> qrmat::Result<Scalar> {
    args.validate()?;
    let m = args.rank - 1;
    if indices.len() != 4 * m {
        return Err(Error::Domain(format!("--indices needs {} integers for rank {}", 4 * m, args.rank)));
    }
    let part = |k: usize| MultiIndex::new(indices[k * m..(k + 1) * m].to_vec());
    args.entry(&part(0)?, &part(1)?, &part(2)?, &part(3)?)
}

fn block(args: &BlockArgs) -> qrmat::Result<BlockFile> {
    args.validate()?;
    let entries = if args.stochastic {
        let mut out = std::collections::BTreeMap::new();
        for k in block_keys(args.rank, args.weight_i, args.weight_j) {
            let v = args.entry(&k.i, &k.j, &k.ip, &k.jp)?;
            if v != rat(0, 1) {
                out.insert(k, v);
            }
        }
        out
    } else {
        build_block(args.rank, args.weight_i, args.weight_j, &args.point()?, args.mode)?.entries
    };
    Ok(BlockFile {
        rank: args.rank,
        weight_i: args.weight_i,
        weight_j: args.weight_j,
        mode: args.mode,
        stochastic: args.stochastic,
        q_sqrt: args.q_sqrt.clone(),
        lambda: args.lambda.clone(),
        entries,
    })
}

fn print_reports(reports: &[CheckReport]) -> (usize, usize) {
    let mut failed = 0;
    for r in reports {
        println!("{r}");
        failed += !r.passed as usize;
    }
    (reports.len() - failed, failed)
}

fn relative_gap(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}

fn configure_workers() -> Result<(), String> {
    let Ok(v) = std::env::var("QRMAT_WORKERS") else { return Ok(()) };
    let n: usize = v.trim().parse().map_err(|_| format!("QRMAT_WORKERS must be a positive integer, got {v:?}"))?;
    if n == 0 {
        return Err("QRMAT_WORKERS must be positive".into());
    }
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| e.to_string())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Err(e) = configure_workers() {
        eprintln!("qrmat: {e}");
        return ExitCode::from(USAGE);
    }
    match cli.command {
        Command::Element { block, indices } => match element(&block, &indices) {
            Ok(v) => {
                println!("{v}");
                ExitCode::SUCCESS
            }
            Err(e) => fail(&e),
        },
        Command::Block { block: args, out } => {
            let file = match block(&args) {
                Ok(f) => f,
                Err(e) => return fail(&e),
            };
            let text = file.to_text();
            match out {
                Some(path) => {
                    if let Err(e) = std::fs::write(&path, text) {
                        eprintln!("qrmat: cannot write {}: {e}", path.display());
                        return ExitCode::from(FAILURE);
                    }
                    eprintln!("wrote {} nonzero entries to {}", file.entries.len(), path.display());
                }
                None => print!("{text}"),
            }
            ExitCode::SUCCESS
        }
        Command::Import { file } => {
            let text = match std::fs::read_to_string(&file) {
                Ok(t) => t,
                Err(e) => {
                    eprintln!("qrmat: cannot read {}: {e}", file.display());
                    return ExitCode::from(USAGE);
                }
            };
            let stored = match BlockFile::parse(&text) {
                Ok(f) => f,
                Err(e) => return fail(&e),
            };
            let args = BlockArgs {
                rank: stored.rank,
                weight_i: stored.weight_i,
                weight_j: stored.weight_j,
                q_sqrt: stored.q_sqrt.clone(),
                lambda: stored.lambda.clone(),
                mode: stored.mode,
                stochastic: stored.stochastic,
            };
            let fresh = match block(&args) {
                Ok(f) => f,
                Err(e) => return fail(&e),
            };
            if fresh == stored {
                println!("{} nonzero entries match", stored.entries.len());
                ExitCode::SUCCESS
            } else {
                let keys: std::collections::BTreeSet<_> = stored.entries.keys().chain(fresh.entries.keys()).collect();
                let zero = rat(0, 1);
                for k in keys {
                    let (a, b) = (stored.entries.get(k).unwrap_or(&zero), fresh.entries.get(k).unwrap_or(&zero));
                    if a != b {
                        println!("mismatch at {k}: file {a}, computed {b}");
                    }
                }
                ExitCode::from(FAILURE)
            }
        }
        Command::Check { suite, rank, weight_i, weight_j, q_sqrt, lambda, seed, samples } => {
            let config = SuiteConfig { seed, samples, rank, weight_i, weight_j, point: q_sqrt.zip(lambda) };
            if config.rank.is_some_and(|n| n < 2) {
                eprintln!("qrmat: --rank must be at least 2");
                return ExitCode::from(USAGE);
            }
            let names: Vec<&str> = if suite == "all" { SUITES.to_vec() } else { vec![suite.as_str()] };
            let mut reports = Vec::new();
            for name in names {
                match run_suite(name, &config) {
                    Ok(r) => reports.extend(r),
                    Err(e) => return fail(&e),
                }
            }
            let (passed, failed) = print_reports(&reports);
            println!("{passed} passed, {failed} failed");
            let resonant = reports.iter().any(|r| r.error.as_ref().is_some_and(Error::is_resonance));
            if failed == 0 {
                ExitCode::SUCCESS
            } else if resonant && config.point.is_some() {
                ExitCode::from(RESONANCE)
            } else {
                ExitCode::from(FAILURE)
            }
        }
        Command::Tetra { max_occupation, q_sqrt } => {
            if max_occupation < 0 {
                eprintln!("qrmat: --max-occupation must be non-negative");
                return ExitCode::from(USAGE);
            }
            let qs = q_sqrt.map_or_else(|| vec![rat(1, 2), rat(2, 3)], |r| vec![r.clone() * &r]);
            let mut ok = true;
            for q in qs {
                let start = Instant::now();
                match tetrahedron_mismatch(max_occupation, &q) {
                    Ok(None) => println!("PASS tetrahedron [max_occupation={max_occupation} q={q}] {:.3}s", start.elapsed().as_secs_f64()),
                    Ok(Some(m)) => {
                        ok = false;
                        println!(
                            "FAIL tetrahedron [max_occupation={max_occupation} q={q}] at {:?} -> {:?}: lhs = {}, rhs = {}",
                            m.start, m.end, m.lhs, m.rhs
                        );
                    }
                    Err(e) => return fail(&e),
                }
            }
            if ok {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(FAILURE)
            }
        }
        Command::Bench { rank, weight_i, weight_j, weight_k, q_sqrt, lambda, mu } => {
            if rank < 2 {
                eprintln!("qrmat: --rank must be at least 2");
                return ExitCode::from(USAGE);
            }
            println!("ybe n={rank} I={weight_i} J={weight_j} K={weight_k} r={q_sqrt} lambda={lambda} mu={mu}");
            let start = Instant::now();
            let exact = match ybe_mismatches(rank, weight_i, weight_j, weight_k, &q_sqrt, &lambda, &mu, None) {
                Ok(m) => m,
                Err(e) => return fail(&e),
            };
            println!("exact: {:.3}s, {} mismatching entries", start.elapsed().as_secs_f64(), exact.len());
            let f = |v: &Scalar| qrmat::field::scalar_to_f64(v);
            let start = Instant::now();
            let approx = match ybe_mismatches(rank, weight_i, weight_j, weight_k, &f(&q_sqrt), &f(&lambda), &f(&mu), None) {
                Ok(m) => m,
                Err(e) => return fail(&e),
            };
            let worst = approx.iter().map(|m| relative_gap(m.lhs, m.rhs)).fold(0.0, f64::max);
            println!("f64:   {:.3}s, max relative gap {worst:.3e}", start.elapsed().as_secs_f64());
            if exact.is_empty() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(FAILURE)
            }
        }
    }
}
