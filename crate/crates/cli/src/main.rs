use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use tensketch_cli::bench::{bench, compare_sketch_paths, log_log_slope, Kernel};
use tensketch_cli::distortion::{run_l1_distortion, DistortionConfig, InputFamily};
use tensketch_cli::output::{bench_csv, json, random_csv, rect_csv};
use tensketch_cli::selftest::run_selftest;
use tensketch_cli::{
    run_disjoint_rectangles, run_rect_plus_random, CliError, CliResult, ExperimentConfig, TABLE1, TABLE2,
};
use tensketch_oracle::Tester;

#[derive(Parser)]
#[command(name = "tensketch", version, about = "Tensor sketching experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Side length of the tensor.
    #[arg(long, default_value_t = 40)]
    n: usize,
    #[arg(long, default_value_t = 1000)]
    trials: u64,
    /// Ratio between consecutive sampling levels.
    #[arg(long, default_value_t = 5.0)]
    base: f64,
    /// Buckets per sampling level.
    #[arg(long, default_value_t = 10)]
    buckets: usize,
    #[arg(long, default_value_t = 0.01)]
    delta: f64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Decode with a tester that knows the support.
    #[arg(long)]
    oracle: bool,
    /// Emit JSON instead of CSV.
    #[arg(long)]
    json: bool,
    /// Write to a file instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Common {
    fn config(&self) -> ExperimentConfig {
        ExperimentConfig {
            n: self.n,
            trials: self.trials,
            level_base: self.base,
            buckets: self.buckets,
            delta: self.delta,
            seed: self.seed,
            tester: if self.oracle { Tester::Perfect } else { Tester::Real },
        }
    }

    fn emit(&self, text: String) -> CliResult<()> {
        match &self.out {
            Some(p) => std::fs::write(p, text)?,
            None => print!("{text}"),
        }
        Ok(())
    }
}

#[derive(Subcommand)]
enum Command {
    /// Two disjoint boxes; fraction of samples landing in the first.
    L0Rects(Common),
    /// One box plus as many random entries; fraction of samples in the box.
    L0RectRandom(Common),
    /// Distribution of ‖Sx‖₁/‖x‖₁ for an input family.
    L1Distortion {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 3)]
        modes: usize,
        #[arg(long, value_enum, default_value_t = InputFamily::RankOne)]
        family: InputFamily,
    },
    /// Median wall time per size for one kernel.
    Bench {
        #[arg(long, value_enum, default_value_t = Kernel::WindowSum2)]
        kernel: Kernel,
        /// Comma-separated sizes; defaults to the kernel's grid.
        #[arg(long, value_delimiter = ',')]
        sizes: Vec<usize>,
        #[arg(long, default_value_t = 5)]
        reps: usize,
        /// Also time the rank-one sketch against the dense path at this size.
        #[arg(long)]
        compare: Option<usize>,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        json: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Oracle-equivalence checks of every module.
    Selftest {
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
}

fn run(cli: Cli) -> CliResult<ExitCode> {
    match cli.command {
        Command::L0Rects(c) => {
            let rows = run_disjoint_rectangles(&c.config(), &TABLE1)?;
            c.emit(if c.json { json(&rows)? } else { rect_csv(&rows)? })?;
        }
        Command::L0RectRandom(c) => {
            let rows = run_rect_plus_random(&c.config(), &TABLE2)?;
            c.emit(if c.json { json(&rows)? } else { random_csv(&rows)? })?;
        }
        Command::L1Distortion { common: c, modes, family } => {
            let report = run_l1_distortion(&DistortionConfig {
                n: c.n,
                modes,
                trials: c.trials,
                delta: c.delta,
                family,
                seed: c.seed,
            })?;
            c.emit(json(&report)?)?;
        }
        Command::Bench { kernel, sizes, reps, compare, seed, json: as_json, out } => {
            let sizes = if sizes.is_empty() { kernel.default_sizes() } else { sizes };
            let rows = bench(kernel, &sizes, reps, seed)?;
            let cmp = compare.map(|n| compare_sketch_paths(n, reps, seed)).transpose()?;
            let text = if as_json {
                json(&serde_json::json!({
                    "rows": rows,
                    "slope": (rows.len() > 1).then(|| log_log_slope(&rows)),
                    "comparison": cmp,
                }))?
            } else {
                let mut t = bench_csv(&rows)?;
                if rows.len() > 1 {
                    t += &format!("# log-log slope {:.3}\n", log_log_slope(&rows));
                }
                if let Some(c) = cmp {
                    t += &format!("# n={} rank-one {:.4e}s dense {:.4e}s\n", c.n, c.fast_seconds, c.dense_seconds);
                }
                t
            };
            match out {
                Some(p) => std::fs::write(p, text)?,
                None => print!("{text}"),
            }
        }
        Command::Selftest { seed } => {
            let results = run_selftest(seed);
            let mut ok = true;
            for r in &results {
                println!("{} {} ({} checks)", if r.passed() { "PASS" } else { "FAIL" }, r.name, r.checks);
                for f in &r.failures {
                    println!("  {f}");
                }
                ok &= r.passed();
            }
            if !ok {
                return Ok(ExitCode::from(1));
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(threads) = std::env::var("TENSKETCH_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    match run(cli) {
        Ok(code) => code,
        Err(e @ CliError::Config(_)) | Err(e @ CliError::Sketch(_)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
