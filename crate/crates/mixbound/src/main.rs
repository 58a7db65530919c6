use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use mixbound::chain::Distribution;
use mixbound::report::{
    emit_report, parse_chain_file, render_report, run_report, ReportFormat, SimConfig,
};
use mixbound::{check, sim};

#[derive(Parser)]
#[command(
    name = "mixbound",
    version,
    about = "Convergence-rate bounds in total variation for finite Markov chains"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Compute every applicable bound on an (m, n) grid and compare against
    /// the exact worst-case distance
    Bounds {
        /// Chain file (JSON schema, see README)
        #[arg(long)]
        input: PathBuf,
        /// Comma-separated block sizes
        #[arg(long, value_delimiter = ',', default_value = "1")]
        m: Vec<usize>,
        /// Largest time on the grid
        #[arg(long, default_value_t = 16)]
        n_max: usize,
        /// Slack added to spectral radii
        #[arg(long, default_value_t = 1e-6)]
        eps: f64,
        #[arg(long, value_enum, default_value_t = FormatArg::Csv)]
        format: FormatArg,
        /// Output path; stdout when omitted
        #[arg(long)]
        output: Option<PathBuf>,
        /// Add simulated coupling rows with this many trials
        #[arg(long)]
        trials: Option<u64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Simulate the coupling construction and emit per-block statistics as
    /// JSON
    Simulate {
        #[arg(long)]
        input: PathBuf,
        /// Block size in chain steps
        #[arg(long, default_value_t = 1)]
        m: usize,
        /// Number of blocks per trajectory
        #[arg(long, default_value_t = 8)]
        blocks: usize,
        #[arg(long, default_value_t = 100000)]
        trials: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Initial law of the first copy: a state index or "uniform"
        #[arg(long, default_value = "0")]
        mu1: String,
        /// Initial law of the second copy: a state index or "uniform"
        #[arg(long, default_value = "uniform")]
        mu2: String,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Run the invariant suite over the bundled chains; exits nonzero on any
    /// violation
    Check,
}

fn parse_mu(text: &str, n: usize) -> mixbound::Result<Distribution> {
    if text == "uniform" {
        return Distribution::uniform(n);
    }
    let index: usize = text.parse().map_err(|_| {
        mixbound::Error::Parse(format!(
            "initial law must be a state index or \"uniform\", got `{text}`"
        ))
    })?;
    Distribution::point_mass(n, index)
}

fn run() -> mixbound::Result<ExitCode> {
    let cli = Cli::parse();
    match cli.command {
        Command::Bounds {
            input,
            m,
            n_max,
            eps,
            format,
            output,
            trials,
            seed,
        } => {
            let chain = parse_chain_file(&input)?;
            let sim_cfg = trials.map(|trials| SimConfig { trials, seed });
            let report = run_report(&chain, &m, n_max, eps, sim_cfg)?;
            let format = match format {
                FormatArg::Csv => ReportFormat::Csv,
                FormatArg::Json => ReportFormat::Json,
            };
            match output {
                Some(path) => emit_report(&report, format, path)?,
                None => print!("{}", render_report(&report, format)?),
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Simulate {
            input,
            m,
            blocks,
            trials,
            seed,
            mu1,
            mu2,
            output,
        } => {
            let chain = parse_chain_file(&input)?;
            let n = chain.n_states();
            let mu1 = parse_mu(&mu1, n)?;
            let mu2 = parse_mu(&mu2, n)?;
            let stats = sim::simulate(&chain, &mu1, &mu2, m, blocks, trials, seed)?;
            let text = serde_json::to_string_pretty(&stats)
                .map_err(|e| mixbound::Error::Parse(e.to_string()))?;
            match output {
                Some(path) => std::fs::write(path, text)?,
                None => println!("{text}"),
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Check => {
            let results = check::run_checks()?;
            let mut failures = 0usize;
            for r in &results {
                let mark = if r.pass { "ok  " } else { "FAIL" };
                if r.detail.is_empty() {
                    println!("[{mark}] {}", r.name);
                } else {
                    println!("[{mark}] {} ({})", r.name, r.detail);
                }
                if !r.pass {
                    failures += 1;
                }
            }
            println!("{} checks, {} failures", results.len(), failures);
            if failures > 0 {
                Ok(ExitCode::from(2))
            } else {
                Ok(ExitCode::SUCCESS)
            }
        }
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(1)
        }
    }
}
