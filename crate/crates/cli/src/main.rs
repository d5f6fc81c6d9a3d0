use std::path::{Path, PathBuf};
use std::process::ExitCode;

use bnlab::divergence::network_ic;
use bnlab::experiment::{self, figure1_preset, ExperimentConfig, Prepared};
use bnlab::format::{figure1_network, read_bn};
use bnlab::graphs::{enumerate_dags, equivalence_classes};
use bnlab::{BayesNet, Error};
use clap::{Args, Parser, Subcommand};

/// Sample-complexity experiments for Bayesian-network structure learning.
#[derive(Parser)]
#[command(name = "bnlab", version)]
struct Cli {
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Count labeled DAGs and Markov-equivalence classes.
    Enumerate {
        #[arg(long)]
        n: usize,
    },
    /// Describe a network file (default: the bundled four-node network).
    Info {
        #[arg(long)]
        network: Option<PathBuf>,
    },
    /// Score every candidate on one sampled dataset; writes scores.csv.
    Score(ConfigArgs),
    /// Estimate error probabilities over the N grid; writes errors.csv.
    Error(ConfigArgs),
    /// Evaluate bounds and asymptotes; writes bounds.csv.
    Bounds(ConfigArgs),
    /// Run every stage of a config.
    Run(ConfigArgs),
    /// Run the bundled four-node experiment.
    Figure1 {
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value = "figure1")]
        out: PathBuf,
        /// Datasets per proposal.
        #[arg(long)]
        blocks: Option<u64>,
        /// Number of proposals.
        #[arg(long)]
        proposals: Option<usize>,
        /// Print the preset as a config file and exit.
        #[arg(long)]
        print_config: bool,
    },
}

#[derive(Args)]
struct ConfigArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

impl ConfigArgs {
    fn load(&self) -> Result<ExperimentConfig, Error> {
        let mut cfg = ExperimentConfig::load(&self.config)?;
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if let Some(out) = &self.out {
            cfg.output = out.clone();
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(t) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(t).build_global() {
            eprintln!("error: cannot set up {t} threads: {e}");
            return ExitCode::from(1);
        }
    }
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_config() {
                2
            } else if e.is_capacity() {
                3
            } else {
                1
            })
        }
    }
}

fn execute(command: Command) -> Result<(), Error> {
    match command {
        Command::Enumerate { n } => {
            let dags = enumerate_dags(n)?;
            let classes = equivalence_classes(&dags);
            println!("dags={} classes={}", dags.len(), classes.len());
        }
        Command::Info { network } => {
            let net = match network {
                Some(p) => read_bn(&p).map_err(as_config)?,
                None => figure1_network(),
            };
            print_info(&net);
        }
        Command::Score(a) => stage(&a, "scores.csv", experiment::run_scores)?,
        Command::Error(a) => stage(&a, "errors.csv", experiment::run_errors)?,
        Command::Bounds(a) => stage(&a, "bounds.csv", experiment::run_bounds)?,
        Command::Run(a) => {
            let cfg = a.load()?;
            let out = experiment::run(&cfg)?;
            println!("wrote {}", out.directory.display());
        }
        Command::Figure1 { seed, out, blocks, proposals, print_config } => {
            let mut cfg = figure1_preset();
            cfg.output = out;
            if let Some(s) = seed {
                cfg.seed = s;
            }
            if let Some(b) = blocks {
                cfg.blocks = b;
            }
            if let Some(k) = proposals {
                cfg.proposal_count = k;
            }
            if print_config {
                print!("{}", cfg.to_toml());
                return Ok(());
            }
            cfg.validate()?;
            let out = experiment::run(&cfg)?;
            if let Some(c) = out.summary["errors"].get("crossover") {
                println!("crossings={} crossover_n={}", c["crossings"], c["crossover_n"]);
            }
            println!("wrote {}", out.directory.display());
        }
    }
    Ok(())
}

type Stage = fn(&ExperimentConfig, &Prepared, &Path) -> Result<serde_json::Value, Error>;

fn stage(args: &ConfigArgs, file: &str, f: Stage) -> Result<(), Error> {
    let cfg = args.load()?;
    let prep = Prepared::new(&cfg)?;
    std::fs::create_dir_all(&cfg.output)?;
    f(&cfg, &prep, &cfg.output)?;
    println!("wrote {}", cfg.output.join(file).display());
    Ok(())
}

/// Unreadable or malformed network files are configuration errors.
fn as_config(e: Error) -> Error {
    match e {
        Error::Io(_) | Error::Parse { .. } | Error::InvalidArgument(_) | Error::Cyclic => Error::Config(e.to_string()),
        other => other,
    }
}

fn print_info(net: &BayesNet) {
    println!("nodes={}", net.n());
    println!("edges={}", net.dag().label());
    println!("dimension={}", net.dag().dimension());
    println!("gamma={}", net.gamma());
    println!("strict={}", net.is_strict());
    match network_ic(net) {
        Ok(ic) => println!("ic_bits={:.12}", ic.bits()),
        Err(e) => println!("ic_bits=unavailable ({e})"),
    }
}
