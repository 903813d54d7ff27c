use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use mechlab::experiment::{
    cmd_check, cmd_eval, cmd_gen, cmd_replay, cmd_run, CommandError, CommandOutput, ExperimentConfig, Format,
    InstanceSource,
};
use mechlab::generate::{Family, GeneratorSpec};
use mechlab::Rational;

#[derive(Parser)]
#[command(name = "mechlab", version, about = "Truthful posted-price combinatorial auctions: simulate, evaluate, check")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate an instance and print its JSON.
    Gen {
        #[command(flatten)]
        generator: GeneratorArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run seeded trials and write the ratio report with every transcript.
    Run(ExperimentArgs),
    /// Run seeded trials and write the ratio report only.
    Eval(ExperimentArgs),
    /// Run oracle, lemma, IR and truthfulness suites. Exits 1 on failure.
    Check(ExperimentArgs),
    /// Rerun one execution from a saved coin record.
    Replay(ExperimentArgs),
}

#[derive(Args, Clone)]
struct GeneratorArgs {
    #[arg(long, value_parser = parse_family)]
    family: Option<Family>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    m: Option<usize>,
    /// Inclusive integer weight range, `lo,hi`.
    #[arg(long, value_parser = parse_range, default_value = "0,10")]
    range: (u32, u32),
    /// Clauses per bidder for random_xos.
    #[arg(long, default_value_t = 3)]
    clauses: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl GeneratorArgs {
    fn spec(&self) -> Result<Option<GeneratorSpec>, CommandError> {
        let Some(family) = self.family else {
            if self.n.is_some() || self.m.is_some() {
                return Err(CommandError::usage("--n and --m need --family"));
            }
            return Ok(None);
        };
        let (Some(n), Some(m)) = (self.n, self.m) else {
            return Err(CommandError::usage("--family needs --n and --m"));
        };
        Ok(Some(GeneratorSpec { family, n, m, value_range: self.range, clause_count: self.clauses, seed: self.seed }))
    }
}

#[derive(Args)]
struct ExperimentArgs {
    /// Instance JSON file.
    #[arg(long, conflicts_with = "family")]
    instance: Option<PathBuf>,
    #[command(flatten)]
    generator: GeneratorArgs,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    alpha: Option<usize>,
    #[arg(long)]
    bins: Option<usize>,
    /// Grand-bundle probability, e.g. `1/2`.
    #[arg(long)]
    grand_prob: Option<Rational>,
    /// Per-chunk stop probability, e.g. `1/3`.
    #[arg(long)]
    stop_prob: Option<Rational>,
    /// Saved coin record to replay.
    #[arg(long)]
    coins: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_parser = parse_format, default_value = "json")]
    format: Format,
    /// Answer demand queries as if prices were doubled.
    #[arg(long)]
    inject_fault: bool,
}

impl ExperimentArgs {
    fn config(&self) -> Result<ExperimentConfig, CommandError> {
        let source = match (&self.instance, self.generator.spec()?) {
            (Some(path), _) => Some(InstanceSource::File(path.clone())),
            (None, Some(spec)) => Some(InstanceSource::Generate(spec)),
            (None, None) => None,
        };
        Ok(ExperimentConfig {
            source,
            trials: self.trials,
            seed: self.generator.seed,
            alpha: self.alpha,
            bins: self.bins,
            grand_bundle_prob: self.grand_prob,
            termination_prob: self.stop_prob,
            coins: self.coins.clone(),
            out: self.out.clone(),
            format: self.format,
            inject_fault: self.inject_fault,
        })
    }
}

fn parse_family(s: &str) -> Result<Family, String> {
    s.parse().map_err(|e: mechlab::Error| e.to_string())
}

fn parse_format(s: &str) -> Result<Format, String> {
    s.parse().map_err(|e: CommandError| e.message)
}

fn parse_range(s: &str) -> Result<(u32, u32), String> {
    let (lo, hi) = s.split_once(',').ok_or("expected lo,hi")?;
    let lo = lo.trim().parse().map_err(|_| format!("bad lower bound `{lo}`"))?;
    let hi = hi.trim().parse().map_err(|_| format!("bad upper bound `{hi}`"))?;
    Ok((lo, hi))
}

fn execute(command: &Command) -> Result<(CommandOutput, ExperimentConfig), CommandError> {
    match command {
        Command::Gen { generator, out } => {
            let spec = generator.spec()?.ok_or_else(|| CommandError::usage("gen needs --family, --n and --m"))?;
            let config = ExperimentConfig { out: out.clone(), ..Default::default() };
            Ok((cmd_gen(&spec)?, config))
        }
        Command::Run(a) => a.config().and_then(|c| Ok((cmd_run(&c)?, c))),
        Command::Eval(a) => a.config().and_then(|c| Ok((cmd_eval(&c)?, c))),
        Command::Check(a) => a.config().and_then(|c| Ok((cmd_check(&c)?, c))),
        Command::Replay(a) => a.config().and_then(|c| Ok((cmd_replay(&c)?, c))),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = execute(&cli.command).and_then(|(output, config)| {
        if !config.emit(&output.bytes)? {
            std::io::stdout()
                .write_all(&output.bytes)
                .map_err(|e| CommandError::usage(format!("cannot write output: {e}")))?;
        }
        Ok(output.code)
    });
    match result {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("mechlab: {e}");
            ExitCode::from(e.code as u8)
        }
    }
}
