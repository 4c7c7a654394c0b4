use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use probserial::{Horizon, Rational};

#[derive(Parser, Debug)]
#[command(name = "probserial", version, about = "Exact Probabilistic Serial runs and manipulation analysis")]
pub struct Cli {
    /// Suppress advisory output on stderr: trend warnings and counterexample dumps.
    #[arg(short, long, global = true)]
    pub quiet: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Run the eating process and print the allocation.
    Run(RunArgs),
    /// Search for a utility-maximizing misreport.
    Manipulate(ManipulateArgs),
    /// Randomized checks of pause monotonicity, the elimination regime and the 3/2 bound.
    Verify(VerifyArgs),
    /// Write an instance file.
    Gen(GenArgs),
    /// Monte Carlo grid of average manipulation gains.
    Experiment(ExperimentArgs),
}

#[derive(Args, Debug)]
#[group(required = true, multiple = false)]
pub struct Source {
    /// Instance JSON file.
    #[arg(long, value_name = "PATH")]
    pub instance: Option<PathBuf>,
    /// The 3-agent example in which agent 0 gains by misreporting.
    #[arg(long)]
    pub worked_example: bool,
    /// Tight-bound family member of (even) size N.
    #[arg(long, value_name = "N")]
    pub tight: Option<usize>,
    /// Uniformly random profile with N agents and M items (see --seed).
    #[arg(long, num_args = 2, value_names = ["N", "M"])]
    pub random: Option<Vec<usize>>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum TextOrJson {
    Text,
    Json,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Space {
    InterestedFirst,
    Full,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum TableFormat {
    Csv,
    Json,
    Gnuplot,
}

/// `AGENT:START..END`, agents counted from 0, `END` may be `inf`.
#[derive(Clone, Debug)]
pub struct PauseSpec {
    pub agent: usize,
    pub start: Rational,
    pub end: Horizon,
}

pub fn parse_pause(s: &str) -> Result<PauseSpec, String> {
    let (agent, span) = s.split_once(':').ok_or("expected AGENT:START..END")?;
    let (start, end) = span.split_once("..").ok_or("expected START..END")?;
    let agent = agent.trim().parse().map_err(|_| format!("bad agent index `{agent}`"))?;
    let start = start.trim().parse().map_err(|_| format!("bad start time `{start}`"))?;
    let end = match end.trim() {
        "inf" | "never" => Horizon::Never,
        e => Horizon::At(e.parse().map_err(|_| format!("bad end time `{e}`"))?),
    };
    Ok(PauseSpec { agent, start, end })
}

/// Inclusive `A..B` (or `A..=B`, or a single value).
pub fn parse_range(s: &str) -> Result<(usize, usize), String> {
    let num = |x: &str| x.trim().parse::<usize>().map_err(|_| format!("bad number `{x}`"));
    let (a, b) = match s.split_once("..") {
        Some((a, b)) => (num(a)?, num(b.strip_prefix('=').unwrap_or(b))?),
        None => {
            let a = num(s)?;
            (a, a)
        }
    };
    if a > b {
        return Err(format!("empty range {s}"));
    }
    Ok((a, b))
}

fn parse_rational(s: &str) -> Result<Rational, String> {
    s.parse().map_err(|_| format!("bad rational `{s}`"))
}

#[derive(Args, Debug)]
pub struct RunArgs {
    #[command(flatten)]
    pub source: Source,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Pause an agent over [START, END); repeatable.
    #[arg(long = "pause", value_name = "AGENT:START..END", value_parser = parse_pause)]
    pub pauses: Vec<PauseSpec>,
    /// Also print who eats what in every segment.
    #[arg(long)]
    pub timeline: bool,
    #[arg(long, value_enum, default_value_t = TextOrJson::Text)]
    pub format: TextOrJson,
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct ManipulateArgs {
    #[command(flatten)]
    pub source: Source,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Manipulating agent (defaults to the agent the utilities belong to).
    #[arg(long)]
    pub agent: Option<usize>,
    /// Use the dichotomous valuation on the agent's top K items.
    #[arg(long)]
    pub k: Option<usize>,
    /// Report space; defaults to interested-first for dichotomous valuations.
    #[arg(long, value_enum)]
    pub space: Option<Space>,
    /// Same as --space full.
    #[arg(long, conflicts_with = "space")]
    pub full_search: bool,
    /// Largest m for which all m! reports may be tried.
    #[arg(long, default_value_t = probserial::manipulation::DEFAULT_FULL_CAP)]
    pub cap: usize,
    #[arg(long, value_enum, default_value_t = TextOrJson::Text)]
    pub format: TextOrJson,
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    /// Pause monotonicity on random pause plans.
    #[arg(long, visible_alias = "pause-monotonicity")]
    pub lemma2: bool,
    /// Elimination-time bound when the interested set finishes before 1/2.
    #[arg(long, visible_alias = "elimination")]
    pub theorem1: bool,
    /// Exhaustive best responses against the 3/2 bound.
    #[arg(long)]
    pub global_bound: bool,
    /// Instances per check.
    #[arg(long, default_value_t = 100)]
    pub seeds: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Largest n and m for pause-monotonicity instances.
    #[arg(long, default_value_t = 10)]
    pub max_size: usize,
    /// Global-bound instances cycle through n = m = 3..=N.
    #[arg(long, default_value_t = 5)]
    pub bound_max_n: usize,
    #[arg(long, env = "PS_WORKERS", default_value_t = 0)]
    pub workers: usize,
    /// Write the full JSON report (including counterexamples) here.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
#[group(id = "gen_source", required = true, multiple = false)]
pub struct GenSource {
    #[arg(long, value_name = "N")]
    pub tight: Option<usize>,
    /// N agents, M items, dichotomous top-K valuation for agent 0.
    #[arg(long, num_args = 3, value_names = ["N", "M", "K"])]
    pub random: Option<Vec<usize>>,
    #[arg(long)]
    pub worked_example: bool,
}

#[derive(Args, Debug)]
pub struct GenArgs {
    #[command(flatten)]
    pub source: GenSource,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct ExperimentArgs {
    /// Sizes n = m, inclusive.
    #[arg(long, value_name = "A..B", value_parser = parse_range)]
    pub n_range: Option<(usize, usize)>,
    #[arg(long, default_value_t = 1)]
    pub n_step: usize,
    #[arg(long, value_name = "A..B", value_parser = parse_range)]
    pub k_range: Option<(usize, usize)>,
    #[arg(long)]
    pub per_cell: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum)]
    pub space: Option<Space>,
    /// Same as --space full.
    #[arg(long, conflicts_with = "space")]
    pub full_search: bool,
    #[arg(long, value_enum, default_value_t = TableFormat::Csv)]
    pub format: TableFormat,
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
    /// n = 8..20, 10000 instances per cell.
    #[arg(long)]
    pub paper_scale: bool,
    #[arg(long, env = "PS_WORKERS", default_value_t = 0)]
    pub workers: usize,
    /// Refuse grids needing more engine runs than this.
    #[arg(long)]
    pub budget: Option<u128>,
    /// Tolerance for trend warnings.
    #[arg(long, default_value = "1/200", value_parser = parse_rational)]
    pub slack: Rational,
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn pause_and_range_syntax() {
        let p = parse_pause("1:0..inf").unwrap();
        assert_eq!(p.agent, 1);
        assert!(p.end.is_never());
        let p = parse_pause("0:1/4..3/4").unwrap();
        assert_eq!(p.end, Horizon::At("3/4".parse().unwrap()));
        assert!(parse_pause("0:1/4").is_err());
        assert!(parse_pause("x:0..1").is_err());
        assert_eq!(parse_range("8..12"), Ok((8, 12)));
        assert_eq!(parse_range("2..=6"), Ok((2, 6)));
        assert_eq!(parse_range("5"), Ok((5, 5)));
        assert!(parse_range("6..2").is_err());
    }
}
