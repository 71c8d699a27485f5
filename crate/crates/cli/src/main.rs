mod argv;
mod commands;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use chrono::NaiveDate;
use clap::{Args, Parser, Subcommand, ValueEnum};
use merger_ancestry::analysis::{Averaging, Binning, DEFAULT_GROUP_SIZE, DEFAULT_WINDOW_YEARS};
use merger_ancestry::model::{
    DEFAULT_ANCESTRY_EXPONENT, DEFAULT_BASE_PROBABILITY, DEFAULT_ENSEMBLE_RUNS, DEFAULT_MAX_CYCLES,
};

use commands::CliError;

/// Merger ancestry simulations and empirical analyses.
#[derive(Parser, Debug)]
#[command(name = "ancestry", version)]
pub struct Cli {
    /// Directory for result files.
    #[arg(long, global = true, env = "ANCESTRY_OUT_DIR", default_value = ".")]
    pub out_dir: PathBuf,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Run the agent model once.
    Simulate(SimulateArgs),
    /// Run many seeds and summarise the spread of outcomes.
    Ensemble(EnsembleArgs),
    /// Ancestor counts from a merger event log.
    Ancestry(AncestryArgs),
    /// Rank/ancestry series and slope fit for a table of counts.
    Zipf(ZipfArgs),
    /// Forward merger counts of entities ranked by ancestry vs balance sheet.
    RankCompare(RankCompareArgs),
    /// GDP-indexed organic growth of surviving entities.
    Growth(GrowthArgs),
    /// Asset shares of the 100 size percentiles per year.
    MarketShare(MarketShareArgs),
    /// Re-run the command recorded in a result file.
    Replay(ReplayArgs),
}

#[derive(Args, Debug, Clone)]
pub struct IngestArgs {
    /// Alias sidecar (`alias,canonical`) applied to event ids.
    #[arg(long)]
    pub alias: Option<PathBuf>,
    /// Fail on the first malformed input row instead of skipping it.
    #[arg(long)]
    pub strict: bool,
}

#[derive(Args, Debug, Clone)]
pub struct ModelArgs {
    /// Number of agents at the start.
    #[arg(long, required_unless_present = "events", conflicts_with = "events", requires = "target")]
    pub initial: Option<usize>,
    /// Stop once this many agents are live.
    #[arg(long, required_unless_present = "events", conflicts_with = "events")]
    pub target: Option<usize>,
    /// Take the initial count (all entities) and target (survivors) from an event log.
    #[arg(long)]
    pub events: Option<PathBuf>,
    #[command(flatten)]
    pub ingest: IngestArgs,
    /// Base merger probability per cycle.
    #[arg(long = "p", default_value_t = DEFAULT_BASE_PROBABILITY)]
    pub base_probability: f64,
    /// Exponent applied to (1 + ancestry).
    #[arg(long, default_value_t = DEFAULT_ANCESTRY_EXPONENT)]
    pub exponent: f64,
    #[arg(long, default_value_t = DEFAULT_MAX_CYCLES)]
    pub max_cycles: u64,
    /// Constant merger probability (no ancestry weighting).
    #[arg(long)]
    pub baseline: bool,
}

#[derive(Args, Debug, Clone)]
pub struct OutputArgs {
    /// Prefix for output file names.
    #[arg(long, value_parser = parse_tag)]
    pub tag: Option<String>,
    /// Histogram bins: `log2` or `linear:<width>`.
    #[arg(long, default_value = "log2", value_parser = parse_binning)]
    pub binning: Binning,
}

#[derive(Args, Debug, Clone)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Also write per-cycle merger counts.
    #[arg(long)]
    pub history: bool,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Args, Debug, Clone)]
pub struct EnsembleArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, default_value_t = DEFAULT_ENSEMBLE_RUNS)]
    pub runs: usize,
    /// Master seed; per-run seeds are derived from it.
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, default_value_t = 0.05)]
    pub band_low: f64,
    #[arg(long, default_value_t = 0.95)]
    pub band_high: f64,
    /// Counts or distribution file to check against the envelope.
    #[arg(long)]
    pub compare: Option<PathBuf>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Args, Debug, Clone)]
pub struct AncestryArgs {
    #[arg(long)]
    pub events: PathBuf,
    #[command(flatten)]
    pub ingest: IngestArgs,
    /// Snapshot dates (repeatable); defaults to the last event date.
    #[arg(long = "as-of")]
    pub as_of: Vec<NaiveDate>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Args, Debug, Clone)]
pub struct ZipfArgs {
    /// CSV with an `ancestry` column (result files accepted).
    #[arg(long)]
    pub counts: PathBuf,
    /// First rank of the slope fit.
    #[arg(long)]
    pub rank_lo: Option<usize>,
    /// Last rank of the slope fit.
    #[arg(long)]
    pub rank_hi: Option<usize>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum AveragingArg {
    WindowTotal,
    PerYear,
}

impl From<AveragingArg> for Averaging {
    fn from(a: AveragingArg) -> Self {
        match a {
            AveragingArg::WindowTotal => Averaging::WindowTotal,
            AveragingArg::PerYear => Averaging::PerYear,
        }
    }
}

#[derive(Args, Debug, Clone)]
pub struct RankCompareArgs {
    #[arg(long)]
    pub events: PathBuf,
    #[arg(long)]
    pub panel: PathBuf,
    #[command(flatten)]
    pub ingest: IngestArgs,
    /// Base years, e.g. `1990-2010` or `1995,1998`.
    #[arg(long, value_parser = parse_years)]
    pub years: Years,
    #[arg(long, default_value_t = DEFAULT_WINDOW_YEARS)]
    pub window: u32,
    #[arg(long, default_value_t = DEFAULT_GROUP_SIZE)]
    pub group_size: usize,
    #[arg(long, value_enum, default_value_t = AveragingArg::WindowTotal)]
    pub averaging: AveragingArg,
    #[arg(long, value_parser = parse_tag)]
    pub tag: Option<String>,
}

#[derive(Args, Debug, Clone)]
pub struct GrowthArgs {
    #[arg(long)]
    pub events: PathBuf,
    #[arg(long)]
    pub panel: PathBuf,
    #[arg(long)]
    pub gdp: PathBuf,
    #[command(flatten)]
    pub ingest: IngestArgs,
    #[arg(long)]
    pub start: i32,
    #[arg(long)]
    pub end: i32,
    /// Report the balance-weighted mean index of entities with at least this many ancestors.
    #[arg(long)]
    pub min_acquisitions: Option<u64>,
    #[arg(long, value_parser = parse_tag)]
    pub tag: Option<String>,
}

#[derive(Args, Debug, Clone)]
pub struct MarketShareArgs {
    #[arg(long)]
    pub panel: PathBuf,
    #[arg(long)]
    pub strict: bool,
    /// Years to include; defaults to every panel year.
    #[arg(long, value_parser = parse_years)]
    pub years: Option<Years>,
    #[arg(long, value_parser = parse_tag)]
    pub tag: Option<String>,
}

#[derive(Args, Debug, Clone)]
pub struct ReplayArgs {
    /// A result file written by this tool.
    pub file: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Years(pub Vec<i32>);

fn parse_years(s: &str) -> Result<Years, String> {
    let mut years = Vec::new();
    for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        // A leading '-' would be a negative year; ranges split on the last '-'.
        match part.rfind('-').filter(|&i| i > 0) {
            Some(i) => {
                let lo: i32 = part[..i].parse().map_err(|_| format!("bad year range `{part}`"))?;
                let hi: i32 = part[i + 1..].parse().map_err(|_| format!("bad year range `{part}`"))?;
                if lo > hi {
                    return Err(format!("empty year range `{part}`"));
                }
                years.extend(lo..=hi);
            }
            None => years.push(part.parse().map_err(|_| format!("bad year `{part}`"))?),
        }
    }
    if years.is_empty() {
        return Err("no years given".to_string());
    }
    years.sort_unstable();
    years.dedup();
    Ok(Years(years))
}

fn parse_binning(s: &str) -> Result<Binning, String> {
    Binning::parse(s).ok_or_else(|| format!("unknown binning `{s}` (use log2 or linear:<width>)"))
}

fn parse_tag(s: &str) -> Result<String, String> {
    if !s.is_empty() && s.chars().all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_') {
        Ok(s.to_string())
    } else {
        Err("tags use letters, digits, '-' and '_'".to_string())
    }
}

/// Builds the fully explicit argument list recorded in result metadata.
/// The output directory is left out so files replay byte-identically
/// elsewhere; input paths are made absolute.
pub struct Canonical(Vec<String>);

impl Canonical {
    fn new(sub: &str) -> Self {
        Canonical(vec![sub.to_string()])
    }

    fn flag(&mut self, name: &str, on: bool) {
        if on {
            self.0.push(format!("--{name}"));
        }
    }

    fn opt(&mut self, name: &str, value: impl ToString) {
        self.0.push(format!("--{name}"));
        self.0.push(value.to_string());
    }

    fn path(&mut self, name: &str, path: &Path) -> Result<(), CliError> {
        let abs = std::fs::canonicalize(path).map_err(|source| CliError::Input { path: path.to_path_buf(), source })?;
        self.opt(name, abs.display());
        Ok(())
    }

    fn ingest(&mut self, a: &IngestArgs) -> Result<(), CliError> {
        if let Some(alias) = &a.alias {
            self.path("alias", alias)?;
        }
        self.flag("strict", a.strict);
        Ok(())
    }

    fn model(&mut self, m: &ModelArgs) -> Result<(), CliError> {
        match &m.events {
            Some(events) => self.path("events", events)?,
            None => {
                self.opt("initial", m.initial.unwrap_or_default());
                self.opt("target", m.target.unwrap_or_default());
            }
        }
        self.ingest(&m.ingest)?;
        self.opt("p", m.base_probability);
        self.opt("exponent", m.exponent);
        self.opt("max-cycles", m.max_cycles);
        self.flag("baseline", m.baseline);
        Ok(())
    }

    fn output(&mut self, o: &OutputArgs) {
        self.tag(&o.tag);
        self.opt("binning", o.binning.label());
    }

    fn tag(&mut self, tag: &Option<String>) {
        if let Some(t) = tag {
            self.opt("tag", t);
        }
    }

    fn years(&mut self, years: &Years) {
        self.opt("years", years.0.iter().map(i32::to_string).collect::<Vec<_>>().join(","));
    }

    pub fn encoded(&self) -> String {
        argv::encode(&self.0)
    }
}

impl Command {
    pub fn canonical(&self) -> Result<Canonical, CliError> {
        let c = match self {
            Command::Simulate(a) => {
                let mut c = Canonical::new("simulate");
                c.model(&a.model)?;
                c.opt("seed", a.seed);
                c.flag("history", a.history);
                c.output(&a.output);
                c
            }
            Command::Ensemble(a) => {
                let mut c = Canonical::new("ensemble");
                c.model(&a.model)?;
                c.opt("runs", a.runs);
                c.opt("seed", a.seed);
                c.opt("band-low", a.band_low);
                c.opt("band-high", a.band_high);
                if let Some(p) = &a.compare {
                    c.path("compare", p)?;
                }
                c.output(&a.output);
                c
            }
            Command::Ancestry(a) => {
                let mut c = Canonical::new("ancestry");
                c.path("events", &a.events)?;
                c.ingest(&a.ingest)?;
                for d in &a.as_of {
                    c.opt("as-of", d);
                }
                c.output(&a.output);
                c
            }
            Command::Zipf(a) => {
                let mut c = Canonical::new("zipf");
                c.path("counts", &a.counts)?;
                if let Some(lo) = a.rank_lo {
                    c.opt("rank-lo", lo);
                }
                if let Some(hi) = a.rank_hi {
                    c.opt("rank-hi", hi);
                }
                c.output(&a.output);
                c
            }
            Command::RankCompare(a) => {
                let mut c = Canonical::new("rank-compare");
                c.path("events", &a.events)?;
                c.path("panel", &a.panel)?;
                c.ingest(&a.ingest)?;
                c.years(&a.years);
                c.opt("window", a.window);
                c.opt("group-size", a.group_size);
                c.opt("averaging", Averaging::from(a.averaging).as_str().replace('_', "-"));
                c.tag(&a.tag);
                c
            }
            Command::Growth(a) => {
                let mut c = Canonical::new("growth");
                c.path("events", &a.events)?;
                c.path("panel", &a.panel)?;
                c.path("gdp", &a.gdp)?;
                c.ingest(&a.ingest)?;
                c.opt("start", a.start);
                c.opt("end", a.end);
                if let Some(m) = a.min_acquisitions {
                    c.opt("min-acquisitions", m);
                }
                c.tag(&a.tag);
                c
            }
            Command::MarketShare(a) => {
                let mut c = Canonical::new("market-share");
                c.path("panel", &a.panel)?;
                c.flag("strict", a.strict);
                if let Some(y) = &a.years {
                    c.years(y);
                }
                c.tag(&a.tag);
                c
            }
            Command::Replay(_) => return Err(CliError::Usage("replay is not itself replayable".into())),
        };
        Ok(c)
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match commands::run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn year_lists() {
        assert_eq!(parse_years("1990-1992,1995").unwrap(), Years(vec![1990, 1991, 1992, 1995]));
        assert_eq!(parse_years("2001, 2000,2001").unwrap(), Years(vec![2000, 2001]));
        assert!(parse_years("1995-1990").is_err());
        assert!(parse_years("").is_err());
    }

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
