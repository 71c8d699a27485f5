use std::fs;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use merger_ancestry::analysis::{
    ancestry_distribution, distribution_envelope, market_share_percentiles, organic_growth, rank_merger_forecast,
    weighted_mean_growth, zipf_series, zipf_slope, AnalysisError, BalancePanel, Binning, CoverageReport,
    EmpiricalSeries, Histogram, ZipfPoint,
};
use merger_ancestry::genealogy::{GenealogyError, GenealogyForest, MergerEvent};
use merger_ancestry::io::{self, IngestReport, IoError, Metadata, ResultFile};
use merger_ancestry::model::{
    run_ensemble_with, run_simulation, EnsembleOptions, ModelParams, ParamsError, SimulationResult,
};
use thiserror::Error;

use crate::{
    argv, AncestryArgs, Cli, Command, EnsembleArgs, GrowthArgs, IngestArgs, MarketShareArgs, ModelArgs,
    RankCompareArgs, SimulateArgs, ZipfArgs,
};

const EXIT_OK: u8 = 0;
const EXIT_USAGE: u8 = 1;
const EXIT_DATA: u8 = 2;
const EXIT_MAX_CYCLES: u8 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("invalid parameters: {0}")]
    Params(#[from] ParamsError),
    #[error("{path}: {source}")]
    Input { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Io(#[from] IoError),
    #[error("invalid event log: {0}")]
    Genealogy(#[from] GenealogyError),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
    #[error("{0}")]
    Data(String),
    #[error("cannot create {path}: {source}")]
    Output { path: PathBuf, source: std::io::Error },
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) | CliError::Params(_) => EXIT_USAGE,
            _ => EXIT_DATA,
        }
    }
}

/// Writes result files under the output directory, stamping each with the
/// resolved command line.
struct Emitter {
    dir: PathBuf,
    tag: Option<String>,
    command: String,
}

impl Emitter {
    fn new(dir: &Path, tag: &Option<String>, command: &Command) -> Result<Self, CliError> {
        let command = command.canonical()?.encoded();
        fs::create_dir_all(dir).map_err(|source| CliError::Output { path: dir.to_path_buf(), source })?;
        Ok(Self { dir: dir.to_path_buf(), tag: tag.clone(), command })
    }

    fn emit(&self, name: &str, mut file: ResultFile) -> Result<(), CliError> {
        file.metadata.set("command", &self.command);
        let stem = match &self.tag {
            Some(t) => format!("{t}_{name}"),
            None => name.to_string(),
        };
        let path = self.dir.join(format!("{stem}.csv"));
        io::write_result(&path, &file)?;
        println!("wrote {}", path.display());
        Ok(())
    }
}

pub fn run(cli: Cli) -> Result<u8, CliError> {
    let out = cli.out_dir;
    match cli.command {
        Command::Replay(a) => replay(&a.file, &out),
        cmd => execute(cmd, &out),
    }
}

fn execute(cmd: Command, out: &Path) -> Result<u8, CliError> {
    match &cmd {
        Command::Simulate(a) => simulate(a, &Emitter::new(out, &a.output.tag, &cmd)?),
        Command::Ensemble(a) => ensemble(a, &Emitter::new(out, &a.output.tag, &cmd)?),
        Command::Ancestry(a) => ancestry(a, &Emitter::new(out, &a.output.tag, &cmd)?),
        Command::Zipf(a) => zipf(a, &Emitter::new(out, &a.output.tag, &cmd)?),
        Command::RankCompare(a) => rank_compare(a, &Emitter::new(out, &a.tag, &cmd)?),
        Command::Growth(a) => growth(a, &Emitter::new(out, &a.tag, &cmd)?),
        Command::MarketShare(a) => market_share(a, &Emitter::new(out, &a.tag, &cmd)?),
        Command::Replay(_) => Err(CliError::Usage("nested replay".into())),
    }
}

fn replay(file: &Path, out: &Path) -> Result<u8, CliError> {
    let result = io::read_result(file)?;
    let line = result
        .metadata
        .get("command")
        .ok_or_else(|| CliError::Data(format!("{} records no command", file.display())))?;
    let tokens = argv::decode(line).ok_or_else(|| CliError::Data(format!("{}: malformed command", file.display())))?;
    let cli = <Cli as clap::Parser>::try_parse_from(std::iter::once("ancestry".to_string()).chain(tokens))
        .map_err(|e| CliError::Data(format!("{}: recorded command does not parse: {e}", file.display())))?;
    match cli.command {
        Command::Replay(_) => Err(CliError::Data("recorded command is a replay".into())),
        cmd => execute(cmd, out),
    }
}

fn report_ingest(path: &Path, report: &IngestReport) {
    for r in &report.rejected {
        eprintln!("warning: {}:{}: skipped: {}", path.display(), r.line, r.reason);
    }
}

fn ingest_metadata(meta: &mut Metadata, key: &str, report: &IngestReport) {
    meta.set(format!("{key}_rows_read"), report.rows_read).set(format!("{key}_rows_rejected"), report.rejected.len());
}

struct LoadedEvents {
    events: Vec<MergerEvent>,
    report: IngestReport,
    forest: GenealogyForest,
}

fn load_events(path: &Path, ingest: &IngestArgs) -> Result<LoadedEvents, CliError> {
    let aliases = ingest.alias.as_deref().map(io::read_aliases).transpose()?;
    let (events, report) = io::read_events(path, ingest.strict, aliases.as_ref())?;
    report_ingest(path, &report);
    let forest = GenealogyForest::build(&events)?;
    Ok(LoadedEvents { events, report, forest })
}

fn load_panel(path: &Path, strict: bool) -> Result<(BalancePanel, IngestReport), CliError> {
    let (panel, report) = io::read_panel(path, strict)?;
    report_ingest(path, &report);
    Ok((panel, report))
}

fn model_params(m: &ModelArgs) -> Result<(ModelParams, Option<IngestReport>), CliError> {
    let (initial, target, report) = match &m.events {
        Some(path) => {
            let loaded = load_events(path, &m.ingest)?;
            let last = loaded.forest.last_date().ok_or_else(|| CliError::Data(format!("{}: no events", path.display())))?;
            let initial = loaded.forest.node_count();
            (initial, initial - loaded.forest.absorbed_count(last), Some(loaded.report))
        }
        None => (m.initial.unwrap_or_default(), m.target.unwrap_or_default(), None),
    };
    let params = ModelParams::new(initial, target)
        .with_base_probability(m.base_probability)
        .with_exponent(m.exponent)
        .with_weighting(!m.baseline)
        .with_max_cycles(m.max_cycles);
    params.validate()?;
    Ok((params, report))
}

fn series_label(params: &ModelParams) -> &'static str {
    if params.ancestry_weighting {
        "ancestry_weighted"
    } else {
        "baseline"
    }
}

fn check_conservation(result: &SimulationResult) -> Result<(), CliError> {
    let pop = &result.final_population;
    let sum: u64 = result.ancestries().iter().sum();
    if pop.live_count() + pop.absorbed_count() != pop.initial_count() || sum != pop.absorbed_count() as u64 {
        return Err(CliError::Data("conservation check failed".into()));
    }
    Ok(())
}

fn zipf_fit_metadata(meta: &mut Metadata, series: &[ZipfPoint], lo: Option<usize>, hi: Option<usize>) {
    let lo = lo.unwrap_or(1);
    let hi = hi.unwrap_or(series.len());
    meta.set("fit_rank_lo", lo).set("fit_rank_hi", hi);
    match zipf_slope(series, Some(lo..=hi)) {
        Ok(fit) => {
            meta.set("fit_slope", io::format_float(fit.slope))
                .set("fit_intercept", io::format_float(fit.intercept))
                .set("fit_std_error", io::format_float(fit.std_error))
                .set("fit_points", fit.points);
        }
        Err(e) => {
            meta.set("fit", format!("none ({e})"));
        }
    }
}

fn histogram_file(meta: &Metadata, hist: &Histogram) -> ResultFile {
    let mut meta = meta.clone();
    io::histogram_metadata(&mut meta, hist);
    ResultFile::new("distribution", meta, io::histogram_table(hist))
}

fn simulate(a: &SimulateArgs, out: &Emitter) -> Result<u8, CliError> {
    let (params, report) = model_params(&a.model)?;
    let result = if a.history {
        SimulationResult::with_history(&params, a.seed)?
    } else {
        run_simulation(&params, a.seed)?
    };
    check_conservation(&result)?;

    let mut file = io::simulation_file(&result);
    file.metadata.set("label", series_label(&params));
    if let Some(r) = &report {
        ingest_metadata(&mut file.metadata, "events", r);
    }
    let meta = file.metadata.clone();
    out.emit("simulation", file)?;

    let counts = result.ancestries();
    let series = zipf_series(&counts).unwrap_or_default();
    let mut zmeta = meta.clone();
    zipf_fit_metadata(&mut zmeta, &series, None, None);
    out.emit("zipf", ResultFile::new("zipf", zmeta, io::zipf_table(&series)))?;
    out.emit("distribution", histogram_file(&meta, &ancestry_distribution(&counts, a.output.binning)?))?;
    if let Some(history) = &result.history {
        out.emit("history", ResultFile::new("history", meta.clone(), io::history_table(history)))?;
    }

    println!(
        "{}: {} live after {} cycles, max ancestry {}",
        result.outcome.as_str(),
        result.final_population.live_count(),
        result.cycles_run,
        result.final_population.max_ancestry()
    );
    Ok(if result.outcome.terminated_normally() { EXIT_OK } else { EXIT_MAX_CYCLES })
}

fn load_comparison(path: &Path, binning: Binning) -> Result<Vec<(&'static str, EmpiricalSeries)>, CliError> {
    if let Ok(file) = io::read_result(path) {
        if file.kind == "distribution" {
            return Ok(vec![("distribution", EmpiricalSeries::Distribution(io::file_to_histogram(&file)?))]);
        }
    }
    let counts = io::read_counts(path)?;
    Ok(vec![
        ("rank", EmpiricalSeries::Zipf(zipf_series(&counts)?)),
        ("distribution", EmpiricalSeries::Distribution(ancestry_distribution(&counts, binning)?)),
    ])
}

fn coverage_file(meta: &Metadata, report: &CoverageReport) -> ResultFile {
    let mut meta = meta.clone();
    meta.set("inside", report.inside_count())
        .set("positions", report.entries.len())
        .set("coverage", io::format_float(report.coverage()));
    ResultFile::new("coverage", meta, io::coverage_table(report))
}

fn ensemble(a: &EnsembleArgs, out: &Emitter) -> Result<u8, CliError> {
    let (params, report) = model_params(&a.model)?;
    if !(0.0..=1.0).contains(&a.band_low) || !(0.0..=1.0).contains(&a.band_high) || a.band_low > a.band_high {
        return Err(CliError::Usage(format!("band {}..{} must be ordered quantiles in [0, 1]", a.band_low, a.band_high)));
    }
    // Read the comparison first so a bad file fails before the long run.
    let comparison = a.compare.as_deref().map(|p| load_comparison(p, a.output.binning)).transpose()?;

    let options = EnsembleOptions {
        n_runs: a.runs,
        master_seed: a.seed,
        band: (a.band_low, a.band_high),
        binning: a.output.binning,
        parallel: true,
    };
    let summary = run_ensemble_with(&params, &options)?;

    let annotate = |meta: &mut Metadata| {
        meta.set("label", series_label(&params));
        if let Some(r) = &report {
            ingest_metadata(meta, "events", r);
        }
    };
    let mut rank = io::rank_envelope_file(&summary);
    annotate(&mut rank.metadata);
    let meta = rank.metadata.clone();
    out.emit("rank_envelope", rank)?;
    let mut dist = io::distribution_envelope_file(&summary);
    annotate(&mut dist.metadata);
    out.emit("distribution_envelope", dist)?;
    out.emit("runs", ResultFile::new("runs", meta.clone(), io::run_outcomes_table(&summary)))?;

    for (axis, series) in comparison.unwrap_or_default() {
        let cov = distribution_envelope(&summary, &series)?;
        println!("coverage ({axis}): {}/{} = {}", cov.inside_count(), cov.entries.len(), io::format_float(cov.coverage()));
        out.emit(&format!("coverage_{axis}"), coverage_file(&meta, &cov))?;
    }

    let normal = summary.normal_terminations();
    println!("{normal}/{} runs reached the target", summary.n_runs());
    Ok(if normal == summary.n_runs() { EXIT_OK } else { EXIT_MAX_CYCLES })
}

fn ancestry(a: &AncestryArgs, out: &Emitter) -> Result<u8, CliError> {
    let loaded = load_events(&a.events, &a.ingest)?;
    let mut dates: Vec<NaiveDate> = a.as_of.clone();
    if dates.is_empty() {
        dates.push(loaded.forest.last_date().ok_or_else(|| CliError::Data("event log is empty".into()))?);
    }
    dates.sort_unstable();
    dates.dedup();
    let series = loaded.forest.accumulated_ancestry_series(&dates)?;

    let mut meta = io::base_metadata();
    ingest_metadata(&mut meta, "events", &loaded.report);
    meta.set("events_accepted", loaded.events.len()).set("entities", loaded.forest.node_count());
    out.emit("ancestry", ResultFile::new("ancestry", meta.clone(), io::ancestry_snapshot_table(&series)))?;

    let (last, table) = series.last().expect("at least one date");
    let counts: Vec<u64> = table.values().copied().collect();
    meta.set("as_of", last);
    let z = zipf_series(&counts).unwrap_or_default();
    let mut zmeta = meta.clone();
    zipf_fit_metadata(&mut zmeta, &z, None, None);
    out.emit("zipf", ResultFile::new("zipf", zmeta, io::zipf_table(&z)))?;
    if !counts.is_empty() {
        out.emit("distribution", histogram_file(&meta, &ancestry_distribution(&counts, a.output.binning)?))?;
    }
    println!("{} live entities at {last}, {} absorbed", counts.len(), loaded.forest.absorbed_count(*last));
    Ok(EXIT_OK)
}

fn zipf(a: &ZipfArgs, out: &Emitter) -> Result<u8, CliError> {
    let counts = io::read_counts(&a.counts)?;
    let series = zipf_series(&counts)?;
    let mut meta = io::base_metadata();
    zipf_fit_metadata(&mut meta, &series, a.rank_lo, a.rank_hi);
    if let Some(slope) = meta.get("fit_slope") {
        println!("slope {slope} over ranks {}..={}", meta.get("fit_rank_lo").unwrap_or(""), meta.get("fit_rank_hi").unwrap_or(""));
    }
    out.emit("zipf", ResultFile::new("zipf", meta.clone(), io::zipf_table(&series)))?;
    out.emit("distribution", histogram_file(&meta, &ancestry_distribution(&counts, a.output.binning)?))?;
    Ok(EXIT_OK)
}

fn year_list(years: &[i32]) -> String {
    years.iter().map(i32::to_string).collect::<Vec<_>>().join(",")
}

fn rank_compare(a: &RankCompareArgs, out: &Emitter) -> Result<u8, CliError> {
    let loaded = load_events(&a.events, &a.ingest)?;
    let (panel, panel_report) = load_panel(&a.panel, a.ingest.strict)?;
    let cmp = rank_merger_forecast(&loaded.forest, &panel, &a.years.0, a.window, a.group_size, a.averaging.into())?;
    if cmp.years_used.is_empty() {
        return Err(CliError::Data("no base year has panel data for the preceding year".into()));
    }
    let mut meta = io::base_metadata();
    ingest_metadata(&mut meta, "events", &loaded.report);
    ingest_metadata(&mut meta, "panel", &panel_report);
    meta.set("window_years", cmp.window_years)
        .set("group_size", cmp.group_size)
        .set("averaging", cmp.averaging.as_str())
        .set("years_used", year_list(&cmp.years_used))
        .set("years_skipped", year_list(&cmp.years_skipped));
    out.emit("rank_compare", ResultFile::new("rank_compare", meta.clone(), io::rank_compare_table(&cmp)))?;
    out.emit("rank_compare_top", ResultFile::new("rank_compare_top", meta, io::rank_compare_top_table(&cmp)))?;
    if let (Some(x), Some(y)) = (cmp.ancestry.groups.first(), cmp.balance_sheet.groups.first()) {
        println!(
            "top group mean mergers: ancestry {}, balance sheet {}",
            io::format_float(x.mean_mergers),
            io::format_float(y.mean_mergers)
        );
    }
    Ok(EXIT_OK)
}

fn growth(a: &GrowthArgs, out: &Emitter) -> Result<u8, CliError> {
    let loaded = load_events(&a.events, &a.ingest)?;
    let (panel, panel_report) = load_panel(&a.panel, a.ingest.strict)?;
    let (gdp, gdp_report) = io::read_gdp(&a.gdp, a.ingest.strict)?;
    report_ingest(&a.gdp, &gdp_report);
    let report = organic_growth(&loaded.forest, &panel, &gdp, a.start, a.end)?;
    for x in &report.excluded {
        eprintln!("warning: {} excluded: {}", x.entity, x.reason);
    }
    let mut meta = io::base_metadata();
    ingest_metadata(&mut meta, "events", &loaded.report);
    ingest_metadata(&mut meta, "panel", &panel_report);
    ingest_metadata(&mut meta, "gdp", &gdp_report);
    meta.set("start_year", report.start_year)
        .set("end_year", report.end_year)
        .set("gdp_factor", io::format_float(report.gdp_factor))
        .set("excluded", report.excluded.len())
        .set("ancestors_missing_start_balance", report.ancestors_missing_start_balance);
    if let Some(min) = a.min_acquisitions {
        let mean = weighted_mean_growth(&report.records, min);
        meta.set("min_acquisitions", min)
            .set("weighted_mean_growth", mean.map_or_else(|| "none".to_string(), io::format_float));
        if let Some(m) = mean {
            println!("balance-weighted mean index (>= {min} ancestors): {}", io::format_float(m));
        }
    }
    out.emit("growth", ResultFile::new("growth", meta, io::growth_table(&report)))?;
    Ok(EXIT_OK)
}

fn market_share(a: &MarketShareArgs, out: &Emitter) -> Result<u8, CliError> {
    let (panel, report) = load_panel(&a.panel, a.strict)?;
    let years: Vec<i32> = match &a.years {
        Some(y) => y.0.clone(),
        None => panel.years().collect(),
    };
    let series = market_share_percentiles(&panel, &years)?;
    let degraded: Vec<i32> = series.years.iter().filter(|y| y.degraded).map(|y| y.year).collect();
    for y in &degraded {
        eprintln!("warning: fewer than 100 entities in {y}; some percentiles are empty");
    }
    let mut meta = io::base_metadata();
    ingest_metadata(&mut meta, "panel", &report);
    meta.set("years", year_list(&years)).set("degraded_years", year_list(&degraded));
    out.emit("market_share", ResultFile::new("market_share", meta, io::market_share_table(&series)))?;
    Ok(EXIT_OK)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes() {
        assert_eq!(CliError::Usage("x".into()).exit_code(), 1);
        assert_eq!(CliError::Params(ParamsError::MaxCycles).exit_code(), 1);
        assert_eq!(CliError::Analysis(AnalysisError::EmptyInput).exit_code(), 2);
        assert_eq!(CliError::Data("x".into()).exit_code(), 2);
    }

    #[test]
    fn fit_metadata_handles_short_series() {
        let mut meta = Metadata::new();
        zipf_fit_metadata(&mut meta, &zipf_series(&[4, 2]).unwrap(), None, None);
        assert!(meta.get("fit").unwrap().starts_with("none"));
    }
}
