//! File formats.
//!
//! Inputs are headed CSV files:
//!
//! | file   | header                        |
//! |--------|-------------------------------|
//! | events | `date,acquirer_id,target_id`  |
//! | aliases| `alias,canonical`             |
//! | panel  | `entity_id,year,balance`      |
//! | GDP    | `year,gdp`                    |
//!
//! Dates are ISO-8601 (`YYYY-MM-DD`). Line numbers in reports count the
//! header as line 1.
//!
//! Results are CSV tables preceded by a `# key=value` preamble. The first
//! two preamble lines are always `schema` and `kind`; the remaining keys
//! carry enough of the producing run (tool version, seed, parameters) to
//! replay it. Floats in data columns are written with 12 significant
//! digits, integers verbatim, lines end in `\n`. Writers go through a
//! temporary file and a rename; concurrent writers to one path are the
//! caller's problem.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use thiserror::Error;

use crate::analysis::{
    BalancePanel, Binning, CoverageReport, GdpSeries, GrowthReport, Histogram, RankingComparison, ShareSeries, ZipfPoint,
    Bin,
};
use crate::genealogy::{EntityId, MergerEvent};
use crate::model::{CycleStats, EnsembleOptions, EnsembleSummary, ModelParams, SimulationResult};
use crate::rng::RNG_ALGORITHM;

pub const SCHEMA_VERSION: &str = "merger-ancestry-result/1";
pub const TOOL_VERSION: &str = concat!("merger-ancestry ", env!("CARGO_PKG_VERSION"));

pub const EVENT_HEADER: [&str; 3] = ["date", "acquirer_id", "target_id"];
pub const ALIAS_HEADER: [&str; 2] = ["alias", "canonical"];
pub const PANEL_HEADER: [&str; 3] = ["entity_id", "year", "balance"];
pub const GDP_HEADER: [&str; 2] = ["year", "gdp"];

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: expected header `{expected}`, found `{found}`")]
    Header { path: PathBuf, expected: String, found: String },
    #[error("{path}:{line}: {reason}")]
    Row { path: PathBuf, line: u64, reason: String },
    #[error("{path}: duplicate {what} on lines {first_line} and {second_line}")]
    Duplicate { path: PathBuf, what: String, first_line: u64, second_line: u64 },
    #[error("{path}: alias cycle through `{alias}`")]
    AliasCycle { path: PathBuf, alias: String },
    #[error("{path}: malformed result file: {reason}")]
    Result { path: PathBuf, reason: String },
    #[error("{0}")]
    Format(String),
}

impl IoError {
    fn io(path: &Path, source: std::io::Error) -> Self {
        IoError::Io { path: path.to_path_buf(), source }
    }

    fn row(path: &Path, line: u64, reason: impl Into<String>) -> Self {
        IoError::Row { path: path.to_path_buf(), line, reason: reason.into() }
    }

    /// True for problems with file contents rather than the filesystem.
    pub fn is_data_error(&self) -> bool {
        !matches!(self, IoError::Io { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RejectedRow {
    pub line: u64,
    pub reason: String,
}

/// Data-quality summary of one ingested file.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct IngestReport {
    pub rows_read: usize,
    pub rows_accepted: usize,
    pub rejected: Vec<RejectedRow>,
}

// Reads a headed CSV file and hands each data row to `parse`. Strict mode
// turns the first rejected row into an error.
fn ingest<F>(path: &Path, header: &[&str], strict: bool, mut parse: F) -> Result<IngestReport, IoError>
where
    F: FnMut(u64, &csv::StringRecord) -> Result<Result<(), String>, IoError>,
{
    let text = fs::read_to_string(path).map_err(|e| IoError::io(path, e))?;
    let text = text.strip_prefix('\u{feff}').unwrap_or(&text);
    let mut reader = csv::ReaderBuilder::new().has_headers(false).flexible(true).from_reader(text.as_bytes());
    let mut records = reader.records();
    let expected = header.join(",");
    let found = match records.next() {
        Some(Ok(rec)) => rec.iter().collect::<Vec<_>>().join(","),
        Some(Err(e)) => return Err(IoError::row(path, 1, e.to_string())),
        None => String::new(),
    };
    if found != expected {
        return Err(IoError::Header { path: path.to_path_buf(), expected, found });
    }
    let mut report = IngestReport::default();
    for rec in records {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            IoError::row(path, line, e.to_string())
        })?;
        let line = rec.position().map_or(0, |p| p.line());
        report.rows_read += 1;
        let outcome = if rec.len() != header.len() {
            Err(format!("expected {} fields, found {}", header.len(), rec.len()))
        } else {
            parse(line, &rec)?
        };
        match outcome {
            Ok(()) => report.rows_accepted += 1,
            Err(reason) if strict => return Err(IoError::row(path, line, reason)),
            Err(reason) => report.rejected.push(RejectedRow { line, reason }),
        }
    }
    Ok(report)
}

fn parse_date(s: &str) -> Result<NaiveDate, String> {
    NaiveDate::parse_from_str(s.trim(), "%Y-%m-%d").map_err(|_| format!("invalid date `{s}`"))
}

fn parse_year(s: &str) -> Result<i32, String> {
    s.trim().parse().map_err(|_| format!("invalid year `{s}`"))
}

fn parse_positive(s: &str, what: &str) -> Result<f64, String> {
    match s.trim().parse::<f64>() {
        Ok(v) if v.is_finite() && v > 0.0 => Ok(v),
        Ok(v) => Err(format!("{what} must be positive, got {v}")),
        Err(_) => Err(format!("invalid {what} `{s}`")),
    }
}

fn non_empty(s: &str, what: &str) -> Result<String, String> {
    let t = s.trim();
    if t.is_empty() {
        Err(format!("empty {what}"))
    } else {
        Ok(t.to_string())
    }
}

/// Alias to canonical id, resolved through chains.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct AliasMap {
    map: BTreeMap<String, String>,
}

impl AliasMap {
    pub fn resolve<'a>(&'a self, id: &'a str) -> &'a str {
        let mut cur = id;
        // Chains were checked for cycles at load time.
        while let Some(next) = self.map.get(cur) {
            cur = next;
        }
        cur
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }
}

pub fn read_aliases(path: &Path) -> Result<AliasMap, IoError> {
    let mut map = BTreeMap::new();
    let mut seen: HashMap<String, u64> = HashMap::new();
    let mut dup = None;
    ingest(path, &ALIAS_HEADER, true, |line, rec| {
        let alias = match non_empty(&rec[0], "alias") {
            Ok(a) => a,
            Err(e) => return Ok(Err(e)),
        };
        let canonical = match non_empty(&rec[1], "canonical id") {
            Ok(c) => c,
            Err(e) => return Ok(Err(e)),
        };
        if alias == canonical {
            return Ok(Err(format!("alias `{alias}` maps to itself")));
        }
        if let Some(&first) = seen.get(&alias) {
            dup.get_or_insert((alias.clone(), first, line));
        }
        seen.insert(alias.clone(), line);
        map.insert(alias, canonical);
        Ok(Ok(()))
    })?;
    if let Some((alias, first_line, second_line)) = dup {
        return Err(IoError::Duplicate { path: path.to_path_buf(), what: format!("alias `{alias}`"), first_line, second_line });
    }
    for start in map.keys() {
        let mut cur = start.as_str();
        for _ in 0..=map.len() {
            match map.get(cur) {
                Some(next) => cur = next,
                None => break,
            }
        }
        if map.contains_key(cur) {
            return Err(IoError::AliasCycle { path: path.to_path_buf(), alias: start.clone() });
        }
    }
    Ok(AliasMap { map })
}

/// Reads merger events, applying `aliases` to both ids.
///
/// Rows with bad dates, empty ids, a self-acquisition (after alias
/// substitution) or a repeated `(date, acquirer, target)` triple are
/// rejected: fatal in strict mode, reported otherwise.
pub fn read_events(
    path: &Path,
    strict: bool,
    aliases: Option<&AliasMap>,
) -> Result<(Vec<MergerEvent>, IngestReport), IoError> {
    let mut events = Vec::new();
    let mut seen: HashMap<(NaiveDate, String, String), u64> = HashMap::new();
    let report = ingest(path, &EVENT_HEADER, strict, |line, rec| {
        let parsed = (|| {
            let date = parse_date(&rec[0])?;
            let mut acquirer = non_empty(&rec[1], "acquirer_id")?;
            let mut target = non_empty(&rec[2], "target_id")?;
            if let Some(a) = aliases {
                acquirer = a.resolve(&acquirer).to_string();
                target = a.resolve(&target).to_string();
            }
            if acquirer == target {
                return Err(format!("entity `{acquirer}` acquires itself"));
            }
            let key = (date, acquirer.clone(), target.clone());
            if let Some(first) = seen.get(&key) {
                return Err(format!("duplicate of line {first}"));
            }
            seen.insert(key, line);
            Ok(MergerEvent { date, acquirer: EntityId(acquirer), target: EntityId(target) })
        })();
        Ok(parsed.map(|ev| events.push(ev)))
    })?;
    Ok((events, report))
}

/// Reads a balance panel. A repeated `(entity, year)` is always an error.
pub fn read_panel(path: &Path, strict: bool) -> Result<(BalancePanel, IngestReport), IoError> {
    let mut panel = BalancePanel::new();
    let mut seen: HashMap<(String, i32), u64> = HashMap::new();
    let report = ingest(path, &PANEL_HEADER, strict, |line, rec| {
        let parsed = (|| {
            let entity = non_empty(&rec[0], "entity_id")?;
            let year = parse_year(&rec[1])?;
            let balance = parse_positive(&rec[2], "balance")?;
            Ok((entity, year, balance))
        })();
        let (entity, year, balance) = match parsed {
            Ok(v) => v,
            Err(e) => return Ok(Err(e)),
        };
        if let Some(&first_line) = seen.get(&(entity.clone(), year)) {
            return Err(IoError::Duplicate {
                path: path.to_path_buf(),
                what: format!("observation for `{entity}` in {year}"),
                first_line,
                second_line: line,
            });
        }
        seen.insert((entity.clone(), year), line);
        panel.insert(EntityId(entity), year, balance).map_err(|e| IoError::row(path, line, e.to_string()))?;
        Ok(Ok(()))
    })?;
    Ok((panel, report))
}

pub fn read_gdp(path: &Path, strict: bool) -> Result<(GdpSeries, IngestReport), IoError> {
    let mut values = Vec::new();
    let mut seen: HashMap<i32, u64> = HashMap::new();
    let report = ingest(path, &GDP_HEADER, strict, |line, rec| {
        let parsed = (|| Ok::<_, String>((parse_year(&rec[0])?, parse_positive(&rec[1], "gdp")?)))();
        let (year, gdp) = match parsed {
            Ok(v) => v,
            Err(e) => return Ok(Err(e)),
        };
        if let Some(&first_line) = seen.get(&year) {
            return Err(IoError::Duplicate {
                path: path.to_path_buf(),
                what: format!("year {year}"),
                first_line,
                second_line: line,
            });
        }
        seen.insert(year, line);
        values.push((year, gdp));
        Ok(Ok(()))
    })?;
    let series = GdpSeries::from_values(values).map_err(|e| IoError::Format(e.to_string()))?;
    Ok((series, report))
}

/// Locale-independent float text with 12 significant digits.
///
/// Plain decimal notation for exponents in `-5..=14`, otherwise
/// `<mantissa>e<exp>`; trailing zeros are dropped.
pub fn format_float(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let sci = format!("{x:.11e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    let negative = mantissa.starts_with('-');
    let digits: String = mantissa.chars().filter(char::is_ascii_digit).collect();
    let body = if (-5..=14).contains(&exp) {
        let point = exp + 1;
        let plain = if point <= 0 {
            format!("0.{}{}", "0".repeat((-point) as usize), digits)
        } else if point as usize >= digits.len() {
            format!("{}{}", digits, "0".repeat(point as usize - digits.len()))
        } else {
            format!("{}.{}", &digits[..point as usize], &digits[point as usize..])
        };
        trim_fraction(plain)
    } else {
        let m = trim_fraction(format!("{}.{}", &digits[..1], &digits[1..]));
        format!("{m}e{exp}")
    };
    if negative {
        format!("-{body}")
    } else {
        body
    }
}

fn trim_fraction(s: String) -> String {
    if !s.contains('.') {
        return s;
    }
    s.trim_end_matches('0').trim_end_matches('.').to_string()
}

/// Ordered `key=value` preamble of a result file.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Metadata {
    entries: Vec<(String, String)>,
}

impl Metadata {
    pub fn new() -> Self {
        Self::default()
    }

    /// Sets `key`, replacing an earlier value in place.
    pub fn set(&mut self, key: impl Into<String>, value: impl ToString) -> &mut Self {
        let key = key.into();
        let value = value.to_string().replace(['\n', '\r'], " ");
        match self.entries.iter_mut().find(|(k, _)| *k == key) {
            Some(entry) => entry.1 = value,
            None => self.entries.push((key, value)),
        }
        self
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn entries(&self) -> impl Iterator<Item = (&str, &str)> {
        self.entries.iter().map(|(k, v)| (k.as_str(), v.as_str()))
    }

    pub fn require(&self, key: &str) -> Result<&str, IoError> {
        self.get(key).ok_or_else(|| IoError::Format(format!("metadata key `{key}` missing")))
    }

    pub fn parse<T: std::str::FromStr>(&self, key: &str) -> Result<T, IoError> {
        let raw = self.require(key)?;
        raw.parse().map_err(|_| IoError::Format(format!("metadata key `{key}` has invalid value `{raw}`")))
    }
}

/// Column names and pre-formatted cells.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Self { columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    fn require_column(&self, name: &str) -> Result<usize, IoError> {
        self.column(name).ok_or_else(|| IoError::Format(format!("column `{name}` missing")))
    }

    /// Parses column `name` of every row.
    pub fn parse_column<T: std::str::FromStr>(&self, name: &str) -> Result<Vec<T>, IoError> {
        let idx = self.require_column(name)?;
        self.rows
            .iter()
            .map(|r| r[idx].parse().map_err(|_| IoError::Format(format!("bad `{name}` value `{}`", r[idx]))))
            .collect()
    }
}

/// A result export: kind, preamble, and data.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResultFile {
    pub kind: String,
    pub metadata: Metadata,
    pub table: Table,
}

impl ResultFile {
    pub fn new(kind: &str, metadata: Metadata, table: Table) -> Self {
        Self { kind: kind.to_string(), metadata, table }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = String::new();
        out.push_str(&format!("# schema={SCHEMA_VERSION}\n# kind={}\n", self.kind));
        for (k, v) in self.metadata.entries() {
            out.push_str(&format!("# {k}={v}\n"));
        }
        let mut writer = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        writer.write_record(&self.table.columns).expect("in-memory write");
        for row in &self.table.rows {
            writer.write_record(row).expect("in-memory write");
        }
        let mut bytes = out.into_bytes();
        bytes.extend(writer.into_inner().expect("in-memory flush"));
        bytes
    }

    pub fn from_bytes(path: &Path, bytes: &[u8]) -> Result<Self, IoError> {
        let bad = |reason: &str| IoError::Result { path: path.to_path_buf(), reason: reason.to_string() };
        let text = std::str::from_utf8(bytes).map_err(|_| bad("not UTF-8"))?;
        let mut metadata = Metadata::new();
        let mut schema = None;
        let mut kind = None;
        let mut offset = 0;
        for line in text.split_inclusive('\n') {
            let Some(entry) = line.strip_prefix('#') else { break };
            offset += line.len();
            let entry = entry.trim_end_matches(['\n', '\r']).trim_start();
            let (k, v) = entry.split_once('=').ok_or_else(|| bad("preamble line without `=`"))?;
            match k {
                "schema" => schema = Some(v.to_string()),
                "kind" => kind = Some(v.to_string()),
                _ => {
                    metadata.set(k, v);
                }
            }
        }
        if schema.as_deref() != Some(SCHEMA_VERSION) {
            return Err(bad(&format!("unsupported schema {schema:?}")));
        }
        let kind = kind.ok_or_else(|| bad("missing kind"))?;
        let table = parse_table(path, &text[offset..])?;
        Ok(Self { kind, metadata, table })
    }
}

fn parse_table(path: &Path, text: &str) -> Result<Table, IoError> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(text.as_bytes());
    let columns: Vec<String> = reader
        .headers()
        .map_err(|e| IoError::Result { path: path.to_path_buf(), reason: e.to_string() })?
        .iter()
        .map(String::from)
        .collect();
    let mut table = Table { columns, rows: Vec::new() };
    for rec in reader.records() {
        let rec = rec.map_err(|e| IoError::Result { path: path.to_path_buf(), reason: e.to_string() })?;
        table.rows.push(rec.iter().map(String::from).collect());
    }
    Ok(table)
}

/// Writes `file` to `path` atomically.
pub fn write_result(path: &Path, file: &ResultFile) -> Result<(), IoError> {
    let bytes = file.to_bytes();
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let name = path.file_name().ok_or_else(|| IoError::Format(format!("{} is not a file path", path.display())))?;
    let tmp = dir.join(format!(".{}.tmp-{}", name.to_string_lossy(), std::process::id()));
    fs::write(&tmp, &bytes).map_err(|e| IoError::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| {
        let _ = fs::remove_file(&tmp);
        IoError::io(path, e)
    })
}

pub fn read_result(path: &Path) -> Result<ResultFile, IoError> {
    let bytes = fs::read(path).map_err(|e| IoError::io(path, e))?;
    ResultFile::from_bytes(path, &bytes)
}

/// Reads a table of counts: a result file or a plain CSV with an
/// `ancestry` column (optionally preceded by a `#` preamble).
pub fn read_counts(path: &Path) -> Result<Vec<u64>, IoError> {
    let bytes = fs::read(path).map_err(|e| IoError::io(path, e))?;
    let text = std::str::from_utf8(&bytes).map_err(|_| IoError::Format(format!("{}: not UTF-8", path.display())))?;
    let body: String = text.split_inclusive('\n').skip_while(|l| l.starts_with('#')).collect();
    parse_table(path, &body)?.parse_column("ancestry")
}

// ----- model metadata ------------------------------------------------------

/// Writes the model parameters and seed so the run can be replayed.
pub fn params_metadata(meta: &mut Metadata, params: &ModelParams) {
    meta.set("rng", RNG_ALGORITHM)
        .set("base_probability", params.base_probability)
        .set("ancestry_exponent", params.ancestry_exponent)
        .set("ancestry_weighting", params.ancestry_weighting)
        .set("initial_count", params.initial_count)
        .set("target_count", params.target_count)
        .set("max_cycles", params.max_cycles);
}

pub fn params_from_metadata(meta: &Metadata) -> Result<ModelParams, IoError> {
    if meta.get("rng").is_some_and(|r| r != RNG_ALGORITHM) {
        return Err(IoError::Format(format!("file produced with generator {}", meta.get("rng").unwrap_or(""))));
    }
    Ok(ModelParams {
        base_probability: meta.parse("base_probability")?,
        ancestry_exponent: meta.parse("ancestry_exponent")?,
        ancestry_weighting: meta.parse("ancestry_weighting")?,
        initial_count: meta.parse("initial_count")?,
        target_count: meta.parse("target_count")?,
        max_cycles: meta.parse("max_cycles")?,
    })
}

/// Preamble carrying only the tool version.
pub fn base_metadata() -> Metadata {
    let mut meta = Metadata::new();
    meta.set("tool", TOOL_VERSION);
    meta
}

/// Final population of a run, one row per surviving agent.
pub fn simulation_file(result: &SimulationResult) -> ResultFile {
    let mut meta = base_metadata();
    params_metadata(&mut meta, &result.params);
    meta.set("seed", result.seed)
        .set("cycles_run", result.cycles_run)
        .set("outcome", result.outcome.as_str())
        .set("absorbed_count", result.final_population.absorbed_count());
    let mut table = Table::new(&["agent_id", "ancestry"]);
    for agent in result.final_population.sorted_agents() {
        table.push(vec![agent.id.to_string(), agent.ancestry.to_string()]);
    }
    ResultFile::new("simulation", meta, table)
}

/// Seed and params recorded in a simulation export.
pub fn simulation_replay_inputs(file: &ResultFile) -> Result<(ModelParams, u64), IoError> {
    Ok((params_from_metadata(&file.metadata)?, file.metadata.parse("seed")?))
}

pub fn history_table(history: &[CycleStats]) -> Table {
    let mut table = Table::new(&["cycle", "mergers", "live_after"]);
    for s in history {
        table.push(vec![s.cycle_index.to_string(), s.mergers_executed.to_string(), s.live_count_after.to_string()]);
    }
    table
}

fn ensemble_metadata(summary: &EnsembleSummary) -> Metadata {
    let mut meta = base_metadata();
    params_metadata(&mut meta, &summary.params);
    let o = &summary.options;
    meta.set("master_seed", o.master_seed)
        .set("n_runs", o.n_runs)
        .set("band_low", o.band.0)
        .set("band_high", o.band.1)
        .set("binning", o.binning.label())
        .set("runs_terminated_normally", summary.normal_terminations());
    meta
}

/// Ensemble options recorded in an ensemble export.
pub fn ensemble_replay_inputs(file: &ResultFile) -> Result<(ModelParams, EnsembleOptions), IoError> {
    let meta = &file.metadata;
    let params = params_from_metadata(meta)?;
    let binning = Binning::parse(meta.require("binning")?)
        .ok_or_else(|| IoError::Format(format!("unknown binning `{}`", meta.get("binning").unwrap_or(""))))?;
    let options = EnsembleOptions {
        n_runs: meta.parse("n_runs")?,
        master_seed: meta.parse("master_seed")?,
        band: (meta.parse("band_low")?, meta.parse("band_high")?),
        binning,
        parallel: true,
    };
    Ok((params, options))
}

pub fn rank_envelope_file(summary: &EnsembleSummary) -> ResultFile {
    let mut table = Table::new(&["rank", "min", "band_low", "band_high", "max", "mean"]);
    for e in &summary.rank_envelope {
        table.push(vec![
            e.rank.to_string(),
            e.min.to_string(),
            format_float(e.band_low),
            format_float(e.band_high),
            e.max.to_string(),
            format_float(e.mean),
        ]);
    }
    ResultFile::new("rank_envelope", ensemble_metadata(summary), table)
}

pub fn distribution_envelope_file(summary: &EnsembleSummary) -> ResultFile {
    let mut meta = ensemble_metadata(summary);
    meta.set("zero_bucket_min", summary.zero_bucket.0).set("zero_bucket_max", summary.zero_bucket.1);
    let mut table = Table::new(&["bin_lower", "bin_upper", "min", "max"]);
    for b in &summary.distribution_envelope {
        table.push(vec![b.lower.to_string(), b.upper.to_string(), b.min.to_string(), b.max.to_string()]);
    }
    ResultFile::new("distribution_envelope", meta, table)
}

pub fn run_outcomes_table(summary: &EnsembleSummary) -> Table {
    let mut table = Table::new(&["run", "seed", "outcome", "cycles"]);
    for r in &summary.runs {
        table.push(vec![r.run_index.to_string(), r.seed.to_string(), r.outcome.as_str().into(), r.cycles_run.to_string()]);
    }
    table
}

// ----- analysis tables -----------------------------------------------------

pub fn zipf_table(series: &[ZipfPoint]) -> Table {
    let mut table = Table::new(&["rank", "ancestry"]);
    for p in series {
        table.push(vec![p.rank.to_string(), p.ancestry.to_string()]);
    }
    table
}

pub fn table_to_zipf(table: &Table) -> Result<Vec<ZipfPoint>, IoError> {
    let ranks: Vec<usize> = table.parse_column("rank")?;
    let values: Vec<u64> = table.parse_column("ancestry")?;
    Ok(ranks.into_iter().zip(values).map(|(rank, ancestry)| ZipfPoint { rank, ancestry }).collect())
}

/// Histogram rows; the binning and zero bucket belong in the metadata
/// (see [`histogram_metadata`]).
pub fn histogram_table(hist: &Histogram) -> Table {
    let mut table = Table::new(&["bin_lower", "bin_upper", "frequency"]);
    for b in &hist.bins {
        table.push(vec![b.lower.to_string(), b.upper.to_string(), b.frequency.to_string()]);
    }
    table
}

pub fn histogram_metadata(meta: &mut Metadata, hist: &Histogram) {
    meta.set("binning", hist.binning.label()).set("zero_count", hist.zero_count);
}

pub fn file_to_histogram(file: &ResultFile) -> Result<Histogram, IoError> {
    let binning = Binning::parse(file.metadata.require("binning")?)
        .ok_or_else(|| IoError::Format("unknown binning".to_string()))?;
    let lower: Vec<u64> = file.table.parse_column("bin_lower")?;
    let upper: Vec<u64> = file.table.parse_column("bin_upper")?;
    let freq: Vec<u64> = file.table.parse_column("frequency")?;
    let bins = lower
        .into_iter()
        .zip(upper)
        .zip(freq)
        .map(|((lower, upper), frequency)| Bin { lower, upper, frequency })
        .collect();
    Ok(Histogram { binning, zero_count: file.metadata.parse("zero_count")?, bins })
}

pub fn coverage_table(report: &CoverageReport) -> Table {
    let mut table = Table::new(&[report.axis, "upper", "value", "min", "max", "inside"]);
    for e in &report.entries {
        table.push(vec![
            e.position.to_string(),
            e.upper.to_string(),
            e.value.to_string(),
            e.min.to_string(),
            e.max.to_string(),
            u8::from(e.inside).to_string(),
        ]);
    }
    table
}

/// `(date, entity, ancestry)` rows for one or more snapshot dates.
pub fn ancestry_snapshot_table(series: &[(NaiveDate, BTreeMap<EntityId, u64>)]) -> Table {
    let mut table = Table::new(&["date", "entity_id", "ancestry"]);
    for (date, counts) in series {
        for (entity, count) in counts {
            table.push(vec![date.to_string(), entity.to_string(), count.to_string()]);
        }
    }
    table
}

pub fn rank_compare_table(cmp: &RankingComparison) -> Table {
    let mut table = Table::new(&["method", "group", "rank_lo", "rank_hi", "mean_mergers"]);
    for report in [&cmp.ancestry, &cmp.balance_sheet] {
        for (i, g) in report.groups.iter().enumerate() {
            table.push(vec![
                report.method.as_str().into(),
                (i + 1).to_string(),
                g.rank_lo.to_string(),
                g.rank_hi.to_string(),
                format_float(g.mean_mergers),
            ]);
        }
    }
    table
}

pub fn rank_compare_top_table(cmp: &RankingComparison) -> Table {
    let mut table = Table::new(&["year", "ancestry_top_group", "balance_sheet_top_group"]);
    for (a, b) in cmp.ancestry.top_group_by_year.iter().zip(&cmp.balance_sheet.top_group_by_year) {
        table.push(vec![a.0.to_string(), a.1.to_string(), b.1.to_string()]);
    }
    table
}

pub fn growth_table(report: &GrowthReport) -> Table {
    let mut table = Table::new(&["entity_id", "acquisition_count", "baseline", "end_balance", "growth_index"]);
    for r in &report.records {
        table.push(vec![
            r.entity.to_string(),
            r.acquisition_count.to_string(),
            format_float(r.baseline),
            format_float(r.end_balance),
            format_float(r.growth_index),
        ]);
    }
    table
}

pub fn market_share_table(series: &ShareSeries) -> Table {
    let mut table = Table::new(&["year", "percentile", "entities", "share", "cumulative_change"]);
    for (ys, cumulative) in series.years.iter().zip(&series.cumulative) {
        for (k, (&share, &size)) in ys.shares.iter().zip(&ys.bucket_sizes).enumerate() {
            let cum = if k == 0 { String::new() } else { format_float(cumulative[k - 1]) };
            table.push(vec![ys.year.to_string(), (k + 1).to_string(), size.to_string(), format_float(share), cum]);
        }
    }
    table
}
