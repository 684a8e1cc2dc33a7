//! On-disk formats: JSON-lines populations, CSV fronts, metrics and
//! comparison tables. Floats in CSV files carry nine significant digits.

use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::Context;
use del_core::analysis::FrontComparison;
use del_core::engine::{Candidate, GenerationReport, Population};
use del_core::toy::{self, PropertyTriple, TokenSeq};
use serde::{Deserialize, Serialize};

/// Canonical objective column names.
pub const OBJECTIVE_COLUMNS: [&str; 3] = ["neg_q", "s", "lp"];

/// `x` with nine significant digits, in fixed notation when that stays
/// short and in exponent notation otherwise. Trailing zeros are dropped.
pub fn float9(x: f64) -> String {
    if !x.is_finite() {
        return if x.is_nan() {
            "nan".into()
        } else if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{x:.8e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-5..9).contains(&exp) {
        let m = mantissa.trim_end_matches('0').trim_end_matches('.');
        return format!("{m}e{exp}");
    }
    // reparse the rounded value so fixed notation shows the same digits
    let rounded: f64 = sci.parse().expect("valid float");
    let decimals = (8 - exp).max(0) as usize;
    let fixed = format!("{rounded:.decimals$}");
    if fixed.contains('.') {
        fixed.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        fixed
    }
}

/// A malformed input file, located by path and 1-based line.
#[derive(Debug, Clone, PartialEq)]
pub struct FormatError {
    pub path: PathBuf,
    pub line: Option<u64>,
    pub message: String,
}

impl fmt::Display for FormatError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(l) => write!(f, "{}:{l}: {}", self.path.display(), self.message),
            None => write!(f, "{}: {}", self.path.display(), self.message),
        }
    }
}

impl std::error::Error for FormatError {}

fn format_error(path: &Path, line: Option<u64>, message: impl Into<String>) -> FormatError {
    FormatError {
        path: path.to_path_buf(),
        line,
        message: message.into(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawProperties {
    pub q: f64,
    pub s: f64,
    pub lp: f64,
}

/// One population member as stored in `population.jsonl`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CandidateRecord {
    pub phenotype: TokenSeq,
    pub genotype: Vec<f64>,
    pub raw_properties: RawProperties,
    pub objectives: Vec<f64>,
    pub born_generation: usize,
}

impl From<&Candidate> for CandidateRecord {
    fn from(c: &Candidate) -> Self {
        Self {
            phenotype: c.phenotype.clone(),
            genotype: c.genotype.clone(),
            raw_properties: RawProperties {
                q: c.raw.q,
                s: c.raw.s,
                lp: c.raw.lp,
            },
            objectives: c.objectives.to_vec(),
            born_generation: c.born_generation,
        }
    }
}

impl CandidateRecord {
    /// Rebuild the candidate, re-scoring the phenotype and checking that
    /// the stored properties agree with it.
    pub fn to_candidate(&self) -> Result<Candidate, String> {
        let c = Candidate::evaluate(self.phenotype.clone(), self.genotype.clone(), self.born_generation)
            .map_err(|e| e.to_string())?;
        let stored = PropertyTriple {
            q: self.raw_properties.q,
            s: self.raw_properties.s,
            lp: self.raw_properties.lp,
        };
        let close = |a: f64, b: f64| (a - b).abs() <= 1e-9 * a.abs().max(1.0);
        let same_raw = close(stored.q, c.raw.q) && close(stored.s, c.raw.s) && close(stored.lp, c.raw.lp);
        let same_obj = self.objectives.len() == 3 && self.objectives.iter().zip(c.objectives.iter()).all(|(a, b)| close(*a, *b));
        if !(same_raw && same_obj) {
            return Err(format!("stored properties do not match phenotype {:?}", self.phenotype));
        }
        Ok(c)
    }
}

fn create(path: &Path) -> anyhow::Result<BufWriter<File>> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    }
    let f = File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
    Ok(BufWriter::new(f))
}

pub fn write_population(path: &Path, pop: &Population) -> anyhow::Result<()> {
    let mut w = create(path)?;
    for c in &pop.members {
        serde_json::to_writer(&mut w, &CandidateRecord::from(c))?;
        w.write_all(b"\n")?;
    }
    w.flush().with_context(|| format!("cannot write {}", path.display()))
}

pub fn read_population(path: &Path) -> Result<Vec<CandidateRecord>, FormatError> {
    let f = File::open(path).map_err(|e| format_error(path, None, e.to_string()))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(f).lines().enumerate() {
        let n = i as u64 + 1;
        let line = line.map_err(|e| format_error(path, Some(n), e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: CandidateRecord = serde_json::from_str(&line).map_err(|e| format_error(path, Some(n), e.to_string()))?;
        out.push(rec);
    }
    Ok(out)
}

/// Objective vectors under an `neg_q,s,lp`-style header.
pub fn write_front(path: &Path, points: &[Vec<f64>]) -> anyhow::Result<()> {
    let k = points.first().map_or(OBJECTIVE_COLUMNS.len(), Vec::len);
    let mut w = csv::Writer::from_writer(create(path)?);
    let header: Vec<String> = (0..k)
        .map(|i| OBJECTIVE_COLUMNS.get(i).map_or_else(|| format!("f{}", i + 1), |s| s.to_string()))
        .collect();
    w.write_record(&header)?;
    for p in points {
        w.write_record(p.iter().map(|&x| float9(x)))?;
    }
    w.flush().with_context(|| format!("cannot write {}", path.display()))
}

/// Front file: a header row, then one objective vector per row.
pub fn read_front(path: &Path) -> Result<Vec<Vec<f64>>, FormatError> {
    let mut r = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_path(path)
        .map_err(|e| format_error(path, None, e.to_string()))?;
    let width = r.headers().map_err(|e| format_error(path, Some(1), e.to_string()))?.len();
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| format_error(path, e.position().map(|p| p.line()), e.to_string()))?;
        let line = rec.position().map(|p| p.line());
        if rec.len() != width {
            return Err(format_error(path, line, format!("expected {width} columns, found {}", rec.len())));
        }
        let row = rec
            .iter()
            .map(|field| {
                field
                    .trim()
                    .parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| format_error(path, line, format!("`{field}` is not a finite number")))
            })
            .collect::<Result<Vec<f64>, _>>()?;
        out.push(row);
    }
    Ok(out)
}

pub const METRICS_HEADER: [&str; 15] = [
    "generation",
    "validity_smiles",
    "validity_fragments",
    "novelty",
    "diversity",
    "front_size",
    "front_hypervolume",
    "novel_high_quality",
    "decoded",
    "offspring",
    "epochs",
    "recon",
    "kl",
    "prop_mse",
    "total",
];

/// Metrics row; the loss columns are the last training epoch of the
/// generation and stay empty when the model was not updated.
pub fn metrics_row(r: &GenerationReport) -> Vec<String> {
    let m = &r.metrics;
    let mut row = vec![
        r.generation.to_string(),
        float9(m.validity_smiles),
        float9(m.validity_fragments),
        float9(m.novelty),
        float9(m.diversity),
        r.front_size.to_string(),
        float9(r.front_hypervolume),
        r.novel_high_quality.to_string(),
        r.decoded.to_string(),
        r.offspring.to_string(),
        r.training.len().to_string(),
    ];
    match r.last_loss() {
        Some(l) => row.extend([l.recon, l.kl, l.prop_mse, l.total].map(float9)),
        None => row.extend(std::iter::repeat_n(String::new(), 4)),
    }
    row
}

pub fn write_metrics(path: &Path, reports: &[&GenerationReport]) -> anyhow::Result<()> {
    let mut w = csv::Writer::from_writer(create(path)?);
    w.write_record(METRICS_HEADER)?;
    for r in reports {
        w.write_record(metrics_row(r))?;
    }
    w.flush().with_context(|| format!("cannot write {}", path.display()))
}

/// Survival table with columns `source,front_size,survivors,percentage`.
pub fn write_comparison<W: Write>(out: W, cmp: &FrontComparison) -> anyhow::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["source", "front_size", "survivors", "percentage"])?;
    for s in &cmp.sources {
        w.write_record([s.name.clone(), s.front_size.to_string(), s.survivors.to_string(), float9(s.percent)])?;
    }
    w.flush()?;
    Ok(())
}

/// Hypervolume trace, one row per batch (0 = initial design):
/// `batch,evaluated,sobol`.
pub fn write_trace(path: &Path, trace: &[f64], evaluated_after: &[usize]) -> anyhow::Result<()> {
    let mut w = csv::Writer::from_writer(create(path)?);
    w.write_record(["batch", "evaluated", "sobol"])?;
    for (b, (hv, n)) in trace.iter().zip(evaluated_after).enumerate() {
        w.write_record([b.to_string(), n.to_string(), float9(*hv)])?;
    }
    w.flush().with_context(|| format!("cannot write {}", path.display()))
}

/// One histogram per block: `feature,lower_edge,count`.
pub fn write_histograms(path: &Path, hists: &[del_core::analysis::Histogram]) -> anyhow::Result<()> {
    let mut w = csv::Writer::from_writer(create(path)?);
    w.write_record(["feature", "lower_edge", "count"])?;
    for h in hists {
        for (edge, count) in h.edges() {
            w.write_record([h.name.to_string(), float9(edge), count.to_string()])?;
        }
    }
    w.flush().with_context(|| format!("cannot write {}", path.display()))
}

/// Comma-separated token list, as used in CSV cells.
pub fn tokens(seq: &[toy::Token]) -> String {
    seq.iter().map(|t| t.to_string()).collect::<Vec<_>>().join(",")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nine_significant_digits() {
        assert_eq!(float9(0.882496902584595), "0.882496903");
        assert_eq!(float9(2.7), "2.7");
        assert_eq!(float9(-5.0), "-5");
        assert_eq!(float9(100.0), "100");
        assert_eq!(float9(123456789.4), "123456789");
        assert_eq!(float9(1234567890.0), "1.23456789e9");
        assert_eq!(float9(1.5e-7), "1.5e-7");
        assert_eq!(float9(0.0001234567891), "0.000123456789");
        assert_eq!(float9(9.9999999999), "10");
        assert_eq!(float9(f64::INFINITY), "inf");
        for x in [0.1, 1.0 / 3.0, 70.61224, -4.333333333333333, 6.02e23] {
            let y: f64 = float9(x).parse().unwrap();
            assert!((x - y).abs() <= 5e-9 * x.abs(), "{x} -> {y}");
        }
    }

    #[test]
    fn token_lists() {
        assert_eq!(tokens(&[3, 7, 12]), "3,7,12");
    }

    #[test]
    fn record_round_trip_checks_consistency() {
        let c = Candidate::evaluate(vec![3, 7], vec![0.5, -1.0], 2).unwrap();
        let rec = CandidateRecord::from(&c);
        let json = serde_json::to_string(&rec).unwrap();
        assert!(json.contains("\"phenotype\":[3,7]"));
        let back: CandidateRecord = serde_json::from_str(&json).unwrap();
        assert_eq!(back.to_candidate().unwrap(), c);
        let mut bad = back.clone();
        bad.raw_properties.q = 0.1;
        assert!(bad.to_candidate().is_err());
    }
}
