//! Run drivers that write their results to an output directory.
//!
//! Layout of a DEL run:
//!
//! ```text
//! <out>/config.resolved         effective configuration (valid TOML input)
//! <out>/metrics.csv             one row per generation
//! <out>/gen_<g>/population.jsonl
//! <out>/gen_<g>/metrics.csv
//! <out>/gen_<g>/front.csv       objective vectors of the rank-1 members
//! <out>/gen_<g>/distribution.csv property and structure histograms
//! <out>/gen_<g>/model.bin
//! ```

use std::path::Path;

use anyhow::Context;
use del_core::analysis::{self, distribution_summary, SobolBaseline};
use del_core::dgm::SequenceVae;
use del_core::engine::{Del, GenerationReport, Population};
use del_core::rng::{stream, Purpose};

use crate::config::RunConfig;
use crate::format;

const HISTOGRAM_BINS: usize = 20;

/// Objective vectors of the rank-1 members of a population.
pub fn front_points(pop: &Population) -> anyhow::Result<Vec<Vec<f64>>> {
    Ok(pop.first_front()?.iter().map(|c| c.objectives.to_vec()).collect())
}

fn write_text(path: &Path, text: &str) -> anyhow::Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    }
    std::fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))
}

fn write_generation(out: &Path, del: &Del, report: &GenerationReport) -> anyhow::Result<()> {
    let dir = out.join(format!("gen_{}", report.generation));
    format::write_population(&dir.join("population.jsonl"), del.population())?;
    format::write_metrics(&dir.join("metrics.csv"), &[report])?;
    format::write_front(&dir.join("front.csv"), &front_points(del.population())?)?;
    write_distribution(&dir.join("distribution.csv"), del.population(), HISTOGRAM_BINS)?;
    let model = dir.join("model.bin");
    std::fs::write(&model, del.model().to_bytes()).with_context(|| format!("cannot write {}", model.display()))
}

/// The complete generational loop. `progress` sees every report as soon as
/// its generation is on disk.
pub fn run_del(cfg: &RunConfig, out: &Path, mut progress: impl FnMut(&GenerationReport)) -> anyhow::Result<(Del, Vec<GenerationReport>)> {
    let del_cfg = cfg.del_config()?;
    write_text(&out.join("config.resolved"), &cfg.to_toml())?;
    let corpus = cfg.corpus();
    let (mut del, first) = Del::initialize(del_cfg, &corpus)?;
    write_generation(out, &del, &first)?;
    progress(&first);
    let mut reports = vec![first];
    while !del.is_done() {
        let report = del.step()?;
        write_generation(out, &del, &report)?;
        progress(&report);
        reports.push(report);
    }
    let all: Vec<&GenerationReport> = reports.iter().collect();
    format::write_metrics(&out.join("metrics.csv"), &all)?;
    Ok((del, reports))
}

pub fn load_model(path: &Path) -> anyhow::Result<SequenceVae> {
    let bytes = std::fs::read(path).with_context(|| format!("cannot read {}", path.display()))?;
    SequenceVae::from_bytes(&bytes).with_context(|| format!("bad checkpoint {}", path.display()))
}

/// Sobol search against `model`, written to `<out>/baseline/`:
/// `hypervolume.csv`, `front.csv` and `reference.csv`.
pub fn run_baseline(cfg: &RunConfig, model: &SequenceVae, out: &Path) -> anyhow::Result<SobolBaseline> {
    let base = analysis::sobol_baseline(
        model,
        cfg.sobol_init,
        cfg.sobol_batches,
        cfg.sobol_batch,
        cfg.seed,
        &mut stream(cfg.seed, Purpose::Sobol, 0),
    )?;
    let dir = out.join("baseline");
    let evaluated: Vec<usize> = (0..base.trace.len()).map(|b| cfg.sobol_init + b * cfg.sobol_batch).collect();
    format::write_trace(&dir.join("hypervolume.csv"), &base.trace, &evaluated)?;
    format::write_front(&dir.join("front.csv"), &base.front()?)?;
    format::write_front(&dir.join("reference.csv"), std::slice::from_ref(&base.reference))?;
    Ok(base)
}

/// Histograms of a population, as CSV.
pub fn write_distribution(path: &Path, pop: &Population, bins: usize) -> anyhow::Result<()> {
    format::write_histograms(path, &distribution_summary(&pop.phenotypes(), bins))
}
