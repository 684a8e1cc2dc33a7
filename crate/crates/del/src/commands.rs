//! Subcommand bodies, kept apart from argument parsing so tests can call
//! them directly. Exit status: 0 success, 1 runtime failure, 2 bad input.

use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::Args;
use del_core::analysis::compare_fronts;
use del_core::engine::{front_hypervolume, novel_high_quality, GenerationReport, Population};
use del_core::toy::population_metrics;

use crate::config::{ConfigError, Crossover, RunConfig};
use crate::format::{self, float9, FormatError};
use crate::run;

#[derive(Debug)]
pub enum CommandError {
    /// Bad configuration, arguments or input files.
    Usage(String),
    Runtime(anyhow::Error),
}

impl CommandError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CommandError::Usage(_) => 2,
            CommandError::Runtime(_) => 1,
        }
    }
}

impl fmt::Display for CommandError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CommandError::Usage(m) => f.write_str(m),
            CommandError::Runtime(e) => write!(f, "{e:#}"),
        }
    }
}

impl std::error::Error for CommandError {}

impl From<ConfigError> for CommandError {
    fn from(e: ConfigError) -> Self {
        CommandError::Usage(e.to_string())
    }
}

impl From<FormatError> for CommandError {
    fn from(e: FormatError) -> Self {
        CommandError::Usage(e.to_string())
    }
}

impl From<anyhow::Error> for CommandError {
    fn from(e: anyhow::Error) -> Self {
        CommandError::Runtime(e)
    }
}

/// Configuration file plus command-line overrides.
#[derive(Debug, Clone, Default, Args)]
pub struct Overrides {
    /// TOML configuration file; every key is optional.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub generations: Option<usize>,
    #[arg(long)]
    pub population: Option<usize>,
    /// Constant KL weight for the initial training.
    #[arg(long)]
    pub beta: Option<f64>,
    /// Property-loss weight for the initial training.
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long, value_enum)]
    pub crossover: Option<Crossover>,
    /// Skip per-generation fine-tuning.
    #[arg(long)]
    pub no_finetune: bool,
    /// Train without the property-prediction loss.
    #[arg(long)]
    pub no_property_head: bool,
}

impl Overrides {
    pub fn resolve(&self) -> Result<RunConfig, CommandError> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        if let Some(v) = &self.out {
            cfg.out = v.clone();
        }
        if let Some(v) = self.generations {
            cfg.generations = v;
        }
        if let Some(v) = self.population {
            cfg.population = v;
        }
        if let Some(v) = self.beta {
            cfg.set_constant_beta(v);
        }
        if let Some(v) = self.alpha {
            cfg.alpha = v;
        }
        if let Some(v) = self.crossover {
            cfg.crossover = v;
        }
        if self.no_finetune {
            cfg.finetune = false;
        }
        if self.no_property_head {
            cfg.use_property_head = false;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn progress_line(r: &GenerationReport) -> String {
    format!(
        "generation {:>3}  front {:>4}  hypervolume {}  novelty {}  diversity {}  high-quality {}",
        r.generation,
        r.front_size,
        float9(r.front_hypervolume),
        float9(r.metrics.novelty),
        float9(r.metrics.diversity),
        r.novel_high_quality
    )
}

/// `run`: the full generational loop.
pub fn cmd_run(ov: &Overrides, log: &mut dyn Write) -> Result<RunConfig, CommandError> {
    let cfg = ov.resolve()?;
    cfg.del_config()?;
    run::run_del(&cfg, &cfg.out, |r| {
        let _ = writeln!(log, "{}", progress_line(r));
    })?;
    Ok(cfg)
}

/// `baseline`: Sobol search against a checkpoint.
pub fn cmd_baseline(ov: &Overrides, model: Option<&Path>, log: &mut dyn Write) -> Result<(), CommandError> {
    let cfg = ov.resolve()?;
    let path = model.map_or_else(|| cfg.baseline_checkpoint(), Path::to_path_buf);
    if !path.is_file() {
        return Err(CommandError::Usage(format!("model checkpoint {} not found", path.display())));
    }
    let model = run::load_model(&path).map_err(|e| CommandError::Usage(format!("{e:#}")))?;
    let base = run::run_baseline(&cfg, &model, &cfg.out)?;
    let _ = writeln!(
        log,
        "baseline: {} decoded, {} valid, final hypervolume {}",
        base.decoded,
        base.evaluated.len(),
        base.trace.last().map_or_else(|| "0".into(), |v| float9(*v))
    );
    Ok(())
}

/// `compare`: survival of each front file in the pooled first front.
pub fn cmd_compare(files: &[PathBuf], out: Option<&Path>, stdout: &mut dyn Write) -> Result<(), CommandError> {
    if files.len() < 2 {
        return Err(CommandError::Usage(format!("compare needs at least two front files, got {}", files.len())));
    }
    let mut sources = Vec::with_capacity(files.len());
    for f in files {
        let pts = format::read_front(f)?;
        if pts.is_empty() {
            return Err(CommandError::Usage(format!("{}: no objective vectors", f.display())));
        }
        sources.push((f.display().to_string(), pts));
    }
    let width = sources[0].1[0].len();
    if let Some((name, _)) = sources.iter().find(|(_, p)| p[0].len() != width) {
        return Err(CommandError::Usage(format!("{name}: objective count differs from {}", sources[0].0)));
    }
    let cmp = compare_fronts(&sources).map_err(|e| CommandError::Usage(e.to_string()))?;
    format::write_comparison(&mut *stdout, &cmp)?;
    if let Some(path) = out {
        let mut buf = Vec::new();
        format::write_comparison(&mut buf, &cmp)?;
        std::fs::write(path, buf).map_err(|e| anyhow::anyhow!("cannot write {}: {e}", path.display()))?;
    }
    Ok(())
}

/// `metrics`: recompute population metrics from a snapshot.
pub fn cmd_metrics(ov: &Overrides, population: &Path, stdout: &mut dyn Write) -> Result<(), CommandError> {
    let cfg = ov.resolve()?;
    let records = format::read_population(population)?;
    if records.is_empty() {
        return Err(CommandError::Usage(format!("{}: empty population", population.display())));
    }
    let members = records
        .iter()
        .enumerate()
        .map(|(i, r)| {
            r.to_candidate()
                .map_err(|m| CommandError::Usage(format!("{}:{}: {m}", population.display(), i + 1)))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let pop = Population {
        members,
        generation: 0,
    };
    let train = cfg.corpus().train_set();
    let m = population_metrics(&pop.phenotypes(), &train).map_err(|e| CommandError::Usage(e.to_string()))?;
    let front = pop.first_front().map_err(anyhow::Error::from)?.len();
    let hv = front_hypervolume(&pop).map_err(anyhow::Error::from)?;
    let mut w = csv::Writer::from_writer(&mut *stdout);
    let write = |w: &mut csv::Writer<&mut dyn Write>| -> csv::Result<()> {
        w.write_record([
            "size",
            "validity_smiles",
            "validity_fragments",
            "novelty",
            "diversity",
            "front_size",
            "front_hypervolume",
            "novel_high_quality",
        ])?;
        w.write_record([
            pop.len().to_string(),
            float9(m.validity_smiles),
            float9(m.validity_fragments),
            float9(m.novelty),
            float9(m.diversity),
            front.to_string(),
            float9(hv),
            novel_high_quality(&pop, &train).to_string(),
        ])?;
        w.flush()?;
        Ok(())
    };
    write(&mut w).map_err(anyhow::Error::from)?;
    Ok(())
}
