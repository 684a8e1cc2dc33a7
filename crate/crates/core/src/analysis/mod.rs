//! Front-quality analysis: exact hypervolume, the scrambled-Sobol latent
//! baseline, pooled-front survival comparison and distribution summaries.

mod compare;
mod histogram;
mod hypervolume;
pub mod sobol;

use alloc::vec::Vec;

use rand::Rng;

pub use compare::{compare_fronts, FrontComparison, SourceSurvival};
pub use histogram::{distribution_summary, Histogram};
pub use hypervolume::{hypervolume, reference_point};

use crate::dgm::SequenceVae;
use crate::engine::Candidate;
use crate::error::{invalid, Result};
use crate::pareto::nondominated_sort;
use crate::toy;

/// Half-width of the latent box the Sobol points are mapped into.
pub const LATENT_BOX: f64 = 3.0;

/// Rank-1 members of a set of objective vectors, in index order.
pub fn first_front<V: AsRef<[f64]> + Clone>(points: &[V]) -> Result<Vec<V>> {
    if points.is_empty() {
        return Ok(Vec::new());
    }
    let fa = nondominated_sort(points)?;
    Ok(fa.fronts[0].iter().map(|&i| points[i].clone()).collect())
}

#[derive(Debug, Clone)]
pub struct SobolBaseline {
    /// Valid decodes; `born_generation` holds the batch (0 = initial design).
    pub evaluated: Vec<Candidate>,
    /// Number of latent points decoded.
    pub decoded: usize,
    /// Hypervolume of the cumulative first front after the initial design
    /// and after every batch.
    pub trace: Vec<f64>,
    pub reference: Vec<f64>,
}

impl SobolBaseline {
    /// First front of everything evaluated.
    pub fn front(&self) -> Result<Vec<Vec<f64>>> {
        let pts: Vec<Vec<f64>> = self.evaluated.iter().map(|c| c.objectives.to_vec()).collect();
        first_front(&pts)
    }
}

/// Quasi-random search: scrambled Sobol points mapped to
/// `[-LATENT_BOX, LATENT_BOX]^L`, decoded by sampling and scored by the toy
/// simulator. The trace reference point is the componentwise worst
/// observed objective plus 0.1.
pub fn sobol_baseline<R: Rng + ?Sized>(
    model: &SequenceVae,
    n_init: usize,
    n_batches: usize,
    batch: usize,
    scramble_seed: u64,
    rng: &mut R,
) -> Result<SobolBaseline> {
    if n_batches > 0 && batch == 0 {
        return Err(invalid!("batch size must be positive"));
    }
    let latent = model.dims().latent;
    let sobol = sobol::Sobol::new(latent)?;
    let total = n_init + n_batches * batch;
    let mut evaluated = Vec::new();
    let mut batch_ends = Vec::with_capacity(n_batches + 1);
    for index in 0..total {
        let tag = if index < n_init { 0 } else { 1 + (index - n_init) / batch };
        let z: Vec<f64> = sobol
            .scrambled_point(index as u32, scramble_seed)
            .into_iter()
            .map(|u| -LATENT_BOX + 2.0 * LATENT_BOX * u)
            .collect();
        let seq = model.decode(&z, rng, false)?;
        if let Ok(raw) = toy::properties(&seq) {
            evaluated.push(Candidate::new(seq, z, raw, tag));
        }
        if index + 1 == n_init || (index >= n_init && (index + 1 - n_init).is_multiple_of(batch)) {
            batch_ends.push(evaluated.len());
        }
    }
    if n_init == 0 {
        batch_ends.insert(0, 0);
    }

    let points: Vec<Vec<f64>> = evaluated.iter().map(|c| c.objectives.to_vec()).collect();
    let reference = if points.is_empty() {
        Vec::new()
    } else {
        reference_point(&[&points[..]], 0.1)?
    };
    let mut trace = Vec::with_capacity(batch_ends.len());
    for &end in &batch_ends {
        let front = first_front(&points[..end])?;
        trace.push(if front.is_empty() { 0.0 } else { hypervolume(&front, &reference)? });
    }
    Ok(SobolBaseline {
        evaluated,
        decoded: total,
        trace,
        reference,
    })
}
