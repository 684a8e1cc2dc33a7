//! Evolutionary operators acting on latent vectors: binary tournament
//! selection under the crowded comparison, linear and discrete
//! recombination, and single-site Gaussian mutation.
//!
//! Each operator has a deterministic core that takes its random draws as
//! arguments, and a thin wrapper that pulls those draws from an RNG.

use alloc::vec::Vec;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{invalid, Error, Result};
use crate::pareto::{crowded_less, CrowdedKey};

/// Latent coordinates of one candidate (the genotype).
pub type LatentVector = Vec<f64>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CrossoverKind {
    Linear,
    Discrete,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvoConfig {
    /// Probability that the better of two tournament entrants wins.
    pub p_select: f64,
    /// Per-child mutation probability.
    pub p_mutate: f64,
    pub crossover: CrossoverKind,
    /// Extension of the linear-recombination line beyond both parents.
    pub line_extension: f64,
}

impl Default for EvoConfig {
    fn default() -> Self {
        Self {
            p_select: 0.95,
            p_mutate: 0.01,
            crossover: CrossoverKind::Linear,
            line_extension: 0.25,
        }
    }
}

impl EvoConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.p_select > 0.5 && self.p_select <= 1.0) {
            return Err(invalid!("selection probability {} outside (0.5, 1]", self.p_select));
        }
        if !(0.0..1.0).contains(&self.p_mutate) {
            return Err(invalid!("mutation probability {} outside [0, 1)", self.p_mutate));
        }
        if !self.line_extension.is_finite() {
            return Err(invalid!("line extension must be finite"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Pick {
    First,
    Second,
}

/// Resolve one binary tournament given the uniform draw `u`.
///
/// Returns `None` when the entrants are incomparable under the crowded
/// comparison; the caller then flips a fair coin.
pub fn duel(a: CrowdedKey, b: CrowdedKey, u: f64, p_select: f64) -> Option<Pick> {
    let (better, worse) = if crowded_less(a, b) {
        (Pick::First, Pick::Second)
    } else if crowded_less(b, a) {
        (Pick::Second, Pick::First)
    } else {
        return None;
    };
    Some(if u < p_select { better } else { worse })
}

/// Run `count` binary tournaments and return the winners' indices.
pub fn tournament_select<R: Rng + ?Sized>(
    keys: &[CrowdedKey],
    count: usize,
    cfg: &EvoConfig,
    rng: &mut R,
) -> Result<Vec<usize>> {
    if keys.is_empty() {
        return Err(invalid!("tournament over an empty population"));
    }
    let n = keys.len();
    let mut winners = Vec::with_capacity(count);
    for _ in 0..count {
        let i = rng.random_range(0..n);
        let j = rng.random_range(0..n);
        let u: f64 = rng.random();
        let pick = duel(keys[i], keys[j], u, cfg.p_select).unwrap_or_else(|| {
            if rng.random::<bool>() {
                Pick::First
            } else {
                Pick::Second
            }
        });
        winners.push(match pick {
            Pick::First => i,
            Pick::Second => j,
        });
    }
    Ok(winners)
}

fn same_len(a: &[f64], b: &[f64]) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: a.len(),
            actual: b.len(),
        });
    }
    Ok(())
}

/// Point on the parent line at coefficient `-d + (1 + 2d) * alpha`.
pub fn line_point(p1: &[f64], p2: &[f64], alpha: f64, extension: f64) -> LatentVector {
    let r = -extension + (1.0 + 2.0 * extension) * alpha;
    p1.iter().zip(p2).map(|(a, b)| a + r * (b - a)).collect()
}

pub fn crossover_linear<R: Rng + ?Sized>(
    p1: &[f64],
    p2: &[f64],
    cfg: &EvoConfig,
    rng: &mut R,
) -> Result<(LatentVector, LatentVector)> {
    same_len(p1, p2)?;
    let a1: f64 = rng.random();
    let a2: f64 = rng.random();
    Ok((
        line_point(p1, p2, a1, cfg.line_extension),
        line_point(p1, p2, a2, cfg.line_extension),
    ))
}

/// Prefix/suffix swap after the first `cut` coordinates (`1 <= cut < L`).
pub fn swap_tails(p1: &[f64], p2: &[f64], cut: usize) -> Result<(LatentVector, LatentVector)> {
    same_len(p1, p2)?;
    if p1.len() < 2 {
        return Err(invalid!("discrete crossover needs at least 2 coordinates"));
    }
    if cut == 0 || cut >= p1.len() {
        return Err(invalid!("cut point {cut} outside 1..{}", p1.len()));
    }
    let mut c1 = p1[..cut].to_vec();
    c1.extend_from_slice(&p2[cut..]);
    let mut c2 = p2[..cut].to_vec();
    c2.extend_from_slice(&p1[cut..]);
    Ok((c1, c2))
}

pub fn crossover_discrete<R: Rng + ?Sized>(
    p1: &[f64],
    p2: &[f64],
    rng: &mut R,
) -> Result<(LatentVector, LatentVector)> {
    same_len(p1, p2)?;
    if p1.len() < 2 {
        return Err(invalid!("discrete crossover needs at least 2 coordinates"));
    }
    let cut = rng.random_range(1..p1.len());
    swap_tails(p1, p2, cut)
}

/// Mutation with explicit draws: `gate < p_mutate` replaces coordinate
/// `site` (0-based) with `value`.
pub fn mutate_with(mut z: LatentVector, gate: f64, site: usize, value: f64, p_mutate: f64) -> LatentVector {
    if gate < p_mutate {
        z[site] = value;
    }
    z
}

pub fn mutate<R: Rng + ?Sized>(z: LatentVector, cfg: &EvoConfig, rng: &mut R) -> LatentVector {
    let gate: f64 = rng.random();
    if gate >= cfg.p_mutate || z.is_empty() {
        return z;
    }
    let site = rng.random_range(0..z.len());
    let value: f64 = StandardNormal.sample(rng);
    mutate_with(z, gate, site, value, cfg.p_mutate)
}

/// Pair selected parents in order (1st with 2nd, ...) and produce exactly
/// `parents.len()` children. An odd last parent mates with the first one
/// and only its first child is kept.
pub fn offspring<R1, R2>(
    parents: &[&[f64]],
    cfg: &EvoConfig,
    cross_rng: &mut R1,
    mutate_rng: &mut R2,
) -> Result<Vec<LatentVector>>
where
    R1: Rng + ?Sized,
    R2: Rng + ?Sized,
{
    let m = parents.len();
    let mut children = Vec::with_capacity(m + 1);
    let mut i = 0;
    while i < m {
        let a = parents[i];
        let b = if i + 1 < m { parents[i + 1] } else { parents[0] };
        let (c1, c2) = match cfg.crossover {
            CrossoverKind::Linear => crossover_linear(a, b, cfg, cross_rng)?,
            CrossoverKind::Discrete => crossover_discrete(a, b, cross_rng)?,
        };
        children.push(mutate(c1, cfg, mutate_rng));
        children.push(mutate(c2, cfg, mutate_rng));
        i += 2;
    }
    children.truncate(m);
    Ok(children)
}
