//! Pareto dominance, fast non-dominated sorting and crowding distance.
//!
//! All objectives are minimized. Callers negate objectives they want to
//! maximize before building an [`ObjectiveVector`].

use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::ops::Deref;

use crate::error::{invalid, Error, Result};

/// A point in objective space, all entries finite.
#[derive(Debug, Clone, PartialEq)]
pub struct ObjectiveVector(Vec<f64>);

impl ObjectiveVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(invalid!("objective vector must have at least one entry"));
        }
        if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
            return Err(invalid!("objective value {bad} is not finite"));
        }
        Ok(Self(values))
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl Deref for ObjectiveVector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl TryFrom<Vec<f64>> for ObjectiveVector {
    type Error = Error;

    fn try_from(values: Vec<f64>) -> Result<Self> {
        Self::new(values)
    }
}

/// Non-domination ranks, crowding distances and the fronts they induce.
#[derive(Debug, Clone, PartialEq)]
pub struct FrontAssignment {
    /// 1-based rank per candidate.
    pub rank: Vec<usize>,
    /// Crowding distance per candidate, computed within its own front.
    pub crowding: Vec<f64>,
    /// `fronts[0]` holds the indices of rank 1, in ascending index order.
    pub fronts: Vec<Vec<usize>>,
}

impl FrontAssignment {
    pub fn len(&self) -> usize {
        self.rank.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rank.is_empty()
    }

    /// The crowded-comparison key of candidate `i`.
    pub fn key(&self, i: usize) -> CrowdedKey {
        CrowdedKey {
            rank: self.rank[i],
            crowding: self.crowding[i],
        }
    }

    /// Indices ordered best-first under the crowded comparison, ties kept
    /// in index order.
    pub fn crowded_order(&self) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.len()).collect();
        order.sort_by(|&a, &b| crowded_cmp(self.key(a), self.key(b)));
        order
    }
}

/// `(rank, crowding)` pair compared by [`crowded_less`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrowdedKey {
    pub rank: usize,
    pub crowding: f64,
}

fn check_pair(a: &[f64], b: &[f64]) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: a.len(),
            actual: b.len(),
        });
    }
    if a.iter().chain(b).any(|v| !v.is_finite()) {
        return Err(invalid!("non-finite objective value"));
    }
    Ok(())
}

/// `a` dominates `b`: no worse anywhere, strictly better somewhere.
pub fn dominates(a: &[f64], b: &[f64]) -> Result<bool> {
    check_pair(a, b)?;
    Ok(dominates_unchecked(a, b))
}

pub(crate) fn dominates_unchecked(a: &[f64], b: &[f64]) -> bool {
    let mut strict = false;
    for (x, y) in a.iter().zip(b) {
        if x > y {
            return false;
        }
        if x < y {
            strict = true;
        }
    }
    strict
}

fn check_population<V: AsRef<[f64]>>(pop: &[V]) -> Result<usize> {
    let first = pop
        .first()
        .ok_or_else(|| invalid!("population is empty"))?
        .as_ref();
    let k = first.len();
    if k == 0 {
        return Err(invalid!("objective vectors must have at least one entry"));
    }
    for v in pop {
        let v = v.as_ref();
        if v.len() != k {
            return Err(Error::DimensionMismatch {
                expected: k,
                actual: v.len(),
            });
        }
        if v.iter().any(|x| !x.is_finite()) {
            return Err(invalid!("non-finite objective value"));
        }
    }
    Ok(k)
}

/// Deb's fast non-dominated sort followed by per-front crowding distance.
pub fn nondominated_sort<V: AsRef<[f64]>>(pop: &[V]) -> Result<FrontAssignment> {
    check_population(pop)?;
    let n = pop.len();
    let mut dominated_by_me: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut domination_count = vec![0usize; n];

    for i in 0..n {
        for j in i + 1..n {
            let (a, b) = (pop[i].as_ref(), pop[j].as_ref());
            if dominates_unchecked(a, b) {
                dominated_by_me[i].push(j);
                domination_count[j] += 1;
            } else if dominates_unchecked(b, a) {
                dominated_by_me[j].push(i);
                domination_count[i] += 1;
            }
        }
    }

    let mut rank = vec![0usize; n];
    let mut fronts = Vec::new();
    let mut current: Vec<usize> = (0..n).filter(|&i| domination_count[i] == 0).collect();
    while !current.is_empty() {
        let r = fronts.len() + 1;
        let mut next = Vec::new();
        for &i in &current {
            rank[i] = r;
            for &j in &dominated_by_me[i] {
                domination_count[j] -= 1;
                if domination_count[j] == 0 {
                    next.push(j);
                }
            }
        }
        next.sort_unstable();
        fronts.push(core::mem::replace(&mut current, next));
    }

    let mut crowding = vec![0.0; n];
    for front in &fronts {
        let members: Vec<&[f64]> = front.iter().map(|&i| pop[i].as_ref()).collect();
        for (&i, d) in front.iter().zip(crowding_distance(&members)) {
            crowding[i] = d;
        }
    }

    Ok(FrontAssignment {
        rank,
        crowding,
        fronts,
    })
}

fn lexicographic(a: &[f64], b: &[f64]) -> Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.total_cmp(y) {
            Ordering::Equal => continue,
            other => return other,
        }
    }
    Ordering::Equal
}

/// Crowding distance of every member of one front.
///
/// Points at either end of an objective axis get `+inf`. A degenerate axis
/// (all values equal) contributes nothing. Exact duplicates of an objective
/// vector share a single representative (the lowest index); the other
/// copies get distance 0.
pub fn crowding_distance<V: AsRef<[f64]>>(front: &[V]) -> Vec<f64> {
    let n = front.len();
    if n == 0 {
        return Vec::new();
    }
    let k = front[0].as_ref().len();

    let mut by_vector: Vec<usize> = (0..n).collect();
    by_vector.sort_by(|&a, &b| lexicographic(front[a].as_ref(), front[b].as_ref()).then(a.cmp(&b)));
    let mut unique = Vec::with_capacity(n);
    for (pos, &i) in by_vector.iter().enumerate() {
        if pos == 0 || front[by_vector[pos - 1]].as_ref() != front[i].as_ref() {
            unique.push(i);
        }
    }

    let mut dist = vec![0.0; n];
    if unique.len() <= 2 {
        for &i in &unique {
            dist[i] = f64::INFINITY;
        }
        return dist;
    }

    let mut order = unique.clone();
    for obj in 0..k {
        let val = |i: usize| front[i].as_ref()[obj];
        order.sort_by(|&a, &b| {
            val(a)
                .total_cmp(&val(b))
                .then_with(|| lexicographic(front[a].as_ref(), front[b].as_ref()))
        });
        let (lo, hi) = (order[0], order[order.len() - 1]);
        dist[lo] = f64::INFINITY;
        dist[hi] = f64::INFINITY;
        let span = val(hi) - val(lo);
        if span <= 0.0 {
            continue;
        }
        for w in order.windows(3) {
            dist[w[1]] += (val(w[2]) - val(w[0])) / span;
        }
    }
    dist
}

/// Crowded-comparison partial order: lower rank wins, then larger crowding.
pub fn crowded_less(a: CrowdedKey, b: CrowdedKey) -> bool {
    a.rank < b.rank || (a.rank == b.rank && a.crowding > b.crowding)
}

/// Total preorder consistent with [`crowded_less`]; incomparable pairs
/// compare `Equal`.
pub fn crowded_cmp(a: CrowdedKey, b: CrowdedKey) -> Ordering {
    a.rank
        .cmp(&b.rank)
        .then_with(|| b.crowding.total_cmp(&a.crowding))
}
