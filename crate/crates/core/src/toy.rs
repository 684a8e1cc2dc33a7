//! A deterministic fragment-sequence domain standing in for molecules.
//!
//! Sixteen fragment tokens carry fixed integer attributes (weight,
//! complexity, polarity). A sequence is valid when its length is in
//! `[2, 10]` and adjacent token indices differ by at most 8. Three analytic
//! scores play the role of the chemistry simulator:
//!
//! * `q  = exp(-(mean weight - 3)^2 / 2)`, maximized (drug-likeness analogue)
//! * `s  = mean complexity + 0.1 * length`, minimized (synthesizability analogue)
//! * `lp = mean polarity`, minimized (lipophilicity analogue)

use alloc::collections::BTreeSet;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::dgm::SequenceVae;
use crate::error::{invalid, Result};
use crate::pareto::ObjectiveVector;

pub type Token = u8;
pub type TokenSeq = Vec<Token>;

pub const FRAGMENTS: usize = 16;
pub const EOS: Token = 16;
pub const PAD: Token = 17;
/// Fragments plus EOS and PAD.
pub const VOCAB: usize = 18;
pub const MIN_LEN: usize = 2;
pub const MAX_LEN: usize = 10;
pub const MAX_STEP: usize = 8;

pub fn weight(token: Token) -> u32 {
    (token as u32 % 5) + 1
}

pub fn complexity(token: Token) -> u32 {
    (token as u32 % 7) + 1
}

pub fn polarity(token: Token) -> i32 {
    (token as i32 % 11) - 5
}

pub fn is_valid(seq: &[Token]) -> bool {
    (MIN_LEN..=MAX_LEN).contains(&seq.len())
        && seq.iter().all(|&t| (t as usize) < FRAGMENTS)
        && seq.windows(2).all(|w| w[0].abs_diff(w[1]) as usize <= MAX_STEP)
}

/// Raw scores of a valid sequence.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PropertyTriple {
    pub q: f64,
    pub s: f64,
    pub lp: f64,
}

impl PropertyTriple {
    /// All-minimize orientation `(-q, s, lp)`.
    pub fn canonical(&self) -> ObjectiveVector {
        ObjectiveVector::new(vec![-self.q, self.s, self.lp]).expect("properties are finite")
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.q, self.s, self.lp]
    }

    /// Toy analogue of the "QED >= 0.88, SAS <= 3, logP <= 1" filter.
    pub fn is_high_quality(&self) -> bool {
        self.q >= 0.88 && self.s <= 3.0 && self.lp <= 0.0
    }
}

pub fn properties(seq: &[Token]) -> Result<PropertyTriple> {
    if !is_valid(seq) {
        return Err(invalid!("sequence {seq:?} is not a valid fragment sequence"));
    }
    let n = seq.len() as f64;
    let mean_w = seq.iter().map(|&t| weight(t) as f64).sum::<f64>() / n;
    let mean_c = seq.iter().map(|&t| complexity(t) as f64).sum::<f64>() / n;
    let mean_p = seq.iter().map(|&t| polarity(t) as f64).sum::<f64>() / n;
    Ok(PropertyTriple {
        q: libm::exp(-(mean_w - 3.0) * (mean_w - 3.0) / 2.0),
        s: mean_c + 0.1 * n,
        lp: mean_p,
    })
}

/// Every valid sequence with length in `min_len..=max_len`, in
/// lexicographic order.
pub fn enumerate_valid(min_len: usize, max_len: usize) -> Vec<TokenSeq> {
    fn extend(prefix: &mut TokenSeq, max_len: usize, min_len: usize, out: &mut Vec<TokenSeq>) {
        if prefix.len() >= min_len {
            out.push(prefix.clone());
        }
        if prefix.len() == max_len {
            return;
        }
        for t in 0..FRAGMENTS as Token {
            if prefix.last().is_none_or(|&p| p.abs_diff(t) as usize <= MAX_STEP) {
                prefix.push(t);
                extend(prefix, max_len, min_len, out);
                prefix.pop();
            }
        }
    }
    let mut out = Vec::new();
    extend(&mut Vec::new(), max_len, min_len.max(1), &mut out);
    out.sort();
    out
}

/// Training corpus and its held-out complement.
#[derive(Debug, Clone)]
pub struct Corpus {
    pub train: Vec<TokenSeq>,
    pub held_out: Vec<TokenSeq>,
}

impl Corpus {
    /// All valid sequences of length 2-3 minus a seeded 10% hold-out.
    pub fn desk<R: Rng + ?Sized>(rng: &mut R) -> Self {
        Self::split(enumerate_valid(2, 3), 0.1, rng)
    }

    pub fn split<R: Rng + ?Sized>(all: Vec<TokenSeq>, held_out_fraction: f64, rng: &mut R) -> Self {
        let mut idx: Vec<usize> = (0..all.len()).collect();
        idx.shuffle(rng);
        let n_out = libm::round(all.len() as f64 * held_out_fraction) as usize;
        let out: BTreeSet<usize> = idx[..n_out].iter().copied().collect();
        let (mut train, mut held_out) = (Vec::new(), Vec::new());
        for (i, seq) in all.into_iter().enumerate() {
            if out.contains(&i) {
                held_out.push(seq);
            } else {
                train.push(seq);
            }
        }
        Self { train, held_out }
    }

    pub fn train_set(&self) -> BTreeSet<TokenSeq> {
        self.train.iter().cloned().collect()
    }
}

/// Validity, novelty and diversity ratios, all in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QualityMetrics {
    pub validity_smiles: f64,
    pub validity_fragments: f64,
    pub novelty: f64,
    pub diversity: f64,
}

/// Population-based metrics: novelty and diversity are taken against the
/// population size.
pub fn population_metrics(pop: &[TokenSeq], train: &BTreeSet<TokenSeq>) -> Result<QualityMetrics> {
    if pop.is_empty() {
        return Err(invalid!("population is empty"));
    }
    let n = pop.len() as f64;
    let valid = pop.iter().filter(|s| is_valid(s)).count();
    let novel = pop.iter().filter(|s| !train.contains(*s)).count();
    let unique = pop.iter().collect::<BTreeSet<_>>().len();
    Ok(QualityMetrics {
        validity_smiles: if valid > 0 { 1.0 } else { 0.0 },
        validity_fragments: valid as f64 / n,
        novelty: novel as f64 / n,
        diversity: unique as f64 / n,
    })
}

/// Generation-based metrics: validity over all samples, novelty and
/// diversity over the valid ones.
pub fn sample_metrics(samples: &[TokenSeq], train: &BTreeSet<TokenSeq>) -> Result<QualityMetrics> {
    if samples.is_empty() {
        return Err(invalid!("no samples"));
    }
    let valid: Vec<&TokenSeq> = samples.iter().filter(|s| is_valid(s)).collect();
    if valid.is_empty() {
        return Ok(QualityMetrics {
            validity_smiles: 0.0,
            validity_fragments: 0.0,
            novelty: 0.0,
            diversity: 0.0,
        });
    }
    let v = valid.len() as f64;
    let novel = valid.iter().filter(|s| !train.contains(**s)).count();
    let unique = valid.iter().collect::<BTreeSet<_>>().len();
    Ok(QualityMetrics {
        validity_smiles: 1.0,
        validity_fragments: v / samples.len() as f64,
        novelty: novel as f64 / v,
        diversity: unique as f64 / v,
    })
}

/// Generation-based metrics of `n` sequences decoded (by sampling) from
/// latent draws of the standard normal prior.
pub fn sampled_metrics<R: Rng + ?Sized>(
    model: &SequenceVae,
    n: usize,
    train: &BTreeSet<TokenSeq>,
    rng: &mut R,
) -> Result<QualityMetrics> {
    if n == 0 {
        return Err(invalid!("need at least one sample"));
    }
    let latent = model.dims().latent;
    let mut samples = Vec::with_capacity(n);
    for _ in 0..n {
        let z: Vec<f64> = (0..latent).map(|_| StandardNormal.sample(rng)).collect();
        samples.push(model.decode(&z, rng, false)?);
    }
    sample_metrics(&samples, train)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream, Purpose};

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() < 1e-12
    }

    #[test]
    fn validity_rules() {
        assert!(is_valid(&[3, 7]));
        assert!(!is_valid(&[0, 12]));
        assert!(!is_valid(&[5]));
        assert!(!is_valid(&[0, 8, 16]));
        assert!(is_valid(&[0, 8, 15, 7, 0, 8, 0, 1, 2, 3]));
        assert!(!is_valid(&[0; 11]));
    }

    #[test]
    fn property_examples() {
        let p = properties(&[3, 7]).unwrap();
        assert!(close(p.q, libm::exp(-0.125)));
        assert!((p.q - 0.88250).abs() < 5e-6);
        assert!(close(p.s, 2.7));
        assert!(close(p.lp, 0.0));

        let p = properties(&[3, 3]).unwrap();
        assert!(close(p.q, libm::exp(-0.5)));

        // weights 3 and 3 -> mean 3
        let p = properties(&[2, 7]).unwrap();
        assert_eq!(p.q, 1.0);

        assert!(properties(&[0, 12]).is_err());
    }

    #[test]
    fn canonical_orientation() {
        let p = PropertyTriple { q: 0.9, s: 2.0, lp: -1.0 };
        assert_eq!(p.canonical().values(), &[-0.9, 2.0, -1.0]);
    }

    #[test]
    fn enumeration_counts() {
        // 200 valid pairs: 256 minus 2 * (1 + ... + 7) pairs with gap > 8
        assert_eq!(enumerate_valid(2, 2).len(), 200);
        let all = enumerate_valid(2, 3);
        assert!(all.iter().all(|s| is_valid(s)));
        let brute = (0..16u8)
            .flat_map(|a| (0..16u8).flat_map(move |b| (0..16u8).map(move |c| [a, b, c])))
            .filter(|s| is_valid(s))
            .count();
        assert_eq!(all.len(), 200 + brute);
    }

    #[test]
    fn corpus_split_is_seeded() {
        let a = Corpus::desk(&mut stream(1, Purpose::Subset, 0));
        let b = Corpus::desk(&mut stream(1, Purpose::Subset, 0));
        assert_eq!(a.train, b.train);
        let total = a.train.len() + a.held_out.len();
        assert_eq!(a.held_out.len(), (total as f64 * 0.1).round() as usize);
    }

    #[test]
    fn metric_examples() {
        let train: BTreeSet<TokenSeq> = [vec![3, 7], vec![1, 2], vec![4, 4]].into_iter().collect();
        let pop: Vec<TokenSeq> = train.iter().cloned().collect();
        assert_eq!(population_metrics(&pop, &train).unwrap().novelty, 0.0);

        let fresh = vec![vec![5, 6], vec![6, 5], vec![0, 1]];
        let m = population_metrics(&fresh, &train).unwrap();
        assert_eq!((m.novelty, m.diversity), (1.0, 1.0));

        let dup = vec![vec![5, 6], vec![5, 6], vec![0, 1], vec![1, 0]];
        assert_eq!(population_metrics(&dup, &train).unwrap().diversity, 0.75);

        assert!(population_metrics(&[], &train).is_err());
    }

    #[test]
    fn sample_metric_variants() {
        let train: BTreeSet<TokenSeq> = [vec![3, 7]].into_iter().collect();
        let samples = vec![vec![3, 7], vec![3, 7], vec![0, 12], vec![1, 2]];
        let m = sample_metrics(&samples, &train).unwrap();
        assert_eq!(m.validity_fragments, 0.75);
        assert!(close(m.novelty, 1.0 / 3.0));
        assert!(close(m.diversity, 2.0 / 3.0));
        let m = sample_metrics(&[vec![5, 6]], &train).unwrap();
        assert_eq!((m.novelty, m.diversity), (1.0, 1.0));
    }
}
