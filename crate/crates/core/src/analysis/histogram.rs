use alloc::vec;
use alloc::vec::Vec;

use crate::toy::{self, TokenSeq};

/// Fixed-width histogram over `[lower, lower + width * bins)`. Values
/// outside the range are clamped into the first or last bin.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    pub name: &'static str,
    pub lower: f64,
    pub width: f64,
    pub counts: Vec<usize>,
}

impl Histogram {
    pub fn new(name: &'static str, lower: f64, upper: f64, bins: usize) -> Self {
        let bins = bins.max(1);
        Self {
            name,
            lower,
            width: (upper - lower) / bins as f64,
            counts: vec![0; bins],
        }
    }

    pub fn add(&mut self, value: f64) {
        let last = self.counts.len() - 1;
        let pos = libm::floor((value - self.lower) / self.width);
        let idx = if pos.is_nan() || pos < 0.0 {
            0
        } else {
            (pos as usize).min(last)
        };
        self.counts[idx] += 1;
    }

    pub fn edges(&self) -> impl Iterator<Item = (f64, usize)> + '_ {
        self.counts
            .iter()
            .enumerate()
            .map(|(i, &c)| (self.lower + i as f64 * self.width, c))
    }

    pub fn total(&self) -> usize {
        self.counts.iter().sum()
    }
}

/// Property and structural-feature histograms of the valid members of a
/// population.
pub fn distribution_summary(pop: &[TokenSeq], bins: usize) -> Vec<Histogram> {
    let max = toy::MAX_LEN as f64;
    let mut hists = [
        Histogram::new("q", 0.0, 1.0, bins),
        Histogram::new("s", 1.0, 8.0, bins),
        Histogram::new("lp", -5.0, 5.0, bins),
        Histogram::new("length", toy::MIN_LEN as f64, max + 1.0, bins),
        Histogram::new("weight_sum", 0.0, 5.0 * max, bins),
        Histogram::new("complexity_sum", 0.0, 7.0 * max, bins),
        Histogram::new("polarity_sum", -5.0 * max, 5.0 * max, bins),
    ];
    for seq in pop {
        let Ok(p) = toy::properties(seq) else { continue };
        let values = [
            p.q,
            p.s,
            p.lp,
            seq.len() as f64,
            seq.iter().map(|&t| toy::weight(t) as f64).sum(),
            seq.iter().map(|&t| toy::complexity(t) as f64).sum(),
            seq.iter().map(|&t| toy::polarity(t) as f64).sum(),
        ];
        for (h, v) in hists.iter_mut().zip(values) {
            h.add(v);
        }
    }
    hists.into()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_member_fills_one_bin_each() {
        let h = distribution_summary(&[vec![3, 7]], 10);
        for hist in &h {
            assert_eq!(hist.counts.iter().filter(|&&c| c > 0).count(), 1, "{}", hist.name);
        }
    }

    #[test]
    fn counts_sum_to_population_size() {
        let pop: Vec<TokenSeq> = toy::enumerate_valid(2, 3).into_iter().take(500).collect();
        for hist in distribution_summary(&pop, 7) {
            assert_eq!(hist.total(), 500);
        }
        assert_eq!(distribution_summary(&pop, 7), distribution_summary(&pop, 7));
    }

    #[test]
    fn extremes_land_in_end_bins() {
        let mut h = Histogram::new("x", 0.0, 1.0, 4);
        h.add(1.0);
        h.add(-3.0);
        assert_eq!(h.counts, vec![1, 0, 0, 1]);
    }
}
