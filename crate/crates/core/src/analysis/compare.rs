use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{invalid, Result};
use crate::pareto::nondominated_sort;

/// One source's share of the pooled first front.
#[derive(Debug, Clone, PartialEq)]
pub struct SourceSurvival {
    pub name: String,
    pub front_size: usize,
    pub survivors: usize,
    /// `100 * survivors / front_size`.
    pub percent: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrontComparison {
    pub sources: Vec<SourceSurvival>,
}

impl FrontComparison {
    pub fn get(&self, name: &str) -> Option<&SourceSurvival> {
        self.sources.iter().find(|s| s.name == name)
    }
}

/// Pool every source, sort, and count how many of each source's points
/// land in the pooled rank-1 front.
pub fn compare_fronts<V: AsRef<[f64]>>(sources: &[(String, Vec<V>)]) -> Result<FrontComparison> {
    if sources.len() < 2 {
        return Err(invalid!("need at least two sources to compare, got {}", sources.len()));
    }
    if let Some((name, _)) = sources.iter().find(|(_, pts)| pts.is_empty()) {
        return Err(invalid!("source {name} is empty"));
    }
    let pooled: Vec<&[f64]> = sources
        .iter()
        .flat_map(|(_, pts)| pts.iter().map(|p| p.as_ref()))
        .collect();
    let fronts = nondominated_sort(&pooled)?;
    let mut offset = 0;
    let mut out = Vec::with_capacity(sources.len());
    for (name, pts) in sources {
        let survivors = (offset..offset + pts.len())
            .filter(|&i| fronts.rank[i] == 1)
            .count();
        out.push(SourceSurvival {
            name: name.clone(),
            front_size: pts.len(),
            survivors,
            percent: 100.0 * survivors as f64 / pts.len() as f64,
        });
        offset += pts.len();
    }
    Ok(FrontComparison { sources: out })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn named(name: &str, pts: &[[f64; 2]]) -> (String, Vec<Vec<f64>>) {
        (name.into(), pts.iter().map(|p| p.to_vec()).collect())
    }

    #[test]
    fn dominating_source_takes_everything() {
        let c = compare_fronts(&[
            named("a", &[[0.0, 1.0], [1.0, 0.0]]),
            named("b", &[[2.0, 2.0], [3.0, 1.5]]),
        ])
        .unwrap();
        assert_eq!(c.get("a").unwrap().percent, 100.0);
        assert_eq!(c.get("b").unwrap().percent, 0.0);
    }

    #[test]
    fn identical_sources_both_survive() {
        let pts = [[0.0, 1.0], [1.0, 0.0]];
        let c = compare_fronts(&[named("a", &pts), named("b", &pts)]).unwrap();
        assert!(c.sources.iter().all(|s| s.percent == 100.0));
    }

    #[test]
    fn partial_survival() {
        let c = compare_fronts(&[
            named("a", &[[1.0, 4.0], [4.0, 1.0]]),
            named("b", &[[2.0, 2.0], [5.0, 5.0]]),
        ])
        .unwrap();
        assert_eq!((c.sources[0].survivors, c.sources[0].percent), (2, 100.0));
        assert_eq!((c.sources[1].survivors, c.sources[1].percent), (1, 50.0));
    }

    #[test]
    fn needs_two_non_empty_sources() {
        assert!(compare_fronts(&[named("a", &[[0.0, 0.0]])]).is_err());
        assert!(compare_fronts(&[named("a", &[[0.0, 0.0]]), named("b", &[])]).is_err());
    }
}
