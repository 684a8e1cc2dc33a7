use std::collections::BTreeSet;

use del_core::dgm::{ModelDims, SequenceVae};
use del_core::rng::{stream, Purpose};
use del_core::toy::{is_valid, population_metrics, properties, sample_metrics, sampled_metrics, TokenSeq};
use proptest::prelude::*;

fn valid_sequence() -> impl Strategy<Value = TokenSeq> {
    prop::collection::vec(0u8..16, 2..=10).prop_filter("adjacent gap", |s| is_valid(s))
}

proptest! {
    #[test]
    fn properties_depend_on_the_multiset(seq in valid_sequence(), rot in 0usize..10) {
        let mut turned = seq.clone();
        turned.rotate_left(rot % seq.len());
        let mut rev = seq.clone();
        rev.reverse();
        let p = properties(&seq).unwrap();
        for other in [turned, rev] {
            if is_valid(&other) {
                let o = properties(&other).unwrap();
                prop_assert!((p.q - o.q).abs() < 1e-12);
                prop_assert!((p.s - o.s).abs() < 1e-12);
                prop_assert!((p.lp - o.lp).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn canonical_vector_reverses_q(seq in valid_sequence()) {
        let p = properties(&seq).unwrap();
        let better = del_core::toy::PropertyTriple { q: p.q + 0.01, ..p };
        prop_assert!(del_core::pareto::dominates(&better.canonical(), &p.canonical()).unwrap());
    }

    #[test]
    fn metrics_stay_in_unit_interval(
        pop in prop::collection::vec(prop::collection::vec(0u8..18, 0..12), 1..30),
        train in prop::collection::vec(valid_sequence(), 0..10),
    ) {
        let train: BTreeSet<TokenSeq> = train.into_iter().collect();
        for m in [population_metrics(&pop, &train).unwrap(), sample_metrics(&pop, &train).unwrap()] {
            for v in [m.validity_smiles, m.validity_fragments, m.novelty, m.diversity] {
                prop_assert!((0.0..=1.0).contains(&v));
            }
        }
    }
}

#[test]
fn untrained_model_sampled_metrics() {
    let model = SequenceVae::new(ModelDims::desk(), &mut stream(5, Purpose::Init, 0)).unwrap();
    let train = BTreeSet::new();
    let a = sampled_metrics(&model, 300, &train, &mut stream(5, Purpose::Metrics, 0)).unwrap();
    let b = sampled_metrics(&model, 300, &train, &mut stream(5, Purpose::Metrics, 0)).unwrap();
    assert_eq!(a, b);
    for v in [a.validity_smiles, a.validity_fragments, a.novelty, a.diversity] {
        assert!((0.0..=1.0).contains(&v));
    }
    assert!(sampled_metrics(&model, 0, &train, &mut stream(5, Purpose::Metrics, 0)).is_err());
}
