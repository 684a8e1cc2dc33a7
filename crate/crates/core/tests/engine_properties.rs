//! Invariants of the generational loop, checked on short seeded runs.

use del_core::engine::{Del, DelConfig, GenerationReport, Population, SubsetRule};
use del_core::pareto::dominates;
use del_core::rng::{stream, Purpose};
use del_core::toy::{self, Corpus};

fn small(seed: u64) -> DelConfig {
    DelConfig {
        population: 40,
        generations: 4,
        initial_epochs: 4,
        finetune_epochs: 2,
        seed,
        ..DelConfig::desk()
    }
}

fn run(cfg: DelConfig) -> (Vec<Population>, Vec<GenerationReport>) {
    let corpus = Corpus::desk(&mut stream(cfg.seed, Purpose::Corpus, 0));
    let (mut del, first) = Del::initialize(cfg, &corpus).unwrap();
    let mut pops = vec![del.population().clone()];
    let mut reports = vec![first];
    while !del.is_done() {
        reports.push(del.step().unwrap());
        pops.push(del.population().clone());
    }
    (pops, reports)
}

#[test]
fn loop_invariants_hold() {
    for (seed, subset) in [(1, SubsetRule::Ranked), (2, SubsetRule::Random)] {
        let cfg = DelConfig { subset, ..small(seed) };
        let m = cfg.population;
        let (pops, reports) = run(cfg);
        assert_eq!(pops.len(), 5);
        for (g, (pop, report)) in pops.iter().zip(&reports).enumerate() {
            assert_eq!(pop.generation, g);
            assert_eq!(report.generation, g);
            for c in &pop.members {
                assert!(toy::is_valid(&c.phenotype), "{:?}", c.phenotype);
                let raw = toy::properties(&c.phenotype).unwrap();
                assert_eq!(c.raw, raw);
                assert_eq!(c.objectives, raw.canonical());
                assert!(c.born_generation <= g);
            }
            if g > 0 {
                let prev = &pops[g - 1];
                assert_eq!(pop.len(), m.min(prev.len() + report.offspring));
                for winner in pop.first_front().unwrap() {
                    for old in &prev.members {
                        assert!(!dominates(&old.objectives, &winner.objectives).unwrap());
                    }
                }
                assert!(report.front_hypervolume >= reports[g - 1].front_hypervolume);
            }
        }
    }
}

#[test]
fn runs_replay_exactly() {
    let (a, ra) = run(small(3));
    let (b, rb) = run(small(3));
    assert_eq!(a, b);
    let losses = |r: &[GenerationReport]| r.iter().map(|x| x.last_loss()).collect::<Vec<_>>();
    assert_eq!(losses(&ra), losses(&rb));
    let (c, _) = run(small(4));
    assert_ne!(a, c);
}

#[test]
fn ablations_change_the_run() {
    let (base, _) = run(small(5));
    let (no_ft, _) = run(DelConfig { finetune: false, ..small(5) });
    let (no_head, _) = run(DelConfig { use_property_head: false, ..small(5) });
    assert_eq!(base[0].members.len(), no_ft[0].members.len());
    assert_ne!(base.last(), no_ft.last());
    assert_ne!(base.last(), no_head.last());
}
