//! The generational loop: train the model on the corpus, seed a population,
//! then repeatedly encode, rank, select, recombine, mutate, decode,
//! evaluate, merge and fine-tune.
//!
//! [`Del`] holds the loop state and advances one generation per
//! [`Del::step`]; writing snapshots is left to the caller.

use alloc::collections::BTreeSet;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::analysis::hypervolume;
use crate::dgm::{self, BetaSchedule, LossBreakdown, ModelDims, SequenceVae, TrainConfig};
use crate::error::{invalid, Error, Result};
use crate::evo::{self, EvoConfig, LatentVector};
use crate::pareto::{nondominated_sort, FrontAssignment, ObjectiveVector};
use crate::rng::{stream, Purpose};
use crate::toy::{self, Corpus, PropertyTriple, QualityMetrics, TokenSeq};

/// One population member.
#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub phenotype: TokenSeq,
    /// Latent code: the encoder mean at the last encoding, or the evolved
    /// point an offspring was decoded from.
    pub genotype: LatentVector,
    pub raw: PropertyTriple,
    pub objectives: ObjectiveVector,
    pub born_generation: usize,
}

impl Candidate {
    pub fn new(phenotype: TokenSeq, genotype: LatentVector, raw: PropertyTriple, born_generation: usize) -> Self {
        Self {
            objectives: raw.canonical(),
            phenotype,
            genotype,
            raw,
            born_generation,
        }
    }

    /// Score a phenotype with the toy simulator.
    pub fn evaluate(phenotype: TokenSeq, genotype: LatentVector, born_generation: usize) -> Result<Self> {
        let raw = toy::properties(&phenotype)?;
        Ok(Self::new(phenotype, genotype, raw, born_generation))
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Population {
    pub members: Vec<Candidate>,
    pub generation: usize,
}

impl Population {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn objectives(&self) -> Vec<&[f64]> {
        self.members.iter().map(|c| c.objectives.values()).collect()
    }

    pub fn phenotypes(&self) -> Vec<TokenSeq> {
        self.members.iter().map(|c| c.phenotype.clone()).collect()
    }

    pub fn fronts(&self) -> Result<FrontAssignment> {
        nondominated_sort(&self.objectives())
    }

    /// Members of the rank-1 front.
    pub fn first_front(&self) -> Result<Vec<&Candidate>> {
        if self.is_empty() {
            return Ok(Vec::new());
        }
        let fa = self.fronts()?;
        Ok(fa.fronts[0].iter().map(|&i| &self.members[i]).collect())
    }
}

/// How the initial population is drawn from the training corpus.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SubsetRule {
    /// Best `M` under the crowded comparison.
    Ranked,
    /// Uniformly random `M`.
    Random,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DelConfig {
    pub population: usize,
    pub generations: usize,
    pub initial_epochs: usize,
    pub finetune_epochs: usize,
    /// Property-loss weight for the initial training.
    pub alpha: f64,
    /// Property-loss weight from the second generation on.
    pub alpha_annealed: f64,
    /// KL-weight schedule for the initial training.
    pub beta: BetaSchedule,
    /// Constant KL weight from the second generation on.
    pub beta_annealed: f64,
    pub evo: EvoConfig,
    pub use_property_head: bool,
    pub finetune: bool,
    pub subset: SubsetRule,
    pub dims: ModelDims,
    pub initial_training: TrainConfig,
    pub finetune_training: TrainConfig,
    pub seed: u64,
}

impl DelConfig {
    /// Scaled-down defaults: M = 200, 10 generations, 50 initial and 30
    /// fine-tuning epochs, beta 0.1 -> 0.4 and alpha 1 -> 4.
    pub fn desk() -> Self {
        Self {
            population: 200,
            generations: 10,
            initial_epochs: 50,
            finetune_epochs: 30,
            alpha: 1.0,
            alpha_annealed: 4.0,
            beta: BetaSchedule::constant(0.1, 50),
            beta_annealed: 0.4,
            evo: EvoConfig::default(),
            use_property_head: true,
            finetune: true,
            subset: SubsetRule::Ranked,
            dims: ModelDims::desk(),
            initial_training: TrainConfig::initial(),
            finetune_training: TrainConfig::fine_tune(),
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.population < 2 {
            return Err(invalid!("population size must be at least 2"));
        }
        if self.generations < 1 {
            return Err(invalid!("at least one generation is required"));
        }
        for (name, w) in [
            ("alpha", self.alpha),
            ("alpha_annealed", self.alpha_annealed),
            ("beta_annealed", self.beta_annealed),
        ] {
            if !(w.is_finite() && w >= 0.0) {
                return Err(invalid!("{name} must be a non-negative number"));
            }
        }
        self.beta.validate()?;
        self.evo.validate()?;
        if self.dims.vocab != toy::VOCAB || self.dims.props != 3 {
            return Err(invalid!(
                "model must use the toy vocabulary ({}) and three properties",
                toy::VOCAB
            ));
        }
        Ok(())
    }

    fn initial_alpha(&self) -> f64 {
        if self.use_property_head {
            self.alpha
        } else {
            0.0
        }
    }

    fn later_alpha(&self) -> f64 {
        if self.use_property_head {
            self.alpha_annealed
        } else {
            0.0
        }
    }
}

/// Reference point for per-generation hypervolume: the worst canonical
/// objective vector the toy domain can produce, plus 0.1 per axis.
pub fn domain_reference() -> [f64; 3] {
    // -q < 0; s <= 7 + 0.1 * MAX_LEN; lp <= 5
    [0.1, 7.0 + 0.1 * toy::MAX_LEN as f64 + 0.1, 5.1]
}

/// Rank-1 hypervolume of a population against [`domain_reference`].
pub fn front_hypervolume(pop: &Population) -> Result<f64> {
    let front: Vec<&[f64]> = pop.first_front()?.iter().map(|c| c.objectives.values()).collect();
    hypervolume(&front, &domain_reference())
}

/// Distinct members outside the training corpus that pass the toy
/// high-quality filter.
pub fn novel_high_quality(pop: &Population, train: &BTreeSet<TokenSeq>) -> usize {
    pop.members
        .iter()
        .filter(|c| c.raw.is_high_quality() && !train.contains(&c.phenotype))
        .map(|c| &c.phenotype)
        .collect::<BTreeSet<_>>()
        .len()
}

/// Initial population from the corpus.
pub fn initial_subset<R: Rng + ?Sized>(
    train: &[Candidate],
    m: usize,
    rule: SubsetRule,
    rng: &mut R,
) -> Result<Population> {
    if train.is_empty() {
        return Err(invalid!("training set is empty"));
    }
    if train.len() <= m {
        return Ok(Population {
            members: train.to_vec(),
            generation: 0,
        });
    }
    let chosen: Vec<usize> = match rule {
        SubsetRule::Ranked => {
            let objs: Vec<&[f64]> = train.iter().map(|c| c.objectives.values()).collect();
            let mut order = nondominated_sort(&objs)?.crowded_order();
            order.truncate(m);
            order
        }
        SubsetRule::Random => {
            let mut idx: Vec<usize> = (0..train.len()).collect();
            idx.shuffle(rng);
            idx.truncate(m);
            idx.sort_unstable();
            idx
        }
    };
    Ok(Population {
        members: chosen.into_iter().map(|i| train[i].clone()).collect(),
        generation: 0,
    })
}

/// Offspring of one generation.
#[derive(Debug, Clone)]
pub struct Brood {
    /// Every decoded phenotype, valid or not, in child order.
    pub decoded: Vec<TokenSeq>,
    /// The valid ones, scored.
    pub offspring: Vec<Candidate>,
}

fn encode_members(pop: &mut Population, model: &SequenceVae) -> Result<()> {
    let posteriors = model.encode(&pop.phenotypes())?;
    for (c, post) in pop.members.iter_mut().zip(posteriors) {
        c.genotype = post.mean;
    }
    Ok(())
}

/// Encode, rank, select `M` parents, recombine, mutate, decode by
/// sampling and score the valid children.
///
/// Members' genotypes are refreshed with the current encoder means.
pub fn breed(pop: &mut Population, model: &SequenceVae, cfg: &DelConfig, generation: usize) -> Result<Brood> {
    if pop.is_empty() {
        return Err(invalid!("cannot breed from an empty population"));
    }
    if model.dims().vocab != toy::VOCAB {
        return Err(Error::DimensionMismatch {
            expected: toy::VOCAB,
            actual: model.dims().vocab,
        });
    }
    encode_members(pop, model)?;
    let fa = pop.fronts()?;
    let keys: Vec<_> = (0..pop.len()).map(|i| fa.key(i)).collect();

    let g = generation as u64;
    let parents = evo::tournament_select(&keys, cfg.population, &cfg.evo, &mut stream(cfg.seed, Purpose::Select, g))?;
    let parent_codes: Vec<&[f64]> = parents.iter().map(|&i| pop.members[i].genotype.as_slice()).collect();
    let children = evo::offspring(
        &parent_codes,
        &cfg.evo,
        &mut stream(cfg.seed, Purpose::Crossover, g),
        &mut stream(cfg.seed, Purpose::Mutate, g),
    )?;

    let mut decode_rng = stream(cfg.seed, Purpose::Decode, g);
    let mut decoded = Vec::with_capacity(children.len());
    let mut offspring = Vec::new();
    for z in children {
        let seq = model.decode(&z, &mut decode_rng, false)?;
        if let Ok(raw) = toy::properties(&seq) {
            offspring.push(Candidate::new(seq.clone(), z, raw, generation));
        }
        decoded.push(seq);
    }
    Ok(Brood { decoded, offspring })
}

/// Elitist truncation of `offspring + prev` to the best `m` by rank, then
/// crowding within the rank, then pool index. Offspring come first in the
/// pool, so an exact tie at the cut goes to the newcomer.
pub fn merge(prev: &Population, offspring: &[Candidate], m: usize, generation: usize) -> Result<Population> {
    let pool: Vec<&Candidate> = offspring.iter().chain(&prev.members).collect();
    if pool.is_empty() {
        return Ok(Population {
            members: Vec::new(),
            generation,
        });
    }
    let objs: Vec<&[f64]> = pool.iter().map(|c| c.objectives.values()).collect();
    let mut order = nondominated_sort(&objs)?.crowded_order();
    order.truncate(m);
    Ok(Population {
        members: order.into_iter().map(|i| pool[i].clone()).collect(),
        generation,
    })
}

/// What happened in one generation.
#[derive(Debug, Clone)]
pub struct GenerationReport {
    pub generation: usize,
    /// Population metrics: validity over this generation's decodes,
    /// novelty and diversity over the merged population.
    pub metrics: QualityMetrics,
    pub decoded: usize,
    pub offspring: usize,
    pub front_size: usize,
    pub front_hypervolume: f64,
    pub novel_high_quality: usize,
    /// Per-epoch losses of the model update made in this generation
    /// (initial training for generation 0, fine-tuning afterwards).
    pub training: Vec<LossBreakdown>,
}

impl GenerationReport {
    pub fn last_loss(&self) -> Option<LossBreakdown> {
        self.training.last().copied()
    }
}

/// Loop state.
#[derive(Debug, Clone)]
pub struct Del {
    cfg: DelConfig,
    train_set: BTreeSet<TokenSeq>,
    model: SequenceVae,
    population: Population,
    generation: usize,
}

impl Del {
    /// Generation 0: fit a fresh model on the whole corpus and draw the
    /// initial population.
    pub fn initialize(cfg: DelConfig, corpus: &Corpus) -> Result<(Self, GenerationReport)> {
        cfg.validate()?;
        let model = SequenceVae::new(cfg.dims, &mut stream(cfg.seed, Purpose::Init, 0))?;
        Self::initialize_with_model(cfg, corpus, model)
    }

    /// Like [`Del::initialize`] but starting from the given model.
    pub fn initialize_with_model(cfg: DelConfig, corpus: &Corpus, mut model: SequenceVae) -> Result<(Self, GenerationReport)> {
        cfg.validate()?;
        if *model.dims() != cfg.dims {
            return Err(invalid!("model dimensions differ from the configuration"));
        }
        let train: Vec<Candidate> = corpus
            .train
            .iter()
            .map(|s| Candidate::evaluate(s.clone(), Vec::new(), 0))
            .collect::<Result<_>>()?;
        let seqs: Vec<TokenSeq> = train.iter().map(|c| c.phenotype.clone()).collect();
        let props: Vec<Vec<f64>> = train.iter().map(|c| c.raw.as_array().to_vec()).collect();
        let mut beta = cfg.beta;
        beta.total = beta.total.max(1);
        let training = dgm::train(
            &mut model,
            &seqs,
            &props,
            cfg.initial_epochs,
            cfg.initial_alpha(),
            &beta,
            &cfg.initial_training,
            &mut stream(cfg.seed, Purpose::Train, 0),
        )?;

        let mut population = initial_subset(&train, cfg.population, cfg.subset, &mut stream(cfg.seed, Purpose::Subset, 0))?;
        encode_members(&mut population, &model)?;
        let train_set: BTreeSet<TokenSeq> = seqs.into_iter().collect();

        let del = Self {
            cfg,
            train_set,
            model,
            population,
            generation: 0,
        };
        let report = del.report(&del.population.phenotypes(), 0, training)?;
        Ok((del, report))
    }

    pub fn config(&self) -> &DelConfig {
        &self.cfg
    }

    pub fn model(&self) -> &SequenceVae {
        &self.model
    }

    pub fn population(&self) -> &Population {
        &self.population
    }

    pub fn generation(&self) -> usize {
        self.generation
    }

    pub fn train_set(&self) -> &BTreeSet<TokenSeq> {
        &self.train_set
    }

    pub fn is_done(&self) -> bool {
        self.generation >= self.cfg.generations
    }

    /// Breed, merge and (optionally) fine-tune on the merged population.
    pub fn step(&mut self) -> Result<GenerationReport> {
        let g = self.generation + 1;
        let brood = breed(&mut self.population, &self.model, &self.cfg, g)?;
        let offspring = brood.offspring.len();
        self.population = merge(&self.population, &brood.offspring, self.cfg.population, g)?;
        self.generation = g;

        let training = if self.cfg.finetune {
            let seqs = self.population.phenotypes();
            let props: Vec<Vec<f64>> = self.population.members.iter().map(|c| c.raw.as_array().to_vec()).collect();
            let beta = BetaSchedule::constant(self.cfg.beta_annealed, self.cfg.finetune_epochs);
            dgm::train(
                &mut self.model,
                &seqs,
                &props,
                self.cfg.finetune_epochs,
                self.cfg.later_alpha(),
                &beta,
                &self.cfg.finetune_training,
                &mut stream(self.cfg.seed, Purpose::FineTune, g as u64),
            )?
        } else {
            Vec::new()
        };
        self.report(&brood.decoded, offspring, training)
    }

    fn report(&self, decoded: &[TokenSeq], offspring: usize, training: Vec<LossBreakdown>) -> Result<GenerationReport> {
        let pop_metrics = toy::population_metrics(&self.population.phenotypes(), &self.train_set)?;
        let validity_fragments = if decoded.is_empty() {
            0.0
        } else {
            toy::population_metrics(decoded, &self.train_set)?.validity_fragments
        };
        Ok(GenerationReport {
            generation: self.generation,
            metrics: QualityMetrics {
                validity_fragments,
                ..pop_metrics
            },
            decoded: decoded.len(),
            offspring,
            front_size: self.population.first_front()?.len(),
            front_hypervolume: front_hypervolume(&self.population)?,
            novel_high_quality: novel_high_quality(&self.population, &self.train_set),
            training,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn cand(obj: [f64; 2], tag: usize) -> Candidate {
        // objectives overridden directly; raw properties are irrelevant here
        let mut c = Candidate::evaluate(vec![1, 2], vec![tag as f64], 0).unwrap();
        c.objectives = ObjectiveVector::new(obj.to_vec()).unwrap();
        c
    }

    #[test]
    fn subset_of_exact_size_is_everything() {
        let train: Vec<Candidate> = (0..4).map(|i| cand([i as f64, -(i as f64)], i)).collect();
        let mut rng = stream(0, Purpose::Subset, 0);
        let p = initial_subset(&train, 4, SubsetRule::Ranked, &mut rng).unwrap();
        assert_eq!(p.members, train);
        assert!(initial_subset(&[], 4, SubsetRule::Ranked, &mut rng).is_err());
    }

    #[test]
    fn subset_drops_dominated_member() {
        let train = vec![cand([1.0, 4.0], 0), cand([2.0, 2.0], 1), cand([5.0, 5.0], 2), cand([4.0, 1.0], 3)];
        let mut rng = stream(0, Purpose::Subset, 0);
        let p = initial_subset(&train, 3, SubsetRule::Ranked, &mut rng).unwrap();
        let tags: Vec<f64> = p.members.iter().map(|c| c.genotype[0]).collect();
        assert_eq!(tags, vec![0.0, 3.0, 1.0]);
        let again = initial_subset(&train, 3, SubsetRule::Ranked, &mut rng).unwrap();
        assert_eq!(p, again);
    }

    #[test]
    fn merge_keeps_everything_when_small() {
        let prev = Population {
            members: vec![cand([1.0, 1.0], 0)],
            generation: 0,
        };
        let m = merge(&prev, &[cand([0.0, 2.0], 1)], 5, 1).unwrap();
        assert_eq!(m.len(), 2);
        assert_eq!(m.generation, 1);
    }

    #[test]
    fn merge_truncates_by_rank_then_crowding() {
        let pts = [[1.0, 4.0], [2.0, 2.0], [4.0, 1.0], [3.0, 3.0], [5.0, 5.0], [0.0, 6.0]];
        let prev = Population {
            members: pts[..3].iter().enumerate().map(|(i, p)| cand(*p, i)).collect(),
            generation: 0,
        };
        let kids: Vec<Candidate> = pts[3..].iter().enumerate().map(|(i, p)| cand(*p, i + 3)).collect();
        let m = merge(&prev, &kids, 3, 1).unwrap();
        let mut kept: Vec<Vec<f64>> = m.members.iter().map(|c| c.objectives.to_vec()).collect();
        kept.sort_by(|a, b| a[0].total_cmp(&b[0]));
        assert_eq!(kept, vec![vec![0.0, 6.0], vec![2.0, 2.0], vec![4.0, 1.0]]);
    }

    #[test]
    fn merge_with_no_offspring_truncates_previous() {
        let prev = Population {
            members: vec![cand([1.0, 1.0], 0), cand([2.0, 2.0], 1), cand([0.5, 3.0], 2)],
            generation: 2,
        };
        let m = merge(&prev, &[], 2, 3).unwrap();
        let tags: Vec<f64> = m.members.iter().map(|c| c.genotype[0]).collect();
        assert_eq!(tags, vec![0.0, 2.0]);
    }

    #[test]
    fn domain_reference_bounds_every_sequence() {
        let r = domain_reference();
        for seq in toy::enumerate_valid(2, 4) {
            let o = toy::properties(&seq).unwrap().canonical();
            assert!(o.iter().zip(&r).all(|(a, b)| a < b));
        }
        // the worst possible s and lp
        let worst = toy::properties(&[6, 6, 6, 6, 6, 6, 6, 6, 6, 6]).unwrap();
        assert!(worst.s < r[1]);
        let polar = toy::properties(&[10; 10]).unwrap();
        assert!(polar.lp < r[2]);
    }

    #[test]
    fn config_validation() {
        assert!(DelConfig::desk().validate().is_ok());
        let mut c = DelConfig::desk();
        c.population = 1;
        assert!(c.validate().is_err());
        let mut c = DelConfig::desk();
        c.generations = 0;
        assert!(c.validate().is_err());
    }
}
