use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::Experiment;
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::models::{init_params, Family, Model, ParamVector};
use crate::pruning::{apply_mask, PruningMask, RemainingWeights};
use crate::training::evaluate;

/// Knobs of the mask search. Phase targets are percentages of the population
/// size, rounded up.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EaConfig {
    pub generations: usize,
    pub population: usize,
    /// Per-bit flip probability.
    pub mutation_rate: f64,
    /// Probability that a migrant keeps each weight.
    pub migrant_keep_prob: f64,
    pub survivor_percent: usize,
    pub crossover_percent: usize,
    pub mutation_percent: usize,
}

impl Default for EaConfig {
    fn default() -> Self {
        Self {
            generations: 20,
            population: 30,
            mutation_rate: 0.05,
            migrant_keep_prob: 0.5,
            survivor_percent: 33,
            crossover_percent: 66,
            mutation_percent: 95,
        }
    }
}

impl EaConfig {
    pub fn validate(&self) -> Result<()> {
        if self.population < 6 {
            return Err(Error::Config(format!("population {} below 6", self.population)));
        }
        if self.generations == 0 {
            return Err(Error::Config("at least one generation".into()));
        }
        for (name, p) in [("mutation rate", self.mutation_rate), ("migrant keep probability", self.migrant_keep_prob)] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::Config(format!("{name} {p} outside [0, 1]")));
            }
        }
        let pcts = [self.survivor_percent, self.crossover_percent, self.mutation_percent, 100];
        if pcts[0] == 0 || pcts.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::Config(format!("phase percentages {pcts:?} must be positive and non-decreasing")));
        }
        Ok(())
    }
}

/// Population sizes after selection, crossover, mutation and migration.
pub fn phase_targets(config: &EaConfig) -> [usize; 4] {
    let n = config.population;
    let ceil_pct = |pct: usize| (pct * n).div_ceil(100);
    [
        ceil_pct(config.survivor_percent),
        ceil_pct(config.crossover_percent),
        ceil_pct(config.mutation_percent),
        n,
    ]
}

/// A candidate mask over the shared frozen weights.
#[derive(Debug, Clone, PartialEq)]
pub struct Individual {
    pub mask: PruningMask,
    pub fitness: Option<f64>,
}

impl Individual {
    pub fn new(mask: PruningMask) -> Self {
        Self { mask, fitness: None }
    }
}

/// Uniform crossover: each bit from either parent with probability 1/2.
pub fn crossover<R: Rng + ?Sized>(a: &PruningMask, b: &PruningMask, rng: &mut R) -> Result<PruningMask> {
    if a.len() != b.len() {
        return Err(Error::Contract(format!("crossing masks of length {} and {}", a.len(), b.len())));
    }
    let bits = a
        .bits()
        .iter()
        .zip(b.bits())
        .map(|(&x, &y)| if rng.gen_bool(0.5) { x } else { y })
        .collect();
    Ok(PruningMask::from_bits(bits))
}

/// Flips each bit independently with probability `rate`.
pub fn mutate<R: Rng + ?Sized>(mask: &PruningMask, rate: f64, rng: &mut R) -> Result<PruningMask> {
    if !(0.0..=1.0).contains(&rate) {
        return Err(Error::Contract(format!("mutation rate {rate} outside [0, 1]")));
    }
    let mut out = mask.clone();
    for i in 0..out.len() {
        if rng.gen_bool(rate) {
            out.set(i, !mask.is_kept(i));
        }
    }
    Ok(out)
}

/// A fresh random individual; each weight kept with probability `keep_prob`.
pub fn migrate<R: Rng + ?Sized>(prunable_count: usize, keep_prob: f64, rng: &mut R) -> Result<Individual> {
    if !(0.0..=1.0).contains(&keep_prob) {
        return Err(Error::Contract(format!("keep probability {keep_prob} outside [0, 1]")));
    }
    let bits = (0..prunable_count).map(|_| rng.gen_bool(keep_prob)).collect();
    Ok(Individual::new(PruningMask::from_bits(bits)))
}

/// Best individual after one measurement of the population.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationRecord {
    pub dataset: String,
    pub family: Family,
    pub seed: u64,
    /// 0 is the initial population; `generations` is the final measurement.
    pub generation: usize,
    pub best_fitness: f64,
    pub mean_fitness: f64,
    pub best_remaining: RemainingWeights,
    pub best_mask: PruningMask,
}

/// Evolutionary mask search on untrained weights. Fitness is training-split
/// accuracy of the masked model. Returns `generations + 1` records per seed.
pub fn run_ea(exp: &Experiment, seeds: &[u64], config: &EaConfig) -> Result<Vec<GenerationRecord>> {
    exp.validate()?;
    config.validate()?;
    if seeds.is_empty() {
        return Err(Error::Contract("no seeds given".into()));
    }
    let per_seed: Vec<Vec<GenerationRecord>> = seeds
        .par_iter()
        .map(|&seed| ea_seed(exp, seed, config))
        .collect::<Result<_>>()?;
    Ok(per_seed.into_iter().flatten().collect())
}

struct Fitness<'a> {
    model: Model,
    base: ParamVector,
    train: &'a Dataset,
}

impl Fitness<'_> {
    fn measure(&self, mask: &PruningMask) -> Result<f64> {
        let mut params = self.base.clone();
        apply_mask(&mut params, mask)?;
        evaluate(&self.model, &params, self.train)
    }

    fn fill(&self, population: &mut [Individual]) -> Result<()> {
        for ind in population.iter_mut().filter(|i| i.fitness.is_none()) {
            ind.fitness = Some(self.measure(&ind.mask)?);
        }
        Ok(())
    }
}

fn ea_seed(exp: &Experiment, seed: u64, config: &EaConfig) -> Result<Vec<GenerationRecord>> {
    let spec = exp.spec_for(seed);
    let data = exp.data_for(seed)?;
    let fitness = Fitness {
        base: init_params(&spec)?,
        model: Model::new(spec.clone())?,
        train: &data.train,
    };
    let n_weights = spec.prunable_count();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(4);

    let full = PruningMask::full(n_weights);
    let mut population = (0..config.population)
        .map(|_| mutate(&full, config.mutation_rate, &mut rng).map(Individual::new))
        .collect::<Result<Vec<_>>>()?;

    let [n_keep, n_cross, n_mut, n_all] = phase_targets(config);
    let mut records = Vec::with_capacity(config.generations + 1);
    for generation in 0..=config.generations {
        fitness.fill(&mut population)?;
        rank(&mut population);
        records.push(record(exp, &spec.family, seed, generation, &population));
        if generation == config.generations {
            break;
        }

        population.truncate(n_keep);
        while population.len() < n_cross {
            let a = rng.gen_range(0..n_keep);
            let b = rng.gen_range(0..n_keep);
            let child = crossover(&population[a].mask, &population[b].mask, &mut rng)?;
            population.push(Individual::new(child));
        }
        while population.len() < n_mut {
            let p = rng.gen_range(0..n_keep);
            let child = mutate(&population[p].mask, config.mutation_rate, &mut rng)?;
            population.push(Individual::new(child));
        }
        while population.len() < n_all {
            population.push(migrate(n_weights, config.migrant_keep_prob, &mut rng)?);
        }
        debug_assert_eq!(population.len(), config.population);
    }
    Ok(records)
}

/// Best first: higher fitness, then fewer kept weights, then older.
fn rank(population: &mut [Individual]) {
    population.sort_by(|a, b| {
        b.fitness
            .unwrap()
            .total_cmp(&a.fitness.unwrap())
            .then(a.mask.remaining().count.cmp(&b.mask.remaining().count))
    });
}

fn record(exp: &Experiment, family: &Family, seed: u64, generation: usize, sorted: &[Individual]) -> GenerationRecord {
    let best = &sorted[0];
    let mean = sorted.iter().map(|i| i.fitness.unwrap()).sum::<f64>() / sorted.len() as f64;
    GenerationRecord {
        dataset: exp.dataset.name().to_owned(),
        family: *family,
        seed,
        generation,
        best_fitness: best.fitness.unwrap(),
        mean_fitness: mean,
        best_remaining: best.mask.remaining(),
        best_mask: best.mask.clone(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    #[test]
    fn phase_sizes_for_thirty() {
        assert_eq!(phase_targets(&EaConfig::default()), [10, 20, 29, 30]);
        let hundred = EaConfig {
            population: 100,
            ..EaConfig::default()
        };
        assert_eq!(phase_targets(&hundred), [33, 66, 95, 100]);
        let six = EaConfig {
            population: 6,
            ..EaConfig::default()
        };
        assert_eq!(phase_targets(&six), [2, 4, 6, 6]);
    }

    #[test]
    fn crossover_cases() {
        let a: PruningMask = "1100101".parse().unwrap();
        assert_eq!(crossover(&a, &a, &mut rng(1)).unwrap(), a);
        assert!(crossover(&a, &PruningMask::full(3), &mut rng(1)).is_err());

        // complementary parents: child count ~ Binomial(n, 1/2), checked at 4 sigma
        let n = 2000;
        let ones = PruningMask::full(n);
        let zeros = PruningMask::empty(n);
        let child = crossover(&ones, &zeros, &mut rng(2)).unwrap();
        let k = child.remaining().count as f64;
        let sigma = (n as f64 * 0.25).sqrt();
        assert!((k - n as f64 / 2.0).abs() < 4.0 * sigma, "{k}");
    }

    #[test]
    fn crossover_golden_child() {
        let child = crossover(&PruningMask::full(24), &PruningMask::empty(24), &mut rng(42)).unwrap();
        assert_eq!(child.to_string(), "001011100100000101111101");
    }

    #[test]
    fn mutation_cases() {
        let m: PruningMask = "1011001".parse().unwrap();
        assert_eq!(mutate(&m, 0.0, &mut rng(0)).unwrap(), m);
        assert_eq!(mutate(&m, 1.0, &mut rng(0)).unwrap().to_string(), "0100110");
        assert!(mutate(&m, 1.5, &mut rng(0)).is_err());

        // flips ~ Binomial(n · trials, rate)
        let n = 100;
        let rate = 0.05;
        let mut r = rng(3);
        let full = PruningMask::full(n);
        let trials = 1000;
        let flips: usize = (0..trials)
            .map(|_| n - mutate(&full, rate, &mut r).unwrap().remaining().count)
            .sum();
        let total = (n * trials) as f64;
        let sigma = (total * rate * (1.0 - rate)).sqrt();
        assert!((flips as f64 - total * rate).abs() < 4.0 * sigma, "{flips}");
    }

    #[test]
    fn migration_cases() {
        let all = migrate(50, 1.0, &mut rng(0)).unwrap();
        assert_eq!(all.mask, PruningMask::full(50));
        assert_eq!(all.fitness, None);
        assert_eq!(migrate(50, 0.0, &mut rng(0)).unwrap().mask, PruningMask::empty(50));
        let n = 4000;
        let half = migrate(n, 0.5, &mut rng(5)).unwrap().mask.remaining().count as f64;
        assert!((half - 2000.0).abs() < 4.0 * (n as f64 * 0.25).sqrt());
    }

    #[test]
    fn ranking_prefers_accuracy_then_sparsity() {
        let ind = |bits: &str, f: f64| Individual {
            mask: bits.parse().unwrap(),
            fitness: Some(f),
        };
        let mut pop = vec![ind("111", 0.9), ind("110", 0.9), ind("100", 0.5), ind("011", 1.0), ind("010", 0.9)];
        rank(&mut pop);
        let order: Vec<String> = pop.iter().map(|i| i.mask.to_string()).collect();
        assert_eq!(order, ["011", "010", "110", "111", "100"]);
    }

    #[test]
    fn config_validation() {
        assert!(EaConfig::default().validate().is_ok());
        let small = EaConfig {
            population: 5,
            ..EaConfig::default()
        };
        assert!(small.validate().is_err());
        let bad = EaConfig {
            crossover_percent: 20,
            ..EaConfig::default()
        };
        assert!(bad.validate().is_err());
    }
}
