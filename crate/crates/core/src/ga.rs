//! Genetic algorithm over curve-parameter genomes: tournament selection,
//! two-point and three-parent crossover, a mutation operator that redraws
//! primes and generator points, and elitism with per-generation statistics.

use std::io;
use std::path::Path;

use num_bigint::BigUint;
use num_traits::CheckedSub;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ecmath::{find_generator_point, generate_curve, get_prime_for_p, CurveParams, ECPoint, ScanLimits};
use crate::fitness::{evaluate_pending, Candidate, ProbeConfig};
use crate::rng::{fork_stream, ForgeRng};
use crate::stats::{population_stats, GenerationStats};

/// Run constants; the defaults are the tuned values both optimizers are
/// compared under.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaConfig {
    pub pop_size: usize,
    /// Two-point crossover probability per consecutive pair.
    pub cxpb: f64,
    /// Mutation probability per offspring (the sweep gate).
    pub mutpb: f64,
    pub ngen: u32,
    /// Three-parent crossover probability per consecutive triple.
    pub multiparent_cxpb: f64,
    pub elitism_rate: f64,
    /// Per-gene mutation chance inside an opened sweep.
    pub indpb: f64,
    pub tournament_size: usize,
    /// Prime size for fresh primes, in bits.
    pub bits: u32,
    pub seed: u64,
    pub limits: ScanLimits,
}

impl Default for GaConfig {
    fn default() -> Self {
        GaConfig {
            pop_size: 500,
            cxpb: 0.5,
            mutpb: 0.2,
            ngen: 40,
            multiparent_cxpb: 0.1,
            elitism_rate: 0.1,
            indpb: 0.2,
            tournament_size: 3,
            bits: 256,
            seed: 0,
            limits: ScanLimits::default(),
        }
    }
}

/// One genome slot: positions 0..6 are `[a, b, p, G, n, h]`.
#[derive(Debug, Clone, PartialEq)]
pub enum Gene {
    Scalar(BigUint),
    Point(ECPoint),
}

pub const GENOME_LEN: usize = 6;

/// Reads genome position `i`.
pub fn gene_at(params: &CurveParams, i: usize) -> Gene {
    match i {
        0 => Gene::Scalar(params.a.clone()),
        1 => Gene::Scalar(params.b.clone()),
        2 => Gene::Scalar(params.p.clone()),
        3 => Gene::Point(params.g.clone()),
        4 => Gene::Scalar(params.n.clone()),
        5 => Gene::Scalar(params.h.clone()),
        _ => panic!("genome index {i} out of range"),
    }
}

/// Writes genome position `i`. Scalar genes only accept scalars and the
/// point gene only accepts points.
pub fn set_gene_at(params: &mut CurveParams, i: usize, gene: Gene) {
    match (i, gene) {
        (0, Gene::Scalar(v)) => params.a = v,
        (1, Gene::Scalar(v)) => params.b = v,
        (2, Gene::Scalar(v)) => params.p = v,
        (3, Gene::Point(g)) => params.g = g,
        (4, Gene::Scalar(v)) => params.n = v,
        (5, Gene::Scalar(v)) => params.h = v,
        (i, _) => panic!("gene kind mismatch at index {i}"),
    }
}

fn swap_gene(a: &mut CurveParams, b: &mut CurveParams, i: usize) {
    match i {
        0 => std::mem::swap(&mut a.a, &mut b.a),
        1 => std::mem::swap(&mut a.b, &mut b.b),
        2 => std::mem::swap(&mut a.p, &mut b.p),
        3 => std::mem::swap(&mut a.g, &mut b.g),
        4 => std::mem::swap(&mut a.n, &mut b.n),
        5 => std::mem::swap(&mut a.h, &mut b.h),
        _ => panic!("genome index {i} out of range"),
    }
}

/// Builds the starting population: every individual is a freshly generated
/// curve with the `n = p - 1`, `h = 1` convention. Individuals are produced
/// on forked streams so initialization parallelizes deterministically.
pub fn init_population(cfg: &GaConfig, rng: &mut ForgeRng) -> Vec<Candidate> {
    let base: u64 = rng.gen();
    let limits = cfg.limits.clone();
    let bits = cfg.bits;
    (0..cfg.pop_size)
        .into_par_iter()
        .map(|i| {
            let mut stream = fork_stream(base, 0, i as u64);
            Candidate::new(generate_curve(bits, &limits, &mut stream))
        })
        .collect()
}

fn add_signed(value: &BigUint, delta: i64) -> BigUint {
    if delta >= 0 {
        value + BigUint::from(delta as u64)
    } else {
        value
            .checked_sub(&BigUint::from(delta.unsigned_abs()))
            .unwrap_or_default()
    }
}

/// Mutation operator.
///
/// With probability `mutation_rate` the genome is swept; each gene then
/// mutates with probability `indpb`: the prime slot redraws a fresh prime,
/// the point slot re-derives a generator for the genome's current
/// `(a, b, p)`, and every other slot takes rounded Gaussian noise floored at
/// zero. The noise deviation is 10 when `mutation_rate > 0.5`, else 2.
/// Returns whether the sweep gate opened (the caller invalidates cached
/// fitness on `true`).
pub fn custom_mutation(
    genome: &mut CurveParams,
    indpb: f64,
    mutation_rate: f64,
    bits: u32,
    limits: &ScanLimits,
    rng: &mut ForgeRng,
) -> bool {
    let degree: f64 = if mutation_rate > 0.5 { 10.0 } else { 2.0 };
    if rng.gen::<f64>() >= mutation_rate {
        return false;
    }
    let noise = Normal::new(0.0, degree).expect("positive deviation");
    for i in 0..GENOME_LEN {
        if rng.gen::<f64>() >= indpb {
            continue;
        }
        match i {
            2 => genome.p = get_prime_for_p(bits, rng),
            3 => {
                // A failed search keeps the previous point; the fitness
                // function scores any inconsistency as zero.
                if let Ok(g) = find_generator_point(&genome.a, &genome.b, &genome.p, limits) {
                    genome.g = g;
                }
            }
            _ => {
                let delta = noise.sample(rng).round() as i64;
                let mutated = match i {
                    0 => add_signed(&genome.a, delta),
                    1 => add_signed(&genome.b, delta),
                    4 => add_signed(&genome.n, delta),
                    5 => add_signed(&genome.h, delta),
                    _ => unreachable!(),
                };
                set_gene_at(genome, i, Gene::Scalar(mutated));
            }
        }
    }
    true
}

/// Two-point crossover at forced cut points `1 <= c1 < c2 <= 5`: the two
/// genomes swap the segment `[c1, c2)`.
pub fn two_point_crossover_at(a: &mut CurveParams, b: &mut CurveParams, c1: usize, c2: usize) {
    assert!(1 <= c1 && c1 < c2 && c2 <= 5, "invalid cut points {c1},{c2}");
    for i in c1..c2 {
        swap_gene(a, b, i);
    }
}

/// Two-point crossover with random cut points.
pub fn two_point_crossover(a: &mut CurveParams, b: &mut CurveParams, rng: &mut ForgeRng) {
    let c1 = rng.gen_range(1..5);
    let c2 = rng.gen_range(c1 + 1..6);
    two_point_crossover_at(a, b, c1, c2);
}

/// Three-parent crossover at forced cuts: child `k` takes `[0, c1)` from
/// parent `k`, `[c1, c2)` from parent `k+1`, and `[c2, 6)` from parent `k+2`
/// (indices cyclic).
pub fn three_parent_crossover_at(
    p1: &CurveParams,
    p2: &CurveParams,
    p3: &CurveParams,
    c1: usize,
    c2: usize,
) -> (CurveParams, CurveParams, CurveParams) {
    assert!(1 <= c1 && c1 < c2 && c2 <= 5, "invalid cut points {c1},{c2}");
    let parents = [p1, p2, p3];
    let mut children = [p1.clone(), p2.clone(), p3.clone()];
    for (k, child) in children.iter_mut().enumerate() {
        for i in c1..c2 {
            set_gene_at(child, i, gene_at(parents[(k + 1) % 3], i));
        }
        for i in c2..GENOME_LEN {
            set_gene_at(child, i, gene_at(parents[(k + 2) % 3], i));
        }
    }
    let [c1_, c2_, c3_] = children;
    (c1_, c2_, c3_)
}

/// Three-parent crossover with random cut points.
pub fn three_parent_crossover(
    p1: &CurveParams,
    p2: &CurveParams,
    p3: &CurveParams,
    rng: &mut ForgeRng,
) -> (CurveParams, CurveParams, CurveParams) {
    let c1 = rng.gen_range(1..5);
    let c2 = rng.gen_range(c1 + 1..6);
    three_parent_crossover_at(p1, p2, p3, c1, c2)
}

fn tournament_select(
    population: &[Candidate],
    count: usize,
    tournament_size: usize,
    rng: &mut ForgeRng,
) -> Vec<Candidate> {
    let mut selected = Vec::with_capacity(count);
    for _ in 0..count {
        let mut best: Option<&Candidate> = None;
        for _ in 0..tournament_size {
            let contender = &population[rng.gen_range(0..population.len())];
            if best.is_none_or(|b| contender.fitness() > b.fitness()) {
                best = Some(contender);
            }
        }
        selected.push(best.expect("tournament size >= 1").clone());
    }
    selected
}

fn sort_desc_by_fitness(candidates: &mut [Candidate]) {
    candidates.sort_by(|a, b| {
        b.fitness()
            .partial_cmp(&a.fitness())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
}

/// Everything a finished run exposes: the best candidate ever seen, the
/// per-generation statistics (index 0 is the initial population), and the
/// final population with cached reports.
#[derive(Debug, Clone)]
pub struct GaRunResult {
    pub best: Candidate,
    pub history: Vec<GenerationStats>,
    pub final_population: Vec<Candidate>,
}

/// The generational loop.
///
/// Each generation clones elites, tournament-selects offspring, applies
/// three-parent crossover to consecutive triples and two-point crossover to
/// consecutive pairs, mutates every offspring, re-evaluates candidates whose
/// cache was invalidated, appends the elites, and truncates back to
/// `pop_size` keeping the fittest.
pub fn run_ga(cfg: &GaConfig, probe: &ProbeConfig, rng: &mut ForgeRng) -> GaRunResult {
    assert!(cfg.pop_size >= 3, "population must hold at least one crossover triple");
    let mut population = init_population(cfg, rng);
    let eval_seed: u64 = rng.gen();
    evaluate_pending(&mut population, probe, eval_seed, 0);
    let elitism_number = (cfg.pop_size as f64 * cfg.elitism_rate).round() as usize;
    assert!(
        elitism_number < cfg.pop_size,
        "elitism must leave room for offspring"
    );

    let mut history = vec![population_stats(0, &population)];
    let mut best = history[0].best.clone();

    for generation in 1..=cfg.ngen {
        let elites = {
            let mut ranked = population.clone();
            sort_desc_by_fitness(&mut ranked);
            ranked.truncate(elitism_number);
            ranked
        };
        let mut offspring =
            tournament_select(&population, cfg.pop_size, cfg.tournament_size, rng);

        let mut i = 0;
        while i + 3 <= offspring.len() {
            if rng.gen::<f64>() < cfg.multiparent_cxpb {
                let (a, b, c) = three_parent_crossover(
                    &offspring[i].params,
                    &offspring[i + 1].params,
                    &offspring[i + 2].params,
                    rng,
                );
                offspring[i] = Candidate::new(a);
                offspring[i + 1] = Candidate::new(b);
                offspring[i + 2] = Candidate::new(c);
            }
            i += 3;
        }

        let mut i = 0;
        while i + 2 <= offspring.len() {
            if rng.gen::<f64>() < cfg.cxpb {
                let (left, right) = offspring.split_at_mut(i + 1);
                two_point_crossover(&mut left[i].params, &mut right[0].params, rng);
                offspring[i].report = None;
                offspring[i + 1].report = None;
            }
            i += 2;
        }

        for candidate in offspring.iter_mut() {
            if custom_mutation(
                &mut candidate.params,
                cfg.indpb,
                cfg.mutpb,
                cfg.bits,
                &cfg.limits,
                rng,
            ) {
                candidate.report = None;
            }
        }

        evaluate_pending(&mut offspring, probe, eval_seed, generation as u64);

        offspring.extend(elites);
        assert_eq!(
            offspring.len(),
            cfg.pop_size + elitism_number,
            "population must grow by exactly the elite count before truncation"
        );
        sort_desc_by_fitness(&mut offspring);
        offspring.truncate(cfg.pop_size);
        population = offspring;

        let stats = population_stats(generation, &population);
        if stats.best.fitness() > best.fitness() {
            best = stats.best.clone();
        }
        history.push(stats);
    }

    GaRunResult {
        best,
        history,
        final_population: population,
    }
}

/// Writes the parameter file consumed by the messaging simulation. Refuses
/// genomes whose generator degenerated to infinity.
pub fn write_params_file(best: &Candidate, path: &Path) -> io::Result<()> {
    let text = crate::simnet::params_to_text(&best.params).map_err(io::Error::other)?;
    std::fs::write(path, text)
}
