//! Particle swarm over the same curve-parameter genome: per-slot velocities,
//! linearly decaying inertia, cognitive/social pulls, position repair through
//! fresh primes and generator recomputation, and early stopping.

use num_bigint::{BigInt, BigUint};
use num_traits::{FromPrimitive, Signed, ToPrimitive};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ecmath::{find_generator_point, generate_curve, get_prime_for_p, CurveParams, ECPoint, ScanLimits};
use crate::fitness::{evaluate, Candidate, ProbeConfig};
use crate::rng::{fork_stream, ForgeRng};
use crate::stats::{population_stats, GenerationStats};

/// Swarm constants; defaults are the tuned comparison values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PsoConfig {
    pub swarm_size: usize,
    pub max_iterations: u32,
    /// Cognitive pull toward a particle's own best position.
    pub c1: f64,
    /// Social pull toward the swarm's best position.
    pub c2: f64,
    pub w_max: f64,
    pub w_min: f64,
    /// Stop after this many iterations without global-best improvement.
    pub stall_limit: u32,
    pub bits: u32,
    pub seed: u64,
    pub limits: ScanLimits,
}

impl Default for PsoConfig {
    fn default() -> Self {
        PsoConfig {
            swarm_size: 500,
            max_iterations: 40,
            c1: 1.0,
            c2: 2.5,
            w_max: 0.9,
            w_min: 0.4,
            stall_limit: 20,
            bits: 256,
            seed: 0,
            limits: ScanLimits::default(),
        }
    }
}

/// Six velocity slots mirroring the genome `[a, b, p, G, n, h]`; the point
/// slot is always a coordinate pair.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Velocity {
    pub a: f64,
    pub b: f64,
    pub p: f64,
    pub g: (f64, f64),
    pub n: f64,
    pub h: f64,
}

/// A particle: current position (with cached fitness), velocity, and its
/// best-seen position.
#[derive(Debug, Clone)]
pub struct ParticleState {
    pub position: Candidate,
    pub velocity: Velocity,
    pub best_position: Candidate,
    pub best_fitness: f64,
}

/// Inertia weight linearly decayed from `w_max` to `w_min` over the run.
pub fn inertia_weight(iteration: u32, max_iterations: u32, w_max: f64, w_min: f64) -> f64 {
    w_max - (w_max - w_min) * f64::from(iteration) / f64::from(max_iterations.max(1))
}

/// One slot of the velocity update: inertia plus cognitive and social pulls.
/// The absolute value applied to scalar slots is the caller's business.
#[allow(clippy::too_many_arguments)]
pub fn velocity_component(
    w: f64,
    v: f64,
    c1: f64,
    r1: f64,
    pbest: f64,
    x: f64,
    c2: f64,
    r2: f64,
    gbest: f64,
) -> f64 {
    w * v + c1 * r1 * (pbest - x) + c2 * r2 * (gbest - x)
}

fn scalar_f64(v: &BigUint) -> f64 {
    v.to_f64().unwrap_or(f64::MAX)
}

fn point_f64(p: &ECPoint) -> (f64, f64) {
    match p {
        ECPoint::Infinity => (0.0, 0.0),
        ECPoint::Affine { x, y } => (scalar_f64(x), scalar_f64(y)),
    }
}

/// Velocity update across all six slots with fresh `r1, r2` per slot. Scalar
/// slots take the absolute value of the result; the point slot combines
/// component-wise and keeps its sign.
#[allow(clippy::too_many_arguments)]
pub fn update_velocity(
    particle: &CurveParams,
    velocity: &Velocity,
    best_particle: &CurveParams,
    global_best: &CurveParams,
    iteration: u32,
    max_iterations: u32,
    cfg: &PsoConfig,
    rng: &mut ForgeRng,
) -> Velocity {
    let w = inertia_weight(iteration, max_iterations, cfg.w_max, cfg.w_min);
    let mut out = Velocity::default();
    for slot in 0..6 {
        let r1: f64 = rng.gen();
        let r2: f64 = rng.gen();
        if slot == 3 {
            let (px, py) = point_f64(&particle.g);
            let (bx, by) = point_f64(&best_particle.g);
            let (gx, gy) = point_f64(&global_best.g);
            out.g = (
                velocity_component(w, velocity.g.0, cfg.c1, r1, bx, px, cfg.c2, r2, gx),
                velocity_component(w, velocity.g.1, cfg.c1, r1, by, py, cfg.c2, r2, gy),
            );
        } else {
            let (x, pb, gb, v) = match slot {
                0 => (&particle.a, &best_particle.a, &global_best.a, velocity.a),
                1 => (&particle.b, &best_particle.b, &global_best.b, velocity.b),
                2 => (&particle.p, &best_particle.p, &global_best.p, velocity.p),
                4 => (&particle.n, &best_particle.n, &global_best.n, velocity.n),
                5 => (&particle.h, &best_particle.h, &global_best.h, velocity.h),
                _ => unreachable!(),
            };
            let nv = velocity_component(
                w,
                v,
                cfg.c1,
                r1,
                scalar_f64(pb),
                scalar_f64(x),
                cfg.c2,
                r2,
                scalar_f64(gb),
            )
            .abs();
            match slot {
                0 => out.a = nv,
                1 => out.b = nv,
                2 => out.p = nv,
                4 => out.n = nv,
                5 => out.h = nv,
                _ => unreachable!(),
            }
        }
    }
    out
}

fn abs_round_add(value: &BigUint, v: f64) -> BigUint {
    let shifted = (scalar_f64(value) + v).round();
    BigInt::from_f64(shifted)
        .map(|b| b.abs().to_biguint().expect("abs is non-negative"))
        .unwrap_or_else(|| value.clone())
}

const POSITION_REPAIR_ATTEMPTS: usize = 32;

/// Position update: every slot moves by `|round(x + v)|`, then the prime slot
/// is unconditionally resampled and the generator recomputed for the new
/// `(a, b, p)`. A failed generator search retries with another fresh prime.
pub fn update_position(
    particle: &CurveParams,
    velocity: &Velocity,
    bits: u32,
    limits: &ScanLimits,
    rng: &mut ForgeRng,
) -> CurveParams {
    let mut next = particle.clone();
    next.a = abs_round_add(&particle.a, velocity.a);
    next.b = abs_round_add(&particle.b, velocity.b);
    next.p = abs_round_add(&particle.p, velocity.p);
    next.g = match &particle.g {
        ECPoint::Infinity => ECPoint::Infinity,
        ECPoint::Affine { x, y } => ECPoint::affine(
            abs_round_add(x, velocity.g.0),
            abs_round_add(y, velocity.g.1),
        ),
    };
    next.n = abs_round_add(&particle.n, velocity.n);
    next.h = abs_round_add(&particle.h, velocity.h);

    for _ in 0..POSITION_REPAIR_ATTEMPTS {
        next.p = get_prime_for_p(bits, rng);
        if let Ok(g) = find_generator_point(&next.a, &next.b, &next.p, limits) {
            next.g = g;
            return next;
        }
    }
    // Pathological coefficients: keep the drifted point and let fitness
    // score the inconsistency as zero.
    next
}

/// A finished swarm run: global best, per-iteration statistics (index 0 is
/// the initial swarm), and the final swarm positions.
#[derive(Debug, Clone)]
pub struct PsoRunResult {
    pub best: Candidate,
    pub history: Vec<GenerationStats>,
    pub final_population: Vec<Candidate>,
}

/// Runs the swarm from freshly generated curves (the same construction the
/// genetic algorithm starts from) with zero initial velocities.
pub fn run_pso(cfg: &PsoConfig, probe: &ProbeConfig, rng: &mut ForgeRng) -> PsoRunResult {
    let base: u64 = rng.gen();
    let limits = cfg.limits.clone();
    let bits = cfg.bits;
    let swarm: Vec<CurveParams> = (0..cfg.swarm_size)
        .into_par_iter()
        .map(|i| {
            let mut stream = fork_stream(base, 0, i as u64);
            generate_curve(bits, &limits, &mut stream)
        })
        .collect();
    run_pso_with_swarm(cfg, probe, swarm, rng)
}

/// Runs the swarm from caller-supplied starting positions.
pub fn run_pso_with_swarm(
    cfg: &PsoConfig,
    probe: &ProbeConfig,
    swarm: Vec<CurveParams>,
    rng: &mut ForgeRng,
) -> PsoRunResult {
    assert!(!swarm.is_empty(), "swarm must not be empty");
    let eval_seed: u64 = rng.gen();

    let mut particles: Vec<ParticleState> = swarm
        .into_par_iter()
        .enumerate()
        .map(|(i, params)| {
            let mut stream = fork_stream(eval_seed, 0, i as u64);
            let report = evaluate(&params, probe, &mut stream);
            let fitness = report.fitness;
            let position = Candidate {
                params,
                report: Some(report),
            };
            ParticleState {
                best_position: position.clone(),
                best_fitness: fitness,
                position,
                velocity: Velocity::default(),
            }
        })
        .collect();

    let mut global_best = particles
        .iter()
        .max_by(|a, b| {
            a.best_fitness
                .partial_cmp(&b.best_fitness)
                .unwrap_or(std::cmp::Ordering::Equal)
        })
        .expect("nonempty swarm")
        .best_position
        .clone();

    let positions: Vec<Candidate> = particles.iter().map(|p| p.position.clone()).collect();
    let mut history = vec![population_stats(0, &positions)];
    let mut stall = 0u32;

    for iteration in 0..cfg.max_iterations {
        let gbest_params = global_best.params.clone();
        particles
            .par_iter_mut()
            .enumerate()
            .for_each(|(i, particle)| {
                let mut stream = fork_stream(eval_seed, u64::from(iteration) + 1, i as u64);
                let velocity = update_velocity(
                    &particle.position.params,
                    &particle.velocity,
                    &particle.best_position.params,
                    &gbest_params,
                    iteration,
                    cfg.max_iterations,
                    cfg,
                    &mut stream,
                );
                let position =
                    update_position(&particle.position.params, &velocity, cfg.bits, &cfg.limits, &mut stream);
                let report = evaluate(&position, probe, &mut stream);
                particle.velocity = velocity;
                particle.position = Candidate {
                    params: position,
                    report: Some(report),
                };
            });

        // Sequential barrier: personal bests, then the global best, ties
        // keeping the incumbent.
        let mut improved = false;
        for particle in particles.iter_mut() {
            let fitness = particle.position.fitness();
            if fitness > particle.best_fitness {
                particle.best_fitness = fitness;
                particle.best_position = particle.position.clone();
            }
            if fitness > global_best.fitness() {
                global_best = particle.position.clone();
                improved = true;
            }
        }
        if improved {
            stall = 0;
        } else {
            stall += 1;
        }

        let positions: Vec<Candidate> = particles.iter().map(|p| p.position.clone()).collect();
        history.push(population_stats(iteration + 1, &positions));

        if stall >= cfg.stall_limit {
            break;
        }
    }

    let final_population = particles.into_iter().map(|p| p.position).collect();
    PsoRunResult {
        best: global_best,
        history,
        final_population,
    }
}
