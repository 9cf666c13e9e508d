//! Curve validation, Hasse scoring, the distinguished-point resistance probe,
//! and the composite fitness function shared by both optimizers.

use std::fmt;
use std::time::Instant;

use num_bigint::{BigUint, RandBigInt};
use num_traits::{CheckedSub, One, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ecmath::{
    curve_discriminant, ec_addition, ec_scalar_multiplication, find_generator_point, is_prime,
    CurveParams, ECPoint, ScanLimits,
};
use crate::rng::{fork_stream, ForgeRng};

/// Knobs for the resistance probe and the timing half of the fitness score.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeConfig {
    /// Independent walks per evaluation.
    pub trials: u32,
    /// Outer tortoise/hare iterations per walk.
    pub max_iterations: u32,
    /// Trailing zero bits of `x` that make a point distinguished.
    pub distinguished_bits: u32,
    /// Upper clamp of the execution score, in seconds.
    pub max_time: f64,
    /// Lower clamp of the execution score, in seconds.
    pub min_time: f64,
    /// Replace wall-clock timing with a budget fraction so evaluations are a
    /// pure function of `(candidate, seed)`.
    pub deterministic_timing: bool,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        ProbeConfig {
            trials: 20,
            max_iterations: 100,
            distinguished_bits: 10,
            max_time: 10.0,
            min_time: 0.1,
            deterministic_timing: false,
        }
    }
}

/// Why a candidate failed validation; the first failing check wins.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CurveRejection {
    CofactorBelowOne,
    ZeroPrime,
    MalformedGenerator,
    GeneratorOffCurve,
    NoGeneratorPoint,
    CofactorMismatch,
    Singular,
    Anomalous,
    Supersingular,
}

impl fmt::Display for CurveRejection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let msg = match self {
            CurveRejection::CofactorBelowOne => {
                "The cofactor h is less than 1, which makes it invalid."
            }
            CurveRejection::ZeroPrime => "The prime p can't be zero.",
            CurveRejection::MalformedGenerator => {
                "Invalid generator point provided. Skipping curve creation."
            }
            CurveRejection::GeneratorOffCurve => "The point G is not on the curve!",
            CurveRejection::NoGeneratorPoint => "No generator point found!",
            CurveRejection::CofactorMismatch => {
                "The cofactor does not match the expected cofactor!"
            }
            CurveRejection::Singular => "The curve is singular!",
            CurveRejection::Anomalous => "The curve is anomalous!",
            CurveRejection::Supersingular => "The curve is supersingular!",
        };
        f.write_str(msg)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FitnessError {
    #[error("hasse bounds are degenerate (upper equals lower)")]
    DegenerateBounds,
}

/// Per-candidate fitness breakdown.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitnessReport {
    pub valid: bool,
    pub rejection_reason: Option<String>,
    pub hasse_score: f64,
    pub execution_score: f64,
    /// 1 when the probe exhausted every trial without a collision.
    pub attack_resistance_score: u8,
    pub fitness: f64,
    /// Elapsed seconds fed to the execution score (wall-clock or derived).
    pub probe_elapsed: f64,
}

impl FitnessReport {
    fn rejected(reason: CurveRejection) -> Self {
        FitnessReport {
            valid: false,
            rejection_reason: Some(reason.to_string()),
            hasse_score: 0.0,
            execution_score: 0.0,
            attack_resistance_score: 0,
            fitness: 0.0,
            probe_elapsed: 0.0,
        }
    }
}

/// An optimizer genome: one parameter set plus its cached evaluation.
/// Serves as both a population individual and a particle position.
#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub params: CurveParams,
    pub report: Option<FitnessReport>,
}

impl Candidate {
    pub fn new(params: CurveParams) -> Self {
        Candidate {
            params,
            report: None,
        }
    }

    /// Cached fitness; candidates awaiting evaluation count as zero.
    pub fn fitness(&self) -> f64 {
        self.report.as_ref().map_or(0.0, |r| r.fitness)
    }
}

/// True when the discriminant `4a^3 + 27b^2` vanishes mod `p`.
pub fn is_singular(a: &BigUint, b: &BigUint, p: &BigUint) -> bool {
    curve_discriminant(a, b, p).is_zero()
}

/// True when the declared order equals the field size.
pub fn is_anomalous(p: &BigUint, n: &BigUint) -> bool {
    p == n
}

/// Trace-zero check on the declared order: `(p + 1 - n) = 0 (mod p)`, with
/// negative operands normalized into `[0, p)`. Small and composite `p` are
/// never flagged.
pub fn is_supersingular(p: &BigUint, n: &BigUint) -> bool {
    if *p <= BigUint::from(3u32) || !is_prime(p) {
        return false;
    }
    let trace = p + 1u32;
    let reduced = if trace >= *n {
        (trace - n) % p
    } else {
        let deficit = (n - trace) % p;
        if deficit.is_zero() {
            BigUint::zero()
        } else {
            p - deficit
        }
    };
    reduced.is_zero()
}

fn hasse_interval(p: &BigUint) -> (BigUint, BigUint) {
    let two_sqrt = 2u32 * p.sqrt();
    let upper = p + 1u32 + &two_sqrt + 1u32;
    let lower = (p + 1u32)
        .checked_sub(&(two_sqrt + 1u32))
        .unwrap_or_else(BigUint::zero);
    (lower, upper)
}

/// Runs the rejection checks in their documented order and reports the first
/// failure.
pub fn validate_curve(params: &CurveParams) -> Result<(), CurveRejection> {
    if params.h < BigUint::one() {
        return Err(CurveRejection::CofactorBelowOne);
    }
    if params.p.is_zero() {
        return Err(CurveRejection::ZeroPrime);
    }
    if params.g.is_infinity() {
        return Err(CurveRejection::MalformedGenerator);
    }
    if !params.g.is_on_curve(&params.a, &params.b, &params.p) {
        return Err(CurveRejection::GeneratorOffCurve);
    }
    if find_generator_point(&params.a, &params.b, &params.p, &ScanLimits::default()).is_err() {
        return Err(CurveRejection::NoGeneratorPoint);
    }
    // Cofactor consistency: at desk scale h*n must land inside the Hasse
    // interval; at cryptographic scale exhaustive counting is off the table,
    // so require the h = 1 convention and a usable order.
    if params.p.bits() <= 20 {
        let (lower, upper) = hasse_interval(&params.p);
        let declared = &params.h * &params.n;
        if declared < lower || declared > upper {
            return Err(CurveRejection::CofactorMismatch);
        }
    } else if !params.h.is_one() || params.n < BigUint::from(2u32) {
        return Err(CurveRejection::CofactorMismatch);
    }
    if is_singular(&params.a, &params.b, &params.p) {
        return Err(CurveRejection::Singular);
    }
    if is_anomalous(&params.p, &params.n) {
        return Err(CurveRejection::Anomalous);
    }
    if is_supersingular(&params.p, &params.n) {
        return Err(CurveRejection::Supersingular);
    }
    Ok(())
}

/// Closeness of the declared order to the Hasse-expected order
/// `p + 1 - 2*floor(sqrt(p))`, normalized by the distance from the expected
/// order to `p + 1`. May exceed 1 for orders very near the expected value.
pub fn hasse_score(p: &BigUint, n: &BigUint) -> Result<f64, FitnessError> {
    let two_sqrt = 2u32 * p.sqrt();
    let expected = (p + 1u32)
        .checked_sub(&two_sqrt)
        .unwrap_or_else(BigUint::zero);
    let upper = &expected + &two_sqrt; // = p + 1 for p >= 5
    if upper == expected {
        return Err(FitnessError::DegenerateBounds);
    }
    let diff = if *n >= expected {
        n - &expected
    } else {
        &expected - n
    };
    if diff >= upper {
        return Ok(0.0);
    }
    let numerator = (&upper - &diff).to_f64().unwrap_or(f64::MAX);
    let denominator = (&upper - &expected).to_f64().unwrap_or(f64::MAX);
    Ok(numerator / denominator)
}

/// What a probe run observed.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbeOutcome {
    /// Walk coefficient and point of the first distinguished point found, or
    /// `None` when every trial exhausted its iteration budget.
    pub collision: Option<(BigUint, ECPoint)>,
    /// Outer iterations consumed across all trials that ran.
    pub iterations_used: u64,
}

struct ProbeWalker {
    point: ECPoint,
    scalar: BigUint,
}

impl ProbeWalker {
    fn seeded(order: &BigUint, curve: &CurveParams, rng: &mut ForgeRng) -> Self {
        // Retries cover generators of small true order where a random
        // multiple can land on infinity.
        for _ in 0..8 {
            let scalar = rng.gen_biguint_below(order);
            let point = ec_scalar_multiplication(&curve.g, &scalar, curve);
            if !point.is_infinity() {
                return ProbeWalker { point, scalar };
            }
        }
        ProbeWalker {
            point: curve.g.clone(),
            scalar: BigUint::one(),
        }
    }

    fn step(&mut self, order: &BigUint, curve: &CurveParams, rng: &mut ForgeRng) {
        let x = match &self.point {
            ECPoint::Infinity => {
                *self = ProbeWalker::seeded(order, curve, rng);
                return;
            }
            ECPoint::Affine { x, .. } => x,
        };
        match (x % 3u32).to_u32().unwrap_or(0) {
            0 => {
                self.point = ec_addition(&self.point, &curve.g, curve);
                self.scalar = (&self.scalar + 1u32) % order;
            }
            1 => {
                self.point = ec_addition(&self.point, &self.point, curve);
                self.scalar = (2u32 * &self.scalar) % order;
            }
            _ => {
                self.point = ec_addition(&self.point, &self.point, curve);
                self.point = ec_addition(&self.point, &curve.g, curve);
                self.scalar = (2u32 * &self.scalar + 1u32) % order;
            }
        }
    }
}

fn is_distinguished(point: &ECPoint, bits: u32) -> bool {
    match point.x() {
        None => false,
        // x = 0 has every trailing bit zero.
        Some(x) => x.trailing_zeros().is_none_or(|z| z >= bits as u64),
    }
}

/// Distinguished-point resistance probe.
///
/// Runs `cfg.trials` independent walks, each a tortoise/hare pair whose step
/// branches on `x mod 3` (add the generator, double, or double-then-add).
/// The hare steps twice per outer iteration while the tortoise's stride
/// doubles every time the pair coincides; a walk succeeds as soon as either
/// walker lands on a point whose `x` has `cfg.distinguished_bits` trailing
/// zero bits. An exhausted budget is the "resistant" outcome.
pub fn rho_probe(
    g: &ECPoint,
    a: &BigUint,
    b: &BigUint,
    p: &BigUint,
    order: &BigUint,
    cfg: &ProbeConfig,
    rng: &mut ForgeRng,
) -> ProbeOutcome {
    let curve = CurveParams {
        a: a.clone(),
        b: b.clone(),
        p: p.clone(),
        g: g.clone(),
        n: order.clone(),
        h: BigUint::one(),
    };
    // Stride doubling can degenerate on tiny cycles (a fixed point of the
    // walk map); the per-trial step cap keeps the walk total. A collision-free
    // walk uses 3 steps per iteration, far below the cap.
    let step_cap = cfg.max_iterations as u64 * 32 + 64;
    let mut iterations_total: u64 = 0;
    for _ in 0..cfg.trials {
        let mut tortoise = ProbeWalker::seeded(order, &curve, rng);
        let mut hare = ProbeWalker {
            point: tortoise.point.clone(),
            scalar: tortoise.scalar.clone(),
        };
        let mut stride: u64 = 1;
        let mut steps: u64 = 0;
        let mut iterations: u64 = 0;
        'walk: while iterations < cfg.max_iterations as u64 {
            for _ in 0..stride {
                tortoise.step(order, &curve, rng);
                steps += 1;
                if is_distinguished(&tortoise.point, cfg.distinguished_bits) {
                    return ProbeOutcome {
                        collision: Some((tortoise.scalar, tortoise.point)),
                        iterations_used: iterations_total + iterations + 1,
                    };
                }
                if steps >= step_cap {
                    break 'walk;
                }
            }
            for _ in 0..2 {
                hare.step(order, &curve, rng);
                steps += 1;
                if is_distinguished(&hare.point, cfg.distinguished_bits) {
                    return ProbeOutcome {
                        collision: Some((hare.scalar, hare.point)),
                        iterations_used: iterations_total + iterations + 1,
                    };
                }
                if steps >= step_cap {
                    break 'walk;
                }
            }
            iterations += 1;
            if tortoise.point == hare.point && !tortoise.point.is_infinity() {
                stride = stride.saturating_mul(2);
                hare.point = tortoise.point.clone();
                hare.scalar = tortoise.scalar.clone();
            }
        }
        // A step-cap break inside the first outer iteration still consumed
        // budget; count it as one.
        if cfg.max_iterations > 0 {
            iterations_total += iterations.max(1);
        }
    }
    ProbeOutcome {
        collision: None,
        iterations_used: iterations_total,
    }
}

/// Linear clamp of the probe's elapsed seconds into `[0, 1]` over
/// `[min_time, max_time]`.
pub fn execution_score(elapsed: f64, cfg: &ProbeConfig) -> f64 {
    let span = cfg.max_time - cfg.min_time;
    if span <= 0.0 {
        return 0.0;
    }
    ((elapsed - cfg.min_time) / span).clamp(0.0, 1.0)
}

/// Full fitness evaluation of one candidate.
///
/// Invalid candidates score zero with their rejection reason. Valid ones are
/// scored `0.4*ln(n) + 0.2*hasse*ln(n) + 0.2*execution + 0.2*resistance`,
/// where the probe runs against the Hasse-expected order rather than the
/// declared one.
pub fn evaluate(candidate: &CurveParams, cfg: &ProbeConfig, rng: &mut ForgeRng) -> FitnessReport {
    if let Err(reason) = validate_curve(candidate) {
        return FitnessReport::rejected(reason);
    }
    let hasse = hasse_score(&candidate.p, &candidate.n)
        .expect("bounds nondegenerate for validated p");
    let expected_order = (&candidate.p + 1u32)
        .checked_sub(&(2u32 * candidate.p.sqrt()))
        .unwrap_or_else(BigUint::one)
        .max(BigUint::from(2u32));
    let started = Instant::now();
    let outcome = rho_probe(
        &candidate.g,
        &candidate.a,
        &candidate.b,
        &candidate.p,
        &expected_order,
        cfg,
        rng,
    );
    let elapsed = if cfg.deterministic_timing {
        let budget = cfg.trials as u64 * cfg.max_iterations as u64;
        if budget == 0 {
            0.0
        } else {
            outcome.iterations_used as f64 / budget as f64 * cfg.max_time
        }
    } else {
        started.elapsed().as_secs_f64()
    };
    let exec = execution_score(elapsed, cfg);
    let resistance: u8 = if outcome.collision.is_none() { 1 } else { 0 };
    let ln_n = candidate.n.to_f64().unwrap_or(f64::MAX).ln();
    let fitness = 0.4 * ln_n + 0.2 * hasse * ln_n + 0.2 * exec + 0.2 * f64::from(resistance);
    FitnessReport {
        valid: true,
        rejection_reason: None,
        hasse_score: hasse,
        execution_score: exec,
        attack_resistance_score: resistance,
        fitness,
        probe_elapsed: elapsed,
    }
}

/// Evaluates every candidate whose cached report was invalidated, fanning out
/// across the rayon pool with per-candidate forked streams so results do not
/// depend on scheduling.
pub fn evaluate_pending(
    candidates: &mut [Candidate],
    cfg: &ProbeConfig,
    stream_seed: u64,
    epoch: u64,
) {
    candidates
        .par_iter_mut()
        .enumerate()
        .filter(|(_, c)| c.report.is_none())
        .for_each(|(i, c)| {
            let mut rng = fork_stream(stream_seed, epoch, i as u64);
            c.report = Some(evaluate(&c.params, cfg, &mut rng));
        });
}
