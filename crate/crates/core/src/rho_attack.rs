//! The offensive tool: tortoise-and-hare discrete-log recovery against
//! Entity B's public key, with parallel independent walkers sharing a stop
//! flag.

use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Mutex};
use std::time::Instant;

use num_bigint::{BigUint, RandBigInt};
use num_traits::{ToPrimitive, Zero};
use serde::Serialize;
use thiserror::Error;

use crate::ecmath::{ec_addition, ec_scalar_multiplication, mod_inverse, CurveParams, ECPoint};
use crate::rng::{fork_stream, ForgeRng};
use crate::simnet::{fetch_params, fetch_public_key, SimError};

#[derive(Debug, Error)]
pub enum AttackError {
    #[error("network: {0}")]
    Network(#[from] SimError),
}

/// A walker tracking `point = u*G + v*Q` with both coefficients mod `n`, so
/// a collision yields the discrete log.
#[derive(Debug, Clone, PartialEq)]
pub struct WalkerState {
    pub point: ECPoint,
    pub u: BigUint,
    pub v: BigUint,
}

impl WalkerState {
    /// Starts a walk at `u*G + v*Q`.
    pub fn seeded(u: BigUint, v: BigUint, g: &ECPoint, q: &ECPoint, params: &CurveParams) -> Self {
        let ug = ec_scalar_multiplication(g, &u, params);
        let vq = ec_scalar_multiplication(q, &v, params);
        WalkerState {
            point: ec_addition(&ug, &vq, params),
            u,
            v,
        }
    }

    fn reseed(&mut self, g: &ECPoint, q: &ECPoint, params: &CurveParams, rng: &mut ForgeRng) {
        let u = rng.gen_biguint_below(&params.n);
        let v = rng.gen_biguint_below(&params.n);
        *self = WalkerState::seeded(u, v, g, q, params);
    }
}

/// One walk step, partitioned by `point.x mod 3`: add `Q` (bumping `v`),
/// double (doubling both coefficients), or add `G` (bumping `u`), all mod
/// `params.n`. A walker on the point at infinity re-seeds from fresh random
/// coefficients instead.
pub fn rho_step(
    state: &mut WalkerState,
    g: &ECPoint,
    q: &ECPoint,
    params: &CurveParams,
    rng: &mut ForgeRng,
) {
    let n = &params.n;
    let branch = match state.point.x() {
        None => {
            state.reseed(g, q, params, rng);
            return;
        }
        Some(x) => (x % 3u32).to_u32().unwrap_or(0),
    };
    match branch {
        0 => {
            state.point = ec_addition(&state.point, q, params);
            state.v = (&state.v + 1u32) % n;
        }
        1 => {
            state.point = ec_addition(&state.point, &state.point, params);
            state.u = (2u32 * &state.u) % n;
            state.v = (2u32 * &state.v) % n;
        }
        _ => {
            state.point = ec_addition(&state.point, g, params);
            state.u = (&state.u + 1u32) % n;
        }
    }
}

/// What one walker observed.
#[derive(Debug, Clone)]
pub struct RhoOutcome {
    pub key: Option<BigUint>,
    pub loops: u64,
}

/// Floyd cycle search for `d` with `Q = d*G`.
///
/// The tortoise steps once and the hare twice per loop, for up to
/// `min(step_budget, 2n + 1)` loops. On a point collision the key candidate
/// is `(u_t - u_h) * (v_h - v_t)^-1 mod n`; a zero or non-invertible
/// coefficient difference discards the walk and restarts it from a fresh
/// random start. The shared stop flag is honored between loops.
pub fn pollards_rho_attack(
    g: &ECPoint,
    q: &ECPoint,
    params: &CurveParams,
    init_value: &BigUint,
    step_budget: u64,
    shared_stop: &AtomicBool,
    rng: &mut ForgeRng,
) -> RhoOutcome {
    let n = &params.n;
    // The theoretical 2n + 1 ceiling only bites at desk scale; at
    // cryptographic sizes the step budget is the practical bound.
    let bound = (2u32 * n + 1u32)
        .to_u64()
        .map_or(step_budget, |ceiling| ceiling.min(step_budget));

    let mut tortoise = WalkerState::seeded(init_value % n, BigUint::zero(), g, q, params);
    let mut hare = tortoise.clone();
    let mut loops = 0u64;
    while loops < bound {
        if shared_stop.load(Ordering::Relaxed) {
            return RhoOutcome { key: None, loops };
        }
        rho_step(&mut tortoise, g, q, params, rng);
        rho_step(&mut hare, g, q, params, rng);
        rho_step(&mut hare, g, q, params, rng);
        loops += 1;
        if tortoise.point == hare.point && !tortoise.point.is_infinity() {
            let v_diff = sub_mod(&hare.v, &tortoise.v, n);
            if v_diff.is_zero() {
                tortoise.reseed(g, q, params, rng);
                hare = tortoise.clone();
                continue;
            }
            match mod_inverse(&v_diff, n) {
                Ok(inverse) => {
                    let u_diff = sub_mod(&tortoise.u, &hare.u, n);
                    let key = (u_diff * inverse) % n;
                    return RhoOutcome {
                        key: Some(key),
                        loops,
                    };
                }
                Err(_) => {
                    // Non-invertible difference (composite n): restart.
                    tortoise.reseed(g, q, params, rng);
                    hare = tortoise.clone();
                }
            }
        }
    }
    RhoOutcome { key: None, loops }
}

fn sub_mod(a: &BigUint, b: &BigUint, n: &BigUint) -> BigUint {
    let a = a % n;
    let b = b % n;
    if a >= b {
        a - b
    } else {
        a + n - b
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct WorkerReport {
    pub worker: usize,
    pub loops: u64,
    pub walks: u64,
}

/// Outcome of a full attack run against a server.
#[derive(Debug, Clone, Serialize)]
pub struct AttackReport {
    /// The verified private key, as a decimal string for reporting.
    pub key: Option<String>,
    pub verified: bool,
    pub wall_seconds: f64,
    pub step_budget: u64,
    pub workers: Vec<WorkerReport>,
}

/// Fetches Entity B's parameters and public key, then runs `workers`
/// independent walkers that split `step_budget` between them and share a
/// stop flag. Every candidate key is checked against `d*G = Q` before it is
/// reported; failed candidates are treated as no-finds and the walker keeps
/// its remaining budget.
pub fn attack_entity_b(
    server_address: &str,
    workers: usize,
    step_budget: u64,
    seed: u64,
) -> Result<AttackReport, AttackError> {
    let params = fetch_params(server_address)?;
    let q = fetch_public_key(server_address)?;
    Ok(attack_params(&params, &q, workers, step_budget, seed))
}

/// The walker pool behind [`attack_entity_b`], usable directly when the
/// parameters and target are already in hand.
pub fn attack_params(
    params: &CurveParams,
    q: &ECPoint,
    workers: usize,
    step_budget: u64,
    seed: u64,
) -> AttackReport {
    let workers = workers.max(1);
    let per_worker = (step_budget / workers as u64).max(1);
    let stop = Arc::new(AtomicBool::new(false));
    let found: Arc<Mutex<Option<BigUint>>> = Arc::new(Mutex::new(None));
    let started = Instant::now();

    let reports: Vec<WorkerReport> = std::thread::scope(|scope| {
        let handles: Vec<_> = (0..workers)
            .map(|worker| {
                let stop = Arc::clone(&stop);
                let found = Arc::clone(&found);
                scope.spawn(move || {
                    let mut rng = fork_stream(seed, 0xA77AC4, worker as u64);
                    let mut remaining = per_worker;
                    let mut loops_total = 0u64;
                    let mut walks = 0u64;
                    while remaining > 0 && !stop.load(Ordering::Relaxed) {
                        let init = rng.gen_biguint_range(&BigUint::from(1u32), &params.n);
                        let outcome = pollards_rho_attack(
                            &params.g,
                            q,
                            params,
                            &init,
                            remaining,
                            &stop,
                            &mut rng,
                        );
                        walks += 1;
                        loops_total += outcome.loops;
                        remaining = remaining.saturating_sub(outcome.loops.max(1));
                        if let Some(key) = outcome.key {
                            let check = ec_scalar_multiplication(&params.g, &key, params);
                            if check == *q {
                                *found.lock().expect("result slot") = Some(key);
                                stop.store(true, Ordering::SeqCst);
                                break;
                            }
                            // Unverified candidate: keep walking.
                        }
                    }
                    WorkerReport {
                        worker,
                        loops: loops_total,
                        walks,
                    }
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("walker thread"))
            .collect()
    });

    let key = found.lock().expect("result slot").clone();
    AttackReport {
        verified: key.is_some(),
        key: key.map(|k| k.to_string()),
        wall_seconds: started.elapsed().as_secs_f64(),
        step_budget,
        workers: reports,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seed_rng;
    use num_traits::One;

    fn toy_curve() -> CurveParams {
        CurveParams {
            a: BigUint::from(2u32),
            b: BigUint::from(2u32),
            p: BigUint::from(17u32),
            g: ECPoint::affine(BigUint::from(5u32), BigUint::from(1u32)),
            n: BigUint::from(19u32),
            h: BigUint::one(),
        }
    }

    fn check_invariant(state: &WalkerState, g: &ECPoint, q: &ECPoint, params: &CurveParams) {
        let ug = ec_scalar_multiplication(g, &state.u, params);
        let vq = ec_scalar_multiplication(q, &state.v, params);
        assert_eq!(state.point, ec_addition(&ug, &vq, params));
    }

    #[test]
    fn step_case_rules() {
        let params = toy_curve();
        let g = params.g.clone();
        let q = ec_scalar_multiplication(&g, &BigUint::from(7u32), &params);
        let mut rng = seed_rng(1);
        // (5, 1): x = 5 = 2 (mod 3), so u increments and v is untouched.
        let mut state = WalkerState::seeded(BigUint::one(), BigUint::zero(), &g, &q, &params);
        rho_step(&mut state, &g, &q, &params, &mut rng);
        assert_eq!(state.u, BigUint::from(2u32));
        assert_eq!(state.v, BigUint::zero());
        check_invariant(&state, &g, &q, &params);
    }

    #[test]
    fn representation_invariant_holds_over_many_steps() {
        let params = toy_curve();
        let g = params.g.clone();
        let q = ec_scalar_multiplication(&g, &BigUint::from(7u32), &params);
        let mut rng = seed_rng(2);
        let mut state = WalkerState::seeded(BigUint::from(3u32), BigUint::from(4u32), &g, &q, &params);
        for _ in 0..10_000 {
            rho_step(&mut state, &g, &q, &params, &mut rng);
            check_invariant(&state, &g, &q, &params);
        }
    }

    #[test]
    fn infinity_reseeds_with_invariant() {
        let params = toy_curve();
        let g = params.g.clone();
        let q = ec_scalar_multiplication(&g, &BigUint::from(7u32), &params);
        let mut rng = seed_rng(3);
        let mut state = WalkerState {
            point: ECPoint::Infinity,
            u: BigUint::zero(),
            v: BigUint::zero(),
        };
        rho_step(&mut state, &g, &q, &params, &mut rng);
        assert!(!state.point.is_infinity() || state.u.is_zero());
        check_invariant(&state, &g, &q, &params);
    }

    #[test]
    fn attack_recovers_toy_keys() {
        let params = toy_curve();
        let g = params.g.clone();
        for d in [1u32, 7, 11] {
            let q = ec_scalar_multiplication(&g, &BigUint::from(d), &params);
            let stop = AtomicBool::new(false);
            let mut rng = seed_rng(u64::from(d));
            let mut recovered = None;
            for attempt in 0..20 {
                let init = BigUint::from(2u32 + attempt);
                let outcome =
                    pollards_rho_attack(&g, &q, &params, &init, 200, &stop, &mut rng);
                if let Some(key) = outcome.key {
                    if ec_scalar_multiplication(&g, &key, &params) == q {
                        recovered = Some(key);
                        break;
                    }
                }
            }
            // n = 19 is prime, so the verified key is exactly d.
            assert_eq!(recovered, Some(BigUint::from(d)), "failed to recover {d}");
        }
    }

    #[test]
    fn attack_params_verifies_before_reporting() {
        let params = toy_curve();
        let q = ec_scalar_multiplication(&params.g, &BigUint::from(7u32), &params);
        let report = attack_params(&params, &q, 2, 4_000, 99);
        assert!(report.verified);
        assert_eq!(report.key.as_deref(), Some("7"));
        assert_eq!(report.workers.len(), 2);
    }

    #[test]
    fn zero_budget_returns_exhaustion() {
        let params = toy_curve();
        let q = ec_scalar_multiplication(&params.g, &BigUint::from(7u32), &params);
        let stop = AtomicBool::new(false);
        let mut rng = seed_rng(5);
        let outcome =
            pollards_rho_attack(&params.g, &q, &params, &BigUint::one(), 0, &stop, &mut rng);
        assert!(outcome.key.is_none());
        assert_eq!(outcome.loops, 0);
    }
}
