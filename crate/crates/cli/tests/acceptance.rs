//! Acceptance suite: one test per criterion, each printing a PASS/FAIL line.
//!
//! Run with `cargo test --test acceptance` (add `-- --nocapture` to watch the
//! per-criterion lines stream by). The heavyweight entries are criterion 5
//! (a full-size genetic run at 256 bits) and criterion 9 (a million-step
//! attack budget against two 256-bit curves); both are minutes-scale.

use std::panic::{catch_unwind, resume_unwind, UnwindSafe};
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use eccforge_core::ecmath::{
    count_points_bruteforce, ec_addition, ec_scalar_multiplication, find_generator_point,
    get_prime_for_p, is_prime, tonelli_shanks, CurveParams, ECPoint, ScanLimits,
};
use eccforge_core::fitness::{evaluate, validate_curve, CurveRejection, ProbeConfig};
use eccforge_core::ga::{run_ga, GaConfig};
use eccforge_core::pso::{run_pso, run_pso_with_swarm, PsoConfig};
use eccforge_core::rho_attack::attack_entity_b;
use eccforge_core::rng::seed_rng;
use eccforge_core::simnet::{
    ecdh_shared_secret, encrypt_message, envelope_mac_input, fetch_params, fetch_public_key,
    hmac_sign, load_orders_csv, params_to_text, run_entity_a, serve_entity_b, EntityBHandle,
    KeyPair, OrdersSource, ParamsSource, ReplayOptions, ServeConfig, ORDERS_CSV,
};
use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};
use rand::Rng;
use rayon::prelude::*;

fn criterion<F: FnOnce() + UnwindSafe>(number: u32, label: &str, body: F) {
    match catch_unwind(body) {
        Ok(()) => println!("[acceptance] criterion {number:02} ({label}): PASS"),
        Err(payload) => {
            println!("[acceptance] criterion {number:02} ({label}): FAIL");
            resume_unwind(payload);
        }
    }
}

fn big(v: u64) -> BigUint {
    BigUint::from(v)
}

fn toy_curve() -> CurveParams {
    CurveParams {
        a: big(2),
        b: big(2),
        p: big(17),
        g: ECPoint::affine(big(5), big(1)),
        n: big(19),
        h: BigUint::one(),
    }
}

/// Brute-force group oracle in plain u64 arithmetic, independent of the
/// arbitrary-precision implementation it checks.
mod oracle {
    pub type Pt = Option<(u64, u64)>; // None is the point at infinity

    fn pow_mod(mut base: u64, mut exp: u64, modulus: u64) -> u64 {
        let mut acc = 1u64;
        base %= modulus;
        while exp > 0 {
            if exp & 1 == 1 {
                acc = acc * base % modulus;
            }
            base = base * base % modulus;
            exp >>= 1;
        }
        acc
    }

    fn inv(v: u64, p: u64) -> u64 {
        pow_mod(v, p - 2, p)
    }

    /// Every affine point, found by a quadratic-residue table scan.
    pub fn points(a: u64, b: u64, p: u64) -> Vec<(u64, u64)> {
        let mut roots = vec![Vec::new(); p as usize];
        for y in 0..p {
            roots[(y * y % p) as usize].push(y);
        }
        let mut out = Vec::new();
        for x in 0..p {
            let rhs = ((x * x % p) * x % p + a * x % p + b) % p;
            for &y in &roots[rhs as usize] {
                out.push((x, y));
            }
        }
        out
    }

    pub fn add(p1: Pt, p2: Pt, a: u64, p: u64) -> Pt {
        let (x1, y1) = match p1 {
            None => return p2,
            Some(q) => q,
        };
        let (x2, y2) = match p2 {
            None => return p1,
            Some(q) => q,
        };
        let m = if x1 == x2 {
            if (y1 + y2) % p == 0 {
                return None;
            }
            (3 * (x1 * x1 % p) % p + a) % p * inv(2 * y1 % p, p) % p
        } else {
            (y2 + p - y1) % p * inv((x2 + p - x1) % p, p) % p
        };
        let x3 = (m * m % p + 2 * p - x1 - x2) % p;
        let y3 = (m * ((x1 + p - x3) % p) % p + p - y1 % p) % p;
        Some((x3, y3))
    }
}

fn to_impl_point(pt: oracle::Pt) -> ECPoint {
    match pt {
        None => ECPoint::Infinity,
        Some((x, y)) => ECPoint::affine(big(x), big(y)),
    }
}

#[test]
fn criterion_01_group_law_oracle_equivalence() {
    criterion(1, "group-law oracle equivalence", || {
        let started = Instant::now();
        let primes: Vec<u64> = (5..=101).filter(|p| is_prime(&big(*p))).collect();
        primes.par_iter().for_each(|&p| {
            let mut rng = seed_rng(p);
            for a in 0..p {
                for b in 0..p {
                    if (4 * (a * a % p) % p * a % p + 27 * (b * b % p) % p) % p == 0 {
                        continue; // singular
                    }
                    let pts = oracle::points(a, b, p);
                    let curve = CurveParams {
                        a: big(a),
                        b: big(b),
                        p: big(p),
                        g: to_impl_point(pts.first().copied()),
                        n: big(pts.len() as u64 + 1),
                        h: BigUint::one(),
                    };

                    // Pairwise additions: exhaustive on tiny fields, sampled
                    // above.
                    let exhaustive = p <= 13;
                    let pair_count = if exhaustive { pts.len() * pts.len() } else { 10 };
                    for k in 0..pair_count {
                        let (p1, p2) = if exhaustive {
                            (pts[k / pts.len()], pts[k % pts.len()])
                        } else {
                            (
                                pts[rng.gen_range(0..pts.len())],
                                pts[rng.gen_range(0..pts.len())],
                            )
                        };
                        let expected = oracle::add(Some(p1), Some(p2), a, p);
                        let got = ec_addition(
                            &to_impl_point(Some(p1)),
                            &to_impl_point(Some(p2)),
                            &curve,
                        );
                        assert_eq!(
                            got,
                            to_impl_point(expected),
                            "addition mismatch on a={a} b={b} p={p}"
                        );
                        // Commutativity comes free from the same table.
                        let swapped = ec_addition(
                            &to_impl_point(Some(p2)),
                            &to_impl_point(Some(p1)),
                            &curve,
                        );
                        assert_eq!(got, swapped);
                    }

                    // Scalar multiples against the repeated-addition table.
                    if let Some(&g) = pts.first() {
                        let mut table: Vec<oracle::Pt> = vec![None, Some(g)];
                        loop {
                            let next = oracle::add(*table.last().unwrap(), Some(g), a, p);
                            table.push(next);
                            if next.is_none() {
                                break;
                            }
                        }
                        let order = table.len() as u64 - 1; // table[order] = O
                        let g_impl = to_impl_point(Some(g));
                        let mut scalars = vec![0u64, 1, 2, order];
                        scalars.push(rng.gen_range(0..2 * order));
                        for s in scalars {
                            let got = ec_scalar_multiplication(&g_impl, &big(s), &curve);
                            let expected = table[(s % order) as usize];
                            assert_eq!(
                                got,
                                to_impl_point(expected),
                                "scalar mismatch s={s} on a={a} b={b} p={p}"
                            );
                        }
                    }
                }
            }
        });
        let elapsed = started.elapsed();
        assert!(
            elapsed < Duration::from_secs(30),
            "oracle sweep took {elapsed:?}, budget is 30 s"
        );
    });
}

#[test]
fn criterion_02_tonelli_shanks_on_random_residues() {
    criterion(2, "modular square roots on 1000 random residues", || {
        let mut rng = seed_rng(202);
        let mut checked = 0;
        while checked < 1000 {
            let p = get_prime_for_p(16, &mut rng);
            let r = num_bigint::RandBigInt::gen_biguint_below(&mut rng, &p);
            if r.is_zero() {
                continue;
            }
            let square = (&r * &r) % &p;
            let root = tonelli_shanks(&square, &p).expect("squares are residues");
            assert_eq!((&root * &root) % &p, square, "bad root for p={p}");
            checked += 1;
        }
    });
}

#[test]
fn criterion_03_validation_rejection_fidelity() {
    criterion(3, "validation rejects fixtures with the documented reasons", || {
        // Cofactor zero fires first even when G is also broken.
        let mut fixture = toy_curve();
        fixture.h = BigUint::zero();
        fixture.g = ECPoint::affine(big(5), big(2));
        assert_eq!(
            validate_curve(&fixture),
            Err(CurveRejection::CofactorBelowOne)
        );

        let mut fixture = toy_curve();
        fixture.g = ECPoint::affine(big(5), big(2));
        assert_eq!(
            validate_curve(&fixture),
            Err(CurveRejection::GeneratorOffCurve)
        );

        // (1, 1, 31) is singular: 4 + 27 = 31.
        let fixture = CurveParams {
            a: BigUint::one(),
            b: BigUint::one(),
            p: big(31),
            g: ECPoint::affine(BigUint::zero(), BigUint::one()),
            n: big(32),
            h: BigUint::one(),
        };
        assert_eq!(validate_curve(&fixture), Err(CurveRejection::Singular));

        let mut fixture = toy_curve();
        fixture.n = big(17); // p = n
        assert_eq!(validate_curve(&fixture), Err(CurveRejection::Anomalous));

        // (11, 12): trace p + 1 - n = 0.
        let fixture = CurveParams {
            a: BigUint::one(),
            b: BigUint::one(),
            p: big(11),
            g: ECPoint::affine(BigUint::zero(), BigUint::one()),
            n: big(12),
            h: BigUint::one(),
        };
        assert_eq!(validate_curve(&fixture), Err(CurveRejection::Supersingular));

        // Reason strings carry the documented phrasing.
        assert!(CurveRejection::CofactorBelowOne
            .to_string()
            .contains("cofactor h is less than 1"));
        assert!(CurveRejection::GeneratorOffCurve
            .to_string()
            .contains("point G is not on the curve"));
    });
}

#[test]
fn criterion_04_fitness_composition_worked_example() {
    criterion(4, "toy-curve fitness composes to the worked value", || {
        let cfg = ProbeConfig {
            max_iterations: 0, // probe forced absent with zero elapsed budget
            deterministic_timing: true,
            ..ProbeConfig::default()
        };
        let report = evaluate(&toy_curve(), &cfg, &mut seed_rng(4));
        let ln19 = 19f64.ln();
        let expected = 0.4 * ln19 + 0.2 * 1.125 * ln19 + 0.2;
        let relative = ((report.fitness - expected) / expected).abs();
        assert!(
            relative < 1e-9,
            "fitness {} differs from {} by {relative:e}",
            report.fitness,
            expected
        );
    });
}

#[test]
fn criterion_05_full_scale_ga_fitness_magnitude() {
    criterion(5, "256-bit genetic run lands in the expected magnitude bracket", || {
        let cfg = GaConfig {
            seed: 20260810,
            ..GaConfig::default() // population 500, 40 generations, 256 bits
        };
        let probe = ProbeConfig {
            deterministic_timing: true,
            ..ProbeConfig::default()
        };
        let result = run_ga(&cfg, &probe, &mut seed_rng(cfg.seed));
        let best = result.best.fitness();
        assert!(
            (3e38..=3e40).contains(&best),
            "best fitness {best:e} outside [3e38, 3e40]"
        );
        assert!(validate_curve(&result.best.params).is_ok());
    });
}

#[test]
fn criterion_06_ga_elitism_monotonicity() {
    criterion(6, "20 seeded genetic runs never lose their best", || {
        let probe = ProbeConfig {
            deterministic_timing: true,
            ..ProbeConfig::default()
        };
        (0u64..20).into_par_iter().for_each(|seed| {
            let cfg = GaConfig {
                pop_size: 20,
                ngen: 10,
                bits: 16,
                seed,
                ..GaConfig::default()
            };
            let result = run_ga(&cfg, &probe, &mut seed_rng(seed));
            let mut last = f64::MIN;
            for stats in &result.history {
                assert!(
                    stats.max >= last,
                    "seed {seed}: best fitness dropped from {last} to {}",
                    stats.max
                );
                last = stats.max;
            }
        });
    });
}

#[test]
fn criterion_07_pso_gbest_monotonicity_and_early_stop() {
    criterion(7, "swarm best never decreases and stalls stop the run", || {
        let probe = ProbeConfig {
            deterministic_timing: true,
            ..ProbeConfig::default()
        };
        (0u64..20).into_par_iter().for_each(|seed| {
            let cfg = PsoConfig {
                swarm_size: 20,
                max_iterations: 10,
                bits: 16,
                seed,
                ..PsoConfig::default()
            };
            let result = run_pso(&cfg, &probe, &mut seed_rng(seed));
            // The returned global best dominates every iteration the swarm
            // ever saw.
            let running_max = result
                .history
                .iter()
                .map(|s| s.max)
                .fold(f64::MIN, f64::max);
            assert!(
                result.best.fitness() >= running_max,
                "seed {seed}: global best {} below an observed max {running_max}",
                result.best.fitness()
            );
        });

        // A swarm frozen by construction: one particle already at the best
        // reachable position, no cognitive/social pull, probe outcome pinned.
        let frozen_probe = ProbeConfig {
            max_iterations: 0,
            deterministic_timing: true,
            ..ProbeConfig::default()
        };
        let limits = ScanLimits::default();
        let g13 = find_generator_point(&BigUint::one(), &BigUint::one(), &big(13), &limits)
            .expect("generator exists");
        let frozen = CurveParams {
            a: BigUint::one(),
            b: BigUint::one(),
            p: big(13),
            g: g13,
            n: big(8),
            h: BigUint::one(),
        };
        assert!(validate_curve(&frozen).is_ok());
        let stall_limit = 3;
        let cfg = PsoConfig {
            swarm_size: 1,
            max_iterations: 50,
            c1: 0.0,
            c2: 0.0,
            stall_limit,
            bits: 4, // primes {11, 13}: both score below the frozen start
            seed: 9,
            ..PsoConfig::default()
        };
        let result = run_pso_with_swarm(&cfg, &frozen_probe, vec![frozen], &mut seed_rng(9));
        assert_eq!(
            result.history.len(),
            1 + stall_limit as usize,
            "run must stop after exactly stall_limit stalled iterations"
        );
    });
}

/// Finds a desk-scale curve with prime true order near p = 2^12, the regime
/// where the attack must win.
fn toy_attack_curve() -> CurveParams {
    let p = big(4099);
    let limits = ScanLimits::default();
    for a in 1u64..40 {
        for b in 1u64..40 {
            let (a, b) = (big(a), big(b));
            if eccforge_core::fitness::is_singular(&a, &b, &p) {
                continue;
            }
            let order = count_points_bruteforce(&a, &b, &p).expect("small field");
            if !is_prime(&order) {
                continue;
            }
            let g = match find_generator_point(&a, &b, &p, &limits) {
                Ok(g) => g,
                Err(_) => continue,
            };
            return CurveParams {
                a,
                b,
                p,
                g,
                n: order,
                h: BigUint::one(),
            };
        }
    }
    panic!("no prime-order curve found near 2^12");
}

fn serve_curve(params: &CurveParams, seed: u64) -> (tempfile::TempDir, EntityBHandle) {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("params.txt");
    std::fs::write(&path, params_to_text(params).unwrap()).unwrap();
    let handle = serve_entity_b(
        &ParamsSource::Path(path),
        "127.0.0.1:0",
        &ServeConfig {
            workers: 2,
            params_dir: dir.path().to_path_buf(),
            seed,
        },
    )
    .expect("server starts");
    (dir, handle)
}

#[test]
fn criterion_08_attack_recovers_toy_scale_keys() {
    criterion(8, "attack recovers 2^12-scale keys in at least 90% of runs", || {
        let curve = toy_attack_curve();
        // Prime group order: the collision algebra is exact and any
        // recovered key is the server's scalar itself.
        assert!(is_prime(&curve.n));
        let (_dir, handle) = serve_curve(&curve, 808);
        let budget = (2u64 * curve.n.to_u64().unwrap()) + 1;
        let mut successes = 0u32;
        for run in 0..50 {
            let started = Instant::now();
            let report = attack_entity_b(&handle.base_url(), 2, budget, run).unwrap();
            assert!(
                started.elapsed() < Duration::from_secs(10),
                "run {run} exceeded 10 s"
            );
            if report.verified {
                let key: BigUint = report.key.as_deref().unwrap().parse().unwrap();
                assert_eq!(&key, handle.private_key());
                successes += 1;
            }
        }
        assert!(
            successes >= 45,
            "only {successes}/50 runs recovered the key"
        );
    });
}

#[test]
fn criterion_09_attack_exhausts_at_full_scale() {
    criterion(9, "million-step attacks exhaust against 256-bit curves", || {
        // A genuinely evolved 256-bit curve from a small genetic run.
        let cfg = GaConfig {
            pop_size: 6,
            ngen: 1,
            seed: 99,
            ..GaConfig::default()
        };
        let probe = ProbeConfig {
            trials: 1,
            max_iterations: 5,
            deterministic_timing: true,
            ..ProbeConfig::default()
        };
        let evolved = run_ga(&cfg, &probe, &mut seed_rng(99)).best.params;
        assert_eq!(evolved.p.bits(), 256);

        let secp = eccforge_core::simnet::load_params(
            &ParamsSource::Secp256k1,
            Path::new("."),
        )
        .unwrap();

        for (label, params) in [("secp256k1", secp), ("ga-evolved", evolved)] {
            let (_dir, handle) = serve_curve(&params, 909);
            let report = attack_entity_b(&handle.base_url(), 2, 1_000_000, 7).unwrap();
            assert!(
                !report.verified,
                "{label}: a million-step budget must not break a 256-bit key"
            );
            let spent: u64 = report.workers.iter().map(|w| w.loops).sum();
            assert!(spent > 0 && spent <= 1_000_000);
        }
    });
}

fn corrupt_field(
    dto: &mut serde_json::Value,
    field: &str,
    rng: &mut eccforge_core::ForgeRng,
) {
    match field {
        "ciphertext" | "hmac" => {
            let mut bytes = hex::decode(dto[field].as_str().unwrap()).unwrap();
            let bit = rng.gen_range(0..bytes.len() * 8);
            bytes[bit / 8] ^= 1 << (bit % 8);
            dto[field] = serde_json::Value::String(hex::encode(bytes));
        }
        _ => {
            let value: BigUint = dto[field].as_str().unwrap().parse().unwrap();
            let bit = rng.gen_range(0u64..value.bits().max(8));
            let flipped = value ^ (BigUint::one() << bit);
            dto[field] = serde_json::Value::String(flipped.to_string());
        }
    }
}

#[test]
fn criterion_10_end_to_end_integration_on_all_sources() {
    criterion(10, "serve+replay on all four sources, with corruption fuzzing", || {
        let out = tempfile::tempdir().unwrap();
        let probe = ProbeConfig {
            trials: 2,
            max_iterations: 10,
            deterministic_timing: true,
            ..ProbeConfig::default()
        };
        let ga_cfg = GaConfig {
            pop_size: 10,
            ngen: 3,
            bits: 16,
            seed: 5,
            ..GaConfig::default()
        };
        let ga_best = run_ga(&ga_cfg, &probe, &mut seed_rng(5)).best.params;
        std::fs::write(
            out.path().join("ga_ecc_params.txt"),
            params_to_text(&ga_best).unwrap(),
        )
        .unwrap();
        let pso_cfg = PsoConfig {
            swarm_size: 10,
            max_iterations: 3,
            bits: 16,
            seed: 5,
            ..PsoConfig::default()
        };
        let pso_best = run_pso(&pso_cfg, &probe, &mut seed_rng(5)).best.params;
        std::fs::write(
            out.path().join("pso_ecc_params.txt"),
            params_to_text(&pso_best).unwrap(),
        )
        .unwrap();

        let sources = [
            ParamsSource::Ga,
            ParamsSource::Pso,
            ParamsSource::Secp256k1,
            ParamsSource::BrainpoolP256r1,
        ];
        let agent = ureq::Agent::new_with_config(
            ureq::Agent::config_builder()
                .http_status_as_error(false)
                .build(),
        );

        for (source_index, source) in sources.iter().enumerate() {
            let handle = serve_entity_b(
                source,
                "127.0.0.1:0",
                &ServeConfig {
                    workers: 2,
                    params_dir: out.path().to_path_buf(),
                    seed: 100 + source_index as u64,
                },
            )
            .unwrap_or_else(|e| panic!("serving {source} failed: {e}"));

            // Untampered replay: everything is accepted.
            let mut rng = seed_rng(11 + source_index as u64);
            let summary = run_entity_a(
                &handle.base_url(),
                &OrdersSource::Bundled,
                &ReplayOptions {
                    duration: Duration::from_secs(60),
                    interval: Duration::ZERO,
                    max_orders: Some(5),
                    ..ReplayOptions::default()
                },
                &mut rng,
            )
            .unwrap();
            assert_eq!(summary.sent, 5, "{source}: short send run");
            assert_eq!(summary.accepted, 5, "{source}: not all orders accepted");
            assert_eq!(summary.rejected, 0);
            let is_256_bit = matches!(
                source,
                ParamsSource::Secp256k1 | ParamsSource::BrainpoolP256r1
            );
            if is_256_bit {
                assert!(
                    summary.latency.max_ms < 2000.0,
                    "{source}: round trip {}ms breaches 2 s",
                    summary.latency.max_ms
                );
            }

            // 250 single-bit corruptions per source (1000 total): none may
            // be accepted.
            let params = fetch_params(&handle.base_url()).unwrap();
            let server_public = fetch_public_key(&handle.base_url()).unwrap();
            let client = KeyPair::generate(&params, &mut rng);
            let mac_key = ecdh_shared_secret(&client.private, &server_public, &params).unwrap();
            let (records, _) = load_orders_csv(ORDERS_CSV);
            let plaintext = serde_json::to_vec(&records[0]).unwrap();
            let (c1, ciphertext) =
                encrypt_message(&plaintext, &server_public, &params, &mut rng).unwrap();
            let tag = hmac_sign(&mac_key, &envelope_mac_input(&c1, &ciphertext));
            let good = serde_json::json!({
                "C1x": c1.x().unwrap().to_string(),
                "C1y": c1.y().unwrap().to_string(),
                "ciphertext": hex::encode(&ciphertext),
                "hmac": hex::encode(tag),
                "sender_x": client.public.x().unwrap().to_string(),
                "sender_y": client.public.y().unwrap().to_string(),
                "payload_meta": "fuzz",
            });
            let url = format!("{}/order", handle.base_url());
            let sanity = agent.post(&url).send_json(&good).unwrap();
            assert_eq!(sanity.status().as_u16(), 200, "{source}: good envelope rejected");

            let before = handle.orders().len();
            let fields = ["ciphertext", "hmac", "C1x", "C1y", "sender_x", "sender_y"];
            for trial in 0..250 {
                let mut dto = good.clone();
                corrupt_field(&mut dto, fields[trial % fields.len()], &mut rng);
                let response = agent.post(&url).send_json(&dto).unwrap();
                assert_ne!(
                    response.status().as_u16(),
                    200,
                    "{source}: corrupted envelope accepted on trial {trial}"
                );
            }
            assert_eq!(handle.orders().len(), before, "{source}: log grew under fuzz");
        }
    });
}

#[test]
fn criterion_11_cli_determinism() {
    criterion(11, "seeded CLI runs are byte-identical", || {
        let bin = env!("CARGO_BIN_EXE_eccforge");
        let root = tempfile::tempdir().unwrap();
        let compare_files = |a: &Path, b: &Path, names: &[&str]| {
            for name in names {
                let left = std::fs::read(a.join(name)).unwrap();
                let right = std::fs::read(b.join(name)).unwrap();
                assert_eq!(left, right, "{name} differs between identical runs");
            }
        };
        for algo in ["ga", "pso"] {
            let dirs = [root.path().join(format!("{algo}-1")), root.path().join(format!("{algo}-2"))];
            for dir in &dirs {
                let status = Command::new(bin)
                    .args([
                        "optimize",
                        algo,
                        "--bits",
                        "16",
                        "--pop-size",
                        "10",
                        "--generations",
                        "3",
                        "--seed",
                        "7",
                        "--deterministic-timing",
                        "--trials",
                        "2",
                        "--probe-iterations",
                        "10",
                        "--out",
                    ])
                    .arg(dir)
                    .status()
                    .expect("binary runs");
                assert!(status.success(), "{algo} run failed");
            }
            compare_files(
                &dirs[0],
                &dirs[1],
                &[
                    &format!("{algo}_ecc_params.txt"),
                    "fitness_history.csv",
                    "fitness_history.dat",
                ],
            );
        }
    });
}

#[test]
fn criterion_12_relative_efficiency_report() {
    criterion(12, "matched-budget comparison reports wall times", || {
        let bin = env!("CARGO_BIN_EXE_eccforge");
        let out = tempfile::tempdir().unwrap();
        let output = Command::new(bin)
            .args([
                "compare",
                "--bits",
                "64",
                "--pop-size",
                "10",
                "--generations",
                "3",
                "--seed",
                "5",
                "--deterministic-timing",
                "--out",
            ])
            .arg(out.path())
            .output()
            .expect("binary runs");
        assert!(output.status.success(), "compare failed: {output:?}");

        let csv = std::fs::read_to_string(out.path().join("compare_report.csv")).unwrap();
        let mut ga_wall = None;
        let mut pso_wall = None;
        for line in csv.lines() {
            if let Some(rest) = line.strip_prefix("wall_seconds,") {
                let mut parts = rest.split(',');
                ga_wall = parts.next().and_then(|v| v.parse::<f64>().ok());
                pso_wall = parts.next().and_then(|v| v.parse::<f64>().ok());
            }
        }
        let (ga_wall, pso_wall) = (ga_wall.expect("ga wall"), pso_wall.expect("pso wall"));
        assert!(ga_wall > 0.0 && pso_wall > 0.0);
        // The efficiency ordering is reported, not hard-asserted: hardware
        // (and tiny budgets) can flip it, which the report flags as WARN.
        if ga_wall >= pso_wall {
            println!(
                "[acceptance] criterion 12 note: WARN, GA wall {ga_wall}s not below PSO wall {pso_wall}s"
            );
        }
        // Both parameter files exist and reload as valid curves.
        for (dir, name) in [("ga", "ga_ecc_params.txt"), ("pso", "pso_ecc_params.txt")] {
            let text = std::fs::read_to_string(out.path().join(dir).join(name)).unwrap();
            let params = eccforge_core::simnet::parse_params_text(&text).unwrap();
            assert!(validate_curve(&params).is_ok(), "{dir} best fails validation");
        }
    });
}
