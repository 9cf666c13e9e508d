//! Evolutionary search for elliptic-curve domain parameters.
//!
//! Two metaheuristics, a genetic algorithm and particle swarm optimization,
//! evolve the domain-parameter sextuple `(a, b, p, G, n, h)` under a shared
//! security-oriented fitness function (validity checks, Hasse-bound scoring,
//! and a discrete-log resistance probe). Evolved parameters feed a simulated
//! order-processing integration: an ERP-style server and a storefront client
//! exchanging ECDH-keyed, HMAC-authenticated encrypted orders, plus a
//! parallel discrete-log attacker that tries to break the server's key.

pub mod ecmath;
pub mod fitness;
pub mod ga;
pub mod pso;
pub mod rho_attack;
pub mod rng;
pub mod simnet;
pub mod stats;

pub use ecmath::{CurveParams, ECPoint, EcError, ScanLimits};
pub use fitness::{Candidate, CurveRejection, FitnessReport, ProbeConfig};
pub use rng::{fork_stream, seed_rng, ForgeRng};
pub use stats::GenerationStats;

/// Caps the evaluation/attack worker pool. A no-op once any pool exists.
pub fn set_worker_threads(workers: usize) {
    let _ = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build_global();
}
