//! Arbitrary-precision modular arithmetic, primality testing, modular square
//! roots, and affine elliptic-curve group operations over prime fields.
//!
//! This is the numeric substrate for the rest of the crate: the optimizers,
//! the fitness function, the messaging simulation, and the discrete-log
//! attacker all build on these operations. Points are affine with an explicit
//! infinity case; scalar multiplication is plain double-and-add.

use std::time::{Duration, Instant};

use num_bigint::{BigInt, BigUint, RandBigInt};
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng::ForgeRng;

/// Errors surfaced by the arithmetic layer.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EcError {
    #[error("value has no inverse modulo the given modulus")]
    NonInvertible,
    #[error("n is not a quadratic residue modulo p")]
    NotAResidue,
    #[error("no generator point found within the scan limit")]
    NoGeneratorPoint,
    #[error("generator point search exceeded its time budget")]
    Timeout,
    #[error("modulus too large for exhaustive point counting")]
    TooLarge,
}

/// A point on a short-Weierstrass curve, affine or at infinity.
///
/// All infinity points compare equal; the coordinates of an affine point are
/// field elements in `[0, p)` for whatever curve the point is bound to.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum ECPoint {
    Infinity,
    Affine { x: BigUint, y: BigUint },
}

impl ECPoint {
    pub fn affine(x: BigUint, y: BigUint) -> Self {
        ECPoint::Affine { x, y }
    }

    pub fn infinity() -> Self {
        ECPoint::Infinity
    }

    pub fn is_infinity(&self) -> bool {
        matches!(self, ECPoint::Infinity)
    }

    pub fn x(&self) -> Option<&BigUint> {
        match self {
            ECPoint::Infinity => None,
            ECPoint::Affine { x, .. } => Some(x),
        }
    }

    pub fn y(&self) -> Option<&BigUint> {
        match self {
            ECPoint::Infinity => None,
            ECPoint::Affine { y, .. } => Some(y),
        }
    }

    /// Checks `y^2 = x^3 + a*x + b (mod p)`. Infinity is never on a curve in
    /// this affine sense.
    pub fn is_on_curve(&self, a: &BigUint, b: &BigUint, p: &BigUint) -> bool {
        match self {
            ECPoint::Infinity => false,
            ECPoint::Affine { x, y } => {
                if p.is_zero() {
                    return false;
                }
                let lhs = (y * y) % p;
                let rhs = ((x * x * x) + a * x + b) % p;
                lhs == rhs
            }
        }
    }
}

/// The domain-parameter sextuple `(a, b, p, G, n, h)` exchanged by every
/// component: curve coefficients, prime modulus, generator point, declared
/// group order, and cofactor.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CurveParams {
    pub a: BigUint,
    pub b: BigUint,
    pub p: BigUint,
    pub g: ECPoint,
    pub n: BigUint,
    pub h: BigUint,
}

impl CurveParams {
    /// Bit length of the prime modulus.
    pub fn bits(&self) -> u64 {
        self.p.bits()
    }
}

/// Bounds for the generator-point scan: how many `x` candidates to try and an
/// optional wall-clock budget for the whole search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanLimits {
    pub max_x: u64,
    pub time_budget_secs: Option<f64>,
}

impl Default for ScanLimits {
    fn default() -> Self {
        ScanLimits {
            max_x: 100_000,
            time_budget_secs: Some(5.0),
        }
    }
}

fn sub_mod(a: &BigUint, b: &BigUint, p: &BigUint) -> BigUint {
    let a = a % p;
    let b = b % p;
    if a >= b {
        a - b
    } else {
        a + p - b
    }
}

/// `(4a^3 + 27b^2) mod p`, the curve discriminant used by singularity checks
/// and curve generation.
pub fn curve_discriminant(a: &BigUint, b: &BigUint, p: &BigUint) -> BigUint {
    (4u32 * a * a * a + 27u32 * b * b) % p
}

/// Modular inverse by extended Euclid. Works for any modulus; composite
/// moduli report `NonInvertible` when the gcd is not one.
pub fn mod_inverse(v: &BigUint, p: &BigUint) -> Result<BigUint, EcError> {
    let v = v % p;
    if v.is_zero() {
        return Err(EcError::NonInvertible);
    }
    let (mut r0, mut r1) = (BigInt::from(p.clone()), BigInt::from(v));
    let (mut t0, mut t1) = (BigInt::zero(), BigInt::one());
    while !r1.is_zero() {
        let q = &r0 / &r1;
        let r = &r0 - &q * &r1;
        r0 = std::mem::replace(&mut r1, r);
        let t = &t0 - &q * &t1;
        t0 = std::mem::replace(&mut t1, t);
    }
    if !r0.is_one() {
        return Err(EcError::NonInvertible);
    }
    let m = BigInt::from(p.clone());
    let inv = ((t0 % &m) + &m) % &m;
    Ok(inv.to_biguint().expect("normalized into [0, p)"))
}

/// Euler's criterion: `1` for a nonzero quadratic residue, `-1` for a
/// non-residue, `0` when `a = 0 (mod p)`. `p` must be an odd prime.
pub fn legendre_symbol(a: &BigUint, p: &BigUint) -> i32 {
    let exp = (p - 1u32) >> 1;
    let ls = a.modpow(&exp, p);
    if ls == p - 1u32 {
        -1
    } else if ls.is_one() {
        1
    } else {
        0
    }
}

/// Square root modulo an odd prime.
///
/// For `p = 3 (mod 4)` this takes the `n^((p+1)/4)` shortcut; otherwise it
/// runs the full descent with `z` the smallest quadratic non-residue. The
/// returned root is whichever one the procedure lands on; it is not
/// canonicalized to `min(r, p - r)`.
pub fn tonelli_shanks(n: &BigUint, p: &BigUint) -> Result<BigUint, EcError> {
    if legendre_symbol(n, p) != 1 {
        return Err(EcError::NotAResidue);
    }
    let mut q = p - 1u32;
    let mut s = 0u64;
    while q.is_even() {
        q >>= 1;
        s += 1;
    }
    if s == 1 {
        let exp = (p + 1u32) >> 2;
        return Ok(n.modpow(&exp, p));
    }
    let two = BigUint::from(2u32);
    let mut z = two.clone();
    while legendre_symbol(&z, p) != -1 {
        z += 1u32;
    }
    let mut m = s;
    let mut c = z.modpow(&q, p);
    let mut t = n.modpow(&q, p);
    let mut r = n.modpow(&((&q + 1u32) >> 1), p);
    while !t.is_one() {
        let mut i = 0u64;
        let mut t_i = t.clone();
        while !t_i.is_one() {
            t_i = t_i.modpow(&two, p);
            i += 1;
            if i >= m {
                // Unreachable for prime p and a verified residue; bails out
                // instead of spinning on garbage moduli.
                return Err(EcError::NotAResidue);
            }
        }
        let b = c.modpow(&(BigUint::one() << (m - i - 1)), p);
        r = (r * &b) % p;
        let b2 = (&b * &b) % p;
        t = (t * &b2) % p;
        c = b2;
        m = i;
    }
    Ok(r)
}

/// Group law on the curve, affine chord-and-tangent form.
///
/// Both operands must be infinity or points on `curve`; with that contract
/// every case is defined and the slope denominators are invertible.
pub fn ec_addition(p1: &ECPoint, p2: &ECPoint, curve: &CurveParams) -> ECPoint {
    let p = &curve.p;
    let (x1, y1) = match p1 {
        ECPoint::Infinity => return p2.clone(),
        ECPoint::Affine { x, y } => (x, y),
    };
    let (x2, y2) = match p2 {
        ECPoint::Infinity => return p1.clone(),
        ECPoint::Affine { x, y } => (x, y),
    };
    let m = if x1 == x2 {
        if ((y1 + y2) % p).is_zero() {
            // Inverse pair, including the two-torsion y = 0 case.
            return ECPoint::Infinity;
        }
        let num = (3u32 * x1 * x1 + &curve.a) % p;
        let den = mod_inverse(&((2u32 * y1) % p), p)
            .expect("doubling denominator is nonzero for on-curve points");
        (num * den) % p
    } else {
        let num = sub_mod(y2, y1, p);
        let den = mod_inverse(&sub_mod(x2, x1, p), p)
            .expect("chord denominator is nonzero for distinct x");
        (num * den) % p
    };
    let x3 = sub_mod(&((&m * &m) % p), &((x1 + x2) % p), p);
    let y3 = sub_mod(&(&m * &sub_mod(x1, &x3, p) % p), y1, p);
    ECPoint::affine(x3, y3)
}

/// Scalar multiplication by double-and-add. `0 * P` is infinity.
pub fn ec_scalar_multiplication(point: &ECPoint, scalar: &BigUint, curve: &CurveParams) -> ECPoint {
    let mut result = ECPoint::Infinity;
    let mut addend = point.clone();
    let bits = scalar.bits();
    for i in 0..bits {
        if scalar.bit(i) {
            result = ec_addition(&result, &addend, curve);
        }
        if i + 1 < bits {
            addend = ec_addition(&addend, &addend, curve);
        }
    }
    result
}

const SMALL_PRIMES: [u32; 54] = [
    2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89,
    97, 101, 103, 107, 109, 113, 127, 131, 137, 139, 149, 151, 157, 163, 167, 173, 179, 181, 191,
    193, 197, 199, 211, 223, 227, 229, 233, 239, 241, 251,
];

/// Total Miller-Rabin rounds run by [`is_prime`] after the small-prime sieve.
const MILLER_RABIN_ROUNDS: usize = 40;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn miller_rabin_witness(n: &BigUint, base: &BigUint, d: &BigUint, s: u64) -> bool {
    // Returns true when `base` witnesses n composite.
    let n_minus_1 = n - 1u32;
    let mut x = base.modpow(d, n);
    if x.is_one() || x == n_minus_1 {
        return false;
    }
    for _ in 1..s {
        x = (&x * &x) % n;
        if x == n_minus_1 {
            return false;
        }
    }
    true
}

/// Probabilistic primality test: small-prime sieve, the first twelve prime
/// bases, then pseudo-random bases derived from the candidate itself until 40
/// rounds have run. Deterministic as a function of the input.
pub fn is_prime(n: &BigUint) -> bool {
    if *n < BigUint::from(2u32) {
        return false;
    }
    for sp in SMALL_PRIMES {
        let sp = BigUint::from(sp);
        if *n == sp {
            return true;
        }
        if (n % &sp).is_zero() {
            return false;
        }
    }
    let mut d = n - 1u32;
    let mut s = 0u64;
    while d.is_even() {
        d >>= 1;
        s += 1;
    }
    let mut rounds = 0usize;
    for sp in SMALL_PRIMES.iter().take(12) {
        if miller_rabin_witness(n, &BigUint::from(*sp), &d, s) {
            return false;
        }
        rounds += 1;
    }
    // Extra bases keyed off the candidate's low words keep the test a pure
    // function while pushing the error bound below 4^-40.
    let mut state = n.iter_u64_digits().next().unwrap_or(1) ^ 0xECC_F0E6E_u64;
    let span = n - 3u32;
    let words = (n.bits() / 64 + 1) as usize;
    while rounds < MILLER_RABIN_ROUNDS {
        let mut digits = Vec::with_capacity(words);
        for _ in 0..words {
            state = splitmix64(state);
            digits.push(state);
        }
        let base = BigUint::new(
            digits
                .iter()
                .flat_map(|w| [(*w & 0xFFFF_FFFF) as u32, (*w >> 32) as u32])
                .collect(),
        ) % &span
            + 2u32;
        if miller_rabin_witness(n, &base, &d, s) {
            return false;
        }
        rounds += 1;
    }
    true
}

/// Draws a random prime with exactly `bits` significant bits from `rng`.
pub fn get_prime_for_p(bits: u32, rng: &mut ForgeRng) -> BigUint {
    assert!(bits >= 4, "prime size below 4 bits is not supported");
    loop {
        let mut candidate = rng.gen_biguint(bits as u64);
        candidate.set_bit(bits as u64 - 1, true);
        candidate.set_bit(0, true);
        if is_prime(&candidate) {
            return candidate;
        }
    }
}

/// Scans `x = 0, 1, 2, ...` for the first `x` whose `x^3 + ax + b` is a
/// nonzero quadratic residue, returning `(x, sqrt(rhs))`.
///
/// The scan is bounded by `limits.max_x` (and by `p`) and by the optional
/// wall-clock budget.
pub fn find_generator_point(
    a: &BigUint,
    b: &BigUint,
    p: &BigUint,
    limits: &ScanLimits,
) -> Result<ECPoint, EcError> {
    let deadline = limits
        .time_budget_secs
        .map(|secs| Instant::now() + Duration::from_secs_f64(secs));
    let bound = p.to_u64().map_or(limits.max_x, |p| p.min(limits.max_x));
    let mut x = BigUint::zero();
    for i in 0..bound {
        if let Some(deadline) = deadline {
            if i % 64 == 0 && Instant::now() > deadline {
                return Err(EcError::Timeout);
            }
        }
        let rhs = ((&x * &x * &x) + a * &x + b) % p;
        if legendre_symbol(&rhs, p) == 1 {
            let y = tonelli_shanks(&rhs, p).expect("rhs verified residue");
            return Ok(ECPoint::affine(x, y));
        }
        x += 1u32;
    }
    Err(EcError::NoGeneratorPoint)
}

fn pow_mod_u64(base: u64, mut exp: u64, modulus: u64) -> u64 {
    let mut acc: u128 = 1;
    let m = modulus as u128;
    let mut b = (base % modulus) as u128;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = acc * b % m;
        }
        b = b * b % m;
        exp >>= 1;
    }
    acc as u64
}

fn legendre_u64(a: u64, p: u64) -> i64 {
    let ls = pow_mod_u64(a % p, (p - 1) / 2, p);
    if ls == p - 1 {
        -1
    } else {
        ls as i64
    }
}

/// Exhaustive point count `#E(F_p)` including infinity, for `p <= 2^20`.
///
/// Test oracle for order-dependent properties; guarded so it cannot be asked
/// to enumerate a cryptographic field.
pub fn count_points_bruteforce(
    a: &BigUint,
    b: &BigUint,
    p: &BigUint,
) -> Result<BigUint, EcError> {
    let p64 = p.to_u64().filter(|v| *v <= 1 << 20).ok_or(EcError::TooLarge)?;
    let a64 = (a % p).to_u64().expect("reduced below 2^20");
    let b64 = (b % p).to_u64().expect("reduced below 2^20");
    let mut count: u64 = 1; // infinity
    for x in 0..p64 {
        let rhs = ((x * x % p64) * x % p64 + a64 * x % p64 + b64) % p64;
        count += (1 + legendre_u64(rhs, p64)) as u64;
    }
    Ok(BigUint::from(count))
}

/// Produces a full parameter set: a fresh prime, non-singular random
/// coefficients, a scanned generator point, and the declared order/cofactor
/// convention `n = p - 1`, `h = 1`.
///
/// Generator-search failures and timeouts restart the whole draw with a new
/// prime.
pub fn generate_curve(bits: u32, limits: &ScanLimits, rng: &mut ForgeRng) -> CurveParams {
    loop {
        let p = get_prime_for_p(bits, rng);
        let (a, b) = loop {
            let a = rng.gen_biguint_below(&p);
            let b = rng.gen_biguint_below(&p);
            if !curve_discriminant(&a, &b, &p).is_zero() {
                break (a, b);
            }
        };
        match find_generator_point(&a, &b, &p, limits) {
            Ok(g) => {
                let n = &p - 1u32;
                return CurveParams {
                    a,
                    b,
                    p,
                    g,
                    n,
                    h: BigUint::one(),
                };
            }
            Err(_) => continue,
        }
    }
}
