//! The order-processing integration simulation: parameter-file I/O, key
//! generation, ECDH agreement, XOR-stream encryption keyed by an ephemeral
//! curve point, HMAC authentication, an ERP-side server, and a storefront
//! client replaying an orders dataset.
//!
//! The message cipher is deliberately minimal (every byte XORed with the low
//! byte of the shared point's x-coordinate): a protocol testbed, not a
//! confidentiality tool.

mod client;
mod server;

pub use client::{fetch_params, fetch_public_key, load_orders_csv, run_entity_a, LatencyStats, OrdersSource, ReplayOptions, ReplaySummary};
pub use server::{serve_entity_b, AcceptedOrder, EntityBHandle, ServeConfig};

use std::collections::HashMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use hmac::{Hmac, Mac};
use num_bigint::{BigUint, RandBigInt};
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::ecmath::{ec_scalar_multiplication, CurveParams, ECPoint};
use crate::rng::ForgeRng;

/// Built-in parameter files in the seven-line `key=value` format.
pub const SECP256K1_TXT: &str = include_str!("../../assets/secp256k1.txt");
pub const BRAINPOOL_P256R1_TXT: &str = include_str!("../../assets/brainpoolP256r1.txt");
/// Bundled synthetic orders dataset in the classic online-retail schema.
pub const ORDERS_CSV: &str = include_str!("../../assets/orders.csv");

const PARAM_KEYS: [&str; 7] = ["p", "a", "b", "Gx", "Gy", "n", "h"];

#[derive(Debug, Error)]
pub enum SimError {
    #[error("parameter file is missing key `{0}`")]
    MissingKey(&'static str),
    #[error("parameter file line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("peer public key is not a valid point on the curve")]
    OffCurve,
    #[error("shared secret computation hit the point at infinity")]
    InfinityResult,
    #[error("public key is not a valid point on the elliptic curve")]
    InvalidPublicKey,
    #[error("encryption failed: kQ resulted in the point at infinity")]
    EncryptionFailed,
    #[error("decryption failed: invalid ciphertext point")]
    DecryptionFailed,
    #[error("generator point must not be at infinity")]
    InfiniteGenerator,
    #[error("curve rejected: {0}")]
    InvalidCurve(String),
    #[error("http error: {0}")]
    Http(String),
    #[error("server error: {0}")]
    Server(String),
}

/// Which parameter set a component should load.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParamsSource {
    Ga,
    Pso,
    Secp256k1,
    BrainpoolP256r1,
    Path(PathBuf),
}

impl FromStr for ParamsSource {
    type Err = std::convert::Infallible;

    /// Accepts both the short names used by the command line and the numeric
    /// menu options (`1` through `4`); anything else is a file path.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "ga" | "1" => ParamsSource::Ga,
            "pso" | "2" => ParamsSource::Pso,
            "secp256k1" | "3" => ParamsSource::Secp256k1,
            "brainpoolP256r1" | "brainpoolp256r1" | "4" => ParamsSource::BrainpoolP256r1,
            other => ParamsSource::Path(PathBuf::from(other)),
        })
    }
}

impl fmt::Display for ParamsSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParamsSource::Ga => f.write_str("ga"),
            ParamsSource::Pso => f.write_str("pso"),
            ParamsSource::Secp256k1 => f.write_str("secp256k1"),
            ParamsSource::BrainpoolP256r1 => f.write_str("brainpoolP256r1"),
            ParamsSource::Path(p) => write!(f, "{}", p.display()),
        }
    }
}

/// Parses the seven-line `key=value` parameter format.
pub fn parse_params_text(text: &str) -> Result<CurveParams, SimError> {
    let mut values: HashMap<&str, BigUint> = HashMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| SimError::Parse {
            line: idx + 1,
            reason: "expected key=value".into(),
        })?;
        let key = PARAM_KEYS
            .iter()
            .find(|k| **k == key.trim())
            .ok_or_else(|| SimError::Parse {
                line: idx + 1,
                reason: format!("unknown key `{}`", key.trim()),
            })?;
        let value = BigUint::from_str(value.trim()).map_err(|e| SimError::Parse {
            line: idx + 1,
            reason: format!("non-integer value: {e}"),
        })?;
        values.insert(key, value);
    }
    for key in PARAM_KEYS {
        if !values.contains_key(key) {
            return Err(SimError::MissingKey(key));
        }
    }
    let g = ECPoint::affine(values.remove("Gx").unwrap(), values.remove("Gy").unwrap());
    Ok(CurveParams {
        a: values.remove("a").unwrap(),
        b: values.remove("b").unwrap(),
        p: values.remove("p").unwrap(),
        g,
        n: values.remove("n").unwrap(),
        h: values.remove("h").unwrap(),
    })
}

/// Renders parameters in the file format: seven `key=value` lines in the
/// order `p, a, b, Gx, Gy, n, h`.
pub fn params_to_text(params: &CurveParams) -> Result<String, SimError> {
    let (gx, gy) = match &params.g {
        ECPoint::Infinity => return Err(SimError::InfiniteGenerator),
        ECPoint::Affine { x, y } => (x, y),
    };
    Ok(format!(
        "p={}\na={}\nb={}\nGx={}\nGy={}\nn={}\nh={}\n",
        params.p, params.a, params.b, gx, gy, params.n, params.h
    ))
}

/// Loads a parameter set: the optimizer outputs resolve relative to
/// `params_dir`, the well-known curves come bundled, and paths load directly.
pub fn load_params(source: &ParamsSource, params_dir: &Path) -> Result<CurveParams, SimError> {
    let text = match source {
        ParamsSource::Ga => std::fs::read_to_string(params_dir.join("ga_ecc_params.txt"))?,
        ParamsSource::Pso => std::fs::read_to_string(params_dir.join("pso_ecc_params.txt"))?,
        ParamsSource::Secp256k1 => SECP256K1_TXT.to_string(),
        ParamsSource::BrainpoolP256r1 => BRAINPOOL_P256R1_TXT.to_string(),
        ParamsSource::Path(path) => std::fs::read_to_string(path)?,
    };
    parse_params_text(&text)
}

/// A private scalar and its public point.
#[derive(Debug, Clone)]
pub struct KeyPair {
    pub private: BigUint,
    pub public: ECPoint,
}

impl KeyPair {
    /// Draws a private key and derives the public point, redrawing in the
    /// degenerate case where the multiple lands on infinity.
    pub fn generate(params: &CurveParams, rng: &mut ForgeRng) -> Self {
        for _ in 0..64 {
            let private = generate_private_key(params, rng);
            let public = ec_scalar_multiplication(&params.g, &private, params);
            if !public.is_infinity() {
                return KeyPair { private, public };
            }
        }
        panic!("generator produces only infinity multiples");
    }
}

/// Uniform scalar in `[1, n-1]`.
pub fn generate_private_key(params: &CurveParams, rng: &mut ForgeRng) -> BigUint {
    rng.gen_biguint_range(&BigUint::one(), &params.n)
}

/// One row of the orders dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderRecord {
    pub invoice_no: String,
    pub stock_code: String,
    pub description: String,
    pub quantity: i64,
    pub invoice_date: String,
    pub unit_price: f64,
    pub customer_id: String,
    pub country: String,
}

/// Wire message carrying one encrypted order.
#[derive(Debug, Clone, PartialEq)]
pub struct OrderEnvelope {
    /// Ephemeral point `k*G`.
    pub c1: ECPoint,
    pub ciphertext: Vec<u8>,
    /// HMAC-SHA256 tag, always 32 bytes.
    pub hmac_tag: Vec<u8>,
    pub sender_public: ECPoint,
}

/// SHA-256 of the shared point's x-coordinate in minimal big-endian bytes.
/// Both sides of an exchange derive identical bytes; the result doubles as
/// the HMAC key.
pub fn ecdh_shared_secret(
    own_private: &BigUint,
    peer_public: &ECPoint,
    params: &CurveParams,
) -> Result<[u8; 32], SimError> {
    if peer_public.is_infinity() || !peer_public.is_on_curve(&params.a, &params.b, &params.p) {
        return Err(SimError::OffCurve);
    }
    let shared = ec_scalar_multiplication(peer_public, own_private, params);
    let x = shared.x().ok_or(SimError::InfinityResult)?;
    let digest = Sha256::digest(x.to_bytes_be());
    Ok(digest.into())
}

fn low_byte(x: &BigUint) -> u8 {
    x.to_bytes_le()[0]
}

/// Encrypts a message for `recipient_public`: draws an ephemeral `k`, sends
/// `C1 = k*G`, and XORs each byte with the low byte of `C2 = k*Q`'s
/// x-coordinate.
pub fn encrypt_message(
    message: &[u8],
    recipient_public: &ECPoint,
    params: &CurveParams,
    rng: &mut ForgeRng,
) -> Result<(ECPoint, Vec<u8>), SimError> {
    if recipient_public.is_infinity()
        || !recipient_public.is_on_curve(&params.a, &params.b, &params.p)
    {
        return Err(SimError::InvalidPublicKey);
    }
    let k = generate_private_key(params, rng);
    let c1 = ec_scalar_multiplication(&params.g, &k, params);
    let c2 = ec_scalar_multiplication(recipient_public, &k, params);
    let key = match c2.x() {
        None => return Err(SimError::EncryptionFailed),
        Some(x) => low_byte(x),
    };
    let ciphertext = message.iter().map(|byte| byte ^ key).collect();
    Ok((c1, ciphertext))
}

/// Inverse of [`encrypt_message`]: recomputes `C2 = private*C1` and XORs.
pub fn decrypt_message(
    c1: &ECPoint,
    ciphertext: &[u8],
    private: &BigUint,
    params: &CurveParams,
) -> Result<Vec<u8>, SimError> {
    if c1.is_infinity() || !c1.is_on_curve(&params.a, &params.b, &params.p) {
        return Err(SimError::DecryptionFailed);
    }
    let c2 = ec_scalar_multiplication(c1, private, params);
    let key = match c2.x() {
        None => return Err(SimError::DecryptionFailed),
        Some(x) => low_byte(x),
    };
    Ok(ciphertext.iter().map(|byte| byte ^ key).collect())
}

/// HMAC-SHA256 tag.
pub fn hmac_sign(key: &[u8], message: &[u8]) -> [u8; 32] {
    let mut mac = Hmac::<Sha256>::new_from_slice(key).expect("any key length is valid");
    mac.update(message);
    mac.finalize().into_bytes().into()
}

/// Constant-time verification of an HMAC-SHA256 tag.
pub fn hmac_verify(key: &[u8], message: &[u8], tag: &[u8]) -> bool {
    let mut mac = Hmac::<Sha256>::new_from_slice(key).expect("any key length is valid");
    mac.update(message);
    mac.verify_slice(tag).is_ok()
}

/// Canonical bytes the envelope tag authenticates: the ephemeral point and
/// the ciphertext. Corrupting any of them breaks verification.
pub fn envelope_mac_input(c1: &ECPoint, ciphertext: &[u8]) -> Vec<u8> {
    let (x, y) = match c1 {
        ECPoint::Infinity => (BigUint::zero(), BigUint::zero()),
        ECPoint::Affine { x, y } => (x.clone(), y.clone()),
    };
    format!("{}:{}:{}", x, y, hex::encode(ciphertext)).into_bytes()
}

// --- wire schema -----------------------------------------------------------

#[derive(Debug, Serialize, Deserialize)]
pub(crate) struct ParamsDto {
    pub status: String,
    pub a: String,
    pub b: String,
    pub p: String,
    #[serde(rename = "Gx")]
    pub gx: String,
    #[serde(rename = "Gy")]
    pub gy: String,
    pub n: String,
    pub h: String,
}

#[derive(Debug, Serialize, Deserialize)]
pub(crate) struct PublicKeyDto {
    pub status: String,
    pub x: String,
    pub y: String,
}

#[derive(Debug, Serialize, Deserialize)]
pub(crate) struct OrderDto {
    #[serde(rename = "C1x")]
    pub c1x: String,
    #[serde(rename = "C1y")]
    pub c1y: String,
    /// Lowercase hex.
    pub ciphertext: String,
    /// Lowercase hex, 32 bytes.
    pub hmac: String,
    pub sender_x: String,
    pub sender_y: String,
    pub payload_meta: String,
}

#[derive(Debug, Serialize, Deserialize)]
pub(crate) struct OrderAckDto {
    pub status: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub order_id: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

pub(crate) fn params_to_dto(params: &CurveParams) -> ParamsDto {
    let (gx, gy) = match &params.g {
        ECPoint::Infinity => (BigUint::zero(), BigUint::zero()),
        ECPoint::Affine { x, y } => (x.clone(), y.clone()),
    };
    ParamsDto {
        status: "ok".into(),
        a: params.a.to_string(),
        b: params.b.to_string(),
        p: params.p.to_string(),
        gx: gx.to_string(),
        gy: gy.to_string(),
        n: params.n.to_string(),
        h: params.h.to_string(),
    }
}

pub(crate) fn dto_to_params(dto: &ParamsDto) -> Result<CurveParams, SimError> {
    let parse = |field: &str, value: &str| -> Result<BigUint, SimError> {
        BigUint::from_str(value).map_err(|e| SimError::Parse {
            line: 0,
            reason: format!("field {field}: {e}"),
        })
    };
    Ok(CurveParams {
        a: parse("a", &dto.a)?,
        b: parse("b", &dto.b)?,
        p: parse("p", &dto.p)?,
        g: ECPoint::affine(parse("Gx", &dto.gx)?, parse("Gy", &dto.gy)?),
        n: parse("n", &dto.n)?,
        h: parse("h", &dto.h)?,
    })
}

pub(crate) fn envelope_to_dto(envelope: &OrderEnvelope, payload_meta: String) -> OrderDto {
    let coord = |p: &ECPoint| -> (String, String) {
        match p {
            ECPoint::Infinity => ("0".into(), "0".into()),
            ECPoint::Affine { x, y } => (x.to_string(), y.to_string()),
        }
    };
    let (c1x, c1y) = coord(&envelope.c1);
    let (sender_x, sender_y) = coord(&envelope.sender_public);
    OrderDto {
        c1x,
        c1y,
        ciphertext: hex::encode(&envelope.ciphertext),
        hmac: hex::encode(&envelope.hmac_tag),
        sender_x,
        sender_y,
        payload_meta,
    }
}

pub(crate) fn dto_to_envelope(dto: &OrderDto) -> Result<OrderEnvelope, SimError> {
    let parse = |field: &str, value: &str| -> Result<BigUint, SimError> {
        BigUint::from_str(value).map_err(|e| SimError::Parse {
            line: 0,
            reason: format!("field {field}: {e}"),
        })
    };
    let ciphertext = hex::decode(&dto.ciphertext).map_err(|e| SimError::Parse {
        line: 0,
        reason: format!("ciphertext hex: {e}"),
    })?;
    let hmac_tag = hex::decode(&dto.hmac).map_err(|e| SimError::Parse {
        line: 0,
        reason: format!("hmac hex: {e}"),
    })?;
    if hmac_tag.len() != 32 {
        return Err(SimError::Parse {
            line: 0,
            reason: format!("hmac tag must be 32 bytes, got {}", hmac_tag.len()),
        });
    }
    Ok(OrderEnvelope {
        c1: ECPoint::affine(parse("C1x", &dto.c1x)?, parse("C1y", &dto.c1y)?),
        ciphertext,
        hmac_tag,
        sender_public: ECPoint::affine(
            parse("sender_x", &dto.sender_x)?,
            parse("sender_y", &dto.sender_y)?,
        ),
    })
}
