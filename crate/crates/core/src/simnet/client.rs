//! The storefront-side client ("Entity A"): fetches the server's parameters
//! and public key, then replays an orders dataset as encrypted,
//! HMAC-authenticated envelopes until its end time.

use std::path::PathBuf;
use std::time::{Duration, Instant};

use serde::Serialize;

use crate::rng::ForgeRng;
use crate::simnet::{
    dto_to_params, encrypt_message, envelope_mac_input, envelope_to_dto, hmac_sign, KeyPair,
    OrderAckDto, OrderEnvelope, OrderRecord, ParamsDto, PublicKeyDto, SimError, ORDERS_CSV,
};
use num_bigint::BigUint;
use std::str::FromStr;

/// Where the replayed orders come from.
#[derive(Debug, Clone)]
pub enum OrdersSource {
    /// The bundled 50-row synthetic dataset.
    Bundled,
    Path(PathBuf),
}

/// Replay pacing. `max_orders` is a test hook that stops before the wall
/// clock does.
#[derive(Debug, Clone)]
pub struct ReplayOptions {
    pub duration: Duration,
    pub interval: Duration,
    pub max_orders: Option<u64>,
    pub retry_backoff: Duration,
    pub max_retries: u32,
}

impl Default for ReplayOptions {
    fn default() -> Self {
        ReplayOptions {
            duration: Duration::from_secs(10),
            interval: Duration::from_millis(500),
            max_orders: None,
            retry_backoff: Duration::from_millis(200),
            max_retries: 3,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, Serialize)]
pub struct LatencyStats {
    pub min_ms: f64,
    pub max_ms: f64,
    pub avg_ms: f64,
}

/// What a replay run saw.
#[derive(Debug, Clone, Default, Serialize)]
pub struct ReplaySummary {
    pub sent: u64,
    pub accepted: u64,
    pub rejected: u64,
    pub connection_failures: u64,
    pub skipped_rows: u64,
    pub latency: LatencyStats,
}

/// Parses the orders CSV, skipping (and counting) rows that fail to parse or
/// violate the record invariants (zero quantity, negative price).
pub fn load_orders_csv(text: &str) -> (Vec<OrderRecord>, u64) {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(text.as_bytes());
    let mut records = Vec::new();
    let mut skipped = 0u64;
    for row in reader.records() {
        let Ok(row) = row else {
            skipped += 1;
            continue;
        };
        let parsed = (|| -> Option<OrderRecord> {
            Some(OrderRecord {
                invoice_no: row.get(0)?.to_string(),
                stock_code: row.get(1)?.to_string(),
                description: row.get(2)?.to_string(),
                quantity: row.get(3)?.parse().ok()?,
                invoice_date: row.get(4)?.to_string(),
                unit_price: row.get(5)?.parse().ok()?,
                customer_id: row.get(6)?.to_string(),
                country: row.get(7)?.to_string(),
            })
        })();
        match parsed {
            Some(record) if record.quantity != 0 && record.unit_price >= 0.0 => {
                records.push(record)
            }
            _ => skipped += 1,
        }
    }
    (records, skipped)
}

fn agent() -> ureq::Agent {
    ureq::Agent::new_with_config(
        ureq::Agent::config_builder()
            .http_status_as_error(false)
            .timeout_global(Some(Duration::from_secs(30)))
            .build(),
    )
}

fn get_json<T: serde::de::DeserializeOwned>(
    agent: &ureq::Agent,
    url: &str,
) -> Result<T, SimError> {
    let mut response = agent
        .get(url)
        .call()
        .map_err(|e| SimError::Http(format!("GET {url}: {e}")))?;
    if response.status().as_u16() != 200 {
        return Err(SimError::Http(format!(
            "GET {url}: status {}",
            response.status()
        )));
    }
    response
        .body_mut()
        .read_json()
        .map_err(|e| SimError::Http(format!("GET {url}: bad body: {e}")))
}

/// Fetches Entity B's curve parameters over HTTP.
pub fn fetch_params(server_address: &str) -> Result<crate::ecmath::CurveParams, SimError> {
    let dto: ParamsDto = get_json(&agent(), &format!("{server_address}/ecc_params"))?;
    dto_to_params(&dto)
}

/// Fetches Entity B's public key over HTTP.
pub fn fetch_public_key(server_address: &str) -> Result<crate::ecmath::ECPoint, SimError> {
    let dto: PublicKeyDto = get_json(&agent(), &format!("{server_address}/public_key"))?;
    let parse = |field: &str, v: &str| {
        BigUint::from_str(v).map_err(|e| SimError::Http(format!("bad {field}: {e}")))
    };
    Ok(crate::ecmath::ECPoint::affine(
        parse("x", &dto.x)?,
        parse("y", &dto.y)?,
    ))
}

/// Runs the storefront loop: key setup, then orders cycled from the dataset
/// until the end time (or the `max_orders` hook), one encrypted envelope per
/// order with per-order latency accounting. Connection failures retry with
/// backoff; rows that fail to parse are skipped and counted.
pub fn run_entity_a(
    server_address: &str,
    orders: &OrdersSource,
    opts: &ReplayOptions,
    rng: &mut ForgeRng,
) -> Result<ReplaySummary, SimError> {
    let text = match orders {
        OrdersSource::Bundled => ORDERS_CSV.to_string(),
        OrdersSource::Path(path) => std::fs::read_to_string(path)?,
    };
    let (records, skipped_rows) = load_orders_csv(&text);
    if records.is_empty() {
        return Err(SimError::Server("orders dataset has no usable rows".into()));
    }

    let agent = agent();
    let params = fetch_params(server_address)?;
    let server_public = fetch_public_key(server_address)?;
    let keys = KeyPair::generate(&params, rng);
    let mac_key = crate::simnet::ecdh_shared_secret(&keys.private, &server_public, &params)?;

    let mut summary = ReplaySummary {
        skipped_rows,
        ..ReplaySummary::default()
    };
    let mut latencies: Vec<f64> = Vec::new();
    let order_url = format!("{server_address}/order");
    let end_time = Instant::now() + opts.duration;

    for (index, record) in records.iter().cycle().enumerate() {
        if Instant::now() >= end_time {
            break;
        }
        if let Some(max) = opts.max_orders {
            if summary.sent >= max {
                break;
            }
        }
        let plaintext = serde_json::to_vec(record).expect("record serializes");
        let (c1, ciphertext) = encrypt_message(&plaintext, &server_public, &params, rng)?;
        let tag = hmac_sign(&mac_key, &envelope_mac_input(&c1, &ciphertext));
        let envelope = OrderEnvelope {
            c1,
            ciphertext,
            hmac_tag: tag.to_vec(),
            sender_public: keys.public.clone(),
        };
        let dto = envelope_to_dto(&envelope, format!("order-{index}"));

        summary.sent += 1;
        let mut attempt = 0;
        loop {
            let started = Instant::now();
            match agent.post(&order_url).send_json(&dto) {
                Ok(mut response) => {
                    latencies.push(started.elapsed().as_secs_f64() * 1e3);
                    let accepted = response.status().as_u16() == 200
                        && response
                            .body_mut()
                            .read_json::<OrderAckDto>()
                            .map(|ack| ack.status == "accepted")
                            .unwrap_or(false);
                    if accepted {
                        summary.accepted += 1;
                    } else {
                        summary.rejected += 1;
                    }
                    break;
                }
                Err(_) => {
                    summary.connection_failures += 1;
                    attempt += 1;
                    if attempt > opts.max_retries {
                        break;
                    }
                    std::thread::sleep(opts.retry_backoff);
                }
            }
        }

        // The max_orders test hook runs flat out; paced mode waits between
        // sends and lets the top-of-loop deadline check stop the run.
        if opts.max_orders.is_none() && !opts.interval.is_zero() {
            std::thread::sleep(opts.interval);
        }
    }

    if !latencies.is_empty() {
        summary.latency = LatencyStats {
            min_ms: latencies.iter().copied().fold(f64::INFINITY, f64::min),
            max_ms: latencies.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            avg_ms: latencies.iter().sum::<f64>() / latencies.len() as f64,
        };
    }
    Ok(summary)
}
