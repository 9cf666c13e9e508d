//! The ERP-side server ("Entity B"): serves its curve parameters and public
//! key, and accepts encrypted, HMAC-authenticated orders.

use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::{Arc, Mutex};
use std::thread::JoinHandle;
use std::time::Duration;

use tiny_http::{Header, Method, Response, Server};

use crate::ecmath::CurveParams;
use crate::fitness::validate_curve;
use crate::rng::seed_rng;
use crate::simnet::{
    decrypt_message, dto_to_envelope, ecdh_shared_secret, envelope_mac_input, hmac_verify,
    load_params, params_to_dto, KeyPair, OrderAckDto, OrderDto, OrderRecord, ParamsSource,
    PublicKeyDto, SimError,
};

/// Server knobs: worker count, where optimizer parameter files live, and the
/// seed for the server key pair.
#[derive(Debug, Clone)]
pub struct ServeConfig {
    pub workers: usize,
    pub params_dir: PathBuf,
    pub seed: u64,
}

impl Default for ServeConfig {
    fn default() -> Self {
        ServeConfig {
            workers: 2,
            params_dir: PathBuf::from("."),
            seed: 0,
        }
    }
}

/// One successfully decrypted and verified order.
#[derive(Debug, Clone)]
pub struct AcceptedOrder {
    pub id: u64,
    pub payload_meta: String,
    /// The decrypted serialization, byte-identical to what the client sent.
    pub raw: Vec<u8>,
    pub record: OrderRecord,
}

struct ServerState {
    params: CurveParams,
    key_pair: KeyPair,
    orders: Mutex<Vec<AcceptedOrder>>,
    next_id: AtomicU64,
}

/// A running Entity B instance. Dropping the handle stops the workers.
pub struct EntityBHandle {
    addr: SocketAddr,
    stop: Arc<AtomicBool>,
    workers: Vec<JoinHandle<()>>,
    state: Arc<ServerState>,
}

impl EntityBHandle {
    pub fn addr(&self) -> SocketAddr {
        self.addr
    }

    pub fn base_url(&self) -> String {
        format!("http://{}", self.addr)
    }

    pub fn public_key(&self) -> &crate::ecmath::ECPoint {
        &self.state.key_pair.public
    }

    /// The server's private scalar, exposed so attack tests can check a
    /// recovered key against the truth.
    pub fn private_key(&self) -> &num_bigint::BigUint {
        &self.state.key_pair.private
    }

    pub fn params(&self) -> &CurveParams {
        &self.state.params
    }

    /// Snapshot of the in-memory order log.
    pub fn orders(&self) -> Vec<AcceptedOrder> {
        self.state.orders.lock().expect("order log lock").clone()
    }

    pub fn shutdown(mut self) {
        self.stop_workers();
    }

    fn stop_workers(&mut self) {
        self.stop.store(true, Ordering::SeqCst);
        for worker in self.workers.drain(..) {
            let _ = worker.join();
        }
    }
}

impl Drop for EntityBHandle {
    fn drop(&mut self) {
        self.stop_workers();
    }
}

/// Loads and validates the chosen parameter set, generates the server key
/// pair, and starts serving `GET /ecc_params`, `GET /public_key`, and
/// `POST /order` on `bind_address`.
pub fn serve_entity_b(
    params_choice: &ParamsSource,
    bind_address: &str,
    config: &ServeConfig,
) -> Result<EntityBHandle, SimError> {
    let params = load_params(params_choice, &config.params_dir)?;
    validate_curve(&params).map_err(|reason| SimError::InvalidCurve(reason.to_string()))?;
    let mut rng = seed_rng(config.seed);
    let key_pair = KeyPair::generate(&params, &mut rng);

    let server =
        Server::http(bind_address).map_err(|e| SimError::Server(format!("bind failed: {e}")))?;
    let addr = server
        .server_addr()
        .to_ip()
        .ok_or_else(|| SimError::Server("no ip address".into()))?;

    let state = Arc::new(ServerState {
        params,
        key_pair,
        orders: Mutex::new(Vec::new()),
        next_id: AtomicU64::new(1),
    });
    let server = Arc::new(server);
    let stop = Arc::new(AtomicBool::new(false));

    let workers = (0..config.workers.max(1))
        .map(|_| {
            let server = Arc::clone(&server);
            let state = Arc::clone(&state);
            let stop = Arc::clone(&stop);
            std::thread::spawn(move || {
                while !stop.load(Ordering::SeqCst) {
                    match server.recv_timeout(Duration::from_millis(50)) {
                        Ok(Some(request)) => handle_request(request, &state),
                        Ok(None) => continue,
                        Err(_) => break,
                    }
                }
            })
        })
        .collect();

    Ok(EntityBHandle {
        addr,
        stop,
        workers,
        state,
    })
}

fn json_header() -> Header {
    Header::from_bytes(&b"Content-Type"[..], &b"application/json"[..])
        .expect("static header is valid")
}

fn respond_json<T: serde::Serialize>(request: tiny_http::Request, status: u16, body: &T) {
    let payload = serde_json::to_string(body).expect("response serializes");
    let response = Response::from_string(payload)
        .with_status_code(status)
        .with_header(json_header());
    // A peer that hung up mid-response is its own problem.
    let _ = request.respond(response);
}

fn handle_request(mut request: tiny_http::Request, state: &ServerState) {
    let url = request.url().to_string();
    match (request.method().clone(), url.as_str()) {
        (Method::Get, "/ecc_params") => {
            let dto = params_to_dto(&state.params);
            respond_json(request, 200, &dto);
        }
        (Method::Get, "/public_key") => {
            let (x, y) = match &state.key_pair.public {
                crate::ecmath::ECPoint::Infinity => ("0".into(), "0".into()),
                crate::ecmath::ECPoint::Affine { x, y } => (x.to_string(), y.to_string()),
            };
            let dto = PublicKeyDto {
                status: "ok".into(),
                x,
                y,
            };
            respond_json(request, 200, &dto);
        }
        (Method::Post, "/order") => {
            let mut body = String::new();
            if std::io::Read::read_to_string(request.as_reader(), &mut body).is_err() {
                respond_json(request, 400, &ack_err("unreadable body"));
                return;
            }
            let (status, ack) = process_order(&body, state);
            respond_json(request, status, &ack);
        }
        _ => {
            respond_json(request, 404, &ack_err("no such endpoint"));
        }
    }
}

fn ack_err(message: &str) -> OrderAckDto {
    OrderAckDto {
        status: "rejected".into(),
        order_id: None,
        error: Some(message.to_string()),
    }
}

fn process_order(body: &str, state: &ServerState) -> (u16, OrderAckDto) {
    let dto: OrderDto = match serde_json::from_str(body) {
        Ok(dto) => dto,
        Err(e) => return (400, ack_err(&format!("malformed envelope: {e}"))),
    };
    let envelope = match dto_to_envelope(&dto) {
        Ok(env) => env,
        Err(e) => return (400, ack_err(&format!("malformed envelope: {e}"))),
    };
    let params = &state.params;
    if !envelope.c1.is_on_curve(&params.a, &params.b, &params.p) {
        return (400, ack_err("C1 is not on the curve"));
    }
    if !envelope
        .sender_public
        .is_on_curve(&params.a, &params.b, &params.p)
    {
        return (400, ack_err("sender public key is not on the curve"));
    }
    let mac_key = match ecdh_shared_secret(&state.key_pair.private, &envelope.sender_public, params)
    {
        Ok(key) => key,
        Err(e) => return (400, ack_err(&format!("key agreement failed: {e}"))),
    };
    let mac_input = envelope_mac_input(&envelope.c1, &envelope.ciphertext);
    if !hmac_verify(&mac_key, &mac_input, &envelope.hmac_tag) {
        return (400, ack_err("hmac verification failed"));
    }
    let plaintext = match decrypt_message(
        &envelope.c1,
        &envelope.ciphertext,
        &state.key_pair.private,
        params,
    ) {
        Ok(bytes) => bytes,
        Err(e) => return (422, ack_err(&format!("decryption failed: {e}"))),
    };
    let record: OrderRecord = match serde_json::from_slice(&plaintext) {
        Ok(record) => record,
        Err(e) => return (422, ack_err(&format!("decryption produced invalid order: {e}"))),
    };
    let id = state.next_id.fetch_add(1, Ordering::SeqCst);
    state.orders.lock().expect("order log lock").push(AcceptedOrder {
        id,
        payload_meta: dto.payload_meta,
        raw: plaintext,
        record,
    });
    (
        200,
        OrderAckDto {
            status: "accepted".into(),
            order_id: Some(id),
            error: None,
        },
    )
}
