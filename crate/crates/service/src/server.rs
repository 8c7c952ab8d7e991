//! WebSocket front end. One engine task owns the session; sockets only
//! forward text frames in and fan state frames out.

use std::net::SocketAddr;
use std::sync::Arc;
use std::time::Duration;

use axum::extract::ws::{Message, WebSocket, WebSocketUpgrade};
use axum::extract::State;
use axum::response::IntoResponse;
use axum::routing::get;
use axum::Router;
use futures::{SinkExt, StreamExt};
use tokio::net::TcpListener;
use tokio::sync::{broadcast, mpsc, oneshot};
use tokio::task::JoinHandle;

use pursuit_core::engine::Scenario;

use crate::protocol::OutboundMsg;
use crate::session::{Outbox, Session};
use crate::ServiceError;

pub const DEFAULT_PORT: u16 = 7420;

#[derive(Debug, Clone)]
pub struct ServeConfig {
    /// Preset name, or the label for `scenario_file`.
    pub scenario: String,
    /// Scenario loaded from disk; when absent the preset named `scenario` is used.
    pub scenario_file: Option<Scenario>,
    pub port: u16,
    /// Wall seconds per sim second; 0 runs as fast as possible.
    pub realtime_factor: f64,
    pub bind: [u8; 4],
}

impl Default for ServeConfig {
    fn default() -> Self {
        Self {
            scenario: "human_leader".into(),
            scenario_file: None,
            port: DEFAULT_PORT,
            realtime_factor: 1.0,
            bind: [127, 0, 0, 1],
        }
    }
}

type ClientId = u64;

enum Ingress {
    Join(ClientId, mpsc::UnboundedSender<Arc<str>>),
    Leave(ClientId),
    Frame(ClientId, String),
}

#[derive(Clone)]
struct Hub {
    ingress: mpsc::UnboundedSender<Ingress>,
    states: broadcast::Sender<Arc<str>>,
    next_id: Arc<std::sync::atomic::AtomicU64>,
}

pub struct ServiceHandle {
    pub addr: SocketAddr,
    shutdown: Option<oneshot::Sender<()>>,
    task: JoinHandle<Result<(), ServiceError>>,
}

impl ServiceHandle {
    pub async fn shutdown(mut self) -> Result<(), ServiceError> {
        if let Some(tx) = self.shutdown.take() {
            let _ = tx.send(());
        }
        self.task.await.map_err(|e| ServiceError::Io(e.to_string()))?
    }

    /// Wait for the server to stop on its own (it only does on error).
    pub async fn wait(self) -> Result<(), ServiceError> {
        self.task.await.map_err(|e| ServiceError::Io(e.to_string()))?
    }
}

/// Bind, start the engine and return once the socket is listening.
pub async fn spawn(config: ServeConfig) -> Result<ServiceHandle, ServiceError> {
    if !(config.realtime_factor.is_finite() && config.realtime_factor >= 0.0) {
        return Err(ServiceError::Config("realtime factor must be >= 0".into()));
    }
    let session = match config.scenario_file {
        Some(s) => Session::with_scenario(&config.scenario, s)?,
        None => Session::new(&config.scenario)?,
    };
    let listener = TcpListener::bind(SocketAddr::from((config.bind, config.port)))
        .await
        .map_err(|e| ServiceError::Io(e.to_string()))?;
    let addr = listener.local_addr().map_err(|e| ServiceError::Io(e.to_string()))?;

    let (ingress_tx, ingress_rx) = mpsc::unbounded_channel();
    let (states, _) = broadcast::channel(256);
    let hub = Hub {
        ingress: ingress_tx,
        states: states.clone(),
        next_id: Arc::new(0.into()),
    };
    let (stop_tx, stop_rx) = oneshot::channel();

    let engine = tokio::spawn(engine_loop(session, config.realtime_factor, ingress_rx, states));
    let app = Router::new()
        .route("/ws", get(upgrade))
        .route("/", get(upgrade))
        .with_state(hub);
    let task = tokio::spawn(async move {
        let served = axum::serve(listener, app)
            .with_graceful_shutdown(async {
                let _ = stop_rx.await;
            })
            .await
            .map_err(|e| ServiceError::Io(e.to_string()));
        engine.abort();
        served
    });
    tracing::info!(%addr, "pursuit service listening");
    Ok(ServiceHandle {
        addr,
        shutdown: Some(stop_tx),
        task,
    })
}

/// Run until the process is interrupted.
pub async fn serve(config: ServeConfig) -> Result<(), ServiceError> {
    let handle = spawn(config).await?;
    tokio::select! {
        r = tokio::signal::ctrl_c() => {
            r.map_err(|e| ServiceError::Io(e.to_string()))?;
            handle.shutdown().await
        }
    }
}

async fn upgrade(ws: WebSocketUpgrade, State(hub): State<Hub>) -> impl IntoResponse {
    ws.on_upgrade(move |socket| client(socket, hub))
}

async fn client(socket: WebSocket, hub: Hub) {
    let id = hub.next_id.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
    let (direct_tx, mut direct_rx) = mpsc::unbounded_channel::<Arc<str>>();
    let mut states = hub.states.subscribe();
    if hub.ingress.send(Ingress::Join(id, direct_tx)).is_err() {
        return;
    }
    let (mut sink, mut stream) = socket.split();

    let outbound = async {
        loop {
            let frame = tokio::select! {
                // Direct replies (catalog, errors) first so a client sees the
                // catalog before any state.
                biased;
                d = direct_rx.recv() => match d {
                    Some(text) => text,
                    None => break,
                },
                s = states.recv() => match s {
                    Ok(text) => text,
                    Err(broadcast::error::RecvError::Lagged(n)) => {
                        tracing::warn!(client = id, skipped = n, "slow client dropped state frames");
                        continue;
                    }
                    Err(broadcast::error::RecvError::Closed) => break,
                },
            };
            if sink.send(Message::Text(frame.as_ref().into())).await.is_err() {
                break;
            }
        }
    };
    let inbound = async {
        while let Some(Ok(msg)) = stream.next().await {
            match msg {
                Message::Text(text) => {
                    if hub.ingress.send(Ingress::Frame(id, text.to_string())).is_err() {
                        break;
                    }
                }
                Message::Binary(_) => {
                    let _ = hub
                        .ingress
                        .send(Ingress::Frame(id, "\u{0}binary frames are not supported".into()));
                }
                Message::Close(_) => break,
                _ => {}
            }
        }
    };
    tokio::select! {
        _ = outbound => {}
        _ = inbound => {}
    }
    let _ = hub.ingress.send(Ingress::Leave(id));
}

struct Clients {
    direct: std::collections::HashMap<ClientId, mpsc::UnboundedSender<Arc<str>>>,
}

impl Clients {
    fn send(&self, id: ClientId, msg: &OutboundMsg) {
        if let Some(tx) = self.direct.get(&id) {
            let _ = tx.send(msg.to_json().into());
        }
    }
}

fn publish(states: &broadcast::Sender<Arc<str>>, msgs: &[OutboundMsg]) {
    for m in msgs {
        // No receivers is fine: the session runs without clients.
        let _ = states.send(m.to_json().into());
    }
}

fn absorb(session: &mut Session, clients: &mut Clients, states: &broadcast::Sender<Arc<str>>, ingress: Ingress) {
    match ingress {
        Ingress::Join(id, tx) => {
            clients.direct.insert(id, tx);
            clients.send(id, &session.catalog());
            clients.send(id, &session.snapshot());
        }
        Ingress::Leave(id) => {
            clients.direct.remove(&id);
        }
        Ingress::Frame(id, text) => {
            let Outbox { reply, broadcast } = match text.strip_prefix('\u{0}') {
                Some(reason) => Outbox {
                    reply: vec![OutboundMsg::error(reason)],
                    ..Outbox::default()
                },
                None => session.handle_text(&text),
            };
            for m in &reply {
                clients.send(id, m);
            }
            publish(states, &broadcast);
        }
    }
}

async fn engine_loop(
    mut session: Session,
    realtime_factor: f64,
    mut ingress: mpsc::UnboundedReceiver<Ingress>,
    states: broadcast::Sender<Arc<str>>,
) {
    let mut clients = Clients {
        direct: Default::default(),
    };
    // Below real time, halve the state rate to bound bandwidth.
    let decimation = if realtime_factor >= 1.0 { 1 } else { 2 };
    let period = Duration::from_secs_f64(session.dt() * realtime_factor);
    let mut ticker = (realtime_factor > 0.0).then(|| {
        let mut t = tokio::time::interval(period);
        t.set_missed_tick_behavior(tokio::time::MissedTickBehavior::Delay);
        t
    });
    loop {
        // Paused sessions only wake for input.
        if session.is_paused() {
            match ingress.recv().await {
                Some(msg) => absorb(&mut session, &mut clients, &states, msg),
                None => return,
            }
            continue;
        }
        match ticker.as_mut() {
            Some(t) => {
                t.tick().await;
            }
            None => tokio::task::yield_now().await,
        }
        loop {
            match ingress.try_recv() {
                Ok(msg) => absorb(&mut session, &mut clients, &states, msg),
                Err(mpsc::error::TryRecvError::Empty) => break,
                Err(mpsc::error::TryRecvError::Disconnected) => return,
            }
        }
        if session.is_paused() {
            continue;
        }
        match session.tick() {
            Ok(out) => {
                let finished = out.broadcast.len() > 1;
                if finished || session.world().tick().is_multiple_of(decimation) {
                    publish(&states, &out.broadcast);
                }
            }
            Err(e) => {
                tracing::error!(error = %e, "engine step failed; pausing session");
                publish(&states, &[OutboundMsg::error(e.to_string())]);
                session.handle(crate::protocol::InboundMsg::Reset);
            }
        }
    }
}
