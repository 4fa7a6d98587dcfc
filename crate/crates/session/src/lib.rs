//! Live session server.
//!
//! One worker thread owns the [`Deck`] and produces a packet per hop, paced
//! to real time. Packets are published on a `watch` channel, so each client
//! always sees the latest frame and a slow client only drops frames, never
//! stalls the worker. Clients connect with a WebSocket upgrade on `/ws`:
//! binary messages carry frame packets, text messages carry JSON control
//! messages and their replies.
//!
//! Control messages queue to the worker and are applied between hops. The
//! reply to a message is queued to its client before the first frame built
//! under the new settings is published, and client tasks always flush
//! replies before frames, so the ack reaches the client first.

use std::io;
use std::net::SocketAddr;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::mpsc::{self, RecvTimeoutError};
use std::sync::Arc;
use std::thread;
use std::time::{Duration, Instant};

use axum::body::Bytes;
use axum::extract::ws::{Message, WebSocket, WebSocketUpgrade};
use axum::extract::State;
use axum::response::IntoResponse;
use axum::routing::get;
use axum::Router;
use photism::audio::HOP_SECONDS;
use photism::{ControlMessage, Deck, Reply};
use tokio::net::TcpListener;
use tokio::sync::{mpsc as tmpsc, oneshot, watch};

/// Latest published frame: index and encoded packet.
pub type Frame = Option<(u64, Bytes)>;

type Command = (ControlMessage, tmpsc::UnboundedSender<Reply>);

/// How long an idle worker waits for a control message before rechecking shutdown.
const IDLE_POLL: Duration = Duration::from_millis(50);

#[derive(Clone)]
struct AppState {
    frames: watch::Receiver<Frame>,
    control: mpsc::Sender<Command>,
}

/// A running session. Dropping it without [`Session::shutdown`] leaves the
/// server running until the runtime stops.
pub struct Session {
    addr: SocketAddr,
    stop: Arc<AtomicBool>,
    shutdown: oneshot::Sender<()>,
    server: tokio::task::JoinHandle<io::Result<()>>,
    worker: thread::JoinHandle<()>,
}

impl Session {
    /// Binds `addr` and starts the worker and the server.
    pub async fn start(deck: Deck, addr: SocketAddr) -> io::Result<Self> {
        let listener = TcpListener::bind(addr).await?;
        let addr = listener.local_addr()?;
        let (frames_tx, frames_rx) = watch::channel(None);
        let (control_tx, control_rx) = mpsc::channel();
        let stop = Arc::new(AtomicBool::new(false));
        let worker = {
            let stop = stop.clone();
            thread::Builder::new()
                .name("photism-pipeline".into())
                .spawn(move || run_worker(deck, control_rx, frames_tx, &stop))?
        };
        let app = router(AppState { frames: frames_rx, control: control_tx });
        let (shutdown, signal) = oneshot::channel::<()>();
        let server = tokio::spawn(async move {
            axum::serve(listener, app)
                .with_graceful_shutdown(async {
                    let _ = signal.await;
                })
                .await
        });
        log::info!("session listening on {addr}");
        Ok(Self { addr, stop, shutdown, server, worker })
    }

    pub fn local_addr(&self) -> SocketAddr {
        self.addr
    }

    /// Stops accepting clients, waits for the server, and joins the worker.
    pub async fn shutdown(self) -> io::Result<()> {
        self.stop.store(true, Ordering::Relaxed);
        let _ = self.shutdown.send(());
        let served = self.server.await.map_err(io::Error::other)?;
        let worker = self.worker;
        tokio::task::spawn_blocking(move || worker.join())
            .await
            .map_err(io::Error::other)?
            .map_err(|_| io::Error::other("pipeline worker panicked"))?;
        served
    }
}

/// Serves `deck` on `addr` until Ctrl-C.
pub async fn serve(deck: Deck, addr: SocketAddr) -> io::Result<()> {
    let session = Session::start(deck, addr).await?;
    tokio::signal::ctrl_c().await?;
    log::info!("shutting down");
    session.shutdown().await
}

fn router(state: AppState) -> Router {
    Router::new()
        .route("/", get(|| async { "photism session: open a WebSocket on /ws\n" }))
        .route("/ws", get(upgrade))
        .with_state(state)
}

async fn upgrade(ws: WebSocketUpgrade, State(state): State<AppState>) -> impl IntoResponse {
    ws.on_upgrade(move |socket| client(socket, state))
}

async fn send_reply(socket: &mut WebSocket, reply: &Reply) -> bool {
    socket.send(Message::Text(reply.to_json().into())).await.is_ok()
}

async fn client(mut socket: WebSocket, state: AppState) {
    let AppState { mut frames, control } = state;
    let (reply_tx, mut reply_rx) = tmpsc::unbounded_channel();
    let mut last_sent: Option<u64> = None;
    loop {
        tokio::select! {
            biased;
            Some(reply) = reply_rx.recv() => {
                if !send_reply(&mut socket, &reply).await {
                    break;
                }
            }
            incoming = socket.recv() => {
                let text = match incoming {
                    Some(Ok(Message::Text(text))) => text,
                    Some(Ok(Message::Binary(_))) => {
                        if !send_reply(&mut socket, &Reply::error("control messages must be JSON text")).await {
                            break;
                        }
                        continue;
                    }
                    Some(Ok(Message::Close(_))) | None | Some(Err(_)) => break,
                    Some(Ok(_)) => continue,
                };
                match ControlMessage::from_json(text.as_str()) {
                    Ok(msg) => {
                        if control.send((msg, reply_tx.clone())).is_err() {
                            let _ = send_reply(&mut socket, &Reply::error("pipeline stopped")).await;
                            break;
                        }
                    }
                    Err(e) => {
                        if !send_reply(&mut socket, &Reply::error(e)).await {
                            break;
                        }
                    }
                }
            }
            changed = frames.changed() => {
                if changed.is_err() {
                    break;
                }
                let frame = frames.borrow_and_update().clone();
                if let Some((index, bytes)) = frame {
                    if last_sent.is_some_and(|last| index <= last) {
                        continue;
                    }
                    if socket.send(Message::Binary(bytes)).await.is_err() {
                        break;
                    }
                    last_sent = Some(index);
                }
            }
        }
    }
}

fn handle(deck: &mut Deck, (msg, reply_to): Command) {
    let reply = deck.handle(&msg);
    if let Reply::Error { message } = &reply {
        log::warn!("control rejected: {message}");
    }
    let _ = reply_to.send(reply);
}

/// Pipeline loop: between hops, apply queued controls; on each hop deadline,
/// render and publish one frame.
fn run_worker(mut deck: Deck, control: mpsc::Receiver<Command>, frames: watch::Sender<Frame>, stop: &AtomicBool) {
    let hop = Duration::from_secs_f64(HOP_SECONDS);
    let mut deadline = Instant::now();
    while !stop.load(Ordering::Relaxed) {
        if !deck.is_playing() {
            match control.recv_timeout(IDLE_POLL) {
                Ok(cmd) => handle(&mut deck, cmd),
                Err(RecvTimeoutError::Timeout) => {}
                Err(RecvTimeoutError::Disconnected) => return,
            }
            deadline = Instant::now();
            continue;
        }
        // Wait out the rest of this hop, applying controls as they arrive.
        loop {
            let now = Instant::now();
            if now >= deadline {
                break;
            }
            match control.recv_timeout(deadline - now) {
                Ok(cmd) => handle(&mut deck, cmd),
                Err(RecvTimeoutError::Timeout) => break,
                Err(RecvTimeoutError::Disconnected) => return,
            }
        }
        while let Ok(cmd) = control.try_recv() {
            handle(&mut deck, cmd);
        }
        match deck.tick() {
            Ok(Some(out)) => {
                let index = out.packet.frame_index;
                frames.send_replace(Some((index, Bytes::from(out.packet.encode()))));
            }
            Ok(None) => {}
            Err(e) => log::error!("audio input failed: {e}"),
        }
        deadline += hop;
        // After a stall, resume pacing from now rather than bursting to catch up.
        let now = Instant::now();
        if now > deadline + hop {
            deadline = now;
        }
    }
}
