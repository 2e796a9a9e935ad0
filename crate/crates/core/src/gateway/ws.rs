use std::time::Duration;

use axum::extract::ws::{Message, WebSocket, WebSocketUpgrade};
use axum::extract::State;
use axum::response::Response;

use super::AppState;

/// Pings sent without a pong before the connection is closed.
pub const MAX_MISSED_PONGS: u32 = 2;
const SEND_TIMEOUT: Duration = Duration::from_secs(5);

pub async fn results(ws: WebSocketUpgrade, State(st): State<AppState>) -> Response {
    ws.on_upgrade(move |socket| serve(socket, st))
}

async fn serve(mut socket: WebSocket, st: AppState) {
    let mut sub = st.hub.broadcaster.subscribe();
    let id = sub.id;
    tracing::debug!(subscriber = id, "push subscriber connected");
    let mut ticker = tokio::time::interval(st.heartbeat);
    ticker.tick().await;
    let mut awaiting_pong = false;
    let mut missed = 0;
    loop {
        tokio::select! {
            msg = sub.rx.recv() => {
                let Some(text) = msg else {
                    // Dropped by the broadcaster for falling behind.
                    let _ = socket.send(Message::Close(None)).await;
                    break;
                };
                let sent = tokio::time::timeout(SEND_TIMEOUT, socket.send(Message::Text(text.as_ref().into()))).await;
                if !matches!(sent, Ok(Ok(()))) {
                    break;
                }
            }
            incoming = socket.recv() => match incoming {
                Some(Ok(Message::Pong(_))) => {
                    awaiting_pong = false;
                    missed = 0;
                }
                Some(Ok(Message::Close(_))) | None | Some(Err(_)) => break,
                Some(Ok(_)) => {}
            },
            _ = ticker.tick() => {
                if awaiting_pong {
                    missed += 1;
                    if missed >= MAX_MISSED_PONGS {
                        tracing::info!(subscriber = id, "closing push channel after missed pongs");
                        let _ = socket.send(Message::Close(None)).await;
                        break;
                    }
                }
                if socket.send(Message::Ping(Default::default())).await.is_err() {
                    break;
                }
                awaiting_pong = true;
            }
        }
    }
    st.hub.broadcaster.unsubscribe(id);
    tracing::debug!(subscriber = id, "push subscriber disconnected");
}
