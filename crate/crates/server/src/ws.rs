//! The player's WebSocket. Snapshots come from the latest view, so a slow
//! client skips frames instead of queueing them; chat, score and phase
//! messages are never skipped unless the client falls far behind.

use std::sync::atomic::Ordering;
use std::sync::Arc;

use axum::extract::ws::{Message, WebSocket, WebSocketUpgrade};
use axum::extract::{Path, State};
use axum::response::Response;
use futures_util::{SinkExt, StreamExt};
use tokio::sync::broadcast::error::RecvError;

use hla_core::session::wire::{decode, encode, ClientMessage, Phase, ServerMessage, SnapshotEncoder};

use crate::session::{Inbound, SessionHandle};
use crate::{error_reply, Lobby};

pub(crate) async fn upgrade(
    State(lobby): State<Arc<Lobby>>,
    Path(id): Path<String>,
    ws: WebSocketUpgrade,
) -> Response {
    match lobby.get(&id) {
        Ok(handle) => ws.on_upgrade(move |socket| attach(socket, handle)),
        Err(e) => error_reply(&e),
    }
}

async fn send(socket: &mut futures_util::stream::SplitSink<WebSocket, Message>, msg: &ServerMessage) -> bool {
    socket.send(Message::Text(encode(msg).into())).await.is_ok()
}

async fn attach(socket: WebSocket, handle: Arc<SessionHandle>) {
    let (mut tx, mut rx) = socket.split();
    if handle.occupied.swap(true, Ordering::SeqCst) {
        let busy = ServerMessage::Error {
            message: "session already has a player".into(),
        };
        let _ = send(&mut tx, &busy).await;
        let _ = tx.close().await;
        return;
    }
    // Subscribe before reading the phase so no change slips between them.
    let mut messages = handle.messages.subscribe();
    let mut views = handle.views.clone();
    let mut phase = *handle.phase.borrow();
    let _ = handle.inbox.send(Inbound::Connected);
    let mut encoder = SnapshotEncoder::default();

    let view = views.borrow_and_update().clone();
    let mut open = send(&mut tx, &handle.info.welcome()).await
        && send(&mut tx, &ServerMessage::Phase { phase }).await
        && send(&mut tx, &encoder.encode_view(view)).await;

    let mut views_open = true;
    while open && phase != Phase::Finished {
        tokio::select! {
            biased;
            // The worker drops its end when the game is over; the phase
            // change is still on its way through the broadcast.
            changed = views.changed(), if views_open => match changed {
                Ok(()) => {
                    let view = views.borrow_and_update().clone();
                    open = send(&mut tx, &encoder.encode_view(view)).await;
                }
                Err(_) => views_open = false,
            },
            msg = messages.recv() => match msg {
                Ok(msg) => {
                    if let ServerMessage::Phase { phase: p } = msg {
                        phase = p;
                    }
                    open = send(&mut tx, &msg).await;
                }
                Err(RecvError::Lagged(_)) => {}
                Err(RecvError::Closed) => break,
            },
            frame = rx.next() => match frame {
                Some(Ok(Message::Text(text))) => match decode::<ClientMessage>(&text) {
                    Ok(c) => {
                        let _ = handle.inbox.send(Inbound::Client(c));
                    }
                    Err(e) => open = send(&mut tx, &ServerMessage::Error { message: e.to_string() }).await,
                },
                Some(Ok(Message::Close(_))) | Some(Err(_)) | None => break,
                Some(Ok(_)) => {}
            },
        }
    }
    if phase == Phase::Finished {
        // The last view may have landed together with the phase change.
        if views.has_changed().unwrap_or(false) {
            let view = views.borrow_and_update().clone();
            let _ = send(&mut tx, &encoder.encode_view(view)).await;
        }
        let _ = tx.close().await;
    }
    handle.occupied.store(false, Ordering::SeqCst);
    let _ = handle.inbox.send(Inbound::Disconnected);
}
