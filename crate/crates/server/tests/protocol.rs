//! The protocol document must name every message type and field that goes
//! over the wire.

use serde_json::{json, Value};

use hla_core::env::{AtomicAction, GameConfig, MapSpec};
use hla_core::runtime::AgentKind;
use hla_core::session::wire::{
    decode, encode, ClientMessage, LobbyMessage, Phase, ServerMessage, SnapshotBody, Speaker, StateView,
};
use hla_core::session::SCHEMA_VERSION;

const DOC: &str = include_str!("../PROTOCOL.md");

fn server_messages() -> Vec<ServerMessage> {
    let map = MapSpec::builtin("quick").unwrap();
    let config = GameConfig::for_map("quick");
    let state = hla_core::env::GameState::new(config.clone(), map.clone()).unwrap();
    vec![
        ServerMessage::Welcome {
            session_id: "s".into(),
            map,
            config,
            agent: AgentKind::Hla,
        },
        ServerMessage::Snapshot {
            tick: 0,
            body: SnapshotBody::Full {
                view: StateView::of(&state),
            },
        },
        ServerMessage::Snapshot {
            tick: 1,
            body: SnapshotBody::Delta { patch: json!({"tick": 1}) },
        },
        ServerMessage::Chat {
            from: Speaker::Ai,
            text: "ok".into(),
            game_s: 0.0,
        },
        ServerMessage::Score {
            score: 0,
            events: Vec::new(),
        },
        ServerMessage::Phase { phase: Phase::Paused },
        ServerMessage::Error { message: "x".into() },
    ]
}

fn client_messages() -> Vec<ClientMessage> {
    vec![
        ClientMessage::Start,
        ClientMessage::Action {
            action: AtomicAction::Left,
        },
        ClientMessage::Chat { text: "hi".into() },
        ClientMessage::Pause { paused: true },
    ]
}

fn lobby_messages() -> Vec<LobbyMessage> {
    vec![
        LobbyMessage::Maps { maps: vec!["quick".into()] },
        LobbyMessage::Agents {
            agents: AgentKind::ALL.to_vec(),
        },
        LobbyMessage::Created {
            session_id: "s".into(),
            map: "Quick".into(),
            agent: AgentKind::Hla,
            tick_rate: 3.5,
            phase: Phase::Lobby,
        },
        LobbyMessage::Error { message: "x".into() },
    ]
}

fn check_documented(wire: &str) {
    let value: Value = serde_json::from_str(wire).unwrap();
    assert_eq!(value["v"], json!(SCHEMA_VERSION));
    let kind = value["type"].as_str().unwrap();
    assert!(DOC.contains(&format!("`{kind}`")), "type {kind} missing from the protocol doc");
    for key in value.as_object().unwrap().keys() {
        if key != "v" && key != "type" {
            assert!(DOC.contains(&format!("\"{key}\"")), "field {key} of {kind} missing from the protocol doc");
        }
    }
}

#[test]
fn every_message_is_documented_and_round_trips() {
    for msg in server_messages() {
        let wire = encode(&msg);
        check_documented(&wire);
        assert_eq!(decode::<ServerMessage>(&wire).unwrap(), msg);
    }
    for msg in client_messages() {
        let wire = encode(&msg);
        check_documented(&wire);
        assert_eq!(decode::<ClientMessage>(&wire).unwrap(), msg);
    }
    for msg in lobby_messages() {
        let wire = encode(&msg);
        check_documented(&wire);
        assert_eq!(decode::<LobbyMessage>(&wire).unwrap(), msg);
    }
}

#[test]
fn documented_values_match_the_enums() {
    for phase in [Phase::Lobby, Phase::Running, Phase::Paused, Phase::Finished] {
        let name = serde_json::to_value(phase).unwrap();
        assert!(DOC.contains(&format!("\"{}\"", name.as_str().unwrap())));
    }
    for a in [AtomicAction::Up, AtomicAction::Down, AtomicAction::Left, AtomicAction::Right, AtomicAction::Noop] {
        let name = serde_json::to_value(a).unwrap();
        assert!(DOC.contains(&format!("\"{}\"", name.as_str().unwrap())));
    }
    for mode in ["full", "delta"] {
        assert!(DOC.contains(&format!("`{mode}`")));
    }
}

#[test]
fn other_schema_versions_are_refused() {
    let wire = encode(&ClientMessage::Start).replace(&format!("\"v\":{SCHEMA_VERSION}"), "\"v\":99");
    assert!(decode::<ClientMessage>(&wire).is_err());
}
