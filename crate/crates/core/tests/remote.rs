//! The HTTP backends against a local stub that speaks just enough of the
//! chat and completions endpoints.

use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpListener;
use std::sync::mpsc;
use std::thread;
use std::time::Duration;

use serde_json::{json, Value};

use hla_core::llm::{Backend, GatewayError, PromptRequest, RemoteChat, RemoteScoring};

struct Seen {
    path: String,
    auth: Option<String>,
    body: Value,
}

/// Serves `replies` in order, one connection each, and reports what came in.
fn stub(replies: Vec<(u16, Value, Duration)>) -> (String, mpsc::Receiver<Seen>) {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let url = format!("http://{}/v1", listener.local_addr().unwrap());
    let (tx, rx) = mpsc::channel();
    thread::spawn(move || {
        for (status, reply, delay) in replies {
            let Ok((stream, _)) = listener.accept() else { return };
            let mut reader = BufReader::new(stream.try_clone().unwrap());
            let mut line = String::new();
            reader.read_line(&mut line).unwrap();
            let path = line.split_whitespace().nth(1).unwrap_or_default().to_string();
            let (mut len, mut auth) = (0, None);
            loop {
                let mut h = String::new();
                reader.read_line(&mut h).unwrap();
                let h = h.trim_end();
                if h.is_empty() {
                    break;
                }
                let (name, value) = h.split_once(':').unwrap();
                match name.to_ascii_lowercase().as_str() {
                    "content-length" => len = value.trim().parse().unwrap(),
                    "authorization" => auth = Some(value.trim().to_string()),
                    _ => {}
                }
            }
            let mut body = vec![0; len];
            reader.read_exact(&mut body).unwrap();
            let _ = tx.send(Seen {
                path,
                auth,
                body: serde_json::from_slice(&body).unwrap(),
            });
            thread::sleep(delay);
            let text = reply.to_string();
            let mut stream = stream;
            let _ = write!(
                stream,
                "HTTP/1.1 {status} X\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{text}",
                text.len()
            );
        }
    });
    (url, rx)
}

fn ok(reply: Value) -> (u16, Value, Duration) {
    (200, reply, Duration::ZERO)
}

/// Echoed completion for `prefix + candidate`, split into a prefix token
/// and one token per candidate word with the given log-probabilities.
fn echoed(index: usize, prefix: &str, candidate: &str, lps: &[f64]) -> Value {
    let mut offsets = vec![json!(0)];
    let mut values = vec![Value::Null];
    let mut at = prefix.len();
    for (word, lp) in candidate.split_inclusive(' ').zip(lps) {
        offsets.push(json!(at));
        values.push(json!(lp));
        at += word.len();
    }
    json!({"index": index, "text": format!("{prefix}{candidate}"),
           "logprobs": {"text_offset": offsets, "token_logprobs": values}})
}

#[test]
fn chat_sends_the_prompt_and_trims_the_reply() {
    let (url, seen) = stub(vec![ok(json!({"choices": [{"message": {"content": "  Chop Onion\n"}}]}))]);
    std::env::set_var("HLA_TEST_CHAT_KEY", "sekret");
    let chat = RemoteChat::new(&url, "m1", "HLA_TEST_CHAT_KEY");
    let out = chat.generate(&PromptRequest::new("What now?", 5000)).unwrap();
    assert_eq!(out.text, "Chop Onion");
    assert!(out.latency_ms >= 0.0);
    let req = seen.recv().unwrap();
    assert_eq!(req.path, "/v1/chat/completions");
    assert_eq!(req.auth.as_deref(), Some("Bearer sekret"));
    assert_eq!(req.body["model"], "m1");
    assert_eq!(req.body["messages"][0]["content"], "What now?");
    assert_eq!(req.body["temperature"], 0.0);
}

#[test]
fn chat_cannot_score() {
    let chat = RemoteChat::new("http://127.0.0.1:9", "m", "");
    let err = chat.score_candidates("a", &["b".into()], 100).unwrap_err();
    assert_eq!(err, GatewayError::Unsupported("candidate scoring"));
}

#[test]
fn a_missing_key_fails_before_any_request() {
    let chat = RemoteChat::new("http://127.0.0.1:9", "m", "HLA_TEST_NO_SUCH_KEY");
    let err = chat.generate(&PromptRequest::new("x", 100)).unwrap_err();
    assert_eq!(err, GatewayError::Auth("HLA_TEST_NO_SUCH_KEY".into()));
}

#[test]
fn rejected_keys_and_slow_servers_map_to_typed_errors() {
    let (url, _seen) = stub(vec![
        (401, json!({"error": "no"}), Duration::ZERO),
        (200, json!({"choices": []}), Duration::from_millis(600)),
        ok(json!({"choices": []})),
    ]);
    let chat = RemoteChat::new(&url, "m", "");
    assert!(matches!(chat.generate(&PromptRequest::new("x", 5000)), Err(GatewayError::Auth(_))));
    assert_eq!(
        chat.generate(&PromptRequest::new("x", 150)).unwrap_err(),
        GatewayError::Timeout { after_ms: 150 }
    );
    assert!(matches!(chat.generate(&PromptRequest::new("x", 5000)), Err(GatewayError::Transport(_))));
}

#[test]
fn scoring_sums_only_the_continuation() {
    let prefix = "Command: chop. Action: ";
    let cands = ["Chop Onion".to_string(), "Serve Bob Soup".to_string()];
    // Choices arrive out of order; the index decides the slot.
    let reply = json!({"choices": [
        echoed(1, prefix, &cands[1], &[-2.0, -0.5, -0.25]),
        echoed(0, prefix, &cands[0], &[-0.5, -0.125]),
    ]});
    let (url, seen) = stub(vec![ok(reply)]);
    let scorer = RemoteScoring::new(&url, "base", "");
    let set = scorer.score_candidates(prefix, &cands, 5000).unwrap();
    assert_eq!(set.log_probs, vec![-0.625, -2.75]);
    assert_eq!(set.candidates, cands.to_vec());
    let req = seen.recv().unwrap();
    assert_eq!(req.path, "/v1/completions");
    assert_eq!(req.body["echo"], true);
    assert_eq!(req.body["max_tokens"], 0);
    assert_eq!(req.body["prompt"][1], format!("{prefix}Serve Bob Soup"));
}

#[test]
fn scoring_refuses_endpoints_without_logprobs() {
    let (url, _seen) = stub(vec![
        ok(json!({"choices": [{"index": 0, "text": "x"}]})),
        ok(json!({"choices": [echoed(0, "p", "a", &[-1.0])]})),
        ok(json!({"choices": [{"text": " Chop Onion "}]})),
    ]);
    let scorer = RemoteScoring::new(&url, "base", "");
    assert_eq!(
        scorer.score_candidates("p", &["a".into()], 5000).unwrap_err(),
        GatewayError::Unsupported("token log-probabilities")
    );
    let two = ["a".to_string(), "b".to_string()];
    assert!(matches!(scorer.score_candidates("p", &two, 5000), Err(GatewayError::Transport(_))));
    assert_eq!(scorer.generate(&PromptRequest::new("go", 5000)).unwrap().text, "Chop Onion");
}
