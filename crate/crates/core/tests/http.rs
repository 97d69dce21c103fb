//! Remote clients against a scripted local HTTP server.

use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpListener;
use std::sync::{Arc, Mutex};
use std::thread;
use std::time::Duration;

use causal_plot::eval::{QAOracle, SourceOracle};
use causal_plot::knowledge::{Bindings, Conditioning, HttpSource, KnowledgeSource, Query, QueryKind, TemplateSet};
use causal_plot::similarity::{Embedder, HttpEmbedder};
use causal_plot::transport::Endpoint;
use serde_json::{json, Value};

#[derive(Debug, Clone)]
struct Seen {
    path: String,
    auth: Option<String>,
    body: Value,
}

struct Server {
    url: String,
    seen: Arc<Mutex<Vec<Seen>>>,
}

/// Serves `replies` in order, one connection each.
fn serve(replies: Vec<(u16, Value)>) -> Server {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let url = format!("http://{}/v1", listener.local_addr().unwrap());
    let seen = Arc::new(Mutex::new(Vec::new()));
    let log = Arc::clone(&seen);
    thread::spawn(move || {
        for (status, body) in replies {
            let Ok((stream, _)) = listener.accept() else { return };
            let mut reader = BufReader::new(stream);
            let mut request_line = String::new();
            reader.read_line(&mut request_line).unwrap();
            let path = request_line.split_whitespace().nth(1).unwrap_or("").to_string();
            let (mut len, mut auth) = (0usize, None);
            loop {
                let mut h = String::new();
                reader.read_line(&mut h).unwrap();
                let h = h.trim_end();
                if h.is_empty() {
                    break;
                }
                let (k, v) = h.split_once(':').unwrap();
                match k.to_ascii_lowercase().as_str() {
                    "content-length" => len = v.trim().parse().unwrap(),
                    "authorization" => auth = Some(v.trim().to_string()),
                    _ => {}
                }
            }
            let mut buf = vec![0; len];
            reader.read_exact(&mut buf).unwrap();
            log.lock().unwrap().push(Seen { path, auth, body: serde_json::from_slice(&buf).unwrap_or(Value::Null) });
            let payload = body.to_string();
            let mut stream = reader.into_inner();
            write!(
                stream,
                "HTTP/1.1 {status} X\r\ncontent-type: application/json\r\ncontent-length: {}\r\nconnection: close\r\n\r\n{payload}",
                payload.len()
            )
            .unwrap();
        }
    });
    Server { url, seen }
}

fn endpoint(url: &str) -> Endpoint {
    let mut e = Endpoint::new(url).with_api_key(Some("tok-123".into())).with_model(Some("m".into()));
    e.backoff = Duration::from_millis(1);
    e.timeout = Duration::from_secs(5);
    e
}

fn query() -> Query {
    let b = Bindings::from([("Event".to_string(), "Tom ate".to_string()), ("Context".to_string(), String::new())]);
    Query::render(&TemplateSet::builtin(), QueryKind::Reason, b).unwrap()
}

#[test]
fn completion_request_shape() {
    let s = serve(vec![(200, json!({"choices": [{"text": " Tom was hungry\n"}, {"text": "Tom skipped lunch"}]}))]);
    let src = HttpSource::new(endpoint(&s.url), 32).unwrap();
    let q = query();
    let out = src.complete(&q, 2, 0.9).unwrap();
    assert_eq!(out, vec![" Tom was hungry\n", "Tom skipped lunch"]);
    let seen = s.seen.lock().unwrap()[0].clone();
    assert_eq!(seen.path, "/v1/completions");
    assert_eq!(seen.auth.as_deref(), Some("Bearer tok-123"));
    assert_eq!(seen.body["prompt"], q.prompt);
    assert_eq!(seen.body["n"], 2);
    assert_eq!(seen.body["temperature"], 0.9);
    assert_eq!(seen.body["max_tokens"], 32);
    assert_eq!(seen.body["model"], "m");
    assert_eq!(seen.body["stop"], json!(["\n\n"]));
    assert!(seen.body.get("echo").is_none());
}

#[test]
fn scoring_sums_continuation_tokens() {
    let q = query();
    let prompt_len = q.prompt.chars().count();
    let domain_len = q.domain_prompt.chars().count();
    let lp = |offsets: Vec<usize>| {
        json!({"choices": [{"text": "", "logprobs": {"token_logprobs": [null, -0.5, -1.0, -2.0], "text_offset": offsets}}]})
    };
    // The continuation starts one character after the prompt (joining space).
    let s = serve(vec![
        (200, lp(vec![0, 3, prompt_len + 1, prompt_len + 5])),
        (200, lp(vec![0, domain_len + 1, domain_len + 4, domain_len + 8])),
    ]);
    let src = HttpSource::new(endpoint(&s.url), 32).unwrap();
    assert_eq!(src.score(&q, "was hungry", Conditioning::Input).unwrap(), Some(-3.0));
    assert_eq!(src.score(&q, "was hungry", Conditioning::Domain).unwrap(), Some(-3.5));
    let seen = s.seen.lock().unwrap().clone();
    assert_eq!(seen[0].body["echo"], true);
    assert_eq!(seen[0].body["max_tokens"], 0);
    assert_eq!(seen[0].body["prompt"], format!("{} was hungry", q.prompt));
    assert_eq!(seen[1].body["prompt"].as_str().unwrap(), format!("{} was hungry", q.domain_prompt));
}

#[test]
fn server_errors_are_retried() {
    let s = serve(vec![
        (503, json!({"error": "busy"})),
        (500, json!({"error": "oops"})),
        (200, json!({"choices": [{"text": "ok"}]})),
    ]);
    let src = HttpSource::new(endpoint(&s.url), 8).unwrap();
    assert_eq!(src.complete(&query(), 1, 0.0).unwrap(), vec!["ok"]);
    assert_eq!(s.seen.lock().unwrap().len(), 3);
}

#[test]
fn retries_are_bounded() {
    let s = serve(vec![(502, json!({})), (502, json!({})), (502, json!({}))]);
    let src = HttpSource::new(endpoint(&s.url), 8).unwrap();
    let err = src.complete(&query(), 1, 0.0).unwrap_err();
    assert_eq!(err.attempts(), Some(3));
    assert!(err.to_string().contains("502"));
}

#[test]
fn client_errors_fail_at_once() {
    let s = serve(vec![(401, json!({"error": "bad key"})), (200, json!({"choices": []}))]);
    let src = HttpSource::new(endpoint(&s.url), 8).unwrap();
    let err = src.complete(&query(), 1, 0.0).unwrap_err();
    assert_eq!(err.attempts(), Some(1));
    assert!(!err.to_string().contains("tok-123"));
    assert_eq!(s.seen.lock().unwrap().len(), 1);
}

#[test]
fn embeddings_are_fetched_once_per_sentence() {
    let s = serve(vec![
        (200, json!({"data": [{"embedding": [1.0, 0.0]}, {"embedding": [0.6, 0.8]}]})),
        (200, json!({"embeddings": [[0.0, 1.0]]})),
    ]);
    let e = HttpEmbedder::new(endpoint(&s.url)).unwrap();
    assert!((e.similarity("a", "b").unwrap() - 0.6).abs() < 1e-12);
    assert!((e.similarity("a", "b").unwrap() - 0.6).abs() < 1e-12);
    assert!((e.similarity("b", "c").unwrap() - 0.8).abs() < 1e-12);
    let seen = s.seen.lock().unwrap().clone();
    assert_eq!(seen.len(), 2);
    assert_eq!(seen[0].path, "/v1");
    assert_eq!(seen[0].body["input"], json!(["a", "b"]));
    assert_eq!(seen[1].body["input"], json!(["c"]));
}

#[test]
fn embedding_count_mismatch_is_an_error() {
    let s = serve(vec![(200, json!({"embeddings": [[1.0, 0.0]]}))]);
    let e = HttpEmbedder::new(endpoint(&s.url)).unwrap();
    assert!(e.similarity("x", "y").is_err());
}

#[test]
fn oracle_over_http() {
    let s = serve(vec![(200, json!({"choices": [{"text": "Tom bought a ball.\nmore"}]}))]);
    let oracle = SourceOracle { source: HttpSource::new(endpoint(&s.url), 32).unwrap(), templates: TemplateSet::builtin() };
    let story = vec!["Tom bought a ball.".to_string(), "Tom kicked the ball.".to_string(), "Tom left.".to_string()];
    assert_eq!(oracle.ask(&story, 1).unwrap(), "Tom bought a ball.");
    let seen = s.seen.lock().unwrap()[0].clone();
    assert_eq!(seen.body["temperature"], 0.7);
    let prompt = seen.body["prompt"].as_str().unwrap();
    assert!(prompt.contains("Tom kicked the ball."));
    assert!(!prompt.contains("Tom left."));
}
