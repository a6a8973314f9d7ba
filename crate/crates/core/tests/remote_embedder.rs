//! The HTTP embedding client against an in-process fake service.

use std::io::{BufRead, BufReader, Read, Write};
use std::net::{TcpListener, TcpStream};
use std::path::PathBuf;
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::Arc;
use std::thread::JoinHandle;

use relmap::engine::{Engine, RunConfig};
use relmap::similarity::{EmbeddingProvider, HashedTrigramEmbedder, RemoteEmbedder};
use serde_json::{json, Value};

#[derive(Clone, Copy)]
enum Behaviour {
    Healthy,
    Loading,
    DropsVector,
    SwitchesModel,
}

struct FakeService {
    url: String,
    stop: Arc<AtomicBool>,
    embed_calls: Arc<AtomicUsize>,
    handle: Option<JoinHandle<()>>,
}

impl FakeService {
    fn start(behaviour: Behaviour) -> Self {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let url = format!("http://{}", listener.local_addr().unwrap());
        let stop = Arc::new(AtomicBool::new(false));
        let embed_calls = Arc::new(AtomicUsize::new(0));
        let (s, calls) = (stop.clone(), embed_calls.clone());
        let handle = std::thread::spawn(move || {
            let embedder = HashedTrigramEmbedder::default();
            for stream in listener.incoming() {
                if s.load(Ordering::SeqCst) {
                    break;
                }
                if let Ok(stream) = stream {
                    serve(stream, behaviour, &embedder, &calls);
                }
            }
        });
        FakeService {
            url,
            stop,
            embed_calls,
            handle: Some(handle),
        }
    }

    fn shutdown(&mut self) {
        self.stop.store(true, Ordering::SeqCst);
        let _ = TcpStream::connect(self.url.trim_start_matches("http://"));
        if let Some(h) = self.handle.take() {
            h.join().unwrap();
        }
    }
}

impl Drop for FakeService {
    fn drop(&mut self) {
        self.shutdown();
    }
}

fn serve(stream: TcpStream, behaviour: Behaviour, embedder: &HashedTrigramEmbedder, calls: &AtomicUsize) {
    let mut reader = BufReader::new(stream.try_clone().unwrap());
    let mut request_line = String::new();
    if reader.read_line(&mut request_line).unwrap_or(0) == 0 {
        return;
    }
    let mut length = 0;
    loop {
        let mut line = String::new();
        reader.read_line(&mut line).unwrap();
        let line = line.trim_end();
        if line.is_empty() {
            break;
        }
        if let Some((k, v)) = line.split_once(':') {
            if k.eq_ignore_ascii_case("content-length") {
                length = v.trim().parse().unwrap();
            }
        }
    }
    let mut body = vec![0; length];
    reader.read_exact(&mut body).unwrap();

    let model = "fake-trigram";
    let dim = embedder.dimension();
    let (status, reply) = if request_line.starts_with("GET /health") {
        match behaviour {
            Behaviour::Loading => ("503 Service Unavailable", json!({"status": "loading"})),
            _ => ("200 OK", json!({"model": model, "dim": dim})),
        }
    } else if request_line.starts_with("POST /embed") {
        calls.fetch_add(1, Ordering::SeqCst);
        let req: Value = serde_json::from_slice(&body).unwrap();
        let mut vectors: Vec<Vec<f64>> = req["texts"]
            .as_array()
            .unwrap()
            .iter()
            .map(|t| embedder.vector(t.as_str().unwrap()))
            .collect();
        if matches!(behaviour, Behaviour::DropsVector) {
            vectors.pop();
        }
        let model = if matches!(behaviour, Behaviour::SwitchesModel) {
            "other"
        } else {
            model
        };
        ("200 OK", json!({"model": model, "dim": dim, "vectors": vectors}))
    } else {
        ("404 Not Found", json!({}))
    };
    let body = reply.to_string();
    let mut stream = stream;
    let _ = write!(
        stream,
        "HTTP/1.1 {status}\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
        body.len()
    );
}

#[test]
fn vectors_match_the_local_embedder_in_order() {
    let service = FakeService::start(Behaviour::Healthy);
    let remote = RemoteEmbedder::connect(&service.url).unwrap();
    assert_eq!(remote.model(), "fake-trigram");
    let local = HashedTrigramEmbedder::default();
    let texts = ["revolve around", "orbit", "be attracted to"];
    let got = remote.embed_texts(&texts).unwrap();
    for (t, v) in texts.iter().zip(&got) {
        let norm: f64 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        assert!((norm - 1.0).abs() < 1e-9);
        let want = local.vector(t);
        assert!(v.iter().zip(&want).all(|(a, b)| (a - b).abs() < 1e-12));
    }
    assert!(remote.embed_texts(&[]).unwrap().is_empty());
}

#[test]
fn loading_service_is_unavailable() {
    let service = FakeService::start(Behaviour::Loading);
    let err = RemoteEmbedder::connect(&service.url).unwrap_err();
    assert!(matches!(err, relmap::Error::EmbeddingUnavailable { .. }), "{err}");
}

#[test]
fn short_or_inconsistent_answers_are_rejected() {
    let service = FakeService::start(Behaviour::DropsVector);
    let remote = RemoteEmbedder::connect(&service.url).unwrap();
    assert!(remote.embed_texts(&["a", "b"]).is_err());
    let batch = remote.embed_batch(&["a", "b"]);
    assert!(batch.iter().all(|r| r.is_err()));

    let service = FakeService::start(Behaviour::SwitchesModel);
    let remote = RemoteEmbedder::connect(&service.url).unwrap();
    assert!(remote.embed("a").is_err());
}

#[test]
fn unreachable_service_fails_to_connect() {
    let mut service = FakeService::start(Behaviour::Healthy);
    let url = service.url.clone();
    service.shutdown();
    assert!(RemoteEmbedder::connect(&url).is_err());
}

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

#[test]
fn cached_run_replays_without_the_service() {
    let dir = tempfile::tempdir().unwrap();
    let cache = dir.path().join("embeddings.jsonl");
    let base = ["sun", "earth", "gravity", "solar system", "newton"];
    let target = ["nucleus", "electrons", "electric force", "atom", "faraday"];

    let mut service = FakeService::start(Behaviour::Healthy);
    let live_config = RunConfig {
        snapshot: Some(fixture("solar.jsonl")),
        embed_url: Some(service.url.clone()),
        embedding_cache: Some(cache.clone()),
        ..RunConfig::default()
    };
    let live = Engine::from_config(&live_config, dir.path()).unwrap().map_names(&base, &target).unwrap();
    assert!(service.embed_calls.load(Ordering::SeqCst) > 0);
    service.shutdown();

    let replay_config = RunConfig {
        embed_url: None,
        ..live_config
    };
    let replayed = Engine::from_config(&replay_config, dir.path()).unwrap().map_names(&base, &target).unwrap();
    assert_eq!(live, replayed);
    assert!(replayed.embedding_warnings.is_empty());

    let local = Engine::from_config(
        &RunConfig {
            snapshot: Some(fixture("solar.jsonl")),
            ..RunConfig::default()
        },
        dir.path(),
    )
    .unwrap()
    .map_names(&base, &target)
    .unwrap();
    assert_eq!(live.mappings, local.mappings);
}
