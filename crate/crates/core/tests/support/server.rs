use std::io::{BufRead, BufReader, Read, Write};
use std::net::{TcpListener, TcpStream};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::thread;

type Handler = Box<dyn Fn(usize, &str) -> (u16, String) + Send>;

/// Local HTTP/1.1 server; each request is answered by a handler given the
/// request index and body.
pub struct ScriptedServer {
    pub url: String,
    hits: Arc<AtomicUsize>,
    bodies: Arc<Mutex<Vec<String>>>,
}

impl ScriptedServer {
    /// Answers with the next scripted `(status, body)`; the last entry
    /// repeats once the script runs out.
    pub fn start(script: Vec<(u16, String)>) -> Self {
        assert!(!script.is_empty());
        Self::with_handler(move |i, _| script[i.min(script.len() - 1)].clone())
    }

    pub fn with_handler(handler: impl Fn(usize, &str) -> (u16, String) + Send + 'static) -> Self {
        let handler: Handler = Box::new(handler);
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let url = format!("http://{}", listener.local_addr().unwrap());
        let hits = Arc::new(AtomicUsize::new(0));
        let bodies = Arc::new(Mutex::new(Vec::new()));
        let (h, b) = (hits.clone(), bodies.clone());
        thread::spawn(move || {
            for stream in listener.incoming() {
                let Ok(stream) = stream else { break };
                let i = h.fetch_add(1, Ordering::SeqCst);
                if let Some(req) = serve(stream, |body| handler(i, body)) {
                    b.lock().unwrap().push(req);
                }
            }
        });
        ScriptedServer { url, hits, bodies }
    }

    pub fn hits(&self) -> usize {
        self.hits.load(Ordering::SeqCst)
    }

    pub fn request_bodies(&self) -> Vec<String> {
        self.bodies.lock().unwrap().clone()
    }
}

fn serve(mut stream: TcpStream, respond: impl FnOnce(&str) -> (u16, String)) -> Option<String> {
    let mut reader = BufReader::new(stream.try_clone().ok()?);
    let mut content_length = 0;
    loop {
        let mut line = String::new();
        if reader.read_line(&mut line).ok()? == 0 {
            return None;
        }
        let line = line.trim_end();
        if line.is_empty() {
            break;
        }
        if let Some((k, v)) = line.split_once(':') {
            if k.eq_ignore_ascii_case("content-length") {
                content_length = v.trim().parse().unwrap_or(0);
            }
        }
    }
    let mut buf = vec![0; content_length];
    reader.read_exact(&mut buf).ok()?;
    let request = String::from_utf8_lossy(&buf).into_owned();
    let (status, body) = respond(&request);
    let response = format!(
        "HTTP/1.1 {status} Scripted\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
        body.len()
    );
    stream.write_all(response.as_bytes()).ok()?;
    stream.flush().ok()?;
    Some(request)
}
