//! Provider-agnostic chat completion.
//!
//! [`HttpChatClient`] speaks the common `POST {base}/chat/completions`
//! protocol; [`FnClient`] wraps a closure for offline runs and tests.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::thread;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

pub const API_KEY_ENV: &str = "SCK_LLM_API_KEY";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatRequest {
    pub system: Option<String>,
    pub user: String,
    pub model_name: String,
    pub temperature: f64,
    pub max_tokens: u32,
}

impl ChatRequest {
    pub fn new(user: impl Into<String>, settings: &ChatSettings) -> Self {
        ChatRequest {
            system: None,
            user: user.into(),
            model_name: settings.model_name.clone(),
            temperature: settings.temperature,
            max_tokens: settings.max_tokens,
        }
    }

    pub fn with_system(mut self, system: impl Into<String>) -> Self {
        self.system = Some(system.into());
        self
    }

    pub fn validate(&self) -> Result<(), ChatError> {
        if self.user.is_empty() {
            return Err(ChatError::InvalidRequest("user message is empty".into()));
        }
        if !(0.0..=2.0).contains(&self.temperature) {
            return Err(ChatError::InvalidRequest(format!(
                "temperature {} outside [0, 2]",
                self.temperature
            )));
        }
        Ok(())
    }
}

/// Model name and sampling settings shared by every request of a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatSettings {
    pub model_name: String,
    pub temperature: f64,
    pub max_tokens: u32,
}

impl Default for ChatSettings {
    fn default() -> Self {
        ChatSettings {
            model_name: "gpt-4".into(),
            temperature: 0.7,
            max_tokens: 1024,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ChatError {
    #[error("invalid chat request: {0}")]
    InvalidRequest(String),
    #[error("transport error: {0}")]
    Transport(String),
    #[error("HTTP {status}: {body}")]
    Status { status: u16, body: String },
    #[error("unexpected response: {0}")]
    Malformed(String),
}

impl ChatError {
    /// Whether retrying the same request may succeed.
    pub fn is_transient(&self) -> bool {
        match self {
            ChatError::Transport(_) => true,
            ChatError::Status { status, .. } => *status == 429 || *status >= 500,
            ChatError::InvalidRequest(_) | ChatError::Malformed(_) => false,
        }
    }
}

pub trait ChatClient: Sync {
    fn complete(&self, request: &ChatRequest) -> Result<String, ChatError>;
}

impl<C: ChatClient + ?Sized> ChatClient for &C {
    fn complete(&self, request: &ChatRequest) -> Result<String, ChatError> {
        (**self).complete(request)
    }
}

/// Chat client backed by a closure.
pub struct FnClient<F>(pub F);

impl<F> ChatClient for FnClient<F>
where
    F: Fn(&ChatRequest) -> Result<String, ChatError> + Sync,
{
    fn complete(&self, request: &ChatRequest) -> Result<String, ChatError> {
        request.validate()?;
        (self.0)(request)
    }
}

pub struct HttpChatClient {
    agent: ureq::Agent,
    endpoint: String,
    api_key: Option<String>,
}

impl HttpChatClient {
    pub fn new(base_url: &str, api_key: Option<String>, timeout: Duration) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(timeout))
            .http_status_as_error(false)
            .build()
            .into();
        HttpChatClient {
            agent,
            endpoint: format!("{}/chat/completions", base_url.trim_end_matches('/')),
            api_key,
        }
    }

    /// Reads the API key from `SCK_LLM_API_KEY`.
    pub fn from_env(base_url: &str) -> Self {
        Self::new(
            base_url,
            std::env::var(API_KEY_ENV).ok().filter(|k| !k.is_empty()),
            Duration::from_secs(120),
        )
    }

    pub fn request_body(request: &ChatRequest) -> Value {
        let mut messages = Vec::new();
        if let Some(system) = &request.system {
            messages.push(json!({"role": "system", "content": system}));
        }
        messages.push(json!({"role": "user", "content": request.user}));
        json!({
            "model": request.model_name,
            "messages": messages,
            "temperature": request.temperature,
            "max_tokens": request.max_tokens,
        })
    }
}

impl ChatClient for HttpChatClient {
    fn complete(&self, request: &ChatRequest) -> Result<String, ChatError> {
        request.validate()?;
        let mut call = self.agent.post(&self.endpoint);
        if let Some(key) = &self.api_key {
            call = call.header("Authorization", &format!("Bearer {key}"));
        }
        let mut response = call
            .send_json(Self::request_body(request))
            .map_err(|e| ChatError::Transport(e.to_string()))?;
        let status = response.status().as_u16();
        let body = response
            .body_mut()
            .read_to_string()
            .map_err(|e| ChatError::Transport(e.to_string()))?;
        if !(200..300).contains(&status) {
            return Err(ChatError::Status { status, body });
        }
        let value: Value =
            serde_json::from_str(&body).map_err(|e| ChatError::Malformed(e.to_string()))?;
        value
            .pointer("/choices/0/message/content")
            .and_then(Value::as_str)
            .map(str::to_owned)
            .ok_or_else(|| ChatError::Malformed("missing choices[0].message.content".into()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RetryPolicy {
    /// Retries after the first attempt.
    pub retries: u32,
    pub backoff: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy {
            retries: 3,
            backoff: Duration::from_millis(500),
        }
    }
}

impl RetryPolicy {
    pub fn none() -> Self {
        RetryPolicy {
            retries: 0,
            backoff: Duration::ZERO,
        }
    }

    /// Sends `request`, retrying transient failures with linear backoff.
    pub fn complete(
        &self,
        client: &dyn ChatClient,
        request: &ChatRequest,
    ) -> Result<String, ChatError> {
        let mut attempt = 0;
        loop {
            match client.complete(request) {
                Err(e) if e.is_transient() && attempt < self.retries => {
                    attempt += 1;
                    log::warn!("chat request failed ({e}); retry {attempt}/{}", self.retries);
                    thread::sleep(self.backoff * attempt);
                }
                other => return other,
            }
        }
    }
}

/// Maps `f` over `items` on at most `parallelism` threads. Output order
/// matches input order.
pub fn map_bounded<T, R, F>(items: &[T], parallelism: usize, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync,
{
    let workers = parallelism.max(1).min(items.len());
    if workers <= 1 {
        return items.iter().map(f).collect();
    }
    let next = AtomicUsize::new(0);
    let results: Mutex<Vec<Option<R>>> = Mutex::new((0..items.len()).map(|_| None).collect());
    thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= items.len() {
                    break;
                }
                let r = f(&items[i]);
                results.lock().expect("result lock")[i] = Some(r);
            });
        }
    });
    results
        .into_inner()
        .expect("result lock")
        .into_iter()
        .map(|r| r.expect("every item processed"))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::{BufRead, BufReader, Read, Write};
    use std::net::TcpListener;

    #[test]
    fn validates_requests() {
        let settings = ChatSettings::default();
        assert!(ChatRequest::new("", &settings).validate().is_err());
        let mut r = ChatRequest::new("hi", &settings);
        r.temperature = 2.5;
        assert!(r.validate().is_err());
    }

    #[test]
    fn retries_transient_errors_only() {
        let calls = AtomicUsize::new(0);
        let client = FnClient(|_: &ChatRequest| {
            if calls.fetch_add(1, Ordering::SeqCst) < 2 {
                Err(ChatError::Transport("reset".into()))
            } else {
                Ok("ok".into())
            }
        });
        let policy = RetryPolicy {
            retries: 3,
            backoff: Duration::ZERO,
        };
        let req = ChatRequest::new("hi", &ChatSettings::default());
        assert_eq!(policy.complete(&client, &req).unwrap(), "ok");
        assert_eq!(calls.load(Ordering::SeqCst), 3);

        let fatal = FnClient(|_: &ChatRequest| Err(ChatError::Status { status: 401, body: String::new() }));
        assert!(policy.complete(&fatal, &req).is_err());

        let always = FnClient(|_: &ChatRequest| Err(ChatError::Transport("down".into())));
        assert!(matches!(policy.complete(&always, &req), Err(ChatError::Transport(_))));
    }

    #[test]
    fn map_bounded_preserves_order() {
        let items: Vec<u64> = (0..50).collect();
        let out = map_bounded(&items, 4, |x| x * 2);
        assert_eq!(out, items.iter().map(|x| x * 2).collect::<Vec<_>>());
        assert!(map_bounded(&Vec::<u64>::new(), 4, |x| *x).is_empty());
    }

    /// Serves one canned HTTP response and returns the raw request.
    fn one_shot_server(status: &str, body: &str) -> (String, thread::JoinHandle<String>) {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let addr = listener.local_addr().unwrap();
        let response = format!(
            "HTTP/1.1 {status}\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
            body.len()
        );
        let handle = thread::spawn(move || {
            let (stream, _) = listener.accept().unwrap();
            let mut reader = BufReader::new(stream);
            let mut head = String::new();
            let mut content_length = 0;
            loop {
                let mut line = String::new();
                reader.read_line(&mut line).unwrap();
                if let Some(v) = line.to_ascii_lowercase().strip_prefix("content-length:") {
                    content_length = v.trim().parse().unwrap();
                }
                head.push_str(&line);
                if line == "\r\n" {
                    break;
                }
            }
            let mut body = vec![0; content_length];
            reader.read_exact(&mut body).unwrap();
            reader.get_mut().write_all(response.as_bytes()).unwrap();
            head + &String::from_utf8(body).unwrap()
        });
        (format!("http://{addr}/v1"), handle)
    }

    #[test]
    fn http_client_speaks_chat_completions() {
        let (url, server) = one_shot_server(
            "200 OK",
            r#"{"choices":[{"message":{"role":"assistant","content":"Lima"}}]}"#,
        );
        let client = HttpChatClient::new(&url, Some("k3y".into()), Duration::from_secs(5));
        let req = ChatRequest::new("where?", &ChatSettings::default()).with_system("be brief");
        assert_eq!(client.complete(&req).unwrap(), "Lima");
        let raw = server.join().unwrap();
        assert!(raw.starts_with("POST /v1/chat/completions"));
        assert!(raw.contains("Bearer k3y"));
        let body: Value = serde_json::from_str(&raw[raw.find("\r\n\r\n").unwrap()..]).unwrap();
        assert_eq!(body["messages"][0]["role"], "system");
        assert_eq!(body["messages"][1]["content"], "where?");
        assert_eq!(body["model"], "gpt-4");
    }

    #[test]
    fn http_client_surfaces_status() {
        let (url, server) = one_shot_server("503 Service Unavailable", r#"{"error":"busy"}"#);
        let client = HttpChatClient::new(&url, None, Duration::from_secs(5));
        let err = client
            .complete(&ChatRequest::new("x", &ChatSettings::default()))
            .unwrap_err();
        assert!(matches!(err, ChatError::Status { status: 503, .. }));
        assert!(err.is_transient());
        server.join().unwrap();
    }
}
