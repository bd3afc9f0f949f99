//! Line-delimited JSON bridge to out-of-process scorers.
//!
//! The server opens with `{"protocol":"solsent-clf/1","backend_id":...}`. The
//! client then sends one `{"id","text"}` object per line followed by
//! `{"end_batch":true}`; the server answers with one `{"id","p_positive"}`
//! line per item, in any order, and its own `{"end_batch":true}`.

use std::collections::HashMap;
use std::io::{BufRead, BufReader, Read, Write};
use std::net::{Shutdown, TcpStream, ToSocketAddrs};
use std::process::{Child, Command, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::thread;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{ClassifierBackend, ClassifyError};
use crate::textprep::NormalizedText;

pub const PROTOCOL_VERSION: &str = "solsent-clf/1";

#[derive(Debug, Serialize, Deserialize)]
struct Handshake {
    protocol: String,
    backend_id: String,
}

#[derive(Debug, Serialize, Deserialize)]
struct RequestItem<'a> {
    id: &'a str,
    text: &'a str,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ResponseItem {
    id: String,
    p_positive: f64,
}

fn protocol_err(id: Option<&str>, message: impl Into<String>) -> ClassifyError {
    ClassifyError::Protocol {
        id: id.map(str::to_string),
        message: message.into(),
    }
}

fn is_end_batch(v: &Value) -> bool {
    v.as_object()
        .is_some_and(|o| o.len() == 1 && o.get("end_batch") == Some(&Value::Bool(true)))
}

/// Client side of the protocol, speaking to a child process or a TCP peer.
pub struct ExternalBackend {
    backend_id: String,
    writer: Box<dyn Write + Send>,
    lines: Receiver<std::io::Result<String>>,
    timeout: Duration,
    child: Option<Child>,
    socket: Option<TcpStream>,
}

impl ExternalBackend {
    /// Wraps an already-connected byte stream pair and performs the handshake.
    pub fn from_streams<R, W>(
        reader: R,
        writer: W,
        timeout: Duration,
    ) -> Result<ExternalBackend, ClassifyError>
    where
        R: Read + Send + 'static,
        W: Write + Send + 'static,
    {
        let (tx, rx) = mpsc::channel();
        thread::spawn(move || {
            for line in BufReader::new(reader).lines() {
                let stop = line.is_err();
                if tx.send(line).is_err() || stop {
                    break;
                }
            }
        });
        let mut backend = ExternalBackend {
            backend_id: String::new(),
            writer: Box::new(writer),
            lines: rx,
            timeout,
            child: None,
            socket: None,
        };
        let deadline = Instant::now() + timeout;
        let line = backend.next_line(deadline, None)?;
        let hs: Handshake = serde_json::from_str(&line)
            .map_err(|e| protocol_err(None, format!("bad handshake {line:?}: {e}")))?;
        if hs.protocol != PROTOCOL_VERSION {
            return Err(protocol_err(
                None,
                format!("unsupported protocol {}", hs.protocol),
            ));
        }
        if hs.backend_id.trim().is_empty() {
            return Err(protocol_err(None, "empty backend_id"));
        }
        backend.backend_id = hs.backend_id;
        Ok(backend)
    }

    /// Launches `program args...` and talks to it over stdin/stdout.
    pub fn spawn(
        program: &str,
        args: &[String],
        timeout: Duration,
    ) -> Result<ExternalBackend, ClassifyError> {
        let mut child = Command::new(program)
            .args(args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()?;
        let stdin = child.stdin.take().expect("piped stdin");
        let stdout = child.stdout.take().expect("piped stdout");
        match ExternalBackend::from_streams(stdout, stdin, timeout) {
            Ok(mut b) => {
                b.child = Some(child);
                Ok(b)
            }
            Err(e) => {
                let _ = child.kill();
                let _ = child.wait();
                Err(e)
            }
        }
    }

    pub fn connect(
        addr: impl ToSocketAddrs,
        timeout: Duration,
    ) -> Result<ExternalBackend, ClassifyError> {
        let stream = TcpStream::connect(addr)?;
        let reader = stream.try_clone()?;
        let socket = stream.try_clone()?;
        match ExternalBackend::from_streams(reader, stream, timeout) {
            Ok(mut b) => {
                b.socket = Some(socket);
                Ok(b)
            }
            Err(e) => {
                let _ = socket.shutdown(Shutdown::Both);
                Err(e)
            }
        }
    }

    fn next_line(
        &mut self,
        deadline: Instant,
        pending: Option<&str>,
    ) -> Result<String, ClassifyError> {
        let wait = deadline.saturating_duration_since(Instant::now());
        match self.lines.recv_timeout(wait) {
            Ok(Ok(line)) => Ok(line),
            Ok(Err(e)) => Err(ClassifyError::BackendIo(e)),
            Err(RecvTimeoutError::Timeout) => Err(ClassifyError::Timeout {
                id: pending.map(str::to_string),
            }),
            Err(RecvTimeoutError::Disconnected) => {
                Err(protocol_err(pending, "backend closed the connection"))
            }
        }
    }
}

impl ClassifierBackend for ExternalBackend {
    fn backend_id(&self) -> &str {
        &self.backend_id
    }

    /// Sends one batch; the whole batch fails on timeout or any
    /// non-conforming response line.
    fn score(&mut self, items: &[NormalizedText]) -> Result<Vec<f64>, ClassifyError> {
        let mut slots: HashMap<&str, usize> = HashMap::with_capacity(items.len());
        for (i, it) in items.iter().enumerate() {
            if slots.insert(it.source_id.as_str(), i).is_some() {
                return Err(protocol_err(Some(&it.source_id), "duplicate id in batch"));
            }
        }
        let mut buf = Vec::new();
        for it in items {
            serde_json::to_writer(
                &mut buf,
                &RequestItem {
                    id: &it.source_id,
                    text: &it.value,
                },
            )
            .expect("request serializes");
            buf.push(b'\n');
        }
        buf.extend_from_slice(b"{\"end_batch\":true}\n");
        self.writer.write_all(&buf)?;
        self.writer.flush()?;

        let mut out: Vec<Option<f64>> = vec![None; items.len()];
        let mut remaining = items.len();
        let deadline = Instant::now() + self.timeout;
        loop {
            let first_pending = out
                .iter()
                .position(Option::is_none)
                .map(|i| items[i].source_id.clone());
            let line = self.next_line(deadline, first_pending.as_deref())?;
            let value: Value = serde_json::from_str(&line).map_err(|e| {
                protocol_err(
                    first_pending.as_deref(),
                    format!("invalid JSON {line:?}: {e}"),
                )
            })?;
            if is_end_batch(&value) {
                if remaining > 0 {
                    return Err(protocol_err(
                        first_pending.as_deref(),
                        format!("{remaining} items unanswered"),
                    ));
                }
                break;
            }
            let resp: ResponseItem = serde_json::from_value(value).map_err(|e| {
                protocol_err(
                    first_pending.as_deref(),
                    format!("bad response {line:?}: {e}"),
                )
            })?;
            let Some(&slot) = slots.get(resp.id.as_str()) else {
                return Err(protocol_err(Some(&resp.id), "unknown id"));
            };
            if out[slot].is_some() {
                return Err(protocol_err(Some(&resp.id), "duplicate response"));
            }
            if !(0.0..=1.0).contains(&resp.p_positive) {
                return Err(protocol_err(
                    Some(&resp.id),
                    format!("p_positive {} outside [0, 1]", resp.p_positive),
                ));
            }
            out[slot] = Some(resp.p_positive);
            remaining -= 1;
        }
        Ok(out.into_iter().map(|p| p.expect("all answered")).collect())
    }
}

impl Drop for ExternalBackend {
    fn drop(&mut self) {
        // The reader thread holds its own handle, so close the socket explicitly.
        if let Some(s) = &self.socket {
            let _ = s.shutdown(Shutdown::Both);
        }
        if let Some(child) = &mut self.child {
            let _ = child.kill();
            let _ = child.wait();
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct OwnedRequest {
    id: String,
    text: String,
}

/// Server side: answers batches from `reader` using `backend` until EOF.
/// Returns the number of batches served. A malformed request gets an
/// `{"error":...}` line and ends the session.
pub fn serve<R: BufRead, W: Write>(
    reader: R,
    mut writer: W,
    backend: &mut dyn ClassifierBackend,
) -> Result<usize, ClassifyError> {
    let hs = Handshake {
        protocol: PROTOCOL_VERSION.into(),
        backend_id: backend.backend_id().into(),
    };
    writeln!(
        writer,
        "{}",
        serde_json::to_string(&hs).expect("handshake serializes")
    )?;
    writer.flush()?;
    let mut batch = Vec::new();
    let mut served = 0;
    for line in reader.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let parsed: Result<Value, _> = serde_json::from_str(&line);
        let request = match parsed {
            Ok(v) if is_end_batch(&v) => None,
            Ok(v) => match serde_json::from_value::<OwnedRequest>(v) {
                Ok(r) => Some(r),
                Err(e) => return reject(&mut writer, &line, &e.to_string()),
            },
            Err(e) => return reject(&mut writer, &line, &e.to_string()),
        };
        match request {
            Some(r) => batch.push(NormalizedText {
                source_id: r.id,
                value: r.text,
            }),
            None => {
                let probs = backend.score(&batch)?;
                for (item, p) in batch.iter().zip(probs) {
                    let resp = serde_json::json!({"id": item.source_id, "p_positive": p});
                    writeln!(writer, "{resp}")?;
                }
                writeln!(writer, "{{\"end_batch\":true}}")?;
                writer.flush()?;
                batch.clear();
                served += 1;
            }
        }
    }
    Ok(served)
}

fn reject<W: Write>(writer: &mut W, line: &str, message: &str) -> Result<usize, ClassifyError> {
    let body = serde_json::json!({"error": format!("malformed request: {message}")});
    writeln!(writer, "{body}")?;
    writer.flush()?;
    Err(protocol_err(
        None,
        format!("malformed request {line:?}: {message}"),
    ))
}
