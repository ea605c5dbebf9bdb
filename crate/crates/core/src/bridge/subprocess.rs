use std::io::{BufRead, BufReader, BufWriter, Write};
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::sync::Mutex;
use std::thread;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::handle::{Concurrency, Context, Mode, Predictor};
use crate::error::{Error, Result};

pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(60);

/// One line sent to the subprocess.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Request {
    pub id: u64,
    pub xs: Vec<Vec<f64>>,
    pub ys: Vec<f64>,
    pub query: Vec<f64>,
}

/// One line read back from the subprocess.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Response {
    pub id: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prediction: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

struct Channel {
    child: Child,
    stdin: BufWriter<ChildStdin>,
    lines: Receiver<std::io::Result<String>>,
    next_id: u64,
}

/// A serial predictor served by an external process over line-delimited JSON.
pub struct SubprocessPredictor {
    name: String,
    command: String,
    timeout: Duration,
    channel: Mutex<Channel>,
}

impl SubprocessPredictor {
    /// Spawns `command` through `sh -c`.
    pub fn spawn(name: impl Into<String>, command: &str) -> Result<Self> {
        Self::spawn_with_timeout(name, command, DEFAULT_TIMEOUT)
    }

    pub fn spawn_with_timeout(name: impl Into<String>, command: &str, timeout: Duration) -> Result<Self> {
        let name = name.into();
        let mut child = Command::new("sh")
            .arg("-c")
            .arg(command)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .map_err(|e| Error::Predictor {
                name: name.clone(),
                message: format!("failed to spawn `{command}`: {e}"),
            })?;
        let stdin = BufWriter::new(child.stdin.take().expect("piped stdin"));
        let stdout = child.stdout.take().expect("piped stdout");
        let (tx, rx) = mpsc::channel();
        thread::spawn(move || {
            for line in BufReader::new(stdout).lines() {
                if tx.send(line).is_err() {
                    break;
                }
            }
        });
        Ok(SubprocessPredictor {
            name,
            command: command.to_string(),
            timeout,
            channel: Mutex::new(Channel {
                child,
                stdin,
                lines: rx,
                next_id: 0,
            }),
        })
    }

    pub fn command(&self) -> &str {
        &self.command
    }

    fn fail(&self, request: &Request, message: impl std::fmt::Display) -> Error {
        let echoed = serde_json::to_string(request).unwrap_or_default();
        Error::Predictor {
            name: self.name.clone(),
            message: format!("{message}; request: {echoed}"),
        }
    }

    fn exchange(&self, ch: &mut Channel, request: &Request) -> Result<f64> {
        let line = serde_json::to_string(request)?;
        writeln!(ch.stdin, "{line}")
            .and_then(|_| ch.stdin.flush())
            .map_err(|e| self.fail(request, format!("write failed: {e}")))?;
        let reply = match ch.lines.recv_timeout(self.timeout) {
            Ok(Ok(reply)) => reply,
            Ok(Err(e)) => return Err(self.fail(request, format!("read failed: {e}"))),
            Err(RecvTimeoutError::Timeout) => {
                return Err(self.fail(request, format!("no reply within {:?}", self.timeout)))
            }
            Err(RecvTimeoutError::Disconnected) => return Err(self.fail(request, "subprocess closed its output")),
        };
        let response: Response = serde_json::from_str(&reply)
            .map_err(|e| self.fail(request, format!("malformed reply `{reply}`: {e}")))?;
        if response.id != request.id {
            return Err(self.fail(request, format!("reply id {} does not match", response.id)));
        }
        if let Some(err) = response.error {
            return Err(self.fail(request, format!("subprocess error: {err}")));
        }
        match response.prediction {
            Some(v) if v.is_finite() => Ok(v),
            Some(v) => Err(self.fail(request, format!("non-finite prediction {v}"))),
            None => Err(self.fail(request, "reply has no prediction")),
        }
    }
}

impl Predictor for SubprocessPredictor {
    fn name(&self) -> &str {
        &self.name
    }

    fn mode(&self) -> Mode {
        Mode::Subprocess
    }

    fn concurrency(&self) -> Concurrency {
        Concurrency::Serial
    }

    fn predict_batch(&self, ctx: &Context, queries: &[Vec<f64>]) -> Result<Vec<f64>> {
        ctx.check(queries)?;
        let mut ch = self.channel.lock().map_err(|_| Error::Predictor {
            name: self.name.clone(),
            message: "subprocess channel poisoned".into(),
        })?;
        let mut out = Vec::with_capacity(queries.len());
        for q in queries {
            let request = Request {
                id: ch.next_id,
                xs: ctx.xs.to_vec(),
                ys: ctx.ys.to_vec(),
                query: q.clone(),
            };
            ch.next_id += 1;
            out.push(self.exchange(&mut ch, &request)?);
        }
        Ok(out)
    }
}

impl Drop for SubprocessPredictor {
    fn drop(&mut self) {
        if let Ok(ch) = self.channel.get_mut() {
            let _ = ch.child.kill();
            let _ = ch.child.wait();
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn request_round_trip() {
        let r = Request {
            id: 7,
            xs: vec![vec![0.1 + 0.2, -1e-310]],
            ys: vec![std::f64::consts::PI],
            query: vec![1.0 / 3.0],
        };
        let back: Request = serde_json::from_str(&serde_json::to_string(&r).unwrap()).unwrap();
        assert_eq!(back, r);
    }

    #[test]
    fn shell_echo_stub() {
        // Replies with a fixed value, echoing the request id.
        let cmd = r#"while read -r line; do id=$(echo "$line" | sed 's/.*"id":\([0-9]*\).*/\1/'); echo "{\"id\":$id,\"prediction\":2.5}"; done"#;
        let p = SubprocessPredictor::spawn("stub", cmd).unwrap();
        let xs = vec![vec![1.0]];
        let ys = vec![2.5];
        let ctx = Context::new(0, &xs, &ys);
        assert_eq!(p.predict(&ctx, &[0.0]).unwrap(), 2.5);
        assert_eq!(p.predict(&ctx, &[1.0]).unwrap(), 2.5);
    }

    #[test]
    fn bad_reply_is_reported_with_request() {
        let p = SubprocessPredictor::spawn("bad", "while read -r line; do echo nonsense; done").unwrap();
        let xs = vec![vec![1.0]];
        let ys = vec![2.0];
        let err = p.predict(&Context::new(3, &xs, &ys), &[0.5]).unwrap_err().to_string();
        assert!(err.contains("malformed"), "{err}");
        assert!(err.contains("\"query\":[0.5]"), "{err}");
    }

    #[test]
    fn timeout_is_reported() {
        let p = SubprocessPredictor::spawn_with_timeout("slow", "sleep 5", Duration::from_millis(100)).unwrap();
        let err = p.predict(&Context::new(0, &[], &[]), &[0.5]).unwrap_err().to_string();
        assert!(err.contains("no reply"), "{err}");
    }
}
