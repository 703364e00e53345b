//! Oracles served by a child process over a line protocol.
//!
//! Each request is one line `t x_1 ... x_d` (native coordinates, whitespace
//! separated) written to the child's stdin; the child answers with one line
//! holding a single finite number.

use std::io::{BufRead, BufReader, Write};
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::thread;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExternalCommand {
    pub program: String,
    #[serde(default)]
    pub args: Vec<String>,
    /// Native lower and upper bounds per coordinate.
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    #[serde(default = "default_timeout_ms")]
    pub timeout_ms: u64,
}

fn default_timeout_ms() -> u64 {
    60_000
}

impl ExternalCommand {
    pub fn new(
        program: impl Into<String>,
        args: Vec<String>,
        lower: Vec<f64>,
        upper: Vec<f64>,
    ) -> Self {
        Self {
            program: program.into(),
            args,
            lower,
            upper,
            timeout_ms: default_timeout_ms(),
        }
    }
}

/// A running external oracle. Requests are serialized per handle.
pub struct ExternalProcess {
    command: ExternalCommand,
    child: Child,
    stdin: ChildStdin,
    replies: Receiver<std::io::Result<String>>,
}

impl ExternalProcess {
    pub fn spawn(command: &ExternalCommand) -> Result<Self> {
        let mut child = Command::new(&command.program)
            .args(&command.args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .map_err(|e| Error::Oracle(format!("cannot start {}: {e}", command.program)))?;
        let stdin = child.stdin.take().expect("piped stdin");
        let stdout = child.stdout.take().expect("piped stdout");
        let (tx, rx) = mpsc::channel();
        thread::spawn(move || {
            for line in BufReader::new(stdout).lines() {
                if tx.send(line).is_err() {
                    break;
                }
            }
        });
        Ok(Self {
            command: command.clone(),
            child,
            stdin,
            replies: rx,
        })
    }

    /// Sends one request and parses the reply.
    pub fn query(&mut self, x: &[f64], t: f64) -> Result<f64> {
        let mut line = format!("{t}");
        for v in x {
            line.push_str(&format!(" {v}"));
        }
        line.push('\n');
        if let Err(e) = self
            .stdin
            .write_all(line.as_bytes())
            .and_then(|_| self.stdin.flush())
        {
            return Err(self.exited(format!("write failed: {e}")));
        }
        match self
            .replies
            .recv_timeout(Duration::from_millis(self.command.timeout_ms))
        {
            Ok(Ok(reply)) => parse_reply(&reply),
            Ok(Err(e)) => Err(Error::Oracle(format!("read failed: {e}"))),
            Err(RecvTimeoutError::Timeout) => {
                let _ = self.child.kill();
                Err(Error::Oracle(format!(
                    "no reply within {} ms",
                    self.command.timeout_ms
                )))
            }
            Err(RecvTimeoutError::Disconnected) => Err(self.exited("closed its output".into())),
        }
    }

    fn exited(&mut self, what: String) -> Error {
        let status = self
            .child
            .wait()
            .map(|s| s.to_string())
            .unwrap_or_else(|e| e.to_string());
        Error::Oracle(format!("external oracle {what} ({status})"))
    }
}

impl Drop for ExternalProcess {
    fn drop(&mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

fn parse_reply(reply: &str) -> Result<f64> {
    let mut tokens = reply.split_whitespace();
    let value = match (tokens.next(), tokens.next()) {
        (Some(v), None) => v
            .parse::<f64>()
            .map_err(|_| Error::Oracle(format!("malformed reply {reply:?}")))?,
        _ => return Err(Error::Oracle(format!("malformed reply {reply:?}"))),
    };
    if !value.is_finite() {
        return Err(Error::Oracle(format!("non-finite reply {reply:?}")));
    }
    Ok(value)
}
