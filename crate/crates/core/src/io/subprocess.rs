//! Line protocol over a child process: one CSV line of features in,
//! one decimal line out, in order.

use std::io::{BufRead, BufReader, Write};
use std::process::{Child, Command, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError, Sender};
use std::thread;
use std::time::{Duration, Instant};

use super::{IoError, Result, ScalingSpec};
use crate::pursuit::BlackBox;

pub struct SubprocessBlackBox {
    child: Child,
    writer: Option<Sender<Vec<u8>>>,
    replies: Receiver<String>,
    timeout: Duration,
    poisoned: Option<String>,
    answered: usize,
}

impl SubprocessBlackBox {
    /// Starts `command` under `sh -c`. `timeout` bounds the wait for each reply line.
    pub fn spawn(command: &str, timeout: Duration) -> Result<Self> {
        let mut child = Command::new("sh")
            .arg("-c")
            .arg(command)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()?;
        let mut stdin = child.stdin.take().expect("piped stdin");
        let stdout = child.stdout.take().expect("piped stdout");

        let (wtx, wrx) = mpsc::channel::<Vec<u8>>();
        thread::spawn(move || {
            for buf in wrx {
                if stdin.write_all(&buf).and_then(|_| stdin.flush()).is_err() {
                    break;
                }
            }
        });
        let (rtx, rrx) = mpsc::channel();
        thread::spawn(move || {
            for line in BufReader::new(stdout).lines() {
                let Ok(line) = line else { break };
                if rtx.send(line).is_err() {
                    break;
                }
            }
        });
        Ok(SubprocessBlackBox {
            child,
            writer: Some(wtx),
            replies: rrx,
            timeout,
            poisoned: None,
            answered: 0,
        })
    }

    fn exit_status(&mut self) -> String {
        let deadline = Instant::now() + Duration::from_millis(200);
        loop {
            match self.child.try_wait() {
                Ok(Some(s)) => return s.to_string(),
                Ok(None) if Instant::now() < deadline => thread::sleep(Duration::from_millis(5)),
                Ok(None) => return "closed its output".into(),
                Err(e) => return e.to_string(),
            }
        }
    }

    fn fail(&mut self, e: IoError) -> IoError {
        self.poisoned = Some(e.to_string());
        e
    }

    /// Sends the points (original units) as one batch and reads one value per point.
    pub fn query(&mut self, points: &[Vec<f64>]) -> Result<Vec<f64>> {
        if points.is_empty() {
            return Ok(Vec::new());
        }
        if let Some(msg) = &self.poisoned {
            return Err(IoError::ChildExit(format!("stream unusable after: {msg}")));
        }
        let mut buf = Vec::with_capacity(points.len() * 16 * points[0].len().max(1));
        for p in points {
            let line = p.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(",");
            buf.extend_from_slice(line.as_bytes());
            buf.push(b'\n');
        }
        let sent = self.writer.as_ref().is_some_and(|w| w.send(buf).is_ok());
        if !sent {
            let status = self.exit_status();
            return Err(self.fail(IoError::ChildExit(status)));
        }
        let mut out = Vec::with_capacity(points.len());
        for _ in 0..points.len() {
            match self.replies.recv_timeout(self.timeout) {
                Ok(line) => {
                    let index = self.answered;
                    self.answered += 1;
                    match line.trim().parse::<f64>() {
                        Ok(v) if v.is_finite() => out.push(v),
                        _ => return Err(self.fail(IoError::MalformedReply { index, text: line })),
                    }
                }
                Err(RecvTimeoutError::Timeout) => {
                    let t = self.timeout;
                    return Err(self.fail(IoError::Timeout(t)));
                }
                Err(RecvTimeoutError::Disconnected) => {
                    let status = self.exit_status();
                    return Err(self.fail(IoError::ChildExit(status)));
                }
            }
        }
        Ok(out)
    }
}

impl Drop for SubprocessBlackBox {
    fn drop(&mut self) {
        self.writer.take();
        let deadline = Instant::now() + Duration::from_millis(500);
        while Instant::now() < deadline {
            if let Ok(Some(_)) = self.child.try_wait() {
                return;
            }
            thread::sleep(Duration::from_millis(5));
        }
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

/// Presents a subprocess that speaks original units as a black box on the
/// unit cube with scaled labels.
pub struct ScaledBlackBox<'a> {
    pub inner: &'a mut SubprocessBlackBox,
    pub scaling: &'a ScalingSpec,
}

impl BlackBox for ScaledBlackBox<'_> {
    fn query(&mut self, points: &[Vec<f64>]) -> std::result::Result<Vec<f64>, String> {
        let raw: Vec<Vec<f64>> = points.iter().map(|p| self.scaling.invert_features(p)).collect();
        let values = self.inner.query(&raw).map_err(|e| e.to_string())?;
        Ok(values.into_iter().map(|v| self.scaling.apply_label(v)).collect())
    }
}
