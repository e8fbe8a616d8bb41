//! Driving an external segmentation process over a line protocol.
//!
//! The backend process reads newline-terminated requests on stdin and
//! answers one line per request on stdout:
//!
//! ```text
//! PREDICT <image_path> <x0> <y0> <x1> <y1> <out_path>
//!   -> OK <out_path>            (map written to out_path)
//!   -> ERR <message>
//! PREDICT_ALL <image_path> <out_dir>
//!   -> OK <count>               (out_dir/cand_0.pmap .. cand_<count-1>.pmap)
//!   -> ERR <message>
//! ```
//!
//! Maps travel as PMAP files. Fields are space-separated and paths are
//! passed verbatim, so paths containing whitespace are rejected before
//! anything reaches the wire. The adapter spawns the process once and keeps
//! it alive across requests; the child is killed on drop.

use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::{Child, ChildStdin, ChildStdout, Command, Stdio};

use crate::imaging::{load_raster_f32, ProbabilityMap};
use crate::prompts::BoxPrompt;

use super::{BackendInput, SegmenterBackend, SegmenterError};

/// Formats a PREDICT request line (without trailing newline handling by the
/// caller; the returned string ends in `\n`).
pub fn predict_request_line(image_path: &str, prompt: BoxPrompt, out_path: &str) -> String {
    format!(
        "PREDICT {image_path} {} {} {} {} {out_path}\n",
        prompt.x0, prompt.y0, prompt.x1, prompt.y1
    )
}

/// Formats a PREDICT_ALL request line.
pub fn predict_all_request_line(image_path: &str, out_dir: &str) -> String {
    format!("PREDICT_ALL {image_path} {out_dir}\n")
}

fn wire_safe(path: &Path) -> Result<&str, SegmenterError> {
    let s = path.to_str().ok_or_else(|| {
        SegmenterError::ProtocolViolation(format!("path {path:?} is not valid utf-8"))
    })?;
    if s.chars().any(|c| c.is_whitespace()) {
        return Err(SegmenterError::ProtocolViolation(format!(
            "path {s:?} contains whitespace, which the wire protocol cannot carry"
        )));
    }
    Ok(s)
}

/// A segmentation backend running as a child process.
#[derive(Debug)]
pub struct ExternalBackend {
    child: Child,
    stdin: ChildStdin,
    stdout: BufReader<ChildStdout>,
    scratch: PathBuf,
    counter: u64,
    label: String,
}

impl ExternalBackend {
    /// Spawns `command` (program plus arguments) with piped stdio. Scratch
    /// files for responses are created under `scratch_dir`, which must
    /// already exist.
    pub fn spawn(command: &[String], scratch_dir: &Path) -> Result<Self, SegmenterError> {
        let program = command
            .first()
            .ok_or_else(|| SegmenterError::BackendUnavailable("empty backend command".into()))?;
        let mut child = Command::new(program)
            .args(&command[1..])
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .spawn()
            .map_err(|e| {
                SegmenterError::BackendUnavailable(format!("failed to spawn {program}: {e}"))
            })?;
        let stdin = child
            .stdin
            .take()
            .ok_or_else(|| SegmenterError::BackendUnavailable("no stdin pipe".into()))?;
        let stdout = child
            .stdout
            .take()
            .ok_or_else(|| SegmenterError::BackendUnavailable("no stdout pipe".into()))?;
        let label = Path::new(program)
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "external".into());
        Ok(Self {
            child,
            stdin,
            stdout: BufReader::new(stdout),
            scratch: scratch_dir.to_path_buf(),
            counter: 0,
            label,
        })
    }

    fn roundtrip(&mut self, request: &str) -> Result<(String, String), SegmenterError> {
        self.stdin.write_all(request.as_bytes()).map_err(|e| {
            SegmenterError::BackendUnavailable(format!("backend stdin closed: {e}"))
        })?;
        self.stdin.flush().map_err(|e| {
            SegmenterError::BackendUnavailable(format!("backend stdin closed: {e}"))
        })?;
        let mut line = String::new();
        let n = self.stdout.read_line(&mut line).map_err(|e| {
            SegmenterError::BackendUnavailable(format!("backend stdout failed: {e}"))
        })?;
        if n == 0 {
            return Err(SegmenterError::BackendUnavailable(
                "backend closed its output stream".into(),
            ));
        }
        let line = line.trim_end_matches(['\r', '\n']);
        match line.split_once(' ') {
            Some(("OK", payload)) => Ok(("OK".into(), payload.to_string())),
            Some(("ERR", msg)) => Err(SegmenterError::BackendError(msg.to_string())),
            _ => Err(SegmenterError::ProtocolViolation(format!(
                "unparseable response line {line:?}"
            ))),
        }
    }

    fn load_map(
        &self,
        path: &Path,
        input: &BackendInput,
    ) -> Result<ProbabilityMap, SegmenterError> {
        let raster = load_raster_f32(path)?;
        if raster.width() != input.width() || raster.height() != input.height() {
            return Err(SegmenterError::DimensionMismatch(format!(
                "backend wrote a {}x{} map for a {}x{} image",
                raster.width(),
                raster.height(),
                input.width(),
                input.height()
            )));
        }
        Ok(ProbabilityMap::new(raster)?)
    }

    fn input_path<'a>(&self, input: &'a BackendInput) -> Result<&'a str, SegmenterError> {
        let path = input.path().ok_or_else(|| {
            SegmenterError::ProtocolViolation(
                "the subprocess protocol needs a file-backed input image".into(),
            )
        })?;
        wire_safe(path)
    }
}

impl SegmenterBackend for ExternalBackend {
    fn predict(
        &mut self,
        input: &BackendInput,
        prompt: BoxPrompt,
    ) -> Result<ProbabilityMap, SegmenterError> {
        let image_path = self.input_path(input)?.to_string();
        self.counter += 1;
        let out_path = self.scratch.join(format!("pred_{}.pmap", self.counter));
        let request = predict_request_line(&image_path, prompt, wire_safe(&out_path)?);
        let (_, payload) = self.roundtrip(&request)?;
        self.load_map(Path::new(&payload), input)
    }

    fn predict_everything(
        &mut self,
        input: &BackendInput,
    ) -> Result<Vec<ProbabilityMap>, SegmenterError> {
        let image_path = self.input_path(input)?.to_string();
        self.counter += 1;
        let out_dir = self.scratch.join(format!("all_{}", self.counter));
        std::fs::create_dir_all(&out_dir).map_err(|e| {
            SegmenterError::BackendUnavailable(format!("cannot create scratch dir: {e}"))
        })?;
        let request = predict_all_request_line(&image_path, wire_safe(&out_dir)?);
        let (_, payload) = self.roundtrip(&request)?;
        let count: usize = payload.parse().map_err(|_| {
            SegmenterError::ProtocolViolation(format!(
                "PREDICT_ALL answered {payload:?}, expected a candidate count"
            ))
        })?;
        if count == 0 {
            return Err(SegmenterError::EmptyCandidateList);
        }
        (0..count)
            .map(|k| self.load_map(&out_dir.join(format!("cand_{k}.pmap")), input))
            .collect()
    }

    fn label(&self) -> &str {
        &self.label
    }
}

impl Drop for ExternalBackend {
    fn drop(&mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}
