//! Renders generated code to images through external commands.
//!
//! Each format maps to a command template containing `{input}` and
//! `{output}` placeholders. A render succeeds when the command exits with
//! status 0 within its timeout and leaves a decodable image at `{output}`.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::ErrorKind;
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;
use wait_timeout::ChildExt;

use super::remote::Semaphore;
use super::{CodeFormat, RasterImage};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RenderTemplate {
    pub command: String,
    #[serde(default = "default_timeout")]
    pub timeout_secs: f64,
}

fn default_timeout() -> f64 {
    60.0
}

impl RenderTemplate {
    pub fn new(command: impl Into<String>, timeout_secs: f64) -> Self {
        RenderTemplate {
            command: command.into(),
            timeout_secs,
        }
    }

    pub fn validate(&self) -> Result<(), RenderError> {
        if !self.command.contains("{input}") || !self.command.contains("{output}") {
            return Err(RenderError::Config(format!(
                "command template `{}` must contain {{input}} and {{output}}",
                self.command
            )));
        }
        if !(self.timeout_secs.is_finite() && self.timeout_secs > 0.0) {
            return Err(RenderError::Config(format!(
                "timeout must be positive, got {}",
                self.timeout_secs
            )));
        }
        match shlex::split(&self.command) {
            Some(argv) if !argv.is_empty() => Ok(()),
            _ => Err(RenderError::Config(format!(
                "cannot split command template `{}`",
                self.command
            ))),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RenderError {
    /// Misconfiguration; not the model's fault.
    #[error("renderer configuration: {0}")]
    Config(String),
    #[error("renderer timed out after {0} s")]
    Timeout(f64),
    #[error("renderer exited with {status}: {stderr}")]
    Exit { status: String, stderr: String },
    #[error("renderer produced no usable image: {0}")]
    Output(String),
    #[error("renderer I/O: {0}")]
    Io(String),
}

impl RenderError {
    /// Whether this outcome counts as a failed execution of generated code.
    pub fn is_execution_failure(&self) -> bool {
        matches!(
            self,
            RenderError::Timeout(_) | RenderError::Exit { .. } | RenderError::Output(_)
        )
    }
}

fn io_err(e: std::io::Error) -> RenderError {
    RenderError::Io(e.to_string())
}

/// Writes `code` to a scratch file under `workdir`, runs the template and
/// decodes the output image.
pub fn render_via_command(
    code: &str,
    format: CodeFormat,
    template: Option<&RenderTemplate>,
    workdir: &Path,
) -> Result<RasterImage, RenderError> {
    let template = template.ok_or_else(|| {
        RenderError::Config(format!("no renderer command configured for {format}"))
    })?;
    template.validate()?;

    let scratch = tempfile::Builder::new()
        .prefix("render-")
        .tempdir_in(workdir)
        .map_err(io_err)?;
    let input = scratch.path().join(format!("input.{}", format.extension()));
    let output = scratch.path().join("output.png");
    let stderr_path = scratch.path().join("stderr.log");
    fs::write(&input, code).map_err(io_err)?;

    let in_str = input.to_string_lossy();
    let out_str = output.to_string_lossy();
    let argv: Vec<String> = shlex::split(&template.command)
        .unwrap_or_default()
        .into_iter()
        .map(|a| a.replace("{input}", &in_str).replace("{output}", &out_str))
        .collect();

    let stderr_file = File::create(&stderr_path).map_err(io_err)?;
    let mut child = match Command::new(&argv[0])
        .args(&argv[1..])
        .current_dir(scratch.path())
        .stdin(Stdio::null())
        .stdout(Stdio::null())
        .stderr(stderr_file)
        .spawn()
    {
        Ok(c) => c,
        Err(e) if e.kind() == ErrorKind::NotFound => {
            return Err(RenderError::Config(format!(
                "renderer binary `{}` not found",
                argv[0]
            )))
        }
        Err(e) => return Err(io_err(e)),
    };

    let status = match child
        .wait_timeout(Duration::from_secs_f64(template.timeout_secs))
        .map_err(io_err)?
    {
        Some(s) => s,
        None => {
            let _ = child.kill();
            let _ = child.wait();
            return Err(RenderError::Timeout(template.timeout_secs));
        }
    };
    if !status.success() {
        let stderr = fs::read_to_string(&stderr_path).unwrap_or_default();
        let tail: String = stderr
            .chars()
            .rev()
            .take(400)
            .collect::<Vec<_>>()
            .into_iter()
            .rev()
            .collect();
        return Err(RenderError::Exit {
            status: status.to_string(),
            stderr: tail.trim().to_string(),
        });
    }
    let bytes = fs::read(&output).map_err(|e| RenderError::Output(e.to_string()))?;
    RasterImage::decode(&bytes).map_err(|e| RenderError::Output(e.to_string()))
}

/// Execution counters.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExecStats {
    pub attempts: usize,
    pub successes: usize,
}

impl ExecStats {
    /// Success percentage, or `None` before any attempt.
    pub fn rate(&self) -> Option<f64> {
        (self.attempts > 0).then(|| 100.0 * self.successes as f64 / self.attempts as f64)
    }
}

/// Per-format templates plus a cap on concurrent renders.
pub struct Renderer {
    templates: BTreeMap<CodeFormat, RenderTemplate>,
    workdir: PathBuf,
    gate: Semaphore,
    attempts: AtomicUsize,
    successes: AtomicUsize,
}

impl Renderer {
    pub fn new(
        templates: BTreeMap<CodeFormat, RenderTemplate>,
        workdir: PathBuf,
        max_parallel: usize,
    ) -> Result<Self, RenderError> {
        for t in templates.values() {
            t.validate()?;
        }
        Ok(Renderer {
            templates,
            workdir,
            gate: Semaphore::new(max_parallel),
            attempts: AtomicUsize::new(0),
            successes: AtomicUsize::new(0),
        })
    }

    pub fn supports(&self, format: CodeFormat) -> bool {
        self.templates.contains_key(&format)
    }

    /// Renders and records the attempt when it reflects on the code itself.
    pub fn render(&self, code: &str, format: CodeFormat) -> Result<RasterImage, RenderError> {
        let _permit = self.gate.acquire();
        let result = render_via_command(code, format, self.templates.get(&format), &self.workdir);
        match &result {
            Ok(_) => {
                self.attempts.fetch_add(1, Ordering::SeqCst);
                self.successes.fetch_add(1, Ordering::SeqCst);
            }
            Err(e) if e.is_execution_failure() => {
                self.attempts.fetch_add(1, Ordering::SeqCst);
            }
            Err(_) => {}
        }
        result
    }

    pub fn stats(&self) -> ExecStats {
        ExecStats {
            attempts: self.attempts.load(Ordering::SeqCst),
            successes: self.successes.load(Ordering::SeqCst),
        }
    }
}
