use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use anyhow::Context;
use serde::Serialize;
use serde_json::{json, Value};

/// Full-precision CSV number.
pub fn num(v: f64) -> String {
    format!("{v:.16e}")
}

/// Header plus rows, each row already formatted.
pub struct Csv {
    text: String,
}

impl Csv {
    pub fn new(header: &[&str]) -> Self {
        Self {
            text: header.join(",") + "\n",
        }
    }

    pub fn row(&mut self, cells: &[f64]) {
        let line: Vec<String> = cells.iter().map(|v| num(*v)).collect();
        let _ = writeln!(self.text, "{}", line.join(","));
    }

    pub fn as_str(&self) -> &str {
        &self.text
    }
}

/// Output directory of one command plus the files written into it.
pub struct RunDir {
    dir: PathBuf,
    files: Vec<String>,
    started: Instant,
    started_unix: f64,
}

impl RunDir {
    pub fn create(dir: PathBuf) -> anyhow::Result<Self> {
        std::fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
        Ok(Self {
            dir,
            files: Vec::new(),
            started: Instant::now(),
            started_unix: SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs_f64()).unwrap_or(0.0),
        })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    /// Records a file written by someone else.
    pub fn record(&mut self, name: &str) {
        self.files.push(name.to_string());
    }

    pub fn write(&mut self, name: &str, text: &str) -> anyhow::Result<()> {
        let p = self.path(name);
        std::fs::write(&p, text).with_context(|| format!("writing {}", p.display()))?;
        self.record(name);
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> anyhow::Result<()> {
        let text = serde_json::to_string_pretty(value)?;
        self.write(name, &(text + "\n"))
    }

    /// manifest.json: command line, merged config, versions, timing and outcome.
    pub fn finish(&mut self, command: &str, config: Value, jobs: usize, exit_code: i32, error: Option<String>) -> anyhow::Result<()> {
        let manifest = json!({
            "command": command,
            "argv": std::env::args().collect::<Vec<_>>(),
            "config": config,
            "versions": {
                "sok": env!("CARGO_PKG_VERSION"),
                "sok_core": sok_core::VERSION,
                "os": std::env::consts::OS,
                "arch": std::env::consts::ARCH,
            },
            "jobs": jobs,
            "started_unix": self.started_unix,
            "wall_time_s": self.started.elapsed().as_secs_f64(),
            "exit_code": exit_code,
            "error": error,
            "outputs": self.files,
        });
        let p = self.path("manifest.json");
        std::fs::write(&p, serde_json::to_string_pretty(&manifest)? + "\n").with_context(|| format!("writing {}", p.display()))?;
        Ok(())
    }
}
