use std::path::PathBuf;

use serde::Serialize;
use serde_json::json;

use contagion::{Error, Result};

/// Routes results to files under `--out` (with a `meta.json`) or to stdout.
pub struct Sink {
    out: Option<PathBuf>,
    written: Vec<String>,
}

impl Sink {
    pub fn new(out: Option<PathBuf>) -> Result<Self> {
        if let Some(dir) = &out {
            std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
        Ok(Self { out, written: Vec::new() })
    }

    /// The main result: a file under `--out`, else printed.
    pub fn primary(&mut self, name: &str, content: &str) -> Result<()> {
        match &self.out {
            Some(_) => self.file(name, content),
            None => {
                print!("{content}");
                if !content.ends_with('\n') {
                    println!();
                }
                Ok(())
            }
        }
    }

    /// A supporting result, only written when `--out` is set.
    pub fn file(&mut self, name: &str, content: &str) -> Result<()> {
        if let Some(dir) = &self.out {
            let path = dir.join(name);
            std::fs::write(&path, content).map_err(|e| Error::io(&path, e))?;
            self.written.push(name.to_string());
        }
        Ok(())
    }

    pub fn finish(self, invocation: &impl Serialize, summary: serde_json::Value) -> Result<()> {
        if let Some(dir) = &self.out {
            let meta = json!({
                "tool": "contagion",
                "version": env!("CARGO_PKG_VERSION"),
                "invocation": invocation,
                "outputs": self.written,
                "summary": summary,
            });
            let path = dir.join("meta.json");
            let text = serde_json::to_string_pretty(&meta).expect("meta serialization is infallible");
            std::fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
        }
        Ok(())
    }
}
