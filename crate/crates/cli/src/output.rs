use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::Context;
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

/// Provenance block written at the top of every artifact.
#[derive(Clone, Debug, Serialize)]
pub struct Header {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub config_sha256: String,
    pub seed: u64,
    pub config: Value,
}

impl Header {
    pub fn new(command: &str, config: &impl Serialize, seed: u64) -> anyhow::Result<Self> {
        let config = serde_json::to_value(config)?;
        let canonical = serde_json::to_string(&config)?;
        Ok(Self {
            tool: env!("CARGO_PKG_NAME").into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            config_sha256: hex::encode(Sha256::digest(canonical.as_bytes())),
            seed,
            config,
        })
    }

    fn csv_preamble(&self) -> String {
        format!(
            "# tool: {} {}\n# command: {}\n# config_sha256: {}\n# seed: {}\n# config: {}\n",
            self.tool,
            self.version,
            self.command,
            self.config_sha256,
            self.seed,
            serde_json::to_string(&self.config).unwrap_or_default()
        )
    }
}

pub struct OutDir {
    pub root: PathBuf,
    pub header: Header,
    pub written: Vec<PathBuf>,
}

impl OutDir {
    pub fn create(root: &Path, header: Header) -> anyhow::Result<Self> {
        std::fs::create_dir_all(root)
            .with_context(|| format!("creating output directory {}", root.display()))?;
        Ok(Self {
            root: root.to_path_buf(),
            header,
            written: Vec::new(),
        })
    }

    /// Writes through a temporary file in the same directory, then renames.
    fn write_atomic(&mut self, name: &str, bytes: &[u8]) -> anyhow::Result<()> {
        let path = self.root.join(name);
        let mut tmp = tempfile::NamedTempFile::new_in(&self.root)
            .with_context(|| format!("creating temporary file in {}", self.root.display()))?;
        tmp.write_all(bytes)?;
        tmp.flush()?;
        tmp.persist(&path)
            .with_context(|| format!("writing {}", path.display()))?;
        self.written.push(path);
        Ok(())
    }

    pub fn json(&mut self, name: &str, body: &impl Serialize) -> anyhow::Result<()> {
        let doc = json!({ "header": self.header, "body": body });
        let mut text = serde_json::to_string_pretty(&doc)?;
        text.push('\n');
        self.write_atomic(name, text.as_bytes())
    }

    pub fn csv(&mut self, name: &str, table: &str) -> anyhow::Result<()> {
        let mut text = self.header.csv_preamble();
        text.push_str(table);
        self.write_atomic(name, text.as_bytes())
    }
}
