//! Run manifests and atomic output writing.
//!
//! Every run writes its data files atomically (temp file + rename), then a
//! `run_manifest.json` naming each output with its size and FNV-1a 64
//! checksum. The manifest is written last so its presence marks a complete
//! run.

use std::collections::BTreeMap;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

/// FNV-1a, 64-bit.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut hash = 0xcbf29ce484222325u64;
    for &b in bytes {
        hash ^= b as u64;
        hash = hash.wrapping_mul(0x100000001b3);
    }
    hash
}

pub struct OutputWriter {
    dir: PathBuf,
    outputs: Vec<serde_json::Value>,
    started_ms: u128,
}

impl OutputWriter {
    pub fn new(dir: &Path) -> std::io::Result<Self> {
        std::fs::create_dir_all(dir)?;
        Ok(Self {
            dir: dir.to_path_buf(),
            outputs: Vec::new(),
            started_ms: now_ms(),
        })
    }

    /// Atomically write one output file and record it for the manifest.
    pub fn write(&mut self, name: &str, contents: &str) -> std::io::Result<()> {
        let bytes = contents.as_bytes();
        let final_path = self.dir.join(name);
        let tmp_path = self.dir.join(format!("{name}.tmp-{}", std::process::id()));
        {
            let mut f = std::fs::File::create(&tmp_path)?;
            f.write_all(bytes)?;
            f.sync_all()?;
        }
        std::fs::rename(&tmp_path, &final_path)?;
        self.outputs.push(serde_json::json!({
            "file": name,
            "bytes": bytes.len(),
            "fnv1a64": format!("{:016x}", fnv1a64(bytes)),
        }));
        Ok(())
    }

    /// Write the manifest (always last).
    pub fn finish(
        mut self,
        command: &str,
        params: &BTreeMap<String, String>,
        diagnostics: serde_json::Value,
    ) -> std::io::Result<()> {
        let manifest = serde_json::json!({
            "command": command,
            "params": params,
            "version": env!("CARGO_PKG_VERSION"),
            "started_unix_ms": self.started_ms,
            "finished_unix_ms": now_ms(),
            "outputs": self.outputs,
            "diagnostics": diagnostics,
        });
        let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
        let final_path = self.dir.join("run_manifest.json");
        let tmp_path = self
            .dir
            .join(format!("run_manifest.json.tmp-{}", std::process::id()));
        {
            let mut f = std::fs::File::create(&tmp_path)?;
            f.write_all(text.as_bytes())?;
            f.write_all(b"\n")?;
            f.sync_all()?;
        }
        std::fs::rename(&tmp_path, &final_path)?;
        self.outputs.clear();
        Ok(())
    }
}

fn now_ms() -> u128 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis())
        .unwrap_or(0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fnv_reference_values() {
        // Standard FNV-1a test vectors.
        assert_eq!(fnv1a64(b""), 0xcbf29ce484222325);
        assert_eq!(fnv1a64(b"a"), 0xaf63dc4c8601ec8c);
        assert_eq!(fnv1a64(b"foobar"), 0x85944171f73967e8);
    }
}
