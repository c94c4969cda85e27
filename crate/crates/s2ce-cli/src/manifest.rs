use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

/// Record of one command invocation: inputs, seed, mode, and the SHA-256 of
/// every artifact written. Written before execution starts and finalized
/// with checksums at exit, so a run is reproducible from its manifest
/// alone.
#[derive(Debug, Clone, Serialize, Deserialize, Default)]
pub struct RunManifest {
    pub command: String,
    pub config_paths: Vec<String>,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode: Option<String>,
    pub out_dir: String,
    /// artifact file name -> sha256 hex.
    pub artifacts: BTreeMap<String, String>,
}

impl RunManifest {
    pub fn start(
        command: &str,
        configs: &[&Path],
        seed: u64,
        mode: Option<&str>,
        out_dir: &Path,
    ) -> std::io::Result<Self> {
        let manifest = RunManifest {
            command: command.to_string(),
            config_paths: configs.iter().map(|p| p.display().to_string()).collect(),
            seed,
            mode: mode.map(str::to_string),
            out_dir: out_dir.display().to_string(),
            artifacts: BTreeMap::new(),
        };
        manifest.write(out_dir)?;
        Ok(manifest)
    }

    /// Registers a written artifact by checksumming it.
    pub fn add_artifact(&mut self, path: &Path) -> std::io::Result<()> {
        let bytes = std::fs::read(path)?;
        let digest = Sha256::digest(&bytes);
        let name = path
            .file_name()
            .map(|n| n.to_string_lossy().to_string())
            .unwrap_or_else(|| path.display().to_string());
        self.artifacts.insert(name, hex(&digest));
        Ok(())
    }

    pub fn finalize(&self, out_dir: &Path) -> std::io::Result<PathBuf> {
        self.write(out_dir)
    }

    fn write(&self, out_dir: &Path) -> std::io::Result<PathBuf> {
        let path = out_dir.join("manifest.json");
        std::fs::write(&path, serde_json::to_string_pretty(self).expect("manifest serializes"))?;
        Ok(path)
    }
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}
