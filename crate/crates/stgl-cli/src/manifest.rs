//! Run manifest: one `manifest.txt` per output directory recording the
//! command, every effective parameter, SHA-256 hashes of the inputs, the
//! tool version, and wall-clock timing. Timings live in their own
//! section so data files stay byte-identical across reruns.

use std::path::Path;
use std::time::Instant;

use sha2::{Digest, Sha256};
use stgl::io::{format_float, IoError, KvDocument};

pub const MANIFEST_FILE: &str = "manifest.txt";

pub struct Manifest {
    doc: KvDocument,
    started: Instant,
}

impl Manifest {
    pub fn new(command: &str) -> Self {
        let mut doc = KvDocument::new();
        doc.set("manifest", "command", command)
            .set("manifest", "tool_version", env!("CARGO_PKG_VERSION"));
        Manifest {
            doc,
            started: Instant::now(),
        }
    }

    pub fn param(&mut self, key: &str, value: impl ToString) -> &mut Self {
        self.doc.set("parameters", key, value.to_string());
        self
    }

    pub fn param_float(&mut self, key: &str, value: f64) -> &mut Self {
        self.doc.set("parameters", key, format_float(value));
        self
    }

    /// Records the SHA-256 of an input file under a logical name.
    pub fn input(&mut self, name: &str, path: &Path) -> Result<&mut Self, IoError> {
        let bytes = std::fs::read(path).map_err(|source| IoError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let digest = Sha256::digest(&bytes);
        self.doc.set("inputs", name, format!("sha256:{digest:x}"));
        Ok(self)
    }

    /// Finalizes the timing section and writes `manifest.txt` into `dir`.
    pub fn write(mut self, dir: &Path) -> Result<(), IoError> {
        let elapsed = self.started.elapsed().as_secs_f64();
        self.doc
            .set("timings", "wall_clock_seconds", format_float(elapsed));
        self.doc.save(&dir.join(MANIFEST_FILE))
    }
}
