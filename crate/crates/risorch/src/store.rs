//! Codebook directory: a TOML `manifest` and a flat little-endian `payload.bin`.
//!
//! Per entry the payload holds the location (3 doubles), the phases (N),
//! the influence (N) and the optimal SNR (1).

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use risorch_core::codebook::{Codebook, CodebookEntry};
use risorch_core::scene::SceneConfig;
use risorch_core::Vec3;

use crate::config::SceneFile;

pub const MANIFEST: &str = "manifest";
pub const PAYLOAD: &str = "payload.bin";
const FORMAT: &str = "risorch-codebook/1";

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: invalid manifest: {detail}")]
    Manifest { path: PathBuf, detail: String },
    #[error("{path}: payload truncated at byte {offset} (expected {expected} bytes)")]
    Truncated {
        path: PathBuf,
        offset: u64,
        expected: u64,
    },
    #[error("{path}: {extra} unexpected trailing bytes after byte {offset}")]
    Trailing {
        path: PathBuf,
        offset: u64,
        extra: u64,
    },
    #[error(
        "codebook fingerprint {expected} does not match the scene ({found}); \
         recompile the codebook for this scene"
    )]
    FingerprintMismatch { expected: String, found: String },
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub format: String,
    pub version: String,
    pub fingerprint: String,
    pub element_count: usize,
    pub entry_count: usize,
    pub payload_bytes: u64,
    pub scene: SceneFile,
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> StoreError + '_ {
    move |source| StoreError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn entry_bytes(n: usize) -> u64 {
    8 * (3 + 2 * n as u64 + 1)
}

pub fn encode_payload(codebook: &Codebook) -> Vec<u8> {
    let n = codebook.element_count;
    let mut out = Vec::with_capacity(entry_bytes(n) as usize * codebook.len());
    for e in &codebook.entries {
        let values = e
            .location
            .to_array()
            .into_iter()
            .chain(e.phases.iter().copied())
            .chain(e.influence.iter().copied())
            .chain([e.optimal_snr]);
        for v in values {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

/// Writes `dir/manifest` and `dir/payload.bin`, creating `dir` if needed.
pub fn save_codebook(codebook: &Codebook, scene: &SceneConfig, dir: &Path) -> Result<(), StoreError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let payload = encode_payload(codebook);
    let manifest = Manifest {
        format: FORMAT.to_string(),
        version: codebook.version.clone(),
        fingerprint: codebook.fingerprint.clone(),
        element_count: codebook.element_count,
        entry_count: codebook.len(),
        payload_bytes: payload.len() as u64,
        scene: SceneFile::from_scene(scene),
    };
    let text = toml::to_string(&manifest).map_err(|e| StoreError::Manifest {
        path: dir.join(MANIFEST),
        detail: e.to_string(),
    })?;
    let payload_path = dir.join(PAYLOAD);
    let mut f = fs::File::create(&payload_path).map_err(io_err(&payload_path))?;
    f.write_all(&payload).map_err(io_err(&payload_path))?;
    let manifest_path = dir.join(MANIFEST);
    fs::write(&manifest_path, text).map_err(io_err(&manifest_path))?;
    Ok(())
}

pub fn read_manifest(dir: &Path) -> Result<Manifest, StoreError> {
    let path = dir.join(MANIFEST);
    let text = fs::read_to_string(&path).map_err(io_err(&path))?;
    let m: Manifest = toml::from_str(&text).map_err(|e| StoreError::Manifest {
        path: path.clone(),
        detail: e.to_string(),
    })?;
    if m.format != FORMAT {
        return Err(StoreError::Manifest {
            path,
            detail: format!("unsupported format {:?}", m.format),
        });
    }
    Ok(m)
}

/// Reads a codebook without checking it against a scene.
pub fn read_codebook(dir: &Path) -> Result<Codebook, StoreError> {
    let m = read_manifest(dir)?;
    let path = dir.join(PAYLOAD);
    let bytes = fs::read(&path).map_err(io_err(&path))?;
    let n = m.element_count;
    let expected = entry_bytes(n) * m.entry_count as u64;
    let mut cursor = Cursor {
        bytes: &bytes,
        offset: 0,
        path: &path,
        expected,
    };
    let mut entries = Vec::with_capacity(m.entry_count);
    for _ in 0..m.entry_count {
        let location = Vec3::new(cursor.f64()?, cursor.f64()?, cursor.f64()?);
        let phases = cursor.f64s(n)?;
        let influence = cursor.f64s(n)?;
        let optimal_snr = cursor.f64()?;
        entries.push(CodebookEntry {
            location,
            phases,
            influence,
            optimal_snr,
        });
    }
    let end = cursor.offset;
    if end != bytes.len() {
        return Err(StoreError::Trailing {
            path: path.clone(),
            offset: end as u64,
            extra: (bytes.len() - end) as u64,
        });
    }
    Ok(Codebook {
        fingerprint: m.fingerprint,
        version: m.version,
        element_count: n,
        entries,
    })
}

/// Reads a codebook and refuses it unless it was compiled for `scene`.
pub fn load_codebook(dir: &Path, scene: &SceneConfig) -> Result<Codebook, StoreError> {
    let codebook = read_codebook(dir)?;
    let geometry = risorch_core::geometry::build_geometry(scene).map_err(|e| StoreError::Manifest {
        path: dir.join(MANIFEST),
        detail: format!("scene: {e}"),
    })?;
    let found = scene.fingerprint(&geometry.positions);
    if found != codebook.fingerprint {
        return Err(StoreError::FingerprintMismatch {
            expected: codebook.fingerprint,
            found,
        });
    }
    Ok(codebook)
}

struct Cursor<'a> {
    bytes: &'a [u8],
    offset: usize,
    path: &'a Path,
    expected: u64,
}

impl Cursor<'_> {
    fn f64(&mut self) -> Result<f64, StoreError> {
        let end = self.offset + 8;
        let Some(chunk) = self.bytes.get(self.offset..end) else {
            return Err(StoreError::Truncated {
                path: self.path.to_path_buf(),
                offset: self.bytes.len() as u64,
                expected: self.expected,
            });
        };
        self.offset = end;
        Ok(f64::from_le_bytes(chunk.try_into().expect("8 bytes")))
    }

    fn f64s(&mut self, n: usize) -> Result<Vec<f64>, StoreError> {
        (0..n).map(|_| self.f64()).collect()
    }
}
