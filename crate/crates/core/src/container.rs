//! Checksummed, versioned text container for persisted artifacts.
//!
//! Layout:
//!
//! ```text
//! FARSENT <kind> v1
//! sha256 <hex digest of payload> <payload byte length>
//! <JSON payload>
//! ```

use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;
use sha2::{Digest, Sha256};
use thiserror::Error;

pub const MAGIC: &str = "FARSENT";
pub const VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ContainerError {
    #[error("cannot access {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("not a farsent container")]
    BadMagic,
    #[error("unsupported container version {found:?} (this build reads v{VERSION})")]
    Version { found: String },
    #[error("container holds a {found}, expected a {expected}")]
    Kind { expected: String, found: String },
    #[error("container is truncated: {0}")]
    Truncated(String),
    #[error("checksum mismatch: payload is corrupted")]
    Checksum,
    #[error("malformed payload: {0}")]
    Json(#[from] serde_json::Error),
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn encode<T: Serialize>(kind: &str, value: &T) -> Result<Vec<u8>, ContainerError> {
    let payload = serde_json::to_vec(value)?;
    let mut out = format!(
        "{MAGIC} {kind} v{VERSION}\nsha256 {} {}\n",
        sha256_hex(&payload),
        payload.len()
    )
    .into_bytes();
    out.extend_from_slice(&payload);
    Ok(out)
}

fn split_line(bytes: &[u8]) -> Option<(&str, &[u8])> {
    let nl = bytes.iter().position(|b| *b == b'\n')?;
    let line = std::str::from_utf8(&bytes[..nl]).ok()?;
    Some((line, &bytes[nl + 1..]))
}

pub fn decode<T: DeserializeOwned>(kind: &str, bytes: &[u8]) -> Result<T, ContainerError> {
    let (header, rest) = split_line(bytes).ok_or(ContainerError::BadMagic)?;
    let mut parts = header.split(' ');
    if parts.next() != Some(MAGIC) {
        return Err(ContainerError::BadMagic);
    }
    let found_kind = parts.next().ok_or(ContainerError::BadMagic)?;
    let version = parts.next().unwrap_or("");
    if version != format!("v{VERSION}") {
        return Err(ContainerError::Version {
            found: version.to_string(),
        });
    }
    if found_kind != kind {
        return Err(ContainerError::Kind {
            expected: kind.to_string(),
            found: found_kind.to_string(),
        });
    }
    let (check, payload) =
        split_line(rest).ok_or_else(|| ContainerError::Truncated("missing checksum line".into()))?;
    let fields: Vec<&str> = check.split(' ').collect();
    let (digest, len) = match fields.as_slice() {
        ["sha256", d, l] => (*d, l.parse::<usize>().map_err(|_| ContainerError::Checksum)?),
        _ => return Err(ContainerError::Checksum),
    };
    if payload.len() < len {
        return Err(ContainerError::Truncated(format!(
            "payload has {} of {len} bytes",
            payload.len()
        )));
    }
    if payload.len() > len || sha256_hex(payload) != digest {
        return Err(ContainerError::Checksum);
    }
    Ok(serde_json::from_slice(payload)?)
}

pub fn write<T: Serialize>(path: &Path, kind: &str, value: &T) -> Result<(), ContainerError> {
    let bytes = encode(kind, value)?;
    fs::write(path, bytes).map_err(|source| ContainerError::Io {
        path: path.display().to_string(),
        source,
    })
}

pub fn read<T: DeserializeOwned>(path: &Path, kind: &str) -> Result<T, ContainerError> {
    let bytes = fs::read(path).map_err(|source| ContainerError::Io {
        path: path.display().to_string(),
        source,
    })?;
    decode(kind, &bytes)
}
