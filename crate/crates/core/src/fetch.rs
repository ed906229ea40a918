//! Download and cache the UCI benchmark files, verifying SHA-256 digests.

use std::fs;
use std::io::Read;
use std::path::{Path, PathBuf};

use log::info;
use sha2::{Digest, Sha256};

use crate::data::Preset;
use crate::error::{Error, Result};

pub const CACHE_ENV: &str = "MDI_CACHE_DIR";
const UCI_BASE: &str = "https://archive.ics.uci.edu/ml/machine-learning-databases";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RemoteFile {
    pub name: &'static str,
    pub url_path: &'static str,
    pub sha256: &'static str,
}

pub const FILES: [RemoteFile; 3] = [
    RemoteFile {
        name: "adult.data",
        url_path: "adult/adult.data",
        sha256: "5b00264637dbfec36bdeaab5676b0b309ff9eb788d63554ca0a249491c86603d",
    },
    RemoteFile {
        name: "adult.test",
        url_path: "adult/adult.test",
        sha256: "a2a9044bc167a35b2361efbabec64e89d69ce82d9790d2980119aac5fd7e9c05",
    },
    RemoteFile {
        name: "house-votes-84.data",
        url_path: "voting-records/house-votes-84.data",
        sha256: "c87c14110a5ba91d4a1e313ec7392824458152bf071fa5f5452340488337936e",
    },
];

pub fn files_for(preset: Preset) -> Vec<RemoteFile> {
    FILES
        .iter()
        .filter(|f| preset.file_names().contains(&f.name))
        .copied()
        .collect()
}

/// `$MDI_CACHE_DIR`, else `$XDG_CACHE_HOME/mdi`, else `~/.cache/mdi`.
pub fn default_cache_dir() -> PathBuf {
    if let Some(d) = std::env::var_os(CACHE_ENV) {
        return PathBuf::from(d);
    }
    if let Some(d) = std::env::var_os("XDG_CACHE_HOME") {
        return PathBuf::from(d).join("mdi");
    }
    match std::env::var_os("HOME") {
        Some(h) => PathBuf::from(h).join(".cache").join("mdi"),
        None => PathBuf::from(".mdi-cache"),
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

pub fn verify(bytes: &[u8], file: &RemoteFile) -> Result<()> {
    let got = sha256_hex(bytes);
    if got != file.sha256 {
        return Err(Error::Format(format!(
            "{}: checksum mismatch (expected {}, got {got})",
            file.name, file.sha256
        )));
    }
    Ok(())
}

/// Ensure `file` is in `dir`, downloading it if absent or corrupt. Returns
/// its path.
pub fn fetch(file: &RemoteFile, dir: &Path, force: bool) -> Result<PathBuf> {
    let path = dir.join(file.name);
    if !force {
        if let Ok(bytes) = fs::read(&path) {
            if verify(&bytes, file).is_ok() {
                info!("{} already cached", file.name);
                return Ok(path);
            }
        }
    }
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let url = format!("{UCI_BASE}/{}", file.url_path);
    info!("downloading {url}");
    let resp = ureq::get(&url)
        .call()
        .map_err(|e| Error::Format(format!("{url}: {e}")))?;
    let mut bytes = Vec::new();
    resp.into_reader()
        .read_to_end(&mut bytes)
        .map_err(|e| Error::io(&url, e))?;
    verify(&bytes, file)?;
    let tmp = path.with_extension("part");
    fs::write(&tmp, &bytes).map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, &path).map_err(|e| Error::io(&path, e))?;
    Ok(path)
}
