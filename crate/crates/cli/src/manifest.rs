use std::collections::BTreeMap;
use std::fs::{self, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::{Params, UNHASHED};
use crate::error::CliError;

pub const TOOL: &str = concat!("symbiosim ", env!("CARGO_PKG_VERSION"));
pub const MANIFEST_FILE: &str = "manifest.jsonl";

/// One JSON line of `manifest.jsonl`.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct RunManifest {
    pub tool: String,
    pub subcommand: String,
    pub params: BTreeMap<String, String>,
    pub seed: Option<u64>,
    pub hash: String,
    pub started: f64,
    pub finished: f64,
    pub outputs: Vec<String>,
}

fn unix_now() -> f64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs_f64())
        .unwrap_or(0.0)
}

/// Short digest of everything that determines the outputs.
pub fn content_hash(
    subcommand: &str,
    params: &BTreeMap<String, String>,
    seed: Option<u64>,
) -> String {
    let hashed: BTreeMap<&String, &String> = params
        .iter()
        .filter(|(k, _)| !UNHASHED.contains(&k.as_str()))
        .collect();
    let body = serde_json::json!({ "tool": TOOL, "subcommand": subcommand, "params": hashed, "seed": seed });
    let digest = Sha256::digest(body.to_string().as_bytes());
    hex::encode(&digest[..6])
}

/// Output bookkeeping of one invocation. Files are never overwritten: an
/// identical rerun gets an `-rN` suffix after the hash.
pub struct Run {
    subcommand: String,
    params: BTreeMap<String, String>,
    seed: Option<u64>,
    hash: String,
    dir: PathBuf,
    stem: String,
    started: f64,
    outputs: Vec<PathBuf>,
}

impl Run {
    pub fn begin(subcommand: &str, params: &Params, seed: Option<u64>) -> Result<Self, CliError> {
        let dir = PathBuf::from(params.str("out-dir")?);
        fs::create_dir_all(&dir)?;
        let all = params.all().clone();
        let hash = content_hash(subcommand, &all, seed);
        let base = format!("{subcommand}-{hash}");
        let earlier = previous_runs(&dir.join(MANIFEST_FILE), &hash)?;
        let stem = if earlier == 0 {
            base
        } else {
            format!("{base}-r{earlier}")
        };
        Ok(Run {
            subcommand: subcommand.to_string(),
            params: all,
            seed,
            hash,
            dir,
            stem,
            started: unix_now(),
            outputs: Vec::new(),
        })
    }

    /// Path `<out-dir>/<stem>[-tag].<ext>`, recorded as an output.
    pub fn path(&mut self, tag: Option<&str>, ext: &str) -> PathBuf {
        let name = match tag {
            Some(t) => format!("{}-{t}.{ext}", self.stem),
            None => format!("{}.{ext}", self.stem),
        };
        let p = self.dir.join(name);
        self.outputs.push(p.clone());
        p
    }

    pub fn write_csv(
        &mut self,
        tag: Option<&str>,
        header: &str,
        rows: &[String],
    ) -> Result<PathBuf, CliError> {
        let p = self.path(tag, "csv");
        write_csv(&p, header, rows)?;
        Ok(p)
    }

    pub fn finish(self) -> Result<RunManifest, CliError> {
        let m = RunManifest {
            tool: TOOL.to_string(),
            subcommand: self.subcommand,
            params: self.params,
            seed: self.seed,
            hash: self.hash,
            started: self.started,
            finished: unix_now(),
            outputs: self
                .outputs
                .iter()
                .map(|p| p.display().to_string())
                .collect(),
        };
        let line = serde_json::to_string(&m).map_err(|e| CliError::failure(e.to_string()))?;
        let mut f = OpenOptions::new()
            .create(true)
            .append(true)
            .open(self.dir.join(MANIFEST_FILE))?;
        writeln!(f, "{line}")?;
        for p in &m.outputs {
            println!("{p}");
        }
        Ok(m)
    }
}

/// Number of manifest records that already carry `hash`.
fn previous_runs(manifest: &Path, hash: &str) -> Result<usize, CliError> {
    let text = match fs::read_to_string(manifest) {
        Ok(t) => t,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(0),
        Err(e) => return Err(e.into()),
    };
    Ok(text
        .lines()
        .filter_map(|l| serde_json::from_str::<RunManifest>(l).ok())
        .filter(|m| m.hash == hash)
        .count())
}

pub fn write_csv(path: &Path, header: &str, rows: &[String]) -> Result<(), CliError> {
    let mut body =
        String::with_capacity(header.len() + 1 + rows.iter().map(|r| r.len() + 1).sum::<usize>());
    body.push_str(header);
    body.push('\n');
    for r in rows {
        body.push_str(r);
        body.push('\n');
    }
    fs::write(path, body)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hash_ignores_parallelism_and_paths() {
        let mut p = BTreeMap::new();
        p.insert("lambda".to_string(), "1".to_string());
        let h = content_hash("survival", &p, Some(1));
        p.insert("parallelism".to_string(), "4".to_string());
        p.insert("out-dir".to_string(), "x".to_string());
        assert_eq!(h, content_hash("survival", &p, Some(1)));
        assert_ne!(h, content_hash("survival", &p, Some(2)));
        assert_eq!(h.len(), 12);
    }
}
