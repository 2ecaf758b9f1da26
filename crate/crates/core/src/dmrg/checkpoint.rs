//! JSON snapshots of matrix product states for warm restarts.

use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::mps::Mps;
use crate::error::{Error, Result};
use crate::model::ModelParams;

pub const CHECKPOINT_FORMAT: &str = "chainent-mps";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format: String,
    pub version: u32,
    pub params: Option<ModelParams>,
    pub energy: f64,
    pub mps: Mps,
}

impl Checkpoint {
    pub fn new(mps: Mps, energy: f64, params: Option<ModelParams>) -> Self {
        Self { format: CHECKPOINT_FORMAT.into(), version: CHECKPOINT_VERSION, params, energy, mps }
    }
}

pub fn save_checkpoint(path: &Path, checkpoint: &Checkpoint) -> Result<()> {
    let w = BufWriter::new(File::create(path)?);
    serde_json::to_writer(w, checkpoint)?;
    Ok(())
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint> {
    let cp: Checkpoint = serde_json::from_reader(BufReader::new(File::open(path)?))?;
    if cp.format != CHECKPOINT_FORMAT || cp.version != CHECKPOINT_VERSION {
        return Err(Error::Config(format!(
            "{}: unsupported checkpoint {} v{} (expected {CHECKPOINT_FORMAT} v{CHECKPOINT_VERSION})",
            path.display(),
            cp.format,
            cp.version
        )));
    }
    cp.mps.validate()?;
    Ok(cp)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("state.json");
        let cp = Checkpoint::new(Mps::random(6, 4, 8), -3.5, Some(ModelParams::default()));
        save_checkpoint(&path, &cp).unwrap();
        assert_eq!(load_checkpoint(&path).unwrap(), cp);
    }

    #[test]
    fn version_mismatch_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("state.json");
        let mut cp = Checkpoint::new(Mps::random(4, 2, 1), 0.0, None);
        cp.version = 99;
        save_checkpoint(&path, &cp).unwrap();
        assert!(matches!(load_checkpoint(&path), Err(Error::Config(_))));
    }
}
