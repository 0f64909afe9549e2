//! Where trips come from: a directory of trip files, an ingested cache, or
//! the synthetic generator.

use std::fs;
use std::path::Path;

use mbc_core::geo::{load_corpus_dir, Trajectory};
use mbc_core::synth::generate_corpus;
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::error::{CliError, CliResult};
use crate::output::{hash_file, FileHash};

pub const CACHE_FILE: &str = "corpus.json";

/// Normalized trips as written by `ingest`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusCache {
    pub trips: Vec<Trajectory>,
}

pub struct Corpus {
    pub trips: Vec<Trajectory>,
    pub warnings: Vec<String>,
    pub inputs: Vec<FileHash>,
}

/// Read every trip CSV in `dir`. Fails with "no trips" when nothing usable
/// is found.
pub fn load_dir(dir: &Path, min_len: usize) -> CliResult<Corpus> {
    if !dir.is_dir() {
        return Err(CliError::Data(format!("{} is not a directory", dir.display())));
    }
    let load = load_corpus_dir(dir, min_len)?;
    if load.trips.is_empty() {
        return Err(CliError::Data(format!("no trips in {}", dir.display())));
    }
    Ok(Corpus {
        inputs: load.files.iter().map(|f| hash_file(f)).collect::<CliResult<_>>()?,
        trips: load.trips,
        warnings: load.warnings,
    })
}

pub fn load(config: &RunConfig) -> CliResult<Corpus> {
    match &config.corpus {
        Some(path) if path.is_dir() => load_dir(path, config.tw + 1),
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| CliError::Data(format!("cannot read corpus {}: {e}", path.display())))?;
            let cache: CorpusCache = serde_json::from_str(&text)?;
            if cache.trips.is_empty() {
                return Err(CliError::Data(format!("no trips in {}", path.display())));
            }
            for t in &cache.trips {
                t.check_invariants(config.tw + 1)?;
            }
            Ok(Corpus {
                trips: cache.trips,
                warnings: Vec::new(),
                inputs: vec![hash_file(path)?],
            })
        }
        None => Ok(Corpus {
            trips: generate_corpus(config.synth.trips, &config.mix()?, config.synth.seed)?,
            warnings: Vec::new(),
            inputs: Vec::new(),
        }),
    }
}
