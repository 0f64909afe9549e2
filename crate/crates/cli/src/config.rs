//! Run configuration: built-in defaults, overlaid by a JSON file, overlaid
//! by command-line flags. `MBC_SEED` sits between the file and the flags.

use std::path::{Path, PathBuf};

use mbc_core::bank::{BankConfig, ReuseEval, Scheme};
use mbc_core::gp::FitConfig;
use mbc_core::mbcsim::{LinkConfig, LinkMode, WindowPolicy};
use mbc_core::synth::CorpusMix;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{CliError, CliResult};

pub const SEED_ENV: &str = "MBC_SEED";

/// Synthetic corpus used when no corpus path is given.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthSource {
    pub trips: usize,
    pub mix: String,
    pub seed: u64,
}

impl Default for SynthSource {
    fn default() -> Self {
        Self {
            trips: 26,
            mix: "default".into(),
            seed: 0,
        }
    }
}

/// Axes of the sweep experiments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepMatrix {
    pub thresholds: Vec<f64>,
    pub tws: Vec<usize>,
    pub shuffle_seeds: Vec<u64>,
}

impl Default for SweepMatrix {
    fn default() -> Self {
        Self {
            thresholds: vec![0.2, 0.3, 0.4, 0.5],
            tws: vec![5, 10, 20, 40],
            shuffle_seeds: vec![1, 2, 3],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Directory of trip CSVs or an ingested `corpus.json`.
    pub corpus: Option<PathBuf>,
    pub synth: SynthSource,
    pub scheme: Scheme,
    pub hybrid: bool,
    pub pte_threshold_m: f64,
    pub tw: usize,
    pub horizon_cap_s: f64,
    pub reuse_eval: ReuseEval,
    pub fit: FitConfig,
    pub seed: u64,
    pub output_dir: PathBuf,
    pub link: LinkConfig,
    pub sweep: SweepMatrix,
}

impl Default for RunConfig {
    fn default() -> Self {
        let bank = BankConfig::default();
        Self {
            corpus: None,
            synth: SynthSource::default(),
            scheme: bank.scheme,
            hybrid: bank.hybrid,
            pte_threshold_m: bank.pte_threshold_m,
            tw: bank.tw,
            horizon_cap_s: bank.horizon_cap_s,
            reuse_eval: bank.reuse_eval,
            fit: bank.fit,
            seed: bank.seed,
            output_dir: PathBuf::from("out"),
            link: LinkConfig::default(),
            sweep: SweepMatrix::default(),
        }
    }
}

impl RunConfig {
    pub fn bank_config(&self) -> BankConfig {
        BankConfig {
            scheme: self.scheme,
            hybrid: self.hybrid,
            pte_threshold_m: self.pte_threshold_m,
            tw: self.tw,
            horizon_cap_s: self.horizon_cap_s,
            reuse_eval: self.reuse_eval,
            fit: self.fit.clone(),
            seed: self.seed,
        }
    }

    pub fn mix(&self) -> CliResult<CorpusMix> {
        CorpusMix::preset(&self.synth.mix).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn validate(&self) -> CliResult<()> {
        self.bank_config()
            .validate()
            .map_err(|e| CliError::Config(e.to_string()))?;
        if self.synth.trips == 0 {
            return Err(CliError::Config("synth.trips must be at least 1".into()));
        }
        self.mix()?;
        let m = &self.sweep;
        if m.thresholds.is_empty() || m.tws.is_empty() {
            return Err(CliError::Config("sweep needs at least one threshold and one tw".into()));
        }
        if m.thresholds.iter().any(|t| !(*t > 0.0 && t.is_finite())) || m.tws.iter().any(|&t| t < 3) {
            return Err(CliError::Config(
                "sweep thresholds must be positive and tws at least 3".into(),
            ));
        }
        Ok(())
    }
}

/// Values given on the command line; `None` leaves the lower layers alone.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub corpus: Option<PathBuf>,
    pub scheme: Option<Scheme>,
    pub hybrid: Option<bool>,
    pub pte_threshold_m: Option<f64>,
    pub tw: Option<usize>,
    pub horizon_cap_s: Option<f64>,
    pub reuse_eval: Option<ReuseEval>,
    pub seed: Option<u64>,
    pub output_dir: Option<PathBuf>,
    pub link_mode: Option<LinkMode>,
    pub window: Option<WindowPolicy>,
    pub synth_trips: Option<usize>,
    pub synth_mix: Option<String>,
    pub synth_seed: Option<u64>,
}

fn merge(base: &mut Value, over: Value) {
    match (base, over) {
        (Value::Object(b), Value::Object(o)) => {
            for (k, v) in o {
                match b.get_mut(&k) {
                    Some(slot) if slot.is_object() && v.is_object() => merge(slot, v),
                    _ => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (b, o) => *b = o,
    }
}

/// Read a config file. A run manifest is accepted too; its recorded config
/// is used.
pub fn read_config_file(path: &Path) -> CliResult<Value> {
    let text =
        std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    let value: Value = serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    if !value.is_object() {
        return Err(CliError::Config(format!("{}: expected a JSON object", path.display())));
    }
    match value.get("tool").and_then(Value::as_str) {
        Some("mbc") => value
            .get("config")
            .cloned()
            .ok_or_else(|| CliError::Config(format!("{}: manifest without config", path.display()))),
        _ => Ok(value),
    }
}

pub fn resolve(file: Option<&Path>, cli: &Overrides, env_seed: Option<&str>) -> CliResult<RunConfig> {
    let mut value = serde_json::to_value(RunConfig::default()).expect("default config serializes");
    if let Some(path) = file {
        merge(&mut value, read_config_file(path)?);
    }
    let mut config: RunConfig = serde_json::from_value(value).map_err(|e| CliError::Config(e.to_string()))?;
    if let Some(s) = env_seed {
        config.seed = s
            .trim()
            .parse()
            .map_err(|_| CliError::Config(format!("{SEED_ENV}='{s}' is not an unsigned integer")))?;
    }
    macro_rules! set {
        ($($src:ident => $($dst:ident).+),* $(,)?) => {
            $(if let Some(v) = cli.$src.clone() { config.$($dst).+ = v; })*
        };
    }
    set!(
        scheme => scheme,
        hybrid => hybrid,
        pte_threshold_m => pte_threshold_m,
        tw => tw,
        horizon_cap_s => horizon_cap_s,
        reuse_eval => reuse_eval,
        seed => seed,
        output_dir => output_dir,
        link_mode => link.mode,
        window => link.window,
        synth_trips => synth.trips,
        synth_mix => synth.mix,
        synth_seed => synth.seed,
    );
    if let Some(c) = &cli.corpus {
        config.corpus = Some(c.clone());
    }
    config.validate()?;
    Ok(config)
}
