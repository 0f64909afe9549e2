use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bank::{build_bank, BankConfig, RunMetrics, Scheme};
use crate::error::{Error, Result};
use crate::geo::Trajectory;

/// Trip order permuted by `seed`.
pub fn shuffled(trips: &[Trajectory], seed: u64) -> Vec<Trajectory> {
    let mut out = trips.to_vec();
    out.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    out
}

/// Full factorial experiment. `None` in `shuffle_seeds` is the original order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    /// `(scheme, hybrid)` pairs.
    pub variants: Vec<(Scheme, bool)>,
    pub thresholds: Vec<f64>,
    pub tws: Vec<usize>,
    pub shuffle_seeds: Vec<Option<u64>>,
    /// Everything else is taken from here.
    pub base: BankConfig,
}

impl SweepSpec {
    pub fn cells(&self) -> Vec<(Scheme, bool, f64, usize, Option<u64>)> {
        let mut out = Vec::new();
        for &(scheme, hybrid) in &self.variants {
            for &th in &self.thresholds {
                for &tw in &self.tws {
                    for &s in &self.shuffle_seeds {
                        out.push((scheme, hybrid, th, tw, s));
                    }
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepCell {
    pub scheme: Scheme,
    pub hybrid: bool,
    pub threshold: f64,
    pub tw: usize,
    pub shuffle_seed: Option<u64>,
    pub bank_size: usize,
    pub update_count: usize,
    pub mean_persistency_s: f64,
    pub final_gen_ratio: f64,
    /// Model updates per second of covered data; equals the growing-mode
    /// packet rate.
    pub packets_per_s: f64,
    pub metrics: RunMetrics,
}

impl SweepCell {
    pub fn label(&self) -> String {
        let mode = if self.hybrid { "hybrid" } else { "solo" };
        let order = self
            .shuffle_seed
            .map_or("original".to_string(), |s| format!("shuffle{s}"));
        format!("{}_{mode}_th{}_tw{}_{order}", self.scheme, self.threshold, self.tw)
    }
}

/// Build one bank per cell. Cells run in parallel; the result is in
/// [`SweepSpec::cells`] order.
pub fn sweep(trips: &[Trajectory], spec: &SweepSpec) -> Result<Vec<SweepCell>> {
    if trips.is_empty() {
        return Err(Error::Empty);
    }
    spec.cells()
        .into_par_iter()
        .map(|(scheme, hybrid, threshold, tw, shuffle_seed)| {
            let config = BankConfig {
                scheme,
                hybrid,
                pte_threshold_m: threshold,
                tw,
                ..spec.base.clone()
            };
            let ordered;
            let input = match shuffle_seed {
                Some(s) => {
                    ordered = shuffled(trips, s);
                    &ordered[..]
                }
                None => trips,
            };
            let (bank, metrics) = build_bank(input, &config)?;
            let covered: f64 = metrics.rows.iter().map(|r| r.persistency_s).sum();
            Ok(SweepCell {
                scheme,
                hybrid,
                threshold,
                tw,
                shuffle_seed,
                bank_size: bank.len(),
                update_count: metrics.rows.len(),
                mean_persistency_s: metrics.mean_persistency_s()?,
                final_gen_ratio: metrics.final_gen_ratio(),
                packets_per_s: metrics.rows.len() as f64 / covered,
                metrics,
            })
        })
        .collect()
}
