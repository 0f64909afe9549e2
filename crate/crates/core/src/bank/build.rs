use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::entry::KernelBank;
use super::select::{create_entry, extend_selection, select_or_create, BankConfig, ModelSelection};
use crate::error::{Error, Result};
use crate::geo::Trajectory;

/// One row per model-update event.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricRow {
    pub event_idx: usize,
    /// Cumulative data time at `t_next` of this selection, counting whole
    /// earlier trips.
    pub data_time_s: f64,
    pub trip_id: String,
    pub source: String,
    pub persistency_s: f64,
    pub bank_size: usize,
    pub update_count: usize,
    pub gen_ratio: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunMetrics {
    pub rows: Vec<MetricRow>,
    /// Parallel to `rows`.
    pub selections: Vec<ModelSelection>,
}

impl RunMetrics {
    pub fn final_bank_size(&self) -> usize {
        self.rows.last().map_or(0, |r| r.bank_size)
    }

    pub fn final_gen_ratio(&self) -> f64 {
        self.rows.last().map_or(0.0, |r| r.gen_ratio)
    }

    pub fn mean_persistency_s(&self) -> Result<f64> {
        Ok(persistency_stats(self)?.mean_s)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for row in &self.rows {
            w.serialize(row)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_rows<R: Read>(input: R) -> Result<Vec<MetricRow>> {
        csv::Reader::from_reader(input)
            .deserialize()
            .map(|r| r.map_err(Error::from))
            .collect()
    }
}

/// Build a bank from scratch over `trips` in order.
pub fn build_bank(trips: &[Trajectory], config: &BankConfig) -> Result<(KernelBank, RunMetrics)> {
    let mut bank = config.new_bank();
    let metrics = extend_bank(&mut bank, trips, config)?;
    Ok((bank, metrics))
}

/// Continue building an existing bank over more trips.
///
/// Each trip starts predicting once `tw` samples of history exist. The very
/// first model of an empty bank is always fitted, even when constant
/// velocity is available. After every selection `t_0` moves to that
/// selection's `t_next`.
pub fn extend_bank(bank: &mut KernelBank, trips: &[Trajectory], config: &BankConfig) -> Result<RunMetrics> {
    config.validate()?;
    if trips.is_empty() {
        return Err(Error::Empty);
    }
    if bank.scheme != config.scheme {
        return Err(Error::InvalidInput(format!(
            "bank scheme {} does not match config scheme {}",
            bank.scheme, config.scheme
        )));
    }
    let mut metrics = RunMetrics::default();
    let mut data_offset = 0.0;
    for traj in trips {
        if traj.len() < config.tw + 1 {
            return Err(Error::TooShort {
                trip_id: traj.trip_id.clone(),
                len: traj.len(),
                min: config.tw + 1,
            });
        }
        let mut t0 = config.tw - 1;
        while t0 + 1 < traj.len() {
            let sel = if bank.is_empty() {
                create_entry(bank, traj, t0, config)?
            } else {
                select_or_create(bank, traj, t0, config)?.0
            };
            let sel = extend_selection(bank, traj, sel, config)?;
            let update_count = metrics.rows.len() + 1;
            metrics.rows.push(MetricRow {
                event_idx: metrics.rows.len(),
                data_time_s: data_offset + traj.t[sel.next_index] - traj.t[0],
                trip_id: traj.trip_id.clone(),
                source: sel.source.to_string(),
                persistency_s: sel.persistency_s,
                bank_size: bank.len(),
                update_count,
                gen_ratio: bank.len() as f64 / update_count as f64,
            });
            t0 = sel.next_index;
            metrics.selections.push(sel);
        }
        data_offset += traj.duration_s();
    }
    Ok(metrics)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PersistencyStats {
    pub count: usize,
    pub mean_s: f64,
    /// Width of each histogram bin in seconds.
    pub bin_width_s: f64,
    /// Counts per bin starting at 0; the last bin collects everything at or
    /// beyond its lower edge.
    pub histogram: Vec<usize>,
}

pub const HISTOGRAM_BIN_S: f64 = 0.5;
pub const HISTOGRAM_BINS: usize = 21;

pub fn persistency_stats(metrics: &RunMetrics) -> Result<PersistencyStats> {
    persistency_stats_of(metrics.rows.iter().map(|r| r.persistency_s))
}

pub fn persistency_stats_of(values: impl IntoIterator<Item = f64>) -> Result<PersistencyStats> {
    let mut histogram = vec![0; HISTOGRAM_BINS];
    let mut sum = 0.0;
    let mut count = 0;
    for p in values {
        sum += p;
        count += 1;
        let bin = ((p / HISTOGRAM_BIN_S).floor().max(0.0) as usize).min(HISTOGRAM_BINS - 1);
        histogram[bin] += 1;
    }
    if count == 0 {
        return Err(Error::Empty);
    }
    Ok(PersistencyStats {
        count,
        mean_s: sum / count as f64,
        bin_width_s: HISTOGRAM_BIN_S,
        histogram,
    })
}
