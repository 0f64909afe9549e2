use std::collections::BTreeMap;
use std::fs;
use std::io::BufReader;
use std::path::Path;

use mbc_core::bank::{persistency_stats_of, RunMetrics};
use mbc_core::mbcsim::{read_packet_jsonl, replay_receiver, LinkMode};

use super::simulate::{read_bank, TraceRow, RECEIVER_BANK, TRACE_FILE};
use crate::error::{CliError, CliResult};
use crate::output::read_manifest;

fn report_build(dir: &Path) -> CliResult<()> {
    let rows = RunMetrics::read_rows(fs::File::open(dir.join("metrics.csv"))?)?;
    let last = rows.last().ok_or(mbc_core::Error::Empty)?;
    let stats = persistency_stats_of(rows.iter().map(|r| r.persistency_s))?;
    println!(
        "{} updates over {:.1} s of data, bank size {}, final generation ratio {:.4}, mean MP {:.3} s",
        rows.len(),
        last.data_time_s,
        last.bank_size,
        last.gen_ratio,
        stats.mean_s
    );
    let gp = rows.iter().filter(|r| r.source != "cv").count();
    println!("{gp} GP selections, {} constant-velocity selections", rows.len() - gp);
    println!("persistency histogram ({} s bins):", stats.bin_width_s);
    let peak = stats.histogram.iter().copied().max().unwrap_or(0).max(1);
    for (i, &n) in stats.histogram.iter().enumerate() {
        if n > 0 {
            println!(
                "  {:>5.1} {:>6} {}",
                i as f64 * stats.bin_width_s,
                n,
                "#".repeat((40 * n).div_ceil(peak))
            );
        }
    }
    Ok(())
}

fn report_table(dir: &Path, name: &str, title: &str) -> CliResult<()> {
    let text = fs::read_to_string(dir.join(name))?;
    println!("{title}");
    for line in text.lines() {
        println!("  {}", line.replace(',', "\t"));
    }
    Ok(())
}

/// Rebuild the receiver from each packet log and compare with the recorded
/// trace bit for bit.
fn report_replay(dir: &Path) -> CliResult<()> {
    let manifest = read_manifest(dir)?;
    let config = &manifest.config;
    let bank = match config.link.mode {
        LinkMode::Frozen => Some(read_bank(&dir.join(RECEIVER_BANK), config)?),
        LinkMode::Growing => None,
    };
    let mut trace: BTreeMap<String, Vec<TraceRow>> = BTreeMap::new();
    for row in csv::Reader::from_path(dir.join(TRACE_FILE))?.deserialize() {
        let row: TraceRow = row?;
        trace.entry(row.trip_id.clone()).or_default().push(row);
    }
    let mut samples = 0;
    for (trip, rows) in &trace {
        let path = dir.join("packets").join(format!("{trip}.jsonl"));
        let packets = read_packet_jsonl(BufReader::new(fs::File::open(&path)?))?;
        let ticks: Vec<f64> = rows.iter().map(|r| r.t).collect();
        let replayed = replay_receiver(&packets, &ticks, config.scheme, config.tw, bank.clone())?;
        for (r, (_, x, y)) in rows.iter().zip(&replayed) {
            if r.x.to_bits() != x.to_bits() || r.y.to_bits() != y.to_bits() {
                return Err(CliError::Data(format!(
                    "{trip}: replayed estimate at t = {} differs from the trace",
                    r.t
                )));
            }
        }
        samples += rows.len();
    }
    println!(
        "replay: {} trips, {samples} receiver estimates reproduced bit-exactly from packet logs",
        trace.len()
    );
    Ok(())
}

pub fn report(dir: &Path) -> CliResult<()> {
    if !dir.is_dir() {
        return Err(CliError::Data(format!("{} is not a directory", dir.display())));
    }
    let mut found = false;
    if dir.join("metrics.csv").is_file() {
        report_build(dir)?;
        found = true;
    }
    if dir.join("table_persistency.csv").is_file() {
        report_table(dir, "table_persistency.csv", "mean model persistency [s]")?;
        report_table(dir, "table_bank_size.csv", "kernel bank size")?;
        found = true;
    }
    if dir.join(TRACE_FILE).is_file() {
        report_table(dir, "channel_metrics.csv", "channel metrics")?;
        report_replay(dir)?;
        found = true;
    }
    if !found {
        return Err(CliError::Data(format!("nothing to report in {}", dir.display())));
    }
    Ok(())
}
