use std::fs;
use std::path::Path;

use mbc_core::bank::KernelBank;
use mbc_core::mbcsim::{simulate_corpus, write_packet_csv, write_packet_jsonl, ChannelMetrics, LinkMode};
use serde::Serialize;

use crate::config::RunConfig;
use crate::corpus;
use crate::error::{CliError, CliResult};
use crate::output::{hash_file, OutputDir};

pub const TRACE_FILE: &str = "receiver_trace.csv";
pub const RECEIVER_BANK: &str = "receiver_bank.json";

#[derive(Debug, Clone, PartialEq, Serialize, serde::Deserialize)]
pub struct TraceRow {
    pub trip_id: String,
    pub t: f64,
    pub x: f64,
    pub y: f64,
    pub pte_m: f64,
}

#[derive(Serialize)]
struct MetricsRow<'a> {
    trip_id: &'a str,
    packets: usize,
    covered_s: f64,
    packets_per_s: f64,
    mean_inter_packet_s: f64,
    payload_bytes_total: usize,
    max_receiver_pte_m: f64,
}

impl<'a> MetricsRow<'a> {
    fn new(trip_id: &'a str, m: &ChannelMetrics) -> Self {
        Self {
            trip_id,
            packets: m.packets,
            covered_s: m.covered_s,
            packets_per_s: m.packets_per_s,
            mean_inter_packet_s: m.mean_inter_packet_s,
            payload_bytes_total: m.payload_bytes_total,
            max_receiver_pte_m: m.max_receiver_pte_m,
        }
    }
}

pub fn read_bank(path: &Path, config: &RunConfig) -> CliResult<KernelBank> {
    let file = fs::File::open(path).map_err(|e| CliError::Data(format!("cannot open bank {}: {e}", path.display())))?;
    let records = KernelBank::read_records(std::io::BufReader::new(file))?;
    Ok(KernelBank::from_records(
        &records,
        config.scheme,
        config.hybrid,
        config.pte_threshold_m,
        config.tw,
    )?)
}

pub fn simulate(config: &RunConfig, bank_path: Option<&Path>) -> CliResult<()> {
    let bank_cfg = config.bank_config();
    let mut bank = match bank_path {
        Some(p) => read_bank(p, config)?,
        None => bank_cfg.new_bank(),
    };
    if config.link.mode == LinkMode::Frozen && bank.is_empty() && !config.hybrid {
        return Err(CliError::Config("a frozen solo link needs --bank".into()));
    }
    let corpus = corpus::load(config)?;
    super::warn_all(&corpus.warnings);
    let mut inputs = corpus.inputs;
    if let Some(p) = bank_path {
        inputs.push(hash_file(p)?);
    }
    let initial = bank.clone();
    let (runs, total) = simulate_corpus(&corpus.trips, &mut bank, &bank_cfg, &config.link)?;

    let mut out = OutputDir::create(&config.output_dir)?;
    for run in &runs {
        let mut buf = Vec::new();
        write_packet_csv(&run.packets, &mut buf)?;
        out.write(&format!("packets/{}.csv", run.trip_id), &buf)?;
        let mut buf = Vec::new();
        write_packet_jsonl(&run.packets, &mut buf)?;
        out.write(&format!("packets/{}.jsonl", run.trip_id), &buf)?;
    }
    out.write_csv(
        TRACE_FILE,
        runs.iter().flat_map(|r| {
            r.estimates.iter().map(|e| TraceRow {
                trip_id: r.trip_id.clone(),
                t: e.t,
                x: e.x,
                y: e.y,
                pte_m: e.pte_m,
            })
        }),
    )?;
    let mut rows: Vec<MetricsRow<'_>> = runs.iter().map(|r| MetricsRow::new(&r.trip_id, &r.metrics)).collect();
    rows.push(MetricsRow::new("all", &total));
    out.write_csv("channel_metrics.csv", rows)?;
    if config.link.mode == LinkMode::Frozen {
        let mut buf = Vec::new();
        initial.write_json(&mut buf)?;
        out.write(RECEIVER_BANK, &buf)?;
    } else {
        let mut buf = Vec::new();
        bank.write_json(&mut buf)?;
        out.write("bank.json", &buf)?;
    }
    out.finish("simulate", config, inputs)?;
    println!(
        "{} packets over {:.1} s: {:.4} packets/s, mean inter-packet {:.3} s, {} payload bytes, max receiver PTE {:.3} m",
        total.packets,
        total.covered_s,
        total.packets_per_s,
        total.mean_inter_packet_s,
        total.payload_bytes_total,
        total.max_receiver_pte_m
    );
    Ok(())
}
