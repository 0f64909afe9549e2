use mbc_core::bank::{build_bank, persistency_stats};
use serde::Serialize;

use crate::config::RunConfig;
use crate::corpus;
use crate::error::CliResult;
use crate::output::OutputDir;

#[derive(Serialize)]
struct HistogramRow {
    bin_start_s: f64,
    count: usize,
}

pub fn build(config: &RunConfig) -> CliResult<()> {
    let corpus = corpus::load(config)?;
    super::warn_all(&corpus.warnings);
    let (bank, metrics) = build_bank(&corpus.trips, &config.bank_config())?;
    let stats = persistency_stats(&metrics)?;
    let mut out = OutputDir::create(&config.output_dir)?;
    let mut buf = Vec::new();
    bank.write_json(&mut buf)?;
    out.write("bank.json", &buf)?;
    let mut buf = Vec::new();
    metrics.write_csv(&mut buf)?;
    out.write("metrics.csv", &buf)?;
    out.write_csv(
        "persistency_histogram.csv",
        stats.histogram.iter().enumerate().map(|(i, &count)| HistogramRow {
            bin_start_s: i as f64 * stats.bin_width_s,
            count,
        }),
    )?;
    out.finish("build", config, corpus.inputs)?;
    println!(
        "{} {}: {} trips, {} updates, bank size {}, mean MP {:.3} s, final generation ratio {:.4}",
        config.scheme,
        if config.hybrid { "hybrid" } else { "solo" },
        corpus.trips.len(),
        metrics.rows.len(),
        bank.len(),
        stats.mean_s,
        metrics.final_gen_ratio()
    );
    Ok(())
}
