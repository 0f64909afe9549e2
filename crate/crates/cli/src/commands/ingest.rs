use std::path::Path;

use mbc_core::geo::rank_trips;

use crate::config::RunConfig;
use crate::corpus::{load_dir, CorpusCache, CACHE_FILE};
use crate::error::CliResult;
use crate::output::OutputDir;

pub fn ingest(dir: &Path, config: &RunConfig) -> CliResult<()> {
    let corpus = load_dir(dir, config.tw + 1)?;
    super::warn_all(&corpus.warnings);
    let ranks = rank_trips(&corpus.trips);
    println!(
        "{:>4}  {:<24} {:>10} {:>5} {:>11} {:>9} {:>7} {:>8}",
        "rank", "trip_id", "duration_s", "stops", "std_heading", "std_accel", "std_yaw", "score"
    );
    for (i, r) in ranks.iter().enumerate() {
        println!(
            "{:>4}  {:<24} {:>10.1} {:>5} {:>11.4} {:>9.4} {:>7.4} {:>8.3}",
            i + 1,
            r.trip_id,
            r.duration_s,
            r.stop_count,
            r.std_heading,
            r.std_accel,
            r.std_yaw,
            r.composite_score
        );
    }
    let mut out = OutputDir::create(&config.output_dir)?;
    out.write_json(
        CACHE_FILE,
        &CorpusCache {
            trips: corpus.trips.clone(),
        },
    )?;
    out.write_csv("ranks.csv", &ranks)?;
    out.finish("ingest", config, corpus.inputs)?;
    println!(
        "accepted {} trips, {} warnings; cache written to {}",
        corpus.trips.len(),
        corpus.warnings.len(),
        out_path(config)
    );
    Ok(())
}

fn out_path(config: &RunConfig) -> String {
    config.output_dir.join(CACHE_FILE).display().to_string()
}
