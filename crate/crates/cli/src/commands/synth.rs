use mbc_core::geo::write_trajectory_csv;
use mbc_core::synth::{corpus_scripts, generate_trip};

use crate::config::RunConfig;
use crate::error::CliResult;
use crate::output::OutputDir;

pub fn synth(config: &RunConfig) -> CliResult<()> {
    let mix = config.mix()?;
    let scripts = corpus_scripts(config.synth.trips, &mix, config.synth.seed);
    let mut out = OutputDir::create(&config.output_dir)?;
    let mut total = 0.0;
    for (i, script) in scripts.iter().enumerate() {
        let trip = generate_trip(script, &format!("trip_{i:03}"))?;
        total += trip.duration_s();
        let mut buf = Vec::new();
        write_trajectory_csv(&trip, &mut buf)?;
        out.write(&format!("trips/{}.csv", trip.trip_id), &buf)?;
    }
    out.write_json("scripts.json", &scripts)?;
    out.finish("synth", config, Vec::new())?;
    println!(
        "wrote {} trips ({total:.1} s) to {}",
        scripts.len(),
        config.output_dir.join("trips").display()
    );
    Ok(())
}
