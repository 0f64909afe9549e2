use mbc_core::bank::{BankConfig, Scheme};
use mbc_core::mbcsim::{sweep as run_sweep, SweepCell, SweepSpec};
use serde::Serialize;

use crate::config::RunConfig;
use crate::corpus;
use crate::error::CliResult;
use crate::output::OutputDir;

/// Row order of the threshold tables.
const VARIANTS: [(Scheme, bool); 4] = [
    (Scheme::Direct, true),
    (Scheme::Direct, false),
    (Scheme::Indirect, true),
    (Scheme::Indirect, false),
];

fn model_name(scheme: Scheme, hybrid: bool) -> String {
    let s = match scheme {
        Scheme::Direct => "Direct GP",
        Scheme::Indirect => "Indirect GP",
    };
    if hybrid {
        format!("{s} Hybrid")
    } else {
        s.to_string()
    }
}

#[derive(Serialize)]
struct PersistencyRow {
    scheme: Scheme,
    hybrid: bool,
    threshold_m: f64,
    mean_persistency_s: f64,
    packets_per_s: f64,
    update_count: usize,
}

#[derive(Serialize)]
struct BankRow {
    scheme: Scheme,
    hybrid: bool,
    threshold_m: f64,
    bank_size: usize,
    final_gen_ratio: f64,
}

#[derive(Serialize)]
struct RatioRow<'a> {
    scheme: Scheme,
    hybrid: bool,
    order: &'a str,
    event_idx: usize,
    data_time_s: f64,
    bank_size: usize,
    gen_ratio: f64,
}

#[derive(Serialize)]
struct TwRow {
    tw: usize,
    bank_size: usize,
    mean_persistency_s: f64,
    final_gen_ratio: f64,
    update_count: usize,
}

fn ratio_rows<'a>(cell: &'a SweepCell, order: &'a str) -> impl Iterator<Item = RatioRow<'a>> + 'a {
    cell.metrics.rows.iter().map(move |r| RatioRow {
        scheme: cell.scheme,
        hybrid: cell.hybrid,
        order,
        event_idx: r.event_idx,
        data_time_s: r.data_time_s,
        bank_size: r.bank_size,
        gen_ratio: r.gen_ratio,
    })
}

fn table(cells: &[SweepCell], thresholds: &[f64], value: impl Fn(&SweepCell) -> String) -> CliResult<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["model".to_string()];
    header.extend(thresholds.iter().map(|t| t.to_string()));
    w.write_record(&header)?;
    for (scheme, hybrid) in VARIANTS {
        let mut row = vec![model_name(scheme, hybrid)];
        for &th in thresholds {
            let c = cells
                .iter()
                .find(|c| c.scheme == scheme && c.hybrid == hybrid && c.threshold == th)
                .expect("grid covers every variant and threshold");
            row.push(value(c));
        }
        w.write_record(&row)?;
    }
    w.into_inner().map_err(|e| std::io::Error::other(e.to_string()).into())
}

const README: &str = "\
# Sweep outputs

All times are seconds, distances meters.

- `persistency_vs_threshold.csv`: `scheme,hybrid,threshold_m,mean_persistency_s,packets_per_s,update_count`, one row per scheme variant and threshold.
- `bank_vs_threshold.csv`: `scheme,hybrid,threshold_m,bank_size,final_gen_ratio`, same grid.
- `ratio_vs_time.csv`: `scheme,hybrid,order,event_idx,data_time_s,bank_size,gen_ratio`, one row per model update at the configured threshold, trips in their original order.
- `shuffle_overlay.csv`: same columns as `ratio_vs_time.csv` for the configured scheme, solo and hybrid, in the original order and each shuffled order (`order` is `original` or `shuffleN`).
- `tw_sweep.csv`: `tw,bank_size,mean_persistency_s,final_gen_ratio,update_count` for the configured scheme and hybrid flag at the configured threshold.
- `table_persistency.csv`, `table_bank_size.csv`: rows are the four scheme variants, columns the thresholds.
";

pub fn sweep(config: &RunConfig) -> CliResult<()> {
    let corpus = corpus::load(config)?;
    super::warn_all(&corpus.warnings);
    let trips = &corpus.trips;
    let base: BankConfig = config.bank_config();
    let m = &config.sweep;

    let grid = run_sweep(
        trips,
        &SweepSpec {
            variants: VARIANTS.to_vec(),
            thresholds: m.thresholds.clone(),
            tws: vec![config.tw],
            shuffle_seeds: vec![None],
            base: base.clone(),
        },
    )?;
    let at_threshold = run_sweep(
        trips,
        &SweepSpec {
            variants: VARIANTS.to_vec(),
            thresholds: vec![config.pte_threshold_m],
            tws: vec![config.tw],
            shuffle_seeds: vec![None],
            base: base.clone(),
        },
    )?;
    let mut orders = vec![None];
    orders.extend(m.shuffle_seeds.iter().map(|&s| Some(s)));
    let shuffles = run_sweep(
        trips,
        &SweepSpec {
            variants: vec![(config.scheme, false), (config.scheme, true)],
            thresholds: vec![config.pte_threshold_m],
            tws: vec![config.tw],
            shuffle_seeds: orders,
            base: base.clone(),
        },
    )?;
    let tws = run_sweep(
        trips,
        &SweepSpec {
            variants: vec![(config.scheme, config.hybrid)],
            thresholds: vec![config.pte_threshold_m],
            tws: m.tws.clone(),
            shuffle_seeds: vec![None],
            base,
        },
    )?;

    let mut out = OutputDir::create(&config.output_dir)?;
    out.write_csv(
        "persistency_vs_threshold.csv",
        grid.iter().map(|c| PersistencyRow {
            scheme: c.scheme,
            hybrid: c.hybrid,
            threshold_m: c.threshold,
            mean_persistency_s: c.mean_persistency_s,
            packets_per_s: c.packets_per_s,
            update_count: c.update_count,
        }),
    )?;
    out.write_csv(
        "bank_vs_threshold.csv",
        grid.iter().map(|c| BankRow {
            scheme: c.scheme,
            hybrid: c.hybrid,
            threshold_m: c.threshold,
            bank_size: c.bank_size,
            final_gen_ratio: c.final_gen_ratio,
        }),
    )?;
    out.write_csv(
        "ratio_vs_time.csv",
        at_threshold.iter().flat_map(|c| ratio_rows(c, "original")),
    )?;
    let labels: Vec<String> = shuffles
        .iter()
        .map(|c| c.shuffle_seed.map_or("original".to_string(), |s| format!("shuffle{s}")))
        .collect();
    out.write_csv(
        "shuffle_overlay.csv",
        shuffles.iter().zip(&labels).flat_map(|(c, l)| ratio_rows(c, l)),
    )?;
    out.write_csv(
        "tw_sweep.csv",
        tws.iter().map(|c| TwRow {
            tw: c.tw,
            bank_size: c.bank_size,
            mean_persistency_s: c.mean_persistency_s,
            final_gen_ratio: c.final_gen_ratio,
            update_count: c.update_count,
        }),
    )?;
    let persistency = table(&grid, &m.thresholds, |c| format!("{:.3}", c.mean_persistency_s))?;
    out.write("table_persistency.csv", &persistency)?;
    let banks = table(&grid, &m.thresholds, |c| c.bank_size.to_string())?;
    out.write("table_bank_size.csv", &banks)?;
    out.write("README.md", README.as_bytes())?;
    out.finish("sweep", config, corpus.inputs)?;

    println!("mean model persistency [s]");
    print!("{}", String::from_utf8_lossy(&persistency).replace(',', "\t"));
    println!("kernel bank size");
    print!("{}", String::from_utf8_lossy(&banks).replace(',', "\t"));
    Ok(())
}
