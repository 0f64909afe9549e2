use std::fs;
use std::panic::{self, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::sync::OnceLock;
use std::time::Instant;

use clap::Parser;
use mbc_core::bank::{BankConfig, MetricRow, RunMetrics, Scheme};
use mbc_core::geo::Trajectory;
use mbc_core::mbcsim::{sweep, SweepCell, SweepSpec};
use mbc_core::synth::{generate_corpus, CorpusMix};

pub const THRESHOLDS: [f64; 4] = [0.2, 0.3, 0.4, 0.5];
pub const TWS: [usize; 4] = [5, 10, 20, 40];
pub const SHUFFLE_SEEDS: [u64; 3] = [1, 2, 3];
pub const VARIANTS: [(Scheme, bool); 4] = [
    (Scheme::Direct, true),
    (Scheme::Direct, false),
    (Scheme::Indirect, true),
    (Scheme::Indirect, false),
];

/// Result of one check: pass flag plus the measured values.
pub struct Outcome {
    pub pass: bool,
    pub detail: String,
}

impl Outcome {
    pub fn new(pass: bool, detail: impl Into<String>) -> Self {
        Self {
            pass,
            detail: detail.into(),
        }
    }
}

/// Runs checks, printing one line each, and remembers failures.
#[derive(Default)]
pub struct Runner {
    pub failed: Vec<String>,
}

impl Runner {
    pub fn check(&mut self, name: &str, f: impl FnOnce() -> Outcome) {
        let start = Instant::now();
        let outcome = panic::catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Outcome::new(false, format!("panicked: {msg}"))
        });
        let verdict = if outcome.pass { "PASS" } else { "FAIL" };
        println!(
            "{verdict} {name} [{:.1} s]: {}",
            start.elapsed().as_secs_f64(),
            outcome.detail
        );
        if !outcome.pass {
            self.failed.push(name.to_string());
        }
    }
}

pub fn label(scheme: Scheme, hybrid: bool) -> &'static str {
    match (scheme, hybrid) {
        (Scheme::Direct, true) => "Direct GP Hybrid",
        (Scheme::Direct, false) => "Direct GP",
        (Scheme::Indirect, true) => "Indirect GP Hybrid",
        (Scheme::Indirect, false) => "Indirect GP",
    }
}

/// The seeded 26-trip default-mix corpus.
pub fn corpus() -> &'static [Trajectory] {
    static CORPUS: OnceLock<Vec<Trajectory>> = OnceLock::new();
    CORPUS.get_or_init(|| generate_corpus(26, &CorpusMix::default(), 0).expect("corpus"))
}

pub struct Experiments {
    /// Every variant at every threshold, tw 10, original order.
    pub grid: Vec<SweepCell>,
    /// Indirect solo and hybrid at 0.5 m for each shuffle seed.
    pub shuffles: Vec<SweepCell>,
    /// Indirect hybrid at 0.5 m for tw 5, 20 and 40.
    pub tw: Vec<SweepCell>,
}

impl Experiments {
    pub fn cell(&self, scheme: Scheme, hybrid: bool, threshold: f64) -> &SweepCell {
        self.grid
            .iter()
            .find(|c| c.scheme == scheme && c.hybrid == hybrid && c.threshold == threshold)
            .expect("grid cell")
    }

    pub fn tw_cell(&self, tw: usize) -> &SweepCell {
        if tw == 10 {
            return self.cell(Scheme::Indirect, true, 0.5);
        }
        self.tw.iter().find(|c| c.tw == tw).expect("tw cell")
    }

    pub fn shuffle_cell(&self, hybrid: bool, seed: u64) -> &SweepCell {
        self.shuffles
            .iter()
            .find(|c| c.hybrid == hybrid && c.shuffle_seed == Some(seed))
            .expect("shuffle cell")
    }
}

pub fn experiments() -> &'static Experiments {
    static RUNS: OnceLock<Experiments> = OnceLock::new();
    RUNS.get_or_init(|| {
        let run =
            |variants: Vec<(Scheme, bool)>, thresholds: Vec<f64>, tws: Vec<usize>, shuffle_seeds: Vec<Option<u64>>| {
                let spec = SweepSpec {
                    variants,
                    thresholds,
                    tws,
                    shuffle_seeds,
                    base: BankConfig::default(),
                };
                sweep(corpus(), &spec).expect("sweep")
            };
        Experiments {
            grid: run(VARIANTS.to_vec(), THRESHOLDS.to_vec(), vec![10], vec![None]),
            shuffles: run(
                vec![(Scheme::Indirect, false), (Scheme::Indirect, true)],
                vec![0.5],
                vec![10],
                SHUFFLE_SEEDS.iter().map(|s| Some(*s)).collect(),
            ),
            tw: run(vec![(Scheme::Indirect, true)], vec![0.5], vec![5, 20, 40], vec![None]),
        }
    })
}

/// Mean generation ratio over events in the first and last quarter of the
/// covered data time.
pub fn ratio_quartiles(rows: &[MetricRow]) -> (f64, f64) {
    let total = rows.last().map_or(0.0, |r| r.data_time_s);
    let mean = |keep: &dyn Fn(f64) -> bool| {
        let v: Vec<f64> = rows
            .iter()
            .filter(|r| keep(r.data_time_s))
            .map(|r| r.gen_ratio)
            .collect();
        v.iter().sum::<f64>() / v.len() as f64
    };
    (mean(&|t| t <= 0.25 * total), mean(&|t| t >= 0.75 * total))
}

/// Per-trip `(update count, covered seconds)` in corpus order.
pub fn per_trip(metrics: &RunMetrics) -> Vec<(String, usize, f64)> {
    let mut out: Vec<(String, usize, f64)> = Vec::new();
    for row in &metrics.rows {
        match out.last_mut() {
            Some(last) if last.0 == row.trip_id => {
                last.1 += 1;
                last.2 += row.persistency_s;
            }
            _ => out.push((row.trip_id.clone(), 1, row.persistency_s)),
        }
    }
    out
}

/// Run the `mbc` command line in process.
pub fn mbc(args: &[&str]) -> Result<(), String> {
    let cli =
        mbc_cli::Cli::try_parse_from(std::iter::once("mbc").chain(args.iter().copied())).map_err(|e| e.to_string())?;
    mbc_cli::run(cli).map_err(|e| e.to_string())
}

pub fn path(p: &Path) -> &str {
    p.to_str().expect("utf-8 path")
}

/// Every file under `dir` with its bytes, sorted by relative path.
pub fn snapshot(dir: &Path) -> Vec<(PathBuf, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).expect("readable dir") {
            let p = e.expect("dir entry").path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.push((
                    p.strip_prefix(dir).unwrap().to_path_buf(),
                    fs::read(&p).expect("readable file"),
                ));
            }
        }
    }
    out.sort();
    out
}

pub fn without_manifest(files: Vec<(PathBuf, Vec<u8>)>) -> Vec<(PathBuf, Vec<u8>)> {
    files
        .into_iter()
        .filter(|(p, _)| p != Path::new("manifest.json"))
        .collect()
}

/// Parse a `model,<threshold>...` table into its header and numeric rows.
pub fn read_table(file: &Path) -> (Vec<String>, Vec<(String, Vec<f64>)>) {
    let text = fs::read_to_string(file).expect("table");
    let mut lines = text.lines();
    let header = lines.next().unwrap_or_default().split(',').map(String::from).collect();
    let rows = lines
        .map(|l| {
            let mut cols = l.split(',');
            let model = cols.next().unwrap_or_default().to_string();
            (model, cols.map(|c| c.parse().unwrap_or(f64::NAN)).collect())
        })
        .collect();
    (header, rows)
}
