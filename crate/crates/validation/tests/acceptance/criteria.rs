use std::fs;
use std::io::BufReader;
use std::time::Instant;

use mbc_core::bank::{compute_pte, integrate_position, BankConfig, KernelBank, Scheme};
use mbc_core::geo::{enu_rad_to_bearing_deg, enu_to_geodetic, load_corpus_dir, Enu, Geodetic, Trajectory};
use mbc_core::gp::{
    kernel_eval, log_marginal_likelihood, log_marginal_likelihood_with_gradient, posterior_predict, KernelSpec,
    TrainingWindow, STD_FLOOR,
};
use mbc_core::mbcsim::{
    read_packet_jsonl, replay_receiver, simulate_corpus, write_packet_jsonl, LinkConfig, LinkMode, LinkRun,
    WindowPolicy,
};
use mbc_core::synth::{generate_corpus, generate_trip, random_script, CorpusMix, NoiseSpec};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::support::*;

fn random_spec(rng: &mut ChaCha8Rng) -> KernelSpec {
    KernelSpec::new(
        10f64.powf(rng.random_range(-2.0..1.0)),
        10f64.powf(rng.random_range(-1.0..1.0)),
        10f64.powf(rng.random_range(-2.0..1.0)),
        rng.random_range(-0.5..0.5),
        10f64.powf(rng.random_range(-3.0..-0.5)),
    )
    .unwrap()
}

fn random_window(rng: &mut ChaCha8Rng, n: usize) -> TrainingWindow {
    let t0 = rng.random_range(0.0..100.0);
    let times: Vec<f64> = (0..n).map(|i| t0 + 0.1 * i as f64).collect();
    let (a, b) = (rng.random_range(-3.0..3.0), rng.random_range(-2.0..2.0));
    let values = times
        .iter()
        .map(|t| a * (t - t0) + b * ((t - t0) * 3.0).sin() + rng.random_range(-0.2..0.2))
        .collect();
    TrainingWindow::new(times, values).unwrap()
}

fn covariance(spec: &KernelSpec, t: &[f64]) -> DMatrix<f64> {
    DMatrix::from_fn(t.len(), t.len(), |i, j| {
        kernel_eval(spec, t[i], t[j]) + if i == j { spec.noise_variance } else { 0.0 }
    })
}

/// `K^-1 y` by explicit inverse with iterative refinement.
fn dense_solve(k: &DMatrix<f64>, y: &DVector<f64>) -> DVector<f64> {
    let k_inv = k.clone().try_inverse().expect("invertible");
    let mut w = &k_inv * y;
    for _ in 0..4 {
        let r = y - k * &w;
        w += &k_inv * r;
    }
    w
}

/// Posterior mean from the textbook formula on the standardized, re-based
/// window.
fn oracle_mean(spec: &KernelSpec, w: &TrainingWindow, query: &[f64]) -> Vec<f64> {
    let n = w.len() as f64;
    let origin = w.times()[0];
    let mean = w.values().iter().sum::<f64>() / n;
    let std = (w.values().iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n)
        .sqrt()
        .max(STD_FLOOR);
    let t: Vec<f64> = w.times().iter().map(|x| x - origin).collect();
    let y = DVector::from_iterator(t.len(), w.values().iter().map(|v| (v - mean) / std));
    let alpha = dense_solve(&covariance(spec, &t), &y);
    query
        .iter()
        .map(|q| {
            let ks = DVector::from_iterator(t.len(), t.iter().map(|ti| kernel_eval(spec, q - origin, *ti)));
            mean + std * ks.dot(&alpha)
        })
        .collect()
}

fn oracle_lml(spec: &KernelSpec, w: &TrainingWindow) -> f64 {
    let k = covariance(spec, w.times());
    let y = DVector::from_column_slice(w.values());
    let det = k.clone().lu().determinant();
    -0.5 * (y.dot(&dense_solve(&k, &y)) + det.ln() + w.len() as f64 * (2.0 * std::f64::consts::PI).ln())
}

fn standardized(w: &TrainingWindow) -> TrainingWindow {
    let s = w.standardized();
    TrainingWindow::new(s.times, s.values).unwrap()
}

pub fn c1_gp_oracle() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let (mut worst_mean, mut worst_lml) = (0.0f64, 0.0f64);
    for _ in 0..200 {
        let n = rng.random_range(1..=15);
        let spec = random_spec(&mut rng);
        let w = random_window(&mut rng, n);
        let last = *w.times().last().unwrap();
        let query: Vec<f64> = (-2..=5).map(|k| last + 0.1 * k as f64).collect();
        let post = posterior_predict(&spec, &w, &query).unwrap();
        for (a, b) in post.mean.iter().zip(oracle_mean(&spec, &w, &query)) {
            worst_mean = worst_mean.max((a - b).abs());
        }
        let sw = standardized(&w);
        worst_lml = worst_lml.max((log_marginal_likelihood(&spec, &sw).unwrap() - oracle_lml(&spec, &sw)).abs());
    }
    let secs = start.elapsed().as_secs_f64();
    Outcome::new(
        worst_mean < 1e-8 && worst_lml < 1e-9 && secs < 10.0,
        format!("200 instances, max |mean - oracle| {worst_mean:.2e} (< 1e-8), max |lml - oracle| {worst_lml:.2e} (< 1e-9), {secs:.2} s (< 10 s)"),
    )
}

pub fn c2_gradient() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    // smaller steps are dominated by rounding in the likelihood itself
    let h = 1e-3;
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let spec = random_spec(&mut rng);
        let n = rng.random_range(2..=15);
        let w = standardized(&random_window(&mut rng, n));
        let (_, g) = log_marginal_likelihood_with_gradient(&spec, &w).unwrap();
        let p = spec.log_params();
        let at = |p: [f64; 4]| log_marginal_likelihood(&KernelSpec::from_log_params(&p, spec.lin_offset), &w).unwrap();
        for i in 0..4 {
            let (mut up, mut dn) = (p, p);
            up[i] += h;
            dn[i] -= h;
            let fd = (at(up) - at(dn)) / (2.0 * h);
            // relative error, with magnitudes below 1e-2 compared on that scale
            worst = worst.max((g[i] - fd).abs() / g[i].abs().max(fd.abs()).max(1e-2));
        }
    }
    Outcome::new(
        worst < 1e-4,
        format!("100 pairs, max relative error {worst:.2e} (< 1e-4)"),
    )
}

pub fn c3_integration() -> Outcome {
    let (v, w, dt) = (10.0, 0.5, 0.1);
    let heading: Vec<f64> = (1..=10).map(|k| w * k as f64 * dt).collect();
    let (x, y) = integrate_position(&[v; 10], &heading, v, 0.0, 0.0, 0.0, dt);
    let r = v / w;
    let arc = (0..10)
        .map(|k| compute_pte(x[k], y[k], r * heading[k].sin(), r * (1.0 - heading[k].cos())))
        .fold(0.0, f64::max);
    let mix = CorpusMix {
        noise: NoiseSpec::NONE,
        ..Default::default()
    };
    let mut recon = 0.0f64;
    for seed in 0..26 {
        let tr = generate_trip(&random_script(&mix, seed, None), "clean").unwrap();
        for t0 in 0..tr.len() - 10 {
            let (x, y) = integrate_position(
                &tr.speed[t0 + 1..=t0 + 10],
                &tr.heading_unwrapped[t0 + 1..=t0 + 10],
                tr.speed[t0],
                tr.heading_unwrapped[t0],
                tr.x_enu[t0],
                tr.y_enu[t0],
                dt,
            );
            for k in 0..10 {
                recon = recon.max(compute_pte(x[k], y[k], tr.x_enu[t0 + k + 1], tr.y_enu[t0 + k + 1]));
            }
        }
    }
    Outcome::new(
        arc < 0.01 && recon < 0.02,
        format!("arc max error {arc:.2e} m (< 0.01), true-channel reconstruction max PTE {recon:.2e} m over 26 noise-free trips (< 0.02)"),
    )
}

pub fn c4_scheme_contrast() -> Outcome {
    let start = Instant::now();
    let ex = experiments();
    let mut pass = true;
    let mut parts = Vec::new();
    for hybrid in [false, true] {
        let direct = ex.cell(Scheme::Direct, hybrid, 0.5);
        let indirect = ex.cell(Scheme::Indirect, hybrid, 0.5);
        let (dq1, dq4) = ratio_quartiles(&direct.metrics.rows);
        let (iq1, iq4) = ratio_quartiles(&indirect.metrics.rows);
        let ok = 3 * indirect.bank_size <= direct.bank_size && iq4 < 0.5 * iq1 && dq4 >= 0.5 * dq1;
        pass &= ok;
        parts.push(format!(
            "{}: bank {} vs direct {}, indirect ratio q4/q1 {:.3}, direct {:.3}",
            if hybrid { "hybrid" } else { "solo" },
            indirect.bank_size,
            direct.bank_size,
            iq4 / iq1,
            dq4 / dq1
        ));
    }
    let secs = start.elapsed().as_secs_f64();
    Outcome::new(pass, format!("{} (grid built in {secs:.0} s)", parts.join("; ")))
}

pub fn c5_persistency_ordering() -> Outcome {
    let ex = experiments();
    let mp = |s, h, th| ex.cell(s, h, th).mean_persistency_s;
    let mut failures = Vec::new();
    for th in THRESHOLDS {
        let (ih, i, dh, d) = (
            mp(Scheme::Indirect, true, th),
            mp(Scheme::Indirect, false, th),
            mp(Scheme::Direct, true, th),
            mp(Scheme::Direct, false, th),
        );
        if !(ih >= i && i >= dh && dh >= d && ih > dh) {
            failures.push(format!("ordering at {th}: {ih:.3} {i:.3} {dh:.3} {d:.3}"));
        }
    }
    for (s, h) in VARIANTS {
        let row: Vec<f64> = THRESHOLDS.iter().map(|&th| mp(s, h, th)).collect();
        if row.windows(2).any(|w| w[1] <= w[0]) {
            failures.push(format!("{} not increasing: {row:.3?}", label(s, h)));
        }
    }
    let table: Vec<String> = VARIANTS
        .iter()
        .map(|&(s, h)| {
            let row: Vec<String> = THRESHOLDS.iter().map(|&th| format!("{:.3}", mp(s, h, th))).collect();
            format!("{} {}", label(s, h), row.join("/"))
        })
        .collect();
    let detail = if failures.is_empty() {
        format!(
            "IH >= I >= DH >= D, IH > DH and strictly increasing; MP s at 0.2/0.3/0.4/0.5: {}",
            table.join(", ")
        )
    } else {
        failures.join("; ")
    };
    Outcome::new(failures.is_empty(), detail)
}

/// Largest relative deviation from the mean.
fn spread(values: &[f64]) -> f64 {
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    values.iter().map(|v| (v - mean).abs() / mean).fold(0.0, f64::max)
}

pub fn c6_shuffle() -> Outcome {
    let ex = experiments();
    let mut pass = true;
    let mut parts = Vec::new();
    for hybrid in [false, true] {
        let sizes: Vec<f64> = SHUFFLE_SEEDS
            .iter()
            .map(|&s| ex.shuffle_cell(hybrid, s).bank_size as f64)
            .collect();
        let dev = spread(&sizes);
        pass &= dev <= 0.2;
        parts.push(format!(
            "{} banks {:?} over seeds 1-3, max deviation from mean {:.1}%",
            label(Scheme::Indirect, hybrid),
            sizes,
            100.0 * dev
        ));
    }
    Outcome::new(pass, format!("{} (limit 20%)", parts.join("; ")))
}

pub fn c7_tw() -> Outcome {
    let ex = experiments();
    let mps: Vec<f64> = TWS.iter().map(|&tw| ex.tw_cell(tw).mean_persistency_s).collect();
    let max = mps.iter().cloned().fold(f64::MIN, f64::max);
    let min = mps.iter().cloned().fold(f64::MAX, f64::min);
    let mean = mps.iter().sum::<f64>() / mps.len() as f64;
    let range = (max - min) / mean;
    Outcome::new(
        range < 0.25,
        format!(
            "Indirect GP Hybrid MP at tw 5/10/20/40: {mps:.3?} s, (max - min) / mean {:.1}% (< 25%)",
            100.0 * range
        ),
    )
}

fn replay_mismatches(runs: &[LinkRun], trips: &[Trajectory], config: &BankConfig, bank: Option<&KernelBank>) -> usize {
    let mut bad = 0;
    for (run, trip) in runs.iter().zip(trips) {
        assert_eq!(run.trip_id, trip.trip_id);
        let mut log = Vec::new();
        write_packet_jsonl(&run.packets, &mut log).unwrap();
        let packets = read_packet_jsonl(BufReader::new(&log[..])).unwrap();
        let ticks: Vec<f64> = run.estimates.iter().map(|e| e.t).collect();
        let replay = replay_receiver(&packets, &ticks, config.scheme, config.tw, bank.cloned()).unwrap();
        bad += replay
            .iter()
            .zip(&run.estimates)
            .filter(|(r, e)| r.1.to_bits() != e.x.to_bits() || r.2.to_bits() != e.y.to_bits())
            .count();
        bad += replay.len().abs_diff(run.estimates.len());
    }
    bad
}

pub fn c8_simulation() -> Outcome {
    let ex = experiments();
    let trips = corpus();
    let held_out = generate_corpus(6, &CorpusMix::default(), 1).unwrap();
    let mut pass = true;
    let mut parts = Vec::new();
    let mut checked = 0;
    for (scheme, hybrid) in VARIANTS {
        let config = BankConfig {
            scheme,
            hybrid,
            ..Default::default()
        };
        let mut bank = config.new_bank();
        let (runs, metrics) = simulate_corpus(trips, &mut bank, &config, &LinkConfig::default()).unwrap();
        let updates = ex.cell(scheme, hybrid, 0.5).update_count;
        let mut bad = replay_mismatches(&runs, trips, &config, None);
        checked += runs.iter().map(|r| r.estimates.len()).sum::<usize>();
        for window in [WindowPolicy::AnchorOnly, WindowPolicy::Always] {
            let link = LinkConfig {
                mode: LinkMode::Frozen,
                window,
            };
            let mut frozen = bank.clone();
            let (runs, _) = simulate_corpus(&held_out, &mut frozen, &config, &link).unwrap();
            bad += replay_mismatches(&runs, &held_out, &config, Some(&bank));
            checked += runs.iter().map(|r| r.estimates.len()).sum::<usize>();
        }
        pass &= metrics.packets == updates && bad == 0;
        parts.push(format!(
            "{}: {} packets vs {updates} updates",
            label(scheme, hybrid),
            metrics.packets
        ));
    }
    Outcome::new(
        pass,
        format!(
            "{}; {checked} receiver estimates replayed from packet logs, growing and frozen",
            parts.join(", ")
        ),
    )
}

pub fn c9_determinism() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let cfg = d.join("config.json");
    fs::write(
        &cfg,
        r#"{"synth": {"trips": 3, "seed": 11}, "pte_threshold_m": 0.4,
            "sweep": {"thresholds": [0.3, 0.5], "tws": [5, 10], "shuffle_seeds": [2]}}"#,
    )
    .unwrap();
    let c = path(&cfg);
    let runs: Vec<(&str, Vec<String>)> = vec![
        ("synth", vec!["synth".into(), "--config".into(), c.into()]),
        ("build", vec!["build".into(), "--config".into(), c.into()]),
        ("sweep", vec!["sweep".into(), "--config".into(), c.into()]),
        ("simulate", vec!["simulate".into(), "--config".into(), c.into()]),
        (
            "simulate frozen",
            vec![
                "simulate".into(),
                "--config".into(),
                c.into(),
                "--mode".into(),
                "frozen".into(),
                "--bank".into(),
                path(&d.join("build/first/bank.json")).into(),
            ],
        ),
        (
            "ingest",
            vec![
                "ingest".into(),
                path(&d.join("synth/first/trips")).into(),
                "--config".into(),
                c.into(),
            ],
        ),
    ];
    let mut failures = Vec::new();
    for (name, args) in &runs {
        let tag = name.replace(' ', "_");
        let (first, second) = (d.join(&tag).join("first"), d.join(&tag).join("second"));
        let with_out = |out: &std::path::Path| {
            let mut a: Vec<&str> = args.iter().map(String::as_str).collect();
            a.extend(["--out", path(out)]);
            mbc(&a)
        };
        if let Err(e) = with_out(&first).and_then(|_| with_out(&second)) {
            failures.push(format!("{name}: {e}"));
            continue;
        }
        let a = snapshot(&first);
        if without_manifest(a.clone()) != without_manifest(snapshot(&second)) {
            failures.push(format!("{name}: outputs differ between runs"));
        }
        // rerun from the manifest alone, into the directory it names
        let manifest = first.join("manifest.json");
        let mut again: Vec<&str> = vec![args[0].as_str()];
        if args[0] == "ingest" {
            again.push(args[1].as_str());
        }
        if let Some(i) = args.iter().position(|s| s == "--bank") {
            again.extend(["--bank", args[i + 1].as_str()]);
        }
        again.extend(["--config", path(&manifest)]);
        if let Err(e) = mbc(&again) {
            failures.push(format!("{name} from manifest: {e}"));
        } else if snapshot(&first) != a {
            failures.push(format!("{name}: rerun from manifest changed files"));
        }
    }
    let before = snapshot(d);
    if let Err(e) = mbc(&["report", path(&d.join("simulate_frozen/first"))]) {
        failures.push(format!("report: {e}"));
    }
    if snapshot(d) != before {
        failures.push("report wrote files".into());
    }
    let detail = if failures.is_empty() {
        format!(
            "{} commands rerun twice and from their manifests, bit-identical; report leaves files untouched",
            runs.len()
        )
    } else {
        failures.join("; ")
    };
    Outcome::new(failures.is_empty(), detail)
}

/// Write a trajectory as a geodetic trip CSV with bearing headings. The
/// first sample lands exactly on `origin`, which is where ingest anchors its
/// frame.
fn write_geodetic(tr: &Trajectory, origin: Geodetic, file: &std::path::Path) {
    let mut text = String::from("t,lat,lon,alt,speed,heading\n");
    for i in 0..tr.len() {
        let g = enu_to_geodetic(
            Enu {
                east: tr.x_enu[i] - tr.x_enu[0],
                north: tr.y_enu[i] - tr.y_enu[0],
                up: 0.0,
            },
            origin,
        );
        let bearing = enu_rad_to_bearing_deg(tr.heading_unwrapped[i]).rem_euclid(360.0);
        text += &format!(
            "{},{},{},{},{},{}\n",
            tr.t[i], g.lat_deg, g.lon_deg, g.alt_m, tr.speed[i], bearing
        );
    }
    fs::write(file, text).unwrap();
}

pub fn c10_spmd_pathway() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let raw = d.join("raw");
    fs::create_dir(&raw).unwrap();
    let trips = generate_corpus(4, &CorpusMix::default(), 3).unwrap();
    let origin = Geodetic::new(42.2808, -83.743, 260.0);
    for tr in &trips {
        write_geodetic(tr, origin, &raw.join(format!("{}.csv", tr.trip_id)));
    }
    let mut failures = Vec::new();
    // the geodetic files decode back to the generating trips
    let loaded = load_corpus_dir(&raw, 11).unwrap();
    let mut worst = 0.0f64;
    for (a, b) in trips.iter().zip(&loaded.trips) {
        for i in 0..a.len() {
            let dx = (a.x_enu[i] - a.x_enu[0]) - b.x_enu[i];
            let dy = (a.y_enu[i] - a.y_enu[0]) - b.y_enu[i];
            worst = worst.max(dx.hypot(dy));
        }
    }
    if loaded.trips.len() != trips.len() || worst > 1e-6 {
        failures.push(format!(
            "geodetic decode: {} trips, max position error {worst:.2e} m",
            loaded.trips.len()
        ));
    }
    let cfg = d.join("config.json");
    fs::write(&cfg, r#"{"sweep": {"tws": [10], "shuffle_seeds": [1]}}"#).unwrap();
    let cache = d.join("ingest/corpus.json");
    let (ingest, build, sweep) = (d.join("ingest"), d.join("build"), d.join("sweep"));
    let steps: [Vec<&str>; 3] = [
        vec!["ingest", path(&raw), "--config", path(&cfg), "--out", path(&ingest)],
        vec![
            "build",
            "--config",
            path(&cfg),
            "--corpus",
            path(&cache),
            "--out",
            path(&build),
        ],
        vec![
            "sweep",
            "--config",
            path(&cfg),
            "--corpus",
            path(&cache),
            "--out",
            path(&sweep),
        ],
    ];
    for step in &steps {
        if let Err(e) = mbc(step) {
            failures.push(format!("{}: {e}", step[0]));
        }
    }
    let mut shapes = Vec::new();
    for table in ["table_persistency.csv", "table_bank_size.csv"] {
        let file = sweep.join(table);
        if !file.exists() {
            failures.push(format!("{table} missing"));
            continue;
        }
        let (header, rows) = read_table(&file);
        let models: Vec<&str> = rows.iter().map(|r| r.0.as_str()).collect();
        let numeric = rows.iter().all(|r| r.1.len() == 4 && r.1.iter().all(|v| v.is_finite()));
        if header != ["model", "0.2", "0.3", "0.4", "0.5"] || models != VARIANTS.map(|(s, h)| label(s, h)) || !numeric {
            failures.push(format!("{table} has the wrong shape: {header:?} {models:?}"));
        }
        shapes.push(format!("{table} {}x{}", rows.len(), header.len() - 1));
    }
    let detail = if failures.is_empty() {
        format!(
            "4 geodetic trips (max decode error {worst:.1e} m) through ingest, build and sweep; {}. \
             With real SPMD CSVs the expected Indirect GP Hybrid MP at 0.5 m is 1.3-2.0 s; not checked here",
            shapes.join(", ")
        )
    } else {
        failures.join("; ")
    };
    Outcome::new(failures.is_empty(), detail)
}
