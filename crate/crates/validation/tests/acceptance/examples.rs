use std::fs;

use mbc_core::bank::{build_bank, BankConfig, Scheme};
use mbc_core::mbcsim::{simulate_corpus, ChannelMetrics, LinkConfig, LinkMode};
use mbc_core::synth::{generate_corpus, CorpusMix};

use crate::support::*;

pub fn three_regime_convergence() -> Outcome {
    let trips = generate_corpus(20, &CorpusMix::three_regime(), 0).unwrap();
    let mut pass = true;
    let mut parts = Vec::new();
    for hybrid in [true, false] {
        let run = |scheme| {
            let config = BankConfig {
                scheme,
                hybrid,
                ..Default::default()
            };
            build_bank(&trips, &config).unwrap().1
        };
        let (direct, indirect) = (run(Scheme::Direct), run(Scheme::Indirect));
        let (b_i, b_d) = (indirect.final_bank_size(), direct.final_bank_size());
        let ratio = indirect.final_gen_ratio();
        pass &= b_i <= 15 && ratio <= 0.1 && b_d >= 3 * b_i;
        parts.push(format!(
            "{}: indirect bank {b_i} (<= 15), ratio {ratio:.3} (<= 0.1), direct bank {b_d} (>= 3x)",
            if hybrid { "hybrid" } else { "solo" }
        ));
    }
    Outcome::new(pass, format!("20 three-regime trips, {}", parts.join("; ")))
}

pub fn frozen_vs_growing() -> Outcome {
    let held_out = generate_corpus(10, &CorpusMix::default(), 1).unwrap();
    let mut pass = true;
    let mut parts = Vec::new();
    for hybrid in [false, true] {
        let config = BankConfig {
            scheme: Scheme::Indirect,
            hybrid,
            ..Default::default()
        };
        let (bank, _) = build_bank(corpus(), &config).unwrap();
        let run = |mode| -> (ChannelMetrics, f64) {
            let mut b = bank.clone();
            let link = LinkConfig {
                mode,
                ..Default::default()
            };
            let (runs, m) = simulate_corpus(&held_out, &mut b, &config, &link).unwrap();
            // largest possible one-step drift on these trips
            let vmax = held_out
                .iter()
                .flat_map(|t| t.speed.iter().cloned())
                .fold(0.0, f64::max);
            assert!(runs.iter().all(|r| !r.packets.is_empty()));
            (m, config.pte_threshold_m + 2.0 * vmax * 0.1)
        };
        let (frozen, bound) = run(LinkMode::Frozen);
        let (growing, _) = run(LinkMode::Growing);
        let rate = (frozen.packets_per_s - growing.packets_per_s).abs() / growing.packets_per_s;
        let bytes = growing.payload_bytes_total as f64 / frozen.payload_bytes_total as f64;
        pass &= rate <= 0.1 && bytes >= 5.0 && frozen.max_receiver_pte_m <= bound;
        parts.push(format!(
            "{}: frozen {:.4}/s vs growing {:.4}/s ({:.0}% apart, limit 10%), growing/frozen bytes {bytes:.2} (>= 5), frozen max receiver PTE {:.3} m (<= {bound:.3})",
            label(Scheme::Indirect, hybrid),
            frozen.packets_per_s,
            growing.packets_per_s,
            100.0 * rate,
            frozen.max_receiver_pte_m
        ));
    }
    Outcome::new(pass, format!("10 held-out trips; {}", parts.join("; ")))
}

pub fn hybrid_dominance_per_trip() -> Outcome {
    let ex = experiments();
    let (mut violations, mut total) = (0, 0);
    let mut worst = Vec::new();
    for scheme in [Scheme::Direct, Scheme::Indirect] {
        for th in THRESHOLDS {
            let hybrid = per_trip(&ex.cell(scheme, true, th).metrics);
            let solo = per_trip(&ex.cell(scheme, false, th).metrics);
            let mut n = 0;
            for (h, s) in hybrid.iter().zip(&solo) {
                assert_eq!(h.0, s.0);
                total += 1;
                if h.2 / (h.1 as f64) < s.2 / (s.1 as f64) {
                    n += 1;
                }
            }
            violations += n;
            worst.push(format!("{scheme} {th}: {n}"));
        }
    }
    Outcome::new(
        violations == 0,
        format!(
            "hybrid MP below solo on {violations} of {total} (trip, threshold, scheme) cases; per cell {}",
            worst.join(", ")
        ),
    )
}

pub fn rate_monotone_per_trip() -> Outcome {
    let ex = experiments();
    let mut parts = Vec::new();
    let mut violations = 0;
    for (scheme, hybrid) in VARIANTS {
        let rates: Vec<Vec<f64>> = THRESHOLDS
            .iter()
            .map(|&th| {
                per_trip(&ex.cell(scheme, hybrid, th).metrics)
                    .iter()
                    .map(|t| t.1 as f64 / t.2)
                    .collect()
            })
            .collect();
        let n = (0..rates[0].len())
            .filter(|&i| rates.windows(2).any(|w| w[1][i] > w[0][i]))
            .count();
        violations += n;
        parts.push(format!("{} {n}", label(scheme, hybrid)));
    }
    Outcome::new(
        violations == 0,
        format!(
            "trips whose packet rate rises with threshold, of 26: {}",
            parts.join(", ")
        ),
    )
}

pub fn hybrid_rate_per_trip() -> Outcome {
    let ex = experiments();
    let mut parts = Vec::new();
    let mut violations = 0;
    for scheme in [Scheme::Direct, Scheme::Indirect] {
        for th in THRESHOLDS {
            let rate = |hybrid| -> Vec<f64> {
                per_trip(&ex.cell(scheme, hybrid, th).metrics)
                    .iter()
                    .map(|t| t.1 as f64 / t.2)
                    .collect()
            };
            let n = rate(true).iter().zip(rate(false)).filter(|(h, s)| **h > *s).count();
            violations += n;
            parts.push(format!("{scheme} {th}: {n}"));
        }
    }
    Outcome::new(
        violations == 0,
        format!(
            "trips where hybrid sends more often than solo, of 26 per cell: {}",
            parts.join(", ")
        ),
    )
}

pub fn corpus_rates() -> Outcome {
    let ex = experiments();
    let mut pass = true;
    for (scheme, hybrid) in VARIANTS {
        let rates: Vec<f64> = THRESHOLDS
            .iter()
            .map(|&th| ex.cell(scheme, hybrid, th).packets_per_s)
            .collect();
        pass &= rates.windows(2).all(|w| w[1] <= w[0]);
    }
    for scheme in [Scheme::Direct, Scheme::Indirect] {
        for th in THRESHOLDS {
            pass &= ex.cell(scheme, true, th).packets_per_s <= ex.cell(scheme, false, th).packets_per_s;
        }
    }
    Outcome::new(
        pass,
        "corpus packet rate non-increasing in threshold for every variant, hybrid <= solo at every threshold",
    )
}

pub fn two_shuffle_seeds() -> Outcome {
    let ex = experiments();
    let mut pass = true;
    let mut parts = Vec::new();
    for hybrid in [false, true] {
        let (a, b) = (
            ex.shuffle_cell(hybrid, 1).bank_size,
            ex.shuffle_cell(hybrid, 2).bank_size,
        );
        let gap = a.abs_diff(b) as f64 / a.min(b) as f64;
        pass &= gap <= 0.2;
        parts.push(format!(
            "{} {a} vs {b} ({:.0}% apart)",
            label(Scheme::Indirect, hybrid),
            100.0 * gap
        ));
    }
    Outcome::new(pass, format!("shuffle seeds 1 and 2: {} (limit 20%)", parts.join(", ")))
}

pub fn build_reference_run() -> Outcome {
    let ex = experiments();
    let ih = ex.cell(Scheme::Indirect, true, 0.5);
    let d = ex.cell(Scheme::Direct, false, 0.5);
    let i = ex.cell(Scheme::Indirect, false, 0.5);
    Outcome::new(
        ih.bank_size <= 15 && ih.mean_persistency_s >= 1.2 && d.bank_size >= 3 * i.bank_size,
        format!(
            "Indirect GP Hybrid at 0.5 m: bank {} (<= 15), MP {:.3} s (>= 1.2); Direct GP bank {} vs Indirect GP {} (>= 3x)",
            ih.bank_size, ih.mean_persistency_s, d.bank_size, i.bank_size
        ),
    )
}

pub fn sweep_csvs() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sweep");
    if let Err(e) = mbc(&["sweep", "--out", path(&out)]) {
        return Outcome::new(false, e);
    }
    let mut failures = Vec::new();
    let (_, rows) = read_table(&out.join("table_persistency.csv"));
    for (model, mps) in &rows {
        if mps.windows(2).any(|w| w[1] <= w[0]) {
            failures.push(format!("{model} persistency {mps:?}"));
        }
    }
    let text = fs::read_to_string(out.join("ratio_vs_time.csv")).unwrap();
    let mut quartiles = Vec::new();
    for (scheme, hybrid) in [("indirect", "true"), ("indirect", "false")] {
        let series: Vec<(f64, f64)> = text
            .lines()
            .skip(1)
            .map(|l| l.split(',').collect::<Vec<_>>())
            .filter(|c| c[0] == scheme && c[1] == hybrid)
            .map(|c| (c[4].parse().unwrap(), c[6].parse().unwrap()))
            .collect();
        let total = series.last().map_or(0.0, |s| s.0);
        let mean = |lo: f64, hi: f64| {
            let v: Vec<f64> = series.iter().filter(|s| s.0 >= lo && s.0 <= hi).map(|s| s.1).collect();
            v.iter().sum::<f64>() / v.len() as f64
        };
        let (q1, q4) = (mean(0.0, 0.25 * total), mean(0.75 * total, total));
        if q4 >= 0.5 * q1 {
            failures.push(format!("{scheme} hybrid={hybrid} ratio q4/q1 {:.3}", q4 / q1));
        }
        quartiles.push(format!("hybrid={hybrid} {:.3}", q4 / q1));
    }
    let detail = if failures.is_empty() {
        format!(
            "mbc sweep tables monotone in threshold; indirect ratio_vs_time q4/q1 {} (< 0.5)",
            quartiles.join(", ")
        )
    } else {
        failures.join("; ")
    };
    Outcome::new(failures.is_empty(), detail)
}
