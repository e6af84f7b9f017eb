//! Acceptance gate for the shipped guarantees. Each test prints one PASS
//! line carrying the measured numbers behind the verdict.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::fs;
use std::path::Path;
use std::process::Command;
use std::sync::OnceLock;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, Poisson};
use rayon::prelude::*;
use relaysim::analytic::{ccdf_sir, ergodic_capacity, SirQuery};
use relaysim::montecarlo::{analytic_ccdf, compare, empirical_ccdf, McConfig};
use relaysim::netsim::{run_drop, DropMetrics};
use relaysim::propagation::RelayKind;
use relaysim::scenario::{derive_seed, Scenario, SchemeVariant};
use relaysim::stats;

const MASTER_SEED: u64 = 2026;

#[test]
fn sampled_ccdf_matches_closed_form_on_full_grid() {
    let start = Instant::now();
    // -10 dB to 30 dB in 5 dB steps.
    let thresholds: Vec<f64> = (-2..=6).map(|s| 10f64.powf(s as f64 * 0.5)).collect();
    let mut worst = (0.0f64, String::new());
    let mut idx = 0;
    for kind in [RelayKind::SuavRn, RelayKind::GroundRn] {
        for lambda in [0.5, 1.0, 2.0] {
            for r in [0.5, 1.0, 2.0] {
                let cfg = McConfig::auto_window(
                    kind,
                    lambda,
                    r,
                    100_000,
                    derive_seed(MASTER_SEED, "ccdf-grid", idx),
                )
                .unwrap();
                idx += 1;
                let sampled = empirical_ccdf(&cfg, &thresholds).unwrap();
                let exact = analytic_ccdf(kind, lambda, r, &thresholds);
                let dev = compare(&sampled, &exact).unwrap();
                assert!(
                    dev.max_abs <= 0.01,
                    "{} lambda={lambda} r={r}: max deviation {:.4}",
                    kind.name(),
                    dev.max_abs
                );
                if dev.max_abs > worst.0 {
                    worst = (
                        dev.max_abs,
                        format!("{} lambda={lambda} r={r}", kind.name()),
                    );
                }
            }
        }
    }
    println!(
        "PASS: sampled ccdf within 0.01 of the closed form on all 18 configurations \
         (worst {:.4} at {}, {:.0}s)",
        worst.0,
        worst.1,
        start.elapsed().as_secs_f64()
    );
}

#[test]
fn aerial_and_ground_forms_coincide_at_unit_distance() {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(MASTER_SEED, "crossover", 0));
    for _ in 0..100 {
        let lambda = 10f64.powf(rng.random_range(-1.3..0.7));
        let xi = 10f64.powf(rng.random_range(-2.0..2.0));
        let aerial =
            ccdf_sir(&SirQuery::new(RelayKind::SuavRn, lambda, 1.0, xi).unwrap()).unwrap();
        let ground =
            ccdf_sir(&SirQuery::new(RelayKind::GroundRn, lambda, 1.0, xi).unwrap()).unwrap();
        // Bitwise equality is the contract: both branches reduce to the same
        // expression at r = 1.
        assert!(
            aerial == ground,
            "lambda={lambda} xi={xi}: {aerial} != {ground}"
        );
    }
    println!("PASS: aerial and ground ccdf identical at r=1 for 100 random (lambda, xi) pairs");
}

#[test]
fn spot_values_match_hand_evaluation() {
    let ground = ccdf_sir(&SirQuery::new(RelayKind::GroundRn, 1.0, 1.0, 1.0).unwrap()).unwrap();
    let aerial = ccdf_sir(&SirQuery::new(RelayKind::SuavRn, 1.0, 0.5, 1.0).unwrap()).unwrap();
    // exp(-pi^2/4) and exp(-(pi/2) atan 2), evaluated at 50 digits.
    assert!(
        (ground - 0.084804972471113777).abs() < 1e-9,
        "got {ground}"
    );
    assert!((aerial - 0.17567753725321385).abs() < 1e-9, "got {aerial}");
    println!(
        "PASS: spot values {ground:.11} = exp(-pi^2/4) and {aerial:.11} = exp(-(pi/2) atan 2) \
         within 1e-9"
    );
}

#[test]
fn ergodic_capacity_matches_sampled_mean() {
    const N: u64 = 1_000_000;
    const WINDOW: f64 = 6.0;
    let start = Instant::now();
    let analytic = ergodic_capacity(RelayKind::GroundRn, 1.0, 1.0, 4.8).unwrap();
    assert!(!analytic.interference_free);
    assert!(
        (analytic.bits_per_hz - 0.41637226084553765).abs() < 2e-6,
        "quadrature drifted: {}",
        analytic.bits_per_hz
    );

    // Interferers are realized exactly inside the window; the field beyond
    // enters through its exact mean pi/WINDOW^2. That cancels the first-order
    // truncation error, leaving a remainder bounded by
    // pi xi^2 / (3 WINDOW^6) against the ccdf, about 3e-6 on the mean here.
    let far_field_mean = PI / (WINDOW * WINDOW);
    let pois = Poisson::new(PI * (WINDOW * WINDOW - 1.0)).unwrap();
    let values: Vec<f64> = (0..N)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(MASTER_SEED, "capacity-mc", i));
            let h_s: f64 = rng.sample(Exp1);
            let count = pois.sample(&mut rng) as u64;
            let mut interference = far_field_mean;
            for _ in 0..count {
                let t = rng.random_range(1.0..WINDOW * WINDOW);
                let h: f64 = rng.sample(Exp1);
                interference += h / (t * t);
            }
            (1.0 + h_s / interference).log2()
        })
        .collect();
    let sampled = stats::mean(&values);
    let two_se = 2.0 * stats::sample_sd(&values) / (N as f64).sqrt();
    assert!(
        (analytic.bits_per_hz - sampled).abs() <= two_se,
        "analytic {:.6} vs sampled {sampled:.6}, 2 se = {two_se:.6}",
        analytic.bits_per_hz
    );
    println!(
        "PASS: ergodic capacity {:.5} bit/s/Hz within 2 se ({two_se:.5}) of the sampled mean \
         {sampled:.5} at 1e6 draws ({:.0}s)",
        analytic.bits_per_hz,
        start.elapsed().as_secs_f64()
    );
}

const F_VALUES: [f64; 5] = [1.0, 2.0, 3.0, 4.0, 5.0];
const BASE_DROPS: u32 = 300;
const MOBILE_DROPS: u32 = 150;

fn scheme_drops(variant: SchemeVariant) -> u32 {
    if variant == SchemeVariant::MobileRelays {
        MOBILE_DROPS
    } else {
        BASE_DROPS
    }
}

/// Per-drop metrics for every scheme and asymmetry factor, computed once and
/// shared by the deployment-comparison tests.
fn sweep() -> &'static HashMap<(SchemeVariant, usize), Vec<DropMetrics>> {
    static SWEEP: OnceLock<HashMap<(SchemeVariant, usize), Vec<DropMetrics>>> = OnceLock::new();
    SWEEP.get_or_init(|| {
        let scenario = Scenario::with_master_seed(MASTER_SEED);
        let mut all = HashMap::new();
        for variant in SchemeVariant::ALL {
            for (fi, &f) in F_VALUES.iter().enumerate() {
                let series: Vec<DropMetrics> = (0..scheme_drops(variant))
                    .into_par_iter()
                    .map(|d| run_drop(&scenario, f, variant, d).unwrap())
                    .collect();
                all.insert((variant, fi), series);
            }
        }
        all
    })
}

fn mean_series(variant: SchemeVariant, fi: usize) -> Vec<f64> {
    sweep()[&(variant, fi)].iter().map(|m| m.mean_bps).collect()
}

fn series_at(scenario: &Scenario, f: f64, variant: SchemeVariant, drops: u32, qos: bool) -> Vec<f64> {
    (0..drops)
        .into_par_iter()
        .map(|d| {
            let m = run_drop(scenario, f, variant, d).unwrap();
            if qos {
                m.qos_bps
            } else {
                m.mean_bps
            }
        })
        .collect()
}

fn separated(hi: &[f64], lo: &[f64]) -> bool {
    stats::mean(hi) - stats::ci95_half_width(hi) > stats::mean(lo) + stats::ci95_half_width(lo)
}

#[test]
fn relay_schemes_separate_under_hotspot_load() {
    let start = Instant::now();
    let scenario = Scenario::with_master_seed(MASTER_SEED);
    let pairs = [
        (
            "mean mobile>fixed",
            SchemeVariant::MobileRelays,
            SchemeVariant::FixedRelays,
            false,
        ),
        (
            "mean fixed>reference",
            SchemeVariant::FixedRelays,
            SchemeVariant::Reference,
            false,
        ),
        (
            "qos mobile>fixed",
            SchemeVariant::MobileRelays,
            SchemeVariant::FixedRelays,
            true,
        ),
    ];
    let mut counts = Vec::new();
    for f in [3.0, 4.0, 5.0] {
        for (label, hi_v, lo_v, qos) in pairs {
            // Start from the 20-drop baseline and double until the 95%
            // confidence intervals stop overlapping.
            let cap = if hi_v == SchemeVariant::MobileRelays {
                2_560
            } else {
                20_480
            };
            let mut n = 20u32;
            loop {
                let hi = series_at(&scenario, f, hi_v, n, qos);
                let lo = series_at(&scenario, f, lo_v, n, qos);
                if separated(&hi, &lo) {
                    counts.push(format!("F={f} {label}: {n} drops"));
                    break;
                }
                assert!(n < cap, "{label} at F={f}: intervals still overlap at {n} drops");
                n *= 2;
            }
        }
    }
    println!(
        "PASS: scheme ordering holds with non-overlapping 95% intervals ({}; {:.0}s)",
        counts.join("; "),
        start.elapsed().as_secs_f64()
    );
}

#[test]
fn relay_gains_track_traffic_asymmetry() {
    let gain = |hi: SchemeVariant, lo: SchemeVariant, fi: usize| {
        stats::mean(&mean_series(hi, fi)) / stats::mean(&mean_series(lo, fi))
    };
    let fixed_over_ref: Vec<f64> = (0..5)
        .map(|fi| gain(SchemeVariant::FixedRelays, SchemeVariant::Reference, fi))
        .collect();
    let mobile_over_fixed: Vec<f64> = (0..5)
        .map(|fi| gain(SchemeVariant::MobileRelays, SchemeVariant::FixedRelays, fi))
        .collect();
    for fi in 1..5 {
        assert!(
            fixed_over_ref[0] > fixed_over_ref[fi],
            "fixed-relay gain at F=1 ({:.4}) not above F={} ({:.4})",
            fixed_over_ref[0],
            fi + 1,
            fixed_over_ref[fi]
        );
    }
    assert!(
        mobile_over_fixed[4] > mobile_over_fixed[0],
        "mobile-over-fixed gain at F=5 ({:.4}) not above F=1 ({:.4})",
        mobile_over_fixed[4],
        mobile_over_fixed[0]
    );
    println!(
        "PASS: fixed-over-reference gain peaks at F=1 ({:.3}); mobile-over-fixed gain grows \
         from {:.3} at F=1 to {:.3} at F=5",
        fixed_over_ref[0], mobile_over_fixed[0], mobile_over_fixed[4]
    );
}

#[test]
fn reference_decays_and_upper_bound_dominates() {
    let reference: Vec<f64> = (0..5)
        .map(|fi| stats::mean(&mean_series(SchemeVariant::Reference, fi)))
        .collect();
    for fi in 1..5 {
        assert!(
            reference[fi] <= reference[fi - 1],
            "reference mean rose from F={} to F={}",
            fi,
            fi + 1
        );
    }
    for variant in [
        SchemeVariant::Reference,
        SchemeVariant::LoadBalancing,
        SchemeVariant::FixedRelays,
        SchemeVariant::MobileRelays,
    ] {
        for fi in 0..5 {
            let bound = &sweep()[&(SchemeVariant::UpperBound, fi)];
            for (d, m) in sweep()[&(variant, fi)].iter().enumerate() {
                assert!(
                    bound[d].mean_bps >= m.mean_bps * (1.0 - 1e-9)
                        && bound[d].qos_bps >= m.qos_bps * (1.0 - 1e-9),
                    "{} beats the upper bound at F={} drop {d}",
                    variant.name(),
                    fi + 1
                );
            }
        }
    }
    println!(
        "PASS: reference mean decays {:.0} -> {:.0} bit/s over F=1..5; the upper bound \
         dominates every scheme on every drop",
        reference[0], reference[4]
    );
}

fn run_cli(bin: &str, args: &[&str]) {
    let out = Command::new(bin).args(args).output().expect("spawn relaysim");
    assert!(
        out.status.success(),
        "relaysim {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
}

fn read_csvs(dir: &Path, prefix: &str) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "csv"))
        .map(|p| {
            (
                format!("{prefix}{}", p.file_name().unwrap().to_string_lossy()),
                fs::read(&p).unwrap(),
            )
        })
        .collect();
    files.sort();
    files
}

#[test]
fn every_subcommand_is_deterministic_across_worker_counts() {
    let bin = env!("CARGO_BIN_EXE_relaysim");
    let root = std::env::temp_dir().join(format!("relaysim-acceptance-{}", std::process::id()));
    fs::create_dir_all(&root).unwrap();

    let mut scenario = Scenario::with_master_seed(7);
    scenario.layout.rings = 1;
    scenario.traffic.total_users = 35;
    scenario.traffic.asymmetry_f = 3.0;
    scenario.deployment.variant = SchemeVariant::FixedRelays;
    scenario.deployment.relays_per_bs = 2;
    scenario.drops = 3;
    let scenario_path = root.join("scenario.json");
    fs::write(
        &scenario_path,
        serde_json::to_string_pretty(&scenario).unwrap(),
    )
    .unwrap();
    let sc = scenario_path.to_str().unwrap();

    // Same inputs under one worker, three workers, and a three-worker rerun.
    let mut outputs: Vec<Vec<(String, Vec<u8>)>> = Vec::new();
    for (tag, threads) in [("a", "1"), ("b", "3"), ("c", "3")] {
        let dir = root.join(format!("run-{tag}"));
        let sim_dir = dir.join("simulate");
        let sweep_dir = dir.join("sweep");
        fs::create_dir_all(&dir).unwrap();
        let analytic_out = dir.join("analytic.csv");
        let mc_out = dir.join("mc.csv");
        run_cli(
            bin,
            &[
                "--threads", threads, "analytic",
                "--lambda", "1", "--r", "1",
                "--out", analytic_out.to_str().unwrap(),
            ],
        );
        run_cli(
            bin,
            &[
                "--threads", threads, "mc-validate",
                "--kind", "suav", "--lambda", "1", "--r", "1",
                "--samples", "20000", "--seed", "5", "--bound", "0.05",
                "--out", mc_out.to_str().unwrap(),
            ],
        );
        run_cli(
            bin,
            &[
                "--threads", threads, "simulate",
                "--scenario", sc,
                "--out-dir", sim_dir.to_str().unwrap(),
            ],
        );
        run_cli(
            bin,
            &[
                "--threads", threads, "sweep",
                "--scenario", sc,
                "--f-values", "1,3",
                "--schemes", "reference,fixed_relays,mobile_relays",
                "--out-dir", sweep_dir.to_str().unwrap(),
            ],
        );
        let mut files = read_csvs(&dir, "");
        files.extend(read_csvs(&sim_dir, "simulate/"));
        files.extend(read_csvs(&sweep_dir, "sweep/"));
        files.sort();
        outputs.push(files);
    }

    assert!(outputs[0].len() >= 7, "expected csv output from every subcommand");
    for other in [1, 2] {
        assert_eq!(outputs[0].len(), outputs[other].len());
        for (a, b) in outputs[0].iter().zip(&outputs[other]) {
            assert!(a.0 == b.0, "file set mismatch: {} vs {}", a.0, b.0);
            assert!(a.1 == b.1, "{} differs between runs", a.0);
        }
    }
    fs::remove_dir_all(&root).ok();
    println!(
        "PASS: {} csv files byte-identical across worker counts and reruns",
        outputs[0].len()
    );
}
