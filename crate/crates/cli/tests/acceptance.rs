//! Acceptance gate: one test per numbered criterion. Each prints a
//! `criterion NN: PASS/FAIL` line (run with `--nocapture` to see them all;
//! failures always show theirs) and asserts the outcome.

use ionspec_core::config::{ExperimentConfig, SamplingConfig};
use ionspec_core::dynamics::{
    build_product_state, evolve, expect_sigma_z, prep_angles_single, Hamiltonians,
};
use ionspec_core::lattice::{build_all_xy_blocks, build_full_ising, power_law_couplings};
use ionspec_core::linalg::eigh_ascending;
use ionspec_core::pipeline::{
    build_model, pipeline_absolute, pipeline_beatnote, pipeline_dispersion, pipeline_two_particle,
};
use ionspec_core::quasiparticles::{
    best_overlap_pair_energy, diagonalize_single_excitation, perturbative_shift, sine_amplitudes,
};
use ionspec_core::spectroscopy::time_grid;
use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::time::Instant;

fn configs_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn load(name: &str) -> ExperimentConfig {
    let path = configs_dir().join(name);
    let text = std::fs::read_to_string(&path)
        .unwrap_or_else(|e| panic!("cannot read {}: {e}", path.display()));
    serde_json::from_str(&text).unwrap()
}

fn report(num: u32, label: &str, pass: bool, detail: &str) {
    println!(
        "criterion {num:02} ({label}): {} — {detail}",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(pass, "criterion {num:02} ({label}) failed: {detail}");
}

#[test]
fn criterion_01_sine_ansatz_exactness() {
    let start = Instant::now();
    let mut worst = 0.0f64;
    for n in [5usize, 7, 9] {
        let c = power_law_couplings(n, 1.0, f64::INFINITY).unwrap();
        let m = diagonalize_single_excitation(&c, 0.0);
        for k in 1..=n {
            let e_ref = 2.0 * (k as f64 * PI / (n as f64 + 1.0)).cos();
            worst = worst.max((m.energy(k) - e_ref).abs());
            let a = m.amplitude(k);
            let s = sine_amplitudes(n, k).unwrap();
            for j in 0..n {
                worst = worst.max((a[j] - s[j]).abs());
            }
        }
    }
    let elapsed = start.elapsed();
    let pass = worst <= 1e-10 && elapsed.as_secs_f64() < 1.0;
    report(
        1,
        "sine ansatz",
        pass,
        &format!("max deviation {worst:.3e}, elapsed {elapsed:?}"),
    );
}

#[test]
fn criterion_02_zero_sum_rule() {
    let mut worst = 0.0f64;
    for alpha in [0.8, 1.1, 1.5, 3.0] {
        let c = power_law_couplings(7, 1.0, alpha).unwrap();
        let m = diagonalize_single_excitation(&c, 0.0);
        worst = worst.max(m.energies().iter().sum::<f64>().abs());
    }
    // trap-derived coupling matrix, normalized to its own scale
    let model = build_model(&load("ion_chain.json")).unwrap();
    let scale = model.modes.energies()[0].abs().max(1.0);
    worst = worst.max(model.modes.energies().iter().sum::<f64>().abs() / scale);
    let pass = worst <= 1e-10;
    report(2, "zero-sum rule", pass, &format!("max |sum| {worst:.3e}"));
}

#[test]
fn criterion_03_block_union_vs_full_spectrum() {
    let mut worst = 0.0f64;
    for (n, alpha, b) in [(6usize, 3.0, 1.3), (10, 1.1, 0.8)] {
        let c = power_law_couplings(n, 1.0, alpha).unwrap();
        let blocks = build_all_xy_blocks(&c, b).unwrap();
        let mut union: Vec<f64> = Vec::with_capacity(1 << n);
        for blk in &blocks {
            let (vals, _) = eigh_ascending(blk.matrix());
            union.extend(vals.iter());
        }
        union.sort_by(f64::total_cmp);
        let full = build_full_ising(&c, b, None).unwrap();
        let (vals, _) = eigh_ascending(full.spin_conserving_part().matrix());
        let scale = vals.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        for (u, v) in union.iter().zip(vals.iter()) {
            worst = worst.max((u - v).abs() / scale);
        }
    }
    let pass = worst <= 1e-10;
    report(
        3,
        "block union vs full spectrum",
        pass,
        &format!("max relative deviation {worst:.3e}"),
    );
}

#[test]
fn criterion_04_dispersion_pipeline() {
    let start = Instant::now();
    let res = pipeline_dispersion(&load("dispersion.json")).unwrap();
    let elapsed = start.elapsed();
    let mut pass = res.rows.len() == 6 && elapsed.as_secs_f64() < 10.0;
    let mut detail = format!("elapsed {elapsed:?}");
    for row in &res.rows {
        let err = (row.measured_hz - row.exact_hz).abs();
        detail.push_str(&format!(
            "; k'={}: err {:.2e} Hz (bin {:.2e}), dominance {:.2}",
            row.k_prime, err, res.bin_hz, row.dominance
        ));
        pass = pass && err <= res.bin_hz && row.dominance >= 3.0;
    }
    report(4, "dispersion pipeline", pass, &detail);
}

#[test]
fn criterion_05_absolute_energy_pipeline() {
    let res = pipeline_absolute(&load("absolute.json")).unwrap();
    let top = res.peaks.first();
    let (pass, detail) = match top {
        Some(p) => {
            let err = (p.frequency - res.expected_hz).abs();
            (
                err <= res.bin_hz && p.frequency < 0.0 && res.expected_hz < 0.0,
                format!(
                    "peak {:.6} Hz vs expected {:.6} Hz, err {err:.2e}, bin {:.2e}",
                    p.frequency, res.expected_hz, res.bin_hz
                ),
            )
        }
        None => (false, "no peak found".into()),
    };
    report(5, "absolute energy pipeline", pass, &detail);
}

#[test]
fn criterion_06_two_particle_interaction_shift() {
    let start = Instant::now();
    let res = pipeline_two_particle(&load("two_particle.json")).unwrap();
    let elapsed = start.elapsed();
    let m = &res.markers;
    let top_a = res.peaks_a[0].frequency;
    let between = top_a > m.f_nif.unwrap() && top_a < m.f_nib.unwrap();
    let mut max_gap_err = 0.0f64;
    for peaks in [&res.peaks_a, &res.peaks_b] {
        for p in peaks.iter() {
            let nearest = m
                .exact_gaps_hz
                .iter()
                .map(|g| (g - p.frequency).abs())
                .fold(f64::INFINITY, f64::min);
            max_gap_err = max_gap_err.max(nearest);
        }
    }
    let sum_rule_err = (m.nu_c - (m.nu_a + m.nu_b)).abs() / m.nu_c;
    let pass = between
        && max_gap_err <= res.bin_hz
        && sum_rule_err <= 1e-10
        && elapsed.as_secs_f64() < 30.0;
    report(
        6,
        "two-particle interaction shift",
        pass,
        &format!(
            "dominant {top_a:.4} Hz in ({:.4}, {:.4}); max peak-to-gap err {max_gap_err:.2e} \
             (bin {:.2e}); sum-rule err {sum_rule_err:.2e}; elapsed {elapsed:?}",
            m.f_nif.unwrap(),
            m.f_nib.unwrap(),
            res.bin_hz
        ),
    );
}

#[test]
fn criterion_07_perturbation_theory_convergence() {
    let mut errors = Vec::new();
    for n in [8usize, 10, 12, 14] {
        let c = power_law_couplings(n, 1.0, f64::INFINITY).unwrap();
        let m = diagonalize_single_excitation(&c, 0.0);
        let predicted = m.energy(1) + m.energy(n) + perturbative_shift(1, n, &m).unwrap();
        let exact = best_overlap_pair_energy(&c, &m, 1, n).unwrap();
        errors.push((predicted - exact).abs());
    }
    let pass = errors.windows(2).all(|w| w[1] < w[0]);
    report(
        7,
        "perturbation-theory convergence",
        pass,
        &format!("errors {errors:?}"),
    );
}

#[test]
fn criterion_08_ising_xy_agreement() {
    // nearest-neighbor chain; the coupling model is free here and the
    // power-law tails only shift the quadratic prefactor
    let n = 7;
    let c = power_law_couplings(n, 1.0, f64::INFINITY).unwrap();
    let j_max = c.max_abs();
    let (_, grid) = time_grid(40.0, 64).unwrap();
    let mut discrepancies = Vec::new();
    for ratio in [25.0, 50.0, 100.0] {
        let b = ratio * j_max;
        let modes = diagonalize_single_excitation(&c, b);
        // weak rotation: the prepared pair weight scales as gamma^2 and its
        // cross term with the vacuum is first order in J/B, so it must stay
        // far below the quadratic counter-rotating signal being measured
        let prep = build_product_state(&prep_angles_single(0.02, &modes.amplitude(n))).unwrap();
        let blocks = build_all_xy_blocks(&c, b).unwrap();
        let xy = evolve(&prep.state.to_blocks(), &Hamiltonians::XyBlocks(&blocks), &grid).unwrap();
        let full = build_full_ising(&c, b, None).unwrap();
        let ising = evolve(&prep.state, &Hamiltonians::Ising(&full), &grid).unwrap();
        let mut d = 0.0f64;
        for (sx, si) in xy.iter().zip(ising.iter()) {
            for j in 0..n {
                d = d.max(
                    (expect_sigma_z(sx, j).unwrap() - expect_sigma_z(si, j).unwrap()).abs(),
                );
            }
        }
        discrepancies.push((ratio, d));
    }
    // log-log slope of discrepancy against J/B
    let xs: Vec<f64> = discrepancies.iter().map(|(r, _)| (1.0 / r).ln()).collect();
    let ys: Vec<f64> = discrepancies.iter().map(|(_, d)| d.ln()).collect();
    let xm = xs.iter().sum::<f64>() / xs.len() as f64;
    let ym = ys.iter().sum::<f64>() / ys.len() as f64;
    let slope = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (x - xm) * (y - ym))
        .sum::<f64>()
        / xs.iter().map(|x| (x - xm) * (x - xm)).sum::<f64>();
    let d50 = discrepancies[1].1;
    let bound = 5.0 * (j_max / (2.0 * 50.0 * j_max)).powi(2);
    let pass = (slope - 2.0).abs() <= 0.3 && d50 <= bound;
    report(
        8,
        "Ising/XY agreement",
        pass,
        &format!("slope {slope:.3}; discrepancy at B/J=50 {d50:.3e} vs bound {bound:.3e}"),
    );
}

#[test]
fn criterion_09_shot_noise_convergence() {
    let exact_cfg = load("beatnote.json");
    let exact = pipeline_beatnote(&exact_cfg).unwrap();
    let reference = exact.peaks[0].frequency;
    let mut errors = Vec::new();
    for shots in [100u64, 1000, 10000] {
        let mut cfg = load("beatnote.json");
        cfg.sampling = SamplingConfig::Shots { shots, seed: 26 };
        let res = pipeline_beatnote(&cfg).unwrap();
        errors.push((res.peaks[0].frequency - reference).abs());
    }
    let pass = errors.windows(2).all(|w| w[1] < w[0]) && errors[2] <= exact.bin_hz;
    report(
        9,
        "shot-noise convergence",
        pass,
        &format!("errors {errors:?}, bin {:.3e}", exact.bin_hz),
    );
}

#[test]
fn criterion_10_scattering_regime_contrast() {
    let scatter = pipeline_two_particle(&load("two_particle_scattering.json")).unwrap();
    let edge = pipeline_two_particle(&load("two_particle.json")).unwrap();
    let scatter_count = scatter.peaks_a.len() + scatter.peaks_b.len();
    let edge_count = edge.peaks_a.len() + edge.peaks_b.len();
    let pass = scatter_count > 3 && edge_count <= 3;
    report(
        10,
        "scattering regime contrast",
        pass,
        &format!(
            "pair (1,4): {} peaks above threshold ({} + {}); pair (1,7): {} ({} + {}); \
             required >3 and <=3. The band-edge preparation carries same-mode pair \
             components whose level differences are genuine spectral lines above 10% \
             (each matches an exact two-excitation gap, see criterion 6), so the <=3 \
             bound is not reachable with this protocol.",
            scatter_count,
            scatter.peaks_a.len(),
            scatter.peaks_b.len(),
            edge_count,
            edge.peaks_a.len(),
            edge.peaks_b.len()
        ),
    );
}

#[test]
fn criterion_11_csv_determinism() {
    let bin = env!("CARGO_BIN_EXE_ionspec");
    let config = configs_dir().join("beatnote_shots.json");
    let tmp = tempfile::tempdir().unwrap();
    let (one, two) = (tmp.path().join("one"), tmp.path().join("two"));
    for out in [&one, &two] {
        let status = std::process::Command::new(bin)
            .args(["beatnote", "--config"])
            .arg(&config)
            .arg("--out")
            .arg(out)
            .status()
            .unwrap();
        assert!(status.success());
    }
    let mut pass = true;
    let mut detail = String::new();
    for name in ["series.csv", "spectrum.csv", "peaks.csv", "summary.csv"] {
        let a = std::fs::read(one.join(name)).unwrap();
        let b = std::fs::read(two.join(name)).unwrap();
        let same = a == b;
        pass = pass && same;
        detail.push_str(&format!("{name}: {} bytes {}; ", a.len(), if same { "identical" } else { "DIFFER" }));
    }
    report(11, "CSV determinism", pass, &detail);
}
