//! End-to-end runs: build the coupling model from a config, prepare and
//! evolve the state, synthesize the configured signal, and extract spectra,
//! peaks, and reference markers.

use crate::config::{ExperimentConfig, ModelConfig, SamplingConfig};
use crate::dynamics::{
    build_product_state, derive_seed, evolve, postselect_expectations, prep_angles_pair,
    prep_angles_single, rotate_transverse_basis, sample_shots, transverse_moment, Hamiltonians,
    PreparedState, RotatingFrame, StateVector, ZObservable,
};
use crate::dynamics::FrameConvention;
use crate::error::{Error, Result};
use crate::ion_chain::{
    coupling_from_sidebands, equilibrium_positions, fit_power_law, transverse_modes, ModeStructure,
};
use crate::lattice::{build_all_xy_blocks, CouplingMatrix};
use crate::quasiparticles::{
    beat_frequencies, diagonalize_single_excitation, nib_nif_predictions,
    two_excitation_eigensystem, ModeSet,
};
use crate::spectroscopy::{
    find_peaks, fourier_spectrum, mirror_extend, pair_sites, signal_complex_xy, signal_m1,
    signal_m2, subtract_mean, time_grid, M2Variant, Peak, Spectrum, TimeSeries,
};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use std::f64::consts::TAU;

/// Coupling matrix, transverse field, and diagonalized modes for one config.
#[derive(Debug, Clone)]
pub struct BuiltModel {
    pub coupling: CouplingMatrix,
    /// B in rad/s (b_over_j times the largest coupling; 0 when unset).
    pub b_field: f64,
    /// Largest |J_ik| in rad/s.
    pub j_max: f64,
    pub modes: ModeSet,
}

/// Builds the coupling matrix (power law directly, trap via the chain
/// mechanics), fixes B from b_over_j, and diagonalizes the modes.
pub fn build_model(cfg: &ExperimentConfig) -> Result<BuiltModel> {
    cfg.validate()?;
    let coupling = match &cfg.model {
        ModelConfig::PowerLaw(p) => {
            crate::lattice::power_law_couplings(p.n, p.j0_hz * TAU, p.alpha)?
        }
        ModelConfig::Trap(t) => {
            let trap = t.to_trap()?;
            let structure = transverse_modes(&trap)?;
            coupling_from_sidebands(&trap, &structure)?
        }
    };
    let j_max = coupling.max_abs();
    let b_field = cfg.b_over_j.unwrap_or(0.0) * j_max;
    let modes = diagonalize_single_excitation(&coupling, b_field);
    Ok(BuiltModel {
        coupling,
        b_field,
        j_max,
        modes,
    })
}

fn effective_min_sep(cfg: &ExperimentConfig, sp: &Spectrum) -> f64 {
    cfg.analysis.min_sep_hz.unwrap_or(2.0 * sp.bin_width())
}

fn evolve_prepared(
    model: &BuiltModel,
    prep: &PreparedState,
    grid: &[f64],
) -> Result<Vec<StateVector>> {
    let blocks = build_all_xy_blocks(&model.coupling, model.b_field)?;
    evolve(&prep.state.to_blocks(), &Hamiltonians::XyBlocks(&blocks), grid)
}

fn shot_params(cfg: &ExperimentConfig) -> Option<(u64, u64)> {
    match cfg.sampling {
        SamplingConfig::Exact => None,
        SamplingConfig::Shots { shots, seed } => Some((shots, seed)),
    }
}

/// Unnormalized sector-restricted z estimates from one measured snapshot.
fn sector_z_estimates(
    counts: &std::collections::BTreeMap<u64, u64>,
    shots: u64,
    n_spins: usize,
    sector: usize,
) -> Vec<f64> {
    let mut acc = vec![0.0; n_spins];
    for (&mask, &count) in counts {
        if mask.count_ones() as usize != sector {
            continue;
        }
        let w = count as f64 / shots as f64;
        for (j, a) in acc.iter_mut().enumerate() {
            *a += w * ZObservable::SigmaZ(j).value(mask);
        }
    }
    acc
}

/// Interference signal on the one-excitation sector for a (k, k2) pair
/// preparation. `stream` decorrelates the shot seeds of independent runs.
fn m1_series(
    model: &BuiltModel,
    cfg: &ExperimentConfig,
    k: usize,
    k2: usize,
    stream: u64,
) -> Result<TimeSeries<f64>> {
    let gamma = cfg.require_gamma()?;
    let time = cfg.require_time()?;
    let (dt, grid) = time_grid(time.t_max, time.n_samples)?;
    let theta = prep_angles_pair(
        gamma,
        &model.modes.amplitude(k),
        &model.modes.amplitude(k2),
    )?;
    let prep = build_product_state(&theta)?;
    let states = evolve_prepared(model, &prep, &grid)?;
    let n = model.modes.n_spins();
    let mut sz: Vec<Vec<f64>> = vec![Vec::with_capacity(grid.len()); n];
    match shot_params(cfg) {
        None => {
            for st in &states {
                for (j, col) in sz.iter_mut().enumerate() {
                    col.push(postselect_expectations(st, 1, &ZObservable::SigmaZ(j), false)?);
                }
            }
        }
        Some((shots, seed)) => {
            for (i, st) in states.iter().enumerate() {
                let counts = sample_shots(st, shots, derive_seed(seed, stream + i as u64))?;
                let est = sector_z_estimates(&counts, shots, n, 1);
                for (j, col) in sz.iter_mut().enumerate() {
                    col.push(est[j]);
                }
            }
        }
    }
    let series: Vec<TimeSeries<f64>> = sz
        .into_iter()
        .map(|v| TimeSeries::new(0.0, dt, v))
        .collect::<Result<_>>()?;
    signal_m1(&series, &model.modes, k, k2)
}

/// Detrend, mirror, transform, and keep the positive-frequency half
/// (the population signals are real, so the spectrum is even).
fn real_signal_spectrum(cfg: &ExperimentConfig, series: &TimeSeries<f64>) -> Result<Spectrum> {
    let mirrored = mirror_extend(&subtract_mean(series))?;
    Ok(fourier_spectrum(&mirrored, cfg.analysis.zero_pad, cfg.analysis.window)?.positive_half())
}

/// Absolute-energy run: transverse readout of a single-mode preparation.
#[derive(Debug, Clone)]
pub struct AbsoluteResult {
    /// Frame-rotated weighted transverse sum over the grid.
    pub series: TimeSeries<Complex64>,
    pub spectrum: Spectrum,
    pub peaks: Vec<Peak>,
    /// Mode energy in Hz under the active frame convention.
    pub expected_hz: f64,
    pub bin_hz: f64,
}

pub fn pipeline_absolute(cfg: &ExperimentConfig) -> Result<AbsoluteResult> {
    let model = build_model(cfg)?;
    let k = cfg.require_mode()?;
    let gamma = cfg.require_gamma()?;
    cfg.require_b_over_j()?;
    let time = cfg.require_time()?;
    let (dt, grid) = time_grid(time.t_max, time.n_samples)?;
    let weights = model.modes.amplitude(k);
    let theta = prep_angles_single(gamma, &weights);
    let prep = build_product_state(&theta)?;
    let states = evolve_prepared(&model, &prep, &grid)?;
    let frame = RotatingFrame::new(model.b_field, cfg.frame_convention);
    let n = model.modes.n_spins();
    let mut sx: Vec<Vec<f64>> = vec![Vec::with_capacity(grid.len()); n];
    let mut sy: Vec<Vec<f64>> = vec![Vec::with_capacity(grid.len()); n];
    match shot_params(cfg) {
        None => {
            for (st, &t) in states.iter().zip(grid.iter()) {
                for j in 0..n {
                    let v = frame.rotate(transverse_moment(st, j)?, t);
                    sx[j].push(v.re);
                    sy[j].push(v.im);
                }
            }
        }
        Some((shots, seed)) => {
            let y_sign = match cfg.frame_convention {
                FrameConvention::Main => 1.0,
                FrameConvention::Supplement => -1.0,
            };
            for (i, (st, &t)) in states.iter().zip(grid.iter()).enumerate() {
                let full = st.to_full()?;
                let phi = 2.0 * model.b_field * t;
                for (axis, phase, sign) in [(0u64, phi, 1.0), (1u64, phi + TAU / 4.0, y_sign)] {
                    let rotated = rotate_transverse_basis(&full, phase)?;
                    let counts =
                        sample_shots(&rotated, shots, derive_seed(seed, 2 * i as u64 + axis))?;
                    for j in 0..n {
                        let mut est = 0.0;
                        for (&mask, &count) in &counts {
                            est += count as f64 / shots as f64
                                * ZObservable::SigmaZ(j).value(mask);
                        }
                        if axis == 0 {
                            sx[j].push(est);
                        } else {
                            sy[j].push(sign * est);
                        }
                    }
                }
            }
        }
    }
    let sx: Vec<TimeSeries<f64>> = sx
        .into_iter()
        .map(|v| TimeSeries::new(0.0, dt, v))
        .collect::<Result<_>>()?;
    let sy: Vec<TimeSeries<f64>> = sy
        .into_iter()
        .map(|v| TimeSeries::new(0.0, dt, v))
        .collect::<Result<_>>()?;
    let series = signal_complex_xy(&sx, &sy, &weights)?;
    let mirrored = mirror_extend(&series)?;
    let spectrum = fourier_spectrum(&mirrored, cfg.analysis.zero_pad, cfg.analysis.window)?;
    let min_sep = effective_min_sep(cfg, &spectrum);
    let peaks = find_peaks(&spectrum, cfg.analysis.threshold, min_sep)?;
    let sign = match cfg.frame_convention {
        FrameConvention::Main => 1.0,
        FrameConvention::Supplement => -1.0,
    };
    Ok(AbsoluteResult {
        expected_hz: sign * model.modes.energy(k) / TAU,
        bin_hz: spectrum.bin_width(),
        series,
        spectrum,
        peaks,
    })
}

/// Relative-energy run: one mode pair's beat note on the M1 signal.
#[derive(Debug, Clone)]
pub struct BeatnoteResult {
    pub series: TimeSeries<f64>,
    pub spectrum: Spectrum,
    pub peaks: Vec<Peak>,
    /// |eps_k - eps_k2| / 2pi from the same mode set.
    pub expected_gap_hz: f64,
    pub bin_hz: f64,
}

pub fn pipeline_beatnote(cfg: &ExperimentConfig) -> Result<BeatnoteResult> {
    let model = build_model(cfg)?;
    let (k, k2) = cfg.require_mode_pair()?;
    cfg.require_b_over_j()?;
    let series = m1_series(&model, cfg, k, k2, 0)?;
    let spectrum = real_signal_spectrum(cfg, &series)?;
    let min_sep = effective_min_sep(cfg, &spectrum);
    let peaks = find_peaks(&spectrum, cfg.analysis.threshold, min_sep)?;
    Ok(BeatnoteResult {
        expected_gap_hz: (model.modes.energy(k) - model.modes.energy(k2)).abs() / TAU,
        bin_hz: spectrum.bin_width(),
        series,
        spectrum,
        peaks,
    })
}

/// One row of the dispersion reconstruction.
#[derive(Debug, Clone, Copy)]
pub struct DispersionRow {
    pub k_prime: usize,
    /// Dominant M1 peak position, Hz.
    pub measured_hz: f64,
    /// |eps_1 - eps_k'| / 2pi, Hz.
    pub exact_hz: f64,
    /// Amplitude ratio of the strongest to the second peak
    /// (infinite when only one peak clears the threshold).
    pub dominance: f64,
    pub peak_amplitude: f64,
}

#[derive(Debug, Clone)]
pub struct DispersionResult {
    pub rows: Vec<DispersionRow>,
    pub bin_hz: f64,
}

/// Scans k' = 2..N against the base mode and reads each gap off the
/// dominant M1 peak.
pub fn pipeline_dispersion(cfg: &ExperimentConfig) -> Result<DispersionResult> {
    let model = build_model(cfg)?;
    cfg.require_b_over_j()?;
    let n = model.modes.n_spins();
    if n < 2 {
        return Err(Error::invalid("dispersion scan needs at least two spins"));
    }
    let mut rows = Vec::with_capacity(n - 1);
    let mut bin_hz = 0.0;
    for k2 in 2..=n {
        let series = m1_series(&model, cfg, 1, k2, (k2 as u64) << 32)?;
        let spectrum = real_signal_spectrum(cfg, &series)?;
        let min_sep = effective_min_sep(cfg, &spectrum);
        let peaks = find_peaks(&spectrum, cfg.analysis.threshold, min_sep)?;
        let top = peaks.first().ok_or_else(|| {
            Error::numerical(format!("no spectral peak for the (1, {k2}) pair"))
        })?;
        rows.push(DispersionRow {
            k_prime: k2,
            measured_hz: top.frequency,
            exact_hz: (model.modes.energy(1) - model.modes.energy(k2)).abs() / TAU,
            dominance: peaks
                .get(1)
                .map_or(f64::INFINITY, |second| top.amplitude / second.amplitude),
            peak_amplitude: top.amplitude,
        });
        bin_hz = spectrum.bin_width();
    }
    Ok(DispersionResult { rows, bin_hz })
}

/// Reference lines attached to a two-particle run.
#[derive(Debug, Clone)]
pub struct TwoParticleMarkers {
    pub nu_a: f64,
    pub nu_b: f64,
    pub nu_c: f64,
    /// Non-interacting boson line, band-edge pairs only.
    pub f_nib: Option<f64>,
    /// Nearest fermion-allowed line, band-edge pairs only.
    pub f_nif: Option<f64>,
    /// Differences of exact two-excitation eigenvalues whose eigenvectors
    /// overlap the initial state, Hz, ascending.
    pub exact_gaps_hz: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct TwoParticleResult {
    pub series_a: TimeSeries<f64>,
    pub series_b: TimeSeries<f64>,
    pub spectrum_a: Spectrum,
    pub spectrum_b: Spectrum,
    pub peaks_a: Vec<Peak>,
    pub peaks_b: Vec<Peak>,
    pub markers: TwoParticleMarkers,
    pub bin_hz: f64,
}

/// Differences of populated two-excitation levels: eigenvalues whose
/// eigenvectors carry at least `rel_tol` of the largest initial overlap.
fn populated_gaps(
    coupling: &CouplingMatrix,
    prep: &PreparedState,
    rel_tol: f64,
) -> Result<Vec<f64>> {
    let (basis, vals, vecs) = two_excitation_eigensystem(coupling, 0.0)?;
    let psi2: Vec<Complex64> = basis
        .masks()
        .iter()
        .map(|&m| prep.state.amplitude(m))
        .collect();
    let overlaps: Vec<f64> = (0..vecs.ncols())
        .map(|g| {
            let mut acc = Complex64::new(0.0, 0.0);
            for (idx, amp) in psi2.iter().enumerate() {
                acc += vecs[(idx, g)] * amp;
            }
            acc.norm()
        })
        .collect();
    let max_overlap = overlaps.iter().cloned().fold(0.0, f64::max);
    if max_overlap <= 0.0 {
        return Err(Error::numerical("initial state has no two-excitation weight"));
    }
    let populated: Vec<usize> = (0..vals.len())
        .filter(|&g| overlaps[g] > rel_tol * max_overlap)
        .collect();
    let mut gaps = Vec::new();
    for (pos, &g) in populated.iter().enumerate() {
        for &h in &populated[pos + 1..] {
            let gap = (vals[g] - vals[h]).abs() / TAU;
            if gap > 1e-12 {
                gaps.push(gap);
            }
        }
    }
    gaps.sort_by(f64::total_cmp);
    gaps.dedup_by(|a, b| (*a - *b).abs() < 1e-9 * (1.0 + b.abs()));
    Ok(gaps)
}

pub fn pipeline_two_particle(cfg: &ExperimentConfig) -> Result<TwoParticleResult> {
    let model = build_model(cfg)?;
    let (k, k2) = cfg.require_mode_pair()?;
    cfg.require_b_over_j()?;
    let gamma = cfg.require_gamma()?;
    let time = cfg.require_time()?;
    let (dt, grid) = time_grid(time.t_max, time.n_samples)?;
    let theta = prep_angles_pair(
        gamma,
        &model.modes.amplitude(k),
        &model.modes.amplitude(k2),
    )?;
    let prep = build_product_state(&theta)?;
    let states = evolve_prepared(&model, &prep, &grid)?;
    let n = model.modes.n_spins();
    let pairs = pair_sites(n);
    let mut p: Vec<Vec<f64>> = vec![Vec::with_capacity(grid.len()); pairs.len()];
    match shot_params(cfg) {
        None => {
            for st in &states {
                for (pi, &(i, j)) in pairs.iter().enumerate() {
                    p[pi].push(postselect_expectations(
                        st,
                        2,
                        &ZObservable::PairUp(i, j),
                        false,
                    )?);
                }
            }
        }
        Some((shots, seed)) => {
            for (ti, st) in states.iter().enumerate() {
                let counts = sample_shots(st, shots, derive_seed(seed, ti as u64))?;
                for (pi, &(i, j)) in pairs.iter().enumerate() {
                    let mask = (1u64 << i) | (1u64 << j);
                    let hits = counts.get(&mask).copied().unwrap_or(0);
                    p[pi].push(hits as f64 / shots as f64);
                }
            }
        }
    }
    let p: Vec<TimeSeries<f64>> = p
        .into_iter()
        .map(|v| TimeSeries::new(0.0, dt, v))
        .collect::<Result<_>>()?;
    let series_a = signal_m2(&p, &model.modes, k, k2, M2Variant::A)?;
    let series_b = signal_m2(&p, &model.modes, k, k2, M2Variant::B)?;
    let spectrum_a = real_signal_spectrum(cfg, &series_a)?;
    let spectrum_b = real_signal_spectrum(cfg, &series_b)?;
    let peaks_a = find_peaks(
        &spectrum_a,
        cfg.analysis.threshold,
        effective_min_sep(cfg, &spectrum_a),
    )?;
    let peaks_b = find_peaks(
        &spectrum_b,
        cfg.analysis.threshold,
        effective_min_sep(cfg, &spectrum_b),
    )?;
    let (nu_a, nu_b, nu_c) = beat_frequencies(k, k2, &model.modes)?;
    let (f_nib, f_nif) = match nib_nif_predictions(&model.modes, k, k2) {
        Ok((nib, nif)) => (Some(nib), Some(nif)),
        Err(Error::Unsupported(_)) => (None, None),
        Err(e) => return Err(e),
    };
    let exact_gaps_hz = populated_gaps(&model.coupling, &prep, 1e-3)?;
    Ok(TwoParticleResult {
        bin_hz: spectrum_a.bin_width(),
        series_a,
        series_b,
        spectrum_a,
        spectrum_b,
        peaks_a,
        peaks_b,
        markers: TwoParticleMarkers {
            nu_a,
            nu_b,
            nu_c,
            f_nib,
            f_nif,
            exact_gaps_hz,
        },
    })
}

/// Chain mechanics report for a trap model.
#[derive(Debug, Clone)]
pub struct IonChainResult {
    pub positions: DVector<f64>,
    pub mode_freqs_hz: Vec<f64>,
    pub mode_vectors: DMatrix<f64>,
    /// Spin-spin couplings in Hz.
    pub coupling_hz: DMatrix<f64>,
    pub fitted_j0_hz: f64,
    pub fitted_alpha: f64,
}

pub fn pipeline_ion_chain(cfg: &ExperimentConfig) -> Result<IonChainResult> {
    cfg.validate()?;
    let ModelConfig::Trap(t) = &cfg.model else {
        return Err(Error::invalid("ion-chain run needs a trap model"));
    };
    let trap = t.to_trap()?;
    let structure: ModeStructure = transverse_modes(&trap)?;
    let coupling = coupling_from_sidebands(&trap, &structure)?;
    let (j0, alpha) = fit_power_law(&coupling)?;
    Ok(IonChainResult {
        positions: equilibrium_positions(trap.n_ions)?,
        mode_freqs_hz: structure.frequencies().iter().map(|w| w / TAU).collect(),
        mode_vectors: structure.vectors().clone(),
        coupling_hz: coupling.matrix() / TAU,
        fitted_j0_hz: j0 / TAU,
        fitted_alpha: alpha,
    })
}
