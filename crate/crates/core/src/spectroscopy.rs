//! Signal synthesis and Fourier analysis: weighted observable sums,
//! Hermitian time mirroring, padded DFT spectra, and peak extraction.

use crate::error::{Error, Result};
use crate::quasiparticles::ModeSet;
use nalgebra::DVector;
use num_complex::Complex64;
use rustfft::FftPlanner;

/// Sample element of a time series (real or complex).
pub trait Sample: Copy {
    fn conj_sample(self) -> Self;
    fn to_complex(self) -> Complex64;
}

impl Sample for f64 {
    fn conj_sample(self) -> Self {
        self
    }
    fn to_complex(self) -> Complex64 {
        Complex64::new(self, 0.0)
    }
}

impl Sample for Complex64 {
    fn conj_sample(self) -> Self {
        self.conj()
    }
    fn to_complex(self) -> Complex64 {
        self
    }
}

/// Uniformly sampled series starting at `t0` with step `dt`.
#[derive(Debug, Clone)]
pub struct TimeSeries<T> {
    t0: f64,
    dt: f64,
    values: Vec<T>,
}

impl<T: Sample> TimeSeries<T> {
    pub fn new(t0: f64, dt: f64, values: Vec<T>) -> Result<Self> {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::invalid(format!("time step {dt} must be positive")));
        }
        if !t0.is_finite() {
            return Err(Error::invalid("start time must be finite"));
        }
        if values.is_empty() {
            return Err(Error::invalid("time series needs at least one sample"));
        }
        Ok(TimeSeries { t0, dt, values })
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn time(&self, idx: usize) -> f64 {
        self.t0 + self.dt * idx as f64
    }

    fn same_grid(&self, other: &Self) -> bool {
        self.len() == other.len()
            && (self.t0 - other.t0).abs() <= 1e-12 * self.dt
            && (self.dt - other.dt).abs() <= 1e-12 * self.dt
    }
}

/// The evenly spaced grid t_k = k * t_max / (n - 1), k = 0..n.
pub fn time_grid(t_max: f64, n_samples: usize) -> Result<(f64, Vec<f64>)> {
    if !(t_max > 0.0) || !t_max.is_finite() {
        return Err(Error::invalid(format!("t_max {t_max} must be positive")));
    }
    if n_samples < 2 {
        return Err(Error::invalid("need at least two samples"));
    }
    let dt = t_max / (n_samples - 1) as f64;
    Ok((dt, (0..n_samples).map(|k| k as f64 * dt).collect()))
}

/// Subtracts the time-averaged value (removes the DC pedestal of a real
/// population signal before transforming).
pub fn subtract_mean(s: &TimeSeries<f64>) -> TimeSeries<f64> {
    let mean = s.values.iter().sum::<f64>() / s.len() as f64;
    TimeSeries {
        t0: s.t0,
        dt: s.dt,
        values: s.values.iter().map(|v| v - mean).collect(),
    }
}

fn sign_or_zero(x: f64, tol: f64) -> f64 {
    if x.abs() <= tol {
        0.0
    } else {
        x.signum()
    }
}

fn amplitude_tol(m: &ModeSet) -> f64 {
    1e-9 * m.amplitudes().amax()
}

/// Weighted transverse sum M(t) = sum_j w_j (<sx_j>(t) + i <sy_j>(t)).
pub fn signal_complex_xy(
    sx: &[TimeSeries<f64>],
    sy: &[TimeSeries<f64>],
    weights: &DVector<f64>,
) -> Result<TimeSeries<Complex64>> {
    let n = weights.len();
    if sx.len() != n || sy.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "{} weights against {} x-series and {} y-series",
            n,
            sx.len(),
            sy.len()
        )));
    }
    if n == 0 {
        return Err(Error::invalid("no sites to sum over"));
    }
    let grid = &sx[0];
    for s in sx.iter().chain(sy.iter()) {
        if !grid.same_grid(s) {
            return Err(Error::DimensionMismatch(
                "per-site series must share one time grid".into(),
            ));
        }
    }
    let values = (0..grid.len())
        .map(|i| {
            (0..n)
                .map(|j| weights[j] * Complex64::new(sx[j].values[i], sy[j].values[i]))
                .sum()
        })
        .collect();
    Ok(TimeSeries {
        t0: grid.t0,
        dt: grid.dt,
        values,
    })
}

/// Single-excitation interference signal M1(t) = sum_j c_j <sz_j>(t) with
/// c_j = sign(A_j^k A_j^{k2}), zero where either amplitude vanishes.
pub fn signal_m1(
    sz: &[TimeSeries<f64>],
    m: &ModeSet,
    k: usize,
    k2: usize,
) -> Result<TimeSeries<f64>> {
    if k == k2 {
        return Err(Error::invalid("interference signal needs two distinct modes"));
    }
    let n = m.n_spins();
    if sz.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "{} site series for {} spins",
            sz.len(),
            n
        )));
    }
    let grid = &sz[0];
    for s in sz {
        if !grid.same_grid(s) {
            return Err(Error::DimensionMismatch(
                "per-site series must share one time grid".into(),
            ));
        }
    }
    let a = m.amplitude(k);
    let b = m.amplitude(k2);
    let tol = amplitude_tol(m);
    let c: Vec<f64> = (0..n)
        .map(|j| sign_or_zero(a[j], tol) * sign_or_zero(b[j], tol))
        .collect();
    let values = (0..grid.len())
        .map(|i| (0..n).map(|j| c[j] * sz[j].values[i]).sum())
        .collect();
    Ok(TimeSeries {
        t0: grid.t0,
        dt: grid.dt,
        values,
    })
}

/// Weight rule for the two-excitation signal.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum M2Variant {
    /// c_ij = sign(A_i^k A_j^k A_i^{k2} A_j^{k2}): picks out the component
    /// at nu_c.
    A,
    /// c_ij = sign(A_i^k A_j^{k2}) + sign(A_i^{k2} A_j^k): picks out nu_a
    /// and nu_b.
    B,
    /// The same-term-twice reading of the b rule,
    /// c_ij = 2 sign(A_i^k A_j^{k2}) with i < j. Kept selectable for
    /// comparison; not symmetric under i <-> j.
    BPrinted,
}

/// Lexicographic (i, j) site pairs with i < j: the order `signal_m2`
/// expects the pairwise series in.
pub fn pair_sites(n_spins: usize) -> Vec<(usize, usize)> {
    let mut pairs = Vec::with_capacity(n_spins * (n_spins - 1) / 2);
    for i in 0..n_spins {
        for j in (i + 1)..n_spins {
            pairs.push((i, j));
        }
    }
    pairs
}

/// Pair weight of one variant for sites (i, j), i < j.
pub fn m2_weight(m: &ModeSet, k: usize, k2: usize, variant: M2Variant, i: usize, j: usize) -> f64 {
    let a = m.amplitude(k);
    let b = m.amplitude(k2);
    let tol = amplitude_tol(m);
    let s = |x: f64| sign_or_zero(x, tol);
    match variant {
        M2Variant::A => s(a[i]) * s(a[j]) * s(b[i]) * s(b[j]),
        M2Variant::B => s(a[i]) * s(b[j]) + s(b[i]) * s(a[j]),
        M2Variant::BPrinted => 2.0 * s(a[i]) * s(b[j]),
    }
}

/// Two-excitation interference signal M2(t) = sum_{i<j} c_ij P_ij(t) over
/// pairwise both-up probabilities, in `pair_sites` order.
pub fn signal_m2(
    p: &[TimeSeries<f64>],
    m: &ModeSet,
    k: usize,
    k2: usize,
    variant: M2Variant,
) -> Result<TimeSeries<f64>> {
    if k == k2 {
        return Err(Error::invalid("interference signal needs two distinct modes"));
    }
    let n = m.n_spins();
    let pairs = pair_sites(n);
    if p.len() != pairs.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} pair series for {} site pairs",
            p.len(),
            pairs.len()
        )));
    }
    let grid = &p[0];
    for s in p {
        if !grid.same_grid(s) {
            return Err(Error::DimensionMismatch(
                "pairwise series must share one time grid".into(),
            ));
        }
    }
    let c: Vec<f64> = pairs
        .iter()
        .map(|&(i, j)| m2_weight(m, k, k2, variant, i, j))
        .collect();
    let values = (0..grid.len())
        .map(|ti| {
            pairs
                .iter()
                .enumerate()
                .map(|(pi, _)| c[pi] * p[pi].values[ti])
                .sum()
        })
        .collect();
    Ok(TimeSeries {
        t0: grid.t0,
        dt: grid.dt,
        values,
    })
}

/// Hermitian extension to negative times: s(-t) = conj(s(t)).
/// Input must start at t = 0; output has 2n - 1 samples starting at
/// -(n-1) dt with the t = 0 sample kept once.
pub fn mirror_extend<T: Sample>(s: &TimeSeries<T>) -> Result<TimeSeries<T>> {
    if s.t0.abs() > 1e-9 * s.dt {
        return Err(Error::invalid(format!(
            "mirroring needs a series starting at t = 0, got t0 = {}",
            s.t0
        )));
    }
    let n = s.len();
    let mut values = Vec::with_capacity(2 * n - 1);
    for idx in (1..n).rev() {
        values.push(s.values[idx].conj_sample());
    }
    values.extend_from_slice(&s.values);
    Ok(TimeSeries {
        t0: -(s.dt * (n - 1) as f64),
        dt: s.dt,
        values,
    })
}

/// Taper applied over the input samples before padding.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WindowKind {
    None,
    Hann,
}

/// Modulus spectrum on fftshifted ascending frequencies (Hz).
#[derive(Debug, Clone)]
pub struct Spectrum {
    freqs: Vec<f64>,
    amplitudes: Vec<f64>,
    resolution: f64,
}

impl Spectrum {
    pub fn freqs(&self) -> &[f64] {
        &self.freqs
    }

    pub fn amplitudes(&self) -> &[f64] {
        &self.amplitudes
    }

    /// Physical line resolution 1/(n dt) of the unpadded input.
    pub fn resolution(&self) -> f64 {
        self.resolution
    }

    /// Grid spacing of the (possibly padded) frequency axis.
    pub fn bin_width(&self) -> f64 {
        self.freqs[1] - self.freqs[0]
    }

    pub fn max_amplitude(&self) -> f64 {
        self.amplitudes.iter().cloned().fold(0.0, f64::max)
    }

    /// Restriction to strictly positive frequencies (for real signals whose
    /// spectrum is even).
    pub fn positive_half(&self) -> Spectrum {
        let start = self.freqs.partition_point(|&f| f <= 0.0);
        Spectrum {
            freqs: self.freqs[start..].to_vec(),
            amplitudes: self.amplitudes[start..].to_vec(),
            resolution: self.resolution,
        }
    }
}

/// Discrete Fourier transform modulus of a series, zero padded by
/// `zero_pad` (1 = none), amplitudes scaled by dt so Parseval holds
/// against sum |S|^2 df. Requires at least 8 samples.
pub fn fourier_spectrum<T: Sample>(
    s: &TimeSeries<T>,
    zero_pad: usize,
    window: WindowKind,
) -> Result<Spectrum> {
    let n = s.len();
    if n < 8 {
        return Err(Error::invalid(format!(
            "need at least 8 samples for a spectrum, got {n}"
        )));
    }
    if zero_pad == 0 || zero_pad > 1024 {
        return Err(Error::invalid(format!(
            "zero_pad factor {zero_pad} outside 1..=1024"
        )));
    }
    let m = n * zero_pad;
    let mut buf: Vec<Complex64> = Vec::with_capacity(m);
    for (idx, v) in s.values.iter().enumerate() {
        let w = match window {
            WindowKind::None => 1.0,
            WindowKind::Hann => {
                let x = idx as f64 / (n - 1) as f64;
                0.5 - 0.5 * (2.0 * std::f64::consts::PI * x).cos()
            }
        };
        buf.push(v.to_complex() * w);
    }
    buf.resize(m, Complex64::new(0.0, 0.0));
    FftPlanner::new().plan_fft_forward(m).process(&mut buf);
    let df = 1.0 / (m as f64 * s.dt);
    let half = m / 2;
    let shift = m - half; // ceil(m/2): source index of the most negative bin
    let mut freqs = Vec::with_capacity(m);
    let mut amplitudes = Vec::with_capacity(m);
    for out in 0..m {
        let src = (out + shift) % m;
        freqs.push((out as f64 - half as f64) * df);
        amplitudes.push(buf[src].norm() * s.dt);
    }
    Ok(Spectrum {
        freqs,
        amplitudes,
        resolution: 1.0 / (n as f64 * s.dt),
    })
}

/// One extracted spectral line.
#[derive(Debug, Clone, Copy)]
pub struct Peak {
    pub frequency: f64,
    pub amplitude: f64,
    /// Whether three-point interpolation refined the bin position.
    pub interpolated: bool,
}

/// Strict local maxima above `threshold` (fraction of the global maximum),
/// refined by parabolic interpolation on the log amplitude, thinned to a
/// pairwise separation of at least `min_sep` Hz (strongest win), and
/// returned amplitude-descending.
pub fn find_peaks(sp: &Spectrum, threshold: f64, min_sep: f64) -> Result<Vec<Peak>> {
    if !(0.0..=1.0).contains(&threshold) {
        return Err(Error::invalid(format!(
            "threshold {threshold} outside 0..=1"
        )));
    }
    if !(min_sep >= 0.0) || !min_sep.is_finite() {
        return Err(Error::invalid("min_sep must be finite and >= 0"));
    }
    let a = sp.amplitudes();
    let floor = threshold * sp.max_amplitude();
    let bin = sp.bin_width();
    let mut candidates = Vec::new();
    for i in 1..a.len().saturating_sub(1) {
        if !(a[i] > a[i - 1] && a[i] > a[i + 1] && a[i] >= floor && a[i] > 0.0) {
            continue;
        }
        let mut freq = sp.freqs()[i];
        let mut amp = a[i];
        let mut interpolated = false;
        if a[i - 1] > 0.0 && a[i + 1] > 0.0 {
            let lm = a[i - 1].ln();
            let l0 = a[i].ln();
            let lp = a[i + 1].ln();
            let denom = lm - 2.0 * l0 + lp;
            if denom < 0.0 {
                let delta = 0.5 * (lm - lp) / denom;
                if delta.is_finite() && delta.abs() <= 1.0 {
                    freq += delta * bin;
                    amp = (l0 - 0.25 * (lm - lp) * delta).exp();
                    interpolated = true;
                }
            }
        }
        candidates.push(Peak {
            frequency: freq,
            amplitude: amp,
            interpolated,
        });
    }
    candidates.sort_by(|p, q| q.amplitude.total_cmp(&p.amplitude));
    let mut accepted: Vec<Peak> = Vec::new();
    for cand in candidates {
        if accepted
            .iter()
            .all(|p| (p.frequency - cand.frequency).abs() >= min_sep)
        {
            accepted.push(cand);
        }
    }
    Ok(accepted)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{build_product_state, prep_angles_pair};
    use crate::quasiparticles::{diagonalize_single_excitation, ModeSet};
    use crate::lattice::power_law_couplings;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn tone(f0: f64, n: usize, dt: f64) -> TimeSeries<f64> {
        let values = (0..n).map(|k| (2.0 * PI * f0 * k as f64 * dt).cos()).collect();
        TimeSeries::new(0.0, dt, values).unwrap()
    }

    fn complex_tone(f0: f64, n: usize, dt: f64) -> TimeSeries<Complex64> {
        let values = (0..n)
            .map(|k| Complex64::from_polar(1.0, -2.0 * PI * f0 * k as f64 * dt))
            .collect();
        TimeSeries::new(0.0, dt, values).unwrap()
    }

    fn sine_modes(n: usize) -> ModeSet {
        let c = power_law_couplings(n, 1.0, f64::INFINITY).unwrap();
        diagonalize_single_excitation(&c, 0.0)
    }

    #[test]
    fn grid_matches_linspace() {
        let (dt, grid) = time_grid(1.5, 4).unwrap();
        assert_relative_eq!(dt, 0.5, epsilon = 1e-15);
        assert_eq!(grid.len(), 4);
        assert_relative_eq!(grid[3], 1.5, epsilon = 1e-15);
        assert!(time_grid(0.0, 4).is_err());
        assert!(time_grid(1.0, 1).is_err());
    }

    #[test]
    fn bin_centered_cosine_is_exact() {
        let n = 64;
        let dt = 0.01;
        let df = 1.0 / (n as f64 * dt);
        let f0 = 10.0 * df;
        let sp = fourier_spectrum(&tone(f0, n, dt), 1, WindowKind::None).unwrap();
        // energy sits in exactly the +-f0 bins
        let at = |f: f64| {
            let idx = sp
                .freqs()
                .iter()
                .position(|&x| (x - f).abs() < 1e-9)
                .unwrap();
            sp.amplitudes()[idx]
        };
        let expect = 0.5 * n as f64 * dt;
        assert_relative_eq!(at(f0), expect, epsilon = 1e-10);
        assert_relative_eq!(at(-f0), expect, epsilon = 1e-10);
        for (i, &f) in sp.freqs().iter().enumerate() {
            if (f.abs() - f0).abs() > 1e-9 {
                assert!(sp.amplitudes()[i] < 1e-10, "leak at {f}");
            }
        }
        assert_relative_eq!(sp.resolution(), df, epsilon = 1e-12);
        assert_relative_eq!(sp.bin_width(), df, epsilon = 1e-12);
    }

    #[test]
    fn parseval_holds_with_padding() {
        let n = 50;
        let dt = 0.037;
        let values: Vec<Complex64> = (0..n)
            .map(|k| {
                let t = k as f64 * dt;
                Complex64::new((1.7 * t).sin() + 0.3, (0.9 * t).cos() * 0.4)
            })
            .collect();
        let s = TimeSeries::new(0.0, dt, values).unwrap();
        let time_power: f64 = s.values().iter().map(|v| v.norm_sqr() * dt).sum();
        for pad in [1usize, 4, 8] {
            let sp = fourier_spectrum(&s, pad, WindowKind::None).unwrap();
            let df = sp.bin_width();
            let freq_power: f64 = sp.amplitudes().iter().map(|a| a * a * df).sum();
            assert_relative_eq!(time_power, freq_power, epsilon = 1e-10);
        }
    }

    #[test]
    fn two_tones_resolve() {
        let n = 128;
        let dt = 0.01;
        let df = 1.0 / (n as f64 * dt);
        let f1 = 20.0 * df;
        let f2 = 26.0 * df;
        let values: Vec<f64> = (0..n)
            .map(|k| {
                let t = k as f64 * dt;
                (2.0 * PI * f1 * t).cos() + 0.8 * (2.0 * PI * f2 * t).cos()
            })
            .collect();
        let s = TimeSeries::new(0.0, dt, values).unwrap();
        let sp = fourier_spectrum(&s, 8, WindowKind::None).unwrap().positive_half();
        let peaks = find_peaks(&sp, 0.3, 2.0 * sp.bin_width()).unwrap();
        assert!(peaks.len() >= 2);
        assert_relative_eq!(peaks[0].frequency, f1, epsilon = df / 2.0);
        assert_relative_eq!(peaks[1].frequency, f2, epsilon = df / 2.0);
    }

    #[test]
    fn hann_window_tapers_ends() {
        let n = 32;
        let s = TimeSeries::new(0.0, 0.1, vec![1.0f64; n]).unwrap();
        let flat = fourier_spectrum(&s, 1, WindowKind::None).unwrap();
        let tapered = fourier_spectrum(&s, 1, WindowKind::Hann).unwrap();
        // the taper's mean is (n-1)/(2n): sum of hann weights = (n-1)/2
        let dc = |sp: &Spectrum| {
            let idx = sp.freqs().iter().position(|&f| f.abs() < 1e-12).unwrap();
            sp.amplitudes()[idx]
        };
        let expect = (n as f64 - 1.0) / (2.0 * n as f64);
        assert_relative_eq!(dc(&tapered) / dc(&flat), expect, epsilon = 1e-12);
    }

    #[test]
    fn mirror_shapes_and_reality() {
        let s = tone(3.0, 16, 0.02);
        let m = mirror_extend(&s).unwrap();
        assert_eq!(m.len(), 31);
        assert_relative_eq!(m.t0(), -15.0 * 0.02, epsilon = 1e-15);
        // real input: even extension
        for idx in 0..16 {
            assert_relative_eq!(m.values()[15 - idx], m.values()[15 + idx], epsilon = 1e-15);
        }
        let shifted = TimeSeries::new(0.5, 0.02, s.values().to_vec()).unwrap();
        assert!(mirror_extend(&shifted).is_err());
    }

    #[test]
    fn mirrored_complex_exponential_single_peak() {
        let f0 = 12.5;
        let s = complex_tone(f0, 64, 0.003);
        let m = mirror_extend(&s).unwrap();
        // Hermitian extension continues exp(-i w t) smoothly across t = 0
        for (idx, v) in m.values().iter().enumerate() {
            let t = m.time(idx);
            let expect = Complex64::from_polar(1.0, -2.0 * PI * f0 * t);
            assert!((v - expect).norm() < 1e-12);
        }
        let sp = fourier_spectrum(&m, 8, WindowKind::None).unwrap();
        let peaks = find_peaks(&sp, 0.5, 2.0 * sp.bin_width()).unwrap();
        assert_eq!(peaks.len(), 1);
        assert_relative_eq!(peaks[0].frequency, -f0, epsilon = sp.bin_width());
    }

    #[test]
    fn mirroring_does_not_move_peaks() {
        let f0 = 7.3;
        let s = complex_tone(f0, 96, 0.004);
        let direct = fourier_spectrum(&s, 8, WindowKind::None).unwrap();
        let mirrored = fourier_spectrum(&mirror_extend(&s).unwrap(), 8, WindowKind::None).unwrap();
        let p1 = find_peaks(&direct, 0.5, 2.0 * direct.bin_width()).unwrap();
        let p2 = find_peaks(&mirrored, 0.5, 2.0 * mirrored.bin_width()).unwrap();
        assert!((p1[0].frequency - p2[0].frequency).abs() <= direct.bin_width());
    }

    #[test]
    fn interpolation_beats_tenth_bin() {
        let n = 64;
        let dt = 0.005;
        let df = 1.0 / (n as f64 * dt);
        // deliberately off the bin grid
        let f0 = 17.37 * df;
        let sp = fourier_spectrum(&complex_tone(f0, n, dt), 8, WindowKind::None).unwrap();
        let peaks = find_peaks(&sp, 0.5, 2.0 * sp.bin_width()).unwrap();
        assert!(peaks[0].interpolated);
        assert!(
            (peaks[0].frequency - (-f0)).abs() < sp.bin_width() / 10.0,
            "err {} vs bin {}",
            (peaks[0].frequency + f0).abs(),
            sp.bin_width()
        );
    }

    #[test]
    fn flat_spectrum_has_no_peaks() {
        let sp = Spectrum {
            freqs: (0..16).map(|i| i as f64).collect(),
            amplitudes: vec![1.0; 16],
            resolution: 1.0,
        };
        assert!(find_peaks(&sp, 0.1, 0.0).unwrap().is_empty());
        assert!(find_peaks(&sp, 1.5, 0.0).is_err());
    }

    #[test]
    fn peaks_sorted_and_separated() {
        let n = 256;
        let dt = 0.002;
        let df = 1.0 / (n as f64 * dt);
        let f1 = 30.0 * df;
        let f2 = 60.0 * df;
        let values: Vec<f64> = (0..n)
            .map(|k| {
                let t = k as f64 * dt;
                0.6 * (2.0 * PI * f1 * t).cos() + (2.0 * PI * f2 * t).cos()
            })
            .collect();
        let s = TimeSeries::new(0.0, dt, values).unwrap();
        let sp = fourier_spectrum(&s, 4, WindowKind::None).unwrap().positive_half();
        let peaks = find_peaks(&sp, 0.1, 2.0 * sp.bin_width()).unwrap();
        assert!(peaks.len() >= 2);
        assert!(peaks[0].amplitude >= peaks[1].amplitude);
        assert_relative_eq!(peaks[0].frequency, f2, epsilon = df);
        assert_relative_eq!(peaks[1].frequency, f1, epsilon = df);
        for i in 0..peaks.len() {
            for j in (i + 1)..peaks.len() {
                assert!((peaks[i].frequency - peaks[j].frequency).abs() >= 2.0 * sp.bin_width());
            }
        }
    }

    #[test]
    fn complex_sum_is_weighted_and_linear() {
        let n = 12;
        let dt = 0.1;
        let sx: Vec<TimeSeries<f64>> = (0..3)
            .map(|j| {
                TimeSeries::new(0.0, dt, (0..n).map(|i| (i + j) as f64).collect()).unwrap()
            })
            .collect();
        let sy: Vec<TimeSeries<f64>> = (0..3)
            .map(|j| {
                TimeSeries::new(0.0, dt, (0..n).map(|i| (i * (j + 1)) as f64).collect()).unwrap()
            })
            .collect();
        let w = DVector::from_vec(vec![0.5, -1.0, 2.0]);
        let m = signal_complex_xy(&sx, &sy, &w).unwrap();
        for i in 0..n {
            let mut expect = Complex64::new(0.0, 0.0);
            for j in 0..3 {
                expect += w[j] * Complex64::new(sx[j].values()[i], sy[j].values()[i]);
            }
            assert!((m.values()[i] - expect).norm() < 1e-12);
        }
        let w2 = DVector::from_vec(vec![1.0, -2.0, 4.0]);
        let m2 = signal_complex_xy(&sx, &sy, &w2).unwrap();
        for i in 0..n {
            assert!((m2.values()[i] - 2.0 * m.values()[i]).norm() < 1e-12);
        }
    }

    #[test]
    fn m2_weights_band_edge_parity() {
        let m = sine_modes(7);
        for (i, j) in pair_sites(7) {
            let w = m2_weight(&m, 1, 7, M2Variant::A, i, j);
            let parity = if (i + j) % 2 == 0 { 1.0 } else { -1.0 };
            assert_eq!(w, parity, "pair ({i},{j})");
            // symmetric variants do not care about pair order
            let wb = m2_weight(&m, 1, 7, M2Variant::B, i, j);
            let wb_swap = m2_weight(&m, 1, 7, M2Variant::B, j, i);
            assert_eq!(wb, wb_swap);
        }
    }

    #[test]
    fn m1_weights_drop_vanishing_amplitudes() {
        // mode 4 of the nearest-neighbor 7-chain has a node at the center site
        let m = sine_modes(7);
        let sz: Vec<TimeSeries<f64>> = (0..7)
            .map(|_| TimeSeries::new(0.0, 0.1, vec![1.0; 8]).unwrap())
            .collect();
        let sig = signal_m1(&sz, &m, 1, 4).unwrap();
        let a1 = m.amplitude(1);
        let a4 = m.amplitude(4);
        let expect: f64 = (0..7)
            .map(|j| {
                let s1 = if a1[j].abs() > 1e-9 { a1[j].signum() } else { 0.0 };
                let s4 = if a4[j].abs() > 1e-9 { a4[j].signum() } else { 0.0 };
                s1 * s4
            })
            .sum();
        assert_relative_eq!(sig.values()[0], expect, epsilon = 1e-12);
        // center site contributes no weight
        assert!(a4[3].abs() < 1e-12);
    }

    #[test]
    fn m2_variant_component_selection() {
        // Three-frequency check: project the prepared pair state onto the
        // spin-wave products |11>, |12>, |22>; the variant-a weighted sums
        // kill the 11-12 and 12-22 cross terms exactly on the symmetric
        // sine modes, and variant b kills 11-22.
        let modes = sine_modes(7);
        let a1 = modes.amplitude(1);
        let a7 = modes.amplitude(7);
        let pairs = pair_sites(7);
        let pvec = |x: &DVector<f64>, y: &DVector<f64>| {
            let mut v: Vec<f64> = pairs.iter().map(|&(i, j)| x[i] * y[j] + x[j] * y[i]).collect();
            let norm = v.iter().map(|z| z * z).sum::<f64>().sqrt();
            v.iter_mut().for_each(|z| *z /= norm);
            v
        };
        let v11 = pvec(&a1, &a1);
        let v12 = pvec(&a1, &a7);
        let v22 = pvec(&a7, &a7);
        let theta = prep_angles_pair(1.4, &a1, &a7).unwrap();
        let prep = build_product_state(&theta).unwrap();
        let psi2: Vec<f64> = pairs
            .iter()
            .map(|&(i, j)| prep.state.amplitude((1 << i) | (1 << j)).re)
            .collect();
        let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
        let c11 = dot(&v11, &psi2);
        let c12 = dot(&v12, &psi2);
        let c22 = dot(&v22, &psi2);
        for variant in [M2Variant::A, M2Variant::B] {
            let w: Vec<f64> = pairs
                .iter()
                .map(|&(i, j)| m2_weight(&modes, 1, 7, variant, i, j))
                .collect();
            let cross = |va: &[f64], vb: &[f64]| {
                pairs
                    .iter()
                    .enumerate()
                    .map(|(p, _)| w[p] * va[p] * vb[p])
                    .sum::<f64>()
            };
            let w_nuc = (c11 * c22 * cross(&v11, &v22)).abs();
            let w_nua = (c11 * c12 * cross(&v11, &v12)).abs();
            let w_nub = (c12 * c22 * cross(&v12, &v22)).abs();
            match variant {
                M2Variant::A => {
                    assert!(w_nuc > 0.05, "nu_c weight {w_nuc}");
                    assert!(w_nua < 1e-12 && w_nub < 1e-12);
                }
                M2Variant::B => {
                    assert!(w_nua > 0.1 && w_nub > 0.1);
                    assert!(w_nuc < 1e-12);
                }
                M2Variant::BPrinted => unreachable!(),
            }
        }
    }

    #[test]
    fn detrend_removes_mean() {
        let s = TimeSeries::new(0.0, 0.1, vec![2.0, 3.0, 4.0, 3.0]).unwrap();
        let d = subtract_mean(&s);
        assert_relative_eq!(d.values().iter().sum::<f64>(), 0.0, epsilon = 1e-14);
        assert_relative_eq!(d.values()[0], -1.0, epsilon = 1e-14);
    }

    #[test]
    fn spectrum_positive_half_drops_dc() {
        let s = tone(5.0, 32, 0.01);
        let sp = fourier_spectrum(&s, 1, WindowKind::None).unwrap();
        let pos = sp.positive_half();
        assert!(pos.freqs().iter().all(|&f| f > 0.0));
        assert!(pos.freqs().len() < sp.freqs().len());
        assert_relative_eq!(pos.resolution(), sp.resolution(), epsilon = 1e-15);
    }

    #[test]
    fn too_short_series_rejected() {
        let s = TimeSeries::new(0.0, 0.1, vec![1.0f64; 7]).unwrap();
        assert!(fourier_spectrum(&s, 1, WindowKind::None).is_err());
        assert!(TimeSeries::new(0.0, 0.0, vec![1.0f64]).is_err());
        assert!(TimeSeries::<f64>::new(0.0, 0.1, vec![]).is_err());
    }
}
