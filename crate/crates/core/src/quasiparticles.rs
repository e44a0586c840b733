//! Single-excitation eigenmodes (the quasiparticle dispersion), the
//! standing-wave ansatz, and the spin-wave perturbation theory for
//! two-excitation interaction shifts and predicted beat frequencies.

use crate::error::{Error, Result};
use crate::lattice::{build_xy_block, enumerate_subspace, CouplingMatrix, SubspaceBasis};
use crate::linalg::{eigh_ascending, fix_column_signs};
use nalgebra::{DMatrix, DVector};
use std::f64::consts::PI;

/// Eigenpairs of the coupling matrix, ordered from band top down: mode k=1
/// has the largest energy. Energies eps_k are the zero-trace coupling-block
/// values; the spectroscopic gap above the all-down state is eps_k + 2B.
#[derive(Debug, Clone)]
pub struct ModeSet {
    n_spins: usize,
    energies: DVector<f64>,
    amplitudes: DMatrix<f64>,
    b_field: f64,
}

impl ModeSet {
    pub fn n_spins(&self) -> usize {
        self.n_spins
    }

    pub fn b_field(&self) -> f64 {
        self.b_field
    }

    /// eps_k in rad/s; k is 1-based, descending in energy.
    pub fn energy(&self, k: usize) -> f64 {
        self.energies[k - 1]
    }

    pub fn energies(&self) -> &DVector<f64> {
        &self.energies
    }

    /// Gap E_k = eps_k + 2B of mode k above the all-down state.
    pub fn gap(&self, k: usize) -> f64 {
        self.energies[k - 1] + 2.0 * self.b_field
    }

    /// Site amplitudes A_j^k of mode k (1-based k).
    pub fn amplitude(&self, k: usize) -> DVector<f64> {
        self.amplitudes.column(k - 1).into_owned()
    }

    pub fn amplitudes(&self) -> &DMatrix<f64> {
        &self.amplitudes
    }

    fn check_mode(&self, k: usize) -> Result<()> {
        if k == 0 || k > self.n_spins {
            return Err(Error::invalid(format!(
                "mode index {k} outside 1..={}",
                self.n_spins
            )));
        }
        Ok(())
    }
}

fn sign_changes(v: &DVector<f64>, tol: f64) -> usize {
    let mut count = 0;
    let mut last = 0.0f64;
    for &x in v.iter() {
        if x.abs() <= tol {
            continue;
        }
        if last != 0.0 && x.signum() != last.signum() {
            count += 1;
        }
        last = x;
    }
    count
}

/// Diagonalizes the n=1 block. Modes are sorted by descending energy; exact
/// ties fall back to ascending internal node count. Each eigenvector is
/// flipped so its first non-negligible component is positive.
pub fn diagonalize_single_excitation(c: &CouplingMatrix, b_field: f64) -> ModeSet {
    let (vals, mut vecs) = eigh_ascending(c.matrix());
    fix_column_signs(&mut vecs, 1e-12 * c.matrix().norm().max(1.0));
    let n = c.n_spins();
    let mut order: Vec<usize> = (0..n).collect();
    let nodes: Vec<usize> = (0..n)
        .map(|i| sign_changes(&vecs.column(i).into_owned(), 1e-9))
        .collect();
    order.sort_by(|&a, &b| {
        vals[b]
            .total_cmp(&vals[a])
            .then_with(|| nodes[a].cmp(&nodes[b]))
    });
    let energies = DVector::from_iterator(n, order.iter().map(|&i| vals[i]));
    let mut amplitudes = DMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        amplitudes.set_column(dst, &vecs.column(src));
    }
    ModeSet {
        n_spins: n,
        energies,
        amplitudes,
        b_field,
    }
}

/// Standing-wave ansatz A_j^k = sqrt(2/(N+1)) sin(k j pi / (N+1)),
/// j = 1..N. Exact for the nearest-neighbor chain.
pub fn sine_amplitudes(n_spins: usize, k: usize) -> Result<DVector<f64>> {
    if k == 0 || k > n_spins {
        return Err(Error::invalid(format!(
            "mode index {k} outside 1..={n_spins}"
        )));
    }
    let np1 = (n_spins + 1) as f64;
    let norm = (2.0 / np1).sqrt();
    Ok(DVector::from_iterator(
        n_spins,
        (1..=n_spins).map(|j| norm * (k as f64 * j as f64 * PI / np1).sin()),
    ))
}

/// Quartic geometric overlap M = sum_j a1_j a2_j a3_j a4_j. Totally
/// symmetric in its arguments; with an odd number of repeated modes the
/// value depends on the global sign convention.
pub fn mode_overlap(
    a1: &DVector<f64>,
    a2: &DVector<f64>,
    a3: &DVector<f64>,
    a4: &DVector<f64>,
) -> Result<f64> {
    let n = a1.len();
    if a2.len() != n || a3.len() != n || a4.len() != n {
        return Err(Error::DimensionMismatch(
            "overlap needs four equal-length amplitude vectors".into(),
        ));
    }
    Ok((0..n).map(|j| a1[j] * a2[j] * a3[j] * a4[j]).sum())
}

/// First-order interaction shift
/// V_{k1,k2} = -2 (eps_{k1} + eps_{k2}) M_{k1 k2}^{k1 k2} / (1 + delta_{k1 k2}).
/// Evaluated with the zero-trace eps rather than the gap energies: the 2B
/// offsets cancel in every beat combination, and using eps keeps V itself
/// field-independent. `perturbative_shift_gap` keeps the gap-based variant
/// for callers that want the raw (field-convention dependent) number.
pub fn perturbative_shift(k1: usize, k2: usize, m: &ModeSet) -> Result<f64> {
    m.check_mode(k1)?;
    m.check_mode(k2)?;
    let a1 = m.amplitude(k1);
    let a2 = m.amplitude(k2);
    let ov = mode_overlap(&a1, &a2, &a1, &a2)?;
    let delta = if k1 == k2 { 1.0 } else { 0.0 };
    Ok(-2.0 * (m.energy(k1) + m.energy(k2)) * ov / (1.0 + delta))
}

/// Gap-energy variant of the shift, using E_k = eps_k + 2B. Only meaningful
/// relative to a fixed field convention; beatnote predictions use
/// `perturbative_shift` instead.
pub fn perturbative_shift_gap(k1: usize, k2: usize, m: &ModeSet) -> Result<f64> {
    m.check_mode(k1)?;
    m.check_mode(k2)?;
    let a1 = m.amplitude(k1);
    let a2 = m.amplitude(k2);
    let ov = mode_overlap(&a1, &a2, &a1, &a2)?;
    let delta = if k1 == k2 { 1.0 } else { 0.0 };
    Ok(-2.0 * (m.gap(k1) + m.gap(k2)) * ov / (1.0 + delta))
}

/// Predicted two-excitation beat frequencies (Hz):
///   nu_a = |dE + V_{k1,k1} - V_{k1,k2}| / 2pi
///   nu_b = |dE + V_{k1,k2} - V_{k2,k2}| / 2pi
///   nu_c = |2 dE + V_{k1,k1} - V_{k2,k2}| / 2pi
/// with dE = eps_{k1} - eps_{k2}. When the three absolute-value arguments
/// share one sign, nu_c = nu_a + nu_b exactly.
pub fn beat_frequencies(k1: usize, k2: usize, m: &ModeSet) -> Result<(f64, f64, f64)> {
    if k1 == k2 {
        return Err(Error::invalid("beat frequencies need two distinct modes"));
    }
    let de = m.energy(k1) - m.energy(k2);
    let v11 = perturbative_shift(k1, k1, m)?;
    let v12 = perturbative_shift(k1, k2, m)?;
    let v22 = perturbative_shift(k2, k2, m)?;
    let two_pi = 2.0 * PI;
    Ok((
        (de + v11 - v12).abs() / two_pi,
        (de + v12 - v22).abs() / two_pi,
        (2.0 * de + v11 - v22).abs() / two_pi,
    ))
}

/// Non-interacting boson / fermion reference frequencies (Hz) for the
/// band-edge pair: NIB doubles the single-particle gap, NIF is the nearest
/// Pauli-allowed combination |eps_N + eps_{N-1} - eps_1 - eps_2|.
/// Other pairs have no defined reference here.
pub fn nib_nif_predictions(m: &ModeSet, k_hi: usize, k_lo: usize) -> Result<(f64, f64)> {
    let n = m.n_spins();
    if n < 3 {
        return Err(Error::invalid("need at least 3 modes for the NIF line"));
    }
    if (k_hi, k_lo) != (1, n) {
        return Err(Error::Unsupported(format!(
            "boson/fermion references are defined for the band-edge pair (1, {n}), got ({k_hi}, {k_lo})"
        )));
    }
    let two_pi = 2.0 * PI;
    let f_nib = 2.0 * (m.energy(1) - m.energy(n)).abs() / two_pi;
    let f_nif = (m.energy(n) + m.energy(n - 1) - m.energy(1) - m.energy(2)).abs() / two_pi;
    Ok((f_nib, f_nif))
}

/// Eigen-decomposition of the two-excitation block: (basis, eigenvalues
/// ascending, eigenvectors as columns over that basis).
pub fn two_excitation_eigensystem(
    c: &CouplingMatrix,
    b_field: f64,
) -> Result<(SubspaceBasis, DVector<f64>, DMatrix<f64>)> {
    if c.n_spins() < 2 {
        return Err(Error::invalid("need at least two spins for a pair block"));
    }
    let basis = enumerate_subspace(c.n_spins(), 2)?;
    let block = build_xy_block(c, b_field, &basis)?;
    let (vals, vecs) = eigh_ascending(block.matrix());
    Ok((basis, vals, vecs))
}

/// Normalized two-excitation spin-wave product |k1 k2>, i.e. the
/// symmetrized amplitude A_i^{k1} A_j^{k2} + A_j^{k1} A_i^{k2} on each
/// pair basis state {i,j}.
pub fn spin_wave_pair_vector(
    m: &ModeSet,
    k1: usize,
    k2: usize,
    basis: &SubspaceBasis,
) -> Result<DVector<f64>> {
    m.check_mode(k1)?;
    m.check_mode(k2)?;
    if basis.n_excitations() != 2 || basis.n_spins() != m.n_spins() {
        return Err(Error::DimensionMismatch(
            "spin-wave pair vector needs the matching two-excitation basis".into(),
        ));
    }
    let a1 = m.amplitude(k1);
    let a2 = m.amplitude(k2);
    let mut v = DVector::zeros(basis.len());
    for (idx, &mask) in basis.masks().iter().enumerate() {
        let i = mask.trailing_zeros() as usize;
        let j = (mask ^ (1 << i)).trailing_zeros() as usize;
        v[idx] = a1[i] * a2[j] + a1[j] * a2[i];
    }
    let norm = v.norm();
    if norm == 0.0 {
        return Err(Error::numerical("spin-wave pair vector vanishes"));
    }
    Ok(v / norm)
}

/// Exact two-excitation eigenvalue whose eigenvector has the largest
/// overlap with the spin-wave pair |k1 k2>, at zero field (the field only
/// offsets the whole block). This is what the first-order prediction
/// eps_{k1} + eps_{k2} + V_{k1,k2} approximates.
pub fn best_overlap_pair_energy(c: &CouplingMatrix, m: &ModeSet, k1: usize, k2: usize) -> Result<f64> {
    let (basis, vals, vecs) = two_excitation_eigensystem(c, 0.0)?;
    let sw = spin_wave_pair_vector(m, k1, k2, &basis)?;
    let mut best = 0;
    let mut best_ov = -1.0f64;
    for col in 0..vecs.ncols() {
        let ov = vecs.column(col).dot(&sw).abs();
        if ov > best_ov {
            best_ov = ov;
            best = col;
        }
    }
    Ok(vals[best])
}
