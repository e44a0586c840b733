//! Coupling matrices, excitation-number bases, and the two Hamiltonian
//! forms used everywhere else: per-sector XY blocks and the full
//! transverse-field Ising matrix.
//!
//! Conventions fixed here and relied on by every other module:
//! - all energies are angular frequencies (rad/s, hbar = 1);
//! - basis states are bitmasks, bit j = spin j, set bit = up;
//! - the spin-flip term is normalized so the single-excitation block of the
//!   XY Hamiltonian is literally the coupling matrix J;
//! - the field term contributes B*(2n - N) on the diagonal of sector n.

use crate::error::{Error, Result};
use nalgebra::DMatrix;

/// Symmetric, zero-diagonal matrix of spin-spin coupling rates (rad/s).
#[derive(Debug, Clone)]
pub struct CouplingMatrix {
    n_spins: usize,
    j: DMatrix<f64>,
}

impl CouplingMatrix {
    /// Validates symmetry, zero diagonal, and finiteness.
    pub fn new(j: DMatrix<f64>) -> Result<Self> {
        let n = j.nrows();
        if n == 0 || j.ncols() != n {
            return Err(Error::DimensionMismatch(format!(
                "coupling matrix must be square and non-empty, got {}x{}",
                j.nrows(),
                j.ncols()
            )));
        }
        for r in 0..n {
            if j[(r, r)] != 0.0 {
                return Err(Error::invalid(format!(
                    "coupling diagonal must be zero, entry ({r},{r}) = {}",
                    j[(r, r)]
                )));
            }
            for c in 0..n {
                let v = j[(r, c)];
                if !v.is_finite() {
                    return Err(Error::invalid(format!("non-finite coupling at ({r},{c})")));
                }
                if (v - j[(c, r)]).abs() > 0.0 {
                    return Err(Error::invalid(format!(
                        "coupling matrix not symmetric at ({r},{c})"
                    )));
                }
            }
        }
        Ok(CouplingMatrix { n_spins: n, j })
    }

    pub fn n_spins(&self) -> usize {
        self.n_spins
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.j
    }

    pub fn get(&self, i: usize, k: usize) -> f64 {
        self.j[(i, k)]
    }

    /// Largest coupling magnitude; the J that "B/J" ratios refer to.
    pub fn max_abs(&self) -> f64 {
        self.j.iter().fold(0.0f64, |m, &v| m.max(v.abs()))
    }
}

/// J_ik = j0 / |i-k|^alpha. `alpha = f64::INFINITY` gives the
/// nearest-neighbor chain (j0 on the first off-diagonal only).
pub fn power_law_couplings(n_spins: usize, j0: f64, alpha: f64) -> Result<CouplingMatrix> {
    if n_spins == 0 {
        return Err(Error::invalid("n_spins must be at least 1"));
    }
    if !j0.is_finite() {
        return Err(Error::invalid("j0 must be finite"));
    }
    if alpha.is_nan() || alpha < 0.0 {
        return Err(Error::invalid("alpha must be non-negative (or infinity)"));
    }
    let mut j = DMatrix::zeros(n_spins, n_spins);
    for i in 0..n_spins {
        for k in (i + 1)..n_spins {
            let d = (k - i) as f64;
            let v = if alpha.is_infinite() {
                if k - i == 1 {
                    j0
                } else {
                    0.0
                }
            } else {
                j0 / d.powf(alpha)
            };
            j[(i, k)] = v;
            j[(k, i)] = v;
        }
    }
    CouplingMatrix::new(j)
}

/// Ordered enumeration of all n_spins-bit masks with a fixed popcount,
/// with O(popcount) combinadic ranking.
#[derive(Debug, Clone)]
pub struct SubspaceBasis {
    n_spins: usize,
    n_excitations: usize,
    masks: Vec<u64>,
}

/// C(n, k) in exact u64 arithmetic (n <= 63 everywhere in this crate).
pub fn binomial(n: usize, k: usize) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u64 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u64 / (i + 1) as u64;
    }
    acc
}

pub fn enumerate_subspace(n_spins: usize, n_excitations: usize) -> Result<SubspaceBasis> {
    if n_spins == 0 || n_spins > 63 {
        return Err(Error::invalid(format!("n_spins {n_spins} out of range 1..=63")));
    }
    if n_excitations > n_spins {
        return Err(Error::invalid(format!(
            "n_excitations {n_excitations} exceeds n_spins {n_spins}"
        )));
    }
    let count = binomial(n_spins, n_excitations) as usize;
    let mut masks = Vec::with_capacity(count);
    if n_excitations == 0 {
        masks.push(0);
    } else {
        // Gosper's hack walks fixed-popcount masks in ascending order.
        let mut m: u64 = (1u64 << n_excitations) - 1;
        let limit: u64 = 1u64 << n_spins;
        while m < limit {
            masks.push(m);
            let c = m & m.wrapping_neg();
            let r = m + c;
            m = (((r ^ m) >> 2) / c) | r;
        }
    }
    debug_assert_eq!(masks.len(), count);
    Ok(SubspaceBasis {
        n_spins,
        n_excitations,
        masks,
    })
}

impl SubspaceBasis {
    pub fn n_spins(&self) -> usize {
        self.n_spins
    }

    pub fn n_excitations(&self) -> usize {
        self.n_excitations
    }

    pub fn len(&self) -> usize {
        self.masks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.masks.is_empty()
    }

    pub fn masks(&self) -> &[u64] {
        &self.masks
    }

    pub fn mask(&self, index: usize) -> u64 {
        self.masks[index]
    }

    /// Index of `mask` in the ascending enumeration, computed by combinadic
    /// counting rather than search: the i-th set bit (i = 1-based, positions
    /// ascending) at position p contributes C(p, i).
    pub fn rank(&self, mask: u64) -> Result<usize> {
        if mask.count_ones() as usize != self.n_excitations || mask >> self.n_spins != 0 {
            return Err(Error::invalid(format!(
                "mask {mask:#b} is not an {}-excitation state of {} spins",
                self.n_excitations, self.n_spins
            )));
        }
        let mut r: u64 = 0;
        let mut seen = 0usize;
        let mut m = mask;
        while m != 0 {
            let p = m.trailing_zeros() as usize;
            seen += 1;
            r += binomial(p, seen);
            m &= m - 1;
        }
        Ok(r as usize)
    }
}

/// One excitation-number sector of the XY Hamiltonian.
#[derive(Debug, Clone)]
pub struct HamiltonianBlock {
    basis: SubspaceBasis,
    matrix: DMatrix<f64>,
    field_b: f64,
}

impl HamiltonianBlock {
    pub fn basis(&self) -> &SubspaceBasis {
        &self.basis
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn field_b(&self) -> f64 {
        self.field_b
    }

    pub fn n_excitations(&self) -> usize {
        self.basis.n_excitations()
    }
}

/// Builds the sector-n block: hopping element J_ik between masks related by
/// moving one excitation i -> k, diagonal B*(2n - N).
pub fn build_xy_block(
    c: &CouplingMatrix,
    b_field: f64,
    basis: &SubspaceBasis,
) -> Result<HamiltonianBlock> {
    if basis.n_spins() != c.n_spins() {
        return Err(Error::DimensionMismatch(format!(
            "basis is over {} spins but coupling matrix over {}",
            basis.n_spins(),
            c.n_spins()
        )));
    }
    let n = c.n_spins();
    let ne = basis.n_excitations();
    let dim = basis.len();
    let diag = b_field * (2.0 * ne as f64 - n as f64);
    let mut h = DMatrix::zeros(dim, dim);
    for (row, &mask) in basis.masks().iter().enumerate() {
        h[(row, row)] = diag;
        // hop each excitation to each empty site; the reverse hop fills the
        // transposed entry, so every element is written exactly once
        let mut occ = mask;
        while occ != 0 {
            let i = occ.trailing_zeros() as usize;
            occ &= occ - 1;
            for k in 0..n {
                if (mask >> k) & 1 == 0 {
                    let other = mask ^ (1 << i) ^ (1 << k);
                    let col = basis.rank(other)?;
                    h[(col, row)] = c.get(i, k);
                }
            }
        }
    }
    Ok(HamiltonianBlock {
        basis: basis.clone(),
        matrix: h,
        field_b: b_field,
    })
}

/// All sectors n = 0..=N of the XY Hamiltonian.
pub fn build_all_xy_blocks(c: &CouplingMatrix, b_field: f64) -> Result<Vec<HamiltonianBlock>> {
    (0..=c.n_spins())
        .map(|ne| build_xy_block(c, b_field, &enumerate_subspace(c.n_spins(), ne)?))
        .collect()
}

/// Dense 2^N x 2^N transverse-field Ising matrix.
#[derive(Debug, Clone)]
pub struct FullHamiltonian {
    n_spins: usize,
    matrix: DMatrix<f64>,
}

pub const FULL_ISING_DEFAULT_CAP: usize = 16;

impl FullHamiltonian {
    pub fn n_spins(&self) -> usize {
        self.n_spins
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    /// Copy with every element between different-popcount masks zeroed,
    /// i.e. the excitation-conserving part of the Ising matrix. Its
    /// spectrum must equal the union of the XY block spectra.
    pub fn spin_conserving_part(&self) -> FullHamiltonian {
        let mut m = self.matrix.clone();
        let dim = m.nrows();
        for row in 0..dim {
            for col in 0..dim {
                if (row as u64).count_ones() != (col as u64).count_ones() {
                    m[(row, col)] = 0.0;
                }
            }
        }
        FullHamiltonian {
            n_spins: self.n_spins,
            matrix: m,
        }
    }
}

/// H = sum_{i<k} J_ik sigma^x_i sigma^x_k + B sum_j sigma^z_j in the z
/// product basis. sigma^x sigma^x flips both bits, so it hops excitations
/// (same popcount) and also creates/destroys pairs (popcount +- 2).
pub fn build_full_ising(
    c: &CouplingMatrix,
    b_field: f64,
    cap: Option<usize>,
) -> Result<FullHamiltonian> {
    let n = c.n_spins();
    let cap = cap.unwrap_or(FULL_ISING_DEFAULT_CAP);
    if n > cap {
        return Err(Error::invalid(format!(
            "n_spins {n} exceeds the dense-matrix cap {cap}"
        )));
    }
    let dim = 1usize << n;
    let mut h = DMatrix::zeros(dim, dim);
    for mask in 0..dim as u64 {
        let nup = mask.count_ones() as f64;
        h[(mask as usize, mask as usize)] = b_field * (2.0 * nup - n as f64);
        for i in 0..n {
            for k in (i + 1)..n {
                let j = c.get(i, k);
                if j == 0.0 {
                    continue;
                }
                let other = mask ^ (1 << i) ^ (1 << k);
                h[(other as usize, mask as usize)] += j;
            }
        }
    }
    Ok(FullHamiltonian {
        n_spins: n,
        matrix: h,
    })
}
