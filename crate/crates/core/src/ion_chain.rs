//! Trapped-ion chain mechanics: equilibrium positions in a harmonic axial
//! well with Coulomb repulsion, transverse normal modes, and the
//! sideband-mediated spin-spin couplings those modes carry.
//!
//! Lengths are dimensionless (axial trap units), frequencies rad/s.

use crate::error::{Error, Result};
use crate::lattice::CouplingMatrix;
use crate::linalg::{eigh_ascending, fix_column_signs};
use nalgebra::{DMatrix, DVector};

/// Static drive parameters for one chain.
#[derive(Debug, Clone)]
pub struct TrapConfig {
    pub n_ions: usize,
    /// Axial (weak) trap frequency omega_z, rad/s.
    pub axial_freq: f64,
    /// Transverse trap frequency omega_t, rad/s.
    pub transverse_freq: f64,
    /// Per-ion Rabi frequencies, rad/s.
    pub rabi: Vec<f64>,
    /// Lamb-Dicke factor of the center-of-mass mode.
    pub lamb_dicke_scale: f64,
    /// Beat-note detuning above the highest transverse sideband, rad/s.
    pub detuning: f64,
    /// Rescale eta by sqrt(omega_max / omega_m) per mode (mass-normalized
    /// convention). Off means a flat eta0 * b_jm.
    pub scale_lamb_dicke: bool,
}

impl TrapConfig {
    /// Uniform-illumination constructor with the mode scaling on.
    pub fn uniform(
        n_ions: usize,
        axial_freq: f64,
        transverse_freq: f64,
        rabi: f64,
        lamb_dicke_scale: f64,
        detuning: f64,
    ) -> Self {
        TrapConfig {
            n_ions,
            axial_freq,
            transverse_freq,
            rabi: vec![rabi; n_ions],
            lamb_dicke_scale,
            detuning,
            scale_lamb_dicke: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_ions == 0 {
            return Err(Error::invalid("need at least one ion"));
        }
        if !(self.axial_freq > 0.0) || !(self.transverse_freq > 0.0) {
            return Err(Error::invalid("trap frequencies must be positive"));
        }
        if self.rabi.len() != self.n_ions {
            return Err(Error::DimensionMismatch(format!(
                "rabi vector has {} entries for {} ions",
                self.rabi.len(),
                self.n_ions
            )));
        }
        if self.rabi.iter().any(|&o| !(o >= 0.0) || !o.is_finite()) {
            return Err(Error::invalid("rabi frequencies must be finite and >= 0"));
        }
        if !(self.lamb_dicke_scale > 0.0) {
            return Err(Error::invalid("lamb_dicke_scale must be positive"));
        }
        if !(self.detuning > 0.0) {
            return Err(Error::invalid(
                "detuning must sit strictly above the top sideband",
            ));
        }
        Ok(())
    }
}

/// Transverse normal modes of a chain, frequencies descending so the
/// center-of-mass mode (uniform vector, omega = omega_t) comes first.
#[derive(Debug, Clone)]
pub struct ModeStructure {
    positions: DVector<f64>,
    frequencies: DVector<f64>,
    vectors: DMatrix<f64>,
    lamb_dicke: DMatrix<f64>,
}

impl ModeStructure {
    pub fn n_ions(&self) -> usize {
        self.positions.len()
    }

    /// Equilibrium positions, ascending, axial trap units.
    pub fn positions(&self) -> &DVector<f64> {
        &self.positions
    }

    /// Mode frequencies, rad/s, descending.
    pub fn frequencies(&self) -> &DVector<f64> {
        &self.frequencies
    }

    /// Orthonormal mode vectors, one column per frequency.
    pub fn vectors(&self) -> &DMatrix<f64> {
        &self.vectors
    }

    /// Per-ion, per-mode Lamb-Dicke factors eta_{j,m}.
    pub fn lamb_dicke(&self) -> &DMatrix<f64> {
        &self.lamb_dicke
    }
}

const NEWTON_DAMPING: f64 = 0.5;
const NEWTON_CAP: usize = 200;
const GRAD_TOL: f64 = 1e-12;

fn gradient(u: &DVector<f64>) -> DVector<f64> {
    let n = u.len();
    let mut g = u.clone();
    for i in 0..n {
        for k in 0..n {
            if k == i {
                continue;
            }
            let d = u[i] - u[k];
            g[i] -= d / (d.abs().powi(3));
        }
    }
    g
}

fn hessian(u: &DVector<f64>) -> DMatrix<f64> {
    let n = u.len();
    let mut h = DMatrix::zeros(n, n);
    for i in 0..n {
        let mut diag = 1.0;
        for k in 0..n {
            if k == i {
                continue;
            }
            let w = 2.0 / (u[i] - u[k]).abs().powi(3);
            h[(i, k)] = -w;
            diag += w;
        }
        h[(i, i)] = diag;
    }
    h
}

/// Equilibrium positions of `n_ions` ions: the stationary point of
/// V(u) = sum u_i^2 / 2 + sum_{i<k} 1/|u_i - u_k|, ascending.
/// Damped Newton from a uniform grid of spacing 2.
pub fn equilibrium_positions(n_ions: usize) -> Result<DVector<f64>> {
    if n_ions == 0 {
        return Err(Error::invalid("need at least one ion"));
    }
    if n_ions == 1 {
        return Ok(DVector::zeros(1));
    }
    let mut u = DVector::from_iterator(
        n_ions,
        (0..n_ions).map(|i| 2.0 * (i as f64 - (n_ions as f64 - 1.0) / 2.0)),
    );
    for _ in 0..NEWTON_CAP {
        let g = gradient(&u);
        if g.norm() <= GRAD_TOL {
            let mut out: Vec<f64> = u.iter().copied().collect();
            out.sort_by(f64::total_cmp);
            return Ok(DVector::from_vec(out));
        }
        let step = hessian(&u)
            .lu()
            .solve(&g)
            .ok_or_else(|| Error::numerical("singular Hessian in the position solve"))?;
        u -= NEWTON_DAMPING * step;
    }
    Err(Error::numerical(format!(
        "position solve did not reach gradient norm {GRAD_TOL:.0e} in {NEWTON_CAP} iterations"
    )))
}

/// Transverse mode matrix eigensystem. The dimensionless matrix
/// A_ik = delta_ik [(wt/wz)^2 - sum_p 1/|u_i-u_p|^3] + (1-delta_ik)/|u_i-u_k|^3
/// has eigenvalues lambda_m with omega_m = wz sqrt(lambda_m); any
/// lambda_m <= 0 means the chain buckles and is reported as a numerical error.
pub fn transverse_modes(t: &TrapConfig) -> Result<ModeStructure> {
    t.validate()?;
    let u = equilibrium_positions(t.n_ions)?;
    let n = t.n_ions;
    let ratio2 = (t.transverse_freq / t.axial_freq).powi(2);
    let mut a = DMatrix::zeros(n, n);
    for i in 0..n {
        let mut soften = 0.0;
        for k in 0..n {
            if k == i {
                continue;
            }
            let w = 1.0 / (u[i] - u[k]).abs().powi(3);
            a[(i, k)] = w;
            soften += w;
        }
        a[(i, i)] = ratio2 - soften;
    }
    let (lam, mut vecs) = eigh_ascending(&a);
    if lam[0] <= 0.0 {
        return Err(Error::numerical(format!(
            "transverse mode softened to lambda = {:.6e}: chain is unstable at this aspect ratio",
            lam[0]
        )));
    }
    fix_column_signs(&mut vecs, 1e-12);
    // reorder descending so the center-of-mass mode leads
    let mut frequencies = DVector::zeros(n);
    let mut vectors = DMatrix::zeros(n, n);
    for m in 0..n {
        let src = n - 1 - m;
        frequencies[m] = t.axial_freq * lam[src].sqrt();
        vectors.set_column(m, &vecs.column(src));
    }
    let w_max = frequencies[0];
    let mut lamb_dicke = DMatrix::zeros(n, n);
    for m in 0..n {
        let scale = if t.scale_lamb_dicke {
            (w_max / frequencies[m]).sqrt()
        } else {
            1.0
        };
        for j in 0..n {
            lamb_dicke[(j, m)] = t.lamb_dicke_scale * vectors[(j, m)] * scale;
        }
    }
    Ok(ModeStructure {
        positions: u,
        frequencies,
        vectors,
        lamb_dicke,
    })
}

/// Spin-spin couplings mediated by the transverse sidebands:
/// J_ik = (O_i O_k / 4) sum_m eta_im eta_km / (delta + w_max - w_m).
pub fn coupling_from_sidebands(t: &TrapConfig, m: &ModeStructure) -> Result<CouplingMatrix> {
    t.validate()?;
    let n = m.n_ions();
    if t.n_ions != n {
        return Err(Error::DimensionMismatch(format!(
            "trap has {} ions but the mode structure has {n}",
            t.n_ions
        )));
    }
    let w_max = m.frequencies()[0];
    let mut denom = Vec::with_capacity(n);
    for mm in 0..n {
        let d = t.detuning + w_max - m.frequencies()[mm];
        if d.abs() < 1e-9 * w_max.max(1.0) {
            return Err(Error::numerical(format!(
                "drive is resonant with mode {mm}: denominator {d:.3e}"
            )));
        }
        denom.push(d);
    }
    let eta = m.lamb_dicke();
    let mut j = DMatrix::zeros(n, n);
    for i in 0..n {
        for k in (i + 1)..n {
            let mut s = 0.0;
            for mm in 0..n {
                s += eta[(i, mm)] * eta[(k, mm)] / denom[mm];
            }
            let val = t.rabi[i] * t.rabi[k] / 4.0 * s;
            j[(i, k)] = val;
            j[(k, i)] = val;
        }
    }
    CouplingMatrix::new(j)
}

/// Least-squares power-law fit |J_ik| = j0 / |i-k|^alpha over all pairs in
/// log-log form. Returns (j0, alpha).
pub fn fit_power_law(c: &CouplingMatrix) -> Result<(f64, f64)> {
    let n = c.n_spins();
    if n < 3 {
        return Err(Error::invalid(
            "power-law fit needs at least two distinct separations (n >= 3)",
        ));
    }
    let mut sx = 0.0;
    let mut sy = 0.0;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    let mut count = 0.0;
    for i in 0..n {
        for k in (i + 1)..n {
            let val = c.get(i, k).abs();
            if val == 0.0 {
                return Err(Error::invalid(format!(
                    "coupling ({i},{k}) is zero; cannot take its log"
                )));
            }
            let x = ((k - i) as f64).ln();
            let y = val.ln();
            sx += x;
            sy += y;
            sxx += x * x;
            sxy += x * y;
            count += 1.0;
        }
    }
    let det = count * sxx - sx * sx;
    if det.abs() < 1e-300 {
        return Err(Error::numerical("degenerate separations in power-law fit"));
    }
    let slope = (count * sxy - sx * sy) / det;
    let intercept = (sy - slope * sx) / count;
    Ok((intercept.exp(), -slope))
}
