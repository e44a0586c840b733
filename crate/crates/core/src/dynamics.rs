//! State preparation, exact time evolution, rotating-frame readout,
//! post-selected observables, and projective shot sampling.
//!
//! Basis convention: bit j of a mask set means spin j points up
//! (sigma_z = +1); mask 0 is the all-down vacuum.

use crate::error::{Error, Result};
use crate::lattice::{enumerate_subspace, FullHamiltonian, HamiltonianBlock};
use crate::linalg::eigh_ascending;
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;

/// Largest chain the dense 2^N representation will build.
pub const FULL_STATE_SPIN_CAP: usize = 24;

/// Pure state, either over the full 2^N z-basis or split into
/// excitation-number sectors (the XY blocks never mix them).
#[derive(Debug, Clone)]
pub enum StateVector {
    Full {
        n_spins: usize,
        amps: DVector<Complex64>,
    },
    Blocks {
        n_spins: usize,
        blocks: BTreeMap<usize, DVector<Complex64>>,
    },
}

impl StateVector {
    pub fn n_spins(&self) -> usize {
        match self {
            StateVector::Full { n_spins, .. } | StateVector::Blocks { n_spins, .. } => *n_spins,
        }
    }

    pub fn norm(&self) -> f64 {
        match self {
            StateVector::Full { amps, .. } => amps.norm(),
            StateVector::Blocks { blocks, .. } => blocks
                .values()
                .map(|b| b.norm_squared())
                .sum::<f64>()
                .sqrt(),
        }
    }

    /// Amplitude of one z-basis mask.
    pub fn amplitude(&self, mask: u64) -> Complex64 {
        match self {
            StateVector::Full { amps, .. } => amps[mask as usize],
            StateVector::Blocks { n_spins, blocks } => {
                let n = mask.count_ones() as usize;
                match blocks.get(&n) {
                    Some(b) => {
                        // basis masks are ascending, so the combinadic rank is the index
                        let basis = enumerate_subspace(*n_spins, n).expect("valid sector");
                        b[basis.rank(mask).expect("mask in sector")]
                    }
                    None => Complex64::new(0.0, 0.0),
                }
            }
        }
    }

    /// Probability weight in each excitation sector, indexed 0..=N.
    pub fn sector_probs(&self) -> Vec<f64> {
        let n = self.n_spins();
        let mut p = vec![0.0; n + 1];
        match self {
            StateVector::Full { amps, .. } => {
                for (mask, a) in amps.iter().enumerate() {
                    p[mask.count_ones() as usize] += a.norm_sqr();
                }
            }
            StateVector::Blocks { blocks, .. } => {
                for (&sector, b) in blocks {
                    p[sector] = b.norm_squared();
                }
            }
        }
        p
    }

    /// Splits a full vector into its excitation sectors (lossless).
    pub fn to_blocks(&self) -> StateVector {
        match self {
            StateVector::Blocks { .. } => self.clone(),
            StateVector::Full { n_spins, amps } => {
                let n = *n_spins;
                let mut blocks = BTreeMap::new();
                for sector in 0..=n {
                    let basis = enumerate_subspace(n, sector).expect("valid sector");
                    let v = DVector::from_iterator(
                        basis.len(),
                        basis.masks().iter().map(|&m| amps[m as usize]),
                    );
                    blocks.insert(sector, v);
                }
                StateVector::Blocks { n_spins: n, blocks }
            }
        }
    }

    /// Reassembles the dense 2^N vector (lossless).
    pub fn to_full(&self) -> Result<StateVector> {
        match self {
            StateVector::Full { .. } => Ok(self.clone()),
            StateVector::Blocks { n_spins, blocks } => {
                let n = *n_spins;
                if n > FULL_STATE_SPIN_CAP {
                    return Err(Error::invalid(format!(
                        "refusing a 2^{n} dense state (cap {FULL_STATE_SPIN_CAP} spins)"
                    )));
                }
                let mut amps = DVector::from_element(1usize << n, Complex64::new(0.0, 0.0));
                for (&sector, b) in blocks {
                    let basis = enumerate_subspace(n, sector)?;
                    for (idx, &mask) in basis.masks().iter().enumerate() {
                        amps[mask as usize] = b[idx];
                    }
                }
                Ok(StateVector::Full { n_spins: n, amps })
            }
        }
    }

    /// Keeps only the listed sectors (block representation out).
    pub fn project_sectors(&self, sectors: &[usize]) -> StateVector {
        let all = self.to_blocks();
        match all {
            StateVector::Blocks { n_spins, blocks } => StateVector::Blocks {
                n_spins,
                blocks: blocks
                    .into_iter()
                    .filter(|(s, _)| sectors.contains(s))
                    .collect(),
            },
            StateVector::Full { .. } => unreachable!(),
        }
    }

    fn check_site(&self, j: usize) -> Result<()> {
        if j >= self.n_spins() {
            return Err(Error::invalid(format!(
                "site {j} outside 0..{}",
                self.n_spins()
            )));
        }
        Ok(())
    }
}

/// Product state together with its angles and sector weights.
#[derive(Debug, Clone)]
pub struct PreparedState {
    pub angles: DVector<f64>,
    pub state: StateVector,
    pub sector_probs: Vec<f64>,
}

/// theta_j = atan(gamma * a_j): a small rotation toward one target mode.
pub fn prep_angles_single(gamma: f64, a: &DVector<f64>) -> DVector<f64> {
    a.map(|x| (gamma * x).atan())
}

/// theta_j = atan(gamma * (a1_j + a2_j)) for a two-mode superposition.
pub fn prep_angles_pair(
    gamma: f64,
    a1: &DVector<f64>,
    a2: &DVector<f64>,
) -> Result<DVector<f64>> {
    if a1.len() != a2.len() {
        return Err(Error::DimensionMismatch(format!(
            "amplitude vectors of lengths {} and {}",
            a1.len(),
            a2.len()
        )));
    }
    Ok(DVector::from_iterator(
        a1.len(),
        a1.iter().zip(a2.iter()).map(|(x, y)| (gamma * (x + y)).atan()),
    ))
}

/// Product state over the full basis: the mask amplitude is
/// prod_{j in mask} sin(theta_j) * prod_{j not in mask} cos(theta_j).
pub fn build_product_state(theta: &DVector<f64>) -> Result<PreparedState> {
    let n = theta.len();
    if n == 0 || n > FULL_STATE_SPIN_CAP {
        return Err(Error::invalid(format!(
            "need 1..={FULL_STATE_SPIN_CAP} angles, got {n}"
        )));
    }
    if theta.iter().any(|t| !t.is_finite()) {
        return Err(Error::invalid("angles must be finite"));
    }
    let cos: Vec<f64> = theta.iter().map(|t| t.cos()).collect();
    let sin: Vec<f64> = theta.iter().map(|t| t.sin()).collect();
    let dim = 1usize << n;
    let mut amps = DVector::from_element(dim, Complex64::new(1.0, 0.0));
    // one factor per site, applied across the whole register
    for j in 0..n {
        let bit = 1usize << j;
        for mask in 0..dim {
            let f = if mask & bit != 0 { sin[j] } else { cos[j] };
            amps[mask] *= f;
        }
    }
    let state = StateVector::Full { n_spins: n, amps };
    let sector_probs = state.sector_probs();
    Ok(PreparedState {
        angles: theta.clone(),
        state,
        sector_probs,
    })
}

/// Hamiltonian handle matching one state representation.
pub enum Hamiltonians<'a> {
    /// One block per populated excitation sector.
    XyBlocks(&'a [HamiltonianBlock]),
    /// Dense operator over the full basis.
    Ising(&'a FullHamiltonian),
}

struct SpectralPropagator {
    vals: DVector<f64>,
    // complex copy of the eigenvector matrix so the gemv stays one call
    vecs: DMatrix<Complex64>,
}

impl SpectralPropagator {
    fn new(h: &DMatrix<f64>) -> Self {
        let (vals, vecs) = eigh_ascending(h);
        SpectralPropagator {
            vals,
            vecs: vecs.map(|x| Complex64::new(x, 0.0)),
        }
    }

    /// exp(-iHt) psi via the eigenbasis; `coeffs` caches V^T psi.
    fn coeffs(&self, psi: &DVector<Complex64>) -> DVector<Complex64> {
        self.vecs.adjoint() * psi
    }

    fn at(&self, coeffs: &DVector<Complex64>, t: f64) -> DVector<Complex64> {
        let phased = DVector::from_iterator(
            coeffs.len(),
            coeffs
                .iter()
                .zip(self.vals.iter())
                .map(|(c, &e)| c * Complex64::from_polar(1.0, -e * t)),
        );
        &self.vecs * phased
    }
}

/// Evolves `s` through every time in `t_grid` by exact spectral
/// decomposition. Block states take the XY blocks, full states the dense
/// operator; mixing the two is a representation error.
pub fn evolve(s: &StateVector, h: &Hamiltonians, t_grid: &[f64]) -> Result<Vec<StateVector>> {
    match (s, h) {
        (StateVector::Full { n_spins, amps }, Hamiltonians::Ising(full)) => {
            if full.n_spins() != *n_spins {
                return Err(Error::DimensionMismatch(format!(
                    "state has {n_spins} spins, operator {}",
                    full.n_spins()
                )));
            }
            let prop = SpectralPropagator::new(full.matrix());
            let coeffs = prop.coeffs(amps);
            Ok(t_grid
                .iter()
                .map(|&t| StateVector::Full {
                    n_spins: *n_spins,
                    amps: prop.at(&coeffs, t),
                })
                .collect())
        }
        (StateVector::Blocks { n_spins, blocks }, Hamiltonians::XyBlocks(list)) => {
            let mut props: BTreeMap<usize, (SpectralPropagator, DVector<Complex64>)> =
                BTreeMap::new();
            for (&sector, vec) in blocks {
                let block = list
                    .iter()
                    .find(|b| b.n_excitations() == sector && b.basis().n_spins() == *n_spins)
                    .ok_or_else(|| {
                        Error::RepresentationMismatch(format!(
                            "no Hamiltonian block for sector {sector}"
                        ))
                    })?;
                if block.matrix().nrows() != vec.len() {
                    return Err(Error::DimensionMismatch(format!(
                        "sector {sector} block is {} but state has {} amplitudes",
                        block.matrix().nrows(),
                        vec.len()
                    )));
                }
                let prop = SpectralPropagator::new(block.matrix());
                let coeffs = prop.coeffs(vec);
                props.insert(sector, (prop, coeffs));
            }
            Ok(t_grid
                .iter()
                .map(|&t| StateVector::Blocks {
                    n_spins: *n_spins,
                    blocks: props
                        .iter()
                        .map(|(&sector, (prop, coeffs))| (sector, prop.at(coeffs, t)))
                        .collect(),
                })
                .collect())
        }
        (StateVector::Full { .. }, Hamiltonians::XyBlocks(_)) => Err(Error::RepresentationMismatch(
            "full state needs the dense operator; convert with to_blocks() first".into(),
        )),
        (StateVector::Blocks { .. }, Hamiltonians::Ising(_)) => Err(Error::RepresentationMismatch(
            "block state needs the XY blocks; convert with to_full() first".into(),
        )),
    }
}

/// Readout frame co-rotating with the transverse field.
///
/// `Main` demodulates the free precession at 2B completely:
/// x~ + i y~ = exp(-2iBt) (x + i y), so a mode shows up at eps_k / 2pi.
/// `Supplement` flips the sign of the y~ quadrature, which conjugates the
/// complex signal and mirrors extracted frequencies to -eps_k / 2pi.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FrameConvention {
    Main,
    Supplement,
}

#[derive(Debug, Clone, Copy)]
pub struct RotatingFrame {
    pub b_field: f64,
    pub convention: FrameConvention,
}

impl RotatingFrame {
    pub fn new(b_field: f64, convention: FrameConvention) -> Self {
        RotatingFrame {
            b_field,
            convention,
        }
    }

    /// Applies the frame to a lab transverse moment x + i y at time t.
    pub fn rotate(&self, lab_xy: Complex64, t: f64) -> Complex64 {
        let rot = Complex64::from_polar(1.0, -2.0 * self.b_field * t);
        match self.convention {
            FrameConvention::Main => rot * lab_xy,
            FrameConvention::Supplement => (rot * lab_xy).conj(),
        }
    }
}

/// Measurement axis for `expect_sigma_frame`; X and Y are frame-rotated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SigmaAxis {
    X,
    Y,
    Z,
}

/// Lab-frame transverse moment <sigma_x> + i <sigma_y> = 2 <sigma_+> of
/// site j.
pub fn transverse_moment(s: &StateVector, j: usize) -> Result<Complex64> {
    s.check_site(j)?;
    let bit = 1u64 << j;
    let mut acc = Complex64::new(0.0, 0.0);
    match s {
        StateVector::Full { amps, .. } => {
            for (mask, a) in amps.iter().enumerate() {
                if mask as u64 & bit == 0 {
                    acc += amps[(mask as u64 | bit) as usize].conj() * a;
                }
            }
        }
        StateVector::Blocks { n_spins, blocks } => {
            for (&sector, lower) in blocks {
                let Some(upper) = blocks.get(&(sector + 1)) else {
                    continue;
                };
                let basis_lo = enumerate_subspace(*n_spins, sector)?;
                let basis_hi = enumerate_subspace(*n_spins, sector + 1)?;
                for (idx, &mask) in basis_lo.masks().iter().enumerate() {
                    if mask & bit == 0 {
                        let up = basis_hi.rank(mask | bit)?;
                        acc += upper[up].conj() * lower[idx];
                    }
                }
            }
        }
    }
    Ok(2.0 * acc)
}

/// <sigma_z> of site j (frame independent).
pub fn expect_sigma_z(s: &StateVector, j: usize) -> Result<f64> {
    s.check_site(j)?;
    let bit = 1u64 << j;
    let mut acc = 0.0;
    let mut on = |mask: u64, w: f64| {
        acc += if mask & bit != 0 { w } else { -w };
    };
    match s {
        StateVector::Full { amps, .. } => {
            for (mask, a) in amps.iter().enumerate() {
                on(mask as u64, a.norm_sqr());
            }
        }
        StateVector::Blocks { n_spins, blocks } => {
            for (&sector, vec) in blocks {
                let basis = enumerate_subspace(*n_spins, sector)?;
                for (idx, &mask) in basis.masks().iter().enumerate() {
                    on(mask, vec[idx].norm_sqr());
                }
            }
        }
    }
    Ok(acc)
}

/// Single-site expectation along a frame axis at time t.
pub fn expect_sigma_frame(
    s: &StateVector,
    j: usize,
    axis: SigmaAxis,
    t: f64,
    frame: &RotatingFrame,
) -> Result<f64> {
    match axis {
        SigmaAxis::Z => expect_sigma_z(s, j),
        SigmaAxis::X => Ok(frame.rotate(transverse_moment(s, j)?, t).re),
        SigmaAxis::Y => Ok(frame.rotate(transverse_moment(s, j)?, t).im),
    }
}

/// Observable diagonal in the z product basis.
#[derive(Debug, Clone, Copy)]
pub enum ZObservable {
    /// sigma_z of one site: +1 up, -1 down.
    SigmaZ(usize),
    /// (1 + sigma_z)/2 of one site: 1 up, 0 down.
    Occupation(usize),
    /// Both sites up: (1+sigma_z_i)(1+sigma_z_j)/4.
    PairUp(usize, usize),
}

impl ZObservable {
    pub fn value(&self, mask: u64) -> f64 {
        match *self {
            ZObservable::SigmaZ(j) => {
                if mask & (1 << j) != 0 {
                    1.0
                } else {
                    -1.0
                }
            }
            ZObservable::Occupation(j) => ((mask >> j) & 1) as f64,
            ZObservable::PairUp(i, j) => (((mask >> i) & (mask >> j)) & 1) as f64,
        }
    }

    fn max_site(&self) -> usize {
        match *self {
            ZObservable::SigmaZ(j) | ZObservable::Occupation(j) => j,
            ZObservable::PairUp(i, j) => i.max(j),
        }
    }
}

/// Post-selected expectation <Pi_n O Pi_n>. The unnormalized form (the
/// default throughout the signal formulas) keeps the sector weight p_n in
/// place; the normalized form divides it out and fails on an empty sector.
pub fn postselect_expectations(
    s: &StateVector,
    n_excitations: usize,
    obs: &ZObservable,
    normalized: bool,
) -> Result<f64> {
    if obs.max_site() >= s.n_spins() {
        return Err(Error::invalid(format!(
            "observable touches site {} outside 0..{}",
            obs.max_site(),
            s.n_spins()
        )));
    }
    if n_excitations > s.n_spins() {
        return Err(Error::invalid(format!(
            "sector {n_excitations} exceeds {} spins",
            s.n_spins()
        )));
    }
    let mut acc = 0.0;
    let mut weight = 0.0;
    let mut on = |mask: u64, w: f64| {
        acc += w * obs.value(mask);
        weight += w;
    };
    match s {
        StateVector::Full { amps, .. } => {
            for (mask, a) in amps.iter().enumerate() {
                if mask.count_ones() as usize == n_excitations {
                    on(mask as u64, a.norm_sqr());
                }
            }
        }
        StateVector::Blocks { n_spins, blocks } => {
            if let Some(vec) = blocks.get(&n_excitations) {
                let basis = enumerate_subspace(*n_spins, n_excitations)?;
                for (idx, &mask) in basis.masks().iter().enumerate() {
                    on(mask, vec[idx].norm_sqr());
                }
            }
        }
    }
    if normalized {
        if weight <= 0.0 {
            return Err(Error::numerical(format!(
                "sector {n_excitations} is unpopulated; nothing to condition on"
            )));
        }
        Ok(acc / weight)
    } else {
        Ok(acc)
    }
}

/// Probability that spins i and j are both up (plain expectation of the
/// pair projector, no post-selection).
pub fn pair_projector_expect(s: &StateVector, i: usize, j: usize) -> Result<f64> {
    if i == j {
        return Err(Error::invalid("pair projector needs two distinct sites"));
    }
    s.check_site(i)?;
    s.check_site(j)?;
    let obs = ZObservable::PairUp(i, j);
    let mut acc = 0.0;
    match s {
        StateVector::Full { amps, .. } => {
            for (mask, a) in amps.iter().enumerate() {
                acc += a.norm_sqr() * obs.value(mask as u64);
            }
        }
        StateVector::Blocks { n_spins, blocks } => {
            for (&sector, vec) in blocks {
                let basis = enumerate_subspace(*n_spins, sector)?;
                for (idx, &mask) in basis.masks().iter().enumerate() {
                    acc += vec[idx].norm_sqr() * obs.value(mask);
                }
            }
        }
    }
    Ok(acc)
}

/// Stateless seed splitter: stream k of a base seed. SplitMix64 finalizer,
/// so nearby (seed, k) pairs land far apart.
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed.wrapping_add(stream.wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Projective z-basis measurement: a multinomial draw of `shots` outcomes
/// from the state's |amplitude|^2 distribution. Deterministic per seed.
pub fn sample_shots(s: &StateVector, shots: u64, seed: u64) -> Result<BTreeMap<u64, u64>> {
    if shots == 0 {
        return Err(Error::invalid("need at least one shot"));
    }
    let mut masks = Vec::new();
    let mut cumulative = Vec::new();
    let mut total = 0.0;
    let mut push = |mask: u64, p: f64| {
        if p > 0.0 {
            total += p;
            masks.push(mask);
            cumulative.push(total);
        }
    };
    match s {
        StateVector::Full { amps, .. } => {
            for (mask, a) in amps.iter().enumerate() {
                push(mask as u64, a.norm_sqr());
            }
        }
        StateVector::Blocks { n_spins, blocks } => {
            for (&sector, vec) in blocks {
                let basis = enumerate_subspace(*n_spins, sector)?;
                for (idx, &mask) in basis.masks().iter().enumerate() {
                    push(mask, vec[idx].norm_sqr());
                }
            }
        }
    }
    if total <= 0.0 {
        return Err(Error::numerical("state has no probability weight"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut counts = BTreeMap::new();
    for _ in 0..shots {
        let u: f64 = rng.random::<f64>() * total;
        let idx = cumulative.partition_point(|&c| c < u).min(masks.len() - 1);
        *counts.entry(masks[idx]).or_insert(0) += 1;
    }
    Ok(counts)
}

/// Rewrites the state so a z measurement realizes the transverse axis
/// sigma^phi = cos(phi) sigma_x + sin(phi) sigma_y on every site: outcome
/// bit 1 is the +1 eigenvalue of sigma^phi. Full representation only.
pub fn rotate_transverse_basis(s: &StateVector, phi: f64) -> Result<StateVector> {
    let StateVector::Full { n_spins, amps } = s else {
        return Err(Error::RepresentationMismatch(
            "transverse-basis rotation mixes sectors; convert with to_full() first".into(),
        ));
    };
    let n = *n_spins;
    let mut out = amps.clone();
    // +1 eigenvector of sigma^phi is (|0> + e^{-i phi}|1>)/sqrt(2), so the
    // projection amplitude carries the conjugate phase on a1
    let phase = Complex64::from_polar(1.0, phi);
    let inv_sqrt2 = std::f64::consts::FRAC_1_SQRT_2;
    for j in 0..n {
        let bit = 1usize << j;
        for mask in 0..(1usize << n) {
            if mask & bit == 0 {
                let a0 = out[mask];
                let a1 = out[mask | bit];
                out[mask | bit] = (a0 + phase * a1) * inv_sqrt2;
                out[mask] = (a0 - phase * a1) * inv_sqrt2;
            }
        }
    }
    Ok(StateVector::Full {
        n_spins: n,
        amps: out,
    })
}
