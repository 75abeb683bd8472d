//! Fixed-number Fock sectors: basis enumeration, ladder operators, the
//! Bose-Hubbard matrix, exact propagation, and the site ↔ momentum change of
//! basis used for quasi-momentum classification.
//!
//! Sites and momentum modes carry 1-based physical labels (`j, k ∈ [1, M]`);
//! they are stored at index `label − 1`.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{CMatrix, CVector, HermitianEigen};
use crate::model::BhParams;
use crate::serde_complex;

/// Basis-size ceiling applied when no explicit cap is given.
pub const DEFAULT_DIM_CAP: usize = 20_000;

/// Occupation numbers `(m₁, …, m_M)` of one Fock state.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Occupation(pub Vec<u32>);

impl Occupation {
    pub fn total(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn sites(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[u32] {
        &self.0
    }
}

impl From<Vec<u32>> for Occupation {
    fn from(v: Vec<u32>) -> Self {
        Self(v)
    }
}

/// `binomial(N + M − 1, M − 1)`, or `None` on overflow.
pub fn sector_dimension(sites: usize, particles: usize) -> Option<usize> {
    if sites == 0 {
        return None;
    }
    let n = particles as u128 + sites as u128 - 1;
    let k = (sites as u128 - 1).min(particles as u128);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.checked_mul(n - i)? / (i + 1);
    }
    usize::try_from(acc).ok()
}

/// Enumerated basis of the `N`-boson sector on `M` sites, ordered
/// lexicographically descending.
#[derive(Debug, Clone)]
pub struct FockBasis {
    sites: usize,
    particles: usize,
    states: Vec<Occupation>,
    index: HashMap<Vec<u32>, usize>,
}

impl FockBasis {
    pub fn enumerate(sites: usize, particles: usize) -> Result<Arc<Self>> {
        Self::enumerate_with_cap(sites, particles, DEFAULT_DIM_CAP)
    }

    pub fn enumerate_with_cap(sites: usize, particles: usize, cap: usize) -> Result<Arc<Self>> {
        if sites == 0 {
            return Err(Error::InvalidLattice("a sector needs at least one site".into()));
        }
        let dim = sector_dimension(sites, particles).unwrap_or(usize::MAX);
        if dim > cap {
            return Err(Error::Capacity { dim, cap });
        }
        let mut states = Vec::with_capacity(dim);
        let mut current = vec![0u32; sites];
        fill(&mut current, 0, particles as u32, &mut states);
        debug_assert_eq!(states.len(), dim);
        let index = states
            .iter()
            .enumerate()
            .map(|(i, s)| (s.0.clone(), i))
            .collect();
        Ok(Arc::new(Self {
            sites,
            particles,
            states,
            index,
        }))
    }

    pub fn sites(&self) -> usize {
        self.sites
    }

    pub fn particles(&self) -> usize {
        self.particles
    }

    pub fn dim(&self) -> usize {
        self.states.len()
    }

    pub fn states(&self) -> &[Occupation] {
        &self.states
    }

    pub fn state(&self, i: usize) -> &Occupation {
        &self.states[i]
    }

    pub fn index_of(&self, occ: &[u32]) -> Option<usize> {
        self.index.get(occ).copied()
    }

    pub fn same_sector(&self, other: &FockBasis) -> bool {
        self.sites == other.sites && self.particles == other.particles
    }

    pub(crate) fn check_sector(&self, sites: usize, particles: usize) -> Result<()> {
        if self.sites != sites || self.particles != particles {
            return Err(Error::SectorMismatch {
                expected_sites: self.sites,
                expected_particles: self.particles,
                sites,
                particles,
            });
        }
        Ok(())
    }

    fn check_site(&self, site: usize) -> Result<()> {
        if site >= self.sites {
            return Err(Error::SiteOutOfRange {
                site,
                sites: self.sites,
            });
        }
        Ok(())
    }
}

fn fill(current: &mut [u32], pos: usize, remaining: u32, out: &mut Vec<Occupation>) {
    if pos + 1 == current.len() {
        current[pos] = remaining;
        out.push(Occupation(current.to_vec()));
        return;
    }
    for n in (0..=remaining).rev() {
        current[pos] = n;
        fill(current, pos + 1, remaining - n, out);
    }
    current[pos] = 0;
}

/// A state in one fixed-number sector. The norm is reported, never enforced.
#[derive(Debug, Clone)]
pub struct SectorVector {
    basis: Arc<FockBasis>,
    amps: CVector,
}

#[derive(Debug, Serialize, Deserialize)]
struct SectorVectorJson {
    #[serde(rename = "M")]
    sites: usize,
    #[serde(rename = "N")]
    particles: usize,
    #[serde(with = "serde_complex::vec")]
    amps: Vec<Complex64>,
}

impl SectorVector {
    pub fn new(basis: Arc<FockBasis>, amps: CVector) -> Result<Self> {
        if amps.len() != basis.dim() {
            return Err(Error::InvalidArgument(format!(
                "{} amplitudes for a sector of dimension {}",
                amps.len(),
                basis.dim()
            )));
        }
        if amps.iter().any(|a| !a.re.is_finite() || !a.im.is_finite()) {
            return Err(Error::InvalidArgument("non-finite amplitude".into()));
        }
        Ok(Self { basis, amps })
    }

    pub fn zeros(basis: Arc<FockBasis>) -> Self {
        let dim = basis.dim();
        Self {
            basis,
            amps: CVector::zeros(dim),
        }
    }

    pub fn basis_state(basis: Arc<FockBasis>, occ: &[u32]) -> Result<Self> {
        let i = basis.index_of(occ).ok_or_else(|| {
            Error::InvalidArgument(format!("occupation {occ:?} is not in the sector"))
        })?;
        let mut v = Self::zeros(basis);
        v.amps[i] = Complex64::new(1.0, 0.0);
        Ok(v)
    }

    pub fn basis(&self) -> &Arc<FockBasis> {
        &self.basis
    }

    pub fn amps(&self) -> &CVector {
        &self.amps
    }

    pub fn amps_mut(&mut self) -> &mut CVector {
        &mut self.amps
    }

    pub fn into_amps(self) -> CVector {
        self.amps
    }

    pub fn amplitude(&self, occ: &[u32]) -> Option<Complex64> {
        self.basis.index_of(occ).map(|i| self.amps[i])
    }

    pub fn norm(&self) -> f64 {
        self.amps.norm()
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &SectorVector) -> Result<Complex64> {
        self.basis
            .check_sector(other.basis.sites, other.basis.particles)?;
        Ok(self.amps.dotc(&other.amps))
    }

    /// `⟨self| op |self⟩` for an operator acting within the sector.
    pub fn expectation(&self, op: &CMatrix) -> Complex64 {
        self.amps.dotc(&(op * &self.amps))
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(SectorVectorJson {
            sites: self.basis.sites,
            particles: self.basis.particles,
            amps: self.amps.iter().copied().collect(),
        })
        .expect("sector vector serializes")
    }

    pub fn from_json(value: &serde_json::Value) -> Result<Self> {
        let raw: SectorVectorJson = serde_json::from_value(value.clone())
            .map_err(|e| Error::InvalidArgument(format!("sector vector JSON: {e}")))?;
        let basis = FockBasis::enumerate(raw.sites, raw.particles)?;
        Self::new(basis, CVector::from_vec(raw.amps))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Ladder {
    Raise,
    Lower,
    Number,
}

/// Basis of the sector reached by `kind` from `basis`.
fn target_basis(basis: &Arc<FockBasis>, kind: Ladder) -> Result<Arc<FockBasis>> {
    match kind {
        Ladder::Number => Ok(Arc::clone(basis)),
        Ladder::Raise => FockBasis::enumerate(basis.sites, basis.particles + 1),
        Ladder::Lower => {
            if basis.particles == 0 {
                return Err(Error::InvalidArgument(
                    "cannot lower the vacuum sector".into(),
                ));
            }
            FockBasis::enumerate(basis.sites, basis.particles - 1)
        }
    }
}

/// Matrix of `a⁺`, `a` or `n` at `site`, mapping `from` into `to`.
pub fn ladder_matrix(from: &FockBasis, to: &FockBasis, site: usize, kind: Ladder) -> Result<CMatrix> {
    from.check_site(site)?;
    let mut m = CMatrix::zeros(to.dim(), from.dim());
    let mut occ = vec![0u32; from.sites];
    for (col, state) in from.states.iter().enumerate() {
        occ.copy_from_slice(&state.0);
        let n = occ[site];
        let (factor, shifted) = match kind {
            Ladder::Number => (n as f64, n),
            Ladder::Raise => (((n + 1) as f64).sqrt(), n + 1),
            Ladder::Lower if n == 0 => continue,
            Ladder::Lower => ((n as f64).sqrt(), n - 1),
        };
        occ[site] = shifted;
        if let Some(row) = to.index_of(&occ) {
            m[(row, col)] += Complex64::from(factor);
        }
    }
    Ok(m)
}

pub fn apply_ladder(v: &SectorVector, site: usize, kind: Ladder) -> Result<SectorVector> {
    v.basis.check_site(site)?;
    let to = target_basis(&v.basis, kind)?;
    let m = ladder_matrix(&v.basis, &to, site, kind)?;
    Ok(SectorVector {
        amps: m * &v.amps,
        basis: to,
    })
}

/// `a_j⁺ a_l` restricted to the sector.
pub fn hopping_operator(basis: &FockBasis, j: usize, l: usize) -> Result<CMatrix> {
    basis.check_site(j)?;
    basis.check_site(l)?;
    let mut m = CMatrix::zeros(basis.dim(), basis.dim());
    let mut occ = vec![0u32; basis.sites];
    for (col, state) in basis.states.iter().enumerate() {
        occ.copy_from_slice(&state.0);
        if occ[l] == 0 {
            continue;
        }
        let mut factor = (occ[l] as f64).sqrt();
        occ[l] -= 1;
        factor *= ((occ[j] + 1) as f64).sqrt();
        occ[j] += 1;
        let row = basis.index_of(&occ).expect("number-conserving move stays in sector");
        m[(row, col)] += Complex64::from(factor);
    }
    Ok(m)
}

pub fn number_operator(basis: &FockBasis, site: usize) -> Result<CMatrix> {
    basis.check_site(site)?;
    let diag = CVector::from_iterator(
        basis.dim(),
        basis.states.iter().map(|s| Complex64::from(s.0[site] as f64)),
    );
    Ok(CMatrix::from_diagonal(&diag))
}

/// `H = (U/2) Σ_j (n_j² − n_j) − Σ_{j,ℓ} T_{jℓ} a_j⁺ a_ℓ` in the sector basis.
pub fn build_bh_matrix(params: &BhParams, basis: &FockBasis) -> Result<CMatrix> {
    basis.check_sector(params.sites(), basis.particles)?;
    let half_u = 0.5 * params.interaction;
    let mut h = CMatrix::zeros(basis.dim(), basis.dim());
    let bonds: Vec<_> = params.hopping.nonzero().collect();
    let mut occ = vec![0u32; basis.sites];
    for (col, state) in basis.states.iter().enumerate() {
        let onsite: f64 = state
            .0
            .iter()
            .map(|&n| {
                let n = n as f64;
                n * n - n
            })
            .sum();
        h[(col, col)] += Complex64::from(half_u * onsite);
        for &(j, l, t) in &bonds {
            occ.copy_from_slice(&state.0);
            if occ[l] == 0 {
                continue;
            }
            let mut factor = (occ[l] as f64).sqrt();
            occ[l] -= 1;
            factor *= ((occ[j] + 1) as f64).sqrt();
            occ[j] += 1;
            let row = basis.index_of(&occ).expect("hopping stays in sector");
            h[(row, col)] -= Complex64::from(t * factor);
        }
    }
    Ok(h)
}

/// Spectral propagator `exp(−iHt)` for one Hamiltonian and sector, reusable
/// across time grids.
#[derive(Debug, Clone)]
pub struct ExactPropagator {
    basis: Arc<FockBasis>,
    hamiltonian: CMatrix,
    eigen: HermitianEigen,
}

impl ExactPropagator {
    pub fn new(params: &BhParams, basis: Arc<FockBasis>) -> Result<Self> {
        let hamiltonian = build_bh_matrix(params, &basis)?;
        let eigen = HermitianEigen::new(&hamiltonian);
        Ok(Self {
            basis,
            hamiltonian,
            eigen,
        })
    }

    pub fn hamiltonian(&self) -> &CMatrix {
        &self.hamiltonian
    }

    pub fn spectrum(&self) -> Vec<f64> {
        let mut e: Vec<f64> = self.eigen.values.iter().copied().collect();
        e.sort_by(f64::total_cmp);
        e
    }

    pub fn energy(&self, psi: &SectorVector) -> f64 {
        psi.expectation(&self.hamiltonian).re
    }

    pub fn evolve(&self, psi0: &SectorVector, times: &[f64]) -> Result<Vec<SectorVector>> {
        psi0.basis
            .check_sector(self.basis.sites, self.basis.particles)?;
        if times.iter().any(|t| !t.is_finite()) {
            return Err(Error::InvalidArgument("non-finite time in grid".into()));
        }
        if times.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::InvalidArgument("time grid must be sorted".into()));
        }
        let in_eigenbasis = self.eigen.vectors.ad_mul(&psi0.amps);
        Ok(times
            .iter()
            .map(|&t| {
                let mut c = in_eigenbasis.clone();
                for (x, e) in c.iter_mut().zip(self.eigen.values.iter()) {
                    *x *= Complex64::from_polar(1.0, -e * t);
                }
                SectorVector {
                    basis: Arc::clone(&self.basis),
                    amps: &self.eigen.vectors * c,
                }
            })
            .collect())
    }
}

/// `|ψ(t)⟩ = exp(−iHt)|ψ(0)⟩` on every time of the grid (ħ = 1).
pub fn evolve_exact(psi0: &SectorVector, params: &BhParams, times: &[f64]) -> Result<Vec<SectorVector>> {
    ExactPropagator::new(params, Arc::clone(&psi0.basis))?.evolve(psi0, times)
}

/// Quasi-momentum class `λ(p) = (Σ_k k p_k) mod M` of a momentum-mode
/// occupation, `k ∈ [1, M]`.
pub fn quasimomentum_class(p: &Occupation) -> usize {
    let m = p.sites() as u64;
    if m == 0 {
        return 0;
    }
    let total: u64 = p
        .0
        .iter()
        .enumerate()
        .map(|(idx, &pk)| (idx as u64 + 1) * pk as u64)
        .sum();
    (total % m) as usize
}

/// Unitary DFT `F_{kj} = e^{−i k̃ j}/√M`, `k̃ = 2πk/M`, so that `b_k = Σ_j F_{kj} a_j`.
pub fn dft_matrix(sites: usize) -> CMatrix {
    let norm = 1.0 / (sites as f64).sqrt();
    CMatrix::from_fn(sites, sites, |k, j| {
        let phase = -2.0 * PI * ((k + 1) * (j + 1)) as f64 / sites as f64;
        Complex64::from_polar(norm, phase)
    })
}

/// Sector representation of a single-particle change of modes.
///
/// With `a_j⁺ = Σ_q u_{qj} b_q⁺`, returns `W_{p,m} = ⟨p|m⟩` where `|m⟩` are
/// Fock states of the `a` modes and `|p⟩` those of the `b` modes, both
/// indexed by `basis`.
pub fn sector_transform(basis: &Arc<FockBasis>, u: &CMatrix) -> Result<CMatrix> {
    let m = basis.sites;
    if u.nrows() != m || u.ncols() != m {
        return Err(Error::InvalidArgument(format!(
            "single-particle matrix is {}x{}, expected {m}x{m}",
            u.nrows(),
            u.ncols()
        )));
    }
    let mut lower = FockBasis::enumerate(m, 0)?;
    let mut w = CMatrix::from_element(1, 1, Complex64::new(1.0, 0.0));
    for s in 1..=basis.particles {
        let upper = if s == basis.particles {
            Arc::clone(basis)
        } else {
            FockBasis::enumerate(m, s)?
        };
        let mut next = CMatrix::zeros(upper.dim(), upper.dim());
        let mut occ = vec![0u32; m];
        for (col, state) in upper.states.iter().enumerate() {
            let site = state.0.iter().position(|&n| n > 0).expect("nonempty sector state");
            occ.copy_from_slice(&state.0);
            occ[site] -= 1;
            let parent = lower.index_of(&occ).expect("parent occupation exists");
            let scale = 1.0 / (state.0[site] as f64).sqrt();
            for (prow, p) in lower.states.iter().enumerate() {
                let c = w[(prow, parent)];
                if c == Complex64::new(0.0, 0.0) {
                    continue;
                }
                occ.copy_from_slice(&p.0);
                for q in 0..m {
                    let uq = u[(q, site)];
                    if uq == Complex64::new(0.0, 0.0) {
                        continue;
                    }
                    let factor = ((occ[q] + 1) as f64).sqrt();
                    occ[q] += 1;
                    let row = upper.index_of(&occ).expect("raised state exists");
                    next[(row, col)] += c * uq * (factor * scale);
                    occ[q] -= 1;
                }
            }
        }
        w = next;
        lower = upper;
    }
    Ok(w)
}

/// Site → momentum change of basis on a sector: `W_{p,m} = ⟨p|m⟩` with
/// `b_k` defined by [`dft_matrix`].
pub fn momentum_transform(basis: &Arc<FockBasis>) -> Result<CMatrix> {
    sector_transform(basis, &dft_matrix(basis.sites))
}

/// Ring displacement `exp(−iσ Σ_k k b_k⁺ b_k)`, `σ = 2π/M`, expressed in the
/// site basis. It satisfies `D a_ℓ D⁺ = a_{ℓ+1}`.
pub fn displacement_operator(basis: &Arc<FockBasis>) -> Result<CMatrix> {
    let w = momentum_transform(basis)?;
    let sigma = 2.0 * PI / basis.sites as f64;
    let phases = CVector::from_iterator(
        basis.dim(),
        basis.states.iter().map(|p| {
            let total: f64 = p
                .0
                .iter()
                .enumerate()
                .map(|(idx, &pk)| (idx + 1) as f64 * pk as f64)
                .sum();
            Complex64::from_polar(1.0, -sigma * total)
        }),
    );
    Ok(w.adjoint() * CMatrix::from_diagonal(&phases) * w)
}
