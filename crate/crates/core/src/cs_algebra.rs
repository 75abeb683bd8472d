//! Coherent-state algebra: SU(M) coherent states `|N; ξ⟩` and Glauber product
//! states `|Z⟩`, their Fock expansions, overlaps and moments, the
//! group-element construction `|ξ⟩ = E|N,0,…,0⟩`, and the site ↔ momentum
//! duality.

use std::f64::consts::FRAC_PI_2;
use std::sync::Arc;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{self, dft_matrix, FockBasis, SectorVector};
use crate::linalg::{expm, expm_hermitian, fitted_phase, max_abs_diff, CMatrix, CVector};
use crate::serde_complex;

/// Tolerance on `Σ|ξ_i|² = 1`.
pub const NORM_TOLERANCE: f64 = 1e-12;

/// Target for the neglected Poisson tail when truncating `|Z⟩` by sector.
pub const SECTOR_TAIL_TARGET: f64 = 1e-12;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

fn is_finite(c: &Complex64) -> bool {
    c.re.is_finite() && c.im.is_finite()
}

fn squared_norm(v: &[Complex64]) -> f64 {
    v.iter().map(|c| c.norm_sqr()).sum()
}

/// `Σ_i a_i* b_i`.
pub fn cdot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// SU(M) coherent state `(N!)^{-1/2} (Σ ξ_i a_i⁺)^N |0⟩`.
#[derive(Debug, Clone, PartialEq)]
pub struct SuMState {
    particles: usize,
    xi: Vec<Complex64>,
}

impl SuMState {
    pub fn new(particles: usize, xi: Vec<Complex64>) -> Result<Self> {
        if xi.is_empty() {
            return Err(Error::InvalidLattice("ξ needs at least one component".into()));
        }
        if !xi.iter().all(is_finite) {
            return Err(Error::InvalidArgument("ξ has non-finite components".into()));
        }
        let norm = squared_norm(&xi);
        if (norm - 1.0).abs() > NORM_TOLERANCE {
            return Err(Error::InvalidArgument(format!(
                "Σ|ξ_i|² = {norm} differs from 1 by more than {NORM_TOLERANCE:e}"
            )));
        }
        Ok(Self { particles, xi })
    }

    /// Rescales `xi` to unit norm.
    pub fn normalized(particles: usize, xi: Vec<Complex64>) -> Result<Self> {
        let norm = squared_norm(&xi).sqrt();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::InvalidArgument("cannot normalize a zero or non-finite ξ".into()));
        }
        Self::new(particles, xi.into_iter().map(|c| c / norm).collect())
    }

    /// All bosons on one site: `ξ = e_site`.
    pub fn localized(sites: usize, particles: usize, site: usize) -> Result<Self> {
        if site >= sites {
            return Err(Error::SiteOutOfRange { site, sites });
        }
        let mut xi = vec![ZERO; sites];
        xi[site] = Complex64::new(1.0, 0.0);
        Self::new(particles, xi)
    }

    /// Uniformly random direction on the unit sphere of `C^M`.
    pub fn random<R: Rng + ?Sized>(sites: usize, particles: usize, rng: &mut R) -> Self {
        loop {
            let xi: Vec<Complex64> = (0..sites)
                .map(|_| Complex64::new(gaussian(rng), gaussian(rng)))
                .collect();
            if let Ok(s) = Self::normalized(particles, xi) {
                return s;
            }
        }
    }

    pub fn particles(&self) -> usize {
        self.particles
    }

    pub fn sites(&self) -> usize {
        self.xi.len()
    }

    pub fn xi(&self) -> &[Complex64] {
        &self.xi
    }

    /// `ψ_j = √N ξ_j`.
    pub fn psi(&self) -> Vec<Complex64> {
        let s = (self.particles as f64).sqrt();
        self.xi.iter().map(|x| x * s).collect()
    }

    fn check_compatible(&self, other: &SuMState) -> Result<()> {
        if self.sites() != other.sites() || self.particles != other.particles {
            return Err(Error::SectorMismatch {
                expected_sites: self.sites(),
                expected_particles: self.particles,
                sites: other.sites(),
                particles: other.particles,
            });
        }
        Ok(())
    }

    fn check_site(&self, site: usize) -> Result<()> {
        if site >= self.sites() {
            return Err(Error::SiteOutOfRange {
                site,
                sites: self.sites(),
            });
        }
        Ok(())
    }
}

/// Box-Muller standard normal sample.
pub(crate) fn gaussian<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    let u1: f64 = 1.0 - rng.random::<f64>();
    let u2: f64 = rng.random();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

/// Glauber product state `|Z⟩ = Π_i |z_i⟩`.
#[derive(Debug, Clone, PartialEq)]
pub struct GlauberState {
    z: Vec<Complex64>,
}

impl GlauberState {
    pub fn new(z: Vec<Complex64>) -> Result<Self> {
        if z.is_empty() {
            return Err(Error::InvalidLattice("z needs at least one component".into()));
        }
        if !z.iter().all(is_finite) {
            return Err(Error::InvalidArgument("z has non-finite components".into()));
        }
        Ok(Self { z })
    }

    pub fn z(&self) -> &[Complex64] {
        &self.z
    }

    pub fn sites(&self) -> usize {
        self.z.len()
    }

    /// Mean boson number `Σ|z_i|²`.
    pub fn mean_number(&self) -> f64 {
        squared_norm(&self.z)
    }

    /// `ξ = z/√N̄`, or `None` for the vacuum.
    pub fn direction(&self) -> Option<Vec<Complex64>> {
        let n = self.mean_number().sqrt();
        (n > 0.0).then(|| self.z.iter().map(|c| c / n).collect())
    }
}

/// Either kind of coherent state, with the JSON encodings
/// `{"type":"suM","N":…,"xi":[[re,im],…]}` and `{"type":"glauber","z":[…]}`.
#[derive(Debug, Clone, PartialEq)]
pub enum CoherentState {
    SuM(SuMState),
    Glauber(GlauberState),
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "type", deny_unknown_fields)]
enum CoherentStateJson {
    #[serde(rename = "suM")]
    SuM {
        #[serde(rename = "N")]
        particles: usize,
        #[serde(with = "serde_complex::vec")]
        xi: Vec<Complex64>,
    },
    #[serde(rename = "glauber")]
    Glauber {
        #[serde(with = "serde_complex::vec")]
        z: Vec<Complex64>,
    },
}

impl Serialize for CoherentState {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            CoherentState::SuM(st) => CoherentStateJson::SuM {
                particles: st.particles,
                xi: st.xi.clone(),
            },
            CoherentState::Glauber(st) => CoherentStateJson::Glauber { z: st.z.clone() },
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for CoherentState {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        match CoherentStateJson::deserialize(d)? {
            CoherentStateJson::SuM { particles, xi } => SuMState::new(particles, xi)
                .map(CoherentState::SuM)
                .map_err(D::Error::custom),
            CoherentStateJson::Glauber { z } => GlauberState::new(z)
                .map(CoherentState::Glauber)
                .map_err(D::Error::custom),
        }
    }
}

/// `√(N!/Π_i m_i!)` evaluated as a product of binomials.
pub fn multinomial_sqrt(occ: &[u32]) -> f64 {
    let mut total = 0u32;
    let mut acc = 1.0f64;
    for &m in occ {
        total += m;
        acc *= binomial(total, m);
    }
    acc.sqrt()
}

fn binomial(n: u32, k: u32) -> f64 {
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

fn sqrt_factorial(n: u32) -> f64 {
    (1..=n).fold(1.0, |acc, k| acc * (k as f64).sqrt())
}

/// Fock expansion `⟨m|N; ξ⟩ = √(N!/Π m_i!) Π ξ_i^{m_i}`.
pub fn sum_fock_amplitudes(state: &SuMState, basis: &Arc<FockBasis>) -> Result<SectorVector> {
    basis.check_sector(state.sites(), state.particles)?;
    let amps = CVector::from_iterator(
        basis.dim(),
        basis.states().iter().map(|occ| {
            let mono: Complex64 = occ
                .as_slice()
                .iter()
                .zip(&state.xi)
                .map(|(&m, x)| x.powu(m))
                .product();
            mono * multinomial_sqrt(occ.as_slice())
        }),
    );
    SectorVector::new(Arc::clone(basis), amps)
}

/// `⟨η|ξ⟩ = (Σ_i η_i* ξ_i)^N`.
pub fn sum_overlap(eta: &SuMState, xi: &SuMState) -> Result<Complex64> {
    eta.check_compatible(xi)?;
    Ok(cdot(&eta.xi, &xi.xi).powu(xi.particles as u32))
}

/// One- and two-body moments of an SU(M) coherent state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SumExpectations {
    /// `⟨n_i⟩ = N|ξ_i|²`
    pub density: f64,
    /// `⟨n_i(n_i − 1)⟩ = N(N−1)|ξ_i|⁴`
    pub pair_density: f64,
    /// `⟨a_m⁺ a_i⟩ = N ξ_m* ξ_i`
    pub hopping: Complex64,
}

pub fn sum_expectations(state: &SuMState, i: usize, m: usize) -> Result<SumExpectations> {
    state.check_site(i)?;
    state.check_site(m)?;
    let n = state.particles as f64;
    let w = state.xi[i].norm_sqr();
    Ok(SumExpectations {
        density: n * w,
        pair_density: n * (n - 1.0) * w * w,
        hopping: state.xi[m].conj() * state.xi[i] * n,
    })
}

/// Off-diagonal pair element `⟨η|a_m⁺ a_i|ξ⟩ = N η_m* ξ_i (Σ η*ξ)^{N−1}`.
pub fn sum_transition_hopping(eta: &SuMState, xi: &SuMState, m: usize, i: usize) -> Result<Complex64> {
    eta.check_compatible(xi)?;
    xi.check_site(i)?;
    xi.check_site(m)?;
    let n = xi.particles;
    if n == 0 {
        return Ok(ZERO);
    }
    let overlap = cdot(&eta.xi, &xi.xi);
    Ok(eta.xi[m].conj() * xi.xi[i] * overlap.powu(n as u32 - 1) * n as f64)
}

/// Projection of `|Z⟩` on an `L`-boson SU(M) coherent state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SectorWeight {
    pub value: Complex64,
    /// Set when `z = 0`, where `ξ` is undefined and the weight is the
    /// vacuum limit (1 for `L = 0`, else 0).
    pub degenerate: bool,
}

/// `⟨ζ; L|Z⟩ = e^{−N̄/2} (N̄^{L/2}/√L!) (Σ ζ_i* ξ_i)^L`, evaluated as
/// `e^{−N̄/2} (Σ ζ_i* z_i)^L / √L!` so that `z → 0` is regular.
pub fn glauber_sector_weight(z: &GlauberState, zeta: &[Complex64], l: usize) -> Result<SectorWeight> {
    if zeta.len() != z.sites() {
        return Err(Error::InvalidArgument(format!(
            "direction has {} components for {} sites",
            zeta.len(),
            z.sites()
        )));
    }
    let zn = squared_norm(zeta);
    if (zn - 1.0).abs() > NORM_TOLERANCE {
        return Err(Error::InvalidArgument(format!("direction norm² {zn} is not 1")));
    }
    let nbar = z.mean_number();
    let projected = cdot(zeta, &z.z);
    let value = projected.powu(l as u32) * ((-0.5 * nbar).exp() / sqrt_factorial(l as u32));
    Ok(SectorWeight {
        value,
        degenerate: nbar == 0.0,
    })
}

/// `Σ_{S > s_max} e^{−μ} μ^S / S!`, summed directly to avoid cancellation.
pub fn poisson_tail(mean: f64, s_max: usize) -> f64 {
    if mean == 0.0 {
        return 0.0;
    }
    let first = s_max as f64 + 1.0;
    // log of the first neglected term
    let mut log_term = -mean + first * mean.ln() - ln_factorial(s_max + 1);
    let mut tail = 0.0;
    let mut s = first;
    loop {
        let term = log_term.exp();
        tail += term;
        if s > mean && (term < 1e-300 || term < tail * 1e-17) {
            break;
        }
        s += 1.0;
        log_term += mean.ln() - s.ln();
    }
    tail
}

fn ln_factorial(n: usize) -> f64 {
    (2..=n).map(|k| (k as f64).ln()).sum()
}

/// Smallest `s_max` with `poisson_tail(mean, s_max) ≤ tol`.
pub fn sector_cutoff(mean: f64, tol: f64) -> usize {
    let mut s = mean.floor() as usize;
    while poisson_tail(mean, s) > tol {
        s += 1;
    }
    // tail decreases monotonically, walk down while still below tol
    while s > 0 && poisson_tail(mean, s - 1) <= tol {
        s -= 1;
    }
    s
}

/// Fock expansion of `|Z⟩` sector by sector, `S = 0..=s_max`:
/// `⟨m|Z⟩ = Π_i e^{−|z_i|²/2} z_i^{m_i}/√(m_i!)`.
pub fn glauber_fock_amplitudes(z: &GlauberState, s_max: usize) -> Result<Vec<SectorVector>> {
    glauber_fock_amplitudes_with_cap(z, s_max, fock::DEFAULT_DIM_CAP)
}

pub fn glauber_fock_amplitudes_with_cap(z: &GlauberState, s_max: usize, cap: usize) -> Result<Vec<SectorVector>> {
    let tail = poisson_tail(z.mean_number(), s_max);
    if tail > SECTOR_TAIL_TARGET {
        return Err(Error::InvalidArgument(format!(
            "sector cutoff {s_max} leaves tail {tail:e} above {SECTOR_TAIL_TARGET:e}"
        )));
    }
    let prefactor: f64 = (-0.5 * z.mean_number()).exp();
    (0..=s_max)
        .map(|s| {
            let basis = FockBasis::enumerate_with_cap(z.sites(), s, cap)?;
            let amps = CVector::from_iterator(
                basis.dim(),
                basis.states().iter().map(|occ| {
                    occ.as_slice()
                        .iter()
                        .zip(&z.z)
                        .map(|(&m, zi)| zi.powu(m) / sqrt_factorial(m))
                        .product::<Complex64>()
                        * prefactor
                }),
            );
            SectorVector::new(basis, amps)
        })
        .collect()
}

/// `⟨X|Z⟩ = Π_j exp(x̄_j z_j − (|z_j|² + |x_j|²)/2)`.
pub fn glauber_overlap(x: &GlauberState, z: &GlauberState) -> Result<Complex64> {
    if x.sites() != z.sites() {
        return Err(Error::InvalidArgument("Glauber states on different lattices".into()));
    }
    let exponent: Complex64 = x
        .z
        .iter()
        .zip(&z.z)
        .map(|(a, b)| a.conj() * b - 0.5 * (a.norm_sqr() + b.norm_sqr()))
        .sum();
    Ok(exponent.exp())
}

/// Coordinates of the group element `E = e^{iS} e^{iD}` with
/// `S = Σ φ_i n_i`, `D = Σ_{k≥2} θ_k (a₁⁺a_k + a_k⁺a₁)`, that maps the
/// extremal state `|N,0,…,0⟩` onto `|ξ⟩`, together with the derived
/// `ζ_ℓ = θ_ℓ e^{i(φ_ℓ−φ₁)}`, `u = i tan θ` and `η_k = u ζ_k/θ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupElementParams {
    pub phi: Vec<f64>,
    pub theta_vec: Vec<f64>,
    pub theta: f64,
    pub u: Complex64,
    pub eta: Vec<Complex64>,
    pub zeta: Vec<Complex64>,
}

impl GroupElementParams {
    /// `ξ₁ = e^{iφ₁} cos θ`, `ξ_k = i θ_k e^{iφ_k} sin θ/θ`.
    pub fn forward(&self) -> Vec<Complex64> {
        let sinc = if self.theta == 0.0 {
            1.0
        } else {
            self.theta.sin() / self.theta
        };
        let mut xi = Vec::with_capacity(self.phi.len());
        xi.push(Complex64::from_polar(self.theta.cos(), self.phi[0]));
        for (k, &tk) in self.theta_vec.iter().enumerate() {
            xi.push(I * Complex64::from_polar(tk * sinc, self.phi[k + 1]));
        }
        xi
    }

    /// Whether `e^{Σ η_k a_k⁺ a₁}` is finite, i.e. `ξ₁ ≠ 0`.
    pub fn has_disentangled_chart(&self) -> bool {
        self.theta.cos() > 1e-8
    }
}

/// Inverts the forward map on the chart `φ₁ = arg ξ₁`, `θ ∈ [0, π/2]`,
/// `θ_k = θ|ξ_k|/sin θ`, `φ_k = arg ξ_k − π/2`.
pub fn parametrize_group_element(state: &SuMState) -> GroupElementParams {
    let xi = &state.xi;
    let head = xi[0].norm();
    let rest = xi[1..].iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    let theta = rest.atan2(head);
    let phi1 = if head == 0.0 { 0.0 } else { xi[0].arg() };

    let mut phi = vec![phi1];
    let mut theta_vec = Vec::with_capacity(xi.len() - 1);
    for c in &xi[1..] {
        phi.push(c.arg() - FRAC_PI_2);
        theta_vec.push(if theta > 0.0 { theta * c.norm() / theta.sin() } else { 0.0 });
    }
    let zeta: Vec<Complex64> = theta_vec
        .iter()
        .zip(&phi[1..])
        .map(|(&tk, &pk)| Complex64::from_polar(tk, pk - phi1))
        .collect();
    let tan = theta.tan();
    let u = I * tan;
    // u/θ → i as θ → 0
    let u_over_theta = if theta > 0.0 { u / theta } else { I };
    let eta = zeta.iter().map(|z| u_over_theta * z).collect();
    GroupElementParams {
        phi,
        theta_vec,
        theta,
        u,
        eta,
        zeta,
    }
}

/// Which power of `(1 + |u|²)` normalizes `e^{uJ₊}|N,0,…,0⟩`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormalizationExponent {
    /// `(1 + |u|²)^{−N/2}`
    HalfN,
    /// `(1 + |u|²)^{−N}`
    FullN,
    /// Both candidates agree (e.g. `u = 0` or `N = 0`).
    Indistinguishable,
    Neither,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalizationCheck {
    /// `1/‖e^{uJ₊}|N,0,…⟩‖`
    pub measured: f64,
    pub half_power: f64,
    pub full_power: f64,
    pub matching: NormalizationExponent,
}

impl NormalizationCheck {
    fn classify(measured: f64, u: Complex64, particles: usize) -> Self {
        let base = 1.0 + u.norm_sqr();
        let half_power = base.powf(-0.5 * particles as f64);
        let full_power = base.powf(-(particles as f64));
        let close = |a: f64, b: f64| (a - b).abs() <= 1e-10 * a.abs().max(b.abs()).max(f64::MIN_POSITIVE);
        let matching = match (close(measured, half_power), close(measured, full_power)) {
            (true, true) => NormalizationExponent::Indistinguishable,
            (true, false) => NormalizationExponent::HalfN,
            (false, true) => NormalizationExponent::FullN,
            (false, false) => NormalizationExponent::Neither,
        };
        Self {
            measured,
            half_power,
            full_power,
            matching,
        }
    }
}

/// The three group-theoretic constructions of `|ξ⟩` from the extremal state.
#[derive(Debug, Clone)]
pub struct DisentangledForms {
    /// `E|N,0,…⟩ = e^{iS} e^{iD}|N,0,…⟩`
    pub group_applied: SectorVector,
    /// `T(ζ)|N,0,…⟩`
    pub translated: SectorVector,
    /// `e^{Σ η_k a_k⁺ a₁}|N,0,…⟩`, normalized; `None` when `ξ₁ = 0`.
    pub disentangled: Option<SectorVector>,
    pub normalization: Option<NormalizationCheck>,
    /// `e^{iφ₁N}`, the phase relating `T(ζ)|N,0,…⟩` to `|ξ⟩`.
    pub extremal_phase: Complex64,
}

/// Residuals of the three constructions against the symmetric Fock expansion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DisentangledResiduals {
    pub group_applied: f64,
    pub translated: f64,
    pub disentangled: Option<f64>,
    /// Distance between the fitted global phase of `T(ζ)|N,0,…⟩` and `e^{iφ₁N}`.
    pub phase_mismatch: f64,
}

impl DisentangledForms {
    /// Compares each form with `reference` up to one fitted global phase.
    pub fn residuals(&self, reference: &SectorVector) -> DisentangledResiduals {
        let r = reference.amps().as_slice();
        let aligned = |v: &SectorVector| {
            let a = v.amps().as_slice();
            let ph = fitted_phase(a, r);
            let rotated: Vec<Complex64> = a.iter().map(|x| x * ph).collect();
            (max_abs_diff(&rotated, r), ph)
        };
        let (translated, fitted) = aligned(&self.translated);
        DisentangledResiduals {
            group_applied: aligned(&self.group_applied).0,
            translated,
            disentangled: self.disentangled.as_ref().map(|v| aligned(v).0),
            phase_mismatch: (fitted - self.extremal_phase).norm(),
        }
    }
}

fn extremal_state(basis: &Arc<FockBasis>) -> Result<SectorVector> {
    let mut occ = vec![0u32; basis.sites()];
    occ[0] = basis.particles() as u32;
    SectorVector::basis_state(Arc::clone(basis), &occ)
}

/// Builds `S`, `D`, the `T(ζ)` generator and the `η` generator as sector
/// matrices and applies their exponentials to `|N,0,…,0⟩`.
pub fn disentangled_action(
    params: &GroupElementParams,
    state: &SuMState,
    basis: &Arc<FockBasis>,
) -> Result<DisentangledForms> {
    basis.check_sector(state.sites(), state.particles)?;
    if params.phi.len() != state.sites() {
        return Err(Error::InvalidArgument("group parameters do not match the lattice".into()));
    }
    let dim = basis.dim();
    let extremal = extremal_state(basis)?;
    let hops: Vec<(CMatrix, CMatrix)> = (1..state.sites())
        .map(|k| Ok((fock::hopping_operator(basis, 0, k)?, fock::hopping_operator(basis, k, 0)?)))
        .collect::<Result<_>>()?;

    let s_phases = CVector::from_iterator(
        dim,
        basis.states().iter().map(|occ| {
            let angle: f64 = occ
                .as_slice()
                .iter()
                .zip(&params.phi)
                .map(|(&n, &p)| n as f64 * p)
                .sum();
            Complex64::from_polar(1.0, angle)
        }),
    );

    let mut d = CMatrix::zeros(dim, dim);
    let mut t_gen = CMatrix::zeros(dim, dim);
    let mut eta_gen = CMatrix::zeros(dim, dim);
    for (k, (out_of_k, into_k)) in hops.iter().enumerate() {
        d += (out_of_k + into_k).scale(params.theta_vec[k]);
        t_gen += out_of_k * params.zeta[k].conj() + into_k * params.zeta[k];
        eta_gen += into_k * params.eta[k];
    }

    let after_d = expm_hermitian(&d, I) * extremal.amps();
    let group_applied = after_d.component_mul(&s_phases);
    let translated = expm_hermitian(&t_gen, I) * extremal.amps();

    let (disentangled, normalization) = if params.has_disentangled_chart() {
        let raw = expm(&eta_gen) * extremal.amps();
        let raw_norm = raw.norm();
        let check = NormalizationCheck::classify(1.0 / raw_norm, params.u, state.particles);
        (
            Some(SectorVector::new(Arc::clone(basis), raw.unscale(raw_norm))?),
            Some(check),
        )
    } else {
        (None, None)
    };

    Ok(DisentangledForms {
        group_applied: SectorVector::new(Arc::clone(basis), group_applied)?,
        translated: SectorVector::new(Arc::clone(basis), translated)?,
        disentangled,
        normalization,
        extremal_phase: Complex64::from_polar(1.0, params.phi[0] * state.particles as f64),
    })
}

/// Two-mode reduction to the standard SU(2) coherent state.
#[derive(Debug, Clone, PartialEq)]
pub struct Su2Reduction {
    /// Stereographic coordinate `z = ξ₂/ξ₁`.
    pub z: Complex64,
    /// `φ₁ = arg ξ₁`
    pub phase: f64,
    /// `C_s(N) z^s/(1 + |z|²)^{N/2}` on `|N − s, s⟩`, `s = 0..=N`.
    pub spin_amplitudes: Vec<Complex64>,
}

impl Su2Reduction {
    /// The reduction expressed in the two-site sector, including the global
    /// phase `e^{iNφ₁}`.
    pub fn to_sector(&self, basis: &Arc<FockBasis>) -> Result<SectorVector> {
        let n = self.spin_amplitudes.len() - 1;
        basis.check_sector(2, n)?;
        let global = Complex64::from_polar(1.0, self.phase * n as f64);
        let mut v = SectorVector::zeros(Arc::clone(basis));
        for (s, a) in self.spin_amplitudes.iter().enumerate() {
            let idx = basis
                .index_of(&[(n - s) as u32, s as u32])
                .expect("two-site occupation exists");
            v.amps_mut()[idx] = a * global;
        }
        Ok(v)
    }
}

pub fn su2_reduce(state: &SuMState) -> Result<Su2Reduction> {
    if state.sites() != 2 {
        return Err(Error::InvalidArgument(format!(
            "SU(2) reduction needs two modes, got {}",
            state.sites()
        )));
    }
    let (x1, x2) = (state.xi[0], state.xi[1]);
    if x1.norm() == 0.0 {
        return Err(Error::Pole("ξ₁ = 0: use the localized state on site 2".into()));
    }
    let n = state.particles as u32;
    let z = x2 / x1;
    let denom = (1.0 + z.norm_sqr()).powf(0.5 * n as f64);
    let spin_amplitudes = (0..=n)
        .map(|s| z.powu(s) * (binomial(n, s).sqrt() / denom))
        .collect();
    Ok(Su2Reduction {
        z,
        phase: x1.arg(),
        spin_amplitudes,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FourierDirection {
    SiteToMomentum,
    MomentumToSite,
}

/// `v_k = Σ_j e^{−ik̃j} z_j/√M` (site → momentum) or its inverse.
pub fn mode_fourier(v: &[Complex64], direction: FourierDirection) -> Vec<Complex64> {
    if v.is_empty() {
        return Vec::new();
    }
    let f = dft_matrix(v.len());
    let input = CVector::from_column_slice(v);
    let out = match direction {
        FourierDirection::SiteToMomentum => f * input,
        FourierDirection::MomentumToSite => f.ad_mul(&input),
    };
    out.iter().copied().collect()
}
