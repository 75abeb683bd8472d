//! Mean-field flows of the Glauber product state (discrete nonlinear
//! Schrödinger equation) and of the fixed-number SU(M) coherent state.
//!
//! The two flows share one kernel,
//! `i ż_j = U_eff |z_j|² z_j − Σ_ℓ T_{jℓ} z_ℓ`,
//! with `U_eff = U` for `|Z⟩` and `U_eff = U(N−1)/N` for `|ξ⟩` in the
//! variables `ψ_j = √N ξ_j`. Right-hand sides return `dz/dt`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::cs_algebra::SuMState;
use crate::error::{Error, Result};
use crate::model::{BhParams, Energy, HoppingMatrix};
use crate::serde_complex;

const MINUS_I: Complex64 = Complex64::new(0.0, -1.0);

/// Glauber amplitudes `z_j` evolving under the DNLS flow.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DnlsState {
    #[serde(with = "serde_complex::vec")]
    pub z: Vec<Complex64>,
}

impl DnlsState {
    pub fn new(z: Vec<Complex64>) -> Self {
        Self { z }
    }

    pub fn norm_sqr(&self) -> f64 {
        self.z.iter().map(|c| c.norm_sqr()).sum()
    }
}

/// `ψ_j = √N ξ_j` for an `N`-boson SU(M) coherent state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PsiState {
    #[serde(rename = "N")]
    particles: usize,
    #[serde(with = "serde_complex::vec")]
    psi: Vec<Complex64>,
}

impl PsiState {
    /// Requires `Σ|ψ_j|² = N` within `1e-10`.
    pub fn new(particles: usize, psi: Vec<Complex64>) -> Result<Self> {
        if particles == 0 {
            return Err(Error::InvalidArgument("the SU(M) flow needs N ≥ 1".into()));
        }
        let norm: f64 = psi.iter().map(|c| c.norm_sqr()).sum();
        if (norm - particles as f64).abs() > 1e-10 * particles as f64 {
            return Err(Error::InvalidArgument(format!(
                "Σ|ψ_j|² = {norm} but N = {particles}"
            )));
        }
        Ok(Self { particles, psi })
    }

    pub fn from_sum(state: &SuMState) -> Result<Self> {
        Self::new(state.particles(), state.psi())
    }

    /// Wraps evolved amplitudes without re-checking the norm.
    pub fn from_evolved(particles: usize, psi: Vec<Complex64>) -> Self {
        Self { particles, psi }
    }

    pub fn particles(&self) -> usize {
        self.particles
    }

    pub fn psi(&self) -> &[Complex64] {
        &self.psi
    }

    pub fn norm_sqr(&self) -> f64 {
        self.psi.iter().map(|c| c.norm_sqr()).sum()
    }
}

/// `U(N−1)/N`.
pub fn effective_interaction(interaction: f64, particles: usize) -> f64 {
    interaction * (particles as f64 - 1.0) / particles as f64
}

/// Shared kernel: writes `dz/dt = −i(U_eff |z|² z − T z)` into `out`.
pub fn lattice_rhs(z: &[Complex64], u_eff: f64, hopping: &HoppingMatrix, out: &mut [Complex64]) {
    let sites = hopping.sites();
    for j in 0..sites {
        let mut hop = Complex64::new(0.0, 0.0);
        for (t, zl) in hopping.row(j).iter().zip(z) {
            if *t != 0.0 {
                hop += zl * *t;
            }
        }
        out[j] = MINUS_I * (z[j] * (u_eff * z[j].norm_sqr()) - hop);
    }
}

/// `−Σ_{j,ℓ} T_{jℓ} z̄_j z_ℓ`.
pub fn hopping_energy(z: &[Complex64], hopping: &HoppingMatrix) -> Complex64 {
    hopping
        .nonzero()
        .map(|(j, l, t)| z[j].conj() * z[l] * t)
        .sum::<Complex64>()
        * -1.0
}

fn nonlinear_energy(z: &[Complex64], u_eff: f64, hopping: &HoppingMatrix) -> Energy {
    let onsite: f64 = z.iter().map(|c| c.norm_sqr().powi(2)).sum();
    Energy::from_complex(hopping_energy(z, hopping) + 0.5 * u_eff * onsite)
}

fn check_len(len: usize, params: &BhParams) -> Result<()> {
    if len != params.sites() {
        return Err(Error::InvalidArgument(format!(
            "state has {len} components for {} sites",
            params.sites()
        )));
    }
    Ok(())
}

/// `dz/dt` with `i ż_j = U z_j|z_j|² − Σ_ℓ T_{ℓj} z_ℓ`.
pub fn rhs_dnls(state: &DnlsState, params: &BhParams) -> Result<Vec<Complex64>> {
    check_len(state.z.len(), params)?;
    let mut out = vec![Complex64::new(0.0, 0.0); state.z.len()];
    lattice_rhs(&state.z, params.interaction, &params.hopping, &mut out);
    Ok(out)
}

/// `(U/2)Σ|z_i|⁴ − Σ_{j,ℓ} T_{jℓ} z̄_j z_ℓ`.
pub fn energy_dnls(state: &DnlsState, params: &BhParams) -> Result<Energy> {
    check_len(state.z.len(), params)?;
    Ok(nonlinear_energy(&state.z, params.interaction, &params.hopping))
}

/// `dψ/dt` with `i ψ̇_j = U((N−1)/N)|ψ_j|²ψ_j − Σ_ℓ T_{jℓ} ψ_ℓ`.
pub fn rhs_sum(state: &PsiState, params: &BhParams) -> Result<Vec<Complex64>> {
    check_len(state.psi.len(), params)?;
    if state.particles == 0 {
        return Err(Error::InvalidArgument("the SU(M) flow needs N ≥ 1".into()));
    }
    let mut out = vec![Complex64::new(0.0, 0.0); state.psi.len()];
    lattice_rhs(
        &state.psi,
        effective_interaction(params.interaction, state.particles),
        &params.hopping,
        &mut out,
    );
    Ok(out)
}

/// `⟨ξ|H|ξ⟩ = (U(N−1)/(2N))Σ|ψ_j|⁴ − Σ_{j,ℓ} T_{jℓ} ψ̄_j ψ_ℓ`.
pub fn energy_sum(state: &PsiState, params: &BhParams) -> Result<Energy> {
    check_len(state.psi.len(), params)?;
    if state.particles == 0 {
        return Err(Error::InvalidArgument("the SU(M) flow needs N ≥ 1".into()));
    }
    Ok(nonlinear_energy(
        &state.psi,
        effective_interaction(params.interaction, state.particles),
        &params.hopping,
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "scheme", rename_all = "lowercase")]
pub enum MeanFieldScheme {
    Dnls,
    Sum {
        #[serde(rename = "N")]
        particles: usize,
    },
}

impl MeanFieldScheme {
    pub fn effective_interaction(&self, interaction: f64) -> f64 {
        match *self {
            MeanFieldScheme::Dnls => interaction,
            MeanFieldScheme::Sum { particles } => effective_interaction(interaction, particles),
        }
    }
}

/// Analytic orbit `z_j(t) = A e^{i(k̃j − ωt)}` on a homogeneous ring.
#[derive(Debug, Clone, PartialEq)]
pub struct PlaneWave {
    pub z: Vec<Complex64>,
    pub omega: f64,
}

impl PlaneWave {
    pub fn at(&self, t: f64) -> Vec<Complex64> {
        let phase = Complex64::from_polar(1.0, -self.omega * t);
        self.z.iter().map(|z| z * phase).collect()
    }
}

/// Plane wave of mode `k ∈ [1, M]` with `ω = U_eff|A|² − ε_k`, where `ε_k`
/// is the ring's single-particle dispersion (`2T cos k̃` for `M ≥ 3`,
/// `T cos k̃` for the single-bond dimer, `0` for one site).
pub fn plane_wave(
    sites: usize,
    k: usize,
    amplitude: Complex64,
    params: &BhParams,
    scheme: MeanFieldScheme,
) -> Result<PlaneWave> {
    if sites != params.sites() {
        return Err(Error::InvalidArgument(format!(
            "plane wave on {sites} sites for a {}-site model",
            params.sites()
        )));
    }
    if let MeanFieldScheme::Sum { particles: 0 } = scheme {
        return Err(Error::InvalidArgument("the SU(M) flow needs N ≥ 1".into()));
    }
    let t = params
        .hopping
        .ring_amplitude()
        .ok_or_else(|| Error::Unsupported("plane waves need a homogeneous periodic ring".into()))?;
    let kt = 2.0 * PI * k as f64 / sites as f64;
    let bonds = match sites {
        1 => 0.0,
        2 => 1.0,
        _ => 2.0,
    };
    let omega = scheme.effective_interaction(params.interaction) * amplitude.norm_sqr() - bonds * t * kt.cos();
    let z = (1..=sites)
        .map(|j| amplitude * Complex64::from_polar(1.0, kt * j as f64))
        .collect();
    Ok(PlaneWave { z, omega })
}

/// `max_j |ż_j + iω z_j|` for a plane wave substituted into the flow.
pub fn plane_wave_residual(wave: &PlaneWave, params: &BhParams, scheme: MeanFieldScheme) -> f64 {
    let mut out = vec![Complex64::new(0.0, 0.0); wave.z.len()];
    lattice_rhs(&wave.z, scheme.effective_interaction(params.interaction), &params.hopping, &mut out);
    out.iter()
        .zip(&wave.z)
        .map(|(d, z)| (d - MINUS_I * z * wave.omega).norm())
        .fold(0.0, f64::max)
}
