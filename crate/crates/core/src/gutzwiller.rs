//! Site-factorized Gutzwiller trial state `|F⟩ = Π_i Σ_n f^i_n |n⟩_i`.
//!
//! The coefficient table is truncated at `n_max` with the closure
//! `f^i_{n_max+1} = 0`. Dynamics follow `i ḟ^i_m = ∂ℋ/∂f̄^i_m` with the
//! bracket `{A, B} = −i Σ (∂A/∂f ∂B/∂f̄ − ∂A/∂f̄ ∂B/∂f)`.

use std::sync::Arc;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::cs_algebra::{gaussian, poisson_tail, GlauberState, SECTOR_TAIL_TARGET};
use crate::error::{Error, Result};
use crate::fock::{FockBasis, SectorVector};
use crate::linalg::CVector;
use crate::mf_dynamics::hopping_energy;
use crate::model::{BhParams, Energy, HoppingMatrix};
use crate::serde_complex;

/// Tolerance on the per-site norms `I_i` at construction.
pub const SITE_NORM_TOLERANCE: f64 = 1e-10;

/// Default finite-difference step for the bracket oracles.
pub const FD_STEP: f64 = 1e-6;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const MINUS_I: Complex64 = Complex64::new(0.0, -1.0);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawState")]
pub struct GutzwillerState {
    #[serde(rename = "M")]
    sites: usize,
    n_max: usize,
    #[serde(with = "serde_complex::table")]
    f: Vec<Vec<Complex64>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawState {
    #[serde(rename = "M")]
    sites: usize,
    n_max: usize,
    #[serde(with = "serde_complex::table")]
    f: Vec<Vec<Complex64>>,
}

impl TryFrom<RawState> for GutzwillerState {
    type Error = Error;

    fn try_from(raw: RawState) -> Result<Self> {
        if raw.f.len() != raw.sites {
            return Err(Error::InvalidArgument(format!(
                "f has {} rows for M = {}",
                raw.f.len(),
                raw.sites
            )));
        }
        let state = Self::new(raw.f)?;
        if state.n_max != raw.n_max {
            return Err(Error::InvalidArgument(format!(
                "f rows have {} entries for n_max = {}",
                state.n_max + 1,
                raw.n_max
            )));
        }
        Ok(state)
    }
}

impl GutzwillerState {
    /// Rows are sites, columns `n = 0..=n_max`. Each row must have unit norm.
    pub fn new(f: Vec<Vec<Complex64>>) -> Result<Self> {
        let state = Self::from_table(f)?;
        for (i, row) in state.f.iter().enumerate() {
            let norm: f64 = row.iter().map(|c| c.norm_sqr()).sum();
            if (norm - 1.0).abs() > SITE_NORM_TOLERANCE {
                return Err(Error::InvalidArgument(format!(
                    "site {} has norm {norm}, expected 1",
                    i + 1
                )));
            }
        }
        Ok(state)
    }

    /// Shape and finiteness checks only.
    fn from_table(f: Vec<Vec<Complex64>>) -> Result<Self> {
        let sites = f.len();
        if sites == 0 {
            return Err(Error::InvalidLattice("a Gutzwiller state needs M ≥ 1".into()));
        }
        let width = f[0].len();
        if width == 0 {
            return Err(Error::InvalidArgument("coefficient rows are empty".into()));
        }
        if let Some(i) = f.iter().position(|r| r.len() != width) {
            return Err(Error::InvalidArgument(format!(
                "site {} has {} coefficients, site 1 has {width}",
                i + 1,
                f[i].len()
            )));
        }
        if !f.iter().flatten().all(|c| c.re.is_finite() && c.im.is_finite()) {
            return Err(Error::InvalidArgument("non-finite coefficient".into()));
        }
        Ok(Self {
            sites,
            n_max: width - 1,
            f,
        })
    }

    /// Product of local number states `|m_1⟩ ⊗ … ⊗ |m_M⟩`.
    pub fn fock_product(occupations: &[u32], n_max: usize) -> Result<Self> {
        let f = occupations
            .iter()
            .enumerate()
            .map(|(i, &m)| {
                if m as usize > n_max {
                    return Err(Error::Truncation {
                        site: i + 1,
                        n_max,
                        tail: 1.0,
                    });
                }
                let mut row = vec![ZERO; n_max + 1];
                row[m as usize] = Complex64::new(1.0, 0.0);
                Ok(row)
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(f)
    }

    /// Gaussian coefficients on `n < n_max`, normalized per site. The top
    /// level is left empty.
    pub fn random<R: Rng + ?Sized>(sites: usize, n_max: usize, rng: &mut R) -> Self {
        let f = (0..sites)
            .map(|_| {
                let mut row: Vec<Complex64> = (0..=n_max)
                    .map(|n| {
                        if n < n_max || n_max == 0 {
                            Complex64::new(gaussian(rng), gaussian(rng))
                        } else {
                            ZERO
                        }
                    })
                    .collect();
                let norm = row.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
                row.iter_mut().for_each(|c| *c /= norm);
                row
            })
            .collect();
        Self { sites, n_max, f }
    }

    /// Rebuilds a state from a flat row-major vector without norm checks,
    /// e.g. after integration.
    pub fn from_flat(sites: usize, n_max: usize, flat: &[Complex64]) -> Result<Self> {
        if flat.len() != sites * (n_max + 1) {
            return Err(Error::InvalidArgument(format!(
                "flat vector of length {} for M = {sites}, n_max = {n_max}",
                flat.len()
            )));
        }
        Self::from_table(flat.chunks(n_max + 1).map(|c| c.to_vec()).collect())
    }

    pub fn flatten(&self) -> Vec<Complex64> {
        self.f.iter().flatten().copied().collect()
    }

    pub fn sites(&self) -> usize {
        self.sites
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn table(&self) -> &[Vec<Complex64>] {
        &self.f
    }

    /// Coefficients of site `i` (0-based).
    pub fn site(&self, i: usize) -> &[Complex64] {
        &self.f[i]
    }
}

/// `max(30, ⌈4 N̄/M⌉)`.
pub fn default_n_max(mean_number: f64, sites: usize) -> usize {
    let per_site = (4.0 * mean_number / sites.max(1) as f64).ceil();
    30usize.max(per_site as usize)
}

fn site_alpha(row: &[Complex64]) -> Complex64 {
    row.windows(2)
        .enumerate()
        .map(|(m, w)| w[0].conj() * w[1] * ((m + 1) as f64).sqrt())
        .sum()
}

fn alpha_flat(flat: &[Complex64], width: usize) -> Vec<Complex64> {
    flat.chunks(width).map(site_alpha).collect()
}

/// `α_i = Σ_m √(m+1) f̄^i_m f^i_{m+1}`.
pub fn order_parameter_alpha(state: &GutzwillerState) -> Vec<Complex64> {
    state.f.iter().map(|r| site_alpha(r)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MeanFields {
    #[serde(with = "serde_complex::vec")]
    pub alpha: Vec<Complex64>,
    #[serde(rename = "Phi", with = "serde_complex::vec")]
    pub phi: Vec<Complex64>,
}

/// `α_i` together with `Φ_i = Σ_ℓ T_{ℓi} α_ℓ`.
pub fn mean_fields(state: &GutzwillerState, hopping: &HoppingMatrix) -> Result<MeanFields> {
    check_sites(state, hopping.sites())?;
    let alpha = order_parameter_alpha(state);
    let phi = hopping.apply(&alpha);
    Ok(MeanFields { alpha, phi })
}

fn check_sites(state: &GutzwillerState, sites: usize) -> Result<()> {
    if state.sites != sites {
        return Err(Error::InvalidArgument(format!(
            "state has {} sites, model has {sites}",
            state.sites
        )));
    }
    Ok(())
}

fn energy_flat(flat: &[Complex64], width: usize, params: &BhParams) -> Complex64 {
    let onsite: f64 = flat
        .chunks(width)
        .flat_map(|row| row.iter().enumerate())
        .map(|(n, c)| (n * n.saturating_sub(1)) as f64 * c.norm_sqr())
        .sum();
    hopping_energy(&alpha_flat(flat, width), &params.hopping) + 0.5 * params.interaction * onsite
}

/// `ℋ = (U/2)Σ_jΣ_n(n²−n)|f^j_n|² − Σ_{j,ℓ} T_{jℓ} ᾱ_j α_ℓ`.
pub fn energy_f(state: &GutzwillerState, params: &BhParams) -> Result<Energy> {
    check_sites(state, params.sites())?;
    Ok(Energy::from_complex(energy_flat(
        &state.flatten(),
        state.n_max + 1,
        params,
    )))
}

/// Writes `dF/dt` for a flat row-major table into `out`.
pub fn gutzwiller_rhs_flat(flat: &[Complex64], n_max: usize, params: &BhParams, out: &mut [Complex64]) {
    let width = n_max + 1;
    let alpha = alpha_flat(flat, width);
    let phi = params.hopping.apply(&alpha);
    let half_u = 0.5 * params.interaction;
    for (i, (row, drow)) in flat.chunks(width).zip(out.chunks_mut(width)).enumerate() {
        let (p, pc) = (phi[i], phi[i].conj());
        for m in 0..width {
            let mut h = row[m] * (half_u * (m * m.saturating_sub(1)) as f64);
            if m + 1 < width {
                h -= row[m + 1] * pc * ((m + 1) as f64).sqrt();
            }
            if m > 0 {
                h -= row[m - 1] * p * (m as f64).sqrt();
            }
            drow[m] = MINUS_I * h;
        }
    }
}

/// `dF/dt` from `i ḟ^i_m = (U/2)(m²−m)f^i_m − √(m+1) f^i_{m+1}Φ̄_i − √m f^i_{m−1}Φ_i`.
pub fn rhs_gutzwiller(state: &GutzwillerState, params: &BhParams) -> Result<Vec<Vec<Complex64>>> {
    check_sites(state, params.sites())?;
    let flat = state.flatten();
    let mut out = vec![ZERO; flat.len()];
    gutzwiller_rhs_flat(&flat, state.n_max, params, &mut out);
    Ok(out.chunks(state.n_max + 1).map(|c| c.to_vec()).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Invariants {
    #[serde(rename = "N_bar")]
    pub n_bar: f64,
    #[serde(rename = "I")]
    pub site_norms: Vec<f64>,
}

/// `N̄ = Σ_jΣ_n n|f^j_n|²` and `I_j = Σ_n |f^j_n|²`.
pub fn invariants_f(state: &GutzwillerState) -> Invariants {
    let n_bar = state
        .f
        .iter()
        .flat_map(|r| r.iter().enumerate())
        .map(|(n, c)| n as f64 * c.norm_sqr())
        .sum();
    let site_norms = state
        .f
        .iter()
        .map(|r| r.iter().map(|c| c.norm_sqr()).sum())
        .collect();
    Invariants { n_bar, site_norms }
}

/// Poisson coefficients `f^i_m = e^{−|z_i|²/2} z_i^m/√m!`.
pub fn coherent_embed(z: &GlauberState, n_max: usize) -> Result<GutzwillerState> {
    let tails: Vec<f64> = z.z().iter().map(|zi| poisson_tail(zi.norm_sqr(), n_max)).collect();
    let (worst, tail) = tails
        .iter()
        .copied()
        .enumerate()
        .fold((0, 0.0), |acc, (i, t)| if t > acc.1 { (i, t) } else { acc });
    if tail > SECTOR_TAIL_TARGET {
        return Err(Error::Truncation {
            site: worst + 1,
            n_max,
            tail,
        });
    }
    let f = z
        .z()
        .iter()
        .map(|&zi| {
            let mut row = Vec::with_capacity(n_max + 1);
            let mut c = Complex64::new((-0.5 * zi.norm_sqr()).exp(), 0.0);
            for m in 0..=n_max {
                row.push(c);
                c *= zi / ((m + 1) as f64).sqrt();
            }
            row
        })
        .collect();
    GutzwillerState::new(f)
}

/// Projection of `|F⟩` onto a fixed-`N` sector: `⟨m|F⟩ = Π_i f^i_{m_i}`,
/// zero whenever some `m_i > n_max`.
pub fn product_amplitudes(state: &GutzwillerState, basis: &Arc<FockBasis>) -> Result<SectorVector> {
    if basis.sites() != state.sites {
        return Err(Error::SectorMismatch {
            expected_sites: state.sites,
            expected_particles: basis.particles(),
            sites: basis.sites(),
            particles: basis.particles(),
        });
    }
    let amps = CVector::from_iterator(
        basis.dim(),
        basis.states().iter().map(|occ| {
            occ.as_slice()
                .iter()
                .zip(&state.f)
                .map(|(&m, row)| row.get(m as usize).copied().unwrap_or(ZERO))
                .product::<Complex64>()
        }),
    );
    SectorVector::new(basis.clone(), amps)
}

/// Analytic `{α_j, ᾱ_j} = −i(1 − (n_max+1)|f^j_{n_max}|²)`; the second term is
/// the truncation defect, zero when the top level is empty.
pub fn alpha_bracket_exact(state: &GutzwillerState, j: usize) -> Complex64 {
    let row = &state.f[j];
    let norm: f64 = row.iter().map(|c| c.norm_sqr()).sum();
    MINUS_I * (norm - (state.n_max + 1) as f64 * row[state.n_max].norm_sqr())
}

/// Wirtinger gradients `(∂A/∂f_k, ∂A/∂f̄_k)` by central differences.
fn wirtinger_gradient<A>(flat: &[Complex64], a: &A, step: f64) -> Vec<(Complex64, Complex64)>
where
    A: Fn(&[Complex64]) -> Complex64,
{
    let mut work = flat.to_vec();
    (0..flat.len())
        .map(|k| {
            let orig = work[k];
            let mut diff = |delta: Complex64| {
                work[k] = orig + delta;
                let plus = a(&work);
                work[k] = orig - delta;
                let minus = a(&work);
                work[k] = orig;
                (plus - minus) / (2.0 * step)
            };
            let dx = diff(Complex64::new(step, 0.0));
            let dy = diff(Complex64::new(0.0, step));
            let i = Complex64::new(0.0, 1.0);
            (0.5 * (dx - i * dy), 0.5 * (dx + i * dy))
        })
        .collect()
}

fn check_step(flat: &[Complex64], step: f64) -> Result<()> {
    let scale = flat.iter().map(|c| c.norm()).fold(1.0, f64::max);
    if !step.is_finite() || step <= 1e3 * f64::EPSILON * scale {
        return Err(Error::InvalidArgument(format!(
            "finite-difference step {step:e} underflows against coefficients of size {scale:e}"
        )));
    }
    Ok(())
}

/// `{A, B}` at `state` by central finite differences over every `f^j_n`
/// and `f̄^j_n`. `A` and `B` act on the flat row-major table.
pub fn bracket_fd<A, B>(state: &GutzwillerState, a: A, b: B, step: f64) -> Result<Complex64>
where
    A: Fn(&[Complex64]) -> Complex64,
    B: Fn(&[Complex64]) -> Complex64,
{
    let flat = state.flatten();
    check_step(&flat, step)?;
    let ga = wirtinger_gradient(&flat, &a, step);
    let gb = wirtinger_gradient(&flat, &b, step);
    let sum: Complex64 = ga
        .iter()
        .zip(&gb)
        .map(|((a_f, a_fc), (b_f, b_fc))| a_f * b_fc - a_fc * b_f)
        .sum();
    Ok(MINUS_I * sum)
}

fn check_site_index(state: &GutzwillerState, site: usize) -> Result<()> {
    if site >= state.sites {
        return Err(Error::SiteOutOfRange {
            site: site + 1,
            sites: state.sites,
        });
    }
    Ok(())
}

/// `{α_j, ᾱ_ℓ}` by finite differences (0-based sites).
pub fn poisson_bracket_fd(state: &GutzwillerState, j: usize, l: usize) -> Result<Complex64> {
    poisson_bracket_fd_with_step(state, j, l, FD_STEP)
}

pub fn poisson_bracket_fd_with_step(state: &GutzwillerState, j: usize, l: usize, step: f64) -> Result<Complex64> {
    check_site_index(state, j)?;
    check_site_index(state, l)?;
    let w = state.n_max + 1;
    bracket_fd(
        state,
        |f| site_alpha(&f[j * w..(j + 1) * w]),
        |f| site_alpha(&f[l * w..(l + 1) * w]).conj(),
        step,
    )
}

/// `{α_j, N_ℓ}` with `N_ℓ = Σ_n n|f^ℓ_n|²`, by finite differences.
pub fn alpha_number_bracket_fd(state: &GutzwillerState, j: usize, l: usize) -> Result<Complex64> {
    check_site_index(state, j)?;
    check_site_index(state, l)?;
    let w = state.n_max + 1;
    bracket_fd(
        state,
        |f| site_alpha(&f[j * w..(j + 1) * w]),
        |f| {
            f[l * w..(l + 1) * w]
                .iter()
                .enumerate()
                .map(|(n, c)| Complex64::new(n as f64 * c.norm_sqr(), 0.0))
                .sum()
        },
        FD_STEP,
    )
}

/// `ḟ^i_m = {f^i_m, ℋ} = −i ∂ℋ/∂f̄^i_m` with the gradient taken by finite
/// differences of [`energy_f`].
pub fn hamiltonian_flow_fd(state: &GutzwillerState, params: &BhParams) -> Result<Vec<Vec<Complex64>>> {
    check_sites(state, params.sites())?;
    let flat = state.flatten();
    check_step(&flat, FD_STEP)?;
    let w = state.n_max + 1;
    let grad = wirtinger_gradient(&flat, &|f: &[Complex64]| energy_flat(f, w, params), FD_STEP);
    let flow: Vec<Complex64> = grad.iter().map(|(_, d_fc)| MINUS_I * d_fc).collect();
    Ok(flow.chunks(w).map(|c| c.to_vec()).collect())
}
