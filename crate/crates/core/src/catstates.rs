//! Orthogonal families of localized SU(M) coherent states and the
//! equal-weight superpositions `|S_k⟩ = Σ_ℓ e^{ik̃ℓ}/√M |ξ(ℓ)⟩` built on them.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::cs_algebra::{cdot, glauber_overlap, sum_fock_amplitudes, GlauberState, SuMState};
use crate::error::{Error, Result};
use crate::fock::{self, FockBasis, Occupation, SectorVector};
use crate::linalg::{CMatrix, CVector, HermitianEigen};
use crate::serde_complex;

/// Tolerance on the family Gram matrix and on cat-state norms.
pub const ORTHOGONALITY_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LocalizedFamily {
    #[serde(rename = "N")]
    particles: usize,
    epsilon: f64,
    seed: Option<u64>,
    /// `xis[ℓ][j] = ξ_j(ℓ+1)`.
    #[serde(with = "serde_complex::table")]
    xis: Vec<Vec<Complex64>>,
}

/// Near-localized inputs `u_j(ℓ) = √(1−(M−1)ε)δ_{jℓ} + √ε e^{iθ}(1−δ_{jℓ})`
/// with seeded random phases, made orthonormal by symmetric (Löwdin)
/// orthogonalization.
pub fn build_localized_family(sites: usize, particles: usize, epsilon: f64, seed: u64) -> Result<LocalizedFamily> {
    if sites == 0 {
        return Err(Error::InvalidLattice("a family needs M ≥ 1".into()));
    }
    if !epsilon.is_finite() || epsilon < 0.0 || (sites > 1 && epsilon * (sites - 1) as f64 >= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "epsilon = {epsilon} is outside [0, 1/(M−1)) for M = {sites}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let diag = (1.0 - (sites - 1) as f64 * epsilon).sqrt();
    let off = epsilon.sqrt();
    let inputs: Vec<Vec<Complex64>> = (0..sites)
        .map(|l| {
            (0..sites)
                .map(|j| {
                    let theta = rng.random::<f64>() * 2.0 * PI;
                    if j == l {
                        Complex64::new(diag, 0.0)
                    } else {
                        Complex64::from_polar(off, theta)
                    }
                })
                .collect()
        })
        .collect();
    let mut family = LocalizedFamily {
        particles,
        epsilon,
        seed: Some(seed),
        xis: lowdin(&inputs)?,
    };
    if epsilon == 0.0 {
        // exact deltas, free of eigen-solver rounding
        family.xis = inputs;
    }
    family.check_dominance()?;
    Ok(family)
}

/// Symmetric orthogonalization `X = U G^{-1/2}` with `G = U⁺U`.
fn lowdin(vectors: &[Vec<Complex64>]) -> Result<Vec<Vec<Complex64>>> {
    let m = vectors.len();
    let u = CMatrix::from_fn(m, m, |j, l| vectors[l][j]);
    let gram = u.adjoint() * &u;
    let inv_sqrt = HermitianEigen::new(&gram)
        .inverse_sqrt()
        .ok_or_else(|| Error::InvalidArgument("localized inputs are linearly dependent".into()))?;
    let x = u * inv_sqrt;
    Ok((0..m).map(|l| x.column(l).iter().copied().collect()).collect())
}

impl LocalizedFamily {
    /// Wraps explicit vectors `ξ(ℓ)`; each must be normalized. Orthogonality
    /// is not required here, it is checked when cats are built.
    pub fn from_vectors(particles: usize, xis: Vec<Vec<Complex64>>) -> Result<Self> {
        let m = xis.len();
        if m == 0 {
            return Err(Error::InvalidLattice("a family needs M ≥ 1".into()));
        }
        for (l, xi) in xis.iter().enumerate() {
            if xi.len() != m {
                return Err(Error::InvalidArgument(format!(
                    "ξ({}) has {} components for M = {m}",
                    l + 1,
                    xi.len()
                )));
            }
            SuMState::new(particles, xi.clone())?;
        }
        Ok(Self {
            particles,
            epsilon: f64::NAN,
            seed: None,
            xis,
        })
    }

    fn check_dominance(&self) -> Result<()> {
        for (l, xi) in self.xis.iter().enumerate() {
            let own = xi[l].norm_sqr();
            if let Some(j) = (0..xi.len()).find(|&j| j != l && xi[j].norm_sqr() >= own) {
                return Err(Error::InvalidArgument(format!(
                    "ξ({}) is not dominated by site {}: |ξ_{}|² ≥ |ξ_{}|²",
                    l + 1,
                    l + 1,
                    j + 1,
                    l + 1
                )));
            }
        }
        Ok(())
    }

    pub fn sites(&self) -> usize {
        self.xis.len()
    }

    pub fn particles(&self) -> usize {
        self.particles
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// `ξ(ℓ)` for 1-based `ℓ`.
    pub fn xi(&self, l: usize) -> &[Complex64] {
        &self.xis[l - 1]
    }

    pub fn vectors(&self) -> &[Vec<Complex64>] {
        &self.xis
    }

    pub fn states(&self) -> Result<Vec<SuMState>> {
        self.xis
            .iter()
            .map(|xi| SuMState::new(self.particles, xi.clone()))
            .collect()
    }

    /// `G_{hℓ} = Σ_j ξ̄_j(h) ξ_j(ℓ)`.
    pub fn gram(&self) -> CMatrix {
        let m = self.sites();
        CMatrix::from_fn(m, m, |h, l| cdot(&self.xis[h], &self.xis[l]))
    }

    /// `max_{hℓ} |G_{hℓ} − δ_{hℓ}|`.
    pub fn gram_residual(&self) -> f64 {
        let g = self.gram();
        let m = self.sites();
        (0..m)
            .flat_map(|h| (0..m).map(move |l| (h, l)))
            .map(|(h, l)| (g[(h, l)] - if h == l { 1.0 } else { 0.0 }).norm())
            .fold(0.0, f64::max)
    }

    /// Smallest on-site weight `min_ℓ |ξ_ℓ(ℓ)|²`.
    pub fn min_localized_weight(&self) -> f64 {
        self.xis
            .iter()
            .enumerate()
            .map(|(l, xi)| xi[l].norm_sqr())
            .fold(f64::INFINITY, f64::min)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CatState {
    family: LocalizedFamily,
    k: usize,
    #[serde(with = "serde_complex::vec")]
    coefficients: Vec<Complex64>,
}

impl CatState {
    pub fn family(&self) -> &LocalizedFamily {
        &self.family
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn coefficients(&self) -> &[Complex64] {
        &self.coefficients
    }

    /// `⟨S|S⟩ = Σ_{hℓ} c̄_h c_ℓ (G_{hℓ})^N`.
    pub fn norm_sqr(&self) -> f64 {
        let g = self.family.gram();
        let n = self.family.particles as u32;
        let c = &self.coefficients;
        let mut total = Complex64::new(0.0, 0.0);
        for h in 0..c.len() {
            for l in 0..c.len() {
                total += c[h].conj() * c[l] * g[(h, l)].powu(n);
            }
        }
        total.re
    }

    /// Fock amplitudes of `|S_k⟩` in the site basis.
    pub fn fock_amplitudes(&self, basis: &Arc<FockBasis>) -> Result<SectorVector> {
        basis.check_sector(self.family.sites(), self.family.particles)?;
        let mut amps = CVector::zeros(basis.dim());
        for (c, state) in self.coefficients.iter().zip(self.family.states()?) {
            amps += sum_fock_amplitudes(&state, basis)?.amps() * *c;
        }
        SectorVector::new(basis.clone(), amps)
    }
}

/// `|S_k⟩` with coefficients `e^{ik̃ℓ}/√M`, `k ∈ [1, M]`.
pub fn build_cat(family: &LocalizedFamily, k: usize) -> Result<CatState> {
    let m = family.sites();
    if k == 0 || k > m {
        return Err(Error::InvalidArgument(format!("k = {k} is outside [1, {m}]")));
    }
    let kt = 2.0 * PI * k as f64 / m as f64;
    let scale = 1.0 / (m as f64).sqrt();
    let coefficients = (1..=m)
        .map(|l| Complex64::from_polar(scale, kt * l as f64))
        .collect();
    let cat = CatState {
        family: family.clone(),
        k,
        coefficients,
    };
    let norm = cat.norm_sqr();
    if (norm - 1.0).abs() > ORTHOGONALITY_TOLERANCE {
        return Err(Error::InvalidArgument(format!(
            "cat state has norm² {norm}; the family is not orthogonal"
        )));
    }
    Ok(cat)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CatObservables {
    /// `⟨S_k|n_i|S_k⟩`.
    pub densities: Vec<f64>,
    pub norm: f64,
}

/// Site densities and norm evaluated in the Fock sector.
pub fn cat_observables(cat: &CatState, basis: &Arc<FockBasis>) -> Result<CatObservables> {
    let v = cat.fock_amplitudes(basis)?;
    let mut densities = vec![0.0; basis.sites()];
    for (occ, a) in basis.states().iter().zip(v.amps().iter()) {
        let w = a.norm_sqr();
        for (d, &n) in densities.iter_mut().zip(occ.as_slice()) {
            *d += w * n as f64;
        }
    }
    Ok(CatObservables {
        densities,
        norm: v.norm(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MomentumAmplitude {
    pub occupation: Occupation,
    pub class: usize,
    #[serde(with = "amplitude_pair")]
    pub amplitude: Complex64,
}

mod amplitude_pair {
    use num_complex::Complex64;
    use serde::{Serialize, Serializer};

    pub fn serialize<S: Serializer>(c: &Complex64, s: S) -> Result<S::Ok, S::Error> {
        [c.re, c.im].serialize(s)
    }
}

/// `⟨p|S_q⟩` for every momentum-mode occupation `p`, tagged with `λ(p)`.
pub fn cat_momentum_amplitudes(cat: &CatState, basis: &Arc<FockBasis>) -> Result<Vec<MomentumAmplitude>> {
    let v = cat.fock_amplitudes(basis)?;
    let w = fock::momentum_transform(basis)?;
    let p_amps = w * v.amps();
    Ok(basis
        .states()
        .iter()
        .zip(p_amps.iter())
        .map(|(p, a)| MomentumAmplitude {
            occupation: p.clone(),
            class: fock::quasimomentum_class(p),
            amplitude: *a,
        })
        .collect())
}

/// Total weight per quasi-momentum class `0..M`.
pub fn class_weights(amplitudes: &[MomentumAmplitude], sites: usize) -> Vec<f64> {
    let mut w = vec![0.0; sites];
    for a in amplitudes {
        w[a.class] += a.amplitude.norm_sqr();
    }
    w
}

/// Class a cat of label `k` is supported on.
pub fn expected_class(k: usize, sites: usize) -> usize {
    k % sites
}

/// Glauber analogue of a localized family member: `x_j(ℓ) = √N δ_{jℓ}`.
pub fn localized_glauber(sites: usize, mean_number: f64, l: usize) -> Result<GlauberState> {
    if l == 0 || l > sites {
        return Err(Error::SiteOutOfRange { site: l, sites });
    }
    let mut z = vec![Complex64::new(0.0, 0.0); sites];
    z[l - 1] = Complex64::new(mean_number.sqrt(), 0.0);
    GlauberState::new(z)
}

/// Largest relative deviation of `|⟨X(h)|X(ℓ)⟩|`, `h ≠ ℓ`, from `e^{−N}`.
pub fn glauber_quasi_orthogonality(sites: usize, mean_number: f64) -> Result<f64> {
    let family = (1..=sites)
        .map(|l| localized_glauber(sites, mean_number, l))
        .collect::<Result<Vec<_>>>()?;
    let target = (-mean_number).exp();
    let mut worst: f64 = 0.0;
    for (h, x) in family.iter().enumerate() {
        for (l, z) in family.iter().enumerate() {
            if h != l {
                let o = glauber_overlap(x, z)?.norm();
                worst = worst.max((o - target).abs() / target);
            }
        }
    }
    Ok(worst)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CatReport {
    #[serde(rename = "M")]
    pub sites: usize,
    #[serde(rename = "N")]
    pub particles: usize,
    pub epsilon: f64,
    pub seed: u64,
    pub k: usize,
    pub gram_residual: f64,
    pub min_localized_weight: f64,
    /// `max_{q} |⟨S_q|S_k⟩ − δ_{qk}|`.
    pub cat_overlap_residual: f64,
    pub norm: f64,
    pub densities: Vec<f64>,
    pub expected_class: usize,
    pub class_weights: Vec<f64>,
    pub out_of_class_weight: f64,
    pub glauber_quasi_orthogonality: f64,
}

/// Everything about one cat state in a single record.
pub fn cat_report(sites: usize, particles: usize, epsilon: f64, seed: u64, k: usize, dim_cap: usize) -> Result<CatReport> {
    let family = build_localized_family(sites, particles, epsilon, seed)?;
    let basis = FockBasis::enumerate_with_cap(sites, particles, dim_cap)?;
    let cat = build_cat(&family, k)?;
    let obs = cat_observables(&cat, &basis)?;
    let target = cat.fock_amplitudes(&basis)?;
    let mut cat_overlap_residual: f64 = 0.0;
    for q in 1..=sites {
        let other = build_cat(&family, q)?.fock_amplitudes(&basis)?;
        let delta = if q == k { 1.0 } else { 0.0 };
        cat_overlap_residual = cat_overlap_residual.max((other.inner(&target)? - delta).norm());
    }
    let amps = cat_momentum_amplitudes(&cat, &basis)?;
    let weights = class_weights(&amps, sites);
    let class = expected_class(k, sites);
    let out_of_class_weight = weights
        .iter()
        .enumerate()
        .filter(|(c, _)| *c != class)
        .map(|(_, w)| w)
        .sum();
    Ok(CatReport {
        sites,
        particles,
        epsilon,
        seed,
        k,
        gram_residual: family.gram_residual(),
        min_localized_weight: family.min_localized_weight(),
        cat_overlap_residual,
        norm: obs.norm,
        densities: obs.densities,
        expected_class: class,
        class_weights: weights,
        out_of_class_weight,
        glauber_quasi_orthogonality: glauber_quasi_orthogonality(sites, particles as f64)?,
    })
}
