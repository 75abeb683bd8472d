//! Independent brute-force Fock-space oracle: states are sparse maps from
//! occupation vectors to amplitudes, built only from `a⁺` and `a`.

#![allow(dead_code)]

use std::collections::BTreeMap;
use std::f64::consts::PI;

use bhvar_core::{Complex64, SectorVector};

pub type Sparse = BTreeMap<Vec<u32>, Complex64>;

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn vacuum(sites: usize) -> Sparse {
    let mut s = Sparse::new();
    s.insert(vec![0; sites], c(1.0, 0.0));
    s
}

pub fn create(s: &Sparse, i: usize) -> Sparse {
    let mut out = Sparse::new();
    for (occ, a) in s {
        let mut o = occ.clone();
        o[i] += 1;
        *out.entry(o).or_insert(c(0.0, 0.0)) += a * (occ[i] as f64 + 1.0).sqrt();
    }
    out
}

pub fn annihilate(s: &Sparse, i: usize) -> Sparse {
    let mut out = Sparse::new();
    for (occ, a) in s {
        if occ[i] == 0 {
            continue;
        }
        let mut o = occ.clone();
        o[i] -= 1;
        *out.entry(o).or_insert(c(0.0, 0.0)) += a * (occ[i] as f64).sqrt();
    }
    out
}

pub fn add(a: &Sparse, b: &Sparse) -> Sparse {
    let mut out = a.clone();
    for (k, v) in b {
        *out.entry(k.clone()).or_insert(c(0.0, 0.0)) += v;
    }
    out
}

pub fn scale(a: &Sparse, f: Complex64) -> Sparse {
    a.iter().map(|(k, v)| (k.clone(), v * f)).collect()
}

/// `⟨a|b⟩`
pub fn inner(a: &Sparse, b: &Sparse) -> Complex64 {
    b.iter()
        .filter_map(|(k, v)| a.get(k).map(|x| x.conj() * v))
        .sum()
}

/// `Σ_i w_i a_i⁺ |s⟩`
pub fn create_combination(s: &Sparse, w: &[Complex64]) -> Sparse {
    w.iter()
        .enumerate()
        .fold(Sparse::new(), |acc, (i, wi)| add(&acc, &scale(&create(s, i), *wi)))
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// `(N!)^{−1/2} (Σ ξ_i a_i⁺)^N |0⟩`
pub fn sum_state(xi: &[Complex64], n: usize) -> Sparse {
    let mut s = vacuum(xi.len());
    for _ in 0..n {
        s = create_combination(&s, xi);
    }
    scale(&s, c(1.0 / factorial(n).sqrt(), 0.0))
}

/// Sector `S` of `|Z⟩`: `e^{−|z|²/2} (Σ z_i a_i⁺)^S/S! |0⟩`.
pub fn glauber_sector(z: &[Complex64], s: usize) -> Sparse {
    let nbar: f64 = z.iter().map(|x| x.norm_sqr()).sum();
    let mut v = vacuum(z.len());
    for _ in 0..s {
        v = create_combination(&v, z);
    }
    scale(&v, c((-0.5 * nbar).exp() / factorial(s), 0.0))
}

/// `(U/2)Σ a_i⁺a_i⁺a_ia_i − Σ_{j,ℓ} T_{jℓ} a_j⁺a_ℓ` applied to `s`.
pub fn bh_apply(s: &Sparse, u: f64, t: &[Vec<f64>]) -> Sparse {
    let m = t.len();
    let mut out = Sparse::new();
    for i in 0..m {
        let pair = create(&create(&annihilate(&annihilate(s, i), i), i), i);
        out = add(&out, &scale(&pair, c(0.5 * u, 0.0)));
    }
    for j in 0..m {
        for l in 0..m {
            if t[j][l] != 0.0 {
                out = add(&out, &scale(&create(&annihilate(s, l), j), c(-t[j][l], 0.0)));
            }
        }
    }
    out
}

/// Explicit `F_{kj} = e^{−2πi kj/M}/√M` with 1-based labels.
pub fn dft(m: usize) -> Vec<Vec<Complex64>> {
    (1..=m)
        .map(|k| {
            (1..=m)
                .map(|j| Complex64::from_polar(1.0 / (m as f64).sqrt(), -2.0 * PI * (k * j) as f64 / m as f64))
                .collect()
        })
        .collect()
}

pub fn mat_vec(a: &[Vec<Complex64>], v: &[Complex64]) -> Vec<Complex64> {
    a.iter()
        .map(|row| row.iter().zip(v).map(|(x, y)| x * y).sum())
        .collect()
}

/// Dense amplitudes of a sparse state in the order of a library sector.
pub fn dense_in(s: &Sparse, like: &SectorVector) -> Vec<Complex64> {
    like.basis()
        .states()
        .iter()
        .map(|occ| s.get(occ.as_slice()).copied().unwrap_or(c(0.0, 0.0)))
        .collect()
}

pub fn max_diff(a: &[Complex64], b: &[Complex64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

/// Residual after removing one global phase fitted on the largest entry.
pub fn phase_free_diff(a: &[Complex64], b: &[Complex64]) -> f64 {
    let k = (0..b.len())
        .max_by(|&i, &j| b[i].norm().total_cmp(&b[j].norm()))
        .unwrap();
    let ph = b[k] / a[k];
    let ph = ph / ph.norm();
    let rotated: Vec<_> = a.iter().map(|x| x * ph).collect();
    max_diff(&rotated, b)
}

/// `z(t) = exp(iTt) z(0)` for a homogeneous ring (`M ≥ 3`) through its
/// plane-wave eigenbasis.
pub fn free_ring_evolution(z0: &[Complex64], t_amp: f64, t: f64) -> Vec<Complex64> {
    let m = z0.len();
    let f = dft(m);
    let modes = mat_vec(&f, z0);
    let evolved: Vec<Complex64> = modes
        .iter()
        .enumerate()
        .map(|(idx, b)| {
            let k = (idx + 1) as f64;
            b * Complex64::from_polar(1.0, 2.0 * t_amp * (2.0 * PI * k / m as f64).cos() * t)
        })
        .collect();
    let fh: Vec<Vec<Complex64>> = (0..m).map(|j| (0..m).map(|k| f[k][j].conj()).collect()).collect();
    mat_vec(&fh, &evolved)
}

pub fn random_unit<R: rand::Rng>(m: usize, rng: &mut R) -> Vec<Complex64> {
    let v: Vec<Complex64> = (0..m)
        .map(|_| c(rng.random::<f64>() * 2.0 - 1.0, rng.random::<f64>() * 2.0 - 1.0))
        .collect();
    let n = v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
    v.into_iter().map(|x| x / n).collect()
}
