//! Lattice geometry and Bose-Hubbard parameters.
//!
//! The hopping term is `−Σ_{j,ℓ} T_{jℓ} a_j⁺ a_ℓ` summed over the full
//! symmetric matrix, so a bond stored as `T_{jℓ} = T_{ℓj} = T` contributes
//! `−T (a_j⁺a_ℓ + a_ℓ⁺a_j)` exactly once.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dense symmetric real hopping matrix with zero diagonal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct HoppingMatrix {
    sites: usize,
    entries: Vec<f64>,
}

impl HoppingMatrix {
    /// Nearest-neighbour chain (or ring when `periodic`) with uniform
    /// amplitude. A two-site ring has a single bond.
    pub fn ring(sites: usize, amplitude: f64, periodic: bool) -> Result<Self> {
        if sites == 0 {
            return Err(Error::InvalidLattice("a lattice needs at least one site".into()));
        }
        if !amplitude.is_finite() {
            return Err(Error::InvalidLattice(format!("hopping amplitude {amplitude} is not finite")));
        }
        let mut h = Self::zeros(sites);
        for j in 0..sites.saturating_sub(1) {
            h.set_bond(j, j + 1, amplitude);
        }
        if periodic && sites > 2 {
            h.set_bond(sites - 1, 0, amplitude);
        }
        Ok(h)
    }

    pub fn zeros(sites: usize) -> Self {
        Self {
            sites,
            entries: vec![0.0; sites * sites],
        }
    }

    /// Builds from literal rows; shape is checked here, symmetry by
    /// [`HoppingMatrix::validate`].
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let sites = rows.len();
        if sites == 0 {
            return Err(Error::InvalidLattice("empty hopping matrix".into()));
        }
        if let Some((i, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != sites) {
            return Err(Error::InvalidLattice(format!(
                "row {} has {} entries, expected {sites}",
                i + 1,
                r.len()
            )));
        }
        Ok(Self {
            sites,
            entries: rows.into_iter().flatten().collect(),
        })
    }

    fn set_bond(&mut self, j: usize, l: usize, amplitude: f64) {
        self.entries[j * self.sites + l] = amplitude;
        self.entries[l * self.sites + j] = amplitude;
    }

    pub fn sites(&self) -> usize {
        self.sites
    }

    #[inline]
    pub fn get(&self, j: usize, l: usize) -> f64 {
        self.entries[j * self.sites + l]
    }

    pub fn row(&self, j: usize) -> &[f64] {
        &self.entries[j * self.sites..(j + 1) * self.sites]
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.entries.chunks(self.sites).map(<[f64]>::to_vec).collect()
    }

    /// Nonzero off-diagonal entries `(j, ℓ, T_{jℓ})` in row-major order.
    pub fn nonzero(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.sites).flat_map(move |j| {
            (0..self.sites).filter_map(move |l| {
                let t = self.get(j, l);
                (t != 0.0).then_some((j, l, t))
            })
        })
    }

    pub fn entry_sum(&self) -> f64 {
        self.entries.iter().sum()
    }

    /// Returns the uniform amplitude if this matrix is exactly a periodic
    /// nearest-neighbour ring.
    pub fn ring_amplitude(&self) -> Option<f64> {
        if self.sites == 1 {
            return Some(0.0);
        }
        let t = self.get(0, 1);
        let reference = Self::ring(self.sites, t, true).ok()?;
        (reference == *self).then_some(t)
    }

    pub fn validate(&self) -> Result<()> {
        for j in 0..self.sites {
            for l in 0..self.sites {
                if !self.get(j, l).is_finite() {
                    return Err(Error::NonFiniteEntry { row: j + 1, col: l + 1 });
                }
            }
        }
        for j in 0..self.sites {
            let d = self.get(j, j);
            if d != 0.0 {
                return Err(Error::NonzeroDiagonal { site: j + 1, value: d });
            }
            for l in j + 1..self.sites {
                let (forward, backward) = (self.get(j, l), self.get(l, j));
                if forward != backward {
                    return Err(Error::Asymmetric {
                        row: j + 1,
                        col: l + 1,
                        forward,
                        backward,
                    });
                }
            }
        }
        Ok(())
    }

    /// `(T v)_j = Σ_ℓ T_{jℓ} v_ℓ`.
    pub fn apply<T>(&self, v: &[T]) -> Vec<T>
    where
        T: Copy + Default + std::ops::Add<Output = T> + std::ops::Mul<f64, Output = T>,
    {
        assert_eq!(v.len(), self.sites, "vector length must match the site count");
        (0..self.sites)
            .map(|j| {
                self.row(j)
                    .iter()
                    .zip(v)
                    .filter(|(t, _)| **t != 0.0)
                    .fold(T::default(), |acc, (t, x)| acc + *x * *t)
            })
            .collect()
    }
}

impl TryFrom<Vec<Vec<f64>>> for HoppingMatrix {
    type Error = Error;

    fn try_from(rows: Vec<Vec<f64>>) -> Result<Self> {
        let h = Self::from_rows(rows)?;
        h.validate()?;
        Ok(h)
    }
}

impl From<HoppingMatrix> for Vec<Vec<f64>> {
    fn from(h: HoppingMatrix) -> Self {
        h.rows()
    }
}

/// Interaction strength and hopping matrix of the Bose-Hubbard model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BhParams {
    #[serde(rename = "U")]
    pub interaction: f64,
    pub hopping: HoppingMatrix,
}

impl BhParams {
    pub fn new(interaction: f64, hopping: HoppingMatrix) -> Result<Self> {
        let p = Self { interaction, hopping };
        p.validate()?;
        Ok(p)
    }

    /// Homogeneous periodic ring.
    pub fn ring(sites: usize, interaction: f64, amplitude: f64) -> Result<Self> {
        Self::new(interaction, HoppingMatrix::ring(sites, amplitude, true)?)
    }

    pub fn sites(&self) -> usize {
        self.hopping.sites()
    }

    pub fn validate(&self) -> Result<()> {
        if !self.interaction.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "interaction U = {} is not finite",
                self.interaction
            )));
        }
        if self.hopping.sites() == 0 {
            return Err(Error::InvalidLattice("a lattice needs at least one site".into()));
        }
        self.hopping.validate()
    }
}

/// A mean-field energy: the real value plus the imaginary rounding residue
/// left by the hopping sum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Energy {
    pub value: f64,
    pub imag_residue: f64,
}

impl Energy {
    pub(crate) fn from_complex(e: num_complex::Complex64) -> Self {
        Self {
            value: e.re,
            imag_residue: e.im.abs(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn three_ring() {
        let h = HoppingMatrix::ring(3, 1.0, true).unwrap();
        assert_eq!(h.get(0, 1), 1.0);
        assert_eq!(h.get(1, 2), 1.0);
        assert_eq!(h.get(2, 0), 1.0);
        assert_eq!(h.get(0, 2), 1.0);
        for j in 0..3 {
            assert_eq!(h.get(j, j), 0.0);
        }
    }

    #[test]
    fn single_site_has_no_bonds() {
        let h = HoppingMatrix::ring(1, 1.0, true).unwrap();
        assert_eq!(h.rows(), vec![vec![0.0]]);
    }

    #[test]
    fn two_site_ring_is_one_bond() {
        let h = HoppingMatrix::ring(2, 1.0, true).unwrap();
        assert_eq!(h.rows(), vec![vec![0.0, 1.0], vec![1.0, 0.0]]);
    }

    #[test]
    fn open_chain_drops_closing_bond() {
        let h = HoppingMatrix::ring(4, 0.5, false).unwrap();
        assert_eq!(h.get(3, 0), 0.0);
        assert_eq!(h.entry_sum(), 3.0);
    }

    #[test]
    fn zero_sites_rejected() {
        assert!(matches!(HoppingMatrix::ring(0, 1.0, true), Err(Error::InvalidLattice(_))));
    }

    #[test]
    fn asymmetry_is_named() {
        let h = HoppingMatrix::from_rows(vec![vec![0.0, 1.0], vec![0.5, 0.0]]).unwrap();
        assert_eq!(
            h.validate(),
            Err(Error::Asymmetric {
                row: 1,
                col: 2,
                forward: 1.0,
                backward: 0.5
            })
        );
    }

    #[test]
    fn nan_is_rejected() {
        let h = HoppingMatrix::from_rows(vec![vec![0.0, f64::NAN], vec![f64::NAN, 0.0]]).unwrap();
        assert!(matches!(h.validate(), Err(Error::NonFiniteEntry { row: 1, col: 2 })));
    }

    #[test]
    fn diagonal_is_rejected() {
        let h = HoppingMatrix::from_rows(vec![vec![0.0, 1.0], vec![1.0, 2.0]]).unwrap();
        assert!(matches!(h.validate(), Err(Error::NonzeroDiagonal { site: 2, .. })));
    }

    #[test]
    fn ring_detection() {
        assert_eq!(HoppingMatrix::ring(5, 0.7, true).unwrap().ring_amplitude(), Some(0.7));
        assert_eq!(HoppingMatrix::ring(5, 0.7, false).unwrap().ring_amplitude(), None);
    }

    #[test]
    fn json_rejects_asymmetric_rows() {
        let bad = r#"{"U": 1.0, "hopping": [[0.0, 1.0], [2.0, 0.0]]}"#;
        assert!(serde_json::from_str::<BhParams>(bad).is_err());
        let good = r#"{"U": 1.0, "hopping": [[0.0, 1.0], [1.0, 0.0]]}"#;
        let p: BhParams = serde_json::from_str(good).unwrap();
        assert_eq!(p.sites(), 2);
    }

    proptest! {
        #[test]
        fn ring_always_validates(sites in 1usize..40, t in -5.0f64..5.0, periodic: bool) {
            let h = HoppingMatrix::ring(sites, t, periodic).unwrap();
            prop_assert!(h.validate().is_ok());
        }

        #[test]
        fn ring_entry_sum(sites in 3usize..40, t in -5.0f64..5.0) {
            let h = HoppingMatrix::ring(sites, t, true).unwrap();
            prop_assert!((h.entry_sum() - 2.0 * sites as f64 * t).abs() < 1e-12 * (1.0 + t.abs() * sites as f64));
        }
    }
}
