//! The `cat`, `weights` and `dual` reports.

use std::path::PathBuf;

use bhvar_core::catstates::{build_cat, build_localized_family, cat_momentum_amplitudes, cat_report, CatReport, MomentumAmplitude};
use bhvar_core::cs_algebra::{
    glauber_fock_amplitudes_with_cap, glauber_sector_weight, mode_fourier, poisson_tail, sector_cutoff,
    sum_fock_amplitudes, FourierDirection,
};
use bhvar_core::fock::{displacement_operator, ladder_matrix, momentum_transform, quasimomentum_class, Ladder};
use bhvar_core::linalg::{max_abs, max_abs_diff};
use bhvar_core::serde_complex::to_pairs;
use bhvar_core::{Complex64, FockBasis, GlauberState, SuMState};
use serde::{Deserialize, Serialize};

use crate::config::{complex_vec, Pair};
use crate::{output, CliError};

/// Output location of a report task.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaskOutput {
    #[serde(default = "here")]
    pub dir: PathBuf,
    pub report: Option<String>,
    pub csv: Option<String>,
}

fn here() -> PathBuf {
    PathBuf::from(".")
}

impl TaskOutput {
    fn report_path(&self, default: &str) -> PathBuf {
        self.dir.join(self.report.as_deref().unwrap_or(default))
    }

    fn csv_path(&self, default: &str) -> PathBuf {
        self.dir.join(self.csv.as_deref().unwrap_or(default))
    }
}

impl Default for TaskOutput {
    fn default() -> Self {
        Self {
            dir: here(),
            report: None,
            csv: None,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CatSpec {
    #[serde(rename = "M")]
    pub sites: usize,
    #[serde(rename = "N")]
    pub particles: usize,
    #[serde(default)]
    pub epsilon: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "first")]
    pub k: usize,
    /// Also list every momentum amplitude.
    #[serde(default)]
    pub amplitudes: bool,
}

fn first() -> usize {
    1
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct CatDoc {
    cat: CatSpec,
    #[serde(default)]
    output: TaskOutput,
}

#[derive(Debug, Clone, Serialize)]
pub struct CatOutput {
    #[serde(flatten)]
    pub report: CatReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub momentum_amplitudes: Option<Vec<MomentumAmplitude>>,
}

pub fn run_cat(spec: &CatSpec, dim_cap: usize) -> Result<CatOutput, CliError> {
    let report = cat_report(spec.sites, spec.particles, spec.epsilon, spec.seed, spec.k, dim_cap)?;
    let momentum_amplitudes = if spec.amplitudes {
        let family = build_localized_family(spec.sites, spec.particles, spec.epsilon, spec.seed)?;
        let basis = FockBasis::enumerate_with_cap(spec.sites, spec.particles, dim_cap)?;
        Some(cat_momentum_amplitudes(&build_cat(&family, spec.k)?, &basis)?)
    } else {
        None
    };
    Ok(CatOutput {
        report,
        momentum_amplitudes,
    })
}

/// Parses, runs and writes the cat report; returns the written path.
pub fn cat_command(text: &str, dim_cap: usize) -> Result<(CatOutput, PathBuf), CliError> {
    let doc: CatDoc = toml::from_str(text)?;
    let out = run_cat(&doc.cat, dim_cap)?;
    let path = output::write_json(&doc.output.report_path("cat.json"), &out)?;
    Ok((out, path))
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightsSpec {
    pub z: Vec<Pair>,
    /// Largest sector; defaults to a Poisson tail below 1e-12.
    pub s_max: Option<usize>,
    /// Also expand each sector in Fock space and compare with weight x SU(M) amplitudes.
    #[serde(default)]
    pub check_amplitudes: bool,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct WeightsDoc {
    weights: WeightsSpec,
    #[serde(default)]
    output: TaskOutput,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SectorRow {
    #[serde(rename = "S")]
    pub sector: usize,
    pub weight: [f64; 2],
    pub probability: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct WeightsReport {
    #[serde(rename = "N_bar")]
    pub mean_number: f64,
    pub direction: Vec<[f64; 2]>,
    pub s_max: usize,
    pub sectors: Vec<SectorRow>,
    pub total: f64,
    /// Poisson mass above `s_max`.
    pub tail: f64,
    /// `|Σ|w|² + tail − 1|`
    pub closure_residual: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub amplitude_residual: Option<f64>,
}

pub fn run_weights(spec: &WeightsSpec, dim_cap: usize) -> Result<WeightsReport, CliError> {
    let g = GlauberState::new(complex_vec(&spec.z))?;
    let mean = g.mean_number();
    let s_max = spec.s_max.unwrap_or_else(|| sector_cutoff(mean, 1e-12));
    let direction = match g.direction() {
        Some(d) => d,
        // vacuum: any direction, only S = 0 carries weight
        None => {
            let mut d = vec![Complex64::new(0.0, 0.0); g.sites()];
            d[0] = Complex64::new(1.0, 0.0);
            d
        }
    };
    let mut sectors = Vec::with_capacity(s_max + 1);
    for s in 0..=s_max {
        let w = glauber_sector_weight(&g, &direction, s)?.value;
        sectors.push(SectorRow {
            sector: s,
            weight: [w.re, w.im],
            probability: w.norm_sqr(),
        });
    }
    let total: f64 = sectors.iter().map(|r| r.probability).sum();
    let tail = poisson_tail(mean, s_max);
    let amplitude_residual = if spec.check_amplitudes {
        let mut worst: f64 = 0.0;
        for (s, sec) in glauber_fock_amplitudes_with_cap(&g, s_max, dim_cap)?.iter().enumerate() {
            let cs = sum_fock_amplitudes(&SuMState::new(s, direction.clone())?, sec.basis())?;
            let w = Complex64::new(sectors[s].weight[0], sectors[s].weight[1]);
            let product: Vec<Complex64> = cs.amps().iter().map(|a| a * w).collect();
            worst = worst.max(max_abs_diff(sec.amps().as_slice(), &product));
        }
        Some(worst)
    } else {
        None
    };
    Ok(WeightsReport {
        mean_number: mean,
        direction: to_pairs(&direction),
        s_max,
        total,
        tail,
        closure_residual: (total + tail - 1.0).abs(),
        sectors,
        amplitude_residual,
    })
}

pub fn weights_command(text: &str, dim_cap: usize) -> Result<(WeightsReport, Vec<PathBuf>), CliError> {
    let doc: WeightsDoc = toml::from_str(text)?;
    let report = run_weights(&doc.weights, dim_cap)?;
    let header: Vec<String> = ["S", "weight_re", "weight_im", "probability"].map(String::from).to_vec();
    let rows: Vec<Vec<f64>> = report
        .sectors
        .iter()
        .map(|r| vec![r.sector as f64, r.weight[0], r.weight[1], r.probability])
        .collect();
    let paths = vec![
        output::write_csv(&doc.output.csv_path("weights.csv"), &header, &rows)?,
        output::write_json(&doc.output.report_path("weights.json"), &report)?,
    ];
    Ok((report, paths))
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DualSpec {
    /// SU(M) orbital (normalized on input if needed) with `N` bosons.
    pub xi: Option<Vec<Pair>>,
    #[serde(rename = "N")]
    pub particles: Option<usize>,
    /// Glauber amplitudes.
    pub z: Option<Vec<Pair>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct DualDoc {
    dual: DualSpec,
    #[serde(default)]
    output: TaskOutput,
}

#[derive(Debug, Clone, Serialize)]
pub struct MomentumEntry {
    pub occupation: Vec<u32>,
    pub class: usize,
    pub amplitude: [f64; 2],
}

#[derive(Debug, Clone, Serialize)]
pub struct DualReport {
    pub kind: &'static str,
    #[serde(rename = "M")]
    pub sites: usize,
    pub site_orbital: Vec<[f64; 2]>,
    pub momentum_orbital: Vec<[f64; 2]>,
    /// Momentum amplitudes of the state (SU(M) input only).
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub momentum_amplitudes: Vec<MomentumEntry>,
    /// Weight per quasi-momentum class (SU(M) input only).
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub class_weights: Vec<f64>,
    /// Site-basis state rotated to momentum modes vs the state built from
    /// the transformed orbital.
    pub duality_residual: f64,
    /// `max_l ‖D a_l D⁺ − a_{l+1}‖`
    pub displacement_residual: f64,
}

fn displacement_residual(sites: usize, particles: usize, dim_cap: usize) -> Result<f64, CliError> {
    let particles = particles.max(1);
    let upper = FockBasis::enumerate_with_cap(sites, particles, dim_cap)?;
    let lower = FockBasis::enumerate_with_cap(sites, particles - 1, dim_cap)?;
    let du = displacement_operator(&upper)?;
    let dl = displacement_operator(&lower)?;
    let mut worst: f64 = 0.0;
    for l in 0..sites {
        let a = ladder_matrix(&upper, &lower, l, Ladder::Lower)?;
        let next = ladder_matrix(&upper, &lower, (l + 1) % sites, Ladder::Lower)?;
        worst = worst.max(max_abs((&dl * a * du.adjoint() - next).iter().copied()));
    }
    Ok(worst)
}

pub fn run_dual(spec: &DualSpec, dim_cap: usize) -> Result<DualReport, CliError> {
    match (&spec.xi, &spec.z) {
        (Some(xi), None) => {
            let n = spec
                .particles
                .ok_or_else(|| CliError::missing("dual.N", "dual.xi"))?;
            let st = SuMState::normalized(n, complex_vec(xi))?;
            let m = st.sites();
            let basis = FockBasis::enumerate_with_cap(m, n, dim_cap)?;
            let site = sum_fock_amplitudes(&st, &basis)?;
            let w = momentum_transform(&basis)?;
            let momentum: Vec<Complex64> = (&w * site.amps()).iter().copied().collect();
            let alpha = mode_fourier(st.xi(), FourierDirection::SiteToMomentum);
            let built = sum_fock_amplitudes(&SuMState::new(n, alpha.clone())?, &basis)?;
            let mut class_weights = vec![0.0; m];
            let momentum_amplitudes = basis
                .states()
                .iter()
                .zip(&momentum)
                .map(|(p, a)| {
                    let class = quasimomentum_class(p);
                    class_weights[class] += a.norm_sqr();
                    MomentumEntry {
                        occupation: p.0.clone(),
                        class,
                        amplitude: [a.re, a.im],
                    }
                })
                .collect();
            Ok(DualReport {
                kind: "sum",
                sites: m,
                site_orbital: to_pairs(st.xi()),
                momentum_orbital: to_pairs(&alpha),
                momentum_amplitudes,
                class_weights,
                duality_residual: max_abs_diff(&momentum, built.amps().as_slice()),
                displacement_residual: displacement_residual(m, n, dim_cap)?,
            })
        }
        (None, Some(z)) => {
            let g = GlauberState::new(complex_vec(z))?;
            let m = g.sites();
            let v = mode_fourier(g.z(), FourierDirection::SiteToMomentum);
            let dual = GlauberState::new(v.clone())?;
            let s_max = sector_cutoff(g.mean_number(), 1e-12);
            let site = glauber_fock_amplitudes_with_cap(&g, s_max, dim_cap)?;
            let built = glauber_fock_amplitudes_with_cap(&dual, s_max, dim_cap)?;
            let mut worst: f64 = 0.0;
            for (a, b) in site.iter().zip(&built) {
                let w = momentum_transform(a.basis())?;
                let rotated: Vec<Complex64> = (&w * a.amps()).iter().copied().collect();
                worst = worst.max(max_abs_diff(&rotated, b.amps().as_slice()));
            }
            Ok(DualReport {
                kind: "glauber",
                sites: m,
                site_orbital: to_pairs(g.z()),
                momentum_orbital: to_pairs(&v),
                momentum_amplitudes: Vec::new(),
                class_weights: Vec::new(),
                duality_residual: worst,
                displacement_residual: displacement_residual(m, s_max.clamp(1, 3), dim_cap)?,
            })
        }
        (Some(_), Some(_)) => Err(CliError::Invalid("dual: give either xi (with N) or z, not both".into())),
        (None, None) => Err(CliError::missing("dual.xi or dual.z", "bhvar dual")),
    }
}

pub fn dual_command(text: &str, dim_cap: usize) -> Result<(DualReport, PathBuf), CliError> {
    let doc: DualDoc = toml::from_str(text)?;
    let report = run_dual(&doc.dual, dim_cap)?;
    let path = output::write_json(&doc.output.report_path("dual.json"), &report)?;
    Ok((report, path))
}
