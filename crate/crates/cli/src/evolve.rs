//! Trajectory runs for the four schemes.
//!
//! CSV columns: `time, energy, N_bar, site_1, …, site_M` (site columns are
//! mean occupations). The summary JSON carries the drifts of the conserved
//! quantities and the wall time.

use std::path::PathBuf;
use std::time::Instant;

use bhvar_core::fock::ExactPropagator;
use bhvar_core::gutzwiller::{self, energy_f};
use bhvar_core::mf_dynamics::{self, effective_interaction, hopping_energy};
use bhvar_core::serde_complex::to_pairs;
use bhvar_core::{integrator, BhParams, Complex64, GutzwillerState, IntegratorConfig, Monitor, SectorVector};
use serde::Serialize;

use crate::config::{InitialState, RunConfig};
use crate::output;
use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Drifts {
    pub energy: f64,
    #[serde(rename = "N_bar")]
    pub n_bar: f64,
    /// `max_j max_t |I_j(t) − I_j(0)|`, Gutzwiller only.
    #[serde(rename = "I_max", skip_serializing_if = "Option::is_none")]
    pub site_norms: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Observables {
    pub energy: f64,
    #[serde(rename = "N_bar")]
    pub n_bar: f64,
    pub densities: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Summary {
    pub scheme: &'static str,
    #[serde(rename = "M")]
    pub sites: usize,
    pub integrator: IntegratorConfig,
    pub records: usize,
    pub final_time: f64,
    pub initial: Observables,
    #[serde(rename = "final")]
    pub last: Observables,
    pub drifts: Drifts,
    pub wall_time_s: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Snapshot {
    pub t: f64,
    pub state: Vec<[f64; 2]>,
}

#[derive(Debug, Clone)]
pub struct EvolutionResult {
    pub times: Vec<f64>,
    pub energy: Vec<f64>,
    pub n_bar: Vec<f64>,
    /// `densities[record][site]`
    pub densities: Vec<Vec<f64>>,
    pub site_norm_drift: Option<f64>,
    pub snapshots: Vec<Snapshot>,
    pub summary: Summary,
}

impl EvolutionResult {
    pub fn csv_header(&self) -> Vec<String> {
        let mut h = vec!["time".to_string(), "energy".into(), "N_bar".into()];
        h.extend((1..=self.summary.sites).map(|j| format!("site_{j}")));
        h
    }

    pub fn csv_rows(&self) -> Vec<Vec<f64>> {
        (0..self.times.len())
            .map(|r| {
                let mut row = vec![self.times[r], self.energy[r], self.n_bar[r]];
                row.extend(&self.densities[r]);
                row
            })
            .collect()
    }

    /// Writes CSV, summary and (if recorded) snapshots.
    pub fn write(&self, cfg: &RunConfig) -> Result<Vec<PathBuf>, CliError> {
        let out = &cfg.output;
        let mut written = vec![
            output::write_csv(&out.path(&out.csv), &self.csv_header(), &self.csv_rows())?,
            output::write_json(&out.path(&out.summary), &self.summary)?,
        ];
        if cfg.integrator.snapshots {
            written.push(output::write_json_lines(&out.path(&out.snapshots), &self.snapshots)?);
        }
        Ok(written)
    }
}

fn drift(series: &[f64]) -> f64 {
    let first = series.first().copied().unwrap_or(0.0);
    series.iter().map(|v| (v - first).abs()).fold(0.0, f64::max)
}

struct Series {
    times: Vec<f64>,
    energy: Vec<f64>,
    n_bar: Vec<f64>,
    densities: Vec<Vec<f64>>,
    site_norm_drift: Option<f64>,
    snapshots: Vec<Snapshot>,
}

fn density_monitors<'a>(sites: usize, width: usize, local: fn(&[Complex64]) -> f64) -> Vec<Monitor<'a>> {
    (0..sites)
        .map(|j| Monitor::new(format!("site_{}", j + 1), move |y: &[Complex64]| local(&y[j * width..(j + 1) * width])))
        .collect()
}

fn run_integrated(
    rhs: impl FnMut(&[Complex64], &mut [Complex64]),
    initial: &[Complex64],
    config: &IntegratorConfig,
    energy: Monitor<'_>,
    sites: usize,
    width: usize,
    local: fn(&[Complex64]) -> f64,
    site_norms: bool,
) -> Result<Series, CliError> {
    let mut monitors = vec![energy];
    monitors.extend(density_monitors(sites, width, local));
    if site_norms {
        for j in 0..sites {
            monitors.push(Monitor::new(format!("I_{}", j + 1), move |y: &[Complex64]| {
                y[j * width..(j + 1) * width].iter().map(|x| x.norm_sqr()).sum()
            }));
        }
    }
    let traj = integrator::integrate(rhs, initial, config, &monitors)?;
    let records = traj.times.len();
    let densities: Vec<Vec<f64>> = (0..records)
        .map(|r| (0..sites).map(|j| traj.monitors[1 + j].values[r]).collect())
        .collect();
    let n_bar = densities.iter().map(|d| d.iter().sum()).collect();
    let site_norm_drift = site_norms.then(|| {
        traj.monitors[1 + sites..]
            .iter()
            .map(|m| m.max_drift())
            .fold(0.0, f64::max)
    });
    let snapshots = traj
        .times
        .iter()
        .zip(&traj.snapshots)
        .map(|(t, y)| Snapshot {
            t: *t,
            state: to_pairs(y),
        })
        .collect();
    Ok(Series {
        energy: traj.monitors[0].values.clone(),
        times: traj.times,
        n_bar,
        densities,
        site_norm_drift,
        snapshots,
    })
}

fn mode_density(y: &[Complex64]) -> f64 {
    y[0].norm_sqr()
}

fn gutzwiller_density(row: &[Complex64]) -> f64 {
    row.iter().enumerate().map(|(n, c)| n as f64 * c.norm_sqr()).sum()
}

fn nonlinear_energy(y: &[Complex64], u_eff: f64, params: &BhParams) -> f64 {
    let onsite: f64 = y.iter().map(|c| c.norm_sqr().powi(2)).sum();
    (hopping_energy(y, &params.hopping) + 0.5 * u_eff * onsite).re
}

fn run_exact(psi0: &SectorVector, params: &BhParams, config: &IntegratorConfig) -> Result<Series, CliError> {
    let basis = psi0.basis().clone();
    let prop = ExactPropagator::new(params, basis.clone())?;
    let times = config.record_times();
    let states = prop.evolve(psi0, &times)?;
    let sites = basis.sites();
    let mut energy = Vec::with_capacity(states.len());
    let mut densities = Vec::with_capacity(states.len());
    for psi in &states {
        energy.push(prop.energy(psi));
        let mut d = vec![0.0; sites];
        for (occ, a) in basis.states().iter().zip(psi.amps().iter()) {
            let w = a.norm_sqr();
            for (dj, &n) in d.iter_mut().zip(occ.as_slice()) {
                *dj += w * n as f64;
            }
        }
        densities.push(d);
    }
    let n_bar = densities.iter().map(|d: &Vec<f64>| d.iter().sum()).collect();
    let snapshots = if config.snapshots {
        times
            .iter()
            .zip(&states)
            .map(|(t, s)| Snapshot {
                t: *t,
                state: to_pairs(s.amps().as_slice()),
            })
            .collect()
    } else {
        Vec::new()
    };
    Ok(Series {
        times,
        energy,
        n_bar,
        densities,
        site_norm_drift: None,
        snapshots,
    })
}

/// Runs one configuration; no files are touched.
pub fn run_evolution(cfg: &RunConfig) -> Result<EvolutionResult, CliError> {
    let start = Instant::now();
    let params = &cfg.params;
    let sites = params.sites();
    let ic = &cfg.integrator;
    let series = match &cfg.initial {
        InitialState::Dnls(s) => {
            let u = params.interaction;
            run_integrated(
                |y, out| mf_dynamics::lattice_rhs(y, u, &params.hopping, out),
                &s.z,
                ic,
                Monitor::new("energy", move |y: &[Complex64]| nonlinear_energy(y, u, params)),
                sites,
                1,
                mode_density,
                false,
            )?
        }
        InitialState::Sum(s) => {
            let u = effective_interaction(params.interaction, s.particles());
            run_integrated(
                |y, out| mf_dynamics::lattice_rhs(y, u, &params.hopping, out),
                s.psi(),
                ic,
                Monitor::new("energy", move |y: &[Complex64]| nonlinear_energy(y, u, params)),
                sites,
                1,
                mode_density,
                false,
            )?
        }
        InitialState::Gutzwiller(s) => {
            let n_max = s.n_max();
            run_integrated(
                |y, out| gutzwiller::gutzwiller_rhs_flat(y, n_max, params, out),
                &s.flatten(),
                ic,
                Monitor::new("energy", move |y: &[Complex64]| {
                    GutzwillerState::from_flat(sites, n_max, y)
                        .and_then(|st| energy_f(&st, params))
                        .map(|e| e.value)
                        .unwrap_or(f64::NAN)
                }),
                sites,
                n_max + 1,
                gutzwiller_density,
                true,
            )?
        }
        InitialState::Exact(psi) => run_exact(psi, params, ic)?,
    };
    let at = |r: usize| Observables {
        energy: series.energy[r],
        n_bar: series.n_bar[r],
        densities: series.densities[r].clone(),
    };
    let last = series.times.len() - 1;
    let summary = Summary {
        scheme: cfg.scheme.name(),
        sites,
        integrator: ic.clone(),
        records: series.times.len(),
        final_time: series.times[last],
        initial: at(0),
        last: at(last),
        drifts: Drifts {
            energy: drift(&series.energy),
            n_bar: drift(&series.n_bar),
            site_norms: series.site_norm_drift,
        },
        wall_time_s: start.elapsed().as_secs_f64(),
    };
    Ok(EvolutionResult {
        times: series.times,
        energy: series.energy,
        n_bar: series.n_bar,
        densities: series.densities,
        site_norm_drift: series.site_norm_drift,
        snapshots: series.snapshots,
        summary,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::parse_config_with_cap;

    fn doc(scheme: &str, model: &str, initial: &str, integ: &str) -> String {
        format!("scheme = \"{scheme}\"\n[model]\n{model}\n[initial]\n{initial}\n[integrator]\n{integ}\n")
    }

    #[test]
    fn rabi_all_schemes() {
        let model = "M = 2\nU = 0.0\nT = 1.0";
        let integ = "t_end = 3.0\nrecord_every = 100";
        for (scheme, initial, scale) in [
            ("dnls", "preset = \"rabi\"", 1.0),
            ("gutzwiller", "preset = \"rabi\"", 1.0),
            ("sum", "preset = \"rabi\"\nN = 3", 3.0),
            ("exact", "preset = \"rabi\"\nN = 3", 3.0),
        ] {
            let cfg = parse_config_with_cap(&doc(scheme, model, initial, integ), 100).unwrap();
            let r = run_evolution(&cfg).unwrap();
            assert_eq!(r.times.len(), 31);
            for (t, d) in r.times.iter().zip(&r.densities) {
                assert!((d[0] - scale * t.cos().powi(2)).abs() < 1e-8, "{scheme} t={t}");
                assert!((d[1] - scale * t.sin().powi(2)).abs() < 1e-8, "{scheme} t={t}");
            }
        }
    }

    #[test]
    fn plane_wave_densities_static() {
        let cfg = parse_config_with_cap(
            &doc("dnls", "M = 4\nU = 1.3\nT = 1.0", "preset = \"plane_wave\"\nk = 1\namplitude = [0.8, 0.3]", "t_end = 2.0"),
            10,
        )
        .unwrap();
        let r = run_evolution(&cfg).unwrap();
        let d0 = r.densities[0][0];
        assert!(r.densities.iter().flatten().all(|d| (d - d0).abs() < 1e-8));
    }

    #[test]
    fn zero_duration_single_row() {
        let cfg = parse_config_with_cap(&doc("gutzwiller", "M = 2\nU = 1.0\nT = 1.0", "z = [[1.0, 0.0], [0.5, 0.5]]", "t_end = 0.0"), 10)
            .unwrap();
        let r = run_evolution(&cfg).unwrap();
        assert_eq!(r.csv_rows().len(), 1);
        assert!((r.n_bar[0] - 1.5).abs() < 1e-12);
        assert_eq!(r.csv_header(), ["time", "energy", "N_bar", "site_1", "site_2"]);
    }

    #[test]
    fn gutzwiller_reports_site_norm_drift() {
        let cfg = parse_config_with_cap(&doc("gutzwiller", "M = 3\nU = 1.0\nT = 1.0", "preset = \"localized\"\nmean = 1.0", "t_end = 1.0"), 10)
            .unwrap();
        let r = run_evolution(&cfg).unwrap();
        assert!(r.summary.drifts.site_norms.unwrap() < 1e-8);
        assert!(r.summary.drifts.energy < 1e-8);
    }

    #[test]
    fn exact_energy_is_constant() {
        let cfg = parse_config_with_cap(&doc("exact", "M = 3\nU = 2.0\nT = 1.0", "occupation = [2, 1, 0]", "t_end = 1.0\nrecord_every = 50"), 100)
            .unwrap();
        let r = run_evolution(&cfg).unwrap();
        assert!(r.summary.drifts.energy < 1e-10);
        assert!(r.summary.drifts.n_bar < 1e-10);
    }
}
