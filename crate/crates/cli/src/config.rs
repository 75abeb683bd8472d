//! Run configuration documents (TOML) and their validation.

use std::f64::consts::PI;
use std::path::PathBuf;
use std::sync::Arc;

use bhvar_core::cs_algebra::sum_fock_amplitudes;
use bhvar_core::fock::{self, DEFAULT_DIM_CAP};
use bhvar_core::gutzwiller::{coherent_embed, default_n_max};
use bhvar_core::{
    BhParams, Complex64, DnlsState, FockBasis, GlauberState, GutzwillerState, HoppingMatrix, IntegratorConfig,
    PsiState, SectorVector, SuMState,
};
use serde::Deserialize;

use crate::CliError;

pub const DIM_CAP_VAR: &str = "BHVAR_DIM_CAP";

/// Fock dimension cap, overridable through `BHVAR_DIM_CAP`.
pub fn dim_cap() -> Result<usize, CliError> {
    match std::env::var(DIM_CAP_VAR) {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| CliError::Invalid(format!("{DIM_CAP_VAR}={v:?} is not a positive integer"))),
        Err(_) => Ok(DEFAULT_DIM_CAP),
    }
}

pub(crate) type Pair = [f64; 2];

pub(crate) fn complex(p: &Pair) -> Complex64 {
    Complex64::new(p[0], p[1])
}

pub(crate) fn complex_vec(v: &[Pair]) -> Vec<Complex64> {
    v.iter().map(complex).collect()
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    #[serde(rename = "M")]
    pub sites: Option<usize>,
    #[serde(rename = "U")]
    pub interaction: f64,
    #[serde(rename = "T")]
    pub amplitude: Option<f64>,
    #[serde(default = "yes")]
    pub periodic: bool,
    /// Explicit symmetric hopping matrix; replaces `M`/`T`/`periodic`.
    pub hopping: Option<Vec<Vec<f64>>>,
}

fn yes() -> bool {
    true
}

impl ModelSpec {
    pub fn to_params(&self) -> Result<BhParams, CliError> {
        let hopping = match (&self.hopping, self.sites, self.amplitude) {
            (Some(rows), sites, None) => {
                let h = HoppingMatrix::from_rows(rows.clone())?;
                if let Some(m) = sites.filter(|&m| m != h.sites()) {
                    return Err(CliError::Invalid(format!(
                        "model.M = {m} but model.hopping is {0}x{0}",
                        h.sites()
                    )));
                }
                h
            }
            (Some(_), _, Some(_)) => {
                return Err(CliError::Invalid("give either model.hopping or model.T, not both".into()))
            }
            (None, Some(m), Some(t)) => HoppingMatrix::ring(m, t, self.periodic)?,
            (None, None, _) => return Err(CliError::missing("model.M", "a ring model")),
            (None, _, None) => return Err(CliError::missing("model.T", "a ring model")),
        };
        Ok(BhParams::new(self.interaction, hopping)?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    Gutzwiller,
    Dnls,
    Sum,
    Exact,
}

impl Scheme {
    pub fn name(&self) -> &'static str {
        match self {
            Scheme::Gutzwiller => "gutzwiller",
            Scheme::Dnls => "dnls",
            Scheme::Sum => "sum",
            Scheme::Exact => "exact",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    /// `z_j = A e^{ik̃j}` (mode `k`, amplitude `A`).
    PlaneWave,
    /// All weight on one site.
    Localized,
    /// Two-site start `(1, 0)` for free Rabi oscillations.
    Rabi,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialSpec {
    pub z: Option<Vec<Pair>>,
    pub xi: Option<Vec<Pair>>,
    #[serde(rename = "N")]
    pub particles: Option<usize>,
    pub f: Option<Vec<Vec<Pair>>>,
    pub occupation: Option<Vec<u32>>,
    pub preset: Option<Preset>,
    pub k: Option<usize>,
    pub amplitude: Option<Pair>,
    pub site: Option<usize>,
    /// Mean boson number of Glauber presets.
    pub mean: Option<f64>,
    pub n_max: Option<usize>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSpec {
    pub dir: PathBuf,
    pub csv: String,
    pub summary: String,
    pub snapshots: String,
    pub report: String,
}

impl Default for OutputSpec {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("."),
            csv: "trajectory.csv".into(),
            summary: "summary.json".into(),
            snapshots: "snapshots.jsonl".into(),
            report: "report.json".into(),
        }
    }
}

impl OutputSpec {
    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRun {
    model: ModelSpec,
    scheme: Scheme,
    #[serde(default)]
    initial: InitialSpec,
    #[serde(default)]
    integrator: IntegratorConfig,
    #[serde(default)]
    output: OutputSpec,
}

/// Resolved initial state of one scheme.
#[derive(Debug, Clone)]
pub enum InitialState {
    Gutzwiller(GutzwillerState),
    Dnls(DnlsState),
    Sum(PsiState),
    Exact(SectorVector),
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub params: BhParams,
    pub scheme: Scheme,
    pub initial: InitialState,
    pub integrator: IntegratorConfig,
    pub output: OutputSpec,
}

/// Parses and validates a run document, with the dimension cap taken from
/// the environment.
pub fn parse_config(text: &str) -> Result<RunConfig, CliError> {
    parse_config_with_cap(text, dim_cap()?)
}

pub fn parse_config_with_cap(text: &str, cap: usize) -> Result<RunConfig, CliError> {
    let raw: RawRun = toml::from_str(text)?;
    let params = raw.model.to_params()?;
    raw.integrator.validate()?;
    let initial = resolve_initial(&raw.initial, raw.scheme, &params, cap)?;
    Ok(RunConfig {
        params,
        scheme: raw.scheme,
        initial,
        integrator: raw.integrator,
        output: raw.output,
    })
}

fn require_len(key: &str, len: usize, sites: usize) -> Result<(), CliError> {
    if len != sites {
        return Err(CliError::Invalid(format!("initial.{key} has {len} entries for M = {sites}")));
    }
    Ok(())
}

fn particles(spec: &InitialSpec, scheme: Scheme) -> Result<usize, CliError> {
    spec.particles
        .ok_or_else(|| CliError::missing("initial.N", &format!("scheme = \"{}\"", scheme.name())))
}

/// Normalized single-particle orbital of a preset.
fn preset_direction(preset: Preset, spec: &InitialSpec, sites: usize) -> Result<Vec<Complex64>, CliError> {
    match preset {
        Preset::PlaneWave => {
            let k = spec.k.unwrap_or(1);
            if k == 0 || k > sites {
                return Err(CliError::Invalid(format!("initial.k = {k} is outside [1, {sites}]")));
            }
            let kt = 2.0 * PI * k as f64 / sites as f64;
            Ok((1..=sites)
                .map(|j| Complex64::from_polar(1.0 / (sites as f64).sqrt(), kt * j as f64))
                .collect())
        }
        Preset::Localized => {
            let site = spec.site.unwrap_or(1);
            if site == 0 || site > sites {
                return Err(CliError::Invalid(format!("initial.site = {site} is outside [1, {sites}]")));
            }
            let mut v = vec![Complex64::new(0.0, 0.0); sites];
            v[site - 1] = Complex64::new(1.0, 0.0);
            Ok(v)
        }
        Preset::Rabi => {
            if sites != 2 {
                return Err(CliError::Invalid(format!("the rabi preset needs M = 2, got {sites}")));
            }
            Ok(vec![Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)])
        }
    }
}

/// Glauber amplitudes of a preset.
fn preset_field(preset: Preset, spec: &InitialSpec, sites: usize) -> Result<Vec<Complex64>, CliError> {
    match preset {
        Preset::PlaneWave => {
            let a = spec.amplitude.map(|p| complex(&p)).unwrap_or(Complex64::new(1.0, 0.0));
            let root = (sites as f64).sqrt();
            Ok(preset_direction(preset, spec, sites)?.into_iter().map(|x| x * a * root).collect())
        }
        _ => {
            let mean = spec.mean.unwrap_or(1.0);
            if !(mean >= 0.0 && mean.is_finite()) {
                return Err(CliError::Invalid(format!("initial.mean = {mean} must be non-negative")));
            }
            Ok(preset_direction(preset, spec, sites)?
                .into_iter()
                .map(|x| x * mean.sqrt())
                .collect())
        }
    }
}

fn glauber_field(spec: &InitialSpec, scheme: Scheme, sites: usize) -> Result<Vec<Complex64>, CliError> {
    match (&spec.z, spec.preset) {
        (Some(z), None) => {
            require_len("z", z.len(), sites)?;
            Ok(complex_vec(z))
        }
        (None, Some(p)) => preset_field(p, spec, sites),
        (Some(_), Some(_)) => Err(CliError::Invalid("give either initial.z or initial.preset".into())),
        (None, None) => Err(CliError::missing("initial.z", &format!("scheme = \"{}\"", scheme.name()))),
    }
}

fn sum_state(spec: &InitialSpec, scheme: Scheme, sites: usize) -> Result<SuMState, CliError> {
    let n = particles(spec, scheme)?;
    let xi = match (&spec.xi, spec.preset) {
        (Some(xi), None) => {
            require_len("xi", xi.len(), sites)?;
            complex_vec(xi)
        }
        (None, Some(p)) => preset_direction(p, spec, sites)?,
        (Some(_), Some(_)) => return Err(CliError::Invalid("give either initial.xi or initial.preset".into())),
        (None, None) => return Err(CliError::missing("initial.xi", &format!("scheme = \"{}\"", scheme.name()))),
    };
    Ok(SuMState::normalized(n, xi)?)
}

fn reject(spec_has: bool, key: &str, scheme: Scheme) -> Result<(), CliError> {
    if spec_has {
        return Err(CliError::Invalid(format!(
            "initial.{key} is not used by scheme = \"{}\"",
            scheme.name()
        )));
    }
    Ok(())
}

fn resolve_initial(spec: &InitialSpec, scheme: Scheme, params: &BhParams, cap: usize) -> Result<InitialState, CliError> {
    let sites = params.sites();
    match scheme {
        Scheme::Dnls => {
            reject(spec.xi.is_some(), "xi", scheme)?;
            reject(spec.f.is_some(), "f", scheme)?;
            reject(spec.occupation.is_some(), "occupation", scheme)?;
            reject(spec.particles.is_some(), "N", scheme)?;
            Ok(InitialState::Dnls(DnlsState::new(glauber_field(spec, scheme, sites)?)))
        }
        Scheme::Sum => {
            reject(spec.z.is_some(), "z", scheme)?;
            reject(spec.f.is_some(), "f", scheme)?;
            reject(spec.occupation.is_some(), "occupation", scheme)?;
            let st = sum_state(spec, scheme, sites)?;
            Ok(InitialState::Sum(PsiState::from_sum(&st)?))
        }
        Scheme::Gutzwiller => {
            reject(spec.xi.is_some(), "xi", scheme)?;
            reject(spec.occupation.is_some(), "occupation", scheme)?;
            reject(spec.particles.is_some(), "N", scheme)?;
            if let Some(f) = &spec.f {
                reject(spec.z.is_some() || spec.preset.is_some(), "z/preset together with initial.f", scheme)?;
                require_len("f", f.len(), sites)?;
                let state = GutzwillerState::new(f.iter().map(|r| complex_vec(r)).collect())?;
                if let Some(n) = spec.n_max.filter(|&n| n != state.n_max()) {
                    return Err(CliError::Invalid(format!(
                        "initial.n_max = {n} but initial.f rows have {} entries",
                        state.n_max() + 1
                    )));
                }
                return Ok(InitialState::Gutzwiller(state));
            }
            let z = GlauberState::new(glauber_field(spec, scheme, sites)?)?;
            let n_max = spec.n_max.unwrap_or_else(|| default_n_max(z.mean_number(), sites));
            Ok(InitialState::Gutzwiller(coherent_embed(&z, n_max)?))
        }
        Scheme::Exact => {
            reject(spec.z.is_some(), "z", scheme)?;
            reject(spec.f.is_some(), "f", scheme)?;
            if let Some(occ) = &spec.occupation {
                reject(spec.xi.is_some() || spec.preset.is_some(), "xi/preset together with initial.occupation", scheme)?;
                require_len("occupation", occ.len(), sites)?;
                let n: usize = occ.iter().map(|&x| x as usize).sum();
                if let Some(given) = spec.particles.filter(|&g| g != n) {
                    return Err(CliError::Invalid(format!(
                        "initial.N = {given} but initial.occupation holds {n} bosons"
                    )));
                }
                let basis = exact_basis(sites, n, cap)?;
                return Ok(InitialState::Exact(SectorVector::basis_state(basis, occ)?));
            }
            let st = sum_state(spec, scheme, sites)?;
            let basis = exact_basis(sites, st.particles(), cap)?;
            Ok(InitialState::Exact(sum_fock_amplitudes(&st, &basis)?))
        }
    }
}

/// Capacity check happens here, before any run starts.
fn exact_basis(sites: usize, particles: usize, cap: usize) -> Result<Arc<FockBasis>, CliError> {
    match fock::sector_dimension(sites, particles) {
        Some(dim) if dim <= cap => Ok(FockBasis::enumerate_with_cap(sites, particles, cap)?),
        Some(dim) => Err(bhvar_core::Error::Capacity { dim, cap }.into()),
        None => Err(bhvar_core::Error::Capacity { dim: usize::MAX, cap }.into()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_dnls_defaults() {
        let cfg = parse_config_with_cap(
            r#"
scheme = "dnls"
[model]
M = 2
U = 1.0
T = 1.0
[initial]
z = [[1.0, 0.0], [0.0, 0.0]]
"#,
            100,
        )
        .unwrap();
        assert_eq!(cfg.integrator.dt, 1e-3);
        assert_eq!(cfg.integrator.method, bhvar_core::Method::Rk4);
        assert_eq!(cfg.scheme, Scheme::Dnls);
    }

    #[test]
    fn sum_needs_particles() {
        let err = parse_config_with_cap(
            r#"
scheme = "sum"
[model]
M = 2
U = 1.0
T = 1.0
[initial]
xi = [[1.0, 0.0], [0.0, 0.0]]
"#,
            100,
        )
        .unwrap_err();
        assert!(err.to_string().contains("initial.N"), "{err}");
    }

    #[test]
    fn exact_capacity_checked_up_front() {
        let err = parse_config_with_cap(
            r#"
scheme = "exact"
[model]
M = 6
U = 1.0
T = 1.0
[initial]
preset = "localized"
N = 12
"#,
            1000,
        )
        .unwrap_err();
        assert!(matches!(err, CliError::Core(bhvar_core::Error::Capacity { dim: 6188, cap: 1000 })));
    }

    #[test]
    fn unknown_keys_rejected_with_location() {
        let err = parse_config_with_cap(
            r#"
scheme = "dnls"
[model]
M = 2
U = 1.0
T = 1.0
colour = "blue"
"#,
            100,
        )
        .unwrap_err();
        let text = err.to_string();
        assert!(text.contains("colour") && text.contains("line"), "{text}");
    }

    #[test]
    fn explicit_hopping_and_gutzwiller_table() {
        let cfg = parse_config_with_cap(
            r#"
scheme = "gutzwiller"
[model]
U = 0.5
hopping = [[0.0, 1.0], [1.0, 0.0]]
[initial]
f = [[[1.0, 0.0], [0.0, 0.0]], [[0.0, 0.0], [1.0, 0.0]]]
"#,
            100,
        )
        .unwrap();
        match cfg.initial {
            InitialState::Gutzwiller(s) => assert_eq!(s.n_max(), 1),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn presets_resolve() {
        let doc = |scheme: &str, extra: &str| {
            format!("scheme = \"{scheme}\"\n[model]\nM = 3\nU = 1.0\nT = 1.0\n[initial]\n{extra}\n")
        };
        let cfg = parse_config_with_cap(&doc("dnls", "preset = \"plane_wave\"\nk = 2\namplitude = [0.5, 0.0]"), 10).unwrap();
        match cfg.initial {
            InitialState::Dnls(s) => assert!(s.z.iter().all(|z| (z.norm() - 0.5).abs() < 1e-15)),
            other => panic!("{other:?}"),
        }
        let cfg = parse_config_with_cap(&doc("sum", "preset = \"localized\"\nsite = 2\nN = 4"), 10).unwrap();
        match cfg.initial {
            InitialState::Sum(s) => assert!((s.psi()[1].re - 2.0).abs() < 1e-15),
            other => panic!("{other:?}"),
        }
        assert!(parse_config_with_cap(&doc("dnls", "preset = \"rabi\""), 10).is_err());
        assert!(parse_config_with_cap(&doc("dnls", "z = [[1.0, 0.0]]"), 10).is_err());
        assert!(parse_config_with_cap(&doc("dnls", "xi = [[1.0, 0.0],[0.0,0.0],[0.0,0.0]]"), 10).is_err());
        let cfg = parse_config_with_cap(&doc("exact", "occupation = [1, 0, 2]"), 10).unwrap();
        match cfg.initial {
            InitialState::Exact(v) => assert_eq!(v.basis().particles(), 3),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn invalid_integrator_rejected() {
        let text = "scheme = \"dnls\"\n[model]\nM = 1\nU = 1.0\nT = 0.0\n[initial]\nz = [[1.0, 0.0]]\n[integrator]\ndt = -1.0\n";
        assert!(parse_config_with_cap(text, 10).is_err());
    }
}
