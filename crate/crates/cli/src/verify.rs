//! Identity suite: closed forms against brute-force Fock evaluation, plus
//! conservation and duality checks, reported as JSON.

use std::f64::consts::PI;

use bhvar_core::catstates::cat_report;
use bhvar_core::cs_algebra::{
    disentangled_action, glauber_fock_amplitudes, glauber_sector_weight, mode_fourier, parametrize_group_element,
    sector_cutoff, su2_reduce, sum_expectations, sum_fock_amplitudes, sum_overlap, FourierDirection,
};
use bhvar_core::fock::{displacement_operator, hopping_operator, ladder_matrix, momentum_transform, number_operator, Ladder};
use bhvar_core::gutzwiller::{
    self, alpha_number_bracket_fd, coherent_embed, energy_f, invariants_f, poisson_bracket_fd,
};
use bhvar_core::linalg::{max_abs, max_abs_diff, CMatrix};
use bhvar_core::mf_dynamics::{self, plane_wave, plane_wave_residual, rhs_dnls, rhs_sum, MeanFieldScheme};
use bhvar_core::{
    integrator, BhParams, Complex64, DnlsState, FockBasis, GlauberState, GutzwillerState, IntegratorConfig, Monitor,
    PsiState, SuMState,
};
use clap::ValueEnum;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Scope {
    All,
    Algebra,
    Dynamics,
    Duality,
    Cats,
}

impl Scope {
    fn includes(self, part: Scope) -> bool {
        self == Scope::All || self == part
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    /// The identity being tested, in words.
    pub anchor: String,
    pub residual: f64,
    pub tolerance: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct SuiteReport {
    pub scope: Scope,
    pub checks: Vec<Check>,
    pub passed: bool,
}

#[derive(Default)]
struct Collector {
    checks: Vec<Check>,
}

impl Collector {
    /// Keeps the worst residual per name.
    fn add(&mut self, name: &str, anchor: &str, residual: f64, tolerance: f64) {
        let residual = if residual.is_nan() { f64::INFINITY } else { residual };
        match self.checks.iter_mut().find(|c| c.name == name) {
            Some(c) => {
                c.residual = c.residual.max(residual);
                c.pass = c.residual <= c.tolerance;
            }
            None => self.checks.push(Check {
                name: name.into(),
                anchor: anchor.into(),
                residual,
                tolerance,
                pass: residual <= tolerance,
            }),
        }
    }
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn matrix_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    max_abs((a - b).iter().copied())
}

fn algebra(out: &mut Collector) -> Result<(), CliError> {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for (m, n) in [(2, 4), (3, 5), (4, 4)] {
        let basis = FockBasis::enumerate(m, n)?;
        let numbers: Vec<CMatrix> = (0..m).map(|i| number_operator(&basis, i)).collect::<Result<_, _>>()?;
        for _ in 0..10 {
            let xi = SuMState::random(m, n, &mut rng);
            let eta = SuMState::random(m, n, &mut rng);
            let vx = sum_fock_amplitudes(&xi, &basis)?;
            let ve = sum_fock_amplitudes(&eta, &basis)?;
            out.add(
                "sum_overlap",
                "<eta|xi> = (sum_i eta_i* xi_i)^N",
                (sum_overlap(&eta, &xi)? - ve.inner(&vx)?).norm(),
                1e-12,
            );
            out.add("sum_norm", "<xi|xi> = 1", (vx.norm() - 1.0).abs(), 1e-12);
            for i in 0..m {
                let e = sum_expectations(&xi, i, i)?;
                out.add(
                    "sum_density",
                    "<n_i> = N|xi_i|^2",
                    (e.density - vx.expectation(&numbers[i]).re).abs(),
                    1e-12,
                );
                let pair = &numbers[i] * &numbers[i] - &numbers[i];
                out.add(
                    "sum_pair_density",
                    "<n_i(n_i-1)> = N(N-1)|xi_i|^4",
                    (e.pair_density - vx.expectation(&pair).re).abs(),
                    1e-12,
                );
                for mm in 0..m {
                    let hop = hopping_operator(&basis, mm, i)?;
                    let e = sum_expectations(&xi, i, mm)?;
                    out.add(
                        "sum_hopping",
                        "<a_m+ a_i> = N xi_m* xi_i",
                        (e.hopping - vx.expectation(&hop)).norm(),
                        1e-12,
                    );
                }
            }
        }
    }

    for scale in [0.7, 1.4] {
        let xi = SuMState::random(3, 1, &mut rng);
        let z: Vec<Complex64> = xi.xi().iter().map(|x| x * scale).collect();
        let g = GlauberState::new(z)?;
        let dir = g.direction().expect("nonzero field");
        let s_max = sector_cutoff(g.mean_number(), 1e-12);
        let mut total = 0.0;
        for (s, sec) in glauber_fock_amplitudes(&g, s_max)?.iter().enumerate() {
            let w = glauber_sector_weight(&g, &dir, s)?.value;
            total += w.norm_sqr();
            let cs = sum_fock_amplitudes(&SuMState::new(s, dir.clone())?, sec.basis())?;
            let product: Vec<Complex64> = cs.amps().iter().map(|a| a * w).collect();
            out.add(
                "glauber_sectors",
                "|Z> restricted to S bosons = weight x |S; xi>",
                max_abs_diff(sec.amps().as_slice(), &product),
                1e-12,
            );
        }
        out.add("glauber_weights", "sum_S |weight_S|^2 = 1", (total - 1.0).abs(), 1e-12);
    }

    let basis = FockBasis::enumerate(3, 4)?;
    for _ in 0..5 {
        let st = SuMState::random(3, 4, &mut rng);
        let reference = sum_fock_amplitudes(&st, &basis)?;
        let forms = disentangled_action(&parametrize_group_element(&st), &st, &basis)?;
        let r = forms.residuals(&reference);
        out.add("group_element", "E|N,0,...> = |xi> up to a phase", r.group_applied, 1e-10);
        out.add("translation", "T(zeta)|N,0,...> = |xi> up to a phase", r.translated, 1e-10);
        if let Some(d) = r.disentangled {
            out.add("disentangled", "normalized exp(sum eta_k a_k+ a_1)|N,0,...> = |xi>", d, 1e-10);
        }
        if let Some(n) = forms.normalization {
            out.add(
                "normalization_half_power",
                "1/||exp(u J+)|N,0>|| = (1+|u|^2)^(-N/2)",
                (n.measured - n.half_power).abs() / n.half_power,
                1e-10,
            );
        }
    }
    let basis2 = FockBasis::enumerate(2, 5)?;
    for _ in 0..5 {
        let st = SuMState::random(2, 5, &mut rng);
        let red = su2_reduce(&st)?.to_sector(&basis2)?;
        let reference = sum_fock_amplitudes(&st, &basis2)?;
        out.add(
            "su2_reduction",
            "two-mode |xi> = SU(2) coherent state",
            max_abs_diff(red.amps().as_slice(), reference.amps().as_slice()),
            1e-10,
        );
    }

    let basis = FockBasis::enumerate(3, 3)?;
    let e: Vec<Vec<CMatrix>> = (0..3)
        .map(|j| (0..3).map(|l| hopping_operator(&basis, j, l)).collect::<Result<_, _>>())
        .collect::<Result<_, _>>()?;
    let mut worst: f64 = 0.0;
    for j in 0..3 {
        for l in 0..3 {
            for m in 0..3 {
                for n in 0..3 {
                    let lhs = &e[j][l] * &e[m][n] - &e[m][n] * &e[j][l];
                    let mut rhs = CMatrix::zeros(basis.dim(), basis.dim());
                    if l == m {
                        rhs += &e[j][n];
                    }
                    if j == n {
                        rhs -= &e[m][l];
                    }
                    worst = worst.max(matrix_diff(&lhs, &rhs));
                }
            }
        }
    }
    out.add(
        "su_m_commutators",
        "[E_jl, E_mn] = d_lm E_jn - d_jn E_ml",
        worst,
        1e-12,
    );

    for _ in 0..3 {
        let s = GutzwillerState::random(3, 12, &mut rng);
        let alpha = gutzwiller::order_parameter_alpha(&s);
        for j in 0..3 {
            for l in 0..3 {
                let delta = if j == l { 1.0 } else { 0.0 };
                out.add(
                    "bracket_alpha_alpha_conj",
                    "{alpha_j, alpha_l*} = -i d_jl",
                    (poisson_bracket_fd(&s, j, l)? - c(0.0, -delta)).norm(),
                    1e-8,
                );
                out.add(
                    "bracket_alpha_number",
                    "{alpha_j, N_l} = -i d_jl alpha_j",
                    (alpha_number_bracket_fd(&s, j, l)? - c(0.0, -delta) * alpha[j]).norm(),
                    1e-8,
                );
            }
        }
    }
    Ok(())
}

fn dynamics(out: &mut Collector) -> Result<(), CliError> {
    let config = IntegratorConfig::new(1e-3, 2.0);
    let params = BhParams::ring(3, 1.0, 1.0)?;

    let z0 = vec![c(1.0, 0.2), c(-0.4, 0.5), c(0.3, -0.6)];
    let norm = Monitor::new("norm", |y: &[Complex64]| y.iter().map(|x| x.norm_sqr()).sum());
    let energy = Monitor::new("energy", |y: &[Complex64]| {
        mf_dynamics::energy_dnls(&DnlsState::new(y.to_vec()), &params)
            .map(|e| e.value)
            .unwrap_or(f64::NAN)
    });
    let traj = integrator::integrate(
        |y, o| mf_dynamics::lattice_rhs(y, params.interaction, &params.hopping, o),
        &z0,
        &config,
        &[norm, energy],
    )?;
    out.add("dnls_norm_drift", "sum |z_j|^2 is conserved", traj.monitors[0].max_drift(), 1e-8);
    out.add("dnls_energy_drift", "classical energy is conserved", traj.monitors[1].max_drift(), 1e-8);

    let state = coherent_embed(&GlauberState::new(vec![c(1.0, 0.0); 3])?, 30)?;
    let n_max = state.n_max();
    let w = n_max + 1;
    let mut monitors = vec![
        Monitor::new("N_bar", |y: &[Complex64]| {
            y.chunks(w)
                .flat_map(|r| r.iter().enumerate())
                .map(|(n, x)| n as f64 * x.norm_sqr())
                .sum()
        }),
        Monitor::new("energy", |y: &[Complex64]| {
            GutzwillerState::from_flat(3, n_max, y)
                .and_then(|s| energy_f(&s, &params))
                .map(|e| e.value)
                .unwrap_or(f64::NAN)
        }),
    ];
    for j in 0..3 {
        monitors.push(Monitor::new(format!("I_{}", j + 1), move |y: &[Complex64]| {
            y[j * w..(j + 1) * w].iter().map(|x| x.norm_sqr()).sum()
        }));
    }
    let traj = integrator::integrate(
        |y, o| gutzwiller::gutzwiller_rhs_flat(y, n_max, &params, o),
        &state.flatten(),
        &config,
        &monitors,
    )?;
    out.add("gutzwiller_number_drift", "total N_bar is conserved", traj.monitors[0].max_drift(), 1e-8);
    out.add("gutzwiller_energy_drift", "mean-field energy is conserved", traj.monitors[1].max_drift(), 1e-8);
    let site_norms = traj.monitors[2..].iter().map(|m| m.max_drift()).fold(0.0, f64::max);
    out.add("gutzwiller_site_norm_drift", "each I_j = sum_m |f_m|^2 is conserved", site_norms, 1e-8);
    let final_state = GutzwillerState::from_flat(3, n_max, &traj.final_state)?;
    let inv = invariants_f(&final_state);
    out.add(
        "gutzwiller_final_norms",
        "I_j(t_end) = 1",
        inv.site_norms.iter().map(|x| (x - 1.0).abs()).fold(0.0, f64::max),
        1e-8,
    );

    for m in 1..=5 {
        let p = BhParams::ring(m, 1.3, 0.8)?;
        for k in 1..=m {
            for scheme in [MeanFieldScheme::Dnls, MeanFieldScheme::Sum { particles: 5 }] {
                let wave = plane_wave(m, k, c(0.9, -0.4), &p, scheme)?;
                out.add(
                    "plane_wave_residual",
                    "z_j = A exp(i(k j - w t)) solves the lattice equations",
                    plane_wave_residual(&wave, &p, scheme),
                    1e-12,
                );
            }
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(23);
    for n in [1usize, 3, 12] {
        let st = SuMState::random(3, n, &mut rng);
        let psi = PsiState::from_sum(&st)?;
        let scaled = BhParams::new(params.interaction * (n as f64 - 1.0) / n as f64, params.hopping.clone())?;
        out.add(
            "sum_equals_rescaled_dnls",
            "SU(M) flow = DNLS flow with U(N-1)/N",
            max_abs_diff(&rhs_sum(&psi, &params)?, &rhs_dnls(&DnlsState::new(psi.psi().to_vec()), &scaled)?),
            1e-14,
        );
    }
    Ok(())
}

fn duality(out: &mut Collector) -> Result<(), CliError> {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let basis = FockBasis::enumerate(3, 4)?;
    let w = momentum_transform(&basis)?;
    for _ in 0..10 {
        let st = SuMState::random(3, 4, &mut rng);
        let site = sum_fock_amplitudes(&st, &basis)?;
        let momentum: Vec<Complex64> = (&w * site.amps()).iter().copied().collect();
        let dual = SuMState::new(4, mode_fourier(st.xi(), FourierDirection::SiteToMomentum))?;
        let expect = sum_fock_amplitudes(&dual, &basis)?;
        out.add(
            "sum_duality",
            "|xi> in momentum modes = |F xi>",
            max_abs_diff(&momentum, expect.amps().as_slice()),
            1e-12,
        );
    }
    for _ in 0..3 {
        let xi = SuMState::random(3, 1, &mut rng);
        let z: Vec<Complex64> = xi.xi().iter().map(|x| x * 1.3).collect();
        let g = GlauberState::new(z.clone())?;
        let v = GlauberState::new(mode_fourier(&z, FourierDirection::SiteToMomentum))?;
        let s_max = sector_cutoff(g.mean_number(), 1e-12);
        let site = glauber_fock_amplitudes(&g, s_max)?;
        let dual = glauber_fock_amplitudes(&v, s_max)?;
        for (a, b) in site.iter().zip(&dual) {
            let ws = momentum_transform(a.basis())?;
            let momentum: Vec<Complex64> = (&ws * a.amps()).iter().copied().collect();
            out.add(
                "glauber_duality",
                "|Z> in momentum modes = |V>, v = F z",
                max_abs_diff(&momentum, b.amps().as_slice()),
                1e-12,
            );
        }
    }
    for (m, n) in [(3, 4), (4, 3)] {
        let upper = FockBasis::enumerate(m, n)?;
        let lower = FockBasis::enumerate(m, n - 1)?;
        let du = displacement_operator(&upper)?;
        let dl = displacement_operator(&lower)?;
        for l in 0..m {
            let a = ladder_matrix(&upper, &lower, l, Ladder::Lower)?;
            let next = ladder_matrix(&upper, &lower, (l + 1) % m, Ladder::Lower)?;
            out.add(
                "displacement_covariance",
                "D a_l D+ = a_(l+1)",
                matrix_diff(&(&dl * a * du.adjoint()), &next),
                1e-10,
            );
        }
    }
    // plane-wave orbital is a single momentum mode
    let m = 4;
    let orbital: Vec<Complex64> = (1..=m)
        .map(|j| Complex64::from_polar(1.0 / (m as f64).sqrt(), 2.0 * PI * j as f64 / m as f64))
        .collect();
    let dual = mode_fourier(&orbital, FourierDirection::SiteToMomentum);
    let off: f64 = dual.iter().map(|x| x.norm_sqr()).sum::<f64>() - dual.iter().map(|x| x.norm_sqr()).fold(0.0, f64::max);
    out.add("plane_wave_single_mode", "a plane wave occupies one momentum mode", off.abs(), 1e-12);
    Ok(())
}

fn cats(out: &mut Collector, dim_cap: usize) -> Result<(), CliError> {
    for (m, n) in [(3, 3), (3, 6), (4, 3)] {
        for k in 1..=m {
            let exact = cat_report(m, n, 0.0, 5, k, dim_cap)?;
            out.add(
                "cat_class_selectivity",
                "exactly localized cat |S_k> lives in class k mod M",
                exact.out_of_class_weight,
                1e-12,
            );
            out.add("cat_orthonormality", "<S_q|S_k> = d_qk", exact.cat_overlap_residual, 1e-12);
            out.add(
                "cat_uniform_density",
                "<n_i> = N/M in |S_k>",
                exact
                    .densities
                    .iter()
                    .map(|d| (d - n as f64 / m as f64).abs())
                    .fold(0.0, f64::max),
                1e-12,
            );
            let leaky = cat_report(m, n, 0.03, 9, k, dim_cap)?;
            out.add("family_orthonormality", "Lowdin family is orthonormal", leaky.gram_residual, 1e-12);
            out.add("leaky_cat_orthonormality", "<S_q|S_k> = d_qk", leaky.cat_overlap_residual, 1e-10);
        }
    }
    Ok(())
}

/// Runs every check in `scope`.
pub fn run_identity_suite(scope: Scope) -> Result<SuiteReport, CliError> {
    run_identity_suite_with_cap(scope, crate::config::dim_cap()?)
}

pub fn run_identity_suite_with_cap(scope: Scope, dim_cap: usize) -> Result<SuiteReport, CliError> {
    let mut out = Collector::default();
    if scope.includes(Scope::Algebra) {
        algebra(&mut out)?;
    }
    if scope.includes(Scope::Dynamics) {
        dynamics(&mut out)?;
    }
    if scope.includes(Scope::Duality) {
        duality(&mut out)?;
    }
    if scope.includes(Scope::Cats) {
        cats(&mut out, dim_cap)?;
    }
    let passed = out.checks.iter().all(|c| c.pass);
    Ok(SuiteReport {
        scope,
        checks: out.checks,
        passed,
    })
}
