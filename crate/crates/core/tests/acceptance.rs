//! Acceptance suite. Runs every criterion, prints one line each and exits
//! non-zero if any residual, bound or runtime limit is violated.

mod common;

use std::process::ExitCode;
use std::time::{Duration, Instant};

use bhvar_core::catstates::{self, build_cat, build_localized_family};
use bhvar_core::cs_algebra::{
    self, disentangled_action, glauber_fock_amplitudes, glauber_overlap, glauber_sector_weight, parametrize_group_element,
    sector_cutoff, su2_reduce, sum_expectations, sum_fock_amplitudes, sum_overlap, sum_transition_hopping,
    FourierDirection, NormalizationExponent,
};
use bhvar_core::fock::{displacement_operator, ladder_matrix, momentum_transform, Ladder};
use bhvar_core::gutzwiller::{
    self, alpha_number_bracket_fd, coherent_embed, default_n_max, energy_f, invariants_f, poisson_bracket_fd,
};
use bhvar_core::mf_dynamics::{self, plane_wave, plane_wave_residual, rhs_dnls, rhs_sum, MeanFieldScheme};
use bhvar_core::{
    integrator, BhParams, Complex64, DnlsState, FockBasis, GlauberState, GutzwillerState, HoppingMatrix,
    IntegratorConfig, Monitor, PsiState, SuMState,
};
use common::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Named bounds collected by one criterion.
#[derive(Default)]
struct Checks {
    items: Vec<(String, f64, f64, bool)>,
    notes: Vec<String>,
}

impl Checks {
    /// Requires `value ≤ tol`; keeps the worst value per label.
    fn at_most(&mut self, label: &str, value: f64, tol: f64) {
        self.record(label, value, tol, false);
    }

    /// Requires `value > bound`; keeps the smallest value per label.
    fn above(&mut self, label: &str, value: f64, bound: f64) {
        self.record(label, value, bound, true);
    }

    fn record(&mut self, label: &str, value: f64, tol: f64, lower: bool) {
        let value = if value.is_nan() { f64::INFINITY } else { value };
        match self.items.iter_mut().find(|(l, ..)| l == label) {
            Some(item) => {
                item.1 = if lower { item.1.min(value) } else { item.1.max(value) };
            }
            None => self.items.push((label.to_string(), value, tol, lower)),
        }
    }

    fn note(&mut self, text: impl Into<String>) {
        self.notes.push(text.into());
    }

    fn passed(&self) -> bool {
        self.items
            .iter()
            .all(|(_, v, t, lower)| if *lower { v > t } else { v <= t })
    }

    fn summary(&self) -> String {
        let mut parts: Vec<String> = self
            .items
            .iter()
            .map(|(l, v, t, lower)| {
                let op = if *lower { ">" } else { "<=" };
                let mark = if (*lower && v > t) || (!*lower && v <= t) { "" } else { " !!" };
                format!("{l}={v:.2e} ({op}{t:.0e}){mark}")
            })
            .collect();
        parts.extend(self.notes.iter().cloned());
        parts.join("; ")
    }
}

fn run(id: usize, title: &str, limit: Duration, body: fn(&mut Checks)) -> bool {
    let mut checks = Checks::default();
    let start = Instant::now();
    let outcome = std::panic::catch_unwind(std::panic::AssertUnwindSafe(|| body(&mut checks)));
    let elapsed = start.elapsed();
    let in_time = elapsed < limit;
    let ok = outcome.is_ok() && checks.passed() && in_time;
    let status = if ok { "PASS" } else { "FAIL" };
    let error = if outcome.is_err() { " [panicked]" } else { "" };
    println!(
        "criterion {id:>2} {status} {title}: {} | {:.3}s (limit {}s){error}",
        checks.summary(),
        elapsed.as_secs_f64(),
        limit.as_secs()
    );
    ok
}

fn secs(s: u64) -> Duration {
    Duration::from_secs(s)
}

fn algebra(ch: &mut Checks) {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    for (m, n) in [(2, 4), (3, 5), (4, 4)] {
        for _ in 0..50 {
            let xi = SuMState::random(m, n, &mut rng);
            let eta = SuMState::random(m, n, &mut rng);
            let (ox, oe) = (sum_state(xi.xi(), n), sum_state(eta.xi(), n));
            ch.at_most("overlap", (sum_overlap(&eta, &xi).unwrap() - inner(&oe, &ox)).norm(), 1e-12);
            ch.at_most("norm", (inner(&ox, &ox).re - 1.0).abs(), 1e-12);
            for i in 0..m {
                let ai = annihilate(&ox, i);
                let e = sum_expectations(&xi, i, i).unwrap();
                ch.at_most("density", (e.density - inner(&ai, &ai).re).abs(), 1e-12);
                let aai = annihilate(&ai, i);
                ch.at_most("pair", (e.pair_density - inner(&aai, &aai).re).abs(), 1e-12);
                for mm in 0..m {
                    let hop = inner(&ox, &create(&annihilate(&ox, i), mm));
                    let e = sum_expectations(&xi, i, mm).unwrap();
                    ch.at_most("hopping", (e.hopping - hop).norm(), 1e-12);
                    let trans = inner(&oe, &create(&annihilate(&ox, i), mm));
                    ch.at_most(
                        "transition",
                        (sum_transition_hopping(&eta, &xi, mm, i).unwrap() - trans).norm(),
                        1e-12,
                    );
                }
            }
        }
    }
}

fn glauber_decomposition(ch: &mut Checks) {
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    for m in [2, 3] {
        for scale_sq in [0.5, 2.0] {
            let z: Vec<Complex64> = random_unit(m, &mut rng).into_iter().map(|x| x * f64::sqrt(scale_sq)).collect();
            let g = GlauberState::new(z.clone()).unwrap();
            let dir = g.direction().unwrap();
            let s_max = sector_cutoff(g.mean_number(), 1e-12);
            let sectors = glauber_fock_amplitudes(&g, s_max).unwrap();
            let mut total = 0.0;
            for (s, sec) in sectors.iter().enumerate() {
                let w = glauber_sector_weight(&g, &dir, s).unwrap().value;
                total += w.norm_sqr();
                let cs = sum_fock_amplitudes(&SuMState::new(s, dir.clone()).unwrap(), sec.basis()).unwrap();
                let product: Vec<Complex64> = cs.amps().iter().map(|a| a * w).collect();
                ch.at_most("weight*SU(M)", max_diff(sec.amps().as_slice(), &product), 1e-12);
                ch.at_most("oracle", max_diff(sec.amps().as_slice(), &dense_in(&glauber_sector(&z, s), sec)), 1e-12);
            }
            ch.at_most("sum|w|^2", (total - 1.0).abs(), 1e-12);
        }
    }
}

fn group_forms(ch: &mut Checks) {
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    let basis = FockBasis::enumerate(3, 4).unwrap();
    let (mut half, mut full, mut total) = (0, 0, 0);
    for _ in 0..20 {
        let st = SuMState::random(3, 4, &mut rng);
        let reference = sum_fock_amplitudes(&st, &basis).unwrap();
        ch.at_most("oracle", max_diff(reference.amps().as_slice(), &dense_in(&sum_state(st.xi(), 4), &reference)), 1e-12);
        let params = parametrize_group_element(&st);
        let forms = disentangled_action(&params, &st, &basis).unwrap();
        let r = forms.residuals(&reference);
        ch.at_most("E|N,0>", r.group_applied, 1e-10);
        ch.at_most("T(zeta)|N,0>", r.translated, 1e-10);
        ch.at_most("T phase", r.phase_mismatch, 1e-10);
        ch.at_most("exp(eta a+a)", r.disentangled.unwrap_or(f64::INFINITY), 1e-10);
        if let Some(n) = forms.normalization {
            total += 1;
            match n.matching {
                NormalizationExponent::HalfN => half += 1,
                NormalizationExponent::FullN => full += 1,
                _ => {}
            }
        }
    }
    ch.note(format!(
        "normalization exponent: (1+|u|^2)^(-N/2) matches {half}/{total}, (1+|u|^2)^(-N) matches {full}/{total}"
    ));
    ch.above("N/2 matches", half as f64, (total - 1) as f64);

    let basis = FockBasis::enumerate(2, 5).unwrap();
    for _ in 0..20 {
        let st = SuMState::random(2, 5, &mut rng);
        let red = su2_reduce(&st).unwrap().to_sector(&basis).unwrap();
        let oracle = sum_state(st.xi(), 5);
        ch.at_most("SU(2)", max_diff(red.amps().as_slice(), &dense_in(&oracle, &red)), 1e-10);
    }
}

fn brackets(ch: &mut Checks) {
    let mut rng = ChaCha8Rng::seed_from_u64(404);
    for _ in 0..20 {
        let s = GutzwillerState::random(3, 12, &mut rng);
        for j in 0..3 {
            let f = s.site(j);
            let alpha: Complex64 = (0..12).map(|m| f[m].conj() * f[m + 1] * ((m + 1) as f64).sqrt()).sum();
            for l in 0..3 {
                let delta = if j == l { 1.0 } else { 0.0 };
                let b = poisson_bracket_fd(&s, j, l).unwrap();
                ch.at_most("{a_j,a_l*}", (b - c(0.0, -delta)).norm(), 1e-8);
                let bn = alpha_number_bracket_fd(&s, j, l).unwrap();
                ch.at_most("{a_j,N_l}", (bn - c(0.0, -delta) * alpha).norm(), 1e-8);
            }
        }
    }
}

fn gutzwiller_monitors(n_max: usize, params: &BhParams) -> Vec<Monitor<'_>> {
    let w = n_max + 1;
    let mut monitors = vec![
        Monitor::new("N_bar", move |y: &[Complex64]| {
            y.chunks(w)
                .flat_map(|r| r.iter().enumerate())
                .map(|(n, x)| n as f64 * x.norm_sqr())
                .sum()
        }),
        Monitor::new("energy", move |y: &[Complex64]| {
            energy_f(&GutzwillerState::from_flat(params.sites(), n_max, y).unwrap(), params).unwrap().value
        }),
    ];
    for j in 0..params.sites() {
        monitors.push(Monitor::new(format!("I_{}", j + 1), move |y: &[Complex64]| {
            y[j * w..(j + 1) * w].iter().map(|x| x.norm_sqr()).sum()
        }));
    }
    monitors
}

fn gutzwiller_run(state: &GutzwillerState, params: &BhParams) -> integrator::Trajectory {
    let n_max = state.n_max();
    let monitors = gutzwiller_monitors(n_max, params);
    integrator::integrate(
        |y, out| gutzwiller::gutzwiller_rhs_flat(y, n_max, params, out),
        &state.flatten(),
        &IntegratorConfig::new(1e-3, 10.0),
        &monitors,
    )
    .unwrap()
}

fn conservation(ch: &mut Checks) {
    // unit filling: coherent z_j = 1, N̄ = 3
    let g = GlauberState::new(vec![c(1.0, 0.0); 3]).unwrap();
    let n_max = default_n_max(g.mean_number(), 3);
    let state = coherent_embed(&g, n_max).unwrap();
    ch.at_most("N_bar(0)-3", (invariants_f(&state).n_bar - 3.0).abs(), 1e-10);
    for u in [0.0, 0.5, 2.0] {
        let params = BhParams::ring(3, u, 1.0).unwrap();
        let traj = gutzwiller_run(&state, &params);
        ch.at_most("N_bar drift", traj.monitor("N_bar").unwrap().max_drift(), 1e-8);
        ch.at_most("energy drift", traj.monitor("energy").unwrap().max_drift(), 1e-8);
        for j in 1..=3 {
            ch.at_most("I_j drift", traj.monitor(&format!("I_{j}")).unwrap().max_drift(), 1e-8);
        }
        let end = GutzwillerState::from_flat(3, n_max, &traj.final_state).unwrap();
        let a0 = gutzwiller::order_parameter_alpha(&state)[0].norm();
        let a1 = gutzwiller::order_parameter_alpha(&end)[0].norm();
        if u > 0.0 {
            ch.note(format!("U={u}: |alpha_1| {a0:.3} -> {a1:.3}"));
        }
    }
    // imbalanced data at the strongest coupling, reported only
    let z0 = [c(1.2, 0.0), c(0.4, 0.7), c(-0.2, 0.3)];
    let nbar: f64 = z0.iter().map(|x| x.norm_sqr()).sum();
    let g = GlauberState::new(z0.iter().map(|x| x * (3.0 / nbar).sqrt()).collect()).unwrap();
    let state = coherent_embed(&g, n_max).unwrap();
    let traj = gutzwiller_run(&state, &BhParams::ring(3, 2.0, 1.0).unwrap());
    ch.note(format!(
        "imbalanced start, U=2 (not asserted): N_bar drift {:.1e}, energy drift {:.1e}",
        traj.monitor("N_bar").unwrap().max_drift(),
        traj.monitor("energy").unwrap().max_drift()
    ));
}

fn alpha_series(traj: &integrator::Trajectory, sites: usize, n_max: usize) -> Vec<Vec<Complex64>> {
    traj.snapshots
        .iter()
        .map(|y| gutzwiller::order_parameter_alpha(&GutzwillerState::from_flat(sites, n_max, y).unwrap()))
        .collect()
}

fn reduction(ch: &mut Checks) {
    let z = vec![c(1.0, 0.2), c(-0.3, 0.6), c(0.1, -0.5)];
    let g = GlauberState::new(z.clone()).unwrap();
    let n_max = default_n_max(g.mean_number(), 3);
    let state = coherent_embed(&g, n_max).unwrap();
    let mut config = IntegratorConfig::new(1e-3, 10.0);
    config.record_every = 50;
    config.snapshots = true;

    let free = BhParams::ring(3, 0.0, 1.0).unwrap();
    let traj = integrator::integrate(
        |y, out| gutzwiller::gutzwiller_rhs_flat(y, n_max, &free, out),
        &state.flatten(),
        &config,
        &[],
    )
    .unwrap();
    for (t, alpha) in traj.times.iter().zip(alpha_series(&traj, 3, n_max)) {
        ch.at_most("U=0 |alpha-z|", max_diff(&alpha, &free_ring_evolution(&z, 1.0, *t)), 1e-8);
    }

    let params = BhParams::ring(3, 2.0, 1.0).unwrap();
    let traj = integrator::integrate(
        |y, out| gutzwiller::gutzwiller_rhs_flat(y, n_max, &params, out),
        &state.flatten(),
        &config,
        &[],
    )
    .unwrap();
    let dnls = integrator::integrate(
        |y, out| mf_dynamics::lattice_rhs(y, 2.0, &params.hopping, out),
        &z,
        &config,
        &[],
    )
    .unwrap();
    let worst = alpha_series(&traj, 3, n_max)
        .iter()
        .zip(&dnls.snapshots)
        .map(|(a, zt)| max_diff(a, zt))
        .fold(0.0, f64::max);
    ch.above("U=2 max|alpha-z|", worst, 1e-2);
}

fn mean_field_structure(ch: &mut Checks) {
    for m in 1..=6 {
        let params = BhParams::ring(m, 1.3, 0.8).unwrap();
        for k in 1..=m {
            for scheme in [MeanFieldScheme::Dnls, MeanFieldScheme::Sum { particles: 5 }] {
                let w = plane_wave(m, k, c(0.9, -0.4), &params, scheme).unwrap();
                ch.at_most("plane wave", plane_wave_residual(&w, &params, scheme), 1e-12);
                // the plane wave stays a plane wave: compare with the direct RHS
                let d = match scheme {
                    MeanFieldScheme::Dnls => rhs_dnls(&DnlsState::new(w.z.clone()), &params).unwrap(),
                    MeanFieldScheme::Sum { particles } => {
                        rhs_sum(&PsiState::from_evolved(particles, w.z.clone()), &params).unwrap()
                    }
                };
                let expect: Vec<Complex64> = w.z.iter().map(|x| c(0.0, -w.omega) * x).collect();
                ch.at_most("plane wave (direct)", max_diff(&d, &expect), 1e-12);
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(707);
    for m in 2..=5 {
        for n in [1usize, 2, 7, 40] {
            let st = SuMState::random(m, n, &mut rng);
            let psi = PsiState::from_sum(&st).unwrap();
            let params = BhParams::ring(m, 1.9, 0.6).unwrap();
            let matched = BhParams::new(1.9 * (n as f64 - 1.0) / n as f64, params.hopping.clone()).unwrap();
            let a = rhs_sum(&psi, &params).unwrap();
            let b = rhs_dnls(&DnlsState::new(psi.psi().to_vec()), &matched).unwrap();
            ch.at_most("rhs_sum vs rhs_dnls", max_diff(&a, &b), 1e-14);
        }
    }
    let rows = vec![vec![0.0, 1.0, 0.35], vec![1.0, 0.0, 0.8], vec![0.35, 0.8, 0.0]];
    let params = BhParams::new(1.4, HoppingMatrix::from_rows(rows.clone()).unwrap()).unwrap();
    for _ in 0..10 {
        let st = SuMState::random(3, 5, &mut rng);
        let o = sum_state(st.xi(), 5);
        let exact = inner(&o, &bh_apply(&o, 1.4, &rows));
        let e = mf_dynamics::energy_sum(&PsiState::from_sum(&st).unwrap(), &params).unwrap();
        ch.at_most("energy_sum", (e.value - exact.re).abs(), 1e-12);
        ch.at_most("Im<H>", exact.im.abs(), 1e-12);
    }
}

fn duality(ch: &mut Checks) {
    let mut rng = ChaCha8Rng::seed_from_u64(808);
    let f3 = dft(3);
    let basis = FockBasis::enumerate(3, 4).unwrap();
    let w = momentum_transform(&basis).unwrap();
    for _ in 0..10 {
        let st = SuMState::random(3, 4, &mut rng);
        let site = sum_fock_amplitudes(&st, &basis).unwrap();
        let momentum: Vec<Complex64> = (&w * site.amps()).iter().copied().collect();
        let xi_k = mat_vec(&f3, st.xi());
        ch.at_most("SU(M) site->momentum", max_diff(&momentum, &dense_in(&sum_state(&xi_k, 4), &site)), 1e-12);
        ch.at_most(
            "xi Fourier",
            max_diff(&cs_algebra::mode_fourier(st.xi(), FourierDirection::SiteToMomentum), &xi_k),
            1e-12,
        );
    }
    for _ in 0..3 {
        let z: Vec<Complex64> = random_unit(3, &mut rng).into_iter().map(|x| x * 1.3).collect();
        let g = GlauberState::new(z.clone()).unwrap();
        let s_max = sector_cutoff(g.mean_number(), 1e-12);
        let zk = mat_vec(&f3, &z);
        for sec in glauber_fock_amplitudes(&g, s_max).unwrap() {
            let s = sec.basis().particles();
            let ws = momentum_transform(sec.basis()).unwrap();
            let momentum: Vec<Complex64> = (&ws * sec.amps()).iter().copied().collect();
            ch.at_most("Glauber site->momentum", max_diff(&momentum, &dense_in(&glauber_sector(&zk, s), &sec)), 1e-12);
        }
    }
    for (m, n) in [(3, 4), (4, 3)] {
        let upper = FockBasis::enumerate(m, n).unwrap();
        let lower = FockBasis::enumerate(m, n - 1).unwrap();
        let du = displacement_operator(&upper).unwrap();
        let dl = displacement_operator(&lower).unwrap();
        for l in 0..m {
            let a = ladder_matrix(&upper, &lower, l, Ladder::Lower).unwrap();
            let next = ladder_matrix(&upper, &lower, (l + 1) % m, Ladder::Lower).unwrap();
            let conj = &dl * a * du.adjoint();
            let diff = (conj - next).iter().map(|x| x.norm()).fold(0.0, f64::max);
            ch.at_most("D a_l D+ = a_(l+1)", diff, 1e-10);
        }
    }
}

fn cats(ch: &mut Checks) {
    for n in [3usize, 6] {
        let family = build_localized_family(3, n, 0.0, 17).unwrap();
        let basis = FockBasis::enumerate(3, n).unwrap();
        let f3 = dft(3);
        let oracle_cat = |k: usize, momentum: bool| {
            (1..=3).fold(Sparse::new(), |acc, l| {
                let coeff = Complex64::from_polar(1.0 / 3f64.sqrt(), 2.0 * std::f64::consts::PI * (k * l) as f64 / 3.0);
                let xi = if momentum { mat_vec(&f3, family.xi(l)) } else { family.xi(l).to_vec() };
                add(&acc, &scale(&sum_state(&xi, n), coeff))
            })
        };
        let site_cats: Vec<Sparse> = (1..=3).map(|k| oracle_cat(k, false)).collect();
        for k in 1..=3 {
            let cat = build_cat(&family, k).unwrap();
            let lib = cat.fock_amplitudes(&basis).unwrap();
            ch.at_most("cat vs oracle", max_diff(lib.amps().as_slice(), &dense_in(&site_cats[k - 1], &lib)), 1e-12);
            for q in 1..=3 {
                let d = if q == k { 1.0 } else { 0.0 };
                ch.at_most("<S_q|S_k>", (inner(&site_cats[q - 1], &site_cats[k - 1]) - d).norm(), 1e-12);
            }
            let obs = catstates::cat_observables(&cat, &basis).unwrap();
            for i in 0..3 {
                let ai = annihilate(&site_cats[k - 1], i);
                let oracle_n = inner(&ai, &ai).re;
                ch.at_most("<n_i> - N/M", (obs.densities[i] - n as f64 / 3.0).abs(), 1e-12);
                ch.at_most("<n_i> vs oracle", (obs.densities[i] - oracle_n).abs(), 1e-12);
            }
            let momentum = oracle_cat(k, true);
            for a in catstates::cat_momentum_amplitudes(&cat, &basis).unwrap() {
                let p = a.occupation.as_slice();
                let lambda = p.iter().enumerate().map(|(i, &pk)| (i + 1) * pk as usize).sum::<usize>() % 3;
                let expect = momentum.get(p).copied().unwrap_or(c(0.0, 0.0));
                ch.at_most("momentum amp vs oracle", (a.amplitude - expect).norm(), 1e-12);
                if lambda != k % 3 {
                    ch.at_most("out-of-class amp", a.amplitude.norm(), 1e-12);
                }
            }
        }
        for h in 1..=3 {
            for l in 1..=3 {
                if h != l {
                    let x = catstates::localized_glauber(3, n as f64, h).unwrap();
                    let z = catstates::localized_glauber(3, n as f64, l).unwrap();
                    let o = glauber_overlap(&x, &z).unwrap().norm();
                    let target = (-(n as f64)).exp();
                    ch.at_most("|<X(h)|X(l)>| rel", (o - target).abs() / target, 1e-12);
                }
            }
        }
    }
}

fn rk4_order(ch: &mut Checks) {
    // i ż = −T z, exact z(t) = e^{iTt}
    let t = 1.0;
    let err = |dt: f64| {
        let traj = integrator::integrate(
            |y, out| out[0] = c(0.0, t) * y[0],
            &[c(1.0, 0.0)],
            &IntegratorConfig::new(dt, 1.0),
            &[],
        )
        .unwrap();
        (traj.final_state[0] - Complex64::from_polar(1.0, t)).norm()
    };
    let (e1, e2, e3) = (err(0.1), err(0.05), err(0.025));
    ch.at_most("|ratio-16| (0.1/0.05)", (e1 / e2 - 16.0).abs(), 2.0);
    ch.at_most("|ratio-16| (0.05/0.025)", (e2 / e3 - 16.0).abs(), 2.0);
    ch.note(format!("ratios {:.3}, {:.3}", e1 / e2, e2 / e3));
}

fn main() -> ExitCode {
    let suite: [(&str, u64, fn(&mut Checks)); 10] = [
        ("SU(M) algebra", 5, algebra),
        ("Glauber sector decomposition", 2, glauber_decomposition),
        ("group-theoretic forms", 10, group_forms),
        ("Weyl-Heisenberg brackets", 5, brackets),
        ("Gutzwiller conservation", 60, conservation),
        ("Gutzwiller to DNLS reduction", 60, reduction),
        ("DNLS / SU(M) structure", 5, mean_field_structure),
        ("site/momentum duality", 10, duality),
        ("cat states", 10, cats),
        ("RK4 order", 1, rk4_order),
    ];
    let mut failures = 0;
    for (i, (title, limit, body)) in suite.iter().enumerate() {
        if !run(i + 1, title, secs(*limit), *body) {
            failures += 1;
        }
    }
    println!("acceptance: {} passed, {failures} failed", suite.len() - failures);
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
