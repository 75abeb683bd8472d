//! Fixed-step explicit integration of autonomous complex ODE systems with
//! observables sampled along the way.
//!
//! States are flat `&[Complex64]` slices so the same stepper drives the
//! Gutzwiller table, the DNLS field and the SU(M) amplitudes. Nothing is
//! renormalized between steps; drift of conserved quantities is left in the
//! monitors for the caller to inspect.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    #[default]
    Rk4,
    Midpoint,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IntegratorConfig {
    pub method: Method,
    pub dt: f64,
    pub t_end: f64,
    pub record_every: usize,
    /// Keep the full state at every recorded step.
    pub snapshots: bool,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            method: Method::Rk4,
            dt: 1e-3,
            t_end: 10.0,
            record_every: 1,
            snapshots: false,
        }
    }
}

impl IntegratorConfig {
    pub fn new(dt: f64, t_end: f64) -> Self {
        Self {
            dt,
            t_end,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::InvalidArgument(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return Err(Error::InvalidArgument(format!("t_end must be non-negative, got {}", self.t_end)));
        }
        if self.record_every == 0 {
            return Err(Error::InvalidArgument("record_every must be at least 1".into()));
        }
        Ok(())
    }

    /// Number of steps; the last one is shortened when `t_end` is not a
    /// multiple of `dt`.
    pub fn steps(&self) -> usize {
        let ratio = self.t_end / self.dt;
        let rounded = ratio.round();
        if (ratio - rounded).abs() <= 1e-9 * rounded.max(1.0) {
            rounded as usize
        } else {
            ratio.ceil() as usize
        }
    }

    fn time_of(&self, k: usize, steps: usize) -> f64 {
        if k == steps {
            self.t_end
        } else {
            k as f64 * self.dt
        }
    }

    /// Times at which [`integrate`] records: `0`, every `record_every`
    /// steps, and `t_end`.
    pub fn record_times(&self) -> Vec<f64> {
        let steps = self.steps();
        std::iter::once(0.0)
            .chain(
                (1..=steps)
                    .filter(|k| k % self.record_every == 0 || *k == steps)
                    .map(|k| self.time_of(k, steps)),
            )
            .collect()
    }
}

/// A named scalar observable evaluated on recorded states.
pub struct Monitor<'a> {
    pub name: String,
    observe: Box<dyn Fn(&[Complex64]) -> f64 + 'a>,
}

impl<'a> Monitor<'a> {
    pub fn new(name: impl Into<String>, observe: impl Fn(&[Complex64]) -> f64 + 'a) -> Self {
        Self {
            name: name.into(),
            observe: Box::new(observe),
        }
    }

    pub fn eval(&self, state: &[Complex64]) -> f64 {
        (self.observe)(state)
    }
}

impl std::fmt::Debug for Monitor<'_> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Monitor").field("name", &self.name).finish()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonitorSeries {
    pub name: String,
    pub values: Vec<f64>,
}

impl MonitorSeries {
    /// `max_t |v(t) − v(0)|`.
    pub fn max_drift(&self) -> f64 {
        let first = self.values.first().copied().unwrap_or(0.0);
        self.values.iter().map(|v| (v - first).abs()).fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub snapshots: Vec<Vec<Complex64>>,
    pub monitors: Vec<MonitorSeries>,
    pub final_state: Vec<Complex64>,
}

impl Trajectory {
    pub fn monitor(&self, name: &str) -> Option<&MonitorSeries> {
        self.monitors.iter().find(|m| m.name == name)
    }

    pub fn final_time(&self) -> f64 {
        self.times.last().copied().unwrap_or(0.0)
    }
}

struct Workspace {
    k1: Vec<Complex64>,
    k2: Vec<Complex64>,
    k3: Vec<Complex64>,
    k4: Vec<Complex64>,
    tmp: Vec<Complex64>,
}

impl Workspace {
    fn new(n: usize) -> Self {
        let z = vec![Complex64::new(0.0, 0.0); n];
        Self {
            k1: z.clone(),
            k2: z.clone(),
            k3: z.clone(),
            k4: z.clone(),
            tmp: z,
        }
    }
}

fn axpy(out: &mut [Complex64], y: &[Complex64], a: f64, x: &[Complex64]) {
    for ((o, yi), xi) in out.iter_mut().zip(y).zip(x) {
        *o = yi + xi * a;
    }
}

fn step<F>(rhs: &mut F, method: Method, y: &mut [Complex64], h: f64, ws: &mut Workspace)
where
    F: FnMut(&[Complex64], &mut [Complex64]),
{
    match method {
        Method::Rk4 => {
            rhs(y, &mut ws.k1);
            axpy(&mut ws.tmp, y, 0.5 * h, &ws.k1);
            rhs(&ws.tmp, &mut ws.k2);
            axpy(&mut ws.tmp, y, 0.5 * h, &ws.k2);
            rhs(&ws.tmp, &mut ws.k3);
            axpy(&mut ws.tmp, y, h, &ws.k3);
            rhs(&ws.tmp, &mut ws.k4);
            let w = h / 6.0;
            for i in 0..y.len() {
                y[i] += (ws.k1[i] + (ws.k2[i] + ws.k3[i]) * 2.0 + ws.k4[i]) * w;
            }
        }
        Method::Midpoint => {
            rhs(y, &mut ws.k1);
            axpy(&mut ws.tmp, y, 0.5 * h, &ws.k1);
            rhs(&ws.tmp, &mut ws.k2);
            for (yi, k) in y.iter_mut().zip(&ws.k2) {
                *yi += k * h;
            }
        }
    }
}

/// Advances `initial` under `dy/dt = rhs(y)` and samples `monitors` at
/// `t = 0`, every `record_every` steps, and at `t_end`.
pub fn integrate<F>(
    mut rhs: F,
    initial: &[Complex64],
    config: &IntegratorConfig,
    monitors: &[Monitor<'_>],
) -> Result<Trajectory>
where
    F: FnMut(&[Complex64], &mut [Complex64]),
{
    config.validate()?;
    if !initial.iter().all(|c| c.re.is_finite() && c.im.is_finite()) {
        return Err(Error::NonFiniteState { last_good_time: 0.0 });
    }
    let steps = config.steps();
    let mut y = initial.to_vec();
    let mut ws = Workspace::new(y.len());
    let mut traj = Trajectory {
        times: Vec::new(),
        snapshots: Vec::new(),
        monitors: monitors
            .iter()
            .map(|m| MonitorSeries {
                name: m.name.clone(),
                values: Vec::new(),
            })
            .collect(),
        final_state: Vec::new(),
    };
    let record = |t: f64, y: &[Complex64], traj: &mut Trajectory| {
        traj.times.push(t);
        for (series, m) in traj.monitors.iter_mut().zip(monitors) {
            series.values.push(m.eval(y));
        }
        if config.snapshots {
            traj.snapshots.push(y.to_vec());
        }
    };
    record(0.0, &y, &mut traj);

    let mut t_prev = 0.0;
    for k in 1..=steps {
        let t = config.time_of(k, steps);
        step(&mut rhs, config.method, &mut y, t - t_prev, &mut ws);
        if !y.iter().all(|c| c.re.is_finite() && c.im.is_finite()) {
            return Err(Error::NonFiniteState { last_good_time: t_prev });
        }
        t_prev = t;
        if k % config.record_every == 0 || k == steps {
            record(t, &y, &mut traj);
        }
    }
    traj.final_state = y;
    Ok(traj)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn rotation_error(dt: f64, method: Method) -> f64 {
        // i ż = −T z  ⇒  z(t) = e^{iTt}
        let t_hop = 1.3;
        let cfg = IntegratorConfig {
            method,
            ..IntegratorConfig::new(dt, 2.0)
        };
        let traj = integrate(
            |y, out| out[0] = c(0.0, t_hop) * y[0],
            &[c(1.0, 0.0)],
            &cfg,
            &[],
        )
        .unwrap();
        (traj.final_state[0] - Complex64::from_polar(1.0, t_hop * 2.0)).norm()
    }

    #[test]
    fn zero_rhs_is_constant() {
        let y0 = [c(0.3, -0.2), c(1.0, 4.0)];
        let m = [Monitor::new("re0", |y: &[Complex64]| y[0].re)];
        let traj = integrate(|_, out| out.fill(c(0.0, 0.0)), &y0, &IntegratorConfig::new(0.1, 1.0), &m).unwrap();
        assert_eq!(traj.final_state, y0.to_vec());
        assert_eq!(traj.times.len(), 11);
        assert!(traj.monitor("re0").unwrap().values.iter().all(|&v| v == 0.3));
    }

    #[test]
    fn rk4_is_fourth_order() {
        let coarse = rotation_error(0.02, Method::Rk4);
        let fine = rotation_error(0.01, Method::Rk4);
        let ratio = coarse / fine;
        assert!((ratio - 16.0).abs() <= 2.0, "ratio {ratio}");
    }

    #[test]
    fn midpoint_is_second_order() {
        let ratio = rotation_error(0.02, Method::Midpoint) / rotation_error(0.01, Method::Midpoint);
        assert!((ratio - 4.0).abs() <= 0.5, "ratio {ratio}");
    }

    #[test]
    fn zero_duration_records_initial_only() {
        let traj = integrate(|y, out| out.copy_from_slice(y), &[c(1.0, 0.0)], &IntegratorConfig::new(1e-3, 0.0), &[]).unwrap();
        assert_eq!(traj.times, vec![0.0]);
        assert_eq!(traj.final_state, vec![c(1.0, 0.0)]);
    }

    #[test]
    fn stride_and_partial_last_step() {
        let cfg = IntegratorConfig {
            record_every: 4,
            snapshots: true,
            ..IntegratorConfig::new(0.1, 1.05)
        };
        let traj = integrate(|_, out| out[0] = c(1.0, 0.0), &[c(0.0, 0.0)], &cfg, &[]).unwrap();
        assert_eq!(traj.times.len(), 4);
        assert!((traj.times[1] - 0.4).abs() < 1e-15);
        assert_eq!(*traj.times.last().unwrap(), 1.05);
        assert!((traj.final_state[0].re - 1.05).abs() < 1e-12);
        assert_eq!(traj.snapshots.len(), traj.times.len());
        assert!(traj.times.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn blow_up_is_reported() {
        let err = integrate(|y, out| out[0] = y[0] * y[0] * 1e3, &[c(10.0, 0.0)], &IntegratorConfig::new(0.1, 5.0), &[])
            .unwrap_err();
        assert!(matches!(err, Error::NonFiniteState { .. }));
    }

    #[test]
    fn invalid_config() {
        assert!(IntegratorConfig::new(0.0, 1.0).validate().is_err());
        assert!(IntegratorConfig::new(1e-3, -1.0).validate().is_err());
        let cfg = IntegratorConfig {
            record_every: 0,
            ..IntegratorConfig::default()
        };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn record_times_match_trajectory() {
        let cfg = IntegratorConfig {
            record_every: 3,
            ..IntegratorConfig::new(0.1, 1.05)
        };
        let traj = integrate(|_, out| out[0] = c(0.0, 0.0), &[c(1.0, 0.0)], &cfg, &[]).unwrap();
        assert_eq!(traj.times, cfg.record_times());
    }

    #[test]
    fn deterministic() {
        let run = || {
            integrate(
                |y, out| {
                    out[0] = c(0.0, -1.0) * (y[0] * y[0].norm_sqr() - y[1]);
                    out[1] = c(0.0, -1.0) * (y[1] * y[1].norm_sqr() - y[0]);
                },
                &[c(1.0, 0.2), c(0.1, -0.5)],
                &IntegratorConfig::new(1e-3, 3.0),
                &[],
            )
            .unwrap()
        };
        let a = run();
        let b = run();
        assert_eq!(a.final_state, b.final_state);
    }
}
