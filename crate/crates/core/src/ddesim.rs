//! Fixed-step method-of-steps integration with cubic Hermite dense output,
//! plus amplitude and frequency extraction.

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::nfengine::DDEModel;

/// Magnitude treated as divergence.
pub const OVERFLOW_LIMIT: f64 = 1e8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("step {dt} must be positive and not exceed the smallest nonzero delay {min_delay}")]
    Step { dt: f64, min_delay: f64 },
    #[error("expected {expected} parameter values, got {got}")]
    Params { expected: usize, got: usize },
    #[error("end time must be positive")]
    EndTime,
}

/// Initial function on `[-r, 0]`.
#[derive(Clone)]
pub enum History {
    Constant(f64),
    Function(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl History {
    pub fn function<F: Fn(f64) -> f64 + Send + Sync + 'static>(f: F) -> Self {
        History::Function(Arc::new(f))
    }

    pub fn eval(&self, t: f64) -> f64 {
        match self {
            History::Constant(c) => *c,
            History::Function(f) => f(t),
        }
    }
}

impl std::fmt::Debug for History {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            History::Constant(c) => write!(f, "Constant({c})"),
            History::Function(_) => write!(f, "Function(..)"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    /// Right-hand side at each knot (Hermite slopes).
    pub slopes: Vec<f64>,
    pub dt: f64,
    pub history: History,
    /// Set when the solution left `|z| < OVERFLOW_LIMIT`; the trajectory is partial.
    pub overflow: bool,
}

impl Trajectory {
    /// Trajectory from uniformly spaced samples (slopes by central differences).
    pub fn from_samples(times: Vec<f64>, values: Vec<f64>) -> Self {
        let n = values.len();
        let dt = if n > 1 { times[1] - times[0] } else { 1.0 };
        let slopes = (0..n)
            .map(|i| {
                let (a, b) = (i.saturating_sub(1), (i + 1).min(n - 1));
                (values[b] - values[a]) / ((b - a).max(1) as f64 * dt)
            })
            .collect();
        let h0 = values.first().copied().unwrap_or(0.0);
        Self { times, values, slopes, dt, history: History::Constant(h0), overflow: false }
    }

    /// Dense output: history for `t <= 0`, cubic Hermite between knots.
    pub fn eval(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return self.history.eval(t);
        }
        let k = ((t / self.dt).floor() as usize).min(self.values.len().saturating_sub(2));
        let h = self.dt;
        let s = (t - self.times[k]) / h;
        let (y0, y1, m0, m1) = (self.values[k], self.values[k + 1], self.slopes[k], self.slopes[k + 1]);
        let s2 = s * s;
        let s3 = s2 * s;
        (2.0 * s3 - 3.0 * s2 + 1.0) * y0 + (s3 - 2.0 * s2 + s) * h * m0 + (-2.0 * s3 + 3.0 * s2) * y1 + (s3 - s2) * h * m1
    }

    pub fn last(&self) -> f64 {
        *self.values.last().unwrap_or(&0.0)
    }

    /// `t,z` rows.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,z\n");
        for (t, z) in self.times.iter().zip(&self.values) {
            out.push_str(&format!("{t:.10},{z:.12e}\n"));
        }
        out
    }
}

/// Default step `min(0.01, r / 100)`.
pub fn default_dt(model: &DDEModel) -> f64 {
    let r = model
        .linear
        .terms
        .iter()
        .map(|t| -t.theta)
        .chain(model.delays.iter().map(|t| -t))
        .fold(0.0, f64::max);
    if r > 0.0 {
        (r / 100.0).min(0.01)
    } else {
        0.01
    }
}

/// Integrates `z' = L z_t + eta(z(t + tau)) + xi(z(t + tau), mu)` with RK4.
pub fn integrate(model: &DDEModel, mu: &[f64], history: History, t_end: f64, dt: f64) -> Result<Trajectory, SimError> {
    if mu.len() != model.s {
        return Err(SimError::Params { expected: model.s, got: mu.len() });
    }
    if t_end <= 0.0 {
        return Err(SimError::EndTime);
    }
    let min_delay = model
        .linear
        .terms
        .iter()
        .map(|t| -t.theta)
        .chain(model.delays.iter().map(|t| -t))
        .filter(|&x| x > 0.0)
        .fold(f64::INFINITY, f64::min);
    if !(dt > 0.0 && dt <= min_delay + 1e-12) {
        return Err(SimError::Step { dt, min_delay });
    }
    let steps = (t_end / dt).round() as usize;
    let mut traj = Trajectory {
        times: Vec::with_capacity(steps + 1),
        values: Vec::with_capacity(steps + 1),
        slopes: Vec::with_capacity(steps + 1),
        dt,
        history: history.clone(),
        overflow: false,
    };
    let z0 = history.eval(0.0);
    traj.times.push(0.0);
    traj.values.push(z0);
    traj.slopes.push(0.0);

    // Delayed values at t + theta for t within the current step; the lookup
    // only touches completed knots because dt <= min delay.
    let rhs = |traj: &Trajectory, t: f64, z: f64, buf: &mut Vec<f64>| -> f64 {
        let lookup = |theta: f64| if theta == 0.0 { z } else { traj.eval(t + theta) };
        let mut acc = 0.0;
        for term in &model.linear.terms {
            acc += term.b * lookup(term.theta);
        }
        buf.clear();
        buf.extend(model.delays.iter().map(|&th| lookup(th)));
        acc + model.eval_nonlinearity(buf, mu)
    };
    let mut buf = Vec::with_capacity(model.delays.len());
    let f0 = rhs(&traj, 0.0, z0, &mut buf);
    traj.slopes[0] = f0;
    for n in 0..steps {
        let t = n as f64 * dt;
        let z = traj.values[n];
        let k1 = traj.slopes[n];
        let k2 = rhs(&traj, t + 0.5 * dt, z + 0.5 * dt * k1, &mut buf);
        let k3 = rhs(&traj, t + 0.5 * dt, z + 0.5 * dt * k2, &mut buf);
        let k4 = rhs(&traj, t + dt, z + dt * k3, &mut buf);
        let zn = z + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        if !zn.is_finite() || zn.abs() > OVERFLOW_LIMIT {
            traj.overflow = true;
            break;
        }
        traj.times.push(t + dt);
        traj.values.push(zn);
        let fz = rhs(&traj, t + dt, zn, &mut buf);
        traj.slopes.push(fz);
    }
    Ok(traj)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Oscillation {
    pub amplitude: f64,
    pub frequency: f64,
    pub extrema: usize,
}

/// Peak statistics over the trailing part of a trajectory. Extrema are
/// refined by parabolic interpolation through three samples.
pub fn measure_oscillation(traj: &Trajectory, discard_fraction: f64) -> Oscillation {
    let n = traj.values.len();
    let start = ((n as f64) * discard_fraction.clamp(0.0, 1.0)) as usize;
    let v = &traj.values;
    let mut peaks = Vec::new();
    let mut maxima_t = Vec::new();
    for i in start.max(1)..n.saturating_sub(1) {
        let (a, b, c) = (v[i - 1], v[i], v[i + 1]);
        let is_max = b > a && b >= c;
        let is_min = b < a && b <= c;
        if !(is_max || is_min) {
            continue;
        }
        let denom = a - 2.0 * b + c;
        let (off, val) = if denom != 0.0 {
            let off = 0.5 * (a - c) / denom;
            (off, b - 0.25 * (a - c) * off)
        } else {
            (0.0, b)
        };
        peaks.push(val.abs());
        if is_max {
            maxima_t.push(traj.times[i] + off * traj.dt);
        }
    }
    if peaks.len() < 2 || maxima_t.len() < 2 {
        return Oscillation { amplitude: 0.0, frequency: 0.0, extrema: peaks.len() };
    }
    let amplitude = peaks.iter().sum::<f64>() / peaks.len() as f64;
    let period = (maxima_t[maxima_t.len() - 1] - maxima_t[0]) / (maxima_t.len() - 1) as f64;
    Oscillation { amplitude, frequency: 2.0 * std::f64::consts::PI / period, extrema: peaks.len() }
}
