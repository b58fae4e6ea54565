//! The discrete iterations: the general fixed-momentum scheme, its HB and
//! NAG specializations, the equivalent two-step (u, v) form, the rescaled
//! forward-Euler baseline, and the exponential split-step method for the
//! damped second-order equation.

use crate::error::{Error, Result};
use crate::linalg::is_tame;
use crate::objective::ObjectiveSpec;

/// Fixed momentum factor, extrapolation weight, and step size, with the two
/// derived quantities used throughout.
#[derive(Debug, Clone, Copy)]
pub struct MomentumParams {
    pub lambda: f64,
    pub a: f64,
    pub h: f64,
}

impl MomentumParams {
    pub fn new(lambda: f64, a: f64, h: f64) -> Result<Self> {
        if !(lambda > 0.0 && lambda < 1.0) {
            return Err(Error::InvalidArgument(format!("lambda must lie in (0,1), got {lambda}")));
        }
        if !(a >= 0.0) {
            return Err(Error::InvalidArgument(format!("a must be >= 0, got {a}")));
        }
        if !(h > 0.0) || !h.is_finite() {
            return Err(Error::InvalidArgument(format!("h must be positive, got {h}")));
        }
        Ok(MomentumParams { lambda, a, h })
    }

    pub fn hb(lambda: f64, h: f64) -> Result<Self> {
        Self::new(lambda, 0.0, h)
    }

    pub fn nag(lambda: f64, h: f64) -> Result<Self> {
        Self::new(lambda, lambda, h)
    }

    /// lambda_bar = (1 - lambda)^-1
    pub fn lambda_bar(&self) -> f64 {
        1.0 / (1.0 - self.lambda)
    }

    /// alpha = (1 + lambda - 2a(1 - lambda)) / 2
    pub fn alpha(&self) -> f64 {
        crate::flows::alpha_of(self.lambda, self.a)
    }
}

/// A discrete run: iterates u_0..u_N at step h, optionally with the
/// difference-quotient velocities of the two-step form.
#[derive(Debug, Clone)]
pub struct DiscreteTrajectory {
    pub h: f64,
    pub points: Vec<Vec<f64>>,
    pub velocities: Option<Vec<Vec<f64>>>,
}

impl DiscreteTrajectory {
    pub fn dim(&self) -> usize {
        self.points[0].len()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Final time reached, n_steps * h.
    pub fn horizon(&self) -> f64 {
        (self.points.len() - 1) as f64 * self.h
    }
}

fn check_tame(u: &[f64], step: usize) -> Result<()> {
    if is_tame(u) {
        Ok(())
    } else {
        Err(Error::Divergence { step })
    }
}

/// The general momentum iteration
///   u_{n+1} = u_n + lambda (u_n - u_{n-1}) + h f(u_n + a (u_n - u_{n-1})),
///   u_1 = u_0 + h f(u_0),
/// run in its equivalent (u, v) form with v_0 = 0. a = 0 is HB, a = lambda is NAG.
pub fn run_general(
    obj: &ObjectiveSpec,
    params: &MomentumParams,
    u0: &[f64],
    n_steps: usize,
) -> Result<DiscreteTrajectory> {
    if n_steps < 1 {
        return Err(Error::InvalidArgument("n_steps must be >= 1".into()));
    }
    let mut t = run_two_form(obj, params, u0, &vec![0.0; u0.len()], n_steps)?;
    t.velocities = None;
    Ok(t)
}

/// Heavy Ball: `run_general` with a = 0.
pub fn run_hb(
    obj: &ObjectiveSpec,
    lambda: f64,
    h: f64,
    u0: &[f64],
    n_steps: usize,
) -> Result<DiscreteTrajectory> {
    run_general(obj, &MomentumParams::hb(lambda, h)?, u0, n_steps)
}

/// Nesterov: `run_general` with a = lambda.
pub fn run_nag(
    obj: &ObjectiveSpec,
    lambda: f64,
    h: f64,
    u0: &[f64],
    n_steps: usize,
) -> Result<DiscreteTrajectory> {
    run_general(obj, &MomentumParams::nag(lambda, h)?, u0, n_steps)
}

/// The two-step form
///   u_{n+1} = u_n + h lambda v_n + h f(u_n + h a v_n)
///   v_{n+1} = lambda v_n + f(u_n + h a v_n)
/// with one shared f evaluation per step. With v_0 = 0 the u-sequence is the
/// general iteration exactly.
pub fn run_two_form(
    obj: &ObjectiveSpec,
    params: &MomentumParams,
    u0: &[f64],
    v0: &[f64],
    n_steps: usize,
) -> Result<DiscreteTrajectory> {
    if u0.len() != obj.dim() || v0.len() != obj.dim() {
        return Err(Error::InvalidArgument("initial data dimension mismatch".into()));
    }
    if n_steps < 1 {
        return Err(Error::InvalidArgument("n_steps must be >= 1".into()));
    }
    let (lambda, a, h) = (params.lambda, params.a, params.h);
    let mut u = u0.to_vec();
    let mut v = v0.to_vec();
    let mut points = Vec::with_capacity(n_steps + 1);
    let mut velocities = Vec::with_capacity(n_steps + 1);
    points.push(u.clone());
    velocities.push(v.clone());
    for n in 0..n_steps {
        let stage: Vec<f64> = u.iter().zip(&v).map(|(x, y)| x + h * a * y).collect();
        let fw = obj.f(&stage);
        let u_next: Vec<f64> = u
            .iter()
            .zip(v.iter().zip(&fw))
            .map(|(x, (y, g))| x + h * lambda * y + h * g)
            .collect();
        let v_next: Vec<f64> = v.iter().zip(&fw).map(|(y, g)| lambda * y + g).collect();
        u = u_next;
        v = v_next;
        check_tame(&u, n + 1)?;
        points.push(u.clone());
        velocities.push(v.clone());
    }
    Ok(DiscreteTrajectory { h, points, velocities: Some(velocities) })
}

/// Forward Euler on the rescaled flow: u_{n+1} = u_n - (h/(1-lambda)) grad phi(u_n).
/// lambda only rescales the learning rate; lambda = 0 is plain gradient descent.
pub fn run_rescaled_euler(
    obj: &ObjectiveSpec,
    lambda: f64,
    h: f64,
    u0: &[f64],
    n_steps: usize,
) -> Result<DiscreteTrajectory> {
    if !(0.0..1.0).contains(&lambda) {
        return Err(Error::InvalidArgument(format!("lambda must lie in [0,1), got {lambda}")));
    }
    if !(h > 0.0) || n_steps < 1 {
        return Err(Error::InvalidArgument("need h > 0 and n_steps >= 1".into()));
    }
    let step = h / (1.0 - lambda);
    let mut u = u0.to_vec();
    let mut points = Vec::with_capacity(n_steps + 1);
    points.push(u.clone());
    for n in 0..n_steps {
        let g = obj.grad(&u);
        u = u.iter().zip(&g).map(|(x, gi)| x - step * gi).collect();
        check_tame(&u, n + 1)?;
        points.push(u.clone());
    }
    Ok(DiscreteTrajectory { h, points, velocities: None })
}

/// The strong-convexity momentum factor (1 - sqrt(mu h)) / (1 + sqrt(mu h)).
/// Requires mu h < 1 so the value lies in (0, 1]; h = 0 returns the boundary value 1.
pub fn lambda_mu(mu: f64, h: f64) -> Result<f64> {
    if !(mu > 0.0) || !(h >= 0.0) {
        return Err(Error::InvalidArgument("need mu > 0 and h >= 0".into()));
    }
    let s = (mu * h).sqrt();
    if s >= 1.0 {
        return Err(Error::OutOfRange(format!(
            "mu*h = {} >= 1 gives a momentum factor <= 0",
            mu * h
        )));
    }
    Ok((1.0 - s) / (1.0 + s))
}

/// Split-step method for u'' + 2 sqrt(mu) u' + grad phi(u) = 0: the exact
/// linear-damping flow over sqrt(h), then a gradient kick of size sqrt(h).
pub fn run_wilson(
    obj: &ObjectiveSpec,
    mu: f64,
    h: f64,
    u0: &[f64],
    v0: &[f64],
    n_steps: usize,
) -> Result<DiscreteTrajectory> {
    if !(mu > 0.0) {
        return Err(Error::InvalidArgument(format!("mu must be positive, got {mu}")));
    }
    if u0.len() != obj.dim() || v0.len() != obj.dim() {
        return Err(Error::InvalidArgument("initial data dimension mismatch".into()));
    }
    if !(h > 0.0) || n_steps < 1 {
        return Err(Error::InvalidArgument("need h > 0 and n_steps >= 1".into()));
    }
    let decay = (-2.0 * (mu * h).sqrt()).exp();
    let drift = (1.0 - decay) / (2.0 * mu.sqrt());
    let kick = h.sqrt();
    let mut u = u0.to_vec();
    let mut v = v0.to_vec();
    let mut points = vec![u.clone()];
    let mut velocities = vec![v.clone()];
    for n in 0..n_steps {
        u = u.iter().zip(&v).map(|(x, y)| x + drift * y).collect();
        let g = obj.grad(&u);
        v = v.iter().zip(&g).map(|(y, gi)| decay * y - kick * gi).collect();
        check_tame(&u, n + 1)?;
        check_tame(&v, n + 1)?;
        points.push(u.clone());
        velocities.push(v.clone());
    }
    Ok(DiscreteTrajectory { h, points, velocities: Some(velocities) })
}

/// The iteration-dependent schedule n / (n + 3). Exploratory only; no
/// convergence statement covers it and the acceptance gates exclude it.
pub fn lambda_schedule_n(n: i64) -> Result<f64> {
    if n < 0 {
        return Err(Error::InvalidArgument(format!("n must be >= 0, got {n}")));
    }
    Ok(n as f64 / (n as f64 + 3.0))
}
