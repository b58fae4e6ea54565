//! High-accuracy reference solutions of the limiting ODEs: the rescaled
//! gradient flow, the damped small-mass second-order equation, the modified
//! gradient flow, and the damped equation behind the split-step method.
//!
//! Diagonal quadratics get closed forms (per-coordinate exponentials or
//! characteristic roots); everything else is integrated with the classical
//! fourth-order one-step method on a fixed substep, refined until a
//! step-halving Richardson comparison meets the accuracy target.

use crate::error::{Error, Result};
use crate::linalg::{dist, norm};
use crate::objective::{modified_grad, ObjectiveKind, ObjectiveSpec};
use crate::schemes::MomentumParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    ClosedForm,
    Integrated,
}

/// One coordinate of the closed-form solution of
/// A2 y'' + A1 y' + q y = 0 (A2 = 0 degenerates to first order).
#[derive(Debug, Clone, Copy)]
enum ScalarMode {
    /// c1 e^{r1 t} + c2 e^{r2 t}
    RealPair { r1: f64, r2: f64, c1: f64, c2: f64 },
    /// (a + b t) e^{r t}
    Repeated { r: f64, a: f64, b: f64 },
    /// e^{s t} (a cos w t + b sin w t)
    Complex { s: f64, w: f64, a: f64, b: f64 },
}

impl ScalarMode {
    fn eval(&self, t: f64) -> f64 {
        match *self {
            ScalarMode::RealPair { r1, r2, c1, c2 } => c1 * (r1 * t).exp() + c2 * (r2 * t).exp(),
            ScalarMode::Repeated { r, a, b } => (a + b * t) * (r * t).exp(),
            ScalarMode::Complex { s, w, a, b } => {
                (s * t).exp() * (a * (w * t).cos() + b * (w * t).sin())
            }
        }
    }

    fn eval_deriv(&self, t: f64) -> f64 {
        match *self {
            ScalarMode::RealPair { r1, r2, c1, c2 } => {
                c1 * r1 * (r1 * t).exp() + c2 * r2 * (r2 * t).exp()
            }
            ScalarMode::Repeated { r, a, b } => (b + r * (a + b * t)) * (r * t).exp(),
            ScalarMode::Complex { s, w, a, b } => {
                let (c, sn) = ((w * t).cos(), (w * t).sin());
                (s * t).exp() * (s * (a * c + b * sn) + w * (-a * sn + b * c))
            }
        }
    }

    /// Second-order mode from y(0), y'(0) and the quadratic A2 r^2 + A1 r + q = 0.
    fn from_ivp(a2: f64, a1: f64, q: f64, y0: f64, v0: f64) -> ScalarMode {
        let disc = a1 * a1 - 4.0 * a2 * q;
        let scale = a1.abs().max((4.0 * a2 * q).abs()).max(1e-300);
        if disc.abs() < 1e-13 * scale {
            let r = -a1 / (2.0 * a2);
            ScalarMode::Repeated { r, a: y0, b: v0 - r * y0 }
        } else if disc > 0.0 {
            let sq = disc.sqrt();
            // rationalized pairing avoids cancellation in the small root
            let r1 = if a1 >= 0.0 { (-a1 - sq) / (2.0 * a2) } else { (-a1 + sq) / (2.0 * a2) };
            let r2 = q / (a2 * r1);
            let c2 = (v0 - r1 * y0) / (r2 - r1);
            ScalarMode::RealPair { r1, r2, c1: y0 - c2, c2 }
        } else {
            let s = -a1 / (2.0 * a2);
            let w = (-disc).sqrt() / (2.0 * a2);
            ScalarMode::Complex { s, w, a: y0, b: (v0 - s * y0) / w }
        }
    }
}

/// Fixed-substep dense output of the one-step integrator: states and slopes
/// at the nodes, sampled in between by cubic Hermite interpolation.
#[derive(Debug, Clone)]
struct DenseOutput {
    dt: f64,
    states: Vec<Vec<f64>>,
    slopes: Vec<Vec<f64>>,
}

impl DenseOutput {
    fn sample(&self, t: f64) -> Vec<f64> {
        let n = self.states.len() - 1;
        if n == 0 {
            return self.states[0].clone();
        }
        let pos = (t / self.dt).clamp(0.0, n as f64);
        let i = (pos.floor() as usize).min(n - 1);
        let th = pos - i as f64;
        let (h00, h10, h01, h11) = (
            (1.0 + 2.0 * th) * (1.0 - th) * (1.0 - th),
            th * (1.0 - th) * (1.0 - th),
            th * th * (3.0 - 2.0 * th),
            th * th * (th - 1.0),
        );
        let (y0, y1) = (&self.states[i], &self.states[i + 1]);
        let (f0, f1) = (&self.slopes[i], &self.slopes[i + 1]);
        (0..y0.len())
            .map(|k| h00 * y0[k] + h10 * self.dt * f0[k] + h01 * y1[k] + h11 * self.dt * f1[k])
            .collect()
    }
}

fn rk4(rhs: &dyn Fn(&[f64]) -> Vec<f64>, y0: &[f64], t_end: f64, n: usize) -> DenseOutput {
    let dt = t_end / n as f64;
    let mut y = y0.to_vec();
    let mut states = Vec::with_capacity(n + 1);
    let mut slopes = Vec::with_capacity(n + 1);
    let mut k1 = rhs(&y);
    states.push(y.clone());
    slopes.push(k1.clone());
    for _ in 0..n {
        let k2 = rhs(&crate::linalg::axpy(&y, 0.5 * dt, &k1));
        let k3 = rhs(&crate::linalg::axpy(&y, 0.5 * dt, &k2));
        let k4 = rhs(&crate::linalg::axpy(&y, dt, &k3));
        for i in 0..y.len() {
            y[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        k1 = rhs(&y);
        states.push(y.clone());
        slopes.push(k1.clone());
    }
    DenseOutput { dt, states, slopes }
}

/// Integrate with substeps halved until the coarse/fine node difference,
/// divided by 2^4 - 1, is below `target * (1 + sup |y|)`. Returns the fine
/// solution and the final error estimate.
fn integrate_verified(
    rhs: &dyn Fn(&[f64]) -> Vec<f64>,
    y0: &[f64],
    t_end: f64,
    n0: usize,
    target: f64,
) -> (DenseOutput, f64) {
    if t_end == 0.0 {
        let f0 = rhs(y0);
        return (DenseOutput { dt: 1.0, states: vec![y0.to_vec()], slopes: vec![f0] }, 0.0);
    }
    let mut n = n0.max(8);
    let mut coarse = rk4(rhs, y0, t_end, n);
    for _ in 0..22 {
        let fine = rk4(rhs, y0, t_end, 2 * n);
        let mut diff = 0.0f64;
        let mut sup = 0.0f64;
        for (i, c) in coarse.states.iter().enumerate() {
            diff = diff.max(dist(c, &fine.states[2 * i]));
            sup = sup.max(norm(c));
        }
        let est = diff / 15.0;
        let ok = est.is_finite() && sup.is_finite() && est < target * (1.0 + sup);
        if ok || 2 * n > 4_000_000 {
            return (fine, est);
        }
        n *= 2;
        coarse = fine;
    }
    let est = f64::INFINITY;
    (coarse, est)
}

const ACCURACY_TARGET: f64 = 1e-10;

#[derive(Debug, Clone)]
enum Repr {
    /// Per-coordinate scalar modes around a center (closed forms).
    Modes { modes: Vec<ScalarMode>, center: Vec<f64> },
    /// Dense integrator output; the reported solution is the first `out_dim`
    /// components, and for second-order systems the next `out_dim` are du/dt.
    Dense { dense: DenseOutput, out_dim: usize, second_order: bool },
}

/// A sampleable reference solution on [0, T] with a declared accuracy.
#[derive(Debug, Clone)]
pub struct ContinuousSolution {
    repr: Repr,
    t_end: f64,
    accuracy: f64,
    provenance: Provenance,
    /// Set when a stated smallness hypothesis was violated (warn, don't fail).
    pub hypothesis_warning: Option<String>,
}

impl ContinuousSolution {
    pub fn t_end(&self) -> f64 {
        self.t_end
    }

    pub fn accuracy(&self) -> f64 {
        self.accuracy
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    /// u(t); t is clamped into [0, T].
    pub fn sample(&self, t: f64) -> Vec<f64> {
        let t = t.clamp(0.0, self.t_end.max(0.0));
        match &self.repr {
            Repr::Modes { modes, center } => modes
                .iter()
                .zip(center)
                .map(|(m, c)| c + m.eval(t))
                .collect(),
            Repr::Dense { dense, out_dim, .. } => {
                let y = dense.sample(t);
                y[..*out_dim].to_vec()
            }
        }
    }

    /// du/dt(t) where available (closed forms and second-order systems).
    pub fn sample_deriv(&self, t: f64) -> Vec<f64> {
        let t = t.clamp(0.0, self.t_end.max(0.0));
        match &self.repr {
            Repr::Modes { modes, .. } => modes.iter().map(|m| m.eval_deriv(t)).collect(),
            Repr::Dense { dense, out_dim, second_order } => {
                let y = dense.sample(t);
                if *second_order {
                    y[*out_dim..2 * *out_dim].to_vec()
                } else {
                    // slope of the Hermite interpolant
                    let eps = dense.dt * 1e-3;
                    let (tp, tm) = ((t + eps).min(self.t_end), (t - eps).max(0.0));
                    let (yp, ym) = (dense.sample(tp), dense.sample(tm));
                    yp.iter()
                        .zip(&ym)
                        .take(*out_dim)
                        .map(|(a, b)| (a - b) / (tp - tm))
                        .collect()
                }
            }
        }
    }
}

fn validate_lambda_t(lambda: f64, t_end: f64) -> Result<()> {
    if !(0.0..1.0).contains(&lambda) {
        return Err(Error::InvalidArgument(format!("lambda must lie in [0,1), got {lambda}")));
    }
    if !(t_end >= 0.0) {
        return Err(Error::InvalidArgument("horizon T must be >= 0".into()));
    }
    Ok(())
}

/// Solve du/dt = -(1-lambda)^{-1} grad phi(u), u(0) = u0, on [0, T].
pub fn solve_rgf(obj: &ObjectiveSpec, lambda: f64, u0: &[f64], t_end: f64) -> Result<ContinuousSolution> {
    validate_lambda_t(lambda, t_end)?;
    if u0.len() != obj.dim() {
        return Err(Error::InvalidArgument("u0 dimension mismatch".into()));
    }
    let lb = 1.0 / (1.0 - lambda);
    if obj.kind() == ObjectiveKind::Quadratic {
        let diag = obj.quadratic_diag().unwrap().to_vec();
        let center = center_of(obj);
        let modes = diag
            .iter()
            .zip(u0.iter().zip(&center))
            .map(|(q, (x, c))| ScalarMode::RealPair { r1: -lb * q, r2: 0.0, c1: x - c, c2: 0.0 })
            .collect();
        return Ok(ContinuousSolution {
            repr: Repr::Modes { modes, center },
            t_end,
            accuracy: 1e-15,
            provenance: Provenance::ClosedForm,
            hypothesis_warning: None,
        });
    }
    Ok(solve_rgf_integrated(obj, lambda, u0, t_end))
}

/// Integrated variant used for non-quadratic objectives and as the
/// closed-form cross-check in tests.
pub(crate) fn solve_rgf_integrated(
    obj: &ObjectiveSpec,
    lambda: f64,
    u0: &[f64],
    t_end: f64,
) -> ContinuousSolution {
    let lb = 1.0 / (1.0 - lambda);
    let rhs = move |y: &[f64]| -> Vec<f64> { obj.grad(y).iter().map(|g| -lb * g).collect() };
    let (dense, est) = integrate_verified(&rhs, u0, t_end, 16, ACCURACY_TARGET);
    ContinuousSolution {
        repr: Repr::Dense { dense, out_dim: u0.len(), second_order: false },
        t_end,
        accuracy: est,
        provenance: Provenance::Integrated,
        hypothesis_warning: None,
    }
}

/// alpha = (1 + lambda - 2 a (1 - lambda)) / 2.
pub fn alpha_of(lambda: f64, a: f64) -> f64 {
    0.5 * (1.0 + lambda - 2.0 * a * (1.0 - lambda))
}

/// The transient-matching initial velocity
/// u'(0) = ((1 - 2 alpha) / (2 alpha - lambda + 1)) f(u0).
pub fn beta_init(obj: &ObjectiveSpec, lambda: f64, a: f64, u0: &[f64]) -> Vec<f64> {
    let alpha = alpha_of(lambda, a);
    let beta = (1.0 - 2.0 * alpha) / (2.0 * alpha - lambda + 1.0);
    obj.f(u0).into_iter().map(|x| beta * x).collect()
}

fn center_of(obj: &ObjectiveSpec) -> Vec<f64> {
    // quadratic minimum; other kinds are handled by the integrated paths
    let d = obj.dim();
    let g0 = obj.grad(&vec![0.0; d]);
    let diag = obj.quadratic_diag().unwrap();
    g0.iter().zip(diag).map(|(g, q)| if *q == 0.0 { 0.0 } else { -g / q }).collect()
}

fn b1_hint(obj: &ObjectiveSpec) -> f64 {
    // cheap upper estimate of sup ||D^2 phi|| used only for hypothesis warnings
    match obj.kind() {
        ObjectiveKind::Quadratic => obj
            .quadratic_diag()
            .unwrap()
            .iter()
            .fold(0.0f64, |m, q| m.max(q.abs())),
        _ => {
            let d = obj.dim();
            let mut rng = crate::rng::CounterRng::new(0xb1).split(3);
            let mut b1 = 0.0f64;
            for _ in 0..64 {
                let u: Vec<f64> = (0..d).map(|_| rng.uniform_in(-3.0, 3.0)).collect();
                let mut w: Vec<f64> = (0..d).map(|_| rng.normal()).collect();
                for _ in 0..6 {
                    let hw = obj.hess_vec(&u, &w);
                    let n = norm(&hw);
                    if n == 0.0 {
                        break;
                    }
                    w = hw.iter().map(|x| x / n).collect();
                }
                b1 = b1.max(norm(&obj.hess_vec(&u, &w)));
            }
            b1
        }
    }
}

/// Solve h alpha u'' + (1 - lambda) u' = -grad phi(u) with u(0) = u0 and
/// u'(0) = `u0_prime` (or the transient-matching default when `None`).
pub fn solve_visco(
    obj: &ObjectiveSpec,
    params: &MomentumParams,
    u0: &[f64],
    u0_prime: Option<&[f64]>,
    t_end: f64,
) -> Result<ContinuousSolution> {
    if u0.len() != obj.dim() {
        return Err(Error::InvalidArgument("u0 dimension mismatch".into()));
    }
    if !(t_end >= 0.0) {
        return Err(Error::InvalidArgument("horizon T must be >= 0".into()));
    }
    let (lambda, a, h) = (params.lambda, params.a, params.h);
    let alpha = alpha_of(lambda, a);
    if alpha <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "alpha = {alpha} must be strictly positive for the damped second-order solve"
        )));
    }
    let v0 = match u0_prime {
        Some(v) => {
            if v.len() != obj.dim() {
                return Err(Error::InvalidArgument("u0_prime dimension mismatch".into()));
            }
            v.to_vec()
        }
        None => beta_init(obj, lambda, a, u0),
    };
    let h_bound = (1.0 - lambda) * (1.0 - lambda) / (2.0 * alpha * b1_hint(obj).max(1e-300));
    let warning = (h > h_bound).then(|| {
        format!("step h = {h} exceeds the smallness bound (1-lambda)^2/(2 alpha B1) = {h_bound:.3e}")
    });

    if obj.kind() == ObjectiveKind::Quadratic {
        let diag = obj.quadratic_diag().unwrap();
        let center = center_of(obj);
        let modes = diag
            .iter()
            .zip(u0.iter().zip(center.iter().zip(&v0)))
            .map(|(q, (x, (c, v)))| ScalarMode::from_ivp(h * alpha, 1.0 - lambda, *q, x - c, *v))
            .collect();
        return Ok(ContinuousSolution {
            repr: Repr::Modes { modes, center },
            t_end,
            accuracy: 1e-14,
            provenance: Provenance::ClosedForm,
            hypothesis_warning: warning,
        });
    }

    // first-order system in (u, w = du/dt); fast scale ~ h alpha / (1 - lambda)
    let d = obj.dim();
    let ha = h * alpha;
    let oml = 1.0 - lambda;
    let rhs = move |y: &[f64]| -> Vec<f64> {
        let (u, w) = y.split_at(d);
        let g = obj.grad(u);
        let mut out = Vec::with_capacity(2 * d);
        out.extend_from_slice(w);
        out.extend(g.iter().zip(w).map(|(gi, wi)| (-gi - oml * wi) / ha));
        out
    };
    let y0: Vec<f64> = u0.iter().chain(&v0).cloned().collect();
    let n0 = ((t_end / (h / 50.0)).ceil() as usize).max(16);
    let (dense, est) = integrate_verified(&rhs, &y0, t_end, n0, ACCURACY_TARGET);
    Ok(ContinuousSolution {
        repr: Repr::Dense { dense, out_dim: d, second_order: true },
        t_end,
        accuracy: est,
        provenance: Provenance::Integrated,
        hypothesis_warning: warning,
    })
}

/// Coefficient of the gradient-squared correction in the modified potential:
/// c = lambda_bar (lambda_bar - a - 1/2). With this value the two-step
/// scheme restricted to its invariant graph matches the modified flow to
/// second order in h (per-coordinate exponents agree through O(h^2) for
/// every a; the widely quoted +1/2 variant only matches to first order).
pub fn c_coefficient(lambda: f64, a: f64) -> f64 {
    let lb = 1.0 / (1.0 - lambda);
    lb * (lb - a - 0.5)
}

/// Solve du/dt = -(1-lambda)^{-1} grad phi_h(u) with the modified potential
/// phi_h = phi + (h c / 2) |grad phi|^2 and c = `c_coefficient`(lambda, a).
pub fn solve_modified_flow(
    obj: &ObjectiveSpec,
    lambda: f64,
    a: f64,
    h: f64,
    u0: &[f64],
    t_end: f64,
) -> Result<ContinuousSolution> {
    validate_lambda_t(lambda, t_end)?;
    if u0.len() != obj.dim() {
        return Err(Error::InvalidArgument("u0 dimension mismatch".into()));
    }
    if !(h >= 0.0) {
        return Err(Error::InvalidArgument("h must be >= 0".into()));
    }
    let lb = 1.0 / (1.0 - lambda);
    let c = c_coefficient(lambda, a);
    let rhs = move |y: &[f64]| -> Vec<f64> {
        modified_grad(obj, c, h, y).iter().map(|g| -lb * g).collect()
    };
    let (dense, est) = integrate_verified(&rhs, u0, t_end, 16, ACCURACY_TARGET);
    Ok(ContinuousSolution {
        repr: Repr::Dense { dense, out_dim: u0.len(), second_order: false },
        t_end,
        accuracy: est,
        provenance: Provenance::Integrated,
        hypothesis_warning: None,
    })
}

/// Solve u'' + 2 sqrt(mu) u' + grad phi(u) = 0 as a first-order system.
pub fn solve_wilson_ode(
    obj: &ObjectiveSpec,
    mu: f64,
    u0: &[f64],
    v0: &[f64],
    t_end: f64,
) -> Result<ContinuousSolution> {
    if !(mu > 0.0) {
        return Err(Error::InvalidArgument(format!("mu must be positive, got {mu}")));
    }
    if u0.len() != obj.dim() || v0.len() != obj.dim() {
        return Err(Error::InvalidArgument("initial data dimension mismatch".into()));
    }
    if !(t_end >= 0.0) {
        return Err(Error::InvalidArgument("horizon T must be >= 0".into()));
    }
    let d = obj.dim();
    let damping = 2.0 * mu.sqrt();
    let rhs = move |y: &[f64]| -> Vec<f64> {
        let (u, w) = y.split_at(d);
        let g = obj.grad(u);
        let mut out = Vec::with_capacity(2 * d);
        out.extend_from_slice(w);
        out.extend(g.iter().zip(w).map(|(gi, wi)| -gi - damping * wi));
        out
    };
    let y0: Vec<f64> = u0.iter().chain(v0).cloned().collect();
    let (dense, est) = integrate_verified(&rhs, &y0, t_end, 32, ACCURACY_TARGET);
    Ok(ContinuousSolution {
        repr: Repr::Dense { dense, out_dim: d, second_order: true },
        t_end,
        accuracy: est,
        provenance: Provenance::Integrated,
        hypothesis_warning: None,
    })
}

/// A trajectory with analytically known time derivatives, for
/// manufactured-solution consistency checks.
pub trait SmoothTrajectory {
    fn dim(&self) -> usize;
    /// Order-`k` derivative at `t`; order 0 is the value itself.
    fn deriv(&self, order: usize, t: f64) -> Vec<f64>;
}

/// u_i(t) = c_i exp(r_i t).
#[derive(Debug, Clone)]
pub struct ExpTrajectory {
    pub coeffs: Vec<f64>,
    pub rates: Vec<f64>,
}

impl SmoothTrajectory for ExpTrajectory {
    fn dim(&self) -> usize {
        self.coeffs.len()
    }

    fn deriv(&self, order: usize, t: f64) -> Vec<f64> {
        self.coeffs
            .iter()
            .zip(&self.rates)
            .map(|(c, r)| c * r.powi(order as i32) * (r * t).exp())
            .collect()
    }
}

/// Per-coordinate polynomials sum_j a_j t^j.
#[derive(Debug, Clone)]
pub struct PolyTrajectory {
    pub coeffs: Vec<Vec<f64>>,
}

impl SmoothTrajectory for PolyTrajectory {
    fn dim(&self) -> usize {
        self.coeffs.len()
    }

    fn deriv(&self, order: usize, t: f64) -> Vec<f64> {
        self.coeffs
            .iter()
            .map(|a| {
                let mut s = 0.0;
                for (j, aj) in a.iter().enumerate().skip(order) {
                    let mut fall = 1.0;
                    for k in 0..order {
                        fall *= (j - k) as f64;
                    }
                    s += aj * fall * t.powi((j - order) as i32);
                }
                s
            })
            .collect()
    }
}

/// Residual of the two-step difference operator against the order-`p`
/// truncated forcing evaluated along a manufactured trajectory:
/// R(t) = u(t+h) - u(t) - lambda (u(t) - u(t-h)) - h f~(t) with
/// f~(t) = sum_{k=1..p} h^{k-1} (1 + (-1)^k lambda)/k! u^(k)(t).
/// |R| = O(h^{p+1}) for smooth u.
pub fn modified_operator_residual(
    lambda: f64,
    p: usize,
    h: f64,
    u_ref: &dyn SmoothTrajectory,
    t: f64,
) -> Result<Vec<f64>> {
    if !(1..=3).contains(&p) {
        return Err(Error::Unsupported(format!("truncation order p = {p} not in {{1,2,3}}")));
    }
    if !(h > 0.0) {
        return Err(Error::InvalidArgument("h must be positive".into()));
    }
    let d = u_ref.dim();
    let mut forcing = vec![0.0; d];
    let mut kfact = 1.0;
    for k in 1..=p {
        kfact *= k as f64;
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        let w = h.powi(k as i32 - 1) * (1.0 + sign * lambda) / kfact;
        let dk = u_ref.deriv(k, t);
        for i in 0..d {
            forcing[i] += w * dk[i];
        }
    }
    let up = u_ref.deriv(0, t + h);
    let uc = u_ref.deriv(0, t);
    let um = u_ref.deriv(0, t - h);
    Ok((0..d)
        .map(|i| up[i] - uc[i] - lambda * (uc[i] - um[i]) - h * forcing[i])
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objective::{make_quadratic, make_trigonometric};

    #[test]
    fn rgf_closed_form_exponential() {
        let obj = make_quadratic(1.0, 1).unwrap();
        let sol = solve_rgf(&obj, 0.5, &[1.0], 1.0).unwrap();
        assert_eq!(sol.provenance(), Provenance::ClosedForm);
        assert!((sol.sample(0.1)[0] - (-0.2f64).exp()).abs() < 1e-14);
        assert!((sol.sample(0.1)[0] - 0.818731).abs() < 1e-6);
        assert_eq!(sol.sample(0.0)[0], 1.0);
    }

    #[test]
    fn rgf_constant_at_critical_point() {
        let obj = make_quadratic(5.0, 2).unwrap();
        let sol = solve_rgf(&obj, 0.9, &[0.0, 0.0], 2.0).unwrap();
        for k in 0..=10 {
            assert_eq!(sol.sample(0.2 * k as f64), vec![0.0, 0.0]);
        }
    }

    #[test]
    fn rgf_time_rescaling_identity() {
        let obj = make_trigonometric(2, &[1.0, 1.5]).unwrap();
        let u0 = [0.8, -1.1];
        let lambda = 0.6;
        let t_end = 1.5;
        let fast = solve_rgf(&obj, lambda, &u0, t_end).unwrap();
        let slow = solve_rgf(&obj, 0.0, &u0, t_end / (1.0 - lambda)).unwrap();
        for k in 0..=30 {
            let t = t_end * k as f64 / 30.0;
            let d = dist(&fast.sample(t), &slow.sample(t / (1.0 - lambda)));
            assert!(d < 1e-9, "t={t}: {d}");
        }
    }

    #[test]
    fn rgf_closed_vs_integrated_on_quadratic() {
        let obj = make_quadratic(10.0, 2).unwrap();
        let u0 = [1.0, -0.7];
        let closed = solve_rgf(&obj, 0.5, &u0, 2.0).unwrap();
        let integrated = solve_rgf_integrated(&obj, 0.5, &u0, 2.0);
        assert_eq!(integrated.provenance(), Provenance::Integrated);
        let mut sup: f64 = 0.0;
        for k in 0..=100 {
            let t = 2.0 * k as f64 / 100.0;
            sup = sup.max(dist(&closed.sample(t), &integrated.sample(t)));
        }
        assert!(sup < 1e-8, "sup distance {sup}");
    }

    #[test]
    fn alpha_and_beta_examples() {
        assert!((alpha_of(0.9, 0.0) - 0.95).abs() < 1e-15);
        assert!((alpha_of(0.9, 0.9) - 0.86).abs() < 1e-15);
        assert!(alpha_of(0.9, 0.9) < alpha_of(0.9, 0.0));
        let obj = make_quadratic(1.0, 1).unwrap();
        let b = beta_init(&obj, 0.9, 0.0, &[1.0]);
        // coefficient (1-1.9)/(1.9-0.9+1) = -0.45 applied to f(1) = -1
        assert!((b[0] - 0.45).abs() < 1e-14);
    }

    #[test]
    fn visco_rejects_nonpositive_alpha() {
        // a large enough makes alpha <= 0: alpha = (1 + l - 2a(1-l))/2
        let obj = make_quadratic(1.0, 1).unwrap();
        let p = MomentumParams::new(0.5, 2.0, 0.01).unwrap();
        assert!(alpha_of(0.5, 2.0) <= 0.0 || solve_visco(&obj, &p, &[1.0], None, 1.0).is_ok());
        let p_bad = MomentumParams::new(0.5, 1.6, 0.01).unwrap();
        assert!(alpha_of(0.5, 1.6) < 0.0);
        assert!(solve_visco(&obj, &p_bad, &[1.0], None, 1.0).is_err());
    }

    #[test]
    fn visco_discriminant_sign_drives_oscillation() {
        // (1-lambda)^2 < 4 h alpha q gives complex roots
        let obj = make_quadratic(1.0, 1).unwrap();
        let p = MomentumParams::hb(0.9, 2f64.powi(-6)).unwrap();
        assert!((1.0 - 0.9f64).powi(2) < 4.0 * p.h * p.alpha() * 1.0);
        let sol = solve_visco(&obj, &p, &[1.0], None, 2.0).unwrap();
        // oscillatory transient: the solution crosses zero
        let mut crossed = false;
        let mut prev = sol.sample(0.0)[0];
        for k in 1..=400 {
            let x = sol.sample(2.0 * k as f64 / 400.0)[0];
            if x * prev < 0.0 {
                crossed = true;
            }
            prev = x;
        }
        assert!(crossed);
    }

    #[test]
    fn visco_zero_gradient_closed_form() {
        // grad == 0: u(t) = u0 + (h alpha/(1-lambda)) (1 - e^{-(1-lambda) t/(h alpha)}) v0
        let obj = crate::objective::ObjectiveSpec::zero(1);
        let p = MomentumParams::new(0.5, 0.0, 0.1).unwrap();
        let v0 = [2.0];
        let sol = solve_visco(&obj, &p, &[1.0], Some(&v0), 1.0).unwrap();
        let ha = p.h * p.alpha();
        for k in 0..=20 {
            let t = k as f64 / 20.0;
            let expect = 1.0 + ha / 0.5 * (1.0 - (-0.5 * t / ha).exp()) * 2.0;
            assert!((sol.sample(t)[0] - expect).abs() < 1e-11, "t={t}");
        }
    }

    #[test]
    fn visco_integrated_matches_closed_on_quadratic() {
        // force the integrated path through a composite with a tiny trig part? No:
        // compare closed quadratic against a hand-integrated run of the same ODE.
        let obj = make_quadratic(5.0, 2).unwrap();
        let p = MomentumParams::hb(0.8, 2f64.powi(-5)).unwrap();
        let u0 = [1.0, 1.0];
        let closed = solve_visco(&obj, &p, &u0, None, 1.0).unwrap();
        let d = obj.dim();
        let ha = p.h * p.alpha();
        let v0 = beta_init(&obj, p.lambda, p.a, &u0);
        let rhs = move |y: &[f64]| -> Vec<f64> {
            let (u, w) = y.split_at(d);
            let g = obj.grad(u);
            let mut out = Vec::with_capacity(2 * d);
            out.extend_from_slice(w);
            out.extend(g.iter().zip(w).map(|(gi, wi)| (-gi - (1.0 - p.lambda) * wi) / ha));
            out
        };
        let y0: Vec<f64> = u0.iter().chain(&v0).cloned().collect();
        let (dense, _) = integrate_verified(&rhs, &y0, 1.0, 2048, 1e-11);
        let mut sup: f64 = 0.0;
        for k in 0..=200 {
            let t = k as f64 / 200.0;
            let y = dense.sample(t);
            sup = sup.max(dist(&closed.sample(t), &y[..2]));
        }
        assert!(sup < 1e-8, "sup {sup}");
    }

    #[test]
    fn visco_energy_decay_on_quadratic() {
        let obj = make_quadratic(20.0, 2).unwrap();
        let p = MomentumParams::hb(0.9, 2f64.powi(-4)).unwrap();
        let sol = solve_visco(&obj, &p, &[1.0, 1.0], None, 3.0).unwrap();
        let ha = p.h * p.alpha();
        let mut prev = f64::INFINITY;
        for k in 0..=600 {
            let t = 3.0 * k as f64 / 600.0;
            let u = sol.sample(t);
            let w = sol.sample_deriv(t);
            let e = 0.5 * ha * norm(&w).powi(2) + obj.phi(&u);
            assert!(e <= prev + 1e-9, "t={t}: {e} > {prev}");
            prev = e;
        }
    }

    #[test]
    fn visco_transient_second_derivative_scales_inversely_with_h() {
        // u''(0) from the equation itself; its magnitude grows like 1/h while
        // u''(t*) for fixed t* > 0 stays bounded.
        let obj = make_quadratic(1.0, 1).unwrap();
        let lambda = 0.8;
        let mut logs = Vec::new();
        let mut at_half = Vec::new();
        for k in 4..=8 {
            let h = 2f64.powi(-k);
            let p = MomentumParams::hb(lambda, h).unwrap();
            let sol = solve_visco(&obj, &p, &[1.0], None, 1.0).unwrap();
            let ha = h * p.alpha();
            let acc = |t: f64| {
                let u = sol.sample(t);
                let w = sol.sample_deriv(t);
                ((-obj.grad(&u)[0] - (1.0 - lambda) * w[0]) / ha).abs()
            };
            logs.push((h.log2(), acc(0.0).log2()));
            at_half.push(acc(0.5));
        }
        // slope of log2 |u''(0)| vs log2 h should be near -1
        let n = logs.len() as f64;
        let (sx, sy): (f64, f64) = logs.iter().fold((0.0, 0.0), |(a, b), (x, y)| (a + x, b + y));
        let (sxx, sxy): (f64, f64) = logs
            .iter()
            .fold((0.0, 0.0), |(a, b), (x, y)| (a + x * x, b + x * y));
        let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
        assert!((slope + 1.0).abs() < 0.2, "slope {slope}");
        // bounded after the transient, uniformly in h: no growth as h halves,
        // and the smallest-h value sits at the slow-mode level
        // (lb q)^2 e^{-lb q t*} = 25 e^{-2.5} ~ 2.05
        let m = at_half.iter().cloned().fold(f64::MIN, f64::max);
        assert!(m < 10.0, "post-transient accel {m}");
        assert!(*at_half.last().unwrap() < 3.0);
        assert!(at_half.last().unwrap() < at_half.first().unwrap());
    }

    #[test]
    fn visco_hypothesis_warning_set_and_cleared() {
        let obj = make_quadratic(20.0, 2).unwrap();
        let big = MomentumParams::hb(0.9, 2f64.powi(-4)).unwrap();
        let sol = solve_visco(&obj, &big, &[1.0, 1.0], None, 0.5).unwrap();
        assert!(sol.hypothesis_warning.is_some());
        let small = MomentumParams::hb(0.9, 1e-5).unwrap();
        let sol2 = solve_visco(&obj, &small, &[1.0, 1.0], None, 0.5).unwrap();
        assert!(sol2.hypothesis_warning.is_none());
    }

    #[test]
    fn c_coefficient_values() {
        // lambda = 0.9: lb = 10, HB: 10*(10 - 0.5) = 95, NAG: 10*(10 - 0.9 - 0.5) = 86
        assert!((c_coefficient(0.9, 0.0) - 95.0).abs() < 1e-12);
        assert!((c_coefficient(0.9, 0.9) - 86.0).abs() < 1e-12);
        // vanishes at a = lambda_bar - 1/2
        let lb = 2.0;
        assert!(c_coefficient(0.5, lb - 0.5).abs() < 1e-14);
    }

    #[test]
    fn modified_flow_h_zero_is_rgf() {
        let obj = make_trigonometric(2, &[1.0, 2.0]).unwrap();
        let u0 = [1.0, -0.5];
        let a = solve_modified_flow(&obj, 0.5, 0.0, 0.0, &u0, 1.0).unwrap();
        let b = solve_rgf(&obj, 0.5, &u0, 1.0).unwrap();
        for k in 0..=20 {
            let t = k as f64 / 20.0;
            assert!(dist(&a.sample(t), &b.sample(t)) < 1e-9);
        }
    }

    #[test]
    fn modified_flow_decay_exponent_on_scalar_quadratic() {
        // effective rate lb q (1 + h c q) with c = c_coefficient
        let obj = make_quadratic(1.0, 1).unwrap();
        let (lambda, a, h) = (0.9, 0.0, 0.01);
        let c = c_coefficient(lambda, a);
        let rate = 10.0 * (1.0 + h * c);
        let sol = solve_modified_flow(&obj, lambda, a, h, &[1.0], 0.2).unwrap();
        for k in 1..=10 {
            let t = 0.2 * k as f64 / 10.0;
            let expect = (-rate * t).exp();
            assert!((sol.sample(t)[0] - expect).abs() < 1e-8, "t={t}");
        }
    }

    #[test]
    fn modified_flow_equilibria_are_critical_points() {
        let obj = make_trigonometric(1, &[1.0]).unwrap();
        let sol = solve_modified_flow(&obj, 0.5, 0.5, 0.05, &[0.0], 1.0).unwrap();
        for k in 0..=10 {
            assert!(sol.sample(k as f64 / 10.0)[0].abs() < 1e-12);
        }
    }

    #[test]
    fn wilson_ode_zero_gradient_and_critical_damping() {
        let obj = crate::objective::ObjectiveSpec::zero(1);
        let (mu, v0) = (1.0, 2.0);
        let sol = solve_wilson_ode(&obj, mu, &[1.0], &[v0], 2.0).unwrap();
        for k in 0..=20 {
            let t = 2.0 * k as f64 / 20.0;
            let expect = 1.0 + v0 / (2.0 * mu.sqrt()) * (1.0 - (-2.0 * mu.sqrt() * t).exp());
            assert!((sol.sample(t)[0] - expect).abs() < 1e-9, "t={t}");
        }
        // q = 1, mu = 1: double root -1, critically damped: u = (1 + t) e^{-t} from u0=1, v0=0
        let objq = make_quadratic(1.0, 1).unwrap();
        let sol = solve_wilson_ode(&objq, 1.0, &[1.0], &[0.0], 3.0).unwrap();
        for k in 0..=30 {
            let t = 3.0 * k as f64 / 30.0;
            let expect = (1.0 + t) * (-t).exp();
            assert!((sol.sample(t)[0] - expect).abs() < 1e-9, "t={t}");
        }
        // equilibrium start stays put
        let solq = solve_wilson_ode(&objq, 1.0, &[0.0], &[0.0], 1.0).unwrap();
        assert_eq!(solq.sample(0.7), vec![0.0]);
        assert!(solve_wilson_ode(&objq, 0.0, &[1.0], &[0.0], 1.0).is_err());
    }

    #[test]
    fn residual_orders_on_manufactured_exponential() {
        let traj = ExpTrajectory { coeffs: vec![1.0], rates: vec![-1.0] };
        let lambda = 0.5;
        for (p, expect) in [(1usize, 2.0), (2, 3.0), (3, 4.0)] {
            let hs: Vec<f64> = (3..=8).map(|k| 2f64.powi(-k)).collect();
            let rs: Vec<f64> = hs
                .iter()
                .map(|&h| norm(&modified_operator_residual(lambda, p, h, &traj, 1.0).unwrap()))
                .collect();
            let slope = fit_slope(&hs, &rs);
            assert!((slope - expect).abs() < 0.15, "p={p}: slope {slope}");
        }
        assert!(modified_operator_residual(0.5, 4, 0.1, &traj, 1.0).is_err());
        assert!(modified_operator_residual(0.5, 0, 0.1, &traj, 1.0).is_err());
    }

    #[test]
    fn residual_exactly_zero_on_linear_trajectory() {
        let traj = PolyTrajectory { coeffs: vec![vec![0.0, 1.0]] };
        let r = modified_operator_residual(0.5, 1, 0.25, &traj, 1.0).unwrap();
        assert_eq!(r[0], 0.0);
    }

    fn fit_slope(hs: &[f64], es: &[f64]) -> f64 {
        let pts: Vec<(f64, f64)> = hs.iter().zip(es).map(|(h, e)| (h.log2(), e.log2())).collect();
        let n = pts.len() as f64;
        let (sx, sy): (f64, f64) = pts.iter().fold((0.0, 0.0), |(a, b), (x, y)| (a + x, b + y));
        let (sxx, sxy): (f64, f64) =
            pts.iter().fold((0.0, 0.0), |(a, b), (x, y)| (a + x * x, b + x * y));
        (n * sxy - sx * sy) / (n * sxx - sx * sx)
    }
}
