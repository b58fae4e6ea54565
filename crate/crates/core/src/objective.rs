//! Test objectives with closed-form derivatives.
//!
//! Every objective carries an exact gradient and Hessian-vector product; no
//! automatic differentiation. The quadratic family has a pinned diagonal
//! normalization (largest entry = condition number, smallest = 1) and the
//! trigonometric family exists because it has finite global derivative
//! bounds, which a quadratic cannot provide.

use crate::error::{Error, Result};
use crate::linalg::norm;

/// Axis-aligned region over which derivative bounds are requested.
#[derive(Debug, Clone, PartialEq)]
pub enum Region {
    Global,
    Box(BoxRegion),
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoxRegion {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl BoxRegion {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.is_empty() || lo.len() != hi.len() {
            return Err(Error::InvalidArgument("box bounds must be nonempty and of equal length".into()));
        }
        if lo.iter().zip(&hi).any(|(a, b)| a > b) {
            return Err(Error::InvalidArgument("box has lo > hi on some axis".into()));
        }
        Ok(BoxRegion { lo, hi })
    }

    /// Symmetric box [-r, r]^d.
    pub fn centered(r: f64, d: usize) -> Self {
        BoxRegion { lo: vec![-r; d], hi: vec![r; d] }
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn contains(&self, p: &[f64]) -> bool {
        p.iter()
            .zip(self.lo.iter().zip(&self.hi))
            .all(|(x, (a, b))| *x >= *a && *x <= *b)
    }

    /// Box grown by `margin` on every side.
    pub fn expand(&self, margin: f64) -> Self {
        BoxRegion {
            lo: self.lo.iter().map(|a| a - margin).collect(),
            hi: self.hi.iter().map(|b| b + margin).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ObjectiveKind {
    Quadratic,
    Trigonometric,
    Composite,
}

#[derive(Debug, Clone)]
enum Form {
    /// phi(u) = 1/2 <u - c, Q (u - c)> with diagonal Q.
    Quadratic { diag: Vec<f64>, center: Vec<f64> },
    /// phi(u) = sum_i amps_i (1 - cos u_i).
    Trigonometric { amps: Vec<f64> },
    /// Quadratic plus trigonometric part; exercises the sampled-bounds path.
    Composite { diag: Vec<f64>, amps: Vec<f64> },
}

/// A differentiable objective with exact gradient and Hessian-vector product.
#[derive(Debug, Clone)]
pub struct ObjectiveSpec {
    form: Form,
    dim: usize,
}

impl ObjectiveSpec {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kind(&self) -> ObjectiveKind {
        match self.form {
            Form::Quadratic { .. } => ObjectiveKind::Quadratic,
            Form::Trigonometric { .. } => ObjectiveKind::Trigonometric,
            Form::Composite { .. } => ObjectiveKind::Composite,
        }
    }

    /// Diagonal of Q for quadratic objectives.
    pub fn quadratic_diag(&self) -> Option<&[f64]> {
        match &self.form {
            Form::Quadratic { diag, .. } => Some(diag),
            _ => None,
        }
    }

    pub fn phi(&self, u: &[f64]) -> f64 {
        assert_eq!(u.len(), self.dim);
        match &self.form {
            Form::Quadratic { diag, center } => 0.5
                * u.iter()
                    .zip(center)
                    .zip(diag)
                    .map(|((x, c), q)| q * (x - c) * (x - c))
                    .sum::<f64>(),
            Form::Trigonometric { amps } => u
                .iter()
                .zip(amps)
                .map(|(x, c)| c * (1.0 - x.cos()))
                .sum(),
            Form::Composite { diag, amps } => {
                0.5 * u.iter().zip(diag).map(|(x, q)| q * x * x).sum::<f64>()
                    + u.iter().zip(amps).map(|(x, c)| c * (1.0 - x.cos())).sum::<f64>()
            }
        }
    }

    pub fn grad(&self, u: &[f64]) -> Vec<f64> {
        assert_eq!(u.len(), self.dim);
        match &self.form {
            Form::Quadratic { diag, center } => u
                .iter()
                .zip(center)
                .zip(diag)
                .map(|((x, c), q)| q * (x - c))
                .collect(),
            Form::Trigonometric { amps } => {
                u.iter().zip(amps).map(|(x, c)| c * x.sin()).collect()
            }
            Form::Composite { diag, amps } => u
                .iter()
                .zip(diag.iter().zip(amps))
                .map(|(x, (q, c))| q * x + c * x.sin())
                .collect(),
        }
    }

    /// D^2 phi(u) . w
    pub fn hess_vec(&self, u: &[f64], w: &[f64]) -> Vec<f64> {
        assert_eq!(u.len(), self.dim);
        assert_eq!(w.len(), self.dim);
        match &self.form {
            Form::Quadratic { diag, .. } => diag.iter().zip(w).map(|(q, y)| q * y).collect(),
            Form::Trigonometric { amps } => u
                .iter()
                .zip(amps.iter().zip(w))
                .map(|(x, (c, y))| c * x.cos() * y)
                .collect(),
            Form::Composite { diag, amps } => u
                .iter()
                .zip(diag.iter().zip(amps.iter().zip(w)))
                .map(|(x, (q, (c, y)))| (q + c * x.cos()) * y)
                .collect(),
        }
    }

    /// f(u) = -grad phi(u), the descent field.
    pub fn f(&self, u: &[f64]) -> Vec<f64> {
        self.grad(u).into_iter().map(|g| -g).collect()
    }

    /// Zero objective, for tests of the f == 0 degenerate cases.
    #[cfg(test)]
    pub(crate) fn zero(d: usize) -> Self {
        ObjectiveSpec { form: Form::Quadratic { diag: vec![0.0; d], center: vec![0.0; d] }, dim: d }
    }
}

/// phi(u) = 1/2 <u, Qu> with Q diagonal, Q_11 = kappa, Q_dd = 1 and geometric
/// spacing in between; condition number exactly kappa. For d = 1 the single
/// entry is kappa itself.
pub fn make_quadratic(kappa: f64, d: usize) -> Result<ObjectiveSpec> {
    make_quadratic_centered(kappa, d, None)
}

/// Same as `make_quadratic` with the minimum moved to `center`.
pub fn make_quadratic_centered(kappa: f64, d: usize, center: Option<Vec<f64>>) -> Result<ObjectiveSpec> {
    if !(kappa >= 1.0) || !kappa.is_finite() {
        return Err(Error::InvalidArgument(format!("kappa must be >= 1, got {kappa}")));
    }
    if d < 1 {
        return Err(Error::InvalidArgument("dimension must be >= 1".into()));
    }
    let diag: Vec<f64> = if d == 1 {
        vec![kappa]
    } else {
        (0..d)
            .map(|i| kappa.powf((d - 1 - i) as f64 / (d - 1) as f64))
            .collect()
    };
    let center = match center {
        Some(c) => {
            if c.len() != d {
                return Err(Error::InvalidArgument("center dimension mismatch".into()));
            }
            c
        }
        None => vec![0.0; d],
    };
    Ok(ObjectiveSpec { form: Form::Quadratic { diag, center }, dim: d })
}

/// phi(u) = sum_i amps_i (1 - cos u_i): nonconvex, minimum 0 at u = 0 (mod 2 pi),
/// with finite global derivative bounds.
pub fn make_trigonometric(d: usize, amplitudes: &[f64]) -> Result<ObjectiveSpec> {
    if d < 1 {
        return Err(Error::InvalidArgument("dimension must be >= 1".into()));
    }
    if amplitudes.len() != d {
        return Err(Error::InvalidArgument("amplitudes length must equal dimension".into()));
    }
    if amplitudes.iter().any(|c| !(*c > 0.0) || !c.is_finite()) {
        return Err(Error::InvalidArgument("amplitudes must be positive".into()));
    }
    Ok(ObjectiveSpec { form: Form::Trigonometric { amps: amplitudes.to_vec() }, dim: d })
}

/// Quadratic-plus-trigonometric sum; bounds for this kind are sampled.
pub fn make_composite(kappa: f64, d: usize, amplitudes: &[f64]) -> Result<ObjectiveSpec> {
    let quad = make_quadratic(kappa, d)?;
    let Form::Quadratic { diag, .. } = quad.form else { unreachable!() };
    if amplitudes.len() != d || amplitudes.iter().any(|c| !(*c > 0.0)) {
        return Err(Error::InvalidArgument("amplitudes must be positive and of length d".into()));
    }
    Ok(ObjectiveSpec { form: Form::Composite { diag, amps: amplitudes.to_vec() }, dim: d })
}

/// Bounds B0 >= sup |grad phi|, B1 >= sup ||D^2 phi||, B2 >= sup ||D^3 phi||
/// over `region`.
#[derive(Debug, Clone)]
pub struct DerivativeBounds {
    pub b0: f64,
    pub b1: f64,
    pub b2: f64,
    pub region: Region,
    /// True when the bounds come from dense sampling rather than closed form.
    pub approximate: bool,
}

/// Derivative bounds for `obj` over `region`.
///
/// Quadratics are exact on a box and unsupported globally (their derivatives
/// are unbounded); trigonometric objectives return their exact global bounds
/// for any region; composite objectives are densely sampled and flagged.
pub fn derivative_bounds(obj: &ObjectiveSpec, region: &Region) -> Result<DerivativeBounds> {
    match (&obj.form, region) {
        (Form::Quadratic { .. }, Region::Global) => Err(Error::Unsupported(
            "a quadratic has unbounded derivatives globally; request bounds on a box".into(),
        )),
        (Form::Quadratic { diag, center }, Region::Box(b)) => {
            if b.dim() != obj.dim {
                return Err(Error::InvalidArgument("box dimension mismatch".into()));
            }
            // |Q(u - c)|^2 is separable, so the sup over the box is attained
            // at a corner, coordinate by coordinate.
            let b0 = norm(
                &diag
                    .iter()
                    .zip(center.iter().zip(b.lo.iter().zip(&b.hi)))
                    .map(|(q, (c, (lo, hi)))| q * (lo - c).abs().max((hi - c).abs()))
                    .collect::<Vec<_>>(),
            );
            let b1 = diag.iter().fold(0.0f64, |m, q| m.max(q.abs()));
            Ok(DerivativeBounds { b0, b1, b2: 0.0, region: region.clone(), approximate: false })
        }
        (Form::Trigonometric { amps }, _) => {
            // Components of grad are amps_i sin(u_i), independently extremal,
            // so sup |grad| = |amps|; D^2 and D^3 are diagonal with entries
            // bounded by max amps_i.
            let b0 = norm(amps);
            let b1 = amps.iter().fold(0.0f64, |m, c| m.max(*c));
            Ok(DerivativeBounds { b0, b1, b2: b1, region: region.clone(), approximate: false })
        }
        (Form::Composite { .. }, Region::Global) => Err(Error::Unsupported(
            "composite objectives have unbounded derivatives globally; request bounds on a box".into(),
        )),
        (Form::Composite { .. }, Region::Box(b)) => {
            if b.dim() != obj.dim {
                return Err(Error::InvalidArgument("box dimension mismatch".into()));
            }
            Ok(sampled_bounds(obj, b))
        }
    }
}

/// Dense-sampling estimate used for kinds without closed-form bounds.
fn sampled_bounds(obj: &ObjectiveSpec, b: &BoxRegion) -> DerivativeBounds {
    let mut rng = crate::rng::CounterRng::new(0x0b0d_5bad).split(17);
    let d = obj.dim();
    let mut b0 = 0.0f64;
    let mut b1 = 0.0f64;
    let mut b2 = 0.0f64;
    let eps = 1e-5;
    for _ in 0..512 {
        let u = rng.point_in_box(&b.lo, &b.hi);
        b0 = b0.max(norm(&obj.grad(&u)));
        // a few power-iteration sweeps estimate ||D^2 phi(u)||_2
        let mut w: Vec<f64> = (0..d).map(|_| rng.normal()).collect();
        for _ in 0..8 {
            let hw = obj.hess_vec(&u, &w);
            let n = norm(&hw);
            if n == 0.0 {
                break;
            }
            w = hw.iter().map(|x| x / n).collect();
        }
        b1 = b1.max(norm(&obj.hess_vec(&u, &w)));
        // directional difference quotient of the Hessian bounds ||D^3 phi||
        let mut v: Vec<f64> = (0..d).map(|_| rng.normal()).collect();
        let nv = norm(&v);
        v = v.iter().map(|x| x / nv).collect();
        let up: Vec<f64> = u.iter().zip(&v).map(|(x, e)| x + eps * e).collect();
        let um: Vec<f64> = u.iter().zip(&v).map(|(x, e)| x - eps * e).collect();
        let dh = crate::linalg::sub(&obj.hess_vec(&up, &w), &obj.hess_vec(&um, &w));
        b2 = b2.max(norm(&dh) / (2.0 * eps));
    }
    DerivativeBounds { b0, b1, b2, region: Region::Box(b.clone()), approximate: true }
}

/// grad of phi_h(u) = phi(u) + (hc/2) |grad phi(u)|^2, namely
/// grad phi(u) + h c D^2 phi(u) grad phi(u).
pub fn modified_grad(obj: &ObjectiveSpec, c: f64, h: f64, u: &[f64]) -> Vec<f64> {
    debug_assert!(h >= 0.0);
    let g = obj.grad(u);
    let hg = obj.hess_vec(u, &g);
    g.iter().zip(&hg).map(|(gi, hi)| gi + h * c * hi).collect()
}
