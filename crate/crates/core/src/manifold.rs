//! The attractive invariant graph v = lambda_bar f(u) + h g(u): the
//! step-size smallness constants and their feasibility flags, the inner
//! fixed point, the graph-update operator T on a tensor grid, the Picard
//! solve for g, distance-to-manifold series, and the geometric attraction
//! bound.

use crate::error::{Error, Result};
use crate::linalg::{dist, norm};
use crate::objective::{BoxRegion, DerivativeBounds, ObjectiveSpec};
use crate::schemes::{DiscreteTrajectory, MomentumParams};

/// One named inequality of the step-size smallness assumption.
#[derive(Debug, Clone)]
pub struct Flag {
    pub name: &'static str,
    pub pass: bool,
    pub detail: String,
}

/// All constants of the smallness assumption, every one recomputable from
/// the inputs, with per-condition pass/fail flags in the assumption's order.
#[derive(Debug, Clone)]
pub struct ConstantsReport {
    pub b0: f64,
    pub b1: f64,
    pub b2: f64,
    pub lambda: f64,
    pub a: f64,
    pub h: f64,
    /// Graph sup-norm bound (the extreme feasible value).
    pub gamma: f64,
    /// Graph Lipschitz bound (the upper root of the feasibility parabola).
    pub delta: f64,
    pub k1: f64,
    pub k2: f64,
    pub k3: f64,
    pub alpha2: f64,
    pub alpha1: f64,
    pub alpha0: f64,
    /// Contraction factor of the inner fixed-point iteration.
    pub c_inner: f64,
    pub q1: f64,
    pub q2: f64,
    pub q3: f64,
    /// Contraction factor of T on the graph set.
    pub contraction_factor: f64,
    /// lambda + h^2 lambda delta, the per-step attraction factor.
    pub attraction_factor: f64,
    pub flags: Vec<Flag>,
}

impl ConstantsReport {
    pub fn all_pass(&self) -> bool {
        self.flags.iter().all(|f| f.pass)
    }

    pub fn first_violated(&self) -> Option<&Flag> {
        self.flags.iter().find(|f| !f.pass)
    }
}

/// Compute every constant and flag from derivative bounds and (lambda, a, h).
/// Feasibility failures set flags rather than erroring; infeasible-dependent
/// quantities (delta and its descendants) become NaN.
pub fn constants_report(
    bounds: &DerivativeBounds,
    lambda: f64,
    a: f64,
    h: f64,
) -> Result<ConstantsReport> {
    if !(lambda > 0.0 && lambda < 1.0) || !(a >= 0.0) || !(h > 0.0) {
        return Err(Error::InvalidArgument(
            "need lambda in (0,1), a >= 0, h > 0 for the constants report".into(),
        ));
    }
    let (b0, b1, b2) = (bounds.b0, bounds.b1, bounds.b2);
    if !(b0.is_finite() && b1.is_finite() && b2.is_finite()) {
        return Err(Error::InvalidArgument("derivative bounds must be finite".into()));
    }
    let lb = 1.0 / (1.0 - lambda);
    let mut flags = Vec::new();

    // graph bound: (lambda + h B1 (a + lambda lb)) gamma + lb B0 B1 (a + lb) <= gamma
    let feas = lambda + h * b1 * (a + lambda * lb);
    flags.push(Flag {
        name: "gamma-feasibility",
        pass: feas < 1.0,
        detail: format!("lambda + h B1 (a + lambda lambda_bar) = {feas} < 1"),
    });
    let gamma = lb * b0 * b1 * (a + lb) / (1.0 - lambda - h * b1 * (a + lambda * lb));
    let k1 = lb * b0 + h * gamma;
    let k3 = b0 + lambda * k1;

    let alpha2 = h * h * (lambda + h * a * b1);
    let alpha1 = lambda - 1.0
        + h * (b1 * (lb + a * (1.0 + h * lb * b1))
            + lambda * lb * (b1 + h * b2 * k3)
            + h * a * (a * b2 * k1 + b1 * lb * (b1 + h * b2 * k3)));
    let alpha0 = a * b2 * k1 * (1.0 + h * a * lb * b1)
        + lb * (a * b1 * b1 + b2 * k3)
        + lb * lb * b1 * (1.0 + h * a * b1) * (b1 + h * b2 * k3);

    let disc = alpha1 * alpha1 - 4.0 * alpha2 * alpha0;
    flags.push(Flag {
        name: "delta-discriminant",
        pass: disc > 0.0,
        detail: format!("alpha1^2 - 4 alpha2 alpha0 = {disc} > 0"),
    });
    flags.push(Flag {
        name: "alpha1-negative",
        pass: alpha1 < 0.0,
        detail: format!("alpha1 = {alpha1} < 0"),
    });
    let delta = if disc > 0.0 { (-alpha1 + disc.sqrt()) / (2.0 * alpha2) } else { f64::NAN };

    let k2 = lb * b1 + h * delta;
    let c_inner = h * (lambda * k2 + b1 * (1.0 + h * a * k2));
    flags.push(Flag {
        name: "inner-contraction",
        pass: c_inner < 1.0,
        detail: format!("c = h (lambda K2 + B1 (1 + h a K2)) = {c_inner} < 1"),
    });

    let q1 = lambda * delta
        + a * (b1 * k2 + b2 * k1 * (1.0 + h * a * k2))
        + lb * ((b1 + h * b2 * k3) * (lambda * k2 + b1 * (1.0 + h * a * k2)) + b2 * k3);
    let q2 = h * (a * (b1 + h * a * b2 * k1) + lb * (lambda + h * a * b1) * (b1 + h * b2 * k3));
    let q3 = h * (lambda * k2 + b1 * (1.0 + h * a * k2));
    flags.push(Flag {
        name: "xi-contraction-Q3",
        pass: q3 < 1.0,
        detail: format!("Q3 = {q3} < 1"),
    });
    let contraction_factor = lambda + q2 + h * h * (lambda + h * a * b1) * q1 / (1.0 - q3);
    // a failed Q3 makes the mu formula meaningless, so its flag fails too
    flags.push(Flag {
        name: "graph-contraction-mu",
        pass: q3 < 1.0 && contraction_factor < 1.0,
        detail: format!("mu = {contraction_factor} < 1"),
    });
    let attraction_factor = lambda + h * h * lambda * delta;
    flags.push(Flag {
        name: "exponential-attraction",
        pass: attraction_factor < 1.0,
        detail: format!("lambda + h^2 lambda delta = {attraction_factor} < 1"),
    });

    Ok(ConstantsReport {
        b0,
        b1,
        b2,
        lambda,
        a,
        h,
        gamma,
        delta,
        k1,
        k2,
        k3,
        alpha2,
        alpha1,
        alpha0,
        c_inner,
        q1,
        q2,
        q3,
        contraction_factor,
        attraction_factor,
        flags,
    })
}

/// Pass iff every flag passes; the error carries the first violated
/// inequality in the assumption's listed order.
pub fn check_h_small(report: &ConstantsReport) -> std::result::Result<(), &Flag> {
    match report.first_violated() {
        None => Ok(()),
        Some(f) => Err(f),
    }
}

/// Leading-order graph: lambda_bar^2 (a - lambda_bar) Df(p) f(p), computed
/// through the Hessian-vector product (Df f = D^2 phi grad phi).
pub fn leading_order_g(obj: &ObjectiveSpec, lambda: f64, a: f64, p: &[f64]) -> Vec<f64> {
    let lb = 1.0 / (1.0 - lambda);
    let coeff = lb * lb * (a - lb);
    let hg = obj.hess_vec(p, &obj.grad(p));
    hg.into_iter().map(|x| coeff * x).collect()
}

fn w_g<G: Fn(&[f64]) -> Vec<f64>>(g: &G, obj: &ObjectiveSpec, params: &MomentumParams, xi: &[f64]) -> Vec<f64> {
    let lb = params.lambda_bar();
    let f = obj.f(xi);
    let gv = g(xi);
    f.iter().zip(&gv).map(|(fi, gi)| lb * fi + params.h * gi).collect()
}

fn z_g<G: Fn(&[f64]) -> Vec<f64>>(g: &G, obj: &ObjectiveSpec, params: &MomentumParams, xi: &[f64]) -> Vec<f64> {
    let w = w_g(g, obj, params, xi);
    let stage: Vec<f64> = xi.iter().zip(&w).map(|(x, wi)| x + params.h * params.a * wi).collect();
    let fs = obj.f(&stage);
    w.iter().zip(&fs).map(|(wi, fi)| params.lambda * wi + fi).collect()
}

/// Solve xi + h z_g(xi) = p by the Picard iteration xi <- p - h z_g(xi)
/// from xi = p; geometric with ratio at most `c_inner`.
pub fn solve_inner_xi<G: Fn(&[f64]) -> Vec<f64>>(
    g: &G,
    obj: &ObjectiveSpec,
    params: &MomentumParams,
    p: &[f64],
    tol: f64,
    c_inner: f64,
) -> Result<Vec<f64>> {
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument("tolerance must be positive".into()));
    }
    let budget = if c_inner > 0.0 && c_inner < 1.0 {
        let ratio = tol / norm(p).max(tol);
        (ratio.ln() / c_inner.ln()).ceil().max(0.0) as usize + 50
    } else {
        50
    };
    let mut xi = p.to_vec();
    for _ in 0..budget {
        let z = z_g(g, obj, params, &xi);
        let residual: f64 = xi
            .iter()
            .zip(z.iter().zip(p))
            .map(|(x, (zi, pi))| {
                let r = x + params.h * zi - pi;
                r * r
            })
            .sum::<f64>()
            .sqrt();
        if residual <= tol {
            return Ok(xi);
        }
        xi = p.iter().zip(&z).map(|(pi, zi)| pi - params.h * zi).collect();
    }
    Err(Error::ConvergenceFailure(format!(
        "inner fixed point did not reach tol {tol} within {budget} iterations \
         (contraction factor {c_inner}); the smallness assumption is violated in practice"
    )))
}

/// The graph function g sampled on a tensor grid over a margin-extended box,
/// evaluated in between by multilinear interpolation and outside by
/// nearest-node clamping.
#[derive(Debug, Clone)]
pub struct ManifoldGraph {
    /// Margin-extended box actually gridded.
    pub box_lo: Vec<f64>,
    pub box_hi: Vec<f64>,
    /// Requested box before the margin extension.
    pub user_lo: Vec<f64>,
    pub user_hi: Vec<f64>,
    pub margin: f64,
    /// Self-consistent allowance for inner points beyond the gridded box:
    /// the largest step h |z| the dynamics can take from the outermost nodes,
    /// with the field bounds evaluated where those points actually land.
    pub escape_margin: f64,
    /// Nodes per axis.
    pub res: Vec<usize>,
    /// Node values, row-major over the grid.
    pub values: Vec<Vec<f64>>,
    /// Final Picard sup-norm update.
    pub residual: f64,
    /// Sup-norm update of every sweep, in order.
    pub sweep_updates: Vec<f64>,
}

impl ManifoldGraph {
    pub fn dim(&self) -> usize {
        self.box_lo.len()
    }

    pub fn node_count(&self) -> usize {
        self.res.iter().product()
    }

    fn multi_index(&self, mut flat: usize) -> Vec<usize> {
        let d = self.dim();
        let mut idx = vec![0usize; d];
        for k in (0..d).rev() {
            idx[k] = flat % self.res[k];
            flat /= self.res[k];
        }
        idx
    }

    pub fn node_point(&self, flat: usize) -> Vec<f64> {
        let idx = self.multi_index(flat);
        idx.iter()
            .enumerate()
            .map(|(k, &i)| {
                let step = (self.box_hi[k] - self.box_lo[k]) / (self.res[k] - 1) as f64;
                self.box_lo[k] + i as f64 * step
            })
            .collect()
    }

    /// Multilinear interpolation; points outside the box are clamped to it
    /// (second return is true when clamping happened).
    pub fn interpolate_flagged(&self, p: &[f64]) -> (Vec<f64>, bool) {
        let d = self.dim();
        let mut clamped = false;
        let mut cell = vec![0usize; d];
        let mut theta = vec![0.0f64; d];
        for k in 0..d {
            let mut x = p[k];
            if x < self.box_lo[k] || x > self.box_hi[k] {
                clamped = true;
                x = x.clamp(self.box_lo[k], self.box_hi[k]);
            }
            let step = (self.box_hi[k] - self.box_lo[k]) / (self.res[k] - 1) as f64;
            let pos = if step > 0.0 { (x - self.box_lo[k]) / step } else { 0.0 };
            let i = (pos.floor() as usize).min(self.res[k] - 2);
            cell[k] = i;
            theta[k] = (pos - i as f64).clamp(0.0, 1.0);
        }
        let vd = self.values[0].len();
        let mut out = vec![0.0f64; vd];
        for corner in 0..(1usize << d) {
            let mut weight = 1.0;
            let mut flat = 0usize;
            for k in 0..d {
                let hi = (corner >> k) & 1 == 1;
                weight *= if hi { theta[k] } else { 1.0 - theta[k] };
                flat = flat * self.res[k] + cell[k] + usize::from(hi);
            }
            if weight == 0.0 {
                continue;
            }
            let v = &self.values[flat];
            for (o, vi) in out.iter_mut().zip(v) {
                *o += weight * vi;
            }
        }
        (out, clamped)
    }

    pub fn interpolate(&self, p: &[f64]) -> Vec<f64> {
        self.interpolate_flagged(p).0
    }

    /// Sup of |g| over the nodes.
    pub fn sup_value(&self) -> f64 {
        self.values.iter().map(|v| norm(v)).fold(0.0, f64::max)
    }

    /// Largest difference quotient between grid-adjacent nodes.
    pub fn max_lipschitz_quotient(&self) -> f64 {
        let d = self.dim();
        let mut worst = 0.0f64;
        for flat in 0..self.node_count() {
            let idx = self.multi_index(flat);
            let p = self.node_point(flat);
            for k in 0..d {
                if idx[k] + 1 < self.res[k] {
                    let mut jdx = idx.clone();
                    jdx[k] += 1;
                    let mut jflat = 0usize;
                    for m in 0..d {
                        jflat = jflat * self.res[m] + jdx[m];
                    }
                    let q = self.node_point(jflat);
                    let dq = dist(&self.values[flat], &self.values[jflat]) / dist(&p, &q);
                    worst = worst.max(dq);
                }
            }
        }
        worst
    }

    /// Sup of |g - other_g| over nodes lying inside the requested (inner) box.
    pub fn sup_gap_on_user_box<G: Fn(&[f64]) -> Vec<f64>>(&self, other: &G) -> f64 {
        let inner = BoxRegion { lo: self.user_lo.clone(), hi: self.user_hi.clone() };
        let mut sup = 0.0f64;
        for flat in 0..self.node_count() {
            let p = self.node_point(flat);
            if inner.contains(&p) {
                sup = sup.max(dist(&self.values[flat], &other(&p)));
            }
        }
        sup
    }
}

/// One application of the graph-update operator T: at every node p, solve
/// the inner fixed point, evaluate the two line integrals of Df (exactly
/// for quadratics, by Gauss-Legendre otherwise), and set
/// lambda g(xi) + a I1 - lambda_bar I2.
pub fn apply_t(
    g: &ManifoldGraph,
    obj: &ObjectiveSpec,
    params: &MomentumParams,
    quadrature_order: usize,
    inner_tol: f64,
    c_inner: f64,
) -> Result<ManifoldGraph> {
    let exact = obj.kind() == crate::objective::ObjectiveKind::Quadratic;
    apply_t_impl(g, obj, params, quadrature_order, inner_tol, c_inner, exact)
}

// Gauss-Legendre nodes/weights on [0, 1].
fn gauss_01(order: usize) -> Result<Vec<(f64, f64)>> {
    let raw: &[(f64, f64)] = match order {
        1 => &[(0.0, 2.0)],
        2 => &[(-0.5773502691896257, 1.0), (0.5773502691896257, 1.0)],
        3 => &[
            (-0.7745966692414834, 0.5555555555555556),
            (0.0, 0.8888888888888888),
            (0.7745966692414834, 0.5555555555555556),
        ],
        4 => &[
            (-0.8611363115940526, 0.3478548451374538),
            (-0.3399810435848563, 0.6521451548625461),
            (0.3399810435848563, 0.6521451548625461),
            (0.8611363115940526, 0.3478548451374538),
        ],
        5 => &[
            (-0.906179845938664, 0.2369268850561891),
            (-0.5384693101056831, 0.4786286704993665),
            (0.0, 0.5688888888888889),
            (0.5384693101056831, 0.4786286704993665),
            (0.906179845938664, 0.2369268850561891),
        ],
        _ => {
            return Err(Error::Unsupported(format!(
                "quadrature order {quadrature_order} not in 1..=5",
                quadrature_order = order
            )))
        }
    };
    Ok(raw.iter().map(|(x, w)| ((x + 1.0) / 2.0, w / 2.0)).collect())
}

/// Evaluate (Tg)(p) at one point: solve the inner fixed point, form the two
/// line integrals of Df, and combine.
pub fn apply_t_at(
    g: &ManifoldGraph,
    obj: &ObjectiveSpec,
    params: &MomentumParams,
    quadrature_order: usize,
    inner_tol: f64,
    c_inner: f64,
    p: &[f64],
) -> Result<Vec<f64>> {
    let exact = obj.kind() == crate::objective::ObjectiveKind::Quadratic;
    let nodes = gauss_01(quadrature_order)?;
    t_value_at(g, obj, params, &nodes, inner_tol, c_inner, exact, p)
}

#[allow(clippy::too_many_arguments)]
fn t_value_at(
    g: &ManifoldGraph,
    obj: &ObjectiveSpec,
    params: &MomentumParams,
    nodes: &[(f64, f64)],
    inner_tol: f64,
    c_inner: f64,
    exact_quadratic: bool,
    p: &[f64],
) -> Result<Vec<f64>> {
    let lb = params.lambda_bar();
    let (h, a, lambda) = (params.h, params.a, params.lambda);
    let escape_box = BoxRegion {
        lo: g.box_lo.iter().map(|x| x - g.escape_margin).collect(),
        hi: g.box_hi.iter().map(|x| x + g.escape_margin).collect(),
    };
    let g_fn = |x: &[f64]| g.interpolate(x);
    let xi = solve_inner_xi(&g_fn, obj, params, p, inner_tol, c_inner)?;
    if !escape_box.contains(&xi) {
        return Err(Error::DomainEscape(format!(
            "inner point left the margin-extended box at {p:?}; \
             enlarge the margin (currently {} with escape allowance {})",
            g.margin, g.escape_margin
        )));
    }
    let w = w_g(&g_fn, obj, params, &xi);
    let z = z_g(&g_fn, obj, params, &xi);
    let integral = |dir: &[f64], scale: f64| -> Vec<f64> {
        // int_0^1 Df(xi + s * scale * dir) dir ds, Df = -D^2 phi
        if exact_quadratic {
            obj.hess_vec(&xi, dir).into_iter().map(|x| -x).collect()
        } else {
            let mut acc = vec![0.0; dir.len()];
            for (s, wt) in nodes {
                let at: Vec<f64> = xi.iter().zip(dir).map(|(x, d)| x + s * scale * d).collect();
                let hv = obj.hess_vec(&at, dir);
                for (ai, hi) in acc.iter_mut().zip(&hv) {
                    *ai -= wt * hi;
                }
            }
            acc
        }
    };
    let i1 = integral(&w, h * a);
    let i2 = integral(&z, h);
    let g_xi = g.interpolate(&xi);
    Ok((0..p.len())
        .map(|k| lambda * g_xi[k] + a * i1[k] - lb * i2[k])
        .collect())
}

pub(crate) fn apply_t_impl(
    g: &ManifoldGraph,
    obj: &ObjectiveSpec,
    params: &MomentumParams,
    quadrature_order: usize,
    inner_tol: f64,
    c_inner: f64,
    exact_quadratic: bool,
) -> Result<ManifoldGraph> {
    let nodes = gauss_01(quadrature_order)?;
    let mut new_values = Vec::with_capacity(g.node_count());
    for flat in 0..g.node_count() {
        let p = g.node_point(flat);
        let value =
            t_value_at(g, obj, params, &nodes, inner_tol, c_inner, exact_quadratic, &p)?;
        new_values.push(value);
    }
    let mut out = g.clone();
    out.values = new_values;
    Ok(out)
}

/// Result of the Picard solve: the graph and the constants report whose
/// contraction factor governed it.
#[derive(Debug, Clone)]
pub struct ManifoldSolution {
    pub graph: ManifoldGraph,
    pub report: ConstantsReport,
}

/// Solve g = T g by Picard iteration from the leading-order graph, on
/// `user_box` extended by the margin h K3 (so the inner points stay
/// representable), until the sup-norm update drops below `tol_outer`.
pub fn solve_manifold_g(
    obj: &ObjectiveSpec,
    params: &MomentumParams,
    user_box: &BoxRegion,
    grid_res: &[usize],
    tol_outer: f64,
) -> Result<ManifoldSolution> {
    let d = obj.dim();
    if user_box.dim() != d || grid_res.len() != d {
        return Err(Error::InvalidArgument("box/grid dimension mismatch".into()));
    }
    if d > 3 {
        return Err(Error::InvalidArgument("grid representation supports d <= 3".into()));
    }
    if grid_res.iter().any(|r| *r < 2) {
        return Err(Error::InvalidArgument("need at least 2 nodes per axis".into()));
    }
    if !(tol_outer > 0.0) {
        return Err(Error::InvalidArgument("tol_outer must be positive".into()));
    }

    // Margin fixed point: the margin depends on K3, whose B0 grows with the
    // box. Quadratic growth in the box is linear, so this converges fast.
    let margin_for = |base: &BoxRegion, start: f64| -> Result<(f64, ConstantsReport)> {
        let mut m = start;
        let mut report = None;
        for _ in 0..50 {
            let bounds = crate::objective::derivative_bounds(
                obj,
                &crate::objective::Region::Box(base.expand(m)),
            )?;
            let rep = constants_report(&bounds, params.lambda, params.a, params.h)?;
            let new_m = params.h * rep.k3;
            let done = new_m <= m * (1.0 + 1e-12);
            report = Some(rep);
            if done {
                break;
            }
            m = new_m;
        }
        Ok((m, report.unwrap()))
    };
    let (margin, report) = margin_for(user_box, 0.0)?;
    if let Err(flag) = check_h_small(&report) {
        return Err(Error::InvalidArgument(format!(
            "step-size smallness assumption fails: {} ({})",
            flag.name, flag.detail
        )));
    }
    let extended = user_box.expand(margin);
    // the escape allowance must be self-consistent with the field bounds at
    // the points it admits, which lie beyond the gridded box
    let (escape_margin, _) = margin_for(&extended, margin)?;

    let mut graph = ManifoldGraph {
        box_lo: extended.lo,
        box_hi: extended.hi,
        user_lo: user_box.lo.clone(),
        user_hi: user_box.hi.clone(),
        margin,
        escape_margin: escape_margin * (1.0 + 1e-9),
        res: grid_res.to_vec(),
        values: Vec::new(),
        residual: f64::INFINITY,
        sweep_updates: Vec::new(),
    };
    graph.values = (0..graph.node_count())
        .map(|flat| leading_order_g(obj, params.lambda, params.a, &graph.node_point(flat)))
        .collect();

    let inner_tol = (tol_outer * 1e-2).max(1e-15);
    let mut sweep_updates = Vec::new();
    let mut budget = 200usize;
    let mut consecutive_expanding = 0usize;
    let mut sweep = 0usize;
    loop {
        let next = apply_t(&graph, obj, params, 5, inner_tol, report.c_inner)?;
        let update = graph
            .values
            .iter()
            .zip(&next.values)
            .map(|(old, new)| dist(old, new))
            .fold(0.0f64, f64::max);
        if let Some(prev) = sweep_updates.last() {
            if update > *prev {
                consecutive_expanding += 1;
                if consecutive_expanding >= 3 {
                    let cite = report
                        .first_violated()
                        .map(|f| f.name)
                        .unwrap_or("all flags passed, yet updates grew");
                    return Err(Error::ConvergenceFailure(format!(
                        "graph iteration is not contracting (3 growing sweeps); \
                         smallness flag: {cite}"
                    )));
                }
            } else {
                consecutive_expanding = 0;
            }
        }
        sweep_updates.push(update);
        graph = next;
        if sweep == 0 && update > 0.0 {
            let mu = report.contraction_factor;
            budget = ((tol_outer / update).ln() / mu.ln()).ceil().max(0.0) as usize + 10;
        }
        sweep += 1;
        if update < tol_outer {
            break;
        }
        if sweep >= budget {
            return Err(Error::ConvergenceFailure(format!(
                "graph iteration exceeded its budget of {budget} sweeps \
                 (last update {update}, tol {tol_outer})"
            )));
        }
    }
    graph.residual = *sweep_updates.last().unwrap();
    graph.sweep_updates = sweep_updates;
    Ok(ManifoldSolution { graph, report })
}

/// Which graph to measure distances against.
pub enum GMode<'a> {
    LeadingOrder,
    Solved(&'a ManifoldGraph),
}

/// e_n = |v_n - lambda_bar f(u_n) - h g(u_n)| along a velocity-bearing run.
pub fn manifold_distance(
    traj: &DiscreteTrajectory,
    obj: &ObjectiveSpec,
    params: &MomentumParams,
    g_mode: GMode<'_>,
) -> Result<Vec<f64>> {
    let Some(velocities) = &traj.velocities else {
        return Err(Error::InvalidArgument(
            "manifold distance needs a trajectory with velocities (two-step form)".into(),
        ));
    };
    let lb = params.lambda_bar();
    let h = params.h;
    Ok(traj
        .points
        .iter()
        .zip(velocities)
        .map(|(u, v)| {
            let f = obj.f(u);
            let g = match &g_mode {
                GMode::LeadingOrder => leading_order_g(obj, params.lambda, params.a, u),
                GMode::Solved(graph) => graph.interpolate(u),
            };
            v.iter()
                .zip(f.iter().zip(&g))
                .map(|(vi, (fi, gi))| {
                    let r = vi - lb * fi - h * gi;
                    r * r
                })
                .sum::<f64>()
                .sqrt()
        })
        .collect())
}

/// The geometric attraction bound (lambda + h^2 lambda delta)^n e0.
#[derive(Debug, Clone, Copy)]
pub struct AttractionBound {
    pub value: f64,
    pub factor: f64,
    /// Set when the factor is >= 1 and the bound says nothing.
    pub vacuous: bool,
}

pub fn attraction_bound(e0: f64, delta: f64, lambda: f64, h: f64, n: usize) -> AttractionBound {
    let factor = lambda + h * h * lambda * delta;
    AttractionBound { value: factor.powi(n as i32) * e0, factor, vacuous: !(factor < 1.0) }
}
