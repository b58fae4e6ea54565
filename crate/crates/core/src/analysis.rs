//! Sup-norm errors against reference solutions and convergence-order
//! estimation over dyadic step refinements.

use crate::error::{Error, Result};
use crate::flows::ContinuousSolution;
use crate::linalg::dist;
use crate::schemes::DiscreteTrajectory;

/// Errors smaller than this are treated as round-off and excluded from fits.
pub const NOISE_FLOOR: f64 = 1e-12;

/// Per-step errors over a dyadic h sweep with pairwise rates and a fitted
/// log-log slope.
#[derive(Debug, Clone)]
pub struct RateReport {
    pub h_list: Vec<f64>,
    /// Sup-norm error per h; `None` marks a diverged (excluded) run.
    pub errors: Vec<Option<f64>>,
    /// log2(err_h / err_{h/2}) between consecutive entries.
    pub deltas: Vec<Option<f64>>,
    /// Least-squares slope of log2(error) against log2(h).
    pub fitted_order: Option<f64>,
    /// True when every usable error sat below the noise floor.
    pub below_noise_floor: bool,
    /// Comparison horizon, recorded for output metadata.
    pub t_horizon: f64,
}

/// max over {n : 0 <= n h <= T} of |u_n - ref(n h)|.
pub fn sup_error(traj: &DiscreteTrajectory, reference: &ContinuousSolution, t_horizon: f64) -> Result<f64> {
    if !(t_horizon >= 0.0) {
        return Err(Error::InvalidArgument("horizon must be >= 0".into()));
    }
    if traj.horizon() < t_horizon - 1e-12 {
        return Err(Error::InvalidArgument(format!(
            "trajectory horizon {} is shorter than requested T = {}",
            traj.horizon(),
            t_horizon
        )));
    }
    let mut sup = 0.0f64;
    for (n, u) in traj.points.iter().enumerate() {
        let t = n as f64 * traj.h;
        if t > t_horizon + 1e-12 {
            break;
        }
        sup = sup.max(dist(u, &reference.sample(t)));
    }
    Ok(sup)
}

/// The dyadic rate log2(err_h / err_{h/2}).
pub fn rate_delta(err_h: f64, err_h2: f64) -> Result<f64> {
    if !(err_h > 0.0) || !(err_h2 > 0.0) {
        return Err(Error::UndefinedRate(format!(
            "rates need strictly positive errors, got ({err_h}, {err_h2})"
        )));
    }
    Ok((err_h / err_h2).log2())
}

/// Ordinary least-squares slope of log2(err) against log2(h), skipping
/// entries at or below the noise floor. Needs two usable points.
pub fn fit_order(hs: &[f64], errs: &[f64]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = hs
        .iter()
        .zip(errs)
        .filter(|(_, e)| **e > NOISE_FLOOR)
        .map(|(h, e)| (h.log2(), e.log2()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let (sx, sy) = pts.iter().fold((0.0, 0.0), |(a, b), (x, y)| (a + x, b + y));
    let (sxx, sxy) = pts
        .iter()
        .fold((0.0, 0.0), |(a, b), (x, y)| (a + x * x, b + x * y));
    let denom = n * sxx - sx * sx;
    (denom != 0.0).then(|| (n * sxy - sx * sy) / denom)
}

fn validate_dyadic(h_list: &[f64]) -> Result<()> {
    if h_list.len() < 3 {
        return Err(Error::InvalidArgument("h list must have at least 3 entries".into()));
    }
    for w in h_list.windows(2) {
        if (w[1] - w[0] / 2.0).abs() > 1e-12 * w[0] {
            return Err(Error::InvalidArgument(format!(
                "h list must be dyadic decreasing; {} does not halve {}",
                w[1], w[0]
            )));
        }
    }
    Ok(())
}

/// Run `runner` at every h, compare against `ref_factory(h)` on [0, T], and
/// assemble the rate report. Diverged runs are excluded and left as `None`.
/// The reference may depend on h (the modified and damped equations do).
pub fn rate_sweep<R, F>(
    mut runner: R,
    mut ref_factory: F,
    h_list: &[f64],
    t_horizon: f64,
) -> Result<RateReport>
where
    R: FnMut(f64) -> Result<DiscreteTrajectory>,
    F: FnMut(f64) -> Result<ContinuousSolution>,
{
    validate_dyadic(h_list)?;
    let mut errors: Vec<Option<f64>> = Vec::with_capacity(h_list.len());
    for &h in h_list {
        match runner(h) {
            Ok(traj) => {
                let reference = ref_factory(h)?;
                errors.push(Some(sup_error(&traj, &reference, t_horizon)?));
            }
            Err(Error::Divergence { .. }) => errors.push(None),
            Err(e) => return Err(e),
        }
    }
    let deltas: Vec<Option<f64>> = errors
        .windows(2)
        .map(|w| match (w[0], w[1]) {
            (Some(a), Some(b)) if a > NOISE_FLOOR && b > NOISE_FLOOR => rate_delta(a, b).ok(),
            _ => None,
        })
        .collect();
    let usable: Vec<(f64, f64)> = h_list
        .iter()
        .zip(&errors)
        .filter_map(|(h, e)| e.map(|e| (*h, e)))
        .collect();
    let below = !usable.is_empty() && usable.iter().all(|(_, e)| *e <= NOISE_FLOOR);
    let fitted = fit_order(
        &usable.iter().map(|(h, _)| *h).collect::<Vec<_>>(),
        &usable.iter().map(|(_, e)| *e).collect::<Vec<_>>(),
    );
    Ok(RateReport {
        h_list: h_list.to_vec(),
        errors,
        deltas,
        fitted_order: fitted,
        below_noise_floor: below,
        t_horizon,
    })
}
