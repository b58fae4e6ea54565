//! The experiment subcommands: each one runs its module pipeline, writes CSV
//! artifacts plus a `summary.txt` gate report into the output directory, and
//! reports whether every gate passed.

use crate::config::{Config, ConfigError};
use momlab_core::*;
use std::fs;
use std::path::{Path, PathBuf};

pub struct Outcome {
    pub gates_passed: bool,
    pub summary: String,
}

type AnyError = Box<dyn std::error::Error>;
type CmdResult = std::result::Result<Outcome, AnyError>;

fn objective_from(cfg: &Config) -> std::result::Result<(ObjectiveSpec, String), AnyError> {
    let kind = cfg.str_or("objective", "kind", "quadratic");
    let d = cfg.usize_or("objective", "d", 2)?;
    let obj = match kind.as_str() {
        "quadratic" => {
            let kappa = cfg.f64_or("objective", "kappa", 1.0)?;
            make_quadratic(kappa, d)?
        }
        "trigonometric" => {
            let amps = cfg.f64_list_or("objective", "amplitudes", &vec![1.0; d])?;
            make_trigonometric(d, &amps)?
        }
        "composite" => {
            let kappa = cfg.f64_or("objective", "kappa", 1.0)?;
            let amps = cfg.f64_list_or("objective", "amplitudes", &vec![1.0; d])?;
            make_composite(kappa, d, &amps)?
        }
        other => return Err(Box::new(ConfigError(format!("unknown objective kind '{other}'")))),
    };
    Ok((obj, kind))
}

struct SchemeCfg {
    method: String,
    lambda: f64,
    a: f64,
    mu: f64,
    u0: Vec<f64>,
    v0: Vec<f64>,
    t_end: f64,
    h_list: Vec<f64>,
}

fn scheme_from(cfg: &Config, d: usize) -> std::result::Result<SchemeCfg, AnyError> {
    let method = cfg.str_or("scheme", "method", "hb");
    let lambda = cfg.f64_or("scheme", "lambda", 0.9)?;
    let a = match method.as_str() {
        "hb" | "gf" | "wilson" => 0.0,
        "nag" => lambda,
        _ => cfg.f64_or("scheme", "a", 0.0)?,
    };
    Ok(SchemeCfg {
        method,
        lambda,
        a,
        mu: cfg.f64_or("scheme", "mu", 1.0)?,
        u0: cfg.f64_list_or("scheme", "u0", &vec![1.0; d])?,
        v0: cfg.f64_list_or("scheme", "v0", &vec![0.0; d])?,
        t_end: cfg.f64_or("scheme", "t_end", 5.0)?,
        h_list: cfg.f64_list_or("scheme", "h_list", &[0.0625, 0.03125, 0.015625])?,
    })
}

fn run_scheme(
    obj: &ObjectiveSpec,
    sc: &SchemeCfg,
    h: f64,
    n_steps: usize,
) -> momlab_core::Result<DiscreteTrajectory> {
    match sc.method.as_str() {
        "gf" => run_rescaled_euler(obj, sc.lambda, h, &sc.u0, n_steps),
        "wilson" => run_wilson(obj, sc.mu, h, &sc.u0, &sc.v0, n_steps),
        "hb" | "nag" | "general" => {
            let params = MomentumParams::new(sc.lambda, sc.a, h)?;
            run_two_form(obj, &params, &sc.u0, &sc.v0, n_steps)
        }
        other => Err(Error::InvalidArgument(format!("unknown scheme method '{other}'"))),
    }
}

fn reference_for(
    obj: &ObjectiveSpec,
    sc: &SchemeCfg,
    reference: &str,
    h: f64,
) -> momlab_core::Result<ContinuousSolution> {
    match reference {
        "rgf" => solve_rgf(obj, sc.lambda, &sc.u0, sc.t_end),
        "visco" => {
            let params = MomentumParams::new(sc.lambda, sc.a, h)?;
            solve_visco(obj, &params, &sc.u0, None, sc.t_end)
        }
        "modified" => solve_modified_flow(obj, sc.lambda, sc.a, h, &sc.u0, sc.t_end),
        "wilson" => solve_wilson_ode(obj, sc.mu, &sc.u0, &sc.v0, sc.t_end),
        other => Err(Error::InvalidArgument(format!("unknown reference '{other}'"))),
    }
}

struct Writer {
    out_dir: PathBuf,
}

impl Writer {
    fn new(out_dir: &Path) -> std::io::Result<Writer> {
        fs::create_dir_all(out_dir)?;
        Ok(Writer { out_dir: out_dir.to_path_buf() })
    }

    fn write(&self, name: &str, content: &str) -> std::io::Result<()> {
        fs::write(self.out_dir.join(name), content)
    }
}

fn finish(w: &Writer, mut summary: String, gates: &[(String, bool)]) -> CmdResult {
    let passed = gates.iter().all(|(_, ok)| *ok);
    summary.push('\n');
    for (name, ok) in gates {
        summary.push_str(&format!("gate {}: {}\n", name, if *ok { "PASS" } else { "FAIL" }));
    }
    summary.push_str(if passed { "ALL GATES PASS\n" } else { "GATE FAILURES PRESENT\n" });
    w.write("summary.txt", &summary)?;
    if !passed {
        w.write("FAILED", "one or more gates failed; see summary.txt\n")?;
    }
    Ok(Outcome { gates_passed: passed, summary })
}

/// Per-scheme trajectory CSVs plus the matched continuous reference sampled
/// at the same grid times, one pair per h.
pub fn cmd_trajectories(cfg: &Config, out_dir: &Path) -> CmdResult {
    let (obj, _) = objective_from(cfg)?;
    let sc = scheme_from(cfg, obj.dim())?;
    if sc.h_list.is_empty() {
        return Err(Box::new(ConfigError("scheme.h_list must be nonempty".into())));
    }
    let reference = cfg.str_or("rates", "reference", if sc.method == "wilson" { "wilson" } else { "rgf" });
    let w = Writer::new(out_dir)?;
    let mut summary = String::from("trajectories\n");
    let mut gates = Vec::new();
    for (i, &h) in sc.h_list.iter().enumerate() {
        let n_steps = (sc.t_end / h).round().max(1.0) as usize;
        summary.push_str(&format!("run {i}: h = {}\n", csvio::fmt_f64(h)));
        match run_scheme(&obj, &sc, h, n_steps) {
            Ok(traj) => {
                w.write(&format!("traj_{}_{i:02}.csv", sc.method), &csvio::trajectory_csv(&traj))?;
                let sol = reference_for(&obj, &sc, &reference, h)?;
                if let Some(warn) = &sol.hypothesis_warning {
                    summary.push_str(&format!("  warning: {warn}\n"));
                }
                w.write(
                    &format!("ref_{}_{i:02}.csv", reference),
                    &csvio::reference_csv(&sol, h, n_steps),
                )?;
                gates.push((format!("run-{i}-finite"), true));
            }
            Err(Error::Divergence { step }) => {
                summary.push_str(&format!("  diverged at step {step}; partial outputs skipped\n"));
                gates.push((format!("run-{i}-finite"), false));
            }
            Err(e) => return Err(Box::new(e)),
        }
    }
    finish(&w, summary, &gates)
}

/// Rate sweep of the scheme against a configured reference flow.
pub fn cmd_rates(cfg: &Config, out_dir: &Path) -> CmdResult {
    let (obj, _) = objective_from(cfg)?;
    let sc = scheme_from(cfg, obj.dim())?;
    let reference = cfg.str_or("rates", "reference", "rgf");
    let lo = cfg.f64_or("rates", "order_lo", 0.8)?;
    let hi = cfg.f64_or("rates", "order_hi", 1.2)?;
    let w = Writer::new(out_dir)?;
    let report = rate_sweep(
        |h| {
            let n = (sc.t_end / h).round() as usize;
            run_scheme(&obj, &sc, h, n)
        },
        |h| reference_for(&obj, &sc, &reference, h),
        &sc.h_list,
        sc.t_end,
    )?;
    w.write("rates.csv", &csvio::rate_csv(&report))?;
    let fitted = report.fitted_order;
    let summary = format!(
        "rates: {} vs {}\nfitted_order = {}\nwindow = [{lo}, {hi}]\n",
        sc.method,
        reference,
        fitted.map(|f| format!("{f:.4}")).unwrap_or_else(|| "n/a".into()),
    );
    let in_window = fitted.is_some_and(|f| (lo..=hi).contains(&f));
    finish(&w, summary, &[("fitted-order-in-window".into(), in_window)])
}

/// Trajectory pairs against the damped second-order reference plus the same
/// rate sweep; the transient-matching initial velocity is applied.
pub fn cmd_visco(cfg: &Config, out_dir: &Path) -> CmdResult {
    let mut cfg = cfg.clone();
    cfg.apply_override("rates.reference=visco")
        .map_err(Box::new)?;
    let (obj, _) = objective_from(&cfg)?;
    let sc = scheme_from(&cfg, obj.dim())?;
    let w = Writer::new(out_dir)?;
    // trajectory pairs
    let traj_out = cmd_trajectories(&cfg, out_dir)?;
    // rate gate
    let lo = cfg.f64_or("rates", "order_lo", 0.8)?;
    let hi = cfg.f64_or("rates", "order_hi", 1.2)?;
    let report = rate_sweep(
        |h| {
            let n = (sc.t_end / h).round() as usize;
            run_scheme(&obj, &sc, h, n)
        },
        |h| reference_for(&obj, &sc, "visco", h),
        &sc.h_list,
        sc.t_end,
    )?;
    w.write("rates.csv", &csvio::rate_csv(&report))?;
    let fitted = report.fitted_order;
    let summary = format!(
        "visco comparison for {}\n{}fitted_order = {} (window [{lo}, {hi}])\n",
        sc.method,
        traj_out.summary,
        fitted.map(|f| format!("{f:.4}")).unwrap_or_else(|| "n/a".into()),
    );
    let in_window = fitted.is_some_and(|f| (lo..=hi).contains(&f));
    finish(
        &w,
        summary,
        &[
            ("trajectories-finite".into(), traj_out.gates_passed),
            ("fitted-order-in-window".into(), in_window),
        ],
    )
}

/// Solve the invariant graph, write it with its metadata sidecar, and check
/// the distance series of an off-graph run against the geometric bound.
pub fn cmd_manifold(cfg: &Config, out_dir: &Path) -> CmdResult {
    let (obj, _) = objective_from(cfg)?;
    let d = obj.dim();
    let sc = scheme_from(cfg, d)?;
    let h = *sc.h_list.first().ok_or_else(|| ConfigError("scheme.h_list must be nonempty".into()))?;
    let params = MomentumParams::new(sc.lambda, sc.a, h)?;
    let radius = cfg.f64_or("manifold", "box", 1.5)?;
    let res = cfg.usize_or("manifold", "grid_res", 17)?;
    let tol_outer = cfg.f64_or("manifold", "tol_outer", 1e-11)?;
    let n_steps = cfg.usize_or("manifold", "steps", 400)?;
    let bound_steps = cfg.usize_or("manifold", "bound_steps", 200)?;
    let decay_floor = cfg.f64_or("manifold", "decay_floor", 1e-8)?;
    let decay_steps = cfg.usize_or("manifold", "decay_steps", 400)?;
    let w = Writer::new(out_dir)?;

    let sol = solve_manifold_g(&obj, &params, &BoxRegion::centered(radius, d), &vec![res; d], tol_outer)?;
    w.write("manifold.csv", &csvio::manifold_csv(&sol.graph))?;
    w.write("manifold_meta.json", &csvio::manifold_meta_json(&sol.graph, &sol.report))?;
    w.write("constants.csv", &csvio::constants_csv(&sol.report))?;

    let traj = run_two_form(&obj, &params, &sc.u0, &sc.v0, n_steps)?;
    let e = manifold_distance(&traj, &obj, &params, GMode::Solved(&sol.graph))?;

    // defect-aware slack, as in the acceptance suite
    let mut defect = 0.0f64;
    for u in traj.points.iter().take(bound_steps + 1) {
        let tg = apply_t_at(&sol.graph, &obj, &params, 5, 1e-13, sol.report.c_inner, u)?;
        defect = defect.max(linalg::dist(&tg, &sol.graph.interpolate(u)));
    }
    let slack = 10.0 * (tol_outer + h * defect);
    let mut csv = String::from("n,e,bound\n");
    for (n, en) in e.iter().enumerate() {
        let b = attraction_bound(e[0], sol.report.delta, sc.lambda, h, n);
        csv.push_str(&format!(
            "{n},{},{}\n",
            csvio::fmt_f64(*en),
            csvio::fmt_f64(b.value + slack)
        ));
    }
    w.write("distance.csv", &csv)?;

    let bound_ok = (0..=bound_steps.min(e.len() - 1)).all(|n| {
        e[n] <= attraction_bound(e[0], sol.report.delta, sc.lambda, h, n).value + slack
    });
    let first_below = e.iter().position(|x| *x < decay_floor);
    let decay_ok = first_below.is_some_and(|n| n <= decay_steps);
    let summary = format!(
        "manifold solve: residual {}, contraction factor {:.4}, attraction factor {:.4}\n\
         distance bound slack = {:.3e}; e_n first below {decay_floor:.1e} at n = {first_below:?}\n",
        csvio::fmt_f64(sol.graph.residual),
        sol.report.contraction_factor,
        sol.report.attraction_factor,
        slack,
    );
    finish(
        &w,
        summary,
        &[
            ("smallness-assumption".into(), sol.report.all_pass()),
            ("attraction-bound".into(), bound_ok),
            ("distance-decay".into(), decay_ok),
        ],
    )
}

/// Bisect the step-size threshold below which every smallness flag passes,
/// verify the boundary is monotone, and write reports on both sides.
pub fn cmd_constants(cfg: &Config, out_dir: &Path) -> CmdResult {
    let (obj, _) = objective_from(cfg)?;
    let sc = scheme_from(cfg, obj.dim())?;
    let region = match obj.kind() {
        ObjectiveKind::Trigonometric => Region::Global,
        _ => Region::Box(BoxRegion::centered(
            cfg.f64_or("manifold", "box", 1.5)?,
            obj.dim(),
        )),
    };
    let bounds = derivative_bounds(&obj, &region)?;
    let h_lo = cfg.f64_or("constants", "h_lo", 1e-4)?;
    let h_hi = cfg.f64_or("constants", "h_hi", 1.0)?;
    let w = Writer::new(out_dir)?;
    let pass_at = |h: f64| -> momlab_core::Result<bool> {
        Ok(constants_report(&bounds, sc.lambda, sc.a, h)?.all_pass())
    };
    if !pass_at(h_lo)? || pass_at(h_hi)? {
        let summary = format!(
            "constants: bracket [{h_lo}, {h_hi}] does not straddle the pass/fail boundary\n"
        );
        return finish(&w, summary, &[("bracket-straddles".into(), false)]);
    }
    let (mut lo, mut hi) = (h_lo, h_hi);
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if pass_at(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let h_star = 0.5 * (lo + hi);
    let mut monotone = pass_at(h_star / 2.0)? && !pass_at((2.0 * h_star).min(h_hi))?;
    for k in 0..16 {
        let below = h_star * 0.999 * (h_lo / (h_star * 0.999)).powf(k as f64 / 15.0);
        monotone &= pass_at(below)?;
        let above = (h_star * 1.001 * 4f64.powf(k as f64 / 15.0)).min(h_hi);
        monotone &= !pass_at(above)?;
    }
    let below = constants_report(&bounds, sc.lambda, sc.a, h_star / 2.0)?;
    let above = constants_report(&bounds, sc.lambda, sc.a, (2.0 * h_star).min(h_hi))?;
    w.write("constants_below.csv", &csvio::constants_csv(&below))?;
    w.write("constants_above.csv", &csvio::constants_csv(&above))?;
    let summary = format!(
        "constants threshold: every flag passes for h < h* and fails above\nh* = {}\n\
         first violated just above: {}\n",
        csvio::fmt_f64(h_star),
        above.first_violated().map(|f| f.name).unwrap_or("none"),
    );
    finish(&w, summary, &[("monotone-threshold".into(), monotone)])
}

/// Desk-scale autoencoder: final-loss table over methods x h, per-cell loss
/// histories, and parameter-space convergence rates against the limit methods.
pub fn cmd_toynet(cfg: &Config, out_dir: &Path) -> CmdResult {
    let seed = cfg.u64_or("experiment", "seed", 12345)?;
    let n = cfg.usize_or("toynet", "n", 512)?;
    let d = cfg.usize_or("toynet", "d", 8)?;
    let epochs = cfg.usize_or("toynet", "epochs", 30)?;
    let batch = cfg.usize_or("toynet", "batch_size", 20)?;
    let lambda = cfg.f64_or("toynet", "lambda", 0.9)?;
    let mu = cfg.f64_or("toynet", "mu", 1.0)?;
    let method_names = cfg.str_list_or(
        "toynet",
        "methods",
        &["gf", "hb", "nag", "wilson", "hb-mu", "nag-mu"],
    );
    let h_list = cfg.f64_list_or("toynet", "h_list", &[1.0, 0.5, 0.25, 0.125, 0.0625, 0.03125, 0.015625])?;
    let rate_hs = cfg.f64_list_or(
        "toynet",
        "rate_h_list",
        &[0.0625, 0.03125, 0.015625, 0.0078125, 0.00390625],
    )?;
    let rate_window = (
        cfg.f64_or("toynet", "rate_lo", 0.6)?,
        cfg.f64_or("toynet", "rate_hi", 1.4)?,
    );
    let mu_rate_window = (
        cfg.f64_or("toynet", "mu_rate_lo", 0.3)?,
        cfg.f64_or("toynet", "mu_rate_hi", 0.7)?,
    );
    let w = Writer::new(out_dir)?;

    let data = make_synthetic_dataset(seed, n, d)?;
    let sizes: Vec<usize> = vec![d, 4, 2, 4, d];
    let net = MlpAutoencoder::new(&sizes, seed ^ 0xfeed)?;
    let mut base = TrainConfig::new(Method::Gf, 0.1, epochs, seed);
    base.lambda = lambda;
    base.mu = mu;
    base.batch_size = batch;

    let methods: Vec<Method> = method_names
        .iter()
        .map(|s| Method::parse(s))
        .collect::<momlab_core::Result<_>>()?;

    // final-loss table with n/a for divergent or untrainable cells
    let mut table: Vec<Vec<Option<f64>>> = Vec::new();
    let mut summary = String::from("toynet final-loss table\n");
    for m in &methods {
        let mut row = Vec::new();
        for (j, &h) in h_list.iter().enumerate() {
            let mut c = base.clone();
            c.method = *m;
            c.h = h;
            let trainable =
                !(matches!(m, Method::HbMu | Method::NagMu) && c.mu * h >= 1.0);
            let cell = if trainable {
                let run = train(&net, &data, &c)?;
                if run.diverged.is_none() {
                    w.write(
                        &format!("loss_{}_{j:02}.csv", m.name()),
                        &csvio::loss_history_csv(&run.loss_history),
                    )?;
                    run.loss_history.last().copied()
                } else {
                    None
                }
            } else {
                None
            };
            row.push(cell);
        }
        table.push(row);
    }
    let names: Vec<&str> = methods.iter().map(|m| m.name()).collect();
    w.write("final_table.csv", &csvio::final_table_csv(&names, &h_list, &table))?;

    // parameter-space rates against each method's limit discretization
    let mut gates: Vec<(String, bool)> = Vec::new();
    for m in &methods {
        if matches!(m, Method::Gf | Method::Wilson) {
            continue;
        }
        let rep = param_rate(&net, &data, &base, *m, &rate_hs)?;
        w.write(&format!("param_rates_{}.csv", m.name()), &csvio::rate_csv(&rep))?;
        let window = if matches!(m, Method::Hb | Method::Nag) { rate_window } else { mu_rate_window };
        let ok = rep
            .fitted_order
            .is_some_and(|f| (window.0..=window.1).contains(&f));
        summary.push_str(&format!(
            "param rate {} vs {}: {} (window [{}, {}])\n",
            m.name(),
            m.rate_reference().name(),
            rep.fitted_order.map(|f| format!("{f:.3}")).unwrap_or_else(|| "n/a".into()),
            window.0,
            window.1
        ));
        gates.push((format!("rate-{}", m.name()), ok));
    }

    // gaps shrink toward the common limit as h decreases
    let finite_cols: Vec<usize> = (0..h_list.len())
        .filter(|j| table.iter().all(|row| row[*j].is_some()))
        .collect();
    if finite_cols.len() >= 2 {
        let gap = |j: usize| {
            let vals: Vec<f64> = table.iter().map(|row| row[j].unwrap()).collect();
            vals.iter().cloned().fold(f64::MIN, f64::max)
                - vals.iter().cloned().fold(f64::MAX, f64::min)
        };
        let (jb, js) = (finite_cols[0], *finite_cols.last().unwrap());
        summary.push_str(&format!(
            "max pairwise gap: {:.4} at largest stable h, {:.4} at smallest\n",
            gap(jb),
            gap(js)
        ));
        gates.push(("gap-shrinks".into(), gap(js) < gap(jb)));
    }
    // at least one untrainable/divergent cell is expected at the largest steps
    let any_na = table.iter().any(|row| row.iter().any(|c| c.is_none()));
    summary.push_str(&format!("divergent or untrainable cells present: {any_na}\n"));

    finish(&w, summary, &gates)
}
