//! CSV and JSON writers with a pinned wire format: every float is printed
//! with 17 significant digits so files are byte-identical across reruns and
//! round-trip through parsing.

use crate::analysis::RateReport;
use crate::flows::ContinuousSolution;
use crate::manifold::{ConstantsReport, ManifoldGraph};
use crate::schemes::DiscreteTrajectory;

/// 17 significant digits, enough to round-trip any f64.
pub fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        "nan".to_string()
    } else {
        format!("{x:.16e}")
    }
}

/// Header `n,t,u_0..u_{d-1}[,v_0..v_{d-1}]`, t = n h.
pub fn trajectory_csv(traj: &DiscreteTrajectory) -> String {
    let d = traj.dim();
    let mut out = String::from("n,t");
    for i in 0..d {
        out.push_str(&format!(",u_{i}"));
    }
    if traj.velocities.is_some() {
        for i in 0..d {
            out.push_str(&format!(",v_{i}"));
        }
    }
    out.push('\n');
    for (n, u) in traj.points.iter().enumerate() {
        out.push_str(&n.to_string());
        out.push(',');
        out.push_str(&fmt_f64(n as f64 * traj.h));
        for x in u {
            out.push(',');
            out.push_str(&fmt_f64(*x));
        }
        if let Some(vs) = &traj.velocities {
            for x in &vs[n] {
                out.push(',');
                out.push_str(&fmt_f64(*x));
            }
        }
        out.push('\n');
    }
    out
}

/// Continuous reference sampled on the discrete grid times n h.
pub fn reference_csv(sol: &ContinuousSolution, h: f64, n_steps: usize) -> String {
    let mut out = String::from("n,t");
    let d = sol.sample(0.0).len();
    for i in 0..d {
        out.push_str(&format!(",u_{i}"));
    }
    out.push('\n');
    for n in 0..=n_steps {
        let t = n as f64 * h;
        out.push_str(&n.to_string());
        out.push(',');
        out.push_str(&fmt_f64(t));
        for x in sol.sample(t) {
            out.push(',');
            out.push_str(&fmt_f64(x));
        }
        out.push('\n');
    }
    out
}

/// `h,err,delta` rows with a fitted-order summary line; divergent entries
/// print as n/a.
pub fn rate_csv(report: &RateReport) -> String {
    let mut out = String::from("h,err,delta\n");
    for (i, h) in report.h_list.iter().enumerate() {
        out.push_str(&fmt_f64(*h));
        out.push(',');
        match report.errors[i] {
            Some(e) => out.push_str(&fmt_f64(e)),
            None => out.push_str("n/a"),
        }
        out.push(',');
        if i > 0 {
            match report.deltas[i - 1] {
                Some(d) => out.push_str(&fmt_f64(d)),
                None => out.push_str("n/a"),
            }
        }
        out.push('\n');
    }
    match report.fitted_order {
        Some(f) => out.push_str(&format!("# fitted_order = {}\n", fmt_f64(f))),
        None => out.push_str("# fitted_order = n/a\n"),
    }
    if report.below_noise_floor {
        out.push_str("# below noise floor\n");
    }
    if report.t_horizon.is_finite() {
        out.push_str(&format!("# T = {}\n", fmt_f64(report.t_horizon)));
    }
    out
}

/// `node,p_0..p_{d-1},g_0..g_{d-1}` over the grid.
pub fn manifold_csv(graph: &ManifoldGraph) -> String {
    let d = graph.dim();
    let mut out = String::from("node");
    for i in 0..d {
        out.push_str(&format!(",p_{i}"));
    }
    for i in 0..d {
        out.push_str(&format!(",g_{i}"));
    }
    out.push('\n');
    for flat in 0..graph.node_count() {
        out.push_str(&flat.to_string());
        for x in graph.node_point(flat) {
            out.push(',');
            out.push_str(&fmt_f64(x));
        }
        for x in &graph.values[flat] {
            out.push(',');
            out.push_str(&fmt_f64(*x));
        }
        out.push('\n');
    }
    out
}

fn json_array(xs: &[f64]) -> String {
    let inner: Vec<String> = xs.iter().map(|x| fmt_f64(*x)).collect();
    format!("[{}]", inner.join(","))
}

/// Metadata sidecar for a solved graph: box, resolution, residual, constants.
pub fn manifold_meta_json(graph: &ManifoldGraph, report: &ConstantsReport) -> String {
    let res: Vec<String> = graph.res.iter().map(|r| r.to_string()).collect();
    let flags: Vec<String> = report
        .flags
        .iter()
        .map(|f| format!("{{\"name\":\"{}\",\"pass\":{}}}", f.name, f.pass))
        .collect();
    format!(
        concat!(
            "{{\n",
            "  \"box_lo\": {},\n",
            "  \"box_hi\": {},\n",
            "  \"user_lo\": {},\n",
            "  \"user_hi\": {},\n",
            "  \"margin\": {},\n",
            "  \"resolution\": [{}],\n",
            "  \"residual\": {},\n",
            "  \"constants\": {{\n",
            "    \"B0\": {}, \"B1\": {}, \"B2\": {},\n",
            "    \"lambda\": {}, \"a\": {}, \"h\": {},\n",
            "    \"gamma\": {}, \"delta\": {},\n",
            "    \"K1\": {}, \"K2\": {}, \"K3\": {},\n",
            "    \"alpha2\": {}, \"alpha1\": {}, \"alpha0\": {},\n",
            "    \"c_inner\": {}, \"Q1\": {}, \"Q2\": {}, \"Q3\": {},\n",
            "    \"contraction_factor\": {}, \"attraction_factor\": {}\n",
            "  }},\n",
            "  \"flags\": [{}]\n",
            "}}\n"
        ),
        json_array(&graph.box_lo),
        json_array(&graph.box_hi),
        json_array(&graph.user_lo),
        json_array(&graph.user_hi),
        fmt_f64(graph.margin),
        res.join(","),
        fmt_f64(graph.residual),
        fmt_f64(report.b0),
        fmt_f64(report.b1),
        fmt_f64(report.b2),
        fmt_f64(report.lambda),
        fmt_f64(report.a),
        fmt_f64(report.h),
        fmt_f64(report.gamma),
        fmt_f64(report.delta),
        fmt_f64(report.k1),
        fmt_f64(report.k2),
        fmt_f64(report.k3),
        fmt_f64(report.alpha2),
        fmt_f64(report.alpha1),
        fmt_f64(report.alpha0),
        fmt_f64(report.c_inner),
        fmt_f64(report.q1),
        fmt_f64(report.q2),
        fmt_f64(report.q3),
        fmt_f64(report.contraction_factor),
        fmt_f64(report.attraction_factor),
        flags.join(",")
    )
}

/// Constants and flags as `name,value` plus `flag,<name>,<pass>` rows.
pub fn constants_csv(report: &ConstantsReport) -> String {
    let mut out = String::from("name,value\n");
    let rows: [(&str, f64); 20] = [
        ("B0", report.b0),
        ("B1", report.b1),
        ("B2", report.b2),
        ("lambda", report.lambda),
        ("a", report.a),
        ("h", report.h),
        ("gamma", report.gamma),
        ("delta", report.delta),
        ("K1", report.k1),
        ("K2", report.k2),
        ("K3", report.k3),
        ("alpha2", report.alpha2),
        ("alpha1", report.alpha1),
        ("alpha0", report.alpha0),
        ("c_inner", report.c_inner),
        ("Q1", report.q1),
        ("Q2", report.q2),
        ("Q3", report.q3),
        ("contraction_factor", report.contraction_factor),
        ("attraction_factor", report.attraction_factor),
    ];
    for (name, value) in rows {
        out.push_str(&format!("{name},{}\n", fmt_f64(value)));
    }
    for f in &report.flags {
        out.push_str(&format!("flag,{},{}\n", f.name, if f.pass { "pass" } else { "fail" }));
    }
    out
}

/// `epoch,loss` rows.
pub fn loss_history_csv(history: &[f64]) -> String {
    let mut out = String::from("epoch,loss\n");
    for (i, l) in history.iter().enumerate() {
        out.push_str(&format!("{i},{}\n", fmt_f64(*l)));
    }
    out
}

/// method x h grid of final losses with divergent cells marked n/a.
pub fn final_table_csv(methods: &[&str], h_list: &[f64], cells: &[Vec<Option<f64>>]) -> String {
    let mut out = String::from("method");
    for h in h_list {
        out.push_str(&format!(",h={}", fmt_f64(*h)));
    }
    out.push('\n');
    for (m, row) in methods.iter().zip(cells) {
        out.push_str(m);
        for cell in row {
            out.push(',');
            match cell {
                Some(v) => out.push_str(&fmt_f64(*v)),
                None => out.push_str("n/a"),
            }
        }
        out.push('\n');
    }
    out
}
