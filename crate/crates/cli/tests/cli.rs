//! End-to-end checks of the binary: exit codes, artifact layout, gate
//! reporting, and byte-identical reruns.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

fn momlab() -> Command {
    Command::new(env!("CARGO_BIN_EXE_momlab"))
}

fn tmp_dir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("momlab-cli-{tag}-{}", std::process::id()));
    let _ = fs::remove_dir_all(&dir);
    dir
}

fn read_dir_sorted(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut entries: Vec<(String, Vec<u8>)> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap())
        })
        .collect();
    entries.sort_by(|a, b| a.0.cmp(&b.0));
    entries
}

#[test]
fn trajectories_writes_pairs_and_reruns_identically() {
    let cfg = tmp_dir("traj-cfg");
    fs::create_dir_all(&cfg).unwrap();
    let cfg_path = cfg.join("exp.conf");
    fs::write(
        &cfg_path,
        "[objective]\nkind = quadratic\nkappa = 5\nd = 2\n\n\
         [scheme]\nmethod = hb\nlambda = 0.3\nh_list = 2^-4,2^-5\nt_end = 2\nu0 = 1,1\n",
    )
    .unwrap();
    let out_a = tmp_dir("traj-a");
    let out_b = tmp_dir("traj-b");
    for out in [&out_a, &out_b] {
        let status = momlab()
            .args(["trajectories", "--config"])
            .arg(&cfg_path)
            .arg("--out")
            .arg(out)
            .status()
            .unwrap();
        assert!(status.success(), "exit: {status:?}");
    }
    let a = read_dir_sorted(&out_a);
    let b = read_dir_sorted(&out_b);
    assert_eq!(a, b, "reruns must be byte-identical");
    let names: Vec<&str> = a.iter().map(|(n, _)| n.as_str()).collect();
    assert!(names.contains(&"traj_hb_00.csv"));
    assert!(names.contains(&"ref_rgf_00.csv"));
    assert!(names.contains(&"summary.txt"));
    assert!(names.contains(&"config_canonical.txt"));
    assert!(!names.contains(&"FAILED"));
}

#[test]
fn rates_gate_pass_and_fail_exit_codes() {
    let cfg = tmp_dir("rates-cfg");
    fs::create_dir_all(&cfg).unwrap();
    let cfg_path = cfg.join("exp.conf");
    fs::write(
        &cfg_path,
        "[objective]\nkind = quadratic\nkappa = 5\nd = 2\n\n\
         [scheme]\nmethod = hb\nlambda = 0.1\nh_list = 2^-4,2^-5,2^-6,2^-7\nt_end = 3\n\n\
         [rates]\nreference = rgf\n",
    )
    .unwrap();
    let out = tmp_dir("rates-ok");
    let status = momlab()
        .args(["rates", "--config"])
        .arg(&cfg_path)
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    let summary = fs::read_to_string(out.join("summary.txt")).unwrap();
    assert!(summary.contains("ALL GATES PASS"), "{summary}");
    assert!(out.join("rates.csv").exists());

    // an impossible window turns the same run into a gate failure (exit 1)
    let out2 = tmp_dir("rates-bad");
    let status = momlab()
        .args(["rates", "--config"])
        .arg(&cfg_path)
        .arg("--out")
        .arg(&out2)
        .args(["rates.order_lo=9", "rates.order_hi=10"])
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(1));
    assert!(out2.join("FAILED").exists());
}

#[test]
fn config_errors_exit_two() {
    let status = momlab().args(["rates", "bogus_section.key=1"]).status().unwrap();
    assert_eq!(status.code(), Some(2));
    let status = momlab().args(["frobnicate"]).status().unwrap();
    assert_eq!(status.code(), Some(2));
    let status = momlab().status().unwrap();
    assert_eq!(status.code(), Some(2));
}

#[test]
fn constants_finds_threshold_on_trig_objective() {
    let cfg = tmp_dir("const-cfg");
    fs::create_dir_all(&cfg).unwrap();
    let cfg_path = cfg.join("exp.conf");
    fs::write(
        &cfg_path,
        "[objective]\nkind = trigonometric\nd = 1\namplitudes = 1\n\n\
         [scheme]\nmethod = hb\nlambda = 0.5\n",
    )
    .unwrap();
    let out = tmp_dir("const-out");
    let status = momlab()
        .args(["constants", "--config"])
        .arg(&cfg_path)
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    let summary = fs::read_to_string(out.join("summary.txt")).unwrap();
    assert!(summary.contains("h* = 6.7"), "threshold near 0.067: {summary}");
    assert!(out.join("constants_below.csv").exists());
    assert!(out.join("constants_above.csv").exists());
}

#[test]
fn manifold_and_toynet_run_with_gates() {
    let cfg = tmp_dir("mani-cfg");
    fs::create_dir_all(&cfg).unwrap();
    let cfg_path = cfg.join("exp.conf");
    fs::write(
        &cfg_path,
        "[objective]\nkind = quadratic\nkappa = 4\nd = 2\n\n\
         [scheme]\nmethod = hb\nlambda = 0.3\nh_list = 2^-6\nu0 = 1,1\nv0 = 0,0\n\n\
         [manifold]\nbox = 2.0\ngrid_res = 33\ntol_outer = 1e-11\n",
    )
    .unwrap();
    let out = tmp_dir("mani-out");
    let status = momlab()
        .args(["manifold", "--config"])
        .arg(&cfg_path)
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success(), "manifold gates should pass");
    for f in ["manifold.csv", "manifold_meta.json", "constants.csv", "distance.csv"] {
        assert!(out.join(f).exists(), "{f} missing");
    }

    let toynet_args = [
        "toynet.epochs=6",
        "toynet.n=200",
        "toynet.h_list=2^-1,2^-2,2^-3",
        "toynet.rate_h_list=2^-5,2^-6,2^-7",
        "toynet.methods=gf,hb,nag",
        // the full-size windows are validated by the acceptance suite;
        // this reduced smoke run only checks the plumbing
        "toynet.rate_lo=0.3",
        "toynet.rate_hi=1.7",
    ];
    let out_t = tmp_dir("toynet-out");
    let out_t2 = tmp_dir("toynet-out2");
    for out in [&out_t, &out_t2] {
        let status = momlab()
            .args(["toynet", "--out"])
            .arg(out)
            .args(toynet_args)
            .status()
            .unwrap();
        assert!(status.success(), "toynet gates should pass");
    }
    assert!(out_t.join("final_table.csv").exists());
    assert!(out_t.join("param_rates_HB.csv").exists());
    let table = fs::read_to_string(out_t.join("final_table.csv")).unwrap();
    assert!(table.lines().count() >= 4);
    assert_eq!(
        read_dir_sorted(&out_t),
        read_dir_sorted(&out_t2),
        "toynet reruns must be byte-identical"
    );
}

#[test]
fn visco_command_pairs_and_rates() {
    let cfg = tmp_dir("visco-cfg");
    fs::create_dir_all(&cfg).unwrap();
    let cfg_path = cfg.join("exp.conf");
    fs::write(
        &cfg_path,
        "[objective]\nkind = quadratic\nkappa = 10\nd = 2\n\n\
         [scheme]\nmethod = hb\nlambda = 0.1\nh_list = 2^-4,2^-5,2^-6,2^-7\nt_end = 3\nu0 = 1,1\n",
    )
    .unwrap();
    let out = tmp_dir("visco-out");
    let status = momlab()
        .args(["visco", "--config"])
        .arg(&cfg_path)
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    assert!(out.join("rates.csv").exists());
    assert!(out.join("ref_visco_00.csv").exists());
    let summary = fs::read_to_string(out.join("summary.txt")).unwrap();
    assert!(summary.contains("ALL GATES PASS"), "{summary}");
}
