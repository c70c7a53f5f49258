use std::process::Command;

use diffabs::dichotomy::{sweep, Probe, SweepOptions};
use diffabs::kernels::{AbsorptionKernel, Nonlinearity, OmegaSpec, ProblemSpec};
use diffabs::rdsolver::{heat_kernel, solve, GridParams, InitialData, RadialGrid, SolveOptions};

#[test]
fn spatial_refinement_order() {
    // wide domain so the Dirichlet cut is below the discretisation error
    let spec = ProblemSpec::new(1, Nonlinearity::Power { q: 2.0 }, AbsorptionKernel::constant(0.0), 0.1).with_radius(4.0);
    let init = InitialData::warm_start(1.0, 0.01);
    let mut opts = SolveOptions::default().with_snapshots(vec![0.1]);
    opts.rtol = 1e-8;
    let mut g = RadialGrid::graded(1, spec.radius, &GridParams::default()).unwrap();
    let mut errs = Vec::new();
    for _ in 0..3 {
        let res = solve(&spec, &init, &g, &opts).unwrap();
        let e = res
            .r
            .iter()
            .zip(res.final_field())
            .map(|(&r, u)| (u - heat_kernel(1, r, 0.1)).abs())
            .fold(0.0, f64::max);
        errs.push(e);
        g = g.refine();
    }
    let order = (errs[0] / errs[2]).log2() / 2.0;
    println!("errors {errs:?}, observed order {order:.2}");
    assert!(errs.windows(2).all(|w| w[1] < w[0]));
    assert!(order >= 1.0, "order {order}");
}

#[test]
fn warm_start_time_insensitive() {
    let spec = ProblemSpec::new(1, Nonlinearity::Power { q: 2.0 }, AbsorptionKernel::exp_omega(OmegaSpec::constant(1.0)), 0.05)
        .with_radius(3.0);
    let grid = RadialGrid::graded(1, 3.0, &GridParams::default()).unwrap();
    let probes = [Probe::new(0.0, 0.05), Probe::new(0.5, 0.05)];
    let ladder = [1e2, 1e3, 1e4];
    let values: Vec<Vec<f64>> = [1e-3, 5e-4, 2.5e-4]
        .iter()
        .map(|&t_warm| {
            let t = sweep(&spec, &probes, &ladder, &grid, &SweepOptions { t_warm, ..Default::default() }).unwrap();
            t.values.last().unwrap().clone()
        })
        .collect();
    println!("{values:?}");
    for v in &values[1..] {
        for (a, b) in v.iter().zip(&values[0]) {
            assert!((a - b).abs() <= 0.02 * b.abs(), "{a} vs {b}");
        }
    }
}

#[test]
fn binary_writes_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_diffabs"))
        .args(["--out", dir.path().to_str().unwrap(), "thresholds", "--omega", "power:a=1,alpha=0.5", "--exponent", "0.5"])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let manifest: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["status"], "ok");
    let bad = Command::new(env!("CARGO_BIN_EXE_diffabs")).args(["solve", "--N", "0"]).output().unwrap();
    assert_eq!(bad.status.code(), Some(2));
}
