use super::*;
use crate::kernels::OmegaSpec;

fn heat_spec(dim: usize, horizon: f64) -> ProblemSpec {
    ProblemSpec::new(dim, Nonlinearity::Power { q: 2.0 }, AbsorptionKernel::constant(0.0), horizon)
}

fn rel_linf(result: &SolveResult, i: usize, exact: impl Fn(f64) -> f64) -> f64 {
    let peak = result.r.iter().map(|&r| exact(r)).fold(0.0f64, f64::max);
    result
        .r
        .iter()
        .zip(&result.fields[i])
        .map(|(&r, u)| (u - exact(r)).abs())
        .fold(0.0, f64::max)
        / peak
}

#[test]
fn heat_kernel_reproduced() {
    let spec = heat_spec(1, 0.1);
    let grid = RadialGrid::graded(1, spec.radius, &GridParams::default()).unwrap();
    let res = solve(&spec, &InitialData::warm_start(1.0, 0.01), &grid, &SolveOptions::default()).unwrap();
    let err = rel_linf(&res, 1, |r| heat_kernel(1, r, 0.1));
    assert!(err <= 1e-2, "relative L∞ error {err}");
    assert_eq!(res.diagnostics.clamp_events, 0);
    let p = probe(&res, 0.5, 0.1).unwrap();
    assert!((p - 0.477_486_411_533_556_6).abs() / 0.4775 < 1e-2, "{p}");
}

#[test]
fn flat_power_ode() {
    // the Dirichlet layer at R decays like erfc((R − r)/2): keep R − r ≥ 8
    let spec = ProblemSpec::new(1, Nonlinearity::Power { q: 2.0 }, AbsorptionKernel::constant(1.0), 1.0).with_radius(12.0);
    let grid = RadialGrid::graded(1, spec.radius, &GridParams::default()).unwrap();
    let res = solve(&spec, &InitialData::Flat { level: 1.0, t_start: 0.0 }, &grid, &SolveOptions::default()).unwrap();
    for (r, u) in res.r.iter().zip(res.final_field()) {
        if *r < spec.radius - 8.0 {
            assert!((u - 0.5).abs() < 1e-6, "r = {r}: {u}");
        }
    }
}

#[test]
fn flat_exponential_ode() {
    let spec = ProblemSpec::new(1, Nonlinearity::Exponential, AbsorptionKernel::constant(1.0), 0.5).with_radius(12.0);
    let grid = RadialGrid::graded(1, spec.radius, &GridParams::default()).unwrap();
    let res = solve(&spec, &InitialData::Flat { level: 1.0, t_start: 0.0 }, &grid, &SolveOptions::default()).unwrap();
    let exact = -((-1.0f64).exp() + 0.5).ln();
    assert!((exact - 0.141_702_466_627_894_2).abs() < 1e-15);
    assert!((res.final_field()[0] - exact).abs() < 1e-6, "{}", res.final_field()[0]);
}

#[test]
fn probe_flat_between_snapshots() {
    let spec = ProblemSpec::new(1, Nonlinearity::Power { q: 2.0 }, AbsorptionKernel::constant(0.0), 1.0);
    let grid = RadialGrid::graded(1, spec.radius, &GridParams::default()).unwrap();
    let opts = SolveOptions::default().with_snapshots(vec![0.1, 0.2]);
    let res = solve(&spec, &InitialData::Flat { level: 2.0, t_start: 0.0 }, &grid, &opts).unwrap();
    let v = probe(&res, 0.3, 0.15).unwrap();
    assert!((v - 2.0).abs() < 1e-9);
    assert_eq!(probe(&res, res.r[5], 0.2).unwrap(), res.fields[2][5]);
    assert!(matches!(probe(&res, 0.3, 1.5), Err(Error::Domain(_))));
    assert!(matches!(probe(&res, -1.0, 0.1), Err(Error::Domain(_))));
}

#[test]
fn mass_nonincreasing_and_bounded() {
    let kernel = AbsorptionKernel::exp_omega(OmegaSpec::constant(0.5));
    let spec = ProblemSpec::new(2, Nonlinearity::Power { q: 3.0 }, kernel, 0.5);
    let grid = RadialGrid::graded(2, spec.radius, &GridParams::default()).unwrap();
    let opts = SolveOptions::default().with_snapshots(vec![0.05, 0.1, 0.2, 0.5]);
    let res = solve(&spec, &InitialData::warm_start(50.0, 1e-3), &grid, &opts).unwrap();
    let m = &res.diagnostics.masses;
    assert!(m.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12)), "{m:?}");
    for (f, b) in res.fields.iter().zip(&res.barrier) {
        assert!(f.iter().all(|&x| x >= 0.0));
        if let Some(b) = b {
            assert!(f.iter().all(|&x| x <= b * (1.0 + 1e-6)));
        }
    }
}

#[test]
fn replay_reproduces_adaptive_run() {
    let spec = ProblemSpec::new(1, Nonlinearity::Power { q: 2.0 }, AbsorptionKernel::constant(1.0), 0.2);
    let grid = RadialGrid::graded(1, spec.radius, &GridParams::default()).unwrap();
    let init = InitialData::warm_start(10.0, 1e-3);
    let a = solve(&spec, &init, &grid, &SolveOptions::default()).unwrap();
    let opts = SolveOptions { replay: Some(a.step_times.clone()), ..SolveOptions::default() };
    let b = solve(&spec, &init, &grid, &opts).unwrap();
    assert_eq!(a.fields, b.fields);
}

#[test]
fn identical_pair_agrees() {
    let spec = heat_spec(1, 0.1);
    let grid = RadialGrid::graded(1, spec.radius, &GridParams::default()).unwrap();
    let opts = SolveOptions::default().with_snapshots(vec![0.05, 0.1]);
    let (_, _, rep) = solve_comparison_pair(&spec, &spec, &InitialData::warm_start(1.0, 0.01), &grid, &opts).unwrap();
    assert_eq!(rep.min_diff, 0.0);
    assert_eq!(rep.max_diff, 0.0);
}

#[test]
fn zero_coefficient_auxiliary_dominates() {
    let main = ProblemSpec::new(1, Nonlinearity::Power { q: 2.0 }, AbsorptionKernel::constant(1.0), 0.1);
    let aux = ProblemSpec::new(1, Nonlinearity::ShiftedPower { q: 2.0 }, AbsorptionKernel::power(0.0, 0.5), 0.1)
        .with_radius(main.radius);
    let grid = RadialGrid::graded(1, main.radius, &GridParams::default()).unwrap();
    let opts = SolveOptions::default().with_snapshots(vec![0.02, 0.05, 0.1]);
    let (_, _, rep) = solve_comparison_pair(&main, &aux, &InitialData::warm_start(10.0, 1e-3), &grid, &opts).unwrap();
    assert!(rep.max_diff <= 1e-12, "{rep:?}");
}

#[test]
fn rejects_bad_inputs() {
    let spec = heat_spec(1, 0.1);
    let grid = RadialGrid::graded(2, spec.radius, &GridParams::default()).unwrap();
    assert!(solve(&spec, &InitialData::warm_start(1.0, 0.01), &grid, &SolveOptions::default()).is_err());
    let grid = RadialGrid::graded(1, spec.radius, &GridParams::default()).unwrap();
    let opts = SolveOptions::default().with_snapshots(vec![0.005]);
    assert!(solve(&spec, &InitialData::warm_start(1.0, 0.01), &grid, &opts).is_err());
}

#[test]
fn porous_flat_ode_and_mass() {
    let spec = ProblemSpec::new(1, Nonlinearity::Porous { m: 2.0, q: 3.0 }, AbsorptionKernel::constant(0.0), 0.05);
    let grid = RadialGrid::graded(1, spec.radius, &GridParams::default()).unwrap();
    let init = InitialData::warm_start(1.0, 0.01);
    let res = solve(&spec, &init, &grid, &SolveOptions::default()).unwrap();
    let b = Barenblatt::new(1, 2.0, 1.0);
    let err = rel_linf(&res, 1, |r| b.eval(r, 0.05));
    assert!(err < 3e-2, "Barenblatt error {err}");
    let m = &res.diagnostics.masses;
    assert!((m[1] - m[0]).abs() / m[0] < 1e-8, "{m:?}");
}
