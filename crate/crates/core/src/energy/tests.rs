use super::*;
use crate::kernels::{AbsorptionKernel, OmegaSpec};
use crate::rdsolver::{solve, GridParams, InitialData, RadialGrid, SolveOptions};

fn snapshots() -> Vec<f64> {
    (1..=40).map(|i| i as f64 / 40.0).collect()
}

fn run(spec: &ProblemSpec, init: InitialData) -> SolveResult {
    let grid = RadialGrid::graded(spec.dim, spec.radius, &GridParams::default()).unwrap();
    solve(spec, &init, &grid, &SolveOptions::default().with_snapshots(snapshots())).unwrap()
}

#[test]
fn heat_run_functionals() {
    let spec = ProblemSpec::new(1, Nonlinearity::Power { q: 2.0 }, AbsorptionKernel::constant(0.0), 1.0);
    let res = run(&spec, InitialData::warm_start(1.0, 0.01));
    let reports: Vec<EnergyReport> = [0.1, 0.2, 0.4]
        .iter()
        .map(|&r| energy_report(&res, &spec, r, 0.0, MuSpec::Zero, None).unwrap())
        .collect();
    for w in reports.windows(2) {
        assert!(w[1].i1 <= w[0].i1 && w[1].i2 <= w[0].i2);
    }
    assert!(reports.iter().all(|e| e.i3 == 0.0 && e.i1 > 0.0 && e.i2 > 0.0));

    // exterior L² mass decays in τ with a concave logarithm
    let r: f64 = 0.1;
    let taus: Vec<f64> = (0..=12).map(|i| 2.0 * r.sqrt() + i as f64 * 0.5 * r.sqrt()).collect();
    let logs: Vec<f64> = taus
        .iter()
        .map(|&tau| energy_report(&res, &spec, r, tau, MuSpec::Zero, None).unwrap().f_mu.ln())
        .collect();
    for w in logs.windows(2) {
        assert!(w[1] < w[0]);
    }
    for w in logs.windows(3) {
        assert!(w[2] - 2.0 * w[1] + w[0] <= 1e-9, "{logs:?}");
    }
}

#[test]
fn flat_run_has_no_interior_gradient() {
    let spec = ProblemSpec::new(1, Nonlinearity::Power { q: 2.0 }, AbsorptionKernel::constant(1.0), 1.0).with_radius(12.0);
    let res = run(&spec, InitialData::Flat { level: 1.0, t_start: 0.0 });
    let e = energy_report(&res, &spec, 0.2, 0.0, MuSpec::Zero, Some(4.0)).unwrap();
    assert!(e.i1 <= 1e-6, "{}", e.i1);
    let full = energy_report(&res, &spec, 0.2, 0.0, MuSpec::Zero, None).unwrap();
    assert!(full.i1 > e.i1);
    assert!(e.i3 > 0.0);
}

#[test]
fn exterior_functionals_shrink_with_tau() {
    let kernel = AbsorptionKernel::exp_omega(OmegaSpec::constant(0.5));
    let spec = ProblemSpec::new(2, Nonlinearity::Power { q: 3.0 }, kernel, 1.0);
    let res = run(&spec, InitialData::warm_start(20.0, 1e-3));
    let mu = MuSpec::Linear { k: 100.0, r: 0.2 };
    let mut prev: Option<EnergyReport> = None;
    for i in 0..10 {
        let e = energy_report(&res, &spec, 0.2, 0.1 * i as f64, MuSpec::Constant { value: mu.eval(0.5) }, None).unwrap();
        if let Some(p) = prev {
            assert!(e.f_mu <= p.f_mu && e.e2 <= p.e2 && e.e1_mu <= p.e1_mu);
        }
        assert!(e.i1 >= 0.0 && e.i3 >= 0.0 && e.e1_mu >= 0.0);
        prev = Some(e);
    }
    assert!(prev.unwrap().h_r.unwrap() > 0.0);
}

#[test]
fn sparse_snapshots_rejected() {
    let spec = ProblemSpec::new(1, Nonlinearity::Power { q: 2.0 }, AbsorptionKernel::constant(0.0), 1.0);
    let grid = RadialGrid::graded(1, spec.radius, &GridParams::default()).unwrap();
    let opts = SolveOptions::default().with_snapshots(vec![0.5, 1.0]);
    let res = solve(&spec, &InitialData::warm_start(1.0, 0.01), &grid, &opts).unwrap();
    assert!(matches!(
        energy_report(&res, &spec, 0.2, 0.0, MuSpec::Zero, None),
        Err(Error::InsufficientResolution(_))
    ));
}

#[test]
fn first_mass() {
    let s = schedule(&ScheduleParams { k_min: 1, k_max: 1, ..Default::default() }, &RkSource::Supplied { r: vec![0.5] }).unwrap();
    assert!((s.rows[0].m_k.unwrap() - 15.154_262_241_479_259).abs() < 1e-12);
}

#[test]
fn sum_against_integral() {
    let p = ScheduleParams { k_min: 2, k_max: 20, ..Default::default() };
    let r = vec![0.01; 19];
    let s = schedule(&p, &RkSource::Supplied { r }).unwrap();
    let t = &s.tails[0];
    assert_eq!(t.n, 2);
    let ratio = t.bound_sum / t.integral;
    assert!((1.0 / 3.0..=3.0).contains(&ratio), "{ratio}");
    assert!((t.integral - 4.0 * ((-0.5f64).exp() - (-5.0f64).exp())).abs() < 1e-9);
}

#[test]
fn bound_mode_converges_for_dini_omega() {
    let p = ScheduleParams { k_min: 10, k_max: 60, ..Default::default() };
    let s = schedule(&p, &RkSource::Bound).unwrap();
    let last = s.rows.last().unwrap();
    assert!(last.tau_k < 1e-6, "{last:?}");
    // the bound form holds with c₈ = sup over k of the implied constant
    let c8: Vec<f64> = s.rows.iter().map(|r| r.implied_c8).collect();
    assert!(c8.iter().all(|x| x.is_finite() && *x > 0.0));
    assert!(c8.windows(2).all(|w| w[1] <= w[0]), "{c8:?}");
    let last_tail = s.tails[s.tails.len() - 1].tau_star;
    assert!(last_tail < 1e-6);
}

#[test]
fn constant_omega_does_not_converge() {
    let p = ScheduleParams { k_min: 10, k_max: 40, omega: OmegaSpec::constant(1.0), ..Default::default() };
    let s = schedule(&p, &RkSource::Bound).unwrap();
    let taus: Vec<f64> = s.rows.iter().map(|r| r.tau_k).collect();
    let floor = taus.iter().cloned().fold(f64::MAX, f64::min);
    assert!(floor > 1.0, "{taus:?}");
    let b: Vec<f64> = s.tails.iter().map(|t| t.bound_sum).collect();
    for (i, v) in b.iter().enumerate() {
        assert!((v - (b.len() - i) as f64).abs() < 1e-12);
    }
}

#[test]
fn schedule_validation() {
    let p = ScheduleParams { eps0: 0.5, ..Default::default() };
    assert!(schedule(&p, &RkSource::Bound).is_err());
    let p = ScheduleParams { k_min: 1, k_max: 3, ..Default::default() };
    assert!(schedule(&p, &RkSource::Supplied { r: vec![0.1] }).is_err());
}
