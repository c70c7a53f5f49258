//! Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

use std::io::Write;
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use diffabs::dichotomy::{self, classify, decade_ladder, kernel_dini, BlowUpClass, Probe, SweepOptions, SweepTable, Thresholds};
use diffabs::energy::{energy_report, schedule, MuSpec, RkSource, ScheduleParams};
use diffabs::kernels::{
    alpha_ell, dini_classify, dyadic_cutoffs, ell_star, find_beta, theta_exponent, verify_subsolution_inequality,
    AbsorptionKernel, DiniClass, Lemma1Params, Nonlinearity, OmegaSpec, ProblemSpec, ScanGrid,
};
use diffabs::rdsolver::{
    auxiliary_spec, heat_kernel, solve, solve_comparison_pair, GridParams, InitialData, RadialGrid, SolveOptions,
    SolveResult,
};
use diffabs::selfsimilar::{find_profile, vss_field, ProfileResult};

fn report(n: u32, ok: bool, detail: String) {
    // direct handle write, so the line survives libtest output capture
    let line = format!("criterion {n}: {} ({detail})\n", if ok { "PASS" } else { "FAIL" });
    let _ = std::io::stdout().lock().write_all(line.as_bytes());
    assert!(ok, "criterion {n} failed: {detail}");
}

fn graded(spec: &ProblemSpec) -> RadialGrid {
    RadialGrid::graded(spec.dim, spec.radius, &GridParams::default()).unwrap()
}

fn rel_linf(a: &[f64], b: &[f64]) -> f64 {
    let scale = b.iter().fold(0.0f64, |s, x| s.max(x.abs()));
    a.iter().zip(b).fold(0.0f64, |s, (x, y)| s.max((x - y).abs())) / scale
}

#[test]
fn criterion_01_heat_kernel() {
    let start = Instant::now();
    let spec = ProblemSpec::new(1, Nonlinearity::Power { q: 2.0 }, AbsorptionKernel::constant(0.0), 0.1);
    let init = InitialData::warm_start(1.0, 0.01);
    let opts = SolveOptions::default().with_snapshots(vec![0.1]);
    let err = |grid: &RadialGrid| {
        let res = solve(&spec, &init, grid, &opts).unwrap();
        let exact: Vec<f64> = res.r.iter().map(|&r| heat_kernel(1, r, 0.1)).collect();
        rel_linf(res.final_field(), &exact)
    };
    let g = graded(&spec);
    let coarse = err(&g);
    let fine = err(&g.refine());
    let secs = start.elapsed().as_secs_f64();
    report(
        1,
        coarse <= 1e-2 && fine <= 5e-3 && secs < 10.0,
        format!("L∞ error {coarse:.3e} default, {fine:.3e} refined, {secs:.2} s"),
    );
}

#[test]
fn criterion_02_flat_reductions() {
    let a = 1.0;
    let times = vec![0.1, 0.5, 1.0];
    let opts = SolveOptions::default().with_snapshots(times.clone());
    let init = InitialData::Flat { level: a, t_start: 0.0 };
    let mut worst = 0.0f64;
    for (nl, exact) in [
        (Nonlinearity::Power { q: 2.0 }, Box::new(|t: f64| a / (1.0 + a * t)) as Box<dyn Fn(f64) -> f64>),
        (Nonlinearity::Exponential, Box::new(|t: f64| -((-a).exp() + t).ln())),
    ] {
        // the Dirichlet layer at R reaches about 4√T inward; compare well inside it
        let spec = ProblemSpec::new(1, nl, AbsorptionKernel::constant(1.0), 1.0).with_radius(12.0);
        let res = solve(&spec, &init, &graded(&spec), &opts).unwrap();
        for &t in &times {
            let i = res.snapshot_index(t).unwrap();
            for (r, u) in res.r.iter().zip(&res.fields[i]) {
                if *r <= 4.0 {
                    worst = worst.max((u - exact(t)).abs());
                }
            }
        }
    }
    report(2, worst <= 1e-6, format!("max deviation {worst:.3e} at t ∈ {{0.1, 0.5, 1}}"));
}

/// The shipped sweep configurations.
fn shipped() -> Vec<(&'static str, ProblemSpec)> {
    let power = Nonlinearity::Power { q: 2.0 };
    let porous = Nonlinearity::Porous { m: 2.0, q: 3.0 };
    let theta = theta_exponent(2.0, 3.0, 1).unwrap();
    vec![
        ("exp-omega, ω ≡ 1", ProblemSpec::new(1, power, AbsorptionKernel::exp_omega(OmegaSpec::constant(1.0)), 0.05).with_radius(3.0)),
        ("exp-omega, ω = √t", ProblemSpec::new(1, power, AbsorptionKernel::exp_omega(OmegaSpec::power(1.0, 0.5)), 0.05).with_radius(3.0)),
        ("porous, h = t", ProblemSpec::new(1, porous, AbsorptionKernel::power(1.0, 1.0), 0.05).with_radius(12.0)),
        (
            "porous, ω = t^(1/(2θ))",
            ProblemSpec::new(1, porous, AbsorptionKernel::porous_threshold(2.0, 3.0, OmegaSpec::power(1.0, 1.0 / (2.0 * theta))), 0.05)
                .with_radius(12.0),
        ),
    ]
}

struct SweepRun {
    name: &'static str,
    spec: ProblemSpec,
    table: SweepTable,
    refined: SweepTable,
    elapsed: Duration,
}

fn sweeps() -> &'static Vec<SweepRun> {
    static CELL: OnceLock<Vec<SweepRun>> = OnceLock::new();
    CELL.get_or_init(|| {
        let probes = [Probe::new(0.5, 0.05), Probe::new(1.0, 0.05)];
        let ladder = decade_ladder(1, 6);
        shipped()
            .into_iter()
            .map(|(name, spec)| {
                let start = Instant::now();
                let run = |g: &RadialGrid| match spec.nonlinearity {
                    Nonlinearity::Porous { .. } => dichotomy::porous_sweep(&spec, &probes, &ladder, g, &SweepOptions::default()),
                    _ => dichotomy::sweep(&spec, &probes, &ladder, g, &SweepOptions::default()),
                }
                .unwrap();
                let g = graded(&spec);
                let table = run(&g);
                let refined = run(&g.refine());
                SweepRun { name, spec, table, refined, elapsed: start.elapsed() }
            })
            .collect()
    })
}

fn verdict(run: &SweepRun, table: &SweepTable) -> dichotomy::Verdict {
    classify(table, &Thresholds::default(), kernel_dini(&run.spec).unwrap()).unwrap()
}

fn barrier_violations(res: &SolveResult) -> (usize, usize) {
    let exponential = res.nonlinearity == Nonlinearity::Exponential;
    let (mut checked, mut bad) = (0, 0);
    for (field, b) in res.fields.iter().zip(&res.barrier) {
        let Some(b) = b else { continue };
        let limit = if exponential { b + 1e-6 } else { b * (1.0 + 1e-6) };
        checked += field.len();
        bad += field.iter().filter(|&&u| u > limit).count();
    }
    (checked, bad)
}

#[test]
fn criterion_03_supersolution_bounds() {
    let mut checked = 0;
    let mut bad = 0;
    let snaps: Vec<f64> = (1..=10).map(|i| 0.005 * i as f64).collect();
    for (name, spec) in shipped() {
        let res = solve(&spec, &InitialData::warm_start(1e6, 1e-3), &graded(&spec), &SolveOptions::default().with_snapshots(snaps.clone()))
            .unwrap_or_else(|e| panic!("{name}: {e}"));
        let (c, b) = barrier_violations(&res);
        checked += c;
        bad += b;
    }
    // exponential variant with the double-exponential kernel
    let spec = ProblemSpec::new(1, Nonlinearity::Exponential, AbsorptionKernel::double_exp(OmegaSpec::constant(1.0)), 1.0).with_radius(4.0);
    let snaps: Vec<f64> = (1..=10).map(|i| 0.1 * i as f64).collect();
    let res = solve(&spec, &InitialData::warm_start(1e3, 1e-2), &graded(&spec), &SolveOptions::default().with_snapshots(snaps)).unwrap();
    let (c, b) = barrier_violations(&res);
    checked += c;
    bad += b;
    // flat runs sit on the supersolution itself
    for nl in [Nonlinearity::Power { q: 2.0 }, Nonlinearity::Exponential] {
        let spec = ProblemSpec::new(1, nl, AbsorptionKernel::constant(1.0), 1.0).with_radius(4.0);
        let res = solve(&spec, &InitialData::Flat { level: 50.0, t_start: 0.0 }, &graded(&spec), &SolveOptions::default().with_snapshots(vec![0.1, 0.5, 1.0])).unwrap();
        let (c, b) = barrier_violations(&res);
        checked += c;
        bad += b;
    }
    report(3, bad == 0 && checked > 0, format!("{bad} violations over {checked} stored node values"));
}

#[test]
fn criterion_04_monotone_in_k() {
    let mut worst = 0.0f64;
    let mut all_complete = true;
    for run in sweeps() {
        for t in [&run.table, &run.refined] {
            all_complete &= t.complete;
            worst = worst.max(t.worst_monotonicity);
        }
    }
    report(4, all_complete && worst <= 1e-8, format!("largest relative drop along k: {worst:.3e} over {} sweeps", 2 * sweeps().len()));
}

fn dichotomy_line(runs: &[&SweepRun]) -> (Vec<BlowUpClass>, bool, String, Duration) {
    let mut classes = Vec::new();
    let mut stable = true;
    let mut detail = Vec::new();
    let mut total = Duration::ZERO;
    for run in runs {
        let v = verdict(run, &run.table);
        let w = verdict(run, &run.refined);
        stable &= v.class == w.class;
        total += run.elapsed;
        detail.push(format!(
            "{}: {:?} (refined {:?}), increments {:?}, ratio to U {:?}, Dini {:?}",
            run.name, v.class, w.class, v.increments, v.ratio_top, v.dini
        ));
        classes.push(v.class);
    }
    (classes, stable, detail.join("; "), total)
}

#[test]
fn criterion_05_semilinear_dichotomy() {
    let s = sweeps();
    let (classes, stable, detail, total) = dichotomy_line(&[&s[0], &s[1]]);
    let ok = classes == [BlowUpClass::Complete, BlowUpClass::SinglePoint] && stable && total < Duration::from_secs(900);
    report(5, ok, format!("{detail}; {:.1} s", total.as_secs_f64()));
}

#[test]
fn criterion_06_porous_dichotomy() {
    let s = sweeps();
    let (classes, stable, detail, total) = dichotomy_line(&[&s[2], &s[3]]);
    let ok = classes == [BlowUpClass::Complete, BlowUpClass::SinglePoint] && stable && total < Duration::from_secs(900);
    report(6, ok, format!("{detail}; {:.1} s", total.as_secs_f64()));
}

#[test]
fn criterion_07_dini_and_theta() {
    let cut = dyadic_cutoffs(30);
    let a = dini_classify(&OmegaSpec::constant(0.7), 0.5, &cut).unwrap();
    let b = dini_classify(&OmegaSpec::power(1.0, 0.5), 0.5, &cut).unwrap();
    let c = dini_classify(&OmegaSpec::power(1.0, 1.0), 3.0 / 14.0, &cut).unwrap();
    let theta = theta_exponent(2.0, 3.0, 1).unwrap();
    let alpha = alpha_ell(1, ell_star(1)).unwrap();
    let close = |d: DiniClass, v: f64| matches!(d, DiniClass::Finite(x) if (x - v).abs() <= 1e-12);
    let ok = a == DiniClass::Divergent
        && close(b, 4.0)
        && close(c, 14.0 / 3.0)
        && (theta - 3.0 / 14.0).abs() <= 1e-12
        && alpha.abs() <= 1e-12;
    report(7, ok, format!("{a:?}, {b:?}, {c:?}, θ = {theta}, α(ℓ*) = {alpha:e}"));
}

#[test]
fn criterion_08_profile_suite() {
    let mut ok = true;
    let mut notes = Vec::new();
    for dim in [1usize, 3] {
        let star = ell_star(dim);
        let mut ells = vec![1.2, 1.5, star, 2.0, 3.0];
        ells.sort_by(f64::total_cmp);
        let profiles: Vec<ProfileResult> = ells.iter().map(|&l| find_profile(dim, l, 1e-12).unwrap()).collect();
        for p in &profiles {
            let fmax = p.f.iter().cloned().fold(f64::MIN, f64::max);
            let res = p.residual();
            ok &= fmax <= 1.0 + 1e-8 && res <= 1e-6;
            if p.ell >= star {
                ok &= p.delta_fit > 0.0;
            }
            if p.ell == star {
                ok &= (p.tail_p - 2.0).abs() <= 0.3;
                notes.push(format!("N = {dim}: tail exponent {:.3} at ℓ* = {star}", p.tail_p));
            }
            notes.push(format!("N = {dim}, ℓ = {}: a* = {:.6}, residual {res:.1e}", p.ell, p.amplitude));
        }
        let up = profiles.windows(2).all(|w| w[1].f.iter().zip(&w[0].f).all(|(b, a)| b - a >= -1e-8));
        let down = profiles.windows(2).all(|w| w[1].f.iter().zip(&w[0].f).all(|(b, a)| b - a <= 1e-8));
        ok &= up || down;
        notes.push(format!("N = {dim}: monotone in ℓ ({})", if up { "increasing" } else if down { "decreasing" } else { "no" }));
    }
    report(8, ok, notes.join("; "));
}

#[test]
fn criterion_09_vss_round_trip() {
    let (dim, ell, c, t0, t1) = (1usize, 2.0, 1.0, 0.01, 0.04);
    let profile = find_profile(dim, ell, 1e-12).unwrap();
    let kernel = AbsorptionKernel::power(c, alpha_ell(dim, ell).unwrap());
    let spec = ProblemSpec::new(dim, Nonlinearity::Power { q: ell }, kernel, t1).with_radius(3.0);
    let grid = graded(&spec);
    let u0: Vec<f64> = grid.nodes().iter().map(|&x| vss_field(dim, ell, c, &profile, x, t0)).collect();
    let init = InitialData::Custom { t_start: t0, r: grid.nodes().to_vec(), u: u0 };
    let res = solve(&spec, &init, &grid, &SolveOptions::default().with_snapshots(vec![t1])).unwrap();
    let (mut num, mut den) = (0.0, 0.0);
    let r = &res.r;
    let u = res.final_field();
    for j in 1..r.len() {
        if r[j] > 0.8 {
            break;
        }
        let h = r[j] - r[j - 1];
        let e = |i: usize| u[i] - vss_field(dim, ell, c, &profile, r[i], t1);
        let v = |i: usize| vss_field(dim, ell, c, &profile, r[i], t1);
        num += 0.5 * h * (e(j - 1).powi(2) + e(j).powi(2));
        den += 0.5 * h * (v(j - 1).powi(2) + v(j).powi(2));
    }
    let rel = (num / den).sqrt();
    report(9, rel <= 0.02, format!("relative L² error {rel:.3e} on |x| ≤ 0.8 at t = {t1}"));
}

#[test]
fn criterion_10_lemma1() {
    let grid = ScanGrid::default();
    let mut ok = true;
    let mut notes = Vec::new();
    for dim in [1usize, 3] {
        let mut betas = Vec::new();
        for sigma in [0.5, 1.0, 2.0] {
            let p = Lemma1Params::new(sigma, 2.0, dim);
            match find_beta(&p, 1e-3 * sigma, 10.0 * sigma, &grid) {
                Ok(b) => {
                    let holds = [0.1, 0.5, 0.9, 1.0]
                        .iter()
                        .all(|f| verify_subsolution_inequality(&p, f * b.tau_star, &grid).unwrap().holds());
                    ok &= holds;
                    notes.push(format!("N = {dim}, σ = {sigma}: β = {:.4}", b.beta));
                    betas.push(b.beta);
                }
                Err(e) => {
                    ok = false;
                    notes.push(format!("N = {dim}, σ = {sigma}: {e}"));
                }
            }
        }
        if betas.len() >= 2 {
            let (lo, hi) = betas.iter().fold((f64::MAX, f64::MIN), |(a, b), &x| (a.min(x), b.max(x)));
            let spread = hi / lo - 1.0;
            ok &= spread <= 0.2;
            notes.push(format!("N = {dim}: β spread {:.1}%", 100.0 * spread));
        }
    }
    // comparison pair: σ = 1, ℓ = 2, N = 1, k = 100
    let p = Lemma1Params::new(1.0, 2.0, 1);
    let b = find_beta(&p, 1e-3, 10.0, &grid).unwrap();
    let tau = b.tau_star.min(1.0);
    let spec = ProblemSpec::new(1, Nonlinearity::Power { q: 2.0 }, AbsorptionKernel::lemma1(1.0), tau).with_radius(4.0);
    let aux = auxiliary_spec(&p, b.tau_star, 4.0, tau).unwrap();
    let snaps: Vec<f64> = (1..=20).map(|i| tau * i as f64 / 20.0).filter(|&t| t > 1e-3).collect();
    let (_, _, order) = solve_comparison_pair(
        &spec,
        &aux,
        &InitialData::warm_start(100.0, 1e-3),
        &graded(&spec),
        &SolveOptions::default().with_snapshots(snaps),
    )
    .unwrap();
    ok &= order.min_diff >= -1e-4;
    notes.push(format!("min(u_k − v_k) = {:.3e} up to τ = {tau:.4}", order.min_diff));
    report(10, ok, notes.join("; "));
}

#[test]
fn criterion_11_energy() {
    let mut ok = true;
    let mut notes = Vec::new();
    let spec = ProblemSpec::new(1, Nonlinearity::Power { q: 2.0 }, AbsorptionKernel::constant(0.0), 1.0);
    let snaps: Vec<f64> = (1..=80).map(|i| i as f64 / 80.0).collect();
    let res = solve(&spec, &InitialData::warm_start(1.0, 0.01), &graded(&spec), &SolveOptions::default().with_snapshots(snaps.clone())).unwrap();
    let rs = [0.05, 0.1, 0.2, 0.4, 0.8];
    let reps: Vec<_> = rs.iter().map(|&r| energy_report(&res, &spec, r, 0.0, MuSpec::Zero, None).unwrap()).collect();
    ok &= reps.iter().all(|e| e.i3 == 0.0);
    // an absorbing run for the I₃ ordering
    let spec2 = ProblemSpec::new(1, Nonlinearity::Power { q: 2.0 }, AbsorptionKernel::constant(1.0), 1.0);
    let res2 = solve(&spec2, &InitialData::warm_start(10.0, 0.01), &graded(&spec2), &SolveOptions::default().with_snapshots(snaps)).unwrap();
    let reps2: Vec<_> = rs.iter().map(|&r| energy_report(&res2, &spec2, r, 0.0, MuSpec::Zero, None).unwrap()).collect();
    for set in [&reps, &reps2] {
        ok &= set.windows(2).all(|w| w[1].i1 <= w[0].i1 && w[1].i2 <= w[0].i2 && w[1].i3 <= w[0].i3);
    }
    notes.push(format!("I₃ on h ≡ 0: {:?}", reps.iter().map(|e| e.i3).collect::<Vec<_>>()));
    let r: f64 = 0.1;
    let logs: Vec<f64> = (0..=24)
        .map(|i| 2.0 * r.sqrt() + i as f64 * 0.25 * r.sqrt())
        .map(|tau| energy_report(&res, &spec, r, tau, MuSpec::Zero, None).unwrap().f_mu.ln())
        .collect();
    let decreasing = logs.windows(2).all(|w| w[1] < w[0]);
    let concave = logs.windows(3).all(|w| w[2] - 2.0 * w[1] + w[0] <= 1e-9);
    ok &= decreasing && concave;
    notes.push(format!("log f₀ decreasing {decreasing}, concave {concave}"));
    let p = ScheduleParams { k_min: 2, k_max: 20, ..Default::default() };
    let s = schedule(&p, &RkSource::Supplied { r: vec![0.01; 19] }).unwrap();
    let ratio = s.tails[0].bound_sum / s.tails[0].integral;
    ok &= (1.0 / 3.0..=3.0).contains(&ratio);
    notes.push(format!("sum/integral = {ratio:.3}"));
    let p = ScheduleParams { k_min: 10, k_max: 40, omega: OmegaSpec::constant(1.0), ..Default::default() };
    let s = schedule(&p, &RkSource::Bound).unwrap();
    let sums: Vec<f64> = s.tails.iter().map(|t| t.bound_sum).collect();
    let linear = sums.iter().enumerate().all(|(i, v)| (v - (sums.len() - i) as f64).abs() < 1e-9);
    let tau_floor = s.rows.iter().map(|r| r.tau_k).fold(f64::MAX, f64::min);
    ok &= linear && tau_floor > 1.0;
    notes.push(format!("ω ≡ 1: bound sums linear {linear}, min τ_k {tau_floor:.3}"));
    report(11, ok, notes.join("; "));
}
