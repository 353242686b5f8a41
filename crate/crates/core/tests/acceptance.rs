//! One line per acceptance criterion; the test fails if any criterion does.

use std::f64::consts::{FRAC_PI_2, PI};
use std::time::{Duration, Instant};

use hyperstark::cavity::{
    build_coupled_hamiltonian, estimate_coupling, strong_coupling_check, transition_frequencies, CavityParams,
    DEFAULT_SENSITIVITY_PER_UV,
};
use hyperstark::dynamics::{
    propagate, rabi_frequency, rabi_simulation, transverse_amplitude, RabiOptions, TimeGrid,
};
use hyperstark::gates::{cnot_target, pedersen_fidelity, sweep, CnotConvention, SweepConfig};
use hyperstark::linalg::{commutator, max_diff, unitarity_error, CMatrix};
use hyperstark::smm::{effective_levels, stark_shift, SmmParams};
use hyperstark::spin::spin_operators;
use hyperstark::swipht::{analytic_unitary, solve_parameters, SwiphtParams, TwoLevelGenerator, DURATION_PRODUCT};
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Report {
    failed: Vec<usize>,
}

impl Report {
    fn check(&mut self, id: usize, name: &str, ok: bool, detail: String, elapsed: Duration) {
        let tag = if ok { "PASS" } else { "FAIL" };
        println!("[{tag}] {id:>2} {name}: {detail} ({:.2} s)", elapsed.as_secs_f64());
        if !ok {
            self.failed.push(id);
        }
    }
}

fn rel(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

fn rabi_period_sim(p: &SmmParams, detuning: f64, t_max: f64) -> f64 {
    let tr = rabi_simulation(p, detuning, t_max, &RabiOptions::default()).expect("rabi run");
    tr.period().expect("two maxima")
}

fn jobs() -> usize {
    std::env::var("HYPERSTARK_JOBS")
        .ok()
        .and_then(|s| s.parse().ok())
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

fn main() {
    let mut r = Report { failed: Vec::new() };

    // 1. Level splittings.
    let t = Instant::now();
    let lv = effective_levels(&SmmParams::calibrated(), 0.1).unwrap();
    let nu = lv.splittings_ghz();
    let quoted = [2.54, 3.09, 3.63];
    let worst = nu.iter().zip(quoted).map(|(a, b)| rel(*a, b)).fold(0.0, f64::max);
    let el = t.elapsed();
    r.check(1, "level splittings", worst < 0.01 && el.as_secs_f64() < 1.0, format!("nu = {nu:.4?} GHz, worst rel {worst:.2e} < 1e-2"), el);

    // 2. Rabi periods, full lab-frame simulation.
    let t = Instant::now();
    let t0 = rabi_period_sim(&SmmParams { theta: 0.0, ..Default::default() }, 0.0, 6.0);
    let t6 = rabi_period_sim(&SmmParams { theta: PI / 6.0, ..Default::default() }, 0.0, 6.0);
    let el = t.elapsed();
    let ok = rel(t0, 2.23) < 0.02 && rel(t6, 2.57) < 0.02 && el.as_secs_f64() < 30.0;
    r.check(2, "Rabi periods", ok, format!("T(0) = {t0:.4} us, T(pi/6) = {t6:.4} us, within 2%"), el);

    // 3. θ = π/2 transfers nothing.
    let t = Instant::now();
    let p = SmmParams { theta: FRAC_PI_2, ..Default::default() };
    let peak = rabi_simulation(&p, 0.0, 6.0, &RabiOptions::default()).unwrap().max_target();
    r.check(3, "theta = pi/2 null", peak < 1e-4, format!("max P = {peak:.2e} < 1e-4"), t.elapsed());

    // 4. Simulated vs closed-form generalized Rabi frequency.
    let t = Instant::now();
    let p = SmmParams { theta: 0.0, ..Default::default() };
    let omega0 = transverse_amplitude(&p);
    let mut worst = 0.0f64;
    for d in [0.0, 2.0, -2.0, 4.0, -4.0] {
        let expect = rabi_frequency(d, omega0);
        let got = 1.0 / rabi_period_sim(&p, d, 3.0 / expect);
        worst = worst.max(rel(got, expect));
    }
    r.check(4, "Rabi formula", worst < 0.03, format!("worst rel {worst:.2e} < 3e-2 over detuning 0, +-2, +-4 MHz"), t.elapsed());

    // 5. Stark shift of ν₁.
    let t = Instant::now();
    let s = stark_shift(&SmmParams::default(), 2.3e-3).unwrap();
    r.check(5, "Stark shift", rel(s, 7.16) < 0.03, format!("d nu1 = {s:.4} MHz vs 7.16 within 3%"), t.elapsed());

    // 6. SWIPHT constants.
    let t = Instant::now();
    let sol = solve_parameters(2.0 * PI).unwrap();
    let el = t.elapsed();
    let prod = sol.params.tau_us * sol.params.delta.abs();
    let ok = rel(sol.params.c, 138.9) < 5e-3 && rel(prod, 5.87) < 5e-3 && (sol.area - FRAC_PI_2).abs() < 1e-6 && el.as_secs_f64() < 5.0;
    r.check(
        6,
        "SWIPHT constants",
        ok,
        format!("C = {:.4}, tau|delta| = {prod:.4}, area - pi/2 = {:.1e}", sol.params.c, sol.area - FRAC_PI_2),
        el,
    );

    // 7 and 8. Closed-form propagator vs integration, and the cyclic end point.
    let t = Instant::now();
    let mut worst = 0.0f64;
    let mut off = 0.0f64;
    for d_mhz in [0.1, 1.0, 10.0, 100.0] {
        let sp = SwiphtParams::with_product(sol.params.c, 2.0 * PI * d_mhz);
        let gen = TwoLevelGenerator::new(sp).unwrap();
        let rec = propagate(&gen, &TimeGrid::new(0.0, sp.tau_us, 512).with_stride(16), 1e-9).unwrap();
        for (ti, u) in rec.times.iter().zip(&rec.unitaries) {
            worst = worst.max(max_diff(u, &analytic_unitary(*ti, &sp).unwrap()));
        }
        let end = rec.final_unitary();
        off = off.max(end[(0, 1)].norm()).max(end[(1, 0)].norm());
    }
    let el = t.elapsed();
    r.check(7, "closed-form propagator", worst < 1e-6, format!("max |U_num - U_exact| = {worst:.2e} < 1e-6"), el);
    r.check(8, "cyclic unwanted transition", off < 1e-6, format!("max off-diagonal at tau = {off:.2e} < 1e-6"), el);

    // 9, 10 and part of 12. CNOT sweep at ω_c = 2.3 GHz.
    let t = Instant::now();
    let cfg = SweepConfig::default();
    let gs = [5.0, 10.0, 20.0, 30.0, 40.0, 50.0];
    let table = sweep(&gs, &[2.3], &cfg, jobs()).unwrap();
    let el = t.elapsed();
    let rows = table.results_at(2.3);
    let all_rows = rows.len() == gs.len();
    let min_f = rows.iter().map(|(_, g)| g.fidelity).fold(1.0, f64::min);
    let low: Vec<f64> = rows.iter().filter(|(g, _)| *g <= 20.0).map(|(_, r)| r.fidelity).collect();
    let spread = low.iter().cloned().fold(f64::MIN, f64::max) - low.iter().cloned().fold(f64::MAX, f64::min);
    let per_row = el.as_secs_f64() / gs.len() as f64 * jobs() as f64;
    let ok = all_rows && min_f > 0.99 && spread < 5e-3 && per_row < 600.0 && rows.iter().all(|(_, g)| g.converged);
    r.check(9, "CNOT fidelity", ok, format!("min F = {min_f:.8}, spread(g <= 20) = {spread:.1e}, {per_row:.1} s/row"), el);

    let t = Instant::now();
    let structural = rows
        .iter()
        .map(|(_, g)| (g.gate_time_us * 2.0 * PI * g.delta_mhz.abs() - DURATION_PRODUCT).abs())
        .fold(0.0, f64::max);
    let p2 = cfg.qubit2.clone();
    let tau_at = |g: f64| {
        let s = build_coupled_hamiltonian(&cfg.qubit1, &p2, &cfg.cavity, g).unwrap();
        let d = transition_frequencies(&s).delta_mhz;
        solve_parameters(2.0 * PI * d).unwrap().params.tau_us
    };
    let tau45 = tau_at(45.0);
    let crossover = (1..=10).map(|k| 5.0 * k as f64).find(|&g| tau_at(g) < 300.0).unwrap_or(f64::NAN);
    let ok = structural < 1e-9 && (1.0..=10.0).contains(&tau45) && (crossover - 15.0).abs() <= 5.0;
    r.check(
        10,
        "gate-time scaling",
        ok,
        format!("max |tau|delta| - 5.87| = {structural:.1e}, tau(45) = {tau45:.3} us, first g below 0.3 ms = {crossover} MHz"),
        t.elapsed(),
    );

    // 11. Rate budget.
    let t = Instant::now();
    let g = estimate_coupling(SmmParams::default().a_mhz, 6.0, DEFAULT_SENSITIVITY_PER_UV, 20.0).unwrap();
    let b = strong_coupling_check(g, &CavityParams { omega_c_ghz: 1.0, q_factor: 1e5, ..Default::default() }, 0.3).unwrap();
    let ok = rel(b.kappa_mhz * 1e3, 10.0) < 1e-9
        && rel(b.gamma_mhz * 1e3, 3.33) < 0.02
        && rel(g, 60.0) < 0.1
        && b.strong_coupling
        && b.edge;
    r.check(
        11,
        "rate budget",
        ok,
        format!("g = {g:.2} kHz, kappa = {:.2} kHz, gamma = {:.2} kHz, strong = {}, edge = {}", b.kappa_mhz * 1e3, b.gamma_mhz * 1e3, b.strong_coupling, b.edge),
        t.elapsed(),
    );

    // 12. Property suites.
    let t = Instant::now();
    let i = C64::new(0.0, 1.0);
    let spin_err = [0.5, 1.0, 1.5, 6.0]
        .iter()
        .map(|&j| {
            let s = spin_operators(j).unwrap();
            let c = max_diff(&commutator(&s.jx, &s.jy), &(s.jz.clone() * i));
            let cas = max_diff(&s.j_squared(), &s.identity().scale(j * (j + 1.0)));
            c.max(cas)
        })
        .fold(0.0, f64::max);
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let random = |rng: &mut ChaCha8Rng, n: usize| {
        CMatrix::from_fn(n, n, |_, _| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
    };
    let mut unit_err = 0.0f64;
    for n in [2, 8, 32] {
        let a = random(&mut rng, n);
        let h = (&a + a.adjoint()).scale(0.5);
        let gen = hyperstark::dynamics::ConstantGenerator(h);
        let rec = propagate(&gen, &TimeGrid::new(0.0, 3.0, 64).fixed(), 1e-9).unwrap();
        unit_err = unit_err.max(unitarity_error(rec.final_unitary()));
    }
    let s0 = build_coupled_hamiltonian(&cfg.qubit1, &cfg.qubit2, &cfg.cavity, 0.0).unwrap();
    let fact_err = (0..s0.dim())
        .map(|k| {
            let b = s0.dominant[k];
            let bare = s0.levels_mhz[0][b.l1] + s0.levels_mhz[1][b.l2] + b.n as f64 * cfg.cavity.omega_c_ghz * 1e3;
            (s0.dressed.values[k] - bare).abs() / bare.max(1.0)
        })
        .fold(0.0, f64::max);
    let fock = rows.iter().map(|(_, g)| g.fock_drift.unwrap_or(f64::INFINITY)).fold(0.0, f64::max);
    let target = cnot_target(CnotConvention::ZeroControlled);
    let mut frame = 0.0f64;
    for _ in 0..100 {
        let u = random(&mut rng, 4).qr().q();
        let v = random(&mut rng, 4).qr().q();
        let w = random(&mut rng, 4).qr().q();
        frame = frame.max((pedersen_fidelity(&u, &target) - pedersen_fidelity(&(&v * &u * &w), &(&v * &target * &w))).abs());
    }
    let ok = spin_err < 1e-12 && unit_err < 1e-9 && fact_err < 1e-10 && fock < 1e-6 && frame < 1e-12;
    r.check(
        12,
        "property suites",
        ok,
        format!("spin {spin_err:.1e}, unitarity {unit_err:.1e}, g=0 {fact_err:.1e}, Fock drift {fock:.1e}, frame {frame:.1e}"),
        t.elapsed(),
    );

    println!("acceptance: {} of 12 criteria passed", 12 - r.failed.len());
    if !r.failed.is_empty() {
        eprintln!("failed criteria: {:?}", r.failed);
        std::process::exit(1);
    }
}
