//! Dressed detuning against a separately assembled real-symmetric model
//! with closed-form nuclear levels.

use hyperstark::cavity::{build_coupled_hamiltonian, transition_frequencies, CavityParams};
use hyperstark::smm::SmmParams;
use nalgebra::{DMatrix, SymmetricEigen};

fn level(a: f64, p: f64, m: f64) -> f64 {
    // m_J = −6 manifold, relative to m_I = 3/2.
    let e = |m: f64| -6.0 * a * m + p * (m * m - 1.25);
    e(m) - e(1.5)
}

fn oracle_delta(p1: &SmmParams, p2: &SmmParams, omega_c: f64, n_max: usize, g: f64) -> f64 {
    let nf = n_max + 1;
    let dim = 16 * nf;
    let idx = |l1: usize, l2: usize, n: usize| (l1 * 4 + l2) * nf + n;
    let ms = [1.5, 0.5, -0.5, -1.5];
    let ladder = |m: f64| (3.75 - m * (m - 1.0)).sqrt();
    let eps: f64 = [p1, p2].iter().map(|p| g * p.theta.tan() / 3f64.sqrt()).sum();
    let xi = g / 3f64.sqrt();
    let mut h = DMatrix::<f64>::zeros(dim, dim);
    for l1 in 0..4 {
        for l2 in 0..4 {
            for n in 0..nf {
                let i = idx(l1, l2, n);
                h[(i, i)] = level(p1.effective_a_mhz(), p1.p_mhz, ms[l1])
                    + level(p2.effective_a_mhz(), p2.p_mhz, ms[l2])
                    + n as f64 * omega_c;
                if n + 1 < nf {
                    let j = idx(l1, l2, n + 1);
                    h[(i, j)] += eps * ((n + 1) as f64).sqrt();
                    h[(j, i)] += eps * ((n + 1) as f64).sqrt();
                    // photon emitted while one nucleus drops from l+1 to l
                    if l1 + 1 < 4 {
                        let k = idx(l1 + 1, l2, n);
                        let v = xi * ladder(ms[l1]) * ((n + 1) as f64).sqrt();
                        h[(j, k)] += v;
                        h[(k, j)] += v;
                    }
                    if l2 + 1 < 4 {
                        let k = idx(l1, l2 + 1, n);
                        let v = xi * ladder(ms[l2]) * ((n + 1) as f64).sqrt();
                        h[(j, k)] += v;
                        h[(k, j)] += v;
                    }
                }
            }
        }
    }
    let e = SymmetricEigen::new(h);
    let pick = |i: usize| {
        (0..dim)
            .max_by(|&x, &y| e.eigenvectors[(i, x)].abs().total_cmp(&e.eigenvectors[(i, y)].abs()))
            .map(|k| e.eigenvalues[k])
            .unwrap()
    };
    let (e00, e01, e10, e11) = (pick(idx(0, 0, 0)), pick(idx(0, 1, 0)), pick(idx(1, 0, 0)), pick(idx(1, 1, 0)));
    (e11 - e10) - (e01 - e00)
}

#[test]
fn dressed_detuning_matches_brute_force() {
    let p1 = SmmParams { delta_t_mhz: 0.0, ..SmmParams::calibrated() };
    let p2 = SmmParams { dc_shift_mhz: 40.0, ..p1.clone() };
    for omega_c in [2.3, 3.5] {
        let c = CavityParams { omega_c_ghz: omega_c, n_max: 4, ..Default::default() };
        for g in [5.0, 10.0, 20.0, 40.0] {
            let s = build_coupled_hamiltonian(&p1, &p2, &c, g).unwrap();
            let got = transition_frequencies(&s).delta_mhz;
            let want = oracle_delta(&p1, &p2, omega_c * 1e3, 4, g);
            assert!((got - want).abs() < 1e-9 + 1e-6 * want.abs(), "omega_c = {omega_c}, g = {g}: {got} vs {want}");
        }
    }
}

#[test]
fn detuning_grows_with_coupling() {
    let p1 = SmmParams::calibrated();
    let p2 = SmmParams { dc_shift_mhz: 40.0, ..p1.clone() };
    let c = CavityParams::default();
    let d: Vec<f64> = [5.0, 15.0, 25.0, 35.0, 45.0]
        .iter()
        .map(|&g| transition_frequencies(&build_coupled_hamiltonian(&p1, &p2, &c, g).unwrap()).delta_mhz.abs())
        .collect();
    assert!(d.windows(2).all(|w| w[1] > w[0]), "{d:?}");
}
