use hyperstark::cavity::{build_coupled_hamiltonian, CavityParams};
use hyperstark::dynamics::{propagate, FnGenerator, TimeGrid};
use hyperstark::gates::{cnot_target, pedersen_fidelity, CnotConvention};
use hyperstark::linalg::{commutator, eig_hermitian, kron, max_diff, unitarity_error, CMatrix};
use hyperstark::smm::{stark_shift, SmmParams};
use hyperstark::spin::spin_operators;
use num_complex::Complex64 as C64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_matrix(rng: &mut impl Rng, n: usize) -> CMatrix {
    CMatrix::from_fn(n, n, |_, _| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
}

fn random_hermitian(rng: &mut impl Rng, n: usize) -> CMatrix {
    let m = random_matrix(rng, n);
    (&m + m.adjoint()).scale(0.5)
}

fn random_unitary(rng: &mut impl Rng, n: usize) -> CMatrix {
    random_matrix(rng, n).qr().q()
}

#[test]
fn spin_algebra() {
    let i = C64::new(0.0, 1.0);
    for j in [0.5, 1.0, 1.5, 6.0] {
        let s = spin_operators(j).unwrap();
        assert!(max_diff(&commutator(&s.jx, &s.jy), &(s.jz.clone() * i)) < 1e-12, "j = {j}");
        assert!(max_diff(&commutator(&s.jy, &s.jz), &(s.jx.clone() * i)) < 1e-12);
        assert!(max_diff(&commutator(&s.jz, &s.jx), &(s.jy.clone() * i)) < 1e-12);
        assert!(max_diff(&s.j_squared(), &s.identity().scale(j * (j + 1.0))) < 1e-12);
    }
}

#[test]
fn pedersen_frame_invariance() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..100 {
        let u = random_unitary(&mut rng, 4);
        let v = random_unitary(&mut rng, 4);
        let w = random_unitary(&mut rng, 4);
        let t = cnot_target(CnotConvention::ZeroControlled);
        let a = pedersen_fidelity(&u, &t);
        let b = pedersen_fidelity(&(&v * &u * &w), &(&v * &t * &w));
        assert!((a - b).abs() < 1e-12);
        assert!((0.0..=1.0 + 1e-12).contains(&a));
    }
}

#[test]
fn uncoupled_system_factorizes() {
    let p1 = SmmParams::calibrated();
    let p2 = SmmParams { dc_shift_mhz: 40.0, ..p1.clone() };
    let s = build_coupled_hamiltonian(&p1, &p2, &CavityParams::default(), 0.0).unwrap();
    for k in 0..s.dim() {
        let b = s.dominant[k];
        let sum = s.levels_mhz[0][b.l1] + s.levels_mhz[1][b.l2] + b.n as f64 * 2300.0;
        assert!((s.dressed.values[k] - sum).abs() < 1e-10 * sum.max(1.0));
        assert!((s.dressed.vectors[(s.index(b), k)].norm_sqr() - 1.0).abs() < 1e-10);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn propagators_stay_unitary(seed in any::<u64>(), n in 2usize..=32) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random_hermitian(&mut rng, n);
        let b = random_hermitian(&mut rng, n);
        let g = FnGenerator::new(n, move |t: f64| &a + b.scale(t.sin()));
        let rec = propagate(&g, &TimeGrid::new(0.0, 1.0, 16).fixed(), 1e-9).unwrap();
        prop_assert!(unitarity_error(rec.final_unitary()) < 1e-9);
    }

    #[test]
    fn eigen_reconstructs(seed in any::<u64>(), n in 1usize..=24) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let h = random_hermitian(&mut rng, n);
        let e = eig_hermitian(&h).unwrap();
        prop_assert!(max_diff(&e.reconstruct(), &h) < 1e-12);
        prop_assert!(unitarity_error(&e.vectors) < 1e-12);
        prop_assert!(e.values.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn kron_mixed_product(seed in any::<u64>(), p in 1usize..4, q in 1usize..4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (a, c) = (random_matrix(&mut rng, p), random_matrix(&mut rng, p));
        let (b, d) = (random_matrix(&mut rng, q), random_matrix(&mut rng, q));
        let lhs = kron(&a, &b) * kron(&c, &d);
        let rhs = kron(&(&a * &c), &(&b * &d));
        prop_assert!(max_diff(&lhs, &rhs) < 1e-12);
    }

    #[test]
    fn two_by_two_roots(a in -5.0f64..5.0, d in -5.0f64..5.0, re in -3.0f64..3.0, im in -3.0f64..3.0) {
        let h = CMatrix::from_row_slice(2, 2, &[C64::new(a, 0.0), C64::new(re, im), C64::new(re, -im), C64::new(d, 0.0)]);
        let e = eig_hermitian(&h).unwrap();
        let mean = (a + d) / 2.0;
        let half = (((a - d) / 2.0).powi(2) + re * re + im * im).sqrt();
        prop_assert!((e.values[0] - (mean - half)).abs() < 1e-12);
        prop_assert!((e.values[1] - (mean + half)).abs() < 1e-12);
    }

    #[test]
    fn three_by_three_roots(x in -2.0f64..2.0, y in -2.0f64..2.0, z in -2.0f64..2.0, off in 0.0f64..1.0) {
        // Characteristic polynomial det(h − λ) vanishes at every eigenvalue.
        let h = CMatrix::from_row_slice(3, 3, &[
            C64::new(x, 0.0), C64::new(off, 0.3), C64::new(0.0, 0.0),
            C64::new(off, -0.3), C64::new(y, 0.0), C64::new(0.5 * off, 0.0),
            C64::new(0.0, 0.0), C64::new(0.5 * off, 0.0), C64::new(z, 0.0),
        ]);
        let e = eig_hermitian(&h).unwrap();
        for &l in &e.values {
            let shifted = &h - CMatrix::identity(3, 3).scale(l);
            prop_assert!(shifted.determinant().norm() < 1e-10);
        }
        prop_assert!((e.values.iter().sum::<f64>() - (x + y + z)).abs() < 1e-12);
    }

    #[test]
    fn stark_shift_is_linear(x in 1e-5f64..2e-3) {
        let p = SmmParams::default();
        let s1 = stark_shift(&p, x).unwrap();
        let s2 = stark_shift(&p, 2.0 * x).unwrap();
        prop_assert!((s2 / s1 - 2.0).abs() < 1e-6);
        prop_assert!((s1 - 6.0 * p.a_mhz * x).abs() < 1e-6 * s1.abs().max(1e-3));
    }
}
