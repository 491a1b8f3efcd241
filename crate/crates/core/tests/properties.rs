//! Invariants checked on random inputs.

use std::f64::consts::PI;

use proptest::prelude::*;
use tmscatter::closed_form::{delta2d_amplitude, delta3d_amplitude};
use tmscatter::hamiltonian::{hamiltonian_interaction, Problem};
use tmscatter::invisibility::{born_amplitude_2d, verify_support_shift};
use tmscatter::oracles::oned;
use tmscatter::potential::XProfile;
use tmscatter::transfer::{auxiliary_tm, compose, sandwich, slice_tms};
use tmscatter::{build_grid, EvolveSettings, PotentialSpec, C};

const I: C = C::new(0.0, 1.0);

fn coupling() -> impl Strategy<Value = C> {
    (-1.0..1.0f64, -1.0..1.0f64).prop_map(|(a, b)| C::new(a, b))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn hamiltonian_is_linear_in_the_potential(z1 in coupling(), z2 in coupling(), x in -1.5..1.5f64) {
        let g = build_grid(1.0, 8, 4, 4.0).unwrap();
        let a = PotentialSpec::gaussian(z1, 0.5, 1.0);
        let b = PotentialSpec::separable(2, z2, XProfile::Gaussian { width: 0.4, cutoff: 8.0, center: 0.2 },
            tmscatter::potential::Transverse::Gaussian { width: 0.7, center: [0.3, 0.0] });
        let sum = a.plus(&b).unwrap();
        let h = |s: &PotentialSpec| hamiltonian_interaction(&Problem::new(s, &g.sectors).unwrap(), x).unwrap().mat;
        let d = (h(&sum) - h(&a) - h(&b)).iter().map(|v| v.norm()).fold(0.0, f64::max);
        prop_assert!(d < 1e-13, "{}", d);
    }

    #[test]
    fn born_amplitude_depends_on_momentum_transfer(t0 in -PI..PI, t in -PI..PI, k in 0.3..2.0f64) {
        let spec = PotentialSpec::gaussian(C::new(0.4, 0.1), 0.5, 1.0);
        let a = born_amplitude_2d(&spec, k, t0, t).unwrap();
        let b = born_amplitude_2d(&spec, k, t + PI, t0 + PI).unwrap();
        prop_assert!((a - b).norm() < 1e-14);
    }

    #[test]
    fn delta_line_derivative_in_coupling(re in -2.0..2.0f64, im in -2.0..1.0f64, a in -1.0..1.0f64,
                                         t in -PI..PI, t0 in -PI..PI) {
        let z = C::new(re, im);
        let h = 1e-6;
        let f = |z: C| delta2d_amplitude(z, a, 1.0, t, t0).unwrap();
        let fd = (f(z + h) - f(z - h)) / (2.0 * h);
        let phase = C::from_polar(1.0, -a * (t.sin() - t0.sin()));
        let exact = -(2.0 / PI).sqrt() * 4.0 / ((4.0 + I * z) * (4.0 + I * z)) * phase;
        prop_assert!((fd - exact).norm() < 1e-7 * (1.0 + exact.norm()));
    }

    #[test]
    fn point_interaction_derivative_in_coupling(re in -5.0..5.0f64, im in -5.0..5.0f64, k in 0.2..3.0f64) {
        let z = C::new(re, im);
        let h = 1e-6;
        let f = |z: C| delta3d_amplitude(z, k).unwrap();
        let fd = (f(z + h) - f(z - h)) / (2.0 * h);
        let d = 4.0 * PI + I * k * z;
        let exact = -4.0 * PI / (d * d);
        prop_assert!((fd - exact).norm() < 1e-7 * (1.0 + exact.norm()));
    }

    #[test]
    fn one_dimensional_transfer_matrices(v in coupling(), lo in -1.0..1.0f64, len in 0.1..2.0f64, k in 0.3..2.0f64) {
        let m = oned::rect_barrier(v, lo, lo + len, k);
        prop_assert!((m.determinant() - 1.0).norm() < 1e-12);
        let num = oned::integrate(&|_| v, lo, lo + len, k, 800);
        prop_assert!((num - m).iter().all(|d| d.norm() < 1e-9));
    }

    #[test]
    fn support_shift_leakage(gamma in -0.9..0.9f64, seed in any::<u64>()) {
        let spec = PotentialSpec::band_limited(C::new(0.8, 0.3), XProfile::Bump { lo: -1.0, hi: 1.0 }, 0.7, 2.5);
        let g = build_grid(1.0, 24, 16, 8.0).unwrap();
        let r = verify_support_shift(&spec, &g.sectors, 0.0, gamma, 1.0, &[-0.4, 0.0, 0.5], seed).unwrap();
        prop_assert!(r.leakage <= 1e-10, "{:?}", r);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn slicing_composes_to_the_whole(slices in 1usize..6, z in coupling()) {
        let g = build_grid(1.0, 8, 4, 4.0).unwrap();
        let pb = Problem::new(&PotentialSpec::gaussian(z, 0.5, 1.0), &g.sectors).unwrap();
        let st = EvolveSettings::default();
        // only the oscillating restriction is compared: the evanescent rows of
        // the auxiliary frame mix entries of very different magnitude
        let m = pb.n_osc();
        let whole = sandwich(&auxiliary_tm(&pb, 1, &st).unwrap(), m);
        let parts = sandwich(&compose(&slice_tms(&pb, slices, &st).unwrap()).unwrap(), m);
        let d = whole.max_abs_diff(&parts);
        prop_assert!(d < 1e-8, "{}", d);
    }
}
