//! One-dimensional transfer matrices mapping `(A_-, B_-)` to `(A_+, B_+)` for
//! `psi = A e^{ikx} + B e^{-ikx}` on either side of the potential.

use crate::grid::C;
use nalgebra::Matrix2;

const I: C = C::new(0.0, 1.0);

pub type Tm = Matrix2<C>;

/// Plane-wave basis matrix: columns are (psi, psi') of e^{ikx} and e^{-ikx}.
fn basis(k: C, x: f64) -> Tm {
    let e = (I * k * x).exp();
    let f = (-I * k * x).exp();
    Matrix2::new(e, f, I * k * e, -I * k * f)
}

/// Closed form for a barrier of constant height `v0` on `[lo, hi]`.
pub fn rect_barrier(v0: C, lo: f64, hi: f64, k: f64) -> Tm {
    let l = hi - lo;
    let kk = C::new(k, 0.0);
    let kap = (kk * kk - v0).sqrt();
    let (c, s_over, kap_s) = if kap.norm() < 1e-8 {
        (C::new(1.0, 0.0), C::new(l, 0.0), kap * kap * l)
    } else {
        let s = (kap * l).sin();
        ((kap * l).cos(), s / kap, kap * s)
    };
    // k/kap sin and kap/k sin expressed through the even combinations
    let e = (-I * k * l).exp();
    let m11 = e * (c + 0.5 * I * (kk * s_over + kap_s / kk));
    let m12 = 0.5 * I * (kap_s / kk - kk * s_over) * e;
    let m21 = -0.5 * I * (kap_s / kk - kk * s_over) / e;
    let m22 = (c - 0.5 * I * (kk * s_over + kap_s / kk)) / e;
    let m0 = Matrix2::new(m11, m12, m21, m22);
    // translate from [0, l] to [lo, hi]
    let s = Matrix2::new(
        (-I * k * lo).exp(),
        C::new(0.0, 0.0),
        C::new(0.0, 0.0),
        (I * k * lo).exp(),
    );
    let si = Matrix2::new(
        (I * k * lo).exp(),
        C::new(0.0, 0.0),
        C::new(0.0, 0.0),
        (-I * k * lo).exp(),
    );
    s * m0 * si
}

/// Integrate `psi'' = (v(x) - k^2) psi` across `[lo, hi]` with `steps` RK4
/// steps and convert to plane-wave coefficients.
pub fn integrate(v: &dyn Fn(f64) -> C, lo: f64, hi: f64, k: f64, steps: usize) -> Tm {
    let kk = C::new(k, 0.0);
    let h = (hi - lo) / steps as f64;
    let f = |x: f64, y: Tm| -> Tm {
        // rows: (psi, psi'); each column is an independent solution
        let g = Matrix2::new(
            C::new(0.0, 0.0),
            C::new(1.0, 0.0),
            v(x) - kk * kk,
            C::new(0.0, 0.0),
        );
        g * y
    };
    let mut y = basis(kk, lo);
    for i in 0..steps {
        let x = lo + h * i as f64;
        let k1 = f(x, y);
        let k2 = f(x + 0.5 * h, y + k1 * C::new(0.5 * h, 0.0));
        let k3 = f(x + 0.5 * h, y + k2 * C::new(0.5 * h, 0.0));
        let k4 = f(x + h, y + k3 * C::new(h, 0.0));
        y += (k1 + (k2 + k3) * C::new(2.0, 0.0) + k4) * C::new(h / 6.0, 0.0);
    }
    basis(kk, hi)
        .try_inverse()
        .expect("plane-wave basis is invertible")
        * y
}

pub fn reflection_left(m: &Tm) -> C {
    -m[(1, 0)] / m[(1, 1)]
}

pub fn reflection_right(m: &Tm) -> C {
    m[(0, 1)] / m[(1, 1)]
}

pub fn transmission(m: &Tm) -> C {
    1.0 / m[(1, 1)]
}

/// Composition for consecutive potentials: apply `first`, then `second`.
pub fn compose(second: &Tm, first: &Tm) -> Tm {
    second * first
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_form_matches_integration_and_has_unit_determinant() {
        for &(v0, k) in &[
            (C::new(0.3, 0.0), 1.0),
            (C::new(2.0, 0.5), 0.7),
            (C::new(-1.0, 0.0), 1.4),
        ] {
            let a = rect_barrier(v0, -0.2, 0.9, k);
            let b = integrate(&|_| v0, -0.2, 0.9, k, 4000);
            assert!(crate::grid::maxabs(&(a - b)) < 1e-10, "{a} vs {b}");
            assert!((a.determinant() - C::new(1.0, 0.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn composition_of_adjacent_barriers() {
        let k = 0.9;
        let v0 = C::new(0.4, 0.0);
        let whole = rect_barrier(v0, 0.0, 1.0, k);
        let parts = compose(
            &rect_barrier(v0, 0.4, 1.0, k),
            &rect_barrier(v0, 0.0, 0.4, k),
        );
        assert!(crate::grid::maxabs(&(whole - parts)) < 1e-13);
    }

    #[test]
    fn real_barrier_conserves_flux() {
        let m = rect_barrier(C::new(0.5, 0.0), 0.0, 2.0, 1.1);
        let r = reflection_left(&m).norm_sqr();
        let t = transmission(&m).norm_sqr();
        assert!((r + t - 1.0).abs() < 1e-13);
    }
}
