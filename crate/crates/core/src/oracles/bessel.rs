//! Bessel functions J0, J1, Y0, Y1 and Hankel functions of the first kind.
//!
//! Power series below |z| = 12, Hankel's asymptotic expansion above; both
//! are accurate to about 1e-11 absolute near the switch.

use crate::grid::C;
use std::f64::consts::PI;

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
const SWITCH: f64 = 12.0;

struct Series {
    j0: f64,
    j1: f64,
    y0: f64,
    y1: f64,
}

fn series(x: f64) -> Series {
    let q = 0.25 * x * x;
    let half = 0.5 * x;
    // term_m = (-q)^m / (m!)^2 for order 0; (x/2) (-q)^m / (m! (m+1)!) for order 1
    let mut t0 = 1.0;
    let mut t1 = half;
    let mut j0 = 0.0;
    let mut j1 = 0.0;
    let mut s0 = 0.0; // sum (-1)^{m+1} H_m q^m / (m!)^2
    let mut s1 = 0.0; // sum (-1)^m (H_m + H_{m+1}) (x/2)^{2m+1} / (m! (m+1)!)
    let mut hm = 0.0;
    for m in 0..200 {
        let hm1 = hm + 1.0 / (m as f64 + 1.0);
        j0 += t0;
        j1 += t1;
        s0 += -t0 * hm;
        s1 += t1 * (hm + hm1);
        let mf = m as f64;
        t0 *= -q / ((mf + 1.0) * (mf + 1.0));
        t1 *= -q / ((mf + 1.0) * (mf + 2.0));
        hm = hm1;
        if t0.abs() < 1e-18 * j0.abs().max(1e-300) && t1.abs() < 1e-18 && m > 4 {
            break;
        }
    }
    let lg = (half).ln() + EULER_GAMMA;
    Series {
        j0,
        j1,
        y0: 2.0 / PI * (lg * j0 + s0),
        y1: -2.0 / (PI * x) + 2.0 / PI * lg * j1 - s1 / PI,
    }
}

/// Hankel's expansion: H_nu(x) ~ sqrt(2/(pi x)) e^{i(x - nu pi/2 - pi/4)} sum i^k a_k / x^k.
fn asymptotic(nu: f64, x: f64) -> C {
    let mu = 4.0 * nu * nu;
    let mut term = C::new(1.0, 0.0);
    let mut sum = term;
    let mut last = f64::INFINITY;
    for k in 1..60 {
        let kf = k as f64;
        let a = (mu - (2.0 * kf - 1.0).powi(2)) / (kf * 8.0 * x);
        let next = term * C::new(0.0, a);
        if next.norm() > last {
            break;
        }
        last = next.norm();
        term = next;
        sum += term;
        if term.norm() < 1e-17 {
            break;
        }
    }
    (2.0 / (PI * x)).sqrt() * C::from_polar(1.0, x - nu * PI / 2.0 - PI / 4.0) * sum
}

pub fn j0(x: f64) -> f64 {
    let x = x.abs();
    if x < SWITCH {
        series(x).j0
    } else {
        asymptotic(0.0, x).re
    }
}

pub fn j1(x: f64) -> f64 {
    let s = x.signum();
    let x = x.abs();
    s * if x < SWITCH {
        series(x).j1
    } else {
        asymptotic(1.0, x).re
    }
}

/// Y0 for x > 0.
pub fn y0(x: f64) -> f64 {
    if x < SWITCH {
        series(x).y0
    } else {
        asymptotic(0.0, x).im
    }
}

/// Y1 for x > 0.
pub fn y1(x: f64) -> f64 {
    if x < SWITCH {
        series(x).y1
    } else {
        asymptotic(1.0, x).im
    }
}

/// H0^(1)(x) = J0 + i Y0 for x > 0.
pub fn hankel1_0(x: f64) -> C {
    if x < SWITCH {
        let s = series(x);
        C::new(s.j0, s.y0)
    } else {
        asymptotic(0.0, x)
    }
}

/// H1^(1)(x) = J1 + i Y1 for x > 0.
pub fn hankel1_1(x: f64) -> C {
    if x < SWITCH {
        let s = series(x);
        C::new(s.j1, s.y1)
    } else {
        asymptotic(1.0, x)
    }
}
