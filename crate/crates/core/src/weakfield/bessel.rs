//! Modified Bessel functions of the second kind, orders 0 and 1.
//!
//! x <= 2: ascending series. x > 2: Steed's continued fraction for
//! K1/K0 together with the Temme normalization sum, which converges in a
//! few dozen terms and stays at full precision down to the crossover.

use std::f64::consts::PI;

use super::WeakFieldError;

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
const SERIES_LIMIT: f64 = 2.0;

/// K_order(x) for order 0 or 1.
pub fn bessel_k(order: u32, x: f64) -> Result<f64, WeakFieldError> {
    if !(x > 0.0) || x.is_nan() {
        return Err(WeakFieldError::Domain(format!("Bessel K needs x > 0, got {x}")));
    }
    match order {
        0 => Ok(k0(x)),
        1 => Ok(k1(x)),
        _ => Err(WeakFieldError::Domain(format!("Bessel K order {order} not provided"))),
    }
}

/// K0(x) for x > 0 (unchecked).
pub fn k0(x: f64) -> f64 {
    k0_k1(x).0
}

/// K1(x) for x > 0 (unchecked).
pub fn k1(x: f64) -> f64 {
    k0_k1(x).1
}

/// (K0(x), K1(x)) for x > 0.
pub fn k0_k1(x: f64) -> (f64, f64) {
    if x == f64::INFINITY {
        return (0.0, 0.0);
    }
    if x <= SERIES_LIMIT {
        series(x)
    } else {
        continued_fraction(x)
    }
}

/// K0 = -(ln(x/2) + γ) I0 + Σ_k H_k q^k/(k!)²,
/// K1 = 1/x + ln(x/2) I1 - (x/4) Σ_k (H_k + H_{k+1} - 2γ) q^k/(k!(k+1)!),
/// with q = x²/4 and H_k the harmonic numbers.
fn series(x: f64) -> (f64, f64) {
    let q = 0.25 * x * x;
    let log_half = (0.5 * x).ln();
    let (mut i0, mut i1_sum, mut s0, mut s1) = (0.0, 0.0, 0.0, 0.0);
    let mut t0 = 1.0; // q^k / (k!)²
    let mut t1 = 1.0; // q^k / (k!(k+1)!)
    let mut harmonic = 0.0;
    for k in 0..60 {
        let kf = k as f64;
        if k > 0 {
            t0 *= q / (kf * kf);
            t1 *= q / (kf * (kf + 1.0));
            harmonic += 1.0 / kf;
        }
        let next_harmonic = harmonic + 1.0 / (kf + 1.0);
        i0 += t0;
        i1_sum += t1;
        s0 += harmonic * t0;
        s1 += (harmonic + next_harmonic - 2.0 * EULER_GAMMA) * t1;
        if t0 < 1e-18 * i0 && t1 < 1e-18 * i1_sum {
            break;
        }
    }
    let i1 = 0.5 * x * i1_sum;
    let k0 = -(log_half + EULER_GAMMA) * i0 + s0;
    let k1 = 1.0 / x + log_half * i1 - 0.25 * x * s1;
    (k0, k1)
}

/// Steed's CF2 with Temme's normalization for order 0; K1 follows from the
/// continued-fraction ratio.
fn continued_fraction(x: f64) -> (f64, f64) {
    let a1 = 0.25;
    let mut b = 2.0 * (1.0 + x);
    let mut d = 1.0 / b;
    let mut delh = d;
    let mut h = d;
    let (mut q1, mut q2) = (0.0, 1.0);
    let mut q = a1;
    let mut c = a1;
    let mut a = -a1;
    let mut s = 1.0 + q * delh;
    for i in 1..10_000 {
        let fi = i as f64;
        a -= 2.0 * fi;
        c = -a * c / (fi + 1.0);
        let qnew = (q1 - b * q2) / a;
        q1 = q2;
        q2 = qnew;
        q += c * qnew;
        b += 2.0;
        d = 1.0 / (b + a * d);
        delh *= b * d - 1.0;
        h += delh;
        let dels = q * delh;
        s += dels;
        if (dels / s).abs() < 1e-17 {
            break;
        }
    }
    h *= a1;
    let k0 = (PI / (2.0 * x)).sqrt() * (-x).exp() / s;
    let k1 = k0 * (x + 0.5 - h) / x;
    (k0, k1)
}
