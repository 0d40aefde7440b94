//! Dormand-Prince 8(5,3) embedded Runge-Kutta stepping for complex state
//! vectors, with the step-size control of Hairer's DOP853.

use num_complex::Complex64 as C64;

const STAGES: usize = 12;
const C: [f64; 12] = [0.0, 0.05260015195876773, 0.0789002279381516, 0.1183503419072274, 0.2816496580927726, 0.3333333333333333, 0.25, 0.3076923076923077, 0.6512820512820513, 0.6, 0.8571428571428571, 1.0];
const A: [[f64; 12]; 12] = [
    [0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [0.05260015195876773, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [0.0197250569845379, 0.0591751709536137, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [0.02958758547680685, 0.0, 0.08876275643042054, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [0.2413651341592667, 0.0, -0.8845494793282861, 0.924834003261792, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [0.037037037037037035, 0.0, 0.0, 0.17082860872947386, 0.12546768756682242, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [0.037109375, 0.0, 0.0, 0.17025221101954405, 0.06021653898045596, -0.017578125, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [0.03709200011850479, 0.0, 0.0, 0.17038392571223998, 0.10726203044637328, -0.015319437748624402, 0.008273789163814023, 0.0, 0.0, 0.0, 0.0, 0.0],
    [0.6241109587160757, 0.0, 0.0, -3.3608926294469414, -0.868219346841726, 27.59209969944671, 20.154067550477894, -43.48988418106996, 0.0, 0.0, 0.0, 0.0],
    [0.47766253643826434, 0.0, 0.0, -2.4881146199716677, -0.590290826836843, 21.230051448181193, 15.279233632882423, -33.28821096898486, -0.020331201708508627, 0.0, 0.0, 0.0],
    [-0.9371424300859873, 0.0, 0.0, 5.186372428844064, 1.0914373489967295, -8.149787010746927, -18.52006565999696, 22.739487099350505, 2.4936055526796523, -3.0467644718982196, 0.0, 0.0],
    [2.273310147516538, 0.0, 0.0, -10.53449546673725, -2.0008720582248625, -17.9589318631188, 27.94888452941996, -2.8589982771350235, -8.87285693353063, 12.360567175794303, 0.6433927460157636, 0.0],
];
const B: [f64; 12] = [0.054293734116568765, 0.0, 0.0, 0.0, 0.0, 4.450312892752409, 1.8915178993145003, -5.801203960010585, 0.3111643669578199, -0.1521609496625161, 0.20136540080403034, 0.04471061572777259];
const E3: [f64; 13] = [-0.18980075407240762, 0.0, 0.0, 0.0, 0.0, 4.450312892752409, 1.8915178993145003, -5.801203960010585, -0.4226823213237919, -0.1521609496625161, 0.20136540080403034, 0.02265179219836082, 0.0];
const E5: [f64; 13] = [0.01312004499419488, 0.0, 0.0, 0.0, 0.0, -1.2251564463762044, -0.4957589496572502, 1.6643771824549864, -0.35032884874997366, 0.3341791187130175, 0.08192320648511571, -0.022355307863886294, 0.0];

const SAFETY: f64 = 0.9;
const MIN_FACTOR: f64 = 0.2;
const MAX_FACTOR: f64 = 10.0;
const ERROR_EXPONENT: f64 = -1.0 / 8.0;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tolerances {
    pub rel: f64,
    pub abs: f64,
}

/// Counters for one integration.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct StepStats {
    pub accepted: usize,
    pub rejected: usize,
    pub evaluations: usize,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum StepFailure {
    /// Step size fell below the floating-point resolution of t.
    Underflow { t: f64 },
    /// Right-hand side produced a non-finite value.
    NonFinite { t: f64 },
}

/// Adaptive integrator state. The last accepted step size is kept, so
/// consecutive calls over adjacent intervals continue smoothly.
#[derive(Clone, Debug)]
pub struct Dop853 {
    tol: Tolerances,
    h: Option<f64>,
    k: Vec<Vec<C64>>,
    stage: Vec<C64>,
    y_new: Vec<C64>,
    pub stats: StepStats,
}

impl Dop853 {
    pub fn new(tol: Tolerances, dim: usize) -> Self {
        Self {
            tol,
            h: None,
            k: vec![vec![C64::new(0.0, 0.0); dim]; STAGES + 1],
            stage: vec![C64::new(0.0, 0.0); dim],
            y_new: vec![C64::new(0.0, 0.0); dim],
            stats: StepStats::default(),
        }
    }

    fn scale(&self, a: C64, b: C64) -> f64 {
        self.tol.abs + self.tol.rel * a.norm().max(b.norm())
    }

    fn initial_step<F>(&mut self, f: &mut F, t0: f64, y: &[C64], direction: f64) -> f64
    where
        F: FnMut(f64, &[C64], &mut [C64]),
    {
        let n = y.len() as f64;
        let f0 = &self.k[0];
        let (mut d0, mut d1) = (0.0, 0.0);
        for (yi, fi) in y.iter().zip(f0) {
            let s = self.scale(*yi, *yi);
            d0 += (yi.norm() / s).powi(2);
            d1 += (fi.norm() / s).powi(2);
        }
        let (d0, d1) = ((d0 / n).sqrt(), (d1 / n).sqrt());
        let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
        for i in 0..y.len() {
            self.stage[i] = y[i] + f0[i] * (direction * h0);
        }
        let mut f1 = vec![C64::new(0.0, 0.0); y.len()];
        f(t0 + direction * h0, &self.stage, &mut f1);
        self.stats.evaluations += 1;
        let mut d2 = 0.0;
        for i in 0..y.len() {
            d2 += ((f1[i] - self.k[0][i]).norm() / self.scale(y[i], y[i])).powi(2);
        }
        let d2 = (d2 / n).sqrt() / h0;
        let h1 = if d1 <= 1e-15 && d2 <= 1e-15 {
            (h0 * 1e-3).max(1e-6)
        } else {
            (0.01 / d1.max(d2)).powf(1.0 / 8.0)
        };
        (100.0 * h0).min(h1)
    }

    /// Advances `y` from `t0` to `t1` (either direction). `observe` is called
    /// after every accepted step with the new time and state.
    pub fn integrate<F, O>(
        &mut self,
        mut f: F,
        t0: f64,
        t1: f64,
        y: &mut [C64],
        mut observe: O,
    ) -> Result<(), StepFailure>
    where
        F: FnMut(f64, &[C64], &mut [C64]),
        O: FnMut(f64, &[C64]),
    {
        let dim = y.len();
        assert_eq!(dim, self.stage.len(), "state dimension changed");
        if t1 == t0 {
            return Ok(());
        }
        let direction = (t1 - t0).signum();
        let mut t = t0;
        f(t, y, &mut self.k[0]);
        self.stats.evaluations += 1;
        let mut h = match self.h {
            Some(h) => h,
            None => self.initial_step(&mut f, t0, y, direction),
        };
        let mut prior_rejected = false;
        while (t1 - t) * direction > 0.0 {
            let min_step = 10.0 * f64::EPSILON * t.abs().max(t1.abs()).max(1e-300);
            if h < min_step {
                return Err(StepFailure::Underflow { t });
            }
            let mut step = h.min((t1 - t).abs());
            let last = step == (t1 - t).abs();
            if !last && (t1 - t).abs() - step < min_step {
                step = (t1 - t).abs();
            }
            let hs = step * direction;

            for s in 1..STAGES {
                for i in 0..dim {
                    let mut acc = C64::new(0.0, 0.0);
                    for (j, a) in A[s][..s].iter().enumerate() {
                        if *a != 0.0 {
                            acc += self.k[j][i] * *a;
                        }
                    }
                    self.stage[i] = y[i] + acc * hs;
                }
                f(t + C[s] * hs, &self.stage, &mut self.k[s]);
            }
            for i in 0..dim {
                let mut acc = C64::new(0.0, 0.0);
                for (j, b) in B.iter().enumerate() {
                    if *b != 0.0 {
                        acc += self.k[j][i] * *b;
                    }
                }
                self.y_new[i] = y[i] + acc * hs;
            }
            self.stats.evaluations += STAGES - 1;
            if self.y_new.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
                return Err(StepFailure::NonFinite { t });
            }

            let (mut e5, mut e3) = (0.0, 0.0);
            for i in 0..dim {
                let s = self.scale(y[i], self.y_new[i]);
                let (mut a5, mut a3) = (C64::new(0.0, 0.0), C64::new(0.0, 0.0));
                for j in 0..STAGES {
                    a5 += self.k[j][i] * E5[j];
                    a3 += self.k[j][i] * E3[j];
                }
                e5 += (a5.norm() / s).powi(2);
                e3 += (a3.norm() / s).powi(2);
            }
            let error = if e5 == 0.0 && e3 == 0.0 {
                0.0
            } else {
                step * e5 / ((e5 + 0.01 * e3) * dim as f64).sqrt()
            };

            if error < 1.0 {
                let factor = if error == 0.0 {
                    MAX_FACTOR
                } else {
                    (SAFETY * error.powf(ERROR_EXPONENT)).min(MAX_FACTOR)
                };
                let factor = if prior_rejected { factor.min(1.0) } else { factor };
                t = if step == (t1 - t).abs() { t1 } else { t + hs };
                y.copy_from_slice(&self.y_new);
                self.stats.accepted += 1;
                observe(t, y);
                // first stage of the next step (FSAL)
                f(t, y, &mut self.k[0]);
                self.stats.evaluations += 1;
                // keep the controller's proposal rather than the clipped final step
                h = if last { h.max(step * factor) } else { step * factor };
                prior_rejected = false;
            } else {
                h = step * (SAFETY * error.powf(ERROR_EXPONENT)).max(MIN_FACTOR);
                self.stats.rejected += 1;
                prior_rejected = true;
            }
        }
        self.h = Some(h);
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const I: C64 = C64::new(0.0, 1.0);

    #[test]
    fn tableau_consistency() {
        for s in 0..STAGES {
            let row: f64 = A[s].iter().sum();
            assert!((row - C[s]).abs() < 1e-13, "row {s}");
        }
        assert!((B.iter().sum::<f64>() - 1.0).abs() < 1e-13);
        // order conditions up to 8 for the quadrature weights
        for q in 1..=8 {
            let v: f64 = B.iter().zip(C).map(|(b, c)| b * c.powi(q - 1)).sum();
            assert!((v - 1.0 / q as f64).abs() < 1e-12, "order {q}");
        }
    }

    #[test]
    fn harmonic_phase_rotation() {
        // y' = -i ω y, y = e^{-iωt}
        let omega = 3.7;
        let mut y = vec![C64::new(1.0, 0.0), C64::new(0.0, 1.0)];
        let mut solver = Dop853::new(Tolerances { rel: 1e-12, abs: 1e-14 }, 2);
        solver
            .integrate(
                |_, y, dy| {
                    for (d, v) in dy.iter_mut().zip(y) {
                        *d = -I * omega * v;
                    }
                },
                0.0,
                10.0,
                &mut y,
                |_, _| {},
            )
            .unwrap();
        let exact = (-I * omega * 10.0).exp();
        assert!((y[0] - exact).norm() < 1e-10);
        assert!((y[1] - I * exact).norm() < 1e-10);
    }

    #[test]
    fn backward_and_forward_agree() {
        let rhs = |t: f64, y: &[C64], dy: &mut [C64]| {
            dy[0] = -I * (y[0] * t.cos() + y[1] * 0.3);
            dy[1] = -I * (y[1] * 0.5 + y[0] * 0.3);
        };
        let tol = Tolerances { rel: 1e-12, abs: 1e-14 };
        let start = vec![C64::new(0.6, 0.0), C64::new(0.0, 0.8)];
        let mut y = start.clone();
        Dop853::new(tol, 2).integrate(rhs, -5.0, 5.0, &mut y, |_, _| {}).unwrap();
        Dop853::new(tol, 2).integrate(rhs, 5.0, -5.0, &mut y, |_, _| {}).unwrap();
        for (a, b) in y.iter().zip(&start) {
            assert!((a - b).norm() < 1e-10);
        }
    }

    #[test]
    fn underflow_names_time() {
        let rhs = |t: f64, y: &[C64], dy: &mut [C64]| dy[0] = y[0] / (1.0 - t).powi(2);
        let mut y = vec![C64::new(1.0, 0.0)];
        let err = Dop853::new(Tolerances { rel: 1e-10, abs: 1e-12 }, 1)
            .integrate(rhs, 0.0, 2.0, &mut y, |_, _| {})
            .unwrap_err();
        match err {
            StepFailure::Underflow { t } | StepFailure::NonFinite { t } => assert!(t < 1.0 && t > 0.9),
        }
    }
}
