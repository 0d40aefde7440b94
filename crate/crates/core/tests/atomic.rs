use proptest::prelude::*;
use rydberg_flyby::atomic::{
    angular_factor, energy, radial_dipole_integral, BasisSet, DipoleTable, QuantumDefectModel, RydbergState,
};

/// u(r) for energy -1/(2 n*²) by classical RK4 on a uniform r mesh,
/// integrated inward from far outside the atom and cut off at r = 1 a0.
/// Returns (r, u) with ∫u² dr = 1 by the trapezoid rule.
fn rk4_radial(n_eff: f64, l: u32, h: f64) -> Vec<(f64, f64)> {
    let e = -0.5 / (n_eff * n_eff);
    let ll = (l * (l + 1)) as f64;
    let accel = |r: f64, u: f64| (ll / (r * r) - 2.0 / r - 2.0 * e) * u;
    let r_out = 2.0 * n_eff * (n_eff + 15.0);
    let steps = ((r_out - 1.0) / h).ceil() as usize;
    let kappa = (-2.0 * e).sqrt();
    let (mut r, mut u, mut v) = (1.0 + steps as f64 * h, 1e-30, kappa * 1e-30);
    let mut out = vec![(r, u)];
    for _ in 0..steps {
        // (u, v = -u') stepped toward smaller r
        let f = |r: f64, u: f64, v: f64| (-v, -accel(r, u));
        let g = |r: f64, u: f64, v: f64| {
            let (du, dv) = f(r, u, v);
            (-du, -dv)
        };
        let (k1u, k1v) = g(r, u, v);
        let (k2u, k2v) = g(r - 0.5 * h, u - 0.5 * h * k1u, v - 0.5 * h * k1v);
        let (k3u, k3v) = g(r - 0.5 * h, u - 0.5 * h * k2u, v - 0.5 * h * k2v);
        let (k4u, k4v) = g(r - h, u - h * k3u, v - h * k3v);
        u -= h / 6.0 * (k1u + 2.0 * k2u + 2.0 * k3u + k4u);
        v -= h / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
        r -= h;
        out.push((r, u));
    }
    out.reverse();
    let norm: f64 = out.windows(2).map(|w| 0.5 * h * (w[0].1.powi(2) + w[1].1.powi(2))).sum();
    let s = norm.sqrt();
    out.iter().map(|&(r, u)| (r, u / s)).collect()
}

fn rk4_dipole(a: &[(f64, f64)], b: &[(f64, f64)], h: f64) -> f64 {
    // both meshes end at the same point only if they have the same r_out;
    // interpolate b onto a's nodes
    let b_at = |r: f64| {
        let x = (r - b[0].0) / h;
        if x < 0.0 || x >= (b.len() - 1) as f64 {
            return 0.0;
        }
        let i = x.floor() as usize;
        let t = x - i as f64;
        b[i].1 * (1.0 - t) + b[i + 1].1 * t
    };
    a.windows(2)
        .map(|w| 0.5 * h * (w[0].1 * w[0].0 * b_at(w[0].0) + w[1].1 * w[1].0 * b_at(w[1].0)))
        .sum()
}

fn rb() -> QuantumDefectModel {
    QuantumDefectModel::rubidium()
}

fn st(n: u32, l: u32, m: i32) -> RydbergState {
    RydbergState::new(n, l, m).unwrap()
}

#[test]
fn hydrogen_1s_2p_radial_integral() {
    let h = QuantumDefectModel::new("H", Default::default(), 0).unwrap();
    let got = radial_dipole_integral(st(1, 0, 0), st(2, 1, 0), &h).unwrap();
    // 2⁷√6 / 3⁵
    let want = 128.0 * 6f64.sqrt() / 243.0;
    assert!((got.abs() - want).abs() < 1e-6, "{got} vs {want}");
}

#[test]
fn rubidium_dipoles_match_rk4_oracle() {
    let model = rb();
    let h = 0.05;
    for (n1, l1, n2, l2) in [(55, 0, 55, 1), (55, 0, 54, 1), (55, 1, 55, 2)] {
        let a = rk4_radial(model.effective_n(n1, l1).unwrap(), l1, h);
        let b = rk4_radial(model.effective_n(n2, l2).unwrap(), l2, h);
        let oracle = rk4_dipole(&a, &b, h);
        let got = radial_dipole_integral(st(n1, l1, 0), st(n2, l2, 0), &model).unwrap();
        assert!(
            (got.abs() - oracle.abs()).abs() < 2e-3 * oracle.abs(),
            "{n1},{l1} - {n2},{l2}: {got} vs {oracle}"
        );
    }
}

#[test]
fn rubidium_55s_energy_and_gap() {
    let e = energy(st(55, 0, 0), &rb()).unwrap();
    let n_eff: f64 = 55.0 - 3.131;
    assert!((e + 0.5 / (n_eff * n_eff)).abs() < 1e-18);
    assert!((e + 1.8585e-4).abs() < 1e-8);
    let gap = energy(st(55, 1, 0), &rb()).unwrap() - e;
    assert!(gap > 1e-6 && gap < 1e-5, "{gap}");
}

#[test]
fn phase_convention_of_the_s_p_dipoles() {
    let model = rb();
    let states = vec![st(55, 0, 0), st(55, 1, -1), st(55, 1, 0), st(55, 1, 1)];
    let basis = BasisSet::from_states(&model, st(55, 0, 0), states, 1).unwrap();
    let table = DipoleTable::build(&basis, &model).unwrap();
    let s = basis.index_of(&st(55, 0, 0)).unwrap();
    let minus = basis.index_of(&st(55, 1, -1)).unwrap();
    let plus = basis.index_of(&st(55, 1, 1)).unwrap();
    let mu = table.get(s, minus);
    assert!(mu.re > 0.0 && mu.im == 0.0);
    assert!((table.get(plus, s).re + mu.re).abs() < 1e-12 * mu.re);
    // order n*² a0
    assert!(mu.re > 1e3 && mu.re < 1e4, "{mu}");
}

proptest! {
    #[test]
    fn energy_increases_with_n(n in 2u32..150, l in 0u32..8) {
        prop_assume!(l + 1 < n);
        let model = rb();
        let lo = energy(st(n, l, 0), &model).unwrap();
        let hi = energy(st(n + 1, l, 0), &model).unwrap();
        prop_assert!(hi > lo && hi < 0.0);
    }

    #[test]
    fn angular_selection_rules(l in 0u32..12, m in -12i32..=12, l2 in 0u32..12, m2 in -12i32..=12) {
        let a = angular_factor(l, m, l2, m2);
        if a != 0.0 {
            prop_assert!(l.abs_diff(l2) == 1 && m == m2 + 1);
            prop_assert!(m.unsigned_abs() <= l && m2.unsigned_abs() <= l2);
            prop_assert!(a.abs() <= 1.0);
        }
    }

    #[test]
    fn sum_of_squared_factors_is_sin_squared_average(l in 0u32..10, m_off in 0u32..21) {
        // Σ_{l'} |⟨l' m+1|sinθ e^{iφ}|l m⟩|² = ⟨l m|sin²θ|l m⟩ = 2(l² + l - 1 + m²)/((2l-1)(2l+3))
        prop_assume!(m_off <= 2 * l);
        let m = m_off as i32 - l as i32;
        let total: f64 = [l + 1, l.saturating_sub(1)]
            .iter()
            .filter(|&&lp| lp != l)
            .map(|&lp| angular_factor(lp, m + 1, l, m).powi(2))
            .sum();
        let (lf, mf) = (l as f64, m as f64);
        let want = 2.0 * (lf * lf + lf - 1.0 + mf * mf) / ((2.0 * lf - 1.0) * (2.0 * lf + 3.0));
        prop_assert!((total - want).abs() < 1e-12, "{} vs {}", total, want);
    }
}
