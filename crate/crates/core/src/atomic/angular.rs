//! Angular factors of the dipole operators between spherical harmonics.
//!
//! Phase convention: complex spherical harmonics with the Condon-Shortley
//! phase, Y_l^{-m} = (-1)^m conj(Y_l^m). With it,
//!
//! sinθ e^{iφ} Y_l^m = -√[(l+m+1)(l+m+2) / ((2l+1)(2l+3))] Y_{l+1}^{m+1}
//!                     + √[(l-m)(l-m-1) / ((2l-1)(2l+1))] Y_{l-1}^{m+1}
//!
//! cosθ Y_l^m = √[((l+1)² - m²) / ((2l+1)(2l+3))] Y_{l+1}^m
//!            + √[(l² - m²) / ((2l-1)(2l+1))] Y_{l-1}^m

/// ⟨l m| sinθ e^{iφ} |l' m'⟩, the angular part of ⟨l m|x + iy|l' m'⟩ / r.
///
/// Nonzero only for l = l' ± 1 and m = m' + 1.
pub fn angular_factor(l: u32, m: i32, l_ket: u32, m_ket: i32) -> f64 {
    if m != m_ket + 1 || m_ket.unsigned_abs() > l_ket || m.unsigned_abs() > l {
        return 0.0;
    }
    let (lk, mk) = (l_ket as f64, m_ket as f64);
    if l == l_ket + 1 {
        -((lk + mk + 1.0) * (lk + mk + 2.0) / ((2.0 * lk + 1.0) * (2.0 * lk + 3.0))).sqrt()
    } else if l + 1 == l_ket {
        ((lk - mk) * (lk - mk - 1.0) / ((2.0 * lk - 1.0) * (2.0 * lk + 1.0))).sqrt()
    } else {
        0.0
    }
}

/// ⟨l m| cosθ |l' m'⟩, the angular part of ⟨l m|z|l' m'⟩ / r.
pub fn angular_factor_z(l: u32, m: i32, l_ket: u32, m_ket: i32) -> f64 {
    if m != m_ket || m_ket.unsigned_abs() > l_ket {
        return 0.0;
    }
    let (lk, mk) = (l_ket as f64, m_ket as f64);
    if l == l_ket + 1 {
        (((lk + 1.0).powi(2) - mk * mk) / ((2.0 * lk + 1.0) * (2.0 * lk + 3.0))).sqrt()
    } else if l + 1 == l_ket {
        ((lk * lk - mk * mk) / ((2.0 * lk - 1.0) * (2.0 * lk + 1.0))).sqrt()
    } else {
        0.0
    }
}
