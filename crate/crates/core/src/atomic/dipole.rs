//! Transition dipoles μ_{αα'} = ⟨α|x + iy|α'⟩ and the Cartesian position
//! operators assembled from them.

use std::{collections::HashMap, io::Write};

use num_complex::Complex64 as C64;

use super::{
    angular_factor, angular_factor_z,
    numerov::{radial_overlap_r, radial_wavefunction, RadialMesh, RadialWavefunction, DEFAULT_STEP},
    AtomicError, BasisSet, QuantumDefectModel, RydbergState,
};

/// Sparse complex matrix in coordinate form.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SparseOperator {
    pub dim: usize,
    pub entries: Vec<(usize, usize, C64)>,
}

impl SparseOperator {
    /// out = A v
    pub fn apply(&self, v: &[C64], out: &mut [C64]) {
        out.iter_mut().for_each(|o| *o = C64::new(0.0, 0.0));
        for &(i, j, a) in &self.entries {
            out[i] += a * v[j];
        }
    }

    /// ⟨v|A|v⟩
    pub fn expectation(&self, v: &[C64]) -> C64 {
        self.entries.iter().map(|&(i, j, a)| v[i].conj() * a * v[j]).sum()
    }

    pub fn to_dense(&self) -> Vec<C64> {
        let mut m = vec![C64::new(0.0, 0.0); self.dim * self.dim];
        for &(i, j, a) in &self.entries {
            m[i * self.dim + j] += a;
        }
        m
    }

    /// max |A_ij - conj(A_ji)|
    pub fn hermiticity_defect(&self) -> f64 {
        let dense = self.to_dense();
        let n = self.dim;
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                worst = worst.max((dense[i * n + j] - dense[j * n + i].conj()).norm());
            }
        }
        worst
    }
}

/// Cache of radial functions keyed by (n, l), all on one mesh step.
pub struct RadialCache<'a> {
    model: &'a QuantumDefectModel,
    step: f64,
    functions: HashMap<(u32, u32), RadialWavefunction>,
}

impl<'a> RadialCache<'a> {
    pub fn new(model: &'a QuantumDefectModel, step: f64) -> Self {
        Self { model, step, functions: HashMap::new() }
    }

    fn get(&mut self, n: u32, l: u32) -> Result<&RadialWavefunction, AtomicError> {
        if !self.functions.contains_key(&(n, l)) {
            let n_eff = self.model.effective_n(n, l)?;
            let mesh = RadialMesh::for_level(n_eff, l, self.step);
            let wf = radial_wavefunction(n_eff, l, &mesh).map_err(|e| e.for_level(n, l))?;
            self.functions.insert((n, l), wf);
        }
        Ok(&self.functions[&(n, l)])
    }

    /// ∫ u_{n1 l1} r u_{n2 l2} dr, requiring |l1 - l2| = 1.
    pub fn radial_integral(&mut self, n1: u32, l1: u32, n2: u32, l2: u32) -> Result<f64, AtomicError> {
        if l1.abs_diff(l2) != 1 {
            return Err(AtomicError::SelectionRule { l1, l2 });
        }
        // order the pair so the integral is symmetric bit-for-bit
        let ((na, la), (nb, lb)) = if (n1, l1) <= (n2, l2) { ((n1, l1), (n2, l2)) } else { ((n2, l2), (n1, l1)) };
        let a = self.get(na, la)?.clone();
        let b = self.get(nb, lb)?;
        Ok(radial_overlap_r(&a, b))
    }
}

/// Radial factor of μ between two states, in a0.
pub fn radial_dipole_integral(
    s1: RydbergState,
    s2: RydbergState,
    model: &QuantumDefectModel,
) -> Result<f64, AtomicError> {
    RadialCache::new(model, DEFAULT_STEP).radial_integral(s1.n, s1.l, s2.n, s2.l)
}

/// Dense table of μ_{αα'} = ⟨α|x + iy|α'⟩ over a basis (a0), plus the z
/// dipoles built from the same radial integrals.
#[derive(Clone, Debug)]
pub struct DipoleTable {
    dim: usize,
    mu: Vec<C64>,
    z: SparseOperator,
}

impl DipoleTable {
    pub fn build(basis: &BasisSet, model: &QuantumDefectModel) -> Result<Self, AtomicError> {
        Self::build_with_step(basis, model, DEFAULT_STEP)
    }

    pub fn build_with_step(
        basis: &BasisSet,
        model: &QuantumDefectModel,
        step: f64,
    ) -> Result<Self, AtomicError> {
        let dim = basis.len();
        let mut cache = RadialCache::new(model, step);
        let mut mu = vec![C64::new(0.0, 0.0); dim * dim];
        let mut z = Vec::new();
        let states = basis.states();
        for (i, a) in states.iter().enumerate() {
            for (j, b) in states.iter().enumerate() {
                if a.l.abs_diff(b.l) != 1 {
                    continue;
                }
                let ang = angular_factor(a.l, a.m, b.l, b.m);
                let ang_z = angular_factor_z(a.l, a.m, b.l, b.m);
                if ang == 0.0 && ang_z == 0.0 {
                    continue;
                }
                let radial = cache
                    .radial_integral(a.n, a.l, b.n, b.l)
                    .map_err(|e| e.between(*a, *b))?;
                if ang != 0.0 {
                    mu[i * dim + j] = C64::new(radial * ang, 0.0);
                }
                if ang_z != 0.0 {
                    z.push((i, j, C64::new(radial * ang_z, 0.0)));
                }
            }
        }
        Ok(Self { dim, mu, z: SparseOperator { dim, entries: z } })
    }

    /// Table with every dipole set to zero (decoupled atom).
    pub fn zeroed(dim: usize) -> Self {
        Self {
            dim,
            mu: vec![C64::new(0.0, 0.0); dim * dim],
            z: SparseOperator { dim, entries: Vec::new() },
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.mu[i * self.dim + j]
    }

    /// Nonzero μ entries as (row, column, value).
    pub fn nonzeros(&self) -> impl Iterator<Item = (usize, usize, C64)> + '_ {
        self.mu
            .iter()
            .enumerate()
            .filter(|(_, v)| **v != C64::new(0.0, 0.0))
            .map(move |(k, &v)| (k / self.dim, k % self.dim, v))
    }

    /// x = [(x + iy) + (x - iy)] / 2 with (x - iy)_{ab} = conj(μ_{ba}).
    pub fn x_operator(&self) -> SparseOperator {
        self.combine(|mu_ab, mu_ba| (mu_ab + mu_ba.conj()) * 0.5)
    }

    /// y = [(x + iy) - (x - iy)] / 2i.
    pub fn y_operator(&self) -> SparseOperator {
        self.combine(|mu_ab, mu_ba| (mu_ab - mu_ba.conj()) / C64::new(0.0, 2.0))
    }

    pub fn z_operator(&self) -> &SparseOperator {
        &self.z
    }

    fn combine(&self, f: impl Fn(C64, C64) -> C64) -> SparseOperator {
        let n = self.dim;
        let mut entries = Vec::new();
        for i in 0..n {
            for j in 0..n {
                let (ab, ba) = (self.mu[i * n + j], self.mu[j * n + i]);
                if ab == C64::new(0.0, 0.0) && ba == C64::new(0.0, 0.0) {
                    continue;
                }
                let v = f(ab, ba);
                if v != C64::new(0.0, 0.0) {
                    entries.push((i, j, v));
                }
            }
        }
        SparseOperator { dim: n, entries }
    }

    /// CSV export, columns n,l,m,n',l',m',re_mu,im_mu (nonzero entries only).
    pub fn write_csv<W: Write>(&self, basis: &BasisSet, mut out: W) -> std::io::Result<()> {
        writeln!(out, "n,l,m,n_prime,l_prime,m_prime,re_mu,im_mu")?;
        for (i, j, v) in self.nonzeros() {
            let (a, b) = (basis.states()[i], basis.states()[j]);
            writeln!(out, "{},{},{},{},{},{},{:.12e},{:.12e}", a.n, a.l, a.m, b.n, b.l, b.m, v.re, v.im)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rb_basis(window: u32, l_max: u32) -> (QuantumDefectModel, BasisSet) {
        let rb = QuantumDefectModel::rubidium();
        let b = BasisSet::build(&rb, RydbergState::s(55).unwrap(), window, l_max).unwrap();
        (rb, b)
    }

    #[test]
    fn selection_rule_violation_is_an_error() {
        let rb = QuantumDefectModel::rubidium();
        let s = RydbergState::s(55).unwrap();
        let d = RydbergState::new(55, 2, 0).unwrap();
        assert!(matches!(radial_dipole_integral(s, d, &rb), Err(AtomicError::SelectionRule { .. })));
        assert!(radial_dipole_integral(s, s, &rb).is_err());
    }

    #[test]
    fn radial_integral_swap_symmetry() {
        let rb = QuantumDefectModel::rubidium();
        let s = RydbergState::s(55).unwrap();
        let p = RydbergState::new(54, 1, 0).unwrap();
        assert_eq!(radial_dipole_integral(s, p, &rb).unwrap(), radial_dipole_integral(p, s, &rb).unwrap());
    }

    #[test]
    fn rb_55s_55p_radial_scale() {
        let rb = QuantumDefectModel::rubidium();
        let r = radial_dipole_integral(RydbergState::s(55).unwrap(), RydbergState::new(55, 1, 0).unwrap(), &rb)
            .unwrap();
        let n2 = 51.869f64.powi(2);
        assert!(r > 0.5 * n2 && r < 1.5 * n2, "{r}");
    }

    #[test]
    fn table_invariants() {
        let (_, b) = rb_basis(1, 3);
        let rb = QuantumDefectModel::rubidium();
        let t = DipoleTable::build(&b, &rb).unwrap();
        for (i, j, v) in t.nonzeros() {
            let (a, c) = (b.states()[i], b.states()[j]);
            assert_eq!(a.l.abs_diff(c.l), 1);
            assert_eq!(a.m, c.m + 1);
            assert_eq!(v.im, 0.0);
            assert!(a.l > 0 || c.l > 0);
        }
        assert!(t.x_operator().hermiticity_defect() < 1e-12);
        assert!(t.y_operator().hermiticity_defect() < 1e-12);
        assert!(t.z_operator().hermiticity_defect() < 1e-12);
        let s = b.index_of(&RydbergState::s(55).unwrap()).unwrap();
        let pm = b.index_of(&RydbergState::new(55, 1, -1).unwrap()).unwrap();
        let pp = b.index_of(&RydbergState::new(55, 1, 1).unwrap()).unwrap();
        let mu = t.get(s, pm);
        assert!(mu.re > 0.0 && mu.im == 0.0);
        assert!((t.get(pp, s) + mu).norm() < 1e-12 * mu.norm());
    }

    #[test]
    fn s_to_s_entries_vanish() {
        let (rb, b) = rb_basis(1, 2);
        let t = DipoleTable::build(&b, &rb).unwrap();
        for (i, a) in b.states().iter().enumerate() {
            for (j, c) in b.states().iter().enumerate() {
                if a.l == 0 && c.l == 0 {
                    assert_eq!(t.get(i, j), C64::new(0.0, 0.0));
                }
            }
        }
    }

    #[test]
    fn ns_np_dipole_grows_with_n() {
        let rb = QuantumDefectModel::rubidium();
        let mut last = 0.0;
        for n in (30..=80).step_by(5) {
            let r = radial_dipole_integral(RydbergState::s(n).unwrap(), RydbergState::new(n, 1, 0).unwrap(), &rb)
                .unwrap();
            assert!(r > last, "n = {n}: {r} <= {last}");
            last = r;
        }
    }

    #[test]
    fn csv_export_header_and_rows() {
        let (rb, b) = rb_basis(0, 1);
        let t = DipoleTable::build(&b, &rb).unwrap();
        let mut buf = Vec::new();
        t.write_csv(&b, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "n,l,m,n_prime,l_prime,m_prime,re_mu,im_mu");
        assert_eq!(lines.count(), 2);
    }
}
