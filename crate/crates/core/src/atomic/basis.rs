use std::collections::HashMap;

use super::{energy, AtomicError, QuantumDefectModel, RydbergState};

/// Truncated set of atomic states used for the numerics.
///
/// States are ordered by energy, then l, then m. The ordering is a pure
/// function of the inputs.
#[derive(Clone, Debug)]
pub struct BasisSet {
    states: Vec<RydbergState>,
    energies: Vec<f64>,
    index: HashMap<RydbergState, usize>,
    pub initial: RydbergState,
    pub n_min: u32,
    pub n_max: u32,
    pub l_max: u32,
}

impl BasisSet {
    /// All (n, l, m) with |n - n_initial| <= `n_window`, l <= `l_max`.
    pub fn build(
        model: &QuantumDefectModel,
        initial: RydbergState,
        n_window: u32,
        l_max: u32,
    ) -> Result<Self, AtomicError> {
        if l_max < 1 {
            return Err(AtomicError::Config("l_max must be at least 1".into()));
        }
        if initial.l > l_max {
            return Err(AtomicError::Config(format!(
                "initial state {initial} lies outside l_max = {l_max}"
            )));
        }
        let n_min = initial.n.saturating_sub(n_window).max(1);
        let n_max = initial.n + n_window;
        let mut states = Vec::new();
        for n in n_min..=n_max {
            for l in 0..=l_max.min(n - 1) {
                for m in -(l as i32)..=(l as i32) {
                    states.push(RydbergState { n, l, m });
                }
            }
        }
        Self::from_states(model, initial, states, l_max)
    }

    /// Basis from an explicit state list (e.g. the {ns, np±} restriction).
    pub fn from_states(
        model: &QuantumDefectModel,
        initial: RydbergState,
        states: Vec<RydbergState>,
        l_max: u32,
    ) -> Result<Self, AtomicError> {
        if states.is_empty() {
            return Err(AtomicError::Config("empty basis".into()));
        }
        let mut tagged = Vec::with_capacity(states.len());
        for s in states {
            let s = RydbergState::new(s.n, s.l, s.m)?;
            tagged.push((energy(s, model)?, s));
        }
        tagged.sort_by(|a, b| {
            a.0.total_cmp(&b.0).then(a.1.l.cmp(&b.1.l)).then(a.1.m.cmp(&b.1.m)).then(a.1.n.cmp(&b.1.n))
        });
        tagged.dedup_by(|a, b| a.1 == b.1);
        let mut index = HashMap::with_capacity(tagged.len());
        for (i, (_, s)) in tagged.iter().enumerate() {
            if index.insert(*s, i).is_some() {
                return Err(AtomicError::Config(format!("duplicate basis state {s}")));
            }
        }
        if !index.contains_key(&initial) {
            return Err(AtomicError::Config(format!("basis does not contain initial state {initial}")));
        }
        let n_min = tagged.iter().map(|t| t.1.n).min().unwrap_or(0);
        let n_max = tagged.iter().map(|t| t.1.n).max().unwrap_or(0);
        let (energies, states) = tagged.into_iter().unzip();
        Ok(Self { states, energies, index, initial, n_min, n_max, l_max })
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn states(&self) -> &[RydbergState] {
        &self.states
    }

    /// Energies (Hartree) in basis order.
    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    pub fn index_of(&self, state: &RydbergState) -> Option<usize> {
        self.index.get(state).copied()
    }

    pub fn initial_index(&self) -> usize {
        self.index[&self.initial]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn smallest_useful_basis() {
        let rb = QuantumDefectModel::rubidium();
        let b = BasisSet::build(&rb, RydbergState::s(55).unwrap(), 0, 1).unwrap();
        assert_eq!(b.len(), 4);
        assert_eq!(b.states()[0], RydbergState::s(55).unwrap());
        assert!(b.states()[1..].iter().all(|s| s.n == 55 && s.l == 1));
        assert_eq!(b.states()[1].m, -1);
    }

    #[test]
    fn lithium_window_counts_high_l_manifold() {
        let li = QuantumDefectModel::lithium();
        let b = BasisSet::build(&li, RydbergState::s(38).unwrap(), 2, 5).unwrap();
        // independent count: five shells, each Σ_{l<=5}(2l+1) = 36
        let expected: usize = (36..=40).map(|_| (0..=5).map(|l| 2 * l + 1).sum::<usize>()).sum();
        assert_eq!(b.len(), expected);
        assert!(b.states().iter().any(|s| s.n == 38 && s.l == 5));
        let hydrogenic = b.states().iter().filter(|s| s.l >= 3).count();
        assert_eq!(hydrogenic, 5 * (7 + 9 + 11));
    }

    #[test]
    fn ordering_is_by_energy_then_l_then_m() {
        let rb = QuantumDefectModel::rubidium();
        let b = BasisSet::build(&rb, RydbergState::s(55).unwrap(), 3, 4).unwrap();
        for w in b.states().windows(2).zip(b.energies().windows(2)) {
            let (s, e) = w;
            assert!(e[0] < e[1] || (e[0] == e[1] && (s[0].l, s[0].m) < (s[1].l, s[1].m)));
        }
        assert_eq!(b.len(), 7 * 25);
    }

    #[test]
    fn no_duplicates_and_initial_present() {
        let rb = QuantumDefectModel::rubidium();
        let s = RydbergState::s(55).unwrap();
        let b = BasisSet::from_states(&rb, s, vec![s, s, RydbergState::new(55, 1, 1).unwrap()], 1).unwrap();
        assert_eq!(b.len(), 2);
        assert_eq!(b.states()[b.initial_index()], s);
        assert!(BasisSet::from_states(&rb, s, vec![], 1).is_err());
        assert!(BasisSet::build(&rb, RydbergState::new(55, 2, 0).unwrap(), 1, 1).is_err());
    }
}
