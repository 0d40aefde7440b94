//! Quantum-defect level structure of alkali Rydberg states.

use std::{collections::BTreeMap, fmt, path::Path, str::FromStr};

use super::AtomicError;

const RB_DEFECTS: &str = include_str!("../../data/rb.defects");
const LI_DEFECTS: &str = include_str!("../../data/li.defects");

/// l-resolved quantum defects of one element.
///
/// Defects above `l_cutoff` are zero, so those manifolds are hydrogenic.
#[derive(Clone, Debug, PartialEq)]
pub struct QuantumDefectModel {
    pub element: String,
    defects: BTreeMap<u32, f64>,
    pub l_cutoff: u32,
}

impl QuantumDefectModel {
    pub fn new(
        element: impl Into<String>,
        defects: BTreeMap<u32, f64>,
        l_cutoff: u32,
    ) -> Result<Self, AtomicError> {
        let element = element.into();
        for (&l, &delta) in defects.iter() {
            if !delta.is_finite() || delta < 0.0 {
                return Err(AtomicError::InvalidModel(format!(
                    "{element}: defect for l = {l} must be finite and non-negative, got {delta}"
                )));
            }
            if l > l_cutoff && delta != 0.0 {
                return Err(AtomicError::InvalidModel(format!(
                    "{element}: defect for l = {l} is nonzero above l_cutoff = {l_cutoff}"
                )));
            }
        }
        Ok(Self { element, defects, l_cutoff })
    }

    /// Rubidium defaults shipped in `data/rb.defects`.
    pub fn rubidium() -> Self {
        RB_DEFECTS.parse().expect("shipped rubidium defects are valid")
    }

    /// Lithium defaults shipped in `data/li.defects`.
    pub fn lithium() -> Self {
        LI_DEFECTS.parse().expect("shipped lithium defects are valid")
    }

    /// Shipped defaults by element symbol (case-insensitive).
    pub fn builtin(element: &str) -> Option<Self> {
        match element.to_ascii_lowercase().as_str() {
            "rb" | "rubidium" => Some(Self::rubidium()),
            "li" | "lithium" => Some(Self::lithium()),
            _ => None,
        }
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self, AtomicError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| {
            AtomicError::InvalidModel(format!("cannot read {}: {e}", path.display()))
        })?;
        text.parse()
    }

    pub fn defect(&self, l: u32) -> f64 {
        if l > self.l_cutoff {
            return 0.0;
        }
        self.defects.get(&l).copied().unwrap_or(0.0)
    }

    /// Override (or add) the defect of one orbital quantum number.
    pub fn with_defect(mut self, l: u32, delta: f64) -> Result<Self, AtomicError> {
        self.defects.insert(l, delta);
        let l_cutoff = self.l_cutoff.max(l);
        Self::new(self.element, self.defects, l_cutoff)
    }

    pub fn defects(&self) -> impl Iterator<Item = (u32, f64)> + '_ {
        self.defects.iter().map(|(&l, &d)| (l, d))
    }

    /// Effective principal quantum number n* = n - δ_l.
    pub fn effective_n(&self, n: u32, l: u32) -> Result<f64, AtomicError> {
        let n_eff = n as f64 - self.defect(l);
        if n_eff > 0.0 {
            Ok(n_eff)
        } else {
            Err(AtomicError::InvalidModel(format!(
                "{}: effective quantum number of n = {n}, l = {l} is {n_eff}",
                self.element
            )))
        }
    }

    /// Plain-text key-value rendering, accepted back by [`FromStr`].
    pub fn to_text(&self) -> String {
        let mut out = format!("element = {}\nl_cutoff = {}\n", self.element, self.l_cutoff);
        for (l, d) in self.defects() {
            out.push_str(&format!("delta_{l} = {d}\n"));
        }
        out
    }
}

impl FromStr for QuantumDefectModel {
    type Err = AtomicError;

    fn from_str(text: &str) -> Result<Self, Self::Err> {
        let mut element = None;
        let mut l_cutoff = None;
        let mut defects = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let bad = |msg: &str| {
                AtomicError::InvalidModel(format!("line {}: {msg}: `{}`", lineno + 1, raw.trim()))
            };
            let (key, value) = line
                .split_once('=')
                .or_else(|| line.split_once(':'))
                .ok_or_else(|| bad("expected `key = value`"))?;
            let (key, value) = (key.trim(), value.trim());
            match key {
                "element" => element = Some(value.to_string()),
                "l_cutoff" => {
                    l_cutoff = Some(value.parse::<u32>().map_err(|_| bad("invalid l_cutoff"))?)
                }
                _ => {
                    let l = key
                        .strip_prefix("delta_")
                        .and_then(|l| l.parse::<u32>().ok())
                        .ok_or_else(|| bad("unknown key"))?;
                    let delta = value.parse::<f64>().map_err(|_| bad("invalid defect"))?;
                    if defects.insert(l, delta).is_some() {
                        return Err(bad("duplicate defect"));
                    }
                }
            }
        }
        let element =
            element.ok_or_else(|| AtomicError::InvalidModel("missing `element`".into()))?;
        let l_cutoff = l_cutoff.unwrap_or_else(|| defects.keys().copied().max().unwrap_or(0));
        Self::new(element, defects, l_cutoff)
    }
}

/// Atomic state |n l m⟩ without fine structure.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize, serde::Deserialize)]
pub struct RydbergState {
    pub n: u32,
    pub l: u32,
    pub m: i32,
}

impl RydbergState {
    pub fn new(n: u32, l: u32, m: i32) -> Result<Self, AtomicError> {
        if n == 0 || l >= n || m.unsigned_abs() > l {
            return Err(AtomicError::InvalidState { n, l, m });
        }
        Ok(Self { n, l, m })
    }

    /// The |n s⟩ state.
    pub fn s(n: u32) -> Result<Self, AtomicError> {
        Self::new(n, 0, 0)
    }
}

const L_LETTERS: [char; 7] = ['s', 'p', 'd', 'f', 'g', 'h', 'i'];

impl fmt::Display for RydbergState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match L_LETTERS.get(self.l as usize) {
            Some(c) => write!(f, "{}{}(m={})", self.n, c, self.m),
            None => write!(f, "{}[l={}](m={})", self.n, self.l, self.m),
        }
    }
}

/// E = -1 / (2 n*²) in Hartree.
pub fn energy(state: RydbergState, model: &QuantumDefectModel) -> Result<f64, AtomicError> {
    let n_eff = model.effective_n(state.n, state.l)?;
    Ok(-0.5 / (n_eff * n_eff))
}
