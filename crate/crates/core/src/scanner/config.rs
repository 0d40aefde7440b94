//! Scan configuration files.
//!
//! TOML with unknown keys rejected. Dimensional quantities carry their unit
//! in the key (`distance_um`, `distance_a0`, `sigma_um`, ...). After loading,
//! every default is filled in; the resolved configuration is what output
//! files embed, so any output can be re-run from its own header.

use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::atomic::QuantumDefectModel;
use crate::propagator::PropagationConfig;
use crate::units::um_to_a0;

/// Prefix of the embedded configuration lines in CSV output.
pub const EMBED_PREFIX: &str = "#| ";

#[derive(Clone, Debug, PartialEq)]
pub struct ConfigError {
    pub message: String,
    pub line: Option<usize>,
}

impl ConfigError {
    fn new(message: impl Into<String>) -> Self {
        Self { message: message.into(), line: None }
    }

    fn at(mut self, line: Option<usize>) -> Self {
        self.line = line;
        self
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(l) => write!(f, "line {l}: {}", self.message),
            None => f.write_str(&self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    SingleAtomNumeric,
    SingleAtomAnalytic,
    Polarization,
    ManyBody,
    Table1,
}

impl Mode {
    pub fn needs_propagation(self) -> bool {
        matches!(self, Mode::SingleAtomNumeric | Mode::Polarization | Mode::Table1)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Spacing {
    #[default]
    Linear,
    Log,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KappaGrid {
    pub min: f64,
    pub max: f64,
    pub count: usize,
    #[serde(default)]
    pub spacing: Spacing,
}

impl KappaGrid {
    pub fn points(&self) -> Vec<f64> {
        if self.count == 1 {
            return vec![self.min];
        }
        let last = (self.count - 1) as f64;
        (0..self.count)
            .map(|i| {
                let f = i as f64 / last;
                match self.spacing {
                    Spacing::Linear => self.min + (self.max - self.min) * f,
                    Spacing::Log => (self.min.ln() + (self.max.ln() - self.min.ln()) * f).exp(),
                }
            })
            .collect()
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    /// Defect file in the `key = value` format of the shipped data files.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub file: Option<PathBuf>,
    /// δ_l for l = 0, 1, ...; overrides the element defaults.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<Vec<f64>>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometrySection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub distance_um: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub distance_a0: Option<f64>,
    /// Distance chosen so the same-n channel has this coupling η.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma_um: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma_a0: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Restriction {
    /// Every state in the n window up to l_max.
    #[default]
    None,
    /// Only ns and the same-n p± states.
    SP,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BasisSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_window: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub l_max: Option<u32>,
    #[serde(default)]
    pub restriction: Restriction,
    /// Replace every dipole by zero (decoupled atom).
    #[serde(default)]
    pub zero_dipoles: bool,
    /// Step of the radial mesh in √a0.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radial_step: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalyticSection {
    /// Final-shell principal numbers n'; defaults to [n - 1, n].
    #[serde(default)]
    pub n_primes: Vec<u32>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainSection {
    pub atoms: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spacing_um: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spacing_a0: Option<f64>,
    /// R_at / D.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spacing_ratio: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_prime: Option<u32>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Table1Section {
    /// Depletion targets 1 - P_ns in (0, 1).
    pub targets: Vec<f64>,
    /// Relative width of the final kinetic-energy bracket.
    #[serde(default = "default_energy_tol")]
    pub energy_rel_tol: f64,
}

fn default_energy_tol() -> f64 {
    1e-3
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default)]
    pub format: Format,
}

/// A scan configuration as written in a file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanConfig {
    pub mode: Mode,
    pub element: String,
    pub n: u32,
    #[serde(default)]
    pub model: ModelSection,
    #[serde(default)]
    pub geometry: GeometrySection,
    pub kappa: KappaGrid,
    #[serde(default)]
    pub basis: BasisSection,
    #[serde(default)]
    pub propagation: PropagationConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub analytic: Option<AnalyticSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chain: Option<ChainSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub table1: Option<Table1Section>,
    #[serde(default)]
    pub output: OutputSection,
}

pub const DEFAULT_DISTANCE_UM: f64 = 2.5;
pub const DEFAULT_N_WINDOW: u32 = 3;

/// Default l_max: 8 for lithium, whose near-degenerate high-l manifold
/// takes part in the dynamics, 4 otherwise.
pub fn default_l_max(element: &str) -> u32 {
    if element.eq_ignore_ascii_case("li") {
        8
    } else {
        4
    }
}

/// A validated configuration with all defaults filled in.
#[derive(Clone, Debug, PartialEq)]
pub struct ScanJob {
    pub config: ScanConfig,
    pub model: QuantumDefectModel,
}

impl ScanJob {
    pub fn kappas(&self) -> Vec<f64> {
        self.config.kappa.points()
    }

    /// The resolved configuration as TOML.
    pub fn resolved_toml(&self) -> String {
        toml::to_string(&self.config).expect("resolved configuration serializes")
    }

    /// σ in a0.
    pub fn sigma_a0(&self) -> f64 {
        let g = &self.config.geometry;
        g.sigma_a0.or(g.sigma_um.map(um_to_a0)).unwrap_or(0.0)
    }

    pub fn n_window(&self) -> u32 {
        self.config.basis.n_window.unwrap_or(DEFAULT_N_WINDOW)
    }

    pub fn l_max(&self) -> u32 {
        self.config.basis.l_max.unwrap_or_else(|| default_l_max(&self.config.element))
    }
}

/// 1-based line of `key` inside `[section]` (or the top level).
pub fn locate(source: &str, section: Option<&str>, key: &str) -> Option<usize> {
    let mut current: Option<String> = None;
    for (i, raw) in source.lines().enumerate() {
        let line = raw.trim();
        if line.starts_with('[') {
            current = Some(line.trim_matches(|c| c == '[' || c == ']').trim().to_string());
            continue;
        }
        let Some((k, _)) = line.split_once('=') else { continue };
        if k.trim() == key && current.as_deref() == section {
            return Some(i + 1);
        }
    }
    None
}

/// Keys that name a dimensional quantity without a unit.
const UNITLESS_KEYS: [(&str, &str); 4] = [
    ("distance", "distance_um or distance_a0"),
    ("sigma", "sigma_um or sigma_a0"),
    ("spacing", "spacing_um, spacing_a0 or spacing_ratio"),
    ("kinetic_energy", "kappa ranges or kinetic_energy_ev"),
];

fn check_unit_suffixes(source: &str, table: &toml::Table) -> Result<(), ConfigError> {
    let mut sections: Vec<(Option<&str>, &toml::Table)> = vec![(None, table)];
    for (name, value) in table {
        if let toml::Value::Table(t) = value {
            sections.push((Some(name.as_str()), t));
        }
    }
    for (section, t) in sections {
        for (bare, wanted) in UNITLESS_KEYS {
            // grid spacing (linear/log) is not a length
            if section == Some("kappa") && bare == "spacing" {
                continue;
            }
            if t.contains_key(bare) {
                return Err(ConfigError::new(format!(
                    "`{bare}` needs a unit suffix: use {wanted}"
                ))
                .at(locate(source, section, bare)));
            }
        }
    }
    Ok(())
}

/// Parses and validates configuration text. `base` resolves relative
/// model-file paths.
pub fn parse_config(source: &str, base: Option<&Path>) -> Result<ScanJob, ConfigError> {
    let table: toml::Table = source.parse().map_err(|e: toml::de::Error| parse_error(source, &e))?;
    check_unit_suffixes(source, &table)?;
    let config: ScanConfig = toml::from_str(source).map_err(|e| parse_error(source, &e))?;
    resolve(config, source, base)
}

fn parse_error(source: &str, e: &toml::de::Error) -> ConfigError {
    let line = e.span().map(|s| source[..s.start.min(source.len())].matches('\n').count() + 1);
    let message = e.message().to_string();
    ConfigError::new(message).at(line)
}

/// Reads a configuration file, or the configuration embedded in an output
/// file (CSV header block or JSON provenance).
pub fn load_config(path: impl AsRef<Path>) -> Result<ScanJob, ConfigError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)
        .map_err(|e| ConfigError::new(format!("cannot read {}: {e}", path.display())))?;
    let base = path.parent();
    let trimmed = text.trim_start();
    if trimmed.starts_with('{') {
        let value: serde_json::Value = serde_json::from_str(&text)
            .map_err(|e| ConfigError::new(format!("{}: invalid JSON output file: {e}", path.display())))?;
        let embedded = value
            .pointer("/provenance/config")
            .and_then(|v| v.as_str())
            .ok_or_else(|| ConfigError::new(format!("{}: no embedded configuration", path.display())))?;
        return parse_config(embedded, base);
    }
    if text.lines().any(|l| l.starts_with(EMBED_PREFIX.trim_end())) {
        let embedded: String = text
            .lines()
            .filter_map(|l| l.strip_prefix(EMBED_PREFIX.trim_end()))
            .map(|l| format!("{}\n", l.strip_prefix(' ').unwrap_or(l)))
            .collect();
        return parse_config(&embedded, base);
    }
    parse_config(&text, base)
}

fn positive(value: f64, what: &str, line: Option<usize>) -> Result<(), ConfigError> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(ConfigError::new(format!("{what} must be positive, got {value}")).at(line))
    }
}

fn build_model(config: &ScanConfig, source: &str, base: Option<&Path>) -> Result<QuantumDefectModel, ConfigError> {
    let mut model = match &config.model.file {
        Some(file) => {
            let path = match base {
                Some(b) if file.is_relative() => b.join(file),
                _ => file.clone(),
            };
            let m = QuantumDefectModel::from_file(&path)
                .map_err(|e| ConfigError::new(e.to_string()).at(locate(source, Some("model"), "file")))?;
            if !m.element.eq_ignore_ascii_case(&config.element) {
                return Err(ConfigError::new(format!(
                    "defect file is for {}, configuration asks for {}",
                    m.element, config.element
                ))
                .at(locate(source, Some("model"), "file")));
            }
            Some(m)
        }
        None => QuantumDefectModel::builtin(&config.element),
    };
    if let Some(delta) = &config.model.delta {
        let line = locate(source, Some("model"), "delta");
        let mut m = match model {
            Some(m) => m,
            None => QuantumDefectModel::new(config.element.clone(), Default::default(), 0)
                .map_err(|e| ConfigError::new(e.to_string()).at(line))?,
        };
        for (l, d) in delta.iter().enumerate() {
            m = m.with_defect(l as u32, *d).map_err(|e| ConfigError::new(e.to_string()).at(line))?;
        }
        model = Some(m);
    }
    model.ok_or_else(|| {
        ConfigError::new(format!(
            "no built-in defects for element `{}`; give [model] file or delta",
            config.element
        ))
        .at(locate(source, None, "element"))
    })
}

fn resolve(mut config: ScanConfig, source: &str, base: Option<&Path>) -> Result<ScanJob, ConfigError> {
    let built = build_model(&config, source, base)?;
    // the echo carries the full defect list so it does not depend on files
    let delta: Vec<f64> = (0..=built.l_cutoff).map(|l| built.defect(l)).collect();
    let model = QuantumDefectModel::new(
        built.element.clone(),
        delta.iter().enumerate().map(|(l, d)| (l as u32, *d)).collect(),
        built.l_cutoff,
    )
    .map_err(|e| ConfigError::new(e.to_string()))?;
    config.model = ModelSection { file: None, delta: Some(delta) };

    if config.n < 1 {
        return Err(ConfigError::new("n must be at least 1").at(locate(source, None, "n")));
    }
    model
        .effective_n(config.n, 0)
        .map_err(|e| ConfigError::new(e.to_string()).at(locate(source, None, "n")))?;

    let g = &mut config.geometry;
    let given: Vec<&str> = [("distance_um", g.distance_um), ("distance_a0", g.distance_a0), ("eta", g.eta)]
        .iter()
        .filter(|(_, v)| v.is_some())
        .map(|(k, _)| *k)
        .collect();
    if given.len() > 1 {
        return Err(ConfigError::new(format!(
            "conflicting distance settings: {} (give exactly one)",
            given.join(" and ")
        ))
        .at(locate(source, Some("geometry"), given[1])));
    }
    if given.is_empty() {
        g.distance_um = Some(DEFAULT_DISTANCE_UM);
    }
    for (key, v) in [("distance_um", g.distance_um), ("distance_a0", g.distance_a0), ("eta", g.eta)] {
        if let Some(v) = v {
            positive(v, key, locate(source, Some("geometry"), key))?;
        }
    }
    if g.sigma_um.is_some() && g.sigma_a0.is_some() {
        return Err(ConfigError::new("conflicting sigma settings: sigma_um and sigma_a0")
            .at(locate(source, Some("geometry"), "sigma_a0")));
    }
    if g.sigma_um.is_none() && g.sigma_a0.is_none() {
        g.sigma_um = Some(0.0);
    }
    for (key, v) in [("sigma_um", g.sigma_um), ("sigma_a0", g.sigma_a0)] {
        if let Some(v) = v {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(ConfigError::new(format!("{key} must be non-negative, got {v}"))
                    .at(locate(source, Some("geometry"), key)));
            }
        }
    }

    let k = config.kappa;
    let kline = |key| locate(source, Some("kappa"), key);
    if k.count == 0 {
        return Err(ConfigError::new("kappa count must be at least 1").at(kline("count")));
    }
    if !(k.min.is_finite() && k.max.is_finite()) {
        return Err(ConfigError::new("kappa bounds must be finite").at(kline("min")));
    }
    if k.count > 1 && !(k.max > k.min) {
        return Err(ConfigError::new(format!(
            "kappa grid must be increasing: min = {}, max = {}",
            k.min, k.max
        ))
        .at(kline("max")));
    }
    if k.spacing == Spacing::Log && !(k.min > 0.0) {
        return Err(ConfigError::new("log kappa grid needs min > 0").at(kline("min")));
    }
    let points = k.points();
    if config.mode != Mode::SingleAtomAnalytic && points.iter().any(|p| *p == 0.0) {
        return Err(ConfigError::new("kappa grid contains 0 (electron at rest)").at(kline("min")));
    }
    if matches!(config.mode, Mode::ManyBody | Mode::Table1) && points.iter().any(|p| *p < 0.0) {
        return Err(ConfigError::new("this mode needs kappa > 0 (electron moving in +X)").at(kline("min")));
    }

    let b = &mut config.basis;
    b.n_window.get_or_insert(DEFAULT_N_WINDOW);
    b.l_max.get_or_insert_with(|| default_l_max(&config.element));
    if b.l_max == Some(0) {
        return Err(ConfigError::new("l_max must be at least 1").at(locate(source, Some("basis"), "l_max")));
    }
    if let Some(step) = b.radial_step {
        positive(step, "radial_step", locate(source, Some("basis"), "radial_step"))?;
    }
    config
        .propagation
        .validate()
        .map_err(|e| ConfigError::new(e.to_string()).at(locate(source, Some("propagation"), "rel_tol")))?;

    match config.mode {
        Mode::SingleAtomAnalytic => {
            let a = config.analytic.get_or_insert_with(Default::default);
            if a.n_primes.is_empty() {
                a.n_primes = vec![config.n.saturating_sub(1).max(1), config.n];
            }
        }
        Mode::ManyBody => {
            let line = locate(source, None, "mode");
            let c = config
                .chain
                .as_mut()
                .ok_or_else(|| ConfigError::new("many-body mode needs a [chain] section").at(line))?;
            let cl = |key| locate(source, Some("chain"), key);
            if c.atoms < 1 {
                return Err(ConfigError::new("chain needs at least one atom").at(cl("atoms")));
            }
            let given: Vec<&str> =
                [("spacing_um", c.spacing_um), ("spacing_a0", c.spacing_a0), ("spacing_ratio", c.spacing_ratio)]
                    .iter()
                    .filter(|(_, v)| v.is_some())
                    .map(|(k, _)| *k)
                    .collect();
            if given.len() != 1 {
                return Err(ConfigError::new(
                    "give exactly one of spacing_um, spacing_a0, spacing_ratio",
                )
                .at(given.get(1).and_then(|k| cl(k)).or(locate(source, None, "chain"))));
            }
            positive(
                c.spacing_um.or(c.spacing_a0).or(c.spacing_ratio).unwrap_or(0.0),
                given[0],
                cl(given[0]),
            )?;
            c.n_prime.get_or_insert(config.n);
        }
        Mode::Table1 => {
            let t = config
                .table1
                .as_ref()
                .ok_or_else(|| ConfigError::new("table1 mode needs a [table1] section").at(locate(source, None, "mode")))?;
            let line = locate(source, Some("table1"), "targets");
            if t.targets.is_empty() {
                return Err(ConfigError::new("table1 targets are empty").at(line));
            }
            if let Some(bad) = t.targets.iter().find(|v| !(**v > 0.0 && **v < 1.0)) {
                return Err(ConfigError::new(format!("depletion target {bad} outside (0, 1)")).at(line));
            }
            positive(t.energy_rel_tol, "energy_rel_tol", locate(source, Some("table1"), "energy_rel_tol"))?;
        }
        Mode::SingleAtomNumeric | Mode::Polarization => {}
    }
    Ok(ScanJob { config, model })
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "mode = \"single-atom-numeric\"\nelement = \"Rb\"\nn = 55\n\n[kappa]\nmin = 0.5\nmax = 2.0\ncount = 4\n";

    #[test]
    fn minimal_config_gets_defaults() {
        let job = parse_config(MINIMAL, None).unwrap();
        let c = &job.config;
        assert_eq!(c.geometry.distance_um, Some(DEFAULT_DISTANCE_UM));
        assert_eq!(c.geometry.sigma_um, Some(0.0));
        assert_eq!(c.basis.n_window, Some(3));
        assert_eq!(c.basis.l_max, Some(4));
        assert_eq!(c.propagation, PropagationConfig::default());
        assert_eq!(c.model.delta.as_ref().unwrap().len(), 4);
        assert_eq!(job.kappas(), vec![0.5, 1.0, 1.5, 2.0]);
        let li = parse_config(&MINIMAL.replace("Rb", "Li"), None).unwrap();
        assert_eq!(li.l_max(), 8);
    }

    #[test]
    fn resolved_config_round_trips() {
        let job = parse_config(MINIMAL, None).unwrap();
        let again = parse_config(&job.resolved_toml(), None).unwrap();
        assert_eq!(job, again);
        assert_eq!(job.resolved_toml(), again.resolved_toml());
    }

    #[test]
    fn distance_conflict_is_line_anchored() {
        let text = format!("{MINIMAL}\n[geometry]\ndistance_um = 2.5\ndistance_a0 = 47000\n");
        let err = parse_config(&text, None).unwrap_err();
        assert!(err.message.contains("conflicting"), "{err}");
        assert_eq!(err.line, Some(12));
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let text = MINIMAL.replace("n = 55", "n = 55\nelemnt = \"Li\"");
        let err = parse_config(&text, None).unwrap_err();
        assert!(err.message.contains("elemnt"), "{err}");
        assert_eq!(err.line, Some(4));
        let err = parse_config(&format!("{MINIMAL}\n[basis]\nlmax = 3\n"), None).unwrap_err();
        assert!(err.message.contains("lmax") && err.line == Some(11), "{err}");
    }

    #[test]
    fn dimensional_keys_need_units() {
        let err = parse_config(&format!("{MINIMAL}\n[geometry]\ndistance = 2.5\n"), None).unwrap_err();
        assert!(err.message.contains("distance_um"), "{err}");
        assert_eq!(err.line, Some(11));
    }

    #[test]
    fn grid_validation() {
        let bad = MINIMAL.replace("max = 2.0", "max = 0.1");
        assert!(parse_config(&bad, None).unwrap_err().message.contains("increasing"));
        let zero = MINIMAL.replace("min = 0.5", "min = -1.0").replace("count = 4", "count = 3").replace("max = 2.0", "max = 1.0");
        assert!(parse_config(&zero, None).unwrap_err().message.contains("contains 0"));
        let log = format!("{}spacing = \"log\"\n", MINIMAL.replace("min = 0.5", "min = -0.5"));
        assert!(parse_config(&log, None).is_err());
        let empty = MINIMAL.replace("count = 4", "count = 0");
        assert!(parse_config(&empty, None).is_err());
    }

    #[test]
    fn mode_sections_are_required() {
        let mb = MINIMAL.replace("single-atom-numeric", "many-body");
        assert!(parse_config(&mb, None).unwrap_err().message.contains("[chain]"));
        let t1 = MINIMAL.replace("single-atom-numeric", "table1");
        assert!(parse_config(&t1, None).unwrap_err().message.contains("[table1]"));
        let ok = format!("{mb}\n[chain]\natoms = 2\nspacing_ratio = 2.0\n");
        let job = parse_config(&ok, None).unwrap();
        assert_eq!(job.config.chain.unwrap().n_prime, Some(55));
        let both = format!("{mb}\n[chain]\natoms = 2\nspacing_ratio = 2.0\nspacing_um = 5.0\n");
        assert!(parse_config(&both, None).is_err());
    }

    #[test]
    fn defect_overrides_and_unknown_elements() {
        let na = MINIMAL.replace("\"Rb\"", "\"Na\"");
        assert!(parse_config(&na, None).unwrap_err().message.contains("no built-in"));
        let custom = format!("{na}\n[model]\ndelta = [1.35, 0.85, 0.015]\n");
        let job = parse_config(&custom, None).unwrap();
        assert_eq!(job.model.defect(1), 0.85);
        assert_eq!(job.model.defect(3), 0.0);
    }

    #[test]
    fn embedded_configuration_is_recovered() {
        let job = parse_config(MINIMAL, None).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let csv = dir.path().join("out.csv");
        let block: String = job.resolved_toml().lines().map(|l| format!("{EMBED_PREFIX}{l}\n")).collect();
        std::fs::write(&csv, format!("# header\n{block}kappa,p_ns\n1.0,1.0\n")).unwrap();
        assert_eq!(load_config(&csv).unwrap(), job);
        let json = dir.path().join("out.json");
        let doc = serde_json::json!({ "provenance": { "config": job.resolved_toml() } });
        std::fs::write(&json, doc.to_string()).unwrap();
        assert_eq!(load_config(&json).unwrap(), job);
    }
}
