//! Parameter scans over κ, peak searches and depletion inversion, driven by
//! configuration files.

pub mod config;
mod invert;
mod output;

use rayon::prelude::*;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::atomic::{numerov::DEFAULT_STEP, AtomicError, BasisSet, DipoleTable, QuantumDefectModel, RydbergState};
use crate::coupling::{validity_report, Channel, CouplingError, FlybyGeometry, KappaScale, ValidityReport};
use crate::manybody::{collective_peak, collective_probability, ChainConfig, ExcitonLabel, ManyBodyError};
use crate::propagator::{
    polarization, populations, propagate, AmplitudeVector, FlybySystem, PropagationConfig, PropagationError,
};
use crate::units::um_to_a0;
use crate::weakfield::{analytic_probability, find_peak, Target, WeakCouplingChannel, WeakFieldError};

pub use config::{load_config, parse_config, ConfigError, Format, Mode, Restriction, ScanConfig, ScanJob};
pub use invert::{invert_for_depletion, Inversion, InversionError, Root};
pub use output::{write_csv, write_json, Failure, Provenance, Row, ScanOutput};

pub const PROGRAM: &str = "flyby";

#[derive(Debug, thiserror::Error)]
pub enum ScanError {
    #[error("configuration error: {0}")]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Atomic(#[from] AtomicError),
    #[error(transparent)]
    Coupling(#[from] CouplingError),
    #[error(transparent)]
    Propagation(#[from] PropagationError),
    #[error(transparent)]
    ManyBody(#[from] ManyBodyError),
    #[error(transparent)]
    WeakField(#[from] WeakFieldError),
    #[error("{0}")]
    Inversion(String),
    #[error("{failed} of {total} scan points failed")]
    Incomplete { failed: usize, total: usize },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl ScanError {
    /// 2 for configuration problems, 3 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            ScanError::Config(_) | ScanError::Io(_) => 2,
            _ => 3,
        }
    }
}

/// The atom, geometry and (when needed) the propagation system of a job.
#[derive(Clone, Debug)]
pub struct ScanContext {
    pub job: ScanJob,
    pub distance: f64,
    pub sigma: f64,
    /// The same-n channel |ns⟩ → |np⟩, which fixes the κ scale.
    pub reference: Channel,
    pub numeric: Option<NumericSystem>,
}

#[derive(Clone, Debug)]
pub struct NumericSystem {
    pub basis: BasisSet,
    pub table: DipoleTable,
    pub system: FlybySystem,
}

/// Basis of a job: the full window or the {ns, np±} restriction.
pub fn build_basis(job: &ScanJob) -> Result<BasisSet, AtomicError> {
    let n = job.config.n;
    let initial = RydbergState::s(n)?;
    match job.config.basis.restriction {
        Restriction::None => BasisSet::build(&job.model, initial, job.n_window(), job.l_max()),
        Restriction::SP => BasisSet::from_states(
            &job.model,
            initial,
            vec![initial, RydbergState::new(n, 1, 1)?, RydbergState::new(n, 1, -1)?],
            1,
        ),
    }
}

impl ScanContext {
    pub fn new(job: ScanJob) -> Result<Self, ScanError> {
        let c = &job.config;
        let reference = Channel::new(&job.model, c.n, c.n)?;
        let g = &c.geometry;
        let distance = match (g.distance_um, g.distance_a0, g.eta) {
            (Some(um), _, _) => um_to_a0(um),
            (_, Some(a0), _) => a0,
            (_, _, Some(eta)) => reference.distance_for_eta(eta),
            _ => unreachable!("resolved geometry has a distance"),
        };
        let sigma = job.sigma_a0();
        let numeric = if c.mode.needs_propagation() {
            let basis = build_basis(&job)?;
            let table = if c.basis.zero_dipoles {
                DipoleTable::zeroed(basis.len())
            } else {
                DipoleTable::build_with_step(&basis, &job.model, c.basis.radial_step.unwrap_or(DEFAULT_STEP))?
            };
            let system = FlybySystem::new(&basis, &table, distance, reference.gap)?;
            Some(NumericSystem { basis, table, system })
        } else {
            None
        };
        Ok(Self { job, distance, sigma, reference, numeric })
    }

    pub fn model(&self) -> &QuantumDefectModel {
        &self.job.model
    }

    pub fn config(&self) -> &ScanConfig {
        &self.job.config
    }

    pub fn kappa_scale(&self) -> KappaScale {
        self.reference.kappa_scale(self.distance)
    }

    pub fn eta(&self) -> f64 {
        self.reference.eta(self.distance)
    }

    pub fn propagation(&self) -> &PropagationConfig {
        &self.job.config.propagation
    }

    /// Point-charge diagnostics at the given κ (numeric modes only).
    pub fn validity(&self, kappa: f64) -> Result<Option<ValidityReport>, ScanError> {
        let Some(num) = &self.numeric else { return Ok(None) };
        let geometry = FlybyGeometry::new(self.distance, self.kappa_scale().momentum(kappa), self.sigma)?;
        Ok(Some(validity_report(&geometry, &num.basis, self.model())?))
    }

    fn numeric(&self) -> &NumericSystem {
        self.numeric.as_ref().expect("numeric mode has a system")
    }

    /// 1 - P_ns after one fly-by at κ.
    pub fn depletion(&self, kappa: f64) -> Result<f64, PropagationError> {
        let num = self.numeric();
        let out = propagate(&AmplitudeVector::initial(&num.basis, 0.0), &num.system, kappa, self.propagation())?;
        Ok(1.0 - out.final_state.amplitudes[num.basis.initial_index()].norm_sqr())
    }

    fn analytic_channels(&self) -> Result<Vec<(u32, WeakCouplingChannel, WeakCouplingChannel)>, ScanError> {
        let c = self.config();
        let n_primes = c.analytic.as_ref().map(|a| a.n_primes.clone()).unwrap_or_default();
        n_primes
            .iter()
            .map(|&np| {
                let ch = Channel::new(self.model(), c.n, np)?;
                let eta = ch.eta(self.distance);
                let ratio = ch.gap.abs() / self.reference.gap.abs();
                Ok((
                    np,
                    WeakCouplingChannel::with_gap_ratio(eta, ch.lambda(), Target::PPlus, ratio)?,
                    WeakCouplingChannel::with_gap_ratio(eta, ch.lambda(), Target::PMinus, ratio)?,
                ))
            })
            .collect()
    }

    pub fn chain(&self) -> Result<ChainConfig, ScanError> {
        let c = self.config();
        let section = c.chain.as_ref().ok_or_else(|| ScanError::Inversion("job has no chain".into()))?;
        let spacing = match (section.spacing_um, section.spacing_a0, section.spacing_ratio) {
            (Some(um), _, _) => um_to_a0(um),
            (_, Some(a0), _) => a0,
            (_, _, Some(r)) => r * self.distance,
            _ => unreachable!("resolved chain has a spacing"),
        };
        let n_prime = section.n_prime.unwrap_or(c.n);
        Ok(ChainConfig::from_model(self.model(), c.n, n_prime, section.atoms, spacing, self.distance)?)
    }

    fn columns(&self) -> Result<Vec<String>, ScanError> {
        let names: Vec<String> = match self.config().mode {
            Mode::SingleAtomNumeric => {
                ["kappa", "kinetic_energy_ev", "p_ns", "p_p", "p_d", "p_gt_d", "p_other_s", "norm_drift"]
                    .map(String::from)
                    .to_vec()
            }
            Mode::Polarization => {
                ["kappa", "kinetic_energy_ev", "x_a0", "y_a0", "z_a0", "p_ns"].map(String::from).to_vec()
            }
            Mode::SingleAtomAnalytic => {
                let mut v = vec!["kappa".to_string(), "kinetic_energy_ev".to_string()];
                for (np, _, _) in self.analytic_channels()? {
                    v.push(format!("n{np}_p_plus"));
                    v.push(format!("n{np}_p_minus"));
                }
                v.push("total".into());
                v
            }
            Mode::ManyBody => {
                let mut v = vec!["kappa".to_string(), "kinetic_energy_ev".to_string()];
                v.extend(ExcitonLabel::all(self.chain()?.atoms).iter().map(|l| l.column()));
                v.push("total".into());
                v
            }
            Mode::Table1 => [
                "target",
                "energy_ev",
                "kappa",
                "ascending_energy_ev",
                "ascending_kappa",
                "max_depletion",
                "kappa_at_max",
            ]
            .map(String::from)
            .to_vec(),
        };
        Ok(names)
    }

    /// Values of one κ row, in column order.
    pub fn evaluate(&self, kappa: f64) -> Result<Vec<f64>, ScanError> {
        let energy = self.kappa_scale().from_kappa(kappa).kinetic_energy_ev;
        match self.config().mode {
            Mode::SingleAtomNumeric | Mode::Polarization => {
                let num = self.numeric();
                let start = AmplitudeVector::initial(&num.basis, 0.0);
                let out = propagate(&start, &num.system, kappa, self.propagation())?;
                let pops = populations(&out.final_state, &num.basis);
                if self.config().mode == Mode::Polarization {
                    let pol = polarization(&out.final_state, &num.table);
                    Ok(vec![kappa, energy, pol.x, pol.y, pol.z, pops.initial_s])
                } else {
                    Ok(vec![kappa, energy, pops.initial_s, pops.p, pops.d, pops.higher, pops.other_s, out.norm_drift])
                }
            }
            Mode::SingleAtomAnalytic => {
                let mut row = vec![kappa, energy];
                let mut total = 0.0;
                for (_, plus, minus) in self.analytic_channels()? {
                    for ch in [plus, minus] {
                        let p = analytic_probability(&ch, kappa).probability;
                        total += p;
                        row.push(p);
                    }
                }
                row.push(total);
                Ok(row)
            }
            Mode::ManyBody => {
                let chain = self.chain()?;
                let (eta, lambda) = (chain.eta(), chain.lambda());
                let mut row = vec![kappa, energy];
                let mut total = 0.0;
                for label in ExcitonLabel::all(chain.atoms) {
                    let p = collective_probability(label, &chain, kappa, eta, lambda)?;
                    total += p;
                    row.push(p);
                }
                row.push(total);
                Ok(row)
            }
            Mode::Table1 => Err(ScanError::Inversion("table1 rows are not per-kappa".into())),
        }
    }

    pub fn provenance(&self) -> Provenance {
        let config = self.job.resolved_toml();
        let digest = Sha256::digest(config.as_bytes());
        let numeric = self.numeric.as_ref();
        let p = self.propagation();
        Provenance {
            program: PROGRAM.into(),
            version: env!("CARGO_PKG_VERSION").into(),
            mode: mode_name(self.config().mode).into(),
            config_sha256: digest.iter().map(|b| format!("{b:02x}")).collect(),
            basis_size: numeric.map(|n| n.basis.len()),
            rel_tol: numeric.map(|_| p.rel_tol),
            abs_tol: numeric.map(|_| p.abs_tol),
            distance_a0: self.distance,
            eta: self.eta(),
            gap_hartree: self.reference.gap,
            config,
        }
    }
}

pub fn mode_name(mode: Mode) -> &'static str {
    match mode {
        Mode::SingleAtomNumeric => "single-atom-numeric",
        Mode::SingleAtomAnalytic => "single-atom-analytic",
        Mode::Polarization => "polarization",
        Mode::ManyBody => "many-body",
        Mode::Table1 => "table1",
    }
}

fn status_of(result: &Result<Vec<f64>, ScanError>) -> String {
    match result {
        Ok(_) => "ok".into(),
        Err(_) => "failed".into(),
    }
}

/// Runs a job. Points are evaluated on the current rayon pool; output order
/// follows the κ grid (or the target list for table1). Failed points are
/// kept as rows with empty values and listed in `failures`.
pub fn run_scan(ctx: &ScanContext) -> Result<ScanOutput, ScanError> {
    let columns = ctx.columns()?;
    if ctx.config().mode == Mode::Table1 {
        return run_table1(ctx, columns);
    }
    let kappas = ctx.job.kappas();
    let results: Vec<Result<Vec<f64>, ScanError>> = kappas.par_iter().map(|&k| ctx.evaluate(k)).collect();
    let mut rows = Vec::with_capacity(results.len());
    let mut failures = Vec::new();
    for (i, (k, r)) in kappas.iter().zip(&results).enumerate() {
        let status = status_of(r);
        match r {
            Ok(values) => rows.push(Row { values: values.clone(), status }),
            Err(e) => {
                let mut values = vec![f64::NAN; columns.len()];
                values[0] = *k;
                rows.push(Row { values, status });
                failures.push(Failure { row: i, message: format!("kappa = {k}: {e}") });
            }
        }
    }
    Ok(ScanOutput { provenance: ctx.provenance(), columns, rows, failures })
}

/// Depletion on the κ grid, evaluated in parallel.
pub fn depletion_scan(ctx: &ScanContext) -> Result<Vec<(f64, f64)>, ScanError> {
    ctx.job
        .kappas()
        .par_iter()
        .map(|&k| Ok((k, ctx.depletion(k)?)))
        .collect()
}

/// Inverts every table1 target. Targets above the reachable maximum give a
/// row with status `unreachable` rather than an error.
pub fn run_table1(ctx: &ScanContext, columns: Vec<String>) -> Result<ScanOutput, ScanError> {
    let section = ctx.config().table1.clone().ok_or_else(|| ScanError::Inversion("no [table1] section".into()))?;
    let scan = depletion_scan(ctx)?;
    let scale = ctx.kappa_scale();
    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for (i, &target) in section.targets.iter().enumerate() {
        match invert_for_depletion(|k| ctx.depletion(k), &scan, target, section.energy_rel_tol, &scale) {
            Ok(inv) => {
                let (ae, ak) = inv.ascending.map(|r| (r.energy_ev, r.kappa)).unwrap_or((f64::NAN, f64::NAN));
                rows.push(Row {
                    values: vec![
                        target,
                        inv.descending.energy_ev,
                        inv.descending.kappa,
                        ae,
                        ak,
                        inv.max_depletion,
                        inv.kappa_at_max,
                    ],
                    status: "ok".into(),
                });
            }
            Err(InversionError::Unreachable { max_depletion, kappa_at_max, .. }) => {
                let nan = f64::NAN;
                rows.push(Row {
                    values: vec![target, nan, nan, nan, nan, max_depletion, kappa_at_max],
                    status: "unreachable".into(),
                });
                failures.push(Failure {
                    row: i,
                    message: format!("target {target} above maximum depletion {max_depletion}"),
                });
            }
            Err(e) => {
                let mut values = vec![f64::NAN; columns.len()];
                values[0] = target;
                rows.push(Row { values, status: "failed".into() });
                failures.push(Failure { row: i, message: e.to_string() });
            }
        }
    }
    Ok(ScanOutput { provenance: ctx.provenance(), columns, rows, failures })
}

/// One located maximum for the `peak` subcommand.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PeakRecord {
    pub curve: String,
    pub kappa: f64,
    pub kinetic_energy_ev: f64,
    pub probability: f64,
}

/// Peaks of the analytic curves (analytic mode) or of every exciton
/// (many-body mode).
pub fn find_peaks(ctx: &ScanContext) -> Result<Vec<PeakRecord>, ScanError> {
    let scale = ctx.kappa_scale();
    let record = |curve: String, kappa: f64, probability: f64| PeakRecord {
        curve,
        kappa,
        kinetic_energy_ev: scale.from_kappa(kappa).kinetic_energy_ev,
        probability,
    };
    match ctx.config().mode {
        Mode::SingleAtomAnalytic => {
            let mut out = Vec::new();
            for (np, plus, minus) in ctx.analytic_channels()? {
                for (name, ch) in [("p_plus", plus), ("p_minus", minus)] {
                    let peak = find_peak(&ch);
                    out.push(record(format!("n{np}_{name}"), peak.kappa, peak.probability));
                }
            }
            Ok(out)
        }
        Mode::ManyBody => {
            let chain = ctx.chain()?;
            let grid = ctx.config().kappa;
            let (lo, hi) = (grid.min.max(1e-3), grid.max);
            ExcitonLabel::all(chain.atoms)
                .into_iter()
                .map(|l| {
                    let (k, p) = collective_peak(l, &chain, chain.eta(), chain.lambda(), lo, hi)?;
                    Ok(record(l.column(), k, p))
                })
                .collect()
        }
        other => Err(ScanError::Config(ConfigError {
            message: format!("peak search needs an analytic or many-body config, got {}", mode_name(other)),
            line: None,
        })),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn job(text: &str) -> ScanContext {
        ScanContext::new(parse_config(text, None).unwrap()).unwrap()
    }

    const ANALYTIC: &str = "mode = \"single-atom-analytic\"\nelement = \"Rb\"\nn = 55\n\n[kappa]\nmin = -3.0\nmax = 3.0\ncount = 13\n";

    #[test]
    fn zeroed_table_leaves_initial_state() {
        let ctx = job("mode = \"single-atom-numeric\"\nelement = \"Rb\"\nn = 55\n[kappa]\nmin = 0.8\nmax = 0.8\ncount = 1\n[basis]\nn_window = 1\nl_max = 2\nzero_dipoles = true\n");
        let out = run_scan(&ctx).unwrap();
        assert_eq!(out.rows.len(), 1);
        let row = &out.rows[0].values;
        assert!((row[2] - 1.0).abs() < 1e-12, "{row:?}");
        assert!(row[3..7].iter().all(|v| v.abs() < 1e-20));
    }

    #[test]
    fn analytic_rows_follow_the_grid() {
        let ctx = job(ANALYTIC);
        let out = run_scan(&ctx).unwrap();
        assert_eq!(out.columns, ["kappa", "kinetic_energy_ev", "n54_p_plus", "n54_p_minus", "n55_p_plus", "n55_p_minus", "total"]);
        let kappas: Vec<f64> = out.rows.iter().map(|r| r.values[0]).collect();
        assert_eq!(kappas, ctx.job.kappas());
        for r in &out.rows {
            let sum: f64 = r.values[2..6].iter().sum();
            assert!((sum - r.values[6]).abs() < 1e-15);
            assert!(r.values[2..].iter().all(|p| (0.0..=1.0).contains(p)));
        }
        // κ = 0 is the adiabatic limit
        assert_eq!(out.rows[6].values[6], 0.0);
        assert_eq!(out.provenance.basis_size, None);
    }

    #[test]
    fn analytic_peaks_have_the_expected_signs() {
        let peaks = find_peaks(&job(ANALYTIC)).unwrap();
        let by = |name: &str| peaks.iter().find(|p| p.curve == name).unwrap().kappa;
        assert!(by("n55_p_minus") > 0.0 && by("n55_p_plus") < 0.0);
        assert!(by("n54_p_minus") < 0.0 && by("n54_p_plus") > 0.0);
    }

    #[test]
    fn many_body_emits_labelled_curves() {
        let text = ANALYTIC.replace("single-atom-analytic", "many-body").replace("min = -3.0", "min = 0.1")
            + "[chain]\natoms = 2\nspacing_ratio = 2.0\n";
        let out = run_scan(&job(&text)).unwrap();
        assert_eq!(out.columns[2..], ["m1_chi-1", "m1_chi+1", "m2_chi-1", "m2_chi+1", "total"]);
    }

    #[test]
    fn eta_geometry_sets_distance() {
        let ctx = job(&format!("{ANALYTIC}[geometry]\neta = 0.18\n"));
        assert!((ctx.eta() - 0.18).abs() < 1e-12);
    }

    #[test]
    fn hash_tracks_resolved_config() {
        let a = job(ANALYTIC).provenance();
        let b = job(&format!("{ANALYTIC}[geometry]\ndistance_um = 2.5\n")).provenance();
        let c = job(&format!("{ANALYTIC}[geometry]\ndistance_um = 3.0\n")).provenance();
        assert_eq!(a.config_sha256, b.config_sha256);
        assert_ne!(a.config_sha256, c.config_sha256);
        assert_eq!(a.config_sha256.len(), 64);
    }
}
