//! Configuration-driven runs and parameter sweeps.
//!
//! Times in a [`RunConfig`] (`dt`, `t_end`) are in seconds for the real-gas
//! cases and in model units for the nondimensional ones; the solver works in
//! model units throughout and converts on the way in and out.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};
use thiserror::Error;

use crate::basis::{build_discretization, BasisError};
use crate::cases::{CaseError, CaseKind, CaseSpec};
use crate::diagnostics::{
    convergence_rates, energy_conservation_error_percent, global_energy, max_abs_mass_fraction,
    normalized_l2_error, pressure_error_percent, DiagnosticsRecord, L2Error,
};
use crate::residual::{CorrectionStats, DgOperator};
use crate::scheme::{Scheme, SchemeKind};
use crate::time::{integrate, StepControl, TimeError, TimeScheme};
use crate::units::NormalizationRefs;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum RunError {
    #[error("config error at `{field}`: {reason}")]
    Config { field: String, reason: String },
    #[error(transparent)]
    Case(#[from] CaseError),
    #[error(transparent)]
    Basis(#[from] BasisError),
    #[error(transparent)]
    Time(#[from] TimeError),
    #[error("failed to initialize: {0}")]
    Init(String),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Toml(#[from] toml::de::Error),
}

fn config_error(field: &str, reason: impl Into<String>) -> RunError {
    RunError::Config {
        field: field.into(),
        reason: reason.into(),
    }
}

/// Optional overrides of the correction tolerances.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ToleranceOverrides {
    pub alpha_tol: Option<f64>,
    pub beta_tol: Option<f64>,
    pub uniform_tol: Option<f64>,
    pub zero_species_masking: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub case: String,
    pub scheme: SchemeKind,
    pub p: Option<usize>,
    #[serde(rename = "N")]
    pub n: Option<usize>,
    pub cfl: Option<f64>,
    pub dt: Option<f64>,
    pub t_end: Option<f64>,
    pub periods: Option<f64>,
    pub time_scheme: TimeScheme,
    /// Sampling cadence in periods.
    pub sample_every: Option<f64>,
    pub max_steps: Option<u64>,
    pub out: Option<PathBuf>,
    pub thermo: Option<PathBuf>,
    pub refs: NormalizationRefs,
    pub tolerances: ToleranceOverrides,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            case: "gaussian".into(),
            scheme: SchemeKind::P3,
            p: None,
            n: None,
            cfl: None,
            dt: None,
            t_end: None,
            periods: None,
            time_scheme: TimeScheme::Ssprk3,
            sample_every: None,
            max_steps: None,
            out: None,
            thermo: None,
            refs: NormalizationRefs::default(),
            tolerances: ToleranceOverrides::default(),
        }
    }
}

impl RunConfig {
    pub fn new(case: CaseKind, scheme: SchemeKind) -> Self {
        Self {
            case: case.name().into(),
            scheme,
            ..Self::default()
        }
    }

    pub fn from_toml(text: &str) -> Result<Self, RunError> {
        Ok(toml::from_str(text)?)
    }

    pub fn from_file(path: &Path) -> Result<Self, RunError> {
        let text = fs::read_to_string(path).map_err(|source| RunError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml(&text)
    }

    pub fn case_spec(&self) -> Result<CaseSpec, RunError> {
        if !self.refs.is_valid() {
            return Err(config_error("refs", "reference values must be positive"));
        }
        let kind: CaseKind = self.case.parse().map_err(|e: CaseError| config_error("case", e.to_string()))?;
        Ok(CaseSpec::with_refs(kind, self.refs))
    }

    pub fn scheme_config(&self) -> Result<Scheme, RunError> {
        let mut s = Scheme::new(self.scheme);
        let t = &self.tolerances;
        if let Some(v) = t.alpha_tol {
            s.correction.alpha_tol = v;
        }
        if let Some(v) = t.beta_tol {
            s.correction.beta_tol = v;
        }
        if let Some(v) = t.uniform_tol {
            s.correction.uniform_tol = v;
        }
        if let Some(v) = t.zero_species_masking {
            s.correction.zero_species_masking = v;
        }
        if !s.correction.is_valid() {
            return Err(config_error("tolerances", "tolerances must be positive"));
        }
        Ok(s)
    }
}

/// Final state of a run, flattened into the JSON summary.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub schema_version: u32,
    pub case: String,
    pub scheme: SchemeKind,
    pub p: usize,
    pub n_elements: usize,
    pub h: f64,
    /// Nominal time step (seconds), the fixed one or the first CFL step.
    pub dt: f64,
    pub t_end: f64,
    pub t_final: f64,
    pub steps: u64,
    pub diverged: bool,
    pub divergence_time: Option<f64>,
    pub divergence_reason: Option<String>,
    pub wall_time_s: f64,
    pub max_pressure_error_pct: f64,
    pub final_pressure_error_pct: f64,
    pub final_conservation_error_pct: f64,
    /// Largest `|Y|` of the initially absent species over every step.
    pub max_zero_species_fraction: Option<f64>,
    pub l2: Option<L2Error>,
    pub correction: CorrectionStats,
    #[serde(skip)]
    pub records: Vec<DiagnosticsRecord>,
}

impl RunReport {
    pub fn status(&self) -> &'static str {
        if self.diverged {
            "diverged"
        } else {
            "completed"
        }
    }

    /// Flat JSON object for the summary file.
    pub fn to_json(&self) -> Value {
        let mut m = Map::new();
        m.insert("schema_version".into(), json!(self.schema_version));
        m.insert("case".into(), json!(self.case));
        m.insert("scheme".into(), json!(self.scheme.to_string()));
        m.insert("status".into(), json!(self.status()));
        m.insert("p".into(), json!(self.p));
        m.insert("N".into(), json!(self.n_elements));
        m.insert("h".into(), json!(self.h));
        m.insert("dt".into(), json!(self.dt));
        m.insert("t_end".into(), json!(self.t_end));
        m.insert("t_final".into(), json!(self.t_final));
        m.insert("steps".into(), json!(self.steps));
        m.insert("divergence_time".into(), json!(self.divergence_time));
        m.insert("divergence_reason".into(), json!(self.divergence_reason));
        m.insert("wall_time_s".into(), json!(self.wall_time_s));
        m.insert("max_pressure_error_pct".into(), json!(self.max_pressure_error_pct));
        m.insert("final_pressure_error_pct".into(), json!(self.final_pressure_error_pct));
        m.insert("final_conservation_error_pct".into(), json!(self.final_conservation_error_pct));
        m.insert("max_zero_species_fraction".into(), json!(self.max_zero_species_fraction));
        if let Some(l2) = &self.l2 {
            m.insert("l2_combined".into(), json!(l2.combined));
            for (i, v) in l2.per_component.iter().enumerate() {
                m.insert(format!("l2_component_{i}"), json!(v));
            }
        }
        let c = &self.correction;
        m.insert("alpha_active".into(), json!(c.alpha_active));
        m.insert("alpha_zeroed".into(), json!(c.alpha_zeroed));
        m.insert("negative_denominators".into(), json!(c.negative_denominators));
        m.insert("uniform_elements".into(), json!(c.uniform_elements));
        m.insert("face_corrections".into(), json!(c.face_corrections));
        m.insert("max_constraint_residual".into(), json!(c.max_constraint_residual));
        Value::Object(m)
    }
}

/// A fully set-up simulation: operator, initial state and step control.
pub struct Simulation {
    pub config: RunConfig,
    pub case: CaseSpec,
    pub op: DgOperator,
    pub u: Vec<f64>,
    pub control: StepControl,
    /// Seconds per model time unit.
    pub time_scale: f64,
}

impl Simulation {
    pub fn new(config: &RunConfig) -> Result<Self, RunError> {
        let case = config.case_spec()?;
        let scheme = config.scheme_config()?;
        let p = config.p.unwrap_or(case.default_p);
        let n = config.n.unwrap_or(case.default_n);
        let gas = case.gas(config.thermo.as_deref())?;
        let disc = build_discretization(n, p, scheme.mode, case.x_left, case.x_right)?;
        let mut op = DgOperator::new(disc, gas, scheme);
        op.set_source(case.source(&op.gas));
        let u = case.initialize(&op).map_err(|e| RunError::Init(e.to_string()))?;
        let time_scale = case.units.time_scale();
        let t_end = match (config.t_end, config.periods) {
            (Some(_), Some(_)) => return Err(config_error("t_end", "set either t_end or periods, not both")),
            (Some(t), None) => t / time_scale,
            (None, Some(k)) => k * case.period(),
            (None, None) => case.default_periods * case.period(),
        };
        let mut control = match (config.cfl, config.dt) {
            (Some(_), Some(_)) => return Err(config_error("dt", "set either cfl or dt, not both")),
            (None, Some(dt)) => StepControl::with_dt(dt / time_scale, t_end),
            (Some(cfl), None) => StepControl::with_cfl(cfl, t_end),
            (None, None) => StepControl::with_cfl(case.default_cfl, t_end),
        };
        if let Some(ms) = config.max_steps {
            control.max_steps = ms;
        }
        control.validate().map_err(|e| config_error("cfl", e.to_string()))?;
        Ok(Self {
            config: config.clone(),
            case,
            op,
            u,
            control,
            time_scale,
        })
    }

    /// Run to the end time (or divergence), sampling diagnostics at the
    /// configured cadence.
    pub fn run(&mut self) -> Result<RunReport, RunError> {
        let start = Instant::now();
        let p0 = self.case.p0_model();
        let pressure_tracked = self.case.is_equilibrium();
        let e0 = global_energy(&self.op, &self.u).map_err(|e| RunError::Init(e.to_string()))?;
        let every = self.config.sample_every.unwrap_or(self.case.sample_every) * self.case.period();
        let zero_idx: Vec<usize> = self
            .case
            .zero_species
            .iter()
            .filter_map(|n| self.op.gas.species_index(n))
            .collect();
        let ts = self.time_scale;
        let first_dt = match self.control.dt_fixed {
            Some(dt) => dt,
            None => crate::time::stable_timestep(&self.op, &self.u, self.control.cfl.unwrap_or(1.0))
                .map_err(|e| RunError::Init(e.to_string()))?,
        };

        let mut records = Vec::new();
        let sample = |op: &DgOperator, t: f64, step: u64, u: &[f64]| -> Option<DiagnosticsRecord> {
            let pe = if pressure_tracked { pressure_error_percent(op, u, p0).ok()? } else { 0.0 };
            let e = global_energy(op, u).ok()?;
            Some(DiagnosticsRecord {
                t: t * ts,
                step,
                pressure_error_pct: pe,
                global_energy: e,
                conservation_error_pct: energy_conservation_error_percent(e, e0),
            })
        };
        records.extend(sample(&self.op, 0.0, 0, &self.u));
        let mut next = every;
        let mut zero_max = 0.0f64;
        let want_zero = !zero_idx.is_empty();
        let outcome = integrate(
            &mut self.op,
            self.config.time_scheme,
            &mut self.u,
            0.0,
            &self.control,
            |op, t, step, u| {
                if want_zero {
                    for &i in &zero_idx {
                        zero_max = zero_max.max(max_abs_mass_fraction(op, u, i));
                    }
                }
                if t >= next * (1.0 - 1e-12) {
                    records.extend(sample(op, t, step, u));
                    while next <= t * (1.0 + 1e-12) {
                        next += every;
                    }
                }
            },
        )?;

        let mut diverged = outcome.divergence.clone();
        let final_record = sample(&self.op, outcome.t, outcome.steps, &self.u);
        match final_record {
            Some(r) => {
                if records.last().map(|l| l.step) != Some(r.step) {
                    records.push(r);
                }
            }
            None if diverged.is_none() => {
                diverged = Some((outcome.t, "final state is not admissible".into()));
            }
            None => {}
        }
        let last = records.last().copied();
        let max_pe = records.iter().map(|r| r.pressure_error_pct).fold(0.0, f64::max);
        let l2 = if diverged.is_none() {
            let (gas, form) = (&self.op.gas, self.op.scheme.formulation);
            let t = outcome.t;
            let case = &self.case;
            Some(normalized_l2_error(&self.op, &self.u, &self.config.refs, |x| {
                case.exact_state(gas, form, x, t).unwrap_or_else(|_| vec![f64::NAN; 2 + gas.n_species()])
            }))
        } else {
            None
        };
        Ok(RunReport {
            schema_version: SCHEMA_VERSION,
            case: self.case.kind.name().into(),
            scheme: self.config.scheme,
            p: self.op.disc.basis.p,
            n_elements: self.op.disc.n_elements(),
            h: self.op.disc.mesh.h(),
            dt: first_dt * ts,
            t_end: self.control.t_end * ts,
            t_final: outcome.t * ts,
            steps: outcome.steps,
            diverged: diverged.is_some(),
            divergence_time: diverged.as_ref().map(|d| d.0 * ts),
            divergence_reason: diverged.map(|d| d.1),
            wall_time_s: start.elapsed().as_secs_f64(),
            max_pressure_error_pct: max_pe,
            final_pressure_error_pct: last.map_or(f64::NAN, |r| r.pressure_error_pct),
            final_conservation_error_pct: last.map_or(f64::NAN, |r| r.conservation_error_pct),
            max_zero_species_fraction: want_zero.then_some(zero_max),
            l2,
            correction: self.op.run_stats.clone(),
            records,
        })
    }
}

/// Set up and run one configuration, writing outputs if `config.out` is set.
pub fn run_case(config: &RunConfig) -> Result<RunReport, RunError> {
    let mut sim = Simulation::new(config)?;
    let report = sim.run()?;
    if let Some(dir) = &config.out {
        write_outputs(dir, &report)?;
    }
    Ok(report)
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> RunError + '_ {
    move |source| RunError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Write `timeseries.csv` and `summary.json` into `dir`.
pub fn write_outputs(dir: &Path, report: &RunReport) -> Result<(), RunError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let csv_path = dir.join("timeseries.csv");
    let mut w = csv::Writer::from_path(&csv_path)?;
    for r in &report.records {
        w.serialize(r)?;
    }
    w.flush().map_err(io_err(&csv_path))?;
    let json_path = dir.join("summary.json");
    let text = serde_json::to_string_pretty(&report.to_json()).expect("summary is valid JSON");
    fs::write(&json_path, text + "\n").map_err(io_err(&json_path))?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepAxis {
    /// Values are element counts.
    Grid,
    /// Values are time steps.
    Timestep,
    /// Values are scheme names.
    Scheme,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepPoint {
    pub value: String,
    /// Grid spacing or time step; `None` for the scheme axis.
    pub size: Option<f64>,
    /// L2 error (grid) or conservation error in percent (time step).
    pub error: Option<f64>,
    pub report: RunReport,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepReport {
    pub schema_version: u32,
    pub axis: SweepAxis,
    pub points: Vec<SweepPoint>,
    /// Rates between successive completed points.
    pub rates: Vec<f64>,
}

impl SweepReport {
    pub fn mean_rate(&self) -> Option<f64> {
        (!self.rates.is_empty()).then(|| self.rates.iter().sum::<f64>() / self.rates.len() as f64)
    }
}

/// Run `base` once per value along `axis`. Diverged points are kept in the
/// report; rates use completed points only.
pub fn run_sweep(base: &RunConfig, axis: SweepAxis, values: &[String]) -> Result<SweepReport, RunError> {
    if values.is_empty() {
        return Err(config_error("values", "sweep needs at least one value"));
    }
    let mut points = Vec::with_capacity(values.len());
    for v in values {
        let mut cfg = base.clone();
        cfg.out = base.out.as_ref().map(|d| d.join(format!("{axis:?}-{v}").to_lowercase()));
        match axis {
            SweepAxis::Grid => cfg.n = Some(v.parse().map_err(|_| config_error("values", format!("bad element count {v:?}")))?),
            SweepAxis::Timestep => {
                cfg.dt = Some(v.parse().map_err(|_| config_error("values", format!("bad time step {v:?}")))?);
                cfg.cfl = None;
            }
            SweepAxis::Scheme => cfg.scheme = v.parse().map_err(|e: String| config_error("values", e))?,
        }
        let report = run_case(&cfg)?;
        let (size, error) = match axis {
            SweepAxis::Grid => (Some(report.h), report.l2.as_ref().map(|l| l.combined)),
            SweepAxis::Timestep => (Some(report.dt), (!report.diverged).then_some(report.final_conservation_error_pct)),
            SweepAxis::Scheme => (None, None),
        };
        points.push(SweepPoint {
            value: v.clone(),
            size,
            error,
            report,
        });
    }
    let (errs, sizes): (Vec<f64>, Vec<f64>) = points
        .iter()
        .filter(|p| !p.report.diverged)
        .filter_map(|p| Some((p.error?, p.size?)))
        .unzip();
    let rates = convergence_rates(&errs, &sizes).unwrap_or_default();
    let sweep = SweepReport {
        schema_version: SCHEMA_VERSION,
        axis,
        points,
        rates,
    };
    if let Some(dir) = &base.out {
        write_sweep(dir, &sweep)?;
    }
    Ok(sweep)
}

#[derive(Serialize)]
struct SweepRow<'a> {
    schema_version: u32,
    value: &'a str,
    scheme: String,
    p: usize,
    n: usize,
    size: Option<f64>,
    error: Option<f64>,
    status: &'a str,
    max_pressure_error_pct: f64,
    final_conservation_error_pct: f64,
    rate: Option<f64>,
}

/// Write `sweep.csv` and `sweep.json` into `dir`.
pub fn write_sweep(dir: &Path, sweep: &SweepReport) -> Result<(), RunError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let csv_path = dir.join("sweep.csv");
    let mut w = csv::Writer::from_path(&csv_path)?;
    let mut rate_iter = sweep.rates.iter();
    let mut seen_completed = 0;
    for p in &sweep.points {
        let completed = !p.report.diverged && p.error.is_some() && p.size.is_some();
        let rate = if completed {
            seen_completed += 1;
            if seen_completed > 1 {
                rate_iter.next().copied()
            } else {
                None
            }
        } else {
            None
        };
        w.serialize(SweepRow {
            schema_version: sweep.schema_version,
            value: &p.value,
            scheme: p.report.scheme.to_string(),
            p: p.report.p,
            n: p.report.n_elements,
            size: p.size,
            error: p.error,
            status: p.report.status(),
            max_pressure_error_pct: p.report.max_pressure_error_pct,
            final_conservation_error_pct: p.report.final_conservation_error_pct,
            rate,
        })?;
    }
    w.flush().map_err(io_err(&csv_path))?;
    let json_path = dir.join("sweep.json");
    let mut m = Map::new();
    m.insert("schema_version".into(), json!(sweep.schema_version));
    m.insert("axis".into(), json!(sweep.axis));
    m.insert("points".into(), json!(sweep.points.len()));
    m.insert("completed".into(), json!(sweep.points.iter().filter(|p| !p.report.diverged).count()));
    m.insert("rates".into(), json!(sweep.rates));
    m.insert("mean_rate".into(), json!(sweep.mean_rate()));
    let text = serde_json::to_string_pretty(&Value::Object(m)).expect("sweep summary is valid JSON");
    fs::write(&json_path, text + "\n").map_err(io_err(&json_path))?;
    Ok(())
}
