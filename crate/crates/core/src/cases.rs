//! Test cases: initial conditions, exact solutions and the manufactured source.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::fmt;
use std::path::Path;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::flux::Formulation;
use crate::residual::{DgOperator, SourceFn};
use crate::thermo::{GasModel, ThermoError};
use crate::thermo_parser::{parse_thermo_file, parse_thermo_text, ParseError, ThermoDatabase};
use crate::units::{NormalizationRefs, UnitSystem};

/// Real-gas database shipped with the crate (N2, O2, n-dodecane).
pub const BUILTIN_THERMO: &str = include_str!("../data/thermo.dat");
/// Two calorically perfect fictitious species in nondimensional units.
pub const BUILTIN_FICTITIOUS: &str = include_str!("../data/fictitious.kv");

#[derive(Debug, Error)]
pub enum CaseError {
    #[error("unknown case {0:?}")]
    UnknownCase(String),
    #[error("case {0} has no exact solution")]
    CaseHasNoExact(CaseKind),
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Thermo(#[from] ThermoError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CaseKind {
    Gaussian,
    Bubble600,
    Bubble600O2,
    Bubble1,
    Mms,
}

impl CaseKind {
    pub const ALL: [CaseKind; 5] = [
        CaseKind::Gaussian,
        CaseKind::Bubble600,
        CaseKind::Bubble600O2,
        CaseKind::Bubble1,
        CaseKind::Mms,
    ];

    pub fn name(self) -> &'static str {
        match self {
            CaseKind::Gaussian => "gaussian",
            CaseKind::Bubble600 => "bubble-600",
            CaseKind::Bubble600O2 => "bubble-600-o2",
            CaseKind::Bubble1 => "bubble-1",
            CaseKind::Mms => "mms",
        }
    }
}

impl fmt::Display for CaseKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CaseKind {
    type Err = CaseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim().to_ascii_lowercase();
        CaseKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or(CaseError::UnknownCase(s))
    }
}

/// Bubble temperature limits, K.
pub const BUBBLE_T_MIN: f64 = 363.0;
pub const BUBBLE_T_MAX: f64 = 900.0;
/// Bubble pressure, Pa.
pub const BUBBLE_PRESSURE: f64 = 6.0e6;
/// Manufactured-solution amplitude.
pub const MMS_AMPLITUDE: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CaseSpec {
    pub kind: CaseKind,
    pub x_left: f64,
    pub x_right: f64,
    pub species: Vec<String>,
    /// Species whose concentration is initialized to zero.
    pub zero_species: Vec<String>,
    pub units: UnitSystem,
    /// Advection velocity, m/s (or model units for nondimensional cases).
    pub v0: f64,
    pub default_n: usize,
    pub default_p: usize,
    pub default_cfl: f64,
    pub default_periods: f64,
    /// Sampling cadence in periods.
    pub sample_every: f64,
    /// Amplitude of the manufactured fields (MMS only).
    pub mms_amplitude: f64,
}

/// Primitive state: velocity, pressure, concentrations (model units).
#[derive(Debug, Clone, PartialEq)]
pub struct Primitive {
    pub v: f64,
    pub p: f64,
    pub c: Vec<f64>,
}

impl Primitive {
    pub fn to_state(&self, gas: &GasModel, form: Formulation) -> Result<Vec<f64>, ThermoError> {
        let rho = gas.density(&self.c);
        let mut y = Vec::with_capacity(2 + self.c.len());
        y.push(rho * self.v);
        y.push(self.p);
        y.extend_from_slice(&self.c);
        match form {
            Formulation::Pressure => Ok(y),
            Formulation::Energy => gas.pressure_to_energy_state(&y),
        }
    }
}

fn bubble_profile(x: f64) -> (f64, f64) {
    let th = (25.0 * x.abs() - 5.0).tanh();
    let y_dod = 0.5 * (1.0 - th);
    let t = 0.5 * (BUBBLE_T_MIN + BUBBLE_T_MAX) + 0.5 * (BUBBLE_T_MAX - BUBBLE_T_MIN) * th;
    (t, y_dod)
}

impl CaseSpec {
    pub fn new(kind: CaseKind) -> Self {
        Self::with_refs(kind, NormalizationRefs::default())
    }

    pub fn with_refs(kind: CaseKind, refs: NormalizationRefs) -> Self {
        let bubble = |v0: f64, n: usize, p: usize, cfl: f64, periods: f64, sample: f64, o2: bool| {
            let mut species = vec!["N2".to_string(), "NC12H26".to_string()];
            if o2 {
                species.push("O2".into());
            }
            CaseSpec {
                kind,
                x_left: -0.5,
                x_right: 0.5,
                zero_species: if o2 { vec!["O2".into()] } else { Vec::new() },
                species,
                units: UnitSystem::Reference(refs),
                v0,
                default_n: n,
                default_p: p,
                default_cfl: cfl,
                default_periods: periods,
                sample_every: sample,
                mms_amplitude: 0.0,
            }
        };
        match kind {
            CaseKind::Gaussian => CaseSpec {
                kind,
                x_left: -0.5,
                x_right: 0.5,
                species: vec!["SPEC1".into(), "SPEC2".into()],
                zero_species: Vec::new(),
                units: UnitSystem::Nondimensional,
                v0: 5.0,
                default_n: 50,
                default_p: 2,
                default_cfl: 0.1,
                default_periods: 1.0,
                sample_every: 0.1,
                mms_amplitude: 0.0,
            },
            CaseKind::Bubble600 => bubble(600.0, 25, 3, 0.6, 100.0, 1.0, false),
            CaseKind::Bubble600O2 => bubble(600.0, 25, 3, 0.6, 100.0, 1.0, true),
            CaseKind::Bubble1 => bubble(1.0, 50, 2, 0.8, 10.0, 0.1, false),
            CaseKind::Mms => CaseSpec {
                kind,
                x_left: 0.0,
                x_right: 1.0,
                species: vec!["SPEC1".into()],
                zero_species: Vec::new(),
                units: UnitSystem::Nondimensional,
                v0: 1.0,
                default_n: 8,
                default_p: 2,
                default_cfl: 0.1,
                default_periods: 1.0,
                sample_every: 0.1,
                mms_amplitude: MMS_AMPLITUDE,
            },
        }
    }

    pub fn length(&self) -> f64 {
        self.x_right - self.x_left
    }

    /// Advection velocity in model units.
    pub fn v0_model(&self) -> f64 {
        self.v0 / self.units.velocity_scale()
    }

    /// Advection period `τ = L / v0` in model time units.
    pub fn period(&self) -> f64 {
        self.length() / self.v0_model()
    }

    /// Nominal pressure in model units.
    pub fn p0_model(&self) -> f64 {
        match self.kind {
            CaseKind::Gaussian => 2.0,
            CaseKind::Mms => 1.0,
            _ => BUBBLE_PRESSURE / self.units.pressure_scale(),
        }
    }

    /// Whether the case is at uniform pressure and velocity.
    pub fn is_equilibrium(&self) -> bool {
        self.kind != CaseKind::Mms
    }

    /// Thermo database for the case: the file at `path` if given, else the
    /// built-in data.
    pub fn database(&self, path: Option<&Path>) -> Result<ThermoDatabase, CaseError> {
        let none = HashMap::new();
        Ok(match path {
            Some(p) => parse_thermo_file(p, &none)?,
            None => match self.kind {
                CaseKind::Gaussian | CaseKind::Mms => parse_thermo_text(BUILTIN_FICTITIOUS, &none)?,
                _ => parse_thermo_text(BUILTIN_THERMO, &none)?,
            },
        })
    }

    pub fn gas(&self, path: Option<&Path>) -> Result<GasModel, CaseError> {
        let db = self.database(path)?;
        Ok(GasModel::new(db.select(&self.species)?, self.units)?)
    }

    /// Initial primitive state at `x`.
    pub fn initial_primitive(&self, gas: &GasModel, x: f64) -> Primitive {
        match self.kind {
            CaseKind::Gaussian => {
                let y1 = 0.5 * ((2.0 * PI * x).sin() + 1.0);
                let rho = (-500.0 * x * x).exp() + 4.0;
                let w = gas.molar_masses();
                Primitive {
                    v: 5.0,
                    p: 2.0,
                    c: vec![rho * y1 / w[0], rho * (1.0 - y1) / w[1]],
                }
            }
            CaseKind::Mms => self.mms_primitive(gas, x, 0.0),
            _ => {
                let (t_k, y_dod) = bubble_profile(x);
                let t = t_k / self.units.temperature_scale();
                let p = self.p0_model();
                let w = gas.molar_masses();
                let mut y = vec![0.0; gas.n_species()];
                y[0] = 1.0 - y_dod;
                y[1] = y_dod;
                let inv_w: f64 = y.iter().zip(w).map(|(y, w)| y / w).sum();
                let rho = p / (gas.r0() * t * inv_w);
                let c = y.iter().zip(w).map(|(y, w)| rho * y / w).collect();
                Primitive { v: self.v0_model(), p, c }
            }
        }
    }

    pub fn initial_state(&self, gas: &GasModel, form: Formulation, x: f64) -> Result<Vec<f64>, ThermoError> {
        self.initial_primitive(gas, x).to_state(gas, form)
    }

    /// Exact solution at `(x, t)`: the advected initial condition, or the
    /// manufactured fields.
    pub fn exact_state(&self, gas: &GasModel, form: Formulation, x: f64, t: f64) -> Result<Vec<f64>, CaseError> {
        let prim = match self.kind {
            CaseKind::Mms => self.mms_primitive(gas, x, t),
            _ => {
                let xs = self.x_left + (x - self.v0_model() * t - self.x_left).rem_euclid(self.length());
                self.initial_primitive(gas, xs)
            }
        };
        Ok(prim.to_state(gas, form)?)
    }

    /// Interpolate the initial condition at the solution nodes.
    pub fn initialize(&self, op: &DgOperator) -> Result<Vec<f64>, ThermoError> {
        let m = op.n_components();
        let nb = op.disc.n_b();
        let mut u = vec![0.0; op.n_dofs()];
        for e in 0..op.disc.n_elements() {
            for (k, &x) in op.disc.node_coordinates(e).iter().enumerate() {
                let y = self.initial_state(&op.gas, op.scheme.formulation, x)?;
                u[(e * nb + k) * m..(e * nb + k + 1) * m].copy_from_slice(&y);
            }
        }
        Ok(u)
    }

    fn mms_fields(&self, x: f64, t: f64) -> ([f64; 3], [f64; 3]) {
        // (ρ, v, P) and their x-derivatives; time derivatives are minus these
        let a = self.mms_amplitude;
        let ph = 2.0 * PI * (x - t);
        let (s, c) = ph.sin_cos();
        let k = 2.0 * PI;
        ([1.0 + a * s, 1.0 + a * s, 1.0 + a * c], [k * a * c, k * a * c, -k * a * s])
    }

    fn mms_primitive(&self, gas: &GasModel, x: f64, t: f64) -> Primitive {
        let ([rho, v, p], _) = self.mms_fields(x, t);
        Primitive {
            v,
            p,
            c: vec![rho / gas.molar_masses()[0]],
        }
    }

    /// Source making the manufactured fields an exact solution of the
    /// pressure-form equations. `None` for the other cases.
    pub fn source(&self, gas: &GasModel) -> Option<SourceFn> {
        if self.kind != CaseKind::Mms {
            return None;
        }
        let gas = gas.clone();
        let case = self.clone();
        Some(Arc::new(move |x: f64, t: f64, out: &mut [f64]| {
            mms_source_into(&case, &gas, x, t, out);
        }))
    }
}

/// `S = ∂y/∂t + ∂F/∂x + B ∂y/∂x` on the manufactured fields.
pub fn mms_source_into(case: &CaseSpec, gas: &GasModel, x: f64, t: f64, out: &mut [f64]) {
    let ([rho, v, p], [rx, vx, px]) = case.mms_fields(x, t);
    let w = gas.molar_masses()[0];
    let y = [rho * v, p, rho / w];
    let bulk = match gas.point_from_pressure_state(&y) {
        Ok(ps) => ps.bulk_excess(),
        Err(_) => f64::NAN,
    };
    // fields travel at unit speed: ∂/∂t = −∂/∂x
    let mx = rx * v + rho * vx;
    out[0] = -mx + (rx * v * v + 2.0 * rho * v * vx + px);
    out[1] = -px + (px * v + p * vx) + bulk * vx;
    out[2] = (-rx + rx * v + rho * vx) / w;
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flux::physical_flux;

    #[test]
    fn names_round_trip() {
        for k in CaseKind::ALL {
            assert_eq!(k.name().parse::<CaseKind>().unwrap(), k);
        }
        assert!("vortex".parse::<CaseKind>().is_err());
    }

    #[test]
    fn gaussian_examples() {
        let case = CaseSpec::new(CaseKind::Gaussian);
        let gas = case.gas(None).unwrap();
        let p = case.initial_primitive(&gas, 0.0);
        assert_eq!((p.v, p.p), (5.0, 2.0));
        assert!((gas.density(&p.c) - 5.0).abs() < 1e-14);
        assert!((p.c[0] - 2.5).abs() < 1e-14);
        let (a, b) = (case.initial_primitive(&gas, -0.5), case.initial_primitive(&gas, 0.5));
        for (x, y) in a.c.iter().zip(&b.c) {
            assert!((x - y).abs() < 1e-12 * x.abs());
        }
        assert!((case.period() - 0.2).abs() < 1e-15);
    }

    #[test]
    fn bubble_examples() {
        let case = CaseSpec::new(CaseKind::Bubble600);
        let gas = case.gas(None).unwrap();
        let (t, y) = bubble_profile(0.0);
        assert!((y - 0.5 * (1.0 - (-5.0f64).tanh())).abs() < 1e-15);
        assert!((t - 363.024_378_655).abs() < 1e-6, "{t}");
        let (t_far, y_far) = bubble_profile(0.5);
        assert!((t_far - 900.0).abs() < 1e-3 && y_far < 1e-6);
        for x in [-0.5, -0.1, 0.0, 0.2, 0.5] {
            let p = case.initial_primitive(&gas, x);
            assert!((p.p * case.units.pressure_scale() - 6.0e6).abs() < 1e-6);
            let ys: Vec<f64> = p.c.iter().zip(gas.molar_masses()).map(|(c, w)| c * w / gas.density(&p.c)).collect();
            assert!((ys.iter().sum::<f64>() - 1.0).abs() < 1e-14);
            assert!(ys.iter().all(|y| (0.0..=1.0).contains(y)));
            // temperature consistent with the profile
            let t_model = gas.temperature_from_pc(p.p, &p.c).unwrap();
            assert!((t_model * 298.15 - bubble_profile(x).0).abs() < 1e-9);
        }
        // 600 m/s over 1 m
        let tau_s = case.period() * case.units.time_scale();
        assert!((tau_s - 1.0 / 600.0).abs() < 1e-15);
    }

    #[test]
    fn o2_variant_has_zero_oxygen() {
        let case = CaseSpec::new(CaseKind::Bubble600O2);
        let gas = case.gas(None).unwrap();
        let p = case.initial_primitive(&gas, 0.1);
        assert_eq!(p.c.len(), 3);
        assert_eq!(p.c[2], 0.0);
    }

    #[test]
    fn exact_solution_shifts() {
        let case = CaseSpec::new(CaseKind::Gaussian);
        let gas = case.gas(None).unwrap();
        let f = Formulation::Pressure;
        let a = case.exact_state(&gas, f, 0.13, 0.0).unwrap();
        let b = case.exact_state(&gas, f, 0.13, case.period()).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-12 * x.abs().max(1.0));
        }
        // half a period moves the density peak to the seam
        let seam = case.exact_state(&gas, f, 0.5, 0.5 * case.period()).unwrap();
        assert!((gas.density(&seam[2..]) - 5.0).abs() < 1e-12);
    }

    #[test]
    fn mms_source_matches_finite_differences() {
        let case = CaseSpec::new(CaseKind::Mms);
        let gas = case.gas(None).unwrap();
        let f = Formulation::Pressure;
        let h = 1e-5;
        for &(x, t) in &[(0.1, 0.0), (0.37, 0.2), (0.8, 0.55)] {
            let mut s = [0.0; 3];
            mms_source_into(&case, &gas, x, t, &mut s);
            let y = |x, t| case.exact_state(&gas, f, x, t).unwrap();
            let fl = |x, t| physical_flux(&gas, f, &y(x, t)).unwrap();
            let (yp, ym) = (y(x + h, t), y(x - h, t));
            let (fp, fm) = (fl(x + h, t), fl(x - h, t));
            let (ytp, ytm) = (y(x, t + h), y(x, t - h));
            let y0 = y(x, t);
            let ps = gas.point_from_pressure_state(&y0).unwrap();
            let dy: Vec<f64> = (0..3).map(|c| (yp[c] - ym[c]) / (2.0 * h)).collect();
            let wm = gas.molar_masses()[0];
            let b = ps.bulk_excess() / ps.rho * (dy[0] - ps.v * wm * dy[2]);
            for c in 0..3 {
                let mut fd = (ytp[c] - ytm[c]) / (2.0 * h) + (fp[c] - fm[c]) / (2.0 * h);
                if c == 1 {
                    fd += b;
                }
                assert!((fd - s[c]).abs() < 1e-8 * (1.0 + s[c].abs()), "c={c}: {fd} vs {}", s[c]);
            }
        }
    }

    #[test]
    fn constant_fields_give_zero_source() {
        let mut case = CaseSpec::new(CaseKind::Mms);
        case.mms_amplitude = 0.0;
        let gas = case.gas(None).unwrap();
        let mut s = [1.0; 3];
        mms_source_into(&case, &gas, 0.3, 0.7, &mut s);
        assert_eq!(s, [0.0; 3]);
    }
}
