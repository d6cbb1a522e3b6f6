//! Thermally perfect gas mixtures described by NASA-7 polynomial fits.
//!
//! Species data ([`SpeciesThermo`]) are stored in their tabulated form (SI molar
//! mass, temperatures in kelvin, coefficients of `cp/R`). A [`GasModel`] binds a
//! list of species to a [`UnitSystem`] and evaluates every mixture quantity the
//! solver needs in model units: equation of state, its inversions, total energy
//! and the energy derivative `w = ∂(ρe_t)/∂y` with respect to the
//! pressure-based state `y = (ρv, P, C_1, ..., C_ns)`.

use std::sync::atomic::{AtomicBool, Ordering};

use thiserror::Error;

use crate::units::{UnitSystem, R_UNIVERSAL};

/// Upper bound on the number of species in a mixture; lets point evaluations
/// live on the stack.
pub const MAX_SPECIES: usize = 8;

/// Fraction of the tabulated temperature range that may be extrapolated.
pub const DEFAULT_EXTRAPOLATION_MARGIN: f64 = 0.1;

const NEWTON_REL_TOL: f64 = 1e-10;
const NEWTON_MAX_ITER: usize = 50;

static EXTRAPOLATION_WARNED: AtomicBool = AtomicBool::new(false);

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ThermoError {
    #[error("temperature {t} K is outside the range [{low}, {high}] K of species {species}")]
    TemperatureOutOfRange {
        species: String,
        t: f64,
        low: f64,
        high: f64,
    },
    #[error("vacuum state (density {rho})")]
    VacuumState { rho: f64 },
    #[error("non-positive pressure {p}")]
    NonPositivePressure { p: f64 },
    #[error("temperature inversion did not converge after {iterations} iterations")]
    NoConvergence { iterations: usize },
    #[error("invalid thermo data for {species}: {reason}")]
    InvalidThermo { species: String, reason: String },
    #[error("mixture has {0} species, at most {MAX_SPECIES} are supported")]
    TooManySpecies(usize),
    #[error("state has {got} entries, expected {expected}")]
    StateLength { got: usize, expected: usize },
}

pub type Result<T> = std::result::Result<T, ThermoError>;

/// One temperature interval of a NASA-7 fit.
///
/// `coeffs = [a0, a1, a2, a3, a4, b1, b2]` with
/// `cp/R = a0 + a1 T + a2 T² + a3 T³ + a4 T⁴` and `H/R = ∫cp/R dT + b1`.
#[derive(Debug, Clone, PartialEq)]
pub struct NasaInterval {
    pub t_low: f64,
    pub t_high: f64,
    pub coeffs: [f64; 7],
}

impl NasaInterval {
    #[inline]
    pub fn cp_over_r(&self, t: f64) -> f64 {
        let a = &self.coeffs;
        a[0] + t * (a[1] + t * (a[2] + t * (a[3] + t * a[4])))
    }

    /// H/R in kelvin.
    #[inline]
    pub fn h_over_r(&self, t: f64) -> f64 {
        let a = &self.coeffs;
        t * (a[0] + t * (a[1] / 2.0 + t * (a[2] / 3.0 + t * (a[3] / 4.0 + t * a[4] / 5.0)))) + a[5]
    }

    pub fn s_over_r(&self, t: f64) -> f64 {
        let a = &self.coeffs;
        a[0] * t.ln() + t * (a[1] + t * (a[2] / 2.0 + t * (a[3] / 3.0 + t * a[4] / 4.0))) + a[6]
    }
}

/// Mass-specific properties of a single species, SI units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpeciesProperties {
    /// J/(kg·K)
    pub cp: f64,
    /// J/kg
    pub h: f64,
    /// J/kg
    pub u: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpeciesThermo {
    pub name: String,
    /// Molar mass as tabulated (kg/mol for SI data).
    pub molar_mass: f64,
    /// Ordered, contiguous temperature intervals.
    pub intervals: Vec<NasaInterval>,
}

impl SpeciesThermo {
    pub fn new(name: impl Into<String>, molar_mass: f64, intervals: Vec<NasaInterval>) -> Result<Self> {
        let s = Self {
            name: name.into(),
            molar_mass,
            intervals,
        };
        s.validate()?;
        Ok(s)
    }

    fn invalid(&self, reason: impl Into<String>) -> ThermoError {
        ThermoError::InvalidThermo {
            species: self.name.clone(),
            reason: reason.into(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.molar_mass > 0.0 && self.molar_mass.is_finite()) {
            return Err(self.invalid(format!("molar mass {} must be positive", self.molar_mass)));
        }
        if self.intervals.is_empty() {
            return Err(self.invalid("no temperature intervals"));
        }
        for (k, iv) in self.intervals.iter().enumerate() {
            if !(iv.t_low > 0.0 && iv.t_high > iv.t_low && iv.t_high.is_finite()) {
                return Err(self.invalid(format!("interval {k} has bad bounds [{}, {}]", iv.t_low, iv.t_high)));
            }
            if iv.coeffs.iter().any(|c| !c.is_finite()) {
                return Err(self.invalid(format!("interval {k} has non-finite coefficients")));
            }
            if let Some(next) = self.intervals.get(k + 1) {
                if next.t_low != iv.t_high {
                    return Err(self.invalid(format!(
                        "intervals not contiguous: {} followed by {}",
                        iv.t_high, next.t_low
                    )));
                }
            }
            // cv > 0 over the interval, checked on a sample grid
            const SAMPLES: usize = 64;
            for j in 0..=SAMPLES {
                let t = iv.t_low + (iv.t_high - iv.t_low) * j as f64 / SAMPLES as f64;
                if iv.cp_over_r(t) <= 1.0 {
                    return Err(self.invalid(format!("cp/R = {} <= 1 at T = {t}", iv.cp_over_r(t))));
                }
            }
        }
        Ok(())
    }

    pub fn t_min(&self) -> f64 {
        self.intervals[0].t_low
    }

    pub fn t_max(&self) -> f64 {
        self.intervals[self.intervals.len() - 1].t_high
    }

    /// Interval used at temperature `t` (K). Temperatures within `margin` of
    /// the tabulated range extrapolate the nearest interval.
    pub fn interval_at(&self, t: f64, margin: f64) -> Result<&NasaInterval> {
        let (lo, hi) = (self.t_min(), self.t_max());
        if t >= lo && t <= hi {
            // at most a handful of intervals, linear scan
            for iv in &self.intervals {
                if t <= iv.t_high {
                    return Ok(iv);
                }
            }
            return Ok(&self.intervals[self.intervals.len() - 1]);
        }
        if t >= lo * (1.0 - margin) && t < lo {
            warn_extrapolation(&self.name, t);
            return Ok(&self.intervals[0]);
        }
        if t <= hi * (1.0 + margin) && t > hi {
            warn_extrapolation(&self.name, t);
            return Ok(&self.intervals[self.intervals.len() - 1]);
        }
        Err(ThermoError::TemperatureOutOfRange {
            species: self.name.clone(),
            t,
            low: lo,
            high: hi,
        })
    }

    /// Mass-specific `cp`, `h` and `u = h − R_i T` at `t` kelvin, SI.
    pub fn properties(&self, t: f64) -> Result<SpeciesProperties> {
        self.properties_with_margin(t, DEFAULT_EXTRAPOLATION_MARGIN)
    }

    pub fn properties_with_margin(&self, t: f64, margin: f64) -> Result<SpeciesProperties> {
        let iv = self.interval_at(t, margin)?;
        let r = R_UNIVERSAL / self.molar_mass;
        let h = r * iv.h_over_r(t);
        Ok(SpeciesProperties {
            cp: r * iv.cp_over_r(t),
            h,
            u: h - r * t,
        })
    }
}

fn warn_extrapolation(species: &str, t: f64) {
    if !EXTRAPOLATION_WARNED.swap(true, Ordering::Relaxed) {
        log::warn!("extrapolating thermo data of {species} to T = {t} K (further warnings suppressed)");
    }
}

/// Mixture properties at a given temperature and composition, model units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MixtureProperties {
    pub rho: f64,
    /// Specific gas constant R = R0 ΣC / ρ.
    pub r_specific: f64,
    /// Mass-specific heat capacities.
    pub cv: f64,
    pub cp: f64,
    pub gamma: f64,
    pub pressure: f64,
    pub sound_speed: f64,
}

/// Everything the discretization needs at one point, computed in one pass.
#[derive(Debug, Clone, Copy)]
pub struct PointState {
    pub rho: f64,
    pub v: f64,
    pub p: f64,
    pub t: f64,
    pub sum_c: f64,
    pub rho_cv: f64,
    pub rho_u: f64,
    pub gamma: f64,
    pub sound_speed: f64,
    /// Molar internal energies `W_i u_i`.
    pub u_molar: [f64; MAX_SPECIES],
    pub n_species: usize,
}

impl PointState {
    #[inline]
    pub fn rho_et(&self) -> f64 {
        self.rho_u + 0.5 * self.rho * self.v * self.v
    }

    /// `ρc² − P`, the coefficient of the nonconservative pressure term.
    #[inline]
    pub fn bulk_excess(&self) -> f64 {
        self.rho * self.sound_speed * self.sound_speed - self.p
    }
}

/// A mixture of thermally perfect species bound to a unit system.
#[derive(Debug, Clone)]
pub struct GasModel {
    species: Vec<SpeciesThermo>,
    molar_mass: Vec<f64>,
    units: UnitSystem,
    r0: f64,
    t_scale: f64,
    margin: f64,
    t_bounds: (f64, f64),
}

impl GasModel {
    pub fn new(species: Vec<SpeciesThermo>, units: UnitSystem) -> Result<Self> {
        if species.len() > MAX_SPECIES {
            return Err(ThermoError::TooManySpecies(species.len()));
        }
        if species.is_empty() {
            return Err(ThermoError::InvalidThermo {
                species: String::new(),
                reason: "mixture needs at least one species".into(),
            });
        }
        for s in &species {
            s.validate()?;
        }
        let wscale = units.molar_mass_scale();
        let molar_mass = species.iter().map(|s| s.molar_mass * wscale).collect();
        let margin = DEFAULT_EXTRAPOLATION_MARGIN;
        let t_scale = units.temperature_scale();
        let lo = species.iter().map(|s| s.t_min()).fold(f64::MIN, f64::max) * (1.0 - margin);
        let hi = species.iter().map(|s| s.t_max()).fold(f64::MAX, f64::min) * (1.0 + margin);
        Ok(Self {
            species,
            molar_mass,
            units,
            r0: units.r0(),
            t_scale,
            margin,
            t_bounds: (lo / t_scale, hi / t_scale),
        })
    }

    pub fn n_species(&self) -> usize {
        self.species.len()
    }

    pub fn species(&self) -> &[SpeciesThermo] {
        &self.species
    }

    pub fn species_index(&self, name: &str) -> Option<usize> {
        self.species.iter().position(|s| s.name == name)
    }

    /// Molar masses in model units.
    pub fn molar_masses(&self) -> &[f64] {
        &self.molar_mass
    }

    pub fn units(&self) -> UnitSystem {
        self.units
    }

    pub fn r0(&self) -> f64 {
        self.r0
    }

    /// Admissible temperature interval (model units), margins included.
    pub fn temperature_bounds(&self) -> (f64, f64) {
        self.t_bounds
    }

    /// Molar `cp` and molar `u` of species `i` at model temperature `t`.
    #[inline]
    pub fn species_cp_u(&self, i: usize, t: f64) -> Result<(f64, f64)> {
        let tk = t * self.t_scale;
        let iv = self.species[i].interval_at(tk, self.margin)?;
        let cp = self.r0 * iv.cp_over_r(tk);
        let h = self.r0 * iv.h_over_r(tk) / self.t_scale;
        Ok((cp, h - self.r0 * t))
    }

    pub fn density(&self, c: &[f64]) -> f64 {
        c.iter().zip(&self.molar_mass).map(|(c, w)| c * w).sum()
    }

    fn check_composition(&self, c: &[f64]) -> Result<(f64, f64)> {
        if c.len() != self.n_species() {
            return Err(ThermoError::StateLength {
                got: c.len(),
                expected: self.n_species(),
            });
        }
        let rho = self.density(c);
        let sum_c: f64 = c.iter().sum();
        if !(rho > 0.0) || !(sum_c > 0.0) {
            return Err(ThermoError::VacuumState { rho });
        }
        Ok((rho, sum_c))
    }

    pub fn pressure_from_tc(&self, t: f64, c: &[f64]) -> f64 {
        self.r0 * t * c.iter().sum::<f64>()
    }

    pub fn temperature_from_pc(&self, p: f64, c: &[f64]) -> Result<f64> {
        let sum_c: f64 = c.iter().sum();
        if !(sum_c > 0.0) {
            return Err(ThermoError::VacuumState { rho: self.density(c) });
        }
        if !(p > 0.0) {
            return Err(ThermoError::NonPositivePressure { p });
        }
        Ok(p / (self.r0 * sum_c))
    }

    pub fn mixture_properties(&self, t: f64, c: &[f64]) -> Result<MixtureProperties> {
        let (rho, sum_c) = self.check_composition(c)?;
        let mut rho_cv = 0.0;
        for (i, ci) in c.iter().enumerate() {
            let (cp, _) = self.species_cp_u(i, t)?;
            rho_cv += ci * (cp - self.r0);
        }
        let p = self.r0 * t * sum_c;
        let rho_cp = rho_cv + self.r0 * sum_c;
        let gamma = rho_cp / rho_cv;
        Ok(MixtureProperties {
            rho,
            r_specific: self.r0 * sum_c / rho,
            cv: rho_cv / rho,
            cp: rho_cp / rho,
            gamma,
            pressure: p,
            sound_speed: (gamma * p / rho).sqrt(),
        })
    }

    /// `ρu` and `ρc_v` at temperature `t`; also fills molar internal energies.
    #[inline]
    fn internal_energy(&self, t: f64, c: &[f64], u_molar: &mut [f64; MAX_SPECIES]) -> Result<(f64, f64)> {
        let mut rho_u = 0.0;
        let mut rho_cv = 0.0;
        for (i, ci) in c.iter().enumerate() {
            let (cp, u) = self.species_cp_u(i, t)?;
            u_molar[i] = u;
            rho_u += ci * u;
            rho_cv += ci * (cp - self.r0);
        }
        Ok((rho_u, rho_cv))
    }

    /// Mixture `ρu` at temperature `t`.
    pub fn rho_u_at(&self, t: f64, c: &[f64]) -> Result<f64> {
        let mut scratch = [0.0; MAX_SPECIES];
        Ok(self.internal_energy(t, c, &mut scratch)?.0)
    }

    /// Invert `ρu(T, C) = rho_u_target` for `T` by Newton's method, falling back
    /// to bisection over the admissible range.
    pub fn temperature_from_rho_u(&self, rho_u_target: f64, c: &[f64], t_guess: f64) -> Result<f64> {
        let mut scratch = [0.0; MAX_SPECIES];
        let (lo, hi) = self.t_bounds;
        let mut t = if t_guess > lo && t_guess < hi { t_guess } else { 0.5 * (lo + hi.min(10.0 * lo.max(1e-300))) };
        for _ in 0..NEWTON_MAX_ITER {
            let (rho_u, rho_cv) = match self.internal_energy(t, c, &mut scratch) {
                Ok(v) => v,
                Err(_) => break,
            };
            let f = rho_u - rho_u_target;
            let scale = rho_u_target.abs() + rho_cv * t;
            let dt = f / rho_cv;
            t -= dt;
            if !(t > lo && t < hi) || !t.is_finite() {
                break;
            }
            if f.abs() <= NEWTON_REL_TOL * scale || dt.abs() <= 4.0 * f64::EPSILON * t {
                // one more step is essentially free and lands at round-off
                if let Ok((rho_u, rho_cv)) = self.internal_energy(t, c, &mut scratch) {
                    let t_next = t - (rho_u - rho_u_target) / rho_cv;
                    if t_next > lo && t_next < hi {
                        t = t_next;
                    }
                }
                return Ok(t);
            }
        }
        self.bisect_temperature(rho_u_target, c)
    }

    fn bisect_temperature(&self, rho_u_target: f64, c: &[f64]) -> Result<f64> {
        let (mut lo, mut hi) = self.t_bounds;
        // shrink off the extrapolation edge so evaluations stay valid
        lo *= 1.0 + 1e-12;
        hi *= 1.0 - 1e-12;
        let f_lo = self.rho_u_at(lo, c)? - rho_u_target;
        let f_hi = self.rho_u_at(hi, c)? - rho_u_target;
        let out_of_range = |t: f64| ThermoError::TemperatureOutOfRange {
            species: "mixture".into(),
            t,
            low: self.t_bounds.0 * self.t_scale,
            high: self.t_bounds.1 * self.t_scale,
        };
        if f_lo > 0.0 {
            return Err(out_of_range(lo * self.t_scale));
        }
        if f_hi < 0.0 {
            return Err(out_of_range(hi * self.t_scale));
        }
        let max_iter = 200;
        for _ in 0..max_iter {
            let mid = 0.5 * (lo + hi);
            let f = self.rho_u_at(mid, c)? - rho_u_target;
            if f > 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
            if hi - lo <= 4.0 * f64::EPSILON * hi {
                return Ok(0.5 * (lo + hi));
            }
        }
        Err(ThermoError::NoConvergence { iterations: max_iter })
    }

    /// Temperature from mass-specific internal energy `u` (model units).
    pub fn temperature_from_uc(&self, u_target: f64, c: &[f64], t_guess: f64) -> Result<f64> {
        let (rho, _) = self.check_composition(c)?;
        self.temperature_from_rho_u(rho * u_target, c, t_guess)
    }

    /// Point evaluation for a pressure-based state `(ρv, P, C_1..)`.
    #[inline]
    pub fn point_from_pressure_state(&self, y: &[f64]) -> Result<PointState> {
        let ns = self.n_species();
        let c = &y[2..2 + ns];
        let (rho, sum_c) = self.check_composition(c)?;
        let p = y[1];
        if !(p > 0.0) {
            return Err(ThermoError::NonPositivePressure { p });
        }
        let t = p / (self.r0 * sum_c);
        let mut u_molar = [0.0; MAX_SPECIES];
        let (rho_u, rho_cv) = self.internal_energy(t, c, &mut u_molar)?;
        Ok(self.finish_point(rho, y[0] / rho, p, t, sum_c, rho_u, rho_cv, u_molar))
    }

    /// Point evaluation for an energy-based state `(ρv, ρe_t, C_1..)`.
    #[inline]
    pub fn point_from_energy_state(&self, y: &[f64], t_guess: f64) -> Result<PointState> {
        let ns = self.n_species();
        let c = &y[2..2 + ns];
        let (rho, sum_c) = self.check_composition(c)?;
        let v = y[0] / rho;
        let rho_u_target = y[1] - 0.5 * rho * v * v;
        let t = self.temperature_from_rho_u(rho_u_target, c, t_guess)?;
        let mut u_molar = [0.0; MAX_SPECIES];
        let (rho_u, rho_cv) = self.internal_energy(t, c, &mut u_molar)?;
        let p = self.r0 * t * sum_c;
        Ok(self.finish_point(rho, v, p, t, sum_c, rho_u, rho_cv, u_molar))
    }

    #[allow(clippy::too_many_arguments)]
    #[inline]
    fn finish_point(
        &self,
        rho: f64,
        v: f64,
        p: f64,
        t: f64,
        sum_c: f64,
        rho_u: f64,
        rho_cv: f64,
        u_molar: [f64; MAX_SPECIES],
    ) -> PointState {
        let gamma = (rho_cv + self.r0 * sum_c) / rho_cv;
        PointState {
            rho,
            v,
            p,
            t,
            sum_c,
            rho_cv,
            rho_u,
            gamma,
            sound_speed: (gamma * p / rho).sqrt(),
            u_molar,
            n_species: self.n_species(),
        }
    }

    /// `ρe_t` of a pressure-based state.
    pub fn total_energy_density(&self, y: &[f64]) -> Result<f64> {
        Ok(self.point_from_pressure_state(y)?.rho_et())
    }

    /// Fill `w = ∂(ρe_t)/∂y` from a point evaluation.
    #[inline]
    pub fn energy_derivative_from_point(&self, ps: &PointState, w: &mut [f64]) {
        let v2 = ps.v * ps.v;
        w[0] = ps.v;
        w[1] = ps.rho_cv / (self.r0 * ps.sum_c);
        let shift = ps.rho_cv * ps.p / (self.r0 * ps.sum_c * ps.sum_c);
        for i in 0..ps.n_species {
            w[2 + i] = ps.u_molar[i] - shift - 0.5 * self.molar_mass[i] * v2;
        }
    }

    /// `w = ∂(ρe_t)/∂y` for a pressure-based state.
    pub fn energy_derivative_w(&self, y: &[f64]) -> Result<Vec<f64>> {
        let ps = self.point_from_pressure_state(y)?;
        let mut w = vec![0.0; y.len()];
        self.energy_derivative_from_point(&ps, &mut w);
        Ok(w)
    }

    /// Modified auxiliary variables `z` built from the state and its `w`.
    #[inline]
    pub fn correction_variables_from(&self, v: f64, p: f64, w: &[f64], z: &mut [f64]) {
        let ns = self.n_species();
        let mut s = 0.0;
        for i in 0..ns {
            s += self.molar_mass[i] * w[2 + i];
            z[2 + i] = w[2 + i];
        }
        z[0] = v * s;
        z[1] = p;
    }

    pub fn correction_variables_z(&self, y: &[f64], w: &[f64]) -> Result<Vec<f64>> {
        let (rho, _) = self.check_composition(&y[2..])?;
        let mut z = vec![0.0; y.len()];
        self.correction_variables_from(y[0] / rho, y[1], w, &mut z);
        Ok(z)
    }

    /// Convert a pressure-based state into the energy-based one.
    pub fn pressure_to_energy_state(&self, y: &[f64]) -> Result<Vec<f64>> {
        let mut out = y.to_vec();
        out[1] = self.total_energy_density(y)?;
        Ok(out)
    }

    /// Convert an energy-based state into the pressure-based one.
    pub fn energy_to_pressure_state(&self, y: &[f64], t_guess: f64) -> Result<Vec<f64>> {
        let ps = self.point_from_energy_state(y, t_guess)?;
        let mut out = y.to_vec();
        out[1] = ps.p;
        Ok(out)
    }
}
