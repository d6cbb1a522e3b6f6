//! Unit systems used by the solver.
//!
//! The solver itself is unit-agnostic: all kernels work with a universal gas
//! constant `r0`, molar masses and a temperature scale taken from a
//! [`UnitSystem`]. Three systems are supported:
//!
//! * [`UnitSystem::Si`]: SI throughout.
//! * [`UnitSystem::Nondimensional`]: `r0 = 1`, thermo data and molar masses are
//!   read as already nondimensional (used for the fictitious-species cases).
//! * [`UnitSystem::Reference`]: SI inputs scaled by reference density, pressure
//!   and temperature, so that the state vector coincides with the normalized
//!   variables `ρv/√(ρ_r P_r)`, `ζ/P_r` and `R0 T_r C_i / P_r`.

use serde::{Deserialize, Serialize};

/// Universal gas constant, J/(mol·K).
pub const R_UNIVERSAL: f64 = 8.314_462_618;

/// Reference state used to normalize variables.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalizationRefs {
    /// Reference density, kg/m³.
    pub rho_r: f64,
    /// Reference pressure, Pa.
    pub p_r: f64,
    /// Reference temperature, K.
    pub t_r: f64,
}

impl Default for NormalizationRefs {
    fn default() -> Self {
        Self {
            rho_r: 1.0,
            p_r: 101_325.0,
            t_r: 298.15,
        }
    }
}

impl NormalizationRefs {
    pub fn is_valid(&self) -> bool {
        self.rho_r > 0.0 && self.p_r > 0.0 && self.t_r > 0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum UnitSystem {
    Si,
    Nondimensional,
    Reference(NormalizationRefs),
}

impl UnitSystem {
    /// Gas constant in model units.
    pub fn r0(&self) -> f64 {
        match self {
            UnitSystem::Si => R_UNIVERSAL,
            UnitSystem::Nondimensional | UnitSystem::Reference(_) => 1.0,
        }
    }

    /// Kelvin per model temperature unit. Thermo fits are evaluated at
    /// `T_model * temperature_scale()`.
    pub fn temperature_scale(&self) -> f64 {
        match self {
            UnitSystem::Si | UnitSystem::Nondimensional => 1.0,
            UnitSystem::Reference(r) => r.t_r,
        }
    }

    /// Factor converting a tabulated molar mass into model units.
    pub fn molar_mass_scale(&self) -> f64 {
        match self {
            UnitSystem::Si | UnitSystem::Nondimensional => 1.0,
            UnitSystem::Reference(r) => r.p_r / (R_UNIVERSAL * r.t_r * r.rho_r),
        }
    }

    pub fn density_scale(&self) -> f64 {
        match self {
            UnitSystem::Reference(r) => r.rho_r,
            _ => 1.0,
        }
    }

    pub fn pressure_scale(&self) -> f64 {
        match self {
            UnitSystem::Reference(r) => r.p_r,
            _ => 1.0,
        }
    }

    /// m/s per model velocity unit.
    pub fn velocity_scale(&self) -> f64 {
        match self {
            UnitSystem::Reference(r) => (r.p_r / r.rho_r).sqrt(),
            _ => 1.0,
        }
    }

    /// Seconds per model time unit (reference length is 1 m).
    pub fn time_scale(&self) -> f64 {
        1.0 / self.velocity_scale()
    }

    /// mol/m³ per model concentration unit.
    pub fn concentration_scale(&self) -> f64 {
        match self {
            UnitSystem::Reference(r) => r.p_r / (R_UNIVERSAL * r.t_r),
            _ => 1.0,
        }
    }

    /// Per-component factors mapping a model-unit state `(ρv, ζ, C_1..)` onto
    /// the normalized variables used for error norms.
    pub fn normalization_factors(&self, refs: &NormalizationRefs, n_species: usize) -> Vec<f64> {
        let mut f = Vec::with_capacity(2 + n_species);
        match self {
            UnitSystem::Si => {
                f.push(1.0 / (refs.rho_r * refs.p_r).sqrt());
                f.push(1.0 / refs.p_r);
                f.extend(std::iter::repeat(R_UNIVERSAL * refs.t_r / refs.p_r).take(n_species));
            }
            UnitSystem::Nondimensional | UnitSystem::Reference(_) => {
                f.extend(std::iter::repeat(1.0).take(2 + n_species));
            }
        }
        f
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_scaling_makes_eos_unit_free() {
        let refs = NormalizationRefs::default();
        let u = UnitSystem::Reference(refs);
        // P = R0 T C in SI must map onto P = T C in model units.
        let (t, c) = (900.0, 800.0);
        let p_si = R_UNIVERSAL * t * c;
        let p_model = u.r0() * (t / u.temperature_scale()) * (c / u.concentration_scale());
        assert!((p_model - p_si / u.pressure_scale()).abs() < 1e-12 * p_model);
        // ρ = W C must map consistently.
        let w = 0.028;
        let rho_model = w * u.molar_mass_scale() * c / u.concentration_scale();
        assert!((rho_model - w * c / u.density_scale()).abs() < 1e-12 * rho_model);
    }

    #[test]
    fn si_normalization_factors() {
        let refs = NormalizationRefs::default();
        let f = UnitSystem::Si.normalization_factors(&refs, 2);
        assert_eq!(f.len(), 4);
        assert!((f[1] - 1.0 / 101_325.0).abs() < 1e-20);
        assert!((f[2] - R_UNIVERSAL * 298.15 / 101_325.0).abs() < 1e-15);
    }
}
