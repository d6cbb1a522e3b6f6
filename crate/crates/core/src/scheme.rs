//! The five discretizations compared by the solver.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::basis::IntegrationMode;
use crate::corrections::{CorrectionConfig, CorrectionVariant};
use crate::flux::Formulation;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SchemeKind {
    /// Pressure form, no correction.
    P1,
    /// Pressure form, original elementwise correction.
    P2,
    /// Pressure form, modified elementwise and face corrections.
    P3,
    /// Energy form, overintegrated.
    E1,
    /// Energy form, colocated.
    E2,
}

impl SchemeKind {
    pub const ALL: [SchemeKind; 5] = [SchemeKind::P1, SchemeKind::P2, SchemeKind::P3, SchemeKind::E1, SchemeKind::E2];

    pub fn formulation(self) -> Formulation {
        match self {
            SchemeKind::E1 | SchemeKind::E2 => Formulation::Energy,
            _ => Formulation::Pressure,
        }
    }
}

impl fmt::Display for SchemeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            SchemeKind::P1 => "P1",
            SchemeKind::P2 => "P2",
            SchemeKind::P3 => "P3",
            SchemeKind::E1 => "E1",
            SchemeKind::E2 => "E2",
        };
        f.write_str(s)
    }
}

impl FromStr for SchemeKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_uppercase().as_str() {
            "P1" => Ok(SchemeKind::P1),
            "P2" => Ok(SchemeKind::P2),
            "P3" => Ok(SchemeKind::P3),
            "E1" => Ok(SchemeKind::E1),
            "E2" => Ok(SchemeKind::E2),
            other => Err(format!("unknown scheme {other:?} (expected P1, P2, P3, E1 or E2)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnergyFluxVariant {
    /// `{{F_E}} n + (λ/2)⟦ρe_t⟧`
    LaxFriedrichs,
    /// `{{F_E}} n − {{ŵᵀF}} n + {{ŵ}}ᵀF†`
    Modified,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scheme {
    pub kind: SchemeKind,
    pub formulation: Formulation,
    pub mode: IntegrationMode,
    pub correction: CorrectionConfig,
    pub energy_flux: EnergyFluxVariant,
}

impl Scheme {
    pub fn new(kind: SchemeKind) -> Self {
        let (mode, correction, energy_flux) = match kind {
            SchemeKind::P1 => (IntegrationMode::Overintegrated, CorrectionConfig::default(), EnergyFluxVariant::LaxFriedrichs),
            SchemeKind::P2 => (IntegrationMode::Overintegrated, CorrectionConfig::original(), EnergyFluxVariant::LaxFriedrichs),
            SchemeKind::P3 => (IntegrationMode::Overintegrated, CorrectionConfig::modified(), EnergyFluxVariant::Modified),
            SchemeKind::E1 => (IntegrationMode::Overintegrated, CorrectionConfig::default(), EnergyFluxVariant::LaxFriedrichs),
            SchemeKind::E2 => (IntegrationMode::Colocated, CorrectionConfig::default(), EnergyFluxVariant::LaxFriedrichs),
        };
        Self {
            kind,
            formulation: kind.formulation(),
            mode,
            correction,
            energy_flux,
        }
    }

    pub fn corrected(&self) -> bool {
        self.correction.variant != CorrectionVariant::None
    }
}
