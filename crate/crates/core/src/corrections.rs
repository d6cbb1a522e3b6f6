//! Elementwise energy-consistency corrections.
//!
//! Blocks are `n_b × m` row-major arrays of nodal coefficients for one element.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CorrectionVariant {
    None,
    /// `r_k = α(ŵ_k − w̄)`
    Original,
    /// `r_k = α(ẑ_k − z̄)` plus face corrections on uniform elements.
    Modified,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CorrectionConfig {
    pub variant: CorrectionVariant,
    pub alpha_tol: f64,
    pub beta_tol: f64,
    /// Relative tolerance of the uniform-element test.
    pub uniform_tol: f64,
    /// Absolute floor added to `|ȳ|` in the uniform-element test.
    pub uniform_floor: f64,
    pub zero_species_masking: bool,
}

impl Default for CorrectionConfig {
    fn default() -> Self {
        Self {
            variant: CorrectionVariant::None,
            alpha_tol: 1e-7,
            beta_tol: 1e-6,
            uniform_tol: 1e-12,
            uniform_floor: 1e-14,
            zero_species_masking: false,
        }
    }
}

impl CorrectionConfig {
    pub fn original() -> Self {
        Self {
            variant: CorrectionVariant::Original,
            ..Self::default()
        }
    }

    pub fn modified() -> Self {
        Self {
            variant: CorrectionVariant::Modified,
            zero_species_masking: true,
            ..Self::default()
        }
    }

    pub fn is_valid(&self) -> bool {
        self.alpha_tol > 0.0 && self.beta_tol > 0.0 && self.uniform_tol > 0.0 && self.uniform_floor >= 0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum CorrectionStatus {
    #[default]
    NotApplied,
    Active,
    /// Denominator below `alpha_tol` (nonnegative).
    Zeroed,
    /// Denominator negative; α zeroed.
    NegativeDenominator,
    /// Element flagged uniform; handled by the face correction.
    Uniform,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ElementCorrection {
    pub alpha: f64,
    /// Energy-consistency error `E`.
    pub error: f64,
    pub denominator: f64,
    pub status: CorrectionStatus,
}

/// `E = ∮F†_E ds − Σ_k ŵ_kᵀ R̃_k`.
pub fn energy_consistency_error(r_tilde: &[f64], w_hat: &[f64], surface_energy: f64) -> f64 {
    let s: f64 = r_tilde.iter().zip(w_hat).map(|(r, w)| r * w).sum();
    surface_energy - s
}

/// True when every coefficient lies within `tol · (|ȳ| + floor)` of the
/// component's element average.
pub fn is_uniform_element(block: &[f64], n_b: usize, m: usize, tol: f64, floor: f64) -> bool {
    for c in 0..m {
        let mean = (0..n_b).map(|k| block[k * m + c]).sum::<f64>() / n_b as f64;
        let bound = tol * (mean.abs() + floor);
        if (0..n_b).any(|k| (block[k * m + c] - mean).abs() > bound) {
            return false;
        }
    }
    true
}

/// Compute `r_k = α(d_k − d̄)` for direction coefficients `dirs` (ŵ for the
/// original variant, ẑ for the modified one), where `α` enforces
/// `Σ_k ŵ_kᵀ r_k = E`. Components with `masked[c]` receive no correction
/// and are excluded from the denominator.
pub fn elementwise_correction(
    w_hat: &[f64],
    dirs: &[f64],
    error: f64,
    n_b: usize,
    m: usize,
    masked: &[bool],
    alpha_tol: f64,
    r_out: &mut [f64],
) -> ElementCorrection {
    let inv = 1.0 / n_b as f64;
    let mut centered = 0.0;
    let mut uncentered = 0.0;
    for c in 0..m {
        if masked[c] {
            continue;
        }
        let mut wbar = 0.0;
        let mut dbar = 0.0;
        for k in 0..n_b {
            wbar += w_hat[k * m + c];
            dbar += dirs[k * m + c];
        }
        wbar *= inv;
        dbar *= inv;
        for k in 0..n_b {
            let dd = dirs[k * m + c] - dbar;
            centered += (w_hat[k * m + c] - wbar) * dd;
            uncentered += w_hat[k * m + c] * dd;
        }
    }
    r_out[..n_b * m].iter_mut().for_each(|r| *r = 0.0);
    let status = if centered < 0.0 {
        CorrectionStatus::NegativeDenominator
    } else if !(centered >= alpha_tol) {
        CorrectionStatus::Zeroed
    } else {
        CorrectionStatus::Active
    };
    if status != CorrectionStatus::Active {
        return ElementCorrection {
            alpha: 0.0,
            error,
            denominator: centered,
            status,
        };
    }
    // both sums are equal in exact arithmetic; the uncentered one makes
    // Σ ŵᵀr reproduce E to round-off
    let alpha = error / uncentered;
    for c in 0..m {
        if masked[c] {
            continue;
        }
        let dbar = (0..n_b).map(|k| dirs[k * m + c]).sum::<f64>() * inv;
        for k in 0..n_b {
            r_out[k * m + c] = alpha * (dirs[k * m + c] - dbar);
        }
    }
    ElementCorrection {
        alpha,
        error,
        denominator: centered,
        status,
    }
}
