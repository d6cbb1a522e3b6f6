//! Measured quantities: pressure-equilibrium error, global energy, normalized
//! L2 errors and convergence rates. All functions are read-only.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::basis::{gauss_legendre, lagrange_values, pairwise_sum};
use crate::flux::{point_state, Formulation};
use crate::residual::{DgOperator, SolverError};
use crate::thermo::{GasModel, ThermoError};
use crate::units::NormalizationRefs;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DiagnosticsError {
    #[error("value {value} at index {index} must be positive")]
    NonPositive { index: usize, value: f64 },
    #[error("need at least two matching samples (got {errors} errors and {sizes} sizes)")]
    BadLength { errors: usize, sizes: usize },
}

/// One row of a run's time series.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsRecord {
    pub t: f64,
    pub step: u64,
    pub pressure_error_pct: f64,
    pub global_energy: f64,
    pub conservation_error_pct: f64,
}

/// Visit the state interpolated at every quadrature point of the operator.
fn for_each_quadrature_state<F>(op: &DgOperator, u: &[f64], mut f: F) -> Result<(), SolverError>
where
    F: FnMut(usize, usize, &[f64]) -> Result<(), SolverError>,
{
    let ops = &op.disc.ops;
    let m = op.n_components();
    let (nb, nq) = (ops.n_b, ops.n_q);
    let mut y = vec![0.0; m];
    for e in 0..op.disc.n_elements() {
        let blk = &u[e * nb * m..(e + 1) * nb * m];
        for q in 0..nq {
            y.iter_mut().for_each(|v| *v = 0.0);
            for k in 0..nb {
                let phi = ops.vq[q * nb + k];
                for c in 0..m {
                    y[c] += phi * blk[k * m + c];
                }
            }
            f(e, q, &y)?;
        }
    }
    Ok(())
}

/// `max_q |P − P0| / P0 × 100` over all quadrature points.
pub fn pressure_error_percent(op: &DgOperator, u: &[f64], p0: f64) -> Result<f64, SolverError> {
    let form = op.scheme.formulation;
    let mut worst = 0.0f64;
    for_each_quadrature_state(op, u, |e, _, y| {
        let p = match form {
            Formulation::Pressure => y[1],
            Formulation::Energy => {
                point_state(&op.gas, form, y, 0.0)
                    .map_err(|source| SolverError::Thermo { element: e, source })?
                    .p
            }
        };
        worst = worst.max((p - p0).abs() / p0 * 100.0);
        Ok(())
    })?;
    Ok(worst)
}

/// `∫ ρe_t dx` with the operator's quadrature. For the energy form this is the
/// integral of the interpolated energy slot.
pub fn global_energy(op: &DgOperator, u: &[f64]) -> Result<f64, SolverError> {
    let form = op.scheme.formulation;
    let ops = &op.disc.ops;
    let mut parts = Vec::with_capacity(op.disc.n_elements() * ops.n_q);
    for_each_quadrature_state(op, u, |e, q, y| {
        let et = match form {
            Formulation::Energy => y[1],
            Formulation::Pressure => op
                .gas
                .point_from_pressure_state(y)
                .map_err(|source| SolverError::Thermo { element: e, source })?
                .rho_et(),
        };
        parts.push(ops.w_q[q] * et);
        Ok(())
    })?;
    Ok(pairwise_sum(&parts))
}

/// `|E(t) − E(0)| / |E(0)| × 100`.
pub fn energy_conservation_error_percent(energy_t: f64, energy_0: f64) -> f64 {
    (energy_t - energy_0).abs() / energy_0.abs() * 100.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct L2Error {
    pub per_component: Vec<f64>,
    /// Root of the sum of squared component errors.
    pub combined: f64,
}

/// L2 error of the normalized variables `(ρv, ζ, C_i)` against `exact(x)`,
/// which returns the state in the operator's formulation. Uses `p + 3`
/// Gauss points per element.
pub fn normalized_l2_error<F>(op: &DgOperator, u: &[f64], refs: &NormalizationRefs, exact: F) -> L2Error
where
    F: Fn(f64) -> Vec<f64>,
{
    let m = op.n_components();
    let nb = op.disc.n_b();
    let p = op.disc.basis.p;
    let (xi, wq) = gauss_legendre(p + 3);
    let phi: Vec<Vec<f64>> = xi.iter().map(|&x| lagrange_values(&op.disc.basis.nodes, x)).collect();
    let half_h = 0.5 * op.disc.mesh.h();
    let scale = op.gas.units().normalization_factors(refs, m - 2);
    let mut sq: Vec<Vec<f64>> = vec![Vec::with_capacity(op.disc.n_elements() * xi.len()); m];
    for e in 0..op.disc.n_elements() {
        let blk = &u[e * nb * m..(e + 1) * nb * m];
        for (q, &x) in xi.iter().enumerate() {
            let ex = exact(op.disc.mesh.x_of(e, x));
            for c in 0..m {
                let yh: f64 = (0..nb).map(|k| phi[q][k] * blk[k * m + c]).sum();
                let d = (yh - ex[c]) * scale[c];
                sq[c].push(wq[q] * half_h * d * d);
            }
        }
    }
    let per_component: Vec<f64> = sq.iter().map(|v| pairwise_sum(v).sqrt()).collect();
    let combined = per_component.iter().map(|v| v * v).sum::<f64>().sqrt();
    L2Error {
        per_component,
        combined,
    }
}

/// `rate_k = log(e_k / e_{k+1}) / log(s_k / s_{k+1})`.
pub fn convergence_rates(errors: &[f64], sizes: &[f64]) -> Result<Vec<f64>, DiagnosticsError> {
    if errors.len() != sizes.len() || errors.len() < 2 {
        return Err(DiagnosticsError::BadLength {
            errors: errors.len(),
            sizes: sizes.len(),
        });
    }
    for (index, &value) in errors.iter().chain(sizes).enumerate() {
        if !(value > 0.0) {
            return Err(DiagnosticsError::NonPositive {
                index: index % errors.len(),
                value,
            });
        }
    }
    Ok(errors
        .windows(2)
        .zip(sizes.windows(2))
        .map(|(e, s)| (e[0] / e[1]).ln() / (s[0] / s[1]).ln())
        .collect())
}

pub fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Largest `|Y_i|` over the solution nodes.
pub fn max_abs_mass_fraction(op: &DgOperator, u: &[f64], species: usize) -> f64 {
    let m = op.n_components();
    let w = op.gas.molar_masses();
    u.chunks_exact(m)
        .map(|row| {
            let c = &row[2..];
            let rho: f64 = c.iter().zip(w).map(|(c, w)| c * w).sum();
            (w[species] * c[species] / rho).abs()
        })
        .fold(0.0, f64::max)
}

/// Largest `|v − v0| / |v0|` over the solution nodes.
pub fn max_velocity_deviation(op: &DgOperator, u: &[f64], v0: f64) -> f64 {
    let m = op.n_components();
    let w = op.gas.molar_masses();
    u.chunks_exact(m)
        .map(|row| {
            let rho: f64 = row[2..].iter().zip(w).map(|(c, w)| c * w).sum();
            (row[0] / rho - v0).abs() / v0.abs()
        })
        .fold(0.0, f64::max)
}

/// Largest per-component relative difference between `w = ∂(ρe_t)/∂y` and a
/// fourth-order central difference of `ρe_t` for a pressure-form state.
pub fn auxiliary_vector_error(gas: &GasModel, y: &[f64]) -> Result<f64, ThermoError> {
    let m = y.len();
    let w = gas.energy_derivative_w(y)?;
    let scale: f64 = y.iter().map(|v| v.abs()).fold(0.0, f64::max);
    let mut worst = 0.0f64;
    let mut yy = y.to_vec();
    for c in 0..m {
        let h = 1e-4 * y[c].abs().max(1e-3 * scale);
        let mut eval = |d: f64| -> Result<f64, ThermoError> {
            yy[c] = y[c] + d;
            let e = gas.total_energy_density(&yy);
            yy[c] = y[c];
            e
        };
        let fd = (8.0 * (eval(h)? - eval(-h)?) - (eval(2.0 * h)? - eval(-2.0 * h)?)) / (12.0 * h);
        worst = worst.max((fd - w[c]).abs() / w[c].abs());
    }
    Ok(worst)
}
