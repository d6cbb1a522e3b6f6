//! Residual assembly for both formulations and the corrected right-hand side.
//!
//! The semidiscrete system is `M dŷ/dt = −(R̃ + r) + S`, where `R̃` is the
//! uncorrected DG residual, `r` the elementwise correction and `S` an optional
//! source. Solution vectors are flat, indexed `(e · n_b + k) · m + c`. Face `f`
//! separates element `f − 1` (left, periodic) from element `f`; fluxes are
//! stored once per face with normal `+1`.

use std::sync::Arc;

use serde::Serialize;
use thiserror::Error;

use crate::basis::Discretization;
use crate::corrections::{
    elementwise_correction, is_uniform_element, CorrectionStatus, CorrectionVariant, ElementCorrection,
};
use crate::flux::{
    corrected_flux_in_place, energy_flux_lf, energy_flux_modified, energy_flux_of, lax_friedrichs_from,
    nonconservative_pressure, physical_flux_from, point_state, pressure_jump_from, wave_speed, Formulation,
};
use crate::scheme::{EnergyFluxVariant, Scheme};
use crate::thermo::{GasModel, PointState, ThermoError, MAX_SPECIES};

pub const MAX_COMPONENTS: usize = 2 + MAX_SPECIES;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolverError {
    #[error("element {element}: {source}")]
    Thermo {
        element: usize,
        #[source]
        source: ThermoError,
    },
    #[error("non-finite value in element {element}")]
    NonFinite { element: usize },
    #[error("state vector has length {got}, expected {expected}")]
    StateLength { got: usize, expected: usize },
}

/// Source term `S(x, t)` written into the output slice (length `m`).
pub type SourceFn = Arc<dyn Fn(f64, f64, &mut [f64]) + Send + Sync>;

/// Correction bookkeeping, per evaluation or accumulated over a run.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct CorrectionStats {
    pub evaluations: u64,
    pub alpha_active: u64,
    pub alpha_zeroed: u64,
    pub negative_denominators: u64,
    pub uniform_elements: u64,
    pub face_corrections: u64,
    pub beta_zeroed: u64,
    /// Largest relative violation of `Σ_k ŵ_kᵀR_k = ∮F†_E ds` over elements
    /// with an active correction.
    pub max_constraint_residual: f64,
}

impl CorrectionStats {
    pub fn merge(&mut self, o: &CorrectionStats) {
        self.evaluations += o.evaluations;
        self.alpha_active += o.alpha_active;
        self.alpha_zeroed += o.alpha_zeroed;
        self.negative_denominators += o.negative_denominators;
        self.uniform_elements += o.uniform_elements;
        self.face_corrections += o.face_corrections;
        self.beta_zeroed += o.beta_zeroed;
        self.max_constraint_residual = self.max_constraint_residual.max(o.max_constraint_residual);
    }
}

/// Everything produced by one residual evaluation.
#[derive(Debug, Clone, Default)]
pub struct ResidualBundle {
    /// Uncorrected residual `R̃`.
    pub r_tilde: Vec<f64>,
    /// Elementwise correction `r` (zero unless a correction is active).
    pub correction: Vec<f64>,
    /// Numerical flux of each face, normal `+1`.
    pub face_flux: Vec<f64>,
    /// Numerical total-energy flux of each face, normal `+1`.
    pub face_energy: Vec<f64>,
    /// Pressure jump term of each face (same for both sides).
    pub face_dp: Vec<f64>,
    pub face_beta: Vec<f64>,
    /// `∮ F†_E ds` of each element.
    pub surface_energy: Vec<f64>,
    /// Projected `ŵ` and `ẑ` (pressure form with corrections only).
    pub w_hat: Vec<f64>,
    pub z_hat: Vec<f64>,
    /// Projected per-species parts `v W_i ∂(ρe_t)/∂C_i` of `ẑ_ρv`.
    pub z_parts: Vec<f64>,
    pub uniform: Vec<bool>,
    /// `species_mask[e · n_s + i]`: element average of `C_i` is zero.
    pub species_mask: Vec<bool>,
    pub elements: Vec<ElementCorrection>,
    pub stats: CorrectionStats,
}

impl ResidualBundle {
    /// Corrected residual `R̃ + r` of one entry.
    #[inline]
    pub fn total(&self, idx: usize) -> f64 {
        self.r_tilde[idx] + self.correction[idx]
    }
}

pub struct DgOperator {
    pub disc: Discretization,
    pub gas: GasModel,
    pub scheme: Scheme,
    m: usize,
    ns: usize,
    bundle: ResidualBundle,
    trace_ps: Vec<PointState>,
    trace_flux: Vec<f64>,
    t_guess_q: Vec<f64>,
    t_guess_trace: Vec<f64>,
    source: Option<SourceFn>,
    scratch: Vec<f64>,
    /// Correction statistics accumulated over every evaluation.
    pub run_stats: CorrectionStats,
}

impl DgOperator {
    pub fn new(disc: Discretization, gas: GasModel, scheme: Scheme) -> Self {
        let ns = gas.n_species();
        let m = 2 + ns;
        let ne = disc.n_elements();
        let nb = disc.n_b();
        let nq = disc.ops.n_q;
        let n = ne * nb * m;
        let corrected = scheme.corrected() && scheme.formulation == Formulation::Pressure;
        let needs_w = corrected;
        let bundle = ResidualBundle {
            r_tilde: vec![0.0; n],
            correction: vec![0.0; n],
            face_flux: vec![0.0; ne * m],
            face_energy: vec![0.0; ne],
            face_dp: vec![0.0; ne],
            face_beta: vec![0.0; ne],
            surface_energy: vec![0.0; ne],
            w_hat: if needs_w { vec![0.0; n] } else { Vec::new() },
            z_hat: if needs_w { vec![0.0; n] } else { Vec::new() },
            z_parts: if needs_w { vec![0.0; ne * nb * ns] } else { Vec::new() },
            uniform: vec![false; ne],
            species_mask: vec![false; ne * ns],
            elements: vec![ElementCorrection::default(); ne],
            stats: CorrectionStats::default(),
        };
        let dummy = PointState {
            rho: 1.0,
            v: 0.0,
            p: 1.0,
            t: 1.0,
            sum_c: 1.0,
            rho_cv: 1.0,
            rho_u: 1.0,
            gamma: 1.4,
            sound_speed: 1.0,
            u_molar: [0.0; MAX_SPECIES],
            n_species: ns,
        };
        Self {
            disc,
            gas,
            scheme,
            m,
            ns,
            bundle,
            trace_ps: vec![dummy; 2 * ne],
            trace_flux: vec![0.0; 2 * ne * m],
            t_guess_q: vec![0.0; ne * nq],
            t_guess_trace: vec![0.0; 2 * ne],
            source: None,
            scratch: vec![0.0; nb * m],
            run_stats: CorrectionStats::default(),
        }
    }

    pub fn with_source(mut self, source: SourceFn) -> Self {
        self.source = Some(source);
        self
    }

    pub fn set_source(&mut self, source: Option<SourceFn>) {
        self.source = source;
    }

    pub fn n_components(&self) -> usize {
        self.m
    }

    pub fn n_dofs(&self) -> usize {
        self.disc.n_elements() * self.disc.n_b() * self.m
    }

    pub fn bundle(&self) -> &ResidualBundle {
        &self.bundle
    }

    fn corrected(&self) -> bool {
        self.scheme.corrected() && self.scheme.formulation == Formulation::Pressure
    }

    /// Assemble the uncorrected residual `R̃`, the projected auxiliary fields
    /// and all face quantities.
    pub fn assemble(&mut self, u: &[f64]) -> Result<(), SolverError> {
        if u.len() != self.n_dofs() {
            return Err(SolverError::StateLength {
                got: u.len(),
                expected: self.n_dofs(),
            });
        }
        let corrected = self.corrected();
        let modified = corrected && self.scheme.correction.variant == CorrectionVariant::Modified;
        let masking = modified && self.scheme.correction.zero_species_masking;
        let form = self.scheme.formulation;
        let (m, ns) = (self.m, self.ns);
        let ne = self.disc.n_elements();
        let Self {
            disc,
            gas,
            bundle,
            trace_ps,
            trace_flux,
            t_guess_q,
            t_guess_trace,
            scheme,
            ..
        } = self;
        let ops = &disc.ops;
        let (nb, nq) = (ops.n_b, ops.n_q);
        let wm = gas.molar_masses();
        let thermo_err = |element: usize| move |source: ThermoError| SolverError::Thermo { element, source };

        bundle.r_tilde.iter_mut().for_each(|v| *v = 0.0);
        bundle.correction.iter_mut().for_each(|v| *v = 0.0);
        bundle.surface_energy.iter_mut().for_each(|v| *v = 0.0);
        if corrected {
            bundle.w_hat.iter_mut().for_each(|v| *v = 0.0);
            bundle.z_hat.iter_mut().for_each(|v| *v = 0.0);
            bundle.z_parts.iter_mut().for_each(|v| *v = 0.0);
        }

        let mut y = [0.0; MAX_COMPONENTS];
        let mut dy = [0.0; MAX_COMPONENTS];
        let mut f = [0.0; MAX_COMPONENTS];
        let mut w = [0.0; MAX_COMPONENTS];

        for e in 0..ne {
            let base = e * nb * m;
            let blk = &u[base..base + nb * m];
            let rt = &mut bundle.r_tilde[base..base + nb * m];
            bundle.uniform[e] = is_uniform_element(
                blk,
                nb,
                m,
                scheme.correction.uniform_tol,
                scheme.correction.uniform_floor,
            );
            for i in 0..ns {
                let avg: f64 = (0..nb).map(|k| blk[k * m + 2 + i]).sum::<f64>();
                bundle.species_mask[e * ns + i] = masking && avg == 0.0;
            }

            for q in 0..nq {
                let vrow = &ops.vq[q * nb..(q + 1) * nb];
                let drow = &ops.dq[q * nb..(q + 1) * nb];
                for c in 0..m {
                    let mut s = 0.0;
                    let mut d = 0.0;
                    for k in 0..nb {
                        let b = blk[k * m + c];
                        s += vrow[k] * b;
                        d += drow[k] * b;
                    }
                    y[c] = s;
                    dy[c] = d;
                }
                let ps = match form {
                    Formulation::Pressure => gas.point_from_pressure_state(&y[..m]),
                    Formulation::Energy => gas.point_from_energy_state(&y[..m], t_guess_q[e * nq + q]),
                }
                .map_err(thermo_err(e))?;
                if form == Formulation::Energy {
                    t_guess_q[e * nq + q] = ps.t;
                }
                physical_flux_from(form, &y[..m], &ps, &mut f);
                let b = if form == Formulation::Pressure {
                    nonconservative_pressure(&ps, &dy, wm)
                } else {
                    0.0
                };
                for k in 0..nb {
                    let a = ops.wdt[k * nq + q];
                    let row = &mut rt[k * m..(k + 1) * m];
                    for c in 0..m {
                        row[c] -= a * f[c];
                    }
                    row[1] += ops.wvt[k * nq + q] * b;
                }
                if corrected {
                    gas.energy_derivative_from_point(&ps, &mut w);
                    let wh = &mut bundle.w_hat[base..base + nb * m];
                    let zh = &mut bundle.z_hat[base..base + nb * m];
                    let zp = &mut bundle.z_parts[e * nb * ns..(e + 1) * nb * ns];
                    for k in 0..nb {
                        let pr = ops.proj[k * nq + q];
                        for c in 0..m {
                            wh[k * m + c] += pr * w[c];
                        }
                        zh[k * m + 1] += pr * ps.p;
                        for i in 0..ns {
                            zp[k * ns + i] += pr * (ps.v * wm[i] * w[2 + i]);
                        }
                    }
                }
            }

            if corrected {
                let wh = &bundle.w_hat[base..base + nb * m];
                let zh = &mut bundle.z_hat[base..base + nb * m];
                let zp = &bundle.z_parts[e * nb * ns..(e + 1) * nb * ns];
                let mask = &bundle.species_mask[e * ns..(e + 1) * ns];
                for k in 0..nb {
                    let mut s = 0.0;
                    for i in 0..ns {
                        if !mask[i] {
                            s += zp[k * ns + i];
                        }
                        zh[k * m + 2 + i] = wh[k * m + 2 + i];
                    }
                    zh[k * m] = s;
                }
            }

            // traces at the element endpoints (Gauss–Lobatto end nodes)
            for (side, k) in [(0usize, 0usize), (1, nb - 1)] {
                let row = &blk[k * m..(k + 1) * m];
                let ti = 2 * e + side;
                let ps = point_state(gas, form, row, t_guess_trace[ti]).map_err(thermo_err(e))?;
                t_guess_trace[ti] = ps.t;
                trace_ps[ti] = ps;
                physical_flux_from(form, row, &ps, &mut trace_flux[ti * m..(ti + 1) * m]);
            }
        }

        // face pass
        let mut flux = [0.0; MAX_COMPONENTS];
        let mut zl = [0.0; MAX_COMPONENTS];
        let mut zr = [0.0; MAX_COMPONENTS];
        let mut stats = CorrectionStats::default();
        for fi in 0..ne {
            let l = (fi + ne - 1) % ne;
            let r = fi;
            let (il, ir) = (2 * l + 1, 2 * r);
            let yl = &u[(l * nb + nb - 1) * m..(l * nb + nb) * m];
            let yr = &u[(r * nb) * m..(r * nb + 1) * m];
            let (psl, psr) = (trace_ps[il], trace_ps[ir]);
            let fl = &trace_flux[il * m..(il + 1) * m];
            let fr = &trace_flux[ir * m..(ir + 1) * m];
            let lam = wave_speed(&psl, &psr, 1.0);
            lax_friedrichs_from(fl, fr, yl, yr, 1.0, lam, &mut flux[..m]);

            let mut dp = 0.0;
            if form == Formulation::Pressure {
                for c in 0..m {
                    y[c] = 0.5 * (yl[c] + yr[c]);
                }
                let avg = gas.point_from_pressure_state(&y[..m]).map_err(thermo_err(r))?;
                dp = pressure_jump_from(&avg, yl, yr, 1.0, wm);
            }

            let (fe_l, fe_r) = (energy_flux_of(&psl), energy_flux_of(&psr));
            let mut beta = 0.0;
            let fe = if corrected {
                let wl = &bundle.w_hat[(l * nb + nb - 1) * m..(l * nb + nb) * m];
                let wr = &bundle.w_hat[(r * nb) * m..(r * nb + 1) * m];
                let dot = |a: &[f64], b: &[f64]| -> f64 { a.iter().zip(b).map(|(x, y)| x * y).sum() };
                let (wf_l, wf_r) = (dot(wl, fl), dot(wr, fr));
                if modified && (bundle.uniform[l] || bundle.uniform[r]) {
                    let pl = &bundle.z_parts[(l * nb + nb - 1) * ns..(l * nb + nb) * ns];
                    let pr = &bundle.z_parts[(r * nb) * ns..(r * nb + 1) * ns];
                    zl[0] = 0.0;
                    zr[0] = 0.0;
                    zl[1] = bundle.z_hat[(l * nb + nb - 1) * m + 1];
                    zr[1] = bundle.z_hat[(r * nb) * m + 1];
                    for i in 0..ns {
                        let face_masked = bundle.species_mask[l * ns + i] && bundle.species_mask[r * ns + i];
                        if face_masked {
                            zl[2 + i] = 0.0;
                            zr[2 + i] = 0.0;
                        } else {
                            zl[0] += pl[i];
                            zr[0] += pr[i];
                            zl[2 + i] = wl[2 + i];
                            zr[2 + i] = wr[2 + i];
                        }
                    }
                    let (b, den) = corrected_flux_in_place(
                        fe_l,
                        fe_r,
                        wf_l,
                        wf_r,
                        wl,
                        wr,
                        &zl[..m],
                        &zr[..m],
                        1.0,
                        scheme.correction.beta_tol,
                        &mut flux[..m],
                    );
                    beta = b;
                    if den >= scheme.correction.beta_tol {
                        stats.face_corrections += 1;
                    } else {
                        stats.beta_zeroed += 1;
                    }
                }
                match scheme.energy_flux {
                    EnergyFluxVariant::Modified => energy_flux_modified(fe_l, fe_r, wf_l, wf_r, wl, wr, &flux[..m], 1.0),
                    EnergyFluxVariant::LaxFriedrichs => energy_flux_lf(&psl, &psr, 1.0, lam),
                }
            } else if form == Formulation::Energy {
                flux[1]
            } else {
                energy_flux_lf(&psl, &psr, 1.0, lam)
            };

            bundle.face_flux[fi * m..(fi + 1) * m].copy_from_slice(&flux[..m]);
            bundle.face_energy[fi] = fe;
            bundle.face_dp[fi] = dp;
            bundle.face_beta[fi] = beta;
            bundle.surface_energy[l] += fe;
            bundle.surface_energy[r] -= fe;
            let lrow = (l * nb + nb - 1) * m;
            let rrow = (r * nb) * m;
            for c in 0..m {
                bundle.r_tilde[lrow + c] += flux[c];
                bundle.r_tilde[rrow + c] -= flux[c];
            }
            bundle.r_tilde[lrow + 1] += dp;
            bundle.r_tilde[rrow + 1] += dp;
        }
        bundle.stats = stats;
        Ok(())
    }

    /// Compute the elementwise corrections from the last [`assemble`](Self::assemble).
    pub fn apply_corrections(&mut self) {
        let corrected = self.corrected();
        let (m, ns) = (self.m, self.ns);
        let ne = self.disc.n_elements();
        let nb = self.disc.n_b();
        let cfg = self.scheme.correction;
        let b = &mut self.bundle;
        if !corrected {
            b.stats.evaluations += 1;
            self.run_stats.merge(&b.stats);
            return;
        }
        let modified = cfg.variant == CorrectionVariant::Modified;
        let mut masked = [false; MAX_COMPONENTS];
        for e in 0..ne {
            let base = e * nb * m;
            let r_out = &mut b.correction[base..base + nb * m];
            if modified && b.uniform[e] {
                r_out.iter_mut().for_each(|v| *v = 0.0);
                b.elements[e] = ElementCorrection {
                    status: CorrectionStatus::Uniform,
                    ..Default::default()
                };
                b.stats.uniform_elements += 1;
                continue;
            }
            let rt = &b.r_tilde[base..base + nb * m];
            let wh = &b.w_hat[base..base + nb * m];
            let mut s = 0.0;
            let mut scale = b.surface_energy[e].abs();
            for (r, w) in rt.iter().zip(wh) {
                s += r * w;
                scale += (r * w).abs();
            }
            let err = b.surface_energy[e] - s;
            for i in 0..ns {
                masked[2 + i] = b.species_mask[e * ns + i];
            }
            let dirs = if modified { &b.z_hat[base..base + nb * m] } else { wh };
            let ec = elementwise_correction(wh, dirs, err, nb, m, &masked[..m], cfg.alpha_tol, r_out);
            match ec.status {
                CorrectionStatus::Active => {
                    b.stats.alpha_active += 1;
                    let mut total = 0.0;
                    for k in 0..nb * m {
                        total += wh[k] * (rt[k] + r_out[k]);
                        scale += (wh[k] * r_out[k]).abs();
                    }
                    let rel = (total - b.surface_energy[e]).abs() / scale.max(f64::MIN_POSITIVE);
                    b.stats.max_constraint_residual = b.stats.max_constraint_residual.max(rel);
                }
                CorrectionStatus::NegativeDenominator => {
                    b.stats.negative_denominators += 1;
                    b.stats.alpha_zeroed += 1;
                }
                _ => b.stats.alpha_zeroed += 1,
            }
            b.elements[e] = ec;
        }
        b.stats.evaluations += 1;
        self.run_stats.merge(&b.stats);
    }

    /// `dŷ/dt = M⁻¹(−(R̃ + r) + S)` at time `t`.
    pub fn rhs(&mut self, u: &[f64], t: f64, dudt: &mut [f64]) -> Result<(), SolverError> {
        self.assemble(u)?;
        self.apply_corrections();
        let m = self.m;
        let ne = self.disc.n_elements();
        let ops = &self.disc.ops;
        let (nb, nq) = (ops.n_b, ops.n_q);
        for (i, d) in dudt.iter_mut().enumerate() {
            *d = -(self.bundle.r_tilde[i] + self.bundle.correction[i]);
        }
        if let Some(src) = &self.source {
            let mut s = [0.0; MAX_COMPONENTS];
            for e in 0..ne {
                for q in 0..nq {
                    let x = self.disc.mesh.x_of(e, ops.xi_q[q]);
                    s[..m].iter_mut().for_each(|v| *v = 0.0);
                    src(x, t, &mut s[..m]);
                    for k in 0..nb {
                        let a = ops.wvt[k * nq + q];
                        for c in 0..m {
                            dudt[(e * nb + k) * m + c] += a * s[c];
                        }
                    }
                }
            }
        }
        for e in 0..ne {
            let blk = &mut dudt[e * nb * m..(e + 1) * nb * m];
            ops.apply_mass_inv(blk, m, &mut self.scratch);
        }
        Ok(())
    }

    /// Thermodynamic state at every solution node.
    pub fn nodal_states(&self, u: &[f64]) -> Result<Vec<PointState>, SolverError> {
        let m = self.m;
        let nb = self.disc.n_b();
        let mut out = Vec::with_capacity(u.len() / m);
        for (j, row) in u.chunks_exact(m).enumerate() {
            let guess = self.t_guess_trace.get(2 * (j / nb)).copied().unwrap_or(0.0);
            let ps = point_state(&self.gas, self.scheme.formulation, row, guess)
                .map_err(|source| SolverError::Thermo { element: j / nb, source })?;
            out.push(ps);
        }
        Ok(out)
    }

    /// Largest `|v| + c` over the solution nodes.
    pub fn max_wave_speed(&self, u: &[f64]) -> Result<f64, SolverError> {
        Ok(self
            .nodal_states(u)?
            .iter()
            .map(|ps| ps.v.abs() + ps.sound_speed)
            .fold(0.0, f64::max))
    }
}
