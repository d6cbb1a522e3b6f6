//! Explicit time integration: Forward Euler and three-stage SSPRK3.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::residual::{DgOperator, SolverError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum TimeScheme {
    ForwardEuler,
    #[default]
    Ssprk3,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TimeError {
    #[error("invalid step control: {0}")]
    InvalidControl(String),
    #[error("non-finite state at t = {t} (stage {stage})")]
    NonFiniteState { t: f64, stage: usize },
    #[error("solver failure at t = {t}: {source}")]
    Solver {
        t: f64,
        #[source]
        source: SolverError,
    },
}

impl TimeError {
    /// Failures that mean the solution blew up rather than a setup mistake.
    pub fn is_divergence(&self) -> bool {
        !matches!(self, TimeError::InvalidControl(_))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepControl {
    pub cfl: Option<f64>,
    pub dt_fixed: Option<f64>,
    pub t_end: f64,
    pub max_steps: u64,
}

impl StepControl {
    pub fn with_cfl(cfl: f64, t_end: f64) -> Self {
        Self {
            cfl: Some(cfl),
            dt_fixed: None,
            t_end,
            max_steps: u64::MAX,
        }
    }

    pub fn with_dt(dt: f64, t_end: f64) -> Self {
        Self {
            cfl: None,
            dt_fixed: Some(dt),
            t_end,
            max_steps: u64::MAX,
        }
    }

    pub fn validate(&self) -> Result<(), TimeError> {
        match (self.cfl, self.dt_fixed) {
            (Some(c), None) if c > 0.0 && c <= 1.0 => {}
            (Some(c), None) => return Err(TimeError::InvalidControl(format!("cfl = {c} outside (0, 1]"))),
            (None, Some(dt)) if dt > 0.0 && dt.is_finite() => {}
            (None, Some(dt)) => return Err(TimeError::InvalidControl(format!("dt = {dt} must be positive"))),
            _ => return Err(TimeError::InvalidControl("exactly one of cfl and dt must be set".into())),
        }
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return Err(TimeError::InvalidControl(format!("t_end = {} must be nonnegative", self.t_end)));
        }
        Ok(())
    }
}

/// `Δt = cfl · h / ((2p + 1) · max(|v| + c))` over the solution nodes.
pub fn stable_timestep(op: &DgOperator, u: &[f64], cfl: f64) -> Result<f64, SolverError> {
    let s = op.max_wave_speed(u)?;
    let p = op.disc.basis.p as f64;
    Ok(cfl * op.disc.mesh.h() / ((2.0 * p + 1.0) * s))
}

fn check_finite(u: &[f64], t: f64, stage: usize) -> Result<(), TimeError> {
    if u.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(TimeError::NonFiniteState { t, stage })
    }
}

/// Anything that evaluates `du/dt = L(u, t)`.
pub trait Rhs {
    fn eval(&mut self, u: &[f64], t: f64, dudt: &mut [f64]) -> Result<(), SolverError>;
}

impl Rhs for DgOperator {
    fn eval(&mut self, u: &[f64], t: f64, dudt: &mut [f64]) -> Result<(), SolverError> {
        self.rhs(u, t, dudt)
    }
}

/// Stage storage reused across steps.
pub struct Integrator {
    pub scheme: TimeScheme,
    k: Vec<f64>,
    stage: Vec<f64>,
}

impl Integrator {
    pub fn new(scheme: TimeScheme, n_dofs: usize) -> Self {
        Self {
            scheme,
            k: vec![0.0; n_dofs],
            stage: vec![0.0; n_dofs],
        }
    }

    /// `k = L(stage, t)`.
    fn eval<R: Rhs>(&mut self, op: &mut R, t: f64) -> Result<(), TimeError> {
        op.eval(&self.stage, t, &mut self.k).map_err(|source| TimeError::Solver { t, source })
    }

    /// Advance `u` from `t` by `dt` in place.
    pub fn step<R: Rhs>(&mut self, op: &mut R, u: &mut [f64], t: f64, dt: f64) -> Result<(), TimeError> {
        match self.scheme {
            TimeScheme::ForwardEuler => {
                self.stage.copy_from_slice(u);
                self.eval(op, t)?;
                for (a, k) in u.iter_mut().zip(&self.k) {
                    *a += dt * k;
                }
                check_finite(u, t + dt, 1)
            }
            TimeScheme::Ssprk3 => {
                // u1 = u + dt L(u)
                self.stage.copy_from_slice(u);
                self.eval(op, t)?;
                for (s, k) in self.stage.iter_mut().zip(&self.k) {
                    *s += dt * k;
                }
                check_finite(&self.stage, t + dt, 1)?;
                // u2 = 3/4 u + 1/4 (u1 + dt L(u1))
                self.eval(op, t + dt)?;
                for ((s, k), a) in self.stage.iter_mut().zip(&self.k).zip(u.iter()) {
                    *s = 0.75 * a + 0.25 * (*s + dt * k);
                }
                check_finite(&self.stage, t + 0.5 * dt, 2)?;
                // u = 1/3 u + 2/3 (u2 + dt L(u2))
                self.eval(op, t + 0.5 * dt)?;
                for ((a, s), k) in u.iter_mut().zip(&self.stage).zip(&self.k) {
                    *a = *a / 3.0 + 2.0 / 3.0 * (s + dt * k);
                }
                check_finite(u, t + dt, 3)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IntegrationOutcome {
    pub t: f64,
    pub steps: u64,
    /// Time and cause of failure if the solution diverged.
    pub divergence: Option<(f64, String)>,
}

/// March `u` to `control.t_end`, calling `observe(op, t, steps, u)` after every
/// step. The last step is shortened to land on `t_end`.
pub fn integrate<F>(
    op: &mut DgOperator,
    scheme: TimeScheme,
    u: &mut [f64],
    t0: f64,
    control: &StepControl,
    mut observe: F,
) -> Result<IntegrationOutcome, TimeError>
where
    F: FnMut(&DgOperator, f64, u64, &[f64]),
{
    control.validate()?;
    let mut integ = Integrator::new(scheme, u.len());
    let mut t = t0;
    let mut steps = 0u64;
    let eps = 1e-12 * control.t_end.abs().max(1.0);
    while t < control.t_end - eps && steps < control.max_steps {
        let dt = match (control.cfl, control.dt_fixed) {
            (Some(cfl), _) => match stable_timestep(op, u, cfl) {
                Ok(dt) if dt.is_finite() && dt > 0.0 => dt,
                Ok(dt) => {
                    return Ok(IntegrationOutcome {
                        t,
                        steps,
                        divergence: Some((t, format!("invalid time step {dt}"))),
                    })
                }
                Err(e) => {
                    return Ok(IntegrationOutcome {
                        t,
                        steps,
                        divergence: Some((t, e.to_string())),
                    })
                }
            },
            (None, Some(dt)) => dt,
            (None, None) => unreachable!("validated"),
        };
        let dt = dt.min(control.t_end - t);
        match integ.step(op, u, t, dt) {
            Ok(()) => {}
            Err(e) if e.is_divergence() => {
                return Ok(IntegrationOutcome {
                    t,
                    steps,
                    divergence: Some((t, e.to_string())),
                })
            }
            Err(e) => return Err(e),
        }
        t += dt;
        steps += 1;
        observe(op, t, steps, u);
    }
    Ok(IntegrationOutcome {
        t,
        steps,
        divergence: None,
    })
}
