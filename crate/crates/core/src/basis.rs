//! Periodic 1D mesh, Gauss–Lobatto nodal basis, quadrature rules and the
//! per-element discrete operators.
//!
//! All per-element matrices are stored row-major in flat vectors and already
//! include the affine Jacobian `h/2` (weights) or `2/h` (derivatives).

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const MAX_DEGREE: usize = 6;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BasisError {
    #[error("polynomial degree {0} unsupported (1..={MAX_DEGREE})")]
    UnsupportedDegree(usize),
    #[error("mesh needs at least 2 elements, got {0}")]
    TooFewElements(usize),
    #[error("invalid domain [{0}, {1}]")]
    BadDomain(f64, f64),
    #[error("mass matrix is not positive definite")]
    SingularMass,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IntegrationMode {
    /// Quadrature at the Gauss–Lobatto solution nodes, lumped mass.
    Colocated,
    /// Gauss–Legendre quadrature with `p + 2` points, exact mass.
    Overintegrated,
}

/// Legendre polynomial `P_n(x)` and its derivative.
pub fn legendre(n: usize, x: f64) -> (f64, f64) {
    if n == 0 {
        return (1.0, 0.0);
    }
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let nf = n as f64;
    let dp = if (x * x - 1.0).abs() < 1e-300 {
        // endpoint limit
        0.5 * nf * (nf + 1.0) * x.powi(n as i32 + 1)
    } else {
        nf * (x * p1 - p0) / (x * x - 1.0)
    };
    (p1, dp)
}

/// Gauss–Legendre rule with `n` points on [−1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n {
        let mut xi = -(std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre(n, xi);
            let dx = p / dp;
            xi -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, dp) = legendre(n, xi);
        x[i] = xi;
        w[i] = 2.0 / ((1.0 - xi * xi) * dp * dp);
    }
    symmetrize(&mut x, &mut w);
    (x, w)
}

/// Gauss–Lobatto rule with `n ≥ 2` points on [−1, 1].
pub fn gauss_lobatto(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 2);
    let m = n - 1;
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    x[0] = -1.0;
    x[m] = 1.0;
    // interior nodes are roots of P'_m, found by Newton on P'_m
    for i in 1..m {
        let mut xi = -(std::f64::consts::PI * i as f64 / m as f64).cos();
        for _ in 0..100 {
            let (p, dp) = legendre(m, xi);
            // P''_m from the Legendre ODE
            let d2p = (2.0 * xi * dp - (m * (m + 1)) as f64 * p) / (1.0 - xi * xi);
            let dx = dp / d2p;
            xi -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        x[i] = xi;
    }
    let mf = m as f64;
    for i in 0..n {
        let (p, _) = legendre(m, x[i]);
        w[i] = 2.0 / (mf * (mf + 1.0) * p * p);
    }
    symmetrize(&mut x, &mut w);
    (x, w)
}

fn symmetrize(x: &mut [f64], w: &mut [f64]) {
    let n = x.len();
    for i in 0..n / 2 {
        let j = n - 1 - i;
        let a = 0.5 * (x[j] - x[i]);
        let b = 0.5 * (w[i] + w[j]);
        x[i] = -a;
        x[j] = a;
        w[i] = b;
        w[j] = b;
    }
    if n % 2 == 1 {
        x[n / 2] = 0.0;
    }
}

/// Values of the Lagrange polynomials on `nodes` at `x`.
pub fn lagrange_values(nodes: &[f64], x: f64) -> Vec<f64> {
    let n = nodes.len();
    (0..n)
        .map(|j| {
            let mut l = 1.0;
            for k in 0..n {
                if k != j {
                    l *= (x - nodes[k]) / (nodes[j] - nodes[k]);
                }
            }
            l
        })
        .collect()
}

/// Derivatives of the Lagrange polynomials on `nodes` at `x`.
pub fn lagrange_derivatives(nodes: &[f64], x: f64) -> Vec<f64> {
    let n = nodes.len();
    (0..n)
        .map(|j| {
            let mut s = 0.0;
            for m in 0..n {
                if m == j {
                    continue;
                }
                let mut term = 1.0 / (nodes[j] - nodes[m]);
                for k in 0..n {
                    if k != j && k != m {
                        term *= (x - nodes[k]) / (nodes[j] - nodes[k]);
                    }
                }
                s += term;
            }
            s
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mesh1D {
    pub n_elements: usize,
    pub x_left: f64,
    pub x_right: f64,
}

impl Mesh1D {
    pub fn new(n_elements: usize, x_left: f64, x_right: f64) -> Result<Self, BasisError> {
        if n_elements < 2 {
            return Err(BasisError::TooFewElements(n_elements));
        }
        if !(x_right > x_left) || !x_left.is_finite() || !x_right.is_finite() {
            return Err(BasisError::BadDomain(x_left, x_right));
        }
        Ok(Self {
            n_elements,
            x_left,
            x_right,
        })
    }

    pub fn length(&self) -> f64 {
        self.x_right - self.x_left
    }

    pub fn h(&self) -> f64 {
        self.length() / self.n_elements as f64
    }

    pub fn element_center(&self, e: usize) -> f64 {
        self.x_left + (e as f64 + 0.5) * self.h()
    }

    /// Physical coordinate of reference point `xi` in element `e`.
    pub fn x_of(&self, e: usize, xi: f64) -> f64 {
        self.element_center(e) + 0.5 * self.h() * xi
    }

    /// Map a coordinate into the periodic domain.
    pub fn wrap(&self, x: f64) -> f64 {
        let l = self.length();
        let r = (x - self.x_left).rem_euclid(l);
        self.x_left + r
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Basis {
    pub p: usize,
    /// Gauss–Lobatto nodes on [−1, 1].
    pub nodes: Vec<f64>,
}

impl Basis {
    pub fn new(p: usize) -> Result<Self, BasisError> {
        if p == 0 || p > MAX_DEGREE {
            return Err(BasisError::UnsupportedDegree(p));
        }
        Ok(Self {
            p,
            nodes: gauss_lobatto(p + 1).0,
        })
    }

    pub fn n_b(&self) -> usize {
        self.p + 1
    }

    pub fn values(&self, xi: f64) -> Vec<f64> {
        lagrange_values(&self.nodes, xi)
    }

    pub fn derivatives(&self, xi: f64) -> Vec<f64> {
        lagrange_derivatives(&self.nodes, xi)
    }
}

/// Discrete operators of one (any) element.
#[derive(Debug, Clone)]
pub struct Operators {
    pub mode: IntegrationMode,
    pub n_b: usize,
    pub n_q: usize,
    /// Reference quadrature points.
    pub xi_q: Vec<f64>,
    /// Quadrature weights including the Jacobian `h/2`.
    pub w_q: Vec<f64>,
    /// `n_q × n_b` interpolation to quadrature points.
    pub vq: Vec<f64>,
    /// `n_q × n_b` physical derivative at quadrature points.
    pub dq: Vec<f64>,
    /// `n_b × n_q`: `w_q φ_k(x_q)`.
    pub wvt: Vec<f64>,
    /// `n_b × n_q`: `w_q φ'_k(x_q)`.
    pub wdt: Vec<f64>,
    /// `n_b × n_b` mass matrix and its inverse.
    pub mass: Vec<f64>,
    pub mass_inv: Vec<f64>,
    /// `n_b × n_q` projection `M⁻¹ V_qᵀ W`.
    pub proj: Vec<f64>,
    pub lumped: bool,
}

impl Operators {
    pub fn new(basis: &Basis, h: f64, mode: IntegrationMode) -> Result<Self, BasisError> {
        let n_b = basis.n_b();
        let (xi_q, w_ref) = match mode {
            IntegrationMode::Colocated => gauss_lobatto(n_b),
            IntegrationMode::Overintegrated => gauss_legendre(basis.p + 2),
        };
        let n_q = xi_q.len();
        let jac = 0.5 * h;
        let w_q: Vec<f64> = w_ref.iter().map(|w| w * jac).collect();
        let mut vq = vec![0.0; n_q * n_b];
        let mut dq = vec![0.0; n_q * n_b];
        for (q, &xi) in xi_q.iter().enumerate() {
            let v = basis.values(xi);
            let d = basis.derivatives(xi);
            for k in 0..n_b {
                vq[q * n_b + k] = v[k];
                dq[q * n_b + k] = d[k] / jac;
            }
        }
        if mode == IntegrationMode::Colocated {
            // exact cardinality at the nodes
            vq.iter_mut().enumerate().for_each(|(i, v)| {
                *v = if i / n_b == i % n_b { 1.0 } else { 0.0 };
            });
        }
        let mut wvt = vec![0.0; n_b * n_q];
        let mut wdt = vec![0.0; n_b * n_q];
        for k in 0..n_b {
            for q in 0..n_q {
                wvt[k * n_q + q] = w_q[q] * vq[q * n_b + k];
                wdt[k * n_q + q] = w_q[q] * dq[q * n_b + k];
            }
        }
        let mut mass = vec![0.0; n_b * n_b];
        for i in 0..n_b {
            for j in 0..n_b {
                mass[i * n_b + j] = (0..n_q).map(|q| wvt[i * n_q + q] * vq[q * n_b + j]).sum();
            }
        }
        let lumped = mode == IntegrationMode::Colocated;
        let mass_inv = if lumped {
            let mut inv = vec![0.0; n_b * n_b];
            for i in 0..n_b {
                inv[i * n_b + i] = 1.0 / mass[i * n_b + i];
            }
            inv
        } else {
            let m = DMatrix::from_row_slice(n_b, n_b, &mass);
            let chol = m.cholesky().ok_or(BasisError::SingularMass)?;
            let inv = chol.inverse();
            let mut out = vec![0.0; n_b * n_b];
            for i in 0..n_b {
                for j in 0..n_b {
                    out[i * n_b + j] = 0.5 * (inv[(i, j)] + inv[(j, i)]);
                }
            }
            out
        };
        let mut proj = vec![0.0; n_b * n_q];
        for k in 0..n_b {
            for q in 0..n_q {
                proj[k * n_q + q] = if lumped {
                    wvt[k * n_q + q] / mass[k * n_b + k]
                } else {
                    (0..n_b).map(|j| mass_inv[k * n_b + j] * wvt[j * n_q + q]).sum()
                };
            }
        }
        if lumped {
            // projection at colocated nodes is the identity
            for k in 0..n_b {
                for q in 0..n_q {
                    proj[k * n_q + q] = if k == q { 1.0 } else { 0.0 };
                }
            }
        }
        Ok(Self {
            mode,
            n_b,
            n_q,
            xi_q,
            w_q,
            vq,
            dq,
            wvt,
            wdt,
            mass,
            mass_inv,
            proj,
            lumped,
        })
    }

    /// Quadrature-based L² projection of one scalar field sampled at the
    /// quadrature points.
    pub fn l2_project(&self, values_q: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n_b];
        for k in 0..self.n_b {
            out[k] = (0..self.n_q).map(|q| self.proj[k * self.n_q + q] * values_q[q]).sum();
        }
        out
    }

    /// Interpolate one scalar field's nodal coefficients to quadrature points.
    pub fn interpolate(&self, coeffs: &[f64]) -> Vec<f64> {
        (0..self.n_q)
            .map(|q| (0..self.n_b).map(|k| self.vq[q * self.n_b + k] * coeffs[k]).sum())
            .collect()
    }

    /// Apply `M⁻¹` in place to an `n_b × m` block (row-major, stride `m`).
    #[inline]
    pub fn apply_mass_inv(&self, block: &mut [f64], m: usize, scratch: &mut [f64]) {
        let n_b = self.n_b;
        if self.lumped {
            for k in 0..n_b {
                let s = self.mass_inv[k * n_b + k];
                for c in 0..m {
                    block[k * m + c] *= s;
                }
            }
            return;
        }
        scratch[..n_b * m].copy_from_slice(&block[..n_b * m]);
        for k in 0..n_b {
            for c in 0..m {
                let mut s = 0.0;
                for j in 0..n_b {
                    s += self.mass_inv[k * n_b + j] * scratch[j * m + c];
                }
                block[k * m + c] = s;
            }
        }
    }
}

/// Mesh, basis and operators bundled together.
#[derive(Debug, Clone)]
pub struct Discretization {
    pub mesh: Mesh1D,
    pub basis: Basis,
    pub ops: Operators,
}

impl Discretization {
    pub fn n_elements(&self) -> usize {
        self.mesh.n_elements
    }

    pub fn n_b(&self) -> usize {
        self.basis.n_b()
    }

    /// Physical coordinates of the solution nodes of element `e`.
    pub fn node_coordinates(&self, e: usize) -> Vec<f64> {
        self.basis.nodes.iter().map(|&xi| self.mesh.x_of(e, xi)).collect()
    }

    /// Physical coordinates of the quadrature points of element `e`.
    pub fn quadrature_coordinates(&self, e: usize) -> Vec<f64> {
        self.ops.xi_q.iter().map(|&xi| self.mesh.x_of(e, xi)).collect()
    }
}

pub fn build_discretization(
    n_elements: usize,
    p: usize,
    mode: IntegrationMode,
    x_left: f64,
    x_right: f64,
) -> Result<Discretization, BasisError> {
    let mesh = Mesh1D::new(n_elements, x_left, x_right)?;
    let basis = Basis::new(p)?;
    let ops = Operators::new(&basis, mesh.h(), mode)?;
    Ok(Discretization { mesh, basis, ops })
}

/// Arithmetic mean of nodal coefficients.
pub fn element_average(coeffs: &[f64]) -> f64 {
    coeffs.iter().sum::<f64>() / coeffs.len() as f64
}

/// Pairwise (cascade) summation for reproducible, accurate reductions.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    const BLOCK: usize = 16;
    if values.len() <= BLOCK {
        return values.iter().sum();
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

/// `Σ_e Σ_q w_q f(y(x_q))` for a solution stored as `[(e · n_b + k) · m + c]`.
pub fn integrate_global<F>(coeffs: &[f64], m: usize, disc: &Discretization, mut f: F) -> f64
where
    F: FnMut(&[f64]) -> f64,
{
    let ops = &disc.ops;
    let n_b = ops.n_b;
    let mut y = vec![0.0; m];
    let mut contributions = Vec::with_capacity(disc.n_elements() * ops.n_q);
    for e in 0..disc.n_elements() {
        let block = &coeffs[e * n_b * m..(e + 1) * n_b * m];
        for q in 0..ops.n_q {
            y.iter_mut().for_each(|v| *v = 0.0);
            for k in 0..n_b {
                let phi = ops.vq[q * n_b + k];
                for c in 0..m {
                    y[c] += phi * block[k * m + c];
                }
            }
            contributions.push(ops.w_q[q] * f(&y));
        }
    }
    pairwise_sum(&contributions)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn monomial_integral(k: usize) -> f64 {
        if k % 2 == 1 {
            0.0
        } else {
            2.0 / (k as f64 + 1.0)
        }
    }

    #[test]
    fn quadrature_exactness() {
        for n in 1..=8 {
            let (x, w) = gauss_legendre(n);
            for k in 0..2 * n {
                let s: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(k as i32)).sum();
                assert!((s - monomial_integral(k)).abs() < 1e-14, "GL n={n} k={k}");
            }
        }
        for n in 2..=8 {
            let (x, w) = gauss_lobatto(n);
            for k in 0..2 * n - 2 {
                let s: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(k as i32)).sum();
                assert!((s - monomial_integral(k)).abs() < 1e-14, "GLL n={n} k={k}");
            }
        }
    }

    #[test]
    fn known_lobatto_points() {
        let (x, w) = gauss_lobatto(4);
        let a = (1.0f64 / 5.0).sqrt();
        assert_relative_eq!(x[1], -a, epsilon = 1e-15);
        assert_relative_eq!(w[0], 1.0 / 6.0, epsilon = 1e-15);
        assert_relative_eq!(w[1], 5.0 / 6.0, epsilon = 1e-15);
    }

    #[test]
    fn cardinality() {
        for p in 1..=MAX_DEGREE {
            let b = Basis::new(p).unwrap();
            for (i, &xi) in b.nodes.iter().enumerate() {
                let v = b.values(xi);
                for (j, vj) in v.iter().enumerate() {
                    assert!((vj - if i == j { 1.0 } else { 0.0 }).abs() < 1e-14);
                }
            }
            assert!(b.nodes.windows(2).all(|w| w[0] < w[1]));
        }
        assert!(Basis::new(0).is_err());
        assert!(Basis::new(7).is_err());
    }

    #[test]
    fn p1_exact_mass_matrix() {
        let h = 0.3;
        let d = build_discretization(4, 1, IntegrationMode::Overintegrated, 0.0, 1.2).unwrap();
        let expect = [2.0, 1.0, 1.0, 2.0];
        for (m, e) in d.ops.mass.iter().zip(expect) {
            assert_relative_eq!(*m, h / 6.0 * e, epsilon = 1e-15);
        }
    }

    #[test]
    fn mass_sums_to_volume_and_is_spd() {
        for p in 1..=MAX_DEGREE {
            for mode in [IntegrationMode::Colocated, IntegrationMode::Overintegrated] {
                let d = build_discretization(5, p, mode, -0.5, 0.5).unwrap();
                let total: f64 = d.ops.mass.iter().sum();
                assert_relative_eq!(total, 0.2, epsilon = 1e-14);
                let m = DMatrix::from_row_slice(p + 1, p + 1, &d.ops.mass);
                assert!(m.clone().cholesky().is_some());
                let prod = &m * DMatrix::from_row_slice(p + 1, p + 1, &d.ops.mass_inv);
                assert!((prod - DMatrix::identity(p + 1, p + 1)).amax() < 1e-11);
            }
        }
    }

    #[test]
    fn colocated_mass_is_diagonal_lobatto_weights() {
        let d = build_discretization(4, 2, IntegrationMode::Colocated, 0.0, 2.0).unwrap();
        let (_, w) = gauss_lobatto(3);
        for i in 0..3 {
            for j in 0..3 {
                let expect = if i == j { w[i] * 0.25 } else { 0.0 };
                assert!((d.ops.mass[i * 3 + j] - expect).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn interpolation_reproduces_constants_and_divergence_identity() {
        for p in 1..=MAX_DEGREE {
            for mode in [IntegrationMode::Colocated, IntegrationMode::Overintegrated] {
                let d = build_discretization(3, p, mode, 0.0, 1.0).unwrap();
                let o = &d.ops;
                for q in 0..o.n_q {
                    let s: f64 = o.vq[q * o.n_b..(q + 1) * o.n_b].iter().sum();
                    assert!((s - 1.0).abs() < 1e-14);
                }
                // ∫ φ'_i = φ_i(1) − φ_i(−1)
                for i in 0..o.n_b {
                    let s: f64 = o.wdt[i * o.n_q..(i + 1) * o.n_q].iter().sum();
                    let expect = if i == o.n_b - 1 {
                        1.0
                    } else if i == 0 {
                        -1.0
                    } else {
                        0.0
                    };
                    assert!((s - expect).abs() < 1e-12, "p={p} i={i} {s}");
                }
            }
        }
    }

    #[test]
    fn integration_by_parts() {
        // ∫ φ'_i f + ∫ φ_i f' = [φ_i f] for f in V_h^p, exact quadrature
        let p = 3;
        let d = build_discretization(3, p, IntegrationMode::Overintegrated, 0.0, 1.0).unwrap();
        let o = &d.ops;
        let f: Vec<f64> = (0..o.n_b).map(|k| (k as f64 * 0.7).sin() + 0.3).collect();
        let fq = o.interpolate(&f);
        let dfq: Vec<f64> = (0..o.n_q)
            .map(|q| (0..o.n_b).map(|k| o.dq[q * o.n_b + k] * f[k]).sum())
            .collect();
        for i in 0..o.n_b {
            let lhs: f64 = (0..o.n_q)
                .map(|q| o.wdt[i * o.n_q + q] * fq[q] + o.wvt[i * o.n_q + q] * dfq[q])
                .sum();
            let rhs = if i == o.n_b - 1 {
                f[o.n_b - 1]
            } else if i == 0 {
                -f[0]
            } else {
                0.0
            };
            assert!((lhs - rhs).abs() < 1e-12);
        }
    }

    #[test]
    fn projection_is_exact_on_polynomials_and_idempotent() {
        for mode in [IntegrationMode::Colocated, IntegrationMode::Overintegrated] {
            let d = build_discretization(3, 3, mode, 0.0, 1.0).unwrap();
            let o = &d.ops;
            let c = [0.5, -1.2, 2.0, 0.1];
            let vals = o.interpolate(&c);
            let back = o.l2_project(&vals);
            for (a, b) in c.iter().zip(&back) {
                assert!((a - b).abs() < 1e-13);
            }
            let const_field = vec![3.25; o.n_q];
            assert!(o.l2_project(&const_field).iter().all(|v| (v - 3.25).abs() < 1e-14));
        }
        let d = build_discretization(3, 3, IntegrationMode::Colocated, 0.0, 1.0).unwrap();
        let vals = [0.1, 0.2, 0.7, -3.0];
        assert_eq!(d.ops.l2_project(&vals), vals.to_vec());
    }

    #[test]
    fn global_integrals() {
        let d = build_discretization(6, 2, IntegrationMode::Overintegrated, -0.5, 0.5).unwrap();
        let m = 1;
        let mut coeffs = vec![0.0; 6 * 3];
        for e in 0..6 {
            for (k, x) in d.node_coordinates(e).iter().enumerate() {
                coeffs[e * 3 + k] = 2.0 + 3.0 * x;
            }
        }
        assert_relative_eq!(integrate_global(&coeffs, m, &d, |_| 1.0), 1.0, epsilon = 1e-14);
        assert_relative_eq!(integrate_global(&coeffs, m, &d, |y| y[0]), 2.0, epsilon = 1e-14);
    }

    #[test]
    fn averages() {
        assert_eq!(element_average(&[4.0, 4.0, 4.0]), 4.0);
        assert_eq!(element_average(&[0.0, 2.0]), 1.0);
        // odd node count: symmetric nodes, antisymmetric values about center c
        let b = Basis::new(4).unwrap();
        let c = 1.5;
        let vals: Vec<f64> = b.nodes.iter().map(|x| c + x.powi(3) - 0.3 * x).collect();
        assert!((element_average(&vals) - c).abs() < 1e-15);
    }

    #[test]
    fn pairwise_matches_naive_for_small_input() {
        let v: Vec<f64> = (0..100).map(|i| i as f64).collect();
        assert_eq!(pairwise_sum(&v), 4950.0);
    }

    #[test]
    fn wrap_coordinates() {
        let m = Mesh1D::new(4, -0.5, 0.5).unwrap();
        assert!((m.wrap(0.7) - (-0.3)).abs() < 1e-15);
        assert!((m.wrap(-0.6) - 0.4).abs() < 1e-15);
    }
}
