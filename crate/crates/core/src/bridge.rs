//! The change of variables `Φ: β ↦ (u, γ)` rooted at a base vertex `i0`,
//! where `e^{u_j} = G(i0, j) / G(i0, i0)` and `γ = 1 / (2 G(i0, i0))`, and
//! the VRJP mixing density `Q^{W,φ}_{i0}`.
//!
//! Conventions: these functions take initial local times `φ`; the matching
//! potential law is `ν^{W,θ}` with `θ = φ²`.

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::DMatrix;
use rand::Rng;

use crate::beta_family::{check_positive, BetaField, BetaSampler, FamilyParams};
use crate::error::{LinalgError, ParamError};
use crate::graph::{spanning_tree_polynomial, Network, VertexOrdering};
use crate::linalg::{
    green_column_from, log_determinant, lu_factorize, positive_stability_certificate,
    PotentialMatrix, TriangularFactors,
};

/// A field `u` on the vertices with `u[base] = 0`, and the initial local times `φ`.
#[derive(Debug, Clone, PartialEq)]
pub struct UField {
    net: Arc<Network>,
    base: usize,
    u: Vec<f64>,
    phi: Vec<f64>,
}

impl UField {
    pub fn new(
        net: impl Into<Arc<Network>>,
        base: usize,
        u: Vec<f64>,
        phi: Vec<f64>,
    ) -> Result<Self, ParamError> {
        let net = net.into();
        let n = net.n();
        if base >= n {
            return Err(ParamError::Invalid(format!("base vertex {base} out of range")));
        }
        if u.len() != n {
            return Err(ParamError::Length {
                name: "u",
                expected: n,
                got: u.len(),
            });
        }
        if u[base] != 0.0 {
            return Err(ParamError::Invalid(format!(
                "u must vanish at the base vertex, got u[{base}] = {}",
                u[base]
            )));
        }
        if u.iter().any(|x| !x.is_finite()) {
            return Err(ParamError::Invalid("u must be finite".into()));
        }
        check_positive("phi", &phi, n)?;
        Ok(Self { net, base, u, phi })
    }

    pub fn net(&self) -> &Network {
        &self.net
    }

    pub fn base(&self) -> usize {
        self.base
    }

    pub fn u(&self) -> &[f64] {
        &self.u
    }

    pub fn phi(&self) -> &[f64] {
        &self.phi
    }

    /// `β̃_i = ½ Σ_{j∼i} W_ij e^{u_j − u_i}`, the total jump rate out of `i`.
    pub fn tilde_beta(&self) -> Vec<f64> {
        tilde_beta(&self.net, &self.u)
    }
}

pub fn tilde_beta(net: &Network, u: &[f64]) -> Vec<f64> {
    (0..net.n())
        .map(|i| {
            0.5 * net
                .neighbors(i)
                .iter()
                .map(|&(j, w, _)| w * (u[j] - u[i]).exp())
                .sum::<f64>()
        })
        .collect()
}

/// `γ = 1 / (2 G(i0, i0))`, distributed `Gamma(1/2, rate φ_{i0}²)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GammaComponent {
    gamma: f64,
}

impl GammaComponent {
    pub fn new(gamma: f64) -> Result<Self, ParamError> {
        check_positive("gamma", &[gamma], 1)?;
        Ok(Self { gamma })
    }

    pub fn value(&self) -> f64 {
        self.gamma
    }

    /// Log density of `Gamma(1/2, rate φ²)`: `φ e^{−φ²γ} / √(πγ)`.
    pub fn log_density(&self, phi_base: f64) -> f64 {
        phi_base.ln() - phi_base * phi_base * self.gamma - 0.5 * (PI * self.gamma).ln()
    }
}

fn phi_of(b: &BetaField) -> Vec<f64> {
    b.params().theta().iter().map(|t| t.sqrt()).collect()
}

fn check_base(net: &Network, i0: usize) -> Result<(), LinalgError> {
    if i0 >= net.n() {
        return Err(LinalgError::Dimension {
            expected: net.n(),
            got: i0 + 1,
        });
    }
    Ok(())
}

/// `Φ(β) = (u, γ)` from one Green-function column.
pub fn phi_map(b: &BetaField, i0: usize) -> Result<(UField, GammaComponent), LinalgError> {
    check_base(b.net(), i0)?;
    let f = lu_factorize(&b.matrix(), &VertexOrdering::identity(b.net().n()))?;
    Ok(phi_map_with(b, &f, i0))
}

/// [`phi_map`] with precomputed factors of `2β − P`.
pub fn phi_map_with(b: &BetaField, f: &TriangularFactors, i0: usize) -> (UField, GammaComponent) {
    let g = green_column_from(f, i0);
    let gii = g[i0];
    let mut u: Vec<f64> = g.iter().map(|gj| (gj / gii).ln()).collect();
    u[i0] = 0.0;
    let field = UField {
        net: b.params().shared_net().clone(),
        base: i0,
        u,
        phi: phi_of(b),
    };
    (field, GammaComponent { gamma: 0.5 / gii })
}

pub fn u_from_beta(b: &BetaField, i0: usize) -> Result<UField, LinalgError> {
    phi_map(b, i0).map(|(u, _)| u)
}

pub fn gamma_from_beta(b: &BetaField, i0: usize) -> Result<GammaComponent, LinalgError> {
    phi_map(b, i0).map(|(_, g)| g)
}

/// `γ` by the second route, `β_{i0} − ½ Σ_{j∼i0} W e^{u_j}`.
pub fn gamma_from_potential(b: &BetaField, u: &UField) -> f64 {
    b.beta()[u.base] - tilde_beta(b.net(), &u.u)[u.base]
}

/// `Φ⁻¹(u, γ)`: `β_i = ½ Σ_{j∼i} W_ij e^{u_j − u_i} + 1{i = i0} γ`, on `ν^{W,φ²}`.
pub fn beta_from_u_gamma(u: &UField, g: GammaComponent) -> BetaField {
    let mut beta = u.tilde_beta();
    beta[u.base] += g.gamma;
    let theta = u.phi.iter().map(|p| p * p).collect();
    let params = FamilyParams::new(u.net.clone(), theta).expect("φ validated in UField");
    BetaField::from_parts(params, beta)
}

/// Positive-definiteness certificate for `Φ⁻¹(u, γ)`: `ξ = e^u` with vertices
/// ordered by decreasing distance from the base.
pub fn certify_inverse(u: &UField, b: &BetaField) -> bool {
    let xi: Vec<f64> = u.u.iter().map(|x| x.exp()).collect();
    let ord = VertexOrdering::by_decreasing_distance(&u.net, u.base);
    let m = PotentialMatrix::new(b.net(), b.beta()).expect("β positive");
    positive_stability_certificate(&m, &xi, &ord)
}

/// `log` of the density of `Q^{W,φ}_{i0}` with respect to `Π_{j≠i0} du_j`.
pub fn log_density_q(u: &UField) -> f64 {
    let net = &*u.net;
    let (phi, uu) = (&u.phi, &u.u);
    let n = net.n();
    let log_phi: f64 = (0..n).filter(|&j| j != u.base).map(|j| phi[j].ln()).sum();
    let sum_u: f64 = uu.iter().sum();
    let energy: f64 = net
        .edges()
        .iter()
        .map(|e| {
            let d = uu[e.i] - uu[e.j];
            e.w * (d.exp() * phi[e.j] * phi[e.j] + (-d).exp() * phi[e.i] * phi[e.i]
                - 2.0 * phi[e.i] * phi[e.j])
        })
        .sum();
    let d = spanning_tree_polynomial(net, uu);
    log_phi - 0.5 * (n as f64 - 1.0) * (2.0 * PI).ln() - sum_u - 0.5 * energy + 0.5 * d.ln()
}

/// Draws `β ∼ ν^{W,φ²}` and maps it through `Φ`.
#[derive(Debug, Clone)]
pub struct USampler {
    sampler: BetaSampler,
    base: usize,
}

impl USampler {
    pub fn new(net: impl Into<Arc<Network>>, phi: &[f64], i0: usize) -> Result<Self, ParamError> {
        let net = net.into();
        check_positive("phi", phi, net.n())?;
        if i0 >= net.n() {
            return Err(ParamError::Invalid(format!("base vertex {i0} out of range")));
        }
        let n = net.n();
        let params = FamilyParams::new(net, phi.iter().map(|p| p * p).collect())?;
        Ok(Self {
            sampler: BetaSampler::new(&params, &VertexOrdering::identity(n))?,
            base: i0,
        })
    }

    pub fn params(&self) -> &FamilyParams {
        self.sampler.params()
    }

    pub fn sample<R: Rng + ?Sized>(&mut self, rng: &mut R) -> (UField, GammaComponent) {
        let (_, u, g) = self.sample_with_beta(rng);
        (u, g)
    }

    /// Like [`USampler::sample`] but also returns the potential.
    pub fn sample_with_beta<R: Rng + ?Sized>(
        &mut self,
        rng: &mut R,
    ) -> (BetaField, UField, GammaComponent) {
        let b = self.sampler.sample(rng);
        let (u, g) = phi_map_with(&b, &self.sampler.factors(), self.base);
        (b, u, g)
    }
}

pub fn sample_u<R: Rng + ?Sized>(
    net: impl Into<Arc<Network>>,
    phi: &[f64],
    i0: usize,
    rng: &mut R,
) -> Result<(UField, GammaComponent), ParamError> {
    Ok(USampler::new(net, phi, i0)?.sample(rng))
}

/// `u(i, j) = log(G(i, j) / G(i, i))` for every base point `i` (row `i`).
pub fn couple_u_fields(b: &BetaField) -> Result<DMatrix<f64>, LinalgError> {
    let f = lu_factorize(&b.matrix(), &VertexOrdering::identity(b.net().n()))?;
    Ok(couple_u_fields_with(&f))
}

/// [`couple_u_fields`] with precomputed factors of `2β − P`.
pub fn couple_u_fields_with(f: &TriangularFactors) -> DMatrix<f64> {
    let n = f.n();
    let mut out = DMatrix::zeros(n, n);
    for i in 0..n {
        let g = green_column_from(f, i);
        for j in 0..n {
            out[(i, j)] = if i == j { 0.0 } else { (g[j] / g[i]).ln() };
        }
    }
    out
}

/// Relative residual of `|2β − P| = 2γ e^{−2Σu} D(W, u)`.
pub fn determinant_identity_check(b: &BetaField, i0: usize) -> Result<f64, LinalgError> {
    let n = b.net().n();
    let f = lu_factorize(&b.matrix(), &VertexOrdering::identity(n))?;
    let lhs = log_determinant(&f)?;
    let (u, g) = phi_map(b, i0)?;
    let sum_u: f64 = u.u.iter().sum();
    let rhs = (2.0 * g.gamma).ln() - 2.0 * sum_u + spanning_tree_polynomial(b.net(), &u.u).ln();
    Ok((lhs - rhs).exp_m1().abs())
}

/// Closed form `|J| = 2^{−(|V|−1)} e^{−2Σu} D(W, u)` of `Φ⁻¹`.
pub fn jacobian_closed_form(u: &UField) -> f64 {
    let n = u.net.n() as f64;
    let sum_u: f64 = u.u.iter().sum();
    (-(n - 1.0) * 2f64.ln() - 2.0 * sum_u).exp() * spanning_tree_polynomial(&u.net, &u.u)
}

/// Step of the central differences in [`jacobian_check`].
pub const JACOBIAN_FD_STEP: f64 = 1e-6;

/// `|det|` of the central-difference Jacobian of `(u_{j≠i0}, γ) ↦ β`.
pub fn jacobian_finite_difference(u: &UField, g: GammaComponent, step: f64) -> f64 {
    let n = u.net.n();
    let eval = |uu: &[f64], gamma: f64| -> Vec<f64> {
        let mut b = tilde_beta(&u.net, uu);
        b[u.base] += gamma;
        b
    };
    let mut jac = DMatrix::zeros(n, n);
    for col in 0..n {
        let (mut up, mut um) = (u.u.clone(), u.u.clone());
        let (mut gp, mut gm) = (g.gamma, g.gamma);
        if col == u.base {
            gp += step;
            gm -= step;
        } else {
            up[col] += step;
            um[col] -= step;
        }
        let (bp, bm) = (eval(&up, gp), eval(&um, gm));
        for row in 0..n {
            jac[(row, col)] = (bp[row] - bm[row]) / (2.0 * step);
        }
    }
    crate::linalg::dense_determinant(&jac).abs()
}

/// Relative residual between the closed-form and finite-difference `|J|`.
pub fn jacobian_check(u: &UField, g: GammaComponent) -> f64 {
    let closed = jacobian_closed_form(u);
    let fd = jacobian_finite_difference(u, g, JACOBIAN_FD_STEP);
    ((fd - closed) / closed).abs()
}
