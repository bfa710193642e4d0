//! The exponential family `ν^{W,θ}` of random potentials.
//!
//! `ν^{W,θ}(dβ) = 1{2β−P>0} (2/π)^{n/2} exp(−⟨θ,β⟩ + Σ_E W_ij √(θ_i θ_j)) Π√θ_i / √|2β−P| dβ`.
//!
//! Exact sampling runs the elimination recursion of [`crate::linalg`] with
//! the pivots drawn one at a time: given the earlier pivots, `x_k` has density
//! proportional to `x^{-1/2} exp(−(θ_k x + R_k / x)/2)` with
//! `R_k = (Σ_{l>k} H_kl √θ_l)²`, and `β = Ψ(x)` with
//! `β_k = x_k/2 + Σ_{m<k} H_mk² / (2 x_m)`.

use std::f64::consts::PI;
use std::sync::Arc;

use rand::Rng;
use rand_distr::StandardNormal;
use statrs::function::erf::erfc;

use crate::error::{DensityError, LinalgError, ParamError};
use crate::graph::{Network, VertexOrdering};
use crate::linalg::{
    eliminate, log_determinant, lu_factorize, ordered_weights, PotentialMatrix, TriangularFactors,
};

/// Network plus vertex parameters `θ ≫ 0`. Cheap to clone.
#[derive(Debug, Clone, PartialEq)]
pub struct FamilyParams {
    net: Arc<Network>,
    theta: Arc<[f64]>,
}

impl FamilyParams {
    pub fn new(net: impl Into<Arc<Network>>, theta: Vec<f64>) -> Result<Self, ParamError> {
        let net = net.into();
        check_positive("theta", &theta, net.n())?;
        Ok(Self {
            net,
            theta: theta.into(),
        })
    }

    /// `θ ≡ 1`, written `ν^W`.
    pub fn unit(net: impl Into<Arc<Network>>) -> Self {
        let net = net.into();
        let theta = vec![1.0; net.n()];
        Self {
            net,
            theta: theta.into(),
        }
    }

    pub fn net(&self) -> &Network {
        &self.net
    }

    pub fn shared_net(&self) -> &Arc<Network> {
        &self.net
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    pub fn n(&self) -> usize {
        self.net.n()
    }

    /// `Σ_E W_ij √(θ_i θ_j)`.
    fn edge_energy(&self) -> f64 {
        self.net
            .edges()
            .iter()
            .map(|e| e.w * (self.theta[e.i] * self.theta[e.j]).sqrt())
            .sum()
    }
}

pub(crate) fn check_positive(
    name: &'static str,
    v: &[f64],
    expected: usize,
) -> Result<(), ParamError> {
    if v.len() != expected {
        return Err(ParamError::Length {
            name,
            expected,
            got: v.len(),
        });
    }
    if let Some((index, &value)) = v
        .iter()
        .enumerate()
        .find(|(_, &x)| !(x > 0.0 && x.is_finite()))
    {
        return Err(ParamError::NotPositive { name, index, value });
    }
    Ok(())
}

/// A point of the support `D` together with its family parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct BetaField {
    params: FamilyParams,
    beta: Vec<f64>,
    ordering: Option<VertexOrdering>,
}

impl BetaField {
    /// Checks `β ≫ 0` and `2β − P > 0`.
    pub fn new(params: FamilyParams, beta: Vec<f64>) -> Result<Self, LinalgError> {
        let m = PotentialMatrix::new(params.net(), &beta)?;
        lu_factorize(&m, &VertexOrdering::identity(params.n()))?;
        Ok(Self {
            params,
            beta,
            ordering: None,
        })
    }

    /// Skips the support check; for points that lie in `D` by construction.
    pub(crate) fn from_parts(params: FamilyParams, beta: Vec<f64>) -> Self {
        debug_assert_eq!(params.n(), beta.len());
        Self {
            params,
            beta,
            ordering: None,
        }
    }

    pub fn params(&self) -> &FamilyParams {
        &self.params
    }

    pub fn net(&self) -> &Network {
        self.params.net()
    }

    pub fn beta(&self) -> &[f64] {
        &self.beta
    }

    pub fn into_beta(self) -> Vec<f64> {
        self.beta
    }

    /// Ordering used by the sampler that produced this point, if any.
    pub fn ordering(&self) -> Option<&VertexOrdering> {
        self.ordering.as_ref()
    }

    pub fn matrix(&self) -> PotentialMatrix<'_> {
        PotentialMatrix::new(self.params.net(), &self.beta).expect("validated at construction")
    }
}

/// Inverse Gaussian `IG(μ, λ)`: density `√(λ/2πx³) exp(−λ(x−μ)²/(2μ²x))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IGParams {
    pub mu: f64,
    pub lambda: f64,
}

impl IGParams {
    pub fn new(mu: f64, lambda: f64) -> Result<Self, ParamError> {
        check_positive("mu", &[mu], 1)?;
        check_positive("lambda", &[lambda], 1)?;
        Ok(Self { mu, lambda })
    }

    pub fn mean(&self) -> f64 {
        self.mu
    }

    pub fn variance(&self) -> f64 {
        self.mu.powi(3) / self.lambda
    }

    pub fn ln_pdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return f64::NEG_INFINITY;
        }
        0.5 * (self.lambda / (2.0 * PI * x.powi(3))).ln()
            - self.lambda * (x - self.mu).powi(2) / (2.0 * self.mu * self.mu * x)
    }

    pub fn cdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        let s = (self.lambda / x).sqrt();
        let a = std_normal_cdf(s * (x / self.mu - 1.0));
        let z = s * (x / self.mu + 1.0);
        let b = (2.0 * self.lambda / self.mu + ln_std_normal_sf(z)).exp();
        (a + b).min(1.0)
    }
}

pub(crate) fn std_normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / std::f64::consts::SQRT_2)
}

/// `ln(1 − Φ(z))`, accurate far into the upper tail.
fn ln_std_normal_sf(z: f64) -> f64 {
    if z < 30.0 {
        (0.5 * erfc(z / std::f64::consts::SQRT_2)).ln()
    } else {
        let z2 = z * z;
        -0.5 * z2 - (z * (2.0 * PI).sqrt()).ln() + (1.0 - 1.0 / z2 + 3.0 / (z2 * z2)).ln()
    }
}

/// One `IG(μ, λ)` draw by transformation with rejection (one normal, one uniform).
pub fn sample_inverse_gaussian<R: Rng + ?Sized>(p: IGParams, rng: &mut R) -> f64 {
    let (mu, lambda) = (p.mu, p.lambda);
    let nu: f64 = rng.sample(StandardNormal);
    // Smaller root of the quadratic, written without cancellation:
    // x = 4μ²λ / (μ|ν| + √(μ²ν² + 4μλ))².
    let a = mu * nu.abs();
    let d = a + (a * a + 4.0 * mu * lambda).sqrt();
    let x = 4.0 * mu * mu * lambda / (d * d);
    let u: f64 = rng.random();
    if u * (mu + x) <= mu {
        x
    } else {
        mu * mu / x
    }
}

/// Draw from the density `∝ x^{-1/2} exp(−(a x + b/x)/2)`, `a > 0`, `b ≥ 0`.
///
/// `b = 0` is a `Gamma(1/2, rate a/2)` variable (`Z²/a`); `b > 0` is the
/// reciprocal of an `IG(√(a/b), a)` variable.
pub fn sample_gig_half<R: Rng + ?Sized>(a: f64, b: f64, rng: &mut R) -> f64 {
    debug_assert!(a > 0.0 && b >= 0.0);
    let x = if b == 0.0 {
        let z: f64 = rng.sample(StandardNormal);
        z * z / a
    } else {
        1.0 / sample_inverse_gaussian(
            IGParams {
                mu: (a / b).sqrt(),
                lambda: a,
            },
            rng,
        )
    };
    x.max(f64::MIN_POSITIVE)
}

/// `ln ∫₀^∞ x^{-1/2} exp(−(a x + b/x)/2) dx = −√(ab) + ½ ln(2π/a)`.
pub fn gig_half_log_normalizer(a: f64, b: f64) -> f64 {
    -(a * b).sqrt() + 0.5 * (2.0 * PI / a).ln()
}

/// Reusable exact sampler for one `(params, ordering)` pair.
#[derive(Debug, Clone)]
pub struct BetaSampler {
    params: FamilyParams,
    ordering: VertexOrdering,
    w: Vec<f64>,
    theta: Vec<f64>,
    sqrt_theta: Vec<f64>,
    x: Vec<f64>,
    h: Vec<f64>,
}

impl BetaSampler {
    pub fn new(params: &FamilyParams, ordering: &VertexOrdering) -> Result<Self, ParamError> {
        let n = params.n();
        if ordering.len() != n {
            return Err(ParamError::Length {
                name: "ordering",
                expected: n,
                got: ordering.len(),
            });
        }
        let theta: Vec<f64> = (0..n).map(|k| params.theta[ordering.vertex(k)]).collect();
        Ok(Self {
            w: ordered_weights(params.net(), ordering),
            sqrt_theta: theta.iter().map(|t| t.sqrt()).collect(),
            theta,
            x: vec![0.0; n],
            h: vec![0.0; n * n],
            params: params.clone(),
            ordering: ordering.clone(),
        })
    }

    pub fn params(&self) -> &FamilyParams {
        &self.params
    }

    /// Draws one `β` into `out` (original labels) and returns the pivots.
    pub fn sample_into<R: Rng + ?Sized>(&mut self, rng: &mut R, out: &mut [f64]) -> &[f64] {
        let n = self.theta.len();
        let (theta, sqrt_theta, ord) = (&self.theta, &self.sqrt_theta, &self.ordering);
        let result: Result<(), std::convert::Infallible> =
            eliminate(n, &self.w, &mut self.x, &mut self.h, |k, schur, row| {
                let s: f64 = (k + 1..n).map(|l| row[l] * sqrt_theta[l]).sum();
                let xk = sample_gig_half(theta[k], s * s, rng);
                out[ord.vertex(k)] = 0.5 * (xk + schur);
                Ok(xk)
            });
        let Ok(()) = result;
        &self.x
    }

    /// Elimination factors of the last draw. They are exact, unlike a
    /// refactorisation of the returned `β`, which loses tiny pivots to
    /// cancellation in `2β_k − schur_k`.
    pub fn factors(&self) -> TriangularFactors {
        TriangularFactors::from_parts(self.ordering.clone(), self.x.clone(), self.h.clone())
    }

    pub fn sample<R: Rng + ?Sized>(&mut self, rng: &mut R) -> BetaField {
        let mut beta = vec![0.0; self.theta.len()];
        self.sample_into(rng, &mut beta);
        BetaField {
            params: self.params.clone(),
            beta,
            ordering: Some(self.ordering.clone()),
        }
    }
}

/// One exact draw from `ν^{W,θ}`.
pub fn sample_beta<R: Rng + ?Sized>(
    p: &FamilyParams,
    ord: &VertexOrdering,
    rng: &mut R,
) -> Result<BetaField, ParamError> {
    Ok(BetaSampler::new(p, ord)?.sample(rng))
}

/// `log ν^{W,θ}` density at `β`; `OutsideSupport` when `β ∉ D`.
pub fn log_density_nu_at(p: &FamilyParams, beta: &[f64]) -> Result<f64, DensityError> {
    if beta.len() != p.n() {
        return Err(ParamError::Length {
            name: "beta",
            expected: p.n(),
            got: beta.len(),
        }
        .into());
    }
    let m = PotentialMatrix::new(p.net(), beta).map_err(|_| DensityError::OutsideSupport)?;
    let f = lu_factorize(&m, &VertexOrdering::identity(p.n()))
        .map_err(|_| DensityError::OutsideSupport)?;
    let log_det = log_determinant(&f).map_err(|_| DensityError::OutsideSupport)?;
    let n = p.n() as f64;
    let dot: f64 = p.theta.iter().zip(beta).map(|(t, b)| t * b).sum();
    let log_sqrt_theta: f64 = p.theta.iter().map(|t| 0.5 * t.ln()).sum();
    Ok(0.5 * n * (2.0 / PI).ln() - dot + p.edge_energy() + log_sqrt_theta - 0.5 * log_det)
}

pub fn log_density_nu(b: &BetaField) -> f64 {
    log_density_nu_at(&b.params, &b.beta).expect("BetaField lies in D")
}

/// `∫ e^{−⟨λ,β⟩} ν^{W,θ}(dβ)`.
pub fn laplace_transform(p: &FamilyParams, lambda: &[f64]) -> Result<f64, ParamError> {
    if lambda.len() != p.n() {
        return Err(ParamError::Length {
            name: "lambda",
            expected: p.n(),
            got: lambda.len(),
        });
    }
    if let Some((index, &value)) = lambda
        .iter()
        .enumerate()
        .find(|(_, &l)| !(l >= 0.0 && l.is_finite()))
    {
        return Err(ParamError::NotPositive {
            name: "lambda",
            index,
            value,
        });
    }
    let t = &p.theta;
    let shifted: Vec<f64> = t.iter().zip(lambda).map(|(t, l)| t + l).collect();
    let exponent: f64 = p
        .net
        .edges()
        .iter()
        .map(|e| e.w * ((shifted[e.i] * shifted[e.j]).sqrt() - (t[e.i] * t[e.j]).sqrt()))
        .sum();
    let log_ratio: f64 = t
        .iter()
        .zip(&shifted)
        .map(|(t, s)| 0.5 * (t / s).ln())
        .sum();
    Ok((log_ratio - exponent).exp())
}

/// Law of `1 / (2 β_i θ_i)`: `IG(1 / Σ_{j∼i} W_ij √(θ_i θ_j), 1)`.
///
/// An isolated vertex (single-vertex graph) has no such parameters.
pub fn marginal_ig_params(p: &FamilyParams, i: usize) -> Result<IGParams, ParamError> {
    if i >= p.n() {
        return Err(ParamError::Invalid(format!("vertex {i} out of range")));
    }
    let s: f64 = p
        .net
        .neighbors(i)
        .iter()
        .map(|&(j, w, _)| w * (p.theta[i] * p.theta[j]).sqrt())
        .sum();
    if s == 0.0 {
        return Err(ParamError::Invalid(format!(
            "vertex {i} has no neighbours; its marginal is gamma, not reciprocal IG"
        )));
    }
    IGParams::new(1.0 / s, 1.0)
}

/// `β ↦ θβ` on the network `W^θ_ij = W_ij √(θ_i θ_j)` with `θ ≡ 1`.
pub fn rescale_theta(b: &BetaField) -> BetaField {
    let t = b.params.theta();
    let net = b
        .net()
        .reweighted(|e| e.w * (t[e.i] * t[e.j]).sqrt())
        .expect("positive weights stay positive");
    BetaField {
        params: FamilyParams::unit(net),
        beta: b.beta.iter().zip(t).map(|(b, t)| b * t).collect(),
        ordering: b.ordering.clone(),
    }
}

/// Inverse of [`rescale_theta`]: back to `(W, θ)` from a `θ ≡ 1` point on `W^θ`.
pub fn unscale_theta(b: &BetaField, target: &FamilyParams) -> Result<BetaField, LinalgError> {
    let beta = b
        .beta
        .iter()
        .zip(target.theta())
        .map(|(b, t)| b / t)
        .collect();
    BetaField::new(target.clone(), beta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream_rng;
    use approx::assert_relative_eq;

    fn edge_params(theta: Vec<f64>) -> FamilyParams {
        FamilyParams::new(Network::path(&[1.0]).unwrap(), theta).unwrap()
    }

    #[test]
    fn rejects_degenerate_theta() {
        let net = Network::path(&[1.0]).unwrap();
        assert!(matches!(
            FamilyParams::new(net.clone(), vec![1.0, 0.0]),
            Err(ParamError::NotPositive { index: 1, .. })
        ));
        assert!(matches!(
            FamilyParams::new(net, vec![1.0]),
            Err(ParamError::Length { .. })
        ));
    }

    #[test]
    fn log_density_examples() {
        let single = FamilyParams::unit(Network::single_vertex());
        assert_relative_eq!(
            log_density_nu_at(&single, &[1.0]).unwrap(),
            (1.0 / PI).sqrt().ln() - 1.0,
            max_relative = 1e-14
        );
        let p = edge_params(vec![1.0, 1.0]);
        assert_relative_eq!(
            log_density_nu_at(&p, &[1.0, 1.0]).unwrap(),
            (2.0 / PI).ln() - 1.0 - 0.5 * 3f64.ln(),
            max_relative = 1e-14
        );
        assert_eq!(
            log_density_nu_at(&p, &[0.4, 0.4]),
            Err(DensityError::OutsideSupport)
        );
        assert_eq!(
            log_density_nu_at(&p, &[-1.0, 3.0]),
            Err(DensityError::OutsideSupport)
        );
    }

    #[test]
    fn laplace_examples() {
        let p = edge_params(vec![1.0, 1.0]);
        assert_eq!(laplace_transform(&p, &[0.0, 0.0]).unwrap(), 1.0);
        assert_relative_eq!(
            laplace_transform(&p, &[3.0, 0.0]).unwrap(),
            (-1f64).exp() / 2.0,
            max_relative = 1e-14
        );
        let single = FamilyParams::unit(Network::single_vertex());
        for t in [0.5, 2.0, 7.0] {
            assert_relative_eq!(
                laplace_transform(&single, &[t]).unwrap(),
                (1.0 + t).powf(-0.5),
                max_relative = 1e-14
            );
        }
        assert!(laplace_transform(&p, &[-1.0, 0.0]).is_err());
    }

    #[test]
    fn marginal_params_examples() {
        let p = edge_params(vec![1.0, 1.0]);
        assert_eq!(marginal_ig_params(&p, 0).unwrap(), IGParams::new(1.0, 1.0).unwrap());
        let star = FamilyParams::unit(Network::star(&[1.0; 3]).unwrap());
        assert_relative_eq!(marginal_ig_params(&star, 0).unwrap().mu, 1.0 / 3.0);
        let doubled = FamilyParams::new(
            Network::star(&[1.0; 3]).unwrap(),
            vec![2.0; 4],
        )
        .unwrap();
        assert_relative_eq!(
            1.0 / marginal_ig_params(&doubled, 0).unwrap().mu,
            2.0 * 3.0,
            max_relative = 1e-14
        );
        assert!(marginal_ig_params(&FamilyParams::unit(Network::single_vertex()), 0).is_err());
    }

    #[test]
    fn rescale_examples() {
        let p = edge_params(vec![1.0, 1.0]);
        let b = BetaField::new(p, vec![1.0, 1.0]).unwrap();
        assert_eq!(rescale_theta(&b).beta(), b.beta());

        let single = FamilyParams::new(Network::single_vertex(), vec![4.0]).unwrap();
        let b = BetaField::new(single.clone(), vec![0.25]).unwrap();
        let r = rescale_theta(&b);
        assert_eq!(r.beta(), &[1.0]);
        assert_eq!(r.net().edge_count(), 0);

        let p = edge_params(vec![4.0, 1.0]);
        let b = BetaField::new(p.clone(), vec![1.0, 1.0]).unwrap();
        let r = rescale_theta(&b);
        assert_eq!(r.beta(), &[4.0, 1.0]);
        assert_eq!(r.net().weight(0, 1), 2.0);
        assert_eq!(r.params().theta(), &[1.0, 1.0]);
        let back = unscale_theta(&r, &p).unwrap();
        assert_eq!(back.beta(), b.beta());
    }

    #[test]
    fn inverse_gaussian_moments() {
        let mut rng = stream_rng(11, 0);
        let p = IGParams::new(1.0, 1.0).unwrap();
        let n = 400_000;
        let (mut s, mut si) = (0.0, 0.0);
        for _ in 0..n {
            let x = sample_inverse_gaussian(p, &mut rng);
            s += x;
            si += 1.0 / x;
        }
        // sd(X) = 1, sd(1/X) = √(1/μλ + 2/λ²) = √3
        assert!((s / n as f64 - 1.0).abs() < 4.0 / (n as f64).sqrt());
        assert!((si / n as f64 - 2.0).abs() < 4.0 * 3f64.sqrt() / (n as f64).sqrt());
    }

    #[test]
    fn inverse_gaussian_concentrates_as_shape_grows() {
        let mut rng = stream_rng(12, 0);
        let p = IGParams::new(2.0, 1e9).unwrap();
        assert!(p.variance() < 1e-8);
        for _ in 0..1000 {
            assert!((sample_inverse_gaussian(p, &mut rng) - 2.0).abs() < 1e-3);
        }
    }

    #[test]
    fn gig_gamma_branch_mean() {
        let mut rng = stream_rng(13, 0);
        let n = 200_000;
        let m: f64 = (0..n).map(|_| sample_gig_half(2.0, 0.0, &mut rng)).sum::<f64>() / n as f64;
        // Gamma(1/2, rate 1): mean 1/2, sd √(1/2).
        assert!((m - 0.5).abs() < 4.0 * 0.5f64.sqrt() / (n as f64).sqrt());
    }

    #[test]
    fn gig_normalizer_claim() {
        assert_relative_eq!(
            gig_half_log_normalizer(1.0, 1.0).exp(),
            (-1f64).exp() * (2.0 * PI).sqrt(),
            max_relative = 1e-15
        );
    }

    #[test]
    fn ig_cdf_is_a_distribution_function() {
        let p = IGParams::new(0.7, 2.0).unwrap();
        assert_eq!(p.cdf(0.0), 0.0);
        assert!(p.cdf(1e3) > 1.0 - 1e-12);
        let mut prev = 0.0;
        for k in 1..200 {
            let c = p.cdf(k as f64 * 0.02);
            assert!(c >= prev);
            prev = c;
        }
        // numerical derivative matches the density
        let (x, h) = (0.9, 1e-5);
        let d = (p.cdf(x + h) - p.cdf(x - h)) / (2.0 * h);
        assert_relative_eq!(d, p.ln_pdf(x).exp(), max_relative = 1e-6);
    }

    #[test]
    fn sampled_points_lie_in_the_support() {
        let net = Network::new(4, &[(0, 1, 1.0), (1, 2, 2.0), (2, 3, 0.5), (3, 0, 3.0)]).unwrap();
        let p = FamilyParams::new(net, vec![0.5, 1.0, 2.0, 0.3]).unwrap();
        let mut s = BetaSampler::new(&p, &VertexOrdering::new(vec![2, 0, 3, 1]).unwrap()).unwrap();
        let mut rng = stream_rng(5, 0);
        for _ in 0..2000 {
            let b = s.sample(&mut rng);
            assert!(BetaField::new(p.clone(), b.beta().to_vec()).is_ok());
        }
    }

    #[test]
    fn pivots_round_trip_through_factorization() {
        let net = Network::complete(4, 0.8).unwrap();
        let p = FamilyParams::new(net, vec![1.0, 0.5, 2.0, 1.5]).unwrap();
        let ord = VertexOrdering::new(vec![3, 1, 0, 2]).unwrap();
        let mut s = BetaSampler::new(&p, &ord).unwrap();
        let mut rng = stream_rng(9, 0);
        let mut beta = vec![0.0; 4];
        for _ in 0..500 {
            let x = s.sample_into(&mut rng, &mut beta).to_vec();
            let m = PotentialMatrix::new(p.net(), &beta).unwrap();
            let f = lu_factorize(&m, &ord).unwrap();
            for (a, b) in f.pivots().iter().zip(&x) {
                assert!((a - b).abs() <= 1e-10 * b.abs().max(1.0), "{a} vs {b}");
            }
        }
    }
}
