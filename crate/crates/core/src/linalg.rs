//! Triangular elimination of `M = 2β − P` along a vertex ordering.
//!
//! In ordered indices the elimination produces pivots `x_k` and couplings
//! `H_kl` (`k < l`) with
//!
//! ```text
//! H_kl = W_kl + Σ_{m<k} H_mk H_ml / x_m
//! x_k  = 2β_k − Σ_{m<k} H_mk² / x_m
//! ```
//!
//! so that `M = Uᵀ X⁻¹ U` with `U` upper triangular, diagonal `x` and
//! off-diagonal `−H`. All `x_k > 0` exactly when `M` is positive definite.
//! The same recursion drives the exact sampler in [`crate::beta_family`].

use nalgebra::DMatrix;

use crate::error::LinalgError;
use crate::graph::{coupling_matrix, Network, VertexOrdering};

/// Relative pivot tolerance: `x_k ≤ PIVOT_TOL · max(1, 2β_k)` counts as indefinite.
pub const PIVOT_TOL: f64 = 1e-12;

/// `M = 2β − P` as an operator on functions of the vertices.
#[derive(Debug, Clone, Copy)]
pub struct PotentialMatrix<'a> {
    net: &'a Network,
    beta: &'a [f64],
}

impl<'a> PotentialMatrix<'a> {
    pub fn new(net: &'a Network, beta: &'a [f64]) -> Result<Self, LinalgError> {
        if beta.len() != net.n() {
            return Err(LinalgError::Dimension {
                expected: net.n(),
                got: beta.len(),
            });
        }
        if let Some((index, &value)) = beta
            .iter()
            .enumerate()
            .find(|(_, &b)| !(b > 0.0 && b.is_finite()))
        {
            return Err(LinalgError::NonPositiveBeta { index, value });
        }
        Ok(Self { net, beta })
    }

    pub fn net(&self) -> &'a Network {
        self.net
    }

    pub fn beta(&self) -> &'a [f64] {
        self.beta
    }

    /// `[(2β − P) f](i) = 2β_i f(i) − Σ_{j∼i} W_ij f(j)`.
    pub fn apply(&self, f: &[f64]) -> Vec<f64> {
        (0..self.net.n())
            .map(|i| {
                let off: f64 = self
                    .net
                    .neighbors(i)
                    .iter()
                    .map(|&(j, w, _)| w * f[j])
                    .sum();
                2.0 * self.beta[i] * f[i] - off
            })
            .collect()
    }

    pub fn dense(&self) -> DMatrix<f64> {
        let mut m = -coupling_matrix(self.net);
        for i in 0..self.net.n() {
            m[(i, i)] = 2.0 * self.beta[i];
        }
        m
    }

    /// Potential `V_i = 2β_i − W_i` of the Schrödinger form `−Δ^W + V`,
    /// which equals `2β − P` as a matrix.
    pub fn schrodinger_potential(&self) -> Vec<f64> {
        (0..self.net.n())
            .map(|i| 2.0 * self.beta[i] - self.net.weighted_degree(i))
            .collect()
    }
}

/// Output of the elimination under a fixed ordering (ordered indices).
#[derive(Debug, Clone, PartialEq)]
pub struct TriangularFactors {
    ordering: VertexOrdering,
    x: Vec<f64>,
    /// Row-major `n × n`; only `k < l` entries are meaningful.
    h: Vec<f64>,
}

impl TriangularFactors {
    pub(crate) fn from_parts(ordering: VertexOrdering, x: Vec<f64>, h: Vec<f64>) -> Self {
        Self { ordering, x, h }
    }

    pub fn ordering(&self) -> &VertexOrdering {
        &self.ordering
    }

    /// Pivots `x_k` in elimination order.
    pub fn pivots(&self) -> &[f64] {
        &self.x
    }

    /// `H_kl` for ordered indices `k < l`.
    pub fn h(&self, k: usize, l: usize) -> f64 {
        debug_assert!(k < l);
        self.h[k * self.x.len() + l]
    }

    pub fn n(&self) -> usize {
        self.x.len()
    }

    /// Solve `M g = rhs` (original vertex labels) by forward/back substitution.
    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let n = self.n();
        let mut w = vec![0.0; n];
        for l in 0..n {
            let mut acc = rhs[self.ordering.vertex(l)];
            for k in 0..l {
                acc += self.h(k, l) * w[k];
            }
            w[l] = acc / self.x[l];
        }
        let mut g = vec![0.0; n];
        for k in (0..n).rev() {
            let mut acc = 0.0;
            for l in k + 1..n {
                acc += self.h(k, l) * g[l];
            }
            g[k] = w[k] + acc / self.x[k];
        }
        let mut out = vec![0.0; n];
        for (k, gk) in g.into_iter().enumerate() {
            out[self.ordering.vertex(k)] = gk;
        }
        out
    }
}

/// Shared driver for the elimination recursion.
///
/// At step `k` the row `H_{k,·}` is computed from earlier pivots, then
/// `pivot(k, schur, row)` supplies `x_k`, where `schur = Σ_{m<k} H_mk²/x_m`
/// and `row[l] = H_kl` for `l > k` (ordered indices). `w` is the permuted
/// weight matrix, row-major.
pub(crate) fn eliminate<E>(
    n: usize,
    w: &[f64],
    x: &mut [f64],
    h: &mut [f64],
    mut pivot: impl FnMut(usize, f64, &[f64]) -> Result<f64, E>,
) -> Result<(), E> {
    for k in 0..n {
        let mut schur = 0.0;
        for m in 0..k {
            let hmk = h[m * n + k];
            if hmk != 0.0 {
                schur += hmk * hmk / x[m];
            }
        }
        for l in k + 1..n {
            let mut acc = w[k * n + l];
            for m in 0..k {
                let hmk = h[m * n + k];
                if hmk != 0.0 {
                    acc += hmk * h[m * n + l] / x[m];
                }
            }
            h[k * n + l] = acc;
        }
        x[k] = pivot(k, schur, &h[k * n..(k + 1) * n])?;
    }
    Ok(())
}

/// Weight matrix permuted into elimination order, row-major.
pub(crate) fn ordered_weights(net: &Network, ord: &VertexOrdering) -> Vec<f64> {
    let n = net.n();
    let mut w = vec![0.0; n * n];
    for e in net.edges() {
        let (a, b) = (ord.position(e.i), ord.position(e.j));
        w[a * n + b] = e.w;
        w[b * n + a] = e.w;
    }
    w
}

pub fn lu_factorize(
    m: &PotentialMatrix<'_>,
    ord: &VertexOrdering,
) -> Result<TriangularFactors, LinalgError> {
    let n = m.net.n();
    if ord.len() != n {
        return Err(LinalgError::Dimension {
            expected: n,
            got: ord.len(),
        });
    }
    let w = ordered_weights(m.net, ord);
    let mut x = vec![0.0; n];
    let mut h = vec![0.0; n * n];
    eliminate(n, &w, &mut x, &mut h, |k, schur, _| {
        let two_beta = 2.0 * m.beta[ord.vertex(k)];
        let pivot = two_beta - schur;
        if pivot <= PIVOT_TOL * two_beta.max(1.0) {
            Err(LinalgError::Indefinite {
                position: k,
                vertex: ord.vertex(k),
                pivot,
            })
        } else {
            Ok(pivot)
        }
    })?;
    Ok(TriangularFactors {
        ordering: ord.clone(),
        x,
        h,
    })
}

pub fn is_positive_definite(m: &PotentialMatrix<'_>) -> bool {
    is_positive_definite_with(m, &VertexOrdering::identity(m.net.n()))
}

pub fn is_positive_definite_with(m: &PotentialMatrix<'_>, ord: &VertexOrdering) -> bool {
    lu_factorize(m, ord).is_ok()
}

/// `log |2β − P| = Σ log x_k`.
pub fn log_determinant(f: &TriangularFactors) -> Result<f64, LinalgError> {
    let mut acc = 0.0;
    for (k, &xk) in f.x.iter().enumerate() {
        if xk <= 0.0 {
            return Err(LinalgError::Indefinite {
                position: k,
                vertex: f.ordering.vertex(k),
                pivot: xk,
            });
        }
        acc += xk.ln();
    }
    Ok(acc)
}

/// Column `G(i0, ·)` of the Green function `G = (2β − P)⁻¹`.
pub fn green_column(m: &PotentialMatrix<'_>, i0: usize) -> Result<Vec<f64>, LinalgError> {
    let f = lu_factorize(m, &VertexOrdering::identity(m.net.n()))?;
    Ok(green_column_from(&f, i0))
}

pub fn green_column_from(f: &TriangularFactors, i0: usize) -> Vec<f64> {
    let mut e = vec![0.0; f.n()];
    e[i0] = 1.0;
    f.solve(&e)
}

/// Row-sum test for positive stability of the Z-matrix `M`, reordered by `ord`.
///
/// Holds iff `A ξ ≥ 0` (not identically zero) and every leading partial row sum
/// `Σ_{j≤k} a_kj ξ_j` is positive. Entries of `A ξ` within `1e-12` of the
/// row's absolute scale count as zero.
pub fn positive_stability_certificate(
    m: &PotentialMatrix<'_>,
    xi: &[f64],
    ord: &VertexOrdering,
) -> bool {
    let n = m.net.n();
    if xi.len() != n || ord.len() != n || xi.iter().any(|&v| v.is_nan() || v <= 0.0) {
        return false;
    }
    let mut any_positive = false;
    for k in 0..n {
        let vk = ord.vertex(k);
        let diag = 2.0 * m.beta[vk] * xi[vk];
        let mut partial = diag;
        let mut full = diag;
        let mut scale = diag.abs();
        for &(j, w, _) in m.net.neighbors(vk) {
            let t = w * xi[j];
            full -= t;
            scale += t;
            if ord.position(j) < k {
                partial -= t;
            }
        }
        let eps = 1e-12 * scale;
        if full < -eps || partial <= 0.0 {
            return false;
        }
        if full > eps {
            any_positive = true;
        }
    }
    any_positive
}

/// Determinant by Gaussian elimination with partial pivoting.
pub fn dense_determinant(a: &DMatrix<f64>) -> f64 {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "determinant of a non-square matrix");
    let mut m = a.clone();
    let mut det = 1.0;
    for c in 0..n {
        let p = (c..n)
            .max_by(|&r, &s| m[(r, c)].abs().total_cmp(&m[(s, c)].abs()))
            .unwrap();
        if m[(p, c)] == 0.0 {
            return 0.0;
        }
        if p != c {
            m.swap_rows(p, c);
            det = -det;
        }
        let piv = m[(c, c)];
        det *= piv;
        for r in c + 1..n {
            let f = m[(r, c)] / piv;
            if f != 0.0 {
                for k in c + 1..n {
                    let v = m[(c, k)];
                    m[(r, k)] -= f * v;
                }
            }
        }
    }
    det
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn edge() -> Network {
        Network::path(&[1.0]).unwrap()
    }

    #[test]
    fn two_vertex_factors() {
        let net = edge();
        let beta = [1.0, 1.0];
        let m = PotentialMatrix::new(&net, &beta).unwrap();
        let f = lu_factorize(&m, &VertexOrdering::identity(2)).unwrap();
        assert_eq!(f.pivots(), &[2.0, 1.5]);
        assert_eq!(f.h(0, 1), 1.0);
        assert_relative_eq!(log_determinant(&f).unwrap(), 3f64.ln(), max_relative = 1e-15);
    }

    #[test]
    fn single_vertex_factors() {
        let net = Network::single_vertex();
        let m = PotentialMatrix::new(&net, &[5.0]).unwrap();
        let f = lu_factorize(&m, &VertexOrdering::identity(1)).unwrap();
        assert_eq!(f.pivots(), &[10.0]);
        let m = PotentialMatrix::new(&net, &[0.5]).unwrap();
        let f = lu_factorize(&m, &VertexOrdering::identity(1)).unwrap();
        assert_eq!(log_determinant(&f).unwrap(), 0.0);
    }

    #[test]
    fn path_of_three_factors() {
        let net = Network::path(&[1.0, 1.0]).unwrap();
        let beta = [1.0; 3];
        let m = PotentialMatrix::new(&net, &beta).unwrap();
        let f = lu_factorize(&m, &VertexOrdering::identity(3)).unwrap();
        assert_relative_eq!(f.pivots()[0], 2.0);
        assert_relative_eq!(f.pivots()[1], 1.5);
        assert_relative_eq!(f.pivots()[2], 4.0 / 3.0, max_relative = 1e-15);
        assert_eq!(f.h(0, 1), 1.0);
        assert_eq!(f.h(1, 2), 1.0);
        assert_eq!(f.h(0, 2), 0.0);
        assert_relative_eq!(log_determinant(&f).unwrap(), 4f64.ln(), max_relative = 1e-14);
    }

    #[test]
    fn positive_definiteness_examples() {
        let net = edge();
        assert!(is_positive_definite(&PotentialMatrix::new(&net, &[1.0, 1.0]).unwrap()));
        let bad = PotentialMatrix::new(&net, &[0.4, 0.4]).unwrap();
        assert!(!is_positive_definite(&bad));
        let err = lu_factorize(&bad, &VertexOrdering::identity(2)).unwrap_err();
        assert!(matches!(err, LinalgError::Indefinite { position: 1, .. }));
        let single = Network::single_vertex();
        assert!(is_positive_definite(&PotentialMatrix::new(&single, &[0.1]).unwrap()));
    }

    #[test]
    fn boundary_pivot_is_indefinite() {
        // det = 4·0.25 − 1 = 0 exactly.
        let net = edge();
        let m = PotentialMatrix::new(&net, &[0.5, 0.5]).unwrap();
        assert!(!is_positive_definite(&m));
    }

    #[test]
    fn rejects_nonpositive_beta() {
        let net = edge();
        assert!(matches!(
            PotentialMatrix::new(&net, &[1.0, 0.0]),
            Err(LinalgError::NonPositiveBeta { index: 1, .. })
        ));
        assert!(matches!(
            PotentialMatrix::new(&net, &[1.0]),
            Err(LinalgError::Dimension { .. })
        ));
    }

    #[test]
    fn green_column_examples() {
        let net = edge();
        let beta = [1.0, 1.0];
        let m = PotentialMatrix::new(&net, &beta).unwrap();
        let g = green_column(&m, 0).unwrap();
        assert_relative_eq!(g[0], 2.0 / 3.0, max_relative = 1e-15);
        assert_relative_eq!(g[1], 1.0 / 3.0, max_relative = 1e-15);
        let back = m.apply(&g);
        assert!((back[0] - 1.0).abs() < 1e-12 && back[1].abs() < 1e-12);

        let single = Network::single_vertex();
        let m = PotentialMatrix::new(&single, &[1.0]).unwrap();
        assert_eq!(green_column(&m, 0).unwrap(), vec![0.5]);
        assert!(green_column(&PotentialMatrix::new(&net, &[0.4, 0.4]).unwrap(), 0).is_err());
    }

    #[test]
    fn stability_certificate_examples() {
        let net = edge();
        let good = PotentialMatrix::new(&net, &[1.0, 1.0]).unwrap();
        let bad = PotentialMatrix::new(&net, &[0.4, 0.4]).unwrap();
        for ord in [vec![0, 1], vec![1, 0]] {
            let ord = VertexOrdering::new(ord).unwrap();
            assert!(positive_stability_certificate(&good, &[1.0, 1.0], &ord));
            assert!(!positive_stability_certificate(&bad, &[1.0, 1.0], &ord));
        }
    }

    #[test]
    fn schrodinger_potential_matches_dense_form() {
        let net = Network::path(&[1.0, 2.0]).unwrap();
        let beta = [1.0, 2.0, 3.0];
        let m = PotentialMatrix::new(&net, &beta).unwrap();
        assert_eq!(m.schrodinger_potential(), vec![1.0, 1.0, 4.0]);
        // −Δ^W + V has diagonal W_i + V_i = 2β_i.
        let d = m.dense();
        for i in 0..3 {
            assert_eq!(d[(i, i)], 2.0 * beta[i]);
        }
    }

    #[test]
    fn dense_determinant_small() {
        let a = DMatrix::from_row_slice(3, 3, &[0.0, 2.0, 1.0, 1.0, 1.0, 0.0, 3.0, 0.0, 1.0]);
        // 0·1 − 2·(1 − 0) + 1·(0 − 3) = −5
        assert_relative_eq!(dense_determinant(&a), -5.0, max_relative = 1e-14);
        assert_eq!(dense_determinant(&DMatrix::zeros(2, 2)), 0.0);
    }
}
