//! Adaptive Gauss–Kronrod quadrature, nested for up to three dimensions.
//!
//! Infinite limits are mapped to finite ones: `[a, ∞)` by `x = a + t/(1−t)`
//! and `ℝ` by `x = t/(1−t²)`. Non-finite integrand values (overflow at the
//! far end of a mapped interval) are treated as zero.

use std::collections::BinaryHeap;

use crate::error::QuadratureError;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
// Gauss weights for XGK[1], XGK[3], XGK[5] and the centre.
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Integration limits for one coordinate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Range {
    Finite(f64, f64),
    /// `[a, ∞)`.
    Above(f64),
    Real,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
    /// Maximum number of subintervals per one-dimensional integral.
    pub max_intervals: usize,
}

impl Default for Tolerance {
    fn default() -> Self {
        Self {
            abs: 1e-12,
            rel: 1e-8,
            max_intervals: 400,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
}

struct Piece {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
    /// Integrated error of inner integrals; not reduced by bisection.
    inner: f64,
}

impl PartialEq for Piece {
    fn eq(&self, o: &Self) -> bool {
        self.error == o.error
    }
}
impl Eq for Piece {}
impl PartialOrd for Piece {
    fn partial_cmp(&self, o: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Piece {
    fn cmp(&self, o: &Self) -> std::cmp::Ordering {
        self.error.total_cmp(&o.error)
    }
}

fn finite_or_zero(v: f64) -> f64 {
    if v.is_finite() {
        v
    } else {
        0.0
    }
}

fn eval(f: &mut impl FnMut(f64) -> (f64, f64), x: f64) -> (f64, f64) {
    let (v, e) = f(x);
    (finite_or_zero(v), finite_or_zero(e))
}

fn gk15(f: &mut impl FnMut(f64) -> (f64, f64), a: f64, b: f64) -> Piece {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let (fc, ec) = eval(f, c);
    let mut kron = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    let mut inner = WGK[7] * ec;
    for k in 0..7 {
        let dx = h * XGK[k];
        let (lo, elo) = eval(f, c - dx);
        let (hi, ehi) = eval(f, c + dx);
        kron += WGK[k] * (lo + hi);
        inner += WGK[k] * (elo + ehi);
        if k % 2 == 1 {
            gauss += WG[k / 2] * (lo + hi);
        }
    }
    Piece {
        a,
        b,
        value: kron * h,
        error: ((kron - gauss) * h).abs(),
        inner: inner * h.abs(),
    }
}

/// Globally adaptive bisection on a finite interval.
fn adapt(
    mut f: impl FnMut(f64) -> (f64, f64),
    a: f64,
    b: f64,
    tol: Tolerance,
) -> Result<Estimate, QuadratureError> {
    let mut heap = BinaryHeap::new();
    let first = gk15(&mut f, a, b);
    let (mut value, mut error) = (first.value, first.error);
    heap.push(first);
    while error > tol.abs.max(tol.rel * value.abs()) {
        if heap.len() >= tol.max_intervals {
            return Err(QuadratureError::NotConverged {
                value,
                error_bound: error,
            });
        }
        let worst = heap.pop().expect("heap is never empty");
        let mid = 0.5 * (worst.a + worst.b);
        let (l, r) = (gk15(&mut f, worst.a, mid), gk15(&mut f, mid, worst.b));
        value += l.value + r.value - worst.value;
        error += l.error + r.error - worst.error;
        heap.push(l);
        heap.push(r);
    }
    // Re-sum to shed the drift of the running updates.
    let value = heap.iter().map(|p| p.value).sum();
    let error = heap.iter().map(|p| p.error + p.inner).sum();
    Ok(Estimate { value, error })
}

/// One-dimensional integral over `range`.
pub fn integrate(
    mut f: impl FnMut(f64) -> f64,
    range: Range,
    tol: Tolerance,
) -> Result<Estimate, QuadratureError> {
    integrate_with_error(|x| (f(x), 0.0), range, tol)
}

/// Like [`integrate`] for an integrand that carries its own error estimate,
/// which is integrated alongside and added to the result's error.
fn integrate_with_error(
    mut f: impl FnMut(f64) -> (f64, f64),
    range: Range,
    tol: Tolerance,
) -> Result<Estimate, QuadratureError> {
    match range {
        Range::Finite(a, b) => adapt(f, a, b, tol),
        Range::Above(a) => adapt(
            |t| {
                let s = 1.0 - t;
                let (v, e) = f(a + t / s);
                let jac = 1.0 / (s * s);
                (v * jac, e * jac)
            },
            0.0,
            1.0,
            tol,
        ),
        Range::Real => adapt(
            |t| {
                let s = 1.0 - t * t;
                let (v, e) = f(t / s);
                let jac = (1.0 + t * t) / (s * s);
                (v * jac, e * jac)
            },
            -1.0,
            1.0,
            tol,
        ),
    }
}

/// Iterated integral `∫ dx_0 ∫ dx_1 … f(x)` where the range of `x_k` may
/// depend on `x_0..x_{k−1}`. Inner integrals use a tighter relative tolerance.
pub fn integrate_nested(
    dims: usize,
    range: &dyn Fn(usize, &[f64]) -> Range,
    f: &dyn Fn(&[f64]) -> f64,
    tol: Tolerance,
) -> Result<Estimate, QuadratureError> {
    if dims == 0 || dims > 3 {
        return Err(QuadratureError::Dimension(dims));
    }
    let mut x = vec![0.0; dims];
    let est = level(0, dims, range, f, tol, &mut x)?;
    if est.error > tol.abs.max(tol.rel * est.value.abs()) * 10.0 {
        return Err(QuadratureError::NotConverged {
            value: est.value,
            error_bound: est.error,
        });
    }
    Ok(est)
}

fn level(
    k: usize,
    dims: usize,
    range: &dyn Fn(usize, &[f64]) -> Range,
    f: &dyn Fn(&[f64]) -> f64,
    tol: Tolerance,
    x: &mut Vec<f64>,
) -> Result<Estimate, QuadratureError> {
    let r = range(k, &x[..k]);
    if k + 1 == dims {
        return integrate(
            |t| {
                x[k] = t;
                f(x)
            },
            r,
            tol,
        );
    }
    let inner_tol = Tolerance {
        rel: tol.rel * 0.1,
        abs: tol.abs * 0.1,
        ..tol
    };
    let mut inner_fail: Option<QuadratureError> = None;
    let est = integrate_with_error(
        |t| {
            x[k] = t;
            match level(k + 1, dims, range, f, inner_tol, x) {
                Ok(e) => (e.value, e.error),
                // Keep going with the best estimate; its bound is carried up.
                Err(QuadratureError::NotConverged { value, error_bound }) => (value, error_bound),
                Err(e) => {
                    inner_fail.get_or_insert(e);
                    (0.0, 0.0)
                }
            }
        },
        r,
        tol,
    );
    match inner_fail {
        Some(e) => Err(e),
        None => est,
    }
}

/// `∫ exp(log_density)` over `ranges`, iterated in the given coordinate order.
pub fn quadrature_mass(
    log_density: &dyn Fn(&[f64]) -> f64,
    ranges: &[Range],
    tol: Tolerance,
) -> Result<Estimate, QuadratureError> {
    integrate_nested(
        ranges.len(),
        &|k, _| ranges[k],
        &|x| log_density(x).exp(),
        tol,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn standard_normal_mass() {
        let e = integrate(
            |x| (-0.5 * x * x).exp() / (2.0 * PI).sqrt(),
            Range::Real,
            Tolerance::default(),
        )
        .unwrap();
        assert!((e.value - 1.0).abs() < 1e-8, "{e:?}");
    }

    #[test]
    fn half_line_and_finite() {
        let tol = Tolerance::default();
        let e = integrate(|x| (-x).exp(), Range::Above(0.0), tol).unwrap();
        assert!((e.value - 1.0).abs() < 1e-9);
        let e = integrate(|x| 1.0 / x.sqrt(), Range::Finite(0.0, 1.0), tol).unwrap();
        assert!((e.value - 2.0).abs() < 1e-6);
        let e = integrate(|x| x.sin(), Range::Finite(0.0, PI), tol).unwrap();
        assert!((e.value - 2.0).abs() < 1e-12);
    }

    #[test]
    fn nested_triangle_region() {
        // ∫_0^1 ∫_0^x ∫_0^y 1 = 1/6.
        let e = integrate_nested(
            3,
            &|k, x| match k {
                0 => Range::Finite(0.0, 1.0),
                _ => Range::Finite(0.0, x[k - 1]),
            },
            &|_| 1.0,
            Tolerance::default(),
        )
        .unwrap();
        assert!((e.value - 1.0 / 6.0).abs() < 1e-10);
    }

    #[test]
    fn bivariate_gaussian_mass() {
        let e = quadrature_mass(
            &|x| -0.5 * (x[0] * x[0] + x[1] * x[1]) - (2.0 * PI).ln(),
            &[Range::Real, Range::Real],
            Tolerance::default(),
        )
        .unwrap();
        assert!((e.value - 1.0).abs() < 1e-7);
    }

    #[test]
    fn reports_failure() {
        let tol = Tolerance {
            max_intervals: 3,
            ..Tolerance::default()
        };
        let r = integrate(|x| (1.0 / x).sin(), Range::Finite(1e-6, 1.0), tol);
        assert!(matches!(r, Err(QuadratureError::NotConverged { .. })));
        assert!(matches!(
            integrate_nested(4, &|_, _| Range::Real, &|_| 0.0, tol),
            Err(QuadratureError::Dimension(4))
        ));
    }
}
