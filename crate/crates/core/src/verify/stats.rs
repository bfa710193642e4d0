//! Monte Carlo means, correlations and the independence scan.

use serde::{Deserialize, Serialize};

/// Sample mean and its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanEstimate {
    pub mean: f64,
    pub se: f64,
    pub n: usize,
}

impl MeanEstimate {
    /// `|mean − target| / se`.
    pub fn z_score(&self, target: f64) -> f64 {
        if self.se == 0.0 {
            if self.mean == target {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            (self.mean - target).abs() / self.se
        }
    }
}

/// Panics when fewer than two values are given.
pub fn mc_mean(values: &[f64]) -> MeanEstimate {
    assert!(values.len() >= 2, "need at least two draws");
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    MeanEstimate {
        mean,
        se: (var / n).sqrt(),
        n: values.len(),
    }
}

/// Mean of `f` over `n` draws from `draw`.
pub fn mc_mean_of<R, T>(
    n: usize,
    rng: &mut R,
    mut draw: impl FnMut(&mut R) -> T,
    f: impl Fn(&T) -> f64,
) -> MeanEstimate {
    let v: Vec<f64> = (0..n).map(|_| f(&draw(rng))).collect();
    mc_mean(&v)
}

/// Difference of two independent means.
pub fn difference(a: MeanEstimate, b: MeanEstimate) -> MeanEstimate {
    MeanEstimate {
        mean: a.mean - b.mean,
        se: a.se.hypot(b.se),
        n: a.n.min(b.n),
    }
}

/// Pearson correlation with the delta-method standard error
/// `sd((x−x̄)(y−ȳ)) / (s_x s_y √N)`, valid under independence and beyond.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Correlation {
    pub r: f64,
    pub se: f64,
}

pub fn correlation(x: &[f64], y: &[f64]) -> Correlation {
    assert_eq!(x.len(), y.len());
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sx = (x.iter().map(|v| (v - mx).powi(2)).sum::<f64>() / n).sqrt();
    let sy = (y.iter().map(|v| (v - my).powi(2)).sum::<f64>() / n).sqrt();
    let prods: Vec<f64> = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).collect();
    let cov = prods.iter().sum::<f64>() / n;
    let sd_prod = (prods.iter().map(|p| (p - cov).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
    Correlation {
        r: cov / (sx * sy),
        se: sd_prod / (sx * sy * n.sqrt()),
    }
}

/// One entry of an independence scan.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairCorrelation {
    pub i: usize,
    pub j: usize,
    pub r: f64,
    pub se: f64,
    /// `|r| / se`.
    pub z: f64,
}

/// Correlation of columns `i` and `j` of `rows` for every requested pair.
pub fn independence_scan(rows: &[Vec<f64>], pairs: &[(usize, usize)]) -> Vec<PairCorrelation> {
    let column = |k: usize| rows.iter().map(|r| r[k]).collect::<Vec<_>>();
    pairs
        .iter()
        .map(|&(i, j)| {
            let c = correlation(&column(i), &column(j));
            PairCorrelation {
                i,
                j,
                r: c.r,
                se: c.se,
                z: c.r.abs() / c.se,
            }
        })
        .collect()
}
