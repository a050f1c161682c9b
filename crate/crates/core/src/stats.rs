//! Rank and linear correlation with the metric polarity convention.
//!
//! Coefficients for lower-is-better metrics are reported with their sign
//! flipped, so a metric that tracks quality well always shows up positive.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StatsError {
    #[error("series lengths differ: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("need at least 3 pairs, got {0}")]
    TooShort(usize),
    #[error("series contains non-finite values")]
    NonFinite,
    #[error("series is constant; correlation undefined")]
    DegenerateSeries,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Polarity {
    #[serde(rename = "higher")]
    HigherIsBetter,
    #[serde(rename = "lower")]
    LowerIsBetter,
}

impl Polarity {
    pub fn sign(self) -> f64 {
        match self {
            Polarity::HigherIsBetter => 1.0,
            Polarity::LowerIsBetter => -1.0,
        }
    }
}

impl fmt::Display for Polarity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Polarity::HigherIsBetter => "higher",
            Polarity::LowerIsBetter => "lower",
        })
    }
}

impl FromStr for Polarity {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "higher" | "higher-is-better" => Ok(Polarity::HigherIsBetter),
            "lower" | "lower-is-better" => Ok(Polarity::LowerIsBetter),
            other => Err(format!("unknown polarity '{other}'")),
        }
    }
}

/// Metric values paired with quality scores.
#[derive(Debug, Clone)]
pub struct PairedSeries {
    xs: Vec<f64>,
    ys: Vec<f64>,
    polarity: Polarity,
}

impl PairedSeries {
    pub fn new(xs: Vec<f64>, ys: Vec<f64>, polarity: Polarity) -> Result<Self, StatsError> {
        if xs.len() != ys.len() {
            return Err(StatsError::LengthMismatch(xs.len(), ys.len()));
        }
        if xs.len() < 3 {
            return Err(StatsError::TooShort(xs.len()));
        }
        if xs.iter().chain(&ys).any(|v| !v.is_finite()) {
            return Err(StatsError::NonFinite);
        }
        Ok(Self { xs, ys, polarity })
    }

    pub fn len(&self) -> usize {
        self.xs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xs.is_empty()
    }

    pub fn xs(&self) -> &[f64] {
        &self.xs
    }

    pub fn ys(&self) -> &[f64] {
        &self.ys
    }

    pub fn polarity(&self) -> Polarity {
        self.polarity
    }
}

/// Ascending 1-based ranks; ties share the mean of the ranks they span.
pub fn ranks_with_ties(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && values[order[end]] == values[order[start]] {
            end += 1;
        }
        // positions start..end hold ranks start+1..=end
        let shared = (start + 1 + end) as f64 / 2.0;
        for &idx in &order[start..end] {
            ranks[idx] = shared;
        }
        start = end;
    }
    ranks
}

fn pearson(xs: &[f64], ys: &[f64]) -> Result<f64, StatsError> {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (&x, &y) in xs.iter().zip(ys) {
        let dx = x - mx;
        let dy = y - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(StatsError::DegenerateSeries);
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// Spearman's rank correlation (Pearson on tie-averaged ranks), polarity-adjusted.
pub fn srcc(series: &PairedSeries) -> Result<f64, StatsError> {
    let rx = ranks_with_ties(&series.xs);
    let ry = ranks_with_ties(&series.ys);
    Ok(series.polarity.sign() * pearson(&rx, &ry)?)
}

/// Pearson's correlation on raw values, polarity-adjusted.
pub fn pcc(series: &PairedSeries) -> Result<f64, StatsError> {
    Ok(series.polarity.sign() * pearson(&series.xs, &series.ys)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn series(xs: &[f64], ys: &[f64], p: Polarity) -> PairedSeries {
        PairedSeries::new(xs.to_vec(), ys.to_vec(), p).unwrap()
    }

    #[test]
    fn ranks_simple_and_tied() {
        assert_eq!(ranks_with_ties(&[10.0, 20.0, 30.0]), vec![1.0, 2.0, 3.0]);
        assert_eq!(ranks_with_ties(&[5.0, 5.0, 9.0]), vec![1.5, 1.5, 3.0]);
        assert_eq!(ranks_with_ties(&[3.0, 1.0, 3.0, 3.0]), vec![3.0, 1.0, 3.0, 3.0]);
    }

    #[test]
    fn srcc_perfect_and_flipped() {
        let s = series(&[1.0, 2.0, 3.0], &[10.0, 20.0, 30.0], Polarity::HigherIsBetter);
        assert_eq!(srcc(&s).unwrap(), 1.0);
        let s = series(&[1.0, 2.0, 3.0], &[30.0, 20.0, 10.0], Polarity::LowerIsBetter);
        assert_eq!(srcc(&s).unwrap(), 1.0);
    }

    #[test]
    fn pcc_affine_and_negated() {
        let xs = [0.5, 1.5, -2.0, 4.0];
        let ys: Vec<f64> = xs.iter().map(|x| 3.0 * x + 7.0).collect();
        let s = series(&xs, &ys, Polarity::HigherIsBetter);
        assert!((pcc(&s).unwrap() - 1.0).abs() < 1e-15);
        let neg: Vec<f64> = xs.iter().map(|x| -x).collect();
        let s = series(&xs, &neg, Polarity::HigherIsBetter);
        assert!((pcc(&s).unwrap() + 1.0).abs() < 1e-15);
    }

    #[test]
    fn constant_series_is_degenerate() {
        let s = series(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0], Polarity::HigherIsBetter);
        assert_eq!(srcc(&s).unwrap_err(), StatsError::DegenerateSeries);
        assert_eq!(pcc(&s).unwrap_err(), StatsError::DegenerateSeries);
    }

    #[test]
    fn construction_errors() {
        assert_eq!(
            PairedSeries::new(vec![1.0, 2.0], vec![1.0, 2.0], Polarity::HigherIsBetter).unwrap_err(),
            StatsError::TooShort(2)
        );
        assert_eq!(
            PairedSeries::new(vec![1.0; 3], vec![1.0; 4], Polarity::HigherIsBetter).unwrap_err(),
            StatsError::LengthMismatch(3, 4)
        );
        assert_eq!(
            PairedSeries::new(vec![1.0, f64::NAN, 2.0], vec![1.0; 3], Polarity::HigherIsBetter).unwrap_err(),
            StatsError::NonFinite
        );
    }

    #[test]
    fn polarity_round_trips_through_text() {
        for p in [Polarity::HigherIsBetter, Polarity::LowerIsBetter] {
            assert_eq!(p.to_string().parse::<Polarity>().unwrap(), p);
        }
    }
}
