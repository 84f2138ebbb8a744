use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const NORMALIZATION_TOL: f64 = 1e-12;

/// Probability mass function on the nonnegative integers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", try_from = "DistSpec")]
pub enum DiscreteDist {
    /// `P(n) = (1-p)^(n-1) p` for `n >= 1`.
    Geometric { p: f64 },
    /// All mass on a single value.
    Point { value: u64 },
    /// `P(offset + i) = probs[i]`.
    Table {
        offset: u64,
        probs: Vec<f64>,
        #[serde(skip)]
        cdf: Vec<f64>,
    },
}

/// Wire form; deserialization goes through the validating constructors.
#[derive(Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum DistSpec {
    Geometric { p: f64 },
    Point { value: u64 },
    Table { offset: u64, probs: Vec<f64> },
}

impl TryFrom<DistSpec> for DiscreteDist {
    type Error = Error;

    fn try_from(spec: DistSpec) -> Result<Self> {
        match spec {
            DistSpec::Geometric { p } => Self::geometric(p),
            DistSpec::Point { value } => Ok(Self::point(value)),
            DistSpec::Table { offset, probs } => Self::table(offset, probs),
        }
    }
}

impl DiscreteDist {
    pub fn geometric(p: f64) -> Result<Self> {
        if !(p > 0.0 && p <= 1.0) {
            return Err(Error::InvalidDistribution(format!(
                "geometric parameter {p} outside (0, 1]"
            )));
        }
        Ok(DiscreteDist::Geometric { p })
    }

    pub fn point(value: u64) -> Self {
        DiscreteDist::Point { value }
    }

    /// Table from `(value, probability)` pairs; values need not be sorted.
    pub fn from_pairs(pairs: &[(u64, f64)]) -> Result<Self> {
        if pairs.is_empty() {
            return Err(Error::InvalidDistribution("empty pmf".into()));
        }
        let lo = pairs.iter().map(|p| p.0).min().unwrap();
        let hi = pairs.iter().map(|p| p.0).max().unwrap();
        let mut probs = vec![0.0; (hi - lo + 1) as usize];
        for &(v, p) in pairs {
            probs[(v - lo) as usize] += p;
        }
        Self::table(lo, probs)
    }

    pub fn table(offset: u64, probs: Vec<f64>) -> Result<Self> {
        if probs.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
            return Err(Error::InvalidDistribution("negative or non-finite probability".into()));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > NORMALIZATION_TOL {
            return Err(Error::InvalidDistribution(format!("probabilities sum to {total}")));
        }
        // trim zero mass at both ends so support_min is meaningful
        let first = probs.iter().position(|p| *p > 0.0).unwrap_or(0);
        let last = probs.iter().rposition(|p| *p > 0.0).unwrap_or(0);
        let probs = probs[first..=last].to_vec();
        let mut acc = 0.0;
        let cdf = probs
            .iter()
            .map(|p| {
                acc += p;
                acc
            })
            .collect();
        Ok(DiscreteDist::Table {
            offset: offset + first as u64,
            probs,
            cdf,
        })
    }

    pub fn support_min(&self) -> u64 {
        match self {
            DiscreteDist::Geometric { .. } => 1,
            DiscreteDist::Point { value } => *value,
            DiscreteDist::Table { offset, .. } => *offset,
        }
    }

    pub fn pmf(&self, n: u64) -> f64 {
        match self {
            DiscreteDist::Geometric { p } => {
                if n == 0 {
                    0.0
                } else {
                    (1.0 - p).powi((n - 1) as i32) * p
                }
            }
            DiscreteDist::Point { value } => f64::from(u8::from(n == *value)),
            DiscreteDist::Table { offset, probs, .. } => n
                .checked_sub(*offset)
                .and_then(|i| probs.get(i as usize))
                .copied()
                .unwrap_or(0.0),
        }
    }

    pub fn mean(&self) -> f64 {
        match self {
            DiscreteDist::Geometric { p } => 1.0 / p,
            DiscreteDist::Point { value } => *value as f64,
            DiscreteDist::Table { offset, probs, .. } => probs
                .iter()
                .enumerate()
                .map(|(i, p)| (*offset + i as u64) as f64 * p)
                .sum(),
        }
    }

    /// `E[X^2]`.
    pub fn second_moment(&self) -> f64 {
        match self {
            DiscreteDist::Geometric { p } => (2.0 - p) / (p * p),
            DiscreteDist::Point { value } => (*value as f64).powi(2),
            DiscreteDist::Table { offset, probs, .. } => probs
                .iter()
                .enumerate()
                .map(|(i, p)| ((*offset + i as u64) as f64).powi(2) * p)
                .sum(),
        }
    }

    /// Probability generating function `sum_n P(n) z^n` for `z` in `[0, 1]`.
    ///
    /// Finite supports are summed exactly; the geometric law uses its closed form.
    pub fn pgf(&self, z: f64) -> f64 {
        assert!((0.0..=1.0).contains(&z), "pgf argument {z} outside [0, 1]");
        match self {
            DiscreteDist::Geometric { p } => p * z / (1.0 - (1.0 - p) * z),
            DiscreteDist::Point { value } => z.powi(*value as i32),
            DiscreteDist::Table { offset, probs, .. } => {
                // Horner over the table, then shift by z^offset
                let poly = probs.iter().rev().fold(0.0, |acc, p| acc * z + p);
                poly * z.powi(*offset as i32)
            }
        }
    }

    /// Inverse-CDF transform of a uniform `u` in `[0, 1)`.
    pub fn quantile(&self, u: f64) -> u64 {
        match self {
            DiscreteDist::Geometric { p } => {
                if *p >= 1.0 {
                    return 1;
                }
                // smallest n with 1 - (1-p)^n > u
                let n = ((1.0 - u).ln() / (1.0 - p).ln()).floor() as u64 + 1;
                n.max(1)
            }
            DiscreteDist::Point { value } => *value,
            DiscreteDist::Table { offset, cdf, .. } => {
                let i = cdf.partition_point(|c| *c <= u);
                offset + i.min(cdf.len() - 1) as u64
            }
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        self.quantile(rng.random::<f64>())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_round_trips_through_json() {
        let d = DiscreteDist::from_pairs(&[(1, 0.5), (3, 0.5)]).unwrap();
        let back: DiscreteDist = serde_json::from_str(&serde_json::to_string(&d).unwrap()).unwrap();
        assert_eq!(back, d);
        assert_eq!(back.quantile(0.75), 3);
        let bad = r#"{"kind":"table","offset":1,"probs":[0.5,0.4]}"#;
        assert!(serde_json::from_str::<DiscreteDist>(bad).is_err());
    }

    #[test]
    fn pgf_at_one_is_one() {
        let dists = [
            DiscreteDist::geometric(0.3).unwrap(),
            DiscreteDist::point(4),
            DiscreteDist::from_pairs(&[(1, 0.5), (4, 0.5)]).unwrap(),
        ];
        for d in dists {
            assert!((d.pgf(1.0) - 1.0).abs() < 1e-15, "{d:?}");
        }
    }

    #[test]
    fn geometric_pgf_matches_series() {
        let d = DiscreteDist::geometric(0.3).unwrap();
        let series: f64 = (1..400).map(|n| d.pmf(n) * 0.5f64.powi(n as i32)).sum();
        let expected = 0.15 / (1.0 - 0.35);
        assert!((d.pgf(0.5) - expected).abs() < 1e-15);
        assert!((series - expected).abs() < 1e-13);
        assert!((expected - 0.230_769_230_769_230_8).abs() < 1e-15);
    }

    #[test]
    fn point_mass_pgf() {
        assert!((DiscreteDist::point(3).pgf(0.5) - 0.125).abs() < 1e-15);
    }

    #[test]
    fn table_pgf_matches_direct_sum() {
        let d = DiscreteDist::from_pairs(&[(2, 0.25), (3, 0.5), (7, 0.25)]).unwrap();
        let z: f64 = 0.7;
        let direct = 0.25 * z.powi(2) + 0.5 * z.powi(3) + 0.25 * z.powi(7);
        assert!((d.pgf(z) - direct).abs() < 1e-15);
        assert_eq!(d.support_min(), 2);
    }

    #[test]
    fn moments() {
        let g = DiscreteDist::geometric(0.5).unwrap();
        assert_eq!(g.mean(), 2.0);
        assert_eq!(g.second_moment(), 6.0);
        let t = DiscreteDist::from_pairs(&[(1, 0.5), (4, 0.5)]).unwrap();
        assert_eq!(t.mean(), 2.5);
        assert_eq!(t.second_moment(), 8.5);
    }

    #[test]
    fn rejects_unnormalized() {
        assert!(DiscreteDist::from_pairs(&[(1, 0.5), (2, 0.4)]).is_err());
        assert!(DiscreteDist::from_pairs(&[(1, 1.5), (2, -0.5)]).is_err());
        assert!(DiscreteDist::geometric(0.0).is_err());
        assert!(DiscreteDist::geometric(1.2).is_err());
    }

    #[test]
    fn quantile_inverts_cdf() {
        let g = DiscreteDist::geometric(0.5).unwrap();
        assert_eq!(g.quantile(0.0), 1);
        assert_eq!(g.quantile(0.49), 1);
        assert_eq!(g.quantile(0.5), 2);
        assert_eq!(g.quantile(0.74), 2);
        assert_eq!(g.quantile(0.75), 3);
        let t = DiscreteDist::from_pairs(&[(1, 0.5), (4, 0.5)]).unwrap();
        assert_eq!(t.quantile(0.0), 1);
        assert_eq!(t.quantile(0.4999), 1);
        assert_eq!(t.quantile(0.5), 4);
        assert_eq!(t.quantile(0.999_999), 4);
        assert_eq!(DiscreteDist::geometric(1.0).unwrap().quantile(0.9), 1);
    }
}
