use serde::{Deserialize, Serialize};

use super::dist::DiscreteDist;
use super::stream_rng;
use crate::error::{Error, Result};
use rand::Rng;

pub(crate) const ARRIVAL_STREAM: u64 = 0;

/// How an idle source population turns into slot arrivals.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SourceLaw {
    /// At most one arrival per slot, with probability `(N - n) α`.
    #[default]
    Linear,
    /// At most one arrival per slot, with probability `1 - (1 - α)^(N - n)`.
    AtLeastOne,
    /// Every idle source arrives independently; batches allowed.
    Independent,
}

impl SourceLaw {
    /// Probability of an arrival slot when `idle` sources are outside the system.
    pub fn slot_probability(self, idle: u64, alpha: f64) -> f64 {
        match self {
            SourceLaw::Linear => idle as f64 * alpha,
            SourceLaw::AtLeastOne | SourceLaw::Independent => {
                1.0 - (1.0 - alpha).powi(idle as i32)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ArrivalSpec {
    Bernoulli { alpha: f64 },
    Renewal { interarrival: DiscreteDist },
    FinitePopulation { sources: u32, alpha: f64, law: SourceLaw },
    Explicit { slots: Vec<u64> },
}

impl ArrivalSpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            ArrivalSpec::Bernoulli { alpha } => check_probability(*alpha),
            ArrivalSpec::Renewal { interarrival } => {
                if interarrival.support_min() < 1 {
                    return Err(Error::InvalidDistribution(
                        "inter-arrival times must be at least one slot".into(),
                    ));
                }
                Ok(())
            }
            ArrivalSpec::FinitePopulation { sources, alpha, law } => {
                check_probability(*alpha)?;
                if *sources == 0 {
                    return Err(Error::InvalidParameter("population must be at least 1".into()));
                }
                if *law == SourceLaw::Linear && f64::from(*sources) * alpha > 1.0 {
                    return Err(Error::InvalidParameter(format!(
                        "linear source law needs N α <= 1, got {}",
                        f64::from(*sources) * alpha
                    )));
                }
                Ok(())
            }
            ArrivalSpec::Explicit { slots } => {
                if slots.first().is_some_and(|a| *a == 0) {
                    return Err(Error::InvalidParameter("explicit arrivals start at slot 1".into()));
                }
                if slots.windows(2).any(|w| w[1] < w[0]) {
                    return Err(Error::InvalidParameter("explicit arrivals must be nondecreasing".into()));
                }
                Ok(())
            }
        }
    }

    /// Long-run arrival rate where it is known in closed form.
    pub fn rate(&self) -> Option<f64> {
        match self {
            ArrivalSpec::Bernoulli { alpha } => Some(*alpha),
            ArrivalSpec::Renewal { interarrival } => Some(1.0 / interarrival.mean()),
            _ => None,
        }
    }
}

fn check_probability(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("arrival probability {alpha} outside (0, 1)")))
    }
}

/// Arrival slots in `1..=horizon`, deterministic in `(spec, seed)`.
pub fn gen_arrivals(spec: &ArrivalSpec, seed: u64, horizon: u64) -> Result<Vec<u64>> {
    if horizon == 0 {
        return Err(Error::InvalidParameter("horizon must be at least 1".into()));
    }
    spec.validate()?;
    let mut rng = stream_rng(seed, ARRIVAL_STREAM);
    match spec {
        ArrivalSpec::Bernoulli { alpha } => Ok((1..=horizon)
            .filter(|_| rng.random::<f64>() < *alpha)
            .collect()),
        ArrivalSpec::Renewal { interarrival } => {
            let mut out = Vec::new();
            let mut t = 0;
            loop {
                t += interarrival.sample(&mut rng);
                if t > horizon {
                    break;
                }
                out.push(t);
            }
            Ok(out)
        }
        ArrivalSpec::FinitePopulation { .. } => Err(Error::StateDependentArrivals),
        ArrivalSpec::Explicit { slots } => {
            if let Some(last) = slots.last().filter(|a| **a > horizon) {
                return Err(Error::InvalidParameter(format!(
                    "explicit arrival at {last} beyond horizon {horizon}"
                )));
            }
            Ok(slots.clone())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn explicit_passthrough() {
        let spec = ArrivalSpec::Explicit { slots: vec![1, 3] };
        assert_eq!(gen_arrivals(&spec, 99, 12).unwrap(), vec![1, 3]);
        assert!(gen_arrivals(&spec, 99, 2).is_err());
        assert!(gen_arrivals(&ArrivalSpec::Explicit { slots: vec![3, 1] }, 0, 12).is_err());
    }

    #[test]
    fn bernoulli_is_deterministic() {
        let spec = ArrivalSpec::Bernoulli { alpha: 0.3 };
        let a = gen_arrivals(&spec, 7, 10_000).unwrap();
        let b = gen_arrivals(&spec, 7, 10_000).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, gen_arrivals(&spec, 8, 10_000).unwrap());
        // at most one arrival per slot
        assert!(a.windows(2).all(|w| w[0] < w[1]));
        assert!(a.iter().all(|t| (1..=10_000).contains(t)));
    }

    #[test]
    fn bernoulli_rate_within_three_standard_errors() {
        let alpha = 0.3;
        let t = 1_000_000u64;
        let n = gen_arrivals(&ArrivalSpec::Bernoulli { alpha }, 2024, t).unwrap().len();
        let rate = n as f64 / t as f64;
        let se = (alpha * (1.0 - alpha) / t as f64).sqrt();
        assert!((rate - alpha).abs() < 3.0 * se, "rate {rate}");
    }

    #[test]
    fn rejects_bad_alpha() {
        for alpha in [0.0, 1.0, -0.1, 1.5] {
            assert!(gen_arrivals(&ArrivalSpec::Bernoulli { alpha }, 1, 10).is_err());
        }
        assert!(gen_arrivals(&ArrivalSpec::Bernoulli { alpha: 0.5 }, 1, 0).is_err());
    }

    #[test]
    fn finite_population_needs_coupling() {
        let spec = ArrivalSpec::FinitePopulation {
            sources: 3,
            alpha: 0.1,
            law: SourceLaw::Linear,
        };
        assert!(matches!(gen_arrivals(&spec, 1, 10), Err(Error::StateDependentArrivals)));
        let too_big = ArrivalSpec::FinitePopulation {
            sources: 20,
            alpha: 0.1,
            law: SourceLaw::Linear,
        };
        assert!(too_big.validate().is_err());
    }

    #[test]
    fn renewal_with_point_interarrival() {
        let spec = ArrivalSpec::Renewal {
            interarrival: DiscreteDist::point(3),
        };
        assert_eq!(gen_arrivals(&spec, 0, 10).unwrap(), vec![3, 6, 9]);
    }

    #[test]
    fn source_laws_agree_to_first_order() {
        let lin = SourceLaw::Linear.slot_probability(5, 0.001);
        let sat = SourceLaw::AtLeastOne.slot_probability(5, 0.001);
        assert!((lin - sat).abs() < 1e-5);
        assert_eq!(SourceLaw::Linear.slot_probability(0, 0.2), 0.0);
    }
}
