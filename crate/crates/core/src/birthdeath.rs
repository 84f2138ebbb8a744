//! Discrete birth–death chains and B/Geom/1 stationary laws.
//!
//! A chain moves up from `n` with probability `α(n)(1 - β(n))` and down with
//! probability `(1 - α(n))β(n)`. Balance across each cut gives the product
//! form `π(n) = π(0) Π_{j<n} γ(j)` with
//! `γ(j) = α(j)(1 - β(j)) / (β(j+1)(1 - α(j+1)))`.

use serde::{Deserialize, Serialize};

use crate::coherence::{ClassificationTable, CoherenceClass};
use crate::engine::SourceLaw;
use crate::error::{Error, Result};

/// Tail mass left after truncation.
const TAIL: f64 = 1e-13;
/// Hard cap on the number of states explored.
const MAX_STATES: usize = 10_000_000;

pub trait BirthDeath {
    /// Arrival probability `α(n)`.
    fn arrival(&self, n: usize) -> f64;
    /// Completion probability `β(n)`.
    fn completion(&self, n: usize) -> f64;
    /// Largest reachable state, if finite.
    fn max_state(&self) -> Option<usize> {
        None
    }
}

/// Stationary distribution by the product form, truncated once the
/// remaining mass is below `1e-13` and renormalized.
pub fn product_form<B: BirthDeath + ?Sized>(chain: &B) -> Result<Vec<f64>> {
    let mut weights = vec![1.0];
    let mut total = 1.0;
    let cap = chain.max_state().map_or(MAX_STATES, |m| m.min(MAX_STATES));
    let mut n = 0;
    while n < cap {
        let (a, b) = (chain.arrival(n), chain.completion(n));
        let (a1, b1) = (chain.arrival(n + 1), chain.completion(n + 1));
        for p in [a, b, a1, b1] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::InvalidParameter(format!("probability {p} outside [0, 1]")));
            }
        }
        let up = a * (1.0 - b);
        if up == 0.0 {
            break;
        }
        let down = b1 * (1.0 - a1);
        if down == 0.0 {
            return Err(Error::InvalidParameter(format!(
                "state {} is entered but never left downward",
                n + 1
            )));
        }
        let ratio = up / down;
        let w = weights[n] * ratio;
        weights.push(w);
        total += w;
        n += 1;
        // geometric tail bound once the ratio has settled below one
        if ratio < 1.0 && w * ratio / (1.0 - ratio) < TAIL * total {
            break;
        }
        if !total.is_finite() {
            break;
        }
    }
    if chain.max_state().is_none() && n >= cap || !total.is_finite() {
        return Err(Error::Unstable("partial sums of the product form diverge".into()));
    }
    Ok(weights.into_iter().map(|w| w / total).collect())
}

/// Constant arrivals with the completion profile of one coherence class.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassProfile {
    pub alpha: f64,
    pub beta: f64,
    pub class: CoherenceClass,
}

impl BirthDeath for ClassProfile {
    fn arrival(&self, _: usize) -> f64 {
        self.alpha
    }

    fn completion(&self, n: usize) -> f64 {
        match (self.class, n) {
            (CoherenceClass::SubCoherent, _) => self.beta,
            (_, 0) => 0.0,
            (CoherenceClass::SuperCoherent, 1) => self.beta / (1.0 + self.beta),
            _ => self.beta,
        }
    }
}

/// `N` sources feeding one geometric server, observed coherently.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FinitePopulationProfile {
    pub sources: u32,
    pub alpha: f64,
    pub beta: f64,
    pub law: SourceLaw,
}

impl BirthDeath for FinitePopulationProfile {
    fn arrival(&self, n: usize) -> f64 {
        let idle = u64::from(self.sources).saturating_sub(n as u64);
        self.law.slot_probability(idle, self.alpha).min(1.0)
    }

    fn completion(&self, n: usize) -> f64 {
        if n == 0 {
            0.0
        } else {
            self.beta
        }
    }

    fn max_state(&self) -> Option<usize> {
        Some(self.sources as usize)
    }
}

/// Mean of a distribution on `0, 1, 2, ...`.
pub fn mean(pi: &[f64]) -> f64 {
    pi.iter().enumerate().map(|(n, p)| n as f64 * p).sum()
}

/// `π(n)` from the two-boundary form: `π(1) = γ(0)π(0)`,
/// `π(n) = γ(0)γ(1)γ^(n-2)π(0)` for `n >= 2`.
pub fn boundary_form_pi(gamma0: f64, gamma1: f64, gamma: f64, n: usize) -> f64 {
    let pi0 = (1.0 - gamma) / (1.0 - gamma + gamma0 - gamma0 * gamma + gamma0 * gamma1);
    match n {
        0 => pi0,
        1 => gamma0 * pi0,
        _ => gamma0 * gamma1 * gamma.powi(n as i32 - 2) * pi0,
    }
}

/// Mean of the two-boundary form.
pub fn boundary_form_mean(gamma0: f64, gamma1: f64, gamma: f64) -> f64 {
    let pi0 = boundary_form_pi(gamma0, gamma1, gamma, 0);
    pi0 * (gamma0 + gamma0 * gamma1 * (2.0 - gamma) / (1.0 - gamma).powi(2))
}

/// Bernoulli(α) arrivals, geometric(β) service, observed in one class.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BGeom1Params {
    pub alpha: f64,
    pub beta: f64,
    pub class: CoherenceClass,
}

impl BGeom1Params {
    pub fn new(alpha: f64, beta: f64, class: CoherenceClass) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0 && beta > 0.0 && beta < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "need 0 < α, β < 1, got α = {alpha}, β = {beta}"
            )));
        }
        if alpha >= beta {
            return Err(Error::Unstable(format!("ρ = {} >= 1", alpha / beta)));
        }
        Ok(BGeom1Params { alpha, beta, class })
    }

    pub fn rho(&self) -> f64 {
        self.alpha / self.beta
    }

    /// `γ = α(1 - β) / (β(1 - α))`.
    pub fn gamma(&self) -> f64 {
        self.alpha * (1.0 - self.beta) / (self.beta * (1.0 - self.alpha))
    }

    pub fn profile(&self) -> ClassProfile {
        ClassProfile {
            alpha: self.alpha,
            beta: self.beta,
            class: self.class,
        }
    }

    /// Boundary ratios `(γ(0), γ(1))` of this class's profile.
    pub fn boundary_ratios(&self) -> (f64, f64) {
        let (a, b, g) = (self.alpha, self.beta, self.gamma());
        match self.class {
            CoherenceClass::Coherent => (a / (b * (1.0 - a)), g),
            CoherenceClass::SubCoherent => (g, g),
            CoherenceClass::SuperCoherent => (
                a * (1.0 + b) / (b * (1.0 - a)),
                a / (b * (1.0 - a) * (1.0 + b)),
            ),
        }
    }

    /// Class-specific closed form for `π(n)`.
    pub fn pi(&self, n: usize) -> f64 {
        let (a, rho, g) = (self.alpha, self.rho(), self.gamma());
        match (self.class, n) {
            (CoherenceClass::Coherent, 0) => 1.0 - rho,
            (CoherenceClass::Coherent, _) => rho * (1.0 - g) * g.powi(n as i32 - 1),
            (CoherenceClass::SubCoherent, _) => (1.0 - g) * g.powi(n as i32),
            (CoherenceClass::SuperCoherent, 0) => (1.0 - a) * (1.0 - rho),
            (CoherenceClass::SuperCoherent, 1) => (a + rho) * (1.0 - rho),
            (CoherenceClass::SuperCoherent, _) => rho * rho * (1.0 - g) * g.powi(n as i32 - 2),
        }
    }

    /// `π(0..=n_max)`.
    pub fn distribution(&self, n_max: usize) -> Vec<f64> {
        (0..=n_max).map(|n| self.pi(n)).collect()
    }

    /// Mean number of customers `L`.
    pub fn mean_customers(&self) -> f64 {
        let (a, b) = (self.alpha, self.beta);
        match self.class {
            CoherenceClass::Coherent => a * (1.0 - a) / (b - a),
            CoherenceClass::SubCoherent => a * (1.0 - b) / (b - a),
            CoherenceClass::SuperCoherent => {
                let g = self.gamma();
                let rho = self.rho();
                // Σ n π(n) over the closed form
                (a + rho) * (1.0 - rho) + rho * rho * (2.0 - g) / (1.0 - g)
            }
        }
    }

    /// `1 - π(0)`.
    pub fn one_or_more(&self) -> f64 {
        let rho = self.rho();
        match self.class {
            CoherenceClass::Coherent => rho,
            CoherenceClass::SubCoherent => self.gamma(),
            CoherenceClass::SuperCoherent => rho + self.alpha * (1.0 - rho),
        }
    }

    /// Mean time in system `W = (1 - α)/(β - α)`.
    pub fn mean_wait(&self) -> f64 {
        (1.0 - self.alpha) / (self.beta - self.alpha)
    }
}

/// `1 - π(0)` for every rule and epoch cell.
pub fn table61(alpha: f64, beta: f64) -> Result<[[f64; 6]; 5]> {
    let classes = ClassificationTable::compute()?;
    let mut out = [[0.0; 6]; 5];
    for row in classes.rows() {
        out[row.rule.index()][row.epoch.index()] =
            BGeom1Params::new(alpha, beta, row.class)?.one_or_more();
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use CoherenceClass::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn reference_distributions() {
        let coh = BGeom1Params::new(0.3, 0.5, Coherent).unwrap();
        assert!(close(coh.pi(0), 0.4, 1e-15));
        assert!(close(coh.pi(1), 12.0 / 35.0, 1e-15));
        assert!(close(coh.gamma(), 3.0 / 7.0, 1e-15));
        let sub = BGeom1Params::new(0.3, 0.5, SubCoherent).unwrap();
        assert!(close(sub.pi(0), 4.0 / 7.0, 1e-15));
        let sup = BGeom1Params::new(0.3, 0.5, SuperCoherent).unwrap();
        assert!(close(sup.pi(0), 0.28, 1e-15));
        assert!(close(sup.pi(1), 0.36, 1e-15));
    }

    #[test]
    fn reference_means_and_busy_fractions() {
        let l = |c| BGeom1Params::new(0.3, 0.5, c).unwrap().mean_customers();
        assert!(close(l(Coherent), 1.05, 1e-12));
        assert!(close(l(SubCoherent), 0.75, 1e-12));
        assert!(close(l(SuperCoherent), 1.35, 1e-12));
        let u = |c| BGeom1Params::new(0.3, 0.5, c).unwrap().one_or_more();
        assert!(close(u(Coherent), 0.6, 1e-15));
        assert!(close(u(SubCoherent), 3.0 / 7.0, 1e-15));
        assert!(close(u(SuperCoherent), 0.72, 1e-15));
    }

    #[test]
    fn product_form_reproduces_closed_forms() {
        for class in [Coherent, SubCoherent, SuperCoherent] {
            let p = BGeom1Params::new(0.3, 0.5, class).unwrap();
            let pf = product_form(&p.profile()).unwrap();
            for (n, v) in pf.iter().enumerate() {
                assert!(close(*v, p.pi(n), 1e-12), "{class} n={n}");
            }
            assert!(close(mean(&pf), p.mean_customers(), 1e-10));
        }
    }

    #[test]
    fn boundary_form_agrees() {
        for class in [Coherent, SubCoherent, SuperCoherent] {
            let p = BGeom1Params::new(0.25, 0.6, class).unwrap();
            let (g0, g1) = p.boundary_ratios();
            for n in 0..30 {
                assert!(close(boundary_form_pi(g0, g1, p.gamma(), n), p.pi(n), 1e-14));
            }
            assert!(close(boundary_form_mean(g0, g1, p.gamma()), p.mean_customers(), 1e-12));
        }
    }

    #[test]
    fn no_arrivals_means_empty() {
        struct Idle;
        impl BirthDeath for Idle {
            fn arrival(&self, _: usize) -> f64 {
                0.0
            }
            fn completion(&self, _: usize) -> f64 {
                0.5
            }
        }
        assert_eq!(product_form(&Idle).unwrap(), vec![1.0]);
    }

    #[test]
    fn unstable_profiles() {
        assert!(matches!(BGeom1Params::new(0.5, 0.5, Coherent), Err(Error::Unstable(_))));
        let bad = ClassProfile {
            alpha: 0.6,
            beta: 0.4,
            class: Coherent,
        };
        assert!(product_form(&bad).is_err());
    }

    #[test]
    fn finite_population_is_bounded() {
        let fp = FinitePopulationProfile {
            sources: 5,
            alpha: 0.05,
            beta: 0.5,
            law: SourceLaw::Linear,
        };
        let pi = product_form(&fp).unwrap();
        assert_eq!(pi.len(), 6);
        assert!(close(pi.iter().sum::<f64>(), 1.0, 1e-15));
        // π(1)/π(0) = Nα / (β(1 - (N-1)α))
        assert!(close(pi[1] / pi[0], 0.25 / (0.5 * 0.8), 1e-14));
    }

    #[test]
    fn table61_reference() {
        let t = table61(0.3, 0.5).unwrap();
        let classes = ClassificationTable::compute().unwrap();
        for row in classes.rows() {
            let v = t[row.rule.index()][row.epoch.index()];
            let want = match row.class {
                Coherent => 0.6,
                SubCoherent => 3.0 / 7.0,
                SuperCoherent => 0.72,
            };
            assert!(close(v, want, 1e-15));
        }
    }

    #[test]
    fn closed_forms_sum_to_one_on_grid() {
        for bi in 2..=9 {
            let beta = bi as f64 / 10.0;
            for ai in 1..=8 {
                let alpha = ai as f64 / 10.0 * beta;
                for class in [Coherent, SubCoherent, SuperCoherent] {
                    let p = BGeom1Params::new(alpha, beta, class).unwrap();
                    let g = p.gamma();
                    let head: f64 = (0..2).map(|n| p.pi(n)).sum();
                    // closed-form geometric tail from n = 2
                    let tail = p.pi(2) / (1.0 - g);
                    assert!(close(head + tail, 1.0, 1e-12), "{alpha} {beta} {class}");
                }
            }
        }
    }
}
