//! KL invariance under the dual operator and the two forms of the Second Law.
//!
//! Every check returns residuals; callers apply the tolerances.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::measure::{dual_push, iterate_push, kl_divergence, SuitableMeasure};
use crate::symbolic::FiniteMemoryFunction;
use crate::transfer::{equilibrium, perron, pressure, require_jacobian};

/// `D(μ₁, μ₂) − D(L*μ₁, L*μ₂)`.
pub fn cg_entropy_production(
    log_j: &FiniteMemoryFunction,
    mu1: &SuitableMeasure,
    mu2: &SuitableMeasure,
) -> Result<f64> {
    let before = kl_divergence(mu1, mu2)?;
    let after = kl_divergence(&dual_push(log_j, mu1)?, &dual_push(log_j, mu2)?)?;
    Ok(before - after)
}

/// `D(μ₁, μ₂) − D(L*μ₁, μ₂)` with `μ₂` the equilibrium of `log J₂`.
pub fn ep_dyn(log_j2: &FiniteMemoryFunction, mu1: &SuitableMeasure) -> Result<f64> {
    let mu2 = equilibrium(log_j2)?;
    let before = kl_divergence(mu1, &mu2)?;
    let after = kl_divergence(&dual_push(log_j2, mu1)?, &mu2)?;
    Ok(before - after)
}

/// `(D(μ_n, μ), ∫ [log J₀∘σⁿ − log J∘σⁿ] dμ_n)` along the push orbit of `μ₀`.
pub fn kl_along_orbit(log_j: &FiniteMemoryFunction, mu0: &SuitableMeasure, n: usize) -> Result<(f64, f64)> {
    let mu_n = iterate_push(log_j, mu0, n)?;
    let eq = equilibrium(log_j)?;
    let kl = kl_divergence(&mu_n, &eq)?;
    let integrand = mu0.log_irn().compose_shift_n(n)?.sub(&log_j.compose_shift_n(n)?)?;
    Ok((kl, mu_n.integrate(&integrand)?))
}

/// Quantities produced by one pass of the first form of the Second Law.
#[derive(Debug, Clone, Serialize)]
pub struct SecondLawV1 {
    /// Entropy of `μ₁`.
    pub h1: f64,
    /// Entropy of `μ₃`, the equilibrium of the pushed measure's IRN.
    pub h3: f64,
    pub pressure_log_j2: f64,
    /// `max |μ₃([w]) − ∫_{[w]} φ dμ₂|` at the depth of `J₂`.
    pub ac_residual: f64,
    /// `|h3 + ∫ log J₁ dμ₃|`.
    pub h3_identity_residual: f64,
}

pub fn second_law_v1(log_j: &FiniteMemoryFunction, mu1: &SuitableMeasure) -> Result<SecondLawV1> {
    let mu2 = dual_push(log_j, mu1)?;
    let log_j2 = mu2.irn_of();
    let data = perron(&log_j2)?;
    let mu3 = equilibrium(&log_j2)?;

    let phi = data.eigenfunction();
    let mass = mu2.integrate(&phi)?;
    let probe = log_j2.depth();
    let phi = phi.extend_depth(probe)?;
    let w2 = mu2.weights(probe)?;
    let w3 = mu3.weights(probe)?;
    let ac_residual = w3
        .iter()
        .zip(&w2)
        .zip(phi.values())
        .map(|((a, b), p)| (a - p / mass * b).abs())
        .fold(0.0, f64::max);

    let h1 = mu1.entropy()?;
    let h3 = mu3.entropy()?;
    let cross = mu3.integrate(mu1.log_irn())?;
    Ok(SecondLawV1 {
        h1,
        h3,
        pressure_log_j2: data.log_lambda,
        ac_residual,
        h3_identity_residual: (h3 + cross).abs(),
    })
}

/// `1 − ∫ Σ_a J(a x)² / J(x) dμ₁`; nonnegative margin guarantees that the
/// push does not decrease entropy.
pub fn rrty_margin(log_j: &FiniteMemoryFunction, mu1: &SuitableMeasure) -> Result<f64> {
    require_jacobian(log_j)?;
    if log_j.alphabet() != mu1.alphabet() {
        return Err(Error::AlphabetMismatch(mu1.alphabet(), log_j.alphabet()));
    }
    let log_j = log_j.extend_depth(log_j.depth().max(1))?;
    let d = log_j.alphabet();
    let k = log_j.depth();
    let jv = log_j.exp().into_values();
    let block = d.pow((k - 1) as u32);
    let integrand = FiniteMemoryFunction::new(
        d,
        k,
        (0..jv.len())
            .map(|x| {
                let head = x / d;
                let s: f64 = (0..d).map(|a| jv[a * block + head].powi(2)).sum();
                s / jv[x]
            })
            .collect(),
    )?;
    Ok(1.0 - mu1.integrate(&integrand)?)
}

/// `h(L*μ₁) − h(μ₁)`.
pub fn entropy_change(log_j: &FiniteMemoryFunction, mu1: &SuitableMeasure) -> Result<f64> {
    Ok(dual_push(log_j, mu1)?.entropy()? - mu1.entropy()?)
}

/// `(distance of L*μ₀ from μ₀, sup |J − 1/d|)` for `μ₀` the measure of
/// maximal entropy; a fixed point forces `J` to be uniform.
pub fn max_entropy_rigidity(log_j: &FiniteMemoryFunction) -> Result<(f64, f64)> {
    let d = log_j.alphabet();
    let mu0 = SuitableMeasure::bernoulli(&vec![1.0 / d as f64; d])?;
    let pushed = dual_push(log_j, &mu0)?;
    let fixed = pushed.distance(&mu0, log_j.depth().max(1) + 1)?;
    let spread = log_j.exp().add_constant(-1.0 / d as f64).sup_norm();
    Ok((fixed, spread))
}

/// Pressure of the IRN of a suitable measure; zero by the eigenprobability
/// property.
pub fn irn_pressure(mu: &SuitableMeasure) -> Result<f64> {
    pressure(mu.log_irn())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::{markov_invariant, markov_noninvariant};
    use crate::sampling::{random_equilibrium, random_jacobian, random_suitable_measure};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn sym() -> Vec<Vec<f64>> {
        vec![vec![0.7, 0.3], vec![0.3, 0.7]]
    }

    fn uniform(d: usize) -> FiniteMemoryFunction {
        FiniteMemoryFunction::constant(d, (1.0 / d as f64).ln()).unwrap()
    }

    #[test]
    fn cg_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let log_j = random_jacobian(&mut rng, 2, 2).unwrap();
        let b = SuitableMeasure::bernoulli(&[0.9, 0.1]).unwrap();
        assert_eq!(cg_entropy_production(&log_j, &b, &b).unwrap(), 0.0);
        let m = markov_invariant(&sym()).unwrap();
        assert!(cg_entropy_production(&log_j, &b, &m).unwrap().abs() < 1e-10);
        for n in 1..=4 {
            let before = kl_divergence(&b, &m).unwrap();
            let after = kl_divergence(
                &iterate_push(&log_j, &b, n).unwrap(),
                &iterate_push(&log_j, &m, n).unwrap(),
            )
            .unwrap();
            assert!((before - after).abs() < 1e-10);
        }
    }

    #[test]
    fn ep_dyn_examples() {
        let m = markov_invariant(&sym()).unwrap();
        let log_j2 = m.log_jacobian();
        assert!(ep_dyn(log_j2, &m).unwrap().abs() < 1e-14);
        let b = SuitableMeasure::bernoulli(&[0.5, 0.5]).unwrap();
        let e = ep_dyn(log_j2, &b).unwrap();
        assert!(e.abs() < 1e-10);
        let eq = equilibrium(log_j2).unwrap();
        let cg = cg_entropy_production(log_j2, &b, &eq).unwrap();
        assert!((cg - e).abs() < 1e-12);
    }

    #[test]
    fn kl_along_orbit_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let log_j = random_jacobian(&mut rng, 2, 2).unwrap();
        let mu0 = markov_noninvariant(&sym(), &[0.8, 0.2]).unwrap();
        let (kl, rhs) = kl_along_orbit(&log_j, &mu0, 0).unwrap();
        assert!((kl - kl_divergence(&mu0, &equilibrium(&log_j).unwrap()).unwrap()).abs() < 1e-15);
        assert!((kl - rhs).abs() < 1e-12);
        let (kl, rhs) = kl_along_orbit(&log_j, &mu0, 1).unwrap();
        assert!((kl - rhs).abs() < 1e-12);
        let (kl, rhs) = kl_along_orbit(&log_j, &mu0, 3).unwrap();
        assert!((kl - rhs).abs() < 1e-10);
    }

    #[test]
    fn second_law_v1_fixed_point() {
        let m = markov_invariant(&sym()).unwrap();
        let r = second_law_v1(m.log_jacobian(), &m).unwrap();
        assert!((r.h3 - r.h1).abs() < 1e-12);
        assert!(r.pressure_log_j2.abs() < 1e-12);
        assert!(r.ac_residual < 1e-12);
    }

    #[test]
    fn second_law_v1_invariant_input_returns_to_itself() {
        // log J₂ is cohomologous to log J₁, so μ₃ is μ₁ again
        let m = markov_invariant(&sym()).unwrap();
        let log_j = crate::transfer::normalize(&FiniteMemoryFunction::new(2, 1, vec![0.4, -0.2]).unwrap()).unwrap();
        let r = second_law_v1(&log_j, &m).unwrap();
        assert!((r.h3 - r.h1).abs() < 1e-12);
        assert!(r.h3_identity_residual < 1e-10);
    }

    #[test]
    fn second_law_v1_strict_increase() {
        let mu = markov_noninvariant(&sym(), &[0.9, 0.1]).unwrap();
        let log_j = crate::transfer::normalize(&FiniteMemoryFunction::new(2, 1, vec![0.4, -0.2]).unwrap()).unwrap();
        let r = second_law_v1(&log_j, &mu).unwrap();
        assert!(r.h3 - r.h1 > 1e-8);
        assert!(r.h3_identity_residual < 1e-10);
        assert!(r.ac_residual < 1e-10);

        let asym = markov_invariant(&[vec![0.9, 0.2], vec![0.1, 0.8]]).unwrap();
        let r = second_law_v1(&uniform(2), &asym).unwrap();
        assert!(r.h3 >= r.h1 - 1e-12);
    }

    #[test]
    fn second_law_v1_can_decrease_for_non_invariant_input() {
        // uniform J: μ₃ is the stationary chain, h1 = ½H(.9,.1) + ½ln 2
        let p = [vec![0.9, 0.5], vec![0.1, 0.5]];
        let mu = markov_noninvariant(&p, &[0.5, 0.5]).unwrap();
        let r = second_law_v1(&uniform(2), &mu).unwrap();
        let h_bern = 0.3250829733914482;
        let ln2 = std::f64::consts::LN_2;
        assert!((r.h1 - (0.5 * h_bern + 0.5 * ln2)).abs() < 1e-12);
        assert!((r.h3 - (5.0 / 6.0 * h_bern + ln2 / 6.0)).abs() < 1e-12);
        assert!(r.h1 - r.h3 > 0.12);
    }

    #[test]
    fn entropy_increase_condition_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        for _ in 0..10 {
            let mu = random_suitable_measure(&mut rng, 3, 2).unwrap();
            assert!(rrty_margin(&uniform(3), &mu).unwrap().abs() < 1e-14);
        }
        // symmetric chain against independent measures: the integral is
        // Σ_a P_aj² · Σ_jk p_j p_k / P_jk, which exceeds 1
        let log_j = markov_invariant(&sym()).unwrap().log_jacobian().clone();
        for p in [0.1, 0.35, 0.5, 0.9] {
            let b = SuitableMeasure::bernoulli(&[p, 1.0 - p]).unwrap();
            let q = 1.0 - p;
            let closed = 1.0 - 0.58 * (p * p / 0.7 + 2.0 * p * q / 0.3 + q * q / 0.7);
            assert!(closed < 0.0);
            assert!((rrty_margin(&log_j, &b).unwrap() - closed).abs() < 1e-14);
        }
        let log_j = FiniteMemoryFunction::new(2, 1, vec![0.9f64.ln(), 0.1f64.ln()]).unwrap();
        let b = SuitableMeasure::bernoulli(&[0.99, 0.01]).unwrap();
        let margin = rrty_margin(&log_j, &b).unwrap();
        assert!(margin > 0.0);
        assert!(entropy_change(&log_j, &b).unwrap() >= 0.0);
    }

    #[test]
    fn entropy_change_examples() {
        let b = SuitableMeasure::bernoulli(&[0.9, 0.1]).unwrap();
        assert!(entropy_change(&uniform(2), &b).unwrap().abs() < 1e-15);
        let m = markov_invariant(&sym()).unwrap();
        assert!(entropy_change(m.log_jacobian(), &b).unwrap() > 0.0);
        assert!(entropy_change(m.log_jacobian(), &m).unwrap().abs() < 1e-12);
    }

    #[test]
    fn rigidity() {
        let (fixed, spread) = max_entropy_rigidity(&uniform(3)).unwrap();
        assert!(fixed < 1e-15 && spread < 1e-15);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let (fixed, spread) = max_entropy_rigidity(&random_jacobian(&mut rng, 2, 2).unwrap()).unwrap();
        assert!(fixed > 1e-6 && spread > 1e-6);
    }

    #[test]
    fn randomized_theorems() {
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        for trial in 0..40 {
            let d = 2 + trial % 2;
            let k = 1 + rng.gen_range(0..3);
            let log_j = random_jacobian(&mut rng, d, k).unwrap();
            let (k1, k2) = (rng.gen_range(1..=3), rng.gen_range(1..=3));
            let mu1 = random_suitable_measure(&mut rng, d, k1).unwrap();
            let mu2 = random_suitable_measure(&mut rng, d, k2).unwrap();
            assert!(cg_entropy_production(&log_j, &mu1, &mu2).unwrap().abs() < 1e-10);
            assert!(ep_dyn(&log_j, &mu1).unwrap().abs() < 1e-10);
            assert!(irn_pressure(&mu1).unwrap().abs() < 1e-10);
            let inv = random_equilibrium(&mut rng, d, k).unwrap();
            let r = second_law_v1(&log_j, &inv).unwrap();
            assert!(r.h3 - r.h1 >= -1e-12);
            assert!(r.ac_residual < 1e-10);
            if rrty_margin(&log_j, &mu1).unwrap() >= 0.0 {
                assert!(entropy_change(&log_j, &mu1).unwrap() >= -1e-12);
            }
        }
    }
}
