//! Pressure surfaces, maximum entropy and its Legendre dual, susceptibility
//! matrices, the Gibbs relation `dh/dE = β`, and work/heat accounting.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::info_geom::{asymptotic_covariance, GREEN_KUBO_TOL};
use crate::measure::{dual_push, EquilibriumState, SuitableMeasure};
use crate::symbolic::FiniteMemoryFunction;
use crate::transfer::{equilibrium, pressure, require_jacobian};

pub const HYPOTHESIS_A_TOL: f64 = 1e-10;
pub const NEWTON_MAX_ITER: usize = 100;
pub const NEWTON_MAX_HALVINGS: usize = 50;
pub const DIVERGENCE_BOUND: f64 = 1e3;
pub const DEFAULT_H_BETA: f64 = 1e-3;
pub const DEFAULT_H_V: f64 = 1e-3;

/// `f^v = base + v·direction`, one pair per constraint.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineGenerator {
    pub base: Vec<FiniteMemoryFunction>,
    pub direction: Vec<FiniteMemoryFunction>,
}

/// Constraint functions `f₁ … f_m`, optionally depending on a parameter `v`.
#[derive(Debug, Clone, PartialEq)]
pub struct PotentialFamily {
    alphabet: usize,
    constraints: Vec<FiniteMemoryFunction>,
    generator: Option<AffineGenerator>,
}

impl PotentialFamily {
    /// Validates alphabets and the nondegeneracy of the covariance of the
    /// constraints under the measure of maximal entropy.
    pub fn new(constraints: Vec<FiniteMemoryFunction>, generator: Option<AffineGenerator>) -> Result<Self> {
        let family = Self::new_unchecked(constraints, generator)?;
        let smallest = family.hypothesis_a_margin(&vec![0.0; family.len()])?;
        if !(smallest > HYPOTHESIS_A_TOL) {
            return Err(Error::InvalidInput(format!(
                "constraints are degenerate: smallest covariance eigenvalue {smallest:e}"
            )));
        }
        Ok(family)
    }

    /// Shape checks only.
    pub fn new_unchecked(constraints: Vec<FiniteMemoryFunction>, generator: Option<AffineGenerator>) -> Result<Self> {
        let first = constraints
            .first()
            .ok_or_else(|| Error::InvalidInput("a family needs at least one constraint".into()))?;
        let alphabet = first.alphabet();
        let all = constraints
            .iter()
            .chain(generator.iter().flat_map(|g| g.base.iter().chain(&g.direction)));
        for f in all {
            if f.alphabet() != alphabet {
                return Err(Error::AlphabetMismatch(alphabet, f.alphabet()));
            }
        }
        if let Some(g) = &generator {
            if g.base.len() != constraints.len() || g.direction.len() != constraints.len() {
                return Err(Error::InvalidInput(
                    "generator needs one base and one direction per constraint".into(),
                ));
            }
        }
        Ok(PotentialFamily {
            alphabet,
            constraints,
            generator,
        })
    }

    pub fn alphabet(&self) -> usize {
        self.alphabet
    }

    pub fn len(&self) -> usize {
        self.constraints.len()
    }

    pub fn is_empty(&self) -> bool {
        self.constraints.is_empty()
    }

    pub fn constraints(&self) -> &[FiniteMemoryFunction] {
        &self.constraints
    }

    pub fn generator(&self) -> Option<&AffineGenerator> {
        self.generator.as_ref()
    }

    /// The constraints `f^v` at parameter `v`.
    pub fn at(&self, v: f64) -> Result<PotentialFamily> {
        let g = self
            .generator
            .as_ref()
            .ok_or_else(|| Error::InvalidInput("family has no parameter generator".into()))?;
        let constraints = g
            .base
            .iter()
            .zip(&g.direction)
            .map(|(b, dir)| b.add(&dir.scale(v)))
            .collect::<Result<Vec<_>>>()?;
        Self::new_unchecked(constraints, None)
    }

    /// `Σ z_j f_j`.
    pub fn combine(&self, z: &[f64]) -> Result<FiniteMemoryFunction> {
        if z.len() != self.len() {
            return Err(Error::TableLength {
                expected: self.len(),
                got: z.len(),
            });
        }
        if z.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidInput("multipliers must be finite".into()));
        }
        let mut acc = FiniteMemoryFunction::constant(self.alphabet, 0.0)?;
        for (f, &zj) in self.constraints.iter().zip(z) {
            acc = acc.add(&f.scale(zj))?;
        }
        Ok(acc)
    }

    /// Smallest eigenvalue of the Green–Kubo covariance matrix at `z`.
    pub fn hypothesis_a_margin(&self, z: &[f64]) -> Result<f64> {
        let cov = covariance_matrix(self, z)?;
        Ok(SymmetricEigen::new(cov).eigenvalues.min())
    }
}

/// `P(Σ z_j f_j)`.
pub fn pressure_surface(family: &PotentialFamily, z: &[f64]) -> Result<f64> {
    pressure(&family.combine(z)?)
}

/// The equilibrium state `μ_z` of `Σ z_j f_j`.
pub fn family_equilibrium(family: &PotentialFamily, z: &[f64]) -> Result<EquilibriumState> {
    equilibrium(&family.combine(z)?)
}

/// `x_j = ∫ f_j dμ_z`.
pub fn pressure_gradient(family: &PotentialFamily, z: &[f64]) -> Result<Vec<f64>> {
    let mu = family_equilibrium(family, z)?;
    family.constraints.iter().map(|f| mu.integrate(f)).collect()
}

/// Green–Kubo covariance matrix of the constraints under `μ_z`.
pub fn covariance_matrix(family: &PotentialFamily, z: &[f64]) -> Result<DMatrix<f64>> {
    let mu = family_equilibrium(family, z)?;
    let m = family.len();
    let mut cov = DMatrix::zeros(m, m);
    for i in 0..m {
        for j in i..m {
            let c = asymptotic_covariance(&mu, &family.constraints[i], &family.constraints[j], GREEN_KUBO_TOL)?;
            cov[(i, j)] = c;
            cov[(j, i)] = c;
        }
    }
    Ok(cov)
}

/// Result of [`maxent_solve`].
#[derive(Debug, Clone, Serialize)]
pub struct MaxEntSolution {
    pub z: Vec<f64>,
    pub x: Vec<f64>,
    /// `P(z*) − ⟨x, z*⟩`, the maximal entropy under the constraints.
    pub alpha: f64,
    /// Entropy of `μ_{z*}` computed directly.
    pub entropy: f64,
    /// `‖∇P(z*) − x‖∞`.
    pub residual: f64,
    pub iterations: usize,
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Multipliers `z*` with `∫ f_j dμ_{z*} = x_j` by damped Newton iteration.
pub fn maxent_solve(family: &PotentialFamily, x_target: &[f64], tol: f64) -> Result<MaxEntSolution> {
    let m = family.len();
    if x_target.len() != m {
        return Err(Error::TableLength { expected: m, got: x_target.len() });
    }
    if !(tol >= 1e-12) {
        return Err(Error::InvalidInput(format!("tolerance {tol} is below 1e-12")));
    }
    for (j, (f, &x)) in family.constraints.iter().zip(x_target).enumerate() {
        if !(x > f.min_value() && x < f.max_value()) {
            return Err(Error::Infeasible(format!(
                "target {x} for constraint {j} lies outside ({}, {})",
                f.min_value(),
                f.max_value()
            )));
        }
    }
    let residual_at = |z: &[f64]| -> Result<Vec<f64>> {
        Ok(pressure_gradient(family, z)?
            .iter()
            .zip(x_target)
            .map(|(a, b)| a - b)
            .collect())
    };
    let mut z = vec![0.0; m];
    let mut g = residual_at(&z)?;
    let mut iterations = 0;
    while inf_norm(&g) >= tol {
        if iterations == NEWTON_MAX_ITER {
            return Err(Error::NonConvergence {
                what: format!("maximum-entropy Newton solve (residual {:e})", inf_norm(&g)),
                iterations,
            });
        }
        iterations += 1;
        let hess = covariance_matrix(family, &z)?;
        let step = hess
            .lu()
            .solve(&DVector::from_column_slice(&g))
            .ok_or_else(|| Error::InvalidInput("constraint covariance is singular".into()))?;
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..=NEWTON_MAX_HALVINGS {
            let trial: Vec<f64> = z.iter().zip(step.iter()).map(|(a, s)| a - t * s).collect();
            if inf_norm(&trial) > DIVERGENCE_BOUND {
                t *= 0.5;
                continue;
            }
            // far trials can underflow the equilibrium; treat them as rejected
            let Ok(gt) = residual_at(&trial) else {
                t *= 0.5;
                continue;
            };
            if inf_norm(&gt) < inf_norm(&g) {
                z = trial;
                g = gt;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            if inf_norm(&z) > DIVERGENCE_BOUND / 2.0 {
                return Err(Error::Infeasible(format!(
                    "multipliers diverge (|z| = {:e}) trying to reach {x_target:?}",
                    inf_norm(&z)
                )));
            }
            return Err(Error::NonConvergence {
                what: format!("maximum-entropy line search (residual {:e})", inf_norm(&g)),
                iterations,
            });
        }
    }
    let mu = family_equilibrium(family, &z)?;
    let p = pressure_surface(family, &z)?;
    let pairing: f64 = x_target.iter().zip(&z).map(|(a, b)| a * b).sum();
    Ok(MaxEntSolution {
        alpha: p - pairing,
        entropy: mu.entropy()?,
        residual: inf_norm(&g),
        x: x_target.to_vec(),
        z,
        iterations,
    })
}

/// Hessians of pressure in `z` and of `α` in `x`.
#[derive(Debug, Clone, Serialize)]
pub struct SusceptibilityPair {
    /// Finite-difference Hessian of `P` at `z`.
    pub sp: Vec<Vec<f64>>,
    /// Green–Kubo covariance matrix at `z`.
    pub sp_green_kubo: Vec<Vec<f64>>,
    /// Finite-difference Hessian of `α` at `x = ∇P(z)`.
    pub se: Vec<Vec<f64>>,
    pub x: Vec<f64>,
    /// `max |SP − SP_GK|`.
    pub sp_crosscheck: f64,
    /// `max_ij |SE_ij + (SP⁻¹)_ij| / |(SP⁻¹)_ij|`.
    pub duality_residual: f64,
}

fn to_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
}

/// Central-difference Hessian at steps `h` and `h/2`, Richardson-combined
/// so the truncation error is `O(h⁴)`.
fn fd_hessian(p: &[f64], h: f64, mut f: impl FnMut(&[f64]) -> Result<f64>) -> Result<DMatrix<f64>> {
    let coarse = fd_hessian_once(p, h, &mut f)?;
    let fine = fd_hessian_once(p, h / 2.0, &mut f)?;
    Ok((fine * 4.0 - coarse) / 3.0)
}

fn fd_hessian_once(p: &[f64], h: f64, mut f: impl FnMut(&[f64]) -> Result<f64>) -> Result<DMatrix<f64>> {
    let m = p.len();
    let mut eval = |di: &[(usize, f64)]| {
        let mut q = p.to_vec();
        for &(i, s) in di {
            q[i] += s;
        }
        f(&q)
    };
    let center = eval(&[])?;
    let mut hess = DMatrix::zeros(m, m);
    for i in 0..m {
        hess[(i, i)] = (eval(&[(i, h)])? - 2.0 * center + eval(&[(i, -h)])?) / (h * h);
        for j in 0..i {
            let v = (eval(&[(i, h), (j, h)])? - eval(&[(i, h), (j, -h)])? - eval(&[(i, -h), (j, h)])?
                + eval(&[(i, -h), (j, -h)])?)
                / (4.0 * h * h);
            hess[(i, j)] = v;
            hess[(j, i)] = v;
        }
    }
    Ok(hess)
}

pub fn susceptibility(family: &PotentialFamily, z: &[f64], h: f64) -> Result<SusceptibilityPair> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::InvalidInput(format!("step {h} must be positive")));
    }
    let sp = fd_hessian(z, h, |q| pressure_surface(family, q))?;
    let gk = covariance_matrix(family, z)?;
    let x = pressure_gradient(family, z)?;
    let se = fd_hessian(&x, h, |q| Ok(maxent_solve(family, q, 1e-12)?.alpha))?;
    let inv = gk
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::InvalidInput("susceptibility matrix is singular".into()))?;
    let duality_residual = se
        .iter()
        .zip(inv.iter())
        .map(|(a, b)| (a + b).abs() / b.abs().max(1e-300))
        .fold(0.0, f64::max);
    let sp_crosscheck = sp.iter().zip(gk.iter()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    Ok(SusceptibilityPair {
        sp: to_rows(&sp),
        sp_green_kubo: to_rows(&gk),
        se: to_rows(&se),
        x,
        sp_crosscheck,
        duality_residual,
    })
}

/// One row of the Gibbs relation table.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct GibbsRow {
    pub beta: f64,
    pub energy: f64,
    pub entropy: f64,
    /// `dh/dE` from centred differences in `β`; absent when `E` is flat.
    pub dh_de: Option<f64>,
    /// `|E + dP(−βH)/dβ|` with the derivative by centred differences.
    pub energy_crosscheck: f64,
}

fn energy_entropy(h: &FiniteMemoryFunction, beta: f64) -> Result<(f64, f64, f64)> {
    let potential = h.scale(-beta);
    let mu = equilibrium(&potential)?;
    Ok((mu.integrate(h)?, mu.entropy()?, pressure(&potential)?))
}

pub fn gibbs_equation(h: &FiniteMemoryFunction, beta_grid: &[f64], h_beta: f64) -> Result<Vec<GibbsRow>> {
    if let Some(b) = beta_grid.iter().find(|b| !(0.1..=10.0).contains(*b)) {
        return Err(Error::InvalidInput(format!("beta {b} outside [0.1, 10]")));
    }
    let increasing = beta_grid.windows(2).all(|w| w[0] < w[1]);
    let decreasing = beta_grid.windows(2).all(|w| w[0] > w[1]);
    if !(increasing || decreasing) {
        return Err(Error::InvalidInput("beta grid must be strictly monotone".into()));
    }
    if !(h_beta > 0.0 && h_beta < 0.1) {
        return Err(Error::InvalidInput(format!("beta step {h_beta} outside (0, 0.1)")));
    }
    beta_grid
        .iter()
        .map(|&beta| {
            let (energy, entropy, _) = energy_entropy(h, beta)?;
            let (e_plus, h_plus, p_plus) = energy_entropy(h, beta + h_beta)?;
            let (e_minus, h_minus, p_minus) = energy_entropy(h, beta - h_beta)?;
            let de = e_plus - e_minus;
            let scale = h.max_value().abs().max(h.min_value().abs()).max(1.0);
            let dh_de = if de.abs() > 1e-12 * scale * h_beta {
                Some((h_plus - h_minus) / de)
            } else {
                None
            };
            let dp = (p_plus - p_minus) / (2.0 * h_beta);
            Ok(GibbsRow {
                beta,
                energy,
                entropy,
                dh_de,
                energy_crosscheck: (energy + dp).abs(),
            })
        })
        .collect()
}

/// How the measure responds to the parameter.
#[derive(Debug, Clone, PartialEq)]
pub enum RateMode {
    /// `μ^v` is the maximum-entropy measure with these constraint values.
    FixedConstraints(Vec<f64>),
    /// `μ^v` is the equilibrium of `Σ z_j f_j^v` with these multipliers.
    FixedMultipliers(Vec<f64>),
}

/// Work, heat and internal-energy rates in the parameter `v`.
#[derive(Debug, Clone, Serialize)]
pub struct EnergyRates {
    pub d_w: f64,
    pub d_q: f64,
    pub d_u: f64,
    pub pressure_p: f64,
    /// `|dW + dQ − dU|`.
    pub residual: f64,
}

fn measure_at(family: &PotentialFamily, mode: &RateMode, v: f64) -> Result<(PotentialFamily, SuitableMeasure)> {
    let at = family.at(v)?;
    let mu = match mode {
        RateMode::FixedConstraints(x) => {
            let sol = maxent_solve(&at, x, 1e-12)?;
            family_equilibrium(&at, &sol.z)?
        }
        RateMode::FixedMultipliers(z) => family_equilibrium(&at, z)?,
    };
    Ok((at, mu.into_measure()))
}

/// With `f = f_k`, `μ^±` at `v₀ ± h`:
/// `dW = Σ (f⁺−f⁻)/2h · (μ⁺+μ⁻)/2`, `dQ = Σ (f⁺+f⁻)/2 · (μ⁺−μ⁻)/2h`,
/// `dU = (Σ f⁺μ⁺ − Σ f⁻μ⁻)/2h`, summed over cylinders.
///
/// Averaging the two sides makes `dW + dQ = dU` hold exactly for the
/// discretization rather than up to `O(h²)`.
pub fn energy_rate_decomposition(
    family: &PotentialFamily,
    k: usize,
    mode: &RateMode,
    v0: f64,
    h: f64,
) -> Result<EnergyRates> {
    if k >= family.len() {
        return Err(Error::InvalidInput(format!(
            "constraint index {k} out of range for {} constraints",
            family.len()
        )));
    }
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::InvalidInput(format!("parameter step {h} must be positive")));
    }
    let (fam_p, mu_p) = measure_at(family, mode, v0 + h)?;
    let (fam_m, mu_m) = measure_at(family, mode, v0 - h)?;
    let f_p = &fam_p.constraints()[k];
    let f_m = &fam_m.constraints()[k];
    let depth = f_p.depth().max(f_m.depth()).max(mu_p.depth()).max(mu_m.depth());
    let (fp, fm) = (f_p.extend_depth(depth)?, f_m.extend_depth(depth)?);
    let (wp, wm) = (mu_p.weights(depth)?, mu_m.weights(depth)?);
    let mut d_w = 0.0;
    let mut d_q = 0.0;
    let mut u_p = 0.0;
    let mut u_m = 0.0;
    for i in 0..wp.len() {
        let (a, b) = (fp.values()[i], fm.values()[i]);
        d_w += (a - b) / (2.0 * h) * (wp[i] + wm[i]) / 2.0;
        d_q += (a + b) / 2.0 * (wp[i] - wm[i]) / (2.0 * h);
        u_p += a * wp[i];
        u_m += b * wm[i];
    }
    let d_u = (u_p - u_m) / (2.0 * h);
    Ok(EnergyRates {
        d_w,
        d_q,
        d_u,
        pressure_p: -d_w,
        residual: (d_w + d_q - d_u).abs(),
    })
}

/// Energy bookkeeping of one thermodynamic operation.
#[derive(Debug, Clone, Serialize)]
pub struct OperationAccounting {
    pub e1: f64,
    pub e3: f64,
    pub d_q: f64,
    pub d_w: f64,
    pub d_u: f64,
    /// `|dW + dQ − dU|`.
    pub residual: f64,
}

/// `μ₃ = L*_{log J₂} μ₁` with `E(μ) = ∫ log J₁ dμ − ∫ log J₂ dμ`.
pub fn thermo_operation_accounting(
    log_j1: &FiniteMemoryFunction,
    log_j2: &FiniteMemoryFunction,
    mu1: &SuitableMeasure,
) -> Result<OperationAccounting> {
    require_jacobian(log_j1)?;
    require_jacobian(log_j2)?;
    let mu3 = dual_push(log_j2, mu1)?;
    let a1 = mu1.integrate(log_j1)?;
    let b1 = mu1.integrate(log_j2)?;
    let a3 = mu3.integrate(log_j1)?;
    let b3 = mu3.integrate(log_j2)?;
    let e1 = a1 - b1;
    let e3 = a3 - b3;
    let d_q = b3 - b1;
    let d_w = a1 - a3;
    let d_u = e1 - e3;
    Ok(OperationAccounting {
        e1,
        e3,
        d_q,
        d_w,
        d_u,
        residual: (d_w + d_q - d_u).abs(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::markov_invariant;
    use crate::sampling::{random_jacobian, random_potential, random_suitable_measure};
    use crate::symbolic::Word;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn indicator_family() -> PotentialFamily {
        let f = FiniteMemoryFunction::indicator(&Word::new(&[1], 2).unwrap()).unwrap();
        PotentialFamily::new(vec![f], None).unwrap()
    }

    #[test]
    fn pressure_surface_examples() {
        let fam = indicator_family();
        assert!((pressure_surface(&fam, &[0.0]).unwrap() - 2f64.ln()).abs() < 1e-15);
        for z in [-2.0, 0.3, 1.7] {
            let p: f64 = z;
            assert!((pressure_surface(&fam, &[z]).unwrap() - (p.exp() + 1.0).ln()).abs() < 1e-14);
            let g = pressure_gradient(&fam, &[z]).unwrap()[0];
            assert!((g - p.exp() / (p.exp() + 1.0)).abs() < 1e-14);
        }
        assert!((pressure_gradient(&fam, &[0.0]).unwrap()[0] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let fam = PotentialFamily::new(
            vec![random_potential(&mut rng, 3, 2).unwrap(), random_potential(&mut rng, 3, 1).unwrap()],
            None,
        )
        .unwrap();
        let z = [0.4, -0.3];
        let g = pressure_gradient(&fam, &z).unwrap();
        let h = 1e-3;
        for j in 0..2 {
            let mut zp = z;
            let mut zm = z;
            zp[j] += h;
            zm[j] -= h;
            let fd = (pressure_surface(&fam, &zp).unwrap() - pressure_surface(&fam, &zm).unwrap()) / (2.0 * h);
            assert!((fd - g[j]).abs() < 10.0 * h * h);
        }
    }

    #[test]
    fn hypothesis_a_rejects_degenerate_families() {
        let f = FiniteMemoryFunction::indicator(&Word::new(&[1], 2).unwrap()).unwrap();
        assert!(PotentialFamily::new(vec![f.clone(), f.clone()], None).is_err());
        assert!(PotentialFamily::new(vec![FiniteMemoryFunction::constant(2, 1.0).unwrap()], None).is_err());
        let g = FiniteMemoryFunction::constant(2, 0.0).unwrap().compose_shift().unwrap();
        let cob = f.compose_shift().unwrap().sub(&f).unwrap().add(&g).unwrap();
        assert!(PotentialFamily::new(vec![cob], None).is_err());
    }

    #[test]
    fn maxent_logit() {
        let fam = indicator_family();
        let sol = maxent_solve(&fam, &[0.3], 1e-12).unwrap();
        assert!((sol.z[0] - (3.0f64 / 7.0).ln()).abs() < 1e-10);
        assert!((sol.entropy - sol.alpha).abs() < 1e-10);
        let b = SuitableMeasure::bernoulli(&[0.3, 0.7]).unwrap();
        assert!(family_equilibrium(&fam, &sol.z).unwrap().approx_eq(&b));
        let origin = maxent_solve(&fam, &[0.5], 1e-12).unwrap();
        assert_eq!(origin.z, vec![0.0]);
        assert!(matches!(maxent_solve(&fam, &[1.2], 1e-12), Err(Error::Infeasible(_))));
        assert!(maxent_solve(&fam, &[0.3], 1e-13).is_err());
    }

    #[test]
    fn maxent_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(55);
        for m in 1..=3 {
            let fam = PotentialFamily::new((0..m).map(|_| random_potential(&mut rng, 3, 2).unwrap()).collect(), None).unwrap();
            for _ in 0..5 {
                let z: Vec<f64> = (0..m).map(|_| rng.gen_range(-1.0..1.0)).collect();
                let x = pressure_gradient(&fam, &z).unwrap();
                let sol = maxent_solve(&fam, &x, 1e-12).unwrap();
                for (a, b) in sol.z.iter().zip(&z) {
                    assert!((a - b).abs() < 1e-8);
                }
                assert!((sol.entropy - sol.alpha).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn susceptibility_indicator() {
        let fam = indicator_family();
        let pair = susceptibility(&fam, &[0.0], 1e-3).unwrap();
        assert!((pair.sp[0][0] - 0.25).abs() < 1e-6);
        assert!((pair.sp_green_kubo[0][0] - 0.25).abs() < 1e-14);
        assert!((pair.se[0][0] + 4.0).abs() < 1e-4 * 4.0);
        assert!(pair.duality_residual < 1e-4);
    }

    #[test]
    fn susceptibility_two_constraints() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let fam = PotentialFamily::new(
            vec![random_potential(&mut rng, 2, 2).unwrap(), random_potential(&mut rng, 2, 2).unwrap()],
            None,
        )
        .unwrap();
        let pair = susceptibility(&fam, &[0.2, -0.1], 1e-3).unwrap();
        assert!(pair.sp_crosscheck < 1e-6);
        assert!(pair.duality_residual < 1e-4);
        assert!((pair.sp[0][1] - pair.sp[1][0]).abs() < 1e-15);
    }

    #[test]
    fn convexity_probe() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let fam = PotentialFamily::new(vec![random_potential(&mut rng, 2, 2).unwrap(), random_potential(&mut rng, 2, 1).unwrap()], None).unwrap();
        for _ in 0..10 {
            let z: Vec<f64> = (0..2).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let w: Vec<f64> = (0..2).map(|_| rng.gen_range(-2.0..2.0)).collect();
            for t in [0.25, 0.5, 0.75] {
                let mix: Vec<f64> = z.iter().zip(&w).map(|(a, b)| t * a + (1.0 - t) * b).collect();
                let lhs = pressure_surface(&fam, &mix).unwrap();
                let rhs = t * pressure_surface(&fam, &z).unwrap() + (1.0 - t) * pressure_surface(&fam, &w).unwrap();
                assert!(lhs <= rhs + 1e-10);
            }
        }
    }

    #[test]
    fn gibbs_two_state() {
        let h = FiniteMemoryFunction::new(2, 1, vec![0.0, 1.0]).unwrap();
        let rows = gibbs_equation(&h, &[1.0], DEFAULT_H_BETA).unwrap();
        let e = (-1f64).exp() / (1.0 + (-1f64).exp());
        assert!((rows[0].energy - e).abs() < 1e-14);
        assert!((rows[0].energy - 0.2689414213699951).abs() < 1e-14);
        assert!((rows[0].entropy - 0.5822031088882179).abs() < 1e-12);
        assert!(rows[0].energy_crosscheck < 1e-6);
        assert!((rows[0].dh_de.unwrap() - 1.0).abs() < 1e-3);

        let grid: Vec<f64> = (0..20).map(|i| 0.1 * 100f64.powf(i as f64 / 19.0)).collect();
        let rows = gibbs_equation(&h, &grid, DEFAULT_H_BETA).unwrap();
        for r in &rows {
            assert!((r.dh_de.unwrap() - r.beta).abs() < 1e-3, "{r:?}");
            let logit = ((1.0 - r.energy) / r.energy).ln();
            assert!((logit - r.beta).abs() < 1e-9);
        }
    }

    #[test]
    fn gibbs_constant_energy() {
        let h = FiniteMemoryFunction::constant(3, 2.5).unwrap();
        let rows = gibbs_equation(&h, &[0.5, 1.0], DEFAULT_H_BETA).unwrap();
        for r in rows {
            assert!((r.energy - 2.5).abs() < 1e-14);
            assert!((r.entropy - 3f64.ln()).abs() < 1e-14);
            assert!(r.dh_de.is_none());
        }
        assert!(gibbs_equation(&h, &[0.05], DEFAULT_H_BETA).is_err());
        assert!(gibbs_equation(&h, &[1.0, 0.5, 2.0], DEFAULT_H_BETA).is_err());
    }

    fn two_state_family(direction: &[f64]) -> PotentialFamily {
        let base = FiniteMemoryFunction::new(2, 1, vec![0.0, 0.0]).unwrap();
        let dir = FiniteMemoryFunction::new(2, 1, direction.to_vec()).unwrap();
        let f0 = FiniteMemoryFunction::new(2, 1, vec![0.0, 1.0]).unwrap();
        PotentialFamily::new(
            vec![f0],
            Some(AffineGenerator {
                base: vec![base],
                direction: vec![dir],
            }),
        )
        .unwrap()
    }

    #[test]
    fn energy_rates_fixed_multipliers() {
        let fam = two_state_family(&[0.0, 1.0]);
        let r = energy_rate_decomposition(&fam, 0, &RateMode::FixedMultipliers(vec![-0.8]), 1.0, DEFAULT_H_V).unwrap();
        assert!(r.residual < 1e-8);
        assert!(r.d_w.abs() > 1e-3 && r.d_q.abs() > 1e-3);
        // linear parameter: dW is ∫ f dμ^{v₀} up to O(h²)
        let mu = family_equilibrium(&fam.at(1.0).unwrap(), &[-0.8]).unwrap();
        let f = FiniteMemoryFunction::new(2, 1, vec![0.0, 1.0]).unwrap();
        assert!((r.d_w - mu.integrate(&f).unwrap()).abs() < 1e-6);
        assert_eq!(r.pressure_p, -r.d_w);
    }

    #[test]
    fn energy_rates_fixed_constraints() {
        let fam = two_state_family(&[0.0, 1.0]);
        let r = energy_rate_decomposition(&fam, 0, &RateMode::FixedConstraints(vec![0.6]), 2.0, DEFAULT_H_V).unwrap();
        assert!(r.residual < 1e-8);
        assert!(r.d_u.abs() < 1e-8);
    }

    #[test]
    fn energy_rates_parameter_free() {
        let fam = two_state_family(&[0.0, 0.0]);
        let r = energy_rate_decomposition(&fam, 0, &RateMode::FixedMultipliers(vec![0.5]), 1.0, DEFAULT_H_V).unwrap();
        assert_eq!((r.d_w, r.d_q, r.d_u), (0.0, 0.0, 0.0));
    }

    #[test]
    fn operation_accounting() {
        let uniform = FiniteMemoryFunction::constant(2, 0.5f64.ln()).unwrap();
        let markov = markov_invariant(&[vec![0.7, 0.3], vec![0.3, 0.7]]).unwrap();
        let b = SuitableMeasure::bernoulli(&[0.9, 0.1]).unwrap();
        let r = thermo_operation_accounting(markov.log_jacobian(), &uniform, &b).unwrap();
        assert!(r.residual < 1e-12);

        let r = thermo_operation_accounting(&uniform, &uniform, &b).unwrap();
        assert_eq!(r.d_u, 0.0);
        assert!((r.d_w + r.d_q).abs() < 1e-15);

        let eq = equilibrium(markov.log_jacobian()).unwrap();
        let r = thermo_operation_accounting(&uniform, markov.log_jacobian(), &eq).unwrap();
        assert!(r.d_q.abs() < 1e-12 && r.d_w.abs() < 1e-12 && r.d_u.abs() < 1e-12);

        let mut rng = ChaCha8Rng::seed_from_u64(10);
        for _ in 0..20 {
            let j1 = random_jacobian(&mut rng, 3, 2).unwrap();
            let j2 = random_jacobian(&mut rng, 3, 2).unwrap();
            let mu = random_suitable_measure(&mut rng, 3, 2).unwrap();
            assert!(thermo_operation_accounting(&j1, &j2, &mu).unwrap().residual < 1e-12);
        }
    }
}
