//! Tangent vectors at equilibrium states, Green–Kubo asymptotic variance,
//! Fisher information and the second-order behaviour of KL divergence.

use nalgebra::{Matrix3, Vector3};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::measure::{kl_divergence, EquilibriumState};
use crate::symbolic::{table_len, FiniteMemoryFunction};
use crate::transfer::{equilibrium, pressure, RuelleOperator};

pub const GREEN_KUBO_TOL: f64 = 1e-14;
pub const GREEN_KUBO_MAX_TERMS: usize = 100_000;
pub const DEFAULT_STEP: f64 = 1e-3;
const TANGENT_TOL: f64 = 1e-12;

/// A direction `ξ` at an equilibrium state with `L_{log J} ξ = 0`.
#[derive(Debug, Clone)]
pub struct TangentVector {
    base: EquilibriumState,
    xi: FiniteMemoryFunction,
}

impl TangentVector {
    /// Checks `L_{log J} ξ ≡ 0` and `∫ ξ dμ = 0`.
    pub fn new(base: EquilibriumState, xi: FiniteMemoryFunction) -> Result<Self> {
        let scale = xi.sup_norm().max(1.0);
        let image = RuelleOperator::new(base.log_jacobian())?.apply(&xi)?.sup_norm();
        let mean = base.integrate(&xi)?;
        if image > TANGENT_TOL * scale || mean.abs() > TANGENT_TOL * scale {
            return Err(Error::InvalidInput(format!(
                "not a tangent vector: sup |Lξ| = {image:e}, ∫ξ = {mean:e}"
            )));
        }
        Ok(TangentVector { base, xi })
    }

    pub fn base(&self) -> &EquilibriumState {
        &self.base
    }

    pub fn xi(&self) -> &FiniteMemoryFunction {
        &self.xi
    }
}

/// `ξ = η − (L η)∘σ`, the projection of `η` onto the kernel of `L_{log J}`.
pub fn tangent_project(mu: &EquilibriumState, eta: &FiniteMemoryFunction) -> Result<TangentVector> {
    let l = RuelleOperator::new(mu.log_jacobian())?;
    let xi = eta.sub(&l.apply(eta)?.compose_shift()?)?;
    Ok(TangentVector {
        base: mu.clone(),
        xi,
    })
}

/// Green–Kubo covariance
/// `∫ f̄ ḡ dμ + Σ_{n≥1} [∫ Lⁿ(f̄) ḡ dμ + ∫ Lⁿ(ḡ) f̄ dμ]` with centred `f̄, ḡ`.
///
/// The series stops once `sup|Lⁿ f̄|·∫|ḡ| + sup|Lⁿ ḡ|·∫|f̄|`, which bounds
/// the next term, drops below `tol` times the larger of 1, `|∫ f̄ ḡ|` and
/// the same bound at `n = 0`. Iterates are recentred, which is exact since
/// `μ` is `L`-invariant, so rounding cannot accumulate a constant drift.
pub fn asymptotic_covariance(
    mu: &EquilibriumState,
    f: &FiniteMemoryFunction,
    g: &FiniteMemoryFunction,
    tol: f64,
) -> Result<f64> {
    let l = RuelleOperator::new(mu.log_jacobian())?;
    let fbar = f.add_constant(-mu.integrate(f)?);
    let gbar = g.add_constant(-mu.integrate(g)?);
    let abs_f = mu.integrate(&fbar.map(f64::abs))?;
    let abs_g = mu.integrate(&gbar.map(f64::abs))?;
    let c0 = mu.integrate(&fbar.mul(&gbar)?)?;
    let initial = fbar.sup_norm() * abs_g + gbar.sup_norm() * abs_f;
    let threshold = tol * c0.abs().max(1.0).max(initial);
    let same = f == g;
    let mut lf = fbar.clone();
    let mut lg = gbar.clone();
    let mut total = c0;
    for _ in 0..GREEN_KUBO_MAX_TERMS {
        lf = l.apply(&lf)?;
        lf = lf.add_constant(-mu.integrate(&lf)?);
        if same {
            if lf.sup_norm() * abs_f * 2.0 < threshold {
                return Ok(total);
            }
            total += 2.0 * mu.integrate(&lf.mul(&fbar)?)?;
        } else {
            lg = l.apply(&lg)?;
            lg = lg.add_constant(-mu.integrate(&lg)?);
            if lf.sup_norm() * abs_g + lg.sup_norm() * abs_f < threshold {
                return Ok(total);
            }
            total += mu.integrate(&lf.mul(&gbar)?)? + mu.integrate(&lg.mul(&fbar)?)?;
        }
    }
    Err(Error::NonConvergence {
        what: "Green–Kubo series".into(),
        iterations: GREEN_KUBO_MAX_TERMS,
    })
}

/// `σ²(ξ)`, the asymptotic variance of Birkhoff sums of `ξ` under `μ`.
pub fn asymptotic_variance(mu: &EquilibriumState, xi: &FiniteMemoryFunction, tol: f64) -> Result<f64> {
    asymptotic_covariance(mu, xi, xi, tol)
}

fn check_step(h: f64) -> Result<()> {
    if !(1e-4..=1e-2).contains(&h) {
        return Err(Error::InvalidInput(format!("finite-difference step {h} outside [1e-4, 1e-2]")));
    }
    Ok(())
}

/// Central differences `(P′(0), P″(0))` of `θ ↦ P(log J + θ ξ)`.
pub fn pressure_derivatives(log_j: &FiniteMemoryFunction, xi: &FiniteMemoryFunction, h: f64) -> Result<(f64, f64)> {
    check_step(h)?;
    let p = |t: f64| pressure(&log_j.add(&xi.scale(t))?);
    let (plus, zero, minus) = (p(h)?, p(0.0)?, p(-h)?);
    Ok(((plus - minus) / (2.0 * h), (plus - 2.0 * zero + minus) / (h * h)))
}

/// `∫ ξ² dμ`.
pub fn fisher_information(t: &TangentVector) -> Result<f64> {
    t.base.integrate(&t.xi.mul(&t.xi)?)
}

/// `Σ_{|w|=n−1} μ([w]) V(w)²` with `V(w)` the central difference in `θ` of
/// `log μ_θ([w])`, `μ_θ` the equilibrium of `log J + θ ξ`.
pub fn fisher_at_time_n(mu: &EquilibriumState, xi: &FiniteMemoryFunction, n: usize, h: f64) -> Result<f64> {
    check_step(h)?;
    if n == 0 || n > 8 {
        return Err(Error::InvalidInput(format!("time {n} outside 1..=8")));
    }
    let len = n - 1;
    table_len(mu.alphabet(), len)?;
    let log_j = mu.log_jacobian();
    let plus = equilibrium(&log_j.add(&xi.scale(h))?)?.weights(len)?;
    let minus = equilibrium(&log_j.add(&xi.scale(-h))?)?.weights(len)?;
    let base = mu.weights(len)?;
    Ok(base
        .iter()
        .zip(plus.iter().zip(&minus))
        .map(|(w, (p, m))| {
            let v = (p.ln() - m.ln()) / (2.0 * h);
            w * v * v
        })
        .sum())
}

/// One sample of `θ ↦ D(μ₁, μ_θ)`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct KlSample {
    pub theta: f64,
    pub kl: f64,
}

/// KL along the exponential family through `μ₂` in direction `ξ`, with the
/// predicted slope and curvature at `θ = 0`.
#[derive(Debug, Clone, Serialize)]
pub struct KlTaylor {
    pub samples: Vec<KlSample>,
    /// `−∫ ξ dμ₁ + ∫ ξ dμ₂`.
    pub slope_pred: f64,
    /// Asymptotic variance of `ξ` at `μ₂`.
    pub curvature_pred: f64,
    /// `∫ ξ² dμ₂`; equals `curvature_pred` when `ξ` is tangent at `μ₂`.
    pub second_moment: f64,
    pub tangent: bool,
}

/// `D(μ₁, equilibrium(log J₂ + θ ξ))`.
pub fn kl_along_direction(
    mu1: &EquilibriumState,
    mu2: &EquilibriumState,
    xi: &FiniteMemoryFunction,
    theta: f64,
) -> Result<f64> {
    let moved = equilibrium(&mu2.log_jacobian().add(&xi.scale(theta))?)?;
    kl_divergence(mu1, &moved)
}

pub fn kl_taylor(
    mu1: &EquilibriumState,
    mu2: &EquilibriumState,
    xi: &FiniteMemoryFunction,
    theta_grid: &[f64],
) -> Result<KlTaylor> {
    if let Some(t) = theta_grid.iter().find(|t| !(t.abs() <= 0.1)) {
        return Err(Error::InvalidInput(format!("theta {t} outside [-0.1, 0.1]")));
    }
    let samples = theta_grid
        .iter()
        .map(|&theta| {
            Ok(KlSample {
                theta,
                kl: kl_along_direction(mu1, mu2, xi, theta)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let slope_pred = -mu1.integrate(xi)? + mu2.integrate(xi)?;
    let curvature_pred = asymptotic_variance(mu2, xi, GREEN_KUBO_TOL)?;
    let second_moment = mu2.integrate(&xi.mul(xi)?)?;
    let tangent = TangentVector::new(mu2.clone(), xi.clone()).is_ok();
    Ok(KlTaylor {
        samples,
        slope_pred,
        curvature_pred,
        second_moment,
        tangent,
    })
}

/// Least-squares fit `y ≈ c₀ + c₁ t + c₂ t²`; returns `(c₀, c₁, c₂)`.
pub fn quadratic_fit(points: &[(f64, f64)]) -> Result<(f64, f64, f64)> {
    if points.len() < 3 {
        return Err(Error::InvalidInput("quadratic fit needs at least 3 points".into()));
    }
    let mut normal = Matrix3::zeros();
    let mut rhs = Vector3::zeros();
    for &(t, y) in points {
        let row = Vector3::new(1.0, t, t * t);
        normal += row * row.transpose();
        rhs += row * y;
    }
    let c = normal
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::InvalidInput("quadratic fit is degenerate".into()))?;
    Ok((c[0], c[1], c[2]))
}

/// Curvature `2 c₂` of the quadratic fit of `θ ↦ D(μ₁, μ_θ)` over
/// `θ ∈ {±1e−2, ±5e−3}`.
pub fn kl_fitted_curvature(mu1: &EquilibriumState, mu2: &EquilibriumState, xi: &FiniteMemoryFunction) -> Result<f64> {
    let grid = [-1e-2, -5e-3, 5e-3, 1e-2];
    let taylor = kl_taylor(mu1, mu2, xi, &grid)?;
    let points: Vec<(f64, f64)> = taylor.samples.iter().map(|s| (s.theta, s.kl)).collect();
    Ok(2.0 * quadratic_fit(&points)?.2)
}
