//! Involution kernel, dual potential and flip entropy production.
//!
//! A point of the two-sided shift is written `(y | x)` with `y = y₁ y₂ …`
//! read outward from the bar. For a depth-`k` potential the kernel
//! `W(y | x)` depends on `y₁ … y_{k−1}` and `x₁ … x_{k−1}` and is stored as a
//! function of the concatenation `y_{k−1} … y₁ x₁ … x_{k−1}`. The dual
//! potential is moved to the one-sided shift by the flip, `A_dual(z) = A⁻(y)`
//! with `y_i = z_i`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::measure::{kl_divergence, EquilibriumState, SuitableMeasure};
use crate::symbolic::{table_len, word_at, word_index, FiniteMemoryFunction, Word};
use crate::transfer::{equilibrium, perron};

pub const IDENTITY_TOL: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct InvolutionData {
    pub potential: FiniteMemoryFunction,
    pub reference: Word,
    /// `W` over `y_{k−1} … y₁ x₁ … x_{k−1}`.
    pub kernel: FiniteMemoryFunction,
    pub dual: FiniteMemoryFunction,
    /// Largest deviation of the defining identity over all `x`.
    pub identity_residual: f64,
}

impl InvolutionData {
    /// `W(y | x)` for 0-based `y = y₁ … y_{k−1}` and `x = x₁ … x_{k−1}`.
    pub fn w(&self, y: &[usize], x: &[usize]) -> f64 {
        let d = self.potential.alphabet();
        let mut word: Vec<usize> = y.iter().rev().copied().collect();
        word.extend_from_slice(x);
        self.kernel.values()[word_index(&word, d)]
    }
}

fn kernel_value(a: &FiniteMemoryFunction, y: &[usize], x: &[usize], reference: &[usize]) -> f64 {
    let k = a.depth();
    let mut sum = 0.0;
    let mut buf = Vec::with_capacity(k);
    for n in 1..k {
        buf.clear();
        buf.extend(y[..n].iter().rev());
        buf.extend_from_slice(&x[..k - n]);
        let with_x = a.eval(&buf);
        buf.truncate(n);
        buf.extend_from_slice(&reference[..k - n]);
        sum += with_x - a.eval(&buf);
    }
    sum
}

/// `A⁻(y) = A(y₁ x) + W(y₂ … | y₁ x) − W(y₁ … | x)` at a given `x`.
fn dual_at(a: &FiniteMemoryFunction, y: &[usize], x: &[usize], reference: &[usize]) -> f64 {
    let k = a.depth();
    let mut head = Vec::with_capacity(k);
    head.push(y[0]);
    head.extend_from_slice(&x[..k - 1]);
    let shifted_x: Vec<usize> = head[..k - 1].to_vec();
    a.eval(&head) + kernel_value(a, &y[1..], &shifted_x, reference) - kernel_value(a, &y[..k - 1], x, reference)
}

/// Builds the kernel gauged by `W(y | x*) = 0` and the dual potential.
pub fn involution_kernel(a: &FiniteMemoryFunction, reference: &Word) -> Result<InvolutionData> {
    let d = a.alphabet();
    if reference.alphabet() != d {
        return Err(Error::AlphabetMismatch(d, reference.alphabet()));
    }
    let a = a.extend_depth(a.depth().max(1))?;
    let k = a.depth();
    if reference.len() != k - 1 {
        return Err(Error::InvalidInput(format!(
            "reference word has length {}, expected {}",
            reference.len(),
            k - 1
        )));
    }
    let x_ref: Vec<usize> = reference.symbols().iter().map(|s| s - 1).collect();
    let side = k - 1;
    table_len(d, 2 * side)?;
    let kernel = FiniteMemoryFunction::from_fn(d, 2 * side, |w| {
        let y: Vec<usize> = w[..side].iter().rev().copied().collect();
        kernel_value(&a, &y, &w[side..], &x_ref)
    })?;
    if k == 1 {
        return Ok(InvolutionData {
            dual: a.clone(),
            potential: a,
            reference: reference.clone(),
            kernel,
            identity_residual: 0.0,
        });
    }
    let dual = FiniteMemoryFunction::from_fn(d, k, |y| dual_at(&a, y, &x_ref, &x_ref))?;
    let states = table_len(d, side)?;
    let mut residual = 0.0f64;
    for xi in 0..states {
        let x = word_at(xi, side, d);
        for (yi, &expected) in dual.values().iter().enumerate() {
            let y = word_at(yi, k, d);
            residual = residual.max((dual_at(&a, &y, &x, &x_ref) - expected).abs());
        }
    }
    let scale = a.sup_norm().max(1.0);
    if !(residual < IDENTITY_TOL * scale) {
        return Err(Error::Internal(format!(
            "dual potential depends on the future coordinates (residual {residual:e})"
        )));
    }
    Ok(InvolutionData {
        potential: a,
        reference: reference.clone(),
        kernel,
        dual,
        identity_residual: residual,
    })
}

fn default_reference(a: &FiniteMemoryFunction) -> Result<Word> {
    let len = a.depth().max(1) - 1;
    Word::new(&vec![1; len], a.alphabet())
}

/// `∫ (A − A_dual) dμ_A`.
pub fn entropy_production(a: &FiniteMemoryFunction) -> Result<f64> {
    entropy_production_with_reference(a, &default_reference(a)?)
}

pub fn entropy_production_with_reference(a: &FiniteMemoryFunction, reference: &Word) -> Result<f64> {
    let data = involution_kernel(a, reference)?;
    let mu = equilibrium(a)?;
    mu.integrate(&data.potential.sub(&data.dual)?)
}

#[derive(Debug, Clone, Serialize)]
pub struct EntropyProductionReport {
    pub e_p: f64,
    pub symmetric_detected: bool,
    pub depth: usize,
}

pub fn entropy_production_report(a: &FiniteMemoryFunction) -> Result<EntropyProductionReport> {
    let e_p = entropy_production(a)?;
    Ok(EntropyProductionReport {
        e_p,
        symmetric_detected: e_p.abs() < 1e-12,
        depth: a.depth(),
    })
}

/// `w(a₁ … a_m) = μ_A([a_m … a₁])`, the time reversal of `μ_A`.
pub fn flip_pushforward_weights(a: &FiniteMemoryFunction, m: usize) -> Result<Vec<f64>> {
    if m > 5 {
        return Err(Error::InvalidInput(format!("word length {m} exceeds 5")));
    }
    let mu = equilibrium(a)?;
    reversed_weights(&mu, m)
}

fn reversed_weights(mu: &SuitableMeasure, m: usize) -> Result<Vec<f64>> {
    let d = mu.alphabet();
    let w = mu.weights(m)?;
    Ok((0..w.len())
        .map(|i| {
            let mut word = word_at(i, m, d);
            word.reverse();
            w[word_index(&word, d)]
        })
        .collect())
}

/// The time reversal of `μ_A` as an equilibrium state of the same depth.
pub fn reversed_equilibrium(a: &FiniteMemoryFunction) -> Result<EquilibriumState> {
    let mu = equilibrium(a)?;
    let d = mu.alphabet();
    let k = mu.depth();
    let long = reversed_weights(&mu, k)?;
    let short = reversed_weights(&mu, k - 1)?;
    let tail = short.len();
    let log_irn = FiniteMemoryFunction::new(
        d,
        k,
        long.iter().enumerate().map(|(i, w)| (w / short[i % tail]).ln()).collect(),
    )?;
    EquilibriumState::new(SuitableMeasure::new(log_irn, short)?)
}

/// `D(μ_A, θ*μ⁻_A)` computed from the reversed measure.
pub fn flip_kl(a: &FiniteMemoryFunction) -> Result<f64> {
    kl_divergence(equilibrium(a)?.measure(), reversed_equilibrium(a)?.measure())
}

/// Deviation from constancy of `g/φ_A`, where
/// `g(x) = Σ_y e^{W(y|x)} ν_{A_dual}([y₁ … y_{k−1}])`.
///
/// Supported for depth ≤ 2; see [`duality_check_general`] for deeper
/// potentials.
pub fn duality_check(a: &FiniteMemoryFunction) -> Result<f64> {
    if a.depth() > 2 {
        return Err(Error::UnsupportedDepth(a.depth()));
    }
    duality_check_general(a)
}

/// The same check at any depth; experimental beyond depth 2.
pub fn duality_check_general(a: &FiniteMemoryFunction) -> Result<f64> {
    let data = involution_kernel(a, &default_reference(a)?)?;
    let d = a.alphabet();
    let side = data.potential.depth() - 1;
    let phi = perron(&data.potential)?.phi;
    let nu = perron(&data.dual)?.nu;
    let states = phi.len();
    let ratios: Vec<f64> = (0..states)
        .map(|xi| {
            let x = word_at(xi, side, d);
            let g: f64 = (0..nu.len())
                .map(|yi| data.w(&word_at(yi, side, d), &x).exp() * nu[yi])
                .sum();
            g / phi[xi]
        })
        .collect();
    let mean = ratios.iter().sum::<f64>() / ratios.len() as f64;
    Ok(ratios.iter().map(|r| (r - mean).abs()).fold(0.0, f64::max) / mean)
}
