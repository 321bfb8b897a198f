//! Seeded random potentials, Jacobians and measures.
//!
//! Log-tables are drawn i.i.d. uniform on `[−1, 1]`; Jacobians are their
//! normalizations.

use rand::Rng;

use crate::error::Result;
use crate::measure::{dual_push, SuitableMeasure};
use crate::symbolic::{table_len, FiniteMemoryFunction};
use crate::transfer::{equilibrium, normalize};

pub fn random_potential<R: Rng + ?Sized>(rng: &mut R, alphabet: usize, depth: usize) -> Result<FiniteMemoryFunction> {
    let len = table_len(alphabet, depth)?;
    let values = (0..len).map(|_| rng.gen_range(-1.0..=1.0)).collect();
    FiniteMemoryFunction::new(alphabet, depth, values)
}

/// A normalized Jacobian of depth `max(depth, 1)`.
pub fn random_jacobian<R: Rng + ?Sized>(rng: &mut R, alphabet: usize, depth: usize) -> Result<FiniteMemoryFunction> {
    normalize(&random_potential(rng, alphabet, depth)?)
}

/// A generically non-invariant suitable measure of depth `max(depth, 1)`:
/// a random equilibrium pushed by an independent random Jacobian.
pub fn random_suitable_measure<R: Rng + ?Sized>(rng: &mut R, alphabet: usize, depth: usize) -> Result<SuitableMeasure> {
    if depth <= 1 {
        let raw: Vec<f64> = (0..alphabet).map(|_| rng.gen_range(-1.0f64..=1.0).exp()).collect();
        let total: f64 = raw.iter().sum();
        let p: Vec<f64> = raw.iter().map(|x| x / total).collect();
        let log_irn = FiniteMemoryFunction::new(alphabet, 1, p.iter().map(|x| x.ln()).collect())?;
        return SuitableMeasure::from_parts_unchecked(log_irn, vec![1.0]);
    }
    let eq = equilibrium(&random_potential(rng, alphabet, depth - 1)?)?;
    let log_j = random_jacobian(rng, alphabet, depth - 1)?;
    dual_push(&log_j, &eq)
}

/// A random shift-invariant measure of depth `max(depth, 1)`.
pub fn random_equilibrium<R: Rng + ?Sized>(
    rng: &mut R,
    alphabet: usize,
    depth: usize,
) -> Result<crate::measure::EquilibriumState> {
    equilibrium(&random_potential(rng, alphabet, depth)?)
}
