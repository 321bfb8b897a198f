//! Suitable measures with finite-memory IRN.
//!
//! A measure is stored as its log-IRN `log J` of depth `k ≥ 1` together with
//! its marginal on words of length `k−1`. Every cylinder weight follows from
//! `μ([a w]) = J(a w₁ … w_{k−1}) μ([w])`, so integrals of finite-memory
//! observables are exact finite sums.

use std::ops::Deref;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::symbolic::{table_len, FiniteMemoryFunction, Word};
use crate::transfer::{self, require_jacobian};

/// Tolerance for append-consistency of a user-supplied measure.
pub const CONSISTENCY_TOL: f64 = 1e-12;

/// A probability on the full shift with positive finite-memory IRN.
#[derive(Debug, Clone, PartialEq)]
pub struct SuitableMeasure {
    log_irn: FiniteMemoryFunction,
    base: Vec<f64>,
}

impl SuitableMeasure {
    /// Validated constructor: positivity, total mass and append-consistency.
    pub fn new(log_irn: FiniteMemoryFunction, base: Vec<f64>) -> Result<Self> {
        let m = Self::from_parts_unchecked(log_irn, base)?;
        let mass: f64 = m.base.iter().sum();
        if (mass - 1.0).abs() > CONSISTENCY_TOL {
            return Err(Error::InvalidInput(format!("base marginal sums to {mass}, expected 1")));
        }
        let residual = m.append_residual();
        if !(residual < CONSISTENCY_TOL) {
            return Err(Error::InvalidInput(format!(
                "base marginal is not consistent with the IRN (residual {residual:e})"
            )));
        }
        Ok(m)
    }

    /// Builds a measure checking only shapes and positivity.
    ///
    /// Used internally where consistency holds by construction, and to build
    /// deliberately corrupted measures for [`SuitableMeasure::verify_irn`].
    pub fn from_parts_unchecked(log_irn: FiniteMemoryFunction, base: Vec<f64>) -> Result<Self> {
        let log_irn = log_irn.extend_depth(log_irn.depth().max(1))?;
        let expected = table_len(log_irn.alphabet(), log_irn.depth() - 1)?;
        if base.len() != expected {
            return Err(Error::TableLength {
                expected,
                got: base.len(),
            });
        }
        if !log_irn.is_finite() {
            return Err(Error::InvalidInput("log IRN has non-finite entries".into()));
        }
        if let Some(b) = base.iter().find(|b| !(b.is_finite() && **b > 0.0)) {
            return Err(Error::InvalidInput(format!("base marginal entry {b} is not positive")));
        }
        Ok(SuitableMeasure { log_irn, base })
    }

    /// The Bernoulli measure with the given symbol probabilities.
    pub fn bernoulli(p: &[f64]) -> Result<Self> {
        if p.iter().any(|x| !(x.is_finite() && *x > 0.0)) {
            return Err(Error::InvalidInput("Bernoulli probabilities must be positive".into()));
        }
        let total: f64 = p.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidInput(format!("Bernoulli probabilities sum to {total}")));
        }
        let log_irn = FiniteMemoryFunction::new(p.len(), 1, p.iter().map(|x| x.ln()).collect())?;
        Self::new(log_irn, vec![1.0])
    }

    pub fn alphabet(&self) -> usize {
        self.log_irn.alphabet()
    }

    pub fn depth(&self) -> usize {
        self.log_irn.depth()
    }

    pub fn log_irn(&self) -> &FiniteMemoryFunction {
        &self.log_irn
    }

    /// Same as [`SuitableMeasure::log_irn`], owned.
    pub fn irn_of(&self) -> FiniteMemoryFunction {
        self.log_irn.clone()
    }

    pub fn base(&self) -> &[f64] {
        &self.base
    }

    /// Weights of all cylinders of length `m`, in index order.
    pub fn weights(&self, m: usize) -> Result<Vec<f64>> {
        let d = self.alphabet();
        let k = self.depth();
        table_len(d, m)?;
        if m < k - 1 {
            let fold = d.pow((k - 1 - m) as u32);
            return Ok(self.base.chunks(fold).map(|c| c.iter().sum()).collect());
        }
        let jac = self.log_irn.exp();
        let jv = jac.values();
        let block = d.pow((k - 1) as u32);
        let mut w = self.base.clone();
        for len in (k - 1)..m {
            let stride = d.pow((len + 1 - k) as u32);
            let mut next = Vec::with_capacity(w.len() * d);
            for a in 0..d {
                next.extend(w.iter().enumerate().map(|(j, x)| jv[a * block + j / stride] * x));
            }
            w = next;
        }
        Ok(w)
    }

    /// `μ([w])`; the empty word has weight 1.
    pub fn cylinder_weight(&self, word: &Word) -> Result<f64> {
        if word.alphabet() != self.alphabet() {
            return Err(Error::AlphabetMismatch(self.alphabet(), word.alphabet()));
        }
        let w = self.weights(word.len())?;
        Ok(w[word.index()])
    }

    /// Exact `∫ f dμ`.
    pub fn integrate(&self, f: &FiniteMemoryFunction) -> Result<f64> {
        if f.alphabet() != self.alphabet() {
            return Err(Error::AlphabetMismatch(self.alphabet(), f.alphabet()));
        }
        let depth = f.depth().max(self.depth());
        let w = self.weights(depth)?;
        let f = f.extend_depth(depth)?;
        Ok(w.iter().zip(f.values()).map(|(a, b)| a * b).sum())
    }

    /// `−∫ log J dμ`, unclamped for non-invariant measures.
    pub fn entropy(&self) -> Result<f64> {
        Ok(-self.integrate(&self.log_irn)?)
    }

    /// `max_w |base(w) − Σ_b J(w b) base(σ(w b))|` over words of length `k−1`.
    pub fn append_residual(&self) -> f64 {
        let d = self.alphabet();
        let n = self.base.len();
        let jv = self.log_irn.values();
        (0..n)
            .map(|w| {
                let s: f64 = (0..d)
                    .map(|b| {
                        let wb = w * d + b;
                        jv[wb].exp() * self.base[wb % n]
                    })
                    .sum();
                (self.base[w] - s).abs()
            })
            .fold(0.0, f64::max)
    }

    /// `max |μ([a w]) − J(a w) μ([w])|` over words `a w` of length
    /// `max(m, k)`, with `μ([w])` obtained by summing out the last symbol.
    ///
    /// A corrupted base shows up as a positive residual rather than an error.
    pub fn verify_irn(&self, m: usize) -> Result<f64> {
        let d = self.alphabet();
        let k = self.depth();
        let m = m.max(k);
        let w = self.weights(m)?;
        let marg: Vec<f64> = w.chunks(d).map(|c| c.iter().sum()).collect();
        let jv = self.log_irn.values();
        let tail = marg.len();
        let stride = d.pow((m - k) as u32);
        Ok((0..w.len())
            .map(|aw| (w[aw] - jv[aw / stride].exp() * marg[aw % tail]).abs())
            .fold(0.0, f64::max))
    }

    /// `max_w |Σ_a μ([a w]) − μ([w])|` over words of length `m`.
    pub fn shift_invariance_residual(&self, m: usize) -> Result<f64> {
        let long = self.weights(m + 1)?;
        let short = self.weights(m)?;
        let n = short.len();
        Ok((0..n)
            .map(|w| {
                let s: f64 = (0..self.alphabet()).map(|a| long[a * n + w]).sum();
                (s - short[w]).abs()
            })
            .fold(0.0, f64::max))
    }

    /// Largest cylinder-weight difference at length `m`.
    pub fn distance(&self, other: &SuitableMeasure, m: usize) -> Result<f64> {
        if self.alphabet() != other.alphabet() {
            return Err(Error::AlphabetMismatch(self.alphabet(), other.alphabet()));
        }
        let a = self.weights(m)?;
        let b = other.weights(m)?;
        Ok(a.iter().zip(&b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max))
    }

    /// Equality in the engine's sense: weights agree within `1e−12` at
    /// depth `max(k₁, k₂)`.
    pub fn approx_eq(&self, other: &SuitableMeasure) -> bool {
        let m = self.depth().max(other.depth());
        matches!(self.distance(other, m), Ok(e) if e < 1e-12)
    }
}

/// A shift-invariant measure whose IRN is a normalized Jacobian.
#[derive(Debug, Clone, PartialEq)]
pub struct EquilibriumState {
    measure: SuitableMeasure,
}

impl EquilibriumState {
    /// Checks the Jacobian property and shift-invariance.
    pub fn new(measure: SuitableMeasure) -> Result<Self> {
        require_jacobian(measure.log_irn())?;
        let residual = measure.shift_invariance_residual(measure.depth().min(4))?;
        if !(residual < 1e-10) {
            return Err(Error::InvalidInput(format!("measure is not shift-invariant (residual {residual:e})")));
        }
        Ok(EquilibriumState { measure })
    }

    pub(crate) fn from_measure_unchecked(measure: SuitableMeasure) -> Self {
        EquilibriumState { measure }
    }

    pub fn measure(&self) -> &SuitableMeasure {
        &self.measure
    }

    pub fn into_measure(self) -> SuitableMeasure {
        self.measure
    }

    pub fn log_jacobian(&self) -> &FiniteMemoryFunction {
        self.measure.log_irn()
    }
}

impl Deref for EquilibriumState {
    type Target = SuitableMeasure;

    fn deref(&self) -> &SuitableMeasure {
        &self.measure
    }
}

/// `D(μ₁, μ₂) = ∫ (log J₁ − log J₂) dμ₁`.
pub fn kl_divergence(mu1: &SuitableMeasure, mu2: &SuitableMeasure) -> Result<f64> {
    if mu1.alphabet() != mu2.alphabet() {
        return Err(Error::AlphabetMismatch(mu1.alphabet(), mu2.alphabet()));
    }
    mu1.integrate(&mu1.log_irn().sub(mu2.log_irn())?)
}

/// Checks a column-stochastic matrix, `matrix[i][j] = P_{ij}`, `Σ_i P_{ij} = 1`.
pub fn check_column_stochastic(p: &[Vec<f64>]) -> Result<usize> {
    let d = p.len();
    if d < 2 {
        return Err(Error::Alphabet(d));
    }
    if p.iter().any(|row| row.len() != d) {
        return Err(Error::InvalidInput("stochastic matrix must be square".into()));
    }
    if let Some(x) = p.iter().flatten().find(|x| !(x.is_finite() && **x > 0.0)) {
        return Err(Error::InvalidInput(format!("stochastic matrix entry {x} is not positive")));
    }
    for j in 0..d {
        let s: f64 = (0..d).map(|i| p[i][j]).sum();
        if (s - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidInput(format!("column {} sums to {s}, expected 1", j + 1)));
        }
    }
    Ok(d)
}

/// Stationary vector `P π = π`, `Σ π = 1`, by solving the linear system with
/// one balance row replaced by the normalization.
pub fn stationary_vector(p: &[Vec<f64>]) -> Result<Vec<f64>> {
    let d = check_column_stochastic(p)?;
    let mut a = DMatrix::from_fn(d, d, |i, j| p[i][j] - if i == j { 1.0 } else { 0.0 });
    let mut rhs = DVector::zeros(d);
    for j in 0..d {
        a[(d - 1, j)] = 1.0;
    }
    rhs[d - 1] = 1.0;
    let pi = a
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::Domain("stochastic matrix has no unique stationary vector".into()))?;
    if pi.iter().any(|x| !(*x > 0.0)) {
        return Err(Error::Domain("stationary vector is not strictly positive".into()));
    }
    Ok(pi.iter().copied().collect())
}

/// The stationary Markov measure with `μ([i j]) = P_{ji} π_i`.
pub fn markov_invariant(p: &[Vec<f64>]) -> Result<EquilibriumState> {
    let pi = stationary_vector(p)?;
    let d = pi.len();
    let log_irn = FiniteMemoryFunction::from_fn(d, 2, |w| (p[w[1]][w[0]] * pi[w[0]] / pi[w[1]]).ln())?;
    Ok(EquilibriumState::from_measure_unchecked(SuitableMeasure::from_parts_unchecked(
        log_irn, pi,
    )?))
}

/// The Markov measure with initial law `z`: `μ^z([i j]) = P_{ji} z_i`.
pub fn markov_noninvariant(p: &[Vec<f64>], z: &[f64]) -> Result<SuitableMeasure> {
    let d = check_column_stochastic(p)?;
    if z.len() != d {
        return Err(Error::TableLength { expected: d, got: z.len() });
    }
    if z.iter().any(|x| !(x.is_finite() && *x > 0.0)) {
        return Err(Error::InvalidInput("initial vector must be positive".into()));
    }
    let total: f64 = z.iter().sum();
    if (total - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidInput(format!("initial vector sums to {total}")));
    }
    let log_irn = FiniteMemoryFunction::from_fn(d, 2, |w| (p[w[1]][w[0]] * z[w[0]] / z[w[1]]).ln())?;
    SuitableMeasure::from_parts_unchecked(log_irn, z.to_vec())
}

fn push_unchecked(log_j: &FiniteMemoryFunction, mu: &SuitableMeasure) -> Result<SuitableMeasure> {
    let d = mu.alphabet();
    let log_j = log_j.extend_depth(log_j.depth().max(1))?;
    let kj = log_j.depth();
    let k3 = mu.depth().max(kj) + 1;
    table_len(d, k3)?;
    let log_irn = mu
        .log_irn()
        .compose_shift()?
        .add(&log_j)?
        .sub(&log_j.compose_shift()?)?
        .extend_depth(k3)?;
    let inner = mu.weights(k3 - 2)?;
    let n = inner.len();
    let stride = d.pow((k3 - 1 - kj) as u32);
    let jv = log_j.values();
    let block = d.pow((kj - 1) as u32);
    let mut base = Vec::with_capacity(n * d);
    for a in 0..d {
        base.extend(inner.iter().enumerate().map(|(u, w)| jv[a * block + u / stride].exp() * w));
    }
    SuitableMeasure::from_parts_unchecked(log_irn, base)
}

/// `L*_{log J}(μ)`, the thermodynamic operation driven by the Jacobian `J`.
pub fn dual_push(log_j: &FiniteMemoryFunction, mu: &SuitableMeasure) -> Result<SuitableMeasure> {
    if log_j.alphabet() != mu.alphabet() {
        return Err(Error::AlphabetMismatch(mu.alphabet(), log_j.alphabet()));
    }
    require_jacobian(log_j)?;
    push_unchecked(log_j, mu)
}

/// Depth reached by `n` pushes of a depth-`k₀` measure by a depth-`k_J` Jacobian.
pub fn pushed_depth(k0: usize, kj: usize, n: usize) -> usize {
    if n == 0 {
        k0
    } else {
        k0.max(kj.max(1)) + n
    }
}

/// `n`-fold [`dual_push`].
pub fn iterate_push(log_j: &FiniteMemoryFunction, mu0: &SuitableMeasure, n: usize) -> Result<SuitableMeasure> {
    if log_j.alphabet() != mu0.alphabet() {
        return Err(Error::AlphabetMismatch(mu0.alphabet(), log_j.alphabet()));
    }
    require_jacobian(log_j)?;
    table_len(mu0.alphabet(), pushed_depth(mu0.depth(), log_j.depth(), n))?;
    let mut mu = mu0.clone();
    for _ in 0..n {
        mu = push_unchecked(log_j, &mu)?;
    }
    Ok(mu)
}

/// Closed form of the IRN after `n` pushes:
/// `log J_n = log J₀∘σⁿ + log J − log J∘σⁿ`.
pub fn iterated_irn_closed_form(
    log_j: &FiniteMemoryFunction,
    log_j0: &FiniteMemoryFunction,
    n: usize,
) -> Result<FiniteMemoryFunction> {
    log_j0
        .compose_shift_n(n)?
        .add(log_j)?
        .sub(&log_j.compose_shift_n(n)?)
}

/// One row of [`weak_convergence_trace`].
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct TraceRow {
    pub n: usize,
    /// `max_w |μ_n([w]) − μ([w])|` over probe cylinders.
    pub deviation: f64,
    /// `Σ_w |μ_n([w]) − μ([w])|`; non-increasing once the probe depth is at
    /// least the depth of `J`.
    pub total_variation: f64,
    pub kl: f64,
}

/// Cylinder deviation from the equilibrium of `log J` and KL to it along
/// the push orbit of `μ₀`, for `n = 0 … n_max`.
pub fn weak_convergence_trace(
    log_j: &FiniteMemoryFunction,
    mu0: &SuitableMeasure,
    n_max: usize,
    probe_depth: usize,
) -> Result<Vec<TraceRow>> {
    if probe_depth > 4 {
        return Err(Error::InvalidInput(format!("probe depth {probe_depth} exceeds 4")));
    }
    require_jacobian(log_j)?;
    table_len(mu0.alphabet(), pushed_depth(mu0.depth(), log_j.depth(), n_max))?;
    let eq = transfer::equilibrium(log_j)?;
    let mut mu = mu0.clone();
    let mut rows = Vec::with_capacity(n_max + 1);
    for n in 0..=n_max {
        if n > 0 {
            mu = push_unchecked(log_j, &mu)?;
        }
        let (now, target) = (mu.weights(probe_depth)?, eq.weights(probe_depth)?);
        rows.push(TraceRow {
            n,
            deviation: mu.distance(&eq, probe_depth)?,
            total_variation: now.iter().zip(&target).map(|(a, b)| (a - b).abs()).sum(),
            kl: kl_divergence(&mu, &eq)?,
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::{random_jacobian, random_suitable_measure};
    use crate::transfer::{equilibrium, normalize};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn sym() -> Vec<Vec<f64>> {
        vec![vec![0.7, 0.3], vec![0.3, 0.7]]
    }

    fn circulant() -> Vec<Vec<f64>> {
        // matrix[j][i] = q(i → j)
        let mut p = vec![vec![0.0; 3]; 3];
        for i in 0..3 {
            p[(i + 1) % 3][i] = 0.7;
            p[(i + 2) % 3][i] = 0.2;
            p[i][i] = 0.1;
        }
        p
    }

    #[test]
    fn markov_entropy_closed_forms() {
        let uniform = markov_invariant(&[vec![0.5, 0.5], vec![0.5, 0.5]]).unwrap();
        assert!((uniform.entropy().unwrap() - 2f64.ln()).abs() < 1e-15);
        let m = markov_invariant(&sym()).unwrap();
        assert!((m.entropy().unwrap() - 0.6108643020548935).abs() < 1e-12);
        let c = markov_invariant(&circulant()).unwrap();
        assert!((c.entropy().unwrap() - 0.8018185525433372).abs() < 1e-12);
        assert!(c.base().iter().all(|p| (p - 1.0 / 3.0).abs() < 1e-15));
    }

    #[test]
    fn markov_cylinders() {
        let p = vec![vec![0.9, 0.2], vec![0.1, 0.8]];
        let pi = stationary_vector(&p).unwrap();
        assert!((pi[0] - 2.0 / 3.0).abs() < 1e-15);
        let m = markov_invariant(&p).unwrap();
        let w = m.weights(2).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                assert!((w[i * 2 + j] - p[j][i] * pi[i]).abs() < 1e-15);
            }
        }
        assert!(EquilibriumState::new(m.measure().clone()).is_ok());
        assert!(m.verify_irn(4).unwrap() < 1e-15);
    }

    #[test]
    fn markov_rejects_bad_matrices() {
        assert!(markov_invariant(&[vec![0.5, 0.5], vec![0.6, 0.4]]).is_err());
        assert!(markov_invariant(&[vec![1.0, 0.5], vec![0.0, 0.5]]).is_err());
        assert!(markov_noninvariant(&sym(), &[1.0, 0.0]).is_err());
    }

    #[test]
    fn markov_noninvariant_examples() {
        let m = markov_noninvariant(&sym(), &[0.9, 0.1]).unwrap();
        let j12 = m.log_irn().values()[1].exp();
        assert!((j12 - 2.7).abs() < 1e-14);
        let w = m.weights(2).unwrap();
        assert!((w[1] - 0.3 * 0.9).abs() < 1e-15);
        assert!(m.verify_irn(5).unwrap() < 1e-12);
        assert!(SuitableMeasure::new(m.log_irn().clone(), m.base().to_vec()).is_ok());

        let p = vec![vec![0.9, 0.2], vec![0.1, 0.8]];
        let at_pi = markov_noninvariant(&p, &stationary_vector(&p).unwrap()).unwrap();
        assert!(at_pi.approx_eq(&markov_invariant(&p).unwrap()));
    }

    #[test]
    fn cylinder_weights_and_integrals() {
        let b = SuitableMeasure::bernoulli(&[0.5, 0.5]).unwrap();
        let w = Word::new(&[1, 2, 1], 2).unwrap();
        assert!((b.cylinder_weight(&w).unwrap() - 0.125).abs() < 1e-16);
        assert_eq!(b.cylinder_weight(&Word::new(&[], 2).unwrap()).unwrap(), 1.0);

        let b = SuitableMeasure::bernoulli(&[0.3, 0.7]).unwrap();
        let one = Word::new(&[1], 2).unwrap();
        assert!((b.integrate(&FiniteMemoryFunction::indicator(&one).unwrap()).unwrap() - 0.3).abs() < 1e-16);
        assert!((b.integrate(&FiniteMemoryFunction::constant(2, 4.5).unwrap()).unwrap() - 4.5).abs() < 1e-14);

        let m = markov_invariant(&circulant()).unwrap();
        let total: f64 = m.weights(3).unwrap().iter().sum();
        assert!((total - 1.0).abs() < 1e-14);
        let f = FiniteMemoryFunction::from_fn(3, 2, |w| (w[0] * 3 + w[1]) as f64).unwrap();
        let a = m.integrate(&f).unwrap();
        let b = m.integrate(&f.compose_shift().unwrap()).unwrap();
        assert!((a - b).abs() < 1e-14);
    }

    #[test]
    fn short_cylinders_sum_the_base() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mu = random_suitable_measure(&mut rng, 2, 3).unwrap();
        assert!(mu.depth() >= 3);
        let w0 = mu.weights(0).unwrap();
        assert!((w0[0] - 1.0).abs() < 1e-14);
        let w1 = mu.weights(1).unwrap();
        let w3 = mu.weights(3).unwrap();
        for a in 0..2 {
            let s: f64 = w3[a * 4..a * 4 + 4].iter().sum();
            assert!((s - w1[a]).abs() < 1e-15);
        }
    }

    #[test]
    fn kl_examples() {
        let b = SuitableMeasure::bernoulli(&[0.5, 0.5]).unwrap();
        let m = markov_invariant(&sym()).unwrap();
        assert_eq!(kl_divergence(&m, &m).unwrap(), 0.0);
        let kl = kl_divergence(&b, &m).unwrap();
        assert!((kl - 0.087176693572389).abs() < 1e-13);
        let max = SuitableMeasure::bernoulli(&[0.5, 0.5]).unwrap();
        let d = kl_divergence(&m, &max).unwrap();
        assert!((d - (2f64.ln() - m.entropy().unwrap())).abs() < 1e-14);
    }

    #[test]
    fn verify_irn_detects_corruption() {
        let m = markov_invariant(&sym()).unwrap();
        let mut base = m.base().to_vec();
        base[0] += 0.05;
        base[1] -= 0.05;
        let bad = SuitableMeasure::from_parts_unchecked(m.log_irn().clone(), base.clone()).unwrap();
        assert!(bad.verify_irn(3).unwrap() > 1e-3);
        assert!(SuitableMeasure::new(m.log_irn().clone(), base).is_err());
    }

    #[test]
    fn dual_push_fixes_the_equilibrium() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let log_j = random_jacobian(&mut rng, 3, 2).unwrap();
        let eq = equilibrium(&log_j).unwrap();
        let pushed = dual_push(&log_j, &eq).unwrap();
        assert_eq!(pushed.depth(), 3);
        assert!(pushed.distance(&eq, 4).unwrap() < 1e-12);
    }

    #[test]
    fn dual_push_uniform_jacobian_on_bernoulli() {
        let log_j = FiniteMemoryFunction::constant(2, 0.5f64.ln()).unwrap();
        let mu = SuitableMeasure::bernoulli(&[0.9, 0.1]).unwrap();
        let pushed = dual_push(&log_j, &mu).unwrap();
        assert_eq!(pushed.depth(), 2);
        let w = pushed.weights(2).unwrap();
        for a in 0..2 {
            for b in 0..2 {
                let pb = [0.9, 0.1][b];
                assert!((w[a * 2 + b] - pb / 2.0).abs() < 1e-15);
                assert!((pushed.log_irn().values()[a * 2 + b].exp() - pb).abs() < 1e-15);
            }
        }
        assert!((pushed.entropy().unwrap() - mu.entropy().unwrap()).abs() < 1e-15);
    }

    #[test]
    fn dual_push_breaks_invariance() {
        let mu = markov_invariant(&sym()).unwrap();
        let log_j = normalize(&FiniteMemoryFunction::new(2, 1, vec![0.3, -0.4]).unwrap()).unwrap();
        let pushed = dual_push(&log_j, &mu).unwrap();
        assert!(pushed.shift_invariance_residual(2).unwrap() > 1e-6);
        assert!(pushed.verify_irn(4).unwrap() < 1e-12);
    }

    #[test]
    fn dual_push_requires_jacobian() {
        let mu = SuitableMeasure::bernoulli(&[0.5, 0.5]).unwrap();
        let bad = FiniteMemoryFunction::constant(2, 0.0).unwrap();
        assert!(matches!(dual_push(&bad, &mu), Err(Error::NotNormalized { .. })));
    }

    #[test]
    fn iterate_push_matches_closed_form() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let log_j = random_jacobian(&mut rng, 2, 2).unwrap();
        let mu0 = markov_noninvariant(&sym(), &[0.9, 0.1]).unwrap();
        assert_eq!(iterate_push(&log_j, &mu0, 0).unwrap(), mu0);
        assert_eq!(iterate_push(&log_j, &mu0, 1).unwrap(), dual_push(&log_j, &mu0).unwrap());
        let mu3 = iterate_push(&log_j, &mu0, 3).unwrap();
        let closed = iterated_irn_closed_form(&log_j, mu0.log_irn(), 3).unwrap();
        assert_eq!(mu3.depth(), 5);
        assert!(mu3.log_irn().distance(&closed).unwrap() < 1e-12);
    }

    #[test]
    fn iterate_push_envelope() {
        let log_j = FiniteMemoryFunction::constant(4, 0.25f64.ln()).unwrap();
        let mu = SuitableMeasure::bernoulli(&[0.25; 4]).unwrap();
        assert!(matches!(iterate_push(&log_j, &mu, 8), Err(Error::Envelope { limit: 65_536, .. })));
        assert!(iterate_push(&log_j, &mu, 7).is_ok());
    }

    #[test]
    fn weak_convergence_examples() {
        let log_j = markov_invariant(&sym()).unwrap().log_jacobian().clone();
        let eq_rows = weak_convergence_trace(&log_j, &equilibrium(&log_j).unwrap(), 3, 3).unwrap();
        assert!(eq_rows.iter().all(|r| r.deviation < 1e-14 && r.kl.abs() < 1e-14));

        let mu0 = SuitableMeasure::bernoulli(&[0.9, 0.1]).unwrap();
        let rows = weak_convergence_trace(&log_j, &mu0, 5, 3).unwrap();
        for pair in rows.windows(2) {
            assert!(pair[1].deviation < pair[0].deviation);
            assert!((pair[1].kl - rows[0].kl).abs() < 1e-10);
        }
        assert!(weak_convergence_trace(&log_j, &mu0, 1, 5).is_err());
    }

    proptest::proptest! {
        #[test]
        fn constructed_measures_are_consistent(seed in 0u64..1000, d in 2usize..4, k in 1usize..4) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mu = random_suitable_measure(&mut rng, d, k).unwrap();
            for m in 0..=4 {
                let total: f64 = mu.weights(m).unwrap().iter().sum();
                proptest::prop_assert!((total - 1.0).abs() < 1e-13);
            }
            proptest::prop_assert!(mu.append_residual() < 1e-12);
            proptest::prop_assert!(mu.verify_irn(4).unwrap() < 1e-12);
        }

        #[test]
        fn kl_nonnegative_from_equilibria(seed in 0u64..1000, d in 2usize..4, k in 1usize..4) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mu1 = equilibrium(&random_jacobian(&mut rng, d, k).unwrap()).unwrap();
            let mu2 = random_suitable_measure(&mut rng, d, k).unwrap();
            proptest::prop_assert!(kl_divergence(&mu1, &mu2).unwrap() >= -1e-12);
        }

        #[test]
        fn entropy_of_equilibrium(seed in 0u64..1000, d in 2usize..4, k in 0usize..4) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let a = crate::sampling::random_potential(&mut rng, d, k).unwrap();
            let eq = equilibrium(&a).unwrap();
            let h = eq.entropy().unwrap();
            let s = eq.integrate(&normalize(&a).unwrap()).unwrap();
            proptest::prop_assert!((h + s).abs() < 1e-12);
            proptest::prop_assert!(h >= -1e-12 && h <= (d as f64).ln() + 1e-12);
        }

        #[test]
        fn push_depth_bookkeeping(seed in 0u64..1000, k1 in 1usize..4, kj in 0usize..4) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mu = random_suitable_measure(&mut rng, 2, k1).unwrap();
            let log_j = random_jacobian(&mut rng, 2, kj).unwrap();
            let pushed = dual_push(&log_j, &mu).unwrap();
            proptest::prop_assert_eq!(pushed.depth(), mu.depth().max(log_j.depth().max(1)) + 1);
        }
    }
}
