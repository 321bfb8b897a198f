//! The Ruelle operator of a finite-memory potential, its leading eigendata,
//! pressure, normalization and equilibrium states.
//!
//! For a depth-`k` potential `A` the operator
//! `(L_A f)(x) = Σ_a e^{A(a x)} f(a x)` maps functions of `k−1` coordinates
//! to functions of `k−1` coordinates, so on that subspace it is a
//! `d^{k−1} × d^{k−1}` nonnegative matrix with exactly `d` nonzero entries in
//! every row. The matrix is irreducible and aperiodic on the full shift, so
//! power iteration converges geometrically.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::measure::{EquilibriumState, SuitableMeasure};
use crate::symbolic::{table_len, FiniteMemoryFunction};

pub const PERRON_TOL: f64 = 1e-14;
pub const PERRON_MAX_ITER: usize = 100_000;
/// Tolerance used when a caller requires a potential to be a Jacobian.
pub const NORMALIZATION_TOL: f64 = 1e-10;

/// `L_A` with `e^A` tabulated once.
#[derive(Debug, Clone)]
pub struct RuelleOperator {
    alphabet: usize,
    depth: usize,
    weights: Vec<f64>,
}

impl RuelleOperator {
    pub fn new(potential: &FiniteMemoryFunction) -> Result<Self> {
        if !potential.is_finite() {
            return Err(Error::InvalidInput("potential has non-finite entries".into()));
        }
        let p = potential.extend_depth(potential.depth().max(1))?;
        Ok(RuelleOperator {
            alphabet: p.alphabet(),
            depth: p.depth(),
            weights: p.exp().into_values(),
        })
    }

    pub fn alphabet(&self) -> usize {
        self.alphabet
    }

    /// Depth of the (lifted) potential, at least 1.
    pub fn depth(&self) -> usize {
        self.depth
    }

    /// `L_A f`; the result has depth `max(depth(A), depth(f)) − 1`.
    pub fn apply(&self, f: &FiniteMemoryFunction) -> Result<FiniteMemoryFunction> {
        if f.alphabet() != self.alphabet {
            return Err(Error::AlphabetMismatch(self.alphabet, f.alphabet()));
        }
        let d = self.alphabet;
        let depth = self.depth.max(f.depth());
        let f = f.extend_depth(depth)?;
        let out_len = table_len(d, depth - 1)?;
        // the weight of (a, x) only reads the first `self.depth` symbols
        let stride = d.pow((depth - self.depth) as u32);
        let block = d.pow((self.depth - 1) as u32);
        let fv = f.values();
        let values = (0..out_len)
            .map(|x| {
                (0..d)
                    .map(|a| {
                        let ax = a * out_len + x;
                        let w = self.weights[a * block + x / stride];
                        w * fv[ax]
                    })
                    .sum()
            })
            .collect();
        FiniteMemoryFunction::new(d, depth - 1, values)
    }

    /// `L_A^n f`.
    pub fn apply_n(&self, f: &FiniteMemoryFunction, n: usize) -> Result<FiniteMemoryFunction> {
        let mut g = f.clone();
        for _ in 0..n {
            g = self.apply(&g)?;
        }
        Ok(g)
    }
}

/// `L_A f`.
pub fn apply_ruelle(potential: &FiniteMemoryFunction, f: &FiniteMemoryFunction) -> Result<FiniteMemoryFunction> {
    if potential.alphabet() != f.alphabet() {
        return Err(Error::AlphabetMismatch(potential.alphabet(), f.alphabet()));
    }
    RuelleOperator::new(potential)?.apply(f)
}

/// `sup_x |L_{log J} 1 (x) − 1|`.
pub fn normalization_residual(log_jacobian: &FiniteMemoryFunction) -> Result<f64> {
    let one = FiniteMemoryFunction::constant(log_jacobian.alphabet(), 1.0)?;
    Ok(apply_ruelle(log_jacobian, &one)?.add_constant(-1.0).sup_norm())
}

/// Fails unless `log_jacobian` is normalized within [`NORMALIZATION_TOL`].
pub fn require_jacobian(log_jacobian: &FiniteMemoryFunction) -> Result<()> {
    let residual = normalization_residual(log_jacobian)?;
    if residual.is_nan() || residual >= NORMALIZATION_TOL {
        return Err(Error::NotNormalized { residual });
    }
    Ok(())
}

/// The Ruelle operator restricted to functions of `k−1` coordinates.
///
/// Entry `(x, y)` is `e^{A(a x)}` when `y = (a, x_1 … x_{k−2})` and zero
/// otherwise. Only the `d^k` nonzero entries are stored: potentials produced
/// by repeated dual pushes grow deep enough that a dense `d^{k−1}` square
/// would not fit in memory.
#[derive(Debug, Clone)]
pub struct TransferMatrix {
    alphabet: usize,
    state_depth: usize,
    /// `e^{A − shift}` over length-`k` words.
    weights: Vec<f64>,
    shift: f64,
}

impl TransferMatrix {
    pub fn new(potential: &FiniteMemoryFunction) -> Result<Self> {
        if !potential.is_finite() {
            return Err(Error::InvalidInput("potential has non-finite entries".into()));
        }
        let p = potential.extend_depth(potential.depth().max(1))?;
        let shift = p.max_value();
        Ok(TransferMatrix {
            alphabet: p.alphabet(),
            state_depth: p.depth() - 1,
            weights: p.add_constant(-shift).exp().into_values(),
            shift,
        })
    }

    /// Number of states, `d^{k−1}`.
    pub fn dim(&self) -> usize {
        self.weights.len() / self.alphabet
    }

    pub fn state_depth(&self) -> usize {
        self.state_depth
    }

    pub fn entry(&self, row: usize, col: usize) -> f64 {
        let d = self.alphabet;
        let n = self.dim();
        if self.state_depth == 0 {
            return self.weights.iter().sum::<f64>() * self.shift.exp();
        }
        let tail = n / d;
        let a = col / tail;
        if col % tail != row / d {
            return 0.0;
        }
        self.weights[a * n + row] * self.shift.exp()
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let n = self.dim();
        (0..n).map(|r| (0..n).map(|c| self.entry(r, c)).collect()).collect()
    }

    /// `e^{−shift} M v`.
    fn mul_scaled(&self, v: &[f64]) -> Vec<f64> {
        let d = self.alphabet;
        let n = self.dim();
        if self.state_depth == 0 {
            return vec![self.weights.iter().sum::<f64>() * v[0]];
        }
        let tail = n / d;
        (0..n)
            .map(|x| (0..d).map(|a| self.weights[a * n + x] * v[a * tail + x / d]).sum())
            .collect()
    }

    /// `e^{−shift} Mᵀ v`.
    fn mul_transpose_scaled(&self, v: &[f64]) -> Vec<f64> {
        let d = self.alphabet;
        let n = self.dim();
        if self.state_depth == 0 {
            return vec![self.weights.iter().sum::<f64>() * v[0]];
        }
        let tail = n / d;
        let mut out = vec![0.0; n];
        for (y, slot) in out.iter_mut().enumerate() {
            let a = y / tail;
            let u = y % tail;
            *slot = (0..d).map(|b| v[u * d + b] * self.weights[a * n + u * d + b]).sum();
        }
        out
    }

    /// `M v`.
    pub fn mul(&self, v: &[f64]) -> Vec<f64> {
        let s = self.shift.exp();
        self.mul_scaled(v).into_iter().map(|x| x * s).collect()
    }

    /// `Mᵀ v`.
    pub fn mul_transpose(&self, v: &[f64]) -> Vec<f64> {
        let s = self.shift.exp();
        self.mul_transpose_scaled(v).into_iter().map(|x| x * s).collect()
    }
}

/// Leading eigenvalue with its positive right and left eigenvectors.
///
/// Normalized so that `Σ nu = 1` and `Σ phi·nu = 1`.
#[derive(Debug, Clone, Serialize)]
pub struct PerronData {
    pub lambda: f64,
    pub phi: Vec<f64>,
    pub nu: Vec<f64>,
    #[serde(skip)]
    pub log_lambda: f64,
    #[serde(skip)]
    pub alphabet: usize,
    #[serde(skip)]
    pub state_depth: usize,
}

impl PerronData {
    /// The eigenfunction as a finite-memory function of `k−1` coordinates.
    pub fn eigenfunction(&self) -> FiniteMemoryFunction {
        FiniteMemoryFunction::new(self.alphabet, self.state_depth, self.phi.clone())
            .expect("eigenvector length matches the state space")
    }
}

fn power_iterate(apply: impl Fn(&[f64]) -> Vec<f64>, n: usize) -> Result<(f64, Vec<f64>)> {
    let mut v = vec![1.0; n];
    let mut lambda = f64::NAN;
    for iter in 1..=PERRON_MAX_ITER {
        let w = apply(&v);
        let norm = w.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        if !(norm.is_finite() && norm > 0.0) {
            return Err(Error::Internal(format!("power iteration produced norm {norm}")));
        }
        let next: Vec<f64> = w.iter().map(|x| x / norm).collect();
        let dv = next.iter().zip(&v).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        let dl = (norm - lambda).abs() / norm;
        v = next;
        lambda = norm;
        if iter > 1 && dl < PERRON_TOL && dv < 10.0 * PERRON_TOL {
            return Ok((lambda, v));
        }
    }
    Err(Error::NonConvergence {
        what: "power iteration".into(),
        iterations: PERRON_MAX_ITER,
    })
}

/// Leading eigendata of the transfer matrix of `potential`.
pub fn perron(potential: &FiniteMemoryFunction) -> Result<PerronData> {
    let m = TransferMatrix::new(potential)?;
    let n = m.dim();
    if m.state_depth == 0 {
        let scaled: f64 = m.weights.iter().sum();
        return Ok(PerronData {
            lambda: scaled * m.shift.exp(),
            log_lambda: scaled.ln() + m.shift,
            phi: vec![1.0],
            nu: vec![1.0],
            alphabet: m.alphabet,
            state_depth: 0,
        });
    }
    let (scaled, mut phi) = power_iterate(|v| m.mul_scaled(v), n)?;
    let (scaled_left, mut nu) = power_iterate(|v| m.mul_transpose_scaled(v), n)?;
    if ((scaled - scaled_left) / scaled).abs() > 1e-10 {
        return Err(Error::Internal(format!(
            "left and right eigenvalues disagree: {scaled} vs {scaled_left}"
        )));
    }
    let total: f64 = nu.iter().sum();
    nu.iter_mut().for_each(|x| *x /= total);
    let pairing: f64 = phi.iter().zip(&nu).map(|(a, b)| a * b).sum();
    phi.iter_mut().for_each(|x| *x /= pairing);
    Ok(PerronData {
        lambda: scaled * m.shift.exp(),
        log_lambda: scaled.ln() + m.shift,
        phi,
        nu,
        alphabet: m.alphabet,
        state_depth: m.state_depth,
    })
}

/// Topological pressure, `log λ`.
pub fn pressure(potential: &FiniteMemoryFunction) -> Result<f64> {
    Ok(perron(potential)?.log_lambda)
}

fn normalize_with(potential: &FiniteMemoryFunction, data: &PerronData) -> Result<FiniteMemoryFunction> {
    let depth = potential.depth().max(1);
    let log_phi = data.eigenfunction().ln()?;
    let log_phi_shift = log_phi.compose_shift()?;
    let lifted = potential.extend_depth(depth)?;
    lifted
        .add(&log_phi.extend_depth(depth)?)?
        .sub(&log_phi_shift)?
        .add_constant(-data.log_lambda)
        .extend_depth(depth)
}

/// `log J = A + log φ − log φ∘σ − log λ`, the normalized Jacobian
/// cohomologous to `A`.
pub fn normalize(potential: &FiniteMemoryFunction) -> Result<FiniteMemoryFunction> {
    let data = perron(potential)?;
    normalize_with(potential, &data)
}

/// The equilibrium (Gibbs) state of `potential`.
pub fn equilibrium(potential: &FiniteMemoryFunction) -> Result<EquilibriumState> {
    let data = perron(potential)?;
    let log_j = normalize_with(potential, &data)?;
    let mut base: Vec<f64> = data.phi.iter().zip(&data.nu).map(|(a, b)| a * b).collect();
    let total: f64 = base.iter().sum();
    base.iter_mut().for_each(|x| *x /= total);
    let measure = SuitableMeasure::from_parts_unchecked(log_j, base)?;
    Ok(EquilibriumState::from_measure_unchecked(measure))
}
