//! Randomized invariant suite behind `verify-all`.
//!
//! Every identity is checked over seeded trials; trial `i` of check `c` draws
//! from a ChaCha8 stream seeded with `seed + (c << 32 | i)`, so reports are
//! reproducible byte for byte.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};

use crate::error::Result;
use crate::info_geom::{
    asymptotic_variance, fisher_at_time_n, fisher_information, kl_fitted_curvature, pressure_derivatives,
    tangent_project, DEFAULT_STEP, GREEN_KUBO_TOL,
};
use crate::involution::{duality_check, entropy_production, flip_kl};
use crate::maxent::{
    energy_rate_decomposition, gibbs_equation, maxent_solve, pressure_gradient, susceptibility,
    thermo_operation_accounting, AffineGenerator, PotentialFamily, RateMode, DEFAULT_H_BETA, DEFAULT_H_V,
};
use crate::measure::{
    iterate_push, iterated_irn_closed_form, markov_invariant, stationary_vector, weak_convergence_trace,
    EquilibriumState, SuitableMeasure,
};
use crate::sampling::{random_equilibrium, random_jacobian, random_potential, random_suitable_measure};
use crate::second_law::{
    cg_entropy_production, ep_dyn, entropy_change, kl_along_orbit, rrty_margin, second_law_v1,
};
use crate::symbolic::FiniteMemoryFunction;
use crate::transfer::{normalization_residual, pressure};

/// One verified identity: the worst residual over all trials.
#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub check: String,
    pub identity: String,
    pub residual: f64,
    pub tolerance: f64,
    pub inputs: Value,
    pub pass: bool,
}

/// A quantity the suite reports without asserting it.
#[derive(Debug, Clone, Serialize)]
pub struct Finding {
    pub finding: String,
    pub value: Value,
}

#[derive(Debug, Clone, Serialize)]
pub struct SuiteReport {
    pub engine: String,
    pub version: String,
    pub seed: u64,
    pub checks: Vec<Check>,
    pub findings: Vec<Finding>,
    pub pass: bool,
}

struct Suite {
    seed: u64,
    ordinal: u64,
    checks: Vec<Check>,
    findings: Vec<Finding>,
}

impl Suite {
    fn rngs(&mut self, trials: usize) -> impl Iterator<Item = ChaCha8Rng> {
        self.ordinal += 1;
        let base = self.seed.wrapping_add(self.ordinal << 32);
        (0..trials as u64).map(move |i| ChaCha8Rng::seed_from_u64(base.wrapping_add(i)))
    }

    fn record(&mut self, check: &str, identity: &str, residual: f64, tolerance: f64, inputs: Value) {
        self.checks.push(Check {
            check: check.into(),
            identity: identity.into(),
            residual,
            tolerance,
            inputs,
            pass: residual.is_finite() && residual < tolerance,
        });
    }

    fn note(&mut self, finding: &str, value: Value) {
        self.findings.push(Finding {
            finding: finding.into(),
            value,
        });
    }
}

fn pick<R: Rng>(rng: &mut R, options: &[usize]) -> usize {
    options[rng.gen_range(0..options.len())]
}

fn pick_random_jacobian<R: Rng>(rng: &mut R, d: usize, depths: &[usize]) -> Result<FiniteMemoryFunction> {
    let k = pick(rng, depths);
    random_jacobian(rng, d, k)
}

fn pick_random_potential<R: Rng>(rng: &mut R, d: usize, depths: &[usize]) -> Result<FiniteMemoryFunction> {
    let k = pick(rng, depths);
    random_potential(rng, d, k)
}

fn pick_random_suitable_measure<R: Rng>(rng: &mut R, d: usize, depths: &[usize]) -> Result<SuitableMeasure> {
    let k = pick(rng, depths);
    random_suitable_measure(rng, d, k)
}

fn pick_random_equilibrium<R: Rng>(rng: &mut R, d: usize, depths: &[usize]) -> Result<EquilibriumState> {
    let k = pick(rng, depths);
    random_equilibrium(rng, d, k)
}

fn relative(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

fn random_stochastic<R: Rng>(rng: &mut R, d: usize) -> Vec<Vec<f64>> {
    let mut p = vec![vec![0.0; d]; d];
    for j in 0..d {
        let col: Vec<f64> = (0..d).map(|_| rng.gen_range(0.05..1.0)).collect();
        let s: f64 = col.iter().sum();
        for i in 0..d {
            p[i][j] = col[i] / s;
        }
    }
    p
}

fn symmetric_potential<R: Rng>(rng: &mut R, d: usize) -> Result<FiniteMemoryFunction> {
    let mut t = vec![0.0; d * d];
    for i in 0..d {
        for j in i..d {
            let v = rng.gen_range(-1.0..1.0);
            t[i * d + j] = v;
            t[j * d + i] = v;
        }
    }
    FiniteMemoryFunction::new(d, 2, t)
}

fn circulant() -> Vec<Vec<f64>> {
    let mut p = vec![vec![0.0; 3]; 3];
    for i in 0..3 {
        p[(i + 1) % 3][i] = 0.7;
        p[(i + 2) % 3][i] = 0.2;
        p[i][i] = 0.1;
    }
    p
}

fn jacobian_checks(s: &mut Suite) -> Result<()> {
    let (mut norm, mut pres) = (0.0f64, 0.0f64);
    for mut rng in s.rngs(100) {
        let d = pick(&mut rng, &[2, 3, 4]);
        let k = pick(&mut rng, &[1, 2, 3]);
        let j = random_jacobian(&mut rng, d, k)?;
        norm = norm.max(normalization_residual(&j)?);
        pres = pres.max(pressure(&j)?.abs());
    }
    let inputs = json!({"trials": 100, "alphabet": [2, 3, 4], "depth": [1, 2, 3]});
    s.record("jacobian-normalization", "sum over preimages of J equals one", norm, 1e-12, inputs.clone());
    s.record("jacobian-pressure", "pressure of a normalized potential vanishes", pres, 1e-12, inputs);
    Ok(())
}

fn kl_invariance_checks(s: &mut Suite) -> Result<()> {
    let mut cg = 0.0f64;
    for mut rng in s.rngs(100) {
        let d = pick(&mut rng, &[2, 3]);
        let j = pick_random_jacobian(&mut rng, d, &[1, 2])?;
        let mu1 = pick_random_suitable_measure(&mut rng, d, &[1, 2])?;
        let mu2 = pick_random_suitable_measure(&mut rng, d, &[1, 2])?;
        cg = cg.max(cg_entropy_production(&j, &mu1, &mu2)?.abs());
    }
    s.record(
        "kl-invariance",
        "KL divergence is invariant under the dual operator",
        cg,
        1e-10,
        json!({"trials": 100, "alphabet": [2, 3]}),
    );

    let mut dyn_ = 0.0f64;
    for mut rng in s.rngs(100) {
        let d = pick(&mut rng, &[2, 3]);
        let j = pick_random_jacobian(&mut rng, d, &[1, 2])?;
        let mu1 = pick_random_suitable_measure(&mut rng, d, &[1, 2])?;
        dyn_ = dyn_.max(ep_dyn(&j, &mu1)?.abs());
    }
    s.record(
        "kl-to-equilibrium-invariance",
        "KL divergence to the equilibrium of J is invariant under its dual operator",
        dyn_,
        1e-10,
        json!({"trials": 100, "alphabet": [2, 3]}),
    );
    Ok(())
}

fn orbit_checks(s: &mut Suite) -> Result<()> {
    let (mut closed, mut orbit) = (0.0f64, 0.0f64);
    for mut rng in s.rngs(100) {
        let d = pick(&mut rng, &[2, 3]);
        let j = pick_random_jacobian(&mut rng, d, &[1, 2])?;
        let mu0 = pick_random_suitable_measure(&mut rng, d, &[1, 2])?;
        let n = rng.gen_range(1..=4);
        let pushed = iterate_push(&j, &mu0, n)?;
        let formula = iterated_irn_closed_form(&j, mu0.log_irn(), n)?;
        let depth = formula.depth().max(pushed.depth());
        closed = closed.max(pushed.log_irn().extend_depth(depth)?.distance(&formula.extend_depth(depth)?)?);
        let (kl, rhs) = kl_along_orbit(&j, &mu0, n)?;
        orbit = orbit.max((kl - rhs).abs());
    }
    let inputs = json!({"trials": 100, "alphabet": [2, 3], "n": [1, 4]});
    s.record("iterated-irn-closed-form", "IRN after n pushes in closed form", closed, 1e-12, inputs.clone());
    s.record("kl-along-orbit", "KL along the push orbit as an integral of IRN differences", orbit, 1e-10, inputs);
    Ok(())
}

fn second_law_checks(s: &mut Suite) -> Result<()> {
    let (mut mono, mut pres, mut ac, mut ident) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    let (mut strict, mut eligible) = (0usize, 0usize);
    let (mut decreases, mut worst_decrease) = (0usize, 0.0f64);
    for mut rng in s.rngs(100) {
        let d = pick(&mut rng, &[2, 3]);
        let j = pick_random_jacobian(&mut rng, d, &[1, 2])?;
        let invariant = rng.gen_bool(0.5);
        let mu1 = if invariant {
            pick_random_equilibrium(&mut rng, d, &[1, 2])?.into_measure()
        } else {
            pick_random_suitable_measure(&mut rng, d, &[1, 2])?
        };
        let r = second_law_v1(&j, &mu1)?;
        pres = pres.max(r.pressure_log_j2.abs());
        ac = ac.max(r.ac_residual);
        ident = ident.max(r.h3_identity_residual);
        if invariant {
            mono = mono.max(r.h1 - r.h3);
            let depth = j.depth().max(mu1.depth());
            if j.extend_depth(depth)?.distance(&mu1.log_irn().extend_depth(depth)?)? >= 1e-3 {
                eligible += 1;
                if r.h3 - r.h1 > 1e-8 {
                    strict += 1;
                }
            }
        } else if r.h1 - r.h3 > 1e-12 {
            decreases += 1;
            worst_decrease = worst_decrease.max(r.h1 - r.h3);
        }
    }
    let inputs = json!({"trials": 100, "alphabet": [2, 3]});
    s.record(
        "entropy-monotone-invariant",
        "entropy of the re-equilibrated push does not drop below an invariant input",
        mono.max(0.0),
        1e-12,
        inputs.clone(),
    );
    s.record("pushed-irn-pressure", "pressure of the pushed IRN vanishes", pres, 1e-10, inputs.clone());
    s.record("absolute-continuity", "equilibrium of the pushed IRN has density phi", ac, 1e-10, inputs.clone());
    s.record("entropy-identity", "entropy equals minus the integral of the IRN", ident, 1e-10, inputs);
    s.note(
        "strict-increase-invariant-input",
        json!({"eligible_trials": eligible, "strict_increase": strict, "threshold": 1e-8}),
    );
    s.note(
        "entropy-decrease-non-invariant-input",
        json!({"count": decreases, "worst": worst_decrease}),
    );
    Ok(())
}

fn entropy_condition_checks(s: &mut Suite) -> Result<()> {
    let mut implication = 0.0f64;
    let (mut positive, mut witness) = (0usize, Value::Null);
    for mut rng in s.rngs(100) {
        let d = pick(&mut rng, &[2, 3]);
        let j = pick_random_jacobian(&mut rng, d, &[1, 2])?;
        let mu1 = pick_random_suitable_measure(&mut rng, d, &[1, 2])?;
        let margin = rrty_margin(&j, &mu1)?;
        let change = entropy_change(&j, &mu1)?;
        if margin >= 0.0 {
            positive += 1;
            implication = implication.max(-change);
            if witness.is_null() {
                witness = json!({"margin": margin, "entropy_change": change, "alphabet": d});
            }
        }
    }
    s.record(
        "entropy-increase-condition",
        "nonnegative margin implies entropy does not decrease",
        implication.max(0.0),
        1e-12,
        json!({"trials": 100, "alphabet": [2, 3]}),
    );
    s.note("entropy-increase-condition-witnesses", json!({"trials": 100, "count": positive, "first": witness}));

    let sym = markov_invariant(&[vec![0.7, 0.3], vec![0.3, 0.7]])?;
    let bern = SuitableMeasure::bernoulli(&[0.9, 0.1])?;
    s.note(
        "entropy-increase-condition-example",
        json!({
            "margin": rrty_margin(sym.log_jacobian(), &bern)?,
            "entropy_change": entropy_change(sym.log_jacobian(), &bern)?,
        }),
    );
    Ok(())
}

fn markov_checks(s: &mut Suite) -> Result<()> {
    let (mut ent, mut cyl) = (0.0f64, 0.0f64);
    for mut rng in s.rngs(100) {
        let d = pick(&mut rng, &[2, 3, 4]);
        let p = random_stochastic(&mut rng, d);
        let pi = stationary_vector(&p)?;
        let mu = markov_invariant(&p)?;
        let mut h = 0.0;
        for i in 0..d {
            for j in 0..d {
                h -= pi[i] * p[j][i] * p[j][i].ln();
            }
        }
        ent = ent.max((mu.entropy()? - h).abs());
        let w = mu.weights(2)?;
        for i in 0..d {
            for j in 0..d {
                cyl = cyl.max((w[i * d + j] - p[j][i] * pi[i]).abs());
            }
        }
    }
    let inputs = json!({"trials": 100, "alphabet": [2, 3, 4]});
    s.record("markov-entropy", "Markov entropy closed form", ent, 1e-12, inputs.clone());
    s.record("markov-cylinders", "two-cylinder weights equal transition times stationary law", cyl, 1e-12, inputs);
    Ok(())
}

fn info_geom_checks(s: &mut Suite) -> Result<()> {
    let (mut fv, mut curv, mut three_way, mut kl_curv, mut finite_n) = (0.0f64, 0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for mut rng in s.rngs(20) {
        let d = pick(&mut rng, &[2, 3]);
        let mu = pick_random_equilibrium(&mut rng, d, &[1, 2])?;
        let eta = pick_random_potential(&mut rng, d, &[1, 2])?;
        let t = tangent_project(&mu, &eta)?;
        let fisher = fisher_information(&t)?;
        let var = asymptotic_variance(&mu, t.xi(), GREEN_KUBO_TOL)?;
        let (_, second) = pressure_derivatives(mu.log_jacobian(), t.xi(), DEFAULT_STEP)?;
        let scale = t.xi().sup_norm().powi(3).max(1.0);
        fv = fv.max(relative(fisher, var));
        curv = curv.max((second - var).abs() / scale);
        three_way = three_way.max(relative(fisher, var)).max(relative(second, var));
        kl_curv = kl_curv.max(relative(kl_fitted_curvature(&mu, &mu, t.xi())?, fisher));
        finite_n = finite_n.max(relative(fisher_at_time_n(&mu, t.xi(), 8, DEFAULT_STEP)? / 8.0, var));
    }
    let inputs = json!({"trials": 20, "alphabet": [2, 3], "step": DEFAULT_STEP});
    s.record(
        "fisher-variance",
        "Fisher information of a tangent vector equals its asymptotic variance",
        fv,
        1e-10,
        inputs.clone(),
    );
    s.record(
        "pressure-curvature",
        "second derivative of pressure equals the asymptotic variance (error over max(1, sup|xi|^3))",
        curv,
        10.0 * DEFAULT_STEP * DEFAULT_STEP,
        inputs.clone(),
    );
    s.record("kl-curvature", "curvature of KL along a tangent equals Fisher information", kl_curv, 1e-2, inputs);
    s.note("fisher-three-way-random", json!({"trials": 20, "worst_relative_error": three_way}));
    s.note("fisher-finite-time-random", json!({"n": 8, "worst_relative_error": finite_n, "trials": 20}));

    let mu = crate::transfer::equilibrium(&FiniteMemoryFunction::constant(2, 0.0)?)?;
    let xi = FiniteMemoryFunction::new(2, 1, vec![1.0, -1.0])?;
    let t = tangent_project(&mu, &xi)?;
    let (_, second) = pressure_derivatives(mu.log_jacobian(), t.xi(), DEFAULT_STEP)?;
    let worst = [fisher_information(&t)?, asymptotic_variance(&mu, t.xi(), GREEN_KUBO_TOL)?, second]
        .iter()
        .map(|v| (v - 1.0).abs())
        .fold(0.0, f64::max);
    let per_step = fisher_at_time_n(&mu, t.xi(), 8, DEFAULT_STEP)? / 8.0;
    s.record(
        "fisher-finite-time",
        "finite-time Fisher information per step approaches the asymptotic variance",
        relative(per_step, asymptotic_variance(&mu, t.xi(), GREEN_KUBO_TOL)?),
        0.25,
        json!({"alphabet": 2, "xi": [1.0, -1.0], "n": 8}),
    );
    s.record(
        "fisher-max-entropy",
        "Fisher information of the sign observable at maximal entropy is one",
        worst,
        1e-4,
        json!({"alphabet": 2, "xi": [1.0, -1.0]}),
    );
    Ok(())
}

const FAMILY_MARGIN: f64 = 1e-2;

/// Two random constraints on three symbols whose covariance at `z = 0` has
/// smallest eigenvalue at least [`FAMILY_MARGIN`].
fn random_family<R: Rng>(rng: &mut R) -> Result<PotentialFamily> {
    loop {
        let constraints = (0..2)
            .map(|_| pick_random_potential(rng, 3, &[1, 2]))
            .collect::<Result<Vec<_>>>()?;
        let family = PotentialFamily::new_unchecked(constraints, None)?;
        if family.hypothesis_a_margin(&[0.0, 0.0])? >= FAMILY_MARGIN {
            return Ok(family);
        }
    }
}

fn maxent_checks(s: &mut Suite) -> Result<()> {
    let mut round = 0.0f64;
    for mut rng in s.rngs(50) {
        let family = random_family(&mut rng)?;
        let z: Vec<f64> = (0..family.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let x = pressure_gradient(&family, &z)?;
        let back = maxent_solve(&family, &x, 1e-12)?;
        round = round.max(z.iter().zip(&back.z).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max));
    }
    s.record(
        "maxent-round-trip",
        "multipliers recovered from their constraint values",
        round,
        1e-8,
        json!({"trials": 50, "alphabet": 3, "constraints": 2, "min_margin": FAMILY_MARGIN}),
    );

    let mut dual = 0.0f64;
    for mut rng in s.rngs(5) {
        let family = random_family(&mut rng)?;
        let z: Vec<f64> = (0..family.len()).map(|_| rng.gen_range(-0.5..0.5)).collect();
        dual = dual.max(susceptibility(&family, &z, DEFAULT_STEP)?.duality_residual);
    }
    s.record(
        "susceptibility-duality",
        "entropy susceptibility is minus the inverse pressure susceptibility",
        dual,
        1e-4,
        json!({"trials": 5, "alphabet": 3, "constraints": 2, "min_margin": FAMILY_MARGIN, "step": DEFAULT_STEP}),
    );

    let logit = PotentialFamily::new(vec![FiniteMemoryFunction::new(2, 1, vec![0.0, 1.0])?], None)?;
    let sol = maxent_solve(&logit, &[0.3], 1e-12)?;
    s.record(
        "maxent-logit",
        "two-state multiplier is the log odds",
        (sol.z[0] - (0.3f64 / 0.7).ln()).abs(),
        1e-10,
        json!({"target": 0.3}),
    );
    let sp = susceptibility(&logit, &[0.0], DEFAULT_STEP)?;
    s.record(
        "susceptibility-indicator",
        "pressure susceptibility of an indicator at zero is one quarter",
        (sp.sp[0][0] - 0.25).abs(),
        1e-6,
        json!({"z": [0.0], "step": DEFAULT_STEP}),
    );
    Ok(())
}

fn gibbs_checks(s: &mut Suite) -> Result<()> {
    let h = FiniteMemoryFunction::new(2, 1, vec![0.0, 1.0])?;
    let grid: Vec<f64> = (0..20).map(|i| 0.25 + 0.25 * i as f64).collect();
    let rows = gibbs_equation(&h, &grid, DEFAULT_H_BETA)?;
    let worst = rows
        .iter()
        .map(|r| r.dh_de.map_or(f64::INFINITY, |v| (v - r.beta).abs()))
        .fold(0.0, f64::max);
    s.record(
        "gibbs-relation",
        "derivative of entropy in energy equals inverse temperature",
        worst,
        1e-3,
        json!({"energy": [0.0, 1.0], "beta_grid": grid, "h_beta": DEFAULT_H_BETA}),
    );
    Ok(())
}

fn first_law_checks(s: &mut Suite) -> Result<()> {
    let mut op = 0.0f64;
    let (mut negative, mut positive) = (0usize, 0usize);
    for mut rng in s.rngs(100) {
        let d = pick(&mut rng, &[2, 3]);
        let j1 = pick_random_jacobian(&mut rng, d, &[1, 2])?;
        let j2 = pick_random_jacobian(&mut rng, d, &[1, 2])?;
        let mu1 = pick_random_suitable_measure(&mut rng, d, &[1, 2])?;
        let acc = thermo_operation_accounting(&j1, &j2, &mu1)?;
        op = op.max(acc.residual);
        if acc.d_w < 0.0 {
            negative += 1;
        } else {
            positive += 1;
        }
    }
    s.record(
        "first-law-operation",
        "work plus heat equals internal energy change",
        op,
        1e-12,
        json!({"trials": 100, "alphabet": [2, 3]}),
    );
    s.note("work-sign", json!({"trials": 100, "negative": negative, "nonnegative": positive}));

    let mut rates = 0.0f64;
    for mut rng in s.rngs(10) {
        let base = loop {
            let b = random_potential(&mut rng, 2, 1)?;
            if (b.values()[0] - b.values()[1]).abs() >= 0.2 {
                break b;
            }
        };
        let direction = random_potential(&mut rng, 2, 1)?;
        let family = PotentialFamily::new(
            vec![base.clone()],
            Some(AffineGenerator {
                base: vec![base],
                direction: vec![direction],
            }),
        )?;
        let mode = if rng.gen_bool(0.5) {
            RateMode::FixedMultipliers(vec![rng.gen_range(-1.0..1.0)])
        } else {
            let at = family.at(0.0)?;
            let c = at.constraints()[0].values();
            let (lo, hi) = (c[0].min(c[1]), c[0].max(c[1]));
            RateMode::FixedConstraints(vec![lo + (hi - lo) * rng.gen_range(0.3..0.7)])
        };
        rates = rates.max(energy_rate_decomposition(&family, 0, &mode, 0.0, DEFAULT_H_V)?.residual);
    }
    s.record(
        "first-law-rates",
        "work plus heat rates equal the internal energy rate",
        rates,
        1e-8,
        json!({"trials": 10, "alphabet": 2, "min_spread": 0.2, "step": DEFAULT_H_V}),
    );
    Ok(())
}

fn entropy_production_checks(s: &mut Suite) -> Result<()> {
    let (mut sym, mut two, mut flip) = (0.0f64, 0.0f64, 0.0f64);
    for mut rng in s.rngs(50) {
        let d = pick(&mut rng, &[2, 3, 4]);
        sym = sym.max(entropy_production(&symmetric_potential(&mut rng, d)?)?.abs());
        let chain = markov_invariant(&random_stochastic(&mut rng, 2))?;
        two = two.max(entropy_production(chain.log_jacobian())?.abs());
        let d = pick(&mut rng, &[2, 3]);
        let a = random_potential(&mut rng, d, 2)?;
        flip = flip.max((entropy_production(&a)? - flip_kl(&a)?).abs());
    }
    let inputs = json!({"trials": 50});
    s.record("production-symmetric", "symmetric potentials produce no entropy", sym, 1e-12, inputs.clone());
    s.record("production-two-state", "two-state chains produce no entropy", two, 1e-12, inputs.clone());
    s.record("production-flip-kl", "entropy production equals KL to the time reversal", flip, 1e-10, inputs);
    let c = markov_invariant(&circulant())?;
    s.record(
        "production-circulant",
        "circulant chain production closed form",
        (entropy_production(c.log_jacobian())? - 0.5 * 3.5f64.ln()).abs(),
        1e-9,
        json!({"matrix": circulant()}),
    );
    Ok(())
}

fn duality_checks(s: &mut Suite) -> Result<()> {
    let mut worst = 0.0f64;
    for mut rng in s.rngs(50) {
        let d = pick(&mut rng, &[2, 3]);
        worst = worst.max(duality_check(&random_potential(&mut rng, d, 2)?)?);
    }
    s.record(
        "kernel-duality",
        "dual eigenmeasure integrated against the kernel is proportional to the eigenfunction",
        worst,
        1e-10,
        json!({"trials": 50, "alphabet": [2, 3], "depth": 2}),
    );
    Ok(())
}

fn convergence_checks(s: &mut Suite) -> Result<()> {
    let (mut rise, mut drift, mut sup_ratio) = (0.0f64, 0.0f64, 0.0f64);
    let (mut steps, mut strict) = (0usize, 0usize);
    for mut rng in s.rngs(20) {
        let d = pick(&mut rng, &[2, 3]);
        let j = random_jacobian(&mut rng, d, 2)?;
        let mu0 = pick_random_suitable_measure(&mut rng, d, &[1, 2])?;
        let rows = weak_convergence_trace(&j, &mu0, 5, 2)?;
        for w in rows.windows(2) {
            rise = rise.max(w[1].total_variation - w[0].total_variation);
            sup_ratio = sup_ratio.max(w[1].deviation / w[0].deviation);
            drift = drift.max((w[1].kl - rows[0].kl).abs());
            steps += 1;
            if w[1].total_variation < w[0].total_variation {
                strict += 1;
            }
        }
    }
    let inputs = json!({"trials": 20, "alphabet": [2, 3], "n_max": 5, "probe_depth": 2});
    s.record(
        "weak-convergence",
        "total variation to equilibrium on probe cylinders never grows along the push orbit",
        rise.max(0.0),
        1e-12,
        inputs.clone(),
    );
    s.record("kl-constant-on-orbit", "KL to equilibrium is constant along the push orbit", drift, 1e-10, inputs);
    s.note(
        "weak-convergence-steps",
        json!({"steps": steps, "strict_total_variation_decrease": strict, "worst_max_deviation_ratio": sup_ratio}),
    );

    let sym = markov_invariant(&[vec![0.7, 0.3], vec![0.3, 0.7]])?;
    let bern = SuitableMeasure::bernoulli(&[0.9, 0.1])?;
    let rows = weak_convergence_trace(sym.log_jacobian(), &bern, 5, 2)?;
    let ratio = rows.windows(2).map(|w| w[1].deviation / w[0].deviation).fold(0.0, f64::max);
    s.record(
        "weak-convergence-example",
        "max cylinder deviation shrinks at every step for Bernoulli(.9,.1) under the symmetric chain",
        ratio,
        1.0,
        json!({"matrix": [[0.7, 0.3], [0.3, 0.7]], "initial": [0.9, 0.1], "n_max": 5, "probe_depth": 2}),
    );
    Ok(())
}

/// Runs every check with trial seeds derived from `seed`.
pub fn run_suite(seed: u64) -> Result<SuiteReport> {
    let mut s = Suite {
        seed,
        ordinal: 0,
        checks: Vec::new(),
        findings: Vec::new(),
    };
    jacobian_checks(&mut s)?;
    kl_invariance_checks(&mut s)?;
    orbit_checks(&mut s)?;
    second_law_checks(&mut s)?;
    entropy_condition_checks(&mut s)?;
    markov_checks(&mut s)?;
    info_geom_checks(&mut s)?;
    maxent_checks(&mut s)?;
    gibbs_checks(&mut s)?;
    first_law_checks(&mut s)?;
    entropy_production_checks(&mut s)?;
    duality_checks(&mut s)?;
    convergence_checks(&mut s)?;
    let pass = s.checks.iter().all(|c| c.pass);
    Ok(SuiteReport {
        engine: "thermoform".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        seed,
        checks: s.checks,
        findings: s.findings,
        pass,
    })
}
