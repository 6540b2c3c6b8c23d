//! Gromov-Wasserstein discrepancy by proximal-point iterations.
//!
//! Each outer step linearizes the squared-loss objective at the current plan
//! `T`, forms the proximal kernel `T ⊙ exp(-C/β)` with
//! `C = (A⊙A)μ𝟙ᵀ + 𝟙((B⊙B)ν)ᵀ - 2 A T Bᵀ`, and rebalances it with `S`
//! Sinkhorn sweeps. The plan that comes back is always projected exactly onto
//! the coupling polytope, so callers can rely on its marginals.

use alloc::vec;
use alloc::vec::Vec;
use core::sync::atomic::{AtomicUsize, Ordering};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::math::{exp, ln, log_sum_exp};
use crate::{Error, Matrix, NodeMeasure, Result, StepGraphon};

/// Marginal tolerance every returned plan satisfies.
pub const MARGINAL_TOL: f64 = 1e-6;

/// Row/column shifted costs above `STABILIZE_FACTOR * beta` switch the inner
/// Sinkhorn loop to the log domain.
const STABILIZE_FACTOR: f64 = 30.0;

/// Rounding noise allowed when comparing successive outer-step costs.
const DESCENT_SLACK: f64 = 1e-12;

static PLANS_CHECKED: AtomicUsize = AtomicUsize::new(0);
static PLANS_INFEASIBLE: AtomicUsize = AtomicUsize::new(0);

/// Process-wide count of `(plans checked, plans violating MARGINAL_TOL)` for
/// every plan produced by [`solve_gw`].
pub fn feasibility_audit() -> (usize, usize) {
    (PLANS_CHECKED.load(Ordering::Relaxed), PLANS_INFEASIBLE.load(Ordering::Relaxed))
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct GwConfig {
    /// Exponent of the pairwise loss `|a - b|^p`.
    pub order: u32,
    /// Weight of the KL proximal term, relative to the product of the value
    /// ranges of the two inputs.
    pub beta: f64,
    pub outer_iters: usize,
    pub inner_iters: usize,
    /// Stop once the Frobenius change of the plan drops below this.
    pub tol: f64,
    /// Relative amplitude of the random perturbation applied to the product
    /// coupling before the first step; `0` starts from the product itself.
    pub init_jitter: f64,
    pub seed: u64,
}

impl Default for GwConfig {
    fn default() -> Self {
        Self { order: 2, beta: 0.2, outer_iters: 100, inner_iters: 10, tol: 1e-6, init_jitter: 0.1, seed: 0 }
    }
}

impl GwConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.beta > 0.0) || !self.beta.is_finite() {
            return Err(Error::Config(alloc::format!("beta must be positive, got {}", self.beta)));
        }
        if self.outer_iters == 0 || self.inner_iters == 0 {
            return Err(Error::Config("outer and inner iteration counts must be at least 1".into()));
        }
        if self.order == 0 || self.order % 2 != 0 {
            return Err(Error::Config(alloc::format!("loss order must be a positive even integer, got {}", self.order)));
        }
        if !(0.0..1.0).contains(&self.init_jitter) {
            return Err(Error::Config(alloc::format!("init jitter must lie in [0, 1), got {}", self.init_jitter)));
        }
        if !(self.tol >= 0.0) {
            return Err(Error::Config("tol must be nonnegative".into()));
        }
        Ok(())
    }
}

/// A nonnegative coupling whose marginals match `row_marginal` and
/// `col_marginal` within [`MARGINAL_TOL`].
#[derive(Debug, Clone, PartialEq)]
pub struct TransportPlan {
    matrix: Matrix,
    row_marginal: NodeMeasure,
    col_marginal: NodeMeasure,
}

impl TransportPlan {
    pub fn new(matrix: Matrix, row_marginal: NodeMeasure, col_marginal: NodeMeasure) -> Result<Self> {
        if matrix.rows() != row_marginal.len() || matrix.cols() != col_marginal.len() {
            return Err(Error::Dimension(alloc::format!(
                "{}x{} plan for marginals of length {} and {}",
                matrix.rows(),
                matrix.cols(),
                row_marginal.len(),
                col_marginal.len()
            )));
        }
        if matrix.as_slice().iter().any(|v| !(*v >= 0.0)) {
            return Err(Error::InvalidMeasure("plan has a negative or NaN entry".into()));
        }
        let plan = Self { matrix, row_marginal, col_marginal };
        let error = plan.marginal_error();
        if error > MARGINAL_TOL {
            return Err(Error::Infeasible { error });
        }
        Ok(plan)
    }

    /// The independent coupling `μνᵀ`.
    pub fn product(row_marginal: &NodeMeasure, col_marginal: &NodeMeasure) -> Self {
        Self {
            matrix: Matrix::outer(row_marginal.weights(), col_marginal.weights()),
            row_marginal: row_marginal.clone(),
            col_marginal: col_marginal.clone(),
        }
    }

    pub fn matrix(&self) -> &Matrix {
        &self.matrix
    }

    pub fn row_marginal(&self) -> &NodeMeasure {
        &self.row_marginal
    }

    pub fn col_marginal(&self) -> &NodeMeasure {
        &self.col_marginal
    }

    /// Largest absolute deviation of a row or column sum from its target.
    pub fn marginal_error(&self) -> f64 {
        marginal_error(&self.matrix, self.row_marginal.weights(), self.col_marginal.weights())
    }

    pub fn transpose(&self) -> Self {
        Self {
            matrix: self.matrix.transpose(),
            row_marginal: self.col_marginal.clone(),
            col_marginal: self.row_marginal.clone(),
        }
    }

    pub fn into_matrix(self) -> Matrix {
        self.matrix
    }
}

fn marginal_error(t: &Matrix, mu: &[f64], nu: &[f64]) -> f64 {
    let rows = t.row_sums().iter().zip(mu).fold(0.0f64, |m, (s, w)| m.max((s - w).abs()));
    let cols = t.col_sums().iter().zip(nu).fold(0.0f64, |m, (s, w)| m.max((s - w).abs()));
    rows.max(cols)
}

fn binomial(n: u32, k: u32) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// `Σ_{ijkl} (a_ik - b_jl)^p T_ij T_kl` for the plan's matrix.
pub fn gw_cost(a: &Matrix, b: &Matrix, plan: &TransportPlan, p: u32) -> Result<f64> {
    gw_cost_matrix(a, b, plan.matrix(), p)
}

/// [`gw_cost`] for any nonnegative `T`, evaluated through the binomial
/// expansion `Σ_m C(p,m) (-1)^{p-m} ⟨A^{∘m}, T B^{∘(p-m)} Tᵀ⟩`. The
/// `m = 0` and `m = p` terms collapse to the row and column sums of `T`.
pub fn gw_cost_matrix(a: &Matrix, b: &Matrix, t: &Matrix, p: u32) -> Result<f64> {
    if !a.is_square() || !b.is_square() || t.rows() != a.rows() || t.cols() != b.rows() {
        return Err(Error::Dimension(alloc::format!(
            "a is {}x{}, b is {}x{}, plan is {}x{}",
            a.rows(),
            a.cols(),
            b.rows(),
            b.cols(),
            t.rows(),
            t.cols()
        )));
    }
    if p == 0 || p % 2 != 0 {
        return Err(Error::Config(alloc::format!("loss order must be a positive even integer, got {p}")));
    }
    let r = t.row_sums();
    let c = t.col_sums();
    let quad = |m: &Matrix, w: &[f64]| -> f64 {
        let mw = m.mat_vec(w);
        mw.iter().zip(w).map(|(x, y)| x * y).sum()
    };
    let mut total = 0.0;
    for m in 0..=p {
        let coeff = binomial(p, m) * if (p - m) % 2 == 0 { 1.0 } else { -1.0 };
        let term = if m == 0 {
            quad(&b.map(|v| pow(v, p)), &c)
        } else if m == p {
            quad(&a.map(|v| pow(v, p)), &r)
        } else {
            let am = a.map(|v| pow(v, m));
            let bq = b.map(|v| pow(v, p - m));
            let tb = t.matmul(&bq)?;
            // ⟨A^m, T B^q Tᵀ⟩ = Σ_ik A^m_ik (TB^q)_i · T_k
            let mut s = 0.0;
            for i in 0..t.rows() {
                let tbi = tb.row(i);
                for k in 0..t.rows() {
                    let aik = am[(i, k)];
                    if aik != 0.0 {
                        s += aik * tbi.iter().zip(t.row(k)).map(|(x, y)| x * y).sum::<f64>();
                    }
                }
            }
            s
        };
        total += coeff * term;
    }
    Ok(total.max(0.0))
}

fn pow(v: f64, e: u32) -> f64 {
    (0..e).fold(1.0, |acc, _| acc * v)
}

/// Result of [`solve_gw`].
#[derive(Debug, Clone)]
pub struct GwSolution {
    pub plan: TransportPlan,
    pub cost: f64,
    /// Whether the plan change fell below `tol` before `outer_iters` ran out.
    pub converged: bool,
    pub iterations: usize,
    /// Cost of the starting plan followed by the cost after each outer step.
    pub history: Vec<f64>,
}

/// Proximal-point Gromov-Wasserstein between `a` (with node measure `mu`) and
/// `b` (with `nu`) for the squared loss.
///
/// Non-convergence is reported through [`GwSolution::converged`]; the best
/// iterate seen is returned either way.
pub fn solve_gw(a: &Matrix, mu: &NodeMeasure, b: &Matrix, nu: &NodeMeasure, cfg: &GwConfig) -> Result<GwSolution> {
    solve_gw_from(a, mu, b, nu, None, cfg)
}

/// [`solve_gw`] started from `init` (rebalanced onto the couplings of `mu` and
/// `nu`) instead of the jittered product coupling.
pub fn solve_gw_from(
    a: &Matrix,
    mu: &NodeMeasure,
    b: &Matrix,
    nu: &NodeMeasure,
    init: Option<&Matrix>,
    cfg: &GwConfig,
) -> Result<GwSolution> {
    cfg.validate()?;
    if cfg.order != 2 {
        return Err(Error::Config(alloc::format!("solver supports the squared loss only, got order {}", cfg.order)));
    }
    if !a.is_square() || !b.is_square() || a.rows() != mu.len() || b.rows() != nu.len() {
        return Err(Error::Dimension(alloc::format!(
            "a is {}x{} with {} weights, b is {}x{} with {} weights",
            a.rows(),
            a.cols(),
            mu.len(),
            b.rows(),
            b.cols(),
            nu.len()
        )));
    }
    if a.max_asymmetry() > 1e-9 {
        return Err(Error::Asymmetric("source"));
    }
    if b.max_asymmetry() > 1e-9 {
        return Err(Error::Asymmetric("target"));
    }
    let (n, d) = (a.rows(), b.rows());
    let (mw, nw) = (mu.weights(), nu.weights());

    // Plan-independent part of the linearized cost.
    let ca = a.map(|v| v * v).mat_vec(mw);
    let cb = b.map(|v| v * v).mat_vec(nw);
    let objective = Squared::new(a, b);

    let mut t = match init {
        Some(t0) => {
            if t0.rows() != n || t0.cols() != d {
                return Err(Error::Dimension(alloc::format!(
                    "initial plan is {}x{}, expected {n}x{d}",
                    t0.rows(),
                    t0.cols()
                )));
            }
            if t0.as_slice().iter().any(|&v| !(v >= 0.0) || !v.is_finite()) || t0.sum() <= 0.0 {
                return Err(Error::InvalidMeasure("initial plan must be finite, nonnegative and nonzero".into()));
            }
            project_onto_couplings(t0, mw, nw)
        }
        None => initial_plan(mw, nw, cfg),
    };
    let (cost0, mut atb) = objective.eval(&t)?;
    let mut history = vec![cost0];
    let mut best = (history[0], t.clone());
    let mut converged = false;
    let mut iterations = 0;

    // The objective scales with the product of the value ranges, so beta is
    // taken relative to it. Doubling beta enough times always restores descent
    // for an exact proximal step; past the cap the step is dropped instead.
    let spread = value_range(a) * value_range(b);
    let beta_base = if spread > 1e-12 { cfg.beta * spread } else { cfg.beta };
    let beta_cap = beta_base * 1024.0;
    let mut current_cost = history[0];
    for _ in 0..cfg.outer_iters {
        iterations += 1;
        let mut cost = Matrix::from_fn(n, d, |i, j| ca[i] + cb[j] - 2.0 * atb[(i, j)]);
        shift_rows_and_cols(&mut cost);
        let mut beta = beta_base;
        let step = loop {
            let next = proximal_step(&t, &cost, beta, mw, nw, cfg.inner_iters)?;
            let (c, next_atb) = objective.eval(&next)?;
            if !c.is_finite() {
                return Err(Error::NonFinite("transport cost".into()));
            }
            if c <= current_cost + DESCENT_SLACK {
                break Some((next, c, next_atb));
            }
            if beta >= beta_cap {
                break None;
            }
            beta *= 2.0;
        };
        let Some((next, c, next_atb)) = step else {
            log::debug!("no descent step after {iterations} outer iterations; stopping");
            converged = true;
            break;
        };
        let change = next.zip_map(&t, |x, y| x - y).frobenius();
        t = next;
        atb = next_atb;
        current_cost = c;
        history.push(c);
        if c < best.0 {
            best = (c, t.clone());
        }
        if change < cfg.tol {
            converged = true;
            break;
        }
    }
    if !converged {
        log::debug!("gw solver stopped after {iterations} outer iterations without meeting tol {:e}", cfg.tol);
    }

    let plan_matrix = project_onto_couplings(&best.1, mw, nw);
    let error = marginal_error(&plan_matrix, mw, nw);
    PLANS_CHECKED.fetch_add(1, Ordering::Relaxed);
    if error > MARGINAL_TOL {
        PLANS_INFEASIBLE.fetch_add(1, Ordering::Relaxed);
        return Err(Error::Infeasible { error });
    }
    let cost = gw_cost_matrix(a, b, &plan_matrix, 2)?;
    let plan = TransportPlan { matrix: plan_matrix, row_marginal: mu.clone(), col_marginal: nu.clone() };
    Ok(GwSolution { plan, cost, converged, iterations, history })
}

/// Squared-loss objective with the Hadamard squares cached. `eval` also
/// returns `A T B`, which the next linearized cost reuses.
struct Squared<'m> {
    a: &'m Matrix,
    b: &'m Matrix,
    a2: Matrix,
    b2: Matrix,
}

impl<'m> Squared<'m> {
    fn new(a: &'m Matrix, b: &'m Matrix) -> Self {
        Self { a, b, a2: a.map(|v| v * v), b2: b.map(|v| v * v) }
    }

    fn eval(&self, t: &Matrix) -> Result<(f64, Matrix)> {
        let atb = self.a.matmul(t)?.matmul(self.b)?;
        let quad = |m: &Matrix, w: &[f64]| -> f64 { m.mat_vec(w).iter().zip(w).map(|(x, y)| x * y).sum() };
        let cost = quad(&self.a2, &t.row_sums()) + quad(&self.b2, &t.col_sums()) - 2.0 * t.dot(&atb);
        Ok((cost.max(0.0), atb))
    }
}

/// The product coupling, optionally perturbed by a seeded multiplicative
/// jitter and rebalanced. Without the jitter the product coupling is a
/// stationary point whenever both inputs have constant degree profiles.
fn initial_plan(mu: &[f64], nu: &[f64], cfg: &GwConfig) -> Matrix {
    let t = Matrix::outer(mu, nu);
    if cfg.init_jitter == 0.0 {
        return t;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut jittered = t;
    for v in jittered.as_mut_slice() {
        *v *= 1.0 + cfg.init_jitter * (2.0 * rng.random::<f64>() - 1.0);
    }
    project_onto_couplings(&jittered, mu, nu)
}

fn value_range(m: &Matrix) -> f64 {
    let (lo, hi) = m.as_slice().iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    hi - lo
}

/// Discrepancy between two step graphons under their own block measures.
pub fn gw_discrepancy(w1: &StepGraphon, w2: &StepGraphon, cfg: &GwConfig) -> Result<f64> {
    solve_gw(w1.values(), w1.measure(), w2.values(), w2.measure(), cfg).map(|s| s.cost)
}

/// One proximal update: balance `T ⊙ exp(-C/β)` and round it onto the polytope.
fn proximal_step(t: &Matrix, cost: &Matrix, beta: f64, mu: &[f64], nu: &[f64], iters: usize) -> Result<Matrix> {
    let next = if cost.max_abs() > STABILIZE_FACTOR * beta {
        let log_kernel = t.zip_map(cost, |tij, c| if tij > 0.0 { ln(tij) - c / beta } else { f64::NEG_INFINITY });
        sinkhorn_log(&log_kernel, mu, nu, iters)
    } else {
        sinkhorn(&t.zip_map(cost, |tij, c| tij * exp(-c / beta)), mu, nu, iters)
    };
    if !next.is_finite() {
        return Err(Error::NonFinite("transport plan".into()));
    }
    Ok(round_onto_couplings(next, mu, nu))
}

/// Subtracting a constant from a row or column only rescales the Sinkhorn
/// potentials, so this leaves the balanced kernel unchanged.
fn shift_rows_and_cols(cost: &mut Matrix) {
    for i in 0..cost.rows() {
        let row = cost.row_mut(i);
        let min = row.iter().copied().fold(f64::INFINITY, f64::min);
        row.iter_mut().for_each(|v| *v -= min);
    }
    let mut col_min = vec![f64::INFINITY; cost.cols()];
    for i in 0..cost.rows() {
        for (m, &v) in col_min.iter_mut().zip(cost.row(i)) {
            *m = m.min(v);
        }
    }
    for i in 0..cost.rows() {
        for (v, m) in cost.row_mut(i).iter_mut().zip(&col_min) {
            *v -= m;
        }
    }
}

fn safe_ratio(target: f64, mass: f64) -> f64 {
    if target == 0.0 {
        0.0
    } else if mass > 0.0 {
        target / mass
    } else {
        0.0
    }
}

/// `S` alternating scalings `b = ν / (Kᵀa)`, `a = μ / (K b)`; returns `diag(a) K diag(b)`.
fn sinkhorn(kernel: &Matrix, mu: &[f64], nu: &[f64], iters: usize) -> Matrix {
    let mut a = vec![1.0; mu.len()];
    let mut b = vec![1.0; nu.len()];
    for _ in 0..iters {
        let kta = kernel.t_mat_vec(&a);
        for (bj, (&t, &m)) in b.iter_mut().zip(nu.iter().zip(&kta)) {
            *bj = safe_ratio(t, m);
        }
        let kb = kernel.mat_vec(&b);
        for (ai, (&t, &m)) in a.iter_mut().zip(mu.iter().zip(&kb)) {
            *ai = safe_ratio(t, m);
        }
    }
    Matrix::from_fn(kernel.rows(), kernel.cols(), |i, j| a[i] * kernel[(i, j)] * b[j])
}

/// Log-domain counterpart of [`sinkhorn`] on `log K`.
fn sinkhorn_log(log_kernel: &Matrix, mu: &[f64], nu: &[f64], iters: usize) -> Matrix {
    let (n, d) = (log_kernel.rows(), log_kernel.cols());
    let log_or_neg_inf = |w: f64| if w > 0.0 { ln(w) } else { f64::NEG_INFINITY };
    let log_mu: Vec<f64> = mu.iter().map(|&w| log_or_neg_inf(w)).collect();
    let log_nu: Vec<f64> = nu.iter().map(|&w| log_or_neg_inf(w)).collect();
    let mut f = vec![0.0; n];
    let mut g = vec![0.0; d];
    let update = |target: f64, lse: f64| {
        if target == f64::NEG_INFINITY || lse == f64::NEG_INFINITY {
            f64::NEG_INFINITY
        } else {
            target - lse
        }
    };
    let add = |x: f64, y: f64| if x == f64::NEG_INFINITY || y == f64::NEG_INFINITY { f64::NEG_INFINITY } else { x + y };
    for _ in 0..iters {
        for j in 0..d {
            let lse = log_sum_exp((0..n).map(|i| add(log_kernel[(i, j)], f[i])));
            g[j] = update(log_nu[j], lse);
        }
        for i in 0..n {
            let row = log_kernel.row(i);
            let lse = log_sum_exp((0..d).map(|j| add(row[j], g[j])));
            f[i] = update(log_mu[i], lse);
        }
    }
    Matrix::from_fn(n, d, |i, j| {
        let v = add(add(f[i], log_kernel[(i, j)]), g[j]);
        if v == f64::NEG_INFINITY {
            0.0
        } else {
            exp(v)
        }
    })
}

/// Sinkhorn-balances `t` toward `(μ, ν)`, then rounds it onto the coupling
/// polytope.
fn project_onto_couplings(t: &Matrix, mu: &[f64], nu: &[f64]) -> Matrix {
    let mut f = t.clone();
    for _ in 0..1000 {
        if marginal_error(&f, mu, nu) < 1e-13 {
            break;
        }
        f = sinkhorn(&f, mu, nu, 1);
    }
    round_onto_couplings(f, mu, nu)
}

/// Rounding step of Altschuler, Weed and Rigollet (2017): shrink overfull
/// rows, shrink overfull columns, then add the residual outer product. The
/// result has marginals `(μ, ν)` up to floating-point error.
fn round_onto_couplings(mut f: Matrix, mu: &[f64], nu: &[f64]) -> Matrix {
    let rows = f.row_sums();
    for (i, (&s, &target)) in rows.iter().zip(mu).enumerate() {
        if s > target {
            let x = target / s;
            f.row_mut(i).iter_mut().for_each(|v| *v *= x);
        }
    }
    let cols = f.col_sums();
    let y: Vec<f64> = cols.iter().zip(nu).map(|(&s, &target)| if s > target { target / s } else { 1.0 }).collect();
    for i in 0..f.rows() {
        for (v, yj) in f.row_mut(i).iter_mut().zip(&y) {
            *v *= yj;
        }
    }
    let err_r: Vec<f64> = f.row_sums().iter().zip(mu).map(|(s, t)| (t - s).max(0.0)).collect();
    let err_c: Vec<f64> = f.col_sums().iter().zip(nu).map(|(s, t)| (t - s).max(0.0)).collect();
    let mass: f64 = err_r.iter().sum();
    if mass > 0.0 {
        for i in 0..f.rows() {
            for (j, v) in f.row_mut(i).iter_mut().enumerate() {
                *v += err_r[i] * err_c[j] / mass;
            }
        }
    }
    f
}
