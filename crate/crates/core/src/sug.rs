//! Stochastic universal gradient method.
//!
//! Every component keeps a quadratic surrogate anchored at the iterate where
//! it was last sampled,
//! `g_i(θ_i) + ⟨∇g_i(θ_i), x − θ_i⟩ + (M_i/2)‖x − θ_i‖²`.
//! Each iteration minimizes the average surrogate plus `h`, samples one
//! component uniformly and re-anchors it at the new point. Only the sums
//! `ΣM_i`, `Σ(∇g_i − M_i θ_i)` and the constant part are needed to solve the
//! subproblem, so they are maintained incrementally.

use std::time::Instant;

use ndarray::{Array1, ArrayView1};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{check_dim, positive, Error, Result};
use crate::oracles::{composite_value, CompositeProblem, HolderConstants, Regularizer};
use crate::trace::{RunTrace, TraceMeta, TraceRow};

#[derive(Clone, Debug, PartialEq)]
pub struct SugConfig {
    /// Surrogate modulus shared by every component.
    pub modulus: f64,
    pub eps: f64,
    pub seed: u64,
    pub max_iters: usize,
    /// Stop once `sug_bound(k) ≤ stop_threshold`. Needs `dist0_sq`.
    pub stop_threshold: Option<f64>,
    /// `‖x* − x⁰‖²`, or an over-estimate of it.
    pub dist0_sq: Option<f64>,
    /// Write wall-clock time into the trace; `false` writes `0`.
    pub record_time: bool,
}

impl SugConfig {
    pub fn new(modulus: f64, eps: f64, seed: u64, max_iters: usize) -> Self {
        SugConfig {
            modulus,
            eps,
            seed,
            max_iters,
            stop_threshold: None,
            dist0_sq: None,
            record_time: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        positive("M", self.modulus)?;
        positive("eps", self.eps)?;
        if self.stop_threshold.is_some() && self.dist0_sq.is_none() {
            return Err(Error::InvalidParameter {
                name: "stop_threshold",
                reason: "the bound-based stop rule needs dist0_sq".into(),
            });
        }
        Ok(())
    }
}

/// `M > (2/ε)^{(1−v)/(1+v)} M_v^{2/(1+v)}`, the modulus condition under which
/// each surrogate over-estimates its component up to `ε/4`.
pub fn modulus_hypothesis_holds(holder: HolderConstants, modulus: f64, eps: f64) -> Result<bool> {
    Ok(modulus > holder.gamma(0.5 * eps)?)
}

#[derive(Clone, Debug, PartialEq)]
pub struct SurrogateTable {
    pub anchors: Vec<Array1<f64>>,
    pub gradients: Vec<Array1<f64>>,
    pub values: Vec<f64>,
    pub moduli: Vec<f64>,
    pub sum_m: f64,
    pub lin: Array1<f64>,
    pub const_sum: f64,
}

/// `(∇ − Mθ, g − ⟨∇, θ⟩ + (M/2)‖θ‖²)` for one row.
fn row_terms(anchor: ArrayView1<f64>, grad: ArrayView1<f64>, value: f64, m: f64) -> (Array1<f64>, f64) {
    let lin = &grad - &(&anchor * m);
    let c = value - grad.dot(&anchor) + 0.5 * m * anchor.dot(&anchor);
    (lin, c)
}

impl SurrogateTable {
    pub fn len(&self) -> usize {
        self.anchors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.anchors.is_empty()
    }

    pub fn dimension(&self) -> usize {
        self.lin.len()
    }

    /// `G(x) = (ΣM_i/(2n))‖x‖² + ⟨lin, x⟩/n + const/n`.
    pub fn model_value(&self, x: ArrayView1<f64>) -> Result<f64> {
        check_dim(self.dimension(), x.len())?;
        let n = self.len() as f64;
        Ok((0.5 * self.sum_m * x.dot(&x) + self.lin.dot(&x) + self.const_sum) / n)
    }

    /// `G(x)` summed row by row, without the aggregates.
    pub fn direct_value(&self, x: ArrayView1<f64>) -> Result<f64> {
        check_dim(self.dimension(), x.len())?;
        let mut total = 0.0;
        for i in 0..self.len() {
            let d = &x - &self.anchors[i];
            total += self.values[i] + self.gradients[i].dot(&d) + 0.5 * self.moduli[i] * d.dot(&d);
        }
        Ok(total / self.len() as f64)
    }

    /// Aggregates rebuilt from the rows.
    pub fn recompute(&self) -> (f64, Array1<f64>, f64) {
        let mut sum_m = 0.0;
        let mut lin = Array1::zeros(self.dimension());
        let mut c = 0.0;
        for i in 0..self.len() {
            let (l, k) = row_terms(self.anchors[i].view(), self.gradients[i].view(), self.values[i], self.moduli[i]);
            sum_m += self.moduli[i];
            lin += &l;
            c += k;
        }
        (sum_m, lin, c)
    }

    /// Replaces the stored aggregates with a fresh recomputation.
    pub fn refresh(&mut self) {
        let (sum_m, lin, c) = self.recompute();
        self.sum_m = sum_m;
        self.lin = lin;
        self.const_sum = c;
    }
}

/// Anchors every component at `x0` with modulus `cfg.modulus`.
pub fn sug_init(problem: &CompositeProblem, x0: ArrayView1<f64>, cfg: &SugConfig) -> Result<SurrogateTable> {
    cfg.validate()?;
    check_dim(problem.dimension(), x0.len())?;
    let n = problem.len();
    let mut table = SurrogateTable {
        anchors: Vec::with_capacity(n),
        gradients: Vec::with_capacity(n),
        values: Vec::with_capacity(n),
        moduli: vec![cfg.modulus; n],
        sum_m: 0.0,
        lin: Array1::zeros(x0.len()),
        const_sum: 0.0,
    };
    for g in problem.components() {
        table.anchors.push(x0.to_owned());
        table.gradients.push(g.subgradient(x0));
        table.values.push(g.value(x0));
    }
    table.refresh();
    Ok(table)
}

/// `argmin_x G(x) + h(x)`.
pub fn sug_subproblem(table: &SurrogateTable, h: &Regularizer) -> Result<Array1<f64>> {
    if table.is_empty() {
        return Err(Error::EmptyProblem);
    }
    positive("sum_M", table.sum_m)?;
    let kappa = table.sum_m / table.len() as f64;
    let z = &table.lin * (-1.0 / table.sum_m);
    h.prox(z.view(), 1.0 / kappa)
}

/// Re-anchors component `j` at `x_new`.
pub fn sug_update(table: &mut SurrogateTable, problem: &CompositeProblem, j: usize, x_new: ArrayView1<f64>) -> Result<()> {
    if j >= table.len() {
        return Err(Error::IndexOutOfRange { index: j, len: table.len() });
    }
    check_dim(table.dimension(), x_new.len())?;
    let g = problem.component(j)?;
    let m = table.moduli[j];
    let (old_lin, old_c) = row_terms(table.anchors[j].view(), table.gradients[j].view(), table.values[j], m);
    let grad = g.subgradient(x_new);
    let value = g.value(x_new);
    let (new_lin, new_c) = row_terms(x_new, grad.view(), value, m);
    table.lin -= &old_lin;
    table.lin += &new_lin;
    table.const_sum += new_c - old_c;
    table.anchors[j] = x_new.to_owned();
    table.gradients[j] = grad;
    table.values[j] = value;
    Ok(())
}

#[derive(Clone, Debug)]
pub struct SugRun {
    pub x_final: Array1<f64>,
    /// `f(x^k)` for `k = 0, …, K`.
    pub objective: Vec<f64>,
    /// Component sampled at each iteration.
    pub sampled: Vec<usize>,
    pub trace: RunTrace,
    pub table: SurrogateTable,
}

/// Runs until `cfg.max_iters` iterations or the bound-based stop rule.
///
/// Row `k` of the trace holds `f(x^{k+1})` in `f_full`.
pub fn sug_run(problem: &CompositeProblem, x0: ArrayView1<f64>, cfg: &SugConfig) -> Result<SugRun> {
    let mut table = sug_init(problem, x0, cfg)?;
    let h = problem.regularizer();
    let n = problem.len();
    let mu_h = h.strong_convexity();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut trace = RunTrace::new(TraceMeta {
        algorithm: "sug".into(),
        eps: cfg.eps,
        seed: Some(cfg.seed),
        l0: cfg.modulus,
        x0: x0.to_vec(),
        ..TraceMeta::default()
    });
    let mut objective = vec![composite_value(problem, x0)?];
    let mut sampled = Vec::new();
    let mut x = x0.to_owned();
    let start = Instant::now();
    for k in 0..cfg.max_iters {
        x = sug_subproblem(&table, h)?;
        let j = rng.random_range(0..n);
        sug_update(&mut table, problem, j, x.view())?;
        let f = composite_value(problem, x.view())?;
        objective.push(f);
        sampled.push(j);
        trace.rows.push(TraceRow {
            t: k,
            doublings: 0,
            l_next: cfg.modulus,
            f_gt_xt: None,
            f_gt_xnext: None,
            f_gt_yt: None,
            f_full: Some(f),
            elapsed_s: if cfg.record_time { start.elapsed().as_secs_f64() } else { 0.0 },
        });
        if let (Some(thr), Some(d)) = (cfg.stop_threshold, cfg.dist0_sq) {
            if mu_h > 0.0 {
                if let BoundValue::Finite(b) = sug_bound(k + 1, cfg.modulus, mu_h, n, cfg.eps, d)? {
                    if b <= thr {
                        break;
                    }
                }
            }
        }
    }
    Ok(SugRun {
        x_final: x,
        objective,
        sampled,
        trace,
        table,
    })
}

/// `ρ = M/(nμ_h) + 1 − 1/n`.
pub fn contraction(modulus: f64, mu_h: f64, n: usize) -> Result<f64> {
    positive("mu_h", mu_h)?;
    if n == 0 {
        return Err(Error::EmptyProblem);
    }
    let n = n as f64;
    Ok(modulus / (n * mu_h) + 1.0 - 1.0 / n)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BoundValue {
    Finite(f64),
    /// `ρ ≥ 1`: the geometric series does not converge and the bound says
    /// nothing.
    Vacuous { rho: f64 },
}

impl BoundValue {
    pub fn finite(self) -> Option<f64> {
        match self {
            BoundValue::Finite(v) => Some(v),
            BoundValue::Vacuous { .. } => None,
        }
    }
}

/// Expected suboptimality bound after `k ≥ 1` iterations:
/// `M ρ^{k−1} D + (3ε/(4nμ_h))(1 − ρ^{k−1})/(1 − ρ) + 3ε/4`.
pub fn sug_bound(k: usize, modulus: f64, mu_h: f64, n: usize, eps: f64, dist0_sq: f64) -> Result<BoundValue> {
    if k == 0 {
        return Err(Error::InvalidParameter {
            name: "k",
            reason: "the bound starts at k = 1".into(),
        });
    }
    let rho = contraction(modulus, mu_h, n)?;
    if rho >= 1.0 {
        return Ok(BoundValue::Vacuous { rho });
    }
    let pk = rho.powi((k - 1) as i32);
    let geo = (1.0 - pk) / (1.0 - rho);
    Ok(BoundValue::Finite(
        modulus * pk * dist0_sq + 3.0 * eps / (4.0 * n as f64 * mu_h) * geo + 0.75 * eps,
    ))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum IterationEstimate {
    Finite(u64),
    Undefined(String),
}

fn log_estimate(lead: f64, eps: f64, modulus: f64, mu_h: f64, n: usize, dist0_sq: f64) -> Result<IterationEstimate> {
    let rho = contraction(modulus, mu_h, n)?;
    if rho >= 1.0 {
        return Ok(IterationEstimate::Undefined(format!("rho = {rho} is not below 1")));
    }
    let coeff = lead - 3.0 / (4.0 * (mu_h - modulus));
    let arg = coeff * eps / (modulus * dist0_sq);
    if !(arg > 0.0) {
        return Ok(IterationEstimate::Undefined(format!(
            "log argument {arg} is not positive (leading factor {coeff})"
        )));
    }
    let k = arg.ln() / rho.ln() + 1.0;
    if k.is_nan() {
        return Ok(IterationEstimate::Undefined(format!("estimate is not a number for argument {arg}")));
    }
    Ok(IterationEstimate::Finite(k.ceil().max(1.0) as u64))
}

/// `k ≥ log[(¼ − 3/(4(μ_h − M)))·ε/(M·D)] / log ρ + 1`, rounded up.
pub fn sug_iteration_estimate(eps: f64, modulus: f64, mu_h: f64, n: usize, dist0_sq: f64) -> Result<IterationEstimate> {
    log_estimate(0.25, eps, modulus, mu_h, n, dist0_sq)
}

/// High-probability variant with leading factor `δ − ¾`.
pub fn sug_high_prob_iters(
    eps: f64,
    delta: f64,
    modulus: f64,
    mu_h: f64,
    n: usize,
    dist0_sq: f64,
) -> Result<IterationEstimate> {
    if !(delta > 0.0 && delta < 1.0) {
        return Ok(IterationEstimate::Undefined(format!("delta = {delta} is outside (0, 1)")));
    }
    log_estimate(delta - 0.75, eps, modulus, mu_h, n, dist0_sq)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::{lasso_problem, synth_lasso, LassoInstance};
    use ndarray::array;
    use rand_distr::{Distribution, StandardNormal};

    fn lasso(n: usize, p: usize, l1: f64, ridge: f64, seed: u64) -> CompositeProblem {
        let syn = synth_lasso(p, n, p.min(3), 0.1, seed).unwrap();
        lasso_problem(&LassoInstance::new(syn.instance.samples, l1, ridge).unwrap()).unwrap()
    }

    fn rand_vec(rng: &mut ChaCha8Rng, p: usize, scale: f64) -> Array1<f64> {
        Array1::from_iter((0..p).map(|_| { let z: f64 = StandardNormal.sample(rng); scale * z }))
    }

    #[test]
    fn single_component_init_is_the_surrogate() {
        let p = lasso(1, 3, 0.0, 0.0, 1);
        let x0 = array![0.5, -1.0, 2.0];
        let m = 7.0;
        let t = sug_init(&p, x0.view(), &SugConfig::new(m, 0.1, 0, 0)).unwrap();
        let g = p.component(0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let x = rand_vec(&mut rng, 3, 2.0);
            let d = &x - &x0;
            let direct = g.value(x0.view()) + g.subgradient(x0.view()).dot(&d) + 0.5 * m * d.dot(&d);
            let agg = t.model_value(x.view()).unwrap();
            assert!((agg - direct).abs() <= 1e-10 * (1.0 + direct.abs()));
        }
        assert_eq!(t.recompute(), (t.sum_m, t.lin.clone(), t.const_sum));
    }

    #[test]
    fn unregularized_single_component_steps() {
        let p = lasso(1, 2, 0.0, 0.0, 4);
        let x0 = array![1.0, 1.0];
        let t = sug_init(&p, x0.view(), &SugConfig::new(5.0, 0.1, 0, 0)).unwrap();
        let x = sug_subproblem(&t, &Regularizer::Zero).unwrap();
        let expect = &x0 - &(p.component(0).unwrap().subgradient(x0.view()) / 5.0);
        assert!((&x - &expect).iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn scalar_subproblem_matches_shrink() {
        // G(x) = x² + x, h = 0.5|x|.
        let t = SurrogateTable {
            anchors: vec![array![0.0]],
            gradients: vec![array![1.0]],
            values: vec![0.0],
            moduli: vec![2.0],
            sum_m: 2.0,
            lin: array![1.0],
            const_sum: 0.0,
        };
        let x = sug_subproblem(&t, &Regularizer::L1 { weight: 0.5 }).unwrap();
        assert_eq!(x, array![-0.25]);
        // Dense scan of the objective on [−2, 2].
        let f = |v: f64| v * v + v + 0.5 * v.abs();
        let best = (0..=400_000).map(|k| -2.0 + k as f64 * 1e-5).min_by(|a, b| f(*a).total_cmp(&f(*b))).unwrap();
        assert!((best + 0.25).abs() < 1e-5);
    }

    #[test]
    fn subproblem_is_optimal() {
        let p = lasso(30, 6, 0.2, 0.5, 8);
        let cfg = SugConfig::new(40.0, 0.1, 5, 0);
        let mut t = sug_init(&p, Array1::zeros(6).view(), &cfg).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let j = rng.random_range(0..30);
            let x = rand_vec(&mut rng, 6, 1.0);
            sug_update(&mut t, &p, j, x.view()).unwrap();
        }
        let h = p.regularizer();
        let x = sug_subproblem(&t, h).unwrap();
        let n = t.len() as f64;
        let grad = (&x * t.sum_m + &t.lin) / n;
        let (l1, l2) = match h {
            Regularizer::ElasticNet { l1, l2 } => (*l1, *l2),
            _ => unreachable!(),
        };
        for (&xi, &gi) in x.iter().zip(&grad) {
            let r = gi + l2 * xi;
            if xi != 0.0 {
                assert!((r + l1 * xi.signum()).abs() <= 1e-9);
            } else {
                assert!(r.abs() <= l1 + 1e-9);
            }
        }
    }

    #[test]
    fn update_bookkeeping() {
        let p = lasso(10, 4, 0.0, 0.0, 2);
        let cfg = SugConfig::new(30.0, 0.1, 0, 0);
        let x0 = array![0.1, 0.2, 0.3, 0.4];
        let mut t = sug_init(&p, x0.view(), &cfg).unwrap();
        let before = t.clone();
        sug_update(&mut t, &p, 3, x0.view()).unwrap();
        assert_eq!(t, before);
        let xa = array![1.0, 0.0, 0.0, 0.0];
        let xb = array![0.0, 1.0, 0.0, 0.0];
        sug_update(&mut t, &p, 2, xa.view()).unwrap();
        sug_update(&mut t, &p, 5, xb.view()).unwrap();
        assert_eq!(t.anchors[2], xa);
        assert!(sug_update(&mut t, &p, 10, xa.view()).is_err());
    }

    #[test]
    fn aggregates_track_recomputation() {
        let p = lasso(20, 5, 0.0, 0.0, 6);
        let cfg = SugConfig::new(50.0, 0.1, 0, 0);
        let mut t = sug_init(&p, Array1::zeros(5).view(), &cfg).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..2000 {
            let j = rng.random_range(0..20);
            let x = rand_vec(&mut rng, 5, 1.0);
            sug_update(&mut t, &p, j, x.view()).unwrap();
        }
        let (sm, lin, c) = t.recompute();
        assert!((sm - t.sum_m).abs() <= 1e-10 * sm.abs());
        let scale = lin.iter().fold(1.0f64, |a, v| a.max(v.abs()));
        assert!((&lin - &t.lin).iter().all(|v| v.abs() <= 1e-10 * scale));
        assert!((c - t.const_sum).abs() <= 1e-10 * c.abs().max(1.0));
    }

    #[test]
    fn ridge_quadratic_decreases_monotonically() {
        let p = lasso(1, 3, 0.0, 2.0, 10);
        let hc = p.stream_holder().unwrap();
        let cfg = SugConfig::new(hc.modulus, 0.1, 0, 60);
        let run = sug_run(&p, array![3.0, -2.0, 1.0].view(), &cfg).unwrap();
        for w in run.objective.windows(2) {
            assert!(w[1] <= w[0] + 1e-12, "{} then {}", w[0], w[1]);
        }
    }

    #[test]
    fn equal_seeds_equal_runs() {
        let p = lasso(15, 4, 0.1, 1.0, 3);
        let cfg = SugConfig { record_time: false, ..SugConfig::new(20.0, 0.1, 99, 100) };
        let a = sug_run(&p, Array1::zeros(4).view(), &cfg).unwrap();
        let b = sug_run(&p, Array1::zeros(4).view(), &cfg).unwrap();
        assert_eq!(a.trace.to_csv_string().unwrap(), b.trace.to_csv_string().unwrap());
        assert_eq!(a.sampled, b.sampled);
    }

    #[test]
    fn bound_examples() {
        let b = sug_bound(1, 2.0, 5.0, 4, 0.2, 3.0).unwrap();
        assert_eq!(b, BoundValue::Finite(2.0 * 3.0 + 0.15));
        // n = 1, M = 1, μ_h = 2, ε = 0.1, D = 1, k = 3: 1/4 + 0.075 + 0.075·… = 61/160.
        let b = sug_bound(3, 1.0, 2.0, 1, 0.1, 1.0).unwrap().finite().unwrap();
        assert!((b - 61.0 / 160.0).abs() < 1e-15);
        assert!(matches!(sug_bound(3, 2.0, 2.0, 5, 0.1, 1.0).unwrap(), BoundValue::Vacuous { .. }));
        assert!(matches!(sug_bound(3, 3.0, 2.0, 5, 0.1, 1.0).unwrap(), BoundValue::Vacuous { .. }));
        assert!(sug_bound(3, 1.0, 0.0, 5, 0.1, 1.0).is_err());
        assert!(sug_bound(0, 1.0, 1.0, 5, 0.1, 1.0).is_err());
    }

    #[test]
    fn estimate_branches() {
        assert!(matches!(sug_iteration_estimate(0.1, 2.0, 1.0, 3, 1.0).unwrap(), IterationEstimate::Undefined(_)));
        // μ_h − M = 1: ¼ − ¾ < 0.
        assert!(matches!(sug_iteration_estimate(0.1, 1.0, 2.0, 3, 1.0).unwrap(), IterationEstimate::Undefined(_)));
        let (eps, m, mu, n, d) = (0.01, 1.0, 100.0, 1, 1.0);
        let IterationEstimate::Finite(k) = sug_iteration_estimate(eps, m, mu, n, d).unwrap() else {
            panic!("expected a finite estimate");
        };
        let b = sug_bound(k as usize, m, mu, n, eps, d).unwrap().finite().unwrap();
        assert!(b <= eps, "bound {b} at estimate {k}");
    }

    #[test]
    fn high_probability_branches() {
        assert!(matches!(sug_high_prob_iters(0.1, 0.5, 1.0, 100.0, 2, 1.0).unwrap(), IterationEstimate::Undefined(_)));
        assert!(matches!(sug_high_prob_iters(0.1, 0.9, 3.0, 2.0, 2, 1.0).unwrap(), IterationEstimate::Undefined(_)));
        assert!(matches!(sug_high_prob_iters(0.1, 1.5, 1.0, 100.0, 2, 1.0).unwrap(), IterationEstimate::Undefined(_)));
        let mut last = u64::MAX;
        for k in 0..50 {
            let delta = 0.8 + 0.19 * k as f64 / 49.0;
            if let IterationEstimate::Finite(it) = sug_high_prob_iters(1e-3, delta, 1.0, 100.0, 10, 4.0).unwrap() {
                assert!(it <= last);
                last = it;
            }
        }
        assert!(last < u64::MAX);
    }

    #[test]
    fn surrogates_overestimate_components() {
        let p = lasso(25, 4, 0.0, 0.0, 17);
        let hc = p.stream_holder().unwrap();
        let eps = 0.1;
        let m = 1.01 * hc.modulus;
        assert!(modulus_hypothesis_holds(hc, m, eps).unwrap());
        let cfg = SugConfig::new(m, eps, 1, 0);
        let mut t = sug_init(&p, Array1::zeros(4).view(), &cfg).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..200 {
            let j = rng.random_range(0..25);
            sug_update(&mut t, &p, j, rand_vec(&mut rng, 4, 1.0).view()).unwrap();
            let x = rand_vec(&mut rng, 4, 3.0);
            assert!(p.smooth_value(x.view()).unwrap() <= t.model_value(x.view()).unwrap() + eps / 4.0);
        }
    }

    proptest::proptest! {
        #[test]
        fn bound_decreases_when_contracting(
            n in 1usize..200,
            m in 0.1..10.0f64,
            ratio in 1.01..100.0f64,
            eps in 1e-6..1.0f64,
            d in 0.0..100.0f64,
            k in 1usize..500,
        ) {
            let mu = ratio * m;
            let a = sug_bound(k, m, mu, n, eps, d).unwrap().finite().unwrap();
            let b = sug_bound(k + 1, m, mu, n, eps, d).unwrap().finite().unwrap();
            proptest::prop_assert!(b <= a * (1.0 + 1e-12));
            proptest::prop_assert!(b >= 0.75 * eps * (1.0 - 1e-12));
        }
    }
}
