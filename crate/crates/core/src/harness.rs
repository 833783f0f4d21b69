//! Experiment plumbing: sample orders, the batch reference solver, regret
//! and bound evaluation, and the on-disk artifacts of a run.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use ndarray::{Array1, ArrayView1};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, positive, Error, Result};
use crate::oracles::{per_sample_value, CompositeProblem, HolderConstants};
use crate::online::{OnlineOptions, OnlineRun};
use crate::problems::{lasso_problem, load_samples, steiner_problem, synth_lasso, synth_steiner, LassoInstance};
use crate::sug::{
    contraction, modulus_hypothesis_holds, sug_bound, sug_iteration_estimate, sug_run,
    IterationEstimate, SugConfig,
};
use crate::trace::{RunTrace, TraceMeta, TraceRow};
use crate::udgm::{udgm_fixed_step_run, udgm_run};
use crate::upgm::{upgm_fixed_step_run, upgm_run};

/// Additive slack allowed on every bound check, relative to `1 + |rhs|`.
pub const BOUND_SLACK: f64 = 1e-9;
pub const REFERENCE_TOL: f64 = 1e-10;
pub const REFERENCE_MAX_ITERS: usize = 1_000_000;

pub fn within_slack(lhs: f64, rhs: f64) -> bool {
    lhs <= rhs + BOUND_SLACK * (1.0 + rhs.abs())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OrderKind {
    Sequential,
    Cyclic,
    Random,
}

impl fmt::Display for OrderKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OrderKind::Sequential => "sequential",
            OrderKind::Cyclic => "cyclic",
            OrderKind::Random => "random",
        })
    }
}

impl FromStr for OrderKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sequential" => Ok(OrderKind::Sequential),
            "cyclic" => Ok(OrderKind::Cyclic),
            "random" => Ok(OrderKind::Random),
            _ => Err(Error::InvalidParameter {
                name: "order",
                reason: format!("unknown order `{s}`"),
            }),
        }
    }
}

/// Indices of the `T + 1` components visited by an online run.
pub fn sample_order(kind: OrderKind, n: usize, horizon: usize, seed: u64) -> Result<Vec<usize>> {
    if n == 0 {
        return Err(Error::EmptyProblem);
    }
    let len = horizon + 1;
    Ok(match kind {
        OrderKind::Sequential => {
            if n < len {
                return Err(Error::SequentialTooShort { needed: len, available: n });
            }
            (0..len).collect()
        }
        OrderKind::Cyclic => (0..len).map(|t| t % n).collect(),
        OrderKind::Random => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..len).map(|_| rng.random_range(0..n)).collect()
        }
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Reference {
    pub x: Vec<f64>,
    pub f: f64,
    pub iterations: usize,
}

/// Batch proximal gradient on the averaged smooth part with a doubling line
/// search. The modulus is halved after every accepted step.
pub fn reference_traced(
    problem: &CompositeProblem,
    x0: ArrayView1<f64>,
    tol: f64,
    max_iters: usize,
    record_time: bool,
) -> Result<(Reference, Vec<TraceRow>)> {
    positive("tol", tol)?;
    check_dim(problem.dimension(), x0.len())?;
    let h = problem.regularizer();
    let start = Instant::now();
    let mut rows = Vec::new();
    let mut x = x0.to_owned();
    let mut l = 1.0f64;
    let mut gx = problem.smooth_value(x.view())?;
    for k in 0..max_iters {
        let grad = problem.smooth_gradient(x.view())?;
        let mut doublings = 0u32;
        let (y, gy, converged) = loop {
            let z = &x - &(&grad / l);
            let y = h.prox(z.view(), 1.0 / l)?;
            let d = &y - &x;
            let step = d.dot(&d).sqrt();
            if step <= tol {
                break (y, f64::NAN, true);
            }
            let gy = problem.smooth_value(y.view())?;
            if gy <= gx + grad.dot(&d) + 0.5 * l * d.dot(&d) {
                break (y, gy, false);
            }
            l *= 2.0;
            doublings += 1;
            if !l.is_finite() {
                return Err(Error::SolverFailure {
                    iterations: k,
                    residual: step,
                });
            }
        };
        if converged {
            let f = gx + h.value(x.view());
            return Ok((
                Reference {
                    x: x.to_vec(),
                    f,
                    iterations: k,
                },
                rows,
            ));
        }
        x = y;
        gx = gy;
        rows.push(TraceRow {
            t: k,
            doublings,
            l_next: l,
            f_gt_xt: None,
            f_gt_xnext: None,
            f_gt_yt: None,
            f_full: Some(gx + h.value(x.view())),
            elapsed_s: if record_time { start.elapsed().as_secs_f64() } else { 0.0 },
        });
        l = (0.5 * l).max(1e-12);
    }
    let grad = problem.smooth_gradient(x.view())?;
    let z = &x - &(&grad / l);
    let d = &h.prox(z.view(), 1.0 / l)? - &x;
    Err(Error::SolverFailure {
        iterations: max_iters,
        residual: d.dot(&d).sqrt(),
    })
}

/// High-accuracy minimizer of the full objective, started from the origin.
pub fn reference_solution(problem: &CompositeProblem, tol: f64) -> Result<Reference> {
    let x0 = Array1::zeros(problem.dimension());
    reference_traced(problem, x0.view(), tol, REFERENCE_MAX_ITERS, false).map(|(r, _)| r)
}

/// A bound check: `lhs ≤ rhs` up to [`BOUND_SLACK`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BoundCheck {
    pub lhs: f64,
    pub rhs: f64,
    /// `rhs − lhs`; negative when violated.
    pub slack: f64,
    pub satisfied: bool,
}

impl BoundCheck {
    pub fn new(lhs: f64, rhs: f64) -> Self {
        BoundCheck {
            lhs,
            rhs,
            slack: rhs - lhs,
            satisfied: within_slack(lhs, rhs),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RegretReport {
    pub algorithm: String,
    pub eps: f64,
    pub rounds: usize,
    /// `S_T = Σ 1/L_{t+1}`.
    pub weight_sum: f64,
    /// `ξ(x_0, x*)`.
    pub r0: f64,
    /// `Σ_t f_{g_t}(x_t) − Σ_t f_{g_t}(x*)`.
    pub regret_as_defined: f64,
    /// Same sum with `x_{t+1}` in place of `x_t`.
    pub regret_shifted: f64,
    pub weighted_lhs_thm1: Option<f64>,
    pub rhs_thm1: Option<f64>,
    pub slack_thm1: Option<f64>,
    pub thm1_satisfied: Option<bool>,
    /// `Σ (1/(2L_{t+1}))[f_{g_t}(x_t) − f_{g_t}(x*)]`.
    pub weighted_lhs_thm2: Option<f64>,
    pub rhs_thm2: Option<f64>,
    pub slack_thm2: Option<f64>,
    pub thm2_satisfied: Option<bool>,
    /// The dual bound with `f_{g_t}` taken at the Bregman points `y_t`.
    pub weighted_lhs_thm2_bregman: Option<f64>,
    pub thm2_bregman_satisfied: Option<bool>,
    /// Smallest `φ*_{t+1} + S_t ε/4 − Σ_{i≤t} f_{g_i}(y_i)/(2L_{i+1})` over all prefixes.
    pub dual_target_min_slack: Option<f64>,
    pub dual_target_satisfied: Option<bool>,
    pub gamma: Option<f64>,
    /// `(ε/2)(T + 1) + 2 ξ(x_0, x*) γ(M_v, ε)`, for fixed-step runs.
    pub rhs_corollary: Option<f64>,
    pub slack_corollary: Option<f64>,
    pub corollary_satisfied: Option<bool>,
    pub corollary_shifted_satisfied: Option<bool>,
    /// `max_t L_{t+1} ≤ γ(M_v, ε)`.
    pub max_l_next: f64,
    pub line_search_cap_satisfied: Option<bool>,
}

impl RegretReport {
    /// Every flag that was evaluated is true.
    pub fn all_satisfied(&self) -> bool {
        [
            self.thm1_satisfied,
            self.thm2_satisfied,
            self.thm2_bregman_satisfied,
            self.dual_target_satisfied,
            self.corollary_satisfied,
            self.line_search_cap_satisfied,
        ]
        .iter()
        .all(|f| f.unwrap_or(true))
    }
}

/// Extra inputs to [`evaluate_regret`] beyond the trace itself.
#[derive(Clone, Copy, Debug, Default)]
pub struct RegretInputs<'a> {
    /// Known Hölder constants of the stream; enables the γ-based checks.
    pub holder: Option<HolderConstants>,
    /// `min φ_{t+1}` per row, from a dual run.
    pub model_minima: Option<&'a [f64]>,
}

/// Evaluates the regret quantities of an online trace against comparator `x*`.
///
/// `samples[t]` is the component visited in row `t`.
pub fn evaluate_regret(
    trace: &RunTrace,
    problem: &CompositeProblem,
    samples: &[usize],
    x_star: ArrayView1<f64>,
    extra: RegretInputs,
) -> Result<RegretReport> {
    if trace.is_empty() {
        return Err(Error::TraceMismatch("trace has no rows".into()));
    }
    if samples.len() != trace.len() {
        return Err(Error::TraceMismatch(format!(
            "{} rows but {} sampled indices",
            trace.len(),
            samples.len()
        )));
    }
    if trace.meta.x0.len() != problem.dimension() {
        return Err(Error::TraceMismatch(format!(
            "trace start point has dimension {}, problem has {}",
            trace.meta.x0.len(),
            problem.dimension()
        )));
    }
    check_dim(problem.dimension(), x_star.len())?;
    let eps = trace.meta.eps;
    positive("eps", eps)?;
    let algorithm = trace.meta.algorithm.clone();
    let x0 = Array1::from(trace.meta.x0.clone());
    let r0 = problem.geometry().bregman(x0.view(), x_star)?;

    let missing = |col: &str, t: usize| Error::TraceMismatch(format!("row {t} has no {col}"));
    let (mut reg, mut reg_shift, mut s) = (0.0, 0.0, 0.0);
    let (mut thm1, mut thm2, mut thm2y) = (0.0, 0.0, 0.0);
    let mut has_y = true;
    let mut max_l = 0.0f64;
    let mut dual_min: Option<f64> = None;
    let mut dual_ok = true;
    let mut dual_lhs = 0.0;
    for (t, (row, &i)) in trace.rows.iter().zip(samples).enumerate() {
        let fx = row.f_gt_xt.ok_or_else(|| missing("f_gt_xt", t))?;
        let fnext = row.f_gt_xnext.ok_or_else(|| missing("f_gt_xnext", t))?;
        let fstar = per_sample_value(problem, i, x_star)?;
        let w = 1.0 / row.l_next;
        reg += fx - fstar;
        reg_shift += fnext - fstar;
        s += w;
        max_l = max_l.max(row.l_next);
        thm1 += w * (fnext - fstar);
        thm2 += 0.5 * w * (fx - fstar);
        match row.f_gt_yt {
            Some(fy) => {
                thm2y += 0.5 * w * (fy - fstar);
                dual_lhs += 0.5 * w * fy;
                if let Some(phi) = extra.model_minima.and_then(|m| m.get(t)) {
                    let check = BoundCheck::new(dual_lhs, phi + s * eps / 4.0);
                    dual_ok &= check.satisfied;
                    dual_min = Some(dual_min.map_or(check.slack, |m: f64| m.min(check.slack)));
                }
            }
            None => has_y = false,
        }
    }
    let rounds = trace.len();
    let primal = algorithm.starts_with("oupgm");
    let dual = algorithm.starts_with("oudgm");
    let fixed = algorithm.ends_with("-fixed");
    let c1 = BoundCheck::new(thm1, 0.5 * eps * s + 2.0 * r0);
    let c2 = BoundCheck::new(thm2, s * eps / 4.0 + r0);
    let c2y = BoundCheck::new(thm2y, s * eps / 4.0 + r0);
    let gamma = extra.holder.map(|hc| hc.gamma(eps)).transpose()?;
    let cor_rhs = gamma.filter(|_| fixed).map(|g| 0.5 * eps * rounds as f64 + 2.0 * r0 * g);
    let cor = cor_rhs.map(|r| BoundCheck::new(reg, r));
    let opt = |on: bool, v: f64| on.then_some(v);
    Ok(RegretReport {
        algorithm,
        eps,
        rounds,
        weight_sum: s,
        r0,
        regret_as_defined: reg,
        regret_shifted: reg_shift,
        weighted_lhs_thm1: opt(primal, c1.lhs),
        rhs_thm1: opt(primal, c1.rhs),
        slack_thm1: opt(primal, c1.slack),
        thm1_satisfied: primal.then_some(c1.satisfied),
        weighted_lhs_thm2: opt(dual, c2.lhs),
        rhs_thm2: opt(dual, c2.rhs),
        slack_thm2: opt(dual, c2.slack),
        thm2_satisfied: dual.then_some(c2.satisfied),
        weighted_lhs_thm2_bregman: opt(dual && has_y, c2y.lhs),
        thm2_bregman_satisfied: (dual && has_y).then_some(c2y.satisfied),
        dual_target_min_slack: dual_min.filter(|_| dual),
        dual_target_satisfied: dual_min.filter(|_| dual).map(|_| dual_ok),
        gamma,
        rhs_corollary: cor_rhs,
        slack_corollary: cor.map(|c| c.slack),
        corollary_satisfied: cor.map(|c| c.satisfied),
        corollary_shifted_satisfied: cor_rhs.map(|r| within_slack(reg_shift, r)),
        max_l_next: max_l,
        line_search_cap_satisfied: gamma.filter(|_| !fixed).map(|g| max_l <= g),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Oupgm,
    Oudgm,
    Sug,
    Batch,
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Algorithm::Oupgm => "oupgm",
            Algorithm::Oudgm => "oudgm",
            Algorithm::Sug => "sug",
            Algorithm::Batch => "batch",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProblemKind {
    SynthLasso,
    LassoCsv,
    Steiner,
}

impl fmt::Display for ProblemKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ProblemKind::SynthLasso => "synth-lasso",
            ProblemKind::LassoCsv => "lasso-csv",
            ProblemKind::Steiner => "steiner",
        })
    }
}

/// `ε` given directly or derived from the horizon as `T^{−(1+v)/2}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EpsSpec {
    Value(f64),
    Auto,
}

impl FromStr for EpsSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "auto" {
            return Ok(EpsSpec::Auto);
        }
        s.parse::<f64>().map(EpsSpec::Value).map_err(|_| Error::InvalidParameter {
            name: "eps",
            reason: format!("expected a number or `auto`, got `{s}`"),
        })
    }
}

/// Everything needed to reproduce one run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub algorithm: Algorithm,
    pub fixed_step: bool,
    pub problem: ProblemKind,
    pub data: Option<PathBuf>,
    pub eps: Option<EpsSpec>,
    pub v: Option<f64>,
    pub mv: Option<f64>,
    pub l0: f64,
    /// SUG surrogate modulus.
    pub m: Option<f64>,
    pub mu: f64,
    pub ridge: f64,
    pub horizon: usize,
    pub order: OrderKind,
    pub seed: u64,
    /// Synthetic dimension.
    pub p: usize,
    /// Synthetic sample count; defaults to `T + 1`.
    pub n: Option<usize>,
    pub sparsity: usize,
    pub noise: f64,
    /// Steiner center count.
    pub centers: usize,
    pub scale: f64,
    pub record_time: bool,
    pub track_full: bool,
    /// SUG: stop when the bound drops below this value.
    pub stop: Option<f64>,
    /// SUG: over-estimate of `‖x* − x⁰‖²` used instead of the reference.
    pub dist0_sq: Option<f64>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            algorithm: Algorithm::Oupgm,
            fixed_step: false,
            problem: ProblemKind::SynthLasso,
            data: None,
            eps: None,
            v: None,
            mv: None,
            l0: 1.0,
            m: None,
            mu: 0.1,
            ridge: 0.0,
            horizon: 1000,
            order: OrderKind::Cyclic,
            seed: 0,
            p: 20,
            n: None,
            sparsity: 5,
            noise: 0.1,
            centers: 50,
            scale: 1.0,
            record_time: true,
            track_full: false,
            stop: None,
            dist0_sq: None,
        }
    }
}

/// A problem built from a config, with what is known about it.
#[derive(Clone, Debug)]
pub struct BuiltProblem {
    pub problem: CompositeProblem,
    /// Stream constants: the config's `v`/`Mv` when given, else the problem's own.
    pub holder: Option<HolderConstants>,
}

fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        match self.eps {
            Some(EpsSpec::Value(e)) if !(e > 0.0 && e.is_finite()) => {
                return Err(invalid("eps", format!("must be positive, got {e}")))
            }
            None if self.algorithm != Algorithm::Batch => {
                return Err(invalid("eps", format!("required for {}", self.algorithm)))
            }
            _ => {}
        }
        positive("L0", self.l0)?;
        if let Some(v) = self.v {
            if !(0.0..=1.0).contains(&v) {
                return Err(invalid("v", format!("must lie in [0, 1], got {v}")));
            }
        }
        if let Some(mv) = self.mv {
            if !(mv >= 0.0 && mv.is_finite()) {
                return Err(invalid("Mv", format!("must be nonnegative, got {mv}")));
            }
        }
        if self.mv.is_some() != self.v.is_some() && self.mv.is_some() {
            return Err(invalid("v", "--Mv needs --v"));
        }
        if self.algorithm == Algorithm::Sug {
            match self.m {
                Some(m) if m > 0.0 && m.is_finite() => {}
                Some(m) => return Err(invalid("M", format!("must be positive, got {m}"))),
                None => return Err(invalid("M", "required for sug")),
            }
        }
        if self.problem == ProblemKind::LassoCsv && self.data.is_none() {
            return Err(invalid("data", "lasso-csv needs --data"));
        }
        if self.p == 0 {
            return Err(invalid("p", "must be at least 1"));
        }
        if self.n == Some(0) {
            return Err(invalid("n", "must be at least 1"));
        }
        if self.centers == 0 {
            return Err(invalid("m", "need at least one center"));
        }
        if self.fixed_step && !matches!(self.algorithm, Algorithm::Oupgm | Algorithm::Oudgm) {
            return Err(invalid("fixed-step", "only applies to oupgm and oudgm"));
        }
        Ok(())
    }

    pub fn build_problem(&self) -> Result<BuiltProblem> {
        let problem = match self.problem {
            ProblemKind::SynthLasso => {
                let n = self.n.unwrap_or(self.horizon + 1);
                let syn = synth_lasso(self.p, n, self.sparsity.min(self.p), self.noise, self.seed)?;
                let inst = LassoInstance::new(syn.instance.samples, self.mu, self.ridge)?;
                lasso_problem(&inst)?
            }
            ProblemKind::LassoCsv => {
                let path = self.data.as_ref().ok_or_else(|| invalid("data", "missing path"))?;
                lasso_problem(&load_samples(path, self.mu, self.ridge)?)?
            }
            ProblemKind::Steiner => steiner_problem(&synth_steiner(self.centers, self.p, self.scale, self.seed)?)?,
        };
        let holder = match (self.v, self.mv) {
            (Some(v), Some(mv)) => Some(HolderConstants::new(v, mv)?),
            _ => problem.stream_holder(),
        };
        Ok(BuiltProblem { problem, holder })
    }

    /// The accuracy to run with; `auto` uses `T^{−(1+v)/2}`.
    pub fn resolve_eps(&self, holder: Option<HolderConstants>) -> Result<f64> {
        match self.eps {
            Some(EpsSpec::Value(e)) => Ok(e),
            Some(EpsSpec::Auto) => {
                let v = self
                    .v
                    .or(holder.map(|h| h.degree))
                    .ok_or_else(|| invalid("eps", "`auto` needs --v"))?;
                let t = self.horizon.max(1) as f64;
                Ok(t.powf(-(1.0 + v) / 2.0))
            }
            None => Ok(REFERENCE_TOL),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SugReport {
    pub modulus: f64,
    pub mu_h: f64,
    pub n: usize,
    pub rho: Option<f64>,
    pub dist0_sq: f64,
    pub iterations: usize,
    pub hypothesis_satisfied: Option<bool>,
    pub iteration_estimate: Option<IterationEstimate>,
    pub final_gap: f64,
    /// `f(x^k) − f* ≤ sug_bound(k)` for every logged `k` of this single run.
    pub bound_dominates: Option<bool>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    pub eps: f64,
    pub holder: Option<HolderConstants>,
    pub f_star: f64,
    pub x_star: Vec<f64>,
    pub x_out: Vec<f64>,
    #[serde(flatten)]
    pub regret: Option<RegretReport>,
    pub sug: Option<SugReport>,
    pub warnings: Vec<String>,
}

/// Files written by [`run_experiment`].
#[derive(Clone, Debug)]
pub struct Artifacts {
    pub trace: PathBuf,
    pub report: PathBuf,
    pub bound_curve: PathBuf,
    pub summary: ExperimentReport,
}

pub const BOUND_CURVE_HEADER: [&str; 3] = ["k", "f_gap", "bound"];

/// Result of running a config in memory.
#[derive(Clone, Debug)]
pub struct Outcome {
    pub trace: RunTrace,
    pub report: ExperimentReport,
    /// `(k, gap, bound)` rows for the bound-curve file.
    pub curve: Vec<(usize, f64, Option<f64>)>,
}

fn describe(cfg: &ExperimentConfig, problem: &CompositeProblem) -> String {
    match cfg.problem {
        ProblemKind::LassoCsv => format!(
            "lasso-csv({},n={},p={})",
            cfg.data.as_deref().map(Path::display).map(|d| d.to_string()).unwrap_or_default(),
            problem.len(),
            problem.dimension()
        ),
        _ => format!("{}({})", cfg.problem, problem.descriptor()),
    }
}

pub fn execute(cfg: &ExperimentConfig) -> Result<Outcome> {
    cfg.validate()?;
    let built = cfg.build_problem()?;
    let problem = &built.problem;
    let eps = cfg.resolve_eps(built.holder)?;
    positive("eps", eps)?;
    let reference = reference_solution(problem, REFERENCE_TOL)?;
    let x_star = Array1::from(reference.x.clone());
    let x0 = Array1::zeros(problem.dimension());
    let mut warnings = Vec::new();
    let descriptor = describe(cfg, problem);

    let (mut trace, x_out, regret, sug, curve) = match cfg.algorithm {
        Algorithm::Oupgm | Algorithm::Oudgm => {
            let order = sample_order(cfg.order, problem.len(), cfg.horizon, cfg.seed)?;
            let opts = OnlineOptions {
                record_time: cfg.record_time,
                track_full: cfg.track_full,
                ..OnlineOptions::default()
            };
            let run: OnlineRun = match (cfg.algorithm, cfg.fixed_step) {
                (Algorithm::Oupgm, false) => upgm_run(problem, &order, x0.view(), cfg.l0, eps, &opts)?,
                (Algorithm::Oudgm, false) => udgm_run(problem, &order, x0.view(), cfg.l0, eps, &opts)?,
                (alg, true) => {
                    let hc = built
                        .holder
                        .ok_or_else(|| invalid("Mv", "fixed steps need Hölder constants"))?;
                    if alg == Algorithm::Oupgm {
                        upgm_fixed_step_run(problem, &order, x0.view(), hc, eps, &opts)?
                    } else {
                        udgm_fixed_step_run(problem, &order, x0.view(), hc, eps, &opts)?
                    }
                }
                _ => unreachable!(),
            };
            let report = evaluate_regret(
                &run.trace,
                problem,
                &order,
                x_star.view(),
                RegretInputs {
                    holder: built.holder,
                    model_minima: (!run.model_minima.is_empty()).then_some(run.model_minima.as_slice()),
                },
            )?;
            let curve = online_curve(&run.trace, problem, &order, x_star.view())?;
            (run.trace, run.xbar, Some(report), None, curve)
        }
        Algorithm::Sug => {
            let m = cfg.m.expect("validated");
            let mu_h = problem.regularizer().strong_convexity();
            let dist0_sq = match cfg.dist0_sq {
                Some(d) => d,
                None => {
                    let d = &x_star - &x0;
                    d.dot(&d)
                }
            };
            let hypothesis = built.holder.map(|hc| modulus_hypothesis_holds(hc, m, eps)).transpose()?;
            if hypothesis == Some(false) {
                warnings.push(format!(
                    "M = {m} does not exceed the surrogate threshold for the stream constants; \
                     the surrogates are not upper models and the bound need not hold"
                ));
            }
            if mu_h <= 0.0 {
                warnings.push("h is not strongly convex; bound checks skipped".into());
            }
            let sc = SugConfig {
                modulus: m,
                eps,
                seed: cfg.seed,
                max_iters: cfg.horizon,
                stop_threshold: cfg.stop,
                dist0_sq: Some(dist0_sq),
                record_time: cfg.record_time,
            };
            if cfg.stop.is_some() && mu_h <= 0.0 {
                return Err(invalid("stop", "the bound-based stop rule needs a strongly convex h"));
            }
            let run = sug_run(problem, x0.view(), &sc)?;
            let n = problem.len();
            let mut curve = Vec::with_capacity(run.objective.len());
            let mut dominates = true;
            for (k, f) in run.objective.iter().enumerate().skip(1) {
                let bound = if mu_h > 0.0 {
                    sug_bound(k, m, mu_h, n, eps, dist0_sq)?.finite()
                } else {
                    None
                };
                let gap = f - reference.f;
                if let Some(b) = bound {
                    dominates &= within_slack(gap, b);
                }
                curve.push((k, gap, bound));
            }
            let rho = (mu_h > 0.0).then(|| contraction(m, mu_h, n)).transpose()?;
            if let Some(r) = rho.filter(|r| *r >= 1.0) {
                warnings.push(format!("rho = {r} is not below 1; the bound is vacuous"));
            }
            let finite_bound = rho.is_some_and(|r| r < 1.0);
            let report = SugReport {
                modulus: m,
                mu_h,
                n,
                rho,
                dist0_sq,
                iterations: run.objective.len() - 1,
                hypothesis_satisfied: hypothesis,
                iteration_estimate: (mu_h > 0.0)
                    .then(|| sug_iteration_estimate(eps, m, mu_h, n, dist0_sq))
                    .transpose()?,
                final_gap: run.objective.last().copied().unwrap_or(f64::NAN) - reference.f,
                bound_dominates: finite_bound.then_some(dominates),
            };
            (run.trace, run.x_final, None, Some(report), curve)
        }
        Algorithm::Batch => {
            let (r, rows) = reference_traced(problem, x0.view(), eps, REFERENCE_MAX_ITERS, cfg.record_time)?;
            let mut trace = RunTrace::new(TraceMeta {
                algorithm: "batch".into(),
                eps,
                x0: x0.to_vec(),
                ..TraceMeta::default()
            });
            let curve = rows
                .iter()
                .map(|row| (row.t + 1, row.f_full.unwrap_or(f64::NAN) - reference.f, None))
                .collect();
            trace.rows = rows;
            (trace, Array1::from(r.x), None, None, curve)
        }
    };
    trace.meta.seed = Some(cfg.seed);
    trace.meta.problem = descriptor;
    trace.meta.order = match cfg.algorithm {
        Algorithm::Sug => "uniform".into(),
        Algorithm::Batch => "full".into(),
        _ => cfg.order.to_string(),
    };
    if cfg.fixed_step {
        trace.meta.l0 = built.holder.map(|h| h.gamma(eps)).transpose()?.unwrap_or(trace.meta.l0);
    }
    for w in &warnings {
        eprintln!("warning: {w}");
    }
    Ok(Outcome {
        trace,
        report: ExperimentReport {
            config: cfg.clone(),
            eps,
            holder: built.holder,
            f_star: reference.f,
            x_star: reference.x,
            x_out: x_out.to_vec(),
            regret,
            sug,
            warnings,
        },
        curve,
    })
}

/// Cumulative weighted theorem sides per prefix of an online trace.
fn online_curve(
    trace: &RunTrace,
    problem: &CompositeProblem,
    samples: &[usize],
    x_star: ArrayView1<f64>,
) -> Result<Vec<(usize, f64, Option<f64>)>> {
    let x0 = Array1::from(trace.meta.x0.clone());
    let r0 = problem.geometry().bregman(x0.view(), x_star)?;
    let eps = trace.meta.eps;
    let dual = trace.meta.algorithm.starts_with("oudgm");
    let (mut lhs, mut s) = (0.0, 0.0);
    let mut out = Vec::with_capacity(trace.len());
    for (row, &i) in trace.rows.iter().zip(samples) {
        let fstar = per_sample_value(problem, i, x_star)?;
        let w = 1.0 / row.l_next;
        s += w;
        if dual {
            lhs += 0.5 * w * (row.f_gt_xt.unwrap_or(f64::NAN) - fstar);
            out.push((row.t + 1, lhs, Some(s * eps / 4.0 + r0)));
        } else {
            lhs += w * (row.f_gt_xnext.unwrap_or(f64::NAN) - fstar);
            out.push((row.t + 1, lhs, Some(0.5 * eps * s + 2.0 * r0)));
        }
    }
    Ok(out)
}

pub fn write_bound_curve(path: &Path, curve: &[(usize, f64, Option<f64>)]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(BOUND_CURVE_HEADER)?;
    for (k, gap, bound) in curve {
        w.write_record([k.to_string(), format!("{gap:?}"), bound.map(|b| format!("{b:?}")).unwrap_or_default()])?;
    }
    w.flush()?;
    Ok(())
}

/// Runs `cfg` and writes `trace.csv`, `report.json` and `bound_curve.csv` into `out`.
pub fn run_experiment(cfg: &ExperimentConfig, out: &Path) -> Result<Artifacts> {
    let outcome = execute(cfg)?;
    fs::create_dir_all(out)?;
    let trace = out.join("trace.csv");
    let report = out.join("report.json");
    let bound_curve = out.join("bound_curve.csv");
    outcome.trace.write_csv(fs::File::create(&trace)?)?;
    let json = serde_json::to_string_pretty(&outcome.report).map_err(|e| Error::MalformedTrace(e.to_string()))?;
    fs::write(&report, json + "\n")?;
    write_bound_curve(&bound_curve, &outcome.curve)?;
    Ok(Artifacts {
        trace,
        report,
        bound_curve,
        summary: outcome.report,
    })
}

/// Re-evaluates the bounds of a saved online trace.
///
/// The config stored in the accompanying report rebuilds the problem and the
/// visited sample sequence.
pub fn check_trace(trace: &RunTrace, cfg: &ExperimentConfig) -> Result<RegretReport> {
    if !matches!(cfg.algorithm, Algorithm::Oupgm | Algorithm::Oudgm) {
        return Err(Error::TraceMismatch(format!("bounds are checked for online runs, not {}", cfg.algorithm)));
    }
    let built = cfg.build_problem()?;
    let order = sample_order(cfg.order, built.problem.len(), cfg.horizon, cfg.seed)?;
    let reference = reference_solution(&built.problem, REFERENCE_TOL)?;
    let x_star = Array1::from(reference.x);
    evaluate_regret(
        trace,
        &built.problem,
        &order,
        x_star.view(),
        RegretInputs {
            holder: built.holder,
            model_minima: None,
        },
    )
}
