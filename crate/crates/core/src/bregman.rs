//! Bregman mapping, the effective modulus `γ(M_v, ε)` and the doubling line
//! search shared by the online methods.
//!
//! For a point `x`, a (sub)gradient `∇g(x)` and a modulus `M`, the model
//!
//! ```text
//! ψ_{M,g}(x; y) = g(x) + ⟨∇g(x), y − x⟩ + M ξ(y, x) + h(y)
//! ```
//!
//! is `M`-strongly convex in `y`. Its minimizer is the Bregman mapping
//! `𝔅_{M,g}(x)` and its minimum value is `ψ*_{M,g}(x)`.

use ndarray::{Array1, ArrayView1};

use crate::error::{check_dim, positive, Error, Result};
use crate::geometry::{ProxFunction, ProxKind};
use crate::oracles::{sign0, ComponentOracle, Regularizer};

/// Line-search cap used when callers do not pick one.
pub const DEFAULT_MAX_DOUBLINGS: u32 = 64;

/// `γ(M_v, ε) = (1/ε)^((1−v)/(1+v)) · M_v^(2/(1+v))`.
pub fn gamma(mv: f64, v: f64, eps: f64) -> Result<f64> {
    positive("Mv", mv)?;
    positive("eps", eps)?;
    if !(0.0..=1.0).contains(&v) {
        return Err(Error::InvalidParameter {
            name: "v",
            reason: format!("Hölder degree must lie in [0, 1], got {v}"),
        });
    }
    Ok((1.0 / eps).powf((1.0 - v) / (1.0 + v)) * mv.powf(2.0 / (1.0 + v)))
}

/// Componentwise `sign(z)·max(|z| − τ, 0)`.
pub fn soft_threshold(z: ArrayView1<f64>, tau: f64) -> Result<Array1<f64>> {
    if !(tau >= 0.0) {
        return Err(Error::InvalidParameter {
            name: "tau",
            reason: format!("threshold must be nonnegative, got {tau}"),
        });
    }
    Ok(soft_threshold_unchecked(z, tau))
}

pub(crate) fn soft_threshold_unchecked(z: ArrayView1<f64>, tau: f64) -> Array1<f64> {
    z.mapv(|v| sign0(v) * (v.abs() - tau).max(0.0))
}

/// Everything needed to evaluate the Bregman mapping at one point.
#[derive(Clone, Copy, Debug)]
pub struct BregmanMapInput<'a> {
    pub base: ArrayView1<'a, f64>,
    pub gradient: ArrayView1<'a, f64>,
    pub value: f64,
    pub modulus: f64,
    pub regularizer: &'a Regularizer,
    pub geometry: &'a ProxFunction,
}

impl<'a> BregmanMapInput<'a> {
    fn validate(&self) -> Result<()> {
        positive("M", self.modulus)?;
        let p = self.geometry.dimension();
        check_dim(p, self.base.len())?;
        check_dim(p, self.gradient.len())
    }

    /// `ψ_{M,g}(x; y)`.
    pub fn model(&self, y: ArrayView1<f64>) -> f64 {
        self.value
            + self.gradient.dot(&(&y - &self.base))
            + self.modulus * self.geometry.bregman_unchecked(y, self.base)
            + self.regularizer.value(y)
    }
}

/// Minimizer of the model and the model's minimum value.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelValue {
    pub minimizer: Array1<f64>,
    pub psi_star: f64,
}

/// `𝔅_{M,g}(x)` together with `ψ*_{M,g}(x)`.
///
/// Structured regularizers use the closed form; custom ones fall back to
/// [`bregman_map_numeric`].
pub fn bregman_map(input: &BregmanMapInput) -> Result<ModelValue> {
    input.validate()?;
    if !input.regularizer.has_minimizer_rule() {
        return bregman_map_numeric(input, &NumericOptions::default());
    }
    let minimizer = match input.geometry.kind() {
        ProxKind::SquaredEuclidean => {
            let step = &input.base - &(&input.gradient / input.modulus);
            input.regularizer.prox(step.view(), 1.0 / input.modulus)?
        }
    };
    let psi_star = input.model(minimizer.view());
    Ok(ModelValue { minimizer, psi_star })
}

#[derive(Clone, Copy, Debug)]
pub struct NumericOptions {
    pub max_iters: usize,
    pub tolerance: f64,
}

impl Default for NumericOptions {
    fn default() -> Self {
        NumericOptions {
            max_iters: 10_000,
            tolerance: 1e-10,
        }
    }
}

/// Iterative minimization of the Bregman model.
///
/// Proximal-gradient steps of length `1/M` on `⟨∇g(x), y⟩ + M ξ(y, x)`, using
/// the prox of `h` when one exists and folding a subgradient of `h` into the
/// smooth part otherwise. Stops when `M·‖y_{k+1} − y_k‖` drops below the
/// tolerance.
pub fn bregman_map_numeric(input: &BregmanMapInput, opts: &NumericOptions) -> Result<ModelValue> {
    input.validate()?;
    let m = input.modulus;
    let has_prox = input.regularizer.has_minimizer_rule();
    let mut y = input.base.to_owned();
    let mut residual = f64::INFINITY;
    for _ in 0..opts.max_iters {
        // ξ is symmetric for the shipped geometry, so ∇_y ξ(y, x) = ∇d(y) − ∇d(x).
        let mut smooth_grad =
            &input.gradient + &(input.geometry.bregman_grad_y(input.base, y.view())? * m);
        let next = if has_prox {
            let z = &y - &(&smooth_grad / m);
            input.regularizer.prox(z.view(), 1.0 / m)?
        } else {
            smooth_grad += &input.regularizer.subgradient(y.view());
            &y - &(&smooth_grad / m)
        };
        let diff = &next - &y;
        residual = m * diff.dot(&diff).sqrt();
        y = next;
        if residual <= opts.tolerance {
            let psi_star = input.model(y.view());
            return Ok(ModelValue { minimizer: y, psi_star });
        }
    }
    Err(Error::SolverFailure {
        iterations: opts.max_iters,
        residual,
    })
}

/// Outcome of a doubling line search.
#[derive(Clone, Debug)]
pub struct Backtrack<C> {
    /// Smallest `i ≥ 0` whose trial modulus `2^i·L` was accepted.
    pub doublings: u32,
    /// The accepted modulus `2^i·L`.
    pub accepted_modulus: f64,
    /// `2^(i−1)·L`.
    pub next_l: f64,
    pub candidate: C,
}

/// Tries `M = L, 2L, 4L, …` until `trial(M)` accepts.
pub fn backtrack<C, F>(initial_l: f64, max_doublings: u32, mut trial: F) -> Result<Backtrack<C>>
where
    F: FnMut(f64) -> Result<(C, bool)>,
{
    positive("L", initial_l)?;
    let mut modulus = initial_l;
    for i in 0..=max_doublings {
        if !modulus.is_finite() {
            break;
        }
        let (candidate, accept) = trial(modulus)?;
        if accept {
            return Ok(Backtrack {
                doublings: i,
                accepted_modulus: modulus,
                next_l: 0.5 * modulus,
                candidate,
            });
        }
        modulus *= 2.0;
    }
    Err(Error::BacktrackOverflow {
        max_doublings,
        last_modulus: modulus,
    })
}

/// `g(x̂) ≤ g(x) + ⟨∇g(x), x̂ − x⟩ + M ξ(x̂, x) + ε/2`.
///
/// `h(x̂)` appears on both sides of the acceptance test of the primal method
/// and is omitted.
pub fn check_descent_condition(
    gt: &dyn ComponentOracle,
    x: ArrayView1<f64>,
    xhat: ArrayView1<f64>,
    modulus: f64,
    eps: f64,
    geometry: &ProxFunction,
) -> bool {
    let gx = gt.value(x);
    let grad = gt.subgradient(x);
    descent_holds(gt.value(xhat), gx, grad.view(), x, xhat, modulus, eps, geometry)
}

#[allow(clippy::too_many_arguments)]
pub(crate) fn descent_holds(
    g_xhat: f64,
    g_x: f64,
    grad: ArrayView1<f64>,
    x: ArrayView1<f64>,
    xhat: ArrayView1<f64>,
    modulus: f64,
    eps: f64,
    geometry: &ProxFunction,
) -> bool {
    let rhs = g_x + grad.dot(&(&xhat - &x)) + modulus * geometry.bregman_unchecked(xhat, x) + 0.5 * eps;
    g_xhat <= rhs
}
