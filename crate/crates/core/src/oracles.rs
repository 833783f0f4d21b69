//! Problem abstraction for `f(x) = (1/n) Σ g_i(x) + h(x)`.

use std::fmt;
use std::sync::Arc;

use ndarray::{Array1, ArrayView1};

use crate::bregman::soft_threshold_unchecked;
use crate::error::{check_dim, Error, Result};
use crate::geometry::ProxFunction;

/// Hölder constants `(v, M_v)` with `‖∇g(x) − ∇g(y)‖ ≤ M_v ‖x − y‖^v`.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct HolderConstants {
    pub degree: f64,
    pub modulus: f64,
}

impl HolderConstants {
    pub fn new(degree: f64, modulus: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&degree) {
            return Err(Error::InvalidParameter {
                name: "v",
                reason: format!("Hölder degree must lie in [0, 1], got {degree}"),
            });
        }
        crate::error::positive("Mv", modulus)?;
        Ok(HolderConstants { degree, modulus })
    }

    /// `γ(M_v, ε)` for these constants.
    pub fn gamma(&self, eps: f64) -> Result<f64> {
        crate::bregman::gamma(self.modulus, self.degree, eps)
    }
}

/// One loss term `g_t` of the finite sum.
///
/// `subgradient` must be a deterministic selection from `∂g(x)`; the Hölder
/// constants are metadata supplied by whoever built the oracle and are never
/// read by the adaptive methods.
pub trait ComponentOracle: Send + Sync + fmt::Debug {
    fn dimension(&self) -> usize;
    fn value(&self, x: ArrayView1<f64>) -> f64;
    fn subgradient(&self, x: ArrayView1<f64>) -> Array1<f64>;
    fn holder(&self) -> HolderConstants;
}

/// A user-provided convex regularizer without a known minimizer rule.
pub trait CustomRegularizer: Send + Sync + fmt::Debug {
    fn value(&self, x: ArrayView1<f64>) -> f64;
    fn subgradient(&self, x: ArrayView1<f64>) -> Array1<f64>;
    fn strong_convexity(&self) -> f64 {
        0.0
    }
}

/// The regularizer `h`.
#[derive(Clone, Debug)]
pub enum Regularizer {
    Zero,
    /// `weight · ‖x‖₁`
    L1 { weight: f64 },
    /// `l1 · ‖x‖₁ + (l2 / 2) · ‖x‖²`, strongly convex with modulus `l2`.
    ElasticNet { l1: f64, l2: f64 },
    Custom(Arc<dyn CustomRegularizer>),
}

impl Regularizer {
    /// Builds the cheapest structure matching `(l1, l2)`.
    pub fn from_weights(l1: f64, l2: f64) -> Result<Self> {
        if !(l1 >= 0.0 && l1.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "mu",
                reason: format!("l1 weight must be nonnegative, got {l1}"),
            });
        }
        if !(l2 >= 0.0 && l2.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "ridge",
                reason: format!("ridge weight must be nonnegative, got {l2}"),
            });
        }
        Ok(match (l1 > 0.0, l2 > 0.0) {
            (false, false) => Regularizer::Zero,
            (true, false) => Regularizer::L1 { weight: l1 },
            _ => Regularizer::ElasticNet { l1, l2 },
        })
    }

    pub fn value(&self, x: ArrayView1<f64>) -> f64 {
        match self {
            Regularizer::Zero => 0.0,
            Regularizer::L1 { weight } => weight * l1_norm(x),
            Regularizer::ElasticNet { l1, l2 } => l1 * l1_norm(x) + 0.5 * l2 * x.dot(&x),
            Regularizer::Custom(c) => c.value(x),
        }
    }

    /// Subgradient with `sign(0) = 0`.
    pub fn subgradient(&self, x: ArrayView1<f64>) -> Array1<f64> {
        match self {
            Regularizer::Zero => Array1::zeros(x.len()),
            Regularizer::L1 { weight } => x.mapv(|v| weight * sign0(v)),
            Regularizer::ElasticNet { l1, l2 } => x.mapv(|v| l1 * sign0(v) + l2 * v),
            Regularizer::Custom(c) => c.subgradient(x),
        }
    }

    /// `μ_h`.
    pub fn strong_convexity(&self) -> f64 {
        match self {
            Regularizer::Zero | Regularizer::L1 { .. } => 0.0,
            Regularizer::ElasticNet { l2, .. } => *l2,
            Regularizer::Custom(c) => c.strong_convexity(),
        }
    }

    pub fn has_minimizer_rule(&self) -> bool {
        !matches!(self, Regularizer::Custom(_))
    }

    /// `argmin_y  scale · h(y) + ½‖y − z‖²`.
    pub fn prox(&self, z: ArrayView1<f64>, scale: f64) -> Result<Array1<f64>> {
        if !(scale >= 0.0) {
            return Err(Error::InvalidParameter {
                name: "scale",
                reason: format!("prox scale must be nonnegative, got {scale}"),
            });
        }
        match self {
            Regularizer::Zero => Ok(z.to_owned()),
            Regularizer::L1 { weight } => Ok(soft_threshold_unchecked(z, scale * weight)),
            Regularizer::ElasticNet { l1, l2 } => {
                Ok(soft_threshold_unchecked(z, scale * l1) / (1.0 + scale * l2))
            }
            Regularizer::Custom(_) => Err(Error::Unsupported(
                "custom regularizer has no closed-form minimizer".into(),
            )),
        }
    }
}

fn l1_norm(x: ArrayView1<f64>) -> f64 {
    x.iter().map(|v| v.abs()).sum()
}

pub(crate) fn sign0(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// A finite-sum composite problem together with its geometry.
#[derive(Clone, Debug)]
pub struct CompositeProblem {
    components: Vec<Arc<dyn ComponentOracle>>,
    regularizer: Regularizer,
    geometry: ProxFunction,
    descriptor: String,
}

impl CompositeProblem {
    pub fn new(
        components: Vec<Arc<dyn ComponentOracle>>,
        regularizer: Regularizer,
        geometry: ProxFunction,
    ) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::EmptyProblem);
        }
        let p = geometry.dimension();
        for c in &components {
            check_dim(p, c.dimension())?;
        }
        Ok(CompositeProblem {
            components,
            regularizer,
            geometry,
            descriptor: String::from("custom"),
        })
    }

    pub fn with_descriptor(mut self, descriptor: impl Into<String>) -> Self {
        self.descriptor = descriptor.into();
        self
    }

    pub fn descriptor(&self) -> &str {
        &self.descriptor
    }

    pub fn dimension(&self) -> usize {
        self.geometry.dimension()
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    pub fn components(&self) -> &[Arc<dyn ComponentOracle>] {
        &self.components
    }

    pub fn component(&self, t: usize) -> Result<&dyn ComponentOracle> {
        self.components
            .get(t)
            .map(|c| c.as_ref())
            .ok_or(Error::IndexOutOfRange {
                index: t,
                len: self.components.len(),
            })
    }

    pub fn regularizer(&self) -> &Regularizer {
        &self.regularizer
    }

    pub fn geometry(&self) -> &ProxFunction {
        &self.geometry
    }

    /// Stream-level Hölder constants: the shared degree and the largest
    /// modulus. `None` when components disagree on the degree.
    pub fn stream_holder(&self) -> Option<HolderConstants> {
        let first = self.components[0].holder();
        let mut modulus = first.modulus;
        for c in &self.components[1..] {
            let h = c.holder();
            if h.degree != first.degree {
                return None;
            }
            modulus = modulus.max(h.modulus);
        }
        Some(HolderConstants {
            degree: first.degree,
            modulus,
        })
    }

    /// `g(x) = (1/n) Σ g_i(x)`.
    pub fn smooth_value(&self, x: ArrayView1<f64>) -> Result<f64> {
        check_dim(self.dimension(), x.len())?;
        Ok(self.smooth_value_unchecked(x))
    }

    pub(crate) fn smooth_value_unchecked(&self, x: ArrayView1<f64>) -> f64 {
        let n = self.components.len() as f64;
        self.components.iter().map(|c| c.value(x)).sum::<f64>() / n
    }

    /// `∇g(x) = (1/n) Σ ∇g_i(x)`.
    pub fn smooth_gradient(&self, x: ArrayView1<f64>) -> Result<Array1<f64>> {
        check_dim(self.dimension(), x.len())?;
        let mut acc = Array1::zeros(self.dimension());
        for c in &self.components {
            acc += &c.subgradient(x);
        }
        acc /= self.components.len() as f64;
        Ok(acc)
    }
}

/// `f(x) = (1/n) Σ g_i(x) + h(x)`.
pub fn composite_value(p: &CompositeProblem, x: ArrayView1<f64>) -> Result<f64> {
    Ok(p.smooth_value(x)? + p.regularizer.value(x))
}

/// `f_{g_t}(x) = g_t(x) + h(x)`; the regularizer is charged every round.
pub fn per_sample_value(p: &CompositeProblem, t: usize, x: ArrayView1<f64>) -> Result<f64> {
    let c = p.component(t)?;
    check_dim(p.dimension(), x.len())?;
    Ok(c.value(x) + p.regularizer.value(x))
}

pub fn component_subgradient(
    p: &CompositeProblem,
    t: usize,
    x: ArrayView1<f64>,
) -> Result<Array1<f64>> {
    let c = p.component(t)?;
    check_dim(p.dimension(), x.len())?;
    Ok(c.subgradient(x))
}
