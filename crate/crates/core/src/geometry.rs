//! Prox-functions and the Bregman distances they induce.
//!
//! Only the squared-Euclidean prox-function `d(x) = ½‖x − c‖²` is provided.
//! Its Bregman distance is `ξ(x, y) = ½‖x − y‖²`, independent of the center,
//! and every norm in the crate (including the dual norm) is Euclidean.

use ndarray::{Array1, ArrayView1};

use crate::error::{check_dim, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ProxKind {
    SquaredEuclidean,
}

/// Hölder data of `∇d`: `‖∇d(x) − ∇d(y)‖ ≤ modulus · ‖x − y‖^degree`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GeometrySmoothness {
    pub degree: f64,
    pub modulus: f64,
}

/// A differentiable, 1-strongly convex function with minimum value 0 attained
/// at `center`.
#[derive(Clone, Debug, PartialEq)]
pub struct ProxFunction {
    center: Array1<f64>,
    kind: ProxKind,
}

impl ProxFunction {
    pub fn squared_euclidean(center: Array1<f64>) -> Self {
        ProxFunction {
            center,
            kind: ProxKind::SquaredEuclidean,
        }
    }

    /// Squared-Euclidean prox-function centered at the origin.
    pub fn origin(dimension: usize) -> Self {
        Self::squared_euclidean(Array1::zeros(dimension))
    }

    pub fn dimension(&self) -> usize {
        self.center.len()
    }

    pub fn center(&self) -> ArrayView1<'_, f64> {
        self.center.view()
    }

    pub fn kind(&self) -> ProxKind {
        self.kind
    }

    /// Same geometry, re-centered at `center`.
    pub fn recentered(&self, center: Array1<f64>) -> Self {
        ProxFunction {
            center,
            kind: self.kind,
        }
    }

    pub fn smoothness(&self) -> GeometrySmoothness {
        match self.kind {
            ProxKind::SquaredEuclidean => GeometrySmoothness {
                degree: 1.0,
                modulus: 1.0,
            },
        }
    }

    /// `d(x)`.
    pub fn value(&self, x: ArrayView1<f64>) -> Result<f64> {
        check_dim(self.dimension(), x.len())?;
        Ok(self.value_unchecked(x))
    }

    /// `∇d(x)`.
    pub fn gradient(&self, x: ArrayView1<f64>) -> Result<Array1<f64>> {
        check_dim(self.dimension(), x.len())?;
        Ok(self.gradient_unchecked(x))
    }

    /// `ξ(x, y) = d(y) − d(x) − ⟨∇d(x), y − x⟩`.
    pub fn bregman(&self, x: ArrayView1<f64>, y: ArrayView1<f64>) -> Result<f64> {
        check_dim(self.dimension(), x.len())?;
        check_dim(self.dimension(), y.len())?;
        Ok(self.bregman_unchecked(x, y))
    }

    /// `∇_y ξ(x, y) = ∇d(y) − ∇d(x)`.
    pub fn bregman_grad_y(&self, x: ArrayView1<f64>, y: ArrayView1<f64>) -> Result<Array1<f64>> {
        check_dim(self.dimension(), x.len())?;
        check_dim(self.dimension(), y.len())?;
        Ok(self.gradient_unchecked(y) - self.gradient_unchecked(x))
    }

    pub(crate) fn value_unchecked(&self, x: ArrayView1<f64>) -> f64 {
        match self.kind {
            ProxKind::SquaredEuclidean => {
                0.5 * x
                    .iter()
                    .zip(self.center.iter())
                    .map(|(a, c)| (a - c) * (a - c))
                    .sum::<f64>()
            }
        }
    }

    pub(crate) fn gradient_unchecked(&self, x: ArrayView1<f64>) -> Array1<f64> {
        match self.kind {
            ProxKind::SquaredEuclidean => &x - &self.center,
        }
    }

    pub(crate) fn bregman_unchecked(&self, x: ArrayView1<f64>, y: ArrayView1<f64>) -> f64 {
        match self.kind {
            // The generic expression cancels catastrophically far from the
            // center; the closed form is exact.
            ProxKind::SquaredEuclidean => {
                0.5 * x
                    .iter()
                    .zip(y.iter())
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
            }
        }
    }
}

pub fn prox_value(d: &ProxFunction, x: ArrayView1<f64>) -> Result<f64> {
    d.value(x)
}

pub fn bregman_distance(d: &ProxFunction, x: ArrayView1<f64>, y: ArrayView1<f64>) -> Result<f64> {
    d.bregman(x, y)
}

pub fn bregman_distance_grad_y(
    d: &ProxFunction,
    x: ArrayView1<f64>,
    y: ArrayView1<f64>,
) -> Result<Array1<f64>> {
    d.bregman_grad_y(x, y)
}
