//! Shared driver for the online methods.

use std::time::Instant;

use ndarray::{Array1, ArrayView1};

use crate::bregman::DEFAULT_MAX_DOUBLINGS;
use crate::error::{check_dim, positive, Error, Result};
use crate::oracles::CompositeProblem;
use crate::trace::{RunTrace, TraceMeta, TraceRow};

#[derive(Clone, Copy, Debug)]
pub struct OnlineOptions {
    pub max_doublings: u32,
    /// Lower bound applied to `L_t` before each line search. Without it a
    /// stream of zero gradients halves `L_t` until it underflows.
    pub min_l: f64,
    /// Record `f(x_{t+1})` on every row. Costs a pass over all components.
    pub track_full: bool,
    /// Keep `x_0, …, x_{T+1}` in the run output.
    pub keep_iterates: bool,
    /// Write `0` instead of wall-clock time so traces are byte-reproducible.
    pub record_time: bool,
}

impl Default for OnlineOptions {
    fn default() -> Self {
        OnlineOptions {
            max_doublings: DEFAULT_MAX_DOUBLINGS,
            min_l: 1e-12,
            track_full: false,
            keep_iterates: false,
            record_time: true,
        }
    }
}

/// What one online step reports back to the driver.
#[derive(Clone, Debug, PartialEq)]
pub struct StepRecord {
    pub doublings: u32,
    pub l_next: f64,
    pub f_gt_xt: f64,
    pub f_gt_xnext: f64,
    /// `f_{g_t}` at the Bregman point `y_t`, when the method has one distinct
    /// from `x_{t+1}`.
    pub f_gt_yt: Option<f64>,
    /// `min φ_{t+1}` for model-based methods.
    pub model_min: Option<f64>,
}

/// Result of a full online run.
#[derive(Clone, Debug)]
pub struct OnlineRun {
    /// `x̄ = (1/S_T) Σ_{t=1}^{T+1} (1/L_t) x_t`.
    pub xbar: Array1<f64>,
    pub x_final: Array1<f64>,
    pub trace: RunTrace,
    /// `min φ_{t+1}` per row (dual method only, empty otherwise).
    pub model_minima: Vec<f64>,
    pub iterates: Option<Vec<Array1<f64>>>,
}

/// Running `S = Σ 1/L_t` and `Σ (1/L_t) x_t`.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightedAverage {
    pub weight_sum: f64,
    pub weighted_x: Array1<f64>,
}

impl WeightedAverage {
    pub fn new(dimension: usize) -> Self {
        WeightedAverage {
            weight_sum: 0.0,
            weighted_x: Array1::zeros(dimension),
        }
    }

    pub fn push(&mut self, l: f64, x: ArrayView1<f64>) {
        let w = 1.0 / l;
        self.weight_sum += w;
        self.weighted_x.scaled_add(w, &x);
    }

    pub fn average(&self) -> Option<Array1<f64>> {
        (self.weight_sum > 0.0).then(|| &self.weighted_x / self.weight_sum)
    }
}

pub(crate) fn validate_run(problem: &CompositeProblem, order: &[usize], x0: ArrayView1<f64>, eps: f64) -> Result<()> {
    positive("eps", eps)?;
    check_dim(problem.dimension(), x0.len())?;
    if let Some(&bad) = order.iter().find(|&&i| i >= problem.len()) {
        return Err(Error::IndexOutOfRange {
            index: bad,
            len: problem.len(),
        });
    }
    Ok(())
}

/// Drives `step` over `order`, collecting the trace.
///
/// `step(t, component_index)` advances the method's state and returns the
/// row data plus the new iterate.
pub(crate) fn drive<F>(
    problem: &CompositeProblem,
    order: &[usize],
    x0: ArrayView1<f64>,
    meta: TraceMeta,
    opts: &OnlineOptions,
    mut step: F,
) -> Result<OnlineRun>
where
    F: FnMut(usize, usize) -> Result<(StepRecord, Array1<f64>)>,
{
    let start = Instant::now();
    let mut trace = RunTrace::new(meta);
    trace.rows.reserve(order.len());
    let mut avg = WeightedAverage::new(problem.dimension());
    let mut model_minima = Vec::new();
    let mut iterates = opts.keep_iterates.then(|| vec![x0.to_owned()]);
    let mut x_final = x0.to_owned();
    for (t, &i) in order.iter().enumerate() {
        let (rec, x_next) = step(t, i)?;
        avg.push(rec.l_next, x_next.view());
        let f_full = if opts.track_full {
            Some(crate::oracles::composite_value(problem, x_next.view())?)
        } else {
            None
        };
        if let Some(m) = rec.model_min {
            model_minima.push(m);
        }
        trace.rows.push(TraceRow {
            t,
            doublings: rec.doublings,
            l_next: rec.l_next,
            f_gt_xt: Some(rec.f_gt_xt),
            f_gt_xnext: Some(rec.f_gt_xnext),
            f_gt_yt: rec.f_gt_yt,
            f_full,
            elapsed_s: if opts.record_time {
                start.elapsed().as_secs_f64()
            } else {
                0.0
            },
        });
        if let Some(it) = iterates.as_mut() {
            it.push(x_next.clone());
        }
        x_final = x_next;
    }
    let xbar = avg.average().unwrap_or_else(|| x0.to_owned());
    Ok(OnlineRun {
        xbar,
        x_final,
        trace,
        model_minima,
        iterates,
    })
}
