//! Online universal dual gradient method.
//!
//! The method keeps an aggregated model
//! `φ_t(x) = ξ(x_0, x) + ⟨s, x⟩ + A·h(x) + c` built from linearizations of the
//! components seen so far, and moves to its minimizer after each round. The
//! line search certifies the Bregman step `y_t = 𝔅_{M, g_t}(x_t)`; the
//! accepted modulus `M = 2L_{t+1}` then fixes the new model coefficient
//! `1/M`.

use ndarray::{Array1, ArrayView1};

use crate::bregman::{backtrack, bregman_map, BregmanMapInput};
use crate::error::{check_dim, positive, Error, Result};
use crate::geometry::ProxFunction;
use crate::online::{drive, validate_run, OnlineOptions, OnlineRun, StepRecord, WeightedAverage};
use crate::oracles::{ComponentOracle, CompositeProblem, HolderConstants, Regularizer};
use crate::trace::TraceMeta;

/// `φ(x) = ξ(x_0, x) + ⟨s, x⟩ + A·h(x) + c`.
#[derive(Clone, Debug, PartialEq)]
pub struct DualModel {
    pub s: Array1<f64>,
    pub a: f64,
    pub c: f64,
    pub anchor: Array1<f64>,
}

impl DualModel {
    pub fn new(anchor: Array1<f64>) -> Self {
        DualModel {
            s: Array1::zeros(anchor.len()),
            a: 0.0,
            c: 0.0,
            anchor,
        }
    }

    pub fn dimension(&self) -> usize {
        self.anchor.len()
    }

    pub fn value(&self, x: ArrayView1<f64>, h: &Regularizer) -> Result<f64> {
        check_dim(self.dimension(), x.len())?;
        let d = &x - &self.anchor;
        Ok(0.5 * d.dot(&d) + self.s.dot(&x) + self.a * h.value(x) + self.c)
    }

    /// Adds `coeff·[g(x) + ⟨grad, · − x⟩ + h(·)]`.
    pub fn fold(&mut self, coeff: f64, g_x: f64, grad: ArrayView1<f64>, x: ArrayView1<f64>) -> Result<()> {
        if !(coeff >= 0.0 && coeff.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "coeff",
                reason: format!("model coefficient must be nonnegative, got {coeff}"),
            });
        }
        check_dim(self.dimension(), grad.len())?;
        check_dim(self.dimension(), x.len())?;
        self.s.scaled_add(coeff, &grad);
        self.a += coeff;
        self.c += coeff * (g_x - grad.dot(&x));
        Ok(())
    }
}

/// Minimizer of `φ(x) + extra_coeff·[⟨extra_grad, x⟩ + h(x)]`.
///
/// Constant terms do not move the minimizer and are left out.
pub fn model_argmin(
    model: &DualModel,
    extra_coeff: f64,
    extra_grad: ArrayView1<f64>,
    h: &Regularizer,
) -> Result<Array1<f64>> {
    if !(extra_coeff >= 0.0) {
        return Err(Error::InvalidParameter {
            name: "extra_coeff",
            reason: format!("must be nonnegative, got {extra_coeff}"),
        });
    }
    check_dim(model.dimension(), extra_grad.len())?;
    let mut z = &model.anchor - &model.s;
    if extra_coeff > 0.0 {
        z.scaled_add(-extra_coeff, &extra_grad);
    }
    h.prox(z.view(), model.a + extra_coeff)
}

#[derive(Clone, Debug, PartialEq)]
pub struct UdgmState {
    pub x: Array1<f64>,
    pub l: f64,
    pub t: usize,
    pub model: DualModel,
    pub average: WeightedAverage,
}

impl UdgmState {
    /// Fresh state with `φ_0 = ξ(x_0, ·)`.
    pub fn new(x0: Array1<f64>, l0: f64) -> Result<Self> {
        positive("L0", l0)?;
        let p = x0.len();
        Ok(UdgmState {
            model: DualModel::new(x0.clone()),
            x: x0,
            l: l0,
            t: 0,
            average: WeightedAverage::new(p),
        })
    }
}

fn advance(
    state: &mut UdgmState,
    h: &Regularizer,
    modulus: f64,
    doublings: u32,
    g_x: f64,
    grad: Array1<f64>,
    f_y: f64,
    gt: &dyn ComponentOracle,
) -> Result<StepRecord> {
    let coeff = 1.0 / modulus;
    let l_next = 0.5 * modulus;
    let f_x = g_x + h.value(state.x.view());
    state.model.fold(coeff, g_x, grad.view(), state.x.view())?;
    let x_next = model_argmin(&state.model, 0.0, grad.view(), h)?;
    let model_min = state.model.value(x_next.view(), h)?;
    let rec = StepRecord {
        doublings,
        l_next,
        f_gt_xt: f_x,
        f_gt_xnext: gt.value(x_next.view()) + h.value(x_next.view()),
        f_gt_yt: Some(f_y),
        model_min: Some(model_min),
    };
    state.average.push(l_next, x_next.view());
    state.x = x_next;
    state.l = l_next;
    state.t += 1;
    Ok(rec)
}

/// One adaptive round on component `gt`.
///
/// Accepts the smallest `i_t` with
/// `f_{g_t}(𝔅_{M, g_t}(x_t)) ≤ ψ*_{M, g_t}(x_t) + ε/2`, `M = 2^{i_t} L_t`.
pub fn udgm_step(
    state: &mut UdgmState,
    gt: &dyn ComponentOracle,
    h: &Regularizer,
    geometry: &ProxFunction,
    eps: f64,
    opts: &OnlineOptions,
) -> Result<StepRecord> {
    positive("eps", eps)?;
    check_dim(geometry.dimension(), state.x.len())?;
    let x = state.x.view();
    let g_x = gt.value(x);
    let grad = gt.subgradient(x);
    let found = backtrack(state.l.max(opts.min_l), opts.max_doublings, |m| {
        let mapped = bregman_map(&BregmanMapInput {
            base: x,
            gradient: grad.view(),
            value: g_x,
            modulus: m,
            regularizer: h,
            geometry,
        })?;
        let y = mapped.minimizer.view();
        let f_y = gt.value(y) + h.value(y);
        Ok((f_y, f_y <= mapped.psi_star + 0.5 * eps))
    })?;
    advance(state, h, found.accepted_modulus, found.doublings, g_x, grad, found.candidate, gt)
}

/// One round with model coefficient `1/(2γ)`.
pub fn udgm_fixed_step(
    state: &mut UdgmState,
    gt: &dyn ComponentOracle,
    h: &Regularizer,
    geometry: &ProxFunction,
    gamma: f64,
) -> Result<StepRecord> {
    check_dim(geometry.dimension(), state.x.len())?;
    let x = state.x.view();
    let g_x = gt.value(x);
    let grad = gt.subgradient(x);
    let mapped = bregman_map(&BregmanMapInput {
        base: x,
        gradient: grad.view(),
        value: g_x,
        modulus: 2.0 * gamma,
        regularizer: h,
        geometry,
    })?;
    let y = mapped.minimizer.view();
    let f_y = gt.value(y) + h.value(y);
    advance(state, h, 2.0 * gamma, 0, g_x, grad, f_y, gt)
}

pub fn udgm_run(
    problem: &CompositeProblem,
    order: &[usize],
    x0: ArrayView1<f64>,
    l0: f64,
    eps: f64,
    opts: &OnlineOptions,
) -> Result<OnlineRun> {
    validate_run(problem, order, x0, eps)?;
    if !problem.regularizer().has_minimizer_rule() {
        return Err(Error::Unsupported("dual method needs a closed-form model minimizer".into()));
    }
    let mut state = UdgmState::new(x0.to_owned(), l0)?;
    let meta = TraceMeta {
        algorithm: "oudgm".into(),
        eps,
        l0,
        x0: x0.to_vec(),
        ..TraceMeta::default()
    };
    drive(problem, order, x0, meta, opts, |_, i| {
        let rec = udgm_step(
            &mut state,
            problem.components()[i].as_ref(),
            problem.regularizer(),
            problem.geometry(),
            eps,
            opts,
        )?;
        Ok((rec, state.x.clone()))
    })
}

pub fn udgm_fixed_step_run(
    problem: &CompositeProblem,
    order: &[usize],
    x0: ArrayView1<f64>,
    holder: HolderConstants,
    eps: f64,
    opts: &OnlineOptions,
) -> Result<OnlineRun> {
    validate_run(problem, order, x0, eps)?;
    if !problem.regularizer().has_minimizer_rule() {
        return Err(Error::Unsupported("dual method needs a closed-form model minimizer".into()));
    }
    let gamma = holder.gamma(eps)?;
    let mut state = UdgmState::new(x0.to_owned(), gamma)?;
    let meta = TraceMeta {
        algorithm: "oudgm-fixed".into(),
        eps,
        l0: gamma,
        x0: x0.to_vec(),
        ..TraceMeta::default()
    };
    drive(problem, order, x0, meta, opts, |_, i| {
        let rec = udgm_fixed_step(
            &mut state,
            problem.components()[i].as_ref(),
            problem.regularizer(),
            problem.geometry(),
            gamma,
        )?;
        Ok((rec, state.x.clone()))
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bregman::gamma;
    use crate::problems::{lasso_problem, steiner_problem, synth_lasso, synth_steiner, LassoInstance};
    use ndarray::array;
    use proptest::prelude::*;

    fn grid_min(f: impl Fn(f64) -> f64, lo: f64, hi: f64) -> f64 {
        // Coarse grid then two refinements.
        let (mut lo, mut hi) = (lo, hi);
        let mut best = lo;
        for _ in 0..4 {
            let steps = 2000;
            let h = (hi - lo) / steps as f64;
            let mut bv = f64::INFINITY;
            for k in 0..=steps {
                let x = lo + h * k as f64;
                let v = f(x);
                if v < bv {
                    bv = v;
                    best = x;
                }
            }
            lo = best - 2.0 * h;
            hi = best + 2.0 * h;
        }
        best
    }

    #[test]
    fn empty_model_returns_anchor() {
        let m = DualModel::new(array![1.0, -3.0]);
        let x = model_argmin(&m, 0.0, array![5.0, 5.0].view(), &Regularizer::L1 { weight: 1.0 }).unwrap();
        assert_eq!(x, array![1.0, -3.0]);
    }

    #[test]
    fn unregularized_argmin_is_gradient_step() {
        let mut m = DualModel::new(array![1.0, 2.0]);
        m.s = array![0.5, -0.5];
        m.a = 0.7;
        let x = model_argmin(&m, 0.25, array![2.0, 4.0].view(), &Regularizer::Zero).unwrap();
        assert_eq!(x, array![0.0, 1.5]);
    }

    #[test]
    fn scalar_l1_argmin_matches_grid() {
        let mut m = DualModel::new(array![2.0]);
        m.s = array![1.0];
        m.a = 0.5;
        let h = Regularizer::L1 { weight: 1.0 };
        let x = model_argmin(&m, 0.0, array![0.0].view(), &h).unwrap();
        assert_eq!(x, array![0.5]);
        let g = grid_min(|v| m.value(array![v].view(), &h).unwrap(), -5.0, 5.0);
        // The model is flat to second order at its minimizer, so values pin x only to ~sqrt(machine eps).
        assert!((g - 0.5).abs() < 1e-6, "grid minimum at {g}");
    }

    #[test]
    fn custom_regularizer_is_unsupported() {
        #[derive(Debug)]
        struct Abs;
        impl crate::oracles::CustomRegularizer for Abs {
            fn value(&self, x: ArrayView1<f64>) -> f64 {
                x.iter().map(|v| v.abs()).sum()
            }
            fn subgradient(&self, x: ArrayView1<f64>) -> Array1<f64> {
                x.mapv(f64::signum)
            }
        }
        let h = Regularizer::Custom(std::sync::Arc::new(Abs));
        let m = DualModel::new(array![1.0]);
        assert!(matches!(model_argmin(&m, 0.0, array![0.0].view(), &h), Err(Error::Unsupported(_))));
    }

    #[test]
    fn zero_loss_stays_at_anchor() {
        #[derive(Debug)]
        struct Zero;
        impl ComponentOracle for Zero {
            fn dimension(&self) -> usize {
                1
            }
            fn value(&self, _: ArrayView1<f64>) -> f64 {
                0.0
            }
            fn subgradient(&self, _: ArrayView1<f64>) -> Array1<f64> {
                array![0.0]
            }
            fn holder(&self) -> HolderConstants {
                HolderConstants { degree: 1.0, modulus: 0.0 }
            }
        }
        let mut s = UdgmState::new(array![3.0], 1.0).unwrap();
        let rec = udgm_step(&mut s, &Zero, &Regularizer::Zero, &ProxFunction::origin(1), 0.1, &OnlineOptions::default())
            .unwrap();
        assert_eq!(rec.doublings, 0);
        assert_eq!(s.x, array![3.0]);
        assert_eq!(s.model.s, array![0.0]);
        assert_eq!(s.model.c, 0.0);
    }

    #[test]
    fn quadratic_equality_case() {
        // g(x) = x²: the Bregman step with M = 2 lands exactly on 0 with
        // f(y) = ψ* = 0.
        let p = lasso_problem(&LassoInstance::new(vec![(array![1.0], 0.0)], 0.0, 0.0).unwrap()).unwrap();
        let mut s = UdgmState::new(array![1.0], 2.0).unwrap();
        let rec = udgm_step(&mut s, p.component(0).unwrap(), p.regularizer(), p.geometry(), 1e-300, &OnlineOptions::default())
            .unwrap();
        assert_eq!(rec.doublings, 0);
        assert_eq!(rec.f_gt_yt, Some(0.0));
        assert_eq!(rec.l_next, 1.0);
    }

    #[test]
    fn lasso_stream_respects_modulus_cap() {
        let syn = synth_lasso(5, 40, 2, 0.1, 3).unwrap();
        let inst = LassoInstance::new(syn.instance.samples.clone(), 0.1, 0.0).unwrap();
        let p = lasso_problem(&inst).unwrap();
        let hc = p.stream_holder().unwrap();
        let eps = 1e-2;
        let order: Vec<usize> = (0..400).map(|t| t % 40).collect();
        let run = udgm_run(&p, &order, Array1::zeros(5).view(), 1.0, eps, &OnlineOptions::default()).unwrap();
        let cap = gamma(hc.modulus, 1.0, eps).unwrap();
        assert!(run.trace.rows.iter().all(|r| r.l_next <= cap));
    }

    #[test]
    fn coefficient_sum_is_half_weight_sum() {
        let inst = synth_steiner(10, 3, 2.0, 11).unwrap();
        let p = steiner_problem(&inst).unwrap();
        let mut s = UdgmState::new(Array1::zeros(3), 1.0).unwrap();
        let opts = OnlineOptions::default();
        for t in 0..300 {
            udgm_step(&mut s, p.component(t % 10).unwrap(), p.regularizer(), p.geometry(), 0.05, &opts).unwrap();
            assert_eq!(s.model.a, 0.5 * s.average.weight_sum);
        }
    }

    #[test]
    fn steiner_iterates_follow_closed_form() {
        let inst = synth_steiner(7, 2, 1.0, 2).unwrap();
        let p = steiner_problem(&inst).unwrap();
        let order: Vec<usize> = (0..200).map(|t| (3 * t + 1) % 7).collect();
        let x0 = array![0.3, -0.2];
        let opts = OnlineOptions { keep_iterates: true, ..Default::default() };
        for run in [
            udgm_run(&p, &order, x0.view(), 1.0, 0.1, &opts).unwrap(),
            udgm_fixed_step_run(&p, &order, x0.view(), HolderConstants { degree: 0.0, modulus: 2.0 }, 0.1, &opts).unwrap(),
        ] {
            let its = run.iterates.unwrap();
            let mut sum = Array1::<f64>::zeros(2);
            for (t, &i) in order.iter().enumerate() {
                let xi = &its[t];
                let d = xi - &inst.centers[i];
                let n = d.dot(&d).sqrt();
                let a = 1.0 / (2.0 * run.trace.rows[t].l_next);
                if n > 0.0 {
                    sum.scaled_add(a, &(&d / n));
                }
                let expect = &x0 - &sum;
                assert_eq!(its[t + 1], expect, "step {t}");
            }
        }
    }

    #[test]
    fn fixed_step_keeps_gamma() {
        let inst = synth_steiner(5, 2, 1.0, 9).unwrap();
        let p = steiner_problem(&inst).unwrap();
        let hc = HolderConstants { degree: 0.0, modulus: 2.0 };
        let run = udgm_fixed_step_run(&p, &[0, 1, 2, 3, 4, 0], array![0.0, 0.0].view(), hc, 0.1, &OnlineOptions::default())
            .unwrap();
        assert!(run.trace.rows.iter().all(|r| r.l_next == 40.0 && r.doublings == 0));
    }

    #[test]
    fn dual_target_bound_on_prefixes() {
        let inst = synth_steiner(30, 3, 2.0, 4).unwrap();
        let p = steiner_problem(&inst).unwrap();
        let eps = 0.05;
        let order: Vec<usize> = (0..600).map(|t| (t * 7) % 30).collect();
        let run = udgm_run(&p, &order, Array1::zeros(3).view(), 1.0, eps, &OnlineOptions::default()).unwrap();
        let (mut lhs, mut s) = (0.0, 0.0);
        for (r, phi) in run.trace.rows.iter().zip(&run.model_minima) {
            lhs += r.f_gt_yt.unwrap() / (2.0 * r.l_next);
            s += 1.0 / r.l_next;
            let rhs = phi + s * eps / 4.0;
            assert!(lhs <= rhs + 1e-9 * (1.0 + rhs.abs()), "{lhs} > {rhs}");
        }
    }

    proptest! {
        #[test]
        fn model_value_is_minimized_by_argmin(
            s in prop::collection::vec(-3.0..3.0f64, 3),
            x0 in prop::collection::vec(-3.0..3.0f64, 3),
            a in 0.0..4.0f64,
            mu in 0.0..2.0f64,
            ridge in 0.0..2.0f64,
            probe in prop::collection::vec(-5.0..5.0f64, 3),
        ) {
            let h = Regularizer::from_weights(mu, ridge).unwrap();
            let m = DualModel { s: Array1::from(s), a, c: 0.0, anchor: Array1::from(x0) };
            let x = model_argmin(&m, 0.0, Array1::zeros(3).view(), &h).unwrap();
            let best = m.value(x.view(), &h).unwrap();
            let y = Array1::from(probe);
            // φ is 1-strongly convex, so it grows at least quadratically from its minimizer.
            let d = &y - &x;
            prop_assert!(m.value(y.view(), &h).unwrap() >= best + 0.5 * d.dot(&d) - 1e-9);
        }
    }
}
