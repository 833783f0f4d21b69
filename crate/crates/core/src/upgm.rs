//! Online universal primal gradient method.
//!
//! Each round sees one component `g_t`, searches for the smallest `i_t ≥ 0`
//! such that the Bregman step with modulus `2^{i_t} L_t` satisfies the
//! descent test, moves there and sets `L_{t+1} = 2^{i_t − 1} L_t`. The output
//! is the `1/L_t`-weighted average of `x_1, …, x_{T+1}`.

use ndarray::{Array1, ArrayView1};

use crate::bregman::{backtrack, bregman_map, descent_holds, BregmanMapInput};
use crate::error::{check_dim, positive, Result};
use crate::geometry::ProxFunction;
use crate::online::{drive, validate_run, OnlineOptions, OnlineRun, StepRecord, WeightedAverage};
use crate::oracles::{ComponentOracle, CompositeProblem, HolderConstants, Regularizer};
use crate::trace::TraceMeta;

#[derive(Clone, Debug, PartialEq)]
pub struct UpgmState {
    pub x: Array1<f64>,
    pub l: f64,
    pub t: usize,
    pub average: WeightedAverage,
}

impl UpgmState {
    pub fn new(x0: Array1<f64>, l0: f64) -> Result<Self> {
        positive("L0", l0)?;
        let p = x0.len();
        Ok(UpgmState {
            x: x0,
            l: l0,
            t: 0,
            average: WeightedAverage::new(p),
        })
    }
}

/// One adaptive round on component `gt`.
pub fn upgm_step(
    state: &mut UpgmState,
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
        let xhat = mapped.minimizer;
        let g_xhat = gt.value(xhat.view());
        let ok = descent_holds(g_xhat, g_x, grad.view(), x, xhat.view(), m, eps, geometry);
        Ok(((xhat, g_xhat), ok))
    })?;
    let (x_next, g_next) = found.candidate;
    let rec = StepRecord {
        doublings: found.doublings,
        l_next: found.next_l,
        f_gt_xt: g_x + h.value(x),
        f_gt_xnext: g_next + h.value(x_next.view()),
        f_gt_yt: None,
        model_min: None,
    };
    state.average.push(found.next_l, x_next.view());
    state.x = x_next;
    state.l = found.next_l;
    state.t += 1;
    Ok(rec)
}

/// One fixed-modulus round: `x_{t+1} = 𝔅_{2γ, g_t}(x_t)`, `L_{t+1} = γ`.
pub fn upgm_fixed_step(
    state: &mut UpgmState,
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
    let x_next = mapped.minimizer;
    let rec = StepRecord {
        doublings: 0,
        l_next: gamma,
        f_gt_xt: g_x + h.value(x),
        f_gt_xnext: gt.value(x_next.view()) + h.value(x_next.view()),
        f_gt_yt: None,
        model_min: None,
    };
    state.average.push(gamma, x_next.view());
    state.x = x_next;
    state.l = gamma;
    state.t += 1;
    Ok(rec)
}

/// Runs `order.len() = T + 1` adaptive rounds visiting `g_{order[t]}`.
pub fn upgm_run(
    problem: &CompositeProblem,
    order: &[usize],
    x0: ArrayView1<f64>,
    l0: f64,
    eps: f64,
    opts: &OnlineOptions,
) -> Result<OnlineRun> {
    validate_run(problem, order, x0, eps)?;
    let mut state = UpgmState::new(x0.to_owned(), l0)?;
    let meta = TraceMeta {
        algorithm: "oupgm".into(),
        eps,
        l0,
        x0: x0.to_vec(),
        ..TraceMeta::default()
    };
    drive(problem, order, x0, meta, opts, |_, i| {
        let rec = upgm_step(
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

/// Fixed-step variant with `L_{t+1} = γ(M_v, ε)` throughout.
pub fn upgm_fixed_step_run(
    problem: &CompositeProblem,
    order: &[usize],
    x0: ArrayView1<f64>,
    holder: HolderConstants,
    eps: f64,
    opts: &OnlineOptions,
) -> Result<OnlineRun> {
    validate_run(problem, order, x0, eps)?;
    let gamma = holder.gamma(eps)?;
    let mut state = UpgmState::new(x0.to_owned(), gamma)?;
    let meta = TraceMeta {
        algorithm: "oupgm-fixed".into(),
        eps,
        l0: gamma,
        x0: x0.to_vec(),
        ..TraceMeta::default()
    };
    drive(problem, order, x0, meta, opts, |_, i| {
        let rec = upgm_fixed_step(
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
    use crate::problems::{lasso_problem, steiner_problem, synth_steiner, LassoInstance};
    use ndarray::array;

    #[derive(Debug)]
    struct ZeroLoss(usize);

    impl ComponentOracle for ZeroLoss {
        fn dimension(&self) -> usize {
            self.0
        }
        fn value(&self, _: ArrayView1<f64>) -> f64 {
            0.0
        }
        fn subgradient(&self, _: ArrayView1<f64>) -> Array1<f64> {
            Array1::zeros(self.0)
        }
        fn holder(&self) -> HolderConstants {
            HolderConstants { degree: 1.0, modulus: 1e-12 }
        }
    }

    #[test]
    fn zero_loss_keeps_point_and_halves_l() {
        let d = ProxFunction::origin(2);
        let mut s = UpgmState::new(array![1.0, -2.0], 4.0).unwrap();
        let rec = upgm_step(&mut s, &ZeroLoss(2), &Regularizer::Zero, &d, 0.1, &OnlineOptions::default()).unwrap();
        assert_eq!(rec.doublings, 0);
        assert_eq!(rec.l_next, 2.0);
        assert_eq!(s.x, array![1.0, -2.0]);
    }

    #[test]
    fn zero_horizon_average_is_start() {
        let p = crate::oracles::CompositeProblem::new(
            vec![std::sync::Arc::new(ZeroLoss(2))],
            Regularizer::Zero,
            ProxFunction::origin(2),
        )
        .unwrap();
        let x0 = array![0.5, 0.25];
        let run = upgm_run(&p, &[0], x0.view(), 1.0, 0.1, &OnlineOptions::default()).unwrap();
        assert_eq!(run.xbar, x0);
        assert_eq!(run.trace.len(), 1);
    }

    #[test]
    fn equality_case_accepts_first_trial() {
        let p = lasso_problem(&LassoInstance::new(vec![(array![1.0], 0.0)], 0.0, 0.0).unwrap()).unwrap();
        let mut s = UpgmState::new(array![1.0], 2.0).unwrap();
        let rec = upgm_step(&mut s, p.component(0).unwrap(), p.regularizer(), p.geometry(), 1e-12, &OnlineOptions::default())
            .unwrap();
        assert_eq!(rec.doublings, 0);
        assert_eq!(s.x, array![0.0]);
        assert_eq!(rec.l_next, 1.0);
    }

    #[test]
    fn steiner_moduli_stay_below_twice_gamma() {
        let inst = synth_steiner(20, 2, 3.0, 5).unwrap();
        let p = steiner_problem(&inst).unwrap();
        let eps = 0.1;
        let order: Vec<usize> = (0..500).map(|t| t % 20).collect();
        let run = upgm_run(&p, &order, array![0.0, 0.0].view(), 1.0, eps, &OnlineOptions::default()).unwrap();
        let cap = 2.0 * gamma(2.0, 0.0, eps).unwrap();
        assert!((cap - 80.0).abs() < 1e-12);
        for r in &run.trace.rows {
            assert!(2.0 * r.l_next <= cap, "accepted modulus {} above {cap}", 2.0 * r.l_next);
        }
    }

    #[test]
    fn fixed_step_records_constant_gamma() {
        let inst = LassoInstance::new(
            vec![(array![1.0, 2.0], 1.0), (array![-1.0, 0.5], 0.0)],
            0.1,
            0.0,
        )
        .unwrap();
        let p = lasso_problem(&inst).unwrap();
        let hc = p.stream_holder().unwrap();
        let order = [0, 1, 0, 1, 0];
        let x0 = array![0.0, 0.0];
        let run = upgm_fixed_step_run(&p, &order, x0.view(), hc, 0.01, &OnlineOptions { keep_iterates: true, ..Default::default() }).unwrap();
        assert!(run.trace.rows.iter().all(|r| r.l_next == hc.modulus));
        // v = 1: constant-step proximal gradient with step 1/(2 M_1).
        let its = run.iterates.unwrap();
        let mut x = x0.clone();
        for (t, &i) in order.iter().enumerate() {
            let c = p.component(i).unwrap();
            let z = &x - &(c.subgradient(x.view()) / (2.0 * hc.modulus));
            x = crate::bregman::soft_threshold(z.view(), 0.1 / (2.0 * hc.modulus)).unwrap();
            assert!((&x - &its[t + 1]).iter().all(|v| v.abs() < 1e-15));
        }
    }

    #[test]
    fn duplicated_component_matches_single() {
        let one = LassoInstance::new(vec![(array![1.0, -1.0], 0.5)], 0.05, 0.0).unwrap();
        let two = LassoInstance::new(vec![(array![1.0, -1.0], 0.5); 2], 0.05, 0.0).unwrap();
        let p1 = lasso_problem(&one).unwrap();
        let p2 = lasso_problem(&two).unwrap();
        let opts = OnlineOptions { record_time: false, ..Default::default() };
        let a = upgm_run(&p1, &[0; 6], array![2.0, 0.0].view(), 1.0, 1e-3, &opts).unwrap();
        let b = upgm_run(&p2, &[0, 1, 0, 1, 0, 1], array![2.0, 0.0].view(), 1.0, 1e-3, &opts).unwrap();
        assert_eq!(a.trace.rows, b.trace.rows);
        assert_eq!(a.xbar, b.xbar);
    }

    #[test]
    fn bad_inputs() {
        let p = lasso_problem(&LassoInstance::new(vec![(array![1.0], 0.0)], 0.0, 0.0).unwrap()).unwrap();
        let opts = OnlineOptions::default();
        assert!(upgm_run(&p, &[0], array![0.0].view(), 1.0, 0.0, &opts).is_err());
        assert!(upgm_run(&p, &[0], array![0.0].view(), -1.0, 0.1, &opts).is_err());
        assert!(upgm_run(&p, &[1], array![0.0].view(), 1.0, 0.1, &opts).is_err());
        assert!(upgm_run(&p, &[0], array![0.0, 1.0].view(), 1.0, 0.1, &opts).is_err());
    }
}
