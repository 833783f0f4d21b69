//! Concrete problems: (online) lasso and the Steiner location problem.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;
use std::sync::Arc;

use ndarray::{Array1, ArrayView1};
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::geometry::ProxFunction;
use crate::oracles::{ComponentOracle, CompositeProblem, HolderConstants, Regularizer};

/// `g(x) = (aᵀx − b)²`, gradient `2(aᵀx − b)a`, `v = 1`, `M_v = 2‖a‖²`.
#[derive(Clone, Debug)]
pub struct SquaredResidual {
    pub a: Array1<f64>,
    pub b: f64,
}

impl ComponentOracle for SquaredResidual {
    fn dimension(&self) -> usize {
        self.a.len()
    }

    fn value(&self, x: ArrayView1<f64>) -> f64 {
        let r = self.a.dot(&x) - self.b;
        r * r
    }

    fn subgradient(&self, x: ArrayView1<f64>) -> Array1<f64> {
        let r = self.a.dot(&x) - self.b;
        &self.a * (2.0 * r)
    }

    fn holder(&self) -> HolderConstants {
        HolderConstants {
            degree: 1.0,
            modulus: 2.0 * self.a.dot(&self.a),
        }
    }
}

/// `g(x) = ‖x − c‖`, subgradient `(x − c)/‖x − c‖` and `0` at `x = c`;
/// `v = 0`, `M_v = 2`.
#[derive(Clone, Debug)]
pub struct Distance {
    pub center: Array1<f64>,
}

impl ComponentOracle for Distance {
    fn dimension(&self) -> usize {
        self.center.len()
    }

    fn value(&self, x: ArrayView1<f64>) -> f64 {
        let d = &x - &self.center;
        d.dot(&d).sqrt()
    }

    fn subgradient(&self, x: ArrayView1<f64>) -> Array1<f64> {
        let d = &x - &self.center;
        let r = d.dot(&d).sqrt();
        if r > 0.0 {
            d / r
        } else {
            d
        }
    }

    fn holder(&self) -> HolderConstants {
        HolderConstants {
            degree: 0.0,
            modulus: 2.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LassoInstance {
    pub samples: Vec<(Array1<f64>, f64)>,
    pub l1_weight: f64,
    pub ridge: f64,
}

impl LassoInstance {
    pub fn new(samples: Vec<(Array1<f64>, f64)>, l1_weight: f64, ridge: f64) -> Result<Self> {
        let p = samples.first().ok_or(Error::EmptyProblem)?.0.len();
        for (a, _) in &samples {
            crate::error::check_dim(p, a.len())?;
        }
        Regularizer::from_weights(l1_weight, ridge)?;
        Ok(LassoInstance {
            samples,
            l1_weight,
            ridge,
        })
    }

    pub fn dimension(&self) -> usize {
        self.samples[0].0.len()
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SteinerInstance {
    pub centers: Vec<Array1<f64>>,
}

impl SteinerInstance {
    pub fn new(centers: Vec<Array1<f64>>) -> Result<Self> {
        let p = centers.first().ok_or(Error::EmptyProblem)?.len();
        for c in &centers {
            crate::error::check_dim(p, c.len())?;
        }
        Ok(SteinerInstance { centers })
    }

    pub fn dimension(&self) -> usize {
        self.centers[0].len()
    }
}

pub fn lasso_problem(inst: &LassoInstance) -> Result<CompositeProblem> {
    if inst.samples.is_empty() {
        return Err(Error::EmptyProblem);
    }
    let components = inst
        .samples
        .iter()
        .map(|(a, b)| Arc::new(SquaredResidual { a: a.clone(), b: *b }) as Arc<dyn ComponentOracle>)
        .collect();
    let h = Regularizer::from_weights(inst.l1_weight, inst.ridge)?;
    let p = CompositeProblem::new(components, h, ProxFunction::origin(inst.dimension()))?;
    Ok(p.with_descriptor(format!(
        "lasso(n={},p={},mu={},ridge={})",
        inst.len(),
        inst.dimension(),
        inst.l1_weight,
        inst.ridge
    )))
}

pub fn steiner_problem(inst: &SteinerInstance) -> Result<CompositeProblem> {
    if inst.centers.is_empty() {
        return Err(Error::EmptyProblem);
    }
    let components = inst
        .centers
        .iter()
        .map(|c| Arc::new(Distance { center: c.clone() }) as Arc<dyn ComponentOracle>)
        .collect();
    let p = CompositeProblem::new(components, Regularizer::Zero, ProxFunction::origin(inst.dimension()))?;
    Ok(p.with_descriptor(format!("steiner(m={},p={})", inst.centers.len(), inst.dimension())))
}

/// Synthetic lasso data together with the planted coefficients.
#[derive(Clone, Debug)]
pub struct SyntheticLasso {
    pub instance: LassoInstance,
    pub truth: Array1<f64>,
}

/// Standard-normal design, `sparsity` planted standard-normal coefficients at
/// random positions, `b = aᵀx♮ + noise·η`.
pub fn synth_lasso(p: usize, n: usize, sparsity: usize, noise: f64, seed: u64) -> Result<SyntheticLasso> {
    if p == 0 || n == 0 {
        return Err(Error::InvalidParameter {
            name: "p/n",
            reason: "dimension and sample count must be positive".into(),
        });
    }
    if sparsity > p {
        return Err(Error::InvalidParameter {
            name: "sparsity",
            reason: format!("cannot plant {sparsity} nonzeros in dimension {p}"),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut truth = Array1::zeros(p);
    for i in sample(&mut rng, p, sparsity) {
        truth[i] = rng.sample::<f64, _>(StandardNormal);
    }
    let samples = (0..n)
        .map(|_| {
            let a = Array1::from_shape_simple_fn(p, || rng.sample::<f64, _>(StandardNormal));
            let eta: f64 = rng.sample(StandardNormal);
            let b = a.dot(&truth) + noise * eta;
            (a, b)
        })
        .collect();
    Ok(SyntheticLasso {
        instance: LassoInstance {
            samples,
            l1_weight: 0.0,
            ridge: 0.0,
        },
        truth,
    })
}

/// `m` centers drawn from `N(0, scale²·I)` in dimension `p`.
pub fn synth_steiner(m: usize, p: usize, scale: f64, seed: u64) -> Result<SteinerInstance> {
    if m == 0 || p == 0 {
        return Err(Error::InvalidParameter {
            name: "m/p",
            reason: "center count and dimension must be positive".into(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let centers = (0..m)
        .map(|_| Array1::from_shape_simple_fn(p, || scale * rng.sample::<f64, _>(StandardNormal)))
        .collect();
    SteinerInstance::new(centers)
}

/// Reads rows `b, a_1, …, a_p`; `#` lines are comments.
pub fn read_samples<R: Read>(input: R) -> Result<Vec<(Array1<f64>, f64)>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(input);
    let mut width = None;
    let mut samples = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        if rec.len() == 1 && rec[0].is_empty() {
            continue;
        }
        let expected = *width.get_or_insert(rec.len());
        if rec.len() != expected {
            return Err(Error::RaggedRow {
                line,
                expected,
                found: rec.len(),
            });
        }
        if expected < 2 {
            return Err(Error::RaggedRow {
                line,
                expected: 2,
                found: expected,
            });
        }
        let values = rec
            .iter()
            .enumerate()
            .map(|(i, f)| {
                f.parse::<f64>().map_err(|_| Error::NonNumeric {
                    line,
                    field: i + 1,
                    value: f.to_string(),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        samples.push((Array1::from(values[1..].to_vec()), values[0]));
    }
    if samples.is_empty() {
        return Err(Error::EmptyInput);
    }
    Ok(samples)
}

pub fn load_samples(path: impl AsRef<Path>, l1_weight: f64, ridge: f64) -> Result<LassoInstance> {
    let samples = read_samples(File::open(path)?)?;
    LassoInstance::new(samples, l1_weight, ridge)
}

pub fn write_samples<W: Write>(samples: &[(Array1<f64>, f64)], out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    for (a, b) in samples {
        let mut row = vec![format!("{b:?}")];
        row.extend(a.iter().map(|v| format!("{v:?}")));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bregman::{bregman_map, BregmanMapInput};
    use ndarray::array;
    use proptest::prelude::*;

    #[test]
    fn load_two_rows() {
        let s = read_samples("1,1,0\n0,0,1\n".as_bytes()).unwrap();
        assert_eq!(s.len(), 2);
        assert_eq!(s[0], (array![1.0, 0.0], 1.0));
        assert_eq!(s[1], (array![0.0, 1.0], 0.0));
    }

    #[test]
    fn comments_are_skipped() {
        let s = read_samples("# header\n1,2\n# more\n3,4\n".as_bytes()).unwrap();
        assert_eq!(s.len(), 2);
    }

    #[test]
    fn parse_errors_name_the_row() {
        let err = read_samples("1,1,0\n0,1\n".as_bytes()).unwrap_err();
        assert!(matches!(err, Error::RaggedRow { line: 2, expected: 3, found: 2 }), "{err}");
        let err = read_samples("1,1,0\n0,x,1\n".as_bytes()).unwrap_err();
        assert!(matches!(err, Error::NonNumeric { line: 2, field: 2, .. }), "{err}");
        assert!(matches!(read_samples("".as_bytes()).unwrap_err(), Error::EmptyInput));
        assert!(matches!(read_samples("# only\n".as_bytes()).unwrap_err(), Error::EmptyInput));
    }

    #[test]
    fn empty_instances_rejected() {
        assert!(LassoInstance::new(vec![], 0.1, 0.0).is_err());
        assert!(SteinerInstance::new(vec![]).is_err());
    }

    #[test]
    fn synthetic_is_seeded() {
        let a = synth_lasso(5, 10, 2, 0.1, 42).unwrap();
        let b = synth_lasso(5, 10, 2, 0.1, 42).unwrap();
        assert_eq!(a.instance, b.instance);
        assert_eq!(a.truth, b.truth);
        assert_eq!(a.truth.iter().filter(|v| **v != 0.0).count(), 2);
        let c = synth_lasso(5, 10, 2, 0.1, 43).unwrap();
        assert_ne!(a.instance, c.instance);
    }

    #[test]
    fn zero_sparsity_means_pure_noise() {
        let s = synth_lasso(4, 20, 0, 0.5, 3).unwrap();
        assert!(s.truth.iter().all(|v| *v == 0.0));
        let s0 = synth_lasso(4, 20, 0, 0.0, 3).unwrap();
        assert!(s0.instance.samples.iter().all(|(_, b)| *b == 0.0));
    }

    #[test]
    fn lasso_map_matches_closed_form() {
        // sign(x − (2/M)(aᵀx − b)a) · max(|x − (2/M)(aᵀx − b)a| − μ/M, 0)
        let a = array![1.0, -2.0, 0.5];
        let b = 0.7;
        let mu = 0.3;
        let m = 5.0;
        let x = array![0.2, 0.4, -1.0];
        let p = lasso_problem(&LassoInstance::new(vec![(a.clone(), b)], mu, 0.0).unwrap()).unwrap();
        let c = p.component(0).unwrap();
        let grad = c.subgradient(x.view());
        let out = bregman_map(&BregmanMapInput {
            base: x.view(),
            gradient: grad.view(),
            value: c.value(x.view()),
            modulus: m,
            regularizer: p.regularizer(),
            geometry: p.geometry(),
        })
        .unwrap();
        let r = a.dot(&x) - b;
        for i in 0..3 {
            let z: f64 = x[i] - 2.0 / m * r * a[i];
            let expect = z.signum() * (z.abs() - mu / m).max(0.0);
            assert!((out.minimizer[i] - expect).abs() < 1e-15);
        }
    }

    #[test]
    fn steiner_single_center() {
        let p = steiner_problem(&SteinerInstance::new(vec![array![1.0, -2.0]]).unwrap()).unwrap();
        assert_eq!(crate::oracles::composite_value(&p, array![1.0, -2.0].view()).unwrap(), 0.0);
        assert_eq!(p.stream_holder().unwrap(), HolderConstants { degree: 0.0, modulus: 2.0 });
    }

    proptest! {
        #[test]
        fn csv_round_trip(rows in prop::collection::vec((prop::collection::vec(-1e6..1e6f64, 3), -1e6..1e6f64), 1..30)) {
            let samples: Vec<_> = rows.into_iter().map(|(a, b)| (Array1::from(a), b)).collect();
            let mut buf = Vec::new();
            write_samples(&samples, &mut buf).unwrap();
            let back = read_samples(buf.as_slice()).unwrap();
            prop_assert_eq!(back, samples);
        }

        #[test]
        fn lasso_holder_constants_hold(
            a in prop::collection::vec(-3.0..3.0f64, 4),
            x in prop::collection::vec(-5.0..5.0f64, 4),
            y in prop::collection::vec(-5.0..5.0f64, 4),
        ) {
            let c = SquaredResidual { a: Array1::from(a), b: 0.3 };
            let (x, y) = (Array1::from(x), Array1::from(y));
            let hc = c.holder();
            let dg = c.subgradient(x.view()) - c.subgradient(y.view());
            let dist = (&x - &y).dot(&(&x - &y)).sqrt();
            prop_assert!(dg.dot(&dg).sqrt() <= hc.modulus * dist.powf(hc.degree) * (1.0 + 1e-12) + 1e-12);
        }

        #[test]
        fn steiner_holder_constants_hold(
            c in prop::collection::vec(-3.0..3.0f64, 3),
            x in prop::collection::vec(-5.0..5.0f64, 3),
            y in prop::collection::vec(-5.0..5.0f64, 3),
        ) {
            let d = Distance { center: Array1::from(c) };
            let hc = d.holder();
            let dg = d.subgradient(Array1::from(x).view()) - d.subgradient(Array1::from(y).view());
            prop_assert!(dg.dot(&dg).sqrt() <= hc.modulus + 1e-12);
        }
    }
}
