//! Matrix distributions of a level semimetric: draw `k` states i.i.d. from
//! the level marginal and record their `k x k` distance matrix.
//!
//! Sampling uses a counter-based generator: the draws of sample `i` at level
//! `n` depend only on `(seed, n, i)`, so results do not depend on thread count.

use std::io::Write;

use ndarray::Array2;
use rand::RngCore;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::iteration::{iterate, InitialMetricSpec, IterationReport, Semantics};
use crate::model::MarkovModel;
use crate::numeric::Scalar;
use crate::transport::{kantorovich, Semimetric};

/// Exact laws are computed when a level has at most this many states.
pub const EXACT_LAW_LIMIT: usize = 512;

#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrixSample<S> {
    pub level: usize,
    pub semantics: Semantics,
    pub k: usize,
    pub seed: u64,
    /// Sampled state tuples, one per matrix.
    pub states: Vec<Vec<usize>>,
    pub distances: Semimetric<S>,
}

impl<S: Scalar> DistanceMatrixSample<S> {
    pub fn count(&self) -> usize {
        self.states.len()
    }

    pub fn matrix(&self, i: usize) -> Array2<S> {
        let s = &self.states[i];
        Array2::from_shape_fn((self.k, self.k), |(a, b)| {
            self.distances.get(s[a], s[b]).clone()
        })
    }

    pub fn entry(&self, i: usize, a: usize, b: usize) -> &S {
        self.distances.get(self.states[i][a], self.states[i][b])
    }
}

/// Draws `k` indices from `cdf` for sample `index`, one `u64` per draw.
fn draw(cdf: &[f64], seed: u64, level: usize, index: usize, k: usize) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(level as u64);
    rng.set_word_pos(2 * (index as u128) * (k as u128));
    (0..k)
        .map(|_| {
            let u = (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64;
            cdf.partition_point(|&c| c <= u).min(cdf.len() - 1)
        })
        .collect()
}

fn cdf<S: Scalar>(weights: &[S]) -> Vec<f64> {
    let mut acc = 0.0;
    let mut out: Vec<f64> = weights
        .iter()
        .map(|w| {
            acc += w.to_f64();
            acc
        })
        .collect();
    if let Some(last) = out.last_mut() {
        *last = 1.0;
    }
    out
}

/// Samples from a level marginal and a semimetric on its states.
pub fn sample_from_semimetric<S: Scalar>(
    weights: &[S],
    distances: &Semimetric<S>,
    level: usize,
    semantics: Semantics,
    k: usize,
    count: usize,
    seed: u64,
) -> Result<DistanceMatrixSample<S>> {
    if k < 2 {
        return Err(Error::MatrixTooSmall { k, min: 2 });
    }
    if count == 0 {
        return Err(Error::EmptySample);
    }
    if weights.len() != distances.size() {
        return Err(Error::DimensionMismatch {
            expected: distances.size(),
            found: weights.len(),
        });
    }
    let cdf = cdf(weights);
    let states = (0..count)
        .into_par_iter()
        .map(|i| draw(&cdf, seed, level, i, k))
        .collect();
    Ok(DistanceMatrixSample {
        level,
        semantics,
        k,
        seed,
        states,
        distances: distances.clone(),
    })
}

pub fn sample_matrix_distribution<S: Scalar>(
    model: &MarkovModel<S>,
    report: &IterationReport<S>,
    n: usize,
    k: usize,
    count: usize,
    seed: u64,
) -> Result<DistanceMatrixSample<S>> {
    let lvl = report.level(n).ok_or(Error::LevelMissing(n))?;
    let mu = model.level_marginal(n)?.weights;
    sample_from_semimetric(&mu, &lvl.distances, n, report.semantics, k, count, seed)
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalDistanceLaw<S> {
    /// Distinct distances in increasing order with their frequencies.
    pub points: Vec<(S, f64)>,
    pub count: usize,
    /// Largest 95% normal-approximation half-width over the points.
    pub ci_half_width: f64,
}

impl<S: Scalar> EmpiricalDistanceLaw<S> {
    pub fn frequency(&self, value: &S) -> f64 {
        self.points
            .iter()
            .find(|(v, _)| v == value)
            .map_or(0.0, |(_, f)| *f)
    }

    pub fn as_f64(&self) -> Vec<(f64, f64)> {
        self.points.iter().map(|(v, f)| (v.to_f64(), *f)).collect()
    }
}

fn law_of<S: Scalar>(values: impl Iterator<Item = S>) -> Result<EmpiricalDistanceLaw<S>> {
    let mut counts: Vec<(S, usize)> = Vec::new();
    let mut total = 0usize;
    for v in values {
        total += 1;
        match counts.iter_mut().find(|(x, _)| *x == v) {
            Some(c) => c.1 += 1,
            None => counts.push((v, 1)),
        }
    }
    if total == 0 {
        return Err(Error::EmptySample);
    }
    counts.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("comparable"));
    let n = total as f64;
    let points: Vec<(S, f64)> = counts.into_iter().map(|(v, c)| (v, c as f64 / n)).collect();
    let ci_half_width = points
        .iter()
        .map(|(_, p)| 1.96 * (p * (1.0 - p) / n).sqrt())
        .fold(0.0, f64::max);
    Ok(EmpiricalDistanceLaw {
        points,
        count: total,
        ci_half_width,
    })
}

/// Empirical law of the `(0, 1)` entry.
pub fn two_point_law<S: Scalar>(
    sample: &DistanceMatrixSample<S>,
) -> Result<EmpiricalDistanceLaw<S>> {
    law_of((0..sample.count()).map(|i| sample.entry(i, 0, 1).clone()))
}

/// Law of `d(x, y)` for independent `x, y` drawn from `weights`.
pub fn exact_two_point_law<S: Scalar>(weights: &[S], distances: &Semimetric<S>) -> Vec<(S, S)> {
    let mut law: Vec<(S, S)> = Vec::new();
    for (a, wa) in weights.iter().enumerate() {
        for (b, wb) in weights.iter().enumerate() {
            let v = distances.get(a, b).clone();
            let w = wa.clone() * wb.clone();
            match law.iter_mut().find(|(x, _)| *x == v) {
                Some(e) => e.1 = e.1.clone() + w,
                None => law.push((v, w)),
            }
        }
    }
    law.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("comparable"));
    law
}

/// Total variation between two finitely supported laws on the line.
pub fn law_total_variation(a: &[(f64, f64)], b: &[(f64, f64)]) -> f64 {
    let mut points: Vec<f64> = a.iter().chain(b).map(|p| p.0).collect();
    points.sort_by(f64::total_cmp);
    points.dedup();
    let mass =
        |law: &[(f64, f64)], x: f64| law.iter().filter(|p| p.0 == x).map(|p| p.1).sum::<f64>();
    0.5 * points
        .iter()
        .map(|&x| (mass(a, x) - mass(b, x)).abs())
        .sum::<f64>()
}

/// Kantorovich distance between two laws on the line with ground metric `|x - y|`.
pub fn law_distance(a: &[(f64, f64)], b: &[(f64, f64)]) -> Result<f64> {
    let mut points: Vec<f64> = a.iter().chain(b).map(|p| p.0).collect();
    points.sort_by(f64::total_cmp);
    points.dedup();
    let weights = |law: &[(f64, f64)]| -> Vec<f64> {
        let total: f64 = law.iter().map(|p| p.1).sum();
        points
            .iter()
            .map(|&x| law.iter().filter(|p| p.0 == x).map(|p| p.1).sum::<f64>() / total)
            .collect()
    };
    Ok(kantorovich(&weights(a), &weights(b), &Semimetric::line(&points))?.value)
}

/// `eps`-covering number of a set of points on the line.
pub fn secondary_entropy(points: &[f64], eps: f64) -> usize {
    let mut xs = points.to_vec();
    xs.sort_by(f64::total_cmp);
    let mut count = 0;
    let mut covered_to = f64::NEG_INFINITY;
    for x in xs {
        if x > covered_to {
            count += 1;
            covered_to = x + 2.0 * eps;
        }
    }
    count
}

#[derive(Debug, Clone, PartialEq)]
pub struct LevelLaw<S> {
    pub level: usize,
    pub empirical: EmpiricalDistanceLaw<S>,
    /// Present when the level has at most [`EXACT_LAW_LIMIT`] states.
    pub exact: Option<Vec<(S, S)>>,
    pub tv_to_exact: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StabilizationReport<S> {
    pub semantics: Semantics,
    pub laws: Vec<LevelLaw<S>>,
    /// Kantorovich distances between the empirical laws of consecutive listed levels.
    pub successive: Vec<f64>,
    pub tol: f64,
    pub stabilized: bool,
    /// First listed level from which every successive distance is below `tol`.
    pub stabilized_from: Option<usize>,
}

/// Default tolerance for comparing empirical laws built from `count` samples.
pub fn sampling_tolerance(count: usize) -> f64 {
    let c = count.max(2) as f64;
    4.0 * (c.ln() / c).sqrt()
}

pub fn level_law<S: Scalar>(
    model: &MarkovModel<S>,
    report: &IterationReport<S>,
    n: usize,
    k: usize,
    count: usize,
    seed: u64,
) -> Result<(DistanceMatrixSample<S>, LevelLaw<S>)> {
    let sample = sample_matrix_distribution(model, report, n, k, count, seed)?;
    let empirical = two_point_law(&sample)?;
    let mu = model.level_marginal(n)?.weights;
    let exact = (mu.len() <= EXACT_LAW_LIMIT).then(|| exact_two_point_law(&mu, &sample.distances));
    let tv_to_exact = exact.as_ref().map(|e| {
        let e: Vec<(f64, f64)> = e.iter().map(|(v, w)| (v.to_f64(), w.to_f64())).collect();
        law_total_variation(&empirical.as_f64(), &e)
    });
    Ok((
        sample,
        LevelLaw {
            level: n,
            empirical,
            exact,
            tv_to_exact,
        },
    ))
}

#[allow(clippy::too_many_arguments)]
pub fn shadow_stabilization<S: Scalar>(
    model: &MarkovModel<S>,
    init: &InitialMetricSpec<S>,
    semantics: Semantics,
    k: usize,
    count: usize,
    levels: &[usize],
    seed: u64,
    tol: f64,
) -> Result<StabilizationReport<S>> {
    let top = *levels
        .iter()
        .max()
        .ok_or_else(|| Error::Invalid("no levels given".into()))?;
    let report = iterate(model, init, top, semantics)?;
    let mut laws = Vec::with_capacity(levels.len());
    for &n in levels {
        laws.push(level_law(model, &report, n, k, count, seed)?.1);
    }
    let successive = laws
        .windows(2)
        .map(|w| law_distance(&w[0].empirical.as_f64(), &w[1].empirical.as_f64()))
        .collect::<Result<Vec<f64>>>()?;
    let settled = successive
        .iter()
        .rposition(|&d| d >= tol)
        .map_or(0, |i| i + 1);
    let stabilized = successive.last().map_or(true, |&d| d < tol);
    let stabilized_from = stabilized.then(|| laws[settled].level);
    Ok(StabilizationReport {
        semantics,
        laws,
        successive,
        tol,
        stabilized,
        stabilized_from,
    })
}

/// Largest total variation between the law of entry `(0, 1)` and the law of
/// any other off-diagonal entry.
pub fn exchangeability_check<S: Scalar>(sample: &DistanceMatrixSample<S>) -> Result<f64> {
    if sample.k < 3 {
        return Err(Error::MatrixTooSmall {
            k: sample.k,
            min: 3,
        });
    }
    if sample.count() == 0 {
        return Err(Error::EmptySample);
    }
    let reference = two_point_law(sample)?.as_f64();
    let mut worst: f64 = 0.0;
    for a in 0..sample.k {
        for b in 0..sample.k {
            if a == b || (a, b) == (0, 1) {
                continue;
            }
            let law = law_of((0..sample.count()).map(|i| sample.entry(i, a, b).clone()))?.as_f64();
            worst = worst.max(law_total_variation(&reference, &law));
        }
    }
    Ok(worst)
}

#[derive(Debug, Serialize)]
struct LawRow {
    level: usize,
    distance: String,
    frequency: f64,
}

/// Writes `level, distance, frequency` rows for each law.
pub fn write_law_csv<S: Scalar, W: Write>(laws: &[LevelLaw<S>], out: W) -> Result<()> {
    let io = |e: csv::Error| Error::Io(std::io::Error::other(e));
    let mut w = csv::Writer::from_writer(out);
    for l in laws {
        for (v, f) in &l.empirical.points {
            w.serialize(LawRow {
                level: l.level,
                distance: v.repr(),
                frequency: *f,
            })
            .map_err(io)?;
        }
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators;
    use crate::numeric::Rational;

    fn q(n: i64, d: i64) -> Rational {
        Rational::ratio(n, d)
    }

    fn report(m: &MarkovModel<Rational>, n: usize, s: Semantics) -> IterationReport<Rational> {
        iterate(m, &InitialMetricSpec::DiscreteOnLevel0, n, s).unwrap()
    }

    #[test]
    fn bernoulli_matrices_vanish() {
        let m = generators::bernoulli(q(3, 4), 4).unwrap();
        let r = report(&m, 4, Semantics::Kantorovich);
        let s = sample_matrix_distribution(&m, &r, 3, 4, 200, 1).unwrap();
        assert!((0..s.count()).all(|i| s.matrix(i).iter().all(|x| *x == q(0, 1))));
        assert_eq!(exchangeability_check(&s).unwrap(), 0.0);
        let law = two_point_law(&s).unwrap();
        assert_eq!(law.points, vec![(q(0, 1), 1.0)]);
    }

    #[test]
    fn symmetric_two_point_laws() {
        let m = generators::symmetric(q(3, 4), 10).unwrap();
        let tv = report(&m, 10, Semantics::TvRefresh);
        let (_, law) = level_law(&m, &tv, 8, 2, 10_000, 0).unwrap();
        assert_eq!(
            law.exact.as_ref().unwrap(),
            &vec![(q(0, 1), q(1, 2)), (q(1, 2), q(1, 2))]
        );
        assert!(law.tv_to_exact.unwrap() < 0.02);
        let kt = report(&m, 10, Semantics::Kantorovich);
        let (_, law) = level_law(&m, &kt, 10, 2, 10_000, 0).unwrap();
        let values: Vec<_> = law.empirical.points.iter().map(|p| p.0.clone()).collect();
        assert_eq!(values, vec![q(0, 1), q(1, 1024)]);
    }

    #[test]
    fn sampling_is_reproducible_and_thread_independent() {
        let m = generators::symmetric(q(2, 3), 4).unwrap();
        let r = report(&m, 4, Semantics::TvRefresh);
        let a = sample_matrix_distribution(&m, &r, 3, 3, 500, 42).unwrap();
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap();
        let b = pool.install(|| sample_matrix_distribution(&m, &r, 3, 3, 500, 42).unwrap());
        assert_eq!(a, b);
        let c = sample_matrix_distribution(&m, &r, 3, 3, 500, 43).unwrap();
        assert_ne!(a.states, c.states);
        assert_eq!(draw(&[0.5, 1.0], 42, 3, 7, 3), a.states[7]);
    }

    #[test]
    fn stabilization() {
        let m = generators::symmetric(q(3, 4), 8).unwrap();
        let init = InitialMetricSpec::DiscreteOnLevel0;
        let tol = sampling_tolerance(4000);
        let tv = shadow_stabilization(
            &m,
            &init,
            Semantics::TvRefresh,
            2,
            4000,
            &[2, 4, 6, 8],
            5,
            tol,
        )
        .unwrap();
        assert!(tv.stabilized);
        assert_eq!(tv.stabilized_from, Some(2));
        let kt = shadow_stabilization(
            &m,
            &init,
            Semantics::Kantorovich,
            2,
            4000,
            &[1, 2, 3],
            5,
            0.01,
        )
        .unwrap();
        assert!(!kt.stabilized);
        assert!(kt.successive[0] > kt.successive[1]);
    }

    #[test]
    fn errors() {
        let m = generators::symmetric(q(3, 4), 4).unwrap();
        let r = report(&m, 4, Semantics::TvRefresh);
        assert!(matches!(
            sample_matrix_distribution(&m, &r, 2, 1, 10, 0),
            Err(Error::MatrixTooSmall { .. })
        ));
        assert!(matches!(
            sample_matrix_distribution(&m, &r, 2, 2, 0, 0),
            Err(Error::EmptySample)
        ));
        assert!(matches!(
            sample_matrix_distribution(&m, &r, 0, 2, 10, 0),
            Err(Error::LevelMissing(0))
        ));
        let s = sample_matrix_distribution(&m, &r, 2, 2, 10, 0).unwrap();
        assert!(matches!(
            exchangeability_check(&s),
            Err(Error::MatrixTooSmall { .. })
        ));
    }

    #[test]
    fn covering_numbers() {
        assert_eq!(secondary_entropy(&[0.0, 0.5], 0.1), 2);
        assert_eq!(secondary_entropy(&[0.0, 0.5], 0.3), 1);
        assert_eq!(secondary_entropy(&[], 0.3), 0);
    }

    #[test]
    fn csv_rows() {
        let m = generators::symmetric(q(3, 4), 2).unwrap();
        let r = report(&m, 2, Semantics::TvRefresh);
        let (_, law) = level_law(&m, &r, 1, 2, 100, 0).unwrap();
        let mut buf = Vec::new();
        write_law_csv(&[law], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("level,distance,frequency\n1,0,"));
        assert!(text.contains("\n1,1/2,"));
    }
}
