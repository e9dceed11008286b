//! Built-in models.

use ndarray::Array2;
use rand::Rng;

use crate::error::Result;
use crate::iteration::FunctionSpec;
use crate::model::{BratteliMeasure, MarkovModel};
use crate::numeric::Scalar;
use crate::transport::Semimetric;

fn two_by_two<S: Scalar>(a: S, b: S, c: S, d: S) -> Array2<S> {
    Array2::from_shape_vec((2, 2), vec![a, b, c, d]).expect("2x2")
}

/// Independent coordinates: every row of the transition matrix is `(p, 1-p)`.
pub fn bernoulli<S: Scalar>(p: S, horizon: usize) -> Result<MarkovModel<S>> {
    let q = S::one() - p.clone();
    MarkovModel::stationary(
        two_by_two(p.clone(), q.clone(), p.clone(), q.clone()),
        vec![p, q],
        horizon,
    )
}

/// Symmetric two-state chain `[[p, q], [q, p]]` started from its uniform
/// stationary law.
pub fn symmetric<S: Scalar>(p: S, horizon: usize) -> Result<MarkovModel<S>> {
    let q = S::one() - p.clone();
    let half = S::ratio(1, 2);
    MarkovModel::stationary(
        two_by_two(p.clone(), q.clone(), q, p),
        vec![half.clone(), half],
        horizon,
    )
}

/// Deterministic alternation between two states, started uniformly.
pub fn periodic<S: Scalar>(horizon: usize) -> Result<MarkovModel<S>> {
    let half = S::ratio(1, 2);
    MarkovModel::stationary(
        two_by_two(S::zero(), S::one(), S::one(), S::zero()),
        vec![half.clone(), half],
        horizon,
    )
}

/// Pascal graph up to level `horizon`: vertex `(n, k)` has edges to
/// `(n+1, k)` and `(n+1, k+1)`. Central measure with the uniform
/// distribution on paths.
pub fn pascal<S: Scalar>(horizon: usize) -> Result<MarkovModel<S>> {
    let mult = (0..horizon)
        .map(|n| Array2::from_shape_fn((n + 1, n + 2), |(k, j)| u64::from(j == k || j == k + 1)))
        .collect();
    MarkovModel::bratteli(mult, BratteliMeasure::Central, None)
}

/// A single complete binary tree of height `height`: level `k` has
/// `2^(height-k)` states and state `i` moves to `i / 2`. The unique
/// top-level tree has uniform masses and distinct leaf states.
pub fn dyadic_tree<S: Scalar>(height: usize) -> Result<MarkovModel<S>> {
    let kernels = (0..height)
        .map(|k| {
            let (lo, hi) = (1usize << (height - k), 1usize << (height - k - 1));
            Array2::from_shape_fn(
                (lo, hi),
                |(i, j)| if i / 2 == j { S::one() } else { S::zero() },
            )
        })
        .collect();
    let n0 = 1usize << height;
    MarkovModel::explicit(kernels, vec![S::ratio(1, n0 as i64); n0])
}

/// Random inhomogeneous chain with `levels` kernels, at most `max_states`
/// states per level and weights that are multiples of `1/grain` before
/// normalization. Zero entries occur, so some states may be pruned.
pub fn random_explicit<S: Scalar, R: Rng + ?Sized>(
    rng: &mut R,
    levels: usize,
    max_states: usize,
    grain: i64,
) -> Result<MarkovModel<S>> {
    let mut sizes = Vec::with_capacity(levels + 1);
    for _ in 0..=levels {
        sizes.push(rng.gen_range(1..=max_states));
    }
    let kernels = (0..levels)
        .map(|n| random_stochastic(rng, sizes[n], sizes[n + 1], grain))
        .collect();
    let initial = random_distribution(rng, sizes[0], grain);
    MarkovModel::explicit(kernels, initial)
}

pub fn random_distribution<S: Scalar, R: Rng + ?Sized>(
    rng: &mut R,
    n: usize,
    grain: i64,
) -> Vec<S> {
    let mut w: Vec<i64> = (0..n).map(|_| rng.gen_range(0..=grain)).collect();
    if w.iter().all(|&x| x == 0) {
        let i = rng.gen_range(0..n);
        w[i] = 1;
    }
    let total: i64 = w.iter().sum();
    w.into_iter().map(|x| S::ratio(x, total)).collect()
}

pub fn random_stochastic<S: Scalar, R: Rng + ?Sized>(
    rng: &mut R,
    rows: usize,
    cols: usize,
    grain: i64,
) -> Array2<S> {
    let mut m = Array2::from_elem((rows, cols), S::zero());
    for i in 0..rows {
        for (j, x) in random_distribution::<S, R>(rng, cols, grain)
            .into_iter()
            .enumerate()
        {
            m[[i, j]] = x;
        }
    }
    m
}

/// Random metric on `n` points: shortest-path closure of integer edge
/// weights in `1..=grain`, so the triangle inequality holds exactly.
pub fn random_metric<S: Scalar, R: Rng + ?Sized>(
    rng: &mut R,
    n: usize,
    grain: i64,
) -> Semimetric<S> {
    let mut d = Array2::from_elem((n, n), S::zero());
    for a in 0..n {
        for b in a + 1..n {
            let w = S::from_int(rng.gen_range(1..=grain));
            d[[a, b]] = w.clone();
            d[[b, a]] = w;
        }
    }
    for k in 0..n {
        for a in 0..n {
            for b in 0..n {
                let via = d[[a, k]].clone() + d[[k, b]].clone();
                if via < d[[a, b]] {
                    d[[a, b]] = via;
                }
            }
        }
    }
    Semimetric::metric(d).expect("closure is a metric")
}

/// Random integer-valued function of the level-0 state of `model`, with
/// values in `0..=range`.
pub fn random_level0_function<S: Scalar, R: Rng + ?Sized>(
    rng: &mut R,
    model: &MarkovModel<S>,
    range: i64,
) -> FunctionSpec<S> {
    let entries = model
        .labels(0)
        .iter()
        .map(|&l| (vec![l], S::from_int(rng.gen_range(0..=range))));
    FunctionSpec::from_table(1, entries.collect::<Vec<_>>()).expect("depth-1 paths")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::Rational;
    use rand::SeedableRng;

    #[test]
    fn dyadic_tree_shape() {
        let m = dyadic_tree::<Rational>(3).unwrap();
        assert_eq!(
            (0..=3).map(|k| m.state_count(k)).collect::<Vec<_>>(),
            vec![8, 4, 2, 1]
        );
        let c = m.cotransitions(3).unwrap();
        assert_eq!(
            c.rows,
            vec![vec![Rational::ratio(1, 2), Rational::ratio(1, 2)]]
        );
    }

    #[test]
    fn random_metrics_are_metrics() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for n in 1..6 {
            let d = random_metric::<Rational, _>(&mut rng, n, 5);
            assert!(Semimetric::validated(d.matrix().clone(), false).is_ok());
        }
    }

    #[test]
    fn random_models_are_valid() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let m = random_explicit::<Rational, _>(&mut rng, 5, 4, 3).unwrap();
            for n in 1..=m.horizon() {
                let c = m.cotransitions(n).unwrap();
                assert!(c
                    .rows
                    .iter()
                    .all(|r| Rational::sum(r) == Rational::from_int(1)));
            }
        }
    }
}
