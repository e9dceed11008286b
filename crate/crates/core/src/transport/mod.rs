//! Optimal transport between probability vectors on a finite space.
//!
//! [`kantorovich`] solves the transport linear program exactly with a
//! network simplex on the bipartite supply/demand graph. The
//! [`brute_force_transport`] oracle enumerates the vertices of the
//! transportation polytope instead and shares no code with the solver.

mod brute;
mod simplex;

use ndarray::Array2;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::numeric::{half_l1, Scalar};

pub use brute::{brute_force_transport, brute_force_transport_cost, BRUTE_FORCE_LIMIT};
pub use simplex::solve_transport;

/// A symmetric, zero-diagonal, nonnegative distance matrix satisfying the
/// triangle inequality.
#[derive(Debug, Clone, PartialEq)]
pub struct Semimetric<S> {
    d: Array2<S>,
}

impl<S: Scalar> Semimetric<S> {
    /// Validates `d` as a semimetric; off-diagonal zeros are allowed.
    pub fn new(d: Array2<S>) -> Result<Self> {
        Self::validated(d, true)
    }

    /// Validates `d` as a metric: off-diagonal entries must be positive.
    pub fn metric(d: Array2<S>) -> Result<Self> {
        Self::validated(d, false)
    }

    pub fn validated(d: Array2<S>, semimetric: bool) -> Result<Self> {
        let (r, c) = d.dim();
        if r != c {
            return Err(Error::ShapeMismatch(format!(
                "distance matrix is {}x{}",
                r, c
            )));
        }
        let zero = S::zero();
        for a in 0..r {
            if !d[[a, a]].near(&zero) {
                return Err(Error::InvalidSemimetric(format!(
                    "d({a},{a}) = {}",
                    d[[a, a]]
                )));
            }
            for b in 0..r {
                if d[[a, b]].is_neg_beyond(&zero) {
                    return Err(Error::InvalidSemimetric(format!("d({a},{b}) is negative")));
                }
                if !d[[a, b]].near(&d[[b, a]]) {
                    return Err(Error::InvalidSemimetric(format!(
                        "d({a},{b}) != d({b},{a})"
                    )));
                }
                if a != b && !semimetric && !(d[[a, b]] > zero) {
                    return Err(Error::InvalidSemimetric(format!(
                        "d({a},{b}) = 0 in a metric"
                    )));
                }
            }
        }
        for a in 0..r {
            for b in 0..r {
                for m in 0..r {
                    let via = d[[a, m]].clone() + d[[m, b]].clone();
                    let excess = via - d[[a, b]].clone();
                    if excess.is_neg_beyond(&d[[a, b]]) {
                        return Err(Error::InvalidSemimetric(format!(
                            "triangle inequality fails for ({a},{m},{b})"
                        )));
                    }
                }
            }
        }
        Ok(Semimetric { d })
    }

    /// Trusted constructor for matrices that are semimetrics by construction.
    pub(crate) fn from_trusted(d: Array2<S>) -> Self {
        Semimetric { d }
    }

    pub fn discrete(n: usize) -> Self {
        Semimetric {
            d: Array2::from_shape_fn((n, n), |(a, b)| if a == b { S::zero() } else { S::one() }),
        }
    }

    pub fn zero(n: usize) -> Self {
        Semimetric {
            d: Array2::from_elem((n, n), S::zero()),
        }
    }

    /// `|x_a - x_b|` for points on the real line.
    pub fn line(points: &[S]) -> Self {
        let n = points.len();
        Semimetric {
            d: Array2::from_shape_fn((n, n), |(a, b)| {
                (points[a].clone() - points[b].clone()).abs()
            }),
        }
    }

    /// Graph distance on the path `0 - 1 - ... - (n-1)`.
    pub fn path(n: usize) -> Self {
        Semimetric {
            d: Array2::from_shape_fn((n, n), |(a, b)| S::from_int((a as i64 - b as i64).abs())),
        }
    }

    pub fn size(&self) -> usize {
        self.d.nrows()
    }

    pub fn get(&self, a: usize, b: usize) -> &S {
        &self.d[[a, b]]
    }

    pub fn matrix(&self) -> &Array2<S> {
        &self.d
    }

    pub fn scaled(&self, c: &S) -> Self {
        Semimetric {
            d: self.d.mapv(|x| x * c.clone()),
        }
    }

    /// `a * self + b * other` for nonnegative `a`, `b`.
    pub fn combine(&self, a: &S, other: &Semimetric<S>, b: &S) -> Result<Self> {
        if self.size() != other.size() {
            return Err(Error::DimensionMismatch {
                expected: self.size(),
                found: other.size(),
            });
        }
        let d = Array2::from_shape_fn(self.d.dim(), |ix| {
            a.clone() * self.d[ix].clone() + b.clone() * other.d[ix].clone()
        });
        Ok(Semimetric { d })
    }

    pub fn max_entry(&self) -> S {
        self.d.iter().cloned().fold(S::zero(), S::max_of)
    }
}

/// A joint mass matrix with prescribed marginals.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingPlan<S> {
    pub plan: Array2<S>,
    pub row_marginal: Vec<S>,
    pub col_marginal: Vec<S>,
}

impl<S: Scalar> CouplingPlan<S> {
    /// Total cost of the plan under `cost`.
    pub fn cost(&self, cost: &Array2<S>) -> S {
        self.plan
            .iter()
            .zip(cost.iter())
            .fold(S::zero(), |acc, (p, c)| {
                if p.is_zero() {
                    acc
                } else {
                    acc + p.clone() * c.clone()
                }
            })
    }

    /// Checks that row and column sums reproduce the marginals.
    pub fn is_consistent(&self) -> bool {
        let rows_ok = self
            .plan
            .rows()
            .into_iter()
            .zip(&self.row_marginal)
            .all(|(r, m)| S::sum(r.iter()).near(m));
        let cols_ok = self
            .plan
            .columns()
            .into_iter()
            .zip(&self.col_marginal)
            .all(|(c, m)| S::sum(c.iter()).near(m));
        rows_ok && cols_ok && self.plan.iter().all(|x| !x.is_neg_beyond(&S::one()))
    }

    /// Cells with positive mass, in row-major order.
    pub fn support(&self) -> Vec<(usize, usize, S)> {
        self.plan
            .indexed_iter()
            .filter(|(_, x)| !x.is_zero())
            .map(|((i, j), x)| (i, j, x.clone()))
            .collect()
    }
}

/// Optimal value together with a plan attaining it.
#[derive(Debug, Clone)]
pub struct Transport<S> {
    pub value: S,
    pub plan: CouplingPlan<S>,
}

pub(crate) fn check_probability<S: Scalar>(v: &[S]) -> Result<()> {
    if v.iter().any(|x| x.is_neg_beyond(&S::one())) {
        return Err(Error::NotNormalized("negative entry".into()));
    }
    let total = S::sum(v);
    if !total.near(&S::one()) {
        return Err(Error::NotNormalized(total.repr()));
    }
    Ok(())
}

/// Kantorovich distance between `alpha` and `beta` over the points of
/// `ground`, with an optimal coupling.
pub fn kantorovich<S: Scalar>(
    alpha: &[S],
    beta: &[S],
    ground: &Semimetric<S>,
) -> Result<Transport<S>> {
    let n = ground.size();
    for v in [alpha, beta] {
        if v.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: v.len(),
            });
        }
    }
    check_probability(alpha)?;
    check_probability(beta)?;
    solve_transport(alpha, beta, ground.matrix())
}

/// `(1/2) * sum |alpha_i - beta_i|`.
pub fn total_variation<S: Scalar>(alpha: &[S], beta: &[S]) -> Result<S> {
    if alpha.len() != beta.len() {
        return Err(Error::DimensionMismatch {
            expected: alpha.len(),
            found: beta.len(),
        });
    }
    Ok(half_l1(alpha, beta))
}

/// Serializable form of a transport instance, for golden files.
#[derive(Debug, Clone, Serialize, serde::Deserialize, PartialEq)]
pub struct TransportInstance {
    pub alpha: Vec<String>,
    pub beta: Vec<String>,
    pub ground: Vec<Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub value: Option<String>,
}

impl TransportInstance {
    pub fn new<S: Scalar>(
        alpha: &[S],
        beta: &[S],
        ground: &Semimetric<S>,
        value: Option<&S>,
    ) -> Self {
        TransportInstance {
            alpha: alpha.iter().map(Scalar::repr).collect(),
            beta: beta.iter().map(Scalar::repr).collect(),
            ground: ground
                .matrix()
                .rows()
                .into_iter()
                .map(|r| r.iter().map(Scalar::repr).collect())
                .collect(),
            value: value.map(Scalar::repr),
        }
    }

    pub fn parse<S: Scalar>(&self) -> Result<(Vec<S>, Vec<S>, Semimetric<S>)> {
        let parse_vec = |v: &[String]| {
            v.iter()
                .map(|s| S::parse_number(s))
                .collect::<Result<Vec<S>>>()
        };
        let alpha = parse_vec(&self.alpha)?;
        let beta = parse_vec(&self.beta)?;
        let n = self.ground.len();
        let mut d = Array2::from_elem((n, n), S::zero());
        for (a, row) in self.ground.iter().enumerate() {
            if row.len() != n {
                return Err(Error::ShapeMismatch(format!(
                    "ground row {a} has {} entries",
                    row.len()
                )));
            }
            for (b, x) in row.iter().enumerate() {
                d[[a, b]] = S::parse_number(x)?;
            }
        }
        Ok((alpha, beta, Semimetric::new(d)?))
    }
}
