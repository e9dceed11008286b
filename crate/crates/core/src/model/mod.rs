//! Finite-type filtrations realized as inhomogeneous finite-state Markov
//! chains.
//!
//! Time runs forward along the chain `x_0, x_1, ...`; the partition at
//! level `n` fixes the tail `x_n, x_{n+1}, ...` and frees the first `n`
//! coordinates. Conditional structure therefore comes from cotransition
//! kernels, the Bayes inversions of the forward kernels.
//!
//! States with zero mass are pruned when a model is built. Every level
//! keeps the original ids of its retained states in [`MarkovModel::labels`];
//! all other indices in the crate refer to retained (pruned) positions.

mod file;

use std::borrow::Cow;

use ndarray::Array2;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::numeric::{half_l1, Scalar};

pub use file::{BratteliMeasureSpec, ModelFile};

/// Multiplicity matrices of a Bratteli diagram: entry `(c, v)` counts edges
/// from vertex `c` at level `n` to vertex `v` at level `n + 1`.
pub type Multiplicities = Vec<Array2<u64>>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Explicit,
    Stationary,
    Bratteli,
}

#[derive(Debug, Clone)]
enum Kernels<S> {
    /// One kernel per level, already restricted to retained states.
    Pruned(Vec<Array2<S>>),
    /// A single raw matrix shared by all levels.
    Stationary(Array2<S>),
}

#[derive(Debug, Clone)]
struct Level<S> {
    labels: Vec<usize>,
    marginal: Vec<S>,
}

/// Measure on a Bratteli diagram given by cotransitions.
#[derive(Debug, Clone)]
pub enum BratteliMeasure<S> {
    /// Cotransitions proportional to path counts from level 0.
    Central,
    /// One matrix per level `n >= 1`: rows are level-`n` vertices, columns
    /// level-`(n-1)` vertices.
    Cotransitions(Vec<Array2<S>>),
}

/// Path counts from level 0, per level and original vertex id.
#[derive(Debug, Clone)]
pub struct BratteliData<S> {
    pub multiplicities: Multiplicities,
    pub dims: Vec<Vec<S>>,
}

#[derive(Debug, Clone)]
pub struct MarkovModel<S> {
    kind: ModelKind,
    kernels: Kernels<S>,
    levels: Vec<Level<S>>,
    bratteli: Option<BratteliData<S>>,
}

/// Distribution of the chain at one level.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelMeasure<S> {
    pub level: usize,
    pub weights: Vec<S>,
}

/// Conditional law of the level-`(n-1)` state given the level-`n` state.
#[derive(Debug, Clone, PartialEq)]
pub struct CotransitionKernel<S> {
    pub level: usize,
    pub rows: Vec<Vec<S>>,
}

impl<S: Scalar> CotransitionKernel<S> {
    pub fn row(&self, a: usize) -> Result<&[S]> {
        self.rows
            .get(a)
            .map(Vec::as_slice)
            .ok_or(Error::ZeroMassState {
                level: self.level,
                state: a,
            })
    }

    pub fn target_count(&self) -> usize {
        self.rows.first().map_or(0, Vec::len)
    }

    /// Dobrushin contraction coefficient: the largest total variation
    /// distance between two rows.
    pub fn dobrushin(&self) -> S {
        let mut best = S::zero();
        for a in 0..self.rows.len() {
            for b in a + 1..self.rows.len() {
                best = S::max_of(best, half_l1(&self.rows[a], &self.rows[b]));
            }
        }
        best
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ErgodicityReport {
    pub coefficients: Vec<String>,
    pub running_product: Vec<String>,
    pub tail_trivial_certified: bool,
}

/// Product of contraction coefficients at or below which the tail is
/// reported as certified trivial.
pub const CERTIFY_TOL: f64 = 1e-6;

fn validate_stochastic<S: Scalar>(what: &str, m: &Array2<S>) -> Result<()> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Err(Error::ShapeMismatch(format!(
            "{what} has shape {:?}",
            m.dim()
        )));
    }
    for (i, row) in m.rows().into_iter().enumerate() {
        if row.iter().any(|x| x.is_neg_beyond(&S::one())) {
            return Err(Error::NonStochasticRow {
                what: what.into(),
                row: i,
                sum: "negative entry".into(),
            });
        }
        let sum = S::sum(row.iter());
        if !sum.near(&S::one()) {
            return Err(Error::NonStochasticRow {
                what: what.into(),
                row: i,
                sum: sum.repr(),
            });
        }
    }
    Ok(())
}

fn validate_distribution<S: Scalar>(what: &str, v: &[S]) -> Result<()> {
    if v.is_empty() {
        return Err(Error::EmptyLevel(0));
    }
    if v.iter().any(|x| x.is_neg_beyond(&S::one())) {
        return Err(Error::NonStochasticRow {
            what: what.into(),
            row: 0,
            sum: "negative entry".into(),
        });
    }
    let sum = S::sum(v);
    if !sum.near(&S::one()) {
        return Err(Error::NonStochasticRow {
            what: what.into(),
            row: 0,
            sum: sum.repr(),
        });
    }
    Ok(())
}

fn vec_mat<S: Scalar>(v: &[S], m: &Array2<S>) -> Vec<S> {
    (0..m.ncols())
        .map(|j| {
            v.iter()
                .enumerate()
                .filter(|(_, x)| !x.is_zero())
                .fold(S::zero(), |acc, (i, x)| acc + x.clone() * m[[i, j]].clone())
        })
        .collect()
}

fn restrict<S: Scalar>(m: &Array2<S>, rows: &[usize], cols: &[usize]) -> Array2<S> {
    Array2::from_shape_fn((rows.len(), cols.len()), |(i, j)| {
        m[[rows[i], cols[j]]].clone()
    })
}

fn matmul<S: Scalar>(a: &Array2<S>, b: &Array2<S>) -> Array2<S> {
    Array2::from_shape_fn((a.nrows(), b.ncols()), |(i, j)| {
        (0..a.ncols()).fold(S::zero(), |acc, k| {
            if a[[i, k]].is_zero() {
                acc
            } else {
                acc + a[[i, k]].clone() * b[[k, j]].clone()
            }
        })
    })
}

fn support<S: Scalar>(v: &[S]) -> Vec<usize> {
    (0..v.len()).filter(|&i| v[i] > S::zero()).collect()
}

impl<S: Scalar> MarkovModel<S> {
    /// Inhomogeneous chain given by one forward kernel per level.
    pub fn explicit(kernels: Vec<Array2<S>>, initial: Vec<S>) -> Result<Self> {
        validate_distribution("initial", &initial)?;
        let mut width = initial.len();
        for (n, k) in kernels.iter().enumerate() {
            if k.nrows() != width {
                return Err(Error::ShapeMismatch(format!(
                    "kernel {n} has {} rows, level {n} has {width} states",
                    k.nrows()
                )));
            }
            validate_stochastic(&format!("kernel {n}"), k)?;
            width = k.ncols();
        }
        let mut marginals = vec![initial];
        for k in &kernels {
            let next = vec_mat(marginals.last().expect("nonempty"), k);
            marginals.push(next);
        }
        let levels = Self::prune(marginals)?;
        let pruned = kernels
            .iter()
            .enumerate()
            .map(|(n, k)| restrict(k, &levels[n].labels, &levels[n + 1].labels))
            .collect();
        Ok(MarkovModel {
            kind: ModelKind::Explicit,
            kernels: Kernels::Pruned(pruned),
            levels,
            bratteli: None,
        })
    }

    /// Time-homogeneous chain, unrolled to `horizon` levels.
    pub fn stationary(matrix: Array2<S>, initial: Vec<S>, horizon: usize) -> Result<Self> {
        validate_distribution("initial", &initial)?;
        if matrix.nrows() != matrix.ncols() || matrix.nrows() != initial.len() {
            return Err(Error::ShapeMismatch(format!(
                "stationary matrix {:?} with initial of length {}",
                matrix.dim(),
                initial.len()
            )));
        }
        validate_stochastic("matrix", &matrix)?;
        let mut marginals = vec![initial];
        for _ in 0..horizon {
            let next = vec_mat(marginals.last().expect("nonempty"), &matrix);
            marginals.push(next);
        }
        let levels = Self::prune(marginals)?;
        Ok(MarkovModel {
            kind: ModelKind::Stationary,
            kernels: Kernels::Stationary(matrix),
            levels,
            bratteli: None,
        })
    }

    /// Measure on the paths of a Bratteli diagram with levels `0..=N`,
    /// `N = multiplicities.len()`. `boundary` is the distribution of the
    /// level-`N` vertex; by default it is proportional to the number of
    /// paths reaching each vertex (uniform measure on paths).
    pub fn bratteli(
        multiplicities: Multiplicities,
        measure: BratteliMeasure<S>,
        boundary: Option<Vec<S>>,
    ) -> Result<Self> {
        if multiplicities.is_empty() {
            return Err(Error::Invalid(
                "Bratteli diagram needs at least one edge level".into(),
            ));
        }
        for n in 1..multiplicities.len() {
            if multiplicities[n].nrows() != multiplicities[n - 1].ncols() {
                return Err(Error::ShapeMismatch(format!(
                    "edge level {n} does not chain with level {}",
                    n - 1
                )));
            }
        }
        let top = multiplicities.len();
        let mut dims = vec![vec![S::one(); multiplicities[0].nrows()]];
        for m in &multiplicities {
            let prev = dims.last().expect("nonempty");
            let next = (0..m.ncols())
                .map(|v| {
                    (0..m.nrows()).fold(S::zero(), |acc, c| {
                        acc + S::from_int(m[[c, v]] as i64) * prev[c].clone()
                    })
                })
                .collect();
            dims.push(next);
        }
        // cot[n - 1] holds Q_n over original ids, rows for vertices with dim > 0.
        let cot: Vec<Array2<S>> = match measure {
            BratteliMeasure::Central => (1..=top)
                .map(|n| {
                    let m = &multiplicities[n - 1];
                    Array2::from_shape_fn((m.ncols(), m.nrows()), |(v, c)| {
                        if dims[n][v].is_zero() {
                            S::zero()
                        } else {
                            S::from_int(m[[c, v]] as i64) * dims[n - 1][c].clone()
                                / dims[n][v].clone()
                        }
                    })
                })
                .collect(),
            BratteliMeasure::Cotransitions(cs) => {
                if cs.len() != top {
                    return Err(Error::ShapeMismatch(format!(
                        "{} cotransition levels for {top} edge levels",
                        cs.len()
                    )));
                }
                for (i, c) in cs.iter().enumerate() {
                    let m = &multiplicities[i];
                    if c.dim() != (m.ncols(), m.nrows()) {
                        return Err(Error::ShapeMismatch(format!(
                            "cotransition level {} has shape {:?}",
                            i + 1,
                            c.dim()
                        )));
                    }
                    for ((v, u), x) in c.indexed_iter() {
                        if !x.is_zero() && m[[u, v]] == 0 {
                            return Err(Error::Invalid(format!(
                                "cotransition level {} puts mass on a missing edge {u}->{v}",
                                i + 1
                            )));
                        }
                    }
                }
                cs
            }
        };
        let boundary = match boundary {
            Some(b) => {
                if b.len() != dims[top].len() {
                    return Err(Error::DimensionMismatch {
                        expected: dims[top].len(),
                        found: b.len(),
                    });
                }
                b
            }
            None => {
                let total = S::sum(&dims[top]);
                dims[top]
                    .iter()
                    .map(|d| d.clone() / total.clone())
                    .collect()
            }
        };
        validate_distribution("boundary", &boundary)?;
        for (v, w) in boundary.iter().enumerate() {
            if *w > S::zero() && dims[top][v].is_zero() {
                return Err(Error::Invalid(format!(
                    "boundary mass on unreachable vertex {v}"
                )));
            }
        }
        let mut marginals = vec![boundary];
        for n in (1..=top).rev() {
            let q = &cot[n - 1];
            let upper = marginals.last().expect("nonempty");
            for v in support(upper) {
                validate_stochastic(
                    &format!("cotransition level {n} vertex {v}"),
                    &q.slice(ndarray::s![v..v + 1, ..]).to_owned(),
                )?;
            }
            let lower = vec_mat(upper, q);
            marginals.push(lower);
        }
        marginals.reverse();
        let levels = Self::prune(marginals)?;
        let kernels = (0..top)
            .map(|n| {
                let (lo, hi) = (&levels[n], &levels[n + 1]);
                Array2::from_shape_fn((lo.labels.len(), hi.labels.len()), |(i, j)| {
                    let (c, v) = (lo.labels[i], hi.labels[j]);
                    hi.marginal[j].clone() * cot[n][[v, c]].clone() / lo.marginal[i].clone()
                })
            })
            .collect();
        Ok(MarkovModel {
            kind: ModelKind::Bratteli,
            kernels: Kernels::Pruned(kernels),
            levels,
            bratteli: Some(BratteliData {
                multiplicities,
                dims,
            }),
        })
    }

    fn prune(marginals: Vec<Vec<S>>) -> Result<Vec<Level<S>>> {
        marginals
            .into_iter()
            .enumerate()
            .map(|(n, m)| {
                let labels = support(&m);
                if labels.is_empty() {
                    return Err(Error::EmptyLevel(n));
                }
                let marginal = labels.iter().map(|&i| m[i].clone()).collect();
                Ok(Level { labels, marginal })
            })
            .collect()
    }

    pub fn kind(&self) -> ModelKind {
        self.kind
    }

    pub fn horizon(&self) -> usize {
        self.levels.len() - 1
    }

    pub fn state_count(&self, n: usize) -> usize {
        self.levels.get(n).map_or(0, |l| l.labels.len())
    }

    pub fn max_state_count(&self) -> usize {
        self.levels
            .iter()
            .map(|l| l.labels.len())
            .max()
            .unwrap_or(0)
    }

    /// Original ids of the retained states at level `n`.
    pub fn labels(&self, n: usize) -> &[usize] {
        &self.levels[n].labels
    }

    /// Position of original state `state` among retained states at level `n`.
    pub fn retained_index(&self, n: usize, state: usize) -> Result<usize> {
        self.check_level(n)?;
        self.levels[n]
            .labels
            .iter()
            .position(|&l| l == state)
            .ok_or(Error::ZeroMassState { level: n, state })
    }

    pub fn bratteli_data(&self) -> Option<&BratteliData<S>> {
        self.bratteli.as_ref()
    }

    pub fn initial(&self) -> &[S] {
        &self.levels[0].marginal
    }

    fn check_level(&self, n: usize) -> Result<()> {
        if n > self.horizon() {
            return Err(Error::HorizonExceeded {
                requested: n,
                horizon: self.horizon(),
            });
        }
        Ok(())
    }

    /// Forward kernel from level `n` to level `n + 1`, on retained states.
    pub fn kernel(&self, n: usize) -> Result<Cow<'_, Array2<S>>> {
        if n >= self.horizon() {
            return Err(Error::HorizonExceeded {
                requested: n + 1,
                horizon: self.horizon(),
            });
        }
        Ok(match &self.kernels {
            Kernels::Pruned(ks) => Cow::Borrowed(&ks[n]),
            Kernels::Stationary(m) => {
                let (lo, hi) = (&self.levels[n].labels, &self.levels[n + 1].labels);
                if lo.len() == m.nrows() && hi.len() == m.ncols() {
                    Cow::Borrowed(m)
                } else {
                    Cow::Owned(restrict(m, lo, hi))
                }
            }
        })
    }

    pub fn level_marginal(&self, n: usize) -> Result<LevelMeasure<S>> {
        self.check_level(n)?;
        Ok(LevelMeasure {
            level: n,
            weights: self.levels[n].marginal.clone(),
        })
    }

    pub(crate) fn marginal(&self, n: usize) -> &[S] {
        &self.levels[n].marginal
    }

    /// `Q_n(a, c) = mu_{n-1}(c) P_{n-1}(c, a) / mu_n(a)`.
    pub fn cotransitions(&self, n: usize) -> Result<CotransitionKernel<S>> {
        if n == 0 {
            return Err(Error::NoPredecessorLevel);
        }
        self.check_level(n)?;
        let p = self.kernel(n - 1)?;
        let (lo, hi) = (&self.levels[n - 1].marginal, &self.levels[n].marginal);
        let rows = (0..hi.len())
            .map(|a| {
                (0..lo.len())
                    .map(|c| {
                        if p[[c, a]].is_zero() {
                            S::zero()
                        } else {
                            lo[c].clone() * p[[c, a]].clone() / hi[a].clone()
                        }
                    })
                    .collect()
            })
            .collect();
        Ok(CotransitionKernel { level: n, rows })
    }

    /// Cotransition kernels for levels `1..=n`; index `k - 1` holds `Q_k`.
    pub fn cotransitions_upto(&self, n: usize) -> Result<Vec<CotransitionKernel<S>>> {
        (1..=n).map(|k| self.cotransitions(k)).collect()
    }

    /// Passes to the levels listed in `schedule`: level `k` of the result is
    /// level `schedule[k]` of `self`, started from `mu_{schedule[0]}`.
    pub fn telescope(&self, schedule: &[usize]) -> Result<MarkovModel<S>> {
        if schedule.len() < 2 {
            return Err(Error::BadSchedule(format!(
                "{schedule:?} needs at least two levels"
            )));
        }
        if schedule.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::BadSchedule(format!(
                "{schedule:?} is not strictly increasing"
            )));
        }
        let last = *schedule.last().expect("nonempty");
        if last > self.horizon() {
            return Err(Error::BadSchedule(format!(
                "level {last} exceeds horizon {}",
                self.horizon()
            )));
        }
        let mut kernels = Vec::with_capacity(schedule.len() - 1);
        for w in schedule.windows(2) {
            let mut prod = self.kernel(w[0])?.into_owned();
            for n in w[0] + 1..w[1] {
                prod = matmul(&prod, self.kernel(n)?.as_ref());
            }
            kernels.push(prod);
        }
        MarkovModel::explicit(kernels, self.marginal(schedule[0]).to_vec())
    }

    /// The chain observed from level `k` on: level `j` of the result is
    /// level `k + j` of `self`, with `mu_k` as initial law.
    pub fn rebased(&self, k: usize) -> Result<MarkovModel<S>> {
        self.check_level(k)?;
        if k == 0 {
            return Ok(self.clone());
        }
        let kernels = (k..self.horizon())
            .map(|n| self.kernel(n).map(Cow::into_owned))
            .collect::<Result<Vec<_>>>()?;
        MarkovModel::explicit(kernels, self.marginal(k).to_vec())
    }

    /// Permutes retained states: `perms[n][a]` is the new index of state `a`
    /// at level `n`.
    pub fn relabeled(&self, perms: &[Vec<usize>]) -> Result<MarkovModel<S>> {
        if perms.len() != self.levels.len() {
            return Err(Error::DimensionMismatch {
                expected: self.levels.len(),
                found: perms.len(),
            });
        }
        for (n, p) in perms.iter().enumerate() {
            let mut seen = vec![false; self.state_count(n)];
            if p.len() != seen.len()
                || p.iter()
                    .any(|&x| x >= seen.len() || std::mem::replace(&mut seen[x], true))
            {
                return Err(Error::Invalid(format!("perms[{n}] is not a permutation")));
            }
        }
        let kernels = (0..self.horizon())
            .map(|n| {
                let k = self.kernel(n)?;
                let mut out = Array2::from_elem(k.dim(), S::zero());
                for ((i, j), x) in k.indexed_iter() {
                    out[[perms[n][i], perms[n + 1][j]]] = x.clone();
                }
                Ok(out)
            })
            .collect::<Result<Vec<_>>>()?;
        let mut initial = vec![S::zero(); self.state_count(0)];
        for (i, x) in self.initial().iter().enumerate() {
            initial[perms[0][i]] = x.clone();
        }
        MarkovModel::explicit(kernels, initial)
    }

    /// Dobrushin coefficients of the cotransition kernels for levels
    /// `1..=n` and their running product.
    pub fn ergodicity_diagnostic(&self, n: usize) -> Result<ErgodicityReport> {
        let mut coefficients = Vec::new();
        let mut running_product = Vec::new();
        let mut prod = S::one();
        for k in 1..=n {
            let c = self.cotransitions(k)?.dobrushin();
            prod = prod * c.clone();
            coefficients.push(c.repr());
            running_product.push(prod.repr());
        }
        let certified = n > 0 && prod.to_f64() <= CERTIFY_TOL;
        Ok(ErgodicityReport {
            coefficients,
            running_product,
            tail_trivial_certified: certified,
        })
    }

    /// Forward kernels for all levels on retained states.
    pub fn kernels(&self) -> Result<Vec<Array2<S>>> {
        (0..self.horizon())
            .map(|n| self.kernel(n).map(Cow::into_owned))
            .collect()
    }
}
