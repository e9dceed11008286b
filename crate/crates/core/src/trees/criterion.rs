use std::sync::Arc;

use rayon::prelude::*;

use super::coupling::{
    check_depth, CouplingDp, LeafCost, LeafValuation, TreeCouplingSemantics, ValuationCost,
};
use super::{EquippedTree, TreeBuilder};
use crate::error::{Error, Result};
use crate::iteration::{FunctionSpec, InitialMetricSpec};
use crate::model::MarkovModel;
use crate::numeric::Scalar;
use crate::transport::Semimetric;

#[derive(Debug, Clone, PartialEq)]
pub struct PairDistance<S> {
    pub a: usize,
    pub b: usize,
    /// `None` when the semantics admits no coupling of the two trees.
    pub distance: Option<S>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CriterionReport<S> {
    pub level: usize,
    pub semantics: TreeCouplingSemantics,
    pub eps: f64,
    /// Unordered pairs `a <= b` of retained level states.
    pub pairs: Vec<PairDistance<S>>,
    /// `mu x mu` mass of ordered pairs whose distance is below `eps`.
    pub pair_mass_below_eps: S,
    pub satisfied: bool,
}

impl<S: Scalar> CriterionReport<S> {
    pub fn distance(&self, a: usize, b: usize) -> Option<&PairDistance<S>> {
        let (a, b) = (a.min(b), a.max(b));
        self.pairs.iter().find(|p| p.a == a && p.b == b)
    }

    pub fn no_coupling_count(&self) -> usize {
        self.pairs.iter().filter(|p| p.distance.is_none()).count()
    }
}

fn all_pairs(n: usize) -> Vec<(usize, usize)> {
    (0..n).flat_map(|a| (a..n).map(move |b| (a, b))).collect()
}

fn pair_distances<S: Scalar, C: LeafCost<S>>(
    trees: &[Arc<EquippedTree<S>>],
    pairs: &[(usize, usize)],
    cost: &C,
    semantics: TreeCouplingSemantics,
) -> Result<Vec<Option<S>>> {
    pairs
        .par_iter()
        .map(|&(a, b)| {
            let mut dp = CouplingDp::new(semantics, cost);
            match dp.distance(&trees[a], &[], &trees[b], &[]) {
                Ok(d) => Ok(Some(d)),
                Err(Error::NoCoupling) => Ok(None),
                Err(e) => Err(e),
            }
        })
        .collect()
}

/// Checks whether the level-`n` elements can be coupled pairwise so that
/// `f` moves by less than `eps`, on a set of pairs of `mu_n x mu_n` mass
/// above `1 - eps`.
pub fn criterion_check<S: Scalar>(
    model: &MarkovModel<S>,
    f: &FunctionSpec<S>,
    eps: f64,
    n: usize,
    semantics: TreeCouplingSemantics,
) -> Result<CriterionReport<S>> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::Invalid(format!("eps must lie in (0, 1), got {eps}")));
    }
    let trees = TreeBuilder::new(model).level(n)?;
    let valuation = LeafValuation::new(f.clone());
    let cost = ValuationCost {
        left: &valuation,
        right: &valuation,
    };
    check_depth(&trees[0], &cost)?;
    let pairs = all_pairs(trees.len());
    let distances = pair_distances(&trees, &pairs, &cost, semantics)?;
    let mu = model.level_marginal(n)?.weights;
    let mut below = S::zero();
    for (&(a, b), d) in pairs.iter().zip(&distances) {
        if d.as_ref().is_some_and(|d| d.to_f64() < eps) {
            let w = mu[a].clone() * mu[b].clone();
            below = below + if a == b { w.clone() } else { w.clone() + w };
        }
    }
    let satisfied = below.to_f64() > 1.0 - eps;
    let pairs = pairs
        .into_iter()
        .zip(distances)
        .map(|((a, b), distance)| PairDistance { a, b, distance })
        .collect();
    Ok(CriterionReport {
        level: n,
        semantics,
        eps,
        pairs,
        pair_mass_below_eps: below,
        satisfied,
    })
}

/// The criterion for the quotient filtration seen from level `k`: the
/// model re-based at `k`, checked at level `n - k`.
pub fn quotient_criterion<S: Scalar>(
    model: &MarkovModel<S>,
    f: &FunctionSpec<S>,
    eps: f64,
    n: usize,
    k: usize,
    semantics: TreeCouplingSemantics,
) -> Result<CriterionReport<S>> {
    if k >= n {
        return Err(Error::Invalid(format!(
            "quotient level {k} must be below {n}"
        )));
    }
    criterion_check(&model.rebased(k)?, f, eps, n - k, semantics)
}

impl<S: Scalar> LeafCost<S> for InitialMetricSpec<S> {
    fn depth(&self) -> usize {
        InitialMetricSpec::depth(self)
    }

    fn cost(&self, x: &[usize], y: &[usize]) -> Result<S> {
        InitialMetricSpec::cost(self, x, y)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MartingaleReport<S> {
    /// Level of the states indexing `distances`, one above the argument `n`.
    pub level: usize,
    pub distances: Semimetric<S>,
    /// `sum mu(x) mu(y) r(x, y)`.
    pub integral: S,
}

/// `r_n(x, y)`: the smallest expected ground distance between the first
/// coordinates over recursive couplings of the level-`(n+1)` elements `x`
/// and `y`.
pub fn martingale_distance<S: Scalar>(
    model: &MarkovModel<S>,
    n: usize,
    rho: &InitialMetricSpec<S>,
) -> Result<MartingaleReport<S>> {
    let level = n + 1;
    if level > model.horizon() {
        return Err(Error::HorizonExceeded {
            requested: level,
            horizon: model.horizon(),
        });
    }
    let trees = TreeBuilder::new(model).level(level)?;
    check_depth(&trees[0], rho)?;
    let pairs: Vec<(usize, usize)> = all_pairs(trees.len())
        .into_iter()
        .filter(|(a, b)| a < b)
        .collect();
    let distances = pair_distances(&trees, &pairs, rho, TreeCouplingSemantics::MarkovRecursive)?;
    let mut d = ndarray::Array2::from_elem((trees.len(), trees.len()), S::zero());
    let mu = model.level_marginal(level)?.weights;
    let mut integral = S::zero();
    for (&(a, b), v) in pairs.iter().zip(distances) {
        let v = v.expect("recursive couplings always exist");
        integral = integral + (mu[a].clone() * mu[b].clone() * v.clone()) * S::from_int(2);
        d[[a, b]] = v.clone();
        d[[b, a]] = v;
    }
    Ok(MartingaleReport {
        level,
        distances: Semimetric::from_trusted(d),
        integral,
    })
}
