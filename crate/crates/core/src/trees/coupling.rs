use std::collections::{BTreeMap, HashMap};

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::{EquippedTree, TreeCanonicalForm};
use crate::error::{Error, Result};
use crate::iteration::FunctionSpec;
use crate::numeric::Scalar;
use crate::transport::solve_transport;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TreeCouplingSemantics {
    /// Any coupling of the children laws at each node pair, recursively.
    MarkovRecursive,
    /// Tree automorphisms; every node must split its mass uniformly.
    AutomorphismOrbit,
    /// Couplings pairing only children of equal mass and isomorphic shape.
    IsoMixture,
}

impl TreeCouplingSemantics {
    pub const ALL: [TreeCouplingSemantics; 3] = [
        TreeCouplingSemantics::MarkovRecursive,
        TreeCouplingSemantics::AutomorphismOrbit,
        TreeCouplingSemantics::IsoMixture,
    ];

    pub fn name(self) -> &'static str {
        match self {
            TreeCouplingSemantics::MarkovRecursive => "markov_recursive",
            TreeCouplingSemantics::AutomorphismOrbit => "automorphism_orbit",
            TreeCouplingSemantics::IsoMixture => "iso_mixture",
        }
    }
}

impl std::str::FromStr for TreeCouplingSemantics {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "markov" | "markov_recursive" | "markov-recursive" => {
                Ok(TreeCouplingSemantics::MarkovRecursive)
            }
            "orbit" | "automorphism_orbit" | "automorphism-orbit" => {
                Ok(TreeCouplingSemantics::AutomorphismOrbit)
            }
            "iso" | "iso_mixture" | "iso-mixture" => Ok(TreeCouplingSemantics::IsoMixture),
            other => Err(Error::Invalid(format!(
                "unknown coupling semantics {other:?}"
            ))),
        }
    }
}

/// Leaf values of one tree: a function of the first coordinates plus a
/// constant shift common to all leaves.
#[derive(Debug, Clone, PartialEq)]
pub struct LeafValuation<S> {
    pub function: FunctionSpec<S>,
    pub offset: S,
}

impl<S: Scalar> LeafValuation<S> {
    pub fn new(function: FunctionSpec<S>) -> Self {
        LeafValuation {
            function,
            offset: S::zero(),
        }
    }

    pub fn with_offset(mut self, offset: S) -> Self {
        self.offset = offset;
        self
    }

    /// Value at a leaf whose path starts with `prefix` (original state ids).
    pub fn value(&self, prefix: &[usize]) -> Result<S> {
        Ok(self.function.value(prefix)?.clone() + self.offset.clone())
    }
}

/// Ground cost between the first coordinates of two leaves, given as
/// original state ids.
pub(crate) trait LeafCost<S>: Sync {
    fn depth(&self) -> usize;
    fn cost(&self, x: &[usize], y: &[usize]) -> Result<S>;
}

pub(crate) struct ValuationCost<'a, S> {
    pub left: &'a LeafValuation<S>,
    pub right: &'a LeafValuation<S>,
}

impl<S: Scalar> LeafCost<S> for ValuationCost<'_, S> {
    fn depth(&self) -> usize {
        self.left.function.depth().max(self.right.function.depth())
    }

    fn cost(&self, x: &[usize], y: &[usize]) -> Result<S> {
        let (dl, dr) = (self.left.function.depth(), self.right.function.depth());
        Ok((self.left.value(&x[..dl])? - self.right.value(&y[..dr])?).abs())
    }
}

/// Coordinates of the current node's ancestors below the depth cutoff,
/// mapped to original ids.
pub(crate) type Context = Vec<usize>;

pub(crate) fn descend(ctx: &[usize], level: usize, label: usize, depth: usize) -> Context {
    if level < depth {
        let mut v = Vec::with_capacity(ctx.len() + 1);
        v.push(label);
        v.extend_from_slice(ctx);
        v
    } else {
        ctx.to_vec()
    }
}

pub(crate) fn leaf_path(ctx: &[usize], label: usize, depth: usize) -> Vec<usize> {
    if depth == 0 {
        Vec::new()
    } else {
        descend(ctx, 0, label, depth)
    }
}

type Key = (usize, usize, Context, usize, Context);

/// Memoized recursion over node pairs.
pub(crate) struct CouplingDp<'a, S, C> {
    pub semantics: TreeCouplingSemantics,
    pub cost: &'a C,
    memo: HashMap<Key, S>,
}

impl<'a, S: Scalar, C: LeafCost<S>> CouplingDp<'a, S, C> {
    pub fn new(semantics: TreeCouplingSemantics, cost: &'a C) -> Self {
        CouplingDp {
            semantics,
            cost,
            memo: HashMap::new(),
        }
    }

    pub fn distance(
        &mut self,
        u: &EquippedTree<S>,
        cu: &[usize],
        v: &EquippedTree<S>,
        cv: &[usize],
    ) -> Result<S> {
        if u.level != v.level {
            return Err(Error::HeightMismatch {
                left: u.level,
                right: v.level,
            });
        }
        let key = (u.level, u.state, cu.to_vec(), v.state, cv.to_vec());
        if let Some(d) = self.memo.get(&key) {
            return Ok(d.clone());
        }
        let depth = self.cost.depth();
        let d = if u.is_leaf() {
            let x = leaf_path(cu, u.label, depth);
            let y = leaf_path(cv, v.label, depth);
            self.cost.cost(&x, &y)?
        } else {
            let lu = descend(cu, u.level, u.label, depth);
            let lv = descend(cv, v.level, v.label, depth);
            match self.semantics {
                TreeCouplingSemantics::MarkovRecursive => self.markov(u, &lu, v, &lv)?,
                TreeCouplingSemantics::AutomorphismOrbit => {
                    for t in [u, v] {
                        if !t.splits_uniformly() {
                            return Err(Error::NotHomogeneous {
                                level: t.level,
                                state: t.state,
                            });
                        }
                    }
                    self.matched(u, &lu, v, &lv)?
                }
                TreeCouplingSemantics::IsoMixture => self.matched(u, &lu, v, &lv)?,
            }
        };
        self.memo.insert(key, d.clone());
        Ok(d)
    }

    fn markov(
        &mut self,
        u: &EquippedTree<S>,
        cu: &[usize],
        v: &EquippedTree<S>,
        cv: &[usize],
    ) -> Result<S> {
        let mut cost = Array2::from_elem((u.children.len(), v.children.len()), S::zero());
        for (i, (_, a)) in u.children.iter().enumerate() {
            for (j, (_, b)) in v.children.iter().enumerate() {
                cost[[i, j]] = self.distance(a, cu, b, cv)?;
            }
        }
        let supply: Vec<S> = u.children.iter().map(|(m, _)| m.clone()).collect();
        let demand: Vec<S> = v.children.iter().map(|(m, _)| m.clone()).collect();
        Ok(solve_transport(&supply, &demand, &cost)?.value)
    }

    /// Couplings supported on pairs of children with equal mass and equal
    /// canonical form. Such a coupling exists iff the two nodes have equal
    /// canonical forms, and it then splits into one uniform assignment
    /// problem per `(mass, form)` class.
    fn matched(
        &mut self,
        u: &EquippedTree<S>,
        cu: &[usize],
        v: &EquippedTree<S>,
        cv: &[usize],
    ) -> Result<S> {
        if u.form != v.form {
            return Err(Error::NoCoupling);
        }
        let classes = |t: &EquippedTree<S>| {
            let mut m: BTreeMap<(String, TreeCanonicalForm), Vec<usize>> = BTreeMap::new();
            for (i, (w, c)) in t.children.iter().enumerate() {
                m.entry((w.canonical_key(), c.form)).or_default().push(i);
            }
            m
        };
        let (left, right) = (classes(u), classes(v));
        let mut total = S::zero();
        for (key, xs) in &left {
            let ys = right.get(key).ok_or(Error::NoCoupling)?;
            if ys.len() != xs.len() {
                return Err(Error::NoCoupling);
            }
            let mut cost = Array2::from_elem((xs.len(), ys.len()), S::zero());
            for (i, &x) in xs.iter().enumerate() {
                for (j, &y) in ys.iter().enumerate() {
                    cost[[i, j]] = self.distance(&u.children[x].1, cu, &v.children[y].1, cv)?;
                }
            }
            let supply: Vec<S> = xs.iter().map(|&x| u.children[x].0.clone()).collect();
            let demand: Vec<S> = ys.iter().map(|&y| v.children[y].0.clone()).collect();
            total = total + solve_transport(&supply, &demand, &cost)?.value;
        }
        Ok(total)
    }
}

/// Minimum expected `|f_1 - f_2|` over couplings of the two trees allowed by
/// `semantics`.
pub fn coupling_distance<S: Scalar>(
    t1: &EquippedTree<S>,
    t2: &EquippedTree<S>,
    f1: &LeafValuation<S>,
    f2: &LeafValuation<S>,
    semantics: TreeCouplingSemantics,
) -> Result<S> {
    let cost = ValuationCost {
        left: f1,
        right: f2,
    };
    check_depth(t1, &cost)?;
    let mut dp = CouplingDp::new(semantics, &cost);
    dp.distance(t1, &[], t2, &[])
}

pub(crate) fn check_depth<S: Scalar, C: LeafCost<S>>(t: &EquippedTree<S>, cost: &C) -> Result<()> {
    if cost.depth() > t.level + 1 {
        return Err(Error::LevelTooSmall {
            level: t.level,
            depth: cost.depth(),
        });
    }
    Ok(())
}

/// Law of the leaf values of `t` under its leaf measure, sorted by value.
pub fn leaf_value_law<S: Scalar>(t: &EquippedTree<S>, f: &LeafValuation<S>) -> Result<Vec<(S, S)>> {
    let depth = f.function.depth();
    let mut law: Vec<(S, S)> = Vec::new();
    for (w, path) in t.leaves() {
        let x = f.value(&path[..depth])?;
        match law.iter_mut().find(|(v, _)| *v == x) {
            Some(entry) => entry.1 = entry.1.clone() + w,
            None => law.push((x, w)),
        }
    }
    law.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("comparable"));
    Ok(law)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators;
    use crate::numeric::Rational;
    use crate::trees::build_tree;

    fn q(n: i64, d: i64) -> Rational {
        Rational::ratio(n, d)
    }

    fn values(v: &[i64]) -> LeafValuation<Rational> {
        LeafValuation::new(FunctionSpec::level0(v.iter().map(|&x| q(x, 1)).collect()))
    }

    #[test]
    fn swap_gives_zero() {
        let m = generators::dyadic_tree::<Rational>(1).unwrap();
        let t = build_tree(&m, 1, 0).unwrap();
        let d = coupling_distance(
            &t,
            &t,
            &values(&[0, 1]),
            &values(&[1, 0]),
            TreeCouplingSemantics::AutomorphismOrbit,
        );
        assert_eq!(d.unwrap(), q(0, 1));
    }

    #[test]
    fn height_two_orbit_example() {
        let m = generators::dyadic_tree::<Rational>(2).unwrap();
        let t = build_tree(&m, 2, 0).unwrap();
        let (a, b) = (values(&[0, 1, 1, 1]), values(&[1, 1, 0, 1]));
        assert_eq!(
            coupling_distance(&t, &t, &a, &b, TreeCouplingSemantics::AutomorphismOrbit).unwrap(),
            q(0, 1)
        );
        let c = values(&[0, 0, 1, 1]);
        // One pair of siblings differs from the other; the orbit cannot align.
        assert_eq!(
            coupling_distance(&t, &t, &a, &c, TreeCouplingSemantics::AutomorphismOrbit).unwrap(),
            q(1, 4)
        );
        // The recursive class only needs the leaf laws (1/4, 3/4) vs (1/2, 1/2)
        // to be transported inside each subtree pair.
        assert_eq!(
            coupling_distance(&t, &t, &a, &c, TreeCouplingSemantics::MarkovRecursive).unwrap(),
            q(1, 4)
        );
    }

    #[test]
    fn symmetric_markov_distance() {
        let p = q(3, 4);
        let m = generators::symmetric(p, 4).unwrap();
        let f = LeafValuation::new(FunctionSpec::coordinate(2));
        for n in 1..=4 {
            let (a, b) = (build_tree(&m, n, 0).unwrap(), build_tree(&m, n, 1).unwrap());
            let d =
                coupling_distance(&a, &b, &f, &f, TreeCouplingSemantics::MarkovRecursive).unwrap();
            assert_eq!(d, (0..n).fold(q(1, 1), |acc, _| acc * q(1, 2)));
            let iso = coupling_distance(&a, &b, &f, &f, TreeCouplingSemantics::IsoMixture).unwrap();
            assert_eq!(iso, q(1, 1));
            assert!(matches!(
                coupling_distance(&a, &b, &f, &f, TreeCouplingSemantics::AutomorphismOrbit),
                Err(Error::NotHomogeneous { .. })
            ));
        }
    }

    #[test]
    fn iso_infeasible_between_different_shapes() {
        let m = generators::bernoulli(q(3, 4), 2).unwrap();
        let o = generators::bernoulli(q(2, 3), 2).unwrap();
        let f = LeafValuation::new(FunctionSpec::coordinate(2));
        let (a, b) = (build_tree(&m, 1, 0).unwrap(), build_tree(&o, 1, 0).unwrap());
        assert!(matches!(
            coupling_distance(&a, &b, &f, &f, TreeCouplingSemantics::IsoMixture),
            Err(Error::NoCoupling)
        ));
        let c = build_tree(&m, 2, 0).unwrap();
        assert!(matches!(
            coupling_distance(&a, &c, &f, &f, TreeCouplingSemantics::MarkovRecursive),
            Err(Error::HeightMismatch { .. })
        ));
    }

    #[test]
    fn offsets_shift_values() {
        let m = generators::bernoulli(q(3, 4), 2).unwrap();
        let t = build_tree(&m, 2, 0).unwrap();
        let f = LeafValuation::new(FunctionSpec::coordinate(2));
        let g = f.clone().with_offset(q(5, 2));
        assert_eq!(
            coupling_distance(&t, &t, &f, &g, TreeCouplingSemantics::MarkovRecursive).unwrap(),
            q(5, 2)
        );
        let law = leaf_value_law(&t, &g).unwrap();
        assert_eq!(law, vec![(q(5, 2), q(3, 4)), (q(7, 2), q(1, 4))]);
    }
}
