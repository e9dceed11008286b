use ndarray::Array2;

use super::coupling::{LeafValuation, TreeCouplingSemantics};
use super::EquippedTree;
use crate::error::{Error, Result};
use crate::numeric::Scalar;
use crate::transport::brute_force_transport_cost;

/// Largest combined leaf count of the two trees the oracle accepts.
pub const ORACLE_LEAF_LIMIT: u128 = 16;

/// Exhaustive counterpart of [`super::coupling_distance`].
///
/// The recursive class is evaluated without memoization, with every node
/// pair solved by vertex enumeration. The orbit and isomorphism classes
/// enumerate every structure-preserving bijection between the trees
/// directly, without canonical forms.
pub fn brute_force_coupling_oracle<S: Scalar>(
    t1: &EquippedTree<S>,
    t2: &EquippedTree<S>,
    f1: &LeafValuation<S>,
    f2: &LeafValuation<S>,
    semantics: TreeCouplingSemantics,
) -> Result<S> {
    let size = t1.leaf_count.saturating_add(t2.leaf_count);
    if size > ORACLE_LEAF_LIMIT {
        return Err(Error::TooLarge {
            size: size as usize,
            limit: ORACLE_LEAF_LIMIT as usize,
        });
    }
    if t1.level != t2.level {
        return Err(Error::HeightMismatch {
            left: t1.level,
            right: t2.level,
        });
    }
    let leaf_cost = |x: &[usize], y: &[usize]| -> Result<S> {
        let (a, b) = (
            f1.value(&x[..f1.function.depth()])?,
            f2.value(&y[..f2.function.depth()])?,
        );
        Ok((a - b).abs())
    };
    match semantics {
        TreeCouplingSemantics::MarkovRecursive => recursive(t1, &[], t2, &[], &leaf_cost),
        TreeCouplingSemantics::AutomorphismOrbit | TreeCouplingSemantics::IsoMixture => {
            if semantics == TreeCouplingSemantics::AutomorphismOrbit {
                for t in [t1, t2] {
                    if let Some((level, state)) = t.homogeneity_violation() {
                        return Err(Error::NotHomogeneous { level, state });
                    }
                }
            }
            let mut best: Option<S> = None;
            for m in isomorphisms(t1, t2) {
                let mut total = S::zero();
                for (w, x, y) in &m {
                    total = total + w.clone() * leaf_cost(x, y)?;
                }
                if best.as_ref().map_or(true, |b| total < *b) {
                    best = Some(total);
                }
            }
            best.ok_or(Error::NoCoupling)
        }
    }
}

/// Prepends the node's id to the coordinates seen so far from the root.
fn extend(suffix: &[usize], label: usize) -> Vec<usize> {
    let mut v = vec![label];
    v.extend_from_slice(suffix);
    v
}

fn recursive<S: Scalar>(
    u: &EquippedTree<S>,
    su: &[usize],
    v: &EquippedTree<S>,
    sv: &[usize],
    leaf_cost: &dyn Fn(&[usize], &[usize]) -> Result<S>,
) -> Result<S> {
    let (pu, pv) = (extend(su, u.label), extend(sv, v.label));
    if u.is_leaf() {
        return leaf_cost(&pu, &pv);
    }
    let mut cost = Array2::from_elem((u.children.len(), v.children.len()), S::zero());
    for (i, (_, a)) in u.children.iter().enumerate() {
        for (j, (_, b)) in v.children.iter().enumerate() {
            cost[[i, j]] = recursive(a, &pu, b, &pv, leaf_cost)?;
        }
    }
    let supply: Vec<S> = u.children.iter().map(|(m, _)| m.clone()).collect();
    let demand: Vec<S> = v.children.iter().map(|(m, _)| m.clone()).collect();
    brute_force_transport_cost(&supply, &demand, &cost)
}

/// A bijection between leaves: `(leaf mass, path in t1, path in t2)`, paths
/// ordered from level 0 up.
type LeafMatching<S> = Vec<(S, Vec<usize>, Vec<usize>)>;

fn isomorphisms<S: Scalar>(u: &EquippedTree<S>, v: &EquippedTree<S>) -> Vec<LeafMatching<S>> {
    if u.is_leaf() || v.is_leaf() {
        if u.is_leaf() && v.is_leaf() {
            return vec![vec![(S::one(), vec![u.label], vec![v.label])]];
        }
        return Vec::new();
    }
    if u.children.len() != v.children.len() {
        return Vec::new();
    }
    let mut out = Vec::new();
    for perm in permutations(u.children.len()) {
        if perm
            .iter()
            .enumerate()
            .any(|(i, &j)| !u.children[i].0.near(&v.children[j].0))
        {
            continue;
        }
        let mut partial: Vec<LeafMatching<S>> = vec![Vec::new()];
        for (i, &j) in perm.iter().enumerate() {
            let (mass, a) = &u.children[i];
            let subs = isomorphisms(a, &v.children[j].1);
            let mut next = Vec::with_capacity(partial.len() * subs.len());
            for p in &partial {
                for s in &subs {
                    let mut m = p.clone();
                    m.extend(
                        s.iter()
                            .map(|(w, x, y)| (w.clone() * mass.clone(), x.clone(), y.clone())),
                    );
                    next.push(m);
                }
            }
            partial = next;
            if partial.is_empty() {
                break;
            }
        }
        for mut m in partial {
            for (_, x, y) in &mut m {
                x.push(u.label);
                y.push(v.label);
            }
            out.push(m);
        }
    }
    out
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    fn go(prefix: &mut Vec<usize>, used: &mut [bool], out: &mut Vec<Vec<usize>>) {
        if prefix.len() == used.len() {
            out.push(prefix.clone());
            return;
        }
        for i in 0..used.len() {
            if !used[i] {
                used[i] = true;
                prefix.push(i);
                go(prefix, used, out);
                prefix.pop();
                used[i] = false;
            }
        }
    }
    let mut out = Vec::new();
    go(&mut Vec::new(), &mut vec![false; n], &mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators;
    use crate::iteration::FunctionSpec;
    use crate::numeric::Rational;
    use crate::trees::{build_tree, coupling_distance};

    fn q(n: i64, d: i64) -> Rational {
        Rational::ratio(n, d)
    }

    #[test]
    fn binary_height_three_has_128_automorphisms() {
        let m = generators::dyadic_tree::<Rational>(3).unwrap();
        let t = build_tree(&m, 3, 0).unwrap();
        assert_eq!(isomorphisms(&t, &t).len(), 128);
        assert_eq!(permutations(3).len(), 6);
    }

    #[test]
    fn symmetric_height_two() {
        let m = generators::symmetric(q(3, 4), 2).unwrap();
        let f = LeafValuation::new(FunctionSpec::coordinate(2));
        let (a, b) = (build_tree(&m, 2, 0).unwrap(), build_tree(&m, 2, 1).unwrap());
        let v = brute_force_coupling_oracle(&a, &b, &f, &f, TreeCouplingSemantics::MarkovRecursive)
            .unwrap();
        assert_eq!(v, q(1, 4));
        let iso =
            brute_force_coupling_oracle(&a, &b, &f, &f, TreeCouplingSemantics::IsoMixture).unwrap();
        assert_eq!(
            iso,
            coupling_distance(&a, &b, &f, &f, TreeCouplingSemantics::IsoMixture).unwrap()
        );
        assert_eq!(
            brute_force_coupling_oracle(&a, &a, &f, &f, TreeCouplingSemantics::IsoMixture).unwrap(),
            q(0, 1)
        );
    }

    #[test]
    fn limits() {
        let m = generators::dyadic_tree::<Rational>(4).unwrap();
        let t = build_tree(&m, 4, 0).unwrap();
        let f = LeafValuation::new(FunctionSpec::coordinate(16));
        assert!(matches!(
            brute_force_coupling_oracle(&t, &t, &f, &f, TreeCouplingSemantics::AutomorphismOrbit),
            Err(Error::TooLarge { .. })
        ));
        let b = generators::bernoulli(q(3, 4), 1).unwrap();
        let o = generators::bernoulli(q(2, 3), 1).unwrap();
        let g = LeafValuation::new(FunctionSpec::coordinate(2));
        let (x, y) = (build_tree(&b, 1, 0).unwrap(), build_tree(&o, 1, 0).unwrap());
        assert!(matches!(
            brute_force_coupling_oracle(&x, &y, &g, &g, TreeCouplingSemantics::IsoMixture),
            Err(Error::NoCoupling)
        ));
    }
}
