//! Equipped trees of partition elements and couplings between them.
//!
//! The element of the level-`n` partition with tail state `a` is a tree of
//! height `n`: its root is `a`, the children of a node at level `k` are the
//! level-`(k-1)` predecessors weighted by the cotransitions, and the leaves
//! are level-0 states. Subtrees depend only on their root state, so trees
//! are shared through [`Arc`] and built once per `(level, state)`.

mod coupling;
mod criterion;
mod oracle;

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::model::MarkovModel;
use crate::numeric::Scalar;

pub use coupling::{coupling_distance, leaf_value_law, LeafValuation, TreeCouplingSemantics};
pub use criterion::{
    criterion_check, martingale_distance, quotient_criterion, CriterionReport, MartingaleReport,
    PairDistance,
};
pub use oracle::{brute_force_coupling_oracle, ORACLE_LEAF_LIMIT};

/// Hash of the sorted multiset of `(mass, child form)` pairs at every node.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct TreeCanonicalForm(#[serde(serialize_with = "as_hex")] [u8; 32]);

fn as_hex<S: serde::Serializer>(bytes: &[u8; 32], s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&hex(bytes))
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

impl fmt::Display for TreeCanonicalForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&hex(&self.0))
    }
}

impl fmt::Debug for TreeCanonicalForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "TreeCanonicalForm({})", &hex(&self.0)[..12])
    }
}

impl TreeCanonicalForm {
    fn leaf() -> Self {
        TreeCanonicalForm(Sha256::digest(b"leaf").into())
    }

    fn node<'a>(entries: impl IntoIterator<Item = (String, &'a TreeCanonicalForm)>) -> Self {
        let mut entries: Vec<(String, TreeCanonicalForm)> =
            entries.into_iter().map(|(m, f)| (m, *f)).collect();
        entries.sort();
        let mut h = Sha256::new();
        h.update(b"node(");
        for (mass, form) in &entries {
            h.update(mass.as_bytes());
            h.update(b":");
            h.update(form.0);
            h.update(b";");
        }
        h.update(b")");
        TreeCanonicalForm(h.finalize().into())
    }
}

#[derive(Debug)]
pub struct EquippedTree<S> {
    /// Level of the root; the height of the tree.
    pub level: usize,
    /// Retained state index of the root at its level.
    pub state: usize,
    /// Original id of that state.
    pub label: usize,
    /// Predecessor subtrees with their conditional masses.
    pub children: Vec<(S, Arc<EquippedTree<S>>)>,
    pub form: TreeCanonicalForm,
    /// Number of positive-probability histories into the root, saturating.
    pub leaf_count: u128,
}

impl<S: Scalar> EquippedTree<S> {
    pub fn is_leaf(&self) -> bool {
        self.children.is_empty()
    }

    pub fn height(&self) -> usize {
        self.level
    }

    /// Leaves with their masses and paths `(x_0, ..., x_{level})` of original ids.
    pub fn leaves(&self) -> Vec<(S, Vec<usize>)> {
        if self.is_leaf() {
            return vec![(S::one(), vec![self.label])];
        }
        let mut out = Vec::new();
        for (m, c) in &self.children {
            for (w, mut path) in c.leaves() {
                path.push(self.label);
                out.push((m.clone() * w, path));
            }
        }
        out
    }

    /// Whether this node gives all its children the same mass.
    pub fn splits_uniformly(&self) -> bool {
        self.children.first().map_or(true, |(first, _)| {
            self.children.iter().all(|(m, _)| m.near(first))
        })
    }

    /// First node, in depth-first order over distinct subtrees, that does not
    /// split its mass uniformly.
    pub fn homogeneity_violation(&self) -> Option<(usize, usize)> {
        let mut seen = std::collections::HashSet::new();
        self.find_violation(&mut seen)
    }

    fn find_violation(
        &self,
        seen: &mut std::collections::HashSet<(usize, usize)>,
    ) -> Option<(usize, usize)> {
        if !seen.insert((self.level, self.state)) {
            return None;
        }
        if !self.splits_uniformly() {
            return Some((self.level, self.state));
        }
        self.children
            .iter()
            .find_map(|(_, c)| c.find_violation(seen))
    }
}

/// Builds equipped trees of one model, sharing subtrees.
pub struct TreeBuilder<'a, S> {
    model: &'a MarkovModel<S>,
    memo: HashMap<(usize, usize), Arc<EquippedTree<S>>>,
    rows: HashMap<usize, Vec<Vec<S>>>,
}

impl<'a, S: Scalar> TreeBuilder<'a, S> {
    pub fn new(model: &'a MarkovModel<S>) -> Self {
        TreeBuilder {
            model,
            memo: HashMap::new(),
            rows: HashMap::new(),
        }
    }

    pub fn tree(&mut self, n: usize, a: usize) -> Result<Arc<EquippedTree<S>>> {
        if n > self.model.horizon() {
            return Err(Error::HorizonExceeded {
                requested: n,
                horizon: self.model.horizon(),
            });
        }
        if a >= self.model.state_count(n) {
            return Err(Error::ZeroMassState { level: n, state: a });
        }
        if let Some(t) = self.memo.get(&(n, a)) {
            return Ok(t.clone());
        }
        let label = self.model.labels(n)[a];
        let tree = if n == 0 {
            EquippedTree {
                level: 0,
                state: a,
                label,
                children: Vec::new(),
                form: TreeCanonicalForm::leaf(),
                leaf_count: 1,
            }
        } else {
            if !self.rows.contains_key(&n) {
                self.rows.insert(n, self.model.cotransitions(n)?.rows);
            }
            let row = self.rows[&n][a].clone();
            let mut children = Vec::new();
            for (c, m) in row.into_iter().enumerate() {
                if m > S::zero() {
                    children.push((m, self.tree(n - 1, c)?));
                }
            }
            let form =
                TreeCanonicalForm::node(children.iter().map(|(m, c)| (m.canonical_key(), &c.form)));
            let leaf_count = children
                .iter()
                .fold(0u128, |acc, (_, c)| acc.saturating_add(c.leaf_count));
            EquippedTree {
                level: n,
                state: a,
                label,
                children,
                form,
                leaf_count,
            }
        };
        let tree = Arc::new(tree);
        self.memo.insert((n, a), tree.clone());
        Ok(tree)
    }

    /// Trees of every retained level-`n` state.
    pub fn level(&mut self, n: usize) -> Result<Vec<Arc<EquippedTree<S>>>> {
        if n > self.model.horizon() {
            return Err(Error::HorizonExceeded {
                requested: n,
                horizon: self.model.horizon(),
            });
        }
        (0..self.model.state_count(n))
            .map(|a| self.tree(n, a))
            .collect()
    }
}

/// The equipped tree of the level-`n` element with tail state `a`.
pub fn build_tree<S: Scalar>(
    model: &MarkovModel<S>,
    n: usize,
    a: usize,
) -> Result<Arc<EquippedTree<S>>> {
    TreeBuilder::new(model).tree(n, a)
}
