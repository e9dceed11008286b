//! Finite invariants of a filtration: for every level, the mass carried by
//! each isomorphism class of equipped trees.
//!
//! Agreement of two fingerprints up to level `N` is necessary for the
//! filtrations to be finitely isomorphic; it is not a certificate.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::MarkovModel;
use crate::numeric::Scalar;
use crate::trees::{TreeBuilder, TreeCanonicalForm};

#[derive(Debug, Clone, PartialEq)]
pub struct ClassMass<S> {
    pub mass: S,
    /// Number of leaves of trees in the class, i.e. the element size for
    /// semihomogeneous filtrations.
    pub leaf_count: u128,
    /// How many level states fall in the class.
    pub members: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LevelFingerprint<S> {
    pub level: usize,
    pub classes: BTreeMap<TreeCanonicalForm, ClassMass<S>>,
}

impl<S: Scalar> LevelFingerprint<S> {
    pub fn total_mass(&self) -> S {
        S::sum(self.classes.values().map(|c| &c.mass))
    }

    fn agrees(&self, other: &Self) -> bool {
        self.classes.len() == other.classes.len()
            && self
                .classes
                .iter()
                .zip(&other.classes)
                .all(|((fa, a), (fb, b))| fa == fb && a.mass.near(&b.mass))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InvariantFingerprint<S> {
    /// Levels `1..=N`.
    pub levels: Vec<LevelFingerprint<S>>,
    /// Set in float mode, where masses are snapped to a grid before hashing.
    pub warning: Option<String>,
}

pub const FLOAT_WARNING: &str =
    "float mode: masses quantized to a 1e-12 grid before canonicalization; classes may merge or split near the grid";

pub fn fingerprint<S: Scalar>(
    model: &MarkovModel<S>,
    levels: usize,
) -> Result<InvariantFingerprint<S>> {
    if levels > model.horizon() {
        return Err(Error::HorizonExceeded {
            requested: levels,
            horizon: model.horizon(),
        });
    }
    let mut builder = TreeBuilder::new(model);
    let mut out = Vec::with_capacity(levels);
    for n in 1..=levels {
        let mu = model.level_marginal(n)?.weights;
        let mut classes: BTreeMap<TreeCanonicalForm, ClassMass<S>> = BTreeMap::new();
        for (a, t) in builder.level(n)?.into_iter().enumerate() {
            let e = classes.entry(t.form).or_insert(ClassMass {
                mass: S::zero(),
                leaf_count: t.leaf_count,
                members: 0,
            });
            e.mass = e.mass.clone() + mu[a].clone();
            e.members += 1;
        }
        out.push(LevelFingerprint { level: n, classes });
    }
    Ok(InvariantFingerprint {
        levels: out,
        warning: (!S::EXACT).then(|| FLOAT_WARNING.to_string()),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Comparison {
    /// Largest `n` such that levels `1..=n` agree.
    pub equal_up_to: usize,
    pub first_mismatch: Option<usize>,
}

pub fn compare_fingerprints<S: Scalar>(
    a: &InvariantFingerprint<S>,
    b: &InvariantFingerprint<S>,
) -> Comparison {
    let first_mismatch = a
        .levels
        .iter()
        .zip(&b.levels)
        .find(|(x, y)| !x.agrees(y))
        .map(|(x, _)| x.level);
    let common = a.levels.len().min(b.levels.len());
    Comparison {
        equal_up_to: first_mismatch.map_or(common, |m| m - 1),
        first_mismatch,
    }
}

pub fn finitely_isomorphic<S: Scalar>(
    a: &MarkovModel<S>,
    b: &MarkovModel<S>,
    levels: usize,
) -> Result<Comparison> {
    Ok(compare_fingerprints(
        &fingerprint(a, levels)?,
        &fingerprint(b, levels)?,
    ))
}
