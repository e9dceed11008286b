//! Iterated transfer of a semimetric along the tail filtration.
//!
//! Starting from a cylinder semimetric on paths, each step replaces a
//! level-`n` state by its conditional law on level `n - 1` and measures
//! distances between those laws with the Kantorovich metric over the
//! previous semimetric. The functional `I_n = sum mu_n(a) mu_n(b) d_n(a, b)`
//! tends to zero exactly for standard chains; at a finite horizon the
//! module reports evidence, never a limit.
//!
//! Depth convention: a cylinder semimetric or function of depth `m`
//! depends on the coordinates `x_0, ..., x_{m-1}`. After `m` transfer steps
//! it becomes a semimetric on level-`m` states, which is the first level a
//! report contains.

use std::collections::{BTreeMap, HashMap};
use std::io::Write;
use std::path::Path;

use ndarray::Array2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::model::{CotransitionKernel, MarkovModel};
use crate::numeric::{from_json, half_l1, Scalar};
use crate::transport::{solve_transport, Semimetric};

pub const DEFAULT_TOL: f64 = 1e-6;
pub const DEFAULT_WINDOW: usize = 5;

/// A real function of the first `depth` coordinates of a path. Paths use
/// the original state ids of each level.
#[derive(Debug, Clone, PartialEq)]
pub struct FunctionSpec<S> {
    depth: usize,
    table: BTreeMap<Vec<usize>, S>,
}

impl<S: Scalar> FunctionSpec<S> {
    pub fn constant(value: S) -> Self {
        FunctionSpec {
            depth: 0,
            table: BTreeMap::from([(Vec::new(), value)]),
        }
    }

    /// A function of the level-0 state.
    pub fn level0(values: Vec<S>) -> Self {
        let table = values
            .into_iter()
            .enumerate()
            .map(|(i, v)| (vec![i], v))
            .collect();
        FunctionSpec { depth: 1, table }
    }

    /// The coordinate `x_0` itself, as a number.
    pub fn coordinate(states: usize) -> Self {
        Self::level0((0..states).map(|i| S::from_int(i as i64)).collect())
    }

    pub fn from_table(
        depth: usize,
        entries: impl IntoIterator<Item = (Vec<usize>, S)>,
    ) -> Result<Self> {
        let table: BTreeMap<_, _> = entries.into_iter().collect();
        if let Some(bad) = table.keys().find(|k| k.len() != depth) {
            return Err(Error::Invalid(format!(
                "path {bad:?} has length {}, depth is {depth}",
                bad.len()
            )));
        }
        Ok(FunctionSpec { depth, table })
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    /// Value on a path prefix `(x_0, ..., x_{depth-1})`.
    pub fn value(&self, path: &[usize]) -> Result<&S> {
        self.table
            .get(path)
            .ok_or_else(|| Error::MissingValue(path.to_vec()))
    }

    pub fn scaled(&self, c: &S) -> Self {
        FunctionSpec {
            depth: self.depth,
            table: self
                .table
                .iter()
                .map(|(k, v)| (k.clone(), v.clone() * c.clone()))
                .collect(),
        }
    }

    pub fn values(&self) -> impl Iterator<Item = (&Vec<usize>, &S)> {
        self.table.iter()
    }

    /// Reads `{"depth": 1, "values": [...]}` or
    /// `{"depth": m, "table": [{"path": [...], "value": v}, ...]}`.
    pub fn from_json_value(v: &Value) -> Result<Self> {
        let file: FunctionFile = serde_json::from_value(v.clone())?;
        match (file.values, file.table) {
            (Some(values), None) => {
                if file.depth != 1 {
                    return Err(Error::Invalid("field `values` requires depth 1".into()));
                }
                let values = values.iter().map(from_json).collect::<Result<Vec<S>>>()?;
                Ok(Self::level0(values))
            }
            (None, Some(table)) => {
                let entries = table
                    .iter()
                    .map(|e| Ok((e.path.clone(), from_json(&e.value)?)))
                    .collect::<Result<Vec<_>>>()?;
                Self::from_table(file.depth, entries)
            }
            _ => Err(Error::Invalid(
                "function needs exactly one of `values` or `table`".into(),
            )),
        }
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json_value(&serde_json::from_str(&text)?)
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct FunctionFile {
    depth: usize,
    #[serde(default)]
    values: Option<Vec<Value>>,
    #[serde(default)]
    table: Option<Vec<TableEntry>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct TableEntry {
    path: Vec<usize>,
    value: Value,
}

/// The semimetric the iteration starts from.
#[derive(Debug, Clone, PartialEq)]
pub enum InitialMetricSpec<S> {
    /// `[x_0 != y_0]`.
    DiscreteOnLevel0,
    /// `sum_k w_k [x_k != y_k]` over `k < weights.len()`.
    WeightedCylinder { weights: Vec<S> },
    /// `|f(x) - f(y)|`.
    FromFunction(FunctionSpec<S>),
}

impl<S: Scalar> InitialMetricSpec<S> {
    pub fn depth(&self) -> usize {
        match self {
            InitialMetricSpec::DiscreteOnLevel0 => 1,
            InitialMetricSpec::WeightedCylinder { weights } => weights.len(),
            InitialMetricSpec::FromFunction(f) => f.depth(),
        }
    }

    pub fn weighted(weights: Vec<S>) -> Result<Self> {
        if weights.iter().any(|w| w.is_negative()) {
            return Err(Error::Invalid(
                "cylinder weights must be nonnegative".into(),
            ));
        }
        Ok(InitialMetricSpec::WeightedCylinder { weights })
    }

    /// Distance between two path prefixes of length `depth()`.
    pub fn cost(&self, x: &[usize], y: &[usize]) -> Result<S> {
        Ok(match self {
            InitialMetricSpec::DiscreteOnLevel0 => {
                if x[0] == y[0] {
                    S::zero()
                } else {
                    S::one()
                }
            }
            InitialMetricSpec::WeightedCylinder { weights } => weights
                .iter()
                .enumerate()
                .filter(|(k, _)| x[*k] != y[*k])
                .fold(S::zero(), |acc, (_, w)| acc + w.clone()),
            InitialMetricSpec::FromFunction(f) => (f.value(x)?.clone() - f.value(y)?.clone()).abs(),
        })
    }

    /// `c` times this semimetric, for `c >= 0`.
    pub fn scaled(&self, c: &S) -> Self {
        match self {
            InitialMetricSpec::DiscreteOnLevel0 => InitialMetricSpec::WeightedCylinder {
                weights: vec![c.clone()],
            },
            InitialMetricSpec::WeightedCylinder { weights } => {
                InitialMetricSpec::WeightedCylinder {
                    weights: weights.iter().map(|w| w.clone() * c.clone()).collect(),
                }
            }
            InitialMetricSpec::FromFunction(f) => InitialMetricSpec::FromFunction(f.scaled(c)),
        }
    }

    pub fn describe(&self) -> String {
        match self {
            InitialMetricSpec::DiscreteOnLevel0 => "discrete".into(),
            InitialMetricSpec::WeightedCylinder { weights } => {
                format!(
                    "cylinder:{}",
                    weights
                        .iter()
                        .map(Scalar::repr)
                        .collect::<Vec<_>>()
                        .join(",")
                )
            }
            InitialMetricSpec::FromFunction(f) => format!("function(depth {})", f.depth()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, PartialOrd, Ord)]
#[serde(rename_all = "snake_case")]
pub enum Semantics {
    /// Repeated Kantorovich transfer of the previous level's semimetric.
    Kantorovich,
    /// Total variation between cotransition rows, recomputed at each level
    /// from the discrete metric.
    TvRefresh,
}

impl Semantics {
    pub fn name(self) -> &'static str {
        match self {
            Semantics::Kantorovich => "kantorovich",
            Semantics::TvRefresh => "tv_refresh",
        }
    }
}

impl std::str::FromStr for Semantics {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "kantorovich" => Ok(Semantics::Kantorovich),
            "tv_refresh" | "tv-refresh" | "tv-per-level" | "tv_per_level" => {
                Ok(Semantics::TvRefresh)
            }
            other => Err(Error::Invalid(format!("unknown semantics {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LevelReport<S> {
    pub level: usize,
    pub distances: Semimetric<S>,
    pub functional: S,
    pub max_pair_distance: S,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterationReport<S> {
    pub semantics: Semantics,
    pub levels: Vec<LevelReport<S>>,
}

impl<S: Scalar> IterationReport<S> {
    pub fn level(&self, n: usize) -> Option<&LevelReport<S>> {
        self.levels.iter().find(|l| l.level == n)
    }

    pub fn functionals(&self) -> Vec<S> {
        self.levels.iter().map(|l| l.functional.clone()).collect()
    }
}

/// Kantorovich transport between the positive parts of two rows, with a
/// ground cost given by index pairs.
fn row_transport<S: Scalar>(
    a: &[S],
    b: &[S],
    ground: impl Fn(usize, usize) -> Result<S>,
) -> Result<S> {
    let sa: Vec<usize> = (0..a.len()).filter(|&i| a[i] > S::zero()).collect();
    let sb: Vec<usize> = (0..b.len()).filter(|&j| b[j] > S::zero()).collect();
    let mut cost = Array2::from_elem((sa.len(), sb.len()), S::zero());
    for (i, &x) in sa.iter().enumerate() {
        for (j, &y) in sb.iter().enumerate() {
            cost[[i, j]] = ground(x, y)?;
        }
    }
    let supply: Vec<S> = sa.iter().map(|&i| a[i].clone()).collect();
    let demand: Vec<S> = sb.iter().map(|&j| b[j].clone()).collect();
    Ok(solve_transport(&supply, &demand, &cost)?.value)
}

/// Fills a symmetric matrix from a function of unordered pairs, evaluated in parallel.
fn pairwise<S: Scalar>(
    n: usize,
    f: impl Fn(usize, usize) -> Result<S> + Sync,
) -> Result<Array2<S>> {
    let pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|a| (a + 1..n).map(move |b| (a, b)))
        .collect();
    let values = pairs
        .par_iter()
        .map(|&(a, b)| f(a, b))
        .collect::<Result<Vec<S>>>()?;
    let mut d = Array2::from_elem((n, n), S::zero());
    for ((a, b), v) in pairs.into_iter().zip(values) {
        d[[a, b]] = v.clone();
        d[[b, a]] = v;
    }
    Ok(d)
}

/// One transfer step: `d_n(a, b) = K_{d_prev}(Q(a, .), Q(b, .))`.
pub fn transfer_semimetric<S: Scalar>(
    d_prev: &Semimetric<S>,
    q: &CotransitionKernel<S>,
) -> Result<Semimetric<S>> {
    if d_prev.size() != q.target_count() {
        return Err(Error::DimensionMismatch {
            expected: q.target_count(),
            found: d_prev.size(),
        });
    }
    let d = pairwise(q.rows.len(), |a, b| {
        row_transport(&q.rows[a], &q.rows[b], |x, y| Ok(d_prev.get(x, y).clone()))
    })?;
    Ok(Semimetric::from_trusted(d))
}

/// Maps a prefix `(x_0, ..., x_{m-1})` of retained indices to original state ids.
pub(crate) fn label_path<S: Scalar>(model: &MarkovModel<S>, path: &[usize]) -> Vec<usize> {
    path.iter()
        .enumerate()
        .map(|(k, &x)| model.labels(k)[x])
        .collect()
}

/// Reduces a depth-`m` initial semimetric on path prefixes to a semimetric
/// on level-`m` states by `m` exact transfer steps.
pub fn collapse_initial<S: Scalar>(
    model: &MarkovModel<S>,
    init: &InitialMetricSpec<S>,
    cots: &[CotransitionKernel<S>],
) -> Result<Semimetric<S>> {
    let m = init.depth();
    if m > model.horizon() {
        return Err(Error::HorizonExceeded {
            requested: m,
            horizon: model.horizon(),
        });
    }
    if m == 0 {
        return Ok(Semimetric::zero(model.state_count(0)));
    }
    // windows[k]: positive-mass prefixes (x_k, ..., x_{m-1}).
    let mut windows: Vec<Vec<Vec<usize>>> = vec![Vec::new(); m];
    windows[m - 1] = (0..model.state_count(m - 1)).map(|a| vec![a]).collect();
    for k in (0..m - 1).rev() {
        let q = &cots[k];
        windows[k] = windows[k + 1]
            .iter()
            .flat_map(|w| {
                let row = &q.rows[w[0]];
                (0..row.len())
                    .filter(|&c| row[c] > S::zero())
                    .map(move |c| {
                        let mut v = Vec::with_capacity(w.len() + 1);
                        v.push(c);
                        v.extend_from_slice(w);
                        v
                    })
            })
            .collect();
    }
    let w0: Vec<Vec<usize>> = windows[0].iter().map(|w| label_path(model, w)).collect();
    let mut d = pairwise(w0.len(), |i, j| init.cost(&w0[i], &w0[j]))?;
    for k in 0..m {
        let index: HashMap<&[usize], usize> = windows[k]
            .iter()
            .enumerate()
            .map(|(i, w)| (w.as_slice(), i))
            .collect();
        let targets: Vec<Vec<usize>> = if k + 1 < m {
            windows[k + 1].clone()
        } else {
            (0..model.state_count(m)).map(|a| vec![a]).collect()
        };
        let q = &cots[k];
        let child = |t: &[usize], c: usize| -> usize {
            let mut key = vec![c];
            if k + 1 < m {
                key.extend_from_slice(t);
            }
            index[key.as_slice()]
        };
        let prev = d;
        d = pairwise(targets.len(), |i, j| {
            let (ti, tj) = (&targets[i], &targets[j]);
            row_transport(&q.rows[ti[0]], &q.rows[tj[0]], |x, y| {
                Ok(prev[[child(ti, x), child(tj, y)]].clone())
            })
        })?;
    }
    Ok(Semimetric::from_trusted(d))
}

fn functional<S: Scalar>(weights: &[S], d: &Semimetric<S>) -> S {
    let mut total = S::zero();
    for (a, wa) in weights.iter().enumerate() {
        for (b, wb) in weights.iter().enumerate() {
            if a != b && !d.get(a, b).is_zero() {
                total = total + wa.clone() * wb.clone() * d.get(a, b).clone();
            }
        }
    }
    total
}

fn level_report<S: Scalar>(
    model: &MarkovModel<S>,
    level: usize,
    distances: Semimetric<S>,
) -> LevelReport<S> {
    let functional = functional(model.marginal(level), &distances);
    let max_pair_distance = distances.max_entry();
    LevelReport {
        level,
        distances,
        functional,
        max_pair_distance,
    }
}

/// Semimetrics `d_n` and functionals `I_n` for levels up to `levels`.
///
/// Under [`Semantics::Kantorovich`] the report starts at level
/// `init.depth()`; under [`Semantics::TvRefresh`] it starts at level 1 and
/// `init` is not used.
pub fn iterate<S: Scalar>(
    model: &MarkovModel<S>,
    init: &InitialMetricSpec<S>,
    levels: usize,
    semantics: Semantics,
) -> Result<IterationReport<S>> {
    if levels > model.horizon() {
        return Err(Error::HorizonExceeded {
            requested: levels,
            horizon: model.horizon(),
        });
    }
    let cots = model.cotransitions_upto(levels)?;
    let mut out = Vec::new();
    match semantics {
        Semantics::Kantorovich => {
            let m = init.depth();
            if m > levels {
                return Err(Error::LevelTooSmall {
                    level: levels,
                    depth: m,
                });
            }
            let mut d = collapse_initial(model, init, &cots)?;
            out.push(level_report(model, m, d.clone()));
            for n in m + 1..=levels {
                d = transfer_semimetric(&d, &cots[n - 1])?;
                out.push(level_report(model, n, d.clone()));
            }
        }
        Semantics::TvRefresh => {
            for n in 1..=levels {
                let q = &cots[n - 1];
                let d = pairwise(q.rows.len(), |a, b| Ok(half_l1(&q.rows[a], &q.rows[b])))?;
                out.push(level_report(model, n, Semimetric::from_trusted(d)));
            }
        }
    }
    Ok(IterationReport {
        semantics,
        levels: out,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Decision {
    StandardEvidence,
    NonstandardEvidence,
    Inconclusive,
}

impl Decision {
    pub fn name(self) -> &'static str {
        match self {
            Decision::StandardEvidence => "standard_evidence",
            Decision::NonstandardEvidence => "nonstandard_evidence",
            Decision::Inconclusive => "inconclusive",
        }
    }
}

/// Reads the last `window` functionals: all below `tol` and nonincreasing
/// is evidence of standardness; all above `tol` with steps below `tol` is
/// evidence of a positive limit.
pub fn decide_standardness<S: Scalar>(
    report: &IterationReport<S>,
    tol: f64,
    window: usize,
) -> Result<Decision> {
    if window == 0 {
        return Err(Error::EmptyWindow);
    }
    if window > report.levels.len() {
        return Err(Error::WindowTooLarge {
            window,
            available: report.levels.len(),
        });
    }
    let tail = &report.levels[report.levels.len() - window..];
    let small = tail.iter().all(|l| l.functional.to_f64() < tol);
    let nonincreasing = tail.windows(2).all(|w| w[1].functional <= w[0].functional);
    if small && nonincreasing {
        return Ok(Decision::StandardEvidence);
    }
    let positive = tail.iter().all(|l| l.functional.to_f64() > tol);
    let settled = tail.windows(2).all(|w| {
        (w[1].functional.clone() - w[0].functional.clone())
            .abs()
            .to_f64()
            < tol
    });
    if positive && settled {
        return Ok(Decision::NonstandardEvidence);
    }
    Ok(Decision::Inconclusive)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Concentration<S> {
    /// Vertex whose `eps`-ball carries at least `1 - eps` of the mass.
    pub vertex: Option<usize>,
    pub best_vertex: usize,
    pub mass: S,
}

/// Finds the level-`n` vertex whose open `eps`-ball under `d_n` has the
/// largest mass.
pub fn concentration_check<S: Scalar>(
    model: &MarkovModel<S>,
    report: &IterationReport<S>,
    n: usize,
    eps: f64,
) -> Result<Concentration<S>> {
    let lvl = report.level(n).ok_or(Error::LevelMissing(n))?;
    let mu = model.marginal(n);
    let mut best = (0usize, S::zero());
    for v in 0..mu.len() {
        let mass = (0..mu.len())
            .filter(|&w| lvl.distances.get(v, w).to_f64() < eps)
            .fold(S::zero(), |acc, w| acc + mu[w].clone());
        if mass > best.1 {
            best = (v, mass);
        }
    }
    let ok = best.1.to_f64() >= 1.0 - eps;
    Ok(Concentration {
        vertex: ok.then_some(best.0),
        best_vertex: best.0,
        mass: best.1,
    })
}

/// Writes `n, I_n, max_pair_distance, semantics, decision` rows.
pub fn write_csv<S: Scalar, W: Write>(
    rows: &[(&IterationReport<S>, Decision)],
    out: W,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let io = |e: csv::Error| Error::Io(std::io::Error::other(e));
    w.write_record(["n", "I_n", "max_pair_distance", "semantics", "decision"])
        .map_err(io)?;
    for (report, decision) in rows {
        for l in &report.levels {
            w.write_record([
                l.level.to_string(),
                l.functional.repr(),
                l.max_pair_distance.repr(),
                report.semantics.name().to_string(),
                decision.name().to_string(),
            ])
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
    use crate::transport::kantorovich;

    fn q(n: i64, d: i64) -> Rational {
        Rational::ratio(n, d)
    }

    fn pow(x: &Rational, n: usize) -> Rational {
        (0..n).fold(q(1, 1), |acc, _| acc * x.clone())
    }

    #[test]
    fn bernoulli_transfer_gives_zero() {
        let m = generators::bernoulli(q(3, 4), 4).unwrap();
        let c = m.cotransitions(1).unwrap();
        let d = transfer_semimetric(&Semimetric::path(2), &c).unwrap();
        assert_eq!(d, Semimetric::zero(2));
    }

    #[test]
    fn symmetric_transfer_scales_with_ground() {
        let m = generators::symmetric(q(3, 4), 4).unwrap();
        let c = m.cotransitions(1).unwrap();
        let d = transfer_semimetric(&Semimetric::discrete(2), &c).unwrap();
        assert_eq!(d.get(0, 1), &q(1, 2));
        let d = transfer_semimetric(&Semimetric::discrete(2).scaled(&q(7, 3)), &c).unwrap();
        assert_eq!(d.get(0, 1), &(q(1, 2) * q(7, 3)));
        assert!(matches!(
            transfer_semimetric(&Semimetric::discrete(3), &c),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    /// Exhaustive oracle for two-state chains: a coupling of two rows
    /// `(a, 1-a)` and `(b, 1-b)` is determined by `t = psi(0, 0)`, and the
    /// cost is piecewise linear in `t`, so the endpoints of the feasible
    /// interval suffice.
    fn two_state_oracle(rows: &[[Rational; 2]; 2], d01: &Rational) -> Rational {
        let (a, b) = (rows[0][0].clone(), rows[1][0].clone());
        let lo = Rational::max_of(q(0, 1), a.clone() + b.clone() - q(1, 1));
        let hi = Rational::min_of(a.clone(), b.clone());
        [lo, hi]
            .into_iter()
            .map(|t| {
                let off = (a.clone() - t.clone()) + (b.clone() - t.clone());
                off * d01.clone()
            })
            .fold(None::<Rational>, |best, v| {
                Some(best.map_or(v.clone(), |b| Rational::min_of(b, v)))
            })
            .unwrap()
    }

    #[test]
    fn symmetric_kantorovich_series_matches_oracle() {
        let p = q(3, 4);
        let m = generators::symmetric(p.clone(), 6).unwrap();
        let r = iterate(
            &m,
            &InitialMetricSpec::DiscreteOnLevel0,
            6,
            Semantics::Kantorovich,
        )
        .unwrap();
        let rows = [[q(3, 4), q(1, 4)], [q(1, 4), q(3, 4)]];
        let mut oracle = q(1, 1);
        for l in &r.levels {
            oracle = two_state_oracle(&rows, &oracle);
            assert_eq!(l.distances.get(0, 1), &oracle);
            assert_eq!(oracle, pow(&q(1, 2), l.level));
            assert_eq!(l.functional, oracle.clone() / q(2, 1));
        }
        assert_eq!(r.levels.first().unwrap().level, 1);
    }

    #[test]
    fn tv_refresh_is_constant_for_symmetric() {
        let m = generators::symmetric(q(3, 4), 8).unwrap();
        let r = iterate(
            &m,
            &InitialMetricSpec::DiscreteOnLevel0,
            8,
            Semantics::TvRefresh,
        )
        .unwrap();
        assert!(r
            .levels
            .iter()
            .all(|l| l.distances.get(0, 1) == &q(1, 2) && l.functional == q(1, 4)));
        assert_eq!(
            decide_standardness(&r, DEFAULT_TOL, DEFAULT_WINDOW).unwrap(),
            Decision::NonstandardEvidence
        );
    }

    #[test]
    fn bernoulli_iterates_to_zero_for_deep_cylinders() {
        let m = generators::bernoulli(q(2, 3), 6).unwrap();
        for init in [
            InitialMetricSpec::DiscreteOnLevel0,
            InitialMetricSpec::weighted(vec![q(1, 1), q(1, 2), q(1, 4)]).unwrap(),
            InitialMetricSpec::FromFunction(FunctionSpec::coordinate(2)),
        ] {
            let r = iterate(&m, &init, 6, Semantics::Kantorovich).unwrap();
            assert!(r.levels.iter().all(|l| l.functional == q(0, 1)), "{init:?}");
        }
        let r = iterate(
            &m,
            &InitialMetricSpec::DiscreteOnLevel0,
            6,
            Semantics::Kantorovich,
        )
        .unwrap();
        assert_eq!(
            decide_standardness(&r, DEFAULT_TOL, 2).unwrap(),
            Decision::StandardEvidence
        );
    }

    #[test]
    fn collapse_matches_direct_transport_for_depth_one() {
        let m = generators::symmetric(q(2, 3), 3).unwrap();
        let cots = m.cotransitions_upto(3).unwrap();
        let d = collapse_initial(&m, &InitialMetricSpec::DiscreteOnLevel0, &cots).unwrap();
        let direct = kantorovich(&cots[0].rows[0], &cots[0].rows[1], &Semimetric::discrete(2))
            .unwrap()
            .value;
        assert_eq!(d.get(0, 1), &direct);
    }

    #[test]
    fn depth_two_cylinder_on_symmetric_chain() {
        // rho = [x_0 != y_0] + [x_1 != y_1]. The cost between windows
        // (c, a) and (c', b) with a != b is 1 + [c != c'], so the optimal
        // coupling of (3/4, 1/4) and (1/4, 3/4) pays 1 + 1/2 at level 1.
        let m = generators::symmetric(q(3, 4), 4).unwrap();
        let init = InitialMetricSpec::weighted(vec![q(1, 1), q(1, 1)]).unwrap();
        let r = iterate(&m, &init, 4, Semantics::Kantorovich).unwrap();
        assert_eq!(r.levels[0].level, 2);
        // Level 2: transfer of d_1(0,1) = 3/2 gives 3/4.
        assert_eq!(r.levels[0].distances.get(0, 1), &q(3, 4));
    }

    #[test]
    fn decision_errors() {
        let m = generators::bernoulli(q(3, 4), 3).unwrap();
        let r = iterate(
            &m,
            &InitialMetricSpec::DiscreteOnLevel0,
            3,
            Semantics::Kantorovich,
        )
        .unwrap();
        assert!(matches!(
            decide_standardness(&r, 1e-6, 0),
            Err(Error::EmptyWindow)
        ));
        assert!(matches!(
            decide_standardness(&r, 1e-6, 9),
            Err(Error::WindowTooLarge { .. })
        ));
    }

    #[test]
    fn concentration() {
        let m = generators::symmetric(q(3, 4), 6).unwrap();
        let k = iterate(
            &m,
            &InitialMetricSpec::DiscreteOnLevel0,
            6,
            Semantics::Kantorovich,
        )
        .unwrap();
        let c = concentration_check(&m, &k, 6, 0.02).unwrap();
        assert_eq!(c.mass, q(1, 1));
        assert_eq!(c.vertex, Some(0));
        let tv = iterate(
            &m,
            &InitialMetricSpec::DiscreteOnLevel0,
            6,
            Semantics::TvRefresh,
        )
        .unwrap();
        let c = concentration_check(&m, &tv, 6, 0.25).unwrap();
        assert_eq!(c.mass, q(1, 2));
        assert_eq!(c.vertex, None);
        assert!(matches!(
            concentration_check(&m, &tv, 9, 0.1),
            Err(Error::LevelMissing(9))
        ));
        let b = generators::bernoulli(q(3, 4), 3).unwrap();
        let r = iterate(
            &b,
            &InitialMetricSpec::DiscreteOnLevel0,
            3,
            Semantics::Kantorovich,
        )
        .unwrap();
        assert_eq!(concentration_check(&b, &r, 2, 1e-9).unwrap().mass, q(1, 1));
    }

    #[test]
    fn csv_layout() {
        let m = generators::symmetric(q(3, 4), 2).unwrap();
        let r = iterate(
            &m,
            &InitialMetricSpec::DiscreteOnLevel0,
            2,
            Semantics::TvRefresh,
        )
        .unwrap();
        let mut buf = Vec::new();
        write_csv(&[(&r, Decision::Inconclusive)], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text,
            "n,I_n,max_pair_distance,semantics,decision\n1,1/4,1/2,tv_refresh,inconclusive\n2,1/4,1/2,tv_refresh,inconclusive\n"
        );
    }

    #[test]
    fn function_files() {
        let v = serde_json::json!({"depth": 2, "table": [{"path": [0, 1], "value": "1/2"}]});
        let f = FunctionSpec::<Rational>::from_json_value(&v).unwrap();
        assert_eq!(f.value(&[0, 1]).unwrap(), &q(1, 2));
        assert!(matches!(f.value(&[1, 1]), Err(Error::MissingValue(_))));
        let v = serde_json::json!({"depth": 2, "values": [1, 2]});
        assert!(FunctionSpec::<Rational>::from_json_value(&v).is_err());
    }
}
