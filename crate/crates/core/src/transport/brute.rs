use ndarray::Array2;

use super::{check_probability, Semimetric};
use crate::error::{Error, Result};
use crate::numeric::Scalar;

/// Largest number of positive-mass points per side the oracle accepts.
pub const BRUTE_FORCE_LIMIT: usize = 4;

/// Exact transport value by enumerating every basic feasible solution.
///
/// Vertices of the transportation polytope are exactly the feasible flows
/// supported on spanning trees of the bipartite graph, so the minimum over
/// all spanning trees with nonnegative tree flows is the optimum.
pub fn brute_force_transport<S: Scalar>(
    alpha: &[S],
    beta: &[S],
    ground: &Semimetric<S>,
) -> Result<S> {
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
    brute_force_transport_cost(alpha, beta, ground.matrix())
}

/// Same as [`brute_force_transport`] for an arbitrary rectangular cost.
pub fn brute_force_transport_cost<S: Scalar>(
    supply: &[S],
    demand: &[S],
    cost: &Array2<S>,
) -> Result<S> {
    if cost.dim() != (supply.len(), demand.len()) {
        return Err(Error::ShapeMismatch(format!("cost is {:?}", cost.dim())));
    }
    let rows: Vec<usize> = (0..supply.len())
        .filter(|&i| supply[i] > S::zero())
        .collect();
    let cols: Vec<usize> = (0..demand.len())
        .filter(|&j| demand[j] > S::zero())
        .collect();
    let size = rows.len().max(cols.len());
    if size > BRUTE_FORCE_LIMIT {
        return Err(Error::TooLarge {
            size,
            limit: BRUTE_FORCE_LIMIT,
        });
    }
    if rows.is_empty() || cols.is_empty() {
        return Ok(S::zero());
    }
    let (m, k) = (rows.len(), cols.len());
    let cells: Vec<(usize, usize)> = (0..m).flat_map(|i| (0..k).map(move |j| (i, j))).collect();
    let mut search = TreeSearch {
        m,
        k,
        supply: rows.iter().map(|&i| supply[i].clone()).collect(),
        demand: cols.iter().map(|&j| demand[j].clone()).collect(),
        cost: Array2::from_shape_fn((m, k), |(i, j)| cost[[rows[i], cols[j]]].clone()),
        cells,
        best: None,
    };
    let mut chosen = Vec::with_capacity(m + k - 1);
    let parent: Vec<usize> = (0..m + k).collect();
    search.extend(0, &mut chosen, parent);
    search
        .best
        .ok_or_else(|| Error::Numeric("no feasible vertex found".into()))
}

struct TreeSearch<S> {
    m: usize,
    k: usize,
    supply: Vec<S>,
    demand: Vec<S>,
    cost: Array2<S>,
    cells: Vec<(usize, usize)>,
    best: Option<S>,
}

fn find(parent: &mut [usize], x: usize) -> usize {
    let mut r = x;
    while parent[r] != r {
        r = parent[r];
    }
    r
}

impl<S: Scalar> TreeSearch<S> {
    fn extend(&mut self, start: usize, chosen: &mut Vec<usize>, parent: Vec<usize>) {
        let need = self.m + self.k - 1;
        if chosen.len() == need {
            self.evaluate(chosen);
            return;
        }
        let remaining = self.cells.len() - start;
        if remaining < need - chosen.len() {
            return;
        }
        for idx in start..self.cells.len() {
            let (i, j) = self.cells[idx];
            let mut p = parent.clone();
            let (a, b) = (find(&mut p, i), find(&mut p, self.m + j));
            if a == b {
                continue;
            }
            p[a] = b;
            chosen.push(idx);
            self.extend(idx + 1, chosen, p);
            chosen.pop();
        }
    }

    /// Solves the tree flows by peeling leaves; records the cost when feasible.
    fn evaluate(&mut self, chosen: &[usize]) {
        let nodes = self.m + self.k;
        let mut residual: Vec<S> = self
            .supply
            .iter()
            .chain(self.demand.iter())
            .cloned()
            .collect();
        let mut alive = vec![true; chosen.len()];
        let mut degree = vec![0usize; nodes];
        let ends: Vec<(usize, usize)> = chosen
            .iter()
            .map(|&idx| {
                let (i, j) = self.cells[idx];
                (i, self.m + j)
            })
            .collect();
        for &(a, b) in &ends {
            degree[a] += 1;
            degree[b] += 1;
        }
        let mut total = S::zero();
        for _ in 0..chosen.len() {
            let Some(leaf) = (0..nodes).find(|&v| degree[v] == 1) else {
                return;
            };
            let e = (0..ends.len())
                .find(|&e| alive[e] && (ends[e].0 == leaf || ends[e].1 == leaf))
                .expect("leaf has an edge");
            let other = if ends[e].0 == leaf {
                ends[e].1
            } else {
                ends[e].0
            };
            let x = residual[leaf].clone();
            if x.is_neg_beyond(&S::one()) {
                return;
            }
            residual[other] = residual[other].clone() - x.clone();
            residual[leaf] = S::zero();
            alive[e] = false;
            degree[leaf] -= 1;
            degree[other] -= 1;
            let (i, j) = self.cells[chosen[e]];
            total = total + x * self.cost[[i, j]].clone();
        }
        if residual.iter().any(|r| !r.near(&S::zero())) {
            return;
        }
        let better = match &self.best {
            None => true,
            Some(b) => total < *b,
        };
        if better {
            self.best = Some(total);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::Rational;
    use crate::transport::kantorovich;

    fn q(n: i64, d: i64) -> Rational {
        Rational::ratio(n, d)
    }

    #[test]
    fn two_by_two_closed_form() {
        // Any 2x2 instance on the discrete metric: value = TV * d(0,1).
        let g = Semimetric::line(&[q(0, 1), q(5, 2)]);
        let a = [q(2, 3), q(1, 3)];
        let b = [q(1, 5), q(4, 5)];
        let v = brute_force_transport(&a, &b, &g).unwrap();
        assert_eq!(v, (q(2, 3) - q(1, 5)) * q(5, 2));
    }

    #[test]
    fn uniform_three_points_is_zero() {
        let g = Semimetric::<Rational>::path(3);
        let a = [q(1, 3), q(1, 3), q(1, 3)];
        assert_eq!(brute_force_transport(&a, &a, &g).unwrap(), q(0, 1));
    }

    #[test]
    fn path_metric_matches_solver() {
        let g = Semimetric::<Rational>::path(3);
        let a = [q(1, 2), q(1, 3), q(1, 6)];
        let b = [q(1, 6), q(1, 6), q(2, 3)];
        let oracle = brute_force_transport(&a, &b, &g).unwrap();
        // On the line the optimum is the L1 distance between CDFs: 1/3 + 1/2.
        assert_eq!(oracle, q(5, 6));
        assert_eq!(kantorovich(&a, &b, &g).unwrap().value, oracle);
    }

    #[test]
    fn too_large() {
        let g = Semimetric::<Rational>::discrete(5);
        let a = vec![q(1, 5); 5];
        assert!(matches!(
            brute_force_transport(&a, &a, &g),
            Err(Error::TooLarge { .. })
        ));
    }
}
