use std::collections::VecDeque;

use ndarray::Array2;

use super::{CouplingPlan, Transport};
use crate::error::{Error, Result};
use crate::numeric::Scalar;

/// Exact transportation simplex on the bipartite graph between the
/// positive entries of `supply` and `demand`.
///
/// Starts from the north-west corner basis and pivots with Bland's rule
/// (first improving cell in row-major order enters, first blocking cell
/// leaves), which terminates under degeneracy. Zero-mass rows and columns
/// are removed before solving and come back as zero rows and columns of
/// the plan. Totals must agree; they need not be 1.
pub fn solve_transport<S: Scalar>(
    supply: &[S],
    demand: &[S],
    cost: &Array2<S>,
) -> Result<Transport<S>> {
    if cost.dim() != (supply.len(), demand.len()) {
        return Err(Error::ShapeMismatch(format!(
            "cost is {:?}, marginals are {}x{}",
            cost.dim(),
            supply.len(),
            demand.len()
        )));
    }
    if !S::sum(supply).near(&S::sum(demand)) {
        return Err(Error::NotNormalized(format!(
            "supply {} vs demand {}",
            S::sum(supply).repr(),
            S::sum(demand).repr()
        )));
    }
    let rows: Vec<usize> = (0..supply.len())
        .filter(|&i| supply[i] > S::zero())
        .collect();
    let cols: Vec<usize> = (0..demand.len())
        .filter(|&j| demand[j] > S::zero())
        .collect();
    let mut full = Array2::from_elem(cost.dim(), S::zero());
    let plan_of = |full: Array2<S>| CouplingPlan {
        plan: full,
        row_marginal: supply.to_vec(),
        col_marginal: demand.to_vec(),
    };
    if rows.is_empty() || cols.is_empty() {
        return Ok(Transport {
            value: S::zero(),
            plan: plan_of(full),
        });
    }

    let s: Vec<S> = rows.iter().map(|&i| supply[i].clone()).collect();
    let d: Vec<S> = cols.iter().map(|&j| demand[j].clone()).collect();
    let c = Array2::from_shape_fn((rows.len(), cols.len()), |(i, j)| {
        cost[[rows[i], cols[j]]].clone()
    });
    let flow = Simplex::new(s, d, c).run()?;

    let mut value = S::zero();
    for ((i, j), x) in flow.indexed_iter() {
        if !x.is_zero() {
            value = value + x.clone() * cost[[rows[i], cols[j]]].clone();
            full[[rows[i], cols[j]]] = x.clone();
        }
    }
    Ok(Transport {
        value,
        plan: plan_of(full),
    })
}

struct Simplex<S> {
    m: usize,
    k: usize,
    cost: Array2<S>,
    flow: Array2<S>,
    basic: Array2<bool>,
    scale: S,
}

impl<S: Scalar> Simplex<S> {
    fn new(supply: Vec<S>, demand: Vec<S>, cost: Array2<S>) -> Self {
        let (m, k) = cost.dim();
        let mut flow = Array2::from_elem((m, k), S::zero());
        let mut basic = Array2::from_elem((m, k), false);
        let (mut s, mut d) = (supply, demand);
        let (mut i, mut j) = (0, 0);
        loop {
            let q = S::min_of(s[i].clone(), d[j].clone());
            s[i] = s[i].clone() - q.clone();
            d[j] = d[j].clone() - q.clone();
            flow[[i, j]] = q;
            basic[[i, j]] = true;
            if i == m - 1 && j == k - 1 {
                break;
            }
            if i == m - 1 {
                j += 1;
            } else if j == k - 1 || s[i].is_zero() {
                i += 1;
            } else {
                j += 1;
            }
        }
        let scale = cost.iter().map(|x| x.abs()).fold(S::zero(), S::max_of);
        Simplex {
            m,
            k,
            cost,
            flow,
            basic,
            scale,
        }
    }

    fn run(mut self) -> Result<Array2<S>> {
        let limit = 50 * (self.m + self.k) * (self.m * self.k) + 1000;
        for _ in 0..limit {
            let (u, v) = self.potentials();
            let entering = self.entering(&u, &v);
            let Some((ei, ej)) = entering else {
                if !S::EXACT {
                    self.flow
                        .mapv_inplace(|x| if x < S::zero() { S::zero() } else { x });
                }
                return Ok(self.flow);
            };
            self.pivot(ei, ej)?;
        }
        Err(Error::Numeric("transport simplex did not converge".into()))
    }

    /// Node ids: rows are `0..m`, columns are `m..m+k`.
    fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.m + self.k];
        for ((i, j), &b) in self.basic.indexed_iter() {
            if b {
                adj[i].push(self.m + j);
                adj[self.m + j].push(i);
            }
        }
        adj
    }

    fn potentials(&self) -> (Vec<S>, Vec<S>) {
        let adj = self.adjacency();
        let mut pot: Vec<Option<S>> = vec![None; self.m + self.k];
        pot[0] = Some(S::zero());
        let mut queue = VecDeque::from([0usize]);
        while let Some(node) = queue.pop_front() {
            let p = pot[node].clone().expect("visited");
            for &next in &adj[node] {
                if pot[next].is_none() {
                    let (i, j) = if node < self.m {
                        (node, next - self.m)
                    } else {
                        (next, node - self.m)
                    };
                    pot[next] = Some(self.cost[[i, j]].clone() - p.clone());
                    queue.push_back(next);
                }
            }
        }
        // The basis is a spanning tree, so every node is reached.
        let pot: Vec<S> = pot.into_iter().map(|p| p.unwrap_or_else(S::zero)).collect();
        let v = pot[self.m..].to_vec();
        let mut u = pot;
        u.truncate(self.m);
        (u, v)
    }

    fn entering(&self, u: &[S], v: &[S]) -> Option<(usize, usize)> {
        for i in 0..self.m {
            for j in 0..self.k {
                if self.basic[[i, j]] {
                    continue;
                }
                let reduced = self.cost[[i, j]].clone() - u[i].clone() - v[j].clone();
                if reduced.is_neg_beyond(&self.scale) {
                    return Some((i, j));
                }
            }
        }
        None
    }

    fn pivot(&mut self, ei: usize, ej: usize) -> Result<()> {
        let path = self.tree_path(ei, self.m + ej)?;
        // Cells along the tree path alternate -, +, -, ... starting at row `ei`.
        let mut minus = Vec::new();
        let mut plus = vec![(ei, ej)];
        for (t, w) in path.windows(2).enumerate() {
            let cell = if w[0] < self.m {
                (w[0], w[1] - self.m)
            } else {
                (w[1], w[0] - self.m)
            };
            if t % 2 == 0 {
                minus.push(cell);
            } else {
                plus.push(cell);
            }
        }
        let theta = minus
            .iter()
            .map(|&c| self.flow[c].clone())
            .reduce(S::min_of)
            .ok_or_else(|| Error::Numeric("empty pivot cycle".into()))?;
        let leaving = *minus
            .iter()
            .filter(|&&c| self.flow[c] == theta)
            .min()
            .expect("minimum is attained");
        for &c in &plus {
            self.flow[c] = self.flow[c].clone() + theta.clone();
        }
        for &c in &minus {
            self.flow[c] = self.flow[c].clone() - theta.clone();
        }
        self.flow[leaving] = S::zero();
        self.basic[leaving] = false;
        self.basic[(ei, ej)] = true;
        Ok(())
    }

    fn tree_path(&self, from: usize, to: usize) -> Result<Vec<usize>> {
        let adj = self.adjacency();
        let mut parent = vec![usize::MAX; self.m + self.k];
        parent[from] = from;
        let mut queue = VecDeque::from([from]);
        while let Some(node) = queue.pop_front() {
            if node == to {
                break;
            }
            for &next in &adj[node] {
                if parent[next] == usize::MAX {
                    parent[next] = node;
                    queue.push_back(next);
                }
            }
        }
        if parent[to] == usize::MAX {
            return Err(Error::Numeric("basis is not a spanning tree".into()));
        }
        let mut path = vec![to];
        let mut node = to;
        while node != from {
            node = parent[node];
            path.push(node);
        }
        path.reverse();
        Ok(path)
    }
}
