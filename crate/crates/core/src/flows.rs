//! Integer feasible flows on acyclic networks, their bijection with
//! contingency tables, capacity removal, and the Kostant partition function.
//!
//! Balance convention: for every vertex `v`, inflow minus outflow equals `a(v)`.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use num_bigint::BigInt;
use num_rational::BigRational;

use crate::tables::{count_exact, CountLimits, Table};
use crate::{BigCount, Error, MarginPair, Result, WeightMatrix};

/// Node budget of the brute-force flow enumeration.
pub const DEFAULT_FLOW_BUDGET: u64 = 50_000_000;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FlowNetwork {
    n: usize,
    edges: Vec<(usize, usize)>,
    excess: Vec<i64>,
    capacities: Vec<Option<u64>>,
    topo: Vec<usize>,
}

impl FlowNetwork {
    pub fn new(
        n: usize,
        edges: Vec<(usize, usize)>,
        excess: Vec<i64>,
        capacities: Option<Vec<Option<u64>>>,
    ) -> Result<Self> {
        if excess.len() != n {
            return Err(Error::InvalidNetwork(alloc::format!(
                "{} excesses for {n} vertices",
                excess.len()
            )));
        }
        let capacities = capacities.unwrap_or_else(|| vec![None; edges.len()]);
        if capacities.len() != edges.len() {
            return Err(Error::InvalidNetwork(String::from(
                "one capacity entry per edge required",
            )));
        }
        if capacities.contains(&Some(0)) {
            return Err(Error::InvalidNetwork(String::from("capacities must be positive")));
        }
        let mut seen = alloc::collections::BTreeSet::new();
        for &(u, v) in &edges {
            if u >= n || v >= n {
                return Err(Error::InvalidNetwork(alloc::format!("edge ({u},{v}) out of range")));
            }
            if u == v {
                return Err(Error::InvalidNetwork(alloc::format!("loop at {u}")));
            }
            if !seen.insert((u, v)) {
                return Err(Error::InvalidNetwork(alloc::format!("repeated edge ({u},{v})")));
            }
        }
        let total: i64 = excess.iter().sum();
        if total != 0 {
            return Err(Error::NonZeroSum(total));
        }
        let topo = topological_order(n, &edges).ok_or(Error::CyclicGraph)?;
        Ok(Self {
            n,
            edges,
            excess,
            capacities,
            topo,
        })
    }

    pub fn vertex_count(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn excess(&self) -> &[i64] {
        &self.excess
    }

    pub fn capacities(&self) -> &[Option<u64>] {
        &self.capacities
    }

    pub fn has_capacities(&self) -> bool {
        self.capacities.iter().any(Option::is_some)
    }

    /// Checks balance and capacities of an edge-value vector.
    pub fn is_feasible(&self, flow: &[u64]) -> bool {
        if flow.len() != self.edges.len() {
            return false;
        }
        let mut bal = vec![0i128; self.n];
        for (k, &(u, v)) in self.edges.iter().enumerate() {
            if self.capacities[k].is_some_and(|c| flow[k] > c) {
                return false;
            }
            bal[u] -= flow[k] as i128;
            bal[v] += flow[k] as i128;
        }
        bal.iter().zip(&self.excess).all(|(b, &a)| *b == a as i128)
    }

    /// Upper bound on every edge value over all feasible flows, from forward
    /// and backward interval propagation in topological order.
    pub fn edge_upper_bounds(&self) -> Vec<u64> {
        let m = self.edges.len();
        let mut ub: Vec<u64> = self
            .capacities
            .iter()
            .map(|c| c.unwrap_or(u64::MAX))
            .collect();
        let mut ins: Vec<Vec<usize>> = vec![Vec::new(); self.n];
        let mut outs: Vec<Vec<usize>> = vec![Vec::new(); self.n];
        for (k, &(u, v)) in self.edges.iter().enumerate() {
            outs[u].push(k);
            ins[v].push(k);
        }
        let sum = |ub: &[u64], es: &[usize]| -> i128 { es.iter().map(|&k| ub[k] as i128).sum() };
        for _ in 0..2 {
            // outflow = inflow - a(v)
            for &v in &self.topo {
                let cap = (sum(&ub, &ins[v]) - self.excess[v] as i128).max(0);
                for &k in &outs[v] {
                    ub[k] = ub[k].min(cap.min(u64::MAX as i128) as u64);
                }
            }
            // inflow = outflow + a(v)
            for &v in self.topo.iter().rev() {
                let cap = (sum(&ub, &outs[v]) + self.excess[v] as i128).max(0);
                for &k in &ins[v] {
                    ub[k] = ub[k].min(cap.min(u64::MAX as i128) as u64);
                }
            }
        }
        debug_assert!(ub.len() == m);
        ub
    }
}

fn topological_order(n: usize, edges: &[(usize, usize)]) -> Option<Vec<usize>> {
    let mut indeg = vec![0usize; n];
    let mut outs: Vec<Vec<usize>> = vec![Vec::new(); n];
    for &(u, v) in edges {
        indeg[v] += 1;
        outs[u].push(v);
    }
    let mut stack: Vec<usize> = (0..n).rev().filter(|&v| indeg[v] == 0).collect();
    let mut order = Vec::with_capacity(n);
    while let Some(u) = stack.pop() {
        order.push(u);
        for &v in &outs[u] {
            indeg[v] -= 1;
            if indeg[v] == 0 {
                stack.push(v);
            }
        }
    }
    (order.len() == n).then_some(order)
}

/// Counts feasible integer flows by backtracking over edge values. The last
/// unassigned edge at any vertex is forced by that vertex's balance.
pub fn count_flows_bruteforce(net: &FlowNetwork, node_budget: u64) -> Result<BigCount> {
    let mut visitor = FlowSearch::new(net, node_budget);
    visitor.run(&mut |_| {})?;
    Ok(BigRational::from_integer(BigInt::from(visitor.found)))
}

/// Calls `emit` on every feasible flow.
pub fn for_each_flow(net: &FlowNetwork, node_budget: u64, mut emit: impl FnMut(&[u64])) -> Result<u64> {
    let mut visitor = FlowSearch::new(net, node_budget);
    visitor.run(&mut emit)?;
    Ok(visitor.found)
}

struct FlowSearch<'a> {
    net: &'a FlowNetwork,
    order: Vec<usize>,
    ub: Vec<u64>,
    /// For each position in `order`, vertices whose last incident edge it is.
    closes: Vec<Vec<usize>>,
    bal: Vec<i128>,
    flow: Vec<u64>,
    found: u64,
    nodes: u64,
    budget: u64,
}

impl<'a> FlowSearch<'a> {
    fn new(net: &'a FlowNetwork, budget: u64) -> Self {
        let mut pos = vec![0usize; net.n];
        for (p, &v) in net.topo.iter().enumerate() {
            pos[v] = p;
        }
        let mut order: Vec<usize> = (0..net.edges.len()).collect();
        order.sort_by_key(|&k| {
            let (u, v) = net.edges[k];
            (pos[u].max(pos[v]), pos[u].min(pos[v]))
        });
        let mut last = vec![None; net.n];
        for (p, &k) in order.iter().enumerate() {
            let (u, v) = net.edges[k];
            last[u] = Some(p);
            last[v] = Some(p);
        }
        let mut closes = vec![Vec::new(); order.len()];
        for (v, l) in last.iter().enumerate() {
            if let Some(p) = l {
                closes[*p].push(v);
            }
        }
        Self {
            net,
            ub: net.edge_upper_bounds(),
            order,
            closes,
            bal: vec![0; net.n],
            flow: vec![0; net.edges.len()],
            found: 0,
            nodes: 0,
            budget,
        }
    }

    fn run(&mut self, emit: &mut dyn FnMut(&[u64])) -> Result<()> {
        // isolated vertices must already balance
        let mut touched = vec![false; self.net.n];
        for &(u, v) in &self.net.edges {
            touched[u] = true;
            touched[v] = true;
        }
        if (0..self.net.n).any(|v| !touched[v] && self.net.excess[v] != 0) {
            return Ok(());
        }
        self.step(0, emit)
    }

    /// Value of edge `k` required by vertex `w` if `k` is its last edge.
    fn required(&self, k: usize, w: usize) -> i128 {
        let (u, _) = self.net.edges[k];
        let a = self.net.excess[w] as i128;
        if w == u {
            self.bal[w] - a
        } else {
            a - self.bal[w]
        }
    }

    fn step(&mut self, p: usize, emit: &mut dyn FnMut(&[u64])) -> Result<()> {
        self.nodes += 1;
        if self.nodes > self.budget {
            return Err(Error::OracleLimitExceeded(alloc::format!(
                "flow enumeration exceeded {} nodes",
                self.budget
            )));
        }
        if p == self.order.len() {
            self.found += 1;
            emit(&self.flow);
            return Ok(());
        }
        let k = self.order[p];
        let (lo, hi) = match self.closes[p].first() {
            Some(&w) => {
                let x = self.required(k, w);
                if x < 0 || x > self.ub[k] as i128 {
                    return Ok(());
                }
                (x as u64, x as u64)
            }
            None => (0, self.ub[k]),
        };
        let (u, v) = self.net.edges[k];
        for x in lo..=hi {
            self.flow[k] = x;
            self.bal[u] -= x as i128;
            self.bal[v] += x as i128;
            let closed_ok = self.closes[p]
                .iter()
                .all(|&w| self.bal[w] == self.net.excess[w] as i128);
            if closed_ok {
                self.step(p + 1, emit)?;
            }
            self.bal[u] += x as i128;
            self.bal[v] -= x as i128;
        }
        self.flow[k] = 0;
        Ok(())
    }
}

/// Contingency-table form of a capacity-free network: row `i` is the tail and
/// column `j` the head of edge `i → j`, the diagonal holds the slack `z_i - inflow`.
#[derive(Debug, Clone, PartialEq)]
pub struct Reduction {
    /// Inflow bound per vertex.
    pub z: Vec<u64>,
    /// Original vertex of each kept row.
    pub row_map: Vec<usize>,
    /// Original vertex of each kept column.
    pub col_map: Vec<usize>,
    /// `None` when every margin is zero: only the zero flow exists.
    pub instance: Option<(MarginPair, WeightMatrix)>,
    edges: Vec<(usize, usize)>,
}

impl Reduction {
    pub fn count(&self, limits: &CountLimits) -> Result<BigCount> {
        match &self.instance {
            None => Ok(BigRational::from_integer(BigInt::from(1))),
            Some((margins, support)) => Ok(count_exact(margins, support, limits)?.count),
        }
    }

    /// Edge values encoded by a table over the kept rows and columns.
    pub fn table_to_flow(&self, table: &Table) -> Vec<u64> {
        let row_of = |v: usize| self.row_map.iter().position(|&r| r == v);
        let col_of = |v: usize| self.col_map.iter().position(|&c| c == v);
        self.edges
            .iter()
            .map(|&(u, v)| match (row_of(u), col_of(v)) {
                (Some(i), Some(j)) => table.get(i, j),
                _ => 0,
            })
            .collect()
    }
}

/// Reduces to tables with `z_i` the propagated inflow bound.
pub fn reduce_to_tables(net: &FlowNetwork) -> Result<Reduction> {
    reduce_with_slack(net, 0)
}

/// As [`reduce_to_tables`] with every `z_i` enlarged by `extra`; any valid
/// inflow bound gives the same count.
pub fn reduce_with_slack(net: &FlowNetwork, extra: u64) -> Result<Reduction> {
    if net.has_capacities() {
        return Err(Error::InvalidNetwork(String::from(
            "capacitated network: expand capacities before reducing",
        )));
    }
    let ub = net.edge_upper_bounds();
    let mut inflow = vec![0u64; net.n];
    for (k, &(_, v)) in net.edges.iter().enumerate() {
        inflow[v] = inflow[v].saturating_add(ub[k]);
    }
    let z: Vec<u64> = (0..net.n)
        .map(|v| inflow[v].max(net.excess[v].max(0) as u64) + extra)
        .collect();
    let rows_all: Vec<u64> = (0..net.n)
        .map(|v| (z[v] as i128 - net.excess[v] as i128) as u64)
        .collect();
    let row_map: Vec<usize> = (0..net.n).filter(|&v| rows_all[v] > 0).collect();
    let col_map: Vec<usize> = (0..net.n).filter(|&v| z[v] > 0).collect();
    let instance = if row_map.is_empty() {
        None
    } else {
        let margins = MarginPair::new(
            row_map.iter().map(|&v| rows_all[v]).collect(),
            col_map.iter().map(|&v| z[v]).collect(),
        )?;
        let edge_set: alloc::collections::BTreeSet<(usize, usize)> =
            net.edges.iter().copied().collect();
        let support = WeightMatrix::support(row_map.len(), col_map.len(), |i, j| {
            let (u, v) = (row_map[i], col_map[j]);
            u == v || edge_set.contains(&(u, v))
        });
        Some((margins, support))
    };
    Ok(Reduction {
        z,
        row_map,
        col_map,
        instance,
        edges: net.edges.clone(),
    })
}

/// Removes capacities: edge `u → v` with capacity `c` becomes `u → m` and
/// `v → m` for a new vertex `m` with `a(m) = c`, while `a(v)` drops by `c`.
/// The flow on `v → m` is `c - x(u → v)`, so it exists exactly when `x ≤ c`.
pub fn expand_capacities(net: &FlowNetwork) -> FlowNetwork {
    if !net.has_capacities() {
        return net.clone();
    }
    let mut n = net.n;
    let mut edges = Vec::with_capacity(net.edges.len() * 2);
    let mut excess = net.excess.clone();
    for (k, &(u, v)) in net.edges.iter().enumerate() {
        match net.capacities[k] {
            None => edges.push((u, v)),
            Some(c) => {
                let m = n;
                n += 1;
                edges.push((u, m));
                edges.push((v, m));
                excess.push(c as i64);
                excess[v] -= c as i64;
            }
        }
    }
    FlowNetwork::new(n, edges, excess, None).expect("gadget keeps the network valid")
}

/// Network whose flows are the decompositions of `a` into positive roots
/// `e_i - e_j` (`i < j`): an edge `j → i` for every `j > i`.
pub fn kostant_network(a: &[i64]) -> Result<FlowNetwork> {
    let n = a.len();
    let edges = (0..n)
        .flat_map(|j| (0..j).map(move |i| (j, i)))
        .collect();
    FlowNetwork::new(n, edges, a.to_vec(), None)
}

#[derive(Debug, Clone, PartialEq)]
pub enum KostantInstance {
    /// A negative prefix sum: `φ = 0`.
    Zero,
    /// All prefix sums vanish: `φ = 1`.
    One,
    Instance {
        margins: MarginPair,
        weights: WeightMatrix,
        /// Original prefix indices that survive stripping.
        kept: Vec<usize>,
    },
}

/// Table instance with `r_k = c_k = a_1 + … + a_k` for `k < n` and support
/// `w_ij = 1` iff `i ≥ j - 1`. Zero prefix sums are struck as row/column pairs.
pub fn kostant_instance(a: &[i64]) -> Result<KostantInstance> {
    let total: i64 = a.iter().sum();
    if total != 0 {
        return Err(Error::NonZeroSum(total));
    }
    let prefix: Vec<i64> = a
        .iter()
        .take(a.len().saturating_sub(1))
        .scan(0i64, |s, &x| {
            *s += x;
            Some(*s)
        })
        .collect();
    if prefix.iter().any(|&s| s < 0) {
        return Ok(KostantInstance::Zero);
    }
    let kept: Vec<usize> = (0..prefix.len()).filter(|&k| prefix[k] > 0).collect();
    if kept.is_empty() {
        return Ok(KostantInstance::One);
    }
    let sums: Vec<u64> = kept.iter().map(|&k| prefix[k] as u64).collect();
    let margins = MarginPair::new(sums.clone(), sums)?;
    let weights = WeightMatrix::support(kept.len(), kept.len(), |i, j| kept[i] + 1 >= kept[j]);
    Ok(KostantInstance::Instance {
        margins,
        weights,
        kept,
    })
}

pub fn kostant_phi(a: &[i64], limits: &CountLimits) -> Result<BigCount> {
    Ok(match kostant_instance(a)? {
        KostantInstance::Zero => BigRational::from_integer(BigInt::from(0)),
        KostantInstance::One => BigRational::from_integer(BigInt::from(1)),
        KostantInstance::Instance {
            margins, weights, ..
        } => count_exact(&margins, &weights, limits)?.count,
    })
}
