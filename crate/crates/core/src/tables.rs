//! Exact weighted table counts `T(R, C; W)` and plain enumeration of tables.
//!
//! [`count_exact`] is a column-by-column dynamic program over residual row
//! sums. [`count_bruteforce`] walks every table one cell at a time with no
//! memoization and serves as the independent oracle.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use num_rational::BigRational;
use num_traits::Zero;

use crate::semiring::Semiring;
use crate::{BigCount, Error, MarginPair, Matrix, Result, WeightMatrix};

pub const DEFAULT_MEMO_BUDGET: usize = 10_000_000;
pub const DEFAULT_ORACLE_TOTAL: u64 = 12;

/// Resource limits for counting.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CountLimits {
    /// Maximum number of dynamic-programming states kept over all columns.
    pub memo_budget: usize,
    /// Largest total `N` accepted by the enumeration oracle.
    pub oracle_total: u64,
}

impl Default for CountLimits {
    fn default() -> Self {
        Self {
            memo_budget: DEFAULT_MEMO_BUDGET,
            oracle_total: DEFAULT_ORACLE_TOTAL,
        }
    }
}

/// A contingency table.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Table(Vec<Vec<u64>>);

impl Table {
    pub fn new(rows: Vec<Vec<u64>>) -> Self {
        Self(rows)
    }

    pub fn rows(&self) -> &[Vec<u64>] {
        &self.0
    }

    pub fn get(&self, i: usize, j: usize) -> u64 {
        self.0[i][j]
    }

    pub fn row_sums(&self) -> Vec<u64> {
        self.0.iter().map(|r| r.iter().sum()).collect()
    }

    pub fn col_sums(&self) -> Vec<u64> {
        let n = self.0.first().map_or(0, Vec::len);
        (0..n).map(|j| self.0.iter().map(|r| r[j]).sum()).collect()
    }

    /// `∏ w_ij^{d_ij}` with `0^0 = 1`.
    pub fn weight(&self, weights: &WeightMatrix) -> BigRational {
        let mut w = BigRational::from_integer(1.into());
        for (i, row) in self.0.iter().enumerate() {
            for (j, &d) in row.iter().enumerate() {
                if d > 0 {
                    w *= num_traits::pow(weights.get(i, j).clone(), d as usize);
                }
            }
        }
        w
    }

    pub fn into_rows(self) -> Vec<Vec<u64>> {
        self.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CountResult {
    pub count: BigCount,
    /// Dynamic-programming states for [`count_exact`]; tables walked for
    /// [`count_bruteforce`].
    pub tables_visited: u64,
}

/// `T(R, C; W)` in exact rational arithmetic.
pub fn count_exact(
    margins: &MarginPair,
    weights: &WeightMatrix,
    limits: &CountLimits,
) -> Result<CountResult> {
    weights.check_dims(margins)?;
    let (count, states) = count_in(margins, weights.matrix(), limits.memo_budget)?;
    Ok(CountResult {
        count,
        tables_visited: states,
    })
}

/// The counting dynamic program over any [`Semiring`] of weights.
///
/// Returns the total weight and the number of states created.
pub fn count_in<S: Semiring>(
    margins: &MarginPair,
    weights: &Matrix<S>,
    memo_budget: usize,
) -> Result<(S, u64)> {
    let (m, n) = (margins.m(), margins.n());
    if weights.rows() != m || weights.cols() != n {
        return Err(Error::DimensionMismatch(alloc::format!(
            "weights are {}x{}, margins need {m}x{n}",
            weights.rows(),
            weights.cols()
        )));
    }

    // Largest columns first keeps the residual state space small.
    let mut col_order: Vec<usize> = (0..n).collect();
    col_order.sort_by(|&a, &b| margins.cols().entries()[b].cmp(&margins.cols().entries()[a]));

    // Rows with identical weight rows are interchangeable, so residuals
    // within such a group are kept sorted.
    let row_is_zero: Vec<Vec<bool>> = (0..m)
        .map(|i| col_order.iter().map(|&j| weights[(i, j)].is_zero()).collect())
        .collect();
    let mut row_order: Vec<usize> = (0..m).collect();
    let groups = row_groups(weights, &col_order, &mut row_order);

    let col_sums: Vec<u64> = col_order.iter().map(|&j| margins.cols().entries()[j]).collect();
    let start: Vec<u64> = row_order.iter().map(|&i| margins.rows().entries()[i]).collect();
    let mut start = start;
    canonicalize(&mut start, &groups);

    let mut layer: BTreeMap<Vec<u64>, S> = BTreeMap::new();
    layer.insert(start, S::one());
    let mut states: u64 = 1;

    for (k, &col) in col_order.iter().enumerate() {
        let c = col_sums[k];
        let powers: Vec<Vec<S>> = row_order
            .iter()
            .map(|&i| {
                let w = &weights[(i, col)];
                let mut p = Vec::with_capacity(c as usize + 1);
                p.push(S::one());
                for d in 1..=c {
                    let next = p[d as usize - 1].mul(w);
                    p.push(next);
                }
                p
            })
            .collect();
        let blocked: Vec<bool> = row_order.iter().map(|&i| row_is_zero[i][k]).collect();
        let last = k + 1 == n;
        let mut next: BTreeMap<Vec<u64>, S> = BTreeMap::new();

        for (residual, acc) in &layer {
            if last {
                // The final column must absorb every residual exactly.
                let mut w = acc.clone();
                for (r, &res) in residual.iter().enumerate() {
                    if res > 0 {
                        if blocked[r] {
                            w = S::zero();
                            break;
                        }
                        w = w.mul(&powers[r][res as usize]);
                    }
                }
                if !w.is_zero() {
                    next.entry(vec![0; m]).or_insert_with(S::zero).add_assign(&w);
                }
                continue;
            }
            let mut suffix_cap = vec![0u64; m + 1];
            for r in (0..m).rev() {
                suffix_cap[r] = suffix_cap[r + 1] + if blocked[r] { 0 } else { residual[r].min(c) };
            }
            let mut child = residual.clone();
            distribute(
                0,
                c,
                acc.clone(),
                residual,
                &blocked,
                &powers,
                &suffix_cap,
                &mut child,
                &mut |state: &[u64], w: S| {
                    let mut key = state.to_vec();
                    canonicalize(&mut key, &groups);
                    next.entry(key).or_insert_with(S::zero).add_assign(&w);
                },
            );
        }
        states += next.len() as u64;
        if states as usize > memo_budget {
            return Err(Error::ResourceLimit {
                budget: memo_budget,
            });
        }
        layer = next;
    }

    let total = layer.remove(&vec![0; m]).unwrap_or_else(S::zero);
    Ok((total, states))
}

/// Every way to split `remaining` over rows `r..` of one column.
#[allow(clippy::too_many_arguments)]
fn distribute<S: Semiring>(
    r: usize,
    remaining: u64,
    acc: S,
    residual: &[u64],
    blocked: &[bool],
    powers: &[Vec<S>],
    suffix_cap: &[u64],
    child: &mut Vec<u64>,
    emit: &mut impl FnMut(&[u64], S),
) {
    if remaining == 0 {
        emit(child, acc);
        return;
    }
    if r == residual.len() || suffix_cap[r] < remaining {
        return;
    }
    if blocked[r] {
        distribute(r + 1, remaining, acc, residual, blocked, powers, suffix_cap, child, emit);
        return;
    }
    let hi = residual[r].min(remaining);
    let lo = remaining.saturating_sub(suffix_cap[r + 1]);
    for d in lo..=hi {
        child[r] = residual[r] - d;
        let w = if d == 0 { acc.clone() } else { acc.mul(&powers[r][d as usize]) };
        if !w.is_zero() {
            distribute(r + 1, remaining - d, w, residual, blocked, powers, suffix_cap, child, emit);
        }
    }
    child[r] = residual[r];
}

/// Reorders rows so identical weight rows are adjacent and returns the
/// group boundaries `[start, end)` of groups with more than one row.
fn row_groups<S: Semiring>(
    weights: &Matrix<S>,
    col_order: &[usize],
    row_order: &mut Vec<usize>,
) -> Vec<(usize, usize)> {
    let m = weights.rows();
    let same = |a: usize, b: usize| col_order.iter().all(|&j| weights[(a, j)] == weights[(b, j)]);
    let mut assigned = vec![false; m];
    let mut order = Vec::with_capacity(m);
    let mut groups = Vec::new();
    for a in 0..m {
        if assigned[a] {
            continue;
        }
        let start = order.len();
        for (b, taken) in assigned.iter_mut().enumerate().skip(a) {
            if !*taken && (b == a || same(a, b)) {
                *taken = true;
                order.push(b);
            }
        }
        if order.len() - start > 1 {
            groups.push((start, order.len()));
        }
    }
    *row_order = order;
    groups
}

fn canonicalize(state: &mut [u64], groups: &[(usize, usize)]) {
    for &(a, b) in groups {
        state[a..b].sort_unstable_by(|x, y| y.cmp(x));
    }
}

/// Whether some table with these margins lives on the nonzero pattern of
/// `weights`: a maximum flow from rows to columns saturating every margin.
pub fn has_table(margins: &MarginPair, weights: &WeightMatrix) -> bool {
    let (m, n) = (margins.m(), margins.n());
    let (source, sink) = (m + n, m + n + 1);
    let size = m + n + 2;
    let mut cap = vec![0u64; size * size];
    for (i, &r) in margins.rows().entries().iter().enumerate() {
        cap[source * size + i] = r;
        for j in 0..n {
            if weights.is_allowed(i, j) {
                cap[i * size + m + j] = u64::MAX;
            }
        }
    }
    for (j, &c) in margins.cols().entries().iter().enumerate() {
        cap[(m + j) * size + sink] = c;
    }
    let mut flow = 0u64;
    loop {
        // shortest augmenting path
        let mut prev = vec![usize::MAX; size];
        prev[source] = source;
        let mut queue = alloc::collections::VecDeque::from([source]);
        while let Some(u) = queue.pop_front() {
            for v in 0..size {
                if prev[v] == usize::MAX && cap[u * size + v] > 0 {
                    prev[v] = u;
                    queue.push_back(v);
                }
            }
        }
        if prev[sink] == usize::MAX {
            return flow == margins.total();
        }
        let mut push = u64::MAX;
        let mut v = sink;
        while v != source {
            push = push.min(cap[prev[v] * size + v]);
            v = prev[v];
        }
        let mut v = sink;
        while v != source {
            let u = prev[v];
            cap[u * size + v] -= push;
            cap[v * size + u] = cap[v * size + u].saturating_add(push);
            v = u;
        }
        flow += push;
    }
}

/// Reference count: the sum of table weights over [`enumerate_tables`].
pub fn count_bruteforce(
    margins: &MarginPair,
    weights: &WeightMatrix,
    limits: &CountLimits,
) -> Result<CountResult> {
    let mut count = <BigRational as Zero>::zero();
    let mut visited = 0u64;
    for table in enumerate_tables(margins, weights, limits)? {
        count += table.weight(weights);
        visited += 1;
    }
    Ok(CountResult {
        count,
        tables_visited: visited,
    })
}

/// Every table with the given margins whose positive entries lie on the
/// nonzero pattern of `support`.
///
/// Tables come out in decreasing lexicographic order of their row-major
/// entry vectors, so the first table is the greedy "northwest" one.
pub fn enumerate_tables(
    margins: &MarginPair,
    support: &WeightMatrix,
    limits: &CountLimits,
) -> Result<TableIter> {
    support.check_dims(margins)?;
    if margins.total() > limits.oracle_total {
        return Err(Error::OracleLimitExceeded(alloc::format!(
            "total {} exceeds {}",
            margins.total(),
            limits.oracle_total
        )));
    }
    let (m, n) = (margins.m(), margins.n());
    Ok(TableIter {
        m,
        n,
        allowed: (0..m * n).map(|k| support.is_allowed(k / n, k % n)).collect(),
        cells: vec![0; m * n],
        row_res: margins.rows().entries().to_vec(),
        col_res: margins.cols().entries().to_vec(),
        pos: 0,
        state: IterState::Forward,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum IterState {
    Forward,
    Backtrack,
    Done,
}

/// Lazy stream of tables; see [`enumerate_tables`].
#[derive(Debug, Clone)]
pub struct TableIter {
    m: usize,
    n: usize,
    allowed: Vec<bool>,
    cells: Vec<u64>,
    row_res: Vec<u64>,
    col_res: Vec<u64>,
    /// Number of cells currently assigned.
    pos: usize,
    state: IterState,
}

impl TableIter {
    fn forced(&self, k: usize) -> bool {
        k % self.n == self.n - 1 || k / self.n == self.m - 1
    }

    fn place(&mut self, k: usize, v: u64) {
        let (i, j) = (k / self.n, k % self.n);
        self.cells[k] = v;
        self.row_res[i] -= v;
        self.col_res[j] -= v;
    }

    fn unplace(&mut self, k: usize) {
        let (i, j) = (k / self.n, k % self.n);
        let v = self.cells[k];
        self.row_res[i] += v;
        self.col_res[j] += v;
        self.cells[k] = 0;
    }

    /// Assigns cell `pos`; false on a dead end.
    fn advance(&mut self) -> bool {
        let k = self.pos;
        let (i, j) = (k / self.n, k % self.n);
        let (rr, cr) = (self.row_res[i], self.col_res[j]);
        let v = if self.forced(k) {
            let v = if j == self.n - 1 { rr } else { cr };
            let fits = v <= rr && v <= cr && (v == 0 || self.allowed[k]);
            let closes_row = j != self.n - 1 || v == rr;
            let closes_col = i != self.m - 1 || v == cr;
            if !(fits && closes_row && closes_col) {
                return false;
            }
            v
        } else if self.allowed[k] {
            rr.min(cr)
        } else {
            0
        };
        self.place(k, v);
        self.pos += 1;
        true
    }

    /// Steps back to the most recent free cell that can still be lowered.
    fn backtrack(&mut self) -> bool {
        while self.pos > 0 {
            self.pos -= 1;
            let k = self.pos;
            if !self.forced(k) && self.cells[k] > 0 {
                let v = self.cells[k] - 1;
                self.unplace(k);
                self.place(k, v);
                self.pos += 1;
                return true;
            }
            self.unplace(k);
        }
        false
    }
}

impl Iterator for TableIter {
    type Item = Table;

    fn next(&mut self) -> Option<Table> {
        let total = self.m * self.n;
        loop {
            match self.state {
                IterState::Done => return None,
                IterState::Backtrack => {
                    self.state = if self.backtrack() {
                        IterState::Forward
                    } else {
                        IterState::Done
                    };
                }
                IterState::Forward => {
                    if self.pos == total {
                        self.state = IterState::Backtrack;
                        let rows = self.cells.chunks(self.n).map(<[u64]>::to_vec).collect();
                        return Some(Table(rows));
                    }
                    if !self.advance() {
                        self.state = IterState::Backtrack;
                    }
                }
            }
        }
    }
}
