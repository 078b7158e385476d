#![allow(dead_code)]

use flowtab_core::{BigCount, BigInt, BigRational, MarginPair, WeightMatrix};
use proptest::prelude::*;

pub fn int(n: i64) -> BigCount {
    BigRational::from_integer(BigInt::from(n))
}

pub fn pair(r: &[u64], c: &[u64]) -> MarginPair {
    MarginPair::new(r.to_vec(), c.to_vec()).unwrap()
}

/// Positive integer vectors of length `parts` summing to `total`.
pub fn composition(total: u64, parts: usize) -> impl Strategy<Value = Vec<u64>> {
    proptest::sample::subsequence((1..total).collect::<Vec<_>>(), parts - 1).prop_map(move |cuts| {
        let mut out = Vec::with_capacity(parts);
        let mut prev = 0;
        for c in cuts.into_iter().chain(std::iter::once(total)) {
            out.push(c - prev);
            prev = c;
        }
        out
    })
}

/// Margins with `m, n ≤ max_dim` and total at most `max_total`.
pub fn margins(max_dim: usize, max_total: u64) -> impl Strategy<Value = MarginPair> {
    (1..=max_dim, 1..=max_dim)
        .prop_flat_map(move |(m, n)| (Just(m), Just(n), (m.max(n) as u64)..=max_total))
        .prop_flat_map(|(m, n, total)| (composition(total, m), composition(total, n)))
        .prop_map(|(r, c)| MarginPair::new(r, c).unwrap())
}

pub fn weights_for(m: usize, n: usize, max_w: i64) -> impl Strategy<Value = WeightMatrix> {
    proptest::collection::vec(proptest::collection::vec(0..=max_w, n), m).prop_map(|rows| {
        let refs: Vec<&[i64]> = rows.iter().map(|r| r.as_slice()).collect();
        WeightMatrix::from_integers(&refs).unwrap()
    })
}

/// Margins together with a weight matrix with entries in `0..=max_w`.
pub fn instance(
    max_dim: usize,
    max_total: u64,
    max_w: i64,
) -> impl Strategy<Value = (MarginPair, WeightMatrix)> {
    margins(max_dim, max_total).prop_flat_map(move |p| {
        let (m, n) = (p.m(), p.n());
        (Just(p), weights_for(m, n, max_w))
    })
}

/// Positive real matrices with entries in `[0.1, 10]`.
pub fn positive_matrix(m: usize, n: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    proptest::collection::vec(proptest::collection::vec(0.1f64..10.0, n), m)
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}
