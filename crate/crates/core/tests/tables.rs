mod common;

use common::*;
use flowtab_core::tables::{count_bruteforce, count_exact, enumerate_tables, CountLimits};
use flowtab_core::{BigRational, MarginPair, Matrix, WeightMatrix};
use proptest::prelude::*;

fn exact(p: &MarginPair, w: &WeightMatrix) -> BigRational {
    count_exact(p, w, &CountLimits::default()).unwrap().count
}

fn permute_weights(w: &WeightMatrix, rows: &[usize], cols: &[usize]) -> WeightMatrix {
    WeightMatrix::new(Matrix::from_fn(rows.len(), cols.len(), |i, j| {
        w.get(rows[i], cols[j]).clone()
    }))
    .unwrap()
}

fn fixture(r: &[u64], c: &[u64], w: Option<&[&[i64]]>) -> BigRational {
    let p = pair(r, c);
    let w = match w {
        Some(rows) => WeightMatrix::from_integers(rows).unwrap(),
        None => WeightMatrix::ones(r.len(), c.len()),
    };
    let dp = exact(&p, &w);
    assert_eq!(dp, count_bruteforce(&p, &w, &CountLimits::default()).unwrap().count);
    dp
}

#[test]
fn fixtures_match_oracle() {
    assert_eq!(fixture(&[1, 1], &[1, 1], None), int(2));
    assert_eq!(fixture(&[2, 2], &[2, 2], None), int(3));
    assert_eq!(fixture(&[2, 2, 2], &[2, 2, 2], None), int(21));
    assert_eq!(fixture(&[1, 1], &[1, 1], Some(&[&[2, 1], &[1, 1]])), int(3));
    assert_eq!(fixture(&[1, 1], &[1, 1], Some(&[&[1, 0], &[0, 1]])), int(1));
    assert_eq!(fixture(&[3], &[1, 2], None), int(1));
}

#[test]
fn ehrhart_polynomial_in_dilation() {
    // T(tR, tC; 1) is a polynomial of degree (m-1)(n-1) in t.
    for (r, c) in [
        (vec![1u64, 2], vec![2u64, 1]),
        (vec![1, 1, 1], vec![2, 1]),
        (vec![2, 1, 1], vec![1, 2, 1]),
    ] {
        let p = pair(&r, &c);
        let degree = (p.m() - 1) * (p.n() - 1);
        let ones = WeightMatrix::ones(p.m(), p.n());
        let mut values: Vec<BigRational> =
            (1..=degree as u64 + 3).map(|t| exact(&p.scaled(t), &ones)).collect();
        for _ in 0..=degree {
            values = values.windows(2).map(|w| &w[1] - &w[0]).collect();
        }
        assert!(values.iter().all(|v| *v == int(0)), "{r:?} {c:?}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn dp_matches_oracle((p, w) in instance(4, 8, 3)) {
        let limits = CountLimits::default();
        let dp = count_exact(&p, &w, &limits).unwrap().count;
        let brute = count_bruteforce(&p, &w, &limits).unwrap().count;
        prop_assert_eq!(dp, brute);
    }

    #[test]
    fn transpose_invariant((p, w) in instance(4, 8, 3)) {
        prop_assert_eq!(exact(&p, &w), exact(&p.transposed(), &w.transpose()));
    }

    #[test]
    fn permutation_invariant(
        (p, w, rs, cs) in instance(4, 8, 3).prop_flat_map(|(p, w)| {
            let (m, n) = (p.m(), p.n());
            (
                Just(p),
                Just(w),
                Just((0..m).collect::<Vec<_>>()).prop_shuffle(),
                Just((0..n).collect::<Vec<_>>()).prop_shuffle(),
            )
        })
    ) {
        let r: Vec<u64> = rs.iter().map(|&i| p.rows().entries()[i]).collect();
        let c: Vec<u64> = cs.iter().map(|&j| p.cols().entries()[j]).collect();
        let q = MarginPair::new(r, c).unwrap();
        prop_assert_eq!(exact(&p, &w), exact(&q, &permute_weights(&w, &rs, &cs)));
    }

    #[test]
    fn monotone_in_weights((p, w) in instance(3, 7, 2), bump in (0usize..9)) {
        let (i, j) = (bump / 3 % p.m(), bump % 3 % p.n());
        let bigger = WeightMatrix::new(Matrix::from_fn(p.m(), p.n(), |a, b| {
            let x = w.get(a, b).clone();
            if (a, b) == (i, j) { x + int(1) } else { x }
        })).unwrap();
        prop_assert!(exact(&p, &bigger) >= exact(&p, &w));
    }

    #[test]
    fn homogeneous_in_weights((p, w) in instance(3, 7, 3), t in 1i64..4) {
        let scaled = WeightMatrix::new(w.matrix().map(|x| x * int(t))).unwrap();
        let factor = int(t).pow(p.total() as i32);
        prop_assert_eq!(exact(&p, &scaled), exact(&p, &w) * factor);
    }

    #[test]
    fn enumeration_is_valid_and_distinct((p, w) in instance(3, 7, 1)) {
        let tables: Vec<_> = enumerate_tables(&p, &w, &CountLimits::default()).unwrap().collect();
        for t in &tables {
            prop_assert_eq!(&t.row_sums(), p.rows().entries());
            prop_assert_eq!(&t.col_sums(), p.cols().entries());
            for (i, row) in t.rows().iter().enumerate() {
                for (j, &d) in row.iter().enumerate() {
                    prop_assert!(d == 0 || w.is_allowed(i, j));
                }
            }
        }
        let flat: Vec<Vec<u64>> = tables.iter().map(|t| t.rows().concat()).collect();
        prop_assert!(flat.windows(2).all(|x| x[0] > x[1]));
    }
}
