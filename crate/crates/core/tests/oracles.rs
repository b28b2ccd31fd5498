mod common;

use proptest::prelude::*;

use ol2r::gradient::{null_space, DirectionMatrix, NULL_SPACE_TOL};
use ol2r::metrics::{cumulative_ndcg, eval_clicked, ndcg_at_k};
use ol2r::ranking::norm;

use common::{brute_force_ndcg, gram_schmidt_complement, projection_residual};

fn grades() -> impl Strategy<Value = (Vec<u8>, Vec<u8>)> {
    prop::collection::vec(0u8..=2, 1..=6).prop_flat_map(|all| {
        let ranked = Just(all.clone()).prop_shuffle();
        (ranked, Just(all))
    })
}

fn direction_rows() -> impl Strategy<Value = (usize, Vec<Vec<f64>>)> {
    (1usize..=12).prop_flat_map(|d| {
        let row = prop::collection::vec(-3.0f64..3.0, d);
        (Just(d), prop::collection::vec(row, 1..=10))
    })
}

proptest! {
    #[test]
    fn ndcg_matches_brute_force((ranked, all) in grades(), k in 1usize..8) {
        let got = ndcg_at_k(&ranked, &all, k);
        prop_assert!((got - brute_force_ndcg(&ranked, &all, k)).abs() <= 1e-9);
    }

    #[test]
    fn null_space_matches_gram_schmidt((d, rows) in direction_rows()) {
        prop_assume!(rows.iter().all(|r| norm(r) > 1e-3));
        let oracle = gram_schmidt_complement(&rows, d);
        let ours = null_space(&DirectionMatrix::new(d, rows), NULL_SPACE_TOL)
            .map(|b| b.vectors().to_vec())
            .unwrap_or_default();
        prop_assert_eq!(ours.len(), oracle.len());
        for v in &ours {
            prop_assert!(projection_residual(v, &oracle) <= 1e-9);
        }
        for v in &oracle {
            prop_assert!(projection_residual(v, &ours) <= 1e-9);
        }
    }

    #[test]
    fn cumulative_matches_geometric_sum(c in 0.0f64..=1.0, t in 0usize..2000, gamma in 0.9f64..1.0) {
        let want = c * (1.0 - gamma.powi(t as i32)) / (1.0 - gamma);
        prop_assert!((cumulative_ndcg(&vec![c; t], gamma) - want).abs() <= 1e-9 * (1.0 + want));
    }

    #[test]
    fn eval_clicked_is_binary_ndcg(
        ranked in Just((0..12usize).collect::<Vec<_>>()).prop_shuffle(),
        clicked in prop::collection::btree_set(0usize..12, 0..6),
    ) {
        let clicked: Vec<usize> = clicked.into_iter().collect();
        // doc i has grade 1 when clicked; 2^1 - 1 = 1 matches the binary gain
        let label = |d: &usize| clicked.contains(d) as u8;
        let ranked_grades: Vec<u8> = ranked.iter().map(label).collect();
        let all: Vec<u8> = (0..12).map(|d| label(&d)).collect();
        let want = ndcg_at_k(&ranked_grades, &all, 10);
        prop_assert!((eval_clicked(&ranked, &clicked, 10) - want).abs() <= 1e-12);
    }
}

#[test]
fn full_rank_rows_have_no_complement() {
    let rows = vec![vec![1.0, 2.0], vec![-1.0, 0.5], vec![3.0, 1.0]];
    assert!(gram_schmidt_complement(&rows, 2).is_empty());
    assert!(null_space(&DirectionMatrix::new(2, rows), NULL_SPACE_TOL).is_err());
}
