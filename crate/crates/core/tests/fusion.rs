mod common;

use common::{distribution, oracle_fuse, oracle_jsd};
use proptest::prelude::*;
use wayfind::fusion::{fuse, fuse_detailed, jsd, macro_decide, SourceMatrix, DEFAULT_EPSILON};

fn rows_strategy() -> impl Strategy<Value = Vec<Vec<f64>>> {
    (2usize..=5, 2usize..=6).prop_flat_map(|(n, m)| {
        prop::collection::vec(prop::collection::vec(0.0f64..1.0, m), n).prop_filter_map("all-zero row", |raw| {
            raw.iter()
                .map(|r| {
                    let s: f64 = r.iter().sum();
                    (s > 1e-6).then(|| r.iter().map(|x| x / s).collect::<Vec<f64>>())
                })
                .collect()
        })
    })
}

fn matrix(rows: &[Vec<f64>]) -> SourceMatrix {
    SourceMatrix::new(rows.iter().map(|r| distribution(r)).collect()).unwrap()
}

proptest! {
    #[test]
    fn fuse_matches_straight_line_oracle(rows in rows_strategy()) {
        let got = fuse(&matrix(&rows), DEFAULT_EPSILON).unwrap();
        let expected = oracle_fuse(&rows, DEFAULT_EPSILON);
        let scale = expected.iter().fold(0.0f64, |a, x| a.max(x.abs())).max(1e-300);
        for (g, e) in got.as_slice().iter().zip(&expected) {
            prop_assert!((g - e).abs() / scale <= 1e-12, "{g} vs {e}");
        }
    }

    #[test]
    fn jsd_matches_oracle(rows in rows_strategy()) {
        let (p, q) = (distribution(&rows[0]), distribution(&rows[1]));
        prop_assert!((jsd(&p, &q) - oracle_jsd(&rows[0], &rows[1])).abs() <= 1e-12);
    }
}

#[test]
fn identical_confident_sources_reach_full_confidence() {
    let rows = vec![vec![1.0, 0.0], vec![1.0, 0.0], vec![1.0, 0.0]];
    let g = fuse(&matrix(&rows), DEFAULT_EPSILON).unwrap();
    assert_eq!(g.as_slice(), &[1.0, 0.0]);
    assert_eq!(macro_decide(&g, 1.0).route(), Some(0));
}

#[test]
fn disjoint_point_masses_cancel_out() {
    // every pair diverges by exactly one bit, so overall agreement is zero
    let rows = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
    let b = fuse_detailed(&matrix(&rows), DEFAULT_EPSILON).unwrap();
    assert_eq!(b.avg_jsd, vec![1.0, 1.0]);
    assert!(b.confidence.as_slice().iter().all(|&g| g == 0.0));
    assert!(macro_decide(&b.confidence, 0.5).is_none());
}

#[test]
fn threshold_gates_the_decision() {
    let rows = vec![vec![0.7, 0.3], vec![0.6, 0.4], vec![0.65, 0.35]];
    let g = fuse(&matrix(&rows), DEFAULT_EPSILON).unwrap();
    let top = g.max();
    assert_eq!(macro_decide(&g, top).route(), Some(0));
    assert!(macro_decide(&g, top + 1e-9).is_none());
}
