//! Metrics on a three-user fixture traced by hand. The durations passed to
//! the fixture are `(4, 2)` unless stated otherwise.

use demandrec::data::Triplet;
use demandrec::eval::{
    category_prediction_metric, item_prediction_metric, item_sample, time_prediction_metric,
    ScoreQuery, Scorer,
};
use demandrec::{DurationVector, FactoredUtilityMatrix, ModelState, SolverConfig};
use nalgebra::DMatrix;
use proptest::prelude::*;

mod common;
use common::metric_fixture as fixture;

#[test]
fn scores_subtract_the_time_penalty() {
    let (model, cats, rec, _) = fixture([4.0, 2.0]);
    let s = Scorer::new(&model, &cats, &rec).unwrap();
    // user 0 at slot 4: category 0 last bought at slot 2, penalty 4 - 2 = 2
    let v = s
        .score(ScoreQuery {
            user: 0,
            item: 1,
            slot: 4,
        })
        .unwrap();
    assert!((v - (0.8 - 2.0)).abs() < 1e-12);
    assert!(!s
        .predict_demand(
            ScoreQuery {
                user: 0,
                item: 1,
                slot: 4
            },
            0.0
        )
        .unwrap());
    assert!(s
        .predict_demand(
            ScoreQuery {
                user: 0,
                item: 2,
                slot: 4
            },
            0.0
        )
        .unwrap());
    // slot past the training horizon
    let v = s
        .score(ScoreQuery {
            user: 0,
            item: 0,
            slot: 40,
        })
        .unwrap();
    assert!((v - 0.9).abs() < 1e-12);
    assert!(s
        .score(ScoreQuery {
            user: 3,
            item: 0,
            slot: 0
        })
        .is_err());
}

#[test]
fn top_n_orders_by_score() {
    let (model, cats, rec, _) = fixture([4.0, 2.0]);
    let s = Scorer::new(&model, &cats, &rec).unwrap();
    let top: Vec<u32> = s
        .recommend_topn(0, 4, 4)
        .unwrap()
        .iter()
        .map(|p| p.0)
        .collect();
    assert_eq!(top, vec![2, 3, 0, 1]);
    let top: Vec<u32> = s
        .recommend_topn(2, 8, 2)
        .unwrap()
        .iter()
        .map(|p| p.0)
        .collect();
    assert_eq!(top, vec![3, 0]);
    assert!(s.recommend_topn(0, 0, 5).is_err());
}

#[test]
fn category_metric_hand_trace() {
    let (model, cats, rec, test) = fixture([4.0, 2.0]);
    let s = Scorer::new(&model, &cats, &rec).unwrap();
    let m = category_prediction_metric(&s, &test).unwrap();
    // best in-category ranks: 3 (item 0 behind items 2, 3), 3, 2
    assert_eq!(m.raw, vec![3.0, 3.0, 2.0]);
    assert_eq!(m.percent, (3.0 + 3.0 + 2.0) / 3.0 / 4.0 * 100.0);
}

#[test]
fn time_metric_hand_trace() {
    let (model, cats, rec, test) = fixture([4.0, 2.0]);
    let s = Scorer::new(&model, &cats, &rec).unwrap();
    let m = time_prediction_metric(&s, &test, 0.0).unwrap();
    // user 0: predicted at slots <= 2 and >= 6, test slot 4 -> 2
    // user 1: predicted at slots <= 5 and >= 7, test slot 6 -> 1
    // user 2: predicted at slot 8 -> 0
    assert_eq!(m.raw, vec![2.0, 1.0, 0.0]);
    assert_eq!(m.percent, (2.0 + 1.0 + 0.0) / 3.0 / 10.0 * 100.0);

    // no predicted slot at all: error is l
    let m = time_prediction_metric(&s, &test, 5.0).unwrap();
    assert_eq!(m.raw, vec![10.0, 10.0, 10.0]);
    assert_eq!(m.percent, 100.0);
}

#[test]
fn time_metric_without_durations_predicts_everywhere() {
    let (model, cats, rec, test) = fixture([0.0, 0.0]);
    let s = Scorer::new(&model, &cats, &rec).unwrap();
    assert_eq!(time_prediction_metric(&s, &test, 0.0).unwrap().percent, 0.0);
}

#[test]
fn item_metric_hand_trace() {
    let (model, cats, rec, test) = fixture([4.0, 2.0]);
    let s = Scorer::new(&model, &cats, &rec).unwrap();
    let m = item_prediction_metric(&s, &test, 4, 0).unwrap();
    assert_eq!(m.raw, vec![4.0, 4.0, 2.0]);
    assert_eq!(m.percent, (4.0 + 4.0 + 2.0) / 3.0 / 4.0 * 100.0);
    // a sample of one ranks the item against itself only
    assert_eq!(
        item_prediction_metric(&s, &test, 1, 0).unwrap().percent,
        100.0
    );
}

#[test]
fn oracle_model_scores_category_rank_one() {
    let (_, cats, rec, test) = fixture([0.0, 0.0]);
    let mut x = DMatrix::zeros(3, 4);
    for t in &test {
        x[(t.user as usize, t.item as usize)] = 1.0;
    }
    let model = ModelState {
        x: FactoredUtilityMatrix::from_dense(&x),
        d: DurationVector::zeros(2),
        objective_history: vec![],
        iteration: 0,
        config: SolverConfig::default(),
        num_slots: 10,
    };
    let s = Scorer::new(&model, &cats, &rec).unwrap();
    assert_eq!(
        category_prediction_metric(&s, &test).unwrap().percent,
        100.0 / 4.0
    );
}

#[test]
fn sampled_item_metric_is_reproducible() {
    let (model, cats, rec, test) = fixture([4.0, 2.0]);
    let s = Scorer::new(&model, &cats, &rec).unwrap();
    let a = item_prediction_metric(&s, &test, 3, 11).unwrap();
    let b = item_prediction_metric(&s, &test, 3, 11).unwrap();
    assert_eq!(a, b);
    // enumerate each sampled set by hand
    for (idx, t) in test.iter().enumerate() {
        let set = item_sample(4, t.item, 3, 11, idx);
        let scores = s.user_scores(t.user, t.slot).unwrap();
        let own = scores[t.item as usize];
        let rank = 1 + set
            .iter()
            .filter(|&&j| {
                j != t.item
                    && (scores[j as usize] > own || (scores[j as usize] == own && j < t.item))
            })
            .count();
        assert_eq!(a.raw[idx], rank as f64);
    }
}

proptest! {
    #[test]
    fn full_sample_equals_exhaustive_rank(seed in 0u64..200, user in 0u32..3, item in 0u32..4, slot in 0u32..10) {
        let (model, cats, rec, _) = fixture([(seed % 7) as f64, (seed % 3) as f64]);
        let s = Scorer::new(&model, &cats, &rec).unwrap();
        let test = [Triplet::new(user, item, slot)];
        let m = item_prediction_metric(&s, &test, 4, seed).unwrap();
        let topn = s.recommend_topn(user, slot, 4).unwrap();
        let pos = topn.iter().position(|p| p.0 == item).unwrap() + 1;
        prop_assert_eq!(m.raw[0], pos as f64);
    }

    #[test]
    fn durations_never_lower_time_error(d0 in 0.0f64..9.0, d1 in 0.0f64..9.0, tau in 0.0f64..0.5) {
        let (model, cats, rec, test) = fixture([d0, d1]);
        let (zero, ..) = fixture([0.0, 0.0]);
        let with_d = time_prediction_metric(&Scorer::new(&model, &cats, &rec).unwrap(), &test, tau).unwrap();
        let without = time_prediction_metric(&Scorer::new(&zero, &cats, &rec).unwrap(), &test, tau).unwrap();
        prop_assert!(with_d.percent >= without.percent);
    }
}
