use framesel_core::model::{
    default_branch_specs, filter_annotations, map_box_to_branch, BoundingBox, BranchSpec,
};
use proptest::prelude::*;

fn boxes() -> impl Strategy<Value = Vec<BoundingBox>> {
    prop::collection::vec((1.0f64..300.0, 1.0f64..300.0), 0..30).prop_map(|v| {
        v.into_iter()
            .map(|(w, h)| BoundingBox::new(0.0, 0.0, w, h, "pedestrian").unwrap())
            .collect()
    })
}

proptest! {
    #[test]
    fn filter_is_idempotent(b in boxes()) {
        let once = filter_annotations(&b, 50.0, 0.2, 0.65);
        prop_assert_eq!(filter_annotations(&once, 50.0, 0.2, 0.65), once.clone());
        for kept in &once {
            prop_assert!(kept.h >= 50.0);
            prop_assert!((0.2..=0.65).contains(&(kept.w / kept.h)));
        }
    }

    #[test]
    fn branch_mapping_permutation_invariant(w in 1.0f64..300.0, h in 1.0f64..300.0, seed in any::<u64>()) {
        let specs = default_branch_specs();
        let b = BoundingBox::new(0.0, 0.0, w, h, "p").unwrap();
        let expected = map_box_to_branch(&b, &specs);
        let mut shuffled: Vec<BranchSpec> = specs.clone();
        let n = shuffled.len();
        for i in 0..n {
            let j = (seed.rotate_left(i as u32 * 7) as usize) % n;
            shuffled.swap(i, j);
        }
        prop_assert_eq!(map_box_to_branch(&b, &shuffled), expected);

        // Exhaustive nearest-size check.
        let best = specs
            .iter()
            .map(|s| ((h - s.box_height).powi(2) + (w - s.box_width).powi(2), s.branch_index))
            .fold((f64::INFINITY, 0), |acc, x| if x.0 < acc.0 { x } else { acc });
        prop_assert_eq!(expected, best.1);
    }
}
