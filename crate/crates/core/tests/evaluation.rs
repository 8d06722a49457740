use odsg::evaluation::{
    aggregate, binarize, evaluate_detection, iof, rasterize_polygons, split_thirds, BinarizeConfig, BinaryMask,
    CocoDataset, GroundTruthInstance,
};
use odsg::synthetic::{generate_suite, SceneSpec};
use odsg::{detect, odsmoothgrad_for, SmoothGradConfig, SoftMomentDetector};
use proptest::prelude::*;

fn mask_strategy() -> impl Strategy<Value = BinaryMask> {
    proptest::collection::vec(any::<bool>(), 16 * 16).prop_map(|bits| BinaryMask::from_bits(16, 16, bits).unwrap())
}

proptest! {
    #[test]
    fn iof_is_a_fraction(fg in mask_strategy(), region in mask_strategy()) {
        prop_assume!(!fg.is_empty());
        let v = iof(&fg, &region).unwrap();
        prop_assert!((0.0..=1.0).contains(&v));
        prop_assert_eq!(iof(&fg, &BinaryMask::full(16, 16)).unwrap(), 1.0);
    }

    #[test]
    fn iof_grows_with_the_region(fg in mask_strategy(), a in mask_strategy(), b in mask_strategy()) {
        prop_assume!(!fg.is_empty());
        let superset = a.or(&b).unwrap();
        prop_assert!(iof(&fg, &superset).unwrap() >= iof(&fg, &a).unwrap());
    }

    #[test]
    fn rectangles_rasterize_to_their_area(x0 in 0u32..20, y0 in 0u32..20, w in 1u32..12, h in 1u32..12) {
        let gt = GroundTruthInstance::rectangle(
            1, 0, x0 as f64, y0 as f64, (x0 + w) as f64, (y0 + h) as f64,
        ).unwrap();
        let mask = rasterize_polygons(&gt, 32, 32).unwrap();
        prop_assert_eq!(mask.count(), (w * h) as usize);
        let t = split_thirds(&mask, &gt.bbox).unwrap();
        prop_assert_eq!(t.left.count() + t.mid_x.count() + t.right.count(), mask.count());
        prop_assert_eq!(t.top.count() + t.mid_y.count() + t.bottom.count(), mask.count());
    }
}

#[test]
fn suite_annotations_round_trip() {
    let tmp = tempfile::tempdir().unwrap();
    let scenes = generate_suite(&SceneSpec::default(), 100, 3, tmp.path()).unwrap();
    let ds = CocoDataset::load(tmp.path().join("annotations.json")).unwrap();
    let gt = ds.ground_truth().unwrap();
    for (k, (_, want)) in scenes.iter().enumerate() {
        assert_eq!(&gt[&(100 + k as u64)], want);
    }
}

#[test]
fn localized_edges_beat_the_middle_on_a_small_suite() {
    let tmp = tempfile::tempdir().unwrap();
    let scenes = generate_suite(&SceneSpec::default(), 60, 4, tmp.path()).unwrap();
    let det = SoftMomentDetector::default();
    let cfg = SmoothGradConfig {
        n_samples: 6,
        ..Default::default()
    };
    let mut records = Vec::new();
    for (k, (image, gts)) in scenes.iter().enumerate() {
        let dets = detect(&det, image).unwrap();
        let pairs = odsg::evaluation::match_to_gt(&dets, gts, 0.9, 0.5);
        let matched: Vec<_> = pairs.iter().map(|(d, _)| (*d).clone()).collect();
        let maps = odsmoothgrad_for(&det, image, &matched, &cfg).unwrap();
        for (ds, (_, gt)) in maps.iter().zip(&pairs) {
            let rec = evaluate_detection(k as u64, ds, gt, &BinarizeConfig::default(), image.height(), image.width()).unwrap();
            let bin = binarize(ds.map(odsg::SaliencyTarget::Cls).unwrap(), &BinarizeConfig::default());
            assert!(!bin.degenerate);
            records.push(rec);
        }
    }
    let stats = aggregate(&records);
    assert_eq!(stats.record_count, records.len());
    let median = |k: &str| stats.fields[k].median.unwrap();
    assert!(median("xmin_left") > median("xmin_mid_x"));
    assert!(median("ymax_bottom") > median("ymax_mid_y"));
    assert!(stats.pooled_target.median.unwrap() > stats.pooled_background.median.unwrap());
    assert_eq!(stats.pooled_target.count, 4 * records.len());
}
