#![allow(clippy::needless_range_loop)]

mod common;

use gms::markers::{generate_markers, otsu_threshold};
use gms::{Error, GradientField, Raster, Units};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn field(w: usize, h: usize, v: Vec<f64>) -> GradientField<f64> {
    GradientField::new(Raster::new(w, h, v, Units::Dimensionless).unwrap()).unwrap()
}

/// Scans every interior bin edge, classifying each pixel directly against
/// the edge and binning it by counting the edges strictly below it.
fn exhaustive(values: &[f64], bins: usize) -> Option<(usize, f64, f64)> {
    let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let width = (max - min) / bins as f64;
    let edges: Vec<f64> = (1..bins).map(|k| min + k as f64 * width).collect();
    let bin_of = |v: f64| edges.iter().filter(|&&e| e < v).count() as u64;
    let total = values.len() as f64;
    let mut best: Option<(usize, f64, f64)> = None;
    for k in 1..bins {
        let e = edges[k - 1];
        let (mut n0, mut s0, mut n1, mut s1) = (0u64, 0u64, 0u64, 0u64);
        for &v in values {
            if v <= e {
                n0 += 1;
                s0 += bin_of(v);
            } else {
                n1 += 1;
                s1 += bin_of(v);
            }
        }
        if n0 == 0 || n1 == 0 {
            continue;
        }
        let d = s0 as f64 / n0 as f64 - s1 as f64 / n1 as f64;
        let var = (n0 as f64 / total) * (n1 as f64 / total) * d * d * width * width;
        if best.is_none_or(|(_, _, b)| var > b) {
            best = Some((k, e, var));
        }
    }
    best
}

#[test]
fn otsu_equals_exhaustive_edge_search() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let mut checked = 0;
    for case in 0..150 {
        let (w, h) = (rng.random_range(2..=24), rng.random_range(2..=24));
        let v: Vec<f64> = match case % 3 {
            0 => (0..w * h).map(|_| rng.random_range(0.0..40.0)).collect(),
            1 => common::random_field(&mut rng, w, h, 9),
            _ => (0..w * h)
                .map(|_| if rng.random_bool(0.7) { rng.random_range(0.0..2.0) } else { rng.random_range(15.0..30.0) })
                .collect(),
        };
        let bins = [2, 7, 64, 256][case % 4];
        let f = field(w, h, v.clone());
        match (otsu_threshold(&f, bins), exhaustive(&v, bins)) {
            (Ok(got), Some((k, e, var))) => {
                assert_eq!(got.low_bins, k, "case {case}");
                assert_eq!(got.threshold, e, "case {case}");
                assert!((got.between_class_variance - var).abs() <= 1e-12, "case {case}");
                checked += 1;
            }
            (Err(Error::ConstantField(_)), None) => {}
            (got, want) => panic!("case {case}: {got:?} vs {want:?}"),
        }
    }
    assert!(checked >= 100);
}

#[test]
fn two_level_field_splits_between_levels() {
    let v: Vec<f64> = (0..100).map(|i| if i < 50 { 0.0 } else { 10.0 }).collect();
    let o = otsu_threshold(&field(10, 10, v), 256).unwrap();
    assert!(o.threshold > 0.0 && o.threshold < 10.0);
    assert_eq!(o.low_bins, 1);
}

#[test]
fn ring_splits_interior_into_two_markers() {
    // A vertical high-gradient wall divides a zero field into two halves.
    let (w, h) = (9, 6);
    let v: Vec<f64> = (0..w * h).map(|p| if p % w == 4 { 10.0 } else { 0.0 }).collect();
    let f = field(w, h, v);
    let o = otsu_threshold(&f, 256).unwrap();
    let m = generate_markers(&f, &o, 1).unwrap();
    assert_eq!(m.count(), 2);
    assert_eq!(m.labels()[0], 1);
    assert_eq!(m.labels()[8], 2);
}

#[test]
fn all_components_too_small_is_a_distinct_error() {
    let v = vec![0.0, 5.0, 5.0, 5.0, 5.0, 5.0, 5.0, 5.0, 5.0];
    let f = field(3, 3, v);
    let o = otsu_threshold(&f, 256).unwrap();
    match generate_markers(&f, &o, 2) {
        Err(Error::NoMarkers { min_seed_area: 2, largest: 1 }) => {}
        other => panic!("{other:?}"),
    }
}

fn arb_field() -> impl Strategy<Value = (usize, usize, Vec<f64>)> {
    (2usize..=14, 2usize..=14).prop_flat_map(|(w, h)| {
        (Just(w), Just(h), prop::collection::vec(prop_oneof![Just(0.0f64), 0.0f64..20.0, Just(20.0)], w * h))
    })
}

proptest! {
    #[test]
    fn threshold_within_range_and_both_classes_nonempty((w, h, v) in arb_field(), bins in 2usize..300) {
        let f = field(w, h, v.clone());
        if let Ok(o) = otsu_threshold(&f, bins) {
            let lo = v.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            prop_assert!(lo <= o.threshold && o.threshold <= hi);
            prop_assert!(v.iter().any(|&x| x <= o.threshold));
            prop_assert!(v.iter().any(|&x| x > o.threshold));
            prop_assert!(o.between_class_variance >= 0.0);
        }
    }

    #[test]
    fn markers_respect_threshold_and_components((w, h, v) in arb_field(), min_seed_area in 1usize..6) {
        let f = field(w, h, v.clone());
        let Ok(o) = otsu_threshold(&f, 64) else { return Ok(()) };
        let low: Vec<bool> = v.iter().map(|&x| x <= o.threshold).collect();
        let comps = common::components(&low, w, h);
        let mut sizes = vec![0usize; comps.iter().copied().max().unwrap_or(0) as usize + 1];
        for &c in &comps {
            sizes[c as usize] += 1;
        }
        let kept: Vec<u32> = (1..sizes.len() as u32).filter(|&c| sizes[c as usize] >= min_seed_area).collect();
        match generate_markers(&f, &o, min_seed_area) {
            Ok(m) => {
                prop_assert_eq!(m.count() as usize, kept.len());
                for p in 0..w * h {
                    let expect = kept.iter().position(|&c| c == comps[p]).map_or(0, |i| i as u32 + 1);
                    prop_assert_eq!(m.labels()[p], expect);
                }
                if min_seed_area == 1 {
                    prop_assert_eq!(m.seed_pixel_count(), low.iter().filter(|&&b| b).count());
                }
            }
            Err(Error::NoMarkers { .. }) => prop_assert!(kept.is_empty()),
            Err(e) => prop_assert!(false, "{}", e),
        }
    }
}
