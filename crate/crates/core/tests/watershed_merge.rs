#![allow(clippy::needless_range_loop)]

mod common;

use common::{components, is_connected, merge_oracle, neighbors8, random_partition};
use gms::watershed::{classify_regions, merge_small_regions, watershed_from_markers};
use gms::{Error, GradientField, MarkerMap, Raster, SegmentMap, Units};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn field(w: usize, h: usize, v: Vec<f64>) -> GradientField<f64> {
    GradientField::new(Raster::new(w, h, v, Units::Dimensionless).unwrap()).unwrap()
}

/// Reference flood: linear scan for the smallest (value, sequence) entry.
fn flood_oracle(g: &[f64], markers: &[u32], w: usize, h: usize) -> Vec<u32> {
    let mut labels = markers.to_vec();
    let k = markers.iter().copied().max().unwrap_or(0);
    let mut queue: Vec<(f64, u64, usize)> = Vec::new();
    let mut seq = 0;
    for l in 1..=k {
        for p in 0..w * h {
            if markers[p] == l {
                queue.push((g[p], seq, p));
                seq += 1;
            }
        }
    }
    while !queue.is_empty() {
        let i = (0..queue.len())
            .min_by(|&a, &b| queue[a].0.total_cmp(&queue[b].0).then(queue[a].1.cmp(&queue[b].1)))
            .unwrap();
        let (_, _, p) = queue.swap_remove(i);
        for q in neighbors8(w, h, p) {
            if labels[q] == 0 {
                labels[q] = labels[p];
                queue.push((g[q], seq, q));
                seq += 1;
            }
        }
    }
    labels
}

fn random_case(rng: &mut impl Rng) -> (usize, usize, Vec<f64>, Vec<u32>) {
    loop {
        let (w, h) = (rng.random_range(1..=14), rng.random_range(1..=14));
        let g = common::random_field(rng, w, h, 6);
        let density = rng.random_range(0.02..0.3);
        let seeds: Vec<bool> = (0..w * h).map(|_| rng.random_bool(density)).collect();
        let m = components(&seeds, w, h);
        if m.iter().any(|&l| l > 0) {
            return (w, h, g, m);
        }
    }
}

#[test]
fn flood_matches_reference_and_partition_properties() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    for case in 0..200 {
        let (w, h, g, m) = random_case(&mut rng);
        let markers = MarkerMap::new(w, h, m.clone()).unwrap();
        let f = field(w, h, g.clone());
        let seg = watershed_from_markers(&f, &markers).unwrap();
        assert_eq!(seg.labels(), flood_oracle(&g, &m, w, h).as_slice(), "case {case}");
        assert!(seg.is_total());
        assert_eq!(seg.region_count(), markers.count());
        for p in 0..w * h {
            if m[p] != 0 {
                assert_eq!(seg.labels()[p], m[p]);
            }
        }
        for l in 1..=seg.region_count() {
            assert!(is_connected(seg.labels(), w, h, l), "case {case}, label {l}");
        }
        let again = watershed_from_markers(&f, &markers).unwrap();
        assert_eq!(seg, again);
    }
}

#[test]
fn tie_goes_to_first_queued_label() {
    let f = field(3, 1, vec![0.0, 5.0, 0.0]);
    let seg = watershed_from_markers(&f, &MarkerMap::new(3, 1, vec![1, 0, 2]).unwrap()).unwrap();
    assert_eq!(seg.labels(), &[1, 1, 2]);
}

#[test]
fn boundary_lies_on_the_ridge() {
    // Two flat basins separated by a ridge column; the label change must
    // happen at a ridge pixel.
    let (w, h) = (11, 7);
    let g: Vec<f64> = (0..w * h).map(|p| if p % w == 5 { 9.0 } else { 0.5 * ((p / w) % 2) as f64 }).collect();
    let mut m = vec![0; w * h];
    m[3 * w + 1] = 1;
    m[3 * w + 9] = 2;
    let seg = watershed_from_markers(&field(w, h, g.clone()), &MarkerMap::new(w, h, m).unwrap()).unwrap();
    for p in 0..w * h {
        for q in neighbors8(w, h, p) {
            if seg.labels()[p] != seg.labels()[q] {
                assert!(g[p].max(g[q]) >= 9.0);
            }
        }
    }
    assert!((0..w * h).filter(|p| p % w < 5).all(|p| seg.labels()[p] == 1));
    assert!((0..w * h).filter(|p| p % w > 5).all(|p| seg.labels()[p] == 2));
}

#[test]
fn empty_markers_and_shape_mismatch_are_errors() {
    let f = field(2, 2, vec![0.0; 4]);
    assert!(matches!(watershed_from_markers(&f, &MarkerMap::new(2, 2, vec![0; 4]).unwrap()), Err(Error::EmptyMarkers)));
    assert!(matches!(
        watershed_from_markers(&f, &MarkerMap::new(4, 1, vec![1; 4]).unwrap()),
        Err(Error::DimensionMismatch(_))
    ));
}

#[test]
fn merge_matches_oracle_on_random_partitions() {
    let mut rng = ChaCha8Rng::seed_from_u64(32);
    for case in 0..300 {
        let (w, h) = (rng.random_range(1..=14), rng.random_range(1..=14));
        let k = rng.random_range(1..=12);
        let mut lab = random_partition(&mut rng, w, h, k);
        if case % 2 == 1 {
            // clear some regions so label 0 takes part
            let drop = rng.random_range(1..=k as u32);
            lab.iter_mut().filter(|l| **l == drop).for_each(|l| *l = 0);
            let present: std::collections::BTreeSet<u32> = lab.iter().copied().filter(|&l| l != 0).collect();
            let map: std::collections::BTreeMap<u32, u32> = present.into_iter().zip(1..).collect();
            lab.iter_mut().filter(|l| **l != 0).for_each(|l| *l = map[l]);
        }
        let seg = SegmentMap::new(w, h, lab.clone()).unwrap();
        let min_area = rng.random_range(1..=20);
        let merged = merge_small_regions(&seg, min_area);
        assert_eq!(merged.labels(), merge_oracle(&lab, w, h, min_area).as_slice(), "case {case}");

        // postconditions
        let areas = merged.areas();
        let labelled = merged.labels().iter().filter(|&&l| l != 0).count();
        for l in 1..=merged.region_count() as usize {
            assert!(areas[l] >= min_area || areas[l] == labelled, "case {case}");
        }
        for p in 0..w * h {
            for q in 0..w * h {
                if lab[p] == lab[q] {
                    assert_eq!(merged.labels()[p], merged.labels()[q]);
                }
            }
            if lab[p] == 0 {
                assert_eq!(merged.labels()[p], 0);
            }
        }
    }
}

#[test]
fn merge_with_min_area_one_is_identity() {
    let mut rng = ChaCha8Rng::seed_from_u64(33);
    for _ in 0..50 {
        let lab = random_partition(&mut rng, 9, 7, 6);
        let seg = SegmentMap::new(9, 7, lab).unwrap();
        assert_eq!(merge_small_regions(&seg, 1), seg);
    }
}

#[test]
fn small_region_touching_one_neighbor_is_absorbed() {
    #[rustfmt::skip]
    let lab = vec![
        1, 1, 1, 3, 3,
        1, 2, 1, 3, 3,
        1, 2, 1, 3, 3,
    ];
    let merged = merge_small_regions(&SegmentMap::new(5, 3, lab).unwrap(), 5);
    assert_eq!(merged.region_count(), 2);
    assert_eq!(merged.labels()[6], 1);
    assert_eq!(merged.labels()[3], 2);
}

#[test]
fn classification_by_mean_brightness_temperature() {
    let seg = SegmentMap::new(4, 1, vec![1, 1, 2, 2]).unwrap();
    let bt = Raster::new(4, 1, vec![290.0, 290.0, 255.0, 265.0], Units::Kelvin).unwrap();
    let g = field(4, 1, vec![0.0, 1.0, 2.0, 3.0]);
    let (mask, stats) = classify_regions(&seg, &bt, &g, 280.0).unwrap();
    assert_eq!(mask.flags(), &[false, false, true, true]);
    assert_eq!(stats[1].mean_bt, 260.0);
    assert_eq!(stats[1].min_bt, 255.0);
    assert_eq!(stats[1].mean_gradient, 2.5);
    let (none, _) = classify_regions(&seg, &bt, &g, 0.0).unwrap();
    assert_eq!(none.cloudy_count(), 0);
}

proptest! {
    #[test]
    fn region_stats_are_consistent(seed in any::<u64>(), cutoff in 200.0f64..300.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (w, h) = (rng.random_range(1..=10), rng.random_range(1..=10));
        let k = rng.random_range(1..=5);
        let lab = random_partition(&mut rng, w, h, k);
        let seg = SegmentMap::new(w, h, lab).unwrap();
        let bt = Raster::new(w, h, (0..w * h).map(|_| rng.random_range(190.0..300.0)).collect(), Units::Kelvin).unwrap();
        let g = field(w, h, vec![0.0; w * h]);
        let (mask, stats) = classify_regions(&seg, &bt, &g, cutoff).unwrap();
        prop_assert_eq!(stats.len(), seg.region_count() as usize);
        for s in &stats {
            prop_assert!(s.area >= 1);
            prop_assert!(s.min_bt <= s.mean_bt);
            prop_assert_eq!(s.is_cloud, s.mean_bt < cutoff);
        }
        for (p, &flag) in mask.flags().iter().enumerate() {
            prop_assert_eq!(flag, stats[seg.labels()[p] as usize - 1].is_cloud);
        }
    }
}
