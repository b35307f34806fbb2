//! Marker-controlled watershed flooding of a gradient field, small-region
//! merging and cloud/clear classification of the resulting regions.

use std::cmp::{Ordering, Reverse};
use std::collections::{BTreeMap, BinaryHeap};

use crate::error::{Error, Result};
use crate::grid::{for_each_neighbor8, CloudMask, MarkerMap, Raster2D, SegmentMap};
use crate::morphology::GradientField;
use crate::scalar::{total_cmp, Scalar};

pub const DEFAULT_CLEAR_SKY_CUTOFF: f64 = 280.0;

/// Queue entry ordered by (priority, insertion sequence).
#[derive(Debug, Clone, Copy)]
pub(crate) struct FloodEntry<T> {
    pub priority: T,
    pub seq: u64,
    pub pixel: usize,
    pub label: u32,
}

impl<T: Scalar> PartialEq for FloodEntry<T> {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl<T: Scalar> Eq for FloodEntry<T> {}

impl<T: Scalar> PartialOrd for FloodEntry<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<T: Scalar> Ord for FloodEntry<T> {
    fn cmp(&self, other: &Self) -> Ordering {
        total_cmp(self.priority, other.priority).then(self.seq.cmp(&other.seq))
    }
}

/// Min-queue on (priority, FIFO sequence).
pub(crate) struct FloodQueue<T> {
    heap: BinaryHeap<Reverse<FloodEntry<T>>>,
    seq: u64,
}

impl<T: Scalar> FloodQueue<T> {
    pub fn with_capacity(n: usize) -> Self {
        Self { heap: BinaryHeap::with_capacity(n), seq: 0 }
    }

    pub fn push(&mut self, priority: T, pixel: usize, label: u32) {
        self.heap.push(Reverse(FloodEntry { priority, seq: self.seq, pixel, label }));
        self.seq += 1;
    }

    pub fn pop(&mut self) -> Option<FloodEntry<T>> {
        self.heap.pop().map(|Reverse(e)| e)
    }
}

/// Priority flood from every marker pixel.
///
/// Marker pixels are queued in ascending label order, row-major within each
/// label, at their own gradient value. Each popped pixel hands its label to
/// its unlabeled 8-neighbors, which are labeled immediately and queued at
/// their own gradient value. Ties pop in insertion order. Every pixel ends
/// up in exactly one region; there are no watershed-line pixels.
pub fn watershed_from_markers<T: Scalar>(field: &GradientField<T>, markers: &MarkerMap) -> Result<SegmentMap> {
    let (w, h) = (field.width(), field.height());
    if markers.width() != w || markers.height() != h {
        return Err(Error::DimensionMismatch(format!(
            "gradient is {w}x{h}, markers are {}x{}",
            markers.width(),
            markers.height()
        )));
    }
    if markers.count() == 0 {
        return Err(Error::EmptyMarkers);
    }
    let g = field.values();
    let mut labels = markers.labels().to_vec();

    let mut by_label: Vec<Vec<usize>> = vec![Vec::new(); markers.count() as usize + 1];
    for (i, &l) in labels.iter().enumerate() {
        by_label[l as usize].push(i);
    }
    let mut queue = FloodQueue::with_capacity(w * h);
    for (label, pixels) in by_label.iter().enumerate().skip(1) {
        for &p in pixels {
            queue.push(g[p], p, label as u32);
        }
    }
    while let Some(entry) = queue.pop() {
        for_each_neighbor8(w, h, entry.pixel, |q| {
            if labels[q] == 0 {
                labels[q] = entry.label;
                queue.push(g[q], q, entry.label);
            }
        });
    }
    Ok(SegmentMap::from_parts(w, h, labels, markers.count()))
}

/// Shared-boundary lengths between nonzero regions, counted as 8-adjacent
/// pixel pairs. Each unordered pair of pixels is counted once.
fn adjacency(seg: &SegmentMap) -> Vec<BTreeMap<u32, usize>> {
    let (w, h) = (seg.width(), seg.height());
    let labels = seg.labels();
    let mut adj = vec![BTreeMap::new(); seg.region_count() as usize + 1];
    for p in 0..w * h {
        let a = labels[p];
        if a == 0 {
            continue;
        }
        for_each_neighbor8(w, h, p, |q| {
            let b = labels[q];
            if q > p && b != 0 && b != a {
                *adj[a as usize].entry(b).or_insert(0) += 1;
                *adj[b as usize].entry(a).or_insert(0) += 1;
            }
        });
    }
    adj
}

/// Merges every region smaller than `min_area` into the neighbor with the
/// longest shared boundary (ties go to the lower label), then renumbers the
/// survivors `1..=K'` in ascending order of their old labels.
///
/// Regions are processed smallest first (ties: lower label) and adjacency is
/// updated after each merge. Label 0 is clear sky: it is never merged into,
/// and a small region whose only neighbor is clear sky is cleared. A small
/// region with no neighbors at all (the whole labeled area) is kept.
pub fn merge_small_regions(seg: &SegmentMap, min_area: usize) -> SegmentMap {
    let k = seg.region_count() as usize;
    let mut area = seg.areas();
    let mut adj = adjacency(seg);
    let mut alive: Vec<bool> = (0..=k).map(|l| l != 0 && area[l] > 0).collect();
    // parent[l] = label l was merged into (0 = cleared)
    let mut parent: Vec<u32> = (0..=k as u32).collect();
    let mut touches_clear = {
        let mut t = vec![false; k + 1];
        let (w, h) = (seg.width(), seg.height());
        let labels = seg.labels();
        for p in 0..w * h {
            if labels[p] != 0 && !t[labels[p] as usize] {
                for_each_neighbor8(w, h, p, |q| {
                    if labels[q] == 0 {
                        t[labels[p] as usize] = true;
                    }
                });
            }
        }
        t
    };

    loop {
        let candidate = (1..=k)
            .filter(|&l| alive[l] && area[l] < min_area)
            .filter(|&l| !adj[l].is_empty() || touches_clear[l])
            .min_by_key(|&l| (area[l], l));
        let Some(small) = candidate else { break };
        let target = adj[small].iter().max_by(|(la, na), (lb, nb)| na.cmp(nb).then(lb.cmp(la))).map(|(&l, _)| l);
        let neighbors = std::mem::take(&mut adj[small]);
        alive[small] = false;
        match target {
            Some(t) => {
                let t = t as usize;
                parent[small] = t as u32;
                area[t] += area[small];
                touches_clear[t] |= touches_clear[small];
                for (&n, &len) in &neighbors {
                    let n = n as usize;
                    adj[n].remove(&(small as u32));
                    if n != t {
                        *adj[t].entry(n as u32).or_insert(0) += len;
                        *adj[n].entry(t as u32).or_insert(0) += len;
                    }
                }
            }
            None => {
                parent[small] = 0;
            }
        }
        area[small] = 0;
    }

    let resolve = |mut l: u32| {
        while l != 0 && parent[l as usize] != l {
            l = parent[l as usize];
        }
        l
    };
    let mut renumber = vec![0u32; k + 1];
    let mut next = 0;
    for l in 1..=k {
        if alive[l] {
            next += 1;
            renumber[l] = next;
        }
    }
    let final_label: Vec<u32> = (0..=k as u32).map(|l| renumber[resolve(l) as usize]).collect();
    let labels = seg.labels().iter().map(|&l| final_label[l as usize]).collect();
    SegmentMap::from_parts(seg.width(), seg.height(), labels, next)
}

/// Per-region summary used for classification and reporting.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegionStats {
    pub label: u32,
    pub area: usize,
    pub mean_bt: f64,
    pub min_bt: f64,
    pub mean_gradient: f64,
    pub is_cloud: bool,
}

/// Labels a region cloudy when its mean brightness temperature is below
/// `clear_sky_cutoff` kelvin. Clear-sky pixels (label 0) stay clear and get
/// no stats entry.
pub fn classify_regions<T: Scalar>(
    seg: &SegmentMap,
    bt: &Raster2D<T>,
    gradient: &GradientField<T>,
    clear_sky_cutoff: f64,
) -> Result<(CloudMask, Vec<RegionStats>)> {
    let (w, h) = (seg.width(), seg.height());
    if bt.width() != w || bt.height() != h || gradient.width() != w || gradient.height() != h {
        return Err(Error::DimensionMismatch(format!(
            "segments {w}x{h}, brightness temperature {}x{}, gradient {}x{}",
            bt.width(),
            bt.height(),
            gradient.width(),
            gradient.height()
        )));
    }
    let k = seg.region_count() as usize;
    let mut area = vec![0usize; k + 1];
    let mut sum_bt = vec![0.0f64; k + 1];
    let mut min_bt = vec![f64::INFINITY; k + 1];
    let mut sum_g = vec![0.0f64; k + 1];
    for ((&l, &t), &g) in seg.labels().iter().zip(bt.values()).zip(gradient.values()) {
        let l = l as usize;
        let t = t.as_f64();
        area[l] += 1;
        sum_bt[l] += t;
        min_bt[l] = min_bt[l].min(t);
        sum_g[l] += g.as_f64();
    }
    let stats: Vec<RegionStats> = (1..=k)
        .map(|l| {
            let n = area[l] as f64;
            let mean_bt = sum_bt[l] / n;
            RegionStats {
                label: l as u32,
                area: area[l],
                // the mean can round a hair below the minimum for flat regions
                mean_bt: mean_bt.max(min_bt[l]),
                min_bt: min_bt[l],
                mean_gradient: sum_g[l] / n,
                is_cloud: mean_bt < clear_sky_cutoff,
            }
        })
        .collect();
    let flags = seg.labels().iter().map(|&l| l != 0 && stats[l as usize - 1].is_cloud).collect();
    Ok((CloudMask::new(w, h, flags)?, stats))
}
