//! Brute-force reference implementations shared by the integration tests.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use rand::Rng;

pub fn window_extreme(v: &[f64], w: usize, h: usize, radius: usize, max: bool) -> Vec<f64> {
    let mut out = vec![0.0; w * h];
    for r in 0..h {
        for c in 0..w {
            let mut best = if max { f64::NEG_INFINITY } else { f64::INFINITY };
            for rr in r.saturating_sub(radius)..=(r + radius).min(h - 1) {
                for cc in c.saturating_sub(radius)..=(c + radius).min(w - 1) {
                    let x = v[rr * w + cc];
                    best = if max { best.max(x) } else { best.min(x) };
                }
            }
            out[r * w + c] = best;
        }
    }
    out
}

pub fn neighbors8(w: usize, h: usize, p: usize) -> Vec<usize> {
    let (r, c) = ((p / w) as isize, (p % w) as isize);
    let mut out = Vec::new();
    for dr in -1..=1 {
        for dc in -1..=1 {
            let (rr, cc) = (r + dr, c + dc);
            if (dr, dc) != (0, 0) && rr >= 0 && cc >= 0 && (rr as usize) < h && (cc as usize) < w {
                out.push(rr as usize * w + cc as usize);
            }
        }
    }
    out
}

/// True when the pixels carrying `label` form one 8-connected set.
pub fn is_connected(labels: &[u32], w: usize, h: usize, label: u32) -> bool {
    let members: Vec<usize> = (0..w * h).filter(|&p| labels[p] == label).collect();
    let Some(&start) = members.first() else { return false };
    let mut seen = BTreeSet::from([start]);
    let mut stack = vec![start];
    while let Some(p) = stack.pop() {
        for q in neighbors8(w, h, p) {
            if labels[q] == label && seen.insert(q) {
                stack.push(q);
            }
        }
    }
    seen.len() == members.len()
}

/// Connected components of `mask`, numbered by first pixel in row-major order.
pub fn components(mask: &[bool], w: usize, h: usize) -> Vec<u32> {
    let mut labels = vec![0u32; w * h];
    let mut next = 0;
    for p in 0..w * h {
        if mask[p] && labels[p] == 0 {
            next += 1;
            labels[p] = next;
            let mut stack = vec![p];
            while let Some(a) = stack.pop() {
                for q in neighbors8(w, h, a) {
                    if mask[q] && labels[q] == 0 {
                        labels[q] = next;
                        stack.push(q);
                    }
                }
            }
        }
    }
    labels
}

/// Merge oracle that recomputes areas and boundaries from scratch after
/// every step.
pub fn merge_oracle(labels: &[u32], w: usize, h: usize, min_area: usize) -> Vec<u32> {
    let mut lab = labels.to_vec();
    loop {
        let mut area: BTreeMap<u32, usize> = BTreeMap::new();
        for &l in lab.iter().filter(|&&l| l != 0) {
            *area.entry(l).or_default() += 1;
        }
        let mut border: BTreeMap<u32, BTreeMap<u32, usize>> = BTreeMap::new();
        let mut touches_clear = BTreeSet::new();
        for p in 0..w * h {
            if lab[p] == 0 {
                continue;
            }
            for q in neighbors8(w, h, p) {
                if lab[q] == 0 {
                    touches_clear.insert(lab[p]);
                } else if lab[q] != lab[p] {
                    *border.entry(lab[p]).or_default().entry(lab[q]).or_default() += 1;
                }
            }
        }
        let pick = area
            .iter()
            .filter(|(l, &a)| a < min_area && (border.contains_key(l) || touches_clear.contains(l)))
            .min_by_key(|(&l, &a)| (a, l))
            .map(|(&l, _)| l);
        let Some(small) = pick else { break };
        let target = border.get(&small).and_then(|b| {
            let best = b.values().copied().max()?;
            b.iter().find(|(_, &n)| n == best).map(|(&l, _)| l)
        });
        let into = target.unwrap_or(0);
        lab.iter_mut().filter(|l| **l == small).for_each(|l| *l = into);
    }
    let survivors: BTreeSet<u32> = lab.iter().copied().filter(|&l| l != 0).collect();
    let renumber: BTreeMap<u32, u32> = survivors.into_iter().zip(1..).collect();
    lab.iter().map(|l| if *l == 0 { 0 } else { renumber[l] }).collect()
}

/// Random raster with a mix of plateaus and noise so that ties occur.
pub fn random_field(rng: &mut impl Rng, w: usize, h: usize, levels: u32) -> Vec<f64> {
    (0..w * h).map(|_| rng.random_range(0..levels) as f64 * 0.5).collect()
}

/// Random partition built by flooding from random seeds, so every label is
/// 8-connected.
pub fn random_partition(rng: &mut impl Rng, w: usize, h: usize, k: usize) -> Vec<u32> {
    let n = w * h;
    let mut lab = vec![0u32; n];
    let mut frontier = Vec::new();
    let mut placed = 0u32;
    while (placed as usize) < k.min(n) {
        let p = rng.random_range(0..n);
        if lab[p] == 0 {
            placed += 1;
            lab[p] = placed;
            frontier.push(p);
        }
    }
    while !frontier.is_empty() {
        let i = rng.random_range(0..frontier.len());
        let p = frontier.swap_remove(i);
        for q in neighbors8(w, h, p) {
            if lab[q] == 0 {
                lab[q] = lab[p];
                frontier.push(q);
            }
        }
    }
    lab
}
