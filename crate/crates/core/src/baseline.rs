//! Incremental-threshold seeded region growing, the patch segmentation used
//! by threshold-based IR precipitation retrievals.
//!
//! Seeds are the 8-connected components at or below the first temperature
//! level. Each further level lets every patch grow into adjacent pixels at or
//! below that level, coldest first; a pixel belongs to the first patch that
//! claims it. Pixels warmer than the last level stay clear (label 0).

use crate::error::{Error, Result};
use crate::grid::{for_each_neighbor8, CloudMask, Raster2D, SegmentMap};
use crate::labeling;
use crate::scalar::Scalar;
use crate::watershed::{merge_small_regions, FloodQueue};

pub const DEFAULT_LEVELS: [f64; 3] = [220.0, 235.0, 253.0];
pub const DEFAULT_MIN_AREA: usize = 50;

#[derive(Debug, Clone, PartialEq)]
pub struct CcsConfig {
    /// Ascending brightness-temperature levels in kelvin; the last one is
    /// the warmest temperature any patch may reach.
    pub threshold_levels: Vec<f64>,
    /// Patches smaller than this are merged into a neighbor or cleared.
    pub min_area: usize,
}

impl Default for CcsConfig {
    fn default() -> Self {
        Self { threshold_levels: DEFAULT_LEVELS.to_vec(), min_area: DEFAULT_MIN_AREA }
    }
}

impl CcsConfig {
    pub fn new(threshold_levels: Vec<f64>, min_area: usize) -> Result<Self> {
        let cfg = Self { threshold_levels, min_area };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn max_threshold(&self) -> f64 {
        *self.threshold_levels.last().expect("validated config has levels")
    }

    pub fn validate(&self) -> Result<()> {
        if self.threshold_levels.is_empty() {
            return Err(Error::InvalidParameter("at least one threshold level is required".into()));
        }
        if self.threshold_levels.iter().any(|l| !l.is_finite()) {
            return Err(Error::InvalidParameter("threshold levels must be finite".into()));
        }
        if self.threshold_levels.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidParameter(format!(
                "threshold levels must be strictly ascending: {:?}",
                self.threshold_levels
            )));
        }
        if self.min_area == 0 {
            return Err(Error::InvalidParameter("min_area must be at least 1".into()));
        }
        Ok(())
    }
}

/// Seeded region growing without the final small-patch cleanup.
pub fn ccs_grow<T: Scalar>(bt: &Raster2D<T>, levels: &[f64]) -> SegmentMap {
    let (w, h) = (bt.width(), bt.height());
    let v = bt.values();
    let first = T::lit(levels[0]);
    let seeds = labeling::label_components(w, h, |i| v[i] <= first, |_, _| true);
    let mut labels = seeds.labels;
    let count = seeds.sizes.len() as u32;

    let mut queue = FloodQueue::with_capacity(w * h / 4);
    for &level in &levels[1..] {
        let level = T::lit(level);
        for p in 0..w * h {
            if labels[p] == 0 {
                continue;
            }
            for_each_neighbor8(w, h, p, |q| {
                if labels[q] == 0 && v[q] <= level {
                    queue.push(v[q], q, labels[p]);
                }
            });
        }
        while let Some(e) = queue.pop() {
            if labels[e.pixel] != 0 {
                continue;
            }
            labels[e.pixel] = e.label;
            for_each_neighbor8(w, h, e.pixel, |q| {
                if labels[q] == 0 && v[q] <= level {
                    queue.push(v[q], q, e.label);
                }
            });
        }
    }
    SegmentMap::from_parts(w, h, labels, count)
}

/// Full baseline segmentation: growth through every level, then small-patch
/// cleanup with `cfg.min_area`.
pub fn ccs_segment<T: Scalar>(bt: &Raster2D<T>, cfg: &CcsConfig) -> Result<SegmentMap> {
    cfg.validate()?;
    Ok(merge_small_regions(&ccs_grow(bt, &cfg.threshold_levels), cfg.min_area))
}

/// Cloudy wherever the baseline assigned a patch.
pub fn ccs_cloud_mask(seg: &SegmentMap) -> CloudMask {
    CloudMask::new(seg.width(), seg.height(), seg.labels().iter().map(|&l| l != 0).collect())
        .expect("segment map dimensions are valid")
}
