//! Otsu threshold selection on gradient magnitudes and extraction of the
//! low-gradient seed components used as watershed markers.

use crate::error::{Error, Result};
use crate::grid::MarkerMap;
use crate::labeling;
use crate::morphology::GradientField;
use crate::scalar::Scalar;

pub const DEFAULT_BINS: usize = 256;
pub const DEFAULT_MIN_SEED_AREA: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MarkerConfig {
    pub bins: usize,
    pub min_seed_area: usize,
}

impl Default for MarkerConfig {
    fn default() -> Self {
        Self { bins: DEFAULT_BINS, min_seed_area: DEFAULT_MIN_SEED_AREA }
    }
}

/// Equal-width histogram over `[min, max]`.
///
/// Interior edges are `e_k = min + k * ((max - min) / bins)` for
/// `k = 1..bins`. Bin `b` holds the values with exactly `b` interior edges
/// strictly below them, so the first bin is closed at `min` and every bin is
/// closed on the right: `v <= e_k` holds exactly for the values in bins
/// `0..k`.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram<T> {
    pub min: T,
    pub max: T,
    pub edges: Vec<T>,
    pub counts: Vec<u64>,
}

impl<T: Scalar> Histogram<T> {
    pub fn new(values: &[T], bins: usize) -> Result<Self> {
        if bins < 2 {
            return Err(Error::InvalidParameter(format!("histogram needs at least 2 bins, got {bins}")));
        }
        let Some(&first) = values.first() else {
            return Err(Error::InvalidParameter("histogram of an empty field".into()));
        };
        let (min, max) = values.iter().fold((first, first), |(lo, hi), &v| (lo.min(v), hi.max(v)));
        let width = (max - min) / T::lit(bins as f64);
        let edges: Vec<T> = (1..bins).map(|k| min + T::lit(k as f64) * width).collect();
        let mut counts = vec![0u64; bins];
        for &v in values {
            counts[edges.partition_point(|&e| e < v)] += 1;
        }
        Ok(Self { min, max, edges, counts })
    }

    pub fn bins(&self) -> usize {
        self.counts.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OtsuResult<T> {
    /// Upper bin edge of the low class; values `<= threshold` are low.
    pub threshold: T,
    /// Between-class variance at the chosen split, in squared value units.
    pub between_class_variance: f64,
    pub histogram_bins: usize,
    /// Number of histogram bins in the low class.
    pub low_bins: usize,
}

/// Between-class variance `w0 * w1 * (mu0 - mu1)^2` for a split after bin
/// `k - 1`, given integer class counts and bin-index sums. Means are taken in
/// bin-index units and rescaled by `bin_width^2`.
pub fn between_class_variance(n0: u64, s0: u64, n1: u64, s1: u64, bin_width: f64) -> f64 {
    if n0 == 0 || n1 == 0 {
        return 0.0;
    }
    let total = (n0 + n1) as f64;
    let mu0 = s0 as f64 / n0 as f64;
    let mu1 = s1 as f64 / n1 as f64;
    let d = mu0 - mu1;
    (n0 as f64 / total) * (n1 as f64 / total) * d * d * bin_width * bin_width
}

/// Otsu's threshold over a `bins`-bin histogram. Candidates are the interior
/// bin edges; the lowest edge reaching the maximum variance wins.
pub fn otsu_threshold<T: Scalar>(field: &GradientField<T>, bins: usize) -> Result<OtsuResult<T>> {
    let hist = Histogram::new(field.values(), bins)?;
    if hist.min == hist.max {
        return Err(Error::ConstantField(hist.min.as_f64()));
    }
    let bin_width = (hist.max.as_f64() - hist.min.as_f64()) / bins as f64;
    let n: u64 = hist.counts.iter().sum();
    let s: u64 = hist.counts.iter().enumerate().map(|(b, &c)| b as u64 * c).sum();
    let mut best: Option<(usize, f64)> = None;
    let (mut n0, mut s0) = (0u64, 0u64);
    for k in 1..bins {
        n0 += hist.counts[k - 1];
        s0 += (k as u64 - 1) * hist.counts[k - 1];
        if n0 == 0 || n0 == n {
            continue;
        }
        let var = between_class_variance(n0, s0, n - n0, s - s0, bin_width);
        if best.is_none_or(|(_, b)| var > b) {
            best = Some((k, var));
        }
    }
    let (k, var) = best.ok_or(Error::ConstantField(hist.min.as_f64()))?;
    Ok(OtsuResult { threshold: hist.edges[k - 1], between_class_variance: var, histogram_bins: bins, low_bins: k })
}

/// Marks pixels at or below the threshold as seeds, labels their 8-connected
/// components in row-major first-pixel order, and drops components smaller
/// than `min_seed_area`.
pub fn generate_markers<T: Scalar>(
    field: &GradientField<T>,
    otsu: &OtsuResult<T>,
    min_seed_area: usize,
) -> Result<MarkerMap> {
    if min_seed_area == 0 {
        return Err(Error::InvalidParameter("min_seed_area must be at least 1".into()));
    }
    let (w, h) = (field.width(), field.height());
    let values = field.values();
    let comps = labeling::label_components(w, h, |i| values[i] <= otsu.threshold, |_, _| true);
    let mut remap = vec![0u32; comps.count() + 1];
    let mut next = 0u32;
    for (k, &size) in comps.sizes.iter().enumerate() {
        if size >= min_seed_area {
            next += 1;
            remap[k + 1] = next;
        }
    }
    if next == 0 {
        return Err(Error::NoMarkers { min_seed_area, largest: comps.sizes.iter().copied().max().unwrap_or(0) });
    }
    let labels = comps.labels.iter().map(|&l| remap[l as usize]).collect();
    Ok(MarkerMap::from_parts(w, h, labels, next))
}
