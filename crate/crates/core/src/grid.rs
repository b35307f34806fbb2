//! Raster containers: scalar rasters, multichannel stacks, structuring
//! elements and the integer/boolean label rasters produced by segmentation.

use std::fmt;

use crate::error::{Error, Result};
use crate::labeling;
use crate::scalar::Scalar;

/// Physical units carried by a raster.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Units {
    #[default]
    Kelvin,
    Dimensionless,
}

/// Single-channel grid of finite scalars, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Raster2D<T> {
    width: usize,
    height: usize,
    values: Vec<T>,
    units: Units,
}

fn check_dims(width: usize, height: usize) -> Result<usize> {
    if width == 0 || height == 0 {
        return Err(Error::InvalidRaster(format!("dimensions must be positive, got {width}x{height}")));
    }
    width.checked_mul(height).ok_or_else(|| Error::InvalidRaster(format!("{width}x{height} overflows")))
}

impl<T: Scalar> Raster2D<T> {
    pub fn new(width: usize, height: usize, values: Vec<T>, units: Units) -> Result<Self> {
        let len = check_dims(width, height)?;
        if values.len() != len {
            return Err(Error::InvalidRaster(format!(
                "{width}x{height} raster needs {len} values, got {}",
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidRaster(format!("non-finite value at element {i}")));
        }
        Ok(Self { width, height, values, units })
    }

    pub fn filled(width: usize, height: usize, value: T, units: Units) -> Result<Self> {
        let len = check_dims(width, height)?;
        Self::new(width, height, vec![value; len], units)
    }

    /// Builds a raster by evaluating `f(row, col)` at every pixel.
    pub fn from_fn(width: usize, height: usize, units: Units, mut f: impl FnMut(usize, usize) -> T) -> Result<Self> {
        check_dims(width, height)?;
        let mut values = Vec::with_capacity(width * height);
        for r in 0..height {
            for c in 0..width {
                values.push(f(r, c));
            }
        }
        Self::new(width, height, values, units)
    }

    /// Caller guarantees the length and finiteness invariants.
    pub(crate) fn from_parts(width: usize, height: usize, values: Vec<T>, units: Units) -> Self {
        debug_assert_eq!(values.len(), width * height);
        debug_assert!(values.iter().all(|v| v.is_finite()));
        Self { width, height, values, units }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn units(&self) -> Units {
        self.units
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> T {
        self.values[row * self.width + col]
    }

    pub fn with_units(mut self, units: Units) -> Self {
        self.units = units;
        self
    }

    pub fn same_shape<U>(&self, other: &Raster2D<U>) -> bool {
        self.width == other.width && self.height == other.height
    }

    /// Pointwise map; fails if `f` produces a non-finite value.
    pub fn map(&self, f: impl FnMut(T) -> T) -> Result<Self> {
        Self::new(self.width, self.height, self.values.iter().copied().map(f).collect(), self.units)
    }

    /// Pointwise negation. Always finite.
    pub fn neg(&self) -> Self {
        Self::from_parts(self.width, self.height, self.values.iter().map(|&v| -v).collect(), self.units)
    }

    pub fn min_max(&self) -> (T, T) {
        self.values.iter().fold((self.values[0], self.values[0]), |(lo, hi), &v| (lo.min(v), hi.max(v)))
    }

    /// Converts the element type, e.g. to `f32` for storage.
    pub fn cast<U: Scalar>(&self) -> Result<Raster2D<U>> {
        Raster2D::new(self.width, self.height, self.values.iter().map(|&v| U::lit(v.as_f64())).collect(), self.units)
    }
}

/// Short ASCII channel identifier, at most 16 bytes with no NUL.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ChannelId(String);

impl ChannelId {
    pub const MAX_LEN: usize = 16;

    pub fn new(id: impl Into<String>) -> Result<Self> {
        let id = id.into();
        if id.is_empty() || id.len() > Self::MAX_LEN || !id.bytes().all(|b| b.is_ascii() && b != 0) {
            return Err(Error::InvalidImage(format!("channel id {id:?} must be 1..=16 ASCII bytes without NUL")));
        }
        Ok(Self(id))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for ChannelId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Co-registered stack of rasters with unique ids, in a fixed order.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiChannelImage<T> {
    channels: Vec<(ChannelId, Raster2D<T>)>,
}

impl<T: Scalar> MultiChannelImage<T> {
    pub fn new(channels: Vec<(ChannelId, Raster2D<T>)>) -> Result<Self> {
        let Some((_, first)) = channels.first() else {
            return Err(Error::InvalidImage("image needs at least one channel".into()));
        };
        for (i, (id, raster)) in channels.iter().enumerate() {
            if !raster.same_shape(first) {
                return Err(Error::InvalidImage(format!(
                    "channel {id} is {}x{}, expected {}x{}",
                    raster.width(),
                    raster.height(),
                    first.width(),
                    first.height()
                )));
            }
            if channels[..i].iter().any(|(other, _)| other == id) {
                return Err(Error::InvalidImage(format!("duplicate channel id {id}")));
            }
        }
        Ok(Self { channels })
    }

    pub fn single(id: &str, raster: Raster2D<T>) -> Result<Self> {
        Self::new(vec![(ChannelId::new(id)?, raster)])
    }

    pub fn width(&self) -> usize {
        self.channels[0].1.width()
    }

    pub fn height(&self) -> usize {
        self.channels[0].1.height()
    }

    pub fn channel_count(&self) -> usize {
        self.channels.len()
    }

    pub fn channels(&self) -> &[(ChannelId, Raster2D<T>)] {
        &self.channels
    }

    pub fn channel(&self, id: &str) -> Option<&Raster2D<T>> {
        self.channels.iter().find(|(c, _)| c.as_str() == id).map(|(_, r)| r)
    }

    /// Sub-image holding the listed channels, in the listed order.
    pub fn select(&self, ids: &[&str]) -> Result<Self> {
        let mut picked = Vec::with_capacity(ids.len());
        for id in ids {
            let raster = self.channel(id).ok_or_else(|| Error::InvalidImage(format!("no channel named {id}")))?;
            picked.push((ChannelId::new(*id)?, raster.clone()));
        }
        Self::new(picked)
    }
}

/// Flat square structuring element of side `2 * radius + 1`, origin at the center.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct StructuringElement {
    radius: usize,
}

impl StructuringElement {
    pub const IDENTITY: Self = Self { radius: 0 };

    pub fn square(radius: usize) -> Self {
        Self { radius }
    }

    pub fn radius(&self) -> usize {
        self.radius
    }

    pub fn side(&self) -> usize {
        2 * self.radius + 1
    }
}

fn check_label_len(width: usize, height: usize, len: usize) -> Result<()> {
    let n = check_dims(width, height).map_err(|e| Error::InvalidLabels(e.to_string()))?;
    if n != len {
        return Err(Error::InvalidLabels(format!("{width}x{height} map needs {n} labels, got {len}")));
    }
    Ok(())
}

/// Highest label, after checking the nonzero labels are exactly `1..=K`.
fn check_consecutive(labels: &[u32]) -> Result<u32> {
    let k = labels.iter().copied().max().unwrap_or(0);
    let mut seen = vec![false; k as usize + 1];
    for &l in labels {
        seen[l as usize] = true;
    }
    if let Some(missing) = (1..=k as usize).find(|&l| !seen[l]) {
        return Err(Error::InvalidLabels(format!("labels not consecutive: {missing} missing below {k}")));
    }
    Ok(k)
}

/// Seed components for the watershed flood: 0 is non-seed, `1..=K` are
/// 8-connected seed components.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MarkerMap {
    width: usize,
    height: usize,
    labels: Vec<u32>,
    count: u32,
}

impl MarkerMap {
    pub fn new(width: usize, height: usize, labels: Vec<u32>) -> Result<Self> {
        check_label_len(width, height, labels.len())?;
        let count = check_consecutive(&labels)?;
        let components = labeling::label_components(width, height, |i| labels[i] != 0, |a, b| labels[a] == labels[b]);
        if components.count() != count as usize {
            return Err(Error::InvalidLabels(format!(
                "{count} marker labels span {} connected components",
                components.count()
            )));
        }
        Ok(Self { width, height, labels, count })
    }

    pub(crate) fn from_parts(width: usize, height: usize, labels: Vec<u32>, count: u32) -> Self {
        Self { width, height, labels, count }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    /// Number of marker components K.
    pub fn count(&self) -> u32 {
        self.count
    }

    pub fn seed_pixel_count(&self) -> usize {
        self.labels.iter().filter(|&&l| l != 0).count()
    }
}

/// Integer-labeled partition. Labels `1..=K` are regions; 0 marks clear sky
/// in threshold-baseline output and never appears in watershed output.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SegmentMap {
    width: usize,
    height: usize,
    labels: Vec<u32>,
    count: u32,
}

impl SegmentMap {
    pub fn new(width: usize, height: usize, labels: Vec<u32>) -> Result<Self> {
        check_label_len(width, height, labels.len())?;
        let count = check_consecutive(&labels)?;
        Ok(Self { width, height, labels, count })
    }

    pub(crate) fn from_parts(width: usize, height: usize, labels: Vec<u32>, count: u32) -> Self {
        debug_assert_eq!(check_consecutive(&labels).ok(), Some(count));
        Self { width, height, labels, count }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    pub fn into_labels(self) -> Vec<u32> {
        self.labels
    }

    /// Number of regions K (label 0 is not counted).
    pub fn region_count(&self) -> u32 {
        self.count
    }

    /// True when every pixel carries a nonzero label.
    pub fn is_total(&self) -> bool {
        self.labels.iter().all(|&l| l != 0)
    }

    /// Pixel count per label, indexed by label (index 0 counts clear pixels).
    pub fn areas(&self) -> Vec<usize> {
        let mut areas = vec![0usize; self.count as usize + 1];
        for &l in &self.labels {
            areas[l as usize] += 1;
        }
        areas
    }
}

/// Boolean cloud/clear raster, `true` = cloudy.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CloudMask {
    width: usize,
    height: usize,
    flags: Vec<bool>,
}

impl CloudMask {
    pub fn new(width: usize, height: usize, flags: Vec<bool>) -> Result<Self> {
        check_label_len(width, height, flags.len())?;
        Ok(Self { width, height, flags })
    }

    pub fn clear(width: usize, height: usize) -> Result<Self> {
        let n = check_dims(width, height)?;
        Self::new(width, height, vec![false; n])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn flags(&self) -> &[bool] {
        &self.flags
    }

    pub fn cloudy_count(&self) -> usize {
        self.flags.iter().filter(|&&f| f).count()
    }
}

/// Calls `f` for each in-bounds 8-neighbor of `idx`, in row-major order.
#[inline]
pub(crate) fn for_each_neighbor8(width: usize, height: usize, idx: usize, mut f: impl FnMut(usize)) {
    let r = idx / width;
    let c = idx % width;
    let r0 = r.saturating_sub(1);
    let r1 = (r + 1).min(height - 1);
    let c0 = c.saturating_sub(1);
    let c1 = (c + 1).min(width - 1);
    for nr in r0..=r1 {
        for nc in c0..=c1 {
            if nr != r || nc != c {
                f(nr * width + nc);
            }
        }
    }
}
