//! The full gradient segmentation chain: multispectral gradient, Otsu
//! markers, watershed flood, optional small-region merge, classification.

use crate::error::{Error, Result};
use crate::grid::{CloudMask, MarkerMap, MultiChannelImage, Raster2D, SegmentMap};
use crate::markers::{generate_markers, otsu_threshold, MarkerConfig, OtsuResult};
use crate::morphology::{multispectral_gradient, GradientConfig, GradientField};
use crate::scalar::Scalar;
use crate::watershed::{
    classify_regions, merge_small_regions, watershed_from_markers, RegionStats, DEFAULT_CLEAR_SKY_CUTOFF,
};

#[derive(Debug, Clone, PartialEq)]
pub struct GmsConfig {
    pub gradient: GradientConfig,
    pub markers: MarkerConfig,
    /// Post-flood merge threshold in pixels; 0 disables merging.
    pub min_area: usize,
    pub clear_sky_cutoff: f64,
}

impl Default for GmsConfig {
    fn default() -> Self {
        Self {
            gradient: GradientConfig::default(),
            markers: MarkerConfig::default(),
            min_area: 0,
            clear_sky_cutoff: DEFAULT_CLEAR_SKY_CUTOFF,
        }
    }
}

#[derive(Debug, Clone)]
pub struct GmsOutput<T> {
    pub gradient: GradientField<T>,
    pub otsu: OtsuResult<T>,
    pub markers: MarkerMap,
    pub segments: SegmentMap,
    pub mask: CloudMask,
    pub stats: Vec<RegionStats>,
}

/// Segments `image` (all channels feed the gradient) and classifies the
/// regions by the brightness temperature of `bt_channel`.
pub fn run_gms<T: Scalar>(image: &MultiChannelImage<T>, bt_channel: &str, cfg: &GmsConfig) -> Result<GmsOutput<T>> {
    let bt = image
        .channel(bt_channel)
        .ok_or_else(|| Error::InvalidParameter(format!("no brightness temperature channel named {bt_channel}")))?;
    segment_with_bt(image, bt, cfg)
}

/// Like [`run_gms`], with the classification raster given separately so it
/// need not be one of the gradient channels.
pub fn segment_with_bt<T: Scalar>(
    image: &MultiChannelImage<T>,
    bt: &Raster2D<T>,
    cfg: &GmsConfig,
) -> Result<GmsOutput<T>> {
    let gradient = multispectral_gradient(image, &cfg.gradient)?;
    let otsu = otsu_threshold(&gradient, cfg.markers.bins)?;
    let markers = generate_markers(&gradient, &otsu, cfg.markers.min_seed_area)?;
    let mut segments = watershed_from_markers(&gradient, &markers)?;
    if cfg.min_area > 1 {
        segments = merge_small_regions(&segments, cfg.min_area);
    }
    let (mask, stats) = classify_regions(&segments, bt, &gradient, cfg.clear_sky_cutoff)?;
    Ok(GmsOutput { gradient, otsu, markers, segments, mask, stats })
}
