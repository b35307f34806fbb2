//! Flat grayscale erosion and dilation over square windows, and the
//! morphological gradients built from them.
//!
//! Windows are clipped to the image domain, so a border pixel only sees the
//! in-bounds part of its window. For flat square elements this is the same as
//! replicate padding. Both filters are separable: a row pass followed by a
//! column pass, each a sliding extreme over `2r + 1` samples.

use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::grid::{MultiChannelImage, Raster2D, StructuringElement, Units};
use crate::scalar::Scalar;

/// Non-negative dimensionless gradient magnitude.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientField<T> {
    raster: Raster2D<T>,
}

impl<T: Scalar> GradientField<T> {
    pub fn new(raster: Raster2D<T>) -> Result<Self> {
        if let Some(i) = raster.values().iter().position(|&v| v < T::zero()) {
            return Err(Error::InvalidRaster(format!("negative gradient at element {i}")));
        }
        Ok(Self { raster: raster.with_units(Units::Dimensionless) })
    }

    fn from_raster_unchecked(raster: Raster2D<T>) -> Self {
        debug_assert!(raster.values().iter().all(|&v| v >= T::zero()));
        Self { raster: raster.with_units(Units::Dimensionless) }
    }

    pub fn raster(&self) -> &Raster2D<T> {
        &self.raster
    }

    pub fn into_raster(self) -> Raster2D<T> {
        self.raster
    }

    pub fn values(&self) -> &[T] {
        self.raster.values()
    }

    pub fn width(&self) -> usize {
        self.raster.width()
    }

    pub fn height(&self) -> usize {
        self.raster.height()
    }

    pub fn max(&self) -> T {
        self.raster.min_max().1
    }
}

/// Settings for the multiscale and multispectral gradients.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GradientConfig {
    /// Number of scales `n`; scale `i` uses a `(2i+1)`-square element.
    pub n_scales: usize,
    /// Divide each channel's gradient by its own maximum before summing.
    pub normalize_channels: bool,
}

impl Default for GradientConfig {
    fn default() -> Self {
        Self { n_scales: 5, normalize_channels: false }
    }
}

impl GradientConfig {
    pub fn with_scales(n_scales: usize) -> Self {
        Self { n_scales, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_scales == 0 {
            return Err(Error::InvalidParameter("n_scales must be at least 1".into()));
        }
        Ok(())
    }
}

/// Sliding-window extreme of `src` with half-width `radius`, clipped at both
/// ends. `keep_back(back, new)` returns true when `back` still dominates
/// `new` and must stay in the deque (`>=` for max, `<=` for min).
fn sliding_extreme<T: Copy>(
    src: &[T],
    radius: usize,
    dst: &mut [T],
    deque: &mut VecDeque<usize>,
    keep_back: impl Fn(T, T) -> bool,
) {
    let n = src.len();
    deque.clear();
    let mut next = 0;
    for (i, out) in dst.iter_mut().enumerate().take(n) {
        let hi = (i + radius).min(n - 1);
        while next <= hi {
            while let Some(&b) = deque.back() {
                if keep_back(src[b], src[next]) {
                    break;
                }
                deque.pop_back();
            }
            deque.push_back(next);
            next += 1;
        }
        let lo = i.saturating_sub(radius);
        while deque.front().is_some_and(|&f| f < lo) {
            deque.pop_front();
        }
        *out = src[*deque.front().unwrap()];
    }
}

fn separable_filter<T: Scalar>(f: &Raster2D<T>, radius: usize, keep_back: impl Fn(T, T) -> bool + Copy) -> Raster2D<T> {
    if radius == 0 {
        return f.clone();
    }
    let (w, h) = (f.width(), f.height());
    let src = f.values();
    let mut rows = vec![T::zero(); w * h];
    let mut deque = VecDeque::with_capacity(2 * radius + 2);
    for r in 0..h {
        sliding_extreme(&src[r * w..(r + 1) * w], radius, &mut rows[r * w..(r + 1) * w], &mut deque, keep_back);
    }
    let mut out = vec![T::zero(); w * h];
    let mut col = vec![T::zero(); h];
    let mut col_out = vec![T::zero(); h];
    for c in 0..w {
        for r in 0..h {
            col[r] = rows[r * w + c];
        }
        sliding_extreme(&col, radius, &mut col_out, &mut deque, keep_back);
        for r in 0..h {
            out[r * w + c] = col_out[r];
        }
    }
    Raster2D::from_parts(w, h, out, f.units())
}

/// Grayscale dilation: maximum over the clipped square window.
pub fn dilate<T: Scalar>(f: &Raster2D<T>, se: StructuringElement) -> Raster2D<T> {
    separable_filter(f, se.radius(), |back, new| back >= new)
}

/// Grayscale erosion: minimum over the clipped square window.
pub fn erode<T: Scalar>(f: &Raster2D<T>, se: StructuringElement) -> Raster2D<T> {
    separable_filter(f, se.radius(), |back, new| back <= new)
}

fn difference<T: Scalar>(hi: &Raster2D<T>, lo: &Raster2D<T>) -> Raster2D<T> {
    let values = hi.values().iter().zip(lo.values()).map(|(&a, &b)| a - b).collect();
    Raster2D::from_parts(hi.width(), hi.height(), values, Units::Dimensionless)
}

/// Dilation minus erosion with the same element. Radius 0 is rejected since
/// the result would be identically zero.
pub fn morphological_gradient<T: Scalar>(f: &Raster2D<T>, se: StructuringElement) -> Result<GradientField<T>> {
    if se.radius() == 0 {
        return Err(Error::InvalidParameter("morphological gradient needs radius >= 1".into()));
    }
    Ok(GradientField::from_raster_unchecked(difference(&dilate(f, se), &erode(f, se))))
}

/// Mean over scales `i = 1..=n` of the scale-`i` gradient eroded by the
/// radius-`(i-1)` element.
pub fn multiscale_gradient<T: Scalar>(f: &Raster2D<T>, cfg: &GradientConfig) -> Result<GradientField<T>> {
    cfg.validate()?;
    let mut acc = vec![T::zero(); f.len()];
    for i in 1..=cfg.n_scales {
        let se = StructuringElement::square(i);
        let term = erode(&difference(&dilate(f, se), &erode(f, se)), StructuringElement::square(i - 1));
        for (a, &t) in acc.iter_mut().zip(term.values()) {
            *a = *a + t;
        }
    }
    let n = T::lit(cfg.n_scales as f64);
    acc.iter_mut().for_each(|a| *a = *a / n);
    Ok(GradientField::from_raster_unchecked(Raster2D::from_parts(f.width(), f.height(), acc, Units::Dimensionless)))
}

/// Per-channel multiscale gradient summed pointwise in channel order. With
/// `normalize_channels`, each channel's field is first scaled to a maximum
/// of 1 (all-zero channels are left as they are).
pub fn multispectral_gradient<T: Scalar>(img: &MultiChannelImage<T>, cfg: &GradientConfig) -> Result<GradientField<T>> {
    cfg.validate()?;
    let mut acc = vec![T::zero(); img.width() * img.height()];
    for (_, channel) in img.channels() {
        let field = multiscale_gradient(channel, cfg)?;
        let max = field.max();
        if cfg.normalize_channels && max > T::zero() {
            for (a, &g) in acc.iter_mut().zip(field.values()) {
                *a = *a + g / max;
            }
        } else {
            for (a, &g) in acc.iter_mut().zip(field.values()) {
                *a = *a + g;
            }
        }
    }
    Ok(GradientField::from_raster_unchecked(Raster2D::from_parts(img.width(), img.height(), acc, Units::Dimensionless)))
}
