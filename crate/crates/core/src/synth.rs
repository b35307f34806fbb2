//! Deterministic synthetic scenes: brightness-temperature channels plus a
//! matching hydrometeor volume whose truth mask is known in closed form.
//!
//! Each cloud is a radial Gaussian depression of the background brightness
//! temperature, `(background - min_bt) * exp(-d^2 / (2 s^2))` with
//! `s = 1.5 * radius_px`, truncated to zero beyond `radius_px`. Overlapping
//! clouds combine by taking the deepest depression, so every cloud keeps its
//! own `min_bt` at its center. The cut at `radius_px` leaves a step of 80% of
//! the cloud's depth at its edge.
//!
//! The IR window channel is `background - depression + noise`. The water
//! vapor channel is `background + 10 K - 0.6 * box3(depression) + noise`,
//! where `box3` is a clipped 3x3 mean; the constants only exist so the two
//! channels differ. Noise is drawn from ChaCha8 seeded with `rng_seed`, IR
//! pixels first, then water vapor, both row-major.
//!
//! The hydrometeor volume has five levels and two species. Every pixel where
//! a cloud's depression exceeds 2 K carries that cloud's mixing ratio
//! `max(hydrometeor_peak * depression / depth, 2e-6)` in the species chosen
//! by its temperature (ice below 253 K, liquid otherwise), spread over the
//! levels with triangular weights peaking at the middle level.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::grid::{ChannelId, CloudMask, MultiChannelImage, Raster2D, Units};
use crate::scalar::Scalar;
use crate::truth::{HydrometeorVolume, Species};

pub const SIGMA_PER_RADIUS: f64 = 1.5;
pub const WATER_VAPOR_OFFSET: f64 = 10.0;
pub const WATER_VAPOR_DAMPING: f64 = 0.6;
/// Depression (K) above which a pixel is inside the intended truth support.
pub const TRUTH_DEPRESSION: f64 = 2.0;
/// Smallest mixing ratio written inside the support, kept clear of the
/// default 1e-6 truth threshold.
pub const MIN_SUPPORT_MIXING_RATIO: f64 = 2e-6;
pub const LEVEL_WEIGHTS: [f64; 5] = [0.25, 0.5, 1.0, 0.5, 0.25];
pub const ICE_BELOW: f64 = 253.0;

pub const DEFAULT_BACKGROUND_BT: f64 = 290.0;
pub const DEFAULT_NOISE_SIGMA: f64 = 0.5;
pub const DEFAULT_HYDROMETEOR_PEAK: f64 = 1e-3;
pub const DEFAULT_PRESET_SIZE: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Profile {
    #[default]
    Gaussian,
}

impl FromStr for Profile {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gaussian" => Ok(Profile::Gaussian),
            other => Err(Error::SceneSpec(format!("unknown profile {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SceneChannel {
    IrWindow,
    WaterVapor,
}

impl SceneChannel {
    pub fn id(self) -> &'static str {
        match self {
            SceneChannel::IrWindow => "ir_window",
            SceneChannel::WaterVapor => "water_vapor",
        }
    }
}

impl FromStr for SceneChannel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ir_window" => Ok(SceneChannel::IrWindow),
            "water_vapor" => Ok(SceneChannel::WaterVapor),
            other => Err(Error::SceneSpec(format!("unknown channel {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CloudSpec {
    /// (row, col) in pixels.
    pub center: (f64, f64),
    pub radius_px: f64,
    pub min_bt: f64,
    pub profile: Profile,
    pub hydrometeor_peak: f64,
}

impl CloudSpec {
    pub fn new(row: f64, col: f64, radius_px: f64, min_bt: f64) -> Self {
        Self {
            center: (row, col),
            radius_px,
            min_bt,
            profile: Profile::Gaussian,
            hydrometeor_peak: DEFAULT_HYDROMETEOR_PEAK,
        }
    }

    /// Brightness temperature depression (K) this cloud causes at a pixel.
    pub fn depression(&self, background_bt: f64, row: usize, col: usize) -> f64 {
        let dr = row as f64 - self.center.0;
        let dc = col as f64 - self.center.1;
        let d2 = dr * dr + dc * dc;
        if d2 > self.radius_px * self.radius_px {
            return 0.0;
        }
        let s = SIGMA_PER_RADIUS * self.radius_px;
        match self.profile {
            Profile::Gaussian => (background_bt - self.min_bt) * (-d2 / (2.0 * s * s)).exp(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SceneSpec {
    pub width: usize,
    pub height: usize,
    pub background_bt: f64,
    pub clouds: Vec<CloudSpec>,
    pub channels: Vec<SceneChannel>,
    pub noise_sigma: f64,
    pub rng_seed: u64,
}

impl SceneSpec {
    pub fn new(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            background_bt: DEFAULT_BACKGROUND_BT,
            clouds: Vec::new(),
            channels: vec![SceneChannel::IrWindow],
            noise_sigma: DEFAULT_NOISE_SIGMA,
            rng_seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::SceneSpec(m));
        if self.width == 0 || self.height == 0 {
            return bad(format!("dimensions must be positive, got {}x{}", self.width, self.height));
        }
        if !self.background_bt.is_finite() {
            return bad("background_bt must be finite".into());
        }
        if !(self.noise_sigma.is_finite() && self.noise_sigma >= 0.0) {
            return bad(format!("noise_sigma must be finite and >= 0, got {}", self.noise_sigma));
        }
        if self.channels.is_empty() {
            return bad("at least one channel is required".into());
        }
        if (1..self.channels.len()).any(|i| self.channels[..i].contains(&self.channels[i])) {
            return bad("duplicate channel".into());
        }
        for (i, c) in self.clouds.iter().enumerate() {
            let (r, col) = c.center;
            if !(r >= 0.0 && r < self.height as f64 && col >= 0.0 && col < self.width as f64) {
                return bad(format!(
                    "cloud {i} center ({r}, {col}) is outside the {}x{} grid",
                    self.width, self.height
                ));
            }
            if !(c.radius_px.is_finite() && c.radius_px > 0.0) {
                return bad(format!("cloud {i} radius must be positive"));
            }
            if !(c.min_bt.is_finite() && c.min_bt < self.background_bt) {
                return bad(format!("cloud {i} min_bt {} must be below background {}", c.min_bt, self.background_bt));
            }
            if !(c.hydrometeor_peak.is_finite() && c.hydrometeor_peak > 0.0) {
                return bad(format!("cloud {i} hydrometeor_peak must be positive"));
            }
        }
        Ok(())
    }

    /// Deepest cloud depression per pixel.
    fn depression_field(&self) -> Vec<f64> {
        let mut dep = vec![0.0f64; self.width * self.height];
        for cloud in &self.clouds {
            for r in 0..self.height {
                for c in 0..self.width {
                    let d = cloud.depression(self.background_bt, r, c);
                    let cell = &mut dep[r * self.width + c];
                    *cell = cell.max(d);
                }
            }
        }
        dep
    }

    /// IR window brightness temperature without noise.
    pub fn noiseless_ir(&self) -> Result<Raster2D<f64>> {
        self.validate()?;
        let bg = self.background_bt;
        let dep = self.depression_field();
        Raster2D::new(self.width, self.height, dep.iter().map(|d| bg - d).collect(), Units::Kelvin)
    }

    /// Pixels where some cloud's noiseless depression exceeds 2 K.
    pub fn intended_truth_support(&self) -> Result<CloudMask> {
        self.validate()?;
        let flags = self.depression_field().iter().map(|&d| d > TRUTH_DEPRESSION).collect();
        CloudMask::new(self.width, self.height, flags)
    }

    /// Serializes to the `key = value` text format read by [`SceneSpec::parse`].
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "width = {}", self.width);
        let _ = writeln!(s, "height = {}", self.height);
        let _ = writeln!(s, "background_bt = {}", self.background_bt);
        let _ = writeln!(s, "noise_sigma = {}", self.noise_sigma);
        let _ = writeln!(s, "rng_seed = {}", self.rng_seed);
        let channels: Vec<_> = self.channels.iter().map(|c| c.id()).collect();
        let _ = writeln!(s, "channels = {}", channels.join(", "));
        for (i, c) in self.clouds.iter().enumerate() {
            let _ = writeln!(s, "cloud.{i}.center = {}, {}", c.center.0, c.center.1);
            let _ = writeln!(s, "cloud.{i}.radius_px = {}", c.radius_px);
            let _ = writeln!(s, "cloud.{i}.min_bt = {}", c.min_bt);
            let _ = writeln!(s, "cloud.{i}.profile = gaussian");
            let _ = writeln!(s, "cloud.{i}.hydrometeor_peak = {}", c.hydrometeor_peak);
        }
        s
    }

    /// Parses `key = value` lines; `#` starts a comment. Clouds are given as
    /// `cloud.<index>.<field>` groups with indices `0..n`.
    pub fn parse(text: &str) -> Result<Self> {
        fn num<T: FromStr>(key: &str, v: &str) -> Result<T> {
            v.parse().map_err(|_| Error::SceneSpec(format!("{key}: cannot parse {v:?}")))
        }
        let mut width = None;
        let mut height = None;
        let mut spec = SceneSpec::new(1, 1);
        let mut clouds: BTreeMap<usize, BTreeMap<String, String>> = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::SceneSpec(format!("line {}: expected key = value", lineno + 1)))?;
            let (key, value) = (key.trim(), value.trim());
            match key {
                "width" => width = Some(num(key, value)?),
                "height" => height = Some(num(key, value)?),
                "background_bt" => spec.background_bt = num(key, value)?,
                "noise_sigma" => spec.noise_sigma = num(key, value)?,
                "rng_seed" => spec.rng_seed = num(key, value)?,
                "channels" => {
                    spec.channels = value.split(',').map(|c| c.trim().parse()).collect::<Result<_>>()?;
                }
                _ => {
                    let mut parts = key.splitn(3, '.');
                    let (Some("cloud"), Some(idx), Some(field)) = (parts.next(), parts.next(), parts.next()) else {
                        return Err(Error::SceneSpec(format!("line {}: unknown key {key:?}", lineno + 1)));
                    };
                    let idx: usize = num(key, idx)?;
                    if clouds.entry(idx).or_default().insert(field.to_string(), value.to_string()).is_some() {
                        return Err(Error::SceneSpec(format!("duplicate key {key:?}")));
                    }
                }
            }
        }
        spec.width = width.ok_or_else(|| Error::SceneSpec("missing width".into()))?;
        spec.height = height.ok_or_else(|| Error::SceneSpec("missing height".into()))?;
        for (expected, (idx, mut fields)) in clouds.into_iter().enumerate() {
            if idx != expected {
                return Err(Error::SceneSpec(format!(
                    "cloud indices must be 0..n, found {idx} at position {expected}"
                )));
            }
            let mut take = |f: &str| fields.remove(f);
            let center = take("center").ok_or_else(|| Error::SceneSpec(format!("cloud {idx}: missing center")))?;
            let (r, c) = center
                .split_once(',')
                .ok_or_else(|| Error::SceneSpec(format!("cloud {idx}: center must be \"row, col\"")))?;
            let mut cloud = CloudSpec::new(
                num("center", r.trim())?,
                num("center", c.trim())?,
                num(
                    "radius_px",
                    &take("radius_px").ok_or_else(|| Error::SceneSpec(format!("cloud {idx}: missing radius_px")))?,
                )?,
                num(
                    "min_bt",
                    &take("min_bt").ok_or_else(|| Error::SceneSpec(format!("cloud {idx}: missing min_bt")))?,
                )?,
            );
            if let Some(p) = take("profile") {
                cloud.profile = p.parse()?;
            }
            if let Some(p) = take("hydrometeor_peak") {
                cloud.hydrometeor_peak = num("hydrometeor_peak", &p)?;
            }
            if let Some(extra) = fields.keys().next() {
                return Err(Error::SceneSpec(format!("cloud {idx}: unknown field {extra:?}")));
            }
            spec.clouds.push(cloud);
        }
        spec.validate()?;
        Ok(spec)
    }
}

/// Shipped scene presets.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    /// One large cold cluster with warm clouds trailing around it.
    HarveyLike,
    /// Several compact deep convective cells.
    WyomingLike,
    /// Only warm clouds, 258-270 K throughout.
    WarmStratiform,
    /// Cold cells and warm clouds together.
    Mixed,
}

impl Preset {
    pub const ALL: [Preset; 4] = [Preset::HarveyLike, Preset::WyomingLike, Preset::WarmStratiform, Preset::Mixed];

    pub fn name(self) -> &'static str {
        match self {
            Preset::HarveyLike => "harvey_like",
            Preset::WyomingLike => "wyoming_like",
            Preset::WarmStratiform => "warm_stratiform",
            Preset::Mixed => "mixed",
        }
    }

    /// Cloud layout on a 256x256 grid: (row, col, radius, min_bt).
    fn layout(self) -> &'static [(f64, f64, f64, f64)] {
        match self {
            Preset::HarveyLike => &[
                (128.0, 128.0, 70.0, 200.0),
                (40.0, 205.0, 18.0, 262.0),
                (128.0, 228.0, 16.0, 266.0),
                (218.0, 200.0, 20.0, 260.0),
                (225.0, 90.0, 15.0, 268.0),
            ],
            Preset::WyomingLike => &[
                (60.0, 60.0, 16.0, 210.0),
                (70.0, 170.0, 14.0, 215.0),
                (140.0, 110.0, 18.0, 210.0),
                (200.0, 60.0, 12.0, 220.0),
                (195.0, 190.0, 15.0, 212.0),
            ],
            Preset::WarmStratiform => {
                &[(80.0, 80.0, 40.0, 262.0), (170.0, 170.0, 45.0, 258.0), (70.0, 195.0, 30.0, 264.0)]
            }
            Preset::Mixed => &[
                (60.0, 60.0, 26.0, 220.0),
                (128.0, 128.0, 20.0, 224.0),
                (185.0, 65.0, 42.0, 262.0),
                (60.0, 190.0, 38.0, 265.0),
                (190.0, 190.0, 36.0, 259.0),
            ],
        }
    }

    /// The preset laid out on a `width` x `height` grid; coordinates and
    /// radii scale with the grid.
    pub fn spec(self, width: usize, height: usize, seed: u64) -> SceneSpec {
        let sy = height as f64 / DEFAULT_PRESET_SIZE as f64;
        let sx = width as f64 / DEFAULT_PRESET_SIZE as f64;
        let sr = sx.min(sy);
        let mut spec = SceneSpec::new(width, height);
        spec.rng_seed = seed;
        spec.channels = vec![SceneChannel::IrWindow, SceneChannel::WaterVapor];
        spec.clouds = self
            .layout()
            .iter()
            .map(|&(r, c, radius, min_bt)| CloudSpec::new(r * sy, c * sx, radius * sr, min_bt))
            .collect();
        spec
    }

    pub fn default_spec(self, seed: u64) -> SceneSpec {
        self.spec(DEFAULT_PRESET_SIZE, DEFAULT_PRESET_SIZE, seed)
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Preset::ALL.into_iter().find(|p| p.name() == s).ok_or_else(|| Error::SceneSpec(format!("unknown preset {s:?}")))
    }
}

fn box3(values: &[f64], width: usize, height: usize) -> Vec<f64> {
    let mut out = vec![0.0; values.len()];
    for r in 0..height {
        for c in 0..width {
            let (mut sum, mut n) = (0.0, 0.0);
            for rr in r.saturating_sub(1)..=(r + 1).min(height - 1) {
                for cc in c.saturating_sub(1)..=(c + 1).min(width - 1) {
                    sum += values[rr * width + cc];
                    n += 1.0;
                }
            }
            out[r * width + c] = sum / n;
        }
    }
    out
}

/// Renders the brightness-temperature channels and hydrometeor volume.
pub fn generate_scene<T: Scalar>(spec: &SceneSpec) -> Result<(MultiChannelImage<T>, HydrometeorVolume<T>)> {
    spec.validate()?;
    let (w, h) = (spec.width, spec.height);
    let bg = spec.background_bt;
    let dep = spec.depression_field();

    let mut rng = ChaCha8Rng::seed_from_u64(spec.rng_seed);
    let normal = Normal::new(0.0, spec.noise_sigma).map_err(|e| Error::SceneSpec(e.to_string()))?;
    let mut noise = |n: usize| -> Vec<f64> {
        if spec.noise_sigma == 0.0 {
            vec![0.0; n]
        } else {
            (0..n).map(|_| normal.sample(&mut rng)).collect()
        }
    };

    let ir_noise = noise(w * h);
    let ir: Vec<T> = dep.iter().zip(&ir_noise).map(|(d, n)| T::lit(bg - d + n)).collect();
    let mut channels = Vec::with_capacity(spec.channels.len());
    let wants_wv = spec.channels.contains(&SceneChannel::WaterVapor);
    let wv: Option<Vec<T>> = wants_wv.then(|| {
        let smooth = box3(&dep, w, h);
        let wv_noise = noise(w * h);
        smooth
            .iter()
            .zip(&wv_noise)
            .map(|(s, n)| T::lit(bg + WATER_VAPOR_OFFSET - WATER_VAPOR_DAMPING * s + n))
            .collect()
    });
    for &ch in &spec.channels {
        let values = match ch {
            SceneChannel::IrWindow => ir.clone(),
            SceneChannel::WaterVapor => wv.clone().expect("generated above"),
        };
        channels.push((ChannelId::new(ch.id())?, Raster2D::new(w, h, values, Units::Kelvin)?));
    }
    let image = MultiChannelImage::new(channels)?;

    let species = vec![Species::CloudWater, Species::CloudIce];
    let mut columns = vec![[0.0f64; 2]; w * h];
    for cloud in &spec.clouds {
        let depth = bg - cloud.min_bt;
        let sp = usize::from(cloud.min_bt < ICE_BELOW);
        for r in 0..h {
            for c in 0..w {
                let d = cloud.depression(bg, r, c);
                if d > TRUTH_DEPRESSION {
                    columns[r * w + c][sp] += (cloud.hydrometeor_peak * d / depth).max(MIN_SUPPORT_MIXING_RATIO);
                }
            }
        }
    }
    let levels = LEVEL_WEIGHTS.len();
    let mut values = vec![T::zero(); 2 * levels * w * h];
    for sp in 0..2 {
        for (level, weight) in LEVEL_WEIGHTS.iter().enumerate() {
            let start = (sp * levels + level) * w * h;
            for (v, col) in values[start..start + w * h].iter_mut().zip(&columns) {
                *v = T::lit(col[sp] * weight);
            }
        }
    }
    let volume = HydrometeorVolume::new(w, h, levels, species, values)?;
    Ok((image, volume))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::truth::{derive_truth_mask, DEFAULT_TRUTH_THRESHOLD};

    #[test]
    fn empty_scene_is_clear() {
        let mut spec = SceneSpec::new(20, 10);
        spec.noise_sigma = 0.0;
        let (img, vol) = generate_scene::<f64>(&spec).unwrap();
        assert!(img.channels()[0].1.values().iter().all(|&v| v == 290.0));
        assert_eq!(derive_truth_mask(&vol, DEFAULT_TRUTH_THRESHOLD).cloudy_count(), 0);
    }

    #[test]
    fn warm_clouds_stay_above_253() {
        let mut spec = Preset::WarmStratiform.default_spec(1);
        spec.noise_sigma = 0.0;
        let ir = spec.noiseless_ir().unwrap();
        let (_, vol) = generate_scene::<f64>(&spec).unwrap();
        let truth = derive_truth_mask(&vol, DEFAULT_TRUTH_THRESHOLD);
        assert!(truth.cloudy_count() > 0);
        for (&t, &cloudy) in ir.values().iter().zip(truth.flags()) {
            if cloudy {
                assert!(t > 253.0 && (258.0..=270.0).contains(&t), "{t}");
            }
        }
    }

    #[test]
    fn truth_matches_intended_support() {
        for preset in Preset::ALL {
            let spec = preset.spec(96, 80, 3);
            let (_, vol) = generate_scene::<f64>(&spec).unwrap();
            assert_eq!(
                derive_truth_mask(&vol, DEFAULT_TRUTH_THRESHOLD),
                spec.intended_truth_support().unwrap(),
                "{}",
                preset.name()
            );
        }
    }

    #[test]
    fn deterministic_and_seed_sensitive() {
        let spec = Preset::Mixed.spec(64, 64, 42);
        let a = generate_scene::<f64>(&spec).unwrap();
        let b = generate_scene::<f64>(&spec).unwrap();
        assert_eq!(a, b);
        let other = generate_scene::<f64>(&Preset::Mixed.spec(64, 64, 43)).unwrap();
        assert_ne!(a.0, other.0);
    }

    #[test]
    fn center_outside_grid_rejected() {
        let mut spec = SceneSpec::new(10, 10);
        spec.clouds.push(CloudSpec::new(10.0, 5.0, 3.0, 250.0));
        assert!(matches!(generate_scene::<f64>(&spec), Err(Error::SceneSpec(_))));
        spec.clouds[0] = CloudSpec::new(5.0, 5.0, 3.0, 295.0);
        assert!(spec.validate().is_err());
    }

    #[test]
    fn text_round_trip() {
        let spec = Preset::HarveyLike.spec(200, 150, 7);
        let parsed = SceneSpec::parse(&spec.to_text()).unwrap();
        assert_eq!(parsed, spec);
    }

    #[test]
    fn parse_errors() {
        assert!(SceneSpec::parse("height = 3").is_err());
        assert!(SceneSpec::parse("width = 3\nheight = 3\nbogus = 1").is_err());
        assert!(SceneSpec::parse(
            "width = 3\nheight = 3\ncloud.1.center = 1, 1\ncloud.1.radius_px = 1\ncloud.1.min_bt = 250"
        )
        .is_err());
        let ok = SceneSpec::parse("# comment\nwidth = 3\nheight = 3\ncloud.0.center = 1, 1 # middle\ncloud.0.radius_px = 1\ncloud.0.min_bt = 250\n").unwrap();
        assert_eq!(ok.clouds.len(), 1);
        assert_eq!(ok.clouds[0].hydrometeor_peak, DEFAULT_HYDROMETEOR_PEAK);
    }

    #[test]
    fn water_vapor_channel_is_offset_and_damped() {
        let mut spec = SceneSpec::new(30, 30);
        spec.noise_sigma = 0.0;
        spec.channels = vec![SceneChannel::IrWindow, SceneChannel::WaterVapor];
        spec.clouds.push(CloudSpec::new(15.0, 15.0, 10.0, 240.0));
        let (img, _) = generate_scene::<f64>(&spec).unwrap();
        let wv = img.channel("water_vapor").unwrap();
        assert_eq!(wv.get(0, 0), 300.0);
        assert!((wv.get(15, 15) - (300.0 - 0.6 * 50.0)).abs() < 1.0);
    }

    #[test]
    fn preset_names() {
        for p in Preset::ALL {
            assert_eq!(p.name().parse::<Preset>().unwrap(), p);
        }
        assert!("nope".parse::<Preset>().is_err());
    }
}
