//! Reference cloud mask from model hydrometeor mixing ratios.

use std::str::FromStr;

use crate::codec::GmsVolume;
use crate::error::{Error, FormatError, Result};
use crate::grid::{ChannelId, CloudMask};
use crate::scalar::Scalar;

/// Mixing ratio (kg/kg) a column must exceed to count as cloudy.
pub const DEFAULT_TRUTH_THRESHOLD: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Species {
    CloudWater,
    CloudIce,
    Rain,
    Snow,
    Graupel,
}

impl Species {
    pub const ALL: [Species; 5] =
        [Species::CloudWater, Species::CloudIce, Species::Rain, Species::Snow, Species::Graupel];

    pub fn id(self) -> &'static str {
        match self {
            Species::CloudWater => "cloud_water",
            Species::CloudIce => "cloud_ice",
            Species::Rain => "rain",
            Species::Snow => "snow",
            Species::Graupel => "graupel",
        }
    }
}

impl FromStr for Species {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Species::ALL
            .into_iter()
            .find(|sp| sp.id() == s)
            .ok_or_else(|| Error::InvalidImage(format!("unknown hydrometeor species {s:?}")))
    }
}

/// Mixing ratios laid out `[species][level][row][col]`.
#[derive(Debug, Clone, PartialEq)]
pub struct HydrometeorVolume<T> {
    width: usize,
    height: usize,
    levels: usize,
    species: Vec<Species>,
    values: Vec<T>,
}

impl<T: Scalar> HydrometeorVolume<T> {
    pub fn new(width: usize, height: usize, levels: usize, species: Vec<Species>, values: Vec<T>) -> Result<Self> {
        if width == 0 || height == 0 || levels == 0 || species.is_empty() {
            return Err(Error::InvalidImage("volume needs positive width, height, levels and species".into()));
        }
        if (1..species.len()).any(|i| species[..i].contains(&species[i])) {
            return Err(Error::InvalidImage(format!("duplicate species in {species:?}")));
        }
        let n = [width, height, levels, species.len()]
            .iter()
            .try_fold(1usize, |acc, &d| acc.checked_mul(d))
            .ok_or_else(|| Error::InvalidImage("volume dimensions overflow".into()))?;
        if values.len() != n {
            return Err(Error::InvalidImage(format!("volume needs {n} values, got {}", values.len())));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite() || *v < T::zero()) {
            return Err(Error::InvalidImage(format!("mixing ratio at element {i} is negative or non-finite")));
        }
        Ok(Self { width, height, levels, species, values })
    }

    pub fn zeros(width: usize, height: usize, levels: usize, species: Vec<Species>) -> Result<Self> {
        let n = width * height * levels * species.len();
        Self::new(width, height, levels, species, vec![T::zero(); n])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn levels(&self) -> usize {
        self.levels
    }

    pub fn species(&self) -> &[Species] {
        &self.species
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    #[inline]
    fn index(&self, species: usize, level: usize, pixel: usize) -> usize {
        (species * self.levels + level) * self.width * self.height + pixel
    }

    pub fn get(&self, species: usize, level: usize, row: usize, col: usize) -> T {
        self.values[self.index(species, level, row * self.width + col)]
    }

    /// Sets one mixing ratio; negative or non-finite values are rejected.
    pub fn set(&mut self, species: usize, level: usize, row: usize, col: usize, value: T) -> Result<()> {
        if !value.is_finite() || value < T::zero() {
            return Err(Error::InvalidImage(format!("invalid mixing ratio {value}")));
        }
        let i = self.index(species, level, row * self.width + col);
        self.values[i] = value;
        Ok(())
    }

    /// Vertical maximum of the species-summed mixing ratio, per column.
    pub fn column_max_total(&self) -> Vec<T> {
        let plane = self.width * self.height;
        let mut out = vec![T::zero(); plane];
        let mut level_sum = vec![T::zero(); plane];
        for level in 0..self.levels {
            level_sum.iter_mut().for_each(|s| *s = T::zero());
            for sp in 0..self.species.len() {
                let start = self.index(sp, level, 0);
                for (s, &v) in level_sum.iter_mut().zip(&self.values[start..start + plane]) {
                    *s = *s + v;
                }
            }
            for (o, &s) in out.iter_mut().zip(&level_sum) {
                *o = o.max(s);
            }
        }
        out
    }

    pub fn to_gms_volume(&self) -> Result<GmsVolume> {
        let plane = self.width * self.height;
        let mut data = Vec::with_capacity(self.values.len());
        for level in 0..self.levels {
            for sp in 0..self.species.len() {
                let start = self.index(sp, level, 0);
                data.extend(self.values[start..start + plane].iter().map(|v| v.as_f32()));
            }
        }
        let dim = |v: usize| u32::try_from(v).map_err(|_| Error::InvalidImage(format!("dimension {v} too large")));
        Ok(GmsVolume {
            width: dim(self.width)?,
            height: dim(self.height)?,
            levels: dim(self.levels)?,
            species: self.species.iter().map(|s| ChannelId::new(s.id())).collect::<Result<_>>()?,
            data,
        })
    }

    pub fn from_gms_volume(vol: &GmsVolume) -> Result<Self> {
        let species = vol
            .species
            .iter()
            .map(|id| id.as_str().parse())
            .collect::<Result<Vec<Species>>>()
            .map_err(|e| FormatError::InvalidPayload { kind: "hydrometeor volume", reason: e.to_string() })?;
        let (w, h, levels) = (vol.width as usize, vol.height as usize, vol.levels as usize);
        let plane = w * h;
        let mut values = vec![T::zero(); vol.data.len()];
        for level in 0..levels {
            for sp in 0..species.len() {
                let src = (level * species.len() + sp) * plane;
                let dst = (sp * levels + level) * plane;
                for (d, &s) in values[dst..dst + plane].iter_mut().zip(&vol.data[src..src + plane]) {
                    *d = T::lit(s as f64);
                }
            }
        }
        Self::new(w, h, levels, species, values)
            .map_err(|e| FormatError::InvalidPayload { kind: "hydrometeor volume", reason: e.to_string() }.into())
    }
}

/// Cloudy where the vertical maximum of the species-summed mixing ratio
/// exceeds `threshold` (kg/kg).
pub fn derive_truth_mask<T: Scalar>(vol: &HydrometeorVolume<T>, threshold: f64) -> CloudMask {
    let t = T::lit(threshold);
    let flags = vol.column_max_total().into_iter().map(|q| q > t).collect();
    CloudMask::new(vol.width, vol.height, flags).expect("volume dimensions are valid")
}
