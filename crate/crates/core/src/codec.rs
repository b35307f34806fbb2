//! GMS1 raster and GMSV volume binary formats.
//!
//! GMS1 layout, all integers little-endian:
//!
//! | offset | size   | field                                  |
//! |--------|--------|----------------------------------------|
//! | 0      | 4      | magic `GMS1`                           |
//! | 4      | 1      | version (1)                            |
//! | 5      | 1      | dtype: 1 = f32, 2 = u8, 3 = u32        |
//! | 6      | 2      | reserved, zero                         |
//! | 8      | 4      | width                                  |
//! | 12     | 4      | height                                 |
//! | 16     | 4      | channel count C                        |
//! | 20     | 16 × C | channel ids, ASCII, zero-padded        |
//! | ...    |        | payload, channel-major then row-major  |
//!
//! GMSV replaces the channel count with `level_count` and `species_count`
//! (offsets 16 and 20), carries one 16-byte id per species from offset 24,
//! and stores an f32 payload ordered level, species, row, column (levels
//! vary slowest).

use std::fs;
use std::path::Path;

use crate::error::{Error, FormatError, Result};
use crate::grid::{ChannelId, CloudMask, MarkerMap, MultiChannelImage, Raster2D, SegmentMap, Units};
use crate::scalar::Scalar;

pub const RASTER_MAGIC: &[u8; 4] = b"GMS1";
pub const VOLUME_MAGIC: &[u8; 4] = b"GMSV";
pub const VERSION: u8 = 1;

const ID_LEN: usize = ChannelId::MAX_LEN;
const RASTER_HEADER_LEN: usize = 20;
const VOLUME_HEADER_LEN: usize = 24;

pub const SEGMENTS_ID: &str = "segments";
pub const MARKERS_ID: &str = "markers";
pub const MASK_ID: &str = "cloud_mask";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u8)]
pub enum Dtype {
    F32 = 1,
    U8 = 2,
    U32 = 3,
}

impl Dtype {
    pub fn code(self) -> u8 {
        self as u8
    }

    pub fn from_code(code: u8) -> Result<Self, FormatError> {
        match code {
            1 => Ok(Dtype::F32),
            2 => Ok(Dtype::U8),
            3 => Ok(Dtype::U32),
            other => Err(FormatError::UnknownDtype(other)),
        }
    }

    pub fn size(self) -> usize {
        match self {
            Dtype::F32 | Dtype::U32 => 4,
            Dtype::U8 => 1,
        }
    }
}

/// Flattened payload, channel-major then row-major.
#[derive(Debug, Clone, PartialEq)]
pub enum Payload {
    F32(Vec<f32>),
    U8(Vec<u8>),
    U32(Vec<u32>),
}

impl Payload {
    pub fn dtype(&self) -> Dtype {
        match self {
            Payload::F32(_) => Dtype::F32,
            Payload::U8(_) => Dtype::U8,
            Payload::U32(_) => Dtype::U32,
        }
    }

    pub fn len(&self) -> usize {
        match self {
            Payload::F32(v) => v.len(),
            Payload::U8(v) => v.len(),
            Payload::U32(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Decoded contents of a GMS1 file, independent of what the channels mean.
#[derive(Debug, Clone, PartialEq)]
pub struct GmsFile {
    pub width: u32,
    pub height: u32,
    pub ids: Vec<ChannelId>,
    pub payload: Payload,
}

/// Decoded contents of a GMSV file; `data` keeps the on-disk order
/// `[level][species][row][col]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GmsVolume {
    pub width: u32,
    pub height: u32,
    pub levels: u32,
    pub species: Vec<ChannelId>,
    pub data: Vec<f32>,
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], FormatError> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or(FormatError::Truncated { expected: self.pos.saturating_add(n), found: self.bytes.len() })?;
        let out = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    fn u8(&mut self) -> Result<u8, FormatError> {
        Ok(self.take(1)?[0])
    }

    fn u16(&mut self) -> Result<u16, FormatError> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }

    fn u32(&mut self) -> Result<u32, FormatError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
}

fn check_magic(found: &[u8], expected: &'static [u8; 4]) -> Result<(), FormatError> {
    if found != expected {
        return Err(FormatError::BadMagic {
            found: found.try_into().unwrap(),
            expected: std::str::from_utf8(expected).unwrap(),
        });
    }
    Ok(())
}

fn decode_id(raw: &[u8]) -> Result<ChannelId, FormatError> {
    let end = raw.iter().position(|&b| b == 0).unwrap_or(raw.len());
    let invalid = || FormatError::InvalidChannelId(String::from_utf8_lossy(raw).into_owned());
    if end == 0 || raw[end..].iter().any(|&b| b != 0) || !raw[..end].is_ascii() {
        return Err(invalid());
    }
    ChannelId::new(std::str::from_utf8(&raw[..end]).unwrap()).map_err(|_| invalid())
}

fn encode_id(out: &mut Vec<u8>, id: &ChannelId) {
    let mut buf = [0u8; ID_LEN];
    buf[..id.as_str().len()].copy_from_slice(id.as_str().as_bytes());
    out.extend_from_slice(&buf);
}

/// Element count `a * b * c * d` as a byte length of `elem` bytes each,
/// rejecting anything that cannot be addressed.
fn payload_len(dims: &[u32], elem: usize) -> Result<(usize, usize), FormatError> {
    let mut count: u64 = 1;
    for &d in dims {
        count = count.checked_mul(d as u64).ok_or_else(|| FormatError::DimensionOverflow(format!("{dims:?}")))?;
    }
    let bytes = count
        .checked_mul(elem as u64)
        .filter(|&b| b <= isize::MAX as u64)
        .ok_or_else(|| FormatError::DimensionOverflow(format!("{dims:?} x {elem} bytes")))?;
    Ok((count as usize, bytes as usize))
}

fn decode_f32s(raw: &[u8]) -> Result<Vec<f32>, FormatError> {
    raw.chunks_exact(4)
        .enumerate()
        .map(|(index, b)| {
            let v = f32::from_le_bytes(b.try_into().unwrap());
            if v.is_finite() {
                Ok(v)
            } else {
                Err(FormatError::NonFinite { index })
            }
        })
        .collect()
}

fn finish(r: &Reader<'_>) -> Result<(), FormatError> {
    match r.bytes.len() - r.pos {
        0 => Ok(()),
        extra => Err(FormatError::TrailingBytes(extra)),
    }
}

impl GmsFile {
    pub fn decode(bytes: &[u8]) -> Result<Self, FormatError> {
        let mut r = Reader { bytes, pos: 0 };
        if bytes.len() < 4 {
            return Err(FormatError::Truncated { expected: RASTER_HEADER_LEN, found: bytes.len() });
        }
        check_magic(r.take(4)?, RASTER_MAGIC)?;
        let version = r.u8()?;
        if version != VERSION {
            return Err(FormatError::UnsupportedVersion(version));
        }
        let dtype = Dtype::from_code(r.u8()?)?;
        let reserved = r.u16()?;
        if reserved != 0 {
            return Err(FormatError::NonZeroReserved(reserved));
        }
        let width = r.u32()?;
        let height = r.u32()?;
        let channels = r.u32()?;
        for (value, name) in [(width, "width"), (height, "height"), (channels, "channel count")] {
            if value == 0 {
                return Err(FormatError::EmptyDimension(name));
            }
        }
        let (_, id_bytes) = payload_len(&[channels], ID_LEN)?;
        let (count, data_bytes) = payload_len(&[channels, height, width], dtype.size())?;
        let expected = RASTER_HEADER_LEN
            .checked_add(id_bytes)
            .and_then(|n| n.checked_add(data_bytes))
            .ok_or_else(|| FormatError::DimensionOverflow("header plus payload".into()))?;
        if bytes.len() < expected {
            return Err(FormatError::Truncated { expected, found: bytes.len() });
        }
        let ids = r.take(id_bytes)?.chunks_exact(ID_LEN).map(decode_id).collect::<Result<Vec<_>, _>>()?;
        let raw = r.take(data_bytes)?;
        let payload = match dtype {
            Dtype::F32 => Payload::F32(decode_f32s(raw)?),
            Dtype::U8 => Payload::U8(raw.to_vec()),
            Dtype::U32 => {
                Payload::U32(raw.chunks_exact(4).map(|b| u32::from_le_bytes(b.try_into().unwrap())).collect())
            }
        };
        debug_assert_eq!(payload.len(), count);
        finish(&r)?;
        Ok(Self { width, height, ids, payload })
    }

    pub fn encode(&self) -> Result<Vec<u8>> {
        let n = self.width as usize * self.height as usize * self.ids.len();
        if self.ids.is_empty() {
            return Err(Error::InvalidImage("cannot encode a file with no channels".into()));
        }
        if self.width == 0 || self.height == 0 || self.payload.len() != n {
            return Err(Error::InvalidImage(format!(
                "payload of {} elements does not match {}x{}x{}",
                self.payload.len(),
                self.width,
                self.height,
                self.ids.len()
            )));
        }
        let mut out = Vec::with_capacity(RASTER_HEADER_LEN + ID_LEN * self.ids.len() + n * self.payload.dtype().size());
        out.extend_from_slice(RASTER_MAGIC);
        out.push(VERSION);
        out.push(self.payload.dtype().code());
        out.extend_from_slice(&0u16.to_le_bytes());
        out.extend_from_slice(&self.width.to_le_bytes());
        out.extend_from_slice(&self.height.to_le_bytes());
        out.extend_from_slice(&(self.ids.len() as u32).to_le_bytes());
        for id in &self.ids {
            encode_id(&mut out, id);
        }
        match &self.payload {
            Payload::F32(v) => {
                if let Some(index) = v.iter().position(|x| !x.is_finite()) {
                    return Err(FormatError::NonFinite { index }.into());
                }
                v.iter().for_each(|x| out.extend_from_slice(&x.to_le_bytes()))
            }
            Payload::U8(v) => out.extend_from_slice(v),
            Payload::U32(v) => v.iter().for_each(|x| out.extend_from_slice(&x.to_le_bytes())),
        }
        Ok(out)
    }

    fn dims(&self) -> (usize, usize) {
        (self.width as usize, self.height as usize)
    }

    fn single_channel(&self, kind: &'static str) -> Result<(), FormatError> {
        if self.ids.len() != 1 {
            return Err(FormatError::InvalidPayload {
                kind,
                reason: format!("{} channels, expected 1", self.ids.len()),
            });
        }
        Ok(())
    }

    pub fn into_image<T: Scalar>(self) -> Result<MultiChannelImage<T>, FormatError> {
        let (w, h) = self.dims();
        let Payload::F32(data) = self.payload else {
            return Err(FormatError::WrongDtype { found: self.payload.dtype().code(), expected: Dtype::F32.code() });
        };
        let invalid = |e: Error| FormatError::InvalidPayload { kind: "image", reason: e.to_string() };
        let channels = self
            .ids
            .into_iter()
            .zip(data.chunks_exact(w * h))
            .map(|(id, chunk)| {
                let values = chunk.iter().map(|&v| T::lit(v as f64)).collect();
                Raster2D::new(w, h, values, Units::Kelvin).map(|r| (id, r))
            })
            .collect::<Result<Vec<_>>>()
            .map_err(invalid)?;
        MultiChannelImage::new(channels).map_err(invalid)
    }

    fn into_u32_labels(self, kind: &'static str) -> Result<(usize, usize, Vec<u32>), FormatError> {
        self.single_channel(kind)?;
        let (w, h) = self.dims();
        match self.payload {
            Payload::U32(labels) => Ok((w, h, labels)),
            other => Err(FormatError::WrongDtype { found: other.dtype().code(), expected: Dtype::U32.code() }),
        }
    }

    pub fn into_segment_map(self) -> Result<SegmentMap, FormatError> {
        let (w, h, labels) = self.into_u32_labels("segment map")?;
        SegmentMap::new(w, h, labels)
            .map_err(|e| FormatError::InvalidPayload { kind: "segment map", reason: e.to_string() })
    }

    pub fn into_marker_map(self) -> Result<MarkerMap, FormatError> {
        let (w, h, labels) = self.into_u32_labels("marker map")?;
        MarkerMap::new(w, h, labels)
            .map_err(|e| FormatError::InvalidPayload { kind: "marker map", reason: e.to_string() })
    }

    pub fn into_cloud_mask(self) -> Result<CloudMask, FormatError> {
        self.single_channel("cloud mask")?;
        let (w, h) = self.dims();
        let Payload::U8(bytes) = self.payload else {
            return Err(FormatError::WrongDtype { found: self.payload.dtype().code(), expected: Dtype::U8.code() });
        };
        let flags = bytes
            .iter()
            .enumerate()
            .map(|(index, &value)| match value {
                0 => Ok(false),
                1 => Ok(true),
                value => Err(FormatError::InvalidMaskByte { index, value }),
            })
            .collect::<Result<Vec<_>, _>>()?;
        CloudMask::new(w, h, flags)
            .map_err(|e| FormatError::InvalidPayload { kind: "cloud mask", reason: e.to_string() })
    }
}

fn dim_u32(v: usize, what: &str) -> Result<u32> {
    u32::try_from(v).map_err(|_| Error::InvalidImage(format!("{what} {v} does not fit the file format")))
}

/// Conversion of a typed raster into its GMS1 representation.
pub trait ToGmsFile {
    fn to_gms_file(&self) -> Result<GmsFile>;
}

impl ToGmsFile for GmsFile {
    fn to_gms_file(&self) -> Result<GmsFile> {
        Ok(self.clone())
    }
}

impl<T: Scalar> ToGmsFile for MultiChannelImage<T> {
    fn to_gms_file(&self) -> Result<GmsFile> {
        let mut data = Vec::with_capacity(self.width() * self.height() * self.channel_count());
        for (_, raster) in self.channels() {
            data.extend(raster.values().iter().map(|v| v.as_f32()));
        }
        Ok(GmsFile {
            width: dim_u32(self.width(), "width")?,
            height: dim_u32(self.height(), "height")?,
            ids: self.channels().iter().map(|(id, _)| id.clone()).collect(),
            payload: Payload::F32(data),
        })
    }
}

fn single_id(id: &str) -> Vec<ChannelId> {
    vec![ChannelId::new(id).expect("static channel id")]
}

impl ToGmsFile for SegmentMap {
    fn to_gms_file(&self) -> Result<GmsFile> {
        Ok(GmsFile {
            width: dim_u32(self.width(), "width")?,
            height: dim_u32(self.height(), "height")?,
            ids: single_id(SEGMENTS_ID),
            payload: Payload::U32(self.labels().to_vec()),
        })
    }
}

impl ToGmsFile for MarkerMap {
    fn to_gms_file(&self) -> Result<GmsFile> {
        Ok(GmsFile {
            width: dim_u32(self.width(), "width")?,
            height: dim_u32(self.height(), "height")?,
            ids: single_id(MARKERS_ID),
            payload: Payload::U32(self.labels().to_vec()),
        })
    }
}

impl ToGmsFile for CloudMask {
    fn to_gms_file(&self) -> Result<GmsFile> {
        Ok(GmsFile {
            width: dim_u32(self.width(), "width")?,
            height: dim_u32(self.height(), "height")?,
            ids: single_id(MASK_ID),
            payload: Payload::U8(self.flags().iter().map(|&f| f as u8).collect()),
        })
    }
}

impl GmsVolume {
    pub fn decode(bytes: &[u8]) -> Result<Self, FormatError> {
        let mut r = Reader { bytes, pos: 0 };
        if bytes.len() < 4 {
            return Err(FormatError::Truncated { expected: VOLUME_HEADER_LEN, found: bytes.len() });
        }
        check_magic(r.take(4)?, VOLUME_MAGIC)?;
        let version = r.u8()?;
        if version != VERSION {
            return Err(FormatError::UnsupportedVersion(version));
        }
        let dtype = Dtype::from_code(r.u8()?)?;
        if dtype != Dtype::F32 {
            return Err(FormatError::WrongDtype { found: dtype.code(), expected: Dtype::F32.code() });
        }
        let reserved = r.u16()?;
        if reserved != 0 {
            return Err(FormatError::NonZeroReserved(reserved));
        }
        let width = r.u32()?;
        let height = r.u32()?;
        let levels = r.u32()?;
        let species = r.u32()?;
        for (value, name) in [(width, "width"), (height, "height"), (levels, "level count"), (species, "species count")]
        {
            if value == 0 {
                return Err(FormatError::EmptyDimension(name));
            }
        }
        let (_, id_bytes) = payload_len(&[species], ID_LEN)?;
        let (_, data_bytes) = payload_len(&[levels, species, height, width], 4)?;
        let expected = VOLUME_HEADER_LEN
            .checked_add(id_bytes)
            .and_then(|n| n.checked_add(data_bytes))
            .ok_or_else(|| FormatError::DimensionOverflow("header plus payload".into()))?;
        if bytes.len() < expected {
            return Err(FormatError::Truncated { expected, found: bytes.len() });
        }
        let species = r.take(id_bytes)?.chunks_exact(ID_LEN).map(decode_id).collect::<Result<Vec<_>, _>>()?;
        let data = decode_f32s(r.take(data_bytes)?)?;
        finish(&r)?;
        Ok(Self { width, height, levels, species, data })
    }

    pub fn encode(&self) -> Result<Vec<u8>> {
        let n = self.width as usize * self.height as usize * self.levels as usize * self.species.len();
        if self.species.is_empty() || self.levels == 0 || self.width == 0 || self.height == 0 || self.data.len() != n {
            return Err(Error::InvalidImage(format!(
                "volume payload of {} elements does not match {}x{}x{}x{}",
                self.data.len(),
                self.width,
                self.height,
                self.levels,
                self.species.len()
            )));
        }
        if let Some(index) = self.data.iter().position(|x| !x.is_finite()) {
            return Err(FormatError::NonFinite { index }.into());
        }
        let mut out = Vec::with_capacity(VOLUME_HEADER_LEN + ID_LEN * self.species.len() + 4 * n);
        out.extend_from_slice(VOLUME_MAGIC);
        out.push(VERSION);
        out.push(Dtype::F32.code());
        out.extend_from_slice(&0u16.to_le_bytes());
        out.extend_from_slice(&self.width.to_le_bytes());
        out.extend_from_slice(&self.height.to_le_bytes());
        out.extend_from_slice(&self.levels.to_le_bytes());
        out.extend_from_slice(&(self.species.len() as u32).to_le_bytes());
        for id in &self.species {
            encode_id(&mut out, id);
        }
        self.data.iter().for_each(|x| out.extend_from_slice(&x.to_le_bytes()));
        Ok(out)
    }
}

fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|source| Error::Io { path: path.to_path_buf(), source })
}

fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|source| Error::Io { path: path.to_path_buf(), source })
}

fn at_path(path: &Path) -> impl FnOnce(FormatError) -> Error + '_ {
    move |source| Error::Format { path: path.to_path_buf(), source }
}

pub fn read_file(path: impl AsRef<Path>) -> Result<GmsFile> {
    let path = path.as_ref();
    GmsFile::decode(&read_bytes(path)?).map_err(at_path(path))
}

/// Reads a GMS1 f32 file as a multichannel image, channels in file order.
pub fn read_raster_file<T: Scalar>(path: impl AsRef<Path>) -> Result<MultiChannelImage<T>> {
    let path = path.as_ref();
    read_file(path)?.into_image().map_err(at_path(path))
}

pub fn read_segment_map(path: impl AsRef<Path>) -> Result<SegmentMap> {
    let path = path.as_ref();
    read_file(path)?.into_segment_map().map_err(at_path(path))
}

pub fn read_cloud_mask(path: impl AsRef<Path>) -> Result<CloudMask> {
    let path = path.as_ref();
    read_file(path)?.into_cloud_mask().map_err(at_path(path))
}

/// Writes an image, segment map, marker map or cloud mask as GMS1.
pub fn write_raster_file<R: ToGmsFile + ?Sized>(item: &R, path: impl AsRef<Path>) -> Result<()> {
    write_bytes(path.as_ref(), &item.to_gms_file()?.encode()?)
}

pub fn read_volume_file(path: impl AsRef<Path>) -> Result<GmsVolume> {
    let path = path.as_ref();
    GmsVolume::decode(&read_bytes(path)?).map_err(at_path(path))
}

pub fn write_volume_file(volume: &GmsVolume, path: impl AsRef<Path>) -> Result<()> {
    write_bytes(path.as_ref(), &volume.encode()?)
}
