//! Uncompressed MetaImage (`.mhd` + `.raw`) subset.
//!
//! Only 3-D little-endian volumes with a detached (or `LOCAL`) payload are
//! supported. Element types: `MET_UCHAR`, `MET_SHORT`, `MET_FLOAT` and
//! `MET_DOUBLE`.

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::model::volume::{Dims, ImageVolume, RoiMask, Spacing};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ElementType {
    UChar,
    Short,
    Float,
    Double,
}

impl ElementType {
    fn parse(s: &str) -> Option<Self> {
        match s {
            "MET_UCHAR" => Some(Self::UChar),
            "MET_SHORT" => Some(Self::Short),
            "MET_FLOAT" => Some(Self::Float),
            "MET_DOUBLE" => Some(Self::Double),
            _ => None,
        }
    }

    fn tag(self) -> &'static str {
        match self {
            Self::UChar => "MET_UCHAR",
            Self::Short => "MET_SHORT",
            Self::Float => "MET_FLOAT",
            Self::Double => "MET_DOUBLE",
        }
    }

    fn width(self) -> usize {
        match self {
            Self::UChar => 1,
            Self::Short => 2,
            Self::Float => 4,
            Self::Double => 8,
        }
    }
}

/// Parsed header of a MetaImage file.
#[derive(Debug, Clone, PartialEq)]
pub struct Header {
    pub dims: Dims,
    pub spacing: Spacing,
    pub element_type: ElementType,
    pub data_file: PathBuf,
    local: bool,
    header_len: usize,
}

fn header_err(path: &Path, msg: impl Into<String>) -> Error {
    Error::Header {
        path: path.to_path_buf(),
        msg: msg.into(),
    }
}

fn parse_triplet<T: std::str::FromStr>(path: &Path, key: &str, v: &str) -> Result<[T; 3]> {
    let parts: Vec<T> = v
        .split_whitespace()
        .map(|p| p.parse::<T>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| header_err(path, format!("cannot parse {key} = {v}")))?;
    match <[T; 3]>::try_from(parts) {
        Ok(a) => Ok(a),
        Err(_) => Err(header_err(path, format!("{key} must have 3 entries"))),
    }
}

/// Reads and validates the header only.
pub fn read_header(path: &Path) -> Result<Header> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    parse_header(path, &bytes)
}

fn parse_header(path: &Path, bytes: &[u8]) -> Result<Header> {
    let mut kv = HashMap::new();
    let mut offset = 0usize;
    let mut local = false;
    for line in bytes.split_inclusive(|&b| b == b'\n') {
        offset += line.len();
        let text = std::str::from_utf8(line)
            .map_err(|_| header_err(path, "header is not ASCII"))?
            .trim();
        if text.is_empty() {
            continue;
        }
        let (k, v) = text
            .split_once('=')
            .ok_or_else(|| header_err(path, format!("expected `key = value`, got `{text}`")))?;
        let (k, v) = (k.trim().to_string(), v.trim().to_string());
        let is_data = k == "ElementDataFile";
        if is_data && v == "LOCAL" {
            local = true;
        }
        kv.insert(k, v);
        if is_data {
            break;
        }
    }
    let get = |k: &str| {
        kv.get(k)
            .map(String::as_str)
            .ok_or_else(|| header_err(path, format!("missing key {k}")))
    };
    let ndims: usize = get("NDims")?
        .parse()
        .map_err(|_| header_err(path, "NDims is not an integer"))?;
    if ndims != 3 {
        return Err(header_err(path, format!("NDims must be 3, got {ndims}")));
    }
    for key in ["BinaryDataByteOrderMSB", "ElementByteOrderMSB"] {
        if let Some(v) = kv.get(key) {
            if v.eq_ignore_ascii_case("true") {
                return Err(header_err(path, "big-endian payloads are not supported"));
            }
        }
    }
    if let Some(v) = kv.get("CompressedData") {
        if v.eq_ignore_ascii_case("true") {
            return Err(header_err(path, "compressed payloads are not supported"));
        }
    }
    let dims: Dims = parse_triplet(path, "DimSize", get("DimSize")?)?;
    let spacing: Spacing = match kv.get("ElementSpacing") {
        Some(v) => parse_triplet(path, "ElementSpacing", v)?,
        None => return Err(header_err(path, "missing key ElementSpacing")),
    };
    let et = get("ElementType")?;
    let element_type = ElementType::parse(et)
        .ok_or_else(|| header_err(path, format!("unsupported ElementType {et}")))?;
    let data = get("ElementDataFile")?;
    let data_file = if local {
        path.to_path_buf()
    } else {
        path.parent().unwrap_or(Path::new(".")).join(data)
    };
    Ok(Header {
        dims,
        spacing,
        element_type,
        data_file,
        local,
        header_len: offset,
    })
}

fn read_payload(path: &Path) -> Result<(Header, Vec<f64>)> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let header = parse_header(path, &bytes)?;
    let owned;
    let payload: &[u8] = if header.local {
        &bytes[header.header_len..]
    } else {
        owned = fs::read(&header.data_file).map_err(|e| Error::io(&header.data_file, e))?;
        &owned
    };
    let n = header.dims.iter().product::<usize>();
    let w = header.element_type.width();
    if payload.len() != n * w {
        return Err(Error::Format {
            path: header.data_file.clone(),
            msg: format!(
                "expected {n} elements ({} bytes), found {} bytes",
                n * w,
                payload.len()
            ),
        });
    }
    let values = payload
        .chunks_exact(w)
        .map(|c| match header.element_type {
            ElementType::UChar => c[0] as f64,
            ElementType::Short => i16::from_le_bytes([c[0], c[1]]) as f64,
            ElementType::Float => f32::from_le_bytes(c.try_into().unwrap()) as f64,
            ElementType::Double => f64::from_le_bytes(c.try_into().unwrap()),
        })
        .collect();
    Ok((header, values))
}

pub fn read_image<T: Real>(path: impl AsRef<Path>) -> Result<ImageVolume<T>> {
    let path = path.as_ref();
    let (h, values) = read_payload(path)?;
    ImageVolume::new(h.dims, h.spacing, values.into_iter().map(T::of).collect()).map_err(|e| {
        Error::Format {
            path: path.to_path_buf(),
            msg: e.to_string(),
        }
    })
}

/// Reads a mask; any voxel value `> 0` is foreground.
pub fn read_mask(path: impl AsRef<Path>) -> Result<RoiMask> {
    let path = path.as_ref();
    let (h, values) = read_payload(path)?;
    RoiMask::new(h.dims, h.spacing, values.into_iter().map(|v| v > 0.0).collect()).map_err(
        |e| match e {
            Error::EmptyMask => Error::Format {
                path: path.to_path_buf(),
                msg: "mask has no foreground voxels".into(),
            },
            other => other,
        },
    )
}

fn raw_path(header_path: &Path) -> PathBuf {
    header_path.with_extension("raw")
}

fn write_pair(
    path: &Path,
    dims: Dims,
    spacing: Spacing,
    et: ElementType,
    payload: Vec<u8>,
) -> Result<()> {
    let raw = raw_path(path);
    let raw_name = raw
        .file_name()
        .and_then(|s| s.to_str())
        .ok_or_else(|| Error::invalid(format!("bad output path {}", path.display())))?;
    let header = format!(
        "ObjectType = Image\nNDims = 3\nBinaryData = True\nBinaryDataByteOrderMSB = False\n\
         CompressedData = False\nDimSize = {} {} {}\nElementSpacing = {} {} {}\n\
         ElementType = {}\nElementDataFile = {}\n",
        dims[0],
        dims[1],
        dims[2],
        spacing[0],
        spacing[1],
        spacing[2],
        et.tag(),
        raw_name
    );
    fs::write(path, header).map_err(|e| Error::io(path, e))?;
    fs::write(&raw, payload).map_err(|e| Error::io(&raw, e))?;
    Ok(())
}

/// Writes `path` (header) and a sibling `.raw` payload.
///
/// Values are converted to `element_type`; integer types round to nearest
/// and saturate.
pub fn write_image<T: Real>(
    path: impl AsRef<Path>,
    image: &ImageVolume<T>,
    element_type: ElementType,
) -> Result<()> {
    let mut payload = Vec::with_capacity(image.voxels().len() * element_type.width());
    for &v in image.voxels() {
        let v = v.f64();
        match element_type {
            ElementType::UChar => payload.push(v.round().clamp(0.0, 255.0) as u8),
            ElementType::Short => payload.extend_from_slice(
                &(v.round().clamp(i16::MIN as f64, i16::MAX as f64) as i16).to_le_bytes(),
            ),
            ElementType::Float => payload.extend_from_slice(&(v as f32).to_le_bytes()),
            ElementType::Double => payload.extend_from_slice(&v.to_le_bytes()),
        }
    }
    write_pair(
        path.as_ref(),
        image.dims(),
        image.spacing(),
        element_type,
        payload,
    )
}

pub fn write_mask(path: impl AsRef<Path>, mask: &RoiMask) -> Result<()> {
    let payload = mask.voxels().iter().map(|&b| b as u8).collect();
    write_pair(
        path.as_ref(),
        mask.dims(),
        mask.spacing(),
        ElementType::UChar,
        payload,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write_raw(dir: &Path, header: &str, payload: &[u8]) -> PathBuf {
        let p = dir.join("img.mhd");
        fs::write(&p, header).unwrap();
        fs::write(dir.join("img.raw"), payload).unwrap();
        p
    }

    #[test]
    fn reads_small_float_volume() {
        let dir = tempfile::tempdir().unwrap();
        let payload: Vec<u8> = [0f32, 1.0, 2.0, 3.0]
            .iter()
            .flat_map(|v| v.to_le_bytes())
            .collect();
        let p = write_raw(
            dir.path(),
            "NDims = 3\nDimSize = 2 2 1\nElementSpacing = 1 1 1\nElementType = MET_FLOAT\nElementDataFile = img.raw\n",
            &payload,
        );
        let v: ImageVolume<f64> = read_image(&p).unwrap();
        assert_eq!(v.dims(), [2, 2, 1]);
        assert_eq!(v.voxels(), &[0.0, 1.0, 2.0, 3.0]);
        assert_eq!(v.get(1, 1, 0), 3.0);
    }

    #[test]
    fn element_count_mismatch_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        let p = write_raw(
            dir.path(),
            "NDims = 3\nDimSize = 2 2 2\nElementSpacing = 1 1 1\nElementType = MET_UCHAR\nElementDataFile = img.raw\n",
            &[0, 1, 2, 3],
        );
        assert!(matches!(read_image::<f64>(&p), Err(Error::Format { .. })));
    }

    #[test]
    fn missing_key_and_bad_type_are_errors() {
        let dir = tempfile::tempdir().unwrap();
        let p = write_raw(
            dir.path(),
            "NDims = 3\nElementSpacing = 1 1 1\nElementType = MET_UCHAR\nElementDataFile = img.raw\n",
            &[0],
        );
        assert!(matches!(read_image::<f64>(&p), Err(Error::Header { .. })));
        let p = write_raw(
            dir.path(),
            "NDims = 3\nDimSize = 1 1 1\nElementSpacing = 1 1 1\nElementType = MET_LONG\nElementDataFile = img.raw\n",
            &[0; 4],
        );
        assert!(matches!(read_image::<f64>(&p), Err(Error::Header { .. })));
    }

    #[test]
    fn round_trips_are_bit_identical() {
        let dir = tempfile::tempdir().unwrap();
        let vals: Vec<f64> = (0..24).map(|i| (i as f64 * 0.37).sin() * 1000.0).collect();
        let v = ImageVolume::new([2, 3, 4], [0.7, 0.7, 5.0], vals).unwrap();
        let p = dir.path().join("a.mhd");
        write_image(&p, &v, ElementType::Double).unwrap();
        assert_eq!(read_image::<f64>(&p).unwrap(), v);

        let short = v.map(|x| x.round());
        write_image(&p, &short, ElementType::Short).unwrap();
        assert_eq!(read_image::<f64>(&p).unwrap(), short);

        let single: ImageVolume<f32> = v.map(|x| x as f32);
        write_image(&p, &single, ElementType::Float).unwrap();
        assert_eq!(read_image::<f32>(&p).unwrap(), single);

        let m = RoiMask::from_fn([2, 3, 4], [0.7, 0.7, 5.0], |x, y, _| x == y).unwrap();
        let mp = dir.path().join("m.mhd");
        write_mask(&mp, &m).unwrap();
        assert_eq!(read_mask(&mp).unwrap(), m);
    }

    #[test]
    fn local_payload_is_supported() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("l.mhd");
        let mut bytes = b"NDims = 3\nDimSize = 1 1 2\nElementSpacing = 1 1 2\nElementType = MET_SHORT\nElementDataFile = LOCAL\n".to_vec();
        bytes.extend_from_slice(&(-1000i16).to_le_bytes());
        bytes.extend_from_slice(&(40i16).to_le_bytes());
        fs::write(&p, bytes).unwrap();
        let v: ImageVolume<f64> = read_image(&p).unwrap();
        assert_eq!(v.voxels(), &[-1000.0, 40.0]);
    }
}
